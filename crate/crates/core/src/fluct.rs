//! Density fluctuation field, Sobolev norms, the martingale decomposition
//! and the limiting noise variance.
//!
//! The fluctuation field is `X_t^n(f) = n^{-d/2} Σ_x (η_x(t) − u_x(t))
//! f(x/n)`. Along a simulated path it decomposes as
//!
//! ```text
//! X_t(H_t) = X_0(H_0) + ℛ_t + 𝒜_t + 𝒬_t + M_t,
//! ℛ_t = ∫ n^{-d/2} Σ_x H_s(x/n) (ℒ^n − d/ds) u_x ds,
//! 𝒜_t = ∫ X_s((∂_s + Λ_s^n) H_s) ds,
//! 𝒬_t = −∫ n^{-d/2} Σ_{x,b} 2n (H_s((x+b)/n) − H_s(x/n)) F_b^n(x)
//!        (η_x − u_x)(η_{x+b} − u_{x+b}) ds,
//! ```
//!
//! and `M_t` (the residual of the identity) is a martingale of quadratic
//! variation
//!
//! ```text
//! ⟨M_t⟩ = ∫ n^{-d} Σ_{x,b} ( r_n(x,x+b) η_x (1−η_{x+b})
//!        + r_n(x+b,x) η_{x+b}(1−η_x) ) (H_s((x+b)/n) − H_s(x/n))² ds.
//! ```
//!
//! The sign of `𝒬` follows the expansion of `L_n X_s(H)` in centered
//! variables (the `−2 η̄_x η̄_{x+b}` term of
//! `η_x + η_{x+b} − 2η_x η_{x+b}`), which is what makes `M` a genuine
//! martingale; this is checked statistically by the acceptance suite.

use num::Complex;

use crate::error::{Error, Result};
use crate::hydro::{discrete_generator, lambda_n, BackwardSolution, HydroSolution};
use crate::lattice::Torus;
use crate::wasep::{Configuration, RateTable, Trajectory};

const TAU: f64 = std::f64::consts::TAU;

/// Complex coefficients on the modes `‖m‖_∞ ≤ M`.
#[derive(Debug, Clone)]
pub struct FourierField {
    d: usize,
    cutoff: i64,
    coeffs: Vec<Complex<f64>>,
}

impl FourierField {
    pub fn zero(d: usize, cutoff: usize) -> Self {
        let side = 2 * cutoff + 1;
        FourierField {
            d,
            cutoff: cutoff as i64,
            coeffs: vec![Complex::new(0.0, 0.0); side.pow(d as u32)],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff as usize
    }

    fn index(&self, m: &[i64]) -> usize {
        let side = (2 * self.cutoff + 1) as usize;
        let mut idx = 0usize;
        for i in 0..self.d {
            debug_assert!(m[i].abs() <= self.cutoff);
            idx = idx * side + (m[i] + self.cutoff) as usize;
        }
        idx
    }

    pub fn get(&self, m: &[i64]) -> Complex<f64> {
        self.coeffs[self.index(m)]
    }

    pub fn set(&mut self, m: &[i64], v: Complex<f64>) {
        let idx = self.index(m);
        self.coeffs[idx] = v;
    }

    /// All modes `‖m‖_∞ ≤ M` in lexicographic order.
    pub fn modes(&self) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        let mut m = vec![-self.cutoff; self.d];
        loop {
            out.push(m.clone());
            let mut i = self.d;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                m[i] += 1;
                if m[i] <= self.cutoff {
                    break;
                }
                m[i] = -self.cutoff;
            }
        }
    }

    /// Max deviation from the conjugate symmetry `ĉ(−m) = conj ĉ(m)` of
    /// real-valued fields.
    pub fn conjugate_asymmetry(&self) -> f64 {
        self.modes()
            .iter()
            .map(|m| {
                let neg: Vec<i64> = m.iter().map(|&x| -x).collect();
                (self.get(&neg) - self.get(m).conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// CSV rows `(m1,m2,m3,re,im)` over all modes.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "m1,m2,m3,re,im")?;
        for m in self.modes() {
            let mut padded = [0i64; 3];
            padded[..self.d].copy_from_slice(&m);
            let c = self.get(&m);
            writeln!(
                w,
                "{},{},{},{},{}",
                padded[0], padded[1], padded[2], c.re, c.im
            )?;
        }
        Ok(())
    }
}

/// `X(f) = n^{-d/2} Σ_x (η_x − u_x) f_x` for a lattice-sampled test
/// function.
pub fn fluctuation_field(eta: &Configuration, u: &[f64], f: &[f64]) -> f64 {
    let torus = eta.torus();
    let norm = (torus.sites() as f64).sqrt();
    let mut acc = 0.0;
    for x in 0..torus.sites() {
        acc += ((eta.occupied(x) as u8 as f64) - u[x]) * f[x];
    }
    acc / norm
}

/// `X(φ_m)` for all `‖m‖_∞ ≤ cutoff`, `φ_m(y) = e^{2πi m·y}` sampled at
/// `y = x/n`.
pub fn fluctuation_modes(eta: &Configuration, u: &[f64], cutoff: usize) -> FourierField {
    let torus = *eta.torus();
    let d = torus.dim();
    let mut field = FourierField::zero(d, cutoff);
    let norm = (torus.sites() as f64).sqrt();
    for m in field.modes() {
        let mut acc = Complex::new(0.0, 0.0);
        for x in 0..torus.sites() {
            let pos = torus.embed(x);
            let phase: f64 = (0..d).map(|i| m[i] as f64 * pos[i]).sum::<f64>() * TAU;
            let eta_bar = (eta.occupied(x) as u8 as f64) - u[x];
            acc += Complex::from_polar(eta_bar, phase);
        }
        field.set(&m, acc / norm);
    }
    field
}

/// Truncated Sobolev norm `(Σ_{‖m‖_∞ ≤ M} |ĉ(m)|² (1+|m|²)^k)^{1/2}`.
pub fn sobolev_norm(field: &FourierField, k: f64) -> f64 {
    field
        .modes()
        .iter()
        .map(|m| {
            let m2: f64 = m.iter().map(|&x| (x * x) as f64).sum();
            field.get(m).norm_sqr() * (1.0 + m2).powf(k)
        })
        .sum::<f64>()
        .sqrt()
}

/// Time-dependent test function along the decomposition window.
pub enum TestFunctionPath {
    /// Time-independent lattice samples; `∂_s H = 0`.
    Static(Vec<f64>),
    /// Backward-semigroup path `H_s = P_{s,t} f`, for which
    /// `(∂_s + Λ_s) H_s = 0` by construction.
    Backward(BackwardSolution),
}

impl TestFunctionPath {
    pub fn value(&self, s: f64) -> Vec<f64> {
        match self {
            TestFunctionPath::Static(h) => h.clone(),
            TestFunctionPath::Backward(path) => {
                let times = &path.times;
                match times.binary_search_by(|p| p.partial_cmp(&s).unwrap()) {
                    Ok(i) => path.states[i].clone(),
                    Err(0) => path.states[0].clone(),
                    Err(i) if i == times.len() => path.states.last().unwrap().clone(),
                    Err(i) => {
                        let w = (s - times[i - 1]) / (times[i] - times[i - 1]);
                        path.states[i - 1]
                            .iter()
                            .zip(&path.states[i])
                            .map(|(a, b)| a * (1.0 - w) + b * w)
                            .collect()
                    }
                }
            }
        }
    }

    /// `(∂_s + Λ_s^n) H_s` on the lattice.
    pub fn drift_term(&self, s: f64, sol: &HydroSolution) -> Vec<f64> {
        match self {
            TestFunctionPath::Static(h) => lambda_n(h, &sol.at(s), sol.dual(), sol.torus()),
            TestFunctionPath::Backward(_) => vec![0.0; sol.torus().sites()],
        }
    }
}

/// Running values of the decomposition at requested report times.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub times: Vec<f64>,
    /// `X_t(H_t)`.
    pub x: Vec<f64>,
    /// `X_0(H_0)`.
    pub x0: f64,
    pub r: Vec<f64>,
    pub a: Vec<f64>,
    pub q: Vec<f64>,
    /// Martingale part, the residual of the identity.
    pub m: Vec<f64>,
    /// Running quadratic variation `⟨M⟩_t`.
    pub qv: Vec<f64>,
    /// Largest single jump of `X(H)` along the path.
    pub max_jump: f64,
}

impl DecompositionReport {
    /// CSV rows `(t, X, X0term, R, A, Q, M, QV)`.
    pub fn write_csv(&self, mut w: impl std::io::Write) -> Result<()> {
        writeln!(w, "t,X,X0term,R,A,Q,M,QV")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                self.times[i],
                self.x[i],
                self.x0,
                self.r[i],
                self.a[i],
                self.q[i],
                self.m[i],
                self.qv[i]
            )?;
        }
        Ok(())
    }
}

struct EdgeCoeffs {
    /// `2n ΔH F` per (site, dir) — the 𝒬 integrand coefficients.
    q_coeff: Vec<f64>,
    /// `ΔH²` per (site, dir), for ⟨M⟩.
    dh2: Vec<f64>,
    /// `ΛH` per site (equilibrium: time-independent).
    lambda_h: Vec<f64>,
    /// Max `|ΔH|` over edges.
    max_dh: f64,
}

fn edge_coeffs(h: &[f64], sol: &HydroSolution, torus: &Torus) -> EdgeCoeffs {
    let d = torus.dim();
    let n = torus.side() as f64;
    let u = sol.at(0.0);
    let dual = sol.dual();
    let mut q_coeff = vec![0.0; torus.sites() * d];
    let mut dh2 = vec![0.0; torus.sites() * d];
    let mut max_dh = 0.0f64;
    for x in 0..torus.sites() {
        for b in 0..d {
            let xp = torus.neighbor(x, b, true);
            let dh = h[xp] - h[x];
            q_coeff[x * d + b] = 2.0 * n * dh * dual.get(x, b);
            dh2[x * d + b] = dh * dh;
            max_dh = max_dh.max(dh.abs());
        }
    }
    let lambda_h = lambda_n(h, &u, dual, torus);
    EdgeCoeffs {
        q_coeff,
        dh2,
        lambda_h,
        max_dh,
    }
}

/// Exact path decomposition in the time-stationary setting (`u` constant in
/// time, `H` static): all integrands are piecewise constant between jumps,
/// so the time integrals are exact and `M` is the exactly sampled Dynkin
/// martingale.
pub fn decompose(
    traj: &Trajectory,
    h: &[f64],
    sol: &HydroSolution,
    rates: &RateTable,
    report_times: &[f64],
) -> Result<DecompositionReport> {
    let torus = *traj.initial.torus();
    let d = torus.dim();
    let events = traj
        .events
        .as_ref()
        .ok_or_else(|| Error::invalid_input("decompose requires retained events"))?;
    // Stationarity of the reference trajectory.
    let u = sol.at(0.0);
    for state in sol.states() {
        let dev = state
            .iter()
            .zip(&u)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if dev > 1e-12 {
            return Err(Error::invalid_input(
                "decompose requires a time-constant profile; use decompose_from_snapshots",
            ));
        }
    }
    if report_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid_input("report times must be sorted"));
    }

    let coeffs = edge_coeffs(h, sol, &torus);
    let norm = (torus.sites() as f64).sqrt();
    let nd = torus.sites() as f64;

    let mut eta = traj.initial.clone();
    // Running η-dependent sums.
    let mut sum_x = 0.0; // Σ η̄_x H_x
    let mut sum_a = 0.0; // Σ η̄_x (ΛH)_x
    let mut sum_q = 0.0; // Σ_{x,b} q_coeff η̄_x η̄_{x+b}
    let mut sum_qv = 0.0; // Σ_{x,b} rate pair · ΔH²
    for x in 0..torus.sites() {
        let e = (eta.occupied(x) as u8 as f64) - u[x];
        sum_x += e * h[x];
        sum_a += e * coeffs.lambda_h[x];
        for b in 0..d {
            let xp = torus.neighbor(x, b, true);
            let ep = (eta.occupied(xp) as u8 as f64) - u[xp];
            sum_q += coeffs.q_coeff[x * d + b] * e * ep;
            let ex = eta.occupied(x) as u8 as f64;
            let exp_ = eta.occupied(xp) as u8 as f64;
            sum_qv += (rates.forward(x, b) * ex * (1.0 - exp_)
                + rates.backward(x, b) * exp_ * (1.0 - ex))
                * coeffs.dh2[x * d + b];
        }
    }
    let x0 = sum_x / norm;

    let mut int_a = 0.0;
    let mut int_q = 0.0;
    let mut int_qv = 0.0;
    let mut t_prev = 0.0;
    let mut max_jump = 0.0f64;

    let mut out = DecompositionReport {
        times: report_times.to_vec(),
        x: Vec::with_capacity(report_times.len()),
        x0,
        r: vec![0.0; report_times.len()],
        a: Vec::with_capacity(report_times.len()),
        q: Vec::with_capacity(report_times.len()),
        m: Vec::with_capacity(report_times.len()),
        qv: Vec::with_capacity(report_times.len()),
        max_jump: 0.0,
    };
    let mut next_report = 0usize;
    let record = |t_target: f64,
                  int_a: f64,
                  int_q: f64,
                  int_qv: f64,
                  sum_x: f64,
                  sum_a: f64,
                  sum_q: f64,
                  sum_qv: f64,
                  t_prev: f64,
                  out: &mut DecompositionReport| {
        let gap = t_target - t_prev;
        let a_val = int_a + gap * sum_a / norm;
        let q_val = int_q - gap * sum_q / norm;
        let qv_val = int_qv + gap * sum_qv / nd;
        let x_val = sum_x / norm;
        out.x.push(x_val);
        out.a.push(a_val);
        out.q.push(q_val);
        out.qv.push(qv_val);
        out.m.push(x_val - out.x0 - a_val - q_val);
    };

    for ev in events {
        while next_report < report_times.len() && report_times[next_report] <= ev.time {
            record(
                report_times[next_report],
                int_a,
                int_q,
                int_qv,
                sum_x,
                sum_a,
                sum_q,
                sum_qv,
                t_prev,
                &mut out,
            );
            next_report += 1;
        }
        let gap = ev.time - t_prev;
        int_a += gap * sum_a / norm;
        int_q -= gap * sum_q / norm;
        int_qv += gap * sum_qv / nd;
        t_prev = ev.time;

        // Apply the jump incrementally: only edges touching `from`/`to`
        // change.
        let (from, to) = (ev.from, ev.to);
        let affected = affected_edges(&torus, from, to);
        let mut before_q = 0.0;
        let mut before_qv = 0.0;
        for &(x, b) in &affected {
            let xp = torus.neighbor(x, b, true);
            let e = (eta.occupied(x) as u8 as f64) - u[x];
            let ep = (eta.occupied(xp) as u8 as f64) - u[xp];
            before_q += coeffs.q_coeff[x * d + b] * e * ep;
            let ex = eta.occupied(x) as u8 as f64;
            let exp_ = eta.occupied(xp) as u8 as f64;
            before_qv += (rates.forward(x, b) * ex * (1.0 - exp_)
                + rates.backward(x, b) * exp_ * (1.0 - ex))
                * coeffs.dh2[x * d + b];
        }
        eta.set(from, false);
        eta.set(to, true);
        let mut after_q = 0.0;
        let mut after_qv = 0.0;
        for &(x, b) in &affected {
            let xp = torus.neighbor(x, b, true);
            let e = (eta.occupied(x) as u8 as f64) - u[x];
            let ep = (eta.occupied(xp) as u8 as f64) - u[xp];
            after_q += coeffs.q_coeff[x * d + b] * e * ep;
            let ex = eta.occupied(x) as u8 as f64;
            let exp_ = eta.occupied(xp) as u8 as f64;
            after_qv += (rates.forward(x, b) * ex * (1.0 - exp_)
                + rates.backward(x, b) * exp_ * (1.0 - ex))
                * coeffs.dh2[x * d + b];
        }
        sum_q += after_q - before_q;
        sum_qv += after_qv - before_qv;
        sum_x += h[to] - h[from];
        sum_a += coeffs.lambda_h[to] - coeffs.lambda_h[from];

        let jump = (h[to] - h[from]).abs() / norm;
        max_jump = max_jump.max(jump);
        // One particle moves one lattice step per jump.
        debug_assert!(jump <= coeffs.max_dh / norm + 1e-15);
    }
    while next_report < report_times.len() {
        record(
            report_times[next_report],
            int_a,
            int_q,
            int_qv,
            sum_x,
            sum_a,
            sum_q,
            sum_qv,
            t_prev,
            &mut out,
        );
        next_report += 1;
    }
    out.max_jump = max_jump;
    Ok(out)
}

fn affected_edges(torus: &Torus, from: usize, to: usize) -> Vec<(usize, usize)> {
    let d = torus.dim();
    let mut edges = Vec::with_capacity(4 * d);
    for &site in &[from, to] {
        for b in 0..d {
            edges.push((site, b));
            edges.push((torus.neighbor(site, b, false), b));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// `⟨M_t(H)⟩` along the path (running values at `report_times`); thin
/// wrapper over the decomposition walker.
pub fn quadratic_variation(
    traj: &Trajectory,
    h: &[f64],
    sol: &HydroSolution,
    rates: &RateTable,
    report_times: &[f64],
) -> Result<Vec<f64>> {
    Ok(decompose(traj, h, sol, rates, report_times)?.qv)
}

/// General-profile decomposition from snapshots: trapezoid quadrature on the
/// snapshot grid (documented `O(Δt²)` bias), no event list required.
pub fn decompose_from_snapshots(
    traj: &Trajectory,
    h_path: &TestFunctionPath,
    sol: &HydroSolution,
    rates: &RateTable,
) -> Result<DecompositionReport> {
    if traj.snapshots.is_empty() {
        return Err(Error::invalid_input("no snapshots to integrate over"));
    }
    let torus = *traj.initial.torus();
    let d = torus.dim();
    let norm = (torus.sites() as f64).sqrt();
    let nd = torus.sites() as f64;
    let n = torus.side() as f64;
    let dual = sol.dual();

    let integrands = |t: f64, eta: &Configuration| -> (f64, f64, f64, f64, f64) {
        let u = sol.at(t);
        let u_dot = sol.time_derivative(t);
        let gen_u = discrete_generator(&u, dual, &torus);
        let h = h_path.value(t);
        let drift = h_path.drift_term(t, sol);
        let mut x_val = 0.0;
        let mut r_int = 0.0;
        let mut a_int = 0.0;
        let mut q_int = 0.0;
        let mut qv_int = 0.0;
        for x in 0..torus.sites() {
            let e = (eta.occupied(x) as u8 as f64) - u[x];
            x_val += e * h[x];
            r_int += h[x] * (gen_u[x] - u_dot[x]);
            a_int += e * drift[x];
            for b in 0..d {
                let xp = torus.neighbor(x, b, true);
                let ep = (eta.occupied(xp) as u8 as f64) - u[xp];
                let dh = h[xp] - h[x];
                q_int -= 2.0 * n * dh * dual.get(x, b) * e * ep;
                let ex = eta.occupied(x) as u8 as f64;
                let exp_ = eta.occupied(xp) as u8 as f64;
                qv_int += (rates.forward(x, b) * ex * (1.0 - exp_)
                    + rates.backward(x, b) * exp_ * (1.0 - ex))
                    * dh
                    * dh;
            }
        }
        (
            x_val / norm,
            r_int / norm,
            a_int / norm,
            q_int / norm,
            qv_int / nd,
        )
    };

    let times: Vec<f64> = traj.snapshots.iter().map(|(t, _)| *t).collect();
    let mut x = Vec::with_capacity(times.len());
    let mut r = Vec::with_capacity(times.len());
    let mut a = Vec::with_capacity(times.len());
    let mut q = Vec::with_capacity(times.len());
    let mut qv = Vec::with_capacity(times.len());
    let mut prev: Option<(f64, (f64, f64, f64, f64, f64))> = None;
    let (mut ir, mut ia, mut iq, mut iqv) = (0.0, 0.0, 0.0, 0.0);
    for (t, eta) in &traj.snapshots {
        let vals = integrands(*t, eta);
        if let Some((tp, p)) = prev {
            let gap = t - tp;
            ir += 0.5 * gap * (p.1 + vals.1);
            ia += 0.5 * gap * (p.2 + vals.2);
            iq += 0.5 * gap * (p.3 + vals.3);
            iqv += 0.5 * gap * (p.4 + vals.4);
        }
        x.push(vals.0);
        r.push(ir);
        a.push(ia);
        q.push(iq);
        qv.push(iqv);
        prev = Some((*t, vals));
    }
    let x0 = x[0];
    let m = (0..times.len())
        .map(|i| x[i] - x0 - r[i] - a[i] - q[i])
        .collect();
    Ok(DecompositionReport {
        times,
        x,
        x0,
        r,
        a,
        q,
        m,
        qv,
        max_jump: f64::NAN,
    })
}

/// Limiting noise variance of the mild solution:
/// `∫_0^t ∫ 2 u(s,x)(1−u(s,x)) ‖∇ P_{s,t} f(x)‖² dx ds`,
/// with the backward semigroup discretized on the lattice and trapezoid
/// quadrature in `s`.
pub fn limit_variance(f: &[f64], sol: &HydroSolution, t: f64) -> Result<f64> {
    let torus = *sol.torus();
    let d = torus.dim();
    let n = torus.side() as f64;
    let nd = torus.sites() as f64;
    let path = crate::hydro::backward_sweep(f, 0.0, t, sol)?;
    let integrand = |s: f64, v: &[f64]| -> f64 {
        let u = sol.at(s);
        let mut acc = 0.0;
        for x in 0..torus.sites() {
            let mut grad2 = 0.0;
            for b in 0..d {
                let xp = torus.neighbor(x, b, true);
                let g = n * (v[xp] - v[x]);
                grad2 += g * g;
            }
            acc += 2.0 * u[x] * (1.0 - u[x]) * grad2;
        }
        acc / nd
    };
    let mut total = 0.0;
    for i in 1..path.times.len() {
        let (s0, s1) = (path.times[i - 1], path.times[i]);
        let f0 = integrand(s0, &path.states[i - 1]);
        let f1 = integrand(s1, &path.states[i]);
        total += 0.5 * (s1 - s0) * (f0 + f1);
    }
    Ok(total)
}
