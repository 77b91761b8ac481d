//! Exact master-equation oracle on tiny lattices (at most 20 sites).
//!
//! The full state space `Ω_n = {0,1}^sites` is enumerated as bit patterns.
//! This module solves the forward equation `dp/dt = L* p` exactly (RK4 on
//! the dense probability vector), evaluates relative entropy, Dirichlet form
//! `𝒟(√f; μ)` and carré du champ `∫ Γ_n √f dμ`, verifies the two routes to
//! `L*_t 1 − (d/dt) log ψ_t`, Yau's inequality
//! `H'(t) ≤ −∫ Γ_n √f_t dμ_t + ∫ J_t f_t dμ_t`, and the integration-by-parts
//! identity with the exchange factor `s_{x,y} = η_x(1−η_y)/(u_x(1−u_y))`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::hydro::{discrete_generator, DensityField, DualField, HydroSolution};
use crate::lattice::Torus;
use crate::wasep::RateTable;

/// Hard cap on the number of sites (state space `2^20`).
pub const SITE_CAP: usize = 20;

fn check_size(torus: &Torus) -> Result<usize> {
    let sites = torus.sites();
    if sites > SITE_CAP {
        return Err(Error::StateSpaceTooLarge {
            sites,
            cap: SITE_CAP,
        });
    }
    Ok(sites)
}

/// Probability vector over the full configuration space, indexed by
/// occupancy-bits-as-integer.
#[derive(Debug, Clone)]
pub struct StateDistribution {
    torus: Torus,
    probs: Vec<f64>,
}

impl StateDistribution {
    pub fn new(torus: Torus, mut probs: Vec<f64>) -> Result<Self> {
        let sites = check_size(&torus)?;
        if probs.len() != 1 << sites {
            return Err(Error::invalid_input("probability vector length mismatch"));
        }
        let mut total = 0.0;
        for p in probs.iter_mut() {
            if *p < -1e-12 {
                return Err(Error::invalid_input(format!(
                    "negative probability {p} below -1e-12"
                )));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
            total += *p;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid_input(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(StateDistribution { torus, probs })
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn states(&self) -> usize {
        self.probs.len()
    }
}

/// `μ(η) = Π_x u_x^{η_x} (1−u_x)^{1−η_x}` over all configurations.
pub fn product_measure_vector(u: &DensityField) -> Result<StateDistribution> {
    let sites = check_size(u.torus())?;
    let mut probs = vec![0.0; 1 << sites];
    for (eta, slot) in probs.iter_mut().enumerate() {
        let mut p = 1.0;
        for (x, &ux) in u.values().iter().enumerate() {
            p *= if eta >> x & 1 == 1 { ux } else { 1.0 - ux };
        }
        *slot = p;
    }
    // Defensive renormalization is intentionally absent: products of values
    // in [0,1] sum to 1 up to roundoff, which the constructor tolerates.
    StateDistribution::new(*u.torus(), probs)
}

/// Transition enumeration for the exclusion chain on a tiny torus.
pub struct MasterSystem {
    torus: Torus,
    edges: Vec<(usize, usize, usize)>, // (x, y = x+b, b)
    rates: RateTable,
}

impl MasterSystem {
    pub fn new(rates: RateTable) -> Result<Self> {
        let torus = *rates.torus();
        check_size(&torus)?;
        let d = torus.dim();
        let mut edges = Vec::with_capacity(torus.sites() * d);
        for x in 0..torus.sites() {
            for b in 0..d {
                edges.push((x, torus.neighbor(x, b, true), b));
            }
        }
        Ok(MasterSystem {
            torus,
            edges,
            rates,
        })
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn rates(&self) -> &RateTable {
        &self.rates
    }

    /// Forward master equation right-hand side
    /// `(dp/dt)(η) = Σ_{η'} p(η') r(η'→η) − p(η) r(η→η')`.
    pub fn forward_rhs(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.len()];
        for (eta, &peta) in p.iter().enumerate() {
            if peta == 0.0 {
                continue;
            }
            for &(x, y, b) in &self.edges {
                let ex = eta >> x & 1;
                let ey = eta >> y & 1;
                if ex == ey {
                    continue;
                }
                let rate = if ex == 1 {
                    self.rates.forward(x, b)
                } else {
                    self.rates.backward(x, b)
                };
                let target = eta ^ (1 << x) ^ (1 << y);
                out[eta] -= rate * peta;
                out[target] += rate * peta;
            }
        }
        out
    }

    /// Generator: `L g(η) = Σ_{x~y} r(x,y) η_x (1−η_y) (g(η^{x,y}) − g(η))`.
    pub fn apply_generator(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        for eta in 0..g.len() {
            let mut acc = 0.0;
            for &(x, y, b) in &self.edges {
                let ex = eta >> x & 1;
                let ey = eta >> y & 1;
                if ex == ey {
                    continue;
                }
                let rate = if ex == 1 {
                    self.rates.forward(x, b)
                } else {
                    self.rates.backward(x, b)
                };
                let target = eta ^ (1 << x) ^ (1 << y);
                acc += rate * (g[target] - g[eta]);
            }
            out[eta] = acc;
        }
        out
    }

    /// Adjoint with respect to a product measure `μ`:
    /// `L*g(η) = Σ_{η'} ( r(η'→η) g(η') μ(η')/μ(η) − r(η→η') g(η) )`.
    pub fn apply_adjoint(&self, g: &[f64], mu: &StateDistribution) -> Vec<f64> {
        let mu = mu.probs();
        let mut out = vec![0.0; g.len()];
        for eta in 0..g.len() {
            let mut acc = 0.0;
            for &(x, y, b) in &self.edges {
                let ex = eta >> x & 1;
                let ey = eta >> y & 1;
                if ex == ey {
                    continue;
                }
                let target = eta ^ (1 << x) ^ (1 << y);
                // Outflow from η plus inflow from η^{x,y} (reverse jump).
                let (out_rate, in_rate) = if ex == 1 {
                    (self.rates.forward(x, b), self.rates.backward(x, b))
                } else {
                    (self.rates.backward(x, b), self.rates.forward(x, b))
                };
                acc -= out_rate * g[eta];
                acc += in_rate * g[target] * mu[target] / mu[eta];
            }
            out[eta] = acc;
        }
        out
    }

    /// Largest total exit rate over configurations (bounds the stiff scale).
    pub fn max_exit_rate(&self) -> f64 {
        let states = 1usize << self.torus.sites();
        let mut best = 0.0f64;
        for eta in 0..states {
            let mut total = 0.0;
            for &(x, y, b) in &self.edges {
                let ex = eta >> x & 1;
                let ey = eta >> y & 1;
                if ex == ey {
                    continue;
                }
                total += if ex == 1 {
                    self.rates.forward(x, b)
                } else {
                    self.rates.backward(x, b)
                };
            }
            best = best.max(total);
        }
        best
    }
}

/// Solve `dp/dt = L* p` over the full state space with RK4 and
/// `dt = 0.1 / max exit rate`, storing the distribution at `store_times`
/// (sorted, within `[0, T]`).
pub fn forward_solve(
    p0: &StateDistribution,
    system: &MasterSystem,
    t_final: f64,
    store_times: &[f64],
) -> Result<Vec<(f64, StateDistribution)>> {
    if store_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid_input("store times must be sorted"));
    }
    // Max row sum of |L*| is twice the largest exit rate (diagonal plus
    // off-diagonal mass).
    let dt_cap = 0.1 / (2.0 * system.max_exit_rate()).max(1.0);
    let mut p = p0.probs().to_vec();
    let mut out = Vec::with_capacity(store_times.len());
    let mut t = 0.0f64;
    let mut pending = store_times.iter().copied().peekable();
    while let Some(&target) = pending.peek() {
        if target > t_final + 1e-12 {
            return Err(Error::invalid_input("store time beyond T"));
        }
        // Integrate up to the next requested time.
        while t < target - 1e-15 {
            let dt = dt_cap.min(target - t);
            let k1 = system.forward_rhs(&p);
            let p2: Vec<f64> = p.iter().zip(&k1).map(|(a, k)| a + 0.5 * dt * k).collect();
            let k2 = system.forward_rhs(&p2);
            let p3: Vec<f64> = p.iter().zip(&k2).map(|(a, k)| a + 0.5 * dt * k).collect();
            let k3 = system.forward_rhs(&p3);
            let p4: Vec<f64> = p.iter().zip(&k3).map(|(a, k)| a + dt * k).collect();
            let k4 = system.forward_rhs(&p4);
            for (i, v) in p.iter_mut().enumerate() {
                *v += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += dt;
        }
        out.push((target, StateDistribution::new(*p0.torus(), p.clone())?));
        pending.next();
    }
    Ok(out)
}

/// `H(p | μ) = Σ p log(p/μ)` with `0 log 0 = 0`; `μ` must be strictly
/// positive.
pub fn relative_entropy(p: &StateDistribution, mu: &StateDistribution) -> Result<f64> {
    if mu.probs().iter().any(|&m| m <= 0.0) {
        return Err(Error::invalid_input(
            "reference measure must be strictly positive",
        ));
    }
    let mut h = 0.0;
    for (pi, mi) in p.probs().iter().zip(mu.probs()) {
        if *pi > 0.0 {
            h += pi * (pi / mi).ln();
        }
    }
    Ok(h)
}

/// Dirichlet form `𝒟(√f; μ) = Σ_{x,b} ∫ (∇_{x,x+b} √f)² dμ` and carré du
/// champ integral `∫ Γ_n √f dμ`; the caller receives both and the bound
/// `∫ Γ_n √f dμ ≥ (n²/2) 𝒟` is asserted.
pub fn dirichlet_and_carre(
    f: &[f64],
    mu: &StateDistribution,
    system: &MasterSystem,
) -> Result<(f64, f64)> {
    let states = mu.states();
    if f.len() != states {
        return Err(Error::invalid_input("density length mismatch"));
    }
    if f.iter().any(|&v| v < 0.0) {
        return Err(Error::invalid_input("density must be nonnegative"));
    }
    let total: f64 = f.iter().zip(mu.probs()).map(|(a, m)| a * m).sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::invalid_input(format!(
            "f is not a density: ∫ f dμ = {total}"
        )));
    }
    let sqrt_f: Vec<f64> = f.iter().map(|v| v.sqrt()).collect();
    let mut dirichlet = 0.0;
    let mut carre = 0.0;
    for (eta, &m) in mu.probs().iter().enumerate() {
        for &(x, y, b) in &system.edges {
            let ex = eta >> x & 1;
            let ey = eta >> y & 1;
            if ex == ey {
                continue;
            }
            let target = eta ^ (1 << x) ^ (1 << y);
            let grad = sqrt_f[target] - sqrt_f[eta];
            let grad2 = grad * grad;
            dirichlet += m * grad2;
            let rate = if ex == 1 {
                system.rates.forward(x, b)
            } else {
                system.rates.backward(x, b)
            };
            carre += m * rate * grad2;
        }
    }
    let n2 = (system.torus.side() as f64).powi(2);
    if carre < 0.5 * n2 * dirichlet - 1e-9 * (1.0 + carre.abs()) {
        return Err(Error::invalid_input(format!(
            "carré du champ bound violated: {carre} < n²/2 · {dirichlet}"
        )));
    }
    Ok((dirichlet, carre))
}

fn omega(eta: usize, x: usize, u: &[f64]) -> f64 {
    let e = (eta >> x & 1) as f64;
    (e - u[x]) / (u[x] * (1.0 - u[x]))
}

/// Evaluation route for `J_t = L*_t 1 − (d/dt) log ψ_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjointMode {
    /// Direct adjoint sum over configurations.
    Brute,
    /// `Σ_x ω_x (ℒ^n − d/dt) u_x + Σ_{x,b} ω_x ω_{x+b} G^n_{x,b}` with
    /// `G^n_{x,b} = n(u_{x+b}−u_x) F_b^n(x)(u_x+u_{x+b}−2u_x u_{x+b})
    ///  − n²(u_{x+b}−u_x)²`.
    Closed,
}

/// `J_t` as a function on configurations, by either route. `u_dot` is the
/// time derivative of the profile (for the semi-discrete flow, `ℒ^n u`).
pub fn adjoint_one(
    u: &DensityField,
    dual: &DualField,
    u_dot: &[f64],
    system: &MasterSystem,
    mode: AdjointMode,
) -> Result<Vec<f64>> {
    let sites = check_size(u.torus())?;
    let torus = *u.torus();
    let n = torus.side() as f64;
    let states = 1usize << sites;
    let uv = u.values();
    match mode {
        AdjointMode::Brute => {
            let mu = product_measure_vector(u)?;
            let lstar_one = system.apply_adjoint(&vec![1.0; states], &mu);
            let mut out = lstar_one;
            for (eta, slot) in out.iter_mut().enumerate() {
                let dlog: f64 = (0..sites).map(|x| omega(eta, x, uv) * u_dot[x]).sum();
                *slot -= dlog;
            }
            Ok(out)
        }
        AdjointMode::Closed => {
            let gen_u = discrete_generator(uv, dual, &torus);
            let mut g = vec![0.0; sites * torus.dim()];
            for x in 0..sites {
                for b in 0..torus.dim() {
                    let y = torus.neighbor(x, b, true);
                    let du = uv[y] - uv[x];
                    g[x * torus.dim() + b] =
                        n * du * dual.get(x, b) * (uv[x] + uv[y] - 2.0 * uv[x] * uv[y])
                            - n * n * du * du;
                }
            }
            let mut out = vec![0.0; states];
            for (eta, slot) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for x in 0..sites {
                    acc += omega(eta, x, uv) * (gen_u[x] - u_dot[x]);
                    for b in 0..torus.dim() {
                        let y = torus.neighbor(x, b, true);
                        acc += omega(eta, x, uv) * omega(eta, y, uv) * g[x * torus.dim() + b];
                    }
                }
                *slot = acc;
            }
            Ok(out)
        }
    }
}

/// Per-time entropy data along an exact solve: `H_n(t)`, the carré du champ
/// integral, the correction `∫ J_t f_t dμ_t`, and the Yau slack
/// `H'(t) − (−∫Γ_n √f_t dμ_t + ∫ J_t f_t dμ_t)` (centered differences for
/// `H'`; NaN at the grid ends).
#[derive(Debug, Clone)]
pub struct EntropyReport {
    pub times: Vec<f64>,
    pub entropy: Vec<f64>,
    pub dirichlet: Vec<f64>,
    pub correction: Vec<f64>,
    pub slack: Vec<f64>,
}

impl EntropyReport {
    pub fn max_entropy(&self) -> f64 {
        self.entropy.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_slack(&self) -> f64 {
        self.slack
            .iter()
            .filter(|s| s.is_finite())
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV rows `(t, H, dirichlet, correction, slack)`.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,H,dirichlet,correction,slack")?;
        for i in 0..self.times.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                self.times[i],
                self.entropy[i],
                self.dirichlet[i],
                self.correction[i],
                self.slack[i]
            )?;
        }
        Ok(())
    }
}

/// Exact entropy trajectory against the hydrodynamic reference measures,
/// with Yau-inequality slack at every interior grid time.
///
/// Starts from `p_0 = μ_0` (the product measure of the initial profile).
pub fn yau_check(
    sol: &HydroSolution,
    system: &MasterSystem,
    t_final: f64,
    grid_points: usize,
) -> Result<EntropyReport> {
    let torus = *sol.torus();
    check_size(&torus)?;
    let times: Vec<f64> = (0..=grid_points)
        .map(|i| t_final * i as f64 / grid_points as f64)
        .collect();
    let u0 = DensityField::new(torus, sol.at(0.0))?;
    let mu0 = product_measure_vector(&u0)?;
    let path = forward_solve(&mu0, system, t_final, &times)?;

    let mut entropy = Vec::with_capacity(times.len());
    let mut dirichlet = Vec::with_capacity(times.len());
    let mut correction = Vec::with_capacity(times.len());
    for (t, p) in &path {
        let u = DensityField::new(torus, sol.at(*t))?;
        let mu = product_measure_vector(&u)?;
        entropy.push(relative_entropy(p, &mu)?);
        let f: Vec<f64> = p
            .probs()
            .iter()
            .zip(mu.probs())
            .map(|(pi, mi)| pi / mi)
            .collect();
        let (_, carre) = dirichlet_and_carre(&f, &mu, system)?;
        dirichlet.push(carre);
        let u_dot = sol.time_derivative(*t);
        let j = adjoint_one(&u, sol.dual(), &u_dot, system, AdjointMode::Closed)?;
        let corr: f64 = j.iter().zip(p.probs()).map(|(ji, pi)| ji * pi).sum();
        correction.push(corr);
    }
    let mut slack = vec![f64::NAN; times.len()];
    for i in 1..times.len() - 1 {
        let hprime = (entropy[i + 1] - entropy[i - 1]) / (times[i + 1] - times[i - 1]);
        slack[i] = hprime - (-dirichlet[i] + correction[i]);
    }
    Ok(EntropyReport {
        times,
        entropy,
        dirichlet,
        correction,
        slack,
    })
}

/// Residual of the integration-by-parts identity for a pair `x ≠ y` and a
/// function `h` with `∇_{x,y} h ≡ 0`:
/// `∫h(ω_y−ω_x) f dμ − ∫h s_{x,y} ∇_{x,y} f dμ + (u_y−u_x) ∫h ω_x ω_y f dμ`.
pub fn ibp_check(h: &[f64], f: &[f64], x: usize, y: usize, u: &DensityField) -> Result<f64> {
    let sites = check_size(u.torus())?;
    let states = 1usize << sites;
    if h.len() != states || f.len() != states {
        return Err(Error::invalid_input("state-function length mismatch"));
    }
    let uv = u.values();
    let mu = product_measure_vector(u)?;
    // Hypothesis ∇_{x,y} h = 0.
    for eta in 0..states {
        let swapped = swap_bits(eta, x, y);
        if (h[eta] - h[swapped]).abs() > 0.0 {
            return Err(Error::invalid_input(
                "h must be invariant under the (x,y) exchange",
            ));
        }
    }
    let mut lhs = 0.0;
    let mut grad_term = 0.0;
    let mut corr_term = 0.0;
    for (eta, &m) in mu.probs().iter().enumerate() {
        let w = h[eta] * f[eta] * m;
        lhs += w * (omega(eta, y, uv) - omega(eta, x, uv));
        let s = ((eta >> x & 1) as f64) * (1.0 - (eta >> y & 1) as f64) / (uv[x] * (1.0 - uv[y]));
        let swapped = swap_bits(eta, x, y);
        grad_term += h[eta] * s * (f[swapped] - f[eta]) * m;
        corr_term += w * omega(eta, x, uv) * omega(eta, y, uv);
    }
    Ok((lhs - grad_term + (uv[y] - uv[x]) * corr_term).abs())
}

fn swap_bits(eta: usize, x: usize, y: usize) -> usize {
    let ex = eta >> x & 1;
    let ey = eta >> y & 1;
    if ex == ey {
        eta
    } else {
        eta ^ (1 << x) ^ (1 << y)
    }
}
