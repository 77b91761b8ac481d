//! Deterministic PDE layer.
//!
//! The hydrodynamic equation `∂_t u = Δu − 2∇·(u(1−u)F)` is discretized by
//! the operator `ℒ^n` acting on lattice fields,
//!
//! ```text
//! ℒ^n u_x = Σ_b n²(u_{x+b} + u_{x-b} − 2u_x)
//!         − Σ_b n ( F_b^n(x)   (u_x + u_{x+b} − 2 u_x u_{x+b})
//!                 − F_b^n(x-b) (u_{x-b} + u_x − 2 u_{x-b} u_x) ),
//! ```
//!
//! where `F_b^n(x) = F(x/n + b/2n)·b` samples the driving field on the dual
//! lattice. The linearization `Λ_t^n` (discrete Laplacian plus `(1−2u)F`
//! drift) approximates `𝕃_t = Δ + 2(1−2u_t)F·∇` to `O(n^{-2})` and generates
//! the backwards Fokker-Planck semigroup `P_{s,t}`.
//!
//! Time stepping is explicit RK4 with `dt = 0.2/(2d n² + 2n‖F‖_∞)`; spatial
//! error dominates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Torus, MAX_D};

const TAU: f64 = std::f64::consts::TAU;

/// One trigonometric term `c·cos(2π m·x) + s·sin(2π m·x)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FourierTerm {
    pub mode: [i64; MAX_D],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl FourierTerm {
    fn eval(&self, d: usize, x: &[f64]) -> f64 {
        let phase: f64 = (0..d).map(|i| self.mode[i] as f64 * x[i]).sum::<f64>() * TAU;
        self.cos * phase.cos() + self.sin * phase.sin()
    }

    /// Partial derivative in direction `i`.
    fn eval_d(&self, d: usize, i: usize, x: &[f64]) -> f64 {
        let phase: f64 = (0..d).map(|j| self.mode[j] as f64 * x[j]).sum::<f64>() * TAU;
        let k = TAU * self.mode[i] as f64;
        k * (-self.cos * phase.sin() + self.sin * phase.cos())
    }

    /// Laplacian of the term.
    fn eval_lap(&self, d: usize, x: &[f64]) -> f64 {
        let k2: f64 = (0..d).map(|j| (TAU * self.mode[j] as f64).powi(2)).sum();
        -k2 * self.eval(d, x)
    }
}

/// Smooth driving vector field `F: T^d → R^d`, with analytic divergence.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorFieldSpec {
    Zero,
    Constant {
        value: [f64; MAX_D],
    },
    /// `F = ∇V` for a trigonometric potential `V`.
    GradientOfPotential {
        potential: Vec<FourierTerm>,
    },
    /// Divergence-free rotational field on `T²`:
    /// `F(x) = amplitude · (−sin 2πx_2, sin 2πx_1)`.
    RotationalPreset {
        amplitude: f64,
    },
    /// Independent trigonometric tables per component.
    Fourier {
        components: Vec<Vec<FourierTerm>>,
    },
}

impl VectorFieldSpec {
    pub fn eval(&self, d: usize, x: &[f64]) -> [f64; MAX_D] {
        let mut out = [0.0; MAX_D];
        match self {
            VectorFieldSpec::Zero => {}
            VectorFieldSpec::Constant { value } => out[..d].copy_from_slice(&value[..d]),
            VectorFieldSpec::GradientOfPotential { potential } => {
                for i in 0..d {
                    out[i] = potential.iter().map(|t| t.eval_d(d, i, x)).sum();
                }
            }
            VectorFieldSpec::RotationalPreset { amplitude } => {
                out[0] = -amplitude * (TAU * x[1]).sin();
                out[1] = amplitude * (TAU * x[0]).sin();
            }
            VectorFieldSpec::Fourier { components } => {
                for (i, table) in components.iter().enumerate().take(d) {
                    out[i] = table.iter().map(|t| t.eval(d, x)).sum();
                }
            }
        }
        out
    }

    pub fn divergence(&self, d: usize, x: &[f64]) -> f64 {
        match self {
            VectorFieldSpec::Zero | VectorFieldSpec::Constant { .. } => 0.0,
            VectorFieldSpec::GradientOfPotential { potential } => {
                potential.iter().map(|t| t.eval_lap(d, x)).sum()
            }
            VectorFieldSpec::RotationalPreset { .. } => 0.0,
            VectorFieldSpec::Fourier { components } => (0..d)
                .map(|i| {
                    components
                        .get(i)
                        .map(|table| table.iter().map(|t| t.eval_d(d, i, x)).sum())
                        .unwrap_or(0.0)
                })
                .sum(),
        }
    }

    /// `‖F‖_∞` (max over components) estimated on a dense grid of side `4n`.
    pub fn sup_norm(&self, torus: &Torus) -> f64 {
        self.grid_max(torus, |d, x| {
            let f = self.eval(d, x);
            (0..d).map(|i| f[i].abs()).fold(0.0, f64::max)
        })
    }

    /// `‖∇·F‖_∞` estimated on a dense grid of side `4n`.
    pub fn div_sup_norm(&self, torus: &Torus) -> f64 {
        self.grid_max(torus, |d, x| self.divergence(d, x).abs())
    }

    fn grid_max(&self, torus: &Torus, f: impl Fn(usize, &[f64]) -> f64) -> f64 {
        let d = torus.dim();
        let m = 4 * torus.side();
        let mut best = 0.0f64;
        let mut idx = vec![0usize; d];
        loop {
            let x: Vec<f64> = idx.iter().map(|&i| i as f64 / m as f64).collect();
            best = best.max(f(d, &x));
            let mut i = d;
            loop {
                if i == 0 {
                    return best;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < m {
                    break;
                }
                idx[i] = 0;
            }
        }
    }
}

/// `F_b^n(x) = F(x/n + b/2n) · b`, one value per (site, direction).
#[derive(Debug, Clone)]
pub struct DualField {
    torus: Torus,
    values: Vec<f64>,
}

impl DualField {
    pub fn zero(torus: Torus) -> Self {
        let len = torus.sites() * torus.dim();
        DualField {
            torus,
            values: vec![0.0; len],
        }
    }

    #[inline]
    pub fn get(&self, site: usize, b: usize) -> f64 {
        self.values[site * self.torus.dim() + b]
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Sample the driving field on the dual lattice.
pub fn sample_dual_field(spec: &VectorFieldSpec, torus: &Torus) -> DualField {
    let d = torus.dim();
    let n = torus.side() as f64;
    let mut values = vec![0.0; torus.sites() * d];
    for site in 0..torus.sites() {
        let base = torus.embed(site);
        for b in 0..d {
            let mut x = base;
            x[b] += 0.5 / n;
            values[site * d + b] = spec.eval(d, &x[..d])[b];
        }
    }
    DualField {
        torus: *torus,
        values,
    }
}

/// A real field on the torus with values in `[0,1]`, optionally time-stamped.
#[derive(Debug, Clone)]
pub struct DensityField {
    torus: Torus,
    values: Vec<f64>,
    time: Option<f64>,
}

impl DensityField {
    pub fn new(torus: Torus, values: Vec<f64>) -> Result<Self> {
        if values.len() != torus.sites() {
            return Err(Error::invalid_input("density length != site count"));
        }
        for (site, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::DensityOutOfRange {
                    site,
                    value: v,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(DensityField {
            torus,
            values,
            time: None,
        })
    }

    pub fn constant(torus: Torus, rho: f64) -> Result<Self> {
        DensityField::new(torus, vec![rho; torus.sites()])
    }

    /// Build from a smooth profile sampled at `x/n`.
    pub fn from_profile(torus: Torus, profile: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..torus.sites())
            .map(|s| profile(&torus.embed(s)[..torus.dim()]))
            .collect();
        DensityField::new(torus, values)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn time(&self) -> Option<f64> {
        self.time
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MAX, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// Largest `ε` with `ε ≤ u_x ≤ 1−ε` for all sites.
    pub fn interior_margin(&self) -> f64 {
        self.min().min(1.0 - self.max())
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `ℒ^n u`: discrete diffusion plus the conservative drift from the dual
/// field, evaluated exactly as displayed in the module docs.
pub fn discrete_generator(u: &[f64], dual: &DualField, torus: &Torus) -> Vec<f64> {
    let d = torus.dim();
    let n = torus.side() as f64;
    let n2 = n * n;
    let mut out = vec![0.0; u.len()];
    for x in 0..u.len() {
        let mut acc = 0.0;
        for b in 0..d {
            let xp = torus.neighbor(x, b, true);
            let xm = torus.neighbor(x, b, false);
            acc += n2 * (u[xp] + u[xm] - 2.0 * u[x]);
            let fwd = dual.get(x, b) * (u[x] + u[xp] - 2.0 * u[x] * u[xp]);
            let bwd = dual.get(xm, b) * (u[xm] + u[x] - 2.0 * u[xm] * u[x]);
            acc -= n * (fwd - bwd);
        }
        out[x] = acc;
    }
    out
}

/// `Λ_t^n f`: discrete Laplacian plus the `(1−2u)` drift differences.
pub fn lambda_n(f: &[f64], u: &[f64], dual: &DualField, torus: &Torus) -> Vec<f64> {
    let d = torus.dim();
    let n = torus.side() as f64;
    let n2 = n * n;
    let mut out = vec![0.0; f.len()];
    for x in 0..f.len() {
        let mut acc = 0.0;
        for b in 0..d {
            let xp = torus.neighbor(x, b, true);
            let xm = torus.neighbor(x, b, false);
            acc += n2 * (f[xp] + f[xm] - 2.0 * f[x]);
            acc += (1.0 - 2.0 * u[xp]) * dual.get(x, b) * n * (f[xp] - f[x]);
            acc += (1.0 - 2.0 * u[xm]) * dual.get(xm, b) * n * (f[x] - f[xm]);
        }
        out[x] = acc;
    }
    out
}

/// Interior bound from the comparison principle:
/// `ε₁ = ε₀ / (ε₀ + (1−ε₀) e^{2‖∇·F‖_∞ T})`.
pub fn eps1(eps0: f64, div_sup: f64, t_final: f64) -> f64 {
    eps0 / (eps0 + (1.0 - eps0) * (2.0 * div_sup * t_final).exp())
}

/// Stability step `dt = 0.2 / (2d n² + 2n‖F‖_∞)`.
pub fn stable_dt(torus: &Torus, f_sup: f64) -> f64 {
    let n = torus.side() as f64;
    let d = torus.dim() as f64;
    0.2 / (2.0 * d * n * n + 2.0 * n * f_sup)
}

/// Semi-discrete solution of `∂_t u = ℒ^n u` on a stored time grid, with
/// linear interpolation between stored steps.
#[derive(Debug, Clone)]
pub struct HydroSolution {
    torus: Torus,
    dual: DualField,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl HydroSolution {
    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn dual(&self) -> &DualField {
        &self.dual
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Density at time `t`, linearly interpolated between stored steps.
    pub fn at(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(self.times[0], self.t_final());
        match self
            .times
            .binary_search_by(|probe| probe.partial_cmp(&t).unwrap())
        {
            Ok(i) => self.states[i].clone(),
            Err(i) => {
                let (t0, t1) = (self.times[i - 1], self.times[i]);
                let w = (t - t0) / (t1 - t0);
                self.states[i - 1]
                    .iter()
                    .zip(&self.states[i])
                    .map(|(a, b)| a * (1.0 - w) + b * w)
                    .collect()
            }
        }
    }

    /// `du/dt` at time `t`, which for the semi-discrete flow is `ℒ^n u(t)`.
    pub fn time_derivative(&self, t: f64) -> Vec<f64> {
        discrete_generator(&self.at(t), &self.dual, &self.torus)
    }

    /// Exactly stationary profile (requires `ℒ^n u = 0`, e.g. constant `u`
    /// with a discretely divergence-free field).
    pub fn stationary(
        torus: Torus,
        spec: &VectorFieldSpec,
        u: DensityField,
        t_final: f64,
    ) -> Result<Self> {
        let dual = sample_dual_field(spec, &torus);
        let gen = discrete_generator(u.values(), &dual, &torus);
        let resid = gen.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if resid > 1e-9 {
            return Err(Error::invalid_input(format!(
                "profile is not stationary: max |generator| = {resid:.3e}"
            )));
        }
        Ok(HydroSolution {
            torus,
            dual,
            times: vec![0.0, t_final],
            states: vec![u.values().to_vec(); 2],
        })
    }
}

/// Solve `∂_t u = ℒ^n u` on `[0, T]` with RK4.
///
/// `dt` defaults to the stability bound and is rejected above it. `u0` must
/// stay strictly inside `(0,1)`; the returned trajectory is checked against
/// the comparison bound `[ε₁ − 1e-6, 1 − ε₁ + 1e-6]`.
pub fn solve_hydro(
    u0: &DensityField,
    spec: &VectorFieldSpec,
    t_final: f64,
    dt: Option<f64>,
) -> Result<HydroSolution> {
    let torus = *u0.torus();
    let eps0 = u0.interior_margin();
    if eps0 <= 0.0 {
        return Err(Error::invalid_input(
            "initial profile touches {0,1}; a strictly interior profile is required",
        ));
    }
    let f_sup = spec.sup_norm(&torus);
    let bound = stable_dt(&torus, f_sup);
    let dt = match dt {
        Some(dt) => {
            if dt > bound * (1.0 + 1e-12) || dt <= 0.0 {
                return Err(Error::UnstableTimeStep { dt, bound });
            }
            dt
        }
        None => bound,
    };
    let dual = sample_dual_field(spec, &torus);
    let steps = (t_final / dt).ceil() as usize;
    let steps = steps.max(1);
    let dt = t_final / steps as f64;
    // Store at most ~2048 snapshots; linear interpolation covers the rest.
    let store_every = (steps / 2048).max(1);

    let mut u = u0.values().to_vec();
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    let mut k1;
    for step in 0..steps {
        k1 = discrete_generator(&u, &dual, &torus);
        let u2: Vec<f64> = u.iter().zip(&k1).map(|(a, k)| a + 0.5 * dt * k).collect();
        let k2 = discrete_generator(&u2, &dual, &torus);
        let u3: Vec<f64> = u.iter().zip(&k2).map(|(a, k)| a + 0.5 * dt * k).collect();
        let k3 = discrete_generator(&u3, &dual, &torus);
        let u4: Vec<f64> = u.iter().zip(&k3).map(|(a, k)| a + dt * k).collect();
        let k4 = discrete_generator(&u4, &dual, &torus);
        for (i, v) in u.iter_mut().enumerate() {
            *v += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if (step + 1) % store_every == 0 || step + 1 == steps {
            times.push(dt * (step + 1) as f64);
            states.push(u.clone());
        }
    }
    let sol = HydroSolution {
        torus,
        dual,
        times,
        states,
    };
    // Comparison principle with 1e-6 slack.
    let e1 = eps1(eps0, spec.div_sup_norm(&torus), t_final);
    for state in &sol.states {
        for &v in state {
            if v < e1 - 1e-6 || v > 1.0 - e1 + 1e-6 {
                return Err(Error::invalid_input(format!(
                    "solution escaped the comparison bounds: value {v}, eps1 {e1}"
                )));
            }
        }
    }
    Ok(sol)
}

/// Backward Fokker-Planck sweep: solves `∂_s v + Λ_s^n v = 0` from `v_t = f`
/// down to `s0`, storing the whole path on a uniform grid (ascending in `s`).
#[derive(Debug, Clone)]
pub struct BackwardSolution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl BackwardSolution {
    pub fn at_start(&self) -> &[f64] {
        &self.states[0]
    }
}

pub fn backward_sweep(f: &[f64], s0: f64, t: f64, sol: &HydroSolution) -> Result<BackwardSolution> {
    if s0 > t {
        return Err(Error::BadTimeWindow { s: s0, t });
    }
    let torus = *sol.torus();
    let dual = sol.dual();
    let f_sup = dual.max_abs();
    let span = t - s0;
    let dt_bound = stable_dt(&torus, f_sup);
    let steps = if span == 0.0 {
        0
    } else {
        ((span / dt_bound).ceil() as usize).max(1)
    };
    let dt = if steps == 0 { 0.0 } else { span / steps as f64 };
    let store_every = (steps / 2048).max(1);

    // March in τ = t − s; dv/dτ = Λ_{t-τ} v.
    let mut v = f.to_vec();
    let mut rev_times = vec![t];
    let mut rev_states = vec![v.clone()];
    for step in 0..steps {
        let tau = dt * step as f64;
        let rhs = |w: &[f64], tau: f64| lambda_n(w, &sol.at(t - tau), dual, &torus);
        let k1 = rhs(&v, tau);
        let v2: Vec<f64> = v.iter().zip(&k1).map(|(a, k)| a + 0.5 * dt * k).collect();
        let k2 = rhs(&v2, tau + 0.5 * dt);
        let v3: Vec<f64> = v.iter().zip(&k2).map(|(a, k)| a + 0.5 * dt * k).collect();
        let k3 = rhs(&v3, tau + 0.5 * dt);
        let v4: Vec<f64> = v.iter().zip(&k3).map(|(a, k)| a + dt * k).collect();
        let k4 = rhs(&v4, tau + dt);
        for (i, w) in v.iter_mut().enumerate() {
            *w += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if (step + 1) % store_every == 0 || step + 1 == steps {
            rev_times.push(t - dt * (step + 1) as f64);
            rev_states.push(v.clone());
        }
    }
    rev_times.reverse();
    rev_states.reverse();
    Ok(BackwardSolution {
        times: rev_times,
        states: rev_states,
    })
}

/// `P_{s,t} f`: endpoint of the backward sweep, with the max principle
/// `‖P_{s,t} f‖_∞ ≤ ‖f‖_∞ + 1e-8` enforced.
pub fn backward_semigroup(f: &[f64], s: f64, t: f64, sol: &HydroSolution) -> Result<Vec<f64>> {
    let sweep = backward_sweep(f, s, t, sol)?;
    let out = sweep.states.into_iter().next().unwrap();
    let in_sup = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let out_sup = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if out_sup > in_sup + 1e-8 {
        return Err(Error::invalid_input(format!(
            "max principle violated: ||P f|| = {out_sup} > ||f|| = {in_sup}"
        )));
    }
    Ok(out)
}
