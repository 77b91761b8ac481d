//! Local observables and the two-stage renormalization functionals.
//!
//! Everything is built from the normalized occupation variables
//! `ω_x = (η_x − u_x)/(u_x(1−u_x))`, their translated products
//! `ω_{x+A} = Π_{y∈A} ω_{x+y}` over a finite offset set `A` in the negative
//! orthant, and block averages `ω_x^ℓ = Σ_y ω_{x+y} q_ℓ(y)`.
//!
//! The first stage compares `V(G) = Σ_x ω_{x+A} ω_{x+b} G_x` with its
//! block-averaged version `V^ℓ(G)`; the mismatch telescopes along the flow
//! `φ_ℓ` (whose divergence is `δ_0 − q_ℓ`, hence the sign of `h`):
//!
//! ```text
//! V(G) − V^ℓ(G) = Σ_{x,b'} h^{ℓ,b'}_{x−b}(G) (ω_{x+b'} − ω_x),
//! h^{ℓ,b'}_x(G) = −Σ_z φ_ℓ(z;b') ω_{x−z+A} G_{x−z}.
//! ```
//!
//! The second stage repeats the construction with
//! `Z^ℓ(G) = Σ_{x,b'} n(u_{x+b'}−u_x) h^{ℓ,b'}_{x−b} ω_x ω_{x+b'}` in place
//! of `V(G)`. Both identities are exact on the torus and evaluated by direct
//! `O(n^d ℓ^d)` summation.

use crate::error::{Error, Result};
use crate::flows::qell_flow_f64_cached;
use crate::hydro::DensityField;
use crate::lattice::{Coord, Torus, MAX_D};
use crate::wasep::Configuration;

/// `ω_x = (η_x − u_x)/(u_x(1−u_x))` per site.
#[derive(Debug, Clone)]
pub struct OmegaField {
    torus: Torus,
    values: Vec<f64>,
}

impl OmegaField {
    pub fn new(eta: &Configuration, u: &DensityField) -> Result<Self> {
        if u.interior_margin() <= 0.0 {
            return Err(Error::invalid_input(
                "omega requires a profile strictly inside (0,1)",
            ));
        }
        let torus = *u.torus();
        let values = (0..torus.sites())
            .map(|x| {
                let ux = u.values()[x];
                ((eta.occupied(x) as u8 as f64) - ux) / (ux * (1.0 - ux))
            })
            .collect();
        Ok(OmegaField { torus, values })
    }

    pub fn from_values(torus: Torus, values: Vec<f64>) -> Result<Self> {
        if values.len() != torus.sites() {
            return Err(Error::invalid_input("omega length mismatch"));
        }
        Ok(OmegaField { torus, values })
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, site: usize) -> f64 {
        self.values[site]
    }
}

/// A finite offset set `A` inside the negative orthant, with the derived
/// scales `ℓ₀` (side of the smallest cube containing `A`) and `ℓ₁` (smallest
/// `ℓ` with `−A ⊆ Λ_ℓ`).
#[derive(Debug, Clone)]
pub struct LocalSet {
    offsets: Vec<Coord>,
    ell0: usize,
    ell1: usize,
}

impl LocalSet {
    pub fn new(offsets: Vec<Coord>) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::invalid_input("local set must be nonempty"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for z in &offsets {
            if z.iter().any(|&c| c > 0) {
                return Err(Error::invalid_input(
                    "local set offsets must have nonpositive coordinates",
                ));
            }
            if !seen.insert(*z) {
                return Err(Error::invalid_input("duplicate offset in local set"));
            }
        }
        let mut span = [0i64; MAX_D];
        let mut depth = [0i64; MAX_D];
        for i in 0..MAX_D {
            let lo = offsets.iter().map(|z| z[i]).min().unwrap();
            let hi = offsets.iter().map(|z| z[i]).max().unwrap();
            span[i] = hi - lo;
            depth[i] = -lo;
        }
        let ell0 = (span.iter().max().unwrap() + 1) as usize;
        let ell1 = (depth.iter().max().unwrap() + 1) as usize;
        Ok(LocalSet {
            offsets,
            ell0,
            ell1,
        })
    }

    /// The degenerate set `A = {0}` used by the entropy and decay
    /// experiments.
    pub fn origin() -> Self {
        LocalSet::new(vec![[0; MAX_D]]).unwrap()
    }

    pub fn offsets(&self) -> &[Coord] {
        &self.offsets
    }

    pub fn ell0(&self) -> usize {
        self.ell0
    }

    pub fn ell1(&self) -> usize {
        self.ell1
    }
}

/// `ω_{x+A} = Π_{y∈A} ω_{x+y}` with torus wrap.
pub fn omega_product(omega: &OmegaField, a: &LocalSet, x: usize) -> f64 {
    a.offsets()
        .iter()
        .map(|z| omega.get(omega.torus.wrap(x, z)))
        .product()
}

/// Block average `ω_x^ℓ = Σ_y ω_{x+y} q_ℓ(y)`; requires `ℓ < n/2`.
pub fn block_average(omega: &OmegaField, l: usize) -> Result<Vec<f64>> {
    let torus = omega.torus;
    if 2 * l >= torus.side() {
        return Err(Error::ScaleTooLarge { l, n: torus.side() });
    }
    let (_, q) = crate::lattice::box_measures(l, torus.dim())?;
    let weights = q.entries_f64();
    let mut out = vec![0.0; torus.sites()];
    for (x, slot) in out.iter_mut().enumerate() {
        *slot = weights
            .iter()
            .map(|(z, w)| w * omega.get(torus.wrap(x, z)))
            .sum();
    }
    Ok(out)
}

/// First-stage functionals at block scale `ℓ` in lattice direction `b`.
#[derive(Debug, Clone)]
pub struct FirstStage {
    pub l: usize,
    pub b: usize,
    /// `V(G) = Σ_x ω_{x+A} ω_{x+b} G_x`.
    pub v: f64,
    /// `V^ℓ(G) = Σ_x ω_{x+A} ω^ℓ_{x+b} G_x`.
    pub v_ell: f64,
    /// `W^{ℓ,b'}(G) = Σ_x h^{ℓ,b'}_x(G)²` per direction.
    pub w_by_dir: Vec<f64>,
    /// `W^ℓ(G) = Σ_{b'} W^{ℓ,b'}(G)`.
    pub w: f64,
    /// `Z^ℓ(G) = Σ_{x,b'} n(u_{x+b'}−u_x) h^{ℓ,b'}_{x−b} ω_x ω_{x+b'}`.
    pub z: f64,
    /// `h^{ℓ,b'}_x(G)` per direction, per site.
    pub h: Vec<Vec<f64>>,
    /// Relative residual of the telescoping identity.
    pub identity_residual: f64,
}

fn check_scales(torus: &Torus, l: usize, a: &LocalSet) -> Result<()> {
    if l < a.ell1() {
        return Err(Error::InvalidScale {
            l,
            reason: format!("l must be >= l1 = {}", a.ell1()),
        });
    }
    let n = torus.side();
    let limit = if torus.dim() == 1 { n / 8 } else { n / 2 };
    if l >= limit.max(1) {
        return Err(Error::InvalidScale {
            l,
            reason: format!("l must be < {limit} for n = {n}, d = {}", torus.dim()),
        });
    }
    Ok(())
}

/// Evaluate all first-stage objects and the exact telescoping identity
/// `V − V^ℓ = Σ_{x,b'} h^{ℓ,b'}_{x−b} (ω_{x+b'} − ω_x)`.
pub fn first_stage(
    g: &[f64],
    a: &LocalSet,
    b: usize,
    l: usize,
    omega: &OmegaField,
    u: &DensityField,
) -> Result<FirstStage> {
    let torus = omega.torus;
    let d = torus.dim();
    let n = torus.side() as f64;
    check_scales(&torus, l, a)?;
    if b >= d {
        return Err(Error::invalid_input("direction out of range"));
    }
    if g.len() != torus.sites() {
        return Err(Error::invalid_input("G length mismatch"));
    }
    let phi = qell_flow_f64_cached(l, d)?;
    let uv = u.values();
    let sites = torus.sites();

    // P_x = ω_{x+A} G_x drives both V and the h fields.
    let p: Vec<f64> = (0..sites)
        .map(|x| omega_product(omega, a, x) * g[x])
        .collect();
    let mut forward = [0i64; MAX_D];
    forward[b] = 1;
    let v: f64 = (0..sites)
        .map(|x| p[x] * omega.get(torus.wrap(x, &forward)))
        .sum();
    let omega_block = block_average(omega, l)?;
    let v_ell: f64 = (0..sites)
        .map(|x| p[x] * omega_block[torus.wrap(x, &forward)])
        .sum();

    // h^{ℓ,b'}_x = −Σ_z φ_ℓ(z;b') P_{x−z}. The sign makes the telescoping
    // identity below hold with div φ_ℓ = δ_0 − q_ℓ:
    // Σ_w f(w)(p−q)(w) = −Σ_{z,b} φ(z;b)(f(z+b) − f(z)).
    let mut h = vec![vec![0.0; sites]; d];
    for (z, bp, w) in phi.iter() {
        let neg = [-z[0], -z[1], -z[2]];
        for x in 0..sites {
            h[*bp][x] -= w * p[torus.wrap(x, &neg)];
        }
    }
    let w_by_dir: Vec<f64> = h
        .iter()
        .map(|field| field.iter().map(|v| v * v).sum())
        .collect();
    let w_total = w_by_dir.iter().sum();

    // Q^{b'}_x = n(u_{x+b'}−u_x) h^{ℓ,b'}_{x−b} ω_x feeds Z and stage two.
    let mut back = [0i64; MAX_D];
    back[b] = -1;
    let mut q = vec![vec![0.0; sites]; d];
    let mut z_val = 0.0;
    for bp in 0..d {
        let mut fwd = [0i64; MAX_D];
        fwd[bp] = 1;
        for x in 0..sites {
            let xp = torus.wrap(x, &fwd);
            let qx = n * (uv[xp] - uv[x]) * h[bp][torus.wrap(x, &back)] * omega.get(x);
            q[bp][x] = qx;
            z_val += qx * omega.get(xp);
        }
    }

    // Identity check by direct summation of the right-hand side.
    let mut rhs = 0.0;
    for bp in 0..d {
        let mut fwd = [0i64; MAX_D];
        fwd[bp] = 1;
        for x in 0..sites {
            rhs += h[bp][torus.wrap(x, &back)] * (omega.get(torus.wrap(x, &fwd)) - omega.get(x));
        }
    }
    let identity_residual = ((v - v_ell) - rhs).abs() / (1.0 + v.abs() + v_ell.abs());

    Ok(FirstStage {
        l,
        b,
        v,
        v_ell,
        w_by_dir,
        w: w_total,
        z: z_val,
        h,
        identity_residual,
    })
}

/// Second-stage functionals built on top of a [`FirstStage`] context.
#[derive(Debug, Clone)]
pub struct SecondStage {
    /// `Ṽ^ℓ(G) = Σ_{b'} Σ_x n(u_{x+b'}−u_x) h^{ℓ,b'}_{x−b} ω_x ω^ℓ_{x+b'}`.
    pub v_tilde: f64,
    /// `W̃^ℓ(G) = Σ_{b',b''} Σ_x h^{ℓ,b',b''}_x(G)²`.
    pub w_tilde: f64,
    /// `Z̃^ℓ(G) = Σ_{b',b''} Σ_x h^{ℓ,b',b''}_{x−b'} n(u_{x+b''}−u_x) ω_x ω_{x+b''}`.
    pub z_tilde: f64,
    /// `h^{ℓ,b',b''}_x(G)` indexed by `[b'][b''][site]`.
    pub h2: Vec<Vec<Vec<f64>>>,
    /// Largest `|h^{ℓ,b',b''}|`.
    pub h2_sup: f64,
    /// Relative residual of `Z^ℓ − Ṽ^ℓ = Σ h^{ℓ,b',b''}_{x−b'}(ω_{x+b''}−ω_x)`.
    pub identity_residual: f64,
}

pub fn second_stage(
    first: &FirstStage,
    a: &LocalSet,
    omega: &OmegaField,
    u: &DensityField,
) -> Result<SecondStage> {
    let torus = omega.torus;
    let d = torus.dim();
    let n = torus.side() as f64;
    check_scales(&torus, first.l, a)?;
    let phi = qell_flow_f64_cached(first.l, d)?;
    let uv = u.values();
    let sites = torus.sites();
    let omega_block = block_average(omega, first.l)?;

    // Q^{b'}_x = n(u_{x+b'}−u_x) h^{ℓ,b'}_{x−b} ω_x (recomputed from the
    // stage-one h fields).
    let mut back = [0i64; MAX_D];
    back[first.b] = -1;
    let mut q = vec![vec![0.0; sites]; d];
    let mut v_tilde = 0.0;
    for bp in 0..d {
        let mut fwd = [0i64; MAX_D];
        fwd[bp] = 1;
        for x in 0..sites {
            let xp = torus.wrap(x, &fwd);
            let qx = n * (uv[xp] - uv[x]) * first.h[bp][torus.wrap(x, &back)] * omega.get(x);
            q[bp][x] = qx;
            v_tilde += qx * omega_block[xp];
        }
    }

    // h^{ℓ,b',b''}_x = −Σ_z φ_ℓ(z;b'') Q^{b'}_{x−z}, same sign convention as
    // the first stage.
    let mut h2 = vec![vec![vec![0.0; sites]; d]; d];
    for (z, bpp, wgt) in phi.iter() {
        let neg = [-z[0], -z[1], -z[2]];
        for bp in 0..d {
            for x in 0..sites {
                h2[bp][*bpp][x] -= wgt * q[bp][torus.wrap(x, &neg)];
            }
        }
    }
    let mut h2_sup = 0.0f64;
    let mut w_tilde = 0.0;
    for bp in 0..d {
        for bpp in 0..d {
            for &v in &h2[bp][bpp] {
                h2_sup = h2_sup.max(v.abs());
                w_tilde += v * v;
            }
        }
    }

    let mut z_tilde = 0.0;
    let mut rhs = 0.0;
    let z_val = first.z;
    for bp in 0..d {
        let mut back_p = [0i64; MAX_D];
        back_p[bp] = -1;
        for bpp in 0..d {
            let mut fwd_pp = [0i64; MAX_D];
            fwd_pp[bpp] = 1;
            for x in 0..sites {
                let h_shift = h2[bp][bpp][torus.wrap(x, &back_p)];
                let xpp = torus.wrap(x, &fwd_pp);
                z_tilde += h_shift * n * (uv[xpp] - uv[x]) * omega.get(x) * omega.get(xpp);
                rhs += h_shift * (omega.get(xpp) - omega.get(x));
            }
        }
    }
    let identity_residual = ((z_val - v_tilde) - rhs).abs() / (1.0 + z_val.abs() + v_tilde.abs());

    Ok(SecondStage {
        v_tilde,
        w_tilde,
        z_tilde,
        h2,
        h2_sup,
        identity_residual,
    })
}

/// Mesoscopic block scale `ℓ(n)` balancing `ℓ^d g_d(ℓ) ≍ n²`:
/// `⌊n/8⌋` in `d=1`, `round(n/√(log n))` in `d=2`, `round(n^{2/3})` in
/// `d=3`.
pub fn ell_of_n(d: usize, n: usize) -> Result<usize> {
    if n < 16 {
        return Err(Error::invalid_input("ell_of_n requires n >= 16"));
    }
    let nf = n as f64;
    let l = match d {
        1 => n / 8,
        2 => (nf / nf.ln().sqrt()).round() as usize,
        3 => nf.powf(2.0 / 3.0).round() as usize,
        _ => return Err(Error::InvalidDimension(d)),
    };
    Ok(l.max(1))
}
