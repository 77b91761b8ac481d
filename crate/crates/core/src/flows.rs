//! Lattice flows with exact rational arithmetic.
//!
//! A flow is a finitely supported function `φ: Z^d × B → Q`. It connects a
//! measure `p` to a measure `q` when
//! `p(z) − q(z) = Σ_b (φ(z;b) − φ(z−b;b))` for every `z`.
//! Three constructions are provided:
//!
//! - [`step_flow`]: `ψ^ℓ` connecting `p_ℓ` to `p_{ℓ-1}`, built layer by layer
//!   over the sites with `k` coordinates equal to `ℓ-1`, with
//!   `|ψ^ℓ| ≤ C_d ℓ^{-d}`;
//! - [`point_to_cube_flow`]: `ψ̃^ℓ` connecting `δ_0` to `p_ℓ`, cumulative sums
//!   in `d = 1` and `-Σ_{k=2}^ℓ ψ^k` in `d ≥ 2`, with
//!   `Σ (ψ̃^ℓ)² ≤ C g_d(ℓ)` and `Σ |ψ̃^ℓ| ≤ C ℓ`;
//! - [`point_to_qell_flow`]: `φ_ℓ` connecting `δ_0` to `q_ℓ = p_ℓ ∗ p_ℓ`,
//!   obtained by chaining `ψ̃^ℓ` with the convolution `ψ̃^ℓ ∗ p_ℓ`.
//!
//! All divergences are exact identities of rationals. Internally the heavy
//! sweeps run on integer numerators over a shared denominator, so no gcd
//! reduction happens per operation; floats only appear in the reporting
//! accessors.

use std::collections::BTreeMap;

use num::integer::Integer;
use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lattice::{cube_points, rational_to_f64, BoxMeasure, Coord, MAX_D};

/// A finitely supported signed flow on the edges of `Z^d`, entries in
/// canonical rational form.
#[derive(Debug, Clone)]
pub struct Flow {
    d: usize,
    entries: BTreeMap<(Coord, usize), BigRational>,
}

impl Flow {
    pub fn zero(d: usize) -> Self {
        Flow {
            d,
            entries: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &BTreeMap<(Coord, usize), BigRational> {
        &self.entries
    }

    pub fn value(&self, x: &Coord, b: usize) -> BigRational {
        self.entries
            .get(&(*x, b))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Add `v` to the edge value at `(x; b)`, dropping exact zeros.
    pub fn accumulate(&mut self, x: Coord, b: usize, v: BigRational) {
        if v.is_zero() {
            return;
        }
        let slot = self.entries.entry((x, b)).or_insert_with(BigRational::zero);
        *slot += v;
        if slot.is_zero() {
            self.entries.remove(&(x, b));
        }
    }

    /// Pointwise sum of flows (the Abelian structure used to chain
    /// connections).
    pub fn add(&self, other: &Flow) -> Flow {
        assert_eq!(self.d, other.d);
        let mut out = self.clone();
        for ((x, b), v) in &other.entries {
            out.accumulate(*x, *b, v.clone());
        }
        out
    }

    pub fn negate(&self) -> Flow {
        Flow {
            d: self.d,
            entries: self.entries.iter().map(|(k, v)| (*k, -v.clone())).collect(),
        }
    }

    /// Discrete divergence `z ↦ Σ_b (φ(z;b) − φ(z−b;b))` as a finitely
    /// supported signed measure; its total mass is exactly zero.
    pub fn divergence(&self) -> BTreeMap<Coord, BigRational> {
        let int = IntFlow::from_flow(self);
        int.divergence_int()
            .into_iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(z, v)| (z, BigRational::new(v, int.den.clone())))
            .collect()
    }

    /// Support convention: `φ(x;b) ≠ 0` requires both `x` and `x+b` in the
    /// cube `Λ_m`.
    pub fn supported_in_cube(&self, m: i64) -> bool {
        self.entries.keys().all(|(x, b)| {
            let mut y = *x;
            y[*b] += 1;
            let inside = |c: &Coord| c[..self.d].iter().all(|&ci| 0 <= ci && ci < m);
            inside(x) && inside(&y)
        })
    }

    pub fn sum_sq(&self) -> BigRational {
        let int = IntFlow::from_flow(self);
        let total: BigInt = int.num.values().map(|n| n * n).sum();
        BigRational::new(total, &int.den * &int.den)
    }

    pub fn sum_abs(&self) -> BigRational {
        let int = IntFlow::from_flow(self);
        let total: BigInt = int.num.values().map(|n| n.abs()).sum();
        BigRational::new(total, int.den)
    }

    pub fn max_abs(&self) -> BigRational {
        self.entries
            .values()
            .map(|v| v.abs())
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn sum_sq_f64(&self) -> f64 {
        rational_to_f64(&self.sum_sq())
    }

    pub fn sum_abs_f64(&self) -> f64 {
        rational_to_f64(&self.sum_abs())
    }

    pub fn max_abs_f64(&self) -> f64 {
        rational_to_f64(&self.max_abs())
    }

    /// Edge values as floats, for the observable layer.
    pub fn entries_f64(&self) -> Vec<(Coord, usize, f64)> {
        self.entries
            .iter()
            .map(|((x, b), v)| (*x, *b, rational_to_f64(v)))
            .collect()
    }
}

/// Integer-numerator workhorse: all values share one denominator, so sums,
/// divergences and convolutions are pure `BigInt` arithmetic.
#[derive(Debug, Clone)]
struct IntFlow {
    d: usize,
    num: BTreeMap<(Coord, usize), BigInt>,
    den: BigInt,
}

impl IntFlow {
    fn zero(d: usize) -> Self {
        IntFlow {
            d,
            num: BTreeMap::new(),
            den: BigInt::one(),
        }
    }

    fn from_flow(flow: &Flow) -> Self {
        let mut den = BigInt::one();
        for v in flow.entries.values() {
            den = den.lcm(v.denom());
        }
        let num = flow
            .entries
            .iter()
            .map(|(k, v)| (*k, v.numer() * (&den / v.denom())))
            .collect();
        IntFlow {
            d: flow.d,
            num,
            den,
        }
    }

    fn to_flow(&self) -> Flow {
        let entries = self
            .num
            .iter()
            .filter(|(_, n)| !n.is_zero())
            .map(|(k, n)| (*k, BigRational::new(n.clone(), self.den.clone())))
            .collect();
        Flow { d: self.d, entries }
    }

    /// Rescale so the denominator becomes `lcm(den, extra)`.
    fn extend_denominator(&mut self, extra: &BigInt) {
        let new_den = self.den.lcm(extra);
        if new_den != self.den {
            let factor = &new_den / &self.den;
            for n in self.num.values_mut() {
                *n *= &factor;
            }
            self.den = new_den;
        }
    }

    fn divergence_int(&self) -> BTreeMap<Coord, BigInt> {
        let mut div: BTreeMap<Coord, BigInt> = BTreeMap::new();
        for ((x, b), n) in &self.num {
            if n.is_zero() {
                continue;
            }
            *div.entry(*x).or_insert_with(BigInt::zero) += n;
            let mut y = *x;
            y[*b] += 1;
            *div.entry(y).or_insert_with(BigInt::zero) -= n;
        }
        div
    }

    /// Exact convolution with the uniform measure on `Λ_l`, direction-wise:
    /// `(φ ∗ p_l)(x;b) = l^{-d} Σ_{z ∈ Λ_l} φ(x−z;b)`, via sliding window
    /// sums axis by axis.
    fn convolve_with_box(&self, l: usize) -> IntFlow {
        let d = self.d;
        let li = l as i64;
        if self.num.is_empty() {
            return IntFlow::zero(d);
        }
        let mut lo = [i64::MAX; MAX_D];
        let mut hi = [i64::MIN; MAX_D];
        for (x, _b) in self.num.keys() {
            for i in 0..d {
                lo[i] = lo[i].min(x[i]);
                hi[i] = hi[i].max(x[i] + li - 1);
            }
        }
        let mut size = [1usize; MAX_D];
        let mut total = 1usize;
        for i in 0..d {
            size[i] = (hi[i] - lo[i] + 1) as usize;
            total *= size[i];
        }
        let strides = {
            let mut s = [0usize; MAX_D];
            let mut acc = 1usize;
            for i in (0..d).rev() {
                s[i] = acc;
                acc *= size[i];
            }
            s
        };
        let index = |c: &Coord| -> usize {
            let mut idx = 0usize;
            for i in 0..d {
                idx += ((c[i] - lo[i]) as usize) * strides[i];
            }
            idx
        };
        let mut out = IntFlow::zero(d);
        out.den = &self.den * BigInt::from(l.pow(d as u32));
        for b in 0..d {
            let mut grid = vec![BigInt::zero(); total];
            let mut any = false;
            for ((x, eb), n) in &self.num {
                if *eb == b && !n.is_zero() {
                    grid[index(x)] = n.clone();
                    any = true;
                }
            }
            if !any {
                continue;
            }
            for axis in 0..d {
                let stride = strides[axis];
                let len = size[axis];
                let mut next = vec![BigInt::zero(); total];
                for idx in 0..total {
                    let pos = (idx / stride) % len;
                    let mut s = if pos > 0 {
                        next[idx - stride].clone()
                    } else {
                        BigInt::zero()
                    };
                    s += &grid[idx];
                    if pos >= l {
                        s -= &grid[idx - l * stride];
                    }
                    next[idx] = s;
                }
                grid = next;
            }
            for (idx, n) in grid.into_iter().enumerate() {
                if n.is_zero() {
                    continue;
                }
                let mut c = [0i64; MAX_D];
                for i in 0..d {
                    c[i] = lo[i] + ((idx / strides[i]) % size[i]) as i64;
                }
                out.num.insert((c, b), n);
            }
        }
        out
    }

    /// `self + other`, rescaling to the common denominator.
    fn add(&mut self, other: &IntFlow) {
        self.extend_denominator(&other.den);
        let factor = &self.den / &other.den;
        for ((x, b), n) in &other.num {
            if n.is_zero() {
                continue;
            }
            let slot = self.num.entry((*x, *b)).or_insert_with(BigInt::zero);
            *slot += n * &factor;
        }
    }
}

/// The scale function `g_d`: `g_1(ℓ) = ℓ`, `g_2(ℓ) = log ℓ` (natural log),
/// `g_3(ℓ) = 1`.
pub fn g_d(d: usize, l: usize) -> Result<f64> {
    match d {
        1 => Ok(l as f64),
        2 => {
            if l < 2 {
                return Err(Error::InvalidScale {
                    l,
                    reason: "g_2 requires l >= 2".into(),
                });
            }
            Ok((l as f64).ln())
        }
        3 => Ok(1.0),
        _ => Err(Error::InvalidDimension(d)),
    }
}

fn binom(n: usize, k: usize) -> BigInt {
    let mut out = BigInt::one();
    for i in 0..k {
        out = out * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    out
}

/// The combinatorial constant `C_d = sup_k (1/k) binom(d,k)^{-1} Σ_{i≥k}
/// binom(d,i)` bounding `ℓ^d ψ^ℓ`.
pub fn step_flow_constant(d: usize) -> f64 {
    (1..=d)
        .map(|k| {
            let tail: BigInt = (k..=d).map(|i| binom(d, i)).sum();
            let c = BigRational::new(tail, BigInt::from(k) * binom(d, k));
            rational_to_f64(&c)
        })
        .fold(0.0, f64::max)
}

/// Mass per site of the intermediate measure on the layer with `k`
/// coordinates equal to `ℓ-1`:
/// `a_k = ℓ^{-d} binom(d,k)^{-1} Σ_{i=k}^d binom(d,i) (ℓ-1)^{k-i}`.
fn layer_mass(d: usize, l: usize, k: usize) -> BigRational {
    let lm1 = BigInt::from(l - 1);
    let mut sum = BigRational::zero();
    for i in k..=d {
        sum += BigRational::new(binom(d, i), lm1.pow((i - k) as u32));
    }
    sum / BigRational::from(binom(d, k) * BigInt::from(l.pow(d as u32)))
}

fn step_flow_int(l: usize, d: usize) -> Result<IntFlow> {
    if d == 0 || d > MAX_D {
        return Err(Error::InvalidDimension(d));
    }
    if l < 2 {
        return Err(Error::InvalidScale {
            l,
            reason: "step flow requires l >= 2".into(),
        });
    }
    let li = l as i64;
    // Common denominator: l^d (l-1)^d · k · binom over the layers; use the
    // product of per-layer denominators' lcm built on the fly.
    let mut flow = IntFlow::zero(d);
    for k in 1..=d {
        let a_k = layer_mass(d, l, k);
        let per_dir = a_k / BigRational::from(BigInt::from(k));
        // Denominator of all entries of this layer: den(per_dir) · (l-1).
        flow.extend_denominator(&(per_dir.denom() * BigInt::from(l - 1)));
        for x in cube_points(l, d) {
            let boundary: Vec<usize> = (0..d).filter(|&i| x[i] == li - 1).collect();
            if boundary.len() != k {
                continue;
            }
            for &b in &boundary {
                for j in 1..l {
                    let frac = BigRational::new(BigInt::from(l - j), BigInt::from(l - 1));
                    let v = -(&frac * &per_dir);
                    let scaled = v.numer() * (&flow.den / v.denom());
                    let mut y = x;
                    y[b] -= j as i64;
                    let slot = flow.num.entry((y, b)).or_insert_with(BigInt::zero);
                    *slot += scaled;
                }
            }
        }
    }
    Ok(flow)
}

/// The flow `ψ^ℓ` connecting `p_ℓ` to `p_{ℓ-1}`, supported in `Λ_ℓ`, with
/// `|ψ^ℓ(x;b)| ≤ C_d ℓ^{-d}`.
///
/// Mass is drained layer by layer: each site with `k` coordinates equal to
/// `ℓ-1` sends its (equidistributed) mass down the `k` inward segments of
/// length `ℓ-1`, leaving a uniform deposit behind.
pub fn step_flow(l: usize, d: usize) -> Result<Flow> {
    Ok(step_flow_int(l, d)?.to_flow())
}

fn point_to_cube_int(l: usize, d: usize) -> Result<IntFlow> {
    if d == 0 || d > MAX_D {
        return Err(Error::InvalidDimension(d));
    }
    if l == 0 {
        return Err(Error::InvalidScale {
            l,
            reason: "l must be >= 1".into(),
        });
    }
    let mut flow = IntFlow::zero(d);
    if l == 1 {
        return Ok(flow); // δ_0 = p_1
    }
    if d == 1 {
        flow.den = BigInt::from(l);
        for x in 0..=(l - 2) {
            flow.num
                .insert(([x as i64, 0, 0], 0), BigInt::from(l - 1 - x));
        }
        return Ok(flow);
    }
    for k in 2..=l {
        let mut step = step_flow_int(k, d)?;
        for n in step.num.values_mut() {
            *n = -n.clone();
        }
        flow.add(&step);
    }
    Ok(flow)
}

/// The flow `ψ̃^ℓ` connecting the point mass at the origin to `p_ℓ`.
///
/// In `d = 1` the cumulative sums `ψ̃^ℓ(x;e_1) = (ℓ-1-x)/ℓ`, `x = 0..ℓ-2`,
/// satisfy the divergence identity by telescoping. In `d ≥ 2` the step flows
/// are chained: `ψ̃^ℓ = -Σ_{k=2}^ℓ ψ^k`.
pub fn point_to_cube_flow(l: usize, d: usize) -> Result<Flow> {
    Ok(point_to_cube_int(l, d)?.to_flow())
}

/// The flow `φ_ℓ` connecting the point mass at the origin to `q_ℓ`, supported
/// in `Λ_{2ℓ-1}`.
///
/// `ψ̃^ℓ` takes `δ_0` to `p_ℓ` and the convolution `ψ̃^ℓ ∗ p_ℓ` takes `p_ℓ`
/// to `q_ℓ`; their sum connects `δ_0` to `q_ℓ` exactly.
pub fn point_to_qell_flow(l: usize, d: usize) -> Result<Flow> {
    let psi = point_to_cube_int(l, d)?;
    if l == 1 {
        return Ok(psi.to_flow()); // empty
    }
    let mut total = psi.convolve_with_box(l);
    total.add(&psi);
    Ok(total.to_flow())
}

/// `ψ̃^ℓ ∗ p_ℓ` alone (connects `p_ℓ` to `q_ℓ`); exposed for the Jensen
/// energy comparison `Σ (ψ̃ ∗ p_ℓ)² ≤ Σ ψ̃²`.
pub fn cube_to_qell_flow(l: usize, d: usize) -> Result<Flow> {
    Ok(point_to_cube_int(l, d)?.convolve_with_box(l).to_flow())
}

/// One-pass summary of a flow `φ_ℓ` against the target divergence
/// `δ_0 − q_ℓ`: energies, sup norm, exactness of the divergence and the
/// support inclusion in `Λ_{2ℓ-1}`.
#[derive(Debug, Clone)]
pub struct FlowReport {
    pub d: usize,
    pub l: usize,
    pub sum_sq: f64,
    pub sum_abs: f64,
    pub max_abs: f64,
    pub divergence_exact: bool,
    pub support_ok: bool,
}

fn report_int(flow: &IntFlow, l: usize, d: usize, q: &BoxMeasure) -> FlowReport {
    let den = &flow.den;
    let m = 2 * l as i64 - 1;
    let mut sum_sq_int = BigInt::zero();
    let mut sum_abs_int = BigInt::zero();
    let mut max_abs_int = BigInt::zero();
    let mut support_ok = true;
    for ((x, b), n) in &flow.num {
        if n.is_zero() {
            continue;
        }
        sum_sq_int += n * n;
        let a = n.abs();
        if a > max_abs_int {
            max_abs_int = a.clone();
        }
        sum_abs_int += a;
        let inside = (0..d).all(|i| {
            let ci = x[i] + if i == *b { 1 } else { 0 };
            0 <= x[i] && x[i] < m && 0 <= ci && ci < m
        });
        support_ok &= inside;
    }
    let div = flow.divergence_int();
    let mut keys: std::collections::BTreeSet<Coord> = div.keys().copied().collect();
    keys.extend(q.entries().keys().copied());
    keys.insert([0; MAX_D]);
    // Cross-multiplied equality with δ_0 − q, no per-entry reduction.
    let divergence_exact = keys.into_iter().all(|z| {
        let mut target = -q.weight(&z);
        if z == [0; MAX_D] {
            target += BigRational::one();
        }
        let lhs = div.get(&z).cloned().unwrap_or_else(BigInt::zero) * target.denom();
        let rhs = target.numer() * den;
        lhs == rhs
    });
    let inv_den = rational_to_f64(&BigRational::new(BigInt::one(), den.clone()));
    let big_f64 = |x: &BigInt| rational_to_f64(&BigRational::new(x.clone(), BigInt::one()));
    FlowReport {
        d,
        l,
        sum_sq: big_f64(&sum_sq_int) * inv_den * inv_den,
        sum_abs: big_f64(&sum_abs_int) * inv_den,
        max_abs: big_f64(&max_abs_int) * inv_den,
        divergence_exact,
        support_ok,
    }
}

/// Report for a single already-built flow.
pub fn qell_report(flow: &Flow, l: usize, d: usize, q: &BoxMeasure) -> FlowReport {
    report_int(&IntFlow::from_flow(flow), l, d, q)
}

/// Reports for all flows `φ_ℓ`, `ℓ = 2..=lmax`, built incrementally: `ψ̃^ℓ`
/// gains one step flow per scale instead of being rebuilt from scratch.
pub fn qell_sweep(d: usize, lmax: usize) -> Result<Vec<FlowReport>> {
    let mut out = Vec::with_capacity(lmax.saturating_sub(1));
    let mut psi = IntFlow::zero(d);
    for l in 2..=lmax {
        if d == 1 {
            psi = point_to_cube_int(l, 1)?;
        } else {
            let mut step = step_flow_int(l, d)?;
            for n in step.num.values_mut() {
                *n = -n.clone();
            }
            psi.add(&step);
        }
        let mut phi = psi.convolve_with_box(l);
        phi.add(&psi);
        let (_, ql) = crate::lattice::box_measures(l, d)?;
        out.push(report_int(&phi, l, d, &ql));
    }
    Ok(out)
}

/// Float edge values of `φ_ℓ`, memoized per `(ℓ, d)`: the observable layer
/// reuses one flow across every site of a functional evaluation.
pub fn qell_flow_f64_cached(
    l: usize,
    d: usize,
) -> Result<std::sync::Arc<Vec<(Coord, usize, f64)>>> {
    use std::collections::HashMap;
    use std::sync::{Arc, Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Vec<(Coord, usize, f64)>>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&(l, d)) {
        return Ok(hit.clone());
    }
    let entries = Arc::new(point_to_qell_flow(l, d)?.entries_f64());
    cache.lock().unwrap().insert((l, d), entries.clone());
    Ok(entries)
}

/// Check `divergence(flow) == p - q` exactly.
pub fn connects(flow: &Flow, p: &BoxMeasure, q: &BoxMeasure) -> bool {
    let div = flow.divergence();
    let mut keys: std::collections::BTreeSet<Coord> = div.keys().copied().collect();
    keys.extend(p.entries().keys().copied());
    keys.extend(q.entries().keys().copied());
    keys.into_iter().all(|z| {
        let lhs = p.weight(&z) - q.weight(&z);
        let rhs = div.get(&z).cloned().unwrap_or_else(BigRational::zero);
        lhs == rhs
    })
}

/// Point mass at the origin as a `BoxMeasure`.
pub fn delta_origin(d: usize) -> BoxMeasure {
    let mut m = BTreeMap::new();
    m.insert([0i64; MAX_D], BigRational::one());
    BoxMeasure::from_entries(d, m).expect("point mass is a probability measure")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::box_measures;

    #[test]
    fn empty_flow_divergence_is_zero() {
        let f = Flow::zero(2);
        assert!(f.divergence().is_empty());
    }

    #[test]
    fn single_edge_divergence() {
        let mut f = Flow::zero(1);
        f.accumulate([0, 0, 0], 0, BigRational::one());
        let div = f.divergence();
        assert_eq!(div[&[0, 0, 0]], BigRational::one());
        assert_eq!(div[&[1, 0, 0]], -BigRational::one());
        let total: BigRational = div.values().cloned().sum();
        assert!(total.is_zero());
    }

    #[test]
    fn flow_addition_divergence_is_additive() {
        let f = step_flow(3, 2).unwrap();
        let g = step_flow(2, 2).unwrap();
        let sum = f.add(&g);
        let mut expected = f.divergence();
        for (z, v) in g.divergence() {
            let slot = expected.entry(z).or_insert_with(BigRational::zero);
            *slot += v;
        }
        expected.retain(|_, v| !v.is_zero());
        assert_eq!(sum.divergence(), expected);
        // Adding the negation cancels the divergence entirely.
        let cancelled = sum.add(&sum.negate());
        assert!(cancelled.divergence().is_empty());
    }

    #[test]
    fn step_flow_d1_l2() {
        let f = step_flow(2, 1).unwrap();
        assert_eq!(
            f.value(&[0, 0, 0], 0),
            -BigRational::new(1.into(), 2.into())
        );
        let (p2, _) = box_measures(2, 1).unwrap();
        let (p1, _) = box_measures(1, 1).unwrap();
        assert!(connects(&f, &p2, &p1));
    }

    #[test]
    fn step_flow_connects_and_bounded_sweep() {
        for d in 1..=3 {
            let c_d = step_flow_constant(d);
            let lmax = if d == 3 { 16 } else { 32 };
            for l in 2..=lmax {
                let f = step_flow(l, d).unwrap();
                let (pl, _) = box_measures(l, d).unwrap();
                let (plm1, _) = box_measures(l - 1, d).unwrap();
                assert!(connects(&f, &pl, &plm1), "d={d} l={l}");
                assert!(f.supported_in_cube(l as i64), "d={d} l={l} support");
                let scaled = f.max_abs_f64() * (l as f64).powi(d as i32);
                assert!(
                    scaled <= c_d + 1e-12,
                    "d={d} l={l}: max |psi| l^d = {scaled} > C_d = {c_d}"
                );
            }
        }
    }

    #[test]
    fn step_flow_composition_telescopes() {
        for d in 1..=2 {
            let l = 6;
            let mut total = Flow::zero(d);
            for k in 2..=l {
                total = total.add(&step_flow(k, d).unwrap());
            }
            let (pl, _) = box_measures(l, d).unwrap();
            let (p1, _) = box_measures(1, d).unwrap();
            assert!(connects(&total, &pl, &p1));
        }
    }

    #[test]
    fn point_to_cube_d1_l3_values() {
        let f = point_to_cube_flow(3, 1).unwrap();
        assert_eq!(f.value(&[0, 0, 0], 0), BigRational::new(2.into(), 3.into()));
        assert_eq!(f.value(&[1, 0, 0], 0), BigRational::new(1.into(), 3.into()));
        assert_eq!(f.entries().len(), 2);
    }

    #[test]
    fn point_to_cube_connects_sweep() {
        for d in 1..=3 {
            let lmax = if d == 3 { 12 } else { 24 };
            for l in 1..=lmax {
                let f = point_to_cube_flow(l, d).unwrap();
                let (pl, _) = box_measures(l, d).unwrap();
                assert!(connects(&f, &delta_origin(d), &pl), "d={d} l={l}");
                assert!(f.supported_in_cube(l as i64), "d={d} l={l} support");
            }
        }
    }

    #[test]
    fn point_to_qell_l1_empty() {
        for d in 1..=3 {
            assert!(point_to_qell_flow(1, d).unwrap().entries().is_empty());
        }
    }

    #[test]
    fn point_to_qell_d1_l2_divergence() {
        let f = point_to_qell_flow(2, 1).unwrap();
        let (_, q2) = box_measures(2, 1).unwrap();
        assert!(connects(&f, &delta_origin(1), &q2));
    }

    #[test]
    fn point_to_qell_connects_sweep() {
        for d in 1..=3 {
            let lmax = if d == 3 { 8 } else { 16 };
            for l in 1..=lmax {
                let f = point_to_qell_flow(l, d).unwrap();
                let (_, ql) = box_measures(l, d).unwrap();
                assert!(connects(&f, &delta_origin(d), &ql), "d={d} l={l}");
                assert!(f.supported_in_cube(2 * l as i64 - 1), "d={d} l={l}");
            }
        }
    }

    #[test]
    fn sweep_matches_single_flow_reports() {
        for d in 1..=3 {
            let reports = qell_sweep(d, 6).unwrap();
            for r in &reports {
                let phi = point_to_qell_flow(r.l, d).unwrap();
                let (_, ql) = box_measures(r.l, d).unwrap();
                let single = qell_report(&phi, r.l, d, &ql);
                assert!(r.divergence_exact && single.divergence_exact);
                assert!((r.sum_sq - single.sum_sq).abs() < 1e-12);
                assert!((r.sum_abs - single.sum_abs).abs() < 1e-12);
                assert!((r.max_abs - single.max_abs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn convolution_jensen_bound() {
        for d in 1..=2 {
            for l in 2..=12 {
                let psi = point_to_cube_flow(l, d).unwrap();
                let conv = cube_to_qell_flow(l, d).unwrap();
                assert!(conv.sum_sq() <= psi.sum_sq(), "Jensen fails at d={d} l={l}");
            }
        }
    }

    #[test]
    fn g_d_values() {
        assert_eq!(g_d(1, 10).unwrap(), 10.0);
        assert!((g_d(2, 10).unwrap() - 10f64.ln()).abs() < 1e-15);
        assert_eq!(g_d(3, 77).unwrap(), 1.0);
        assert!(g_d(2, 1).is_err());
    }

    #[test]
    fn step_constants() {
        assert_eq!(step_flow_constant(1), 1.0);
        assert_eq!(step_flow_constant(2), 1.5);
        assert!((step_flow_constant(3) - 7.0 / 3.0).abs() < 1e-15);
    }
}
