//! Discrete torus geometry, cubes `Λ_ℓ`, box measures `p_ℓ`, `q_ℓ` and
//! `ℓ`-sparse partitions.
//!
//! The torus `T_n^d = (Z/nZ)^d` is indexed row-major (the last coordinate
//! varies fastest), so site order is canonical and CSV output reproducible.
//! Distances are measured in the quotient metric: per coordinate
//! `min(r, n-r)`, then the sup over coordinates. Box measures are stored as
//! exact rationals; floating point only appears at the module boundary.

use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::error::{Error, Result};

/// Maximum supported dimension.
pub const MAX_D: usize = 3;

/// A lattice point of `Z^d`, padded with zeros beyond dimension `d`.
pub type Coord = [i64; MAX_D];

/// The discrete torus `T_n^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Torus {
    d: usize,
    n: usize,
}

impl Torus {
    pub fn new(d: usize, n: usize) -> Result<Self> {
        if d == 0 || d > MAX_D {
            return Err(Error::InvalidDimension(d));
        }
        if n < 2 {
            return Err(Error::InvalidSideLength(n));
        }
        Ok(Torus { d, n })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.n
    }

    /// Total number of sites `n^d`.
    #[inline]
    pub fn sites(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    /// Coordinates of a site index. Row-major: the last coordinate varies
    /// fastest.
    #[inline]
    pub fn decode(&self, site: usize) -> Coord {
        debug_assert!(site < self.sites());
        let mut c = [0i64; MAX_D];
        let mut rest = site;
        for i in (0..self.d).rev() {
            c[i] = (rest % self.n) as i64;
            rest /= self.n;
        }
        c
    }

    /// Site index of coordinates already reduced to `0..n`.
    #[inline]
    pub fn encode(&self, c: &Coord) -> usize {
        let mut site = 0usize;
        for i in 0..self.d {
            debug_assert!(0 <= c[i] && c[i] < self.n as i64);
            site = site * self.n + c[i] as usize;
        }
        site
    }

    /// Shift a site by an integer offset, wrapping each coordinate mod `n`.
    #[inline]
    pub fn wrap(&self, site: usize, offset: &Coord) -> usize {
        let n = self.n as i64;
        let c = self.decode(site);
        let mut w = [0i64; MAX_D];
        for i in 0..self.d {
            w[i] = (c[i] + offset[i]).rem_euclid(n);
        }
        self.encode(&w)
    }

    /// Neighbor `site ± e_dir`.
    #[inline]
    pub fn neighbor(&self, site: usize, dir: usize, forward: bool) -> usize {
        debug_assert!(dir < self.d);
        let mut off = [0i64; MAX_D];
        off[dir] = if forward { 1 } else { -1 };
        self.wrap(site, &off)
    }

    /// Sup-distance in the quotient metric.
    pub fn dist_inf(&self, a: usize, b: usize) -> usize {
        let ca = self.decode(a);
        let cb = self.decode(b);
        let n = self.n as i64;
        let mut best = 0i64;
        for i in 0..self.d {
            let r = (ca[i] - cb[i]).rem_euclid(n);
            best = best.max(r.min(n - r));
        }
        best as usize
    }

    /// Continuous embedding `x/n` of a site into `[0,1)^d`.
    pub fn embed(&self, site: usize) -> [f64; MAX_D] {
        let c = self.decode(site);
        let mut x = [0.0; MAX_D];
        for i in 0..self.d {
            x[i] = c[i] as f64 / self.n as f64;
        }
        x
    }
}

/// An ordered, duplicate-free set of sites of a fixed torus.
#[derive(Debug, Clone)]
pub struct SiteSet {
    torus: Torus,
    sites: Vec<usize>,
}

impl SiteSet {
    pub fn new(torus: Torus, sites: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; torus.sites()];
        for &s in &sites {
            if s >= torus.sites() {
                return Err(Error::invalid_input(format!("site {s} out of range")));
            }
            if seen[s] {
                return Err(Error::invalid_input(format!("duplicate site {s}")));
            }
            seen[s] = true;
        }
        Ok(SiteSet { torus, sites })
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Whether every pair of distinct sites is at quotient sup-distance `>= l`.
    pub fn is_sparse(&self, l: usize) -> bool {
        for (i, &a) in self.sites.iter().enumerate() {
            for &b in &self.sites[i + 1..] {
                if self.torus.dist_inf(a, b) < l {
                    return false;
                }
            }
        }
        true
    }
}

/// Per-dimension decomposition of `0..n` into `⌊n/l⌋` contiguous blocks of
/// near-equal length, each of length `>= l`.
fn blocks(n: usize, l: usize) -> (usize, usize, usize) {
    let a = n / l; // number of blocks
    let base = n / a; // short block length (>= l)
    let rem = n % a; // first `rem` blocks get one extra site
    (a, base, rem)
}

#[inline]
fn block_offset(c: usize, base: usize, rem: usize) -> usize {
    let long = base + 1;
    if c < rem * long {
        c % long
    } else {
        (c - rem * long) % base
    }
}

/// Partition of the torus into at most `(d+1) l^d` classes, each `l`-sparse in
/// the quotient metric.
///
/// Each coordinate axis is cut into `⌊n/l⌋` contiguous blocks of length `l` or
/// `l+1` (lengths as equal as possible when `n mod ⌊n/l⌋ ≠ 0`); a class
/// collects the sites sharing the same within-block offset tuple. Distinct
/// sites of a class either agree in a coordinate or sit in different blocks of
/// that axis, hence are at least one whole block apart, also across the wrap.
pub fn sparse_partition(torus: &Torus, l: usize) -> Result<Vec<SiteSet>> {
    let n = torus.side();
    if l == 0 {
        return Err(Error::InvalidScale {
            l,
            reason: "l must be >= 1".into(),
        });
    }
    if 2 * l >= n {
        return Err(Error::ScaleTooLarge { l, n });
    }
    let (_a, base, rem) = blocks(n, l);
    let max_len = if rem > 0 { base + 1 } else { base };
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for site in 0..torus.sites() {
        let c = torus.decode(site);
        let mut key = 0usize;
        for i in 0..torus.dim() {
            key = key * max_len + block_offset(c[i] as usize, base, rem);
        }
        classes.entry(key).or_default().push(site);
    }
    classes
        .into_values()
        .map(|sites| SiteSet::new(*torus, sites))
        .collect()
}

/// Upper bound on the class count guaranteed by the partition.
pub fn sparse_partition_bound(d: usize, l: usize) -> usize {
    (d + 1) * l.pow(d as u32)
}

/// A finitely supported probability measure on `Z^d` with exact rational
/// weights.
#[derive(Debug, Clone)]
pub struct BoxMeasure {
    d: usize,
    entries: BTreeMap<Coord, BigRational>,
}

impl BoxMeasure {
    pub fn from_entries(d: usize, entries: BTreeMap<Coord, BigRational>) -> Result<Self> {
        let mut total = BigRational::zero();
        for w in entries.values() {
            if w.is_negative() {
                return Err(Error::invalid_input("negative box-measure weight"));
            }
            total += w;
        }
        if !total.is_one() {
            return Err(Error::invalid_input("box-measure weights must sum to 1"));
        }
        Ok(BoxMeasure { d, entries })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &BTreeMap<Coord, BigRational> {
        &self.entries
    }

    pub fn weight(&self, z: &Coord) -> BigRational {
        self.entries
            .get(z)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// Weights converted to `f64` at the module boundary.
    pub fn entries_f64(&self) -> Vec<(Coord, f64)> {
        self.entries
            .iter()
            .map(|(z, w)| (*z, rational_to_f64(w)))
            .collect()
    }

    pub fn max_weight(&self) -> BigRational {
        self.entries
            .values()
            .cloned()
            .max()
            .unwrap_or_else(BigRational::zero)
    }

    /// Whether the support is contained in the cube `Λ_m = {0,…,m-1}^d`.
    pub fn supported_in_cube(&self, m: i64) -> bool {
        self.entries
            .keys()
            .all(|z| z[..self.d].iter().all(|&zi| 0 <= zi && zi < m))
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    // Good enough for the magnitudes appearing here (|num|, |den| < 2^1000).
    let num = r.numer();
    let den = r.denom();
    bigint_to_f64(num) / bigint_to_f64(den)
}

fn bigint_to_f64(x: &BigInt) -> f64 {
    let (sign, digits) = x.to_radix_be(256);
    let mut v = 0.0f64;
    for dgt in digits {
        v = v * 256.0 + dgt as f64;
    }
    match sign {
        num::bigint::Sign::Minus => -v,
        _ => v,
    }
}

/// The uniform measure `p_ℓ` on `Λ_ℓ` and its self-convolution
/// `q_ℓ = p_ℓ ∗ p_ℓ`, supported in `Λ_{2ℓ-1}` with `max q_ℓ ≤ ℓ^{-d}`.
pub fn box_measures(l: usize, d: usize) -> Result<(BoxMeasure, BoxMeasure)> {
    if d == 0 || d > MAX_D {
        return Err(Error::InvalidDimension(d));
    }
    if l == 0 {
        return Err(Error::InvalidScale {
            l,
            reason: "l must be >= 1".into(),
        });
    }
    let li = l as i64;
    let vol = BigInt::from(l.pow(d as u32));
    let mut p = BTreeMap::new();
    for z in cube_points(l, d) {
        p.insert(z, BigRational::new(BigInt::one(), vol.clone()));
    }
    // q_l(z) = Π_i (l - |z_i - (l-1)|) / l^{2d} on Λ_{2l-1}.
    let vol2 = &vol * &vol;
    let mut q = BTreeMap::new();
    for z in cube_points(2 * l - 1, d) {
        let mut count = BigInt::one();
        for zi in z.iter().take(d) {
            count *= BigInt::from(li - (zi - (li - 1)).abs());
        }
        q.insert(z, BigRational::new(count, vol2.clone()));
    }
    Ok((
        BoxMeasure::from_entries(d, p)?,
        BoxMeasure::from_entries(d, q)?,
    ))
}

/// All points of the cube `Λ_m = {0,…,m-1}^d`, in lexicographic order.
pub fn cube_points(m: usize, d: usize) -> Vec<Coord> {
    let mut out = Vec::with_capacity(m.pow(d as u32));
    let mut c = [0i64; MAX_D];
    loop {
        out.push(c);
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            c[i] += 1;
            if c[i] < m as i64 {
                break;
            }
            c[i] = 0;
        }
    }
}
