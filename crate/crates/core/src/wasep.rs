//! Exact continuous-time simulation of the weakly asymmetric exclusion
//! process.
//!
//! Oriented jump rates on the dual lattice:
//!
//! ```text
//! r_n(x, x+b) = n² max{1/2, 1 + F_b^n(x)/n},
//! r_n(x+b, x) = n² max{1/2, 1 − F_b^n(x)/n},
//! ```
//!
//! a particle at `x` jumps to an empty neighbor `y` at rate `r_n(x,y)`.
//! Sampling uses total-rate thinning: every particle proposes at the uniform
//! per-edge bound `R = max rate`, a proposal picks a uniform particle and a
//! uniform oriented direction, and is accepted with probability
//! `rate/R` if the target is empty. Rates are static and tightly bounded, so
//! the rejection overhead stays `O(‖F‖_∞/n)`.

use std::io::{Read, Write};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hydro::{sample_dual_field, DensityField, VectorFieldSpec};
use crate::lattice::Torus;

/// Occupancy of every torus site, one bit per site, with a cached particle
/// count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    torus: Torus,
    words: Vec<u64>,
    count: usize,
}

impl Configuration {
    pub fn empty(torus: Torus) -> Self {
        let words = vec![0u64; torus.sites().div_ceil(64)];
        Configuration {
            torus,
            words,
            count: 0,
        }
    }

    pub fn full(torus: Torus) -> Self {
        let mut c = Configuration::empty(torus);
        for s in 0..torus.sites() {
            c.set(s, true);
        }
        c
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    #[inline]
    pub fn occupied(&self, site: usize) -> bool {
        self.words[site / 64] >> (site % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, site: usize, value: bool) {
        let (w, b) = (site / 64, site % 64);
        let old = self.words[w] >> b & 1 == 1;
        if old == value {
            return;
        }
        self.words[w] ^= 1 << b;
        if value {
            self.count += 1;
        } else {
            self.count -= 1;
        }
    }

    /// Number of particles; invariant under the dynamics.
    pub fn particles(&self) -> usize {
        self.count
    }

    pub fn occupied_sites(&self) -> Vec<usize> {
        (0..self.torus.sites())
            .filter(|&s| self.occupied(s))
            .collect()
    }

    /// Bit-packed words, little-endian within 64-bit words, site-index order.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn from_words(torus: Torus, words: Vec<u64>) -> Result<Self> {
        if words.len() != torus.sites().div_ceil(64) {
            return Err(Error::invalid_input("word count mismatch"));
        }
        let sites = torus.sites();
        if sites % 64 != 0 && words[sites / 64] >> (sites % 64) != 0 {
            return Err(Error::invalid_input("stray bits beyond site count"));
        }
        let count = words.iter().map(|w| w.count_ones() as usize).sum();
        Ok(Configuration {
            torus,
            words,
            count,
        })
    }

    /// Density as `occupied / sites`.
    pub fn density(&self) -> f64 {
        self.count as f64 / self.torus.sites() as f64
    }
}

/// Static oriented jump rates (values `≥ n²/2`), indexed by the edge base
/// site and direction.
#[derive(Debug, Clone)]
pub struct RateTable {
    torus: Torus,
    forward: Vec<f64>,
    backward: Vec<f64>,
    max_rate: f64,
    cap_active: bool,
}

impl RateTable {
    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    /// Rate of the jump `x → x+b`.
    #[inline]
    pub fn forward(&self, x: usize, b: usize) -> f64 {
        self.forward[x * self.torus.dim() + b]
    }

    /// Rate of the jump `x+b → x`.
    #[inline]
    pub fn backward(&self, x: usize, b: usize) -> f64 {
        self.backward[x * self.torus.dim() + b]
    }

    /// Largest oriented-edge rate (the thinning bound).
    pub fn max_rate(&self) -> f64 {
        self.max_rate
    }

    /// Whether the `max{1/2, ·}` cap was ever active (only possible for
    /// `n < 2‖F‖_∞`).
    pub fn cap_active(&self) -> bool {
        self.cap_active
    }
}

/// Evaluate the capped rate formula on every oriented edge.
pub fn build_rates(spec: &VectorFieldSpec, torus: &Torus) -> RateTable {
    let d = torus.dim();
    let n = torus.side() as f64;
    let n2 = n * n;
    let dual = sample_dual_field(spec, torus);
    let mut forward = vec![0.0; torus.sites() * d];
    let mut backward = vec![0.0; torus.sites() * d];
    let mut max_rate = 0.0f64;
    let mut cap_active = false;
    for x in 0..torus.sites() {
        for b in 0..d {
            let f = dual.get(x, b);
            let fwd = 0.5f64.max(1.0 + f / n);
            let bwd = 0.5f64.max(1.0 - f / n);
            cap_active |= fwd == 0.5 || bwd == 0.5;
            forward[x * d + b] = n2 * fwd;
            backward[x * d + b] = n2 * bwd;
            max_rate = max_rate.max(n2 * fwd).max(n2 * bwd);
        }
    }
    let table = RateTable {
        torus: *torus,
        forward,
        backward,
        max_rate,
        cap_active,
    };
    // For n ≥ 2‖F‖_∞ the cap never binds.
    debug_assert!(n < 2.0 * dual.max_abs() || !table.cap_active);
    table
}

/// One accepted jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub from: usize,
    pub to: usize,
}

/// A simulated path: initial configuration, requested snapshots, and
/// (optionally) the full ordered event list.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial: Configuration,
    pub snapshots: Vec<(f64, Configuration)>,
    pub events: Option<Vec<Event>>,
    pub t_final: f64,
}

impl Trajectory {
    pub fn final_configuration(&self) -> &Configuration {
        self.snapshots
            .last()
            .map(|(_, c)| c)
            .unwrap_or(&self.initial)
    }
}

/// Independent Bernoulli(`u_x`) occupancy per site.
pub fn sample_profile_measure(u: &DensityField, rng: &mut ChaCha8Rng) -> Configuration {
    let mut c = Configuration::empty(*u.torus());
    for (site, &p) in u.values().iter().enumerate() {
        if rng.random::<f64>() < p {
            c.set(site, true);
        }
    }
    c
}

/// Statistically exact CTMC sample via thinning.
///
/// `snapshot_times` must be sorted within `[0, t_final]`; the state at each
/// requested time is recorded. With `keep_events` the full jump list is
/// retained for path functionals.
pub fn simulate(
    eta0: &Configuration,
    rates: &RateTable,
    t_final: f64,
    rng: &mut ChaCha8Rng,
    snapshot_times: &[f64],
    keep_events: bool,
) -> Result<Trajectory> {
    let torus = *eta0.torus();
    let d = torus.dim();
    if snapshot_times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid_input("snapshot times must be sorted"));
    }
    if snapshot_times
        .iter()
        .any(|&s| !(0.0..=t_final + 1e-12).contains(&s))
    {
        return Err(Error::invalid_input("snapshot times outside [0, T]"));
    }

    let mut eta = eta0.clone();
    let n_particles = eta.particles();
    let mut particles = eta.occupied_sites();
    let mut events = Vec::new();
    let mut snapshots = Vec::with_capacity(snapshot_times.len());
    let mut next_snapshot = 0usize;
    let mut t = 0.0f64;

    let edge_bound = rates.max_rate();
    let total_rate = n_particles as f64 * 2.0 * d as f64 * edge_bound;
    if total_rate > 0.0 && n_particles < torus.sites() {
        loop {
            let dt = -rng.random::<f64>().max(f64::MIN_POSITIVE).ln() / total_rate;
            let t_next = t + dt;
            while next_snapshot < snapshot_times.len() && snapshot_times[next_snapshot] <= t_next {
                snapshots.push((snapshot_times[next_snapshot], eta.clone()));
                next_snapshot += 1;
            }
            if t_next > t_final {
                break;
            }
            t = t_next;
            // Uniform proposal: particle, direction, orientation.
            let p_idx = rng.random_range(0..n_particles);
            let from = particles[p_idx];
            let dir = rng.random_range(0..2 * d);
            let (b, fwd) = (dir / 2, dir % 2 == 0);
            let to = torus.neighbor(from, b, fwd);
            if eta.occupied(to) {
                continue;
            }
            let rate = if fwd {
                rates.forward(from, b)
            } else {
                // Edge base is the target for a backward jump.
                rates.backward(to, b)
            };
            if rate < edge_bound && rng.random::<f64>() * edge_bound >= rate {
                continue;
            }
            eta.set(from, false);
            eta.set(to, true);
            particles[p_idx] = to;
            debug_assert_eq!(eta.particles(), n_particles);
            if keep_events {
                events.push(Event { time: t, from, to });
            }
        }
    }
    while next_snapshot < snapshot_times.len() {
        snapshots.push((snapshot_times[next_snapshot], eta.clone()));
        next_snapshot += 1;
    }
    Ok(Trajectory {
        initial: eta0.clone(),
        snapshots,
        events: keep_events.then_some(events),
        t_final,
    })
}

/// Snapshot CSV: `t,site,occupancy` rows.
pub fn write_snapshots_csv(traj: &Trajectory, mut w: impl Write) -> Result<()> {
    writeln!(w, "t,site,occupancy")?;
    for (t, config) in &traj.snapshots {
        for site in 0..config.torus().sites() {
            writeln!(w, "{t},{site},{}", config.occupied(site) as u8)?;
        }
    }
    Ok(())
}

const BINARY_MAGIC: &[u8; 8] = b"WASEPTRJ";

/// Compact binary form: header `(d, n, T, seed)`, then per snapshot the time
/// and the bit-packed occupancy words (little-endian).
pub fn write_snapshots_binary(traj: &Trajectory, seed: u64, mut w: impl Write) -> Result<()> {
    let torus = *traj.initial.torus();
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(torus.dim() as u32).to_le_bytes())?;
    w.write_all(&(torus.side() as u32).to_le_bytes())?;
    w.write_all(&traj.t_final.to_le_bytes())?;
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&(traj.snapshots.len() as u32).to_le_bytes())?;
    for (t, config) in &traj.snapshots {
        w.write_all(&t.to_le_bytes())?;
        for word in config.words() {
            w.write_all(&word.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Parse the compact binary form; returns `(trajectory, seed)`.
pub fn read_snapshots_binary(mut r: impl Read) -> Result<(Trajectory, u64)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::invalid_input("bad magic in trajectory file"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let t_final = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    r.read_exact(&mut b4)?;
    let count = u32::from_le_bytes(b4) as usize;
    let torus = Torus::new(d, n)?;
    let words_per = torus.sites().div_ceil(64);
    let mut snapshots = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        let t = f64::from_le_bytes(b8);
        let mut words = Vec::with_capacity(words_per);
        for _ in 0..words_per {
            r.read_exact(&mut b8)?;
            words.push(u64::from_le_bytes(b8));
        }
        snapshots.push((t, Configuration::from_words(torus, words)?));
    }
    let initial = snapshots
        .first()
        .map(|(_, c)| c.clone())
        .unwrap_or_else(|| Configuration::empty(torus));
    Ok((
        Trajectory {
            initial,
            snapshots,
            events: None,
            t_final,
        },
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hydro::FourierTerm;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn rate_examples() {
        // Constant dual field via a constant vector field.
        let t = Torus::new(1, 100).unwrap();
        let spec = VectorFieldSpec::Constant {
            value: [0.5, 0.0, 0.0],
        };
        let rates = build_rates(&spec, &t);
        assert!((rates.forward(3, 0) - 10050.0).abs() < 1e-9);
        assert!((rates.backward(3, 0) - 9950.0).abs() < 1e-9);
        assert!(!rates.cap_active());

        let t2 = Torus::new(1, 2).unwrap();
        let spec10 = VectorFieldSpec::Constant {
            value: [10.0, 0.0, 0.0],
        };
        let capped = build_rates(&spec10, &t2);
        assert!((capped.forward(0, 0) - 24.0).abs() < 1e-12);
        assert!((capped.backward(0, 0) - 2.0).abs() < 1e-12);
        assert!(capped.cap_active());

        let zero = build_rates(&VectorFieldSpec::Zero, &t);
        for x in 0..100 {
            assert_eq!(zero.forward(x, 0), 10000.0);
            assert_eq!(zero.backward(x, 0), 10000.0);
        }
    }

    #[test]
    fn cap_inactive_for_large_n_sweep() {
        let spec = VectorFieldSpec::Fourier {
            components: vec![vec![FourierTerm {
                mode: [1, 0, 0],
                cos: 0.4,
                sin: 1.1,
            }]],
        };
        for n in [8usize, 16, 32] {
            let t = Torus::new(1, n).unwrap();
            let rates = build_rates(&spec, &t);
            assert!(!rates.cap_active(), "cap active at n={n}");
        }
    }

    #[test]
    fn profile_sampling_extremes() {
        let t = Torus::new(2, 8).unwrap();
        let mut rng = stream_rng(1, 0, Stream::InitialCondition);
        let full = sample_profile_measure(&DensityField::constant(t, 1.0).unwrap(), &mut rng);
        assert_eq!(full.particles(), t.sites());
        let empty = sample_profile_measure(&DensityField::constant(t, 0.0).unwrap(), &mut rng);
        assert_eq!(empty.particles(), 0);
    }

    #[test]
    fn profile_sampling_concentrates() {
        // n^d = 4096, u = 1/2: empirical density within 3 SE across 100 seeds.
        let t = Torus::new(1, 4096).unwrap();
        let u = DensityField::constant(t, 0.5).unwrap();
        let mut total = 0usize;
        let reps = 100;
        for r in 0..reps {
            let mut rng = stream_rng(7, r, Stream::InitialCondition);
            total += sample_profile_measure(&u, &mut rng).particles();
        }
        let mean = total as f64 / (reps as f64 * 4096.0);
        let se = (0.25 / (4096.0 * reps as f64)).sqrt();
        assert!(
            (mean - 0.5).abs() < 3.0 * se,
            "density {mean} vs 0.5 (3 SE = {})",
            3.0 * se
        );
    }

    #[test]
    fn full_and_empty_configurations_are_frozen() {
        let t = Torus::new(1, 16).unwrap();
        let rates = build_rates(&VectorFieldSpec::Zero, &t);
        for eta0 in [Configuration::full(t), Configuration::empty(t)] {
            let mut rng = stream_rng(3, 0, Stream::Dynamics);
            let traj = simulate(&eta0, &rates, 0.1, &mut rng, &[0.05, 0.1], true).unwrap();
            assert!(traj.events.as_ref().unwrap().is_empty());
            for (_, c) in &traj.snapshots {
                assert_eq!(c, &eta0);
            }
        }
    }

    #[test]
    fn particle_count_conserved_and_times_increase() {
        let t = Torus::new(2, 6).unwrap();
        let spec = VectorFieldSpec::RotationalPreset { amplitude: 1.5 };
        let rates = build_rates(&spec, &t);
        let u = DensityField::constant(t, 0.4).unwrap();
        let mut rng = stream_rng(5, 0, Stream::Dynamics);
        let eta0 = sample_profile_measure(&u, &mut rng);
        let k = eta0.particles();
        let traj = simulate(&eta0, &rates, 0.05, &mut rng, &[0.05], true).unwrap();
        let events = traj.events.as_ref().unwrap();
        assert!(!events.is_empty());
        let mut last = 0.0;
        let mut eta = eta0.clone();
        for e in events {
            assert!(e.time > last);
            last = e.time;
            assert!(eta.occupied(e.from) && !eta.occupied(e.to));
            assert_eq!(t.dist_inf(e.from, e.to), 1);
            eta.set(e.from, false);
            eta.set(e.to, true);
            assert_eq!(eta.particles(), k);
        }
        assert_eq!(traj.final_configuration(), &eta);
    }

    #[test]
    fn deterministic_given_seed() {
        let t = Torus::new(1, 32).unwrap();
        let rates = build_rates(&VectorFieldSpec::Zero, &t);
        let u = DensityField::constant(t, 0.5).unwrap();
        let run = |seed| {
            let mut rng = stream_rng(seed, 0, Stream::Dynamics);
            let eta0 = sample_profile_measure(&u, &mut rng);
            simulate(&eta0, &rates, 0.02, &mut rng, &[0.02], true).unwrap()
        };
        let (a, b) = (run(9), run(9));
        assert_eq!(a.final_configuration(), b.final_configuration());
        assert_eq!(
            a.events.as_ref().unwrap().len(),
            b.events.as_ref().unwrap().len()
        );
        let c = run(10);
        assert_ne!(a.final_configuration(), c.final_configuration());
    }

    #[test]
    fn bernoulli_measure_invariant_under_symmetric_dynamics() {
        // F = 0: Bern(ρ) is invariant; site marginal at T within 3 SE.
        let t = Torus::new(1, 16).unwrap();
        let rates = build_rates(&VectorFieldSpec::Zero, &t);
        let rho = 0.5;
        let u = DensityField::constant(t, rho).unwrap();
        let reps = 500u64;
        let mut occupied0 = 0usize;
        for r in 0..reps {
            let mut init_rng = stream_rng(21, r, Stream::InitialCondition);
            let eta0 = sample_profile_measure(&u, &mut init_rng);
            let mut dyn_rng = stream_rng(21, r, Stream::Dynamics);
            let traj = simulate(&eta0, &rates, 0.1, &mut dyn_rng, &[0.1], false).unwrap();
            occupied0 += traj.final_configuration().occupied(0) as usize;
        }
        let mean = occupied0 as f64 / reps as f64;
        let se = (rho * (1.0 - rho) / reps as f64).sqrt();
        assert!(
            (mean - rho).abs() < 3.0 * se,
            "site-0 occupancy {mean} vs {rho}"
        );
    }

    #[test]
    fn exchangeability_under_seed_relabeling() {
        // Two disjoint replica batches must give statistically
        // indistinguishable site-0 occupancy (two-sample KS p > 0.01).
        let t = Torus::new(1, 16).unwrap();
        let spec = VectorFieldSpec::Constant {
            value: [1.0, 0.0, 0.0],
        };
        let rates = build_rates(&spec, &t);
        let u = DensityField::constant(t, 0.5).unwrap();
        let sample_batch = |offset: u64| -> Vec<f64> {
            (0..500u64)
                .map(|r| {
                    let mut init = stream_rng(57, offset + r, Stream::InitialCondition);
                    let eta0 = sample_profile_measure(&u, &mut init);
                    let mut dynamics = stream_rng(57, offset + r, Stream::Dynamics);
                    let traj =
                        simulate(&eta0, &rates, 0.05, &mut dynamics, &[0.05], false).unwrap();
                    traj.final_configuration().occupied(0) as u8 as f64
                })
                .collect()
        };
        let a = sample_batch(0);
        let b = sample_batch(1000);
        let (_, p) = crate::harness::stats::ks_two_sample(&a, &b);
        assert!(p > 0.01, "seed batches distinguishable: p = {p}");
    }

    /// Dense linear solve for the expected first-passage time of the
    /// single-particle walk; the independent oracle for the simulator.
    fn mean_passage_oracle(rates: &RateTable, n: usize, start: usize, target: usize) -> f64 {
        // Generator Q on sites != target; solve Q tau = -1.
        let states: Vec<usize> = (0..n).filter(|&x| x != target).collect();
        let index = |x: usize| states.iter().position(|&s| s == x).unwrap();
        let m = states.len();
        let mut a = vec![vec![0.0f64; m + 1]; m];
        for (i, &x) in states.iter().enumerate() {
            let right = (x + 1) % n;
            let left = (x + n - 1) % n;
            let r_right = rates.forward(x, 0);
            let r_left = rates.backward(left, 0);
            a[i][i] -= r_right + r_left;
            if right != target {
                a[i][index(right)] += r_right;
            }
            if left != target {
                a[i][index(left)] += r_left;
            }
            a[i][m] = -1.0;
        }
        // Gaussian elimination with partial pivoting.
        for col in 0..m {
            let piv = (col..m)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            let p = a[col][col];
            for j in col..=m {
                a[col][j] /= p;
            }
            for i in 0..m {
                if i != col && a[i][col] != 0.0 {
                    let f = a[i][col];
                    for j in col..=m {
                        a[i][j] -= f * a[col][j];
                    }
                }
            }
        }
        a[index(start)][m]
    }

    #[test]
    fn single_particle_passage_time_matches_linear_solve() {
        let n = 6;
        let t = Torus::new(1, n).unwrap();
        let spec = VectorFieldSpec::Fourier {
            components: vec![vec![FourierTerm {
                mode: [1, 0, 0],
                cos: 0.9,
                sin: 0.7,
            }]],
        };
        let rates = build_rates(&spec, &t);
        let target = 3;
        let expected = mean_passage_oracle(&rates, n, 0, target);

        let reps = 40_000u64;
        let mut total = 0.0;
        let horizon = expected * 50.0;
        for r in 0..reps {
            let mut eta0 = Configuration::empty(t);
            eta0.set(0, true);
            let mut rng = stream_rng(31, r, Stream::Dynamics);
            let traj = simulate(&eta0, &rates, horizon, &mut rng, &[], true).unwrap();
            let hit = traj
                .events
                .as_ref()
                .unwrap()
                .iter()
                .find(|e| e.to == target)
                .map(|e| e.time)
                .expect("particle should hit the target within the horizon");
            total += hit;
        }
        let mc = total / reps as f64;
        assert!(
            ((mc - expected) / expected).abs() < 0.02,
            "MC passage time {mc} vs oracle {expected}"
        );
    }

    #[test]
    fn binary_roundtrip() {
        let t = Torus::new(2, 9).unwrap();
        let u = DensityField::constant(t, 0.3).unwrap();
        let mut rng = stream_rng(77, 0, Stream::InitialCondition);
        let eta0 = sample_profile_measure(&u, &mut rng);
        let rates = build_rates(&VectorFieldSpec::Zero, &t);
        let mut dyn_rng = stream_rng(77, 0, Stream::Dynamics);
        let traj = simulate(
            &eta0,
            &rates,
            0.01,
            &mut dyn_rng,
            &[0.0, 0.005, 0.01],
            false,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_snapshots_binary(&traj, 77, &mut buf).unwrap();
        let (back, seed) = read_snapshots_binary(buf.as_slice()).unwrap();
        assert_eq!(seed, 77);
        assert_eq!(back.snapshots.len(), traj.snapshots.len());
        for ((ta, ca), (tb, cb)) in traj.snapshots.iter().zip(&back.snapshots) {
            assert_eq!(ta, tb);
            assert_eq!(ca, cb);
        }
    }

    #[test]
    fn csv_format() {
        let t = Torus::new(1, 4).unwrap();
        let mut eta = Configuration::empty(t);
        eta.set(2, true);
        let traj = Trajectory {
            initial: eta.clone(),
            snapshots: vec![(0.5, eta)],
            events: None,
            t_final: 0.5,
        };
        let mut buf = Vec::new();
        write_snapshots_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t,site,occupancy\n0.5,0,0\n0.5,1,0\n0.5,2,1\n0.5,3,0\n"
        );
    }
}
