//! Simulation and verification laboratory for the multidimensional weakly
//! asymmetric exclusion process (WASEP) on the discrete torus.
//!
//! The crate simulates the particle system exactly in continuous time, solves
//! the hydrodynamic PDE `∂_t u = Δu − 2∇·(u(1−u)F)` and its backwards
//! semigroup on the lattice, computes density-fluctuation fields, entropy and
//! energy functionals, constructs lattice flows with exact rational
//! divergences, and runs desk-scale statistical experiments against the
//! quantitative behaviour expected of the model.
//!
//! Module map:
//! - [`lattice`]: torus geometry, cubes, box measures, sparse partitions
//! - [`flows`]: lattice flows `ψ^ℓ`, `ψ̃^ℓ`, `φ_ℓ` and energy bounds
//! - [`hydro`]: deterministic PDE layer and backwards Fokker-Planck semigroup
//! - [`wasep`]: exact continuous-time simulation of the particle system
//! - [`master`]: exact master-equation oracle on tiny lattices
//! - [`obs`]: local observables, block averages and telescoping functionals
//! - [`fluct`]: fluctuation fields, martingale decomposition, Sobolev norms
//! - [`harness`]: experiment orchestration, statistics and CSV reports

// Stencils and padded fixed-size coordinates index over the active dimension
// `0..d`; iterator rewrites obscure that.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod flows;
pub mod fluct;
pub mod harness;
pub mod hydro;
pub mod lattice;
pub mod master;
pub mod obs;
pub mod rng;
pub mod wasep;

pub use error::{Error, Result};
