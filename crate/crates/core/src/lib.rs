//! Numerical machinery for the Mobius group `O(1, n+1)` acting on the
//! conformal sphere `S^n`.
//!
//! The crate is organised around the flat model `S^n = PO(1,n+1)/P`:
//!
//! - [`group`]: the ambient group, its graded Lie algebra, exponentials,
//!   adjoint action and the KAK (Cartan) decomposition.
//! - [`sphere`]: the model sphere as projectivised null cone, stereographic
//!   charts, the inversion chart on the nilpotent factor, sampled Hausdorff
//!   distance and box-counting dimension estimates.
//! - [`cones`]: conformal cones with vertex at the basepoint and the
//!   classification of their limits under diverging similarity sequences,
//!   together with brute-force verification oracles.
//! - [`kleinian`]: finitely generated Kleinian groups, orbit enumeration,
//!   limit-set approximation, maximality verdicts and properness probes.
//! - [`frame_metric`]: the left-invariant Riemannian metric on the group that
//!   makes the Maurer-Cartan frame orthonormal, path lengths, upper-bound
//!   distance optimisation and Cauchy-boundary probes.
//! - [`domains`]: grid estimators for intrinsic distances in Euclidean
//!   domains with obstacles, and the bi-Lipschitz bounds for Lipschitz-graph
//!   and small-boundary domains.
//!
//! Everything is `f64`, deterministic, and free of global state; randomness
//! only enters through an explicitly passed [`rng::SplitMix64`].

#![cfg_attr(not(test), no_std)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod cones;
pub mod domains;
pub mod error;
pub mod frame_metric;
pub mod group;
pub mod kleinian;
pub mod mat;
pub mod rng;
pub mod sphere;

pub use error::{Error, Result};
