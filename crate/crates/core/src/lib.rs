//! Exact finite-scale computations for twisted C*-dynamical systems
//! `Σ = (A, G, α, σ)` with `G` finite and `A` finite-dimensional.

#![allow(clippy::needless_range_loop)]

pub mod algebra;
pub mod coeff;
pub mod correspondence;
pub mod crossed;
pub mod equivariant;
pub mod error;
pub mod group;
pub mod io;
pub mod linalg;
pub mod module;
pub mod multiplier;
pub mod par;
pub mod reconstruct;
pub mod samples;
pub mod suite;
pub mod system;

pub use algebra::{AlgebraElement, Automorphism, CStarAlgebra};
pub use error::{Error, Result};
pub use group::FiniteGroup;
pub use system::{TwistedSystem, DEFAULT_TOL};
