//! Approximation of Poisson integrals of `H_ω` functions by de la Vallée
//! Poussin sums.
//!
//! The crate is organised bottom-up:
//!
//! * [`moduli`]: moduli of continuity ω and their validation;
//! * [`kernels`]: Poisson kernels, tails, block sums and Poisson integrals;
//! * [`sums`]: Fourier coefficients, `S_k`, `V_{n,p}` and the deviation
//!   `ρ_{n,p}` in two independent forms;
//! * [`constants`]: `𝐊(q)`, `K_{p,q}`, `e_n(ω)` and the principal terms of the
//!   asymptotic formulas;
//! * [`extremal`]: the change of variable `y₁`, the oscillation grid and the
//!   extremal function φ*;
//! * [`harness`]: sup-deviation estimation and sweep verification.

pub mod constants;
pub mod error;
pub mod extremal;
pub mod harness;
pub mod kernels;
pub mod moduli;
pub mod quadrature;
pub mod sums;

pub use error::{Error, Result};
pub use kernels::{PoissonParams, VPParams};
pub use moduli::Modulus;
pub use sums::{FourierCoeffs, SampledPeriodicFunction};
