//! Multifractal entropy spectra of V-statistics on the full shift.
//!
//! The crate covers the whole pipeline: cylinder kernels and their three
//! interchangeable representations ([`kernels`]), Bernoulli and Markov
//! measures with the fiber integral `A(μ) = ∫Φ dμ^{⊗r}` ([`measures`]),
//! finite-orbit statistics ([`dynamics`]), the entropy-maximization solvers
//! ([`spectrum`]), exact two-symbol analyses ([`closedform`]) and
//! independent cross-checks ([`oracle`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closedform;
pub mod dynamics;
pub mod error;
pub mod kernels;
pub mod measures;
pub mod optimize;
pub mod oracle;
pub mod poly;
pub mod spectrum;

pub use error::{Error, Result};
pub use kernels::{CylinderKernel, FactorPotential, KernelForm, KernelSpec};
pub use measures::{MarkovChain, Measure, ProbVector};
pub use optimize::{MeasureClass, SolverOptions};
pub use poly::Polynomial;
