//! Numerical engine for the correlation-function dynamics of a
//! birth-and-death lattice gas.
//!
//! Particles live on a discretized 1-D box of `M` sites with spacing `h`.
//! Each particle dies at rate 1; an empty site `x` gives birth at rate
//! `z·exp{-E(x,γ)}`, where `E` is the pair energy of the new particle
//! against the current configuration `γ` and `z > 0` is the activity.
//! Instead of simulating states directly, the engine evolves the hierarchy
//! of correlation functions `k(η)` over finite site configurations `η`,
//! truncated at a maximal order, by iterating an explicit one-step
//! approximation of the dual semigroup.
//!
//! Modules:
//! - [`domain`]: the box, the pair potential, and energy evaluation.
//! - [`config`]: finite site configurations.
//! - [`symfn`]: truncated symmetric functions over configurations (both
//!   quasi-observables `G` and correlation functions `k`).
//! - [`calculus`]: sums over configuration space, the subset transform and
//!   its inversion, weighted norms, and the duality pairing.
//! - [`operators`]: the hierarchy generator, its dual, and the one-step
//!   approximation pair.
//! - [`regime`]: parameter conditions for contraction and ergodicity.
//! - [`evolution`]: time stepping, contraction audits, decay measurement.
//! - [`oracles`]: ground truth — exact finite-volume Gibbs enumeration, a
//!   Gillespie simulator of the underlying process, and a positivity probe.

pub mod calculus;
pub mod config;
pub mod domain;
pub mod error;
pub mod evolution;
pub mod num;
pub mod operators;
pub mod oracles;
pub mod regime;
pub mod symfn;

pub use config::FiniteConfig;
pub use domain::{DomainSpec, Potential};
pub use error::{Error, RegimeError};
pub use symfn::SymFn;
