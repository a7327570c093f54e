//! Independent ground truth for the hierarchy evolution: exact equilibrium
//! enumeration, direct simulation of the underlying chain, and a local
//! positivity probe.

pub mod gibbs;
pub mod mc;
pub mod positivity;
