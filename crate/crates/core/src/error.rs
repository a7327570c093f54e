use thiserror::Error;

/// Errors from the numerical engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site index {site} outside domain of {num_sites} sites")]
    SiteOutOfRange { site: u32, num_sites: u32 },

    #[error("domain needs at least 2 sites, got {num_sites}")]
    DomainTooSmall { num_sites: u32 },

    #[error("spacing must be positive, got {spacing}")]
    NonPositiveSpacing { spacing: f64 },

    #[error("only dimension 1 is supported, got {dimension}")]
    UnsupportedDimension { dimension: u32 },

    #[error("pair potential must be nonnegative, got {value} at distance {distance}")]
    NegativePotential { distance: u32, value: f64 },

    #[error("potential table must list one value per distance 0..=range")]
    PotentialTableShape,

    #[error("configuration has repeated site {site}")]
    RepeatedSite { site: u32 },

    #[error("configuration order {order} exceeds cap {cap}")]
    OrderExceedsCap { order: usize, cap: usize },

    #[error("window of {size} sites exceeds the enumeration guard of {max}")]
    WindowTooLarge { size: usize, max: usize },

    #[error("configuration is not contained in the window")]
    NotInWindow,

    #[error("invalid parameter {name}: {value} (expected {expected})")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("non-finite value encountered in {context} at step {step}")]
    NonFinite { context: &'static str, step: usize },

    #[error("total event rate overflow: {rate} (activity too large for the box)")]
    RateOverflow { rate: f64 },

    #[error("enumeration guard: {num_sites} sites exceeds the maximum of {max} for exact summation")]
    EnumerationTooLarge { num_sites: u32, max: u32 },

    #[error(transparent)]
    Regime(#[from] RegimeError),
}

/// A violated parameter condition, with the failed inequality and its margin.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegimeError {
    #[error("weight base must satisfy C > 1, got C = {c}")]
    WeightBase { c: f64 },

    #[error(
        "contraction condition fails: z = {z} > min(C·exp(-C·c_phi), 2C·exp(-2C·c_phi)) = {bound} (margin {margin:e})"
    )]
    Contraction { z: f64, bound: f64, margin: f64 },

    #[error(
        "strict activity condition fails: C·c_phi = {c_c_phi} <= ln 2 requires z < C·exp(-C·c_phi) = {bound} strictly, got z = {z}"
    )]
    StrictActivity { z: f64, c_c_phi: f64, bound: f64 },

    #[error("x·exp(-x) = {c} has no pair of roots: c must lie strictly inside (0, 1/e)")]
    RootDomain { c: f64 },

    #[error("invariance analysis exhausted: C·c_phi = {c_c_phi} <= x1 = {x1}")]
    AlphaCase { c_c_phi: f64, x1: f64 },

    #[error("alpha = {alpha} outside the admissible interval ({alpha0}, 1)")]
    AlphaRange { alpha: f64, alpha0: f64 },

    #[error(
        "weight-chain inequality fails at alpha = {alpha}: need x1 < a·C·c_phi < C·c_phi < 2a·C·c_phi < 2C·c_phi <= x2 with (x1, x2) = ({x1}, {x2})"
    )]
    AlphaChain {
        alpha: f64,
        x1: f64,
        x2: f64,
    },

    #[error("no contraction margin: nu* = z·exp(C·c_phi)/C = {nu_star} >= 1")]
    NuStar { nu_star: f64 },

    #[error("nu override {nu} invalid: must lie in [nu* = {nu_star}, 1)")]
    NuOverride { nu: f64, nu_star: f64 },

    #[error("low-activity condition fails: z·c_phi = {product} >= 1/(2e) = {bound} (margin {margin:e})")]
    LowActivity { product: f64, bound: f64, margin: f64 },
}
