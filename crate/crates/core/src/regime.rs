//! Parameter conditions for contraction and ergodicity.
//!
//! Everything here is elementary real arithmetic on the triple
//! `(z, C, c_phi)`:
//!
//! - the contraction condition `z <= min{C e^{-C·c_phi}, 2C e^{-2C·c_phi}}`
//!   under which the hierarchy generator produces a contraction flow;
//! - the strict variant `z < C e^{-C·c_phi}` required when
//!   `C·c_phi <= ln 2`;
//! - the two roots `x_1 < 1 < x_2` of `x e^{-x} = z·c_phi`, which bracket
//!   the weight exponents `a·C·c_phi` of the invariant subspaces, and the
//!   threshold `alpha_0` they induce;
//! - `nu* = z e^{C·c_phi} / C`, the sharpest one-step contraction factor on
//!   functions vanishing at the empty configuration; `1 - nu*` is the
//!   guaranteed exponential relaxation rate;
//! - the low-activity condition `z·c_phi < 1/(2e)` backing the equilibrium
//!   (Gibbs) reference state.
//!
//! [`report`] evaluates every check and returns values plus margins without
//! failing; [`validate`] enforces them and produces a [`RegimeParams`].

use crate::error::{Error, RegimeError};

/// Root-bracketing tolerance of the bisection solver, absolute.
pub const ROOT_TOLERANCE: f64 = 1e-12;

/// `1/(2e)`, the low-activity threshold.
pub const LOW_ACTIVITY_BOUND: f64 = 0.183_939_720_585_721_16;

/// One evaluated inequality: `value <(=) bound`, with its slack.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub value: f64,
    pub bound: f64,
    pub strict: bool,
    pub pass: bool,
    /// `bound - value`; negative when the check fails.
    pub margin: f64,
}

impl BoundCheck {
    fn new(value: f64, bound: f64, strict: bool) -> Self {
        let pass = if strict { value < bound } else { value <= bound };
        Self {
            value,
            bound,
            strict,
            pass,
            margin: bound - value,
        }
    }
}

/// Result of the contraction condition, carrying both exponential bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionCheck {
    pub bound_single: f64,
    pub bound_double: f64,
    pub pass: bool,
    pub margin: f64,
}

/// `z <= min{C e^{-C·c_phi}, 2C e^{-2C·c_phi}}`.
pub fn check_contraction_condition(z: f64, c: f64, c_phi: f64) -> ContractionCheck {
    let b1 = c * (-c * c_phi).exp();
    let b2 = 2.0 * c * (-2.0 * c * c_phi).exp();
    let bound = b1.min(b2);
    ContractionCheck {
        bound_single: b1,
        bound_double: b2,
        pass: z <= bound,
        margin: bound - z,
    }
}

/// Result of the strict activity condition, vacuous when `C·c_phi > ln 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StrictActivityCheck {
    pub applicable: bool,
    pub bound: f64,
    pub pass: bool,
}

/// For `C·c_phi <= ln 2`, require `z < C e^{-C·c_phi}` strictly; otherwise
/// the condition holds vacuously.
pub fn check_new_z(z: f64, c: f64, c_phi: f64) -> StrictActivityCheck {
    let applicable = c * c_phi <= std::f64::consts::LN_2;
    let bound = c * (-c * c_phi).exp();
    StrictActivityCheck {
        applicable,
        bound,
        pass: !applicable || z < bound,
    }
}

/// The two roots `0 < x_1 < 1 < x_2` of `x e^{-x} = c`, each to absolute
/// tolerance [`ROOT_TOLERANCE`], by bracketed bisection. Requires
/// `c` strictly inside `(0, 1/e)`; `c = 1/e` is the degenerate double root.
pub fn roots_xexp(c: f64) -> Result<(f64, f64), Error> {
    let peak = (-1.0f64).exp();
    if !(c > 0.0 && c < peak) {
        return Err(RegimeError::RootDomain { c }.into());
    }
    let f = |x: f64| x * (-x).exp();

    // Left branch: f increases from 0 to 1/e on [0, 1].
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > ROOT_TOLERANCE / 2.0 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x1 = 0.5 * (lo + hi);

    // Right branch: f decreases from 1/e to 0 on [1, ∞); double the upper
    // end until the root is bracketed.
    let mut upper = 2.0f64;
    while f(upper) >= c {
        upper *= 2.0;
    }
    let (mut lo, mut hi) = (1.0f64, upper);
    while hi - lo > ROOT_TOLERANCE / 2.0 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x2 = 0.5 * (lo + hi);

    Ok((x1, x2))
}

/// Threshold `alpha_0 ∈ (0, 1)` below which the weight chain cannot hold.
///
/// With `x_1` the small root of `x e^{-x} = z·c_phi`:
/// `alpha_0 = max{1/2, 1/(C·c_phi), 1/C}` when `C·c_phi > 1`, and
/// `max{1/2, x_1/(C·c_phi), 1/C}` when `x_1 < C·c_phi <= 1`. The free case
/// `c_phi = 0` bypasses the root analysis with `max{1/2, 1/C}`.
pub fn alpha0(z: f64, c: f64, c_phi: f64) -> Result<f64, Error> {
    if c <= 1.0 {
        return Err(RegimeError::WeightBase { c }.into());
    }
    if c_phi == 0.0 {
        return Ok(0.5f64.max(1.0 / c));
    }
    let cc = c * c_phi;
    let a0 = if cc > 1.0 {
        0.5f64.max(1.0 / cc).max(1.0 / c)
    } else {
        let (x1, _) = roots_xexp(z * c_phi)?;
        if cc <= x1 {
            return Err(RegimeError::AlphaCase { c_c_phi: cc, x1 }.into());
        }
        0.5f64.max(x1 / cc).max(1.0 / c)
    };
    debug_assert!(a0 < 1.0);
    Ok(a0)
}

/// Verifies the weight-chain inequality
/// `x_1 < a·C·c_phi < C·c_phi < 2a·C·c_phi < 2C·c_phi <= x_2`
/// at a given `alpha`. Vacuously true in the free case.
pub fn check_alpha_chain(alpha: f64, c: f64, c_phi: f64, x1: f64, x2: f64) -> bool {
    if c_phi == 0.0 {
        return true;
    }
    let a = alpha * c * c_phi;
    x1 < a && a < c * c_phi && c * c_phi < 2.0 * a && 2.0 * a < 2.0 * c * c_phi && 2.0 * c * c_phi <= x2
}

/// The sharpest admissible contraction parameter `nu* = z e^{C·c_phi} / C`.
/// Values `>= 1` leave no guaranteed relaxation margin and are an error.
pub fn nu_star(z: f64, c: f64, c_phi: f64) -> Result<f64, Error> {
    let v = z * (c * c_phi).exp() / c;
    if v >= 1.0 {
        return Err(RegimeError::NuStar { nu_star: v }.into());
    }
    Ok(v)
}

/// Low-activity condition `z·c_phi < 1/(2e)` for the equilibrium reference.
pub fn check_low_activity(z: f64, c_phi: f64) -> BoundCheck {
    BoundCheck::new(z * c_phi, LOW_ACTIVITY_BOUND, true)
}

/// Fully validated parameter set, with every derived quantity pinned.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegimeParams {
    pub z: f64,
    pub c: f64,
    pub c_phi: f64,
    pub alpha: f64,
    pub nu: f64,
    pub alpha0: f64,
    pub nu_star: f64,
    /// Roots of `x e^{-x} = z·c_phi`; absent in the free case.
    pub x1: Option<f64>,
    pub x2: Option<f64>,
    /// Guaranteed relaxation rate `1 - nu*`.
    pub rate: f64,
}

/// Enforces the contraction and strict-activity conditions, derives
/// `alpha_0`, `nu*` and the roots, resolves `alpha` (given, or the midpoint
/// `(alpha_0+1)/2`) and `nu` (given override in `[nu*, 1)`, or `nu*`), and
/// verifies the weight chain at the resolved `alpha`.
pub fn validate(
    z: f64,
    c: f64,
    c_phi: f64,
    alpha: Option<f64>,
    nu: Option<f64>,
) -> Result<RegimeParams, Error> {
    if c <= 1.0 {
        return Err(RegimeError::WeightBase { c }.into());
    }
    let contraction = check_contraction_condition(z, c, c_phi);
    if !contraction.pass {
        return Err(RegimeError::Contraction {
            z,
            bound: contraction.bound_single.min(contraction.bound_double),
            margin: contraction.margin,
        }
        .into());
    }
    let strict = check_new_z(z, c, c_phi);
    if !strict.pass {
        return Err(RegimeError::StrictActivity {
            z,
            c_c_phi: c * c_phi,
            bound: strict.bound,
        }
        .into());
    }
    let ns = nu_star(z, c, c_phi)?;
    let a0 = alpha0(z, c, c_phi)?;
    let alpha = alpha.unwrap_or(0.5 * (a0 + 1.0));
    if !(alpha > a0 && alpha < 1.0) {
        return Err(RegimeError::AlphaRange { alpha, alpha0: a0 }.into());
    }
    let (x1, x2) = if c_phi > 0.0 {
        let (x1, x2) = roots_xexp(z * c_phi)?;
        if !check_alpha_chain(alpha, c, c_phi, x1, x2) {
            return Err(RegimeError::AlphaChain { alpha, x1, x2 }.into());
        }
        (Some(x1), Some(x2))
    } else {
        (None, None)
    };
    let nu = match nu {
        Some(nu) => {
            if !(nu >= ns && nu < 1.0) {
                return Err(RegimeError::NuOverride { nu, nu_star: ns }.into());
            }
            nu
        }
        None => ns,
    };
    Ok(RegimeParams {
        z,
        c,
        c_phi,
        alpha,
        nu,
        alpha0: a0,
        nu_star: ns,
        x1,
        x2,
        rate: 1.0 - ns,
    })
}

/// Non-failing evaluation of every condition, for reporting. Quantities
/// whose prerequisites fail are left empty.
#[derive(Clone, Debug, PartialEq)]
pub struct RegimeReport {
    pub z: f64,
    pub c: f64,
    pub c_phi: f64,
    pub contraction: ContractionCheck,
    pub strict_activity: StrictActivityCheck,
    pub low_activity: BoundCheck,
    pub nu_star: Option<f64>,
    pub rate: Option<f64>,
    pub x1: Option<f64>,
    pub x2: Option<f64>,
    pub alpha0: Option<f64>,
    pub alpha_auto: Option<f64>,
    pub chain_holds: Option<bool>,
    /// All enforced conditions pass (the low-activity check is advisory and
    /// reported separately).
    pub in_regime: bool,
}

pub fn report(z: f64, c: f64, c_phi: f64) -> RegimeReport {
    let contraction = check_contraction_condition(z, c, c_phi);
    let strict_activity = check_new_z(z, c, c_phi);
    let low_activity = check_low_activity(z, c_phi);
    let ns = nu_star(z, c, c_phi).ok();
    let (x1, x2) = match (c_phi > 0.0).then(|| roots_xexp(z * c_phi)) {
        Some(Ok((x1, x2))) => (Some(x1), Some(x2)),
        _ => (None, None),
    };
    let a0 = alpha0(z, c, c_phi).ok();
    let alpha_auto = a0.map(|a| 0.5 * (a + 1.0));
    let chain_holds = match (alpha_auto, x1, x2) {
        (Some(a), Some(x1), Some(x2)) => Some(check_alpha_chain(a, c, c_phi, x1, x2)),
        (Some(_), None, None) if c_phi == 0.0 => Some(true),
        _ => None,
    };
    let in_regime = contraction.pass && strict_activity.pass && ns.is_some();
    RegimeReport {
        z,
        c,
        c_phi,
        contraction,
        strict_activity,
        low_activity,
        nu_star: ns,
        rate: ns.map(|v| 1.0 - v),
        x1,
        x2,
        alpha0: a0,
        alpha_auto,
        chain_holds,
        in_regime,
    }
}
