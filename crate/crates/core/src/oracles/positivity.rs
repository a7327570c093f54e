//! Local-pattern positivity probe.
//!
//! For a window `Λ` and a pattern `ξ ⊂ Λ`, the pairing of `k` against the
//! inclusion-exclusion preimage of the pattern indicator is
//!
//! ```text
//! p(ξ) = Σ_{ξ ⊂ η ⊂ Λ} (-1)^{|η∖ξ|} w^{|η|} k(η),
//! ```
//!
//! which for a genuine correlation function is the probability that the
//! state restricted to `Λ` equals exactly `ξ`. A correlation-type `k` must
//! keep every pattern value above `-τ`, where `τ` covers the truncated
//! orders of `k` inside the window; the values always sum to `k(∅)` exactly,
//! by the alternating-sum identity, truncated or not.

use crate::calculus::{superset_moebius_in_place, PairingWeights};
use crate::config::FiniteConfig;
use crate::error::Error;
use crate::num::Accumulator;
use crate::symfn::{binomial, SymFn};

/// Window guard: `2^|Λ|` patterns are tabulated.
pub const MAX_WINDOW: usize = 10;

/// All pattern values over a window, with the extremes picked out.
#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub window: Vec<u32>,
    /// Pattern value per occupation bitmask over the window.
    pub values: Vec<f64>,
    pub min_value: f64,
    pub min_pattern: u32,
    pub total: f64,
}

/// Evaluates every pattern value of `k` on the window.
pub fn positivity_probe(
    k: &SymFn,
    window: &[u32],
    weights: &PairingWeights,
) -> Result<ProbeReport, Error> {
    let window_cfg = FiniteConfig::new(window.to_vec())?;
    if window_cfg.len() > MAX_WINDOW {
        return Err(Error::WindowTooLarge {
            size: window_cfg.len(),
            max: MAX_WINDOW,
        });
    }
    let wlen = window_cfg.len();
    let mut values = Vec::with_capacity(1 << wlen);
    for mask in 0..1u32 << wlen {
        let (eta, _) = window_cfg.split(mask);
        values.push(weights.config_weight(eta.len()) * k.get(&eta));
    }
    superset_moebius_in_place(&mut values);

    let mut min_value = f64::INFINITY;
    let mut min_pattern = 0u32;
    let mut total = Accumulator::new();
    for (mask, &v) in values.iter().enumerate() {
        if v < min_value {
            min_value = v;
            min_pattern = mask as u32;
        }
        total.add(v);
    }
    Ok(ProbeReport {
        window: window_cfg.sites().to_vec(),
        values,
        min_value,
        min_pattern,
        total: total.total(),
    })
}

/// Tolerance for pattern negativity: the window pairing mass of the orders
/// truncated away, `‖k‖ Σ_{n > max_order} binom(|Λ|, n) (wC)^n`, plus a
/// fixed rounding allowance.
pub fn positivity_tolerance(
    norm_k: f64,
    c: f64,
    window_len: usize,
    max_order: usize,
    weights: &PairingWeights,
) -> f64 {
    let wc = weights.per_point() * c;
    let mut tail = 0.0;
    for n in max_order + 1..=window_len {
        tail += binomial(window_len, n) as f64 * wc.powi(n as i32);
    }
    norm_k * tail + 1e-9
}
