//! Exact finite-volume equilibrium correlation functions by enumeration.
//!
//! The grand-canonical weight of a site subset `ω` is `w^{|ω|} e^{-E(ω)}`
//! with `w = z·h^d` and `E` the total pair energy. Inclusion probabilities
//! come from a superset sum over all `2^M` subsets,
//!
//! ```text
//! P(η ⊂ γ) = Σ_{γ ⊇ η} w^{|γ|} e^{-E(γ)} / Ξ,
//! ```
//!
//! and the correlation function is the density `k(η) = P(η ⊂ γ) / h^{|η|}`.
//! The superset sums for every `η` at once take `O(M · 2^M)` by the
//! standard subset-convolution pass, which keeps `M <= 16` comfortable.
//!
//! The same measure is reversible for the birth-and-death chain the engine
//! approximates, so `k_mu` is a fixed point of the dual generator up to the
//! engine's truncation and lattice bias; the residual quantifies both.

use crate::calculus::norm_k_c;
use crate::config::FiniteConfig;
use crate::domain::{DomainSpec, Potential};
use crate::error::Error;
use crate::evolution::{fp_tolerance, op_count_estimate};
use crate::operators::{apply_dual_generator, OperatorParams};
use crate::symfn::SymFn;

/// Enumeration guard: `2^M` subset weights are tabulated.
pub const MAX_ENUM_SITES: u32 = 16;

/// Inputs of the equilibrium enumeration.
#[derive(Clone, Debug)]
pub struct GibbsSpec {
    pub z: f64,
    pub pot: Potential,
    pub dom: DomainSpec,
}

impl GibbsSpec {
    pub fn new(z: f64, pot: Potential, dom: DomainSpec) -> Result<Self, Error> {
        if dom.num_sites() > MAX_ENUM_SITES {
            return Err(Error::EnumerationTooLarge {
                num_sites: dom.num_sites(),
                max: MAX_ENUM_SITES,
            });
        }
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::InvalidParameter {
                name: "z",
                value: z,
                expected: "positive finite real",
            });
        }
        Ok(Self { z, pot, dom })
    }

    /// Weight per occupied site, `z·h^d`.
    pub fn per_site_weight(&self) -> f64 {
        self.z * self.dom.site_weight()
    }
}

/// Boltzmann weights `w^{|mask|} e^{-E(mask)}` for every site subset.
fn subset_weights(spec: &GibbsSpec) -> Vec<f64> {
    let m = spec.dom.num_sites() as usize;
    let w = spec.per_site_weight();
    let mut energy = vec![0.0f64; 1 << m];
    let mut weight = vec![0.0f64; 1 << m];
    weight[0] = 1.0;
    for mask in 1usize..1 << m {
        let low = mask.trailing_zeros();
        let rest = mask & (mask - 1);
        // E(mask) = E(rest) + interaction of the lowest site with the rest.
        let mut e = energy[rest];
        let mut bits = rest;
        while bits != 0 {
            let y = bits.trailing_zeros();
            e += spec.pot.between(low, y);
            bits &= bits - 1;
        }
        energy[mask] = e;
        weight[mask] = w.powi(mask.count_ones() as i32) * (-e).exp();
    }
    weight
}

/// Grand partition function `Ξ = Σ_ω w^{|ω|} e^{-E(ω)}`.
pub fn partition_function(spec: &GibbsSpec) -> f64 {
    subset_weights(spec).iter().sum()
}

/// Exact equilibrium correlation functions up to `max_order`.
///
/// `k(∅) = 1` always, and `k(η) = z^{|η|}` exactly when `φ ≡ 0`.
pub fn exact_gibbs_correlations(spec: &GibbsSpec, max_order: usize) -> Result<SymFn, Error> {
    let m = spec.dom.num_sites();
    let mut table = subset_weights(spec);
    // In-place superset sums: table[mask] <- Σ_{sup ⊇ mask} weight[sup].
    for i in 0..m as usize {
        let bit = 1usize << i;
        for mask in 0..table.len() {
            if mask & bit == 0 {
                table[mask] += table[mask | bit];
            }
        }
    }
    let xi = table[0];
    let h = spec.dom.site_weight();
    let mut k = SymFn::zeros(m, max_order);
    for n in 0..=max_order {
        for idx in 0..k.order_values(n).len() {
            let eta = k.tuple_at(n, idx);
            let mask: usize = eta.sites().iter().map(|&s| 1usize << s).sum();
            let value = table[mask] / xi / h.powi(n as i32);
            k.set(&eta, value);
        }
    }
    Ok(k)
}

/// Stationarity defect `‖L* k_mu‖` of the enumerated equilibrium under the
/// truncated dual generator.
pub fn gibbs_fixed_point_residual(
    k_mu: &SymFn,
    params: &OperatorParams,
    pot: &Potential,
    dom: &DomainSpec,
    c: f64,
) -> f64 {
    norm_k_c(&apply_dual_generator(k_mu, params, pot, dom), c)
}

/// A-priori budget for the stationarity defect.
#[derive(Clone, Copy, Debug)]
pub struct ResidualTolerance {
    /// Lattice diagonal bias: the exact lattice hierarchy carries a
    /// `-h·k(η∪ξ∪x)` exclusion correction the continuum kernel replaces by
    /// `h·(e^{-φ(0)}-1)·k`, leaving `z·h·e^{-φ(0)}·n·e^{C·c_phi}` per order.
    pub diagonal: f64,
    /// Reads of `k` above the truncation order are zeroed.
    pub read_tail: f64,
    /// Kernel clouds beyond the cap are dropped.
    pub kernel_tail: f64,
    pub fp: f64,
}

impl ResidualTolerance {
    pub fn total(&self) -> f64 {
        self.diagonal + self.read_tail + self.kernel_tail + self.fp
    }
}

/// Bound on `‖L* k_mu‖` from the three defect sources, all proportional to
/// `z · N · ‖k‖` with cloud mass controlled by `e^{C·c_phi}` partial sums.
pub fn residual_tolerance(
    norm_k: f64,
    params: &OperatorParams,
    pot: &Potential,
    dom: &DomainSpec,
    c: f64,
    max_order: usize,
) -> ResidualTolerance {
    let c_phi = crate::domain::c_phi(pot, dom);
    let x = c * c_phi;
    let n = max_order as f64;
    let z = params.z;
    let phi0 = pot.at_distance(0);

    // Partial exponential tails Σ_{j > j0} x^j / j!.
    let exp_tail = |j0: usize| -> f64 {
        let mut term = 1.0;
        for j in 1..=j0 {
            term *= x / j as f64;
        }
        let mut sum = 0.0;
        for j in j0 + 1..j0 + 60 {
            term *= x / j as f64;
            sum += term;
        }
        sum
    };

    let diagonal = z * dom.site_weight() * (-phi0).exp() * n * x.exp() * norm_k;
    let read_tail = z / c * n * norm_k * exp_tail(1);
    let kernel_tail = z / c * n * norm_k * exp_tail(params.kernel_cap);
    let fp = fp_tolerance(op_count_estimate(dom, pot, max_order, params.kernel_cap));
    ResidualTolerance {
        diagonal,
        read_tail,
        kernel_tail,
        fp,
    }
}

/// Components of a `SymFn` restricted to tuples inside `[lo, hi]`, measured
/// in the weighted sup norm. Separates bulk from boundary contributions.
pub fn norm_k_c_window(k: &SymFn, c: f64, lo: u32, hi: u32) -> f64 {
    let mut m = 0.0f64;
    for n in 0..=k.max_order() {
        let w = c.powi(-(n as i32));
        for (idx, &v) in k.order_values(n).iter().enumerate() {
            let eta = k.tuple_at(n, idx);
            if eta.sites().iter().all(|&s| s >= lo && s <= hi) {
                m = m.max(v.abs() * w);
            }
        }
    }
    m
}

/// Exact inclusion probability `P(η ⊂ γ)` for a single configuration,
/// by direct summation; an independent cross-check of the superset pass.
pub fn inclusion_probability(spec: &GibbsSpec, eta: &FiniteConfig) -> Result<f64, Error> {
    spec.dom.check_config(eta)?;
    let weights = subset_weights(spec);
    let mask: usize = eta.sites().iter().map(|&s| 1usize << s).sum();
    let mut num = 0.0;
    let mut den = 0.0;
    for (sub, &wgt) in weights.iter().enumerate() {
        den += wgt;
        if sub & mask == mask {
            num += wgt;
        }
    }
    Ok(num / den)
}
