//! Calculus over finite configurations.
//!
//! Integration against the configuration-space measure is realized as sums
//! over ordered tuples with weight `(h^d)^n` per order-`n` tuple (the `1/n!`
//! of the symmetrized measure cancels against the orderings). On top of
//! that sit the product exponent `e(f, η) = Π_{x∈η} f(x)`, the subset
//! transform `(KG)(γ) = Σ_{η ⊂ γ} G(η)` with its inclusion-exclusion
//! inverse, the combinatorial splitting identity used as a self-test of the
//! summation kernels, the weighted norms on both sides of the duality, and
//! the pairing itself.

use crate::config::FiniteConfig;
use crate::domain::DomainSpec;
use crate::error::Error;
use crate::num::Accumulator;
use crate::symfn::{Combinations, SymFn};

/// Volume element per configuration point: `(h^d)^{|η|}` weights an
/// order-`|η|` tuple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairingWeights {
    weight_per_point: f64,
}

impl PairingWeights {
    pub fn new(weight_per_point: f64) -> Result<Self, Error> {
        if !(weight_per_point > 0.0) || !weight_per_point.is_finite() {
            return Err(Error::InvalidParameter {
                name: "weight_per_point",
                value: weight_per_point,
                expected: "positive finite real",
            });
        }
        Ok(Self { weight_per_point })
    }

    pub fn from_domain(dom: &DomainSpec) -> Self {
        Self {
            weight_per_point: dom.site_weight(),
        }
    }

    pub fn per_point(&self) -> f64 {
        self.weight_per_point
    }

    /// `(h^d)^n`.
    pub fn config_weight(&self, order: usize) -> f64 {
        self.weight_per_point.powi(order as i32)
    }
}

/// Product exponent `Π_{x∈η} f(x)`; 1 at the empty configuration.
pub fn lp_exponent<F: Fn(u32) -> f64>(f: F, eta: &FiniteConfig) -> f64 {
    eta.sites().iter().map(|&x| f(x)).product()
}

/// Integral of a truncated symmetric function:
/// `Σ_n Σ_{x_1<…<x_n} F(x_1,…,x_n) (h^d)^n`.
pub fn lp_integral(f: &SymFn, weights: &PairingWeights) -> Result<f64, Error> {
    let mut acc = Accumulator::new();
    for n in 0..=f.max_order() {
        let w = weights.config_weight(n);
        for &v in f.order_values(n) {
            acc.add(v * w);
        }
    }
    let total = acc.total();
    if !total.is_finite() {
        return Err(Error::NonFinite {
            context: "lp_integral",
            step: 0,
        });
    }
    Ok(total)
}

/// Subset transform `Σ_{η ⊂ γ} G(η)` over all `2^{|γ|}` subsets, the empty
/// set and `γ` itself included. Orders above the truncation of `G` read 0.
pub fn k_transform(g: &SymFn, gamma: &FiniteConfig) -> Result<f64, Error> {
    let masks = gamma.subset_masks()?;
    let mut acc = Accumulator::new();
    let sites = gamma.sites();
    let mut subset: Vec<u32> = Vec::with_capacity(sites.len());
    for mask in masks {
        subset.clear();
        for (i, &s) in sites.iter().enumerate() {
            if mask >> i & 1 == 1 {
                subset.push(s);
            }
        }
        acc.add(g.get_sites(&subset));
    }
    Ok(acc.total())
}

/// In-place subset zeta transform: `out[S] = Σ_{T ⊂ S} in[T]`.
/// `values.len()` must be a power of two.
pub fn subset_zeta_in_place(values: &mut [f64]) {
    let n = values.len();
    assert!(n.is_power_of_two());
    let mut bit = 1;
    while bit < n {
        for mask in 0..n {
            if mask & bit != 0 {
                values[mask] += values[mask ^ bit];
            }
        }
        bit <<= 1;
    }
}

/// In-place subset Möbius transform, the inverse of [`subset_zeta_in_place`]:
/// `out[S] = Σ_{T ⊂ S} (-1)^{|S∖T|} in[T]`.
pub fn subset_moebius_in_place(values: &mut [f64]) {
    let n = values.len();
    assert!(n.is_power_of_two());
    let mut bit = 1;
    while bit < n {
        for mask in 0..n {
            if mask & bit != 0 {
                values[mask] -= values[mask ^ bit];
            }
        }
        bit <<= 1;
    }
}

/// In-place superset Möbius transform:
/// `out[S] = Σ_{T ⊇ S} (-1)^{|T∖S|} in[T]`.
pub fn superset_moebius_in_place(values: &mut [f64]) {
    let n = values.len();
    assert!(n.is_power_of_two());
    let mut bit = 1;
    while bit < n {
        for mask in 0..n {
            if mask & bit == 0 {
                values[mask] -= values[mask | bit];
            }
        }
        bit <<= 1;
    }
}

/// A function tabulated on every subset of a fixed site window, indexed by
/// bitmask relative to the window. Windows are capped so the `2^{|Λ|}`
/// tables stay enumerable.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowFn {
    sites: Vec<u32>,
    values: Vec<f64>,
}

/// Enumeration guard for window tables.
pub const MAX_WINDOW: usize = 20;

impl WindowFn {
    pub fn new(sites: Vec<u32>, values: Vec<f64>) -> Result<Self, Error> {
        let sites = FiniteConfig::new(sites)?;
        if sites.len() > MAX_WINDOW {
            return Err(Error::WindowTooLarge {
                size: sites.len(),
                max: MAX_WINDOW,
            });
        }
        if values.len() != 1usize << sites.len() {
            return Err(Error::InvalidParameter {
                name: "values.len",
                value: values.len() as f64,
                expected: "2^|window|",
            });
        }
        Ok(Self {
            sites: sites.sites().to_vec(),
            values,
        })
    }

    pub fn from_fn<F>(sites: Vec<u32>, mut f: F) -> Result<Self, Error>
    where
        F: FnMut(&FiniteConfig) -> f64,
    {
        let window = FiniteConfig::new(sites)?;
        if window.len() > MAX_WINDOW {
            return Err(Error::WindowTooLarge {
                size: window.len(),
                max: MAX_WINDOW,
            });
        }
        let mut values = Vec::with_capacity(1 << window.len());
        for mask in 0..1u32 << window.len() {
            let (subset, _) = window.split(mask);
            values.push(f(&subset));
        }
        Ok(Self {
            sites: window.sites().to_vec(),
            values,
        })
    }

    pub fn window(&self) -> &[u32] {
        &self.sites
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, mask: u32) -> f64 {
        self.values[mask as usize]
    }

    /// Bitmask of a configuration inside the window; errors when the
    /// configuration is not contained in it.
    pub fn config_mask(&self, eta: &FiniteConfig) -> Result<u32, Error> {
        let mut mask = 0u32;
        for &s in eta.sites() {
            match self.sites.binary_search(&s) {
                Ok(pos) => mask |= 1 << pos,
                Err(_) => return Err(Error::NotInWindow),
            }
        }
        Ok(mask)
    }

    /// The subset transform of the whole table.
    pub fn zeta(&self) -> WindowFn {
        let mut values = self.values.clone();
        subset_zeta_in_place(&mut values);
        WindowFn {
            sites: self.sites.clone(),
            values,
        }
    }

    /// The inclusion-exclusion inverse of the whole table.
    pub fn moebius(&self) -> WindowFn {
        let mut values = self.values.clone();
        subset_moebius_in_place(&mut values);
        WindowFn {
            sites: self.sites.clone(),
            values,
        }
    }
}

/// Pointwise inclusion-exclusion inverse of the subset transform:
/// `Σ_{ξ ⊂ η} (-1)^{|η∖ξ|} F(ξ)` for `η` inside the window of `F`.
pub fn k_inverse(f: &WindowFn, eta: &FiniteConfig) -> Result<f64, Error> {
    let eta_mask = f.config_mask(eta)?;
    let mut acc = Accumulator::new();
    // Walk all submasks of eta_mask, including 0 and eta_mask itself.
    let mut sub = eta_mask;
    loop {
        let sign = if (eta_mask ^ sub).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        acc.add(sign * f.value(sub));
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & eta_mask;
    }
    Ok(acc.total())
}

/// Evaluates both sides of the combinatorial splitting identity
///
/// `Σ_η w^{|η|} Σ_{ξ⊂η} H(ξ, η∖ξ, η)  =  Σ_{ξ,ζ disjoint} w^{|ξ|+|ζ|} H(ξ, ζ, ξ⊔ζ)`
///
/// with both sides capped at combined order `order_cap`. On the lattice the
/// right-hand enumeration runs over disjoint pairs only, and the identity is
/// then exact; it is used as a self-test of the summation kernels.
pub fn minlos_identity_check<H>(h: H, order_cap: usize, dom: &DomainSpec) -> (f64, f64)
where
    H: Fn(&FiniteConfig, &FiniteConfig, &FiniteConfig) -> f64,
{
    let weights = PairingWeights::from_domain(dom);
    let m = dom.num_sites();

    let mut lhs = Accumulator::new();
    for n in 0..=order_cap {
        let w = weights.config_weight(n);
        for tuple in Combinations::new(m, n) {
            let eta = FiniteConfig::from_sorted(tuple);
            for mask in eta.subset_masks().expect("order_cap below subset guard") {
                let (xi, rest) = eta.split(mask);
                lhs.add(w * h(&xi, &rest, &eta));
            }
        }
    }

    let mut rhs = Accumulator::new();
    for a in 0..=order_cap {
        for xi_tuple in Combinations::new(m, a) {
            let xi = FiniteConfig::from_sorted(xi_tuple);
            for b in 0..=order_cap - a {
                let w = weights.config_weight(a + b);
                for zeta_tuple in Combinations::new(m, b) {
                    let zeta = FiniteConfig::from_sorted(zeta_tuple);
                    if !xi.is_disjoint(&zeta) {
                        continue;
                    }
                    let union = xi.union_disjoint(&zeta);
                    rhs.add(w * h(&xi, &zeta, &union));
                }
            }
        }
    }

    (lhs.total(), rhs.total())
}

/// Weighted absolute-sum norm `Σ_n Σ_{tuples} |G| C^n (h^d)^n` on
/// quasi-observables. Requires `C > 1`.
pub fn norm_l_c(g: &SymFn, c: f64, weights: &PairingWeights) -> f64 {
    assert!(c > 1.0, "weight base must exceed 1");
    let mut acc = Accumulator::new();
    for n in 0..=g.max_order() {
        let w = weights.config_weight(n) * c.powi(n as i32);
        for &v in g.order_values(n) {
            acc.add(v.abs() * w);
        }
    }
    acc.total()
}

/// Weighted sup norm `max_n max_{tuples} |k| C^{-n}` on correlation
/// functions. On the lattice the measure has atoms, so the essential sup is
/// the max over stored entries. Requires `C > 1`.
pub fn norm_k_c(k: &SymFn, c: f64) -> f64 {
    assert!(c > 1.0, "weight base must exceed 1");
    let mut m = 0.0f64;
    for n in 0..=k.max_order() {
        let w = c.powi(-(n as i32));
        for &v in k.order_values(n) {
            m = m.max(v.abs() * w);
        }
    }
    m
}

/// Duality pairing `Σ_n Σ_{tuples} G·k·(h^d)^n`. When the truncation orders
/// differ the smaller cap applies. Satisfies
/// `|pairing| <= norm_l_c(G) · norm_k_c(k)` for every admissible base.
pub fn pairing(g: &SymFn, k: &SymFn, weights: &PairingWeights) -> f64 {
    assert_eq!(g.num_sites(), k.num_sites(), "site-count mismatch");
    let cap = g.max_order().min(k.max_order());
    let mut acc = Accumulator::new();
    for n in 0..=cap {
        let w = weights.config_weight(n);
        for (gv, kv) in g.order_values(n).iter().zip(k.order_values(n)) {
            acc.add(gv * kv * w);
        }
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfn::binomial;

    fn dom(m: u32, h: f64) -> DomainSpec {
        DomainSpec::new(m, h).unwrap()
    }

    #[test]
    fn lp_exponent_cases() {
        assert_eq!(lp_exponent(|_| 123.0, &FiniteConfig::empty()), 1.0);
        let eta = FiniteConfig::new(vec![1, 4]).unwrap();
        assert_eq!(lp_exponent(|_| 0.0, &eta), 0.0);
        assert_eq!(lp_exponent(|_| 2.0, &eta), 4.0);
    }

    /// Independent product-form oracle for the integral of an exponent:
    /// expanding `Π_x (1 + w f(x))` enumerates every tuple exactly once.
    fn exponent_integral_oracle(f: impl Fn(u32) -> f64, m: u32, w: f64) -> f64 {
        (0..m).map(|x| 1.0 + w * f(x)).product()
    }

    #[test]
    fn lp_integral_of_exponent_matches_product_oracle() {
        // Untruncated (max_order = M): the sum over tuples is exactly the
        // expansion of the site product.
        let m = 8u32;
        let d = dom(m, 0.5);
        let f = |x: u32| 0.3 + 0.1 * x as f64;
        let table = SymFn::from_fn(m, m as usize, |eta| lp_exponent(f, eta));
        let got = lp_integral(&table, &PairingWeights::from_domain(&d)).unwrap();
        let want = exponent_integral_oracle(f, m, d.site_weight());
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn lp_integral_of_exponent_approaches_continuum_exponential() {
        // Refining h with h·Σf held fixed: Π(1+hf) -> exp(h Σ f).
        let target = 1.2f64; // h * Σ_x f(x), kept fixed
        let mut prev_gap = f64::INFINITY;
        for &m in &[4u32, 8, 16] {
            let h = 2.0 / m as f64;
            let d = dom(m, h);
            let f = move |_x: u32| target / (m as f64 * h);
            let table = SymFn::from_fn(m, (m as usize).min(8), |eta| lp_exponent(f, eta));
            let got = if (m as usize) <= 8 {
                lp_integral(&table, &PairingWeights::from_domain(&d)).unwrap()
            } else {
                // beyond the storable order, use the product oracle directly
                exponent_integral_oracle(f, m, d.site_weight())
            };
            let gap = (got - target.exp()).abs();
            assert!(gap < prev_gap, "gap must shrink as h is halved");
            prev_gap = gap;
        }
    }

    #[test]
    fn lp_integral_indicator_empty() {
        let f = SymFn::indicator_empty(6, 3);
        let w = PairingWeights::new(0.25).unwrap();
        assert_eq!(lp_integral(&f, &w).unwrap(), 1.0);
    }

    #[test]
    fn lp_integral_constant_is_binomial_sum() {
        // f ≡ c: integral = (1 + h c)^M by the product oracle.
        let m = 7u32;
        let h = 0.5;
        let c = 0.8;
        let d = dom(m, h);
        let table = SymFn::from_fn(m, m as usize, |eta| lp_exponent(|_| c, eta));
        let got = lp_integral(&table, &PairingWeights::from_domain(&d)).unwrap();
        let want = (1.0 + h * c).powi(m as i32);
        assert!((got - want).abs() < 1e-12);
        // and termwise it is the binomial expansion
        let direct: f64 = (0..=m as usize)
            .map(|n| binomial(m as usize, n) as f64 * (h * c).powi(n as i32))
            .sum();
        assert!((got - direct).abs() < 1e-12);
    }

    #[test]
    fn k_transform_indicator_empty_is_one() {
        let g = SymFn::indicator_empty(8, 3);
        for gamma in [
            FiniteConfig::empty(),
            FiniteConfig::new(vec![0, 3, 7]).unwrap(),
            FiniteConfig::new(vec![1, 2, 3, 4, 5]).unwrap(),
        ] {
            assert_eq!(k_transform(&g, &gamma).unwrap(), 1.0);
        }
    }

    #[test]
    fn k_transform_singleton_support_sums_f() {
        let m = 8u32;
        let f = |x: u32| 1.0 + (x as f64).sin();
        let mut g = SymFn::zeros(m, 2);
        for x in 0..m {
            g.set(&FiniteConfig::singleton(x), f(x));
        }
        let gamma = FiniteConfig::new(vec![1, 4, 6]).unwrap();
        let want: f64 = gamma.sites().iter().map(|&x| f(x)).sum();
        assert!((k_transform(&g, &gamma).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn k_transform_empty_gamma_reads_empty_value() {
        let mut g = SymFn::zeros(5, 2);
        g.set(&FiniteConfig::empty(), 2.5);
        assert_eq!(k_transform(&g, &FiniteConfig::empty()).unwrap(), 2.5);
    }

    #[test]
    fn k_inverse_of_transform_is_identity() {
        let window = vec![0, 2, 3, 6, 9];
        let g = WindowFn::from_fn(window.clone(), |eta| {
            (eta.len() as f64 + 1.0) * (1.0 + eta.sites().iter().sum::<u32>() as f64)
        })
        .unwrap();
        let f = g.zeta();
        for mask in 0..1u32 << window.len() {
            let (eta, _) = FiniteConfig::new(window.clone()).unwrap().split(mask);
            let back = k_inverse(&f, &eta).unwrap();
            assert!((back - g.value(mask)).abs() < 1e-10, "mask {mask}");
        }
    }

    #[test]
    fn k_inverse_of_constant_one() {
        let window = vec![1, 2, 5];
        let f = WindowFn::from_fn(window, |_| 1.0).unwrap();
        assert_eq!(k_inverse(&f, &FiniteConfig::empty()).unwrap(), 1.0);
        assert_eq!(k_inverse(&f, &FiniteConfig::singleton(2)).unwrap(), 0.0);
        assert_eq!(
            k_inverse(&f, &FiniteConfig::new(vec![1, 5]).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn k_inverse_of_two_pow_is_one() {
        // F(ξ) = 2^{|ξ|}: alternating sum gives (2-1)^{|η|} = 1 for every η.
        let window = vec![0, 1, 2, 3];
        let f = WindowFn::from_fn(window.clone(), |eta| (2.0f64).powi(eta.len() as i32)).unwrap();
        // Independent oracle: direct alternating enumeration.
        let oracle = |eta: &FiniteConfig| -> f64 {
            let mut s = 0.0;
            for mask in eta.subset_masks().unwrap() {
                let (xi, rest) = eta.split(mask);
                s += (-1.0f64).powi(rest.len() as i32) * (2.0f64).powi(xi.len() as i32);
            }
            s
        };
        for mask in 0..16u32 {
            let (eta, _) = FiniteConfig::new(window.clone()).unwrap().split(mask);
            let got = k_inverse(&f, &eta).unwrap();
            assert!((got - oracle(&eta)).abs() < 1e-12);
            assert!((got - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn k_inverse_preserves_positivity_through_reconstruction() {
        // G = K^{-1} F with F >= 0: the transform of G reproduces F exactly.
        let window = vec![0, 1, 4];
        let f = WindowFn::from_fn(window, |eta| 0.5 + eta.len() as f64).unwrap();
        let g = f.moebius();
        let back = g.zeta();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
            assert!(*b >= 0.0);
        }
    }

    #[test]
    fn window_guard() {
        let sites: Vec<u32> = (0..21).collect();
        assert!(matches!(
            WindowFn::from_fn(sites, |_| 0.0),
            Err(Error::WindowTooLarge { .. })
        ));
    }

    #[test]
    fn minlos_constant_h() {
        // H ≡ 1, cap 2, M = 3, h = 1: both sides equal 19.
        let d = dom(3, 1.0);
        let (lhs, rhs) = minlos_identity_check(|_, _, _| 1.0, 2, &d);
        assert!((lhs - 19.0).abs() < 1e-12);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn minlos_order_one_indicator() {
        // H = 1_{|ξ|=1,|ζ|=1}: both sides count ordered pairs of distinct
        // sites, weighted h².
        let m = 5u32;
        let h = 0.5;
        let d = dom(m, h);
        let (lhs, rhs) =
            minlos_identity_check(|xi, z, _| if xi.len() == 1 && z.len() == 1 { 1.0 } else { 0.0 }, 2, &d);
        let want = (m * (m - 1)) as f64 * h * h;
        assert!((lhs - want).abs() < 1e-12);
        assert!((rhs - want).abs() < 1e-12);
    }

    #[test]
    fn minlos_seeded_random_table() {
        let d = dom(6, 0.5);
        // Deterministic pseudo-random H from the bitmasks of its arguments.
        let hash = |a: &FiniteConfig, b: &FiniteConfig| -> f64 {
            let mut state = 0x9e3779b97f4a7c15u64;
            for &s in a.sites() {
                state = state.wrapping_mul(0xbf58476d1ce4e5b9).wrapping_add(s as u64 + 1);
            }
            state = state.wrapping_mul(0x94d049bb133111eb);
            for &s in b.sites() {
                state = state.wrapping_mul(0xbf58476d1ce4e5b9).wrapping_add((s as u64) << 7);
            }
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let (lhs, rhs) = minlos_identity_check(|a, b, _| hash(a, b), 3, &d);
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn norm_l_c_cases() {
        let w = PairingWeights::new(0.5).unwrap();
        let g = SymFn::indicator_empty(6, 2);
        assert_eq!(norm_l_c(&g, 2.0, &w), 1.0);

        let m = 6u32;
        let mut ones = SymFn::zeros(m, 2);
        for x in 0..m {
            ones.set(&FiniteConfig::singleton(x), 1.0);
        }
        let c = 2.0;
        assert!((norm_l_c(&ones, c, &w) - m as f64 * c * 0.5).abs() < 1e-14);

        let mut scaled = ones.clone();
        scaled.scale(3.0);
        assert!((norm_l_c(&scaled, c, &w) - 3.0 * norm_l_c(&ones, c, &w)).abs() < 1e-12);
    }

    #[test]
    fn norm_k_c_cases() {
        let c: f64 = 1.9;
        let k = SymFn::from_fn(7, 3, |eta| c.powi(eta.len() as i32));
        assert!((norm_k_c(&k, c) - 1.0).abs() < 1e-15);
        assert_eq!(norm_k_c(&SymFn::zeros(7, 3), c), 0.0);
        // Poisson with z < C attains its norm at the empty configuration.
        let z = 0.6;
        let p = SymFn::poisson(7, 3, z);
        assert!((norm_k_c(&p, c) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pairing_cases() {
        let m = 6u32;
        let w = PairingWeights::new(0.5).unwrap();
        let k = SymFn::from_fn(m, 3, |eta| 0.4f64.powi(eta.len() as i32) + eta.len() as f64);
        let g = SymFn::indicator_empty(m, 3);
        assert_eq!(pairing(&g, &k, &w), k.value_at_empty());

        // Against C^{|η|} the pairing is the signed weighted mass of G.
        let c: f64 = 2.0;
        let cpow = SymFn::from_fn(m, 3, |eta| c.powi(eta.len() as i32));
        let g = SymFn::from_fn(m, 3, |eta| (eta.len() as f64 + 0.5).recip());
        let direct = pairing(&g, &cpow, &w);
        assert!((direct - norm_l_c(&g, c, &w)).abs() < 1e-12, "G >= 0 case");
    }

    #[test]
    fn pairing_hoelder_bound_random() {
        let m = 8u32;
        let w = PairingWeights::new(0.5).unwrap();
        for seed in 0..20u64 {
            let g = SymFn::sample(m, 3, seed, |n| 0.7f64.powi(n as i32), false);
            let k = SymFn::sample(m, 3, seed ^ 0xabcd, |n| 2.2f64.powi(n as i32), false);
            let c = 2.0;
            let lhs = pairing(&g, &k, &w).abs();
            let rhs = norm_l_c(&g, c, &w) * norm_k_c(&k, c);
            assert!(lhs <= rhs * (1.0 + 1e-12), "{lhs} vs {rhs}");
        }
    }
}
