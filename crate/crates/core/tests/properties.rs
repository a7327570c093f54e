//! Property tests for the configuration calculus and the operator pairs.

use proptest::prelude::*;

use glauber_core::calculus::{
    k_inverse, lp_exponent, lp_integral, norm_k_c, norm_l_c, pairing, PairingWeights, WindowFn,
};
use glauber_core::domain::{DomainSpec, Potential};
use glauber_core::operators::{
    apply_dual_generator, apply_dual_step, apply_generator, apply_step, OperatorParams,
};
use glauber_core::symfn::SymFn;
use glauber_core::FiniteConfig;

fn arb_window(max_sites: u32, max_len: usize) -> impl Strategy<Value = Vec<u32>> {
    prop::collection::btree_set(0..max_sites, 1..=max_len)
        .prop_map(|s| s.into_iter().collect::<Vec<u32>>())
}

proptest! {
    #[test]
    fn moebius_roundtrip(window in arb_window(24, 8), seed in any::<u64>()) {
        let wlen = window.len();
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let values: Vec<f64> = (0..1usize << wlen).map(|_| next()).collect();
        let g = WindowFn::new(window.clone(), values).unwrap();
        let f = g.zeta();
        // Pointwise inversion recovers g on every subset of the window.
        let base = FiniteConfig::new(window).unwrap();
        for mask in 0..1u32 << wlen {
            let (eta, _) = base.split(mask);
            let back = k_inverse(&f, &eta).unwrap();
            prop_assert!((back - g.value(mask)).abs() < 1e-9);
        }
        // Whole-table inverse agrees too.
        let back = f.moebius();
        for (a, b) in back.values().iter().zip(g.values()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn exponent_integral_is_site_product(
        m in 2u32..8,
        h in 0.1f64..1.0,
        coeffs in prop::collection::vec(-0.9f64..0.9, 8),
    ) {
        let dom = DomainSpec::new(m, h).unwrap();
        let f = |x: u32| coeffs[x as usize % coeffs.len()];
        let table = SymFn::from_fn(m, m as usize, |eta| lp_exponent(f, eta));
        let got = lp_integral(&table, &PairingWeights::from_domain(&dom)).unwrap();
        let want: f64 = (0..m).map(|x| 1.0 + dom.site_weight() * f(x)).product();
        prop_assert!((got - want).abs() < 1e-10);
    }

    #[test]
    fn pairing_hoelder_bound(seed in any::<u64>(), c in 1.1f64..4.0) {
        let w = PairingWeights::new(0.5).unwrap();
        let g = SymFn::sample(8, 3, seed, |n| 0.8f64.powi(n as i32), false);
        let k = SymFn::sample(8, 3, seed ^ 0x5a5a, |n| (c * 0.9).powi(n as i32), false);
        let lhs = pairing(&g, &k, &w).abs();
        let rhs = norm_l_c(&g, c, &w) * norm_k_c(&k, c);
        prop_assert!(lhs <= rhs * (1.0 + 1e-10));
    }

    #[test]
    fn norms_are_homogeneous(seed in any::<u64>(), a in -3.0f64..3.0) {
        let w = PairingWeights::new(0.5).unwrap();
        let g = SymFn::sample(7, 3, seed, |_| 1.0, false);
        let mut scaled = g.clone();
        scaled.scale(a);
        prop_assert!((norm_l_c(&scaled, 2.0, &w) - a.abs() * norm_l_c(&g, 2.0, &w)).abs() < 1e-10);
        prop_assert!((norm_k_c(&scaled, 2.0) - a.abs() * norm_k_c(&g, 2.0)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operator_duality_random_systems(
        seed in any::<u64>(),
        m in 4u32..8,
        phi0 in 0.0f64..2.0,
        phi1 in 0.0f64..2.0,
        z in 0.05f64..0.8,
        delta in 0.02f64..0.5,
        cap in 0usize..4,
    ) {
        let dom = DomainSpec::new(m, 0.5).unwrap();
        let pot = Potential::new(vec![phi0, phi1]).unwrap();
        let params = OperatorParams::new(z, delta, cap).unwrap();
        let w = PairingWeights::from_domain(&dom);
        let g = SymFn::sample(m, 2, seed, |n| 0.9f64.powi(n as i32), false);
        let k = SymFn::sample(m, 2, seed ^ 0x77, |n| 1.7f64.powi(n as i32), false);

        let gen_lhs = pairing(&apply_generator(&g, &params, &pot, &dom), &k, &w);
        let gen_rhs = pairing(&g, &apply_dual_generator(&k, &params, &pot, &dom), &w);
        prop_assert!((gen_lhs - gen_rhs).abs() < 1e-10, "{gen_lhs} vs {gen_rhs}");

        let step_lhs = pairing(&apply_step(&g, &params, &pot, &dom), &k, &w);
        let step_rhs = pairing(&g, &apply_dual_step(&k, &params, &pot, &dom), &w);
        prop_assert!((step_lhs - step_rhs).abs() < 1e-10, "{step_lhs} vs {step_rhs}");
    }

    #[test]
    fn dual_step_conserves_empty_value(
        seed in any::<u64>(),
        z in 0.05f64..0.8,
        delta in 0.02f64..0.5,
    ) {
        let dom = DomainSpec::new(6, 0.5).unwrap();
        let pot = Potential::step(1.3, 1).unwrap();
        let params = OperatorParams::new(z, delta, 2).unwrap();
        let k = SymFn::sample(6, 2, seed, |n| 1.5f64.powi(n as i32), false);
        let out = apply_dual_step(&k, &params, &pot, &dom);
        prop_assert_eq!(out.value_at_empty(), k.value_at_empty());
    }
}
