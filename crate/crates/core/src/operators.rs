//! The four operators driving the hierarchy dynamics.
//!
//! On quasi-observables `G` the generator acts as
//!
//! ```text
//! (LG)(η) = -|η| G(η)
//!           + z Σ_{ξ⊂η} h Σ_x exp{-E(x,ξ)} G(ξ∪x) Π_{y∈η∖ξ} (exp{-φ(x-y)} - 1)
//! ```
//!
//! and its dual on correlation functions `k` as
//!
//! ```text
//! (L*k)(η) = -|η| k(η)
//!            + z Σ_{x∈η} exp{-E(x,η∖x)} Σ_ξ w^{|ξ|} Π_{y∈ξ}(exp{-φ(x-y)} - 1) k((η∖x)∪ξ)
//! ```
//!
//! The one-step pair `P_δ` / `P_δ*` mixes death (survival weight `1-δ` per
//! particle), birth (weight `zδ·h` per new point, Boltzmann-suppressed), and
//! the same `exp(-φ)-1` cloud kernel; `(P_δ* - I)/δ` converges to `L*` as
//! `δ → 0`, so iterating `P_δ*` `[t/δ]` times advances correlation functions
//! to time `t`.
//!
//! Truncation caps are applied identically on both sides of the duality:
//! function reads vanish above `max_order`, and the `exp(-φ)-1` kernel — the
//! cloud integral in the dual operators, the `η∖ξ` factor set in the forward
//! ones — is capped at `kernel_cap` points. With equal caps on both sides
//! the pairing identities `⟨LG, k⟩ = ⟨G, L*k⟩` and `⟨P_δ G, k⟩ = ⟨G, P_δ* k⟩`
//! hold exactly (to rounding), not only in the limit.
//!
//! Lattice convention: an integration variable avoids exactly the sites its
//! output configuration must stay disjoint from, and nothing else. In the
//! continuum the overlaps this permits sit on null sets; on the lattice this
//! minimal-exclusion rule is what makes the pairs above exact duals. Where a
//! kernel then evaluates `E(y,ω)` with `y ∈ ω`, the self-term contributes
//! `φ(0)` like any other pair.

use crate::config::FiniteConfig;
use crate::domain::{interaction_energy, DomainSpec, Potential};
use crate::error::Error;
use crate::num::Accumulator;
use crate::symfn::SymFn;

/// Parameters shared by every operator application.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorParams {
    /// Birth activity `z > 0`.
    pub z: f64,
    /// Time step `δ ∈ (0, 1)` of the one-step approximation.
    pub delta: f64,
    /// Cap on the number of points in the `exp(-φ)-1` kernel factor.
    pub kernel_cap: usize,
}

impl OperatorParams {
    pub fn new(z: f64, delta: f64, kernel_cap: usize) -> Result<Self, Error> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::InvalidParameter {
                name: "z",
                value: z,
                expected: "positive finite real",
            });
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter {
                name: "delta",
                value: delta,
                expected: "in (0, 1)",
            });
        }
        Ok(Self {
            z,
            delta,
            kernel_cap,
        })
    }

    pub fn with_delta(self, delta: f64) -> Result<Self, Error> {
        Self::new(self.z, delta, self.kernel_cap)
    }

    pub fn with_kernel_cap(self, kernel_cap: usize) -> Self {
        Self { kernel_cap, ..self }
    }
}

/// Sorted scratch configuration with cheap insert/remove, used by the
/// subset walks below.
#[derive(Default)]
struct SortedBuf {
    sites: Vec<u32>,
}

impl SortedBuf {
    fn reset(&mut self, base: &[u32]) {
        self.sites.clear();
        self.sites.extend_from_slice(base);
    }

    fn insert(&mut self, site: u32) -> usize {
        let pos = self.sites.partition_point(|&s| s < site);
        self.sites.insert(pos, site);
        pos
    }

    fn remove_at(&mut self, pos: usize) {
        self.sites.remove(pos);
    }

    fn as_slice(&self) -> &[u32] {
        &self.sites
    }
}

/// Walks all subsets `ξ` of `cands` with `|ξ| <= max_extra`, accumulating
/// `Π_{y∈ξ} factor(y) · k(base ∪ ξ)`. The empty subset contributes
/// `k(base)`. Factors carry the per-point volume element already.
struct CloudSum<'a> {
    k: &'a SymFn,
    cands: &'a [(u32, f64)],
    max_extra: usize,
    merged: SortedBuf,
    acc: Accumulator,
}

impl<'a> CloudSum<'a> {
    fn run(k: &'a SymFn, base: &[u32], cands: &'a [(u32, f64)], max_extra: usize) -> f64 {
        let mut cs = CloudSum {
            k,
            cands,
            max_extra,
            merged: SortedBuf::default(),
            acc: Accumulator::new(),
        };
        cs.merged.reset(base);
        cs.dfs(0, 0, 1.0);
        cs.acc.total()
    }

    fn dfs(&mut self, start: usize, depth: usize, prod: f64) {
        self.acc.add(prod * self.k.get_sites(self.merged.as_slice()));
        if depth == self.max_extra {
            return;
        }
        for j in start..self.cands.len() {
            let (site, factor) = self.cands[j];
            let pos = self.merged.insert(site);
            self.dfs(j + 1, depth + 1, prod * factor);
            self.merged.remove_at(pos);
        }
    }
}

/// Candidate sites for a kernel centered at a single point `x`: everything
/// within the potential range, excluding `base`, with a nonzero factor.
fn point_kernel_candidates(
    x: u32,
    base: &[u32],
    pot: &Potential,
    dom: &DomainSpec,
    weight: f64,
    out: &mut Vec<(u32, f64)>,
) {
    out.clear();
    let r = pot.range_sites();
    let lo = x.saturating_sub(r);
    let hi = (x + r).min(dom.num_sites() - 1);
    for y in lo..=hi {
        if base.binary_search(&y).is_ok() {
            continue;
        }
        let g = (-pot.between(x, y)).exp() - 1.0;
        if g != 0.0 {
            out.push((y, weight * g));
        }
    }
}

/// Candidate sites for a kernel centered at a cloud `centers`: union of the
/// per-point ranges, excluding `base`, with factor `exp(-E(y,centers)) - 1`.
fn cloud_kernel_candidates(
    centers: &[u32],
    base: &[u32],
    pot: &Potential,
    dom: &DomainSpec,
    weight: f64,
    out: &mut Vec<(u32, f64)>,
) {
    out.clear();
    let r = pot.range_sites();
    let m = dom.num_sites();
    let mut next_lo: u32 = 0;
    for &u in centers {
        let lo = u.saturating_sub(r).max(next_lo);
        let hi = (u + r).min(m - 1);
        if lo > hi {
            continue;
        }
        for y in lo..=hi {
            if base.binary_search(&y).is_ok() {
                continue;
            }
            let g = (-interaction_energy(y, centers, pot)).exp() - 1.0;
            if g != 0.0 {
                out.push((y, weight * g));
            }
        }
        next_lo = next_lo.max(hi + 1);
    }
}

fn apply_entrywise<F>(input: &SymFn, f: F) -> SymFn
where
    F: Fn(&FiniteConfig) -> f64 + Sync,
{
    SymFn::from_fn(input.num_sites(), input.max_order(), f)
}

/// The generator on quasi-observables.
pub fn apply_generator(
    g: &SymFn,
    params: &OperatorParams,
    pot: &Potential,
    dom: &DomainSpec,
) -> SymFn {
    assert_eq!(g.num_sites(), dom.num_sites(), "domain mismatch");
    let n_max = g.max_order();
    let q = params.kernel_cap;
    let w = dom.site_weight();
    let m = dom.num_sites();
    let r = pot.range_sites();

    apply_entrywise(g, |eta| {
        let n = eta.len();
        let mut acc = Accumulator::new();
        acc.add(-(n as f64) * g.get(eta));
        if n_max == 0 {
            return acc.total();
        }

        let mut merged = SortedBuf::default();
        for mask in 0..1u32 << n {
            let (xi, rest) = eta.split(mask);
            if rest.len() > q || xi.len() + 1 > n_max {
                continue;
            }
            // The kernel product forces x within range of every point of
            // `rest`; with `rest` empty the birth point roams the whole box.
            let (lo, hi) = match (rest.sites().first(), rest.sites().last()) {
                (Some(&first), Some(&last)) => (last.saturating_sub(r), (first + r).min(m - 1)),
                _ => (0, m - 1),
            };
            if lo > hi {
                continue;
            }
            for x in lo..=hi {
                if xi.contains(x) {
                    continue;
                }
                let mut kernel = 1.0;
                for &y in rest.sites() {
                    kernel *= (-pot.between(x, y)).exp() - 1.0;
                    if kernel == 0.0 {
                        break;
                    }
                }
                if kernel == 0.0 {
                    continue;
                }
                merged.reset(xi.sites());
                merged.insert(x);
                let read = g.get_sites(merged.as_slice());
                if read == 0.0 {
                    continue;
                }
                let boltz = (-interaction_energy(x, xi.sites(), pot)).exp();
                acc.add(params.z * w * boltz * read * kernel);
            }
        }
        acc.total()
    })
}

/// The dual generator on correlation functions. `(L*k)(∅) = 0` for every
/// `k`, so the normalization `k(∅)` is a conserved quantity of the flow.
pub fn apply_dual_generator(
    k: &SymFn,
    params: &OperatorParams,
    pot: &Potential,
    dom: &DomainSpec,
) -> SymFn {
    assert_eq!(k.num_sites(), dom.num_sites(), "domain mismatch");
    let n_max = k.max_order();
    let q = params.kernel_cap;
    let w = dom.site_weight();

    apply_entrywise(k, |eta| {
        let n = eta.len();
        let mut acc = Accumulator::new();
        acc.add(-(n as f64) * k.get(eta));

        let mut cands = Vec::new();
        for i in 0..n {
            let x = eta.sites()[i];
            let base = eta.without_index(i);
            let boltz = (-interaction_energy(x, base.sites(), pot)).exp();
            point_kernel_candidates(x, base.sites(), pot, dom, w, &mut cands);
            let max_extra = q.min(n_max - base.len());
            let cloud = CloudSum::run(k, base.sites(), &cands, max_extra);
            acc.add(params.z * boltz * cloud);
        }
        acc.total()
    })
}

/// One forward step on quasi-observables.
pub fn apply_step(g: &SymFn, params: &OperatorParams, pot: &Potential, dom: &DomainSpec) -> SymFn {
    assert_eq!(g.num_sites(), dom.num_sites(), "domain mismatch");
    let n_max = g.max_order();
    let q = params.kernel_cap;
    let m = dom.num_sites();
    let zdw = params.z * params.delta * dom.site_weight();
    let survive = 1.0 - params.delta;

    apply_entrywise(g, |eta| {
        let n = eta.len();
        let mut acc = Accumulator::new();
        for mask in 0..1u32 << n {
            let (xi, rest) = eta.split(mask);
            if rest.len() > q {
                continue;
            }
            let mut walker = BirthWalk::new(g, pot, xi.sites(), rest.sites(), m, zdw, n_max);
            acc.add(survive.powi(xi.len() as i32) * walker.run());
        }
        acc.total()
    })
}

/// Walks birth clouds `ω` over the whole box (excluding the kept set) for
/// one `(ξ, η∖ξ)` split of the forward step, accumulating
/// `(zδh)^{|ω|} G(ξ∪ω) Π_{u∈ω} e^{-E(u,ξ)} Π_{y∈η∖ξ}(e^{-E(y,ω)} - 1)`.
struct BirthWalk<'a> {
    g: &'a SymFn,
    pot: &'a Potential,
    rest: &'a [u32],
    cands: Vec<u32>,
    boltz: Vec<f64>,
    /// Per rest point, the last candidate index still able to change its
    /// cloud energy; once the walk passes it a dead factor stays dead and
    /// the branch is cut.
    last_touch: Vec<isize>,
    rest_energy: Vec<f64>,
    merged: SortedBuf,
    max_birth: usize,
    zdw: f64,
    acc: Accumulator,
}

impl<'a> BirthWalk<'a> {
    fn new(
        g: &'a SymFn,
        pot: &'a Potential,
        xi: &[u32],
        rest: &'a [u32],
        m: u32,
        zdw: f64,
        n_max: usize,
    ) -> Self {
        let mut cands = Vec::with_capacity(m as usize - xi.len());
        let mut boltz = Vec::with_capacity(m as usize - xi.len());
        for y in 0..m {
            if xi.binary_search(&y).is_err() {
                cands.push(y);
                boltz.push((-interaction_energy(y, xi, pot)).exp());
            }
        }
        let r = pot.range_sites();
        let last_touch = rest
            .iter()
            .map(|&y| {
                let first = cands.partition_point(|&c| c < y.saturating_sub(r));
                let past = cands.partition_point(|&c| c <= y + r);
                if past > first {
                    past as isize - 1
                } else {
                    -1
                }
            })
            .collect();
        let mut merged = SortedBuf::default();
        merged.reset(xi);
        Self {
            g,
            pot,
            rest,
            cands,
            boltz,
            last_touch,
            rest_energy: vec![0.0; rest.len()],
            merged,
            max_birth: n_max - xi.len(),
            zdw,
            acc: Accumulator::new(),
        }
    }

    fn run(&mut self) -> f64 {
        self.dfs(0, 0, 1.0);
        self.acc.total()
    }

    fn node_contribution(&mut self, prod: f64) {
        let mut v = prod;
        for &e in &self.rest_energy {
            v *= (-e).exp() - 1.0;
            if v == 0.0 {
                return;
            }
        }
        let read = self.g.get_sites(self.merged.as_slice());
        if read != 0.0 {
            self.acc.add(v * read);
        }
    }

    fn dfs(&mut self, start: usize, depth: usize, prod: f64) {
        self.node_contribution(prod);
        if depth == self.max_birth {
            return;
        }
        for j in start..self.cands.len() {
            // A rest factor that is zero and beyond the reach of every
            // remaining candidate kills all clouds whose next point is at
            // or after j.
            let dead = self
                .rest_energy
                .iter()
                .zip(&self.last_touch)
                .any(|(&e, &lt)| e == 0.0 && lt < j as isize);
            if dead {
                break;
            }
            let site = self.cands[j];
            for (i, &y) in self.rest.iter().enumerate() {
                self.rest_energy[i] += self.pot.between(site, y);
            }
            let pos = self.merged.insert(site);
            self.dfs(j + 1, depth + 1, prod * self.zdw * self.boltz[j]);
            self.merged.remove_at(pos);
            for (i, &y) in self.rest.iter().enumerate() {
                self.rest_energy[i] -= self.pot.between(site, y);
            }
        }
    }
}

/// One dual step on correlation functions. `(P_δ* k)(∅) = k(∅)` exactly.
pub fn apply_dual_step(
    k: &SymFn,
    params: &OperatorParams,
    pot: &Potential,
    dom: &DomainSpec,
) -> SymFn {
    assert_eq!(k.num_sites(), dom.num_sites(), "domain mismatch");
    let n_max = k.max_order();
    let q = params.kernel_cap;
    let w = dom.site_weight();
    let zd = params.z * params.delta;
    let survive = 1.0 - params.delta;

    apply_entrywise(k, |eta| {
        let n = eta.len();
        let mut acc = Accumulator::new();
        let mut cands = Vec::new();
        for mask in 0..1u32 << n {
            let (omega, kept) = eta.split(mask);
            let mut pref = survive.powi(kept.len() as i32) * zd.powi(omega.len() as i32);
            for &y in kept.sites() {
                pref *= (-interaction_energy(y, omega.sites(), pot)).exp();
            }
            cloud_kernel_candidates(omega.sites(), kept.sites(), pot, dom, w, &mut cands);
            let max_extra = q.min(n_max - kept.len());
            let cloud = CloudSum::run(k, kept.sites(), &cands, max_extra);
            acc.add(pref * cloud);
        }
        acc.total()
    })
}

/// Sup-norm distance between the discrete derivative `(P_δ* - I)k / δ` and
/// the dual generator; decays linearly in `δ` on truncated inputs.
pub fn generator_residual(
    k: &SymFn,
    params: &OperatorParams,
    pot: &Potential,
    dom: &DomainSpec,
    c: f64,
) -> f64 {
    let stepped = apply_dual_step(k, params, pot, dom);
    let gen = apply_dual_generator(k, params, pot, dom);
    let mut diff = stepped;
    diff.axpy(-1.0, k);
    diff.scale(1.0 / params.delta);
    diff.axpy(-1.0, &gen);
    crate::calculus::norm_k_c(&diff, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{norm_k_c, pairing, PairingWeights};

    fn params(z: f64, delta: f64) -> OperatorParams {
        OperatorParams::new(z, delta, 3).unwrap()
    }

    fn small_domain() -> (DomainSpec, Potential) {
        (
            DomainSpec::new(8, 0.5).unwrap(),
            Potential::step(1.0, 1).unwrap(),
        )
    }

    #[test]
    fn params_validation() {
        assert!(OperatorParams::new(0.0, 0.1, 2).is_err());
        assert!(OperatorParams::new(0.5, 1.0, 2).is_err());
        assert!(OperatorParams::new(0.5, 0.0, 2).is_err());
        assert!(OperatorParams::new(0.5, 0.5, 2).is_ok());
    }

    #[test]
    fn generator_annihilates_empty_indicator() {
        let (dom, pot) = small_domain();
        let g = SymFn::indicator_empty(dom.num_sites(), 3);
        let out = apply_generator(&g, &params(0.7, 0.1), &pot, &dom);
        assert_eq!(out.max_abs_diff(&SymFn::zeros(dom.num_sites(), 3)), 0.0);
    }

    #[test]
    fn generator_free_case_collapses() {
        // φ ≡ 0: the kernel forces ξ = η, so
        // (LG)(η) = -|η| G(η) + z h Σ_{x∉η} G(η∪x).
        let dom = DomainSpec::new(7, 0.5).unwrap();
        let pot = Potential::zero();
        let p = params(0.6, 0.1);
        let g = SymFn::sample(7, 3, 11, |n| 0.8f64.powi(n as i32), false);
        let got = apply_generator(&g, &p, &pot, &dom);
        let want = SymFn::from_fn(7, 3, |eta| {
            let mut v = -(eta.len() as f64) * g.get(eta);
            for x in 0..7u32 {
                if !eta.contains(x) {
                    let grown = eta.with_site(x);
                    if grown.len() <= 3 {
                        v += p.z * dom.site_weight() * g.get(&grown);
                    }
                }
            }
            v
        });
        assert!(got.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn dual_generator_vanishes_at_empty() {
        let (dom, pot) = small_domain();
        for seed in 0..5u64 {
            let k = SymFn::sample(dom.num_sites(), 3, seed, |n| 1.5f64.powi(n as i32), false);
            let out = apply_dual_generator(&k, &params(0.9, 0.1), &pot, &dom);
            assert_eq!(out.value_at_empty(), 0.0);
        }
    }

    #[test]
    fn dual_generator_free_case_fixes_poisson() {
        // φ ≡ 0: (L*k)(η) = -|η|k(η) + z Σ_x k(η∖x); z^{|·|} is annihilated
        // exactly, order by order.
        let dom = DomainSpec::new(9, 0.5).unwrap();
        let pot = Potential::zero();
        for &z in &[0.2, 0.5] {
            let k = SymFn::poisson(9, 3, z);
            let out = apply_dual_generator(&k, &params(z, 0.1), &pot, &dom);
            assert!(norm_k_c(&out, 2.0) < 1e-14);
        }
    }

    #[test]
    fn dual_generator_free_case_matches_closed_form() {
        let dom = DomainSpec::new(8, 0.5).unwrap();
        let pot = Potential::zero();
        let p = params(0.4, 0.1);
        let k = SymFn::sample(8, 3, 3, |n| 1.3f64.powi(n as i32), false);
        let got = apply_dual_generator(&k, &p, &pot, &dom);
        let want = SymFn::from_fn(8, 3, |eta| {
            let mut v = -(eta.len() as f64) * k.get(eta);
            for i in 0..eta.len() {
                v += p.z * k.get(&eta.without_index(i));
            }
            v
        });
        assert!(got.max_abs_diff(&want) < 1e-14);
    }

    #[test]
    fn step_free_case_fixes_empty_indicator() {
        let dom = DomainSpec::new(7, 0.5).unwrap();
        let pot = Potential::zero();
        let g = SymFn::indicator_empty(7, 3);
        let out = apply_step(&g, &params(0.5, 0.2), &pot, &dom);
        assert!(out.max_abs_diff(&g) < 1e-15);
    }

    #[test]
    fn dual_step_preserves_empty_value() {
        let (dom, pot) = small_domain();
        let k = SymFn::sample(dom.num_sites(), 3, 21, |n| 1.8f64.powi(n as i32), false);
        let out = apply_dual_step(&k, &params(0.33, 0.07), &pot, &dom);
        assert_eq!(out.value_at_empty(), k.value_at_empty());
    }

    #[test]
    fn dual_step_free_case_fixes_poisson() {
        // φ ≡ 0 kills the cloud kernel; the remaining binomial sum over
        // survivors reproduces z^{|η|} for every δ.
        let dom = DomainSpec::new(9, 0.5).unwrap();
        let pot = Potential::zero();
        for &z in &[0.2, 0.5] {
            for &delta in &[0.1, 0.01] {
                let k = SymFn::poisson(9, 3, z);
                let out = apply_dual_step(&k, &params(z, delta), &pot, &dom);
                let mut diff = out;
                diff.axpy(-1.0, &k);
                assert!(norm_k_c(&diff, 2.0) < 1e-14);
            }
        }
    }

    #[test]
    fn duality_generator_random_pairs() {
        let (dom, pot) = small_domain();
        let w = PairingWeights::from_domain(&dom);
        let p = params(0.3, 0.1);
        for seed in 0..10u64 {
            let g = SymFn::sample(dom.num_sites(), 3, seed, |n| 0.9f64.powi(n as i32), false);
            let k = SymFn::sample(dom.num_sites(), 3, seed ^ 0xff, |n| 1.6f64.powi(n as i32), false);
            let lhs = pairing(&apply_generator(&g, &p, &pot, &dom), &k, &w);
            let rhs = pairing(&g, &apply_dual_generator(&k, &p, &pot, &dom), &w);
            assert!((lhs - rhs).abs() < 1e-12, "seed {seed}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn duality_step_random_pairs() {
        let (dom, pot) = small_domain();
        let w = PairingWeights::from_domain(&dom);
        let p = params(0.3, 0.15);
        for seed in 0..10u64 {
            let g = SymFn::sample(dom.num_sites(), 3, seed, |n| 0.9f64.powi(n as i32), false);
            let k = SymFn::sample(dom.num_sites(), 3, seed ^ 0xaa, |n| 1.6f64.powi(n as i32), false);
            let lhs = pairing(&apply_step(&g, &p, &pot, &dom), &k, &w);
            let rhs = pairing(&g, &apply_dual_step(&k, &p, &pot, &dom), &w);
            assert!((lhs - rhs).abs() < 1e-12, "seed {seed}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn duality_holds_with_small_kernel_cap() {
        // The caps are applied consistently on both sides, so duality stays
        // exact even when the kernel cap truncates aggressively.
        let (dom, pot) = small_domain();
        let w = PairingWeights::from_domain(&dom);
        for cap in 0..=2usize {
            let p = OperatorParams::new(0.3, 0.15, cap).unwrap();
            let g = SymFn::sample(dom.num_sites(), 3, 5, |n| 0.9f64.powi(n as i32), false);
            let k = SymFn::sample(dom.num_sites(), 3, 6, |n| 1.6f64.powi(n as i32), false);
            let lhs_gen = pairing(&apply_generator(&g, &p, &pot, &dom), &k, &w);
            let rhs_gen = pairing(&g, &apply_dual_generator(&k, &p, &pot, &dom), &w);
            assert!((lhs_gen - rhs_gen).abs() < 1e-12, "generator, cap {cap}");
            let lhs_step = pairing(&apply_step(&g, &p, &pot, &dom), &k, &w);
            let rhs_step = pairing(&g, &apply_dual_step(&k, &p, &pot, &dom), &w);
            assert!((lhs_step - rhs_step).abs() < 1e-12, "step, cap {cap}");
        }
    }

    #[test]
    fn operators_are_linear() {
        let (dom, pot) = small_domain();
        let p = params(0.4, 0.1);
        let a = SymFn::sample(dom.num_sites(), 3, 1, |_| 1.0, false);
        let b = SymFn::sample(dom.num_sites(), 3, 2, |_| 1.0, false);
        let mut combo = a.clone();
        combo.scale(1.5);
        combo.axpy(-0.5, &b);
        type Op = fn(&SymFn, &OperatorParams, &Potential, &DomainSpec) -> SymFn;
        let ops: [Op; 4] = [apply_generator, apply_dual_generator, apply_step, apply_dual_step];
        for op in ops {
            let direct = op(&combo, &p, &pot, &dom);
            let mut assembled = op(&a, &p, &pot, &dom);
            assembled.scale(1.5);
            assembled.axpy(-0.5, &op(&b, &p, &pot, &dom));
            assert!(direct.max_abs_diff(&assembled) < 1e-12);
        }
    }

    #[test]
    fn residual_zero_input() {
        let (dom, pot) = small_domain();
        let k = SymFn::zeros(dom.num_sites(), 3);
        assert_eq!(
            generator_residual(&k, &params(0.3, 0.05), &pot, &dom, 2.0),
            0.0
        );
    }

    #[test]
    fn residual_free_poisson_is_zero() {
        let dom = DomainSpec::new(8, 0.5).unwrap();
        let pot = Potential::zero();
        let k = SymFn::poisson(8, 3, 0.4);
        let r = generator_residual(&k, &params(0.4, 0.05), &pot, &dom, 2.0);
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn residual_shrinks_linearly_in_delta() {
        let (dom, pot) = small_domain();
        let k = SymFn::sample(dom.num_sites(), 3, 9, |n| 1.5f64.powi(n as i32), false);
        let r1 = generator_residual(&k, &params(0.3, 0.1), &pot, &dom, 2.0);
        let r2 = generator_residual(&k, &params(0.3, 0.05), &pot, &dom, 2.0);
        let r3 = generator_residual(&k, &params(0.3, 0.025), &pot, &dom, 2.0);
        assert!(r2 / r1 <= 0.6, "{r2} / {r1}");
        assert!(r3 / r2 <= 0.6, "{r3} / {r2}");
    }
}
