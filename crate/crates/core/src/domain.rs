//! The discretized box and the pair potential.
//!
//! The box is a 1-D lattice of `M` sites at coordinates `x_i = i·h`, free
//! boundary. Integrals over space become `h · Σ_i` over the sites. The pair
//! potential `phi` is an even, nonnegative, finite-range function tabulated
//! at integer step distances; `phi(r) = 0` beyond its range.

use crate::config::FiniteConfig;
use crate::error::Error;

/// Relative energy of a point against a configuration, in energy units.
/// Finite for every finite configuration and finite potential; kept
/// nonnegative by the potential's sign constraint.
pub type EnergyValue = f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Free,
}

/// The discretized 1-D box standing in for continuous space.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    num_sites: u32,
    spacing: f64,
    dimension: u32,
    boundary: Boundary,
}

impl DomainSpec {
    /// A 1-D box of `num_sites >= 2` sites with spacing `spacing > 0`.
    pub fn new(num_sites: u32, spacing: f64) -> Result<Self, Error> {
        Self::with_dimension(num_sites, spacing, 1)
    }

    /// The data model reserves a dimension field; only `dimension = 1` is
    /// accepted by the current engine.
    pub fn with_dimension(num_sites: u32, spacing: f64, dimension: u32) -> Result<Self, Error> {
        if dimension != 1 {
            return Err(Error::UnsupportedDimension { dimension });
        }
        if num_sites < 2 {
            return Err(Error::DomainTooSmall { num_sites });
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::NonPositiveSpacing { spacing });
        }
        Ok(Self {
            num_sites,
            spacing,
            dimension,
            boundary: Boundary::Free,
        })
    }

    pub fn num_sites(&self) -> u32 {
        self.num_sites
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dimension(&self) -> u32 {
        self.dimension
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Volume element per lattice site, `h^d`.
    pub fn site_weight(&self) -> f64 {
        self.spacing.powi(self.dimension as i32)
    }

    pub fn coordinate(&self, site: u32) -> f64 {
        site as f64 * self.spacing
    }

    /// Box length `(M-1)·h`.
    pub fn length(&self) -> f64 {
        (self.num_sites - 1) as f64 * self.spacing
    }

    pub fn check_site(&self, site: u32) -> Result<(), Error> {
        if site >= self.num_sites {
            return Err(Error::SiteOutOfRange {
                site,
                num_sites: self.num_sites,
            });
        }
        Ok(())
    }

    pub fn check_config(&self, eta: &FiniteConfig) -> Result<(), Error> {
        match eta.sites().last() {
            Some(&s) => self.check_site(s),
            None => Ok(()),
        }
    }
}

/// Even, nonnegative pair potential with finite range, tabulated at step
/// distances `0..=range`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    /// `values[r]` is `phi` at distance `r` lattice steps; the table length
    /// fixes the range. Every entry must be finite and nonnegative.
    pub fn new(values: Vec<f64>) -> Result<Self, Error> {
        if values.is_empty() {
            return Err(Error::PotentialTableShape);
        }
        for (r, &v) in values.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativePotential {
                    distance: r as u32,
                    value: v,
                });
            }
        }
        Ok(Self { values })
    }

    /// The free case `phi ≡ 0`.
    pub fn zero() -> Self {
        Self { values: vec![0.0] }
    }

    /// Step potential: `phi(r) = height` for `r <= range`, 0 beyond.
    pub fn step(height: f64, range: u32) -> Result<Self, Error> {
        Self::new(vec![height; range as usize + 1])
    }

    pub fn range_sites(&self) -> u32 {
        self.values.len() as u32 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `phi` at a distance in lattice steps; 0 beyond the range.
    #[inline]
    pub fn at_distance(&self, r: u32) -> f64 {
        self.values.get(r as usize).copied().unwrap_or(0.0)
    }

    /// `phi(|i - j|)`; evenness is structural.
    #[inline]
    pub fn between(&self, i: u32, j: u32) -> f64 {
        self.at_distance(i.abs_diff(j))
    }
}

/// Interaction energy `Σ_{y ∈ sites} phi(|x - y|)` of a point against a raw
/// site list. Permissive: a `y = x` term contributes `phi(0)`, which the
/// operator kernels rely on when integration variables overlap.
#[inline]
pub fn interaction_energy(x: u32, sites: &[u32], pot: &Potential) -> f64 {
    let mut e = 0.0;
    for &y in sites {
        e += pot.between(x, y);
    }
    e
}

/// Relative energy `E(x, η) = Σ_{y ∈ η} phi(x - y)` of a new point `x`
/// against the configuration `η`; 0 for the empty configuration. The caller
/// must pass `x ∉ η` (remove the point first when evaluating against a
/// configuration that contains it).
pub fn relative_energy(
    x: u32,
    eta: &FiniteConfig,
    pot: &Potential,
    dom: &DomainSpec,
) -> Result<EnergyValue, Error> {
    dom.check_site(x)?;
    dom.check_config(eta)?;
    debug_assert!(!eta.contains(x), "x must not belong to the configuration");
    Ok(interaction_energy(x, eta.sites(), pot))
}

/// Total pair energy `Σ_{u < v ∈ η} phi(u - v)`; 0 for orders 0 and 1.
pub fn pair_energy(eta: &FiniteConfig, pot: &Potential) -> EnergyValue {
    let sites = eta.sites();
    let mut e = 0.0;
    for (i, &u) in sites.iter().enumerate() {
        for &v in &sites[i + 1..] {
            e += pot.between(u, v);
        }
    }
    e
}

/// Lattice quadrature of the integrability functional:
/// `C_phi = h · Σ_{j=-R..R} (1 - exp(-phi(|j|)))`.
///
/// Computed over the whole support of `phi`, independent of the box size;
/// scales linearly in the spacing.
pub fn c_phi(pot: &Potential, dom: &DomainSpec) -> f64 {
    let r = pot.range_sites();
    let mut s = 1.0 - (-pot.at_distance(0)).exp();
    for j in 1..=r {
        s += 2.0 * (1.0 - (-pot.at_distance(j)).exp());
    }
    dom.site_weight() * s
}

/// Birth-rate factor `exp(-E(x, η))`, always in `(0, 1]`.
pub fn boltzmann_factor(
    x: u32,
    eta: &FiniteConfig,
    pot: &Potential,
    dom: &DomainSpec,
) -> Result<f64, Error> {
    Ok((-relative_energy(x, eta, pot, dom)?).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dom() -> DomainSpec {
        DomainSpec::new(10, 0.5).unwrap()
    }

    #[test]
    fn domain_validation() {
        assert!(matches!(
            DomainSpec::new(1, 0.5),
            Err(Error::DomainTooSmall { .. })
        ));
        assert!(matches!(
            DomainSpec::new(4, 0.0),
            Err(Error::NonPositiveSpacing { .. })
        ));
        assert!(matches!(
            DomainSpec::with_dimension(4, 0.5, 2),
            Err(Error::UnsupportedDimension { dimension: 2 })
        ));
        let d = dom();
        assert_eq!(d.site_weight(), 0.5);
        assert_eq!(d.coordinate(3), 1.5);
        assert_eq!(d.length(), 4.5);
    }

    #[test]
    fn potential_validation() {
        assert!(Potential::new(vec![]).is_err());
        assert!(matches!(
            Potential::new(vec![1.0, -0.1]),
            Err(Error::NegativePotential { distance: 1, .. })
        ));
        let p = Potential::step(2.0, 3).unwrap();
        assert_eq!(p.range_sites(), 3);
        assert_eq!(p.at_distance(3), 2.0);
        assert_eq!(p.at_distance(4), 0.0);
        assert_eq!(p.between(7, 4), 2.0);
    }

    #[test]
    fn relative_energy_empty_is_zero() {
        let e = relative_energy(4, &FiniteConfig::empty(), &Potential::step(1.0, 1).unwrap(), &dom())
            .unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn relative_energy_single_neighbor_step() {
        let pot = Potential::step(0.7, 2).unwrap();
        let eta = FiniteConfig::singleton(5);
        assert_eq!(relative_energy(3, &eta, &pot, &dom()).unwrap(), 0.7);
        assert_eq!(relative_energy(8, &eta, &pot, &dom()).unwrap(), 0.0);
    }

    #[test]
    fn relative_energy_additive_over_disjoint_parts() {
        let pot = Potential::new(vec![0.3, 1.1, 0.2]).unwrap();
        let a = FiniteConfig::new(vec![1, 2]).unwrap();
        let b = FiniteConfig::new(vec![5, 6]).unwrap();
        let both = a.union_disjoint(&b);
        let d = dom();
        let x = 4;
        let ea = relative_energy(x, &a, &pot, &d).unwrap();
        let eb = relative_energy(x, &b, &pot, &d).unwrap();
        let eab = relative_energy(x, &both, &pot, &d).unwrap();
        assert!((eab - (ea + eb)).abs() < 1e-15);
    }

    #[test]
    fn relative_energy_monotone_under_inclusion() {
        let pot = Potential::new(vec![0.5, 0.25, 0.125]).unwrap();
        let small = FiniteConfig::new(vec![2, 3]).unwrap();
        let large = FiniteConfig::new(vec![2, 3, 4, 6]).unwrap();
        let d = dom();
        let es = relative_energy(5, &small, &pot, &d).unwrap();
        let el = relative_energy(5, &large, &pot, &d).unwrap();
        assert!(es <= el);
    }

    #[test]
    fn relative_energy_rejects_out_of_range() {
        let err = relative_energy(10, &FiniteConfig::empty(), &Potential::zero(), &dom());
        assert!(matches!(err, Err(Error::SiteOutOfRange { site: 10, .. })));
    }

    #[test]
    fn pair_energy_cases() {
        let pot = Potential::new(vec![9.0, 0.4, 0.1]).unwrap();
        assert_eq!(pair_energy(&FiniteConfig::empty(), &pot), 0.0);
        assert_eq!(pair_energy(&FiniteConfig::singleton(3), &pot), 0.0);
        // {0,1,2}: distances 1,1,2 -> 2a + b; phi(0) never enters.
        let eta = FiniteConfig::new(vec![0, 1, 2]).unwrap();
        assert!((pair_energy(&eta, &pot) - (2.0 * 0.4 + 0.1)).abs() < 1e-15);
    }

    #[test]
    fn c_phi_zero_potential() {
        assert_eq!(c_phi(&Potential::zero(), &dom()), 0.0);
    }

    #[test]
    fn c_phi_step_closed_form() {
        // h=0.5, R=2, a=1: 0.5 * 5 * (1 - e^{-1}).
        let pot = Potential::step(1.0, 2).unwrap();
        let v = c_phi(&pot, &dom());
        assert!((v - 1.5803013970713942).abs() < 1e-12);
        let generic = dom().site_weight() * 5.0 * (1.0 - (-1.0f64).exp());
        assert!((v - generic).abs() < 1e-15);
    }

    #[test]
    fn c_phi_scales_linearly_in_spacing() {
        let pot = Potential::step(0.8, 1).unwrap();
        let d1 = DomainSpec::new(10, 0.5).unwrap();
        let d2 = DomainSpec::new(20, 0.25).unwrap();
        assert!((c_phi(&pot, &d1) - 2.0 * c_phi(&pot, &d2)).abs() < 1e-15);
    }

    #[test]
    fn boltzmann_factor_cases() {
        let d = dom();
        assert_eq!(
            boltzmann_factor(2, &FiniteConfig::empty(), &Potential::step(1.0, 1).unwrap(), &d)
                .unwrap(),
            1.0
        );
        assert_eq!(
            boltzmann_factor(2, &FiniteConfig::singleton(3), &Potential::zero(), &d).unwrap(),
            1.0
        );
        let v = boltzmann_factor(2, &FiniteConfig::singleton(3), &Potential::step(1.0, 1).unwrap(), &d)
            .unwrap();
        assert!((v - 0.36787944117144233).abs() < 1e-15);
        assert!(v > 0.0 && v <= 1.0);
    }
}
