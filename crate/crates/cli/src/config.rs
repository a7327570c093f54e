//! Experiment configuration: strict TOML with no defaults for physics.
//!
//! Unknown keys are rejected everywhere, as are scenario sections that the
//! selected scenario does not use. Physics parameters (activity, weight
//! base, potential, box) must be spelled out; only numerics (`delta`,
//! `alpha`, `n_xi`, `stride`) have defaults, all of them recorded in the
//! manifest after resolution.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use glauber_core::domain::{c_phi, DomainSpec, Potential};
use glauber_core::evolution::default_delta;
use glauber_core::operators::OperatorParams;
use glauber_core::regime;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Evolve,
    Ergodicity,
    FixedPoint,
    McCompare,
    Positivity,
    RegimeReport,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Evolve => "evolve",
            Scenario::Ergodicity => "ergodicity",
            Scenario::FixedPoint => "fixed-point",
            Scenario::McCompare => "mc-compare",
            Scenario::Positivity => "positivity",
            Scenario::RegimeReport => "regime-report",
        }
    }
}

/// A numeric field that may be left to the engine (`"auto"`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr {
    Value(f64),
    Keyword(AutoKeyword),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoKeyword {
    Auto,
}

impl Default for AutoOr {
    fn default() -> Self {
        AutoOr::Keyword(AutoKeyword::Auto)
    }
}

impl AutoOr {
    pub fn resolved(self) -> Option<f64> {
        match self {
            AutoOr::Value(v) => Some(v),
            AutoOr::Keyword(_) => None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub num_sites: u32,
    pub spacing: f64,
    #[serde(default = "default_dimension")]
    pub dimension: u32,
}

fn default_dimension() -> u32 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    pub range_sites: u32,
    /// `values[r]` is the potential at `r` lattice steps, `r = 0..=range`.
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub z: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(default)]
    pub alpha: AutoOr,
    #[serde(default)]
    pub delta: AutoOr,
    pub n_max: usize,
    #[serde(default)]
    pub n_xi: Option<usize>,
    #[serde(default)]
    pub nu: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Poisson,
    Gibbs,
    Custom,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub kind: InitialKind,
    #[serde(default)]
    pub z0: Option<f64>,
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    10
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub t_end: f64,
    pub burn_in: f64,
    #[serde(default = "default_replicas")]
    pub replicas: u32,
    #[serde(default = "default_mc_order")]
    pub order: usize,
}

fn default_replicas() -> u32 {
    1
}

fn default_mc_order() -> usize {
    2
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositivitySection {
    pub times: Vec<f64>,
    pub window: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub domain: DomainSection,
    pub potential: PotentialSection,
    pub params: ParamsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evolve: Option<EvolveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc: Option<McSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positivity: Option<PositivitySection>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.check_sections()?;
        Ok(cfg)
    }

    /// Scenario/section consistency: required sections present, unrelated
    /// ones rejected.
    fn check_sections(&self) -> anyhow::Result<()> {
        use Scenario::*;
        let need = |present: bool, name: &str| -> anyhow::Result<()> {
            anyhow::ensure!(
                present,
                "scenario `{}` requires section `[{}]`",
                self.scenario.name(),
                name
            );
            Ok(())
        };
        let forbid = |absent: bool, name: &str| -> anyhow::Result<()> {
            anyhow::ensure!(
                absent,
                "section `[{}]` is not used by scenario `{}`",
                name,
                self.scenario.name()
            );
            Ok(())
        };
        match self.scenario {
            Evolve | Ergodicity => {
                need(self.initial.is_some(), "initial")?;
                need(self.evolve.is_some(), "evolve")?;
                forbid(self.mc.is_none(), "mc")?;
                forbid(self.positivity.is_none(), "positivity")?;
            }
            FixedPoint | RegimeReport => {
                forbid(self.initial.is_none(), "initial")?;
                forbid(self.evolve.is_none(), "evolve")?;
                forbid(self.mc.is_none(), "mc")?;
                forbid(self.positivity.is_none(), "positivity")?;
            }
            McCompare => {
                need(self.mc.is_some(), "mc")?;
                forbid(self.initial.is_none(), "initial")?;
                forbid(self.evolve.is_none(), "evolve")?;
                forbid(self.positivity.is_none(), "positivity")?;
            }
            Positivity => {
                need(self.initial.is_some(), "initial")?;
                need(self.positivity.is_some(), "positivity")?;
                forbid(self.evolve.is_none(), "evolve")?;
                forbid(self.mc.is_none(), "mc")?;
            }
        }
        if let Some(init) = &self.initial {
            match init.kind {
                InitialKind::Poisson | InitialKind::Gibbs => {
                    anyhow::ensure!(init.z0.is_some(), "initial condition requires `z0`");
                }
                InitialKind::Custom => {
                    anyhow::ensure!(init.path.is_some(), "custom initial condition requires `path`");
                }
            }
        }
        Ok(())
    }

    pub fn build_domain(&self) -> anyhow::Result<DomainSpec> {
        Ok(DomainSpec::with_dimension(
            self.domain.num_sites,
            self.domain.spacing,
            self.domain.dimension,
        )?)
    }

    pub fn build_potential(&self) -> anyhow::Result<Potential> {
        anyhow::ensure!(
            self.potential.values.len() == self.potential.range_sites as usize + 1,
            "potential table must list range_sites + 1 values"
        );
        Ok(Potential::new(self.potential.values.clone())?)
    }
}

/// Everything derived from a config: core objects, resolved numerics, and
/// the regime report.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub dom: DomainSpec,
    pub pot: Potential,
    pub params: OperatorParams,
    pub c: f64,
    pub c_phi: f64,
    pub alpha: f64,
    pub nu: f64,
    pub n_max: usize,
    pub report: regime::RegimeReport,
    /// Present when the full regime validation succeeded.
    pub regime: Option<regime::RegimeParams>,
}

impl ExperimentConfig {
    /// Builds core objects and resolves `alpha`, `delta`, `nu`, `n_xi`.
    /// Scenarios that are gated on the regime enforce it in the runner.
    pub fn resolve(&self) -> anyhow::Result<Resolved> {
        let dom = self.build_domain()?;
        let pot = self.build_potential()?;
        anyhow::ensure!(self.params.c > 1.0, "weight base C must exceed 1");
        anyhow::ensure!(self.params.n_max >= 1, "n_max must be at least 1");
        let cp = c_phi(&pot, &dom);
        let n_max = self.params.n_max;
        let n_xi = self.params.n_xi.unwrap_or_else(|| n_max.min(3));
        anyhow::ensure!(n_xi <= n_max, "n_xi must not exceed n_max");
        let delta = match self.params.delta.resolved() {
            Some(v) => v,
            None => default_delta(n_max),
        };
        let params = OperatorParams::new(self.params.z, delta, n_xi)?;
        let report = regime::report(self.params.z, self.params.c, cp);
        let regime_params = regime::validate(
            self.params.z,
            self.params.c,
            cp,
            self.params.alpha.resolved(),
            self.params.nu,
        )
        .ok();
        let alpha = match self.params.alpha.resolved() {
            Some(v) => {
                anyhow::ensure!(v > 0.0 && v < 1.0, "alpha must lie in (0, 1)");
                v
            }
            None => regime_params
                .map(|r| r.alpha)
                .or(report.alpha_auto)
                .unwrap_or(0.75),
        };
        let nu = self
            .params
            .nu
            .or(regime_params.map(|r| r.nu))
            .or(report.nu_star)
            .unwrap_or(1.0);
        Ok(Resolved {
            dom,
            pot,
            params,
            c: self.params.c,
            c_phi: cp,
            alpha,
            nu,
            n_max,
            report,
            regime: regime_params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
scenario = "regime-report"
seed = 7

[domain]
num_sites = 12
spacing = 0.5

[potential]
range_sites = 1
values = [1.0, 1.0]

[params]
z = 0.08
C = 2.0
n_max = 3
"#;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.scenario, Scenario::RegimeReport);
        let r = cfg.resolve().unwrap();
        assert_eq!(r.params.kernel_cap, 3);
        assert!((r.params.delta - 0.05).abs() < 1e-15);
        assert!(r.regime.is_some());
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = BASE.replace("[params]", "[params]\nbogus_key = 1.0");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("bogus_key"), "{err}");
    }

    #[test]
    fn rejects_unrelated_section() {
        let text = format!("{BASE}\n[mc]\nt_end = 10.0\nburn_in = 1.0\n");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("`[mc]` is not used"), "{err}");
    }

    #[test]
    fn requires_scenario_sections() {
        let text = BASE.replace("regime-report", "evolve");
        let err = ExperimentConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("requires section"), "{err}");
    }

    #[test]
    fn alpha_accepts_auto_and_value() {
        let with_auto = BASE.replace("n_max = 3", "n_max = 3\nalpha = \"auto\"");
        let cfg = ExperimentConfig::from_toml(&with_auto).unwrap();
        assert_eq!(cfg.params.alpha, AutoOr::Keyword(AutoKeyword::Auto));
        let with_value = BASE.replace("n_max = 3", "n_max = 3\nalpha = 0.8");
        let cfg = ExperimentConfig::from_toml(&with_value).unwrap();
        assert_eq!(cfg.params.alpha.resolved(), Some(0.8));
        let bad = BASE.replace("n_max = 3", "n_max = 3\nalpha = \"automagic\"");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn resolve_flags_out_of_regime() {
        let text = BASE.replace("z = 0.08", "z = 0.3");
        let cfg = ExperimentConfig::from_toml(&text).unwrap();
        let r = cfg.resolve().unwrap();
        assert!(r.regime.is_none());
        assert!(!r.report.in_regime);
        // alpha still resolves from the threshold formula
        assert!(r.alpha > 0.5 && r.alpha < 1.0);
    }
}
