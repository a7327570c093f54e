//! Result bundle: manifest, CSV tables, snapshots.
//!
//! Every float is printed with 17 significant digits (exact `f64`
//! round-trip), row order is fixed, and nothing time- or path-dependent is
//! written, so identical configs with identical seeds produce byte-identical
//! files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use glauber_core::evolution::{NormRecord, Trajectory};
use glauber_core::symfn::fmt_f64;
use glauber_core::SymFn;

use crate::config::ExperimentConfig;

/// One audited inequality with its observed value and bound.
#[derive(Clone, Debug, Serialize)]
pub struct AuditRecord {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub bound: f64,
}

impl AuditRecord {
    pub fn upper(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: value <= bound,
            value,
            bound,
        }
    }

    pub fn flag(name: &str, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            bound: 1.0,
        }
    }
}

/// Derived quantities echoed into the manifest; everything here is
/// recomputable from the config alone.
#[derive(Clone, Debug, Serialize)]
pub struct DerivedParams {
    pub c_phi: f64,
    pub delta: f64,
    pub alpha: f64,
    pub nu: f64,
    pub n_max: usize,
    pub n_xi: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x2: Option<f64>,
    pub in_regime: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_tail: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_fp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_pos: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub scenario: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub derived: DerivedParams,
    pub audits: Vec<AuditRecord>,
    pub outputs: Vec<String>,
}

/// A finished run: manifest plus verdict.
#[derive(Clone, Debug)]
pub struct ResultBundle {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

impl ResultBundle {
    pub fn all_pass(&self) -> bool {
        self.manifest.audits.iter().all(|a| a.pass)
    }
}

pub struct BundleWriter {
    out_dir: PathBuf,
    outputs: Vec<String>,
}

impl BundleWriter {
    pub fn create(out_dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            outputs: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    fn register(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        fs::write(self.out_dir.join(name), text)?;
        self.register(name);
        Ok(())
    }

    /// `norms.csv`: step, time, the two weighted norms, and the distance to
    /// the reference when tracked (empty field otherwise).
    pub fn write_norms(&mut self, records: &[NormRecord]) -> anyhow::Result<()> {
        let mut text = String::from("step,time,norm_kc,norm_kac,dist_ref\n");
        for r in records {
            let dist = r.dist_ref.map(fmt_f64).unwrap_or_default();
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                r.step,
                fmt_f64(r.time),
                fmt_f64(r.norm_c),
                fmt_f64(r.norm_alpha_c),
                dist
            ));
        }
        self.write_text("norms.csv", &text)
    }

    /// Snapshot files under `snapshots/`, one order-tagged table per state.
    pub fn write_snapshots(&mut self, traj: &Trajectory) -> anyhow::Result<()> {
        let dir = self.out_dir.join("snapshots");
        fs::create_dir_all(&dir)?;
        for (step, state) in &traj.snapshots {
            let name = format!("snapshots/step_{step:06}.csv");
            let mut buf = Vec::new();
            state.write_table(&mut buf)?;
            fs::write(self.out_dir.join(&name), buf)?;
            self.register(&name);
        }
        Ok(())
    }

    pub fn write_symfn(&mut self, name: &str, f: &SymFn) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        f.write_table(&mut buf)?;
        fs::write(self.out_dir.join(name), buf)?;
        self.register(name);
        Ok(())
    }

    /// Generic CSV: fixed header, rows of preformatted cells.
    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[Vec<String>]) -> anyhow::Result<()> {
        let mut text = String::from(header);
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_text(name, &text)
    }

    pub fn finish(mut self, mut manifest: Manifest) -> anyhow::Result<ResultBundle> {
        manifest.outputs = std::mem::take(&mut self.outputs);
        manifest.outputs.push("manifest.toml".to_string());
        let text = toml::to_string_pretty(&manifest)?;
        let mut f = fs::File::create(self.out_dir.join("manifest.toml"))?;
        f.write_all(text.as_bytes())?;
        Ok(ResultBundle {
            out_dir: self.out_dir,
            manifest,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt_is_deterministic_and_roundtrips() {
        for &x in &[0.0, -0.0, 1.5, -2.25e-7, std::f64::consts::PI] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            if x == 0.0 {
                assert_eq!(back, 0.0);
                assert_eq!(s, "0.0000000000000000e0");
            } else {
                assert_eq!(back.to_bits(), x.to_bits(), "{s}");
            }
        }
    }
}
