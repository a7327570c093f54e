//! Bundle comparison: per-row numeric diffs between two runs.
//!
//! Used for step-halving and spacing-halving consistency sweeps and for
//! seed-to-seed checks of simulation output. Files are matched by name;
//! rows must agree on their key columns (everything that is not a float
//! payload), otherwise the grids are declared incompatible.

use std::path::Path;

use anyhow::Context;

/// Per-file comparison outcome.
#[derive(Clone, Debug)]
pub struct FileDiff {
    pub name: String,
    pub rows: usize,
    pub max_abs_diff: f64,
    /// For simulation estimates: worst discrepancy in combined standard
    /// errors, when both files carry `std_err` columns.
    pub max_sigmas: Option<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct CompareReport {
    pub files: Vec<FileDiff>,
}

impl CompareReport {
    pub fn max_abs_diff(&self) -> f64 {
        self.files
            .iter()
            .map(|f| f.max_abs_diff)
            .fold(0.0f64, f64::max)
    }

    pub fn within(&self, tolerance: f64) -> bool {
        self.max_abs_diff() <= tolerance
    }
}

/// Files compared when present in both bundles.
const CANDIDATES: &[&str] = &[
    "norms.csv",
    "regime.csv",
    "residuals.csv",
    "patterns.csv",
    "mc_estimates.csv",
    "k_mu.csv",
];

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> anyhow::Result<Table> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines
        .next()
        .ok_or_else(|| anyhow::anyhow!("{} is empty", path.display()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok(Table { header, rows })
}

fn diff_tables(name: &str, a: &Table, b: &Table) -> anyhow::Result<FileDiff> {
    anyhow::ensure!(
        a.header == b.header,
        "{name}: headers differ ({:?} vs {:?})",
        a.header,
        b.header
    );
    anyhow::ensure!(
        a.rows.len() == b.rows.len(),
        "{name}: incompatible grids ({} vs {} rows)",
        a.rows.len(),
        b.rows.len()
    );
    let se_col = a.header.iter().position(|h| h == "std_err");
    let est_col = a.header.iter().position(|h| h == "estimate");
    let mut max_abs = 0.0f64;
    let mut max_sigmas: Option<f64> = None;
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        anyhow::ensure!(
            ra.len() == rb.len(),
            "{name}: ragged rows ({} vs {} cells)",
            ra.len(),
            rb.len()
        );
        for (col, (ca, cb)) in ra.iter().zip(rb).enumerate() {
            match (ca.parse::<f64>(), cb.parse::<f64>()) {
                (Ok(va), Ok(vb)) => {
                    let d = (va - vb).abs();
                    max_abs = max_abs.max(d);
                    if let (Some(ec), Some(sc)) = (est_col, se_col) {
                        if col == ec {
                            let sa: f64 = ra[sc].parse().unwrap_or(0.0);
                            let sb: f64 = rb[sc].parse().unwrap_or(0.0);
                            let combined = (sa * sa + sb * sb).sqrt();
                            if combined > 0.0 {
                                let s = d / combined;
                                max_sigmas = Some(max_sigmas.unwrap_or(0.0).max(s));
                            }
                        }
                    }
                }
                (Err(_), Err(_)) => {
                    // Key columns must agree exactly; otherwise the rows
                    // describe different grids.
                    anyhow::ensure!(
                        ca == cb,
                        "{name}: incompatible grids (key `{ca}` vs `{cb}`)"
                    );
                }
                _ => anyhow::bail!("{name}: cell type mismatch (`{ca}` vs `{cb}`)"),
            }
        }
    }
    Ok(FileDiff {
        name: name.to_string(),
        rows: a.rows.len(),
        max_abs_diff: max_abs,
        max_sigmas,
    })
}

/// Compares all recognized CSVs present in both bundle directories.
pub fn compare_bundles(dir_a: &Path, dir_b: &Path) -> anyhow::Result<CompareReport> {
    let mut report = CompareReport::default();
    for name in CANDIDATES {
        let (pa, pb) = (dir_a.join(name), dir_b.join(name));
        if pa.exists() && pb.exists() {
            let (ta, tb) = (read_table(&pa)?, read_table(&pb)?);
            report.files.push(diff_tables(name, &ta, &tb)?);
        }
    }
    anyhow::ensure!(
        !report.files.is_empty(),
        "no comparable files found in {} and {}",
        dir_a.display(),
        dir_b.display()
    );
    Ok(report)
}
