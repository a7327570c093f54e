//! Scenario execution: wires configs to the engine and writes bundles.

use std::path::Path;

use anyhow::Context;

use glauber_core::calculus::{norm_k_c, PairingWeights};
use glauber_core::evolution::{
    ergodic_decay_report, evolve_correlations, invariance_audit, EvolveSettings, Tolerances,
};
use glauber_core::oracles::gibbs::{
    exact_gibbs_correlations, gibbs_fixed_point_residual, residual_tolerance, GibbsSpec,
};
use glauber_core::oracles::mc::{mc_birth_death, McConfig};
use glauber_core::oracles::positivity::{positivity_probe, positivity_tolerance};
use glauber_core::regime;
use glauber_core::symfn::fmt_f64;
use glauber_core::SymFn;

use crate::config::{ExperimentConfig, InitialKind, Resolved, Scenario};
use crate::report::{AuditRecord, BundleWriter, DerivedParams, Manifest, ResultBundle};

fn derived(res: &Resolved) -> DerivedParams {
    DerivedParams {
        c_phi: res.c_phi,
        delta: res.params.delta,
        alpha: res.alpha,
        nu: res.nu,
        n_max: res.n_max,
        n_xi: res.params.kernel_cap,
        alpha0: res.report.alpha0,
        nu_star: res.report.nu_star,
        rate: res.report.rate,
        x1: res.report.x1,
        x2: res.report.x2,
        in_regime: res.report.in_regime,
        tau_tail: None,
        tau_fp: None,
        tau_residual: None,
        tau_pos: None,
    }
}

/// The regime gate for scenarios that require it; the error names the failed
/// inequality with its margin.
fn require_regime(cfg: &ExperimentConfig, res: &Resolved) -> anyhow::Result<regime::RegimeParams> {
    regime::validate(
        cfg.params.z,
        cfg.params.c,
        res.c_phi,
        cfg.params.alpha.resolved(),
        cfg.params.nu,
    )
    .with_context(|| format!("scenario `{}` is regime-gated", cfg.scenario.name()))
}

fn require_low_activity(res: &Resolved) -> anyhow::Result<()> {
    let chk = &res.report.low_activity;
    anyhow::ensure!(
        chk.pass,
        "low-activity condition fails: z*c_phi = {} >= {} (margin {:e})",
        chk.value,
        chk.bound,
        chk.margin
    );
    Ok(())
}

fn build_initial(cfg: &ExperimentConfig, res: &Resolved) -> anyhow::Result<SymFn> {
    let init = cfg.initial.as_ref().expect("checked by config validation");
    match init.kind {
        InitialKind::Poisson => Ok(SymFn::poisson(
            res.dom.num_sites(),
            res.n_max,
            init.z0.unwrap(),
        )),
        InitialKind::Gibbs => {
            let spec = GibbsSpec::new(init.z0.unwrap(), res.pot.clone(), res.dom.clone())?;
            Ok(exact_gibbs_correlations(&spec, res.n_max)?)
        }
        InitialKind::Custom => {
            let path = init.path.as_ref().unwrap();
            let file = std::fs::File::open(path)
                .with_context(|| format!("cannot open initial state {}", path.display()))?;
            let f = SymFn::read_table(std::io::BufReader::new(file))?;
            anyhow::ensure!(
                f.num_sites() == res.dom.num_sites() && f.max_order() == res.n_max,
                "initial state shape ({} sites, order {}) does not match the run ({} sites, order {})",
                f.num_sites(),
                f.max_order(),
                res.dom.num_sites(),
                res.n_max
            );
            Ok(f)
        }
    }
}

/// Executes the scenario and writes the bundle. Process-level success means
/// every audit passed.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path, quiet: bool) -> anyhow::Result<ResultBundle> {
    let res = cfg.resolve()?;
    let writer = BundleWriter::create(out_dir)?;
    let bundle = match cfg.scenario {
        Scenario::RegimeReport => run_regime_report(cfg, &res, writer)?,
        Scenario::Evolve => run_evolve(cfg, &res, writer)?,
        Scenario::Ergodicity => run_ergodicity(cfg, &res, writer)?,
        Scenario::FixedPoint => run_fixed_point(cfg, &res, writer)?,
        Scenario::McCompare => run_mc_compare(cfg, &res, writer)?,
        Scenario::Positivity => run_positivity(cfg, &res, writer)?,
    };
    if !quiet {
        println!("scenario {} -> {}", cfg.scenario.name(), bundle.out_dir.display());
        for a in &bundle.manifest.audits {
            println!(
                "  [{}] {} (value {:.6e}, bound {:.6e})",
                if a.pass { "pass" } else { "FAIL" },
                a.name,
                a.value,
                a.bound
            );
        }
    }
    Ok(bundle)
}

fn run_regime_report(
    cfg: &ExperimentConfig,
    res: &Resolved,
    mut writer: BundleWriter,
) -> anyhow::Result<ResultBundle> {
    let rep = &res.report;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut push = |name: &str, value: Option<f64>, bound: Option<f64>, pass: Option<bool>| {
        rows.push(vec![
            name.to_string(),
            value.map(fmt_f64).unwrap_or_default(),
            bound.map(fmt_f64).unwrap_or_default(),
            pass.map(|p| p.to_string()).unwrap_or_default(),
        ]);
    };
    push("c_phi", Some(res.c_phi), None, None);
    push(
        "contraction_bound_single",
        Some(rep.contraction.bound_single),
        None,
        None,
    );
    push(
        "contraction_bound_double",
        Some(rep.contraction.bound_double),
        None,
        None,
    );
    push(
        "z_below_contraction_bound",
        Some(rep.z),
        Some(rep.contraction.bound_single.min(rep.contraction.bound_double)),
        Some(rep.contraction.pass),
    );
    push(
        "strict_activity",
        Some(rep.z),
        rep.strict_activity.applicable.then_some(rep.strict_activity.bound),
        Some(rep.strict_activity.pass),
    );
    push(
        "low_activity_product",
        Some(rep.low_activity.value),
        Some(rep.low_activity.bound),
        Some(rep.low_activity.pass),
    );
    push("nu_star", rep.nu_star, Some(1.0), Some(rep.nu_star.is_some()));
    push("rate", rep.rate, None, None);
    push("x1", rep.x1, None, None);
    push("x2", rep.x2, None, None);
    push("alpha0", rep.alpha0, None, None);
    push("alpha_auto", rep.alpha_auto, None, None);
    writer.write_csv("regime.csv", "quantity,value,bound,pass", &rows)?;

    let audits = vec![
        AuditRecord::flag("contraction_condition", rep.contraction.pass),
        AuditRecord::flag("strict_activity_condition", rep.strict_activity.pass),
        AuditRecord::flag("nu_star_below_one", rep.nu_star.is_some()),
        AuditRecord::flag("low_activity_condition", rep.low_activity.pass),
    ];
    writer.finish(Manifest {
        scenario: cfg.scenario.name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        derived: derived(res),
        audits,
        outputs: Vec::new(),
    })
}

fn run_evolve(
    cfg: &ExperimentConfig,
    res: &Resolved,
    mut writer: BundleWriter,
) -> anyhow::Result<ResultBundle> {
    let rp = require_regime(cfg, res)?;
    let section = cfg.evolve.as_ref().unwrap();
    let k0 = build_initial(cfg, res)?;
    let settings = EvolveSettings {
        t_end: section.t_end,
        stride: section.stride,
        c: res.c,
        alpha: rp.alpha,
    };
    let traj = evolve_correlations(&k0, &settings, &res.params, &res.pot, &res.dom, None)?;
    writer.write_norms(&traj.norms)?;
    writer.write_snapshots(&traj)?;

    let tol = Tolerances::for_run(
        norm_k_c(&k0, res.c),
        res.c,
        res.c_phi,
        &res.params,
        &res.dom,
        &res.pot,
        res.n_max,
    );
    let tau = tol.total();
    let final_state = traj.final_state();
    let conservation = (final_state.value_at_empty() - k0.value_at_empty()).abs()
        / k0.value_at_empty().abs().max(1.0);
    let max_step_growth = traj
        .norms
        .windows(2)
        .map(|w| w[1].norm_c - w[0].norm_c)
        .fold(f64::NEG_INFINITY, f64::max);
    let alpha_start = traj.norms[0].norm_alpha_c;

    let mut manifest = Manifest {
        scenario: cfg.scenario.name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        derived: derived(res),
        audits: vec![
            AuditRecord::upper("empty_value_conserved_rel", conservation, 1e-14),
            AuditRecord::upper("norm_kc_step_growth", max_step_growth, tau),
            AuditRecord::upper(
                "invariance_alpha_norm",
                invariance_audit(&traj),
                alpha_start + tau,
            ),
        ],
        outputs: Vec::new(),
    };
    manifest.derived.tau_tail = Some(tol.tail);
    manifest.derived.tau_fp = Some(tol.fp);
    writer.finish(manifest)
}

fn run_ergodicity(
    cfg: &ExperimentConfig,
    res: &Resolved,
    mut writer: BundleWriter,
) -> anyhow::Result<ResultBundle> {
    let rp = require_regime(cfg, res)?;
    require_low_activity(res)?;
    let section = cfg.evolve.as_ref().unwrap();
    let k0 = build_initial(cfg, res)?;
    let spec = GibbsSpec::new(cfg.params.z, res.pot.clone(), res.dom.clone())?;
    let k_mu = exact_gibbs_correlations(&spec, res.n_max)?;
    writer.write_symfn("k_mu.csv", &k_mu)?;

    let settings = EvolveSettings {
        t_end: section.t_end,
        stride: section.stride,
        c: res.c,
        alpha: rp.alpha,
    };
    let traj = evolve_correlations(&k0, &settings, &res.params, &res.pot, &res.dom, Some(&k_mu))?;
    writer.write_norms(&traj.norms)?;
    writer.write_snapshots(&traj)?;

    let decay = ergodic_decay_report(
        &k0,
        &k_mu,
        section.t_end,
        &res.params,
        &res.pot,
        &res.dom,
        res.c,
        rp.nu_star,
    )?;
    let slope_bound = -rp.rate + 0.05;
    let slope = decay.fitted_slope.unwrap_or(f64::NEG_INFINITY);
    let conservation = (traj.final_state().value_at_empty() - k0.value_at_empty()).abs()
        / k0.value_at_empty().abs().max(1.0);

    let mut manifest = Manifest {
        scenario: cfg.scenario.name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        derived: derived(res),
        audits: vec![
            AuditRecord::flag("decay_pointwise_bound", decay.pointwise_ok),
            AuditRecord::upper("decay_fitted_slope", slope, slope_bound),
            AuditRecord::upper("empty_value_conserved_rel", conservation, 1e-14),
        ],
        outputs: Vec::new(),
    };
    manifest.derived.tau_tail = Some(decay.tau - decay.tau_fp);
    manifest.derived.tau_fp = Some(decay.tau_fp);
    writer.finish(manifest)
}

fn run_fixed_point(
    cfg: &ExperimentConfig,
    res: &Resolved,
    mut writer: BundleWriter,
) -> anyhow::Result<ResultBundle> {
    let spec = GibbsSpec::new(cfg.params.z, res.pot.clone(), res.dom.clone())?;
    let k_mu = exact_gibbs_correlations(&spec, res.n_max)?;
    writer.write_symfn("k_mu.csv", &k_mu)?;

    let norm_mu = norm_k_c(&k_mu, res.c);
    let tol = residual_tolerance(norm_mu, &res.params, &res.pot, &res.dom, res.c, res.n_max);
    let mut rows = Vec::new();
    let mut final_residual = f64::NAN;
    for cap in 1..=res.params.kernel_cap {
        let params = res.params.with_kernel_cap(cap);
        let r = gibbs_fixed_point_residual(&k_mu, &params, &res.pot, &res.dom, res.c);
        rows.push(vec![cap.to_string(), fmt_f64(r), fmt_f64(tol.total())]);
        final_residual = r;
    }
    writer.write_csv("residuals.csv", "n_xi,residual,tau_residual", &rows)?;

    let mut manifest = Manifest {
        scenario: cfg.scenario.name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        derived: derived(res),
        audits: vec![AuditRecord::upper(
            "gibbs_residual_within_budget",
            final_residual,
            5.0 * tol.total(),
        )],
        outputs: Vec::new(),
    };
    manifest.derived.tau_residual = Some(tol.total());
    writer.finish(manifest)
}

fn run_mc_compare(
    cfg: &ExperimentConfig,
    res: &Resolved,
    mut writer: BundleWriter,
) -> anyhow::Result<ResultBundle> {
    let section = cfg.mc.as_ref().unwrap();
    let mc_cfg = McConfig::new(section.t_end, section.burn_in, cfg.seed, section.replicas)?;
    let rep = mc_birth_death(&mc_cfg, cfg.params.z, &res.pot, &res.dom, section.order)?;
    let spec = GibbsSpec::new(cfg.params.z, res.pot.clone(), res.dom.clone())?;
    let exact = exact_gibbs_correlations(&spec, section.order)?;

    let mut rows = Vec::new();
    for n in 1..=section.order {
        for idx in 0..rep.estimate.order_values(n).len() {
            let eta = rep.estimate.tuple_at(n, idx);
            let est = rep.estimate.get(&eta);
            let se = rep.std_err.get(&eta);
            let ex = exact.get(&eta);
            let sigmas = if se > 0.0 { (est - ex).abs() / se } else { 0.0 };
            rows.push(vec![
                n.to_string(),
                eta.sites()
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
                fmt_f64(est),
                fmt_f64(se),
                fmt_f64(ex),
                fmt_f64(sigmas),
            ]);
        }
    }
    writer.write_csv(
        "mc_estimates.csv",
        "order,sites,estimate,std_err,exact,sigmas",
        &rows,
    )?;

    // Center tuples: the middle site, the adjacent center pair, and the
    // distance-2 center pair.
    let m = res.dom.num_sites();
    let center = m / 2;
    let mut audits = vec![AuditRecord::flag("in_low_activity_regime", !rep.out_of_regime)];
    let mut check = |name: &str, eta: glauber_core::FiniteConfig| {
        let est = rep.estimate.get(&eta);
        let se = rep.std_err.get(&eta).max(1e-300);
        let ex = exact.get(&eta);
        audits.push(AuditRecord::upper(name, (est - ex).abs(), 3.0 * se));
    };
    check("center_site_within_3se", glauber_core::FiniteConfig::singleton(center));
    if section.order >= 2 {
        check(
            "center_adjacent_pair_within_3se",
            glauber_core::FiniteConfig::new(vec![center, center + 1]).unwrap(),
        );
        check(
            "center_distance2_pair_within_3se",
            glauber_core::FiniteConfig::new(vec![center - 1, center + 1]).unwrap(),
        );
    }

    let manifest = Manifest {
        scenario: cfg.scenario.name().to_string(),
        seed: rep.seed,
        config: cfg.clone(),
        derived: derived(res),
        audits,
        outputs: Vec::new(),
    };
    writer.write_text(
        "mc_summary.txt",
        &format!(
            "events_total {}\nevents_after_burn_in {}\ntime_simulated {}\nreplicas {}\nout_of_regime {}\n",
            rep.events_total,
            rep.events_after_burn_in,
            fmt_f64(rep.time_simulated),
            rep.replicas,
            rep.out_of_regime
        ),
    )?;
    writer.finish(manifest)
}

fn run_positivity(
    cfg: &ExperimentConfig,
    res: &Resolved,
    mut writer: BundleWriter,
) -> anyhow::Result<ResultBundle> {
    let section = cfg.positivity.as_ref().unwrap();
    let k0 = build_initial(cfg, res)?;
    let weights = PairingWeights::from_domain(&res.dom);
    let t_max = section.times.iter().copied().fold(0.0f64, f64::max);
    let settings = EvolveSettings {
        t_end: t_max,
        stride: 1,
        c: res.c,
        alpha: res.alpha,
    };
    let traj = evolve_correlations(&k0, &settings, &res.params, &res.pot, &res.dom, None)?;

    let mut rows = Vec::new();
    let mut audits = Vec::new();
    for &t in &section.times {
        let step = glauber_core::evolution::step_count(t, res.params.delta);
        let state = traj
            .snapshot_at(step)
            .ok_or_else(|| anyhow::anyhow!("no snapshot at step {step}"))?;
        let probe = positivity_probe(state, &section.window, &weights)?;
        let tau = positivity_tolerance(
            norm_k_c(state, res.c),
            res.c,
            probe.window.len(),
            res.n_max,
            &weights,
        );
        for (mask, &v) in probe.values.iter().enumerate() {
            let pattern = probe
                .window
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, s)| s.to_string())
                .collect::<Vec<_>>()
                .join(";");
            rows.push(vec![fmt_f64(t), pattern, fmt_f64(v)]);
        }
        audits.push(AuditRecord::upper(
            &format!("min_pattern_at_t_{t}"),
            -probe.min_value,
            tau,
        ));
        audits.push(AuditRecord::upper(
            &format!("pattern_sum_at_t_{t}"),
            (probe.total - k0.value_at_empty()).abs(),
            5.0 * tau,
        ));
    }
    writer.write_csv("patterns.csv", "time,pattern,value", &rows)?;

    let manifest = Manifest {
        scenario: cfg.scenario.name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        derived: derived(res),
        audits,
        outputs: Vec::new(),
    };
    writer.finish(manifest)
}
