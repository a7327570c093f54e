//! Time evolution of correlation functions by iterating the one-step dual
//! operator, with norm logging, contraction audits, and relaxation-rate
//! measurement.

use crate::calculus::norm_k_c;
use crate::domain::{DomainSpec, Potential};
use crate::error::Error;
use crate::operators::{apply_dual_step, apply_step, OperatorParams};
use crate::symfn::{binomial, SymFn};

/// Default time step: the per-step consistency error grows like
/// `δ·n(n-1)` at order `n`, so the step shrinks with the truncation order.
pub fn default_delta(max_order: usize) -> f64 {
    0.05f64.min(0.5 / max_order.max(1) as f64)
}

/// Analytic bound on the weight of kernel clouds beyond `cap` points:
/// `norm_k · (C·c_phi)^{cap+1}/(cap+1)! · exp(C·c_phi)`.
///
/// Worst-case and often very pessimistic at desk scale; reported alongside
/// results, never silently absorbed into them.
pub fn truncation_tail(norm_k: f64, c: f64, c_phi: f64, cap: usize) -> f64 {
    let x = c * c_phi;
    let mut lead = 1.0;
    for j in 1..=cap + 1 {
        lead *= x / j as f64;
    }
    norm_k * lead * x.exp()
}

/// Crude upper estimate of the floating-point operations in one dual-step
/// application; only the order of magnitude matters for rounding budgets.
pub fn op_count_estimate(dom: &DomainSpec, pot: &Potential, max_order: usize, kernel_cap: usize) -> f64 {
    let m = dom.num_sites() as usize;
    let entries: f64 = (0..=max_order).map(|n| binomial(m, n) as f64).sum();
    let reach = (2 * pot.range_sites() as usize + 1) * max_order.max(1);
    let cloud: f64 = (0..=kernel_cap).map(|j| binomial(reach.min(64), j) as f64).sum();
    entries * (1 << max_order) as f64 * cloud * (max_order + 2) as f64
}

/// Rounding budget for audits: `10 · eps · op_count`.
pub fn fp_tolerance(op_count: f64) -> f64 {
    10.0 * f64::EPSILON * op_count
}

/// Audit tolerance carried by every evolved quantity: analytic cloud tail
/// plus rounding budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub tail: f64,
    pub fp: f64,
}

impl Tolerances {
    pub fn for_run(
        norm_k: f64,
        c: f64,
        c_phi: f64,
        params: &OperatorParams,
        dom: &DomainSpec,
        pot: &Potential,
        max_order: usize,
    ) -> Self {
        Self {
            tail: truncation_tail(norm_k, c, c_phi, params.kernel_cap.min(max_order)),
            fp: fp_tolerance(op_count_estimate(dom, pot, max_order, params.kernel_cap)),
        }
    }

    pub fn total(&self) -> f64 {
        self.tail + self.fp
    }
}

/// Per-step norm record along a trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormRecord {
    pub step: usize,
    pub time: f64,
    /// Weighted sup norm at base `C`.
    pub norm_c: f64,
    /// Weighted sup norm at base `alpha·C`.
    pub norm_alpha_c: f64,
    /// Distance to the reference function, when one is tracked.
    pub dist_ref: Option<f64>,
}

/// A dual-step trajectory: norms every step, states every `stride` steps
/// (first and last always included).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub delta: f64,
    pub norms: Vec<NormRecord>,
    pub snapshots: Vec<(usize, SymFn)>,
}

impl Trajectory {
    pub fn final_state(&self) -> &SymFn {
        &self.snapshots.last().expect("trajectory has snapshots").1
    }

    pub fn steps(&self) -> usize {
        self.norms.len() - 1
    }

    /// Snapshot at an exact step index, if retained.
    pub fn snapshot_at(&self, step: usize) -> Option<&SymFn> {
        self.snapshots
            .iter()
            .find(|(s, _)| *s == step)
            .map(|(_, f)| f)
    }
}

/// Evolution controls: end time, snapshot stride, and the two norm bases.
#[derive(Clone, Copy, Debug)]
pub struct EvolveSettings {
    pub t_end: f64,
    pub stride: usize,
    pub c: f64,
    pub alpha: f64,
}

/// Number of steps `[t_end/δ]`, robust to the quotient sitting a rounding
/// error below an integer.
pub fn step_count(t_end: f64, delta: f64) -> usize {
    ((t_end / delta) * (1.0 + 4.0 * f64::EPSILON)).floor() as usize
}

/// Iterates the dual step `[t_end/δ]` times from `k0`, recording norms at
/// every step. Aborts with the step index if an entry stops being finite.
pub fn evolve_correlations(
    k0: &SymFn,
    settings: &EvolveSettings,
    params: &OperatorParams,
    pot: &Potential,
    dom: &DomainSpec,
    k_ref: Option<&SymFn>,
) -> Result<Trajectory, Error> {
    let steps = step_count(settings.t_end, params.delta);
    let stride = settings.stride.max(1);
    let record = |step: usize, k: &SymFn| -> NormRecord {
        NormRecord {
            step,
            time: step as f64 * params.delta,
            norm_c: norm_k_c(k, settings.c),
            norm_alpha_c: norm_k_c(k, settings.alpha * settings.c),
            dist_ref: k_ref.map(|r| {
                let mut d = k.clone();
                d.axpy(-1.0, r);
                norm_k_c(&d, settings.c)
            }),
        }
    };

    if !k0.is_finite() {
        return Err(Error::NonFinite {
            context: "evolve_correlations",
            step: 0,
        });
    }
    let mut norms = Vec::with_capacity(steps + 1);
    let mut snapshots = Vec::new();
    norms.push(record(0, k0));
    snapshots.push((0, k0.clone()));

    let mut k = k0.clone();
    for step in 1..=steps {
        k = apply_dual_step(&k, params, pot, dom);
        if !k.is_finite() {
            return Err(Error::NonFinite {
                context: "evolve_correlations",
                step,
            });
        }
        norms.push(record(step, &k));
        if step % stride == 0 || step == steps {
            snapshots.push((step, k.clone()));
        }
    }
    Ok(Trajectory {
        delta: params.delta,
        norms,
        snapshots,
    })
}

/// Iterates the forward step `[t_end/δ]` times on a quasi-observable.
pub fn evolve_quasi_observable(
    g0: &SymFn,
    t_end: f64,
    params: &OperatorParams,
    pot: &Potential,
    dom: &DomainSpec,
) -> Result<SymFn, Error> {
    let steps = step_count(t_end, params.delta);
    let mut g = g0.clone();
    for step in 1..=steps {
        g = apply_step(&g, params, pot, dom);
        if !g.is_finite() {
            return Err(Error::NonFinite {
                context: "evolve_quasi_observable",
                step,
            });
        }
    }
    Ok(g)
}

/// Max over samples of `‖P_δ* k‖ / ‖k‖` on functions vanishing at the
/// empty configuration; in regime the ratio stays below `1 - (1-nu*)δ` up
/// to the audit tolerance. Samples with `k(∅) ≠ 0` are rejected; zero
/// samples are skipped.
pub fn contraction_audit(
    samples: &[SymFn],
    params: &OperatorParams,
    pot: &Potential,
    dom: &DomainSpec,
    c: f64,
) -> Result<f64, Error> {
    let mut max_ratio = f64::NEG_INFINITY;
    for k in samples {
        if k.value_at_empty() != 0.0 {
            return Err(Error::InvalidParameter {
                name: "sample.value_at_empty",
                value: k.value_at_empty(),
                expected: "0 (sample must vanish at the empty configuration)",
            });
        }
        let norm = norm_k_c(k, c);
        if norm == 0.0 {
            continue;
        }
        let out = apply_dual_step(k, params, pot, dom);
        max_ratio = max_ratio.max(norm_k_c(&out, c) / norm);
    }
    if max_ratio == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter {
            name: "samples",
            value: 0.0,
            expected: "at least one nonzero sample",
        });
    }
    Ok(max_ratio)
}

/// Max over the per-step log of the `alpha·C`-norm; finiteness and
/// non-growth witness the invariance of the smaller-weight space.
pub fn invariance_audit(trajectory: &Trajectory) -> f64 {
    trajectory
        .norms
        .iter()
        .map(|r| r.norm_alpha_c)
        .fold(0.0f64, f64::max)
}

/// Relaxation-to-reference record from a decay run.
#[derive(Clone, Debug)]
pub struct DecayRecord {
    pub times: Vec<f64>,
    pub errors: Vec<f64>,
    pub e0: f64,
    /// Guaranteed rate `1 - nu*`.
    pub rate_bound: f64,
    /// Least-squares slope of `log e(t)` on the fit window; absent when the
    /// window is too small.
    pub fitted_slope: Option<f64>,
    /// Tolerances in force: full audit tolerance and its rounding part.
    pub tau: f64,
    pub tau_fp: f64,
    /// `e(t) <= exp(-rate·t)·e(0) + 10·tau` on the whole grid.
    pub pointwise_ok: bool,
    /// Start already at the reference (up to tolerance); nothing to fit.
    pub trivially_converged: bool,
}

/// Evolves `k0` and measures `e(t) = ‖k_t - k_ref‖` against the guaranteed
/// exponential envelope at rate `1 - nu*`. The slope is fitted on the middle
/// third of the time window, restricted to points above the rounding floor;
/// the analytic cloud-tail bound enters `tau` (and the pointwise envelope)
/// but would empty the fit window at desk scale, so the floor uses the
/// rounding part alone.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_decay_report(
    k0: &SymFn,
    k_ref: &SymFn,
    t_end: f64,
    params: &OperatorParams,
    pot: &Potential,
    dom: &DomainSpec,
    c: f64,
    nu_star: f64,
) -> Result<DecayRecord, Error> {
    let c_phi = crate::domain::c_phi(pot, dom);
    let settings = EvolveSettings {
        t_end,
        stride: usize::MAX,
        c,
        alpha: 0.5 * (1.0 + 1.0 / c), // only norm_c and dist_ref matter here
    };
    let traj = evolve_correlations(k0, &settings, params, pot, dom, Some(k_ref))?;
    let times: Vec<f64> = traj.norms.iter().map(|r| r.time).collect();
    let errors: Vec<f64> = traj.norms.iter().map(|r| r.dist_ref.unwrap()).collect();
    let e0 = errors[0];
    let rate = 1.0 - nu_star;

    let tol = Tolerances::for_run(norm_k_c(k0, c), c, c_phi, params, dom, pot, k0.max_order());
    let tau = tol.total();
    let tau_fp = tol.fp;

    let pointwise_ok = times
        .iter()
        .zip(&errors)
        .all(|(&t, &e)| e <= (-rate * t).exp() * e0 + 10.0 * tau);

    let trivially_converged = e0 <= tau_fp;
    let fitted_slope = if trivially_converged {
        None
    } else {
        let n = times.len();
        let lo = n / 3;
        let hi = (2 * n) / 3;
        let pts: Vec<(f64, f64)> = (lo..=hi.min(n - 1))
            .filter(|&i| errors[i] > 100.0 * tau_fp)
            .map(|i| (times[i], errors[i].ln()))
            .collect();
        fit_slope(&pts)
    };

    Ok(DecayRecord {
        times,
        errors,
        e0,
        rate_bound: rate,
        fitted_slope,
        tau,
        tau_fp,
        pointwise_ok,
        trivially_converged,
    })
}

/// Least-squares slope through `(x, y)` points; `None` below 2 points.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    (denom != 0.0).then(|| (n * sxy - sx * sy) / denom)
}
