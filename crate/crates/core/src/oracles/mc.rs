//! Continuous-time Gillespie simulation of the birth-and-death chain.
//!
//! State: a subset of occupied sites. Every particle dies at rate 1; every
//! empty site `x` gives birth at rate `z·h·exp{-E(x,γ)}`. Waiting times are
//! exponential in the total rate; the event site is drawn proportionally to
//! the per-site rates. Per-site rates are exact (no thinning), so the chain
//! is unbiased for the lattice dynamics and its stationary law is the
//! enumerable equilibrium measure.
//!
//! Estimators: time-averaged occupation indicators of tuples, divided by
//! `h^n`, match the correlation-function normalization. Errors come from
//! batch means; replicas run independent streams (`seed ⊕ r`) and are
//! pooled with equal weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::domain::{DomainSpec, Potential};
use crate::error::Error;
use crate::regime::check_low_activity;
use crate::symfn::{binomial, SymFn};

/// Number of batch-means blocks per replica.
const BATCHES: usize = 20;

/// Largest tuple order estimated by simulation; variance beyond pairs is
/// not worth the events at desk scale.
pub const MAX_ESTIMATED_ORDER: usize = 2;

/// Simulation controls.
#[derive(Clone, Copy, Debug)]
pub struct McConfig {
    pub t_end: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub replicas: u32,
}

impl McConfig {
    pub fn new(t_end: f64, burn_in: f64, seed: u64, replicas: u32) -> Result<Self, Error> {
        if !(t_end > burn_in && burn_in >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                value: t_end,
                expected: "t_end > burn_in >= 0",
            });
        }
        if replicas == 0 {
            return Err(Error::InvalidParameter {
                name: "replicas",
                value: 0.0,
                expected: "at least one replica",
            });
        }
        Ok(Self {
            t_end,
            burn_in,
            seed,
            replicas,
        })
    }
}

/// Pooled estimates with their standard errors.
#[derive(Clone, Debug)]
pub struct McReport {
    /// Tuple estimates `k̂^{(n)}`, orders `0..=order`.
    pub estimate: SymFn,
    /// Batch-means standard errors, same layout.
    pub std_err: SymFn,
    pub events_total: u64,
    pub events_after_burn_in: u64,
    pub time_simulated: f64,
    pub seed: u64,
    pub replicas: u32,
    /// Set when the run sits outside the low-activity regime; estimates are
    /// still unbiased, only the equilibrium guarantees are void.
    pub out_of_regime: bool,
}

struct ReplicaOutcome {
    batch_means: Vec<Vec<f64>>, // [batch][flattened tuple]
    events_total: u64,
    events_after_burn_in: u64,
}

/// Flattened tuple layout: order 1 tuples first, then order 2 (when
/// estimated), colex rank order within each.
fn layout(m: u32, order: usize) -> (usize, usize) {
    let n1 = m as usize;
    let n2 = if order >= 2 {
        binomial(m as usize, 2) as usize
    } else {
        0
    };
    (n1, n2)
}

fn run_replica(
    cfg: &McConfig,
    replica: u32,
    z: f64,
    pot: &Potential,
    dom: &DomainSpec,
    order: usize,
) -> Result<ReplicaOutcome, Error> {
    let m = dom.num_sites();
    let h = dom.site_weight();
    let zh = z * h;
    if !(zh * m as f64).is_finite() || zh * (m as f64) > 1e15 {
        return Err(Error::RateOverflow {
            rate: zh * m as f64,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ replica as u64);

    // E_loc[i] = interaction energy of site i with the current occupied set
    // (excluding i itself), maintained incrementally on each flip.
    let mut occ = vec![false; m as usize];
    let mut e_loc = vec![0.0f64; m as usize];
    let mut n_occ = 0usize;

    let (n1, n2) = layout(m, order);
    let width = n1 + n2;
    let batch_len = (cfg.t_end - cfg.burn_in) / BATCHES as f64;
    let mut batch_acc = vec![vec![0.0f64; width]; BATCHES];

    let mut t = 0.0f64;
    let mut events_total = 0u64;
    let mut events_after = 0u64;

    // Adds the dwell interval [a, b) to the occupation integrals, split
    // across batch boundaries.
    let mut accumulate = |occ: &[bool], mut a: f64, b: f64| {
        a = a.max(cfg.burn_in);
        if a >= b {
            return;
        }
        let occupied: Vec<u32> = (0..m).filter(|&i| occ[i as usize]).collect();
        let mut lo = a;
        while lo < b {
            let batch = (((lo - cfg.burn_in) / batch_len) as usize).min(BATCHES - 1);
            let end = (cfg.burn_in + (batch + 1) as f64 * batch_len).min(b);
            let dt = end - lo;
            let acc = &mut batch_acc[batch];
            for (ai, &i) in occupied.iter().enumerate() {
                acc[i as usize] += dt;
                if order >= 2 {
                    for &j in occupied.iter().skip(ai + 1) {
                        let r = binomial(i as usize, 1) + binomial(j as usize, 2);
                        acc[n1 + r as usize] += dt;
                    }
                }
            }
            lo = end;
        }
    };

    loop {
        let mut birth_total = 0.0f64;
        for i in 0..m as usize {
            if !occ[i] {
                birth_total += zh * (-e_loc[i]).exp();
            }
        }
        let total_rate = n_occ as f64 + birth_total;
        if !total_rate.is_finite() {
            return Err(Error::RateOverflow { rate: total_rate });
        }
        if total_rate <= 0.0 {
            // Absorbing only when z = 0 and the box is empty.
            accumulate(&occ, t, cfg.t_end);
            break;
        }
        let u: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        let dt = -u.ln() / total_rate;
        let t_next = t + dt;
        if t_next >= cfg.t_end {
            accumulate(&occ, t, cfg.t_end);
            break;
        }
        accumulate(&occ, t, t_next);
        t = t_next;

        // Pick death with probability n_occ / total, else a birth site
        // proportional to its rate.
        let flip: u32;
        let mut pick = rng.gen::<f64>() * total_rate;
        if pick < n_occ as f64 {
            let mut idx = pick as usize;
            if idx >= n_occ {
                idx = n_occ - 1;
            }
            flip = (0..m).filter(|&i| occ[i as usize]).nth(idx).expect("occupied site");
            occ[flip as usize] = false;
            n_occ -= 1;
        } else {
            pick -= n_occ as f64;
            let mut chosen = None;
            for i in 0..m {
                if !occ[i as usize] {
                    let rate = zh * (-e_loc[i as usize]).exp();
                    if pick < rate {
                        chosen = Some(i);
                        break;
                    }
                    pick -= rate;
                }
            }
            flip = chosen.unwrap_or(m - 1);
            occ[flip as usize] = true;
            n_occ += 1;
        }
        let sign = if occ[flip as usize] { 1.0 } else { -1.0 };
        let r = pot.range_sites();
        let lo = flip.saturating_sub(r);
        let hi = (flip + r).min(m - 1);
        for i in lo..=hi {
            if i != flip {
                e_loc[i as usize] += sign * pot.between(i, flip);
            }
        }
        events_total += 1;
        if t >= cfg.burn_in {
            events_after += 1;
        }
    }

    // Normalize batch integrals to densities.
    let mut batch_means = batch_acc;
    for acc in &mut batch_means {
        for (slot, v) in acc.iter_mut().enumerate() {
            let n = if slot < n1 { 1 } else { 2 };
            *v /= batch_len * h.powi(n);
        }
    }
    Ok(ReplicaOutcome {
        batch_means,
        events_total,
        events_after_burn_in: events_after,
    })
}

/// Simulates the chain and estimates correlation functions up to
/// `order <= 2` with batch-means standard errors.
pub fn mc_birth_death(
    cfg: &McConfig,
    z: f64,
    pot: &Potential,
    dom: &DomainSpec,
    order: usize,
) -> Result<McReport, Error> {
    if order > MAX_ESTIMATED_ORDER {
        return Err(Error::OrderExceedsCap {
            order,
            cap: MAX_ESTIMATED_ORDER,
        });
    }
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::InvalidParameter {
            name: "z",
            value: z,
            expected: "nonnegative finite real",
        });
    }
    let outcomes: Vec<Result<ReplicaOutcome, Error>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| run_replica(cfg, r, z, pot, dom, order))
        .collect();
    let mut replicas = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        replicas.push(o?);
    }

    let m = dom.num_sites();
    let (n1, n2) = layout(m, order);
    let width = n1 + n2;
    let nrep = replicas.len() as f64;

    // Per-replica mean and batch-means SE, then equal-weight pooling.
    let mut mean = vec![0.0f64; width];
    let mut var_of_mean = vec![0.0f64; width];
    for rep in &replicas {
        for slot in 0..width {
            let vals: Vec<f64> = rep.batch_means.iter().map(|b| b[slot]).collect();
            let avg = vals.iter().sum::<f64>() / BATCHES as f64;
            let var = vals.iter().map(|v| (v - avg).powi(2)).sum::<f64>()
                / (BATCHES as f64 - 1.0);
            mean[slot] += avg / nrep;
            var_of_mean[slot] += var / BATCHES as f64 / (nrep * nrep);
        }
    }

    let mut estimate = SymFn::zeros(m, order);
    let mut std_err = SymFn::zeros(m, order);
    if order >= 1 {
        estimate.order_values_mut(1).copy_from_slice(&mean[..n1]);
        for (slot, v) in var_of_mean[..n1].iter().enumerate() {
            std_err.order_values_mut(1)[slot] = v.sqrt();
        }
    }
    if order >= 2 {
        estimate.order_values_mut(2).copy_from_slice(&mean[n1..]);
        for (slot, v) in var_of_mean[n1..].iter().enumerate() {
            std_err.order_values_mut(2)[slot] = v.sqrt();
        }
    }
    estimate.set(&crate::FiniteConfig::empty(), 1.0);

    let c_phi = crate::domain::c_phi(pot, dom);
    Ok(McReport {
        estimate,
        std_err,
        events_total: replicas.iter().map(|r| r.events_total).sum(),
        events_after_burn_in: replicas.iter().map(|r| r.events_after_burn_in).sum(),
        time_simulated: cfg.t_end * cfg.replicas as f64,
        seed: cfg.seed,
        replicas: cfg.replicas,
        out_of_regime: !check_low_activity(z, c_phi).pass,
    })
}
