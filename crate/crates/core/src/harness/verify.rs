use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Algorithm, RunConfig};
use super::runner::Prepared;
use super::HarnessError;
use crate::environments::{sample_context, ContextDistribution};
use crate::geometry::{g_optimal_design, sample_unit_ball, support_cap, ParameterNet};
use crate::reduction::{
    exact_g_any, known_dist_arms, lift, martingale_diagnostics, theta_prime_star, EpochSchedule,
};
use crate::trace::RegretTrace;

/// Nets above this size are checked on a sample of pairs.
const PAIRWISE_LIMIT: usize = 500;
const VERIFY_HORIZON: u64 = 4096;
const VERIFY_SEEDS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn record(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }
}

fn g_maximality(net: &ParameterNet, dist: &ContextDistribution) -> (bool, String) {
    let g: Vec<_> = known_dist_arms(net, dist);
    let pts = net.points();
    let pairs: Vec<(usize, usize)> = if pts.len() <= PAIRWISE_LIMIT {
        (0..pts.len()).flat_map(|i| (0..pts.len()).map(move |j| (i, j))).collect()
    } else {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        (0..PAIRWISE_LIMIT * PAIRWISE_LIMIT)
            .map(|_| (rng.random_range(0..pts.len()), rng.random_range(0..pts.len())))
            .collect()
    };
    let worst = pairs
        .iter()
        .map(|&(i, j)| g[i].dot(&pts[j]) - g[j].dot(&pts[j]))
        .fold(f64::NEG_INFINITY, f64::max);
    (worst <= 1e-12, format!("{} pairs, worst excess {worst:.3e}", pairs.len()))
}

fn trace_consistency(trace: &RegretTrace, budget: Option<f64>) -> Result<(), String> {
    let mut prev = 0.0;
    for (k, r) in trace.rounds.iter().enumerate() {
        if r.t != k as u64 + 1 {
            return Err(format!("round {k} is numbered {}", r.t));
        }
        if r.regret < 0.0 || r.cum_regret + 1e-12 < prev {
            return Err(format!("regret decreases at t = {}", r.t));
        }
        prev = r.cum_regret;
    }
    if trace.rounds.len() as u64 != trace.horizon {
        return Err(format!("{} rounds for horizon {}", trace.rounds.len(), trace.horizon));
    }
    let covered: u64 = trace.epochs.iter().map(|e| e.len).sum();
    if covered != trace.horizon {
        return Err(format!("epochs cover {covered} of {} rounds", trace.horizon));
    }
    if let Some(c) = budget {
        let spent: f64 = trace.rounds.iter().map(|r| r.corruption.abs()).sum();
        if spent > c + 1e-9 {
            return Err(format!("corruption {spent} exceeds budget {c}"));
        }
    }
    Ok(())
}

/// Runs the invariant checks for the instance described by `config`.
pub fn verify(config: &RunConfig) -> Result<VerifyReport, HarnessError> {
    let mut cfg = config.clone();
    cfg.horizon = cfg.horizon.min(VERIFY_HORIZON);
    cfg.seeds.truncate(VERIFY_SEEDS);
    let prepared = Prepared::new(&cfg)?;
    let mut report = VerifyReport::default();
    let dim = cfg.dim;

    if let Some(net) = &prepared.net {
        let (ok, detail) = g_maximality(net, &prepared.dist);
        report.record("g-maximality", ok, detail);

        let arms = known_dist_arms(net, &prepared.dist);
        if arms.iter().any(|a| a.iter().any(|&x| x != 0.0)) {
            match g_optimal_design(&arms, support_cap(dim), 2.0 * dim as f64) {
                Ok(design) => {
                    let lev = design.max_leverage(&arms);
                    let ok = lev <= 2.0 * dim as f64 + 1e-6 && design.support_len() <= support_cap(dim);
                    report.record(
                        "design-feasibility",
                        ok,
                        format!("max leverage {lev:.6}, support {}", design.support_len()),
                    );
                }
                Err(e) => report.record("design-feasibility", false, e.to_string()),
            }
        }
    }

    if let Some(product) = prepared.dist.as_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta_star = prepared.spec.theta_star.clone();
        let lifted_star = theta_prime_star(product, &theta_star);
        let worst = (0..1000)
            .map(|_| {
                let theta = sample_unit_ball(dim, &mut rng);
                let g = exact_g_any(&prepared.dist, &theta);
                (lift(&theta).dot(&lifted_star) - g.dot(&theta_star)).abs()
            })
            .fold(0.0, f64::max);
        report.record("product-identity", worst <= 1e-10, format!("worst gap {worst:.3e}"));
    }

    let doubling = EpochSchedule::doubling(cfg.horizon).map_err(|source| HarnessError::Run { seed: 0, source })?;
    let total: u64 = doubling.lengths().iter().sum();
    report.record(
        "schedule-partition",
        total == cfg.horizon,
        format!("{} epochs covering {total} rounds", doubling.epochs()),
    );

    let budget = (cfg.suite == "corrupt").then(|| cfg.suite_options().budget);
    for &seed in &cfg.seeds {
        let name = format!("run-invariants/seed={seed}");
        match prepared.run_seed(seed) {
            Ok(trace) => {
                let mut outcome = trace_consistency(&trace, budget);
                if outcome.is_ok() && cfg.algorithm == Algorithm::KnownDist && prepared.dist.as_finite().is_some() {
                    outcome = decomposition(&prepared, &trace, cfg.delta);
                }
                let detail = outcome.as_ref().err().cloned().unwrap_or_else(|| {
                    format!("final regret {:.3}", trace.final_regret())
                });
                report.record(&name, outcome.is_ok(), detail);
            }
            Err(e) => report.record(&name, false, e.to_string()),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let sampled = (0..64).all(|_| {
        let ctx = sample_context(&prepared.dist, &mut rng);
        let theta = sample_unit_ball(dim, &mut rng);
        ctx.contains(&ctx.best_action(&theta))
    });
    report.record("greedy-action-membership", sampled, "64 sampled contexts");
    Ok(report)
}

/// contextual - reduced = Sigma' + Sigma + T (E max - reduced optimum).
fn decomposition(prepared: &Prepared, trace: &RegretTrace, delta: f64) -> Result<(), String> {
    let net = prepared.net.as_ref().expect("known-dist runs carry a net");
    let theta_star = &prepared.spec.theta_star;
    let diag = martingale_diagnostics(trace, net, &prepared.dist, theta_star, delta).map_err(|e| e.to_string())?;
    let lhs = trace.final_regret() - trace.final_reduced_regret();
    let rhs = diag.sigma_prime_t
        + diag.sigma_t
        + trace.horizon as f64 * (trace.expected_optimum - trace.reduced_optimum);
    if (lhs - rhs).abs() <= 1e-6 * (1.0 + lhs.abs()) {
        Ok(())
    } else {
        Err(format!("regret decomposition off by {}", lhs - rhs))
    }
}
