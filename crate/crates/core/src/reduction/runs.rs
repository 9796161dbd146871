use std::collections::HashSet;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::oracle::{exact_g_any, GTable};
use super::product::ProductReduction;
use super::schedule::{confidence_gamma, ConfidenceSchedule, EpochSchedule, GammaInputs};
use super::solver::{PeConfig, PhasedElimination, Solver};
use super::ReductionError;
use crate::environments::{sample_context, Context, ContextDistribution, EnvironmentSpec, Simulator};
use crate::geometry::{g_optimal_design, support_cap, LeastSquares, ParameterNet};
use crate::rng::{stream, Stream};
use crate::trace::{EpochRecord, RegretTrace};
use crate::Vector;

const OPTIMAL_SLACK: f64 = 1e-12;

/// True reduced values `<g(theta), theta*>` for every arm.
#[derive(Debug, Clone)]
struct ArmValues {
    values: Vec<f64>,
    best: f64,
}

impl ArmValues {
    fn new(values: Vec<f64>) -> Self {
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self { values, best }
    }

    fn gap(&self, arm: usize) -> f64 {
        self.best - self.values[arm]
    }

    fn is_optimal(&self, arm: usize) -> bool {
        self.values[arm] >= self.best - OPTIMAL_SLACK
    }

    fn any_optimal(&self, arms: &[usize]) -> bool {
        arms.iter().any(|&a| self.is_optimal(a))
    }
}

struct Episode<'a> {
    dist: &'a ContextDistribution,
    sim: Simulator,
    contexts: ChaCha8Rng,
}

impl<'a> Episode<'a> {
    fn new(spec: &EnvironmentSpec, dist: &'a ContextDistribution, seed: u64) -> Result<Self, ReductionError> {
        spec.validate(dist)?;
        Ok(Self {
            dist,
            sim: Simulator::new(spec.clone(), stream(seed, Stream::Noise))?,
            contexts: stream(seed, Stream::Contexts),
        })
    }

    fn theta_star(&self) -> &Vector {
        self.sim.theta_star()
    }

    fn next_context(&mut self) -> Context {
        sample_context(self.dist, &mut self.contexts)
    }
}

fn support_index(ctx: &Context) -> Option<usize> {
    match ctx {
        Context::Finite { support, .. } => Some(*support),
        Context::Product { .. } => None,
    }
}

fn net_values(net: &ParameterNet, dist: &ContextDistribution, theta_star: &Vector) -> (Vec<Vector>, ArmValues) {
    let exact: Vec<Vector> = net.points().iter().map(|p| exact_g_any(dist, p)).collect();
    let values = exact.iter().map(|g| g.dot(theta_star)).collect();
    (exact, ArmValues::new(values))
}

/// `{g(theta) : theta in net}` computed exactly, the arm set of the
/// known-distribution reduction.
pub fn known_dist_arms(net: &ParameterNet, dist: &ContextDistribution) -> Vec<Vector> {
    net.points().iter().map(|p| exact_g_any(dist, p)).collect()
}

/// Plays `argmax_{a in A_t} <a, theta_t>` for the solver's `theta_t` and feeds
/// the reward back. The solver must be built over [`known_dist_arms`].
pub fn reduce_known_dist(
    spec: &EnvironmentSpec,
    dist: &ContextDistribution,
    net: &ParameterNet,
    solver: &mut dyn Solver,
    horizon: u64,
    seed: u64,
) -> Result<RegretTrace, ReductionError> {
    let mut ep = Episode::new(spec, dist, seed)?;
    let theta_star = ep.theta_star().clone();
    let (_, values) = net_values(net, dist, &theta_star);
    let mut trace = RegretTrace::new(seed, "known-dist", horizon);
    trace.reduced_optimum = values.best;
    trace.expected_optimum = exact_g_any(dist, &theta_star).dot(&theta_star);
    trace.policy_changes.push(1);
    for _ in 0..horizon {
        let ctx = ep.next_context();
        let arm = solver.propose()?;
        let action = ctx.best_action(net.point(arm));
        let o = ep.sim.play(&ctx, &action)?;
        solver.observe(o.observed_reward);
        trace.push_round(
            arm,
            support_index(&ctx),
            o.instantaneous_regret,
            values.gap(arm),
            o.observed_reward,
            o.corruption,
            1,
            solver.gamma(),
        );
    }
    let survivors = solver.survivors().map(|s| s.to_vec());
    let nearest = net.nearest(&theta_star).0;
    trace.epochs.push(EpochRecord {
        index: 1,
        start: 0,
        len: horizon,
        eps: None,
        eps_prime: None,
        gamma: solver.gamma(),
        survivors: survivors.as_ref().map_or(net.len(), |s| s.len()),
        optimal_retained: survivors.as_ref().is_none_or(|s| values.any_optimal(s)),
        nearest_retained: survivors.as_ref().is_none_or(|s| s.contains(&nearest)),
    });
    Ok(trace)
}

/// Epoch reduction with a fresh phased-elimination instance per epoch over the
/// empirical g-vectors.
pub fn run_epoch_reduction(
    spec: &EnvironmentSpec,
    dist: &ContextDistribution,
    net: Arc<ParameterNet>,
    schedule: &EpochSchedule,
    conf: ConfidenceSchedule,
    delta: f64,
    seed: u64,
) -> Result<RegretTrace, ReductionError> {
    let mut ep = Episode::new(spec, dist, seed)?;
    let theta_star = ep.theta_star().clone();
    let horizon = schedule.horizon();
    let (exact, values) = net_values(&net, dist, &theta_star);
    let nearest = net.nearest(&theta_star).0;
    let mut table = GTable::empirical(Arc::clone(&net));
    let mut trace = RegretTrace::new(seed, "epoch", horizon);
    trace.reduced_optimum = values.best;
    trace.expected_optimum = exact_g_any(dist, &theta_star).dot(&theta_star);
    let dim = net.dim();

    for m in 1..=schedule.epochs() {
        let eps = schedule.epsilon(m, net.len(), delta);
        let arms = table.vectors();
        let eps_prime = arms
            .iter()
            .zip(&exact)
            .map(|(est, g)| (est - g).dot(&theta_star).abs())
            .fold(0.0, f64::max);
        let conf_m = match conf {
            ConfidenceSchedule::MisspecKnown { epsilon } => ConfidenceSchedule::MisspecKnown {
                epsilon: epsilon + eps,
            },
            other => other,
        };
        let mut pe = PhasedElimination::new(arms, PeConfig::new(conf_m, dim, net.len(), delta, horizon))?;
        trace.policy_changes.push(schedule.start(m) + 1);
        for _ in 0..schedule.length(m) {
            let ctx = ep.next_context();
            let arm = pe.propose()?;
            let action = ctx.best_action(net.point(arm));
            let o = ep.sim.play(&ctx, &action)?;
            pe.observe(o.observed_reward);
            table.update(&ctx);
            trace.push_round(
                arm,
                support_index(&ctx),
                o.instantaneous_regret,
                values.gap(arm),
                o.observed_reward,
                o.corruption,
                m,
                pe.gamma(),
            );
        }
        let survivors = pe.survivors().expect("phased elimination tracks survivors");
        trace.epochs.push(EpochRecord {
            index: m,
            start: schedule.start(m),
            len: schedule.length(m),
            eps: Some(eps),
            eps_prime: Some(eps_prime),
            gamma: pe.gamma(),
            survivors: survivors.len(),
            optimal_retained: values.any_optimal(survivors),
            nearest_retained: survivors.contains(&nearest),
        });
    }
    Ok(trace)
}

/// Product-context reduction: the solver picks lifted arms and the runner
/// plays the matching per-coordinate max/min action.
pub fn run_product_reduction(
    spec: &EnvironmentSpec,
    dist: &ContextDistribution,
    solver: &mut dyn Solver,
    horizon: u64,
    seed: u64,
) -> Result<RegretTrace, ReductionError> {
    let mut ep = Episode::new(spec, dist, seed)?;
    let theta_star = ep.theta_star().clone();
    let red = ProductReduction::new(dist, &theta_star)?;
    let arms = red.lifted_arms()?;
    let values = ArmValues::new(arms.iter().map(|a| a.dot(red.theta_prime_star())).collect());
    let mut trace = RegretTrace::new(seed, "product", horizon);
    trace.reduced_optimum = values.best;
    trace.expected_optimum = exact_g_any(dist, &theta_star).dot(&theta_star);
    trace.policy_changes.push(1);
    for _ in 0..horizon {
        let ctx = ep.next_context();
        let arm = solver.propose()?;
        if arm >= arms.len() {
            return Err(ReductionError::InvalidArgument(format!("lifted arm {arm} out of range")));
        }
        let action = red.physical_action(&ctx, arm)?;
        let o = ep.sim.play(&ctx, &action)?;
        solver.observe(o.observed_reward);
        trace.push_round(
            arm,
            None,
            o.instantaneous_regret,
            values.gap(arm),
            o.observed_reward,
            o.corruption,
            1,
            solver.gamma(),
        );
    }
    let survivors = solver.survivors().map(|s| s.to_vec());
    let lifted_star = super::product::lift_index(&theta_star);
    trace.epochs.push(EpochRecord {
        index: 1,
        start: 0,
        len: horizon,
        eps: None,
        eps_prime: None,
        gamma: solver.gamma(),
        survivors: survivors.as_ref().map_or(arms.len(), |s| s.len()),
        optimal_retained: survivors.as_ref().is_none_or(|s| values.any_optimal(s)),
        nearest_retained: survivors.as_ref().is_none_or(|s| s.contains(&lifted_star)),
    });
    Ok(trace)
}

/// `ceil(w * len)` per support point, trimmed one pull at a time from the
/// currently largest allocation until the total fits in `len`.
pub fn fit_allocations(weights: &[f64], len: u64) -> Vec<u64> {
    let mut counts: Vec<u64> = weights
        .iter()
        .map(|w| (w * len as f64 - 1e-9).ceil().max(0.0) as u64)
        .collect();
    let mut total: u64 = counts.iter().sum();
    while total > len {
        let (i, _) = counts
            .iter()
            .enumerate()
            .fold((0, 0), |best, (i, &c)| if c > best.1 { (i, c) } else { best });
        counts[i] -= 1;
        total -= 1;
    }
    counts
}

fn distinct_representatives(arms: &[Vector], survivors: &[usize]) -> Vec<usize> {
    let mut seen = HashSet::new();
    survivors
        .iter()
        .copied()
        .filter(|&i| seen.insert(arms[i].iter().map(|x| (x + 0.0).to_bits()).collect::<Vec<_>>()))
        .collect()
}

/// Batched elimination with `batches` pre-fixed policy switches.
pub fn run_batched(
    spec: &EnvironmentSpec,
    dist: &ContextDistribution,
    net: Arc<ParameterNet>,
    batches: usize,
    delta: f64,
    horizon: u64,
    seed: u64,
) -> Result<RegretTrace, ReductionError> {
    let schedule = EpochSchedule::batched(horizon, batches)?;
    let mut ep = Episode::new(spec, dist, seed)?;
    let theta_star = ep.theta_star().clone();
    let (_, values) = net_values(&net, dist, &theta_star);
    let nearest = net.nearest(&theta_star).0;
    let dim = net.dim();
    let conf = ConfidenceSchedule::Batched { batches };
    let mut table = GTable::empirical(Arc::clone(&net));
    let mut survivors: Vec<usize> = (0..net.len()).collect();
    let mut trace = RegretTrace::new(seed, "batched", horizon);
    trace.reduced_optimum = values.best;
    trace.expected_optimum = exact_g_any(dist, &theta_star).dot(&theta_star);
    let first_len = schedule.length(1) as f64;
    let mut gamma = None;

    for m in 1..=schedule.epochs() {
        let len = schedule.length(m);
        let arms = table.vectors();
        let reps = distinct_representatives(&arms, &survivors);
        let degenerate = reps.iter().all(|&i| arms[i].iter().all(|&x| x == 0.0));
        let mut plan: Vec<usize> = Vec::with_capacity(len as usize);
        if degenerate {
            plan.extend((0..len as usize).map(|k| reps[k % reps.len()]));
        } else {
            let vectors: Vec<Vector> = reps.iter().map(|&i| arms[i].clone()).collect();
            let design = g_optimal_design(&vectors, support_cap(dim), 2.0 * dim as f64)?;
            if len < design.support_len() as u64 {
                return Err(ReductionError::BatchTooShort {
                    batch: m,
                    len,
                    support: design.support_len(),
                });
            }
            let counts = fit_allocations(design.weights(), len);
            for (&j, &u) in design.indices().iter().zip(&counts) {
                plan.extend(std::iter::repeat_n(reps[j], u as usize));
            }
        }
        trace.policy_changes.push(schedule.start(m) + 1);

        let mut acc = LeastSquares::new(dim);
        for &arm in &plan {
            let ctx = ep.next_context();
            let action = ctx.best_action(net.point(arm));
            let o = ep.sim.play(&ctx, &action)?;
            acc.push(&arms[arm], o.observed_reward);
            table.update(&ctx);
            trace.push_round(
                arm,
                support_index(&ctx),
                o.instantaneous_regret,
                values.gap(arm),
                o.observed_reward,
                o.corruption,
                m,
                gamma,
            );
        }

        if !degenerate {
            let est = acc.finish();
            let prev_len = if m == 1 { first_len } else { schedule.length(m - 1) as f64 };
            let g = confidence_gamma(
                &conf,
                &GammaInputs {
                    phase: m,
                    t_m: len as f64,
                    len: len as f64,
                    prev_len,
                    dim,
                    net_size: net.len(),
                    delta,
                    horizon: horizon as f64,
                },
            );
            let scores: Vec<f64> = survivors.iter().map(|&i| est.theta_hat.dot(&arms[i])).collect();
            let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            survivors = survivors
                .iter()
                .zip(&scores)
                .filter(|(_, &s)| best - s <= g)
                .map(|(&i, _)| i)
                .collect();
            gamma = Some(g);
        }
        trace.epochs.push(EpochRecord {
            index: m,
            start: schedule.start(m),
            len,
            eps: None,
            eps_prime: None,
            gamma,
            survivors: survivors.len(),
            optimal_retained: values.any_optimal(&survivors),
            nearest_retained: survivors.contains(&nearest),
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocations_fit_the_batch() {
        assert_eq!(fit_allocations(&[0.5, 0.5], 10), vec![5, 5]);
        assert_eq!(fit_allocations(&[1.0 / 3.0; 3], 10), vec![3, 3, 4]);
        let c = fit_allocations(&[0.7, 0.2, 0.1], 7);
        assert_eq!(c.iter().sum::<u64>(), 7);
    }
}
