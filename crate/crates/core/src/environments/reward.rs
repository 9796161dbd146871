use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::context::{optimal_round_value, Context, ContextDistribution};
use super::EnvError;
use crate::Vector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// Standard normal.
    #[default]
    Gaussian,
    /// Uniform on `[-1, 1]`.
    BoundedUniform,
    /// Uniform on `{-1, 1}`.
    Rademacher,
    /// Noiseless rewards.
    None,
}

impl NoiseModel {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            NoiseModel::Gaussian => rng.sample(StandardNormal),
            NoiseModel::BoundedUniform => rng.random_range(-1.0..=1.0),
            NoiseModel::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseModel::None => 0.0,
        }
    }
}

fn bit_key(v: &Vector) -> Vec<u64> {
    v.iter().map(|x| (x + 0.0).to_bits()).collect()
}

/// Deviation `f(a)` of the mean reward from the linear model.
#[derive(Debug, Clone, PartialEq)]
pub enum Misspecification {
    /// Explicit values per action; actions missing from the table get zero.
    Table {
        epsilon: f64,
        values: HashMap<Vec<u64>, f64>,
    },
    /// `epsilon * sin(<direction, a>)`.
    Smooth { epsilon: f64, direction: Vector },
}

impl Misspecification {
    /// Builds a table, clipping every entry to `[-epsilon, epsilon]`.
    pub fn table(epsilon: f64, entries: impl IntoIterator<Item = (Vector, f64)>) -> Self {
        let values = entries
            .into_iter()
            .map(|(a, f)| (bit_key(&a), f.clamp(-epsilon, epsilon)))
            .collect();
        Misspecification::Table { epsilon, values }
    }

    pub fn epsilon(&self) -> f64 {
        match self {
            Misspecification::Table { epsilon, .. } | Misspecification::Smooth { epsilon, .. } => {
                *epsilon
            }
        }
    }

    pub fn value(&self, action: &Vector) -> f64 {
        match self {
            Misspecification::Table { values, .. } => {
                values.get(&bit_key(action)).copied().unwrap_or(0.0)
            }
            Misspecification::Smooth { epsilon, direction } => {
                epsilon * direction.dot(action).sin()
            }
        }
    }

    /// Largest `|f(a)|` over the table entries (or `epsilon` for the smooth form).
    pub fn sup(&self) -> f64 {
        match self {
            Misspecification::Table { values, .. } => {
                values.values().map(|f| f.abs()).fold(0.0, f64::max)
            }
            Misspecification::Smooth { epsilon, .. } => epsilon.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "strategy")]
pub enum AdversaryStrategy {
    /// Turns the context-optimal arm's mean reward into its negative.
    FlipOptimal,
    /// Adds `-bias` to `target` whenever it is available.
    ConstantBias { target: Vec<f64>, bias: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarySpec {
    #[serde(flatten)]
    pub strategy: AdversaryStrategy,
    pub budget: f64,
}

/// This round's corruption function: `amount` on `target`, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Corruption {
    pub target: Option<Vector>,
    pub amount: f64,
}

impl Corruption {
    pub fn none() -> Self {
        Self {
            target: None,
            amount: 0.0,
        }
    }

    pub fn at(&self, action: &Vector) -> f64 {
        match &self.target {
            Some(t) if t == action => self.amount,
            _ => 0.0,
        }
    }

    pub fn sup(&self) -> f64 {
        self.amount.abs()
    }
}

/// Budgeted adversary. It never sees the action about to be played.
#[derive(Debug, Clone)]
pub struct CorruptionAdversary {
    strategy: AdversaryStrategy,
    budget: f64,
    spent: f64,
    ledger: Vec<f64>,
}

impl CorruptionAdversary {
    pub fn new(spec: &AdversarySpec) -> Result<Self, EnvError> {
        if !(spec.budget >= 0.0) || !spec.budget.is_finite() {
            return Err(EnvError::InvalidSpec(format!(
                "corruption budget must be a nonnegative number, got {}",
                spec.budget
            )));
        }
        Ok(Self {
            strategy: spec.strategy.clone(),
            budget: spec.budget,
            spent: 0.0,
            ledger: Vec::new(),
        })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn spent(&self) -> f64 {
        self.spent
    }

    /// `sup_a |c_t(a)|` per round so far.
    pub fn ledger(&self) -> &[f64] {
        &self.ledger
    }

    /// Chooses `c_t` from the context and the adversary's own state.
    pub fn decide(&mut self, context: &Context, theta_star: &Vector) -> Corruption {
        let wanted = match &self.strategy {
            AdversaryStrategy::FlipOptimal => {
                let best = context.best_action(theta_star);
                let amount = -2.0 * best.dot(theta_star);
                Corruption {
                    target: Some(best),
                    amount,
                }
            }
            AdversaryStrategy::ConstantBias { target, bias } => {
                let target = Vector::from_row_slice(target);
                if context.contains(&target) {
                    Corruption {
                        target: Some(target),
                        amount: -bias,
                    }
                } else {
                    Corruption::none()
                }
            }
        };
        let left = (self.budget - self.spent).max(0.0);
        let charge = wanted.sup().min(left);
        let corruption = if charge > 0.0 {
            Corruption {
                amount: wanted.amount.signum() * charge,
                ..wanted
            }
        } else {
            Corruption::none()
        };
        self.spent += charge;
        self.ledger.push(charge);
        corruption
    }
}

/// Ground truth for one bandit instance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSpec {
    pub theta_star: Vector,
    pub noise: NoiseModel,
    pub misspec: Option<Misspecification>,
    pub adversary: Option<AdversarySpec>,
    pub sparsity: Option<usize>,
}

impl EnvironmentSpec {
    pub fn new(theta_star: Vector) -> Self {
        Self {
            theta_star,
            noise: NoiseModel::Gaussian,
            misspec: None,
            adversary: None,
            sparsity: None,
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    /// Checks the invariants against a context distribution.
    pub fn validate(&self, dist: &ContextDistribution) -> Result<(), EnvError> {
        if dist.dim() != self.dim() {
            return Err(EnvError::DimensionMismatch {
                expected: dist.dim(),
                found: self.dim(),
            });
        }
        if !(self.theta_star.norm() <= 1.0 + 1e-12) {
            return Err(EnvError::InvalidSpec(format!(
                "theta_star norm {} exceeds 1",
                self.theta_star.norm()
            )));
        }
        if let Some(s) = self.sparsity {
            let nnz = self.theta_star.iter().filter(|x| **x != 0.0).count();
            if nnz > s {
                return Err(EnvError::InvalidSpec(format!(
                    "theta_star has {nnz} nonzeros, more than the declared {s}"
                )));
            }
        }
        if let Some(f) = &self.misspec {
            let sup = match dist.all_actions() {
                Some(actions) => actions.map(|a| f.value(a).abs()).fold(0.0, f64::max),
                None => f.sup(),
            };
            if sup > f.epsilon() + 1e-12 {
                return Err(EnvError::InvalidSpec(format!(
                    "misspecification reaches {sup}, above epsilon {}",
                    f.epsilon()
                )));
            }
        }
        Ok(())
    }
}

/// Everything that happened in one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub pulled: Vector,
    pub clean_mean: f64,
    pub noise: f64,
    pub misspec: f64,
    pub corruption: f64,
    pub observed_reward: f64,
    pub optimal_value: f64,
    pub instantaneous_regret: f64,
}

/// Per-run reward generator: owns the noise stream and adversary state.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: EnvironmentSpec,
    noise_rng: ChaCha8Rng,
    adversary: Option<CorruptionAdversary>,
}

impl Simulator {
    pub fn new(spec: EnvironmentSpec, noise_rng: ChaCha8Rng) -> Result<Self, EnvError> {
        let adversary = spec
            .adversary
            .as_ref()
            .map(CorruptionAdversary::new)
            .transpose()?;
        Ok(Self {
            spec,
            noise_rng,
            adversary,
        })
    }

    pub fn spec(&self) -> &EnvironmentSpec {
        &self.spec
    }

    pub fn theta_star(&self) -> &Vector {
        &self.spec.theta_star
    }

    pub fn adversary(&self) -> Option<&CorruptionAdversary> {
        self.adversary.as_ref()
    }

    /// Plays `action` in `context`. The corruption is fixed before the action
    /// is inspected.
    pub fn play(&mut self, context: &Context, action: &Vector) -> Result<RoundOutcome, EnvError> {
        if !context.contains(action) {
            return Err(EnvError::ActionNotInContext);
        }
        let theta = &self.spec.theta_star;
        let corruption = match self.adversary.as_mut() {
            Some(adv) => adv.decide(context, theta),
            None => Corruption::none(),
        };
        let clean_mean = action.dot(theta);
        let noise = self.spec.noise.sample(&mut self.noise_rng);
        let misspec = self
            .spec
            .misspec
            .as_ref()
            .map_or(0.0, |f| f.value(action));
        let corruption = corruption.at(action);
        let optimal_value = optimal_round_value(context, theta);
        Ok(RoundOutcome {
            pulled: action.clone(),
            clean_mean,
            noise,
            misspec,
            corruption,
            observed_reward: ((clean_mean + noise) + misspec) + corruption,
            optimal_value,
            instantaneous_regret: optimal_value - clean_mean,
        })
    }
}

/// Writes `t, regret, cum_regret, reward, corruption` rows.
pub fn write_outcomes<W: Write>(outcomes: &[RoundOutcome], out: W) -> Result<(), EnvError> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["t", "regret", "cum_regret", "reward", "corruption"])?;
    let mut cum = 0.0;
    for (i, o) in outcomes.iter().enumerate() {
        cum += o.instantaneous_regret;
        writer.write_record([
            (i + 1).to_string(),
            o.instantaneous_regret.to_string(),
            cum.to_string(),
            o.observed_reward.to_string(),
            o.corruption.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
