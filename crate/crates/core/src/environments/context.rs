use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::EnvError;
use crate::Vector;

const NORM_SLACK: f64 = 1e-12;
const PROB_SLACK: f64 = 1e-12;

/// A finite, nonempty set of actions inside the unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSet {
    actions: Vec<Vector>,
}

impl ActionSet {
    pub fn new(actions: Vec<Vector>) -> Result<Self, EnvError> {
        let dim = actions
            .first()
            .map(|a| a.len())
            .ok_or_else(|| EnvError::InvalidDistribution("empty action set".into()))?;
        for a in &actions {
            if a.len() != dim {
                return Err(EnvError::DimensionMismatch {
                    expected: dim,
                    found: a.len(),
                });
            }
            if !(a.norm() <= 1.0 + NORM_SLACK) {
                return Err(EnvError::InvalidDistribution(format!(
                    "action norm {} exceeds 1",
                    a.norm()
                )));
            }
        }
        Ok(Self { actions })
    }

    pub fn actions(&self) -> &[Vector] {
        &self.actions
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.actions[0].len()
    }

    /// Index of the first action maximising `<a, theta>`.
    pub fn argmax(&self, theta: &Vector) -> usize {
        let mut best = 0;
        let mut best_value = f64::NEG_INFINITY;
        for (i, a) in self.actions.iter().enumerate() {
            let v = a.dot(theta);
            if v > best_value {
                best = i;
                best_value = v;
            }
        }
        best
    }

    pub fn contains(&self, action: &Vector) -> bool {
        self.actions.iter().any(|a| a == action)
    }
}

/// A realised context.
#[derive(Debug, Clone, PartialEq)]
pub enum Context {
    /// One of the support sets of a finite-support distribution.
    Finite { support: usize, set: Arc<ActionSet> },
    /// A product set, stored as one value list per coordinate.
    Product { coordinates: Vec<Arc<[f64]>> },
}

impl Context {
    pub fn dim(&self) -> usize {
        match self {
            Context::Finite { set, .. } => set.dim(),
            Context::Product { coordinates } => coordinates.len(),
        }
    }

    /// Greedy action for `theta`; ties go to the lowest index, or to the
    /// coordinate maximum when `theta_i = 0`.
    pub fn best_action(&self, theta: &Vector) -> Vector {
        match self {
            Context::Finite { set, .. } => set.actions()[set.argmax(theta)].clone(),
            Context::Product { coordinates } => Vector::from_iterator(
                coordinates.len(),
                coordinates.iter().enumerate().map(|(i, values)| {
                    if theta[i] < 0.0 {
                        min_of(values)
                    } else {
                        max_of(values)
                    }
                }),
            ),
        }
    }

    pub fn contains(&self, action: &Vector) -> bool {
        if action.len() != self.dim() {
            return false;
        }
        match self {
            Context::Finite { set, .. } => set.contains(action),
            Context::Product { coordinates } => coordinates
                .iter()
                .zip(action.iter())
                .all(|(values, x)| values.contains(x)),
        }
    }

    /// Number of actions in the context (product sets may be huge).
    pub fn cardinality(&self) -> u128 {
        match self {
            Context::Finite { set, .. } => set.len() as u128,
            Context::Product { coordinates } => coordinates
                .iter()
                .map(|v| v.len() as u128)
                .fold(1u128, |acc, n| acc.saturating_mul(n)),
        }
    }
}

pub(crate) fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn min_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `max_{a in context} <a, theta_star>`.
pub fn optimal_round_value(context: &Context, theta_star: &Vector) -> f64 {
    match context {
        Context::Finite { set, .. } => set
            .actions()
            .iter()
            .map(|a| a.dot(theta_star))
            .fold(f64::NEG_INFINITY, f64::max),
        Context::Product { coordinates } => coordinates
            .iter()
            .zip(theta_star.iter())
            .map(|(values, &t)| {
                if t < 0.0 {
                    min_of(values) * t
                } else {
                    max_of(values) * t
                }
            })
            .sum(),
    }
}

fn check_probabilities(probs: &[f64]) -> Result<(), EnvError> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(EnvError::InvalidDistribution(
            "probabilities must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_SLACK {
        return Err(EnvError::InvalidDistribution(format!(
            "probabilities sum to {total}"
        )));
    }
    Ok(())
}

/// Finitely many action sets, each drawn with a fixed probability.
#[derive(Debug, Clone)]
pub struct FiniteDistribution {
    supports: Vec<Arc<ActionSet>>,
    probabilities: Vec<f64>,
    sampler: WeightedIndex<f64>,
}

impl FiniteDistribution {
    pub fn new(supports: Vec<(ActionSet, f64)>) -> Result<Self, EnvError> {
        let (sets, probabilities): (Vec<ActionSet>, Vec<f64>) = supports.into_iter().unzip();
        if sets.is_empty() {
            return Err(EnvError::InvalidDistribution("no support sets".into()));
        }
        let dim = sets[0].dim();
        if let Some(bad) = sets.iter().find(|s| s.dim() != dim) {
            return Err(EnvError::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        check_probabilities(&probabilities)?;
        let sampler = WeightedIndex::new(&probabilities)
            .map_err(|e| EnvError::InvalidDistribution(e.to_string()))?;
        Ok(Self {
            supports: sets.into_iter().map(Arc::new).collect(),
            probabilities,
            sampler,
        })
    }

    pub fn supports(&self) -> &[Arc<ActionSet>] {
        &self.supports
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn dim(&self) -> usize {
        self.supports[0].dim()
    }

    pub fn context(&self, support: usize) -> Context {
        Context::Finite {
            support,
            set: Arc::clone(&self.supports[support]),
        }
    }
}

/// One coordinate of a product distribution: value lists with probabilities.
#[derive(Debug, Clone)]
pub struct CoordinateLaw {
    lists: Vec<(Arc<[f64]>, f64)>,
    sampler: WeightedIndex<f64>,
}

impl CoordinateLaw {
    pub fn new(lists: Vec<(Vec<f64>, f64)>) -> Result<Self, EnvError> {
        if lists.is_empty() || lists.iter().any(|(v, _)| v.is_empty()) {
            return Err(EnvError::InvalidDistribution(
                "coordinate value lists must be nonempty".into(),
            ));
        }
        if lists
            .iter()
            .flat_map(|(v, _)| v.iter())
            .any(|x| !(x.abs() <= 1.0))
        {
            return Err(EnvError::InvalidDistribution(
                "coordinate values must lie in [-1, 1]".into(),
            ));
        }
        let probs: Vec<f64> = lists.iter().map(|(_, p)| *p).collect();
        check_probabilities(&probs)?;
        let sampler = WeightedIndex::new(&probs)
            .map_err(|e| EnvError::InvalidDistribution(e.to_string()))?;
        Ok(Self {
            lists: lists.into_iter().map(|(v, p)| (Arc::from(v), p)).collect(),
            sampler,
        })
    }

    pub fn lists(&self) -> &[(Arc<[f64]>, f64)] {
        &self.lists
    }

    pub fn expected_max(&self) -> f64 {
        self.lists.iter().map(|(v, p)| p * max_of(v)).sum()
    }

    pub fn expected_min(&self) -> f64 {
        self.lists.iter().map(|(v, p)| p * min_of(v)).sum()
    }
}

/// Independent coordinates; each round draws one value list per coordinate.
#[derive(Debug, Clone)]
pub struct ProductDistribution {
    coordinates: Vec<CoordinateLaw>,
}

impl ProductDistribution {
    pub fn new(coordinates: Vec<CoordinateLaw>) -> Result<Self, EnvError> {
        if coordinates.is_empty() {
            return Err(EnvError::InvalidDistribution("no coordinates".into()));
        }
        Ok(Self { coordinates })
    }

    pub fn coordinates(&self) -> &[CoordinateLaw] {
        &self.coordinates
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }
}

#[derive(Debug, Clone)]
pub enum ContextDistribution {
    Finite(FiniteDistribution),
    Product(ProductDistribution),
}

impl ContextDistribution {
    pub fn finite(supports: Vec<(ActionSet, f64)>) -> Result<Self, EnvError> {
        FiniteDistribution::new(supports).map(Self::Finite)
    }

    pub fn product(coordinates: Vec<Vec<(Vec<f64>, f64)>>) -> Result<Self, EnvError> {
        let laws = coordinates
            .into_iter()
            .map(CoordinateLaw::new)
            .collect::<Result<Vec<_>, _>>()?;
        ProductDistribution::new(laws).map(Self::Product)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Finite(f) => f.dim(),
            Self::Product(p) => p.dim(),
        }
    }

    pub fn as_finite(&self) -> Option<&FiniteDistribution> {
        match self {
            Self::Finite(f) => Some(f),
            Self::Product(_) => None,
        }
    }

    pub fn as_product(&self) -> Option<&ProductDistribution> {
        match self {
            Self::Product(p) => Some(p),
            Self::Finite(_) => None,
        }
    }

    /// Every action any context can contain, for finite supports.
    pub fn all_actions(&self) -> Option<impl Iterator<Item = &Vector>> {
        self.as_finite()
            .map(|f| f.supports.iter().flat_map(|s| s.actions().iter()))
    }
}

pub fn sample_context<R: Rng + ?Sized>(dist: &ContextDistribution, rng: &mut R) -> Context {
    match dist {
        ContextDistribution::Finite(f) => f.context(f.sampler.sample(rng)),
        ContextDistribution::Product(p) => Context::Product {
            coordinates: p
                .coordinates
                .iter()
                .map(|law| Arc::clone(&law.lists[law.sampler.sample(rng)].0))
                .collect(),
        },
    }
}
