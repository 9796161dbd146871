use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::context::{ActionSet, ContextDistribution};
use super::reward::{AdversarySpec, AdversaryStrategy, EnvironmentSpec, Misspecification, NoiseModel};
use super::EnvError;
use crate::geometry::sample_unit_ball;
use crate::rng::{stream, Stream};
use crate::Vector;

pub const SUITE_NAMES: [&str; 6] = ["example1", "random-finite", "product", "sparse", "misspec", "corrupt"];

/// Knobs for the named suites; `SuiteOptions::new(dim)` gives the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteOptions {
    pub dim: usize,
    pub supports: usize,
    pub actions_per_support: usize,
    pub noise: NoiseModel,
    pub epsilon: f64,
    pub budget: f64,
    pub sparsity: usize,
    /// Overrides the sampled parameter.
    pub theta_star: Option<Vec<f64>>,
}

impl SuiteOptions {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            dim: 3,
            supports: 8,
            actions_per_support: 5,
            noise: NoiseModel::Gaussian,
            epsilon: 0.1,
            budget: 20.0,
            sparsity: 2,
            theta_star: None,
        }
    }
}

/// Two equiprobable contexts `{[1], [-1]}` and `{[1]}` on the real line.
pub fn example1(theta_star: f64) -> Result<(ContextDistribution, EnvironmentSpec), EnvError> {
    let plus = Vector::from_element(1, 1.0);
    let minus = Vector::from_element(1, -1.0);
    let dist = ContextDistribution::finite(vec![
        (ActionSet::new(vec![plus.clone(), minus])?, 0.5),
        (ActionSet::new(vec![plus])?, 0.5),
    ])?;
    Ok((dist, EnvironmentSpec::new(Vector::from_element(1, theta_star))))
}

fn unit_direction(dim: usize, rng: &mut ChaCha8Rng) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

fn random_probabilities(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

fn random_finite(opts: &SuiteOptions, rng: &mut ChaCha8Rng) -> Result<ContextDistribution, EnvError> {
    let probs = random_probabilities(opts.supports, rng);
    let mut supports = Vec::with_capacity(opts.supports);
    for p in probs {
        let actions = (0..opts.actions_per_support)
            .map(|_| sample_unit_ball(opts.dim, rng))
            .collect();
        supports.push((ActionSet::new(actions)?, p));
    }
    ContextDistribution::finite(supports)
}

fn random_product(opts: &SuiteOptions, rng: &mut ChaCha8Rng) -> Result<ContextDistribution, EnvError> {
    let coordinates = (0..opts.dim)
        .map(|_| {
            let probs = random_probabilities(2, rng);
            probs
                .into_iter()
                .map(|p| {
                    let values = (0..2).map(|_| rng.random_range(-1.0..=1.0)).collect();
                    (values, p)
                })
                .collect()
        })
        .collect();
    ContextDistribution::product(coordinates)
}

fn sparse_theta(dim: usize, s: usize, rng: &mut ChaCha8Rng) -> Vector {
    let mut theta = Vector::zeros(dim);
    let dir = unit_direction(s, rng);
    for (k, i) in sample_indices(rng, dim, s).into_iter().enumerate() {
        theta[i] = dir[k];
    }
    theta
}

/// Builds a named, reproducible instance.
pub fn make_suite(
    name: &str,
    opts: &SuiteOptions,
    seed: u64,
) -> Result<(ContextDistribution, EnvironmentSpec), EnvError> {
    if opts.dim == 0 {
        return Err(EnvError::InvalidSpec("dim must be positive".into()));
    }
    let mut rng = stream(seed, Stream::Instance);
    let (dist, mut spec) = match name {
        "example1" => {
            if opts.dim != 1 {
                return Err(EnvError::InvalidSpec("example1 lives in dimension 1".into()));
            }
            example1(1.0)?
        }
        "random-finite" | "misspec" | "corrupt" => {
            let dist = random_finite(opts, &mut rng)?;
            let theta = unit_direction(opts.dim, &mut rng);
            (dist, EnvironmentSpec::new(theta))
        }
        "product" => {
            let dist = random_product(opts, &mut rng)?;
            let theta = unit_direction(opts.dim, &mut rng);
            (dist, EnvironmentSpec::new(theta))
        }
        "sparse" => {
            if opts.sparsity == 0 || opts.sparsity > opts.dim {
                return Err(EnvError::InvalidSpec(format!(
                    "sparsity {} must lie in 1..={}",
                    opts.sparsity, opts.dim
                )));
            }
            let dist = random_finite(opts, &mut rng)?;
            let theta = sparse_theta(opts.dim, opts.sparsity, &mut rng);
            let mut spec = EnvironmentSpec::new(theta);
            spec.sparsity = Some(opts.sparsity);
            (dist, spec)
        }
        other => return Err(EnvError::UnknownSuiteName(other.to_string())),
    };
    if name == "misspec" {
        let f = Misspecification::table(
            opts.epsilon,
            dist.all_actions()
                .into_iter()
                .flatten()
                .map(|a| (a.clone(), rng.random_range(-opts.epsilon..=opts.epsilon)))
                .collect::<Vec<_>>(),
        );
        spec.misspec = Some(f);
    }
    if name == "corrupt" {
        spec.adversary = Some(AdversarySpec {
            strategy: AdversaryStrategy::FlipOptimal,
            budget: opts.budget,
        });
    }
    spec.noise = opts.noise;
    if let Some(theta) = &opts.theta_star {
        spec.theta_star = Vector::from_row_slice(theta);
    }
    spec.validate(&dist)?;
    Ok((dist, spec))
}

/// [`make_suite`] with default options for `dim`.
pub fn make_standard_suite(
    name: &str,
    dim: usize,
    seed: u64,
) -> Result<(ContextDistribution, EnvironmentSpec), EnvError> {
    make_suite(name, &SuiteOptions::new(dim), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_shape() {
        let (dist, spec) = make_standard_suite("example1", 1, 3).unwrap();
        let f = dist.as_finite().unwrap();
        assert_eq!(f.probabilities(), &[0.5, 0.5]);
        assert_eq!(f.supports()[0].len(), 2);
        assert_eq!(f.supports()[1].len(), 1);
        assert_eq!(spec.theta_star[0], 1.0);
        let (_, spec) = example1(-0.4).unwrap();
        assert_eq!(spec.theta_star[0], -0.4);
    }

    #[test]
    fn sparse_theta_has_exact_support() {
        let mut opts = SuiteOptions::new(20);
        opts.sparsity = 2;
        let (_, spec) = make_suite("sparse", &opts, 5).unwrap();
        assert_eq!(spec.theta_star.iter().filter(|x| **x != 0.0).count(), 2);
        assert_eq!(spec.sparsity, Some(2));
    }

    #[test]
    fn deterministic_per_seed() {
        let (a, sa) = make_standard_suite("random-finite", 3, 7).unwrap();
        let (b, sb) = make_standard_suite("random-finite", 3, 7).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a.as_finite().unwrap().supports(), b.as_finite().unwrap().supports());
        assert_eq!(a.as_finite().unwrap().probabilities(), b.as_finite().unwrap().probabilities());
    }

    #[test]
    fn every_name_builds() {
        for name in SUITE_NAMES {
            let dim = if name == "example1" { 1 } else { 4 };
            make_standard_suite(name, dim, 1).unwrap();
        }
        assert!(matches!(
            make_standard_suite("nope", 2, 1),
            Err(EnvError::UnknownSuiteName(_))
        ));
    }

    #[test]
    fn misspec_respects_epsilon() {
        let (dist, spec) = make_standard_suite("misspec", 3, 2).unwrap();
        let f = spec.misspec.as_ref().unwrap();
        assert!(dist.all_actions().unwrap().all(|a| f.value(a).abs() <= 0.1));
        assert!(f.sup() > 0.0);
    }
}
