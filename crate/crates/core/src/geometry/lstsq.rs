use nalgebra::DMatrix;

use super::linalg::pseudo_inverse_sym;
use crate::Vector;

/// Least-squares parameter estimate with its (pseudo-)inverse Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub theta_hat: Vector,
    pub gram_inverse: DMatrix<f64>,
    pub sample_count: u64,
}

/// Streaming accumulator for `sum a a^T` and `sum r a`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    gram: DMatrix<f64>,
    moment: Vector,
    count: u64,
}

impl LeastSquares {
    pub fn new(dim: usize) -> Self {
        Self {
            gram: DMatrix::zeros(dim, dim),
            moment: Vector::zeros(dim),
            count: 0,
        }
    }

    pub fn push(&mut self, action: &Vector, reward: f64) {
        self.gram.ger(1.0, action, action, 1.0);
        self.moment.axpy(reward, action, 1.0);
        self.count += 1;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Minimum-norm minimiser of the squared residuals.
    pub fn finish(&self) -> Estimate {
        let gram_inverse = pseudo_inverse_sym(&self.gram);
        let theta_hat = &gram_inverse * &self.moment;
        Estimate {
            theta_hat,
            gram_inverse,
            sample_count: self.count,
        }
    }
}

/// Pseudo-inverse least squares over `(action, reward)` pairs.
///
/// Panics if `pairs` is empty.
pub fn least_squares<'a, I>(pairs: I) -> Estimate
where
    I: IntoIterator<Item = (&'a Vector, f64)>,
{
    let mut iter = pairs.into_iter().peekable();
    let dim = iter.peek().expect("least squares needs at least one pair").0.len();
    let mut acc = LeastSquares::new(dim);
    for (a, r) in iter {
        acc.push(a, r);
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn v(x: &[f64]) -> Vector {
        Vector::from_vec(x.to_vec())
    }

    #[test]
    fn orthonormal_noiseless() {
        let e1 = v(&[1.0, 0.0]);
        let e2 = v(&[0.0, 1.0]);
        let est = least_squares([(&e1, 3.0), (&e2, -1.0)]);
        assert!((est.theta_hat[0] - 3.0).abs() < 1e-12);
        assert!((est.theta_hat[1] + 1.0).abs() < 1e-12);
        assert_eq!(est.sample_count, 2);
    }

    #[test]
    fn exact_interpolation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = v(&[0.3, -0.5, 0.2]);
        let actions: Vec<Vector> = (0..12)
            .map(|_| Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let est = least_squares(actions.iter().map(|a| (a, a.dot(&theta))));
        assert!((est.theta_hat - theta).norm() < 1e-9);
    }

    #[test]
    fn rank_deficient_is_minimum_norm() {
        // only the first axis is observed; the second coordinate stays zero
        let a = v(&[1.0, 0.0]);
        let est = least_squares([(&a, 2.0), (&a, 4.0)]);
        assert!((est.theta_hat[0] - 3.0).abs() < 1e-12);
        assert_eq!(est.theta_hat[1], 0.0);
    }

    #[test]
    fn residuals_orthogonal_to_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        // actions confined to a 2-d subspace of R^4
        let b1 = v(&[1.0, 1.0, 0.0, 0.0]) / 2f64.sqrt();
        let b2 = v(&[0.0, 0.0, 1.0, -1.0]) / 2f64.sqrt();
        let pairs: Vec<(Vector, f64)> = (0..50)
            .map(|_| {
                let a = &b1 * rng.random_range(-1.0..1.0) + &b2 * rng.random_range(-1.0..1.0);
                (a, rng.sample::<f64, _>(StandardNormal))
            })
            .collect();
        let est = least_squares(pairs.iter().map(|(a, r)| (a, *r)));
        let mut residual = Vector::zeros(4);
        for (a, r) in &pairs {
            residual += a * (r - a.dot(&est.theta_hat));
        }
        assert!(residual.norm() < 1e-8, "{}", residual.norm());
        // symmetric PSD
        let g = &est.gram_inverse;
        assert!((g - g.transpose()).norm() < 1e-10);
        assert!(g.clone().symmetric_eigenvalues().iter().all(|&l| l > -1e-10));
    }
}
