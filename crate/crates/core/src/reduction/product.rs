//! Lifting product-structured contexts to a fixed `2d`-dimensional action set.
//!
//! Lifted arm `k` chooses, for coordinate `i`, the coordinate minimum when bit
//! `i` of `k` is set and the maximum otherwise. Its vector has a one at `2i+1`
//! (minimum) or `2i` (maximum), zero-based.

use super::ReductionError;
use crate::environments::{Context, ContextDistribution, ProductDistribution};
use crate::Vector;

/// Largest dimension whose `2^d` lifted arms are enumerated.
pub const MAX_LIFTED_DIM: usize = 16;

#[derive(Debug, Clone)]
pub struct ProductReduction {
    dim: usize,
    theta_prime_star: Vector,
}

impl ProductReduction {
    pub fn new(dist: &ContextDistribution, theta_star: &Vector) -> Result<Self, ReductionError> {
        let product = dist.as_product().ok_or(ReductionError::NotProduct)?;
        Ok(Self {
            dim: product.dim(),
            theta_prime_star: theta_prime_star(product, theta_star),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lifted_dim(&self) -> usize {
        2 * self.dim
    }

    /// Ground-truth lifted parameter (oracle only).
    pub fn theta_prime_star(&self) -> &Vector {
        &self.theta_prime_star
    }

    /// All `2^d` lifted arms, indexed by their min-bit pattern.
    pub fn lifted_arms(&self) -> Result<Vec<Vector>, ReductionError> {
        if self.dim > MAX_LIFTED_DIM {
            return Err(ReductionError::InvalidArgument(format!(
                "cannot enumerate 2^{} lifted arms",
                self.dim
            )));
        }
        Ok((0..1usize << self.dim).map(|k| lifted_arm(self.dim, k)).collect())
    }

    /// Physical action for lifted arm `k` in `context`.
    pub fn physical_action(&self, context: &Context, k: usize) -> Result<Vector, ReductionError> {
        let Context::Product { coordinates } = context else {
            return Err(ReductionError::NotProduct);
        };
        Ok(Vector::from_iterator(
            self.dim,
            coordinates.iter().enumerate().map(|(i, values)| {
                let pick_min = k >> i & 1 == 1;
                let fold = if pick_min { f64::min } else { f64::max };
                let init = if pick_min { f64::INFINITY } else { f64::NEG_INFINITY };
                values.iter().copied().fold(init, fold)
            }),
        ))
    }
}

/// Index of the lifted arm `a'(theta)`: coordinate minimum exactly where `theta_i < 0`.
pub fn lift_index(theta: &Vector) -> usize {
    theta
        .iter()
        .enumerate()
        .filter(|(_, &t)| t < 0.0)
        .fold(0, |k, (i, _)| k | 1 << i)
}

pub fn lifted_arm(dim: usize, k: usize) -> Vector {
    let mut a = Vector::zeros(2 * dim);
    for i in 0..dim {
        if k >> i & 1 == 1 {
            a[2 * i + 1] = 1.0;
        } else {
            a[2 * i] = 1.0;
        }
    }
    a
}

/// `a'(theta)` as a vector.
pub fn lift(theta: &Vector) -> Vector {
    lifted_arm(theta.len(), lift_index(theta))
}

/// Interleaves `E[max_i] theta_i` and `E[min_i] theta_i`.
pub fn theta_prime_star(dist: &ProductDistribution, theta_star: &Vector) -> Vector {
    let mut out = Vector::zeros(2 * dist.dim());
    for (i, law) in dist.coordinates().iter().enumerate() {
        out[2 * i] = law.expected_max() * theta_star[i];
        out[2 * i + 1] = law.expected_min() * theta_star[i];
    }
    out
}
