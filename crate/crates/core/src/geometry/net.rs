use std::collections::HashSet;
use std::fmt;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::GeometryError;
use crate::Vector;

/// Hard limit on the number of points a generated net may hold.
pub const POINT_CAP: u64 = 10_000_000;

const NORM_SLACK: f64 = 1e-12;
// lattice points whose norm exceeds 1 only through rounding are kept and
// rescaled onto the sphere
const LATTICE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NetKind {
    DenseGrid,
    Sparse { sparsity: usize },
    UserSupplied,
}

impl fmt::Display for NetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetKind::DenseGrid => write!(f, "dense-grid"),
            NetKind::Sparse { .. } => write!(f, "sparse"),
            NetKind::UserSupplied => write!(f, "user-supplied"),
        }
    }
}

/// A finite subset of the unit ball used as the learner's parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterNet {
    points: Vec<Vector>,
    dim: usize,
    target_radius: f64,
    kind: NetKind,
}

impl ParameterNet {
    /// Validates and wraps an explicit point list.
    pub fn from_points(
        points: Vec<Vector>,
        target_radius: f64,
    ) -> Result<Self, GeometryError> {
        Self::with_kind(points, target_radius, NetKind::UserSupplied)
    }

    pub(crate) fn with_kind(
        points: Vec<Vector>,
        target_radius: f64,
        kind: NetKind,
    ) -> Result<Self, GeometryError> {
        let dim = points
            .first()
            .map(|p| p.len())
            .ok_or_else(|| GeometryError::InvalidArgument("net must contain a point".into()))?;
        if dim == 0 {
            return Err(GeometryError::InvalidArgument("dimension must be positive".into()));
        }
        if !(target_radius > 0.0) {
            return Err(GeometryError::InvalidArgument(format!(
                "target radius must be positive, got {target_radius}"
            )));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(GeometryError::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            let norm = p.norm();
            if !norm.is_finite() || norm > 1.0 + NORM_SLACK {
                return Err(GeometryError::OutsideUnitBall { index, norm });
            }
            if let NetKind::Sparse { sparsity } = kind {
                if nnz(p) > sparsity {
                    return Err(GeometryError::InvalidArgument(format!(
                        "point {index} has more than {sparsity} nonzeros"
                    )));
                }
            }
            if !seen.insert(bit_key(p)) {
                return Err(GeometryError::DuplicatePoint(index));
            }
        }
        Ok(Self {
            points,
            dim,
            target_radius,
            kind,
        })
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn point(&self, index: usize) -> &Vector {
        &self.points[index]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn target_radius(&self) -> f64 {
        self.target_radius
    }

    pub fn kind(&self) -> NetKind {
        self.kind
    }

    /// Index of and distance to the closest net point (lowest index on ties).
    pub fn nearest(&self, x: &Vector) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, p) in self.points.iter().enumerate() {
            let d2 = (p - x).norm_squared();
            if d2 < best.1 {
                best = (i, d2);
            }
        }
        (best.0, best.1.sqrt())
    }
}

pub(super) fn nnz(v: &Vector) -> usize {
    v.iter().filter(|x| **x != 0.0).count()
}

fn bit_key(v: &Vector) -> Vec<u64> {
    // +0.0 and -0.0 must collide
    v.iter().map(|x| (x + 0.0).to_bits()).collect()
}

fn lattice_limit(resolution: f64) -> Result<(f64, i64), GeometryError> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(GeometryError::InvalidArgument(format!(
            "resolution must be positive and finite, got {resolution}"
        )));
    }
    let limit_sq = (1.0 + LATTICE_SLACK) / (resolution * resolution);
    let k_max = limit_sq.sqrt().floor() as i64;
    Ok((limit_sq, k_max))
}

/// Number of integer vectors in `dims` coordinates with squared norm within
/// `budget`, optionally requiring every coordinate to be nonzero. Stops
/// counting once `stop` is passed.
fn count_lattice(dims: usize, budget: f64, nonzero: bool, stop: u128) -> u128 {
    if budget < 0.0 {
        return 0;
    }
    let k_max = budget.sqrt().floor() as i64;
    if dims == 1 {
        let all = 2 * k_max as u128 + 1;
        return if nonzero { all - 1 } else { all };
    }
    let mut total = 0u128;
    for k in -k_max..=k_max {
        if nonzero && k == 0 {
            continue;
        }
        total += count_lattice(dims - 1, budget - (k * k) as f64, nonzero, stop);
        if total > stop {
            return total;
        }
    }
    total
}

fn enumerate_lattice(
    dims: usize,
    budget: f64,
    nonzero: bool,
    prefix: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
) {
    if prefix.len() == dims {
        out.push(prefix.clone());
        return;
    }
    let k_max = budget.sqrt().floor() as i64;
    for k in -k_max..=k_max {
        if nonzero && k == 0 {
            continue;
        }
        prefix.push(k);
        enumerate_lattice(dims, budget - (k * k) as f64, nonzero, prefix, out);
        prefix.pop();
    }
}

fn lattice_point(coords: &[(usize, i64)], dim: usize, resolution: f64) -> Vector {
    let mut v = Vector::zeros(dim);
    for &(axis, k) in coords {
        v[axis] = k as f64 * resolution;
    }
    let norm = v.norm();
    if norm > 1.0 {
        v /= norm;
    }
    v
}

/// All lattice points of spacing `resolution` inside the unit ball.
///
/// Covering radius is at most `resolution * sqrt(dim)`: truncating any point of
/// the ball toward zero coordinatewise lands on a lattice point of the ball.
pub fn build_dense_net(dim: usize, resolution: f64) -> Result<ParameterNet, GeometryError> {
    if dim == 0 {
        return Err(GeometryError::InvalidArgument("dimension must be positive".into()));
    }
    let (limit_sq, _) = lattice_limit(resolution)?;
    if count_lattice(dim, limit_sq, false, POINT_CAP as u128) > POINT_CAP as u128 {
        return Err(GeometryError::CapacityExceeded { cap: POINT_CAP });
    }
    let mut raw = Vec::new();
    enumerate_lattice(dim, limit_sq, false, &mut Vec::with_capacity(dim), &mut raw);
    let points = raw
        .into_iter()
        .map(|ks| {
            let coords: Vec<(usize, i64)> = ks.into_iter().enumerate().collect();
            lattice_point(&coords, dim, resolution)
        })
        .collect();
    ParameterNet::with_kind(points, resolution * (dim as f64).sqrt(), NetKind::DenseGrid)
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Union over all supports of size at most `sparsity` of the dense grid in the
/// corresponding coordinate ball, embedded in `dim` dimensions.
pub fn build_sparse_net(
    dim: usize,
    sparsity: usize,
    resolution: f64,
) -> Result<ParameterNet, GeometryError> {
    if sparsity == 0 || sparsity > dim {
        return Err(GeometryError::InvalidArgument(format!(
            "sparsity must lie in 1..={dim}, got {sparsity}"
        )));
    }
    let (limit_sq, _) = lattice_limit(resolution)?;
    let cap = POINT_CAP as u128;
    let mut total: u128 = 1;
    let mut per_size = Vec::with_capacity(sparsity);
    for k in 1..=sparsity {
        let n_k = count_lattice(k, limit_sq, true, cap);
        per_size.push(n_k);
        total = total.saturating_add(binomial(dim, k).saturating_mul(n_k));
        if total > cap {
            return Err(GeometryError::CapacityExceeded { cap: POINT_CAP });
        }
    }
    let mut points = vec![Vector::zeros(dim)];
    for k in 1..=sparsity {
        if per_size[k - 1] == 0 {
            continue;
        }
        let mut patterns = Vec::new();
        enumerate_lattice(k, limit_sq, true, &mut Vec::with_capacity(k), &mut patterns);
        for support in combinations(dim, k) {
            for pattern in &patterns {
                let coords: Vec<(usize, i64)> =
                    support.iter().cloned().zip(pattern.iter().cloned()).collect();
                points.push(lattice_point(&coords, dim, resolution));
            }
        }
    }
    ParameterNet::with_kind(
        points,
        resolution * (sparsity as f64).sqrt(),
        NetKind::Sparse { sparsity },
    )
}

/// Uniform draw from the unit ball of the given dimension.
pub fn sample_unit_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    loop {
        let g = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = g.norm();
        if norm > 0.0 {
            let radius = rng.random::<f64>().powf(1.0 / dim as f64);
            return g * (radius / norm);
        }
    }
}

/// Monte-Carlo estimate of the covering radius: the largest distance from a
/// random point of the (sparsity-restricted) unit ball to its nearest net point.
pub fn covering_radius_estimate(net: &ParameterNet, samples: usize, rng_seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let dim = net.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..samples.max(1) {
        let x = match net.kind() {
            NetKind::Sparse { sparsity } => {
                let support = sample_indices(&mut rng, dim, sparsity);
                let inner = sample_unit_ball(sparsity, &mut rng);
                let mut x = Vector::zeros(dim);
                for (slot, axis) in support.iter().enumerate() {
                    x[axis] = inner[slot];
                }
                x
            }
            _ => sample_unit_ball(dim, &mut rng),
        };
        worst = worst.max(net.nearest(&x).1);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords(net: &ParameterNet) -> Vec<Vec<f64>> {
        net.points().iter().map(|p| p.iter().cloned().collect()).collect()
    }

    #[test]
    fn dense_1d_half_spacing() {
        let net = build_dense_net(1, 0.5).unwrap();
        assert_eq!(
            coords(&net),
            vec![vec![-1.0], vec![-0.5], vec![0.0], vec![0.5], vec![1.0]]
        );
    }

    #[test]
    fn dense_2d_unit_spacing() {
        let net = build_dense_net(2, 1.0).unwrap();
        let pts = coords(&net);
        for want in [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            assert!(pts.contains(&want.to_vec()), "missing {want:?}");
        }
    }

    #[test]
    fn boundary_rounding_is_projected() {
        // 0.05 * 20 overshoots 1.0 in floating point
        let net = build_dense_net(1, 0.05).unwrap();
        assert_eq!(net.len(), 41);
        assert!(net.points().iter().all(|p| p.norm() <= 1.0));
    }

    #[test]
    fn capacity_is_enforced() {
        let err = build_dense_net(10, 0.05).unwrap_err();
        assert!(matches!(err, GeometryError::CapacityExceeded { .. }));
        let err = build_sparse_net(200, 4, 0.01).unwrap_err();
        assert!(matches!(err, GeometryError::CapacityExceeded { .. }));
    }

    #[test]
    fn sparse_examples() {
        assert_eq!(build_sparse_net(3, 1, 0.5).unwrap().len(), 13);
        assert_eq!(build_sparse_net(5, 1, 1.0).unwrap().len(), 11);
        assert!(build_sparse_net(3, 4, 0.5).is_err());
        assert!(build_sparse_net(3, 0, 0.5).is_err());
    }

    #[test]
    fn user_supplied_validation() {
        let ok = ParameterNet::from_points(vec![Vector::from_vec(vec![0.6, 0.8])], 0.1);
        assert!(ok.is_ok());
        let far = ParameterNet::from_points(vec![Vector::from_vec(vec![1.0, 1.0])], 0.1);
        assert!(matches!(far, Err(GeometryError::OutsideUnitBall { .. })));
        let dup = ParameterNet::from_points(
            vec![Vector::from_vec(vec![0.0, 0.0]), Vector::from_vec(vec![-0.0, 0.0])],
            0.1,
        );
        assert!(matches!(dup, Err(GeometryError::DuplicatePoint(1))));
        assert!(ParameterNet::from_points(vec![], 0.1).is_err());
    }

    #[test]
    fn covering_estimates() {
        let net = build_dense_net(1, 0.5).unwrap();
        assert!(covering_radius_estimate(&net, 1000, 3) <= 0.25 + 1e-12);

        let origin = ParameterNet::from_points(vec![Vector::zeros(2)], 1.0).unwrap();
        let r = covering_radius_estimate(&origin, 1000, 3);
        assert!((0.5..=1.0).contains(&r), "{r}");

        let net = build_dense_net(3, 0.3).unwrap();
        assert!(covering_radius_estimate(&net, 1000, 5) <= 0.3 * 3f64.sqrt());
    }

    #[test]
    fn sparse_covering_respects_pattern() {
        let net = build_sparse_net(6, 2, 0.25).unwrap();
        let r = covering_radius_estimate(&net, 500, 11);
        assert!(r <= 0.25 * 2f64.sqrt() + 1e-12, "{r}");
    }
}
