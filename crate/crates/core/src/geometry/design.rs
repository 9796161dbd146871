//! G-optimal experimental design.
//!
//! Frank–Wolfe on the log-determinant objective with away steps, run in an
//! orthonormal basis of the action span so rank-deficient inputs need no
//! special casing. Support that survives pruning above the cap is reduced by
//! a Carathéodory pass that leaves the Gram matrix unchanged.

use nalgebra::{DMatrix, SymmetricEigen};

use super::linalg::{log_log_guard, pseudo_inverse_sym, span_basis};
use super::GeometryError;
use crate::Vector;

const PRUNE_BELOW: f64 = 1e-6;
const LEVERAGE_TOL: f64 = 1e-6;
const MAX_ITERATIONS: usize = 50_000;

/// `floor(4 d loglog d + 16)` with the guarded `loglog`.
pub fn support_cap(dim: usize) -> usize {
    (4.0 * dim as f64 * log_log_guard(dim) + 16.0).floor() as usize
}

/// A probability weighting over a subset of an action list.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignWeights {
    indices: Vec<usize>,
    actions: Vec<Vector>,
    weights: Vec<f64>,
    gram: DMatrix<f64>,
    gram_pinv: DMatrix<f64>,
    allocations: Vec<u64>,
}

impl DesignWeights {
    /// Builds a design from explicit weights. Zero weights are dropped.
    pub fn from_weights(actions: Vec<Vector>, weights: Vec<f64>) -> Result<Self, GeometryError> {
        if actions.is_empty() || actions.len() != weights.len() {
            return Err(GeometryError::InvalidArgument(
                "design needs one weight per action".into(),
            ));
        }
        let dim = actions[0].len();
        if let Some(bad) = actions.iter().find(|a| a.len() != dim) {
            return Err(GeometryError::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(GeometryError::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(GeometryError::InvalidArgument(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let keep: Vec<usize> = (0..actions.len()).filter(|&i| weights[i] > 0.0).collect();
        Ok(Self::assemble(
            keep.clone(),
            keep.iter().map(|&i| actions[i].clone()).collect(),
            keep.iter().map(|&i| weights[i]).collect(),
        ))
    }

    fn assemble(indices: Vec<usize>, actions: Vec<Vector>, weights: Vec<f64>) -> Self {
        let dim = actions[0].len();
        let mut gram = DMatrix::zeros(dim, dim);
        for (a, &w) in actions.iter().zip(&weights) {
            gram.ger(w, a, a, 1.0);
        }
        let gram_pinv = pseudo_inverse_sym(&gram);
        Self {
            indices,
            actions,
            weights,
            gram,
            gram_pinv,
            allocations: Vec::new(),
        }
    }

    /// Positions of the support actions in the list the design was built from.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn actions(&self) -> &[Vector] {
        &self.actions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_pinv(&self) -> &DMatrix<f64> {
        &self.gram_pinv
    }

    /// Pull counts from the last call to [`allocate`](Self::allocate).
    pub fn allocations(&self) -> &[u64] {
        &self.allocations
    }

    /// Sets `u(x) = ceil(weight(x) * len)` for every support action.
    pub fn allocate(&mut self, len: u64) -> &[u64] {
        self.allocations = self
            .weights
            .iter()
            .map(|w| (w * len as f64 - 1e-9).ceil().max(0.0) as u64)
            .collect();
        &self.allocations
    }

    pub fn max_leverage<'a>(&self, actions: impl IntoIterator<Item = &'a Vector>) -> f64 {
        actions
            .into_iter()
            .map(|a| leverage(a, self))
            .fold(0.0, f64::max)
    }
}

/// `a^T G^+ a` under the design's Gram matrix.
pub fn leverage(action: &Vector, design: &DesignWeights) -> f64 {
    let q = action.dot(&(&design.gram_pinv * action));
    q.max(0.0)
}

/// Finds weights whose max leverage over every input action is at most
/// `leverage_target` with at most `support_cap` support points.
pub fn g_optimal_design(
    actions: &[Vector],
    support_cap: usize,
    leverage_target: f64,
) -> Result<DesignWeights, GeometryError> {
    let Some(first) = actions.first() else {
        return Err(GeometryError::InvalidArgument("no actions".into()));
    };
    let dim = first.len();
    if let Some(bad) = actions.iter().find(|a| a.len() != dim) {
        return Err(GeometryError::DimensionMismatch {
            expected: dim,
            found: bad.len(),
        });
    }
    if actions.iter().all(|a| a.iter().all(|&x| x == 0.0)) {
        return Err(GeometryError::DegenerateActions);
    }
    let basis = span_basis(actions, dim);
    let rank = basis.ncols();
    if rank == 0 {
        return Err(GeometryError::DegenerateActions);
    }
    if leverage_target < rank as f64 - 1e-9 {
        return Err(GeometryError::InfeasibleTarget {
            target: leverage_target,
            rank,
        });
    }
    if support_cap == 0 {
        return Err(GeometryError::SupportCapExceeded {
            support: rank,
            cap: 0,
        });
    }

    let coords: Vec<Vector> = actions.iter().map(|a| basis.tr_mul(a)).collect();
    let mut weights = initial_weights(&coords, rank);
    let stop_at = leverage_target + 0.1 * LEVERAGE_TOL;

    let mut iterations = 0;
    let mut lev = leverages(&coords, &weights, rank);
    loop {
        let (k, lev_k) = argmax(&lev);
        if lev_k <= stop_at {
            break;
        }
        if iterations >= MAX_ITERATIONS {
            return Err(GeometryError::NotConverged {
                target: leverage_target,
                achieved: lev_k,
                iterations,
            });
        }
        iterations += 1;
        let r = rank as f64;
        let away = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > 0.0)
            .map(|(j, _)| (j, lev[j]))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let toward_gain = lev_k / r - 1.0;
        match away {
            Some((j, lev_j)) if weights[j] < 1.0 && 1.0 - lev_j / r > toward_gain => {
                let drop = weights[j] / (1.0 - weights[j]);
                let step = if lev_j <= 1.0 {
                    drop
                } else {
                    ((1.0 - lev_j / r) / (lev_j - 1.0)).min(drop)
                };
                for w in weights.iter_mut() {
                    *w *= 1.0 + step;
                }
                weights[j] -= step;
                if step == drop || weights[j] < 0.0 {
                    weights[j] = 0.0;
                }
            }
            _ => {
                let step = toward_gain / (lev_k - 1.0);
                for w in weights.iter_mut() {
                    *w *= 1.0 - step;
                }
                weights[k] += step;
            }
        }
        normalise(&mut weights);
        lev = leverages(&coords, &weights, rank);
    }

    let limit = leverage_target + LEVERAGE_TOL;
    let mut pruned = weights.clone();
    for w in pruned.iter_mut() {
        if *w < PRUNE_BELOW {
            *w = 0.0;
        }
    }
    normalise(&mut pruned);
    if max_of(&leverages(&coords, &pruned, rank)) <= limit {
        weights = pruned;
    }

    if support_of(&weights).len() > support_cap {
        caratheodory(&coords, &mut weights, rank, support_cap);
        if max_of(&leverages(&coords, &weights, rank)) > limit {
            return Err(GeometryError::NotConverged {
                target: leverage_target,
                achieved: max_of(&leverages(&coords, &weights, rank)),
                iterations,
            });
        }
    }
    let support = support_of(&weights);
    if support.len() > support_cap {
        return Err(GeometryError::SupportCapExceeded {
            support: support.len(),
            cap: support_cap,
        });
    }
    Ok(DesignWeights::assemble(
        support.clone(),
        support.iter().map(|&i| actions[i].clone()).collect(),
        support.iter().map(|&i| weights[i]).collect(),
    ))
}

/// Uniform weights on `rank` greedily pivoted independent actions.
fn initial_weights(coords: &[Vector], rank: usize) -> Vec<f64> {
    let mut residual: Vec<Vector> = coords.to_vec();
    let mut chosen = Vec::with_capacity(rank);
    for _ in 0..rank {
        let (i, _) = residual
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm_squared()))
            .filter(|(i, _)| !chosen.contains(i))
            .fold((usize::MAX, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        chosen.push(i);
        let pivot = residual[i].normalize();
        for v in residual.iter_mut() {
            let c = v.dot(&pivot);
            v.axpy(-c, &pivot, 1.0);
        }
    }
    let mut weights = vec![0.0; coords.len()];
    for i in chosen {
        weights[i] = 1.0 / rank as f64;
    }
    weights
}

fn gram_of(coords: &[Vector], weights: &[f64], rank: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(rank, rank);
    for (b, &w) in coords.iter().zip(weights) {
        if w > 0.0 {
            g.ger(w, b, b, 1.0);
        }
    }
    g
}

fn leverages(coords: &[Vector], weights: &[f64], rank: usize) -> Vec<f64> {
    let g = gram_of(coords, weights, rank);
    let inv = match g.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => pseudo_inverse_sym(&g),
    };
    coords.iter().map(|b| b.dot(&(&inv * b)).max(0.0)).collect()
}

fn argmax(xs: &[f64]) -> (usize, f64) {
    xs.iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
}

fn max_of(xs: &[f64]) -> f64 {
    argmax(xs).1
}

fn normalise(weights: &mut [f64]) {
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
}

fn support_of(weights: &[f64]) -> Vec<usize> {
    (0..weights.len()).filter(|&i| weights[i] > 0.0).collect()
}

/// Moves weight along null directions of `w -> (sum w b b^T, sum w)` until the
/// support fits under `cap` or no further reduction is possible.
fn caratheodory(coords: &[Vector], weights: &mut [f64], rank: usize, cap: usize) {
    let moment_dim = rank * (rank + 1) / 2 + 1;
    loop {
        let support = support_of(weights);
        if support.len() <= cap || support.len() <= moment_dim {
            return;
        }
        let cols = &support[..moment_dim + 1];
        let mut m = DMatrix::zeros(moment_dim, cols.len());
        for (c, &i) in cols.iter().enumerate() {
            let b = &coords[i];
            let mut row = 0;
            for p in 0..rank {
                for q in p..rank {
                    m[(row, c)] = b[p] * b[q];
                    row += 1;
                }
            }
            m[(row, c)] = 1.0;
        }
        let eig = SymmetricEigen::new(m.tr_mul(&m));
        let (null_idx, _) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        let dir = eig.eigenvectors.column(null_idx).into_owned();
        let dir = if dir.max() > -dir.min() { dir } else { -dir };
        let (drop, step) = cols
            .iter()
            .enumerate()
            .filter(|(c, _)| dir[*c] > 0.0)
            .map(|(c, &i)| (c, weights[i] / dir[c]))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        for (c, &i) in cols.iter().enumerate() {
            weights[i] = (weights[i] - step * dir[c]).max(0.0);
        }
        weights[cols[drop]] = 0.0;
        normalise(weights);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis_vectors(d: usize) -> Vec<Vector> {
        (0..d)
            .map(|i| {
                let mut v = Vector::zeros(d);
                v[i] = 1.0;
                v
            })
            .collect()
    }

    fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vector {
        Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)).normalize()
    }

    #[test]
    fn orthonormal_is_uniform() {
        for d in 1..6 {
            let actions = basis_vectors(d);
            let design = g_optimal_design(&actions, support_cap(d), 2.0 * d as f64).unwrap();
            assert_eq!(design.support_len(), d);
            for (a, w) in design.actions().iter().zip(design.weights()) {
                assert!((w - 1.0 / d as f64).abs() < 1e-12);
                assert!((leverage(a, &design) - d as f64).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn single_vector() {
        let v = Vector::from_vec(vec![0.3, -0.4, 0.0]);
        let design = g_optimal_design(std::slice::from_ref(&v), 4, 2.0).unwrap();
        assert_eq!(design.weights(), &[1.0]);
        assert!((leverage(&v, &design) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_actions_are_degenerate() {
        let z = Vector::zeros(3);
        assert!(matches!(
            g_optimal_design(&[z.clone(), z], 28, 6.0),
            Err(GeometryError::DegenerateActions)
        ));
    }

    #[test]
    fn target_below_rank_is_infeasible() {
        assert!(matches!(
            g_optimal_design(&basis_vectors(3), 28, 2.5),
            Err(GeometryError::InfeasibleTarget { rank: 3, .. })
        ));
    }

    #[test]
    fn leverage_of_zero_and_axis() {
        let design = g_optimal_design(&basis_vectors(4), 32, 8.0).unwrap();
        assert_eq!(leverage(&Vector::zeros(4), &design), 0.0);
        assert!((leverage(&basis_vectors(4)[0], &design) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn leverage_matches_direct_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 4;
        let actions: Vec<Vector> = (0..7).map(|_| random_unit(&mut rng, d)).collect();
        let raw: Vec<f64> = (0..7).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let design = DesignWeights::from_weights(actions.clone(), weights.clone()).unwrap();

        let mut g = DMatrix::zeros(d, d);
        for (a, w) in actions.iter().zip(&weights) {
            g += a * a.transpose() * *w;
        }
        let lu = g.lu();
        for _ in 0..20 {
            let a = Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let x = lu.solve(&a).unwrap();
            assert!((leverage(&a, &design) - a.dot(&x)).abs() < 1e-8);
        }
    }

    // Best max-leverage found by grid search over weights on every triple and
    // quadruple of actions.
    fn brute_force_optimum(actions: &[Vector]) -> f64 {
        fn max_lev(actions: &[Vector], pts: &[usize], w: &[f64]) -> f64 {
            let d = actions[0].len();
            let mut g = DMatrix::zeros(d, d);
            for (&i, &wi) in pts.iter().zip(w) {
                g += &actions[i] * actions[i].transpose() * wi;
            }
            let Some(inv) = g.try_inverse() else {
                return f64::INFINITY;
            };
            actions
                .iter()
                .map(|a| a.dot(&(&inv * a)))
                .fold(0.0, f64::max)
        }
        let n = actions.len();
        let mut best = f64::INFINITY;
        let steps = 20;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for a in 1..steps {
                        for b in 1..steps - a {
                            let w = [a, b, steps - a - b].map(|x| x as f64 / steps as f64);
                            best = best.min(max_lev(actions, &[i, j, k], &w));
                        }
                    }
                }
            }
        }
        let steps = 10;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for l in k + 1..n {
                        for a in 1..steps {
                            for b in 1..steps - a {
                                for c in 1..steps - a - b {
                                    let w = [a, b, c, steps - a - b - c]
                                        .map(|x| x as f64 / steps as f64);
                                    best = best.min(max_lev(actions, &[i, j, k, l], &w));
                                }
                            }
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn random_unit_vectors_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let actions: Vec<Vector> = (0..20).map(|_| random_unit(&mut rng, 3)).collect();

        let loose = g_optimal_design(&actions, support_cap(3), 6.0).unwrap();
        assert!(loose.max_leverage(&actions) <= 6.0 + 1e-6);

        let tight = g_optimal_design(&actions, support_cap(3), 3.0 * 1.01).unwrap();
        let ours = tight.max_leverage(&actions);
        let oracle = brute_force_optimum(&actions);
        assert!(oracle >= 3.0 - 1e-9);
        assert!(
            (ours - oracle).abs() <= 0.1 * oracle,
            "ours {ours} oracle {oracle}"
        );
    }

    #[test]
    fn rank_deficient_actions() {
        // a plane inside R^3
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let actions: Vec<Vector> = (0..15)
            .map(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                Vector::from_vec(vec![x, y, x + y]) / 2.0
            })
            .collect();
        let design = g_optimal_design(&actions, support_cap(3), 2.0).unwrap();
        let m = design.max_leverage(&actions);
        assert!((m - 2.0).abs() <= 1e-6, "{m}");
    }

    #[test]
    fn caratheodory_keeps_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let coords: Vec<Vector> = (0..30).map(|_| random_unit(&mut rng, 3)).collect();
        let mut weights = vec![1.0 / 30.0; 30];
        let before = gram_of(&coords, &weights, 3);
        caratheodory(&coords, &mut weights, 3, 7);
        assert!(support_of(&weights).len() <= 7);
        assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!((gram_of(&coords, &weights, 3) - before).norm() < 1e-8);
    }

    #[test]
    fn allocations_round_up() {
        let mut design = g_optimal_design(&basis_vectors(3), 28, 6.0).unwrap();
        assert_eq!(design.allocate(10), &[4, 4, 4]);
        assert_eq!(design.allocate(9), &[3, 3, 3]);
    }

    #[test]
    fn cap_values() {
        assert_eq!(support_cap(1), 20);
        assert_eq!(support_cap(3), 28);
        assert_eq!(support_cap(16), 4 * 16 * 2 + 16);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn feasible_and_above_kiefer_wolfowitz(seed in any::<u64>(), d in 2usize..7, n in 5usize..60) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let actions: Vec<Vector> = (0..n)
                .map(|_| Vector::from_fn(d, |_, _| rng.random_range(-1.0..1.0)))
                .collect();
            let target = 2.0 * d as f64;
            let design = g_optimal_design(&actions, support_cap(d), target).unwrap();
            let m = design.max_leverage(&actions);
            let rank = span_basis(&actions, d).ncols() as f64;
            prop_assert!(m <= target + 1e-6);
            prop_assert!(m >= rank - 1e-6);
            prop_assert!(design.support_len() <= support_cap(d));
            prop_assert!((design.weights().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
