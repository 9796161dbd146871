use ctxreduce::geometry::{
    build_dense_net, build_sparse_net, covering_radius_estimate, g_optimal_design, least_squares,
    leverage, sample_unit_ball, support_cap, NetKind,
};
use ctxreduce::Vector;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

// Integer lattice points of radius `k` (i.e. spacing 1/k in the unit ball).
fn lattice_count(dim: usize, k: i64, max_nonzero: usize) -> usize {
    fn rec(dim: usize, k: i64, left: i64, nz: usize, max_nz: usize) -> usize {
        if dim == 0 {
            return 1;
        }
        let mut total = 0;
        for x in -k..=k {
            let nz = nz + usize::from(x != 0);
            if x * x <= left && nz <= max_nz {
                total += rec(dim - 1, k, left - x * x, nz, max_nz);
            }
        }
        total
    }
    rec(dim, k, k * k, 0, max_nonzero)
}

#[test]
fn dense_net_count_matches_lattice_enumeration() {
    let net = build_dense_net(3, 0.05).unwrap();
    assert_eq!(net.len(), lattice_count(3, 20, 3));
    assert_eq!(net.kind(), NetKind::DenseGrid);
    assert!(net.points().iter().all(|p| p.norm() <= 1.0 + 1e-12));
}

#[test]
fn sparse_net_count_matches_support_enumeration() {
    let net = build_sparse_net(4, 2, 0.25).unwrap();
    assert_eq!(net.len(), lattice_count(4, 4, 2));
    assert!(net
        .points()
        .iter()
        .all(|p| p.iter().filter(|x| **x != 0.0).count() <= 2));
}

#[test]
fn dense_covering_bound() {
    for (dim, res) in [(2, 0.2), (3, 0.25)] {
        let net = build_dense_net(dim, res).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = sample_unit_ball(dim, &mut rng);
            assert!(net.nearest(&x).1 <= res * (dim as f64).sqrt());
        }
        assert!(covering_radius_estimate(&net, 1000, 4) <= res * (dim as f64).sqrt());
    }
}

#[test]
fn least_squares_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let theta = Vector::from_vec(vec![0.4, -0.2, 0.7]);
    let pairs: Vec<(Vector, f64)> = (0..200)
        .map(|_| {
            let a = Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let r = a.dot(&theta) + rng.sample::<f64, _>(StandardNormal);
            (a, r)
        })
        .collect();
    let est = least_squares(pairs.iter().map(|(a, r)| (a, *r)));

    let design = DMatrix::from_fn(200, 3, |i, j| pairs[i].0[j]);
    let rewards = Vector::from_iterator(200, pairs.iter().map(|p| p.1));
    let normal = (design.transpose() * &design)
        .lu()
        .solve(&(design.transpose() * rewards))
        .unwrap();
    assert!((&est.theta_hat - &normal).norm() < 1e-10);
    assert!(
        ((&est.theta_hat - &theta).norm() - (&normal - &theta).norm()).abs() < 1e-10
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dense_points_lie_in_unit_ball(dim in 1usize..4, steps in 2u32..12) {
        let net = build_dense_net(dim, 1.0 / steps as f64).unwrap();
        prop_assert!(net.points().iter().all(|p| p.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn sparse_points_respect_pattern(dim in 2usize..6, s in 1usize..3, steps in 1u32..4) {
        let s = s.min(dim);
        let net = build_sparse_net(dim, s, 1.0 / steps as f64).unwrap();
        prop_assert_eq!(net.len(), lattice_count(dim, steps as i64, s));
    }

    #[test]
    fn design_is_feasible_for_every_input_action(seed in any::<u64>(), d in 2usize..6, n in 3usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actions: Vec<Vector> = (0..n)
            .map(|_| sample_unit_ball(d, &mut rng))
            .collect();
        let target = 2.0 * d as f64;
        let design = g_optimal_design(&actions, support_cap(d), target).unwrap();
        for a in &actions {
            prop_assert!(leverage(a, &design) <= target + 1e-6);
        }
        prop_assert!(design.support_len() <= support_cap(d));
    }
}
