use lrcluster::dynamics::{self, DEFAULT_TOL};
use lrcluster::linalg;
use lrcluster::model::{self, build_xy_damped, LatticeSpec, Region};
use lrcluster::superop::{DenseOperator, Direction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn measured_curves_match_dense_exponential() {
    let m = build_xy_damped(&LatticeSpec::chain(4), 3.0, 0.25, 0.1).unwrap();
    let grid = dynamics::default_time_grid(5);
    let a = DenseOperator::pauli_string(&[(0, 'X')], 4).unwrap();
    let b = DenseOperator::pauli_string(&[(2, 'Z')], 4).unwrap();
    let tol = 1e-10;
    let at = dynamics::evolve_dense_oracle(&m, &a.matrix, &grid, Direction::Adjoint).unwrap();
    let bt = dynamics::evolve_dense_oracle(&m, &b.matrix, &grid, Direction::Adjoint).unwrap();
    let ab = linalg::matmul(&a.matrix, &b.matrix);
    let abt = dynamics::evolve_dense_oracle(&m, &ab, &grid, Direction::Adjoint).unwrap();

    let comm = dynamics::measure_commutator_lightcone(&m, &a, &b, &grid, tol).unwrap();
    let joint = dynamics::measure_joint_vs_separate(&m, &a, &b, &grid, tol).unwrap();
    for k in 0..grid.len() {
        let c_oracle = dynamics::commutator_norm(&b.matrix, &at[k]);
        assert!((comm.values[k] - c_oracle).abs() < 1e-8);
        let j_oracle = linalg::op_norm(&linalg::sub(&abt[k], &linalg::matmul(&at[k], &bt[k])));
        assert!((joint.values[k] - j_oracle).abs() < 1e-8);
    }

    let x = Region::single(0);
    let trunc = dynamics::measure_truncation_error(&m, &a, &x, 1.0, &grid, tol).unwrap();
    let tm = model::truncate_to_ball(&m, &x, 1.0);
    let tt = dynamics::evolve_dense_oracle(&tm, &a.matrix, &grid, Direction::Adjoint).unwrap();
    for k in 0..grid.len() {
        let oracle = linalg::op_norm(&linalg::sub(&at[k], &tt[k]));
        assert!((trunc.values[k] - oracle).abs() < 1e-8);
    }
}

#[test]
fn halving_tolerance_moves_norms_by_less_than_ten_tol() {
    let m = build_xy_damped(&LatticeSpec::chain(5), 2.5, 0.25, 0.1).unwrap();
    let grid = dynamics::default_time_grid(7);
    let a = DenseOperator::pauli_string(&[(0, 'X')], 5).unwrap();
    let b = DenseOperator::pauli_string(&[(3, 'Z')], 5).unwrap();
    let c1 = dynamics::measure_commutator_lightcone(&m, &a, &b, &grid, DEFAULT_TOL).unwrap();
    let c2 = dynamics::measure_commutator_lightcone(&m, &a, &b, &grid, DEFAULT_TOL / 2.0).unwrap();
    for (x, y) in c1.values.iter().zip(&c2.values) {
        assert!((x - y).abs() < 10.0 * DEFAULT_TOL, "{x} vs {y}");
    }
}

#[test]
fn forward_evolution_stays_positive() {
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=4);
        let m = model::random_model(&LatticeSpec::chain(n), 3.0, &mut rng).unwrap();
        let rho = DenseOperator::new(linalg::random_density(m.hilbert_dim(), &mut rng)).unwrap();
        let ev = dynamics::evolve_forward(&m, &rho, &dynamics::default_time_grid(6), DEFAULT_TOL).unwrap();
        for s in &ev.snapshots {
            let min = linalg::hermitian_eigvals(&s.matrix).unwrap().into_iter().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-8);
            assert!((linalg::trace(&s.matrix).re - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn grid_points_are_hit_exactly() {
    let m = build_xy_damped(&LatticeSpec::chain(3), 3.0, 0.25, 0.1).unwrap();
    let grid = [0.0, 0.3, 0.7, 1.9];
    let ev = dynamics::evolve_adjoint(&m, &DenseOperator::pauli_string(&[(1, 'Y')], 3).unwrap(), &grid, DEFAULT_TOL).unwrap();
    assert_eq!(ev.times, grid.to_vec());
    assert_eq!(ev.snapshots.len(), grid.len());
}
