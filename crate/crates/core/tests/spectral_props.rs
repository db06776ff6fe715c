use lrcluster::correlations;
use lrcluster::linalg;
use lrcluster::model::{build_davies_thermal, build_xy_damped, LatticeSpec};
use lrcluster::spectral::{self, NULL_TOL};
use lrcluster::superop::Direction;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn residuals_conjugates_and_dissipativity() {
    let m = build_xy_damped(&LatticeSpec::chain(3), 3.0, 0.25, 0.1).unwrap();
    let s = spectral::analyze(&m).unwrap();
    assert_eq!(s.len(), 64);
    assert!(s.max_residual() < 1e-9);
    assert!(s.biorthonormality_defect() < 1e-8);
    for ev in &s.eigenvalues {
        assert!(ev.re <= NULL_TOL);
        let partner = s.eigenvalues.iter().map(|w| (w - ev.conj()).norm()).fold(f64::INFINITY, f64::min);
        assert!(partner < 1e-8, "no conjugate partner for {ev}");
    }
    assert!(s.primitive);
    assert!((linalg::trace(&s.steady_state.matrix).re - 1.0).abs() < 1e-12);
}

#[test]
fn steady_state_is_gibbs_for_davies() {
    let lat = LatticeSpec::chain(3);
    let m = build_davies_thermal(&lat, 3.0, 1.0, 1.0, 1.0).unwrap();
    let s = spectral::analyze(&m).unwrap();
    let energies = lrcluster::model::ising_energies(&lat, 3.0, 1.0, 0.0);
    let gibbs = lrcluster::model::gibbs_state(&energies, 1.0);
    assert!(linalg::max_abs_diff(&s.steady_state.matrix, &gibbs) < 1e-9);
    assert!(s.max_imag() < 1e-9);
}

#[test]
fn asymptotic_decay_rate_matches_gap() {
    let m = build_davies_thermal(&LatticeSpec::chain(3), 3.0, 1.0, 1.0, 1.0).unwrap();
    let s = spectral::analyze(&m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rho0 = correlations::random_product_state(3, &mut rng);
    let grid: Vec<f64> = (0..=40).map(|k| (5.0 + 0.5 * k as f64) / s.gap).collect();
    let d = correlations::mixing_distance(&m, &s, &rho0, &grid).unwrap();
    let rate = correlations::fit_decay_rate(&grid, &d, 1e-13, 1.0).unwrap();
    assert!((rate - s.gap).abs() <= 0.05 * s.gap, "rate {rate} gap {}", s.gap);
}

#[test]
fn propagation_agrees_with_dense_exponential() {
    let m = build_xy_damped(&LatticeSpec::chain(2), 3.0, 0.25, 0.1).unwrap();
    let s = spectral::analyze(&m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let rho = linalg::random_density(4, &mut rng);
    let grid = [0.0, 0.5, 2.0, 7.0];
    let oracle = lrcluster::dynamics::evolve_dense_oracle(&m, &rho, &grid, Direction::Forward).unwrap();
    for (k, &t) in grid.iter().enumerate() {
        assert!(linalg::max_abs_diff(&s.propagate(Direction::Forward, &rho, t), &oracle[k]) < 1e-9);
    }
}

#[test]
fn reversibility_flags() {
    let dav = build_davies_thermal(&LatticeSpec::chain(3), 3.0, 1.0, 1.0, 1.0).unwrap();
    let sd = spectral::analyze(&dav).unwrap();
    assert!(sd.half_reversibility().unwrap().reversible);
    let xy = build_xy_damped(&LatticeSpec::chain(3), 3.0, 0.25, 0.1).unwrap();
    let sx = spectral::analyze(&xy).unwrap();
    // The damped steady state is pure, so the check either reports failure or refuses.
    assert!(!sx.half_reversibility().map(|c| c.reversible).unwrap_or(false));
}
