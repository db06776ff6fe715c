use faer::Mat;
use lrcluster::linalg::{self, c, CMat, C64};
use lrcluster::model::{self, embed, LatticeSpec, LindbladModel, Region, TermKind};
use lrcluster::superop::{self, DenseOperator, Direction, Liouvillian};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// L†(X) = i[H, X] + Σ (L† X L − ½{L†L, X}) from fully embedded matrices.
fn oracle_adjoint(m: &LindbladModel, x: &CMat) -> CMat {
    let n = m.num_sites();
    let h = m.hamiltonian_matrix();
    let hx = linalg::matmul(&h, x);
    let xh = linalg::matmul(x, &h);
    let mut out = linalg::scale(&linalg::sub(&hx, &xh), C64::new(0.0, 1.0));
    for t in m.terms.iter().filter(|t| t.kind == TermKind::Jump) {
        let l = embed(&t.scaled_matrix(), &t.support, n);
        let ld = linalg::dagger(&l);
        let k = linalg::matmul(&ld, &l);
        let sandwich = linalg::matmul(&linalg::matmul(&ld, x), &l);
        let anti = linalg::add(&linalg::matmul(&k, x), &linalg::matmul(x, &k));
        out = linalg::add(&out, &linalg::sub(&sandwich, &linalg::scale(&anti, c(0.5))));
    }
    out
}

fn oracle_forward(m: &LindbladModel, rho: &CMat) -> CMat {
    let n = m.num_sites();
    let h = m.hamiltonian_matrix();
    let comm = linalg::sub(&linalg::matmul(&h, rho), &linalg::matmul(rho, &h));
    let mut out = linalg::scale(&comm, C64::new(0.0, -1.0));
    for t in m.terms.iter().filter(|t| t.kind == TermKind::Jump) {
        let l = embed(&t.scaled_matrix(), &t.support, n);
        let ld = linalg::dagger(&l);
        let k = linalg::matmul(&ld, &l);
        let sandwich = linalg::matmul(&linalg::matmul(&l, rho), &ld);
        let anti = linalg::add(&linalg::matmul(&k, rho), &linalg::matmul(rho, &k));
        out = linalg::add(&out, &linalg::sub(&sandwich, &linalg::scale(&anti, c(0.5))));
    }
    out
}

fn random_model(seed: u64, max_n: usize) -> LindbladModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_n);
    let alpha = rng.random_range(1.2..5.0);
    model::random_model(&LatticeSpec::chain(n), alpha, &mut rng).unwrap()
}

#[test]
fn kernel_matches_embedded_oracle() {
    for seed in 0..20 {
        let m = random_model(seed, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let x = linalg::random_matrix(m.hilbert_dim(), &mut rng);
        let op = DenseOperator::new(x.clone()).unwrap();
        let adj = superop::apply_adjoint(&m, &op).unwrap();
        let fwd = superop::apply_forward(&m, &op).unwrap();
        let scale = linalg::max_abs(&x).max(1.0);
        assert!(linalg::max_abs_diff(&adj.matrix, &oracle_adjoint(&m, &x)) < 1e-12 * scale * 10.0);
        assert!(linalg::max_abs_diff(&fwd.matrix, &oracle_forward(&m, &x)) < 1e-12 * scale * 10.0);
    }
}

#[test]
fn termwise_equals_materialized_on_full_basis() {
    for seed in 0..4 {
        let m = random_model(50 + seed, 3);
        let d = m.hilbert_dim();
        for dir in [Direction::Adjoint, Direction::Forward] {
            let sm = superop::materialize(&m, dir).unwrap();
            let gen = Liouvillian::new(&m);
            for a in 0..d {
                for b in 0..d {
                    let e = Mat::from_fn(d, d, |i, j| if (i, j) == (a, b) { c(1.0) } else { C64::new(0.0, 0.0) });
                    let op = DenseOperator::new(e.clone()).unwrap();
                    let y = gen.apply(dir, &op).unwrap();
                    assert!(linalg::max_abs_diff(&y.matrix, &sm.apply(&e)) < 1e-13);
                }
            }
        }
    }
}

#[test]
fn hermiticity_preserved_for_random_inputs() {
    for k in 0..100 {
        let m = random_model(200 + k, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(300 + k);
        let h = linalg::random_hermitian(m.hilbert_dim(), &mut rng);
        let op = DenseOperator::new(h.clone()).unwrap();
        let scale = linalg::max_abs(&h).max(1.0);
        for y in [superop::apply_adjoint(&m, &op).unwrap(), superop::apply_forward(&m, &op).unwrap()] {
            assert!(linalg::hermiticity_defect(&y.matrix) <= 1e-12 * scale);
        }
    }
}

#[test]
fn linearity() {
    let m = random_model(7, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let d = m.hilbert_dim();
    let x = linalg::random_matrix(d, &mut rng);
    let y = linalg::random_matrix(d, &mut rng);
    let a = C64::new(0.3, -1.2);
    let combo = linalg::add(&linalg::scale(&x, a), &y);
    for dir in [Direction::Adjoint, Direction::Forward] {
        let gen = Liouvillian::new(&m);
        let lx = gen.apply(dir, &DenseOperator::new(x.clone()).unwrap()).unwrap().matrix;
        let ly = gen.apply(dir, &DenseOperator::new(y.clone()).unwrap()).unwrap().matrix;
        let lc = gen.apply(dir, &DenseOperator::new(combo.clone()).unwrap()).unwrap().matrix;
        let expect = linalg::add(&linalg::scale(&lx, a), &ly);
        assert!(linalg::max_abs_diff(&lc, &expect) < 1e-11);
    }
}

#[test]
fn support_hint_never_changes_numerics() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for seed in 0..10 {
        let m = random_model(400 + seed, 5);
        let n = m.num_sites();
        let site = rng.random_range(0..n);
        let local = linalg::random_hermitian(2, &mut rng);
        let base = DenseOperator::local(&local, &[site], n).unwrap();
        let extra: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.4)).collect();
        let hinted = DenseOperator::with_hint(base.matrix.clone(), Region::single(site).union_sites(&extra));
        let full = DenseOperator::with_hint(base.matrix.clone(), Region::full(n));
        let a = superop::apply_adjoint(&m, &hinted).unwrap();
        let b = superop::apply_adjoint(&m, &full).unwrap();
        assert!(linalg::max_abs_diff(&a.matrix, &b.matrix) < 1e-13);
    }
}

#[test]
fn partial_trace_of_product_is_factor() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = linalg::random_density(2, &mut rng);
    let b = linalg::random_density(2, &mut rng);
    let cc = linalg::random_density(2, &mut rng);
    let rho = linalg::kron_all(&[a.clone(), b.clone(), cc.clone()]);
    assert!(linalg::max_abs_diff(&superop::partial_trace(&rho, &[1]).unwrap(), &b) < 1e-14);
    let ac = linalg::kron(&a, &cc);
    assert!(linalg::max_abs_diff(&superop::partial_trace(&rho, &[0, 2]).unwrap(), &ac) < 1e-14);
}
