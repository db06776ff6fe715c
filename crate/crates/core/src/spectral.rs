//! Spectral analysis of the Liouvillian.
//!
//! The forward generator is assembled sparsely and split into the connected
//! components of its coupling graph; each block is diagonalized densely and
//! its left eigenvectors are taken from the inverse of the right ones, which
//! makes the pair biorthonormal by construction.

use std::sync::OnceLock;

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::model::LindbladModel;
use crate::superop::{self, DenseOperator, Direction, Liouvillian, SparseSuperop, DEFAULT_DENSE_CAP};

/// Eigenvalues with modulus below this are treated as zero.
pub const NULL_TOL: f64 = 1e-10;
/// Residual threshold for s-reversibility.
pub const REVERSIBLE_TOL: f64 = 1e-8;
/// Smallest steady-state eigenvalue accepted as full rank.
pub const FULL_RANK_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are grouped when pairing left and right vectors.
const CLUSTER_TOL: f64 = 1e-9;
/// Left-vector residual above which the inverse is replaced by an adjoint solve.
const LEFT_RESIDUAL_FALLBACK: f64 = 1e-8;

#[derive(Clone, Debug)]
struct Block {
    indices: Vec<usize>,
    sub: CMat,
    values: Vec<C64>,
    right: CMat,
    /// Row i is the conjugate of the left eigenvector for `values[i]`.
    left: CMat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReversibilityCheck {
    pub s: f64,
    pub residual: f64,
    pub reversible: bool,
}

#[derive(Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<C64>,
    pub steady_state: DenseOperator,
    pub gap: f64,
    pub primitive: bool,
    pub null_dim: usize,
    dim: usize,
    blocks: Vec<Block>,
    order: Vec<(usize, usize)>,
    generator: SparseSuperop,
    half_reversibility: OnceLock<std::result::Result<ReversibilityCheck, String>>,
}

pub fn analyze(model: &LindbladModel) -> Result<SpectralData> {
    analyze_with_cap(model, DEFAULT_DENSE_CAP)
}

pub fn analyze_with_cap(model: &LindbladModel, cap: usize) -> Result<SpectralData> {
    let d = model.hilbert_dim();
    if d * d > cap {
        return Err(Error::TooLargeForDense { dim: d * d, cap });
    }
    let generator = Liouvillian::new(model).sparse_forward();
    let blocks = generator
        .blocks()
        .into_iter()
        .map(|idx| solve_block(&generator, idx))
        .collect::<Result<Vec<_>>>()?;

    let mut order: Vec<(usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, blk)| (0..blk.values.len()).map(move |k| (b, k)))
        .collect();
    order.sort_by(|&(b1, k1), &(b2, k2)| {
        let (x, y) = (blocks[b1].values[k1], blocks[b2].values[k2]);
        x.re.abs()
            .total_cmp(&y.re.abs())
            .then(x.im.total_cmp(&y.im))
            .then((b1, k1).cmp(&(b2, k2)))
    });
    let eigenvalues: Vec<C64> = order.iter().map(|&(b, k)| blocks[b].values[k]).collect();
    let null_dim = eigenvalues.iter().filter(|z| z.norm() < NULL_TOL).count();
    let gap = eigenvalues
        .iter()
        .filter(|z| z.norm() >= NULL_TOL)
        .map(|z| z.re.abs())
        .fold(f64::INFINITY, f64::min);
    let gap = if gap.is_finite() { gap } else { 0.0 };

    let mut data = SpectralData {
        eigenvalues,
        steady_state: DenseOperator::identity(model.num_sites()),
        gap,
        primitive: null_dim == 1,
        null_dim,
        dim: d,
        blocks,
        order,
        generator,
        half_reversibility: OnceLock::new(),
    };
    data.fix_steady_state()?;
    Ok(data)
}

fn solve_block(gen: &SparseSuperop, indices: Vec<usize>) -> Result<Block> {
    let m = indices.len();
    let pos: std::collections::HashMap<usize, usize> = indices.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let mut sub = Mat::zeros(m, m);
    for &(r, c, v) in &gen.entries {
        if let (Some(&pr), Some(&pc)) = (pos.get(&r), pos.get(&c)) {
            sub[(pr, pc)] = v;
        }
    }
    let (values, right) = eig(&sub)?;
    let left = right.partial_piv_lu().inverse();
    let mut block = Block {
        indices,
        sub,
        values,
        right,
        left,
    };
    if block.left_residual() > LEFT_RESIDUAL_FALLBACK {
        block.left = paired_left(&block)?;
    }
    Ok(block)
}

fn eig(a: &CMat) -> Result<(Vec<C64>, CMat)> {
    let e = a.eigen().map_err(|e| Error::LinAlg(format!("{e:?}")))?;
    let s = e.S().column_vector();
    let values = (0..a.nrows()).map(|i| s[i]).collect();
    Ok((values, e.U().to_owned()))
}

/// Left vectors from an eigensolve of the adjoint block, matched to the right
/// vectors by eigenvalue and biorthonormalized within each cluster.
fn paired_left(block: &Block) -> Result<CMat> {
    let m = block.values.len();
    let (adj_values, u) = eig(&linalg::dagger(&block.sub))?;
    let mut used = vec![false; m];
    let mut assigned = vec![0usize; m];
    for i in 0..m {
        let target = block.values[i].conj();
        let j = (0..m)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| (adj_values[a] - target).norm().total_cmp(&(adj_values[b] - target).norm()))
            .expect("same size");
        used[j] = true;
        assigned[i] = j;
    }
    let mut left = Mat::zeros(m, m);
    let mut done = vec![false; m];
    for i in 0..m {
        if done[i] {
            continue;
        }
        let cluster: Vec<usize> = (0..m)
            .filter(|&k| !done[k] && (block.values[k] - block.values[i]).norm() < CLUSTER_TOL)
            .collect();
        let c = cluster.len();
        // Gram matrix G = U_c^H V_c; left block L_c = U_c G^{-H}.
        let g = Mat::from_fn(c, c, |p, q| {
            (0..m)
                .map(|row| u[(row, assigned[cluster[p]])].conj() * block.right[(row, cluster[q])])
                .sum::<C64>()
        });
        let g_inv_h = linalg::dagger(&g.partial_piv_lu().inverse());
        for (q, &k) in cluster.iter().enumerate() {
            for row in 0..m {
                let mut acc = ZERO;
                for (p, &kp) in cluster.iter().enumerate() {
                    acc += u[(row, assigned[kp])] * g_inv_h[(p, q)];
                }
                // Stored conjugated, as a row.
                left[(k, row)] = acc.conj();
            }
            done[k] = true;
        }
    }
    Ok(left)
}

impl Block {
    fn left_residual(&self) -> f64 {
        let m = self.values.len();
        let wm = &self.left * &self.sub;
        let mut worst = 0.0f64;
        for i in 0..m {
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for j in 0..m {
                num += (wm[(i, j)] - self.values[i] * self.left[(i, j)]).norm_sqr();
                den += self.left[(i, j)].norm_sqr();
            }
            worst = worst.max((num / den.max(1e-300)).sqrt());
        }
        worst
    }
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generator(&self) -> &SparseSuperop {
        &self.generator
    }

    pub fn right_vec(&self, i: usize) -> Vec<C64> {
        let (b, k) = self.order[i];
        let blk = &self.blocks[b];
        let mut v = vec![ZERO; self.dim * self.dim];
        for (p, &idx) in blk.indices.iter().enumerate() {
            v[idx] = blk.right[(p, k)];
        }
        v
    }

    pub fn left_vec(&self, i: usize) -> Vec<C64> {
        let (b, k) = self.order[i];
        let blk = &self.blocks[b];
        let mut v = vec![ZERO; self.dim * self.dim];
        for (p, &idx) in blk.indices.iter().enumerate() {
            v[idx] = blk.left[(k, p)].conj();
        }
        v
    }

    pub fn right_op(&self, i: usize) -> CMat {
        superop::unvectorize(&self.right_vec(i), self.dim)
    }

    pub fn left_op(&self, i: usize) -> CMat {
        superop::unvectorize(&self.left_vec(i), self.dim)
    }

    /// Relative residuals ‖L r − λ r‖/‖r‖ and ‖L† l − λ* l‖/‖l‖ for eigenpair i.
    pub fn residuals(&self, i: usize) -> (f64, f64) {
        let (b, k) = self.order[i];
        let blk = &self.blocks[b];
        let m = blk.indices.len();
        let lam = blk.values[k];
        let (mut rn, mut rd, mut ln, mut ld) = (0.0, 0.0, 0.0, 0.0);
        for row in 0..m {
            let mut acc = ZERO;
            let mut accl = ZERO;
            for col in 0..m {
                acc += blk.sub[(row, col)] * blk.right[(col, k)];
                accl += blk.left[(k, col)] * blk.sub[(col, row)];
            }
            rn += (acc - lam * blk.right[(row, k)]).norm_sqr();
            rd += blk.right[(row, k)].norm_sqr();
            ln += (accl - lam * blk.left[(k, row)]).norm_sqr();
            ld += blk.left[(k, row)].norm_sqr();
        }
        ((rn / rd).sqrt(), (ln / f64::max(ld, 1e-300)).sqrt())
    }

    pub fn max_residual(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.residuals(i);
                a.max(b)
            })
            .fold(0.0, f64::max)
    }

    /// max |Tr[l_i† r_j] − δ_ij| over all pairs.
    pub fn biorthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for blk in &self.blocks {
            let p = &blk.left * &blk.right;
            for i in 0..p.nrows() {
                for j in 0..p.ncols() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((p[(i, j)] - want).norm());
                }
            }
        }
        // Vectors in different blocks have disjoint supports.
        worst
    }

    pub fn max_imag(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Propagates a vectorized operator by e^{Lt} or e^{L†t} through the eigenexpansion.
    pub fn propagate_vec(&self, dir: Direction, x: &[C64], t: f64) -> Vec<C64> {
        let mut y = vec![ZERO; x.len()];
        for blk in &self.blocks {
            let m = blk.indices.len();
            let xb: Vec<C64> = blk.indices.iter().map(|&i| x[i]).collect();
            let yb: Vec<C64> = match dir {
                Direction::Forward => {
                    let coef: Vec<C64> = (0..m)
                        .map(|k| (blk.values[k] * t).exp() * (0..m).map(|p| blk.left[(k, p)] * xb[p]).sum::<C64>())
                        .collect();
                    (0..m).map(|p| (0..m).map(|k| blk.right[(p, k)] * coef[k]).sum()).collect()
                }
                Direction::Adjoint => {
                    let coef: Vec<C64> = (0..m)
                        .map(|k| {
                            (blk.values[k].conj() * t).exp()
                                * (0..m).map(|p| blk.right[(p, k)].conj() * xb[p]).sum::<C64>()
                        })
                        .collect();
                    (0..m)
                        .map(|p| (0..m).map(|k| blk.left[(k, p)].conj() * coef[k]).sum())
                        .collect()
                }
            };
            for (p, &i) in blk.indices.iter().enumerate() {
                y[i] = yb[p];
            }
        }
        y
    }

    pub fn propagate(&self, dir: Direction, op: &CMat, t: f64) -> CMat {
        superop::unvectorize(&self.propagate_vec(dir, &superop::vectorize(op), t), self.dim)
    }

    /// Smallest eigenvalue of σ.
    pub fn steady_state_min_eig(&self) -> f64 {
        linalg::hermitian_eigvals(&self.steady_state.matrix)
            .map(|v| v.into_iter().fold(f64::INFINITY, f64::min))
            .unwrap_or(0.0)
    }

    /// Cached s = 1/2 reversibility check against this model's generator.
    pub fn half_reversibility(&self) -> Result<ReversibilityCheck> {
        self.half_reversibility
            .get_or_init(|| check_reversibility_inner(self, 0.5).map_err(|e| e.to_string()))
            .clone()
            .map_err(|msg| {
                if msg.starts_with("steady state is singular") {
                    Error::SingularSteadyState(self.steady_state_min_eig())
                } else {
                    Error::LinAlg(msg)
                }
            })
    }

    /// Rows (Re λ, Im λ, residual) in sorted order.
    pub fn spectrum_rows(&self) -> Vec<(f64, f64, f64)> {
        (0..self.len())
            .map(|i| {
                let (a, b) = self.residuals(i);
                (self.eigenvalues[i].re, self.eigenvalues[i].im, a.max(b))
            })
            .collect()
    }

    fn fix_steady_state(&mut self) -> Result<()> {
        let null: Vec<usize> = (0..self.len()).filter(|&i| self.eigenvalues[i].norm() < NULL_TOL).collect();
        let candidates = if null.is_empty() { vec![0] } else { null };
        let best = candidates
            .iter()
            .copied()
            .max_by(|&a, &b| {
                let ta = linalg::trace(&self.right_op(a)).norm();
                let tb = linalg::trace(&self.right_op(b)).norm();
                ta.total_cmp(&tb).then(b.cmp(&a))
            })
            .ok_or_else(|| Error::LinAlg("empty spectrum".into()))?;
        let r = self.right_op(best);
        let tr = linalg::trace(&r);
        if tr.norm() < 1e-14 {
            return Err(Error::LinAlg("null eigenvector has zero trace".into()));
        }
        let c = tr.inv();
        let (b, k) = self.order[best];
        let blk = &mut self.blocks[b];
        for p in 0..blk.indices.len() {
            blk.right[(p, k)] *= c;
            blk.left[(k, p)] /= c;
        }
        let sigma = linalg::hermitian_part(&linalg::scale(&r, c));
        let (vals, vecs) = linalg::hermitian_eig(&sigma)?;
        let clipped: Vec<f64> = vals.iter().map(|&v| if (-1e-12..0.0).contains(&v) { 0.0 } else { v }).collect();
        let d = self.dim;
        let mut s = Mat::from_fn(d, d, |i, j| {
            (0..d)
                .map(|k| vecs[(i, k)] * vecs[(j, k)].conj() * clipped[k])
                .sum::<C64>()
        });
        let t = linalg::trace(&s).re;
        s = linalg::scale(&s, linalg::c(1.0 / t));
        self.steady_state = DenseOperator::new(s)?;
        Ok(())
    }
}

/// ‖Γ_s ∘ L† − L ∘ Γ_s‖ as the largest Frobenius image of a matrix unit.
pub fn check_s_reversibility(model: &LindbladModel, sdata: &SpectralData, s: f64) -> Result<ReversibilityCheck> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParameter(format!("s must lie in [0, 1], got {s}")));
    }
    if model.hilbert_dim() != sdata.dim {
        return Err(Error::DimensionMismatch {
            expected: sdata.dim,
            got: model.hilbert_dim(),
        });
    }
    if s == 0.5 {
        return sdata.half_reversibility();
    }
    check_reversibility_inner(sdata, s)
}

fn check_reversibility_inner(sdata: &SpectralData, s: f64) -> Result<ReversibilityCheck> {
    let sigma = &sdata.steady_state.matrix;
    let min_eig = sdata.steady_state_min_eig();
    if min_eig <= FULL_RANK_TOL {
        return Err(Error::SingularSteadyState(min_eig));
    }
    let d = sdata.dim;
    let off_diag = (0..d)
        .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| sigma[(i, j)].norm())
        .fold(0.0, f64::max);
    let residual = if off_diag < 1e-14 {
        diagonal_residual(sdata, s)
    } else {
        general_residual(sdata, s)?
    };
    Ok(ReversibilityCheck {
        s,
        residual,
        reversible: residual <= REVERSIBLE_TOL,
    })
}

/// With σ diagonal, Γ_s is diagonal on matrix units: R = diag(g) M^H − M diag(g).
fn diagonal_residual(sdata: &SpectralData, s: f64) -> f64 {
    let d = sdata.dim;
    let p: Vec<f64> = (0..d).map(|i| sdata.steady_state.matrix[(i, i)].re).collect();
    let g = |idx: usize| {
        let (a, b) = (p[idx % d], p[idx / d]);
        0.5 * (a.powf(s) * b.powf(1.0 - s) + a.powf(1.0 - s) * b.powf(s))
    };
    let mut r: std::collections::HashMap<(usize, usize), C64> = Default::default();
    for &(i, j, v) in &sdata.generator.entries {
        *r.entry((i, j)).or_insert(ZERO) -= v * g(j);
        *r.entry((j, i)).or_insert(ZERO) += v.conj() * g(j);
    }
    let mut cols = vec![0.0f64; d * d];
    for ((_, j), v) in r {
        cols[j] += v.norm_sqr();
    }
    cols.into_iter().fold(0.0f64, f64::max).sqrt()
}

fn general_residual(sdata: &SpectralData, s: f64) -> Result<f64> {
    let sigma = &sdata.steady_state.matrix;
    let a = linalg::hermitian_fn(sigma, |x| x.max(0.0).powf(s))?;
    let b = linalg::hermitian_fn(sigma, |x| x.max(0.0).powf(1.0 - s))?;
    let gamma = |f: &CMat| {
        let x = linalg::matmul(&linalg::matmul(&a, f), &b);
        let y = linalg::matmul(&linalg::matmul(&b, f), &a);
        linalg::scale(&linalg::add(&x, &y), linalg::c(0.5))
    };
    let fwd = &sdata.generator;
    let adj = fwd.adjoint();
    let d = sdata.dim;
    let mut worst = 0.0f64;
    for idx in 0..d * d {
        let mut e = vec![ZERO; d * d];
        e[idx] = linalg::c(1.0);
        let lhs = gamma(&superop::unvectorize(&adj.matvec(&e), d));
        let ge = superop::vectorize(&gamma(&superop::unvectorize(&e, d)));
        let rhs = superop::unvectorize(&fwd.matvec(&ge), d);
        worst = worst.max(linalg::frobenius(&linalg::sub(&lhs, &rhs)));
    }
    Ok(worst)
}

/// Var[f] = Tr[f² σ] − Tr[f σ]².
pub fn variance(sdata: &SpectralData, f: &CMat) -> f64 {
    covariance(&sdata.steady_state.matrix, f, f)
}

/// Cov_σ(f, g) = ½ Tr[(fg + gf) σ] − Tr[f σ] Tr[g σ].
pub fn covariance(sigma: &CMat, f: &CMat, g: &CMat) -> f64 {
    let fg = linalg::matmul(f, g);
    let gf = linalg::matmul(g, f);
    let sym = linalg::trace_prod(&linalg::add(&fg, &gf), sigma) * 0.5;
    (sym - linalg::trace_prod(f, sigma) * linalg::trace_prod(g, sigma)).re
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub worst_ratio: f64,
    /// Set when the check is vacuous (zero variance or zero norm).
    pub skipped: bool,
}

fn require_reversible_primitive(model: &LindbladModel, sdata: &SpectralData) -> Result<()> {
    if !sdata.primitive {
        return Err(Error::NonPrimitive(sdata.null_dim));
    }
    let rev = check_s_reversibility(model, sdata, 0.5)?;
    if !rev.reversible {
        return Err(Error::NotReversible(rev.residual));
    }
    Ok(())
}

/// max over the grid of Var[f_t] e^{2λt} / Var[f].
pub fn check_variance_decay(model: &LindbladModel, sdata: &SpectralData, f: &CMat, grid: &[f64]) -> Result<DecayCheck> {
    require_reversible_primitive(model, sdata)?;
    let v0 = variance(sdata, f);
    if v0.abs() < 1e-300 || v0 <= 1e-14 * linalg::max_abs(f).powi(2) {
        return Ok(DecayCheck {
            worst_ratio: 0.0,
            skipped: true,
        });
    }
    let worst_ratio = grid
        .iter()
        .map(|&t| {
            let ft = sdata.propagate(Direction::Adjoint, f, t);
            variance(sdata, &ft) * (2.0 * sdata.gap * t).exp() / v0
        })
        .fold(0.0, f64::max);
    Ok(DecayCheck {
        worst_ratio,
        skipped: false,
    })
}

/// max over the grid of |Cov_σ(f_t, g_t)| / (4‖f‖‖g‖e^{−2λt}).
pub fn check_covariance_decay(
    model: &LindbladModel,
    sdata: &SpectralData,
    f: &CMat,
    g: &CMat,
    grid: &[f64],
) -> Result<DecayCheck> {
    require_reversible_primitive(model, sdata)?;
    let scale = 4.0 * linalg::op_norm(f) * linalg::op_norm(g);
    if scale == 0.0 {
        return Ok(DecayCheck {
            worst_ratio: 0.0,
            skipped: true,
        });
    }
    let sigma = &sdata.steady_state.matrix;
    let worst_ratio = grid
        .iter()
        .map(|&t| {
            let ft = sdata.propagate(Direction::Adjoint, f, t);
            let gt = sdata.propagate(Direction::Adjoint, g, t);
            covariance(sigma, &ft, &gt).abs() / (scale * (-2.0 * sdata.gap * t).exp())
        })
        .fold(0.0, f64::max);
    Ok(DecayCheck {
        worst_ratio,
        skipped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_davies, build_davies_thermal, build_xy_damped, gibbs_state, ising_energies, DaviesParams, LatticeSpec, LocalTerm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn damped_qubit(g: f64) -> LindbladModel {
        LindbladModel::new(
            LatticeSpec::chain(1),
            vec![LocalTerm::jump(vec![0], linalg::sigma_minus(), g.sqrt())],
            3.0,
            "damped",
        )
        .unwrap()
    }

    #[test]
    fn amplitude_damping_spectrum() {
        let g = 0.5;
        let sd = analyze(&damped_qubit(g)).unwrap();
        let re: Vec<f64> = sd.eigenvalues.iter().map(|z| z.re).collect();
        assert!(re[0].abs() < 1e-14);
        assert!((re[1] + g / 2.0).abs() < 1e-12 && (re[2] + g / 2.0).abs() < 1e-12);
        assert!((re[3] + g).abs() < 1e-12);
        assert!((sd.gap - g / 2.0).abs() < 1e-12);
        assert!(sd.primitive);
        let ground = linalg::projector(&[linalg::c(1.0), ZERO]);
        assert!(linalg::max_abs_diff(&sd.steady_state.matrix, &ground) < 1e-12);
        assert!(sd.biorthonormality_defect() < 1e-12);
    }

    #[test]
    fn dephasing_is_not_primitive() {
        let m = LindbladModel::new(
            LatticeSpec::chain(1),
            vec![LocalTerm::jump(vec![0], linalg::pauli('Z').unwrap(), 0.5)],
            3.0,
            "deph",
        )
        .unwrap();
        let sd = analyze(&m).unwrap();
        assert!(!sd.primitive);
        assert_eq!(sd.null_dim, 2);
    }

    #[test]
    fn davies_steady_state_is_gibbs() {
        let l = LatticeSpec::chain(4);
        let m = build_davies_thermal(&l, 3.0, 1.0, 0.9, 1.0).unwrap();
        let sd = analyze(&m).unwrap();
        let g = gibbs_state(&ising_energies(&l, 3.0, 1.0, 0.0), 0.9);
        assert!(linalg::trace_norm(&linalg::sub(&sd.steady_state.matrix, &g)) < 1e-8);
        assert!(sd.primitive);
        assert!(sd.max_imag() < 1e-8);
        assert!(sd.biorthonormality_defect() < 1e-8);
        assert!(sd.max_residual() < 1e-8);
        let rev = check_s_reversibility(&m, &sd, 0.5).unwrap();
        assert!(rev.reversible, "{rev:?}");
    }

    #[test]
    fn single_qubit_thermal_populations() {
        let (w, beta) = (0.7, 1.4);
        let m = build_davies(
            &LatticeSpec::chain(1),
            &DaviesParams {
                alpha: 3.0,
                ising_scale: 0.0,
                beta_t: beta,
                base_rate: 1.0,
                field: w,
                two_site: true,
            },
        )
        .unwrap();
        let sd = analyze(&m).unwrap();
        let p = &sd.steady_state.matrix;
        assert!((p[(1, 1)].re / p[(0, 0)].re - (-beta * w).exp()).abs() < 1e-12);
    }

    #[test]
    fn infinite_temperature_is_maximally_mixed() {
        let m = build_davies_thermal(&LatticeSpec::chain(3), 3.0, 1.0, 0.0, 1.0).unwrap();
        let sd = analyze(&m).unwrap();
        let mixed = linalg::scale(&linalg::identity(8), linalg::c(1.0 / 8.0));
        assert!(linalg::max_abs_diff(&sd.steady_state.matrix, &mixed) < 1e-12);
    }

    #[test]
    fn xy_damping_has_singular_steady_state() {
        let m = build_xy_damped(&LatticeSpec::chain(3), 3.0, 0.25, 0.2).unwrap();
        let sd = analyze(&m).unwrap();
        assert!(matches!(
            check_s_reversibility(&m, &sd, 0.5),
            Err(Error::SingularSteadyState(_))
        ));
    }

    #[test]
    fn gamma_of_identity_is_sigma() {
        // Γ_s(𝕀) = σ: with the diagonal path, g_aa = σ_a.
        let m = build_davies_thermal(&LatticeSpec::chain(2), 3.0, 1.0, 0.5, 1.0).unwrap();
        let sd = analyze(&m).unwrap();
        for s in [0.0, 0.3, 0.5, 1.0] {
            let d = 4;
            for a in 0..d {
                let p = sd.steady_state.matrix[(a, a)].re;
                let g = 0.5 * (p.powf(s) * p.powf(1.0 - s) * 2.0);
                assert!((g - p).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn general_and_diagonal_residuals_agree() {
        let m = build_davies_thermal(&LatticeSpec::chain(2), 3.0, 1.0, 0.5, 1.0).unwrap();
        let sd = analyze(&m).unwrap();
        for s in [0.25, 0.5] {
            let a = diagonal_residual(&sd, s);
            let b = general_residual(&sd, s).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn slowest_mode_saturates_variance_bound() {
        let m = build_davies_thermal(&LatticeSpec::chain(3), 3.0, 1.0, 0.7, 1.0).unwrap();
        let sd = analyze(&m).unwrap();
        let i1 = (0..sd.len())
            .find(|&i| sd.eigenvalues[i].norm() >= NULL_TOL)
            .unwrap();
        let f = linalg::hermitian_part(&sd.left_op(i1));
        let chk = check_variance_decay(&m, &sd, &f, &[0.5, 1.0, 4.0]).unwrap();
        assert!((chk.worst_ratio - 1.0).abs() < 1e-6, "{chk:?}");
    }

    #[test]
    fn random_variances_decay() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = build_davies_thermal(&LatticeSpec::chain(3), 3.0, 1.0, 0.7, 1.0).unwrap();
        let sd = analyze(&m).unwrap();
        let grid: Vec<f64> = (0..8).map(|k| 0.5 * 2f64.powi(k)).collect();
        for _ in 0..10 {
            let f = linalg::random_hermitian(8, &mut rng);
            let g = linalg::random_hermitian(8, &mut rng);
            assert!(check_variance_decay(&m, &sd, &f, &grid).unwrap().worst_ratio <= 1.0 + 1e-6);
            assert!(check_covariance_decay(&m, &sd, &f, &g, &grid).unwrap().worst_ratio <= 1.0 + 1e-6);
        }
        let id = linalg::identity(8);
        assert!(check_variance_decay(&m, &sd, &id, &grid).unwrap().skipped);
    }

    #[test]
    fn propagation_matches_expm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = build_xy_damped(&LatticeSpec::chain(2), 3.0, 0.25, 0.3).unwrap();
        let sd = analyze(&m).unwrap();
        let o = linalg::random_matrix(4, &mut rng);
        for dir in [Direction::Forward, Direction::Adjoint] {
            let want = crate::dynamics::evolve_dense_oracle(&m, &o, &[1.7], dir).unwrap();
            assert!(linalg::max_abs_diff(&sd.propagate(dir, &o, 1.7), &want[0]) < 1e-10);
        }
    }
}
