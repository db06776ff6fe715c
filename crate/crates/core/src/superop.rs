//! Operator-space algebra for Lindblad generators.
//!
//! Operators are stored column-major, which is the column-stacking
//! vectorization `vec(X)[a + D b] = X[a, b]` used for every superoperator
//! matrix in this crate. Terms are applied by contracting their local indices
//! directly; no embedded D×D term matrix is ever built.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::model::{LindbladModel, Region, TermKind};

/// Default cap on D² for dense superoperator materialization.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// Relative drop threshold when assembling sparse superoperators.
const ASSEMBLY_DROP: f64 = 1e-14;

/// A D×D operator with an advisory support annotation.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub matrix: CMat,
    pub support_hint: Region,
}

impl DenseOperator {
    /// Wraps a full matrix with a support hint covering the whole lattice.
    pub fn new(matrix: CMat) -> Result<Self> {
        let n = num_sites_of(matrix.nrows())?;
        if matrix.ncols() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        Ok(Self {
            matrix,
            support_hint: Region::full(n),
        })
    }

    pub fn with_hint(matrix: CMat, support_hint: Region) -> Self {
        Self {
            matrix,
            support_hint,
        }
    }

    pub fn identity(num_sites: usize) -> Self {
        Self::new(linalg::identity(1 << num_sites)).expect("power of two")
    }

    /// Embeds `local` acting on `support` (first site most significant).
    pub fn local(local: &CMat, support: &[usize], num_sites: usize) -> Result<Self> {
        let hint = Region::new(support.iter().copied())?;
        if hint.max_site() >= num_sites {
            return Err(Error::InvalidParameter(format!(
                "support {support:?} outside {num_sites} sites"
            )));
        }
        Ok(Self {
            matrix: crate::model::embed(local, support, num_sites),
            support_hint: hint,
        })
    }

    /// Tensor product of single-site Paulis, e.g. `[(0, 'X'), (3, 'Z')]`.
    pub fn pauli_string(factors: &[(usize, char)], num_sites: usize) -> Result<Self> {
        let mut labels = vec!['I'; num_sites];
        for &(site, p) in factors {
            if site >= num_sites {
                return Err(Error::InvalidParameter(format!("site {site} outside lattice")));
            }
            labels[site] = p;
        }
        let mats = labels
            .iter()
            .map(|&p| linalg::pauli(p).ok_or_else(|| Error::InvalidParameter(format!("bad Pauli label {p}"))))
            .collect::<Result<Vec<_>>>()?;
        let hint = Region::new(factors.iter().filter(|f| f.1 != 'I').map(|f| f.0))
            .unwrap_or_else(|_| Region::single(0));
        Ok(Self {
            matrix: linalg::kron_all(&mats),
            support_hint: hint,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_sites(&self) -> usize {
        num_sites_of(self.dim()).expect("validated dimension")
    }

    pub fn norms(&self) -> Norms {
        norms(&self.matrix)
    }
}

fn num_sites_of(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "operator dimension {dim} is not a power of two"
        )));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Column-major copy of a matrix, i.e. its column-stacked vectorization.
pub fn vectorize(m: &CMat) -> Vec<C64> {
    let (r, c) = (m.nrows(), m.ncols());
    let mut v = Vec::with_capacity(r * c);
    for j in 0..c {
        v.extend_from_slice(m.col_as_slice(j));
    }
    v
}

pub fn unvectorize(v: &[C64], dim: usize) -> CMat {
    Mat::from_fn(dim, dim, |i, j| v[i + dim * j])
}

/// Nonzeros of a local matrix with row/column indices spread onto the
/// global bit positions of its support.
#[derive(Clone, Debug, Default)]
struct SparseLocal {
    entries: Vec<(usize, usize, C64)>,
}

impl SparseLocal {
    fn from_local(m: &CMat, masks: &[usize]) -> Self {
        let k = masks.len();
        let spread = |idx: usize| -> usize {
            masks
                .iter()
                .enumerate()
                .filter(|(p, _)| idx >> (k - 1 - p) & 1 == 1)
                .map(|(_, m)| *m)
                .sum()
        };
        let mut entries = Vec::new();
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v != ZERO {
                    entries.push((spread(r), spread(c), v));
                }
            }
        }
        Self { entries }
    }

    fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect(),
        }
    }

    fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Iterates over all configurations with the bits of `mask` cleared.
fn rest_configs(mask: usize, dim: usize) -> impl Iterator<Item = usize> {
    let mut next = Some(0usize);
    std::iter::from_fn(move || {
        let c = next?;
        let n = ((c | mask) + 1) & !mask;
        next = if n < dim && n > c { Some(n) } else { None };
        Some(c)
    })
}

/// One term compiled for both directions. With G = -iH - K/2 for the term,
/// the forward action is G X + X G† + L X L† and the adjoint action is
/// G† X + X G + L† X L.
#[derive(Clone, Debug)]
struct CompiledTerm {
    support: Region,
    mask: usize,
    g: SparseLocal,
    g_dag: SparseLocal,
    l: SparseLocal,
    l_dag: SparseLocal,
}

/// Direction of a superoperator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Adjoint,
}

/// A model compiled for repeated application.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    num_sites: usize,
    dim: usize,
    terms: Vec<CompiledTerm>,
}

impl Liouvillian {
    pub fn new(model: &LindbladModel) -> Self {
        let n = model.num_sites();
        let terms = model
            .terms
            .iter()
            .map(|t| {
                let masks: Vec<usize> = t.support.iter().map(|&s| 1usize << (n - 1 - s)).collect();
                let mask = masks.iter().sum();
                let op = t.scaled_matrix();
                let (g, l) = match t.kind {
                    TermKind::Hamiltonian => (linalg::scale(&op, C64::new(0.0, -1.0)), None),
                    TermKind::Jump => {
                        let k = linalg::matmul(&linalg::dagger(&op), &op);
                        (linalg::scale(&k, linalg::c(-0.5)), Some(op))
                    }
                };
                let g = SparseLocal::from_local(&g, &masks);
                let l = l.map(|l| SparseLocal::from_local(&l, &masks)).unwrap_or_default();
                CompiledTerm {
                    support: Region::new(t.support.iter().copied()).expect("validated support"),
                    mask,
                    g_dag: g.adjoint(),
                    g,
                    l_dag: l.adjoint(),
                    l,
                }
            })
            .collect();
        Self {
            num_sites: n,
            dim: 1 << n,
            terms,
        }
    }

    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// y = L(x) or L†(x) on vectorized operators. When `hint` is given and the
    /// direction is adjoint, terms disjoint from it are skipped (they act as zero).
    /// Returns the union of the hint with the supports actually applied.
    pub fn apply_vec(&self, dir: Direction, x: &[C64], y: &mut [C64], hint: Option<&Region>) -> Option<Region> {
        let d = self.dim;
        assert_eq!(x.len(), d * d);
        assert_eq!(y.len(), d * d);
        y.fill(ZERO);
        let mut grown = hint.cloned();
        for t in &self.terms {
            if dir == Direction::Adjoint {
                if let Some(h) = hint {
                    if !h.overlaps(t.support.sites()) {
                        continue;
                    }
                }
            }
            let (p, s) = match dir {
                Direction::Forward => (&t.g, &t.l),
                Direction::Adjoint => (&t.g_dag, &t.l_dag),
            };
            left_mul(y, x, p, t.mask, d);
            right_mul_dag(y, x, p, t.mask, d);
            if !s.is_empty() {
                sandwich(y, x, s, t.mask, d);
            }
            if let Some(g) = grown.as_mut() {
                *g = g.union(&t.support);
            }
        }
        grown
    }

    pub fn apply(&self, dir: Direction, op: &DenseOperator) -> Result<DenseOperator> {
        if op.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: op.dim(),
            });
        }
        let x = vectorize(&op.matrix);
        let mut y = vec![ZERO; x.len()];
        let hint = match dir {
            Direction::Adjoint => self.apply_vec(dir, &x, &mut y, Some(&op.support_hint)).expect("hint given"),
            Direction::Forward => {
                self.apply_vec(dir, &x, &mut y, None);
                Region::full(self.num_sites)
            }
        };
        Ok(DenseOperator {
            matrix: unvectorize(&y, self.dim),
            support_hint: hint,
        })
    }

    /// Forward generator as a sparse D²×D² matrix.
    pub fn sparse_forward(&self) -> SparseSuperop {
        let d = self.dim;
        let mut g_full: Vec<(usize, usize, C64)> = Vec::new();
        let mut entries: Vec<(usize, usize, C64)> = Vec::new();
        for t in &self.terms {
            for c in rest_configs(t.mask, d) {
                g_full.extend(t.g.entries.iter().map(|&(r, a, v)| (c | r, c | a, v)));
            }
            if !t.l.is_empty() {
                let full: Vec<(usize, usize, C64)> = rest_configs(t.mask, d)
                    .flat_map(|c| t.l.entries.iter().map(move |&(r, a, v)| (c | r, c | a, v)))
                    .collect();
                for &(r, a, vr) in &full {
                    for &(s, b, vs) in &full {
                        entries.push((r + d * s, a + d * b, vr * vs.conj()));
                    }
                }
            }
        }
        let g_full = merge_entries(g_full, 0.0);
        for &(r, a, v) in &g_full {
            for j in 0..d {
                entries.push((r + d * j, a + d * j, v));
                entries.push((j + d * r, j + d * a, v.conj()));
            }
        }
        let scale = entries.iter().fold(0.0f64, |m, e| m.max(e.2.norm()));
        SparseSuperop {
            size: d * d,
            entries: merge_entries(entries, ASSEMBLY_DROP * scale),
        }
    }
}

fn left_mul(y: &mut [C64], x: &[C64], p: &SparseLocal, mask: usize, d: usize) {
    for j in 0..d {
        let off = j * d;
        for c in rest_configs(mask, d) {
            for &(r, a, v) in &p.entries {
                y[off + (c | r)] += v * x[off + (c | a)];
            }
        }
    }
}

fn right_mul_dag(y: &mut [C64], x: &[C64], p: &SparseLocal, mask: usize, d: usize) {
    for c in rest_configs(mask, d) {
        for &(s, b, v) in &p.entries {
            let w = v.conj();
            let ys = (c | s) * d;
            let xb = (c | b) * d;
            for i in 0..d {
                y[ys + i] += w * x[xb + i];
            }
        }
    }
}

fn sandwich(y: &mut [C64], x: &[C64], p: &SparseLocal, mask: usize, d: usize) {
    for c2 in rest_configs(mask, d) {
        for &(s, b, vq) in &p.entries {
            let w = vq.conj();
            let ys = (c2 | s) * d;
            let xb = (c2 | b) * d;
            for c1 in rest_configs(mask, d) {
                for &(r, a, vp) in &p.entries {
                    y[ys + (c1 | r)] += vp * w * x[xb + (c1 | a)];
                }
            }
        }
    }
}

fn merge_entries(mut e: Vec<(usize, usize, C64)>, drop_below: f64) -> Vec<(usize, usize, C64)> {
    e.sort_unstable_by_key(|&(r, c, _)| (r, c));
    let mut out: Vec<(usize, usize, C64)> = Vec::with_capacity(e.len());
    for (r, c, v) in e {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|e| e.2.norm() > drop_below);
    out
}

/// Sparse superoperator in coordinate form, sorted by (row, column).
#[derive(Clone, Debug)]
pub struct SparseSuperop {
    pub size: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseSuperop {
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.size];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Conjugate transpose, i.e. the generator of the other direction.
    pub fn adjoint(&self) -> SparseSuperop {
        let e = self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())).collect();
        SparseSuperop {
            size: self.size,
            entries: merge_entries(e, 0.0),
        }
    }

    /// Index sets of the connected components of the coupling graph, each sorted.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.size).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for &(r, c, _) in &self.entries {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for i in 0..self.size {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(i);
        }
        groups.into_values().collect()
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = Mat::zeros(self.size, self.size);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }
}

/// Explicit D²×D² matrix of L or L†.
#[derive(Clone, Debug)]
pub struct SuperopMatrix {
    pub matrix: CMat,
    pub direction: Direction,
}

impl SuperopMatrix {
    pub fn apply(&self, op: &CMat) -> CMat {
        let d = op.nrows();
        let x = vectorize(op);
        let mut y = vec![ZERO; d * d];
        for j in 0..d * d {
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            for (yi, m) in y.iter_mut().zip(self.matrix.col_as_slice(j)) {
                *yi += m * xj;
            }
        }
        unvectorize(&y, d)
    }
}

pub fn apply_adjoint(model: &LindbladModel, op: &DenseOperator) -> Result<DenseOperator> {
    Liouvillian::new(model).apply(Direction::Adjoint, op)
}

pub fn apply_forward(model: &LindbladModel, rho: &DenseOperator) -> Result<DenseOperator> {
    Liouvillian::new(model).apply(Direction::Forward, rho)
}

pub fn materialize(model: &LindbladModel, direction: Direction) -> Result<SuperopMatrix> {
    materialize_with_cap(model, direction, DEFAULT_DENSE_CAP)
}

pub fn materialize_with_cap(model: &LindbladModel, direction: Direction, cap: usize) -> Result<SuperopMatrix> {
    let d2 = model.hilbert_dim() * model.hilbert_dim();
    if d2 > cap {
        return Err(Error::TooLargeForDense { dim: d2, cap });
    }
    let fwd = Liouvillian::new(model).sparse_forward();
    let sparse = match direction {
        Direction::Forward => fwd,
        Direction::Adjoint => fwd.adjoint(),
    };
    Ok(SuperopMatrix {
        matrix: sparse.to_dense(),
        direction,
    })
}

/// Reduced operator on `keep` (sites in increasing order), tracing out the rest.
pub fn partial_trace(op: &CMat, keep: &[usize]) -> Result<CMat> {
    if keep.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let n = num_sites_of(op.nrows())?;
    let region = Region::new(keep.iter().copied())?;
    if region.max_site() >= n {
        return Err(Error::InvalidParameter(format!("region {keep:?} outside {n} sites")));
    }
    let sites = region.sites();
    let k = sites.len();
    let masks: Vec<usize> = sites.iter().map(|&s| 1usize << (n - 1 - s)).collect();
    let keep_mask: usize = masks.iter().sum();
    let spread = |idx: usize| -> usize {
        masks
            .iter()
            .enumerate()
            .filter(|(p, _)| idx >> (k - 1 - p) & 1 == 1)
            .map(|(_, m)| *m)
            .sum()
    };
    let full = 1usize << n;
    let rests: Vec<usize> = rest_configs(keep_mask, full).collect();
    let dk = 1usize << k;
    let spreads: Vec<usize> = (0..dk).map(spread).collect();
    Ok(Mat::from_fn(dk, dk, |i, j| {
        rests
            .iter()
            .map(|&e| op[(spreads[i] | e, spreads[j] | e)])
            .sum()
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub op_norm: f64,
    pub trace_norm: f64,
    pub frobenius: f64,
}

pub fn norms(m: &CMat) -> Norms {
    let sv = linalg::singular_values(m).unwrap_or_default();
    Norms {
        op_norm: sv.iter().copied().fold(0.0, f64::max),
        trace_norm: sv.iter().sum(),
        frobenius: linalg::frobenius(m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_davies_thermal, build_xy_damped, LatticeSpec, LocalTerm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single_qubit(h: Option<CMat>, jump: Option<(CMat, f64)>) -> LindbladModel {
        let mut terms = Vec::new();
        if let Some(h) = h {
            terms.push(LocalTerm::hamiltonian(vec![0], h, 1.0));
        }
        if let Some((l, s)) = jump {
            terms.push(LocalTerm::jump(vec![0], l, s));
        }
        LindbladModel::new(LatticeSpec::chain(1), terms, 3.0, "qubit").unwrap()
    }

    /// Independent oracle: the textbook formula with embedded dense matrices.
    fn adjoint_oracle(model: &LindbladModel, o: &CMat) -> CMat {
        let n = model.num_sites();
        let i = C64::new(0.0, 1.0);
        let mut out = linalg::zeros(1 << n);
        for t in &model.terms {
            let m = crate::model::embed(&t.scaled_matrix(), &t.support, n);
            let add = match t.kind {
                TermKind::Hamiltonian => linalg::scale(&linalg::sub(&linalg::matmul(&m, o), &linalg::matmul(o, &m)), i),
                TermKind::Jump => {
                    let md = linalg::dagger(&m);
                    let k = linalg::matmul(&md, &m);
                    let a = linalg::matmul(&linalg::matmul(&md, o), &m);
                    let b = linalg::add(&linalg::matmul(&k, o), &linalg::matmul(o, &k));
                    linalg::sub(&a, &linalg::scale(&b, linalg::c(0.5)))
                }
            };
            out = linalg::add(&out, &add);
        }
        out
    }

    #[test]
    fn identity_is_annihilated() {
        let m = build_xy_damped(&LatticeSpec::chain(4), 3.0, 0.25, 0.3).unwrap();
        let out = apply_adjoint(&m, &DenseOperator::identity(4)).unwrap();
        assert!(linalg::max_abs(&out.matrix) < 1e-14);
    }

    #[test]
    fn precession_example() {
        let w = 0.7;
        let h = linalg::scale(&linalg::pauli('Z').unwrap(), linalg::c(w / 2.0));
        let m = single_qubit(Some(h), None);
        let x = DenseOperator::new(linalg::pauli('X').unwrap()).unwrap();
        let out = apply_adjoint(&m, &x).unwrap();
        let want = linalg::scale(&linalg::pauli('Y').unwrap(), linalg::c(-w));
        assert!(linalg::max_abs_diff(&out.matrix, &want) < 1e-15);
    }

    #[test]
    fn amplitude_damping_on_sigma_z() {
        let g: f64 = 0.4;
        let m = single_qubit(None, Some((linalg::sigma_minus(), g.sqrt())));
        let z = linalg::pauli('Z').unwrap();
        let out = apply_adjoint(&m, &DenseOperator::new(z.clone()).unwrap()).unwrap();
        // |0> is the relaxed state, so σz relaxes towards +1.
        let want = linalg::scale(&linalg::sub(&linalg::identity(2), &z), linalg::c(g));
        assert!(linalg::max_abs_diff(&out.matrix, &want) < 1e-15);
        let sm = materialize(&m, Direction::Adjoint).unwrap();
        assert!(linalg::max_abs_diff(&sm.apply(&z), &want) < 1e-15);
    }

    #[test]
    fn kernel_matches_oracle_and_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xy = build_xy_damped(&LatticeSpec::chain(4), 2.5, 0.25, 0.2).unwrap();
        let dv = build_davies_thermal(&LatticeSpec::chain(3), 3.0, 1.0, 0.8, 1.0).unwrap();
        for model in [xy, dv] {
            let d = model.hilbert_dim();
            let adj = materialize(&model, Direction::Adjoint).unwrap();
            let fwd = materialize(&model, Direction::Forward).unwrap();
            for _ in 0..5 {
                let o = linalg::random_matrix(d, &mut rng);
                let op = DenseOperator::new(o.clone()).unwrap();
                let a = apply_adjoint(&model, &op).unwrap().matrix;
                assert!(linalg::max_abs_diff(&a, &adjoint_oracle(&model, &o)) < 1e-12);
                assert!(linalg::max_abs_diff(&a, &adj.apply(&o)) < 1e-12);
                let f = apply_forward(&model, &op).unwrap().matrix;
                assert!(linalg::max_abs_diff(&f, &fwd.apply(&o)) < 1e-12);
            }
        }
    }

    #[test]
    fn single_qubit_damping_spectrum() {
        let g: f64 = 0.6;
        let m = single_qubit(None, Some((linalg::sigma_minus(), g.sqrt())));
        let s = materialize(&m, Direction::Forward).unwrap();
        let mut ev: Vec<f64> = s.matrix.eigenvalues().unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let want = [0.0, -g / 2.0, -g / 2.0, -g];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_model_and_cap() {
        let m = LindbladModel::new(LatticeSpec::chain(2), vec![], 3.0, "zero").unwrap();
        let s = materialize(&m, Direction::Forward).unwrap();
        assert_eq!(linalg::max_abs(&s.matrix), 0.0);
        let big = build_xy_damped(&LatticeSpec::chain(7), 3.0, 0.25, 0.1).unwrap();
        assert!(matches!(
            materialize(&big, Direction::Forward),
            Err(Error::TooLargeForDense { .. })
        ));
    }

    #[test]
    fn davies_blocks_split_by_flip_parity() {
        let m = build_davies_thermal(&LatticeSpec::chain(3), 3.0, 1.0, 1.0, 1.0).unwrap();
        let blocks = Liouvillian::new(&m).sparse_forward().blocks();
        assert!(blocks.len() >= 8);
        assert_eq!(blocks.iter().map(Vec::len).sum::<usize>(), 64);
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = linalg::random_density(2, &mut rng);
        let b = linalg::random_density(4, &mut rng);
        let ab = linalg::kron(&a, &b);
        assert!(linalg::max_abs_diff(&partial_trace(&ab, &[0]).unwrap(), &a) < 1e-14);
        assert!(linalg::max_abs_diff(&partial_trace(&ab, &[1, 2]).unwrap(), &b) < 1e-14);
        let bell = linalg::projector(&[
            linalg::c(std::f64::consts::FRAC_1_SQRT_2),
            ZERO,
            ZERO,
            linalg::c(std::f64::consts::FRAC_1_SQRT_2),
        ]);
        let half = linalg::scale(&linalg::identity(2), linalg::c(0.5));
        assert!(linalg::max_abs_diff(&partial_trace(&bell, &[1]).unwrap(), &half) < 1e-15);
        assert!(matches!(partial_trace(&bell, &[]), Err(Error::EmptyRegion)));
    }

    #[test]
    fn norms_examples() {
        let z = norms(&linalg::pauli('Z').unwrap());
        assert!((z.op_norm - 1.0).abs() < 1e-14);
        assert!((z.trace_norm - 2.0).abs() < 1e-14);
        assert!((z.frobenius - 2f64.sqrt()).abs() < 1e-14);
        let zero = norms(&linalg::zeros(4));
        assert_eq!((zero.op_norm, zero.trace_norm, zero.frobenius), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rest_config_enumeration() {
        let v: Vec<usize> = rest_configs(0b0101, 16).collect();
        assert_eq!(v, vec![0b0000, 0b0010, 0b1000, 0b1010]);
        assert_eq!(rest_configs(0, 4).count(), 4);
        assert_eq!(rest_configs(0b11, 4).collect::<Vec<_>>(), vec![0]);
    }
}
