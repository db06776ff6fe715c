//! Small dense helpers on top of `faer`: Pauli matrices, Kronecker products,
//! Hermitian spectral functions, singular-value norms and a scaling-and-squaring
//! matrix exponential.

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = Mat<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
}

pub fn zeros(n: usize) -> CMat {
    Mat::zeros(n, n)
}

/// Single-qubit Pauli matrix by label (`I`, `X`, `Y`, `Z`, plus `+`/`-` for
/// the ladder operators). `|0>` is the `Z = +1` eigenstate; `-` maps `|1>` to `|0>`.
pub fn pauli(label: char) -> Option<CMat> {
    let m = match label.to_ascii_uppercase() {
        'I' => [[ONE, ZERO], [ZERO, ONE]],
        'X' => [[ZERO, ONE], [ONE, ZERO]],
        'Y' => [[ZERO, -I], [I, ZERO]],
        'Z' => [[ONE, ZERO], [ZERO, -ONE]],
        '-' => [[ZERO, ONE], [ZERO, ZERO]],
        '+' => [[ZERO, ZERO], [ONE, ZERO]],
        _ => return None,
    };
    Some(Mat::from_fn(2, 2, |i, j| m[i][j]))
}

pub fn sigma_minus() -> CMat {
    pauli('-').unwrap()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

pub fn transpose(a: &CMat) -> CMat {
    a.transpose().to_owned()
}

pub fn trace(a: &CMat) -> C64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

/// Tr[a b] without forming the product.
pub fn trace_prod(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for j in 0..b.ncols() {
        let bj = b.col_as_slice(j);
        for (k, bkj) in bj.iter().enumerate().take(n) {
            acc += a[(j, k)] * bkj;
        }
    }
    acc
}

pub fn scale(a: &CMat, s: C64) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * s)
}

pub fn add(a: &CMat, b: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + b[(i, j)])
}

pub fn sub(a: &CMat, b: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - b[(i, j)])
}

pub fn hermitian_part(a: &CMat) -> CMat {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5)
}

pub fn max_abs(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for z in a.col_as_slice(j) {
            m = m.max(z.norm());
        }
    }
    m
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for (x, y) in a.col_as_slice(j).iter().zip(b.col_as_slice(j)) {
            m = m.max((x - y).norm());
        }
    }
    m
}

pub fn frobenius(a: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for z in a.col_as_slice(j) {
            s += z.norm_sqr();
        }
    }
    s.sqrt()
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    m
}

pub fn singular_values(a: &CMat) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    let s = a
        .singular_values()
        .map_err(|e| Error::LinAlg(format!("svd: {e:?}")))?;
    Ok(s)
}

pub fn op_norm(a: &CMat) -> f64 {
    if max_abs(a) == 0.0 {
        return 0.0;
    }
    singular_values(a)
        .map(|s| s.first().copied().unwrap_or(0.0))
        .unwrap_or(f64::NAN)
}

pub fn trace_norm(a: &CMat) -> f64 {
    if max_abs(a) == 0.0 {
        return 0.0;
    }
    singular_values(a)
        .map(|s| s.iter().sum())
        .unwrap_or(f64::NAN)
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `a`.
pub fn hermitian_eig(a: &CMat) -> Result<(Vec<f64>, CMat)> {
    let h = hermitian_part(a);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinAlg(format!("hermitian eig: {e:?}")))?;
    let vals = evd.S().column_vector().iter().map(|z| z.re).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn hermitian_eigvals(a: &CMat) -> Result<Vec<f64>> {
    let h = hermitian_part(a);
    let vals = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::LinAlg(format!("hermitian eig: {e:?}")))?;
    Ok(vals)
}

/// U diag(f(λ)) U† for the Hermitian part of `a`.
pub fn hermitian_fn(a: &CMat, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let (vals, u) = hermitian_eig(a)?;
    let n = a.nrows();
    let fu = Mat::from_fn(n, n, |i, j| u[(i, j)] * f(vals[j]));
    Ok(&fu * u.adjoint())
}

/// Sign operator of a Hermitian matrix; zero eigenvalues map to +1 so the
/// result stays unitary.
pub fn hermitian_sign(a: &CMat) -> Result<CMat> {
    hermitian_fn(a, |x| if x < 0.0 { -1.0 } else { 1.0 })
}

/// exp(a) by scaling and squaring with a degree-18 Taylor core.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|j| a.col_as_slice(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm1 > 0.25 {
        squarings = (norm1 / 0.25).log2().ceil() as u32;
    }
    let scaled = scale(a, c(1.0 / 2f64.powi(squarings as i32)));
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=18 {
        term = &term * &scaled;
        term = scale(&term, c(1.0 / k as f64));
        result = add(&result, &term);
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g: CMat = Mat::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    hermitian_part(&g)
}

pub fn random_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    Mat::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Random density matrix G G† / Tr[G G†] with Ginibre G.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let g = random_matrix(dim, rng);
    let rho = &g * g.adjoint();
    let tr = trace(&rho).re;
    scale(&rho, c(1.0 / tr))
}

/// Haar-random single-qubit pure state as a 2-vector.
pub fn random_qubit_state<R: Rng + ?Sized>(rng: &mut R) -> [C64; 2] {
    let v: [C64; 2] = [
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)),
    ];
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

pub fn projector(v: &[C64]) -> CMat {
    let n = v.len();
    Mat::from_fn(n, n, |i, j| v[i] * v[j].conj())
}

/// Tensor product of single-site matrices, site 0 leftmost.
pub fn kron_all(factors: &[CMat]) -> CMat {
    let mut acc = identity(1);
    for f in factors {
        acc = kron(&acc, f);
    }
    acc
}

/// Von Neumann entropy (natural log), eigenvalues clipped at `floor`.
pub fn entropy(rho: &CMat, floor: f64) -> Result<f64> {
    let vals = hermitian_eigvals(rho)?;
    Ok(vals
        .into_iter()
        .filter(|&p| p > floor)
        .map(|p| -p * p.ln())
        .sum())
}
