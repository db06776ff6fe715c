//! Steady-state correlation measures and mixing-rate estimation.

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64, CMat, ZERO};
use crate::model::{LatticeSpec, LindbladModel, Region};
use crate::spectral::{self, SpectralData};
use crate::superop::{self, Direction};

/// Largest |X| + |Y| accepted by the covariance optimizer.
pub const MAX_REDUCED_SITES: usize = 6;
pub const DEFAULT_RESTARTS: usize = 20;
pub const ENTROPY_FLOOR: f64 = 1e-14;
pub const MIXING_FLOOR: f64 = 1e-12;
const SWEEP_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub restarts: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Objective never decreased between sweeps (beyond round-off).
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRecord {
    #[serde(rename = "X")]
    pub x: Region,
    #[serde(rename = "Y")]
    pub y: Region,
    pub r: f64,
    #[serde(rename = "T_value")]
    pub t_value: f64,
    pub mutual_info: f64,
    pub optimizer_trace: OptimizerTrace,
    pub seed: u64,
}

/// Δ = ρ_XY − ρ_X ⊗ ρ_Y with X-sites as the leading tensor factor.
#[derive(Clone, Debug)]
pub struct ConnectedState {
    pub delta: CMat,
    pub dx: usize,
    pub dy: usize,
}

fn num_sites(rho: &CMat) -> Result<usize> {
    let d = rho.nrows();
    if d == 0 || !d.is_power_of_two() || rho.ncols() != d {
        return Err(Error::InvalidParameter(format!("{}x{} is not a qubit operator", d, rho.ncols())));
    }
    Ok(d.trailing_zeros() as usize)
}

fn check_pair(n: usize, x: &Region, y: &Region) -> Result<()> {
    if !x.is_disjoint(y) {
        return Err(Error::OverlapError);
    }
    if x.max_site() >= n || y.max_site() >= n {
        return Err(Error::InvalidParameter(format!("regions exceed {n} sites")));
    }
    Ok(())
}

/// Reduced state on X ∪ Y reordered so that X's qubits come first.
fn reduced_xy(rho: &CMat, x: &Region, y: &Region) -> Result<CMat> {
    let union = x.union(y);
    let red = superop::partial_trace(rho, union.sites())?;
    let k = union.len();
    let pos = |s: usize| union.sites().iter().position(|&u| u == s).unwrap_or(0);
    let order: Vec<usize> = x.sites().iter().chain(y.sites()).map(|&s| pos(s)).collect();
    // New index bit p (from the top) reads old bit order[p].
    let map = |idx: usize| -> usize {
        (0..k)
            .filter(|p| idx >> (k - 1 - p) & 1 == 1)
            .map(|p| 1usize << (k - 1 - order[p]))
            .sum()
    };
    let dim = 1usize << k;
    let perm: Vec<usize> = (0..dim).map(map).collect();
    Ok(Mat::from_fn(dim, dim, |i, j| red[(perm[i], perm[j])]))
}

pub fn connected_state(rho: &CMat, x: &Region, y: &Region) -> Result<ConnectedState> {
    let n = num_sites(rho)?;
    check_pair(n, x, y)?;
    let rxy = reduced_xy(rho, x, y)?;
    let (dx, dy) = (1usize << x.len(), 1usize << y.len());
    let rx = superop::partial_trace(rho, x.sites())?;
    let ry = superop::partial_trace(rho, y.sites())?;
    let delta = linalg::sub(&rxy, &linalg::kron(&rx, &ry));
    Ok(ConnectedState { delta, dx, dy })
}

impl ConnectedState {
    /// Tr[(f ⊗ g) Δ].
    pub fn objective(&self, f: &CMat, g: &CMat) -> f64 {
        let mut acc = ZERO;
        for x in 0..self.dx {
            for y in 0..self.dy {
                for xp in 0..self.dx {
                    for yp in 0..self.dy {
                        acc += f[(x, xp)] * g[(y, yp)] * self.delta[(xp * self.dy + yp, x * self.dy + y)];
                    }
                }
            }
        }
        acc.re
    }

    /// Tr_Y[(𝕀 ⊗ g) Δ].
    pub fn contract_y(&self, g: &CMat) -> CMat {
        let (dx, dy) = (self.dx, self.dy);
        Mat::from_fn(dx, dx, |x, xp| {
            let mut acc = ZERO;
            for y in 0..dy {
                for yp in 0..dy {
                    acc += g[(yp, y)] * self.delta[(x * dy + y, xp * dy + yp)];
                }
            }
            acc
        })
    }

    /// Tr_X[(f ⊗ 𝕀) Δ].
    pub fn contract_x(&self, f: &CMat) -> CMat {
        let (dx, dy) = (self.dx, self.dy);
        Mat::from_fn(dy, dy, |y, yp| {
            let mut acc = ZERO;
            for x in 0..dx {
                for xp in 0..dx {
                    acc += f[(xp, x)] * self.delta[(x * dy + y, xp * dy + yp)];
                }
            }
            acc
        })
    }

    /// Hermitian g from the top right singular vector of the realigned Δ.
    fn spectral_init(&self) -> Result<CMat> {
        let (dx, dy) = (self.dx, self.dy);
        let realigned = Mat::from_fn(dx * dx, dy * dy, |row, col| {
            let (x, xp) = (row / dx, row % dx);
            let (y, yp) = (col / dy, col % dy);
            self.delta[(x * dy + y, xp * dy + yp)]
        });
        if linalg::max_abs(&realigned) == 0.0 {
            return Ok(linalg::identity(dy));
        }
        let svd = realigned
            .svd()
            .map_err(|e| Error::LinAlg(format!("svd: {e:?}")))?;
        let v = svd.V();
        let gmat = Mat::from_fn(dy, dy, |y, yp| v[(y * dy + yp, 0)].conj());
        let mut g = linalg::hermitian_part(&linalg::transpose(&gmat));
        if linalg::max_abs(&g) < 1e-12 {
            g = linalg::hermitian_part(&linalg::scale(&linalg::transpose(&gmat), linalg::I));
        }
        normalize(g)
    }

    /// Alternating sign-operator ascent from `g0`; returns (value, sweeps, converged, monotone).
    fn ascend(&self, g0: CMat) -> Result<(f64, usize, bool, bool)> {
        let mut g = g0;
        let mut best = f64::NEG_INFINITY;
        let mut monotone = true;
        for sweep in 1..=MAX_SWEEPS {
            let mg = self.contract_y(&g);
            let f = linalg::hermitian_sign(&mg)?;
            let mf = self.contract_x(&f);
            g = linalg::hermitian_sign(&mf)?;
            let value = linalg::trace_norm(&linalg::hermitian_part(&mf));
            if value < best - 1e-12 {
                monotone = false;
            }
            let improvement = value - best;
            best = best.max(value);
            if improvement < SWEEP_TOL {
                return Ok((best, sweep, true, monotone));
            }
        }
        Ok((best, MAX_SWEEPS, false, monotone))
    }
}

fn normalize(g: CMat) -> Result<CMat> {
    let n = linalg::op_norm(&g);
    if !(n > 0.0) {
        return Err(Error::LinAlg("cannot normalize a zero operator".into()));
    }
    Ok(linalg::scale(&g, linalg::c(1.0 / n)))
}

/// Per-restart seed derived from the master seed.
pub fn restart_seed(master: u64, restart: usize) -> u64 {
    master ^ (restart as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// T_ρ(X:Y) by alternating maximization with seeded restarts.
pub fn covariance_t(rho: &CMat, x: &Region, y: &Region, restarts: usize, seed: u64) -> Result<(f64, OptimizerTrace)> {
    let n = num_sites(rho)?;
    check_pair(n, x, y)?;
    if x.len() + y.len() > MAX_REDUCED_SITES {
        return Err(Error::TooLargeReduced(x.len() + y.len()));
    }
    let cs = connected_state(rho, x, y)?;
    if linalg::max_abs(&cs.delta) == 0.0 {
        return Ok((
            0.0,
            OptimizerTrace {
                restarts: 0,
                iterations: 0,
                converged: true,
                monotone: true,
            },
        ));
    }
    let mut starts = vec![cs.spectral_init()?];
    for k in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(seed, k));
        starts.push(normalize(linalg::random_hermitian(cs.dy, &mut rng))?);
    }
    let runs: Vec<(f64, usize, bool, bool)> = starts
        .into_par_iter()
        .map(|g| cs.ascend(g))
        .collect::<Result<_>>()?;
    let value = runs.iter().map(|r| r.0).fold(0.0, f64::max);
    Ok((
        value,
        OptimizerTrace {
            restarts: runs.len(),
            iterations: runs.iter().map(|r| r.1).sum(),
            converged: runs.iter().all(|r| r.2),
            monotone: runs.iter().all(|r| r.3),
        },
    ))
}

/// I(A:B) = S(ρ_A) + S(ρ_B) − S(ρ_AB), natural log.
pub fn mutual_information(rho: &CMat, a: &Region, b: &Region) -> Result<f64> {
    let n = num_sites(rho)?;
    check_pair(n, a, b)?;
    let ra = superop::partial_trace(rho, a.sites())?;
    let rb = superop::partial_trace(rho, b.sites())?;
    let rab = superop::partial_trace(rho, a.union(b).sites())?;
    let s = |m: &CMat| linalg::entropy(m, ENTROPY_FLOOR);
    Ok((s(&ra)? + s(&rb)? - s(&rab)?).max(0.0))
}

pub fn covariance_correlation(rho: &CMat, x: &Region, y: &Region, seed: u64) -> Result<CorrelationRecord> {
    let n = num_sites(rho)?;
    let (t_value, optimizer_trace) = covariance_t(rho, x, y, DEFAULT_RESTARTS, seed)?;
    Ok(CorrelationRecord {
        x: x.clone(),
        y: y.clone(),
        r: x.dist(y, &LatticeSpec::chain(n)),
        t_value,
        mutual_info: mutual_information(rho, x, y)?,
        optimizer_trace,
        seed,
    })
}

fn require_mixing(model: &LindbladModel, sdata: &SpectralData) -> Result<()> {
    if model.hilbert_dim() != sdata.dim() {
        return Err(Error::DimensionMismatch {
            expected: sdata.dim(),
            got: model.hilbert_dim(),
        });
    }
    if !sdata.primitive {
        return Err(Error::NonPrimitive(sdata.null_dim));
    }
    let min_eig = sdata.steady_state_min_eig();
    if min_eig <= spectral::FULL_RANK_TOL {
        return Err(Error::SingularSteadyState(min_eig));
    }
    Ok(())
}

/// ‖ρ(t) − σ‖₁ on the grid.
pub fn mixing_distance(model: &LindbladModel, sdata: &SpectralData, rho0: &CMat, grid: &[f64]) -> Result<Vec<f64>> {
    require_mixing(model, sdata)?;
    let sigma = &sdata.steady_state.matrix;
    Ok(grid
        .iter()
        .map(|&t| {
            let rt = sdata.propagate(Direction::Forward, rho0, t);
            linalg::trace_norm(&linalg::hermitian_part(&linalg::sub(&rt, sigma)))
        })
        .collect())
}

/// sqrt(2 ln‖σ^{-1}‖).
pub fn mixing_prefactor(sdata: &SpectralData) -> f64 {
    (2.0 * (1.0 / sdata.steady_state_min_eig()).ln()).sqrt()
}

/// Random product pure state on `n` qubits.
pub fn random_product_state(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let factors: Vec<CMat> = (0..n)
        .map(|_| linalg::projector(&linalg::random_qubit_state(rng)))
        .collect();
    linalg::kron_all(&factors)
}

pub fn random_product_states(n: usize, count: usize, seed: u64) -> Vec<CMat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_product_state(n, &mut rng)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingEstimate {
    pub beta_est: f64,
    pub prefactor: f64,
    pub gap: f64,
    pub points_used: usize,
    pub samples: usize,
    /// "lemma" when the model is 1/2-reversible, otherwise "empirical only".
    pub label: String,
}

/// Largest β with ‖ρ(t) − σ‖₁ ≤ sqrt(2 ln‖σ^{-1}‖) e^{−βt} on every sampled point above the floor.
pub fn estimate_mixing_rate(
    model: &LindbladModel,
    sdata: &SpectralData,
    samples: &[CMat],
    grid: &[f64],
) -> Result<MixingEstimate> {
    require_mixing(model, sdata)?;
    let prefactor = mixing_prefactor(sdata);
    let curves: Vec<Vec<f64>> = samples
        .iter()
        .map(|rho0| mixing_distance(model, sdata, rho0, grid))
        .collect::<Result<_>>()?;
    let mut beta = f64::INFINITY;
    let mut used = 0;
    for curve in &curves {
        for (&t, &d) in grid.iter().zip(curve) {
            if t > 0.0 && d > MIXING_FLOOR {
                beta = beta.min((prefactor / d).ln() / t);
                used += 1;
            }
        }
    }
    let reversible = sdata.half_reversibility().map(|c| c.reversible).unwrap_or(false);
    Ok(MixingEstimate {
        beta_est: beta,
        prefactor,
        gap: sdata.gap,
        points_used: used,
        samples: samples.len(),
        label: if reversible { "lemma" } else { "empirical only" }.into(),
    })
}

/// Worst ‖ρ(t) − σ‖₁ / (prefactor e^{−βt}) over the samples and grid.
pub fn audit_mixing_bound(
    model: &LindbladModel,
    sdata: &SpectralData,
    beta: f64,
    samples: &[CMat],
    grid: &[f64],
) -> Result<f64> {
    let prefactor = mixing_prefactor(sdata);
    let mut worst: f64 = 0.0;
    for rho0 in samples {
        let curve = mixing_distance(model, sdata, rho0, grid)?;
        for (&t, &d) in grid.iter().zip(&curve) {
            if d > MIXING_FLOOR {
                worst = worst.max(d / (prefactor * (-beta * t).exp()));
            }
        }
    }
    Ok(worst)
}

/// Least-squares decay rate −d ln y / dt over points with y in (lo, hi).
pub fn fit_decay_rate(times: &[f64], values: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > lo && v < hi)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Some(-sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityPoint {
    #[serde(rename = "Y")]
    pub y: Region,
    pub r: f64,
    pub distance: f64,
}

/// ‖ρ_Y − σ_Y‖₁ between two steady states for each Y, with r = dist(X, Y).
pub fn stability_from_states(
    sigma: &CMat,
    sigma_perturbed: &CMat,
    x: &Region,
    y_grid: &[Region],
    lattice: &LatticeSpec,
) -> Result<Vec<StabilityPoint>> {
    y_grid
        .iter()
        .map(|y| {
            let a = superop::partial_trace(sigma, y.sites())?;
            let b = superop::partial_trace(sigma_perturbed, y.sites())?;
            Ok(StabilityPoint {
                y: y.clone(),
                r: x.dist(y, lattice),
                distance: linalg::trace_norm(&linalg::hermitian_part(&linalg::sub(&b, &a))),
            })
        })
        .collect()
}

pub fn stability_measurement(
    model: &LindbladModel,
    perturbed: &LindbladModel,
    y_grid: &[Region],
) -> Result<Vec<StabilityPoint>> {
    let x = perturbed
        .perturbation_region
        .clone()
        .ok_or_else(|| Error::InvalidParameter("perturbed model has no perturbation region".into()))?;
    let s0 = spectral::analyze(model)?;
    let s1 = spectral::analyze(perturbed)?;
    for s in [&s0, &s1] {
        if !s.primitive {
            return Err(Error::NonPrimitive(s.null_dim));
        }
    }
    stability_from_states(
        &s0.steady_state.matrix,
        &s1.steady_state.matrix,
        &x,
        y_grid,
        &model.lattice,
    )
}

/// Converts a vector of qubit amplitudes into a pure-state density matrix.
pub fn pure_state(amplitudes: &[C64]) -> CMat {
    linalg::projector(amplitudes)
}
