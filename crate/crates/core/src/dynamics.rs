//! Time evolution under L and L†, and the dynamical quantities the light-cone
//! envelopes bound.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::model::{truncate_to_ball, LindbladModel, Region};
use crate::superop::{self, DenseOperator, Direction, Liouvillian};

/// Default relative tolerance; the absolute tolerance is 1e-2 times it.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Geometric grid 0.05·2^k for k = 0..count.
pub fn default_time_grid(count: usize) -> Vec<f64> {
    (0..count).map(|k| 0.05 * 2f64.powi(k as i32)).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub max_local_error: f64,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub snapshots: Vec<DenseOperator>,
    pub stats: IntegratorStats,
    /// Accepted steps taken up to each grid point.
    pub steps_at: Vec<usize>,
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Rk45<'a> {
    gen: &'a Liouvillian,
    dir: Direction,
    hint: Option<Region>,
    rtol: f64,
    atol: f64,
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
    stats: IntegratorStats,
}

impl<'a> Rk45<'a> {
    fn new(gen: &'a Liouvillian, dir: Direction, hint: Option<Region>, tol: f64) -> Self {
        let n = gen.dim() * gen.dim();
        Self {
            gen,
            dir,
            hint,
            rtol: tol,
            atol: tol * 1e-2,
            k: std::array::from_fn(|_| vec![ZERO; n]),
            tmp: vec![ZERO; n],
            y_new: vec![ZERO; n],
            stats: IntegratorStats::default(),
        }
    }

    fn eval(&mut self, x_from_tmp: bool, out: usize) {
        let (src, dst) = if x_from_tmp {
            (&self.tmp, &mut self.k[out])
        } else {
            (&self.y_new, &mut self.k[out])
        };
        let grown = self.gen.apply_vec(self.dir, src, dst, self.hint.as_ref());
        if self.dir == Direction::Adjoint {
            self.hint = grown;
        }
    }

    fn stage(&mut self, y: &[C64], h: f64, coeffs: &[(usize, f64)]) {
        for (i, t) in self.tmp.iter_mut().enumerate() {
            let mut acc = y[i];
            for &(j, a) in coeffs {
                acc += self.k[j][i] * (a * h);
            }
            *t = acc;
        }
    }

    /// Integrates y from t0 to t1 in place.
    fn advance(&mut self, y: &mut Vec<C64>, t0: f64, t1: f64, h: &mut f64) -> Result<()> {
        let mut t = t0;
        if t1 <= t0 {
            return Ok(());
        }
        // FSAL: k[0] holds f(y) at the current point.
        self.y_new.copy_from_slice(y);
        self.eval(false, 0);
        while t < t1 {
            let mut step = h.min(t1 - t);
            let last = step >= t1 - t;
            if step < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepFailure { t });
            }
            self.stage(y, step, &[(0, A21)]);
            self.eval(true, 1);
            self.stage(y, step, &[(0, A31), (1, A32)]);
            self.eval(true, 2);
            self.stage(y, step, &[(0, A41), (1, A42), (2, A43)]);
            self.eval(true, 3);
            self.stage(y, step, &[(0, A51), (1, A52), (2, A53), (3, A54)]);
            self.eval(true, 4);
            self.stage(y, step, &[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)]);
            self.eval(true, 5);
            for i in 0..y.len() {
                self.y_new[i] = y[i]
                    + (self.k[0][i] * B1
                        + self.k[2][i] * B3
                        + self.k[3][i] * B4
                        + self.k[4][i] * B5
                        + self.k[5][i] * B6)
                        * step;
            }
            self.eval(false, 6);
            let mut err = 0.0f64;
            let mut raw = 0.0f64;
            for i in 0..y.len() {
                let e = (self.k[0][i] * E1
                    + self.k[2][i] * E3
                    + self.k[3][i] * E4
                    + self.k[4][i] * E5
                    + self.k[5][i] * E6
                    + self.k[6][i] * E7)
                    * step;
                let sc = self.atol + self.rtol * y[i].norm().max(self.y_new[i].norm());
                err = err.max(e.norm() / sc);
                raw = raw.max(e.norm());
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + step };
                std::mem::swap(y, &mut self.y_new);
                self.k.swap(0, 6);
                self.stats.steps += 1;
                self.stats.max_local_error = self.stats.max_local_error.max(raw);
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    *h = step * fac;
                } else {
                    *h = h.max(step * fac);
                }
            } else {
                self.stats.rejected += 1;
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.5) } else { 0.1 };
                step *= fac;
                *h = step;
            }
        }
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidParameter("time grid must be finite and nonnegative".into()));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("time grid must be nondecreasing".into()));
    }
    Ok(())
}

/// Evolves with a pre-compiled generator; the building block for everything else.
pub fn evolve_with(
    gen: &Liouvillian,
    dir: Direction,
    op: &DenseOperator,
    grid: &[f64],
    tol: f64,
) -> Result<EvolutionResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be positive, got {tol}")));
    }
    check_grid(grid)?;
    if op.dim() != gen.dim() {
        return Err(Error::DimensionMismatch {
            expected: gen.dim(),
            got: op.dim(),
        });
    }
    let d = gen.dim();
    let hint = (dir == Direction::Adjoint).then(|| op.support_hint.clone());
    let mut rk = Rk45::new(gen, dir, hint, tol);
    let mut y = superop::vectorize(&op.matrix);
    let mut t = 0.0;
    let mut h = initial_step(gen, dir, &y, grid);
    let mut snapshots = Vec::with_capacity(grid.len());
    let mut steps_at = Vec::with_capacity(grid.len());
    for &tk in grid {
        rk.advance(&mut y, t, tk, &mut h)?;
        t = tk;
        let support_hint = match dir {
            Direction::Adjoint => rk.hint.clone().unwrap_or_else(|| op.support_hint.clone()),
            Direction::Forward => Region::full(gen.num_sites()),
        };
        let support_hint = if tk == 0.0 { op.support_hint.clone() } else { support_hint };
        snapshots.push(DenseOperator::with_hint(superop::unvectorize(&y, d), support_hint));
        steps_at.push(rk.stats.steps);
    }
    Ok(EvolutionResult {
        times: grid.to_vec(),
        snapshots,
        stats: rk.stats,
        steps_at,
    })
}

fn initial_step(gen: &Liouvillian, dir: Direction, y: &[C64], grid: &[f64]) -> f64 {
    let mut f = vec![ZERO; y.len()];
    gen.apply_vec(dir, y, &mut f, None);
    let ny = y.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let nf = f.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let horizon = grid.last().copied().unwrap_or(1.0).max(1e-3);
    if nf == 0.0 || ny == 0.0 {
        return horizon;
    }
    (0.01 * ny / nf).min(horizon)
}

pub fn evolve_adjoint(model: &LindbladModel, op: &DenseOperator, grid: &[f64], tol: f64) -> Result<EvolutionResult> {
    evolve_with(&Liouvillian::new(model), Direction::Adjoint, op, grid, tol)
}

pub fn evolve_forward(model: &LindbladModel, rho: &DenseOperator, grid: &[f64], tol: f64) -> Result<EvolutionResult> {
    evolve_with(&Liouvillian::new(model), Direction::Forward, rho, grid, tol)
}

/// Reference evolution through the exponential of the materialized superoperator.
pub fn evolve_dense_oracle(model: &LindbladModel, op: &CMat, grid: &[f64], dir: Direction) -> Result<Vec<CMat>> {
    let m = superop::materialize(model, dir)?;
    grid.iter()
        .map(|&t| {
            let e = superop::SuperopMatrix {
                matrix: linalg::expm(&linalg::scale(&m.matrix, linalg::c(t))),
                direction: dir,
            };
            Ok(e.apply(op))
        })
        .collect()
}

/// A norm curve sampled on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub steps: Vec<usize>,
    pub max_local_error: f64,
}

impl Curve {
    fn combine(times: &[f64], values: Vec<f64>, runs: &[&EvolutionResult]) -> Self {
        let steps = (0..times.len())
            .map(|k| runs.iter().map(|r| r.steps_at[k]).sum())
            .collect();
        let max_local_error = runs.iter().map(|r| r.stats.max_local_error).fold(0.0, f64::max);
        Self {
            times: times.to_vec(),
            values,
            steps,
            max_local_error,
        }
    }
}

fn check_disjoint(a: &DenseOperator, b: &DenseOperator) -> Result<()> {
    if !a.support_hint.is_disjoint(&b.support_hint) {
        return Err(Error::SupportViolation {
            support: b.support_hint.sites().to_vec(),
            region: a.support_hint.sites().to_vec(),
        });
    }
    Ok(())
}

/// ‖A(t) − Ã(t)‖ with Ã evolved under the model truncated to the ball of `radius` around X.
pub fn measure_truncation_error(
    model: &LindbladModel,
    a: &DenseOperator,
    x: &Region,
    radius: f64,
    grid: &[f64],
    tol: f64,
) -> Result<Curve> {
    if !a.support_hint.is_subset_of(x) {
        return Err(Error::SupportViolation {
            support: a.support_hint.sites().to_vec(),
            region: x.sites().to_vec(),
        });
    }
    let truncated = truncate_to_ball(model, x, radius);
    let full = evolve_adjoint(model, a, grid, tol)?;
    let trunc = evolve_adjoint(&truncated, a, grid, tol)?;
    let values = full
        .snapshots
        .iter()
        .zip(&trunc.snapshots)
        .map(|(p, q)| linalg::op_norm(&linalg::sub(&p.matrix, &q.matrix)))
        .collect();
    Ok(Curve::combine(grid, values, &[&full, &trunc]))
}

/// ‖(AB)(t) − A(t)B(t)‖ for A, B on disjoint supports.
pub fn measure_joint_vs_separate(
    model: &LindbladModel,
    a: &DenseOperator,
    b: &DenseOperator,
    grid: &[f64],
    tol: f64,
) -> Result<Curve> {
    check_disjoint(a, b)?;
    let gen = Liouvillian::new(model);
    let ab = DenseOperator::with_hint(linalg::matmul(&a.matrix, &b.matrix), a.support_hint.union(&b.support_hint));
    let joint = evolve_with(&gen, Direction::Adjoint, &ab, grid, tol)?;
    let ea = evolve_with(&gen, Direction::Adjoint, a, grid, tol)?;
    let eb = evolve_with(&gen, Direction::Adjoint, b, grid, tol)?;
    let values = (0..grid.len())
        .map(|k| {
            let prod = linalg::matmul(&ea.snapshots[k].matrix, &eb.snapshots[k].matrix);
            linalg::op_norm(&linalg::sub(&joint.snapshots[k].matrix, &prod))
        })
        .collect();
    Ok(Curve::combine(grid, values, &[&joint, &ea, &eb]))
}

/// ‖[B, A(t)]‖ for static B and evolved A on disjoint supports.
pub fn measure_commutator_lightcone(
    model: &LindbladModel,
    a: &DenseOperator,
    b: &DenseOperator,
    grid: &[f64],
    tol: f64,
) -> Result<Curve> {
    check_disjoint(a, b)?;
    let ev = evolve_adjoint(model, a, grid, tol)?;
    let values = ev
        .snapshots
        .iter()
        .map(|s| commutator_norm(&b.matrix, &s.matrix))
        .collect();
    Ok(Curve::combine(grid, values, &[&ev]))
}

pub fn commutator_norm(b: &CMat, a: &CMat) -> f64 {
    linalg::op_norm(&linalg::sub(&linalg::matmul(b, a), &linalg::matmul(a, b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_xy_damped, LatticeSpec, LocalTerm};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qubit(terms: Vec<LocalTerm>) -> LindbladModel {
        LindbladModel::new(LatticeSpec::chain(1), terms, 3.0, "q").unwrap()
    }

    #[test]
    fn identity_is_stationary() {
        let m = build_xy_damped(&LatticeSpec::chain(3), 3.0, 0.25, 0.2).unwrap();
        let r = evolve_adjoint(&m, &DenseOperator::identity(3), &[0.0, 1.0, 5.0], 1e-8).unwrap();
        for s in &r.snapshots {
            assert!(linalg::max_abs_diff(&s.matrix, &linalg::identity(8)) < 1e-12);
        }
    }

    #[test]
    fn bloch_rotation() {
        let w = 1.3;
        let h = linalg::scale(&linalg::pauli('Z').unwrap(), linalg::c(w / 2.0));
        let m = qubit(vec![LocalTerm::hamiltonian(vec![0], h, 1.0)]);
        let x = DenseOperator::new(linalg::pauli('X').unwrap()).unwrap();
        let grid = [0.0, 0.5, 1.0, 2.0];
        let r = evolve_adjoint(&m, &x, &grid, 1e-10).unwrap();
        for (s, &t) in r.snapshots.iter().zip(&grid) {
            let want = linalg::sub(
                &linalg::scale(&linalg::pauli('X').unwrap(), linalg::c((w * t).cos())),
                &linalg::scale(&linalg::pauli('Y').unwrap(), linalg::c((w * t).sin())),
            );
            assert!(linalg::max_abs_diff(&s.matrix, &want) < 1e-9);
        }
    }

    #[test]
    fn matches_dense_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = build_xy_damped(&LatticeSpec::chain(3), 2.5, 0.25, 0.3).unwrap();
        let o = linalg::random_hermitian(8, &mut rng);
        let grid = [0.0, 0.3, 1.0, 2.5];
        let r = evolve_adjoint(&m, &DenseOperator::new(o.clone()).unwrap(), &grid, 1e-10).unwrap();
        let oracle = evolve_dense_oracle(&m, &o, &grid, Direction::Adjoint).unwrap();
        for (s, e) in r.snapshots.iter().zip(&oracle) {
            assert!(linalg::max_abs_diff(&s.matrix, e) < 1e-8);
        }
        assert!(linalg::max_abs_diff(&r.snapshots[0].matrix, &o) == 0.0);
    }

    #[test]
    fn damping_population_relaxes() {
        let g: f64 = 0.8;
        let m = qubit(vec![LocalTerm::jump(vec![0], linalg::sigma_minus(), g.sqrt())]);
        let one = DenseOperator::new(linalg::projector(&[ZERO, linalg::c(1.0)])).unwrap();
        let grid = [0.0, 0.5, 1.0, 3.0];
        let r = evolve_forward(&m, &one, &grid, 1e-9).unwrap();
        for (s, &t) in r.snapshots.iter().zip(&grid) {
            assert!((s.matrix[(1, 1)].re - (-g * t).exp()).abs() < 1e-9);
            assert!((linalg::trace(&s.matrix) - linalg::c(1.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn disjointness_enforced() {
        let m = build_xy_damped(&LatticeSpec::chain(3), 3.0, 0.25, 0.1).unwrap();
        let a = DenseOperator::pauli_string(&[(0, 'X')], 3).unwrap();
        let b = DenseOperator::pauli_string(&[(0, 'Z')], 3).unwrap();
        assert!(matches!(
            measure_commutator_lightcone(&m, &a, &b, &[0.0, 1.0], 1e-8),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn lightcone_quantities_start_at_zero_and_stay_bounded() {
        let m = build_xy_damped(&LatticeSpec::chain(4), 3.0, 0.25, 0.1).unwrap();
        let a = DenseOperator::pauli_string(&[(0, 'X')], 4).unwrap();
        let b = DenseOperator::pauli_string(&[(3, 'Z')], 4).unwrap();
        let grid = default_time_grid(5);
        let mut g0 = vec![0.0];
        g0.extend(grid);
        let c = measure_commutator_lightcone(&m, &a, &b, &g0, 1e-8).unwrap();
        assert!(c.values[0] < 1e-14);
        assert!(c.values.iter().all(|&v| v <= 2.0 + 1e-9));
        let j = measure_joint_vs_separate(&m, &a, &b, &g0, 1e-8).unwrap();
        assert!(j.values[0] < 1e-14);
        let t = measure_truncation_error(&m, &a, &Region::single(0), 4.0, &g0, 1e-8).unwrap();
        assert!(t.values.iter().all(|&v| v == 0.0));
    }
}
