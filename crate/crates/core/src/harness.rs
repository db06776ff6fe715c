//! Experiment orchestration: configs, constant fitting, the light-cone and
//! clustering suites, and the full verification run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundParams, Regime, TheoremCase, TheoremKind};
use crate::correlations;
use crate::dynamics::{self, Curve};
use crate::error::{Error, Result};
use crate::io::{self, Fingerprint};
use crate::linalg::{self, CMat};
use crate::model::{self, LatticeSpec, LindbladModel, LocalTerm, ModelFamily, ModelSpec, Rates, Region};
use crate::spectral::{self, SpectralData};
use crate::superop::{self, DenseOperator, Direction, Liouvillian};

/// Measurements at or below this are treated as zero when fitting.
pub const FIT_FLOOR: f64 = 1e-12;
/// A check passes when its smallest margin is at least −MARGIN_SLACK.
pub const MARGIN_SLACK: f64 = 1e-9;

// --- Configuration ------------------------------------------------------------

/// Pauli string such as `"X0 Z2"`: one letter plus site index per factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliString(pub Vec<(usize, char)>);

impl FromStr for PauliString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let factors = s
            .split_whitespace()
            .map(|tok| {
                let mut chars = tok.chars();
                let p = chars
                    .next()
                    .filter(|c| "IXYZ".contains(*c))
                    .ok_or_else(|| Error::Config(format!("bad Pauli factor {tok:?}")))?;
                let site = chars
                    .as_str()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("bad site in Pauli factor {tok:?}")))?;
                Ok((site, p))
            })
            .collect::<Result<Vec<_>>>()?;
        if factors.is_empty() {
            return Err(Error::Config("empty Pauli string".into()));
        }
        Ok(Self(factors))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(s, p)| format!("{p}{s}")).collect();
        f.write_str(&parts.join(" "))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl PauliString {
    pub fn sites(&self) -> Vec<usize> {
        self.0.iter().map(|f| f.0).collect()
    }

    pub fn max_site(&self) -> usize {
        self.0.iter().map(|f| f.0).max().unwrap_or(0)
    }

    pub fn operator(&self, num_sites: usize) -> Result<DenseOperator> {
        DenseOperator::pauli_string(&self.0, num_sites)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub family: ModelFamily,
    #[serde(default)]
    pub rates: Rates,
    pub n_values: Vec<usize>,
    pub alpha_values: Vec<f64>,
    /// Separations to measure; default is every achievable one.
    #[serde(default)]
    pub r_values: Option<Vec<usize>>,
    /// Default is 0.05·2^k for k = 0..7.
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: PauliString,
    /// Single-site Pauli placed at distance r beyond A's last site.
    #[serde(rename = "B")]
    pub b: char,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeSpec {
    pub regime: Regime,
    #[serde(default)]
    pub params: BoundParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(rename = "fit_C", default = "yes")]
    pub fit_c: bool,
    #[serde(default)]
    pub fit_v: bool,
    /// Candidate v values when `fit_v` is set.
    #[serde(default)]
    pub grid: Vec<f64>,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusteringConfig {
    #[serde(rename = "X")]
    pub x: Vec<usize>,
    /// Rate of the σ⁻ jump added on X for the stability measurement.
    pub perturbation_rate: f64,
    /// Light-cone velocity entering the clustering exponent.
    pub v: f64,
    pub case: TheoremCase,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            x: vec![0],
            perturbation_rate: 1e-3,
            v: 1.0,
            case: TheoremCase::Exponential,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CheckCounts {
    pub structure_cases: usize,
    pub oracle_cases: usize,
    pub oracle_tol: f64,
    pub decay_samples: usize,
    pub minimize_h_draws: usize,
    pub series_samples: usize,
    pub mixing_samples: usize,
    pub audit_samples: usize,
    pub determinism_rerun: bool,
}

impl Default for CheckCounts {
    fn default() -> Self {
        Self {
            structure_cases: 200,
            oracle_cases: 50,
            oracle_tol: 1e-10,
            decay_samples: 50,
            minimize_h_draws: 100,
            series_samples: 1000,
            mixing_samples: 20,
            audit_samples: 20,
            determinism_rerun: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Model for the clustering suite.
    pub model: ModelSpec,
    pub sweep: SweepConfig,
    pub envelopes: Vec<EnvelopeSpec>,
    pub fit: FitConfig,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Further detailed-balance models for the spectral, reversibility and mixing checks.
    #[serde(default)]
    pub davies_models: Vec<ModelSpec>,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub checks: CheckCounts,
}

fn default_tol() -> f64 {
    dynamics::DEFAULT_TOL
}

/// Shipped default configuration.
pub const DEFAULT_CONFIG_JSON: &str = include_str!("../configs/default.json");

impl ExperimentConfig {
    pub fn shipped_default() -> Result<Self> {
        Self::from_json(DEFAULT_CONFIG_JSON)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn t_grid(&self) -> Vec<f64> {
        self.sweep
            .t_grid
            .clone()
            .unwrap_or_else(|| dynamics::default_time_grid(8))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config("tol must be positive".into()));
        }
        let sw = &self.sweep;
        if sw.n_values.is_empty() || sw.alpha_values.is_empty() {
            return Err(Error::Config("sweep needs n_values and alpha_values".into()));
        }
        if !"XYZ".contains(sw.b) {
            return Err(Error::Config(format!("B must be X, Y or Z, got {:?}", sw.b)));
        }
        for &n in &sw.n_values {
            LatticeSpec::chain(n).check_simulable(model::DEFAULT_MAX_SITES)?;
            if sw.a.max_site() + 1 >= n {
                return Err(Error::Config(format!("A = {} leaves no room for B on N = {n}", sw.a)));
            }
        }
        if let Some(rs) = &sw.r_values {
            if rs.contains(&0) {
                return Err(Error::Config("r_values must be positive".into()));
            }
        }
        for env in &self.envelopes {
            env.params.validate()?;
            for &alpha in &sw.alpha_values {
                if !env.regime.is_valid(alpha, 1) {
                    return Err(Error::RegimeInvalid {
                        regime: env.regime.name().into(),
                        alpha,
                        d: 1,
                    });
                }
            }
        }
        if self.fit.fit_v && self.fit.grid.iter().all(|v| !(*v > 0.0)) {
            return Err(Error::Config("fit_v needs a grid of positive v values".into()));
        }
        let n = self.model.n;
        if self.clustering.x.iter().any(|&s| s >= n) || self.clustering.x.is_empty() {
            return Err(Error::Config("clustering X must be nonempty and inside the lattice".into()));
        }
        if !self.clustering.case.is_valid(self.model.alpha, 1) {
            return Err(Error::Config(format!(
                "clustering case {:?} invalid for alpha {}",
                self.clustering.case, self.model.alpha
            )));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint::new(
            self.seed,
            [
                ("tol", self.tol),
                ("oracle_tol", self.checks.oracle_tol),
                ("margin_slack", MARGIN_SLACK),
                ("fit_floor", FIT_FLOOR),
            ],
        )
    }
}

// --- Report -------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check_id: String,
    pub criterion: u8,
    pub measured_curve_ref: Option<String>,
    pub envelope_ref: Option<String>,
    pub fitted_constants: BTreeMap<String, f64>,
    /// Envelope minus measurement for envelope checks; (tol − err)/tol for tolerance checks.
    pub margin_min: f64,
    pub pass: bool,
    /// "ok", "degenerate" or "empirical".
    pub status: String,
    pub detail: String,
}

impl CheckRecord {
    fn new(check_id: impl Into<String>, criterion: u8, margin_min: f64, detail: impl Into<String>) -> Self {
        Self {
            check_id: check_id.into(),
            criterion,
            measured_curve_ref: None,
            envelope_ref: None,
            fitted_constants: BTreeMap::new(),
            margin_min,
            pass: margin_min >= -MARGIN_SLACK,
            status: "ok".into(),
            detail: detail.into(),
        }
    }

    /// Tolerance check: err ≤ tol.
    fn tolerance(check_id: impl Into<String>, criterion: u8, err: f64, tol: f64) -> Self {
        let margin = if err.is_finite() { (tol - err) / tol } else { f64::NEG_INFINITY };
        Self::new(check_id, criterion, margin, format!("worst {err:e} vs tolerance {tol:e}"))
    }

    fn boolean(check_id: impl Into<String>, criterion: u8, ok: bool, detail: impl Into<String>) -> Self {
        Self::new(check_id, criterion, if ok { 0.0 } else { -1.0 }, detail)
    }

    fn failed(check_id: impl Into<String>, criterion: u8, err: &Error) -> Self {
        Self::new(check_id, criterion, f64::NEG_INFINITY, format!("error: {err}"))
    }

    fn with_constants(mut self, constants: impl IntoIterator<Item = (&'static str, f64)>) -> Self {
        self.fitted_constants
            .extend(constants.into_iter().map(|(k, v)| (k.to_string(), v)));
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub fingerprint: Fingerprint,
    pub checks: Vec<CheckRecord>,
    pub all_pass: bool,
}

impl VerificationReport {
    fn new(fingerprint: Fingerprint, mut checks: Vec<CheckRecord>) -> Self {
        checks.sort_by(|a, b| a.criterion.cmp(&b.criterion).then_with(|| a.check_id.cmp(&b.check_id)));
        let all_pass = checks.iter().all(|c| c.pass);
        Self {
            fingerprint,
            checks,
            all_pass,
        }
    }

    /// (criterion, pass, number of checks) for each criterion present.
    pub fn criteria(&self) -> Vec<(u8, bool, usize)> {
        let mut out: BTreeMap<u8, (bool, usize)> = BTreeMap::new();
        for c in &self.checks {
            let e = out.entry(c.criterion).or_insert((true, 0));
            e.0 &= c.pass;
            e.1 += 1;
        }
        out.into_iter().map(|(k, (p, n))| (k, p, n)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        io::json_text(Some(&self.fingerprint), self)
    }

    pub fn to_csv(&self) -> String {
        let rows = self.checks.iter().map(|c| {
            vec![
                c.criterion.to_string(),
                c.check_id.clone(),
                io::fmt_f64(c.margin_min),
                c.pass.to_string(),
                c.status.clone(),
            ]
        });
        io::csv_text(
            Some(&self.fingerprint),
            &["criterion", "check_id", "margin_min", "pass", "status"],
            rows,
        )
    }
}

/// Output files keyed by relative path.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Artifacts(pub BTreeMap<String, String>);

impl Artifacts {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        for (name, text) in &self.0 {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, text)?;
        }
        Ok(())
    }
}

// --- Fitting ------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub c: f64,
    pub v: Option<f64>,
    pub degenerate: bool,
    pub margin_min: f64,
}

/// Smallest C with measured ≤ C·shape at every point: the max ratio over
/// points whose measurement exceeds the floor.
pub fn fit_minimal_c(measured: &[f64], shape: &[f64]) -> (f64, bool) {
    let mut c: f64 = 0.0;
    let mut any = false;
    for (&m, &s) in measured.iter().zip(shape) {
        if m > FIT_FLOOR {
            any = true;
            c = c.max(if s > 0.0 { m / s } else { f64::INFINITY });
        }
    }
    if any {
        (c, false)
    } else {
        (FIT_FLOOR, true)
    }
}

pub fn margin_min(measured: &[f64], shape: &[f64], c: f64) -> f64 {
    measured
        .iter()
        .zip(shape)
        .map(|(&m, &s)| if s == 0.0 { -m } else { c * s - m })
        .fold(f64::INFINITY, f64::min)
}

fn log_residual(measured: &[f64], shape: &[f64], c: f64) -> f64 {
    measured
        .iter()
        .zip(shape)
        .filter(|(&m, &s)| m > FIT_FLOOR && s > 0.0)
        .map(|(&m, &s)| (m.ln() - (c * s).ln()).powi(2))
        .sum()
}

/// Minimal-C fit, optionally profiling v over a grid by log-space least squares.
pub fn fit_envelope(measured: &[f64], shape_for_v: impl Fn(f64) -> Result<Vec<f64>>, v0: f64, fit: &FitConfig) -> Result<Fit> {
    let mut v_best = v0;
    if fit.fit_v {
        let mut best = f64::INFINITY;
        for &v in fit.grid.iter().filter(|v| **v > 0.0) {
            let shape = shape_for_v(v)?;
            let (c, _) = fit_minimal_c(measured, &shape);
            let res = log_residual(measured, &shape, c);
            if res < best {
                best = res;
                v_best = v;
            }
        }
    }
    let shape = shape_for_v(v_best)?;
    let (c, degenerate) = if fit.fit_c { fit_minimal_c(measured, &shape) } else { (1.0, false) };
    Ok(Fit {
        c,
        v: fit.fit_v.then_some(v_best),
        degenerate,
        margin_min: margin_min(measured, &shape, c),
    })
}

fn is_nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + 1e-12)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// --- Light-cone suite ---------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Quantity {
    Commutator,
    Truncation,
    JointVsSeparate,
}

impl Quantity {
    const ALL: [Quantity; 3] = [Quantity::Commutator, Quantity::Truncation, Quantity::JointVsSeparate];

    fn name(self) -> &'static str {
        match self {
            Quantity::Commutator => "commutator",
            Quantity::Truncation => "truncation",
            Quantity::JointVsSeparate => "joint_vs_separate",
        }
    }
}

/// Measured (r, t, value) samples with integrator bookkeeping per r.
#[derive(Clone, Debug, Default)]
struct Table {
    points: Vec<(f64, f64, f64)>,
    curves: Vec<(usize, Curve)>,
}

impl Table {
    fn push(&mut self, r: usize, curve: Curve) {
        for (&t, &v) in curve.times.iter().zip(&curve.values) {
            self.points.push((r as f64, t, v));
        }
        self.curves.push((r, curve));
    }

    fn csv(&self, fp: &Fingerprint) -> String {
        let rows = self.curves.iter().flat_map(|(r, c)| {
            c.times
                .iter()
                .zip(&c.values)
                .zip(&c.steps)
                .map(move |((t, v), s)| {
                    vec![
                        r.to_string(),
                        io::fmt_f64(*t),
                        io::fmt_f64(*v),
                        s.to_string(),
                        io::fmt_f64(c.max_local_error),
                    ]
                })
        });
        io::csv_text(Some(fp), &["r", "t", "value", "integrator_steps", "max_local_error"], rows)
    }
}

struct LightconeJob {
    n: usize,
    alpha: f64,
    tables: BTreeMap<Quantity, Table>,
}

fn job_key(n: usize, alpha: f64) -> String {
    format!("N{n}_a{alpha}")
}

fn curve_from(grid: &[f64], values: Vec<f64>, runs: &[&dynamics::EvolutionResult]) -> Curve {
    let steps = (0..grid.len()).map(|k| runs.iter().map(|r| r.steps_at[k]).sum()).collect();
    Curve {
        times: grid.to_vec(),
        values,
        steps,
        max_local_error: runs.iter().map(|r| r.stats.max_local_error).fold(0.0, f64::max),
    }
}

fn run_lightcone_job(cfg: &ExperimentConfig, n: usize, alpha: f64) -> Result<LightconeJob> {
    let sw = &cfg.sweep;
    let spec = ModelSpec {
        family: sw.family,
        n,
        alpha,
        rates: sw.rates.clone(),
        beta_t: cfg.model.beta_t,
        seed: cfg.seed,
        two_site: cfg.model.two_site,
    };
    let model = spec.build()?;
    let grid = cfg.t_grid();
    let tol = cfg.tol;
    let a = sw.a.operator(n)?;
    let x = Region::new(sw.a.sites())?;
    let max_r = n - 1 - sw.a.max_site();
    let rs: Vec<usize> = match &sw.r_values {
        Some(v) => v.iter().copied().filter(|&r| r <= max_r).collect(),
        None => (1..=max_r).collect(),
    };
    let gen = Liouvillian::new(&model);
    let ea = dynamics::evolve_with(&gen, Direction::Adjoint, &a, &grid, tol)?;
    let mut tables: BTreeMap<Quantity, Table> = BTreeMap::new();
    for &r in &rs {
        let b = DenseOperator::pauli_string(&[(sw.a.max_site() + r, sw.b)], n)?;
        let comm: Vec<f64> = ea
            .snapshots
            .iter()
            .map(|s| dynamics::commutator_norm(&b.matrix, &s.matrix))
            .collect();
        tables
            .entry(Quantity::Commutator)
            .or_default()
            .push(r, curve_from(&grid, comm, &[&ea]));

        let ab = DenseOperator::with_hint(
            linalg::matmul(&a.matrix, &b.matrix),
            a.support_hint.union(&b.support_hint),
        );
        let eab = dynamics::evolve_with(&gen, Direction::Adjoint, &ab, &grid, tol)?;
        let eb = dynamics::evolve_with(&gen, Direction::Adjoint, &b, &grid, tol)?;
        let joint: Vec<f64> = (0..grid.len())
            .map(|k| {
                let prod = linalg::matmul(&ea.snapshots[k].matrix, &eb.snapshots[k].matrix);
                linalg::op_norm(&linalg::sub(&eab.snapshots[k].matrix, &prod))
            })
            .collect();
        tables
            .entry(Quantity::JointVsSeparate)
            .or_default()
            .push(r, curve_from(&grid, joint, &[&eab, &ea, &eb]));

        let truncated = model::truncate_to_ball(&model, &x, r as f64);
        let et = dynamics::evolve_adjoint(&truncated, &a, &grid, tol)?;
        let trunc: Vec<f64> = (0..grid.len())
            .map(|k| linalg::op_norm(&linalg::sub(&ea.snapshots[k].matrix, &et.snapshots[k].matrix)))
            .collect();
        tables
            .entry(Quantity::Truncation)
            .or_default()
            .push(r, curve_from(&grid, trunc, &[&ea, &et]));
    }
    Ok(LightconeJob { n, alpha, tables })
}

fn shape_values(p: &BoundParams, regime: Regime, q: Quantity, points: &[(f64, f64, f64)]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|&(r, t, _)| match q {
            Quantity::Truncation => bounds::envelope_lemma1(p, regime, r, t),
            _ => bounds::envelope_lr(p, regime, r, t),
        })
        .collect()
}

fn lightcone_records(cfg: &ExperimentConfig, jobs: &[LightconeJob], artifacts: &mut Artifacts) -> Result<Vec<CheckRecord>> {
    let fp = cfg.fingerprint();
    let mut records = Vec::new();
    // (alpha key, quantity, regime) -> fitted C per N
    let mut fitted: BTreeMap<(String, &'static str, &'static str), Vec<(usize, f64, bool)>> = BTreeMap::new();
    for job in jobs {
        for q in Quantity::ALL {
            let Some(table) = job.tables.get(&q) else { continue };
            let curve_ref = format!("lightcone/{}_{}.csv", job_key(job.n, job.alpha), q.name());
            artifacts.0.insert(curve_ref.clone(), table.csv(&fp));
            let measured: Vec<f64> = table.points.iter().map(|p| p.2).collect();
            for env in &cfg.envelopes {
                let mut p = env.params;
                p.alpha = job.alpha;
                p.d = 1;
                p.c = 1.0;
                p.n_sites = Some(job.n);
                let fit = fit_envelope(
                    &measured,
                    |v| shape_values(&BoundParams { v, ..p }, env.regime, q, &table.points),
                    p.v,
                    &cfg.fit,
                )?;
                let id = format!("c5.lightcone.{}.{}.{}", job_key(job.n, job.alpha), q.name(), env.regime);
                let mut rec = CheckRecord::new(&id, 5, fit.margin_min, format!("{} points", measured.len()))
                    .with_constants([("C", fit.c)]);
                if let Some(v) = fit.v {
                    rec.fitted_constants.insert("v".into(), v);
                }
                rec.measured_curve_ref = Some(curve_ref.clone());
                rec.envelope_ref = Some(format!("{}:{}", env.regime, if q == Quantity::Truncation { "truncation" } else { "lr" }));
                if fit.degenerate {
                    rec.status = "degenerate".into();
                }
                fitted
                    .entry((format!("a{}", job.alpha), q.name(), env.regime.name()))
                    .or_default()
                    .push((job.n, fit.c, fit.degenerate));
                records.push(rec);
            }
        }
    }
    for ((akey, qname, regime), cs) in fitted {
        let live: Vec<f64> = cs.iter().filter(|c| !c.2).map(|c| c.1).collect();
        let id = format!("c5.cfit_stability.{akey}.{qname}.{regime}");
        if live.len() < 2 {
            let mut rec = CheckRecord::new(id, 5, 0.0, "fewer than two non-degenerate fits");
            rec.status = "degenerate".into();
            records.push(rec);
            continue;
        }
        let hi = live.iter().copied().fold(0.0, f64::max);
        let lo = live.iter().copied().fold(f64::INFINITY, f64::min);
        let ratio = hi / lo;
        let detail = cs
            .iter()
            .map(|(n, c, _)| format!("N{n}:{c:e}"))
            .collect::<Vec<_>>()
            .join(" ");
        records.push(
            CheckRecord::new(id, 5, 1.0 - ratio / 2.0, format!("C_fit max/min = {ratio:.4} ({detail})"))
                .with_constants([("ratio", ratio), ("C_min", lo), ("C_max", hi)]),
        );
    }
    Ok(records)
}

fn lightcone_jobs(cfg: &ExperimentConfig) -> Result<Vec<LightconeJob>> {
    let keys: Vec<(usize, f64)> = cfg
        .sweep
        .n_values
        .iter()
        .flat_map(|&n| cfg.sweep.alpha_values.iter().map(move |&a| (n, a)))
        .collect();
    keys.into_par_iter()
        .map(|(n, a)| run_lightcone_job(cfg, n, a))
        .collect()
}

/// Light-cone measurements with minimal-C envelope fits (criterion 5).
pub fn run_lightcone_suite(cfg: &ExperimentConfig) -> Result<(VerificationReport, Artifacts)> {
    let mut artifacts = Artifacts::default();
    let jobs = lightcone_jobs(cfg)?;
    let records = lightcone_records(cfg, &jobs, &mut artifacts)?;
    let report = VerificationReport::new(cfg.fingerprint(), records);
    artifacts.0.insert("lightcone/report.json".into(), report.to_json()?);
    Ok((report, artifacts))
}

// --- Clustering suite ---------------------------------------------------------

/// Brute-force T for two qubits: every Bloch direction n on a 100×100
/// (θ, φ) grid that contains the poles and axes, maximised exactly over the
/// second direction. Identity parts never contribute because Δ has zero marginals.
pub fn brute_force_t_two_qubits(rho: &CMat) -> Result<f64> {
    if rho.nrows() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.nrows(),
        });
    }
    let r0 = superop::partial_trace(rho, &[0])?;
    let r1 = superop::partial_trace(rho, &[1])?;
    let delta = linalg::sub(rho, &linalg::kron(&r0, &r1));
    let paulis: Vec<CMat> = ['X', 'Y', 'Z'].iter().map(|&c| linalg::pauli(c).unwrap()).collect();
    let mut corr = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            corr[i][j] = linalg::trace_prod(&linalg::kron(&paulis[i], &paulis[j]), &delta).re;
        }
    }
    let mut best: f64 = 0.0;
    for it in 0..100 {
        let theta = std::f64::consts::PI * it as f64 / 99.0;
        for ip in 0..100 {
            let phi = 2.0 * std::f64::consts::PI * ip as f64 / 100.0;
            let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            let m: Vec<f64> = (0..3).map(|j| (0..3).map(|i| n[i] * corr[i][j]).sum()).collect();
            best = best.max(m.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
    }
    Ok(best)
}

/// Spectral data for every distinct model, computed once.
pub struct SpectralCache {
    entries: Vec<(ModelSpec, LindbladModel, Result<SpectralData>)>,
}

impl SpectralCache {
    pub fn build(specs: &[ModelSpec]) -> Result<Self> {
        let mut unique: Vec<ModelSpec> = Vec::new();
        for s in specs {
            if !unique.contains(s) {
                unique.push(s.clone());
            }
        }
        let models: Vec<LindbladModel> = unique.iter().map(|s| s.build()).collect::<Result<_>>()?;
        let data: Vec<Result<SpectralData>> = models.par_iter().map(spectral::analyze).collect();
        Ok(Self {
            entries: unique
                .into_iter()
                .zip(models)
                .zip(data)
                .map(|((s, m), d)| (s, m, d))
                .collect(),
        })
    }

    pub fn get(&self, spec: &ModelSpec) -> Option<(&LindbladModel, &Result<SpectralData>)> {
        self.entries.iter().find(|e| &e.0 == spec).map(|e| (&e.1, &e.2))
    }
}

fn mixing_grid(gap: f64) -> Vec<f64> {
    (1..=240).map(|k| 0.25 * k as f64 / gap).collect()
}

fn clustering_records(cfg: &ExperimentConfig, cache: &SpectralCache, artifacts: &mut Artifacts) -> Result<Vec<CheckRecord>> {
    let fp = cfg.fingerprint();
    let mut records = Vec::new();
    let (model, sdata) = cache
        .get(&cfg.model)
        .ok_or_else(|| Error::Config("clustering model missing from cache".into()))?;
    let sdata = match sdata {
        Ok(s) => s,
        Err(e) => return Ok(vec![CheckRecord::failed("c8.clustering.analyze", 8, e)]),
    };
    let n = model.num_sites();
    let lattice = model.lattice;
    let x = Region::new(cfg.clustering.x.iter().copied())?;
    let sigma = &sdata.steady_state.matrix;
    let reversible = sdata.half_reversibility().map(|c| c.reversible).unwrap_or(false) && sdata.primitive;
    let theorem_status = if reversible { "ok" } else { "empirical" };

    let ys: Vec<Region> = (0..n)
        .filter(|s| !x.contains(*s))
        .map(Region::single)
        .filter(|y| y.dist(&x, &lattice) >= 1.0)
        .collect();
    let mut ys_sorted = ys.clone();
    ys_sorted.sort_by(|a, b| a.dist(&x, &lattice).total_cmp(&b.dist(&x, &lattice)).then(a.sites().cmp(b.sites())));

    let corr: Vec<correlations::CorrelationRecord> = ys_sorted
        .iter()
        .enumerate()
        .map(|(k, y)| correlations::covariance_correlation(sigma, &x, y, cfg.seed.wrapping_add(k as u64)))
        .collect::<Result<_>>()?;

    let mut perturbed_sigma: Option<CMat> = None;
    let pert = model::add_local_perturbation(
        model,
        &x.sites()
            .iter()
            .map(|&s| LocalTerm::jump(vec![s], linalg::sigma_minus(), cfg.clustering.perturbation_rate.sqrt()))
            .collect::<Vec<_>>(),
        &x,
    )?;
    let sp = spectral::analyze(&pert)?;
    if sp.primitive {
        perturbed_sigma = Some(sp.steady_state.matrix.clone());
    }
    let stability = match &perturbed_sigma {
        Some(s1) => correlations::stability_from_states(sigma, s1, &x, &ys_sorted, &lattice)?,
        None => Vec::new(),
    };

    let rs: Vec<f64> = corr.iter().map(|c| c.r).collect();
    let t_vals: Vec<f64> = corr.iter().map(|c| c.t_value).collect();
    let i_vals: Vec<f64> = corr.iter().map(|c| c.mutual_info).collect();
    let s_vals: Vec<f64> = stability.iter().map(|p| p.distance).collect();

    let rows = (0..rs.len()).map(|k| {
        vec![
            io::fmt_f64(rs[k]),
            io::fmt_f64(t_vals[k]),
            io::fmt_f64(i_vals[k]),
            s_vals.get(k).map(|v| io::fmt_f64(*v)).unwrap_or_default(),
            corr[k].optimizer_trace.converged.to_string(),
        ]
    });
    let curve_ref = "clustering/correlations.csv".to_string();
    artifacts.0.insert(
        curve_ref.clone(),
        io::csv_text(Some(&fp), &["r", "T_value", "mutual_info", "stability", "converged"], rows),
    );
    artifacts.0.insert("clustering/records.json".into(), io::json_text(Some(&fp), &corr)?);

    // Envelope comparisons.
    let min_eig = sdata.steady_state_min_eig();
    let ln_inv = (1.0 / min_eig).ln();
    let ln_inv_pert = perturbed_sigma
        .as_ref()
        .and_then(|s| linalg::hermitian_eigvals(s).ok())
        .map(|v| (1.0 / v.into_iter().fold(f64::INFINITY, f64::min)).ln())
        .unwrap_or(ln_inv)
        .max(ln_inv);
    let beta_ls = if sdata.primitive && min_eig > spectral::FULL_RANK_TOL {
        let samples = correlations::random_product_states(n, cfg.checks.mixing_samples, cfg.seed ^ 0x5eed);
        correlations::estimate_mixing_rate(model, sdata, &samples, &mixing_grid(sdata.gap))?.beta_est
    } else {
        sdata.gap
    };
    let base = BoundParams {
        alpha: model.alpha,
        d: 1,
        c: 1.0,
        v: cfg.clustering.v,
        lambda: sdata.gap,
        beta_ls: beta_ls.max(f64::MIN_POSITIVE),
        ..BoundParams::default()
    };
    let mut fit_theorem = |name: &str, which: TheoremKind, vals: &[f64], log_inv: f64| -> Result<()> {
        let id = format!("c8.clustering.{name}");
        if vals.is_empty() {
            records.push(CheckRecord::boolean(id, 8, false, "no measurements"));
            return Ok(());
        }
        // Logarithmic forms are only defined for r > 1.
        let log_case = cfg.clustering.case != TheoremCase::Exponential;
        let (pts, shape): (Vec<f64>, Vec<f64>) = rs
            .iter()
            .zip(vals)
            .filter(|(&r, _)| !log_case || r > 1.0)
            .map(|(&r, &v)| Ok((v, bounds::envelope_theorem(&base, which, cfg.clustering.case, r, log_inv)?)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        if pts.is_empty() {
            records.push(CheckRecord::boolean(id, 8, false, "no separations inside the envelope's domain"));
            return Ok(());
        }
        let (c, degenerate) = fit_minimal_c(&pts, &shape);
        let margin = margin_min(&pts, &shape, c);
        let mono = is_nonincreasing(vals);
        let mut rec = CheckRecord::new(
            &id,
            8,
            if mono { margin } else { margin.min(-1.0) },
            format!("values {:?}; nonincreasing in r: {mono}", vals.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>()),
        )
        .with_constants([("c", c)]);
        rec.measured_curve_ref = Some(curve_ref.clone());
        rec.envelope_ref = Some(format!("theorem:{which:?}:{:?}", cfg.clustering.case));
        rec.status = if degenerate { "degenerate".into() } else { theorem_status.into() };
        records.push(rec);
        Ok(())
    };
    fit_theorem("covariance", TheoremKind::Covariance, &t_vals, ln_inv)?;
    fit_theorem("mutual_info", TheoremKind::MutualInfo, &i_vals, ln_inv)?;
    fit_theorem("stability", TheoremKind::Stability, &s_vals, ln_inv_pert)?;

    let converged = corr.iter().all(|c| c.optimizer_trace.converged && c.optimizer_trace.monotone);
    records.push(CheckRecord::boolean(
        "c8.clustering.optimizer_trace",
        8,
        converged,
        "every restart converged and ascended monotonically",
    ));

    // Exponent report: α′ < α̃ ⟺ α > (3x+4)d/x with x = v/λ.
    let ap = bounds::alpha_prime(base.alpha, 1, base.v, base.lambda);
    let at = bounds::alpha_tilde(base.alpha, 1);
    let thr = bounds::dominance_threshold(base.v, base.lambda, 1);
    records.push(
        CheckRecord::boolean(
            "c8.clustering.exponent_relation",
            8,
            (ap < at) == (base.alpha > thr),
            format!("alpha' = {ap:.6e}, alpha~ = {at}, threshold = {thr:.6e}"),
        )
        .with_constants([
            ("alpha_prime", ap),
            ("alpha_tilde", at),
            ("threshold", thr),
            ("lambda", base.lambda),
            ("v", base.v),
            ("beta_ls", base.beta_ls),
        ]),
    );

    // Optimizer against the brute-force oracle on two-qubit instances.
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let bell = linalg::projector(&[linalg::c(s), linalg::ZERO, linalg::ZERO, linalg::c(s)]);
    let classical = faer::Mat::from_fn(4, 4, |i, j| if i == j && (i == 0 || i == 3) { linalg::c(0.5) } else { linalg::ZERO });
    let mut rng = rng_for(cfg.seed, 8);
    let product = linalg::kron(&linalg::random_density(2, &mut rng), &linalg::random_density(2, &mut rng));
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (name, rho, expect) in [("bell", &bell, Some(1.0)), ("product", &product, Some(0.0)), ("classical", &classical, None)] {
        let (t, _) = correlations::covariance_t(rho, &Region::single(0), &Region::single(1), correlations::DEFAULT_RESTARTS, cfg.seed)?;
        let oracle = brute_force_t_two_qubits(rho)?;
        let mut err = (t - oracle).abs();
        if let Some(e) = expect {
            err = err.max((t - e).abs());
        }
        worst = worst.max(err);
        detail.push(format!("{name}: T={t:.9} oracle={oracle:.9}"));
    }
    let mut rec = CheckRecord::tolerance("c8.t_oracle_two_qubit", 8, worst, 1e-6);
    rec.detail = detail.join("; ");
    records.push(rec);
    Ok(records)
}

/// Steady-state clustering measurements on the configured model (criterion 8).
pub fn run_clustering_suite(cfg: &ExperimentConfig) -> Result<(VerificationReport, Artifacts)> {
    let cache = SpectralCache::build(std::slice::from_ref(&cfg.model))?;
    let mut artifacts = Artifacts::default();
    let records = clustering_records(cfg, &cache, &mut artifacts)?;
    let report = VerificationReport::new(cfg.fingerprint(), records);
    artifacts.0.insert("clustering/report.json".into(), report.to_json()?);
    Ok((report, artifacts))
}

// --- Remaining criteria -------------------------------------------------------

fn random_case(rng: &mut ChaCha8Rng, max_n: usize) -> Result<LindbladModel> {
    let n = rng.random_range(1..=max_n);
    let alpha = rng.random_range(1.5..5.0);
    let lattice = LatticeSpec::chain(n);
    match rng.random_range(0..3) {
        0 => model::random_model(&lattice, alpha, rng),
        1 => model::build_xy_damped(&lattice, alpha, rng.random_range(0.05..0.5), rng.random_range(0.0..0.5)),
        _ => model::build_davies(
            &lattice,
            &model::DaviesParams {
                alpha,
                ising_scale: rng.random_range(0.2..1.5),
                beta_t: rng.random_range(0.0..2.0),
                base_rate: 1.0,
                field: rng.random_range(-0.5..0.5),
                two_site: rng.random_bool(0.5),
            },
        ),
    }
}

fn normalized_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMat {
    let h = linalg::random_hermitian(dim, rng);
    linalg::scale(&h, linalg::c(1.0 / linalg::op_norm(&h)))
}

fn criterion1(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let cases = cfg.checks.structure_cases;
    let tol = 1e-10;
    let results: Vec<(f64, f64, f64)> = (0..cases)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64, f64)> {
            let mut rng = rng_for(cfg.seed, 100 + k as u64);
            let model = random_case(&mut rng, 5)?;
            let n = model.num_sites();
            let d = model.hilbert_dim();
            let gen = Liouvillian::new(&model);
            let id = gen.apply(Direction::Adjoint, &DenseOperator::identity(n))?;
            let e_id = linalg::max_abs(&id.matrix);

            let rho = DenseOperator::new(linalg::random_density(d, &mut rng))?;
            let ev = dynamics::evolve_with(&gen, Direction::Forward, &rho, &[0.1, 0.5], cfg.tol)?;
            let lrho = gen.apply(Direction::Forward, &rho)?;
            let mut e_tr = linalg::trace(&lrho.matrix).norm();
            for s in &ev.snapshots {
                e_tr = e_tr.max((linalg::trace(&s.matrix) - linalg::ONE).norm());
            }

            let h = DenseOperator::new(normalized_hermitian(d, &mut rng))?;
            let e_h = linalg::hermiticity_defect(&gen.apply(Direction::Adjoint, &h)?.matrix)
                .max(linalg::hermiticity_defect(&gen.apply(Direction::Forward, &h)?.matrix));
            Ok((e_id, e_tr, e_h))
        })
        .collect::<Result<_>>()?;
    let worst = |f: fn(&(f64, f64, f64)) -> f64| results.iter().map(f).fold(0.0, f64::max);
    Ok(vec![
        CheckRecord::tolerance("c1.adjoint_identity", 1, worst(|r| r.0), tol),
        CheckRecord::tolerance("c1.trace_preservation", 1, worst(|r| r.1), tol),
        CheckRecord::tolerance("c1.hermiticity", 1, worst(|r| r.2), tol),
    ])
}

fn criterion2(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let grid = [0.1, 0.4, 1.0];
    let errs: Vec<f64> = (0..cfg.checks.oracle_cases)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut rng = rng_for(cfg.seed, 1000 + k as u64);
            let model = random_case(&mut rng, 4)?;
            let d = model.hilbert_dim();
            let dir = if k % 2 == 0 { Direction::Adjoint } else { Direction::Forward };
            let op = match dir {
                Direction::Adjoint => normalized_hermitian(d, &mut rng),
                Direction::Forward => linalg::random_density(d, &mut rng),
            };
            let gen = Liouvillian::new(&model);
            let ev = dynamics::evolve_with(&gen, dir, &DenseOperator::new(op.clone())?, &grid, cfg.checks.oracle_tol)?;
            let oracle = dynamics::evolve_dense_oracle(&model, &op, &grid, dir)?;
            Ok(ev
                .snapshots
                .iter()
                .zip(&oracle)
                .map(|(a, b)| linalg::max_abs_diff(&a.matrix, b))
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(vec![CheckRecord::tolerance(
        "c2.oracle_equivalence",
        2,
        errs.into_iter().fold(0.0, f64::max),
        1e-8,
    )])
}

fn davies_specs(cfg: &ExperimentConfig) -> Vec<ModelSpec> {
    let mut specs = cfg.davies_models.clone();
    if cfg.model.family == ModelFamily::Davies && !specs.contains(&cfg.model) {
        specs.push(cfg.model.clone());
    }
    specs
}

fn spec_key(s: &ModelSpec) -> String {
    format!("{:?}_N{}_a{}_b{}", s.family, s.n, s.alpha, s.beta_t).to_lowercase()
}

fn criterion3(cfg: &ExperimentConfig, cache: &SpectralCache) -> Result<Vec<CheckRecord>> {
    let mut records = Vec::new();
    for spec in davies_specs(cfg).iter().filter(|s| (3..=4).contains(&s.n)) {
        let key = spec_key(spec);
        let Some((model, sdata)) = cache.get(spec) else { continue };
        let sdata = match sdata {
            Ok(s) => s,
            Err(e) => {
                records.push(CheckRecord::failed(format!("c3.{key}.analyze"), 3, e));
                continue;
            }
        };
        records.push(CheckRecord::tolerance(format!("c3.{key}.biorthonormality"), 3, sdata.biorthonormality_defect(), 1e-8));
        records.push(CheckRecord::tolerance(format!("c3.{key}.real_spectrum"), 3, sdata.max_imag(), 1e-8));
        let grid: Vec<f64> = [0.0, 0.1, 0.3, 1.0, 3.0, 10.0].iter().map(|c| c / sdata.gap).collect();
        let mut rng = rng_for(cfg.seed, 3000 + spec.n as u64);
        let d = model.hilbert_dim();
        let mut var_worst: f64 = 0.0;
        let mut cov_worst: f64 = 0.0;
        for _ in 0..cfg.checks.decay_samples {
            let f = normalized_hermitian(d, &mut rng);
            let g = normalized_hermitian(d, &mut rng);
            var_worst = var_worst.max(spectral::check_variance_decay(model, sdata, &f, &grid)?.worst_ratio);
            cov_worst = cov_worst.max(spectral::check_covariance_decay(model, sdata, &f, &g, &grid)?.worst_ratio);
        }
        records.push(
            CheckRecord::new(
                format!("c3.{key}.variance_decay"),
                3,
                1.0 + 1e-6 - var_worst,
                format!("worst Var[f_t] e^(2 lambda t)/Var[f] = {var_worst:.9}"),
            )
            .with_constants([("lambda", sdata.gap)]),
        );
        records.push(
            CheckRecord::new(
                format!("c3.{key}.covariance_decay"),
                3,
                1.0 - cov_worst,
                format!("worst |Cov| / (4|f||g| e^(-2 lambda t)) = {cov_worst:.9}"),
            )
            .with_constants([("lambda", sdata.gap)]),
        );
    }
    Ok(records)
}

fn criterion4(cfg: &ExperimentConfig, cache: &SpectralCache) -> Result<Vec<CheckRecord>> {
    let mut records = Vec::new();
    for spec in davies_specs(cfg) {
        let key = spec_key(&spec);
        let Some((_, sdata)) = cache.get(&spec) else { continue };
        let id = format!("c4.{key}.reversible");
        let rec = match sdata {
            Ok(s) => match s.half_reversibility() {
                Ok(c) => CheckRecord::tolerance(id, 4, c.residual, spectral::REVERSIBLE_TOL),
                Err(e) => CheckRecord::failed(id, 4, &e),
            },
            Err(e) => CheckRecord::failed(id, 4, e),
        };
        records.push(rec);
    }
    let xy = ModelSpec {
        family: ModelFamily::XyDamped,
        n: cfg.sweep.n_values.iter().copied().min().unwrap_or(4),
        alpha: cfg.sweep.alpha_values.first().copied().unwrap_or(3.0),
        rates: cfg.sweep.rates.clone(),
        beta_t: 0.0,
        seed: cfg.seed,
        two_site: true,
    };
    let model = xy.build()?;
    let outcome = spectral::analyze(&model).and_then(|s| s.half_reversibility());
    let (ok, detail) = match outcome {
        Err(Error::SingularSteadyState(m)) => (true, format!("SingularSteadyState (min eigenvalue {m:e})")),
        Ok(c) if !c.reversible => (true, format!("non-reversible, residual {:e}", c.residual)),
        Ok(c) => (false, format!("reported reversible, residual {:e}", c.residual)),
        Err(e) => (false, format!("unexpected error: {e}")),
    };
    records.push(CheckRecord::boolean(format!("c4.{}.not_reversible", spec_key(&xy)), 4, ok, detail));
    Ok(records)
}

fn criterion6(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = rng_for(cfg.seed, 6);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cfg.checks.minimize_h_draws {
        let regime = [Regime::Hk, Regime::Zx, Regime::PowerLaw, Regime::Linear][rng.random_range(0..4)];
        let p = BoundParams {
            alpha: rng.random_range(3.2..8.0),
            d: 1,
            c: rng.random_range(0.1..3.0),
            v: rng.random_range(0.2..4.0),
            k: rng.random_range(0.1..5.0),
            mu: rng.random_range(0.1..0.9),
            gamma_f: 0.25,
            lambda: rng.random_range(0.05..2.0),
            beta_ls: 1.0,
            n_sites: None,
        };
        let r = rng.random_range(2.0..200.0);
        worst = worst.max(bounds::audit_minimize_h(&p, regime, r, 1000)?);
    }
    let mut records = vec![CheckRecord::new(
        "c6.minimize_h_audit",
        6,
        1e-12 - worst,
        format!("worst h(t_star) - grid min = {worst:e}"),
    )];
    let p = BoundParams {
        alpha: 3.0,
        v: 1.5,
        lambda: 0.4,
        ..BoundParams::default()
    };
    let rs: Vec<f64> = (4..=12).map(|k| 2f64.powi(k)).collect();
    let hs: Vec<f64> = rs
        .iter()
        .map(|&r| bounds::minimize_h(&p, Regime::Hk, r).map(|m| m.h_min))
        .collect::<Result<_>>()?;
    let slope = bounds::loglog_slope(&rs, &hs);
    let want = -bounds::alpha_prime(p.alpha, p.d, p.v, p.lambda);
    records.push(
        CheckRecord::tolerance("c6.exact_slope", 6, (slope - want).abs(), 0.05).with_constants([("slope", slope), ("expected", want)]),
    );
    Ok(records)
}

/// Independent recomputations by direct search.
fn n_q_search(mu: f64, gamma: f64, r: f64, q: u32) -> u64 {
    let unit = 2f64.powf(q as f64 * (1.0 + gamma));
    let target = mu * r;
    let mut k = (target / unit) as u64;
    while (k as f64) * unit < target {
        k += 1;
    }
    while k > 0 && ((k - 1) as f64) * unit >= target {
        k -= 1;
    }
    k
}

fn largest_q_search(limit_log2: f64, gamma: f64) -> i64 {
    let mut q: i64 = -64;
    while ((q + 1) as f64) * (1.0 + gamma) <= limit_log2 {
        q += 1;
    }
    q
}

fn criterion7(cfg: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let gamma = 0.25;
    let (alpha, t) = (5.0, 0.1);
    let rs: Vec<u64> = (5..=14).map(|k| 1u64 << k).collect();
    let mut budget_ok = true;
    let mut mus = Vec::new();
    for &r in &rs {
        let mu = bounds::auto_mu(gamma, r)?;
        budget_ok &= bounds::budget_sum(mu, gamma, r) < r as u128;
        mus.push(mu);
    }
    let mut records = vec![CheckRecord::boolean(
        "c7.auto_mu_budget",
        7,
        budget_ok,
        format!("mu per r: {:?}", mus.iter().map(|m| format!("{m:.6}")).collect::<Vec<_>>()),
    )];
    let mu = mus.iter().copied().fold(f64::INFINITY, f64::min);
    let scaled: Vec<f64> = rs
        .iter()
        .map(|&r| {
            bounds::envelope_appendix_f_with_mu(alpha, gamma, r, t, mu)
                .map(|s| s.total * (r as f64).powf(s.exponent) / t)
        })
        .collect::<Result<_>>()?;
    let rf: Vec<f64> = rs.iter().map(|&r| r as f64).collect();
    let slope = bounds::loglog_slope(&rf, &scaled);
    records.push(
        CheckRecord::tolerance("c7.flatness", 7, slope.abs(), 0.1).with_constants([("slope", slope), ("mu", mu)]),
    );
    let mut rng = rng_for(cfg.seed, 7);
    let mut mismatches = 0usize;
    for _ in 0..cfg.checks.series_samples {
        let mu = rng.random_range(0.01..2.0);
        let g = rng.random_range(0.01..0.99);
        let r = rng.random_range(2u64..100_000) as f64;
        let q = rng.random_range(0u32..20);
        let lg = |x: f64| x.log2();
        if bounds::n_q(mu, g, r, q) != n_q_search(mu, g, r, q)
            || bounds::q_star(mu, g, r) != largest_q_search((1.0 - g) * lg(mu * r), g)
            || bounds::q_zero(mu, g, r) != largest_q_search(lg(mu) + (1.0 - g) * lg(r), g)
        {
            mismatches += 1;
        }
    }
    records.push(CheckRecord::boolean(
        "c7.integer_recomputation",
        7,
        mismatches == 0,
        format!("{mismatches} mismatches in {} samples", cfg.checks.series_samples),
    ));
    Ok(records)
}

fn criterion9(cfg: &ExperimentConfig, cache: &SpectralCache) -> Result<Vec<CheckRecord>> {
    let mut records = Vec::new();
    for spec in davies_specs(cfg) {
        let key = spec_key(&spec);
        let Some((model, Ok(sdata))) = cache.get(&spec) else { continue };
        if !sdata.primitive || !sdata.half_reversibility().map(|c| c.reversible).unwrap_or(false) {
            continue;
        }
        let grid = mixing_grid(sdata.gap);
        let n = model.num_sites();
        let est_samples = correlations::random_product_states(n, cfg.checks.mixing_samples, cfg.seed ^ 0x5eed);
        let est = correlations::estimate_mixing_rate(model, sdata, &est_samples, &grid)?;
        records.push(
            CheckRecord::new(
                format!("c9.{key}.beta_vs_gap"),
                9,
                1.0 - est.beta_est / (1.05 * sdata.gap),
                format!("beta_est = {:e}, gap = {:e} ({})", est.beta_est, sdata.gap, est.label),
            )
            .with_constants([("beta_est", est.beta_est), ("gap", sdata.gap)]),
        );
        let fresh = correlations::random_product_states(n, cfg.checks.audit_samples, cfg.seed ^ 0xa0d17);
        let worst = correlations::audit_mixing_bound(model, sdata, est.beta_est, &fresh, &grid)?;
        records.push(CheckRecord::new(
            format!("c9.{key}.fresh_audit"),
            9,
            1.0 - worst,
            format!("worst distance / bound on fresh samples = {worst:.9}"),
        ));
    }
    Ok(records)
}

/// Every check of criteria 1–9 plus optional output artifacts.
pub fn run_checks(cfg: &ExperimentConfig) -> Result<(Vec<CheckRecord>, Artifacts)> {
    let mut specs = davies_specs(cfg);
    specs.push(cfg.model.clone());
    let cache = SpectralCache::build(&specs)?;
    let mut artifacts = Artifacts::default();
    let mut records = Vec::new();
    records.extend(criterion1(cfg)?);
    records.extend(criterion2(cfg)?);
    records.extend(criterion3(cfg, &cache)?);
    records.extend(criterion4(cfg, &cache)?);
    let jobs = lightcone_jobs(cfg)?;
    records.extend(lightcone_records(cfg, &jobs, &mut artifacts)?);
    records.extend(criterion6(cfg)?);
    records.extend(criterion7(cfg)?);
    records.extend(clustering_records(cfg, &cache, &mut artifacts)?);
    records.extend(criterion9(cfg, &cache)?);
    for spec in &specs {
        if let Some((_, Ok(s))) = cache.get(spec) {
            let name = format!("spectral/{}.csv", spec_key(spec));
            artifacts.0.insert(name, io::spectrum_csv(Some(&cfg.fingerprint()), &s.spectrum_rows()));
        }
    }
    Ok((records, artifacts))
}

/// Full verification: criteria 1–9, then a second identical run compared
/// byte-for-byte for criterion 10.
pub fn verify_all(cfg: &ExperimentConfig) -> Result<(VerificationReport, Artifacts)> {
    faer::set_global_parallelism(faer::Par::Seq);
    let (records, mut artifacts) = run_checks(cfg)?;
    let first = VerificationReport::new(cfg.fingerprint(), records.clone());
    let mut all = records;
    if cfg.checks.determinism_rerun {
        let (again, _) = run_checks(cfg)?;
        let second = VerificationReport::new(cfg.fingerprint(), again);
        let same = first.to_json()? == second.to_json()?;
        all.push(CheckRecord::boolean(
            "c10.determinism",
            10,
            same,
            "two runs with the same seed produce identical reports",
        ));
    }
    let report = VerificationReport::new(cfg.fingerprint(), all);
    artifacts.0.insert("report.json".into(), report.to_json()?);
    artifacts.0.insert("report.csv".into(), report.to_csv());
    if let Some(dir) = &cfg.output_dir {
        artifacts.write_to(dir)?;
    }
    Ok((report, artifacts))
}
