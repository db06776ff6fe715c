//! Lattices, regions and long-range Lindblad models.
//!
//! A [`LindbladModel`] is a list of [`LocalTerm`]s on a chain of qubits. Each
//! term carries a small matrix on its support; the site listed first in the
//! support is the most significant bit of the local index, matching the global
//! convention that site 0 is the leftmost tensor factor.

use std::collections::BTreeMap;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ONE, ZERO};

/// Default cap on the number of sites for exact simulation.
pub const DEFAULT_MAX_SITES: usize = 10;

/// Slack allowed when checking the power-law norm condition.
const POWER_LAW_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub dimension: usize,
    pub num_sites: usize,
}

impl LatticeSpec {
    pub fn chain(num_sites: usize) -> Self {
        Self {
            dimension: 1,
            num_sites,
        }
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        (i as f64 - j as f64).abs()
    }

    pub fn hilbert_dim(&self) -> usize {
        1usize << self.num_sites
    }

    /// Exact simulation is restricted to chains within the site cap.
    pub fn check_simulable(&self, cap: usize) -> Result<()> {
        if self.dimension != 1 {
            return Err(Error::InvalidParameter(format!(
                "exact simulation needs d = 1, got d = {}",
                self.dimension
            )));
        }
        if self.num_sites == 0 {
            return Err(Error::InvalidParameter("lattice has no sites".into()));
        }
        if self.num_sites > cap {
            return Err(Error::TooLarge {
                sites: self.num_sites,
                cap,
            });
        }
        Ok(())
    }
}

/// An ordered, duplicate-free, non-empty set of site indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Region(Vec<usize>);

impl Region {
    pub fn new(sites: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut v: Vec<usize> = sites.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        if v.is_empty() {
            return Err(Error::EmptyRegion);
        }
        Ok(Self(v))
    }

    pub fn single(site: usize) -> Self {
        Self(vec![site])
    }

    pub fn full(num_sites: usize) -> Self {
        Self((0..num_sites).collect())
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.0.iter().all(|&s| other.contains(s))
    }

    pub fn is_disjoint(&self, other: &Region) -> bool {
        self.0.iter().all(|&s| !other.contains(s))
    }

    pub fn overlaps(&self, sites: &[usize]) -> bool {
        sites.iter().any(|&s| self.contains(s))
    }

    pub fn union(&self, other: &Region) -> Region {
        Region::new(self.0.iter().chain(other.0.iter()).copied()).expect("non-empty union")
    }

    pub fn union_sites(&self, sites: &[usize]) -> Region {
        Region::new(self.0.iter().chain(sites.iter()).copied()).expect("non-empty union")
    }

    pub fn max_site(&self) -> usize {
        *self.0.last().expect("non-empty region")
    }

    /// min over member pairs of dist(x, y).
    pub fn dist(&self, other: &Region, lattice: &LatticeSpec) -> f64 {
        let mut best = f64::INFINITY;
        for &x in &self.0 {
            for &y in &other.0 {
                best = best.min(lattice.dist(x, y));
            }
        }
        best
    }

    pub fn dist_to_site(&self, site: usize, lattice: &LatticeSpec) -> f64 {
        self.0
            .iter()
            .map(|&x| lattice.dist(x, site))
            .fold(f64::INFINITY, f64::min)
    }

    /// Sites within `radius` of this region.
    pub fn ball(&self, radius: f64, lattice: &LatticeSpec) -> Region {
        Region::new(
            (0..lattice.num_sites).filter(|&i| self.dist_to_site(i, lattice) <= radius + 1e-12),
        )
        .expect("ball contains its center")
    }
}

impl TryFrom<Vec<usize>> for Region {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Region::new(v)
    }
}

impl From<Region> for Vec<usize> {
    fn from(r: Region) -> Self {
        r.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TermKind {
    Hamiltonian,
    Jump,
}

/// A Hamiltonian piece `strength * matrix` or a jump operator `strength * matrix`
/// acting on `support`.
#[derive(Clone, Debug)]
pub struct LocalTerm {
    pub kind: TermKind,
    pub support: Vec<usize>,
    pub matrix: CMat,
    pub strength: f64,
}

impl LocalTerm {
    pub fn hamiltonian(support: Vec<usize>, matrix: CMat, strength: f64) -> Self {
        Self {
            kind: TermKind::Hamiltonian,
            support,
            matrix,
            strength,
        }
    }

    pub fn jump(support: Vec<usize>, matrix: CMat, strength: f64) -> Self {
        Self {
            kind: TermKind::Jump,
            support,
            matrix,
            strength,
        }
    }

    /// The operator on the support including the strength factor.
    pub fn scaled_matrix(&self) -> CMat {
        linalg::scale(&self.matrix, linalg::c(self.strength))
    }

    /// Upper bound on the superoperator ∞→∞ norm of this term:
    /// `2 s ‖h‖` for Hamiltonian pieces, `2 s² ‖L‖²` for jumps.
    pub fn norm_proxy(&self) -> f64 {
        let n = linalg::op_norm(&self.matrix);
        match self.kind {
            TermKind::Hamiltonian => 2.0 * self.strength.abs() * n,
            TermKind::Jump => 2.0 * self.strength * self.strength * n * n,
        }
    }

    pub fn validate(&self, num_sites: usize) -> Result<()> {
        if self.support.is_empty() {
            return Err(Error::InvalidParameter("term with empty support".into()));
        }
        let mut s = self.support.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != self.support.len() {
            return Err(Error::InvalidParameter(format!(
                "repeated site in support {:?}",
                self.support
            )));
        }
        if let Some(&bad) = self.support.iter().find(|&&x| x >= num_sites) {
            return Err(Error::InvalidParameter(format!(
                "site {bad} outside lattice of {num_sites} sites"
            )));
        }
        let dim = 1usize << self.support.len();
        if self.matrix.nrows() != dim || self.matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.matrix.nrows(),
            });
        }
        if !self.strength.is_finite() || self.strength < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "strength must be finite and nonnegative, got {}",
                self.strength
            )));
        }
        if self.kind == TermKind::Hamiltonian && linalg::hermiticity_defect(&self.matrix) > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "Hamiltonian term on {:?} is not Hermitian",
                self.support
            )));
        }
        Ok(())
    }

    fn sorted_support(&self) -> Region {
        Region::new(self.support.iter().copied()).expect("validated support")
    }
}

#[derive(Clone, Debug)]
pub struct LindbladModel {
    pub lattice: LatticeSpec,
    pub terms: Vec<LocalTerm>,
    pub alpha: f64,
    pub label: String,
    /// Region the most recent local perturbation was confined to, if any.
    pub perturbation_region: Option<Region>,
}

impl LindbladModel {
    pub fn new(lattice: LatticeSpec, terms: Vec<LocalTerm>, alpha: f64, label: impl Into<String>) -> Result<Self> {
        check_alpha(alpha)?;
        for t in &terms {
            t.validate(lattice.num_sites)?;
        }
        Ok(Self {
            lattice,
            terms,
            alpha,
            label: label.into(),
            perturbation_region: None,
        })
    }

    pub fn num_sites(&self) -> usize {
        self.lattice.num_sites
    }

    pub fn hilbert_dim(&self) -> usize {
        self.lattice.hilbert_dim()
    }

    pub fn has_jumps(&self) -> bool {
        self.terms.iter().any(|t| t.kind == TermKind::Jump)
    }

    /// Per-pair load Σ_{Z ∋ i,j} proxy(Z), keyed by (i, j) with i < j.
    pub fn pair_loads(&self) -> BTreeMap<(usize, usize), f64> {
        pair_loads(&self.terms, self.num_sites())
    }

    /// Largest ratio load(i,j) / dist(i,j)^(-α) over site pairs (0 if no pair terms).
    pub fn power_law_ratio(&self) -> f64 {
        power_law_ratio(&self.terms, &self.lattice, self.alpha)
    }

    pub fn satisfies_power_law(&self) -> bool {
        self.power_law_ratio() <= 1.0 + POWER_LAW_SLACK
    }

    pub fn check_power_law(&self) -> Result<()> {
        let ratio = self.power_law_ratio();
        if ratio > 1.0 + POWER_LAW_SLACK {
            return Err(Error::InvalidParameter(format!(
                "power-law norm condition violated by factor {ratio}"
            )));
        }
        Ok(())
    }

    /// Dense Hamiltonian on the full Hilbert space.
    pub fn hamiltonian_matrix(&self) -> CMat {
        let d = self.hilbert_dim();
        let mut h = linalg::zeros(d);
        for t in self.terms.iter().filter(|t| t.kind == TermKind::Hamiltonian) {
            let e = embed(&t.scaled_matrix(), &t.support, self.num_sites());
            h = linalg::add(&h, &e);
        }
        h
    }

    pub fn to_export(&self) -> ModelExport {
        ModelExport {
            label: self.label.clone(),
            num_sites: self.num_sites(),
            alpha: self.alpha,
            perturbation_region: self.perturbation_region.clone(),
            terms: self.terms.iter().map(TermRecord::from_term).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_export())?)
    }

    pub fn from_export(export: &ModelExport) -> Result<Self> {
        let lattice = LatticeSpec::chain(export.num_sites);
        let terms = export
            .terms
            .iter()
            .map(TermRecord::to_term)
            .collect::<Result<Vec<_>>>()?;
        let mut m = LindbladModel::new(lattice, terms, export.alpha, export.label.clone())?;
        m.perturbation_region = export.perturbation_region.clone();
        Ok(m)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let export: ModelExport = serde_json::from_str(text)?;
        Self::from_export(&export)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be finite and nonnegative, got {x}"
        )));
    }
    Ok(())
}

fn pair_loads(terms: &[LocalTerm], num_sites: usize) -> BTreeMap<(usize, usize), f64> {
    let mut loads = BTreeMap::new();
    for i in 0..num_sites {
        for j in (i + 1)..num_sites {
            loads.insert((i, j), 0.0);
        }
    }
    for t in terms {
        if t.support.len() < 2 {
            continue;
        }
        let p = t.norm_proxy();
        let mut s = t.support.clone();
        s.sort_unstable();
        for a in 0..s.len() {
            for b in (a + 1)..s.len() {
                *loads.entry((s[a], s[b])).or_insert(0.0) += p;
            }
        }
    }
    loads
}

fn power_law_ratio(terms: &[LocalTerm], lattice: &LatticeSpec, alpha: f64) -> f64 {
    pair_loads(terms, lattice.num_sites)
        .into_iter()
        .map(|((i, j), load)| load * lattice.dist(i, j).powf(alpha))
        .fold(0.0, f64::max)
}

/// Scales every multi-site term so the power-law condition holds with
/// equality at the tightest pair. Hamiltonian strengths scale linearly,
/// jump amplitudes by the square root (the proxy is quadratic in them).
fn rescale_into_power_law(terms: &mut [LocalTerm], lattice: &LatticeSpec, alpha: f64) -> f64 {
    let ratio = power_law_ratio(terms, lattice, alpha);
    if ratio <= 1.0 {
        return 1.0;
    }
    let f = 1.0 / ratio;
    for t in terms.iter_mut().filter(|t| t.support.len() >= 2) {
        match t.kind {
            TermKind::Hamiltonian => t.strength *= f,
            TermKind::Jump => t.strength *= f.sqrt(),
        }
    }
    f
}

/// Embeds a local matrix acting on `support` into the full 2^N space.
pub fn embed(local: &CMat, support: &[usize], num_sites: usize) -> CMat {
    let d = 1usize << num_sites;
    let k = support.len();
    let masks: Vec<usize> = support.iter().map(|&s| 1usize << (num_sites - 1 - s)).collect();
    let support_mask: usize = masks.iter().sum();
    let local_index = |full: usize| -> usize {
        let mut idx = 0;
        for (p, m) in masks.iter().enumerate() {
            if full & m != 0 {
                idx |= 1 << (k - 1 - p);
            }
        }
        idx
    };
    Mat::from_fn(d, d, |r, c| {
        if (r & !support_mask) != (c & !support_mask) {
            ZERO
        } else {
            local[(local_index(r), local_index(c))]
        }
    })
}

/// Sites on which a full-space operator acts nontrivially.
fn minimal_support(entries: &[(usize, usize, C64)], num_sites: usize) -> Vec<usize> {
    let lookup: BTreeMap<(usize, usize), C64> = entries.iter().map(|&(r, c, v)| ((r, c), v)).collect();
    let mut support = Vec::new();
    for site in 0..num_sites {
        let m = 1usize << (num_sites - 1 - site);
        let trivial = entries.iter().all(|&(r, c, v)| {
            (r & m) == (c & m) && lookup.get(&(r ^ m, c ^ m)).is_some_and(|w| (w - v).norm() < 1e-14)
        });
        if !trivial {
            support.push(site);
        }
    }
    support
}

/// Restricts a full-space operator that acts trivially off `support` to its local matrix.
fn restrict(entries: &[(usize, usize, C64)], support: &[usize], num_sites: usize) -> CMat {
    let k = support.len();
    let masks: Vec<usize> = support.iter().map(|&s| 1usize << (num_sites - 1 - s)).collect();
    let support_mask: usize = masks.iter().sum();
    let local_index = |full: usize| -> usize {
        let mut idx = 0;
        for (p, m) in masks.iter().enumerate() {
            if full & m != 0 {
                idx |= 1 << (k - 1 - p);
            }
        }
        idx
    };
    let mut local = linalg::zeros(1 << k);
    for &(r, c, v) in entries {
        if r & !support_mask == 0 && c & !support_mask == 0 {
            local[(local_index(r), local_index(c))] = v;
        }
    }
    local
}

/// H = Σ_{i<j} J_ij (X_i X_j + Y_i Y_j), J_ij = s dist^{-α}, plus damping jumps √γ σ⁻_i.
/// The couplings are rescaled when needed so the power-law condition holds.
pub fn build_xy_damped(
    lattice: &LatticeSpec,
    alpha: f64,
    coupling_scale: f64,
    damping_rate: f64,
) -> Result<LindbladModel> {
    check_alpha(alpha)?;
    lattice.check_simulable(DEFAULT_MAX_SITES)?;
    check_nonneg("coupling_scale", coupling_scale)?;
    check_nonneg("damping_rate", damping_rate)?;
    let n = lattice.num_sites;
    let x = linalg::pauli('X').unwrap();
    let y = linalg::pauli('Y').unwrap();
    let hop = linalg::add(&linalg::kron(&x, &x), &linalg::kron(&y, &y));
    let mut terms = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let j_ij = coupling_scale * lattice.dist(i, j).powf(-alpha);
            if j_ij > 0.0 {
                terms.push(LocalTerm::hamiltonian(vec![i, j], hop.clone(), j_ij));
            }
        }
    }
    if damping_rate > 0.0 {
        for i in 0..n {
            terms.push(LocalTerm::jump(vec![i], linalg::sigma_minus(), damping_rate.sqrt()));
        }
    }
    rescale_into_power_law(&mut terms, lattice, alpha);
    let model = LindbladModel::new(
        *lattice,
        terms,
        alpha,
        format!("xy_damped_N{n}_a{alpha}"),
    )?;
    model.check_power_law()?;
    Ok(model)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaviesParams {
    pub alpha: f64,
    pub ising_scale: f64,
    pub beta_t: f64,
    pub base_rate: f64,
    /// Longitudinal field; adds -(field/2) Σ Z_i so `|0>` is favoured.
    #[serde(default)]
    pub field: f64,
    /// Include Bohr components of X_i X_j couplings with rates ∝ dist^{-α}.
    #[serde(default = "default_true")]
    pub two_site: bool,
}

fn default_true() -> bool {
    true
}

/// Classical energies of H̄ = Σ_{i<j} (s/dist^α) Z_i Z_j - (field/2) Σ Z_i on each basis state.
pub fn ising_energies(lattice: &LatticeSpec, alpha: f64, ising_scale: f64, field: f64) -> Vec<f64> {
    let n = lattice.num_sites;
    let spin = |b: usize, i: usize| if b >> (n - 1 - i) & 1 == 0 { 1.0 } else { -1.0 };
    (0..lattice.hilbert_dim())
        .map(|b| {
            let mut e = 0.0;
            for i in 0..n {
                e -= 0.5 * field * spin(b, i);
                for j in (i + 1)..n {
                    e += ising_scale * lattice.dist(i, j).powf(-alpha) * spin(b, i) * spin(b, j);
                }
            }
            e
        })
        .collect()
}

/// Gibbs state of the classical Ising Hamiltonian at inverse temperature `beta_t`.
pub fn gibbs_state(energies: &[f64], beta_t: f64) -> CMat {
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-(beta_t * (e - e0))).exp()).collect();
    let z: f64 = w.iter().sum();
    let d = energies.len();
    Mat::from_fn(d, d, |i, j| if i == j { linalg::c(w[i] / z) } else { ZERO })
}

/// Glauber-type rate for a transition raising the energy by `delta_e`;
/// rate(ΔE) / rate(-ΔE) = exp(-β ΔE).
fn thermal_rate(base: f64, beta_t: f64, delta_e: f64) -> f64 {
    let x = beta_t * delta_e;
    if x > 700.0 {
        0.0
    } else {
        base * 2.0 / (1.0 + x.exp())
    }
}

pub fn build_davies_thermal(
    lattice: &LatticeSpec,
    alpha: f64,
    ising_scale: f64,
    beta_t: f64,
    base_rate: f64,
) -> Result<LindbladModel> {
    build_davies(
        lattice,
        &DaviesParams {
            alpha,
            ising_scale,
            beta_t,
            base_rate,
            field: 0.0,
            two_site: true,
        },
    )
}

/// Davies generator with H = 0: jumps are the Bohr-frequency components of X_i
/// (and X_i X_j when enabled) with respect to the classical Ising H̄.
pub fn build_davies(lattice: &LatticeSpec, p: &DaviesParams) -> Result<LindbladModel> {
    check_alpha(p.alpha)?;
    lattice.check_simulable(DEFAULT_MAX_SITES)?;
    check_nonneg("beta_T", p.beta_t)?;
    check_nonneg("base_rate", p.base_rate)?;
    if !p.ising_scale.is_finite() || !p.field.is_finite() {
        return Err(Error::InvalidParameter("ising_scale and field must be finite".into()));
    }
    let n = lattice.num_sites;
    let energies = ising_energies(lattice, p.alpha, p.ising_scale, p.field);
    let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let bucket = 1e-9 * scale;

    let mut couplings: Vec<(Vec<usize>, f64)> = (0..n).map(|i| (vec![i], p.base_rate)).collect();
    if p.two_site {
        for i in 0..n {
            for j in (i + 1)..n {
                couplings.push((vec![i, j], p.base_rate * lattice.dist(i, j).powf(-p.alpha)));
            }
        }
    }

    let mut terms = Vec::new();
    for (sites, rate0) in couplings {
        if rate0 <= 0.0 {
            continue;
        }
        let flip: usize = sites.iter().map(|&s| 1usize << (n - 1 - s)).sum();
        // Group transitions b -> b ^ flip by energy change.
        let mut groups: BTreeMap<i64, (f64, Vec<(usize, usize, C64)>)> = BTreeMap::new();
        for b in 0..lattice.hilbert_dim() {
            let b2 = b ^ flip;
            let de = energies[b2] - energies[b];
            let key = (de / bucket).round() as i64;
            let g = groups.entry(key).or_insert((de, Vec::new()));
            g.1.push((b2, b, ONE));
        }
        for (_, (de, entries)) in groups {
            let rate = thermal_rate(rate0, p.beta_t, de);
            if rate <= 0.0 {
                continue;
            }
            let support = minimal_support(&entries, n);
            let local = restrict(&entries, &support, n);
            terms.push(LocalTerm::jump(support, local, rate.sqrt()));
        }
    }
    // Z_i commutes with H̄, so its only Bohr component is itself (ω = 0). It
    // breaks the global spin-flip symmetry that would otherwise leave a
    // two-dimensional null space.
    if p.base_rate > 0.0 {
        let z = linalg::pauli('Z').unwrap();
        for i in 0..n {
            terms.push(LocalTerm::jump(vec![i], z.clone(), thermal_rate(p.base_rate, p.beta_t, 0.0).sqrt()));
        }
    }
    rescale_into_power_law(&mut terms, lattice, p.alpha);
    let model = LindbladModel::new(
        *lattice,
        terms,
        p.alpha,
        format!("davies_N{n}_a{}_b{}", p.alpha, p.beta_t),
    )?;
    model.check_power_law()?;
    Ok(model)
}

/// Keeps exactly the terms whose support lies inside the ball of `radius` around `center`.
pub fn truncate_to_ball(model: &LindbladModel, center: &Region, radius: f64) -> LindbladModel {
    let ball = center.ball(radius, &model.lattice);
    let terms = model
        .terms
        .iter()
        .filter(|t| t.support.iter().all(|&s| ball.contains(s)))
        .cloned()
        .collect();
    LindbladModel {
        lattice: model.lattice,
        terms,
        alpha: model.alpha,
        label: format!("{}|ball{:?}r{}", model.label, center.sites(), radius),
        perturbation_region: model.perturbation_region.clone(),
    }
}

/// Appends terms confined to `region`; the original model is untouched.
pub fn add_local_perturbation(
    model: &LindbladModel,
    perturbation: &[LocalTerm],
    region: &Region,
) -> Result<LindbladModel> {
    for t in perturbation {
        t.validate(model.num_sites())?;
        if !t.sorted_support().is_subset_of(region) {
            return Err(Error::SupportViolation {
                support: t.support.clone(),
                region: region.sites().to_vec(),
            });
        }
    }
    let mut out = model.clone();
    out.terms.extend(perturbation.iter().cloned());
    if !perturbation.is_empty() {
        out.perturbation_region = Some(region.clone());
        out.label = format!("{}+pert{:?}", model.label, region.sites());
    }
    Ok(out)
}

/// Random generic model: Hermitian one- and two-site Hamiltonian terms and
/// Ginibre jumps, with two-site strengths ∝ dist^{-α}, rescaled onto the
/// power-law bound.
pub fn random_model<R: rand::Rng + ?Sized>(lattice: &LatticeSpec, alpha: f64, rng: &mut R) -> Result<LindbladModel> {
    check_alpha(alpha)?;
    lattice.check_simulable(DEFAULT_MAX_SITES)?;
    let n = lattice.num_sites;
    let mut terms = Vec::new();
    for i in 0..n {
        terms.push(LocalTerm::hamiltonian(vec![i], linalg::random_hermitian(2, rng), 0.5));
        terms.push(LocalTerm::jump(vec![i], linalg::random_matrix(2, rng), 0.3));
        for j in (i + 1)..n {
            let w = lattice.dist(i, j).powf(-alpha);
            terms.push(LocalTerm::hamiltonian(vec![i, j], linalg::random_hermitian(4, rng), 0.25 * w));
            if rng.random_bool(0.5) {
                terms.push(LocalTerm::jump(vec![i, j], linalg::random_matrix(4, rng), 0.2 * w.sqrt()));
            }
        }
    }
    rescale_into_power_law(&mut terms, lattice, alpha);
    let model = LindbladModel::new(*lattice, terms, alpha, format!("random_N{n}_a{alpha}"))?;
    model.check_power_law()?;
    Ok(model)
}

// --- JSON term export -------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermRecord {
    pub support: Vec<usize>,
    pub kind: TermKind,
    pub strength: f64,
    /// Row-major entries as [re, im] pairs.
    pub matrix: Vec<[f64; 2]>,
}

impl TermRecord {
    fn from_term(t: &LocalTerm) -> Self {
        let d = t.matrix.nrows();
        let mut matrix = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                let z = t.matrix[(i, j)];
                matrix.push([z.re, z.im]);
            }
        }
        Self {
            support: t.support.clone(),
            kind: t.kind,
            strength: t.strength,
            matrix,
        }
    }

    fn to_term(&self) -> Result<LocalTerm> {
        let d = 1usize << self.support.len();
        if self.matrix.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: self.matrix.len(),
            });
        }
        let m = Mat::from_fn(d, d, |i, j| {
            let [re, im] = self.matrix[i * d + j];
            C64::new(re, im)
        });
        Ok(LocalTerm {
            kind: self.kind,
            support: self.support.clone(),
            matrix: m,
            strength: self.strength,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelExport {
    pub label: String,
    pub num_sites: usize,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation_region: Option<Region>,
    pub terms: Vec<TermRecord>,
}

// --- JSON model specification ----------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    XyDamped,
    Davies,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    #[serde(default)]
    pub coupling_scale: Option<f64>,
    #[serde(default)]
    pub damping: Option<f64>,
    #[serde(default)]
    pub ising_scale: Option<f64>,
    #[serde(default)]
    pub base_rate: Option<f64>,
    #[serde(default)]
    pub field: Option<f64>,
}

/// Structured model description as found in config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    #[serde(default)]
    pub rates: Rates,
    #[serde(rename = "beta_T", default)]
    pub beta_t: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub two_site: bool,
}

impl ModelSpec {
    pub fn build(&self) -> Result<LindbladModel> {
        let lattice = LatticeSpec::chain(self.n);
        match self.family {
            ModelFamily::XyDamped => build_xy_damped(
                &lattice,
                self.alpha,
                self.rates.coupling_scale.unwrap_or(0.25),
                self.rates.damping.unwrap_or(0.1),
            ),
            ModelFamily::Davies => build_davies(
                &lattice,
                &DaviesParams {
                    alpha: self.alpha,
                    ising_scale: self.rates.ising_scale.unwrap_or(1.0),
                    beta_t: self.beta_t,
                    base_rate: self.rates.base_rate.unwrap_or(1.0),
                    field: self.rates.field.unwrap_or(0.0),
                    two_site: self.two_site,
                },
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(n: usize) -> LatticeSpec {
        LatticeSpec::chain(n)
    }

    #[test]
    fn dist_is_a_metric() {
        let l = chain(7);
        for i in 0..7 {
            assert_eq!(l.dist(i, i), 0.0);
            for j in 0..7 {
                assert_eq!(l.dist(i, j), l.dist(j, i));
                for k in 0..7 {
                    assert!(l.dist(i, k) <= l.dist(i, j) + l.dist(j, k));
                }
            }
        }
    }

    #[test]
    fn region_distance_and_ball() {
        let l = chain(8);
        let x = Region::new([1, 2]).unwrap();
        let y = Region::new([6, 5]).unwrap();
        assert_eq!(x.dist(&y, &l), 3.0);
        assert_eq!(x.ball(1.0, &l).sites(), &[0, 1, 2, 3]);
        assert!(Region::new(Vec::<usize>::new()).is_err());
    }

    #[test]
    fn xy_two_sites_sits_on_the_power_law_bound() {
        let m = build_xy_damped(&chain(2), 3.0, 10.0, 0.2).unwrap();
        let loads = m.pair_loads();
        assert!((loads[&(0, 1)] - 1.0).abs() < 1e-12);
        // 2 |J01| ‖XX+YY‖ = 1 after rescale, so J01 = 1/4.
        let h = m.terms.iter().find(|t| t.kind == TermKind::Hamiltonian).unwrap();
        assert!((h.strength - 0.25).abs() < 1e-12);
    }

    #[test]
    fn xy_coupling_ratio_follows_distance() {
        let m = build_xy_damped(&chain(3), 3.0, 0.1, 0.0).unwrap();
        let get = |a: usize, b: usize| {
            m.terms
                .iter()
                .find(|t| t.support == vec![a, b])
                .unwrap()
                .strength
        };
        assert!((get(0, 2) / get(0, 1) - 0.125).abs() < 1e-14);
    }

    #[test]
    fn xy_zero_damping_has_no_jumps() {
        let m = build_xy_damped(&chain(4), 2.0, 0.1, 0.0).unwrap();
        assert!(!m.has_jumps());
    }

    #[test]
    fn invalid_alpha_and_cap() {
        assert!(matches!(
            build_xy_damped(&chain(3), 0.0, 0.1, 0.1),
            Err(Error::InvalidAlpha(_))
        ));
        assert!(matches!(
            build_davies_thermal(&chain(11), 3.0, 1.0, 1.0, 1.0),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn every_builder_respects_the_power_law_exhaustively() {
        for n in 1..=6 {
            for &alpha in &[0.5, 1.0, 2.5, 3.0, 4.0] {
                let xy = build_xy_damped(&chain(n), alpha, 1.0, 0.3).unwrap();
                assert!(xy.satisfies_power_law(), "xy n={n} a={alpha}");
                if n <= 5 {
                    let dv = build_davies_thermal(&chain(n), alpha, 1.0, 0.7, 1.0).unwrap();
                    assert!(dv.satisfies_power_law(), "davies n={n} a={alpha}");
                }
            }
        }
    }

    #[test]
    fn davies_without_ising_has_single_site_supports() {
        let m = build_davies(
            &chain(3),
            &DaviesParams {
                alpha: 3.0,
                ising_scale: 0.0,
                beta_t: 1.0,
                base_rate: 1.0,
                field: 0.0,
                two_site: false,
            },
        )
        .unwrap();
        assert_eq!(m.terms.len(), 6);
        for t in &m.terms {
            assert_eq!(t.support.len(), 1);
            let x = linalg::max_abs_diff(&t.matrix, &linalg::pauli('X').unwrap());
            let z = linalg::max_abs_diff(&t.matrix, &linalg::pauli('Z').unwrap());
            assert!(x.min(z) < 1e-15);
        }
    }

    #[test]
    fn davies_jump_pairs_satisfy_rate_ratio() {
        // Single qubit in a field: the two components are σ⁻ and σ⁺.
        let f = 0.8;
        let beta = 1.3;
        let m = build_davies(
            &chain(1),
            &DaviesParams {
                alpha: 3.0,
                ising_scale: 0.0,
                beta_t: beta,
                base_rate: 0.5,
                field: f,
                two_site: true,
            },
        )
        .unwrap();
        assert_eq!(m.terms.len(), 3);
        let rate_of = |label: char| {
            let t = m
                .terms
                .iter()
                .find(|t| linalg::max_abs_diff(&t.matrix, &linalg::pauli(label).unwrap()) < 1e-15)
                .unwrap();
            t.strength * t.strength
        };
        // σ⁺ excites |0> -> |1> (energy up by f).
        assert!((rate_of('+') / rate_of('-') - (-beta * f).exp()).abs() < 1e-12);
    }

    #[test]
    fn truncation_examples() {
        let m = build_xy_damped(&chain(6), 3.0, 0.25, 0.1).unwrap();
        let x = Region::single(0);
        assert_eq!(truncate_to_ball(&m, &x, 6.0).terms.len(), m.terms.len());
        let t0 = truncate_to_ball(&m, &Region::single(3), 0.0);
        assert!(t0.terms.iter().all(|t| t.support == vec![3]));
        let t2 = truncate_to_ball(&m, &x, 2.0);
        assert!(t2.terms.iter().any(|t| t.support == vec![1, 2]));
        assert!(!t2.terms.iter().any(|t| t.support == vec![1, 3]));
    }

    #[test]
    fn truncation_is_idempotent() {
        let m = build_xy_damped(&chain(6), 2.5, 0.25, 0.1).unwrap();
        let c = Region::new([2]).unwrap();
        let once = truncate_to_ball(&m, &c, 2.0);
        let twice = truncate_to_ball(&once, &c, 2.0);
        assert_eq!(once.terms.len(), twice.terms.len());
        for (a, b) in once.terms.iter().zip(&twice.terms) {
            assert_eq!(a.support, b.support);
            assert_eq!(a.strength, b.strength);
        }
    }

    #[test]
    fn perturbation_support_contract() {
        let m = build_xy_damped(&chain(4), 3.0, 0.25, 0.1).unwrap();
        let x = Region::single(0);
        let same = add_local_perturbation(&m, &[], &x).unwrap();
        assert_eq!(same.terms.len(), m.terms.len());
        let ok = LocalTerm::jump(vec![0], linalg::sigma_minus(), 0.3);
        let p = add_local_perturbation(&m, &[ok], &x).unwrap();
        assert_eq!(p.terms.len(), m.terms.len() + 1);
        assert_eq!(p.perturbation_region, Some(x.clone()));
        let bad = LocalTerm::jump(vec![3], linalg::sigma_minus(), 0.3);
        assert!(matches!(
            add_local_perturbation(&m, &[bad], &x),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn json_export_round_trip() {
        let m = build_davies_thermal(&chain(3), 3.0, 1.0, 0.5, 1.0).unwrap();
        let text = m.to_json().unwrap();
        let back = LindbladModel::from_json(&text).unwrap();
        assert_eq!(back.terms.len(), m.terms.len());
        for (a, b) in m.terms.iter().zip(&back.terms) {
            assert_eq!(a.support, b.support);
            assert!(linalg::max_abs_diff(&a.matrix, &b.matrix) == 0.0);
        }
    }

    #[test]
    fn model_spec_from_json() {
        let spec: ModelSpec = serde_json::from_str(
            r#"{"family":"davies","N":3,"alpha":3.0,"rates":{"ising_scale":0.5,"base_rate":1.0},"beta_T":1.0,"seed":7}"#,
        )
        .unwrap();
        let m = spec.build().unwrap();
        assert_eq!(m.num_sites(), 3);
        assert!(m.satisfies_power_law());
    }
}
