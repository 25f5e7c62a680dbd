//! Geometric phases.
//!
//! Eigenstates of a field-phase-rotated Hamiltonian are followed around the
//! closed loop `φ ∈ [0, 2π)` and the Berry phase is taken as the discrete
//! Wilson loop `γ = −arg ∏_k ⟨ψ_k|ψ_{k+1}⟩` with `ψ_K = ψ_0`. The product
//! is independent of the phase of each individual state, so the arbitrary
//! phases returned by the eigensolver drop out.
//!
//! Closed forms for the JC phase, the phase for encircling a conical
//! intersection, and the E×ε Jahn–Teller phase live here as well, together
//! with the `2π⟨n⟩` oracle valid for any family generated by
//! `U(φ) = exp(−iφ a†a)`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::eigensolve::{hermitian_eig_with, EigenError};
use crate::fock::TruncationDim;
use crate::hamiltonians::{
    build_jc_rotated, build_rabi_rotated, excitation_numbers, JcParams, PhaseAngle, RabiParams,
};
use crate::matrix::{inner, norm, ComplexMatrix};
use crate::settings::NumericSettings;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BerryError {
    #[error("loop needs at least 8 steps, got {0}")]
    TooFewSteps(usize),
    #[error("band tracking is ambiguous at phi = {phi}: best overlap {best:.6}, runner-up {runner_up:.6}")]
    BandTrackingAmbiguity { phi: f64, best: f64, runner_up: f64 },
    #[error("tracked band is degenerate at phi = {phi}: gap {gap:e} below floor {floor:e}")]
    DegenerateBand { phi: f64, gap: f64, floor: f64 },
    #[error("truncation leak at phi = {phi}: top-level occupation {occupation:e}")]
    TruncationLeak { phi: f64, occupation: f64 },
    #[error("consecutive overlap {overlap:.6} at step {step} is below the family floor")]
    LowOverlap { step: usize, overlap: f64 },
    #[error("overlap {overlap:e} at step {step} is too small for a Wilson loop")]
    ZeroOverlap { step: usize, overlap: f64 },
    #[error("state {index} is not normalized (norm {norm})")]
    NotNormalized { index: usize, norm: f64 },
    #[error("family states have mismatched dimensions")]
    DimensionMismatch,
    #[error("a state family needs at least one state")]
    EmptyFamily,
    #[error("band {0} does not exist in this Hilbert space")]
    BandOutOfRange(String),
    #[error("excitation-labelled bands need a Hamiltonian with a conserved excitation number")]
    NoConservedExcitation,
    #[error("closed-form phase is undefined for these parameters (vanishing denominator)")]
    DegenerateParameters,
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Uniform closed loop `φ_k = 2πk/K`, `k = 0 … K−1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LoopSpec {
    steps: usize,
}

impl LoopSpec {
    pub fn new(steps: usize) -> Result<Self, BerryError> {
        if steps < 8 {
            return Err(BerryError::TooFewSteps(steps));
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn phi(&self, k: usize) -> f64 {
        TAU * (k % self.steps) as f64 / self.steps as f64
    }

    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.steps).map(|k| self.phi(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

/// Which eigenstate to follow around the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BandSelector {
    /// The `i`-th eigenvalue (ascending) at `φ = 0`.
    Ordinal(usize),
    /// JC dressed state `|n, ±⟩` of the manifold with `n + 1` excitations.
    Excitation { n: usize, branch: Branch },
}

impl BandSelector {
    pub const GROUND: BandSelector = BandSelector::Ordinal(0);
}

impl std::fmt::Display for BandSelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BandSelector::Ordinal(0) => write!(f, "ground"),
            BandSelector::Ordinal(i) => write!(f, "{i}"),
            BandSelector::Excitation { n, branch: Branch::Plus } => write!(f, "{n}+"),
            BandSelector::Excitation { n, branch: Branch::Minus } => write!(f, "{n}-"),
        }
    }
}

impl std::str::FromStr for BandSelector {
    type Err = String;

    /// `ground`, an ordinal such as `3`, or a JC label such as `0+` / `2-`.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "ground" {
            return Ok(BandSelector::GROUND);
        }
        let (digits, branch) = match s.as_bytes().last() {
            Some(b'+') => (&s[..s.len() - 1], Some(Branch::Plus)),
            Some(b'-') => (&s[..s.len() - 1], Some(Branch::Minus)),
            _ => (s, None),
        };
        let n: usize = digits.parse().map_err(|_| format!("invalid band `{s}`"))?;
        Ok(match branch {
            Some(branch) => BandSelector::Excitation { n, branch },
            None => BandSelector::Ordinal(n),
        })
    }
}

/// A Hamiltonian family `H(φ)` over the field-phase loop.
pub trait LoopHamiltonian {
    fn truncation(&self) -> TruncationDim;

    fn at(&self, phi: PhaseAngle) -> ComplexMatrix;

    /// Diagonal of a conserved, basis-diagonal excitation-number operator.
    fn excitation_numbers(&self) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct JcLoop {
    pub params: JcParams,
    pub truncation: TruncationDim,
}

impl LoopHamiltonian for JcLoop {
    fn truncation(&self) -> TruncationDim {
        self.truncation
    }

    fn at(&self, phi: PhaseAngle) -> ComplexMatrix {
        build_jc_rotated(&self.params, phi, self.truncation)
    }

    fn excitation_numbers(&self) -> Option<Vec<f64>> {
        Some(excitation_numbers(self.truncation))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RabiLoop {
    pub params: RabiParams,
    pub truncation: TruncationDim,
}

impl LoopHamiltonian for RabiLoop {
    fn truncation(&self) -> TruncationDim {
        self.truncation
    }

    fn at(&self, phi: PhaseAngle) -> ComplexMatrix {
        build_rabi_rotated(&self.params, phi, self.truncation)
    }
}

/// Normalized states over a closed loop, one tracked band.
#[derive(Debug, Clone)]
pub struct StateFamily {
    states: Vec<Vec<C64>>,
    band: Option<BandSelector>,
    min_tracking_overlap: f64,
    top_level_occupation: Option<f64>,
    n_trunc: Option<usize>,
}

impl StateFamily {
    /// Validates normalization and the overlap floor, including the
    /// closing step from the last state back to the first.
    pub fn new(
        states: Vec<Vec<C64>>,
        band: Option<BandSelector>,
        settings: &NumericSettings,
    ) -> Result<Self, BerryError> {
        let first = states.first().ok_or(BerryError::EmptyFamily)?;
        let dim = first.len();
        for (index, s) in states.iter().enumerate() {
            if s.len() != dim {
                return Err(BerryError::DimensionMismatch);
            }
            let nrm = norm(s);
            if (nrm - 1.0).abs() > settings.normalization_tol {
                return Err(BerryError::NotNormalized { index, norm: nrm });
            }
        }
        let moduli = overlap_moduli(&states);
        let mut min_tracking_overlap: f64 = 1.0;
        for (step, &m) in moduli.iter().enumerate() {
            if m < settings.overlap_floor {
                return Err(BerryError::LowOverlap { step, overlap: m });
            }
            min_tracking_overlap = min_tracking_overlap.min(m);
        }
        Ok(Self { states, band, min_tracking_overlap, top_level_occupation: None, n_trunc: None })
    }

    pub fn states(&self) -> &[Vec<C64>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn band(&self) -> Option<BandSelector> {
        self.band
    }

    pub fn min_tracking_overlap(&self) -> f64 {
        self.min_tracking_overlap
    }

    /// Largest population of the watched top Fock levels along the loop.
    pub fn top_level_occupation(&self) -> Option<f64> {
        self.top_level_occupation
    }

    pub fn n_trunc(&self) -> Option<usize> {
        self.n_trunc
    }

    /// The same states traversed in the opposite direction, starting from
    /// the same base point.
    pub fn reversed(&self) -> Self {
        let mut states = self.states.clone();
        states[1..].reverse();
        Self { states, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerryPhaseResult {
    /// Principal value in `(−π, π]`.
    pub gamma: f64,
    /// Unwrapped sum of the per-step angles `−arg⟨ψ_k|ψ_{k+1}⟩`.
    pub raw_sum: f64,
    pub steps: usize,
    pub n_trunc: Option<usize>,
    pub min_overlap: f64,
    pub overlap_moduli: Vec<f64>,
    pub top_level_occupation: Option<f64>,
}

fn overlap_moduli(states: &[Vec<C64>]) -> Vec<f64> {
    let k = states.len();
    (0..k).map(|i| inner(&states[i], &states[(i + 1) % k]).norm()).collect()
}

/// Principal value in `(−π, π]`.
pub fn principal_value(angle: f64) -> f64 {
    let r = angle.rem_euclid(TAU);
    // `+ 0.0` folds −0 into +0
    if r > PI {
        r - TAU + 0.0
    } else {
        r + 0.0
    }
}

/// `min_k |a − b + 2πk|`.
pub fn mod2pi_distance(a: f64, b: f64) -> f64 {
    principal_value(a - b).abs()
}

/// Wilson loop over a closed list of states (`states[K] ≡ states[0]`).
pub fn wilson_loop_phase_of(
    states: &[Vec<C64>],
    settings: &NumericSettings,
) -> Result<BerryPhaseResult, BerryError> {
    if states.is_empty() {
        return Err(BerryError::EmptyFamily);
    }
    let k = states.len();
    let mut product = C64::new(1.0, 0.0);
    let mut raw_sum = 0.0;
    let mut moduli = Vec::with_capacity(k);
    for step in 0..k {
        let o = inner(&states[step], &states[(step + 1) % k]);
        let m = o.norm();
        if m < settings.zero_overlap {
            return Err(BerryError::ZeroOverlap { step, overlap: m });
        }
        moduli.push(m);
        raw_sum -= o.arg();
        product *= o / m;
        product /= product.norm();
    }
    Ok(BerryPhaseResult {
        gamma: principal_value(-product.arg()),
        raw_sum,
        steps: k,
        n_trunc: None,
        min_overlap: moduli.iter().copied().fold(f64::INFINITY, f64::min),
        overlap_moduli: moduli,
        top_level_occupation: None,
    })
}

pub fn wilson_loop_phase(family: &StateFamily) -> Result<BerryPhaseResult, BerryError> {
    let mut result = wilson_loop_phase_of(&family.states, &NumericSettings::default())?;
    result.n_trunc = family.n_trunc;
    result.top_level_occupation = family.top_level_occupation;
    Ok(result)
}

/// Tracks one band around the loop. See [`eigenstate_families`].
pub fn eigenstate_family<H: LoopHamiltonian + ?Sized>(
    builder: &H,
    lp: LoopSpec,
    band: BandSelector,
    settings: &NumericSettings,
) -> Result<StateFamily, BerryError> {
    Ok(eigenstate_families(builder, lp, &[band], settings)?.remove(0))
}

struct Tracker {
    band: BandSelector,
    states: Vec<Vec<C64>>,
    seed: usize,
    top_occupation: f64,
}

/// Diagonalizes `H(φ_k)` once per loop point and follows every requested
/// band by maximal overlap with its previous state.
///
/// At `φ = 0` a band is seeded by eigenvalue ordinal, or, for
/// [`BandSelector::Excitation`], by the eigenstates of the requested JC
/// manifold (`+` is the upper one). Gaps of excitation-labelled bands are
/// measured inside their own manifold, since different manifolds are
/// uncoupled and may cross freely.
pub fn eigenstate_families<H: LoopHamiltonian + ?Sized>(
    builder: &H,
    lp: LoopSpec,
    bands: &[BandSelector],
    settings: &NumericSettings,
) -> Result<Vec<StateFamily>, BerryError> {
    let truncation = builder.truncation();
    let dim = truncation.composite_dim();
    let excitations = builder.excitation_numbers();
    if excitations.is_none() && bands.iter().any(|b| matches!(b, BandSelector::Excitation { .. })) {
        return Err(BerryError::NoConservedExcitation);
    }
    let watched = settings.truncation_levels.min(truncation.levels());
    let top_start = 2 * (truncation.levels() - watched);

    let mut trackers: Vec<Tracker> = bands
        .iter()
        .map(|&band| Tracker { band, states: Vec::with_capacity(lp.steps()), seed: 0, top_occupation: 0.0 })
        .collect();
    let mut first_vectors: Vec<Vec<C64>> = Vec::new();

    for k in 0..lp.steps() {
        let phi = lp.phi(k);
        let eig = hermitian_eig_with(&builder.at(PhaseAngle::new(phi)), settings)?;
        let values = eig.values();
        let range = values[dim - 1] - values[0];
        let floor = settings.gap_floor_rel * range;
        let sectors: Option<Vec<Option<usize>>> =
            excitations.as_ref().map(|exc| eig.vectors().iter().map(|v| sector_of(v, exc)).collect());

        for tr in trackers.iter_mut() {
            let j = if k == 0 {
                let j = seed_index(tr.band, values, sectors.as_deref())?;
                tr.seed = j;
                j
            } else {
                let prev = tr.states.last().expect("seeded");
                best_overlap(prev, eig.vectors(), settings.tracking_ambiguity, phi)?.0
            };

            let gap = match (tr.band, sectors.as_deref()) {
                (BandSelector::Excitation { .. }, Some(sec)) => match sec[j] {
                    Some(s) => nearest_gap(values, j, |i| sec[i] == Some(s)),
                    None => 0.0,
                },
                _ => nearest_gap(values, j, |_| true),
            };
            if gap <= floor {
                return Err(BerryError::DegenerateBand { phi, gap, floor });
            }

            let v = eig.vector(j);
            let occupation: f64 = v[top_start..].iter().map(|z| z.norm_sqr()).sum();
            if occupation > settings.truncation_threshold {
                return Err(BerryError::TruncationLeak { phi, occupation });
            }
            tr.top_occupation = tr.top_occupation.max(occupation);
            tr.states.push(v.to_vec());
        }
        if k == 0 {
            first_vectors = eig.into_parts().1;
        }
    }

    trackers
        .into_iter()
        .map(|tr| {
            // the loop must close on the band it started from
            let last = tr.states.last().expect("non-empty");
            let (j, _) = best_overlap(last, &first_vectors, settings.tracking_ambiguity, 0.0)?;
            if j != tr.seed {
                let best = inner(last, &first_vectors[j]).norm();
                let runner_up = inner(last, &first_vectors[tr.seed]).norm();
                return Err(BerryError::BandTrackingAmbiguity { phi: 0.0, best, runner_up });
            }
            let mut family = StateFamily::new(tr.states, Some(tr.band), settings)?;
            family.top_level_occupation = Some(tr.top_occupation);
            family.n_trunc = Some(truncation.levels());
            Ok(family)
        })
        .collect()
}

/// Excitation manifold of `v`, when `v` lies inside a single one.
fn sector_of(v: &[C64], excitations: &[f64]) -> Option<usize> {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (z, &e) in v.iter().zip(excitations) {
        let w = z.norm_sqr();
        mean += w * e;
        second += w * e * e;
    }
    let variance = second - mean * mean;
    if variance < 1e-6 {
        Some(mean.round() as usize)
    } else {
        None
    }
}

fn seed_index(
    band: BandSelector,
    values: &[f64],
    sectors: Option<&[Option<usize>]>,
) -> Result<usize, BerryError> {
    match band {
        BandSelector::Ordinal(i) => {
            if i < values.len() {
                Ok(i)
            } else {
                Err(BerryError::BandOutOfRange(band.to_string()))
            }
        }
        BandSelector::Excitation { n, branch } => {
            let sectors = sectors.ok_or(BerryError::NoConservedExcitation)?;
            let members: Vec<usize> = (0..values.len()).filter(|&i| sectors[i] == Some(n + 1)).collect();
            if members.len() != 2 {
                return Err(BerryError::BandOutOfRange(band.to_string()));
            }
            // values ascend, so members are ordered by energy
            Ok(match branch {
                Branch::Plus => members[1],
                Branch::Minus => members[0],
            })
        }
    }
}

fn nearest_gap(values: &[f64], j: usize, mut include: impl FnMut(usize) -> bool) -> f64 {
    (0..values.len())
        .filter(|&i| i != j && include(i))
        .map(|i| (values[i] - values[j]).abs())
        .fold(f64::INFINITY, f64::min)
}

fn best_overlap(
    prev: &[C64],
    candidates: &[Vec<C64>],
    ambiguity: f64,
    phi: f64,
) -> Result<(usize, f64), BerryError> {
    let mut best = (0, -1.0);
    let mut runner_up = -1.0;
    for (i, v) in candidates.iter().enumerate() {
        let m = inner(prev, v).norm();
        if m > best.1 {
            runner_up = best.1;
            best = (i, m);
        } else if m > runner_up {
            runner_up = m;
        }
    }
    if best.1 - runner_up < ambiguity {
        return Err(BerryError::BandTrackingAmbiguity { phi, best: best.1, runner_up });
    }
    Ok(best)
}

/// Follows `band` around `lp` and returns its Wilson-loop phase.
pub fn berry_phase<H: LoopHamiltonian + ?Sized>(
    builder: &H,
    lp: LoopSpec,
    band: BandSelector,
    settings: &NumericSettings,
) -> Result<(BerryPhaseResult, StateFamily), BerryError> {
    let family = eigenstate_family(builder, lp, band, settings)?;
    let result = wilson_loop_phase(&family)?;
    Ok((result, family))
}

/// `±π(1 − (Δ/2)/√(Δ²/4 + 2g²(n+1)))`, reduced to `(−π, π]`.
pub fn jc_analytic_phase(delta: f64, g: f64, n: usize, branch: Branch) -> Result<f64, BerryError> {
    let root = (delta * delta / 4.0 + 2.0 * g * g * (n as f64 + 1.0)).sqrt();
    if root == 0.0 {
        return Err(BerryError::DegenerateParameters);
    }
    Ok(principal_value(branch.sign() * PI * (1.0 - (delta / 2.0) / root)))
}

/// Phase from encircling the JC conical intersection at radius `R`:
/// `±π(1 − (Δ/2)/√(Δ²/4 + g²R²))`.
pub fn ci_encircle_phase(delta: f64, g: f64, radius: f64, branch: Branch) -> Result<f64, BerryError> {
    let root = (delta * delta / 4.0 + g * g * radius * radius).sqrt();
    if root == 0.0 {
        return Err(BerryError::DegenerateParameters);
    }
    Ok(principal_value(branch.sign() * PI * (1.0 - (delta / 2.0) / root)))
}

/// E×ε Jahn–Teller phase at radius `R`: `±π(1 − ν/√(ν² + 4g²R²))`.
pub fn jt_encircle_phase(nu: f64, g: f64, radius: f64, branch: Branch) -> Result<f64, BerryError> {
    let root = (nu * nu + 4.0 * g * g * radius * radius).sqrt();
    if root == 0.0 {
        return Err(BerryError::DegenerateParameters);
    }
    Ok(principal_value(branch.sign() * PI * (1.0 - nu / root)))
}

/// `2π⟨ψ|a†a ⊗ I|ψ⟩` reduced to `(−π, π]`: the continuum Berry phase of
/// the family `exp(−iφ a†a)|ψ⟩`.
pub fn number_expectation_phase(state: &[C64]) -> f64 {
    let weight: f64 = state.iter().map(|z| z.norm_sqr()).sum();
    let mean: f64 = state.iter().enumerate().map(|(i, z)| (i / 2) as f64 * z.norm_sqr()).sum();
    principal_value(TAU * mean / weight)
}
