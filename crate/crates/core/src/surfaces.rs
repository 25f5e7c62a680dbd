//! Semiclassical Born–Oppenheimer surfaces over the `(x, p)` plane.
//!
//! The quadratures are treated as numbers and the remaining spin (or
//! three-level) problem is diagonalized pointwise. Whether two sheets meet
//! in an isolated cone or along a seam decides whether a loop around the
//! origin picks up a geometric phase.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::berry::{wilson_loop_phase, BerryError, BerryPhaseResult, Branch, LoopSpec, StateFamily};
use crate::eigensolve::hermitian_eig;
use crate::hamiltonians::{effective_field, LambdaParams, PhaseAngle, SpinModel};
use crate::settings::NumericSettings;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("surface has no nodes")]
    EmptyGrid,
    #[error("sheet {0} is not present on this surface")]
    MissingSheet(&'static str),
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("Λ surfaces need E1 = E2, got E1 = {e1}, E2 = {e2}")]
    UnequalLowerLevels { e1: f64, e2: f64 },
    #[error("mixing angle undefined: nu = 0 and the coupling vanishes at this point")]
    UndefinedMixingAngle,
}

/// Uniform `(x, p)` grid; node `(i, j)` sits at
/// `(x_min + i·Δx, p_min + j·Δp)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, nx: usize, p_min: f64, p_max: f64, np: usize) -> Result<Self, SurfaceError> {
        for (name, v) in [("x_min", x_min), ("x_max", x_max), ("p_min", p_min), ("p_max", p_max)] {
            if !v.is_finite() {
                return Err(SurfaceError::InvalidGrid(format!("{name} is not finite")));
            }
        }
        if x_min >= x_max || p_min >= p_max {
            return Err(SurfaceError::InvalidGrid("ranges must satisfy min < max".into()));
        }
        if nx < 2 || np < 2 {
            return Err(SurfaceError::InvalidGrid("need at least 2 nodes per axis".into()));
        }
        Ok(Self { x_min, x_max, p_min, p_max, nx, np })
    }

    /// Symmetric square grid `[-half, half]²` with `n` nodes per axis.
    pub fn square(half: f64, n: usize) -> Result<Self, SurfaceError> {
        Self::new(-half, half, n, -half, half, n)
    }

    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + (self.p_max - self.p_min) * j as f64 / (self.np - 1) as f64
    }

    /// Row-major flat index.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.np + j
    }

    /// Nodes in row-major order: `x` outer, `p` inner.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize, f64, f64)> + '_ {
        (0..self.nx).flat_map(move |i| (0..self.np).map(move |j| (i, j, self.x(i), self.p(j))))
    }
}

fn parse_axis(s: &str) -> Result<(f64, f64, usize), SurfaceError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(SurfaceError::InvalidGrid(format!("axis `{s}` is not min:max:n")));
    }
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| SurfaceError::InvalidGrid(format!("`{t}` is not a number")))
    };
    let n = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|_| SurfaceError::InvalidGrid(format!("`{}` is not a node count", parts[2])))?;
    Ok((num(parts[0])?, num(parts[1])?, n))
}

impl FromStr for Grid {
    type Err = SurfaceError;

    /// `xmin:xmax:nx,pmin:pmax:np`
    fn from_str(s: &str) -> Result<Self, SurfaceError> {
        let (xs, ps) = s
            .split_once(',')
            .ok_or_else(|| SurfaceError::InvalidGrid(format!("`{s}` is not xmin:xmax:nx,pmin:pmax:np")))?;
        let (x_min, x_max, nx) = parse_axis(xs)?;
        let (p_min, p_max, np) = parse_axis(ps)?;
        Grid::new(x_min, x_max, nx, p_min, p_max, np)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SheetName {
    #[serde(rename = "E_minus")]
    Minus,
    #[serde(rename = "E_0")]
    Zero,
    #[serde(rename = "E_plus")]
    Plus,
}

impl SheetName {
    pub fn label(self) -> &'static str {
        match self {
            SheetName::Minus => "E_minus",
            SheetName::Zero => "E_0",
            SheetName::Plus => "E_plus",
        }
    }
}

/// Energy sheets sampled on a grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    grid: Grid,
    sheets: Vec<(SheetName, Vec<f64>)>,
}

impl SurfaceGrid {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Sheets in export order: `E_minus`, `E_plus`, then `E_0` if present.
    pub fn sheets(&self) -> &[(SheetName, Vec<f64>)] {
        &self.sheets
    }

    pub fn sheet(&self, name: SheetName) -> Option<&[f64]> {
        self.sheets.iter().find(|(n, _)| *n == name).map(|(_, v)| v.as_slice())
    }

    pub fn value(&self, name: SheetName, i: usize, j: usize) -> Option<f64> {
        self.sheet(name).map(|s| s[self.grid.index(i, j)])
    }

    /// `E_minus ≤ E_0 ≤ E_plus` at every node.
    pub fn is_ordered(&self) -> bool {
        let minus = self.sheet(SheetName::Minus);
        let plus = self.sheet(SheetName::Plus);
        let zero = self.sheet(SheetName::Zero);
        (0..self.grid.len()).all(|k| {
            let lo = minus.map(|s| s[k]).unwrap_or(f64::NEG_INFINITY);
            let hi = plus.map(|s| s[k]).unwrap_or(f64::INFINITY);
            match zero {
                Some(z) => lo <= z[k] && z[k] <= hi,
                None => lo <= hi,
            }
        })
    }

    /// `max − min` over all sheet values.
    pub fn spectral_range(&self) -> f64 {
        let values = self.sheets.iter().flat_map(|(_, v)| v.iter().copied());
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi - lo
    }

    fn from_fn<F: Fn(f64, f64) -> Vec<f64>>(grid: Grid, names: &[SheetName], f: F) -> Self {
        let mut sheets: Vec<(SheetName, Vec<f64>)> =
            names.iter().map(|&n| (n, Vec::with_capacity(grid.len()))).collect();
        for (_, _, x, p) in grid.nodes() {
            for (slot, v) in sheets.iter_mut().zip(f(x, p)) {
                slot.1.push(v);
            }
        }
        Self { grid, sheets }
    }
}

/// `E± = ±√(Δ²/4 + g²(x² + p²))`
pub fn jc_surfaces(delta: f64, g: f64, grid: Grid) -> SurfaceGrid {
    SurfaceGrid::from_fn(grid, &[SheetName::Minus, SheetName::Plus], |x, p| {
        let root = (delta * delta / 4.0 + g * g * (x * x + p * p)).sqrt();
        vec![-root, root]
    })
}

/// `E± = ω(p² + x²)/2 ± √(ν²/4 + 4g²x²)`
pub fn rabi_surfaces(omega: f64, nu: f64, g: f64, grid: Grid) -> SurfaceGrid {
    SurfaceGrid::from_fn(grid, &[SheetName::Minus, SheetName::Plus], |x, p| {
        let harmonic = omega * (p * p + x * x) / 2.0;
        let root = (nu * nu / 4.0 + 4.0 * g * g * x * x).sqrt();
        vec![harmonic - root, harmonic + root]
    })
}

/// Three Λ-system sheets at fixed drive angle `chi`:
/// `E± = ω(p² + x²)/2 + (δ ± √(δ² + G²))/2`, `E_0 = ω(p² + x²)/2`, with
/// `G² = κ²cos²χ + 4g²x²` and `δ = E3 − E1`. Since `√(δ² + G²) ≥ |δ|`
/// the order `E− ≤ E_0 ≤ E+` holds for either sign of `δ`.
pub fn lambda_surfaces(params: &LambdaParams, grid: Grid) -> Result<SurfaceGrid, SurfaceError> {
    if params.e1 != params.e2 {
        return Err(SurfaceError::UnequalLowerLevels { e1: params.e1, e2: params.e2 });
    }
    let delta = params.delta();
    let drive = params.kappa * params.chi.cos();
    let (omega, g) = (params.omega, params.g);
    Ok(SurfaceGrid::from_fn(grid, &[SheetName::Minus, SheetName::Plus, SheetName::Zero], |x, p| {
        let harmonic = omega * (p * p + x * x) / 2.0;
        let g2 = drive * drive + 4.0 * g * g * x * x;
        let root = (delta * delta + g2).sqrt();
        vec![harmonic + (delta - root) / 2.0, harmonic + (delta + root) / 2.0, harmonic]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Point,
    Line,
    None,
}

/// Shape of the minimum-gap node set, regardless of whether the gap closes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgminGeometry {
    Point,
    Line,
    Scattered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridNode {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyReport {
    pub lower: SheetName,
    pub upper: SheetName,
    pub tol: f64,
    pub min_gap: f64,
    pub argmin_nodes: Vec<GridNode>,
    pub argmin_geometry: ArgminGeometry,
    pub classification: Classification,
    /// Mean exponent of `gap − min_gap ∝ r^α` along 8 rays from the argmin
    /// centroid; `None` when no ray has two usable samples.
    pub gap_scaling_exponent: Option<f64>,
}

/// Default degeneracy tolerance: `1e−9` times the spectral range.
pub fn default_tolerance(surface: &SurfaceGrid) -> f64 {
    let range = surface.spectral_range();
    if range > 0.0 {
        1e-9 * range
    } else {
        1e-9
    }
}

/// Locates and classifies the minimum-gap locus between two sheets.
///
/// Nodes with `gap ≤ min_gap + tol` form the argmin set. A single
/// 8-connected cluster of at most 4 nodes is a point; a set covering at
/// least 80% of the nodes along either axis is a line. The classification
/// is `none` unless `min_gap ≤ tol`.
pub fn detect_degeneracy(
    surface: &SurfaceGrid,
    lower: SheetName,
    upper: SheetName,
    tol: f64,
) -> Result<DegeneracyReport, SurfaceError> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(SurfaceError::NonPositiveTolerance(tol));
    }
    let grid = *surface.grid();
    if grid.is_empty() {
        return Err(SurfaceError::EmptyGrid);
    }
    let lo = surface.sheet(lower).ok_or(SurfaceError::MissingSheet(lower.label()))?;
    let hi = surface.sheet(upper).ok_or(SurfaceError::MissingSheet(upper.label()))?;
    if lo.is_empty() {
        return Err(SurfaceError::EmptyGrid);
    }
    let gap: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a).abs()).collect();
    let min_gap = gap.iter().copied().fold(f64::INFINITY, f64::min);

    let in_set: Vec<bool> = gap.iter().map(|&g| g <= min_gap + tol).collect();
    let argmin_nodes: Vec<GridNode> = grid
        .nodes()
        .filter(|&(i, j, _, _)| in_set[grid.index(i, j)])
        .map(|(i, j, x, p)| GridNode { i, j, x, p })
        .collect();

    let clusters = count_clusters(&grid, &in_set);
    let distinct = |key: fn(&GridNode) -> usize, n: usize| {
        let mut seen = vec![false; n];
        argmin_nodes.iter().for_each(|node| seen[key(node)] = true);
        seen.into_iter().filter(|&s| s).count()
    };
    let span_x = distinct(|n| n.i, grid.nx) as f64 / grid.nx as f64;
    let span_p = distinct(|n| n.j, grid.np) as f64 / grid.np as f64;

    let argmin_geometry = if clusters == 1 && argmin_nodes.len() <= 4 {
        ArgminGeometry::Point
    } else if span_x >= 0.8 || span_p >= 0.8 {
        ArgminGeometry::Line
    } else {
        ArgminGeometry::Scattered
    };
    let classification = match (min_gap <= tol, argmin_geometry) {
        (true, ArgminGeometry::Point) => Classification::Point,
        (true, ArgminGeometry::Line) => Classification::Line,
        _ => Classification::None,
    };

    let gap_scaling_exponent = scaling_exponent(&grid, &gap, &argmin_nodes, min_gap, tol);
    Ok(DegeneracyReport {
        lower,
        upper,
        tol,
        min_gap,
        argmin_nodes,
        argmin_geometry,
        classification,
        gap_scaling_exponent,
    })
}

fn count_clusters(grid: &Grid, in_set: &[bool]) -> usize {
    let mut seen = vec![false; in_set.len()];
    let mut clusters = 0;
    let mut queue = VecDeque::new();
    for start in 0..in_set.len() {
        if !in_set[start] || seen[start] {
            continue;
        }
        clusters += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            let (i, j) = ((k / grid.np) as isize, (k % grid.np) as isize);
            for di in -1..=1 {
                for dj in -1..=1 {
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= grid.nx as isize || b >= grid.np as isize {
                        continue;
                    }
                    let idx = grid.index(a as usize, b as usize);
                    if in_set[idx] && !seen[idx] {
                        seen[idx] = true;
                        queue.push_back(idx);
                    }
                }
            }
        }
    }
    clusters
}

fn scaling_exponent(grid: &Grid, gap: &[f64], argmin: &[GridNode], min_gap: f64, tol: f64) -> Option<f64> {
    let count = argmin.len() as f64;
    let ci = (argmin.iter().map(|n| n.i as f64).sum::<f64>() / count).round() as isize;
    let cj = (argmin.iter().map(|n| n.j as f64).sum::<f64>() / count).round() as isize;
    let (xc, pc) = (grid.x(ci as usize), grid.p(cj as usize));

    let mut slopes = Vec::new();
    for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
        let mut pts = Vec::new();
        let mut s = 1;
        loop {
            let (a, b) = (ci + s * di, cj + s * dj);
            if a < 0 || b < 0 || a >= grid.nx as isize || b >= grid.np as isize {
                break;
            }
            let (a, b) = (a as usize, b as usize);
            let r = (grid.x(a) - xc).hypot(grid.p(b) - pc);
            let excess = gap[grid.index(a, b)] - min_gap;
            if r > 0.0 && excess > tol {
                pts.push((r.ln(), excess.ln()));
            }
            s += 1;
        }
        if pts.len() >= 2 {
            slopes.push(least_squares_slope(&pts));
        }
    }
    if slopes.is_empty() {
        None
    } else {
        Some(slopes.iter().sum::<f64>() / slopes.len() as f64)
    }
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Real adiabatic spin states of the semiclassical Rabi Hamiltonian.
///
/// Vectors are given in the crate's atomic basis `(|1⟩, |2⟩)`:
/// `plus = cos(θ/2)|2⟩ + sin(θ/2)|1⟩`, `minus = sin(θ/2)|2⟩ − cos(θ/2)|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoSpinStates {
    pub theta: f64,
    pub plus: [f64; 2],
    pub minus: [f64; 2],
}

impl BoSpinStates {
    pub fn branch(&self, branch: Branch) -> [f64; 2] {
        match branch {
            Branch::Plus => self.plus,
            Branch::Minus => self.minus,
        }
    }
}

/// Mixing angle `tan θ = 4g(cos φ x − sin φ p)/ν` of the field
/// `B = (2g(cos φ x − sin φ p), 0, ν/2)`.
///
/// `θ` lies in `(−π/2, π/2)` for `ν > 0` and in `(π/2, 3π/2)` for `ν < 0`,
/// so the states are smooth along any path that keeps `B ≠ 0`.
pub fn bo_spin_eigenstates_rabi(x: f64, p: f64, phi: PhaseAngle, nu: f64, g: f64) -> Result<BoSpinStates, SurfaceError> {
    let (s, c) = phi.radians().sin_cos();
    let bx = 2.0 * g * (c * x - s * p);
    let bz = nu / 2.0;
    if bx == 0.0 && bz == 0.0 {
        return Err(SurfaceError::UndefinedMixingAngle);
    }
    let theta = if bz < 0.0 { bx.atan2(bz).rem_euclid(TAU) } else { bx.atan2(bz) };
    let (sh, ch) = (theta / 2.0).sin_cos();
    Ok(BoSpinStates { theta, plus: [sh, ch], minus: [-ch, sh] })
}

/// Per-step phase increments `−arg⟨Θ_k|Θ_{k+1}⟩` of the real-gauge Rabi
/// spin family at phase-space radius `R` (base point `(R, 0)`) as the field
/// phase runs around `lp`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealGaugeLoop {
    pub increments: Vec<f64>,
    pub total: f64,
}

pub fn real_gauge_connection(
    radius: f64,
    lp: LoopSpec,
    nu: f64,
    g: f64,
    branch: Branch,
) -> Result<RealGaugeLoop, SurfaceError> {
    let states: Vec<[f64; 2]> = lp
        .angles()
        .map(|phi| bo_spin_eigenstates_rabi(radius, 0.0, PhaseAngle::new(phi), nu, g).map(|s| s.branch(branch)))
        .collect::<Result<_, _>>()?;
    let k = states.len();
    let increments: Vec<f64> = (0..k)
        .map(|i| {
            let (a, b) = (states[i], states[(i + 1) % k]);
            let overlap = C64::new(a[0] * b[0] + a[1] * b[1], 0.0);
            0.0 - overlap.arg()
        })
        .collect();
    let total = increments.iter().sum();
    Ok(RealGaugeLoop { increments, total })
}

/// Wilson-loop phase of the semiclassical spin eigenstate transported once
/// around the field-phase loop at phase-space radius `R` (base point
/// `(R, 0)`), with the spin problem diagonalized numerically at each step.
pub fn spin_loop_phase(model: &SpinModel, radius: f64, lp: LoopSpec, branch: Branch) -> Result<BerryPhaseResult, BerryError> {
    let column = match branch {
        Branch::Plus => 1,
        Branch::Minus => 0,
    };
    let states = lp
        .angles()
        .map(|phi| {
            let field = effective_field(model, radius, 0.0, PhaseAngle::new(phi));
            let eig = hermitian_eig(&field.spin_hamiltonian())?;
            if eig.values()[1] - eig.values()[0] <= 0.0 {
                return Err(BerryError::DegenerateBand { phi, gap: 0.0, floor: 0.0 });
            }
            Ok(eig.vector(column).to_vec())
        })
        .collect::<Result<Vec<_>, BerryError>>()?;
    let family = StateFamily::new(states, None, &NumericSettings::default())?;
    wilson_loop_phase(&family)
}

/// `π(1 − cos θ_R)` with `cos θ_R = (Δ/2)/√(Δ²/4 + g²R²)`: the spin-½
/// solid-angle phase of the JC semiclassical loop.
pub fn jc_solid_angle_phase(delta: f64, g: f64, radius: f64) -> f64 {
    let cos_theta = (delta / 2.0) / (delta * delta / 4.0 + g * g * radius * radius).sqrt();
    PI * (1.0 - cos_theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::berry::{ci_encircle_phase, mod2pi_distance};
    use crate::hamiltonians::{JcParams, RabiParams};
    use crate::matrix::ComplexMatrix;
    use std::f64::consts::FRAC_PI_4;

    fn canonical() -> Grid {
        Grid::square(2.0, 101).unwrap()
    }

    #[test]
    fn grid_parsing_and_nodes() {
        let g: Grid = "-2:2:101,-1.5:3e0:7".parse().unwrap();
        assert_eq!((g.x_min, g.x_max, g.nx, g.p_min, g.p_max, g.np), (-2.0, 2.0, 101, -1.5, 3.0, 7));
        assert_eq!(g.x(50), 0.0);
        assert_eq!(g.x(100), 2.0);
        assert_eq!(g.p(6), 3.0);
        assert_eq!(g.len(), 707);
        let first: Vec<_> = g.nodes().take(2).map(|(i, j, _, _)| (i, j)).collect();
        assert_eq!(first, vec![(0, 0), (0, 1)]);
        for bad in ["", "1:2:3", "2:1:5,0:1:5", "0:1:1,0:1:5", "0:1:x,0:1:5", "0:1:5;0:1:5", "a:1:5,0:1:5", "0:nan:5,0:1:5"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }

    #[test]
    fn jc_sheets() {
        let grid = Grid::new(-1.0, 3.0, 5, -2.0, 4.0, 7).unwrap();
        let s = jc_surfaces(2.0, 1.0, grid);
        // (x, p) = (3, 4) is node (4, 6)
        assert!((s.value(SheetName::Plus, 4, 6).unwrap() - 26f64.sqrt()).abs() < 1e-15);
        assert!((s.value(SheetName::Minus, 4, 6).unwrap() + 26f64.sqrt()).abs() < 1e-15);
        let s0 = jc_surfaces(2.0, 1.0, canonical());
        let gap = s0.value(SheetName::Plus, 50, 50).unwrap() - s0.value(SheetName::Minus, 50, 50).unwrap();
        assert_eq!(gap, 2.0);
        let cone = jc_surfaces(0.0, 0.7, canonical());
        for (i, j, x, p) in canonical().nodes() {
            assert!((cone.value(SheetName::Plus, i, j).unwrap() - 0.7 * x.hypot(p)).abs() < 1e-14);
        }
        assert!(cone.is_ordered());
    }

    #[test]
    fn rabi_sheets() {
        let seam = rabi_surfaces(1.0, 0.0, 1.0, canonical());
        for (i, j, x, _) in canonical().nodes() {
            let gap = seam.value(SheetName::Plus, i, j).unwrap() - seam.value(SheetName::Minus, i, j).unwrap();
            assert!((gap - 4.0 * x.abs()).abs() < 1e-14);
        }
        let gapped = rabi_surfaces(1.0, 2.0, 0.5, canonical());
        for (i, j, _, _) in canonical().nodes() {
            let gap = gapped.value(SheetName::Plus, i, j).unwrap() - gapped.value(SheetName::Minus, i, j).unwrap();
            assert!(gap >= 2.0 - 1e-12);
        }
        let grid = Grid::new(0.0, 1.0, 2, 0.0, 1.0, 2).unwrap();
        let s = rabi_surfaces(1.0, 2.0, 1.0, grid);
        assert!((s.value(SheetName::Plus, 1, 1).unwrap() - (1.0 + 5f64.sqrt())).abs() < 1e-15);
        assert!((s.value(SheetName::Minus, 1, 1).unwrap() - (1.0 - 5f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn lambda_sheets() {
        let base = LambdaParams { e1: 0.0, e2: 0.0, e3: 1.5, kappa: 0.0, g: 0.0, chi: 0.0, omega: 1.0 };
        let s = lambda_surfaces(&base, canonical()).unwrap();
        for (i, j, x, p) in canonical().nodes() {
            let h = (x * x + p * p) / 2.0;
            assert_eq!(s.value(SheetName::Zero, i, j).unwrap(), h);
            assert!((s.value(SheetName::Plus, i, j).unwrap() - (h + 1.5)).abs() < 1e-14);
            assert!((s.value(SheetName::Minus, i, j).unwrap() - h).abs() < 1e-14);
        }
        let quarter = LambdaParams { kappa: 3.0, g: 1.0, chi: std::f64::consts::FRAC_PI_2, ..base };
        let s = lambda_surfaces(&quarter, canonical()).unwrap();
        for j in 0..101 {
            assert!((s.value(SheetName::Minus, 50, j).unwrap() - s.value(SheetName::Zero, 50, j).unwrap()).abs() < 1e-12);
        }
        let resonant = LambdaParams { e3: 0.0, kappa: 1.0, g: 1.0, ..base };
        let grid = Grid::new(0.0, 1.0, 2, 0.0, 1.0, 2).unwrap();
        let s = lambda_surfaces(&resonant, grid).unwrap();
        let h = 1.0;
        assert!((s.value(SheetName::Plus, 1, 0).unwrap() - 0.5 - 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert!((s.value(SheetName::Minus, 1, 1).unwrap() - h + 5f64.sqrt() / 2.0).abs() < 1e-15);
        assert!(s.is_ordered());
        let bad = LambdaParams { e2: 0.1, ..base };
        assert_eq!(lambda_surfaces(&bad, grid), Err(SurfaceError::UnequalLowerLevels { e1: 0.0, e2: 0.1 }));
    }

    #[test]
    fn degeneracy_cases() {
        let cone = detect_degeneracy(&jc_surfaces(0.0, 1.0, canonical()), SheetName::Minus, SheetName::Plus, 1e-9).unwrap();
        assert_eq!(cone.classification, Classification::Point);
        assert_eq!(cone.argmin_nodes.len(), 1);
        assert_eq!((cone.argmin_nodes[0].x, cone.argmin_nodes[0].p), (0.0, 0.0));
        let alpha = cone.gap_scaling_exponent.unwrap();
        assert!((0.9..=1.1).contains(&alpha), "{alpha}");

        let seam = detect_degeneracy(&rabi_surfaces(1.0, 0.0, 1.0, canonical()), SheetName::Minus, SheetName::Plus, 1e-9)
            .unwrap();
        assert_eq!(seam.classification, Classification::Line);
        assert_eq!(seam.argmin_nodes.len(), 101);
        assert!(seam.argmin_nodes.iter().all(|n| n.x == 0.0));

        let gapped = detect_degeneracy(&jc_surfaces(2.0, 1.0, canonical()), SheetName::Minus, SheetName::Plus, 1e-9)
            .unwrap();
        assert_eq!(gapped.classification, Classification::None);
        assert_eq!(gapped.min_gap, 2.0);
        assert_eq!(gapped.argmin_geometry, ArgminGeometry::Point);
        // quadratic opening away from a gapped minimum
        let alpha = gapped.gap_scaling_exponent.unwrap();
        assert!(alpha > 1.5, "{alpha}");

        // gapped Rabi keeps a minimum-gap seam at x = 0
        let seam_gapped =
            detect_degeneracy(&rabi_surfaces(1.0, 0.5, 1.0, canonical()), SheetName::Minus, SheetName::Plus, 1e-9)
                .unwrap();
        assert_eq!(seam_gapped.classification, Classification::None);
        assert_eq!(seam_gapped.argmin_geometry, ArgminGeometry::Line);
    }

    #[test]
    fn degeneracy_errors() {
        let s = jc_surfaces(0.0, 1.0, canonical());
        assert_eq!(
            detect_degeneracy(&s, SheetName::Minus, SheetName::Plus, 0.0),
            Err(SurfaceError::NonPositiveTolerance(0.0))
        );
        assert_eq!(
            detect_degeneracy(&s, SheetName::Minus, SheetName::Zero, 1e-9),
            Err(SurfaceError::MissingSheet("E_0"))
        );
        let empty = SurfaceGrid { grid: canonical(), sheets: vec![(SheetName::Minus, vec![]), (SheetName::Plus, vec![])] };
        assert_eq!(detect_degeneracy(&empty, SheetName::Minus, SheetName::Plus, 1e-9), Err(SurfaceError::EmptyGrid));
    }

    #[test]
    fn bo_spin_states() {
        let s = bo_spin_eigenstates_rabi(0.0, 0.0, PhaseAngle::new(0.3), 1.0, 0.4).unwrap();
        assert_eq!(s.theta, 0.0);
        assert_eq!(s.plus, [0.0, 1.0]);
        assert_eq!(s.minus, [-1.0, 0.0]);

        // with 2g = 1 the angle reduces to tan θ = 2(cos φ x − sin φ p)/ν
        let nu = 1.3;
        let s = bo_spin_eigenstates_rabi(nu / 2.0, 7.0, PhaseAngle::new(0.0), nu, 0.5).unwrap();
        assert!((s.theta - FRAC_PI_4).abs() < 1e-15);

        assert_eq!(
            bo_spin_eigenstates_rabi(0.0, 0.0, PhaseAngle::new(1.0), 0.0, 1.0),
            Err(SurfaceError::UndefinedMixingAngle)
        );
        assert!(bo_spin_eigenstates_rabi(1.0, 0.0, PhaseAngle::new(0.0), 0.0, 1.0).is_ok());

        // ν < 0: no jump where the coupling changes sign, signed zeros included
        let at = |x: f64| bo_spin_eigenstates_rabi(x, 0.0, PhaseAngle::new(0.0), -1.0, 0.5).unwrap();
        assert_eq!(at(0.0).theta, PI);
        assert_eq!(at(-0.0).theta, PI);
        let (a, b) = (at(1e-9), at(-1e-9));
        assert!((a.plus[0] - b.plus[0]).abs() < 1e-8 && (a.plus[1] - b.plus[1]).abs() < 1e-8);
        assert!(at(0.0).plus[1].abs() < 1e-15);
    }

    #[test]
    fn bo_spin_states_diagonalize_effective_field() {
        let params = RabiParams::new(1.0, 0.7, 0.35).unwrap();
        for (x, p, phi) in [(0.4, -1.2, 0.3), (-2.0, 0.5, 4.0), (0.0, 1.0, 1.6)] {
            let phi = PhaseAngle::new(phi);
            let s = bo_spin_eigenstates_rabi(x, p, phi, params.nu(), params.g()).unwrap();
            let field = effective_field(&SpinModel::Rabi(params), x, p, phi);
            let h = field.spin_hamiltonian();
            let bare = &h - &ComplexMatrix::identity(2).scale_real(field.scalar);
            for (v, sign) in [(s.plus, 1.0), (s.minus, -1.0)] {
                let vc = [C64::new(v[0], 0.0), C64::new(v[1], 0.0)];
                let hv = bare.apply(&vc);
                let lambda = sign * field.magnitude();
                let res = ((hv[0] - vc[0] * lambda).norm_sqr() + (hv[1] - vc[1] * lambda).norm_sqr()).sqrt();
                assert!(res < 1e-12);
            }
            let dot = s.plus[0] * s.minus[0] + s.plus[1] * s.minus[1];
            assert!(dot.abs() < 1e-14);
            assert!((s.plus[0].hypot(s.plus[1]) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn real_gauge_increments_vanish() {
        for (radius, nu) in [(0.0, 1.0), (0.3, 1.0), (4.0, 1.0), (0.0, -1.0), (2.0, -0.4)] {
            for branch in [Branch::Plus, Branch::Minus] {
                let lp = LoopSpec::new(128).unwrap();
                let r = real_gauge_connection(radius, lp, nu, 0.5, branch).unwrap();
                assert!(r.increments.iter().all(|&d| d == 0.0));
                assert_eq!(r.total, 0.0);
            }
        }
        assert_eq!(
            real_gauge_connection(0.0, LoopSpec::new(8).unwrap(), 0.0, 1.0, Branch::Plus),
            Err(SurfaceError::UndefinedMixingAngle)
        );
    }

    #[test]
    fn semiclassical_loops() {
        let lp = LoopSpec::new(2048).unwrap();
        let (delta, g, radius) = (1.0, 0.8, 1.5);
        let jc = SpinModel::Jc(JcParams::from_detuning(delta, g).unwrap());
        for branch in [Branch::Plus, Branch::Minus] {
            let r = spin_loop_phase(&jc, radius, lp, branch).unwrap();
            let want = ci_encircle_phase(delta, g, radius, branch).unwrap();
            assert!(mod2pi_distance(r.gamma, want) < 1e-5, "{branch:?}: {} vs {want}", r.gamma);
            assert!(mod2pi_distance(r.gamma, branch.sign() * jc_solid_angle_phase(delta, g, radius)) < 1e-5);
        }
        let rabi = SpinModel::Rabi(RabiParams::new(1.0, 0.8, 0.6).unwrap());
        for branch in [Branch::Plus, Branch::Minus] {
            let r = spin_loop_phase(&rabi, radius, lp, branch).unwrap();
            assert!(mod2pi_distance(r.gamma, 0.0) < 1e-12);
        }
    }
}
