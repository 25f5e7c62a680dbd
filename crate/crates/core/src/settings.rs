/// Numeric tolerances and guard thresholds shared by the eigensolver and
/// the Berry-phase machinery.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericSettings {
    /// Largest tolerated entry of `H - H†` on eigensolver input.
    pub hermiticity_tol: f64,
    /// Relative residual target `‖Hv - λv‖ / ‖H‖_F`.
    pub residual_tol: f64,
    /// QL iterations allowed per eigenvalue before giving up.
    pub max_iterations_per_eigenvalue: usize,
    /// Smallest admissible `|⟨ψ_k|ψ_{k+1}⟩|` inside a state family.
    pub overlap_floor: f64,
    /// Wilson loops refuse overlaps smaller than this.
    pub zero_overlap: f64,
    /// Best and runner-up tracking overlaps must differ by at least this.
    pub tracking_ambiguity: f64,
    /// Minimum gap to the nearest level, relative to the spectral range.
    pub gap_floor_rel: f64,
    /// Number of top Fock levels watched by the truncation guard.
    pub truncation_levels: usize,
    /// Largest tolerated population of the watched top levels.
    pub truncation_threshold: f64,
    /// Normalization tolerance for family states.
    pub normalization_tol: f64,
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self {
            hermiticity_tol: 1e-10,
            residual_tol: 1e-10,
            max_iterations_per_eigenvalue: 50,
            overlap_floor: 0.5,
            zero_overlap: 1e-6,
            tracking_ambiguity: 0.1,
            gap_floor_rel: 1e-8,
            truncation_levels: 5,
            truncation_threshold: 1e-8,
            normalization_tol: 1e-12,
        }
    }
}
