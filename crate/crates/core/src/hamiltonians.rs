//! Jaynes–Cummings, quantum Rabi and Λ-system Hamiltonians, their
//! field-phase-rotated forms, and the effective spin field of the
//! semiclassical (Born–Oppenheimer) two-level problem.

use std::f64::consts::{SQRT_2, TAU};

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::fock::{
    annihilation, field_op, kron, number, pauli, quadrature_p, quadrature_x, sigma_minus, sigma_plus,
    spin_op, PauliAxis, TruncationDim,
};
use crate::matrix::ComplexMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("parameter `{name}` must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("coupling g must be non-negative, got {0}")]
    NegativeCoupling(f64),
    #[error("mode frequency omega must be positive for the Rabi model, got {0}")]
    NonPositiveOmega(f64),
}

fn finite(name: &'static str, value: f64) -> Result<f64, ParamError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ParamError::NotFinite { name, value })
    }
}

/// Jaynes–Cummings parameters. The detuning `Δ = ν − ω` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JcParams {
    omega: f64,
    nu: f64,
    g: f64,
}

impl JcParams {
    pub fn new(omega: f64, nu: f64, g: f64) -> Result<Self, ParamError> {
        let (omega, nu, g) = (finite("omega", omega)?, finite("nu", nu)?, finite("g", g)?);
        if g < 0.0 {
            return Err(ParamError::NegativeCoupling(g));
        }
        Ok(Self { omega, nu, g })
    }

    /// Parameters with the given detuning and `ω = 1`.
    pub fn from_detuning(delta: f64, g: f64) -> Result<Self, ParamError> {
        Self::new(1.0, 1.0 + finite("delta", delta)?, g)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn delta(&self) -> f64 {
        self.nu - self.omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RabiParams {
    omega: f64,
    nu: f64,
    g: f64,
}

impl RabiParams {
    pub fn new(omega: f64, nu: f64, g: f64) -> Result<Self, ParamError> {
        let (omega, nu, g) = (finite("omega", omega)?, finite("nu", nu)?, finite("g", g)?);
        if omega <= 0.0 {
            return Err(ParamError::NonPositiveOmega(omega));
        }
        if g < 0.0 {
            return Err(ParamError::NegativeCoupling(g));
        }
        Ok(Self { omega, nu, g })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn g(&self) -> f64 {
        self.g
    }
}

/// Λ-atom with a classical drive on 1↔3 and the cavity on 2↔3.
///
/// `chi` stands for the whole drive phase `ϑt + φ`; `omega` is the mode
/// frequency entering the harmonic term of the semiclassical surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaParams {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub kappa: f64,
    pub g: f64,
    pub chi: f64,
    pub omega: f64,
}

impl LambdaParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        finite("e1", self.e1)?;
        finite("e2", self.e2)?;
        finite("e3", self.e3)?;
        finite("kappa", self.kappa)?;
        finite("g", self.g)?;
        finite("chi", self.chi)?;
        finite("omega", self.omega)?;
        Ok(())
    }

    /// `δ = E3 − E1`
    pub fn delta(&self) -> f64 {
        self.e3 - self.e1
    }
}

/// Field phase `φ`, reduced to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct PhaseAngle(f64);

impl PhaseAngle {
    pub fn new(phi: f64) -> Self {
        let r = phi.rem_euclid(TAU);
        // rem_euclid can round up to exactly 2π for tiny negative inputs
        Self(if r >= TAU { 0.0 } else { r })
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

fn cis(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

/// `(Δ/2) σz + g√2 (a†σ− + σ+a)`, interaction picture, no free-field term.
pub fn build_jc(params: &JcParams, n: TruncationDim) -> ComplexMatrix {
    build_jc_rotated(params, PhaseAngle::new(0.0), n)
}

/// JC with the coupling phases `e^{∓iφ}` produced by `U(φ) = exp(−iφ a†a)`.
pub fn build_jc_rotated(params: &JcParams, phi: PhaseAngle, n: TruncationDim) -> ComplexMatrix {
    let a = annihilation(n);
    let coupling = params.g * SQRT_2;
    let phase = cis(phi.radians());
    let lower = kron(&a.adjoint(), &sigma_minus()).scale(phase.conj() * coupling);
    let raise = kron(&a, &sigma_plus()).scale(phase * coupling);
    let atom = spin_op(n, &pauli(PauliAxis::Z)).scale_real(params.delta() / 2.0);
    &(&atom + &lower) + &raise
}

/// `ω(a†a + 1/2) + (ν/2)σz + 2g x σx`.
pub fn build_rabi(params: &RabiParams, n: TruncationDim) -> ComplexMatrix {
    build_rabi_rotated(params, PhaseAngle::new(0.0), n)
}

/// Rabi model with the coupling `2g(cos φ x − sin φ p)σx`.
pub fn build_rabi_rotated(params: &RabiParams, phi: PhaseAngle, n: TruncationDim) -> ComplexMatrix {
    let levels = n.levels();
    let oscillator = ComplexMatrix::from_real_diagonal((0..levels).map(|k| params.omega * (k as f64 + 0.5)));
    let (s, c) = phi.radians().sin_cos();
    let quad = &quadrature_x(n).scale_real(c) - &quadrature_p(n).scale_real(s);
    let coupling = kron(&quad, &pauli(PauliAxis::X)).scale_real(2.0 * params.g);
    let atom = spin_op(n, &pauli(PauliAxis::Z)).scale_real(params.nu / 2.0);
    &(&field_op(&oscillator) + &atom) + &coupling
}

/// `exp(−iφ a†a) ⊗ I₂`.
pub fn phase_rotation_operator(phi: PhaseAngle, n: TruncationDim) -> ComplexMatrix {
    let diag = (0..n.levels()).map(|k| cis(-(k as f64) * phi.radians()));
    field_op(&ComplexMatrix::from_diagonal(diag))
}

/// `a†a ⊗ I₂ + I ⊗ (σz + I)/2`, conserved by the JC Hamiltonian.
pub fn excitation_operator(n: TruncationDim) -> ComplexMatrix {
    let levels = n.levels();
    ComplexMatrix::from_real_diagonal((0..levels).flat_map(|k| [k as f64, k as f64 + 1.0]))
}

/// Diagonal of [`excitation_operator`].
pub fn excitation_numbers(n: TruncationDim) -> Vec<f64> {
    (0..n.levels()).flat_map(|k| [k as f64, k as f64 + 1.0]).collect()
}

/// `(−1)^{a†a} ⊗ σz`, conserved by the Rabi Hamiltonian.
pub fn parity_operator(n: TruncationDim) -> ComplexMatrix {
    let signs = (0..n.levels()).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 });
    kron(&ComplexMatrix::from_real_diagonal(signs), &pauli(PauliAxis::Z))
}

/// `a†a ⊗ I₂`.
pub fn photon_number_operator(n: TruncationDim) -> ComplexMatrix {
    field_op(&number(n))
}

/// Two-level model whose semiclassical Hamiltonian is written as `B·σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpinModel {
    Jc(JcParams),
    Rabi(RabiParams),
}

/// `H = B·σ + scalar·I` at one phase-space point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveField {
    pub b: [f64; 3],
    pub scalar: f64,
}

impl EffectiveField {
    pub fn magnitude(&self) -> f64 {
        let [x, y, z] = self.b;
        (x * x + y * y + z * z).sqrt()
    }

    pub fn spin_hamiltonian(&self) -> ComplexMatrix {
        let [bx, by, bz] = self.b;
        let mut h = &(&pauli(PauliAxis::X).scale_real(bx) + &pauli(PauliAxis::Y).scale_real(by))
            + &pauli(PauliAxis::Z).scale_real(bz);
        for i in 0..2 {
            h[(i, i)] += self.scalar;
        }
        h
    }
}

/// Effective spin field with the quadratures treated as numbers.
///
/// JC: the spin-orbit form `(Δ/2)σz + g(xσx + pσy)` with `(x, p)` turned
/// by the field phase, `x' = x cos φ + p sin φ`, `p' = p cos φ − x sin φ`.
/// These are the c-number quadratures of `a = (x − ip)/√2`, the
/// convention in which the RWA coupling takes exactly this form.
///
/// Rabi: `(ν/2)σz + 2g(cos φ x − sin φ p)σx` plus the scalar
/// `ω(x² + p²)/2`; `B_y` is identically zero.
pub fn effective_field(model: &SpinModel, x: f64, p: f64, phi: PhaseAngle) -> EffectiveField {
    let (s, c) = phi.radians().sin_cos();
    match model {
        SpinModel::Jc(params) => {
            let xr = x * c + p * s;
            let pr = p * c - x * s;
            EffectiveField { b: [params.g * xr, params.g * pr, params.delta() / 2.0], scalar: 0.0 }
        }
        SpinModel::Rabi(params) => EffectiveField {
            b: [2.0 * params.g * (c * x - s * p), 0.0, params.nu / 2.0],
            scalar: params.omega * (x * x + p * p) / 2.0,
        },
    }
}

/// Bare-basis 3×3 interaction matrix of the Λ atom at quadrature `x`.
pub fn build_lambda_potential_matrix(params: &LambdaParams, x: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::from_real_diagonal([params.e1, params.e2, params.e3]);
    let drive = C64::new(params.kappa * params.chi.cos(), 0.0);
    let cavity = C64::new(2.0 * params.g * x, 0.0);
    m[(0, 2)] = drive;
    m[(2, 0)] = drive;
    m[(1, 2)] = cavity;
    m[(2, 1)] = cavity;
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::hermitian_eig;
    use crate::fock::{composite_index, AtomLevel};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn dim(n: usize) -> TruncationDim {
        TruncationDim::new(n).unwrap()
    }

    fn conjugate(u: &ComplexMatrix, h: &ComplexMatrix) -> ComplexMatrix {
        &(u * h) * &u.adjoint()
    }

    #[test]
    fn param_validation() {
        assert_eq!(JcParams::new(1.0, 1.0, -0.1), Err(ParamError::NegativeCoupling(-0.1)));
        assert!(matches!(JcParams::new(f64::NAN, 1.0, 0.1), Err(ParamError::NotFinite { .. })));
        assert_eq!(RabiParams::new(0.0, 1.0, 0.1), Err(ParamError::NonPositiveOmega(0.0)));
        assert_eq!(JcParams::new(1.0, 3.5, 0.2).unwrap().delta(), 2.5);
        assert_eq!(JcParams::from_detuning(-2.0, 1.0).unwrap().delta(), -2.0);
    }

    #[test]
    fn phase_angle_reduction() {
        assert_eq!(PhaseAngle::new(TAU).radians(), 0.0);
        assert!((PhaseAngle::new(-FRAC_PI_2).radians() - 1.5 * PI).abs() < 1e-15);
        assert!(PhaseAngle::new(-1e-300).radians() < TAU);
        assert!((PhaseAngle::new(7.0).radians() - (7.0 - TAU)).abs() < 1e-15);
    }

    #[test]
    fn jc_decoupled_is_diagonal() {
        let p = JcParams::new(1.0, 3.0, 0.0).unwrap();
        let h = build_jc(&p, dim(4));
        for i in 0..8 {
            for j in 0..8 {
                let want = if i != j {
                    0.0
                } else if i % 2 == 1 {
                    1.0
                } else {
                    -1.0
                };
                assert_eq!(h[(i, j)], C64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn jc_manifold_blocks_follow_closed_form() {
        let p = JcParams::new(1.0, 1.7, 0.6).unwrap();
        let n_trunc = dim(8);
        let h = build_jc(&p, n_trunc);
        for n in 0..7 {
            let i = composite_index(n, AtomLevel::Excited);
            let j = composite_index(n + 1, AtomLevel::Ground);
            let block = ComplexMatrix::from_row_major(vec![h[(i, i)], h[(i, j)], h[(j, i)], h[(j, j)]]);
            let eig = hermitian_eig(&block).unwrap();
            let root = (p.delta().powi(2) / 4.0 + 2.0 * p.g().powi(2) * (n as f64 + 1.0)).sqrt();
            assert!((eig.values()[0] + root).abs() < 1e-12);
            assert!((eig.values()[1] - root).abs() < 1e-12);
        }
        // resonant vacuum manifold at g=1: ±√2
        let h0 = build_jc(&JcParams::new(1.0, 1.0, 1.0).unwrap(), dim(2));
        let i = composite_index(0, AtomLevel::Excited);
        let j = composite_index(1, AtomLevel::Ground);
        assert!((h0[(i, j)].re - SQRT_2).abs() < 1e-15);
        assert_eq!(h0[(i, i)].re, 0.0);
    }

    #[test]
    fn jc_conserves_excitations() {
        let p = JcParams::new(1.0, 0.4, 0.9).unwrap();
        let n = dim(15);
        let h = build_jc_rotated(&p, PhaseAngle::new(0.77), n);
        assert!(h.commutator(&excitation_operator(n)).max_abs() < 1e-12);
        let manual = &photon_number_operator(n)
            + &spin_op(n, &(&pauli(PauliAxis::Z) + &ComplexMatrix::identity(2)).scale_real(0.5));
        assert_eq!(manual, excitation_operator(n));
    }

    #[test]
    fn jc_rotation_matches_conjugation() {
        let p = JcParams::new(1.0, 1.3, 0.45).unwrap();
        let n = dim(10);
        let h0 = build_jc(&p, n);
        assert_eq!(build_jc_rotated(&p, PhaseAngle::new(0.0), n), h0);
        let spectrum0 = hermitian_eig(&h0).unwrap().values().to_vec();
        for k in 0..10 {
            let phi = PhaseAngle::new(0.3 + 0.61 * k as f64);
            let rotated = build_jc_rotated(&p, phi, n);
            let conj = conjugate(&phase_rotation_operator(phi, n), &h0);
            assert!(rotated.max_abs_diff(&conj) < 1e-12);
            assert!(rotated.hermiticity_defect() < 1e-12);
            let spectrum = hermitian_eig(&rotated).unwrap().values().to_vec();
            for (a, b) in spectrum.iter().zip(&spectrum0) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn jc_half_turn_flips_coupling_signs() {
        let p = JcParams::new(1.0, 1.0, 1.0).unwrap();
        let n = dim(2);
        let h0 = build_jc(&p, n);
        let hpi = build_jc_rotated(&p, PhaseAngle::new(PI), n);
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    assert_eq!(hpi[(i, i)], h0[(i, i)]);
                } else {
                    assert!((hpi[(i, j)] + h0[(i, j)]).norm() < 1e-15);
                }
            }
        }
        assert!(h0.max_abs() > 1.0);
    }

    #[test]
    fn rabi_decoupled_ladder() {
        let p = RabiParams::new(1.3, 0.4, 0.0).unwrap();
        let eig = hermitian_eig(&build_rabi(&p, dim(12))).unwrap();
        let mut expected: Vec<f64> = (0..12)
            .flat_map(|k| {
                let e = 1.3 * (k as f64 + 0.5);
                [e - 0.2, e + 0.2]
            })
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in eig.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rabi_is_real_symmetric_and_parity_symmetric() {
        let p = RabiParams::new(1.0, 0.8, 0.35).unwrap();
        let n = dim(20);
        let h = build_rabi(&p, n);
        assert!(h.as_slice().iter().all(|z| z.im == 0.0));
        assert_eq!(h.hermiticity_defect(), 0.0);
        assert!(h.commutator(&parity_operator(n)).max_abs() < 1e-12);
    }

    #[test]
    fn rabi_rotation_matches_conjugation() {
        let p = RabiParams::new(1.0, 0.9, 0.5).unwrap();
        let n = dim(16);
        let h0 = build_rabi(&p, n);
        assert_eq!(build_rabi_rotated(&p, PhaseAngle::new(0.0), n), h0);
        let spectrum0 = hermitian_eig(&h0).unwrap().values().to_vec();
        for k in 0..10 {
            let phi = PhaseAngle::new(-1.0 + 0.83 * k as f64);
            let rotated = build_rabi_rotated(&p, phi, n);
            let conj = conjugate(&phase_rotation_operator(phi, n), &h0);
            assert!(rotated.max_abs_diff(&conj) < 1e-12, "phi={}", phi.radians());
            assert!(rotated.hermiticity_defect() < 1e-12);
        }
        let spectrum = hermitian_eig(&build_rabi_rotated(&p, PhaseAngle::new(1.3), n)).unwrap();
        for (a, b) in spectrum.values().iter().zip(&spectrum0) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rabi_quarter_turn_couples_momentum() {
        let p = RabiParams::new(1.0, 0.5, 0.3).unwrap();
        let n = dim(6);
        let h = build_rabi_rotated(&p, PhaseAngle::new(FRAC_PI_2), n);
        let g0 = RabiParams::new(1.0, 0.5, 0.0).unwrap();
        let coupling = &h - &build_rabi(&g0, n);
        let want = kron(&quadrature_p(n), &pauli(PauliAxis::X)).scale_real(-2.0 * 0.3);
        assert!(coupling.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn phase_rotation_operator_properties() {
        let n = dim(7);
        let id = ComplexMatrix::identity(14);
        assert_eq!(phase_rotation_operator(PhaseAngle::new(0.0), n), id);
        assert!(phase_rotation_operator(PhaseAngle::new(TAU), n).max_abs_diff(&id) < 1e-14);
        // unreduced 2π: integer spectrum of n closes the loop
        let u2pi = field_op(&ComplexMatrix::from_diagonal((0..7).map(|k| cis(-(k as f64) * TAU))));
        assert!(u2pi.max_abs_diff(&id) < 1e-14);
        for phi in [0.4, 2.2, 5.9] {
            let u = phase_rotation_operator(PhaseAngle::new(phi), n);
            assert!((&u * &u.adjoint()).max_abs_diff(&id) < 1e-14);
        }
    }

    #[test]
    fn effective_fields() {
        let jc = SpinModel::Jc(JcParams::from_detuning(3.0, 0.7).unwrap());
        let f = effective_field(&jc, 1.0, 2.0, PhaseAngle::new(0.0));
        assert!((f.b[0] - 0.7).abs() < 1e-15);
        assert!((f.b[1] - 1.4).abs() < 1e-15);
        assert!((f.b[2] - 1.5).abs() < 1e-15);
        assert_eq!(f.scalar, 0.0);

        let rabi_params = RabiParams::new(1.0, 2.0, 0.3).unwrap();
        let rabi = SpinModel::Rabi(rabi_params);
        let f = effective_field(&rabi, 1.0, 0.0, PhaseAngle::new(0.0));
        assert_eq!(f.b, [0.6, 0.0, 1.0]);
        assert_eq!(f.scalar, 0.5);
        for (x, p, phi) in [(0.3, -2.0, 0.1), (5.0, 1.0, 3.0), (-1.0, -1.0, 6.0)] {
            assert_eq!(effective_field(&rabi, x, p, PhaseAngle::new(phi)).b[1], 0.0);
        }
    }

    #[test]
    fn effective_field_eigenvalues_are_jc_surfaces() {
        let params = JcParams::from_detuning(1.2, 0.8).unwrap();
        let f = effective_field(&SpinModel::Jc(params), 0.7, -1.1, PhaseAngle::new(2.0));
        let eig = hermitian_eig(&f.spin_hamiltonian()).unwrap();
        let want = (0.36 + 0.64 * (0.49 + 1.21f64)).sqrt();
        assert!((eig.values()[1] - want).abs() < 1e-14);
        assert!((eig.values()[0] + want).abs() < 1e-14);
    }

    #[test]
    fn lambda_matrix() {
        let base = LambdaParams { e1: 0.1, e2: 0.2, e3: 1.5, kappa: 0.0, g: 0.0, chi: 0.3, omega: 1.0 };
        assert_eq!(
            build_lambda_potential_matrix(&base, 0.8),
            ComplexMatrix::from_real_diagonal([0.1, 0.2, 1.5])
        );
        let quarter = LambdaParams { kappa: 2.0, g: 1.0, chi: FRAC_PI_2, ..base };
        let m = build_lambda_potential_matrix(&quarter, 0.5);
        assert!(m[(0, 2)].norm() < 1e-15);
        assert_eq!(m[(1, 2)], C64::new(1.0, 0.0));
        assert_eq!(m.hermiticity_defect(), 0.0);
    }

    #[test]
    fn lambda_matrix_characteristic_roots() {
        // E1 = E2 = 0, E3 = δ: eigenvalues 0 and (δ ± √(δ² + 4G²))/2 with
        // G² = κ²cos²χ + 4g²x² (cubic -λ(λ² - δλ - G²) = 0)
        for delta in [0.0, 0.7, 2.0] {
            let p = LambdaParams { e1: 0.0, e2: 0.0, e3: delta, kappa: 1.0, g: 1.0, chi: 0.0, omega: 1.0 };
            let eig = hermitian_eig(&build_lambda_potential_matrix(&p, 1.0)).unwrap();
            let g2 = 1.0 + 4.0;
            let root = (delta * delta + 4.0 * g2).sqrt();
            let mut want = [0.0, (delta - root) / 2.0, (delta + root) / 2.0];
            want.sort_by(f64::total_cmp);
            for (a, b) in eig.values().iter().zip(&want) {
                assert!((a - b).abs() < 1e-12, "delta={delta}: {a} vs {b}");
            }
        }
    }
}
