//! Truncated bosonic operators, two-level operators and tensor products.
//!
//! Conventions used by every module:
//!
//! * Fock basis `|0⟩ … |n_max-1⟩`.
//! * Atomic basis ordered `s = 0 ≙ |1⟩` (ground), `s = 1 ≙ |2⟩` (excited),
//!   so `σz = diag(-1, +1)` and `σ+ = |2⟩⟨1|`.
//! * Composite states are field-major: index `2n + s` for `|n⟩ ⊗ |s⟩`.
//! * Quadratures `x = (a + a†)/√2`, `p = -i(a - a†)/√2`, so `[x, p] = i`
//!   away from the truncation edge.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::matrix::ComplexMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("truncation must keep at least 2 Fock levels, got {0}")]
    TooFewLevels(usize),
}

/// Number of retained Fock levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TruncationDim(usize);

impl TruncationDim {
    pub fn new(n_max: usize) -> Result<Self, FockError> {
        if n_max < 2 {
            return Err(FockError::TooFewLevels(n_max));
        }
        Ok(Self(n_max))
    }

    #[inline]
    pub fn levels(self) -> usize {
        self.0
    }

    /// Dimension of the field ⊗ two-level space.
    #[inline]
    pub fn composite_dim(self) -> usize {
        2 * self.0
    }
}

/// Composite index of `|n⟩ ⊗ |s⟩`.
#[inline]
pub fn composite_index(n: usize, s: AtomLevel) -> usize {
    2 * n + s as usize
}

/// The two atomic levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomLevel {
    /// `|1⟩`
    Ground = 0,
    /// `|2⟩`
    Excited = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `a` with `⟨n-1|a|n⟩ = √n`.
pub fn annihilation(n: TruncationDim) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(n.levels());
    for k in 1..n.levels() {
        a[(k - 1, k)] = re((k as f64).sqrt());
    }
    a
}

/// `a†`, the exact adjoint of [`annihilation`].
pub fn creation(n: TruncationDim) -> ComplexMatrix {
    annihilation(n).adjoint()
}

pub fn number(n: TruncationDim) -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal((0..n.levels()).map(|k| k as f64))
}

pub fn quadrature_x(n: TruncationDim) -> ComplexMatrix {
    let a = annihilation(n);
    (&a + &a.adjoint()).scale_real(std::f64::consts::FRAC_1_SQRT_2)
}

pub fn quadrature_p(n: TruncationDim) -> ComplexMatrix {
    let a = annihilation(n);
    (&a - &a.adjoint()).scale(C64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2))
}

pub fn pauli(axis: PauliAxis) -> ComplexMatrix {
    let z = C64::new(0.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let data = match axis {
        PauliAxis::X => vec![z, re(1.0), re(1.0), z],
        // σy = -i(σ+ - σ-) with σ+ = |2⟩⟨1| = E_{10}
        PauliAxis::Y => vec![z, i, -i, z],
        PauliAxis::Z => vec![re(-1.0), z, z, re(1.0)],
    };
    ComplexMatrix::from_row_major(data)
}

/// `σ+ = (σx + iσy)/2 = |2⟩⟨1|`.
pub fn sigma_plus() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2);
    m[(1, 0)] = re(1.0);
    m
}

/// `σ- = (σx - iσy)/2 = |1⟩⟨2|`.
pub fn sigma_minus() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(2);
    m[(0, 1)] = re(1.0);
    m
}

/// Tensor product with field-major ordering.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// `O ⊗ I₂` for a field operator `O`.
pub fn field_op(op: &ComplexMatrix) -> ComplexMatrix {
    op.kron(&ComplexMatrix::identity(2))
}

/// `I_N ⊗ S` for a spin operator `S`.
pub fn spin_op(n: TruncationDim, op: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::identity(n.levels()).kron(op)
}
