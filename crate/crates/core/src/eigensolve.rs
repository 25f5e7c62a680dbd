//! Dense Hermitian eigendecomposition.
//!
//! The matrix is reduced to Hermitian tridiagonal form with Householder
//! reflectors, the complex sub-diagonal is made real by a diagonal unitary,
//! and the resulting real symmetric tridiagonal matrix is diagonalized with
//! the implicit-shift QL iteration (after EISPACK `tql2`). Eigenvectors are
//! back-transformed through the phases and the reflectors.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::matrix::ComplexMatrix;
use crate::settings::NumericSettings;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("input is not Hermitian: max |H - H†| entry is {defect:e}")]
    NonHermitianInput { defect: f64 },
    #[error("input contains non-finite entries")]
    NonFiniteInput,
    #[error("QL iteration did not converge for eigenvalue {index} after {iterations} iterations")]
    ConvergenceFailure { index: usize, iterations: usize },
}

/// Ascending eigenvalues with their orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    values: Vec<f64>,
    vectors: Vec<Vec<C64>>,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvector paired with `values()[j]`.
    pub fn vector(&self, j: usize) -> &[C64] {
        &self.vectors[j]
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<Vec<C64>>) {
        (self.values, self.vectors)
    }

    /// `V diag(λ) V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n);
        for (lambda, v) in self.values.iter().zip(&self.vectors) {
            for i in 0..n {
                let vi = v[i] * lambda;
                for j in 0..n {
                    out[(i, j)] += vi * v[j].conj();
                }
            }
        }
        out
    }
}

pub fn hermitian_eig(h: &ComplexMatrix) -> Result<EigenDecomposition, EigenError> {
    hermitian_eig_with(h, &NumericSettings::default())
}

pub fn hermitian_eig_with(
    h: &ComplexMatrix,
    settings: &NumericSettings,
) -> Result<EigenDecomposition, EigenError> {
    if !h.is_finite() {
        return Err(EigenError::NonFiniteInput);
    }
    let defect = h.hermiticity_defect();
    if defect > settings.hermiticity_tol {
        return Err(EigenError::NonHermitianInput { defect });
    }
    let n = h.dim();
    if n == 0 {
        return Ok(EigenDecomposition { values: vec![], vectors: vec![] });
    }

    let tri = tridiagonalize(h);

    // D such that T = D T' D† with T' real.
    let mut phases = vec![C64::new(1.0, 0.0); n];
    let mut off = vec![0.0; n];
    for k in 0..n - 1 {
        let e = tri.sub[k];
        let mag = e.norm();
        off[k] = mag;
        phases[k + 1] = if mag > 0.0 { phases[k] * (e / mag) } else { phases[k] };
    }

    let mut diag = tri.diag;
    // zt[j*n + i] = component i of eigenvector j of T'
    let mut zt = vec![0.0; n * n];
    for i in 0..n {
        zt[i * n + i] = 1.0;
    }
    tql2(&mut diag, &mut off, &mut zt, settings.max_iterations_per_eigenvalue)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));

    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &j in &order {
        values.push(diag[j]);
        let z = &zt[j * n..(j + 1) * n];
        let mut v: Vec<C64> = phases.iter().zip(z).map(|(d, &zi)| d * zi).collect();
        for r in tri.reflectors.iter().rev() {
            r.apply(&mut v);
        }
        fix_phase(&mut v);
        vectors.push(v);
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Minimal eigenvalue and its eigenvector.
pub fn ground_state(h: &ComplexMatrix) -> Result<(f64, Vec<C64>), EigenError> {
    let (values, mut vectors) = hermitian_eig(h)?.into_parts();
    Ok((values[0], vectors.swap_remove(0)))
}

/// Rescales `v` so that its largest-magnitude component is real and
/// positive. Components within a relative 1e-12 of the maximum count as
/// ties; the lowest index wins.
pub fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-12))
        .expect("non-empty vector");
    let z = v[pivot];
    let rot = z.conj() / z.norm();
    for c in v.iter_mut() {
        *c *= rot;
    }
    v[pivot] = C64::new(v[pivot].norm(), 0.0);
}

/// `I - τ v v†` acting on indices `offset..`.
struct Reflector {
    offset: usize,
    v: Vec<C64>,
    tau: f64,
}

impl Reflector {
    fn apply(&self, x: &mut [C64]) {
        let tail = &mut x[self.offset..];
        let dot: C64 = self.v.iter().zip(tail.iter()).map(|(a, b)| a.conj() * b).sum();
        let s = dot * self.tau;
        for (xi, vi) in tail.iter_mut().zip(&self.v) {
            *xi -= vi * s;
        }
    }
}

struct Tridiagonal {
    diag: Vec<f64>,
    /// `T[k+1][k]`
    sub: Vec<C64>,
    reflectors: Vec<Reflector>,
}

fn tridiagonalize(h: &ComplexMatrix) -> Tridiagonal {
    let n = h.dim();
    let mut a = h.as_slice().to_vec();
    let mut diag = vec![0.0; n];
    let mut sub = vec![C64::new(0.0, 0.0); n.saturating_sub(1)];
    let mut reflectors = Vec::new();

    for k in 0..n.saturating_sub(1) {
        diag[k] = a[k * n + k].re;
        let m = n - k - 1;
        let x: Vec<C64> = (k + 1..n).map(|i| a[i * n + k]).collect();
        let tail_sq: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail_sq == 0.0 {
            sub[k] = x[0];
            continue;
        }
        let x0 = x[0];
        let xnorm = (x0.norm_sqr() + tail_sq).sqrt();
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let beta = -phase * xnorm;
        let mut v = x;
        v[0] = x0 - beta;
        let vnorm_sq: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let tau = 2.0 / vnorm_sq;
        sub[k] = beta;

        // p = τ B v on the trailing block B = a[k+1.., k+1..]
        let off = k + 1;
        let mut p = vec![C64::new(0.0, 0.0); m];
        for (i, pi) in p.iter_mut().enumerate() {
            let row = &a[(off + i) * n + off..(off + i) * n + n];
            let s: C64 = row.iter().zip(&v).map(|(b, vj)| b * vj).sum();
            *pi = s * tau;
        }
        let vp: C64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let kfac = vp * (0.5 * tau);
        let w: Vec<C64> = p.iter().zip(&v).map(|(pi, vi)| pi - kfac * vi).collect();
        for i in 0..m {
            let (vi, wi) = (v[i], w[i]);
            let row = &mut a[(off + i) * n + off..(off + i) * n + n];
            for (j, b) in row.iter_mut().enumerate() {
                *b -= vi * w[j].conj() + wi * v[j].conj();
            }
        }
        reflectors.push(Reflector { offset: off, v, tau });
    }
    if n > 0 {
        diag[n - 1] = a[(n - 1) * n + (n - 1)].re;
    }
    Tridiagonal { diag, sub, reflectors }
}

/// Implicit-shift QL on the symmetric tridiagonal matrix with diagonal `d`
/// and sub-diagonal `e[0..n-1]` (`e[n-1]` ignored). Rotations are
/// accumulated into the rows of `zt` (row j holds eigenvector j).
fn tql2(d: &mut [f64], e: &mut [f64], zt: &mut [f64], max_iter: usize) -> Result<(), EigenError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_iter {
                    return Err(EigenError::ConvergenceFailure { index: l, iterations: max_iter });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = zt.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let t = *b;
                        *b = s * *a + c * t;
                        *a = c * *a - s * t;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
