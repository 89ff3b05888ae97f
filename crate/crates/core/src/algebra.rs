//! Exact 2x2 complex matrix algebra and the density-matrix state type.
//!
//! Everything downstream (model Hamiltonians, master-equation right-hand
//! sides, Kraus updates) is built on [`Operator`] and [`DensityMatrix`].
//! All quantities are dimensionless (hbar = 1).

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Hermiticity tolerance for states fed in through the full-matrix API.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Allowed trace deviation along propagated trajectories.
pub const TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue tolerated before a state counts as non-positive.
pub const EIGMIN_TOL: f64 = -1e-8;

/// A 2x2 complex matrix. Row-major storage, copyable by value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator {
    m: [[Complex64; 2]; 2],
}

impl Operator {
    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Operator { m }
    }

    pub fn from_elements(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Operator {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Operator {
            m: [
                [Complex64::new(m[0][0], 0.0), Complex64::new(m[0][1], 0.0)],
                [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0)],
            ],
        }
    }

    pub fn zero() -> Self {
        Operator::from_real([[0.0, 0.0], [0.0, 0.0]])
    }

    pub fn identity() -> Self {
        Operator::from_real([[1.0, 0.0], [0.0, 1.0]])
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Operator::from_real([[a, 0.0], [0.0, b]])
    }

    pub fn sigma_x() -> Self {
        Operator::from_real([[0.0, 1.0], [1.0, 0.0]])
    }

    pub fn sigma_y() -> Self {
        Operator::from_elements(
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        )
    }

    pub fn sigma_z() -> Self {
        Operator::from_real([[1.0, 0.0], [0.0, -1.0]])
    }

    pub fn adjoint(&self) -> Self {
        Operator {
            m: [
                [self.m[0][0].conj(), self.m[1][0].conj()],
                [self.m[0][1].conj(), self.m[1][1].conj()],
            ],
        }
    }

    pub fn transpose(&self) -> Self {
        Operator {
            m: [[self.m[0][0], self.m[1][0]], [self.m[0][1], self.m[1][1]]],
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn scale(&self, s: f64) -> Self {
        *self * Complex64::new(s, 0.0)
    }

    /// Largest absolute value over the four entries.
    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        (*self - *other).max_abs()
    }

    /// Deviation from Hermiticity: max of |m12 - conj(m21)| and the
    /// imaginary parts of the diagonal.
    pub fn hermiticity_error(&self) -> f64 {
        let off = (self.m[0][1] - self.m[1][0].conj()).norm();
        off.max(self.m[0][0].im.abs()).max(self.m[1][1].im.abs())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    /// Eigenvalues of a Hermitian matrix, ordered (upper, lower).
    ///
    /// Uses trace/determinant of the actual entries, so it doubles as an
    /// independent check on closed-form spectra.
    pub fn eigenvalues_hermitian(&self) -> (f64, f64) {
        let mean = 0.5 * self.trace().re;
        let d = 0.5 * (self.m[0][0].re - self.m[1][1].re);
        let r = (d * d + self.m[0][1].norm_sqr()).sqrt();
        (mean + r, mean - r)
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.m[r][c]
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        let mut m = self.m;
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] += rhs.m[r][c];
            }
        }
        Operator { m }
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        let mut m = self.m;
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] -= rhs.m[r][c];
            }
        }
        Operator { m }
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator::zero() - self
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        let a = &self.m;
        let b = &rhs.m;
        Operator {
            m: [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ],
        }
    }
}

impl Mul<Complex64> for Operator {
    type Output = Operator;
    fn mul(self, s: Complex64) -> Operator {
        let mut m = self.m;
        for r in 0..2 {
            for c in 0..2 {
                m[r][c] *= s;
            }
        }
        Operator { m }
    }
}

/// AB - BA.
pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    *a * *b - *b * *a
}

/// exp(-i H t) for Hermitian `h`, via the closed 2x2 form.
///
/// Exactly unitary up to rounding; no series truncation.
pub fn expm_minus_i(h: &Operator, t: f64) -> Operator {
    let mean = 0.5 * h.trace().re;
    let b = *h - Operator::diag(mean, mean);
    let beta = b[(0, 0)].re;
    let gamma = b[(0, 1)];
    let r = (beta * beta + gamma.norm_sqr()).sqrt();
    let phase = Complex64::from_polar(1.0, -mean * t);
    if r * t.abs() < 1e-300 {
        return Operator::identity() * phase;
    }
    let (s, c) = (r * t).sin_cos();
    let f = Complex64::new(0.0, -s / r);
    (Operator::identity() * Complex64::new(c, 0.0) + b * f) * phase
}

/// Which representation a state lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    /// Fixed two-state basis with linearly crossing diagonal energies.
    Diabatic,
    /// Instantaneous eigenbasis of the Hamiltonian; index 1 is the upper level.
    Adiabatic,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Basis::Diabatic => write!(f, "diabatic"),
            Basis::Adiabatic => write!(f, "adiabatic"),
        }
    }
}

/// A validated two-level state.
///
/// Hermiticity is structural: only rho11, rho22 and rho12 are stored and
/// rho21 is always the conjugate of rho12.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    pop1: f64,
    pop2: f64,
    coh: Complex64,
    basis: Basis,
}

/// Diagnostic report produced by [`validate_density`]. Purely informative;
/// construction of states goes through the checked constructors instead.
#[derive(Clone, Debug)]
pub struct StateDiagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub purity: f64,
    pub violations: Vec<String>,
}

impl StateDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for StateDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "trace err {:.2e}, hermiticity err {:.2e}, min eig {:.3e}, purity {:.6}",
            self.trace_error, self.hermiticity_error, self.min_eigenvalue, self.purity
        )?;
        if !self.violations.is_empty() {
            write!(f, " [{}]", self.violations.join("; "))?;
        }
        Ok(())
    }
}

/// Inspect an arbitrary matrix as a candidate density matrix.
pub fn validate_density(op: &Operator, basis_hint: Basis) -> StateDiagnostics {
    let _ = basis_hint;
    let herm = op.hermiticity_error();
    let trace_error = (op.trace() - Complex64::new(1.0, 0.0)).norm();
    // Work with the Hermitian part so the eigenvalue bound is meaningful
    // even for slightly asymmetric input.
    let h = (*op + op.adjoint()) * Complex64::new(0.5, 0.0);
    let (_, lo) = h.eigenvalues_hermitian();
    let purity = (h * h).trace().re;
    let mut violations = Vec::new();
    if trace_error > TRACE_TOL {
        violations.push(format!("trace deviates from 1 by {trace_error:.2e}"));
    }
    if herm > HERMITICITY_TOL {
        violations.push(format!("not Hermitian (error {herm:.2e})"));
    }
    if lo < EIGMIN_TOL {
        violations.push(format!("negative eigenvalue {lo:.3e}"));
    }
    StateDiagnostics {
        trace_error,
        hermiticity_error: herm,
        min_eigenvalue: lo,
        purity,
        violations,
    }
}

impl DensityMatrix {
    /// Checked constructor from the stored components.
    pub fn new(pop1: f64, pop2: f64, coh: Complex64, basis: Basis) -> Result<Self> {
        let rho = DensityMatrix {
            pop1,
            pop2,
            coh,
            basis,
        };
        let diag = rho.diagnostics();
        if diag.is_valid() {
            Ok(rho)
        } else {
            Err(Error::InvalidState(diag.to_string()))
        }
    }

    /// Constructor that skips validation. For integrator internals where the
    /// invariants are maintained by construction.
    pub(crate) fn new_unchecked(pop1: f64, pop2: f64, coh: Complex64, basis: Basis) -> Self {
        DensityMatrix {
            pop1,
            pop2,
            coh,
            basis,
        }
    }

    /// Build from a full matrix, enforcing Hermiticity within tolerance.
    pub fn from_operator(op: &Operator, basis: Basis) -> Result<Self> {
        let herm = op.hermiticity_error();
        if herm > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!(
                "matrix is not Hermitian (error {herm:.2e})"
            )));
        }
        let coh = (op[(0, 1)] + op[(1, 0)].conj()) * Complex64::new(0.5, 0.0);
        DensityMatrix::new(op[(0, 0)].re, op[(1, 1)].re, coh, basis)
    }

    /// State fully in level 1.
    pub fn pure_1(basis: Basis) -> Self {
        DensityMatrix::new_unchecked(1.0, 0.0, Complex64::new(0.0, 0.0), basis)
    }

    /// State fully in level 2.
    pub fn pure_2(basis: Basis) -> Self {
        DensityMatrix::new_unchecked(0.0, 1.0, Complex64::new(0.0, 0.0), basis)
    }

    pub fn maximally_mixed(basis: Basis) -> Self {
        DensityMatrix::new_unchecked(0.5, 0.5, Complex64::new(0.0, 0.0), basis)
    }

    /// State from Bloch-vector components; requires |r| <= 1.
    pub fn from_bloch(x: f64, y: f64, z: f64, basis: Basis) -> Result<Self> {
        let r = (x * x + y * y + z * z).sqrt();
        if r > 1.0 + 1e-12 {
            return Err(Error::InvalidParam {
                name: "bloch radius",
                requirement: "<= 1",
                value: r,
            });
        }
        Ok(DensityMatrix::new_unchecked(
            0.5 * (1.0 + z),
            0.5 * (1.0 - z),
            Complex64::new(0.5 * x, -0.5 * y),
            basis,
        ))
    }

    pub fn operator(&self) -> Operator {
        Operator::from_elements(
            Complex64::new(self.pop1, 0.0),
            self.coh,
            self.coh.conj(),
            Complex64::new(self.pop2, 0.0),
        )
    }

    pub fn populations(&self) -> (f64, f64) {
        (self.pop1, self.pop2)
    }

    pub fn coherence(&self) -> Complex64 {
        self.coh
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn trace(&self) -> f64 {
        self.pop1 + self.pop2
    }

    /// Tr(rho^2); 1 for pure states, 1/2 for the maximally mixed state.
    pub fn purity(&self) -> f64 {
        self.pop1 * self.pop1 + self.pop2 * self.pop2 + 2.0 * self.coh.norm_sqr()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.operator().eigenvalues_hermitian().1
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        validate_density(&self.operator(), self.basis)
    }

    pub(crate) fn expect_basis(&self, expected: Basis) -> Result<()> {
        if self.basis != expected {
            return Err(Error::BasisMismatch {
                expected,
                found: self.basis,
            });
        }
        Ok(())
    }
}

/// -(lambda/2) [A, [A, rho]]: the dephasing generator for a nonselectively
/// monitored observable A.
pub fn dephasing_term(a: &Operator, rho: &DensityMatrix, lambda: f64) -> Result<Operator> {
    if lambda < 0.0 {
        return Err(Error::InvalidParam {
            name: "lambda",
            requirement: ">= 0",
            value: lambda,
        });
    }
    debug_assert!(a.is_hermitian(1e-9), "dephasing observable must be Hermitian");
    let inner = commutator(a, &rho.operator());
    Ok(commutator(a, &inner).scale(-0.5 * lambda))
}
