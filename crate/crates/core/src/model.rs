//! The avoided-crossing model: Hamiltonians in both frames, the frame
//! transformation and its gauge term, and the closed-form results used as
//! oracles elsewhere.
//!
//! Dimensionless variables throughout: time t, sweep parameter z = V^2/u,
//! measurement strength lambda (written `lambda_tilde` in code). The diabatic
//! Hamiltonian is z*[[t, 1], [1, -t]]; its instantaneous eigenvalues are
//! +/- z*sqrt(t^2+1).

use num_complex::Complex64;

use crate::algebra::{Basis, DensityMatrix, Operator};
use crate::error::{Error, Result};

/// Model parameters: sweep parameter `z > 0`, measurement strength
/// `lambda_tilde >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LzParams {
    z: f64,
    lambda_tilde: f64,
}

impl LzParams {
    pub fn new(z: f64, lambda_tilde: f64) -> Result<Self> {
        if !(z > 0.0) || !z.is_finite() {
            return Err(Error::InvalidParam {
                name: "z",
                requirement: "> 0 and finite",
                value: z,
            });
        }
        if !(lambda_tilde >= 0.0) || !lambda_tilde.is_finite() {
            return Err(Error::InvalidParam {
                name: "lambda",
                requirement: ">= 0 and finite",
                value: lambda_tilde,
            });
        }
        Ok(LzParams { z, lambda_tilde })
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn lambda_tilde(&self) -> f64 {
        self.lambda_tilde
    }

    pub fn with_lambda(&self, lambda_tilde: f64) -> Result<Self> {
        LzParams::new(self.z, lambda_tilde)
    }

    /// Freeze scale lambda/z: past this time strong diabatic measurement can
    /// no longer transfer population.
    pub fn freeze_time(&self) -> f64 {
        self.lambda_tilde / self.z
    }
}

/// Frame-mixing angle, kept on the continuous (0, pi) branch so the
/// transformation stays differentiable across the crossing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixingAngle(f64);

impl MixingAngle {
    pub fn radians(&self) -> f64 {
        self.0
    }
}

/// tan(theta) = 1/t on the branch with theta(-inf) = pi, theta(0) = pi/2,
/// theta(+inf) = 0.
pub fn mixing_angle(t_tilde: f64) -> MixingAngle {
    MixingAngle(1.0_f64.atan2(t_tilde))
}

fn check_z(z: f64) -> Result<()> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::InvalidParam {
            name: "z",
            requirement: "> 0 and finite",
            value: z,
        });
    }
    Ok(())
}

/// Diabatic-frame Hamiltonian z*[[t, 1], [1, -t]].
pub fn hamiltonian_diabatic(t_tilde: f64, z: f64) -> Result<Operator> {
    check_z(z)?;
    Ok(Operator::from_real([[z * t_tilde, z], [z, -z * t_tilde]]))
}

/// Instantaneous eigenvalues (+z*sqrt(t^2+1), -z*sqrt(t^2+1)).
pub fn adiabatic_energies(t_tilde: f64, z: f64) -> Result<(f64, f64)> {
    check_z(z)?;
    let e = z * (t_tilde * t_tilde + 1.0).sqrt();
    Ok((e, -e))
}

/// The real orthogonal frame transformation
/// [[cos(theta/2), sin(theta/2)], [-sin(theta/2), cos(theta/2)]].
///
/// U H_dia U^T is diagonal with the upper eigenvalue in the (1,1) slot, so
/// adiabatic index 1 labels the upper level.
pub fn transform_u(t_tilde: f64) -> Operator {
    let h = 0.5 * mixing_angle(t_tilde).radians();
    let (s, c) = h.sin_cos();
    Operator::from_real([[c, s], [-s, c]])
}

/// Gauge term U dU^{-1}/dt = (1 / (2 (1 + t^2))) * [[0, 1], [-1, 0]].
///
/// Real antisymmetric and traceless. The sign with which it enters the
/// adiabatic-frame master equation is a separate, empirically locked
/// constant; see `dynamics::GAUGE_COMMUTATOR_SIGN`.
pub fn gauge_term_m(t_tilde: f64) -> Operator {
    let m = 0.5 / (1.0 + t_tilde * t_tilde);
    Operator::from_real([[0.0, m], [-m, 0.0]])
}

fn conjugate_by(u: &Operator, rho: &DensityMatrix, to: Basis) -> Result<DensityMatrix> {
    let m = *u * rho.operator() * u.adjoint();
    // the conjugation of a Hermitian matrix is Hermitian; symmetrize rounding
    let coh = (m[(0, 1)] + m[(1, 0)].conj()) * Complex64::new(0.5, 0.0);
    DensityMatrix::new(m[(0, 0)].re, m[(1, 1)].re, coh, to)
}

/// Map a diabatic-frame state into the adiabatic frame at time t.
pub fn to_adiabatic(rho: &DensityMatrix, t_tilde: f64) -> Result<DensityMatrix> {
    rho.expect_basis(Basis::Diabatic)?;
    conjugate_by(&transform_u(t_tilde), rho, Basis::Adiabatic)
}

/// Inverse of [`to_adiabatic`].
pub fn to_diabatic(rho: &DensityMatrix, t_tilde: f64) -> Result<DensityMatrix> {
    rho.expect_basis(Basis::Adiabatic)?;
    conjugate_by(&transform_u(t_tilde).transpose(), rho, Basis::Diabatic)
}

/// Asymptotic probability to stay in the initially occupied diabatic level
/// with no measurement: exp(-pi z).
pub fn lz_survival_probability(z: f64) -> Result<f64> {
    check_z(z)?;
    Ok((-std::f64::consts::PI * z).exp())
}

/// Survival after N equally spaced projective interrogations over [0, T] of
/// a degenerate two-level system with coupling V:
/// (1/2) (1 + exp(-2 V^2 T^2 / N)).
pub fn zeno_projective_survival(v: f64, t_total: f64, n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParam {
            name: "n",
            requirement: ">= 1",
            value: n as f64,
        });
    }
    if !(t_total >= 0.0) {
        return Err(Error::InvalidParam {
            name: "t_total",
            requirement: ">= 0",
            value: t_total,
        });
    }
    Ok(0.5 * (1.0 + (-2.0 * v * v * t_total * t_total / n as f64).exp()))
}

/// Lorentzian estimate of the population-equilibration rate under strong
/// diabatic measurement: 4 z^2 lambda / ((2 lambda)^2 + (2 z t)^2), which is
/// z^2/lambda at the crossing.
///
/// This is the commonly quoted adiabatic-elimination value. The exact slow
/// eigenvalue of the static two-level system is lambda - sqrt(lambda^2 -
/// 4 z^2) ~ 2 z^2/lambda, twice this estimate; see the decay-fit tests.
pub fn strong_measurement_rate(z: f64, lambda_tilde: f64, t_tilde: f64) -> Result<f64> {
    check_z(z)?;
    if !(lambda_tilde > 0.0) {
        return Err(Error::InvalidParam {
            name: "lambda",
            requirement: "> 0 (strong-measurement limit)",
            value: lambda_tilde,
        });
    }
    let num = 4.0 * z * z * lambda_tilde;
    let den = 4.0 * lambda_tilde * lambda_tilde + 4.0 * z * z * t_tilde * t_tilde;
    Ok(num / den)
}

/// Adiabatic-elimination estimate of the diabatic coherence:
/// -i z drho / (2 i z t + 2 lambda).
pub fn approx_coherence(
    delta_rho: f64,
    t_tilde: f64,
    z: f64,
    lambda_tilde: f64,
) -> Result<Complex64> {
    check_z(z)?;
    if lambda_tilde == 0.0 && t_tilde == 0.0 {
        return Err(Error::InvalidParam {
            name: "lambda",
            requirement: "> 0 when t = 0 (denominator vanishes)",
            value: lambda_tilde,
        });
    }
    let num = Complex64::new(0.0, -z * delta_rho);
    let den = Complex64::new(2.0 * lambda_tilde, 2.0 * z * t_tilde);
    Ok(num / den)
}

/// Rough asymptotic population difference exp(-z) when the evolution freezes
/// before equilibration (freeze scale lambda/z > 1). Order-of-magnitude only.
pub fn freeze_estimate(z: f64) -> Result<f64> {
    check_z(z)?;
    Ok((-z).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn params_validation() {
        assert!(LzParams::new(0.5, 0.0).is_ok());
        assert!(LzParams::new(0.0, 0.0).is_err());
        assert!(LzParams::new(-1.0, 0.0).is_err());
        assert!(LzParams::new(0.5, -0.1).is_err());
    }

    #[test]
    fn hamiltonian_examples() {
        let h = hamiltonian_diabatic(0.0, 0.5).unwrap();
        assert!(h.max_abs_diff(&Operator::from_real([[0.0, 0.5], [0.5, 0.0]])) < 1e-15);
        let h = hamiltonian_diabatic(2.0, 0.05).unwrap();
        assert!(h.max_abs_diff(&Operator::from_real([[0.1, 0.05], [0.05, -0.1]])) < 1e-15);
        assert!(hamiltonian_diabatic(0.0, 0.0).is_err());
    }

    #[test]
    fn hamiltonian_eigenvalues_at_unit_time() {
        let h = hamiltonian_diabatic(1.0, 0.5).unwrap();
        let (hi, lo) = h.eigenvalues_hermitian();
        assert_relative_eq!(hi, 0.5 * 2.0_f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(lo, -0.5 * 2.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn adiabatic_energies_match_numerical_spectrum() {
        // trace/determinant eigenvalues of the explicit matrix as the oracle
        for &t in &[-200.0, -7.3, -1.0, 0.0, 0.4, 3.0, 55.0, 200.0] {
            for &z in &[0.05, 0.5, 5.0] {
                let (hi, lo) = adiabatic_energies(t, z).unwrap();
                let (ehi, elo) = hamiltonian_diabatic(t, z).unwrap().eigenvalues_hermitian();
                assert_relative_eq!(hi, ehi, epsilon = 1e-12);
                assert_relative_eq!(lo, elo, epsilon = 1e-12);
            }
        }
        let (hi, lo) = adiabatic_energies(0.0, 0.3).unwrap();
        assert_relative_eq!(hi, 0.3);
        assert_relative_eq!(lo, -0.3);
    }

    #[test]
    fn mixing_angle_branch() {
        assert_relative_eq!(mixing_angle(0.0).radians(), FRAC_PI_2);
        assert_relative_eq!(mixing_angle(1.0).radians(), FRAC_PI_4);
        assert_relative_eq!(mixing_angle(-1.0).radians(), 3.0 * FRAC_PI_4);
        // continuous and strictly decreasing
        let mut prev = mixing_angle(-1e6).radians();
        assert_relative_eq!(prev, PI, epsilon = 1e-5);
        for i in 1..=400 {
            let t = -20.0 + 0.1 * i as f64;
            let th = mixing_angle(t).radians();
            assert!(th < prev && th > 0.0 && th < PI);
            prev = th;
        }
    }

    #[test]
    fn transform_at_crossing() {
        let u = transform_u(0.0);
        let r = 0.5_f64.sqrt();
        assert!(u.max_abs_diff(&Operator::from_real([[r, r], [-r, r]])) < 1e-15);
    }

    #[test]
    fn transform_diagonalizes_hamiltonian() {
        for &t in &[-200.0, -3.0, -0.2, 0.0, 0.7, 12.0, 200.0] {
            for &z in &[0.05, 0.5, 5.0] {
                let u = transform_u(t);
                let h = hamiltonian_diabatic(t, z).unwrap();
                let d = u * h * u.transpose();
                let (hi, lo) = adiabatic_energies(t, z).unwrap();
                assert!(d[(0, 1)].norm() < 1e-12, "off-diagonal at t={t}, z={z}");
                assert!(d[(1, 0)].norm() < 1e-12);
                assert_relative_eq!(d[(0, 0)].re, hi, epsilon = 1e-12);
                assert_relative_eq!(d[(1, 1)].re, lo, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn transform_tends_to_identity_late() {
        let u = transform_u(1e9);
        assert!(u.max_abs_diff(&Operator::identity()) < 1e-9);
    }

    #[test]
    fn gauge_term_magnitudes() {
        assert_relative_eq!(gauge_term_m(0.0)[(0, 1)].re.abs(), 0.5);
        assert_relative_eq!(gauge_term_m(1.0)[(0, 1)].re.abs(), 0.25);
    }

    #[test]
    fn gauge_term_matches_finite_difference_of_inverse_transform() {
        let h = 1e-6;
        for &t in &[-40.0, -2.0, -0.3, 0.0, 0.5, 1.0, 9.0, 150.0] {
            let du_inv = (transform_u(t + h).transpose() - transform_u(t - h).transpose())
                * Complex64::new(0.5 / h, 0.0);
            let fd = transform_u(t) * du_inv;
            assert!(
                gauge_term_m(t).max_abs_diff(&fd) < 1e-6,
                "finite-difference mismatch at t={t}"
            );
        }
    }

    #[test]
    fn gauge_term_antisymmetric_traceless() {
        for &t in &[-100.0, -1.0, 0.0, 2.5, 77.0] {
            let m = gauge_term_m(t);
            assert!((m + m.transpose()).max_abs() < 1e-15);
            assert!(m.trace().norm() < 1e-15);
        }
    }

    #[test]
    fn frame_change_examples() {
        // distant past: diabatic level 1 is the lower adiabatic level
        let rho = DensityMatrix::pure_1(Basis::Diabatic);
        let adi = to_adiabatic(&rho, -1e9).unwrap();
        let (p1, p2) = adi.populations();
        assert!(p1 < 1e-15 && (p2 - 1.0).abs() < 1e-15);

        // at the crossing: equal mixture with coherence -1/2
        let adi = to_adiabatic(&rho, 0.0).unwrap();
        let (p1, p2) = adi.populations();
        assert_relative_eq!(p1, 0.5, epsilon = 1e-15);
        assert_relative_eq!(p2, 0.5, epsilon = 1e-15);
        assert_relative_eq!(adi.coherence().re, -0.5, epsilon = 1e-15);

        // maximally mixed state is frame-invariant
        let mixed = DensityMatrix::maximally_mixed(Basis::Diabatic);
        let adi = to_adiabatic(&mixed, 3.7).unwrap();
        assert!(adi.operator().max_abs_diff(&mixed.operator()) < 1e-15);

        // inverse of the distant-past example
        let back = to_diabatic(&DensityMatrix::pure_2(Basis::Adiabatic), -1e9).unwrap();
        assert!((back.populations().0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn frame_round_trip_on_random_states() {
        let mut rng = StdRng::seed_from_u64(42);
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let rho = crate::algebra::test_support::random_state(&mut rng, Basis::Diabatic);
            let t: f64 = rng.gen_range(-200.0..200.0);
            let back = to_diabatic(&to_adiabatic(&rho, t).unwrap(), t).unwrap();
            worst = worst.max(back.operator().max_abs_diff(&rho.operator()));
        }
        assert!(worst <= 1e-14, "round-trip error {worst:.2e}");
    }

    #[test]
    fn frame_change_rejects_wrong_tag() {
        let rho = DensityMatrix::pure_1(Basis::Adiabatic);
        assert!(to_adiabatic(&rho, 0.0).is_err());
        let rho = DensityMatrix::pure_1(Basis::Diabatic);
        assert!(to_diabatic(&rho, 0.0).is_err());
    }

    #[test]
    fn survival_probability_values() {
        assert_relative_eq!(
            lz_survival_probability(0.5).unwrap(),
            0.20787957635076193,
            epsilon = 1e-15
        );
        assert!(lz_survival_probability(1e-9).unwrap() > 0.999_999_99);
        assert!(lz_survival_probability(0.0).is_err());
        // strictly decreasing in z
        let mut prev = 1.0;
        for i in 1..50 {
            let p = lz_survival_probability(0.1 * i as f64).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn projective_survival_formula() {
        assert_relative_eq!(zeno_projective_survival(0.0, 3.0, 7).unwrap(), 1.0);
        assert_relative_eq!(
            zeno_projective_survival(1.0, 1.0, 1).unwrap(),
            0.5676676416183064,
            epsilon = 1e-15
        );
        // increasing in N, tending to 1
        let mut prev = 0.0;
        for n in [1u32, 2, 5, 10, 100, 1000, 100_000] {
            let p = zeno_projective_survival(1.0, 1.0, n).unwrap();
            assert!(p > prev);
            prev = p;
        }
        assert!(prev > 0.99999);
        assert!(zeno_projective_survival(1.0, -1.0, 5).is_err());
        assert!(zeno_projective_survival(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn rate_estimate_values() {
        assert_relative_eq!(strong_measurement_rate(0.5, 5.0, 0.0).unwrap(), 0.05);
        // half the peak where z*t = lambda
        assert_relative_eq!(strong_measurement_rate(0.5, 5.0, 10.0).unwrap(), 0.025);
        let mut prev = f64::INFINITY;
        for &l in &[1.0, 2.0, 4.0, 8.0, 16.0] {
            let r = strong_measurement_rate(0.5, l, 0.0).unwrap();
            assert!(r < prev);
            prev = r;
        }
        assert!(strong_measurement_rate(0.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn coherence_estimate() {
        let c = approx_coherence(1.0, 0.0, 0.5, 2.0).unwrap();
        assert!((c - Complex64::new(0.0, -0.125)).norm() < 1e-15);
        assert_eq!(approx_coherence(0.0, 3.0, 0.5, 1.0).unwrap().norm(), 0.0);
        assert!(approx_coherence(1.0, 0.0, 0.5, 0.0).is_err());
        // |estimate| <= z |drho| / (2 lambda)
        let c = approx_coherence(0.7, 5.0, 0.5, 2.0).unwrap();
        assert!(c.norm() <= 0.5 * 0.7 / 4.0 + 1e-15);
    }

    #[test]
    fn freeze_estimate_values() {
        assert_relative_eq!(freeze_estimate(1.0).unwrap(), (-1.0_f64).exp());
        assert!(freeze_estimate(1e-12).unwrap() > 0.999_999);
        assert!(freeze_estimate(-0.5).is_err());
    }
}
