//! Gaussian weak-measurement layer: single-shot Kraus updates, the
//! nonselective dephasing channel, and discrete repeated-measurement
//! propagation.
//!
//! The discrete scheme alternates exact short-time unitaries with the
//! nonselective channel at per-shot strength lambda_bar = lambda * dt and
//! converges to the continuous master equation at first order in dt. It is
//! deliberately kept independent of the RK4 path so the two can be compared
//! as an oracle pair.

use num_complex::Complex64;

use crate::algebra::{expm_minus_i, Basis, DensityMatrix, Operator};
use crate::dynamics::{
    InvariantSummary, Protocol, SimConfig, Trajectory, TrajectoryPoint, GAUGE_COMMUTATOR_SIGN,
};
use crate::error::{Error, Result};
use crate::model;

/// A fuzzy single-shot measurement of a +/-1-valued observable (sigma_z in
/// the measured frame), with Gaussian resolution set by `lambda_bar`.
#[derive(Clone, Copy, Debug)]
pub struct GaussianMeasurement {
    lambda_bar: f64,
    observable: Operator,
}

impl GaussianMeasurement {
    pub fn new(lambda_bar: f64) -> Result<Self> {
        if !(lambda_bar >= 0.0) || !lambda_bar.is_finite() {
            return Err(Error::InvalidParam {
                name: "lambda_bar",
                requirement: ">= 0 and finite",
                value: lambda_bar,
            });
        }
        Ok(GaussianMeasurement {
            lambda_bar,
            observable: Operator::sigma_z(),
        })
    }

    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    pub fn observable(&self) -> &Operator {
        &self.observable
    }

    /// K_a = (2 lambda_bar / pi)^{1/4} exp(-lambda_bar (a - A)^2), diagonal
    /// in the measured frame.
    pub fn kraus_operator(&self, a: f64) -> Operator {
        let lb = self.lambda_bar;
        let norm = (2.0 * lb / std::f64::consts::PI).powf(0.25);
        Operator::diag(
            norm * (-lb * (a - 1.0) * (a - 1.0)).exp(),
            norm * (-lb * (a + 1.0) * (a + 1.0)).exp(),
        )
    }
}

/// Probability density of reading out `a`:
/// sqrt(2 lb / pi) [rho11 e^{-2 lb (a-1)^2} + rho22 e^{-2 lb (a+1)^2}].
pub fn measurement_pdf(rho: &DensityMatrix, a: f64, meas: &GaussianMeasurement) -> Result<f64> {
    let lb = meas.lambda_bar;
    let norm = (2.0 * lb / std::f64::consts::PI).sqrt();
    let (p1, p2) = rho.populations();
    Ok(norm
        * (p1 * (-2.0 * lb * (a - 1.0) * (a - 1.0)).exp()
            + p2 * (-2.0 * lb * (a + 1.0) * (a + 1.0)).exp()))
}

/// Post-measurement state after reading out `a`: K_a rho K_a / P(a).
pub fn selective_update(
    rho: &DensityMatrix,
    a: f64,
    meas: &GaussianMeasurement,
) -> Result<DensityMatrix> {
    let pdf = measurement_pdf(rho, a, meas)?;
    if pdf <= 1e-300 {
        return Err(Error::ZeroProbability { pdf });
    }
    let k = meas.kraus_operator(a);
    let updated = k * rho.operator() * k.adjoint();
    let (p1, p2) = (updated[(0, 0)].re / pdf, updated[(1, 1)].re / pdf);
    DensityMatrix::new(p1, p2, updated[(0, 1)] / pdf, rho.basis())
}

/// Outcome-averaged update. In closed form: populations unchanged,
/// coherence damped by exp(-2 lambda_bar).
pub fn nonselective_channel(
    rho: &DensityMatrix,
    meas: &GaussianMeasurement,
) -> Result<DensityMatrix> {
    let damp = (-2.0 * meas.lambda_bar).exp();
    let (p1, p2) = rho.populations();
    DensityMatrix::new(p1, p2, rho.coherence() * damp, rho.basis())
}

/// Effective propagation Hamiltonian in the protocol's own frame. For the
/// adiabatic frame the (Hermitian) gauge contribution i*sign*M is included
/// so that -i[H_eff, rho] reproduces the gauge commutator.
pub fn effective_hamiltonian(protocol: &Protocol, z: f64, t_tilde: f64) -> Result<Operator> {
    match protocol {
        Protocol::Diabatic => model::hamiltonian_diabatic(t_tilde, z),
        Protocol::Adiabatic => {
            let (upper, lower) = model::adiabatic_energies(t_tilde, z)?;
            let gauge = model::gauge_term_m(t_tilde) * Complex64::new(0.0, GAUGE_COMMUTATOR_SIGN);
            Ok(Operator::diag(upper, lower) + gauge)
        }
        Protocol::Static { delta_epsilon } => Ok(Operator::from_real([
            [0.5 * delta_epsilon, z],
            [z, -0.5 * delta_epsilon],
        ])),
    }
}

/// Exact unitary step exp(-i H dt) rho exp(+i H dt) with the Hamiltonian
/// frozen at the midpoint of the step. Trace- and purity-preserving up to
/// rounding.
pub fn unitary_step(
    rho: &DensityMatrix,
    t_tilde: f64,
    dt: f64,
    protocol: &Protocol,
    params: &model::LzParams,
) -> Result<DensityMatrix> {
    rho.expect_basis(protocol.propagation_basis())?;
    if dt == 0.0 {
        return Ok(*rho);
    }
    let h = effective_hamiltonian(protocol, params.z(), t_tilde + 0.5 * dt)?;
    let u = expm_minus_i(&h, dt);
    let m = u * rho.operator() * u.adjoint();
    let coh = (m[(0, 1)] + m[(1, 0)].conj()) * Complex64::new(0.5, 0.0);
    Ok(DensityMatrix::new_unchecked(
        m[(0, 0)].re,
        m[(1, 1)].re,
        coh,
        rho.basis(),
    ))
}

/// Discrete repeated-measurement propagation: alternate [`unitary_step`]
/// with the nonselective channel at per-shot strength lambda * dt_meas.
///
/// Converges to [`crate::dynamics::integrate`] at first order in `dt_meas`.
pub fn discrete_propagate(config: &SimConfig, dt_meas: f64) -> Result<Trajectory> {
    config.validate()?;
    if !(dt_meas > 0.0) {
        return Err(Error::InvalidParam {
            name: "dt_meas",
            requirement: "> 0",
            value: dt_meas,
        });
    }
    let (t0, t1) = config.window();
    let span = t1 - t0;
    let n = (span / dt_meas).round();
    if n < 1.0 || ((span / dt_meas) - n).abs() > 1e-6 * n {
        return Err(Error::InvalidConfig(format!(
            "window of length {span} is not an integer number of dt_meas = {dt_meas} shots"
        )));
    }
    let n = n as usize;
    let z = config.params().z();
    if z * t0.abs().max(t1.abs()).max(1.0) * dt_meas > 0.1 {
        log::warn!(
            "dt_meas = {dt_meas} is coarse for these parameters (H dt > 0.1); \
             the short-time propagator may be inaccurate"
        );
    }
    let meas = GaussianMeasurement::new(config.params().lambda_tilde() * dt_meas)?;
    let protocol = config.protocol();
    let basis = protocol.propagation_basis();

    let mut rho = *config.initial();
    let mut points = Vec::with_capacity(n / config.sample_stride() + 2);
    let mut inv = InvariantSummary {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    let mut prev_purity = f64::INFINITY;
    let mut record = |t: f64, rho: &DensityMatrix, inv: &mut InvariantSummary| -> Result<()> {
        let (p1, p2) = rho.populations();
        let (p1_dia, p2_dia, p1_adi, p2_adi) = match basis {
            Basis::Diabatic => {
                if matches!(protocol, Protocol::Static { .. }) {
                    (p1, p2, p1, p2)
                } else {
                    let adi = model::to_adiabatic(rho, t)?;
                    let (a1, a2) = adi.populations();
                    (p1, p2, a1, a2)
                }
            }
            Basis::Adiabatic => {
                let dia = model::to_diabatic(rho, t)?;
                let (d1, d2) = dia.populations();
                (d1, d2, p1, p2)
            }
        };
        let purity = rho.purity();
        inv.max_trace_error = inv.max_trace_error.max((rho.trace() - 1.0).abs());
        inv.min_eigenvalue = inv.min_eigenvalue.min(rho.min_eigenvalue());
        if prev_purity.is_finite() {
            inv.max_purity_increase = inv.max_purity_increase.max(purity - prev_purity);
        }
        prev_purity = purity;
        points.push(TrajectoryPoint {
            t,
            p1_dia,
            p2_dia,
            p1_adi,
            p2_adi,
            coherence: rho.coherence(),
            purity,
            rho: *rho,
        });
        Ok(())
    };

    record(t0, &rho, &mut inv)?;
    for i in 0..n {
        let t = t0 + i as f64 * dt_meas;
        rho = unitary_step(&rho, t, dt_meas, protocol, config.params())?;
        rho = nonselective_channel(&rho, &meas)?;
        if (i + 1) % config.sample_stride() == 0 || i + 1 == n {
            record(t0 + (i + 1) as f64 * dt_meas, &rho, &mut inv)?;
        }
    }
    Ok(Trajectory {
        points,
        config: config.clone(),
        invariants: inv,
    })
}

/// Survival of level 1 after N projective interrogations: free evolution of
/// degenerate levels with coupling `v` in steps T/N, zeroing the coherence
/// after each step. Exact, unlike the small-angle closed form.
pub fn projective_zeno_simulate(v: f64, t_total: f64, n: u32) -> Result<f64> {
    if n < 1 {
        return Err(Error::InvalidParam {
            name: "n",
            requirement: ">= 1",
            value: n as f64,
        });
    }
    if !(t_total > 0.0) {
        return Err(Error::InvalidParam {
            name: "t_total",
            requirement: "> 0",
            value: t_total,
        });
    }
    let tau = t_total / n as f64;
    let h = Operator::sigma_x() * Complex64::new(v, 0.0);
    let u = expm_minus_i(&h, tau);
    let mut rho = DensityMatrix::pure_1(Basis::Diabatic);
    for _ in 0..n {
        let m = u * rho.operator() * u.adjoint();
        // projective nonselective measurement: discard coherence
        rho = DensityMatrix::new_unchecked(
            m[(0, 0)].re,
            m[(1, 1)].re,
            Complex64::new(0.0, 0.0),
            Basis::Diabatic,
        );
    }
    Ok(rho.populations().0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::integrate;
    use crate::model::LzParams;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn pdf_is_a_normalized_gaussian_mixture() {
        let meas = GaussianMeasurement::new(1.0).unwrap();
        // level 1: single gaussian at +1 with variance 1/(4 lb)
        let rho = DensityMatrix::pure_1(Basis::Diabatic);
        let peak = measurement_pdf(&rho, 1.0, &meas).unwrap();
        assert_relative_eq!(peak, (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-12);
        // symmetric bimodal for the mixed state
        let mixed = DensityMatrix::maximally_mixed(Basis::Diabatic);
        assert_relative_eq!(
            measurement_pdf(&mixed, 1.0, &meas).unwrap(),
            measurement_pdf(&mixed, -1.0, &meas).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn pdf_integrates_to_one() {
        let mut rng = StdRng::seed_from_u64(21);
        for &lb in &[0.1, 1.0, 5.0] {
            let meas = GaussianMeasurement::new(lb).unwrap();
            let rho = crate::algebra::test_support::random_state(&mut rng, Basis::Diabatic);
            let half = 6.0 * (1.0_f64).max(1.0 / lb.sqrt());
            let n = 2001;
            let h = 2.0 * half / (n - 1) as f64;
            let mut total = 0.0;
            for i in 0..n {
                let a = -half + i as f64 * h;
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                total += w * measurement_pdf(&rho, a, &meas).unwrap();
            }
            assert!(
                (total * h - 1.0).abs() < 1e-6,
                "lb={lb}: integral {}",
                total * h
            );
        }
    }

    #[test]
    fn completeness_of_kraus_family() {
        // integral of K_a^dag K_a over outcomes is the identity
        for &lb in &[0.1, 1.0, 5.0] {
            let meas = GaussianMeasurement::new(lb).unwrap();
            let half = 6.0 * (1.0_f64).max(1.0 / lb.sqrt());
            let n = 2001;
            let h = 2.0 * half / (n - 1) as f64;
            let mut total = Operator::zero();
            for i in 0..n {
                let a = -half + i as f64 * h;
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                let k = meas.kraus_operator(a);
                total = total + (k.adjoint() * k).scale(w * h);
            }
            assert!(
                total.max_abs_diff(&Operator::identity()) < 1e-6,
                "completeness residual at lb={lb}"
            );
        }
    }

    #[test]
    fn selective_update_examples() {
        let meas = GaussianMeasurement::new(2.0).unwrap();
        // eigenstates are fixed points
        let rho = DensityMatrix::pure_1(Basis::Diabatic);
        let upd = selective_update(&rho, 0.3, &meas).unwrap();
        assert!(upd.operator().max_abs_diff(&rho.operator()) < 1e-12);
        // strong symmetric outcome leaves the mixed state unchanged
        let mixed = DensityMatrix::maximally_mixed(Basis::Diabatic);
        let upd = selective_update(&mixed, 0.0, &meas).unwrap();
        assert!(upd.operator().max_abs_diff(&mixed.operator()) < 1e-12);
        // near-projective limit pins the state to the read-out level
        let strong = GaussianMeasurement::new(500.0).unwrap();
        let upd = selective_update(&mixed, 1.0, &strong).unwrap();
        assert!(upd.populations().0 > 1.0 - 1e-12);
        // far-out outcome has vanishing probability
        assert!(matches!(
            selective_update(&rho, -60.0, &GaussianMeasurement::new(5.0).unwrap()),
            Err(Error::ZeroProbability { .. })
        ));
    }

    #[test]
    fn nonselective_channel_closed_form() {
        let meas = GaussianMeasurement::new(0.5 * (2.0_f64).ln()).unwrap();
        let rho =
            DensityMatrix::new(0.5, 0.5, num_complex::Complex64::new(0.5, 0.0), Basis::Diabatic)
                .unwrap();
        let out = nonselective_channel(&rho, &meas).unwrap();
        assert_relative_eq!(out.coherence().re, 0.25, epsilon = 1e-15);
        assert_relative_eq!(out.populations().0, 0.5);
        // identity at zero strength; diagonal states untouched at any strength
        let id = nonselective_channel(&rho, &GaussianMeasurement::new(0.0).unwrap()).unwrap();
        assert!(id.operator().max_abs_diff(&rho.operator()) < 1e-15);
        let diag = DensityMatrix::new(0.3, 0.7, 0.0.into(), Basis::Diabatic).unwrap();
        let out = nonselective_channel(&diag, &GaussianMeasurement::new(9.0).unwrap()).unwrap();
        assert!(out.operator().max_abs_diff(&diag.operator()) < 1e-15);
    }

    #[test]
    fn nonselective_channel_matches_outcome_average() {
        // quadrature of selective_update weighted by the pdf reproduces the
        // closed-form channel
        let mut rng = StdRng::seed_from_u64(31);
        for &lb in &[0.1, 1.0, 5.0] {
            let meas = GaussianMeasurement::new(lb).unwrap();
            let rho = crate::algebra::test_support::random_state(&mut rng, Basis::Diabatic);
            let half = 6.0 * (1.0_f64).max(1.0 / lb.sqrt());
            let n = 2001;
            let h = 2.0 * half / (n - 1) as f64;
            let mut acc = Operator::zero();
            for i in 0..n {
                let a = -half + i as f64 * h;
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                let pdf = measurement_pdf(&rho, a, &meas).unwrap();
                if pdf > 1e-300 {
                    let upd = selective_update(&rho, a, &meas).unwrap();
                    acc = acc + upd.operator().scale(w * h * pdf);
                }
            }
            let direct = nonselective_channel(&rho, &meas).unwrap();
            assert!(
                acc.max_abs_diff(&direct.operator()) < 1e-4,
                "channel quadrature residual at lb={lb}"
            );
        }
    }

    #[test]
    fn channel_composes_additively_in_strength() {
        let rho = DensityMatrix::from_bloch(0.4, 0.3, 0.2, Basis::Diabatic).unwrap();
        let a = GaussianMeasurement::new(0.7).unwrap();
        let b = GaussianMeasurement::new(1.6).unwrap();
        let ab = GaussianMeasurement::new(2.3).unwrap();
        let two = nonselective_channel(&nonselective_channel(&rho, &a).unwrap(), &b).unwrap();
        let one = nonselective_channel(&rho, &ab).unwrap();
        assert!(two.operator().max_abs_diff(&one.operator()) < 1e-15);
    }

    #[test]
    fn channel_never_raises_purity() {
        let mut rng = StdRng::seed_from_u64(41);
        let meas = GaussianMeasurement::new(0.9).unwrap();
        for _ in 0..100 {
            let rho = crate::algebra::test_support::random_state(&mut rng, Basis::Diabatic);
            let out = nonselective_channel(&rho, &meas).unwrap();
            assert!(out.purity() <= rho.purity() + 1e-15);
        }
    }

    #[test]
    fn unitary_step_preserves_purity_and_fixes_commuting_states() {
        let params = LzParams::new(0.5, 0.0).unwrap();
        let mut rng = StdRng::seed_from_u64(51);
        for _ in 0..50 {
            let rho = crate::algebra::test_support::random_state(&mut rng, Basis::Diabatic);
            let out = unitary_step(&rho, -3.0, 0.01, &Protocol::Diabatic, &params).unwrap();
            assert!((out.purity() - rho.purity()).abs() < 1e-12);
            assert!((out.trace() - 1.0).abs() < 1e-12);
        }
        // dt = 0 is the identity
        let rho = DensityMatrix::from_bloch(0.1, 0.5, -0.3, Basis::Diabatic).unwrap();
        let out = unitary_step(&rho, 2.0, 0.0, &Protocol::Diabatic, &params).unwrap();
        assert_eq!(out, rho);
        // diagonal H on a diagonal state does nothing
        let diag = DensityMatrix::new(0.8, 0.2, 0.0.into(), Basis::Diabatic).unwrap();
        let out = unitary_step(
            &diag,
            0.0,
            0.01,
            &Protocol::Static { delta_epsilon: 3.0 },
            &LzParams::new(1e-12, 0.0).unwrap(),
        )
        .unwrap();
        assert!(out.operator().max_abs_diff(&diag.operator()) < 1e-13);
    }

    #[test]
    fn discrete_propagation_reduces_to_unitary_at_zero_strength() {
        let params = LzParams::new(0.5, 0.0).unwrap();
        let cfg = SimConfig::new(params, Protocol::Diabatic)
            .with_window(-20.0, 20.0)
            .with_dt(0.001);
        let reference = integrate(&cfg).unwrap();
        let kraus = discrete_propagate(&cfg, 0.001).unwrap();
        let err = kraus
            .end()
            .rho
            .operator()
            .max_abs_diff(&reference.end().rho.operator());
        assert!(err < 1e-6, "pure-unitary mismatch {err:.3e}");
    }

    #[test]
    fn discrete_propagation_first_order_in_shot_interval() {
        let params = LzParams::new(0.5, 1.0).unwrap();
        let cfg = SimConfig::new(params, Protocol::Diabatic)
            .with_window(-20.0, 20.0)
            .with_dt(0.001);
        let reference = integrate(&cfg).unwrap().end().rho.operator();
        let err_at = |dtm: f64| {
            discrete_propagate(&cfg, dtm)
                .unwrap()
                .end()
                .rho
                .operator()
                .max_abs_diff(&reference)
        };
        let e1 = err_at(1e-3);
        let e2 = err_at(5e-4);
        assert!(e1 < 1e-3, "coarse-shot error {e1:.3e}");
        let ratio = e1 / e2;
        assert!(
            (ratio - 2.0).abs() < 0.6,
            "halving the shot interval scaled the error by {ratio:.3}"
        );
        // linear across a full decade too
        let decade = e1 / err_at(1e-4);
        assert!(
            (decade / 10.0 - 1.0).abs() < 0.3,
            "decade slope off linear: {decade:.2}"
        );
    }

    #[test]
    fn zeno_simulation_examples() {
        assert_relative_eq!(projective_zeno_simulate(0.0, 1.0, 17).unwrap(), 1.0);
        // single interrogation: exact Rabi value, far from the small-angle form
        let one = projective_zeno_simulate(1.0, 1.0, 1).unwrap();
        assert_relative_eq!(one, 1.0_f64.cos().powi(2), epsilon = 1e-12);
        assert!((one - 0.5676676416183064).abs() > 0.2);
        // large N: matches the closed form and approaches 1 monotonically
        let mut prev = 0.0;
        for n in [10u32, 100, 1000] {
            let sim = projective_zeno_simulate(1.0, 1.0, n).unwrap();
            let formula = crate::model::zeno_projective_survival(1.0, 1.0, n).unwrap();
            let tol = if n >= 1000 { 1e-4 } else if n >= 100 { 1e-3 } else { 1e-2 };
            assert!((sim - formula).abs() < tol, "N={n}: {sim} vs {formula}");
            assert!(sim > prev);
            prev = sim;
        }
        assert!(projective_zeno_simulate(1.0, 0.0, 5).is_err());
        assert!(projective_zeno_simulate(1.0, 1.0, 0).is_err());
    }
}
