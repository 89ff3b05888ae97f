//! Property tests over randomly drawn valid states and parameters.

use num_complex::Complex64;
use proptest::prelude::*;

use lz_core::algebra::{dephasing_term, Basis, DensityMatrix, Operator};
use lz_core::dynamics::{rhs_adiabatic, rhs_diabatic};
use lz_core::kraus::{nonselective_channel, unitary_step, GaussianMeasurement};
use lz_core::model::{to_adiabatic, to_diabatic, LzParams};
use lz_core::Protocol;

fn bloch_state(basis: Basis) -> impl Strategy<Value = DensityMatrix> {
    (0.0..0.999f64, -1.0..1.0f64, 0.0..std::f64::consts::TAU).prop_map(move |(u, ct, phi)| {
        let r = u.cbrt();
        let st = (1.0 - ct * ct).sqrt();
        DensityMatrix::from_bloch(r * st * phi.cos(), r * st * phi.sin(), r * ct, basis).unwrap()
    })
}

proptest! {
    #[test]
    fn frame_round_trip_is_identity(rho in bloch_state(Basis::Diabatic), t in -200.0..200.0f64) {
        let back = to_diabatic(&to_adiabatic(&rho, t).unwrap(), t).unwrap();
        prop_assert!(back.operator().max_abs_diff(&rho.operator()) <= 1e-14);
    }

    #[test]
    fn channel_is_contractive_and_composes(
        rho in bloch_state(Basis::Diabatic),
        a in 0.0..3.0f64,
        b in 0.0..3.0f64,
    ) {
        let ma = GaussianMeasurement::new(a).unwrap();
        let mb = GaussianMeasurement::new(b).unwrap();
        let mab = GaussianMeasurement::new(a + b).unwrap();
        let once = nonselective_channel(&rho, &mab).unwrap();
        let twice = nonselective_channel(&nonselective_channel(&rho, &ma).unwrap(), &mb).unwrap();
        prop_assert!(twice.operator().max_abs_diff(&once.operator()) <= 1e-14);
        prop_assert!(once.purity() <= rho.purity() + 1e-14);
    }

    #[test]
    fn dephasing_is_traceless_hermitian(
        rho in bloch_state(Basis::Diabatic),
        lambda in 0.0..10.0f64,
    ) {
        let d = dephasing_term(&Operator::sigma_z(), &rho, lambda).unwrap();
        prop_assert!(d.trace().norm() <= 1e-13);
        prop_assert!(d.is_hermitian(1e-13));
        // off-diagonal scaled by -2 lambda, diagonal untouched
        let expected = rho.coherence() * Complex64::new(-2.0 * lambda, 0.0);
        prop_assert!((d[(0, 1)] - expected).norm() <= 1e-12);
    }

    #[test]
    fn rhs_structure_holds_everywhere(
        rho in bloch_state(Basis::Diabatic),
        t in -50.0..50.0f64,
        z in 0.01..5.0f64,
        lambda in 0.0..20.0f64,
    ) {
        let params = LzParams::new(z, lambda).unwrap();
        let d = rhs_diabatic(&rho, t, &params).unwrap();
        prop_assert!(d.trace().norm() <= 1e-12);
        prop_assert!((d[(1, 0)] - d[(0, 1)].conj()).norm() <= 1e-13);
    }

    #[test]
    fn adiabatic_measurement_strength_only_dephases(
        rho in bloch_state(Basis::Adiabatic),
        t in -50.0..50.0f64,
        z in 0.01..5.0f64,
        la in 0.0..20.0f64,
        lb in 0.0..20.0f64,
    ) {
        let da = rhs_adiabatic(&rho, t, &LzParams::new(z, la).unwrap()).unwrap();
        let db = rhs_adiabatic(&rho, t, &LzParams::new(z, lb).unwrap()).unwrap();
        let diff = da - db;
        prop_assert!(diff[(0, 0)].norm() <= 1e-13);
        prop_assert!(diff[(1, 1)].norm() <= 1e-13);
    }

    #[test]
    fn unitary_step_preserves_trace_and_purity(
        rho in bloch_state(Basis::Diabatic),
        t in -20.0..20.0f64,
        dt in 0.0001..0.01f64,
        z in 0.01..2.0f64,
    ) {
        let params = LzParams::new(z, 0.0).unwrap();
        let out = unitary_step(&rho, t, dt, &Protocol::Diabatic, &params).unwrap();
        prop_assert!((out.trace() - 1.0).abs() <= 1e-12);
        prop_assert!((out.purity() - rho.purity()).abs() <= 1e-11);
    }
}
