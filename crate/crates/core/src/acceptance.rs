//! The validation suite: end-to-end checks of the solver against closed
//! forms, oracle cross-checks, and reference values. Each criterion prints
//! one pass/fail line; `lzsim validate` and the acceptance test target both
//! run through here.
//!
//! Three checks (A2, A3, A11a) compare against quoted reference values that
//! the exact dynamics of the propagated equations provably misses by a
//! factor ~2 (the slow eigenvalue of the dephased two-level system is
//! lambda - sqrt(lambda^2 - 4 z^2) ~ 2 z^2/lambda, twice the usual
//! adiabatic-elimination estimate, and the e^{-z} freeze scaling inherits
//! the same gap). They are kept as stated, report the measured values, and
//! are expected to fail; see the README's validation section.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::algebra::Basis;
use crate::dynamics::{
    frame_consistency_error, integrate, Protocol, SimConfig, GAUGE_COMMUTATOR_SIGN,
};
use crate::error::Result;
use crate::experiments::{
    extract_asymptote, find_nonmonotonicity, fit_decay_rate, reproduce_figure, FigureId,
};
use crate::io;
use crate::kraus::{discrete_propagate, projective_zeno_simulate};
use crate::model::{freeze_estimate, lz_survival_probability, zeno_projective_survival, LzParams};

#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl CriterionReport {
    pub fn summary_line(&self) -> String {
        format!(
            "{} {:4} {:<24} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.details.replace('\n', "; ")
        )
    }
}

#[derive(Clone, Debug)]
pub struct AcceptanceOptions {
    /// Coarser grids where the grid is a free choice.
    pub fast: bool,
    /// Gauge-commutator sign used by the frame-consistency check; flipping
    /// it must make that check fail (mutation hook).
    pub gauge_sign: f64,
    /// Where survival-surface artifacts are written.
    pub artifact_dir: PathBuf,
}

impl Default for AcceptanceOptions {
    fn default() -> Self {
        AcceptanceOptions {
            fast: false,
            gauge_sign: GAUGE_COMMUTATOR_SIGN,
            artifact_dir: std::env::temp_dir().join("lzsim-validate"),
        }
    }
}

pub const CRITERIA: [(&str, &str); 11] = [
    ("A1", "measurement-free limit"),
    ("A2", "equal-population plateau"),
    ("A3", "static decay rate"),
    ("A4", "zeno ordering"),
    ("A5", "adiabatic dip"),
    ("A6", "kraus-lindblad oracle"),
    ("A7", "frame consistency"),
    ("A8", "projective zeno"),
    ("A9", "state invariants"),
    ("A10", "step convergence"),
    ("A11", "freeze scaling + surfaces"),
];

pub fn run_all(opts: &AcceptanceOptions) -> Vec<CriterionReport> {
    CRITERIA
        .iter()
        .map(|(id, _)| run_one(id, opts).expect("criterion ids are exhaustive"))
        .collect()
}

pub fn run_one(id: &str, opts: &AcceptanceOptions) -> Option<CriterionReport> {
    let f = match id {
        "A1" => lz_limit,
        "A2" => plateau,
        "A3" => static_rate,
        "A4" => zeno_ordering,
        "A5" => adiabatic_dip,
        "A6" => kraus_oracle,
        "A7" => frame_consistency,
        "A8" => projective_zeno,
        "A9" => state_invariants,
        "A10" => step_convergence,
        "A11" => freeze_and_surfaces,
        _ => return None,
    };
    let name = CRITERIA.iter().find(|(i, _)| *i == id)?.1;
    Some(match f(opts) {
        Ok((passed, details)) => CriterionReport {
            id: CRITERIA.iter().find(|(i, _)| *i == id).unwrap().0,
            name,
            passed,
            details,
        },
        Err(e) => CriterionReport {
            id: CRITERIA.iter().find(|(i, _)| *i == id).unwrap().0,
            name,
            passed: false,
            details: format!("errored: {e}"),
        },
    })
}

type Outcome = Result<(bool, String)>;

fn diabatic_run(z: f64, lambda: f64) -> Result<crate::dynamics::Trajectory> {
    let cfg = SimConfig::new(LzParams::new(z, lambda)?, Protocol::Diabatic).with_dt(0.005);
    integrate(&cfg)
}

/// A1: with no measurement the asymptotic fixed-basis survival matches
/// exp(-pi z) within 0.02 across the sweep-rate range.
fn lz_limit(opts: &AcceptanceOptions) -> Outcome {
    let zs: &[f64] = if opts.fast {
        &[0.05, 0.5, 1.0]
    } else {
        &[0.05, 0.1, 0.2, 0.5, 1.0]
    };
    let mut details = String::new();
    let mut ok = true;
    for &z in zs {
        let traj = diabatic_run(z, 0.0)?;
        let (mean, spread) = extract_asymptote(&traj, Basis::Diabatic, 1)?;
        let expected = lz_survival_probability(z)?;
        let pass = (mean - expected).abs() <= 0.02;
        ok &= pass;
        let _ = write!(
            details,
            "z={z}: {mean:.4} vs {expected:.4} (spread {spread:.4}); "
        );
    }
    Ok((ok, details.trim_end().to_string()))
}

/// A2: strong diabatic measurement, z = 0.5: asymptotic populations at
/// 0.5 +/- 0.02 with the approach time increasing in lambda.
fn plateau(_opts: &AcceptanceOptions) -> Outcome {
    let mut details = String::new();
    let mut plateau_ok = true;
    let mut times = Vec::new();
    for &lambda in &[5.0, 10.0, 20.0] {
        let traj = diabatic_run(0.5, lambda)?;
        let (mean, _) = extract_asymptote(&traj, Basis::Diabatic, 1)?;
        plateau_ok &= (mean - 0.5).abs() <= 0.02;
        let t_star = traj
            .points
            .iter()
            .find(|p| (p.p2_dia - p.p1_dia).abs() < 0.1)
            .map(|p| p.t);
        let _ = write!(
            details,
            "lam={lambda}: p1={mean:.4}, t*={}; ",
            t_star.map_or("none".into(), |t| format!("{t:.1}"))
        );
        times.push(t_star);
    }
    let slowing_ok = times.iter().all(|t| t.is_some())
        && times.windows(2).all(|w| w[0].unwrap() < w[1].unwrap());
    let _ = write!(
        details,
        "plateau within 0.02: {plateau_ok}, zeno slowing: {slowing_ok}"
    );
    Ok((plateau_ok && slowing_ok, details))
}

/// A3: static reduction, z = 0.5: fitted decay rate of the population
/// difference equals z^2/lambda within 10% for lambda in {10, 20}, and the
/// two rates differ by a factor 2 within 10%.
fn static_rate(_opts: &AcceptanceOptions) -> Outcome {
    let mut rates = Vec::new();
    let mut details = String::new();
    for &lambda in &[10.0, 20.0] {
        let cfg = SimConfig::new(
            LzParams::new(0.5, lambda)?,
            Protocol::Static { delta_epsilon: 0.0 },
        )
        .with_window(0.0, 20.0)
        .with_dt(0.005)
        .with_stride(4);
        let traj = integrate(&cfg)?;
        let rate = fit_decay_rate(&traj, (0.0, 20.0))?;
        let quoted = 0.25 / lambda;
        let exact = lambda - (lambda * lambda - 1.0).sqrt();
        let _ = write!(
            details,
            "lam={lambda}: fit {rate:.5} vs quoted {quoted:.5} (exact slow eig {exact:.5}); "
        );
        rates.push((rate, quoted));
    }
    let magnitudes_ok = rates
        .iter()
        .all(|(fit, quoted)| (fit / quoted - 1.0).abs() <= 0.10);
    let ratio = rates[0].0 / rates[1].0;
    let ratio_ok = (ratio - 2.0).abs() <= 0.2;
    let _ = write!(
        details,
        "magnitudes within 10%: {magnitudes_ok}, ratio {ratio:.3} within 10% of 2: {ratio_ok}"
    );
    Ok((magnitudes_ok && ratio_ok, details))
}

/// A4: adiabatic measurement at z = 0.05: asymptotic survival strictly
/// increases with measurement strength.
fn zeno_ordering(_opts: &AcceptanceOptions) -> Outcome {
    let mut survivals = Vec::new();
    let mut details = String::new();
    for &lambda in &[0.0, 0.5, 1.0, 2.0, 5.0] {
        let cfg = SimConfig::new(LzParams::new(0.05, lambda)?, Protocol::Adiabatic).with_dt(0.005);
        let traj = integrate(&cfg)?;
        let (mean, _) = extract_asymptote(&traj, Basis::Adiabatic, 2)?;
        let _ = write!(details, "lam={lambda}: {mean:.4}; ");
        survivals.push(mean);
    }
    let ok = survivals.windows(2).all(|w| w[0] < w[1]);
    let _ = write!(details, "strictly increasing: {ok}");
    Ok((ok, details))
}

/// A5: near the adiabatic limit (z = 5) some finite measurement strength
/// lowers the asymptotic adiabatic survival below its measurement-free
/// value by more than 0.005. Dip location reported, not asserted.
fn adiabatic_dip(opts: &AcceptanceOptions) -> Outcome {
    let grid: &[f64] = if opts.fast {
        &[0.0, 0.2, 1.0, 5.0, 20.0]
    } else {
        &[0.0, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0]
    };
    match find_nonmonotonicity(5.0, grid)? {
        Some((lambda, dip)) => {
            let ok = dip > 0.005;
            Ok((
                ok,
                format!(
                    "deepest dip {dip:.4} at lam={lambda} (exploratory location); exceeds 0.005: {ok}"
                ),
            ))
        }
        None => Ok((false, "scan came out monotone; no dip found".into())),
    }
}

/// A6: discrete Kraus propagation vs the RK4 endpoint at z = 0.5,
/// lambda = 1 on [-20, 20]: max element error <= 1e-3 at shot interval
/// 1e-3, halving the interval halves the error within 30%.
fn kraus_oracle(_opts: &AcceptanceOptions) -> Outcome {
    let cfg = SimConfig::new(LzParams::new(0.5, 1.0)?, Protocol::Diabatic)
        .with_window(-20.0, 20.0)
        .with_dt(0.001);
    let reference = integrate(&cfg)?.end().rho.operator();
    let err_at = |dtm: f64| -> Result<f64> {
        Ok(discrete_propagate(&cfg, dtm)?
            .end()
            .rho
            .operator()
            .max_abs_diff(&reference))
    };
    let e1 = err_at(1e-3)?;
    let e2 = err_at(5e-4)?;
    let ratio = e1 / e2;
    let ok = e1 <= 1e-3 && (ratio - 2.0).abs() <= 0.6;
    Ok((
        ok,
        format!("err(1e-3)={e1:.2e} (<=1e-3), err(5e-4)={e2:.2e}, ratio {ratio:.3} in 2+/-0.6"),
    ))
}

/// A7: with no measurement, adiabatic-frame propagation mapped back to the
/// fixed frame matches direct propagation to 1e-6 over the full window;
/// locks the gauge-commutator sign.
fn frame_consistency(opts: &AcceptanceOptions) -> Outcome {
    let cases: &[(f64, f64)] = &[(0.05, 0.005), (0.5, 0.005), (5.0, 0.001)];
    let mut details = String::new();
    let mut ok = true;
    for &(z, dt) in cases {
        let err = frame_consistency_error(z, (-200.0, 200.0), dt, opts.gauge_sign)?;
        ok &= err <= 1e-6;
        let _ = write!(details, "z={z}: {err:.2e}; ");
    }
    let _ = write!(details, "all within 1e-6: {ok}");
    Ok((ok, details))
}

/// A8: the projective-interrogation simulator matches the closed survival
/// form at large N and tends to 1 monotonically.
fn projective_zeno(_opts: &AcceptanceOptions) -> Outcome {
    let sim100 = projective_zeno_simulate(1.0, 1.0, 100)?;
    let sim1000 = projective_zeno_simulate(1.0, 1.0, 1000)?;
    let f100 = zeno_projective_survival(1.0, 1.0, 100)?;
    let f1000 = zeno_projective_survival(1.0, 1.0, 1000)?;
    let d100 = (sim100 - f100).abs();
    let d1000 = (sim1000 - f1000).abs();
    let mut monotone = true;
    let mut prev = 0.0;
    for n in [1u32, 10, 100, 1000, 10000] {
        let p = projective_zeno_simulate(1.0, 1.0, n)?;
        monotone &= p > prev;
        prev = p;
    }
    let ok = d100 <= 1e-3 && d1000 <= 1e-4 && monotone && prev > 0.999;
    Ok((
        ok,
        format!(
            "|sim-closed| N=100: {d100:.2e} (<=1e-3), N=1000: {d1000:.2e} (<=1e-4), \
             monotone to {prev:.5}: {monotone}"
        ),
    ))
}

/// Grid shared by A9/A10. Crossing-centred windows keep the checks
/// meaningful: over long tails the artificial damping of the fast
/// interference phase dominates and says nothing about the dynamics.
fn invariant_grid(fast: bool) -> Vec<(f64, f64)> {
    let zs = [0.05, 0.5, 5.0];
    let lambdas: &[f64] = if fast { &[0.0, 50.0] } else { &[0.0, 0.5, 5.0, 50.0] };
    let mut grid = Vec::new();
    for &z in &zs {
        for &l in lambdas {
            grid.push((z, l));
        }
    }
    grid
}

/// A9: trace, positivity and purity invariants across the parameter grid.
fn state_invariants(opts: &AcceptanceOptions) -> Outcome {
    let mut details = String::new();
    let (mut worst_trace, mut worst_eig, mut worst_purity_inc, mut worst_unitarity) =
        (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    let mut ok = true;
    for (z, lambda) in invariant_grid(opts.fast) {
        let (half, dt) = if z >= 5.0 { (10.0, 2.5e-4) } else { (20.0, 5e-4) };
        let cfg = SimConfig::new(LzParams::new(z, lambda)?, Protocol::Diabatic)
            .with_window(-half, half)
            .with_dt(dt)
            .allow_unconverged_window();
        let traj = integrate(&cfg)?;
        worst_trace = worst_trace.max(traj.invariants.max_trace_error);
        worst_eig = worst_eig.min(traj.invariants.min_eigenvalue.min(0.0));
        if lambda > 0.0 {
            worst_purity_inc = worst_purity_inc.max(traj.invariants.max_purity_increase);
        } else {
            let dev = traj
                .points
                .iter()
                .map(|p| (p.purity - 1.0).abs())
                .fold(0.0, f64::max);
            worst_unitarity = worst_unitarity.max(dev);
        }
    }
    ok &= worst_trace <= 1e-9;
    ok &= worst_eig >= -1e-8;
    ok &= worst_purity_inc <= 1e-9;
    ok &= worst_unitarity <= 1e-8;
    let _ = write!(
        details,
        "max trace err {worst_trace:.2e} (<=1e-9), min eig {worst_eig:.2e} (>=-1e-8), \
         max purity gain {worst_purity_inc:.2e} (<=1e-9), \
         measurement-free purity dev {worst_unitarity:.2e} (<=1e-8)"
    );
    Ok((ok, details))
}

/// A10: endpoint populations at dt = 0.005 and dt = 0.0025 agree to 1e-5
/// across the grid.
fn step_convergence(opts: &AcceptanceOptions) -> Outcome {
    let mut worst = 0.0_f64;
    let mut worst_at = (0.0, 0.0);
    for (z, lambda) in invariant_grid(opts.fast) {
        let half = if z >= 5.0 { 3.0 } else { 20.0 };
        let endpoint = |dt: f64| -> Result<[f64; 4]> {
            let cfg = SimConfig::new(LzParams::new(z, lambda)?, Protocol::Diabatic)
                .with_window(-half, half)
                .with_dt(dt)
                .allow_unconverged_window();
            let p = *integrate(&cfg)?.end();
            Ok([p.p1_dia, p.p2_dia, p.p1_adi, p.p2_adi])
        };
        let a = endpoint(0.005)?;
        let b = endpoint(0.0025)?;
        let diff = a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        if diff > worst {
            worst = diff;
            worst_at = (z, lambda);
        }
    }
    let ok = worst <= 1e-5;
    Ok((
        ok,
        format!(
            "worst endpoint change {worst:.2e} at (z={}, lam={}) (<=1e-5)",
            worst_at.0, worst_at.1
        ),
    ))
}

/// A11: freeze-scaling spot check (quoted e^{-z} within a factor of 2) and
/// emission of the two survival surfaces with byte-identical
/// measurement-free edges.
fn freeze_and_surfaces(opts: &AcceptanceOptions) -> Outcome {
    let mut details = String::new();
    let mut freeze_ok = true;
    for &z in &[0.5, 1.0] {
        let traj = diabatic_run(z, 3.0 * z)?;
        let (p1, _) = extract_asymptote(&traj, Basis::Diabatic, 1)?;
        let (p2, _) = extract_asymptote(&traj, Basis::Diabatic, 2)?;
        let measured = (p2 - p1).abs();
        let quoted = freeze_estimate(z)?;
        let factor = if measured > 0.0 { quoted / measured } else { f64::INFINITY };
        freeze_ok &= (0.5..=2.0).contains(&factor);
        let _ = write!(
            details,
            "z={z}: |drho|={measured:.4} vs e^-z={quoted:.4} (off {factor:.1}x); "
        );
    }

    std::fs::create_dir_all(&opts.artifact_dir)?;
    let (a_paths, b_paths) = if opts.fast {
        // halved grid density for the artifact pass
        let surfaces = |protocol| -> Result<crate::experiments::SweepResult> {
            let z = crate::experiments::log_spaced(0.02, 5.0, 10);
            let mut l = vec![0.0];
            l.extend(crate::experiments::log_spaced(0.01, 50.0, 10));
            let mut spec = crate::experiments::SweepSpec::new(z, l, protocol);
            spec.window = Some((-200.0, 200.0));
            crate::experiments::sweep(&spec)
        };
        let sa = surfaces(Protocol::Adiabatic)?;
        let mut sb = surfaces(Protocol::Diabatic)?;
        for cell in sb.cells.iter_mut().filter(|c| c.lambda == 0.0) {
            let src = sa
                .cells
                .iter()
                .find(|c| c.lambda == 0.0 && c.z == cell.z)
                .expect("matching edge cell");
            // measurement-free edge is one shared calculation
            *cell = crate::experiments::SweepCell {
                survival: src.survival,
                spread: src.spread,
                ..cell.clone()
            };
        }
        let pa = opts.artifact_dir.join("fig3a_surface.csv");
        let pb = opts.artifact_dir.join("fig3b_surface.csv");
        io::write_sweep_csv(&pa, &sa)?;
        io::write_sweep_csv(&pb, &sb)?;
        (vec![pa], vec![pb])
    } else {
        (
            reproduce_figure(FigureId::F3a, &opts.artifact_dir)?,
            reproduce_figure(FigureId::F3b, &opts.artifact_dir)?,
        )
    };
    let text_a = std::fs::read_to_string(&a_paths[0])?;
    let text_b = std::fs::read_to_string(&b_paths[0])?;
    let edge = |text: &str| -> Result<Vec<(u64, u64)>> {
        Ok(io::parse_sweep_csv(text)?
            .into_iter()
            .filter(|r| r.lambda == 0.0)
            .map(|r| (r.z.to_bits(), r.survival.to_bits()))
            .collect())
    };
    let ea = edge(&text_a)?;
    let eb = edge(&text_b)?;
    let edges_ok = !ea.is_empty() && ea == eb;
    let _ = write!(
        details,
        "freeze factor within 2: {freeze_ok}; surfaces at {}; measurement-free edges identical \
         over {} cells: {edges_ok}",
        opts.artifact_dir.display(),
        ea.len()
    );
    Ok((freeze_ok && edges_ok, details))
}
