//! `lzsim`: propagate, sweep, cross-check and plot two-level avoided-crossing
//! dynamics under continuous weak population measurement.
//!
//! Exit codes: 0 success, 1 general/validation failure, 2 invalid flags or
//! configuration, 3 integration abort, 4 oracle tolerance breach.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lz_core::acceptance::{self, AcceptanceOptions};
use lz_core::dynamics::{integrate, Protocol, SimConfig, GAUGE_COMMUTATOR_SIGN};
use lz_core::error::Error;
use lz_core::experiments::{log_spaced, sweep, FigureId, SweepSpec};
use lz_core::io::{
    self, dataset_info, fmt_float, manifest_path_for, write_manifest, IntegratorInfo,
    InvariantInfo, RunManifest, ToolInfo,
};
use lz_core::kraus::{discrete_propagate, projective_zeno_simulate};
use lz_core::model::{zeno_projective_survival, LzParams};
use lz_core::Basis;

#[derive(Parser)]
#[command(
    name = "lzsim",
    version,
    about = "Two-level avoided-crossing dynamics under continuous weak measurement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write it as CSV (plus a run manifest).
    Simulate(SimulateArgs),
    /// Survival sweep over a (z, lambda) grid, written as long-format CSV.
    Sweep(SweepArgs),
    /// Cross-check the master-equation path against the discrete
    /// measurement scheme, or the projective-interrogation closed form.
    Oracle(OracleArgs),
    /// Run the built-in validation suite and print a pass/fail table.
    Validate(ValidateArgs),
    /// Render an emitted CSV as a static SVG.
    Plot(PlotArgs),
    /// Emit the standard dataset collection.
    Figures(FiguresArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    Diabatic,
    Adiabatic,
    Static,
}

#[derive(Args)]
struct SimulateArgs {
    /// Sweep parameter z > 0
    #[arg(long)]
    z: Option<f64>,
    /// Measurement strength >= 0
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
    #[arg(long, allow_hyphen_values = true)]
    t_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<f64>,
    /// Step size (default 0.005, reduced automatically if unstable unless set)
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<f64>,
    /// Record every Nth step
    #[arg(long)]
    stride: Option<usize>,
    /// Constant level splitting for the static protocol
    #[arg(long, allow_hyphen_values = true)]
    delta_epsilon: Option<f64>,
    /// Flat key = value file mirroring these flag names; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path (manifest written alongside)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma list (0.05,0.5,5) or log:lo:hi:n
    #[arg(long)]
    z_grid: String,
    /// Comma list or log:lo:hi:n; 0 is allowed in comma lists
    #[arg(long)]
    lambda_grid: String,
    #[arg(long, value_enum, default_value = "diabatic")]
    protocol: ProtocolArg,
    #[arg(long, allow_hyphen_values = true)]
    delta_epsilon: Option<f64>,
    /// Worker threads (default: all cores); output is identical for any value
    #[arg(long)]
    jobs: Option<usize>,
    /// Pin the window as lo:hi (default: sized per cell)
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Pin the step size (default: per-cell stable choice)
    #[arg(long)]
    dt: Option<f64>,
    /// Frame whose initially occupied level is reported
    #[arg(long, value_enum, default_value = "adiabatic")]
    report: ReportBasis,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReportBasis {
    Diabatic,
    Adiabatic,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 0.5)]
    z: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Comma list of measurement-shot intervals
    #[arg(long, default_value = "1e-3,5e-4")]
    dt_meas: String,
    /// Window as lo:hi
    #[arg(long, default_value = "-20:20", allow_hyphen_values = true)]
    window: String,
    /// Compare the projective-interrogation simulator against its closed form
    #[arg(long)]
    zeno: bool,
    #[arg(long = "V", default_value_t = 1.0, allow_hyphen_values = true)]
    coupling: f64,
    #[arg(long = "T", default_value_t = 1.0)]
    duration: f64,
    #[arg(long, default_value = "10,100,1000")]
    n_list: String,
}

#[derive(Args)]
struct ValidateArgs {
    /// Coarser grids where the grid is a free choice
    #[arg(long)]
    fast: bool,
    /// Run a single criterion (A1..A11)
    #[arg(long)]
    only: Option<String>,
    /// Directory for emitted surface artifacts
    #[arg(long, default_value = "validate-artifacts")]
    artifacts: PathBuf,
    /// Test hook: flip the gauge-commutator sign; frame consistency must fail
    #[arg(long, hide = true)]
    corrupt_gauge_sign: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    Timeseries,
    Asymptote,
    Surface,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    kind: PlotKind,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FiguresArgs {
    /// Dataset id (1a,1b,1c,2a,2b,2c,3a,3b) or `all`
    #[arg(long, default_value = "all")]
    set: String,
    #[arg(long)]
    out: PathBuf,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidParam { .. }
        | Error::InvalidConfig(_)
        | Error::BasisMismatch { .. }
        | Error::InvalidState(_)
        | Error::UnstableStep { .. }
        | Error::WindowTooShort { .. }
        | Error::MalformedCsv { .. } => 2,
        Error::PositivityLoss { .. } => 3,
        _ => 1,
    }
}

fn fail(err: Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(exit_code_for(&err))
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Validate(args) => return cmd_validate(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Figures(args) => cmd_figures(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

// ---------------------------------------------------------------------------
// simulate

/// Flat key = value config file mirroring the flag names.
fn load_config_file(path: &Path) -> Result<BTreeMap<String, toml::Value>, Error> {
    let text = std::fs::read_to_string(path)?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    Ok(table.into_iter().collect())
}

fn config_f64(map: &BTreeMap<String, toml::Value>, key: &str) -> Result<Option<f64>, Error> {
    match map.get(key) {
        None => Ok(None),
        Some(toml::Value::Float(v)) => Ok(Some(*v)),
        Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
        Some(other) => Err(Error::InvalidConfig(format!(
            "config key `{key}` must be numeric, got {other}"
        ))),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Error> {
    let start = Instant::now();
    let file = match &args.config {
        Some(path) => load_config_file(path)?,
        None => BTreeMap::new(),
    };
    let get = |flag: Option<f64>, key: &str| -> Result<Option<f64>, Error> {
        Ok(match flag {
            Some(v) => Some(v),
            None => config_f64(&file, key)?,
        })
    };

    let z = get(args.z, "z")?.ok_or(Error::InvalidConfig(
        "`--z` is required (flag or config file)".into(),
    ))?;
    let lambda = get(args.lambda, "lambda")?.unwrap_or(0.0);
    let protocol_arg = match args.protocol {
        Some(p) => p,
        None => match file.get("protocol").and_then(|v| v.as_str()) {
            Some("diabatic") | None => ProtocolArg::Diabatic,
            Some("adiabatic") => ProtocolArg::Adiabatic,
            Some("static") => ProtocolArg::Static,
            Some(other) => {
                return Err(Error::InvalidConfig(format!(
                    "config key `protocol` has unknown value `{other}`"
                )))
            }
        },
    };
    let delta_epsilon = get(args.delta_epsilon, "delta-epsilon")?.unwrap_or(0.0);
    let protocol = match protocol_arg {
        ProtocolArg::Diabatic => Protocol::Diabatic,
        ProtocolArg::Adiabatic => Protocol::Adiabatic,
        ProtocolArg::Static => Protocol::Static { delta_epsilon },
    };

    let params = LzParams::new(z, lambda)?;
    let mut cfg = SimConfig::new(params, protocol);
    let t_start = get(args.t_start, "t-start")?;
    let t_end = get(args.t_end, "t-end")?;
    match (t_start, t_end) {
        (None, None) => {}
        (a, b) => {
            let (d0, d1) = cfg.window();
            cfg = cfg.with_window(a.unwrap_or(d0), b.unwrap_or(d1));
        }
    }
    if let Some(dt) = get(args.dt, "dt")? {
        cfg = cfg.with_dt(dt);
    }
    let stride = match args.stride {
        Some(s) => Some(s),
        None => config_f64(&file, "stride")?.map(|v| v as usize),
    };
    if let Some(s) = stride {
        cfg = cfg.with_stride(s);
    }
    cfg.validate()?;

    let traj = integrate(&cfg)?;
    let csv = io::trajectory_csv(&traj);
    std::fs::write(&args.out, &csv)?;

    let mut config = BTreeMap::new();
    config.insert("z".into(), fmt_float(z));
    config.insert("lambda".into(), fmt_float(lambda));
    config.insert("protocol".into(), protocol.name().to_string());
    if let Protocol::Static { .. } = protocol {
        config.insert("delta-epsilon".into(), fmt_float(delta_epsilon));
    }
    config.insert("t-start".into(), fmt_float(cfg.window().0));
    config.insert("t-end".into(), fmt_float(cfg.window().1));
    config.insert("dt".into(), fmt_float(cfg.dt()));
    config.insert("stride".into(), cfg.sample_stride().to_string());
    let manifest = RunManifest {
        tool: ToolInfo::default(),
        command: "simulate".into(),
        config,
        integrator: Some(IntegratorInfo {
            method: "rk4".into(),
            dt: cfg.dt(),
            steps: cfg.step_count(),
        }),
        invariants: Some(InvariantInfo::from(&traj.invariants)),
        datasets: vec![dataset_info(&args.out, &csv)],
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_manifest(&manifest_path_for(&args.out), &manifest)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

fn parse_grid(spec: &str, name: &'static str) -> Result<Vec<f64>, Error> {
    let bad = |reason: String| Error::InvalidConfig(format!("--{name}: {reason}"));
    if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected log:lo:hi:n".into()));
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad(format!("`{}` is not a number", parts[0])))?;
        let hi: f64 = parts[1].parse().map_err(|_| bad(format!("`{}` is not a number", parts[1])))?;
        let n: usize = parts[2].parse().map_err(|_| bad(format!("`{}` is not a count", parts[2])))?;
        if !(lo > 0.0 && hi > lo && n >= 1) {
            return Err(bad("need 0 < lo < hi and n >= 1".into()));
        }
        Ok(log_spaced(lo, hi, n))
    } else {
        spec.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("`{s}` is not a number")))
            })
            .collect()
    }
}

fn parse_window(spec: &str) -> Result<(f64, f64), Error> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "--window: expected lo:hi, got `{spec}`"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("--window: `{}` is not a number", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("--window: `{}` is not a number", parts[1])))?;
    Ok((lo, hi))
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Error> {
    let start = Instant::now();
    let protocol = match args.protocol {
        ProtocolArg::Diabatic => Protocol::Diabatic,
        ProtocolArg::Adiabatic => Protocol::Adiabatic,
        ProtocolArg::Static => Protocol::Static {
            delta_epsilon: args.delta_epsilon.unwrap_or(0.0),
        },
    };
    let mut spec = SweepSpec::new(
        parse_grid(&args.z_grid, "z-grid")?,
        parse_grid(&args.lambda_grid, "lambda-grid")?,
        protocol,
    );
    if let Some(w) = &args.window {
        spec.window = Some(parse_window(w)?);
    }
    spec.dt = args.dt;
    spec.report_basis = match args.report {
        ReportBasis::Diabatic => Basis::Diabatic,
        ReportBasis::Adiabatic => Basis::Adiabatic,
    };
    spec.validate()?;

    let result = match args.jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| sweep(&spec))?
        }
        None => sweep(&spec)?,
    };
    let failed = result.cells.iter().filter(|c| c.error.is_some()).count();
    if failed == result.cells.len() {
        return Err(Error::InvalidConfig(format!(
            "all {failed} sweep cells failed; first error: {}",
            result.cells[0].error.as_deref().unwrap_or("unknown")
        )));
    }
    for cell in result.cells.iter().filter(|c| c.error.is_some()) {
        log::warn!(
            "cell (z={}, lambda={}) failed: {}",
            cell.z,
            cell.lambda,
            cell.error.as_deref().unwrap_or("unknown")
        );
    }

    let csv = io::sweep_csv(&result);
    std::fs::write(&args.out, &csv)?;
    let mut config = BTreeMap::new();
    config.insert("z-grid".into(), args.z_grid.clone());
    config.insert("lambda-grid".into(), args.lambda_grid.clone());
    config.insert("protocol".into(), protocol.name().to_string());
    config.insert(
        "report".into(),
        match args.report {
            ReportBasis::Diabatic => "diabatic".into(),
            ReportBasis::Adiabatic => "adiabatic".into(),
        },
    );
    if let Some(w) = &args.window {
        config.insert("window".into(), w.clone());
    }
    if let Some(dt) = args.dt {
        config.insert("dt".into(), fmt_float(dt));
    }
    let manifest = RunManifest {
        tool: ToolInfo::default(),
        command: "sweep".into(),
        config,
        integrator: None,
        invariants: None,
        datasets: vec![dataset_info(&args.out, &csv)],
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_manifest(&manifest_path_for(&args.out), &manifest)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// oracle

fn cmd_oracle(args: OracleArgs) -> Result<(), Error> {
    if args.zeno {
        return cmd_oracle_zeno(&args);
    }
    let (t0, t1) = parse_window(&args.window)?;
    let params = LzParams::new(args.z, args.lambda)?;
    let cfg = SimConfig::new(params, Protocol::Diabatic)
        .with_window(t0, t1)
        .with_dt(0.001)
        .allow_unconverged_window();
    cfg.validate()?;
    let reference = integrate(&cfg)?.end().rho.operator();

    println!("dt_meas,max_element_error,tolerance,within");
    let mut all_ok = true;
    for part in args.dt_meas.split(',') {
        let dtm: f64 = part.trim().parse().map_err(|_| {
            Error::InvalidConfig(format!("--dt-meas: `{part}` is not a number"))
        })?;
        let end = discrete_propagate(&cfg, dtm)?.end().rho.operator();
        let err = end.max_abs_diff(&reference);
        // declared gate: first-order splitting with unit constant, floored
        // by the reference integrator's own accuracy
        let tol = if args.lambda == 0.0 { 1e-6 } else { dtm.max(1e-6) };
        let ok = err <= tol;
        all_ok &= ok;
        println!("{},{},{},{}", fmt_float(dtm), fmt_float(err), fmt_float(tol), ok);
    }
    if all_ok {
        Ok(())
    } else {
        eprintln!("error: discrete-measurement propagation missed its tolerance");
        std::process::exit(4);
    }
}

fn cmd_oracle_zeno(args: &OracleArgs) -> Result<(), Error> {
    println!("N,simulated,closed_form,abs_diff,tolerance,within");
    let mut all_ok = true;
    let mut prev = 0.0;
    let mut monotone = true;
    for part in args.n_list.split(',') {
        let n: u32 = part.trim().parse().map_err(|_| {
            Error::InvalidConfig(format!("--n-list: `{part}` is not a positive integer"))
        })?;
        let sim = projective_zeno_simulate(args.coupling, args.duration, n)?;
        let formula = zeno_projective_survival(args.coupling, args.duration, n)?;
        let diff = (sim - formula).abs();
        let tol = 0.1 / n as f64;
        let ok = diff <= tol;
        all_ok &= ok;
        monotone &= sim > prev;
        prev = sim;
        println!(
            "{n},{},{},{},{},{ok}",
            fmt_float(sim),
            fmt_float(formula),
            fmt_float(diff),
            fmt_float(tol)
        );
    }
    if !monotone {
        eprintln!("error: survival is not monotone in N");
    }
    if all_ok && monotone {
        Ok(())
    } else {
        eprintln!("error: projective-interrogation check missed its tolerance");
        std::process::exit(4);
    }
}

// ---------------------------------------------------------------------------
// validate

fn cmd_validate(args: ValidateArgs) -> ExitCode {
    let opts = AcceptanceOptions {
        fast: args.fast,
        gauge_sign: if args.corrupt_gauge_sign {
            -GAUGE_COMMUTATOR_SIGN
        } else {
            GAUGE_COMMUTATOR_SIGN
        },
        artifact_dir: args.artifacts.clone(),
    };
    let reports = match &args.only {
        Some(id) => match acceptance::run_one(id, &opts) {
            Some(r) => vec![r],
            None => {
                eprintln!(
                    "error: unknown criterion `{id}`; known ids: {}",
                    acceptance::CRITERIA
                        .iter()
                        .map(|(i, _)| *i)
                        .collect::<Vec<_>>()
                        .join(", ")
                );
                return ExitCode::from(2);
            }
        },
        None => acceptance::run_all(&opts),
    };
    let mut failed = 0usize;
    for r in &reports {
        println!("{}", r.summary_line());
        if !r.passed {
            failed += 1;
        }
    }
    println!(
        "{} of {} checks passed{}",
        reports.len() - failed,
        reports.len(),
        if args.fast { " (fast grids)" } else { "" }
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

// ---------------------------------------------------------------------------
// plot / figures

fn cmd_plot(args: PlotArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.input)?;
    let svg = match args.kind {
        PlotKind::Timeseries => io::plot_timeseries(&io::parse_trajectory_csv(&text)?)?,
        PlotKind::Asymptote => io::plot_asymptote(&io::parse_sweep_csv(&text)?)?,
        PlotKind::Surface => io::plot_surface(&io::parse_sweep_csv(&text)?)?,
    };
    std::fs::write(&args.out, svg)?;
    Ok(())
}

fn cmd_figures(args: FiguresArgs) -> Result<(), Error> {
    let start = Instant::now();
    let sets: Vec<FigureId> = if args.set.trim().eq_ignore_ascii_case("all") {
        FigureId::ALL.to_vec()
    } else {
        match FigureId::parse(&args.set) {
            Some(f) => vec![f],
            None => {
                return Err(Error::InvalidConfig(format!(
                    "--set: unknown dataset `{}`; use 1a,1b,1c,2a,2b,2c,3a,3b or all",
                    args.set
                )))
            }
        }
    };
    let mut datasets = Vec::new();
    for id in &sets {
        for path in lz_core::experiments::reproduce_figure(*id, &args.out)? {
            let contents = std::fs::read_to_string(&path)?;
            datasets.push(dataset_info(&path, &contents));
            println!("wrote {}", path.display());
        }
    }
    let mut config = BTreeMap::new();
    config.insert("set".into(), args.set.clone());
    let manifest = RunManifest {
        tool: ToolInfo::default(),
        command: "figures".into(),
        config,
        integrator: None,
        invariants: None,
        datasets,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_manifest(&args.out.join("figures.manifest.json"), &manifest)?;
    Ok(())
}
