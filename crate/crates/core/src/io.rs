//! Dataset emission and parsing: CSV tables, JSON run manifests, static SVG
//! plots. All writers are deterministic so identical inputs give
//! byte-identical files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::dynamics::{InvariantSummary, Trajectory};
use crate::error::{Error, Result};
use crate::experiments::SweepResult;

/// Trajectory CSV column header.
pub const TRAJECTORY_HEADER: &str = "t,p1_dia,p2_dia,p1_adi,p2_adi,re_rho12,im_rho12,purity";
/// Sweep CSV column header.
pub const SWEEP_HEADER: &str = "z,lambda,survival,spread,converged";

/// Decimal with 17 significant digits: lossless for 64-bit floats and
/// byte-stable across runs. NaN serializes as `nan`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float(field: &str, line: usize) -> Result<f64> {
    match field {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => field.parse::<f64>().map_err(|_| Error::MalformedCsv {
            line,
            reason: format!("`{field}` is not a number"),
        }),
    }
}

/// Render a trajectory as CSV text.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::with_capacity(traj.points.len() * 160 + 64);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for p in &traj.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_float(p.t),
            fmt_float(p.p1_dia),
            fmt_float(p.p2_dia),
            fmt_float(p.p1_adi),
            fmt_float(p.p2_adi),
            fmt_float(p.coherence.re),
            fmt_float(p.coherence.im),
            fmt_float(p.purity),
        );
    }
    out
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    fs::write(path, trajectory_csv(traj))?;
    Ok(())
}

/// Render a sweep as long-format CSV, one line per (z, lambda) cell.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::with_capacity(result.cells.len() * 96 + 40);
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for c in &result.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            fmt_float(c.z),
            fmt_float(c.lambda),
            fmt_float(c.survival),
            fmt_float(c.spread),
            c.converged,
        );
    }
    out
}

pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    fs::write(path, sweep_csv(result))?;
    Ok(())
}

/// A parsed trajectory CSV row.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryRow {
    pub t: f64,
    pub p1_dia: f64,
    pub p2_dia: f64,
    pub p1_adi: f64,
    pub p2_adi: f64,
    pub re_rho12: f64,
    pub im_rho12: f64,
    pub purity: f64,
}

/// A parsed sweep CSV row.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub z: f64,
    pub lambda: f64,
    pub survival: f64,
    pub spread: f64,
    pub converged: bool,
}

fn split_line(line: &str, expect: usize, lineno: usize) -> Result<Vec<&str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != expect {
        return Err(Error::MalformedCsv {
            line: lineno,
            reason: format!("expected {expect} fields, found {}", fields.len()),
        });
    }
    Ok(fields)
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == TRAJECTORY_HEADER => {}
        Some((_, h)) => {
            return Err(Error::MalformedCsv {
                line: 1,
                reason: format!("unexpected header `{h}`"),
            })
        }
        None => {
            return Err(Error::MalformedCsv {
                line: 1,
                reason: "empty file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let f = split_line(line, 8, lineno)?;
        rows.push(TrajectoryRow {
            t: parse_float(f[0], lineno)?,
            p1_dia: parse_float(f[1], lineno)?,
            p2_dia: parse_float(f[2], lineno)?,
            p1_adi: parse_float(f[3], lineno)?,
            p2_adi: parse_float(f[4], lineno)?,
            re_rho12: parse_float(f[5], lineno)?,
            im_rho12: parse_float(f[6], lineno)?,
            purity: parse_float(f[7], lineno)?,
        });
    }
    Ok(rows)
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == SWEEP_HEADER => {}
        Some((_, h)) => {
            return Err(Error::MalformedCsv {
                line: 1,
                reason: format!("unexpected header `{h}`"),
            })
        }
        None => {
            return Err(Error::MalformedCsv {
                line: 1,
                reason: "empty file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let f = split_line(line, 5, lineno)?;
        let converged = match f[4] {
            "true" => true,
            "false" => false,
            other => {
                return Err(Error::MalformedCsv {
                    line: lineno,
                    reason: format!("`{other}` is not a boolean"),
                })
            }
        };
        rows.push(SweepRow {
            z: parse_float(f[0], lineno)?,
            lambda: parse_float(f[1], lineno)?,
            survival: parse_float(f[2], lineno)?,
            spread: parse_float(f[3], lineno)?,
            converged,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// manifests

#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl Default for ToolInfo {
    fn default() -> Self {
        ToolInfo {
            name: "lzsim",
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegratorInfo {
    pub method: String,
    pub dt: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct InvariantInfo {
    pub max_trace_error: f64,
    pub min_eigenvalue: f64,
    pub max_purity_increase: f64,
    pub trace_renormalizations: usize,
}

impl From<&InvariantSummary> for InvariantInfo {
    fn from(s: &InvariantSummary) -> Self {
        InvariantInfo {
            max_trace_error: s.max_trace_error,
            min_eigenvalue: s.min_eigenvalue,
            max_purity_increase: s.max_purity_increase,
            trace_renormalizations: s.trace_renormalizations,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetInfo {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

/// Run manifest emitted next to every dataset. The `config` block mirrors
/// the command-line flag names one-to-one, so a dataset can be reproduced
/// byte-for-byte from its manifest.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: ToolInfo,
    pub command: String,
    pub config: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<InvariantInfo>,
    pub datasets: Vec<DatasetInfo>,
    pub wall_time_s: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

pub fn dataset_info(path: &Path, contents: &str) -> DatasetInfo {
    DatasetInfo {
        file: path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string()),
        rows: contents.lines().count().saturating_sub(1),
        sha256: sha256_hex(contents.as_bytes()),
    }
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::InvalidConfig(format!("manifest serialization: {e}")))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

/// Manifest path conventionally paired with a dataset path.
pub fn manifest_path_for(dataset: &Path) -> std::path::PathBuf {
    dataset.with_extension("manifest.json")
}

// ---------------------------------------------------------------------------
// SVG plots

const SVG_W: f64 = 840.0;
const SVG_H: f64 = 560.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

fn fnum(x: f64) -> String {
    // fixed short decimal for geometry; deterministic
    format!("{x:.3}")
}

fn axis_label(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{x:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() { "0".into() } else { s }
    } else {
        format!("{x:.2e}")
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        MARGIN_L + (v - self.x0) / (self.x1 - self.x0) * (SVG_W - MARGIN_L - MARGIN_R)
    }
    fn y(&self, v: f64) -> f64 {
        SVG_H - MARGIN_B - (v - self.y0) / (self.y1 - self.y0) * (SVG_H - MARGIN_T - MARGIN_B)
    }
}

fn svg_open(out: &mut String) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\" \
         viewBox=\"0 0 {SVG_W} {SVG_H}\" font-family=\"monospace\" font-size=\"12\">\n\
         <rect width=\"{SVG_W}\" height=\"{SVG_H}\" fill=\"white\"/>\n"
    );
}

fn svg_axes(out: &mut String, f: &Frame, xlab: &str, ylab: &str, xticks: &[f64], yticks: &[f64]) {
    let _ = write!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fnum(MARGIN_L),
        fnum(SVG_H - MARGIN_B),
        fnum(SVG_W - MARGIN_R),
        fnum(SVG_H - MARGIN_B),
        fnum(MARGIN_L),
        fnum(MARGIN_T),
        fnum(MARGIN_L),
        fnum(SVG_H - MARGIN_B),
    );
    for &t in xticks {
        let x = f.x(t);
        let _ = write!(
            out,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n\
             <text x=\"{0}\" y=\"{3}\" text-anchor=\"middle\">{4}</text>\n",
            fnum(x),
            fnum(SVG_H - MARGIN_B),
            fnum(SVG_H - MARGIN_B + 5.0),
            fnum(SVG_H - MARGIN_B + 20.0),
            axis_label(t)
        );
    }
    for &t in yticks {
        let y = f.y(t);
        let _ = write!(
            out,
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>\n\
             <text x=\"{3}\" y=\"{0}\" text-anchor=\"end\" dominant-baseline=\"middle\">{4}</text>\n",
            fnum(y),
            fnum(MARGIN_L - 5.0),
            fnum(MARGIN_L),
            fnum(MARGIN_L - 9.0),
            axis_label(t)
        );
    }
    let _ = write!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">{}</text>\n",
        fnum((MARGIN_L + SVG_W - MARGIN_R) / 2.0),
        fnum(SVG_H - 12.0),
        xlab,
        fnum(SVG_H / 2.0),
        fnum(SVG_H / 2.0),
        ylab
    );
}

fn ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect()
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], color: &str) {
    let mut d = String::with_capacity(pts.len() * 16);
    for (x, y) in pts {
        let _ = write!(d, "{},{} ", fnum(f.x(*x)), fnum(f.y(*y)));
    }
    let _ = writeln!(
        out,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
        d.trim_end()
    );
}

fn legend(out: &mut String, entries: &[(String, &str)]) {
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = MARGIN_T + 16.0 * i as f64 + 8.0;
        let _ = write!(
            out,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n\
             <text x=\"{4}\" y=\"{1}\" dominant-baseline=\"middle\">{5}</text>\n",
            fnum(SVG_W - 190.0),
            fnum(y),
            fnum(SVG_W - 165.0),
            color,
            fnum(SVG_W - 160.0),
            label
        );
    }
}

/// Population time series from a trajectory table: both frames' populations
/// against time, clamped axes [0, 1].
pub fn plot_timeseries(rows: &[TrajectoryRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::MalformedCsv {
            line: 2,
            reason: "no data rows".into(),
        });
    }
    let (t0, t1) = (rows[0].t, rows[rows.len() - 1].t);
    let f = Frame {
        x0: t0,
        x1: t1,
        y0: 0.0,
        y1: 1.0,
    };
    let mut out = String::new();
    svg_open(&mut out);
    svg_axes(
        &mut out,
        &f,
        "t\u{303}",
        "population",
        &ticks(t0, t1, 8),
        &ticks(0.0, 1.0, 5),
    );
    let series: [(&str, fn(&TrajectoryRow) -> f64); 4] = [
        ("p1 diabatic", |r| r.p1_dia),
        ("p2 diabatic", |r| r.p2_dia),
        ("p1 adiabatic", |r| r.p1_adi),
        ("p2 adiabatic", |r| r.p2_adi),
    ];
    let mut entries = Vec::new();
    for (i, (label, get)) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, get(r))).collect();
        polyline(&mut out, &f, &pts, PALETTE[i]);
        entries.push((label.to_string(), PALETTE[i]));
    }
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    Ok(out)
}

/// Asymptotic survival against measurement strength, one curve per z.
pub fn plot_asymptote(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::MalformedCsv {
            line: 2,
            reason: "no data rows".into(),
        });
    }
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r.lambda), hi.max(r.lambda))
        });
    let f = Frame {
        x0: lo,
        x1: hi.max(lo + 1e-9),
        y0: 0.0,
        y1: 1.0,
    };
    let mut out = String::new();
    svg_open(&mut out);
    svg_axes(
        &mut out,
        &f,
        "\u{3bb}\u{303}",
        "survival",
        &ticks(f.x0, f.x1, 6),
        &ticks(0.0, 1.0, 5),
    );
    let mut zs: Vec<f64> = rows.iter().map(|r| r.z).collect();
    zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    zs.dedup();
    let mut entries = Vec::new();
    for (i, &z) in zs.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.z == z && r.survival.is_finite())
            .map(|r| (r.lambda, r.survival))
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        polyline(&mut out, &f, &pts, color);
        entries.push((format!("z = {}", axis_label(z)), color));
    }
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    Ok(out)
}

fn heat_color(v: f64) -> String {
    // dark blue -> yellow ramp on [0, 1]
    let v = v.clamp(0.0, 1.0);
    let r = (255.0 * v) as u8;
    let g = (224.0 * v + 16.0) as u8;
    let b = (96.0 + 128.0 * (1.0 - v)) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Survival surface over the (z, lambda) grid as a heatmap. Cells are laid
/// out by grid index; tick labels carry the parameter values.
pub fn plot_surface(rows: &[SweepRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::MalformedCsv {
            line: 2,
            reason: "no data rows".into(),
        });
    }
    let mut zs: Vec<f64> = rows.iter().map(|r| r.z).collect();
    zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    zs.dedup();
    let mut ls: Vec<f64> = rows.iter().map(|r| r.lambda).collect();
    ls.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ls.dedup();
    let f = Frame {
        x0: 0.0,
        x1: zs.len() as f64,
        y0: 0.0,
        y1: ls.len() as f64,
    };
    let mut out = String::new();
    svg_open(&mut out);
    let cell_w = (SVG_W - MARGIN_L - MARGIN_R) / zs.len() as f64;
    let cell_h = (SVG_H - MARGIN_T - MARGIN_B) / ls.len() as f64;
    for r in rows {
        let xi = zs.iter().position(|&z| z == r.z).unwrap() as f64;
        let yi = ls.iter().position(|&l| l == r.lambda).unwrap() as f64;
        let fill = if r.survival.is_finite() {
            heat_color(r.survival)
        } else {
            "#cccccc".into()
        };
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>",
            fnum(f.x(xi)),
            fnum(f.y(yi + 1.0)),
            fnum(cell_w),
            fnum(cell_h),
            fill
        );
    }
    // tick labels on a thinned index grid
    let step_z = (zs.len() / 6).max(1);
    let step_l = (ls.len() / 6).max(1);
    let xticks: Vec<f64> = (0..zs.len()).step_by(step_z).map(|i| i as f64 + 0.5).collect();
    let yticks: Vec<f64> = (0..ls.len()).step_by(step_l).map(|i| i as f64 + 0.5).collect();
    let _ = write!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        fnum(MARGIN_L),
        fnum(SVG_H - MARGIN_B),
        fnum(SVG_W - MARGIN_R),
        fnum(SVG_H - MARGIN_B),
        fnum(MARGIN_L),
        fnum(MARGIN_T),
        fnum(MARGIN_L),
        fnum(SVG_H - MARGIN_B),
    );
    for (k, x) in xticks.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            fnum(f.x(*x)),
            fnum(SVG_H - MARGIN_B + 20.0),
            axis_label(zs[k * step_z])
        );
    }
    for (k, y) in yticks.iter().enumerate() {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" dominant-baseline=\"middle\">{}</text>",
            fnum(MARGIN_L - 9.0),
            fnum(f.y(*y)),
            axis_label(ls[k * step_l])
        );
    }
    let _ = write!(
        out,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">z\u{303}</text>\n\
         <text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">\u{3bb}\u{303}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">survival</text>\n",
        fnum((MARGIN_L + SVG_W - MARGIN_R) / 2.0),
        fnum(SVG_H - 12.0),
        fnum(SVG_H / 2.0),
        fnum(SVG_H / 2.0),
        fnum((MARGIN_L + SVG_W - MARGIN_R) / 2.0),
        fnum(MARGIN_T - 10.0)
    );
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    
    use crate::dynamics::{integrate, Protocol, SimConfig};
    use crate::experiments::{sweep, SweepSpec};
    use crate::model::LzParams;

    fn small_traj() -> Trajectory {
        let cfg = SimConfig::new(LzParams::new(0.5, 1.0).unwrap(), Protocol::Diabatic)
            .with_window(-5.0, 5.0)
            .with_dt(0.01);
        integrate(&cfg).unwrap()
    }

    #[test]
    fn float_format_has_17_significant_digits_and_round_trips() {
        for &x in &[
            0.1,
            1.0 / 3.0,
            -2.5e-17,
            std::f64::consts::PI,
            6.02214076e23,
            0.0,
        ] {
            let s = fmt_float(x);
            let y: f64 = s.parse().unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "round-trip failed for {s}");
        }
        assert_eq!(fmt_float(f64::NAN), "nan");
    }

    #[test]
    fn trajectory_csv_round_trip_is_byte_identical() {
        let traj = small_traj();
        let text = trajectory_csv(&traj);
        let rows = parse_trajectory_csv(&text).unwrap();
        assert_eq!(rows.len(), traj.points.len());
        // re-emit from parsed rows
        let mut again = String::new();
        again.push_str(TRAJECTORY_HEADER);
        again.push('\n');
        for r in &rows {
            again.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt_float(r.t),
                fmt_float(r.p1_dia),
                fmt_float(r.p2_dia),
                fmt_float(r.p1_adi),
                fmt_float(r.p2_adi),
                fmt_float(r.re_rho12),
                fmt_float(r.im_rho12),
                fmt_float(r.purity)
            ));
        }
        assert_eq!(text, again);
    }

    #[test]
    fn malformed_csv_reports_line_numbers() {
        let text = format!("{TRAJECTORY_HEADER}\n1,2,3\n");
        match parse_trajectory_csv(&text) {
            Err(Error::MalformedCsv { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed-csv error, got {other:?}"),
        }
        let text = format!("{SWEEP_HEADER}\n1,2,3,4,maybe\n");
        match parse_sweep_csv(&text) {
            Err(Error::MalformedCsv { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("boolean"));
            }
            other => panic!("expected malformed-csv error, got {other:?}"),
        }
    }

    #[test]
    fn sweep_csv_round_trip_including_nan() {
        let mut spec = SweepSpec::new(vec![0.5], vec![0.0, 0.5], Protocol::Diabatic);
        spec.window = Some((-20.0, 20.0));
        let mut result = sweep(&spec).unwrap();
        result.cells[0].survival = f64::NAN;
        result.cells[0].spread = f64::NAN;
        result.cells[0].converged = false;
        let text = sweep_csv(&result);
        assert!(text.contains("nan"));
        let rows = parse_sweep_csv(&text).unwrap();
        assert!(rows[0].survival.is_nan());
        assert!(!rows[0].converged);
        assert!(rows[1].survival.is_finite());
    }

    #[test]
    fn plots_are_deterministic_and_well_formed() {
        let traj = small_traj();
        let rows = parse_trajectory_csv(&trajectory_csv(&traj)).unwrap();
        let a = plot_timeseries(&rows).unwrap();
        let b = plot_timeseries(&rows).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        assert!(a.contains("population"));

        let mut spec = SweepSpec::new(vec![0.05, 0.5], vec![0.0, 0.5, 2.0], Protocol::Adiabatic);
        spec.window = Some((-20.0, 20.0));
        let res = sweep(&spec).unwrap();
        let srows = parse_sweep_csv(&sweep_csv(&res)).unwrap();
        let s1 = plot_asymptote(&srows).unwrap();
        assert!(s1.contains("survival"));
        let s2 = plot_surface(&srows).unwrap();
        // one rect per grid cell
        assert_eq!(s2.matches("<rect").count() - 1, srows.len()); // minus background
        assert_eq!(plot_surface(&srows).unwrap(), s2);
    }

    #[test]
    fn manifest_serializes_stably() {
        let mut config = BTreeMap::new();
        config.insert("z".to_string(), "0.5".to_string());
        config.insert("lambda".to_string(), "1".to_string());
        let m = RunManifest {
            tool: ToolInfo::default(),
            command: "simulate".into(),
            config,
            integrator: Some(IntegratorInfo {
                method: "rk4".into(),
                dt: 0.005,
                steps: 80000,
            }),
            invariants: None,
            datasets: vec![DatasetInfo {
                file: "out.csv".into(),
                rows: 10,
                sha256: sha256_hex(b"hello"),
            }],
            wall_time_s: 0.0,
        };
        let a = serde_json::to_string_pretty(&m).unwrap();
        let b = serde_json::to_string_pretty(&m).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"lambda\": \"1\""));
        assert_eq!(
            sha256_hex(b"hello"),
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        );
    }
}
