//! Experiment orchestration and the CSV/SVG artifact formats.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::experiments::{run_experiment, ExperimentError, ExperimentParams, ExperimentReport, ReportRow, DEFAULT_SEED, EXPERIMENTS};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const CSV_HEADER: [&str; 5] = ["label", "measured", "target", "tolerance", "pass"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("experiment `{name}` failed: {source}")]
    Experiment { name: String, source: ExperimentError },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Experiment { source: ExperimentError::InvalidParameter(_) | ExperimentError::Unknown(_), .. } => EXIT_USAGE,
            CliError::Experiment { .. } => EXIT_FAIL,
        }
    }
}

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("malformed csv: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// An entry of [`EXPERIMENTS`] or `all`.
    pub experiment: String,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub r: Option<f64>,
    pub plot: bool,
    /// `(row label, absolute tolerance)` replacements applied before the verdict.
    pub tol_overrides: Vec<(String, f64)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: "all".into(),
            out_dir: PathBuf::from("results"),
            seed: DEFAULT_SEED,
            r: None,
            plot: false,
            tol_overrides: Vec::new(),
        }
    }
}

impl RunConfig {
    /// Experiment names this config selects, or a usage error.
    pub fn experiments(&self) -> Result<Vec<&'static str>, CliError> {
        if self.experiment == "all" {
            return Ok(EXPERIMENTS.to_vec());
        }
        EXPERIMENTS
            .iter()
            .find(|e| **e == self.experiment)
            .map(|e| vec![*e])
            .ok_or_else(|| CliError::Usage(format!("unknown experiment `{}`; expected one of: all, {}", self.experiment, EXPERIMENTS.join(", "))))
    }
}

/// Parses a `label=value` tolerance override.
pub fn parse_tol_override(s: &str) -> Result<(String, f64), String> {
    let (label, value) = s.rsplit_once('=').ok_or_else(|| format!("expected label=value, got `{s}`"))?;
    let tol: f64 = value.parse().map_err(|_| format!("invalid tolerance `{value}`"))?;
    if !(tol >= 0.0) {
        return Err(format!("tolerance must be non-negative, got {tol}"));
    }
    Ok((sanitize_label(label), tol))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub reports: Vec<ExperimentReport>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.reports.iter().all(ExperimentReport::all_pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_pass() {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

/// Runs the selected experiments and writes `<name>.csv` (and `<name>.svg`
/// with `plot` when the report has curves) into `out_dir`.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let names = config.experiments()?;
    if let Some(r) = config.r {
        if !r.is_finite() {
            return Err(CliError::Usage(format!("--r must be finite, got {r}")));
        }
    }
    fs::create_dir_all(&config.out_dir).map_err(|source| CliError::Io { path: config.out_dir.clone(), source })?;
    let params = ExperimentParams { seed: config.seed, r: config.r, plot: config.plot };
    let mut reports = Vec::with_capacity(names.len());
    for name in names {
        let mut report =
            run_experiment(name, &params).map_err(|source| CliError::Experiment { name: name.to_string(), source })?;
        apply_overrides(&mut report, &config.tol_overrides);
        let csv_path = config.out_dir.join(format!("{name}.csv"));
        emit_csv(&report, &csv_path)?;
        report.artifacts.push(csv_path.display().to_string());
        if config.plot && !report.curves.is_empty() {
            let svg_path = config.out_dir.join(format!("{name}.svg"));
            emit_svg(&report.curves, &svg_path)?;
            report.artifacts.push(svg_path.display().to_string());
        }
        reports.push(report);
    }
    Ok(RunOutcome { reports })
}

pub fn apply_overrides(report: &mut ExperimentReport, overrides: &[(String, f64)]) {
    for row in &mut report.rows {
        let label = sanitize_label(&row.label);
        if let Some((_, tol)) = overrides.iter().rev().find(|(l, _)| *l == label) {
            *row = row.clone().with_tolerance(*tol);
        }
    }
}

// ---------------------------------------------------------------------------
// CSV

pub fn sanitize_label(label: &str) -> String {
    label.replace(',', ";")
}

/// Shortest decimal that parses back to the same `f64`; scientific with a
/// signed two-digit exponent below `1e-2` or from `1e16` up.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if x == 0.0 || (1e-2..1e16).contains(&a) {
        return format!("{x}");
    }
    let s = format!("{x:e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

pub fn render_csv(report: &ExperimentReport) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in &report.rows {
        w.write_record([
            sanitize_label(&row.label),
            format_real(row.measured),
            format_real(row.target),
            format_real(row.tolerance),
            row.pass.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn emit_csv(report: &ExperimentReport, path: &Path) -> Result<(), CliError> {
    fs::write(path, render_csv(report)).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Reads a report written by [`render_csv`]; rows keep their recorded verdicts.
pub fn parse_csv(name: &str, text: &str) -> Result<ExperimentReport, CsvError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(CsvError::Format(format!("unexpected header {header:?}")));
    }
    let real = |s: &str| s.parse::<f64>().map_err(|_| CsvError::Format(format!("invalid number `{s}`")));
    let mut report = ExperimentReport::new(name);
    for rec in r.records() {
        let rec = rec?;
        let pass = match &rec[4] {
            "true" => true,
            "false" => false,
            other => return Err(CsvError::Format(format!("invalid verdict `{other}`"))),
        };
        report.rows.push(ReportRow {
            label: rec[0].to_string(),
            measured: real(&rec[1])?,
            target: real(&rec[2])?,
            tolerance: real(&rec[3])?,
            pass,
        });
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// SVG

pub const STROKE_COLORS: [&str; 3] = ["red", "green", "blue"];

/// Square viewBox `(min_x, min_y, size)` in SVG coordinates (y flipped)
/// around the data, padded by 5% of the larger half-extent.
pub fn svg_view_box(curves: &[Vec<[f64; 2]>]) -> (f64, f64, f64) {
    let pts = curves.iter().flatten();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in pts {
        for i in 0..2 {
            lo[i] = lo[i].min(p[i]);
            hi[i] = hi[i].max(p[i]);
        }
    }
    if !lo[0].is_finite() {
        return (-1.0, -1.0, 2.0);
    }
    let cx = 0.5 * (lo[0] + hi[0]);
    let cy = 0.5 * (lo[1] + hi[1]);
    let half = 0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let half = if half > 0.0 { half * 1.05 } else { 1.0 };
    (cx - half, -cy - half, 2.0 * half)
}

pub fn render_svg(curves: &[Vec<[f64; 2]>]) -> String {
    let (x0, y0, size) = svg_view_box(curves);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"600\" height=\"600\">\n",
        x0, y0, size, size
    );
    let width = size / 300.0;
    for (i, curve) in curves.iter().enumerate() {
        if curve.is_empty() {
            continue;
        }
        let mut d = String::new();
        for (j, p) in curve.iter().enumerate() {
            d.push_str(if j == 0 { "M" } else { " L" });
            d.push_str(&format!("{} {}", p[0], 0.0 - p[1]));
        }
        let first = curve[0];
        let last = curve[curve.len() - 1];
        if curve.len() > 2 && ((first[0] - last[0]).hypot(first[1] - last[1]) <= 1e-9 * size) {
            d.push_str(" Z");
        }
        out.push_str(&format!(
            "  <path d=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{width}\"/>\n",
            STROKE_COLORS[i % STROKE_COLORS.len()]
        ));
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_svg(curves: &[Vec<[f64; 2]>], path: &Path) -> Result<(), CliError> {
    if curves.is_empty() {
        return Err(CliError::Usage("no curves to plot".into()));
    }
    fs::write(path, render_svg(curves)).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Tolerance;

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(1e-6), "1e-06");
        assert_eq!(format_real(1e-3), "1e-03");
        assert_eq!(format_real(0.5), "0.5");
        assert_eq!(format_real(0.01), "0.01");
        assert_eq!(format_real(-2.5e-10), "-2.5e-10");
        assert_eq!(format_real(1e20), "1e+20");
        assert_eq!(format_real(0.0), "0");
        for x in [0.1 + 0.2, 1.0 / 3.0, 1.2365573653325, 6.02e-23, f64::MIN_POSITIVE] {
            assert_eq!(format_real(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_round_trip_and_sanitizing() {
        let mut rep = ExperimentReport::new("t");
        rep.push(ReportRow::new("a=1,r=1", 0.5, 0.5, Tolerance::Absolute(1e-6)));
        rep.push(ReportRow::flag("flag", false));
        let text = render_csv(&rep);
        assert_eq!(text, "label,measured,target,tolerance,pass\na=1;r=1,0.5,0.5,1e-06,true\nflag,0,1,0,false\n");
        let back = parse_csv("t", &text).unwrap();
        assert_eq!(back.rows[1], rep.rows[1]);
        assert_eq!(back.rows[0].label, "a=1;r=1");
        assert_eq!(render_csv(&ExperimentReport::new("e")), "label,measured,target,tolerance,pass\n");
        assert!(parse_csv("t", "a,b\n1,2\n").is_err());
    }

    #[test]
    fn svg_box_and_paths() {
        let circle = |r: f64| (0..=64).map(|i| {
            let t = std::f64::consts::TAU * i as f64 / 64.0;
            [r * t.cos(), r * t.sin()]
        }).collect::<Vec<_>>();
        let (x0, y0, s) = svg_view_box(&[circle(1.0), circle(2.0)]);
        assert!((x0 + 2.1).abs() < 1e-12 && (y0 + 2.1).abs() < 1e-12 && (s - 4.2).abs() < 1e-12);
        let svg = render_svg(&[circle(1.0)]);
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains(" Z\"") && svg.contains("stroke=\"red\""));
        let svg = render_svg(&[circle(1.0), circle(2.0), circle(3.0), circle(4.0)]);
        let colors: Vec<_> = ["red", "green", "blue"].iter().map(|c| svg.matches(c).count()).collect();
        assert_eq!(colors, vec![2, 1, 1]);
    }

    #[test]
    fn overrides_and_usage() {
        assert_eq!(parse_tol_override("k=0.5;x=1").unwrap(), ("k=0.5;x".to_string(), 1.0));
        assert!(parse_tol_override("nolabel").is_err());
        assert!(parse_tol_override("x=-1").is_err());
        let mut rep = ExperimentReport::new("t");
        rep.push(ReportRow::new("x", 2.0, 1.0, Tolerance::Absolute(0.1)));
        apply_overrides(&mut rep, &[("x".into(), 1.5)]);
        assert!(rep.rows[0].pass);
        let cfg = RunConfig { experiment: "bogus".into(), ..RunConfig::default() };
        assert_eq!(cfg.experiments().unwrap_err().exit_code(), EXIT_USAGE);
    }
}
