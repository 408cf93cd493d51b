//! Batch front end: one entry point per mode, each writing CSV tables, a TOML
//! summary and optionally a gnuplot script into the output directory.
//!
//! Exit codes: 0 success (including blow-up termination), 1 verification
//! failure or I/O error, 2 configuration error, 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::acceptance::{self, Tolerances};
use crate::blowup::{assess_all, breaking_constants, runtime_detector, BlowupAssessment, BreakingConstants, DetectionReport, DetectorThresholds};
use crate::characteristics::{exact_ux_mu0zero, trace_characteristic, CharTrace};
use crate::config::{Mode, RunConfig};
use crate::error::{Error, Result};
use crate::grid::{deriv, mean, Interpolant};
use crate::model::{momentum, DiagnosticsSample, ModelParams, StateU};
use crate::peakons::{integrate_peakons, PeakonTrajectory};
use crate::timestepper::{integrate, RunResult, Termination};

/// Environment variable bounding the number of sweep workers.
pub const THREADS_ENV: &str = "MUCHLAB_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success,
    VerifyFailed,
    Io,
    Config,
    Numerical,
}

impl ExitStatus {
    pub fn code(&self) -> i32 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::VerifyFailed | ExitStatus::Io => 1,
            ExitStatus::Config => 2,
            ExitStatus::Numerical => 3,
        }
    }

    fn of_error(e: &Error) -> Self {
        match e {
            Error::Config(_) => ExitStatus::Config,
            Error::Io(_) => ExitStatus::Io,
            _ => ExitStatus::Numerical,
        }
    }

    fn worst(self, other: Self) -> Self {
        if other.code() > self.code() {
            other
        } else {
            self
        }
    }
}

/// Full round-trip formatting.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn csv_row<W: std::io::Write>(w: &mut csv::Writer<W>, row: &[String]) -> Result<()> {
    w.write_record(row).map_err(|e| Error::Io(e.to_string()))
}

fn csv_finish<W: std::io::Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn write_diagnostics(path: &Path, diagnostics: &[DiagnosticsSample]) -> Result<()> {
    let mut text = String::from(DiagnosticsSample::CSV_HEADER);
    text.push('\n');
    for d in diagnostics {
        text.push_str(&d.csv_row());
        text.push('\n');
    }
    write_text(path, &text)
}

/// Rows `t, x, u, ux, m` for every `every`-th snapshot and the last one.
pub fn write_snapshots(path: &Path, snapshots: &[StateU], every: usize) -> Result<()> {
    let mut w = csv_writer(path)?;
    csv_row(&mut w, &["t", "x", "u", "ux", "m"].map(String::from))?;
    let last = snapshots.len().saturating_sub(1);
    for (i, s) in snapshots.iter().enumerate() {
        if i % every != 0 && i != last {
            continue;
        }
        let ux = deriv(&s.u, 1)?;
        let m = momentum(&s.u);
        for j in 0..s.u.len() {
            let row = [s.t, s.u.grid().node(j), s.u.values()[j], ux.values()[j], m.values()[j]];
            csv_row(&mut w, &row.map(num))?;
        }
    }
    csv_finish(w)
}

/// Gnuplot script plotting every column of a CSV against the first.
pub fn plot_script(csv_name: &str, header: &str) -> String {
    let cols = header.split(',').count();
    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot -p {}", csv_name.replace(".csv", ".gp"));
    let _ = writeln!(s, "set datafile separator \",\"");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set xlabel \"{}\"", header.split(',').next().unwrap_or("t"));
    let side = ((cols - 1) as f64).sqrt().ceil() as usize;
    let _ = writeln!(s, "set multiplot layout {side},{side}");
    let _ = writeln!(s, "do for [c=2:{cols}] {{");
    let _ = writeln!(s, "    plot \"{csv_name}\" using 1:c with lines");
    let _ = writeln!(s, "}}");
    let _ = writeln!(s, "unset multiplot");
    s
}

#[derive(Serialize)]
struct RunSummary {
    termination: &'static str,
    t_final: f64,
    accepted_steps: usize,
    rejected_steps: usize,
    blowup_t: Option<f64>,
    blowup_guard: Option<String>,
}

impl RunSummary {
    fn of(r: &RunResult) -> Self {
        let (blowup_t, blowup_guard) = match r.termination {
            Termination::BlowupDetected { t, guard } => (Some(t), Some(format!("{guard:?}").to_lowercase())),
            _ => (None, None),
        };
        Self {
            termination: r.termination.name(),
            t_final: r.final_state.t,
            accepted_steps: r.accepted_steps,
            rejected_steps: r.rejected_steps,
            blowup_t,
            blowup_guard,
        }
    }
}

#[derive(Serialize)]
struct TraceSummary {
    x0: f64,
    t_last: f64,
    truncated: bool,
    min_qx: f64,
    max_abs_residual: f64,
    max_rel_residual: f64,
}

#[derive(Serialize)]
struct PeakonSummary {
    formulation: String,
    peaks: usize,
    t_final: f64,
    sum_p_drift: f64,
    mean_speed: Vec<f64>,
    min_gap: f64,
}

#[derive(Serialize, Default)]
struct Summary {
    mode: String,
    n: Option<usize>,
    t_end: f64,
    params: Option<ModelParams>,
    run: Option<RunSummary>,
    detection: Option<DetectionReport>,
    constants: Option<BreakingConstants>,
    assessments: Vec<BlowupAssessment>,
    characteristics: Vec<TraceSummary>,
    peakons: Option<PeakonSummary>,
}

fn write_summary(dir: &Path, s: &Summary) -> Result<()> {
    let text = toml::to_string(s).map_err(|e| Error::Io(format!("summary: {e}")))?;
    write_text(&dir.join("summary.toml"), &text)
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

fn status_of(r: &RunResult) -> ExitStatus {
    match r.termination {
        Termination::ReachedTEnd | Termination::BlowupDetected { .. } => ExitStatus::Success,
        Termination::DtUnderflow { .. } | Termination::NonFinite { .. } => ExitStatus::Numerical,
    }
}

/// Assessments for every seed (or the steepest point); empty when the
/// constants are undefined (`gamma != 0`).
fn assessments(u0: &crate::grid::Field, cfg: &RunConfig) -> Result<(Option<BreakingConstants>, Vec<BlowupAssessment>)> {
    if cfg.params.gamma != 0.0 {
        return Ok((None, Vec::new()));
    }
    let c = breaking_constants(u0, &cfg.params)?;
    let mut all = Vec::new();
    if cfg.seeds.is_empty() {
        all.extend(assess_all(u0, &cfg.params, None)?);
    } else {
        for &x in &cfg.seeds {
            all.extend(assess_all(u0, &cfg.params, Some(x))?);
        }
    }
    Ok((Some(c), all))
}

fn detector(cfg: &RunConfig) -> DetectorThresholds {
    DetectorThresholds { gamma: cfg.control.blowup_gamma_threshold, ..Default::default() }
}

fn simulate(cfg: &RunConfig, dir: &Path, mode: Mode) -> Result<(ExitStatus, Summary, RunResult)> {
    prepare_dir(dir)?;
    let u0 = cfg.initial_field()?;
    let run = integrate(&StateU { t: 0.0, u: u0.clone() }, cfg.t_end, &cfg.params, &cfg.control)?;
    write_diagnostics(&dir.join("diagnostics.csv"), &run.diagnostics)?;
    if cfg.output.snapshots {
        write_snapshots(&dir.join("snapshots.csv"), &run.snapshots, cfg.output.snapshot_every)?;
    }
    if cfg.output.plot_script {
        write_text(&dir.join("diagnostics.gp"), &plot_script("diagnostics.csv", DiagnosticsSample::CSV_HEADER))?;
    }
    let (constants, assessments) = assessments(&u0, cfg)?;
    let summary = Summary {
        mode: mode.name().into(),
        n: Some(cfg.n),
        t_end: cfg.t_end,
        params: Some(cfg.params),
        run: Some(RunSummary::of(&run)),
        detection: Some(runtime_detector(&run.diagnostics, &detector(cfg))?),
        constants,
        assessments,
        ..Default::default()
    };
    Ok((status_of(&run), summary, run))
}

const CHAR_HEADER: [&str; 11] = ["x0", "t", "q", "q_unwrapped", "q_x", "m", "ux", "gamma", "residual", "rel_residual", "exact_ux"];

fn characteristics(cfg: &RunConfig, dir: &Path) -> Result<(ExitStatus, Summary)> {
    let (status, mut summary, run) = simulate(cfg, dir, Mode::Characteristics)?;
    let seeds = if cfg.seeds.is_empty() { vec![0.0, 0.25, 0.5, 0.75] } else { cfg.seeds.clone() };
    let u0 = &run.snapshots[0].u;
    let m0_sup = momentum(u0).sup_norm();
    let mu0 = mean(u0);
    let mu1 = deriv(u0, 1)?.values().iter().map(|v| v * v).sum::<f64>().sqrt() / (u0.len() as f64).sqrt();
    let interp = Interpolant::new(u0);
    let mean_zero = mu0.abs() < 1e-12 && mu1 > 0.0 && cfg.params.k2 != 0.0;
    let mut w = csv_writer(&dir.join("characteristics.csv"))?;
    csv_row(&mut w, &CHAR_HEADER.map(String::from))?;
    for &x0 in &seeds {
        let tr: CharTrace = trace_characteristic(&run, x0, &cfg.params)?;
        let u0x = interp.eval(x0).dx;
        for s in &tr.samples {
            let exact = if mean_zero {
                exact_ux_mu0zero(s.t, u0x, mu1, cfg.params.k2).map(num).unwrap_or_default()
            } else {
                String::new()
            };
            let mut row: Vec<String> = [tr.x0, s.t, s.q, s.q_unwrapped, s.q_x, s.m, s.ux, s.gamma, s.residual, s.residual / m0_sup]
                .into_iter()
                .map(num)
                .collect();
            row.push(exact);
            csv_row(&mut w, &row)?;
        }
        summary.characteristics.push(TraceSummary {
            x0: tr.x0,
            t_last: tr.samples.last().map_or(0.0, |s| s.t),
            truncated: tr.truncated,
            min_qx: tr.min_qx(),
            max_abs_residual: tr.max_abs_residual(),
            max_rel_residual: tr.max_abs_residual() / m0_sup,
        });
    }
    csv_finish(w)?;
    Ok((status, summary))
}

fn peakon_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string(), "sum_p".to_string()];
    for i in 0..n {
        h.extend([format!("p{i}"), format!("q{i}"), format!("q_unwrapped{i}"), format!("gap{i}")]);
    }
    h
}

pub fn write_trajectory(path: &Path, tr: &PeakonTrajectory) -> Result<()> {
    let n = tr.samples[0].p.len();
    let mut w = csv_writer(path)?;
    csv_row(&mut w, &peakon_header(n))?;
    for s in &tr.samples {
        let mut row = vec![num(s.t), num(s.sum_p)];
        for i in 0..n {
            row.extend([num(s.p[i]), num(s.q[i]), num(s.q_unwrapped[i]), num(s.gaps[i])]);
        }
        csv_row(&mut w, &row)?;
    }
    csv_finish(w)
}

fn peakon(cfg: &RunConfig, dir: &Path) -> Result<(ExitStatus, Summary)> {
    prepare_dir(dir)?;
    let sys = cfg.peakon_system()?;
    let tr = integrate_peakons(&sys, cfg.t_end, &cfg.params, &cfg.control, cfg.peakon.formulation)?;
    write_trajectory(&dir.join("trajectory.csv"), &tr)?;
    if cfg.output.plot_script {
        let header = peakon_header(sys.n_peaks()).join(",");
        write_text(&dir.join("trajectory.gp"), &plot_script("trajectory.csv", &header))?;
    }
    let (first, last) = (&tr.samples[0], tr.last());
    let span = last.t - first.t;
    let summary = Summary {
        mode: Mode::Peakon.name().into(),
        t_end: cfg.t_end,
        params: Some(cfg.params),
        peakons: Some(PeakonSummary {
            formulation: format!("{:?}", tr.formulation).to_lowercase(),
            peaks: sys.n_peaks(),
            t_final: last.t,
            sum_p_drift: tr.samples.iter().fold(0.0f64, |a, s| a.max((s.sum_p - first.sum_p).abs())),
            mean_speed: first.q_unwrapped.iter().zip(&last.q_unwrapped).map(|(a, b)| (b - a) / span).collect(),
            min_gap: tr.samples.iter().flat_map(|s| s.gaps.iter().copied()).fold(f64::INFINITY, f64::min),
        }),
        ..Default::default()
    };
    Ok((ExitStatus::Success, summary))
}

fn blowup_check(cfg: &RunConfig, dir: &Path) -> Result<(ExitStatus, Summary)> {
    prepare_dir(dir)?;
    let u0 = cfg.initial_field()?;
    if cfg.params.gamma != 0.0 {
        return Err(Error::Config("blowup-check needs gamma = 0".into()));
    }
    let (constants, assessments) = assessments(&u0, cfg)?;
    Ok((
        ExitStatus::Success,
        Summary {
            mode: Mode::BlowupCheck.name().into(),
            n: Some(cfg.n),
            t_end: cfg.t_end,
            params: Some(cfg.params),
            constants,
            assessments,
            ..Default::default()
        },
    ))
}

/// Parses the worker bound from the environment value.
pub fn parse_threads(value: Option<&str>) -> Result<Option<usize>> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// One point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub params: ModelParams,
    pub n: usize,
    pub amplitude: f64,
}

pub fn sweep_points(cfg: &RunConfig) -> Vec<SweepPoint> {
    let or = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
    let k1s = or(&cfg.sweep.k1, cfg.params.k1);
    let k2s = or(&cfg.sweep.k2, cfg.params.k2);
    let gammas = or(&cfg.sweep.gamma, cfg.params.gamma);
    let amps = or(&cfg.sweep.amplitude, 1.0);
    let ns = if cfg.sweep.n.is_empty() { vec![cfg.n] } else { cfg.sweep.n.clone() };
    let mut out = Vec::new();
    for &k1 in &k1s {
        for &k2 in &k2s {
            for &gamma in &gammas {
                for &n in &ns {
                    for &amplitude in &amps {
                        let params = ModelParams { k1, k2, gamma };
                        out.push(SweepPoint { index: out.len(), params, n, amplitude });
                    }
                }
            }
        }
    }
    out
}

struct SweepRow {
    point: SweepPoint,
    status: ExitStatus,
    termination: String,
    t_final: f64,
    detection: Option<f64>,
    min_bound: Option<f64>,
    error: Option<String>,
}

fn sweep_one(base: &RunConfig, p: &SweepPoint, root: &Path) -> SweepRow {
    let mut cfg = base.clone();
    cfg.params = p.params;
    cfg.n = p.n;
    let dir = root.join(format!("run_{:04}", p.index));
    let outcome = (|| -> Result<(ExitStatus, Summary)> {
        prepare_dir(&dir)?;
        let u0 = cfg.initial_field_with(p.n, p.amplitude)?;
        let run = integrate(&StateU { t: 0.0, u: u0.clone() }, cfg.t_end, &cfg.params, &cfg.control)?;
        write_diagnostics(&dir.join("diagnostics.csv"), &run.diagnostics)?;
        let (constants, assessments) = assessments(&u0, &cfg)?;
        let s = Summary {
            mode: Mode::Sweep.name().into(),
            n: Some(p.n),
            t_end: cfg.t_end,
            params: Some(cfg.params),
            run: Some(RunSummary::of(&run)),
            detection: Some(runtime_detector(&run.diagnostics, &detector(&cfg))?),
            constants,
            assessments,
            ..Default::default()
        };
        write_summary(&dir, &s)?;
        Ok((status_of(&run), s))
    })();
    match outcome {
        Ok((status, s)) => {
            let run = s.run.as_ref().expect("sweep runs integrate");
            SweepRow {
                point: p.clone(),
                status,
                termination: run.termination.to_string(),
                t_final: run.t_final,
                detection: s.detection.and_then(|d| d.gamma_crossing),
                min_bound: s.assessments.iter().filter_map(|a| a.t_star).reduce(f64::min),
                error: None,
            }
        }
        Err(e) => SweepRow {
            point: p.clone(),
            status: ExitStatus::of_error(&e),
            termination: "error".into(),
            t_final: f64::NAN,
            detection: None,
            min_bound: None,
            error: Some(e.to_string()),
        },
    }
}

fn sweep(cfg: &RunConfig, dir: &Path, threads: Option<usize>) -> Result<ExitStatus> {
    prepare_dir(dir)?;
    let points = sweep_points(cfg);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        use rayon::prelude::*;
        points.par_iter().map(|p| sweep_one(cfg, p, dir)).collect()
    });
    let mut w = csv_writer(&dir.join("sweep.csv"))?;
    let header = ["index", "k1", "k2", "gamma", "n", "amplitude", "termination", "t_final", "gamma_crossing", "min_t_star", "error"];
    csv_row(&mut w, &header.map(String::from))?;
    let mut status = ExitStatus::Success;
    for r in &rows {
        let p = &r.point;
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        csv_row(
            &mut w,
            &[
                p.index.to_string(),
                num(p.params.k1),
                num(p.params.k2),
                num(p.params.gamma),
                p.n.to_string(),
                num(p.amplitude),
                r.termination.clone(),
                num(r.t_final),
                opt(r.detection),
                opt(r.min_bound),
                r.error.clone().unwrap_or_default(),
            ],
        )?;
        status = status.worst(r.status);
    }
    csv_finish(w)?;
    Ok(status)
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Runs the acceptance suite, prints one line per criterion and writes the
/// report to `dir/verify.txt`.
pub fn verify(dir: Option<&Path>, tol: &Tolerances) -> Result<ExitStatus> {
    let outcomes = acceptance::run_all(tol);
    let mut report = String::new();
    for o in &outcomes {
        let line = o.line();
        println!("{line}");
        report.push_str(&line);
        report.push('\n');
    }
    if let Some(dir) = dir {
        prepare_dir(dir)?;
        write_text(&dir.join("verify.txt"), &report)?;
    }
    Ok(if outcomes.iter().all(|o| o.passed) { ExitStatus::Success } else { ExitStatus::VerifyFailed })
}

/// Loads, validates and runs one command; errors become exit statuses.
pub fn run(mode: Mode, config: &Path, overrides: &crate::config::Overrides) -> ExitStatus {
    let result = (|| -> Result<ExitStatus> {
        let mut cfg = RunConfig::load(config)?;
        cfg.apply(overrides);
        cfg.validate(mode)?;
        run_config(mode, &cfg, std::env::var(THREADS_ENV).ok().as_deref())
    })();
    match result {
        Ok(s) => s,
        Err(e) => {
            eprintln!("muchlab {}: {e}", mode.name());
            ExitStatus::of_error(&e)
        }
    }
}

/// Runs a validated configuration; `threads` is the raw worker-bound value.
pub fn run_config(mode: Mode, cfg: &RunConfig, threads: Option<&str>) -> Result<ExitStatus> {
    let dir: PathBuf = cfg.output.dir.clone();
    let (status, summary) = match mode {
        Mode::Simulate => {
            let (s, summary, _) = simulate(cfg, &dir, mode)?;
            (s, summary)
        }
        Mode::Characteristics => characteristics(cfg, &dir)?,
        Mode::Peakon => match peakon(cfg, &dir) {
            Ok(x) => x,
            Err(e @ Error::Config(_)) => return Err(e),
            Err(e) => {
                eprintln!("muchlab peakon: {e}");
                return Ok(ExitStatus::Numerical);
            }
        },
        Mode::BlowupCheck => blowup_check(cfg, &dir)?,
        Mode::Verify => return verify(Some(&dir), &Tolerances::default()),
        Mode::Sweep => {
            let threads = parse_threads(threads)?;
            return sweep(cfg, &dir, threads);
        }
    };
    write_summary(&dir, &summary)?;
    for a in summary.assessments.iter().filter(|a| a.t_star.is_some()) {
        let at = a.x0.map_or(String::new(), |x| format!(" at x0 = {}", num(x)));
        println!("{} t* = {}{at}", a.criterion.name(), num(a.t_star.unwrap_or(f64::NAN)));
    }
    if let Some(r) = &summary.run {
        println!("termination: {} at t = {}", r.termination, num(r.t_final));
    }
    Ok(status)
}
