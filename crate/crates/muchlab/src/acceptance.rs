//! Acceptance criteria with measured values, shared by `muchlab verify` and
//! the `acceptance` test target.

use crate::blowup::{
    breaking_constants, infimum_slope, infimum_slope_check, pointwise_slope_check, positive_momentum_check,
    runtime_detector, steepened_cosine_data, von_mises_data, BreakingConstants, DetectorThresholds,
};
use crate::characteristics::{exact_ux_mu0zero, trace_characteristic};
use crate::error::Result;
use crate::grid::{apply_ainv, deriv, mean, Field, PeriodicGrid, TWO_PI};
use crate::green::convolve_g;
use crate::model::{momentum, ModelParams, StateU};
use crate::peakons::{
    amplitude_for_speed, integrate_peakons, multipeakon_rhs, two_peakon_amplitudes, two_peakon_closed_form,
    two_peakon_p_residual, PeakonFormulation, PeakonSystem,
};
use crate::timestepper::{integrate, step_rk4, RunResult, StepControl, Termination};

/// Every tolerance the suite compares against.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerances {
    pub amplitude_rel: f64,
    pub peakon_speed: f64,
    pub two_peakon_p: f64,
    pub sum_p_drift: f64,
    pub mu0_drift: f64,
    pub mu1sq_rel: f64,
    pub h1_rel: f64,
    pub h2_rel: f64,
    pub characteristic_ux: f64,
    pub detection_factor: f64,
    pub lagrangian_rel: f64,
    pub constant_residual: f64,
    pub momentum_floor_rel: f64,
    pub slope_bound: f64,
    pub sup_bound: f64,
    pub min_datasets: usize,
    pub c2_exact: f64,
    pub refinement_rel: f64,
    pub kernel: f64,
    pub rk4_order: f64,
    pub dispersion: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            amplitude_rel: 1e-12,
            peakon_speed: 1e-12,
            two_peakon_p: 1e-6,
            sum_p_drift: 1e-12,
            mu0_drift: 1e-10,
            mu1sq_rel: 1e-6,
            h1_rel: 1e-6,
            h2_rel: 1e-5,
            characteristic_ux: 1e-3,
            detection_factor: 1.05,
            lagrangian_rel: 1e-4,
            constant_residual: 1e-13,
            momentum_floor_rel: 1e-6,
            slope_bound: 1e-8,
            sup_bound: 1e-8,
            min_datasets: 3,
            c2_exact: 1e-12,
            refinement_rel: 1e-6,
            kernel: 1e-10,
            rk4_order: 3.9,
            dispersion: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    /// Measured values against their tolerances.
    pub measured: String,
    /// Non-gating observations.
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn line(&self) -> String {
        let mut s = format!(
            "[{}] {:>2} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.measured
        );
        for n in &self.notes {
            s.push_str(" | ");
            s.push_str(n);
        }
        s
    }
}

pub const COUNT: u8 = 10;

pub fn run_all(tol: &Tolerances) -> Vec<Outcome> {
    (1..=COUNT).map(|id| run_criterion(id, tol)).collect()
}

pub fn run_criterion(id: u8, tol: &Tolerances) -> Outcome {
    let (title, body): (&'static str, fn(&Tolerances) -> Result<Check>) = match id {
        1 => ("peakon amplitude table", amplitude_table),
        2 => ("single peakon dynamics", single_peakon),
        3 => ("two-peakon closed form", two_peakon),
        4 => ("conservation suite", conservation),
        5 => ("mean-zero characteristic law", mean_zero_law),
        6 => ("Lagrangian identities", lagrangian),
        7 => ("positivity and bounds", positivity),
        8 => ("blow-up bound consistency", bound_consistency),
        9 => ("breaking constants", constants),
        10 => ("spectral kernel oracle", spectral),
        _ => ("unknown criterion", |_| Ok(Check::fail("no criterion with this id".into()))),
    };
    match body(tol) {
        Ok(c) => Outcome { id, title, passed: c.passed, measured: c.measured.join(", "), notes: c.notes },
        Err(e) => Outcome { id, title, passed: false, measured: format!("error: {e}"), notes: Vec::new() },
    }
}

/// Accumulates comparisons of one criterion.
struct Check {
    passed: bool,
    measured: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self { passed: true, measured: Vec::new(), notes: Vec::new() }
    }

    fn fail(msg: String) -> Self {
        Self { passed: false, measured: vec![msg], notes: Vec::new() }
    }

    /// Records `value <= limit`.
    fn at_most(&mut self, what: &str, value: f64, limit: f64) {
        let ok = value <= limit;
        self.passed &= ok;
        self.measured.push(format!("{what} {value:.3e} (<= {limit:e}){}", if ok { "" } else { " FAILED" }));
    }

    fn at_least(&mut self, what: &str, value: f64, limit: f64) {
        let ok = value >= limit;
        self.passed &= ok;
        self.measured.push(format!("{what} {value:.4} (>= {limit}){}", if ok { "" } else { " FAILED" }));
    }

    fn holds(&mut self, what: &str, ok: bool, detail: String) {
        self.passed &= ok;
        self.measured.push(format!("{what}: {detail}{}", if ok { "" } else { " FAILED" }));
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }
}

fn params(k1: f64, k2: f64) -> ModelParams {
    ModelParams { k1, k2, gamma: 0.0 }
}

fn run(u0: Field, t_end: f64, par: &ModelParams, control: &StepControl) -> Result<RunResult> {
    integrate(&StateU { t: 0.0, u: u0 }, t_end, par, control)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn amplitude_table(tol: &Tolerances) -> Result<Check> {
    let cases: [(f64, f64, f64, Vec<f64>, bool); 4] = [
        (0.0, 1.0, 1.0, vec![12.0 / 13.0], false),
        (1.0, 0.0, 1.0, vec![2.0 * 3f64.sqrt() / 5.0, -2.0 * 3f64.sqrt() / 5.0], false),
        (1.0, 1.0, 1.0, vec![0.48, -1.0], false),
        (1.0, 1.0, -169.0 / 1200.0, vec![-0.26], true),
    ];
    let mut c = Check::new();
    let mut worst = 0.0f64;
    let mut shape = true;
    for (k1, k2, speed, expect, degenerate) in cases {
        let sol = amplitude_for_speed(speed, &params(k1, k2))?;
        shape &= sol.roots.len() == expect.len() && sol.degenerate == degenerate;
        for (a, e) in sol.roots.iter().zip(&expect) {
            worst = worst.max(rel(*a, *e));
        }
    }
    c.holds("root counts and double-root flag", shape, if shape { "as expected".into() } else { "mismatch".into() });
    c.at_most("max rel err", worst, tol.amplitude_rel);
    Ok(c)
}

fn single_peakon(tol: &Tolerances) -> Result<Check> {
    let mut c = Check::new();
    let (mut dp_max, mut dq_err, mut disp_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut systems = 0;
    let mut wrap = 0.0f64;
    for &k1 in &[0.0, 0.5, 1.0] {
        for &k2 in &[0.0, 0.5, 1.0] {
            if k1 == 0.0 && k2 == 0.0 {
                continue;
            }
            let par = params(k1, k2);
            for &speed in &[0.5, 1.0] {
                for a in amplitude_for_speed(speed, &par)?.roots {
                    let sys = PeakonSystem::new(vec![a], vec![0.3])?;
                    let tr = integrate_peakons(&sys, 1.0, &par, &StepControl::default(), PeakonFormulation::Reconciled)?;
                    for s in &tr.samples {
                        dp_max = dp_max.max((s.p[0] - a).abs());
                        let (dp, dq) = multipeakon_rhs(&PeakonSystem::new(s.p.clone(), s.q.clone())?, &par)?;
                        dp_max = dp_max.max(dp[0].abs());
                        dq_err = dq_err.max((dq[0] - speed).abs());
                    }
                    let last = tr.last();
                    disp_err = disp_err.max(((last.q_unwrapped[0] - 0.3) / last.t - speed).abs());
                    if speed == 1.0 {
                        wrap = wrap.max((last.q[0] - 0.3).abs());
                    }
                    systems += 1;
                }
            }
        }
    }
    c.holds("p_dot and p drift", dp_max == 0.0, format!("{dp_max:e} over {systems} systems (exact 0)"));
    c.at_most("max |q_dot - c|", dq_err, tol.peakon_speed);
    c.at_most("max |mean speed - c|", disp_err, tol.peakon_speed);
    c.note(format!("|q(1) - 0.3| at c = 1: {wrap:.1e}"));
    Ok(c)
}

fn two_peakon(tol: &Tolerances) -> Result<Check> {
    let par = params(0.0, 1.0);
    let (a, a1, c1) = (0.75, 0.3, 0.1);
    let b = par.k2 * a * (a - 0.5);
    let start = two_peakon_closed_form(a, a1, b, 0.0, c1, 0.0, &par)?;
    let tr = integrate_peakons(&start, 10.0, &par, &StepControl::default(), PeakonFormulation::Reconciled)?;
    let mut c = Check::new();
    let (mut p_err, mut drift) = (0.0f64, 0.0f64);
    for s in &tr.samples {
        p_err = p_err.max((s.p[0] - two_peakon_amplitudes(a, b, 0.0, s.t).0).abs());
        drift = drift.max((s.sum_p - a).abs());
    }
    c.at_most("max |p1 - closed form| on [0,10]", p_err, tol.two_peakon_p);
    c.at_most("sum p drift", drift, tol.sum_p_drift);
    let residual = (0..=100)
        .map(|i| two_peakon_p_residual(a, a1, b, 0.0, c1, 0.1 * i as f64, &par).map(f64::abs))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    let sep = |s: &crate::peakons::PeakonSample| (s.q_unwrapped[1] - s.q_unwrapped[0]).rem_euclid(1.0);
    c.note(format!("amplitude equations on the closed-form state: residual {residual:.1e}"));
    c.note(format!("q2-q1 moves from {:.4} to {:.4} by t=10", sep(&tr.samples[0]), sep(tr.last())));
    Ok(c)
}

fn conservation_run(control: &StepControl) -> Result<RunResult> {
    let g = PeriodicGrid::new(256)?;
    let u0 = g.sample(|x| 0.5 + 0.1 * (TWO_PI * x).sin())?;
    run(u0, 1.0, &params(1.0, 1.0), control)
}

/// Step control for runs whose snapshots feed characteristic traces.
fn trace_control() -> StepControl {
    StepControl { abs_tol: 1e-11, rel_tol: 1e-11, ..StepControl::default() }
}

fn conservation(tol: &Tolerances) -> Result<Check> {
    let r = conservation_run(&StepControl::default())?;
    let d0 = &r.diagnostics[0];
    let mut worst = [0.0f64; 5];
    let mut first_h2 = None;
    for d in &r.diagnostics {
        let h2 = rel(d.h2_printed, d0.h2_printed);
        worst[0] = worst[0].max((d.mu0 - d0.mu0).abs());
        worst[1] = worst[1].max(rel(d.mu1sq, d0.mu1sq));
        worst[2] = worst[2].max(rel(d.h1, d0.h1));
        worst[3] = worst[3].max(h2);
        worst[4] = worst[4].max(rel(d.h2_invariant, d0.h2_invariant));
        if first_h2.is_none() && h2 > tol.h2_rel {
            first_h2 = Some(d.t);
        }
    }
    let mut c = Check::new();
    c.at_most("|d mu0|", worst[0], tol.mu0_drift);
    c.at_most("|d mu1^2|/mu1^2", worst[1], tol.mu1sq_rel);
    c.at_most("|d H1|/H1", worst[2], tol.h1_rel);
    c.at_most("|d H2_printed|/H2", worst[3], tol.h2_rel);
    let min_gamma = r.diagnostics.iter().map(|d| d.min_gamma).fold(f64::INFINITY, f64::min);
    c.note(format!("termination {} at t={}, min Gamma {min_gamma:.1}", r.termination.name(), r.final_state.t));
    c.note(format!("H2_invariant rel drift {:.1e}", worst[4]));
    if let Some(t) = first_h2 {
        c.note(format!("H2_printed leaves tolerance at t={t:.4}"));
    }
    Ok(c)
}

fn mean_zero_law(tol: &Tolerances) -> Result<Check> {
    let par = params(1.0, 1.0);
    let g = PeriodicGrid::new(512)?;
    let u0 = g.sample(|x| (TWO_PI * x).sin() / TWO_PI)?;
    let mu1 = 0.5f64.sqrt();
    let t_star = crate::blowup::mean_zero_check(&u0, &par, 0.5)?
        .t_star
        .ok_or_else(|| crate::error::Error::InvalidParams("mean-zero bound unavailable".into()))?;
    let r = run(u0, tol.detection_factor * t_star, &par, &trace_control())?;
    let tr = trace_characteristic(&r, 0.25, &par)?;
    let mut err = 0.0f64;
    let mut early = 0.0f64;
    let mut first_bad = None;
    let mut covered = 0.0f64;
    for s in tr.samples.iter().filter(|s| s.t <= 1.2) {
        let e = (s.ux - exact_ux_mu0zero(s.t, 0.0, mu1, par.k2)?).abs();
        if first_bad.is_none() && e > tol.characteristic_ux {
            first_bad = Some(s.t);
        }
        err = err.max(e);
        if s.t <= 0.12 {
            early = early.max(e);
        }
        covered = s.t;
    }
    let mut c = Check::new();
    c.holds("trace reaches t=1.2", covered >= 1.2, format!("trace ends at t={covered:.4}"));
    c.at_most("max |u_x - law| for t<=1.2", err, tol.characteristic_ux);
    let detect = runtime_detector(&r.diagnostics, &DetectorThresholds::default())?.gamma_crossing;
    let limit = tol.detection_factor * t_star;
    c.holds(
        "Gamma guard before 1.05 t*",
        detect.is_some_and(|t| t <= limit),
        format!("fires at {} vs {limit:.5} (t* {t_star:.7})", detect.map_or("never".into(), |t| format!("{t:.4}"))),
    );
    c.note(format!("max |u_x - law| for t<=0.12: {early:.1e}"));
    if let Some(t) = first_bad {
        c.note(format!("u_x leaves the law at t={t:.4}"));
    }
    Ok(c)
}

fn lagrangian(tol: &Tolerances) -> Result<Check> {
    let par = params(1.0, 1.0);
    let r = conservation_run(&trace_control())?;
    let m0 = momentum(&r.snapshots[0].u).sup_norm();
    let (mut worst, mut min_qx, mut truncated) = (0.0f64, f64::INFINITY, false);
    let mut first_bad = f64::INFINITY;
    for j in 0..8 {
        let tr = trace_characteristic(&r, j as f64 / 8.0, &par)?;
        worst = worst.max(tr.max_abs_residual() / m0);
        min_qx = min_qx.min(tr.min_qx());
        truncated |= tr.truncated;
        if let Some(s) = tr.samples.iter().find(|s| s.residual.abs() / m0 > tol.lagrangian_rel) {
            first_bad = first_bad.min(s.t);
        }
    }
    let mut c = Check::new();
    c.at_most("smooth run |R|/|m0|", worst, tol.lagrangian_rel);
    c.holds("q_x > 0 on full traces", min_qx > 0.0 && !truncated, format!("min q_x {min_qx:.3e}, truncated {truncated}"));
    let g = PeriodicGrid::new(64)?;
    let flat = run(Field::constant(&g, 0.5)?, 1.0, &par, &StepControl::default())?;
    let (mut res, mut qx) = (0.0f64, 0.0f64);
    for j in 0..8 {
        let tr = trace_characteristic(&flat, j as f64 / 8.0, &par)?;
        res = res.max(tr.max_abs_residual());
        qx = qx.max(tr.samples.iter().map(|s| (s.q_x - 1.0).abs()).fold(0.0, f64::max));
    }
    c.at_most("constant run |R|", res, tol.constant_residual);
    c.at_most("constant run |q_x - 1|", qx, tol.constant_residual);
    if first_bad.is_finite() {
        c.note(format!("smooth-run residual leaves tolerance at t={first_bad:.4}"));
    }
    Ok(c)
}

fn positivity(tol: &Tolerances) -> Result<Check> {
    let par = params(1.0, 1.0);
    let g = PeriodicGrid::new(256)?;
    let u0 = apply_ainv(&g.sample(|x| 1.0 + 0.5 * (TWO_PI * x).cos())?);
    let m0 = momentum(&u0).sup_norm();
    let r = run(u0, 1.0, &par, &StepControl::default())?;
    let (mut m_floor, mut slope, mut sup) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for s in &r.snapshots {
        let ux = deriv(&s.u, 1)?;
        m_floor = m_floor.min(momentum(&s.u).min());
        let mu0 = mean(&s.u);
        let mu1 = (ux.values().iter().map(|v| v * v).sum::<f64>() / ux.len() as f64).sqrt();
        for (u, d) in s.u.values().iter().zip(ux.values()) {
            slope = slope.max(d.abs() - u);
            sup = sup.max((u - mu0).abs() - 3f64.sqrt() / 6.0 * mu1);
        }
    }
    let mut c = Check::new();
    c.holds(
        "run reaches t=1",
        r.termination == Termination::ReachedTEnd,
        r.termination.name().into(),
    );
    c.at_most("-min m / |m0|", -m_floor / m0, tol.momentum_floor_rel);
    c.at_most("max(|u_x| - u)", slope, tol.slope_bound);
    c.at_most("max(|u - mu0| - sqrt3/6 mu1)", sup, tol.sup_bound);
    Ok(c)
}

/// Datasets of the large-amplitude von Mises family used for the bound
/// comparison: `(k1, k2, amplitude)` with `kappa = 20`, floor `0.01`.
pub const BOUND_DATASETS: [(f64, f64, f64); 9] = [
    (1.0, 1.0, 4.0),
    (1.0, 1.0, 6.0),
    (1.0, 1.0, 8.0),
    (2.0, 1.0, 4.0),
    (2.0, 1.0, 6.0),
    (2.0, 1.0, 8.0),
    (1.0, 0.5, 4.0),
    (1.0, 0.5, 6.0),
    (1.0, 0.5, 8.0),
];

/// Scans the steepened-cosine construction for the positive-momentum
/// case (2); returns the number of hits.
pub fn steepened_cosine_hits(n: usize) -> Result<usize> {
    let g = PeriodicGrid::new(n)?;
    let mut hits = 0;
    for &(k1, k2) in &[(1.0, 0.5), (1.0, 0.25), (2.0, 1.0), (1.0, 1.0)] {
        for i in 0..=40 {
            let u = steepened_cosine_data(&g, i as f64 * 1e-3)?;
            let x = infimum_slope(&u)?.0;
            if positive_momentum_check(&u, &params(k1, k2), x)?.case == Some(2) {
                hits += 1;
            }
        }
    }
    Ok(hits)
}

/// A positive-momentum case (2) hit in the von Mises family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaseTwoHit {
    pub k1: f64,
    pub k2: f64,
    pub kappa: f64,
    pub amplitude: f64,
    pub floor: f64,
    pub t_star: f64,
}

pub fn von_mises_case_two(n: usize) -> Result<Vec<CaseTwoHit>> {
    let g = PeriodicGrid::new(n)?;
    let mut out = Vec::new();
    for &(k1, k2) in &[(1.0, 0.5), (1.0, 1.0), (1.0, 0.25), (2.0, 1.0)] {
        for &kappa in &[10.0, 20.0] {
            for &amp in &[0.5, 1.0, 2.0] {
                let u = von_mises_data(&g, 0.01, amp, kappa, 0.5)?;
                let x = infimum_slope(&u)?.0;
                let a = positive_momentum_check(&u, &params(k1, k2), x)?;
                if let (Some(2), Some(t)) = (a.case, a.t_star) {
                    out.push(CaseTwoHit { k1, k2, kappa, amplitude: amp, floor: 0.01, t_star: t });
                }
            }
        }
    }
    Ok(out)
}

fn bound_consistency(tol: &Tolerances) -> Result<Check> {
    let g = PeriodicGrid::new(512)?;
    let mut c = Check::new();
    let mut used = 0usize;
    let mut worst_ratio = 0.0f64;
    let mut all_fire = true;
    for &(k1, k2, amp) in &BOUND_DATASETS {
        let par = params(k1, k2);
        let u0 = von_mises_data(&g, 0.01, amp, 20.0, 0.5)?;
        let x = infimum_slope(&u0)?.0;
        let bounds: Vec<f64> = [infimum_slope_check(&u0, &par)?, pointwise_slope_check(&u0, &par, x)?]
            .iter()
            .filter(|a| a.hypotheses_met())
            .filter_map(|a| a.t_star)
            .collect();
        let Some(bound) = bounds.iter().copied().reduce(f64::min) else { continue };
        used += 1;
        let r = run(u0, tol.detection_factor * bound, &par, &StepControl::default())?;
        match runtime_detector(&r.diagnostics, &DetectorThresholds::default())?.gamma_crossing {
            Some(t) => worst_ratio = worst_ratio.max(t / bound),
            None => all_fire = false,
        }
    }
    c.at_least("datasets passing a bound check", used as f64, tol.min_datasets as f64);
    c.holds("detector fires on every dataset", all_fire, format!("{used} runs"));
    c.at_most("max t_detect / bound", worst_ratio, tol.detection_factor);
    c.note(format!("steepened-cosine case (2) hits: {}", steepened_cosine_hits(256)?));
    c.note(format!("von Mises case (2) hits: {}", von_mises_case_two(256)?.len()));
    // moderate amplitude: the discrete Gamma saturates below the threshold at n <= 512
    let par = params(2.0, 1.0);
    let u0 = von_mises_data(&g, 0.01, 2.0, 20.0, 0.5)?;
    let x = infimum_slope(&u0)?.0;
    if let Some(b) = pointwise_slope_check(&u0, &par, x)?.t_star {
        let r = run(u0, tol.detection_factor * b, &par, &StepControl::default())?;
        let min_gamma = r.diagnostics.iter().map(|d| d.min_gamma).fold(f64::INFINITY, f64::min);
        c.note(format!("amplitude 2, (k1,k2)=(2,1) at n=512: bound {b:.4}, min Gamma {min_gamma:.0}, not gating"));
    }
    Ok(c)
}

fn constants_close(a: &BreakingConstants, b: &BreakingConstants) -> f64 {
    let pairs = [
        (a.mu0, b.mu0),
        (a.mu1, b.mu1),
        (a.c1, b.c1),
        (a.c2, b.c2),
        (a.c2_tilde_case3, b.c2_tilde_case3),
        (a.c2_tilde_case4, b.c2_tilde_case4),
        (a.k_radicand, b.k_radicand),
    ];
    pairs
        .iter()
        .map(|&(x, y)| {
            let scale = x.abs().max(y.abs());
            // zero to round-off on both grids
            if scale < 1e-14 {
                0.0
            } else {
                (x - y).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

fn constants(tol: &Tolerances) -> Result<Check> {
    let mut c = Check::new();
    let mut c2_err = 0.0f64;
    let g = PeriodicGrid::new(256)?;
    let mean_zero: [&dyn Fn(f64) -> f64; 3] = [
        &|x| (TWO_PI * x).sin() / TWO_PI,
        &|x| 0.3 * (TWO_PI * x).sin() + 0.1 * (3.0 * TWO_PI * x).cos() - 0.05 * (5.0 * TWO_PI * x).sin(),
        &|x| 0.02 * (7.0 * TWO_PI * x + 0.4).cos() - 0.2 * (2.0 * TWO_PI * x).sin(),
    ];
    for f in mean_zero {
        let u = g.sample(f)?;
        for &(k1, k2) in &[(1.0, 1.0), (2.0, 0.5), (0.5, 3.0)] {
            let b = breaking_constants(&u, &params(k1, k2))?;
            c2_err = c2_err.max((b.c2 + 0.5 * k2 * b.mu1 * b.mu1).abs());
        }
    }
    c.at_most("max |C2 + k2 mu1^2/2| on mean-zero data", c2_err, tol.c2_exact);
    type Make<'a> = &'a dyn Fn(&PeriodicGrid) -> Result<Field>;
    let data: [Make; 4] = [
        &|g| g.sample(|x| (TWO_PI * x).sin() / TWO_PI),
        &|g| g.sample(|x| 0.5 + 0.1 * (TWO_PI * x).sin()),
        &|g| Ok(apply_ainv(&g.sample(|x| 1.0 + 0.5 * (TWO_PI * x).cos())?)),
        &|g| von_mises_data(g, 0.01, 4.0, 20.0, 0.5),
    ];
    let (coarse, fine) = (PeriodicGrid::new(256)?, PeriodicGrid::new(512)?);
    let mut refine = 0.0f64;
    for make in data {
        for &(k1, k2) in &[(1.0, 1.0), (2.0, 0.5)] {
            let par = params(k1, k2);
            let a = breaking_constants(&make(&coarse)?, &par)?;
            let b = breaking_constants(&make(&fine)?, &par)?;
            refine = refine.max(constants_close(&a, &b));
        }
    }
    c.at_most("max rel change n=256 -> 512", refine, tol.refinement_rel);
    Ok(c)
}

fn spectral(tol: &Tolerances) -> Result<Check> {
    let mut c = Check::new();
    let g = PeriodicGrid::new(256)?;
    // modes k < 40 with amplitudes c_k / k; A^-1 divides mode k by (2 pi k)^2
    let series = |x: f64, power: i32| {
        0.7 + (1..40)
            .map(|k| {
                let k = k as f64;
                let w = TWO_PI * k;
                ((0.37 * k).sin() * (w * x).cos() + (1.3 * k).cos() * (w * x).sin()) / k / w.powi(power)
            })
            .sum::<f64>()
    };
    let f = g.sample(|x| series(x, 0))?;
    let exact = g.sample(|x| series(x, 2))?;
    c.at_most("|A^-1 f - exact|", apply_ainv(&f).sup_distance(&exact), tol.kernel);
    c.at_most("|g * f - exact|", convolve_g(&f).sup_distance(&exact), tol.kernel);

    let par = params(1.0, 1.0);
    let g64 = PeriodicGrid::new(64)?;
    let u0 = StateU { t: 0.0, u: g64.sample(|x| 0.5 + 0.1 * (TWO_PI * x).sin())? };
    let t = 0.05;
    let solve = |steps: usize| -> Result<Field> {
        let mut s = u0.clone();
        for _ in 0..steps {
            s = step_rk4(&s, t / steps as f64, &par)?;
        }
        Ok(s.u)
    };
    let reference = solve(1280)?;
    let errs = [5usize, 10, 20, 40]
        .iter()
        .map(|&n| solve(n).map(|u| u.sup_distance(&reference)))
        .collect::<Result<Vec<_>>>()?;
    let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
    c.at_least("RK4 observed order", order, tol.rk4_order);

    let lin = ModelParams { k1: 0.0, k2: 0.0, gamma: 1.0 };
    let wave = |x: f64, t: f64| {
        0.3 + (TWO_PI * x - t / TWO_PI).cos() + 0.5 * (3.0 * TWO_PI * x - t / (3.0 * TWO_PI)).sin()
    };
    let tight = StepControl { abs_tol: 1e-13, rel_tol: 1e-13, ..StepControl::default() };
    let r = run(g64.sample(|x| wave(x, 0.0))?, 1.0, &lin, &tight)?;
    let exact = g64.sample(|x| wave(x, 1.0))?;
    c.at_most("linear dispersion error at t=1", r.final_state.u.sup_distance(&exact), tol.dispersion);
    Ok(c)
}
