//! Wave-breaking constants, hypothesis checks with blow-up time bounds, and
//! threshold detectors on a diagnostics stream.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{apply_ainv, deriv, mean, Field, Interpolant, PeriodicGrid, TWO_PI};
use crate::model::{momentum, DiagnosticsSample, ModelParams};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Tolerance for the equality branch of the positive-momentum bound.
pub const EQUALITY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BreakingConstants {
    pub mu0: f64,
    pub mu1: f64,
    pub c1: f64,
    pub c2: f64,
    pub c2_tilde_case3: f64,
    pub c2_tilde_case4: f64,
    pub k_radicand: f64,
    /// `None` when the radicand is negative.
    pub k: Option<f64>,
}

impl BreakingConstants {
    /// Evaluates every constant from `(mu0, mu1)`.
    pub fn from_moments(mu0: f64, mu1: f64, params: &ModelParams) -> Self {
        let (k1, k2) = (params.k1, params.k2);
        let c1 = 1.5 * k2 - k1 * mu0;
        let c2 = k1 * mu0 * mu1 * (SQRT3 / 3.0 * mu0 - mu1) + k2 * mu1 * (SQRT3 / 3.0 * mu0 - 0.5 * mu1);
        let c2_tilde_case3 = (3.0 * k2 - 2.0 * mu0 * k1) * mu0 * mu0 + 5.0 * SQRT3 / 3.0 * k2 * mu0 * mu1
            - (9.0 * k2 + 26.0 * k1 * mu0) * mu1 * mu1 / 12.0;
        let c2_tilde_case4 = (3.0 * k2 - 2.0 * mu0 * k1) * (mu0 + SQRT3 / 6.0 * mu1).powi(2);
        let k_radicand = (2.0 * k1 * mu0 * mu1 * (SQRT3 * mu0 - 3.0 * mu1) + k2 * mu1 * (2.0 * SQRT3 * mu0 - 3.0 * mu1))
            / (3.0 * k2 + 6.0 * mu0 * k1);
        let k = if k_radicand >= 0.0 { Some(k_radicand.sqrt()) } else { None };
        Self { mu0, mu1, c1, c2, c2_tilde_case3, c2_tilde_case4, k_radicand, k }
    }
}

/// `mu0 = int u`, `mu1 = (int u_x^2)^(1/2)` by grid quadrature.
pub fn breaking_constants(u0: &Field, params: &ModelParams) -> Result<BreakingConstants> {
    if params.gamma != 0.0 {
        return Err(Error::InvalidParams(format!("breaking constants need gamma = 0, got {}", params.gamma)));
    }
    let ux = deriv(u0, 1)?;
    let mu1 = ux.values().iter().map(|v| v * v).sum::<f64>() / ux.len() as f64;
    Ok(BreakingConstants::from_moments(mean(u0), mu1.sqrt(), params))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    /// Mean-zero data: exact slope law along a characteristic.
    MeanZero,
    /// `C1 <= 0 < C2`, nonnegative momentum, slope threshold at a point.
    PositiveMomentum,
    /// Positive momentum and the slope infimum below `-K`.
    InfimumSlope,
    /// Pointwise slope condition with blow-up rate.
    PointwiseSlope,
    /// `C1 <= 0`, `C2 <= 0`: blow-up by a differential inequality, no time bound.
    DifferentialInequality,
}

impl Criterion {
    pub fn name(&self) -> &'static str {
        match self {
            Criterion::MeanZero => "mean-zero",
            Criterion::PositiveMomentum => "positive-momentum",
            Criterion::InfimumSlope => "infimum-slope",
            Criterion::PointwiseSlope => "pointwise-slope",
            Criterion::DifferentialInequality => "differential-inequality",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: &'static str,
    pub met: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupAssessment {
    pub criterion: Criterion,
    pub hypotheses: Vec<Hypothesis>,
    pub t_star: Option<f64>,
    pub x0: Option<f64>,
    pub rate_constant: Option<f64>,
    /// Which branch of a multi-case bound applied.
    pub case: Option<u8>,
    pub note: Option<String>,
}

impl BlowupAssessment {
    fn new(criterion: Criterion, x0: Option<f64>) -> Self {
        Self { criterion, hypotheses: Vec::new(), t_star: None, x0, rate_constant: None, case: None, note: None }
    }

    /// Records a hypothesis; returns whether it holds.
    fn require(&mut self, name: &'static str, met: bool, detail: String) -> bool {
        self.hypotheses.push(Hypothesis { name, met, detail });
        met
    }

    pub fn hypotheses_met(&self) -> bool {
        self.hypotheses.iter().all(|h| h.met)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.hypotheses.iter().filter(|h| !h.met).map(|h| h.name).collect()
    }
}

fn positive_coefficients(a: &mut BlowupAssessment, params: &ModelParams) -> bool {
    a.require("k1 > 0", params.k1 > 0.0, format!("k1 = {}", params.k1))
        & a.require("k2 > 0", params.k2 > 0.0, format!("k2 = {}", params.k2))
}

/// Point values of the initial data used by the pointwise bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointInputs {
    pub k1: f64,
    pub k2: f64,
    pub c1: f64,
    pub c2: f64,
    /// `m0(x0)`.
    pub m0: f64,
    /// `u0_x(x0)`.
    pub u0x: f64,
}

fn point_inputs(u0: &Field, params: &ModelParams, x0: f64) -> Result<(PointInputs, BreakingConstants, Field)> {
    let c = breaking_constants(u0, params)?;
    let m = momentum(u0);
    let m0 = Interpolant::new(&m).eval(x0).value;
    let u0x = Interpolant::new(u0).eval(x0).dx;
    Ok((PointInputs { k1: params.k1, k2: params.k2, c1: c.c1, c2: c.c2, m0, u0x }, c, m))
}

/// Mean-zero slope law: `t* = -2 atan(mu1 / u0x(x0)) / (mu1 k2)` when
/// `u0x(x0) < 0`.
pub fn mean_zero_check(u0: &Field, params: &ModelParams, x0: f64) -> Result<BlowupAssessment> {
    let c = breaking_constants(u0, params)?;
    let u0x = Interpolant::new(u0).eval(x0).dx;
    // slopes at round-off level count as zero
    let zero = 1e-12 * deriv(u0, 1)?.sup_norm();
    let mut a = BlowupAssessment::new(Criterion::MeanZero, Some(x0));
    let mut ok = positive_coefficients(&mut a, params);
    ok &= a.require("mean zero", c.mu0.abs() < 1e-12, format!("mu0 = {:e}", c.mu0));
    ok &= a.require("nonzero data", u0.sup_norm() > 0.0, format!("sup |u0| = {:e}", u0.sup_norm()));
    ok &= a.require("negative slope", u0x < -zero, format!("u0_x(x0) = {u0x}"));
    if ok {
        a.t_star = Some(-2.0 * (c.mu1 / u0x).atan() / (c.mu1 * params.k2));
    }
    Ok(a)
}

/// Bound for `C1 <= 0 < C2` from point values; the two branches are the
/// threshold slope (case 1) and steeper slopes (case 2).
pub fn positive_momentum_bound(p: &PointInputs, x0: Option<f64>) -> BlowupAssessment {
    let mut a = BlowupAssessment::new(Criterion::PositiveMomentum, x0);
    let mut ok = a.require("k1 > 0", p.k1 > 0.0, format!("k1 = {}", p.k1));
    ok &= a.require("k2 > 0", p.k2 > 0.0, format!("k2 = {}", p.k2));
    ok &= a.require("C1 <= 0", p.c1 <= 0.0, format!("C1 = {}", p.c1));
    ok &= a.require("C2 > 0", p.c2 > 0.0, format!("C2 = {}", p.c2));
    ok &= a.require("m0(x0) > 0", p.m0 > 0.0, format!("m0(x0) = {}", p.m0));
    if !ok {
        return a;
    }
    let (k1, k2, m0, u0x) = (p.k1, p.k2, p.m0, p.u0x);
    let b = (1.0 / (2.0 * k2 * p.c2)).sqrt();
    let edge = -1.0 / (2.0 * b * k2);
    if (u0x - edge).abs() <= EQUALITY_TOL {
        a.require("slope at threshold", true, format!("u0_x(x0) = {u0x}, threshold {edge}"));
        a.case = Some(1);
        a.t_star = Some(b * (k2 / (k1 * m0) + 1.0).ln());
        return a;
    }
    let second = -(k2 + 2.0 * k1 * m0).sqrt() / (2.0 * b * k2.sqrt() * (k1 * m0 + k2));
    let steep = edge.min(second);
    if !a.require("slope below both thresholds", u0x < steep, format!("u0_x(x0) = {u0x}, needs < {steep}")) {
        return a;
    }
    let r = k1 / k2;
    let n0 = 1.0 / m0;
    let nt = 2.0 * b * (k1 + k2 / m0) * u0x;
    let rad = nt * nt - n0 * n0 - 2.0 * r * n0;
    if !a.require("radicand positive", rad > 0.0, format!("radicand = {rad}")) {
        return a;
    }
    let t = b * ((r - rad.sqrt()) / (n0 + nt + r)).ln();
    a.case = Some(2);
    if a.require("positive bound", t > 0.0 && t.is_finite(), format!("t* = {t}")) {
        a.t_star = Some(t);
    }
    a
}

/// Gates on the field (`m0 >= 0` on the grid) then evaluates
/// [`positive_momentum_bound`] at `x0`.
pub fn positive_momentum_check(u0: &Field, params: &ModelParams, x0: f64) -> Result<BlowupAssessment> {
    let (p, _, m) = point_inputs(u0, params, x0)?;
    let mut a = positive_momentum_bound(&p, Some(x0));
    a.hypotheses.insert(
        0,
        Hypothesis { name: "m0 >= 0", met: m.min() >= 0.0, detail: format!("min m0 = {}", m.min()) },
    );
    if !a.hypotheses_met() {
        a.t_star = None;
        a.case = None;
    }
    Ok(a)
}

/// Infimum of `u0_x`: grid minimum refined by golden-section search on the
/// trigonometric interpolant.
pub fn infimum_slope(u0: &Field) -> Result<(f64, f64)> {
    let ux = deriv(u0, 1)?;
    let j = ux.argmin();
    let g = u0.grid();
    let h = g.spacing();
    let interp = Interpolant::new(u0);
    let f = |x: f64| interp.eval(x).dx;
    let (mut lo, mut hi) = (g.node(j) - h, g.node(j) + h);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let (x, v) = if f1 < f2 { (x1, f1) } else { (x2, f2) };
    let node = ux.values()[j];
    if node <= v {
        Ok((g.node(j), node))
    } else {
        Ok((x - x.floor(), v))
    }
}

/// `T* <= -4 / ((k2 + 2 k1 mu0)(inf + sqrt(-K inf)))` with `inf < -K`.
pub fn infimum_slope_bound(
    params: &ModelParams,
    constants: &BreakingConstants,
    min_m0: f64,
    inf_u0x: f64,
) -> BlowupAssessment {
    let mut a = BlowupAssessment::new(Criterion::InfimumSlope, None);
    let mut ok = positive_coefficients(&mut a, params);
    ok &= a.require("m0 > 0", min_m0 > 0.0, format!("min m0 = {min_m0}"));
    ok &= a.require("C2 > 0", constants.c2 > 0.0, format!("C2 = {}", constants.c2));
    let k = match constants.k {
        Some(k) => k,
        None => {
            a.require("K defined", false, format!("K radicand = {}", constants.k_radicand));
            return a;
        }
    };
    ok &= a.require("inf u0_x < -K", inf_u0x < -k, format!("inf u0_x = {inf_u0x}, K = {k}"));
    if ok {
        let den = (params.k2 + 2.0 * params.k1 * constants.mu0) * (inf_u0x + (-k * inf_u0x).sqrt());
        let t = -4.0 / den;
        if a.require("positive bound", t > 0.0 && t.is_finite(), format!("T* = {t}")) {
            a.t_star = Some(t);
        }
    }
    a
}

pub fn infimum_slope_check(u0: &Field, params: &ModelParams) -> Result<BlowupAssessment> {
    let c = breaking_constants(u0, params)?;
    let (x, inf) = infimum_slope(u0)?;
    let mut a = infimum_slope_bound(params, &c, momentum(u0).min(), inf);
    a.x0 = Some(x);
    Ok(a)
}

/// Pointwise bound with `u0_x(x0) < -sqrt(C2 (k1 m0 + k2)) / (k1 m0)` (strict).
pub fn pointwise_slope_bound(p: &PointInputs, x0: Option<f64>) -> BlowupAssessment {
    let mut a = BlowupAssessment::new(Criterion::PointwiseSlope, x0);
    let mut ok = a.require("k1 > 0", p.k1 > 0.0, format!("k1 = {}", p.k1));
    ok &= a.require("k2 > 0", p.k2 > 0.0, format!("k2 = {}", p.k2));
    ok &= a.require("C2 > 0", p.c2 > 0.0, format!("C2 = {}", p.c2));
    ok &= a.require("m0(x0) > 0", p.m0 > 0.0, format!("m0(x0) = {}", p.m0));
    if !ok {
        return a;
    }
    let w = p.k1 * p.m0 + p.k2;
    let edge = -(p.c2 * w).sqrt() / (p.k1 * p.m0);
    if !a.require("slope below threshold", p.u0x < edge, format!("u0_x(x0) = {}, needs < {edge}", p.u0x)) {
        return a;
    }
    let s = p.k1 * p.m0 * p.u0x / (p.c2 * w);
    let t = -s - (s * s - 1.0 / (p.c2 * w)).sqrt();
    if a.require("positive bound", t > 0.0 && t.is_finite(), format!("t* = {t}")) {
        a.t_star = Some(t);
        a.rate_constant = Some(-1.0 / (2.0 * p.k1));
    }
    a
}

pub fn pointwise_slope_check(u0: &Field, params: &ModelParams, x0: f64) -> Result<BlowupAssessment> {
    let (p, _, _) = point_inputs(u0, params, x0)?;
    Ok(pointwise_slope_bound(&p, Some(x0)))
}

/// Flags `C1 <= 0`, `C2 <= 0`, where blow-up follows without a printed bound.
pub fn differential_inequality_flag(c: &BreakingConstants) -> BlowupAssessment {
    let mut a = BlowupAssessment::new(Criterion::DifferentialInequality, None);
    a.require("C1 <= 0", c.c1 <= 0.0, format!("C1 = {}", c.c1));
    a.require("C2 <= 0", c.c2 <= 0.0, format!("C2 = {}", c.c2));
    if a.hypotheses_met() {
        a.note = Some("blow-up asserted by differential inequality, no bound".into());
    }
    a
}

/// Every assessment, with pointwise criteria seeded at `x0` or, if absent,
/// at the steepest point.
pub fn assess_all(u0: &Field, params: &ModelParams, x0: Option<f64>) -> Result<Vec<BlowupAssessment>> {
    let x = match x0 {
        Some(x) => x,
        None => infimum_slope(u0)?.0,
    };
    let c = breaking_constants(u0, params)?;
    Ok(vec![
        mean_zero_check(u0, params, x)?,
        positive_momentum_check(u0, params, x)?,
        infimum_slope_check(u0, params)?,
        pointwise_slope_check(u0, params, x)?,
        differential_inequality_flag(&c),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetectorThresholds {
    pub gamma: f64,
    pub slope: f64,
    /// Budget for the running integral of `sup |m|^2`.
    pub m_budget: f64,
}

impl Default for DetectorThresholds {
    fn default() -> Self {
        Self { gamma: 1e3, slope: 1e3, m_budget: 1e6 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DetectionReport {
    pub gamma_crossing: Option<f64>,
    pub slope_crossing: Option<f64>,
    pub budget_crossing: Option<f64>,
}

impl DetectionReport {
    pub fn first(&self) -> Option<f64> {
        [self.gamma_crossing, self.slope_crossing, self.budget_crossing]
            .into_iter()
            .flatten()
            .reduce(f64::min)
    }
}

/// First time a sampled signal drops below `-threshold`, linearly
/// interpolated between samples.
fn first_drop(ts: &[f64], vs: &[f64], threshold: f64) -> Option<f64> {
    let i = vs.iter().position(|&v| v < -threshold)?;
    if i == 0 {
        return Some(ts[0]);
    }
    let (v0, v1) = (vs[i - 1], vs[i]);
    let s = (-threshold - v0) / (v1 - v0);
    Some(ts[i - 1] + s * (ts[i] - ts[i - 1]))
}

/// Scans a diagnostics stream (ordered in `t`) for threshold crossings.
pub fn runtime_detector(stream: &[DiagnosticsSample], thr: &DetectorThresholds) -> Result<DetectionReport> {
    if stream.windows(2).any(|w| !(w[1].t >= w[0].t)) {
        return Err(Error::InvalidParams("diagnostics stream is not ordered in t".into()));
    }
    if stream.is_empty() {
        return Ok(DetectionReport::default());
    }
    let ts: Vec<f64> = stream.iter().map(|d| d.t).collect();
    let gamma: Vec<f64> = stream.iter().map(|d| d.min_gamma).collect();
    let slope: Vec<f64> = stream.iter().map(|d| d.min_k1_m_ux.min(d.min_k2_ux)).collect();
    // negative running integral so the same crossing search applies
    let mut acc = vec![0.0];
    for w in stream.windows(2) {
        let step = 0.5 * (w[1].t - w[0].t) * (w[0].max_abs_m().powi(2) + w[1].max_abs_m().powi(2));
        acc.push(acc.last().unwrap() - step);
    }
    Ok(DetectionReport {
        gamma_crossing: first_drop(&ts, &gamma, thr.gamma),
        slope_crossing: first_drop(&ts, &slope, thr.slope),
        budget_crossing: first_drop(&ts, &acc, thr.m_budget),
    })
}

/// Initial data whose momentum is a normalized von Mises bump on a floor:
/// `m0 = c0 + a exp(kappa cos 2 pi (x - centre)) / I0(kappa)`, `u0 = A^{-1} m0`.
pub fn von_mises_data(grid: &PeriodicGrid, c0: f64, a: f64, kappa: f64, centre: f64) -> Result<Field> {
    let bump = grid.sample(|x| (kappa * ((TWO_PI * (x - centre)).cos() - 1.0)).exp())?;
    let norm = mean(&bump);
    let m0 = bump.map(|b| c0 + a * b / norm)?;
    Ok(apply_ainv(&m0))
}

/// `u0 = A^{-1}(1 + cos(2 pi x) / 2) - beta sin(2 pi x)`.
pub fn steepened_cosine_data(grid: &PeriodicGrid, beta: f64) -> Result<Field> {
    let m0 = grid.sample(|x| 1.0 + 0.5 * (TWO_PI * x).cos())?;
    apply_ainv(&m0).zip_map(&grid.sample(|x| (TWO_PI * x).sin())?, |u, s| u - beta * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::conserved_at;
    use proptest::prelude::*;

    fn params(k1: f64, k2: f64) -> ModelParams {
        ModelParams::new(k1, k2, 0.0).unwrap()
    }

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    fn sine() -> Field {
        grid(256).sample(|x| (TWO_PI * x).sin() / TWO_PI).unwrap()
    }

    #[test]
    fn constant_data_constants() {
        let c = breaking_constants(&Field::constant(&grid(64), 0.3).unwrap(), &params(1.0, 1.0)).unwrap();
        assert_eq!(c.mu1, 0.0);
        assert_eq!(c.c2, 0.0);
        assert_eq!(c.k, Some(0.0));
        assert!((c.c1 - 1.2).abs() < 1e-15);
    }

    #[test]
    fn mean_zero_constants() {
        let c = breaking_constants(&sine(), &params(1.0, 1.0)).unwrap();
        assert!(c.mu0.abs() < 1e-15);
        assert!((c.mu1 - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((c.c2 + 0.25).abs() < 1e-14);
        assert_eq!(c.c1, 1.5);
        assert!(c.k.is_none() && c.k_radicand < 0.0);
    }

    #[test]
    fn hand_evaluated_constants() {
        // mu0 = 1, mu1 = 0.5, k1 = 2, k2 = 1
        let c = BreakingConstants::from_moments(1.0, 0.5, &params(2.0, 1.0));
        let s = 3f64.sqrt();
        assert!((c.c1 - (1.5 - 2.0)).abs() < 1e-15);
        assert!((c.c2 - (2.0 * 0.5 * (s / 3.0 - 0.5) + 0.5 * (s / 3.0 - 0.25))).abs() < 1e-15);
        assert!((c.c2_tilde_case3 - ((3.0 - 4.0) + 5.0 * s / 6.0 - (9.0 + 52.0) * 0.25 / 12.0)).abs() < 1e-14);
        assert!((c.c2_tilde_case4 - (-1.0) * (1.0 + s / 12.0).powi(2)).abs() < 1e-14);
        let rad = (4.0 * 0.5 * (s - 1.5) + 0.5 * (2.0 * s - 1.5)) / 15.0;
        assert!((c.k_radicand - rad).abs() < 1e-15);
        assert!((c.k.unwrap() - rad.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mean_zero_bound() {
        let a = mean_zero_check(&sine(), &params(1.0, 1.0), 0.5).unwrap();
        assert!(a.hypotheses_met());
        let t = a.t_star.unwrap();
        let mu1 = 0.5f64.sqrt();
        assert!((t + 2.0 * (mu1 / -1.0f64).atan() / mu1).abs() < 1e-12);
        assert!((t - 1.7408395).abs() < 1e-6);
        let flat = mean_zero_check(&sine(), &params(1.0, 1.0), 0.25).unwrap();
        assert!(flat.t_star.is_none() && flat.failed() == vec!["negative slope"]);
        let shifted = sine().map(|v| v + 0.3).unwrap();
        let b = mean_zero_check(&shifted, &params(1.0, 1.0), 0.5).unwrap();
        assert_eq!(b.failed(), vec!["mean zero"]);
    }

    #[test]
    fn mean_zero_data_fail_the_positive_gates() {
        let u = sine();
        let par = params(1.0, 1.0);
        assert!(!positive_momentum_check(&u, &par, 0.5).unwrap().hypotheses_met());
        assert!(infimum_slope_check(&u, &par).unwrap().failed().contains(&"C2 > 0"));
        assert!(pointwise_slope_check(&u, &par, 0.5).unwrap().failed().contains(&"C2 > 0"));
    }

    #[test]
    fn injected_pointwise_bound() {
        let p = PointInputs { k1: 1.0, k2: 1.0, c1: 0.0, c2: 1.0, m0: 1.0, u0x: -2.0 };
        let a = pointwise_slope_bound(&p, None);
        assert!(a.hypotheses_met());
        assert!((a.t_star.unwrap() - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert_eq!(a.rate_constant, Some(-0.5));
        let edge = PointInputs { u0x: -(2.0f64).sqrt(), ..p };
        assert!(!pointwise_slope_bound(&edge, None).hypotheses_met());
    }

    #[test]
    fn injected_positive_momentum_cases() {
        let base = PointInputs { k1: 1.0, k2: 0.5, c1: -0.5, c2: 2.0, m0: 1.0, u0x: 0.0 };
        let b = (1.0f64 / (2.0 * 0.5 * 2.0)).sqrt();
        let edge = -1.0 / (2.0 * b * 0.5);
        let a = positive_momentum_bound(&PointInputs { u0x: edge, ..base }, None);
        assert_eq!(a.case, Some(1));
        assert!((a.t_star.unwrap() - b * (0.5f64 + 1.0).ln()).abs() < 1e-15);
        let a = positive_momentum_bound(&PointInputs { u0x: 5.0 * edge, ..base }, None);
        assert_eq!(a.case, Some(2));
        let (r, n0) = (2.0, 1.0);
        let nt = 2.0 * b * (1.0 + 0.5) * 5.0 * edge;
        let expect = b * ((r - (nt * nt - n0 * n0 - 2.0 * r * n0).sqrt()) / (n0 + nt + r)).ln();
        assert!((a.t_star.unwrap() - expect).abs() < 1e-14);
        let a = positive_momentum_bound(&PointInputs { c2: -1.0, ..base }, None);
        assert_eq!(a.failed(), vec!["C2 > 0"]);
        let a = positive_momentum_bound(&PointInputs { u0x: 0.5 * edge, ..base }, None);
        assert_eq!(a.failed(), vec!["slope below both thresholds"]);
    }

    #[test]
    fn infimum_bound_gates_and_monotonicity() {
        let par = params(1.0, 1.0);
        let flat = Field::constant(&grid(32), 1.0).unwrap();
        assert!(!infimum_slope_check(&flat, &par).unwrap().hypotheses_met());
        let c = BreakingConstants::from_moments(1.0, 0.1, &par);
        assert!(c.c2 > 0.0);
        let k = c.k.unwrap();
        let mut last = f64::INFINITY;
        for i in 1..20 {
            let inf = -k - 0.5 * i as f64;
            let t = infimum_slope_bound(&par, &c, 0.5, inf).t_star.unwrap();
            assert!(t > 0.0 && t < last);
            last = t;
        }
        assert!(!infimum_slope_bound(&par, &c, -0.1, -10.0).hypotheses_met());
        assert!(!infimum_slope_bound(&par, &c, 0.5, -0.5 * k).hypotheses_met());
    }

    #[test]
    fn case_one_flag() {
        let c = BreakingConstants::from_moments(2.0, 5.0, &params(1.0, 1.0));
        assert!(c.c1 <= 0.0 && c.c2 <= 0.0);
        let a = differential_inequality_flag(&c);
        assert!(a.hypotheses_met() && a.t_star.is_none() && a.note.is_some());
    }

    #[test]
    fn infimum_polish() {
        let u = grid(64).sample(|x| (TWO_PI * (x - 0.013)).sin() / TWO_PI).unwrap();
        let (x, v) = infimum_slope(&u).unwrap();
        assert!((v + 1.0).abs() < 1e-12);
        assert!((x - 0.513).abs() < 1e-6);
    }

    fn stream(values: &[(f64, f64)]) -> Vec<DiagnosticsSample> {
        let g = grid(16);
        values
            .iter()
            .map(|&(t, gam)| {
                let mut d = conserved_at(t, &Field::constant(&g, 1.0).unwrap(), &params(1.0, 1.0));
                d.min_gamma = gam;
                d
            })
            .collect()
    }

    #[test]
    fn detector_on_synthetic_streams() {
        let thr = DetectorThresholds { gamma: 2.5, ..Default::default() };
        let s = stream(&(0..10).map(|i| (i as f64, -(i as f64))).collect::<Vec<_>>());
        let r = runtime_detector(&s, &thr).unwrap();
        assert_eq!(r.gamma_crossing, Some(2.5));
        assert_eq!(r.slope_crossing, None);
        let flat = stream(&(0..10).map(|i| (i as f64, 0.0)).collect::<Vec<_>>());
        assert_eq!(runtime_detector(&flat, &DetectorThresholds::default()).unwrap().first(), None);
        let budget = DetectorThresholds { m_budget: 4.5, ..Default::default() };
        assert_eq!(runtime_detector(&flat, &budget).unwrap().budget_crossing, Some(4.5));
        let unordered = stream(&[(1.0, 0.0), (0.5, 0.0)]);
        assert!(runtime_detector(&unordered, &thr).is_err());
    }

    #[test]
    fn von_mises_momentum() {
        let g = grid(256);
        let u = von_mises_data(&g, 0.01, 2.0, 20.0, 0.5).unwrap();
        let m = momentum(&u);
        assert!((mean(&m) - 2.01).abs() < 1e-12);
        assert!(m.min() > 0.0);
        assert!((m.values()[128] - m.max()).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn shift_moves_mu0_only(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..6),
            c in -2.0f64..2.0,
        ) {
            let g = grid(64);
            let u = g.sample(|x| coeffs.iter().enumerate()
                .map(|(k, (a, b))| a * (TWO_PI * (k + 1) as f64 * x).cos() + b * (TWO_PI * (k + 1) as f64 * x).sin())
                .sum::<f64>() * 0.1).unwrap();
            let par = params(1.0, 1.0);
            let a = breaking_constants(&u, &par).unwrap();
            let b = breaking_constants(&u.map(|v| v + c).unwrap(), &par).unwrap();
            prop_assert!((b.mu0 - a.mu0 - c).abs() < 1e-12);
            prop_assert!((b.mu1 - a.mu1).abs() < 1e-12);
            prop_assert!((a.c2 + 0.5 * par.k2 * a.mu1 * a.mu1).abs() < 1e-12);
            prop_assert!(!positive_momentum_check(&u, &par, 0.3).unwrap().hypotheses_met());
            prop_assert!(!infimum_slope_check(&u, &par).unwrap().hypotheses_met());
            prop_assert!(!pointwise_slope_check(&u, &par, 0.3).unwrap().hypotheses_met());
        }

        #[test]
        fn met_hypotheses_carry_positive_bounds(
            c2 in 0.01f64..5.0, m0 in 0.01f64..5.0, u0x in -50.0f64..0.0, k1 in 0.1f64..3.0, k2 in 0.1f64..3.0,
        ) {
            let p = PointInputs { k1, k2, c1: -1.0, c2, m0, u0x };
            for a in [pointwise_slope_bound(&p, None), positive_momentum_bound(&p, None)] {
                if a.hypotheses_met() {
                    let t = a.t_star.unwrap();
                    prop_assert!(t > 0.0 && t.is_finite());
                }
            }
        }
    }
}
