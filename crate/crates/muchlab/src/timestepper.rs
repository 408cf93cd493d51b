//! Adaptive RK4 integration of the u-form with a wave-breaking guard.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::model::{conserved_at, rhs_u, DiagnosticsSample, ModelParams, StateU};
use crate::ode::{doubled_step, rk4, step_factor, sup};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    pub dt_init: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub dt_min: f64,
    /// Guard on `-inf Gamma`.
    pub blowup_gamma_threshold: f64,
    /// Guard on `sup |m|`.
    pub blowup_m_threshold: f64,
    /// Record a diagnostics row and snapshot every this many accepted steps.
    pub sample_stride: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            dt_min: 1e-12,
            blowup_gamma_threshold: 1e3,
            blowup_m_threshold: 1e4,
            sample_stride: 1,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt_init", self.dt_init),
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("dt_min", self.dt_min),
            ("blowup_gamma_threshold", self.blowup_gamma_threshold),
            ("blowup_m_threshold", self.blowup_m_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.dt_min >= self.dt_init {
            return Err(Error::InvalidParams(format!(
                "dt_min {} must be below dt_init {}",
                self.dt_min, self.dt_init
            )));
        }
        if self.sample_stride == 0 {
            return Err(Error::InvalidParams("sample_stride must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Guard {
    Gamma,
    Momentum,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "cause")]
pub enum Termination {
    ReachedTEnd,
    BlowupDetected { t: f64, guard: Guard },
    DtUnderflow { t: f64 },
    NonFinite { t: f64 },
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::ReachedTEnd => "reached_t_end",
            Termination::BlowupDetected { .. } => "blowup_detected",
            Termination::DtUnderflow { .. } => "dt_underflow",
            Termination::NonFinite { .. } => "non_finite",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub final_state: StateU,
    pub diagnostics: Vec<DiagnosticsSample>,
    /// States at the diagnostics timestamps, for post-hoc characteristic tracing.
    pub snapshots: Vec<StateU>,
    pub termination: Termination,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

fn field_rhs<'a>(
    grid: &'a crate::grid::PeriodicGrid,
    params: &'a ModelParams,
) -> impl FnMut(&[f64]) -> Result<Vec<f64>> + 'a {
    move |y: &[f64]| {
        let u = Field::new(grid.clone(), y.to_vec()).map_err(|_| Error::BlowupSuspected { t: None })?;
        Ok(rhs_u(&u, params)?.into_values())
    }
}

/// One classical RK4 step.
pub fn step_rk4(state: &StateU, dt: f64, params: &ModelParams) -> Result<StateU> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    let grid = state.u.grid();
    let mut f = field_rhs(grid, params);
    let y = rk4(state.u.values(), dt, &mut f).map_err(|_| Error::BlowupSuspected { t: Some(state.t) })?;
    let u = Field::new(grid.clone(), y).map_err(|_| Error::BlowupSuspected { t: Some(state.t) })?;
    Ok(StateU { t: state.t + dt, u })
}

fn guard_fired(d: &DiagnosticsSample, control: &StepControl) -> Option<Guard> {
    if -d.min_gamma > control.blowup_gamma_threshold {
        Some(Guard::Gamma)
    } else if d.max_abs_m() > control.blowup_m_threshold {
        Some(Guard::Momentum)
    } else {
        None
    }
}

/// Step-doubling adaptive RK4 from `state0` to `t_end`.
///
/// Blow-up, step underflow and non-finite values end the run early; they
/// are reported in `termination`, not as errors.
pub fn integrate(state0: &StateU, t_end: f64, params: &ModelParams, control: &StepControl) -> Result<RunResult> {
    control.validate()?;
    params.validate()?;
    if !(t_end > state0.t) {
        return Err(Error::InvalidParams(format!("t_end {t_end} must exceed t0 {}", state0.t)));
    }
    let grid = state0.u.grid().clone();
    let mut f = field_rhs(&grid, params);

    let mut t = state0.t;
    let mut y = state0.u.values().to_vec();
    let mut dt = control.dt_init.min(t_end - t);
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    let first = conserved_at(t, &state0.u, params);
    let mut diagnostics = vec![first];
    let mut snapshots = vec![state0.clone()];
    let mut last_recorded = true;

    let snapshot = |t: f64, y: &[f64]| StateU { t, u: Field::from_raw(grid.clone(), y.to_vec()) };

    let termination = if let Some(guard) = guard_fired(&first, control) {
        Termination::BlowupDetected { t, guard }
    } else {
        loop {
            if t >= t_end {
                break Termination::ReachedTEnd;
            }
            let remaining = t_end - t;
            let last = dt >= remaining;
            let h = if last { remaining } else { dt };
            let attempt = match doubled_step(&y, h, &mut f) {
                Ok(a) if a.y.iter().all(|v| v.is_finite()) && a.err.is_finite() => a,
                _ => break Termination::NonFinite { t },
            };
            let tol = control.abs_tol + control.rel_tol * sup(&y);
            let factor = step_factor(attempt.err, tol);
            if attempt.err <= tol {
                t = if last { t_end } else { t + h };
                y = attempt.y;
                accepted += 1;
                last_recorded = false;
                let u = Field::from_raw(grid.clone(), y.clone());
                let d = conserved_at(t, &u, params);
                let fired = guard_fired(&d, control);
                if accepted.is_multiple_of(control.sample_stride) || fired.is_some() || t >= t_end {
                    diagnostics.push(d);
                    snapshots.push(StateU { t, u });
                    last_recorded = true;
                }
                if let Some(guard) = fired {
                    break Termination::BlowupDetected { t, guard };
                }
                dt = h * factor;
            } else {
                rejected += 1;
                dt = h * factor;
                if dt < control.dt_min {
                    break Termination::DtUnderflow { t };
                }
            }
        }
    };

    if !last_recorded {
        let u = Field::from_raw(grid.clone(), y.clone());
        diagnostics.push(conserved_at(t, &u, params));
        snapshots.push(StateU { t, u });
    }
    Ok(RunResult {
        final_state: snapshot(t, &y),
        diagnostics,
        snapshots,
        termination,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{PeriodicGrid, TWO_PI};

    fn params(k1: f64, k2: f64, gamma: f64) -> ModelParams {
        ModelParams::new(k1, k2, gamma).unwrap()
    }

    fn state(n: usize, f: impl Fn(f64) -> f64) -> StateU {
        StateU { t: 0.0, u: PeriodicGrid::new(n).unwrap().sample(f).unwrap() }
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let s = state(32, |_| 0.7);
        let next = step_rk4(&s, 0.1, &params(1.0, 1.0, 0.3)).unwrap();
        assert_eq!(next.u, s.u);
        assert!((next.t - 0.1).abs() < 1e-16);
        assert!(step_rk4(&s, 0.0, &params(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn linear_mode_rotates_exactly() {
        let s = state(64, |x| (TWO_PI * x).cos());
        let dt = 1e-3;
        let next = step_rk4(&s, dt, &params(0.0, 0.0, 1.0)).unwrap();
        let exact = state(64, |x| (TWO_PI * x - dt / TWO_PI).cos());
        assert!(next.u.sup_distance(&exact.u) < 1e-12);
    }

    fn smooth_random() -> StateU {
        state(64, |x| {
            0.5 + 0.1 * (TWO_PI * x).sin() - 0.05 * (2.0 * TWO_PI * x + 0.3).cos() + 0.02 * (3.0 * TWO_PI * x + 1.1).sin()
        })
    }

    #[test]
    fn local_doubling_difference_scales_like_dt5() {
        let s = smooth_random();
        let p = params(1.0, 1.0, 0.0);
        let diff = |dt: f64| {
            let full = step_rk4(&s, dt, &p).unwrap();
            let half = step_rk4(&step_rk4(&s, dt / 2.0, &p).unwrap(), dt / 2.0, &p).unwrap();
            full.u.sup_distance(&half.u)
        };
        let (a, b, c) = (diff(0.04), diff(0.02), diff(0.01));
        assert!((a / b).log2() >= 4.5, "{}", (a / b).log2());
        assert!((b / c).log2() >= 4.5, "{}", (b / c).log2());
    }

    #[test]
    fn constant_run_reaches_end_flat() {
        let s = state(64, |_| 0.7);
        let r = integrate(&s, 5.0, &params(1.0, 1.0, 0.0), &StepControl::default()).unwrap();
        assert_eq!(r.termination, Termination::ReachedTEnd);
        assert_eq!(r.final_state.t, 5.0);
        let d0 = r.diagnostics[0];
        for d in &r.diagnostics {
            assert!((d.mu0 - d0.mu0).abs() < 1e-13);
            assert!((d.h1 - d0.h1).abs() < 1e-13);
            assert!((d.h2_printed - d0.h2_printed).abs() < 1e-13);
            assert!(d.min_gamma.abs() < 1e-13);
        }
        assert!(r.diagnostics.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(r.diagnostics.len(), r.snapshots.len());
    }

    #[test]
    fn guard_ignores_constants_for_any_threshold() {
        for &thr in &[1.0, 2.0, 1e3] {
            let control = StepControl { blowup_gamma_threshold: thr, blowup_m_threshold: thr.max(1.0), ..Default::default() };
            let s = state(32, |_| 0.9);
            let r = integrate(&s, 1.0, &params(1.0, 1.0, 0.0), &control).unwrap();
            assert_eq!(r.termination, Termination::ReachedTEnd);
        }
    }

    #[test]
    fn guard_on_initial_data() {
        let s = state(64, |x| (TWO_PI * x).sin());
        let control = StepControl { blowup_gamma_threshold: 1.0, ..Default::default() };
        let r = integrate(&s, 1.0, &params(1.0, 1.0, 0.0), &control).unwrap();
        assert_eq!(r.termination, Termination::BlowupDetected { t: 0.0, guard: Guard::Gamma });
    }

    #[test]
    fn runs_are_bit_identical() {
        let s = smooth_random();
        let c = StepControl { sample_stride: 3, ..Default::default() };
        let a = integrate(&s, 0.2, &params(1.0, 1.0, 0.0), &c).unwrap();
        let b = integrate(&s, 0.2, &params(1.0, 1.0, 0.0), &c).unwrap();
        assert_eq!(a, b);
        assert!(a.diagnostics.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(a.diagnostics.last().unwrap().t, 0.2);
    }

    #[test]
    fn rejects_bad_control() {
        let s = state(32, |_| 0.1);
        let p = params(1.0, 1.0, 0.0);
        let bad = StepControl { dt_min: 1.0, ..Default::default() };
        assert!(integrate(&s, 1.0, &p, &bad).is_err());
        let bad = StepControl { sample_stride: 0, ..Default::default() };
        assert!(integrate(&s, 1.0, &p, &bad).is_err());
        assert!(integrate(&s, 0.0, &p, &StepControl::default()).is_err());
    }

    #[test]
    fn underflow_is_reported() {
        let s = smooth_random();
        let c = StepControl { abs_tol: 1e-300, rel_tol: 1e-300, dt_min: 1e-4, dt_init: 1e-3, ..Default::default() };
        let r = integrate(&s, 1.0, &params(1.0, 1.0, 0.0), &c).unwrap();
        assert!(matches!(r.termination, Termination::DtUnderflow { .. }));
        assert!(r.diagnostics.windows(2).all(|w| w[0].t < w[1].t));
    }
}
