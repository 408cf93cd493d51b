//! Lagrangian flow `dq/dt = k1 (2 mu u - u_x^2) + k2 u`, its Jacobian and
//! momentum identities, and the exact mean-zero laws along it.

use crate::error::{Error, Result};
use crate::grid::{mean, Field, Interpolant, Jet};
use crate::model::{rhs_u, ModelParams};
use crate::timestepper::RunResult;

/// Interpolated state with its mean.
struct Frame {
    interp: Interpolant,
    mu0: f64,
}

impl Frame {
    fn of(u: &Field) -> Self {
        Self { interp: Interpolant::new(u), mu0: mean(u) }
    }

    fn speed(&self, params: &ModelParams, x: f64) -> (f64, Jet) {
        let j = self.interp.eval(x);
        let v = params.k1 * (2.0 * self.mu0 * j.value - j.dx * j.dx) + params.k2 * j.value;
        (v, j)
    }
}

/// `k1 (2 mean(u) u(x) - u_x(x)^2) + k2 u(x)` with off-grid values from the
/// trigonometric interpolant.
pub fn flow_speed(u: &Field, params: &ModelParams, x: f64) -> f64 {
    Frame::of(u).speed(params, x).0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharSample {
    pub t: f64,
    /// Reduced to `[0, 1)`.
    pub q: f64,
    pub q_unwrapped: f64,
    pub q_x: f64,
    pub m: f64,
    pub ux: f64,
    pub gamma: f64,
    /// `m(t, q) exp(2 int (k1 m u_x + k2 u_x)) - m0(x0)`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharTrace {
    pub x0: f64,
    pub m0: f64,
    pub samples: Vec<CharSample>,
    /// Set when a non-finite value or a non-positive `q_x` cut the trace short.
    pub truncated: bool,
}

impl CharTrace {
    pub fn max_abs_residual(&self) -> f64 {
        self.samples.iter().fold(0.0f64, |a, s| a.max(s.residual.abs()))
    }

    pub fn min_qx(&self) -> f64 {
        self.samples.iter().fold(f64::INFINITY, |a, s| a.min(s.q_x))
    }
}

/// Follows the characteristic from `x0` through the stored snapshots of a run.
///
/// Each snapshot interval is one RK4 step on the flow together with the
/// Jacobian and momentum exponents. The state inside an interval is the cubic
/// Hermite interpolant built from the snapshots and their time derivatives.
/// The momentum identity holds for `gamma = 0`.
pub fn trace_characteristic(run: &RunResult, x0: f64, params: &ModelParams) -> Result<CharTrace> {
    if !x0.is_finite() {
        return Err(Error::InvalidParams(format!("seed point {x0} is not finite")));
    }
    let snaps = &run.snapshots;
    if snaps.is_empty() {
        return Err(Error::InvalidParams("run holds no snapshots".into()));
    }
    let x0 = x0 - x0.floor();
    // (q', (log q_x)', momentum exponent rate) and the jet at q
    let rates = |fr: &Frame, q: f64| -> ([f64; 3], Jet) {
        let (v, j) = fr.speed(params, q);
        let m = fr.mu0 - j.dxx;
        let a = params.k1 * m * j.dx + params.k2 * j.dx;
        ([v, a + params.k1 * m * j.dx, a], j)
    };

    let mut start = Frame::of(&snaps[0].u);
    let mut start_rate = rhs_u(&snaps[0].u, params)?;
    let (_, j0) = rates(&start, x0);
    let m0 = start.mu0 - j0.dxx;
    let mut y = [x0, 0.0, 0.0];
    let mut samples = vec![CharSample {
        t: snaps[0].t,
        q: x0,
        q_unwrapped: x0,
        q_x: 1.0,
        m: m0,
        ux: j0.dx,
        gamma: (params.k1 * m0 + params.k2) * j0.dx,
        residual: 0.0,
    }];
    let mut truncated = false;

    for w in snaps.windows(2) {
        let (s0, s1) = (&w[0], &w[1]);
        let dt = s1.t - s0.t;
        let end_rate = match rhs_u(&s1.u, params) {
            Ok(r) => r,
            Err(_) => {
                truncated = true;
                break;
            }
        };
        let mid_values: Vec<f64> = (0..s0.u.len())
            .map(|i| {
                let (a, b) = (s0.u.values()[i], s1.u.values()[i]);
                0.5 * (a + b) + dt / 8.0 * (start_rate.values()[i] - end_rate.values()[i])
            })
            .collect();
        if mid_values.iter().any(|v| !v.is_finite()) {
            truncated = true;
            break;
        }
        let mid = Frame::of(&Field::from_raw(s0.u.grid().clone(), mid_values));
        let end = Frame::of(&s1.u);
        let shift = |k: &[f64; 3], h: f64| [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2]];
        let k1 = rates(&start, y[0]).0;
        let k2 = rates(&mid, shift(&k1, 0.5 * dt)[0]).0;
        let k3 = rates(&mid, shift(&k2, 0.5 * dt)[0]).0;
        let k4 = rates(&end, shift(&k3, dt)[0]).0;
        let next: [f64; 3] = std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        let (_, j) = rates(&end, next[0]);
        let m = end.mu0 - j.dxx;
        let q_x = next[1].exp();
        let residual = m * (2.0 * next[2]).exp() - m0;
        if !(next[0].is_finite() && q_x.is_finite() && residual.is_finite()) || q_x <= 0.0 {
            truncated = true;
            break;
        }
        samples.push(CharSample {
            t: s1.t,
            q: next[0] - next[0].floor(),
            q_unwrapped: next[0],
            q_x,
            m,
            ux: j.dx,
            gamma: (params.k1 * m + params.k2) * j.dx,
            residual,
        });
        y = next;
        start = end;
        start_rate = end_rate;
    }
    Ok(CharTrace { x0, m0, samples, truncated })
}

fn check_mean_zero_inputs(mu1: f64, k2: f64) -> Result<()> {
    if !(mu1 > 0.0 && mu1.is_finite()) {
        return Err(Error::InvalidParams(format!("mu1 must be positive, got {mu1}")));
    }
    if k2 == 0.0 || !k2.is_finite() {
        return Err(Error::InvalidParams(format!("k2 must be nonzero, got {k2}")));
    }
    Ok(())
}

/// First time after 0 at which `theta(t) = mu1 k2 t / 2` reaches a value in
/// `targets` (given modulo `pi`).
fn first_hit(targets: &[f64], mu1: f64, k2: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let rate = 0.5 * mu1 * k2;
    targets
        .iter()
        .map(|&th| {
            // smallest theta of the right sign congruent to th mod pi
            let r = th.rem_euclid(pi);
            let theta = if rate > 0.0 {
                if r > 0.0 { r } else { pi }
            } else if r > 0.0 {
                r - pi
            } else {
                -pi
            };
            theta / rate
        })
        .fold(f64::INFINITY, f64::min)
}

/// Pole of the mean-zero slope law.
pub fn mu0zero_pole(u0x: f64, mu1: f64, k2: f64) -> Result<f64> {
    check_mean_zero_inputs(mu1, k2)?;
    let alpha = (u0x / mu1).atan();
    Ok(first_hit(&[alpha + 0.5 * std::f64::consts::PI], mu1, k2))
}

/// `u_x(t, q(t, x0))` for mean-zero data:
/// `mu1 (u0x - mu1 tan(th)) / (mu1 + u0x tan(th))`, `th = mu1 k2 t / 2`.
pub fn exact_ux_mu0zero(t: f64, u0x: f64, mu1: f64, k2: f64) -> Result<f64> {
    let pole = mu0zero_pole(u0x, mu1, k2)?;
    if t >= pole {
        return Err(Error::PoleExceeded { t, pole });
    }
    if t == 0.0 {
        return Ok(u0x);
    }
    let (s, c) = (0.5 * mu1 * k2 * t).sin_cos();
    Ok(mu1 * (u0x * c - mu1 * s) / (mu1 * c + u0x * s))
}

/// `u_xx(t, q(t, x0))` for mean-zero data from
/// `U = k2 U0 / (U0 - (U0 - k2)(cos th + (u0x/mu1) sin th)^4)`, `U = k1 u_xx`.
pub fn exact_uxx_mu0zero(t: f64, u0x: f64, u0xx: f64, mu1: f64, k1: f64, k2: f64) -> Result<f64> {
    check_mean_zero_inputs(mu1, k2)?;
    if k1 == 0.0 || !k1.is_finite() {
        return Err(Error::InvalidParams(format!("k1 must be nonzero, got {k1}")));
    }
    let u0 = k1 * u0xx;
    if u0 == 0.0 {
        return Ok(0.0);
    }
    if t == 0.0 {
        return Ok(u0xx);
    }
    // B(th) = cos(th - alpha) / cos(alpha); the denominator vanishes where B^4 = U0 / (U0 - k2)
    let ratio = u0 / (u0 - k2);
    if ratio >= 0.0 {
        let alpha = (u0x / mu1).atan();
        let c = ratio.powf(0.25) * alpha.cos();
        if c <= 1.0 {
            let d = c.acos();
            let pi = std::f64::consts::PI;
            let pole = first_hit(&[alpha + d, alpha - d, alpha + pi - d, alpha - pi + d], mu1, k2);
            if t >= pole {
                return Err(Error::PoleExceeded { t, pole });
            }
        }
    }
    let (s, c) = (0.5 * mu1 * k2 * t).sin_cos();
    let b = c + u0x / mu1 * s;
    let den = u0 - (u0 - k2) * b.powi(4);
    if den == 0.0 {
        return Err(Error::PoleExceeded { t, pole: t });
    }
    Ok(k2 * u0 / den / k1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{deriv, PeriodicGrid, TWO_PI};
    use crate::model::StateU;
    use crate::timestepper::{integrate, StepControl};
    use proptest::prelude::*;

    fn params(k1: f64, k2: f64) -> ModelParams {
        ModelParams::new(k1, k2, 0.0).unwrap()
    }

    /// Fixed-step RK4 on a scalar ODE, independent of the crate integrators.
    fn ode(y0: f64, t: f64, steps: usize, f: impl Fn(f64, f64) -> f64) -> f64 {
        let h = t / steps as f64;
        let mut y = y0;
        for i in 0..steps {
            let s = i as f64 * h;
            let a = f(s, y);
            let b = f(s + 0.5 * h, y + 0.5 * h * a);
            let c = f(s + 0.5 * h, y + 0.5 * h * b);
            let d = f(s + h, y + h * c);
            y += h / 6.0 * (a + 2.0 * b + 2.0 * c + d);
        }
        y
    }

    #[test]
    fn flow_speed_examples() {
        let g = PeriodicGrid::new(32).unwrap();
        let c = Field::constant(&g, 0.7).unwrap();
        let par = params(1.5, -0.4);
        for &x in &[0.0, 0.123, 0.5, 0.99] {
            assert!((flow_speed(&c, &par, x) - (2.0 * 1.5 * 0.49 - 0.4 * 0.7)).abs() < 1e-14);
        }
        let s = g.sample(|x| (TWO_PI * x).sin() / TWO_PI).unwrap();
        let x = 0.3;
        let exact = -(TWO_PI * x).cos().powi(2) + (TWO_PI * x).sin() / TWO_PI;
        assert!((flow_speed(&s, &params(1.0, 1.0), x) - exact).abs() < 1e-13);
        let ux = deriv(&s, 1).unwrap();
        let j = 5;
        let node = -ux.values()[j].powi(2) + s.values()[j];
        assert_eq!(flow_speed(&s, &params(1.0, 1.0), g.node(j)), node);
    }

    fn constant_run(c0: f64, par: &ModelParams) -> RunResult {
        let g = PeriodicGrid::new(32).unwrap();
        let s = StateU { t: 0.0, u: Field::constant(&g, c0).unwrap() };
        integrate(&s, 1.0, par, &StepControl::default()).unwrap()
    }

    #[test]
    fn constant_state_trace() {
        let par = params(1.0, 1.0);
        let run = constant_run(0.4, &par);
        let tr = trace_characteristic(&run, 0.2, &par).unwrap();
        let v = 2.0 * 0.16 + 0.4;
        assert!(!tr.truncated);
        for s in &tr.samples {
            assert!((s.q_unwrapped - 0.2 - v * s.t).abs() < 1e-12);
            assert_eq!(s.q_x, 1.0);
            assert!(s.residual.abs() < 1e-13);
        }
        assert_eq!(tr.samples[0].residual, 0.0);
        assert_eq!(tr.samples.len(), run.snapshots.len());
    }

    #[test]
    fn smooth_trace_residual_shrinks_with_the_step() {
        let par = params(1.0, 1.0);
        let g = PeriodicGrid::new(128).unwrap();
        let u = g.sample(|x| 0.5 + 0.1 * (TWO_PI * x).sin()).unwrap();
        let m0 = crate::model::momentum(&u).sup_norm();
        let mut worst = Vec::new();
        for &tol in &[1e-8, 1e-12] {
            let c = StepControl { abs_tol: tol, rel_tol: tol, ..Default::default() };
            let run = integrate(&StateU { t: 0.0, u: u.clone() }, 0.1, &par, &c).unwrap();
            let mut w = 0.0f64;
            for &x0 in &[0.0, 0.3, 0.77] {
                let tr = trace_characteristic(&run, x0, &par).unwrap();
                assert!(tr.min_qx() > 0.0 && !tr.truncated);
                w = w.max(tr.max_abs_residual() / m0);
            }
            worst.push(w);
        }
        assert!(worst[0] < 2e-4 && worst[1] < 1e-5, "{worst:?}");
        assert!(worst[1] < 0.1 * worst[0]);
    }

    #[test]
    fn trajectories_keep_their_order() {
        let par = params(1.0, 1.0);
        let g = PeriodicGrid::new(64).unwrap();
        let u = g.sample(|x| 0.5 + 0.1 * (TWO_PI * x).sin()).unwrap();
        let run = integrate(&StateU { t: 0.0, u }, 0.2, &par, &StepControl::default()).unwrap();
        let a = trace_characteristic(&run, 0.3, &par).unwrap();
        let b = trace_characteristic(&run, 0.31, &par).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!(y.q_unwrapped > x.q_unwrapped);
        }
    }

    #[test]
    fn slope_law_examples() {
        let mu1 = 0.5f64.sqrt();
        assert_eq!(exact_ux_mu0zero(0.0, -0.3, mu1, 1.0).unwrap(), -0.3);
        let v = exact_ux_mu0zero(1.0, 0.0, mu1, 1.0).unwrap();
        assert!((v + mu1 * (0.5 * mu1).tan()).abs() < 1e-15);
        assert!((v + 0.2609653).abs() < 1e-7);
        let pole = mu0zero_pole(-1.0, mu1, 1.0).unwrap();
        assert!((pole + 2.0 * (mu1 / -1.0f64).atan() / mu1).abs() < 1e-14);
        assert!((pole - 1.7408395).abs() < 1e-7);
        assert!(matches!(exact_ux_mu0zero(pole, -1.0, mu1, 1.0), Err(Error::PoleExceeded { .. })));
        assert!(exact_ux_mu0zero(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(exact_ux_mu0zero(1.0, 0.0, mu1, 0.0).is_err());
    }

    #[test]
    fn slope_law_solves_the_riccati_equation() {
        let mu1 = 0.5f64.sqrt();
        for &(u0x, k2, t) in &[(0.0, 1.0, 1.0), (-1.0, 1.0, 1.5), (0.7, 2.0, 0.9), (-0.4, -1.0, 0.5)] {
            let w = ode(k2 * u0x, t, 20_000, |_, w| -0.5 * (w * w + k2 * k2 * mu1 * mu1));
            let exact = exact_ux_mu0zero(t, u0x, mu1, k2).unwrap();
            assert!((w / k2 - exact).abs() < 1e-9, "{u0x} {k2}: {} vs {exact}", w / k2);
        }
    }

    #[test]
    fn riccati_diverges_at_the_pole() {
        let mu1 = 0.5f64.sqrt();
        let pole = mu0zero_pole(-1.0, mu1, 1.0).unwrap();
        let before = ode(-1.0, 0.999 * pole, 40_000, |_, w| -0.5 * (w * w + mu1 * mu1));
        assert!(before < -500.0);
        let early = ode(-1.0, 0.9 * pole, 40_000, |_, w| -0.5 * (w * w + mu1 * mu1));
        assert!(early > -50.0);
    }

    #[test]
    fn curvature_law_examples() {
        let mu1 = 0.5f64.sqrt();
        assert_eq!(exact_uxx_mu0zero(0.0, -1.0, 1.0, mu1, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(exact_uxx_mu0zero(0.7, -1.0, 0.0, mu1, 1.0, 1.0).unwrap(), 0.0);
        assert!(exact_uxx_mu0zero(0.5, -1.0, 1.0, mu1, 0.0, 1.0).is_err());
    }

    #[test]
    fn curvature_law_solves_its_ode() {
        let mu1 = 0.5f64.sqrt();
        let cases = [(-1.0, 1.0, 1.0, 1.0, 0.5), (0.3, -0.5, 2.0, 1.0, 0.8), (-0.2, 0.1, 1.0, 2.0, 0.6)];
        for &(u0x, u0xx, k1, k2, t) in &cases {
            let ux = |s: f64| exact_ux_mu0zero(s, u0x, mu1, k2).unwrap();
            let big = ode(k1 * u0xx, t, 20_000, |s, v| 2.0 * ux(s) * (v * v - k2 * v));
            let exact = exact_uxx_mu0zero(t, u0x, u0xx, mu1, k1, k2).unwrap();
            assert!((big / k1 - exact).abs() < 1e-8, "{big} vs {exact}");
        }
    }

    #[test]
    fn curvature_pole_is_reported() {
        // U0 = 2 > k2 = 1: the denominator 2 - B^4 vanishes once B^4 = 2
        let mu1 = 0.5f64.sqrt();
        let mut hit = None;
        for i in 1..4000 {
            let t = i as f64 * 1e-3;
            if exact_uxx_mu0zero(t, 1.0, 2.0, mu1, 1.0, 1.0).is_err() {
                hit = Some(t);
                break;
            }
        }
        let t = hit.expect("pole within range");
        let (s, c) = (0.5 * mu1 * t).sin_cos();
        let b = c + s / mu1;
        assert!((b.powi(4) - 2.0).abs() < 2e-2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn slope_law_is_finite_before_the_pole(u0x in -3.0f64..3.0, mu1 in 0.1f64..2.0, k2 in 0.2f64..2.0, frac in 0.0f64..0.99) {
            let pole = mu0zero_pole(u0x, mu1, k2).unwrap();
            prop_assert!(pole > 0.0);
            let v = exact_ux_mu0zero(frac * pole, u0x, mu1, k2).unwrap();
            prop_assert!(v.is_finite());
            prop_assert!(v <= u0x.max(0.0) + 1e-12);
        }
    }
}
