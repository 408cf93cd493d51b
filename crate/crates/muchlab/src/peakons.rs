//! Peakon machinery: amplitude-speed relation, particle ODEs, and the
//! two-peakon closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::{green_g, green_gx};
use crate::grid::{Field, PeriodicGrid};
use crate::model::ModelParams;
use crate::ode::{doubled_step, step_factor, sup};
use crate::timestepper::StepControl;

/// Minimum cyclic distance between two peakons before the run is aborted.
pub const COLLISION_TOL: f64 = 1e-9;

fn reduce(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Amplitudes `p` and positions `q` of `u = sum p_i g(x - q_i)`.
///
/// Labels are the caller's; `order()` gives the labels sorted by position.
#[derive(Clone, Debug, PartialEq)]
pub struct PeakonSystem {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl PeakonSystem {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::InvalidParams(format!(
                "{} amplitudes but {} positions",
                p.len(),
                q.len()
            )));
        }
        if p.iter().chain(&q).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite peakon data".into()));
        }
        Ok(Self { p, q: q.into_iter().map(reduce).collect() })
    }

    pub fn empty() -> Self {
        Self { p: Vec::new(), q: Vec::new() }
    }

    pub fn n_peaks(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    /// Positions in `[0, 1)`.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn sum_p(&self) -> f64 {
        self.p.iter().sum()
    }

    /// Labels sorted by position (ties by label).
    pub fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.q.len()).collect();
        idx.sort_by(|&a, &b| self.q[a].total_cmp(&self.q[b]).then(a.cmp(&b)));
        idx
    }

    /// Cyclic gaps between position-sorted neighbours; the last entry wraps.
    pub fn gaps(&self) -> Vec<f64> {
        let o = self.order();
        let n = o.len();
        (0..n)
            .map(|s| {
                let here = self.q[o[s]];
                let next = if s + 1 < n { self.q[o[s + 1]] } else { self.q[o[0]] + 1.0 };
                next - here
            })
            .collect()
    }

    fn check_collisions(&self, t: f64) -> Result<()> {
        let o = self.order();
        if o.len() < 2 {
            return Ok(());
        }
        for (s, gap) in self.gaps().into_iter().enumerate() {
            if gap < COLLISION_TOL {
                let (i, j) = (o[s], o[(s + 1) % o.len()]);
                return Err(Error::Collision { i: i.min(j), j: i.max(j), t });
            }
        }
        Ok(())
    }
}

/// Real amplitudes of a single peakon travelling at a given speed.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeSolution {
    /// Descending order.
    pub roots: Vec<f64>,
    pub degenerate: bool,
}

/// Solves `(25/12) k1 a^2 + (13/12) k2 a - c = 0` for `a`.
pub fn amplitude_for_speed(c: f64, params: &ModelParams) -> Result<AmplitudeSolution> {
    let (k1, k2) = (params.k1, params.k2);
    if k1 == 0.0 && k2 == 0.0 {
        return Err(Error::InvalidParams("k1 and k2 both vanish".into()));
    }
    if k1 == 0.0 {
        return Ok(AmplitudeSolution { roots: vec![12.0 * c / (13.0 * k2)], degenerate: false });
    }
    let disc = 169.0 * k2 * k2 + 1200.0 * c * k1;
    let scale = 169.0 * k2 * k2 + (1200.0 * c * k1).abs();
    if disc.abs() <= 1e-12 * scale {
        return Ok(AmplitudeSolution { roots: vec![-13.0 * k2 / (50.0 * k1)], degenerate: true });
    }
    if disc < 0.0 {
        return Err(Error::NoRealPeakon { c, discriminant: disc });
    }
    // a = (-13 k2 +- sqrt(disc)) / (50 k1), evaluated without cancellation
    let sq = disc.sqrt();
    let mut roots = if k2 == 0.0 {
        vec![sq / (50.0 * k1), -sq / (50.0 * k1)]
    } else {
        let w = -0.5 * (13.0 * k2 + k2.signum() * sq);
        vec![w / (25.0 * k1), -12.0 * c / w]
    };
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok(AmplitudeSolution { roots, degenerate: false })
}

/// `c = (25/12) k1 a^2 + (13/12) k2 a`.
pub fn speed_for_amplitude(a: f64, params: &ModelParams) -> f64 {
    25.0 / 12.0 * params.k1 * a * a + 13.0 / 12.0 * params.k2 * a
}

/// `u(x_j) = sum_i p_i g(x_j - q_i)`.
pub fn sample_field(sys: &PeakonSystem, grid: &PeriodicGrid) -> Field {
    let values = (0..grid.n())
        .map(|j| {
            let x = grid.node(j);
            sys.p.iter().zip(&sys.q).map(|(p, q)| p * green_g(x - q)).sum()
        })
        .collect();
    Field::new(grid.clone(), values).expect("finite peakon data gives a finite field")
}

/// Which particle system drives the peakons.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeakonFormulation {
    /// Quadratic part from the mu-CH particle system; cubic part is the
    /// weak-form peakon velocity `2 mu u(q_i) - s_i^2 - p_i^2/12` written in
    /// bracket form.
    #[default]
    Reconciled,
    /// Quadratic part as in `Reconciled`, cubic part copied verbatim from the
    /// modified mu-CH particle system as printed (independent `j, k` in the
    /// first sum, `eps_jk = 1` when `k - j >= 2`).
    SourceBracket,
    /// The printed coupled system, literally.
    AsPrinted,
}

/// Sorted-label helpers shared by the bracket forms.
struct Sorted {
    p: Vec<f64>,
    q: Vec<f64>,
}

fn lambda(i: usize, j: usize) -> f64 {
    if i < j {
        1.0
    } else {
        -1.0
    }
}

impl Sorted {
    fn of(sys: &PeakonSystem, order: &[usize]) -> Self {
        Self {
            p: order.iter().map(|&i| sys.p[i]).collect(),
            q: order.iter().map(|&i| sys.q[i]).collect(),
        }
    }

    fn n(&self) -> usize {
        self.p.len()
    }

    /// Cubic-flow velocity in bracket form, consistent with the weak form.
    fn reconciled_bracket(&self, i: usize) -> f64 {
        let (p, q) = (&self.p, &self.q);
        let others: f64 = (0..self.n()).filter(|&j| j != i).map(|j| p[j]).sum();
        let mut v = 25.0 / 12.0 * p[i] * p[i] + 23.0 / 12.0 * others * others;
        for j in (0..self.n()).filter(|&j| j != i) {
            let d = q[i] - q[j] + 0.5 * lambda(i, j);
            v += p[i] * p[j] * (d * d + 49.0 / 12.0);
        }
        for j in (0..self.n()).filter(|&j| j != i) {
            for k in (j + 1..self.n()).filter(|&k| k != i) {
                let eps = if j < i && i < k { 1.0 } else { 0.0 };
                let d = q[j] - q[k] + eps;
                v += p[j] * p[k] * d * d;
            }
        }
        v
    }

    fn source_bracket(&self, i: usize) -> f64 {
        let (p, q) = (&self.p, &self.q);
        let n = self.n();
        let mut pairs = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            for k in (0..n).filter(|&k| k != i) {
                pairs += (p[j] + p[k]).powi(2);
            }
        }
        let mut v = (pairs + 25.0 * p[i] * p[i]) / 12.0;
        for j in (0..n).filter(|&j| j != i) {
            let d = q[i] - q[j] + 0.5 * lambda(i, j);
            v += p[i] * p[j] * (d * d + 49.0 / 12.0);
        }
        for j in (0..n).filter(|&j| j != i) {
            for k in (j + 1..n).filter(|&k| k != i) {
                let eps = if k - j >= 2 { 1.0 } else { 0.0 };
                let d = q[j] - q[k] + eps;
                v += p[j] * p[k] * d * d;
            }
        }
        v
    }

    /// The printed system. The unmatched parenthesis in the `p_i` term is
    /// read as `((q_i - q_j)^2 + lambda_ij/2)^2 + 49/12`.
    fn as_printed(&self, i: usize, params: &ModelParams) -> (f64, f64) {
        let (p, q) = (&self.p, &self.q);
        let n = self.n();
        let dp = -params.k2 * (0..n).map(|j| p[i] * p[j] * (q[i] - q[j] - 0.5)).sum::<f64>();
        let mut pairs = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            for k in (0..n).filter(|&k| k != i) {
                pairs += (p[j] + p[k]).powi(2);
            }
        }
        let mut bracket = (23.0 * pairs + 25.0 * p[i] * p[i]) / 12.0;
        for j in (0..n).filter(|&j| j != i) {
            let d = q[i] - q[j];
            let inner = d * d + 0.5 * lambda(i, j);
            bracket -= p[i] * p[j] * (inner * inner + 49.0 / 12.0);
        }
        for j in (0..n).filter(|&j| j != i) {
            for k in (j + 1..n).filter(|&k| k != i) {
                let eps = if k - j >= 2 { 1.0 } else { 0.0 };
                let d = q[j] - q[k] + eps;
                bracket -= p[j] * p[k] * d * d;
            }
        }
        let quad: f64 = (0..n)
            .map(|j| {
                let d = q[i] - q[j];
                p[j] * (0.5 * d * d - 0.5 * d.abs() + 13.0 / 12.0)
            })
            .sum();
        (dp, params.k1 * bracket + params.k2 * quad)
    }
}

/// `(dp, dq)` in the caller's labels, reconciled formulation.
pub fn multipeakon_rhs(sys: &PeakonSystem, params: &ModelParams) -> Result<(Vec<f64>, Vec<f64>)> {
    multipeakon_rhs_with(sys, params, PeakonFormulation::Reconciled)
}

pub fn multipeakon_rhs_with(
    sys: &PeakonSystem,
    params: &ModelParams,
    formulation: PeakonFormulation,
) -> Result<(Vec<f64>, Vec<f64>)> {
    sys.check_collisions(f64::NAN)?;
    let n = sys.n_peaks();
    let order = sys.order();
    let s = Sorted::of(sys, &order);
    let mut dp = vec![0.0; n];
    let mut dq = vec![0.0; n];
    for (rank, &label) in order.iter().enumerate() {
        let (a, b) = match formulation {
            PeakonFormulation::AsPrinted => s.as_printed(rank, params),
            _ => {
                let bracket = if formulation == PeakonFormulation::Reconciled {
                    s.reconciled_bracket(rank)
                } else {
                    s.source_bracket(rank)
                };
                let mut dp_i = 0.0;
                let mut u_i = 0.0;
                for j in 0..n {
                    let d = s.q[rank] - s.q[j];
                    dp_i -= s.p[rank] * s.p[j] * green_gx(d);
                    u_i += s.p[j] * green_g(d);
                }
                (params.k2 * dp_i, params.k1 * bracket + params.k2 * u_i)
            }
        };
        dp[label] = a;
        dq[label] = b;
    }
    Ok((dp, dq))
}

/// Logistic amplitudes of the two-peakon closed form.
pub fn two_peakon_amplitudes(a: f64, b: f64, t0: f64, t: f64) -> (f64, f64) {
    let z = b * (t - t0);
    (a / (1.0 + (-z).exp()), a / (1.0 + z.exp()))
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// The two-peakon closed form at time `t`.
pub fn two_peakon_closed_form(
    a: f64,
    a1: f64,
    b: f64,
    t0: f64,
    c1: f64,
    t: f64,
    params: &ModelParams,
) -> Result<PeakonSystem> {
    if !(b > 0.0) {
        return Err(Error::InvalidParams(format!("closed form needs b > 0, got {b}")));
    }
    let (k1, k2) = (params.k1, params.k2);
    let tau = t - t0;
    let z = b * tau;
    let (p1, p2) = two_peakon_amplitudes(a, b, t0, t);
    let q1 = -(k1 * a * a / b) * (1.0 / 12.0 + (0.5 - a1).powi(2)) / (1.0 + z.exp())
        + a / 12.0 * (23.0 * k1 * a + 6.0 * a1 * (a1 - 1.0) * k2 + 13.0 * k2) * tau
        + a / (6.0 * b) * (k1 * a - 3.0 * a1 * (a1 - 1.0) * k2) * softplus(z)
        + c1;
    PeakonSystem::new(vec![p1, p2], vec![q1, q1 + a])
}

/// `dp1/dt` of the closed form minus the first amplitude equation evaluated
/// on the closed-form state.
pub fn two_peakon_p_residual(a: f64, a1: f64, b: f64, t0: f64, c1: f64, t: f64, params: &ModelParams) -> Result<f64> {
    let sys = two_peakon_closed_form(a, a1, b, t0, c1, t, params)?;
    let z = b * (t - t0);
    let e = (-z.abs()).exp();
    let closed_rate = a * b * e / (1.0 + e).powi(2);
    let (dp, _) = multipeakon_rhs(&sys, params)?;
    Ok(closed_rate - dp[0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakonSample {
    pub t: f64,
    pub p: Vec<f64>,
    /// Reduced to `[0, 1)`.
    pub q: Vec<f64>,
    /// Continuous in time.
    pub q_unwrapped: Vec<f64>,
    pub sum_p: f64,
    pub gaps: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakonTrajectory {
    pub samples: Vec<PeakonSample>,
    pub formulation: PeakonFormulation,
}

impl PeakonTrajectory {
    pub fn last(&self) -> &PeakonSample {
        self.samples.last().expect("trajectories hold the initial sample")
    }

    pub fn system_at(&self, idx: usize) -> PeakonSystem {
        let s = &self.samples[idx];
        PeakonSystem::new(s.p.clone(), s.q.clone()).expect("stored samples are finite")
    }
}

fn sample_of(t: f64, y: &[f64], n: usize) -> PeakonSample {
    let sys = PeakonSystem::new(y[..n].to_vec(), y[n..].to_vec()).expect("finite state");
    PeakonSample {
        t,
        sum_p: sys.sum_p(),
        gaps: sys.gaps(),
        p: sys.p.clone(),
        q: sys.q.clone(),
        q_unwrapped: y[n..].to_vec(),
    }
}

/// Adaptive step-doubling RK4 on the particle system; every accepted step is
/// recorded. Collisions abort with an error.
pub fn integrate_peakons(
    sys0: &PeakonSystem,
    t_end: f64,
    params: &ModelParams,
    control: &StepControl,
    formulation: PeakonFormulation,
) -> Result<PeakonTrajectory> {
    control.validate()?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidParams(format!("t_end must be positive, got {t_end}")));
    }
    let n = sys0.n_peaks();
    sys0.check_collisions(0.0)?;
    let mut y: Vec<f64> = sys0.p.iter().chain(&sys0.q).copied().collect();
    let mut t = 0.0;
    let mut samples = vec![sample_of(t, &y, n)];
    if n == 0 {
        samples.push(sample_of(t_end, &y, 0));
        return Ok(PeakonTrajectory { samples, formulation });
    }
    let mut f = |y: &[f64]| -> Result<Vec<f64>> {
        let sys = PeakonSystem::new(y[..n].to_vec(), y[n..].to_vec())?;
        let (dp, dq) = multipeakon_rhs_with(&sys, params, formulation)?;
        Ok(dp.into_iter().chain(dq).collect())
    };
    let mut dt = control.dt_init.min(t_end);
    while t < t_end {
        let remaining = t_end - t;
        let last = dt >= remaining;
        let h = if last { remaining } else { dt };
        let attempt = doubled_step(&y, h, &mut f).map_err(|e| match e {
            Error::Collision { i, j, .. } => Error::Collision { i, j, t },
            other => other,
        })?;
        if attempt.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowupSuspected { t: Some(t) });
        }
        let tol = control.abs_tol + control.rel_tol * sup(&y);
        let factor = step_factor(attempt.err, tol);
        if attempt.err <= tol {
            t = if last { t_end } else { t + h };
            y = attempt.y;
            let s = sample_of(t, &y, n);
            PeakonSystem::new(s.p.clone(), s.q.clone())?.check_collisions(t)?;
            samples.push(s);
        } else if h * factor < control.dt_min {
            return Err(Error::InvalidParams(format!("peakon step underflow at t = {t}")));
        }
        dt = h * factor;
    }
    Ok(PeakonTrajectory { samples, formulation })
}
