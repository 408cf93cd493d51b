//! The generalized mu-CH equation in nonlocal u-form, its derived fields and
//! monitored functionals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{deriv, deriv_symbol, mean, resolved, Field, TWO_PI};

/// Coefficients of the cubic (`k1`), quadratic (`k2`) and linear (`gamma`) terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub k1: f64,
    pub k2: f64,
    #[serde(default)]
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(k1: f64, k2: f64, gamma: f64) -> Result<Self> {
        let p = Self { k1, k2, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k1.is_finite() && self.k2.is_finite() && self.gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("non-finite coefficients {self:?}")))
        }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { k1: 1.0, k2: 1.0, gamma: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateU {
    pub t: f64,
    pub u: Field,
}

/// One row of the diagnostics table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticsSample {
    pub t: f64,
    pub mu0: f64,
    pub mu1sq: f64,
    pub h1: f64,
    pub h2_printed: f64,
    pub h2_k1scaled: f64,
    pub min_ux: f64,
    pub max_m: f64,
    pub min_m: f64,
    pub min_gamma: f64,
    /// See [`h2_invariant`].
    pub h2_invariant: f64,
    /// `inf k1 m u_x`, one half of the split breaking indicator.
    pub min_k1_m_ux: f64,
    /// `inf k2 u_x`, the other half.
    pub min_k2_ux: f64,
}

impl DiagnosticsSample {
    pub const CSV_HEADER: &'static str =
        "t,mu0,mu1sq,H1,H2_printed,H2_k1scaled,min_ux,min_m,max_m,min_Gamma,H2_invariant,min_k1_m_ux,min_k2_ux";

    pub fn csv_row(&self) -> String {
        format!(
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            self.t,
            self.mu0,
            self.mu1sq,
            self.h1,
            self.h2_printed,
            self.h2_k1scaled,
            self.min_ux,
            self.min_m,
            self.max_m,
            self.min_gamma,
            self.h2_invariant,
            self.min_k1_m_ux,
            self.min_k2_ux
        )
    }

    pub fn max_abs_m(&self) -> f64 {
        self.max_m.abs().max(self.min_m.abs())
    }
}

/// `m = mu(u) - u_xx`.
pub fn momentum(u: &Field) -> Field {
    let n = u.grid().n();
    let mu = mean(u);
    let mut m = u.spectrum().apply(|k| -deriv_symbol(n, k, 2)).to_field().into_values();
    for v in m.iter_mut() {
        *v += mu;
    }
    Field::from_raw(u.grid().clone(), m)
}

/// Symbol of `d/dx A^{-1}` (equal to `A^{-1} d/dx`).
fn dx_ainv_symbol(n: usize, k: i64) -> Complex64 {
    if k == 0 || k == (n / 2) as i64 {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, 1.0 / (TWO_PI * k as f64))
    }
}

/// Right-hand side `u_t` of the nonlocal u-form.
///
/// Local and nonlocal product chains are each transformed once and
/// truncated by the two-thirds rule; the linear `gamma` term is not truncated.
pub fn rhs_u(u: &Field, params: &ModelParams) -> Result<Field> {
    let grid = u.grid();
    let n = grid.n();
    let ModelParams { k1, k2, gamma } = *params;
    let mu = mean(u);
    let s = u.spectrum();
    let ux = s.clone().apply(|k| deriv_symbol(n, k, 1)).to_field();
    let uv = u.values();
    let uxv = ux.values();

    let mut local = Vec::with_capacity(n);
    let mut nonlocal = Vec::with_capacity(n);
    let mut cube = 0.0;
    for j in 0..n {
        let (a, d) = (uv[j], uxv[j]);
        let d2 = d * d;
        cube += d2 * d;
        local.push(Complex64::new(
            k1 * (2.0 * mu * a - d2 / 3.0) * d + k2 * a * d,
            0.0,
        ));
        nonlocal.push(Complex64::new(
            k1 * (2.0 * mu * mu * a + mu * d2) + k2 * (2.0 * mu * a + 0.5 * d2),
            0.0,
        ));
    }
    let cube_mean = cube / n as f64;
    grid.forward_in_place(&mut local);
    grid.forward_in_place(&mut nonlocal);

    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let k = grid.wavenumber(i);
        let sym = dx_ainv_symbol(n, k);
        let mut r = -gamma * sym * s.coeffs()[i];
        if resolved(n, k) {
            r -= local[i] + sym * nonlocal[i];
        }
        out[i] = r;
    }
    out[0] -= k1 * cube_mean / 3.0;
    grid.inverse_in_place(&mut out);
    let values: Vec<f64> = out.into_iter().map(|c| c.re).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::BlowupSuspected { t: None });
    }
    Ok(Field::from_raw(grid.clone(), values))
}

/// `Gamma = (k1 m + k2) u_x` with its factors `M = m u_x` and `P = u_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct BreakingFields {
    pub gamma: Field,
    pub m_ux: Field,
    pub ux: Field,
}

pub fn gamma_field(u: &Field, params: &ModelParams) -> BreakingFields {
    let m = momentum(u);
    let ux = deriv(u, 1).expect("order 1 is valid");
    let mut gamma = Vec::with_capacity(u.len());
    let mut m_ux = Vec::with_capacity(u.len());
    for (mv, dv) in m.values().iter().zip(ux.values()) {
        gamma.push((params.k1 * mv + params.k2) * dv);
        m_ux.push(mv * dv);
    }
    BreakingFields {
        gamma: Field::from_raw(u.grid().clone(), gamma),
        m_ux: Field::from_raw(u.grid().clone(), m_ux),
        ux,
    }
}

/// Quartic part `int(mu^2 u^2 + mu u u_x^2 - u_x^4/12)` and the printed
/// quadratic part `int(mu u + u u_x^2/2)`.
fn h2_parts(u: &Field, ux: &Field) -> (f64, f64, f64) {
    let mu = mean(u);
    let n = u.len() as f64;
    let mut quartic = 0.0;
    let mut printed = 0.0;
    let mut squared = 0.0;
    for (&a, &d) in u.values().iter().zip(ux.values()) {
        let d2 = d * d;
        quartic += mu * mu * a * a + mu * a * d2 - d2 * d2 / 12.0;
        printed += mu * a + 0.5 * a * d2;
        squared += mu * a * a + 0.5 * a * d2;
    }
    (quartic / n, printed / n, squared / n)
}

/// `k1 int(mu^2 u^2 + mu u u_x^2 - u_x^4/12) + k2 int(mu u^2 + u u_x^2/2)`.
///
/// Same as the printed second Hamiltonian except for the factor `k1` on the
/// quartic part and `mu u -> mu u^2` in the quadratic part. With both
/// changes the time derivative along the flow vanishes for every `(k1, k2)`.
pub fn h2_invariant(u: &Field, params: &ModelParams) -> f64 {
    let ux = deriv(u, 1).expect("order 1 is valid");
    let (quartic, _, squared) = h2_parts(u, &ux);
    params.k1 * quartic + params.k2 * squared
}

/// Diagnostics row at time `t`.
pub fn conserved_at(t: f64, u: &Field, params: &ModelParams) -> DiagnosticsSample {
    let m = momentum(u);
    let bf = gamma_field(u, params);
    let ux = &bf.ux;
    let (quartic, printed, squared) = h2_parts(u, ux);
    let n = u.len() as f64;
    let h1 = 0.5 * m.values().iter().zip(u.values()).map(|(a, b)| a * b).sum::<f64>() / n;
    let mu1sq = ux.values().iter().map(|d| d * d).sum::<f64>() / n;
    let min_k1_m_ux = bf.m_ux.values().iter().map(|v| params.k1 * v).fold(f64::INFINITY, f64::min);
    let min_k2_ux = ux.values().iter().map(|v| params.k2 * v).fold(f64::INFINITY, f64::min);
    DiagnosticsSample {
        t,
        mu0: mean(u),
        mu1sq,
        h1,
        h2_printed: quartic + params.k2 * printed,
        h2_k1scaled: params.k1 * quartic + params.k2 * printed,
        min_ux: ux.min(),
        max_m: m.max(),
        min_m: m.min(),
        min_gamma: bf.gamma.min(),
        h2_invariant: params.k1 * quartic + params.k2 * squared,
        min_k1_m_ux,
        min_k2_ux,
    }
}

pub fn conserved(u: &Field, params: &ModelParams) -> DiagnosticsSample {
    conserved_at(0.0, u, params)
}
