//! Uniform periodic grid on the unit circle and its FFT-based spectral twin.
//!
//! Coefficients follow the FFT ordering: slot `i` holds wavenumber `i` for
//! `i <= n/2` and `i - n` above that, normalized so that `c_0` is the mean.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub(crate) const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// `n` uniform nodes `x_j = j/n` on the circle of length one.
///
/// FFT plans are immutable and shared behind `Arc`, so clones are cheap and
/// a grid may be read from several threads at once.
#[derive(Clone)]
pub struct PeriodicGrid {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl PeriodicGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(n));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Signed wavenumber stored in FFT slot `i`, in `-n/2+1 ..= n/2`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Samples `f` at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.clone(), (0..self.n).map(|j| f(self.node(j))).collect())
    }

    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
    }

    pub(crate) fn check_same(&self, other: &PeriodicGrid) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::GridMismatch(self.n, other.n))
        }
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid").field("n", &self.n).finish()
    }
}

/// Real samples of a periodic function. Constructors reject non-finite data.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: PeriodicGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField { index });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &PeriodicGrid, c: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![c; grid.n()])
    }

    pub fn zeros(grid: &PeriodicGrid) -> Self {
        Self::from_raw(grid.clone(), vec![0.0; grid.n()])
    }

    /// Skips validation. Callers guarantee finiteness.
    pub(crate) fn from_raw(grid: PeriodicGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (j, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = j;
            }
        }
        best
    }

    /// Pointwise map, validated.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid, validated.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Field::new(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }

    pub fn spectrum(&self) -> Spectrum {
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.grid.forward_in_place(&mut buf);
        Spectrum {
            grid: self.grid.clone(),
            coeffs: buf,
        }
    }
}

/// Fourier coefficients of a real field.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    grid: PeriodicGrid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_coeffs(grid: PeriodicGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of wavenumber `k`, `-n/2 < k <= n/2`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        self.coeffs[k.rem_euclid(n) as usize]
    }

    /// Largest violation of `c_{-k} = conj(c_k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        (0..n)
            .map(|i| (self.coeffs[(n - i) % n] - self.coeffs[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Multiplies slot `i` by `symbol(k_i)`.
    pub fn apply(mut self, symbol: impl Fn(i64) -> Complex64) -> Self {
        for i in 0..self.coeffs.len() {
            let k = self.grid.wavenumber(i);
            self.coeffs[i] *= symbol(k);
        }
        self
    }

    /// Inverse transform, keeping real parts.
    pub fn to_field(&self) -> Field {
        let mut buf = self.coeffs.clone();
        self.grid.inverse_in_place(&mut buf);
        Field::from_raw(self.grid.clone(), buf.into_iter().map(|c| c.re).collect())
    }
}

/// Sample mean, the periodic trapezoid rule.
pub fn mean(f: &Field) -> f64 {
    f.values.iter().sum::<f64>() / f.len() as f64
}

/// Symbol `(2 pi i k)^order`, Nyquist dropped for odd orders.
pub(crate) fn deriv_symbol(n: usize, k: i64, order: u32) -> Complex64 {
    if order % 2 == 1 && k == (n / 2) as i64 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, TWO_PI * k as f64).powu(order)
}

/// Spectral derivative of order 1, 2 or 3.
pub fn deriv(f: &Field, order: u32) -> Result<Field> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidParams(format!("derivative order {order} not in 1..=3")));
    }
    let n = f.grid.n();
    Ok(f.spectrum().apply(|k| deriv_symbol(n, k, order)).to_field())
}

/// Symbol of `A = mu - d^2/dx^2`.
pub(crate) fn a_symbol(k: i64) -> f64 {
    if k == 0 {
        1.0
    } else {
        let w = TWO_PI * k as f64;
        w * w
    }
}

pub fn apply_a(f: &Field) -> Field {
    f.spectrum().apply(|k| Complex64::new(a_symbol(k), 0.0)).to_field()
}

pub fn apply_ainv(f: &Field) -> Field {
    f.spectrum()
        .apply(|k| Complex64::new(1.0 / a_symbol(k), 0.0))
        .to_field()
}

/// True for modes kept by the two-thirds rule.
pub(crate) fn resolved(n: usize, k: i64) -> bool {
    3 * k.unsigned_abs() as usize <= n
}

/// Zeroes every mode with `|k| > n/3`.
pub fn dealias(f: &Field) -> Field {
    let n = f.grid.n();
    f.spectrum()
        .apply(|k| {
            if resolved(n, k) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .to_field()
}

/// Trigonometric interpolant of a field together with its first two derivatives.
///
/// Reproduces node values exactly when `x` is a node.
#[derive(Clone, Debug)]
pub struct Interpolant {
    nodes: Vec<f64>,
    dx_nodes: Vec<f64>,
    dxx_nodes: Vec<f64>,
    half: Vec<Complex64>,
}

/// Value, first and second derivative at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub dx: f64,
    pub dxx: f64,
}

impl Interpolant {
    pub fn new(f: &Field) -> Self {
        let s = f.spectrum();
        let n = f.grid.n();
        let dx = s.clone().apply(|k| deriv_symbol(n, k, 1)).to_field();
        let dxx = s.clone().apply(|k| deriv_symbol(n, k, 2)).to_field();
        Self {
            nodes: f.values.clone(),
            dx_nodes: dx.values,
            dxx_nodes: dxx.values,
            half: s.coeffs[..=n / 2].to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn eval(&self, x: f64) -> Jet {
        let n = self.n();
        let x = x - x.floor();
        let s = x * n as f64;
        if s == s.floor() {
            let j = (s as usize) % n;
            return Jet {
                value: self.nodes[j],
                dx: self.dx_nodes[j],
                dxx: self.dxx_nodes[j],
            };
        }
        let nyq = n / 2;
        let step = Complex64::from_polar(1.0, TWO_PI * x);
        let mut phase = step;
        let mut value = self.half[0].re;
        let mut dx = 0.0;
        let mut dxx = 0.0;
        for k in 1..nyq {
            let w = TWO_PI * k as f64;
            let z = self.half[k] * phase;
            value += 2.0 * z.re;
            dx -= 2.0 * w * z.im;
            dxx -= 2.0 * w * w * z.re;
            if k % 64 == 0 {
                phase = Complex64::from_polar(1.0, TWO_PI * x * (k + 1) as f64);
            } else {
                phase *= step;
            }
        }
        let c = (TWO_PI * nyq as f64 * x).cos();
        let w = TWO_PI * nyq as f64;
        value += self.half[nyq].re * c;
        dxx -= w * w * self.half[nyq].re * c;
        Jet { value, dx, dxx }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    fn random_band_limited(g: &PeriodicGrid, coeffs: &[(f64, f64)]) -> Field {
        g.sample(|x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| a * (TWO_PI * k as f64 * x).cos() + b * (TWO_PI * k as f64 * x).sin())
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn grid_rejects_odd_and_small() {
        assert_eq!(PeriodicGrid::new(7).unwrap_err(), Error::InvalidGrid(7));
        assert_eq!(PeriodicGrid::new(6).unwrap_err(), Error::InvalidGrid(6));
        assert!(PeriodicGrid::new(10).is_ok());
        let g = grid(16);
        let xs = g.nodes();
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(xs[0], 0.0);
        assert!(*xs.last().unwrap() < 1.0);
    }

    #[test]
    fn field_rejects_non_finite() {
        let g = grid(8);
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert_eq!(Field::new(g.clone(), v).unwrap_err(), Error::InvalidField { index: 3 });
        assert!(matches!(Field::new(g, vec![0.0; 4]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn mean_of_odd_mode_and_constant() {
        let g = grid(64);
        let f = g.sample(|x| (TWO_PI * x).sin() / TWO_PI).unwrap();
        assert!(mean(&f).abs() < 1e-14);
        assert_eq!(mean(&Field::constant(&g, 2.5).unwrap()), 2.5);
    }

    #[test]
    fn derivatives_of_trig_modes() {
        let g = grid(64);
        let s = g.sample(|x| (TWO_PI * x).sin()).unwrap();
        let ds = deriv(&s, 1).unwrap();
        let exact = g.sample(|x| TWO_PI * (TWO_PI * x).cos()).unwrap();
        assert!(ds.sup_distance(&exact) < 1e-12);

        let c = g.sample(|x| (TWO_PI * x).cos()).unwrap();
        let d2 = deriv(&c, 2).unwrap();
        let exact2 = g.sample(|x| -TWO_PI * TWO_PI * (TWO_PI * x).cos()).unwrap();
        assert!(d2.sup_distance(&exact2) < 1e-10);

        let k = Field::constant(&g, 3.0).unwrap();
        assert!(deriv(&k, 1).unwrap().sup_norm() < 1e-14);
        assert!(deriv(&k, 4).is_err());
    }

    #[test]
    fn odd_derivative_drops_nyquist() {
        let g = grid(16);
        let f = g.sample(|x| (std::f64::consts::PI * 16.0 * x).cos()).unwrap();
        assert!(deriv(&f, 1).unwrap().sup_norm() < 1e-12);
        assert!(deriv(&f, 3).unwrap().sup_norm() < 1e-9);
        let d2 = deriv(&f, 2).unwrap();
        let w = std::f64::consts::PI * 16.0;
        assert!((d2.values()[0] + w * w).abs() < 1e-9);
    }

    #[test]
    fn operator_a_symbol_examples() {
        let g = grid(64);
        let one = Field::constant(&g, 1.0).unwrap();
        assert!(apply_a(&one).sup_distance(&one) < 1e-15);
        assert!(apply_ainv(&one).sup_distance(&one) < 1e-15);

        let c = g.sample(|x| (TWO_PI * x).cos()).unwrap();
        let ac = g.sample(|x| TWO_PI * TWO_PI * (TWO_PI * x).cos()).unwrap();
        assert!(apply_a(&c).sup_distance(&ac) < 1e-11);
        let aic = g.sample(|x| (TWO_PI * x).cos() / (TWO_PI * TWO_PI)).unwrap();
        assert!(apply_ainv(&c).sup_distance(&aic) < 1e-15);

        let f = g.sample(|x| 0.7 + (2.0 * TWO_PI * x).cos()).unwrap();
        let af = g
            .sample(|x| 0.7 + 4.0 * TWO_PI * TWO_PI * (2.0 * TWO_PI * x).cos())
            .unwrap();
        assert!(apply_a(&f).sup_distance(&af) < 1e-10);
    }

    #[test]
    fn dealias_examples() {
        let g = grid(64);
        let high = g.sample(|x| (TWO_PI * 31.0 * x).cos()).unwrap();
        assert!(dealias(&high).sup_norm() < 1e-13);
        let low = random_band_limited(&g, &[(0.3, 0.0), (1.0, -0.5), (0.0, 0.25)]);
        assert!(dealias(&low).sup_distance(&low) < 1e-14);
        // the cutoff mode 21 <= 64/3 survives, 22 does not
        let edge = g.sample(|x| (TWO_PI * 21.0 * x).sin()).unwrap();
        assert!(dealias(&edge).sup_distance(&edge) < 1e-13);
        let over = g.sample(|x| (TWO_PI * 22.0 * x).sin()).unwrap();
        assert!(dealias(&over).sup_norm() < 1e-13);
    }

    #[test]
    fn spectrum_is_hermitian_and_normalized() {
        let g = grid(32);
        let f = g.sample(|x| 1.5 + (TWO_PI * 3.0 * x).cos()).unwrap();
        let s = f.spectrum();
        assert!(s.hermitian_defect() < 1e-15);
        assert!((s.coeff(0).re - 1.5).abs() < 1e-15);
        assert!((s.coeff(3).re - 0.5).abs() < 1e-15);
        assert!((s.coeff(-3).re - 0.5).abs() < 1e-15);
        assert_eq!(g.wavenumber(16), 16);
        assert_eq!(g.wavenumber(17), -15);
    }

    #[test]
    fn interpolant_matches_analytic_and_nodes() {
        let g = grid(32);
        let f = g
            .sample(|x| 0.2 + (TWO_PI * x).sin() + 0.3 * (TWO_PI * 5.0 * x).cos())
            .unwrap();
        let it = Interpolant::new(&f);
        for &x in &[0.013, 0.377, 0.5001, 0.99] {
            let j = it.eval(x);
            let v = 0.2 + (TWO_PI * x).sin() + 0.3 * (TWO_PI * 5.0 * x).cos();
            let d = TWO_PI * (TWO_PI * x).cos() - 0.3 * 5.0 * TWO_PI * (TWO_PI * 5.0 * x).sin();
            let dd = -TWO_PI * TWO_PI * (TWO_PI * x).sin()
                - 0.3 * 25.0 * TWO_PI * TWO_PI * (TWO_PI * 5.0 * x).cos();
            assert!((j.value - v).abs() < 1e-13);
            assert!((j.dx - d).abs() < 1e-11);
            assert!((j.dxx - dd).abs() < 1e-9);
        }
        let at_node = it.eval(g.node(7));
        assert_eq!(at_node.value, f.values()[7]);
        assert_eq!(it.eval(1.0 + g.node(3)).value, f.values()[3]);
    }

    #[test]
    fn interpolant_long_sums_stay_accurate() {
        let g = grid(1024);
        let f = g.sample(|x| (TWO_PI * 300.0 * x).sin()).unwrap();
        let it = Interpolant::new(&f);
        let x = 0.123456789;
        assert!((it.eval(x).value - (TWO_PI * 300.0 * x).sin()).abs() < 1e-11);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trip_reproduces_values(vals in proptest::collection::vec(-10.0f64..10.0, 64)) {
            let g = grid(64);
            let f = Field::new(g, vals).unwrap();
            let back = f.spectrum().to_field();
            let tol = 10.0 * f64::EPSILON * f.sup_norm().max(1.0) * 8.0;
            prop_assert!(back.sup_distance(&f) <= tol);
        }

        #[test]
        fn ainv_after_a_restores_band_limited_fields(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..9),
            log_n in 3u32..11,
        ) {
            let g = grid(1 << log_n);
            let f = random_band_limited(&g, &coeffs);
            let scale = f.sup_norm().max(1e-300);
            prop_assert!(apply_ainv(&apply_a(&f)).sup_distance(&f) / scale < 1e-12);
        }

        #[test]
        fn a_after_ainv_restores_fields_on_coarse_grids(vals in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let g = grid(32);
            let f = Field::new(g, vals).unwrap();
            let scale = f.sup_norm().max(1e-300);
            prop_assert!(apply_a(&apply_ainv(&f)).sup_distance(&f) / scale < 1e-12);
        }

        #[test]
        fn derivative_has_zero_mean(vals in proptest::collection::vec(-5.0f64..5.0, 32)) {
            let g = grid(32);
            let f = Field::new(g, vals).unwrap();
            for order in 1..=3 {
                let d = deriv(&f, order).unwrap();
                prop_assert!(mean(&d).abs() < 1e-12 * d.sup_norm().max(1.0));
            }
        }

        #[test]
        fn dealias_is_idempotent(vals in proptest::collection::vec(-5.0f64..5.0, 48)) {
            let g = grid(48);
            let f = Field::new(g, vals).unwrap();
            let once = dealias(&f);
            let twice = dealias(&once);
            prop_assert!(twice.sup_distance(&once) < 1e-13);
        }
    }
}
