//! Periodic Green function of `A = mu - d^2/dx^2` and convolutions with it.

use num_complex::Complex64;

use crate::grid::{Field, TWO_PI};

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// `g(x) = (frac(x) - 1/2)^2 / 2 + 23/24`.
pub fn green_g(x: f64) -> f64 {
    let s = frac(x) - 0.5;
    (12.0 * s * s + 23.0) / 24.0
}

/// Derivative of `g`, with the coincidence value `g_x(0) = 0`.
pub fn green_gx(x: f64) -> f64 {
    let f = frac(x);
    if f == 0.0 {
        0.0
    } else {
        f - 0.5
    }
}

/// Fourier coefficient of `g` at wavenumber `k`.
///
/// From the series `(x - 1/2)^2 = 1/12 + sum_{k>=1} cos(2 pi k x)/(pi^2 k^2)`:
/// the mean is `1/24 + 23/24 = 1` and each `e^{2 pi i k x}` carries `1/(4 pi^2 k^2)`.
pub fn green_coefficient(k: i64) -> f64 {
    if k == 0 {
        1.0 / 24.0 + 23.0 / 24.0
    } else {
        let pk = std::f64::consts::PI * k as f64;
        0.5 / (2.0 * pk * pk)
    }
}

/// Fourier coefficient of `g_x`: the termwise derivative of the series of `g`.
pub fn green_x_coefficient(n: usize, k: i64) -> Complex64 {
    if k == (n / 2) as i64 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, TWO_PI * k as f64) * green_coefficient(k)
}

/// `g * f` on the circle, by the convolution theorem.
pub fn convolve_g(f: &Field) -> Field {
    f.spectrum()
        .apply(|k| Complex64::new(green_coefficient(k), 0.0))
        .to_field()
}

/// `g_x * f` on the circle, by the convolution theorem.
pub fn convolve_gx(f: &Field) -> Field {
    let n = f.grid().n();
    f.spectrum().apply(|k| green_x_coefficient(n, k)).to_field()
}
