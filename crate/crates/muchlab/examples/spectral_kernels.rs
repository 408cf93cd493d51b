//! Green function convolution against the spectral inverse of `1 - d^2/dx^2`.

use std::f64::consts::TAU;

use muchlab::green::{convolve_g, convolve_gx, green_g, green_gx};
use muchlab::grid::{apply_a, apply_ainv, deriv, PeriodicGrid};

fn main() -> muchlab::Result<()> {
    println!("g(0) = {}, g(1/2) = {}, g_x(0) = {}", green_g(0.0), green_g(0.5), green_gx(0.0));
    for n in [16, 64, 256, 1024] {
        let grid = PeriodicGrid::new(n)?;
        let f = grid.sample(|x| 1.0 + (TAU * x).cos() + 0.2 * (3.0 * TAU * x).sin())?;
        let u = apply_ainv(&f);
        let ux = deriv(&u, 1)?;
        println!(
            "n = {n:4}  |g*f - A^-1 f| = {:.2e}  |g_x*f - (A^-1 f)_x| = {:.2e}  |A A^-1 f - f| = {:.2e}",
            convolve_g(&f).sup_distance(&u),
            convolve_gx(&f).sup_distance(&ux),
            apply_a(&u).sup_distance(&f),
        );
    }
    Ok(())
}
