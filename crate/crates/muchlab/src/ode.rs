//! Classical RK4 and step-doubling error control on flat state vectors.

/// One RK4 step of the autonomous system `y' = f(y)`.
pub(crate) fn rk4<E>(
    y: &[f64],
    dt: f64,
    f: &mut impl FnMut(&[f64]) -> Result<Vec<f64>, E>,
) -> Result<Vec<f64>, E> {
    let axpy = |a: f64, k: &[f64]| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + a * k).collect() };
    let k1 = f(y)?;
    let k2 = f(&axpy(0.5 * dt, &k1))?;
    let k3 = f(&axpy(0.5 * dt, &k2))?;
    let k4 = f(&axpy(dt, &k3))?;
    Ok((0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Result of one step-doubling attempt.
pub(crate) struct Attempt {
    /// Two half steps.
    pub y: Vec<f64>,
    /// Richardson estimate of the error in `y`.
    pub err: f64,
}

pub(crate) fn doubled_step<E>(
    y: &[f64],
    dt: f64,
    f: &mut impl FnMut(&[f64]) -> Result<Vec<f64>, E>,
) -> Result<Attempt, E> {
    let full = rk4(y, dt, f)?;
    let half = rk4(y, 0.5 * dt, f)?;
    let two = rk4(&half, 0.5 * dt, f)?;
    let diff = two
        .iter()
        .zip(&full)
        .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    Ok(Attempt { y: two, err: diff / 15.0 })
}

/// Step-size multiplier from the 1/5-power rule, clipped to `[0.2, 5]`.
pub(crate) fn step_factor(err: f64, tol: f64) -> f64 {
    if err == 0.0 {
        return 5.0;
    }
    (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0)
}

pub(crate) fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}
