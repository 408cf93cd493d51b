//! Operator identities on arbitrary grid fields.

use muchlab::grid::{apply_a, apply_ainv, deriv, mean, Field, PeriodicGrid};
use proptest::prelude::*;

fn field(n: usize, seed: &[f64]) -> Field {
    let g = PeriodicGrid::new(n).unwrap();
    let values = (0..n).map(|j| seed[j % seed.len()] * (1.0 + (j as f64 * 0.37).sin())).collect();
    Field::new(g, values).unwrap()
}

/// Modes `|k| <= seed.len()` with the seed as coefficients.
fn band_limited(n: usize, seed: &[f64]) -> Field {
    let g = PeriodicGrid::new(n).unwrap();
    g.sample(|x| {
        seed.iter()
            .enumerate()
            .map(|(k, c)| c * (std::f64::consts::TAU * k as f64 * x + 0.3 * k as f64).cos())
            .sum()
    })
    .unwrap()
}

fn sizes() -> impl Strategy<Value = usize> {
    (3u32..=10).prop_map(|p| 1usize << p)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    /// Fails for n >= 128: rounding of A^-1 f is amplified by (2 pi k)^2 in A.
    #[test]
    fn a_inverts_ainv_on_any_field(n in sizes(), seed in prop::collection::vec(-1.0f64..1.0, 1..64)) {
        let f = field(n, &seed);
        let back = apply_a(&apply_ainv(&f));
        prop_assert!(back.sup_distance(&f) <= 1e-12 * f.sup_norm(), "n = {}: {:e}", n, back.sup_distance(&f) / f.sup_norm());
    }

    #[test]
    fn ainv_inverts_a_on_band_limited_fields(n in sizes(), seed in prop::collection::vec(-1.0f64..1.0, 1..4)) {
        let f = band_limited(n, &seed);
        let back = apply_ainv(&apply_a(&f));
        prop_assert!(back.sup_distance(&f) <= 1e-12 * f.sup_norm());
    }

    #[test]
    fn derivatives_have_zero_mean(n in sizes(), seed in prop::collection::vec(-1.0f64..1.0, 1..64), order in 1u32..4) {
        let f = field(n, &seed);
        let d = deriv(&f, order).unwrap();
        prop_assert!(mean(&d).abs() <= 1e-14 * d.sup_norm());
    }
}
