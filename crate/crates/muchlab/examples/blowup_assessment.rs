//! Evaluates every blow-up criterion on a few data sets and runs the PDE
//! until the detector fires.

use std::f64::consts::TAU;

use muchlab::blowup::{assess_all, runtime_detector, von_mises_data, DetectorThresholds};
use muchlab::grid::{Field, PeriodicGrid};
use muchlab::model::{ModelParams, StateU};
use muchlab::timestepper::{integrate, StepControl};

fn main() -> muchlab::Result<()> {
    let grid = PeriodicGrid::new(512)?;
    let cases: Vec<(&str, Field, ModelParams)> = vec![
        ("sin/2pi", grid.sample(|x| (TAU * x).sin() / TAU)?, ModelParams { k1: 1.0, k2: 1.0, gamma: 0.0 }),
        ("concentrated, a = 4", von_mises_data(&grid, 0.01, 4.0, 20.0, 0.5)?, ModelParams { k1: 1.0, k2: 1.0, gamma: 0.0 }),
        ("concentrated, a = 1", von_mises_data(&grid, 0.01, 1.0, 20.0, 0.5)?, ModelParams { k1: 1.0, k2: 0.5, gamma: 0.0 }),
    ];
    for (name, u0, params) in cases {
        println!("{name} (k1 = {}, k2 = {})", params.k1, params.k2);
        let mut bound = f64::INFINITY;
        for a in assess_all(&u0, &params, None)? {
            let failed = a.failed();
            match a.t_star {
                Some(t) if a.hypotheses_met() => {
                    bound = bound.min(t);
                    println!("  {:24} t* = {t:.6}", a.criterion.name());
                }
                _ => println!("  {:24} not applicable: {}", a.criterion.name(), failed.join(", ")),
            }
        }
        if bound.is_finite() && bound < 2.0 {
            let run = integrate(&StateU { t: 0.0, u: u0 }, 1.05 * bound, &params, &StepControl::default())?;
            let report = runtime_detector(&run.diagnostics, &DetectorThresholds::default())?;
            println!("  run: {}, detector: {:?}", run.termination.name(), report.first());
        }
    }
    Ok(())
}
