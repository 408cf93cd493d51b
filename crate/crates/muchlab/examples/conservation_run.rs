//! Integrates smooth data and prints the drift of the conserved quantities.

use std::f64::consts::TAU;

use muchlab::grid::PeriodicGrid;
use muchlab::model::{ModelParams, StateU};
use muchlab::timestepper::{integrate, StepControl};

fn main() -> muchlab::Result<()> {
    let params = ModelParams { k1: 1.0, k2: 1.0, gamma: 0.0 };
    let grid = PeriodicGrid::new(256)?;
    let u0 = grid.sample(|x| 0.5 + 0.1 * (TAU * x).sin())?;
    let run = integrate(&StateU { t: 0.0, u: u0 }, 1.0, &params, &StepControl::default())?;
    let d0 = &run.diagnostics[0];
    println!("{:>8} {:>10} {:>10} {:>10} {:>10} {:>10}", "t", "mu1^2", "H1", "H2", "H2 inv", "min Gamma");
    let every = (run.diagnostics.len() / 20).max(1);
    for d in run.diagnostics.iter().step_by(every).chain(run.diagnostics.last()) {
        println!(
            "{:8.4} {:10.2e} {:10.2e} {:10.2e} {:10.2e} {:10.2}",
            d.t,
            d.mu1sq / d0.mu1sq - 1.0,
            d.h1 / d0.h1 - 1.0,
            d.h2_printed / d0.h2_printed - 1.0,
            d.h2_invariant / d0.h2_invariant - 1.0,
            d.min_gamma,
        );
    }
    println!("{} after {} steps ({} rejected)", run.termination.name(), run.accepted_steps, run.rejected_steps);
    Ok(())
}
