//! Slope along a characteristic of mean-zero data against the exact law,
//! with and without the cubic term.

use std::f64::consts::TAU;

use muchlab::characteristics::{exact_ux_mu0zero, mu0zero_pole, trace_characteristic};
use muchlab::grid::PeriodicGrid;
use muchlab::model::{ModelParams, StateU};
use muchlab::timestepper::{integrate, StepControl};

fn main() -> muchlab::Result<()> {
    let mu1 = 0.5f64.sqrt();
    let t_star = mu0zero_pole(-1.0, mu1, 1.0)?;
    println!("pole from x0 = 1/2: t* = {t_star}");
    let control = StepControl { abs_tol: 1e-11, rel_tol: 1e-11, ..StepControl::default() };
    let grid = PeriodicGrid::new(1024)?;
    for k1 in [0.0, 1.0] {
        let params = ModelParams { k1, k2: 1.0, gamma: 0.0 };
        let u0 = grid.sample(|x| (TAU * x).sin() / TAU)?;
        let run = integrate(&StateU { t: 0.0, u: u0 }, 1.2, &params, &control)?;
        let trace = trace_characteristic(&run, 0.25, &params)?;
        println!("k1 = {k1}: {} at t = {:.4}", run.termination.name(), run.final_state.t);
        let mut next = 0.0;
        for s in &trace.samples {
            if s.t >= next {
                let law = exact_ux_mu0zero(s.t, 0.0, mu1, 1.0)?;
                println!("  t = {:.3}  q = {:.5}  u_x = {:+.6}  law = {:+.6}  m = {:.3}", s.t, s.q, s.ux, law, s.m);
                next += 0.1;
            }
        }
    }
    Ok(())
}
