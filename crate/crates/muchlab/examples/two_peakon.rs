//! Logistic amplitude exchange of two peakons next to the integrated pair.

use muchlab::model::ModelParams;
use muchlab::peakons::{integrate_peakons, two_peakon_amplitudes, two_peakon_closed_form, PeakonFormulation};
use muchlab::timestepper::StepControl;

fn main() -> muchlab::Result<()> {
    let params = ModelParams { k1: 0.0, k2: 1.0, gamma: 0.0 };
    let a = 0.75;
    let b = params.k2 * a * (a - 0.5);
    let start = two_peakon_closed_form(a, 0.3, b, 0.0, 0.1, 0.0, &params)?;
    let tr = integrate_peakons(&start, 10.0, &params, &StepControl::default(), PeakonFormulation::Reconciled)?;
    println!("{:>6} {:>12} {:>12} {:>10} {:>8}", "t", "p1 ode", "p1 closed", "diff", "q2-q1");
    let mut next = 0.0;
    for s in &tr.samples {
        if s.t >= next {
            let exact = two_peakon_amplitudes(a, b, 0.0, s.t).0;
            println!("{:6.2} {:12.8} {:12.8} {:10.2e} {:8.4}", s.t, s.p[0], exact, s.p[0] - exact, (s.q_unwrapped[1] - s.q_unwrapped[0]).rem_euclid(1.0));
            next += 1.0;
        }
    }
    Ok(())
}
