//! Travelling peakons and a three-peakon interaction under each bracket.

use muchlab::model::ModelParams;
use muchlab::peakons::{amplitude_for_speed, integrate_peakons, PeakonFormulation, PeakonSystem};
use muchlab::timestepper::StepControl;

fn main() -> muchlab::Result<()> {
    for (k1, k2) in [(0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
        let params = ModelParams { k1, k2, gamma: 0.0 };
        let roots = amplitude_for_speed(1.0, &params)?.roots;
        println!("k1 = {k1}, k2 = {k2}: speed 1 needs a in {roots:?}");
    }

    let params = ModelParams { k1: 1.0, k2: 1.0, gamma: 0.0 };
    let sys = PeakonSystem::new(vec![0.5, 0.3, 0.2], vec![0.1, 0.4, 0.7])?;
    for formulation in [PeakonFormulation::Reconciled, PeakonFormulation::SourceBracket, PeakonFormulation::AsPrinted] {
        match integrate_peakons(&sys, 2.0, &params, &StepControl::default(), formulation) {
            Ok(tr) => {
                let end = tr.last();
                println!("{formulation:?}: t = {}, p = {:.6?}, q = {:.6?}, sum p = {}", end.t, end.p, end.q, end.sum_p);
            }
            Err(e) => println!("{formulation:?}: {e}"),
        }
    }
    Ok(())
}
