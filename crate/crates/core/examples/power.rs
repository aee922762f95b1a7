//! Analytical power against a sparse Gaussian mixture, compared with
//! simulation.

use tfisher::altdist::power_detailed;
use tfisher::{simulate_power, Method, SignalModel, SimulationPlan, TFisherParams};

fn main() -> tfisher::Result<()> {
    let model = SignalModel::new(0.05, 2.0, 100)?;
    let alpha = 0.05;
    let plan = SimulationPlan::alternative(&model, 5_000, 7)?;
    for params in [
        TFisherParams::soft(0.05)?,
        TFisherParams::hard(0.05)?,
        TFisherParams::fisher(),
    ] {
        let analytic = power_detailed(&model, params, alpha)?;
        let empirical = simulate_power(&plan, &Method::TFisher { params }, alpha)?;
        println!(
            "{params}: analytical {:.4} (critical value {:.3}), simulated {:.4} ± {:.4}",
            analytic.power, analytic.critical_value, empirical.power, empirical.std_error
        );
    }
    Ok(())
}
