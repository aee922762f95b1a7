//! Monte Carlo check of the exact null survival, and a power comparison of
//! the omnibus test with the calibrated adaptive comparators.

use tfisher::montecarlo::CalibrationBudget;
use tfisher::{
    null_survival, simulate_null_survival, simulate_power, Method, SignalModel, SimulationPlan, TFisherParams, TauGrid,
};

fn main() -> tfisher::Result<()> {
    let params = TFisherParams::soft(0.05)?;
    let plan = SimulationPlan::null(20, 20_000, 1)?;
    for s in simulate_null_survival(&plan, params, &[2.0, 5.0, 10.0, 20.0])? {
        let exact = null_survival(s.w, 20, params)?;
        println!(
            "w = {:>5}: simulated {:.4} ± {:.4}, exact {exact:.4}",
            s.w, s.survival, s.std_error
        );
    }

    let n = 50;
    let model = SignalModel::new(0.04, 2.5, n)?;
    let plan = SimulationPlan::alternative(&model, 1_000, 2)?.with_budget(CalibrationBudget {
        reference: 500,
        calibration: 2_000,
    })?;
    let methods = [
        Method::Omnibus {
            grid: TauGrid::default(),
        },
        Method::Artp {
            ranks: Method::default_artp_ranks(n),
        },
        Method::Atpm {
            grid: Method::default_atpm_grid(),
        },
    ];
    for m in &methods {
        let e = simulate_power(&plan, m, 0.05)?;
        println!("{:<24} power {:.3} ± {:.3}", m.label(), e.power, e.std_error);
    }
    Ok(())
}
