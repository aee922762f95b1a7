//! Bahadur-efficiency-optimal truncation and weighting for a few signal
//! strengths, and the APE optimum at a finite n.

use tfisher::{optimize, EfficiencyConfig, EfficiencyKind, GridSpec, SignalModel};

fn main() -> tfisher::Result<()> {
    let config = EfficiencyConfig::new(100, 0.05)?;
    for mu in [0.5, 1.0, 1.5, 2.0] {
        let d = SignalModel::new(0.5, mu, 100)?.distortion();
        let s = optimize(EfficiencyKind::Be, &d, &config, &GridSpec::coarse())?;
        println!(
            "BE  mu = {mu}: tau* = ({:.2}, {:.2}), value {:.4}",
            s.maximizer.0, s.maximizer.1, s.max_value
        );
    }
    let d = SignalModel::new(0.02, 3.0, 100)?.distortion();
    let s = optimize(EfficiencyKind::Ape, &d, &config, &GridSpec::coarse())?;
    println!(
        "APE eps = 0.02, mu = 3: tau* = ({:.3}, {:.3}), value {:.4}",
        s.maximizer.0, s.maximizer.1, s.max_value
    );
    Ok(())
}
