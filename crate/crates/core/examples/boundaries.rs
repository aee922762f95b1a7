//! Boundaries of the signal strength region where truncation beats
//! Fisher's combination, in the limit and at finite n.

use tfisher::efficiency::{boundary_a, boundary_b, mu_lower_bound, mu_lower_bound_a};
use tfisher::EfficiencyConfig;

fn main() -> tfisher::Result<()> {
    println!("limit cutoff mu = {:.5}", mu_lower_bound()?);
    let configs = [EfficiencyConfig::new(50, 0.05)?, EfficiencyConfig::new(5000, 0.05)?];
    for c in &configs {
        println!("n = {}: cutoff mu = {:.4}", c.n(), mu_lower_bound_a(c)?);
    }
    println!("{:>5} {:>10} {:>10} {:>10}", "mu", "h_b", "h_a(50)", "h_a(5000)");
    for i in 0..=8 {
        let mu = 1.0 + 0.25 * i as f64;
        let ha: Vec<String> = configs
            .iter()
            .map(|c| boundary_a(mu, c).map_or("-".into(), |v| format!("{v:.5}")))
            .collect();
        println!("{mu:>5.2} {:>10.5} {:>10} {:>10}", boundary_b(mu)?, ha[0], ha[1]);
    }
    Ok(())
}
