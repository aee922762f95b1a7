//! Exact p-values of several TFisher members for one set of p-values.

use tfisher::{null_pvalue, statistic, PValues, TFisherParams};

fn main() -> tfisher::Result<()> {
    let p = PValues::new(vec![0.01, 0.03, 0.8, 0.2, 0.004, 0.6, 0.45, 0.09])?;
    let members = [
        ("fisher", TFisherParams::fisher()),
        ("tpm 0.05", TFisherParams::hard(0.05)?),
        ("soft 0.05", TFisherParams::soft(0.05)?),
        ("general (0.1, 0.5)", TFisherParams::new(0.1, 0.5)?),
    ];
    println!("{:<20} {:>12} {:>12}", "member", "statistic", "p-value");
    for (name, params) in members {
        println!(
            "{name:<20} {:>12.6} {:>12.6}",
            statistic(&p, params),
            null_pvalue(&p, params)?
        );
    }
    Ok(())
}
