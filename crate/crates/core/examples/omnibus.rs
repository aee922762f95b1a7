//! Omnibus test over the default soft-thresholding grid.

use tfisher::{OmnibusTest, PValues, TauGrid};

fn main() -> tfisher::Result<()> {
    let p = PValues::new(vec![0.002, 0.04, 0.3, 0.55, 0.71, 0.12, 0.9, 0.25, 0.66, 0.08])?;
    let test = OmnibusTest::new(p.len(), TauGrid::default())?;
    let s = test.statistic(&p)?;
    for (params, (w, pv)) in test.grid().pairs().iter().zip(s.statistics.iter().zip(&s.pvalues)) {
        println!("{params}: W = {w:.4}, p = {pv:.5}");
    }
    let pv = test.pvalue_at(s.w_o)?;
    println!("min p = {:.5} at entry {}", s.w_o, s.argmin);
    println!("omnibus p = {:.5} (integration SE {:.1e})", pv.pvalue, pv.std_error);
    Ok(())
}
