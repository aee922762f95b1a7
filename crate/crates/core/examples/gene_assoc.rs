//! Gene-level association on synthetic cohorts: a few null genes and one
//! gene with a causal variant, written to a results table.

use tfisher::assoc::{run_pipeline, write_results, GeneFile, GeneMethod, Sidedness, SyntheticDesign};
use tfisher::{TFisherParams, TauGrid};

fn main() -> tfisher::Result<()> {
    let base = SyntheticDesign::null(600, 8, 2).with_causal(2, 0.8).generate(3)?;
    let mut genes = vec![GeneFile {
        name: "CAUSAL".into(),
        snvs: (1..=8).map(|i| format!("v{i}")).collect(),
        genotype: base.genotype().clone(),
    }];
    for k in 0..4 {
        // Genotypes drawn independently of the phenotype.
        let other = SyntheticDesign::null(600, 6, 0).generate(100 + k)?;
        genes.push(GeneFile {
            name: format!("NULL{k}"),
            snvs: (1..=6).map(|i| format!("v{i}")).collect(),
            genotype: other.genotype().clone(),
        });
    }
    for method in [
        GeneMethod::Single {
            params: TFisherParams::soft(0.05)?,
        },
        GeneMethod::Single {
            params: TFisherParams::fisher(),
        },
        GeneMethod::Omnibus {
            grid: TauGrid::default(),
        },
    ] {
        println!("{method:?}");
        let reports = run_pipeline(
            base.phenotype(),
            base.covariates(),
            &genes,
            &method,
            Sidedness::TwoSided,
        )?;
        write_results(std::io::stdout().lock(), &reports)?;
        println!();
    }
    Ok(())
}
