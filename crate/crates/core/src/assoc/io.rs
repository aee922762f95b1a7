//! Delimited-file ingestion and table output for the association pipeline.

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::{fit_null_logistic, GeneMethod, GeneResult, Sidedness};
use crate::error::{Error, Result};
use crate::output::fmt_sig;

const MISSING: [&str; 5] = ["", "NA", "na", "NaN", "."];
const TSV_DIGITS: usize = 6;

/// A header row and numeric columns.
struct Table {
    headers: Vec<String>,
    columns: Vec<Vec<f64>>,
}

fn parse_error(path: &Path, line: usize, message: impl std::fmt::Display) -> Error {
    Error::Parse {
        line,
        message: format!("{}: {message}", path.display()),
    }
}

/// Reads a CSV or TSV file with a header row. The delimiter is a tab if the
/// header contains one, a comma otherwise; `#` starts a comment line.
fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    let header_line = text.lines().find(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let Some(header_line) = header_line else {
        return Err(parse_error(path, 1, "file has no header row"));
    };
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(path, csv_line(&e), e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record.map_err(|e| parse_error(path, csv_line(&e), e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        for (j, field) in record.iter().enumerate() {
            if MISSING.contains(&field) {
                return Err(parse_error(
                    path,
                    line,
                    format!("missing value in column '{}'; missing data must be removed", headers[j]),
                ));
            }
            let v: f64 = field.parse().map_err(|_| {
                parse_error(
                    path,
                    line,
                    format!("'{field}' in column '{}' is not a number", headers[j]),
                )
            })?;
            if !v.is_finite() {
                return Err(parse_error(
                    path,
                    line,
                    format!("non-finite value in column '{}'", headers[j]),
                ));
            }
            columns[j].push(v);
        }
    }
    if columns.first().is_none_or(Vec::is_empty) {
        return Err(parse_error(path, 2, "file has no data rows"));
    }
    Ok(Table { headers, columns })
}

fn csv_line(e: &csv::Error) -> usize {
    e.position().map_or(0, |p| p.line() as usize)
}

fn to_matrix(columns: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(columns[0].len(), columns.len(), |i, j| columns[j][i])
}

/// One 0/1 phenotype column with a header.
pub fn read_phenotype(path: impl AsRef<Path>) -> Result<DVector<f64>> {
    let path = path.as_ref();
    let t = read_table(path)?;
    if t.columns.len() != 1 {
        return Err(parse_error(
            path,
            1,
            format!("expected one phenotype column, found {}", t.columns.len()),
        ));
    }
    if let Some(i) = t.columns[0].iter().position(|&v| v != 0.0 && v != 1.0) {
        return Err(parse_error(path, i + 2, "phenotype must be 0 or 1"));
    }
    Ok(DVector::from_vec(t.columns.into_iter().next().expect("one column")))
}

/// Covariate columns with a header. An intercept column is prepended
/// unless one of the columns is already constant.
pub fn read_covariates(path: impl AsRef<Path>) -> Result<(Vec<String>, DMatrix<f64>)> {
    let t = read_table(path.as_ref())?;
    let (mut headers, mut columns) = (t.headers, t.columns);
    if !columns.iter().any(|c| c.iter().all(|&v| v == c[0])) {
        headers.insert(0, "(intercept)".into());
        columns.insert(0, vec![1.0; columns[0].len()]);
    }
    Ok((headers, to_matrix(&columns)))
}

/// Genotype dosages of one gene: a column per variant, a row per subject.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneFile {
    pub name: String,
    pub snvs: Vec<String>,
    pub genotype: DMatrix<f64>,
}

/// Reads a gene file; the gene is named after the file stem. Constant
/// variant columns are rejected.
pub fn read_gene(path: impl AsRef<Path>) -> Result<GeneFile> {
    let path = path.as_ref();
    let t = read_table(path)?;
    if let Some(j) = t.columns.iter().position(|c| c.iter().all(|&v| v == c[0])) {
        return Err(Error::Model(format!(
            "{}: variant column '{}' is constant",
            path.display(),
            t.headers[j]
        )));
    }
    let name = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok(GeneFile {
        name,
        genotype: to_matrix(&t.columns),
        snvs: t.headers,
    })
}

/// All `.csv`, `.tsv` and `.txt` gene files in a directory, by file name.
pub fn read_genes(dir: impl AsRef<Path>) -> Result<Vec<GeneFile>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir.as_ref())?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "csv" || e == "tsv" || e == "txt"));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::domain(format!("no gene files in {}", dir.as_ref().display())));
    }
    paths.iter().map(read_gene).collect()
}

/// Outcome for one gene; failures are reported rather than aborting the
/// whole run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneReport {
    pub gene: String,
    pub n_snv: usize,
    pub result: std::result::Result<GeneResult, String>,
}

/// Fits the null model once and tests every gene in parallel; reports are
/// in input order.
pub fn run_pipeline(
    phenotype: &DVector<f64>,
    covariates: &DMatrix<f64>,
    genes: &[GeneFile],
    method: &GeneMethod,
    sided: Sidedness,
) -> Result<Vec<GeneReport>> {
    let fit = fit_null_logistic(phenotype, covariates)?;
    Ok(genes
        .par_iter()
        .map(|g| GeneReport {
            gene: g.name.clone(),
            n_snv: g.genotype.ncols(),
            result: fit.gene_test(&g.genotype, method, sided).map_err(|e| e.to_string()),
        })
        .collect())
}

/// TSV of gene, variant count, rank, statistic, p-value and status.
pub fn write_results(mut w: impl Write, reports: &[GeneReport]) -> Result<()> {
    writeln!(w, "gene\tn_snv\trank\tstatistic\tpvalue\tstatus")?;
    for r in reports {
        match &r.result {
            Ok(g) => writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\tok",
                r.gene,
                r.n_snv,
                g.rank,
                fmt_sig(g.statistic, TSV_DIGITS),
                fmt_sig(g.pvalue, TSV_DIGITS)
            )?,
            Err(e) => writeln!(
                w,
                "{}\t{}\tNA\tNA\tNA\t{}",
                r.gene,
                r.n_snv,
                e.replace(['\t', '\n'], " ")
            )?,
        }
    }
    Ok(())
}

/// Gene p-values sorted ascending next to uniform quantiles
/// `(i − 0.5)/m`, on both scales, ready for a Q-Q plot.
pub fn write_qq(mut w: impl Write, reports: &[GeneReport]) -> Result<()> {
    let mut ok: Vec<(&str, f64)> = reports
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|g| (r.gene.as_str(), g.pvalue)))
        .collect();
    ok.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    let m = ok.len() as f64;
    writeln!(w, "gene\tobserved\texpected\tneg_log10_observed\tneg_log10_expected")?;
    for (i, (gene, p)) in ok.iter().enumerate() {
        let e = (i as f64 + 0.5) / m;
        writeln!(
            w,
            "{gene}\t{}\t{}\t{}\t{}",
            fmt_sig(*p, TSV_DIGITS),
            fmt_sig(e, TSV_DIGITS),
            fmt_sig(-p.log10(), TSV_DIGITS),
            fmt_sig(-e.log10(), TSV_DIGITS)
        )?;
    }
    Ok(())
}
