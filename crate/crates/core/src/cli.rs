//! Batch command surface. Every command prints one machine-readable record
//! that echoes the effective configuration and the library version.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 numeric or model error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::altdist::{power_detailed, SignalModel};
use crate::assoc::{self, GeneMethod, Sidedness};
use crate::efficiency::{
    boundary_a, boundary_b, mu_lower_bound, mu_lower_bound_a, optimize, EfficiencyConfig, EfficiencyKind, GridSpec,
};
use crate::error::{Error, Result};
use crate::montecarlo::{self, CalibrationBudget, Method, PowerRecord, SimulationPlan};
use crate::nulldist::NullDistribution;
use crate::omnibus::{OmnibusTest, TauGrid};
use crate::output::fmt_sig;
use crate::statistic::{statistic, PValues, TFisherParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

const TSV_DIGITS: usize = 6;

#[derive(Debug, Parser)]
#[command(name = "tfisher", version, about = "Truncated and weighted Fisher combination tests")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Worker threads for parallel sections; results do not depend on it.
    #[arg(long, env = "TFISHER_WORKERS", global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Tsv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// TFisher statistic of a p-value file.
    Stat(PValueArgs),
    /// TFisher statistic and its exact null p-value.
    Pvalue(PValueArgs),
    /// Omnibus statistic and p-value over a parameter grid.
    Opvalue(OmnibusArgs),
    /// Analytical power under the Gaussian mixture alternative.
    Power(PowerArgs),
    /// Grid search for the most efficient truncation and weighting.
    Optimize(OptimizeArgs),
    /// Boundary curves of the optimal truncation region.
    Boundary(BoundaryArgs),
    /// Monte Carlo null survival or power.
    Simulate(SimulateArgs),
    /// Gene-level association tests from delimited files.
    Assoc(AssocArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Stat(_) => "stat",
            Self::Pvalue(_) => "pvalue",
            Self::Opvalue(_) => "opvalue",
            Self::Power(_) => "power",
            Self::Optimize(_) => "optimize",
            Self::Boundary(_) => "boundary",
            Self::Simulate(_) => "simulate",
            Self::Assoc(_) => "assoc",
        }
    }
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
struct ParamArgs {
    /// Truncation threshold τ₁ in (0, 1].
    #[arg(long)]
    tau1: f64,
    /// Weighting threshold τ₂ > 0; defaults to τ₁ (soft thresholding).
    #[arg(long)]
    tau2: Option<f64>,
}

impl ParamArgs {
    fn params(&self) -> Result<TFisherParams> {
        TFisherParams::new(self.tau1, self.tau2.unwrap_or(self.tau1))
    }
}

#[derive(Debug, Args, Serialize)]
struct PValueArgs {
    #[command(flatten)]
    #[serde(flatten)]
    params: ParamArgs,
    /// File with one p-value per line; `#` starts a comment.
    #[arg(long)]
    pvals: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GridArgs {
    /// Soft-thresholding grid τ values, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "pairs")]
    taus: Vec<f64>,
    /// General grid as τ₁:τ₂ pairs, comma separated.
    #[arg(long, value_delimiter = ',')]
    pairs: Vec<String>,
}

impl GridArgs {
    fn grid(&self) -> Result<TauGrid> {
        if !self.pairs.is_empty() {
            let pairs = self
                .pairs
                .iter()
                .map(|s| {
                    let (a, b) = s
                        .split_once(':')
                        .ok_or_else(|| Error::domain(format!("grid pair '{s}' is not of the form tau1:tau2")))?;
                    let num = |x: &str| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::domain(format!("'{x}' in grid pair '{s}' is not a number")))
                    };
                    TFisherParams::new(num(a)?, num(b)?)
                })
                .collect::<Result<Vec<_>>>()?;
            TauGrid::new(pairs)
        } else if !self.taus.is_empty() {
            TauGrid::soft(&self.taus)
        } else {
            Ok(TauGrid::default())
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct OmnibusArgs {
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridArgs,
    /// File with one p-value per line; `#` starts a comment.
    #[arg(long)]
    pvals: PathBuf,
}

#[derive(Debug, Clone, Copy, Args, Serialize)]
struct SignalArgs {
    /// Number of p-values.
    #[arg(long)]
    n: usize,
    /// Signal proportion ε in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Signal mean μ ≥ 0.
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
}

impl SignalArgs {
    fn model(&self) -> Result<SignalModel> {
        SignalModel::new(self.eps, self.mu, self.n)
    }
}

#[derive(Debug, Args, Serialize)]
struct PowerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    signal: SignalArgs,
    #[command(flatten)]
    #[serde(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Debug, Args, Serialize)]
struct OptimizeArgs {
    /// Efficiency measure: BE, APR or APE.
    #[arg(long, value_parser = parse_kind)]
    kind: EfficiencyKind,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    mu: f64,
    /// Number of p-values, used by APE.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Level, used by APE.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    tau1_step: f64,
    #[arg(long, default_value_t = 0.01)]
    tau2_step: f64,
    #[arg(long, default_value_t = 3.0)]
    tau2_max: f64,
    /// Skip the local refinement after the grid search.
    #[arg(long)]
    no_refine: bool,
    /// Also write the full surface as CSV (tau1, tau2, value).
    #[arg(long)]
    surface: Option<PathBuf>,
}

fn parse_kind(s: &str) -> std::result::Result<EfficiencyKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args, Serialize)]
struct BoundaryArgs {
    /// Finite-n boundary for this many p-values, in addition to the limit.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    mu_min: f64,
    #[arg(long, default_value_t = 3.0)]
    mu_max: f64,
    #[arg(long, default_value_t = 41)]
    points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MethodName {
    Tfisher,
    Omnibus,
    Rtp,
    Artp,
    Atpm,
}

#[derive(Debug, Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    signal: SignalArgs,
    #[arg(long, default_value_t = 10_000)]
    replicates: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Two-sided input p-values `2Φ̄(|X|)`.
    #[arg(long)]
    two_sided: bool,
    #[arg(long, value_enum, default_value_t = MethodName::Tfisher)]
    method: MethodName,
    /// τ₁ for the tfisher method.
    #[arg(long)]
    tau1: Option<f64>,
    /// τ₂ for the tfisher method; defaults to τ₁.
    #[arg(long)]
    tau2: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    grid: GridArgs,
    /// Rank for the rtp method.
    #[arg(long)]
    k: Option<usize>,
    /// Ranks for the artp method, comma separated.
    #[arg(long, value_delimiter = ',')]
    ranks: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Null replicates per rank reference of calibrated methods.
    #[arg(long, default_value_t = CalibrationBudget::default().reference)]
    reference: usize,
    /// Null replicates for calibrating the minimum p-value.
    #[arg(long, default_value_t = CalibrationBudget::default().calibration)]
    calibration: usize,
    /// Estimate the null survival at these values instead of power.
    #[arg(long, value_delimiter = ',')]
    survival: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
struct AssocArgs {
    /// Phenotype file: one 0/1 column with a header.
    #[arg(long)]
    phenotype: PathBuf,
    /// Covariate file with a header; an intercept is added unless present.
    #[arg(long)]
    covariates: Option<PathBuf>,
    /// Directory of per-gene genotype files (.csv, .tsv or .txt).
    #[arg(long)]
    genes: PathBuf,
    /// Soft-thresholding τ of a single TFisher test.
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Weighting τ₂; defaults to the truncation τ.
    #[arg(long)]
    tau2: Option<f64>,
    /// Run the omnibus test over this soft grid instead.
    #[arg(long, value_delimiter = ',')]
    omnibus: Vec<f64>,
    /// One-sided input p-values `Φ̄(X)`.
    #[arg(long)]
    one_sided: bool,
    /// Write the per-gene table here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write sorted p-values with uniform quantiles here.
    #[arg(long)]
    qq: Option<PathBuf>,
}

/// Reads one p-value per line, skipping blank lines and `#` comments.
pub fn read_pvalues(path: &Path) -> Result<PValues> {
    let text = std::fs::read_to_string(path)?;
    parse_pvalues(&text)
}

/// Parses p-value text; errors carry the 1-based line number.
pub fn parse_pvalues(text: &str) -> Result<PValues> {
    let mut values = Vec::new();
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        last = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("'{line}' is not a number"),
        })?;
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("p-value {v} is outside (0, 1]"),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: last.max(1),
            message: "no p-values found".into(),
        });
    }
    PValues::new(values)
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Parse { .. } | Error::Io(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `args` (including the program name), runs the command, and
/// returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let result = match cli.workers {
        Some(0) => Err(Error::domain("worker count must be at least 1")),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::domain(e.to_string()))
            .and_then(|pool| pool.install(|| execute(&cli))),
        None => execute(&cli),
    };
    match result.and_then(|record| emit(out, cli.format, &record)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn execute(cli: &Cli) -> Result<Value> {
    let result = match &cli.command {
        Command::Stat(a) => {
            let p = read_pvalues(&a.pvals)?;
            let params = a.params.params()?;
            json!({ "n": p.len(), "statistic": statistic(&p, params) })
        }
        Command::Pvalue(a) => {
            let p = read_pvalues(&a.pvals)?;
            let params = a.params.params()?;
            let w = statistic(&p, params);
            let dist = NullDistribution::new(p.len(), params)?;
            let pvalue = dist.pvalue(w)?;
            json!({ "n": p.len(), "statistic": w, "pvalue": pvalue, "zero_mass": dist.zero_mass() })
        }
        Command::Opvalue(a) => {
            let p = read_pvalues(&a.pvals)?;
            let grid = a.grid.grid()?;
            let test = OmnibusTest::new(p.len(), grid.clone())?;
            let s = test.statistic(&p)?;
            let pv = test.pvalue_at(s.w_o)?;
            json!({
                "n": p.len(),
                "grid": grid,
                "w_o": s.w_o,
                "argmin": s.argmin,
                "statistics": s.statistics,
                "entry_pvalues": s.pvalues,
                "pvalue": pv.pvalue,
                "std_error": pv.std_error,
            })
        }
        Command::Power(a) => {
            let r = power_detailed(&a.signal.model()?, a.params.params()?, a.alpha)?;
            serde_json::to_value(r).expect("serializable")
        }
        Command::Optimize(a) => optimize_command(a)?,
        Command::Boundary(a) => boundary_command(a)?,
        Command::Simulate(a) => simulate_command(a)?,
        Command::Assoc(a) => assoc_command(a)?,
    };
    Ok(json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": cli.command.name(),
        "config": {
            "format": cli.format,
            "args": serde_json::to_value(&cli.command).expect("serializable")[cli.command.name()].clone(),
        },
        "result": result,
    }))
}

fn optimize_command(a: &OptimizeArgs) -> Result<Value> {
    let config = EfficiencyConfig::new(a.n, a.alpha)?;
    let d = SignalModel::new(a.eps, a.mu, a.n)?.distortion();
    let grid = GridSpec {
        tau1_step: a.tau1_step,
        tau1_max: 1.0,
        tau2_step: a.tau2_step,
        tau2_max: a.tau2_max,
        refine: !a.no_refine,
    };
    let surface = optimize(a.kind, &d, &config, &grid)?;
    if let Some(path) = &a.surface {
        surface.write_csv(std::fs::File::create(path)?)?;
    }
    Ok(json!({
        "kind": a.kind,
        "grid_optimum": { "tau1": surface.grid_optimum.0, "tau2": surface.grid_optimum.1 },
        "grid_value": surface.grid_value,
        "optimum": { "tau1": surface.maximizer.0, "tau2": surface.maximizer.1 },
        "value": surface.max_value,
    }))
}

fn boundary_command(a: &BoundaryArgs) -> Result<Value> {
    if a.points < 2 || !(a.mu_min < a.mu_max) {
        return Err(Error::domain("need at least 2 points and mu_min < mu_max"));
    }
    let config = a.n.map(|n| EfficiencyConfig::new(n, a.alpha)).transpose()?;
    let rows = (0..a.points)
        .map(|i| {
            let mu = a.mu_min + (a.mu_max - a.mu_min) * i as f64 / (a.points - 1) as f64;
            let h_b = boundary_b(mu)?;
            let h_a = config.as_ref().and_then(|c| boundary_a(mu, c).ok());
            Ok(json!({ "mu": mu, "h_b": h_b, "h_a": h_a }))
        })
        .collect::<Result<Vec<_>>>()?;
    let lower_a = config.as_ref().map(mu_lower_bound_a).transpose()?;
    Ok(json!({
        "mu_lower_bound": mu_lower_bound()?,
        "mu_lower_bound_a": lower_a,
        "rows": rows,
    }))
}

fn simulate_command(a: &SimulateArgs) -> Result<Value> {
    let model = a.signal.model()?;
    let plan = SimulationPlan::alternative(&model, a.replicates, a.seed)?
        .two_sided(a.two_sided)
        .with_budget(CalibrationBudget {
            reference: a.reference,
            calibration: a.calibration,
        })?;
    let method = match a.method {
        MethodName::Tfisher => {
            let tau1 = a
                .tau1
                .ok_or_else(|| Error::domain("--tau1 is required for the tfisher method"))?;
            Method::TFisher {
                params: TFisherParams::new(tau1, a.tau2.unwrap_or(tau1))?,
            }
        }
        MethodName::Omnibus => Method::Omnibus { grid: a.grid.grid()? },
        MethodName::Rtp => Method::Rtp {
            k: a.k.ok_or_else(|| Error::domain("--k is required for the rtp method"))?,
        },
        MethodName::Artp => Method::Artp {
            ranks: if a.ranks.is_empty() {
                Method::default_artp_ranks(a.signal.n)
            } else {
                a.ranks.clone()
            },
        },
        MethodName::Atpm => Method::Atpm {
            grid: if a.grid.taus.is_empty() && a.grid.pairs.is_empty() {
                Method::default_atpm_grid()
            } else {
                a.grid.grid()?
            },
        },
    };
    if !a.survival.is_empty() {
        let Method::TFisher { params } = method else {
            return Err(Error::domain("--survival is only available for the tfisher method"));
        };
        let rows = montecarlo::simulate_null_survival(&plan, params, &a.survival)?;
        return Ok(json!({ "method": method, "rows": rows }));
    }
    let est = montecarlo::simulate_power(&plan, &method, a.alpha)?;
    let record = PowerRecord::new(&method, &plan, a.alpha, &est);
    Ok(json!({ "method": method, "rows": [record] }))
}

#[derive(Serialize)]
struct GeneRow {
    gene: String,
    n_snv: usize,
    rank: Option<usize>,
    statistic: Option<f64>,
    pvalue: Option<f64>,
    error: Option<String>,
}

fn assoc_command(a: &AssocArgs) -> Result<Value> {
    let y = assoc::read_phenotype(&a.phenotype)?;
    let z = match &a.covariates {
        Some(p) => {
            let (_, z) = assoc::read_covariates(p)?;
            if z.nrows() != y.len() {
                return Err(Error::domain(format!(
                    "covariates have {} rows but the phenotype has {}",
                    z.nrows(),
                    y.len()
                )));
            }
            z
        }
        None => nalgebra::DMatrix::from_element(y.len(), 1, 1.0),
    };
    let genes = assoc::read_genes(&a.genes)?;
    let method = if a.omnibus.is_empty() {
        GeneMethod::Single {
            params: TFisherParams::new(a.tau, a.tau2.unwrap_or(a.tau))?,
        }
    } else {
        GeneMethod::Omnibus {
            grid: TauGrid::soft(&a.omnibus)?,
        }
    };
    let sided = if a.one_sided {
        Sidedness::OneSided
    } else {
        Sidedness::TwoSided
    };
    let reports = assoc::run_pipeline(&y, &z, &genes, &method, sided)?;
    if let Some(path) = &a.out {
        assoc::write_results(std::io::BufWriter::new(std::fs::File::create(path)?), &reports)?;
    }
    if let Some(path) = &a.qq {
        assoc::write_qq(std::io::BufWriter::new(std::fs::File::create(path)?), &reports)?;
    }
    let rows: Vec<GeneRow> = reports
        .into_iter()
        .map(|r| {
            let (rank, statistic, pvalue, error) = match r.result {
                Ok(g) => (Some(g.rank), Some(g.statistic), Some(g.pvalue), None),
                Err(e) => (None, None, None, Some(e)),
            };
            GeneRow {
                gene: r.gene,
                n_snv: r.n_snv,
                rank,
                statistic,
                pvalue,
                error,
            }
        })
        .collect();
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    Ok(json!({
        "subjects": y.len(),
        "covariate_columns": z.ncols(),
        "method": method,
        "sided": sided,
        "genes": rows.len(),
        "failed": failed,
        "rows": rows,
    }))
}

fn emit(out: &mut dyn Write, format: Format, record: &Value) -> Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, record).map_err(|e| Error::Io(e.into()))?;
            writeln!(out)?;
        }
        Format::Tsv => write_tsv(out, record)?,
    }
    Ok(())
}

fn tsv_scalar(v: &Value) -> String {
    match v {
        Value::Null => "NA".into(),
        Value::Number(n) if n.is_f64() => fmt_sig(n.as_f64().expect("f64"), TSV_DIGITS),
        Value::String(s) => s.replace(['\t', '\n'], " "),
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            items.iter().map(tsv_scalar).collect::<Vec<_>>().join(",")
        }
        other => other.to_string(),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, x, out);
            }
        }
        other => out.push((prefix.to_string(), tsv_scalar(other))),
    }
}

/// Key-value lines for the header fields, then a table for `result.rows`.
fn write_tsv(out: &mut dyn Write, record: &Value) -> Result<()> {
    let mut head = record.clone();
    let rows = head
        .get_mut("result")
        .and_then(|r| r.as_object_mut())
        .and_then(|r| r.remove("rows"));
    let mut pairs = Vec::new();
    flatten("", &head, &mut pairs);
    for (k, v) in pairs {
        writeln!(out, "{k}\t{v}")?;
    }
    if let Some(Value::Array(rows)) = rows {
        let flat: Vec<Vec<(String, String)>> = rows
            .iter()
            .map(|r| {
                let mut cells = Vec::new();
                flatten("", r, &mut cells);
                cells
            })
            .collect();
        if let Some(first) = flat.first() {
            writeln!(out)?;
            let header: Vec<&str> = first.iter().map(|(k, _)| k.as_str()).collect();
            writeln!(out, "{}", header.join("\t"))?;
            for cells in &flat {
                let line: Vec<&str> = cells.iter().map(|(_, v)| v.as_str()).collect();
                writeln!(out, "{}", line.join("\t"))?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("tfisher").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn parses_pvalue_text() {
        let p = parse_pvalues("# header\n0.01\n\n0.03  # inline\n0.8\n").unwrap();
        assert_eq!(p.as_slice(), &[0.01, 0.03, 0.8]);
        assert!(matches!(parse_pvalues("0.1\nabc\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_pvalues("0.1\n0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_pvalues("0.1\n1.5\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_pvalues(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_pvalues("# only\n\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_args(&[]).0, EXIT_USAGE);
        assert_eq!(run_args(&["pvalue", "--tau1", "0.05"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["power", "--n", "10", "--tau1", "2"]).0, EXIT_USAGE);
        let (code, out, _) = run_args(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("pvalue"));
    }

    #[test]
    fn infeasible_level_is_explained() {
        let (code, _, err) = run_args(&[
            "power", "--n", "2", "--eps", "0.1", "--mu", "1", "--tau1", "0.01", "--alpha", "0.5",
        ]);
        assert_eq!(code, EXIT_NUMERIC);
        assert!(err.contains("infeasible"), "{err}");
    }

    #[test]
    fn boundary_json_shape() {
        let (code, out, err) = run_args(&["boundary", "--n", "500", "--points", "3"]);
        assert_eq!(code, 0, "{err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["command"], "boundary");
        assert_eq!(v["config"]["args"]["n"], 500);
        assert_eq!(v["result"]["rows"].as_array().unwrap().len(), 3);
        assert!((v["result"]["mu_lower_bound"].as_f64().unwrap() - 0.8486).abs() < 1e-3);
    }

    #[test]
    fn tsv_output() {
        let (code, out, _) = run_args(&["--format", "tsv", "boundary", "--points", "2"]);
        assert_eq!(code, 0);
        assert!(out.contains("command\tboundary"));
        assert!(out.contains("mu\th_b\th_a"));
        assert!(out.lines().any(|l| l.starts_with("1\t")));
    }

    #[test]
    fn grid_pairs() {
        let g = GridArgs {
            taus: vec![],
            pairs: vec!["0.05:0.05".into(), "0.1:0.5".into()],
        };
        assert_eq!(g.grid().unwrap().len(), 2);
        let bad = GridArgs {
            taus: vec![],
            pairs: vec!["0.05".into()],
        };
        assert!(bad.grid().is_err());
    }
}
