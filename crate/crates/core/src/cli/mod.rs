//! Command-line front end.

pub mod model_file;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::boxcount::{default_eps_grid, estimate_box_dim, write_boxdim_csv, DEFAULT_OFFSETS};
use crate::conditions::{
    check_osc, check_strong_osc, condition6_diagnostic, condition7_search,
    default_eps_grid as eps7, default_lambda_grid, default_m_grid, write_reports_csv, ConditionId,
    ConditionReport, Verdict,
};
use crate::dimension::{solve_beta, solve_moran, solve_truncated};
use crate::error::{Error, Result};
use crate::exec::{set_thread_cap, Exec};
use crate::ifs::model::IFSModel;
use crate::mqv::{
    geometric_grid, lattice_classify, unit_ball_volume, ConstantEstimator, GridEstimator,
    MQVEstimate, McConfig, McEstimator, MqvEstimator,
};
use crate::sampler::{io_err, sample_cloud, sample_cloud_coords, write_cloud_csv};
use model_file::{load_model, parse_number, ModelFile};

pub const THREADS_ENV: &str = "MORANLAB_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "moranlab",
    version,
    about = "Dimension, sampling and mean quadratic variation of infinite self-similar sets"
)]
pub struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Run every loop on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Similarity dimension s, its truncations s^(m), and the correlation exponent β.
    SolveDim(SolveDimArgs),
    /// Mean quadratic variation V_β(t) on a grid of radii.
    Mqv(MqvArgs),
    /// Open set conditions and the distance/tail conditions on the head of the family.
    Check(CheckArgs),
    /// Box-counting dimension of a sampled cloud.
    Boxdim(BoxdimArgs),
    /// Sample points from the invariant measure.
    Sample(SampleArgs),
    /// Lattice classification of {−ln ρ_j}.
    Lattice(LatticeArgs),
}

#[derive(Debug, Args)]
pub struct SolveDimArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Comma-separated truncation sizes m.
    #[arg(long, value_delimiter = ',')]
    pub truncations: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EstimatorChoice {
    Mc,
    Grid,
    Both,
}

#[derive(Debug, Args)]
pub struct MqvArgs {
    pub model: PathBuf,
    /// `auto` or a number.
    #[arg(long, default_value = "auto")]
    pub beta: String,
    /// `base^start:end:per_unit` (e.g. `3^-2:-8:4`) or a comma-separated list.
    #[arg(long, default_value = "10^-1:-3:1")]
    pub t_grid: String,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long, value_enum, default_value = "mc")]
    pub estimator: EstimatorChoice,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampling depth as a fraction of t.
    #[arg(long, default_value_t = 0.01)]
    pub depth_ratio: f64,
    /// Grid cell size as a fraction of t.
    #[arg(long, default_value_t = 0.05)]
    pub resolution_ratio: f64,
    /// Replace the estimators by a constant (harness self-test).
    #[arg(long)]
    pub stub_constant: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub model: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "osc,strong,6,7")]
    pub conditions: Vec<String>,
    #[arg(long)]
    pub head: Option<usize>,
    /// `auto` or a number; used by conditions 6 and 7.
    #[arg(long, default_value = "auto")]
    pub beta: String,
}

#[derive(Debug, Args)]
pub struct BoxdimArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_OFFSETS)]
    pub offsets: usize,
    /// Number of dyadic scales below the cloud's extent.
    #[arg(long, default_value_t = 24)]
    pub levels: usize,
    #[arg(long)]
    pub depth_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    pub model: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub depth_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub head: usize,
    #[arg(long, default_value_t = crate::mqv::DEFAULT_LATTICE_TOL)]
    pub tol: f64,
}

const DEFAULT_SEED: u64 = 1;
const DEFAULT_HEAD: usize = 64;
const DEFAULT_DEPTH_TOL: f64 = 1e-9;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(out: &mut dyn Write) -> csv::Writer<&mut dyn Write> {
    csv::Writer::from_writer(out)
}

fn finish(mut w: csv::Writer<&mut dyn Write>) -> Result<()> {
    w.flush().map_err(|e| io_err(csv::Error::from(e)))
}

fn resolve_beta(text: &str, model: &IFSModel, tol: f64) -> Result<f64> {
    if text == "auto" {
        Ok(solve_beta(model.ratios(), model.weights(), tol)?.exponent)
    } else {
        parse_number(text)
    }
}

/// Parses `base^start:end:per_unit` or a comma-separated list of radii.
pub fn parse_t_grid(text: &str) -> Result<Vec<f64>> {
    if let Some((base, range)) = text.split_once('^') {
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Parse(format!(
                "t grid '{text}' is not base^start:end:per_unit"
            )));
        }
        let per: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad points per unit in '{text}'")))?;
        return geometric_grid(
            parse_number(base)?,
            parse_number(parts[0])?,
            parse_number(parts[1])?,
            per,
        );
    }
    let ts = text
        .split(',')
        .map(parse_number)
        .collect::<Result<Vec<_>>>()?;
    if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("radii must be positive"));
    }
    Ok(ts)
}

fn cmd_solve_dim(a: &SolveDimArgs, out: &mut dyn Write) -> Result<i32> {
    let (file, model) = load_model(&a.model)?;
    let tol = a
        .tol
        .or(file.run.tol)
        .unwrap_or(crate::dimension::DEFAULT_TOL);
    let mut w = csv_writer(out);
    w.write_record(["quantity", "m", "exponent", "lo", "hi"])
        .map_err(io_err)?;
    let full = solve_moran(model.ratios(), tol)?;
    let m_full = model
        .num_maps()
        .map_or("inf".to_string(), |n| n.to_string());
    w.write_record([
        "s",
        &m_full,
        &num(full.exponent),
        &num(full.bracket.lo),
        &num(full.bracket.hi),
    ])
    .map_err(io_err)?;
    for &m in &a.truncations {
        let r = solve_truncated(model.ratios(), m, tol)?;
        w.write_record([
            "s",
            &m.to_string(),
            &num(r.exponent),
            &num(r.bracket.lo),
            &num(r.bracket.hi),
        ])
        .map_err(io_err)?;
    }
    match solve_beta(model.ratios(), model.weights(), tol) {
        Ok(b) => w
            .write_record([
                "beta",
                &m_full,
                &num(b.exponent),
                &num(b.bracket.lo),
                &num(b.bracket.hi),
            ])
            .map_err(io_err)?,
        Err(e @ Error::NoFiniteBeta(_)) => eprintln!("beta: {e}"),
        Err(e) => return Err(e),
    }
    finish(w)?;
    Ok(0)
}

/// `v_d 2^{-d} (1 − δ) ε^β` from the best feasible pair of condition (7).
fn lower_bound(model: &IFSModel, beta: f64, exec: Exec) -> Option<f64> {
    let grid = default_lambda_grid(model, DEFAULT_HEAD);
    let s = condition7_search(model, beta, &eps7(), &grid, exec).ok()?;
    let d = model.dim();
    s.best
        .map(|b| unit_ball_volume(d) * 0.5f64.powi(d as i32) * b.margin)
}

fn cmd_mqv(a: &MqvArgs, exec: Exec, out: &mut dyn Write) -> Result<i32> {
    let (file, model) = load_model(&a.model)?;
    let tol = file.run.tol.unwrap_or(1e-12);
    let beta = resolve_beta(&a.beta, &model, tol)?;
    let ts = parse_t_grid(&a.t_grid)?;
    let seed = a.seed.or(file.run.seed).unwrap_or(DEFAULT_SEED);
    let mc = McEstimator {
        model: &model,
        beta,
        config: McConfig {
            n_pairs: a
                .pairs
                .or(file.run.pairs)
                .unwrap_or(McConfig::default().n_pairs),
            depth_ratio: a.depth_ratio,
            seed,
            exec,
        },
    };
    let grid = GridEstimator {
        model: &model,
        beta,
        resolution_ratio: a.resolution_ratio,
        mass_tol: file.run.mass_tol.unwrap_or(1e-9),
        exec,
    };
    let stub = a
        .stub_constant
        .map(|value| ConstantEstimator { value, beta });
    let chosen: Vec<&dyn MqvEstimator> = match (&stub, a.estimator) {
        (Some(s), _) => vec![s],
        (None, EstimatorChoice::Mc) => vec![&mc],
        (None, EstimatorChoice::Grid) => vec![&grid],
        (None, EstimatorChoice::Both) => vec![&mc, &grid],
    };
    let bound = if stub.is_some() {
        None
    } else {
        lower_bound(&model, beta, exec)
    };
    let both = chosen.len() == 2;
    let mut w = csv_writer(out);
    let mut header = vec![
        "t",
        "value",
        "stderr",
        "estimator",
        "beta",
        "n",
        "lower_bound",
    ];
    if both {
        header.push("agreement");
    }
    w.write_record(&header).map_err(io_err)?;
    for &t in &ts {
        let ests = chosen
            .iter()
            .map(|e| e.estimate(t))
            .collect::<Result<Vec<MQVEstimate>>>()?;
        let agree = both.then(|| {
            let (x, y) = (&ests[0], &ests[1]);
            (x.value - y.value).abs() <= 3.0 * (x.stderr + y.stderr)
        });
        for e in &ests {
            let mut row = vec![
                num(e.t),
                num(e.value),
                num(e.stderr),
                e.estimator.to_string(),
                num(e.beta),
                e.n.to_string(),
                bound.map_or(String::new(), num),
            ];
            if let Some(ok) = agree {
                row.push(ok.to_string());
            }
            w.write_record(&row).map_err(io_err)?;
        }
    }
    finish(w)?;
    Ok(0)
}

fn cmd_check(a: &CheckArgs, exec: Exec, out: &mut dyn Write) -> Result<i32> {
    let (file, model) = load_model(&a.model)?;
    let head = a.head.or(file.run.head).unwrap_or(DEFAULT_HEAD);
    let ids = a
        .conditions
        .iter()
        .map(|s| s.parse::<ConditionId>())
        .collect::<Result<Vec<_>>>()?;
    let needs_beta = ids
        .iter()
        .any(|c| matches!(c, ConditionId::DistanceSum | ConditionId::TailRatio));
    let beta = if needs_beta {
        Some(resolve_beta(
            &a.beta,
            &model,
            file.run.tol.unwrap_or(1e-12),
        )?)
    } else {
        None
    };
    let mut reports: Vec<ConditionReport> = Vec::new();
    for id in ids {
        let r = match id {
            ConditionId::Osc => check_osc(&model, head)?,
            ConditionId::StrongOsc => check_strong_osc(&model, head)?,
            ConditionId::DistanceSum => {
                let grid: Vec<usize> = default_m_grid()
                    .into_iter()
                    .filter(|&m| m <= head)
                    .collect();
                condition6_diagnostic(&model, beta.unwrap(), &grid)?
            }
            ConditionId::TailRatio => {
                let grid = default_lambda_grid(&model, head);
                condition7_search(&model, beta.unwrap(), &eps7(), &grid, exec)?.report
            }
        };
        reports.push(r);
    }
    write_reports_csv(&reports, out)?;
    Ok(if reports.iter().any(|r| r.verdict == Verdict::Fails) {
        1
    } else {
        0
    })
}

fn cmd_boxdim(a: &BoxdimArgs, exec: Exec, out: &mut dyn Write) -> Result<i32> {
    let (file, model) = load_model(&a.model)?;
    let n = a.n.or(file.run.points).unwrap_or(100_000);
    let seed = a.seed.or(file.run.seed).unwrap_or(DEFAULT_SEED);
    let depth = a
        .depth_tol
        .or(file.run.depth_tol)
        .unwrap_or(DEFAULT_DEPTH_TOL);
    let pts = sample_cloud_coords(&model, n, depth, seed, exec)?;
    let grid = default_eps_grid(&pts, a.levels);
    let fit = estimate_box_dim(&pts, &grid, a.offsets, seed, exec)?;
    write_boxdim_csv(&fit, out)?;
    Ok(0)
}

fn cmd_sample(a: &SampleArgs, exec: Exec, out: &mut dyn Write) -> Result<i32> {
    let (file, model) = load_model(&a.model)?;
    let n = a.n.or(file.run.points).unwrap_or(1000);
    let seed = a.seed.or(file.run.seed).unwrap_or(DEFAULT_SEED);
    let depth = a
        .depth_tol
        .or(file.run.depth_tol)
        .unwrap_or(DEFAULT_DEPTH_TOL);
    let pts = sample_cloud(&model, n, depth, seed, exec)?;
    write_cloud_csv(&pts, out)?;
    Ok(0)
}

fn cmd_lattice(a: &LatticeArgs, out: &mut dyn Write) -> Result<i32> {
    let (_, model) = load_model(&a.model)?;
    if a.head < 2 {
        return Err(Error::invalid("lattice head must be at least 2"));
    }
    let r = lattice_classify(model.ratios(), a.head, a.tol);
    let mut w = csv_writer(out);
    w.write_record(["key", "value"]).map_err(io_err)?;
    let max_res = r.residuals.iter().copied().fold(0.0, f64::max);
    let rows = [
        ("classification", r.classification.to_string()),
        ("head", r.head.to_string()),
        ("h", r.h.map_or(String::new(), num)),
        ("rho", r.rho.map_or(String::new(), num)),
        (
            "max_residual",
            if r.h.is_some() {
                num(max_res)
            } else {
                String::new()
            },
        ),
    ];
    for (k, v) in rows {
        w.write_record([k, v.as_str()]).map_err(io_err)?;
    }
    finish(w)?;
    Ok(0)
}

fn model_path(c: &Command) -> &Path {
    match c {
        Command::SolveDim(a) => &a.model,
        Command::Mqv(a) => &a.model,
        Command::Check(a) => &a.model,
        Command::Boxdim(a) => &a.model,
        Command::Sample(a) => &a.model,
        Command::Lattice(a) => &a.model,
    }
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: &Cli) -> Result<i32> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a positive integer")))?;
        if n == 0 {
            return Err(Error::invalid(format!(
                "{THREADS_ENV} must be a positive integer"
            )));
        }
        set_thread_cap(n);
    }
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    // Validate the model before creating the output file.
    ModelFile::load(model_path(&cli.command))?;
    let mut sink: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::invalid(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let out: &mut dyn Write = &mut sink;
    let code = match &cli.command {
        Command::SolveDim(a) => cmd_solve_dim(a, out),
        Command::Mqv(a) => cmd_mqv(a, exec, out),
        Command::Check(a) => cmd_check(a, exec, out),
        Command::Boxdim(a) => cmd_boxdim(a, exec, out),
        Command::Sample(a) => cmd_sample(a, exec, out),
        Command::Lattice(a) => cmd_lattice(a, out),
    }?;
    sink.flush()
        .map_err(|e| Error::invalid(format!("write failed: {e}")))?;
    Ok(code)
}

/// Entry point for the binary: parses `std::env::args`, reports errors on
/// stderr and maps them to exit statuses.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_grid_forms() {
        let g = parse_t_grid("3^-2:-8:4").unwrap();
        assert_eq!(g.len(), 25);
        assert!((g[0] - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(parse_t_grid("0.1, 1/100").unwrap(), vec![0.1, 0.01]);
        assert!(parse_t_grid("3^-2:-8").is_err());
        assert!(parse_t_grid("0.1,-1").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
