use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use vstat::measures::Interval;
use vstat::spectrum::{PointStatus, SpectrumPoint, SpectrumSolver};
use vstat::{Measure, MeasureClass};

use crate::config::Config;
use crate::output::{cell, csv_writer, read_kernel, write_json, LogBase};
use crate::CliError;

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct SpectrumArgs {
    /// Kernel JSON file.
    #[arg(long)]
    pub kernel: PathBuf,
    /// `bernoulli` or `markov`; defaults to `bernoulli` for k = 1 and `markov` for k = 2.
    #[arg(long)]
    pub class: Option<MeasureClass>,
    /// Solve at one value; an empty fiber exits with status 3.
    #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
    pub alpha: Option<f64>,
    /// Sweep this many evenly spaced values and write a CSV curve.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Sweep range (defaults to the spectrum domain).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], requires = "grid")]
    pub range: Option<Vec<f64>>,
    /// Seed of the random solver starts.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub random_starts: Option<usize>,
    /// Output path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON with the domain and the detected discontinuities (sweeps only).
    #[arg(long, requires = "grid")]
    pub report: Option<PathBuf>,
}

impl SpectrumArgs {
    pub fn apply(&self, cfg: &mut Config) {
        if let Some(s) = self.seed {
            cfg.solver.seed = s;
        }
        if let Some(r) = self.random_starts {
            cfg.solver.random_starts = r;
        }
    }
}

#[derive(Debug, Serialize)]
struct PointReport<'a> {
    alpha: f64,
    entropy: Option<f64>,
    log_base: LogBase,
    class: MeasureClass,
    status: PointStatus,
    verified: bool,
    branch_id: usize,
    domain: Interval,
    maximizers: &'a [Measure],
}

#[derive(Debug, Serialize)]
struct JumpRow {
    alpha: f64,
    left: f64,
    right: f64,
    value: f64,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    class: MeasureClass,
    log_base: LogBase,
    domain: Interval,
    discontinuities: Vec<JumpRow>,
}

/// Flattened maximizer: `p` for Bernoulli, the rows of `P` for Markov.
fn flatten(point: &SpectrumPoint) -> String {
    let values: Vec<f64> = match point.maximizers.first() {
        Some(Measure::Bernoulli(p)) => p.as_slice().to_vec(),
        Some(Measure::Markov(c)) => c.transition().concat(),
        None => Vec::new(),
    };
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

pub fn run(args: &SpectrumArgs, cfg: &Config) -> anyhow::Result<()> {
    let kernel = read_kernel(&args.kernel)?;
    let class = match (args.class, kernel.k()) {
        (Some(c), _) => c,
        (None, 1) => MeasureClass::Bernoulli,
        (None, 2) => MeasureClass::Markov,
        (None, k) => return Err(CliError::Invalid(format!("kernels of depth {k} are not supported")).into()),
    };
    let solver = SpectrumSolver::new(&kernel, class, &cfg.solver)?;
    let domain = solver.domain();
    let base = cfg.log_base;

    if let Some(alpha) = args.alpha {
        let point = solver.solve(alpha, &[])?;
        if point.status == PointStatus::EmptyFiber {
            return Err(CliError::EmptyFiber(format!(
                "empty fiber: alpha = {alpha} lies outside the spectrum domain L = {domain}"
            ))
            .into());
        }
        let report = PointReport {
            alpha,
            entropy: base.convert_opt(point.entropy),
            log_base: base,
            class,
            status: point.status,
            verified: point.verified,
            branch_id: point.branch_id,
            domain,
            maximizers: &point.maximizers,
        };
        return write_json(args.out.as_ref(), &report);
    }

    let n = args.grid.unwrap_or(0);
    if n < 2 {
        return Err(CliError::Invalid("grid needs at least 2 points".into()).into());
    }
    let range = match args.range.as_deref() {
        Some([lo, hi]) if lo.is_finite() && hi.is_finite() && lo < hi => Interval::new(*lo, *hi),
        Some(r) => return Err(CliError::Invalid(format!("bad range {r:?}")).into()),
        None => domain,
    };
    let curve = solver.sweep(&range.grid(n))?;
    let mut w = csv_writer(args.out.as_ref())?;
    w.write_record(["alpha", "entropy", "status", "branch", "verified", "maximizer"])?;
    for p in &curve.points {
        w.write_record([
            p.alpha.to_string(),
            cell(base.convert_opt(p.entropy)),
            p.status.to_string(),
            p.branch_id.to_string(),
            p.verified.to_string(),
            flatten(p),
        ])?;
    }
    w.flush()?;
    if let Some(path) = &args.report {
        let report = SweepReport {
            class,
            log_base: base,
            domain,
            discontinuities: curve
                .discontinuities
                .iter()
                .map(|d| JumpRow {
                    alpha: d.alpha,
                    left: base.convert(d.left),
                    right: base.convert(d.right),
                    value: base.convert(d.value),
                })
                .collect(),
        };
        write_json(Some(path), &report)?;
    }
    Ok(())
}
