use std::path::PathBuf;

use clap::Args;
use vstat::oracle::mc_convergence;

use crate::config::Config;
use crate::output::{cell, csv_writer, read_kernel, read_measure};
use crate::CliError;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Kernel JSON file.
    #[arg(long)]
    pub kernel: PathBuf,
    /// Measure JSON file: `{"bernoulli": [..]}` or `{"markov": {"P": [[..], ..]}}`.
    #[arg(long)]
    pub measure: PathBuf,
    /// Base seed; runs use seeds `seed, seed + 1, …`.
    #[arg(long)]
    pub seed: u64,
    /// Number of seeds.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Skip U once `n^r` exceeds this.
    #[arg(long)]
    pub u_budget: Option<f64>,
    /// Largest allowed median error at the largest n under `--check`.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Exit with status 4 unless the median error is weakly decreasing in n
    /// and within tolerance at the largest n.
    #[arg(long)]
    pub check: bool,
    /// CSV path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SimulateArgs {
    pub fn apply(&self, cfg: &mut Config) {
        let s = &mut cfg.simulate;
        if let Some(v) = self.seeds {
            s.seeds = v;
        }
        if let Some(v) = &self.n {
            s.n = v.clone();
        }
        if let Some(v) = self.u_budget {
            s.u_budget = v;
        }
        if let Some(v) = self.tolerance {
            s.tolerance = v;
        }
    }
}

pub fn run(args: &SimulateArgs, cfg: &Config) -> anyhow::Result<()> {
    let s = &cfg.simulate;
    if s.n.is_empty() || s.n.contains(&0) || s.seeds == 0 {
        return Err(CliError::Invalid("need at least one seed and positive sample sizes".into()).into());
    }
    let mut n_list = s.n.clone();
    n_list.sort_unstable();
    n_list.dedup();
    let kernel = read_kernel(&args.kernel)?;
    let measure = read_measure(&args.measure)?;
    let seeds: Vec<u64> = (0..s.seeds as u64).map(|i| args.seed.wrapping_add(i)).collect();
    let report = mc_convergence(&kernel, &measure, &n_list, &seeds, s.u_budget)?;

    let mut w = csv_writer(args.out.as_ref())?;
    w.write_record(["seed", "n", "v", "u", "target", "abs_error"])?;
    for r in &report.rows {
        w.write_record([
            r.seed.to_string(),
            r.n.to_string(),
            r.v.to_string(),
            cell(r.u),
            r.target.to_string(),
            r.abs_error.to_string(),
        ])?;
    }
    w.flush()?;
    eprintln!("target A = {}", report.target);
    for row in &report.summary {
        eprintln!(
            "n = {:>8}  median |V - A| = {:.6e}  max = {:.6e}",
            row.n, row.median_error, row.max_error
        );
    }

    if args.check {
        let mut problems = Vec::new();
        if !report.weakly_decreasing() {
            problems.push("median error is not weakly decreasing in n".to_string());
        }
        if let Some(last) = report.summary.last() {
            if last.median_error > s.tolerance {
                problems.push(format!(
                    "n = {}: median error {} exceeds {}",
                    last.n, last.median_error, s.tolerance
                ));
            }
        }
        if !problems.is_empty() {
            for p in &problems {
                eprintln!("violation: {p}");
            }
            return Err(CliError::Violation(format!("{} check(s) failed", problems.len())).into());
        }
        eprintln!("check passed");
    }
    Ok(())
}
