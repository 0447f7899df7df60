use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use vstat::closedform::{analyze_cubic, analyze_quadratic, spectrum_closed_form, ClosedForm};
use vstat::measures::{spectrum_domain, Interval};
use vstat::oracle::{comparison_alphas, oracle_count_spectrum};
use vstat::spectrum::solve_bernoulli_spectrum;
use vstat::{CylinderKernel, MeasureClass, SolverOptions};

use crate::config::Config;
use crate::output::{csv_writer, read_kernel};
use crate::CliError;

/// Smallest word length accepted under `--check`. At this length the
/// counting bias bound `(m - 1) log(n + 1)/n` is about a third of the
/// default band.
pub const CHECK_MIN_N: usize = 1000;

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Kernel JSON file (depth 1).
    #[arg(long)]
    pub kernel: PathBuf,
    /// Word length.
    #[arg(long)]
    pub n: Option<usize>,
    /// Half-width of the fiber window.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of interior comparison points.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Half-width of the neighbourhood dropped around each jump.
    #[arg(long)]
    pub exclusion: Option<f64>,
    /// Allowed |oracle - reference| in nats under `--check`.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Exit with status 4 if any row leaves the tolerance band.
    #[arg(long)]
    pub check: bool,
    /// CSV path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CompareArgs {
    pub fn apply(&self, cfg: &mut Config) {
        let o = &mut cfg.oracle;
        if let Some(v) = self.n {
            o.n = v;
        }
        if let Some(v) = self.delta {
            o.delta = v;
        }
        if let Some(v) = self.grid {
            o.grid = v;
        }
        if let Some(v) = self.exclusion {
            o.exclusion = v;
        }
        if let Some(v) = self.tolerance {
            o.tolerance = v;
        }
    }
}

/// Exact spectrum for two-symbol quadratics and cubics, the solver otherwise.
enum Reference {
    Closed {
        form: Box<dyn ClosedForm + Sync>,
        scale: f64,
    },
    Solver {
        kernel: CylinderKernel,
        opts: SolverOptions,
    },
}

impl Reference {
    fn new(kernel: &CylinderKernel, opts: &SolverOptions) -> Self {
        let closed = kernel.root_form().ok().and_then(|rf| {
            let form: Box<dyn ClosedForm + Sync> = match *rf.roots.as_slice() {
                [a, b] => Box::new(analyze_quadratic(a, b).ok()?),
                [a, b, c] => Box::new(analyze_cubic(a, b, c).ok()?),
                _ => return None,
            };
            Some((form, rf.scale))
        });
        match closed {
            Some((form, scale)) => Reference::Closed { form, scale },
            None => Reference::Solver {
                kernel: kernel.clone(),
                opts: opts.clone(),
            },
        }
    }

    fn source(&self) -> &'static str {
        match self {
            Reference::Closed { .. } => "closed_form",
            Reference::Solver { .. } => "solver",
        }
    }

    fn domain_and_jumps(&self) -> anyhow::Result<(Interval, Vec<f64>)> {
        Ok(match self {
            Reference::Closed { form, scale } => {
                let d = form.domain();
                (
                    Interval::new(scale * d.lo, scale * d.hi),
                    form.jumps().iter().map(|j| scale * j.alpha).collect(),
                )
            }
            Reference::Solver { kernel, .. } => (spectrum_domain(kernel, MeasureClass::Bernoulli)?, Vec::new()),
        })
    }

    fn value(&self, alpha: f64) -> anyhow::Result<f64> {
        Ok(match self {
            Reference::Closed { form, scale } => spectrum_closed_form(&**form, alpha / scale)?,
            Reference::Solver { kernel, opts } => solve_bernoulli_spectrum(kernel, alpha, opts)?.value(),
        })
    }
}

struct Row {
    alpha: f64,
    reference: f64,
    oracle: f64,
}

impl Row {
    fn difference(&self) -> f64 {
        self.oracle - self.reference
    }
}

pub fn run(args: &CompareArgs, cfg: &Config) -> anyhow::Result<()> {
    let o = &cfg.oracle;
    if args.check && o.n < CHECK_MIN_N {
        return Err(CliError::Invalid(format!(
            "--check needs n >= {CHECK_MIN_N} (got {}); run without --check for an informational table",
            o.n
        ))
        .into());
    }
    if o.n == 0 || o.grid == 0 || o.delta.is_nan() || o.delta < 0.0 || o.exclusion.is_nan() || o.exclusion < 0.0 {
        return Err(CliError::Invalid("n and grid must be positive, delta and exclusion nonnegative".into()).into());
    }
    let kernel = read_kernel(&args.kernel)?;
    if kernel.k() != 1 {
        return Err(CliError::Invalid("the word-counting oracle needs a depth-1 kernel".into()).into());
    }
    let reference = Reference::new(&kernel, &cfg.solver);
    let (domain, jumps) = reference.domain_and_jumps()?;
    let alphas = comparison_alphas(domain, &jumps, o.exclusion, o.grid);
    if alphas.len() < o.grid {
        eprintln!(
            "{} of {} points fall within {} of a jump and are skipped",
            o.grid - alphas.len(),
            o.grid,
            o.exclusion
        );
    }
    let rows = alphas
        .par_iter()
        .map(|&alpha| {
            Ok(Row {
                alpha,
                reference: reference.value(alpha)?,
                oracle: oracle_count_spectrum(&kernel, o.n, alpha, o.delta)?,
            })
        })
        .collect::<anyhow::Result<Vec<_>>>()?;

    let base = cfg.log_base;
    let mut w = csv_writer(args.out.as_ref())?;
    w.write_record(["alpha", "reference", "source", "oracle", "difference", "within_band"])?;
    let mut violations = Vec::new();
    for r in &rows {
        let ok = r.difference().abs() <= o.tolerance;
        if !ok {
            violations.push(r);
        }
        w.write_record([
            r.alpha.to_string(),
            base.convert(r.reference).to_string(),
            reference.source().to_string(),
            base.convert(r.oracle).to_string(),
            base.convert(r.difference()).to_string(),
            ok.to_string(),
        ])?;
    }
    w.flush()?;

    if args.check {
        for r in &violations {
            eprintln!(
                "violation: alpha = {}: oracle {} vs reference {} (|diff| = {} > {})",
                r.alpha,
                r.oracle,
                r.reference,
                r.difference().abs(),
                o.tolerance
            );
        }
        if !violations.is_empty() {
            return Err(CliError::Violation(format!(
                "{} of {} points outside the band",
                violations.len(),
                rows.len()
            ))
            .into());
        }
        eprintln!("check passed on {} points", rows.len());
    }
    Ok(())
}
