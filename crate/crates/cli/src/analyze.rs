use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use vstat::closedform::{
    analyze_cubic, analyze_quadratic, closed_form_curve, ClosedForm, Jump, QuadraticCase, Situation,
};
use vstat::measures::Interval;
use vstat::Measure;

use crate::config::Config;
use crate::output::{csv_writer, write_json, LogBase};
use crate::CliError;

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Multiplier of the monic polynomial; reported as `alpha_original = scale * alpha`.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Grid size for the curve and graph tables.
    #[arg(long)]
    pub grid: Option<usize>,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// CSV of the spectrum: alpha, alpha_original, entropy, x_alpha, branch.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// CSV of the graph of A: x, A, A_original, solid.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

impl CommonArgs {
    pub fn apply(&self, cfg: &mut Config) {
        if let Some(g) = self.grid {
            cfg.analyze.grid = g;
        }
    }
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct QuadraticArgs {
    pub a: f64,
    pub b: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct CubicArgs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Serialize)]
struct JumpRecord {
    alpha: f64,
    alpha_original: f64,
    h_from: f64,
    h_to: f64,
    x_from: f64,
    x_to: f64,
    value: f64,
}

impl JumpRecord {
    fn new(j: &Jump, scale: f64, base: LogBase) -> Self {
        Self {
            alpha: j.alpha,
            alpha_original: scale * j.alpha,
            h_from: base.convert(j.h_from),
            h_to: base.convert(j.h_to),
            x_from: j.x_from,
            x_to: j.x_to,
            value: base.convert(j.value),
        }
    }
}

#[derive(Debug, Serialize)]
struct QuadraticReport<'a> {
    kind: &'static str,
    roots: [f64; 2],
    scale: f64,
    log_base: LogBase,
    case: QuadraticCase,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'a str>,
    x_star: f64,
    maximizer_interval: (f64, f64),
    domain: Interval,
    domain_original: Interval,
    polynomial: &'a [f64],
    discontinuities: Vec<JumpRecord>,
}

#[derive(Debug, Serialize)]
struct CubicReport<'a> {
    kind: &'static str,
    roots: [f64; 3],
    scale: f64,
    log_base: LogBase,
    situation: Situation,
    x_max: Option<f64>,
    x_min: Option<f64>,
    x_prime: Option<f64>,
    x_dprime: Option<f64>,
    branch_intervals: &'a [(f64, f64)],
    domain: Interval,
    domain_original: Interval,
    polynomial: &'a [f64],
    discontinuities: Vec<JumpRecord>,
}

fn check_inputs(roots: &[f64], common: &CommonArgs, cfg: &Config) -> anyhow::Result<()> {
    if roots.iter().any(|r| !r.is_finite()) {
        return Err(CliError::Invalid(format!("roots must be finite, got {roots:?}")).into());
    }
    if !common.scale.is_finite() || common.scale == 0.0 {
        return Err(CliError::Invalid(format!("scale must be finite and nonzero, got {}", common.scale)).into());
    }
    if cfg.analyze.grid < 2 {
        return Err(CliError::Invalid("grid needs at least 2 points".into()).into());
    }
    Ok(())
}

fn scaled(d: Interval, scale: f64) -> Interval {
    Interval::new(scale * d.lo, scale * d.hi)
}

fn write_tables(analysis: &dyn ClosedForm, common: &CommonArgs, cfg: &Config) -> anyhow::Result<()> {
    let n = cfg.analyze.grid;
    let base = cfg.log_base;
    if let Some(path) = &common.curve {
        let mut grid = analysis.domain().grid(n);
        grid.extend(analysis.jumps().iter().map(|j| j.alpha));
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let curve = closed_form_curve(analysis, &grid)?;
        let mut w = csv_writer(Some(path))?;
        w.write_record(["alpha", "alpha_original", "entropy", "x_alpha", "branch"])?;
        for p in &curve.points {
            let x = match p.maximizers.first() {
                Some(Measure::Bernoulli(v)) => v.as_slice()[1].to_string(),
                _ => String::new(),
            };
            w.write_record([
                p.alpha.to_string(),
                (common.scale * p.alpha).to_string(),
                base.convert(p.value()).to_string(),
                x,
                p.branch_id.to_string(),
            ])?;
        }
        w.flush()?;
    }
    if let Some(path) = &common.graph {
        let branches = analysis.branches();
        let mut xs = Interval::new(0.0, 1.0).grid(n);
        xs.extend(
            branches
                .iter()
                .flat_map(|&(lo, hi)| [lo, hi])
                .filter(|x| (0.0..=1.0).contains(x)),
        );
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let poly = analysis.polynomial();
        let mut w = csv_writer(Some(path))?;
        w.write_record(["x", "A", "A_original", "solid"])?;
        for x in xs {
            let a = poly.eval(x);
            let solid = branches.iter().any(|&(lo, hi)| x >= lo - 1e-12 && x <= hi + 1e-12);
            w.write_record([
                x.to_string(),
                a.to_string(),
                (common.scale * a).to_string(),
                u8::from(solid).to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn quadratic(args: &QuadraticArgs, cfg: &Config) -> anyhow::Result<()> {
    let c = &args.common;
    check_inputs(&[args.a, args.b], c, cfg)?;
    let q = analyze_quadratic(args.a, args.b)?;
    let report = QuadraticReport {
        kind: "quadratic",
        roots: [args.a, args.b],
        scale: c.scale,
        log_base: cfg.log_base,
        case: q.case_label,
        note: q.note.as_deref(),
        x_star: q.x_star,
        maximizer_interval: q.maximizer_interval,
        domain: q.domain,
        domain_original: scaled(q.domain, c.scale),
        polynomial: q.polynomial.coeffs(),
        discontinuities: Vec::new(),
    };
    write_json(c.report.as_ref(), &report)?;
    write_tables(&q, c, cfg)
}

pub fn cubic(args: &CubicArgs, cfg: &Config) -> anyhow::Result<()> {
    let c = &args.common;
    check_inputs(&[args.a, args.b, args.c], c, cfg)?;
    let k = analyze_cubic(args.a, args.b, args.c)?;
    let report = CubicReport {
        kind: "cubic",
        roots: [args.a, args.b, args.c],
        scale: c.scale,
        log_base: cfg.log_base,
        situation: k.situation,
        x_max: k.x_max,
        x_min: k.x_min,
        x_prime: k.x_prime,
        x_dprime: k.x_dprime,
        branch_intervals: &k.branch_intervals,
        domain: k.domain,
        domain_original: scaled(k.domain, c.scale),
        polynomial: k.polynomial.coeffs(),
        discontinuities: k
            .discontinuities
            .iter()
            .map(|j| JumpRecord::new(j, c.scale, cfg.log_base))
            .collect(),
    };
    write_json(c.report.as_ref(), &report)?;
    write_tables(&k, c, cfg)
}
