//! Independent cross-checks: counting words by letter frequencies, a
//! brute-force simplex grid, and a Monte Carlo convergence harness.

use serde::{Deserialize, Serialize};

use crate::dynamics::{
    sample_bernoulli_stream, sample_markov_stream, u_statistic_budgeted, v_statistic_fast, v_statistic_naive_budgeted,
    SymbolSequence, DEFAULT_NAIVE_BUDGET,
};
use crate::error::{Error, Result};
use crate::kernels::{CylinderKernel, KernelForm, DEFAULT_DENSE_BUDGET};
use crate::measures::{a_of_measure_general, Interval, Measure, ProbVector};

/// Default bound on enumerated compositions or grid points.
pub const DEFAULT_ENUM_BUDGET: f64 = 1e8;

fn require_depth_one(kernel: &CylinderKernel) -> Result<()> {
    if kernel.k() != 1 {
        return Err(Error::UnsupportedForm(format!(
            "frequency oracles need a depth-1 kernel, got k = {}",
            kernel.k()
        )));
    }
    Ok(())
}

/// `ln C(n + m - 1, m - 1)`.
fn log_compositions(n: usize, m: usize) -> f64 {
    libm::lgamma((n + m) as f64) - libm::lgamma(m as f64) - libm::lgamma((n + 1) as f64)
}

/// Visit every vector of `m` nonnegative integers summing to `n`.
fn for_each_composition(n: usize, m: usize, mut visit: impl FnMut(&[usize])) {
    let mut c = vec![0usize; m];
    c[m - 1] = n;
    loop {
        visit(&c);
        // next composition in colex-like order: move one unit leftwards
        let Some(j) = (0..m - 1).rev().find(|&j| c[j + 1..].iter().sum::<usize>() > 0) else {
            return;
        };
        let tail: usize = c[j + 1..].iter().sum();
        c[j] += 1;
        for v in &mut c[j + 1..] {
            *v = 0;
        }
        c[m - 1] = tail - 1;
    }
}

/// Evaluates `A(p)` of a depth-1 kernel from its product terms.
struct FrequencyObjective {
    terms: Vec<(f64, Vec<Vec<f64>>)>,
}

impl FrequencyObjective {
    fn new(kernel: &CylinderKernel) -> Self {
        Self {
            terms: kernel.product_terms(),
        }
    }

    fn value(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(w, fs)| {
                w * fs
                    .iter()
                    .map(|f| f.iter().zip(p).map(|(a, b)| a * b).sum::<f64>())
                    .product::<f64>()
            })
            .sum()
    }
}

/// `max (1/n) ln multinomial(n; c)` over letter counts `c` with
/// `|A(c/n) - α| ≤ δ`; `-∞` when no count vector qualifies.
pub fn oracle_count_spectrum(kernel: &CylinderKernel, n: usize, alpha: f64, delta: f64) -> Result<f64> {
    oracle_count_spectrum_budgeted(kernel, n, alpha, delta, DEFAULT_ENUM_BUDGET)
}

pub fn oracle_count_spectrum_budgeted(
    kernel: &CylinderKernel,
    n: usize,
    alpha: f64,
    delta: f64,
    budget: f64,
) -> Result<f64> {
    require_depth_one(kernel)?;
    if n == 0 {
        return Err(Error::Input("word length must be positive".into()));
    }
    let m = kernel.m();
    let count = log_compositions(n, m).exp();
    if count > budget {
        return Err(Error::Resource {
            what: "letter-count compositions",
            needed: count,
            budget,
        });
    }
    let obj = FrequencyObjective::new(kernel);
    let log_nfact = libm::lgamma(n as f64 + 1.0);
    let mut best = f64::NEG_INFINITY;
    let mut p = vec![0.0; m];
    for_each_composition(n, m, |c| {
        for (pj, &cj) in p.iter_mut().zip(c) {
            *pj = cj as f64 / n as f64;
        }
        if (obj.value(&p) - alpha).abs() <= delta {
            let lm = log_nfact - c.iter().map(|&cj| libm::lgamma(cj as f64 + 1.0)).sum::<f64>();
            best = best.max(lm / n as f64);
        }
    });
    Ok(best)
}

/// Best point of the simplex grid with spacing `1/resolution`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridMax {
    /// `-∞` when no grid point lies in the window.
    pub entropy: f64,
    pub p: Option<ProbVector>,
}

/// Exhaustive search of `max H_1(p)` subject to `|A(p) - α| ≤ δ` over
/// `p ∈ (1/resolution) ℕ^m`.
pub fn oracle_grid_max(kernel: &CylinderKernel, alpha: f64, delta: f64, resolution: usize) -> Result<GridMax> {
    require_depth_one(kernel)?;
    if resolution < 1 {
        return Err(Error::Input("resolution must be at least 1".into()));
    }
    let m = kernel.m();
    let count = log_compositions(resolution, m).exp();
    if count > DEFAULT_ENUM_BUDGET {
        return Err(Error::Resource {
            what: "simplex grid points",
            needed: count,
            budget: DEFAULT_ENUM_BUDGET,
        });
    }
    let obj = FrequencyObjective::new(kernel);
    let mut best = f64::NEG_INFINITY;
    let mut arg: Option<Vec<f64>> = None;
    let mut p = vec![0.0; m];
    for_each_composition(resolution, m, |c| {
        for (pj, &cj) in p.iter_mut().zip(c) {
            *pj = cj as f64 / resolution as f64;
        }
        if (obj.value(&p) - alpha).abs() <= delta {
            let h: f64 = p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
            if h > best {
                best = h;
                arg = Some(p.clone());
            }
        }
    });
    Ok(GridMax {
        entropy: best,
        p: arg.map(ProbVector::normalized).transpose()?,
    })
}

/// Bound on `|H_1(p) - H_1(q)|` for simplex points whose coordinates
/// differ by at most `h ≤ 1/e`, as used against the grid: `(m - 1) h ln(1/h)`.
pub fn entropy_modulus(m: usize, h: f64) -> f64 {
    (m as f64 - 1.0) * h * (1.0 / h).ln()
}

/// The `count` interior points `lo + w i/(count + 1)`, `i = 1..=count`, of
/// an even grid on `domain`, minus those within `exclusion` of a jump.
pub fn comparison_alphas(domain: Interval, jumps: &[f64], exclusion: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|i| domain.lo + domain.width() * i as f64 / (count + 1) as f64)
        .filter(|a| jumps.iter().all(|j| (a - j).abs() >= exclusion))
        .collect()
}

/// One `(seed, n)` sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McRow {
    pub seed: u64,
    pub n: usize,
    pub v: f64,
    /// Absent when `n^r` exceeds the summation budget.
    pub u: Option<f64>,
    pub target: f64,
    pub abs_error: f64,
}

/// Per-`n` error summary across seeds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McSummary {
    pub n: usize,
    pub median_error: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McReport {
    pub target: f64,
    pub rows: Vec<McRow>,
    pub summary: Vec<McSummary>,
}

impl McReport {
    /// Median errors are non-increasing in `n`.
    pub fn weakly_decreasing(&self) -> bool {
        self.summary.windows(2).all(|w| w[1].median_error <= w[0].median_error)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = v.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn v_statistic_any(kernel: &CylinderKernel, seq: &SymbolSequence, n: usize) -> Result<f64> {
    match kernel.form() {
        KernelForm::Dense(_) => v_statistic_naive_budgeted(kernel, seq, n, DEFAULT_NAIVE_BUDGET),
        _ => v_statistic_fast(kernel, seq, n),
    }
}

/// Run one long sample per seed (stream 0 of that seed) and evaluate its
/// prefixes at every `n`. `U` is computed only when `n^r ≤ u_budget`.
pub fn mc_convergence(
    kernel: &CylinderKernel,
    measure: &Measure,
    n_list: &[usize],
    seeds: &[u64],
    u_budget: f64,
) -> Result<McReport> {
    if measure.m() != kernel.m() {
        return Err(Error::Input("kernel and measure alphabets differ".into()));
    }
    let target = a_of_measure_general(kernel, measure, DEFAULT_DENSE_BUDGET)?;
    let longest = n_list.iter().copied().max().unwrap_or(0);
    let len = longest + kernel.k();
    let mut rows = Vec::with_capacity(n_list.len() * seeds.len());
    for &seed in seeds {
        let seq = match measure {
            Measure::Bernoulli(p) => sample_bernoulli_stream(p, len, seed, 0)?,
            Measure::Markov(c) => sample_markov_stream(c, None, len, seed, 0)?,
        };
        for &n in n_list {
            let v = v_statistic_any(kernel, &seq, n)?;
            let u = if (n as f64).powi(kernel.r() as i32) <= u_budget && n >= kernel.r() {
                Some(u_statistic_budgeted(kernel, &seq, n, u_budget)?)
            } else {
                None
            };
            rows.push(McRow {
                seed,
                n,
                v,
                u,
                target,
                abs_error: (v - target).abs(),
            });
        }
    }
    let summary = n_list
        .iter()
        .map(|&n| {
            let errs: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.abs_error).collect();
            McSummary {
                n,
                max_error: errs.iter().copied().fold(0.0, f64::max),
                median_error: median(errs),
            }
        })
        .collect();
    Ok(McReport { target, rows, summary })
}
