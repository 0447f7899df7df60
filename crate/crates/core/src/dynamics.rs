//! Finite orbits of the full shift and V-/U-statistics evaluated along them.
//!
//! Statistics follow the index convention `i = 1..=n`: the `i`-th argument is
//! the `k`-window starting at position `i` of the word (position 0 is the
//! starting point `x` itself and never enters a sum), so a word needs at least
//! `n + k` symbols.
//!
//! Random words come from ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded with
//! `seed_from_u64(seed)` on stream `stream`; each symbol is drawn by inverse
//! CDF from one uniform `f64`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{odometer, CylinderKernel, FactorPotential, KernelForm};
use crate::measures::{MarkovChain, ProbVector};

/// Cap on the number of summands of a naive V- or U-statistic.
pub const DEFAULT_NAIVE_BUDGET: f64 = 1e8;

const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";

/// A finite word over `{0,…,m-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolSequence {
    m: usize,
    symbols: Vec<u8>,
}

impl SymbolSequence {
    pub fn new(m: usize, symbols: Vec<u8>) -> Result<Self> {
        if !(2..=255).contains(&m) {
            return Err(Error::Input(format!("alphabet size {m} outside 2..=255")));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s as usize >= m) {
            return Err(Error::Input(format!("symbol {bad} out of range for m = {m}")));
        }
        Ok(Self { m, symbols })
    }

    /// Parse the compact form: one character per symbol, `0-9` then `a-z`.
    pub fn parse(m: usize, text: &str) -> Result<Self> {
        let symbols = text
            .bytes()
            .map(|b| {
                DIGITS
                    .iter()
                    .position(|&d| d == b.to_ascii_lowercase())
                    .map(|v| v as u8)
                    .ok_or_else(|| Error::Input(format!("invalid symbol character {:?}", b as char)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(m, symbols)
    }

    /// `0101…` of the given length.
    pub fn alternating(len: usize) -> Self {
        Self {
            m: 2,
            symbols: (0..len).map(|i| (i % 2) as u8).collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    /// Empirical frequency of each symbol.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut counts = vec![0usize; self.m];
        self.symbols.iter().for_each(|&s| counts[s as usize] += 1);
        counts
            .into_iter()
            .map(|c| c as f64 / self.symbols.len().max(1) as f64)
            .collect()
    }

    /// Word indices of the `k`-windows at positions `1..=n`.
    fn windows(&self, k: usize, n: usize) -> Result<Vec<usize>> {
        if self.symbols.len() < n + k {
            return Err(Error::Input(format!(
                "word of length {} is too short for n = {n}, k = {k} (needs {})",
                self.symbols.len(),
                n + k
            )));
        }
        Ok((1..=n)
            .map(|i| {
                self.symbols[i..i + k]
                    .iter()
                    .fold(0usize, |acc, &a| acc * self.m + a as usize)
            })
            .collect())
    }
}

impl fmt::Display for SymbolSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m > DIGITS.len() {
            let parts: Vec<String> = self.symbols.iter().map(|s| s.to_string()).collect();
            return write!(f, "{}", parts.join(","));
        }
        let text: String = self.symbols.iter().map(|&s| DIGITS[s as usize] as char).collect();
        f.write_str(&text)
    }
}

impl Serialize for SymbolSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Deserialize)]
struct SequenceSpec {
    m: usize,
    word: String,
}

impl<'de> Deserialize<'de> for SymbolSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = SequenceSpec::deserialize(d)?;
        SymbolSequence::parse(spec.m, &spec.word).map_err(serde::de::Error::custom)
    }
}

/// Generator for `(seed, stream)`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn draw(rng: &mut ChaCha8Rng, weights: &[f64]) -> u8 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (j, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return j as u8;
        }
    }
    // u landed in the rounding gap above the last partial sum
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0) as u8
}

/// `n` i.i.d. symbols with law `p`.
pub fn sample_bernoulli(p: &ProbVector, n: usize, seed: u64) -> Result<SymbolSequence> {
    sample_bernoulli_stream(p, n, seed, 0)
}

pub fn sample_bernoulli_stream(p: &ProbVector, n: usize, seed: u64, stream: u64) -> Result<SymbolSequence> {
    if n == 0 {
        return Err(Error::Input("sample length must be >= 1".into()));
    }
    let mut rng = rng_for(seed, stream);
    let symbols = (0..n).map(|_| draw(&mut rng, p.as_slice())).collect();
    SymbolSequence::new(p.m(), symbols)
}

/// `n` symbols of the stationary chain: the first from `p`, then by `P`.
pub fn sample_markov(chain: &MarkovChain, n: usize, seed: u64) -> Result<SymbolSequence> {
    sample_markov_stream(chain, None, n, seed, 0)
}

/// Like [`sample_markov`], optionally forcing the first symbol.
pub fn sample_markov_stream(
    chain: &MarkovChain,
    start: Option<usize>,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<SymbolSequence> {
    if n == 0 {
        return Err(Error::Input("sample length must be >= 1".into()));
    }
    let mut rng = rng_for(seed, stream);
    let mut state = match start {
        Some(s) if s < chain.m() => s as u8,
        Some(s) => return Err(Error::Input(format!("start state {s} out of range"))),
        None => draw(&mut rng, chain.stationary().as_slice()),
    };
    let mut symbols = Vec::with_capacity(n);
    symbols.push(state);
    for _ in 1..n {
        state = draw(&mut rng, &chain.transition()[state as usize]);
        symbols.push(state);
    }
    SymbolSequence::new(chain.m(), symbols)
}

fn check_alphabet(m: usize, seq: &SymbolSequence) -> Result<()> {
    if m != seq.m {
        return Err(Error::Input(format!(
            "kernel alphabet m = {m} differs from the word's m = {}",
            seq.m
        )));
    }
    Ok(())
}

/// `(1/n) Σ_{i=1}^{n} f(σ^i x)`.
pub fn birkhoff_average(f: &FactorPotential, seq: &SymbolSequence, n: usize) -> Result<f64> {
    check_alphabet(f.m(), seq)?;
    if n == 0 {
        return Err(Error::Input("n must be >= 1".into()));
    }
    let sum: f64 = seq.windows(f.k(), n)?.into_iter().map(|w| f.value_at(w)).sum();
    Ok(sum / n as f64)
}

fn naive_prelude(kernel: &CylinderKernel, seq: &SymbolSequence, n: usize, budget: f64) -> Result<Vec<usize>> {
    check_alphabet(kernel.m(), seq)?;
    if n == 0 {
        return Err(Error::Input("n must be >= 1".into()));
    }
    let summands = (n as f64).powi(kernel.r() as i32);
    if summands > budget {
        return Err(Error::Resource {
            what: "naive statistic summands (use v_statistic_fast for factored kernels)",
            needed: summands,
            budget,
        });
    }
    seq.windows(kernel.k(), n)
}

/// `V_Φ(n, x) = n^{-r} Σ_{1 ≤ i_1..i_r ≤ n} Φ(σ^{i_1}x, …, σ^{i_r}x)` by
/// direct summation.
pub fn v_statistic_naive(kernel: &CylinderKernel, seq: &SymbolSequence, n: usize) -> Result<f64> {
    v_statistic_naive_budgeted(kernel, seq, n, DEFAULT_NAIVE_BUDGET)
}

pub fn v_statistic_naive_budgeted(kernel: &CylinderKernel, seq: &SymbolSequence, n: usize, budget: f64) -> Result<f64> {
    let windows = naive_prelude(kernel, seq, n, budget)?;
    let r = kernel.r();
    let total = n.pow(r as u32);
    let mut pos = vec![0usize; r];
    let mut args = vec![0usize; r];
    let mut acc = 0.0;
    for _ in 0..total {
        for (a, &p) in args.iter_mut().zip(&pos) {
            *a = windows[p];
        }
        acc += kernel.eval_indices(&args);
        odometer(&mut pos, n);
    }
    Ok(acc / total as f64)
}

/// `Σ_j Π_t (S_n f_j^{(t)} / n)` for product and tensor-sum kernels.
pub fn v_statistic_fast(kernel: &CylinderKernel, seq: &SymbolSequence, n: usize) -> Result<f64> {
    let product = |fs: &[FactorPotential]| -> Result<f64> { fs.iter().map(|f| birkhoff_average(f, seq, n)).product() };
    match kernel.form() {
        KernelForm::Product(fs) => product(fs),
        KernelForm::TensorSum(ts) => ts.iter().map(|t| product(t)).sum(),
        KernelForm::Dense(_) => Err(Error::UnsupportedForm(
            "fast V-statistic needs a product or tensor-sum kernel".into(),
        )),
    }
}

/// Average of `Φ` over `r`-tuples of pairwise distinct indices in `1..=n`.
pub fn u_statistic(kernel: &CylinderKernel, seq: &SymbolSequence, n: usize) -> Result<f64> {
    u_statistic_budgeted(kernel, seq, n, DEFAULT_NAIVE_BUDGET)
}

pub fn u_statistic_budgeted(kernel: &CylinderKernel, seq: &SymbolSequence, n: usize, budget: f64) -> Result<f64> {
    let r = kernel.r();
    if n < r {
        return Err(Error::Input(format!("U-statistic needs n >= r (n = {n}, r = {r})")));
    }
    let windows = naive_prelude(kernel, seq, n, budget)?;
    let total = n.pow(r as u32);
    let mut pos = vec![0usize; r];
    let mut args = vec![0usize; r];
    let mut acc = 0.0;
    let mut count = 0usize;
    for _ in 0..total {
        let distinct = (0..r).all(|a| (a + 1..r).all(|b| pos[a] != pos[b]));
        if distinct {
            for (a, &p) in args.iter_mut().zip(&pos) {
                *a = windows[p];
            }
            acc += kernel.eval_indices(&args);
            count += 1;
        }
        odometer(&mut pos, n);
    }
    Ok(acc / count as f64)
}

/// `1 - n!/((n-r)! n^r)`: the share of index tuples with a repeated index.
pub fn diagonal_fraction(n: usize, r: usize) -> f64 {
    let distinct: f64 = (0..r).map(|i| (n as f64 - i as f64) / n as f64).product();
    1.0 - distinct.max(0.0)
}
