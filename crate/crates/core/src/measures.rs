//! Bernoulli and Markov measures on the full shift, their entropies, and the
//! fiber integral `A(μ) = ∫Φ dμ^{⊗r}`.
//!
//! Logarithms are natural throughout.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{check_permutation, index_word, odometer, CylinderKernel, KernelForm};

/// Tolerance on `Σ p_j = 1` and on row sums of transition matrices.
pub const SUM_TOL: f64 = 1e-12;
/// Tolerance on `pP = p`.
pub const STATIONARY_TOL: f64 = 1e-10;

/// A probability vector on `{0,…,m-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::Input(format!(
                "probability vector needs m >= 2 entries, got {}",
                p.len()
            )));
        }
        if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Input(format!(
                "probabilities must be finite and nonnegative: {p:?}"
            )));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Input(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self(p))
    }

    /// Clamp tiny negatives and rescale to unit mass.
    pub fn normalized(mut p: Vec<f64>) -> Result<Self> {
        for v in p.iter_mut() {
            if *v < 0.0 && *v > -1e-12 {
                *v = 0.0;
            }
        }
        let total: f64 = p.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Input("cannot normalize a vector with no mass".into()));
        }
        p.iter_mut().for_each(|v| *v /= total);
        Self::new(p)
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    /// Two-symbol vector `(1 - x, x)`.
    pub fn binary(x: f64) -> Result<Self> {
        Self::new(vec![1.0 - x, x])
    }

    pub fn m(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(self.m(), perm)?;
        let mut out = vec![0.0; self.m()];
        for (j, &v) in self.0.iter().enumerate() {
            out[perm[j]] = v;
        }
        Ok(Self(out))
    }
}

impl<'de> Deserialize<'de> for ProbVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        ProbVector::new(Vec::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// A stationary Markov measure `μ_{p,P}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    p: ProbVector,
    transition: Vec<Vec<f64>>,
}

impl MarkovChain {
    /// Chain from its transition matrix; `p` is recomputed as the unique
    /// stationary vector.
    pub fn new(transition: Vec<Vec<f64>>) -> Result<Self> {
        let p = stationary_vector(&transition)?;
        Ok(Self { p, transition })
    }

    /// Chain from a user-supplied pair, checked for stationarity.
    pub fn with_stationary(p: ProbVector, transition: Vec<Vec<f64>>) -> Result<Self> {
        check_stochastic(&transition)?;
        if transition.len() != p.m() {
            return Err(Error::Input("p and P have different sizes".into()));
        }
        let chain = Self { p, transition };
        chain.check_stationary()?;
        Ok(chain)
    }

    /// Chain with every row equal to `q` (the Bernoulli measure `μ_q`).
    pub fn bernoulli(q: &ProbVector) -> Self {
        Self {
            p: q.clone(),
            transition: vec![q.as_slice().to_vec(); q.m()],
        }
    }

    /// Chain from a shift-invariant two-block distribution
    /// `q[i*m + j] = μ([ij])`. Rows of unvisited states are set uniform.
    pub fn from_two_block(m: usize, q: &[f64]) -> Result<Self> {
        if q.len() != m * m {
            return Err(Error::Input("two-block distribution must have m^2 entries".into()));
        }
        let mut p = vec![0.0; m];
        for i in 0..m {
            p[i] = q[i * m..(i + 1) * m].iter().map(|v| v.max(0.0)).sum();
        }
        let p = ProbVector::normalized(p)?;
        let transition = (0..m)
            .map(|i| {
                let row: Vec<f64> = q[i * m..(i + 1) * m].iter().map(|v| v.max(0.0)).collect();
                let s: f64 = row.iter().sum();
                if s > 0.0 {
                    row.iter().map(|v| v / s).collect()
                } else {
                    vec![1.0 / m as f64; m]
                }
            })
            .collect();
        Ok(Self { p, transition })
    }

    pub fn m(&self) -> usize {
        self.p.m()
    }

    pub fn stationary(&self) -> &ProbVector {
        &self.p
    }

    pub fn transition(&self) -> &[Vec<f64>] {
        &self.transition
    }

    /// `μ([ij]) = p_i P_ij`, flattened row-major.
    pub fn two_block(&self) -> Vec<f64> {
        let m = self.m();
        let mut q = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                q.push(self.p.0[i] * self.transition[i][j]);
            }
        }
        q
    }

    /// Largest componentwise deviation of `pP` from `p`.
    pub fn stationarity_residual(&self) -> f64 {
        let m = self.m();
        (0..m)
            .map(|j| {
                let pj: f64 = (0..m).map(|i| self.p.0[i] * self.transition[i][j]).sum();
                (pj - self.p.0[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    fn check_stationary(&self) -> Result<()> {
        let res = self.stationarity_residual();
        if res > STATIONARY_TOL {
            return Err(Error::Invariant(format!("pP differs from p by {res:e}")));
        }
        Ok(())
    }

    /// Largest difference between two entries of the same column, i.e. how
    /// far the chain is from having identical rows.
    pub fn row_spread(&self) -> f64 {
        let m = self.m();
        (0..m)
            .map(|j| {
                let col = self.transition.iter().map(|row| row[j]);
                let (lo, hi) = col.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
                hi - lo
            })
            .fold(0.0, f64::max)
    }

    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let p = self.p.relabel(perm)?;
        let m = self.m();
        let mut transition = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                transition[perm[i]][perm[j]] = self.transition[i][j];
            }
        }
        Ok(Self { p, transition })
    }
}

/// A Bernoulli or Markov measure.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Bernoulli(ProbVector),
    Markov(MarkovChain),
}

impl Measure {
    pub fn m(&self) -> usize {
        match self {
            Measure::Bernoulli(p) => p.m(),
            Measure::Markov(c) => c.m(),
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            Measure::Bernoulli(p) => entropy_h1(p),
            Measure::Markov(c) => entropy_h2(c),
        }
    }

    /// `μ([a_1 … a_k])`.
    pub fn cylinder(&self, word: &[usize]) -> f64 {
        match self {
            Measure::Bernoulli(p) => word.iter().map(|&a| p.0[a]).product(),
            Measure::Markov(c) => {
                let mut v = c.p.0[word[0]];
                for w in word.windows(2) {
                    v *= c.transition[w[0]][w[1]];
                }
                v
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MeasureSpec {
    Bernoulli(Vec<f64>),
    Markov {
        #[serde(rename = "P")]
        transition: Vec<Vec<f64>>,
    },
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Measure::Bernoulli(p) => MeasureSpec::Bernoulli(p.0.clone()),
            Measure::Markov(c) => MeasureSpec::Markov {
                transition: c.transition.clone(),
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match MeasureSpec::deserialize(d)? {
            MeasureSpec::Bernoulli(p) => ProbVector::new(p).map(Measure::Bernoulli),
            MeasureSpec::Markov { transition } => MarkovChain::new(transition).map(Measure::Markov),
        }
        .map_err(serde::de::Error::custom)
    }
}

impl Serialize for MarkovChain {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("MarkovChain", 2)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("P", &self.transition)?;
        st.end()
    }
}

/// `-x log x` with `0 log 0 = 0`.
#[inline]
pub(crate) fn xlogx_neg(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.ln()
    } else {
        0.0
    }
}

/// `H_1(p) = -Σ p_j log p_j`.
pub fn entropy_h1(p: &ProbVector) -> f64 {
    p.0.iter().map(|&v| xlogx_neg(v)).sum()
}

/// `H_2(p, P) = -Σ_i p_i Σ_j P_ij log P_ij`.
pub fn entropy_h2(chain: &MarkovChain) -> f64 {
    chain
        .p
        .0
        .iter()
        .zip(&chain.transition)
        .map(|(&pi, row)| pi * row.iter().map(|&v| xlogx_neg(v)).sum::<f64>())
        .sum()
}

/// `H(x) = -x log x - (1-x) log(1-x)` on `[0, 1]`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Input(format!("binary entropy needs x in [0, 1], got {x}")));
    }
    Ok(binary_entropy_unchecked(x))
}

#[inline]
pub(crate) fn binary_entropy_unchecked(x: f64) -> f64 {
    xlogx_neg(x) + xlogx_neg(1.0 - x)
}

fn require_shape(kernel: &CylinderKernel, m: usize, k: usize, what: &str) -> Result<()> {
    if kernel.k() != k {
        return Err(Error::UnsupportedForm(format!(
            "{what} needs a depth-{k} kernel, got k = {}",
            kernel.k()
        )));
    }
    if kernel.m() != m {
        return Err(Error::Input(format!(
            "kernel alphabet m = {} does not match measure m = {m}",
            kernel.m()
        )));
    }
    Ok(())
}

/// `A(p) = ∫Φ dμ_p^{⊗r}` for a depth-1 kernel.
pub fn a_of_bernoulli(kernel: &CylinderKernel, p: &ProbVector) -> Result<f64> {
    require_shape(kernel, p.m(), 1, "a_of_bernoulli")?;
    let p = p.as_slice();
    let linear = |t: &[f64]| t.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
    Ok(match kernel.form() {
        KernelForm::Product(fs) => fs.iter().map(|f| linear(f.table())).product(),
        KernelForm::TensorSum(ts) => ts
            .iter()
            .map(|t| t.iter().map(|f| linear(f.table())).product::<f64>())
            .sum(),
        KernelForm::Dense(table) => {
            let mut idx = vec![0usize; kernel.r()];
            let mut acc = 0.0;
            for &v in table {
                acc += v * idx.iter().map(|&j| p[j]).product::<f64>();
                odometer(&mut idx, kernel.m());
            }
            acc
        }
    })
}

/// `A(p, P) = Π_t Σ_{i,j} φ_t(i,j) p_i P_ij` for a depth-2 product kernel.
pub fn a_of_markov(kernel: &CylinderKernel, chain: &MarkovChain) -> Result<f64> {
    require_shape(kernel, chain.m(), 2, "a_of_markov")?;
    chain.check_stationary()?;
    let KernelForm::Product(factors) = kernel.form() else {
        return Err(Error::UnsupportedForm(
            "a_of_markov needs a product-form kernel; use a_of_measure_general".into(),
        ));
    };
    let q = chain.two_block();
    Ok(factors
        .iter()
        .map(|f| f.table().iter().zip(&q).map(|(a, b)| a * b).sum::<f64>())
        .product())
}

/// `Σ_{w_1..w_r} Φ(w_1..w_r) Π_t μ([w_t])` by enumeration of all `r`-tuples
/// of `k`-words, for any kernel form.
pub fn a_of_measure_general(kernel: &CylinderKernel, measure: &Measure, budget: usize) -> Result<f64> {
    if kernel.m() != measure.m() {
        return Err(Error::Input("kernel and measure alphabets differ".into()));
    }
    let size = kernel.dense_size();
    if size > budget as f64 {
        return Err(Error::Resource {
            what: "fiber integral enumeration",
            needed: size,
            budget: budget as f64,
        });
    }
    if let Measure::Markov(c) = measure {
        c.check_stationary()?;
    }
    let words = kernel.words();
    let cyl: Vec<f64> = (0..words)
        .map(|w| measure.cylinder(&index_word(kernel.m(), kernel.k(), w)))
        .collect();
    let mut idx = vec![0usize; kernel.r()];
    let mut acc = 0.0;
    for _ in 0..size as usize {
        let weight: f64 = idx.iter().map(|&w| cyl[w]).product();
        if weight != 0.0 {
            acc += kernel.eval_indices(&idx) * weight;
        }
        odometer(&mut idx, words);
    }
    Ok(acc)
}

fn check_stochastic(transition: &[Vec<f64>]) -> Result<()> {
    let m = transition.len();
    if m < 2 {
        return Err(Error::Input("transition matrix needs m >= 2".into()));
    }
    for (i, row) in transition.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Input(format!("row {i} has {} entries, expected {m}", row.len())));
        }
        if row.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::Input(format!("row {i} has a negative or non-finite entry")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::Input(format!("row {i} sums to {s}, not 1")));
        }
    }
    Ok(())
}

/// Closed communicating classes of the transition graph.
pub fn recurrent_classes(transition: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let m = transition.len();
    let mut reach = vec![vec![false; m]; m];
    for (i, row) in reach.iter_mut().enumerate() {
        let mut stack = vec![i];
        row[i] = true;
        while let Some(u) = stack.pop() {
            for v in 0..m {
                if transition[u][v] > 0.0 && !row[v] {
                    row[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut assigned = vec![false; m];
    for i in 0..m {
        if assigned[i] {
            continue;
        }
        let class: Vec<usize> = (0..m).filter(|&j| reach[i][j] && reach[j][i]).collect();
        class.iter().for_each(|&j| assigned[j] = true);
        let closed = class
            .iter()
            .all(|&u| (0..m).all(|v| !reach[u][v] || class.contains(&v)));
        if closed {
            classes.push(class);
        }
    }
    classes
}

/// The unique `p` with `pP = p`, `Σp = 1`.
pub fn stationary_vector(transition: &[Vec<f64>]) -> Result<ProbVector> {
    check_stochastic(transition)?;
    let classes = recurrent_classes(transition);
    if classes.len() != 1 {
        return Err(Error::Ambiguous { classes });
    }
    let m = transition.len();
    // Rows 0..m-1 of (P^T - I) p = 0, last row replaced by Σp = 1.
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m);
    rhs[m - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("singular stationarity system".into()))?;
    ProbVector::normalized(sol.iter().copied().collect())
}

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Absolute tolerance scaled to the interval: `rel · max(1, |lo|, |hi|)`.
    pub fn tol(&self, rel: f64) -> f64 {
        rel * 1f64.max(self.lo.abs()).max(self.hi.abs())
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    /// `n` equally spaced points from `lo` to `hi` inclusive.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        match n {
            0 => vec![],
            1 => vec![0.5 * (self.lo + self.hi)],
            _ => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        self.hi
                    } else {
                        self.lo + self.width() * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// The set `L_Φ` of values `A(μ)` over the measure class: exact for two
/// symbols and depth 1, multi-start search otherwise.
pub fn spectrum_domain(kernel: &CylinderKernel, class: crate::optimize::MeasureClass) -> Result<Interval> {
    Ok(crate::spectrum::Domain::compute(kernel, class, &crate::optimize::SolverOptions::default())?.interval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::FactorPotential;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn h1_examples() {
        assert!((entropy_h1(&ProbVector::uniform(2)) - LN2).abs() < 1e-15);
        assert_eq!(entropy_h1(&ProbVector::new(vec![1.0, 0.0]).unwrap()), 0.0);
        let a = entropy_h1(&ProbVector::new(vec![0.3, 0.7]).unwrap());
        let b = entropy_h1(&ProbVector::new(vec![0.7, 0.3]).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn h2_examples() {
        let q = ProbVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let c = MarkovChain::bernoulli(&q);
        assert!((entropy_h2(&c) - entropy_h1(&q)).abs() < 1e-15);

        let id = MarkovChain::with_stationary(
            ProbVector::new(vec![1.0, 0.0, 0.0]).unwrap(),
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        )
        .unwrap();
        assert_eq!(entropy_h2(&id), 0.0);

        let half = MarkovChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!((entropy_h2(&half) - LN2).abs() < 1e-15);
    }

    #[test]
    fn binary_entropy_examples() {
        assert!((binary_entropy(0.5).unwrap() - LN2).abs() < 1e-15);
        assert_eq!(binary_entropy(0.2).unwrap(), binary_entropy(0.8).unwrap());
        assert!(binary_entropy(0.6).unwrap() > binary_entropy(0.75).unwrap());
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn a_of_bernoulli_examples() {
        let quad = CylinderKernel::from_roots(&[0.5, 1.5], 1.0).unwrap();
        let at = |x: f64| a_of_bernoulli(&quad, &ProbVector::binary(x).unwrap()).unwrap();
        assert!((at(0.0) - 0.75).abs() < 1e-15);
        assert!((at(1.0) + 0.25).abs() < 1e-15);

        let ind = FactorPotential::indicator(2, 1).unwrap();
        let sq = CylinderKernel::product(vec![ind.clone(), ind]).unwrap();
        let v = a_of_bernoulli(&sq, &ProbVector::new(vec![0.3, 0.7]).unwrap()).unwrap();
        assert!((v - 0.49).abs() < 1e-15);

        let deep = CylinderKernel::constant(2, 1, 2, 1.0).unwrap();
        assert!(matches!(
            a_of_bernoulli(&deep, &ProbVector::uniform(2)),
            Err(Error::UnsupportedForm(_))
        ));
    }

    #[test]
    fn a_of_markov_examples() {
        let chain = MarkovChain::new(vec![vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        let ones = CylinderKernel::constant(2, 3, 2, 1.0).unwrap();
        assert!((a_of_markov(&ones, &chain).unwrap() - 1.0).abs() < 1e-15);

        let off = FactorPotential::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let k = CylinderKernel::product(vec![off]).unwrap();
        let half = MarkovChain::new(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!((a_of_markov(&k, &half).unwrap() - 0.25).abs() < 1e-15);

        // φ_t(i, j) depending only on j reduces to the Bernoulli value.
        let q = ProbVector::new(vec![0.25, 0.75]).unwrap();
        let f1 = FactorPotential::new(2, 1, vec![-0.4, 0.6]).unwrap();
        let f2 = FactorPotential::new(2, 1, vec![1.5, -0.5]).unwrap();
        let lifted = |f: &FactorPotential| {
            FactorPotential::new(2, 2, vec![f.table()[0], f.table()[1], f.table()[0], f.table()[1]]).unwrap()
        };
        let k1 = CylinderKernel::product(vec![f1.clone(), f2.clone()]).unwrap();
        let k2 = CylinderKernel::product(vec![lifted(&f1), lifted(&f2)]).unwrap();
        let a1 = a_of_bernoulli(&k1, &q).unwrap();
        let a2 = a_of_markov(&k2, &MarkovChain::bernoulli(&q)).unwrap();
        assert!((a1 - a2).abs() < 1e-15);

        let bogus = MarkovChain {
            p: ProbVector::new(vec![0.5, 0.5]).unwrap(),
            transition: vec![vec![0.9, 0.1], vec![0.3, 0.7]],
        };
        assert!(matches!(a_of_markov(&ones, &bogus), Err(Error::Invariant(_))));
    }

    #[test]
    fn general_fiber_integral() {
        let c = CylinderKernel::constant(3, 2, 2, 1.7).unwrap();
        let mu = Measure::Markov(
            MarkovChain::new(vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.2, 0.2], vec![0.1, 0.1, 0.8]]).unwrap(),
        );
        assert!((a_of_measure_general(&c, &mu, 1000).unwrap() - 1.7).abs() < 1e-14);

        let k = CylinderKernel::dense(2, 2, 2, (0..16).map(|i| (i as f64).sin()).collect()).unwrap();
        let q = ProbVector::new(vec![0.35, 0.65]).unwrap();
        let b = a_of_measure_general(&k, &Measure::Bernoulli(q.clone()), 1000).unwrap();
        let m = a_of_measure_general(&k, &Measure::Markov(MarkovChain::bernoulli(&q)), 1000).unwrap();
        assert!((b - m).abs() < 1e-15);
        assert!(a_of_measure_general(&k, &Measure::Bernoulli(q), 10).is_err());
    }

    #[test]
    fn stationary_examples() {
        let err = stationary_vector(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap_err();
        assert_eq!(
            err,
            Error::Ambiguous {
                classes: vec![vec![0], vec![1]]
            }
        );
        let p = stationary_vector(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!((p.as_slice()[0] - 0.5).abs() < 1e-15);
        let p = stationary_vector(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        assert!((p.as_slice()[0] - 0.75).abs() < 1e-14 && (p.as_slice()[1] - 0.25).abs() < 1e-14);
        // transient state 0 feeding a single recurrent class
        let p = stationary_vector(&[vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(p.as_slice()[0].abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ProbVector::new(vec![0.6, 0.6]).is_err());
        assert!(ProbVector::new(vec![-0.1, 1.1]).is_err());
        assert!(MarkovChain::new(vec![vec![0.5, 0.6], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn measure_json() {
        let m: Measure = serde_json::from_str(r#"{"markov":{"P":[[0.9,0.1],[0.3,0.7]]}}"#).unwrap();
        let Measure::Markov(c) = &m else { panic!() };
        assert!((c.stationary().as_slice()[0] - 0.75).abs() < 1e-14);
        let b: Measure = serde_json::from_str(r#"{"bernoulli":[0.3,0.7]}"#).unwrap();
        assert_eq!(serde_json::to_string(&b).unwrap(), r#"{"bernoulli":[0.3,0.7]}"#);
        assert!(serde_json::from_str::<Measure>(r#"{"bernoulli":[0.3,0.8]}"#).is_err());
    }
}
