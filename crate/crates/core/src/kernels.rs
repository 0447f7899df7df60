//! Cylinder kernels `Φ: (Σ_m)^r → ℝ` that read the first `k` symbols of each
//! argument.
//!
//! A kernel is stored in one of three interchangeable forms: a dense table
//! indexed by `r`-tuples of `k`-words, a product of `r` factor potentials, or
//! a sum of such products. Words are indexed in lexicographic order, so the
//! word `a_1 … a_k` sits at `Σ a_i m^{k-i}`; dense tables are row-major in the
//! argument order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Default cap on the number of dense entries `(m^k)^r`.
pub const DEFAULT_DENSE_BUDGET: usize = 10_000_000;

/// A real function of a single `k`-word over `{0,…,m-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPotential {
    m: usize,
    k: usize,
    table: Vec<f64>,
}

impl FactorPotential {
    pub fn new(m: usize, k: usize, table: Vec<f64>) -> Result<Self> {
        if m < 2 {
            return Err(Error::Input(format!("alphabet size must be >= 2, got {m}")));
        }
        if k < 1 {
            return Err(Error::Input("coordinate depth must be >= 1".into()));
        }
        let words = num_words(m, k)?;
        if table.len() != words {
            return Err(Error::Input(format!(
                "factor table has {} entries, expected m^k = {words}",
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite factor value {bad}")));
        }
        Ok(Self { m, k, table })
    }

    /// Factor that ignores its argument.
    pub fn constant(m: usize, k: usize, c: f64) -> Result<Self> {
        Self::new(m, k, vec![c; num_words(m, k)?])
    }

    /// Indicator of a single symbol in the first coordinate (`k = 1`).
    pub fn indicator(m: usize, symbol: usize) -> Result<Self> {
        let mut table = vec![0.0; m];
        *table
            .get_mut(symbol)
            .ok_or_else(|| Error::Input(format!("symbol {symbol} out of range for m = {m}")))? = 1.0;
        Self::new(m, 1, table)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn value(&self, word: &[usize]) -> Result<f64> {
        Ok(self.table[word_index(self.m, self.k, word)?])
    }

    #[inline]
    pub fn value_at(&self, index: usize) -> f64 {
        self.table[index]
    }

    fn sup_abs(&self) -> f64 {
        self.table.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    #[cfg(test)]
    fn negated(&self) -> Self {
        Self {
            table: self.table.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    fn lift(&self, depth: usize) -> Self {
        let extra = self.m.pow((depth - self.k) as u32);
        let table = self.table.iter().flat_map(|&v| std::iter::repeat_n(v, extra)).collect();
        Self {
            m: self.m,
            k: depth,
            table,
        }
    }

    fn relabel(&self, perm: &[usize]) -> Self {
        let mut table = vec![0.0; self.table.len()];
        for (idx, &v) in self.table.iter().enumerate() {
            table[permute_index(self.m, self.k, idx, perm)] = v;
        }
        Self { table, ..self.clone() }
    }
}

/// Storage form of a [`CylinderKernel`].
#[derive(Debug, Clone, PartialEq)]
pub enum KernelForm {
    /// Table of size `(m^k)^r`, row-major over the argument tuple.
    Dense(Vec<f64>),
    /// `φ_1 ⊗ … ⊗ φ_r`.
    Product(Vec<FactorPotential>),
    /// `Σ_j f_j^{(1)} ⊗ … ⊗ f_j^{(r)}`.
    TensorSum(Vec<Vec<FactorPotential>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CylinderKernel {
    m: usize,
    r: usize,
    k: usize,
    form: KernelForm,
}

impl CylinderKernel {
    pub fn dense(m: usize, r: usize, k: usize, table: Vec<f64>) -> Result<Self> {
        if m < 2 || r < 1 || k < 1 {
            return Err(Error::Input(format!("need m >= 2, r >= 1, k >= 1 (got {m}, {r}, {k})")));
        }
        let words = num_words(m, k)?;
        let size = checked_pow(words, r)?;
        if table.len() != size {
            return Err(Error::Input(format!(
                "dense table has {} entries, expected (m^k)^r = {size}",
                table.len()
            )));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("dense table holds a non-finite value".into()));
        }
        Ok(Self {
            m,
            r,
            k,
            form: KernelForm::Dense(table),
        })
    }

    pub fn product(factors: Vec<FactorPotential>) -> Result<Self> {
        let (m, k) = shared_shape(&factors)?;
        Ok(Self {
            m,
            r: factors.len(),
            k,
            form: KernelForm::Product(factors),
        })
    }

    pub fn tensor_sum(terms: Vec<Vec<FactorPotential>>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Input("tensor sum needs at least one term".into()))?;
        let (m, k) = shared_shape(first)?;
        let r = first.len();
        for term in &terms {
            let (tm, tk) = shared_shape(term)?;
            if term.len() != r || tm != m || tk != k {
                return Err(Error::Input("all tensor-sum terms must share m, k and arity".into()));
            }
        }
        Ok(Self {
            m,
            r,
            k,
            form: KernelForm::TensorSum(terms),
        })
    }

    /// The monic product `Π_t (x - a_t)` in the frequency `x` of symbol 1
    /// on two symbols, i.e. `φ_t = [-a_t, 1 - a_t]`, times `scale`.
    pub fn from_roots(roots: &[f64], scale: f64) -> Result<Self> {
        if roots.is_empty() {
            return Err(Error::Input("root form needs at least one root".into()));
        }
        if !scale.is_finite() || scale == 0.0 {
            return Err(Error::Input(format!("scale must be finite and nonzero, got {scale}")));
        }
        let factors = roots
            .iter()
            .enumerate()
            .map(|(t, &a)| {
                let s = if t == 0 { scale } else { 1.0 };
                FactorPotential::new(2, 1, vec![-a * s, (1.0 - a) * s])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::product(factors)
    }

    pub fn constant(m: usize, r: usize, k: usize, c: f64) -> Result<Self> {
        let mut factors = vec![FactorPotential::constant(m, k, 1.0)?; r];
        factors[0] = FactorPotential::constant(m, k, c)?;
        Self::product(factors)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn form(&self) -> &KernelForm {
        &self.form
    }

    pub fn words(&self) -> usize {
        self.m.pow(self.k as u32)
    }

    /// Number of entries of the equivalent dense table.
    pub fn dense_size(&self) -> f64 {
        (self.words() as f64).powi(self.r as i32)
    }

    /// `Φ(args)` for an `r`-tuple of `k`-words.
    pub fn eval(&self, args: &[&[usize]]) -> Result<f64> {
        if args.len() != self.r {
            return Err(Error::Input(format!(
                "kernel takes {} arguments, got {}",
                self.r,
                args.len()
            )));
        }
        let idx = args
            .iter()
            .map(|w| word_index(self.m, self.k, w))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.eval_indices(&idx))
    }

    /// `Φ` at an `r`-tuple of word indices (unchecked).
    #[inline]
    pub fn eval_indices(&self, idx: &[usize]) -> f64 {
        match &self.form {
            KernelForm::Dense(table) => {
                let words = self.words();
                let flat = idx.iter().fold(0, |acc, &i| acc * words + i);
                table[flat]
            }
            KernelForm::Product(factors) => product_at(factors, idx),
            KernelForm::TensorSum(terms) => terms.iter().map(|t| product_at(t, idx)).sum(),
        }
    }

    /// Equivalent [`KernelForm::Dense`] kernel.
    pub fn to_dense(&self, budget: usize) -> Result<Self> {
        if let KernelForm::Dense(_) = self.form {
            return Ok(self.clone());
        }
        let size = self.dense_size();
        if size > budget as f64 {
            return Err(Error::Resource {
                what: "dense kernel table",
                needed: size,
                budget: budget as f64,
            });
        }
        let size = size as usize;
        let words = self.words();
        let mut idx = vec![0usize; self.r];
        let mut table = Vec::with_capacity(size);
        for _ in 0..size {
            table.push(self.eval_indices(&idx));
            odometer(&mut idx, words);
        }
        Self::dense(self.m, self.r, self.k, table)
    }

    /// `‖Φ‖_∞`, exact by enumeration within `budget` dense entries.
    pub fn sup_norm(&self, budget: usize) -> Result<f64> {
        match &self.form {
            KernelForm::Product(factors) => Ok(factors.iter().map(|f| f.sup_abs()).product()),
            KernelForm::Dense(table) => Ok(table.iter().fold(0.0, |a, v| a.max(v.abs()))),
            KernelForm::TensorSum(_) => self.to_dense(budget)?.sup_norm(budget),
        }
    }

    /// Sum-of-products view: `(weight, factors)` terms whose sum is `Φ`.
    /// Dense tables expand into one indicator product per nonzero entry.
    pub fn product_terms(&self) -> Vec<(f64, Vec<Vec<f64>>)> {
        let tables = |fs: &[FactorPotential]| fs.iter().map(|f| f.table.clone()).collect();
        match &self.form {
            KernelForm::Product(factors) => vec![(1.0, tables(factors))],
            KernelForm::TensorSum(terms) => terms.iter().map(|t| (1.0, tables(t))).collect(),
            KernelForm::Dense(table) => {
                let words = self.words();
                let mut idx = vec![0usize; self.r];
                let mut out = Vec::new();
                for &v in table {
                    if v != 0.0 {
                        let factors = idx
                            .iter()
                            .map(|&i| {
                                let mut e = vec![0.0; words];
                                e[i] = 1.0;
                                e
                            })
                            .collect();
                        out.push((v, factors));
                    }
                    odometer(&mut idx, words);
                }
                out
            }
        }
    }

    /// The same kernel viewed as depending on the first `depth >= k`
    /// coordinates.
    pub fn lift(&self, depth: usize) -> Result<Self> {
        if depth < self.k {
            return Err(Error::Input(format!(
                "cannot lift depth {} kernel to depth {depth}",
                self.k
            )));
        }
        if depth == self.k {
            return Ok(self.clone());
        }
        let form = match &self.form {
            KernelForm::Product(fs) => KernelForm::Product(fs.iter().map(|f| f.lift(depth)).collect()),
            KernelForm::TensorSum(ts) => {
                KernelForm::TensorSum(ts.iter().map(|t| t.iter().map(|f| f.lift(depth)).collect()).collect())
            }
            KernelForm::Dense(_) => {
                let new_words = self.m.pow(depth as u32);
                let size = checked_pow(new_words, self.r)?;
                let shift = self.m.pow((depth - self.k) as u32);
                let mut idx = vec![0usize; self.r];
                let mut table = Vec::with_capacity(size);
                let mut old = vec![0usize; self.r];
                for _ in 0..size {
                    for (o, &i) in old.iter_mut().zip(&idx) {
                        *o = i / shift;
                    }
                    table.push(self.eval_indices(&old));
                    odometer(&mut idx, new_words);
                }
                KernelForm::Dense(table)
            }
        };
        Ok(Self {
            k: depth,
            form,
            ..self.clone()
        })
    }

    /// Kernel `Φ'` with `Φ'(π·w) = Φ(w)` where `π` relabels every symbol.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(self.m, perm)?;
        let form = match &self.form {
            KernelForm::Product(fs) => KernelForm::Product(fs.iter().map(|f| f.relabel(perm)).collect()),
            KernelForm::TensorSum(ts) => {
                KernelForm::TensorSum(ts.iter().map(|t| t.iter().map(|f| f.relabel(perm)).collect()).collect())
            }
            KernelForm::Dense(table) => {
                let words = self.words();
                let mut out = vec![0.0; table.len()];
                let mut idx = vec![0usize; self.r];
                for &v in table {
                    let flat = idx
                        .iter()
                        .fold(0, |acc, &i| acc * words + permute_index(self.m, self.k, i, perm));
                    out[flat] = v;
                    odometer(&mut idx, words);
                }
                KernelForm::Dense(out)
            }
        };
        Ok(Self { form, ..self.clone() })
    }

    /// `A(x) = ∫Φ dμ_{(1-x, x)}^{⊗r}` as a polynomial in the frequency `x`
    /// of symbol 1. Requires `m = 2`, `k = 1`.
    pub fn bernoulli_polynomial(&self) -> Result<Polynomial> {
        if self.m != 2 || self.k != 1 {
            return Err(Error::UnsupportedForm(format!(
                "Bernoulli polynomial needs m = 2 and k = 1 (got m = {}, k = {})",
                self.m, self.k
            )));
        }
        let linear = |f: &FactorPotential| Polynomial::new(vec![f.table[0], f.table[1] - f.table[0]]);
        let product = |fs: &[FactorPotential]| fs.iter().fold(Polynomial::constant(1.0), |acc, f| acc.mul(&linear(f)));
        Ok(match &self.form {
            KernelForm::Product(fs) => product(fs),
            KernelForm::TensorSum(ts) => ts.iter().fold(Polynomial::constant(0.0), |acc, t| acc.add(&product(t))),
            KernelForm::Dense(table) => {
                let marginals = [Polynomial::new(vec![1.0, -1.0]), Polynomial::new(vec![0.0, 1.0])];
                let mut idx = vec![0usize; self.r];
                let mut acc = Polynomial::constant(0.0);
                for &v in table {
                    let term = idx.iter().fold(Polynomial::constant(v), |p, &j| p.mul(&marginals[j]));
                    acc = acc.add(&term);
                    odometer(&mut idx, 2);
                }
                acc
            }
        })
    }

    /// Decompose a two-symbol, depth-1 kernel as `scale · Π (x - a_t)` with
    /// distinct real roots `a_1 < … < a_r`.
    pub fn root_form(&self) -> Result<RootForm> {
        let poly = self.bernoulli_polynomial()?;
        if poly.degree() != self.r {
            return Err(Error::Degenerate(format!(
                "A(x) = {poly} has degree {} < r = {}",
                poly.degree(),
                self.r
            )));
        }
        let scale = poly.leading();
        let monic = poly.scale(1.0 / scale);
        let bound = 1.0
            + monic.coeffs()[..monic.degree()]
                .iter()
                .fold(0.0f64, |a, c| a.max(c.abs()));
        let roots = monic.real_roots_in(-bound, bound);
        if roots.len() != self.r {
            return Err(Error::Degenerate(format!(
                "A(x) = {poly} does not have {} distinct real roots",
                self.r
            )));
        }
        Ok(RootForm { scale, roots })
    }
}

/// `A(x) = scale · Π_t (x - roots[t])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootForm {
    pub scale: f64,
    pub roots: Vec<f64>,
}

#[inline]
fn product_at(factors: &[FactorPotential], idx: &[usize]) -> f64 {
    factors.iter().zip(idx).map(|(f, &i)| f.table[i]).product()
}

fn shared_shape(factors: &[FactorPotential]) -> Result<(usize, usize)> {
    let first = factors
        .first()
        .ok_or_else(|| Error::Input("need at least one factor (r >= 1)".into()))?;
    if factors.iter().any(|f| f.m != first.m || f.k != first.k) {
        return Err(Error::Input("all factor potentials must share m and k".into()));
    }
    Ok((first.m, first.k))
}

fn checked_pow(base: usize, exp: usize) -> Result<usize> {
    base.checked_pow(exp as u32).ok_or(Error::Resource {
        what: "table size",
        needed: (base as f64).powi(exp as i32),
        budget: usize::MAX as f64,
    })
}

/// `m^k`.
pub fn num_words(m: usize, k: usize) -> Result<usize> {
    checked_pow(m, k)
}

/// Lexicographic index of a `k`-word.
pub fn word_index(m: usize, k: usize, word: &[usize]) -> Result<usize> {
    if word.len() != k {
        return Err(Error::Input(format!("word length {} != k = {k}", word.len())));
    }
    word.iter().try_fold(0usize, |acc, &a| {
        if a >= m {
            Err(Error::Input(format!("symbol {a} out of range for m = {m}")))
        } else {
            Ok(acc * m + a)
        }
    })
}

/// Inverse of [`word_index`].
pub fn index_word(m: usize, k: usize, mut index: usize) -> Vec<usize> {
    let mut word = vec![0; k];
    for slot in word.iter_mut().rev() {
        *slot = index % m;
        index /= m;
    }
    word
}

fn permute_index(m: usize, k: usize, index: usize, perm: &[usize]) -> usize {
    index_word(m, k, index).into_iter().fold(0, |acc, a| acc * m + perm[a])
}

pub(crate) fn check_permutation(m: usize, perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; m];
    if perm.len() != m || perm.iter().any(|&a| a >= m || std::mem::replace(&mut seen[a], true)) {
        return Err(Error::Input(format!("{perm:?} is not a permutation of 0..{m}")));
    }
    Ok(())
}

/// Advance a little-endian-last multi-index (last slot fastest).
pub(crate) fn odometer(idx: &mut [usize], base: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < base {
            return;
        }
        *slot = 0;
    }
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormSpec {
    Dense(Vec<f64>),
    Product(Vec<Vec<f64>>),
    TensorSum(Vec<Vec<Vec<f64>>>),
}

/// On-disk kernel description.
///
/// Either the explicit form
/// `{"m": 2, "r": 2, "k": 1, "form": {"product": [[-0.5, 0.5], [-1.5, -0.5]]}}`
/// or the two-symbol root shorthand `{"roots": [0.5, 1.5], "scale": 1.0}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Roots {
        roots: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        scale: Option<f64>,
    },
    Full {
        m: usize,
        r: usize,
        k: usize,
        form: FormSpec,
    },
}

impl KernelSpec {
    pub fn build(&self) -> Result<CylinderKernel> {
        match self {
            KernelSpec::Roots { roots, scale } => CylinderKernel::from_roots(roots, scale.unwrap_or(1.0)),
            KernelSpec::Full { m, r, k, form } => {
                let factor = |t: &Vec<f64>| FactorPotential::new(*m, *k, t.clone());
                let kernel = match form {
                    FormSpec::Dense(t) => CylinderKernel::dense(*m, *r, *k, t.clone())?,
                    FormSpec::Product(fs) => CylinderKernel::product(fs.iter().map(factor).collect::<Result<_>>()?)?,
                    FormSpec::TensorSum(ts) => CylinderKernel::tensor_sum(
                        ts.iter()
                            .map(|t| t.iter().map(factor).collect::<Result<Vec<_>>>())
                            .collect::<Result<_>>()?,
                    )?,
                };
                if kernel.r != *r {
                    return Err(Error::Input(format!(
                        "declared r = {r} but the form has {} factors",
                        kernel.r
                    )));
                }
                Ok(kernel)
            }
        }
    }
}

impl From<&CylinderKernel> for KernelSpec {
    fn from(k: &CylinderKernel) -> Self {
        let tables = |fs: &[FactorPotential]| fs.iter().map(|f| f.table.clone()).collect();
        let form = match &k.form {
            KernelForm::Dense(t) => FormSpec::Dense(t.clone()),
            KernelForm::Product(fs) => FormSpec::Product(tables(fs)),
            KernelForm::TensorSum(ts) => FormSpec::TensorSum(ts.iter().map(|t| tables(t)).collect()),
        };
        KernelSpec::Full {
            m: k.m,
            r: k.r,
            k: k.k,
            form,
        }
    }
}

impl Serialize for CylinderKernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        KernelSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for CylinderKernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        KernelSpec::deserialize(d)?.build().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(m: usize, k: usize, t: &[f64]) -> FactorPotential {
        FactorPotential::new(m, k, t.to_vec()).unwrap()
    }

    #[test]
    fn product_of_indicators() {
        let phi = fp(2, 1, &[0.0, 1.0]);
        let k = CylinderKernel::product(vec![phi.clone(), phi]).unwrap();
        assert_eq!(k.eval(&[&[1], &[1]]).unwrap(), 1.0);
        assert_eq!(k.eval(&[&[0], &[1]]).unwrap(), 0.0);
    }

    #[test]
    fn eval_rejects_bad_words() {
        let k = CylinderKernel::constant(2, 2, 1, 1.0).unwrap();
        assert!(matches!(k.eval(&[&[2], &[0]]), Err(Error::Input(_))));
        assert!(matches!(k.eval(&[&[0, 1], &[0]]), Err(Error::Input(_))));
        assert!(matches!(k.eval(&[&[0]]), Err(Error::Input(_))));
    }

    #[test]
    fn mismatched_factors_rejected() {
        let r = CylinderKernel::product(vec![fp(2, 1, &[0.0, 1.0]), fp(3, 1, &[0.0, 1.0, 2.0])]);
        assert!(r.is_err());
    }

    #[test]
    fn cubic_dense_matches_direct_factor_multiplication() {
        let k = CylinderKernel::from_roots(&[0.4, 1.0, 2.0], 1.0).unwrap();
        let d = k.to_dense(DEFAULT_DENSE_BUDGET).unwrap();
        let phis = [[-0.4, 0.6], [-1.0, 0.0], [-2.0, -1.0]];
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let direct = phis[0][a] * phis[1][b] * phis[2][c];
                    assert_eq!(d.eval(&[&[a], &[b], &[c]]).unwrap(), direct);
                    assert_eq!(k.eval(&[&[a], &[b], &[c]]).unwrap(), direct);
                }
            }
        }
    }

    #[test]
    fn to_dense_examples() {
        let ones = CylinderKernel::constant(2, 2, 1, 1.0).unwrap();
        match ones.to_dense(100).unwrap().form() {
            KernelForm::Dense(t) => assert_eq!(t, &vec![1.0; 4]),
            _ => unreachable!(),
        }

        let f = fp(3, 1, &[0.3, -1.0, 2.0]);
        let g = fp(3, 1, &[1.0, 0.5, -0.25]);
        let cancel = CylinderKernel::tensor_sum(vec![vec![f.clone(), g.clone()], vec![f.negated(), g]]).unwrap();
        match cancel.to_dense(100).unwrap().form() {
            KernelForm::Dense(t) => assert!(t.iter().all(|&v| v == 0.0)),
            _ => unreachable!(),
        }

        let centered = CylinderKernel::product(vec![fp(2, 1, &[-0.5, 0.5]), fp(2, 1, &[-1.5, -0.5])]).unwrap();
        match centered.to_dense(100).unwrap().form() {
            KernelForm::Dense(t) => assert_eq!(t, &vec![0.75, 0.25, -0.75, -0.25]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn to_dense_budget() {
        let k = CylinderKernel::constant(4, 3, 2, 1.0).unwrap();
        assert!(matches!(k.to_dense(1000), Err(Error::Resource { .. })));
    }

    #[test]
    fn bernoulli_polynomial_examples() {
        let phi = fp(2, 1, &[0.0, 1.0]);
        let sq = CylinderKernel::product(vec![phi.clone(), phi]).unwrap();
        assert_eq!(sq.bernoulli_polynomial().unwrap().coeffs(), &[0.0, 0.0, 1.0]);

        let quad = CylinderKernel::from_roots(&[0.5, 1.5], 1.0).unwrap();
        assert_eq!(quad.bernoulli_polynomial().unwrap().coeffs(), &[0.75, -2.0, 1.0]);

        let cubic = CylinderKernel::from_roots(&[0.4, 1.0, 2.0], 1.0).unwrap();
        let p = cubic.bernoulli_polynomial().unwrap();
        for (c, want) in p.coeffs().iter().zip([-0.8, 3.2, -3.4, 1.0]) {
            assert!((c - want).abs() < 1e-15);
        }
        let crit = p.derivative().real_roots_in(0.0, 2.0);
        assert!((crit[0] - 2.0 / 3.0).abs() < 1e-12 && (crit[1] - 1.6).abs() < 1e-12);

        let dense = cubic.to_dense(100).unwrap().bernoulli_polynomial().unwrap();
        for (a, b) in dense.coeffs().iter().zip(p.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(CylinderKernel::constant(3, 2, 1, 1.0)
            .unwrap()
            .bernoulli_polynomial()
            .is_err());
    }

    #[test]
    fn root_form_recovers_scale_and_roots() {
        let k = CylinderKernel::from_roots(&[0.15, 0.7, 0.8], -2.5).unwrap();
        let rf = k.root_form().unwrap();
        assert!((rf.scale + 2.5).abs() < 1e-14);
        for (a, b) in rf.roots.iter().zip([0.15, 0.7, 0.8]) {
            assert!((a - b).abs() < 1e-12);
        }
        let double = CylinderKernel::from_roots(&[0.9, 0.9], 1.0).unwrap();
        assert!(matches!(double.root_form(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn json_shorthand_and_full_form() {
        let k: CylinderKernel = serde_json::from_str(r#"{"roots":[0.5,1.5]}"#).unwrap();
        assert_eq!(k.eval(&[&[0], &[1]]).unwrap(), -0.5 * -0.5);
        let text = serde_json::to_string(&k).unwrap();
        let back: CylinderKernel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, k);
        let bad = serde_json::from_str::<CylinderKernel>(r#"{"m":2,"r":3,"k":1,"form":{"product":[[0,1],[0,1]]}}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn lift_and_relabel() {
        let k = CylinderKernel::dense(2, 2, 1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let l = k.lift(2).unwrap();
        assert_eq!(l.eval(&[&[1, 0], &[0, 1]]).unwrap(), 3.0);
        let s = k.relabel(&[1, 0]).unwrap();
        assert_eq!(s.eval(&[&[0], &[0]]).unwrap(), 4.0);
        assert!(k.relabel(&[0, 0]).is_err());
    }

    #[test]
    fn word_index_roundtrip() {
        for i in 0..27 {
            assert_eq!(word_index(3, 3, &index_word(3, 3, i)).unwrap(), i);
        }
    }
}
