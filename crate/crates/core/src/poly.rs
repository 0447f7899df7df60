//! Dense univariate polynomials with real root isolation on an interval.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A real polynomial stored by ascending coefficients: `c[0] + c[1] x + ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// `(x - r_1)(x - r_2)...(x - r_n)`.
    pub fn from_roots(roots: &[f64]) -> Self {
        roots
            .iter()
            .fold(Self::constant(1.0), |acc, &r| acc.mul(&Self::new(vec![-r, 1.0])))
    }

    fn trim(&mut self) {
        while self.coeffs.len() > 1 && *self.coeffs.last().unwrap() == 0.0 {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(0.0);
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Running error bound for Horner evaluation at `x`.
    fn eval_error_bound(&self, x: f64) -> f64 {
        let ax = x.abs();
        let mag = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * ax + c.abs());
        4.0 * (self.degree() as f64 + 1.0) * f64::EPSILON * mag
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::constant(0.0);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| self.coeffs.get(i).copied().unwrap_or(0.0) + other.coeffs.get(i).copied().unwrap_or(0.0))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `self - c`.
    pub fn shift(&self, c: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] -= c;
        Self::new(coeffs)
    }

    /// All real roots in `[lo, hi]`, sorted and deduplicated.
    ///
    /// Roots are isolated recursively: the critical points of `self` split
    /// the interval into monotone pieces, each of which holds at most one
    /// root, located by bisection down to adjacent floats. Values within the
    /// Horner error bound of zero count as roots, so tangential (double)
    /// roots at critical points are reported. The zero polynomial yields no
    /// roots.
    pub fn real_roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut roots = Vec::new();
        if self.is_zero() || self.degree() == 0 || lo > hi {
            return roots;
        }
        let mut breaks = vec![lo];
        breaks.extend(self.derivative().real_roots_in(lo, hi));
        breaks.push(hi);
        breaks.dedup();

        let is_zero_at = |x: f64| self.eval(x).abs() <= self.eval_error_bound(x);
        for w in breaks.windows(2) {
            let (u, v) = (w[0], w[1]);
            if is_zero_at(u) {
                roots.push(u);
            }
            let (fu, fv) = (self.eval(u), self.eval(v));
            if !is_zero_at(u) && !is_zero_at(v) && (fu < 0.0) != (fv < 0.0) {
                roots.push(self.bisect(u, v, fu));
            }
        }
        if is_zero_at(hi) {
            roots.push(hi);
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + b.abs()));
        roots
    }

    fn bisect(&self, mut u: f64, mut v: f64, fu: f64) -> f64 {
        let neg_at_u = fu < 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (u + v);
            if mid <= u || mid >= v {
                break;
            }
            let fm = self.eval(mid);
            if fm == 0.0 {
                return mid;
            }
            if (fm < 0.0) == neg_at_u {
                u = mid;
            } else {
                v = mid;
            }
        }
        if self.eval(u).abs() <= self.eval(v).abs() {
            u
        } else {
            v
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0.0 && !(first && i == 0) {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            let a = c.abs();
            match i {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}x")?,
                _ => write!(f, "{a}x^{i}")?,
            }
            first = false;
        }
        Ok(())
    }
}
