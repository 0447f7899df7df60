//! Exact analysis of two-symbol, depth-1 kernels with quadratic and cubic
//! `A(x) = ∫Φ dμ_{(1-x,x)}^{⊗r}`.
//!
//! The spectrum value at `α` is `H(x_α)` where `x_α` is the root of
//! `A(x) = α` in `[0, 1]` closest to `1/2`. Roots come from the quadratic
//! formula or the trigonometric / Cardano solution of the depressed cubic,
//! followed by one guarded Newton step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::rng_for;
use crate::error::{Error, Result};
use crate::measures::{binary_entropy_unchecked, Interval};
use crate::poly::Polynomial;
use crate::spectrum::{Discontinuity, PointStatus, SpectrumCurve, SpectrumPoint};
use crate::{Measure, ProbVector};

/// Roots this close to each other are the same root.
const ROOT_MERGE: f64 = 1e-12;
/// Tie tolerance on `|x - 1/2|`.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QuadraticCase {
    I,
    II,
    III,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Situation {
    #[serde(rename = "monotone")]
    Monotone,
    I,
    II,
    III,
    #[serde(rename = "other")]
    Other,
}

impl std::fmt::Display for QuadraticCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
        })
    }
}

impl std::fmt::Display for Situation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Monotone => "monotone",
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
            Self::Other => "other",
        })
    }
}

/// A jump of the spectrum, oriented by increasing `α`: the entropy goes
/// from `h_from` (left limit, maximizer `x_from`) to `h_to` (right limit,
/// maximizer `x_to`), and equals `value` at `alpha` itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub alpha: f64,
    pub h_from: f64,
    pub h_to: f64,
    pub x_from: f64,
    pub x_to: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadraticAnalysis {
    pub a: f64,
    pub b: f64,
    pub x_star: f64,
    pub case_label: QuadraticCase,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub domain: Interval,
    pub maximizer_interval: (f64, f64),
    pub polynomial: Polynomial,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubicAnalysis {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x_max: Option<f64>,
    pub x_min: Option<f64>,
    pub x_prime: Option<f64>,
    pub x_dprime: Option<f64>,
    pub situation: Situation,
    pub domain: Interval,
    pub branch_intervals: Vec<(f64, f64)>,
    pub discontinuities: Vec<Jump>,
    pub polynomial: Polynomial,
}

/// Common view of the two analyses.
pub trait ClosedForm {
    fn polynomial(&self) -> &Polynomial;
    fn domain(&self) -> Interval;
    fn jumps(&self) -> Vec<Jump>;
    /// Intervals of `[0, 1]` made of maximizing points.
    fn branches(&self) -> Vec<(f64, f64)>;
}

impl ClosedForm for QuadraticAnalysis {
    fn polynomial(&self) -> &Polynomial {
        &self.polynomial
    }
    fn domain(&self) -> Interval {
        self.domain
    }
    fn jumps(&self) -> Vec<Jump> {
        Vec::new()
    }
    fn branches(&self) -> Vec<(f64, f64)> {
        vec![self.maximizer_interval]
    }
}

impl ClosedForm for CubicAnalysis {
    fn polynomial(&self) -> &Polynomial {
        &self.polynomial
    }
    fn domain(&self) -> Interval {
        self.domain
    }
    fn jumps(&self) -> Vec<Jump> {
        self.discontinuities.clone()
    }
    fn branches(&self) -> Vec<(f64, f64)> {
        self.branch_intervals.clone()
    }
}

fn sorted_distinct(mut roots: Vec<f64>) -> Result<Vec<f64>> {
    if roots.iter().any(|r| !r.is_finite()) {
        return Err(Error::Input("roots must be finite".into()));
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if roots.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Degenerate(format!("repeated root in {roots:?}")));
    }
    Ok(roots)
}

/// `L_Φ` for a polynomial on `[0, 1]`: extremes over the endpoints and the
/// interior critical points.
fn poly_domain(poly: &Polynomial, critical: &[f64]) -> Interval {
    let vals: Vec<f64> = [0.0, 1.0]
        .iter()
        .chain(critical.iter().filter(|&&x| x > 0.0 && x < 1.0))
        .map(|&x| poly.eval(x))
        .collect();
    Interval {
        lo: vals.iter().copied().fold(f64::INFINITY, f64::min),
        hi: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

pub fn analyze_quadratic(a: f64, b: f64) -> Result<QuadraticAnalysis> {
    let r = sorted_distinct(vec![a, b])?;
    let (a, b) = (r[0], r[1]);
    let poly = Polynomial::from_roots(&[a, b]);
    let x_star = 0.5 * (a + b);
    let (case_label, maximizer_interval) = if x_star <= 0.0 || x_star >= 1.0 {
        (QuadraticCase::I, (0.0, 1.0))
    } else if x_star <= 0.5 {
        (QuadraticCase::II, (x_star, 1.0))
    } else {
        (QuadraticCase::III, (0.0, x_star))
    };
    let note = (x_star == 0.5).then(|| "x* = 1/2 satisfies both Case II and Case III; labelled II".to_string());
    Ok(QuadraticAnalysis {
        a,
        b,
        x_star,
        case_label,
        note,
        domain: poly_domain(&poly, &[x_star]),
        maximizer_interval,
        polynomial: poly,
    })
}

/// Real roots of `3x² - 2Sx + P₂` (the derivative of the monic cubic), ascending.
fn cubic_critical_points(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    let s = a + b + c;
    let p2 = a * b + b * c + c * a;
    let disc = s * s - 3.0 * p2;
    if disc <= 0.0 {
        return None;
    }
    // stable quadratic formula for 3x² - 2Sx + P₂
    let q = s + s.signum() * disc.sqrt();
    let (r1, r2) = if q == 0.0 {
        (-disc.sqrt() / 3.0, disc.sqrt() / 3.0)
    } else {
        (q / 3.0, p2 / q)
    };
    Some((r1.min(r2), r1.max(r2)))
}

pub fn analyze_cubic(a: f64, b: f64, c: f64) -> Result<CubicAnalysis> {
    let r = sorted_distinct(vec![a, b, c])?;
    let (a, b, c) = (r[0], r[1], r[2]);
    let poly = Polynomial::from_roots(&[a, b, c]);
    let s = a + b + c;
    let crit = cubic_critical_points(a, b, c);
    let (x_max, x_min) = match crit {
        Some((u, v)) => (Some(u), Some(v)),
        None => (None, None),
    };
    let x_prime = x_max.map(|x| s - 2.0 * x);
    let x_dprime = x_min.map(|x| s - 2.0 * x);
    let situation = match (x_max, x_min) {
        (Some(u), Some(v)) => {
            if (0.5..1.0).contains(&u) && v > 1.0 {
                Situation::I
            } else if (0.5..1.0).contains(&u) && v < 1.0 {
                Situation::II
            } else if u > 0.0 && u < 0.5 && v > 0.5 && v < 1.0 {
                Situation::III
            } else {
                Situation::Other
            }
        }
        _ => Situation::Monotone,
    };
    let critical: Vec<f64> = [x_max, x_min].into_iter().flatten().collect();
    let domain = poly_domain(&poly, &critical);
    let discontinuities = critical_jumps(&poly, &critical, s);
    let branch_intervals = maximizer_intervals(
        &poly,
        &critical,
        &[x_prime, x_dprime].into_iter().flatten().collect::<Vec<_>>(),
    );
    Ok(CubicAnalysis {
        a,
        b,
        c,
        x_max,
        x_min,
        x_prime,
        x_dprime,
        situation,
        domain,
        branch_intervals,
        discontinuities,
        polynomial: poly,
    })
}

/// Jumps at critical values: a critical point `x_c` in `(0, 1)` whose
/// companion root `x_o = S - 2x_c` lies in `[0, 1]` and is strictly farther
/// from `1/2`. The branch through `x_c` ends at `α = A(x_c)`.
fn critical_jumps(poly: &Polynomial, critical: &[f64], s: f64) -> Vec<Jump> {
    let second = poly.derivative().derivative();
    let mut jumps: Vec<Jump> = critical
        .iter()
        .filter(|&&x| x > 0.0 && x < 1.0)
        .filter_map(|&xc| {
            let xo = s - 2.0 * xc;
            if !(0.0..=1.0).contains(&xo) || (xc - 0.5).abs() >= (xo - 0.5).abs() {
                return None;
            }
            let hc = binary_entropy_unchecked(xc);
            let ho = binary_entropy_unchecked(xo);
            // local max of A: the x_c branch lives on the left of α*
            let branch_on_left = second.eval(xc) < 0.0;
            let (h_from, h_to, x_from, x_to) = if branch_on_left {
                (hc, ho, xc, xo)
            } else {
                (ho, hc, xo, xc)
            };
            Some(Jump {
                alpha: poly.eval(xc),
                h_from,
                h_to,
                x_from,
                x_to,
                value: hc,
            })
        })
        .collect();
    jumps.sort_by(|a, b| a.alpha.partial_cmp(&b.alpha).unwrap());
    jumps
}

/// Whether `x` is a root of `A = A(x)` closest to `1/2` (ties count).
pub fn is_maximizing_point(poly: &Polynomial, x: f64) -> bool {
    match maximizing_root(poly, poly.eval(x)) {
        Ok(best) => (x - 0.5).abs() <= (best.first() - 0.5).abs() + TIE_TOL,
        Err(_) => false,
    }
}

/// Maximizing branches of `[0, 1]`, split at critical points, their
/// companion roots and the points where `A(x) = A(1 - x)`.
fn maximizer_intervals(poly: &Polynomial, critical: &[f64], companions: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0, 1.0];
    cuts.extend(
        critical
            .iter()
            .chain(companions)
            .copied()
            .filter(|&x| x > 0.0 && x < 1.0),
    );
    let reflected = compose_reflection(poly);
    let diff = poly.add(&reflected.scale(-1.0));
    let scale = poly.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if diff.coeffs().iter().any(|c| c.abs() > 1e-12 * scale) {
        cuts.extend(diff.real_roots_in(0.0, 1.0).into_iter().filter(|&x| x > 0.0 && x < 1.0));
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        if !is_maximizing_point(poly, 0.5 * (w[0] + w[1])) {
            continue;
        }
        match out.last_mut() {
            Some(last) if (last.1 - w[0]).abs() < 1e-12 => last.1 = w[1],
            _ => out.push((w[0], w[1])),
        }
    }
    out
}

/// `x ↦ A(1 - x)`.
fn compose_reflection(poly: &Polynomial) -> Polynomial {
    let one_minus_x = Polynomial::new(vec![1.0, -1.0]);
    poly.coeffs().iter().rev().fold(Polynomial::constant(0.0), |acc, &c| {
        acc.mul(&one_minus_x).add(&Polynomial::constant(c))
    })
}

/// The root nearest `1/2`, or two equidistant roots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxRoot {
    One(f64),
    Tie(f64, f64),
}

impl MaxRoot {
    pub fn first(&self) -> f64 {
        match *self {
            Self::One(x) | Self::Tie(x, _) => x,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        match *self {
            Self::One(x) => vec![x],
            Self::Tie(x, y) => vec![x, y],
        }
    }
}

/// Real roots of `c0 + c1 x + c2 x² + c3 x³` from the closed formulas.
fn closed_form_roots(c: &[f64]) -> Vec<f64> {
    let deg = c.len().saturating_sub(1);
    match deg {
        0 => vec![],
        1 => vec![-c[0] / c[1]],
        2 => {
            let (a, b, k) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * k;
            if disc < 0.0 {
                // tangency lost to rounding is recovered by the snapping step
                return vec![-b / (2.0 * a)];
            }
            let q = -0.5 * (b + b.signum() * disc.sqrt());
            if q == 0.0 {
                return vec![0.0];
            }
            vec![q / a, k / q]
        }
        3 => {
            let (b, cc, d) = (c[2] / c[3], c[1] / c[3], c[0] / c[3]);
            let shift = b / 3.0;
            let p = cc - b * b / 3.0;
            let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
            if p < 0.0 {
                let m = 2.0 * (-p / 3.0).sqrt();
                let arg = 3.0 * q / (p * m);
                if arg.abs() <= 1.0 + 1e-9 {
                    let theta = arg.clamp(-1.0, 1.0).acos() / 3.0;
                    return (0..3)
                        .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
                        .collect();
                }
            }
            let disc = q * q / 4.0 + p * p * p / 27.0;
            let sq = disc.max(0.0).sqrt();
            let t = (-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt();
            vec![t - shift]
        }
        _ => vec![],
    }
}

/// One Newton step, kept only if it reduces the residual.
fn newton_polish(poly: &Polynomial, deriv: &Polynomial, x: f64) -> f64 {
    let f = poly.eval(x);
    let d = deriv.eval(x);
    if d == 0.0 || f == 0.0 {
        return x;
    }
    let y = x - f / d;
    if y.is_finite() && poly.eval(y).abs() < f.abs() {
        y
    } else {
        x
    }
}

/// Roots of `poly = α` in `[0, 1]`, closed form, ascending.
pub fn roots_in_unit(poly: &Polynomial, alpha: f64) -> Vec<f64> {
    let shifted = poly.shift(alpha);
    let deriv = shifted.derivative();
    let scale = shifted
        .coeffs()
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()))
        .max(alpha.abs());
    let critical = match deriv.degree() {
        1 if !deriv.is_zero() => closed_form_roots(deriv.coeffs()),
        2 => closed_form_roots(deriv.coeffs()),
        _ => vec![],
    };
    let mut roots: Vec<f64> = closed_form_roots(shifted.coeffs())
        .into_iter()
        .map(|x| {
            // snap onto a tangency so double roots are exact
            for &xc in &critical {
                if (x - xc).abs() < 1e-6 && shifted.eval(xc).abs() <= 64.0 * f64::EPSILON * scale {
                    return xc;
                }
            }
            newton_polish(&shifted, &deriv, x)
        })
        .filter(|&x| (-ROOT_MERGE..=1.0 + ROOT_MERGE).contains(&x))
        .map(|x| x.clamp(0.0, 1.0))
        .collect();
    // a tangency at a critical point can be missed when the discriminant
    // rounds to the wrong side
    for &xc in &critical {
        if (0.0..=1.0).contains(&xc) && shifted.eval(xc).abs() <= 64.0 * f64::EPSILON * scale {
            roots.push(xc);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots.dedup_by(|a, b| (*a - *b).abs() <= ROOT_MERGE);
    roots
}

/// The root of `poly = α` in `[0, 1]` nearest `1/2`.
pub fn maximizing_root(poly: &Polynomial, alpha: f64) -> Result<MaxRoot> {
    if poly.degree() > 3 {
        return Err(Error::UnsupportedForm(format!(
            "closed forms need degree <= 3, got {}",
            poly.degree()
        )));
    }
    if poly.degree() == 0 {
        let c = poly.eval(0.0);
        return if (c - alpha).abs() <= 1e-12 * c.abs().max(1.0) {
            Ok(MaxRoot::One(0.5))
        } else {
            Err(Error::EmptyFiber { alpha, lo: c, hi: c })
        };
    }
    let mut roots = roots_in_unit(poly, alpha);
    if roots.is_empty() {
        let d = poly_domain(poly, &poly.derivative().real_roots_in(0.0, 1.0));
        return Err(Error::EmptyFiber {
            alpha,
            lo: d.lo,
            hi: d.hi,
        });
    }
    roots.sort_by(|a, b| (a - 0.5).abs().partial_cmp(&(b - 0.5).abs()).unwrap());
    let best = roots[0];
    match roots.get(1) {
        Some(&other) if ((other - 0.5).abs() - (best - 0.5).abs()) <= TIE_TOL && (other - best).abs() > TIE_TOL => {
            Ok(MaxRoot::Tie(best.min(other), best.max(other)))
        }
        _ => Ok(MaxRoot::One(best)),
    }
}

/// `H(x_α)`.
pub fn spectrum_closed_form(analysis: &(impl ClosedForm + ?Sized), alpha: f64) -> Result<f64> {
    let d = analysis.domain();
    if !d.contains(alpha, d.tol(1e-12)) {
        return Err(Error::EmptyFiber {
            alpha,
            lo: d.lo,
            hi: d.hi,
        });
    }
    let alpha = alpha.clamp(d.lo, d.hi);
    Ok(binary_entropy_unchecked(
        maximizing_root(analysis.polynomial(), alpha)?.first(),
    ))
}

/// Index of the maximizer interval containing `x`.
pub fn branch_of(analysis: &(impl ClosedForm + ?Sized), x: f64) -> usize {
    analysis
        .branches()
        .iter()
        .position(|&(lo, hi)| x >= lo - 1e-9 && x <= hi + 1e-9)
        .unwrap_or(usize::MAX)
}

/// The closed-form spectrum on a grid of `α`, with the exact jumps.
pub fn closed_form_curve(analysis: &(impl ClosedForm + ?Sized), grid: &[f64]) -> Result<SpectrumCurve> {
    let d = analysis.domain();
    let mut points = Vec::with_capacity(grid.len());
    for &alpha in grid {
        let point = match maximizing_root(analysis.polynomial(), alpha.clamp(d.lo, d.hi)) {
            Ok(root) if d.contains(alpha, d.tol(1e-12)) => {
                let x = root.first();
                let at_edge = (alpha - d.lo).abs() <= d.tol(1e-12) || (alpha - d.hi).abs() <= d.tol(1e-12);
                SpectrumPoint {
                    alpha,
                    entropy: Some(binary_entropy_unchecked(x)),
                    maximizers: root
                        .points()
                        .into_iter()
                        .map(|x| ProbVector::binary(x).map(Measure::Bernoulli))
                        .collect::<Result<_>>()?,
                    branch_id: branch_of(analysis, x),
                    status: if at_edge {
                        PointStatus::Boundary
                    } else {
                        PointStatus::Solved
                    },
                    verified: true,
                }
            }
            _ => SpectrumPoint::empty(alpha),
        };
        points.push(point);
    }
    let discontinuities = analysis
        .jumps()
        .iter()
        .map(|j| Discontinuity {
            alpha: j.alpha,
            left: j.h_from,
            right: j.h_to,
            value: j.value,
        })
        .collect();
    Ok(SpectrumCurve {
        points,
        domain: d,
        discontinuities,
    })
}

/// Outcome of [`verify_cubic_lemma`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LemmaVerdict {
    pub pass: bool,
    pub trials: usize,
    /// `(x1, x2)` pairs with `P(x1) >= P(x2)`.
    pub counterexamples: Vec<(f64, f64)>,
}

/// For a cubic with positive leading coefficient: at equal distances `d`
/// on both sides of each critical point `x_c`, `P(x_c - d) < P(x_c + d)`.
pub fn verify_cubic_lemma(poly: &Polynomial, trials: usize, seed: u64) -> Result<LemmaVerdict> {
    if poly.degree() != 3 || poly.leading() <= 0.0 {
        return Err(Error::Precondition(
            "needs a cubic with positive leading coefficient".into(),
        ));
    }
    let d = poly.derivative();
    let crit = closed_form_roots(d.coeffs());
    if crit.len() != 2 || crit[0] == crit[1] {
        return Err(Error::Precondition(
            "cubic has no pair of distinct critical points".into(),
        ));
    }
    let (lo, hi) = (crit[0].min(crit[1]), crit[0].max(crit[1]));
    let gap = hi - lo;
    let mut rng = rng_for(seed, 0x1e);
    let mut counterexamples = Vec::new();
    for t in 0..trials {
        let center = if t % 2 == 0 { lo } else { hi };
        let dist = gap * (1e-3 + (1.0 - 1e-3) * rng.random::<f64>());
        let (x1, x2) = (center - dist, center + dist);
        if poly.eval(x1) >= poly.eval(x2) {
            counterexamples.push((x1, x2));
        }
    }
    Ok(LemmaVerdict {
        pass: counterexamples.is_empty(),
        trials,
        counterexamples,
    })
}
