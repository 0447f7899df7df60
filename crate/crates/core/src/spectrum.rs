//! The variational problem `f(α) = max { h(μ) : A(μ) = α }` over Bernoulli
//! or Markov measures, spectrum sweeps, and jump detection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::CylinderKernel;
use crate::measures::{binary_entropy_unchecked, Interval, Measure, ProbVector};
use crate::optimize::{LocalSolution, MeasureClass, Problem, SolverOptions};
use crate::poly::Polynomial;

/// Bernoulli maximizers satisfy `|A - α|` below this.
pub const BERNOULLI_FIBER_TOL: f64 = 1e-8;
/// Markov maximizers satisfy `|A - α|` below this.
pub const MARKOV_FIBER_TOL: f64 = 1e-6;
/// Maximizers whose entropy is this close to the best are all reported.
const TIE_ENTROPY: f64 = 1e-9;
/// Relative distance (in units of the domain width) within which `α`
/// counts as a domain endpoint.
const EDGE_REL: f64 = 1e-12;
/// Minimum parameter-space distance between maximizers on two sides of a jump.
const BRANCH_DISTANCE: f64 = 0.05;
/// An entropy gap must exceed this multiple of the neighbouring gaps to be a jump.
const JUMP_RATIO: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Solved,
    EmptyFiber,
    Boundary,
}

impl std::fmt::Display for PointStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Solved => "solved",
            Self::EmptyFiber => "empty_fiber",
            Self::Boundary => "boundary",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub alpha: f64,
    /// `None` for an empty fiber.
    pub entropy: Option<f64>,
    pub maximizers: Vec<Measure>,
    pub branch_id: usize,
    pub status: PointStatus,
    /// Global optimality is confirmed (exact path or converged KKT point
    /// of the best start); `false` means unverified-global.
    pub verified: bool,
}

impl SpectrumPoint {
    pub fn empty(alpha: f64) -> Self {
        Self {
            alpha,
            entropy: None,
            maximizers: Vec::new(),
            branch_id: 0,
            status: PointStatus::EmptyFiber,
            verified: true,
        }
    }

    pub fn value(&self) -> f64 {
        self.entropy.unwrap_or(f64::NEG_INFINITY)
    }
}

/// A detected jump: the limits from both sides and the value at `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discontinuity {
    pub alpha: f64,
    pub left: f64,
    pub right: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumCurve {
    pub points: Vec<SpectrumPoint>,
    pub domain: Interval,
    pub discontinuities: Vec<Discontinuity>,
}

/// `L_Φ` together with the points attaining its ends, in the solver's
/// coordinates.
#[derive(Debug, Clone)]
pub struct Domain {
    pub interval: Interval,
    pub(crate) argmin: Vec<Vec<f64>>,
    pub(crate) argmax: Vec<Vec<f64>>,
}

/// Two symbols, depth one, Bernoulli: everything reduces to the
/// polynomial `A(x)`.
fn exact_polynomial(kernel: &CylinderKernel, class: MeasureClass) -> Option<Polynomial> {
    (class == MeasureClass::Bernoulli && kernel.m() == 2 && kernel.k() == 1)
        .then(|| kernel.bernoulli_polynomial().ok())
        .flatten()
}

fn collect_ties(cands: &[(f64, Vec<f64>)], best: f64, tol: f64) -> Vec<Vec<f64>> {
    cands
        .iter()
        .filter(|(v, _)| (v - best).abs() <= tol)
        .map(|(_, x)| x.clone())
        .collect()
}

impl Domain {
    pub fn compute(kernel: &CylinderKernel, class: MeasureClass, opts: &SolverOptions) -> Result<Self> {
        if let Some(poly) = exact_polynomial(kernel, class) {
            let mut xs = vec![0.0, 1.0];
            xs.extend(poly.derivative().real_roots_in(0.0, 1.0));
            let vals: Vec<(f64, Vec<f64>)> = xs.iter().map(|&x| (poly.eval(x), vec![1.0 - x, x])).collect();
            return Ok(Self::from_candidates(&vals, &vals));
        }
        let problem = Problem::new(kernel, class)?;
        let lo = problem.extremize(-1.0, opts);
        let hi = problem.extremize(1.0, opts);
        Ok(Self::from_candidates(&lo, &hi))
    }

    fn from_candidates(lo: &[(f64, Vec<f64>)], hi: &[(f64, Vec<f64>)]) -> Self {
        let min = lo.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
        let max = hi.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
        let interval = Interval { lo: min, hi: max };
        let tol = interval.tol(1e-13);
        Self {
            interval,
            argmin: collect_ties(lo, min, tol),
            argmax: collect_ties(hi, max, tol),
        }
    }
}

/// Solves single points of the spectrum for one kernel and class.
#[derive(Debug, Clone)]
pub struct SpectrumSolver {
    kernel: CylinderKernel,
    class: MeasureClass,
    opts: SolverOptions,
    domain: Domain,
    exact: Option<Polynomial>,
    problem: Option<Problem>,
}

impl SpectrumSolver {
    pub fn new(kernel: &CylinderKernel, class: MeasureClass, opts: &SolverOptions) -> Result<Self> {
        let exact = exact_polynomial(kernel, class);
        let problem = match exact {
            Some(_) => None,
            None => Some(Problem::new(kernel, class)?),
        };
        Ok(Self {
            kernel: kernel.clone(),
            class,
            opts: opts.clone(),
            domain: Domain::compute(kernel, class, opts)?,
            exact,
            problem,
        })
    }

    pub fn domain(&self) -> Interval {
        self.domain.interval
    }

    pub fn kernel(&self) -> &CylinderKernel {
        &self.kernel
    }

    pub fn class(&self) -> MeasureClass {
        self.class
    }

    fn fiber_tol(&self) -> f64 {
        match self.class {
            MeasureClass::Bernoulli => BERNOULLI_FIBER_TOL,
            MeasureClass::Markov => MARKOV_FIBER_TOL,
        }
    }

    fn to_measures(&self, xs: &[Vec<f64>]) -> Result<Vec<Measure>> {
        match &self.problem {
            Some(p) => xs.iter().map(|x| p.to_measure(x)).collect(),
            None => xs
                .iter()
                .map(|x| Ok(Measure::Bernoulli(ProbVector::normalized(x.clone())?)))
                .collect(),
        }
    }

    /// Solve at `alpha`; `warm` are extra starting points in solver
    /// coordinates (two-block coordinates for Markov).
    pub fn solve(&self, alpha: f64, warm: &[Vec<f64>]) -> Result<SpectrumPoint> {
        let d = self.domain.interval;
        if !alpha.is_finite() {
            return Err(Error::Input(format!("alpha must be finite, got {alpha}")));
        }
        if !d.contains(alpha, d.tol(EDGE_REL)) {
            return Ok(SpectrumPoint::empty(alpha));
        }
        let edge = d.tol(EDGE_REL).max(EDGE_REL * d.width());
        let at_lo = (alpha - d.lo).abs() <= edge;
        let at_hi = (alpha - d.hi).abs() <= edge;
        if let Some(poly) = &self.exact {
            if (poly.eval(0.5) - alpha).abs() <= 1e-14 * d.tol(1.0) {
                return self.solve_exact_at(alpha, vec![0.5], PointStatus::Solved);
            }
            return self.solve_exact(poly, alpha, at_lo, at_hi);
        }
        let problem = self.problem.as_ref().expect("general path has a problem");
        let uniform = problem.uniform();
        if (problem.a.value(&uniform) - alpha).abs() <= 1e-14 * d.tol(1.0) {
            return self.finish(
                alpha,
                vec![(problem.entropy(&uniform), uniform, 0.0)],
                PointStatus::Solved,
            );
        }
        if at_lo || at_hi {
            return self.solve_boundary(problem, alpha, at_lo, warm);
        }
        let sols = self.run_starts(problem, alpha, warm);
        if sols.is_empty() {
            return Err(Error::Solver(format!(
                "no start reached the fiber A = {alpha} (domain {d})"
            )));
        }
        let cands = sols.into_iter().map(|s| (s.entropy, s.x, s.kkt_residual)).collect();
        self.finish(alpha, cands, PointStatus::Solved)
    }

    fn run_starts(&self, problem: &Problem, alpha: f64, warm: &[Vec<f64>]) -> Vec<LocalSolution> {
        let mut rng = crate::dynamics::rng_for(self.opts.seed, 1);
        let mut starts = problem.starts(self.opts.random_starts, &mut rng);
        starts.extend(warm.iter().filter(|w| w.len() == problem.dim).cloned());
        let tol = 1e-13 * self.domain.interval.tol(1.0);
        problem.solve_fiber(alpha, &starts, &self.opts, tol)
    }

    /// At an end of `L_Φ` the fiber may touch the boundary of the simplex
    /// where the entropy is not smooth: take the best of the known
    /// extremizers and an interior solve nudged into the domain.
    fn solve_boundary(&self, problem: &Problem, alpha: f64, at_lo: bool, warm: &[Vec<f64>]) -> Result<SpectrumPoint> {
        let d = self.domain.interval;
        let ext = if at_lo {
            &self.domain.argmin
        } else {
            &self.domain.argmax
        };
        let mut cands: Vec<(f64, Vec<f64>, f64)> = ext
            .iter()
            .map(|x| (problem.entropy(x), x.clone(), f64::INFINITY))
            .collect();
        let nudge = 1e-10 * d.width();
        let inner = if at_lo { d.lo + nudge } else { d.hi - nudge };
        if d.width() > 0.0 {
            let mut warm = warm.to_vec();
            warm.extend(ext.iter().map(|x| {
                let u = problem.uniform();
                x.iter().zip(&u).map(|(a, b)| 0.999 * a + 0.001 * b).collect()
            }));
            for s in self.run_starts(problem, inner, &warm) {
                cands.push((s.entropy, s.x, s.kkt_residual));
            }
        }
        let tol = self.fiber_tol();
        cands.retain(|(_, x, _)| (problem.a.value(x) - alpha).abs() <= tol);
        if cands.is_empty() {
            return Err(Error::Solver(format!("no extremizer found at the domain end {alpha}")));
        }
        let mut point = self.finish(alpha, cands, PointStatus::Boundary)?;
        point.verified = false;
        Ok(point)
    }

    fn finish(&self, alpha: f64, mut cands: Vec<(f64, Vec<f64>, f64)>, status: PointStatus) -> Result<SpectrumPoint> {
        cands.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let best = cands[0].0;
        let verified = cands[0].2 <= self.opts.kkt_tol;
        let mut kept: Vec<Vec<f64>> = Vec::new();
        for (h, x, _) in cands {
            if best - h > TIE_ENTROPY {
                break;
            }
            if kept.iter().all(|k| dist_inf(k, &x) > 1e-6) {
                kept.push(x);
            }
        }
        let maximizers = self.to_measures(&kept)?;
        Ok(SpectrumPoint {
            alpha,
            entropy: Some(best.max(0.0)),
            maximizers,
            branch_id: 0,
            status,
            verified,
        })
    }

    /// Two symbols: roots of `A(x) = α` isolated by bisection between the
    /// critical points of `A`.
    fn solve_exact(&self, poly: &Polynomial, alpha: f64, at_lo: bool, at_hi: bool) -> Result<SpectrumPoint> {
        let (xs, status) = if at_lo || at_hi {
            let ext = if at_lo {
                &self.domain.argmin
            } else {
                &self.domain.argmax
            };
            (ext.iter().map(|x| x[1]).collect::<Vec<_>>(), PointStatus::Boundary)
        } else {
            (poly.shift(alpha).real_roots_in(0.0, 1.0), PointStatus::Solved)
        };
        if xs.is_empty() {
            return Err(Error::Solver(format!("no root of A(x) = {alpha} found in [0, 1]")));
        }
        self.solve_exact_at(alpha, xs, status)
    }

    fn solve_exact_at(&self, alpha: f64, xs: Vec<f64>, status: PointStatus) -> Result<SpectrumPoint> {
        let near = xs.iter().map(|x| (x - 0.5).abs()).fold(f64::INFINITY, f64::min);
        let mut best: Vec<f64> = xs.into_iter().filter(|x| (x - 0.5).abs() <= near + 1e-9).collect();
        best.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
        let h = binary_entropy_unchecked(best[0]);
        Ok(SpectrumPoint {
            alpha,
            entropy: Some(h),
            maximizers: self.to_measures(&best.iter().map(|&x| vec![1.0 - x, x]).collect::<Vec<_>>())?,
            branch_id: 0,
            status,
            verified: true,
        })
    }

    /// Solver coordinates of a reported maximizer.
    fn coords(&self, m: &Measure) -> Vec<f64> {
        match m {
            Measure::Bernoulli(p) => p.as_slice().to_vec(),
            Measure::Markov(c) => c.two_block(),
        }
    }

    /// Sweep a grid of `α`: one warm-started pass in each direction, merged
    /// by keeping the larger entropy. Jumps are located by bisection.
    pub fn sweep(&self, grid: &[f64]) -> Result<SpectrumCurve> {
        let mut alphas = grid.to_vec();
        alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let forward = self.directional(&alphas, false)?;
        let backward = if self.exact.is_some() {
            forward.clone()
        } else {
            self.directional(&alphas, true)?
        };
        let mut points: Vec<SpectrumPoint> = forward
            .into_iter()
            .zip(backward)
            .map(|(f, b)| if b.value() > f.value() + TIE_ENTROPY { b } else { f })
            .collect();
        let discontinuities = self.locate_jumps(&mut points)?;
        Ok(SpectrumCurve {
            points,
            domain: self.domain.interval,
            discontinuities,
        })
    }

    fn directional(&self, alphas: &[f64], reverse: bool) -> Result<Vec<SpectrumPoint>> {
        let mut out = vec![None; alphas.len()];
        let order: Vec<usize> = if reverse {
            (0..alphas.len()).rev().collect()
        } else {
            (0..alphas.len()).collect()
        };
        let mut warm: Vec<Vec<f64>> = Vec::new();
        for i in order {
            let p = self.solve(alphas[i], &warm)?;
            if p.status != PointStatus::EmptyFiber {
                warm = p.maximizers.iter().map(|m| self.coords(m)).collect();
            }
            out[i] = Some(p);
        }
        Ok(out.into_iter().map(|p| p.expect("every grid point solved")).collect())
    }

    /// Flag adjacent solved points whose entropy gap dwarfs the
    /// neighbouring gaps and whose maximizers are far apart, refine each
    /// flagged gap by bisection, and number the branches in between.
    fn locate_jumps(&self, points: &mut [SpectrumPoint]) -> Result<Vec<Discontinuity>> {
        let idx: Vec<usize> = (0..points.len())
            .filter(|&i| points[i].status != PointStatus::EmptyFiber)
            .collect();
        let gaps: Vec<f64> = idx
            .windows(2)
            .map(|w| (points[w[1]].value() - points[w[0]].value()).abs())
            .collect();
        let mut jumps = Vec::new();
        let mut branch = 0;
        if let Some(&first) = idx.first() {
            points[first].branch_id = 0;
        }
        for (g, w) in idx.windows(2).enumerate() {
            let (i, j) = (w[0], w[1]);
            let neighbours: Vec<f64> = [g.checked_sub(1).map(|h| gaps[h]), gaps.get(g + 1).copied()]
                .into_iter()
                .flatten()
                .collect();
            let modulus = neighbours.iter().copied().fold(f64::INFINITY, f64::min);
            let far = self.maximizer_distance(&points[i], &points[j]) > BRANCH_DISTANCE;
            if far && modulus.is_finite() && gaps[g] > JUMP_RATIO * modulus {
                jumps.push(self.refine_jump(&points[i], &points[j])?);
                branch += 1;
            }
            points[j].branch_id = branch;
        }
        Ok(jumps)
    }

    fn maximizer_distance(&self, a: &SpectrumPoint, b: &SpectrumPoint) -> f64 {
        let xa: Vec<Vec<f64>> = a.maximizers.iter().map(|m| self.coords(m)).collect();
        let xb: Vec<Vec<f64>> = b.maximizers.iter().map(|m| self.coords(m)).collect();
        xa.iter()
            .flat_map(|u| xb.iter().map(move |v| dist_inf(u, v)))
            .fold(f64::INFINITY, f64::min)
    }

    fn refine_jump(&self, left: &SpectrumPoint, right: &SpectrumPoint) -> Result<Discontinuity> {
        let mut lo = left.clone();
        let mut hi = right.clone();
        let warm: Vec<Vec<f64>> = lo
            .maximizers
            .iter()
            .chain(&hi.maximizers)
            .map(|m| self.coords(m))
            .collect();
        for _ in 0..48 {
            let mid = 0.5 * (lo.alpha + hi.alpha);
            if mid <= lo.alpha || mid >= hi.alpha {
                break;
            }
            let p = self.solve(mid, &warm)?;
            if p.status == PointStatus::EmptyFiber {
                break;
            }
            if self.maximizer_distance(&p, &lo) <= self.maximizer_distance(&p, &hi) {
                lo = p;
            } else {
                hi = p;
            }
        }
        let (l, r) = (lo.value(), hi.value());
        let (alpha, value) = if l >= r { (lo.alpha, l) } else { (hi.alpha, r) };
        Ok(Discontinuity {
            alpha,
            left: l,
            right: r,
            value,
        })
    }
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Maximal Bernoulli entropy on the fiber `A(p) = α` of a depth-1 kernel.
pub fn solve_bernoulli_spectrum(kernel: &CylinderKernel, alpha: f64, opts: &SolverOptions) -> Result<SpectrumPoint> {
    SpectrumSolver::new(kernel, MeasureClass::Bernoulli, opts)?.solve(alpha, &[])
}

/// Maximal Markov entropy rate on the fiber `A(p, P) = α`; depth-1 kernels
/// are lifted to depth 2.
pub fn solve_markov_spectrum(kernel: &CylinderKernel, alpha: f64, opts: &SolverOptions) -> Result<SpectrumPoint> {
    SpectrumSolver::new(kernel, MeasureClass::Markov, opts)?.solve(alpha, &[])
}

pub fn sweep_spectrum(
    kernel: &CylinderKernel,
    class: MeasureClass,
    grid: &[f64],
    opts: &SolverOptions,
) -> Result<SpectrumCurve> {
    SpectrumSolver::new(kernel, class, opts)?.sweep(grid)
}

/// Outcome of [`check_usc`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UscVerdict {
    pub pass: bool,
    /// Alphas where the check failed.
    pub violations: Vec<f64>,
}

/// Multiple of the local second difference allowed as extrapolation error.
const USC_CURVATURE_SLACK: f64 = 3.0;

/// Sampled upper semicontinuity.
///
/// Each side of an interior point with three consecutive neighbours
/// `near, far, farther` (not separated from the point by a recorded jump)
/// predicts `min(e_near, 2 e_near - e_far)`, allowing an error of
/// `3 |e_near - 2 e_far + e_farther|` for curvature; the point fails if it
/// lies below the larger prediction by more than that slack plus `tol`.
/// The prediction never exceeds the nearest neighbour, so steep stretches
/// near fold points do not trigger it. At each jump the value must be at
/// least the larger one-sided limit minus `tol`.
pub fn check_usc(curve: &SpectrumCurve, tol: f64) -> Result<UscVerdict> {
    let pts: Vec<&SpectrumPoint> = curve
        .points
        .iter()
        .filter(|p| p.status != PointStatus::EmptyFiber)
        .collect();
    if pts.len() < 3 {
        return Err(Error::Input("check_usc needs at least three solved points".into()));
    }
    let crosses = |a: f64, b: f64| {
        curve
            .discontinuities
            .iter()
            .any(|d| d.alpha >= a.min(b) && d.alpha <= a.max(b))
    };
    let side = |i: usize, step: isize| -> Option<f64> {
        let at = |k: isize| usize::try_from(i as isize + k * step).ok().and_then(|j| pts.get(j));
        let (near, far, farther) = (at(1)?, at(2)?, at(3)?);
        if crosses(pts[i].alpha, farther.alpha) {
            return None;
        }
        let (n, f, ff) = (near.value(), far.value(), farther.value());
        Some(n.min(2.0 * n - f) - USC_CURVATURE_SLACK * (n - 2.0 * f + ff).abs())
    };
    let mut violations = Vec::new();
    for (i, pt) in pts.iter().enumerate().take(pts.len() - 1).skip(1) {
        let bound = [side(i, -1), side(i, 1)]
            .into_iter()
            .flatten()
            .fold(f64::NEG_INFINITY, f64::max);
        if pt.value() < bound - tol {
            violations.push(pt.alpha);
        }
    }
    for d in &curve.discontinuities {
        if d.value < d.left.max(d.right) - tol {
            violations.push(d.alpha);
        }
    }
    Ok(UscVerdict {
        pass: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::FactorPotential;

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn constant_kernel_gives_log_m() {
        for m in [2, 3] {
            let k = CylinderKernel::constant(m, 2, 1, 0.7).unwrap();
            let p = solve_bernoulli_spectrum(&k, 0.7, &opts()).unwrap();
            assert!((p.entropy.unwrap() - (m as f64).ln()).abs() < 1e-12);
            let p = solve_markov_spectrum(&k, 0.7, &opts()).unwrap();
            assert!((p.entropy.unwrap() - (m as f64).ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_at_half() {
        let k = CylinderKernel::from_roots(&[0.2, 0.4], 1.0).unwrap();
        let p = solve_bernoulli_spectrum(&k, 0.03, &opts()).unwrap();
        assert!((p.entropy.unwrap() - std::f64::consts::LN_2).abs() < 1e-9);
        let out = solve_bernoulli_spectrum(&k, 1.0, &opts()).unwrap();
        assert_eq!(out.status, PointStatus::EmptyFiber);
    }

    #[test]
    fn off_diagonal_indicator_at_zero() {
        let f = FactorPotential::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let k = CylinderKernel::product(vec![f]).unwrap();
        let p = solve_markov_spectrum(&k, 0.0, &opts()).unwrap();
        assert!(p.entropy.unwrap() < 1e-6);
        assert_eq!(p.status, PointStatus::Boundary);
    }

    #[test]
    fn three_symbol_point_is_feasible() {
        let f1 = FactorPotential::new(3, 1, vec![0.2, -0.7, 1.0]).unwrap();
        let f2 = FactorPotential::new(3, 1, vec![0.9, 0.1, -0.4]).unwrap();
        let k = CylinderKernel::product(vec![f1, f2]).unwrap();
        let solver = SpectrumSolver::new(&k, MeasureClass::Bernoulli, &opts()).unwrap();
        let d = solver.domain();
        let alpha = d.lo + 0.3 * d.width();
        let p = solver.solve(alpha, &[]).unwrap();
        assert!(p.verified);
        for m in &p.maximizers {
            let Measure::Bernoulli(q) = m else { panic!() };
            let a = crate::measures::a_of_bernoulli(&k, q).unwrap();
            assert!((a - alpha).abs() <= BERNOULLI_FIBER_TOL);
            assert!((crate::measures::entropy_h1(q) - p.entropy.unwrap()).abs() < 1e-9);
        }
    }
}
