//! Constrained optimization over Bernoulli and Markov measure classes.
//!
//! Both classes are handled in cylinder coordinates: a Bernoulli measure is
//! its probability vector `p` (dimension `m`), a Markov measure is its
//! two-block distribution `q_ij = p_i P_ij` (dimension `m²`), constrained by
//! total mass one and the balance equations `Σ_j q_ij = Σ_j q_ji`. In these
//! coordinates the fiber integral `A` is a sum of products of linear forms
//! and the entropy (`H_1`, or `H_2 = -Σ q_ij log(q_ij / q_i)`) has closed-form
//! gradient and Hessian.
//!
//! The fiber solver runs, from each start: feasibility restoration onto
//! `{A = α}` along the projected gradient of `A`, projected ascent of the
//! entropy along the fiber, then Newton's method on the KKT system of the
//! Lagrangian `S - λ(A - α) - μᵀ(Cx - d)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dynamics::rng_for;
use crate::error::{Error, Result};
use crate::kernels::CylinderKernel;
use crate::measures::{stationary_vector, MarkovChain, Measure, ProbVector};

/// Measure class searched by the variational problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureClass {
    /// Bernoulli measures; depth-1 kernels.
    Bernoulli,
    /// Stationary one-step Markov measures; kernels of depth 1 or 2.
    Markov,
}

impl std::str::FromStr for MeasureClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli" => Ok(Self::Bernoulli),
            "markov" => Ok(Self::Markov),
            _ => Err(Error::Input(format!("unknown measure class {s:?}"))),
        }
    }
}

/// `A(x) = Σ_terms w Π_t <f_t, x>`.
#[derive(Debug, Clone)]
pub(crate) struct Multilinear {
    terms: Vec<(f64, Vec<Vec<f64>>)>,
}

impl Multilinear {
    fn linear(f: &[f64], x: &[f64]) -> f64 {
        f.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(w, fs)| w * fs.iter().map(|f| Self::linear(f, x)).product::<f64>())
            .sum()
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (w, fs) in &self.terms {
            let l: Vec<f64> = fs.iter().map(|f| Self::linear(f, x)).collect();
            for (t, f) in fs.iter().enumerate() {
                let others: f64 = l.iter().enumerate().filter(|&(s, _)| s != t).map(|(_, v)| v).product();
                let c = w * others;
                if c != 0.0 {
                    g.iter_mut().zip(f).for_each(|(gi, fi)| *gi += c * fi);
                }
            }
        }
        g
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let mut h = DMatrix::zeros(n, n);
        for (w, fs) in &self.terms {
            let l: Vec<f64> = fs.iter().map(|f| Self::linear(f, x)).collect();
            for t in 0..fs.len() {
                for s in 0..fs.len() {
                    if s == t {
                        continue;
                    }
                    let c: f64 = w * l
                        .iter()
                        .enumerate()
                        .filter(|&(u, _)| u != t && u != s)
                        .map(|(_, v)| v)
                        .product::<f64>();
                    if c == 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        let a = c * fs[t][i];
                        if a == 0.0 {
                            continue;
                        }
                        for j in 0..n {
                            h[(i, j)] += a * fs[s][j];
                        }
                    }
                }
            }
        }
        h
    }
}

/// Tunables for the multi-start searches.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Random starts on top of the structured ones.
    pub random_starts: usize,
    pub seed: u64,
    /// Required stationarity residual for a start to count as converged.
    pub kkt_tol: f64,
    pub ascent_iters: usize,
    pub newton_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            random_starts: 32,
            seed: 0,
            kkt_tol: 1e-8,
            ascent_iters: 400,
            newton_iters: 60,
        }
    }
}

/// One local solution of the fiber problem.
#[derive(Debug, Clone)]
pub(crate) struct LocalSolution {
    pub x: Vec<f64>,
    pub entropy: f64,
    pub kkt_residual: f64,
}

/// A variational problem for one kernel and measure class.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub class: MeasureClass,
    pub m: usize,
    pub dim: usize,
    pub a: Multilinear,
    constraints: DMatrix<f64>,
    rhs: DVector<f64>,
    /// Orthonormal basis of the null space of `constraints` (columns).
    null_basis: DMatrix<f64>,
    /// Minimum-norm solution of `constraints · x = rhs`.
    particular: DVector<f64>,
}

impl Problem {
    pub fn new(kernel: &CylinderKernel, class: MeasureClass) -> Result<Self> {
        let m = kernel.m();
        let (dim, kernel, constraints, rhs) = match class {
            MeasureClass::Bernoulli => {
                if kernel.k() != 1 {
                    return Err(Error::UnsupportedForm(format!(
                        "Bernoulli class needs a depth-1 kernel, got k = {}",
                        kernel.k()
                    )));
                }
                let c = DMatrix::from_element(1, m, 1.0);
                (m, kernel.clone(), c, DVector::from_element(1, 1.0))
            }
            MeasureClass::Markov => {
                if kernel.k() > 2 {
                    return Err(Error::UnsupportedForm(format!(
                        "Markov class supports kernels of depth 1 or 2, got k = {}",
                        kernel.k()
                    )));
                }
                let dim = m * m;
                let mut c = DMatrix::zeros(m, dim);
                for j in 0..dim {
                    c[(0, j)] = 1.0;
                }
                for i in 0..m - 1 {
                    for j in 0..m {
                        c[(i + 1, i * m + j)] += 1.0;
                        c[(i + 1, j * m + i)] -= 1.0;
                    }
                }
                let mut d = DVector::zeros(m);
                d[0] = 1.0;
                (dim, kernel.lift(2)?, c, d)
            }
        };
        if kernel.dense_size() > crate::kernels::DEFAULT_DENSE_BUDGET as f64 {
            if let crate::kernels::KernelForm::Dense(_) = kernel.form() {
                return Err(Error::Resource {
                    what: "dense kernel expansion",
                    needed: kernel.dense_size(),
                    budget: crate::kernels::DEFAULT_DENSE_BUDGET as f64,
                });
            }
        }
        let a = Multilinear {
            terms: kernel.product_terms(),
        };
        let null_basis = null_space(&constraints);
        let cct = &constraints * constraints.transpose();
        let particular = constraints.transpose()
            * cct
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Solver("dependent linear constraints".into()))?;
        Ok(Self {
            class,
            m,
            dim,
            a,
            constraints,
            rhs,
            null_basis,
            particular,
        })
    }

    pub fn entropy(&self, x: &[f64]) -> f64 {
        let nlog = |v: f64| if v > 0.0 { -v * v.ln() } else { 0.0 };
        match self.class {
            MeasureClass::Bernoulli => x.iter().map(|&v| nlog(v)).sum(),
            MeasureClass::Markov => {
                let m = self.m;
                let joint: f64 = x.iter().map(|&v| nlog(v)).sum();
                let marg: f64 = (0..m).map(|i| nlog(x[i * m..(i + 1) * m].iter().sum())).sum();
                joint - marg
            }
        }
    }

    fn entropy_grad(&self, x: &[f64]) -> Vec<f64> {
        match self.class {
            MeasureClass::Bernoulli => x.iter().map(|&v| -v.ln() - 1.0).collect(),
            MeasureClass::Markov => {
                let m = self.m;
                let mut g = vec![0.0; self.dim];
                for i in 0..m {
                    let qi: f64 = x[i * m..(i + 1) * m].iter().sum();
                    for j in 0..m {
                        g[i * m + j] = -(x[i * m + j] / qi).ln();
                    }
                }
                g
            }
        }
    }

    fn entropy_hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            h[(i, i)] = -1.0 / x[i];
        }
        if self.class == MeasureClass::Markov {
            let m = self.m;
            for i in 0..m {
                let qi: f64 = x[i * m..(i + 1) * m].iter().sum();
                for a in 0..m {
                    for b in 0..m {
                        h[(i * m + a, i * m + b)] += 1.0 / qi;
                    }
                }
            }
        }
        h
    }

    fn project_tangent(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        let nb = &self.null_basis;
        (nb * (nb.transpose() * v)).iter().copied().collect()
    }

    /// `X (g - Cᵀμ)` with `μ` chosen so the direction keeps `Cx` fixed:
    /// the gradient step in the metric `diag(1/x)`, which slows down
    /// coordinates close to zero.
    fn scaled_direction(&self, x: &[f64], g: &[f64]) -> Option<Vec<f64>> {
        let c = &self.constraints;
        let xd = DVector::from_column_slice(x);
        let gd = DVector::from_column_slice(g);
        let cx = DMatrix::from_fn(c.nrows(), c.ncols(), |i, j| c[(i, j)] * x[j]);
        let mu = (&cx * c.transpose()).lu().solve(&(&cx * &gd))?;
        let r = gd - c.transpose() * mu;
        Some(r.component_mul(&xd).iter().copied().collect())
    }

    /// Put `x` back onto the affine constraint set.
    fn reproject(&self, x: &mut [f64]) {
        let xv = DVector::from_column_slice(x);
        let nb = &self.null_basis;
        let fixed = &self.particular + nb * (nb.transpose() * (xv - &self.particular));
        x.copy_from_slice(fixed.as_slice());
    }

    /// Convert cylinder coordinates to a measure.
    pub fn to_measure(&self, x: &[f64]) -> Result<Measure> {
        match self.class {
            MeasureClass::Bernoulli => Ok(Measure::Bernoulli(ProbVector::normalized(x.to_vec())?)),
            MeasureClass::Markov => Ok(Measure::Markov(MarkovChain::from_two_block(self.m, x)?)),
        }
    }

    /// Cylinder coordinates of the maximal-entropy measure of the class.
    pub fn uniform(&self) -> Vec<f64> {
        vec![1.0 / self.dim as f64; self.dim]
    }

    /// Two-block coordinates `q_ij = p_i P_ij` of a transition matrix.
    fn two_block_of(&self, rows: &[Vec<f64>]) -> Option<Vec<f64>> {
        let p = stationary_vector(rows).ok()?;
        Some(
            rows.iter()
                .zip(p.as_slice())
                .flat_map(|(row, &pi)| row.iter().map(move |&v| pi * v))
                .collect(),
        )
    }

    /// Interior starting points: structured ones first, then random.
    pub fn starts(&self, random: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let m = self.m;
        let mut out = vec![self.uniform()];
        match self.class {
            MeasureClass::Bernoulli => {
                out.extend(simplex_starts(m, random, rng).into_iter().skip(1));
            }
            MeasureClass::Markov => {
                let uniform_row = vec![1.0 / m as f64; m];
                let blend = |target: &dyn Fn(usize) -> Vec<f64>, w: f64| -> Vec<Vec<f64>> {
                    (0..m)
                        .map(|i| {
                            target(i)
                                .iter()
                                .zip(&uniform_row)
                                .map(|(a, u)| w * a + (1.0 - w) * u)
                                .collect()
                        })
                        .collect()
                };
                let unit = |j: usize| {
                    let mut e = vec![0.0; m];
                    e[j] = 1.0;
                    e
                };
                let mut structured: Vec<Vec<Vec<f64>>> = vec![blend(&|i| unit(i), 0.8)];
                for shift in 1..m {
                    structured.push(blend(&|i| unit((i + shift) % m), 0.8));
                }
                for j in 0..m {
                    structured.push(blend(&|_| unit(j), 0.9));
                }
                for rows in structured {
                    if let Some(q) = self.two_block_of(&rows) {
                        out.push(q);
                    }
                }
                // the Bernoulli starts, embedded as chains with identical rows
                for p in simplex_starts(m, random, rng).iter().skip(1) {
                    out.push(p.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect());
                }
                let mut added = 0;
                while added < random {
                    let rows: Vec<Vec<f64>> = (0..m).map(|_| dirichlet(rng, m)).collect();
                    if let Some(q) = self.two_block_of(&rows) {
                        out.push(q);
                        added += 1;
                    }
                }
            }
        }
        out
    }

    /// Newton steps along the projected gradient of `A` until `A(x) = α`.
    fn restore(&self, x: &mut [f64], alpha: f64, tol: f64) -> bool {
        for _ in 0..200 {
            let f = self.a.value(x) - alpha;
            if f.abs() <= tol {
                return true;
            }
            let g = self.a.grad(x);
            let Some(d) = self.scaled_direction(x, &g) else {
                return false;
            };
            let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
            if !(slope > 1e-300) {
                return false;
            }
            let t = -f / slope;
            let step: Vec<f64> = d.iter().map(|v| v * t).collect();
            let s = max_fraction(x, &step, 0.5).min(1.0);
            x.iter_mut().zip(&step).for_each(|(xi, st)| *xi += s * st);
            self.reproject(x);
            if x.iter().any(|&v| !(v > 0.0)) {
                return false;
            }
        }
        (self.a.value(x) - alpha).abs() <= tol
    }

    /// Projected entropy ascent along the fiber.
    fn ascend(&self, x: &mut Vec<f64>, alpha: f64, tol: f64, iters: usize) {
        let mut t: f64 = 0.1;
        let mut s_cur = self.entropy(x);
        for _ in 0..iters {
            let g = self.project_tangent(&self.entropy_grad(x));
            let a = self.project_tangent(&self.a.grad(x));
            let aa: f64 = a.iter().map(|v| v * v).sum();
            let ga: f64 = g.iter().zip(&a).map(|(p, q)| p * q).sum();
            let v: Vec<f64> = if aa > 1e-300 {
                g.iter().zip(&a).map(|(p, q)| p - ga / aa * q).collect()
            } else {
                g
            };
            let vnorm2: f64 = v.iter().map(|c| c * c).sum();
            if vnorm2.sqrt() < 1e-9 {
                return;
            }
            let mut accepted = false;
            for _ in 0..30 {
                let cap = max_fraction(x, &v, 0.5);
                let step = t.min(cap);
                let mut y: Vec<f64> = x.iter().zip(&v).map(|(xi, vi)| xi + step * vi).collect();
                if self.restore(&mut y, alpha, tol) {
                    let s_new = self.entropy(&y);
                    if s_new > s_cur + 1e-4 * step * vnorm2 {
                        *x = y;
                        s_cur = s_new;
                        accepted = true;
                        t = (step * 2.0).min(10.0);
                        break;
                    }
                }
                t = step * 0.5;
                if t < 1e-16 {
                    break;
                }
            }
            if !accepted {
                return;
            }
        }
    }

    /// Least-squares multipliers `(λ, μ)` for `∇S ≈ λ∇A + Cᵀμ`.
    fn multipliers(&self, g: &[f64], a: &[f64]) -> Option<DVector<f64>> {
        let nc = self.constraints.nrows();
        let mut b = DMatrix::zeros(self.dim, 1 + nc);
        for i in 0..self.dim {
            b[(i, 0)] = a[i];
            for c in 0..nc {
                b[(i, 1 + c)] = self.constraints[(c, i)];
            }
        }
        let g = DVector::from_column_slice(g);
        let svd = b.svd(true, true);
        svd.solve(&g, 1e-12).ok()
    }

    fn kkt_residual(&self, x: &[f64], mult: &DVector<f64>) -> f64 {
        let g = self.entropy_grad(x);
        let a = self.a.grad(x);
        let nc = self.constraints.nrows();
        (0..self.dim)
            .map(|i| {
                let mut r = g[i] - mult[0] * a[i];
                for c in 0..nc {
                    r -= mult[1 + c] * self.constraints[(c, i)];
                }
                r.abs()
            })
            .fold(0.0, f64::max)
    }

    /// Newton's method on the KKT system; returns the point and its
    /// stationarity residual.
    fn newton(&self, x0: &[f64], alpha: f64, tol: f64, iters: usize) -> Option<(Vec<f64>, f64)> {
        let n = self.dim;
        let nc = self.constraints.nrows();
        let mut x = x0.to_vec();
        let mut mult = self.multipliers(&self.entropy_grad(&x), &self.a.grad(&x))?;
        for _ in 0..iters {
            let g = self.entropy_grad(&x);
            let a = self.a.grad(&x);
            let res = self.kkt_residual(&x, &mult);
            let feas = self.a.value(&x) - alpha;
            if res <= 1e-11 && feas.abs() <= tol {
                break;
            }
            let size = n + 1 + nc;
            let mut jac = DMatrix::zeros(size, size);
            let hl = self.entropy_hessian(&x) - self.a.hessian(&x) * mult[0];
            jac.view_mut((0, 0), (n, n)).copy_from(&hl);
            let mut rhs = DVector::zeros(size);
            for i in 0..n {
                jac[(i, n)] = -a[i];
                jac[(n, i)] = a[i];
                let mut r = g[i] - mult[0] * a[i];
                for c in 0..nc {
                    let cv = self.constraints[(c, i)];
                    jac[(i, n + 1 + c)] = -cv;
                    jac[(n + 1 + c, i)] = cv;
                    r -= mult[1 + c] * cv;
                }
                rhs[i] = -r;
            }
            rhs[n] = -feas;
            let cx = &self.constraints * DVector::from_column_slice(&x) - &self.rhs;
            for c in 0..nc {
                rhs[n + 1 + c] = -cx[c];
            }
            let delta = jac.lu().solve(&rhs)?;
            let dx: Vec<f64> = delta.rows(0, n).iter().copied().collect();
            let s = max_fraction(&x, &dx, 0.1).min(1.0);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += s * d);
            for i in 0..(1 + nc) {
                mult[i] += s * delta[n + i];
            }
            if x.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return None;
            }
        }
        self.reproject(&mut x);
        let res = self.kkt_residual(&x, &mult);
        Some((x, res))
    }

    /// Local maximizers of the entropy on `{A = α}` from each start.
    pub fn solve_fiber(&self, alpha: f64, starts: &[Vec<f64>], opts: &SolverOptions, tol: f64) -> Vec<LocalSolution> {
        let mut out = Vec::new();
        for start in starts {
            let mut x = start.clone();
            self.reproject(&mut x);
            if x.iter().any(|&v| !(v > 0.0)) || !self.restore(&mut x, alpha, tol) {
                continue;
            }
            self.ascend(&mut x, alpha, tol, opts.ascent_iters);
            let s_ascent = self.entropy(&x);
            let mut best = x.clone();
            let mut kkt = self
                .multipliers(&self.entropy_grad(&x), &self.a.grad(&x))
                .map(|mu| self.kkt_residual(&x, &mu))
                .unwrap_or(f64::INFINITY);
            if let Some((y, res)) = self.newton(&x, alpha, tol, opts.newton_iters) {
                let close = y.iter().zip(&x).all(|(a, b)| (a - b).abs() < 0.05);
                if close && (self.a.value(&y) - alpha).abs() <= tol && self.entropy(&y) >= s_ascent - 1e-7 {
                    best = y;
                    kkt = res;
                }
            }
            if (self.a.value(&best) - alpha).abs() <= tol {
                out.push(LocalSolution {
                    entropy: self.entropy(&best),
                    x: best,
                    kkt_residual: kkt,
                });
            }
        }
        out
    }

    /// Vertices of the feasible polytope: point masses (Bernoulli) or
    /// uniform measures on simple cycles (Markov, small alphabets).
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let m = self.m;
        match self.class {
            MeasureClass::Bernoulli => (0..m)
                .map(|j| {
                    let mut e = vec![0.0; m];
                    e[j] = 1.0;
                    e
                })
                .collect(),
            MeasureClass::Markov => {
                let mut out = Vec::new();
                if m > 6 {
                    return out;
                }
                for cycle in simple_cycles(m) {
                    let mut q = vec![0.0; m * m];
                    let len = cycle.len();
                    for t in 0..len {
                        q[cycle[t] * m + cycle[(t + 1) % len]] += 1.0 / len as f64;
                    }
                    out.push(q);
                }
                out
            }
        }
    }

    /// Multi-start local maximization of `sign · A` over the class.
    /// Returns `(value of A, cylinder coordinates)` of every local optimum.
    pub fn extremize(&self, sign: f64, opts: &SolverOptions) -> Vec<(f64, Vec<f64>)> {
        let mut rng = rng_for(opts.seed, 0xd0);
        let mut results: Vec<(f64, Vec<f64>)> = self.vertices().into_iter().map(|v| (self.a.value(&v), v)).collect();
        match self.class {
            MeasureClass::Bernoulli => {
                let mut starts = self.vertices();
                starts.extend(self.starts(opts.random_starts, &mut rng));
                for s in starts {
                    let x = self.simplex_ascent(s, sign);
                    results.push((self.a.value(&x), x));
                }
            }
            MeasureClass::Markov => {
                let m = self.m;
                let mut starts: Vec<Vec<Vec<f64>>> = vec![vec![vec![1.0 / m as f64; m]; m]];
                for _ in 0..opts.random_starts {
                    starts.push((0..m).map(|_| dirichlet(&mut rng, m)).collect());
                }
                if m.pow(m as u32) <= 256 {
                    let mut map = vec![0usize; m];
                    loop {
                        starts.push(
                            (0..m)
                                .map(|i| {
                                    (0..m)
                                        .map(|j| if map[i] == j { 0.97 } else { 0.03 / (m - 1) as f64 })
                                        .collect()
                                })
                                .collect(),
                        );
                        if !advance(&mut map, m) {
                            break;
                        }
                    }
                }
                for rows in starts {
                    let rows = self.transition_ascent(rows, sign);
                    let q = self.mixed_two_block(&rows);
                    results.push((self.a.value(&q), q));
                }
            }
        }
        results
    }

    fn simplex_ascent(&self, mut x: Vec<f64>, sign: f64) -> Vec<f64> {
        let mut t = 1.0;
        let mut f = sign * self.a.value(&x);
        for _ in 0..5000 {
            let g: Vec<f64> = self.a.grad(&x).iter().map(|v| sign * v).collect();
            let mut moved = false;
            for _ in 0..60 {
                let y = project_simplex(&x.iter().zip(&g).map(|(a, b)| a + t * b).collect::<Vec<_>>());
                let fy = sign * self.a.value(&y);
                let dec: f64 = y.iter().zip(&x).zip(&g).map(|((a, b), c)| (a - b) * c).sum();
                if fy >= f + 1e-4 * dec && fy > f {
                    let change = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    x = y;
                    f = fy;
                    t *= 2.0;
                    moved = change > 1e-15;
                    break;
                }
                t *= 0.5;
                if t < 1e-18 {
                    break;
                }
            }
            if !moved {
                break;
            }
        }
        x
    }

    /// Two-block coordinates of the chain `P` mixed with `1e-9` of the
    /// uniform matrix, which keeps the stationary vector unique.
    fn mixed_two_block(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        let m = self.m;
        let eps = 1e-9;
        let mixed: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|v| (1.0 - eps) * v + eps / m as f64).collect())
            .collect();
        self.two_block_of(&mixed).unwrap_or_else(|| self.uniform())
    }

    /// Projected gradient on the rows of `P` for `sign · A(q(P))`.
    fn transition_ascent(&self, mut rows: Vec<Vec<f64>>, sign: f64) -> Vec<Vec<f64>> {
        let m = self.m;
        let eval = |rows: &[Vec<f64>]| sign * self.a.value(&self.mixed_two_block(rows));
        let mut f = eval(&rows);
        let mut t = 1.0;
        for _ in 0..3000 {
            let Some(grad) = self.transition_gradient(&rows) else {
                break;
            };
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<Vec<f64>> = (0..m)
                    .map(|i| project_simplex(&(0..m).map(|j| rows[i][j] + t * sign * grad[i][j]).collect::<Vec<_>>()))
                    .collect();
                let ft = eval(&trial);
                if ft > f {
                    let change = trial
                        .iter()
                        .flatten()
                        .zip(rows.iter().flatten())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    rows = trial;
                    f = ft;
                    t *= 2.0;
                    moved = change > 1e-14;
                    break;
                }
                t *= 0.5;
                if t < 1e-18 {
                    break;
                }
            }
            if !moved {
                break;
            }
        }
        rows
    }

    /// `∂A/∂P_ij = p_i ((Z w)_j + G_ij)` with `G = ∂A/∂q`,
    /// `w_k = Σ_l G_kl P_kl` and `Z = (I - P + 1p)^{-1}`; exact along
    /// row-sum-preserving directions.
    fn transition_gradient(&self, rows: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
        let m = self.m;
        let eps = 1e-9;
        let mixed: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().map(|v| (1.0 - eps) * v + eps / m as f64).collect())
            .collect();
        let p = stationary_vector(&mixed).ok()?;
        let p = p.as_slice();
        let q = self.mixed_two_block(rows);
        let g = self.a.grad(&q);
        let mut zinv = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                zinv[(i, j)] = if i == j { 1.0 } else { 0.0 } - mixed[i][j] + p[j];
            }
        }
        let z = zinv.try_inverse()?;
        let w = DVector::from_iterator(
            m,
            (0..m).map(|k| (0..m).map(|l| g[k * m + l] * mixed[k][l]).sum::<f64>()),
        );
        let zw = z * w;
        Some(
            (0..m)
                .map(|i| (0..m).map(|j| p[i] * (zw[j] + g[i * m + j]) * (1.0 - eps)).collect())
                .collect(),
        )
    }
}

/// Largest `s` with `x + s·d >= keep·x` componentwise (infinite if `d >= 0`).
fn max_fraction(x: &[f64], d: &[f64], keep: f64) -> f64 {
    x.iter()
        .zip(d)
        .filter(|(_, &di)| di < 0.0)
        .map(|(&xi, &di)| (1.0 - keep) * xi / -di)
        .fold(f64::INFINITY, f64::min)
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let t = (css - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&a| (a - theta).max(0.0)).collect()
}

/// Uniform point, vertices and edge midpoints pulled inwards by 10% and
/// by 2%, then `random` flat and `random` skewed random points.
fn simplex_starts(m: usize, random: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mix = |v: Vec<f64>, eps: f64| -> Vec<f64> { v.into_iter().map(|a| (1.0 - eps) * a + eps / m as f64).collect() };
    let mut out = vec![vec![1.0 / m as f64; m]];
    for eps in [0.1, 0.02] {
        for j in 0..m {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            out.push(mix(e, eps));
            for l in j + 1..m {
                let mut e = vec![0.0; m];
                e[j] = 0.5;
                e[l] = 0.5;
                out.push(mix(e, eps));
            }
        }
    }
    for _ in 0..random {
        out.push(dirichlet(rng, m));
    }
    for _ in 0..random {
        let w: Vec<f64> = dirichlet(rng, m).into_iter().map(|v| v * v * v + 1e-6).collect();
        let s: f64 = w.iter().sum();
        out.push(w.into_iter().map(|v| v / s).collect());
    }
    out
}

fn dirichlet(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-12).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn advance(map: &mut [usize], m: usize) -> bool {
    for slot in map.iter_mut() {
        *slot += 1;
        if *slot < m {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Simple directed cycles of the complete graph with loops on `m` nodes,
/// each listed once starting from its smallest node.
fn simple_cycles(m: usize) -> Vec<Vec<usize>> {
    fn extend(path: &mut Vec<usize>, used: &mut [bool], m: usize, out: &mut Vec<Vec<usize>>) {
        out.push(path.clone());
        let start = path[0];
        for next in start + 1..m {
            if !used[next] {
                used[next] = true;
                path.push(next);
                extend(path, used, m, out);
                path.pop();
                used[next] = false;
            }
        }
    }
    let mut out = Vec::new();
    for start in 0..m {
        let mut used = vec![false; m];
        used[start] = true;
        extend(&mut vec![start], &mut used, m, &mut out);
    }
    out
}

/// Orthonormal basis (columns) of the null space of `c`.
fn null_space(c: &DMatrix<f64>) -> DMatrix<f64> {
    let n = c.ncols();
    let mut rows: Vec<DVector<f64>> = Vec::new();
    for r in 0..c.nrows() {
        let mut v: DVector<f64> = c.row(r).transpose();
        for b in &rows {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let norm = v.norm();
        if norm > 1e-12 {
            rows.push(v / norm);
        }
    }
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for b in rows.iter().chain(basis.iter()) {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / norm);
        }
    }
    DMatrix::from_columns(&basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::FactorPotential;

    #[test]
    fn simplex_projection() {
        let p = project_simplex(&[0.2, 0.9, -0.3]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p[2] == 0.0);
        assert_eq!(project_simplex(&[0.25, 0.75]), vec![0.25, 0.75]);
    }

    #[test]
    fn cycles_of_three() {
        // 3 loops, 3 two-cycles, 2 three-cycles
        assert_eq!(simple_cycles(3).len(), 8);
    }

    #[test]
    fn multilinear_derivatives_match_finite_differences() {
        let f1 = FactorPotential::new(3, 1, vec![0.3, -1.2, 0.8]).unwrap();
        let f2 = FactorPotential::new(3, 1, vec![1.1, 0.4, -0.6]).unwrap();
        let f3 = FactorPotential::new(3, 1, vec![-0.2, 0.9, 0.5]).unwrap();
        let k = CylinderKernel::product(vec![f1, f2, f3]).unwrap();
        let prob = Problem::new(&k, MeasureClass::Bernoulli).unwrap();
        let x = [0.2, 0.5, 0.3];
        let g = prob.a.grad(&x);
        let h = prob.a.hessian(&x);
        let eps = 1e-6;
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += eps;
            xm[i] -= eps;
            let fd = (prob.a.value(&xp) - prob.a.value(&xm)) / (2.0 * eps);
            assert!((fd - g[i]).abs() < 1e-8);
            let gp = prob.a.grad(&xp);
            let gm = prob.a.grad(&xm);
            for j in 0..3 {
                assert!(((gp[j] - gm[j]) / (2.0 * eps) - h[(i, j)]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn markov_entropy_matches_h2() {
        let k = CylinderKernel::constant(3, 1, 2, 1.0).unwrap();
        let prob = Problem::new(&k, MeasureClass::Markov).unwrap();
        let chain = MarkovChain::new(vec![vec![0.2, 0.3, 0.5], vec![0.6, 0.2, 0.2], vec![0.1, 0.1, 0.8]]).unwrap();
        let q = chain.two_block();
        assert!((prob.entropy(&q) - crate::measures::entropy_h2(&chain)).abs() < 1e-14);
        // balance constraints hold for a stationary two-block distribution
        let cq = &prob.constraints * DVector::from_column_slice(&q) - &prob.rhs;
        assert!(cq.amax() < 1e-14);
    }

    #[test]
    fn transition_gradient_matches_finite_differences() {
        let f = FactorPotential::new(2, 2, vec![0.3, -1.0, 0.7, 0.2]).unwrap();
        let g = FactorPotential::new(2, 2, vec![1.0, 0.5, -0.4, 0.9]).unwrap();
        let k = CylinderKernel::product(vec![f, g]).unwrap();
        let prob = Problem::new(&k, MeasureClass::Markov).unwrap();
        let rows = vec![vec![0.3, 0.7], vec![0.6, 0.4]];
        let grad = prob.transition_gradient(&rows).unwrap();
        let eval = |r: &[Vec<f64>]| prob.a.value(&prob.mixed_two_block(r));
        let eps = 1e-6;
        // direction moving mass from column 1 to column 0 in row i
        for i in 0..2 {
            let mut up = rows.clone();
            let mut dn = rows.clone();
            up[i][0] += eps;
            up[i][1] -= eps;
            dn[i][0] -= eps;
            dn[i][1] += eps;
            let fd = (eval(&up) - eval(&dn)) / (2.0 * eps);
            assert!((fd - (grad[i][0] - grad[i][1])).abs() < 1e-7, "{fd} vs {:?}", grad[i]);
        }
    }
}
