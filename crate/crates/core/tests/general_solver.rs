use vstat::closedform::{analyze_quadratic, spectrum_closed_form};
use vstat::measures::{a_of_bernoulli, a_of_markov, spectrum_domain};
use vstat::oracle::{entropy_modulus, oracle_grid_max};
use vstat::spectrum::{
    solve_bernoulli_spectrum, solve_markov_spectrum, PointStatus, SpectrumPoint, BERNOULLI_FIBER_TOL, MARKOV_FIBER_TOL,
};
use vstat::{CylinderKernel, FactorPotential, Measure, MeasureClass, ProbVector, SolverOptions};

fn product(m: usize, factors: &[&[f64]]) -> CylinderKernel {
    let fs = factors
        .iter()
        .map(|f| FactorPotential::new(m, 1, f.to_vec()).unwrap())
        .collect();
    CylinderKernel::product(fs).unwrap()
}

fn ternary_kernels() -> Vec<CylinderKernel> {
    vec![
        product(3, &[&[0.2, -0.7, 1.0], &[0.9, 0.1, -0.4]]),
        product(3, &[&[1.0, 0.0, -1.0], &[0.5, -0.5, 0.8], &[-0.3, 0.6, 0.2]]),
        product(3, &[&[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]),
    ]
}

/// Column factors `g_t`; the `k = 2` kernel uses `φ_t(i, j) = g_t[j]`.
fn column_factors() -> Vec<(usize, Vec<Vec<f64>>)> {
    vec![
        (2, vec![vec![-0.5, 0.5], vec![-1.5, -0.5]]),
        (2, vec![vec![0.0, 1.0]]),
        (3, vec![vec![0.2, -0.7, 1.0], vec![0.9, 0.1, -0.4]]),
        (
            3,
            vec![vec![1.0, 0.0, -1.0], vec![0.5, -0.5, 0.8], vec![-0.3, 0.6, 0.2]],
        ),
        (2, vec![vec![-0.4, 0.6], vec![-0.7, 0.3], vec![-0.8, 0.2]]),
    ]
}

fn column_kernel(m: usize, gs: &[Vec<f64>]) -> CylinderKernel {
    let fs = gs
        .iter()
        .map(|g| FactorPotential::new(m, 2, (0..m * m).map(|ij| g[ij % m]).collect()).unwrap())
        .collect();
    CylinderKernel::product(fs).unwrap()
}

fn check_feasible(kernel: &CylinderKernel, pt: &SpectrumPoint) {
    assert!(!pt.maximizers.is_empty());
    let m = kernel.m() as f64;
    assert!(pt.value() <= m.ln() + 1e-12);
    for mu in &pt.maximizers {
        let (a, tol) = match mu {
            Measure::Bernoulli(p) => (a_of_bernoulli(kernel, p).unwrap(), BERNOULLI_FIBER_TOL),
            Measure::Markov(c) => (a_of_markov(kernel, c).unwrap(), MARKOV_FIBER_TOL),
        };
        assert!((a - pt.alpha).abs() <= tol, "A = {a} at alpha {}", pt.alpha);
        assert!((mu.entropy() - pt.value()).abs() <= 1e-9);
    }
}

#[test]
fn ternary_solver_within_grid_sandwich() {
    let opts = SolverOptions::default();
    let res = 400;
    let modulus = entropy_modulus(3, 1.0 / res as f64);
    for kernel in ternary_kernels() {
        let dom = spectrum_domain(&kernel, MeasureClass::Bernoulli).unwrap();
        let delta = 5e-4 * dom.width();
        for i in 0..10 {
            let alpha = dom.lo + dom.width() * (0.1 + 0.8 * i as f64 / 9.0);
            let pt = solve_bernoulli_spectrum(&kernel, alpha, &opts).unwrap();
            assert_eq!(pt.status, PointStatus::Solved);
            check_feasible(&kernel, &pt);
            let grid = oracle_grid_max(&kernel, alpha, delta, res).unwrap();
            assert!(grid.entropy.is_finite(), "no grid point near {alpha}");
            assert!(
                grid.entropy <= pt.value() + 1e-3,
                "grid {} solver {}",
                grid.entropy,
                pt.value()
            );
            assert!(
                pt.value() <= grid.entropy + modulus,
                "solver {} grid {}",
                pt.value(),
                grid.entropy
            );
        }
    }
}

#[test]
fn markov_reduces_to_bernoulli_for_column_kernels() {
    let opts = SolverOptions::default();
    for (m, gs) in column_factors() {
        let markov = column_kernel(m, &gs);
        let refs: Vec<&[f64]> = gs.iter().map(Vec::as_slice).collect();
        let bern = product(m, &refs);
        let dom = spectrum_domain(&bern, MeasureClass::Bernoulli).unwrap();
        for i in 1..=9 {
            let alpha = dom.lo + dom.width() * i as f64 / 10.0;
            let b = solve_bernoulli_spectrum(&bern, alpha, &opts).unwrap();
            let mk = solve_markov_spectrum(&markov, alpha, &opts).unwrap();
            check_feasible(&markov, &mk);
            assert!(
                (mk.value() - b.value()).abs() <= 1e-4,
                "{gs:?} at {alpha}: {} vs {}",
                mk.value(),
                b.value()
            );
            let Measure::Markov(chain) = &mk.maximizers[0] else {
                panic!("expected a chain")
            };
            assert!(chain.row_spread() <= 1e-3, "row spread {}", chain.row_spread());
        }
    }
}

#[test]
fn markov_dominates_lifted_bernoulli() {
    let opts = SolverOptions::default();
    let kernels = [
        CylinderKernel::from_roots(&[0.4, 0.7, 0.8], 1.0).unwrap(),
        product(3, &[&[0.2, -0.7, 1.0], &[0.9, 0.1, -0.4]]),
    ];
    for kernel in kernels {
        let lifted = kernel.lift(2).unwrap();
        let dom = spectrum_domain(&kernel, MeasureClass::Bernoulli).unwrap();
        for i in 1..=5 {
            let alpha = dom.lo + dom.width() * i as f64 / 6.0;
            let b = solve_bernoulli_spectrum(&kernel, alpha, &opts).unwrap();
            let mk = solve_markov_spectrum(&lifted, alpha, &opts).unwrap();
            assert!(mk.value() >= b.value() - 1e-6, "{} < {}", mk.value(), b.value());
        }
    }
}

#[test]
fn off_diagonal_indicator_forces_zero_entropy() {
    let kernel = CylinderKernel::product(vec![FactorPotential::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap()]).unwrap();
    let pt = solve_markov_spectrum(&kernel, 0.0, &SolverOptions::default()).unwrap();
    assert!(pt.value().abs() <= 1e-6);
    let Measure::Markov(chain) = &pt.maximizers[0] else {
        panic!("expected a chain")
    };
    for i in 0..2 {
        for j in 0..2 {
            if i != j {
                assert!(chain.stationary().as_slice()[i] * chain.transition()[i][j] <= 1e-6);
            }
        }
    }
}

#[test]
fn constant_kernels_give_log_m() {
    let opts = SolverOptions::default();
    for m in 2..=4 {
        let k1 = CylinderKernel::constant(m, 2, 1, 0.7).unwrap();
        let b = solve_bernoulli_spectrum(&k1, 0.7, &opts).unwrap();
        assert!((b.value() - (m as f64).ln()).abs() <= 1e-12);
        let k2 = CylinderKernel::constant(m, 2, 2, 0.7).unwrap();
        let mk = solve_markov_spectrum(&k2, 0.7, &opts).unwrap();
        assert!((mk.value() - (m as f64).ln()).abs() <= 1e-9);
        let off = solve_bernoulli_spectrum(&k1, 0.71, &opts).unwrap();
        assert_eq!(off.status, PointStatus::EmptyFiber);
    }
}

#[test]
fn quadratic_half_point_gives_log_two() {
    let kernel = CylinderKernel::from_roots(&[0.2, 0.4], 1.0).unwrap();
    let pt = solve_bernoulli_spectrum(&kernel, 0.03, &SolverOptions::default()).unwrap();
    assert!((pt.value() - std::f64::consts::LN_2).abs() <= 1e-12);
    let Measure::Bernoulli(p) = &pt.maximizers[0] else {
        panic!("expected a vector")
    };
    assert!((p.as_slice()[1] - 0.5).abs() <= 1e-9);
}

#[test]
fn swapping_symbols_permutes_maximizers() {
    let opts = SolverOptions::default();
    for roots in [vec![0.5, 1.5], vec![0.2, 0.4], vec![0.4, 0.7, 0.8]] {
        let kernel = CylinderKernel::from_roots(&roots, 1.0).unwrap();
        let swapped = kernel.relabel(&[1, 0]).unwrap();
        let dom = spectrum_domain(&kernel, MeasureClass::Bernoulli).unwrap();
        for alpha in dom.grid(13) {
            let a = solve_bernoulli_spectrum(&kernel, alpha, &opts).unwrap();
            let b = solve_bernoulli_spectrum(&swapped, alpha, &opts).unwrap();
            assert!((a.value() - b.value()).abs() <= 1e-12);
            for mu in &a.maximizers {
                let Measure::Bernoulli(p) = mu else { panic!() };
                let q = p.relabel(&[1, 0]).unwrap();
                let hit = b.maximizers.iter().any(|nu| match nu {
                    Measure::Bernoulli(r) => (r.as_slice()[0] - q.as_slice()[0]).abs() <= 1e-10,
                    Measure::Markov(_) => false,
                });
                assert!(hit, "{roots:?} at {alpha}");
            }
        }
    }
}

#[test]
fn ternary_fiber_points_are_feasible() {
    let opts = SolverOptions::default();
    for kernel in ternary_kernels() {
        let dom = spectrum_domain(&kernel, MeasureClass::Bernoulli).unwrap();
        for alpha in dom.grid(15) {
            let pt = solve_bernoulli_spectrum(&kernel, alpha, &opts).unwrap();
            assert_ne!(pt.status, PointStatus::EmptyFiber);
            check_feasible(&kernel, &pt);
        }
    }
}

#[test]
fn closed_form_agrees_on_quadratic_grid_with_relabelled_measure() {
    let cf = analyze_quadratic(0.6, 0.9).unwrap();
    let kernel = CylinderKernel::from_roots(&[0.6, 0.9], 1.0).unwrap();
    for alpha in cf.domain.grid(11) {
        let pt = solve_bernoulli_spectrum(&kernel, alpha, &SolverOptions::default()).unwrap();
        assert!((pt.value() - spectrum_closed_form(&cf, alpha).unwrap()).abs() <= 1e-8);
        let Measure::Bernoulli(p) = &pt.maximizers[0] else {
            panic!()
        };
        let flipped = ProbVector::new(vec![p.as_slice()[1], p.as_slice()[0]]).unwrap();
        let a = a_of_bernoulli(&kernel.relabel(&[1, 0]).unwrap(), &flipped).unwrap();
        assert!((a - alpha).abs() <= 1e-8);
    }
}
