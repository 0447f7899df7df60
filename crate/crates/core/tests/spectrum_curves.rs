use vstat::closedform::{analyze_cubic, analyze_quadratic, closed_form_curve, spectrum_closed_form, ClosedForm};
use vstat::spectrum::{check_usc, sweep_spectrum, PointStatus, SpectrumSolver};
use vstat::{CylinderKernel, MeasureClass, SolverOptions};

const QUADRATICS: [(f64, f64); 3] = [(0.5, 1.5), (0.2, 0.4), (0.6, 0.9)];
const CUBICS: [(f64, f64, f64); 3] = [(0.4, 1.0, 2.0), (0.4, 0.7, 0.8), (0.15, 0.7, 0.8)];

fn configs() -> Vec<(Vec<f64>, Box<dyn ClosedForm>)> {
    let mut out: Vec<(Vec<f64>, Box<dyn ClosedForm>)> = Vec::new();
    for (a, b) in QUADRATICS {
        out.push((vec![a, b], Box::new(analyze_quadratic(a, b).unwrap())));
    }
    for (a, b, c) in CUBICS {
        out.push((vec![a, b, c], Box::new(analyze_cubic(a, b, c).unwrap())));
    }
    out
}

#[test]
fn solver_matches_closed_form_on_reference_configurations() {
    for (roots, cf) in configs() {
        let kernel = CylinderKernel::from_roots(&roots, 1.0).unwrap();
        let solver = SpectrumSolver::new(&kernel, MeasureClass::Bernoulli, &SolverOptions::default()).unwrap();
        let d = cf.domain();
        assert!((solver.domain().lo - d.lo).abs() < 1e-12 && (solver.domain().hi - d.hi).abs() < 1e-12);
        let worst = d
            .grid(101)
            .into_iter()
            .map(|alpha| {
                let exact = spectrum_closed_form(&*cf, alpha).unwrap();
                let got = solver.solve(alpha, &[]).unwrap().entropy.unwrap();
                (exact - got).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{roots:?}: {worst}");
    }
}

#[test]
fn sweeps_find_the_expected_jump_counts() {
    let expected = [0, 0, 0, 0, 1, 2];
    for ((roots, cf), want) in configs().into_iter().zip(expected) {
        let kernel = CylinderKernel::from_roots(&roots, 1.0).unwrap();
        let curve = sweep_spectrum(
            &kernel,
            MeasureClass::Bernoulli,
            &cf.domain().grid(101),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(curve.discontinuities.len(), want, "{roots:?}");
        for (found, exact) in curve.discontinuities.iter().zip(cf.jumps()) {
            assert!(
                (found.alpha - exact.alpha).abs() < 1e-9,
                "{roots:?}: {} vs {}",
                found.alpha,
                exact.alpha
            );
            assert!((found.value - exact.value).abs() < 1e-6);
        }
        assert!(check_usc(&curve, 1e-2).unwrap().pass, "{roots:?}");
        let exact_curve = closed_form_curve(&*cf, &cf.domain().grid(101)).unwrap();
        assert!(check_usc(&exact_curve, 1e-2).unwrap().pass, "{roots:?}");
    }
}

#[test]
fn case_one_curve_is_monotone() {
    let kernel = CylinderKernel::from_roots(&[0.5, 1.5], 1.0).unwrap();
    let cf = analyze_quadratic(0.5, 1.5).unwrap();
    let curve = sweep_spectrum(
        &kernel,
        MeasureClass::Bernoulli,
        &cf.domain.grid(101),
        &SolverOptions::default(),
    )
    .unwrap();
    // A decreases on [0, 1] from 0.75 to -0.25; the maximizer x_α moves
    // through 1/2 once, so the entropy rises then falls
    let vals: Vec<f64> = curve.points.iter().map(|p| p.value()).collect();
    let peak = vals
        .iter()
        .cloned()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
        .0;
    assert!(vals[..=peak].windows(2).all(|w| w[1] > w[0]));
    assert!(vals[peak..].windows(2).all(|w| w[1] < w[0]));
    assert!(curve.discontinuities.is_empty());
}

#[test]
fn corrupted_curve_fails_usc() {
    let cf = analyze_cubic(0.4, 0.7, 0.8).unwrap();
    let mut curve = closed_form_curve(&cf, &cf.domain.grid(101)).unwrap();
    let victim = 40;
    let e = curve.points[victim].entropy.unwrap();
    curve.points[victim].entropy = Some(e - 0.1);
    let verdict = check_usc(&curve, 1e-2).unwrap();
    assert!(!verdict.pass);
    assert_eq!(verdict.violations, vec![curve.points[victim].alpha]);
}

#[test]
fn closed_form_jump_values_are_upper_limits() {
    for (a, b, c) in CUBICS {
        let cf = analyze_cubic(a, b, c).unwrap();
        for j in &cf.discontinuities {
            let at = spectrum_closed_form(&cf, j.alpha).unwrap();
            assert!((at - j.h_from.max(j.h_to)).abs() <= 1e-10);
        }
    }
}

#[test]
fn out_of_domain_is_empty() {
    let kernel = CylinderKernel::from_roots(&[0.5, 1.5], 1.0).unwrap();
    let solver = SpectrumSolver::new(&kernel, MeasureClass::Bernoulli, &SolverOptions::default()).unwrap();
    assert_eq!(solver.solve(0.8, &[]).unwrap().status, PointStatus::EmptyFiber);
    assert_eq!(solver.solve(-0.25, &[]).unwrap().status, PointStatus::Boundary);
}
