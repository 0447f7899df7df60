use proptest::prelude::*;
use rand::Rng;

use vstat::closedform::{analyze_cubic, spectrum_closed_form, verify_cubic_lemma, ClosedForm};
use vstat::dynamics::{diagonal_fraction, rng_for, u_statistic, v_statistic_fast, v_statistic_naive, SymbolSequence};
use vstat::kernels::{index_word, num_words};
use vstat::measures::{a_of_bernoulli, a_of_markov, a_of_measure_general, binary_entropy};
use vstat::{CylinderKernel, FactorPotential, MarkovChain, Measure, ProbVector};

const BUDGET: usize = 10_000_000;

/// `(m, k, r, factor tables)` with entries in `[-1, 1]`.
fn factored(max_m: usize, max_k: usize, max_r: usize) -> impl Strategy<Value = (usize, usize, Vec<Vec<f64>>)> {
    (2..=max_m, 1..=max_k, 1..=max_r).prop_flat_map(|(m, k, r)| {
        let words = m.pow(k as u32);
        (
            Just(m),
            Just(k),
            prop::collection::vec(prop::collection::vec(-1.0..1.0f64, words), r),
        )
    })
}

fn factors(m: usize, k: usize, tables: &[Vec<f64>]) -> Vec<FactorPotential> {
    tables
        .iter()
        .map(|t| FactorPotential::new(m, k, t.clone()).unwrap())
        .collect()
}

fn simplex(m: usize) -> impl Strategy<Value = ProbVector> {
    prop::collection::vec(0.01..1.0f64, m).prop_map(|w| ProbVector::normalized(w).unwrap())
}

fn ulps(a: f64, b: f64) -> f64 {
    (a - b).abs() / (f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn forms_agree_on_every_input((m, k, tables) in factored(3, 2, 3)) {
        let product = CylinderKernel::product(factors(m, k, &tables)).unwrap();
        let sum = CylinderKernel::tensor_sum(vec![factors(m, k, &tables)]).unwrap();
        let dense = product.to_dense(BUDGET).unwrap();
        let words = num_words(m, k).unwrap();
        let r = tables.len();
        for flat in 0..words.pow(r as u32) {
            let idx = index_word(words, r, flat);
            let word_args: Vec<Vec<usize>> = idx.iter().map(|&i| index_word(m, k, i)).collect();
            let args: Vec<&[usize]> = word_args.iter().map(Vec::as_slice).collect();
            let p = product.eval(&args).unwrap();
            prop_assert!(ulps(p, dense.eval(&args).unwrap()) <= 4.0);
            prop_assert!(ulps(p, sum.eval(&args).unwrap()) <= 4.0);
        }
    }

    #[test]
    fn bernoulli_polynomial_matches_fiber_integral((_, _, tables) in factored(2, 1, 4), xs in prop::collection::vec(0.0..=1.0f64, 100)) {
        let kernel = CylinderKernel::product(factors(2, 1, &tables)).unwrap();
        let poly = kernel.bernoulli_polynomial().unwrap();
        for x in xs {
            let a = a_of_bernoulli(&kernel, &ProbVector::binary(x).unwrap()).unwrap();
            prop_assert!((poly.eval(x) - a).abs() <= 1e-12);
        }
    }

    #[test]
    fn general_integral_matches_bernoulli((m, _, tables) in factored(3, 1, 3), p in simplex(3)) {
        let p = ProbVector::normalized(p.as_slice()[..m].to_vec()).unwrap();
        let kernel = CylinderKernel::product(factors(m, 1, &tables)).unwrap();
        let general = a_of_measure_general(&kernel, &Measure::Bernoulli(p.clone()), BUDGET).unwrap();
        prop_assert!((general - a_of_bernoulli(&kernel, &p).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn general_integral_is_relabel_invariant(
        (m, k, tables) in factored(3, 2, 2),
        rows in prop::collection::vec(simplex(3), 3),
        perm_seed in any::<u64>(),
    ) {
        let kernel = CylinderKernel::product(factors(m, k, &tables)).unwrap();
        let transition: Vec<Vec<f64>> = rows[..m]
            .iter()
            .map(|r| ProbVector::normalized(r.as_slice()[..m].to_vec()).unwrap().as_slice().to_vec())
            .collect();
        let chain = MarkovChain::new(transition).unwrap();
        let mut perm: Vec<usize> = (0..m).collect();
        let mut rng = rng_for(perm_seed, 0);
        for i in (1..m).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        let moved = kernel.relabel(&perm).unwrap();
        let a = a_of_measure_general(&kernel, &Measure::Markov(chain.clone()), BUDGET).unwrap();
        let b = a_of_measure_general(&moved, &Measure::Markov(chain.relabel(&perm).unwrap()), BUDGET).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        if k == 2 {
            prop_assert!((a - a_of_markov(&kernel, &chain).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn identical_rows_match_bernoulli((m, _, tables) in factored(3, 1, 3), q in simplex(3)) {
        let q = ProbVector::normalized(q.as_slice()[..m].to_vec()).unwrap();
        let kernel = CylinderKernel::product(factors(m, 1, &tables)).unwrap();
        let lifted = kernel.lift(2).unwrap();
        let chain = MarkovChain::bernoulli(&q);
        let a = a_of_markov(&lifted, &chain).unwrap();
        prop_assert!((a - a_of_bernoulli(&kernel, &q).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn fast_v_statistic_matches_naive((m, k, tables) in factored(3, 2, 2), seed in any::<u64>(), n in 1usize..40) {
        let kernel = CylinderKernel::product(factors(m, k, &tables)).unwrap();
        let mut rng = rng_for(seed, 0);
        let symbols = (0..n + k).map(|_| rng.random_range(0..m as u8)).collect();
        let seq = SymbolSequence::new(m, symbols).unwrap();
        let fast = v_statistic_fast(&kernel, &seq, n).unwrap();
        let naive = v_statistic_naive(&kernel, &seq, n).unwrap();
        prop_assert!((fast - naive).abs() <= 1e-12);
    }

    #[test]
    fn u_and_v_differ_by_at_most_the_diagonal_share(table in prop::collection::vec(-1.0..=1.0f64, 16), seed in any::<u64>(), n in 2usize..60) {
        let kernel = CylinderKernel::dense(4, 2, 1, table).unwrap();
        let mut rng = rng_for(seed, 0);
        let symbols = (0..=n).map(|_| rng.random_range(0..4u8)).collect();
        let seq = SymbolSequence::new(4, symbols).unwrap();
        let gap = (u_statistic(&kernel, &seq, n).unwrap() - v_statistic_naive(&kernel, &seq, n).unwrap()).abs();
        prop_assert!(gap <= 2.0 * diagonal_fraction(n, 2) + 1e-12);
    }

    #[test]
    fn reflected_cubic_mirrors_the_spectrum(a in 0.05..0.95f64, db in 0.02..0.5f64, dc in 0.02..0.5f64, t in 0.0..=1.0f64) {
        let (b, c) = (a + db, a + db + dc);
        let fwd = analyze_cubic(a, b, c).unwrap();
        let rev = analyze_cubic(1.0 - c, 1.0 - b, 1.0 - a).unwrap();
        prop_assert!((fwd.domain.lo + rev.domain.hi).abs() <= 1e-12);
        prop_assert!((fwd.domain.hi + rev.domain.lo).abs() <= 1e-12);
        match (fwd.x_max, rev.x_min) {
            (Some(x), Some(y)) => prop_assert!((x - (1.0 - y)).abs() <= 1e-9),
            (None, None) => {}
            other => prop_assert!(false, "critical points disagree: {other:?}"),
        }
        prop_assert_eq!(fwd.jumps().len(), rev.jumps().len());
        let alpha = fwd.domain.lo + t * fwd.domain.width();
        let near_jump = fwd.jumps().iter().any(|j| (j.alpha - alpha).abs() <= 1e-9);
        if !near_jump {
            let h = spectrum_closed_form(&fwd, alpha).unwrap();
            let g = spectrum_closed_form(&rev, -alpha).unwrap();
            prop_assert!((h - g).abs() <= 1e-10, "{h} vs {g}");
        }
    }
}

#[test]
fn binary_entropy_orders_by_distance_from_half() {
    let mut rng = rng_for(55, 0);
    let mut checked = 0;
    for _ in 0..1000 {
        let (p1, p2): (f64, f64) = (rng.random(), rng.random());
        let side = (p2 - 0.5).abs() - (p1 - 0.5).abs();
        if side == 0.0 {
            continue;
        }
        let diff = binary_entropy(p1).unwrap() - binary_entropy(p2).unwrap();
        assert_eq!(diff.signum(), side.signum(), "{p1} {p2}");
        checked += 1;
    }
    assert!(checked >= 999);
}

#[test]
fn cubic_lemma_on_non_monotone_cubics() {
    for roots in [[0.4, 0.7, 0.8], [0.15, 0.7, 0.8]] {
        let poly = analyze_cubic(roots[0], roots[1], roots[2]).unwrap().polynomial;
        let verdict = verify_cubic_lemma(&poly, 1000, 7).unwrap();
        assert!(verdict.pass, "{roots:?}: {:?}", verdict.counterexamples);
        assert_eq!(verdict.trials, 1000);
    }
}
