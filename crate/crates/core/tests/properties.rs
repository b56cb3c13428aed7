use proptest::prelude::*;

use qbsc::adversary::{bounds_at, build_q, optimal_cheat_value};
use qbsc::bounds::{
    alpha_for_target, binding_bound_exact, binding_bound_simple, f_alpha, f_alpha_bound_log2,
    log2_big, thirdterm_holds,
};
use qbsc::codes::QaryCode;
use qbsc::engine::{
    parse_transcript, run_session, verify_open, write_transcript, ChannelModel, SessionInput,
};
use qbsc::linalg::{expectation, EigenConfig, StateVector};
use qbsc::{bb84_scheme, six_state_scheme, DenseOperator, Limits};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

#[test]
fn f_alpha_below_its_bound_on_full_grid() {
    let mut checked = 0;
    for dim in 2..=4u64 {
        for n in 1..=200u64 {
            for alpha in 1..=n {
                let Ok(bound) = f_alpha_bound_log2(n, dim, alpha) else {
                    continue;
                };
                let exact = log2_big(&f_alpha(n, dim, alpha));
                assert!(
                    exact < bound,
                    "N={n} D={dim} alpha={alpha}: {exact} vs {bound}"
                );
                checked += 1;
            }
        }
    }
    assert!(checked > 10_000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn exact_bound_never_exceeds_simple(
        r in 2u32..2048,
        e1 in log_uniform(1e-12, 0.2),
        e2 in log_uniform(1e-12, 0.2),
    ) {
        let r = r as f64;
        let (simple, exact) = (binding_bound_simple(r, e1, e2), binding_bound_exact(r, e1, e2));
        if let (Some(s), Some(x)) = (simple.value(), exact.value()) {
            prop_assert!(x <= s * (1.0 + 1e-12), "exact {x} > simple {s}");
            prop_assert!(s >= 1.0);
            prop_assert!(x >= 1.0);
        }
    }

    #[test]
    fn alpha_rule_meets_target_and_is_minimal(
        l in 2u64..7,
        r in 1u32..4096,
        eps in log_uniform(1e-9, 0.5),
    ) {
        let r = r as f64;
        let alpha = alpha_for_target(l, r, eps).unwrap();
        let w = 1.0 - 1.0 / l as f64;
        let target = eps / (64.0 * r);
        prop_assert!(w.powi(alpha as i32) <= target * (1.0 + 1e-12));
        if alpha > 1 {
            prop_assert!(w.powi(alpha as i32 - 1) > target * (1.0 - 1e-12));
        }
    }

    #[test]
    fn thirdterm_easier_with_larger_distance(
        d in 30u64..3000,
        extra in 1u64..500,
        n_factor in 20u64..200,
    ) {
        let n = 3000 * n_factor;
        let a = thirdterm_holds(n, d, 26, 0.75, 1024.0, 1.0 / 1024.0, 2).unwrap();
        let b = thirdterm_holds(n, d + extra, 26, 0.75, 1024.0, 1.0 / 1024.0, 2).unwrap();
        prop_assert!(b.lhs <= a.lhs);
        prop_assert!(!a.holds || b.holds);
    }

    #[test]
    fn reed_solomon_encoding_is_linear(
        q in prop::sample::select(vec![5usize, 7, 8, 9, 11, 16]),
        k in 1usize..4,
        seed in any::<u64>(),
    ) {
        let code = QaryCode::reed_solomon(q, q.min(k + 4), k).unwrap();
        check_linearity(&code, seed)?;
    }

    #[test]
    fn random_linear_encoding_is_linear(
        q in prop::sample::select(vec![2usize, 3, 4, 5, 8]),
        n in 4usize..12,
        k in 1usize..4,
        seed in any::<u64>(),
    ) {
        let code = QaryCode::random_linear(q, n, k, seed).unwrap();
        check_linearity(&code, seed)?;
    }

    #[test]
    fn transcript_round_trip(
        n in 1usize..24,
        a in 0usize..4,
        p_loss in 0.0f64..0.5,
        p_depol in 0.0f64..0.5,
        t in 0u64..6,
        seed in any::<u64>(),
    ) {
        let scheme = bb84_scheme();
        let code = QaryCode::repetition(4, n).unwrap();
        let channel = ChannelModel::new(p_loss, p_depol).unwrap();
        let s = run_session(&scheme, &code, &SessionInput::Honest(vec![a]), &channel, t, seed, &Limits::default()).unwrap();
        let text = write_transcript(&s);
        prop_assert_eq!(parse_transcript(&text).unwrap(), s);
    }

    #[test]
    fn acceptance_monotone_in_threshold(
        n in 1usize..24,
        committed in 0usize..4,
        opened in 0usize..4,
        p_depol in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let scheme = bb84_scheme();
        let code = QaryCode::repetition(4, n).unwrap();
        let channel = ChannelModel::new(0.1, p_depol).unwrap();
        let s = run_session(&scheme, &code, &SessionInput::Honest(vec![committed]), &channel, 0, seed, &Limits::default()).unwrap();
        let mut prev = false;
        for t in 0..=n as u64 {
            let (accept, _) = verify_open(&scheme, &code, &[opened], &s.bases, &s.outcomes, t).unwrap();
            prop_assert!(accept || !prev);
            prev = accept;
        }
        prop_assert!(prev);
    }

    #[test]
    fn expectation_lies_in_spectrum_range(dim in 1usize..9, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = StateVector::random_unit(dim, &mut rng);
        let w = StateVector::random_unit(dim, &mut rng);
        let op = DenseOperator::projector(&v).add(&DenseOperator::projector(&w).scaled(0.5)).unwrap();
        let x = expectation(&StateVector::random_unit(dim, &mut rng), &op).unwrap();
        prop_assert!((-1e-12..=1.5 + 1e-12).contains(&x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lambda_max_within_trivial_and_binding_limits(
        six_state in any::<bool>(),
        n in 2usize..5,
        k in 1usize..3,
        r in 2usize..5,
        seed in any::<u64>(),
    ) {
        let scheme = if six_state { six_state_scheme() } else { bb84_scheme() };
        let code = if six_state {
            QaryCode::repetition(6, n).unwrap()
        } else {
            QaryCode::random_linear(4, n, k, seed).unwrap()
        };
        let strings: Vec<Vec<usize>> = code.messages().take(r).collect();
        prop_assume!(strings.len() >= 2);
        let q = build_q(&scheme, &code, &strings, &Limits::default()).unwrap();
        let lambda = optimal_cheat_value(&q, &EigenConfig::default()).unwrap().value;
        prop_assert!(lambda >= 1.0 - 1e-9, "{lambda}");
        prop_assert!(lambda <= strings.len() as f64 + 1e-9, "{lambda}");
        for alpha in 1..code.distance() as u64 {
            let ctx = bounds_at(&scheme, &code, strings.len(), alpha).unwrap();
            if let Some(b) = ctx.best() {
                prop_assert!(lambda <= b + 1e-9, "alpha={alpha}: {lambda} > {b}");
            }
        }
    }
}

fn check_linearity(code: &QaryCode, seed: u64) -> Result<(), TestCaseError> {
    use rand::Rng;
    let field = code.field().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = code.dimension();
    let a: Vec<usize> = (0..k).map(|_| rng.gen_range(0..code.q())).collect();
    let b: Vec<usize> = (0..k).map(|_| rng.gen_range(0..code.q())).collect();
    let c = rng.gen_range(0..code.q());
    let combo: Vec<usize> = a
        .iter()
        .zip(&b)
        .map(|(&x, &y)| field.add(field.mul(c, x), y))
        .collect();
    let (ea, eb) = (code.encode(&a).unwrap(), code.encode(&b).unwrap());
    let expected: Vec<usize> = ea
        .symbols()
        .iter()
        .zip(eb.symbols())
        .map(|(&x, &y)| field.add(field.mul(c, x), y))
        .collect();
    let encoded = code.encode(&combo).unwrap();
    prop_assert_eq!(encoded.symbols(), &expected[..]);
    Ok(())
}
