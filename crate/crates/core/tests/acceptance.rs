use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qbsc::adversary::{
    build_q, eigenstructure_audit, exact_acceptance, optimal_cheat_value, run_cheat, CheatKind,
    CheatStrategy, OpenRule, ShiftSelection, RESIDUAL_TOL,
};
use qbsc::bounds::{
    binding_bound_exact, binding_bound_simple, concealing_bound, f_alpha, f_alpha_bound_log2,
    log2_big, thirdterm_holds, Bound,
};
use qbsc::cli::dispatch_with;
use qbsc::codes::{gv_rate, QaryCode};
use qbsc::engine::{honest_campaign, ChannelModel};
use qbsc::linalg::EigenConfig;
use qbsc::{bb84_scheme, Limits};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn cli(args: &[&str]) -> (i32, String) {
    let argv = std::iter::once("qbsc".to_string()).chain(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = dispatch_with(argv, None, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn alpha_reproduction() -> Verdict {
    let (code, out) = cli(&["bounds", "--l", "2", "--r", "2^10", "--eps", "2^-10"]);
    let alpha = out
        .lines()
        .find_map(|l| l.strip_prefix("alpha="))
        .unwrap_or("?");
    verdict(code == 0 && alpha == "26", format!("alpha={alpha}"))
}

fn code_feasibility() -> Verdict {
    let rate = gv_rate(4, 0.01).unwrap();
    let third = thirdterm_holds(100_000, 1000, 26, 0.75, 1024.0, 1.0 / 1024.0, 2).unwrap();
    verdict(
        rate >= 0.95 && third.holds,
        format!(
            "gv_rate={rate:.6} thirdterm lhs={:.3} rhs={:.3} holds={}",
            third.lhs, third.rhs, third.holds
        ),
    )
}

fn concealment_ratio() -> Verdict {
    let c = concealing_bound(100_000, 2, 95_000, 4).unwrap();
    // N·log₂2 / (k·log₂4) = N / 2k, so ratio < 53/100 iff 100·N < 53·2k
    let exact = 100 * 100_000u64 < 53 * 2 * 95_000;
    verdict(
        c.ratio < 0.53 && c.ratio_ceil < 0.53 && exact,
        format!("ratio={:.6} integer check={exact}", c.ratio),
    )
}

fn bb84_constants() -> Verdict {
    let s = bb84_scheme();
    let mut max_cross: f64 = 0.0;
    for e in 0..s.q() {
        for f in 0..s.q() {
            if s.basis_of(e).unwrap().basis != s.basis_of(f).unwrap().basis {
                max_cross = max_cross.max(s.overlap(e, f).norm());
            }
        }
    }
    let pass = s.beta() == 0.75
        && (s.beta_bar() - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-12
        && (s.beta_bar() - max_cross).abs() <= 1e-12;
    verdict(
        pass,
        format!(
            "beta={} beta_bar={:.15} enumerated={max_cross:.15}",
            s.beta(),
            s.beta_bar()
        ),
    )
}

fn eigenstructure() -> Verdict {
    let scheme = bb84_scheme();
    let (mut worst, mut tested) = (0.0f64, 0u64);
    for n in 1..=4 {
        let code = QaryCode::repetition(4, n).unwrap();
        for a in 0..4 {
            let audit = eigenstructure_audit(
                &scheme,
                &code,
                &[a],
                ShiftSelection::Exhaustive,
                None,
                &Limits::default(),
            )
            .unwrap();
            worst = worst.max(audit.max_residual);
            tested += audit.tested;
        }
    }
    verdict(
        worst <= RESIDUAL_TOL,
        format!("{tested} eigenvectors, max residual {worst:.2e}"),
    )
}

fn brute_force_binding() -> Verdict {
    let scheme = bb84_scheme();
    let mut values = Vec::new();
    let mut pass = true;
    for n in [1usize, 2, 3, 8] {
        let code = QaryCode::repetition(4, n).unwrap();
        let q = build_q(&scheme, &code, &[vec![0], vec![1]], &Limits::default()).unwrap();
        let lambda = optimal_cheat_value(&q, &EigenConfig::default())
            .unwrap()
            .value;
        let expected = 1.0 + 0.5f64.powi(n as i32);
        pass &= (lambda - expected).abs() <= 1e-9 && (1.0..=2.0).contains(&lambda);
        values.push(lambda);
    }
    pass &= values.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = values.iter().map(|v| format!("{v:.10}")).collect();
    verdict(
        pass,
        format!("lambda_max for N=1,2,3,8: {}", shown.join(" ")),
    )
}

fn monte_carlo() -> Verdict {
    let scheme = bb84_scheme();
    let code = QaryCode::repetition(4, 3).unwrap();
    let strategy = CheatStrategy {
        id: "wrong-commitment".into(),
        kind: CheatKind::WrongCommitment { committed: vec![0] },
        open: OpenRule::Fixed(vec![2]),
    };
    let channel = ChannelModel::noiseless();
    let trials = 100_000;
    let report = run_cheat(
        &strategy,
        &scheme,
        &code,
        &channel,
        0,
        trials,
        77,
        &Limits::default(),
    )
    .unwrap();
    let p = 27.0 / 64.0;
    let exact = exact_acceptance(
        &scheme,
        &code,
        &strategy
            .cheat_state(&scheme, &code, &Limits::default())
            .unwrap(),
        &[2],
    )
    .unwrap();
    let empirical = report.empirical()[0];
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    let cheat_ok = (exact - p).abs() <= 1e-12 && (empirical - p).abs() <= 3.0 * sigma;

    let mut honest = Vec::new();
    let campaigns = [
        (QaryCode::repetition(4, 3).unwrap(), vec![2]),
        (QaryCode::random_linear(4, 10, 3, 5).unwrap(), vec![1, 3, 2]),
    ];
    for (code, msg) in &campaigns {
        let runs = honest_campaign(&scheme, code, msg, &channel, 0, 11, 10_000).unwrap();
        honest.push(runs.iter().filter(|s| s.accept).count());
    }
    verdict(
        cheat_ok && honest.iter().all(|&h| h == 10_000),
        format!(
            "cheat rate {empirical:.5} vs {p:.5} (3 sigma = {:.5}), honest accepted {honest:?} of 10000",
            3.0 * sigma
        ),
    )
}

fn bound_sanity() -> Verdict {
    let unit = [2.0, 3.0, 1024.0, 1e6]
        .iter()
        .all(|&r| binding_bound_exact(r, 0.0, 0.0) == Bound::Value(1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut compared, mut grid_ok) = (0, true);
    for _ in 0..1000 {
        let r = rng.gen_range(2..=4096) as f64;
        let e1 = 10f64.powf(rng.gen_range(-12.0..-0.7));
        let e2 = 10f64.powf(rng.gen_range(-12.0..-0.7));
        if let (Some(s), Some(x)) = (
            binding_bound_simple(r, e1, e2).value(),
            binding_bound_exact(r, e1, e2).value(),
        ) {
            grid_ok &= x <= s * (1.0 + 1e-12);
            compared += 1;
        }
    }
    let (mut f_checked, mut f_ok) = (0, true);
    for dim in 2..=4u64 {
        for n in 1..=200u64 {
            for alpha in 1..=n {
                if let Ok(bound) = f_alpha_bound_log2(n, dim, alpha) {
                    f_ok &= log2_big(&f_alpha(n, dim, alpha)) < bound;
                    f_checked += 1;
                }
            }
        }
    }
    verdict(
        unit && grid_ok && f_ok && compared > 0,
        format!("exact(r,0,0)=1: {unit}; exact<=simple on {compared} points; f_alpha<bound on {f_checked} points"),
    )
}

fn determinism() -> Verdict {
    let exe = env!("CARGO_BIN_EXE_qbsc");
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 8] = [
        &[
            "bounds", "--r", "2^10", "--eps", "2^-10", "--N", "1e5", "--d", "1000", "--k", "95000",
        ],
        &[
            "plan",
            "--r",
            "2^10",
            "--eps",
            "2^-10",
            "--family",
            "gv,repetition",
            "--lengths",
            "1000,100000",
        ],
        &[
            "run",
            "--code",
            "rep:q=4,N=12",
            "--A",
            "1",
            "--p-loss",
            "0.1",
            "--p-depol",
            "0.05",
            "--t",
            "2",
        ],
        &[
            "run",
            "--code",
            "rl:q=4,N=8,k=2,seed=3",
            "--A",
            "1,2",
            "--p-depol",
            "0.1",
            "--trials",
            "200",
        ],
        &[
            "attack",
            "--code",
            "rep:q=4,N=3",
            "--A",
            "0",
            "--open",
            "2",
            "--trials",
            "5000",
            "--t",
            "0",
        ],
        &["verify", "--code", "rep:q=4,N=4", "--strings", "0,1,2"],
        &[
            "audit",
            "--code",
            "rep:q=4,N=4",
            "--strings",
            "0,2",
            "--alpha",
            "2",
        ],
        &["codes", "--code", "rs:q=8,N=6,k=3"],
    ];
    let mut runs = 0;
    for (i, args) in cases.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let csv = dir.path().join(format!("{i}_{rep}.csv"));
            let mut cmd = Command::new(exe);
            cmd.args(*args)
                .args(["--seed", "31"])
                .env_remove("QBSC_SEED");
            if matches!(args[0], "bounds" | "plan" | "run" | "attack") {
                cmd.args(["--csv", csv.to_str().unwrap()]);
            }
            let o = cmd.output().unwrap();
            if !o.status.success() {
                return verdict(false, format!("{args:?} exited with {:?}", o.status.code()));
            }
            outputs.push((o.stdout, std::fs::read(&csv).unwrap_or_default()));
            runs += 1;
        }
        if outputs[0] != outputs[1] {
            return verdict(false, format!("{args:?} differs between runs"));
        }
    }
    verdict(
        true,
        format!(
            "{} subcommand invocations, {runs} runs byte-identical",
            cases.len()
        ),
    )
}

type Criterion = (u32, Duration, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, Duration::from_secs(1), alpha_reproduction),
        (2, Duration::from_secs(1), code_feasibility),
        (3, Duration::from_secs(1), concealment_ratio),
        (4, Duration::from_secs(1), bb84_constants),
        (5, Duration::from_secs(10), eigenstructure),
        (6, Duration::from_secs(30), brute_force_binding),
        (7, Duration::from_secs(60), monte_carlo),
        (8, Duration::from_secs(60), bound_sanity),
        (9, Duration::from_secs(60), determinism),
    ];
    let mut failed = 0;
    for (id, limit, check) in criteria {
        let start = Instant::now();
        let v = check();
        let elapsed = start.elapsed();
        let pass = v.pass && elapsed <= limit;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {id}: {} ({}) in {} ms, limit {} ms",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_millis(),
            limit.as_millis()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
