use std::path::Path;
use std::process::Command;

use qbsc::cli::dispatch_with;
use qbsc::engine::{parse_transcript, Outcome, RoleMode};

const GOLDEN_TRANSCRIPT: &str = include_str!("fixtures/session_seed2024.txt");
const GOLDEN_PLAN: &str = include_str!("fixtures/plan_gv_reference.csv");

fn run(args: &[&str]) -> (i32, String) {
    run_env(args, None)
}

fn run_env(args: &[&str], env_seed: Option<&str>) -> (i32, String) {
    let argv = std::iter::once("qbsc".to_string()).chain(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = dispatch_with(argv, env_seed, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn golden_transcript_parses_to_documented_session() {
    let t = parse_transcript(GOLDEN_TRANSCRIPT).unwrap();
    assert_eq!((t.q, t.dim, t.l, t.beta), (4, 2, 2, 0.75));
    assert_eq!((t.n, t.k, t.d), (12, 1, 12));
    assert_eq!((t.seed, t.t), (2024, 2));
    assert_eq!(t.mode, RoleMode::Honest);
    assert_eq!(t.message, vec![1]);
    assert_eq!(
        t.outcomes.iter().filter(|o| **o == Outcome::Lost).count(),
        2
    );
    assert_eq!(t.y, 0);
    assert!(t.accept);
}

#[test]
fn golden_transcript_regenerates_bit_exact() {
    let (code, out) = run(&[
        "run",
        "--preset",
        "bb84",
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
        "--seed",
        "2024",
    ]);
    assert_eq!(code, 0);
    assert_eq!(out, GOLDEN_TRANSCRIPT);
}

#[test]
fn golden_plan_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("plan.csv");
    let (code, _) = run(&[
        "plan",
        "--r",
        "2^10",
        "--eps",
        "2^-10",
        "--family",
        "gv,repetition",
        "--delta",
        "0.01",
        "--lengths",
        "1000,10000,100000",
        "--csv",
        path_str(&csv),
    ]);
    assert_eq!(code, 0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), GOLDEN_PLAN);
}

#[test]
fn plan_sweep_rows_sorted() {
    let (code, out) = run(&[
        "plan",
        "--r",
        "2^10",
        "--eps",
        "2^-10",
        "--family",
        "gv",
        "--lengths",
        "100000,1000,10000",
        "--csv",
        "-",
    ]);
    assert_eq!(code, 0);
    let csv: Vec<&str> = out
        .lines()
        .skip_while(|l| !l.starts_with("q,D,l,"))
        .collect();
    assert_eq!(csv.len(), 4);
    let ns: Vec<&str> = csv[1..]
        .iter()
        .map(|row| row.split(',').nth(6).unwrap())
        .collect();
    assert_eq!(ns, ["100000", "1000", "10000"]);
    assert!(csv[1].contains(",true,"));
}

#[test]
fn seed_comes_from_environment_when_not_given() {
    let args = [
        "run",
        "--code",
        "rep:q=4,N=8",
        "--A",
        "3",
        "--p-depol",
        "0.5",
        "--t",
        "8",
    ];
    let (_, a) = run_env(&args, Some("99"));
    let (_, b) = run_env(&[&args[..], &["--seed", "99"]].concat(), None);
    let (_, c) = run_env(&args, Some("98"));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# honest session\npreset=bb84\ncode=rep:q=4,N=5\nA=2\nseed=5\nt=0\n",
    )
    .unwrap();
    let (code, from_file) = run(&["run", "--config", path_str(&cfg)]);
    assert_eq!(code, 0);
    assert!(from_file.contains("session seed=5 t=0 mode=honest"));
    let (_, overridden) = run(&["run", "--config", path_str(&cfg), "--seed", "6"]);
    assert!(overridden.contains("session seed=6 "));
}

#[test]
fn dumped_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "attack",
        "--code",
        "rep:q=4,N=3",
        "--strategy",
        "mixture",
        "--strings",
        "0,1",
        "--trials",
        "500",
        "--seed",
        "3",
        "--t",
        "0",
    ];
    let (code, dumped) = run(&[&args[..], &["--dump-config"]].concat());
    assert_eq!(code, 0);
    let cfg = dir.path().join("dumped.cfg");
    std::fs::write(&cfg, &dumped).unwrap();
    let (_, direct) = run(&args);
    let (_, via_file) = run(&["attack", "--config", path_str(&cfg)]);
    assert_eq!(direct, via_file);
    let (_, redumped) = run(&["attack", "--config", path_str(&cfg), "--dump-config"]);
    assert_eq!(redumped, dumped);
}

#[test]
fn audit_violation_exit_code() {
    // Shifts of weight up to 4 on each side turn 0000000 and 1111111 into the
    // same word, so the d - alpha overlap exponent cannot hold at alpha = 5.
    let (code, out) = run(&[
        "audit",
        "--code",
        "rep:q=4,N=7",
        "--strings",
        "0,1",
        "--alpha",
        "5",
    ]);
    assert_eq!(code, 3, "{out}");
    assert!(out.contains("violation: shifted overlap"), "{out}");
    assert!(out.contains("guaranteed_ok=true"), "{out}");
    let (code, _) = run(&[
        "audit",
        "--code",
        "rep:q=4,N=7",
        "--strings",
        "0,1",
        "--alpha",
        "2",
    ]);
    assert_eq!(code, 0);
    let (code, _) = run(&["verify", "--code", "rep:q=4,N=2", "--strings", "0,0"]);
    assert_eq!(code, 2);
}

#[test]
fn binary_outputs_are_byte_identical() {
    let exe = env!("CARGO_BIN_EXE_qbsc");
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "bounds", "--r", "2^10", "--eps", "2^-10", "--N", "1e5", "--d", "1000", "--k", "95000",
        ],
        vec![
            "plan",
            "--r",
            "2",
            "--eps",
            "0.5",
            "--family",
            "repetition",
            "--lengths",
            "2..64",
        ],
        vec![
            "run",
            "--code",
            "rep:q=4,N=6",
            "--A",
            "1",
            "--p-depol",
            "0.2",
            "--p-loss",
            "0.1",
            "--trials",
            "50",
            "--seed",
            "8",
        ],
        vec![
            "attack",
            "--code",
            "rep:q=4,N=3",
            "--A",
            "0",
            "--open",
            "2",
            "--trials",
            "2000",
            "--seed",
            "8",
            "--t",
            "0",
        ],
        vec!["verify", "--code", "rep:q=4,N=4", "--strings", "0,1"],
        vec![
            "audit",
            "--code",
            "rep:q=4,N=5",
            "--strings",
            "0,2",
            "--alpha",
            "2",
            "--seed",
            "4",
        ],
        vec!["codes", "--code", "rl:q=4,N=8,k=3,seed=2"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let csv = dir.path().join(format!("case{i}_{rep}.csv"));
            let mut cmd = Command::new(exe);
            cmd.args(args).env_remove("QBSC_SEED");
            if !matches!(args[0], "verify" | "audit" | "codes") {
                cmd.args(["--csv", path_str(&csv)]);
            }
            let o = cmd.output().unwrap();
            assert!(
                o.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&o.stderr)
            );
            let csv_text = std::fs::read(&csv).unwrap_or_default();
            outputs.push((o.stdout, csv_text));
        }
        assert_eq!(outputs[0], outputs[1], "{args:?}");
    }
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_qbsc");
    let status = |args: &[&str]| Command::new(exe).args(args).output().unwrap().status.code();
    assert_eq!(status(&["nonsense"]), Some(2));
    assert_eq!(status(&["--help"]), Some(0));
    assert_eq!(
        status(&[
            "verify",
            "--code",
            "rep:q=4,N=3",
            "--strings",
            "0,1",
            "--alpha",
            "1"
        ]),
        Some(0)
    );
}
