use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cyberins_cli::report::{
    BgneOutput, PolicyOutput, SimulateOutput, SpeOutput, SweepOutput, Verdict,
};
use cyberins_cli::{EXIT_NON_CONVERGENCE, EXIT_NOT_INSURABLE, EXIT_OK, EXIT_USAGE};

fn cyberins(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cyberins"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = cyberins(args);
    assert_eq!(
        out.status.code(),
        Some(EXIT_OK),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    fs::read_to_string(path).unwrap()
}

#[test]
fn golden_outputs() {
    let base = ["--cu", "1", "--ca", "1", "--gamma", "1"];
    fn with<'a>(extra: &[&'a str], base: &[&'a str]) -> Vec<&'a str> {
        let mut v = extra.to_vec();
        v.extend_from_slice(base);
        v
    }
    assert_eq!(
        stdout(&with(&["spe", "--s", "0.5"], &base)),
        golden("spe_table.txt")
    );
    assert_eq!(
        stdout(&with(&["spe", "--s", "0.5", "--format", "json"], &base)),
        golden("spe.json")
    );
    assert_eq!(
        stdout(&with(&["spe", "--s", "0.5", "--format", "csv"], &base)),
        golden("spe.csv")
    );
    assert_eq!(
        stdout(&[
            "policy", "--cu", "1", "--ca", "3", "--gamma", "2", "--cs", "0.5", "--format", "csv"
        ]),
        golden("policy.csv")
    );
    assert_eq!(
        stdout(&with(&["bgne", "--cs", "1"], &base)),
        golden("bgne_table.txt")
    );
    assert_eq!(
        stdout(&with(
            &[
                "simulate",
                "--s",
                "0.5",
                "--seed",
                "42",
                "--samples",
                "1000000",
                "--format",
                "csv"
            ],
            &base
        )),
        golden("simulate.csv")
    );
    assert_eq!(
        stdout(&with(
            &["simulate", "--s", "1", "--seed", "42", "--samples", "10000"],
            &base
        )),
        golden("simulate_full_coverage.txt")
    );
    assert_eq!(
        stdout(&with(
            &[
                "sweep", "--param", "s", "--from", "0", "--to", "0.9", "--steps", "10", "--format",
                "csv"
            ],
            &base
        )),
        golden("sweep_s.csv")
    );
    assert_eq!(
        stdout(&[
            "sweep", "--cu", "1", "--ca", "1", "--gamma", "3", "--param", "s", "--from", "0",
            "--to", "1", "--steps", "11", "--format", "csv",
        ]),
        golden("sweep_boundary.csv")
    );
}

#[test]
fn spe_examples() {
    let json = stdout(&[
        "spe", "--cu", "1", "--ca", "1", "--gamma", "1", "--s", "1", "--format", "json",
    ]);
    let doc: SpeOutput = serde_json::from_str(&json).unwrap();
    assert_eq!(doc.spe.report.actions.protection, 0.0);
    assert_eq!(doc.spe.report.actions.attack, 0.0);

    let out = cyberins(&[
        "spe", "--cu", "10", "--ca", "0.1", "--gamma", "2", "--s", "0",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_NOT_INSURABLE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not insurable"));
}

#[test]
fn out_of_box_equilibrium_is_flagged() {
    let json = stdout(&[
        "spe", "--cu", "0.1", "--ca", "1", "--gamma", "1.2", "--s", "0", "--format", "json",
    ]);
    let doc: SpeOutput = serde_json::from_str(&json).unwrap();
    assert!(doc.spe.outside_interior_analysis);
    assert!(doc.spe.numerical.is_some());
    assert!((doc.spe.report.actions.protection - 1.0).abs() < 1e-8);

    let out = cyberins(&[
        "spe",
        "--cu",
        "0.1",
        "--ca",
        "1",
        "--gamma",
        "1.2",
        "--s",
        "0",
        "--max-iterations",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_NON_CONVERGENCE));
}

#[test]
#[allow(clippy::approx_constant)]
fn policy_and_bgne_examples() {
    for (ca, gamma, cs, premium) in [
        ("1", "1", "1", 0.693147),
        ("3", "2", "0.5", 0.287682),
        ("1", "1", "0", 0.693147),
    ] {
        let json = stdout(&[
            "policy", "--cu", "1", "--ca", ca, "--gamma", gamma, "--cs", cs, "--format", "json",
        ]);
        let doc: PolicyOutput = serde_json::from_str(&json).unwrap();
        assert_eq!(doc.optimum.policy.coverage, 1.0);
        assert!((doc.optimum.policy.premium - premium).abs() < 1e-6);
        assert!(doc.given.is_none());
    }
    let json = stdout(&[
        "bgne", "--cu", "2", "--ca", "1", "--gamma", "3", "--cs", "2", "--format", "json",
    ]);
    let doc: BgneOutput = serde_json::from_str(&json).unwrap();
    assert!((doc.bgne.policy.premium - 1.098612).abs() < 1e-6);
    assert_eq!(doc.bgne.zero_profit_check, 0.0);
}

#[test]
fn simulate_examples() {
    let json = stdout(&[
        "simulate", "--cu", "1", "--ca", "1", "--gamma", "1", "--s", "0.5", "--format", "json",
    ]);
    let doc: SimulateOutput = serde_json::from_str(&json).unwrap();
    assert!(doc.insurable && doc.all_pass());
    assert_eq!(doc.rows.len(), 4);
    assert!(doc.rows.iter().all(|r| r.verdict == Verdict::Pass));

    let out = cyberins(&[
        "simulate", "--cu", "10", "--ca", "0.1", "--gamma", "2", "--s", "0", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_NOT_INSURABLE));
    let doc: SimulateOutput = serde_json::from_slice(&out.stdout).unwrap();
    let div = doc.divergence.unwrap();
    assert_eq!(div.stages.len(), 5);
    assert!(div.growth >= 10.0 && !div.stabilized);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains(doc.advisory.as_deref().unwrap()));
}

#[test]
fn variance_unbounded_advisory_is_verbatim() {
    // gamma*(1-s)*R = 0.8 ln 2 = 0.55: mean exists, variance does not
    let out = cyberins(&[
        "simulate",
        "--cu",
        "1",
        "--ca",
        "1",
        "--gamma",
        "0.8",
        "--s",
        "0",
        "--samples",
        "10000",
    ]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let advisory = cyberins::montecarlo::MomentRegime::VarianceUnbounded
        .advisory()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains(advisory));
    assert!(String::from_utf8_lossy(&out.stderr).contains(advisory));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ci-invalid"));
}

#[test]
fn json_round_trips_bit_exactly() {
    let cases: [&[&str]; 5] = [
        &[
            "spe", "--cu", "0.7", "--ca", "2.3", "--gamma", "1.1", "--s", "0.37", "--t", "0.01",
            "--format", "json",
        ],
        &[
            "policy", "--cu", "0.7", "--ca", "2.3", "--gamma", "1.1", "--cs", "0.3", "--s", "0.4",
            "--format", "json",
        ],
        &[
            "bgne", "--cu", "0.7", "--ca", "2.3", "--gamma", "1.1", "--cs", "0.3", "--format",
            "json",
        ],
        &[
            "simulate",
            "--cu",
            "0.7",
            "--ca",
            "2.3",
            "--gamma",
            "1.1",
            "--s",
            "0.3",
            "--samples",
            "5000",
            "--format",
            "json",
        ],
        &[
            "sweep", "--cu", "0.7", "--ca", "2.3", "--gamma", "4", "--param", "s", "--from", "0",
            "--to", "1", "--steps", "7", "--format", "json",
        ],
    ];
    fn check<T: serde::de::DeserializeOwned + serde::Serialize + PartialEq + std::fmt::Debug>(
        text: &str,
    ) {
        let doc: T = serde_json::from_str(text).unwrap();
        let again = serde_json::to_string_pretty(&doc).unwrap() + "\n";
        assert_eq!(again, text);
        let back: T = serde_json::from_str(&again).unwrap();
        assert_eq!(back, doc);
    }
    check::<SpeOutput>(&stdout(cases[0]));
    check::<PolicyOutput>(&stdout(cases[1]));
    check::<BgneOutput>(&stdout(cases[2]));
    check::<SimulateOutput>(&stdout(cases[3]));
    check::<SweepOutput>(&stdout(cases[4]));
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scenario.toml");
    fs::write(
        &cfg,
        "policy.s = 0.5\nsim.seed = 42\n\n[market]\ncu = 1\nca = 1\n\n[profile]\ngamma = 1\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();

    let from_file = stdout(&["spe", "--config", cfg]);
    assert_eq!(from_file, golden("spe_table.txt"));

    let json = stdout(&["spe", "--config", cfg, "--s", "0.9", "--format", "json"]);
    let doc: SpeOutput = serde_json::from_str(&json).unwrap();
    assert_eq!(doc.scenario.policy.unwrap().coverage, 0.9);
    assert_eq!(doc.scenario.sim.unwrap().seed, 42);

    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "market.cu = 1\nmarket.ca = 1\nprofile.gamma = 1\nprofile.gama = 2\n",
    )
    .unwrap();
    let out = cyberins(&["spe", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gama"));

    let out = cyberins(&[
        "spe",
        "--config",
        dir.path().join("missing.toml").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
}

#[test]
fn parse_errors_exit_with_usage_code() {
    for args in [
        &["spe", "--cu", "abc"][..],
        &["spe", "--cu", "1", "--ca", "1"],
        &["spe", "--cu", "-1", "--ca", "1", "--gamma", "1"],
        &[
            "spe", "--cu", "1", "--ca", "1", "--gamma", "1", "--s", "1.5",
        ],
        &[
            "sweep", "--cu", "1", "--ca", "1", "--gamma", "1", "--param", "beta", "--from", "0",
            "--to", "1",
        ],
        &[
            "sweep", "--cu", "1", "--ca", "1", "--gamma", "1", "--param", "gamma", "--from", "-1",
            "--to", "1",
        ],
        &["frobnicate"],
        &[
            "spe", "--format", "xml", "--cu", "1", "--ca", "1", "--gamma", "1",
        ],
    ] {
        let out = cyberins(args);
        assert_eq!(out.status.code(), Some(EXIT_USAGE), "{args:?}");
    }
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let args = [
        "sweep", "--cu", "1", "--ca", "1", "--gamma", "1", "--param", "s", "--from", "0", "--to",
        "0.9", "--steps", "10", "--format", "csv",
    ];
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let out = cyberins(&with_out);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert!(out.stdout.is_empty());
    assert_eq!(fs::read_to_string(&path).unwrap(), stdout(&args));
}

#[test]
fn sweep_over_other_parameters() {
    for param in ["gamma", "cu", "ca", "cs"] {
        let csv = stdout(&[
            "sweep", "--cu", "1", "--ca", "1", "--gamma", "1", "--param", param, "--from", "0.5",
            "--to", "2", "--steps", "4", "--format", "csv",
        ]);
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with(&format!("{param},p_u,")));
        assert_eq!(lines.count(), 4);
    }
}
