use std::fs;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_ctor");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

#[test]
fn analytic_default_grid_has_182_rows() {
    let out = run(&["analytic"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m_known,variant,n,r,p_exact_num,p_exact_den,p_float"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 26 * 7);
    assert!(text.ends_with('\n') && !text.contains('\r'));
    assert!(rows.contains(&"5,mtor,4,0,2951,5481,0.538405400474366"));
}

#[test]
fn analytic_single_point_and_oracle() {
    let out = run(&["analytic", "--mb", "25", "--mknown", "5", "--variant", "ctor:4:1", "--oracle"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains("5,ctor,4,1,31,261,"));
}

#[test]
fn oracle_resource_guard_exits_3() {
    let out = run(&["analytic", "--mknown", "25", "--variant", "mtor:10", "--oracle"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn invalid_config_exits_1_before_work() {
    for args in [
        &["analytic", "--variant", "ctor:4:4"][..],
        &["analytic", "--mknown", "9..3"],
        &["simulate", "--trials", "0"],
        &["analytic", "--bogus"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn simulate_joins_with_analytic_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let exact = dir.path().join("exact.csv");
    let common = ["--mknown", "0..4", "--variant", "mtor:4", "--variant", "ctor:4:1", "--trials", "2000", "--seed", "3"];
    for path in [&a, &b] {
        let mut args = vec!["simulate", "--out", path.to_str().unwrap()];
        args.extend(common);
        assert_eq!(run(&args).status.code(), Some(0));
    }
    let mut args = vec!["analytic", "--out", exact.to_str().unwrap()];
    args.extend(common);
    assert_eq!(run(&args).status.code(), Some(0));

    let sim = fs::read_to_string(&a).unwrap();
    assert_eq!(sim, fs::read_to_string(&b).unwrap());
    assert!(sim.starts_with("m_known,variant,n,r,p_empirical,ci95,trials,seed\n"));
    let keys = |text: &str| -> Vec<String> {
        text.lines().skip(1).map(|l| l.split(',').take(4).collect::<Vec<_>>().join(",")).collect()
    };
    assert_eq!(keys(&sim), keys(&fs::read_to_string(&exact).unwrap()));
}

#[test]
fn single_trial_gives_zero_or_one() {
    let out = run(&["simulate", "--mknown", "5", "--variant", "mtor:4", "--trials", "1"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let p = text.lines().nth(1).unwrap().split(',').nth(4).unwrap();
    assert!(p == "0.0" || p == "1.0", "{p}");
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    fs::write(&cfg, "# test\nmb = 10\nmknown = 2\nvariant = mtor:3\n").unwrap();
    let out = run(&["analytic", "--config", cfg.to_str().unwrap(), "--mknown", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    // C(10,3)/C(13,3) = 120/286 -> 1 - 60/143 = 83/143
    assert_eq!(text.lines().nth(1).unwrap().split(',').take(6).collect::<Vec<_>>().join(","), "3,mtor,3,0,83,143");
}

#[test]
fn fig2_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["fig2", "--trials", "200", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for name in ["fig2_analytic.csv", "fig2_simulated.csv"] {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text.lines().count(), 1 + 26 * 7);
    }
}

#[test]
fn e2e_exit_codes() {
    let ok = run(&["e2e", "--variant", "ctor:4:1", "--block", "2", "--size", "5000"]);
    assert_eq!(ok.status.code(), Some(0));
    let report = String::from_utf8(ok.stdout).unwrap();
    assert!(report.contains("generation 0: 3/4 cells delivered"));
    assert!(report.contains("bytes identical: true"));

    let mtor = run(&["e2e", "--variant", "mtor:4", "--block", "2"]);
    assert_eq!(mtor.status.code(), Some(2));
    assert!(String::from_utf8(mtor.stdout).unwrap().contains("result: interrupted"));

    let two = run(&["e2e", "--variant", "ctor:4:1", "--block", "1,2"]);
    assert_eq!(two.status.code(), Some(2));

    let bad = run(&["e2e", "--variant", "ctor:4:1", "--block", "7"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn e2e_from_message_file_and_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let msg = dir.path().join("m.bin");
    fs::write(&msg, b"onion".repeat(300)).unwrap();
    let out = run(&["e2e", "--variant", "mtor:4", "--message-file", msg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    // every bridge known to the censor
    let out = run(&["e2e", "--variant", "ctor:4:1", "--mb", "0", "--mknown", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["e2e", "--variant", "ctor:4:1", "--mb", "10", "--mknown", "0"]);
    assert_eq!(out.status.code(), Some(0));
}
