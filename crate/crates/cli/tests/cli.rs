use std::process::{Command, Output};

fn qba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qba")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn lists_scenarios() {
    let o = qba(&["list-scenarios"]);
    assert!(o.status.success());
    for name in ["failstop-leadercrash-n3", "byz-flip-n4", "byz-hadamard-n4"] {
        assert!(stdout(&o).contains(name));
    }
}

#[test]
fn unknown_scenario_is_a_usage_error_listing_choices() {
    let o = qba(&["check-reduction", "--scenario", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("failstop-leadercrash-n3"));
}

#[test]
fn missing_protocol_is_a_usage_error() {
    let o = qba(&["run", "--n", "4", "--t", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn leader_crash_reduction_passes() {
    let o = qba(&["check-reduction", "--scenario", "failstop-leadercrash-n3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().any(|l| l == "PASS"));
}

#[test]
fn budget_exhaustion_exits_three() {
    let o = qba(&["check-reduction", "--scenario", "byz-flip-n4", "--branch-budget", "10"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn coin_summary_has_both_columns() {
    let o = qba(&["run", "--protocol", "q-coin", "--n", "4", "--t", "1", "--mode", "enumerate"]);
    assert!(o.status.success());
    let row = stdout(&o).lines().find(|l| l.starts_with("row ")).unwrap().to_string();
    assert!(row.contains("p_all_1=0.316406250000"), "{row}");
    assert!(row.contains("p_all_0="));
}

#[test]
fn resilience_is_enforced_unless_overridden() {
    let o = qba(&["run", "--protocol", "savss", "--n", "3", "--t", "1", "--p", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "protocol = q-coin\nn = 4\nt = 1\nseed = 9\n").unwrap();
    let o = qba(&["run", "--config", cfg.to_str().unwrap(), "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("# config seed=3"));
    assert!(out.contains("# config protocol=q-coin"));
    std::fs::write(&cfg, "protocol = q-coin\nnn = 4\n").unwrap();
    let o = qba(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2: unknown key `nn`"));
}

#[test]
fn same_seed_gives_identical_trace_logs() {
    let dir = tempfile::tempdir().unwrap();
    let mut logs = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("trace{k}.log"));
        let o = qba(&[
            "run", "--protocol", "q-coin", "--n", "3", "--t", "1", "--mode", "sample", "--trials", "50", "--seed", "17",
            "--out", path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        logs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(logs[0], logs[1]);
    assert!(String::from_utf8_lossy(&logs[0]).starts_with("# qba "));
}

#[test]
fn zero_instances_pass_with_a_warning() {
    let o = qba(&["props", "--instances", "0"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"));
}
