use qba::scenarios::{find, names, ScenarioKind, SCENARIOS};
use qba::sched::RunMode;

#[test]
fn registry_has_three_failstop_and_two_byzantine() {
    let fs = SCENARIOS.iter().filter(|s| s.kind == ScenarioKind::FailStop && s.n == 3).count();
    let byz = SCENARIOS.iter().filter(|s| s.kind == ScenarioKind::Byzantine && s.n == 4).count();
    assert_eq!((fs, byz), (3, 2));
    assert!(find("failstop-leadercrash-n3").is_some());
    assert!(find("nope").is_none());
    assert_eq!(names().len(), SCENARIOS.len());
}

#[test]
fn every_scenario_passes() {
    for s in SCENARIOS {
        let r = s.check(RunMode::exact()).unwrap();
        println!("{} tv={:e} dist={:e} rows={} {:?}", s.name, r.tv, r.max_state_distance, r.rows.len(), r.elapsed);
        assert!(r.passed(1e-9), "{}", s.name);
        assert!(r.rows.len() > 1);
    }
}
