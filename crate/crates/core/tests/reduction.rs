
use qba::adversary::{
    check_byzantine_reduction, check_failstop_reduction, CrashSchedule, FlipAttack, HadamardAttack, MaxLeaderCrash,
    NoFailStop, SiteRef,
};
use qba::normalform::{randomness_register, ClassicalProtocol};
use qba::protocols::leader_coin;
use qba::sched::RunMode;

fn coin(n: usize, l: u16) -> ClassicalProtocol {
    leader_coin(n, l)
}

#[test]
fn no_adversary_traces_match() {
    let p = coin(3, 2);
    let r = check_failstop_reduction(&p, &NoFailStop, &[0, 0, 0], 1, RunMode::exact()).unwrap();
    println!("tv={} dist={} rows={}", r.tv, r.max_state_distance, r.rows.len());
    assert!(r.passed(1e-9));
}

#[test]
fn leader_crash_traces_match() {
    let p = coin(3, 3);
    let leaders = (0..3).map(|i| SiteRef::new(randomness_register(i, 1), 1)).collect();
    let a = MaxLeaderCrash { round: 2, leaders };
    let r = check_failstop_reduction(&p, &a, &[0, 0, 0], 1, RunMode::exact()).unwrap();
    println!("tv={} dist={} rows={} {:?}", r.tv, r.max_state_distance, r.rows.len(), r.elapsed);
    assert!(r.passed(1e-9));
    let s = CrashSchedule { crashes: vec![(2, 1, vec![0])] };
    let r = check_failstop_reduction(&p, &s, &[0, 0, 0], 1, RunMode::exact()).unwrap();
    assert!(r.passed(1e-9));
}

#[test]
fn byzantine_attacks_match() {
    let p = coin(4, 2);
    let f = FlipAttack { target: 0, round: 2, read: 1, flip: 0 };
    let r = check_byzantine_reduction(&p, &f, &[0; 4], 1, RunMode::exact()).unwrap();
    println!("flip tv={} dist={} rows={} {:?}", r.tv, r.max_state_distance, r.rows.len(), r.elapsed);
    assert!(r.passed(1e-9));
    let h = HadamardAttack { target: 0, round: 2, victim: 1, site: 0 };
    let r = check_byzantine_reduction(&p, &h, &[0; 4], 1, RunMode::exact()).unwrap();
    println!("had tv={} dist={} rows={} {:?}", r.tv, r.max_state_distance, r.rows.len(), r.elapsed);
    assert!(r.passed(1e-9));
}

#[test]
fn transcript_suite_runs() {
    let r = qba::adversary::transcript_suite(7, 50, 4).unwrap();
    println!("{r:?}");
    assert_eq!(r.product_runs, 50);
    assert_eq!(r.bell_control_rank, 2);
}
