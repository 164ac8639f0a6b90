use std::collections::BTreeSet;

use qba::protocols::{ba_trials, CommonCoin, PhaseVoting, QuantumCoin};

/// A coin that always shows the same face to everyone.
struct Fixed(bool);

impl CommonCoin for Fixed {
    fn toss(&self, _: &BTreeSet<usize>, _: u64) -> Vec<Option<bool>> {
        vec![Some(self.0); 8]
    }
}

#[test]
fn unanimous_inputs_decide_in_one_phase() {
    let ba = PhaseVoting::new(4, 1);
    for v in [false, true] {
        let r = ba.run(&[v; 4], &QuantumCoin::new(4, 1), 9);
        assert!(r.agreement() && r.validity() && r.terminated());
        assert_eq!(r.phases, 1);
        assert!(r.decisions.iter().flatten().all(|&d| d == v));
    }
}

#[test]
fn quantum_coin_drives_agreement() {
    for n in [3, 4, 5] {
        let t = (n - 1) / 2;
        let t0 = std::time::Instant::now();
        let r = ba_trials(n, t, 10_000, 42, &QuantumCoin::new(n, t));
        println!("{r:?} {:?}", t0.elapsed());
        assert!(r.passed(), "{r:?}");
        assert!(r.mean_phases <= 5.0);
    }
}

#[test]
fn trials_are_reproducible() {
    let a = ba_trials(4, 1, 300, 7, &QuantumCoin::new(4, 1));
    let b = ba_trials(4, 1, 300, 7, &QuantumCoin::new(4, 1));
    assert_eq!(a, b);
}

#[test]
fn fixed_coin_still_agrees() {
    let r = ba_trials(5, 2, 2000, 1, &Fixed(true));
    assert!(r.passed());
}
