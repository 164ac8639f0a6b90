use std::collections::{BTreeMap, BTreeSet};

use qba::protocols::{
    savss_privacy_audit, savss_reconstruct, savss_share, secret_distribution, Bracha, DealerBehavior, PrimeField,
    SavssParams, SenderBehavior, SymmetricBivariate,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params() -> SavssParams {
    SavssParams::new(4, 1, 5).unwrap()
}

#[test]
fn hand_interpolation_over_f5() {
    // f(x, y) = 1 + 2(x + y) + 3xy.
    let f = SymmetricBivariate { params: params(), coeffs: vec![1, 2, 3] };
    assert_eq!(f.share(1), vec![3, 0]);
    assert_eq!(f.share(2), vec![0, 3]);
    let field = PrimeField::new(5).unwrap();
    // f(0, 1) = 3 and f(0, 2) = 5 = 0: the line through them hits 1 at 0.
    assert_eq!(field.interpolate_at_zero(&[(1, 3), (2, 0)]), 1);
    for x in 0..5 {
        for y in 0..5 {
            assert_eq!(f.eval(x, y), f.eval(y, x));
            assert_eq!(f.eval(x, y), (1 + 2 * (x + y) + 3 * x * y) % 5);
        }
    }
}

#[test]
fn honest_share_is_complete_and_secret_uniform() {
    let share = savss_share(params(), 0, &DealerBehavior::Honest).unwrap();
    assert_eq!(share.support, 125);
    assert_eq!(share.branches.len(), 1);
    let b = &share.branches[0];
    assert!(b.r_outcomes.values().all(|&v| v == 0));
    assert_eq!(b.ok.len(), 12);
    assert!(b.share_complete());
    let d = secret_distribution(&share).unwrap();
    for s in 0..5 {
        assert!((d.prob(s) - 0.2).abs() < 1e-9, "{s}: {}", d.prob(s));
    }
    // Every player reconstructs the same value on every branch.
    for r in savss_reconstruct(&share, b, &BTreeMap::new()).unwrap() {
        let outs: BTreeSet<_> = r.outputs.iter().collect();
        assert_eq!(outs.len(), 1);
        assert!(r.outputs[0].is_some());
        assert!(r.shuns.is_empty());
    }
}

#[test]
fn privacy_holds_below_threshold_only() {
    let share = savss_share(params(), 0, &DealerBehavior::Honest).unwrap();
    for i in 1..4 {
        let tv = savss_privacy_audit(&share, &BTreeSet::from([i])).unwrap();
        assert!(tv < 1e-12, "player {i}: {tv}");
    }
    assert!(savss_privacy_audit(&share, &BTreeSet::new()).unwrap() < 1e-12);
    let tv = savss_privacy_audit(&share, &BTreeSet::from([1, 2])).unwrap();
    assert!((tv - 1.0).abs() < 1e-12);
}

#[test]
fn asymmetric_dealer_is_caught() {
    // h(x, y) = x is not symmetric.
    let h = vec![vec![0, 0], vec![1, 0]];
    let share = savss_share(params(), 0, &DealerBehavior::Asymmetric(h)).unwrap();
    for b in &share.branches {
        assert!(b.r_outcomes.values().any(|&v| v != 0));
        for (&(i, j), &v) in &b.r_outcomes {
            assert_eq!(v == 0, b.ok.contains(&(i, j)));
        }
    }
}

#[test]
fn lying_player_is_shunned_and_ignored() {
    let share = savss_share(params(), 0, &DealerBehavior::Honest).unwrap();
    let b = &share.branches[0];
    let honest = savss_reconstruct(&share, b, &BTreeMap::new()).unwrap();
    for liar in 0..4 {
        for delta in [vec![1, 0], vec![0, 1], vec![3, 2]] {
            let lied = savss_reconstruct(&share, b, &BTreeMap::from([(liar, delta)])).unwrap();
            for (h, l) in honest.iter().zip(&lied) {
                for i in (0..4).filter(|&i| i != liar) {
                    assert_eq!(l.outputs[i], h.outputs[i]);
                }
                // A nonzero degree-1 error vanishes at one point at most.
                let shunners = l.shuns.iter().filter(|&&(i, j)| j == liar && i != liar).count();
                assert!(shunners >= 2);
            }
        }
    }
}

#[test]
fn bracha_honest_sender_delivers_everywhere() {
    let b = Bracha::new(4, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let out = b.run(0, &SenderBehavior::Honest(7), &BTreeSet::from([3]), &mut rng);
        assert_eq!(&out.delivered[..3], &[Some(7); 3]);
        assert!(out.guarantees);
    }
}

#[test]
fn bracha_equivocation_never_splits_good_players() {
    let b = Bracha::new(4, 1);
    let faulty = BTreeSet::from([0]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for mask in 0u32..16 {
        let values: Vec<u32> = (0..4).map(|j| mask >> j & 1).collect();
        for _ in 0..100 {
            let out = b.run(0, &SenderBehavior::Equivocate(values.clone()), &faulty, &mut rng);
            assert!(out.consistent(&faulty), "{values:?} {:?}", out.delivered);
        }
    }
}

#[test]
fn bracha_flags_too_many_faults() {
    assert!(!Bracha::new(3, 1).guarantees_hold());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(!Bracha::new(3, 1).run(0, &SenderBehavior::Honest(1), &BTreeSet::new(), &mut rng).guarantees);
}
