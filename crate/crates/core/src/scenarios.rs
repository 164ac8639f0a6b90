//! Named adversary scenarios for the reduction checks.

use crate::adversary::{
    check_byzantine_reduction, check_failstop_reduction, CrashSchedule, FlipAttack, HadamardAttack, MaxLeaderCrash,
    ReductionReport, SiteRef, ValueAdaptiveCrash,
};
use crate::normalform::{randomness_register, ClassicalProtocol};
use crate::protocols::leader_coin;
use crate::sched::{RunMode, SchedError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    FailStop,
    Byzantine,
}

#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub name: &'static str,
    pub kind: ScenarioKind,
    pub n: usize,
    pub t: usize,
    /// Number of candidate leaders in the coin protocol.
    pub leaders: u16,
    pub summary: &'static str,
}

pub const SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "failstop-leadercrash-n3",
        kind: ScenarioKind::FailStop,
        n: 3,
        t: 1,
        leaders: 3,
        summary: "crash whichever player is most likely to hold the winning leader value",
    },
    Scenario {
        name: "failstop-schedule-n3",
        kind: ScenarioKind::FailStop,
        n: 3,
        t: 1,
        leaders: 3,
        summary: "crash player 1 in round 2, letting only its message to player 0 through",
    },
    Scenario {
        name: "failstop-adaptive-n3",
        kind: ScenarioKind::FailStop,
        n: 3,
        t: 1,
        leaders: 2,
        summary: "crash the player whose coin most likely equals a random target bit",
    },
    Scenario {
        name: "byz-flip-n4",
        kind: ScenarioKind::Byzantine,
        n: 4,
        t: 1,
        leaders: 2,
        summary: "corrupt player 0, read player 1's coin and flip its own coin on a random bit",
    },
    Scenario {
        name: "byz-hadamard-n4",
        kind: ScenarioKind::Byzantine,
        n: 4,
        t: 1,
        leaders: 2,
        summary: "corrupt player 0 and apply a Hadamard gate to the coin site it received from player 1",
    },
];

pub fn find(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

pub fn names() -> Vec<&'static str> {
    SCENARIOS.iter().map(|s| s.name).collect()
}

impl Scenario {
    /// Runs the quantum and the classical side and compares them.
    pub fn check(&self, mode: RunMode) -> Result<ReductionReport, SchedError> {
        let protocol: ClassicalProtocol = leader_coin(self.n, self.leaders);
        let inputs = vec![0; self.n];
        let coins = || (0..self.n).map(|i| SiteRef::new(randomness_register(i, 1), 1)).collect::<Vec<_>>();
        match self.name {
            "failstop-leadercrash-n3" => {
                let a = MaxLeaderCrash { round: 2, leaders: coins() };
                check_failstop_reduction(&protocol, &a, &inputs, self.t, mode)
            }
            "failstop-schedule-n3" => {
                let a = CrashSchedule { crashes: vec![(2, 1, vec![0])] };
                check_failstop_reduction(&protocol, &a, &inputs, self.t, mode)
            }
            "failstop-adaptive-n3" => {
                let a = ValueAdaptiveCrash { round: 2, coins: coins().into_iter().map(|c| SiteRef { site: 0, ..c }).collect() };
                check_failstop_reduction(&protocol, &a, &inputs, self.t, mode)
            }
            "byz-flip-n4" => {
                let a = FlipAttack { target: 0, round: 2, read: 1, flip: 0 };
                check_byzantine_reduction(&protocol, &a, &inputs, self.t, mode)
            }
            "byz-hadamard-n4" => {
                let a = HadamardAttack { target: 0, round: 2, victim: 1, site: 0 };
                check_byzantine_reduction(&protocol, &a, &inputs, self.t, mode)
            }
            other => unreachable!("scenario {other} has no runner"),
        }
    }
}
