
use super::{
    decision_code, decode_decision, ClassicalProtocol, Incoming, Message, NormalFormError, StepOutput, View, ViewStep,
    UNDECIDED_CODE,
};
use crate::qstate::{FunctionAdd, RegisterLayout, SparseState};

/// Where a step's randomness lives.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RandSrc {
    /// Point-mass randomness; no register is allocated.
    Const(u64),
    Reg(String),
}

/// Registers holding what a player received at a step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ReceivedRegs {
    Start,
    Sync(Vec<Option<String>>),
    Async { sender: usize, register: String },
}

/// Register bookkeeping of one step of a player's quantum View.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StepRegs {
    pub randomness: RandSrc,
    pub sent_copies: Vec<Option<String>>,
    pub received: ReceivedRegs,
}

/// The register structure of `View_k` for one player.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlayerRegs {
    pub player: usize,
    pub input: u64,
    pub steps: Vec<StepRegs>,
    /// Copy registers `M'` of messages sent at the last step (`b = 1`).
    pub pending_copies: Vec<Option<String>>,
}

impl PlayerRegs {
    pub fn new(player: usize, n: usize, input: u64) -> Self {
        Self { player, input, steps: Vec::new(), pending_copies: vec![None; n] }
    }

    /// Every register this player's View refers to.
    pub fn view_registers(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.steps {
            if let RandSrc::Reg(r) = &s.randomness {
                out.push(r.clone());
            }
            out.extend(s.sent_copies.iter().flatten().cloned());
            match &s.received {
                ReceivedRegs::Start => {}
                ReceivedRegs::Sync(v) => out.extend(v.iter().flatten().cloned()),
                ReceivedRegs::Async { register, .. } => out.push(register.clone()),
            }
        }
        out
    }
}

/// One branch of a quantum step after measuring `D` and then `B`.
#[derive(Debug, Clone)]
pub struct QuantumStepBranch {
    pub decision: Option<bool>,
    /// Measured pattern; `None` when the player decided.
    pub pattern: Option<Vec<u8>>,
    /// Registers `M^{(i,j)}` to transmit, by recipient.
    pub outgoing: Vec<(usize, String)>,
    pub probability: f64,
    pub state: SparseState,
    pub regs: PlayerRegs,
}

/// The compiled quantum form of a normal-form protocol.
#[derive(Clone)]
pub struct QuantizedProtocol {
    protocol: ClassicalProtocol,
}

/// Compiles `protocol`: purified randomness, `U_P` as `|v>|y> -> |v>|y + f_P(v)>`,
/// and a measure plan of `D` then `B`.
pub fn quantize(protocol: ClassicalProtocol) -> Result<QuantizedProtocol, NormalFormError> {
    let dims = protocol.randomness_dims();
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(crate::qstate::StateError::BadRegisterShape { sites: dims.len(), dim: 0 }.into());
    }
    Ok(QuantizedProtocol { protocol })
}

pub fn randomness_register(player: usize, step: usize) -> String {
    format!("R.{player}.{step}")
}
pub fn message_register(player: usize, step: usize, to: usize) -> String {
    format!("M.{player}.{step}.{to}")
}
pub fn copy_register(player: usize, step: usize, to: usize) -> String {
    format!("C.{player}.{step}.{to}")
}
pub fn pattern_register(player: usize, step: usize) -> String {
    format!("B.{player}.{step}")
}
pub fn decision_register(player: usize, step: usize) -> String {
    format!("D.{player}.{step}")
}

impl QuantizedProtocol {
    pub fn protocol(&self) -> &ClassicalProtocol {
        &self.protocol
    }

    pub fn n(&self) -> usize {
        self.protocol.n()
    }

    /// Decodes a player's View from the values of its View sites, read in
    /// [`PlayerRegs::view_registers`] order.
    pub fn decode_view(&self, regs: &PlayerRegs, values: &[u16]) -> View {
        let n = self.protocol.n();
        let msg_sites = self.protocol.alphabet().sites();
        let rdims = self.protocol.randomness_dims();
        let rreg = crate::qstate::Register { name: String::new(), sites: rdims.len(), dims: rdims, offset: 0 };
        let mut view = View::new(regs.player, n, regs.input);
        let mut pos = 0usize;
        let mut take = |len: usize| -> Vec<u16> {
            let v = values[pos..pos + len].to_vec();
            pos += len;
            v
        };
        for s in &regs.steps {
            let randomness = match &s.randomness {
                RandSrc::Const(v) => *v,
                RandSrc::Reg(_) => rreg.decode(&take(rreg.sites)),
            };
            let sent_copies: Vec<Option<Message>> =
                s.sent_copies.iter().map(|c| c.as_ref().map(|_| take(msg_sites))).collect();
            let received = match &s.received {
                ReceivedRegs::Start => Incoming::Start,
                ReceivedRegs::Sync(v) => Incoming::Sync(v.iter().map(|r| r.as_ref().map(|_| take(msg_sites))).collect()),
                ReceivedRegs::Async { sender, .. } => Incoming::Async { sender: *sender, message: take(msg_sites) },
            };
            view.push(ViewStep { sent_copies, received, randomness });
        }
        view
    }

    /// Encodes `f_P`'s output into ancilla values `(M, M', B, D)`. A deciding
    /// step sends nothing.
    fn encode_output(out: &StepOutput, n: usize, msg_sites: usize) -> Vec<u16> {
        let decided = out.decision.is_some();
        let mut m = Vec::with_capacity(2 * n * msg_sites + n + 1);
        for _copy in 0..2 {
            for j in 0..n {
                match (&out.messages[j], decided) {
                    (Some(msg), false) => m.extend_from_slice(msg),
                    _ => m.extend(std::iter::repeat_n(0, msg_sites)),
                }
            }
        }
        for j in 0..n {
            m.push(u16::from(!decided && out.messages[j].is_some()));
        }
        m.push(decision_code(out.decision));
        m
    }

    /// One honest step of `regs.player` on the global state: purify (or, when
    /// `classical`, sample) `r_k`, apply `U_P` into a fresh ancilla, measure
    /// `D`, and when undecided measure `B`.
    pub fn run_step(
        &self,
        state: SparseState,
        regs: &PlayerRegs,
        received: ReceivedRegs,
        classical: bool,
    ) -> Result<Vec<QuantumStepBranch>, NormalFormError> {
        let p = self.protocol.clone();
        let n = p.n();
        let alphabet = p.alphabet().clone();
        let msg_sites = alphabet.sites();
        let i = regs.player;
        let k = regs.steps.len() + 1;
        let mut regs = regs.clone();
        let mut state = state;

        let dist = p.randomness(i, k);
        let mut rand_branches = Vec::new();
        let randomness = if dist.is_point_mass() {
            RandSrc::Const(dist.max_value())
        } else {
            let name = randomness_register(i, k);
            state = state.with_register_mixed(&name, p.randomness_dims())?;
            state = state.prepare_distribution(&name, &dist)?;
            if classical {
                let sites = state.layout().sites_of(&[&name])?;
                rand_branches = state.measurement_branches(&sites)?;
            }
            RandSrc::Reg(name)
        };
        let copies = std::mem::replace(&mut regs.pending_copies, vec![None; n]);
        regs.steps.push(StepRegs { randomness, sent_copies: copies, received });

        let mut out_regs = Vec::new();
        for j in 0..n {
            out_regs.push(message_register(i, k, j));
        }
        for j in 0..n {
            out_regs.push(copy_register(i, k, j));
        }
        let (b_name, d_name) = (pattern_register(i, k), decision_register(i, k));

        let starts: Vec<(f64, SparseState)> = if rand_branches.is_empty() {
            vec![(1.0, state)]
        } else {
            rand_branches.into_iter().map(|b| (b.probability, b.state)).collect()
        };

        let mut result = Vec::new();
        for (p0, mut st) in starts {
            for name in &out_regs {
                st = st.with_register_mixed(name, alphabet.dims.clone())?;
            }
            st = st.with_register(&b_name, n, 2)?;
            st = st.with_register(&d_name, 1, 3)?;
            let layout = st.layout().clone();
            let inputs = layout.sites_of(&regs.view_registers())?;
            let mut out_names = out_regs.clone();
            out_names.push(b_name.clone());
            out_names.push(d_name.clone());
            let outputs = layout.sites_of(&out_names)?;
            let out_dims: Vec<u16> = outputs.iter().map(|&s| layout.dim(s)).collect();
            let this = self.clone();
            let regs_c = regs.clone();
            let u_p = FunctionAdd::new(inputs, outputs, out_dims, move |v| {
                let view = this.decode_view(&regs_c, v);
                Self::encode_output(&this.protocol.step(&view), n, msg_sites)
            });
            st = st.apply_permutation(&u_p)?;

            let d_sites = layout.sites_of(&[&d_name])?;
            for db in st.measurement_branches(&d_sites)? {
                let decision = decode_decision(db.outcome[0]);
                if db.outcome[0] != UNDECIDED_CODE {
                    result.push(QuantumStepBranch {
                        decision,
                        pattern: None,
                        outgoing: Vec::new(),
                        probability: p0 * db.probability,
                        state: db.state,
                        regs: regs.clone(),
                    });
                    continue;
                }
                let b_sites = layout.sites_of(&[&b_name])?;
                for bb in db.state.measurement_branches(&b_sites)? {
                    let pattern: Vec<u8> = bb.outcome.iter().map(|&x| x as u8).collect();
                    let mut r = regs.clone();
                    r.pending_copies = (0..n).map(|j| (pattern[j] == 1).then(|| copy_register(i, k, j))).collect();
                    let outgoing = (0..n).filter(|&j| pattern[j] == 1).map(|j| (j, message_register(i, k, j))).collect();
                    result.push(QuantumStepBranch {
                        decision: None,
                        pattern: Some(pattern),
                        outgoing,
                        probability: p0 * db.probability * bb.probability,
                        state: bb.state,
                        regs: r,
                    });
                }
            }
        }
        Ok(result)
    }

    /// The View a player would compute from a basis configuration.
    pub fn view_of(&self, regs: &PlayerRegs, layout: &RegisterLayout, config: &[u16]) -> Result<View, NormalFormError> {
        let sites = layout.sites_of(&regs.view_registers())?;
        let values: Vec<u16> = sites.iter().map(|&s| config[s]).collect();
        Ok(self.decode_view(regs, &values))
    }
}
