//! Product structure across a good/bad cut once the good side's transcript
//! copies are fixed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::qstate::{gates, schmidt_rank, ClassicalDistribution, DenseUnitary, FunctionAdd, RegisterLayout, SparseState};

#[derive(Debug, Clone, Serialize)]
pub struct TranscriptReport {
    /// Transcript values in the support.
    pub branches: usize,
    /// Largest Schmidt rank across the cut over all branches.
    pub max_rank: usize,
}

impl TranscriptReport {
    pub fn is_product(&self) -> bool {
        self.max_rank <= 1
    }
}

/// For every value of the `transcript` registers, the Schmidt rank of the
/// conditional state between the `bad` registers and everything else.
pub fn transcript_product_check(
    state: &SparseState,
    bad: &[String],
    transcript: &[String],
) -> Result<TranscriptReport, crate::qstate::StateError> {
    let layout = state.layout();
    let bad_sites = layout.sites_of(bad)?;
    let t_sites = layout.sites_of(transcript)?;
    let mut report = TranscriptReport { branches: 0, max_rank: 0 };
    if t_sites.is_empty() {
        report.branches = 1;
        report.max_rank = schmidt_rank(state, &bad_sites);
        return Ok(report);
    }
    for value in state.marginal(&t_sites).keys() {
        if let (_, Some(cond)) = state.project(&t_sites, value)? {
            report.branches += 1;
            report.max_rank = report.max_rank.max(schmidt_rank(&cond, &bad_sites));
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct TranscriptSuiteReport {
    pub runs: usize,
    /// Runs whose conditional states were all product states.
    pub product_runs: usize,
    /// Same runs with the good side's copies left out of the transcript:
    /// how many show entanglement across the cut.
    pub entangled_without_copies: usize,
    /// Schmidt rank of the Bell exchange without copies.
    pub bell_control_rank: usize,
}

/// Random two-party exchange. The good party `A` processes classically
/// (plus local unitaries on its private register); the bad party `B`
/// applies arbitrary unitaries to everything it holds.
struct Exchange {
    state: SparseState,
    bad: Vec<String>,
    transcript: Vec<String>,
    copies: Vec<String>,
    good_inputs: Vec<String>,
}

fn random_table(rng: &mut ChaCha8Rng, size: usize) -> Vec<u16> {
    (0..size).map(|_| rng.gen_range(0..2)).collect()
}

fn index(values: &[u16]) -> usize {
    values.iter().fold(0usize, |acc, &v| acc * 2 + v as usize)
}

fn apply_random_unitary(
    state: SparseState,
    regs: &[String],
    rng: &mut ChaCha8Rng,
) -> Result<SparseState, crate::qstate::StateError> {
    let sites = state.layout().sites_of(regs)?;
    let m = gates::random_unitary(1 << sites.len(), || rng.gen::<f64>());
    state.apply_dense_unitary(&DenseUnitary::new(sites, m)?)
}

fn random_exchange(rng: &mut ChaCha8Rng, rounds: usize) -> Result<Exchange, crate::qstate::StateError> {
    let mut layout = RegisterLayout::new();
    layout.add("A", 2, 2)?;
    layout.add("B", 2, 2)?;
    let mut state = SparseState::zero(layout);
    let weights: Vec<(u64, f64)> = (0..4).map(|v| (v, rng.gen::<f64>() + 0.05)).collect();
    let total: f64 = weights.iter().map(|w| w.1).sum();
    let dist = ClassicalDistribution::new(weights.into_iter().map(|(v, w)| (v, w / total)))?;
    state = state.prepare_distribution("A", &dist)?;
    let mut ex = Exchange {
        state,
        bad: vec!["B".into()],
        transcript: Vec::new(),
        copies: Vec::new(),
        good_inputs: vec!["A".into()],
    };
    ex.state = apply_random_unitary(ex.state, &ex.bad, rng)?;
    let first_good = rng.gen_bool(0.5);
    for r in 0..rounds {
        let m = format!("M{r}");
        if (r % 2 == 0) == first_good {
            // A -> B: value and copy from A's view.
            let c = format!("C{r}");
            let st = ex.state.with_register(&m, 1, 2)?.with_register(&c, 1, 2)?;
            let inputs = st.layout().sites_of(&ex.good_inputs)?;
            let outputs = st.layout().sites_of(&[&m, &c])?;
            let table = random_table(rng, 1 << inputs.len());
            let f = FunctionAdd::new(inputs, outputs, vec![2, 2], move |v| {
                let b = table[index(v)];
                vec![b, b]
            });
            ex.state = st.apply_permutation(&f)?;
            ex.bad.push(m);
            ex.transcript.push(c.clone());
            ex.copies.push(c);
            ex.state = apply_random_unitary(ex.state, &ex.bad, rng)?;
        } else {
            // B -> A: B entangles a fresh register with what it holds and hands it over.
            ex.state = ex.state.with_register(&m, 1, 2)?;
            let mut regs = ex.bad.clone();
            regs.push(m.clone());
            ex.state = apply_random_unitary(ex.state, &regs, rng)?;
            // A folds the message into its private register.
            let inputs = ex.state.layout().sites_of(&[&m])?;
            let outputs = ex.state.layout().sites_of(&["A"])?;
            let table = random_table(rng, 2);
            let f = FunctionAdd::new(inputs, outputs, vec![2, 2], move |v| vec![table[v[0] as usize], 1 - table[v[0] as usize]]);
            ex.state = ex.state.apply_permutation(&f)?;
            ex.state = apply_random_unitary(ex.state, &["A".to_string()], rng)?;
            ex.transcript.push(m.clone());
            ex.good_inputs.push(m);
        }
    }
    Ok(ex)
}

/// `runs` random exchanges of `rounds` messages each. For every run checks
/// the product property with the copies in the transcript, and again with
/// the copies treated as ordinary good registers (not conditioned on).
pub fn transcript_suite(seed: u64, runs: usize, rounds: usize) -> Result<TranscriptSuiteReport, crate::qstate::StateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut product_runs = 0;
    let mut entangled = 0;
    for _ in 0..runs {
        let ex = random_exchange(&mut rng, rounds)?;
        if transcript_product_check(&ex.state, &ex.bad, &ex.transcript)?.is_product() {
            product_runs += 1;
        }
        if !ex.copies.is_empty() {
            let partial: Vec<String> = ex.transcript.iter().filter(|t| !ex.copies.contains(t)).cloned().collect();
            if !transcript_product_check(&ex.state, &ex.bad, &partial)?.is_product() {
                entangled += 1;
            }
        }
    }
    Ok(TranscriptSuiteReport {
        runs,
        product_runs,
        entangled_without_copies: entangled,
        bell_control_rank: bell_without_copy()?,
    })
}

/// `A` in `|+>` sends its bit to `B` without keeping a copy: a Bell pair.
pub fn bell_without_copy() -> Result<usize, crate::qstate::StateError> {
    let mut layout = RegisterLayout::new();
    layout.add("A", 1, 2)?;
    layout.add("M", 1, 2)?;
    let s = SparseState::zero(layout).prepare_distribution("A", &ClassicalDistribution::uniform(2))?;
    let f = FunctionAdd::new(vec![0], vec![1], vec![2], |v| vec![v[0]]);
    let s = s.apply_permutation(&f)?;
    Ok(transcript_product_check(&s, &["M".to_string()], &[])?.max_rank)
}
