//! `qba`: run protocols, check adversary reductions and property suites.

mod config;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qba::adversary::transcript_suite;
use qba::normalform::quantize;
use qba::protocols::{
    ba_trials, classical_common_coin, leader_coin, savss_privacy_audit, savss_share, secret_distribution,
    DealerBehavior, QuantumCoin, SavssParams,
};
use qba::qstate::{commutation_suite, ClassicalDistribution};
use qba::scenarios::{self, SCENARIOS};
use qba::sched::{AsyncEngine, Event, ExecutionTrace, Fifo, RunMode, SchedError, SyncEngine, TraceDistribution};

use config::{ConfigError, Settings};

const PASS: u8 = 0;
const FAIL: u8 = 1;
const USAGE: u8 = 2;
const BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "qba", version, about = "Byzantine agreement against full-information quantum adversaries")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a protocol and write its trace log and summary.
    Run(RunArgs),
    /// Compare quantum and classical executions of a bundled scenario.
    CheckReduction(CheckArgs),
    /// Run the measurement-commutation and transcript property suites.
    Props(PropsArgs),
    /// List bundled adversary scenarios.
    ListScenarios,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file; flags take precedence.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    cutoff: Option<String>,
    #[arg(long = "branch-budget")]
    branch_budget: Option<String>,
    /// Write the trace log here.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// q-coin, c-coin, leader-coin, savss or ba.
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    p: Option<String>,
    /// enumerate or sample.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// Probability of a 0 coin (coins only).
    #[arg(long)]
    bias: Option<String>,
    /// `privacy` adds the share-privacy table (savss only).
    #[arg(long)]
    audit: Option<String>,
    /// Accept `t` beyond the protocol's resilience.
    #[arg(long = "allow-resilience-override", num_args = 0..=1, default_missing_value = "true")]
    allow_override: Option<String>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Args)]
struct PropsArgs {
    #[command(flatten)]
    common: Common,
    /// Random instances per suite.
    #[arg(long)]
    instances: Option<String>,
}

/// Why a command stopped early.
enum Failure {
    Usage(String),
    Budget(String),
    Other(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<SchedError> for Failure {
    fn from(e: SchedError) -> Self {
        match e {
            SchedError::BudgetExceeded(_) => Failure::Budget(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

/// What a command produced.
struct Output {
    report: String,
    traces: String,
    passed: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::ListScenarios => {
            for s in SCENARIOS {
                println!("{:<26} {:?} n={} t={}  {}", s.name, s.kind, s.n, s.t, s.summary);
            }
            return ExitCode::from(PASS);
        }
        Cmd::Run(a) => settings(&a.common, run_defaults(), run_flags(a)).and_then(|s| finish(&s, cmd_run(&s))),
        Cmd::CheckReduction(a) => {
            settings(&a.common, &[], vec![("scenario", a.scenario.clone())]).and_then(|s| finish(&s, cmd_check(&s)))
        }
        Cmd::Props(a) => settings(&a.common, &[("instances", "200")], vec![("instances", a.instances.clone())])
            .and_then(|s| finish(&s, cmd_props(&s))),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(USAGE)
        }
        Err(Failure::Budget(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(BUDGET)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(FAIL)
        }
    }
}

fn run_defaults() -> &'static [(&'static str, &'static str)] {
    &[("mode", "enumerate"), ("trials", "1000"), ("p", "5")]
}

fn run_flags(a: &RunArgs) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("protocol", a.protocol.clone()),
        ("n", a.n.clone()),
        ("t", a.t.clone()),
        ("p", a.p.clone()),
        ("mode", a.mode.clone()),
        ("trials", a.trials.clone()),
        ("bias", a.bias.clone()),
        ("audit", a.audit.clone()),
        ("allow-resilience-override", a.allow_override.clone()),
    ]
}

fn settings(
    common: &Common,
    defaults: &[(&str, &str)],
    mut flags: Vec<(&'static str, Option<String>)>,
) -> Result<Settings, Failure> {
    let file = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{path}: {e}")))?;
            config::parse(&text, path)?
        }
        None => Default::default(),
    };
    flags.extend([
        ("seed", common.seed.clone()),
        ("cutoff", common.cutoff.clone()),
        ("branch-budget", common.branch_budget.clone()),
        ("out", common.out.clone()),
    ]);
    let mut all = vec![("seed", "0"), ("cutoff", "0"), ("branch-budget", "1000000")];
    all.extend_from_slice(defaults);
    Ok(Settings::new(&all, file, &flags))
}

/// Version, seed and config hash, as `#` lines.
fn provenance(s: &Settings) -> String {
    format!(
        "# qba {}\n# seed={} config-hash={}\n",
        env!("CARGO_PKG_VERSION"),
        s.get("seed").unwrap_or("0"),
        s.hash()
    )
}

fn finish(s: &Settings, out: Result<Output, Failure>) -> Result<u8, Failure> {
    let out = out?;
    let header = provenance(s);
    let mut text = header.clone();
    for line in s.render().lines() {
        writeln!(text, "# config {line}").unwrap();
    }
    text.push_str(&out.report);
    print!("{text}");
    if let Some(path) = s.get("out") {
        std::fs::write(path, format!("{header}{}", out.traces)).map_err(|e| Failure::Other(format!("{path}: {e}")))?;
    }
    Ok(if out.passed { PASS } else { FAIL })
}

fn mode(s: &Settings, trial: u64) -> Result<RunMode, Failure> {
    match s.require("mode")? {
        "enumerate" => Ok(RunMode::Enumerate { cutoff: s.parse("cutoff")?, budget: s.parse("branch-budget")? }),
        "sample" => Ok(RunMode::Sample { seed: s.parse::<u64>("seed")?.wrapping_add(trial) }),
        other => Err(Failure::Usage(format!("mode must be enumerate or sample, got `{other}`"))),
    }
}

fn all_decide(t: &ExecutionTrace, n: usize, v: bool) -> bool {
    let deciders: BTreeSet<usize> = t
        .events
        .iter()
        .filter_map(|e| match e {
            Event::Decision { player, d: Some(d) } if *d == v => Some(*player),
            _ => None,
        })
        .collect();
    deciders.len() == n
}

/// Runs `one` once when enumerating, or `trials` times when sampling, and
/// pools the traces.
fn pooled(s: &Settings, one: impl Fn(RunMode) -> Result<TraceDistribution, SchedError>) -> Result<TraceDistribution, Failure> {
    if s.require("mode")? == "enumerate" {
        return Ok(one(mode(s, 0)?)?);
    }
    let trials: u64 = s.parse("trials")?;
    let mut pool = TraceDistribution::default();
    for k in 0..trials {
        for (t, _) in one(mode(s, k)?)?.probs {
            pool.add(t, 1.0 / trials as f64);
        }
    }
    Ok(pool)
}

fn coin_report(dist: &TraceDistribution, n: usize) -> Output {
    let p1 = dist.mass(|t| all_decide(t, n, true));
    let p0 = dist.mass(|t| all_decide(t, n, false));
    let mut report = String::new();
    writeln!(report, "traces  P[all 1]  P[all 0]  pruned").unwrap();
    writeln!(report, "{:<7} {:<9.6} {:<9.6} {:.3e}", dist.len(), p1, p0, dist.pruned_mass).unwrap();
    writeln!(report, "row traces={} p_all_1={p1:.12} p_all_0={p0:.12} pruned={:e}", dist.len(), dist.pruned_mass).unwrap();
    Output { report, traces: dist.to_lines(), passed: true }
}

fn resilience(s: &Settings, ok: bool, rule: &str) -> Result<(), Failure> {
    if ok || s.flag("allow-resilience-override")? {
        return Ok(());
    }
    Err(Failure::Usage(format!("t outside the protocol's resilience ({rule}); pass --allow-resilience-override")))
}

fn cmd_run(s: &Settings) -> Result<Output, Failure> {
    let protocol = s.require("protocol").map_err(|_| Failure::Usage("missing --protocol".into()))?;
    let n: usize = s.parse("n")?;
    let t: usize = s.parse("t")?;
    if n < 2 || t >= n {
        return Err(Failure::Usage(format!("need n >= 2 and t < n, got n={n} t={t}")));
    }
    let bias = match s.get("bias") {
        Some(_) => ClassicalDistribution::bernoulli_zero(s.parse("bias")?).map_err(|e| Failure::Usage(e.to_string()))?,
        None => ClassicalDistribution::bernoulli_zero(1.0 / n as f64).expect("valid"),
    };
    match protocol {
        "q-coin" => {
            resilience(s, 2 * t < n, "t < n/2")?;
            let coin = QuantumCoin::new(n, t).with_bias(bias);
            let dist = pooled(s, |m| Ok(coin.run(&BTreeSet::new(), &Fifo, m)?.distribution))?;
            Ok(coin_report(&dist, n))
        }
        "c-coin" => {
            resilience(s, 2 * t < n, "t < n/2")?;
            let q = quantize(classical_common_coin(n, t)).map_err(|e| Failure::Other(e.to_string()))?;
            let dist = pooled(s, |m| Ok(AsyncEngine::new(&q, vec![0; n], &Fifo).classical(true).run(m)?.distribution))?;
            Ok(coin_report(&dist, n))
        }
        "leader-coin" => {
            let q = quantize(leader_coin(n, n as u16)).map_err(|e| Failure::Other(e.to_string()))?;
            let dist = pooled(s, |m| Ok(SyncEngine::new(&q, vec![0; n]).run(m)?.distribution))?;
            Ok(coin_report(&dist, n))
        }
        "savss" => {
            resilience(s, 3 * t < n, "t < n/3")?;
            run_savss(s, n, t)
        }
        "ba" => {
            resilience(s, 2 * t < n, "t < n/2")?;
            let r = ba_trials(n, t, s.parse("trials")?, s.parse("seed")?, &QuantumCoin::new(n, t).with_bias(bias));
            let mut report = String::new();
            writeln!(report, "trials  agreement-viol  validity-viol  unterminated  mean-phases  max-phases").unwrap();
            writeln!(
                report,
                "{:<7} {:<15} {:<14} {:<13} {:<12.4} {}",
                r.trials, r.agreement_violations, r.validity_violations, r.unterminated, r.mean_phases, r.max_phases
            )
            .unwrap();
            let row = serde_json::to_string(&r).expect("serializable");
            writeln!(report, "row {row}").unwrap();
            Ok(Output { report, traces: format!("{row}\n"), passed: r.passed() })
        }
        other => Err(Failure::Usage(format!(
            "unknown protocol `{other}`; expected q-coin, c-coin, leader-coin, savss or ba"
        ))),
    }
}

fn run_savss(s: &Settings, n: usize, t: usize) -> Result<Output, Failure> {
    let params = SavssParams::new(n, t, s.parse("p")?).map_err(|e| Failure::Usage(e.to_string()))?;
    let share = savss_share(params, 0, &DealerBehavior::Honest).map_err(|e| Failure::Other(e.to_string()))?;
    let dist = secret_distribution(&share).map_err(|e| Failure::Other(e.to_string()))?;
    let mut report = String::new();
    let mut passed = share.branches.iter().all(|b| b.share_complete());
    writeln!(report, "dealer support {}; verification sets use the simplified rule", share.support).unwrap();
    writeln!(report, "secret  probability").unwrap();
    let mut traces = String::new();
    for v in 0..params.p as u64 {
        let pr = dist.prob(v);
        passed &= (pr - 1.0 / params.p as f64).abs() <= 1e-9;
        writeln!(report, "{v:<7} {pr:.12}").unwrap();
        writeln!(traces, "{{\"secret\":{v},\"p\":{pr}}}").unwrap();
    }
    if s.get("audit") == Some("privacy") {
        writeln!(report, "subset  tv").unwrap();
        // Subsets of non-dealers up to one past the threshold.
        for mask in 0u32..1 << (n - 1) {
            let subset: BTreeSet<usize> = (1..n).filter(|i| mask >> (i - 1) & 1 == 1).collect();
            if subset.len() > t + 1 {
                continue;
            }
            let tv = savss_privacy_audit(&share, &subset).map_err(|e| Failure::Other(e.to_string()))?;
            if subset.len() <= t {
                passed &= tv <= 1e-12;
            }
            writeln!(report, "{:<7} {tv:.12}", format!("{subset:?}")).unwrap();
            writeln!(traces, "{{\"subset\":{:?},\"tv\":{tv}}}", subset.iter().collect::<Vec<_>>()).unwrap();
        }
    }
    Ok(Output { report, traces, passed })
}

fn cmd_check(s: &Settings) -> Result<Output, Failure> {
    let name = s.require("scenario").map_err(|_| Failure::Usage("missing --scenario".into()))?;
    let Some(sc) = scenarios::find(name) else {
        return Err(Failure::Usage(format!(
            "unknown scenario `{name}`; available: {}",
            scenarios::names().join(", ")
        )));
    };
    let r = sc.check(RunMode::Enumerate { cutoff: s.parse("cutoff")?, budget: s.parse("branch-budget")? })?;
    let passed = r.passed(1e-9);
    let mut report = String::new();
    writeln!(report, "scenario {} ({} vs classical simulation)", sc.name, r.adversary).unwrap();
    writeln!(report, "traces {}  tv {:.3e}  max state distance {:.3e}", r.rows.len(), r.tv, r.max_state_distance).unwrap();
    writeln!(report, "{}", if passed { "PASS" } else { "FAIL" }).unwrap();
    writeln!(
        report,
        "row scenario={} tv={:e} state_distance={:e} traces={} passed={passed}",
        sc.name,
        r.tv,
        r.max_state_distance,
        r.rows.len()
    )
    .unwrap();
    let mut traces = String::new();
    for row in &r.rows {
        writeln!(
            traces,
            "{{\"trace\":{:?},\"p_quantum\":{},\"p_classical\":{},\"state_distance\":{}}}",
            row.trace.render(),
            row.p_quantum,
            row.p_classical,
            row.state_distance
        )
        .unwrap();
    }
    Ok(Output { report, traces, passed })
}

fn cmd_props(s: &Settings) -> Result<Output, Failure> {
    let seed: u64 = s.parse("seed")?;
    let instances: usize = s.parse("instances")?;
    let mut report = String::new();
    if instances == 0 {
        eprintln!("warning: 0 instances requested; the suites pass vacuously");
    }
    let c = commutation_suite(seed, instances).map_err(|e| Failure::Other(e.to_string()))?;
    let l = transcript_suite(seed, instances, 4).map_err(|e| Failure::Other(e.to_string()))?;
    let commute_ok = c.passed(1e-9);
    let transcript_ok = l.product_runs == l.runs && l.bell_control_rank >= 2;
    writeln!(report, "suite        instances  max-deviation  min-fidelity  result").unwrap();
    writeln!(
        report,
        "commutation  {:<10} {:<14.3e} {:<13.12} {}",
        c.instances,
        c.max_probability_deviation,
        c.min_fidelity,
        if commute_ok { "PASS" } else { "FAIL" }
    )
    .unwrap();
    writeln!(
        report,
        "transcript   {:<10} product {}/{}  control rank {}  {}",
        l.runs,
        l.product_runs,
        l.runs,
        l.bell_control_rank,
        if transcript_ok { "PASS" } else { "FAIL" }
    )
    .unwrap();
    let row = serde_json::to_string(&c).expect("serializable");
    writeln!(report, "row {row}").unwrap();
    Ok(Output { report, traces: format!("{row}\n"), passed: commute_ok && transcript_ok })
}
