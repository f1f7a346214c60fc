//! The verification suite behind `fie verify` and the acceptance target.

use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adversary::{
    adaptive_max_load, audit, BurstinessBound, audit_exhaustive, constant_at_node, two_phase, InjectionTrace, RandomCompliant,
    Silent,
};
use crate::analysis::oracle::{brute_force_exits, brute_force_k_load, brute_force_plateaus, verify_activation_set};
use crate::analysis::{
    downhill_metrics, exit_landing, find_plateaus, k_load, ActivationPaths, Capacity, Conservation,
    DownhillSequenceLog, ExitForwards, ForwardLose, InvariantI, MaxLoadGrowth,
};
use crate::engine::{Boundary, Checker, Configuration, Execution, Verdict};
use crate::policies::{activation_paths_with_priority, Fie, Greedy, LocalDownhill, LocalFie, PathKind, Policy, STANDARD_PRIORITY};
use crate::topology::{NodeId, TreeNetwork};
use crate::{Bound, Rational};

/// Flat paths first, downhill-to-sink last.
pub const INVERTED_PRIORITY: [PathKind; 3] = [PathKind::Flat, PathKind::DownhillToEmpty, PathKind::DownhillToSink];

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "fie-upper-bound"),
    (2, "existential-lower-bound"),
    (3, "local-fie-buildup"),
    (4, "downhill-quadratic"),
    (5, "downhill-greedy-separation"),
    (6, "checker-soundness"),
    (7, "plateau-oracle"),
    (8, "activation-maximality"),
    (9, "auditor-equivalence"),
];

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    /// Criterion number or a substring of its name.
    pub filter: Option<String>,
    /// Line length for the LOCAL-DOWNHILL criterion.
    pub downhill_nodes: usize,
    /// Class order used by FIE in the sweeps.
    pub fie_priority: [PathKind; 3],
    /// Seeded patterns per sweep setting.
    pub seeds: u64,
    /// Rounds per sweep run.
    pub sweep_rounds: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            filter: None,
            downhill_nodes: 35,
            fie_priority: STANDARD_PRIORITY,
            seeds: 50,
            sweep_rounds: 10_000,
        }
    }
}

impl SuiteOptions {
    pub fn selects(&self, id: u8, name: &str) -> bool {
        match &self.filter {
            None => true,
            Some(f) => f.split(',').map(str::trim).any(|f| f == id.to_string() || name.contains(f)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Inconclusive => "INCONCLUSIVE",
        })
    }
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub status: Status,
    pub expected: String,
    pub observed: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {} {}: expected {}; observed {} ({:.2}s)",
            self.status,
            self.id,
            self.name,
            self.expected,
            self.observed,
            self.elapsed.as_secs_f64()
        )
    }
}

/// 0 when every report passed, 2 otherwise.
pub fn exit_code(reports: &[CriterionReport]) -> u8 {
    if reports.iter().all(|r| r.status == Status::Pass) {
        0
    } else {
        2
    }
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Passes a checker's verdicts through as notes, keeping its first failure,
/// so a run continues to the end and other measurements stay complete.
struct Tally {
    inner: Box<dyn Checker>,
    first_failure: Arc<Mutex<Option<String>>>,
}

impl Tally {
    fn wrap(inner: Box<dyn Checker>) -> (Box<dyn Checker>, Arc<Mutex<Option<String>>>) {
        let slot = Arc::new(Mutex::new(None));
        let tally = Tally {
            inner,
            first_failure: Arc::clone(&slot),
        };
        (Box::new(tally), slot)
    }
}

impl Checker for Tally {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        if let Verdict::Fail(d) = self.inner.observe(b) {
            let mut slot = self.first_failure.lock().expect("tally lock");
            if slot.is_none() {
                *slot = Some(format!("round {} ministep {}: {d}", b.round, b.ministep));
            }
        }
        Verdict::Pass
    }
}

/// Checkers attached to every FIE run of the sweeps.
struct Watch {
    slots: Vec<(&'static str, Arc<Mutex<Option<String>>>)>,
}

impl Watch {
    fn attach(ex: &mut Execution, checkers: Vec<(&'static str, Box<dyn Checker>)>) -> Self {
        let slots = checkers
            .into_iter()
            .map(|(name, c)| {
                let (wrapped, slot) = Tally::wrap(c);
                ex.attach(wrapped);
                (name, slot)
            })
            .collect();
        Watch { slots }
    }

    fn failures(&self) -> Vec<String> {
        self.slots
            .iter()
            .filter_map(|(name, slot)| {
                let slot = slot.lock().expect("tally lock");
                slot.as_ref().map(|d| format!("{name}: {d}"))
            })
            .collect()
    }
}

fn fie_invariant_checkers() -> Vec<(&'static str, Box<dyn Checker>)> {
    vec![
        ("invariant-i", Box::<InvariantI>::default()),
        ("forward-lose", Box::<ForwardLose>::default()),
        ("exit-forwards", Box::<ExitForwards>::default()),
    ]
}

#[derive(Debug, Default, Clone)]
struct SweepOutcome {
    runs: usize,
    compliant: usize,
    /// Runs whose peak reached exactly `σ + 2c`.
    tight: usize,
    exceeded: Vec<String>,
    audit_failures: Vec<String>,
    checker_failures: Vec<String>,
    errors: Vec<String>,
}

fn int_bound(rho: u64, sigma: u64) -> Bound {
    Bound::new(Rational::from_integer(rho as i64), Rational::from_integer(sigma as i64)).expect("non-negative")
}

fn fie_sweep(opts: &SuiteOptions) -> SweepOutcome {
    let mut out = SweepOutcome::default();
    let topologies: [(&str, usize); 3] = [("line", 10), ("line", 50), ("tree", 50)];
    for (kind, n) in topologies {
        for c in 1..=3u32 {
            for sigma in [0u64, 1, 5] {
                for seed in 0..opts.seeds {
                    let label = format!("{kind} n={n} c={c} σ={sigma} seed={seed}");
                    let mix = seed ^ (u64::from(c) << 32) ^ (sigma << 40) ^ ((n as u64) << 48);
                    let net = if kind == "line" {
                        TreeNetwork::line(n, c)
                    } else {
                        TreeNetwork::random(n, c, &mut ChaCha8Rng::seed_from_u64(mix))
                    }
                    .expect("valid topology");
                    let bound = int_bound(u64::from(c), sigma);
                    let pattern = RandomCompliant::new(bound, mix);
                    let mut ex = Execution::new(
                        net.clone(),
                        Box::new(pattern),
                        Box::new(Fie::with_priority(opts.fie_priority)),
                    );
                    let watch = Watch::attach(&mut ex, fie_invariant_checkers());
                    out.runs += 1;
                    if let Err(e) = ex.run(opts.sweep_rounds) {
                        out.errors.push(format!("{label}: {e}"));
                        continue;
                    }
                    let limit = sigma as usize + 2 * c as usize;
                    let peak = ex.summary().global_peak;
                    if peak > limit {
                        out.exceeded.push(format!("{label}: peak {peak} > {limit}"));
                    } else if peak == limit {
                        out.tight += 1;
                    }
                    let exact = BurstinessBound::<i64>::new(i64::from(c), sigma as i64).expect("non-negative");
                    match audit(ex.injections(), &net, &exact) {
                        Ok(v) if v.is_compliant() => out.compliant += 1,
                        Ok(v) => out.audit_failures.push(format!("{label}: {v}")),
                        Err(e) => out.audit_failures.push(format!("{label}: {e}")),
                    }
                    out.checker_failures
                        .extend(watch.failures().into_iter().map(|f| format!("{label}: {f}")));
                }
            }
        }
    }
    out
}

#[derive(Debug, Default, Clone)]
struct AdaptiveOutcome {
    runs: usize,
    reached: usize,
    compliant: usize,
    latest_burst: u64,
    failures: Vec<String>,
    checker_failures: Vec<String>,
}

fn adaptive_sweep(opts: &SuiteOptions) -> AdaptiveOutcome {
    let mut out = AdaptiveOutcome::default();
    for fie in [true, false] {
        for c in 1..=3u32 {
            for sigma in 0..=4u32 {
                let label = format!("{} c={c} σ={sigma}", if fie { "fie" } else { "greedy" });
                let net = TreeNetwork::line(10, c).expect("valid line");
                let pattern = adaptive_max_load(c, sigma).expect("valid pattern");
                let policy: Box<dyn Policy> = if fie {
                    Box::new(Fie::with_priority(opts.fie_priority))
                } else {
                    Box::new(Greedy)
                };
                let mut ex = Execution::new(net.clone(), Box::new(pattern), policy);
                let mut checkers: Vec<(&'static str, Box<dyn Checker>)> =
                    vec![("conservation", Box::new(Conservation)), ("capacity", Box::new(Capacity))];
                if fie {
                    checkers.extend(fie_invariant_checkers());
                    checkers.push(("max-load-growth", Box::<MaxLoadGrowth>::default()));
                }
                let watch = Watch::attach(&mut ex, checkers);
                out.runs += 1;
                if let Err(e) = ex.run(1000) {
                    out.failures.push(format!("{label}: {e}"));
                    continue;
                }
                let target = (sigma + 2 * c) as usize;
                let peak = ex.summary().global_peak;
                if peak >= target {
                    out.reached += 1;
                } else {
                    out.failures.push(format!("{label}: peak {peak} < {target}"));
                }
                let Some(burst) = ex.injections().rounds().rposition(|r| !r.is_empty()) else {
                    out.failures.push(format!("{label}: nothing injected"));
                    continue;
                };
                out.latest_burst = out.latest_burst.max(burst as u64 + 1);
                let through_burst = ex.injections().truncated(burst as u64 + 1);
                match audit(&through_burst, &net, &int_bound(u64::from(c), u64::from(sigma))) {
                    Ok(v) if v.is_compliant() => out.compliant += 1,
                    Ok(v) => out.failures.push(format!("{label}: {v}")),
                    Err(e) => out.failures.push(format!("{label}: {e}")),
                }
                let failures = watch.failures();
                out.checker_failures
                    .extend(failures.into_iter().map(|f| format!("{label}: {f}")));
            }
        }
    }
    out
}

fn first_few(items: &[String]) -> String {
    let shown: Vec<&str> = items.iter().take(3).map(String::as_str).collect();
    let more = items.len().saturating_sub(3);
    if more > 0 {
        format!("{} (+{more} more)", shown.join("; "))
    } else {
        shown.join("; ")
    }
}

fn criterion_fie_upper_bound(sweep: &SweepOutcome) -> (Status, String, String) {
    let ok = sweep.exceeded.is_empty()
        && sweep.audit_failures.is_empty()
        && sweep.errors.is_empty()
        && sweep.compliant == sweep.runs;
    let mut observed = format!(
        "{} runs, {} audited compliant, {} reached σ+2c exactly, {} exceeded",
        sweep.runs,
        sweep.compliant,
        sweep.tight,
        sweep.exceeded.len()
    );
    for list in [&sweep.exceeded, &sweep.audit_failures, &sweep.errors] {
        if !list.is_empty() {
            observed.push_str(&format!("; {}", first_few(list)));
        }
    }
    (status(ok), "every buffer <= σ+2c at every ministep, every pattern compliant".into(), observed)
}

fn criterion_lower_bound(out: &AdaptiveOutcome) -> (Status, String, String) {
    let ok = out.failures.is_empty() && out.reached == out.runs && out.compliant == out.runs;
    let mut observed = format!(
        "{}/{} runs reached σ+2c, {} compliant through the burst, latest burst round {}",
        out.reached, out.runs, out.compliant, out.latest_burst
    );
    if !out.failures.is_empty() {
        observed.push_str(&format!("; {}", first_few(&out.failures)));
    }
    (status(ok), "some buffer >= σ+2c within 1000 rounds, compliant trace".into(), observed)
}

/// Loads right after the injections of each round, `S_0` first.
fn states_after_injection(mut ex: Execution, rounds: u64) -> crate::error::Result<DownhillSequenceLog> {
    ex = ex.with_recording(true);
    let trace = ex.run(rounds)?;
    DownhillSequenceLog::from_trace(&trace)
}

fn criterion_local_fie() -> (Status, String, String) {
    let mut observed = Vec::new();
    let mut ok = true;
    for r in [1u64, 2, 999, 1000] {
        let net = TreeNetwork::line(5, 1).expect("valid line");
        let ex = Execution::new(net, Box::new(constant_at_node(NodeId(0), 1).expect("valid")), Box::new(LocalFie));
        match states_after_injection(ex, r) {
            Ok(log) => {
                let load = log.states[r as usize][0];
                let want = r.div_ceil(2) as usize;
                ok &= load == want;
                observed.push(format!("R={r}: {load}"));
            }
            Err(e) => {
                ok = false;
                observed.push(format!("R={r}: {e}"));
            }
        }
    }
    (status(ok), "load(v1) after round R's injections = ⌈R/2⌉ (1, 1, 500, 500)".into(), observed.join(", "))
}

fn criterion_downhill(opts: &SuiteOptions) -> (Status, String, String) {
    let expected = "f(k)=k²-k+1 for k<=30, Δ_(k+1)=Δ_k+2, tail/init identities, width(init)<=load(v1)+1".to_string();
    let n = opts.downhill_nodes;
    let net = match TreeNetwork::line(n, 1) {
        Ok(net) => net,
        Err(e) => return (Status::Fail, expected, e.to_string()),
    };
    let ex = Execution::new(net, Box::new(constant_at_node(NodeId(0), 1).expect("valid")), Box::new(LocalDownhill));
    let log = match states_after_injection(ex, 871) {
        Ok(log) => log,
        Err(e) => return (Status::Fail, expected, e.to_string()),
    };
    let m = downhill_metrics(&log);
    if let Some(why) = &m.inconclusive {
        return (Status::Inconclusive, expected, format!("n={n}: {why}"));
    }
    let failed: Vec<String> = m
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{}: {}", c.name, c.detail))
        .collect();
    let ok = failed.is_empty() && m.max_k() >= 30;
    let observed = if failed.is_empty() {
        format!(
            "k up to {} (f({}) = {}), Δ_{} = {}, max width {}",
            m.max_k(),
            m.max_k(),
            m.f[m.max_k()],
            m.max_k(),
            m.delta.last().copied().unwrap_or(0),
            m.max_width
        )
    } else {
        failed.join("; ")
    };
    (status(ok), expected, observed)
}

fn criterion_separation() -> (Status, String, String) {
    let mut ok = true;
    let mut observed = Vec::new();
    for n in [8usize, 20] {
        let run = |policy: Box<dyn Policy>| -> crate::error::Result<Vec<usize>> {
            let net = TreeNetwork::line(n, 1)?;
            let mut ex = Execution::new(net, Box::new(two_phase(n)?), policy);
            ex.run(n as u64)?;
            Ok(ex.summary().peak_loads)
        };
        match (run(Box::new(Greedy)), run(Box::new(LocalFie)), run(Box::new(LocalDownhill))) {
            (Ok(g), Ok(f), Ok(d)) => {
                let greedy = g[n - 2];
                let fie = f.iter().copied().max().unwrap_or(0);
                let down = d.iter().copied().max().unwrap_or(0);
                ok &= greedy == n / 2 && fie == 1 && down == 1;
                observed.push(format!("n={n}: greedy v{}={greedy}, local-fie {fie}, local-downhill {down}", n - 1));
            }
            (g, f, d) => {
                ok = false;
                for e in [g.err(), f.err(), d.err()].into_iter().flatten() {
                    observed.push(format!("n={n}: {e}"));
                }
            }
        }
    }
    (
        status(ok),
        "greedy peak at v_(n-1) = n/2; local-fie and local-downhill peaks = 1".into(),
        observed.join(", "),
    )
}

/// Runs FIE with the given class order on small hand-built and adaptive
/// scenarios and counts runs in which some invariant checker fails.
fn mutation_detections(priority: [PathKind; 3]) -> (usize, usize, Vec<String>) {
    let mut runs = 0;
    let mut detected = 0;
    let mut examples = Vec::new();
    let mut scenarios: Vec<(String, Execution)> = Vec::new();
    let net = TreeNetwork::line(6, 1).expect("valid line");
    let cfg = Configuration::from_loads(&net, &[2, 1, 0, 1, 0, 0]).expect("valid loads");
    scenarios.push((
        "hill behind a flat".into(),
        Execution::from_configuration(net, Box::new(Silent), Box::new(Fie::with_priority(priority)), cfg),
    ));
    for c in 1..=3u32 {
        for sigma in 0..=4u32 {
            let net = TreeNetwork::line(10, c).expect("valid line");
            let pattern = adaptive_max_load(c, sigma).expect("valid pattern");
            scenarios.push((
                format!("adaptive c={c} σ={sigma}"),
                Execution::new(net, Box::new(pattern), Box::new(Fie::with_priority(priority))),
            ));
        }
    }
    for (label, mut ex) in scenarios {
        let watch = Watch::attach(&mut ex, fie_invariant_checkers());
        runs += 1;
        let result = ex.run(200);
        let mut failures = watch.failures();
        if let Err(e) = result {
            failures.push(e.to_string());
        }
        if !failures.is_empty() {
            detected += 1;
            if examples.len() < 2 {
                examples.push(format!("{label}: {}", failures[0]));
            }
        }
    }
    (runs, detected, examples)
}

fn criterion_checkers(sweep: &SweepOutcome, adaptive: &AdaptiveOutcome) -> (Status, String, String) {
    let clean = sweep.checker_failures.is_empty() && adaptive.checker_failures.is_empty();
    let (runs, detected, examples) = mutation_detections(INVERTED_PRIORITY);
    let ok = clean && detected > 0 && sweep.errors.is_empty();
    let mut observed = format!(
        "{} sweep runs and {} adaptive runs with {} checker failures; inverted priority tripped a checker in {detected}/{runs} runs",
        sweep.runs,
        adaptive.runs,
        sweep.checker_failures.len() + adaptive.checker_failures.len()
    );
    let failures: Vec<String> = sweep
        .checker_failures
        .iter()
        .chain(&adaptive.checker_failures)
        .cloned()
        .collect();
    if !failures.is_empty() {
        observed.push_str(&format!("; {}", first_few(&failures)));
    }
    if let Some(e) = examples.first() {
        observed.push_str(&format!("; e.g. {e}"));
    }
    (
        status(ok),
        "invariant-i, forward-lose, exit-forwards pass on every FIE run; mutant detected".into(),
        observed,
    )
}

fn random_loads(rng: &mut ChaCha8Rng, net: &TreeNetwork, max: usize) -> Vec<usize> {
    net.nodes()
        .map(|v| if net.is_sink(v) { 0 } else { rng.gen_range(0..=max) })
        .collect()
}

fn criterion_plateau_oracle() -> (Status, String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9_1a7e);
    let mut mismatches = Vec::new();
    let mut plateaus = 0usize;
    for case in 0..200 {
        let n = rng.gen_range(2..=10);
        let c = rng.gen_range(1..=2u32);
        let net = TreeNetwork::random(n, c, &mut rng).expect("valid tree");
        let loads = random_loads(&mut rng, &net, 3 * c as usize);
        for h in 2..=4 {
            let fast = match find_plateaus(&net, &loads, h) {
                Ok(p) => p,
                Err(e) => {
                    mismatches.push(format!("case {case}: {e}"));
                    continue;
                }
            };
            let slow = brute_force_plateaus(&net, &loads, h);
            let fast_sets: Vec<Vec<NodeId>> = fast.iter().map(|p| p.nodes.clone()).collect();
            if fast_sets != slow {
                mismatches.push(format!("case {case} h={h}: {fast_sets:?} vs {slow:?}"));
                continue;
            }
            for p in &fast {
                plateaus += 1;
                for k in 1..=4 {
                    let (a, b) = (k_load(&loads, &p.nodes, k, c), brute_force_k_load(&loads, &p.nodes, k, c));
                    if a != b {
                        mismatches.push(format!("case {case} h={h} k={k}: k-load {a} vs {b}"));
                    }
                }
                let exits = brute_force_exits(&net, &loads, &p.nodes, h);
                match exit_landing(p, &net, &loads) {
                    Ok(pair) if exits == [pair] => {}
                    other => mismatches.push(format!("case {case} h={h}: exit {other:?} vs {exits:?}")),
                }
            }
        }
    }
    let observed = if mismatches.is_empty() {
        format!("200 configurations, {plateaus} plateaus, no mismatch")
    } else {
        format!("{} mismatches: {}", mismatches.len(), first_few(&mismatches))
    };
    (
        status(mismatches.is_empty()),
        "find_plateaus, k_load, exit_landing equal brute force".into(),
        observed,
    )
}

fn criterion_activation(opts: &SuiteOptions) -> (Status, String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xac7);
    let mut problems = Vec::new();
    let mut paths = 0usize;
    for case in 0..200 {
        let n = rng.gen_range(2..=12);
        let c = rng.gen_range(1..=3u32);
        let net = TreeNetwork::random(n, c, &mut rng).expect("valid tree");
        let loads = random_loads(&mut rng, &net, 3 * c as usize);
        let heights = Configuration::from_loads(&net, &loads).expect("valid loads").heights();
        let set = activation_paths_with_priority(&net, &heights, &opts.fie_priority);
        paths += set.paths.len();
        if let Err(e) = verify_activation_set(&net, &heights, &set, &STANDARD_PRIORITY) {
            problems.push(format!("configuration {case}: {e}"));
        }
    }

    // ministeps of live executions, checked by the runtime checker
    let mut ministeps = 0u64;
    let mut seed = 0u64;
    while ministeps < 200 {
        let n = rng.gen_range(2..=12);
        let c = rng.gen_range(1..=3u32);
        let net = TreeNetwork::random(n, c, &mut rng).expect("valid tree");
        let loads = random_loads(&mut rng, &net, 3 * c as usize);
        let cfg = Configuration::from_loads(&net, &loads).expect("valid loads");
        let bound = int_bound(u64::from(c), rng.gen_range(0..=3));
        let mut ex = Execution::from_configuration(
            net,
            Box::new(RandomCompliant::new(bound, seed)),
            Box::new(Fie::with_priority(opts.fie_priority)),
            cfg,
        );
        let watch = Watch::attach(&mut ex, vec![("activation-paths", Box::new(ActivationPaths::new(STANDARD_PRIORITY, 12)))]);
        if let Err(e) = ex.run(5) {
            problems.push(format!("execution {seed}: {e}"));
        }
        problems.extend(watch.failures().into_iter().map(|f| format!("execution {seed}: {f}")));
        ministeps += 5 * u64::from(c);
        seed += 1;
    }
    let observed = if problems.is_empty() {
        format!("200 configurations ({paths} paths) and {ministeps} executed ministeps, no addable path")
    } else {
        format!("{} problems: {}", problems.len(), first_few(&problems))
    };
    (
        status(problems.is_empty()),
        "no addable path of any type, classes exhausted in priority order".into(),
        observed,
    )
}

fn criterion_auditor() -> (Status, String, String) {
    let bounds = [(1, 2, 0, 1), (1, 1, 1, 1), (3, 2, 5, 2), (2, 3, 1, 3), (2, 1, 3, 1)]
        .map(|(rn, rd, sn, sd)| Bound::new(Rational::new(rn, rd), Rational::new(sn, sd)).expect("non-negative"));
    let mut rng = ChaCha8Rng::seed_from_u64(0xa0d17);
    let mut disagreements = Vec::new();
    let (mut compliant, mut violations) = (0, 0);
    for case in 0..100 {
        let n = rng.gen_range(2..=8);
        let net = TreeNetwork::random(n, 1, &mut rng).expect("valid tree");
        let density: f64 = rng.gen_range(0.05..1.5);
        let rounds: Vec<Vec<NodeId>> = (0..200)
            .map(|_| {
                let mut round = Vec::new();
                let mut budget = density;
                while budget > 0.0 && rng.gen_bool(budget.min(1.0)) {
                    round.push(NodeId(rng.gen_range(0..n)));
                    budget -= 1.0;
                }
                round
            })
            .collect();
        let trace = InjectionTrace::from_rounds(rounds);
        for bound in &bounds {
            let fast = audit(&trace, &net, bound);
            let slow = audit_exhaustive(&trace, &net, bound);
            match (&fast, &slow) {
                (Ok(a), Ok(b)) if a == b => {
                    if a.is_compliant() {
                        compliant += 1;
                    } else {
                        violations += 1;
                    }
                }
                _ => disagreements.push(format!("trace {case} bound {bound}: {fast:?} vs {slow:?}")),
            }
        }
    }
    let observed = if disagreements.is_empty() {
        format!("500 audits agree ({compliant} compliant, {violations} with the same first violation)")
    } else {
        format!("{} disagreements: {}", disagreements.len(), first_few(&disagreements))
    };
    (
        status(disagreements.is_empty()),
        "incremental and exhaustive auditors give identical verdicts".into(),
        observed,
    )
}

/// Runs the selected criteria in order.
pub fn run_suite(opts: &SuiteOptions) -> Vec<CriterionReport> {
    let mut sweep: Option<SweepOutcome> = None;
    let mut adaptive: Option<AdaptiveOutcome> = None;
    let mut reports = Vec::new();
    for (id, name) in CRITERIA {
        if !opts.selects(id, name) {
            continue;
        }
        let started = Instant::now();
        let (status, expected, observed) = match id {
            1 => criterion_fie_upper_bound(sweep.get_or_insert_with(|| fie_sweep(opts))),
            2 => criterion_lower_bound(adaptive.get_or_insert_with(|| adaptive_sweep(opts))),
            3 => criterion_local_fie(),
            4 => criterion_downhill(opts),
            5 => criterion_separation(),
            6 => {
                let s = sweep.get_or_insert_with(|| fie_sweep(opts)).clone();
                let a = adaptive.get_or_insert_with(|| adaptive_sweep(opts));
                criterion_checkers(&s, a)
            }
            7 => criterion_plateau_oracle(),
            8 => criterion_activation(opts),
            _ => criterion_auditor(),
        };
        reports.push(CriterionReport {
            id,
            name,
            status,
            expected,
            observed,
            elapsed: started.elapsed(),
        });
    }
    reports
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_matches_ids_and_names() {
        let opts = SuiteOptions {
            filter: Some("plateau".into()),
            ..SuiteOptions::default()
        };
        assert!(opts.selects(7, "plateau-oracle"));
        assert!(!opts.selects(1, "fie-upper-bound"));
        let opts = SuiteOptions {
            filter: Some("3,9".into()),
            ..SuiteOptions::default()
        };
        assert!(opts.selects(3, "local-fie-buildup"));
        assert!(opts.selects(9, "auditor-equivalence"));
        assert!(!opts.selects(4, "downhill-quadratic"));
    }

    #[test]
    fn small_line_makes_downhill_inconclusive() {
        let opts = SuiteOptions {
            filter: Some("4".into()),
            downhill_nodes: 10,
            ..SuiteOptions::default()
        };
        let reports = run_suite(&opts);
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].status, Status::Inconclusive);
        assert_eq!(exit_code(&reports), 2);
    }

    #[test]
    fn inverted_priority_is_detected() {
        let (_, detected, _) = mutation_detections(INVERTED_PRIORITY);
        assert!(detected > 0);
        let (_, detected, _) = mutation_detections(STANDARD_PRIORITY);
        assert_eq!(detected, 0);
    }
}
