use std::sync::{Arc, Mutex};

use fie_core::adversary::{adaptive_max_load, audit, constant_at_node, RandomCompliant, RandomStyle, Silent};
use fie_core::analysis::{find_plateaus, k_load, CheckerKind};
use fie_core::engine::{Boundary, Checker, Configuration, Event, Verdict};
use fie_core::{Bound, BurstinessBound, Execution, NodeId, PolicyKind, Rational, TreeNetwork};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn network(n: usize, c: u32, seed: u64, line: bool) -> TreeNetwork {
    if line {
        TreeNetwork::line(n, c).unwrap()
    } else {
        TreeNetwork::random(n, c, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }
}

fn attach_all(ex: &mut Execution, kinds: &[CheckerKind], c: u32, sigma: u64) {
    for k in kinds {
        ex.attach(k.build(c, Some(sigma)).unwrap());
    }
}

const GENERIC: [CheckerKind; 3] = [CheckerKind::Conservation, CheckerKind::Capacity, CheckerKind::LevelMonotone];

fn policy_strategy() -> impl Strategy<Value = PolicyKind> {
    prop::sample::select(PolicyKind::ALL.to_vec())
}

fn style_strategy() -> impl Strategy<Value = RandomStyle> {
    prop::sample::select(vec![RandomStyle::Uniform, RandomStyle::Bursty, RandomStyle::Hotspot])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn every_policy_conserves_packets_and_respects_capacity(
        n in 1usize..14,
        c in 1u32..4,
        sigma in 0i64..4,
        seed in any::<u64>(),
        line in any::<bool>(),
        policy in policy_strategy(),
        style in style_strategy(),
    ) {
        let net = network(n, c, seed, line);
        let bound = Bound::new(Rational::from_integer(i64::from(c)), Rational::from_integer(sigma)).unwrap();
        let pattern = RandomCompliant::with_style(bound, style, seed);
        let mut ex = Execution::new(net, Box::new(pattern), policy.build());
        attach_all(&mut ex, &GENERIC, c, sigma as u64);
        prop_assert!(ex.run(150).is_ok(), "{:?}", ex.events().last());
    }

    #[test]
    fn fie_invariants_hold_under_compliant_injection(
        n in 2usize..13,
        c in 1u32..4,
        sigma in 0i64..4,
        seed in any::<u64>(),
        line in any::<bool>(),
        style in style_strategy(),
    ) {
        let net = network(n, c, seed, line);
        let bound = Bound::new(Rational::from_integer(i64::from(c)), Rational::from_integer(sigma)).unwrap();
        let pattern = RandomCompliant::with_style(bound, style, seed);
        let mut ex = Execution::new(net, Box::new(pattern), PolicyKind::Fie.build());
        let kinds: Vec<CheckerKind> = CheckerKind::ALL
            .into_iter()
            .filter(|k| *k != CheckerKind::MaxLoadGrowth)
            .collect();
        attach_all(&mut ex, &kinds, c, sigma as u64);
        let run = ex.run(200);
        prop_assert!(run.is_ok(), "{:?}", run.err());
        prop_assert!(ex.summary().global_peak <= sigma as usize + 2 * c as usize);
    }

    #[test]
    fn random_compliant_patterns_audit_compliant(
        n in 1usize..20,
        rho_num in 1i64..6,
        rho_den in 1i64..6,
        sigma_num in 0i64..9,
        sigma_den in 1i64..4,
        seed in any::<u64>(),
        style in style_strategy(),
    ) {
        let net = network(n, 1, seed, false);
        let bound = Bound::new(Rational::new(rho_num, rho_den), Rational::new(sigma_num, sigma_den)).unwrap();
        let pattern = RandomCompliant::with_style(bound, style, seed);
        let mut ex = Execution::new(net.clone(), Box::new(pattern), PolicyKind::Greedy.build());
        ex.run(120).unwrap();
        prop_assert!(audit(ex.injections(), &net, &bound).unwrap().is_compliant());
    }

    #[test]
    fn adaptive_pattern_forces_growth_against_every_policy(
        c in 1u32..4,
        sigma in 0u32..5,
        policy in policy_strategy(),
    ) {
        let net = TreeNetwork::line(10, c).unwrap();
        let mut ex = Execution::new(net.clone(), Box::new(adaptive_max_load(c, sigma).unwrap()), policy.build());
        ex.attach(CheckerKind::MaxLoadGrowth.build(c, None).unwrap());
        let run = ex.run(100);
        prop_assert!(run.is_ok(), "{:?}", run.err());
        prop_assert!(ex.summary().global_peak >= (sigma + 2 * c) as usize);
        let bound = BurstinessBound::<i64>::new(i64::from(c), i64::from(sigma)).unwrap();
        prop_assert!(audit(ex.injections(), &net, &bound).unwrap().is_compliant());
    }

    #[test]
    fn plateaus_are_disjoint_and_nested(
        n in 1usize..16,
        c in 1u32..3,
        seed in any::<u64>(),
        raw in prop::collection::vec(0usize..10, 16),
    ) {
        let net = network(n, c, seed, false);
        let loads: Vec<usize> = (0..n)
            .map(|i| if net.is_sink(NodeId(i)) { 0 } else { raw[i] % (3 * c as usize + 1) })
            .collect();
        for h in 2..=4 {
            let lower = find_plateaus(&net, &loads, h).unwrap();
            let mut seen = vec![false; n];
            for p in &lower {
                for v in &p.nodes {
                    prop_assert!(!seen[v.0], "node {} in two {}-plateaus", v, h);
                    seen[v.0] = true;
                }
            }
            for q in find_plateaus(&net, &loads, h + 1).unwrap() {
                prop_assert_eq!(lower.iter().filter(|p| q.is_subset_of(p)).count(), 1);
            }
        }
    }

    #[test]
    fn k_load_is_additive_and_non_increasing(
        loads in prop::collection::vec(0usize..12, 1..12),
        split in any::<prop::sample::Index>(),
        c in 1u32..4,
    ) {
        let nodes: Vec<NodeId> = (0..loads.len()).map(NodeId).collect();
        let cut = split.index(nodes.len() + 1);
        for k in 1..6 {
            let whole = k_load(&loads, &nodes, k, c);
            prop_assert_eq!(whole, k_load(&loads, &nodes[..cut], k, c) + k_load(&loads, &nodes[cut..], k, c));
            prop_assert!(k_load(&loads, &nodes, k + 1, c) <= whole);
        }
    }

    #[test]
    fn identical_runs_produce_identical_traces(
        n in 2usize..12,
        c in 1u32..3,
        seed in any::<u64>(),
        policy in policy_strategy(),
    ) {
        let run = || {
            let net = network(n, c, seed, false);
            let bound = Bound::new(Rational::from_integer(i64::from(c)), Rational::from_integer(2)).unwrap();
            let mut ex = Execution::new(net, Box::new(RandomCompliant::new(bound, seed)), policy.build())
                .with_recording(true);
            ex.run(60).unwrap().to_csv_string()
        };
        prop_assert_eq!(run(), run());
    }
}

/// Load of the first node after each round's injections.
struct FirstNodeAfterInjections(Arc<Mutex<Vec<usize>>>);

impl Checker for FirstNodeAfterInjections {
    fn name(&self) -> &str {
        "first-node"
    }

    fn observe(&mut self, b: &Boundary<'_>) -> Verdict {
        if let Event::ForwardingStart = b.event {
            self.0.lock().unwrap().push(b.loads[0]);
        }
        Verdict::Pass
    }
}

#[test]
fn local_fie_first_node_holds_half_the_rounds() {
    let seen = Arc::new(Mutex::new(Vec::new()));
    let net = TreeNetwork::line(5, 1).unwrap();
    let pattern = constant_at_node(NodeId(0), 1).unwrap();
    let mut ex = Execution::new(net, Box::new(pattern), PolicyKind::LocalFie.build())
        .with_checker(Box::new(FirstNodeAfterInjections(seen.clone())));
    ex.run(10_000).unwrap();
    let loads = seen.lock().unwrap();
    assert_eq!(loads.len(), 10_000);
    for (i, &l) in loads.iter().enumerate() {
        let r = i + 1;
        assert_eq!(l, r.div_ceil(2), "round {r}");
    }
}

#[test]
fn from_loads_round_trips_through_the_engine() {
    let net = TreeNetwork::line(7, 2).unwrap();
    let loads = [0, 5, 2, 0, 6, 1, 0];
    let cfg = Configuration::from_loads(&net, &loads).unwrap();
    let ex = Execution::from_configuration(
        net,
        Box::new(Silent),
        PolicyKind::Fie.build(),
        cfg,
    );
    assert_eq!(ex.configuration().loads(), loads);
}
