use fie_core::adversary::{adaptive_max_load, constant_at_node, two_phase, Silent};
use fie_core::analysis::{
    downhill::front, find_plateaus, k_load, pre_image, CheckerKind, DownhillSequenceLog, ForwardLose, InvariantI,
};
use fie_core::engine::Checker;
use fie_core::policies::PathKind;
use fie_core::verify::INVERTED_PRIORITY;
use fie_core::{Configuration, Error, Execution, Fie, NodeId, PolicyKind, TreeNetwork};

fn from_loads(loads: &[usize], c: u32, policy: PolicyKind) -> Execution {
    let net = TreeNetwork::line(loads.len(), c).unwrap();
    let cfg = Configuration::from_loads(&net, loads).unwrap();
    Execution::from_configuration(net, Box::new(Silent), policy.build(), cfg)
}

fn fie_invariants() -> Vec<Box<dyn Checker>> {
    [CheckerKind::InvariantI, CheckerKind::ForwardLose, CheckerKind::ExitForwards]
        .into_iter()
        .map(|k| k.build(1, None).unwrap())
        .collect()
}

#[test]
fn corrupted_state_breaks_invariant_i() {
    let (c, sigma) = (1u32, 1u32);
    let net = TreeNetwork::line(6, c).unwrap();
    let pattern = constant_at_node(NodeId(0), 1).unwrap();
    let mut ex = Execution::new(net, Box::new(pattern), PolicyKind::Fie.build())
        .with_checker(Box::<InvariantI>::default());
    ex.run(20).unwrap();
    ex.insert_untracked(NodeId(2), (c + sigma + 1) as usize).unwrap();
    match ex.probe() {
        Err(Error::CheckerViolation { checker, .. }) => assert_eq!(checker, "invariant-i"),
        other => panic!("expected an invariant-i failure, got {other:?}"),
    }
}

#[test]
fn two_hills_merge_over_a_filled_gap() {
    let loads = [3, 1, 1, 0, 2, 0];
    let net = TreeNetwork::line(loads.len(), 1).unwrap();
    let start = find_plateaus(&net, &loads, 2).unwrap();
    let nodes: Vec<Vec<NodeId>> = start.iter().map(|p| p.nodes.clone()).collect();
    assert_eq!(nodes, vec![vec![NodeId(0), NodeId(1), NodeId(2)], vec![NodeId(4)]]);

    let mut ex = from_loads(&loads, 1, PolicyKind::Fie).with_checker(Box::<ForwardLose>::default());
    ex.step_round().unwrap();
    let after = ex.configuration().loads();
    let end = find_plateaus(&net, &after, 2).unwrap();
    assert_eq!(end.len(), 1);
    assert_eq!(pre_image(&end[0], &start).len(), 2);
    assert!(ex.events().is_empty(), "{:?}", ex.events());
}

#[test]
fn three_plateaus_merge_and_lose_at_least_c() {
    let loads = [3, 0, 3, 0, 3, 0];
    let net = TreeNetwork::line(loads.len(), 1).unwrap();
    let start = find_plateaus(&net, &loads, 2).unwrap();
    assert_eq!(start.len(), 3);

    let mut ex = from_loads(&loads, 1, PolicyKind::Fie);
    for checker in fie_invariants() {
        ex.attach(checker);
    }
    ex.step_round().unwrap();
    let after = ex.configuration().loads();
    let end = find_plateaus(&net, &after, 2).unwrap();
    assert_eq!(end.len(), 1);
    let pre = pre_image(&end[0], &start);
    assert_eq!(pre.len(), 3);
    let union: Vec<NodeId> = pre.iter().flat_map(|p| p.nodes.iter().copied()).collect();
    let before = k_load(&loads, &union, 2, 1);
    let now = k_load(&after, &end[0].nodes, 2, 1);
    assert!(now < before, "2-load went from {before} to {now}");
}

#[test]
fn no_plateau_at_round_end_passes_vacuously() {
    let mut ex = from_loads(&[1, 0, 1, 0], 1, PolicyKind::Fie).with_checker(Box::<ForwardLose>::default());
    ex.run(3).unwrap();
    assert!(ex.events().is_empty());
}

#[test]
fn greedy_piles_up_under_two_phase_while_local_rules_stay_flat() {
    for n in [8usize, 20] {
        let run = |policy: PolicyKind| {
            let net = TreeNetwork::line(n, 1).unwrap();
            let mut ex = Execution::new(net, Box::new(two_phase(n).unwrap()), policy.build());
            ex.run(n as u64).unwrap();
            ex.summary()
        };
        assert_eq!(run(PolicyKind::Greedy).peak(NodeId(n - 2)), n / 2, "n={n}");
        assert_eq!(run(PolicyKind::LocalFie).global_peak, 1, "n={n}");
        assert_eq!(run(PolicyKind::LocalDownhill).global_peak, 1, "n={n}");
    }
}

#[test]
fn adaptive_adversary_reaches_sigma_plus_two_c() {
    for c in 1..=3u32 {
        for sigma in 0..=4u32 {
            for policy in [PolicyKind::Fie, PolicyKind::Greedy] {
                let net = TreeNetwork::line(10, c).unwrap();
                let mut ex = Execution::new(net, Box::new(adaptive_max_load(c, sigma).unwrap()), policy.build());
                if policy == PolicyKind::Fie {
                    for k in [CheckerKind::InvariantI, CheckerKind::ForwardLose, CheckerKind::ExitForwards] {
                        ex.attach(k.build(c, None).unwrap());
                    }
                }
                ex.run(1000).unwrap();
                assert!(
                    ex.summary().global_peak >= (sigma + 2 * c) as usize,
                    "{policy} c={c} σ={sigma}: peak {}",
                    ex.summary().global_peak
                );
            }
        }
    }
}

#[test]
fn inverted_priority_trips_invariant_i() {
    let net = TreeNetwork::line(6, 1).unwrap();
    let cfg = Configuration::from_loads(&net, &[2, 1, 0, 1, 0, 0]).unwrap();
    let mutant = Fie::with_priority(INVERTED_PRIORITY);
    assert_eq!(mutant.priority()[0], PathKind::Flat);
    let mut ex = Execution::from_configuration(
        net.clone(),
        Box::new(constant_at_node(NodeId(0), 1).unwrap()),
        Box::new(mutant),
        cfg.clone(),
    );
    for checker in fie_invariants() {
        ex.attach(checker);
    }
    assert!(matches!(ex.run(200), Err(Error::CheckerViolation { .. })));

    let mut ex = Execution::from_configuration(
        net,
        Box::new(constant_at_node(NodeId(0), 1).unwrap()),
        Box::new(Fie::default()),
        cfg,
    );
    for checker in fie_invariants() {
        ex.attach(checker);
    }
    ex.run(200).unwrap();
}

#[test]
fn local_downhill_first_states() {
    let net = TreeNetwork::line(12, 1).unwrap();
    let pattern = constant_at_node(NodeId(0), 1).unwrap();
    let mut ex = Execution::new(net, Box::new(pattern), PolicyKind::LocalDownhill.build()).with_recording(true);
    let trace = ex.run(20).unwrap();
    let log = DownhillSequenceLog::from_trace(&trace).unwrap();
    assert_eq!([1, 2, 3, 4].map(|k| log.f(k)), [Some(1), Some(3), Some(7), Some(13)]);
    let first_two = log.states.iter().find(|s| front(s) == Some(2)).unwrap();
    assert_eq!(first_two[..4], [2, 0, 1, 0]);
    assert!(first_two[4..].iter().all(|&l| l == 0));
}
