//! Brute-force reference enumerators for small instances.
//!
//! These deliberately share no code with the fast paths they check: levels
//! come from explicit packet positions and plateaus/paths from exhaustive
//! enumeration.

use crate::engine::Height;
use crate::policies::{ActivationPathSet, PathKind};
use crate::topology::{NodeId, TreeNetwork};

/// Levels of the packets held at a node with the given load.
fn levels(load: usize, capacity: u32) -> impl Iterator<Item = usize> {
    let c = capacity as usize;
    (1..=load).map(move |pos| pos.div_ceil(c))
}

fn holds_level(load: usize, capacity: u32, level: usize) -> bool {
    levels(load, capacity).any(|l| l == level)
}

fn max_level(load: usize, capacity: u32) -> usize {
    levels(load, capacity).max().unwrap_or(0)
}

fn connected(network: &TreeNetwork, set: &[NodeId]) -> bool {
    if set.is_empty() {
        return false;
    }
    let inside = |v: NodeId| set.contains(&v);
    // a vertex subset of a tree is connected iff it induces |S| - 1 edges
    let edges = set
        .iter()
        .filter(|&&v| network.parent(v).is_some_and(inside))
        .count();
    edges + 1 == set.len()
}

/// All maximal connected `h`-plateaus, each sorted, in order of their
/// smallest member. Exponential in the node count.
pub fn brute_force_plateaus(network: &TreeNetwork, loads: &[usize], h: usize) -> Vec<Vec<NodeId>> {
    let c = network.capacity();
    let candidates: Vec<NodeId> = network.nodes().filter(|&v| !network.is_sink(v)).collect();
    assert!(candidates.len() <= 20, "brute force is exponential");
    let qualifying: Vec<Vec<NodeId>> = (1u32..(1 << candidates.len()))
        .filter_map(|mask| {
            let set: Vec<NodeId> = candidates
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &v)| v)
                .collect();
            let ok = connected(network, &set)
                && set.iter().all(|v| holds_level(loads[v.0], c, h - 1))
                && set.iter().any(|v| holds_level(loads[v.0], c, h));
            ok.then_some(set)
        })
        .collect();
    let mut maximal: Vec<Vec<NodeId>> = qualifying
        .iter()
        .filter(|s| {
            !qualifying
                .iter()
                .any(|t| t.len() > s.len() && s.iter().all(|v| t.contains(v)))
        })
        .cloned()
        .collect();
    maximal.sort_by_key(|s| s[0]);
    maximal
}

/// Packets at level `k` or higher, counted position by position.
pub fn brute_force_k_load(loads: &[usize], nodes: &[NodeId], k: usize, capacity: u32) -> u64 {
    nodes
        .iter()
        .map(|v| levels(loads[v.0], capacity).filter(|&l| l >= k).count() as u64)
        .sum()
}

/// Members whose parent lies outside the set and is the sink or has
/// height at most `h - 2`, paired with that parent.
pub fn brute_force_exits(
    network: &TreeNetwork,
    loads: &[usize],
    nodes: &[NodeId],
    h: usize,
) -> Vec<(NodeId, NodeId)> {
    let c = network.capacity();
    nodes
        .iter()
        .filter_map(|&v| {
            let p = network.parent(v)?;
            if nodes.contains(&p) {
                return None;
            }
            let low = network.is_sink(p) || max_level(loads[p.0], c) + 2 <= h;
            low.then_some((v, p))
        })
        .collect()
}

fn height_of(heights: &[Height], v: NodeId) -> Option<usize> {
    heights[v.0].level()
}

/// Type of the directed path, if it is a valid activation path of any type.
/// Paths must contain at least one forwarding node.
pub fn classify_path(network: &TreeNetwork, heights: &[Height], path: &[NodeId]) -> Option<PathKind> {
    if path.len() < 2 {
        return None;
    }
    if path.windows(2).any(|w| network.parent(w[0]) != Some(w[1])) {
        return None;
    }
    let (&last, body) = path.split_last()?;
    let to_sink = network.is_sink(last);
    let to_empty = height_of(heights, last) == Some(0);
    if !to_sink && !to_empty {
        return None;
    }
    if body.iter().any(|&v| network.is_sink(v)) {
        return None;
    }
    let interior_flat = body[1..].iter().all(|&v| height_of(heights, v) == Some(1));
    if !interior_flat {
        return None;
    }
    match height_of(heights, body[0]) {
        Some(h) if h >= 2 => Some(if to_sink {
            PathKind::DownhillToSink
        } else {
            PathKind::DownhillToEmpty
        }),
        Some(1) => Some(PathKind::Flat),
        _ => None,
    }
}

/// Every valid activation path of the configuration, by brute force over
/// all (start, ancestor) pairs.
pub fn all_typed_paths(network: &TreeNetwork, heights: &[Height]) -> Vec<(PathKind, Vec<NodeId>)> {
    let mut out = Vec::new();
    for start in network.nodes() {
        let mut path = vec![start];
        let mut cur = start;
        while let Some(p) = network.parent(cur) {
            path.push(p);
            if let Some(kind) = classify_path(network, heights, &path) {
                out.push((kind, path.clone()));
            }
            cur = p;
        }
    }
    out
}

fn disjoint(network: &TreeNetwork, path: &[NodeId], used: &[bool]) -> bool {
    path.iter().all(|&v| network.is_sink(v) || !used[v.0])
}

/// Checks an activation-path set against its configuration: each path is
/// well-typed, paths are node-disjoint apart from the sink, classes were
/// exhausted in priority order, and nothing of any type can be added.
/// Also checks that flat paths cannot be extended backward.
pub fn verify_activation_set(
    network: &TreeNetwork,
    heights: &[Height],
    set: &ActivationPathSet,
    priority: &[PathKind; 3],
) -> Result<(), String> {
    let mut used = vec![false; network.len()];
    for path in &set.paths {
        match classify_path(network, heights, &path.nodes) {
            Some(kind) if kind == path.kind => {}
            other => {
                return Err(format!(
                    "path {:?} declared {} but classifies as {:?}",
                    path.nodes, path.kind, other
                ))
            }
        }
        if !disjoint(network, &path.nodes, &used) {
            return Err(format!("path {:?} overlaps an earlier path", path.nodes));
        }
        for &v in &path.nodes {
            if !network.is_sink(v) {
                used[v.0] = true;
            }
        }
    }

    let all = all_typed_paths(network, heights);
    let mut used = vec![false; network.len()];
    let mut paths = set.paths.iter().peekable();
    for (rank, &class) in priority.iter().enumerate() {
        while let Some(p) = paths.next_if(|p| p.kind == class) {
            for &v in &p.nodes {
                if !network.is_sink(v) {
                    used[v.0] = true;
                }
            }
        }
        // once a class is closed, no path of it or of an earlier class fits
        for (kind, path) in &all {
            if priority[..=rank].contains(kind) && disjoint(network, path, &used) {
                return Err(format!(
                    "{kind} path {path:?} is still addable after the {class} phase"
                ));
            }
        }
    }
    if let Some(p) = paths.next() {
        return Err(format!("{} path {:?} admitted out of priority order", p.kind, p.nodes));
    }

    for path in set.paths.iter().filter(|p| p.kind == PathKind::Flat) {
        let first = path.nodes[0];
        if let Some(child) = network
            .children(first)
            .iter()
            .find(|c| !used[c.0] && height_of(heights, **c) == Some(1))
        {
            return Err(format!(
                "flat path {:?} can be extended backward through {child}",
                path.nodes
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::plateau::{find_plateaus, k_load};
    use crate::engine::Configuration;
    use crate::policies::{activation_paths, ActivationPath, STANDARD_PRIORITY};

    fn ids(v: &[usize]) -> Vec<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    #[test]
    fn brute_force_finds_line_plateaus() {
        let net = TreeNetwork::line(6, 1).unwrap();
        let loads = [3, 1, 1, 0, 2, 0];
        assert_eq!(
            brute_force_plateaus(&net, &loads, 2),
            vec![ids(&[0, 1, 2]), ids(&[4])]
        );
        let fast: Vec<_> = find_plateaus(&net, &loads, 2)
            .unwrap()
            .into_iter()
            .map(|p| p.nodes)
            .collect();
        assert_eq!(fast, brute_force_plateaus(&net, &loads, 2));
        assert_eq!(brute_force_k_load(&loads, &ids(&[0, 1, 2]), 2, 1), 2);
        assert_eq!(k_load(&loads, &ids(&[0, 1, 2]), 2, 1), 2);
    }

    #[test]
    fn classifies_paths() {
        let net = TreeNetwork::line(7, 1).unwrap();
        let cfg = Configuration::from_loads(&net, &[0, 2, 1, 0, 3, 1, 0]).unwrap();
        let h = cfg.heights();
        assert_eq!(classify_path(&net, &h, &ids(&[4, 5, 6])), Some(PathKind::DownhillToSink));
        assert_eq!(classify_path(&net, &h, &ids(&[1, 2, 3])), Some(PathKind::DownhillToEmpty));
        assert_eq!(classify_path(&net, &h, &ids(&[2, 3])), Some(PathKind::Flat));
        assert_eq!(classify_path(&net, &h, &ids(&[5, 6])), Some(PathKind::Flat));
        assert_eq!(classify_path(&net, &h, &ids(&[3, 4])), None);
        assert_eq!(classify_path(&net, &h, &ids(&[1, 3])), None);
    }

    #[test]
    fn accepts_greedy_set_and_rejects_broken_ones() {
        let net = TreeNetwork::line(7, 1).unwrap();
        let cfg = Configuration::from_loads(&net, &[0, 2, 1, 0, 3, 1, 0]).unwrap();
        let h = cfg.heights();
        let set = activation_paths(&net, &h);
        verify_activation_set(&net, &h, &set, &STANDARD_PRIORITY).unwrap();

        let mut missing = set.clone();
        missing.paths.pop();
        assert!(verify_activation_set(&net, &h, &missing, &STANDARD_PRIORITY).is_err());

        let flat_first = ActivationPathSet {
            paths: vec![ActivationPath {
                kind: PathKind::Flat,
                nodes: ids(&[5, 6]),
            }],
        };
        assert!(verify_activation_set(&net, &h, &flat_first, &STANDARD_PRIORITY).is_err());
    }
}
