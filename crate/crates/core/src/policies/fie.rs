//! Forward-If-Empty: centralized activation paths recomputed at every
//! forwarding ministep.

use std::fmt;

use crate::engine::{Configuration, Height};
use crate::error::{Error, Result};
use crate::topology::{NodeId, TreeNetwork};

use super::{Decision, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PathKind {
    /// Starts above height 1, crosses height-1 nodes, ends at the sink.
    DownhillToSink,
    /// Starts above height 1, crosses height-1 nodes, ends at an empty node.
    DownhillToEmpty,
    /// Height-1 nodes ending at the sink or an empty node.
    Flat,
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathKind::DownhillToSink => "downhill-to-sink",
            PathKind::DownhillToEmpty => "downhill-to-empty",
            PathKind::Flat => "flat",
        })
    }
}

pub const STANDARD_PRIORITY: [PathKind; 3] =
    [PathKind::DownhillToSink, PathKind::DownhillToEmpty, PathKind::Flat];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivationPath {
    pub kind: PathKind,
    /// Ordered toward the sink; the last node is the sink or an empty node.
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActivationPathSet {
    /// In the order they were admitted.
    pub paths: Vec<ActivationPath>,
}

impl ActivationPathSet {
    /// Non-sink nodes on some path, including empty terminals.
    pub fn nodes(&self, network: &TreeNetwork) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self
            .paths
            .iter()
            .flat_map(|p| p.nodes.iter().copied())
            .filter(|&v| !network.is_sink(v))
            .collect();
        nodes.sort();
        nodes
    }

    /// Nodes that forward a packet: path members other than the sink and
    /// the empty terminal.
    pub fn activated(&self, network: &TreeNetwork, config: &Configuration) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = self
            .nodes(network)
            .into_iter()
            .filter(|&v| config.load(v) > 0)
            .collect();
        nodes.dedup();
        nodes
    }
}

enum Walk {
    /// Height-1 chain from the start ended at the sink or an unused empty node.
    Sink,
    Empty(NodeId),
    Blocked,
}

/// Reusable buffers for path construction.
#[derive(Debug, Clone, Default)]
struct Scratch {
    used: Vec<bool>,
    /// `dead[v] == stamp`: a walk through `v` already failed in this class.
    dead: Vec<u32>,
    stamp: u32,
    chain: Vec<NodeId>,
    head: Vec<NodeId>,
}

/// Follows parents from `start` across unused height-1 nodes. Pushes the
/// visited non-terminal nodes (after `start`) onto `chain`.
fn walk(network: &TreeNetwork, heights: &[Height], s: &mut Scratch, start: NodeId) -> Walk {
    let mut cur = start;
    loop {
        let Some(next) = network.parent(cur) else {
            return Walk::Blocked;
        };
        if network.is_sink(next) {
            return Walk::Sink;
        }
        if s.used[next.0] || s.dead[next.0] == s.stamp {
            return Walk::Blocked;
        }
        match heights[next.0] {
            Height::Level(0) => return Walk::Empty(next),
            Height::Level(1) => {
                s.chain.push(next);
                cur = next;
            }
            _ => return Walk::Blocked,
        }
    }
}

/// Greedy maximal activation paths for the given heights, one priority
/// class at a time. Within a class, start nodes are scanned by ascending
/// (distance to sink, id); flat paths are extended backward through unused
/// height-1 nodes, taking the lowest-id child at branchings.
pub fn activation_paths_with_priority(
    network: &TreeNetwork,
    heights: &[Height],
    priority: &[PathKind; 3],
) -> ActivationPathSet {
    build_paths(network, heights, priority, &mut Scratch::default())
}

fn build_paths(network: &TreeNetwork, heights: &[Height], priority: &[PathKind; 3], s: &mut Scratch) -> ActivationPathSet {
    s.used.clear();
    s.used.resize(network.len(), false);
    if s.dead.len() != network.len() || s.stamp > u32::MAX - 4 {
        s.dead = vec![0; network.len()];
        s.stamp = 0;
    }
    let mut set = ActivationPathSet::default();
    for &kind in priority {
        // failures only become more likely as paths are added, so a node
        // on a failed walk stays failed for the rest of the class
        s.stamp += 1;
        for &u in network.by_distance() {
            if s.used[u.0] {
                continue;
            }
            let h = heights[u.0].level().unwrap_or(0);
            let eligible = match kind {
                PathKind::DownhillToSink | PathKind::DownhillToEmpty => h >= 2,
                PathKind::Flat => h == 1,
            };
            if !eligible {
                continue;
            }
            s.chain.clear();
            let end = walk(network, heights, s, u);
            let terminal = match (kind, end) {
                (PathKind::DownhillToSink | PathKind::Flat, Walk::Sink) => network.sink(),
                (PathKind::DownhillToEmpty | PathKind::Flat, Walk::Empty(w)) => w,
                _ => {
                    s.dead[u.0] = s.stamp;
                    for &v in &s.chain {
                        s.dead[v.0] = s.stamp;
                    }
                    continue;
                }
            };
            let mut nodes = Vec::with_capacity(s.chain.len() + 2);
            if kind == PathKind::Flat {
                s.head.clear();
                let mut first = u;
                while let Some(&child) = network
                    .children(first)
                    .iter()
                    .find(|c| !s.used[c.0] && heights[c.0] == Height::Level(1))
                {
                    s.head.push(child);
                    s.used[child.0] = true;
                    first = child;
                }
                nodes.extend(s.head.iter().rev());
            }
            nodes.push(u);
            nodes.extend_from_slice(&s.chain);
            nodes.push(terminal);
            for &v in &nodes {
                if !network.is_sink(v) {
                    s.used[v.0] = true;
                }
            }
            set.paths.push(ActivationPath { kind, nodes });
        }
    }
    set
}

pub fn activation_paths(network: &TreeNetwork, heights: &[Height]) -> ActivationPathSet {
    activation_paths_with_priority(network, heights, &STANDARD_PRIORITY)
}

/// Activation paths of a live configuration.
pub fn fie_activation_paths(config: &Configuration, network: &TreeNetwork) -> ActivationPathSet {
    activation_paths(network, &config.heights())
}

#[derive(Debug, Clone)]
pub struct Fie {
    priority: [PathKind; 3],
    heights: Vec<Height>,
    scratch: Scratch,
}

impl Default for Fie {
    fn default() -> Self {
        Self::with_priority(STANDARD_PRIORITY)
    }
}

impl Fie {
    pub fn new() -> Self {
        Self::default()
    }

    /// Non-standard class order. Only useful to show that the checkers
    /// notice a broken scheduler.
    pub fn with_priority(priority: [PathKind; 3]) -> Self {
        Self {
            priority,
            heights: Vec::new(),
            scratch: Scratch::default(),
        }
    }

    pub fn priority(&self) -> [PathKind; 3] {
        self.priority
    }
}

/// Forwarding nodes for one FIE ministep.
pub fn fie_decide(network: &TreeNetwork, config: &Configuration) -> Result<Decision> {
    Fie::default().decide(network, config, 1)
}

impl Policy for Fie {
    fn name(&self) -> &'static str {
        if self.priority == STANDARD_PRIORITY {
            "fie"
        } else {
            "fie-mutant"
        }
    }

    fn decide(&mut self, network: &TreeNetwork, config: &Configuration, _step: u32) -> Result<Decision> {
        self.heights.clear();
        self.heights.extend(network.nodes().map(|v| config.height(v)));
        let paths = build_paths(network, &self.heights, &self.priority, &mut self.scratch);
        let mut forwarders = Vec::with_capacity(network.len());
        for path in &paths.paths {
            let (last, body) = path.nodes.split_last().expect("paths are non-empty");
            for &v in body {
                if config.load(v) == 0 {
                    return Err(Error::Policy(format!(
                        "activated interior node {v} of a {} path is empty",
                        path.kind
                    )));
                }
                forwarders.push(v);
            }
            debug_assert!(network.is_sink(*last) || config.load(*last) == 0);
        }
        forwarders.sort();
        Ok(Decision {
            forwarders,
            paths: Some(paths),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_config(loads_before_sink: &[usize], c: u32) -> (TreeNetwork, Configuration) {
        let net = TreeNetwork::line(loads_before_sink.len() + 1, c).unwrap();
        let mut loads = loads_before_sink.to_vec();
        loads.push(0);
        let cfg = Configuration::from_loads(&net, &loads).unwrap();
        (net, cfg)
    }

    fn ids(v: &[usize]) -> Vec<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    #[test]
    fn hill_and_valley_line() {
        // v1..v6 = (0,2,1,0,3,1), sink v7
        let (net, cfg) = line_config(&[0, 2, 1, 0, 3, 1], 1);
        let set = fie_activation_paths(&cfg, &net);
        assert_eq!(
            set.paths,
            vec![
                ActivationPath {
                    kind: PathKind::DownhillToSink,
                    nodes: ids(&[4, 5, 6])
                },
                ActivationPath {
                    kind: PathKind::DownhillToEmpty,
                    nodes: ids(&[1, 2, 3])
                },
            ]
        );
        assert_eq!(set.activated(&net, &cfg), ids(&[1, 2, 4, 5]));
        let d = fie_decide(&net, &cfg).unwrap();
        assert_eq!(d.forwarders, ids(&[1, 2, 4, 5]));
    }

    #[test]
    fn empty_network_has_no_paths() {
        let (net, cfg) = line_config(&[0, 0, 0], 2);
        assert!(fie_activation_paths(&cfg, &net).paths.is_empty());
        assert!(fie_decide(&net, &cfg).unwrap().forwarders.is_empty());
    }

    #[test]
    fn flat_line_is_one_path() {
        let (net, cfg) = line_config(&[1, 1], 1);
        let set = fie_activation_paths(&cfg, &net);
        assert_eq!(
            set.paths,
            vec![ActivationPath {
                kind: PathKind::Flat,
                nodes: ids(&[0, 1, 2])
            }]
        );
    }

    #[test]
    fn tall_node_next_to_sink() {
        for c in 1..4 {
            let (net, cfg) = line_config(&[0, 2 * c as usize + 1], c);
            let d = fie_decide(&net, &cfg).unwrap();
            assert_eq!(d.forwarders, ids(&[1]));
            assert_eq!(d.paths.unwrap().paths[0].kind, PathKind::DownhillToSink);
        }
    }

    #[test]
    fn two_hills_share_one_empty_node() {
        // star-ish: 0 and 1 (both height 2) feed 2 (empty), 2 -> 3 (sink)
        let net = TreeNetwork::from_parents(
            vec![Some(NodeId(2)), Some(NodeId(2)), Some(NodeId(3)), None],
            1,
        )
        .unwrap();
        let cfg = Configuration::from_loads(&net, &[2, 2, 0, 0]).unwrap();
        let set = fie_activation_paths(&cfg, &net);
        assert_eq!(set.paths.len(), 1);
        assert_eq!(set.paths[0].nodes, ids(&[0, 2]));
    }

    #[test]
    fn flat_extends_backward_through_lowest_child() {
        // 0 and 1 both height 1 with parent 2 (height 1) -> sink 3
        let net = TreeNetwork::from_parents(
            vec![Some(NodeId(2)), Some(NodeId(2)), Some(NodeId(3)), None],
            1,
        )
        .unwrap();
        let cfg = Configuration::from_loads(&net, &[1, 1, 1, 0]).unwrap();
        let set = fie_activation_paths(&cfg, &net);
        assert_eq!(set.paths.len(), 1);
        assert_eq!(set.paths[0].nodes, ids(&[0, 2, 3]));
    }

    #[test]
    fn inverted_priority_starves_the_hill() {
        let (net, cfg) = line_config(&[2, 1, 1], 1);
        let standard = fie_activation_paths(&cfg, &net);
        assert_eq!(standard.paths[0].kind, PathKind::DownhillToSink);
        assert_eq!(standard.paths[0].nodes, ids(&[0, 1, 2, 3]));
        let mut mutant = Fie::with_priority([PathKind::Flat, PathKind::DownhillToEmpty, PathKind::DownhillToSink]);
        let d = mutant.decide(&net, &cfg, 1).unwrap();
        assert_eq!(d.forwarders, ids(&[1, 2]));
    }
}
