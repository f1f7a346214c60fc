//! Plateaus, k-loads, exit and landing nodes, pre-images.
//!
//! Buffers are gap-free, so a node holds a packet at level `l >= 1` iff its
//! load is at least `(l - 1) * c + 1`. Everything here works on loads.

use crate::error::{Error, Result};
use crate::topology::{NodeId, TreeNetwork};

/// Maximal connected node set whose members all hold a level `h - 1`
/// packet and at least one of which holds a level `h` packet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plateau {
    /// Sorted by id.
    pub nodes: Vec<NodeId>,
    pub height: usize,
}

impl Plateau {
    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.binary_search(&v).is_ok()
    }

    pub fn is_subset_of(&self, other: &Plateau) -> bool {
        self.nodes.iter().all(|&v| other.contains(v))
    }
}

/// Minimum load for a node to hold a packet at `level` (`level >= 1`).
pub fn load_for_level(level: usize, capacity: u32) -> usize {
    (level - 1) * capacity as usize + 1
}

pub fn find_plateaus(network: &TreeNetwork, loads: &[usize], h: usize) -> Result<Vec<Plateau>> {
    if h < 2 {
        return Err(Error::InvalidArgument(format!("plateau height must be >= 2, got {h}")));
    }
    let c = network.capacity();
    let floor = load_for_level(h - 1, c);
    let peak = load_for_level(h, c);
    let member = |v: NodeId| !network.is_sink(v) && loads[v.0] >= floor;

    // only components holding a level-h packet qualify, so start from those
    let mut seeds = network.nodes().filter(|&v| !network.is_sink(v) && loads[v.0] >= peak).peekable();
    if seeds.peek().is_none() {
        return Ok(Vec::new());
    }
    let mut seen = vec![false; network.len()];
    let mut plateaus = Vec::new();
    let mut stack = Vec::new();
    for start in seeds {
        if seen[start.0] {
            continue;
        }
        seen[start.0] = true;
        stack.push(start);
        let mut nodes = Vec::new();
        while let Some(v) = stack.pop() {
            nodes.push(v);
            let neighbours = network.children(v).iter().copied().chain(network.parent(v));
            for w in neighbours {
                if !seen[w.0] && member(w) {
                    seen[w.0] = true;
                    stack.push(w);
                }
            }
        }
        nodes.sort();
        plateaus.push(Plateau { nodes, height: h });
    }
    plateaus.sort_by_key(|p| p.nodes[0]);
    Ok(plateaus)
}

/// Packets at level `k` or higher within `nodes`. Levels start at 1, so
/// `k <= 1` counts every packet.
pub fn k_load(loads: &[usize], nodes: &[NodeId], k: usize, capacity: u32) -> u64 {
    let below = k.saturating_sub(1) * capacity as usize;
    nodes
        .iter()
        .map(|v| loads[v.0].saturating_sub(below) as u64)
        .sum()
}

/// Sum of the 2-loads of all 2-plateaus. Every node above height 1 lies in
/// some 2-plateau and the other members contribute nothing, so this is the
/// total number of packets at level 2 or higher.
pub fn total_two_load(loads: &[usize], capacity: u32) -> u64 {
    loads
        .iter()
        .map(|&l| l.saturating_sub(capacity as usize) as u64)
        .sum()
}

/// `(exit, landing)`: the member whose parent lies outside the plateau at
/// height `h - 2` or below (or is the sink), and that parent.
pub fn exit_landing(plateau: &Plateau, network: &TreeNetwork, loads: &[usize]) -> Result<(NodeId, NodeId)> {
    let c = network.capacity();
    let mut exits = plateau.nodes.iter().filter_map(|&v| {
        let p = network.parent(v)?;
        (!plateau.contains(p)).then_some((v, p))
    });
    let Some((exit, landing)) = exits.next() else {
        return Err(Error::MalformedPlateau(format!(
            "no member of {:?} has a parent outside it",
            plateau.nodes
        )));
    };
    if exits.next().is_some() {
        return Err(Error::MalformedPlateau(format!("{:?} is not connected", plateau.nodes)));
    }
    if !network.is_sink(landing) {
        let landing_height = loads[landing.0].div_ceil(c as usize);
        if landing_height + 2 > plateau.height {
            return Err(Error::MalformedPlateau(format!(
                "landing node {landing} has height {landing_height}, above {}",
                plateau.height.saturating_sub(2)
            )));
        }
    }
    Ok((exit, landing))
}

/// Start-of-round plateaus contained in `end`.
pub fn pre_image<'a>(end: &Plateau, start: &'a [Plateau]) -> Vec<&'a Plateau> {
    start.iter().filter(|p| p.is_subset_of(end)).collect()
}
