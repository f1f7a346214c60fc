use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::topology::{NodeId, TreeNetwork};

/// Packets are numbered in injection order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PacketId(pub u64);

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub id: PacketId,
    pub source: NodeId,
    pub injected_round: u64,
}

/// Highest occupied level of a buffer. The sink sits below every buffer,
/// including empty ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Height {
    Sink,
    Level(usize),
}

impl Height {
    pub fn of_load(load: usize, capacity: u32) -> Self {
        Height::Level(level_of_position(load, capacity))
    }

    pub fn level(self) -> Option<usize> {
        match self {
            Height::Sink => None,
            Height::Level(l) => Some(l),
        }
    }

    pub fn is_sink(self) -> bool {
        self == Height::Sink
    }
}

impl PartialOrd for Height {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Height {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Height::Sink, Height::Sink) => Ordering::Equal,
            (Height::Sink, _) => Ordering::Less,
            (_, Height::Sink) => Ordering::Greater,
            (Height::Level(a), Height::Level(b)) => a.cmp(b),
        }
    }
}

/// `ceil(pos / c)`; position 0 (an empty buffer) maps to level 0.
pub fn level_of_position(pos: usize, capacity: u32) -> usize {
    pos.div_ceil(capacity as usize)
}

/// LIFO buffer. Slot `i` holds position `i + 1`, so positions are always
/// the gap-free range `1..=len`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Buffer {
    slots: Vec<PacketId>,
}

impl Buffer {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[PacketId] {
        &self.slots
    }

    /// 1-based position of `p`, if buffered here.
    pub fn position(&self, p: PacketId) -> Option<usize> {
        self.slots.iter().position(|&q| q == p).map(|i| i + 1)
    }

    pub fn height(&self, capacity: u32) -> usize {
        level_of_position(self.len(), capacity)
    }

    /// Stores `p` at position `len + 1`.
    pub fn push(&mut self, p: PacketId) {
        self.slots.push(p);
    }

    /// Removes the packet at the highest position.
    pub fn pop(&mut self) -> Option<PacketId> {
        self.slots.pop()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transit {
    pub packet: PacketId,
    pub from: NodeId,
    pub to: NodeId,
    /// Forwarding ministep within the round, starting at 1.
    pub step: u32,
}

/// Buffers, in-transit packets and delivery bookkeeping between ministeps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    buffers: Vec<Buffer>,
    in_transit: Vec<Transit>,
    delivered: Vec<PacketId>,
    forwarded: Vec<u32>,
    sink: NodeId,
    capacity: u32,
}

impl Configuration {
    pub fn new(network: &TreeNetwork) -> Self {
        let n = network.len();
        Self {
            buffers: vec![Buffer::default(); n],
            in_transit: Vec::new(),
            delivered: Vec::new(),
            forwarded: vec![0; n],
            sink: network.sink(),
            capacity: network.capacity(),
        }
    }

    /// Fills buffers to the given loads with fresh packet ids `0, 1, ...`
    /// assigned node by node. The sink's load must be zero.
    pub fn from_loads(network: &TreeNetwork, loads: &[usize]) -> Result<Self> {
        if loads.len() != network.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} loads, got {}",
                network.len(),
                loads.len()
            )));
        }
        if loads[network.sink().0] != 0 {
            return Err(Error::InvalidArgument("the sink has no buffer".into()));
        }
        let mut config = Self::new(network);
        let mut next = 0u64;
        for (v, &load) in loads.iter().enumerate() {
            for _ in 0..load {
                config.buffers[v].push(PacketId(next));
                next += 1;
            }
        }
        Ok(config)
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn buffer(&self, v: NodeId) -> &Buffer {
        &self.buffers[v.0]
    }

    pub(crate) fn buffer_mut(&mut self, v: NodeId) -> &mut Buffer {
        &mut self.buffers[v.0]
    }

    pub fn load(&self, v: NodeId) -> usize {
        self.buffers[v.0].len()
    }

    pub fn loads(&self) -> Vec<usize> {
        self.buffers.iter().map(Buffer::len).collect()
    }

    pub fn height(&self, v: NodeId) -> Height {
        if v == self.sink {
            Height::Sink
        } else {
            Height::of_load(self.load(v), self.capacity)
        }
    }

    pub fn heights(&self) -> Vec<Height> {
        (0..self.buffers.len()).map(|i| self.height(NodeId(i))).collect()
    }

    /// Level of `p` if it is buffered at `v`.
    pub fn level(&self, v: NodeId, p: PacketId) -> Option<usize> {
        self.buffers[v.0]
            .position(p)
            .map(|pos| level_of_position(pos, self.capacity))
    }

    pub fn in_transit(&self) -> &[Transit] {
        &self.in_transit
    }

    pub(crate) fn in_transit_mut(&mut self) -> &mut Vec<Transit> {
        &mut self.in_transit
    }

    pub fn delivered(&self) -> &[PacketId] {
        &self.delivered
    }

    pub fn delivered_count(&self) -> u64 {
        self.delivered.len() as u64
    }

    pub(crate) fn deliver(&mut self, p: PacketId) {
        self.delivered.push(p);
    }

    pub fn buffered_count(&self) -> u64 {
        self.buffers.iter().map(|b| b.len() as u64).sum()
    }

    /// Packets forwarded over the edge out of `v` in the current round.
    pub fn forwarded_this_round(&self, v: NodeId) -> u32 {
        self.forwarded[v.0]
    }

    pub(crate) fn forwarded_mut(&mut self) -> &mut Vec<u32> {
        &mut self.forwarded
    }

    pub fn max_load(&self) -> usize {
        self.buffers.iter().map(Buffer::len).max().unwrap_or(0)
    }

    /// Every packet id currently buffered or in transit.
    pub fn live_packets(&self) -> impl Iterator<Item = PacketId> + '_ {
        self.buffers
            .iter()
            .flat_map(|b| b.slots().iter().copied())
            .chain(self.in_transit.iter().map(|t| t.packet))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_follow_capacity() {
        assert_eq!(level_of_position(0, 2), 0);
        assert_eq!(level_of_position(1, 2), 1);
        assert_eq!(level_of_position(2, 2), 1);
        assert_eq!(level_of_position(3, 2), 2);
        assert_eq!(level_of_position(7, 3), 3);
    }

    #[test]
    fn sink_is_below_empty() {
        assert!(Height::Sink < Height::Level(0));
        assert!(Height::Level(0) < Height::Level(1));
    }

    #[test]
    fn from_loads_assigns_positions() {
        let net = TreeNetwork::line(4, 2).unwrap();
        let cfg = Configuration::from_loads(&net, &[3, 0, 1, 0]).unwrap();
        assert_eq!(cfg.loads(), vec![3, 0, 1, 0]);
        assert_eq!(cfg.level(NodeId(0), PacketId(2)), Some(2));
        assert_eq!(cfg.level(NodeId(2), PacketId(3)), Some(1));
        assert_eq!(cfg.height(NodeId(0)), Height::Level(2));
        assert_eq!(cfg.height(NodeId(1)), Height::Level(0));
        assert_eq!(cfg.height(NodeId(3)), Height::Sink);
        assert!(Configuration::from_loads(&net, &[0, 0, 0, 1]).is_err());
        assert!(Configuration::from_loads(&net, &[0, 0]).is_err());
    }

    #[test]
    fn buffer_is_lifo() {
        let mut b = Buffer::default();
        b.push(PacketId(0));
        b.push(PacketId(1));
        assert_eq!(b.position(PacketId(1)), Some(2));
        assert_eq!(b.pop(), Some(PacketId(1)));
        assert_eq!(b.slots(), &[PacketId(0)]);
    }
}
