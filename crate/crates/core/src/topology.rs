//! Single-sink directed trees with a uniform edge capacity.
//!
//! Every non-root node has exactly one outgoing edge, to its parent, so the
//! edge out of `v` is identified with `v` itself. The root is the sink.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Dense node index in `0..n`. On a line, `v_i` is `NodeId(i - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeNetwork {
    parent: Vec<Option<NodeId>>,
    root: NodeId,
    capacity: u32,
    depth: Vec<usize>,
    children: Vec<Vec<NodeId>>,
    /// Non-sink nodes sorted by (distance to sink, id).
    by_distance: Vec<NodeId>,
}

impl TreeNetwork {
    /// Path `v_1 -> v_2 -> ... -> v_n` with the sink at `v_n`.
    pub fn line(n: usize, capacity: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("line needs at least one node".into()));
        }
        let parents = (0..n)
            .map(|i| (i + 1 < n).then_some(NodeId(i + 1)))
            .collect::<Vec<_>>();
        Self::from_parents(parents, capacity)
    }

    /// Validates a parent map: exactly one parentless node, no cycles.
    pub fn from_parents(parents: Vec<Option<NodeId>>, capacity: u32) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("capacity must be at least 1".into()));
        }
        let n = parents.len();
        if n == 0 {
            return Err(Error::InvalidTopology("empty node set".into()));
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parents[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTopology(format!(
                "expected exactly one parentless node, found {}",
                roots.len()
            )));
        }
        let root = NodeId(roots[0]);
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                if p.0 >= n {
                    return Err(Error::InvalidTopology(format!(
                        "node {i} has unknown parent {p}"
                    )));
                }
                if p.0 == i {
                    return Err(Error::InvalidTopology(format!("node {i} is its own parent")));
                }
            }
        }

        // 0 = unvisited, 1 = on the current walk, 2 = resolved.
        let mut state = vec![0u8; n];
        let mut depth = vec![0usize; n];
        state[root.0] = 2;
        for start in 0..n {
            let mut walk = Vec::new();
            let mut v = start;
            while state[v] == 0 {
                state[v] = 1;
                walk.push(v);
                v = parents[v].expect("only the root is parentless").0;
            }
            if state[v] == 1 {
                return Err(Error::InvalidTopology(format!(
                    "cycle through node {v}"
                )));
            }
            let mut d = depth[v];
            for &w in walk.iter().rev() {
                d += 1;
                depth[w] = d;
                state[w] = 2;
            }
        }

        let mut children = vec![Vec::new(); n];
        for (i, p) in parents.iter().enumerate() {
            if let Some(p) = p {
                children[p.0].push(NodeId(i));
            }
        }
        let mut by_distance: Vec<NodeId> = (0..n).filter(|&i| i != root.0).map(NodeId).collect();
        by_distance.sort_by_key(|v| (depth[v.0], v.0));

        Ok(Self {
            parent: parents,
            root,
            capacity,
            depth,
            children,
            by_distance,
        })
    }

    /// Uniformly shuffled random recursive tree on `n` nodes.
    pub fn random<R: Rng + ?Sized>(n: usize, capacity: u32, rng: &mut R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("tree needs at least one node".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut parents = vec![None; n];
        for i in 1..n {
            parents[order[i]] = Some(NodeId(order[rng.gen_range(0..i)]));
        }
        Self::from_parents(parents, capacity)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn sink(&self) -> NodeId {
        self.root
    }

    pub fn is_sink(&self, v: NodeId) -> bool {
        v == self.root
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.0]
    }

    pub fn parents(&self) -> &[Option<NodeId>] {
        &self.parent
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v.0]
    }

    /// Number of edges between `v` and the sink.
    pub fn distance_to_sink(&self, v: NodeId) -> usize {
        self.depth[v.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.len()).map(NodeId)
    }

    /// Non-sink nodes in ascending (distance to sink, id) order.
    pub fn by_distance(&self) -> &[NodeId] {
        &self.by_distance
    }

    pub fn contains(&self, v: NodeId) -> bool {
        v.0 < self.len()
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "node {v} not in a network of {} nodes",
                self.len()
            )))
        }
    }

    /// `[v, parent(v), ..., root]`: the route of every packet injected at `v`.
    pub fn path_to_root(&self, v: NodeId) -> Result<Vec<NodeId>> {
        self.check_node(v)?;
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur.0] {
            path.push(p);
            cur = p;
        }
        Ok(path)
    }

    /// Edges (identified by their tail node) crossed by a packet injected at `v`.
    pub fn edges_to_root(&self, v: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        let mut cur = Some(v);
        std::iter::from_fn(move || {
            let v = cur?;
            let p = self.parent[v.0]?;
            cur = Some(p);
            Some(v)
        })
    }
}
