//! Scenario files: flat TOML key/value pairs.
//!
//! ```toml
//! topology = "line"        # line | random-tree | tree-file
//! nodes = 5                # line and random-tree, sink included
//! tree_file = "tree.txt"   # tree-file, relative to the scenario
//! topology_seed = 7        # random-tree
//! capacity = 1
//! policy = "local-fie"     # fie | local-fie | local-downhill | greedy
//! pattern = "constant"     # none | constant | two-phase | adaptive-max-load | random | replay
//! node = 0                 # constant: injection node id
//! per_round = 1            # constant
//! seed = 3                 # random
//! replay_file = "inj.csv"  # replay: `round,node` records
//! rounds = 1000
//! rho = "1"                # integers, decimals or p/q
//! sigma = 0
//! checkers = "invariant-i,forward-lose"
//! trace = "run.csv"
//! ```
//!
//! Tree files list `nodes <n>` followed by one `<child> <parent>` pair per
//! line; the node without a parent is the sink. `#` starts a comment.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::adversary::{
    adaptive_max_load, constant_at_node, two_phase, InjectionPattern, InjectionTrace, RandomCompliant, Replay,
    Silent,
};
use crate::analysis::{parse_checker_list, CheckerKind};
use crate::error::{Error, Result};
use crate::policies::PolicyKind;
use crate::scalar::{parse_rational, Scalar};
use crate::topology::{NodeId, TreeNetwork};
use crate::{Bound, Rational};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    fn to_rational(&self, key: &str) -> Result<Rational> {
        match self {
            Number::Int(i) => Ok(Rational::from_integer(*i)),
            Number::Text(s) => parse_rational(s),
            Number::Float(f) => parse_rational(&f.to_string()),
        }
        .map_err(|e| Error::Parse(format!("`{key}`: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum CheckerList {
    Joined(String),
    Items(Vec<String>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    topology: String,
    nodes: Option<usize>,
    tree_file: Option<PathBuf>,
    topology_seed: Option<u64>,
    capacity: u32,
    policy: String,
    #[serde(default = "default_pattern")]
    pattern: String,
    node: Option<usize>,
    per_round: Option<usize>,
    seed: Option<u64>,
    replay_file: Option<PathBuf>,
    rounds: u64,
    rho: Option<Number>,
    sigma: Option<Number>,
    checkers: Option<CheckerList>,
    trace: Option<PathBuf>,
}

fn default_pattern() -> String {
    "none".into()
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    Line { nodes: usize },
    RandomTree { nodes: usize, seed: u64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub enum PatternSpec {
    None,
    Constant { node: NodeId, per_round: usize },
    TwoPhase,
    AdaptiveMaxLoad,
    Random { seed: u64 },
    Replay { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub topology: TopologySpec,
    pub capacity: u32,
    pub policy: PolicyKind,
    pub pattern: PatternSpec,
    pub rounds: u64,
    pub bound: Option<Bound>,
    pub checkers: Vec<CheckerKind>,
    pub trace: Option<PathBuf>,
}

fn missing(key: &str, why: &str) -> Error {
    Error::InvalidArgument(format!("`{key}` is required {why}"))
}

impl Scenario {
    /// Relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))?;
        let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };

        let topology = match raw.topology.as_str() {
            "line" => TopologySpec::Line {
                nodes: raw.nodes.ok_or_else(|| missing("nodes", "for a line"))?,
            },
            "random-tree" => TopologySpec::RandomTree {
                nodes: raw.nodes.ok_or_else(|| missing("nodes", "for a random tree"))?,
                seed: raw.topology_seed.unwrap_or(0),
            },
            "tree-file" => TopologySpec::File {
                path: resolve(raw.tree_file.ok_or_else(|| missing("tree_file", "for a tree file"))?),
            },
            other => return Err(Error::InvalidArgument(format!("unknown topology `{other}`"))),
        };
        let pattern = match raw.pattern.as_str() {
            "none" => PatternSpec::None,
            "constant" => PatternSpec::Constant {
                node: NodeId(raw.node.ok_or_else(|| missing("node", "for a constant pattern"))?),
                per_round: raw.per_round.unwrap_or(1),
            },
            "two-phase" => PatternSpec::TwoPhase,
            "adaptive-max-load" => PatternSpec::AdaptiveMaxLoad,
            "random" => PatternSpec::Random {
                seed: raw.seed.unwrap_or(0),
            },
            "replay" => PatternSpec::Replay {
                path: resolve(raw.replay_file.ok_or_else(|| missing("replay_file", "for replay"))?),
            },
            other => return Err(Error::InvalidArgument(format!("unknown pattern `{other}`"))),
        };
        let bound = match (&raw.rho, &raw.sigma) {
            (Some(r), Some(s)) => Some(Bound::new(r.to_rational("rho")?, s.to_rational("sigma")?)?),
            (None, None) => None,
            _ => return Err(Error::InvalidArgument("`rho` and `sigma` go together".into())),
        };
        let checkers = match raw.checkers {
            None => Vec::new(),
            Some(CheckerList::Joined(s)) => parse_checker_list(&s)?,
            Some(CheckerList::Items(items)) => parse_checker_list(&items.join(","))?,
        };
        let scenario = Scenario {
            topology,
            capacity: raw.capacity,
            policy: raw.policy.parse()?,
            pattern,
            rounds: raw.rounds,
            bound,
            checkers,
            trace: raw.trace.map(resolve),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Replaces the scenario's checker list.
    pub fn with_checkers(mut self, list: &str) -> Result<Self> {
        self.checkers = parse_checker_list(list)?;
        self.validate()?;
        Ok(self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::InvalidArgument("capacity must be at least 1".into()));
        }
        let needs_bound = matches!(self.pattern, PatternSpec::Random { .. } | PatternSpec::AdaptiveMaxLoad)
            || self.checkers.contains(&CheckerKind::MaxLoad);
        if needs_bound && self.bound.is_none() {
            return Err(Error::InvalidArgument(
                "this pattern or checker set needs `rho` and `sigma`".into(),
            ));
        }
        if self.policy != PolicyKind::Fie {
            if let Some(k) = self.checkers.iter().find(|k| k.fie_only()) {
                return Err(Error::InvalidArgument(format!("checker `{k}` only applies to the fie policy")));
            }
        }
        Ok(())
    }

    pub fn network(&self) -> Result<TreeNetwork> {
        let net = match &self.topology {
            TopologySpec::Line { nodes } => TreeNetwork::line(*nodes, self.capacity)?,
            TopologySpec::RandomTree { nodes, seed } => {
                TreeNetwork::random(*nodes, self.capacity, &mut ChaCha8Rng::seed_from_u64(*seed))?
            }
            TopologySpec::File { path } => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("cannot read tree file {}: {e}", path.display())))?;
                parse_tree(&text, self.capacity)?
            }
        };
        if let PatternSpec::Constant { node, .. } = self.pattern {
            net.check_node(node)?;
        }
        Ok(net)
    }

    /// `sigma` rounded down, for checkers and patterns that need whole packets.
    pub fn sigma_floor(&self) -> Option<u64> {
        self.bound.map(|b| b.sigma.floor_count())
    }

    pub fn pattern(&self, network: &TreeNetwork) -> Result<Box<dyn InjectionPattern>> {
        Ok(match &self.pattern {
            PatternSpec::None => Box::new(Silent),
            PatternSpec::Constant { node, per_round } => Box::new(constant_at_node(*node, *per_round)?),
            PatternSpec::TwoPhase => Box::new(two_phase(network.len())?),
            PatternSpec::AdaptiveMaxLoad => {
                let b = self.bound.expect("validated");
                if *b.sigma.denom() != 1 {
                    return Err(Error::InvalidArgument("adaptive-max-load needs an integer sigma".into()));
                }
                let sigma = u32::try_from(*b.sigma.numer())
                    .map_err(|_| Error::InvalidArgument("sigma out of range".into()))?;
                Box::new(adaptive_max_load(self.capacity, sigma)?)
            }
            PatternSpec::Random { seed } => Box::new(RandomCompliant::new(self.bound.expect("validated"), *seed)),
            PatternSpec::Replay { path } => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
                Box::new(Replay::new(InjectionTrace::parse_records(&text)?))
            }
        })
    }
}

pub fn parse_tree(text: &str, capacity: u32) -> Result<TreeNetwork> {
    let mut nodes = None;
    let mut parents: Vec<Option<NodeId>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("tree file line {}: {what}", i + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        match (nodes, fields.as_slice()) {
            (None, ["nodes", n]) => {
                let n: usize = n.parse().map_err(|_| bad("bad node count"))?;
                nodes = Some(n);
                parents = vec![None; n];
            }
            (None, _) => return Err(bad("expected `nodes <n>` first")),
            (Some(n), [child, parent]) => {
                let child: usize = child.parse().map_err(|_| bad("bad child id"))?;
                let parent: usize = parent.parse().map_err(|_| bad("bad parent id"))?;
                if child >= n || parent >= n {
                    return Err(bad("node id out of range"));
                }
                if parents[child].replace(NodeId(parent)).is_some() {
                    return Err(bad("node has two parents"));
                }
            }
            (Some(_), _) => return Err(bad("expected `<child> <parent>`")),
        }
    }
    if nodes.is_none() {
        return Err(Error::Parse("empty tree file".into()));
    }
    TreeNetwork::from_parents(parents, capacity)
}
