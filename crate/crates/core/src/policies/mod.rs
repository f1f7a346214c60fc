//! Scheduling policies, each a decision function evaluated once per
//! forwarding ministep on the current configuration.
//!
//! Packets forwarded earlier in the round are already gone from their
//! buffers and not yet visible at their destination, so the local rules
//! see the live intra-round loads.

mod fie;

use std::fmt;
use std::str::FromStr;

pub use fie::{
    activation_paths, activation_paths_with_priority, fie_activation_paths, fie_decide,
    ActivationPath, ActivationPathSet, Fie, PathKind, STANDARD_PRIORITY,
};

use crate::engine::Configuration;
use crate::error::{Error, Result};
use crate::topology::{NodeId, TreeNetwork};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Decision {
    /// Each forwards its top packet to its parent. Sorted by id.
    pub forwarders: Vec<NodeId>,
    pub paths: Option<ActivationPathSet>,
}

pub trait Policy: Send {
    fn name(&self) -> &'static str;

    /// `step` is the forwarding ministep within the round, starting at 1.
    fn decide(&mut self, network: &TreeNetwork, config: &Configuration, step: u32) -> Result<Decision>;
}

/// What a node sees of its out-neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParentView {
    Sink,
    Load(usize),
}

pub fn local_fie_forwards(own: usize, parent: ParentView) -> bool {
    own > 0
        && match parent {
            ParentView::Sink => true,
            ParentView::Load(l) => l == 0,
        }
}

pub fn local_downhill_forwards(own: usize, parent: ParentView) -> bool {
    own > 0
        && match parent {
            ParentView::Sink => true,
            ParentView::Load(l) => l < own,
        }
}

pub fn greedy_forwards(own: usize) -> bool {
    own > 0
}

fn local_decision(
    network: &TreeNetwork,
    config: &Configuration,
    rule: impl Fn(usize, ParentView) -> bool,
) -> Decision {
    let forwarders = network
        .nodes()
        .filter_map(|v| {
            let parent = network.parent(v)?;
            let view = if network.is_sink(parent) {
                ParentView::Sink
            } else {
                ParentView::Load(config.load(parent))
            };
            rule(config.load(v), view).then_some(v)
        })
        .collect();
    Decision {
        forwarders,
        paths: None,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LocalFie;

impl Policy for LocalFie {
    fn name(&self) -> &'static str {
        "local-fie"
    }

    fn decide(&mut self, network: &TreeNetwork, config: &Configuration, _: u32) -> Result<Decision> {
        Ok(local_decision(network, config, local_fie_forwards))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LocalDownhill;

impl Policy for LocalDownhill {
    fn name(&self) -> &'static str {
        "local-downhill"
    }

    fn decide(&mut self, network: &TreeNetwork, config: &Configuration, _: u32) -> Result<Decision> {
        Ok(local_decision(network, config, local_downhill_forwards))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Greedy;

impl Policy for Greedy {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn decide(&mut self, network: &TreeNetwork, config: &Configuration, _: u32) -> Result<Decision> {
        Ok(local_decision(network, config, |own, _| greedy_forwards(own)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Fie,
    LocalFie,
    LocalDownhill,
    Greedy,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Fie,
        PolicyKind::LocalFie,
        PolicyKind::LocalDownhill,
        PolicyKind::Greedy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Fie => "fie",
            PolicyKind::LocalFie => "local-fie",
            PolicyKind::LocalDownhill => "local-downhill",
            PolicyKind::Greedy => "greedy",
        }
    }

    pub fn build(self) -> Box<dyn Policy> {
        match self {
            PolicyKind::Fie => Box::new(Fie::default()),
            PolicyKind::LocalFie => Box::new(LocalFie),
            PolicyKind::LocalDownhill => Box::new(LocalDownhill),
            PolicyKind::Greedy => Box::new(Greedy),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let name = s.trim().replace('_', "-");
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_fie_rule() {
        assert!(local_fie_forwards(1, ParentView::Load(0)));
        assert!(!local_fie_forwards(1, ParentView::Load(1)));
        assert!(!local_fie_forwards(0, ParentView::Load(0)));
        assert!(local_fie_forwards(3, ParentView::Sink));
    }

    #[test]
    fn local_downhill_rule() {
        assert!(local_downhill_forwards(2, ParentView::Load(1)));
        assert!(!local_downhill_forwards(1, ParentView::Load(1)));
        assert!(local_downhill_forwards(1, ParentView::Sink));
        assert!(!local_downhill_forwards(0, ParentView::Sink));
    }

    #[test]
    fn greedy_rule() {
        assert!(greedy_forwards(3));
        assert!(!greedy_forwards(0));
    }

    #[test]
    fn names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), k);
            assert_eq!(k.build().name(), k.as_str());
        }
        assert!("fifo".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn local_decisions_are_simultaneous() {
        let net = TreeNetwork::line(4, 1).unwrap();
        let cfg = Configuration::from_loads(&net, &[1, 1, 1, 0]).unwrap();
        let lf = LocalFie.decide(&net, &cfg, 1).unwrap().forwarders;
        assert_eq!(lf, vec![NodeId(2)]);
        let g = Greedy.decide(&net, &cfg, 1).unwrap().forwarders;
        assert_eq!(g, vec![NodeId(0), NodeId(1), NodeId(2)]);
        let cfg = Configuration::from_loads(&net, &[3, 2, 2, 0]).unwrap();
        let ld = LocalDownhill.decide(&net, &cfg, 1).unwrap().forwarders;
        assert_eq!(ld, vec![NodeId(0), NodeId(2)]);
    }
}
