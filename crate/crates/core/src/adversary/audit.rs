//! Injection traces and the per-edge `(rho, sigma)` burstiness audit.
//!
//! Time is measured in whole rounds. A trace over rounds `1..=T` complies
//! with `(rho, sigma)` when, for every edge `e` and every window `[t, t')`
//! with `1 <= t <= t' <= T + 1`, the number of packets injected in rounds
//! `t..t'` whose route crosses `e` is at most `rho * (t' - t) + sigma`.

use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::topology::{NodeId, TreeNetwork};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurstinessBound<T> {
    pub rho: T,
    pub sigma: T,
}

impl<T: Scalar> BurstinessBound<T> {
    pub fn new(rho: T, sigma: T) -> Result<Self> {
        if rho < T::zero() || sigma < T::zero() {
            return Err(Error::InvalidArgument(format!(
                "burstiness bound must be non-negative, got rho={rho} sigma={sigma}"
            )));
        }
        Ok(Self { rho, sigma })
    }

    /// `rho * rounds + sigma`.
    pub fn allowance(&self, rounds: u64) -> T {
        self.rho * T::from_count(rounds) + self.sigma
    }
}

impl<T: fmt::Display> fmt::Display for BurstinessBound<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.rho, self.sigma)
    }
}

/// Source nodes of the packets injected in each round, round 1 first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InjectionTrace {
    sources: Vec<NodeId>,
    /// `ends[t - 1]` is the end offset of round `t` in `sources`.
    ends: Vec<usize>,
}

impl InjectionTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_rounds(rounds: Vec<Vec<NodeId>>) -> Self {
        let mut trace = Self::new();
        for round in rounds {
            trace.sources.extend(round);
            trace.ends.push(trace.sources.len());
        }
        trace
    }

    /// Number of rounds covered, `T`.
    pub fn horizon(&self) -> u64 {
        self.ends.len() as u64
    }

    pub fn rounds(&self) -> impl DoubleEndedIterator<Item = &[NodeId]> + ExactSizeIterator + '_ {
        (1..self.ends.len() + 1).map(|t| self.round(t as u64))
    }

    /// Sources injected in round `t` (1-based).
    pub fn round(&self, t: u64) -> &[NodeId] {
        let t = t as usize;
        if t == 0 || t > self.ends.len() {
            return &[];
        }
        let start = if t == 1 { 0 } else { self.ends[t - 2] };
        &self.sources[start..self.ends[t - 1]]
    }

    pub fn total(&self) -> u64 {
        self.sources.len() as u64
    }

    pub fn extend_to(&mut self, horizon: u64) {
        while self.ends.len() < horizon as usize {
            self.ends.push(self.sources.len());
        }
    }

    /// The first `horizon` rounds.
    pub fn truncated(&self, horizon: u64) -> Self {
        let rounds = self.ends.len().min(horizon as usize);
        let len = if rounds == 0 { 0 } else { self.ends[rounds - 1] };
        Self {
            sources: self.sources[..len].to_vec(),
            ends: self.ends[..rounds].to_vec(),
        }
    }

    pub fn record(&mut self, round: u64, node: NodeId) {
        assert!(round >= 1, "rounds start at 1");
        self.extend_to(round);
        let t = round as usize - 1;
        self.sources.insert(self.ends[t], node);
        for end in &mut self.ends[t..] {
            *end += 1;
        }
    }

    /// `counts[e][t - 1]`: packets injected in round `t` whose route crosses
    /// the edge out of `e`. Rows for the sink stay zero.
    pub fn edge_counts(&self, network: &TreeNetwork) -> Result<Vec<Vec<u64>>> {
        let horizon = self.ends.len();
        let mut counts = vec![vec![0u64; horizon]; network.len()];
        for (t, sources) in self.rounds().enumerate() {
            for &v in sources {
                network.check_node(v)?;
                for e in network.edges_to_root(v) {
                    counts[e.0][t] += 1;
                }
            }
        }
        Ok(counts)
    }

    /// `round,node` records, one per injected packet.
    pub fn write_records<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "round,node")?;
        for (t, sources) in self.rounds().enumerate() {
            for v in sources {
                writeln!(out, "{},{}", t + 1, v)?;
            }
        }
        Ok(())
    }

    pub fn parse_records(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("round,node") {
            return Err(Error::Parse("expected `round,node` header".into()));
        }
        let mut trace = Self::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Parse(format!("line {}: expected `round,node`", i + 2));
            let (round, node) = line.split_once(',').ok_or_else(bad)?;
            let round: u64 = round.trim().parse().map_err(|_| bad())?;
            let node: usize = node.trim().parse().map_err(|_| bad())?;
            if round == 0 {
                return Err(bad());
            }
            trace.record(round, NodeId(node));
        }
        Ok(trace)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AuditVerdict<T> {
    Compliant,
    Violation {
        /// Edge out of this node.
        edge: NodeId,
        /// Window `[start, end)` in rounds.
        start: u64,
        end: u64,
        count: u64,
        allowed: T,
    },
}

impl<T> AuditVerdict<T> {
    pub fn is_compliant(&self) -> bool {
        matches!(self, AuditVerdict::Compliant)
    }
}

impl<T: fmt::Display> fmt::Display for AuditVerdict<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AuditVerdict::Compliant => f.write_str("compliant"),
            AuditVerdict::Violation {
                edge,
                start,
                end,
                count,
                allowed,
            } => write!(
                f,
                "violation: edge {edge} window [{start},{end}) count {count} > bound {allowed}"
            ),
        }
    }
}

fn prefix_sums(row: &[u64]) -> Vec<u64> {
    let mut prefix = Vec::with_capacity(row.len() + 1);
    prefix.push(0);
    let mut acc = 0;
    for &x in row {
        acc += x;
        prefix.push(acc);
    }
    prefix
}

/// Reference audit: every edge, every window. `O(T^2 |E|)`.
pub fn audit_exhaustive<T: Scalar>(
    trace: &InjectionTrace,
    network: &TreeNetwork,
    bound: &BurstinessBound<T>,
) -> Result<AuditVerdict<T>> {
    let counts = trace.edge_counts(network)?;
    let horizon = trace.horizon();
    for e in network.nodes().filter(|&v| !network.is_sink(v)) {
        let prefix = prefix_sums(&counts[e.0]);
        for start in 1..=horizon + 1 {
            for end in start..=horizon + 1 {
                let count = prefix[(end - 1) as usize] - prefix[(start - 1) as usize];
                let allowed = bound.allowance(end - start);
                if T::from_count(count) > allowed {
                    return Ok(AuditVerdict::Violation {
                        edge: e,
                        start,
                        end,
                        count,
                        allowed,
                    });
                }
            }
        }
    }
    Ok(AuditVerdict::Compliant)
}

/// Linear-time audit per edge via the tightest window.
///
/// With `S_j` the number of crossings in rounds `1..=j` and
/// `D_j = S_j - rho * j`, the window `[j + 1, j' + 1)` violates the bound iff
/// `D_j' - D_j > sigma`. A suffix maximum of `D` finds the earliest offending
/// start, and a forward scan from it the earliest end, so the reported
/// violation is the same one [`audit_exhaustive`] reports.
pub fn audit<T: Scalar>(
    trace: &InjectionTrace,
    network: &TreeNetwork,
    bound: &BurstinessBound<T>,
) -> Result<AuditVerdict<T>> {
    let counts = trace.edge_counts(network)?;
    let horizon = trace.horizon() as usize;
    let mut drift = vec![T::zero(); horizon + 1];
    let mut suffix_max = vec![T::zero(); horizon + 1];
    for e in network.nodes().filter(|&v| !network.is_sink(v)) {
        let prefix = prefix_sums(&counts[e.0]);
        for j in 0..=horizon {
            drift[j] = T::from_count(prefix[j]) - bound.rho * T::from_count(j as u64);
        }
        suffix_max[horizon] = drift[horizon];
        for j in (0..horizon).rev() {
            suffix_max[j] = if drift[j] > suffix_max[j + 1] {
                drift[j]
            } else {
                suffix_max[j + 1]
            };
        }
        let Some(j) = (0..=horizon).find(|&j| suffix_max[j] - drift[j] > bound.sigma) else {
            continue;
        };
        let jj = (j..=horizon)
            .find(|&jj| drift[jj] - drift[j] > bound.sigma)
            .expect("suffix maximum is attained");
        let (start, end) = (j as u64 + 1, jj as u64 + 1);
        return Ok(AuditVerdict::Violation {
            edge: e,
            start,
            end,
            count: prefix[jj] - prefix[j],
            allowed: bound.allowance(end - start),
        });
    }
    Ok(AuditVerdict::Compliant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn bound(rho: Rational, sigma: Rational) -> BurstinessBound<Rational> {
        BurstinessBound::new(rho, sigma).unwrap()
    }

    #[test]
    fn rejects_negative_parameters() {
        assert!(BurstinessBound::new(q(-1, 2), q(0, 1)).is_err());
        assert!(BurstinessBound::new(1.0f64, -0.5).is_err());
    }

    #[test]
    fn one_per_round_is_unit_rate() {
        let net = TreeNetwork::line(5, 1).unwrap();
        let trace = InjectionTrace::from_rounds(vec![vec![NodeId(0)]; 50]);
        let b = bound(q(1, 1), q(0, 1));
        assert_eq!(audit(&trace, &net, &b).unwrap(), AuditVerdict::Compliant);
        assert_eq!(audit_exhaustive(&trace, &net, &b).unwrap(), AuditVerdict::Compliant);
    }

    #[test]
    fn double_injection_violates_first_edge() {
        let net = TreeNetwork::line(5, 1).unwrap();
        let trace = InjectionTrace::from_rounds(vec![vec![NodeId(0), NodeId(0)]]);
        let expected = AuditVerdict::Violation {
            edge: NodeId(0),
            start: 1,
            end: 2,
            count: 2,
            allowed: q(1, 1),
        };
        let b = bound(q(1, 1), q(0, 1));
        assert_eq!(audit(&trace, &net, &b).unwrap(), expected);
        assert_eq!(audit_exhaustive(&trace, &net, &b).unwrap(), expected);
    }

    #[test]
    fn empty_trace_is_compliant() {
        let net = TreeNetwork::line(3, 1).unwrap();
        let b = bound(q(0, 1), q(0, 1));
        assert!(audit(&InjectionTrace::new(), &net, &b).unwrap().is_compliant());
        assert!(audit_exhaustive(&InjectionTrace::new(), &net, &b).unwrap().is_compliant());
    }

    #[test]
    fn half_rate_fails_on_long_windows() {
        let net = TreeNetwork::line(5, 1).unwrap();
        let trace = InjectionTrace::from_rounds(vec![vec![NodeId(0)]; 10]);
        let b = bound(q(1, 2), q(0, 1));
        let v = audit(&trace, &net, &b).unwrap();
        assert_eq!(v, audit_exhaustive(&trace, &net, &b).unwrap());
        assert!(!v.is_compliant());
    }

    #[test]
    fn sink_injections_cross_no_edge() {
        let net = TreeNetwork::line(3, 1).unwrap();
        let trace = InjectionTrace::from_rounds(vec![vec![NodeId(2); 9]]);
        assert!(audit(&trace, &net, &bound(q(0, 1), q(0, 1))).unwrap().is_compliant());
    }

    #[test]
    fn float_scalars_agree_on_dyadic_bounds() {
        let net = TreeNetwork::line(4, 1).unwrap();
        let trace = InjectionTrace::from_rounds(vec![
            vec![NodeId(0)],
            vec![],
            vec![NodeId(1), NodeId(0)],
            vec![NodeId(2)],
        ]);
        let fb = BurstinessBound::new(0.5f64, 1.0).unwrap();
        assert_eq!(
            audit(&trace, &net, &fb).unwrap(),
            audit_exhaustive(&trace, &net, &fb).unwrap()
        );
    }

    #[test]
    fn records_round_trip() {
        let mut trace = InjectionTrace::new();
        trace.record(1, NodeId(0));
        trace.record(3, NodeId(2));
        trace.record(3, NodeId(1));
        let mut buf = Vec::new();
        trace.write_records(&mut buf).unwrap();
        let parsed = InjectionTrace::parse_records(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(parsed, trace);
        assert!(InjectionTrace::parse_records("round,node\n0,1\n").is_err());
        assert!(InjectionTrace::parse_records("nope\n").is_err());
    }

    fn arb_trace(n: usize, horizon: usize) -> impl Strategy<Value = InjectionTrace> {
        prop::collection::vec(prop::collection::vec(0..n, 0..4), 0..horizon).prop_map(|rounds| {
            InjectionTrace::from_rounds(
                rounds
                    .into_iter()
                    .map(|r| r.into_iter().map(NodeId).collect())
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn fast_audit_matches_reference(
            trace in arb_trace(6, 30),
            rho_num in 0i64..8,
            rho_den in 1i64..4,
            sigma_num in 0i64..6,
            sigma_den in 1i64..3,
        ) {
            let net = TreeNetwork::line(6, 1).unwrap();
            let b = bound(q(rho_num, rho_den), q(sigma_num, sigma_den));
            prop_assert_eq!(
                audit(&trace, &net, &b).unwrap(),
                audit_exhaustive(&trace, &net, &b).unwrap()
            );
        }

        #[test]
        fn audit_is_monotone_in_the_bound(
            trace in arb_trace(5, 25),
            rho in 0i64..4,
            sigma in 0i64..4,
            extra_rho in 0i64..3,
            extra_sigma in 0i64..3,
        ) {
            let net = TreeNetwork::line(5, 1).unwrap();
            let tight = bound(q(rho, 2), q(sigma, 1));
            let loose = bound(q(rho + extra_rho, 2), q(sigma + extra_sigma, 1));
            if audit(&trace, &net, &tight).unwrap().is_compliant() {
                prop_assert!(audit(&trace, &net, &loose).unwrap().is_compliant());
            }
        }
    }
}
