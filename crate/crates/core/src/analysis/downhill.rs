//! LOCAL-DOWNHILL state sequence on a line: init/front/tail, f(k), Δ_k.
//!
//! `S_0` is the starting state and `S_j` (`j >= 1`) the loads right after
//! the injections of round `j`. `f(k)` is the first `j >= 1` with
//! `load(v1) >= k`, so `f(0) = f(1) = 1` under one injection per round.

use crate::engine::ExecutionTrace;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownhillSequenceLog {
    /// `states[j]` is `S_j`, loads of `v1, v2, ...` with the sink last.
    pub states: Vec<Vec<usize>>,
}

/// Maximal prefix of nonzero loads.
pub fn init(state: &[usize]) -> &[usize] {
    let end = state.iter().position(|&l| l == 0).unwrap_or(state.len());
    &state[..end]
}

pub fn front(state: &[usize]) -> Option<usize> {
    init(state).first().copied()
}

pub fn tail(state: &[usize]) -> &[usize] {
    let i = init(state);
    if i.is_empty() {
        i
    } else {
        &i[1..]
    }
}

impl DownhillSequenceLog {
    /// Reads `S_j` off a recorded trace: the state right before the first
    /// forwarding ministep of each round.
    pub fn from_trace(trace: &ExecutionTrace) -> Result<Self> {
        let first = trace
            .records
            .first()
            .filter(|r| r.phase == "start")
            .ok_or_else(|| Error::InvalidArgument("trace does not start with a start record".into()))?;
        let mut states = vec![first.loads.clone()];
        for pair in trace.records.windows(2) {
            if pair[1].phase == "forward1" {
                states.push(pair[0].loads.clone());
            }
        }
        Ok(Self { states })
    }

    pub fn rounds(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    /// `f(k)`, or `None` if `load(v1)` never reached `k`.
    pub fn f(&self, k: usize) -> Option<usize> {
        (1..self.states.len()).find(|&j| self.states[j][0] >= k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownhillCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownhillMetrics {
    /// `f[k]` for every `k` reached, starting at `k = 0`.
    pub f: Vec<usize>,
    /// `delta[k - 1]` is `Δ_k = f(k) - f(k-1)`.
    pub delta: Vec<usize>,
    pub max_width: usize,
    pub checks: Vec<DownhillCheck>,
    /// Set when `init` reaches the last node before the sink, where the
    /// line stops behaving like an unbounded one.
    pub inconclusive: Option<String>,
}

impl DownhillMetrics {
    pub fn passed(&self) -> bool {
        self.inconclusive.is_none() && self.checks.iter().all(|c| c.passed)
    }

    /// Largest `k` with `f(k)` known.
    pub fn max_k(&self) -> usize {
        self.f.len().saturating_sub(1)
    }
}

fn check(name: &'static str, failure: Option<String>, ok: String) -> DownhillCheck {
    DownhillCheck {
        name,
        passed: failure.is_none(),
        detail: failure.unwrap_or(ok),
    }
}

pub fn downhill_metrics(log: &DownhillSequenceLog) -> DownhillMetrics {
    let s = &log.states;
    let mut f = Vec::new();
    while let Some(j) = log.f(f.len()) {
        f.push(j);
    }
    let delta: Vec<usize> = f.windows(2).map(|w| w[1] - w[0]).collect();
    let k_max = f.len().saturating_sub(1);

    let quadratic = (1..=k_max)
        .find(|&k| f[k] != k * k - k + 1)
        .map(|k| format!("f({k}) = {}, expected {}", f[k], k * k - k + 1));
    let intervals = (1..k_max)
        .find(|&k| delta[k] != delta[k - 1] + 2)
        .map(|k| format!("Δ_{} = {}, Δ_{k} = {}", k + 1, delta[k], delta[k - 1]));
    let structure = (1..k_max).find_map(|k| {
        let (a, b) = (f[k], f[k + 1]);
        if tail(&s[b]) != init(&s[a - 1]) {
            Some(format!("tail(S_{b}) != init(S_{})", a - 1))
        } else if tail(&s[b - 1]) != init(&s[a]) {
            Some(format!("tail(S_{}) != init(S_{a})", b - 1))
        } else {
            None
        }
    });
    let width = s.iter().enumerate().skip(1).find_map(|(j, st)| {
        (init(st).len() > st[0] + 1).then(|| format!("S_{j}: width {} with load(v1) = {}", init(st).len(), st[0]))
    });
    let front_two = match f.get(2) {
        None => Some("load(v1) never reached 2".to_string()),
        Some(&j) => {
            let st = &s[j];
            let ok = st.len() >= 3 && st[..3] == [2, 0, 1] && st[3..].iter().all(|&l| l == 0);
            (!ok).then(|| format!("first state with front 2 is {st:?}"))
        }
    };
    let max_width = s.iter().map(|st| init(st).len()).max().unwrap_or(0);
    let nodes = s.first().map_or(0, Vec::len);
    let inconclusive = (max_width + 1 >= nodes).then(|| {
        format!("the initial segment reached width {max_width} on a line of {nodes} nodes")
    });

    let checks = vec![
        check("quadratic", quadratic, format!("f(k) = k²-k+1 for 1 <= k <= {k_max}")),
        check("intervals", intervals, format!("Δ_(k+1) = Δ_k + 2 for 1 <= k < {k_max}")),
        check("structure", structure, format!("tail/init identities for 1 <= k < {k_max}")),
        check("width", width, format!("width(init) <= load(v1) + 1, max width {max_width}")),
        check("front-two", front_two, "first state with front 2 is (2,0,1,0,...)".into()),
    ];
    DownhillMetrics {
        f,
        delta,
        max_width,
        checks,
        inconclusive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments() {
        let s = [3, 2, 0, 1, 0];
        assert_eq!(init(&s), &[3, 2]);
        assert_eq!(front(&s), Some(3));
        assert_eq!(tail(&s), &[2]);
        assert_eq!(init(&[0, 1]), &[] as &[usize]);
        assert_eq!(tail(&[0, 1]), &[] as &[usize]);
        assert_eq!(front(&[0, 1]), None);
    }

    #[test]
    fn first_states_by_hand() {
        let log = DownhillSequenceLog {
            states: vec![
                vec![0, 0, 0, 0, 0],
                vec![1, 0, 0, 0, 0],
                vec![1, 1, 0, 0, 0],
                vec![2, 0, 1, 0, 0],
            ],
        };
        assert_eq!(log.f(0), Some(1));
        assert_eq!(log.f(1), Some(1));
        assert_eq!(log.f(2), Some(3));
        let m = downhill_metrics(&log);
        assert_eq!(m.f, vec![1, 1, 3]);
        assert_eq!(m.delta, vec![0, 2]);
        assert!(m.passed(), "{m:?}");
    }
}
