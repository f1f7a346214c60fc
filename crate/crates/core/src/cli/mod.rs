//! Front end behind the `fie` binary.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 property violation
//! (checker failure, capacity breach, audit violation, failed criterion).

pub mod scenario;

pub use scenario::{parse_tree, PatternSpec, Scenario, TopologySpec};

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::adversary::{audit, AuditVerdict};
use crate::engine::{injections_from_csv, Execution, ExecutionTrace};
use crate::error::{Error, Result};
use crate::scalar::parse_rational;
use crate::verify::{exit_code, run_suite, SuiteOptions, Status};
use crate::{Bound, Rational};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VIOLATION: u8 = 2;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: ExecutionTrace,
    /// First checker failure or capacity breach, which ends the run.
    pub violation: Option<Error>,
    /// Audit of the completed rounds, when the scenario has a bound.
    pub audit: Option<AuditVerdict<Rational>>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> u8 {
        let audit_ok = self.audit.as_ref().is_none_or(AuditVerdict::is_compliant);
        if self.violation.is_none() && audit_ok {
            EXIT_OK
        } else {
            EXIT_VIOLATION
        }
    }
}

/// Runs a scenario with its checkers attached. Errors are usage errors;
/// property violations are reported in the outcome.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutcome> {
    let network = scenario.network()?;
    let pattern = scenario.pattern(&network)?;
    let mut ex = Execution::new(network.clone(), pattern, scenario.policy.build()).with_recording(true);
    for kind in &scenario.checkers {
        ex.attach(kind.build(scenario.capacity, scenario.sigma_floor())?);
    }
    let violation = match ex.run(scenario.rounds) {
        Ok(_) => None,
        Err(e @ (Error::CheckerViolation { .. } | Error::Capacity { .. })) => Some(e),
        Err(e) => return Err(e),
    };
    let trace = ex.trace();
    let audit = match &scenario.bound {
        Some(bound) => Some(audit(&trace.injections.truncated(trace.summary.rounds), &network, bound)?),
        None => None,
    };
    Ok(RunOutcome { trace, violation, audit })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

fn report_error(err: &mut dyn Write, e: &Error) -> u8 {
    let _ = writeln!(err, "error: {e}");
    EXIT_USAGE
}

/// `fie run`: the trace is written even when a checker fails.
pub fn cmd_run(
    scenario_path: &Path,
    trace_path: Option<&Path>,
    checkers: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> u8 {
    let outcome = Scenario::load(scenario_path)
        .and_then(|s| match checkers {
            Some(list) => s.with_checkers(list),
            None => Ok(s),
        })
        .and_then(|s| {
            let outcome = run_scenario(&s)?;
            if let Some(path) = trace_path.or(s.trace.as_deref()) {
                write_file(path, &outcome.trace.to_csv_string())?;
            }
            Ok(outcome)
        });
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => return report_error(err, &e),
    };
    let mut summary = Vec::new();
    outcome
        .trace
        .summary
        .write_text(&mut summary)
        .expect("writing to a Vec cannot fail");
    let _ = out.write_all(&summary);
    if let Some(v) = &outcome.audit {
        let _ = writeln!(out, "audit: {v}");
    }
    if let Some(v) = &outcome.violation {
        let _ = writeln!(out, "violation: {v}");
    }
    outcome.exit_code()
}

/// Audits the injections recorded in an execution trace file.
pub fn audit_trace_file(path: &Path, bound: &Bound) -> Result<AuditVerdict<Rational>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    let (network, injections) = injections_from_csv(&text)?;
    audit(&injections, &network, bound)
}

/// `fie audit`: prints `compliant` or the first violation.
pub fn cmd_audit(trace_path: &Path, rho: &str, sigma: &str, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let verdict = parse_rational(rho)
        .and_then(|r| Ok((r, parse_rational(sigma)?)))
        .and_then(|(r, s)| Bound::new(r, s))
        .and_then(|b| audit_trace_file(trace_path, &b));
    match verdict {
        Ok(v) => {
            let _ = writeln!(out, "{v}");
            if v.is_compliant() {
                EXIT_OK
            } else {
                EXIT_VIOLATION
            }
        }
        Err(e) => report_error(err, &e),
    }
}

/// `fie verify`: one line per criterion, then a tally.
pub fn cmd_verify(opts: &SuiteOptions, out: &mut dyn Write) -> u8 {
    let reports = run_suite(opts);
    for r in &reports {
        let _ = writeln!(out, "{r}");
    }
    let passed = reports.iter().filter(|r| r.status == Status::Pass).count();
    let _ = writeln!(out, "{passed}/{} criteria passed", reports.len());
    if reports.is_empty() {
        let _ = writeln!(out, "no criterion matches the filter");
        return EXIT_USAGE;
    }
    exit_code(&reports)
}
