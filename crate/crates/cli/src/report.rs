//! Trace serialization and small shared output helpers.

use std::fmt::Write as _;
use std::path::Path;

use fdsm::solver::{RunTrace, StopReason};

use crate::config::CliError;

pub const TRACE_HEADER: &str = "n,alpha,tau,eps,f_next,best_f,fix_residual,step_norm,max_subgrad_norm,max_iterate_norm,oracle_calls,elapsed_ms";

/// One CSV row per iteration. All columns except `elapsed_ms` are
/// deterministic for a fixed configuration and seed.
pub fn trace_csv(trace: &RunTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{:.3}",
            r.n,
            r.alpha,
            r.tau,
            r.eps,
            r.f_next,
            r.best_f,
            r.fix_residual,
            r.step_norm,
            r.max_subgrad_norm,
            r.max_iterate_norm,
            r.oracle_calls,
            r.elapsed * 1e3,
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<(), CliError> {
    std::fs::write(path, trace_csv(trace))
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn stop_reason_name(reason: StopReason) -> &'static str {
    match reason {
        StopReason::MaxIters => "max_iters",
        StopReason::TimeLimit => "time_limit",
    }
}

/// Formats a PSNR for display; the infinite case prints as `inf`.
pub fn db(value: f64) -> String {
    if value.is_infinite() {
        "inf".to_string()
    } else {
        format!("{value:.2}")
    }
}
