//! Trace and summary CSV writers. Floats are written with 17 significant
//! digits so a re-parse reproduces them exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::experiment::SummaryRow;
use crate::attack::AttackTrace;

pub const TRACE_HEADER: &str = "t,M_t,delta_t,epsilon_t,queries,distortion,agree_count,step_retries,binsearch_steps";
const SUMMARY_HEADER: &str = "oracle,sampler,budget,statistic,distortion,repetitions,failures";

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_to_csv(trace: &AttackTrace) -> String {
    let mut out = String::with_capacity(64 * (trace.rows.len() + 2));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.t,
            r.samples,
            float(r.delta),
            float(r.epsilon),
            r.queries,
            float(r.distortion),
            r.agree_count,
            r.step_retries,
            r.binsearch_steps
        );
    }
    let _ = writeln!(out, "# status={}", trace.status);
    out
}

pub fn emit_trace_csv(trace: &AttackTrace, path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, trace_to_csv(trace))
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_owned()
    }
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            quote(&r.oracle),
            r.sampler,
            r.budget,
            r.statistic,
            float(r.distortion),
            r.repetitions,
            r.failures
        );
    }
    out
}

pub fn write_summary_csv(rows: &[SummaryRow], path: impl AsRef<Path>) -> std::io::Result<()> {
    std::fs::write(path, summary_to_csv(rows))
}
