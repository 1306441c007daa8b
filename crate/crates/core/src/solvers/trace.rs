use std::io::{self, Write};

use super::TraceRow;

pub const TRACE_HEADER: &str = "iteration,grad_norm,objective,train_auc,test_auc";

fn float(value: f64) -> String {
    format!("{value:.16e}")
}

fn optional(value: Option<f64>) -> String {
    value.map(float).unwrap_or_default()
}

/// Writes the trace as CSV with 17 significant digits; absent AUC columns are
/// left empty.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for row in trace {
        writeln!(
            out,
            "{},{},{},{},{}",
            row.iteration,
            float(row.grad_norm),
            float(row.objective),
            optional(row.train_auc),
            optional(row.test_auc)
        )?;
    }
    Ok(())
}
