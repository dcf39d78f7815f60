//! Plain-text output helpers shared by the analyses and the command line.
//!
//! Floats are written with 17 significant digits in scientific notation, so
//! files round-trip exactly and identical runs produce identical bytes.

use std::io::{self, Write};

use crate::ergotropy::WorkRecord;
use crate::nonmarkov::BlpResult;

pub fn fmt_f64(x: f64) -> String {
    // normalize negative zero so sign noise never changes the bytes
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

pub const WORK_HEADER: &str = "quantity,E,n,k,delta_t,value,starts,best_start,converged";

pub fn write_work_records<W: Write>(mut out: W, rows: &[WorkRecord]) -> io::Result<()> {
    writeln!(out, "{WORK_HEADER}")?;
    for r in rows {
        let (starts, best, converged) = r.optimizer_summary();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.quantity,
            fmt_f64(r.entanglement.value()),
            r.n,
            fmt_f64(r.k),
            fmt_f64(r.delta_t),
            fmt_f64(r.value),
            starts,
            best,
            converged
        )?;
    }
    Ok(())
}

pub const BLP_HEADER: &str = "delta_t,Q_N,grid_points,starts,converged";

pub fn write_blp_results<W: Write>(mut out: W, rows: &[BlpResult]) -> io::Result<()> {
    writeln!(out, "{BLP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            fmt_f64(r.delta_t),
            fmt_f64(r.q_n),
            r.grid_points,
            r.report.starts(),
            r.report.converged
        )?;
    }
    Ok(())
}

/// Per-pair distinguishability dump: `delta_t,t,D`.
pub fn write_blp_traces<W: Write>(mut out: W, rows: &[BlpResult]) -> io::Result<()> {
    writeln!(out, "delta_t,t,D")?;
    for r in rows {
        for (i, d) in r.lambda_trace.iter().enumerate() {
            writeln!(out, "{},{},{}", fmt_f64(r.delta_t), fmt_f64(i as f64 * r.grid_step), fmt_f64(*d))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -3.0, 1.0 / 3.0, 6.02214076e23, 2.061153622438558e-9] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(-0.0), fmt_f64(0.0));
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }
}
