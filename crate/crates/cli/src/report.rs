use std::fmt::Write;

use ccfom::certificates::{Verdict, VerificationReport};

use crate::table::{fmt_f64, fmt_point, TraceTable};

/// Human-readable verification report: one line per iteration, then every
/// check with its residual and tolerance.
pub fn verification_report(table: &TraceTable, report: &VerificationReport) -> String {
    let m = &table.meta;
    let mut out = String::new();
    let _ = writeln!(out, "ccfom verification report");
    let _ = writeln!(out, "problem_id: {}", m.problem_id);
    let _ = writeln!(out, "method: {}", m.method);
    let _ = writeln!(out, "iterations: {}", m.iterations);
    let _ = writeln!(out, "schedule: {}", m.schedule);
    let _ = writeln!(out, "x0: {}", fmt_point(&m.x0));
    let _ = writeln!(out, "eps_rel: {}  eps_abs: {}", fmt_f64(m.tolerances.eps_rel), fmt_f64(m.tolerances.eps_abs));
    if !report.certificate.requeried.is_empty() {
        let _ = writeln!(out, "re-queried subgradients at trace indices: {:?}", report.certificate.requeried);
    }
    let checks: Vec<_> = report.all_checks().collect();
    let fails = checks.iter().filter(|c| c.verdict == Verdict::Fail).count();
    let vacuous = checks.iter().filter(|c| c.verdict == Verdict::Vacuous).count();
    let _ = writeln!(out, "verdict: {}", report.verdict());
    let _ = writeln!(out, "checks: {}  failed: {fails}  vacuous: {vacuous}", checks.len());
    let _ = writeln!(out);
    let _ = writeln!(out, "[iterations]");
    for row in &table.rows {
        let _ = writeln!(
            out,
            "k={} f_xk={} lhs={} cert={} mu={} bound={} {}",
            row.k,
            fmt_f64(row.f_xk),
            row.lhs_k.map(fmt_f64).unwrap_or_default(),
            row.cert_k.map(|c| c.to_string()).unwrap_or_default(),
            row.mu_k.map(fmt_f64).unwrap_or_default(),
            row.theorem_bound_k.map(fmt_f64).unwrap_or_else(|| "n/a".into()),
            row.verdict
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "[checks]");
    for c in checks {
        let _ = writeln!(out, "{}", c.describe());
    }
    out
}
