//! Trace CSV, schema v1.
//!
//! ```text
//! # ccfom-csv v1
//! # problem_id=quad:diag=1
//! # method=gradient
//! # ...
//! k,f_xk,lhs_k,cert_k,vacuous_flag,mu_k,theta_k,theorem_bound_k,residual_chain_max,residual_induction,verdict,t_k,x_k,y_k,g_k
//! ```
//!
//! Rows cover the certificate range (`k = 0..=K` for the subgradient
//! method, `k = 1..=K` otherwise). Points are `;`-separated coordinates.
//! Every float is written with 17 significant digits, so a trace read back
//! is bitwise identical to the one written. Empty cells mean "not defined
//! at this k".

use std::io::Write;
use std::path::Path;

use ccfom::certificates::{SummaryRow, Verdict, VerificationReport};
use ccfom::methods::{MethodKind, MethodTrace, ThetaSequence};
use ccfom::{ExtendedReal, Point, Tolerances};

use crate::error::{CliError, CliResult};

pub const SCHEMA_LINE: &str = "# ccfom-csv v1";

pub const COLUMNS: [&str; 15] = [
    "k",
    "f_xk",
    "lhs_k",
    "cert_k",
    "vacuous_flag",
    "mu_k",
    "theta_k",
    "theorem_bound_k",
    "residual_chain_max",
    "residual_induction",
    "verdict",
    "t_k",
    "x_k",
    "y_k",
    "g_k",
];

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn fmt_point(p: &Point) -> String {
    p.as_slice().iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(";")
}

fn parse_f64(s: &str, what: &str) -> CliResult<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "nan" => Ok(f64::NAN),
        t => t.parse().map_err(|_| CliError::Schema(format!("{what}: `{s}` is not a number"))),
    }
}

fn parse_opt(s: &str, what: &str) -> CliResult<Option<f64>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(s, what).map(Some)
    }
}

pub fn parse_point(s: &str, what: &str) -> CliResult<Point> {
    let coords = s.split(';').map(|c| parse_f64(c, what)).collect::<CliResult<Vec<_>>>()?;
    Point::new(coords).map_err(|e| CliError::Schema(format!("{what}: {e}")))
}

fn parse_opt_point(s: &str, what: &str) -> CliResult<Option<Point>> {
    if s.trim().is_empty() {
        Ok(None)
    } else {
        parse_point(s, what).map(Some)
    }
}

/// Header fields needed to rebuild the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta {
    pub problem_id: String,
    pub method: MethodKind,
    pub iterations: usize,
    pub x0: Point,
    pub f_x0: f64,
    /// `t_0`; the rows of the smooth methods start at `k = 1`.
    pub t0: f64,
    pub schedule: String,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub f_xk: f64,
    pub lhs_k: Option<f64>,
    pub cert_k: Option<ExtendedReal>,
    pub vacuous: bool,
    pub mu_k: Option<f64>,
    pub theta_k: Option<f64>,
    pub theorem_bound_k: Option<f64>,
    pub residual_chain_max: Option<f64>,
    pub residual_induction: Option<f64>,
    pub verdict: String,
    pub t_k: Option<f64>,
    pub x_k: Point,
    pub y_k: Option<Point>,
    pub g_k: Option<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    pub meta: TraceMeta,
    pub rows: Vec<TraceRow>,
}

/// `FAIL chain_a_lhs_le_certificate k=3 residual=… tol=…`, or `PASS`.
pub fn verdict_text(row: &SummaryRow) -> String {
    match (&row.first_issue, row.verdict) {
        (Some(c), Verdict::Fail | Verdict::Vacuous) => {
            let at = if c.at.is_empty() { String::new() } else { format!(" at={}", c.at) };
            format!(
                "{} {}{at} k={} residual={} tol={}",
                row.verdict,
                c.kind,
                c.k,
                fmt_f64(c.residual),
                fmt_f64(c.tolerance)
            )
        }
        _ => row.verdict.to_string(),
    }
}

impl TraceTable {
    /// The stored part of `trace`; derived columns are left empty until
    /// [`TraceTable::annotate`].
    pub fn from_trace(trace: &MethodTrace, schedule: &str, tolerances: Tolerances) -> CliResult<Self> {
        let horizon = trace.horizon;
        let start = trace.method.start_index();
        let meta = TraceMeta {
            problem_id: trace.problem_id.clone(),
            method: trace.method,
            iterations: horizon,
            x0: trace.x0().clone(),
            f_x0: trace.fx[0],
            t0: trace.t[0],
            schedule: schedule.to_string(),
            tolerances,
        };
        let theta = trace.theta.as_ref();
        let rows = (start..=horizon)
            .map(|k| TraceRow {
                k,
                f_xk: trace.fx[k],
                lhs_k: None,
                cert_k: None,
                vacuous: false,
                mu_k: None,
                theta_k: theta.and_then(|t| t.get(k)),
                theorem_bound_k: None,
                residual_chain_max: None,
                residual_induction: None,
                verdict: String::new(),
                t_k: trace.t.get(k).copied(),
                x_k: trace.x[k].clone(),
                y_k: trace.y.as_ref().map(|y| y[k].clone()),
                g_k: trace.g.get(k).cloned().flatten(),
            })
            .collect();
        Ok(TraceTable { meta, rows })
    }

    /// Rebuilds the trace. The smooth methods' `g_0` is not stored and is
    /// left for the certificate engine to re-query.
    pub fn to_trace(&self) -> CliResult<MethodTrace> {
        let meta = &self.meta;
        let method = meta.method;
        let start = method.start_index();
        let horizon = meta.iterations;
        if self.rows.is_empty() {
            return Err(CliError::Schema("trace has no rows".into()));
        }
        if self.rows.len() != horizon + 1 - start {
            return Err(CliError::Schema(format!(
                "iterations={horizon} needs {} rows, found {}",
                horizon + 1 - start,
                self.rows.len()
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.k != start + i {
                return Err(CliError::Schema(format!("row {i} has k={}, expected {}", row.k, start + i)));
            }
            if row.x_k.dim() != meta.x0.dim() {
                return Err(CliError::Schema(format!("x_k at k={} has the wrong dimension", row.k)));
            }
        }
        let steps = if method == MethodKind::Subgradient { horizon + 1 } else { horizon };
        let step_at = |k: usize| -> CliResult<f64> {
            if k == 0 && start == 1 {
                return Ok(meta.t0);
            }
            self.rows[k - start].t_k.ok_or_else(|| CliError::Schema(format!("missing t_k at k={k}")))
        };
        let t = (0..steps).map(step_at).collect::<CliResult<Vec<_>>>()?;

        let mut x = Vec::with_capacity(horizon + 1);
        let mut fx = Vec::with_capacity(horizon + 1);
        let mut g: Vec<Option<Point>> = Vec::with_capacity(steps);
        if start == 1 {
            x.push(meta.x0.clone());
            fx.push(meta.f_x0);
            g.push(None);
        }
        for row in &self.rows {
            x.push(row.x_k.clone());
            fx.push(row.f_xk);
            if g.len() < steps {
                g.push(row.g_k.clone());
            }
        }
        let (y, theta) = match method {
            MethodKind::Accelerated | MethodKind::ProxAccelerated => {
                let mut y = vec![meta.x0.clone()];
                let mut theta = vec![1.0];
                for row in &self.rows {
                    y.push(row.y_k.clone().ok_or_else(|| CliError::Schema(format!("missing y_k at k={}", row.k)))?);
                    theta.push(row.theta_k.ok_or_else(|| CliError::Schema(format!("missing theta_k at k={}", row.k)))?);
                }
                let theta = ThetaSequence::from_values(theta).map_err(|e| CliError::Schema(e.to_string()))?;
                (Some(y), Some(theta))
            }
            _ => (None, None),
        };
        Ok(MethodTrace {
            method,
            problem_id: meta.problem_id.clone(),
            horizon,
            x,
            fx,
            y,
            g,
            t,
            theta,
        })
    }

    /// Fills the derived columns from a verification report.
    pub fn annotate(&mut self, report: &VerificationReport) {
        for (row, summary) in self.rows.iter_mut().zip(&report.rows) {
            debug_assert_eq!(row.k, summary.k);
            row.lhs_k = Some(summary.lhs);
            row.cert_k = Some(summary.certificate);
            row.vacuous = summary.vacuous;
            row.mu_k = Some(summary.mu);
            row.theta_k = summary.theta;
            row.theorem_bound_k = summary.theorem_bound;
            row.residual_chain_max = summary.residual_chain_max;
            row.residual_induction = summary.residual_induction;
            row.verdict = verdict_text(summary);
        }
    }

    pub fn header_lines(&self) -> Vec<String> {
        let m = &self.meta;
        vec![
            SCHEMA_LINE.to_string(),
            format!("# problem_id={}", m.problem_id),
            format!("# method={}", m.method),
            format!("# iterations={}", m.iterations),
            format!("# schedule={}", m.schedule),
            format!("# x0={}", fmt_point(&m.x0)),
            format!("# f_x0={}", fmt_f64(m.f_x0)),
            format!("# t0={}", fmt_f64(m.t0)),
            format!("# eps_rel={}", fmt_f64(m.tolerances.eps_rel)),
            format!("# eps_abs={}", fmt_f64(m.tolerances.eps_abs)),
        ]
    }

    pub fn row_record(row: &TraceRow) -> Vec<String> {
        vec![
            row.k.to_string(),
            fmt_f64(row.f_xk),
            fmt_opt(row.lhs_k),
            row.cert_k.map(|c| fmt_f64(c.to_f64())).unwrap_or_default(),
            if row.vacuous { "1".into() } else { "0".into() },
            fmt_opt(row.mu_k),
            fmt_opt(row.theta_k),
            fmt_opt(row.theorem_bound_k),
            fmt_opt(row.residual_chain_max),
            fmt_opt(row.residual_induction),
            row.verdict.clone(),
            fmt_opt(row.t_k),
            fmt_point(&row.x_k),
            row.y_k.as_ref().map(fmt_point).unwrap_or_default(),
            row.g_k.as_ref().map(fmt_point).unwrap_or_default(),
        ]
    }

    pub fn write_to(&self, out: &mut impl Write) -> CliResult<()> {
        let io = |e: std::io::Error| CliError::io(Path::new("<csv>"), e);
        for line in self.header_lines() {
            writeln!(out, "{line}").map_err(io)?;
        }
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| CliError::Schema(e.to_string());
        w.write_record(COLUMNS).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(Self::row_record(row)).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf).map_err(|e| CliError::io(path, e))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim_end) != Some(SCHEMA_LINE) {
            return Err(CliError::Schema(format!("first line must be `{SCHEMA_LINE}`")));
        }
        let mut fields = std::collections::HashMap::new();
        let mut body_start = SCHEMA_LINE.len() + 1;
        for line in text.lines().skip(1) {
            let Some(rest) = line.strip_prefix('#') else { break };
            body_start += line.len() + 1;
            if let Some((k, v)) = rest.trim().split_once('=') {
                fields.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        let get = |key: &str| {
            fields.get(key).cloned().ok_or_else(|| CliError::Schema(format!("header is missing `{key}`")))
        };
        let method: MethodKind = get("method")?.parse().map_err(|e: ccfom::Error| CliError::Schema(e.to_string()))?;
        let meta = TraceMeta {
            problem_id: get("problem_id")?,
            method,
            iterations: get("iterations")?
                .parse()
                .map_err(|_| CliError::Schema("iterations is not an integer".into()))?,
            x0: parse_point(&get("x0")?, "x0")?,
            f_x0: parse_f64(&get("f_x0")?, "f_x0")?,
            t0: parse_f64(&get("t0")?, "t0")?,
            schedule: fields.get("schedule").cloned().unwrap_or_default(),
            tolerances: Tolerances::new(
                parse_f64(&get("eps_rel")?, "eps_rel")?,
                parse_f64(&get("eps_abs")?, "eps_abs")?,
            ),
        };

        let body = text.get(body_start.min(text.len())..).unwrap_or_default();
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let headers = reader.headers().map_err(|e| CliError::Schema(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != COLUMNS {
            return Err(CliError::Schema(format!("unexpected columns: {}", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let r = record.map_err(|e| CliError::Schema(e.to_string()))?;
            let k: usize = r[0].trim().parse().map_err(|_| CliError::Schema(format!("bad k `{}`", &r[0])))?;
            let what = |c: &str| format!("{c} at k={k}");
            rows.push(TraceRow {
                k,
                f_xk: parse_f64(&r[1], &what("f_xk"))?,
                lhs_k: parse_opt(&r[2], &what("lhs_k"))?,
                cert_k: parse_opt(&r[3], &what("cert_k"))?.map(ExtendedReal::from),
                vacuous: r[4].trim() == "1",
                mu_k: parse_opt(&r[5], &what("mu_k"))?,
                theta_k: parse_opt(&r[6], &what("theta_k"))?,
                theorem_bound_k: parse_opt(&r[7], &what("theorem_bound_k"))?,
                residual_chain_max: parse_opt(&r[8], &what("residual_chain_max"))?,
                residual_induction: parse_opt(&r[9], &what("residual_induction"))?,
                verdict: r[10].to_string(),
                t_k: parse_opt(&r[11], &what("t_k"))?,
                x_k: parse_point(&r[12], &what("x_k"))?,
                y_k: parse_opt_point(&r[13], &what("y_k"))?,
                g_k: parse_opt_point(&r[14], &what("g_k"))?,
            });
        }
        if rows.is_empty() {
            return Err(CliError::Schema("trace has no rows".into()));
        }
        Ok(TraceTable { meta, rows })
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
