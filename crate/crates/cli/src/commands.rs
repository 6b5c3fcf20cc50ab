use std::path::{Path, PathBuf};

use ccfom::certificates::{default_test_points, verify_run, Verdict, VerificationReport};
use ccfom::methods::{run_accelerated, run_gradient, run_subgradient, MethodKind, StepSchedule};
use ccfom::proxprobe::{
    probe, random_lasso_instances, CompositeProblem, ProbeRun, ProbeSummary, CONJECTURE, DUAL_FEED,
};
use ccfom::{parse_problem, Point, Problem, Tolerances};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Overrides, SweepConfig};
use crate::error::{CliError, CliResult, EXIT_PASS, EXIT_VERIFY_FAIL};
use crate::report::verification_report;
use crate::svg::{self, Series};
use crate::table::{fmt_f64, fmt_opt, fmt_point, TraceTable, COLUMNS, SCHEMA_LINE};

/// A verified run and where its artifacts went.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub table: TraceTable,
    pub verification: VerificationReport,
    pub csv: PathBuf,
    pub report: PathBuf,
    pub svg: Option<PathBuf>,
}

fn schedule_label(s: &StepSchedule) -> String {
    match s {
        StepSchedule::Constant(t) => format!("constant:t={t}"),
        StepSchedule::HorizonSqrt(_) => "horizon_sqrt".into(),
        StepSchedule::InverseL => "inverse_L".into(),
        StepSchedule::Explicit(v) => {
            format!("explicit:{}", v.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(","))
        }
    }
}

fn check_compatible(p: &dyn Problem, method: MethodKind) -> CliResult<()> {
    match method {
        MethodKind::Subgradient if p.lipschitz_f().is_none() => Err(CliError::Config(format!(
            "subgradient method needs a Lipschitz constant G; {} has none",
            p.id()
        ))),
        MethodKind::Gradient | MethodKind::Accelerated if p.lipschitz_grad().is_none() => Err(CliError::Config(
            format!("{method} needs a gradient Lipschitz constant L; {} has none", p.id()),
        )),
        MethodKind::ProxAccelerated => {
            Err(CliError::Config("prox_accelerated runs through the conjecture probe".into()))
        }
        _ => Ok(()),
    }
}

/// Verifies a stored trace, returning it with the derived columns filled in.
pub fn verify_table(table: &TraceTable, tolerances: Tolerances) -> CliResult<(TraceTable, VerificationReport)> {
    let trace = table.to_trace()?;
    let p = parse_problem(&table.meta.problem_id)?;
    if table.meta.x0.dim() != p.dim() {
        return Err(CliError::Schema(format!("x0 has dimension {}, problem has {}", table.meta.x0.dim(), p.dim())));
    }
    let test_points = default_test_points(p.as_ref(), &trace);
    let report = verify_run(&trace, p.as_ref(), &test_points, &tolerances)?;
    let mut annotated = table.clone();
    annotated.meta.tolerances = tolerances;
    annotated.annotate(&report);
    Ok((annotated, report))
}

/// Runs the method and verifies the trace as it will be stored, so that
/// `verify` on the written CSV reproduces the verdicts exactly.
pub fn execute(cfg: &ExperimentConfig) -> CliResult<(TraceTable, VerificationReport)> {
    let p = parse_problem(&cfg.problem_id)?;
    check_compatible(p.as_ref(), cfg.method)?;
    let x0 = cfg.x0.resolve(p.dim())?;
    let schedule = cfg.step_schedule()?;
    let trace = match cfg.method {
        MethodKind::Subgradient => run_subgradient(p.as_ref(), &x0, &schedule, cfg.iterations)?,
        MethodKind::Gradient => run_gradient(p.as_ref(), &x0, cfg.iterations)?,
        MethodKind::Accelerated => run_accelerated(p.as_ref(), &x0, cfg.iterations)?,
        MethodKind::ProxAccelerated => unreachable!("rejected by check_compatible"),
    };
    let table = TraceTable::from_trace(&trace, &schedule_label(&schedule), cfg.tolerances)?;
    verify_table(&table, cfg.tolerances)
}

fn exit_for(report: &VerificationReport) -> i32 {
    if report.verdict() == Verdict::Fail {
        EXIT_VERIFY_FAIL
    } else {
        EXIT_PASS
    }
}

fn output_path(out: &Path, configured: &Option<PathBuf>, default: &str) -> PathBuf {
    out.join(configured.clone().unwrap_or_else(|| PathBuf::from(default)))
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_table(path: &Path, table: &TraceTable) -> CliResult<()> {
    let mut buf = Vec::new();
    table.write_to(&mut buf)?;
    write_file(path, &String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Suboptimality curve (running minimum for the subgradient method) and the
/// matching theorem bound, both against `k ≥ 1`.
fn rate_series(table: &TraceTable, label: &str, color: usize) -> Vec<Series> {
    let Ok(p) = parse_problem(&table.meta.problem_id) else { return Vec::new() };
    let Some(fbar) = p.optimal_value() else { return Vec::new() };
    let mut best = f64::INFINITY;
    let mut gap = Vec::new();
    let mut bound = Vec::new();
    for row in &table.rows {
        best = if table.meta.method == MethodKind::Subgradient { best.min(row.f_xk) } else { row.f_xk };
        if row.k >= 1 {
            gap.push((row.k as f64, best - fbar));
            if let Some(b) = row.theorem_bound_k {
                bound.push((row.k as f64, b));
            }
        }
    }
    vec![
        Series { label: label.to_string(), points: gap, dashed: false, color },
        Series { label: format!("{label} bound"), points: bound, dashed: true, color },
    ]
}

pub fn cmd_run(cfg: &ExperimentConfig, out: &Path) -> CliResult<RunOutcome> {
    let (table, verification) = execute(cfg)?;
    let csv = output_path(out, &cfg.csv, "trace.csv");
    let report = output_path(out, &cfg.report, "report.txt");
    write_table(&csv, &table)?;
    write_file(&report, &verification_report(&table, &verification))?;
    let svg = match &cfg.svg {
        Some(_) => {
            let path = output_path(out, &cfg.svg, "");
            let title = format!("{} on {}", cfg.method, cfg.problem_id);
            let series = rate_series(&table, cfg.method.as_str(), 0);
            write_file(&path, &svg::render(&title, "k", "f - f*", &series))?;
            Some(path)
        }
        None => None,
    };
    Ok(RunOutcome { exit_code: exit_for(&verification), table, verification, csv, report, svg })
}

/// Re-runs every check on a stored trace. Tolerances come from the trace
/// header unless overridden.
pub fn cmd_verify(trace_csv: &Path, out: &Path, overrides: &Overrides) -> CliResult<RunOutcome> {
    let table = TraceTable::read(trace_csv)?;
    let tol = Tolerances::new(
        overrides.eps_rel.unwrap_or(table.meta.tolerances.eps_rel),
        overrides.eps_abs.unwrap_or(table.meta.tolerances.eps_abs),
    );
    let (annotated, verification) = verify_table(&table, tol)?;
    let csv = out.join("verified.csv");
    let report = out.join("verify_report.txt");
    write_table(&csv, &annotated)?;
    write_file(&report, &verification_report(&annotated, &verification))?;
    Ok(RunOutcome { exit_code: exit_for(&verification), table: annotated, verification, csv, report, svg: None })
}

#[derive(Debug)]
pub struct CellOutcome {
    pub index: usize,
    pub config: ExperimentConfig,
    pub exit_code: i32,
    pub result: Result<(TraceTable, VerificationReport), String>,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub exit_code: i32,
    pub cells: Vec<CellOutcome>,
    pub csv: PathBuf,
    pub report: PathBuf,
    pub svg: Option<PathBuf>,
}

pub const SWEEP_COLUMNS: [&str; 6] = ["cell", "problem_id", "method", "x0", "iterations", "cell_exit"];

pub fn thread_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))
}

/// Runs every cell of the cartesian product on `workers` threads. Each cell
/// writes its own trace under `cells/`; the aggregate is merged in config
/// order.
pub fn cmd_sweep(cfg: &SweepConfig, out: &Path, workers: usize) -> CliResult<SweepOutcome> {
    let cells_cfg = cfg.cells();
    let pool = thread_pool(workers)?;
    let cells: Vec<CellOutcome> = pool.install(|| {
        cells_cfg
            .into_par_iter()
            .enumerate()
            .map(|(index, config)| {
                let result = execute(&config);
                let exit_code = match &result {
                    Ok((_, v)) => exit_for(v),
                    Err(e) => e.exit_code(),
                };
                CellOutcome { index, config, exit_code, result: result.map_err(|e| e.to_string()) }
            })
            .collect()
    });

    let cell_dir = out.join("cells");
    for cell in &cells {
        if let Ok((table, _)) = &cell.result {
            write_table(&cell_dir.join(format!("cell_{:03}.csv", cell.index)), table)?;
        }
    }

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let err = |e: csv::Error| CliError::Schema(e.to_string());
        w.write_record(SWEEP_COLUMNS.iter().chain(COLUMNS.iter())).map_err(err)?;
        for cell in &cells {
            let c = &cell.config;
            let lead = vec![
                cell.index.to_string(),
                c.problem_id.clone(),
                c.method.to_string(),
                c.x0.label(),
                c.iterations.to_string(),
                cell.exit_code.to_string(),
            ];
            match &cell.result {
                Ok((table, _)) => {
                    for row in &table.rows {
                        w.write_record(lead.iter().cloned().chain(TraceTable::row_record(row))).map_err(err)?;
                    }
                }
                Err(msg) => {
                    let mut rest = vec![String::new(); COLUMNS.len()];
                    rest[10] = format!("ERROR {msg}");
                    w.write_record(lead.iter().cloned().chain(rest)).map_err(err)?;
                }
            }
        }
        w.flush().map_err(|e| CliError::io(out, e))?;
    }
    let csv_path = output_path(out, &cfg.csv, "sweep.csv");
    let mut text = format!("{SCHEMA_LINE}\n# sweep cells={}\n", cells.len());
    text.push_str(std::str::from_utf8(&buf).expect("csv output is utf-8"));
    write_file(&csv_path, &text)?;

    let mut report = String::from("ccfom sweep report\n");
    for cell in &cells {
        let c = &cell.config;
        let head = format!(
            "cell {} exit={} problem_id={} method={} x0={} iterations={}",
            cell.index,
            cell.exit_code,
            c.problem_id,
            c.method,
            c.x0.label(),
            c.iterations
        );
        report.push_str(&head);
        report.push('\n');
        match &cell.result {
            Ok((_, v)) => {
                report.push_str(&format!("  verdict: {}\n", v.verdict()));
                for f in v.failures() {
                    report.push_str(&format!("  {}\n", f.describe()));
                }
            }
            Err(msg) => report.push_str(&format!("  error: {msg}\n")),
        }
    }
    let report_path = output_path(out, &cfg.report, "sweep_report.txt");
    write_file(&report_path, &report)?;

    let svg = match &cfg.svg {
        Some(_) => {
            let series: Vec<Series> = cells
                .iter()
                .filter_map(|cell| cell.result.as_ref().ok().map(|(t, _)| (cell, t)))
                .flat_map(|(cell, table)| {
                    let c = &cell.config;
                    let label = format!("{} {} K={}", c.method, c.problem_id, c.iterations);
                    rate_series(table, &label, cell.index)
                })
                .collect();
            let path = output_path(out, &cfg.svg, "");
            write_file(&path, &svg::render("suboptimality vs k", "k", "f - f*", &series))?;
            Some(path)
        }
        None => None,
    };

    let exit_code = cells.iter().map(|c| c.exit_code).max().unwrap_or(EXIT_PASS);
    Ok(SweepOutcome { exit_code, cells, csv: csv_path, report: report_path, svg })
}

/// One probed composite instance with what is needed to reproduce it.
#[derive(Debug, Clone)]
pub struct ProbedInstance {
    pub reproduction: String,
    pub run: ProbeRun,
}

#[derive(Debug)]
pub struct ConjectureOutcome {
    pub exit_code: i32,
    pub instances: Vec<ProbedInstance>,
    pub summary: ProbeSummary,
    pub csv: PathBuf,
    pub report: PathBuf,
}

pub const CONJECTURE_COLUMNS: [&str; 12] = [
    "instance",
    "psi",
    "k",
    "f_xk",
    "cert_k",
    "margin",
    "tolerance",
    "vacuous_flag",
    "violation",
    "mu_k",
    "theta_k",
    "x_k",
];

/// Evaluates the conjectured composite bound, either on the configured
/// `problem` + `psi` or on `instances` seeded ℓ1 least-squares problems.
/// Violations are reported, not treated as failures.
pub fn cmd_conjecture(cfg: &SweepConfig, out: &Path, workers: usize) -> CliResult<ConjectureOutcome> {
    if cfg.methods != [MethodKind::ProxAccelerated] {
        return Err(CliError::Config("the conjecture probe needs method = \"prox_accelerated\"".into()));
    }
    let [iterations] = cfg.iterations[..] else {
        return Err(CliError::Config("the conjecture probe takes a single iteration count".into()));
    };
    let tol = cfg.tolerances;
    let jobs: Vec<(String, CompositeProblem, Point)> = match &cfg.random {
        Some(r) => random_lasso_instances(r.seed, r.count, r.min_dim, r.max_dim)?
            .into_iter()
            .map(|inst| {
                let repro = format!(
                    "seed={} index={} problem_id={} psi={} x0={}",
                    inst.seed,
                    inst.index,
                    inst.problem.phi.id(),
                    inst.problem.psi,
                    fmt_point(&inst.x0)
                );
                (repro, inst.problem, inst.x0)
            })
            .collect(),
        None => {
            let psi = cfg.psi.clone().ok_or_else(|| CliError::Config("missing `psi`".into()))?;
            let [problem] = &cfg.problems[..] else {
                return Err(CliError::Config("the conjecture probe takes a single problem".into()));
            };
            let [x0] = &cfg.x0[..] else {
                return Err(CliError::Config("the conjecture probe takes a single x0".into()));
            };
            let phi = parse_problem(problem)?;
            let x0 = x0.resolve(phi.dim())?;
            let cp = CompositeProblem::new(phi, psi)?;
            let repro = format!("problem_id={} psi={} x0={}", problem, cp.psi, fmt_point(&x0));
            vec![(repro, cp, x0)]
        }
    };

    let pool = thread_pool(workers)?;
    let runs: Vec<ProbedInstance> = pool.install(|| {
        jobs.into_par_iter()
            .map(|(reproduction, cp, x0)| {
                probe(&cp, &x0, iterations, &tol).map(|run| ProbedInstance { reproduction, run })
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let summary = ProbeSummary::from_runs(&runs.iter().map(|r| r.run.clone()).collect::<Vec<_>>());

    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let err = |e: csv::Error| CliError::Schema(e.to_string());
        w.write_record(CONJECTURE_COLUMNS).map_err(err)?;
        for (i, inst) in runs.iter().enumerate() {
            let run = &inst.run;
            for rec in &run.records {
                w.write_record([
                    i.to_string(),
                    run.psi.to_string(),
                    rec.k.to_string(),
                    fmt_f64(rec.f_xk),
                    fmt_f64(rec.certificate.to_f64()),
                    fmt_f64(rec.margin),
                    fmt_f64(rec.tolerance),
                    if rec.vacuous { "1".into() } else { "0".into() },
                    if rec.violation { "1".into() } else { "0".into() },
                    fmt_opt(run.certificate.mu(rec.k)),
                    fmt_opt(run.trace.theta.as_ref().and_then(|t| t.get(rec.k))),
                    fmt_point(&run.trace.x[rec.k]),
                ])
                .map_err(err)?;
            }
        }
        w.flush().map_err(|e| CliError::io(out, e))?;
    }
    let mut text = format!(
        "{SCHEMA_LINE}\n# label={CONJECTURE}\n# dual_feed={DUAL_FEED}\n# method=prox_accelerated\n\
         # iterations={iterations}\n# eps_rel={}\n# eps_abs={}\n",
        fmt_f64(tol.eps_rel),
        fmt_f64(tol.eps_abs)
    );
    text.push_str(std::str::from_utf8(&buf).expect("csv output is utf-8"));
    let csv_path = output_path(out, &cfg.csv, "conjecture.csv");
    write_file(&csv_path, &text)?;

    let mut report = format!(
        "{CONJECTURE} probe: f(x_k) <= -phi*(z_k) + min_u {{ psi(u) + <z_k, u> + (mu_k/2)|u - x0|^2 }}\n\
         dual feed: {DUAL_FEED}\nviolations are findings, not failures\n\n"
    );
    for (i, inst) in runs.iter().enumerate() {
        report.push_str(&format!("instance {i}: {}\n", inst.reproduction));
        for rec in &inst.run.records {
            let flag = if rec.violation {
                " VIOLATION"
            } else if rec.vacuous {
                " VACUOUS"
            } else {
                ""
            };
            report.push_str(&format!(
                "  k={} f_xk={} cert={} margin={} tol={}{flag}\n",
                rec.k,
                fmt_f64(rec.f_xk),
                rec.certificate,
                fmt_f64(rec.margin),
                fmt_f64(rec.tolerance)
            ));
        }
    }
    report.push_str(&format!("\n{summary}\n"));
    for (i, inst) in runs.iter().enumerate() {
        for rec in inst.run.violations() {
            report.push_str(&format!(
                "violation: instance {i} k={} margin={} tol={} iterations={iterations} {}\n",
                rec.k,
                fmt_f64(rec.margin),
                fmt_f64(rec.tolerance),
                inst.reproduction
            ));
        }
    }
    let report_path = output_path(out, &cfg.report, "conjecture_report.txt");
    write_file(&report_path, &report)?;
    Ok(ConjectureOutcome { exit_code: EXIT_PASS, instances: runs, summary, csv: csv_path, report: report_path })
}
