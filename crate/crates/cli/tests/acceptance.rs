//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the
//! process exits non-zero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use ccfom::certificates::{
    build_certificate, certificate_value, default_test_points, lhs, verify_run, CheckKind, Verdict,
};
use ccfom::methods::{run_accelerated, run_gradient, run_subgradient, MethodKind, MethodTrace, StepSchedule, ThetaSequence};
use ccfom::oracle::{conjugate_by_grid, min_by_grid, GridSpec};
use ccfom::{parse_problem, Point, ProblemInstance, Tolerances};
use ccfom_cli::commands::{cmd_conjecture, cmd_run, cmd_verify};
use ccfom_cli::config::{ExperimentConfig, Overrides, SweepConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};

const EPS_REL: f64 = 1e-9;
const EPS_ABS: f64 = 1e-9;

fn tol() -> Tolerances {
    Tolerances::new(EPS_REL, EPS_ABS)
}

fn pt(v: &[f64]) -> Point {
    Point::new(v.to_vec()).unwrap()
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Nonsmooth instance with independently known G, optimal value and
/// (unique) minimizer.
struct Nonsmooth {
    id: String,
    g: f64,
    fbar: f64,
    xstar: Vec<f64>,
}

fn nonsmooth_instances() -> Vec<Nonsmooth> {
    let mut out = Vec::new();
    for (g, dim) in [(1.0, 1), (2.0, 2), (0.5, 5), (1.0, 10)] {
        out.push(Nonsmooth { id: format!("norm:G={g}:dim={dim}"), g, fbar: 0.0, xstar: vec![0.0; dim] });
    }
    for dim in [1usize, 3, 10] {
        let center: Vec<f64> = (0..dim).map(|i| 0.5 - 0.25 * i as f64).collect();
        let c = center.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        out.push(Nonsmooth { id: format!("linf:G=1.5:center={c}"), g: 1.5, fbar: 0.0, xstar: center });
    }
    // max(x + y, −x + y, −y − 2): minimum −1 at (0, −1)
    out.push(Nonsmooth {
        id: "maxaff:a=1,1;-1,1;0,-1:b=0,0,-2:xstar=0,-1".into(),
        g: 2f64.sqrt(),
        fbar: -1.0,
        xstar: vec![0.0, -1.0],
    });
    // max(x1, x2, x3, −(x1 + x2 + x3)): minimum 0 at the origin
    out.push(Nonsmooth {
        id: "maxaff:a=1,0,0;0,1,0;0,0,1;-1,-1,-1:b=0,0,0,0:xstar=0,0,0".into(),
        g: 3f64.sqrt(),
        fbar: 0.0,
        xstar: vec![0.0; 3],
    });
    out
}

fn x0_grid(dim: usize) -> Vec<Point> {
    [-2.0, -0.5, 1.0, 3.0]
        .iter()
        .map(|c| pt(&(0..dim).map(|i| if i % 2 == 0 { *c } else { -0.5 * c }).collect::<Vec<_>>()))
        .collect()
}

const HORIZONS: [usize; 4] = [0, 10, 100, 1000];

fn criterion_1() -> Outcome {
    let mut runs = 0;
    let mut slowest = Duration::ZERO;
    let mut min_slack = f64::INFINITY;
    for inst in nonsmooth_instances() {
        let p = parse_problem(&inst.id).map_err(|e| e.to_string())?;
        for x0 in x0_grid(inst.xstar.len()) {
            let dist2: f64 = x0.as_slice().iter().zip(&inst.xstar).map(|(a, b)| (a - b) * (a - b)).sum();
            for k in HORIZONS {
                let start = Instant::now();
                let trace = run_subgradient(p.as_ref(), &x0, &StepSchedule::HorizonSqrt(k), k).map_err(|e| e.to_string())?;
                let best = trace.fx[..=k].iter().copied().fold(f64::INFINITY, f64::min);
                slowest = slowest.max(start.elapsed());
                let bound = (dist2 + inst.g * inst.g) / (2.0 * ((k + 1) as f64).sqrt());
                let gap = best - inst.fbar;
                let t = tol().scaled(&[best, inst.fbar, bound]);
                ensure(gap <= bound + t, || format!("{} x0={:?} K={k}: gap {gap} > bound {bound}", inst.id, x0))?;
                min_slack = min_slack.min(bound - gap);
                runs += 1;
            }
        }
    }
    ensure(slowest < Duration::from_secs(1), || format!("slowest run took {slowest:?}"))?;
    // equality instance
    let p = parse_problem("norm:G=1:dim=1").unwrap();
    let trace = run_subgradient(p.as_ref(), &pt(&[1.0]), &StepSchedule::HorizonSqrt(0), 0).unwrap();
    let err = (trace.fx[0] - 0.0 - (1.0 + 1.0) / 2.0).abs();
    ensure(err <= 1e-15, || format!("K=0 equality off by {err}"))?;
    Ok(format!("{runs} runs, slowest {slowest:?}, min slack {min_slack:.3e}, K=0 equality error {err:.1e}"))
}

/// Smooth instance with independently known L, optimal value and distance
/// from x0 to the solution set.
struct Smooth {
    id: &'static str,
    l: f64,
    fbar: f64,
    dist: fn(&[f64]) -> f64,
    x0: Vec<Vec<f64>>,
}

fn smooth_instances() -> Vec<Smooth> {
    let x0_2 = vec![vec![1.0, 1.0], vec![3.0, -2.0], vec![-0.4, 5.0]];
    let x0_3 = vec![vec![1.0, -2.0, 0.5], vec![4.0, 0.0, -4.0]];
    vec![
        Smooth { id: "quad:diag=1,1", l: 1.0, fbar: 0.0, dist: |x| norm2(x), x0: x0_2.clone() },
        Smooth { id: "quad:diag=1,10", l: 10.0, fbar: 0.0, dist: |x| norm2(x), x0: x0_2.clone() },
        Smooth { id: "quad:diag=1,100", l: 100.0, fbar: 0.0, dist: |x| norm2(x), x0: x0_2.clone() },
        // eigenvalues 1 and 10, minimizer (1, −1), value 2 − 5.5 = ... computed below
        Smooth {
            id: "quad:mat=5.5,4.5;4.5,5.5:b=-1,1:c=3",
            l: 10.0,
            // A(1,−1) = (1, −1) = −b, so x* = (1, −1) and f̄ = c − ½⟨b, A⁻¹b⟩ = 3 − ½·2
            fbar: 2.0,
            dist: |x| norm2(&[x[0] - 1.0, x[1] + 1.0]),
            x0: x0_2.clone(),
        },
        // lse(x) − mean(x): minimized on the line R·1 with value ln 3
        Smooth {
            id: "lse:dim=3:tilt=uniform",
            l: 1.0,
            fbar: 3f64.ln(),
            dist: |x| {
                let m = x.iter().sum::<f64>() / 3.0;
                norm2(&x.iter().map(|v| v - m).collect::<Vec<_>>())
            },
            x0: x0_3.clone(),
        },
        // lse(x) − ⟨c, x⟩ with c = (0.2, 0.3, 0.5): minimized on log c + R·1
        Smooth {
            id: "lse:c=0.2,0.3,0.5",
            l: 1.0,
            fbar: -(0.2 * 0.2f64.ln() + 0.3 * 0.3f64.ln() + 0.5 * 0.5f64.ln()),
            dist: |x| {
                let d: Vec<f64> = x.iter().zip([0.2f64, 0.3, 0.5]).map(|(v, c)| v - c.ln()).collect();
                let m = d.iter().sum::<f64>() / 3.0;
                norm2(&d.iter().map(|v| v - m).collect::<Vec<_>>())
            },
            x0: x0_3,
        },
    ]
}

const SMOOTH_K: usize = 1000;

fn smooth_criterion(method: MethodKind) -> Outcome {
    let mut runs = 0;
    let mut slowest = Duration::ZERO;
    let mut worst_ratio: f64 = 0.0;
    for inst in smooth_instances() {
        let p = parse_problem(inst.id).map_err(|e| e.to_string())?;
        ensure(p.lipschitz_grad() == Some(inst.l), || format!("{}: L mismatch", inst.id))?;
        for x0 in &inst.x0 {
            let x0p = pt(x0);
            let d = (inst.dist)(x0);
            let start = Instant::now();
            let trace = match method {
                MethodKind::Gradient => run_gradient(p.as_ref(), &x0p, SMOOTH_K),
                _ => run_accelerated(p.as_ref(), &x0p, SMOOTH_K),
            }
            .map_err(|e| e.to_string())?;
            slowest = slowest.max(start.elapsed());
            for k in 1..=SMOOTH_K {
                let gap = trace.fx[k] - inst.fbar;
                let bound = match method {
                    MethodKind::Gradient => inst.l * d * d / (2.0 * k as f64),
                    _ => 2.0 * inst.l * d * d / ((k + 1) as f64).powi(2),
                };
                let t = tol().scaled(&[trace.fx[k], inst.fbar, bound]);
                ensure(gap <= bound + t, || format!("{} x0={x0:?} k={k}: gap {gap:e} > bound {bound:e}", inst.id))?;
                if bound > 0.0 {
                    worst_ratio = worst_ratio.max(gap / bound);
                }
                if method == MethodKind::Gradient {
                    let (a, b) = (trace.fx[k - 1], trace.fx[k]);
                    ensure(b <= a + EPS_ABS, || format!("{} x0={x0:?}: ascent at k={k}: {a} -> {b}", inst.id))?;
                }
            }
            runs += 1;
        }
    }
    ensure(slowest < Duration::from_secs(1), || format!("slowest run took {slowest:?}"))?;
    Ok(format!("{runs} runs of K={SMOOTH_K}, slowest {slowest:?}, max gap/bound {worst_ratio:.3}"))
}

fn criterion_2() -> Outcome {
    smooth_criterion(MethodKind::Gradient)
}

fn criterion_3() -> Outcome {
    let rates = smooth_criterion(MethodKind::Accelerated)?;
    let theta = ThetaSequence::generate(100_000);
    let values = theta.values();
    let mut max_residual: f64 = 0.0;
    for k in 1..=100_000usize {
        let (prev, cur) = (values[k - 1], values[k]);
        let residual = (cur * cur - prev * prev * (1.0 - cur)).abs();
        max_residual = max_residual.max(residual);
        ensure(residual <= 1e-12, || format!("theta recurrence residual {residual:e} at k={k}"))?;
        ensure(prev <= 2.0 / (k as f64 + 1.0), || format!("theta_{} = {prev} > 2/{}", k - 1, k + 1))?;
    }
    Ok(format!("{rates}; theta to 1e5, max recurrence residual {max_residual:.1e}"))
}

fn chain_matrix() -> Vec<(String, MethodKind, Point, usize)> {
    let mut cells = Vec::new();
    for inst in nonsmooth_instances() {
        let grid = x0_grid(inst.xstar.len());
        for x0 in grid {
            for k in HORIZONS {
                cells.push((inst.id.clone(), MethodKind::Subgradient, x0.clone(), k));
            }
        }
    }
    for inst in smooth_instances() {
        for x0 in &inst.x0 {
            for method in [MethodKind::Gradient, MethodKind::Accelerated] {
                for k in [1usize, 10, 100, 1000] {
                    cells.push((inst.id.to_string(), method, pt(x0), k));
                }
            }
        }
    }
    cells
}

const IDENTITIES_SUB_GRAD: [CheckKind; 3] =
    [CheckKind::OptimalityIdentity, CheckKind::StepScaleIdentity, CheckKind::MuClosedForm];
const IDENTITIES_ACC: [CheckKind; 5] = [
    CheckKind::MomentumIdentity,
    CheckKind::ExtrapolationIdentity,
    CheckKind::IterateIdentity,
    CheckKind::StepScaleIdentity,
    CheckKind::MuClosedForm,
];
const CHAIN: [CheckKind; 5] = [
    CheckKind::ChainCertificate,
    CheckKind::ChainRelaxation,
    CheckKind::ChainFenchel,
    CheckKind::ChainEndToEnd,
    CheckKind::InductionStep,
];

fn criterion_4() -> Outcome {
    let cells = chain_matrix();
    let mut checks = 0usize;
    let mut max_chain_residual = f64::NEG_INFINITY;
    let mut problems = std::collections::HashMap::<String, ProblemInstance>::new();
    for (id, method, x0, k) in &cells {
        let p = problems.entry(id.clone()).or_insert_with(|| parse_problem(id).unwrap()).clone();
        let trace = match method {
            MethodKind::Subgradient => run_subgradient(p.as_ref(), x0, &StepSchedule::HorizonSqrt(*k), *k),
            MethodKind::Gradient => run_gradient(p.as_ref(), x0, *k),
            _ => run_accelerated(p.as_ref(), x0, *k),
        }
        .map_err(|e| e.to_string())?;
        let report = verify_run(&trace, p.as_ref(), &default_test_points(p.as_ref(), &trace), &tol())
            .map_err(|e| e.to_string())?;
        for c in report.all_checks() {
            checks += 1;
            ensure(c.verdict == Verdict::Pass, || format!("{id} {method} x0={x0:?} K={k}: {}", c.describe()))?;
            if c.kind.is_chain() {
                max_chain_residual = max_chain_residual.max(c.residual - c.tolerance);
            }
        }
        // every required check is present at every applicable iteration
        let required: Vec<CheckKind> = match method {
            MethodKind::Accelerated => CHAIN.iter().chain(&IDENTITIES_ACC).copied().collect(),
            _ => CHAIN.iter().chain(&IDENTITIES_SUB_GRAD).copied().collect(),
        };
        let start = method.start_index();
        for kind in required {
            let per_step = !matches!(
                kind,
                CheckKind::ChainCertificate
                    | CheckKind::ChainRelaxation
                    | CheckKind::ChainFenchel
                    | CheckKind::ChainEndToEnd
                    | CheckKind::MuClosedForm
            );
            let expected: Vec<usize> = if per_step { (start..*k).collect() } else { (start..=*k).collect() };
            let mut seen: Vec<usize> = report.all_checks().filter(|c| c.kind == kind).map(|c| c.k).collect();
            seen.dedup();
            ensure(seen == expected, || format!("{id} {method} K={k}: {kind} covers {seen:?}"))?;
        }
    }
    Ok(format!(
        "{} cells, {checks} checks, all PASS; max chain (residual - tol) {max_chain_residual:.3e}",
        cells.len()
    ))
}

fn criterion_5() -> Outcome {
    let p = parse_problem("norm:G=1:dim=1").unwrap();
    let trace = run_subgradient(p.as_ref(), &pt(&[1.0]), &StepSchedule::Constant(1.0), 0).unwrap();
    let cert = build_certificate(&trace, p.as_ref()).unwrap();
    let lhs0 = lhs(&trace, p.as_ref(), 0).unwrap();
    let cert0 = certificate_value(&cert, 0, p.as_ref(), trace.x0()).unwrap().to_f64();
    ensure((lhs0 - 0.5).abs() <= 1e-12 && (cert0 - 0.5).abs() <= 1e-12, || {
        format!("subgradient base case: LHS0={lhs0} cert0={cert0}")
    })?;

    let q = parse_problem("quad:diag=1").unwrap();
    let trace = run_gradient(q.as_ref(), &pt(&[2.0]), 1).unwrap();
    let cert = build_certificate(&trace, q.as_ref()).unwrap();
    let lhs1 = lhs(&trace, q.as_ref(), 1).unwrap();
    let cert1 = certificate_value(&cert, 1, q.as_ref(), trace.x0()).unwrap().to_f64();
    ensure(lhs1.abs() <= 1e-12 && cert1.abs() <= 1e-12, || format!("gradient base case: LHS1={lhs1} cert1={cert1}"))?;
    Ok(format!("LHS0={lhs0} cert0={cert0}; LHS1={lhs1} cert1={cert1}"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    // every family in 1D and 2D; each 2D pass is 64M points, so 2D
    // instances get one dual point and the extra points go to 1D
    let cases: Vec<(&str, Vec<Vec<f64>>, bool)> = vec![
        ("quad:diag=2:b=1", vec![vec![0.0], vec![3.0], vec![-2.5], vec![7.0]], true),
        ("quad:mat=0.5:b=-1:c=2", vec![vec![0.0], vec![-1.5]], true),
        ("norm:G=1.5:dim=1", vec![vec![0.0], vec![1.2], vec![-1.5]], true),
        ("linf:G=1:center=0.7", vec![vec![0.0], vec![0.6], vec![-1.0]], true),
        ("maxaff:a=1;-2:b=0,1", vec![vec![0.0], vec![-1.0], vec![0.5], vec![1.0], vec![-2.0]], true),
        ("quad:diag=1,4:b=0.5,-1", vec![vec![1.0, -2.0]], true),
        ("quad:mat=2,1;1,3:b=1,0:c=0.25", vec![vec![-1.0, 1.5]], false),
        ("norm:G=1:dim=2", vec![vec![0.3, 0.4]], true),
        ("lse:dim=2:tilt=uniform", vec![vec![0.1, -0.1]], true),
        ("lse:dim=2", vec![vec![0.25, 0.75]], false),
        ("linf:G=1:dim=2", vec![vec![0.2, 0.5]], true),
        ("maxaff:a=1,1;-1,1;0,-1:b=0,0,-2:xstar=0,-1", vec![vec![0.2, 0.1]], true),
    ];
    let mut evaluations = 0;
    let mut worst: f64 = 0.0;
    for (id, zs, check_min) in &cases {
        let p = parse_problem(id).map_err(|e| e.to_string())?;
        let grid = GridSpec::default_box(p.dim(), 8001).map_err(|e| e.to_string())?;
        for z in zs {
            let z = pt(z);
            let exact = p.conjugate(&z).map_err(|e| e.to_string())?.to_f64();
            let est = conjugate_by_grid(p.as_ref(), &z, &grid).map_err(|e| e.to_string())?;
            let diff = exact - est.value;
            ensure(diff >= -1e-9 * (1.0 + exact.abs()) && diff <= est.error_bound + 1e-9, || {
                format!("{id} f*({z:?}): closed form {exact}, grid {} (resolution {:e})", est.value, est.error_bound)
            })?;
            worst = worst.max(diff.abs() / est.error_bound.max(f64::MIN_POSITIVE));
            evaluations += 1;
        }
        if *check_min {
            let fbar = p.optimal_value().ok_or_else(|| format!("{id}: no closed-form optimum"))?;
            let est = min_by_grid(p.as_ref(), &grid).map_err(|e| e.to_string())?;
            let diff = est.value - fbar;
            ensure(diff >= -1e-9 * (1.0 + fbar.abs()) && diff <= est.error_bound + 1e-9, || {
                format!("{id} min: closed form {fbar}, grid {} (resolution {:e})", est.value, est.error_bound)
            })?;
            evaluations += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} instances, {evaluations} grid evaluations at 8001 points/axis in {elapsed:.2?}, max |diff|/resolution {worst:.3}",
        cases.len()
    ))
}

fn iterations_to(trace: &MethodTrace, fbar: f64, target: f64) -> Option<usize> {
    trace.fx.iter().position(|f| f - fbar <= target)
}

fn criterion_7() -> Outcome {
    let p = parse_problem("quad:diag=1,100").unwrap();
    let horizon = 20_000;
    let count = |x0: &Point| -> Result<(usize, usize), String> {
        let g = run_gradient(p.as_ref(), x0, horizon).map_err(|e| e.to_string())?;
        let a = run_accelerated(p.as_ref(), x0, horizon).map_err(|e| e.to_string())?;
        let kg = iterations_to(&g, 0.0, 1e-6).ok_or("gradient did not reach 1e-6")?;
        let ka = iterations_to(&a, 0.0, 1e-6).ok_or("accelerated did not reach 1e-6")?;
        Ok((kg, ka))
    };
    let (kg, ka) = count(&pt(&[1.0, 1.0]))?;
    ensure(ka < kg, || format!("x0=(1,1): accelerated {ka} vs gradient {kg}"))?;

    // any start with a non-negligible component along the slow eigenvector
    let mut runner = TestRunner::new(PropConfig { cases: 32, failure_persistence: None, ..PropConfig::default() });
    let strategy = (0.1f64..5.0, prop::bool::ANY, -5.0f64..5.0);
    runner
        .run(&strategy, |(a, neg, b)| {
            let x0 = pt(&[if neg { -a } else { a }, b]);
            let (kg, ka) = count(&x0).map_err(TestCaseError::fail)?;
            prop_assert!(ka < kg, "x0={:?}: accelerated {} vs gradient {}", x0, ka, kg);
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("x0=(1,1): gradient {kg} iterations, accelerated {ka}; 32 random starts agree"))
}

fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let cfg = SweepConfig::from_toml(
        "method = \"prox_accelerated\"\ninstances = 100\nseed = 20240601\nmin_dim = 1\nmax_dim = 5\niterations = 200\n",
        &Overrides::default(),
    )
    .map_err(|e| e.to_string())?;
    let outcome = cmd_conjecture(&cfg, dir.path(), 1).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let s = &outcome.summary;
    ensure(s.instances == 100 && s.iterations_checked == 100 * 200, || format!("incomplete probe: {s}"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    ensure(outcome.report.exists() && outcome.csv.exists(), || "probe outputs missing".into())?;

    // ψ ≡ 0 against the smooth pipeline, bit for bit
    let base = "problem = \"quad:mat=3,1;1,2:b=-1,0.5:c=1\"\nx0 = [2.0, -3.0]\niterations = 200\n";
    let run_cfg = ExperimentConfig::from_toml(&format!("{base}method = \"accelerated\"\n"), &Overrides::default())
        .map_err(|e| e.to_string())?;
    let run = cmd_run(&run_cfg, &dir.path().join("run")).map_err(|e| e.to_string())?;
    let zero = SweepConfig::from_toml(&format!("{base}method = \"prox_accelerated\"\npsi = \"zero\"\n"), &Overrides::default())
        .map_err(|e| e.to_string())?;
    let probe = cmd_conjecture(&zero, &dir.path().join("zero"), 1).map_err(|e| e.to_string())?;
    let records = &probe.instances[0].run.records;
    ensure(records.len() == run.table.rows.len(), || "row count differs".into())?;
    for (rec, row) in records.iter().zip(&run.table.rows) {
        let a = rec.certificate.to_f64().to_bits();
        let b = row.cert_k.unwrap().to_f64().to_bits();
        ensure(a == b && rec.f_xk.to_bits() == row.f_xk.to_bits(), || format!("k={} differs", rec.k))?;
    }
    Ok(format!("{s}; in {elapsed:.2?}; psi=zero matches the accelerated certificate bitwise over 200 iterations"))
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let configs = [
        "problem = \"norm:G=1:dim=2\"\nmethod = \"subgradient\"\nx0 = [1.0, -2.0]\niterations = 20\n",
        "problem = \"maxaff:a=1,1;-1,1;0,-1:b=0,0,-2:xstar=0,-1\"\nmethod = \"subgradient\"\nx0 = [2.0, 1.0]\niterations = 20\n",
        "problem = \"quad:diag=1,10:b=1,-1:c=2\"\nmethod = \"gradient\"\nx0 = [3.0, 1.0]\niterations = 20\n",
        "problem = \"lse:dim=3:tilt=uniform\"\nmethod = \"gradient\"\nx0 = [1.0, -2.0, 0.5]\niterations = 20\n",
        "problem = \"quad:diag=1,10:b=1,-1:c=2\"\nmethod = \"accelerated\"\nx0 = [3.0, 1.0]\niterations = 20\n",
        "problem = \"lse:c=0.2,0.3,0.5\"\nmethod = \"accelerated\"\nx0 = [4.0, 0.0, -4.0]\niterations = 20\n",
    ];
    let mut corrupted = 0;
    let mut skipped_zero = 0;
    let mut chain_a_hits = 0;
    for (i, body) in configs.iter().enumerate() {
        let cfg = ExperimentConfig::from_toml(body, &Overrides::default()).map_err(|e| e.to_string())?;
        let out = dir.path().join(format!("run{i}"));
        let run = cmd_run(&cfg, &out).map_err(|e| e.to_string())?;
        ensure(run.exit_code == 0, || format!("baseline run {i} does not pass"))?;
        for idx in 0..run.table.rows.len() {
            let mut table = run.table.clone();
            let row = &mut table.rows[idx];
            if row.f_xk == 0.0 {
                skipped_zero += 1;
                continue;
            }
            let k = row.k;
            row.f_xk += 0.1 * row.f_xk.abs();
            let bad = write(dir.path(), "bad.csv", "");
            table.write(&bad).map_err(|e| e.to_string())?;
            let verified = cmd_verify(&bad, &dir.path().join("v"), &Overrides::default()).map_err(|e| e.to_string())?;
            ensure(verified.exit_code == 2, || format!("config {i} k={k}: corruption not detected"))?;
            let vrow = verified.table.rows.iter().find(|r| r.k == k).unwrap();
            ensure(vrow.verdict.starts_with("FAIL"), || format!("config {i} k={k}: row verdict {}", vrow.verdict))?;
            if verified
                .verification
                .failures()
                .any(|c| c.k == k && c.kind == CheckKind::ChainCertificate)
            {
                chain_a_hits += 1;
            }
            corrupted += 1;
        }
    }
    Ok(format!(
        "{corrupted} single-value corruptions all FAIL at the corrupted k ({chain_a_hits} also break chain (a)); {skipped_zero} zero values skipped"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 subgradient bound", criterion_1),
        ("2 gradient bound + monotone descent", criterion_2),
        ("3 accelerated bound + theta schedule", criterion_3),
        ("4 certificate chain, induction step, identities", criterion_4),
        ("5 base-case equalities", criterion_5),
        ("6 closed forms vs grid oracles", criterion_6),
        ("7 acceleration separation", criterion_7),
        ("8 conjecture probe", criterion_8),
        ("9 corruption sensitivity", criterion_9),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {name}: {detail} [{:.2?}]", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why} [{:.2?}]", start.elapsed());
            }
        }
    }
    println!("acceptance: {} of 9 criteria pass", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
