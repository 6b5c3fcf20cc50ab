//! Convex-conjugate certificates for the three first-order methods.
//!
//! For a run of length `K` the engine builds dual vectors `z_k` and weights
//! `μ_k` through
//!
//! ```text
//! z_{k+1} = (1 − θ_k) z_k + θ_k g_k,    μ_{k+1} = (1 − θ_k) μ_k,    g_k ∈ ∂f(y_k)
//! ```
//!
//! with a method-specific choice of `θ_k`, `y_k` and starting values, and then
//! checks, at every iteration, the chain
//!
//! ```text
//! LHS_k ≤ −f*(z_k) + ⟨z_k, x_0⟩ − ‖z_k‖²/(2μ_k)            (a)
//!       ≤ −f*(z_k) + ⟨z_k, x⟩ + (μ_k/2)‖x − x_0‖²          (b)
//!       ≤  f(x) + (μ_k/2)‖x − x_0‖²                        (c), (d)
//! ```
//!
//! for a set of test points `x`, together with the one-step inequality that
//! drives the induction and the identities behind it. Each check keeps its
//! raw residual and the tolerance it was judged against.
//!
//! | method       | start | `θ_k`                    | `y_k`      | start values               |
//! |--------------|-------|--------------------------|------------|----------------------------|
//! | subgradient  | 0     | `t_{k+1} / Σ_{i≤k+1} t_i`| `x_{k+1}`  | `μ_0 = 1/t_0`, `z_0 = g_0` |
//! | gradient     | 1     | `1/(k+1)`                | `x_k`      | `μ_1 = L`, `z_1 = ∇f(x_0)` |
//! | accelerated  | 1     | momentum `θ_k`           | `y_k`      | `μ_1 = L`, `z_1 = ∇f(x_0)` |

use std::fmt;

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::methods::{MethodKind, MethodTrace};
use crate::point::Point;
use crate::problems::Problem;
use crate::tolerance::Tolerances;

/// The `(z_k, μ_k)` sequences for one trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    pub method: MethodKind,
    pub start_index: usize,
    z: Vec<Point>,
    mu: Vec<f64>,
    steps: Vec<StepData>,
    /// Trace indices whose subgradient was missing and had to be re-queried.
    pub requeried: Vec<usize>,
}

/// Data feeding the step `k → k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepData {
    pub theta: f64,
    pub y: Point,
    pub g: Point,
}

impl DualCertificate {
    /// Last iteration index covered.
    pub fn last_index(&self) -> usize {
        self.start_index + self.z.len() - 1
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.start_index..=self.last_index()
    }

    pub fn z(&self, k: usize) -> Option<&Point> {
        k.checked_sub(self.start_index).and_then(|i| self.z.get(i))
    }

    pub fn mu(&self, k: usize) -> Option<f64> {
        k.checked_sub(self.start_index).and_then(|i| self.mu.get(i)).copied()
    }

    /// `θ_k`, `y_k` and `g_k` of the step `k → k + 1`, for `k < last_index()`.
    pub fn step(&self, k: usize) -> Option<&StepData> {
        k.checked_sub(self.start_index).and_then(|i| self.steps.get(i))
    }
}

fn subgradient_or_requery(
    trace: &MethodTrace,
    p: &dyn Problem,
    index: usize,
    at: &Point,
    requeried: &mut Vec<usize>,
) -> Result<Point> {
    match trace.g.get(index) {
        Some(Some(g)) => Ok(g.clone()),
        _ => {
            requeried.push(index);
            p.subgradient(at)
        }
    }
}

fn point_at<'a>(points: &'a [Point], k: usize, what: &str) -> Result<&'a Point> {
    points.get(k).ok_or_else(|| Error::TraceMismatch(format!("trace has no {what} at k={k}")))
}

/// Builds `(z_k, μ_k)` for `k = start_index..=trace.horizon`.
///
/// For the proximal accelerated trace pass the smooth part as `p`.
pub fn build_certificate(trace: &MethodTrace, p: &dyn Problem) -> Result<DualCertificate> {
    if trace.problem_id != p.id() {
        return Err(Error::TraceMismatch(format!(
            "trace was produced on `{}`, not `{}`",
            trace.problem_id,
            p.id()
        )));
    }
    let horizon = trace.horizon;
    let mut requeried = Vec::new();
    let mut steps = Vec::new();
    let (z0, mu0) = match trace.method {
        MethodKind::Subgradient => {
            if trace.t.len() < horizon + 1 {
                return Err(Error::TraceMismatch("subgradient trace is missing step sizes".into()));
            }
            let x0 = point_at(&trace.x, 0, "x")?;
            let g0 = subgradient_or_requery(trace, p, 0, x0, &mut requeried)?;
            let mut partial = trace.t[0];
            for k in 0..horizon {
                partial += trace.t[k + 1];
                let y = point_at(&trace.x, k + 1, "x")?.clone();
                let g = subgradient_or_requery(trace, p, k + 1, &y, &mut requeried)?;
                steps.push(StepData { theta: trace.t[k + 1] / partial, y, g });
            }
            (g0, 1.0 / trace.t[0])
        }
        MethodKind::Gradient => {
            let l = p.lipschitz_grad().ok_or_else(|| {
                Error::Configuration("gradient certificate needs a gradient Lipschitz constant".into())
            })?;
            if horizon == 0 {
                return Err(Error::TraceMismatch("gradient trace has no iterations".into()));
            }
            let x0 = point_at(&trace.x, 0, "x")?;
            let z1 = subgradient_or_requery(trace, p, 0, x0, &mut requeried)?;
            for k in 1..horizon {
                let y = point_at(&trace.x, k, "x")?.clone();
                let g = subgradient_or_requery(trace, p, k, &y, &mut requeried)?;
                steps.push(StepData { theta: 1.0 / (k as f64 + 1.0), y, g });
            }
            (z1, l)
        }
        MethodKind::Accelerated | MethodKind::ProxAccelerated => {
            let l = p.lipschitz_grad().ok_or_else(|| {
                Error::Configuration("accelerated certificate needs a gradient Lipschitz constant".into())
            })?;
            if horizon == 0 {
                return Err(Error::TraceMismatch("accelerated trace has no iterations".into()));
            }
            let ys = trace
                .y
                .as_ref()
                .ok_or_else(|| Error::TraceMismatch("accelerated trace has no y sequence".into()))?;
            let theta = trace
                .theta
                .as_ref()
                .ok_or_else(|| Error::TraceMismatch("accelerated trace has no theta sequence".into()))?;
            let y0 = point_at(ys, 0, "y")?;
            let z1 = subgradient_or_requery(trace, p, 0, y0, &mut requeried)?;
            for k in 1..horizon {
                let y = point_at(ys, k, "y")?.clone();
                let g = subgradient_or_requery(trace, p, k, &y, &mut requeried)?;
                let theta_k = theta
                    .get(k)
                    .ok_or_else(|| Error::TraceMismatch(format!("no theta at k={k}")))?;
                steps.push(StepData { theta: theta_k, y, g });
            }
            (z1, l)
        }
    };

    let mut z = vec![z0];
    let mut mu = vec![mu0];
    for step in &steps {
        let (zk, muk) = (z.last().unwrap(), *mu.last().unwrap());
        z.push(zk.combine(1.0 - step.theta, step.theta, &step.g));
        mu.push((1.0 - step.theta) * muk);
    }
    Ok(DualCertificate {
        method: trace.method,
        start_index: trace.method.start_index(),
        z,
        mu,
        steps,
        requeried,
    })
}

/// `−f*(z_k) + ⟨z_k, x_0⟩ − ‖z_k‖²/(2μ_k)`; `−∞` (vacuous) when `f*(z_k) = +∞`.
pub fn certificate_value(cert: &DualCertificate, k: usize, p: &dyn Problem, x0: &Point) -> Result<ExtendedReal> {
    let (z, mu) = cert_at(cert, k)?;
    let conj = p.conjugate(z)?;
    Ok((-conj).plus(dual_quadratic(z, mu, x0)))
}

/// `⟨z, x_0⟩ − ‖z‖²/(2μ) = min_u ⟨z, u⟩ + (μ/2)‖u − x_0‖²`.
pub fn dual_quadratic(z: &Point, mu: f64, x0: &Point) -> f64 {
    z.dot(x0) - z.norm_sq() / (2.0 * mu)
}

fn cert_at(cert: &DualCertificate, k: usize) -> Result<(&Point, f64)> {
    match (cert.z(k), cert.mu(k)) {
        (Some(z), Some(mu)) => Ok((z, mu)),
        _ => Err(Error::InvalidArgument(format!(
            "certificate covers k in {:?}, asked for {k}",
            cert.indices()
        ))),
    }
}

/// Left-hand side of the theorem for `method` at iteration `k`, with the sum
/// of absolute values of its terms (for tolerance scaling).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LhsValue {
    pub value: f64,
    pub magnitude: f64,
}

/// Theorem left-hand sides for `k = start_index..=horizon`.
///
/// * subgradient: `(Σ_{i≤k} t_i f(x_i) − (G²/2) Σ_{i≤k} t_i²) / Σ_{i≤k} t_i`
/// * gradient: `(f(x_1) + ⋯ + f(x_k)) / k`
/// * accelerated: `f(x_k)`
///
/// Uses the `f(x_k)` values stored in the trace.
pub fn lhs_sequence(trace: &MethodTrace, p: &dyn Problem) -> Result<Vec<LhsValue>> {
    let horizon = trace.horizon;
    if trace.fx.len() < horizon + 1 {
        return Err(Error::TraceMismatch("trace is missing objective values".into()));
    }
    let fx = &trace.fx;
    let mut out = Vec::with_capacity(horizon + 1);
    match trace.method {
        MethodKind::Subgradient => {
            let g = p.lipschitz_f().ok_or_else(|| {
                Error::Configuration(format!("{} has no Lipschitz constant G", p.id()))
            })?;
            let (mut st, mut stf, mut stf_abs, mut st2) = (0.0, 0.0, 0.0, 0.0);
            for k in 0..=horizon {
                let t = trace.t[k];
                st += t;
                stf += t * fx[k];
                stf_abs += t * fx[k].abs();
                st2 += t * t;
                let penalty = 0.5 * g * g * st2;
                out.push(LhsValue { value: (stf - penalty) / st, magnitude: (stf_abs + penalty) / st });
            }
        }
        MethodKind::Gradient => {
            let (mut sum, mut sum_abs) = (0.0, 0.0);
            for k in 1..=horizon {
                sum += fx[k];
                sum_abs += fx[k].abs();
                out.push(LhsValue { value: sum / k as f64, magnitude: sum_abs / k as f64 });
            }
        }
        MethodKind::Accelerated | MethodKind::ProxAccelerated => {
            for v in &fx[1..=horizon] {
                out.push(LhsValue { value: *v, magnitude: v.abs() });
            }
        }
    }
    Ok(out)
}

/// `LHS_k` for a single iteration.
pub fn lhs(trace: &MethodTrace, p: &dyn Problem, k: usize) -> Result<f64> {
    let start = trace.method.start_index();
    if k < start || k > trace.horizon {
        return Err(Error::InvalidArgument(format!(
            "LHS is defined for k in {start}..={}, asked for {k}",
            trace.horizon
        )));
    }
    Ok(lhs_sequence(trace, p)?[k - start].value)
}

/// Closed-form suboptimality bound at iteration `k`, or `None` when the
/// optimal value or `dist(x_0, X̄)` is unknown.
///
/// * subgradient: `(dist² + G² Σ_{i≤k} t_i²) / (2 Σ_{i≤k} t_i)`, a bound on
///   `min_{i≤k} f(x_i) − f̄`
/// * gradient: `L dist² / (2k)`
/// * accelerated: `2 L dist² / (k + 1)²`
pub fn theorem_bound(p: &dyn Problem, x0: &Point, method: MethodKind, k: usize, steps: &[f64]) -> Option<f64> {
    p.optimal_value()?;
    let dist = p.distance_to_solution(x0)?;
    let d2 = dist * dist;
    match method {
        MethodKind::Subgradient => {
            let g = p.lipschitz_f()?;
            let window = steps.get(..=k)?;
            let st: f64 = window.iter().sum();
            let st2: f64 = window.iter().map(|t| t * t).sum();
            Some((d2 + g * g * st2) / (2.0 * st))
        }
        MethodKind::Gradient if k >= 1 => Some(p.lipschitz_grad()? * d2 / (2.0 * k as f64)),
        MethodKind::Accelerated if k >= 1 => {
            Some(2.0 * p.lipschitz_grad()? * d2 / ((k as f64 + 1.0) * (k as f64 + 1.0)))
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckKind {
    /// (a) `LHS_k ≤ certificate_k`
    ChainCertificate,
    /// (b) certificate `≤ −f*(z_k) + ⟨z_k, x⟩ + (μ_k/2)‖x − x_0‖²`
    ChainRelaxation,
    /// (c) `−f*(z_k) + ⟨z_k, x⟩ ≤ f(x)`
    ChainFenchel,
    /// (d) `LHS_k ≤ f(x) + (μ_k/2)‖x − x_0‖²`
    ChainEndToEnd,
    /// `LHS_{k+1} − (1−θ_k) LHS_k ≤ θ_k(⟨g_k, x_0 − y_k − z_k/μ_k⟩ + f(y_k) − θ_k‖g_k‖²/(2(1−θ_k)μ_k))`
    InductionStep,
    /// Exact update of `⟨z, x_0⟩ − ‖z‖²/(2μ)` under the z/μ recursion.
    DualQuadraticUpdate,
    /// `f*(z_{k+1}) ≤ (1 − θ_k) f*(z_k) + θ_k f*(g_k)`
    ConjugateConvexity,
    /// `f*(g_k) = ⟨g_k, y_k⟩ − f(y_k)` for `g_k ∈ ∂f(y_k)`
    SubgradientFenchel,
    /// `x_0 − y_k − z_k/μ_k = 0` (subgradient, gradient)
    OptimalityIdentity,
    /// `(1 − θ_k)(y_k − x_k) = θ_k (x_0 − y_k − z_k/μ_k)` (accelerated)
    MomentumIdentity,
    /// `y_k = (1 − θ_k) x_k + θ_k (x_0 − z_k/μ_k)` (accelerated)
    ExtrapolationIdentity,
    /// `x_{k+1} = (1 − θ_k) x_k + θ_k (x_0 − z_{k+1}/μ_{k+1})` (accelerated)
    IterateIdentity,
    /// `θ_k/((1−θ_k)μ_k) = t_{k+1}` (subgradient), `= 1/L` (gradient);
    /// `θ_k²/((1−θ_k)μ_k) = 1/L` (accelerated)
    StepScaleIdentity,
    /// `μ_k` against its closed form.
    MuClosedForm,
    /// `‖z_k‖ ≤ G` in the subgradient case.
    DualNormBound,
    /// Suboptimality against the closed-form theorem bound.
    TheoremBound,
    /// `f(x_{k+1}) ≤ f(x_k)` for the gradient method.
    DescentMonotone,
    /// `θ_{k+1}² = θ_k²(1 − θ_{k+1})`
    ThetaRecurrence,
    /// `θ_{k−1} ≤ 2/(k+1)`
    ThetaBound,
    /// Stored iterates obey the method's update formulas.
    TraceRecurrence,
    /// Stored `f(x_k)` matches the value oracle.
    TraceValue,
    /// Stored `g_k` matches the subgradient oracle.
    TraceGradient,
    /// Stored step sizes match the method's rule.
    TraceStep,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::ChainCertificate => "chain_a_lhs_le_certificate",
            CheckKind::ChainRelaxation => "chain_b_quadratic_relaxation",
            CheckKind::ChainFenchel => "chain_c_fenchel",
            CheckKind::ChainEndToEnd => "chain_d_end_to_end",
            CheckKind::InductionStep => "induction_step",
            CheckKind::DualQuadraticUpdate => "dual_quadratic_update",
            CheckKind::ConjugateConvexity => "conjugate_convexity",
            CheckKind::SubgradientFenchel => "subgradient_fenchel_equality",
            CheckKind::OptimalityIdentity => "identity_x0_minus_y_minus_z_over_mu",
            CheckKind::MomentumIdentity => "identity_momentum",
            CheckKind::ExtrapolationIdentity => "identity_y_from_dual",
            CheckKind::IterateIdentity => "identity_x_next_from_dual",
            CheckKind::StepScaleIdentity => "identity_step_scale",
            CheckKind::MuClosedForm => "mu_closed_form",
            CheckKind::DualNormBound => "dual_norm_bound",
            CheckKind::TheoremBound => "theorem_bound",
            CheckKind::DescentMonotone => "descent_monotone",
            CheckKind::ThetaRecurrence => "theta_recurrence",
            CheckKind::ThetaBound => "theta_bound",
            CheckKind::TraceRecurrence => "trace_recurrence",
            CheckKind::TraceValue => "trace_value",
            CheckKind::TraceGradient => "trace_gradient",
            CheckKind::TraceStep => "trace_step",
        }
    }

    pub fn is_chain(self) -> bool {
        matches!(
            self,
            CheckKind::ChainCertificate
                | CheckKind::ChainRelaxation
                | CheckKind::ChainFenchel
                | CheckKind::ChainEndToEnd
        )
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Pass,
    Vacuous,
    Fail,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Vacuous => "VACUOUS",
            Verdict::Fail => "FAIL",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One checked inequality or identity.
///
/// Inequalities are `lhs ≤ rhs`; identities store `‖difference‖` as `lhs` and
/// `0` as `rhs`. `residual = lhs − rhs` and the check passes when
/// `residual ≤ tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub k: usize,
    pub kind: CheckKind,
    /// Test point or other qualifier, empty when not applicable.
    pub at: String,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl CheckRecord {
    fn inequality(k: usize, kind: CheckKind, at: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let residual = lhs - rhs;
        let verdict = if residual <= tolerance { Verdict::Pass } else { Verdict::Fail };
        CheckRecord { k, kind, at: at.to_string(), lhs, rhs, residual, tolerance, verdict }
    }

    fn identity(k: usize, kind: CheckKind, at: &str, discrepancy: f64, tolerance: f64) -> Self {
        Self::inequality(k, kind, at, discrepancy, 0.0, tolerance)
    }

    fn vacuous(k: usize, kind: CheckKind, at: &str, lhs: f64, rhs: f64, hard: bool) -> Self {
        CheckRecord {
            k,
            kind,
            at: at.to_string(),
            lhs,
            rhs,
            residual: lhs - rhs,
            tolerance: 0.0,
            verdict: if hard { Verdict::Fail } else { Verdict::Vacuous },
        }
    }

    /// Inequality, k, residual and tolerance in one line.
    pub fn describe(&self) -> String {
        let at = if self.at.is_empty() { String::new() } else { format!(" at {}", self.at) };
        format!(
            "{} {}{at} k={} lhs={:.6e} rhs={:.6e} residual={:.6e} tol={:.3e}",
            self.verdict, self.kind, self.k, self.lhs, self.rhs, self.residual, self.tolerance
        )
    }
}

/// A named point `x` at which the chain is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct TestPoint {
    pub label: String,
    pub x: Point,
}

impl TestPoint {
    pub fn new(label: impl Into<String>, x: Point) -> Self {
        TestPoint { label: label.into(), x }
    }
}

/// The minimizer nearest to `x_0` (when known), `x_0` itself and the last
/// iterate of the certificate range.
pub fn default_test_points(p: &dyn Problem, trace: &MethodTrace) -> Vec<TestPoint> {
    let mut points = Vec::new();
    if let Some(xs) = p.nearest_solution(trace.x0().as_slice()) {
        points.push(TestPoint::new("minimizer", xs));
    }
    points.push(TestPoint::new("x0", trace.x0().clone()));
    if let Some(last) = trace.x.get(trace.horizon) {
        points.push(TestPoint::new("x_last", last.clone()));
    }
    points
}

/// Per-iteration record of the bound chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRecord {
    pub k: usize,
    pub lhs: f64,
    pub certificate: ExtendedReal,
    pub vacuous: bool,
    pub mu: f64,
    /// `f(x) + (μ_k/2)‖x − x_0‖²` per test point.
    pub relaxed_bounds: Vec<(String, f64)>,
    pub theorem_bound: Option<f64>,
    pub checks: Vec<CheckRecord>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundChain {
    pub records: Vec<ChainRecord>,
}

/// Checks (a)–(d) at every covered iteration, plus the `μ_k` closed form,
/// the dual-norm bound (subgradient) and the theorem bound.
pub fn verify_chain(
    trace: &MethodTrace,
    cert: &DualCertificate,
    p: &dyn Problem,
    test_points: &[TestPoint],
    tol: &Tolerances,
) -> Result<BoundChain> {
    let x0 = trace.x0();
    let lhs_values = lhs_sequence(trace, p)?;
    let hard_vacuity = trace.method == MethodKind::Subgradient;
    let fbar = p.optimal_value();
    let test_values: Vec<f64> = test_points.iter().map(|tp| p.value(&tp.x)).collect::<Result<_>>()?;
    let mut best_prefix = f64::INFINITY;
    let mut records = Vec::with_capacity(lhs_values.len());

    for k in cert.indices() {
        let LhsValue { value: lhs_k, magnitude: lhs_mag } = lhs_values[k - cert.start_index];
        let (z, mu) = cert_at(cert, k)?;
        let conj = p.conjugate(z)?;
        let zx0 = z.dot(x0);
        let quad = z.norm_sq() / (2.0 * mu);
        let certificate = (-conj).plus(zx0 - quad);
        let vacuous = !conj.is_finite();
        let mut checks = Vec::new();

        match conj {
            ExtendedReal::Finite(fc) => checks.push(CheckRecord::inequality(
                k,
                CheckKind::ChainCertificate,
                "",
                lhs_k,
                -fc + zx0 - quad,
                tol.scaled(&[lhs_mag, fc, zx0, quad]),
            )),
            _ => checks.push(CheckRecord::vacuous(
                k,
                CheckKind::ChainCertificate,
                "",
                lhs_k,
                f64::NEG_INFINITY,
                hard_vacuity,
            )),
        }

        let mut relaxed_bounds = Vec::with_capacity(test_points.len());
        for (tp, &fx) in test_points.iter().zip(&test_values) {
            let zx = z.dot(&tp.x);
            let prox = 0.5 * mu * tp.x.sub(x0).norm_sq();
            let label = tp.label.as_str();
            match conj {
                ExtendedReal::Finite(fc) => {
                    checks.push(CheckRecord::inequality(
                        k,
                        CheckKind::ChainRelaxation,
                        label,
                        -fc + zx0 - quad,
                        -fc + zx + prox,
                        tol.scaled(&[fc, zx0, quad, zx, prox]),
                    ));
                    checks.push(CheckRecord::inequality(
                        k,
                        CheckKind::ChainFenchel,
                        label,
                        -fc + zx,
                        fx,
                        tol.scaled(&[fc, zx, fx]),
                    ));
                }
                _ => {
                    for kind in [CheckKind::ChainRelaxation, CheckKind::ChainFenchel] {
                        checks.push(CheckRecord::vacuous(k, kind, label, f64::NEG_INFINITY, fx + prox, hard_vacuity));
                    }
                }
            }
            checks.push(CheckRecord::inequality(
                k,
                CheckKind::ChainEndToEnd,
                label,
                lhs_k,
                fx + prox,
                tol.scaled(&[lhs_mag, fx, prox]),
            ));
            relaxed_bounds.push((tp.label.clone(), fx + prox));
        }

        let (mu_closed, mu_terms) = match trace.method {
            MethodKind::Subgradient => {
                let st: f64 = trace.t[..=k].iter().sum();
                (1.0 / st, 1.0 / st)
            }
            MethodKind::Gradient => {
                let l = p.lipschitz_grad().unwrap_or(f64::NAN);
                (l / k as f64, l / k as f64)
            }
            MethodKind::Accelerated | MethodKind::ProxAccelerated => {
                let l = p.lipschitz_grad().unwrap_or(f64::NAN);
                let th = trace.theta.as_ref().and_then(|t| t.get(k - 1)).unwrap_or(f64::NAN);
                (l * th * th, l * th * th)
            }
        };
        checks.push(CheckRecord::identity(
            k,
            CheckKind::MuClosedForm,
            "",
            (mu - mu_closed).abs(),
            tol.eps_rel * mu_terms.abs().max(f64::MIN_POSITIVE),
        ));

        if trace.method == MethodKind::Subgradient {
            if let Some(g) = p.lipschitz_f() {
                checks.push(CheckRecord::inequality(
                    k,
                    CheckKind::DualNormBound,
                    "",
                    z.norm(),
                    g * (1.0 + tol.eps_rel),
                    0.0,
                ));
            }
        }

        best_prefix = match trace.method {
            MethodKind::Subgradient if k == 0 => trace.fx[0],
            MethodKind::Subgradient => best_prefix.min(trace.fx[k]),
            _ => trace.fx[k],
        };
        let theorem = if trace.method == MethodKind::ProxAccelerated {
            None
        } else {
            theorem_bound(p, x0, trace.method, k, &trace.t)
        };
        if let (Some(bound), Some(fbar)) = (theorem, fbar) {
            checks.push(CheckRecord::inequality(
                k,
                CheckKind::TheoremBound,
                "minimizer",
                best_prefix - fbar,
                bound,
                tol.scaled(&[best_prefix, fbar, bound]),
            ));
        }

        records.push(ChainRecord {
            k,
            lhs: lhs_k,
            certificate,
            vacuous,
            mu,
            relaxed_bounds,
            theorem_bound: theorem,
            checks,
        });
    }
    Ok(BoundChain { records })
}

/// The one-step inequality and supporting identities for step `k → k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct InductionRecord {
    pub k: usize,
    /// `RHS − LHS` of the one-step inequality; must be `≥ −tolerance`.
    pub slack: f64,
    pub tolerance: f64,
    pub checks: Vec<CheckRecord>,
}

fn norm_of_diff(a: &Point, b: &Point) -> f64 {
    a.sub(b).norm()
}

/// Checks the one-step inequality for `k → k + 1` along with the dual
/// quadratic update, convexity of `f*`, Fenchel equality at `(g_k, y_k)` and
/// the method-specific identities.
pub fn verify_induction_step(
    trace: &MethodTrace,
    cert: &DualCertificate,
    p: &dyn Problem,
    k: usize,
    tol: &Tolerances,
) -> Result<InductionRecord> {
    let lhs_values = lhs_sequence(trace, p)?;
    induction_step_with(trace, cert, p, k, tol, &lhs_values)
}

fn induction_step_with(
    trace: &MethodTrace,
    cert: &DualCertificate,
    p: &dyn Problem,
    k: usize,
    tol: &Tolerances,
    lhs_values: &[LhsValue],
) -> Result<InductionRecord> {
    if k >= cert.last_index() || k < cert.start_index {
        return Err(Error::InvalidArgument(format!(
            "induction step needs start ≤ k < {}, got k={k}",
            cert.last_index()
        )));
    }
    let x0 = trace.x0();
    let step = cert.step(k).expect("step exists below last index");
    let (theta, y, g) = (step.theta, &step.y, &step.g);
    let (z, mu) = cert_at(cert, k)?;
    let (z_next, mu_next) = cert_at(cert, k + 1)?;
    let start = cert.start_index;
    let lhs_k = lhs_values[k - start];
    let lhs_next = lhs_values[k + 1 - start];
    let fy = p.value(y)?;
    let z_over_mu = z.scale(1.0 / mu);
    let gap_vec = x0.sub(y).sub(&z_over_mu);
    let inner = g.dot(&gap_vec);
    let curvature = theta / (2.0 * (1.0 - theta) * mu) * g.norm_sq();
    let step_lhs = lhs_next.value - (1.0 - theta) * lhs_k.value;
    let step_rhs = theta * (inner + fy - curvature);
    let tolerance = tol.scaled(&[
        lhs_next.magnitude,
        lhs_k.magnitude,
        theta * g.norm() * (x0.norm() + y.norm() + z_over_mu.norm()),
        theta * fy,
        theta * curvature,
    ]);
    let mut checks = vec![CheckRecord::inequality(k, CheckKind::InductionStep, "", step_lhs, step_rhs, tolerance)];

    // ⟨z, x0⟩ − ‖z‖²/(2μ) under the recursion
    let d_next = dual_quadratic(z_next, mu_next, x0);
    let d_k = dual_quadratic(z, mu, x0);
    let g_term = g.dot(&x0.sub(&z_over_mu));
    let predicted = (1.0 - theta) * d_k + theta * (g_term - curvature);
    checks.push(CheckRecord::identity(
        k,
        CheckKind::DualQuadraticUpdate,
        "",
        (d_next - predicted).abs(),
        tol.scaled(&[d_next, d_k, theta * g_term, theta * curvature]),
    ));

    let conj_next = p.conjugate(z_next)?;
    let conj_k = p.conjugate(z)?;
    let conj_g = p.conjugate(g)?;
    match (conj_next, conj_k, conj_g) {
        (ExtendedReal::Finite(a), ExtendedReal::Finite(b), ExtendedReal::Finite(c)) => {
            let mix = (1.0 - theta) * b + theta * c;
            checks.push(CheckRecord::inequality(
                k,
                CheckKind::ConjugateConvexity,
                "",
                a,
                mix,
                tol.scaled(&[a, b, c]),
            ));
        }
        _ => checks.push(CheckRecord::vacuous(
            k,
            CheckKind::ConjugateConvexity,
            "",
            conj_next.to_f64(),
            f64::INFINITY,
            trace.method == MethodKind::Subgradient,
        )),
    }
    let gy = g.dot(y);
    match conj_g {
        ExtendedReal::Finite(c) => checks.push(CheckRecord::identity(
            k,
            CheckKind::SubgradientFenchel,
            "",
            (c - (gy - fy)).abs(),
            tol.scaled(&[c, gy, fy]),
        )),
        _ => checks.push(CheckRecord::vacuous(
            k,
            CheckKind::SubgradientFenchel,
            "",
            f64::INFINITY,
            gy - fy,
            true,
        )),
    }

    let vec_tol = tol.scaled(&[x0.norm(), y.norm(), z_over_mu.norm()]);
    let ratio = theta / ((1.0 - theta) * mu);
    match trace.method {
        MethodKind::Subgradient | MethodKind::Gradient => {
            checks.push(CheckRecord::identity(k, CheckKind::OptimalityIdentity, "", gap_vec.norm(), vec_tol));
            let expected = match trace.method {
                MethodKind::Subgradient => trace.t[k + 1],
                _ => trace.t.get(k).copied().unwrap_or(f64::NAN),
            };
            checks.push(CheckRecord::identity(
                k,
                CheckKind::StepScaleIdentity,
                "",
                (ratio - expected).abs(),
                tol.eps_rel * expected.abs(),
            ));
        }
        MethodKind::Accelerated | MethodKind::ProxAccelerated => {
            let xk = point_at(&trace.x, k, "x")?;
            let x_next = point_at(&trace.x, k + 1, "x")?;
            let momentum_lhs = y.sub(xk).scale(1.0 - theta);
            let momentum_rhs = gap_vec.scale(theta);
            checks.push(CheckRecord::identity(
                k,
                CheckKind::MomentumIdentity,
                "",
                norm_of_diff(&momentum_lhs, &momentum_rhs),
                tol.scaled(&[x0.norm(), y.norm(), xk.norm(), z_over_mu.norm()]),
            ));
            let y_pred = xk.combine(1.0 - theta, theta, &x0.sub(&z_over_mu));
            checks.push(CheckRecord::identity(
                k,
                CheckKind::ExtrapolationIdentity,
                "",
                norm_of_diff(y, &y_pred),
                tol.scaled(&[xk.norm(), x0.norm(), z_over_mu.norm()]),
            ));
            let z_next_over_mu = z_next.scale(1.0 / mu_next);
            let x_pred = xk.combine(1.0 - theta, theta, &x0.sub(&z_next_over_mu));
            if trace.method == MethodKind::Accelerated {
                checks.push(CheckRecord::identity(
                    k,
                    CheckKind::IterateIdentity,
                    "",
                    norm_of_diff(x_next, &x_pred),
                    tol.scaled(&[xk.norm(), x0.norm(), z_next_over_mu.norm()]),
                ));
            }
            let l = p.lipschitz_grad().unwrap_or(f64::NAN);
            checks.push(CheckRecord::identity(
                k,
                CheckKind::StepScaleIdentity,
                "",
                (theta * ratio - 1.0 / l).abs(),
                tol.eps_rel / l,
            ));
        }
    }

    Ok(InductionRecord { k, slack: step_rhs - step_lhs, tolerance, checks })
}

/// Consistency of the stored trace with the oracles and the update rules.
pub fn verify_trace(trace: &MethodTrace, p: &dyn Problem, tol: &Tolerances) -> Result<Vec<CheckRecord>> {
    let mut checks = Vec::new();
    let horizon = trace.horizon;
    // Values the theorem quantities read.
    let value_range = match trace.method {
        MethodKind::Subgradient => 0..=horizon,
        _ => 1..=horizon,
    };
    for k in value_range {
        let (Some(x), Some(&stored)) = (trace.x.get(k), trace.fx.get(k)) else {
            return Err(Error::TraceMismatch(format!("trace has no iterate at k={k}")));
        };
        if trace.method == MethodKind::ProxAccelerated {
            continue;
        }
        let fresh = p.value(x)?;
        checks.push(CheckRecord::identity(
            k,
            CheckKind::TraceValue,
            "",
            (stored - fresh).abs(),
            tol.scaled(&[fresh]),
        ));
    }

    let steps = match trace.method {
        MethodKind::Subgradient => horizon + 1,
        _ => horizon,
    };
    if trace.t.len() < steps {
        return Err(Error::TraceMismatch(format!("trace has {} step sizes, needs {steps}", trace.t.len())));
    }
    let l = p.lipschitz_grad();
    for k in 0..steps {
        let Some(q) = trace.query_point(k) else {
            return Err(Error::TraceMismatch(format!("trace has no query point at k={k}")));
        };
        let g = match trace.g.get(k) {
            Some(Some(g)) => {
                let fresh = p.subgradient(q)?;
                checks.push(CheckRecord::identity(
                    k,
                    CheckKind::TraceGradient,
                    "",
                    norm_of_diff(g, &fresh),
                    tol.scaled(&[fresh.norm()]),
                ));
                g.clone()
            }
            _ => p.subgradient(q)?,
        };
        let t = trace.t[k];
        if trace.method != MethodKind::Subgradient {
            if let Some(l) = l {
                checks.push(CheckRecord::identity(
                    k,
                    CheckKind::TraceStep,
                    "",
                    (t - 1.0 / l).abs(),
                    tol.eps_rel / l,
                ));
            }
        }
        if trace.method == MethodKind::ProxAccelerated {
            continue;
        }
        if let Some(next) = trace.x.get(k + 1) {
            let predicted = q.axpy(-t, &g);
            checks.push(CheckRecord::identity(
                k,
                CheckKind::TraceRecurrence,
                "x",
                norm_of_diff(next, &predicted),
                tol.scaled(&[q.norm(), t * g.norm()]),
            ));
        }
    }

    if let (Some(ys), Some(theta)) = (&trace.y, &trace.theta) {
        for k in 0..horizon {
            let (Some(x_next), Some(xk), Some(y_next)) = (trace.x.get(k + 1), trace.x.get(k), ys.get(k + 1))
            else {
                continue;
            };
            let (Some(tk), Some(tn)) = (theta.get(k), theta.get(k + 1)) else {
                return Err(Error::TraceMismatch(format!("no theta at k={}", k + 1)));
            };
            let c = tn * (1.0 - tk) / tk;
            let predicted = x_next.axpy(c, &x_next.sub(xk));
            checks.push(CheckRecord::identity(
                k,
                CheckKind::TraceRecurrence,
                "y",
                norm_of_diff(y_next, &predicted),
                tol.scaled(&[x_next.norm(), c * x_next.sub(xk).norm()]),
            ));
        }
        for (i, r) in theta.recurrence_residuals().enumerate() {
            checks.push(CheckRecord::identity(i, CheckKind::ThetaRecurrence, "", r, tol.eps_abs));
        }
        for (i, slack) in theta.bound_slacks().enumerate() {
            let k = i + 1;
            checks.push(CheckRecord::inequality(k, CheckKind::ThetaBound, "", -slack, 0.0, tol.eps_abs));
        }
    }

    if trace.method == MethodKind::Gradient {
        for k in 0..horizon {
            let (a, b) = (trace.fx[k], trace.fx[k + 1]);
            checks.push(CheckRecord::inequality(k + 1, CheckKind::DescentMonotone, "", b, a, tol.eps_abs));
        }
    }
    Ok(checks)
}

/// Everything verified about one run, plus the per-iteration summary that
/// the CSV output is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub method: MethodKind,
    pub certificate: DualCertificate,
    pub chain: BoundChain,
    pub induction: Vec<InductionRecord>,
    pub trace_checks: Vec<CheckRecord>,
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub k: usize,
    pub f_xk: f64,
    pub lhs: f64,
    pub certificate: ExtendedReal,
    pub vacuous: bool,
    pub mu: f64,
    pub theta: Option<f64>,
    pub theorem_bound: Option<f64>,
    /// Largest `lhs − rhs` over the chain checks (a)–(d) at this k.
    pub residual_chain_max: Option<f64>,
    /// `LHS − RHS` of the one-step inequality for `k → k + 1`.
    pub residual_induction: Option<f64>,
    pub verdict: Verdict,
    /// First failing (or vacuous) check at this k, if any.
    pub first_issue: Option<CheckRecord>,
}

impl VerificationReport {
    pub fn all_checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.trace_checks
            .iter()
            .chain(self.chain.records.iter().flat_map(|r| r.checks.iter()))
            .chain(self.induction.iter().flat_map(|r| r.checks.iter()))
    }

    pub fn verdict(&self) -> Verdict {
        self.all_checks().map(|c| c.verdict).max().unwrap_or(Verdict::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.all_checks().filter(|c| c.verdict == Verdict::Fail)
    }
}

/// Builds the certificate and runs every check on `trace`.
pub fn verify_run(
    trace: &MethodTrace,
    p: &dyn Problem,
    test_points: &[TestPoint],
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let certificate = build_certificate(trace, p)?;
    let chain = verify_chain(trace, &certificate, p, test_points, tol)?;
    let lhs_values = lhs_sequence(trace, p)?;
    let induction = (certificate.start_index..certificate.last_index())
        .map(|k| induction_step_with(trace, &certificate, p, k, tol, &lhs_values))
        .collect::<Result<Vec<_>>>()?;
    let trace_checks = verify_trace(trace, p, tol)?;

    let rows = chain
        .records
        .iter()
        .map(|rec| {
            let k = rec.k;
            // the step k-1 -> k is what establishes the bound at k
            let step = (k - certificate.start_index).checked_sub(1).and_then(|i| induction.get(i));
            let issues = trace_checks
                .iter()
                .filter(|c| c.k == k)
                .chain(rec.checks.iter())
                .chain(step.into_iter().flat_map(|s| s.checks.iter()));
            let mut verdict = Verdict::Pass;
            let mut first_issue: Option<CheckRecord> = None;
            for c in issues {
                if c.verdict > verdict {
                    verdict = c.verdict;
                    first_issue = Some(c.clone());
                }
            }
            let theta = match trace.method {
                MethodKind::Accelerated | MethodKind::ProxAccelerated => {
                    trace.theta.as_ref().and_then(|t| t.get(k))
                }
                _ => certificate.step(k).map(|s| s.theta),
            };
            SummaryRow {
                k,
                f_xk: trace.fx[k],
                lhs: rec.lhs,
                certificate: rec.certificate,
                vacuous: rec.vacuous,
                mu: rec.mu,
                theta,
                theorem_bound: rec.theorem_bound,
                residual_chain_max: rec
                    .checks
                    .iter()
                    .filter(|c| c.kind.is_chain() && c.residual.is_finite())
                    .map(|c| c.residual)
                    .reduce(f64::max),
                residual_induction: step.map(|s| -s.slack),
                verdict,
                first_issue,
            }
        })
        .collect();

    Ok(VerificationReport { method: trace.method, certificate, chain, induction, trace_checks, rows })
}
