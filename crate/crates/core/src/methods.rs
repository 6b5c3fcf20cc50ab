//! The subgradient/gradient method and the accelerated gradient method.
//!
//! Runs use a fixed iteration budget and record every iterate, so the
//! certificate engine can reconstruct each theorem quantity afterwards. The
//! trace stores exactly what was computed; nothing is recomputed on read.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::problems::Problem;

/// Upper limit on `iterations · dim` scalars held by one trace.
pub const TRACE_BUDGET: usize = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MethodKind {
    Subgradient,
    Gradient,
    Accelerated,
    /// Accelerated method with a proximal step; see [`crate::proxprobe`].
    ProxAccelerated,
}

impl MethodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodKind::Subgradient => "subgradient",
            MethodKind::Gradient => "gradient",
            MethodKind::Accelerated => "accelerated",
            MethodKind::ProxAccelerated => "prox_accelerated",
        }
    }

    /// First iteration index covered by the dual certificate.
    pub fn start_index(self) -> usize {
        match self {
            MethodKind::Subgradient => 0,
            _ => 1,
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "subgradient" => Ok(MethodKind::Subgradient),
            "gradient" => Ok(MethodKind::Gradient),
            "accelerated" => Ok(MethodKind::Accelerated),
            "prox_accelerated" => Ok(MethodKind::ProxAccelerated),
            other => Err(Error::Configuration(format!("unknown method `{other}`"))),
        }
    }
}

/// Step sizes `t_0, t_1, …`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    /// `t_i = 1/√(K+1)` for `i = 0..=K`; the horizon `K` is fixed up front.
    HorizonSqrt(usize),
    /// `t_i = 1/L`.
    InverseL,
    Explicit(Vec<f64>),
}

impl StepSchedule {
    /// The first `count` steps, all strictly positive.
    pub fn steps(&self, count: usize, lipschitz_grad: Option<f64>) -> Result<Vec<f64>> {
        let steps = match self {
            StepSchedule::Constant(t) => vec![*t; count],
            StepSchedule::HorizonSqrt(horizon) => {
                if count != horizon + 1 {
                    return Err(Error::Configuration(format!(
                        "horizon_sqrt schedule was fixed for K={horizon} but the run needs {count} steps"
                    )));
                }
                vec![1.0 / ((horizon + 1) as f64).sqrt(); count]
            }
            StepSchedule::InverseL => {
                let l = lipschitz_grad.ok_or_else(|| {
                    Error::Configuration("inverse_L schedule needs a gradient Lipschitz constant".into())
                })?;
                vec![1.0 / l; count]
            }
            StepSchedule::Explicit(list) => {
                if list.len() < count {
                    return Err(Error::Configuration(format!(
                        "explicit schedule has {} steps, run needs {count}",
                        list.len()
                    )));
                }
                list[..count].to_vec()
            }
        };
        if let Some(bad) = steps.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(Error::Configuration(format!("step sizes must be positive, got {bad}")));
        }
        Ok(steps)
    }
}

/// `θ_{k+1}`: the root in `(0, 1)` of `θ² + θ_k²θ − θ_k² = 0`.
///
/// Evaluated as `2θ_k / (√(θ_k² + 4) + θ_k)`, which avoids the cancellation in
/// the textbook form `θ_k(√(θ_k² + 4) − θ_k)/2`.
pub fn theta_next(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!("theta must lie in (0, 1], got {theta}")));
    }
    Ok(2.0 * theta / ((theta * theta + 4.0).sqrt() + theta))
}

/// Momentum parameters `θ_0 = 1, θ_1, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSequence {
    values: Vec<f64>,
}

impl ThetaSequence {
    /// `θ_0, …, θ_last`.
    pub fn generate(last: usize) -> Self {
        let mut values = Vec::with_capacity(last + 1);
        values.push(1.0);
        for k in 0..last {
            let next = theta_next(values[k]).expect("theta stays in (0, 1]");
            values.push(next);
        }
        ThetaSequence { values }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.first() != Some(&1.0) {
            return Err(Error::InvalidArgument("theta sequence must start at 1".into()));
        }
        if values[1..].iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return Err(Error::InvalidArgument("theta_k must lie in (0, 1) for k ≥ 1".into()));
        }
        Ok(ThetaSequence { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, k: usize) -> Option<f64> {
        self.values.get(k).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `|θ_{k+1}² − θ_k²(1 − θ_{k+1})|` for each consecutive pair.
    pub fn recurrence_residuals(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| (w[1] * w[1] - w[0] * w[0] * (1.0 - w[1])).abs())
    }

    /// `2/(k+1) − θ_{k−1}` for `k = 1..len`; nonnegative when the bound holds.
    pub fn bound_slacks(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().enumerate().map(|(i, t)| 2.0 / (i as f64 + 2.0) - t)
    }
}

/// Full iterate history of one run.
///
/// Index conventions:
/// * subgradient with horizon `K`: steps `t_0..=t_K`, `g_k ∈ ∂f(x_k)` for
///   `k = 0..=K`, iterates `x_0..=x_{K+1}`.
/// * gradient with `K` iterations: `t_0..t_{K−1}`, `g_k = ∇f(x_k)`,
///   iterates `x_0..=x_K`.
/// * accelerated: as gradient but `g_k = ∇f(y_k)`, plus `y_0..=y_K` and
///   `θ_0..=θ_K`.
///
/// `g` entries are `None` only for traces read back from storage that did not
/// carry them; the certificate engine re-queries the oracle for those.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodTrace {
    pub method: MethodKind,
    pub problem_id: String,
    /// Theorem horizon: the last iteration index covered by the certificate.
    pub horizon: usize,
    pub x: Vec<Point>,
    /// `f(x_k)` as evaluated during the run.
    pub fx: Vec<f64>,
    pub y: Option<Vec<Point>>,
    pub g: Vec<Option<Point>>,
    pub t: Vec<f64>,
    pub theta: Option<ThetaSequence>,
}

impl MethodTrace {
    pub fn x0(&self) -> &Point {
        &self.x[0]
    }

    /// Query point of step `k`: `y_k` for the accelerated methods, else `x_k`.
    pub fn query_point(&self, k: usize) -> Option<&Point> {
        match &self.y {
            Some(y) => y.get(k),
            None => self.x.get(k),
        }
    }
}

fn check_budget(iterations: usize, dim: usize) -> Result<()> {
    if iterations.saturating_mul(dim) > TRACE_BUDGET {
        return Err(Error::Configuration(format!(
            "trace of {iterations} iterations in dimension {dim} exceeds the budget of {TRACE_BUDGET} scalars"
        )));
    }
    Ok(())
}

fn finite_point(p: Point, k: usize, what: &str) -> Result<Point> {
    if p.is_finite() {
        Ok(p)
    } else {
        Err(Error::OracleFailure { k, detail: format!("{what} is not finite: {p:?}") })
    }
}

fn finite_value(v: f64, k: usize, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::OracleFailure { k, detail: format!("{what} is not finite ({v})") })
    }
}

/// `x_{k+1} = x_k − t_k g_k` for every supplied step.
fn descent_loop(p: &dyn Problem, x0: &Point, steps: &[f64]) -> Result<(Vec<Point>, Vec<f64>, Vec<Option<Point>>)> {
    x0.check_dim(p.dim())?;
    let mut x = vec![x0.clone()];
    let mut fx = Vec::with_capacity(steps.len() + 1);
    let mut g = Vec::with_capacity(steps.len());
    for (k, &t) in steps.iter().enumerate() {
        let xk = &x[k];
        fx.push(finite_value(p.value_at(xk.as_slice()), k, "f(x_k)")?);
        let gk = finite_point(p.subgradient(xk)?, k, "subgradient")?;
        let next = finite_point(xk.axpy(-t, &gk), k + 1, "x_{k+1}")?;
        g.push(Some(gk));
        x.push(next);
    }
    let last = steps.len();
    fx.push(finite_value(p.value_at(x[last].as_slice()), last, "f(x_k)")?);
    Ok((x, fx, g))
}

/// Subgradient method with horizon `K`: performs the `K + 1` steps
/// `t_0, …, t_K` so that `g_0, …, g_K` are all recorded.
pub fn run_subgradient(p: &dyn Problem, x0: &Point, schedule: &StepSchedule, horizon: usize) -> Result<MethodTrace> {
    check_budget(horizon + 2, p.dim())?;
    let t = schedule.steps(horizon + 1, p.lipschitz_grad())?;
    let (x, fx, g) = descent_loop(p, x0, &t)?;
    Ok(MethodTrace {
        method: MethodKind::Subgradient,
        problem_id: p.id().to_string(),
        horizon,
        x,
        fx,
        y: None,
        g,
        t,
        theta: None,
    })
}

fn smooth_constant(p: &dyn Problem, iterations: usize) -> Result<f64> {
    if !p.is_differentiable() {
        return Err(Error::Configuration(format!("{} is not differentiable", p.id())));
    }
    if iterations == 0 {
        return Err(Error::Configuration("gradient methods need at least one iteration".into()));
    }
    p.lipschitz_grad()
        .ok_or_else(|| Error::Configuration(format!("{} has no gradient Lipschitz constant", p.id())))
}

/// Gradient method with `t_k = 1/L`, `K` iterations.
pub fn run_gradient(p: &dyn Problem, x0: &Point, iterations: usize) -> Result<MethodTrace> {
    let l = smooth_constant(p, iterations)?;
    check_budget(iterations + 1, p.dim())?;
    let t = vec![1.0 / l; iterations];
    let (x, fx, g) = descent_loop(p, x0, &t)?;
    Ok(MethodTrace {
        method: MethodKind::Gradient,
        problem_id: p.id().to_string(),
        horizon: iterations,
        x,
        fx,
        y: None,
        g,
        t,
        theta: None,
    })
}

/// Accelerated gradient method with `t_k = 1/L`, `K` iterations.
pub fn run_accelerated(p: &dyn Problem, x0: &Point, iterations: usize) -> Result<MethodTrace> {
    let l = smooth_constant(p, iterations)?;
    let mut trace = accelerated_loop(
        p,
        x0,
        iterations,
        1.0 / l,
        |x| p.value_at(x.as_slice()),
        |v, _t| v,
    )?;
    trace.method = MethodKind::Accelerated;
    Ok(trace)
}

/// Shared body of the accelerated methods. `step_map` receives the gradient
/// step `y_k − t ∇f(y_k)` and returns `x_{k+1}`; the plain method passes it
/// through unchanged, so both variants produce bitwise-identical iterates when
/// the map is the identity.
pub(crate) fn accelerated_loop(
    p: &dyn Problem,
    x0: &Point,
    iterations: usize,
    step: f64,
    objective: impl Fn(&Point) -> f64,
    step_map: impl Fn(Point, f64) -> Point,
) -> Result<MethodTrace> {
    x0.check_dim(p.dim())?;
    check_budget(2 * (iterations + 1), p.dim())?;
    let mut x = vec![x0.clone()];
    let mut y = vec![x0.clone()];
    let mut fx = vec![finite_value(objective(x0), 0, "f(x_0)")?];
    let mut g = Vec::with_capacity(iterations);
    let mut theta = vec![1.0];
    for k in 0..iterations {
        let gk = finite_point(p.subgradient(&y[k])?, k, "gradient at y_k")?;
        let next = finite_point(step_map(y[k].axpy(-step, &gk), step), k + 1, "x_{k+1}")?;
        fx.push(finite_value(objective(&next), k + 1, "f(x_k)")?);
        let theta_k = theta[k];
        let theta_n = theta_next(theta_k)?;
        let momentum = theta_n * (1.0 - theta_k) / theta_k;
        let y_next = finite_point(next.axpy(momentum, &next.sub(&x[k])), k + 1, "y_{k+1}")?;
        g.push(Some(gk));
        theta.push(theta_n);
        x.push(next);
        y.push(y_next);
    }
    Ok(MethodTrace {
        method: MethodKind::Accelerated,
        problem_id: p.id().to_string(),
        horizon: iterations,
        x,
        fx,
        y: Some(y),
        g,
        t: vec![step; iterations],
        theta: Some(ThetaSequence { values: theta }),
    })
}
