//! Probe of the conjectured certificate for proximal accelerated gradient.
//!
//! For `f = φ + ψ` with `φ` smooth and `ψ` prox-friendly, the accelerated
//! method takes `x_{k+1} = Prox_t(y_k − t∇φ(y_k))`. The conjectured bound is
//!
//! ```text
//! f(x_k) ≤ −φ*(z_k) + min_u { ψ(u) + ⟨z_k, u⟩ + (μ_k/2)‖u − x_0‖² }
//! ```
//!
//! with `z_k`, `μ_k` built exactly as in the smooth accelerated case from
//! `g_k = ∇φ(y_k)`. Nothing here asserts the bound. Violations are counted
//! and reported, labelled CONJECTURE.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::certificates::{build_certificate, dual_quadratic, DualCertificate};
use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::methods::{accelerated_loop, MethodKind, MethodTrace};
use crate::point::Point;
use crate::problems::{parse_problem, ProblemInstance};
use crate::tolerance::Tolerances;

/// Label carried by every probe output.
pub const CONJECTURE: &str = "CONJECTURE";

/// Which vector feeds the z-recursion in the composite case.
pub const DUAL_FEED: &str = "g_k = grad phi(y_k)";

#[derive(Debug, Clone, PartialEq)]
pub enum Psi {
    /// `ψ ≡ 0`; the probe then coincides with the smooth method.
    Zero,
    /// `λ‖x‖₁`
    L1(f64),
    /// Indicator of `{lo ≤ x ≤ hi}`; bounds may be infinite.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Psi {
    pub fn l1(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("l1 weight must be positive, got {lambda}")));
        }
        Ok(Psi::L1(lambda))
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h) || l.is_nan() || h.is_nan() || *l == f64::INFINITY) {
            return Err(Error::InvalidArgument("box needs lo < hi in every coordinate".into()));
        }
        Ok(Psi::Box { lo, hi })
    }

    /// Parses `zero`, `l1:lambda=0.5` or `box:lo=0,-inf:hi=inf,1`.
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |why: &str| Error::Configuration(format!("psi `{spec}`: {why}"));
        let mut parts = spec.split(':');
        let kind = parts.next().unwrap_or_default().trim();
        let mut fields = std::collections::BTreeMap::new();
        for part in parts {
            let (key, value) = part.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            if fields.insert(key.trim(), value.trim()).is_some() {
                return Err(bad("duplicate key"));
            }
        }
        let vector = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad("not a number")))
                .collect()
        };
        let psi = match kind {
            "zero" if fields.is_empty() => Psi::Zero,
            "l1" => {
                let lambda = fields.remove("lambda").ok_or_else(|| bad("missing lambda"))?;
                Psi::l1(lambda.parse().map_err(|_| bad("lambda is not a number"))?)?
            }
            "box" => {
                let lo = vector(fields.remove("lo").ok_or_else(|| bad("missing lo"))?)?;
                let hi = vector(fields.remove("hi").ok_or_else(|| bad("missing hi"))?)?;
                Psi::boxed(lo, hi)?
            }
            _ => return Err(bad("unknown kind")),
        };
        if let Some(key) = fields.keys().next() {
            return Err(bad(&format!("unknown key `{key}`")));
        }
        Ok(psi)
    }

    pub fn value(&self, x: &[f64]) -> ExtendedReal {
        match self {
            Psi::Zero => ExtendedReal::Finite(0.0),
            Psi::L1(lambda) => ExtendedReal::Finite(lambda * x.iter().map(|v| v.abs()).sum::<f64>()),
            Psi::Box { lo, hi } => {
                if x.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| l <= v && v <= h) {
                    ExtendedReal::Finite(0.0)
                } else {
                    ExtendedReal::PosInfinity
                }
            }
        }
    }

    /// `argmin_y ψ(y) + ‖x − y‖²/(2t)`.
    pub fn prox(&self, x: Point, t: f64) -> Point {
        match self {
            Psi::Zero => x,
            Psi::L1(lambda) => {
                let shrink = lambda * t;
                Point::from_vec_unchecked(x.into_vec().into_iter().map(|v| soft_threshold(v, shrink)).collect())
            }
            Psi::Box { lo, hi } => Point::from_vec_unchecked(
                x.into_vec().into_iter().zip(lo.iter().zip(hi)).map(|(v, (l, h))| v.max(*l).min(*h)).collect(),
            ),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Psi::Box { lo, .. } => Some(lo.len()),
            _ => None,
        }
    }
}

impl fmt::Display for Psi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            Psi::Zero => f.write_str("zero"),
            Psi::L1(lambda) => write!(f, "l1:lambda={lambda}"),
            Psi::Box { lo, hi } => write!(f, "box:lo={}:hi={}", join(lo), join(hi)),
        }
    }
}

pub fn soft_threshold(v: f64, shrink: f64) -> f64 {
    if v > shrink {
        v - shrink
    } else if v < -shrink {
        v + shrink
    } else {
        0.0
    }
}

/// `f = φ + ψ`.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    pub phi: ProblemInstance,
    pub psi: Psi,
}

impl CompositeProblem {
    pub fn new(phi: ProblemInstance, psi: Psi) -> Result<Self> {
        if phi.lipschitz_grad().is_none() {
            return Err(Error::Configuration(format!("{} has no gradient Lipschitz constant", phi.id())));
        }
        if let Some(d) = psi.dim() {
            if d != phi.dim() {
                return Err(Error::DimensionMismatch { expected: phi.dim(), found: d });
            }
        }
        Ok(CompositeProblem { phi, psi })
    }

    pub fn value(&self, x: &Point) -> Result<ExtendedReal> {
        Ok(self.psi.value(x.as_slice()).plus(self.phi.value(x)?))
    }

    pub fn prox(&self, x: Point, t: f64) -> Point {
        self.psi.prox(x, t)
    }
}

/// Accelerated gradient with the proximal step. Stored `f(x_k)` values are
/// `φ(x_k) + ψ(x_k)`.
pub fn run_proximal_accelerated(cp: &CompositeProblem, x0: &Point, iterations: usize) -> Result<MethodTrace> {
    if iterations == 0 {
        return Err(Error::Configuration("accelerated methods need at least one iteration".into()));
    }
    x0.check_dim(cp.phi.dim())?;
    if !cp.value(x0)?.is_finite() {
        return Err(Error::InvalidArgument("x0 lies outside the domain of psi".into()));
    }
    let l = cp.phi.lipschitz_grad().expect("checked in CompositeProblem::new");
    let phi = cp.phi.as_ref();
    let mut trace = accelerated_loop(
        phi,
        x0,
        iterations,
        1.0 / l,
        |x| cp.psi.value(x.as_slice()).plus(phi.value_at(x.as_slice())).to_f64(),
        |v, t| cp.prox(v, t),
    )?;
    trace.method = MethodKind::ProxAccelerated;
    Ok(trace)
}

/// `min_u ψ(u) + ⟨z, u⟩ + (μ/2)‖u − x_0‖²`, attained at
/// `u = Prox_{1/μ}(x_0 − z/μ)`. For `ψ ≡ 0` this is the smooth closed form
/// evaluated the same way as in [`crate::certificates::certificate_value`].
pub fn inner_minimum(psi: &Psi, z: &Point, mu: f64, x0: &Point) -> f64 {
    match psi {
        Psi::Zero => dual_quadratic(z, mu, x0),
        _ => {
            let u = psi.prox(x0.axpy(-1.0 / mu, z), 1.0 / mu);
            psi.value(u.as_slice()).to_f64() + z.dot(&u) + 0.5 * mu * u.sub(x0).norm_sq()
        }
    }
}

/// `−φ*(z_k) + min_u {ψ(u) + ⟨z_k, u⟩ + (μ_k/2)‖u − x_0‖²}`; `−∞` when
/// `φ*(z_k) = +∞`.
pub fn conjectured_certificate(cert: &DualCertificate, k: usize, cp: &CompositeProblem, x0: &Point) -> Result<ExtendedReal> {
    let (Some(z), Some(mu)) = (cert.z(k), cert.mu(k)) else {
        return Err(Error::InvalidArgument(format!("certificate covers k in {:?}, asked for {k}", cert.indices())));
    };
    let conj = cp.phi.conjugate(z)?;
    Ok((-conj).plus(inner_minimum(&cp.psi, z, mu, x0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub k: usize,
    pub f_xk: f64,
    pub certificate: ExtendedReal,
    /// `certificate − f(x_k)`; `−∞` when vacuous.
    pub margin: f64,
    pub tolerance: f64,
    pub vacuous: bool,
    pub violation: bool,
}

#[derive(Debug, Clone)]
pub struct ProbeRun {
    pub problem_id: String,
    pub psi: Psi,
    pub x0: Point,
    pub trace: MethodTrace,
    pub certificate: DualCertificate,
    pub records: Vec<ProbeRecord>,
}

impl ProbeRun {
    pub fn violations(&self) -> impl Iterator<Item = &ProbeRecord> {
        self.records.iter().filter(|r| r.violation)
    }

    pub fn min_margin(&self) -> f64 {
        self.records.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }
}

/// Runs the proximal method for `iterations` steps and evaluates the
/// conjectured bound at every `k ≥ 1`.
pub fn probe(cp: &CompositeProblem, x0: &Point, iterations: usize, tol: &Tolerances) -> Result<ProbeRun> {
    let trace = run_proximal_accelerated(cp, x0, iterations)?;
    let certificate = build_certificate(&trace, cp.phi.as_ref())?;
    let mut records = Vec::with_capacity(iterations);
    for k in certificate.indices() {
        let value = conjectured_certificate(&certificate, k, cp, x0)?;
        let f_xk = trace.fx[k];
        let z = certificate.z(k).expect("k in range");
        let tolerance = tol.scaled(&[f_xk, value.to_f64(), z.norm() * (x0.norm() + 1.0)]);
        let margin = value.to_f64() - f_xk;
        records.push(ProbeRecord {
            k,
            f_xk,
            certificate: value,
            margin,
            tolerance,
            vacuous: !value.is_finite(),
            violation: value.is_finite() && margin < -tolerance,
        });
    }
    Ok(ProbeRun {
        problem_id: cp.phi.id().to_string(),
        psi: cp.psi.clone(),
        x0: x0.clone(),
        trace,
        certificate,
        records,
    })
}

/// One seeded ℓ1-regularized least-squares instance
/// `½‖Mx − b‖² + λ‖x‖₁`.
#[derive(Debug, Clone)]
pub struct LassoInstance {
    pub seed: u64,
    pub index: usize,
    pub problem: CompositeProblem,
    pub x0: Point,
}

/// Draws `count` instances with `dim` in `min_dim..=max_dim`, `M` of size
/// `(dim + 3) × dim` with entries uniform in `[−1, 1]`, `b` uniform in
/// `[−1, 1]`, `λ` uniform in `[0.05, 0.5]` and `x_0` uniform in `[−2, 2]^dim`.
/// Instance `i` depends only on `(seed, i)`.
pub fn random_lasso_instances(seed: u64, count: usize, min_dim: usize, max_dim: usize) -> Result<Vec<LassoInstance>> {
    if min_dim == 0 || min_dim > max_dim {
        return Err(Error::Configuration(format!("bad dimension range {min_dim}..={max_dim}")));
    }
    (0..count).map(|i| lasso_instance(seed, i, min_dim, max_dim)).collect()
}

fn lasso_instance(seed: u64, index: usize, min_dim: usize, max_dim: usize) -> Result<LassoInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let n = rng.random_range(min_dim..=max_dim);
    let m = n + 3;
    let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect()).collect();
    let rhs: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let lambda: f64 = rng.random_range(0.05..=0.5);
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect();

    // ½‖Mx − b‖² = ½⟨x, MᵀM x⟩ − ⟨Mᵀb, x⟩ + ½‖b‖²
    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v: f64 = rows.iter().map(|r| r[i] * r[j]).sum();
            gram[i][j] = v;
            gram[j][i] = v;
        }
    }
    let lin: Vec<f64> = (0..n).map(|i| -rows.iter().zip(&rhs).map(|(r, b)| r[i] * b).sum::<f64>()).collect();
    let offset = 0.5 * rhs.iter().map(|b| b * b).sum::<f64>();
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let id = format!(
        "quad:mat={}:b={}:c={}",
        gram.iter().map(|r| join(r)).collect::<Vec<_>>().join(";"),
        join(&lin),
        offset
    );
    let phi = parse_problem(&id)?;
    Ok(LassoInstance {
        seed,
        index,
        problem: CompositeProblem::new(phi, Psi::l1(lambda)?)?,
        x0: Point::new(x0)?,
    })
}

/// Aggregate over many probe runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSummary {
    pub instances: usize,
    pub iterations_checked: usize,
    pub violations: usize,
    pub vacuous: usize,
    pub min_margin: f64,
    pub median_margin: f64,
}

impl ProbeSummary {
    pub fn from_runs(runs: &[ProbeRun]) -> Self {
        let mut margins: Vec<f64> = runs.iter().flat_map(|r| r.records.iter().map(|x| x.margin)).collect();
        margins.sort_by(f64::total_cmp);
        ProbeSummary {
            instances: runs.len(),
            iterations_checked: margins.len(),
            violations: runs.iter().map(|r| r.violations().count()).sum(),
            vacuous: runs.iter().flat_map(|r| &r.records).filter(|r| r.vacuous).count(),
            min_margin: margins.first().copied().unwrap_or(f64::NAN),
            median_margin: margins.get(margins.len() / 2).copied().unwrap_or(f64::NAN),
        }
    }

    /// Fraction of checked iterations with `f(x_k) ≤ certificate + tol`.
    pub fn satisfied_fraction(&self) -> f64 {
        if self.iterations_checked == 0 {
            return f64::NAN;
        }
        1.0 - self.violations as f64 / self.iterations_checked as f64
    }
}

impl fmt::Display for ProbeSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{CONJECTURE}: instances={} iterations_checked={} violations={} vacuous={} \
             satisfied_fraction={:.6} min_margin={:.6e} median_margin={:.6e} ({DUAL_FEED})",
            self.instances,
            self.iterations_checked,
            self.violations,
            self.vacuous,
            self.satisfied_fraction(),
            self.min_margin,
            self.median_margin
        )
    }
}

/// Probes every instance in parallel on the current rayon pool.
pub fn probe_instances(instances: &[LassoInstance], iterations: usize, tol: &Tolerances) -> Result<Vec<ProbeRun>> {
    instances
        .par_iter()
        .map(|inst| probe(&inst.problem, &inst.x0, iterations, tol))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::certificate_value;
    use crate::methods::run_accelerated;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn prox_examples() {
        assert_eq!(Psi::L1(1.0).prox(pt(&[3.0]), 1.0).as_slice(), &[2.0]);
        let nonneg = Psi::boxed(vec![0.0, 0.0], vec![f64::INFINITY, f64::INFINITY]).unwrap();
        assert_eq!(nonneg.prox(pt(&[-1.0, 2.0]), 1.0).as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn one_dimensional_worked_example() {
        let cp = CompositeProblem::new(parse_problem("quad:diag=1").unwrap(), Psi::L1(1.0)).unwrap();
        let run = probe(&cp, &pt(&[3.0]), 3, &Tolerances::default()).unwrap();
        assert_eq!(run.trace.x[1].as_slice(), &[0.0]);
        assert_eq!(run.certificate.z(1).unwrap().as_slice(), &[3.0]);
        assert_eq!(run.certificate.mu(1), Some(1.0));
        let rec = &run.records[0];
        assert_eq!(rec.k, 1);
        assert_eq!(rec.certificate, ExtendedReal::Finite(0.0));
        assert_eq!(rec.margin, 0.0);
    }

    #[test]
    fn zero_psi_matches_smooth_method_bitwise() {
        let phi = parse_problem("quad:diag=1,30:b=0.5,-1").unwrap();
        let x0 = pt(&[1.0, 1.0]);
        let cp = CompositeProblem::new(phi.clone(), Psi::Zero).unwrap();
        let run = probe(&cp, &x0, 40, &Tolerances::default()).unwrap();
        let plain = run_accelerated(phi.as_ref(), &x0, 40).unwrap();
        assert_eq!(run.trace.x, plain.x);
        assert_eq!(run.trace.y, plain.y);
        assert_eq!(run.trace.fx, plain.fx);
        let cert = build_certificate(&plain, phi.as_ref()).unwrap();
        for rec in &run.records {
            let smooth = certificate_value(&cert, rec.k, phi.as_ref(), &x0).unwrap();
            assert_eq!(rec.certificate.to_f64().to_bits(), smooth.to_f64().to_bits());
        }
    }

    #[test]
    fn psi_spec_round_trips() {
        for s in ["zero", "l1:lambda=0.25", "box:lo=0,-inf:hi=inf,1"] {
            assert_eq!(Psi::parse(s).unwrap().to_string(), s);
        }
        assert!(Psi::parse("l1:lambda=-1").is_err());
        assert!(Psi::parse("box:lo=1:hi=0").is_err());
        assert!(Psi::parse("l1:lambda=1:mu=2").is_err());
    }

    #[test]
    fn instances_are_reproducible() {
        let a = random_lasso_instances(7, 5, 1, 5).unwrap();
        let b = random_lasso_instances(7, 5, 1, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.problem.phi.id(), y.problem.phi.id());
            assert_eq!(x.x0, y.x0);
            assert_eq!(x.problem.psi, y.problem.psi);
        }
        let again = parse_problem(a[3].problem.phi.id()).unwrap();
        assert_eq!(again.value(&a[3].x0).unwrap(), a[3].problem.phi.value(&a[3].x0).unwrap());
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let cp = CompositeProblem::new(
            parse_problem("quad:diag=1").unwrap(),
            Psi::boxed(vec![0.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        assert!(run_proximal_accelerated(&cp, &pt(&[2.0]), 3).is_err());
    }
}
