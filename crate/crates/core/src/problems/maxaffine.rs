use microlp::{ComparisonOp, OptimizationDirection, Problem as LinearProgram};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::point::{dot, norm, Point};
use crate::problems::Problem;

/// Relative gap under which two pieces count as simultaneously active.
const ACTIVE_TIE: f64 = 1e-12;

/// Piecewise-linear `f(x) = max_i ⟨a_i, x⟩ + b_i`.
///
/// `G = max_i ‖a_i‖`. The conjugate is
/// `f*(z) = min { −Σ λ_i b_i : λ ∈ Δ, Σ λ_i a_i = z }`, a small linear
/// program, and `+∞` when `z ∉ conv{a_i}`. The optimal value is `−f*(0)`.
#[derive(Debug, Clone)]
pub struct MaxAffine {
    id: String,
    dim: usize,
    slopes: Vec<Vec<f64>>,
    intercepts: Vec<f64>,
    lipschitz: f64,
    optimal_value: Option<f64>,
    minimizer: Option<Point>,
}

impl MaxAffine {
    pub fn new(slopes: Vec<Vec<f64>>, intercepts: Vec<f64>) -> Result<Self> {
        if slopes.is_empty() {
            return Err(Error::Construction("max-of-affine needs at least one piece".into()));
        }
        if slopes.len() != intercepts.len() {
            return Err(Error::Construction(format!(
                "{} slopes but {} intercepts",
                slopes.len(),
                intercepts.len()
            )));
        }
        let dim = slopes[0].len();
        if dim == 0 || slopes.iter().any(|a| a.len() != dim) {
            return Err(Error::Construction("slopes must share a positive dimension".into()));
        }
        if slopes.iter().flatten().chain(&intercepts).any(|v| !v.is_finite()) {
            return Err(Error::Construction("non-finite max-of-affine data".into()));
        }
        let lipschitz = slopes.iter().map(|a| norm(a)).fold(0.0, f64::max);
        if lipschitz == 0.0 {
            return Err(Error::Construction("all slopes are zero".into()));
        }
        let mut f = MaxAffine {
            id: String::new(),
            dim,
            slopes,
            intercepts,
            lipschitz,
            optimal_value: None,
            minimizer: None,
        };
        f.optimal_value = (-f.conjugate_at(&vec![0.0; dim])).finite();
        f.id = f.default_id();
        Ok(f)
    }

    /// `G‖x − c‖_∞`, written with the `2n` pieces `±G e_i`.
    pub fn infinity_norm(scale: f64, center: Point) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Construction(format!("scale must be positive, got {scale}")));
        }
        let n = center.dim();
        let mut slopes = Vec::with_capacity(2 * n);
        let mut intercepts = Vec::with_capacity(2 * n);
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut a = vec![0.0; n];
                a[i] = sign * scale;
                intercepts.push(-sign * scale * center[i]);
                slopes.push(a);
            }
        }
        Self::new(slopes, intercepts)?.with_minimizer(center)
    }

    /// Attaches a known minimizer; it must attain the LP optimal value.
    ///
    /// When the solution set is not a singleton, distances are measured to
    /// this point and so over-estimate `dist(x, X̄)`.
    pub fn with_minimizer(mut self, x: Point) -> Result<Self> {
        x.check_dim(self.dim)?;
        let fbar = self.optimal_value.ok_or_else(|| {
            Error::Construction("function is unbounded below; no minimizer exists".into())
        })?;
        let fx = self.value_at(x.as_slice());
        if fx > fbar + 1e-9 * (1.0 + fbar.abs()) {
            return Err(Error::Construction(format!(
                "claimed minimizer has value {fx}, optimal value is {fbar}"
            )));
        }
        self.minimizer = Some(x);
        Ok(self)
    }

    pub(crate) fn set_id(&mut self, id: String) {
        self.id = id;
    }

    pub fn pieces(&self) -> usize {
        self.slopes.len()
    }

    fn default_id(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(",");
        format!(
            "maxaff:a={}:b={}",
            self.slopes.iter().map(|a| join(a)).collect::<Vec<_>>().join(";"),
            join(&self.intercepts)
        )
    }

    fn piece_values(&self, x: &[f64]) -> impl Iterator<Item = f64> + '_ {
        let x = x.to_vec();
        self.slopes.iter().zip(&self.intercepts).map(move |(a, b)| dot(a, &x) + b)
    }
}

impl Problem for MaxAffine {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value_at(&self, x: &[f64]) -> f64 {
        self.slopes
            .iter()
            .zip(&self.intercepts)
            .map(|(a, b)| dot(a, x) + b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn subgradient_at(&self, x: &[f64]) -> Vec<f64> {
        let values: Vec<f64> = self.piece_values(x).collect();
        let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let tie = ACTIVE_TIE * (1.0 + top.abs());
        let mut active: Vec<Vec<f64>> = Vec::new();
        for (v, a) in values.iter().zip(&self.slopes) {
            if top - v <= tie && !active.contains(a) {
                active.push(a.clone());
            }
        }
        if active.len() == 1 {
            return active.pop().unwrap();
        }
        min_norm_point(&active)
    }

    fn conjugate_at(&self, z: &[f64]) -> ExtendedReal {
        let mut lp = LinearProgram::new(OptimizationDirection::Minimize);
        let weights: Vec<_> =
            self.intercepts.iter().map(|b| lp.add_var(-b, (0.0, f64::INFINITY))).collect();
        for (j, zj) in z.iter().enumerate() {
            let row: Vec<_> = weights.iter().zip(&self.slopes).map(|(w, a)| (*w, a[j])).collect();
            lp.add_constraint(row.as_slice(), ComparisonOp::Eq, *zj);
        }
        let simplex: Vec<_> = weights.iter().map(|w| (*w, 1.0)).collect();
        lp.add_constraint(simplex.as_slice(), ComparisonOp::Eq, 1.0);
        match lp.solve().map(|outcome| outcome.into_solution()) {
            Ok(Ok(solution)) => ExtendedReal::Finite(solution.objective()),
            // Infeasible means z lies outside conv{a_i}. Any other solver
            // failure is also reported as +∞ so that it surfaces as a vacuous
            // certificate instead of a silently wrong finite value.
            _ => ExtendedReal::PosInfinity,
        }
    }

    fn lipschitz_f(&self) -> Option<f64> {
        Some(self.lipschitz)
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        None
    }

    fn optimal_value(&self) -> Option<f64> {
        self.optimal_value
    }

    fn nearest_solution(&self, _x: &[f64]) -> Option<Point> {
        self.minimizer.clone()
    }

    fn is_differentiable(&self) -> bool {
        false
    }
}

/// Least-norm point of the convex hull of `points` (Wolfe's algorithm).
pub fn min_norm_point(points: &[Vec<f64>]) -> Vec<f64> {
    assert!(!points.is_empty(), "min_norm_point needs at least one point");
    let n = points[0].len();
    let scale = points.iter().map(|p| dot(p, p)).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = 1e-14 * scale;

    let combine = |set: &[usize], weights: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (&i, &w) in set.iter().zip(weights) {
            for (xj, pj) in x.iter_mut().zip(&points[i]) {
                *xj += w * pj;
            }
        }
        x
    };

    let first = (0..points.len())
        .min_by(|&i, &j| dot(&points[i], &points[i]).total_cmp(&dot(&points[j], &points[j])))
        .unwrap();
    let mut set = vec![first];
    let mut weights = vec![1.0];
    let mut x = points[first].clone();

    for _ in 0..(10 * points.len() + 10) {
        let (j, best) = (0..points.len())
            .map(|i| (i, dot(&x, &points[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if dot(&x, &x) - best <= tol || set.contains(&j) {
            break;
        }
        set.push(j);
        weights.push(0.0);

        loop {
            let alpha = affine_minimizer(points, &set);
            if alpha.iter().all(|a| *a > 0.0) {
                weights = alpha;
                break;
            }
            let mut step = f64::INFINITY;
            for (l, a) in weights.iter().zip(&alpha) {
                if *a <= 0.0 {
                    step = step.min(l / (l - a));
                }
            }
            for (l, a) in weights.iter_mut().zip(&alpha) {
                *l = (1.0 - step) * *l + step * a;
            }
            let mut keep_set = Vec::new();
            let mut keep_weights = Vec::new();
            for (&i, &l) in set.iter().zip(&weights) {
                if l > 1e-15 {
                    keep_set.push(i);
                    keep_weights.push(l);
                }
            }
            let total: f64 = keep_weights.iter().sum();
            set = keep_set;
            weights = keep_weights.into_iter().map(|l| l / total).collect();
            if set.len() <= 1 {
                break;
            }
        }
        x = combine(&set, &weights);
    }
    x
}

/// Weights `α` (summing to one) minimizing `‖Σ α_i p_i‖` over the affine hull.
fn affine_minimizer(points: &[Vec<f64>], set: &[usize]) -> Vec<f64> {
    let s = set.len();
    let mut kkt = DMatrix::zeros(s + 1, s + 1);
    for (r, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate() {
            kkt[(r, c)] = dot(&points[i], &points[j]);
        }
        kkt[(r, s)] = 1.0;
        kkt[(s, r)] = 1.0;
    }
    let mut rhs = DVector::zeros(s + 1);
    rhs[s] = 1.0;
    let solution = kkt
        .clone()
        .lu()
        .solve(&rhs)
        .or_else(|| kkt.svd(true, true).solve(&rhs, 1e-14).ok())
        .unwrap_or_else(|| {
            let mut uniform = DVector::from_element(s + 1, 1.0 / s as f64);
            uniform[s] = 0.0;
            uniform
        });
    solution.as_slice()[..s].to_vec()
}
