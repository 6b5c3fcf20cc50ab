//! Convex objectives with value, subgradient and conjugate oracles.
//!
//! Every instance is finite on all of R^n. Conjugates may be `+∞` and are
//! reported as [`ExtendedReal::PosInfinity`], never as a large float.
//!
//! Nondifferentiable families return the least-norm element of `∂f(x)`, so
//! traces are reproducible.

mod catalog;
mod logsumexp;
mod maxaffine;
mod norm;
mod quadratic;

use std::fmt::Debug;
use std::sync::Arc;

pub use catalog::parse_problem;
pub use logsumexp::LogSumExp;
pub use maxaffine::{min_norm_point, MaxAffine};
pub use norm::ScaledNorm;
pub use quadratic::Quadratic;

use crate::error::Result;
use crate::extended::ExtendedReal;
use crate::point::Point;

/// Relative slack on the boundary of `dom(f*)`.
///
/// Convex combinations of subgradients that sit exactly on the boundary of the
/// conjugate's domain can land a few ulps outside it; membership tests accept
/// that roundoff instead of reporting `+∞`.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// A convex function `f: R^n → R` together with the oracles the methods and
/// the certificate engine query.
///
/// The `*_at` methods take raw slices and skip dimension checks; they are the
/// hot path for the grid oracles. Everything else goes through the checked
/// provided methods.
pub trait Problem: Debug + Send + Sync {
    /// Catalog identifier this instance was built from.
    fn id(&self) -> &str;

    fn dim(&self) -> usize;

    fn value_at(&self, x: &[f64]) -> f64;

    /// One element of `∂f(x)` (the gradient when `f` is differentiable).
    fn subgradient_at(&self, x: &[f64]) -> Vec<f64>;

    /// `f*(z) = sup_x ⟨z, x⟩ − f(x)`.
    fn conjugate_at(&self, z: &[f64]) -> ExtendedReal;

    /// `G` with `|f(x) − f(y)| ≤ G‖x − y‖`, when known.
    fn lipschitz_f(&self) -> Option<f64>;

    /// `L` with `‖∇f(x) − ∇f(y)‖ ≤ L‖x − y‖`, when known.
    fn lipschitz_grad(&self) -> Option<f64>;

    fn optimal_value(&self) -> Option<f64>;

    /// Euclidean projection of `x` onto the solution set, when it is known in
    /// closed form.
    fn nearest_solution(&self, x: &[f64]) -> Option<Point>;

    fn is_differentiable(&self) -> bool;

    fn value(&self, x: &Point) -> Result<f64> {
        x.check_dim(self.dim())?;
        Ok(self.value_at(x.as_slice()))
    }

    fn subgradient(&self, x: &Point) -> Result<Point> {
        x.check_dim(self.dim())?;
        Ok(Point::from_vec_unchecked(self.subgradient_at(x.as_slice())))
    }

    fn conjugate(&self, z: &Point) -> Result<ExtendedReal> {
        z.check_dim(self.dim())?;
        Ok(self.conjugate_at(z.as_slice()))
    }

    /// `dist(x, X̄)`, or `None` when the solution set is unknown or empty.
    fn distance_to_solution(&self, x: &Point) -> Option<f64> {
        if x.dim() != self.dim() {
            return None;
        }
        self.nearest_solution(x.as_slice()).map(|s| s.distance(x))
    }
}

/// Shared handle to a cataloged problem.
pub type ProblemInstance = Arc<dyn Problem>;

/// `f*(z) + f(x) − ⟨z, x⟩`, nonnegative by Fenchel's inequality and zero when
/// `z ∈ ∂f(x)`.
pub fn fenchel_gap(p: &dyn Problem, z: &Point, x: &Point) -> Result<ExtendedReal> {
    let conj = p.conjugate(z)?;
    let fx = p.value(x)?;
    Ok(conj.plus(fx - z.dot(x)))
}
