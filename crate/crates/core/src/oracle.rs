//! Brute-force grid oracles.
//!
//! These exist to validate closed-form conjugates and optima independently of
//! the formulas they check: exhaustive grids have no convergence behaviour of
//! their own. They are limited to `dim ≤ 3` and `10^8` grid points.
//!
//! Both oracles assume the relevant extremum lies inside the box; the
//! reported error bounds are meaningless otherwise.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::point::{dot, norm, Point};
use crate::problems::Problem;

pub const MAX_GRID_DIM: usize = 3;
pub const MAX_GRID_POINTS: u128 = 100_000_000;
/// Half-width of the default box `[−8, 8]^dim`.
pub const DEFAULT_HALF_WIDTH: f64 = 8.0;

/// Axis-aligned box with `points_per_axis` equally spaced points per axis,
/// endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    lower: Point,
    upper: Point,
    points_per_axis: usize,
}

impl GridSpec {
    pub fn new(lower: Point, upper: Point, points_per_axis: usize) -> Result<Self> {
        upper.check_dim(lower.dim())?;
        if lower.as_slice().iter().zip(upper.as_slice()).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidArgument("grid lower bound must be below upper bound".into()));
        }
        if points_per_axis < 2 {
            return Err(Error::InvalidArgument("a grid needs at least 2 points per axis".into()));
        }
        if lower.dim() > MAX_GRID_DIM {
            return Err(Error::Unsupported(format!(
                "grid oracles handle dim ≤ {MAX_GRID_DIM}, got {}",
                lower.dim()
            )));
        }
        let total = (points_per_axis as u128).checked_pow(lower.dim() as u32).unwrap_or(u128::MAX);
        if total > MAX_GRID_POINTS {
            return Err(Error::GridTooLarge { points: total, limit: MAX_GRID_POINTS });
        }
        Ok(GridSpec { lower, upper, points_per_axis })
    }

    /// `[−half_width, half_width]^dim`.
    pub fn cube(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        Self::new(Point::filled(dim, -half_width), Point::filled(dim, half_width), points_per_axis)
    }

    pub fn default_box(dim: usize, points_per_axis: usize) -> Result<Self> {
        Self::cube(dim, DEFAULT_HALF_WIDTH, points_per_axis)
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn total_points(&self) -> usize {
        self.points_per_axis.pow(self.dim() as u32)
    }

    /// Largest spacing over the axes.
    pub fn step(&self) -> f64 {
        (0..self.dim()).map(|i| self.axis_step(i)).fold(0.0, f64::max)
    }

    fn axis_step(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.points_per_axis - 1) as f64
    }

    fn coordinate(&self, axis: usize, index: usize) -> f64 {
        if index == self.points_per_axis - 1 {
            self.upper[axis]
        } else {
            self.lower[axis] + index as f64 * self.axis_step(axis)
        }
    }

    /// Grid point with the given linear index (first axis slowest).
    pub fn point(&self, mut index: usize) -> Point {
        let d = self.dim();
        let mut coords = vec![0.0; d];
        for axis in (0..d).rev() {
            coords[axis] = self.coordinate(axis, index % self.points_per_axis);
            index /= self.points_per_axis;
        }
        Point::from_vec_unchecked(coords)
    }

    /// Worst-case distance from a point of the box to its nearest grid point.
    pub fn covering_radius(&self) -> f64 {
        0.5 * (0..self.dim()).map(|i| self.axis_step(i).powi(2)).sum::<f64>().sqrt()
    }

    /// Maximizes `score` over the grid; ties go to the lowest linear index, so
    /// the result does not depend on how rayon splits the work.
    fn argmax(&self, score: impl Fn(&[f64]) -> f64 + Sync) -> (f64, usize) {
        let n = self.points_per_axis;
        let d = self.dim();
        let inner = n.pow(d as u32 - 1);
        let axes: Vec<Vec<f64>> = (0..d).map(|axis| (0..n).map(|i| self.coordinate(axis, i)).collect()).collect();
        (0..n)
            .into_par_iter()
            .map(|lead| {
                let mut x: Vec<f64> = axes.iter().map(|a| a[0]).collect();
                x[0] = axes[0][lead];
                // odometer over the trailing axes, last axis fastest
                let mut digits = vec![0usize; d];
                let mut best = (f64::NEG_INFINITY, usize::MAX);
                for rest in 0..inner {
                    let v = score(&x);
                    if v > best.0 {
                        best = (v, lead * inner + rest);
                    }
                    for axis in (1..d).rev() {
                        digits[axis] += 1;
                        if digits[axis] < n {
                            x[axis] = axes[axis][digits[axis]];
                            break;
                        }
                        digits[axis] = 0;
                        x[axis] = axes[axis][0];
                    }
                }
                best
            })
            .reduce(|| (f64::NEG_INFINITY, usize::MAX), better)
    }

    /// Lipschitz estimate on the box: the known `G` if the problem has one,
    /// else the largest subgradient norm over the corners and a coarse
    /// sub-grid.
    fn lipschitz_on_box(&self, p: &dyn Problem) -> f64 {
        if let Some(g) = p.lipschitz_f() {
            return g;
        }
        let coarse = GridSpec {
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            points_per_axis: self.points_per_axis.min(33),
        };
        (0..coarse.total_points())
            .map(|i| norm(&p.subgradient_at(coarse.point(i).as_slice())))
            .fold(0.0, f64::max)
    }
}

fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if a.0 > b.0 || (a.0 == b.0 && a.1 < b.1) {
        a
    } else {
        b
    }
}

/// Result of a grid search.
#[derive(Debug, Clone, PartialEq)]
pub struct GridEstimate {
    pub value: f64,
    /// Grid point attaining `value`.
    pub at: Point,
    /// Resolution bound: the true extremum lies within `error_bound` of
    /// `value`, on the side stated by the producing oracle.
    pub error_bound: f64,
}

/// Lower estimate of `f*(z)` by maximizing `⟨z, x⟩ − f(x)` over the grid.
///
/// `f*(z) ∈ [value, value + error_bound]` with
/// `error_bound = h · (‖z‖ + G_box)`, where `h` is the grid step, provided the
/// supremum is attained inside the box.
pub fn conjugate_by_grid(p: &dyn Problem, z: &Point, grid: &GridSpec) -> Result<GridEstimate> {
    z.check_dim(p.dim())?;
    grid.lower.check_dim(p.dim())?;
    let zs = z.as_slice();
    let (value, index) = grid.argmax(|x| dot(zs, x) - p.value_at(x));
    let error_bound = grid.step() * (z.norm() + grid.lipschitz_on_box(p));
    Ok(GridEstimate { value, at: grid.point(index), error_bound })
}

/// Grid minimum of `f`, an upper bound on `f̄` (within `error_bound` of the
/// box minimum).
pub fn min_by_grid(p: &dyn Problem, grid: &GridSpec) -> Result<GridEstimate> {
    grid.lower.check_dim(p.dim())?;
    let (neg, index) = grid.argmax(|x| -p.value_at(x));
    let error_bound = grid.covering_radius() * grid.lipschitz_on_box(p);
    Ok(GridEstimate { value: -neg, at: grid.point(index), error_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::parse_problem;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn grid_guards() {
        assert!(matches!(GridSpec::cube(2, 1.0, 20_000), Err(Error::GridTooLarge { .. })));
        assert!(matches!(GridSpec::cube(4, 1.0, 3), Err(Error::Unsupported(_))));
        assert!(GridSpec::cube(1, 1.0, 1).is_err());
        assert!(GridSpec::new(pt(&[1.0]), pt(&[1.0]), 5).is_err());
    }

    #[test]
    fn grid_points_cover_the_box() {
        let g = GridSpec::cube(2, 4.0, 9).unwrap();
        assert_eq!(g.point(0).as_slice(), &[-4.0, -4.0]);
        assert_eq!(g.point(80).as_slice(), &[4.0, 4.0]);
        assert_eq!(g.point(40).as_slice(), &[0.0, 0.0]);
        assert_eq!(g.step(), 1.0);
    }

    #[test]
    fn scalar_quadratic_conjugate() {
        let p = parse_problem("quad:diag=1").unwrap();
        let g = GridSpec::cube(1, 4.0, 8001).unwrap();
        let est = conjugate_by_grid(p.as_ref(), &pt(&[1.0]), &g).unwrap();
        assert!((est.value - 0.5).abs() < 1e-12);
        assert!((est.at[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn absolute_value_conjugate() {
        let p = parse_problem("norm:G=1:dim=1").unwrap();
        let g = GridSpec::cube(1, 4.0, 8001).unwrap();
        let est = conjugate_by_grid(p.as_ref(), &pt(&[0.5]), &g).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.at[0], 0.0);
    }

    #[test]
    fn offgrid_kink_is_within_half_a_step() {
        // |x − 0.5| over [−4, 4] with 10 points: 0.5 is not a grid point
        let p = parse_problem("linf:center=0.5").unwrap();
        let g = GridSpec::cube(1, 4.0, 10).unwrap();
        let est = min_by_grid(p.as_ref(), &g).unwrap();
        assert!(est.value > 0.0);
        assert!(est.value <= g.step() / 2.0);
        assert!(est.value <= est.error_bound);
    }

    #[test]
    fn shifted_quadratic_minimum() {
        let p = parse_problem("quad:diag=1,10:b=1,0").unwrap();
        let g = GridSpec::cube(2, 4.0, 801).unwrap();
        let est = min_by_grid(p.as_ref(), &g).unwrap();
        assert!((est.at[0] + 1.0).abs() < 1e-12 && est.at[1].abs() < 1e-12);
        assert!((est.value + 0.5).abs() < 1e-12);
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        // every point of the plateau max(0, ...) ties; lowest index is the corner
        let p = parse_problem("linf:G=1:dim=2").unwrap();
        let g = GridSpec::cube(2, 1.0, 5).unwrap();
        let est = conjugate_by_grid(p.as_ref(), &pt(&[1.0, 0.0]), &g).unwrap();
        // ⟨z,x⟩ − ‖x‖_∞ = 0 along x1 ≥ |x2|; the lowest-index such point is (0, 0)
        assert_eq!(est.value, 0.0);
        assert_eq!(est.at.as_slice(), &[0.0, 0.0]);
    }
}
