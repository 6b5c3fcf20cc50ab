use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// A dense vector in R^n. Iterates, gradients and dual vectors all live here.
///
/// Construction through [`Point::new`] rejects non-finite coordinates; the
/// arithmetic helpers do not re-check, so callers that may overflow use
/// [`Point::is_finite`].
#[derive(Clone, PartialEq)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument("a point needs at least one coordinate".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "coordinate {i} is not finite ({})",
                coords[i]
            )));
        }
        Ok(Point(coords))
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn filled(dim: usize, value: f64) -> Self {
        Point(vec![value; dim])
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn dot(&self, other: &Point) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `self + alpha * other`
    pub fn axpy(&self, alpha: f64, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + alpha * b).collect())
    }

    /// `alpha * self + beta * other`
    pub fn combine(&self, alpha: f64, beta: f64, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| alpha * a + beta * b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn add(&self, other: &Point) -> Point {
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, alpha: f64) -> Point {
        Point(self.0.iter().map(|a| alpha * a).collect())
    }

    pub fn distance(&self, other: &Point) -> f64 {
        self.sub(other).norm()
    }

    /// Largest absolute coordinate.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found: self.dim() })
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Point::new(coords)
    }
}

impl TryFrom<&[f64]> for Point {
    type Error = Error;

    fn try_from(coords: &[f64]) -> Result<Self> {
        Point::new(coords.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(Point::new(vec![1.0, f64::NAN]).is_err());
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        assert!(Point::new(vec![]).is_err());
        assert_eq!(Point::new(vec![1.0, 2.0]).unwrap().dim(), 2);
    }

    #[test]
    fn arithmetic() {
        let x = Point::new(vec![3.0, 4.0]).unwrap();
        let y = Point::new(vec![1.0, -1.0]).unwrap();
        assert_eq!(x.norm(), 5.0);
        assert_eq!(x.dot(&y), -1.0);
        assert_eq!(x.axpy(2.0, &y).as_slice(), &[5.0, 2.0]);
        assert_eq!(x.combine(0.5, 1.0, &y).as_slice(), &[2.5, 1.0]);
        assert_eq!(x.sub(&y).as_slice(), &[2.0, 5.0]);
    }
}
