use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::point::{dot, Point};
use crate::problems::Problem;

/// Conditioning beyond which conjugate values are numerically meaningless.
pub const MAX_CONDITION: f64 = 1e12;

/// `f(x) = ½⟨x, Ax⟩ + ⟨b, x⟩ + c` with `A` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct Quadratic {
    id: String,
    dim: usize,
    // row-major
    a: Vec<f64>,
    a_inv: Vec<f64>,
    b: Vec<f64>,
    offset: f64,
    lipschitz: f64,
    minimizer: Point,
    optimal_value: f64,
}

impl Quadratic {
    pub fn new(a: DMatrix<f64>, b: Point) -> Result<Self> {
        Self::with_offset(a, b, 0.0)
    }

    pub fn with_offset(a: DMatrix<f64>, b: Point, offset: f64) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::Construction(format!(
                "quadratic needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
        }
        if !offset.is_finite() || a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Construction("non-finite quadratic data".into()));
        }
        let scale = a.amax().max(f64::MIN_POSITIVE);
        for i in 0..n {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Construction(format!("matrix is not symmetric at ({i},{j})")));
                }
            }
        }
        let eig = SymmetricEigen::new(a.clone());
        let lmin = eig.eigenvalues.min();
        let lmax = eig.eigenvalues.max();
        if lmin <= 0.0 {
            return Err(Error::Construction(format!(
                "matrix is not positive definite (smallest eigenvalue {lmin})"
            )));
        }
        if lmax / lmin > MAX_CONDITION {
            return Err(Error::Construction(format!(
                "condition number {:e} exceeds {MAX_CONDITION:e}",
                lmax / lmin
            )));
        }
        let chol = a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Construction("Cholesky factorization failed".into()))?;
        let a_inv = chol.inverse();
        let bv = DVector::from_column_slice(b.as_slice());
        let minimizer = -(&a_inv * &bv);
        let optimal_value = offset - 0.5 * bv.dot(&(&a_inv * &bv));

        let row_major = |m: &DMatrix<f64>| m.transpose().as_slice().to_vec();
        let id = format!(
            "quad:mat={}:b={}",
            (0..n)
                .map(|i| (0..n).map(|j| fmt_num(a[(i, j)])).collect::<Vec<_>>().join(","))
                .collect::<Vec<_>>()
                .join(";"),
            b.as_slice().iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(",")
        );
        Ok(Quadratic {
            id,
            dim: n,
            a: row_major(&a),
            a_inv: row_major(&a_inv),
            b: b.into_vec(),
            offset,
            lipschitz: lmax,
            minimizer: Point::new(minimizer.as_slice().to_vec())?,
            optimal_value,
        })
    }

    pub fn diagonal(diag: &[f64], b: Point) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)), b)
    }

    pub(crate) fn set_id(&mut self, id: String) {
        self.id = id;
    }

    pub fn minimizer(&self) -> &Point {
        &self.minimizer
    }

    fn quad_form(m: &[f64], n: usize, v: &[f64]) -> f64 {
        let mut total = 0.0;
        for i in 0..n {
            total += v[i] * dot(&m[i * n..(i + 1) * n], v);
        }
        total
    }
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl Problem for Quadratic {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value_at(&self, x: &[f64]) -> f64 {
        0.5 * Self::quad_form(&self.a, self.dim, x) + dot(&self.b, x) + self.offset
    }

    fn subgradient_at(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n).map(|i| dot(&self.a[i * n..(i + 1) * n], x) + self.b[i]).collect()
    }

    fn conjugate_at(&self, z: &[f64]) -> ExtendedReal {
        let shifted: Vec<f64> = z.iter().zip(&self.b).map(|(zi, bi)| zi - bi).collect();
        ExtendedReal::Finite(0.5 * Self::quad_form(&self.a_inv, self.dim, &shifted) - self.offset)
    }

    fn lipschitz_f(&self) -> Option<f64> {
        None
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(self.lipschitz)
    }

    fn optimal_value(&self) -> Option<f64> {
        Some(self.optimal_value)
    }

    fn nearest_solution(&self, _x: &[f64]) -> Option<Point> {
        Some(self.minimizer.clone())
    }

    fn is_differentiable(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identity_quadratic() {
        let q = Quadratic::diagonal(&[1.0], pt(&[0.0])).unwrap();
        assert_eq!(q.value_at(&[3.0]), 4.5);
        assert_eq!(q.conjugate_at(&[3.0]), ExtendedReal::Finite(4.5));
        assert_eq!(q.lipschitz_grad(), Some(1.0));
        assert_eq!(q.optimal_value(), Some(0.0));
    }

    #[test]
    fn diagonal_constants() {
        let q = Quadratic::diagonal(&[1.0, 10.0], pt(&[0.0, 0.0])).unwrap();
        assert!((q.lipschitz_grad().unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(q.optimal_value(), Some(0.0));
        assert_eq!(q.minimizer().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn shifted_diagonal_conjugate_and_optimum() {
        let q = Quadratic::diagonal(&[1.0, 10.0], pt(&[1.0, 0.0])).unwrap();
        let z = [0.3, -2.0];
        let expected = 0.5 * (0.3f64 - 1.0).powi(2) + 4.0 / 20.0;
        assert!((q.conjugate_at(&z).finite().unwrap() - expected).abs() < 1e-14);
        assert!((q.optimal_value().unwrap() + 0.5).abs() < 1e-15);
        assert!((q.minimizer()[0] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_matrices() {
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(Quadratic::new(not_pd, pt(&[0.0, 0.0])), Err(Error::Construction(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Quadratic::new(asym, pt(&[0.0, 0.0])).is_err());
        assert!(Quadratic::diagonal(&[1.0, 1e-13], pt(&[0.0, 0.0])).is_err());
        assert!(Quadratic::diagonal(&[1.0, 2.0], pt(&[0.0])).is_err());
    }

    #[test]
    fn full_matrix_gradient() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let q = Quadratic::new(a, pt(&[1.0, -1.0])).unwrap();
        assert_eq!(q.subgradient_at(&[1.0, 2.0]), vec![5.0, 6.0]);
        let xs = q.minimizer().clone();
        let g = q.subgradient_at(xs.as_slice());
        assert!(g.iter().all(|v| v.abs() < 1e-14));
    }
}
