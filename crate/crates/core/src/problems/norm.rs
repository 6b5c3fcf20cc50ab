use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::point::{norm, Point};
use crate::problems::{Problem, DOMAIN_SLACK};

/// `f(x) = G‖x‖`: G-Lipschitz, nonsmooth at the origin, `X̄ = {0}`.
///
/// The conjugate is the indicator of the closed ball of radius `G`.
#[derive(Debug, Clone)]
pub struct ScaledNorm {
    id: String,
    scale: f64,
    dim: usize,
}

impl ScaledNorm {
    pub fn new(scale: f64, dim: usize) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Construction(format!("norm scale must be positive, got {scale}")));
        }
        if dim == 0 {
            return Err(Error::Construction("dimension must be positive".into()));
        }
        Ok(ScaledNorm { id: format!("norm:G={scale}:dim={dim}"), scale, dim })
    }

    pub(crate) fn set_id(&mut self, id: String) {
        self.id = id;
    }
}

impl Problem for ScaledNorm {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value_at(&self, x: &[f64]) -> f64 {
        self.scale * norm(x)
    }

    fn subgradient_at(&self, x: &[f64]) -> Vec<f64> {
        let r = norm(x);
        if r == 0.0 {
            // least-norm element of the G-ball
            return vec![0.0; self.dim];
        }
        x.iter().map(|v| self.scale * v / r).collect()
    }

    fn conjugate_at(&self, z: &[f64]) -> ExtendedReal {
        if norm(z) <= self.scale * (1.0 + DOMAIN_SLACK) {
            ExtendedReal::Finite(0.0)
        } else {
            ExtendedReal::PosInfinity
        }
    }

    fn lipschitz_f(&self) -> Option<f64> {
        Some(self.scale)
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        None
    }

    fn optimal_value(&self) -> Option<f64> {
        Some(0.0)
    }

    fn nearest_solution(&self, _x: &[f64]) -> Option<Point> {
        Some(Point::zeros(self.dim))
    }

    fn is_differentiable(&self) -> bool {
        false
    }
}
