use crate::error::{Error, Result};
use crate::extended::ExtendedReal;
use crate::point::{dot, Point};
use crate::problems::{Problem, DOMAIN_SLACK};

/// `f(x) = log Σ exp(x_i) − ⟨c, x⟩`, with the tilt `c` optional.
///
/// Without a tilt the function is unbounded below (it decreases along
/// `−1`), so it has no optimal value. With a tilt `c` in the open simplex the
/// infimum `−Σ c_i log c_i` is attained on the line `{log c + s·1}`.
///
/// The conjugate is the negative entropy of `z + c` on the probability simplex.
#[derive(Debug, Clone)]
pub struct LogSumExp {
    id: String,
    dim: usize,
    tilt: Option<Vec<f64>>,
}

impl LogSumExp {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Construction("dimension must be positive".into()));
        }
        Ok(LogSumExp { id: format!("lse:dim={dim}"), dim, tilt: None })
    }

    pub fn tilted(tilt: Vec<f64>) -> Result<Self> {
        let dim = tilt.len();
        if dim == 0 {
            return Err(Error::Construction("dimension must be positive".into()));
        }
        if tilt.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return Err(Error::Construction("tilt must lie in the open simplex".into()));
        }
        let total: f64 = tilt.iter().sum();
        if (total - 1.0).abs() > 1e-12 * dim as f64 {
            return Err(Error::Construction(format!("tilt must sum to 1, sums to {total}")));
        }
        let id = format!(
            "lse:c={}",
            tilt.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(",")
        );
        Ok(LogSumExp { id, dim, tilt: Some(tilt) })
    }

    pub fn uniform_tilt(dim: usize) -> Result<Self> {
        let mut f = Self::tilted(vec![1.0 / dim as f64; dim.max(1)])?;
        f.id = format!("lse:dim={dim}:tilt=uniform");
        Ok(f)
    }

    pub(crate) fn set_id(&mut self, id: String) {
        self.id = id;
    }

    pub fn tilt(&self) -> Option<&[f64]> {
        self.tilt.as_deref()
    }
}

/// Numerically stable `log Σ exp(x_i)`.
pub fn log_sum_exp(x: &[f64]) -> f64 {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + x.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl Problem for LogSumExp {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn value_at(&self, x: &[f64]) -> f64 {
        let base = log_sum_exp(x);
        match &self.tilt {
            Some(c) => base - dot(c, x),
            None => base,
        }
    }

    fn subgradient_at(&self, x: &[f64]) -> Vec<f64> {
        let p = softmax(x);
        match &self.tilt {
            Some(c) => p.iter().zip(c).map(|(pi, ci)| pi - ci).collect(),
            None => p,
        }
    }

    fn conjugate_at(&self, z: &[f64]) -> ExtendedReal {
        let w: Vec<f64> = match &self.tilt {
            Some(c) => z.iter().zip(c).map(|(zi, ci)| zi + ci).collect(),
            None => z.to_vec(),
        };
        let slack = DOMAIN_SLACK * self.dim as f64;
        if w.iter().any(|v| *v < -slack) {
            return ExtendedReal::PosInfinity;
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > slack {
            return ExtendedReal::PosInfinity;
        }
        let entropy: f64 = w.iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum();
        ExtendedReal::Finite(entropy)
    }

    fn lipschitz_f(&self) -> Option<f64> {
        // ‖softmax(x) − c‖ is largest at a vertex of the simplex.
        match &self.tilt {
            None => Some(1.0),
            Some(c) => {
                let sq: f64 = c.iter().map(|v| v * v).sum();
                Some(
                    c.iter()
                        .map(|ci| (sq - ci * ci + (1.0 - ci).powi(2)).sqrt())
                        .fold(0.0, f64::max),
                )
            }
        }
    }

    fn lipschitz_grad(&self) -> Option<f64> {
        Some(1.0)
    }

    fn optimal_value(&self) -> Option<f64> {
        self.tilt.as_ref().map(|c| -c.iter().map(|v| v * v.ln()).sum::<f64>())
    }

    fn nearest_solution(&self, x: &[f64]) -> Option<Point> {
        let c = self.tilt.as_ref()?;
        let base: Vec<f64> = c.iter().map(|v| v.ln()).collect();
        let shift = x.iter().zip(&base).map(|(xi, bi)| xi - bi).sum::<f64>() / self.dim as f64;
        Point::new(base.iter().map(|b| b + shift).collect()).ok()
    }

    fn is_differentiable(&self) -> bool {
        true
    }
}
