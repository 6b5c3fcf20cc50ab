/// Relative/absolute tolerance pair used by every numerical check.
///
/// A check comparing terms `t_1, …, t_m` passes when its violation is at most
/// `max(eps_abs, eps_rel · (1 + Σ|t_i|))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub eps_rel: f64,
    pub eps_abs: f64,
}

pub const DEFAULT_EPS_REL: f64 = 1e-9;
pub const DEFAULT_EPS_ABS: f64 = 1e-9;

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eps_rel: DEFAULT_EPS_REL, eps_abs: DEFAULT_EPS_ABS }
    }
}

impl Tolerances {
    pub fn new(eps_rel: f64, eps_abs: f64) -> Self {
        Tolerances { eps_rel, eps_abs }
    }

    pub fn scaled(&self, terms: &[f64]) -> f64 {
        let magnitude: f64 = terms.iter().map(|t| t.abs()).sum();
        self.eps_abs.max(self.eps_rel * (1.0 + magnitude))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_and_scaling() {
        let tol = Tolerances::new(1e-9, 1e-6);
        assert_eq!(tol.scaled(&[1.0]), 1e-6);
        let tol = Tolerances::default();
        assert!((tol.scaled(&[1e3, -1e3]) - 1e-9 * 2001.0).abs() < 1e-18);
    }
}
