use std::fmt;

/// A value in the extended real line, as taken by convex conjugates.
///
/// `+∞` marks points outside `dom(f*)`; a certificate that contains `−f*(z)`
/// with `f*(z) = +∞` becomes `−∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Lossy view as an `f64` with IEEE infinities, for output only.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::NegInfinity => f64::NEG_INFINITY,
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInfinity => f64::INFINITY,
        }
    }

    /// Adds a finite real; infinities absorb it.
    pub fn plus(self, v: f64) -> ExtendedReal {
        match self {
            ExtendedReal::Finite(a) => ExtendedReal::Finite(a + v),
            other => other,
        }
    }
}

impl std::ops::Neg for ExtendedReal {
    type Output = ExtendedReal;

    fn neg(self) -> ExtendedReal {
        match self {
            ExtendedReal::NegInfinity => ExtendedReal::PosInfinity,
            ExtendedReal::Finite(v) => ExtendedReal::Finite(-v),
            ExtendedReal::PosInfinity => ExtendedReal::NegInfinity,
        }
    }
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtendedReal::PosInfinity
        } else if v == f64::NEG_INFINITY {
            ExtendedReal::NegInfinity
        } else {
            ExtendedReal::Finite(v)
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInfinity => write!(f, "-inf"),
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInfinity => write!(f, "+inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation_and_absorption() {
        assert_eq!(-ExtendedReal::PosInfinity, ExtendedReal::NegInfinity);
        assert_eq!(-ExtendedReal::Finite(2.0), ExtendedReal::Finite(-2.0));
        assert_eq!(ExtendedReal::NegInfinity.plus(5.0), ExtendedReal::NegInfinity);
        assert_eq!(ExtendedReal::Finite(1.0).plus(5.0), ExtendedReal::Finite(6.0));
        assert_eq!(ExtendedReal::from(f64::INFINITY), ExtendedReal::PosInfinity);
    }
}
