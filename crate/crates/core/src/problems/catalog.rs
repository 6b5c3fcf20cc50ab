//! String identifiers for cataloged problems.
//!
//! Grammar: `family(:key=value)*`. Vectors are comma separated, matrix rows
//! are separated by `;`.
//!
//! | family   | keys                                             | objective                    |
//! |----------|--------------------------------------------------|------------------------------|
//! | `quad`   | `diag=` or `mat=`, optional `b=`, `c=`           | `½⟨x,Ax⟩ + ⟨b,x⟩ + c`        |
//! | `norm`   | `G=` (default 1), `dim=` (default 1)             | `G‖x‖`                       |
//! | `lse`    | `dim=`, optional `tilt=uniform`; or `c=`         | `log Σ exp(x_i) − ⟨c,x⟩`     |
//! | `linf`   | `G=` (default 1), `dim=` or `center=`            | `G‖x − center‖_∞`            |
//! | `maxaff` | `a=` (rows), `b=`, optional `xstar=`             | `max_i ⟨a_i,x⟩ + b_i`        |

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::point::Point;
use crate::problems::{LogSumExp, MaxAffine, ProblemInstance, Quadratic, ScaledNorm};

pub fn parse_problem(id: &str) -> Result<ProblemInstance> {
    let id = id.trim();
    let fail = |reason: String| Error::ProblemId { id: id.to_string(), reason };
    let mut parts = id.split(':');
    let family = parts.next().unwrap_or_default();
    let mut params = BTreeMap::new();
    for part in parts {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| fail(format!("expected key=value, found `{part}`")))?;
        if params.insert(k.trim(), v.trim()).is_some() {
            return Err(fail(format!("duplicate key `{k}`")));
        }
    }
    let mut params = Params { params, id };

    let instance: ProblemInstance = match family {
        "quad" => {
            let a = match (params.take("diag"), params.take("mat")) {
                (Some(d), None) => {
                    let d = parse_vec(d).map_err(&fail)?;
                    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
                }
                (None, Some(m)) => parse_matrix(m).map_err(&fail)?,
                _ => return Err(fail("quad needs exactly one of diag= or mat=".into())),
            };
            let n = a.nrows();
            let b = match params.take("b") {
                Some(b) => parse_vec(b).map_err(&fail)?,
                None => vec![0.0; n],
            };
            let c = params.take_f64("c")?.unwrap_or(0.0);
            params.finish()?;
            let mut q = Quadratic::with_offset(a, Point::new(b)?, c)?;
            q.set_id(id.to_string());
            Arc::new(q)
        }
        "norm" => {
            let g = params.take_f64("G")?.unwrap_or(1.0);
            let dim = params.take_usize("dim")?.unwrap_or(1);
            params.finish()?;
            let mut f = ScaledNorm::new(g, dim)?;
            f.set_id(id.to_string());
            Arc::new(f)
        }
        "lse" => {
            let dim = params.take_usize("dim")?;
            let tilt = params.take("tilt");
            let c = params.take("c");
            params.finish()?;
            let mut f = match (dim, tilt, c) {
                (Some(n), None, None) => LogSumExp::new(n)?,
                (Some(n), Some("uniform"), None) => LogSumExp::uniform_tilt(n)?,
                (None, None, Some(c)) => LogSumExp::tilted(parse_vec(c).map_err(&fail)?)?,
                _ => {
                    return Err(fail(
                        "lse takes dim= (optionally with tilt=uniform) or c=".into(),
                    ))
                }
            };
            f.set_id(id.to_string());
            Arc::new(f)
        }
        "linf" => {
            let g = params.take_f64("G")?.unwrap_or(1.0);
            let center = match (params.take_usize("dim")?, params.take("center")) {
                (Some(n), None) => Point::zeros(n),
                (None, Some(c)) => Point::new(parse_vec(c).map_err(&fail)?)?,
                (None, None) => Point::zeros(1),
                _ => return Err(fail("linf takes dim= or center=, not both".into())),
            };
            params.finish()?;
            let mut f = MaxAffine::infinity_norm(g, center)?;
            f.set_id(id.to_string());
            Arc::new(f)
        }
        "maxaff" => {
            let a = params.take("a").ok_or_else(|| fail("maxaff needs a=".into()))?;
            let b = params.take("b").ok_or_else(|| fail("maxaff needs b=".into()))?;
            let slopes =
                a.split(';').map(parse_vec).collect::<std::result::Result<Vec<_>, _>>().map_err(&fail)?;
            let intercepts = parse_vec(b).map_err(&fail)?;
            let xstar = params.take("xstar");
            params.finish()?;
            let mut f = MaxAffine::new(slopes, intercepts)?;
            if let Some(x) = xstar {
                f = f.with_minimizer(Point::new(parse_vec(x).map_err(&fail)?)?)?;
            }
            f.set_id(id.to_string());
            Arc::new(f)
        }
        other => return Err(fail(format!("unknown problem family `{other}`"))),
    };
    Ok(instance)
}

struct Params<'a> {
    params: BTreeMap<&'a str, &'a str>,
    id: &'a str,
}

impl<'a> Params<'a> {
    fn take(&mut self, key: &str) -> Option<&'a str> {
        self.params.remove(key)
    }

    fn err(&self, reason: String) -> Error {
        Error::ProblemId { id: self.id.to_string(), reason }
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| self.err(format!("`{key}` is not a number: `{v}`"))),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| self.err(format!("`{key}` is not a non-negative integer: `{v}`"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.params.keys().next() {
            None => Ok(()),
            Some(k) => Err(self.err(format!("unknown key `{k}`"))),
        }
    }
}

pub(crate) fn parse_vec(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

fn parse_matrix(s: &str) -> std::result::Result<DMatrix<f64>, String> {
    let rows: Vec<Vec<f64>> = s.split(';').map(parse_vec).collect::<std::result::Result<_, _>>()?;
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(format!("matrix must be square, got {n} rows of lengths {:?}", rows.iter().map(Vec::len).collect::<Vec<_>>()));
    }
    Ok(DMatrix::from_row_iterator(n, n, rows.into_iter().flatten()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extended::ExtendedReal;

    #[test]
    fn parses_every_family() {
        let ids = [
            "quad:diag=1,10",
            "quad:diag=1,10:b=1,0",
            "quad:mat=2,1;1,3:b=1,-1:c=0.5",
            "norm:G=2:dim=3",
            "lse:dim=2",
            "lse:dim=3:tilt=uniform",
            "lse:c=0.25,0.75",
            "linf:G=1:dim=4",
            "linf:center=1,2",
            "maxaff:a=1,1;-1,1;0,-1:b=0,0,-2:xstar=0,-1",
        ];
        for id in ids {
            let p = parse_problem(id).unwrap_or_else(|e| panic!("{id}: {e}"));
            assert_eq!(p.id(), id);
        }
    }

    #[test]
    fn parsed_values_match_constructors() {
        let p = parse_problem("quad:mat=2,1;1,3:b=1,-1:c=0.5").unwrap();
        assert_eq!(p.value_at(&[1.0, 0.0]), 1.0 + 1.0 + 0.5);
        let p = parse_problem("norm:G=2:dim=2").unwrap();
        assert_eq!(p.conjugate_at(&[0.0, 2.5]), ExtendedReal::PosInfinity);
        let p = parse_problem("maxaff:a=1,1;-1,1;0,-1:b=0,0,-2:xstar=0,-1").unwrap();
        assert!((p.optimal_value().unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(p.distance_to_solution(&Point::new(vec![3.0, 3.0]).unwrap()), Some(5.0));
    }

    #[test]
    fn rejects_malformed_ids() {
        for id in [
            "",
            "cube:dim=2",
            "quad",
            "quad:diag=1:mat=1",
            "quad:diag=1,x",
            "quad:mat=1,2;3",
            "quad:diag=1:bogus=3",
            "norm:G=-1",
            "norm:G",
            "lse:dim=2:c=0.5,0.5",
            "lse:dim=2:tilt=peaked",
            "maxaff:a=1,0",
            "maxaff:a=1:b=0:xstar=5",
            "norm:dim=2:dim=3",
        ] {
            assert!(parse_problem(id).is_err(), "{id} should be rejected");
        }
    }
}
