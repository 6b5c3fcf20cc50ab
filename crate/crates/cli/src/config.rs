//! TOML experiment files.
//!
//! One experiment per file, flat keys only. `problem`, `method`, `x0` and
//! `iterations` also accept arrays; `sweep` expands their cartesian product.
//!
//! ```toml
//! problem = "quad:diag=1,100"
//! method = ["gradient", "accelerated"]
//! x0 = [1.0, 1.0]
//! iterations = 500
//! svg = "rates.svg"
//! ```

use std::path::{Path, PathBuf};

use ccfom::methods::{MethodKind, StepSchedule};
use ccfom::proxprobe::Psi;
use ccfom::{Point, Tolerances};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// A starting point: explicit coordinates or one of `zeros`, `ones`, `e1`,
/// `fill:<value>` (dimension taken from the problem).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum X0Spec {
    Coords(Vec<f64>),
    Preset(String),
}

impl X0Spec {
    pub fn resolve(&self, dim: usize) -> CliResult<Point> {
        let coords = match self {
            X0Spec::Coords(v) => {
                if v.len() != dim {
                    return Err(CliError::Config(format!("x0 has {} coordinates, problem has {dim}", v.len())));
                }
                v.clone()
            }
            X0Spec::Preset(name) => match name.as_str() {
                "zeros" => vec![0.0; dim],
                "ones" => vec![1.0; dim],
                "e1" => (0..dim).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
                other => {
                    let v = other
                        .strip_prefix("fill:")
                        .and_then(|s| s.parse::<f64>().ok())
                        .ok_or_else(|| CliError::Config(format!("unknown x0 preset `{other}`")))?;
                    vec![v; dim]
                }
            },
        };
        Point::new(coords).map_err(|e| CliError::Config(format!("x0: {e}")))
    }

    pub fn label(&self) -> String {
        match self {
            X0Spec::Coords(v) => v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
            X0Spec::Preset(name) => name.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum X0Field {
    One(X0Spec),
    Many(Vec<X0Spec>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Option<OneOrMany<String>>,
    method: OneOrMany<String>,
    x0: Option<X0Field>,
    iterations: OneOrMany<usize>,
    schedule: Option<String>,
    eps_rel: Option<f64>,
    eps_abs: Option<f64>,
    csv: Option<PathBuf>,
    report: Option<PathBuf>,
    svg: Option<PathBuf>,
    seed: Option<u64>,
    psi: Option<String>,
    instances: Option<usize>,
    min_dim: Option<usize>,
    max_dim: Option<usize>,
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub eps_rel: Option<f64>,
    pub eps_abs: Option<f64>,
}

/// Seeded random ℓ1 least-squares instances for the conjecture probe.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomInstances {
    pub count: usize,
    pub seed: u64,
    pub min_dim: usize,
    pub max_dim: usize,
}

/// A parsed file: possibly list-valued.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub problems: Vec<String>,
    pub methods: Vec<MethodKind>,
    pub x0: Vec<X0Spec>,
    pub iterations: Vec<usize>,
    pub schedule: Option<String>,
    pub tolerances: Tolerances,
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub seed: u64,
    pub psi: Option<Psi>,
    pub random: Option<RandomInstances>,
}

/// One experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem_id: String,
    pub method: MethodKind,
    pub x0: X0Spec,
    pub iterations: usize,
    pub schedule: Option<String>,
    pub tolerances: Tolerances,
    pub csv: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub seed: u64,
    pub psi: Option<Psi>,
    pub random: Option<RandomInstances>,
}

fn positive(name: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str, overrides: &Overrides) -> CliResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let methods = raw
            .method
            .to_vec()
            .iter()
            .map(|m| m.parse::<MethodKind>().map_err(CliError::from))
            .collect::<CliResult<Vec<_>>>()?;
        let iterations = raw.iterations.to_vec();
        if iterations.is_empty() || methods.is_empty() {
            return Err(CliError::Config("method and iterations must not be empty".into()));
        }
        let random = raw.instances.map(|count| RandomInstances {
            count,
            seed: raw.seed.unwrap_or(0),
            min_dim: raw.min_dim.unwrap_or(1),
            max_dim: raw.max_dim.unwrap_or(5),
        });
        let problems = raw.problem.map(|p| p.to_vec()).unwrap_or_default();
        if problems.is_empty() && random.is_none() {
            return Err(CliError::Config("missing `problem`".into()));
        }
        let x0 = match raw.x0 {
            Some(X0Field::One(x)) => vec![x],
            Some(X0Field::Many(xs)) if !xs.is_empty() => xs,
            Some(X0Field::Many(_)) => return Err(CliError::Config("x0 list is empty".into())),
            None if random.is_some() => vec![X0Spec::Preset("zeros".into())],
            None => return Err(CliError::Config("missing `x0`".into())),
        };
        let defaults = Tolerances::default();
        let tolerances = Tolerances::new(
            positive("eps_rel", overrides.eps_rel.or(raw.eps_rel).unwrap_or(defaults.eps_rel))?,
            positive("eps_abs", overrides.eps_abs.or(raw.eps_abs).unwrap_or(defaults.eps_abs))?,
        );
        let psi = raw.psi.as_deref().map(Psi::parse).transpose()?;
        Ok(SweepConfig {
            problems,
            methods,
            x0,
            iterations,
            schedule: raw.schedule,
            tolerances,
            csv: raw.csv,
            report: raw.report,
            svg: raw.svg,
            seed: raw.seed.unwrap_or(0),
            psi,
            random,
        })
    }

    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    /// Cells in config order: problem, then method, then x0, then iterations.
    pub fn cells(&self) -> Vec<ExperimentConfig> {
        let problems = if self.problems.is_empty() { vec![String::new()] } else { self.problems.clone() };
        let mut out = Vec::new();
        for problem in &problems {
            for &method in &self.methods {
                for x0 in &self.x0 {
                    for &iterations in &self.iterations {
                        out.push(ExperimentConfig {
                            problem_id: problem.clone(),
                            method,
                            x0: x0.clone(),
                            iterations,
                            schedule: self.schedule.clone(),
                            tolerances: self.tolerances,
                            csv: self.csv.clone(),
                            report: self.report.clone(),
                            svg: self.svg.clone(),
                            seed: self.seed,
                            psi: self.psi.clone(),
                            random: self.random.clone(),
                        });
                    }
                }
            }
        }
        out
    }

    /// The single experiment of a non-list file.
    pub fn single(&self) -> CliResult<ExperimentConfig> {
        let mut cells = self.cells();
        if cells.len() != 1 {
            return Err(CliError::Config(format!(
                "expected one experiment, the file describes {} (use `sweep`)",
                cells.len()
            )));
        }
        Ok(cells.remove(0))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, overrides: &Overrides) -> CliResult<Self> {
        SweepConfig::from_toml(text, overrides)?.single()
    }

    /// Step schedule for the subgradient method. The smooth methods only
    /// accept `inverse_L`.
    pub fn step_schedule(&self) -> CliResult<StepSchedule> {
        let text = self.schedule.as_deref().unwrap_or(match self.method {
            MethodKind::Subgradient => "horizon_sqrt",
            _ => "inverse_L",
        });
        let schedule = parse_schedule(text, self.iterations)?;
        if self.method != MethodKind::Subgradient && schedule != StepSchedule::InverseL {
            return Err(CliError::Config(format!("{} uses t = 1/L; schedule `{text}` is not allowed", self.method)));
        }
        Ok(schedule)
    }
}

/// `horizon_sqrt`, `inverse_L`, `constant:t=<value>` or
/// `explicit:<t0>,<t1>,…`.
pub fn parse_schedule(text: &str, horizon: usize) -> CliResult<StepSchedule> {
    let bad = || CliError::Config(format!("unrecognised schedule `{text}`"));
    let text = text.trim();
    match text {
        "horizon_sqrt" => return Ok(StepSchedule::HorizonSqrt(horizon)),
        "inverse_L" | "inverse_l" => return Ok(StepSchedule::InverseL),
        _ => {}
    }
    if let Some(rest) = text.strip_prefix("constant:t=") {
        return Ok(StepSchedule::Constant(positive("t", rest.parse().map_err(|_| bad())?)?));
    }
    if let Some(rest) = text.strip_prefix("explicit:") {
        let steps = rest
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad()).and_then(|t| positive("t", t)))
            .collect::<CliResult<Vec<_>>>()?;
        return Ok(StepSchedule::Explicit(steps));
    }
    Err(bad())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_experiment() {
        let cfg = ExperimentConfig::from_toml(
            "problem = \"quad:diag=1\"\nmethod = \"gradient\"\nx0 = [2.0]\niterations = 10\n",
            &Overrides::default(),
        )
        .unwrap();
        assert_eq!(cfg.method, MethodKind::Gradient);
        assert_eq!(cfg.step_schedule().unwrap(), StepSchedule::InverseL);
        assert_eq!(cfg.x0.resolve(1).unwrap().as_slice(), &[2.0]);
    }

    #[test]
    fn sweep_lists_expand_in_order() {
        let cfg = SweepConfig::from_toml(
            "problem = [\"quad:diag=1\", \"quad:diag=2\"]\nmethod = [\"gradient\", \"accelerated\"]\n\
             x0 = [[1.0], [2.0]]\niterations = [5, 10]\n",
            &Overrides { eps_rel: Some(1e-8), eps_abs: None },
        )
        .unwrap();
        let cells = cfg.cells();
        assert_eq!(cells.len(), 16);
        assert_eq!(cells[1].iterations, 10);
        assert_eq!(cells[2].x0, X0Spec::Coords(vec![2.0]));
        assert_eq!(cells[4].method, MethodKind::Accelerated);
        assert_eq!(cells[8].problem_id, "quad:diag=2");
        assert_eq!(cells[0].tolerances.eps_rel, 1e-8);
        assert!(cfg.single().is_err());
    }

    #[test]
    fn schedules() {
        assert_eq!(parse_schedule("horizon_sqrt", 9).unwrap(), StepSchedule::HorizonSqrt(9));
        assert_eq!(parse_schedule("constant:t=0.5", 9).unwrap(), StepSchedule::Constant(0.5));
        assert_eq!(parse_schedule("explicit:1,0.5", 9).unwrap(), StepSchedule::Explicit(vec![1.0, 0.5]));
        assert!(parse_schedule("constant:t=-1", 9).is_err());
        assert!(parse_schedule("sqrt", 9).is_err());
    }

    #[test]
    fn rejects_unknown_keys_and_presets() {
        assert!(SweepConfig::from_toml("problem=\"quad:diag=1\"\nmethod=\"gradient\"\nx0=[1.0]\niterations=3\nfoo=1\n", &Overrides::default()).is_err());
        assert!(X0Spec::Preset("twos".into()).resolve(2).is_err());
        assert_eq!(X0Spec::Preset("fill:3".into()).resolve(2).unwrap().as_slice(), &[3.0, 3.0]);
    }
}
