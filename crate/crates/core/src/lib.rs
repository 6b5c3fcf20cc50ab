pub mod error;
pub mod extended;
pub mod point;
pub mod problems;
pub mod tolerance;

pub use error::{Error, Result};
pub use extended::ExtendedReal;
pub use point::Point;
pub use problems::{fenchel_gap, parse_problem, Problem, ProblemInstance};
pub use tolerance::Tolerances;
pub mod methods;
pub mod oracle;
pub mod certificates;
pub mod proxprobe;
