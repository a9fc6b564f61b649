//! Discovery and ranking of iterative root-finding and minimization methods.
//!
//! An algorithm in the searched family moves along a product of integer
//! powers of the objective and its first two derivatives, optionally through
//! a momentum-extrapolated point. For each member the engine finds the
//! cheapest schedule of dyadic step sizes that reaches the residual tolerance
//! within the iteration cap, by exact branch-and-bound, and then ranks the
//! family by that cost.

pub mod cli;
pub mod cost;
pub mod expr;
pub mod family;
pub mod linalg;
pub mod problem;
pub mod search;

pub use cost::{CostMode, CostModel};
pub use expr::{Expression, Taylor2};
pub use family::{AlgorithmKind, AlgorithmSpec, ExponentTuple, FamilyConfig, IterState, Sign, StepChoice};
pub use problem::{builtin, ProblemKind, ProblemSpec};
pub use search::{discover, ensemble, search_schedule, simulate, SearchConfig, Status, Trajectory, Verdict};
