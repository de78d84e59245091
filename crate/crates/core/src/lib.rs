//! Motion planning by alternating dynamic programming on adaptive
//! low-dimensional grids with trajectory optimization in the full state
//! space.
//!
//! The pipeline per outer iteration: evaluate the penalty landscape on new
//! grid vertices, run the backward DP sweep and extract timestamped
//! waypoints, lift them to full states, solve the waypoint-constrained
//! trajectory problem, and refine the grids around infeasible or colliding
//! points.

pub mod bounds;
pub mod dp;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod mapping;
pub mod models;
pub mod nlp;
pub mod penalty;
pub mod scenario;
pub mod scheme;
pub mod svg;

pub use bounds::BoxBounds;
pub use dp::{DpConfig, ObjectiveVariant, WaypointSequence};
pub use error::{ContractError, Error};
pub use geometry::{CollisionSpec, ConvexPolygon};
pub use grid::{AdaptiveGrid, ControlGrid};
pub use mapping::{LiftResult, MappingConfig, MappingError};
pub use models::{ModelKind, ProblemModel};
pub use nlp::{SolveStatus, Trajectory};
pub use penalty::PenaltyField;
pub use scenario::{Scenario, ScenarioError, ScenarioFile};
pub use scheme::{IterationRecord, Mode, Outcome, OutcomeStatus, SchemeConfig};
