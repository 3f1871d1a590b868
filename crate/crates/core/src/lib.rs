//! Planning, mediation and simulation engine for a human working alongside a
//! team of delivery robots that need the human to open a door.
//!
//! The loop: robots plan symbolic delivery tasks, a mediator streams their
//! poses and planned trajectories as frames, and human feedback ("I will be
//! busy for N minutes") becomes time-window constraints that trigger a team
//! replan.

pub mod constraints;
pub mod domain;
pub mod human;
pub mod mediator;
pub mod motion;
pub mod planner;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod stats;

pub use constraints::{ConstraintSet, Window};
pub use domain::{DoorState, Pose, RobotState, RobotStatus, SymbolicState, WorldMap};
pub use scenario::{load_world, office3, Scenario, ScenarioError};
