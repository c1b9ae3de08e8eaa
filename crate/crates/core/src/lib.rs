//! Planning and control toolkit for robot cart pushing.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: SE(2) transforms, local coordinates of the virtual arm,
//!   and planar arm kinematics.
//! - [`kinematics`]: offset-point unicycle, Truck-Trailer and Leader-Follower
//!   transition models, plus an RK4 integrator.
//! - [`planner`]: receding-horizon MPC over the four transition models.
//! - [`controller`]: force projection, tracking differentiator, disturbance
//!   observers, the fal-based control law and four baseline controllers.
//! - [`simulator`]: deterministic kinematic and dynamic plants.
//! - [`bench`]: scenario files, experiment suites, metrics and CSV logs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod controller;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod planner;
pub mod simulator;

pub use error::{Error, Result};
