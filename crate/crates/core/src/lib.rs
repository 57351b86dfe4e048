//! Connectivity-preserving teleoperation of Euler-Lagrange swarms.
//!
//! A human operator pushes one informed robot; every other robot follows
//! through a distributed controller that only reads the positions of its
//! neighbours in an initial tree network. A barrier potential on each link,
//! combined with a state-dependent gain, keeps every link of the tree shorter
//! than the communication radius `r` for all time, and the swarm is
//! exponentially input-to-state stable with respect to the operator's force.
//!
//! The crate covers the whole loop:
//!
//! - [`graph`]: tree topology, incidence and Laplacian matrices, spectral constants;
//! - [`potential`]: the link potential `ψ` and the selection of its constants;
//! - [`dynamics`]: point-mass and two-link-arm robot models with certified bounds;
//! - [`controller`]: the control law and the gain-design pipeline;
//! - [`simulator`]: scenarios, fixed-step RK4 integration and traces;
//! - [`verifier`]: numerical certificates over recorded traces;
//! - [`cli`]: the `design`, `simulate` and `verify` commands and their exit codes.
//!
//! ```
//! use swarmlink::simulator::{run, Scenario};
//!
//! let scenario = Scenario::from_json(r#"{
//!     "schema_version": 1,
//!     "edges": [[1, 2], [2, 3]],
//!     "robots": [
//!         {"model": {"kind": "point_mass", "mass": 1.0}, "x": [0.0, 0.0]},
//!         {"model": {"kind": "point_mass", "mass": 1.0}, "x": [0.3, 0.0]},
//!         {"model": {"kind": "point_mass", "mass": 1.0}, "x": [0.3, 0.3]}
//!     ],
//!     "r": 1.0, "epsilon": 0.5, "f_bar": 0.5,
//!     "force": {"kind": "step", "direction": [1.0, 0.0]},
//!     "duration": 1.0
//! }"#).unwrap();
//! let trace = run(&scenario).unwrap();
//! assert!(!trace.link_broken());
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod potential;
pub mod simulator;
pub mod verifier;

pub use error::{Error, Result};

/// Planar configuration vector (`n = 2`).
pub type Vec2 = nalgebra::Vector2<f64>;
/// Planar inertia or Coriolis matrix.
pub type Mat2 = nalgebra::Matrix2<f64>;
