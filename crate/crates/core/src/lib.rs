//! Dynamics toolkit for a hand-operated balanced manipulator (HOBM) whose
//! payload is driven by a lightweight robot (LWR).
//!
//! The crate computes the extra actuator torques the HOBM's inertia imposes
//! on the LWR, checks planned paths against both robots' singularities,
//! simulates the ringdown of a cable-lift HOBM after the LWR stops, and fits
//! a central-composite response surface used to bound the admissible
//! acceleration for a given effort limit.
//!
//! Modules, bottom-up:
//!
//! * [`kinematics`]: DH chains, forward kinematics, Jacobians.
//! * [`dynamics`]: recursive Newton-Euler inverse dynamics, `M`, `V`, `G`.
//! * [`trajectory`]: trapezoidal-velocity joint motion.
//! * [`coupling`]: LWR → HOBM motion transfer and reflected loads.
//! * [`oscillation`]: cable-lift ringdown under joint friction.
//! * [`doe`]: central-composite designs and quadratic meta-models.
//! * [`config`] / [`cli`]: the batch front-end behind the `hobm` binary.
//!
//! Runnable walkthroughs of every capability live in `examples/`:
//!
//! ```bash
//! cargo run -p hobm-lwr --example forward_kinematics
//! cargo run -p hobm-lwr --example inverse_dynamics
//! cargo run -p hobm-lwr --example trapezoid
//! cargo run -p hobm-lwr --example coupled_torques
//! cargo run -p hobm-lwr --example path_feasibility
//! cargo run -p hobm-lwr --example ringdown
//! cargo run --release -p hobm-lwr --example acceleration_limit
//! ```

// `!(x > 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod coupling;
pub mod csv_out;
pub mod doe;
pub mod dynamics;
pub mod kinematics;
pub mod oscillation;
pub mod presets;
pub mod trajectory;

pub use coupling::{CoupledSample, CoupledSystem, CouplingError};
pub use dynamics::{LinkInertia, RobotModel, Wrench};
pub use kinematics::{DhRow, JointState, JointType, KinematicChain, RigidTransform};
pub use trajectory::TrapezoidalProfile;
