//! Checking a sweep against HOBM extension and LWR singularities.
//!
//! ```text
//! cargo run -p hobm-lwr --example path_feasibility
//! ```

use hobm_lwr::coupling::{self, CoupledSystem};
use hobm_lwr::kinematics::planar_pose;
use hobm_lwr::{presets, TrapezoidalProfile};
use nalgebra::Vector3;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profile = TrapezoidalProfile::new(f64::to_radians(-40.0), f64::to_radians(40.0), 0.2, 2.0)?;
    let fixed = presets::scenario_fixed_joints();

    for base in [Vector3::new(1.3, 0.0, 0.0), Vector3::new(2.0, 1.0, 0.0)] {
        let sys = CoupledSystem::new(presets::lwr(), presets::hobm(), 50.0, planar_pose(base, 0.0))?;
        let r = coupling::check_path_feasible(&sys, &profile, &fixed, 1e-3)?;
        print!("HOBM base at ({}, {}): ", base.x, base.y);
        match r.first_violation() {
            None => println!(
                "feasible, min measures lwr {:.3e} hobm {:.3e}",
                r.min_lwr_measure, r.min_hobm_measure
            ),
            Some(v) => println!(
                "{} of {} samples infeasible, first at t = {:.3} s ({:?} {:?})",
                r.violations.len(),
                r.samples,
                v.t,
                v.robot,
                v.kind
            ),
        }
    }
    Ok(())
}
