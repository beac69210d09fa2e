//! Joint torques of the LWR and their split into inertia, bias and gravity.
//!
//! ```text
//! cargo run -p hobm-lwr --example inverse_dynamics
//! ```

use hobm_lwr::dynamics;
use hobm_lwr::{presets, JointState, Wrench};
use nalgebra::{DVector, Vector3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lwr = presets::lwr();
    let q = DVector::from_vec(vec![0.3, -0.8, 1.2, -2.0, 1.5, 0.1]);
    let qd = DVector::from_element(6, 0.5);
    let qdd = DVector::from_vec(vec![1.0, -0.5, 0.8, 0.0, 0.3, -1.0]);
    let state = JointState::new(q.clone(), qd.clone(), qdd.clone())?;

    let tau = dynamics::inverse_dynamics(&lwr, &state, &Wrench::zero())?;
    let m = dynamics::mass_matrix(&lwr, q.as_slice())?;
    let bias = dynamics::bias_forces(&lwr, q.as_slice(), qd.as_slice())?;
    let g = dynamics::gravity_vector(&lwr, q.as_slice())?;

    println!("tau          = {:.4}", tau.transpose());
    println!("M qdd        = {:.4}", (&m * &qdd).transpose());
    println!("bias         = {:.4}", bias.transpose());
    println!("  of which G = {:.4}", g.transpose());
    println!("closure |tau - M qdd - bias| = {:.2e}", (&tau - &m * &qdd - &bias).amax());
    println!("kinetic energy {:.4} J", dynamics::kinetic_energy(&lwr, q.as_slice(), qd.as_slice())?);

    // A 20 N push on the tool adds J^T F to the torques.
    let tip = lwr.chain().end_effector(q.as_slice())?.translation.vector;
    let push = Wrench::force_at(Vector3::new(0.0, 0.0, -20.0), tip);
    let loaded = dynamics::inverse_dynamics(&lwr, &state, &push)?;
    println!("extra torque from a 20 N push: {:.4}", (loaded - tau).transpose());
    Ok(())
}
