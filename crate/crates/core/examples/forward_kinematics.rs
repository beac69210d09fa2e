//! Frames, Jacobian and manipulability of the LWR and the HOBM.
//!
//! ```text
//! cargo run -p hobm-lwr --example forward_kinematics
//! ```

use hobm_lwr::kinematics::TaskSpace;
use hobm_lwr::presets;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lwr = presets::lwr();
    let q: Vec<f64> = [-40.0, -45.0, 90.0, -225.0, 90.0, 0.0].iter().map(|d: &f64| d.to_radians()).collect();

    println!("LWR frames at the sweep start:");
    for (i, f) in lwr.chain().forward_kinematics(&q)?.iter().enumerate() {
        let p = f.translation.vector;
        println!("  frame {}: ({:+.4}, {:+.4}, {:+.4}) m", i + 1, p.x, p.y, p.z);
    }

    let j = lwr.chain().geometric_jacobian(&q)?;
    println!("geometric Jacobian (linear rows first):\n{j:.4}");
    println!("full-twist measure: {:.4e}", lwr.chain().singularity_measure(&q, TaskSpace::Full)?);

    // The HOBM loses radial mobility as its elbow straightens.
    let hobm = presets::hobm();
    println!("HOBM positional measure vs elbow angle:");
    for deg in [90.0, 45.0, 10.0, 1.0, 0.0] {
        let phi = [0.0, f64::to_radians(deg), 0.3];
        let m = hobm.chain().singularity_measure(&phi, TaskSpace::positional_for(3))?;
        println!("  phi2 = {deg:>4} deg  ->  {m:.4e}");
    }
    Ok(())
}
