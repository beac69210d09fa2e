//! LWR torques with and without the HOBM riding on the payload.
//!
//! ```text
//! cargo run -p hobm-lwr --example coupled_torques
//! ```

use hobm_lwr::coupling::{self, CoupledSystem};
use hobm_lwr::{presets, TrapezoidalProfile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sys = CoupledSystem::scenario();
    let profile = TrapezoidalProfile::new(f64::to_radians(-40.0), f64::to_radians(40.0), 0.2, 2.0)?;
    let fixed = presets::scenario_fixed_joints();
    let samples = coupling::simulate_coupled(&sys, &profile, &fixed, 1e-3)?;

    println!("{:>6} {:>12} {:>12} {:>10}", "t", "tau1_lm", "tau1_total", "|F| N");
    for s in samples.iter().step_by(100) {
        println!(
            "{:>6.2} {:>12.3} {:>12.3} {:>10.3}",
            s.t,
            s.tau_lm[0],
            s.tau_total[0],
            s.f_hobm.force.norm()
        );
    }
    for (j, r) in coupling::peak_ratios(&samples).iter().enumerate() {
        println!("joint {}: peak |tau_total| / peak |tau_lm| = {r:.2}", j + 1);
    }

    let free = coupling::simulate_coupled(&sys.with_massless_hobm(), &profile, &fixed, 1e-3)?;
    let diff = free.iter().map(|s| s.reflected().amax()).fold(0.0, f64::max);
    println!("massless HOBM reflects at most {diff:.1e} N·m");
    Ok(())
}
