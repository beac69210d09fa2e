//! Swing of the cable-lift HOBM after the LWR brakes, for a few frictions.
//!
//! ```text
//! cargo run -p hobm-lwr --example ringdown
//! ```

use hobm_lwr::oscillation::{self, RingdownConfig, StopManeuver};
use hobm_lwr::presets;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let stop = StopManeuver::preset();
    println!("stop takes {:.3} s", stop.stop_time());
    println!("{:>9} {:>9} {:>10} {:>10} {:>8}", "viscous", "coulomb", "settle s", "peak N", "peaks");
    for (v, c) in [(5.0, 0.5), (20.0, 1.0), (20.0, 5.0), (40.0, 1.0)] {
        let cfg = RingdownConfig::preset_with(presets::hobm_cable(), 50.0, [v; 2], [c; 2]).after_stop(&stop)?;
        let samples = oscillation::simulate_ringdown(&cfg)?;
        println!(
            "{v:>9} {c:>9} {:>10.3} {:>10.3} {:>8}",
            oscillation::settling_time(&samples, 1e-3)?,
            oscillation::peak_force(&samples)?,
            oscillation::force_peaks(&samples).len()
        );
    }

    // Drag the LWR feels from Coulomb friction while moving the tip.
    let arm = presets::hobm_cable();
    let drag = oscillation::drag_wrench(&arm, &[0.0, 1.2], &[0.3, -0.2], &[1.0, 1.0], 1e-6)?;
    println!("drag at phi = (0, 1.2): {:.3} N along the motion", drag.along_motion);
    Ok(())
}
