//! The joint-1 sweep profile: constant acceleration ramps around a cruise.
//!
//! ```text
//! cargo run -p hobm-lwr --example trapezoid
//! ```

use hobm_lwr::TrapezoidalProfile;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = TrapezoidalProfile::new(f64::to_radians(-40.0), f64::to_radians(40.0), 0.2, 2.0)?;
    println!(
        "cruise {:.4} rad/s, ramp accel {:.4} rad/s^2",
        p.cruise_rate(),
        p.ramp_accel()
    );
    println!("{:>6} {:>10} {:>10} {:>10}", "t", "deg", "deg/s", "deg/s^2");
    for i in 0..=20 {
        let t = 0.1 * i as f64;
        let (th, w, a) = p.sample(t)?;
        println!("{t:>6.2} {:>10.3} {:>10.3} {:>10.3}", th.to_degrees(), w.to_degrees(), a.to_degrees());
    }
    Ok(())
}
