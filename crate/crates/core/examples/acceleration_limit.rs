//! Central-composite experiment on the ringdown peak force, a quadratic
//! surrogate, and the deceleration admissible under an effort limit.
//!
//! ```text
//! cargo run --release -p hobm-lwr --example acceleration_limit
//! ```

use hobm_lwr::doe::{self, AxialKind, RingdownResponder};
use hobm_lwr::oscillation::{RingdownConfig, StopManeuver};
use hobm_lwr::presets;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let factors = doe::ringdown_factors([0.0, 5.0], [10.0, 100.0], [0.5, 5.0], AxialKind::Rotatable)?;
    let design = doe::ccd_generate(&factors, AxialKind::Rotatable, 6)?;
    let mut base = RingdownConfig::preset_with(presets::hobm_cable(), 50.0, [20.0; 2], [1.0; 2]);
    base.duration = 5.0;
    let y = RingdownResponder::new(base, StopManeuver::preset()).run(&design)?;
    println!("{} runs, peak force {:.2}..{:.2} N", y.len(), y.iter().copied().fold(f64::INFINITY, f64::min), y.iter().copied().fold(0.0, f64::max));

    let model = doe::fit_quadratic(&design, &y)?;
    println!("R^2 {:.4}, max residual {:.3} N", model.r_squared, model.max_residual);
    for (i, f) in model.factors.iter().enumerate() {
        println!("  x{} = coded {}", i + 1, f.name);
    }
    for (name, c) in doe::term_names(model.k()).iter().zip(&model.coefficients) {
        println!("  {name:<10} {c:+.4}");
    }

    let friction = doe::linspace(0.0, 5.0, 6);
    let mass = doe::linspace(10.0, 100.0, 6);
    for limit in [120.0, 25.0] {
        let s = doe::acceleration_limit_surface(&model, limit, doe::ACCEL_FACTOR, &friction, &mass)?;
        println!("admissible deceleration (m/s^2) under {limit} N; rows friction, columns mass");
        print!("{:>8}", "");
        for m in &mass {
            print!("{m:>9.0}");
        }
        println!();
        for (f, row) in friction.iter().zip(&s.cells) {
            print!("{f:>8.1}");
            for c in row {
                match c.value() {
                    Some(v) if c.status() == "unbounded" => print!("{:>9}", format!(">{v:.2}")),
                    Some(v) => print!("{v:>9.2}"),
                    None => print!("{:>9}", "-"),
                }
            }
            println!();
        }
    }
    Ok(())
}
