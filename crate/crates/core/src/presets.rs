//! Built-in robot models.
//!
//! * `lwr`: six-axis lightweight arm (UR10-class geometry) with the
//!   link mass properties listed alongside it. Centres of mass are taken in
//!   each link's DH frame, inertias are principal moments about the COM.
//! * `hobm`: balanced manipulator with two vertical-axis revolute
//!   links and a vertical telescopic axis.
//! * `hobm-cable`: the same manipulator's two revolute links only, used
//!   when a cable replaces the telescopic axis.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;

use crate::dynamics::{LinkInertia, RobotModel};
use crate::kinematics::{DhRow, KinematicChain};

pub const LWR_PRESET: &str = "lwr";
pub const HOBM_PRESET: &str = "hobm";
pub const HOBM_CABLE_PRESET: &str = "hobm-cable";

/// HOBM link lengths (m).
pub const HOBM_LINK_LENGTHS: [f64; 3] = [1.4, 1.5, 0.6];
/// HOBM link masses (kg).
pub const HOBM_LINK_MASSES: [f64; 3] = [30.97, 23.56, 2.13];
/// Distance of each HOBM link's COM from its proximal joint (m).
pub const HOBM_COM_DISTANCES: [f64; 3] = [0.57, 0.74, 0.3];
/// Moment of inertia of each HOBM link about its COM (kg·m²).
pub const HOBM_INERTIAS: [f64; 3] = [9.28, 5.21, 0.06];

/// Joints 2..6 of the LWR held during the coupled scenario (deg).
pub const SCENARIO_FIXED_JOINTS_DEG: [f64; 5] = [-45.0, 90.0, -225.0, 90.0, 0.0];
/// Joint-1 sweep of the coupled scenario: start, end (deg), ramp, total (s).
pub const SCENARIO_SWEEP: (f64, f64, f64, f64) = (-40.0, 40.0, 0.2, 2.0);

pub fn lwr_chain() -> KinematicChain {
    KinematicChain::new(vec![
        DhRow::revolute(0.0, 0.0, 0.1273, FRAC_PI_2),
        DhRow::revolute(0.0, -0.612, 0.0, 0.0),
        DhRow::revolute(0.0, -0.572, 0.0, 0.0),
        DhRow::revolute(0.0, 0.0, 0.163941, FRAC_PI_2),
        DhRow::revolute(0.0, 0.0, 0.1157, -FRAC_PI_2),
        DhRow::revolute(0.0, 0.0, 0.0922, 0.0),
    ])
    .expect("non-empty")
}

pub fn lwr_links() -> Vec<LinkInertia> {
    // mass, com [x, y, z], Ix, Iy, Iz
    let table: [(f64, [f64; 3], f64, f64, f64); 6] = [
        (1.35, [0.0, 0.0116, 0.0786], 4.62e-3, 5.40e-3, 4.88e-3),
        (3.82, [0.0, 0.251, 0.0844], 1.20e-1, 8.08e-1, 6.96e-1),
        (2.04, [0.0, 0.258, 0.0566], 8.03e-3, 2.96e-1, 2.90e-1),
        (0.32, [0.0, 0.009, 0.0463], 5.35e-4, 4.79e-4, 4.07e-4),
        (0.32, [0.0, 0.010, 0.0464], 5.37e-4, 4.82e-4, 4.06e-4),
        (0.07, [0.0, 0.0, 0.0126], 5.72e-5, 5.95e-5, 6.57e-5),
    ];
    table
        .iter()
        .map(|&(m, c, ix, iy, iz)| {
            LinkInertia::principal(m, Vector3::from(c), ix, iy, iz).expect("valid preset inertia")
        })
        .collect()
}

pub fn lwr() -> RobotModel {
    RobotModel::new(lwr_chain(), lwr_links()).expect("consistent preset")
}

/// Revolute-z, revolute-z, prismatic-z. The telescopic axis variable is the
/// height of the payload grip above the base frame.
pub fn hobm_chain() -> KinematicChain {
    let [l1, l2, _] = HOBM_LINK_LENGTHS;
    KinematicChain::new(vec![
        DhRow::revolute(0.0, l1, 0.0, 0.0),
        DhRow::revolute(0.0, l2, 0.0, 0.0),
        DhRow::prismatic(0.0, 0.0, 0.0, 0.0),
    ])
    .expect("non-empty")
}

pub fn hobm_links() -> Vec<LinkInertia> {
    let [l1, l2, _] = HOBM_LINK_LENGTHS;
    let i = HOBM_INERTIAS;
    let m = HOBM_LINK_MASSES;
    let r = HOBM_COM_DISTANCES;
    // DH frames sit at the distal joint, so the proximal joint of link i is
    // at x = -l_i. The telescopic rod rises from the grip, COM above it.
    let coms = [
        Vector3::new(r[0] - l1, 0.0, 0.0),
        Vector3::new(r[1] - l2, 0.0, 0.0),
        Vector3::new(0.0, 0.0, r[2]),
    ];
    (0..3)
        .map(|k| LinkInertia::principal(m[k], coms[k], i[k], i[k], i[k]).expect("valid preset inertia"))
        .collect()
}

pub fn hobm() -> RobotModel {
    RobotModel::new(hobm_chain(), hobm_links()).expect("consistent preset")
}

/// The two revolute links of the HOBM.
pub fn hobm_cable() -> RobotModel {
    hobm().truncated(2).expect("two links")
}

/// Looks up a preset by name.
pub fn by_name(name: &str) -> Option<RobotModel> {
    match name {
        LWR_PRESET => Some(lwr()),
        HOBM_PRESET => Some(hobm()),
        HOBM_CABLE_PRESET => Some(hobm_cable()),
        _ => None,
    }
}

/// Scenario joints 2..6 in radians.
pub fn scenario_fixed_joints() -> [f64; 5] {
    SCENARIO_FIXED_JOINTS_DEG.map(f64::to_radians)
}
