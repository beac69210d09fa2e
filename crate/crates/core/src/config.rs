//! Project configuration file (TOML).
//!
//! Every section is optional; omitted values fall back to the built-in
//! scenario. Units are fixed by key suffix: `_deg`, `_m`, `_kg`, `_s`, and
//! friction in `_Nm` / `_Nms`. Angles are converted to radians on load.
//!
//! ```toml
//! [lwr]
//! preset = "lwr"          # or inline [[lwr.joints]] rows
//!
//! [hobm]
//! preset = "hobm"
//!
//! [coupling]
//! base_offset_m = [1.3, 0.0, 0.0]
//! base_yaw_deg = 0.0
//! payload_kg = 50.0
//! singularity_tolerance = 1e-6
//! elbow = "positive"
//!
//! [trajectory]
//! theta1_initial_deg = -40.0
//! theta1_final_deg = 40.0
//! ramp_time_s = 0.2
//! total_time_s = 2.0
//! fixed_joints_deg = [-45.0, 90.0, -225.0, 90.0, 0.0]
//! dt_s = 0.001
//!
//! [ringdown]
//! initial = "stop"               # or "state"
//! cable_length_m = 1.0
//! payload_kg = 50.0
//! viscous_Nms = [20.0, 20.0]
//! coulomb_Nm = [1.0, 1.0]
//! smoothing_degps = 0.0573
//! initial_phi_deg = [0.0, 90.0]
//! initial_phid_degps = [0.0, 0.0]
//! dt_s = 0.001
//! duration_s = 10.0
//! settling_band_rad = 0.001
//!
//! [ringdown.stop]
//! start_m = [2.0, 0.0, 0.0]
//! direction = [-1.0, 1.0, 0.0]
//! speed_mps = 0.5
//! deceleration_mps2 = 2.0
//!
//! [doe]
//! axial = "rotatable"            # or "face_centered"
//! n_center = 6
//! duration_s = 5.0
//! coulomb_friction_Nm = [0.0, 5.0]
//! payload_mass_kg = [10.0, 100.0]
//! deceleration_mps2 = [0.5, 5.0]
//! effort_limit_N = 120.0
//! grid_points = 11
//!
//! [output]
//! dir = "out"
//! ```
//!
//! An inline robot replaces `preset` with one `[[lwr.joints]]` table per
//! joint:
//!
//! ```toml
//! [[lwr.joints]]
//! type = "revolute"
//! theta_offset_deg = 0.0
//! a_m = -0.612
//! d_m = 0.0
//! alpha_deg = 0.0
//! mass_kg = 3.82
//! com_m = [0.0, 0.251, 0.0844]
//! inertia_kgm2 = [0.12, 0.808, 0.696]   # principal, about the COM
//! ```

use std::path::{Path, PathBuf};

use nalgebra::{Vector2, Vector3};
use serde::Deserialize;
use thiserror::Error;

use crate::coupling::{CoupledSystem, ElbowBranch, DEFAULT_HOBM_BASE, DEFAULT_PAYLOAD_MASS};
use crate::doe::AxialKind;
use crate::dynamics::{DynamicsError, LinkInertia, RobotModel, STANDARD_GRAVITY};
use crate::kinematics::{planar_pose, DhRow, JointType, KinematicChain, DEFAULT_SINGULARITY_TOLERANCE};
use crate::oscillation::{RingdownConfig, StopManeuver, DEFAULT_COULOMB_SMOOTHING, DEFAULT_DT};
use crate::presets;
use crate::trajectory::TrapezoidalProfile;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectConfig {
    pub lwr: RobotSection,
    pub hobm: RobotSection,
    pub coupling: CouplingSection,
    pub trajectory: TrajectorySection,
    pub ringdown: RingdownSection,
    pub doe: DoeSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotSection {
    pub preset: Option<String>,
    pub joints: Vec<JointEntry>,
    pub base_m: Option<[f64; 3]>,
    pub base_yaw_deg: Option<f64>,
    pub gravity_mps2: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointEntry {
    #[serde(rename = "type")]
    pub joint_type: JointType,
    #[serde(default)]
    pub theta_offset_deg: f64,
    #[serde(default)]
    pub a_m: f64,
    #[serde(default)]
    pub d_m: f64,
    #[serde(default)]
    pub alpha_deg: f64,
    pub mass_kg: f64,
    pub com_m: [f64; 3],
    pub inertia_kgm2: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingSection {
    pub base_offset_m: [f64; 3],
    pub base_yaw_deg: f64,
    pub payload_kg: f64,
    pub singularity_tolerance: f64,
    pub elbow: ElbowBranch,
}

impl Default for CouplingSection {
    fn default() -> Self {
        Self {
            base_offset_m: DEFAULT_HOBM_BASE,
            base_yaw_deg: 0.0,
            payload_kg: DEFAULT_PAYLOAD_MASS,
            singularity_tolerance: DEFAULT_SINGULARITY_TOLERANCE,
            elbow: ElbowBranch::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    pub theta1_initial_deg: f64,
    pub theta1_final_deg: f64,
    pub ramp_time_s: f64,
    pub total_time_s: f64,
    pub fixed_joints_deg: Vec<f64>,
    pub dt_s: f64,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        let (start, end, ramp, total) = presets::SCENARIO_SWEEP;
        Self {
            theta1_initial_deg: start,
            theta1_final_deg: end,
            ramp_time_s: ramp,
            total_time_s: total,
            fixed_joints_deg: presets::SCENARIO_FIXED_JOINTS_DEG.to_vec(),
            dt_s: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RingdownStart {
    /// Simulate the braking maneuver in `[ringdown.stop]` first.
    #[default]
    Stop,
    /// Start from `initial_phi_deg` / `initial_phid_degps` directly.
    State,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RingdownSection {
    pub initial: RingdownStart,
    pub cable_length_m: f64,
    pub payload_kg: f64,
    #[serde(rename = "viscous_Nms")]
    pub viscous_nms: [f64; 2],
    #[serde(rename = "coulomb_Nm")]
    pub coulomb_nm: [f64; 2],
    pub smoothing_degps: f64,
    pub initial_phi_deg: [f64; 2],
    pub initial_phid_degps: [f64; 2],
    pub dt_s: f64,
    pub duration_s: f64,
    pub settling_band_rad: f64,
    pub stop: StopSection,
}

impl Default for RingdownSection {
    fn default() -> Self {
        Self {
            initial: RingdownStart::Stop,
            cable_length_m: 1.0,
            payload_kg: DEFAULT_PAYLOAD_MASS,
            viscous_nms: [20.0, 20.0],
            coulomb_nm: [1.0, 1.0],
            smoothing_degps: DEFAULT_COULOMB_SMOOTHING.to_degrees(),
            initial_phi_deg: [0.0, 90.0],
            initial_phid_degps: [0.0, 0.0],
            dt_s: DEFAULT_DT,
            duration_s: 10.0,
            settling_band_rad: 1e-3,
            stop: StopSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopSection {
    pub start_m: [f64; 3],
    pub direction: [f64; 3],
    pub speed_mps: f64,
    pub deceleration_mps2: f64,
}

impl Default for StopSection {
    fn default() -> Self {
        let p = StopManeuver::preset();
        Self {
            start_m: p.start.into(),
            direction: p.direction.into(),
            speed_mps: p.speed,
            deceleration_mps2: p.deceleration,
        }
    }
}

impl StopSection {
    pub fn maneuver(&self) -> StopManeuver {
        StopManeuver {
            start: Vector3::from(self.start_m),
            direction: Vector3::from(self.direction),
            speed: self.speed_mps,
            deceleration: self.deceleration_mps2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoeSection {
    pub axial: AxialKind,
    pub n_center: usize,
    /// Ringdown length simulated per design point.
    pub duration_s: f64,
    /// Full design extents, axial points included.
    #[serde(rename = "coulomb_friction_Nm")]
    pub coulomb_friction_nm: [f64; 2],
    pub payload_mass_kg: [f64; 2],
    pub deceleration_mps2: [f64; 2],
    #[serde(rename = "effort_limit_N")]
    pub effort_limit_n: f64,
    pub grid_points: usize,
}

impl Default for DoeSection {
    fn default() -> Self {
        Self {
            axial: AxialKind::Rotatable,
            n_center: 6,
            duration_s: 5.0,
            coulomb_friction_nm: [0.0, 5.0],
            payload_mass_kg: [10.0, 100.0],
            deceleration_mps2: [0.5, 5.0],
            effort_limit_n: 120.0,
            grid_points: 11,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

impl ProjectConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ProjectConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Checks presets and value ranges without building anything heavy.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.lwr_model()?;
        self.hobm_model()?;
        let c = &self.coupling;
        if !(c.payload_kg >= 0.0) {
            return invalid("coupling.payload_kg must be non-negative");
        }
        if !(c.singularity_tolerance > 0.0) {
            return invalid("coupling.singularity_tolerance must be positive");
        }
        if !(self.trajectory.dt_s > 0.0) {
            return invalid("trajectory.dt_s must be positive");
        }
        let d = &self.doe;
        for (name, [lo, hi]) in [
            ("coulomb_friction_Nm", d.coulomb_friction_nm),
            ("payload_mass_kg", d.payload_mass_kg),
            ("deceleration_mps2", d.deceleration_mps2),
        ] {
            if !(lo < hi) {
                return invalid(format!("doe.{name}: lower bound must be below upper bound"));
            }
        }
        if d.grid_points < 2 {
            return invalid("doe.grid_points must be at least 2");
        }
        Ok(())
    }

    pub fn lwr_model(&self) -> Result<RobotModel, ConfigError> {
        self.lwr.model(presets::LWR_PRESET, "lwr")
    }

    pub fn hobm_model(&self) -> Result<RobotModel, ConfigError> {
        self.hobm.model(presets::HOBM_PRESET, "hobm")
    }

    pub fn coupled_system(&self) -> Result<CoupledSystem, ConfigError> {
        let c = &self.coupling;
        let base = planar_pose(Vector3::from(c.base_offset_m), c.base_yaw_deg.to_radians());
        let sys = CoupledSystem::new(self.lwr_model()?, self.hobm_model()?, c.payload_kg, base)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(sys.with_tolerance(c.singularity_tolerance).with_elbow(c.elbow))
    }

    pub fn profile(&self) -> Result<TrapezoidalProfile, ConfigError> {
        let t = &self.trajectory;
        TrapezoidalProfile::new(
            t.theta1_initial_deg.to_radians(),
            t.theta1_final_deg.to_radians(),
            t.ramp_time_s,
            t.total_time_s,
        )
        .map_err(|e| ConfigError::Invalid(format!("trajectory: {e}")))
    }

    pub fn fixed_joints(&self) -> Vec<f64> {
        self.trajectory.fixed_joints_deg.iter().map(|d| d.to_radians()).collect()
    }

    /// The ringdown arm is the HOBM's first two links.
    pub fn ringdown_arm(&self) -> Result<RobotModel, ConfigError> {
        let hobm = self.hobm_model()?;
        if hobm.dof() < 2 {
            return invalid("hobm needs at least two joints for the ringdown");
        }
        Ok(hobm.truncated(2)?.without_gravity())
    }

    /// Ringdown configuration before any start-up maneuver is applied.
    pub fn ringdown_base(&self) -> Result<RingdownConfig, ConfigError> {
        let r = &self.ringdown;
        let mut cfg = RingdownConfig::preset_with(self.ringdown_arm()?, r.payload_kg, r.viscous_nms, r.coulomb_nm);
        cfg.cable_length = r.cable_length_m;
        cfg.coulomb_smoothing = r.smoothing_degps.to_radians();
        cfg.initial_phi = Vector2::from(r.initial_phi_deg.map(f64::to_radians));
        cfg.initial_phid = Vector2::from(r.initial_phid_degps.map(f64::to_radians));
        cfg.dt = r.dt_s;
        cfg.duration = r.duration_s;
        cfg.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(cfg)
    }
}

impl RobotSection {
    fn model(&self, default_preset: &str, section: &str) -> Result<RobotModel, ConfigError> {
        let mut model = match (&self.preset, self.joints.is_empty()) {
            (Some(_), false) => return invalid(format!("{section}: give either `preset` or `joints`, not both")),
            (Some(name), true) => presets::by_name(name).ok_or_else(|| ConfigError::UnknownPreset(name.clone()))?,
            (None, true) => presets::by_name(default_preset).expect("built-in preset"),
            (None, false) => self.inline_model(section)?,
        };
        if self.base_m.is_some() || self.base_yaw_deg.is_some() {
            let base = planar_pose(
                Vector3::from(self.base_m.unwrap_or_default()),
                self.base_yaw_deg.unwrap_or(0.0).to_radians(),
            );
            model.chain_mut().set_base_pose(base);
        }
        if let Some(g) = self.gravity_mps2 {
            model = RobotModel::with_gravity(model.chain().clone(), model.links().to_vec(), Vector3::from(g))?;
        }
        Ok(model)
    }

    fn inline_model(&self, section: &str) -> Result<RobotModel, ConfigError> {
        let mut rows = Vec::with_capacity(self.joints.len());
        let mut links = Vec::with_capacity(self.joints.len());
        for (i, j) in self.joints.iter().enumerate() {
            let row = DhRow {
                theta_offset: j.theta_offset_deg.to_radians(),
                a: j.a_m,
                d: j.d_m,
                alpha: j.alpha_deg.to_radians(),
                joint_type: j.joint_type,
            };
            rows.push(row);
            let [ix, iy, iz] = j.inertia_kgm2;
            let link = LinkInertia::principal(j.mass_kg, Vector3::from(j.com_m), ix, iy, iz)
                .map_err(|e| ConfigError::Invalid(format!("{section}.joints[{i}]: {e}")))?;
            links.push(link);
        }
        let chain = KinematicChain::new(rows).map_err(|e| ConfigError::Invalid(format!("{section}: {e}")))?;
        RobotModel::with_gravity(chain, links, Vector3::new(0.0, 0.0, -STANDARD_GRAVITY)).map_err(Into::into)
    }
}
