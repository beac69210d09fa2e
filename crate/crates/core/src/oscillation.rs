//! Ringdown of a cable-lift HOBM after the LWR stops.
//!
//! With a cable in place of the telescopic axis, the payload hangs below the
//! tip of the two revolute links. Once the LWR holds the payload still, any
//! residual arm motion swings the cable; for small angles the cable pulls the
//! tip back toward the payload with stiffness `m_p g / L`. The arm moves in a
//! horizontal plane, so gravity does no work on it.
//!
//! Equation of motion, integrated with fixed-step classical RK4:
//!
//! ```text
//! M(phi) phi'' = -C(phi, phi') phi' - J^T k (p_tip - p_anchor)
//!                - b . phi' - tau_c . tanh(phi' / eps)
//! ```
//!
//! The disturbance on the LWR is the cable force on the payload,
//! `k (p_tip - p_anchor)`.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector3};
use thiserror::Error;

use crate::coupling::{self, CouplingError, ElbowBranch};
use crate::dynamics::{self, DynamicsError, RobotModel, Wrench, STANDARD_GRAVITY};
use crate::kinematics::{task_block, TaskSpace, DEFAULT_SINGULARITY_TOLERANCE};

/// Default width of the Coulomb friction regularisation (rad/s).
pub const DEFAULT_COULOMB_SMOOTHING: f64 = 1e-3;
/// Default integration step (s).
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OscillationError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Coupling(#[from] CouplingError),
    #[error("invalid ringdown configuration: {0}")]
    InvalidConfig(String),
    #[error("state became non-finite at t = {t:.6} s")]
    BlowUp { t: f64 },
    #[error("mass matrix not positive definite at t = {t:.6} s")]
    SingularMass { t: f64 },
    #[error("sample series is empty")]
    EmptySeries,
    #[error("band must be positive, got {0}")]
    InvalidBand(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RingdownConfig {
    /// Two revolute links with vertical axes.
    pub arm: RobotModel,
    pub cable_length: f64,
    pub payload_mass: f64,
    /// Per-joint viscous coefficients (N·m·s/rad).
    pub viscous_friction: [f64; 2],
    /// Per-joint Coulomb friction magnitudes (N·m).
    pub coulomb_friction: [f64; 2],
    /// Velocity scale of the `tanh` friction regularisation (rad/s).
    pub coulomb_smoothing: f64,
    pub initial_phi: Vector2<f64>,
    pub initial_phid: Vector2<f64>,
    /// Where the LWR holds the payload; `None` puts it under the tip at
    /// `initial_phi`.
    pub anchor: Option<Vector3<f64>>,
    pub dt: f64,
    pub duration: f64,
}

/// Deceleration of the payload from a steady cruise to rest, used to set up
/// the ringdown's initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopManeuver {
    /// Payload position when braking begins (world).
    pub start: Vector3<f64>,
    /// Direction of travel (normalised internally).
    pub direction: Vector3<f64>,
    /// Cruise speed before braking (m/s).
    pub speed: f64,
    /// Braking deceleration (m/s²).
    pub deceleration: f64,
}

impl StopManeuver {
    pub fn stop_time(&self) -> f64 {
        self.speed / self.deceleration
    }

    fn payload_position(&self, t: f64) -> Vector3<f64> {
        let t = t.clamp(0.0, self.stop_time());
        self.start + self.direction.normalize() * (self.speed * t - 0.5 * self.deceleration * t * t)
    }

    /// Default braking scenario: 0.5 m/s diagonal cruise starting 2 m from
    /// the HOBM axis, 2 m/s² braking.
    pub fn preset() -> Self {
        Self {
            start: Vector3::new(2.0, 0.0, 0.0),
            direction: Vector3::new(-1.0, 1.0, 0.0),
            speed: 0.5,
            deceleration: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingdownSample {
    pub t: f64,
    pub phi: Vector2<f64>,
    pub phid: Vector2<f64>,
    /// Horizontal cable force acting on the held payload.
    pub tip_force: Wrench,
    pub mech_energy: f64,
}

impl RingdownConfig {
    /// Preset cable-lift arm: 1 m cable, 50 kg payload, 20 N·m·s/rad viscous
    /// and 1 N·m Coulomb friction per joint, started by [`StopManeuver::preset`].
    pub fn preset() -> Self {
        Self::preset_with(crate::presets::hobm_cable(), 50.0, [20.0, 20.0], [1.0, 1.0])
            .after_stop(&StopManeuver::preset())
            .expect("preset stop is valid")
    }

    /// Unstarted config (arm at rest under the anchor at `phi = (0, pi/2)`).
    pub fn preset_with(arm: RobotModel, payload_mass: f64, viscous: [f64; 2], coulomb: [f64; 2]) -> Self {
        Self {
            arm,
            cable_length: 1.0,
            payload_mass,
            viscous_friction: viscous,
            coulomb_friction: coulomb,
            coulomb_smoothing: DEFAULT_COULOMB_SMOOTHING,
            initial_phi: Vector2::new(0.0, std::f64::consts::FRAC_PI_2),
            initial_phid: Vector2::zeros(),
            anchor: None,
            dt: DEFAULT_DT,
            duration: 10.0,
        }
    }

    pub fn validate(&self) -> Result<(), OscillationError> {
        let bad = |msg: &str| Err(OscillationError::InvalidConfig(msg.to_string()));
        if self.arm.dof() != 2 {
            return bad("arm must have exactly two joints");
        }
        if !(self.cable_length > 0.0 && self.cable_length.is_finite()) {
            return bad("cable_length must be positive");
        }
        if !(self.payload_mass >= 0.0 && self.payload_mass.is_finite()) {
            return bad("payload_mass must be non-negative");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.duration >= self.dt) {
            return bad("duration must be at least dt");
        }
        if !self.viscous_friction.iter().chain(&self.coulomb_friction).all(|&f| f >= 0.0 && f.is_finite()) {
            return bad("friction coefficients must be non-negative");
        }
        if !(self.coulomb_smoothing > 0.0) {
            return bad("coulomb_smoothing must be positive");
        }
        let state_ok = self.initial_phi.iter().chain(self.initial_phid.iter()).all(|v| v.is_finite());
        if !state_ok || self.anchor.is_some_and(|a| !a.iter().all(|v| v.is_finite())) {
            return bad("initial state must be finite");
        }
        Ok(())
    }

    /// Cable stiffness `m_p g / L` (N/m).
    pub fn cable_stiffness(&self) -> f64 {
        self.payload_mass * STANDARD_GRAVITY / self.cable_length
    }

    /// Runs `maneuver` with the arm following a moving anchor, returning a
    /// config whose initial state is the arm state at the instant the
    /// payload comes to rest, anchored at that rest position.
    pub fn after_stop(&self, maneuver: &StopManeuver) -> Result<RingdownConfig, OscillationError> {
        if !(maneuver.speed >= 0.0 && maneuver.deceleration > 0.0) || maneuver.direction.norm() == 0.0 {
            return Err(OscillationError::InvalidConfig(
                "stop maneuver needs speed >= 0, deceleration > 0 and a direction".into(),
            ));
        }
        let dynamics = CableArm::new(self)?;
        let base = self.arm.chain().base_pose();
        let local = base.inverse_transform_point(&maneuver.start.into());
        let rows = self.arm.chain().rows();
        let q = coupling::planar_two_link_ik(
            rows[0].a,
            rows[1].a,
            local.coords.xy(),
            ElbowBranch::Positive,
            DEFAULT_SINGULARITY_TOLERANCE,
        )?;
        let phi = Vector2::new(q.x - rows[0].theta_offset, q.y - rows[1].theta_offset);
        let velocity = maneuver.direction.normalize() * maneuver.speed;
        let phid = coupling::hobm_joint_rates(&self.arm, phi.as_slice(), &velocity, DEFAULT_SINGULARITY_TOLERANCE)?;

        let mut state = State {
            phi,
            phid: Vector2::new(phid[0], phid[1]),
        };
        let stop = maneuver.stop_time();
        let mut t = 0.0;
        while t < stop {
            let h = self.dt.min(stop - t);
            state = dynamics.rk4_step(&state, t, h, &|s| maneuver.payload_position(s))?;
            t += h;
        }
        Ok(RingdownConfig {
            initial_phi: state.phi,
            initial_phid: state.phid,
            anchor: Some(maneuver.payload_position(stop)),
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct State {
    phi: Vector2<f64>,
    phid: Vector2<f64>,
}

impl State {
    fn axpy(&self, h: f64, d: &Deriv) -> State {
        State {
            phi: self.phi + d.phid * h,
            phid: self.phid + d.phidd * h,
        }
    }

    fn is_finite(&self) -> bool {
        self.phi.iter().chain(self.phid.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy)]
struct Deriv {
    phid: Vector2<f64>,
    phidd: Vector2<f64>,
}

/// Cable-loaded two-link arm dynamics.
struct CableArm {
    arm: RobotModel,
    stiffness: f64,
    viscous: Vector2<f64>,
    coulomb: Vector2<f64>,
    smoothing: f64,
}

impl CableArm {
    fn new(cfg: &RingdownConfig) -> Result<Self, OscillationError> {
        cfg.validate()?;
        Ok(Self {
            arm: cfg.arm.without_gravity(),
            stiffness: cfg.cable_stiffness(),
            viscous: Vector2::from(cfg.viscous_friction),
            coulomb: Vector2::from(cfg.coulomb_friction),
            smoothing: cfg.coulomb_smoothing,
        })
    }

    fn tip(&self, phi: &Vector2<f64>) -> Result<Vector3<f64>, OscillationError> {
        Ok(self
            .arm
            .chain()
            .end_effector(phi.as_slice())
            .map_err(DynamicsError::from)?
            .translation
            .vector)
    }

    fn cable_force_on_payload(&self, phi: &Vector2<f64>, anchor: &Vector3<f64>) -> Result<Vector3<f64>, OscillationError> {
        Ok((self.tip(phi)? - anchor) * self.stiffness)
    }

    fn energy(&self, s: &State, anchor: &Vector3<f64>) -> Result<f64, OscillationError> {
        let kinetic = dynamics::kinetic_energy(&self.arm, s.phi.as_slice(), s.phid.as_slice())?;
        let stretch = self.tip(&s.phi)? - anchor;
        Ok(kinetic + 0.5 * self.stiffness * stretch.norm_squared())
    }

    fn deriv(&self, s: &State, anchor: &Vector3<f64>, t: f64) -> Result<Deriv, OscillationError> {
        let phi = s.phi.as_slice();
        let m = dynamics::mass_matrix(&self.arm, phi)?;
        let bias = dynamics::bias_forces(&self.arm, phi, s.phid.as_slice())?;
        let jac: DMatrix<f64> = task_block(
            &self.arm.chain().geometric_jacobian(phi).map_err(DynamicsError::from)?,
            TaskSpace::Positional,
        );
        let cable = self.cable_force_on_payload(&s.phi, anchor)?;
        let cable_torque = jac.transpose() * DVector::from_column_slice(cable.as_slice());

        let friction = self.viscous.component_mul(&s.phid)
            + self.coulomb.component_mul(&s.phid.map(|v| (v / self.smoothing).tanh()));
        let rhs = Vector2::new(-bias[0] - cable_torque[0], -bias[1] - cable_torque[1]) - friction;
        let mass = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let phidd = mass.cholesky().ok_or(OscillationError::SingularMass { t })?.solve(&rhs);
        Ok(Deriv { phid: s.phid, phidd })
    }

    fn rk4_step(
        &self,
        s: &State,
        t: f64,
        h: f64,
        anchor: &dyn Fn(f64) -> Vector3<f64>,
    ) -> Result<State, OscillationError> {
        let k1 = self.deriv(s, &anchor(t), t)?;
        let k2 = self.deriv(&s.axpy(0.5 * h, &k1), &anchor(t + 0.5 * h), t)?;
        let k3 = self.deriv(&s.axpy(0.5 * h, &k2), &anchor(t + 0.5 * h), t)?;
        let k4 = self.deriv(&s.axpy(h, &k3), &anchor(t + h), t)?;
        let next = State {
            phi: s.phi + (k1.phid + 2.0 * k2.phid + 2.0 * k3.phid + k4.phid) * (h / 6.0),
            phid: s.phid + (k1.phidd + 2.0 * k2.phidd + 2.0 * k3.phidd + k4.phidd) * (h / 6.0),
        };
        if !next.is_finite() {
            return Err(OscillationError::BlowUp { t: t + h });
        }
        Ok(next)
    }

    fn sample(&self, t: f64, s: &State, anchor: &Vector3<f64>) -> Result<RingdownSample, OscillationError> {
        Ok(RingdownSample {
            t,
            phi: s.phi,
            phid: s.phid,
            tip_force: Wrench::force_at(self.cable_force_on_payload(&s.phi, anchor)?, *anchor),
            mech_energy: self.energy(s, anchor)?,
        })
    }
}

/// Integrates the ringdown from `cfg`'s initial state with the payload held
/// at the anchor. Samples every step, `floor(duration / dt) + 1` in total.
pub fn simulate_ringdown(cfg: &RingdownConfig) -> Result<Vec<RingdownSample>, OscillationError> {
    let arm = CableArm::new(cfg)?;
    let anchor = match cfg.anchor {
        Some(a) => a,
        None => arm.tip(&cfg.initial_phi)?,
    };
    let steps = (cfg.duration / cfg.dt + 1e-9).floor() as usize;
    let mut state = State {
        phi: cfg.initial_phi,
        phid: cfg.initial_phid,
    };
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(arm.sample(0.0, &state, &anchor)?);
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        state = arm.rk4_step(&state, t, cfg.dt, &|_| anchor)?;
        samples.push(arm.sample((k + 1) as f64 * cfg.dt, &state, &anchor)?);
    }
    Ok(samples)
}

/// First time after which every joint stays within `band` of its final
/// (last-sample) value. A series that only meets the band at its last
/// sample reports the full duration.
pub fn settling_time(samples: &[RingdownSample], band: f64) -> Result<f64, OscillationError> {
    if !(band > 0.0) {
        return Err(OscillationError::InvalidBand(band));
    }
    let last = samples.last().ok_or(OscillationError::EmptySeries)?;
    let outside = |s: &RingdownSample| (s.phi - last.phi).abs().max() > band;
    match samples.iter().rposition(outside) {
        None => Ok(samples[0].t),
        Some(i) => Ok(samples[(i + 1).min(samples.len() - 1)].t),
    }
}

/// Largest cable force magnitude over the series (N).
pub fn peak_force(samples: &[RingdownSample]) -> Result<f64, OscillationError> {
    if samples.is_empty() {
        return Err(OscillationError::EmptySeries);
    }
    Ok(samples.iter().map(|s| s.tip_force.force.norm()).fold(0.0, f64::max))
}

/// Successive local maxima of `|phi_j - phi_j(final)|`.
pub fn oscillation_peaks(samples: &[RingdownSample], joint: usize) -> Vec<f64> {
    let Some(last) = samples.last() else {
        return Vec::new();
    };
    let dev: Vec<f64> = samples.iter().map(|s| (s.phi[joint] - last.phi[joint]).abs()).collect();
    dev.windows(3)
        .filter(|w| w[1] > w[0] && w[1] >= w[2])
        .map(|w| w[1])
        .collect()
}

/// Successive local maxima of the cable force magnitude, i.e. of the tip's
/// swing amplitude about the anchor. Unlike the per-joint peaks, these are
/// not affected by the two arm modes beating against each other.
pub fn force_peaks(samples: &[RingdownSample]) -> Vec<f64> {
    let f: Vec<f64> = samples.iter().map(|s| s.tip_force.force.norm()).collect();
    f.windows(3)
        .filter(|w| w[1] > w[0] && w[1] >= w[2])
        .map(|w| w[1])
        .collect()
}

/// Steady-motion drag the LWR must overcome against HOBM Coulomb friction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DragEffort {
    /// Tip force `J^-T (tau_c . sign(phi'))`.
    pub wrench: Wrench,
    /// Component of the force along the tip's direction of motion; equals
    /// the frictional power divided by tip speed.
    pub along_motion: f64,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Drag for a given square positional task Jacobian (rows matching the
/// joint count): `F = J^-T (tau_c . sign(phi'))`.
pub fn drag_from_task_jacobian(
    task_jacobian: &DMatrix<f64>,
    phid_direction: &[f64],
    coulomb_friction: &[f64],
    point: Vector3<f64>,
    tolerance: f64,
) -> Result<DragEffort, OscillationError> {
    let n = task_jacobian.ncols();
    if phid_direction.len() != n || coulomb_friction.len() != n {
        return Err(OscillationError::InvalidConfig(format!(
            "expected {n} direction and friction components"
        )));
    }
    if phid_direction.iter().all(|&v| v == 0.0) {
        return Err(OscillationError::InvalidConfig("direction must be non-zero".into()));
    }
    let tau = DVector::from_iterator(n, coulomb_friction.iter().zip(phid_direction).map(|(&c, &d)| c * sign(d)));
    let wrench = coupling::wrench_from_joint_loads(task_jacobian, &tau, point, tolerance)?;
    let tip_velocity = task_jacobian * DVector::from_column_slice(phid_direction);
    let speed = tip_velocity.norm();
    let force = &wrench.force.as_slice()[..tip_velocity.len()];
    let along_motion = if speed > 0.0 {
        force.iter().zip(tip_velocity.iter()).map(|(f, v)| f * v).sum::<f64>() / speed
    } else {
        0.0
    };
    Ok(DragEffort { wrench, along_motion })
}

/// Cartesian drag on the HOBM tip for joint motion in direction
/// `phid_direction`.
pub fn drag_wrench(
    hobm: &RobotModel,
    phi: &[f64],
    phid_direction: &[f64],
    coulomb_friction: &[f64],
    tolerance: f64,
) -> Result<DragEffort, OscillationError> {
    let jac = hobm.chain().geometric_jacobian(phi).map_err(DynamicsError::from)?;
    let task = task_block(&jac, TaskSpace::positional_for(hobm.dof()));
    let tip = hobm.chain().end_effector(phi).map_err(DynamicsError::from)?.translation.vector;
    drag_from_task_jacobian(&task, phid_direction, coulomb_friction, tip, tolerance)
}
