//! Coupling of the LWR and the HOBM through the shared payload.
//!
//! The LWR prescribes the payload motion; the HOBM follows it. For each
//! instant the pipeline is
//!
//! 1. payload twist `x' = J_lwr(theta) theta'`,
//! 2. HOBM rates `phi' = J_hobm^-1 x'` and accelerations
//!    `phi'' = J_hobm^-1 (x'' - J_hobm' phi')`,
//! 3. HOBM joint loads from inverse dynamics with the payload at the tip,
//!    less the static gravity term (the balancer cancels it),
//! 4. the payload force `F = J_hobm^-T tau_hobm` the LWR must supply,
//! 5. LWR torques `tau = tau_lwr + J_lwr^T F`.
//!
//! Only the positional 3x3 block of the HOBM Jacobian is ever inverted: the
//! HOBM has no orientation freedom and transmits no moment.

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{self, DynamicsError, RobotModel, Wrench};
use crate::kinematics::{
    task_block, JointState, JointType, KinematicsError, RigidTransform, TaskSpace, DEFAULT_SINGULARITY_TOLERANCE,
};
use crate::trajectory::{TrajectoryError, TrapezoidalProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CouplingError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("HOBM is singular (measure {measure:.3e} below tolerance {tolerance:.3e})")]
    SingularHobm { measure: f64, tolerance: f64 },
    #[error("LWR is singular (measure {measure:.3e} below tolerance {tolerance:.3e})")]
    SingularLwr { measure: f64, tolerance: f64 },
    #[error("payload at planar radius {radius:.6} m is outside the HOBM annulus [{inner:.6}, {outer:.6}] m")]
    Unreachable { radius: f64, inner: f64, outer: f64 },
    #[error("HOBM chain must be revolute-z, revolute-z[, prismatic-z] with zero twist")]
    UnsupportedHobm,
    #[error("payload mass must be non-negative and finite, got {0}")]
    InvalidPayload(f64),
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("expected {expected} fixed joint values, got {actual}")]
    FixedJointCount { expected: usize, actual: usize },
    #[error("at t = {t:.6} s: {source}")]
    AtTime {
        t: f64,
        #[source]
        source: Box<CouplingError>,
    },
}

/// Elbow branch of the HOBM's planar two-link inverse kinematics, named by
/// the sign of the second joint angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElbowBranch {
    #[default]
    Positive,
    Negative,
}

/// Which robot a feasibility violation concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Robot {
    Lwr,
    Hobm,
}

#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub lwr: RobotModel,
    hobm: RobotModel,
    pub payload_mass: f64,
    pub singularity_tolerance: f64,
    pub elbow: ElbowBranch,
}

/// Default HOBM base position (m): places the scenario payload path
/// 1.87-2.05 m from the HOBM axis, mid-annulus with the elbow near 90°.
pub const DEFAULT_HOBM_BASE: [f64; 3] = [1.3, 0.0, 0.0];
/// Default payload mass (kg).
pub const DEFAULT_PAYLOAD_MASS: f64 = 50.0;

impl CoupledSystem {
    /// Preset LWR and HOBM with the default base offset and payload.
    pub fn scenario() -> Self {
        Self::new(
            crate::presets::lwr(),
            crate::presets::hobm(),
            DEFAULT_PAYLOAD_MASS,
            crate::kinematics::planar_pose(Vector3::from(DEFAULT_HOBM_BASE), 0.0),
        )
        .expect("valid presets")
    }

    /// `hobm_base_offset` places the HOBM base frame in the world (LWR base
    /// at the world origin unless the LWR chain says otherwise).
    pub fn new(
        lwr: RobotModel,
        hobm: RobotModel,
        payload_mass: f64,
        hobm_base_offset: RigidTransform,
    ) -> Result<Self, CouplingError> {
        if !(payload_mass >= 0.0 && payload_mass.is_finite()) {
            return Err(CouplingError::InvalidPayload(payload_mass));
        }
        hobm_geometry(&hobm)?;
        let mut hobm = hobm;
        hobm.chain_mut().set_base_pose(hobm_base_offset);
        Ok(Self {
            lwr,
            hobm,
            payload_mass,
            singularity_tolerance: DEFAULT_SINGULARITY_TOLERANCE,
            elbow: ElbowBranch::Positive,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.singularity_tolerance = tolerance;
        self
    }

    pub fn with_elbow(mut self, elbow: ElbowBranch) -> Self {
        self.elbow = elbow;
        self
    }

    /// HOBM model, already placed at its base offset.
    pub fn hobm(&self) -> &RobotModel {
        &self.hobm
    }

    pub fn hobm_base_offset(&self) -> &RigidTransform {
        self.hobm.chain().base_pose()
    }

    /// Copy with all HOBM link masses and the payload set to zero.
    pub fn with_massless_hobm(&self) -> Self {
        Self {
            hobm: self.hobm.massless(),
            payload_mass: 0.0,
            ..self.clone()
        }
    }
}

/// Geometry of a HOBM-shaped chain.
#[derive(Debug, Clone, Copy)]
struct HobmGeometry {
    l1: f64,
    l2: f64,
    theta1: f64,
    theta2: f64,
    /// Constant height offset of the tip above the base (sum of `d`s).
    height: f64,
    prismatic: bool,
}

fn hobm_geometry(model: &RobotModel) -> Result<HobmGeometry, CouplingError> {
    let rows = model.chain().rows();
    let planar = |r: &crate::kinematics::DhRow| r.alpha == 0.0;
    let ok = (rows.len() == 2 || rows.len() == 3)
        && rows[..2].iter().all(|r| r.joint_type == JointType::Revolute && planar(r))
        && rows.get(2).is_none_or(|r| r.joint_type == JointType::Prismatic && planar(r) && r.a == 0.0);
    if !ok {
        return Err(CouplingError::UnsupportedHobm);
    }
    Ok(HobmGeometry {
        l1: rows[0].a,
        l2: rows[1].a,
        theta1: rows[0].theta_offset,
        theta2: rows[1].theta_offset,
        height: rows.iter().map(|r| r.d).sum(),
        prismatic: rows.len() == 3,
    })
}

/// Closed-form inverse kinematics of a planar two-link arm with link lengths
/// `l1`, `l2`, target `(x, y)` in the arm's base frame. Returns the joint
/// angles measured from the links' zero positions.
///
/// Targets within `tolerance` of a singular configuration (measured as
/// `l1 l2 |sin q2|`) are rejected as singular; targets outside the annulus
/// as unreachable.
pub fn planar_two_link_ik(
    l1: f64,
    l2: f64,
    target: Vector2<f64>,
    elbow: ElbowBranch,
    tolerance: f64,
) -> Result<Vector2<f64>, CouplingError> {
    let r = target.norm();
    let (inner, outer) = ((l1 - l2).abs(), l1 + l2);
    let cos_q2 = (r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    // Points just past the boundary fall under the singular check below.
    const BOUNDARY_SLACK: f64 = 1e-12;
    if cos_q2.abs() > 1.0 + BOUNDARY_SLACK || !cos_q2.is_finite() {
        return Err(CouplingError::Unreachable { radius: r, inner, outer });
    }
    let cos_q2 = cos_q2.clamp(-1.0, 1.0);
    let sin_q2 = (1.0 - cos_q2 * cos_q2).sqrt();
    let measure = l1 * l2 * sin_q2;
    if measure < tolerance {
        return Err(CouplingError::SingularHobm { measure, tolerance });
    }
    let sin_q2 = match elbow {
        ElbowBranch::Positive => sin_q2,
        ElbowBranch::Negative => -sin_q2,
    };
    let q2 = sin_q2.atan2(cos_q2);
    let q1 = target.y.atan2(target.x) - (l2 * sin_q2).atan2(l1 + l2 * cos_q2);
    Ok(Vector2::new(q1, q2))
}

/// Payload twist `J_lwr(theta) theta'`, linear part first.
pub fn payload_twist(lwr: &RobotModel, theta: &[f64], thetad: &[f64]) -> Result<nalgebra::Vector6<f64>, CouplingError> {
    lwr.chain().check_dim(thetad.len())?;
    let jac = lwr.chain().geometric_jacobian(theta)?;
    let twist = jac * DVector::from_column_slice(thetad);
    Ok(nalgebra::Vector6::from_column_slice(twist.as_slice()))
}

/// HOBM joint values placing its tip at `payload_position` (world frame).
pub fn hobm_follow(
    hobm: &RobotModel,
    payload_position: &Vector3<f64>,
    elbow: ElbowBranch,
    tolerance: f64,
) -> Result<DVector<f64>, CouplingError> {
    let geo = hobm_geometry(hobm)?;
    let local = hobm.chain().base_pose().inverse_transform_point(&(*payload_position).into());
    let q = planar_two_link_ik(geo.l1, geo.l2, local.coords.xy(), elbow, tolerance)?;
    let mut phi = vec![q.x - geo.theta1, q.y - geo.theta2];
    if geo.prismatic {
        phi.push(local.z - geo.height);
    }
    Ok(DVector::from_vec(phi))
}

fn hobm_task_jacobian(hobm: &RobotModel, phi: &[f64]) -> Result<DMatrix<f64>, CouplingError> {
    let jac = hobm.chain().geometric_jacobian(phi)?;
    Ok(task_block(&jac, TaskSpace::positional_for(hobm.dof())))
}

fn checked_lu(
    task: DMatrix<f64>,
    tolerance: f64,
) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, CouplingError> {
    let lu = task.lu();
    let measure = lu.determinant().abs();
    if !(measure >= tolerance) {
        return Err(CouplingError::SingularHobm { measure, tolerance });
    }
    Ok(lu)
}

fn task_rows(v: &Vector3<f64>, n: usize) -> DVector<f64> {
    DVector::from_column_slice(&v.as_slice()[..n])
}

/// `phi' = J^-1 x'` using the HOBM's positional Jacobian (xy only for a
/// two-link arm).
pub fn hobm_joint_rates(
    hobm: &RobotModel,
    phi: &[f64],
    xdot_linear: &Vector3<f64>,
    tolerance: f64,
) -> Result<DVector<f64>, CouplingError> {
    let lu = checked_lu(hobm_task_jacobian(hobm, phi)?, tolerance)?;
    Ok(lu.solve(&task_rows(xdot_linear, hobm.dof())).expect("non-singular"))
}

/// `phi'' = J^-1 (x'' - J' phi')` with `J'` computed analytically.
pub fn hobm_joint_accels(
    hobm: &RobotModel,
    phi: &[f64],
    phid: &[f64],
    xddot_linear: &Vector3<f64>,
    tolerance: f64,
) -> Result<DVector<f64>, CouplingError> {
    let n = hobm.dof();
    let lu = checked_lu(hobm_task_jacobian(hobm, phi)?, tolerance)?;
    let jdot = hobm.chain().positional_jacobian_derivative(phi, phid)?;
    let jdot = jdot.rows(0, n).into_owned();
    let rhs = task_rows(xddot_linear, n) - jdot * DVector::from_column_slice(phid);
    Ok(lu.solve(&rhs).expect("non-singular"))
}

/// HOBM joint loads caused by motion alone: inverse dynamics with the
/// payload as a tip point mass, minus the static gravity term the balancer
/// compensates.
pub fn hobm_inertial_load(
    hobm: &RobotModel,
    phi: &[f64],
    phid: &[f64],
    phidd: &[f64],
    payload_mass: f64,
) -> Result<DVector<f64>, CouplingError> {
    let loaded = hobm.with_tip_mass(payload_mass);
    let total = loaded.rne(phi, phid, phidd, &Wrench::zero())?;
    let static_part = dynamics::gravity_vector(&loaded, phi)?;
    Ok(total - static_part)
}

/// Solves `J^T F = tau` for the tip force; zero moment.
pub fn wrench_from_joint_loads(
    task_jacobian: &DMatrix<f64>,
    tau: &DVector<f64>,
    point: Vector3<f64>,
    tolerance: f64,
) -> Result<Wrench, CouplingError> {
    let lu = checked_lu(task_jacobian.transpose(), tolerance)?;
    let f = lu.solve(tau).expect("non-singular");
    let mut force = Vector3::zeros();
    force.as_mut_slice()[..f.len()].copy_from_slice(f.as_slice());
    Ok(Wrench::force_at(force, point))
}

/// The force the HOBM's joint loads `tau_hobm` demand at the payload.
pub fn payload_wrench(
    hobm: &RobotModel,
    phi: &[f64],
    tau_hobm: &DVector<f64>,
    tolerance: f64,
) -> Result<Wrench, CouplingError> {
    let task = hobm_task_jacobian(hobm, phi)?;
    let tip = hobm.chain().end_effector(phi)?.translation.vector;
    wrench_from_joint_loads(&task, tau_hobm, tip, tolerance)
}

/// One instant of the coupled motion.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSample {
    pub t: f64,
    pub theta: JointState,
    pub phi: JointState,
    /// Force the LWR exerts on the payload to drive the HOBM.
    pub f_hobm: Wrench,
    pub tau_hobm: DVector<f64>,
    /// LWR torques without the HOBM.
    pub tau_lm: DVector<f64>,
    /// LWR torques including the reflected HOBM load.
    pub tau_total: DVector<f64>,
}

impl CoupledSample {
    /// `tau_total - tau_lm`.
    pub fn reflected(&self) -> DVector<f64> {
        &self.tau_total - &self.tau_lm
    }
}

fn lwr_checked_jacobian(sys: &CoupledSystem, theta: &[f64]) -> Result<DMatrix<f64>, CouplingError> {
    let jac = sys.lwr.chain().geometric_jacobian(theta)?;
    let space = if sys.lwr.dof() == 6 {
        TaskSpace::Full
    } else {
        TaskSpace::Positional
    };
    let block = task_block(&jac, space);
    if block.is_square() {
        let measure = crate::kinematics::singularity_measure(&block)?;
        if !(measure >= sys.singularity_tolerance) {
            return Err(CouplingError::SingularLwr {
                measure,
                tolerance: sys.singularity_tolerance,
            });
        }
    }
    Ok(jac)
}

/// Full coupled evaluation at one LWR state.
pub fn coupled_torques(sys: &CoupledSystem, theta: &JointState) -> Result<CoupledSample, CouplingError> {
    let (q, qd, qdd) = (theta.q.as_slice(), theta.qd.as_slice(), theta.qdd.as_slice());
    let tol = sys.singularity_tolerance;
    let jac = lwr_checked_jacobian(sys, q)?;
    let lwr_chain = sys.lwr.chain();
    lwr_chain.check_dim(qd.len())?;
    lwr_chain.check_dim(qdd.len())?;

    let p_ee = lwr_chain.end_effector(q)?.translation.vector;
    let qd_v = DVector::from_column_slice(qd);
    let xdot = (jac.rows(0, 3) * &qd_v).fixed_rows::<3>(0).into_owned();
    let jdot = lwr_chain.positional_jacobian_derivative(q, qd)?;
    let xddot = (jac.rows(0, 3) * DVector::from_column_slice(qdd) + jdot * &qd_v)
        .fixed_rows::<3>(0)
        .into_owned();

    let hobm = sys.hobm();
    let phi = hobm_follow(hobm, &p_ee, sys.elbow, tol)?;
    let phid = hobm_joint_rates(hobm, phi.as_slice(), &xdot, tol)?;
    let phidd = hobm_joint_accels(hobm, phi.as_slice(), phid.as_slice(), &xddot, tol)?;
    let tau_hobm = hobm_inertial_load(hobm, phi.as_slice(), phid.as_slice(), phidd.as_slice(), sys.payload_mass)?;
    // Apply at the LWR tool point; it coincides with the HOBM tip.
    let mut f_hobm = payload_wrench(hobm, phi.as_slice(), &tau_hobm, tol)?;
    f_hobm.point = p_ee;

    let tau_lm = sys.lwr.rne(q, qd, qdd, &Wrench::zero())?;
    let reflected = jac.transpose() * DVector::from_column_slice(f_hobm.to_vector().as_slice());
    let tau_total = &tau_lm + reflected;

    Ok(CoupledSample {
        t: 0.0,
        theta: theta.clone(),
        phi: JointState::new(phi, phid, phidd)?,
        f_hobm,
        tau_hobm,
        tau_lm,
        tau_total,
    })
}

/// Sample times `0, dt, ..., t_f`: `floor(t_f / dt) + 1` of them.
pub fn sample_times(total_time: f64, dt: f64) -> Result<Vec<f64>, CouplingError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CouplingError::InvalidTimeStep(dt));
    }
    // Absorb representation error in t_f / dt (e.g. 2 / 0.001).
    let n = (total_time / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| (k as f64 * dt).min(total_time)).collect())
}

/// LWR state at `t`: joint 1 follows the profile, joints 2.. held fixed.
pub fn scenario_state(profile: &TrapezoidalProfile, fixed_joints: &[f64], t: f64) -> Result<JointState, CouplingError> {
    let (p, v, a) = profile.sample(t)?;
    let n = fixed_joints.len() + 1;
    let mut q = DVector::zeros(n);
    q[0] = p;
    q.rows_mut(1, n - 1).copy_from_slice(fixed_joints);
    let mut qd = DVector::zeros(n);
    qd[0] = v;
    let mut qdd = DVector::zeros(n);
    qdd[0] = a;
    Ok(JointState::new(q, qd, qdd)?)
}

fn check_fixed(sys: &CoupledSystem, fixed_joints: &[f64]) -> Result<(), CouplingError> {
    let expected = sys.lwr.dof() - 1;
    if fixed_joints.len() != expected {
        return Err(CouplingError::FixedJointCount {
            expected,
            actual: fixed_joints.len(),
        });
    }
    Ok(())
}

/// Coupled torques along the profile. Samples are evaluated in parallel and
/// returned in time order; the first failing sample's error is returned
/// with its time.
pub fn simulate_coupled(
    sys: &CoupledSystem,
    profile: &TrapezoidalProfile,
    fixed_joints: &[f64],
    dt: f64,
) -> Result<Vec<CoupledSample>, CouplingError> {
    check_fixed(sys, fixed_joints)?;
    sample_times(profile.total_time(), dt)?
        .into_par_iter()
        .map(|t| {
            scenario_state(profile, fixed_joints, t)
                .and_then(|state| coupled_torques(sys, &state))
                .map(|mut s| {
                    s.t = t;
                    s
                })
                .map_err(|e| CouplingError::AtTime { t, source: Box::new(e) })
        })
        .collect()
}

/// LWR-only torques along the profile; HOBM fields are zero and
/// `tau_total == tau_lm`.
pub fn simulate_lwr_only(
    lwr: &RobotModel,
    profile: &TrapezoidalProfile,
    fixed_joints: &[f64],
    dt: f64,
) -> Result<Vec<CoupledSample>, CouplingError> {
    let expected = lwr.dof() - 1;
    if fixed_joints.len() != expected {
        return Err(CouplingError::FixedJointCount {
            expected,
            actual: fixed_joints.len(),
        });
    }
    sample_times(profile.total_time(), dt)?
        .into_iter()
        .map(|t| {
            let state = scenario_state(profile, fixed_joints, t)?;
            let tau_lm = dynamics::inverse_dynamics(lwr, &state, &Wrench::zero())?;
            Ok(CoupledSample {
                t,
                theta: state,
                phi: JointState::at_rest(DVector::zeros(0)),
                f_hobm: Wrench::zero(),
                tau_hobm: DVector::zeros(0),
                tau_total: tau_lm.clone(),
                tau_lm,
            })
        })
        .collect()
}

/// What went wrong at a path sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViolationKind {
    /// Singularity measure below tolerance.
    Singular { measure: f64 },
    /// Payload outside the HOBM annulus.
    Unreachable { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub t: f64,
    pub robot: Robot,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub samples: usize,
    pub violations: Vec<Violation>,
    /// Smallest singularity measure seen for each robot over reachable
    /// samples.
    pub min_lwr_measure: f64,
    pub min_hobm_measure: f64,
}

impl FeasibilityReport {
    pub fn first_violation(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

/// Samples both robots' singularity measures and HOBM reachability along the
/// path. Never fails on a bad path; input errors (bad `dt`, wrong joint
/// count) are still reported as errors.
pub fn check_path_feasible(
    sys: &CoupledSystem,
    profile: &TrapezoidalProfile,
    fixed_joints: &[f64],
    dt: f64,
) -> Result<FeasibilityReport, CouplingError> {
    check_fixed(sys, fixed_joints)?;
    let tol = sys.singularity_tolerance;
    let times = sample_times(profile.total_time(), dt)?;
    let mut violations = Vec::new();
    let mut min_lwr = f64::INFINITY;
    let mut min_hobm = f64::INFINITY;

    for &t in &times {
        let state = scenario_state(profile, fixed_joints, t)?;
        let q = state.q.as_slice();
        let jac = sys.lwr.chain().geometric_jacobian(q)?;
        let block = task_block(
            &jac,
            if sys.lwr.dof() == 6 {
                TaskSpace::Full
            } else {
                TaskSpace::Positional
            },
        );
        if block.is_square() {
            let measure = crate::kinematics::singularity_measure(&block)?;
            min_lwr = min_lwr.min(measure);
            if !(measure >= tol) {
                violations.push(Violation {
                    t,
                    robot: Robot::Lwr,
                    kind: ViolationKind::Singular { measure },
                });
            }
        }

        let p_ee = sys.lwr.chain().end_effector(q)?.translation.vector;
        match hobm_follow(sys.hobm(), &p_ee, sys.elbow, tol) {
            Ok(phi) => {
                let measure = sys.hobm().chain().singularity_measure(
                    phi.as_slice(),
                    TaskSpace::positional_for(sys.hobm().dof()),
                )?;
                min_hobm = min_hobm.min(measure);
                if !(measure >= tol) {
                    violations.push(Violation {
                        t,
                        robot: Robot::Hobm,
                        kind: ViolationKind::Singular { measure },
                    });
                }
            }
            Err(CouplingError::SingularHobm { measure, .. }) => {
                min_hobm = min_hobm.min(measure);
                violations.push(Violation {
                    t,
                    robot: Robot::Hobm,
                    kind: ViolationKind::Singular { measure },
                });
            }
            Err(CouplingError::Unreachable { radius, .. }) => violations.push(Violation {
                t,
                robot: Robot::Hobm,
                kind: ViolationKind::Unreachable { radius },
            }),
            Err(e) => return Err(e),
        }
    }

    Ok(FeasibilityReport {
        feasible: violations.is_empty(),
        samples: times.len(),
        violations,
        min_lwr_measure: min_lwr,
        min_hobm_measure: min_hobm,
    })
}

/// Per-joint ratio of peak `|tau_total|` to peak `|tau_lm|` over a run.
pub fn peak_ratios(samples: &[CoupledSample]) -> Vec<f64> {
    let Some(first) = samples.first() else {
        return Vec::new();
    };
    (0..first.tau_lm.len())
        .map(|j| {
            let peak = |f: fn(&CoupledSample) -> &DVector<f64>| {
                samples.iter().map(|s| f(s)[j].abs()).fold(0.0, f64::max)
            };
            peak(|s| &s.tau_total) / peak(|s| &s.tau_lm)
        })
        .collect()
}
