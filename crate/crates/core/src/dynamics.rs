//! Inverse dynamics of serial chains by the recursive Newton-Euler method,
//! and the `M(q) qdd + V(q, qd) qd + G(q)` decomposition built on top of it.
//!
//! The recursion runs in world coordinates: an outward pass propagates link
//! angular velocity/acceleration and origin accelerations (gravity enters as
//! a fictitious upward acceleration of the base), then an inward pass
//! accumulates the force and moment each link transmits to its parent.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3, Vector6};
use thiserror::Error;

use crate::kinematics::{JointState, JointType, KinematicChain, KinematicsError};

pub const STANDARD_GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error("model has {links} inertial links for {dof} joints")]
    LinkCountMismatch { links: usize, dof: usize },
    #[error("link mass must be non-negative, got {0}")]
    NegativeMass(f64),
    #[error("link inertia must be symmetric")]
    AsymmetricInertia,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// Mass properties of one link, expressed in that link's DH frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkInertia {
    pub mass: f64,
    /// Centre of mass in the link frame.
    pub com: Vector3<f64>,
    /// Inertia tensor about the centre of mass, link-frame axes.
    pub inertia: Matrix3<f64>,
}

impl LinkInertia {
    pub fn new(mass: f64, com: Vector3<f64>, inertia: Matrix3<f64>) -> Result<Self, DynamicsError> {
        if !(mass >= 0.0) {
            return Err(DynamicsError::NegativeMass(mass));
        }
        if (inertia - inertia.transpose()).abs().max() > 1e-12 * (1.0 + inertia.abs().max()) {
            return Err(DynamicsError::AsymmetricInertia);
        }
        Ok(Self { mass, com, inertia })
    }

    /// Link with a diagonal inertia tensor.
    pub fn principal(mass: f64, com: Vector3<f64>, ixx: f64, iyy: f64, izz: f64) -> Result<Self, DynamicsError> {
        Self::new(mass, com, Matrix3::from_diagonal(&Vector3::new(ixx, iyy, izz)))
    }

    pub fn massless() -> Self {
        Self {
            mass: 0.0,
            com: Vector3::zeros(),
            inertia: Matrix3::zeros(),
        }
    }

    /// Principal moments are non-negative and satisfy the triangle
    /// inequalities of a real body.
    pub fn is_physical(&self) -> bool {
        let Some(eig) = self.inertia.try_symmetric_eigen(1e-14, 0) else {
            return false;
        };
        let m = eig.eigenvalues;
        let tol = 1e-12 * (1.0 + m.abs().max());
        m.iter().all(|&v| v >= -tol)
            && m[0] + m[1] + tol >= m[2]
            && m[1] + m[2] + tol >= m[0]
            && m[0] + m[2] + tol >= m[1]
    }

    /// Adds a point mass located at `point` (link frame), returning the
    /// combined body.
    pub fn with_point_mass(&self, mass: f64, point: Vector3<f64>) -> LinkInertia {
        let total = self.mass + mass;
        if total == 0.0 {
            return *self;
        }
        let com = (self.com * self.mass + point * mass) / total;
        let shift = |m: f64, d: Vector3<f64>| m * (Matrix3::identity() * d.norm_squared() - d * d.transpose());
        LinkInertia {
            mass: total,
            com,
            inertia: self.inertia + shift(self.mass, self.com - com) + shift(mass, point - com),
        }
    }
}

/// A force/moment pair in world coordinates, with the moment taken about
/// `point`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
    pub point: Vector3<f64>,
}

impl Wrench {
    pub fn zero() -> Self {
        Self {
            force: Vector3::zeros(),
            moment: Vector3::zeros(),
            point: Vector3::zeros(),
        }
    }

    pub fn force_at(force: Vector3<f64>, point: Vector3<f64>) -> Self {
        Self {
            force,
            moment: Vector3::zeros(),
            point,
        }
    }

    /// The same wrench with its moment re-expressed about `point`.
    pub fn moved_to(&self, point: Vector3<f64>) -> Wrench {
        Wrench {
            force: self.force,
            moment: self.moment + (self.point - point).cross(&self.force),
            point,
        }
    }

    /// `[force; moment]`, matching the row order of
    /// [`KinematicChain::geometric_jacobian`].
    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.moment.x,
            self.moment.y,
            self.moment.z,
        )
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.moment.iter()).chain(self.point.iter()).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    chain: KinematicChain,
    links: Vec<LinkInertia>,
    gravity: Vector3<f64>,
}

impl RobotModel {
    /// Model under standard gravity along world -z.
    pub fn new(chain: KinematicChain, links: Vec<LinkInertia>) -> Result<Self, DynamicsError> {
        Self::with_gravity(chain, links, Vector3::new(0.0, 0.0, -STANDARD_GRAVITY))
    }

    pub fn with_gravity(
        chain: KinematicChain,
        links: Vec<LinkInertia>,
        gravity: Vector3<f64>,
    ) -> Result<Self, DynamicsError> {
        if links.len() != chain.dof() {
            return Err(DynamicsError::LinkCountMismatch {
                links: links.len(),
                dof: chain.dof(),
            });
        }
        if !gravity.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::NonFinite("gravity"));
        }
        Ok(Self { chain, links, gravity })
    }

    pub fn chain(&self) -> &KinematicChain {
        &self.chain
    }

    pub fn chain_mut(&mut self) -> &mut KinematicChain {
        &mut self.chain
    }

    pub fn links(&self) -> &[LinkInertia] {
        &self.links
    }

    pub fn gravity(&self) -> Vector3<f64> {
        self.gravity
    }

    pub fn dof(&self) -> usize {
        self.chain.dof()
    }

    /// Copy of the model with gravity switched off.
    pub fn without_gravity(&self) -> RobotModel {
        RobotModel {
            gravity: Vector3::zeros(),
            ..self.clone()
        }
    }

    /// Copy of the model with every link mass and inertia set to zero.
    pub fn massless(&self) -> RobotModel {
        RobotModel {
            links: vec![LinkInertia::massless(); self.links.len()],
            ..self.clone()
        }
    }

    /// Copy of the model with a point mass rigidly attached at the origin of
    /// the end-effector frame.
    pub fn with_tip_mass(&self, mass: f64) -> RobotModel {
        let mut links = self.links.clone();
        let last = links.last_mut().expect("model has at least one link");
        *last = last.with_point_mass(mass, Vector3::zeros());
        RobotModel { links, ..self.clone() }
    }

    /// Keeps only the first `n` joints and their links.
    pub fn truncated(&self, n: usize) -> Result<RobotModel, DynamicsError> {
        let rows = self.chain.rows()[..n.min(self.dof())].to_vec();
        let chain = KinematicChain::with_base(rows, *self.chain.base_pose())?;
        RobotModel::with_gravity(chain, self.links[..n.min(self.dof())].to_vec(), self.gravity)
    }

    fn check(&self, q: &[f64], qd: &[f64], qdd: &[f64]) -> Result<(), DynamicsError> {
        for len in [q.len(), qd.len(), qdd.len()] {
            self.chain.check_dim(len)?;
        }
        if !q.iter().chain(qd).chain(qdd).all(|v| v.is_finite()) {
            return Err(DynamicsError::NonFinite("joint state"));
        }
        Ok(())
    }

    /// Recursive Newton-Euler inverse dynamics on raw slices.
    ///
    /// `ee_wrench` is the wrench the end-effector exerts on its environment,
    /// so a non-zero wrench adds `J^T [f; m]` to the returned torques.
    pub fn rne(&self, q: &[f64], qd: &[f64], qdd: &[f64], ee_wrench: &Wrench) -> Result<DVector<f64>, DynamicsError> {
        self.check(q, qd, qdd)?;
        if !ee_wrench.is_finite() {
            return Err(DynamicsError::NonFinite("end-effector wrench"));
        }
        let n = self.dof();
        let frames = self.chain.frames_with_base(q)?;
        let rows = self.chain.rows();

        // Outward pass.
        let mut omega = Vector3::zeros();
        let mut omega_dot = Vector3::zeros();
        let mut accel = -self.gravity;
        let mut com_accel = Vec::with_capacity(n);
        let mut omegas = Vec::with_capacity(n);
        let mut omega_dots = Vec::with_capacity(n);
        let mut coms = Vec::with_capacity(n);
        for i in 0..n {
            let z = frames[i].rotation * Vector3::z();
            let r = frames[i + 1].translation.vector - frames[i].translation.vector;
            match rows[i].joint_type {
                JointType::Revolute => {
                    let omega_prev = omega;
                    omega = omega_prev + z * qd[i];
                    omega_dot = omega_dot + z * qdd[i] + omega_prev.cross(&(z * qd[i]));
                    accel += omega_dot.cross(&r) + omega.cross(&omega.cross(&r));
                }
                JointType::Prismatic => {
                    accel += omega_dot.cross(&r)
                        + omega.cross(&omega.cross(&r))
                        + 2.0 * omega.cross(&(z * qd[i]))
                        + z * qdd[i];
                }
            }
            let c = frames[i + 1] * nalgebra::Point3::from(self.links[i].com);
            let rc = c.coords - frames[i + 1].translation.vector;
            com_accel.push(accel + omega_dot.cross(&rc) + omega.cross(&omega.cross(&rc)));
            omegas.push(omega);
            omega_dots.push(omega_dot);
            coms.push(c.coords);
        }

        // Inward pass. `force`/`moment` hold what link i+1 receives from link
        // i, the moment taken about the origin of frame i.
        let tip = ee_wrench.moved_to(frames[n].translation.vector);
        let mut force = tip.force;
        let mut moment = tip.moment;
        let mut tau = DVector::zeros(n);
        for i in (0..n).rev() {
            let link = &self.links[i];
            let rot = frames[i + 1].rotation.to_rotation_matrix();
            let inertia_world = rot.matrix() * link.inertia * rot.matrix().transpose();
            let p_prev = frames[i].translation.vector;
            let p_here = frames[i + 1].translation.vector;
            let inertial_force = link.mass * com_accel[i];

            moment = moment
                + (p_here - p_prev).cross(&force)
                + (coms[i] - p_prev).cross(&inertial_force)
                + inertia_world * omega_dots[i]
                + omegas[i].cross(&(inertia_world * omegas[i]));
            force += inertial_force;

            let z = frames[i].rotation * Vector3::z();
            tau[i] = match rows[i].joint_type {
                JointType::Revolute => z.dot(&moment),
                JointType::Prismatic => z.dot(&force),
            };
        }
        Ok(tau)
    }
}

/// Joint torques (N·m) or forces (N) producing `state` while the
/// end-effector exerts `ee_wrench` on its surroundings.
pub fn inverse_dynamics(model: &RobotModel, state: &JointState, ee_wrench: &Wrench) -> Result<DVector<f64>, DynamicsError> {
    model.rne(state.q.as_slice(), state.qd.as_slice(), state.qdd.as_slice(), ee_wrench)
}

/// Joint-space inertia matrix `M(q)`, one RNE pass per column.
pub fn mass_matrix(model: &RobotModel, q: &[f64]) -> Result<DMatrix<f64>, DynamicsError> {
    let n = model.dof();
    model.chain.check_dim(q.len())?;
    let no_gravity = model.without_gravity();
    let zeros = vec![0.0; n];
    let mut unit = vec![0.0; n];
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        unit[i] = 1.0;
        let col = no_gravity.rne(q, &zeros, &unit, &Wrench::zero())?;
        m.set_column(i, &col);
        unit[i] = 0.0;
    }
    Ok(m)
}

/// `V(q, qd) qd + G(q)`.
pub fn bias_forces(model: &RobotModel, q: &[f64], qd: &[f64]) -> Result<DVector<f64>, DynamicsError> {
    let zeros = vec![0.0; model.dof()];
    model.rne(q, qd, &zeros, &Wrench::zero())
}

/// `G(q)`.
pub fn gravity_vector(model: &RobotModel, q: &[f64]) -> Result<DVector<f64>, DynamicsError> {
    let zeros = vec![0.0; model.dof()];
    model.rne(q, &zeros, &zeros, &Wrench::zero())
}

/// Kinetic energy `1/2 qd^T M(q) qd`.
pub fn kinetic_energy(model: &RobotModel, q: &[f64], qd: &[f64]) -> Result<f64, DynamicsError> {
    let m = mass_matrix(model, q)?;
    model.chain.check_dim(qd.len())?;
    let v = DVector::from_column_slice(qd);
    Ok(0.5 * v.dot(&(m * &v)))
}
