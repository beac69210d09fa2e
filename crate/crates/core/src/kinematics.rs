//! Serial-chain geometry: Denavit-Hartenberg transforms, forward kinematics,
//! geometric Jacobians and singularity measures.
//!
//! All chains use the classic (proximal-joint) DH convention
//!
//! ```text
//! T(i-1 -> i) = Rot_z(theta) * Trans_z(d) * Trans_x(a) * Rot_x(alpha)
//! ```
//!
//! where the joint variable replaces `theta` for a revolute joint and `d`
//! for a prismatic one. Joint `i` moves about (or along) the z axis of frame
//! `i - 1`; the first joint therefore acts along the z axis of the chain's
//! base pose.

use nalgebra::{DMatrix, DVector, Isometry3, Matrix3, Translation3, UnitQuaternion, Vector3};
use thiserror::Error;

/// A proper rigid transform (rotation + translation).
pub type RigidTransform = Isometry3<f64>;

/// Configurations with a task-block determinant below this value are
/// treated as singular.
pub const DEFAULT_SINGULARITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("kinematic chain must have at least one joint")]
    EmptyChain,
    #[error("expected {expected} joint values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("task block must be square, got {rows}x{cols}")]
    NonSquareTaskBlock { rows: usize, cols: usize },
    #[error("non-finite joint value")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Revolute,
    Prismatic,
}

/// One row of a DH table. `theta_offset` and `d` hold constant offsets; the
/// joint variable is added to the one selected by `joint_type`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhRow {
    pub theta_offset: f64,
    pub a: f64,
    pub d: f64,
    pub alpha: f64,
    pub joint_type: JointType,
}

impl DhRow {
    pub fn revolute(theta_offset: f64, a: f64, d: f64, alpha: f64) -> Self {
        Self {
            theta_offset,
            a,
            d,
            alpha,
            joint_type: JointType::Revolute,
        }
    }

    pub fn prismatic(theta_offset: f64, a: f64, d: f64, alpha: f64) -> Self {
        Self {
            theta_offset,
            a,
            d,
            alpha,
            joint_type: JointType::Prismatic,
        }
    }

    /// Transform from frame `i - 1` to frame `i` with joint value `q`.
    pub fn link_transform(&self, q: f64) -> RigidTransform {
        let (theta, d) = match self.joint_type {
            JointType::Revolute => (self.theta_offset + q, self.d),
            JointType::Prismatic => (self.theta_offset, self.d + q),
        };
        let rot_z = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), theta);
        let rot_x = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), self.alpha);
        // Rz(theta) Tz(d) Tx(a) Rx(alpha): the translation is Rz * (a, 0, d).
        let translation = rot_z * Vector3::new(self.a, 0.0, d);
        Isometry3::from_parts(Translation3::from(translation), rot_z * rot_x)
    }
}

/// Free-function form of [`DhRow::link_transform`].
pub fn link_transform(row: &DhRow, q: f64) -> RigidTransform {
    row.link_transform(q)
}

/// Selects which rows of a 6xN geometric Jacobian form the square block used
/// for singularity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskSpace {
    /// All six rows (linear then angular).
    Full,
    /// Linear velocity rows x, y, z.
    Positional,
    /// Linear velocity rows x, y only.
    Planar,
}

impl TaskSpace {
    fn rows(self) -> std::ops::Range<usize> {
        match self {
            TaskSpace::Full => 0..6,
            TaskSpace::Positional => 0..3,
            TaskSpace::Planar => 0..2,
        }
    }

    /// The positional task space whose size matches `dof` (2 → planar,
    /// otherwise xyz).
    pub fn positional_for(dof: usize) -> Self {
        if dof == 2 {
            TaskSpace::Planar
        } else {
            TaskSpace::Positional
        }
    }
}

/// Extracts the task rows of a geometric Jacobian.
pub fn task_block(jacobian: &DMatrix<f64>, space: TaskSpace) -> DMatrix<f64> {
    let rows = space.rows();
    jacobian.rows(rows.start, rows.len()).into_owned()
}

/// `|det|` of a square task block; zero at a singular configuration.
pub fn singularity_measure(task: &DMatrix<f64>) -> Result<f64, KinematicsError> {
    if !task.is_square() {
        return Err(KinematicsError::NonSquareTaskBlock {
            rows: task.nrows(),
            cols: task.ncols(),
        });
    }
    Ok(task.clone().lu().determinant().abs())
}

/// Joint positions, rates and accelerations of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

impl JointState {
    pub fn new(q: DVector<f64>, qd: DVector<f64>, qdd: DVector<f64>) -> Result<Self, KinematicsError> {
        if qd.len() != q.len() {
            return Err(KinematicsError::DimensionMismatch {
                expected: q.len(),
                actual: qd.len(),
            });
        }
        if qdd.len() != q.len() {
            return Err(KinematicsError::DimensionMismatch {
                expected: q.len(),
                actual: qdd.len(),
            });
        }
        Ok(Self { q, qd, qdd })
    }

    /// A state at rest at `q`.
    pub fn at_rest(q: DVector<f64>) -> Self {
        let n = q.len();
        Self {
            q,
            qd: DVector::zeros(n),
            qdd: DVector::zeros(n),
        }
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    rows: Vec<DhRow>,
    base_pose: RigidTransform,
}

impl KinematicChain {
    pub fn new(rows: Vec<DhRow>) -> Result<Self, KinematicsError> {
        Self::with_base(rows, RigidTransform::identity())
    }

    pub fn with_base(rows: Vec<DhRow>, base_pose: RigidTransform) -> Result<Self, KinematicsError> {
        if rows.is_empty() {
            return Err(KinematicsError::EmptyChain);
        }
        Ok(Self { rows, base_pose })
    }

    pub fn rows(&self) -> &[DhRow] {
        &self.rows
    }

    pub fn dof(&self) -> usize {
        self.rows.len()
    }

    pub fn base_pose(&self) -> &RigidTransform {
        &self.base_pose
    }

    pub fn set_base_pose(&mut self, base_pose: RigidTransform) {
        self.base_pose = base_pose;
    }

    /// Appends `other`'s rows; `other`'s base pose is ignored since its first
    /// joint now hangs off this chain's tip.
    pub fn concat(&self, other: &KinematicChain) -> KinematicChain {
        let mut rows = self.rows.clone();
        rows.extend_from_slice(&other.rows);
        KinematicChain {
            rows,
            base_pose: self.base_pose,
        }
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<(), KinematicsError> {
        if len != self.dof() {
            return Err(KinematicsError::DimensionMismatch {
                expected: self.dof(),
                actual: len,
            });
        }
        Ok(())
    }

    /// World pose of every link frame `1..=dof`; the last entry is the
    /// end-effector frame.
    pub fn forward_kinematics(&self, q: &[f64]) -> Result<Vec<RigidTransform>, KinematicsError> {
        self.check_dim(q.len())?;
        if q.iter().any(|v| !v.is_finite()) {
            return Err(KinematicsError::NonFinite);
        }
        let mut pose = self.base_pose;
        Ok(self
            .rows
            .iter()
            .zip(q)
            .map(|(row, &qi)| {
                pose *= row.link_transform(qi);
                pose
            })
            .collect())
    }

    /// World pose of frames `0..=dof` (base included).
    pub(crate) fn frames_with_base(&self, q: &[f64]) -> Result<Vec<RigidTransform>, KinematicsError> {
        let mut frames = Vec::with_capacity(self.dof() + 1);
        frames.push(self.base_pose);
        frames.extend(self.forward_kinematics(q)?);
        Ok(frames)
    }

    pub fn end_effector(&self, q: &[f64]) -> Result<RigidTransform, KinematicsError> {
        Ok(*self.forward_kinematics(q)?.last().expect("chain is non-empty"))
    }

    /// 6xN geometric Jacobian in the world frame: rows 0..3 are the linear
    /// velocity of the end-effector origin, rows 3..6 the angular velocity.
    pub fn geometric_jacobian(&self, q: &[f64]) -> Result<DMatrix<f64>, KinematicsError> {
        let frames = self.frames_with_base(q)?;
        let p_ee = frames[self.dof()].translation.vector;
        let mut jac = DMatrix::zeros(6, self.dof());
        for (i, row) in self.rows.iter().enumerate() {
            let z = frames[i].rotation * Vector3::z();
            let p = frames[i].translation.vector;
            let (lin, ang) = match row.joint_type {
                JointType::Revolute => (z.cross(&(p_ee - p)), z),
                JointType::Prismatic => (z, Vector3::zeros()),
            };
            jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, i).copy_from(&ang);
        }
        Ok(jac)
    }

    /// Time derivative of the linear (positional) rows of the geometric
    /// Jacobian along the motion `(q, qd)`, computed analytically.
    pub fn positional_jacobian_derivative(
        &self,
        q: &[f64],
        qd: &[f64],
    ) -> Result<DMatrix<f64>, KinematicsError> {
        self.check_dim(qd.len())?;
        let frames = self.frames_with_base(q)?;
        let n = self.dof();

        // Angular velocity of each frame and linear velocity of each origin.
        let mut omega = vec![Vector3::zeros(); n + 1];
        let mut vel = vec![Vector3::zeros(); n + 1];
        for i in 0..n {
            let z = frames[i].rotation * Vector3::z();
            let r = frames[i + 1].translation.vector - frames[i].translation.vector;
            match self.rows[i].joint_type {
                JointType::Revolute => {
                    omega[i + 1] = omega[i] + z * qd[i];
                    vel[i + 1] = vel[i] + omega[i + 1].cross(&r);
                }
                JointType::Prismatic => {
                    omega[i + 1] = omega[i];
                    vel[i + 1] = vel[i] + omega[i].cross(&r) + z * qd[i];
                }
            }
        }

        let p_ee = frames[n].translation.vector;
        let v_ee = vel[n];
        let mut jdot = DMatrix::zeros(3, n);
        for i in 0..n {
            let z = frames[i].rotation * Vector3::z();
            let zdot = omega[i].cross(&z);
            let col = match self.rows[i].joint_type {
                JointType::Revolute => {
                    let r = p_ee - frames[i].translation.vector;
                    zdot.cross(&r) + z.cross(&(v_ee - vel[i]))
                }
                JointType::Prismatic => zdot,
            };
            jdot.fixed_view_mut::<3, 1>(0, i).copy_from(&col);
        }
        Ok(jdot)
    }

    /// Singularity measure of the chain's task block at `q`.
    pub fn singularity_measure(&self, q: &[f64], space: TaskSpace) -> Result<f64, KinematicsError> {
        let jac = self.geometric_jacobian(q)?;
        singularity_measure(&task_block(&jac, space))
    }
}

/// Builds a rigid transform from a translation and a rotation about world z.
pub fn planar_pose(translation: Vector3<f64>, yaw: f64) -> RigidTransform {
    Isometry3::from_parts(
        Translation3::from(translation),
        UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw),
    )
}

/// Largest deviation of `R^T R` from identity; used to track orthonormality
/// drift of composed rotations.
pub fn orthonormality_error(rotation: &Matrix3<f64>) -> f64 {
    (rotation.transpose() * rotation - Matrix3::identity()).abs().max()
}
