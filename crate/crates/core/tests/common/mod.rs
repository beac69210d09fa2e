//! Independent oracles shared by the integration tests.
//!
//! Nothing here calls the crate's kinematics or dynamics routines; only
//! model data (DH rows, link inertias, gravity) is read from the crate.

#![allow(dead_code)]

use hobm_lwr::kinematics::{DhRow, JointType};
use hobm_lwr::RobotModel;
use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut StdRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Joint values drawn per joint type: angles in `[-pi, pi]`, prismatic
/// offsets in `[-0.5, 0.5]` m.
pub fn random_q(rng: &mut StdRng, model: &RobotModel) -> Vec<f64> {
    model
        .chain()
        .rows()
        .iter()
        .map(|r| match r.joint_type {
            JointType::Revolute => rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
            JointType::Prismatic => rng.random_range(-0.5..0.5),
        })
        .collect()
}

fn rot_z(t: f64) -> Matrix4<f64> {
    let (s, c) = t.sin_cos();
    Matrix4::new(c, -s, 0.0, 0.0, s, c, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0)
}

fn rot_x(t: f64) -> Matrix4<f64> {
    let (s, c) = t.sin_cos();
    Matrix4::new(1.0, 0.0, 0.0, 0.0, 0.0, c, -s, 0.0, 0.0, s, c, 0.0, 0.0, 0.0, 0.0, 1.0)
}

fn trans(x: f64, y: f64, z: f64) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m[(0, 3)] = x;
    m[(1, 3)] = y;
    m[(2, 3)] = z;
    m
}

/// `Rz(theta) Tz(d) Tx(a) Rx(alpha)` as a product of elementary matrices.
pub fn dh_matrix(row: &DhRow, q: f64) -> Matrix4<f64> {
    let (theta, d) = match row.joint_type {
        JointType::Revolute => (row.theta_offset + q, row.d),
        JointType::Prismatic => (row.theta_offset, row.d + q),
    };
    rot_z(theta) * trans(0.0, 0.0, d) * trans(row.a, 0.0, 0.0) * rot_x(row.alpha)
}

/// World frames after each joint, by matrix product.
pub fn fk_frames(model: &RobotModel, q: &[f64]) -> Vec<Matrix4<f64>> {
    let mut t = model.chain().base_pose().to_homogeneous();
    model
        .chain()
        .rows()
        .iter()
        .zip(q)
        .map(|(row, &qi)| {
            t *= dh_matrix(row, qi);
            t
        })
        .collect()
}

pub fn translation(m: &Matrix4<f64>) -> Vector3<f64> {
    Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)])
}

pub fn rotation(m: &Matrix4<f64>) -> Matrix3<f64> {
    m.fixed_view::<3, 3>(0, 0).into_owned()
}

pub const FD_STEP: f64 = 1e-3;

/// Five-point central difference of a vector-valued function along one
/// coordinate.
pub fn fd5<F>(f: F, x: &[f64], k: usize, h: f64) -> DVector<f64>
where
    F: Fn(&[f64]) -> DVector<f64>,
{
    let at = |s: f64| {
        let mut y = x.to_vec();
        y[k] += s * h;
        f(&y)
    };
    (at(-2.0) - at(-1.0) * 8.0 + at(1.0) * 8.0 - at(2.0)) / (12.0 * h)
}

fn vee(s: &Matrix3<f64>) -> Vector3<f64> {
    0.5 * Vector3::new(s[(2, 1)] - s[(1, 2)], s[(0, 2)] - s[(2, 0)], s[(1, 0)] - s[(0, 1)])
}

fn flat(m: &Matrix3<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn unflat(v: &DVector<f64>) -> Matrix3<f64> {
    Matrix3::from_column_slice(v.as_slice())
}

/// Jacobian of a point fixed in the frame of joint `link` (expressed in
/// that frame), by finite differences.
pub fn point_jacobian(model: &RobotModel, q: &[f64], link: usize, local: &Vector3<f64>) -> DMatrix<f64> {
    let p = |x: &[f64]| {
        let m = fk_frames(model, x)[link];
        DVector::from_column_slice((rotation(&m) * local + translation(&m)).as_slice())
    };
    let mut j = DMatrix::zeros(3, q.len());
    for k in 0..q.len() {
        j.set_column(k, &fd5(p, q, k, FD_STEP));
    }
    j
}

/// Angular-velocity Jacobian of frame `link`: column k is
/// `vee(dR/dq_k R^T)`.
pub fn rotation_jacobian(model: &RobotModel, q: &[f64], link: usize) -> DMatrix<f64> {
    let r = rotation(&fk_frames(model, q)[link]);
    let f = |x: &[f64]| flat(&rotation(&fk_frames(model, x)[link]));
    let mut j = DMatrix::zeros(3, q.len());
    for k in 0..q.len() {
        let dr = unflat(&fd5(f, q, k, FD_STEP));
        j.set_column(k, &vee(&(dr * r.transpose())));
    }
    j
}

/// Geometric Jacobian of the last frame's origin, by finite differences.
pub fn fd_geometric_jacobian(model: &RobotModel, q: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    let jv = point_jacobian(model, q, n - 1, &Vector3::zeros());
    let jw = rotation_jacobian(model, q, n - 1);
    let mut j = DMatrix::zeros(6, n);
    j.view_mut((0, 0), (3, n)).copy_from(&jv);
    j.view_mut((3, 0), (3, n)).copy_from(&jw);
    j
}

/// Mass matrix from link energies:
/// `sum m J_c^T J_c + J_w^T (R I R^T) J_w`.
pub fn energy_mass_matrix(model: &RobotModel, q: &[f64]) -> DMatrix<f64> {
    let n = q.len();
    let frames = fk_frames(model, q);
    let mut m = DMatrix::zeros(n, n);
    for (i, link) in model.links().iter().enumerate() {
        let jc = point_jacobian(model, q, i, &link.com);
        let jw = rotation_jacobian(model, q, i);
        let r = rotation(&frames[i]);
        let inertia = r * link.inertia * r.transpose();
        let iw = DMatrix::from_column_slice(3, 3, inertia.as_slice());
        m += jc.transpose() * &jc * link.mass + jw.transpose() * iw * &jw;
    }
    m
}

/// Potential energy `-sum m_i g . p_ci`.
pub fn potential_energy(model: &RobotModel, q: &[f64]) -> f64 {
    let frames = fk_frames(model, q);
    let g = model.gravity();
    model
        .links()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let p = rotation(&frames[i]) * l.com + translation(&frames[i]);
            -l.mass * g.dot(&p)
        })
        .sum()
}

/// Euler-Lagrange torques
/// `M qdd + (sum_k dM/dq_k qd_k) qd - 1/2 d/dq (qd^T M qd) + dV/dq`,
/// with every derivative taken by finite differences of the energies.
pub fn lagrangian_torques(model: &RobotModel, q: &[f64], qd: &[f64], qdd: &[f64]) -> DVector<f64> {
    let n = q.len();
    let qd_v = DVector::from_column_slice(qd);
    let qdd_v = DVector::from_column_slice(qdd);
    let m_flat = |x: &[f64]| {
        let m = energy_mass_matrix(model, x);
        DVector::from_column_slice(m.as_slice())
    };
    let dm: Vec<DMatrix<f64>> = (0..n)
        .map(|k| DMatrix::from_column_slice(n, n, fd5(m_flat, q, k, FD_STEP).as_slice()))
        .collect();
    let v = |x: &[f64]| DVector::from_element(1, potential_energy(model, x));

    let m = energy_mass_matrix(model, q);
    let mut tau = &m * &qdd_v;
    for k in 0..n {
        tau += &dm[k] * &qd_v * qd[k];
        tau[k] -= 0.5 * qd_v.dot(&(&dm[k] * &qd_v));
        tau[k] += fd5(v, q, k, FD_STEP)[0];
    }
    tau
}

/// Time at which the payload's planar distance from `hobm_base` reaches the
/// radius where a 2R arm with links `l1`, `l2` has `l1 l2 |sin(phi2)|`
/// equal to `tol`. Bisection on matrix-product forward kinematics of the
/// sweep `q(t) = [theta1(t), fixed..]`; the radius must cross once.
pub fn extension_crossing<F>(
    lwr: &RobotModel,
    hobm_base: Vector3<f64>,
    (l1, l2): (f64, f64),
    tol: f64,
    theta1: F,
    fixed: &[f64],
    total_time: f64,
) -> f64
where
    F: Fn(f64) -> f64,
{
    let cos_crit = (1.0 - (tol / (l1 * l2)).powi(2)).sqrt();
    let r_crit = (l1 * l1 + l2 * l2 + 2.0 * l1 * l2 * cos_crit).sqrt();
    let excess = |t: f64| {
        let mut q = vec![theta1(t)];
        q.extend_from_slice(fixed);
        let p = translation(fk_frames(lwr, &q).last().unwrap());
        (p - hobm_base).xy().norm() - r_crit
    };
    let (mut lo, mut hi) = (0.0, total_time);
    assert!(excess(lo) < 0.0 && excess(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}
