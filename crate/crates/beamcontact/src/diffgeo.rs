//! Frenet-Serret frames and contact kinematics.
//!
//! These are the quantities entering the existence/uniqueness criteria:
//! curvatures, the contact angle between tangents, and the angles between
//! the contact normal and the Frenet normals of the two curves.

use serde::{Deserialize, Serialize};

use crate::curves::{Curve, Vec3};
use crate::{Error, Result};

/// Frenet-Serret data at a point of a curve.
///
/// The normal (and with it the binormal) is undefined below the curvature
/// tolerance: for a straight segment any choice would be arbitrary, and every
/// criteria term of the form `kappa * d * cos(beta)` vanishes in that limit
/// anyway.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrenetData {
    pub tangent: Vec3,
    pub curvature: f64,
    pub normal: Option<Vec3>,
    pub binormal: Option<Vec3>,
}

/// Kinematics of a converged bilateral closest-point pair.
///
/// The contact normal points from the master closest point to the slave
/// closest point: `normal = (x1 - x2) / d`. Under this convention the
/// straight-slave-on-circle-axis degeneracy lands on `beta2 = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactKinematics {
    /// Centerline distance `d = ||x1 - x2||`.
    pub distance: f64,
    /// Gap `g = d - R1 - R2` (radii zero when no section is attached).
    pub gap: f64,
    /// Unit contact normal, slave minus master.
    pub normal: Vec3,
    /// Contact angle between tangents, radians in [0, pi/2].
    pub alpha: f64,
    /// Angle between contact normal and slave Frenet normal, in [0, pi].
    pub beta1: Option<f64>,
    /// Angle between contact normal and master Frenet normal, in [0, pi].
    pub beta2: Option<f64>,
    pub kappa1: f64,
    pub kappa2: f64,
}

/// Curvature below which the Frenet normal is declared undefined,
/// scaled by the interval arc length.
pub fn kappa_tol(curve: &Curve) -> f64 {
    1e-10 / curve.total_arc_length()
}

/// Frenet frame of `curve` at parameter `t`.
///
/// `kappa = ||r' x r''|| / ||r'||^3`; the normal is the normalized component
/// of `r''` orthogonal to the tangent.
pub fn frenet_frame(curve: &Curve, t: f64) -> Result<FrenetData> {
    let p = curve.evaluate_with_derivatives(t)?;
    frenet_from_derivatives(&p.d1, &p.d2, kappa_tol(curve))
}

pub(crate) fn frenet_from_derivatives(d1: &Vec3, d2: &Vec3, kappa_tol: f64) -> Result<FrenetData> {
    let speed = d1.norm();
    if speed < 1e-14 {
        return Err(Error::DegenerateParametrization(
            "vanishing first derivative".into(),
        ));
    }
    let tangent = d1 / speed;
    let curvature = d1.cross(d2).norm() / (speed * speed * speed);
    if curvature < kappa_tol {
        return Ok(FrenetData {
            tangent,
            curvature,
            normal: None,
            binormal: None,
        });
    }
    let normal = (d2 - tangent * d2.dot(&tangent)).normalize();
    let binormal = tangent.cross(&normal);
    Ok(FrenetData {
        tangent,
        curvature,
        normal: Some(normal),
        binormal: Some(binormal),
    })
}

/// Contact angle between two tangent directions, radians in [0, pi/2].
///
/// Both inputs are normalized before the inner product is taken, so the
/// result is invariant under rescaling of either input (this matters for
/// parallel-offset curves, whose common parameter is an arc-length parameter
/// of only one of the two curves).
pub fn contact_angle(d1_slave: &Vec3, d1_master: &Vec3) -> Result<f64> {
    let n1 = d1_slave.norm();
    let n2 = d1_master.norm();
    if n1 < 1e-14 || n2 < 1e-14 {
        return Err(Error::DegenerateParametrization(
            "zero tangent vector in contact angle".into(),
        ));
    }
    let c = (d1_slave.dot(d1_master) / (n1 * n2)).abs().clamp(0.0, 1.0);
    Ok(c.acos())
}

/// Angle between a Frenet normal and the contact normal, in [0, pi].
/// `None` when the frame has no defined normal.
pub fn beta_angle(frenet: &FrenetData, contact_normal: &Vec3) -> Option<f64> {
    frenet
        .normal
        .map(|n| n.dot(contact_normal).clamp(-1.0, 1.0).acos())
}

/// Assemble the full contact kinematics for a closest-point pair
/// `(t1, t2)` on (slave, master), with cross-section radii `r1`, `r2`.
pub fn contact_kinematics(
    slave: &Curve,
    t1: f64,
    master: &Curve,
    t2: f64,
    r1: f64,
    r2: f64,
) -> Result<ContactKinematics> {
    let p1 = slave.evaluate_with_derivatives(t1)?;
    let p2 = master.evaluate_with_derivatives(t2)?;
    let diff = p1.position - p2.position;
    let d = diff.norm();
    if d < 1e-14 {
        return Err(Error::InvalidKinematics(
            "coincident closest points".into(),
        ));
    }
    let normal = diff / d;
    let f1 = frenet_from_derivatives(&p1.d1, &p1.d2, kappa_tol(slave))?;
    let f2 = frenet_from_derivatives(&p2.d1, &p2.d2, kappa_tol(master))?;
    Ok(ContactKinematics {
        distance: d,
        gap: d - r1 - r2,
        normal,
        alpha: contact_angle(&p1.d1, &p2.d1)?,
        beta1: beta_angle(&f1, &normal),
        beta2: beta_angle(&f2, &normal),
        kappa1: f1.curvature,
        kappa2: f2.curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, TAU};

    #[test]
    fn circle_curvature_and_normal() {
        let c = Curve::full_circle(Vec3::zeros(), 1.0, Vec3::z()).unwrap();
        for i in 0..8 {
            let t = TAU * i as f64 / 8.0;
            let f = frenet_frame(&c, t).unwrap();
            assert_relative_eq!(f.curvature, 1.0, epsilon = 1e-12);
            let to_center = -c.eval_raw(t).position.normalize();
            assert_relative_eq!(f.normal.unwrap(), to_center, epsilon = 1e-12);
        }
    }

    #[test]
    fn helix_curvature_closed_form() {
        // kappa = r / (r^2 + h^2) = 2 / 200 = 0.01
        let c = Curve::helix(Vec3::zeros(), Vec3::z(), 2.0, 14.0, 0.0, 0.0, TAU).unwrap();
        let f = frenet_frame(&c, 1.3).unwrap();
        assert_relative_eq!(f.curvature, 0.01, epsilon = 1e-14);
    }

    #[test]
    fn line_has_undefined_normal() {
        let c = Curve::line(Vec3::zeros(), Vec3::x(), 0.0, 1.0).unwrap();
        let f = frenet_frame(&c, 0.5).unwrap();
        assert_eq!(f.curvature, 0.0);
        assert!(f.normal.is_none());
        assert!(f.binormal.is_none());
    }

    #[test]
    fn contact_angle_orthogonal_and_parallel() {
        let a = contact_angle(&Vec3::x(), &Vec3::y()).unwrap();
        assert_relative_eq!(a, FRAC_PI_2, epsilon = 1e-15);
        let a = contact_angle(&Vec3::x(), &(Vec3::x() * 2.0)).unwrap();
        assert_relative_eq!(a, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn contact_angle_helix_vs_axis() {
        // cos(alpha) = h / sqrt(r^2 + h^2) = 14 / sqrt(200)
        let a = contact_angle(&Vec3::new(0.0, 2.0, 14.0), &Vec3::z()).unwrap();
        let expected = (14.0f64 / 200.0f64.sqrt()).acos();
        assert_relative_eq!(a, expected, epsilon = 1e-15);
        assert_relative_eq!(a.to_degrees(), 8.1301, epsilon = 1e-3);
    }

    #[test]
    fn contact_angle_rejects_zero_vector() {
        assert!(contact_angle(&Vec3::zeros(), &Vec3::x()).is_err());
    }

    #[test]
    fn beta_angle_cases() {
        let c = Curve::full_circle(Vec3::zeros(), 1.0, Vec3::z()).unwrap();
        let f = frenet_frame(&c, 0.0).unwrap();
        // closest point seen from the circle center: contact normal equals
        // the Frenet normal, beta = 0
        let nc = -Vec3::x();
        assert_relative_eq!(beta_angle(&f, &nc).unwrap(), 0.0, epsilon = 1e-12);
        // orthogonal
        assert_relative_eq!(beta_angle(&f, &Vec3::z()).unwrap(), FRAC_PI_2, epsilon = 1e-12);
        // straight master: undefined
        let line = Curve::line(Vec3::zeros(), Vec3::x(), 0.0, 1.0).unwrap();
        let fl = frenet_frame(&line, 0.5).unwrap();
        assert!(beta_angle(&fl, &nc).is_none());
    }

    #[test]
    fn figure_1b_identity() {
        // straight slave on the axis of a circular master, d = rbar:
        // kappa2 * d * cos(beta2) = 1 exactly
        let rbar = 1.7;
        let master = Curve::full_circle(Vec3::zeros(), rbar, Vec3::z()).unwrap();
        let slave = Curve::line(Vec3::zeros(), Vec3::z(), -1.0, 1.0).unwrap();
        let kin = contact_kinematics(&slave, 0.0, &master, 0.8, 0.0, 0.0).unwrap();
        assert_relative_eq!(kin.distance, rbar, epsilon = 1e-12);
        let term = kin.kappa2 * kin.distance * kin.beta2.unwrap().cos();
        assert_relative_eq!(term, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn alpha_invariant_under_rescaling() {
        let a = Vec3::new(0.3, -1.2, 0.4);
        let b = Vec3::new(1.0, 0.2, -0.7);
        let base = contact_angle(&a, &b).unwrap();
        for s in [1e-6, 0.5, 3.0, 1e6] {
            assert_relative_eq!(contact_angle(&(a * s), &b).unwrap(), base, epsilon = 1e-12);
            assert_relative_eq!(contact_angle(&a, &(b * s)).unwrap(), base, epsilon = 1e-12);
        }
    }
}
