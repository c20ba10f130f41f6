//! Property-based invariants of the geometry kernel and criteria layer.

use nalgebra::Vector3;
use proptest::prelude::*;

use beamcontact::criteria::{alpha_min, helix_contact_angle};
use beamcontact::curves::{make_parallel_curve, Curve, NormalField, Vec3};
use beamcontact::diffgeo::contact_angle;
use beamcontact::projection::{unilateral_cpp, MultiplicityClass, SolverSettings};

/// Central-difference check of the stored first derivative, relative to the
/// tangent scale.
fn d1_matches_fd(curve: &Curve, t: f64) {
    let (lo, hi) = curve.interval();
    let h = 1e-6 * curve.span();
    if t - h < lo || t + h > hi {
        return;
    }
    let p = curve.evaluate_with_derivatives(t).unwrap();
    let plus = curve.evaluate_with_derivatives(t + h).unwrap().position;
    let minus = curve.evaluate_with_derivatives(t - h).unwrap().position;
    let fd = (plus - minus) / (2.0 * h);
    let scale = p.d1.norm().max(1.0);
    assert!(
        (p.d1 - fd).norm() <= 1e-5 * scale,
        "d1 mismatch at t = {t}: analytic {:?}, fd {:?}",
        p.d1,
        fd
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn helix_derivatives_match_finite_differences(
        r in 0.3f64..3.0,
        h in 0.05f64..2.0,
        phase in 0.0f64..6.0,
        t in 0.1f64..5.9,
    ) {
        let curve = Curve::helix(
            Vec3::new(0.3, -0.2, 0.1), Vector3::z(), r, h, phase, 0.0, 6.0,
        ).unwrap();
        d1_matches_fd(&curve, t);
    }

    #[test]
    fn hermite_derivatives_match_finite_differences(t in 0.05f64..1.95) {
        let curve = Curve::hermite(vec![
            (Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.5, 0.0)),
            (Vec3::new(1.0, 1.0, 0.3), Vec3::new(1.0, -0.5, 0.2)),
            (Vec3::new(2.0, 0.5, 0.1), Vec3::new(0.5, 1.0, 0.0)),
        ]).unwrap();
        d1_matches_fd(&curve, t);
    }

    #[test]
    fn offset_curve_keeps_distance(
        d0 in 0.05f64..0.7,
        t in 0.0f64..std::f64::consts::TAU,
    ) {
        let base = Curve::full_circle(Vec3::zeros(), 1.0, Vector3::z()).unwrap();
        let offset = make_parallel_curve(&base, d0, NormalField::Frenet).unwrap();
        d1_matches_fd(&offset, t);
        let pa = base.evaluate_with_derivatives(t).unwrap().position;
        let pb = offset.evaluate_with_derivatives(t).unwrap().position;
        prop_assert!(((pb - pa).norm() - d0).abs() < 1e-10);
    }

    #[test]
    fn contact_angle_is_scale_invariant(
        ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in -1.0f64..1.0,
        bx in -1.0f64..1.0, by in -1.0f64..1.0, bz in -1.0f64..1.0,
        s in 0.01f64..100.0,
    ) {
        let a = Vec3::new(ax, ay, az);
        let b = Vec3::new(bx, by, bz);
        prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
        let alpha = contact_angle(&a, &b).unwrap();
        let scaled = contact_angle(&(s * a), &(b / s)).unwrap();
        prop_assert!((alpha - scaled).abs() < 1e-9);
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2 + 1e-15).contains(&alpha));
    }

    #[test]
    fn alpha_min_is_monotone(mu1 in 0.0f64..0.499, mu2 in 0.0f64..0.499) {
        let (lo, hi) = if mu1 <= mu2 { (mu1, mu2) } else { (mu2, mu1) };
        prop_assert!(alpha_min(lo).unwrap() <= alpha_min(hi).unwrap());
        prop_assert!(helix_contact_angle(lo).unwrap() <= helix_contact_angle(hi).unwrap());
    }

    #[test]
    fn unilateral_foot_is_orthogonal(
        px in -3.0f64..3.0, py in -3.0f64..3.0, pz in -3.0f64..3.0,
        r in 0.5f64..2.0,
    ) {
        let master = Curve::helix(
            Vec3::zeros(), Vector3::z(), r, 0.4, 0.0, 0.0, 5.5,
        ).unwrap();
        let x = Vec3::new(px, py, pz);
        let report = unilateral_cpp(&x, &master, &SolverSettings::default()).unwrap();
        for s in &report.solutions {
            if s.boundary || report.class == MultiplicityClass::Continuum {
                continue;
            }
            let p = master.evaluate_with_derivatives(s.t2).unwrap();
            let q = x - p.position;
            if q.norm() < 1e-8 {
                continue;
            }
            let cos = q.dot(&p.d1) / (q.norm() * p.d1.norm());
            prop_assert!(cos.abs() < 1e-8, "non-orthogonal foot at t2 = {}", s.t2);
        }
    }
}
