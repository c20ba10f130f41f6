//! End-to-end acceptance checks. Each test prints one `criterion N ...: PASS`
//! or `... FAIL` line (visible with `--nocapture` or on failure) and pins its
//! tolerances in code.

use std::panic::{catch_unwind, resume_unwind, UnwindSafe};
use std::process::Command;
use std::time::Instant;

use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use beamcontact::criteria::{
    self, parallel_curve_orthogonality_residual, sufficiency_sample_check, BeamSection,
};
use beamcontact::curves::{make_parallel_curve, Curve, NormalField, Vec3};
use beamcontact::diffgeo;
use beamcontact::projection::{
    bilateral_cpp, brute_force_oracle, tube_surface_cpp, unilateral_cpp, MultiplicityClass,
    SolverSettings,
};
use beamcontact::scenarios::{run_scenario, ScenarioConfig, ScenarioName, ScenarioReport};

fn criterion<F: FnOnce() + UnwindSafe>(n: u32, name: &str, f: F) {
    let result = catch_unwind(f);
    match &result {
        Ok(()) => println!("criterion {n} ({name}): PASS"),
        Err(_) => println!("criterion {n} ({name}): FAIL"),
    }
    if let Err(e) = result {
        resume_unwind(e);
    }
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_beamcontact")
}

fn section_unit() -> BeamSection {
    BeamSection::new(1.0, 1.0, 1.0).unwrap()
}

fn helix_report(mu: f64) -> ScenarioReport {
    let mut config = ScenarioConfig::new(ScenarioName::Helix, section_unit());
    config.mu = Some(mu);
    run_scenario(&config).unwrap()
}

#[test]
fn criterion_1_helix_worked_example() {
    criterion(1, "helix worked example", || {
        let start = Instant::now();
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("helix.json");
        let status = Command::new(bin())
            .args(["scenario", "helix", "--mu", "0.01", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        let report: ScenarioReport =
            serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
        let elapsed = start.elapsed();

        let alpha = report.alpha_deg.unwrap();
        let alpha_min = report.alpha_min_deg.unwrap();
        assert!((alpha - 8.13).abs() < 0.05, "alpha = {alpha}");
        assert!((alpha_min - 11.48).abs() < 0.05, "alpha_min = {alpha_min}");
        assert!(alpha < alpha_min);
        assert!(
            elapsed.as_secs_f64() < 1.0,
            "helix scenario took {elapsed:?}"
        );
    });
}

#[test]
fn criterion_2_conservatism_over_helix_family() {
    criterion(2, "helix-family conservatism", || {
        for i in 0..100 {
            let mu = 0.001 + (0.499 - 0.001) * i as f64 / 99.0;
            let alpha = criteria::helix_contact_angle(mu).unwrap();
            // Closed-form identity the bound comparison relies on.
            assert!(
                (alpha.cos() - (1.0 - 2.0 * mu).sqrt()).abs() < 1e-12,
                "identity violated at mu = {mu}"
            );
            let alpha_min = criteria::alpha_min(mu).unwrap();
            assert!(alpha < alpha_min, "not conservative at mu = {mu}");
        }
    });
}

#[test]
fn criterion_3_sufficiency_sampling() {
    criterion(3, "simplified criteria sufficiency", || {
        let start = Instant::now();
        let violations = sufficiency_sample_check(&section_unit(), 10_000, 42);
        assert_eq!(violations, 0);
        assert!(start.elapsed().as_secs_f64() < 5.0);
    });
}

#[test]
fn criterion_4_degenerate_figures() {
    criterion(4, "constant-distance geometries", || {
        let section = section_unit();
        let mut configs = vec![
            ScenarioConfig::new(ScenarioName::Parallel, section.clone()),
            ScenarioConfig::new(ScenarioName::Circle, section.clone()),
        ];
        let mut helix = ScenarioConfig::new(ScenarioName::Helix, section);
        helix.mu = Some(0.01);
        configs.push(helix);

        for config in &configs {
            let report = run_scenario(config).unwrap();
            let p = &report.pipeline;
            assert_eq!(
                p.solver.class,
                MultiplicityClass::Continuum,
                "{:?}: solver class {:?}",
                config.name,
                p.solver.class
            );
            assert_eq!(
                p.oracle_class,
                MultiplicityClass::Continuum,
                "{:?}: oracle class {:?}",
                config.name,
                p.oracle_class
            );
            let d = p.kinematics.as_ref().unwrap().distance;
            assert!(p.solver.spread < 1e-9 * d, "{:?}", config.name);
            assert!(p.oracle_spread < 1e-9 * d, "{:?}", config.name);
            let c = p.criteria.as_ref().unwrap();
            assert!(!c.general.guaranteed(), "{:?}", config.name);
            assert!(!c.simplified_guaranteed, "{:?}", config.name);

            if config.name == ScenarioName::Circle {
                let kin = p.kinematics.as_ref().unwrap();
                let term = kin.kappa2 * kin.distance * kin.beta2.unwrap().cos();
                assert!((term - 1.0).abs() < 1e-10, "term = {term}");
            }
        }
    });
}

#[test]
fn criterion_5_tube_surface_equivalence() {
    criterion(5, "tube-surface vs centerline projection", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let settings = SolverSettings::default();
        let mut accepted = 0usize;
        let mut attempts = 0usize;
        while accepted < 200 {
            attempts += 1;
            assert!(attempts < 5000, "too many rejected configurations");
            let master = random_curve(&mut rng);
            let x = Vec3::new(
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            );
            let centerline = match unilateral_cpp(&x, &master, &settings) {
                Ok(r) => r,
                Err(_) => continue,
            };
            if centerline.class != MultiplicityClass::Unique {
                continue;
            }
            let foot = centerline.best_interior().unwrap().clone();
            let d = foot.distance;
            if d < 0.2 {
                continue;
            }
            let r2 = 0.25 * d;
            let tube = match tube_surface_cpp(&x, &master, r2, &settings) {
                Ok(t) => t,
                Err(_) => continue,
            };
            let radial = (x - foot.x2) / d;
            let expected = foot.x2 + r2 * radial;
            let scale = expected.norm().max(1.0);
            assert!(
                (tube.x2 - expected).norm() < 1e-9 * scale,
                "foot mismatch: {:?} vs {:?}",
                tube.x2,
                expected
            );
            let gap = tube.surface_gap.unwrap();
            assert!((gap - (d - r2)).abs() < 1e-10, "gap = {gap}, d = {d}");
            accepted += 1;
        }
    });
}

#[test]
fn criterion_6_parallel_curve_checks() {
    criterion(6, "parallel-curve properties", || {
        // Inward Frenet offset of the unit circle: radius shrinks to 0.5, so
        // the offset tangent norm is 0.5 while directions stay parallel.
        let base = Curve::full_circle(Vec3::zeros(), 1.0, Vector3::z()).unwrap();
        let d0 = 0.5;
        let offset = make_parallel_curve(&base, d0, NormalField::Frenet).unwrap();
        for i in 0..100 {
            let t = std::f64::consts::TAU * i as f64 / 100.0;
            let pa = base.evaluate_with_derivatives(t).unwrap();
            let pb = offset.evaluate_with_derivatives(t).unwrap();
            let dist = (pb.position - pa.position).norm();
            assert!((dist - d0).abs() < 1e-10, "distance drift at t = {t}");

            // Angle from normalized tangents matches the direct computation.
            // Compared as cosines: acos amplifies last-ULP noise near 0.
            let alpha = diffgeo::contact_angle(&pb.d1, &pa.d1).unwrap();
            let direct_cos = pb.d1.normalize().dot(&pa.d1.normalize()).abs();
            assert!((alpha.cos() - direct_cos).abs() < 1e-12);

            // The unnormalized inner product is a wrong angle whenever the
            // offset tangent norm strays from 1.
            let tb_norm = pb.d1.norm();
            assert!((tb_norm - 1.0).abs() > 0.01);
            let naive = pb.d1.dot(&pa.d1).abs().clamp(0.0, 1.0).acos();
            assert!((naive - alpha).abs() > 1e-3);
        }

        // Orthogonality residual 1 + kappa*d0*cos(beta): bounded away from
        // zero below the curvature bound, exactly zero at the bound.
        let kappa_sub = 0.8 / d0;
        for i in 0..=200 {
            let beta = std::f64::consts::PI * i as f64 / 200.0;
            let res = parallel_curve_orthogonality_residual(kappa_sub, d0, beta);
            assert!(res.abs() >= 1.0 - kappa_sub * d0 - 1e-12);
        }
        let at_bound =
            parallel_curve_orthogonality_residual(1.0 / d0, d0, std::f64::consts::PI);
        assert_eq!(at_bound, 0.0);
    });
}

#[test]
fn criterion_7_oracle_equivalence() {
    criterion(7, "solver vs oracle agreement", || {
        let start = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let settings = SolverSettings::default();
        let mut accepted = 0usize;
        let mut attempts = 0usize;
        while accepted < 200 {
            attempts += 1;
            assert!(attempts < 8000, "too many rejected pairs");
            let slave = random_curve(&mut rng);
            let master = random_curve(&mut rng);
            let oracle = match brute_force_oracle(&slave, &master, 140, &settings) {
                Ok(r) => r,
                Err(_) => continue,
            };
            if !clear_cut(&oracle, &slave, &master) {
                continue;
            }
            let solver = match bilateral_cpp(&slave, &master, &settings) {
                Ok(r) => r,
                Err(_) => continue,
            };
            assert_eq!(
                solver.class, oracle.class,
                "class mismatch on pair {attempts}"
            );
            if solver.class == MultiplicityClass::Unique {
                let s = solver.best_interior().unwrap();
                let o = oracle.best_interior().unwrap();
                let tol1 = 1e-6 * slave.span();
                let tol2 = 1e-6 * master.span();
                assert!(
                    (s.t1.unwrap() - o.t1.unwrap()).abs() < tol1,
                    "t1 mismatch on pair {attempts}"
                );
                assert!(
                    (s.t2 - o.t2).abs() < tol2,
                    "t2 mismatch on pair {attempts}"
                );
            }
            accepted += 1;
        }
        let elapsed = start.elapsed();
        assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    });
}

#[test]
fn criterion_8_determinism() {
    criterion(8, "byte-identical reruns", || {
        let dir = tempfile::tempdir().unwrap();

        let scenario_out = |tag: &str| {
            let path = dir.path().join(format!("helix-{tag}.json"));
            let status = Command::new(bin())
                .args(["scenario", "helix", "--mu", "0.04", "--out"])
                .arg(&path)
                .status()
                .unwrap();
            assert!(status.success());
            std::fs::read(path).unwrap()
        };
        assert_eq!(scenario_out("a"), scenario_out("b"));

        let sweep_out = |tag: &str| {
            let path = dir.path().join(format!("sweep-{tag}.csv"));
            let status = Command::new(bin())
                .args([
                    "sweep", "--mu-lo", "0.001", "--mu-hi", "0.4", "--steps", "50", "--out",
                ])
                .arg(&path)
                .status()
                .unwrap();
            assert!(status.success());
            std::fs::read(path).unwrap()
        };
        assert_eq!(sweep_out("a"), sweep_out("b"));

        // In-process solver determinism on a non-trivial pair.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let slave = random_curve(&mut rng);
        let master = random_curve(&mut rng);
        let settings = SolverSettings::default();
        let a = bilateral_cpp(&slave, &master, &settings).unwrap();
        let b = bilateral_cpp(&slave, &master, &settings).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    });
}

/// A random line, circular arc, or helix segment in a random pose.
fn random_curve(rng: &mut ChaCha8Rng) -> Curve {
    let axis = Vec3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    let axis = if axis.norm() < 1e-3 {
        Vector3::z()
    } else {
        axis.normalize()
    };
    let rot = Rotation3::from_axis_angle(
        &nalgebra::Unit::new_normalize(axis),
        rng.gen_range(0.0..std::f64::consts::TAU),
    );
    let origin = Vec3::new(
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
    );
    match rng.gen_range(0..3u32) {
        0 => {
            let dir = rot * Vector3::x();
            let half = rng.gen_range(1.0..3.0);
            Curve::line(origin, dir, -half, half).unwrap()
        }
        1 => {
            let r = rng.gen_range(0.5..2.5);
            let span = rng.gen_range(0.8..2.8);
            Curve::circle_arc(origin, r, rot * Vector3::x(), rot * Vector3::y(), 0.0, span)
                .unwrap()
        }
        _ => {
            let r = rng.gen_range(0.5..2.0);
            let h = rng.gen_range(0.2..1.0);
            let span = rng.gen_range(1.5..5.0);
            Curve::helix(origin, rot * Vector3::z(), r, h, 0.0, 0.0, span).unwrap()
        }
    }
}

/// Accept only pairs whose oracle verdict is unambiguous: interior minima
/// away from the interval ends, a clearly positive distance, and (for
/// multiple minima) well-separated parameters.
fn clear_cut(
    oracle: &beamcontact::projection::MultiplicityReport,
    slave: &Curve,
    master: &Curve,
) -> bool {
    if oracle.class == MultiplicityClass::Boundary
        || oracle.class == MultiplicityClass::Continuum
    {
        return false;
    }
    let interior: Vec<_> = oracle.solutions.iter().filter(|s| !s.boundary).collect();
    if interior.is_empty() || oracle.solutions.iter().any(|s| s.boundary) {
        return false;
    }
    let (lo1, hi1) = slave.interval();
    let (lo2, hi2) = master.interval();
    let margin1 = 0.02 * slave.span();
    let margin2 = 0.02 * master.span();
    for s in &interior {
        let t1 = s.t1.unwrap();
        if t1 - lo1 < margin1 || hi1 - t1 < margin1 {
            return false;
        }
        if s.t2 - lo2 < margin2 || hi2 - s.t2 < margin2 {
            return false;
        }
        if s.distance < 1e-2 {
            return false;
        }
    }
    for (i, a) in interior.iter().enumerate() {
        for b in &interior[i + 1..] {
            let sep1 = (a.t1.unwrap() - b.t1.unwrap()).abs() / slave.span();
            let sep2 = (a.t2 - b.t2).abs() / master.span();
            if sep1.max(sep2) < 0.05 {
                return false;
            }
            // Near-ties in distance can flip which minima survive dedup.
            if (a.distance - b.distance).abs() < 1e-4 * a.distance.max(b.distance) {
                return false;
            }
        }
    }
    true
}
