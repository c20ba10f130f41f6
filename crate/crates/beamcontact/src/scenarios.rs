//! Named constant-distance geometries and the full analysis pipeline
//! (projection -> kinematics -> criteria -> oracle cross-check).
//!
//! The named scenarios are the degenerate configurations with a constant
//! distance function: two parallel lines, a straight beam on the axis of a
//! circle, a straight beam on the axis of a helix, and a parallel-offset
//! curve pair. All of them have a non-unique bilateral projection, which
//! both the solver and the criteria must detect.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::criteria::{self, BeamSection, CriteriaReport};
use crate::curves::{make_parallel_curve, Curve, NormalField, Vec3};
use crate::diffgeo::{self, ContactKinematics};
use crate::projection::{
    bilateral_cpp, brute_force_oracle, MultiplicityClass, MultiplicityReport, SolverSettings,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioName {
    Parallel,
    Circle,
    Helix,
    ParallelCurve,
}

impl std::str::FromStr for ScenarioName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "parallel" => Ok(Self::Parallel),
            "circle" => Ok(Self::Circle),
            "helix" => Ok(Self::Helix),
            "parallel-curve" => Ok(Self::ParallelCurve),
            other => Err(Error::Config(format!("unknown scenario name '{other}'"))),
        }
    }
}

impl std::fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Parallel => "parallel",
            Self::Circle => "circle",
            Self::Helix => "helix",
            Self::ParallelCurve => "parallel-curve",
        };
        f.write_str(s)
    }
}

/// Configuration of a named scenario. Geometry parameters default from the
/// cross-section radius when absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    /// Offset distance (parallel, parallel-curve).
    pub d0: Option<f64>,
    /// Circle radius (circle, parallel-curve base).
    pub rbar: Option<f64>,
    /// Curvature ratio for the helix-by-mu family.
    pub mu: Option<f64>,
    pub section: BeamSection,
    pub solver: SolverSettings,
    pub oracle_n: usize,
}

impl ScenarioConfig {
    pub fn new(name: ScenarioName, section: BeamSection) -> Self {
        Self {
            name,
            d0: None,
            rbar: None,
            mu: None,
            section,
            solver: SolverSettings::default(),
            oracle_n: 120,
        }
    }
}

/// Where the curvature bound entering the simplified criteria came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuSource {
    APriori,
    Sampled,
}

/// Geometry actually built for a scenario, echoed into the report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryEcho {
    pub d0: Option<f64>,
    pub rbar: Option<f64>,
    pub helix_radius: Option<f64>,
    pub helix_slope: Option<f64>,
    pub mu: Option<f64>,
}

/// Output of the full pipeline on one curve pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub solver: MultiplicityReport,
    pub oracle_class: MultiplicityClass,
    pub oracle_spread: f64,
    /// Solver and oracle agree on the multiplicity class.
    pub consistent: bool,
    /// Kinematics of the best interior solution, with section radii applied.
    pub kinematics: Option<ContactKinematics>,
    pub criteria: Option<CriteriaReport>,
    pub kappa_max: f64,
    pub mu_source: MuSource,
    pub radii_warning: bool,
}

/// Scenario report: config echo plus pipeline output and the derived angles
/// in degrees.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub name: ScenarioName,
    pub section: BeamSection,
    pub geometry: GeometryEcho,
    pub pipeline: PipelineReport,
    pub alpha_deg: Option<f64>,
    pub alpha_min_deg: Option<f64>,
    /// Closed-form helix contact angle (helix scenario only).
    pub alpha_helix_deg: Option<f64>,
}

/// Maximum Frenet curvature over both curves, sampled at `n` parameters each.
pub fn kappa_max_sampled(curves: &[&Curve], n: usize) -> f64 {
    let mut kappa = 0.0f64;
    for c in curves {
        let (lo, hi) = c.interval();
        for i in 0..n {
            let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            let p = c.eval_raw(t);
            let speed = p.d1.norm();
            if speed > 1e-14 {
                kappa = kappa.max(p.d1.cross(&p.d2).norm() / (speed * speed * speed));
            }
        }
    }
    kappa
}

/// Run projection, kinematics, criteria and the oracle cross-check on an
/// arbitrary curve pair. `kappa_max_apriori` selects the a-priori curvature
/// bound; otherwise the bound is sampled along both curves.
pub fn run_pipeline(
    slave: &Curve,
    master: &Curve,
    section: &BeamSection,
    kappa_max_apriori: Option<f64>,
    solver: &SolverSettings,
    oracle_n: usize,
) -> Result<PipelineReport> {
    let report = bilateral_cpp(slave, master, solver)?;
    let oracle = brute_force_oracle(slave, master, oracle_n, solver)?;
    let consistent = report.class == oracle.class;

    let (kappa_max, mu_source) = match kappa_max_apriori {
        Some(k) => (k, MuSource::APriori),
        None => (kappa_max_sampled(&[slave, master], 200), MuSource::Sampled),
    };

    let kinematics = match report.best_interior() {
        Some(best) => Some(diffgeo::contact_kinematics(
            slave,
            best.t1.expect("bilateral solution carries t1"),
            master,
            best.t2,
            section.r1,
            section.r2,
        )?),
        None => None,
    };
    let criteria = match &kinematics {
        Some(kin) => Some(criteria::evaluate(section, kin, kappa_max)?),
        None => None,
    };

    Ok(PipelineReport {
        solver: report,
        oracle_class: oracle.class,
        oracle_spread: oracle.spread,
        consistent,
        kinematics,
        criteria,
        kappa_max,
        mu_source,
        radii_warning: !section.radii_same_order(),
    })
}

/// Build the (slave, master) pair of a named scenario.
pub fn build_scenario(config: &ScenarioConfig) -> Result<(Curve, Curve, GeometryEcho)> {
    let r_section = config.section.max_radius();
    match config.name {
        ScenarioName::Parallel => {
            let d0 = config.d0.unwrap_or(2.0 * r_section);
            if !(d0 > 0.0) {
                return Err(Error::Config(format!("d0 = {d0} must be > 0")));
            }
            let half = 5.0 * d0;
            let slave = Curve::line(Vec3::zeros(), Vec3::x(), -half, half)?;
            let master = Curve::line(Vec3::new(0.0, 0.0, d0), Vec3::x(), -half, half)?;
            Ok((
                slave,
                master,
                GeometryEcho {
                    d0: Some(d0),
                    rbar: None,
                    helix_radius: None,
                    helix_slope: None,
                    mu: Some(0.0),
                },
            ))
        }
        ScenarioName::Circle => {
            let rbar = config.rbar.unwrap_or(2.0 * r_section);
            if !(rbar > 0.0) {
                return Err(Error::Config(format!("rbar = {rbar} must be > 0")));
            }
            let slave = Curve::line(Vec3::zeros(), Vec3::z(), -2.0 * rbar, 2.0 * rbar)?;
            let master = Curve::full_circle(Vec3::zeros(), rbar, Vec3::z())?;
            Ok((
                slave,
                master,
                GeometryEcho {
                    d0: None,
                    rbar: Some(rbar),
                    helix_radius: None,
                    helix_slope: None,
                    mu: Some(r_section / rbar),
                },
            ))
        }
        ScenarioName::Helix => {
            let mu = config.mu.unwrap_or(0.01);
            if !(mu > 0.0 && mu < 0.5) {
                return Err(Error::Config(format!(
                    "helix-by-mu requires 0 < mu < 0.5, got {mu}"
                )));
            }
            // helix radius pinned at the contact bound r = 2R; the slope then
            // follows from mu = R * r / (r^2 + h^2)
            let r = 2.0 * r_section;
            let h = r_section * (2.0 / mu - 4.0).sqrt();
            let master = Curve::helix(Vec3::zeros(), Vec3::z(), r, h, 0.0, 0.0, TAU)?;
            let z_hi = h * TAU;
            let slave = Curve::line(Vec3::zeros(), Vec3::z(), 0.1 * z_hi, 0.9 * z_hi)?;
            Ok((
                slave,
                master,
                GeometryEcho {
                    d0: None,
                    rbar: None,
                    helix_radius: Some(r),
                    helix_slope: Some(h),
                    mu: Some(mu),
                },
            ))
        }
        ScenarioName::ParallelCurve => {
            let rbar = config.rbar.unwrap_or(8.0 * r_section);
            let d0 = config.d0.unwrap_or(2.0 * r_section);
            if !(d0 > 0.0 && d0 < rbar) {
                return Err(Error::Config(format!(
                    "parallel-curve requires 0 < d0 < rbar, got d0 = {d0}, rbar = {rbar}"
                )));
            }
            let base = Curve::full_circle(Vec3::zeros(), rbar, Vec3::z())?;
            let offset = make_parallel_curve(&base, d0, NormalField::Frenet)?;
            Ok((
                offset,
                base,
                GeometryEcho {
                    d0: Some(d0),
                    rbar: Some(rbar),
                    helix_radius: None,
                    helix_slope: None,
                    mu: None,
                },
            ))
        }
    }
}

/// Execute a named scenario end to end.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport> {
    let (slave, master, geometry) = build_scenario(config)?;
    let kappa_apriori = geometry
        .mu
        .map(|mu| mu / config.section.max_radius());
    let pipeline = run_pipeline(
        &slave,
        &master,
        &config.section,
        kappa_apriori,
        &config.solver,
        config.oracle_n,
    )?;
    let alpha_deg = pipeline.kinematics.as_ref().map(|k| k.alpha.to_degrees());
    let alpha_min_deg = pipeline
        .criteria
        .as_ref()
        .and_then(|c| c.simplified.alpha_min)
        .map(f64::to_degrees);
    let alpha_helix_deg = match config.name {
        ScenarioName::Helix => Some(
            criteria::helix_contact_angle(geometry.mu.expect("helix geometry has mu"))?
                .to_degrees(),
        ),
        _ => None,
    };
    Ok(ScenarioReport {
        name: config.name,
        section: config.section,
        geometry,
        pipeline,
        alpha_deg,
        alpha_min_deg,
        alpha_helix_deg,
    })
}
