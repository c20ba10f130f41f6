//! Scene parsing and the command-line front end.
//!
//! Scene files are JSON with keys named after the geometric symbols (R1, R2,
//! k, mu_max, d0, rbar, r, h). Unknown keys are rejected with an error naming
//! the offending key. All human-facing angles are in degrees; the library
//! works in radians internally.
//!
//! Exit codes: 0 success, 2 input error, 3 solver failure.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::Deserialize;

use crate::criteria::{self, BeamSection};
use crate::curves::{make_parallel_curve, Curve, NormalField, Vec3};
use crate::projection::{brute_force_oracle, MultiplicityClass, SolverSettings};
use crate::scenarios::{self, MuSource, ScenarioConfig, ScenarioName};
use crate::Error;

/// Closest-point-projection analysis for beam-to-beam contact.
#[derive(Debug, Parser)]
#[command(name = "beamcontact", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze a scene file: projections, kinematics, criteria, oracle check.
    Analyze {
        /// Scene file (JSON).
        #[arg(long)]
        scene: PathBuf,
        /// Report output path.
        #[arg(long)]
        report: PathBuf,
    },
    /// Tabulate alpha_min and the helix contact angle over a mu range (CSV).
    Sweep {
        #[arg(long)]
        mu_lo: f64,
        #[arg(long)]
        mu_hi: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run only the brute-force sampling oracle on a scene.
    Oracle {
        #[arg(long)]
        scene: PathBuf,
        /// Samples per parameter direction (>= 100).
        #[arg(long)]
        samples: usize,
    },
    /// Run a named degenerate scenario end to end.
    Scenario {
        /// One of: parallel, circle, helix, parallel-curve.
        name: String,
        /// Curvature ratio mu (helix).
        #[arg(long)]
        mu: Option<f64>,
        /// Offset distance d0 (parallel, parallel-curve).
        #[arg(long)]
        d0: Option<f64>,
        /// Circle radius rbar (circle, parallel-curve).
        #[arg(long)]
        rbar: Option<f64>,
        /// Circle radius as a multiple of 2R (circle).
        #[arg(long = "rbar-over-2R")]
        rbar_over_2r: Option<f64>,
        /// Cross-section radius R1 = R2 = R.
        #[arg(long = "R", default_value_t = 1.0)]
        radius: f64,
        /// Safety factor for assumption i).
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Oracle samples per parameter direction.
        #[arg(long, default_value_t = 120)]
        oracle_n: usize,
        /// Report output path (JSON); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Scene file schema. Keys mirror the geometric symbols.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub slave: CurveDef,
    pub master: CurveDef,
    #[serde(rename = "R1")]
    pub r1: f64,
    #[serde(rename = "R2")]
    pub r2: f64,
    #[serde(default = "default_k")]
    pub k: f64,
    /// Optional a-priori curvature ratio bound; sampled when absent.
    #[serde(default)]
    pub mu_max: Option<f64>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default = "default_oracle_n")]
    pub oracle_n: usize,
}

fn default_k() -> f64 {
    1.0
}

fn default_oracle_n() -> usize {
    120
}

/// Curve definition of a scene file.
#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CurveDef {
    Line {
        base: [f64; 3],
        dir: [f64; 3],
        interval: [f64; 2],
    },
    Circle {
        center: [f64; 3],
        #[serde(rename = "rbar")]
        rbar: f64,
        plane_normal: [f64; 3],
        /// Angular interval; a full period when absent.
        #[serde(default)]
        interval: Option<[f64; 2]>,
    },
    Helix {
        axis_point: [f64; 3],
        axis_dir: [f64; 3],
        r: f64,
        h: f64,
        #[serde(default)]
        phase: f64,
        interval: [f64; 2],
    },
    Hermite {
        nodes: Vec<HermiteNode>,
    },
    Offset {
        base: Box<CurveDef>,
        d0: f64,
        field: FieldDef,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HermiteNode {
    pub position: [f64; 3],
    pub tangent: [f64; 3],
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldDef {
    Frenet,
    Constant { dir: [f64; 3] },
}

fn vec3(a: [f64; 3]) -> Vec3 {
    Vec3::new(a[0], a[1], a[2])
}

fn unit(a: [f64; 3], what: &str) -> Result<Vec3, Error> {
    let v = vec3(a);
    let n = v.norm();
    if n < 1e-14 {
        return Err(Error::Config(format!("{what} must be a nonzero vector")));
    }
    Ok(v / n)
}

impl CurveDef {
    pub fn build(&self) -> Result<Curve, Error> {
        match self {
            CurveDef::Line { base, dir, interval } => Curve::line(
                vec3(*base),
                unit(*dir, "line dir")?,
                interval[0],
                interval[1],
            ),
            CurveDef::Circle {
                center,
                rbar,
                plane_normal,
                interval,
            } => {
                let normal = unit(*plane_normal, "circle plane_normal")?;
                match interval {
                    None => Curve::full_circle(vec3(*center), *rbar, normal),
                    Some([lo, hi]) => {
                        Curve::circle_arc_with_normal(vec3(*center), *rbar, normal, *lo, *hi)
                    }
                }
            }
            CurveDef::Helix {
                axis_point,
                axis_dir,
                r,
                h,
                phase,
                interval,
            } => Curve::helix(
                vec3(*axis_point),
                unit(*axis_dir, "helix axis_dir")?,
                *r,
                *h,
                *phase,
                interval[0],
                interval[1],
            ),
            CurveDef::Hermite { nodes } => Curve::hermite(
                nodes
                    .iter()
                    .map(|n| (vec3(n.position), vec3(n.tangent)))
                    .collect(),
            ),
            CurveDef::Offset { base, d0, field } => {
                let base = base.build()?;
                let field = match field {
                    FieldDef::Frenet => NormalField::Frenet,
                    FieldDef::Constant { dir } => {
                        NormalField::Constant(unit(*dir, "field dir")?)
                    }
                };
                make_parallel_curve(&base, *d0, field)
            }
        }
    }
}

/// Execute a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

struct CliError {
    code: i32,
    message: String,
}

fn input_error(message: impl Into<String>) -> CliError {
    CliError {
        code: 2,
        message: message.into(),
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ProjectionFailure(_)
            | Error::AmbiguousTheta(_)
            | Error::DegenerateFrame(_)
            | Error::DegenerateParametrization(_) => 3,
            _ => 2,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn load_scene(path: &PathBuf) -> Result<SceneFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read scene {}: {e}", path.display())))?;
    let scene: SceneFile = serde_json::from_str(&text)
        .map_err(|e| input_error(format!("scene parse error: {e}")))?;
    if !scene.r1.is_finite() || !scene.r2.is_finite() {
        return Err(input_error("R1 and R2 must be finite"));
    }
    Ok(scene)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { scene, report } => analyze(&scene, &report),
        Command::Sweep {
            mu_lo,
            mu_hi,
            steps,
            out,
        } => sweep(mu_lo, mu_hi, steps, &out),
        Command::Oracle { scene, samples } => oracle(&scene, samples),
        Command::Scenario {
            name,
            mu,
            d0,
            rbar,
            rbar_over_2r,
            radius,
            k,
            oracle_n,
            out,
        } => scenario(
            &name,
            mu,
            d0,
            rbar,
            rbar_over_2r,
            radius,
            k,
            oracle_n,
            out.as_ref(),
        ),
    }
}

fn fmt_vec(v: &Vec3) -> String {
    format!("({:.12e}, {:.12e}, {:.12e})", v.x, v.y, v.z)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn analyze(scene_path: &PathBuf, report_path: &PathBuf) -> Result<(), CliError> {
    let scene = load_scene(scene_path)?;
    let slave = scene.slave.build()?;
    let master = scene.master.build()?;
    let section = BeamSection::new(scene.r1, scene.r2, scene.k)?;
    let kappa_apriori = scene.mu_max.map(|mu| mu / section.max_radius());
    let pipeline = scenarios::run_pipeline(
        &slave,
        &master,
        &section,
        kappa_apriori,
        &scene.solver,
        scene.oracle_n,
    )?;

    let mut out = String::new();
    writeln!(out, "SCENE ANALYSIS").unwrap();
    writeln!(
        out,
        "section R1={:.12e} R2={:.12e} k={:.12e}",
        section.r1, section.r2, section.k
    )
    .unwrap();
    if pipeline.radii_warning {
        writeln!(out, "WARNING radii differ by more than one order of magnitude").unwrap();
    }
    writeln!(out, "SOLUTIONS n={}", pipeline.solver.solutions.len()).unwrap();
    for s in &pipeline.solver.solutions {
        writeln!(
            out,
            "  t1={:.12e} t2={:.12e} x1={} x2={} d={:.12e} g={:.12e} boundary={}",
            s.t1.unwrap_or(f64::NAN),
            s.t2,
            fmt_vec(&s.x1),
            fmt_vec(&s.x2),
            s.distance,
            s.distance - section.sum(),
            yes_no(s.boundary)
        )
        .unwrap();
    }
    writeln!(
        out,
        "MULTIPLICITY class={:?} spread={:.12e}",
        pipeline.solver.class, pipeline.solver.spread
    )
    .unwrap();
    if let Some(kin) = &pipeline.kinematics {
        let beta = |b: Option<f64>| match b {
            Some(v) => format!("{:.12e}", v.to_degrees()),
            None => "undefined".to_string(),
        };
        writeln!(
            out,
            "KINEMATICS d={:.12e} g={:.12e} alpha_deg={:.12e} beta1_deg={} beta2_deg={} kappa1={:.12e} kappa2={:.12e}",
            kin.distance,
            kin.gap,
            kin.alpha.to_degrees(),
            beta(kin.beta1),
            beta(kin.beta2),
            kin.kappa1,
            kin.kappa2
        )
        .unwrap();
    }
    if let Some(c) = &pipeline.criteria {
        writeln!(
            out,
            "GENERAL lhs_a={:.12e} ok_a={} lhs_b={:.12e} rhs_b={:.12e} ok_b={} near_boundary={}",
            c.general.lhs_a,
            yes_no(c.general.ok_a),
            c.general.lhs_b,
            c.general.rhs_b,
            yes_no(c.general.ok_b),
            yes_no(c.general.near_boundary)
        )
        .unwrap();
        let amin = match c.simplified.alpha_min {
            Some(a) => format!("{:.12e}", a.to_degrees()),
            None => "undefined".to_string(),
        };
        let source = match pipeline.mu_source {
            MuSource::APriori => "a-priori",
            MuSource::Sampled => "sampled",
        };
        writeln!(
            out,
            "SIMPLIFIED mu_max={:.12e} source={} alpha_min_deg={} ok_2a={} ok_2b={}",
            c.simplified.mu_max,
            source,
            amin,
            yes_no(c.simplified.ok_2a),
            yes_no(c.simplified.ok_2b)
        )
        .unwrap();
        writeln!(
            out,
            "ASSUMPTIONS i_ok={} ii_ok={}",
            yes_no(c.assumptions.i_ok),
            yes_no(c.assumptions.ii_ok)
        )
        .unwrap();
    }
    writeln!(
        out,
        "ORACLE class={:?} spread={:.12e} consistent={}",
        pipeline.oracle_class,
        pipeline.oracle_spread,
        yes_no(pipeline.consistent)
    )
    .unwrap();
    let unique = match pipeline.solver.class {
        MultiplicityClass::Unique => "yes",
        MultiplicityClass::Boundary => "boundary",
        _ => "no",
    };
    let guaranteed = pipeline
        .criteria
        .as_ref()
        .map(|c| c.simplified_guaranteed)
        .unwrap_or(false);
    writeln!(
        out,
        "VERDICT unique={} simplified_guaranteed={}",
        unique,
        yes_no(guaranteed)
    )
    .unwrap();

    std::fs::write(report_path, out)
        .map_err(|e| input_error(format!("cannot write report: {e}")))?;
    Ok(())
}

fn sweep(mu_lo: f64, mu_hi: f64, steps: usize, out: &PathBuf) -> Result<(), CliError> {
    if !(mu_lo >= 0.0 && mu_lo < mu_hi && mu_hi < 0.5) {
        return Err(input_error(format!(
            "sweep requires 0 <= mu_lo < mu_hi < 0.5, got [{mu_lo}, {mu_hi}]"
        )));
    }
    if steps < 2 {
        return Err(input_error(format!("steps = {steps} must be >= 2")));
    }
    let mut csv = String::from("mu,alpha_min_deg,alpha_helix_deg\n");
    for i in 0..steps {
        let mu = mu_lo + (mu_hi - mu_lo) * i as f64 / (steps - 1) as f64;
        let amin = criteria::alpha_min(mu).map_err(CliError::from)?.to_degrees();
        let ahel = criteria::helix_contact_angle(mu)
            .map_err(CliError::from)?
            .to_degrees();
        writeln!(csv, "{mu:.14e},{amin:.14e},{ahel:.14e}").unwrap();
    }
    std::fs::write(out, csv).map_err(|e| input_error(format!("cannot write CSV: {e}")))?;
    Ok(())
}

fn oracle(scene_path: &PathBuf, samples: usize) -> Result<(), CliError> {
    let scene = load_scene(scene_path)?;
    let slave = scene.slave.build()?;
    let master = scene.master.build()?;
    let report = brute_force_oracle(&slave, &master, samples, &scene.solver)?;
    println!(
        "ORACLE class={:?} samples={} spread={:.12e}",
        report.class, report.sample_count, report.spread
    );
    for s in &report.solutions {
        println!(
            "  t1={:.12e} t2={:.12e} d={:.12e} boundary={}",
            s.t1.unwrap_or(f64::NAN),
            s.t2,
            s.distance,
            yes_no(s.boundary)
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn scenario(
    name: &str,
    mu: Option<f64>,
    d0: Option<f64>,
    rbar: Option<f64>,
    rbar_over_2r: Option<f64>,
    radius: f64,
    k: f64,
    oracle_n: usize,
    out: Option<&PathBuf>,
) -> Result<(), CliError> {
    let name: ScenarioName = name.parse()?;
    let section = BeamSection::new(radius, radius, k)?;
    let rbar = match (rbar, rbar_over_2r) {
        (Some(_), Some(_)) => {
            return Err(input_error("give either --rbar or --rbar-over-2R, not both"))
        }
        (Some(r), None) => Some(r),
        (None, Some(f)) => Some(f * 2.0 * section.max_radius()),
        (None, None) => None,
    };
    let config = ScenarioConfig {
        name,
        d0,
        rbar,
        mu,
        section,
        solver: SolverSettings::default(),
        oracle_n,
    };
    let report = scenarios::run_scenario(&config)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| input_error(format!("serialization failed: {e}")))?;
    match out {
        Some(path) => std::fs::write(path, json)
            .map_err(|e| input_error(format!("cannot write report: {e}")))?,
        None => println!("{json}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_with_unknown_key_is_rejected() {
        let text = r#"{
            "slave": {"type": "line", "base": [0,0,0], "dir": [1,0,0], "interval": [-1,1]},
            "master": {"type": "line", "base": [0,0,1], "dir": [0,1,0], "interval": [-1,1]},
            "R1": 0.1, "R2": 0.1, "bogus": 3
        }"#;
        let err = serde_json::from_str::<SceneFile>(text).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn scene_missing_r1_names_the_field() {
        let text = r#"{
            "slave": {"type": "line", "base": [0,0,0], "dir": [1,0,0], "interval": [-1,1]},
            "master": {"type": "line", "base": [0,0,1], "dir": [0,1,0], "interval": [-1,1]},
            "R2": 0.1
        }"#;
        let err = serde_json::from_str::<SceneFile>(text).unwrap_err();
        assert!(err.to_string().contains("R1"));
    }

    #[test]
    fn curve_defs_build() {
        let text = r#"{
            "slave": {"type": "offset",
                      "base": {"type": "circle", "center": [0,0,0], "rbar": 2.0,
                               "plane_normal": [0,0,1]},
                      "d0": 0.5, "field": "frenet"},
            "master": {"type": "helix", "axis_point": [0,0,0], "axis_dir": [0,0,1],
                       "r": 1.0, "h": 0.5, "interval": [0.0, 6.0]},
            "R1": 0.1, "R2": 0.1, "mu_max": 0.05
        }"#;
        let scene: SceneFile = serde_json::from_str(text).unwrap();
        scene.slave.build().unwrap();
        scene.master.build().unwrap();
    }
}
