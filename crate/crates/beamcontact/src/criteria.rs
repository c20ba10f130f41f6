//! Existence and uniqueness criteria for the bilateral closest-point
//! projection, in both the general and the simplified worst-case form.
//!
//! General criteria, evaluated on the converged contact kinematics:
//!
//! ```text
//! (a)  kappa2 * d * cos(beta2) < 1
//! (b)  (1 + kappa1 * d * cos(beta1)) * (1 - kappa2 * d * cos(beta2)) > cos(alpha)^2
//! ```
//!
//! Simplified worst-case criteria under the assumptions i) `d <= k (R1+R2)`
//! and ii) `mu_max = max(R_i) * max(kappa) < 0.5`:
//!
//! ```text
//! (a)  2 mu_max < 1
//! (b)  alpha > alpha_min = arccos(1 - 2 mu_max)
//! ```
//!
//! All relations are strict; values at the bound (within 1e-12) count as not
//! satisfied, since the degenerate constant-distance geometries sit exactly
//! on the boundary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diffgeo::ContactKinematics;
use crate::{Error, Result};

/// Absolute margin below which a strict inequality counts as violated.
const STRICT_TOL: f64 = 1e-12;

/// Cross-section data of a contact pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BeamSection {
    /// Slave cross-section radius.
    pub r1: f64,
    /// Master cross-section radius.
    pub r2: f64,
    /// Safety factor for assumption i), `d <= k (R1 + R2)`.
    pub k: f64,
}

impl BeamSection {
    pub fn new(r1: f64, r2: f64, k: f64) -> Result<Self> {
        if !(r1 > 0.0 && r2 > 0.0) {
            return Err(Error::Config(format!("radii must be positive, got {r1}, {r2}")));
        }
        if !(k >= 1.0) {
            return Err(Error::Config(format!("safety factor {k} must be >= 1")));
        }
        Ok(Self { r1, r2, k })
    }

    /// The criteria assume radii of the same order of magnitude; callers
    /// should surface a warning when this is false.
    pub fn radii_same_order(&self) -> bool {
        let ratio = self.r1 / self.r2;
        (0.1..=10.0).contains(&ratio)
    }

    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }

    pub fn max_radius(&self) -> f64 {
        self.r1.max(self.r2)
    }
}

/// Numeric sides and verdicts of the general criteria.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralReport {
    /// `kappa2 * d * cos(beta2)`.
    pub lhs_a: f64,
    pub ok_a: bool,
    /// `(1 + kappa1 d cos beta1)(1 - kappa2 d cos beta2)`.
    pub lhs_b: f64,
    /// `cos(alpha)^2`.
    pub rhs_b: f64,
    pub ok_b: bool,
    /// True when a side sits within `1e-12` of its bound.
    pub near_boundary: bool,
}

impl GeneralReport {
    pub fn guaranteed(&self) -> bool {
        self.ok_a && self.ok_b
    }
}

/// Numeric sides and verdicts of the simplified worst-case criteria.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimplifiedReport {
    pub mu_max: f64,
    pub ok_2a: bool,
    /// `arccos(1 - 2 mu_max)`, defined only for `mu_max < 0.5`.
    pub alpha_min: Option<f64>,
    pub ok_2b: bool,
}

impl SimplifiedReport {
    pub fn guaranteed(&self) -> bool {
        self.ok_2a && self.ok_2b
    }
}

/// Verdicts of the two a-priori assumptions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `d <= k (R1 + R2)` (boundary inclusive).
    pub i_ok: bool,
    /// `max(R_i) * kappa_max < 0.5`.
    pub ii_ok: bool,
}

/// Combined criteria evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriteriaReport {
    pub general: GeneralReport,
    pub simplified: SimplifiedReport,
    pub assumptions: AssumptionReport,
    pub general_guaranteed: bool,
    pub simplified_guaranteed: bool,
}

/// Criteria term `kappa * d * cos(beta)`. An undefined beta comes with a
/// curvature below tolerance, where the whole term vanishes in the limit.
fn criteria_term(kappa: f64, d: f64, beta: Option<f64>) -> f64 {
    match beta {
        Some(b) => kappa * d * b.cos(),
        None => 0.0,
    }
}

/// Evaluate the general criteria on converged contact kinematics.
pub fn evaluate_general_criteria(kin: &ContactKinematics) -> Result<GeneralReport> {
    if !(kin.distance > 0.0) {
        return Err(Error::InvalidKinematics(format!(
            "distance {} must be > 0",
            kin.distance
        )));
    }
    let term1 = criteria_term(kin.kappa1, kin.distance, kin.beta1);
    let term2 = criteria_term(kin.kappa2, kin.distance, kin.beta2);
    let lhs_a = term2;
    let lhs_b = (1.0 + term1) * (1.0 - term2);
    let cos_alpha = kin.alpha.cos();
    let rhs_b = cos_alpha * cos_alpha;
    let margin_a = 1.0 - lhs_a;
    let margin_b = lhs_b - rhs_b;
    Ok(GeneralReport {
        lhs_a,
        ok_a: margin_a > STRICT_TOL,
        lhs_b,
        rhs_b,
        ok_b: margin_b > STRICT_TOL,
        near_boundary: margin_a.abs() <= STRICT_TOL || margin_b.abs() <= STRICT_TOL,
    })
}

/// Conservative lower contact-angle bound `arccos(1 - 2 mu_max)`.
pub fn alpha_min(mu_max: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&mu_max) {
        return Err(Error::AssumptionViolated(mu_max));
    }
    Ok((1.0 - 2.0 * mu_max).acos())
}

/// Evaluate the simplified worst-case criteria for an a-priori curvature
/// bound `kappa_max` and a contact angle `alpha`.
pub fn evaluate_simplified_criteria(
    section: &BeamSection,
    kappa_max: f64,
    alpha: f64,
) -> SimplifiedReport {
    let mu_max = section.max_radius() * kappa_max;
    let ok_2a = 1.0 - 2.0 * mu_max > STRICT_TOL;
    let amin = alpha_min(mu_max).ok();
    let ok_2b = match amin {
        Some(a) => alpha - a > STRICT_TOL,
        None => false,
    };
    SimplifiedReport {
        mu_max,
        ok_2a,
        alpha_min: amin,
        ok_2b,
    }
}

/// Check assumptions i) and ii).
pub fn check_assumptions(section: &BeamSection, d: f64, kappa_max: f64) -> AssumptionReport {
    AssumptionReport {
        i_ok: d <= section.k * section.sum(),
        ii_ok: section.max_radius() * kappa_max < 0.5,
    }
}

/// Full criteria evaluation for one converged contact state.
pub fn evaluate(
    section: &BeamSection,
    kin: &ContactKinematics,
    kappa_max: f64,
) -> Result<CriteriaReport> {
    let general = evaluate_general_criteria(kin)?;
    let simplified = evaluate_simplified_criteria(section, kappa_max, kin.alpha);
    let assumptions = check_assumptions(section, kin.distance, kappa_max);
    let general_guaranteed = general.guaranteed();
    let simplified_guaranteed = simplified.guaranteed();
    Ok(CriteriaReport {
        general,
        simplified,
        assumptions,
        general_guaranteed,
        simplified_guaranteed,
    })
}

/// Supremum of master curvatures with guaranteed unique unilateral
/// projection at closest-point distance `d`, independent of the mutual
/// orientation: `1/d`.
pub fn unilateral_curvature_bound(d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidKinematics(format!("distance {d} must be > 0")));
    }
    Ok(1.0 / d)
}

/// Contact angle of the straight-beam-in-helix family at curvature ratio
/// `mu`, with the helix radius at the contact bound `r = 2R`:
/// `alpha(mu) = arccos(1 / sqrt(1 + 2 mu / (1 - 2 mu)))`.
pub fn helix_contact_angle(mu: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&mu) {
        return Err(Error::AssumptionViolated(mu));
    }
    Ok((1.0 / (1.0 + 2.0 * mu / (1.0 - 2.0 * mu)).sqrt()).acos())
}

/// Residual `1 + kappa_a * d0 * cos(beta_a)` of the orthogonal-tangent
/// condition for parallel-offset curves. It vanishes only when the base
/// curvature reaches `1/d0`, at `beta_a = pi`.
pub fn parallel_curve_orthogonality_residual(kappa_a: f64, d0: f64, beta_a: f64) -> f64 {
    1.0 + kappa_a * d0 * beta_a.cos()
}

/// Randomized sufficiency check: states whose inputs satisfy the simplified
/// criteria (with assumptions i) and ii) built into the sampling ranges) must
/// always satisfy the general criteria. Returns the number of violations;
/// the contract is 0.
///
/// Curvatures are drawn in `[0, mu_max / max(R_i))`, matching the definition
/// `mu_max = max(R_i) * max(kappa)` that both beams share.
pub fn sufficiency_sample_check(section: &BeamSection, trials: u64, seed: u64) -> u64 {
    sufficiency_sample_check_scaled(section, trials, seed, 1.0)
}

/// Same sampler with the distance range stretched by `d_scale`. Values above
/// 1 deliberately violate assumption i); violations then demonstrate that
/// the assumption is necessary.
pub fn sufficiency_sample_check_scaled(
    section: &BeamSection,
    trials: u64,
    seed: u64,
    d_scale: f64,
) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0u64;
    for _ in 0..trials {
        let mu_max: f64 = rng.gen_range(1e-6..0.5 - 1e-6);
        let amin = (1.0 - 2.0 * mu_max).acos();
        let alpha: f64 = rng.gen_range(amin..std::f64::consts::FRAC_PI_2);
        let d: f64 = rng.gen_range(0.0..1.0f64).max(1e-9) * d_scale * section.k * section.sum();
        let kappa_bound = mu_max / section.max_radius();
        let kappa1: f64 = rng.gen_range(0.0..kappa_bound);
        let kappa2: f64 = rng.gen_range(0.0..kappa_bound);
        let beta1: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let beta2: f64 = rng.gen_range(0.0..std::f64::consts::PI);

        let simplified = evaluate_simplified_criteria(section, kappa_bound, alpha);
        if !simplified.guaranteed() {
            continue;
        }
        let term1 = kappa1 * d * beta1.cos();
        let term2 = kappa2 * d * beta2.cos();
        let lhs_b = (1.0 + term1) * (1.0 - term2);
        let cos_alpha = alpha.cos();
        let general_ok = 1.0 - term2 > STRICT_TOL && lhs_b - cos_alpha * cos_alpha > STRICT_TOL;
        if !general_ok {
            violations += 1;
        }
    }
    violations
}
