//! Closest-point projections: unilateral, bilateral and tube-surface, plus
//! an independent brute-force sampling oracle.
//!
//! The Newton solvers start from an equispaced multi-start grid (per smooth
//! segment), deduplicate converged solutions and classify the multiplicity of
//! the minimizing set. The oracle never touches the Newton machinery: it
//! samples the distance function on a grid and refines grid-local minima by
//! coordinate-wise golden-section search, so the two routes are independent
//! ground truths for each other.
//!
//! All solvers are pure and run sequentially, so repeated runs produce
//! bitwise identical solution lists.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::curves::{Curve, Vec3};
use crate::diffgeo::{self, ContactKinematics};
use crate::{Error, Result};

/// Relative tolerance for the positive-semidefinite second-order test.
/// The degenerate constant-distance geometries sit exactly on a zero
/// eigenvalue, so the test accepts small negative values of rounding size.
const HESS_TOL: f64 = 1e-9;

/// Multi-start Newton solver settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    /// Starts per smooth curve segment (per direction for bilateral grids).
    pub n_start: usize,
    /// Tolerance on the residual scaled by ||r'|| * d.
    pub newton_tol: f64,
    /// Maximum Newton iterations per start.
    pub max_iter: usize,
    /// Parameter deduplication tolerance, relative to the interval length.
    pub dedup_rel: f64,
    /// Distance-spread threshold for continuum detection, relative to the
    /// mean distance of the minimizing set.
    pub spread_rel: f64,
    /// Fraction of the parameter interval the minimizing set must span to
    /// count as a continuum.
    pub span_frac: f64,
    /// Minimum number of distinct minima for a continuum verdict.
    pub min_continuum_count: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            n_start: 16,
            newton_tol: 1e-12,
            max_iter: 50,
            dedup_rel: 1e-8,
            spread_rel: 1e-9,
            span_frac: 0.1,
            min_continuum_count: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CppKind {
    Unilateral,
    Bilateral,
    TubeSurface,
}

/// Multiplicity class of the minimizing set of the distance function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultiplicityClass {
    /// Exactly one interior local minimum.
    Unique,
    /// Two or more isolated interior local minima.
    Multiple,
    /// The minimizing set spans a large part of the interval at (numerically)
    /// constant distance.
    Continuum,
    /// Only boundary minima exist; the uniqueness criteria do not govern
    /// extrema clamped to interval ends, so no interior class is assigned.
    Boundary,
}

/// A converged closest-point projection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CppState {
    pub kind: CppKind,
    /// Slave parameter (absent for point-based projections).
    pub t1: Option<f64>,
    /// Master parameter.
    pub t2: f64,
    /// Angular surface coordinate (tube-surface projections only).
    pub theta: Option<f64>,
    /// Closest point on (or fixed point of) the slave side.
    pub x1: Vec3,
    /// Closest point on the master side.
    pub x2: Vec3,
    /// Distance between `x1` and `x2`.
    pub distance: f64,
    /// Signed surface gap `d_centerline - R2` (tube-surface only).
    pub surface_gap: Option<f64>,
    /// Scaled residual norm at convergence.
    pub residual: f64,
    /// True when a parameter was clamped to an interval end.
    pub boundary: bool,
    /// Full contact kinematics (bilateral solutions only).
    pub kinematics: Option<ContactKinematics>,
}

/// Result of a multiplicity-classified projection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub class: MultiplicityClass,
    /// Interior solutions first, then boundary solutions, each sorted by
    /// parameter.
    pub solutions: Vec<CppState>,
    /// Number of distance evaluations / samples behind the verdict.
    pub sample_count: usize,
    /// Distance spread (max - min) over the interior minimizing set.
    pub spread: f64,
}

impl MultiplicityReport {
    /// Best interior solution (smallest distance), if any.
    pub fn best_interior(&self) -> Option<&CppState> {
        self.solutions
            .iter()
            .filter(|s| !s.boundary)
            .min_by(|a, b| a.distance.total_cmp(&b.distance))
    }
}

/// Parameter domain of one curve, periodic or clamped.
#[derive(Debug, Clone, Copy)]
struct ParamDomain {
    lo: f64,
    hi: f64,
    period: Option<f64>,
}

impl ParamDomain {
    fn of(curve: &Curve) -> Self {
        let (lo, hi) = curve.interval();
        Self {
            lo,
            hi,
            period: curve.period(),
        }
    }

    fn len(&self) -> f64 {
        self.hi - self.lo
    }

    /// Wrap into the interval (periodic) or clamp to it. Returns the mapped
    /// parameter and whether clamping occurred.
    fn normalize(&self, t: f64) -> (f64, bool) {
        match self.period {
            Some(p) => {
                let mut s = (t - self.lo).rem_euclid(p) + self.lo;
                if s >= self.hi {
                    s -= p;
                }
                (s, false)
            }
            None => {
                if t < self.lo {
                    (self.lo, true)
                } else if t > self.hi {
                    (self.hi, true)
                } else {
                    (t, false)
                }
            }
        }
    }

    fn is_boundary(&self, t: f64, tol: f64) -> bool {
        self.period.is_none() && ((t - self.lo).abs() <= tol || (self.hi - t).abs() <= tol)
    }

    /// Parameter distance, modulo the period when periodic.
    fn dist(&self, a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        match self.period {
            Some(p) => d.min(p - d % p).min(d % p),
            None => d,
        }
    }

    /// Span of a sorted set of parameters; circular span (period minus the
    /// largest gap) when periodic.
    fn span_of(&self, sorted: &[f64]) -> f64 {
        if sorted.len() < 2 {
            return 0.0;
        }
        match self.period {
            Some(p) => {
                let mut max_gap = sorted[0] + p - sorted[sorted.len() - 1];
                for w in sorted.windows(2) {
                    max_gap = max_gap.max(w[1] - w[0]);
                }
                p - max_gap
            }
            None => sorted[sorted.len() - 1] - sorted[0],
        }
    }
}

/// Interior-minima classification shared by the Newton route and the oracle.
fn classify(
    interior: &[(f64, f64)], // (governing parameter, distance)
    domain: &ParamDomain,
    s: &SolverSettings,
) -> (MultiplicityClass, f64) {
    if interior.is_empty() {
        return (MultiplicityClass::Boundary, 0.0);
    }
    let mut ts: Vec<f64> = interior.iter().map(|m| m.0).collect();
    ts.sort_by(f64::total_cmp);
    let d_min = interior.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let d_max = interior.iter().map(|m| m.1).fold(0.0f64, f64::max);
    let d_mean = interior.iter().map(|m| m.1).sum::<f64>() / interior.len() as f64;
    let spread = d_max - d_min;
    let span = domain.span_of(&ts);
    if interior.len() >= s.min_continuum_count
        && span > s.span_frac * domain.len()
        && spread < s.spread_rel * d_mean
    {
        return (MultiplicityClass::Continuum, spread);
    }
    if interior.len() == 1 {
        (MultiplicityClass::Unique, spread)
    } else {
        (MultiplicityClass::Multiple, spread)
    }
}

// ---------------------------------------------------------------------------
// Unilateral projection
// ---------------------------------------------------------------------------

/// Raw local minimum of a point-to-curve distance.
#[derive(Debug, Clone, Copy)]
struct Minimum1d {
    t: f64,
    d: f64,
    residual: f64,
    boundary: bool,
}

/// Multi-start Newton on the orthogonality residual
/// `f(t) = (x - r(t)) . r'(t)`, keeping local minima of the distance.
fn unilateral_minima(x: &Vec3, master: &Curve, s: &SolverSettings) -> Vec<Minimum1d> {
    let domain = ParamDomain::of(master);
    let dedup_tol = s.dedup_rel * domain.len();
    let mut found: Vec<Minimum1d> = Vec::new();

    let eval_f = |t: f64| -> (f64, f64, f64, f64) {
        // (f, f', speed, d)
        let p = master.eval_raw(t);
        let q = x - p.position;
        let f = q.dot(&p.d1);
        let fp = -p.d1.norm_squared() + q.dot(&p.d2);
        (f, fp, p.d1.norm(), q.norm())
    };

    let try_accept = |t: f64, found: &mut Vec<Minimum1d>| {
        let (f, fp, speed, d) = eval_f(t);
        if d < 1e-12 {
            return; // coincident point, degenerate
        }
        let scaled = f.abs() / (speed * d);
        if scaled > s.newton_tol * 10.0 {
            return;
        }
        // D'' = 2 (||r'||^2 - q . r'') = -2 f'
        let hess = -2.0 * fp;
        let scale = 2.0 * speed * speed + 2.0 * fp.abs();
        if hess < -HESS_TOL * scale {
            return; // maximum of the distance
        }
        found.push(Minimum1d {
            t,
            d,
            residual: scaled,
            boundary: false,
        });
    };

    for (seg_lo, seg_hi) in master.segments() {
        let seg_len = seg_hi - seg_lo;
        for i in 0..s.n_start {
            let mut t = seg_lo + seg_len * (i as f64 + 0.5) / s.n_start as f64;
            let mut clamped_runs = 0;
            let mut converged = false;
            for _ in 0..s.max_iter {
                let (f, fp, speed, d) = eval_f(t);
                if d < 1e-12 {
                    break;
                }
                if f.abs() <= s.newton_tol * speed * d {
                    converged = true;
                    break;
                }
                if fp.abs() < 1e-300 {
                    break;
                }
                let mut dt = -f / fp;
                let cap = domain.len();
                if dt.abs() > cap {
                    dt = dt.signum() * cap;
                }
                let (t_new, clamped) = domain.normalize(t + dt);
                clamped_runs = if clamped { clamped_runs + 1 } else { 0 };
                if clamped_runs >= 3 {
                    break;
                }
                if (t_new - t).abs() < 1e-17 * domain.len() {
                    let (f2, _, sp2, d2) = eval_f(t_new);
                    converged = f2.abs() <= s.newton_tol * 10.0 * sp2 * d2;
                    t = t_new;
                    break;
                }
                t = t_new;
            }
            if converged && !domain.is_boundary(t, dedup_tol) {
                try_accept(t, &mut found);
            }
        }
        // Bisection sweep over sign changes of f: catches roots Newton
        // missed (e.g. starts thrown out of the segment).
        let n_scan = 4 * s.n_start;
        let mut prev = None;
        for i in 0..=n_scan {
            let t = seg_lo + seg_len * i as f64 / n_scan as f64;
            let (f, _, _, _) = eval_f(t);
            if let Some((tp, fp_val)) = prev {
                if (f > 0.0) != (fp_val > 0.0) && f != 0.0 && fp_val != 0.0 {
                    let (mut a, mut b, mut fa) = (tp, t, fp_val);
                    for _ in 0..200 {
                        let m = 0.5 * (a + b);
                        let (fm, _, _, _) = eval_f(m);
                        if (fm > 0.0) == (fa > 0.0) {
                            a = m;
                            fa = fm;
                        } else {
                            b = m;
                        }
                        if b - a < 1e-15 * domain.len().max(1.0) {
                            break;
                        }
                    }
                    let root = 0.5 * (a + b);
                    if !domain.is_boundary(root, dedup_tol) {
                        try_accept(root, &mut found);
                    }
                }
            }
            prev = Some((t, f));
        }
    }

    // Endpoint minima of the clamped problem (non-periodic curves).
    if domain.period.is_none() {
        let (f_lo, _, speed_lo, d_lo) = eval_f(domain.lo);
        if f_lo <= 0.0 && d_lo > 1e-12 {
            found.push(Minimum1d {
                t: domain.lo,
                d: d_lo,
                residual: f_lo.abs() / (speed_lo * d_lo),
                boundary: true,
            });
        }
        let (f_hi, _, speed_hi, d_hi) = eval_f(domain.hi);
        if f_hi >= 0.0 && d_hi > 1e-12 {
            found.push(Minimum1d {
                t: domain.hi,
                d: d_hi,
                residual: f_hi.abs() / (speed_hi * d_hi),
                boundary: true,
            });
        }
    }

    dedup_1d(found, &domain, dedup_tol)
}

fn dedup_1d(mut raw: Vec<Minimum1d>, domain: &ParamDomain, tol: f64) -> Vec<Minimum1d> {
    raw.sort_by(|a, b| a.t.total_cmp(&b.t));
    let mut out: Vec<Minimum1d> = Vec::new();
    for m in raw {
        if let Some(last) = out.last_mut() {
            if domain.dist(last.t, m.t) < tol {
                if m.residual < last.residual {
                    *last = m;
                }
                continue;
            }
        }
        out.push(m);
    }
    // periodic wrap: first and last may be the same minimum
    if out.len() > 1 {
        if let Some(_p) = domain.period {
            let first = out[0];
            let last = *out.last().unwrap();
            if domain.dist(first.t, last.t) < tol {
                if last.residual < first.residual {
                    out[0] = last;
                }
                out.pop();
            }
        }
    }
    out
}

/// Unilateral closest-point projection of a fixed point onto a curve, with
/// multiplicity classification.
pub fn unilateral_cpp(x: &Vec3, master: &Curve, s: &SolverSettings) -> Result<MultiplicityReport> {
    if !(x.iter().all(|c| c.is_finite())) {
        return Err(Error::Config("projection point must be finite".into()));
    }
    let domain = ParamDomain::of(master);
    let minima = unilateral_minima(x, master, s);
    if minima.is_empty() {
        return Err(Error::ProjectionFailure(
            "no converged interior minimum and no boundary minimum".into(),
        ));
    }
    let interior: Vec<(f64, f64)> = minima
        .iter()
        .filter(|m| !m.boundary)
        .map(|m| (m.t, m.d))
        .collect();
    let (class, spread) = classify(&interior, &domain, s);
    let mut solutions: Vec<CppState> = minima
        .iter()
        .map(|m| CppState {
            kind: CppKind::Unilateral,
            t1: None,
            t2: m.t,
            theta: None,
            x1: *x,
            x2: master.eval_raw(m.t).position,
            distance: m.d,
            surface_gap: None,
            residual: m.residual,
            boundary: m.boundary,
            kinematics: None,
        })
        .collect();
    solutions.sort_by(|a, b| (a.boundary, a.t2).partial_cmp(&(b.boundary, b.t2)).unwrap());
    Ok(MultiplicityReport {
        class,
        solutions,
        sample_count: s.n_start * master.segments().len(),
        spread,
    })
}

// ---------------------------------------------------------------------------
// Bilateral projection
// ---------------------------------------------------------------------------

struct Bilateral<'a> {
    slave: &'a Curve,
    master: &'a Curve,
    d1: ParamDomain,
    d2: ParamDomain,
}

struct BilateralEval {
    g: Vector2<f64>,
    jac: Matrix2<f64>,
    dist: f64,
    speed1: f64,
    speed2: f64,
    h11: f64,
    h22: f64,
    h12: f64,
}

impl<'a> Bilateral<'a> {
    fn eval(&self, t1: f64, t2: f64) -> BilateralEval {
        let p1 = self.slave.eval_raw(t1);
        let p2 = self.master.eval_raw(t2);
        let diff = p1.position - p2.position;
        let g1 = diff.dot(&p1.d1);
        let g2 = diff.dot(&p2.d1);
        let j11 = p1.d1.norm_squared() + diff.dot(&p1.d2);
        let j12 = -p2.d1.dot(&p1.d1);
        let j21 = p1.d1.dot(&p2.d1);
        let j22 = -p2.d1.norm_squared() + diff.dot(&p2.d2);
        BilateralEval {
            g: Vector2::new(g1, g2),
            jac: Matrix2::new(j11, j12, j21, j22),
            dist: diff.norm(),
            speed1: p1.d1.norm(),
            speed2: p2.d1.norm(),
            h11: 2.0 * j11,
            h22: 2.0 * (p2.d1.norm_squared() - diff.dot(&p2.d2)),
            h12: 2.0 * j12,
        }
    }

    fn scaled_residual(&self, e: &BilateralEval) -> f64 {
        let s1 = e.g[0].abs() / (e.speed1 * e.dist);
        let s2 = e.g[1].abs() / (e.speed2 * e.dist);
        s1.max(s2)
    }

    /// Positive-semidefinite test on the Hessian of the squared distance.
    fn is_minimum(&self, e: &BilateralEval) -> bool {
        let scale = e.h11.abs().max(e.h22.abs()).max(e.h12.abs()).max(1e-300);
        let det = e.h11 * e.h22 - e.h12 * e.h12;
        e.h11 >= -HESS_TOL * scale && e.h22 >= -HESS_TOL * scale && det >= -HESS_TOL * scale * scale
    }
}

/// Minimal-norm (pseudo-inverse) Newton step; handles the singular Jacobians
/// of the constant-distance geometries.
fn newton_step(jac: &Matrix2<f64>, g: &Vector2<f64>) -> Option<Vector2<f64>> {
    let svd = jac.svd(true, true);
    let smax = svd.singular_values.max();
    if smax < 1e-300 {
        return None;
    }
    svd.solve(&(-g), 1e-12 * smax).ok()
}

/// Bilateral closest-point projection between two curves, with multiplicity
/// classification.
pub fn bilateral_cpp(slave: &Curve, master: &Curve, s: &SolverSettings) -> Result<MultiplicityReport> {
    let prob = Bilateral {
        slave,
        master,
        d1: ParamDomain::of(slave),
        d2: ParamDomain::of(master),
    };
    let tol1 = s.dedup_rel * prob.d1.len();
    let tol2 = s.dedup_rel * prob.d2.len();

    let mut interior: Vec<(f64, f64, f64, f64)> = Vec::new(); // t1, t2, d, residual
    let mut starts: Vec<(f64, f64)> = Vec::new();
    for (a_lo, a_hi) in slave.segments() {
        for (b_lo, b_hi) in master.segments() {
            for i in 0..s.n_start {
                for j in 0..s.n_start {
                    starts.push((
                        a_lo + (a_hi - a_lo) * (i as f64 + 0.5) / s.n_start as f64,
                        b_lo + (b_hi - b_lo) * (j as f64 + 0.5) / s.n_start as f64,
                    ));
                }
            }
        }
    }
    let sample_count = starts.len();

    for (t1_0, t2_0) in starts {
        if let Some((t1, t2, e)) = run_start(&prob, t1_0, t2_0, s) {
            if prob.d1.is_boundary(t1, tol1) || prob.d2.is_boundary(t2, tol2) {
                continue;
            }
            if e.dist < 1e-12 {
                continue;
            }
            if !prob.is_minimum(&e) {
                continue;
            }
            interior.push((t1, t2, e.dist, prob.scaled_residual(&e)));
        }
    }

    // deduplicate on the parameter pair
    interior.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    let mut kept: Vec<(f64, f64, f64, f64)> = Vec::new();
    for cand in interior {
        let dup = kept.iter().any(|k| {
            prob.d1.dist(k.0, cand.0) < tol1 && prob.d2.dist(k.1, cand.1) < tol2
        });
        if !dup {
            kept.push(cand);
        }
    }

    // boundary minima from the four edges of the parameter rectangle
    let boundary = boundary_minima(&prob, s);

    if kept.is_empty() && boundary.is_empty() {
        return Err(Error::ProjectionFailure(
            "no converged interior minimum and no boundary minimum".into(),
        ));
    }

    let interior_td: Vec<(f64, f64)> = kept.iter().map(|k| (k.0, k.2)).collect();
    let (mut class, spread) = classify(&interior_td, &prob.d1, s);
    // A continuum may run along the master parameter only (straight slave on
    // a circle axis): re-check the span in t2 as well.
    if class == MultiplicityClass::Multiple {
        let interior_t2: Vec<(f64, f64)> = kept.iter().map(|k| (k.1, k.2)).collect();
        let (c2, _) = classify(&interior_t2, &prob.d2, s);
        if c2 == MultiplicityClass::Continuum {
            class = MultiplicityClass::Continuum;
        }
    }

    let mut solutions: Vec<CppState> = Vec::new();
    for (t1, t2, d, residual) in &kept {
        solutions.push(make_bilateral_state(
            slave, master, *t1, *t2, *d, *residual, false,
        )?);
    }
    for (t1, t2, d, residual) in &boundary {
        solutions.push(make_bilateral_state(
            slave, master, *t1, *t2, *d, *residual, true,
        )?);
    }

    Ok(MultiplicityReport {
        class,
        solutions,
        sample_count,
        spread,
    })
}

fn make_bilateral_state(
    slave: &Curve,
    master: &Curve,
    t1: f64,
    t2: f64,
    d: f64,
    residual: f64,
    boundary: bool,
) -> Result<CppState> {
    let x1 = slave.eval_raw(t1).position;
    let x2 = master.eval_raw(t2).position;
    let kin = diffgeo::contact_kinematics(slave, t1, master, t2, 0.0, 0.0)?;
    Ok(CppState {
        kind: CppKind::Bilateral,
        t1: Some(t1),
        t2,
        theta: None,
        x1,
        x2,
        distance: d,
        surface_gap: None,
        residual,
        boundary,
        kinematics: Some(kin),
    })
}

/// One damped Newton run with a gradient-descent fallback. Returns the
/// converged parameters and the evaluation there.
fn run_start(
    prob: &Bilateral,
    t1_0: f64,
    t2_0: f64,
    s: &SolverSettings,
) -> Option<(f64, f64, BilateralEval)> {
    let (mut t1, mut t2) = (t1_0, t2_0);
    let mut clamped_runs = 0usize;
    for _ in 0..s.max_iter {
        let e = prob.eval(t1, t2);
        if e.dist < 1e-12 {
            return None;
        }
        if prob.scaled_residual(&e) <= s.newton_tol {
            return Some((t1, t2, e));
        }
        let step = newton_step(&e.jac, &e.g)?;
        let gnorm = e.g.norm();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let (n1, c1) = prob.d1.normalize(t1 + lambda * step[0]);
            let (n2, c2) = prob.d2.normalize(t2 + lambda * step[1]);
            let en = prob.eval(n1, n2);
            if en.g.norm() <= gnorm || lambda < 1.0 / 2048.0 {
                accepted = Some((n1, n2, c1 || c2));
                break;
            }
            lambda *= 0.5;
        }
        let (n1, n2, clamped) = accepted?;
        clamped_runs = if clamped { clamped_runs + 1 } else { 0 };
        if clamped_runs >= 4 {
            return None;
        }
        let moved = prob.d1.dist(n1, t1).max(prob.d2.dist(n2, t2));
        t1 = n1;
        t2 = n2;
        if moved < 1e-17 * (prob.d1.len() + prob.d2.len()) {
            let e = prob.eval(t1, t2);
            if prob.scaled_residual(&e) <= s.newton_tol * 10.0 {
                return Some((t1, t2, e));
            }
            break;
        }
    }
    // fallback: gradient descent on the squared distance, then re-polish
    let (mut t1, mut t2) = (t1_0, t2_0);
    let mut step0 = 0.05 * (prob.d1.len().min(prob.d2.len()));
    for _ in 0..200 {
        let e = prob.eval(t1, t2);
        if e.dist < 1e-12 {
            return None;
        }
        // grad of D = |diff|^2 is (2 g1, -2 g2)
        let grad = Vector2::new(2.0 * e.g[0], -2.0 * e.g[1]);
        let gn = grad.norm();
        if gn < 1e-300 {
            break;
        }
        let dval = e.dist * e.dist;
        let mut lambda = step0;
        let mut moved = false;
        for _ in 0..30 {
            let (n1, _) = prob.d1.normalize(t1 - lambda * grad[0] / gn);
            let (n2, _) = prob.d2.normalize(t2 - lambda * grad[1] / gn);
            let en = prob.eval(n1, n2);
            if en.dist * en.dist < dval {
                t1 = n1;
                t2 = n2;
                step0 = lambda * 1.5;
                moved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !moved {
            break;
        }
    }
    for _ in 0..s.max_iter {
        let e = prob.eval(t1, t2);
        if e.dist < 1e-12 {
            return None;
        }
        if prob.scaled_residual(&e) <= s.newton_tol {
            return Some((t1, t2, e));
        }
        let step = newton_step(&e.jac, &e.g)?;
        let (n1, _) = prob.d1.normalize(t1 + step[0]);
        let (n2, _) = prob.d2.normalize(t2 + step[1]);
        if prob.d1.dist(n1, t1).max(prob.d2.dist(n2, t2))
            < 1e-17 * (prob.d1.len() + prob.d2.len())
        {
            break;
        }
        t1 = n1;
        t2 = n2;
    }
    let e = prob.eval(t1, t2);
    if e.dist >= 1e-12 && prob.scaled_residual(&e) <= s.newton_tol {
        Some((t1, t2, e))
    } else {
        None
    }
}

/// Constrained minima on the edges of the parameter rectangle. Each edge
/// fixes one parameter at an interval end and minimizes over the other; a
/// candidate counts only if the distance does not decrease into the
/// interior.
fn boundary_minima(prob: &Bilateral, s: &SolverSettings) -> Vec<(f64, f64, f64, f64)> {
    let mut out: Vec<(f64, f64, f64, f64)> = Vec::new();
    let mut push = |t1: f64, t2: f64| {
        let e = prob.eval(t1, t2);
        if e.dist < 1e-12 {
            return;
        }
        // inward non-decrease conditions; dD/dt1 = 2 g1, dD/dt2 = -2 g2
        let scale1 = e.speed1 * e.dist;
        let scale2 = e.speed2 * e.dist;
        let at_lo1 = prob.d1.period.is_none() && (t1 - prob.d1.lo).abs() < 1e-12 * prob.d1.len();
        let at_hi1 = prob.d1.period.is_none() && (prob.d1.hi - t1).abs() < 1e-12 * prob.d1.len();
        let at_lo2 = prob.d2.period.is_none() && (t2 - prob.d2.lo).abs() < 1e-12 * prob.d2.len();
        let at_hi2 = prob.d2.period.is_none() && (prob.d2.hi - t2).abs() < 1e-12 * prob.d2.len();
        let ok1 = if at_lo1 {
            e.g[0] >= -1e-9 * scale1
        } else if at_hi1 {
            e.g[0] <= 1e-9 * scale1
        } else {
            e.g[0].abs() <= s.newton_tol * 100.0 * scale1
        };
        let ok2 = if at_lo2 {
            e.g[1] <= 1e-9 * scale2
        } else if at_hi2 {
            e.g[1] >= -1e-9 * scale2
        } else {
            e.g[1].abs() <= s.newton_tol * 100.0 * scale2
        };
        if ok1 && ok2 {
            out.push((t1, t2, e.dist, prob.scaled_residual(&e)));
        }
    };

    // edges with t1 fixed
    if prob.d1.period.is_none() {
        for t1 in [prob.d1.lo, prob.d1.hi] {
            let x = prob.slave.eval_raw(t1).position;
            for m in unilateral_minima(&x, prob.master, s) {
                push(t1, m.t);
            }
        }
    }
    // edges with t2 fixed
    if prob.d2.period.is_none() {
        for t2 in [prob.d2.lo, prob.d2.hi] {
            let x = prob.master.eval_raw(t2).position;
            for m in unilateral_minima(&x, prob.slave, s) {
                push(m.t, t2);
            }
        }
    }

    out.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    let tol1 = s.dedup_rel * prob.d1.len();
    let tol2 = s.dedup_rel * prob.d2.len();
    let mut kept: Vec<(f64, f64, f64, f64)> = Vec::new();
    for c in out {
        if !kept
            .iter()
            .any(|k| prob.d1.dist(k.0, c.0) < tol1 && prob.d2.dist(k.1, c.1) < tol2)
        {
            kept.push(c);
        }
    }
    kept
}

// ---------------------------------------------------------------------------
// Tube-surface projection
// ---------------------------------------------------------------------------

/// Orthonormal frame field orthogonal to the tangent, built by projecting a
/// fixed reference direction. Unlike the Frenet frame this stays defined on
/// straight segments and its derivative follows from the first two curve
/// derivatives.
struct TubeFrame<'a> {
    curve: &'a Curve,
    reference: Vec3,
}

impl<'a> TubeFrame<'a> {
    fn new(curve: &'a Curve) -> Result<Self> {
        let (lo, hi) = curve.interval();
        let candidates = [Vec3::z(), Vec3::x(), Vec3::y()];
        let mut best: Option<(f64, Vec3)> = None;
        for c in candidates {
            let mut worst: f64 = f64::INFINITY;
            for i in 0..33 {
                let t = lo + (hi - lo) * i as f64 / 32.0;
                let d1 = curve.eval_raw(t).d1;
                let tangent = d1 / d1.norm();
                worst = worst.min(tangent.cross(&c).norm());
            }
            if best.is_none() || worst > best.unwrap().0 {
                best = Some((worst, c));
            }
        }
        let (worst, reference) = best.unwrap();
        if worst < 1e-6 {
            return Err(Error::DegenerateFrame(
                "no reference direction transversal to the tangent over the whole interval".into(),
            ));
        }
        Ok(Self { curve, reference })
    }

    /// Frame and its derivative: (n, b, n', b') at `t`.
    fn eval(&self, t: f64) -> (Vec3, Vec3, Vec3, Vec3) {
        let p = self.curve.eval_raw(t);
        let speed = p.d1.norm();
        let tangent = p.d1 / speed;
        let dtangent = (p.d2 - tangent * p.d2.dot(&tangent)) / speed;
        let a = self.reference;
        let u = a - tangent * a.dot(&tangent);
        let du = -tangent * a.dot(&dtangent) - dtangent * a.dot(&tangent);
        let nu = u.norm();
        let n = u / nu;
        let dn = (du - n * du.dot(&n)) / nu;
        let b = tangent.cross(&n);
        let db = dtangent.cross(&n) + tangent.cross(&dn);
        (n, b, dn, db)
    }
}

/// Projection of a point onto the tube surface of radius `r2` around the
/// master centerline: `p(t, theta) = r(t) + r2 (cos(theta) n + sin(theta) b)`.
///
/// Returns the surface foot point and the signed surface gap
/// `d_centerline - r2`.
pub fn tube_surface_cpp(
    x: &Vec3,
    master: &Curve,
    r2: f64,
    s: &SolverSettings,
) -> Result<CppState> {
    if !(r2 > 0.0) {
        return Err(Error::Config(format!("tube radius {r2} must be > 0")));
    }
    let centerline = unilateral_cpp(x, master, s)?;
    if centerline.class == MultiplicityClass::Continuum {
        return Err(Error::AmbiguousTheta(
            "unilateral centerline projection is a continuum".into(),
        ));
    }
    let seed = centerline
        .best_interior()
        .or_else(|| centerline.solutions.first())
        .ok_or_else(|| Error::ProjectionFailure("no centerline projection".into()))?;
    if seed.distance < 1e-12 * r2 {
        return Err(Error::AmbiguousTheta("point lies on the centerline".into()));
    }

    let frame = TubeFrame::new(master)?;
    let domain = ParamDomain::of(master);
    let mut t = seed.t2;
    let q0 = x - master.eval_raw(t).position;
    let (n0, b0, _, _) = frame.eval(t);
    let mut theta = q0.dot(&b0).atan2(q0.dot(&n0));

    let eval_res = |t: f64, theta: f64| -> (Vector2<f64>, Vec3, f64, f64) {
        let p = master.eval_raw(t);
        let (n, b, dn, db) = frame.eval(t);
        let (st, ct) = theta.sin_cos();
        let surf = p.position + (n * ct + b * st) * r2;
        let p_t = p.d1 + (dn * ct + db * st) * r2;
        let p_theta = (n * (-st) + b * ct) * r2;
        let q = x - surf;
        (
            Vector2::new(q.dot(&p_t), q.dot(&p_theta)),
            surf,
            p_t.norm(),
            q.norm(),
        )
    };

    let mut boundary = false;
    let mut last_res = f64::INFINITY;
    for _ in 0..s.max_iter {
        let (g, _, pt_norm, qn) = eval_res(t, theta);
        let scale = qn.max(1e-9 * r2);
        let res = (g[0].abs() / (pt_norm * scale)).max(g[1].abs() / (r2 * scale));
        last_res = res;
        if res <= s.newton_tol * 100.0 {
            break;
        }
        // finite-difference Jacobian of the residual
        let h_t = 1e-6 * domain.len().max(1e-6);
        let h_th = 1e-6;
        let (gp_t, _, _, _) = eval_res(t + h_t, theta);
        let (gm_t, _, _, _) = eval_res(t - h_t, theta);
        let (gp_h, _, _, _) = eval_res(t, theta + h_th);
        let (gm_h, _, _, _) = eval_res(t, theta - h_th);
        let jac = Matrix2::new(
            (gp_t[0] - gm_t[0]) / (2.0 * h_t),
            (gp_h[0] - gm_h[0]) / (2.0 * h_th),
            (gp_t[1] - gm_t[1]) / (2.0 * h_t),
            (gp_h[1] - gm_h[1]) / (2.0 * h_th),
        );
        let step = newton_step(&jac, &g)
            .ok_or_else(|| Error::ProjectionFailure("singular tube Jacobian".into()))?;
        let gnorm = g.norm();
        let mut lambda = 1.0;
        for _ in 0..12 {
            let (tn, clamped) = domain.normalize(t + lambda * step[0]);
            let thn = theta + lambda * step[1];
            let (gn, _, _, _) = eval_res(tn, thn);
            if gn.norm() <= gnorm || lambda < 1.0 / 2048.0 {
                t = tn;
                theta = thn;
                boundary = clamped;
                break;
            }
            lambda *= 0.5;
        }
    }
    let (g, surf, pt_norm, qn) = eval_res(t, theta);
    let scale = qn.max(1e-9 * r2);
    let res = (g[0].abs() / (pt_norm * scale)).max(g[1].abs() / (r2 * scale));
    if res > 1e-8 && last_res > 1e-8 {
        return Err(Error::ProjectionFailure(format!(
            "tube-surface Newton did not converge (residual {res:.3e})"
        )));
    }
    let d_center = (x - master.eval_raw(t).position).norm();
    let theta_n = theta.rem_euclid(std::f64::consts::TAU);
    Ok(CppState {
        kind: CppKind::TubeSurface,
        t1: None,
        t2: t,
        theta: Some(theta_n),
        x1: *x,
        x2: surf,
        distance: qn,
        surface_gap: Some(d_center - r2),
        residual: res,
        boundary,
        kinematics: None,
    })
}

// ---------------------------------------------------------------------------
// Brute-force oracle
// ---------------------------------------------------------------------------

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Grid-sampling oracle for the bilateral projection. Completely independent
/// of the Newton machinery: distance samples on an n-by-n grid, grid-local
/// minima, coordinate-wise golden-section refinement, deduplication and the
/// same multiplicity classification as the solver.
pub fn brute_force_oracle(
    slave: &Curve,
    master: &Curve,
    n: usize,
    s: &SolverSettings,
) -> Result<MultiplicityReport> {
    if n < 100 {
        return Err(Error::Config(format!(
            "oracle needs at least 100 samples per direction, got {n}"
        )));
    }
    let d1 = ParamDomain::of(slave);
    let d2 = ParamDomain::of(master);
    let dist = |t1: f64, t2: f64| -> f64 {
        (slave.eval_raw(t1).position - master.eval_raw(t2).position).norm()
    };

    let n1 = if d1.period.is_some() { n } else { n + 1 };
    let n2 = if d2.period.is_some() { n } else { n + 1 };
    let step1 = d1.len() / n as f64;
    let step2 = d2.len() / n as f64;
    let grid1: Vec<f64> = (0..n1).map(|i| d1.lo + step1 * i as f64).collect();
    let grid2: Vec<f64> = (0..n2).map(|j| d2.lo + step2 * j as f64).collect();
    let mut values = vec![0.0f64; n1 * n2];
    for (i, &t1) in grid1.iter().enumerate() {
        for (j, &t2) in grid2.iter().enumerate() {
            values[i * n2 + j] = dist(t1, t2);
        }
    }
    let at = |i: isize, j: isize| -> Option<f64> {
        let i = if d1.period.is_some() {
            i.rem_euclid(n1 as isize)
        } else if i < 0 || i >= n1 as isize {
            return None;
        } else {
            i
        };
        let j = if d2.period.is_some() {
            j.rem_euclid(n2 as isize)
        } else if j < 0 || j >= n2 as isize {
            return None;
        } else {
            j
        };
        Some(values[i as usize * n2 + j as usize])
    };

    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 0..n1 as isize {
        for j in 0..n2 as isize {
            let v = values[i as usize * n2 + j as usize];
            let mut is_min = true;
            'nb: for di in -1..=1 {
                for dj in -1..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    if let Some(w) = at(i + di, j + dj) {
                        if w < v {
                            is_min = false;
                            break 'nb;
                        }
                    }
                }
            }
            if is_min {
                candidates.push((grid1[i as usize], grid2[j as usize]));
            }
        }
    }

    // refine by coordinate descent
    let refine_tol1 = 1e-11 * d1.len();
    let refine_tol2 = 1e-11 * d2.len();
    let mut refined: Vec<(f64, f64, f64)> = Vec::new();
    for (mut t1, mut t2) in candidates {
        for _ in 0..300 {
            let t1_old = t1;
            let t2_old = t2;
            let (a1, b1) = bracket(t1, step1, &d1);
            t1 = golden_min(&|u| dist(wrapped(u, &d1), t2), a1, b1, refine_tol1);
            t1 = wrapped(t1, &d1);
            let (a2, b2) = bracket(t2, step2, &d2);
            t2 = golden_min(&|u| dist(t1, wrapped(u, &d2)), a2, b2, refine_tol2);
            t2 = wrapped(t2, &d2);
            if d1.dist(t1, t1_old) < 1e-9 * d1.len() && d2.dist(t2, t2_old) < 1e-9 * d2.len() {
                break;
            }
        }
        refined.push((t1, t2, dist(t1, t2)));
    }

    // deduplicate
    refined.sort_by(|a, b| (a.0, a.1).partial_cmp(&(b.0, b.1)).unwrap());
    let tol1 = (1e-6 * d1.len()).max(2.0 * refine_tol1);
    let tol2 = (1e-6 * d2.len()).max(2.0 * refine_tol2);
    let mut kept: Vec<(f64, f64, f64)> = Vec::new();
    for c in refined {
        if let Some(k) = kept
            .iter_mut()
            .find(|k| d1.dist(k.0, c.0) < tol1 && d2.dist(k.1, c.1) < tol2)
        {
            if c.2 < k.2 {
                *k = c;
            }
            continue;
        }
        kept.push(c);
    }

    let boundary_tol1 = 1e-7 * d1.len();
    let boundary_tol2 = 1e-7 * d2.len();
    let mut interior: Vec<(f64, f64)> = Vec::new();
    let mut interior_t2: Vec<(f64, f64)> = Vec::new();
    let mut solutions: Vec<CppState> = Vec::new();
    for (t1, t2, d) in &kept {
        let boundary = d1.is_boundary(*t1, boundary_tol1) || d2.is_boundary(*t2, boundary_tol2);
        if !boundary {
            interior.push((*t1, *d));
            interior_t2.push((*t2, *d));
        }
        solutions.push(CppState {
            kind: CppKind::Bilateral,
            t1: Some(*t1),
            t2: *t2,
            theta: None,
            x1: slave.eval_raw(*t1).position,
            x2: master.eval_raw(*t2).position,
            distance: *d,
            surface_gap: None,
            residual: f64::NAN,
            boundary,
            kinematics: None,
        });
    }
    if solutions.is_empty() {
        return Err(Error::ProjectionFailure("oracle found no minima".into()));
    }
    let (mut class, spread) = classify(&interior, &d1, s);
    if class == MultiplicityClass::Multiple {
        let (c2, _) = classify(&interior_t2, &d2, s);
        if c2 == MultiplicityClass::Continuum {
            class = MultiplicityClass::Continuum;
        }
    }
    solutions.sort_by(|a, b| {
        (a.boundary, a.t1.unwrap(), a.t2)
            .partial_cmp(&(b.boundary, b.t1.unwrap(), b.t2))
            .unwrap()
    });
    Ok(MultiplicityReport {
        class,
        solutions,
        sample_count: n1 * n2,
        spread,
    })
}

fn bracket(t: f64, step: f64, d: &ParamDomain) -> (f64, f64) {
    match d.period {
        Some(_) => (t - step, t + step),
        None => ((t - step).max(d.lo), (t + step).min(d.hi)),
    }
}

fn wrapped(t: f64, d: &ParamDomain) -> f64 {
    d.normalize(t).0
}
