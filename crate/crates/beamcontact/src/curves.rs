//! Parametric space curves with analytic first and second derivatives.
//!
//! All curve variants are immutable after construction and evaluation is a
//! pure function, so curves can be shared freely across threads.

use nalgebra::Vector3;

use crate::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Unit-length tolerance for constructor inputs.
const UNIT_TOL: f64 = 1e-12;

/// Finite-difference step used for the derivatives of the offset normal
/// field. Chosen near the optimum for a second central difference in f64
/// (truncation ~ h^2, roundoff ~ eps / h^2).
const OFFSET_FD_STEP: f64 = 1e-4;

/// Normal field used by the parallel-offset construction.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalField {
    /// Frenet normal of the base curve. Requires nonvanishing curvature.
    Frenet,
    /// A constant direction, projected orthogonal to the tangent and
    /// renormalized at every parameter.
    Constant(Vec3),
}

#[derive(Debug, Clone)]
enum CurveKind {
    Line {
        base: Vec3,
        dir: Vec3,
    },
    CircleArc {
        center: Vec3,
        radius: f64,
        u: Vec3,
        v: Vec3,
    },
    Helix {
        axis_point: Vec3,
        radius: f64,
        slope: f64,
        phase: f64,
        u: Vec3,
        v: Vec3,
        w: Vec3,
    },
    HermiteSpline {
        nodes: Vec<(Vec3, Vec3)>,
    },
    ParallelOffset {
        base: Box<Curve>,
        offset: f64,
        field: NormalField,
    },
}

/// A parametric space curve over a closed parameter interval.
#[derive(Debug, Clone)]
pub struct Curve {
    kind: CurveKind,
    t_lo: f64,
    t_hi: f64,
}

/// Curve evaluation result: position plus first and second derivative.
#[derive(Debug, Clone, Copy)]
pub struct ParamPoint {
    pub t: f64,
    pub position: Vec3,
    pub d1: Vec3,
    pub d2: Vec3,
}

fn check_unit(v: &Vec3, what: &str) -> Result<()> {
    if (v.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidCurve(format!(
            "{what} must be unit length (norm = {})",
            v.norm()
        )));
    }
    Ok(())
}

fn check_interval(t_lo: f64, t_hi: f64) -> Result<()> {
    if !(t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi) {
        return Err(Error::InvalidCurve(format!(
            "invalid parameter interval [{t_lo}, {t_hi}]"
        )));
    }
    Ok(())
}

/// Deterministic orthonormal complement of a unit vector `w`.
fn orthonormal_basis(w: &Vec3) -> (Vec3, Vec3) {
    let reference = if w.z.abs() < 0.9 {
        Vec3::z()
    } else {
        Vec3::x()
    };
    let u = (reference - w * reference.dot(w)).normalize();
    let v = w.cross(&u);
    (u, v)
}

impl Curve {
    /// Straight line `base + t * dir` with unit direction.
    pub fn line(base: Vec3, dir: Vec3, t_lo: f64, t_hi: f64) -> Result<Self> {
        check_unit(&dir, "line direction")?;
        check_interval(t_lo, t_hi)?;
        Ok(Self {
            kind: CurveKind::Line { base, dir },
            t_lo,
            t_hi,
        })
    }

    /// Circular arc `center + radius * (cos t * u + sin t * v)`.
    pub fn circle_arc(
        center: Vec3,
        radius: f64,
        u: Vec3,
        v: Vec3,
        t_lo: f64,
        t_hi: f64,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidCurve(format!("circle radius {radius} must be > 0")));
        }
        check_unit(&u, "circle basis u")?;
        check_unit(&v, "circle basis v")?;
        if u.dot(&v).abs() > UNIT_TOL {
            return Err(Error::InvalidCurve(
                "circle basis vectors must be orthogonal".into(),
            ));
        }
        check_interval(t_lo, t_hi)?;
        Ok(Self {
            kind: CurveKind::CircleArc { center, radius, u, v },
            t_lo,
            t_hi,
        })
    }

    /// Full circle over one period, evaluated periodically by the solvers.
    pub fn full_circle(center: Vec3, radius: f64, plane_normal: Vec3) -> Result<Self> {
        check_unit(&plane_normal, "circle plane normal")?;
        let (u, v) = orthonormal_basis(&plane_normal);
        Self::circle_arc(center, radius, u, v, 0.0, std::f64::consts::TAU)
    }

    /// Circular arc in the plane with the given normal, with an in-plane
    /// basis derived deterministically from the normal.
    pub fn circle_arc_with_normal(
        center: Vec3,
        radius: f64,
        plane_normal: Vec3,
        t_lo: f64,
        t_hi: f64,
    ) -> Result<Self> {
        check_unit(&plane_normal, "circle plane normal")?;
        let (u, v) = orthonormal_basis(&plane_normal);
        Self::circle_arc(center, radius, u, v, t_lo, t_hi)
    }

    /// Helix `axis_point + r cos(t + phase) u + r sin(t + phase) v + h t w`
    /// with `w` the unit axis direction and `(u, v, w)` orthonormal.
    pub fn helix(
        axis_point: Vec3,
        axis_dir: Vec3,
        radius: f64,
        slope: f64,
        phase: f64,
        t_lo: f64,
        t_hi: f64,
    ) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidCurve(format!("helix radius {radius} must be > 0")));
        }
        if !(slope >= 0.0) {
            return Err(Error::InvalidCurve(format!("helix slope {slope} must be >= 0")));
        }
        check_unit(&axis_dir, "helix axis direction")?;
        check_interval(t_lo, t_hi)?;
        let (u, v) = orthonormal_basis(&axis_dir);
        Ok(Self {
            kind: CurveKind::Helix {
                axis_point,
                radius,
                slope,
                phase,
                u,
                v,
                w: axis_dir,
            },
            t_lo,
            t_hi,
        })
    }

    /// Cubic Hermite spline through `nodes` of (position, tangent), one unit
    /// of parameter per segment: segment `i` covers `t in [i, i+1]`.
    pub fn hermite(nodes: Vec<(Vec3, Vec3)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidCurve(
                "Hermite spline needs at least 2 nodes".into(),
            ));
        }
        let t_hi = (nodes.len() - 1) as f64;
        Ok(Self {
            kind: CurveKind::HermiteSpline { nodes },
            t_lo: 0.0,
            t_hi,
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t_lo, self.t_hi)
    }

    pub fn span(&self) -> f64 {
        self.t_hi - self.t_lo
    }

    /// Period of a closed curve, if the interval covers exactly one period.
    pub fn period(&self) -> Option<f64> {
        match &self.kind {
            CurveKind::CircleArc { .. } => {
                if (self.span() - std::f64::consts::TAU).abs() < 1e-9 {
                    Some(std::f64::consts::TAU)
                } else {
                    None
                }
            }
            CurveKind::ParallelOffset { base, .. } => {
                let p = base.period()?;
                if (self.span() - p).abs() < 1e-9 {
                    Some(p)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Sub-intervals inside which the curve is smooth (one per Hermite
    /// segment, otherwise the whole interval). Multi-start solvers seed per
    /// segment.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        match &self.kind {
            CurveKind::HermiteSpline { nodes } => (0..nodes.len() - 1)
                .map(|i| (i as f64, (i + 1) as f64))
                .collect(),
            CurveKind::ParallelOffset { base, .. } => base.segments(),
            _ => vec![(self.t_lo, self.t_hi)],
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_lo && t <= self.t_hi
    }

    /// Evaluate position and two derivatives at `t`, checking the domain.
    pub fn evaluate_with_derivatives(&self, t: f64) -> Result<ParamPoint> {
        if !self.contains(t) {
            return Err(Error::Domain {
                t,
                lo: self.t_lo,
                hi: self.t_hi,
            });
        }
        Ok(self.eval_raw(t))
    }

    /// Evaluate without a domain check. The closed-form variants extend
    /// smoothly beyond the interval; Hermite splines extrapolate their end
    /// segments. Solvers rely on this for finite differencing near the ends.
    pub fn eval_raw(&self, t: f64) -> ParamPoint {
        match &self.kind {
            CurveKind::Line { base, dir } => ParamPoint {
                t,
                position: base + dir * t,
                d1: *dir,
                d2: Vec3::zeros(),
            },
            CurveKind::CircleArc { center, radius, u, v } => {
                let (s, c) = t.sin_cos();
                ParamPoint {
                    t,
                    position: center + (u * c + v * s) * *radius,
                    d1: (u * (-s) + v * c) * *radius,
                    d2: (u * c + v * s) * (-radius),
                }
            }
            CurveKind::Helix {
                axis_point,
                radius,
                slope,
                phase,
                u,
                v,
                w,
            } => {
                let (s, c) = (t + phase).sin_cos();
                ParamPoint {
                    t,
                    position: axis_point + u * (radius * c) + v * (radius * s) + w * (slope * t),
                    d1: u * (-radius * s) + v * (radius * c) + w * *slope,
                    d2: u * (-radius * c) + v * (-radius * s),
                }
            }
            CurveKind::HermiteSpline { nodes } => {
                let n_seg = nodes.len() - 1;
                let i = (t.floor() as isize).clamp(0, n_seg as isize - 1) as usize;
                let s = t - i as f64;
                let (p0, m0) = nodes[i];
                let (p1, m1) = nodes[i + 1];
                let s2 = s * s;
                let s3 = s2 * s;
                let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
                let h10 = s3 - 2.0 * s2 + s;
                let h01 = -2.0 * s3 + 3.0 * s2;
                let h11 = s3 - s2;
                let dh00 = 6.0 * s2 - 6.0 * s;
                let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
                let dh01 = -6.0 * s2 + 6.0 * s;
                let dh11 = 3.0 * s2 - 2.0 * s;
                let ddh00 = 12.0 * s - 6.0;
                let ddh10 = 6.0 * s - 4.0;
                let ddh01 = -12.0 * s + 6.0;
                let ddh11 = 6.0 * s - 2.0;
                ParamPoint {
                    t,
                    position: p0 * h00 + m0 * h10 + p1 * h01 + m1 * h11,
                    d1: p0 * dh00 + m0 * dh10 + p1 * dh01 + m1 * dh11,
                    d2: p0 * ddh00 + m0 * ddh10 + p1 * ddh01 + m1 * ddh11,
                }
            }
            CurveKind::ParallelOffset { base, offset, field } => {
                let bp = base.eval_raw(t);
                let h = OFFSET_FD_STEP;
                let e0 = normal_field_dir(base, t, field);
                let ep = normal_field_dir(base, t + h, field);
                let em = normal_field_dir(base, t - h, field);
                let de = (ep - em) / (2.0 * h);
                let dde = (ep - e0 * 2.0 + em) / (h * h);
                ParamPoint {
                    t,
                    position: bp.position + e0 * *offset,
                    d1: bp.d1 + de * *offset,
                    d2: bp.d2 + dde * *offset,
                }
            }
        }
    }

    /// Arc length between `t0` and `t1` by adaptive quadrature of the speed,
    /// relative tolerance 1e-10.
    pub fn arc_length(&self, t0: f64, t1: f64) -> Result<f64> {
        if !(self.contains(t0) && self.contains(t1)) {
            let bad = if self.contains(t0) { t1 } else { t0 };
            return Err(Error::Domain {
                t: bad,
                lo: self.t_lo,
                hi: self.t_hi,
            });
        }
        if t0 > t1 {
            return Err(Error::InvalidCurve(format!(
                "arc_length requires t0 <= t1, got {t0} > {t1}"
            )));
        }
        if t0 == t1 {
            return Ok(0.0);
        }
        let speed = |t: f64| self.eval_raw(t).d1.norm();
        Ok(adaptive_simpson(&speed, t0, t1, 1e-10))
    }

    /// Total arc length of the parameter interval.
    pub fn total_arc_length(&self) -> f64 {
        self.arc_length(self.t_lo, self.t_hi).expect("interval endpoints in domain")
    }
}

/// Unit normal field of `base` at `t` for the parallel-offset construction.
///
/// The Frenet variant takes the component of the second derivative
/// orthogonal to the tangent; the constant variant projects a fixed
/// direction orthogonal to the tangent. Both are renormalized.
pub(crate) fn normal_field_dir(base: &Curve, t: f64, field: &NormalField) -> Vec3 {
    let p = base.eval_raw(t);
    let tangent = p.d1.normalize();
    let raw = match field {
        NormalField::Frenet => p.d2 - tangent * p.d2.dot(&tangent),
        NormalField::Constant(c) => c - tangent * c.dot(&tangent),
    };
    raw.normalize()
}

/// Build the parallel-offset curve `r_b(t) = r_a(t) + d0 * e_a(t)`.
///
/// For the Frenet field the base curvature must stay above the degeneracy
/// tolerance over the whole interval; the constant field must never become
/// parallel to the tangent.
pub fn make_parallel_curve(base: &Curve, d0: f64, field: NormalField) -> Result<Curve> {
    if !(d0 > 0.0) {
        return Err(Error::InvalidCurve(format!("offset d0 = {d0} must be > 0")));
    }
    let (lo, hi) = base.interval();
    let kappa_tol = 1e-10 / base.total_arc_length();
    let n_check = 101;
    for i in 0..n_check {
        let t = lo + (hi - lo) * i as f64 / (n_check - 1) as f64;
        let p = base.eval_raw(t);
        let speed = p.d1.norm();
        if speed < 1e-14 {
            return Err(Error::DegenerateParametrization(format!(
                "vanishing first derivative at t = {t}"
            )));
        }
        match &field {
            NormalField::Frenet => {
                let kappa = p.d1.cross(&p.d2).norm() / (speed * speed * speed);
                if kappa < kappa_tol {
                    return Err(Error::DegenerateFrame(format!(
                        "Frenet normal field undefined at t = {t} (curvature {kappa} below tolerance)"
                    )));
                }
            }
            NormalField::Constant(c) => {
                let tangent = p.d1 / speed;
                if (c - tangent * c.dot(&tangent)).norm() < 1e-10 {
                    return Err(Error::DegenerateFrame(format!(
                        "constant field direction parallel to tangent at t = {t}"
                    )));
                }
            }
        }
    }
    Ok(Curve {
        kind: CurveKind::ParallelOffset {
            base: Box::new(base.clone()),
            offset: d0,
            field,
        },
        t_lo: lo,
        t_hi: hi,
    })
}

/// Adaptive Simpson quadrature with relative tolerance on the whole value.
fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)
        }
    }
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, a, b);
    let eps = rel_tol * whole.abs().max(1e-300);
    recurse(f, a, b, fa, fm, fb, whole, eps, 48)
}
