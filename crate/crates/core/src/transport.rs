//! Line integrals, path-ordered exponentials and holonomies along polylines.
//!
//! Transports use `P exp(+i g0 int T.A.dy)` with the factor for the piece
//! nearest the curve's end leftmost. The holonomy `u` of a closed loop carries
//! the opposite sign, `exp(-i q oint A.dy)`, and is computed as the transport
//! around the reversed loop.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::gauge::{su2_exp_antihermitian, GaugePotential, GroupKind, LieAlgebraBasis, Mat2};
use crate::geom::{self, Point};
use crate::grid::C64;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Curve {
    points: Vec<Point>,
    closed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl Curve {
    /// Validated polyline. For closed curves a repeated final point is dropped.
    pub fn new(mut points: Vec<Point>, closed: bool) -> Result<Self> {
        if closed && points.len() > 2 && points.first() == points.last() {
            points.pop();
        }
        if points.len() < 2 {
            return Err(Error::InvalidCurve("need at least two points".into()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("non-finite coordinate".into()));
        }
        for w in points.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidCurve(format!("repeated consecutive point {:?}", w[0])));
            }
        }
        if closed && points.len() < 3 {
            return Err(Error::InvalidCurve("closed curve needs at least three points".into()));
        }
        let curve = Self { points, closed, label: None };
        if !(curve.length() > 0.0) {
            return Err(Error::InvalidCurve("zero length".into()));
        }
        Ok(curve)
    }

    pub fn segment(from: Point, to: Point) -> Result<Self> {
        Self::new(vec![from, to], false)
    }

    pub fn polyline(points: Vec<Point>) -> Result<Self> {
        Self::new(points, false)
    }

    pub fn polygon(points: Vec<Point>) -> Result<Self> {
        Self::new(points, true)
    }

    /// Closed polygon approximating a circle traversed `winding` times
    /// (negative winding is clockwise), starting at angle 0.
    pub fn circle(center: Point, radius: f64, winding: i32, samples_per_turn: usize) -> Result<Self> {
        if !(radius > 0.0) || winding == 0 || samples_per_turn < 3 {
            return Err(Error::InvalidCurve(format!(
                "circle needs radius > 0, winding != 0, >= 3 samples (got {radius}, {winding}, {samples_per_turn})"
            )));
        }
        let n = samples_per_turn * winding.unsigned_abs() as usize;
        let sign = winding.signum() as f64;
        let pts = (0..n)
            .map(|i| {
                let t = sign * TAU * i as f64 / samples_per_turn as f64;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        Self::new(pts, true)
    }

    /// Open arc from `start` to `end` angle (radians, either direction).
    pub fn arc(center: Point, radius: f64, start: f64, end: f64, samples: usize) -> Result<Self> {
        if !(radius > 0.0) || samples < 1 {
            return Err(Error::InvalidCurve("arc needs radius > 0 and samples >= 1".into()));
        }
        let pts = (0..=samples)
            .map(|i| {
                let t = start + (end - start) * i as f64 / samples as f64;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        Self::new(pts, false)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn start(&self) -> Point {
        self.points[0]
    }

    /// Final point; for closed curves this is the start.
    pub fn end(&self) -> Point {
        if self.closed {
            self.points[0]
        } else {
            *self.points.last().unwrap()
        }
    }

    /// `end - start`: the translation `l` the curve implements.
    pub fn displacement(&self) -> Point {
        geom::sub(self.end(), self.start())
    }

    /// Straight segments, including the closing one for closed curves.
    pub fn segments(&self) -> Vec<(Point, Point)> {
        let mut out: Vec<(Point, Point)> = self.points.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed {
            out.push((*self.points.last().unwrap(), self.points[0]));
        }
        out
    }

    pub fn length(&self) -> f64 {
        self.segments().iter().map(|(a, b)| geom::norm(geom::sub(*b, *a))).sum()
    }

    /// Open curve whose points all lie on the line from start to end, in order.
    pub fn is_straight(&self) -> bool {
        if self.closed {
            return false;
        }
        let (a, b) = (self.start(), self.end());
        let d = geom::sub(b, a);
        let len = geom::norm(d);
        if len == 0.0 {
            return false;
        }
        let mut last = 0.0;
        for p in &self.points {
            let r = geom::sub(*p, a);
            if geom::cross(d, r).abs() > 1e-12 * len * len.max(1.0) {
                return false;
            }
            let s = geom::dot(d, r) / (len * len);
            if s < last - 1e-12 {
                return false;
            }
            last = s;
        }
        true
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        if self.closed {
            // Keep the same base point.
            points[1..].reverse();
        } else {
            points.reverse();
        }
        Self { points, closed: self.closed, label: self.label.clone() }
    }

    pub fn translated(&self, d: Point) -> Self {
        Self {
            points: self.points.iter().map(|p| geom::add(*p, d)).collect(),
            closed: self.closed,
            label: self.label.clone(),
        }
    }

    /// Open curve that follows `self` then `next`; a joining segment is
    /// inserted when `next` does not start at `self.end()`.
    pub fn then(&self, next: &Curve) -> Result<Self> {
        let mut pts = self.points.clone();
        if self.closed {
            pts.push(self.points[0]);
        }
        let mut tail = next.points.clone();
        if next.closed {
            tail.push(next.points[0]);
        }
        if *pts.last().unwrap() == tail[0] {
            tail.remove(0);
        }
        pts.extend(tail);
        Self::new(pts, false)
    }

    /// Close an open curve, adding the segment back to the start.
    pub fn closed(&self) -> Result<Self> {
        Self::new(self.points.clone(), true)
    }

    /// Split an open curve at arc-length fraction `s` in (0, 1).
    pub fn split(&self, s: f64) -> Result<(Curve, Curve)> {
        if self.closed || !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidCurve(format!("cannot split at {s}")));
        }
        let target = s * self.length();
        let mut acc = 0.0;
        for (i, w) in self.points.windows(2).enumerate() {
            let l = geom::norm(geom::sub(w[1], w[0]));
            if acc + l >= target {
                let f = (target - acc) / l;
                let mid = geom::lerp(w[0], w[1], f);
                let mut first: Vec<Point> = self.points[..=i].to_vec();
                let mut second: Vec<Point> = vec![mid];
                if mid != w[0] {
                    first.push(mid);
                }
                if mid == w[1] {
                    second.extend_from_slice(&self.points[i + 2..]);
                } else {
                    second.extend_from_slice(&self.points[i + 1..]);
                }
                return Ok((Self::new(first, false)?, Self::new(second, false)?));
            }
            acc += l;
        }
        Err(Error::InvalidCurve(format!("cannot split at {s}")))
    }

    /// Total signed angle swept around `c`, in turns. Integral for closed curves.
    pub fn winding_about(&self, c: Point) -> f64 {
        self.segments().iter().map(|(a, b)| geom::subtended_angle(c, *a, *b)).sum::<f64>() / TAU
    }

    /// Winding number of a closed curve about `c`, rounded.
    pub fn winding_number(&self, c: Point) -> i64 {
        self.winding_about(c).round() as i64
    }

    pub fn min_distance_to(&self, c: Point) -> f64 {
        self.segments()
            .iter()
            .map(|(a, b)| geom::distance_to_segment(c, *a, *b))
            .fold(f64::INFINITY, f64::min)
    }
}

/// A transport or holonomy: `d x d` unitary embedded in a 2x2 matrix
/// (U(1) uses the `(0, 0)` entry).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    basis: LieAlgebraBasis,
    matrix: Mat2,
}

pub const UNITARITY_TOL: f64 = 1e-10;

impl GroupElement {
    pub fn identity(basis: LieAlgebraBasis) -> Self {
        Self { basis, matrix: Mat2::identity() }
    }

    pub fn from_matrix(basis: LieAlgebraBasis, mut matrix: Mat2) -> Result<Self> {
        if basis.group == GroupKind::U1 {
            matrix[(0, 1)] = C64::new(0.0, 0.0);
            matrix[(1, 0)] = C64::new(0.0, 0.0);
            matrix[(1, 1)] = C64::new(1.0, 0.0);
        }
        let e = Self { basis, matrix };
        let r = e.unitarity_residual();
        if !(r <= UNITARITY_TOL) {
            return Err(Error::OutOfRange { what: "unitarity residual", value: format!("{r:e}") });
        }
        Ok(e)
    }

    /// U(1) element `e^{i theta}`.
    pub fn phase(basis: LieAlgebraBasis, theta: f64) -> Self {
        let mut m = Mat2::identity();
        m[(0, 0)] = C64::from_polar(1.0, theta);
        Self { basis, matrix: m }
    }

    pub fn basis(&self) -> LieAlgebraBasis {
        self.basis
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.matrix
    }

    /// The U(1) value (or the `(0, 0)` entry for SU(2)).
    pub fn scalar(&self) -> C64 {
        self.matrix[(0, 0)]
    }

    /// `arg` of the U(1) value, in (-pi, pi].
    pub fn angle(&self) -> f64 {
        self.scalar().arg()
    }

    pub fn unitarity_residual(&self) -> f64 {
        (self.matrix * self.matrix.adjoint() - Mat2::identity()).norm()
    }

    /// Frobenius distance between the matrices (bounds the operator-norm distance).
    pub fn distance(&self, other: &GroupElement) -> f64 {
        (self.matrix - other.matrix).norm()
    }

    pub(crate) fn raw(basis: LieAlgebraBasis, matrix: Mat2) -> Self {
        Self { basis, matrix }
    }
}

/// Matrix product `a . b` (apply `b` first).
pub fn compose(a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
    if a.basis != b.basis {
        return Err(Error::KindMismatch);
    }
    GroupElement::from_matrix(a.basis, a.matrix * b.matrix)
}

pub fn inverse(a: &GroupElement) -> GroupElement {
    GroupElement { basis: a.basis, matrix: a.matrix.adjoint() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    /// Relative stopping tolerance between successive refinements.
    pub rtol: f64,
    /// Maximum number of refinement levels per piece.
    pub max_levels: usize,
    /// Use the closed form for pure flux-line and uniform potentials.
    pub use_closed_form: bool,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, max_levels: 12, use_closed_form: true }
    }
}

impl TransportOptions {
    pub fn numeric() -> Self {
        Self { use_closed_form: false, ..Self::default() }
    }
}

fn check_excluded(a: &GaugePotential, p: Point, q: Point) -> Result<()> {
    for disc in a.excluded_regions() {
        if disc.hit_by_segment(p, q) {
            return Err(Error::ExcludedRegion { cx: disc.center[0], cy: disc.center[1], radius: disc.radius });
        }
    }
    for c in a.singular_points() {
        if geom::distance_to_segment(c, p, q) < 1e-12 {
            return Err(Error::ExcludedRegion { cx: c[0], cy: c[1], radius: 0.0 });
        }
    }
    Ok(())
}

/// Break `p -> q` into pieces no longer than half their distance to any
/// singular point, so each piece sees a smooth integrand.
fn pieces(a: &GaugePotential, p: Point, q: Point) -> Vec<(Point, Point)> {
    let singular: Vec<Point> = a.singular_points().collect();
    let mut out = Vec::new();
    let mut stack = vec![(p, q, 0u32)];
    while let Some((s, e, depth)) = stack.pop() {
        let len = geom::norm(geom::sub(e, s));
        let near = singular.iter().map(|c| geom::distance_to_segment(*c, s, e)).fold(f64::INFINITY, f64::min);
        if depth < 48 && len > 0.5 * near {
            let m = geom::lerp(s, e, 0.5);
            // Pushed in reverse so pieces come out in order.
            stack.push((m, e, depth + 1));
            stack.push((s, m, depth + 1));
        } else {
            out.push((s, e));
        }
    }
    out
}

fn sample_dot(a: &GaugePotential, p: Point, d: Point, t: f64) -> [f64; 3] {
    let v = a.sample(p, t);
    [geom::dot(v[0], d), geom::dot(v[1], d), geom::dot(v[2], d)]
}

/// Romberg integration of `int_0^1 A(p + s d).d ds`, all components at once.
fn romberg_piece(a: &GaugePotential, p: Point, q: Point, t: f64, opts: &TransportOptions) -> Result<[f64; 3]> {
    let d = geom::sub(q, p);
    let f = |s: f64| sample_dot(a, geom::lerp(p, q, s), d, t);
    let (fa, fb) = (f(0.0), f(1.0));
    let mut trap = [0.0; 3];
    for k in 0..3 {
        trap[k] = 0.5 * (fa[k] + fb[k]);
    }
    let mut prev_row: Vec<[f64; 3]> = vec![trap];
    let mut change = f64::INFINITY;
    for level in 1..=opts.max_levels {
        let n = 1usize << (level - 1);
        let h = 1.0 / n as f64;
        let mut mid = [0.0; 3];
        for i in 0..n {
            let v = f((i as f64 + 0.5) * h);
            for k in 0..3 {
                mid[k] += v[k];
            }
        }
        let mut row = Vec::with_capacity(level + 1);
        let mut t0 = [0.0; 3];
        for k in 0..3 {
            t0[k] = 0.5 * (prev_row[0][k] + h * mid[k]);
        }
        row.push(t0);
        let mut factor = 1.0;
        for j in 1..=level {
            factor *= 4.0;
            let mut r = [0.0; 3];
            for k in 0..3 {
                r[k] = row[j - 1][k] + (row[j - 1][k] - prev_row[j - 1][k]) / (factor - 1.0);
            }
            row.push(r);
        }
        let best = row[level];
        let last = prev_row[level - 1];
        change = (0..3).map(|k| (best[k] - last[k]).abs()).fold(0.0, f64::max);
        let scale = best.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if level >= 3 && change <= opts.rtol * scale {
            return Ok(best);
        }
        prev_row = row;
    }
    Err(Error::NonConvergence { levels: opts.max_levels, change })
}

/// Component-wise `int_curve A^k . dy` at time `t`.
pub fn line_integral_at(a: &GaugePotential, curve: &Curve, t: f64, opts: &TransportOptions) -> Result<[f64; 3]> {
    let mut total = [0.0; 3];
    for (p, q) in curve.segments() {
        check_excluded(a, p, q)?;
        let v = match a.exact_segment_integral(p, q).filter(|_| opts.use_closed_form) {
            Some(v) => v,
            None => {
                let mut acc = [0.0; 3];
                for (s, e) in pieces(a, p, q) {
                    let v = romberg_piece(a, s, e, t, opts)?;
                    for k in 0..3 {
                        acc[k] += v[k];
                    }
                }
                acc
            }
        };
        for k in 0..3 {
            total[k] += v[k];
        }
    }
    Ok(total)
}

pub fn line_integral(a: &GaugePotential, curve: &Curve) -> Result<[f64; 3]> {
    line_integral_at(a, curve, 0.0, &TransportOptions::default())
}

/// `i g0 T.A(y).d` for the SU(2) case.
fn generator_at(a: &GaugePotential, y: Point, d: Point, t: f64) -> Mat2 {
    let v = sample_dot(a, y, d, t);
    let g = a.basis().coupling;
    // i g0 (v.sigma)/2
    Mat2::new(
        C64::new(0.0, 0.5 * g * v[2]),
        C64::new(0.5 * g * v[1], 0.5 * g * v[0]),
        C64::new(-0.5 * g * v[1], 0.5 * g * v[0]),
        C64::new(0.0, -0.5 * g * v[2]),
    )
}

/// Sixth-order Magnus product over `n` equal steps of `p -> q` (three Gauss points per step).
fn magnus_product(a: &GaugePotential, p: Point, q: Point, t: f64, n: usize) -> Mat2 {
    let d = geom::sub(q, p);
    let h = 1.0 / n as f64;
    let off = 15f64.sqrt() / 10.0;
    let r = |x: f64| C64::new(x, 0.0);
    let br = |x: &Mat2, y: &Mat2| x * y - y * x;
    let mut w = Mat2::identity();
    for i in 0..n {
        let s0 = i as f64 * h;
        let m1 = generator_at(a, geom::lerp(p, q, s0 + (0.5 - off) * h), d, t);
        let m2 = generator_at(a, geom::lerp(p, q, s0 + 0.5 * h), d, t);
        let m3 = generator_at(a, geom::lerp(p, q, s0 + (0.5 + off) * h), d, t);
        let a1 = m2 * r(h);
        let a2 = (m3 - m1) * r(15f64.sqrt() * h / 3.0);
        let a3 = (m3 - m2 * r(2.0) + m1) * r(10.0 * h / 3.0);
        let c12 = br(&a1, &a2);
        let omega = a1 + a3 * r(1.0 / 12.0) - c12 * r(1.0 / 12.0)
            + br(&a2, &a3) * r(1.0 / 240.0)
            + br(&a1, &br(&a1, &a3)) * r(1.0 / 360.0)
            - br(&a2, &c12) * r(1.0 / 240.0)
            + br(&a1, &br(&a1, &c12)) * r(1.0 / 720.0);
        w = su2_exp_antihermitian(&omega) * w;
    }
    w
}

fn su2_piece(a: &GaugePotential, p: Point, q: Point, t: f64, opts: &TransportOptions) -> Result<Mat2> {
    let mut prev = magnus_product(a, p, q, t, 1);
    let mut change = f64::INFINITY;
    for level in 1..=opts.max_levels {
        let next = magnus_product(a, p, q, t, 1 << level);
        change = (next - prev).norm();
        if change <= opts.rtol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NonConvergence { levels: opts.max_levels, change })
}

/// `P exp(i g0 int_curve T.A.dy)` at time `t`, later pieces leftmost.
pub fn path_ordered_exponential_at(
    a: &GaugePotential,
    curve: &Curve,
    t: f64,
    opts: &TransportOptions,
) -> Result<GroupElement> {
    let basis = a.basis();
    match basis.group {
        GroupKind::U1 => {
            let v = line_integral_at(a, curve, t, opts)?;
            Ok(GroupElement::phase(basis, basis.coupling * v[0]))
        }
        GroupKind::SU2 => {
            if opts.use_closed_form && a.closed_form_commutes() {
                let v = line_integral_at(a, curve, t, opts)?;
                return Ok(GroupElement::raw(basis, basis.exp_i(v)));
            }
            let mut w = Mat2::identity();
            for (p, q) in curve.segments() {
                check_excluded(a, p, q)?;
                for (s, e) in pieces(a, p, q) {
                    w = su2_piece(a, s, e, t, opts)? * w;
                }
            }
            GroupElement::from_matrix(basis, w)
        }
    }
}

pub fn path_ordered_exponential(a: &GaugePotential, curve: &Curve) -> Result<GroupElement> {
    path_ordered_exponential_at(a, curve, 0.0, &TransportOptions::default())
}

fn require_closed(curve: &Curve) -> Result<()> {
    if curve.is_closed() {
        Ok(())
    } else {
        Err(Error::InvalidCurve("holonomy needs a closed curve".into()))
    }
}

/// Forward transport once around a closed loop from its base point.
pub fn loop_transport(a: &GaugePotential, curve: &Curve, opts: &TransportOptions) -> Result<GroupElement> {
    require_closed(curve)?;
    path_ordered_exponential_at(a, curve, 0.0, opts)
}

/// The holonomy `u = exp(-i q oint A.dy)` (path-ordered for SU(2)), i.e. the
/// transport around the reversed loop.
pub fn holonomy_with(a: &GaugePotential, curve: &Curve, opts: &TransportOptions) -> Result<GroupElement> {
    require_closed(curve)?;
    path_ordered_exponential_at(a, &curve.reversed(), 0.0, opts)
}

pub fn holonomy(a: &GaugePotential, curve: &Curve) -> Result<GroupElement> {
    holonomy_with(a, curve, &TransportOptions::default())
}
