//! Conical defect (cosmic string) in the plane: Poincare transport by
//! development and the gravitational analogue of `<g_gamma>`.
//!
//! The cone is represented on the plane with a seam ray from the apex. A
//! straight segment contributes a pure translation; crossing the seam
//! counterclockwise at `c` contributes the rotation `(delta, (I - R(delta))(c - apex))`.
//! Translations are expressed relative to the curve's start, so a loop
//! enclosing the apex once counterclockwise from `x_b` yields
//! `(delta, (I - R(delta))(x_b - apex))`. Rotation parts are kept unwrapped.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::grid::{inner_product, modulus_overlap, rotate_about, WaveFunction, C64, DEFAULT_OVERLAP_TOL};
use crate::observables::{reduction_loop, shift, CROSS_TERM_FACTOR};
use crate::transport::Curve;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConeGeometry {
    pub apex: Point,
    pub deficit_angle: f64,
    pub core_radius: f64,
    /// Direction of the seam ray from the apex.
    pub seam_angle: f64,
}

impl ConeGeometry {
    pub fn new(apex: Point, deficit_angle: f64, core_radius: f64) -> Result<Self> {
        let g = Self { apex, deficit_angle, core_radius, seam_angle: 0.0 };
        g.validate()?;
        Ok(g)
    }

    pub fn with_seam_angle(mut self, angle: f64) -> Self {
        self.seam_angle = angle;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.deficit_angle.abs() < TAU) {
            return Err(Error::OutOfRange { what: "deficit_angle", value: self.deficit_angle.to_string() });
        }
        if !(self.core_radius >= 0.0) || !self.apex.iter().all(|v| v.is_finite()) {
            return Err(Error::OutOfRange { what: "cone geometry", value: format!("{self:?}") });
        }
        Ok(())
    }

    /// Distance from `p` to the seam ray.
    pub fn seam_distance(&self, p: Point) -> f64 {
        let u = [self.seam_angle.cos(), self.seam_angle.sin()];
        let r = geom::sub(p, self.apex);
        let s = geom::dot(r, u).max(0.0);
        geom::norm(geom::sub(r, geom::scale(u, s)))
    }

    /// Angle of `p` about the apex measured from the seam, in [0, 2 pi).
    fn seam_relative_angle(&self, p: Point) -> f64 {
        let r = geom::rotate(geom::sub(p, self.apex), -self.seam_angle);
        r[1].atan2(r[0]).rem_euclid(TAU)
    }

    fn check_segment(&self, a: Point, b: Point) -> Result<()> {
        let d = geom::distance_to_segment(self.apex, a, b);
        if d <= self.core_radius || d < 1e-12 {
            return Err(Error::ExcludedRegion { cx: self.apex[0], cy: self.apex[1], radius: self.core_radius });
        }
        Ok(())
    }

    /// Signed seam crossing of `a -> b` (+1 counterclockwise) and its point.
    fn seam_crossing(&self, a: Point, b: Point) -> Option<(i32, Point)> {
        let start = self.seam_relative_angle(a);
        let end = start + geom::subtended_angle(self.apex, a, b);
        let turns = (end / TAU).floor() - (start / TAU).floor();
        if turns == 0.0 {
            return None;
        }
        // Intersect a + s (b - a) with the ray apex + r u.
        let u = [self.seam_angle.cos(), self.seam_angle.sin()];
        let d = geom::sub(b, a);
        let denom = geom::cross(d, u);
        let s = if denom == 0.0 { 0.0 } else { geom::cross(geom::sub(self.apex, a), u) / denom };
        Some((turns as i32, geom::lerp(a, b, s.clamp(0.0, 1.0))))
    }
}

/// Rotation angle (unwrapped) and translation of a planar rigid motion.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PoincareElement {
    pub rotation: f64,
    pub translation: Point,
}

impl PoincareElement {
    pub const IDENTITY: Self = Self { rotation: 0.0, translation: [0.0, 0.0] };

    pub fn translation(t: Point) -> Self {
        Self { rotation: 0.0, translation: t }
    }

    /// `self o other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            rotation: self.rotation + other.rotation,
            translation: geom::add(self.translation, geom::rotate(other.translation, self.rotation)),
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            rotation: -self.rotation,
            translation: geom::scale(geom::rotate(self.translation, -self.rotation), -1.0),
        }
    }

    /// `R p + t`.
    pub fn apply(&self, p: Point) -> Point {
        geom::add(geom::rotate(p, self.rotation), self.translation)
    }

    /// Rotation part reduced into (-pi, pi].
    pub fn rotation_mod(&self) -> f64 {
        geom::wrap_angle(self.rotation)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let dr = geom::wrap_angle(self.rotation - other.rotation).abs();
        dr.max(geom::norm(geom::sub(self.translation, other.translation)))
    }
}

/// Per-segment development elements in order of traversal.
fn segment_elements(g: &ConeGeometry, a: Point, b: Point) -> Result<Vec<PoincareElement>> {
    g.check_segment(a, b)?;
    Ok(match g.seam_crossing(a, b) {
        None => vec![PoincareElement::translation(geom::sub(b, a))],
        Some((sign, c)) => {
            let delta = sign as f64 * g.deficit_angle;
            let rel = geom::sub(c, g.apex);
            let seam = PoincareElement {
                rotation: delta,
                translation: geom::sub(rel, geom::rotate(rel, delta)),
            };
            vec![
                PoincareElement::translation(geom::sub(c, a)),
                seam,
                PoincareElement::translation(geom::sub(b, c)),
            ]
        }
    })
}

/// Ordered product of the development elements along `curve`.
pub fn poincare_transport(g: &ConeGeometry, curve: &Curve) -> Result<PoincareElement> {
    g.validate()?;
    let mut total = PoincareElement::IDENTITY;
    for (a, b) in curve.segments() {
        for e in segment_elements(g, a, b)? {
            total = e.compose(&total);
        }
    }
    Ok(total)
}

/// Action of a loop element based at `base` on scalar wave functions:
/// `(g psi)(x) = psi(g^{-1} x)` for the rigid motion `x -> R x + (I - R) base - t`.
pub fn act_on_wavefunction(element: &PoincareElement, base: Point, psi: &WaveFunction) -> Result<WaveFunction> {
    let r = element.rotation;
    // Fixed translation of the motion y -> R y + d.
    let d = geom::sub(geom::sub(base, geom::rotate(base, r)), element.translation);
    let wrapped = geom::wrap_angle(r);
    if wrapped.abs() < 1e-15 {
        return Ok(shift(psi, d));
    }
    // Centre of rotation: solve (I - R) c = d.
    let (s, co) = wrapped.sin_cos();
    let (m00, m01, m10, m11) = (1.0 - co, s, -s, 1.0 - co);
    let det = m00 * m11 - m01 * m10;
    let c = [(m11 * d[0] - m01 * d[1]) / det, (-m10 * d[0] + m00 * d[1]) / det];
    rotate_about(psi, c, r)
}

/// `1/2 int psi10^*(x + l) (g_{gamma0} psi20)(x) dx` for the reduction loop
/// `gamma2 . gamma . reverse(gamma1)`.
pub fn gravitational_ab_expectation(
    psi10: &WaveFunction,
    psi20: &WaveFunction,
    gamma1: &Curve,
    gamma2: &Curve,
    gamma: &Curve,
    g: &ConeGeometry,
) -> Result<C64> {
    let overlap = modulus_overlap(psi10, psi20)?;
    if overlap > DEFAULT_OVERLAP_TOL {
        return Err(Error::Overlap { overlap, tolerance: DEFAULT_OVERLAP_TOL });
    }
    if psi20.internal_dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: psi20.internal_dim() });
    }
    let loop_ = reduction_loop(gamma1, gamma2, gamma)?;
    let element = poincare_transport(g, &loop_)?;
    let moved = act_on_wavefunction(&element, loop_.start(), psi20)?;
    Ok(CROSS_TERM_FACTOR * inner_product(psi10, &shift(&moved, gamma.displacement()))?)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FrameSample {
    pub position: Point,
    /// Transported frame angle relative to the initial frame (unwrapped).
    pub frame_angle: f64,
    /// Unwrapped tangent angle in the plane chart.
    pub tangent_angle: f64,
    pub tangent_minus_frame: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FrameReport {
    /// Unwrapped rotation holonomy.
    pub holonomy_rotation: f64,
    /// The same reduced into (-pi, pi]; all a frame alone can see.
    pub holonomy_rotation_mod: f64,
    pub samples: Vec<FrameSample>,
    /// Tangent turning relative to the transported frame once around the loop.
    pub total_tangent_minus_frame: f64,
}

/// Transport a frame around `loop_` and record it against the loop tangent.
pub fn tangent_frame_distinguishability(g: &ConeGeometry, loop_: &Curve) -> Result<FrameReport> {
    if !loop_.is_closed() {
        return Err(Error::InvalidCurve("frame comparison needs a closed loop".into()));
    }
    let segs = loop_.segments();
    let dir = |(a, b): (Point, Point)| {
        let d = geom::sub(b, a);
        d[1].atan2(d[0])
    };
    let mut frame = 0.0;
    let mut tangent = dir(segs[0]);
    let start_tangent = tangent;
    let mut samples = vec![FrameSample {
        position: segs[0].0,
        frame_angle: 0.0,
        tangent_angle: tangent,
        tangent_minus_frame: tangent,
    }];
    for (i, &(a, b)) in segs.iter().enumerate() {
        for e in segment_elements(g, a, b)? {
            frame += e.rotation;
        }
        let next = segs[(i + 1) % segs.len()];
        tangent += geom::wrap_angle(dir(next) - dir((a, b)));
        samples.push(FrameSample {
            position: b,
            frame_angle: frame,
            tangent_angle: tangent,
            tangent_minus_frame: tangent - frame,
        });
    }
    let total = tangent - start_tangent - frame;
    Ok(FrameReport {
        holonomy_rotation: frame,
        holonomy_rotation_mod: geom::wrap_angle(frame),
        samples,
        total_tangent_minus_frame: total,
    })
}
