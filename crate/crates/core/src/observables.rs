//! Non-local gauge-covariant observables `f_l` and `g_gamma`.
//!
//! `g_gamma` multiplies `psi(x)` by the Wilson line along the template curve
//! translated to start at `x`, then translates the result by the curve's
//! displacement `l`: `(g psi)(x + l) = W(x) psi(x)`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::gauge::{apply_matrix, GaugePotential, GroupKind, Mat2};
use crate::geom::{self, Point};
use crate::grid::{self, inner_product, GridSpec, modulus_overlap, superpose, WaveFunction, C64, DEFAULT_OVERLAP_TOL};
use crate::par;
use crate::transport::{self, path_ordered_exponential_at, Curve, GroupElement, TransportOptions};

/// The superposition `(psi1 + psi2)/sqrt 2` contributes `1/2` to each cross term.
pub const CROSS_TERM_FACTOR: f64 = 0.5;

/// Amplitudes at or below this are treated as outside the support.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-12;

/// A linear operator on wave functions.
pub trait Operator: Sync {
    fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction>;
}

pub struct Identity;

impl Operator for Identity {
    fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        Ok(psi.clone())
    }
}

/// `exp(-i p.l)`.
pub struct Translation(pub Point);

impl Operator for Translation {
    fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        Ok(shift(psi, self.0))
    }
}

/// `g_gamma` at a fixed time.
pub struct GGamma<'a> {
    pub spec: &'a NonlocalOperatorSpec,
    pub time: f64,
}

impl Operator for GGamma<'_> {
    fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        apply_g_gamma(self.spec, psi, self.time)
    }
}

#[derive(Debug, Clone)]
pub struct NonlocalOperatorSpec {
    pub curve: Curve,
    pub potential: GaugePotential,
    pub support_threshold: f64,
    pub options: TransportOptions,
}

impl NonlocalOperatorSpec {
    pub fn new(curve: Curve, potential: GaugePotential) -> Self {
        Self {
            curve,
            potential,
            support_threshold: DEFAULT_SUPPORT_THRESHOLD,
            options: TransportOptions::default(),
        }
    }

    /// Straight segment from the origin to `ell`.
    pub fn straight(ell: Point, potential: GaugePotential) -> Result<Self> {
        Ok(Self::new(Curve::segment([0.0, 0.0], ell)?, potential))
    }

    pub fn with_options(mut self, options: TransportOptions) -> Self {
        self.options = options;
        self
    }

    pub fn displacement(&self) -> Point {
        self.curve.displacement()
    }
}

/// Translation by `ell`: an exact roll when `ell` is a whole number of cells.
pub(crate) fn shift(psi: &WaveFunction, ell: Point) -> WaveFunction {
    let g = psi.grid();
    let h = g.spacing();
    let cells = [ell[0] / h, ell[1] / h];
    let whole = cells.iter().take(g.dim()).all(|c| (c - c.round()).abs() < 1e-9);
    if whole {
        grid::roll(psi, [cells[0].round() as isize, if g.dim() == 2 { cells[1].round() as isize } else { 0 }])
    } else {
        grid::translate(psi, ell)
    }
}

fn check_dim(psi: &WaveFunction, a: &GaugePotential) -> Result<()> {
    let d = a.basis().dim();
    if psi.internal_dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: psi.internal_dim() });
    }
    Ok(())
}

/// Indices where some component exceeds `threshold` in modulus.
fn support(psi: &WaveFunction, threshold: f64) -> Vec<usize> {
    let d = psi.internal_dim();
    (0..psi.grid().len())
        .filter(|&i| psi.amplitudes()[i * d..(i + 1) * d].iter().any(|z| z.norm() > threshold))
        .collect()
}

/// Multiply `psi(x)` by `transport(x)` on its support. Excluded-region hits
/// become `on_excluded`.
fn dress<F>(psi: &WaveFunction, threshold: f64, on_excluded: impl Fn() -> Error + Sync + Send, transport_at: F) -> Result<WaveFunction>
where
    F: Fn(Point) -> Result<Mat2> + Sync + Send,
{
    let grid = psi.grid().clone();
    let idx = support(psi, threshold);
    let mats = par::try_map_indexed(idx.len(), |k| {
        transport_at(grid.position(idx[k])).map_err(|e| match e {
            Error::ExcludedRegion { .. } => on_excluded(),
            other => other,
        })
    })?;
    let d = psi.internal_dim();
    let mut out = psi.clone();
    let amps = out.amplitudes_mut();
    for (i, m) in idx.iter().zip(&mats) {
        apply_matrix(m, &mut amps[i * d..(i + 1) * d]);
    }
    Ok(out)
}

/// `W(x) psi(x)` with `W(x)` the transport along the template curve placed at `x`.
fn wilson_dressed(spec: &NonlocalOperatorSpec, psi: &WaveFunction, time: f64) -> Result<WaveFunction> {
    check_dim(psi, &spec.potential)?;
    let a = &spec.potential;
    let closed_form = spec.options.use_closed_form
        && match a.basis().group {
            GroupKind::U1 => a.has_closed_form(),
            GroupKind::SU2 => a.closed_form_commutes(),
        };
    if !closed_form {
        if let Some(steps) = lattice_steps(&spec.curve, psi.grid()) {
            return lattice_dressed(spec, psi, time, &steps);
        }
    }
    let start = spec.curve.start();
    dress(psi, spec.support_threshold, || Error::Topology, |x| {
        let c = spec.curve.translated(geom::sub(x, start));
        Ok(*path_ordered_exponential_at(&spec.potential, &c, time, &spec.options)?.matrix())
    })
}

/// Template segments as (elementary lattice step, repeat count) when every
/// segment spans a whole number of cells.
fn lattice_steps(curve: &Curve, grid: &GridSpec) -> Option<Vec<([i64; 2], usize)>> {
    if grid.dim() != 2 {
        return None;
    }
    let h = grid.spacing();
    let mut out = Vec::new();
    for (p, q) in curve.segments() {
        let cells = [(q[0] - p[0]) / h, (q[1] - p[1]) / h];
        if cells.iter().any(|c| (c - c.round()).abs() > 1e-9) {
            return None;
        }
        let (a, b) = (cells[0].round() as i64, cells[1].round() as i64);
        let g = gcd(a.unsigned_abs(), b.unsigned_abs()) as i64;
        if g == 0 {
            return None;
        }
        out.push(([a / g, b / g], g as usize));
    }
    Some(out)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Same as the pointwise dressing, but each translated curve is a product of
/// short links between lattice points, and links shared between support
/// points are transported once.
fn lattice_dressed(
    spec: &NonlocalOperatorSpec,
    psi: &WaveFunction,
    time: f64,
    steps: &[([i64; 2], usize)],
) -> Result<WaveFunction> {
    let grid = psi.grid();
    let (h, o) = (grid.spacing(), grid.origin());
    let at = |c: [i64; 2]| [o[0] + c[0] as f64 * h, o[1] + c[1] as f64 * h];
    let idx = support(psi, spec.support_threshold);
    let mut keys: Vec<([i64; 2], [i64; 2])> = Vec::new();
    let mut seen: HashMap<([i64; 2], [i64; 2]), usize> = HashMap::new();
    let mut walks = Vec::with_capacity(idx.len());
    for &i in &idx {
        let (ix, iy) = grid.axis_indices(i);
        let mut c = [ix as i64, iy as i64];
        let mut walk = Vec::new();
        for &(e, n) in steps {
            for _ in 0..n {
                let k = *seen.entry((c, e)).or_insert_with(|| {
                    keys.push((c, e));
                    keys.len() - 1
                });
                walk.push(k);
                c = [c[0] + e[0], c[1] + e[1]];
            }
        }
        walks.push(walk);
    }
    let links = par::try_map_indexed(keys.len(), |k| {
        let (c, e) = keys[k];
        let link = Curve::segment(at(c), at([c[0] + e[0], c[1] + e[1]]))?;
        match path_ordered_exponential_at(&spec.potential, &link, time, &spec.options) {
            Ok(g) => Ok(*g.matrix()),
            Err(Error::ExcludedRegion { .. }) => Err(Error::Topology),
            Err(e) => Err(e),
        }
    })?;
    let d = psi.internal_dim();
    let mut out = psi.clone();
    let amps = out.amplitudes_mut();
    for (i, walk) in idx.iter().zip(&walks) {
        let m = walk.iter().fold(Mat2::identity(), |m, &k| links[k] * m);
        apply_matrix(&m, &mut amps[i * d..(i + 1) * d]);
    }
    Ok(out)
}

/// `g_gamma psi`: Wilson-line dressing followed by translation by `l`.
pub fn apply_g_gamma(spec: &NonlocalOperatorSpec, psi: &WaveFunction, time: f64) -> Result<WaveFunction> {
    let dressed = wilson_dressed(spec, psi, time)?;
    Ok(shift(&dressed, spec.displacement()))
}

/// `f_l psi` for a straight template: the line-integral phase then `exp(-i p.l)`.
pub fn apply_f_ell(spec: &NonlocalOperatorSpec, psi: &WaveFunction, time: f64) -> Result<WaveFunction> {
    if !spec.curve.is_straight() {
        return Err(Error::Unsupported("f_l needs a straight curve; use g_gamma".into()));
    }
    if spec.potential.basis().group != GroupKind::U1 {
        return Err(Error::KindMismatch);
    }
    let straight = NonlocalOperatorSpec {
        curve: Curve::segment(spec.curve.start(), spec.curve.end())?,
        ..spec.clone()
    };
    apply_g_gamma(&straight, psi, time)
}

/// `<psi| g_gamma |psi>`.
pub fn g_gamma_expectation(spec: &NonlocalOperatorSpec, psi: &WaveFunction, time: f64) -> Result<C64> {
    inner_product(psi, &apply_g_gamma(spec, psi, time)?)
}

/// `<a| g_gamma |b>`.
pub fn g_gamma_matrix_element(
    spec: &NonlocalOperatorSpec,
    a: &WaveFunction,
    b: &WaveFunction,
    time: f64,
) -> Result<C64> {
    inner_product(a, &apply_g_gamma(spec, b, time)?)
}

/// Dress one unperturbed packet with the transport from `base` along `path`
/// then straight on to each grid point.
pub fn dress_packet(
    psi0: &WaveFunction,
    path: &Curve,
    a: &GaugePotential,
    base: Point,
    options: &TransportOptions,
) -> Result<WaveFunction> {
    check_dim(psi0, a)?;
    if path.start() != base {
        return Err(Error::InvalidCurve("packet path must start at the base point".into()));
    }
    let along = path_ordered_exponential_at(a, path, 0.0, options)?;
    let end = path.end();
    dress(
        psi0,
        DEFAULT_SUPPORT_THRESHOLD,
        || Error::Unsupported("straight extension crosses an excluded region inside the packet support".into()),
        |x| {
            if x == end {
                return Ok(*along.matrix());
            }
            let ext = path_ordered_exponential_at(a, &Curve::segment(end, x)?, 0.0, options)?;
            Ok(ext.matrix() * along.matrix())
        },
    )
}

/// Phase-dress two unperturbed packets from the common base point.
pub fn build_ab_packets(
    psi10: &WaveFunction,
    psi20: &WaveFunction,
    gamma1: &Curve,
    gamma2: &Curve,
    a: &GaugePotential,
    base: Point,
) -> Result<(WaveFunction, WaveFunction)> {
    build_ab_packets_with(psi10, psi20, gamma1, gamma2, a, base, &TransportOptions::default())
}

pub fn build_ab_packets_with(
    psi10: &WaveFunction,
    psi20: &WaveFunction,
    gamma1: &Curve,
    gamma2: &Curve,
    a: &GaugePotential,
    base: Point,
    options: &TransportOptions,
) -> Result<(WaveFunction, WaveFunction)> {
    Ok((
        dress_packet(psi10, gamma1, a, base, options)?,
        dress_packet(psi20, gamma2, a, base, options)?,
    ))
}

/// The loop `gamma_2`, then `gamma` placed at its end, a closing segment to
/// the end of `gamma_1` if needed, then `gamma_1` backwards to the base.
pub fn reduction_loop(gamma1: &Curve, gamma2: &Curve, gamma: &Curve) -> Result<Curve> {
    let placed = gamma.translated(geom::sub(gamma2.end(), gamma.start()));
    let mut path = gamma2.then(&placed)?;
    if path.end() != gamma1.end() {
        path = path.then(&Curve::segment(path.end(), gamma1.end())?)?;
    }
    let back = gamma1.reversed();
    let full = path.then(&back)?;
    let mut pts = full.points().to_vec();
    if pts.first() == pts.last() {
        pts.pop();
    }
    Curve::polygon(pts)
}

/// Both sides of the closed-loop reduction of the cross term.
///
/// `lhs = 1/2 <psi1| g_gamma |psi2>` with the packets dressed from `base`;
/// `rhs = 1/2 int psi10^dag(x + l) H psi20(x) dx` with `H` the transport once
/// around the reduction loop.
pub fn closed_loop_reduction_check(
    psi10: &WaveFunction,
    psi20: &WaveFunction,
    gamma1: &Curve,
    gamma2: &Curve,
    gamma: &Curve,
    a: &GaugePotential,
) -> Result<(C64, C64)> {
    let overlap = modulus_overlap(psi10, psi20)?;
    if overlap > DEFAULT_OVERLAP_TOL {
        return Err(Error::Overlap { overlap, tolerance: DEFAULT_OVERLAP_TOL });
    }
    let base = gamma1.start();
    if gamma2.start() != base {
        return Err(Error::InvalidCurve("gamma1 and gamma2 must share their base point".into()));
    }
    let options = TransportOptions::default();
    let (psi1, psi2) = build_ab_packets_with(psi10, psi20, gamma1, gamma2, a, base, &options)?;
    let spec = NonlocalOperatorSpec::new(gamma.clone(), a.clone());
    let lhs = CROSS_TERM_FACTOR * g_gamma_matrix_element(&spec, &psi1, &psi2, 0.0)?;

    let h = transport::loop_transport(a, &reduction_loop(gamma1, gamma2, gamma)?, &options)?;
    let mut dressed = psi20.clone();
    let d = dressed.internal_dim();
    for chunk in dressed.amplitudes_mut().chunks_mut(d) {
        apply_matrix(h.matrix(), chunk);
    }
    // int psi10^dag(x + l) F(x) dx = <psi10 | shift(F, l)>
    let rhs = CROSS_TERM_FACTOR * inner_product(psi10, &shift(&dressed, gamma.displacement()))?;
    Ok((lhs, rhs))
}

/// The normalised two-packet superposition `(a + b)/sqrt 2`.
pub fn two_packet_state(a: &WaveFunction, b: &WaveFunction) -> Result<WaveFunction> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    superpose(a, b, s, s)
}

/// Transport along `curve` from its start, as a group element.
pub fn transport_along(a: &GaugePotential, curve: &Curve) -> Result<GroupElement> {
    transport::path_ordered_exponential(a, curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauge::{GaugePotential, LieAlgebraBasis, ZERO_COEFFS};
    use crate::grid::{gaussian_packet, GridSpec};
    use std::f64::consts::PI;

    fn plane() -> GridSpec {
        GridSpec::centered(2, 64, 0.25).unwrap()
    }

    fn wide() -> GridSpec {
        GridSpec::centered(2, 128, 0.2).unwrap()
    }

    fn max_diff(a: &WaveFunction, b: &WaveFunction) -> f64 {
        a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_potential_is_pure_translation() {
        let g = plane();
        let psi = gaussian_packet(&g, [-1.0, 0.5], 0.5, [0.3, 0.0], 0.0).unwrap();
        let spec = NonlocalOperatorSpec::new(
            Curve::polyline(vec![[0.0, 0.0], [0.5, 1.0], [1.5, 0.5]]).unwrap(),
            GaugePotential::zero(LieAlgebraBasis::u1(1.0)),
        );
        let out = apply_g_gamma(&spec, &psi, 0.0).unwrap();
        assert!(max_diff(&out, &grid::roll(&psi, [6, 2])) < 1e-15);
    }

    #[test]
    fn uniform_potential_is_global_phase() {
        let g = plane();
        let psi = gaussian_packet(&g, [0.0, 0.0], 0.5, [0.0, 0.0], 0.0).unwrap();
        let a = GaugePotential::uniform(LieAlgebraBasis::u1(2.0), [[0.3, -0.1], [0.0; 2], [0.0; 2]]);
        let spec = NonlocalOperatorSpec::straight([1.0, 0.5], a).unwrap();
        let out = apply_f_ell(&spec, &psi, 0.0).unwrap();
        let phase = C64::from_polar(1.0, 2.0 * (0.3 * 1.0 - 0.1 * 0.5));
        let expected = grid::roll(&psi, [4, 2]).scaled(phase);
        // Points below the support threshold are left undressed.
        assert!(max_diff(&out, &expected) < 1e-11);
    }

    #[test]
    fn f_ell_rejects_bent_curves_and_su2() {
        let g = plane();
        let psi = gaussian_packet(&g, [0.0, 0.0], 0.5, [0.0, 0.0], 0.0).unwrap();
        let bent = NonlocalOperatorSpec::new(
            Curve::polyline(vec![[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]]).unwrap(),
            GaugePotential::zero(LieAlgebraBasis::u1(1.0)),
        );
        assert!(matches!(apply_f_ell(&bent, &psi, 0.0), Err(Error::Unsupported(_))));
        let su2 = NonlocalOperatorSpec::straight([1.0, 0.0], GaugePotential::zero(LieAlgebraBasis::su2(1.0))).unwrap();
        assert_eq!(apply_f_ell(&su2, &psi, 0.0).unwrap_err(), Error::KindMismatch);
    }

    #[test]
    fn topology_error_when_curve_sweeps_core() {
        let g = plane();
        let psi = gaussian_packet(&g, [0.0, -2.0], 0.5, [0.0, 0.0], 0.0).unwrap();
        let a = GaugePotential::solenoid([0.0, 0.0], 1.0, 0.4);
        let spec = NonlocalOperatorSpec::straight([0.0, 4.0], a).unwrap();
        assert_eq!(apply_g_gamma(&spec, &psi, 0.0).unwrap_err(), Error::Topology);
    }

    #[test]
    fn g_gamma_is_unitary() {
        let g = plane();
        let psi = gaussian_packet(&g, [-2.0, -1.0], 0.5, [0.4, 0.2], 0.0).unwrap();
        let a = GaugePotential::solenoid([0.1, 0.05], 2.3, 0.0);
        let spec = NonlocalOperatorSpec::new(
            Curve::polyline(vec![[0.0, 0.0], [2.0, 3.0], [4.0, 2.0]]).unwrap(),
            a,
        );
        let out = apply_g_gamma(&spec, &psi, 0.0).unwrap();
        assert!((out.norm() - psi.norm()).abs() < 1e-10);
    }

    #[test]
    fn disjoint_single_packet_expectation_vanishes() {
        let g = wide();
        let psi = gaussian_packet(&g, [-4.0, 0.0], 0.5, [0.0, 0.0], 0.0).unwrap();
        let spec = NonlocalOperatorSpec::straight([8.0, 0.0], GaugePotential::zero(LieAlgebraBasis::u1(1.0))).unwrap();
        assert!(g_gamma_expectation(&spec, &psi, 0.0).unwrap().norm() < 1e-10);
    }

    #[test]
    fn reduction_loop_shape() {
        let g1 = Curve::segment([-4.0, 0.0], [-2.0, 2.0]).unwrap();
        let g2 = Curve::segment([-4.0, 0.0], [-2.0, -2.0]).unwrap();
        let gamma = Curve::segment([0.0, 0.0], [0.0, 4.0]).unwrap();
        let loop_ = reduction_loop(&g1, &g2, &gamma).unwrap();
        assert!(loop_.is_closed());
        assert_eq!(loop_.winding_number([-2.5, 0.0]), 1);
        assert_eq!(loop_.winding_number([0.0, 0.0]), 0);
    }

    #[test]
    fn reduction_with_zero_potential() {
        let g = wide();
        let p1 = gaussian_packet(&g, [0.0, 3.5], 0.5, [0.0, 0.0], 0.0).unwrap();
        let p2 = gaussian_packet(&g, [0.0, -3.5], 0.5, [0.0, 0.0], 0.0).unwrap();
        let g1 = Curve::segment([-9.0, 0.0], [0.0, 3.5]).unwrap();
        let g2 = Curve::segment([-9.0, 0.0], [0.0, -3.5]).unwrap();
        let gamma = Curve::segment([0.0, 0.0], [0.0, 7.0]).unwrap();
        let a = GaugePotential::zero(LieAlgebraBasis::u1(1.0));
        let (lhs, rhs) = closed_loop_reduction_check(&p1, &p2, &g1, &g2, &gamma, &a).unwrap();
        let direct = 0.5 * inner_product(&grid::roll(&p1, [0, -35]), &p2).unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
        assert!((rhs - direct).norm() < 1e-12);
        assert!((rhs.re - 0.5).abs() < 1e-10);
    }

    #[test]
    fn reduction_picks_up_enclosed_flux() {
        let g = wide();
        let p1 = gaussian_packet(&g, [0.0, 3.5], 0.5, [0.0, 0.0], 0.0).unwrap();
        let p2 = gaussian_packet(&g, [0.0, -3.5], 0.5, [0.0, 0.0], 0.0).unwrap();
        let g1 = Curve::segment([-9.0, 0.0], [0.0, 3.5]).unwrap();
        let g2 = Curve::segment([-9.0, 0.0], [0.0, -3.5]).unwrap();
        // gamma passes right of the flux, so the loop encloses it.
        let gamma = Curve::segment([0.0, 0.0], [0.0, 7.0]).unwrap();
        let phi = PI / 3.0;
        let a = GaugePotential::solenoid([-5.1, 0.05], phi, 0.0);
        let (lhs, rhs) = closed_loop_reduction_check(&p1, &p2, &g1, &g2, &gamma, &a).unwrap();
        assert!((lhs - rhs).norm() < 1e-10, "{lhs} {rhs}");
        assert!((rhs - C64::from_polar(0.5, phi)).norm() < 1e-9, "{rhs}");
        let overlapping = gaussian_packet(&g, [0.0, 1.0], 0.5, [0.0, 0.0], 0.0).unwrap();
        assert!(matches!(
            closed_loop_reduction_check(&p1, &overlapping, &g1, &g2, &gamma, &a),
            Err(Error::Overlap { .. })
        ));
    }

    #[test]
    fn dressing_with_zero_potential_is_identity() {
        let g = wide();
        let p = gaussian_packet(&g, [1.0, 1.0], 0.5, [0.0, 0.0], 0.0)
            .unwrap()
            .with_spinor(&[C64::new(1.0, 0.0), C64::new(0.0, 0.0)])
            .unwrap();
        let a = GaugePotential::uniform(LieAlgebraBasis::su2(1.0), ZERO_COEFFS);
        let path = Curve::segment([-3.0, 0.0], [0.0, 0.0]).unwrap();
        let (d1, _) = build_ab_packets(&p, &p, &path, &path, &a, [-3.0, 0.0]).unwrap();
        assert!(max_diff(&d1, &p) < 1e-15);
    }
}
