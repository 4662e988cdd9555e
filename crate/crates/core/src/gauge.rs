//! Gauge potentials, flux lines and gauge transformations.
//!
//! A potential is sampled as Lie-algebra coefficients `A^k_j(x)`: `k` runs over
//! generators (one for U(1), three for SU(2) with `T_k = sigma_k / 2`) and `j`
//! over the two spatial directions. Transports use the `+i` convention
//! `P exp(i g0 int T_k A^k . dy)` and wave functions transform as `psi' = U psi`,
//! so that `A' = U A U^dag + (i/g0) U grad U^dag`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::grid::{GridSpec, WaveFunction, C64};

pub type Mat2 = Matrix2<C64>;

/// `A^k_j`: generator index `k`, spatial index `j`.
pub type Coeffs = [[f64; 2]; 3];

pub const ZERO_COEFFS: Coeffs = [[0.0; 2]; 3];

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Pauli matrices.
pub fn pauli() -> [Mat2; 3] {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    [
        Mat2::new(z, one, one, z),
        Mat2::new(z, -i, i, z),
        Mat2::new(one, z, z, -one),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    U1,
    SU2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LieAlgebraBasis {
    pub group: GroupKind,
    /// Charge `q` for U(1), `g0` for SU(2).
    pub coupling: f64,
}

impl LieAlgebraBasis {
    pub fn u1(charge: f64) -> Self {
        Self { group: GroupKind::U1, coupling: charge }
    }

    pub fn su2(coupling: f64) -> Self {
        Self { group: GroupKind::SU2, coupling }
    }

    /// Dimension of the representation the wave function carries.
    pub fn dim(&self) -> usize {
        match self.group {
            GroupKind::U1 => 1,
            GroupKind::SU2 => 2,
        }
    }

    pub fn n_generators(&self) -> usize {
        match self.group {
            GroupKind::U1 => 1,
            GroupKind::SU2 => 3,
        }
    }

    /// Hermitian generators; empty for U(1), `sigma_k / 2` for SU(2).
    pub fn generators(&self) -> Vec<Mat2> {
        match self.group {
            GroupKind::U1 => Vec::new(),
            GroupKind::SU2 => pauli().iter().map(|s| s * c(0.5, 0.0)).collect(),
        }
    }

    /// `exp(i coupling T_k a^k)`. U(1) elements are embedded as `diag(e^{i q a}, 1)`.
    pub fn exp_i(&self, a: [f64; 3]) -> Mat2 {
        match self.group {
            GroupKind::U1 => {
                let mut m = Mat2::identity();
                m[(0, 0)] = C64::from_polar(1.0, self.coupling * a[0]);
                m
            }
            GroupKind::SU2 => su2_exp([a[0] * self.coupling, a[1] * self.coupling, a[2] * self.coupling]),
        }
    }
}

/// `exp(i theta.sigma / 2)` in closed form.
pub fn su2_exp(theta: [f64; 3]) -> Mat2 {
    let t = (theta[0] * theta[0] + theta[1] * theta[1] + theta[2] * theta[2]).sqrt();
    let (s, co) = (t / 2.0).sin_cos();
    // sin(t/2)/t, regular at 0
    let f = if t < 1e-4 { 0.5 - t * t / 48.0 } else { s / t };
    su2_from_quaternion(co, [f * theta[0], f * theta[1], f * theta[2]])
}

/// `a0 I + i a.sigma`.
fn su2_from_quaternion(a0: f64, a: [f64; 3]) -> Mat2 {
    Mat2::new(c(a0, a[2]), c(a[1], a[0]), c(-a[1], a[0]), c(a0, -a[2]))
}

/// Exponential of an anti-Hermitian traceless 2x2 matrix `omega = i h.sigma`.
pub fn su2_exp_antihermitian(omega: &Mat2) -> Mat2 {
    let p = pauli();
    let mut h = [0.0; 3];
    for k in 0..3 {
        // tr(-i omega sigma_k) / 2 = h_k
        h[k] = ((omega * p[k]).trace() * c(0.0, -1.0)).re / 2.0;
    }
    su2_exp([2.0 * h[0], 2.0 * h[1], 2.0 * h[2]])
}

/// Idealised flux line: a circulating potential winding about `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxLine {
    pub center: Point,
    /// Flux per generator: `[Phi, 0, 0]` for U(1), `magnitude * n` for SU(2).
    pub flux: [f64; 3],
    pub core_radius: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcludedDisc {
    pub center: Point,
    pub radius: f64,
}

impl ExcludedDisc {
    pub fn hit_by_segment(&self, a: Point, b: Point) -> bool {
        self.radius > 0.0 && geom::distance_to_segment(self.center, a, b) <= self.radius
    }

    pub fn contains(&self, p: Point) -> bool {
        self.radius > 0.0 && geom::norm(geom::sub(p, self.center)) <= self.radius
    }
}

/// Closed form for straight-segment integrals of flux lines plus a uniform part.
#[derive(Debug, Clone, PartialEq)]
struct ExactForm {
    lines: Vec<(Point, [f64; 3])>,
    uniform: Coeffs,
}

type Sampler = dyn Fn(Point, f64) -> Coeffs + Send + Sync;
type Primitive = dyn Fn(Point) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct GaugePotential {
    basis: LieAlgebraBasis,
    sampler: Arc<Sampler>,
    flux_lines: Vec<FluxLine>,
    excluded: Vec<ExcludedDisc>,
    exact: Option<ExactForm>,
    primitive: Option<Arc<Primitive>>,
}

impl fmt::Debug for GaugePotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugePotential")
            .field("basis", &self.basis)
            .field("flux_lines", &self.flux_lines)
            .field("excluded", &self.excluded)
            .field("closed_form", &self.exact.is_some())
            .finish()
    }
}

/// Circulating profile `(-(y-cy), x-cx) / (2 pi r^2)`, solid-body inside `core`.
fn circulating(p: Point, center: Point, core: f64) -> Point {
    let r = geom::sub(p, center);
    let r2 = geom::dot(r, r);
    if r2 == 0.0 {
        return [0.0, 0.0];
    }
    let denom = if r2 < core * core { core * core } else { r2 };
    [-r[1] / (TAU * denom), r[0] / (TAU * denom)]
}

impl GaugePotential {
    /// Build from an arbitrary sampler (no flux descriptors, no closed form).
    pub fn from_sampler<F>(basis: LieAlgebraBasis, sampler: F) -> Self
    where
        F: Fn(Point, f64) -> Coeffs + Send + Sync + 'static,
    {
        Self {
            basis,
            sampler: Arc::new(sampler),
            flux_lines: Vec::new(),
            excluded: Vec::new(),
            exact: None,
            primitive: None,
        }
    }

    pub fn zero(basis: LieAlgebraBasis) -> Self {
        Self::uniform(basis, ZERO_COEFFS)
    }

    /// Constant potential.
    pub fn uniform(basis: LieAlgebraBasis, a: Coeffs) -> Self {
        let primitive: Option<Arc<Primitive>> = match basis.group {
            GroupKind::U1 => Some(Arc::new(move |p: Point| a[0][0] * p[0] + a[0][1] * p[1])),
            GroupKind::SU2 => None,
        };
        Self {
            basis,
            sampler: Arc::new(move |_, _| a),
            flux_lines: Vec::new(),
            excluded: Vec::new(),
            exact: Some(ExactForm { lines: Vec::new(), uniform: a }),
            primitive,
        }
    }

    fn flux_line(basis: LieAlgebraBasis, line: FluxLine) -> Self {
        let FluxLine { center, flux, core_radius } = line.clone();
        let sampler = move |p: Point, _t: f64| {
            let v = circulating(p, center, core_radius);
            [
                [flux[0] * v[0], flux[0] * v[1]],
                [flux[1] * v[0], flux[1] * v[1]],
                [flux[2] * v[0], flux[2] * v[1]],
            ]
        };
        let primitive: Option<Arc<Primitive>> = match basis.group {
            // Angle with its branch cut along -x from the centre.
            GroupKind::U1 => Some(Arc::new(move |p: Point| {
                let r = geom::sub(p, center);
                flux[0] * r[1].atan2(r[0]) / TAU
            })),
            GroupKind::SU2 => None,
        };
        Self {
            basis,
            sampler: Arc::new(sampler),
            excluded: if core_radius > 0.0 {
                vec![ExcludedDisc { center, radius: core_radius }]
            } else {
                Vec::new()
            },
            exact: Some(ExactForm { lines: vec![(center, flux)], uniform: ZERO_COEFFS }),
            flux_lines: vec![line],
            primitive,
        }
    }

    /// Abelian solenoid of total `flux` (charge 1; see [`Self::with_coupling`]).
    pub fn solenoid(center: Point, flux: f64, core_radius: f64) -> Self {
        Self::flux_line(
            LieAlgebraBasis::u1(1.0),
            FluxLine { center, flux: [flux, 0.0, 0.0], core_radius },
        )
    }

    /// SU(2) flux tube along a fixed Lie-algebra direction `n` (normalised here).
    pub fn nonabelian_flux_tube(
        center: Point,
        direction: [f64; 3],
        magnitude: f64,
        core_radius: f64,
        coupling: f64,
    ) -> Result<Self> {
        let len = (direction.iter().map(|x| x * x).sum::<f64>()).sqrt();
        if !(len > 0.0) {
            return Err(Error::OutOfRange { what: "flux direction", value: format!("{direction:?}") });
        }
        let n = direction.map(|x| x / len * magnitude);
        Ok(Self::flux_line(LieAlgebraBasis::su2(coupling), FluxLine { center, flux: n, core_radius }))
    }

    /// Band-limited random potential, periodic on `grid` (no flux lines).
    pub fn smooth_random(
        seed: u64,
        basis: LieAlgebraBasis,
        grid: &GridSpec,
        band_limit: usize,
        amplitude: f64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fields: Vec<SmoothField> = Vec::new();
        for _ in 0..basis.n_generators() * 2 {
            fields.push(SmoothField::random(&mut rng, grid, band_limit, amplitude)?);
        }
        let n = basis.n_generators();
        Ok(Self::from_sampler(basis, move |p, _| {
            let mut out = ZERO_COEFFS;
            for k in 0..n {
                out[k] = [fields[2 * k].value(p), fields[2 * k + 1].value(p)];
            }
            out
        }))
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.basis.coupling = coupling;
        self
    }

    /// Sum of two potentials over the same group.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.basis.group != other.basis.group {
            return Err(Error::KindMismatch);
        }
        let (a, b) = (self.sampler.clone(), other.sampler.clone());
        let exact = match (&self.exact, &other.exact) {
            (Some(x), Some(y)) => {
                let mut lines = x.lines.clone();
                lines.extend(y.lines.iter().cloned());
                let mut uniform = x.uniform;
                for k in 0..3 {
                    for j in 0..2 {
                        uniform[k][j] += y.uniform[k][j];
                    }
                }
                Some(ExactForm { lines, uniform })
            }
            _ => None,
        };
        let primitive: Option<Arc<Primitive>> = match (&self.primitive, &other.primitive) {
            (Some(f), Some(g)) => {
                let (f, g) = (f.clone(), g.clone());
                Some(Arc::new(move |p| f(p) + g(p)))
            }
            _ => None,
        };
        let mut flux_lines = self.flux_lines.clone();
        flux_lines.extend(other.flux_lines.iter().cloned());
        let mut excluded = self.excluded.clone();
        excluded.extend(other.excluded.iter().cloned());
        Ok(Self {
            basis: self.basis,
            sampler: Arc::new(move |p, t| {
                let (x, y) = (a(p, t), b(p, t));
                let mut out = x;
                for k in 0..3 {
                    for j in 0..2 {
                        out[k][j] += y[k][j];
                    }
                }
                out
            }),
            flux_lines,
            excluded,
            exact,
            primitive,
        })
    }

    pub fn basis(&self) -> LieAlgebraBasis {
        self.basis
    }

    pub fn flux_lines(&self) -> &[FluxLine] {
        &self.flux_lines
    }

    pub fn excluded_regions(&self) -> &[ExcludedDisc] {
        &self.excluded
    }

    #[inline]
    pub fn sample(&self, p: Point, t: f64) -> Coeffs {
        (self.sampler)(p, t)
    }

    /// Lie-algebra matrix `sum_k A^k_j T_k` for spatial direction `j` (SU(2) only).
    pub fn algebra_matrix(&self, p: Point, t: f64, j: usize) -> Mat2 {
        let a = self.sample(p, t);
        let g = pauli();
        (g[0] * c(a[0][j], 0.0) + g[1] * c(a[1][j], 0.0) + g[2] * c(a[2][j], 0.0)) * c(0.5, 0.0)
    }

    /// Exact straight-segment integral `int_a^b A^k . dy`, when a closed form is known.
    pub fn exact_segment_integral(&self, a: Point, b: Point) -> Option<[f64; 3]> {
        let form = self.exact.as_ref()?;
        let d = geom::sub(b, a);
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[k] = form.uniform[k][0] * d[0] + form.uniform[k][1] * d[1];
        }
        for (center, flux) in &form.lines {
            let dtheta = geom::subtended_angle(*center, a, b);
            for k in 0..3 {
                out[k] += flux[k] * dtheta / TAU;
            }
        }
        Some(out)
    }

    pub fn has_closed_form(&self) -> bool {
        self.exact.is_some()
    }

    /// True when the closed form exists and every term points along one
    /// Lie-algebra direction, so transports along it commute.
    pub fn closed_form_commutes(&self) -> bool {
        let Some(form) = &self.exact else { return false };
        let mut dirs: Vec<[f64; 3]> = form.lines.iter().map(|(_, f)| *f).collect();
        for j in 0..2 {
            dirs.push([form.uniform[0][j], form.uniform[1][j], form.uniform[2][j]]);
        }
        let Some(base) = dirs.iter().copied().find(|d| d.iter().any(|x| *x != 0.0)) else {
            return true;
        };
        dirs.iter().all(|d| {
            let cr = [
                base[1] * d[2] - base[2] * d[1],
                base[2] * d[0] - base[0] * d[2],
                base[0] * d[1] - base[1] * d[0],
            ];
            cr.iter().all(|x| x.abs() <= 1e-14 * (1.0 + d.iter().map(|v| v.abs()).sum::<f64>()))
        })
    }

    /// Scalar `chi` with `grad chi = A` away from branch cuts (Abelian pure gauges).
    pub fn primitive(&self, p: Point) -> Option<f64> {
        self.primitive.as_ref().map(|f| f(p))
    }

    pub fn has_primitive(&self) -> bool {
        self.primitive.is_some()
    }

    /// Singular points the quadrature should refine towards.
    pub(crate) fn singular_points(&self) -> impl Iterator<Item = Point> + '_ {
        self.flux_lines.iter().map(|l| l.center)
    }
}

/// `c + a.x + sum_m (p_m cos(k_m.x) + q_m sin(k_m.x))` with analytic gradient.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SmoothField {
    pub constant: f64,
    pub linear: Point,
    pub modes: Vec<FourierMode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FourierMode {
    pub k: Point,
    pub cos: f64,
    pub sin: f64,
}

impl SmoothField {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, ..Self::default() }
    }

    pub fn linear(a: Point) -> Self {
        Self { linear: a, ..Self::default() }
    }

    /// Up to `band_limit` random modes with integer wave numbers `|m| <= band_limit`
    /// on the grid period.
    pub fn random<R: Rng>(rng: &mut R, grid: &GridSpec, band_limit: usize, amplitude: f64) -> Result<Self> {
        if band_limit > grid.points_per_axis() / 4 {
            return Err(Error::OutOfRange { what: "band_limit", value: band_limit.to_string() });
        }
        let mut field = Self::default();
        if band_limit == 0 || amplitude == 0.0 {
            return Ok(field);
        }
        let dk = TAU / grid.extent();
        let b = band_limit as i64;
        let scale = amplitude / (band_limit as f64).sqrt();
        for _ in 0..band_limit {
            let mx = rng.gen_range(-b..=b);
            let my = if grid.dim() == 2 { rng.gen_range(-b..=b) } else { 0 };
            let (mx, my) = if mx == 0 && my == 0 { (1, 0) } else { (mx, my) };
            field.modes.push(FourierMode {
                k: [mx as f64 * dk, my as f64 * dk],
                cos: rng.gen_range(-1.0..1.0) * scale,
                sin: rng.gen_range(-1.0..1.0) * scale,
            });
        }
        Ok(field)
    }

    pub fn value(&self, p: Point) -> f64 {
        let mut v = self.constant + geom::dot(self.linear, p);
        for m in &self.modes {
            let (s, co) = geom::dot(m.k, p).sin_cos();
            v += m.cos * co + m.sin * s;
        }
        v
    }

    pub fn gradient(&self, p: Point) -> Point {
        let mut g = self.linear;
        for m in &self.modes {
            let (s, co) = geom::dot(m.k, p).sin_cos();
            let w = -m.cos * s + m.sin * co;
            g[0] += w * m.k[0];
            g[1] += w * m.k[1];
        }
        g
    }

    pub fn negated(&self) -> Self {
        Self {
            constant: -self.constant,
            linear: geom::scale(self.linear, -1.0),
            modes: self
                .modes
                .iter()
                .map(|m| FourierMode { k: m.k, cos: -m.cos, sin: -m.sin })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0
            && self.linear == [0.0, 0.0]
            && self.modes.iter().all(|m| m.cos == 0.0 && m.sin == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GaugeTransformation {
    /// `psi' = exp(i q Lambda) psi`, `A' = A + grad Lambda`.
    Abelian(SmoothField),
    /// `U(x) = exp(i lambda_k(x) T_k)` with `T_k = sigma_k / 2`.
    NonAbelian([SmoothField; 3]),
}

impl GaugeTransformation {
    pub fn identity(kind: GroupKind) -> Self {
        match kind {
            GroupKind::U1 => Self::Abelian(SmoothField::default()),
            GroupKind::SU2 => Self::NonAbelian(Default::default()),
        }
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            Self::Abelian(_) => GroupKind::U1,
            Self::NonAbelian(_) => GroupKind::SU2,
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            Self::Abelian(l) => Self::Abelian(l.negated()),
            Self::NonAbelian(ls) => Self::NonAbelian([ls[0].negated(), ls[1].negated(), ls[2].negated()]),
        }
    }

    /// Group element at `p` (U(1) embedded as `diag(e^{i q Lambda}, 1)`).
    pub fn matrix_at(&self, basis: &LieAlgebraBasis, p: Point) -> Mat2 {
        match self {
            Self::Abelian(l) => {
                let mut m = Mat2::identity();
                m[(0, 0)] = C64::from_polar(1.0, basis.coupling * l.value(p));
                m
            }
            Self::NonAbelian(ls) => su2_exp([ls[0].value(p), ls[1].value(p), ls[2].value(p)]),
        }
    }

    /// `U(p)` and `d_j U(p)` for the SU(2) case, differentiated analytically.
    fn su2_with_gradient(fields: &[SmoothField; 3], p: Point) -> (Mat2, [Mat2; 2]) {
        let lam = [fields[0].value(p), fields[1].value(p), fields[2].value(p)];
        let grads = [fields[0].gradient(p), fields[1].gradient(p), fields[2].gradient(p)];
        let t = (lam[0] * lam[0] + lam[1] * lam[1] + lam[2] * lam[2]).sqrt();
        let (s, co) = (t / 2.0).sin_cos();
        let (f, fp_over_t) = if t < 1e-3 {
            // f = sin(t/2)/t, f'(t)/t
            (0.5 - t * t / 48.0, -1.0 / 24.0 + t * t / 960.0)
        } else {
            (s / t, (co / 2.0 * t - s) / (t * t * t))
        };
        let u = su2_from_quaternion(co, [f * lam[0], f * lam[1], f * lam[2]]);
        let mut du = [Mat2::zeros(); 2];
        for (j, d) in du.iter_mut().enumerate() {
            let lam_dot = lam[0] * grads[0][j] + lam[1] * grads[1][j] + lam[2] * grads[2][j];
            // d a0 = -sin(t/2)/2 * dt, with dt = lam.dlam / t  =>  -f/2 * lam.dlam
            let da0 = -f / 2.0 * lam_dot;
            let mut da = [0.0; 3];
            for k in 0..3 {
                da[k] = f * grads[k][j] + fp_over_t * lam_dot * lam[k];
            }
            *d = Mat2::new(c(da0, da[2]), c(da[1], da[0]), c(-da[1], da[0]), c(da0, -da[2]));
        }
        (u, du)
    }
}

/// Random band-limited gauge transformation, deterministic in `seed`.
pub fn random_smooth_gauge(
    seed: u64,
    kind: GroupKind,
    grid: &GridSpec,
    band_limit: usize,
    amplitude: f64,
) -> Result<GaugeTransformation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match kind {
        GroupKind::U1 => GaugeTransformation::Abelian(SmoothField::random(&mut rng, grid, band_limit, amplitude)?),
        GroupKind::SU2 => GaugeTransformation::NonAbelian([
            SmoothField::random(&mut rng, grid, band_limit, amplitude)?,
            SmoothField::random(&mut rng, grid, band_limit, amplitude)?,
            SmoothField::random(&mut rng, grid, band_limit, amplitude)?,
        ]),
    })
}

/// `A -> A + grad Lambda` (Abelian) or `A -> U A U^dag + (i/g0) U grad U^dag`.
pub fn apply_gauge_to_potential(a: &GaugePotential, g: &GaugeTransformation) -> Result<GaugePotential> {
    if a.basis.group != g.kind() {
        return Err(Error::KindMismatch);
    }
    let inner = a.sampler.clone();
    let basis = a.basis;
    let sampler: Arc<Sampler> = match g {
        GaugeTransformation::Abelian(l) => {
            let l = l.clone();
            Arc::new(move |p, t| {
                let mut out = inner(p, t);
                let grad = l.gradient(p);
                out[0][0] += grad[0];
                out[0][1] += grad[1];
                out
            })
        }
        GaugeTransformation::NonAbelian(fields) => {
            let fields = fields.clone();
            let gens = basis.generators();
            Arc::new(move |p, t| {
                let a = inner(p, t);
                let (u, du) = GaugeTransformation::su2_with_gradient(&fields, p);
                let ud = u.adjoint();
                let mut out = ZERO_COEFFS;
                for j in 0..2 {
                    let aj = gens[0] * c(a[0][j], 0.0) + gens[1] * c(a[1][j], 0.0) + gens[2] * c(a[2][j], 0.0);
                    // U d(U^dag) = -(dU) U^dag
                    let pure = -(du[j] * ud) * c(0.0, 1.0 / basis.coupling);
                    let aj_new = u * aj * ud + pure;
                    for k in 0..3 {
                        out[k][j] = 2.0 * (gens[k] * aj_new).trace().re;
                    }
                }
                out
            })
        }
    };
    let primitive: Option<Arc<Primitive>> = match (g, &a.primitive) {
        (GaugeTransformation::Abelian(l), Some(f)) => {
            let (l, f) = (l.clone(), f.clone());
            Some(Arc::new(move |p| f(p) + l.value(p)))
        }
        _ => None,
    };
    Ok(GaugePotential {
        basis,
        sampler,
        flux_lines: a.flux_lines.clone(),
        excluded: a.excluded.clone(),
        exact: None,
        primitive,
    })
}

/// Pointwise `psi'(x) = exp(i q Lambda(x)) psi(x)` or `U(x) psi(x)`.
pub fn apply_gauge_to_wavefunction(
    psi: &WaveFunction,
    g: &GaugeTransformation,
    basis: &LieAlgebraBasis,
) -> Result<WaveFunction> {
    if basis.group != g.kind() {
        return Err(Error::KindMismatch);
    }
    let d = basis.dim();
    if psi.internal_dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: psi.internal_dim() });
    }
    let grid = psi.grid().clone();
    let mut out = psi.clone();
    let amps = out.amplitudes_mut();
    for idx in 0..grid.len() {
        let u = g.matrix_at(basis, grid.position(idx));
        apply_matrix(&u, &mut amps[idx * d..(idx + 1) * d]);
    }
    Ok(out)
}

/// In-place `v <- m v` for internal vectors of length 1 or 2.
#[inline]
pub(crate) fn apply_matrix(m: &Mat2, v: &mut [C64]) {
    if v.len() == 1 {
        v[0] *= m[(0, 0)];
    } else {
        let (a, b) = (v[0], v[1]);
        v[0] = m[(0, 0)] * a + m[(0, 1)] * b;
        v[1] = m[(1, 0)] * a + m[(1, 1)] * b;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn trapezoid_loop(a: &GaugePotential, center: Point, radius: f64, n: usize) -> f64 {
        // Closed-loop trapezoid rule: independent of the transport module.
        let mut s = 0.0;
        for i in 0..n {
            let t0 = TAU * i as f64 / n as f64;
            let t1 = TAU * (i + 1) as f64 / n as f64;
            let p0 = [center[0] + radius * t0.cos(), center[1] + radius * t0.sin()];
            let p1 = [center[0] + radius * t1.cos(), center[1] + radius * t1.sin()];
            let a0 = a.sample(p0, 0.0)[0];
            let a1 = a.sample(p1, 0.0)[0];
            let d = geom::sub(p1, p0);
            s += 0.5 * (geom::dot(a0, d) + geom::dot(a1, d));
        }
        s
    }

    #[test]
    fn generators_are_hermitian_and_orthonormal() {
        let b = LieAlgebraBasis::su2(1.0);
        let t = b.generators();
        for j in 0..3 {
            assert!((t[j] - t[j].adjoint()).norm() < 1e-14);
            for k in 0..3 {
                let tr = (t[j] * t[k]).trace();
                let expected = if j == k { 0.5 } else { 0.0 };
                assert!((tr - c(expected, 0.0)).norm() < 1e-14);
            }
        }
        assert!(LieAlgebraBasis::u1(1.0).generators().is_empty());
    }

    #[test]
    fn su2_exp_matches_series() {
        let theta = [0.3, -1.1, 0.7];
        let p = pauli();
        let x = (p[0] * c(theta[0], 0.0) + p[1] * c(theta[1], 0.0) + p[2] * c(theta[2], 0.0)) * c(0.0, 0.5);
        let mut term = Mat2::identity();
        let mut sum = Mat2::identity();
        for n in 1..40 {
            term = term * x * c(1.0 / n as f64, 0.0);
            sum += term;
        }
        assert!((su2_exp(theta) - sum).norm() < 1e-14);
    }

    #[test]
    fn zero_flux_is_zero_potential() {
        let a = GaugePotential::solenoid([0.0, 0.0], 0.0, 0.0);
        assert_eq!(a.sample([1.0, 2.0], 0.0), ZERO_COEFFS);
    }

    #[test]
    fn solenoid_circulation_by_trapezoid() {
        let a = GaugePotential::solenoid([0.0, 0.0], PI, 0.0);
        let circ = trapezoid_loop(&a, [0.0, 0.0], 2.0, 10_000);
        assert!((circ - PI).abs() < 1e-6, "{circ}");
        let outside = trapezoid_loop(&a, [5.0, 1.0], 2.0, 10_000);
        assert!(outside.abs() < 1e-8, "{outside}");
    }

    #[test]
    fn solenoid_profile_and_core() {
        let a = GaugePotential::solenoid([1.0, -1.0], 2.0, 0.5);
        let v = a.sample([3.0, -1.0], 0.0)[0];
        assert!((v[0]).abs() < 1e-15 && (v[1] - 2.0 * 2.0 / (TAU * 4.0)).abs() < 1e-15);
        assert_eq!(a.excluded_regions().len(), 1);
        assert!(a.excluded_regions()[0].contains([1.2, -1.0]));
    }

    #[test]
    fn gauge_on_potential_constant_and_linear() {
        let a = GaugePotential::solenoid([0.0, 0.0], 1.0, 0.0);
        let c0 = apply_gauge_to_potential(&a, &GaugeTransformation::Abelian(SmoothField::constant(3.0))).unwrap();
        let lin = apply_gauge_to_potential(&a, &GaugeTransformation::Abelian(SmoothField::linear([0.5, -2.0]))).unwrap();
        let p = [1.3, 0.4];
        assert_eq!(c0.sample(p, 0.0), a.sample(p, 0.0));
        let d = lin.sample(p, 0.0)[0];
        let e = a.sample(p, 0.0)[0];
        assert!((d[0] - e[0] - 0.5).abs() < 1e-15 && (d[1] - e[1] + 2.0).abs() < 1e-15);
        let su2 = GaugeTransformation::identity(GroupKind::SU2);
        assert_eq!(apply_gauge_to_potential(&a, &su2).unwrap_err(), Error::KindMismatch);
    }

    #[test]
    fn random_gauge_loop_integral_unchanged() {
        let grid = GridSpec::centered(2, 64, 0.25).unwrap();
        let a = GaugePotential::solenoid([0.1, 0.2], 1.3, 0.0);
        let g = random_smooth_gauge(11, GroupKind::U1, &grid, 4, 1.0).unwrap();
        let b = apply_gauge_to_potential(&a, &g).unwrap();
        let before = trapezoid_loop(&a, [0.0, 0.0], 3.0, 20_000);
        let after = trapezoid_loop(&b, [0.0, 0.0], 3.0, 20_000);
        assert!((before - after).abs() < 1e-8, "{}", before - after);
    }

    #[test]
    fn gauge_field_determinism_and_identity() {
        let grid = GridSpec::centered(2, 64, 0.25).unwrap();
        let a = random_smooth_gauge(5, GroupKind::SU2, &grid, 3, 1.0).unwrap();
        let b = random_smooth_gauge(5, GroupKind::SU2, &grid, 3, 1.0).unwrap();
        assert_eq!(a, b);
        let z = random_smooth_gauge(5, GroupKind::U1, &grid, 3, 0.0).unwrap();
        assert!(matches!(&z, GaugeTransformation::Abelian(f) if f.is_zero()));
        assert!(random_smooth_gauge(5, GroupKind::U1, &grid, 17, 1.0).is_err());
    }

    #[test]
    fn su2_gauge_is_unitary_everywhere() {
        let grid = GridSpec::centered(2, 32, 0.25).unwrap();
        let basis = LieAlgebraBasis::su2(1.0);
        let g = random_smooth_gauge(9, GroupKind::SU2, &grid, 4, 2.0).unwrap();
        for idx in 0..grid.len() {
            let u = g.matrix_at(&basis, grid.position(idx));
            let r = (u * u.adjoint() - Mat2::identity()).norm();
            assert!(r < 1e-12);
        }
    }

    #[test]
    fn su2_gradient_matches_finite_difference() {
        let grid = GridSpec::centered(2, 32, 0.25).unwrap();
        let Ok(GaugeTransformation::NonAbelian(f)) = random_smooth_gauge(3, GroupKind::SU2, &grid, 4, 2.0) else {
            panic!()
        };
        let p = [0.37, -1.2];
        let (_, du) = GaugeTransformation::su2_with_gradient(&f, p);
        let h = 1e-5;
        for j in 0..2 {
            let mut pp = p;
            let mut pm = p;
            pp[j] += h;
            pm[j] -= h;
            let fd = (GaugeTransformation::su2_with_gradient(&f, pp).0
                - GaugeTransformation::su2_with_gradient(&f, pm).0)
                * c(1.0 / (2.0 * h), 0.0);
            assert!((fd - du[j]).norm() < 1e-8);
        }
    }

    #[test]
    fn nonabelian_gauge_keeps_potential_hermitian_traceless() {
        let grid = GridSpec::centered(2, 32, 0.25).unwrap();
        let basis = LieAlgebraBasis::su2(0.7);
        let a = GaugePotential::smooth_random(1, basis, &grid, 3, 1.0).unwrap();
        let g = random_smooth_gauge(2, GroupKind::SU2, &grid, 3, 1.0).unwrap();
        let b = apply_gauge_to_potential(&a, &g).unwrap();
        // Reconstruct the matrix directly and compare with the coefficient route.
        let p = [0.4, 0.9];
        let Ok(GaugeTransformation::NonAbelian(f)) = Ok::<_, ()>(g.clone()) else { panic!() };
        let (u, du) = GaugeTransformation::su2_with_gradient(&f, p);
        for j in 0..2 {
            let direct = u * a.algebra_matrix(p, 0.0, j) * u.adjoint()
                + u * (du[j] * c(1.0, 0.0)).adjoint() * c(0.0, 1.0 / 0.7);
            assert!((direct - b.algebra_matrix(p, 0.0, j)).norm() < 1e-12);
        }
    }

    #[test]
    fn wavefunction_gauge_roundtrip() {
        let grid = GridSpec::centered(2, 64, 0.25).unwrap();
        let basis = LieAlgebraBasis::su2(1.0);
        let psi = crate::grid::gaussian_packet(&grid, [0.0, 0.0], 0.5, [0.5, 0.0], 0.0)
            .unwrap()
            .with_spinor(&[c(0.6, 0.0), c(0.0, 0.8)])
            .unwrap();
        let g = random_smooth_gauge(4, GroupKind::SU2, &grid, 3, 1.5).unwrap();
        let once = apply_gauge_to_wavefunction(&psi, &g, &basis).unwrap();
        assert!((once.norm_sqr() - psi.norm_sqr()).abs() < 1e-12);
        let back = apply_gauge_to_wavefunction(&once, &g.inverse(), &basis).unwrap();
        let err = back.amplitudes().iter().zip(psi.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        let u1 = LieAlgebraBasis::u1(1.0);
        assert!(apply_gauge_to_wavefunction(&psi, &GaugeTransformation::identity(GroupKind::U1), &u1).is_err());
    }

    #[test]
    fn constant_abelian_gauge_is_global_phase() {
        let grid = GridSpec::centered(1, 256, 0.1).unwrap();
        let basis = LieAlgebraBasis::u1(2.0);
        let psi = crate::grid::gaussian_packet(&grid, [0.0, 0.0], 1.0, [0.0, 0.0], 0.0).unwrap();
        let g = GaugeTransformation::Abelian(SmoothField::constant(0.3));
        let out = apply_gauge_to_wavefunction(&psi, &g, &basis).unwrap();
        let expected = psi.scaled(C64::from_polar(1.0, 0.6));
        assert!(out.amplitudes().iter().zip(expected.amplitudes()).all(|(a, b)| (a - b).norm() < 1e-15));
    }
}
