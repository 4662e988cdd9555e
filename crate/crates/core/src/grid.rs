//! Wave functions on periodic uniform grids.
//!
//! Amplitudes are stored point-major with the internal (gauge representation)
//! index fastest: `amps[point * internal_dim + c]`. In two dimensions the
//! point index is `iy * n + ix`. Units are `hbar = 1`.

use std::f64::consts::TAU;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::observables::Operator;
use crate::par;

pub type C64 = Complex64;

/// Relative tail amplitude allowed where a packet meets the periodic boundary.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-12;

/// Cross-overlap below which two packets count as disjoint.
pub const DEFAULT_OVERLAP_TOL: f64 = 1e-8;

/// Highest momentum moment accepted by [`momentum_moment`].
pub const MAX_MOMENT_ORDER: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    spacing: f64,
    origin: Point,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, spacing: f64, origin: Point) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {dim}")));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {spacing}")));
        }
        if !origin.iter().all(|o| o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        let origin = if dim == 1 { [origin[0], 0.0] } else { origin };
        Ok(Self { dim, points, spacing, origin })
    }

    /// Grid whose extent is centred on the coordinate origin.
    pub fn centered(dim: usize, points: usize, spacing: f64) -> Result<Self> {
        let half = -(points as f64) * spacing / 2.0;
        Self::new(dim, points, spacing, [half, half])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn extent(&self) -> f64 {
        self.points as f64 * self.spacing
    }

    /// Total number of grid points.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `spacing^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn axis_indices(&self, idx: usize) -> (usize, usize) {
        (idx % self.points, idx / self.points)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.points + ix
    }

    /// Position of grid point `idx` (the y-component is 0 on 1D grids).
    pub fn position(&self, idx: usize) -> Point {
        let (ix, iy) = self.axis_indices(idx);
        let x = self.origin[0] + ix as f64 * self.spacing;
        if self.dim == 1 {
            [x, 0.0]
        } else {
            [x, self.origin[1] + iy as f64 * self.spacing]
        }
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points as i64;
        let dk = TAU / self.extent();
        (0..n)
            .map(|i| if i < n / 2 { i as f64 * dk } else { (i - n) as f64 * dk })
            .collect()
    }

    /// Wave vector of Fourier mode `idx` (same layout as positions).
    pub fn wave_vector(&self, ks: &[f64], idx: usize) -> Point {
        let (ix, iy) = self.axis_indices(idx);
        if self.dim == 1 {
            [ks[ix], 0.0]
        } else {
            [ks[ix], ks[iy]]
        }
    }

    /// Distance from `p` to the nearest wrap boundary, per axis (negative when outside).
    fn boundary_distance(&self, p: Point) -> f64 {
        let mut d = f64::INFINITY;
        for a in 0..self.dim {
            let lo = p[a] - self.origin[a];
            let hi = self.origin[a] + self.extent() - p[a];
            d = d.min(lo.min(hi));
        }
        d
    }
}

/// FFT plans for one grid. Transforms act on a single internal component.
pub(crate) struct Spectral {
    points: usize,
    dim: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    pub(crate) fn new(grid: &GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            points: grid.points,
            dim: grid.dim,
            forward: planner.plan_fft_forward(grid.points),
            inverse: planner.plan_fft_inverse(grid.points),
        }
    }

    fn transform(&self, data: &mut [C64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.points;
        if self.dim == 1 {
            fft.process(data);
            return;
        }
        let rows = |buf: &mut [C64]| {
            par::for_each_chunk_mut(buf, n * 8.min(n), |_, c| fft.process(c));
        };
        rows(data);
        transpose(data, n);
        rows(data);
        transpose(data, n);
    }

    pub(crate) fn forward(&self, data: &mut [C64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/N^dim` normalisation.
    pub(crate) fn inverse(&self, data: &mut [C64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / (self.points.pow(self.dim as u32) as f64);
        data.iter_mut().for_each(|z| *z *= s);
    }

    /// 1D transform of each length-`n` row of a contiguous buffer.
    pub(crate) fn forward_rows(&self, data: &mut [C64]) {
        self.forward.process(data);
    }

    pub(crate) fn inverse_rows(&self, data: &mut [C64]) {
        self.inverse.process(data);
        let s = 1.0 / self.points as f64;
        data.iter_mut().for_each(|z| *z *= s);
    }
}

fn transpose(data: &mut [C64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: GridSpec,
    internal_dim: usize,
    amps: Vec<C64>,
}

impl WaveFunction {
    pub fn new(grid: GridSpec, internal_dim: usize, amps: Vec<C64>) -> Result<Self> {
        if internal_dim == 0 {
            return Err(Error::OutOfRange { what: "internal_dim", value: "0".into() });
        }
        let expected = grid.len() * internal_dim;
        if amps.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: amps.len() });
        }
        Ok(Self { grid, internal_dim, amps })
    }

    pub fn zeros(grid: GridSpec, internal_dim: usize) -> Self {
        let n = grid.len() * internal_dim;
        Self { grid, internal_dim, amps: vec![C64::new(0.0, 0.0); n] }
    }

    /// Build from a pointwise function of position and internal index.
    pub fn from_fn<F>(grid: GridSpec, internal_dim: usize, f: F) -> Self
    where
        F: Fn(Point, usize) -> C64 + Sync + Send,
    {
        let amps = par::map_indexed(grid.len() * internal_dim, |i| {
            f(grid.position(i / internal_dim), i % internal_dim)
        });
        Self { grid, internal_dim, amps }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn internal_dim(&self) -> usize {
        self.internal_dim
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    /// Internal-space vector at grid point `idx`.
    pub fn at(&self, idx: usize) -> &[C64] {
        &self.amps[idx * self.internal_dim..(idx + 1) * self.internal_dim]
    }

    pub fn component(&self, c: usize) -> Vec<C64> {
        self.amps.iter().skip(c).step_by(self.internal_dim).copied().collect()
    }

    pub fn set_component(&mut self, c: usize, values: &[C64]) {
        let d = self.internal_dim;
        for (i, v) in values.iter().enumerate() {
            self.amps[i * d + c] = *v;
        }
    }

    /// Largest internal-vector magnitude at point `idx`.
    pub fn magnitude_at(&self, idx: usize) -> f64 {
        self.at(idx).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::OutOfRange { what: "norm", value: n.to_string() });
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            grid: self.grid.clone(),
            internal_dim: self.internal_dim,
            amps: self.amps.iter().map(|z| z * s).collect(),
        }
    }

    /// Tensor a scalar state with a fixed internal spinor.
    pub fn with_spinor(&self, spinor: &[C64]) -> Result<Self> {
        if self.internal_dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: self.internal_dim });
        }
        let d = spinor.len();
        let mut amps = Vec::with_capacity(self.amps.len() * d);
        for z in &self.amps {
            amps.extend(spinor.iter().map(|s| z * s));
        }
        Self::new(self.grid.clone(), d, amps)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.internal_dim != other.internal_dim {
            return Err(Error::DimensionMismatch {
                expected: self.internal_dim,
                found: other.internal_dim,
            });
        }
        Ok(())
    }

    /// Apply `f` in Fourier space, component by component.
    pub(crate) fn map_spectral<F>(&self, spectral: &Spectral, f: F) -> Self
    where
        F: Fn(usize, C64) -> C64,
    {
        let mut out = self.clone();
        for c in 0..self.internal_dim {
            let mut comp = self.component(c);
            spectral.forward(&mut comp);
            for (i, z) in comp.iter_mut().enumerate() {
                *z = f(i, *z);
            }
            spectral.inverse(&mut comp);
            out.set_component(c, &comp);
        }
        out
    }

    /// CSV dump: `index, x[, y], re_0, im_0, ...`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = String::from("index,x");
        if self.grid.dim == 2 {
            header.push_str(",y");
        }
        for c in 0..self.internal_dim {
            header.push_str(&format!(",re_{c},im_{c}"));
        }
        writeln!(w, "{header}")?;
        for idx in 0..self.grid.len() {
            let p = self.grid.position(idx);
            write!(w, "{idx},{}", p[0])?;
            if self.grid.dim == 2 {
                write!(w, ",{}", p[1])?;
            }
            for z in self.at(idx) {
                write!(w, ",{},{}", z.re, z.im)?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Normalised Gaussian `exp(-|x-c|^2 / (4 width^2)) exp(i (p.x + phase))`.
pub fn gaussian_packet(
    grid: &GridSpec,
    center: Point,
    width: f64,
    momentum: Point,
    phase: f64,
) -> Result<WaveFunction> {
    gaussian_packet_with_tolerance(grid, center, width, momentum, phase, DEFAULT_BOUNDARY_TOL)
}

pub fn gaussian_packet_with_tolerance(
    grid: &GridSpec,
    center: Point,
    width: f64,
    momentum: Point,
    phase: f64,
    boundary_tol: f64,
) -> Result<WaveFunction> {
    if !(width >= 2.0 * grid.spacing) {
        return Err(Error::Resolution { width, spacing: grid.spacing });
    }
    let d = grid.boundary_distance(center);
    let tail = if d <= 0.0 { 1.0 } else { (-(d * d) / (4.0 * width * width)).exp() };
    if tail > boundary_tol {
        return Err(Error::Boundary { tail, tolerance: boundary_tol });
    }
    let (center, momentum) = if grid.dim == 1 {
        ([center[0], 0.0], [momentum[0], 0.0])
    } else {
        (center, momentum)
    };
    let amp = (TAU * width * width).powf(-(grid.dim as f64) / 4.0);
    Ok(WaveFunction::from_fn(grid.clone(), 1, |x, _| {
        let r = geom::sub(x, center);
        let envelope = amp * (-geom::dot(r, r) / (4.0 * width * width)).exp();
        C64::from_polar(envelope, geom::dot(momentum, x) + phase)
    }))
}

/// `coeff_a * a + coeff_b * b`, not renormalised.
pub fn superpose(a: &WaveFunction, b: &WaveFunction, coeff_a: C64, coeff_b: C64) -> Result<WaveFunction> {
    a.check_compatible(b)?;
    let amps = a.amps.iter().zip(&b.amps).map(|(x, y)| coeff_a * x + coeff_b * y).collect();
    Ok(WaveFunction { grid: a.grid.clone(), internal_dim: a.internal_dim, amps })
}

/// `<a|b>`, conjugate-linear in `a`, internal index contracted.
pub fn inner_product(a: &WaveFunction, b: &WaveFunction) -> Result<C64> {
    a.check_compatible(b)?;
    let s: C64 = a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum();
    Ok(s * a.grid.cell_volume())
}

/// `exp(-i p.ell) psi`, i.e. `psi(x - ell)` on the periodic domain, applied spectrally.
pub fn translate(psi: &WaveFunction, ell: Point) -> WaveFunction {
    let spectral = Spectral::new(&psi.grid);
    translate_with(psi, ell, &spectral)
}

pub(crate) fn translate_with(psi: &WaveFunction, ell: Point, spectral: &Spectral) -> WaveFunction {
    let grid = &psi.grid;
    let ks = grid.wavenumbers();
    let ell = if grid.dim == 1 { [ell[0], 0.0] } else { ell };
    psi.map_spectral(spectral, |i, z| {
        let k = grid.wave_vector(&ks, i);
        z * C64::from_polar(1.0, -geom::dot(k, ell))
    })
}

/// Exact cyclic roll by whole grid cells: `psi'(i) = psi(i - shift)`.
pub fn roll(psi: &WaveFunction, shift: [isize; 2]) -> WaveFunction {
    let grid = &psi.grid;
    let n = grid.points as isize;
    let d = psi.internal_dim;
    let mut out = WaveFunction::zeros(grid.clone(), d);
    for idx in 0..grid.len() {
        let (ix, iy) = grid.axis_indices(idx);
        let sx = (ix as isize - shift[0]).rem_euclid(n) as usize;
        let sy = if grid.dim == 2 { (iy as isize - shift[1]).rem_euclid(n) as usize } else { 0 };
        let src = grid.index(sx, sy);
        out.amps[idx * d..(idx + 1) * d].copy_from_slice(psi.at(src));
    }
    out
}

/// `<psi| p^n |psi>` along `axis` by spectral differentiation (complex).
pub fn momentum_moment_complex(psi: &WaveFunction, n: u32, axis: usize) -> Result<C64> {
    if n == 0 || n > MAX_MOMENT_ORDER {
        return Err(Error::OutOfRange { what: "moment order", value: n.to_string() });
    }
    if axis >= psi.grid.dim {
        return Err(Error::OutOfRange { what: "axis", value: axis.to_string() });
    }
    let grid = &psi.grid;
    let ks = grid.wavenumbers();
    let spectral = Spectral::new(grid);
    let pn = psi.map_spectral(&spectral, |i, z| z * grid.wave_vector(&ks, i)[axis].powi(n as i32));
    inner_product(psi, &pn)
}

/// Real part of `<psi| p^n |psi>` (the imaginary part is roundoff).
pub fn momentum_moment(psi: &WaveFunction, n: u32, axis: usize) -> Result<f64> {
    Ok(momentum_moment_complex(psi, n, axis)?.re)
}

/// Modulus overlap `int |a||b| dx`, the support-disjointness measure.
pub fn modulus_overlap(a: &WaveFunction, b: &WaveFunction) -> Result<f64> {
    a.check_compatible(b)?;
    let s: f64 = (0..a.grid.len()).map(|i| a.magnitude_at(i) * b.magnitude_at(i)).sum();
    Ok(s * a.grid.cell_volume())
}

/// Rigid rotation `psi'(x) = psi(R(-angle)(x - center) + center)` on a 2D grid.
///
/// Uses the three-shear factorisation with spectral row/column shifts, so it
/// is exact for band-limited states that stay clear of the boundary.
pub fn rotate_about(psi: &WaveFunction, center: Point, angle: f64) -> Result<WaveFunction> {
    if psi.grid.dim != 2 {
        return Err(Error::Unsupported("rotation needs a 2D grid".into()));
    }
    let steps = (angle.abs() / (std::f64::consts::FRAC_PI_4)).ceil().max(1.0) as usize;
    let step = angle / steps as f64;
    let spectral = Spectral::new(&psi.grid);
    let mut out = psi.clone();
    let a = -(step / 2.0).tan();
    let b = step.sin();
    for _ in 0..steps {
        out = shear(&out, &spectral, 0, a, center);
        out = shear(&out, &spectral, 1, b, center);
        out = shear(&out, &spectral, 0, a, center);
    }
    Ok(out)
}

/// Push-forward by a shear along `axis`: shift each line by `factor * (other - center_other)`.
fn shear(psi: &WaveFunction, spectral: &Spectral, axis: usize, factor: f64, center: Point) -> WaveFunction {
    let grid = &psi.grid;
    let n = grid.points;
    let ks = grid.wavenumbers();
    let other = 1 - axis;
    let mut out = psi.clone();
    let mut line = vec![C64::new(0.0, 0.0); n];
    for c in 0..psi.internal_dim {
        for j in 0..n {
            let coord = grid.origin[other] + j as f64 * grid.spacing;
            let shift = factor * (coord - center[other]);
            let idx = |i: usize| if axis == 0 { grid.index(i, j) } else { grid.index(j, i) };
            for (i, z) in line.iter_mut().enumerate() {
                *z = psi.amps[idx(i) * psi.internal_dim + c];
            }
            spectral.forward_rows(&mut line);
            for (z, k) in line.iter_mut().zip(&ks) {
                *z *= C64::from_polar(1.0, -k * shift);
            }
            spectral.inverse_rows(&mut line);
            for (i, z) in line.iter().enumerate() {
                out.amps[idx(i) * psi.internal_dim + c] = *z;
            }
        }
    }
    out
}

/// Weighted ensemble of states; `rho = sum_i w_i |psi_i><psi_i|`.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    components: Vec<(f64, WaveFunction)>,
}

impl DensityMatrix {
    pub fn new(components: Vec<(f64, WaveFunction)>) -> Result<Self> {
        let Some((_, first)) = components.first() else {
            return Err(Error::OutOfRange { what: "mixture size", value: "0".into() });
        };
        if components.iter().any(|(w, _)| !(*w >= 0.0)) {
            return Err(Error::OutOfRange { what: "mixture weight", value: "negative".into() });
        }
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange { what: "weight sum", value: total.to_string() });
        }
        for (_, s) in &components[1..] {
            first.check_compatible(s)?;
        }
        Ok(Self { components })
    }

    pub fn pure(state: WaveFunction) -> Self {
        Self { components: vec![(1.0, state)] }
    }

    /// Equal-weight mixture of the given states.
    pub fn equal_mixture(states: Vec<WaveFunction>) -> Result<Self> {
        let w = 1.0 / states.len().max(1) as f64;
        Self::new(states.into_iter().map(|s| (w, s)).collect())
    }

    pub fn components(&self) -> &[(f64, WaveFunction)] {
        &self.components
    }

    /// `tr(rho op) = sum_i w_i <psi_i|op|psi_i>`.
    pub fn trace(&self, op: &dyn Operator) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for (w, s) in &self.components {
            acc += *w * inner_product(s, &op.apply(s)?)?;
        }
        Ok(acc)
    }
}

/// Free-function form of [`DensityMatrix::trace`].
pub fn mixture_trace(rho: &DensityMatrix, op: &dyn Operator) -> Result<C64> {
    rho.trace(op)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line() -> GridSpec {
        GridSpec::centered(1, 1024, 0.05).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::centered(3, 64, 0.1).is_err());
        assert!(GridSpec::centered(1, 100, 0.1).is_err());
        assert!(GridSpec::centered(1, 4, 0.1).is_err());
        assert!(GridSpec::centered(1, 64, 0.0).is_err());
    }

    #[test]
    fn packet_errors() {
        let g = line();
        assert!(matches!(
            gaussian_packet(&g, [0.0, 0.0], 0.09, [0.0, 0.0], 0.0),
            Err(Error::Resolution { .. })
        ));
        assert!(matches!(
            gaussian_packet(&g, [24.0, 0.0], 1.0, [0.0, 0.0], 0.0),
            Err(Error::Boundary { .. })
        ));
    }

    #[test]
    fn symmetric_packet_is_real_and_even() {
        let g = line();
        let psi = gaussian_packet(&g, [0.0, 0.0], 1.0, [0.0, 0.0], 0.0).unwrap();
        let n = g.points_per_axis();
        for i in 1..n / 2 {
            let a = psi.at(n / 2 + i)[0];
            let b = psi.at(n / 2 - i)[0];
            assert!(a.im.abs() < 1e-15 && a.re > 0.0);
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn packet_norm_by_quadrature() {
        // The analytic prefactor gives unit norm; the Riemann sum of a
        // resolved Gaussian is spectrally accurate.
        let psi = gaussian_packet(&line(), [0.3, 0.0], 1.0, [0.0, 0.0], 0.0).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn phase_is_global() {
        let g = line();
        let a = gaussian_packet(&g, [1.0, 0.0], 1.0, [2.0, 0.0], 0.0).unwrap();
        let b = gaussian_packet(&g, [1.0, 0.0], 1.0, [2.0, 0.0], 0.7).unwrap();
        let expected = a.scaled(C64::from_polar(1.0, 0.7));
        for (x, y) in b.amplitudes().iter().zip(expected.amplitudes()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn superpose_identities() {
        let g = line();
        let a = gaussian_packet(&g, [-3.0, 0.0], 1.0, [0.0, 0.0], 0.0).unwrap();
        let b = gaussian_packet(&g, [3.0, 0.0], 1.0, [0.0, 0.0], 0.0).unwrap();
        let half = C64::new(0.5, 0.0);
        assert_eq!(superpose(&a, &a, half, half).unwrap(), a);
        assert_eq!(superpose(&a, &b, C64::new(1.0, 0.0), C64::new(0.0, 0.0)).unwrap(), a);
        let other = GridSpec::centered(1, 512, 0.05).unwrap();
        let c = gaussian_packet(&other, [0.0, 0.0], 1.0, [0.0, 0.0], 0.0).unwrap();
        assert_eq!(superpose(&a, &c, half, half), Err(Error::GridMismatch));
    }

    #[test]
    fn inner_product_basics() {
        let g = line();
        let a = gaussian_packet(&g, [-10.0, 0.0], 0.5, [1.0, 0.0], 0.0).unwrap();
        let b = gaussian_packet(&g, [10.0, 0.0], 0.5, [0.0, 0.0], 0.3).unwrap();
        assert!((inner_product(&a, &a).unwrap() - 1.0).norm() < 1e-12);
        assert!(inner_product(&a, &b).unwrap().norm() < 1e-12);
        let c = gaussian_packet(&g, [-9.0, 0.0], 0.7, [0.5, 0.0], 0.0).unwrap();
        let ab = inner_product(&a, &c).unwrap();
        let ba = inner_product(&c, &a).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-15);
    }

    #[test]
    fn translation_identities() {
        let g = line();
        let psi = gaussian_packet(&g, [0.0, 0.0], 1.0, [1.5, 0.0], 0.0).unwrap();
        let id = translate(&psi, [0.0, 0.0]);
        let period = translate(&psi, [g.extent(), 0.0]);
        for ((x, y), z) in psi.amplitudes().iter().zip(id.amplitudes()).zip(period.amplitudes()) {
            assert!((x - y).norm() < 1e-13);
            assert!((x - z).norm() < 1e-12);
        }
    }

    #[test]
    fn spectral_shift_matches_roll() {
        let g = line();
        let psi = gaussian_packet(&g, [0.0, 0.0], 1.0, [3.0, 0.0], 0.2).unwrap();
        let m = 37;
        let s = translate(&psi, [m as f64 * g.spacing(), 0.0]);
        let r = roll(&psi, [m, 0]);
        let err = s.amplitudes().iter().zip(r.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn translation_group_law_and_unitarity() {
        let g = line();
        let psi = gaussian_packet(&g, [-2.0, 0.0], 1.0, [1.0, 0.0], 0.0).unwrap();
        let a = translate(&translate(&psi, [0.37, 0.0]), [1.91, 0.0]);
        let b = translate(&psi, [2.28, 0.0]);
        let err = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
        assert!((a.norm_sqr() - psi.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn moments_of_gaussian() {
        let g = line();
        let sigma = 0.8;
        let psi = gaussian_packet(&g, [0.0, 0.0], sigma, [0.0, 0.0], 0.0).unwrap();
        assert!(momentum_moment(&psi, 1, 0).unwrap().abs() < 1e-12);
        let p2 = momentum_moment(&psi, 2, 0).unwrap();
        assert!((p2 - 1.0 / (4.0 * sigma * sigma)).abs() < 1e-6);
        assert!(momentum_moment(&psi, 9, 0).is_err());
        assert!(momentum_moment(&psi, 1, 1).is_err());
        assert!(momentum_moment_complex(&psi, 3, 0).unwrap().im.abs() < 1e-8);
    }

    #[test]
    fn rotation_matches_rotated_gaussian() {
        let g = GridSpec::centered(2, 64, 0.25).unwrap();
        let c = [0.3, -0.2];
        let psi = gaussian_packet(&g, [1.0, 0.5], 0.5, [0.8, 0.0], 0.0).unwrap();
        let angle = 2.0 * PI / 3.0;
        let rotated = rotate_about(&psi, c, angle).unwrap();
        let center = geom::add(geom::rotate(geom::sub([1.0, 0.5], c), angle), c);
        let k = geom::rotate([0.8, 0.0], angle);
        // The plane-wave phase is referenced to the coordinate origin, so the
        // rotated packet equals a fresh packet up to a constant phase.
        let fresh = gaussian_packet(&g, center, 0.5, k, 0.0).unwrap();
        let ov = inner_product(&fresh, &rotated).unwrap();
        assert!((ov.norm() - 1.0).abs() < 1e-8, "{}", ov.norm());
    }

    #[test]
    fn density_matrix_validation() {
        let g = line();
        let a = gaussian_packet(&g, [0.0, 0.0], 1.0, [0.0, 0.0], 0.0).unwrap();
        assert!(DensityMatrix::new(vec![(0.6, a.clone()), (0.6, a.clone())]).is_err());
        assert!(DensityMatrix::new(vec![(0.5, a.clone()), (0.5, a.clone())]).is_ok());
        assert!(DensityMatrix::new(vec![]).is_err());
    }

    #[test]
    fn csv_dump_has_header_and_rows() {
        let g = GridSpec::centered(1, 8, 0.5).unwrap();
        let psi = WaveFunction::zeros(g, 2);
        let mut buf = Vec::new();
        psi.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,x,re_0,im_0,re_1,im_1\n"));
        assert_eq!(text.lines().count(), 9);
    }
}
