//! Split-step evolution under minimal coupling and the moving-packet AB scenario.
//!
//! The kinetic factor is applied spectrally with the canonical momentum. Two
//! treatments of the potential are offered:
//!
//! * `CarrierMomentum`: the `A`-dependent terms become a real-space factor
//!   `exp(-i V dt)` with `V = -(q/m) A.p0 - q^2 |A|^2 / 2m`, where `p0` is the
//!   packet's kinetic carrier momentum. Valid for narrow-band packets.
//! * `Axial`: exact for Abelian potentials with a known primitive `chi`
//!   (`A = grad chi` off the flux lines): `psi -> e^{iq chi} K(dt) e^{-iq chi} psi`.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::gauge::{apply_matrix, su2_exp, GaugePotential, GroupKind, Mat2};
use crate::geom::{self, Point};
use crate::grid::{gaussian_packet, momentum_moment, GridSpec, Spectral, WaveFunction, C64};
use crate::observables::{g_gamma_expectation, reduction_loop, two_packet_state, NonlocalOperatorSpec};
use crate::par;
use crate::transport::{Curve, TransportOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    CarrierMomentum,
    Axial,
}

pub const DEFAULT_CORE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub steps: usize,
    pub mass: f64,
    pub potential: GaugePotential,
    pub record_every: usize,
    pub scheme: Scheme,
    /// Kinetic carrier momentum for the carrier scheme; estimated from the
    /// initial state's mean momentum when absent.
    pub carrier: Option<Point>,
    /// Largest mass fraction allowed inside excluded discs.
    pub core_tolerance: f64,
}

impl EvolutionConfig {
    pub fn new(dt: f64, steps: usize, potential: GaugePotential) -> Self {
        Self {
            dt,
            steps,
            mass: 1.0,
            potential,
            record_every: steps.max(1),
            scheme: Scheme::CarrierMomentum,
            carrier: None,
            core_tolerance: DEFAULT_CORE_TOLERANCE,
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::OutOfRange { what: "dt", value: self.dt.to_string() });
        }
        if self.steps == 0 {
            return Err(Error::OutOfRange { what: "steps", value: "0".into() });
        }
        if !(self.mass > 0.0) {
            return Err(Error::OutOfRange { what: "mass", value: self.mass.to_string() });
        }
        if self.record_every == 0 {
            return Err(Error::OutOfRange { what: "record_every", value: "0".into() });
        }
        let limit = grid.spacing() * grid.spacing() * self.mass;
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::OutOfRange {
                what: "dt",
                value: format!("{} exceeds spacing^2 * mass = {limit}", self.dt),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub psi: WaveFunction,
}

/// Fraction of the norm inside the potential's excluded discs.
pub fn excluded_mass_fraction(psi: &WaveFunction, a: &GaugePotential) -> f64 {
    if a.excluded_regions().is_empty() {
        return 0.0;
    }
    let grid = psi.grid();
    let d = psi.internal_dim();
    let mut inside = 0.0;
    for idx in 0..grid.len() {
        let p = grid.position(idx);
        if a.excluded_regions().iter().any(|disc| disc.contains(p)) {
            inside += psi.amplitudes()[idx * d..(idx + 1) * d].iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    inside * grid.cell_volume() / psi.norm_sqr()
}

fn check_core(psi: &WaveFunction, cfg: &EvolutionConfig) -> Result<()> {
    let fraction = excluded_mass_fraction(psi, &cfg.potential);
    if fraction > cfg.core_tolerance {
        return Err(Error::CoreCollision { fraction });
    }
    Ok(())
}

/// Multiply every Fourier mode by `factor[mode]`.
fn kinetic(psi: &WaveFunction, spectral: &Spectral, factor: &[C64]) -> WaveFunction {
    psi.map_spectral(spectral, |i, z| z * factor[i])
}

fn pointwise(psi: &mut WaveFunction, factors: &[Mat2]) {
    let d = psi.internal_dim();
    for (chunk, m) in psi.amplitudes_mut().chunks_mut(d).zip(factors) {
        apply_matrix(m, chunk);
    }
}

fn scalar_factors(values: &[f64], scale: f64) -> Vec<Mat2> {
    values
        .iter()
        .map(|v| {
            let mut m = Mat2::identity();
            m[(0, 0)] = C64::from_polar(1.0, scale * v);
            m
        })
        .collect()
}

/// `exp(-i V dt)` at each grid point for the carrier scheme.
fn carrier_factors(grid: &GridSpec, cfg: &EvolutionConfig, carrier: Point) -> Vec<Mat2> {
    let a = &cfg.potential;
    let basis = a.basis();
    let (q, m, dt) = (basis.coupling, cfg.mass, cfg.dt);
    par::map_indexed(grid.len(), |idx| {
        let v = a.sample(grid.position(idx), 0.0);
        match basis.group {
            GroupKind::U1 => {
                let pot = -(q / m) * geom::dot(v[0], carrier) - q * q * geom::dot(v[0], v[0]) / (2.0 * m);
                let mut out = Mat2::identity();
                out[(0, 0)] = C64::from_polar(1.0, -pot * dt);
                out
            }
            GroupKind::SU2 => {
                // V = c0 + c.sigma, with (T.A)^2 = |A|^2 / 4 for T = sigma / 2.
                let a2: f64 = v.iter().map(|vk| geom::dot(*vk, *vk)).sum();
                let c0 = -q * q * a2 / (8.0 * m);
                let c = [0, 1, 2].map(|k| -(q / (2.0 * m)) * geom::dot(v[k], carrier));
                // exp(-i dt c.sigma) = exp(i theta.sigma/2) with theta = -2 dt c
                su2_exp(c.map(|ck| -2.0 * dt * ck)) * C64::from_polar(1.0, -c0 * dt)
            }
        }
    })
}

fn kinetic_factor(grid: &GridSpec, mass: f64, tau: f64) -> Vec<C64> {
    let ks = grid.wavenumbers();
    (0..grid.len())
        .map(|i| {
            let k = grid.wave_vector(&ks, i);
            C64::from_polar(1.0, -geom::dot(k, k) * tau / (2.0 * mass))
        })
        .collect()
}

fn estimate_carrier(psi: &WaveFunction) -> Result<Point> {
    let norm = psi.norm_sqr();
    let mut p = [0.0, 0.0];
    for (axis, slot) in p.iter_mut().enumerate().take(psi.grid().dim()) {
        *slot = momentum_moment(psi, 1, axis)? / norm;
    }
    Ok(p)
}

/// Second-order split-step evolution; snapshots at step 0, every
/// `record_every` steps and at the final step.
pub fn evolve(psi: &WaveFunction, cfg: &EvolutionConfig) -> Result<Vec<Snapshot>> {
    let grid = psi.grid().clone();
    cfg.validate(&grid)?;
    let d = cfg.potential.basis().dim();
    if psi.internal_dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: psi.internal_dim() });
    }
    check_core(psi, cfg)?;
    let spectral = Spectral::new(&grid);
    let mut out = vec![Snapshot { step: 0, time: 0.0, psi: psi.clone() }];
    let records = |s: usize| s == cfg.steps || s % cfg.record_every == 0;

    match cfg.scheme {
        Scheme::Axial => {
            let a = &cfg.potential;
            if a.basis().group != GroupKind::U1 || !a.has_primitive() {
                return Err(Error::Unsupported("axial scheme needs an Abelian potential with a primitive".into()));
            }
            let q = a.basis().coupling;
            let chi: Vec<f64> = (0..grid.len()).map(|i| a.primitive(grid.position(i)).unwrap()).collect();
            let undo = scalar_factors(&chi, -q);
            let redo = scalar_factors(&chi, q);
            let full = kinetic_factor(&grid, cfg.mass, cfg.dt);
            let mut phi = psi.clone();
            pointwise(&mut phi, &undo);
            for s in 1..=cfg.steps {
                phi = kinetic(&phi, &spectral, &full);
                if records(s) {
                    let mut snap = phi.clone();
                    pointwise(&mut snap, &redo);
                    check_core(&snap, cfg)?;
                    out.push(Snapshot { step: s, time: s as f64 * cfg.dt, psi: snap });
                }
            }
        }
        Scheme::CarrierMomentum => {
            let carrier = match cfg.carrier {
                Some(c) => c,
                None => estimate_carrier(psi)?,
            };
            let pot = carrier_factors(&grid, cfg, carrier);
            let half = kinetic_factor(&grid, cfg.mass, cfg.dt / 2.0);
            let full = kinetic_factor(&grid, cfg.mass, cfg.dt);
            // Adjacent half kinetic steps are fused between records.
            let mut phi = kinetic(psi, &spectral, &half);
            for s in 1..=cfg.steps {
                pointwise(&mut phi, &pot);
                if records(s) {
                    let snap = kinetic(&phi, &spectral, &half);
                    check_core(&snap, cfg)?;
                    if s < cfg.steps {
                        phi = kinetic(&snap, &spectral, &half);
                    }
                    out.push(Snapshot { step: s, time: s as f64 * cfg.dt, psi: snap });
                } else {
                    phi = kinetic(&phi, &spectral, &full);
                }
            }
        }
    }
    Ok(out)
}

/// Free Gaussian evolution: centre `x0 + p t / m`, width `w sqrt(1 + (t / 2 m w^2)^2)`.
pub fn free_gaussian_center_width(x0: f64, p: f64, width: f64, mass: f64, t: f64) -> (f64, f64) {
    let tau = t / (2.0 * mass * width * width);
    (x0 + p * t / mass, width * (1.0 + tau * tau).sqrt())
}

/// Two packets at `y = flux_y -/+ impact_offset`, launched along `+x` past a flux line.
#[derive(Debug, Clone)]
pub struct AbScenario {
    pub grid: GridSpec,
    pub flux: f64,
    pub flux_center: Point,
    pub charge: f64,
    pub mass: f64,
    pub width: f64,
    pub packet_speed: f64,
    pub impact_offset: f64,
    pub start_x: f64,
    /// Base point for the crossing test; far to the left of the packets.
    pub base: Point,
    pub gamma_family: Vec<Curve>,
    pub dt: f64,
    pub steps: usize,
    pub record_every: usize,
    pub scheme: Scheme,
    /// Snapshots count as settled when every translate of `gamma` within this
    /// many packet widths of the packet centre winds the same way.
    pub settle_widths: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaSeries {
    pub label: String,
    pub values: Vec<C64>,
    /// Whether the reduction loop encloses the flux at each record.
    pub crossed: Vec<bool>,
    pub settled: Vec<bool>,
    /// First record at which the loop encloses the flux.
    pub crossing_record: Option<usize>,
    /// Phase change between the last settled record before the crossing and
    /// the first settled one after it, wrapped into (-pi, pi].
    pub jump: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbTimeSeries {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub series: Vec<GammaSeries>,
}

impl AbScenario {
    pub fn potential(&self) -> GaugePotential {
        GaugePotential::solenoid(self.flux_center, self.flux, 0.0).with_coupling(self.charge)
    }

    /// Packet centres at time `t` (upper, lower); the flux exerts no force.
    pub fn centers(&self, t: f64) -> (Point, Point) {
        let x = self.start_x + self.packet_speed * t;
        ([x, self.flux_center[1] + self.impact_offset], [x, self.flux_center[1] - self.impact_offset])
    }

    pub fn initial_state(&self) -> Result<WaveFunction> {
        let (c1, c2) = self.centers(0.0);
        let p = [self.mass * self.packet_speed, 0.0];
        let a = gaussian_packet(&self.grid, c1, self.width, p, 0.0)?;
        let b = gaussian_packet(&self.grid, c2, self.width, p, 0.0)?;
        two_packet_state(&a, &b)
    }

    pub fn evolution_config(&self) -> EvolutionConfig {
        EvolutionConfig {
            dt: self.dt,
            steps: self.steps,
            mass: self.mass,
            potential: self.potential(),
            record_every: self.record_every,
            scheme: self.scheme,
            carrier: Some([self.mass * self.packet_speed, 0.0]),
            core_tolerance: DEFAULT_CORE_TOLERANCE,
        }
    }

    /// The reduction loop for `gamma` placed at the lower packet at time `t`.
    pub fn crossing_loop(&self, gamma: &Curve, t: f64) -> Result<Curve> {
        let (c1, c2) = self.centers(t);
        let g1 = Curve::segment(self.base, c1)?;
        let g2 = Curve::segment(self.base, c2)?;
        reduction_loop(&g1, &g2, gamma)
    }

    fn settled(&self, gamma: &Curve, t: f64) -> bool {
        let (_, c2) = self.centers(t);
        let (_, w) = free_gaussian_center_width(0.0, 0.0, self.width, self.mass, t);
        let placed = gamma.translated(geom::sub(c2, gamma.start()));
        placed.min_distance_to(self.flux_center) > self.settle_widths * w
    }

    pub fn run(&self) -> Result<AbTimeSeries> {
        let psi = self.initial_state()?;
        let snaps = evolve(&psi, &self.evolution_config())?;
        let a = self.potential();
        let mut series = Vec::with_capacity(self.gamma_family.len());
        for (gi, gamma) in self.gamma_family.iter().enumerate() {
            let spec = NonlocalOperatorSpec::new(gamma.clone(), a.clone()).with_options(TransportOptions::default());
            let values = snaps
                .iter()
                .map(|s| g_gamma_expectation(&spec, &s.psi, s.time))
                .collect::<Result<Vec<_>>>()?;
            let mut crossed = Vec::with_capacity(snaps.len());
            let mut settled = Vec::with_capacity(snaps.len());
            for s in &snaps {
                let winding = self.crossing_loop(gamma, s.time)?.winding_number(self.flux_center);
                crossed.push(winding != 0);
                settled.push(self.settled(gamma, s.time));
            }
            let crossing_record = crossed.iter().position(|c| *c).filter(|&i| i > 0);
            let jump = crossing_record.and_then(|k| {
                let before = (0..k).rev().find(|&i| settled[i] && !crossed[i])?;
                let after = (k..snaps.len()).find(|&i| settled[i] && crossed[i])?;
                Some(geom::wrap_angle(values[after].arg() - values[before].arg()))
            });
            series.push(GammaSeries {
                label: gamma.label().map(str::to_owned).unwrap_or_else(|| format!("gamma{gi}")),
                values,
                crossed,
                settled,
                crossing_record,
                jump,
            });
        }
        Ok(AbTimeSeries {
            steps: snaps.iter().map(|s| s.step).collect(),
            times: snaps.iter().map(|s| s.time).collect(),
            series,
        })
    }
}

/// Moving-packet AB scenario with default geometry: packets at
/// `y = -/+ impact_offset`, width 0.5, from `x = -3` to `x = +3` on a
/// 256 x 256 grid of spacing 0.1.
pub fn ab_scenario(
    flux: f64,
    packet_speed: f64,
    impact_offset: f64,
    gamma_family: Vec<Curve>,
    cfg: &EvolutionConfig,
) -> Result<AbTimeSeries> {
    let grid = GridSpec::centered(2, 256, 0.1)?;
    let scenario = AbScenario {
        grid,
        flux,
        flux_center: [0.05, 0.05],
        charge: cfg.potential.basis().coupling,
        mass: cfg.mass,
        width: 0.5,
        packet_speed,
        impact_offset,
        start_x: -3.0,
        base: [-12.0, 0.05],
        gamma_family,
        dt: cfg.dt,
        steps: cfg.steps,
        record_every: cfg.record_every,
        scheme: cfg.scheme,
        settle_widths: 5.0,
    };
    scenario.run()
}

/// Phase of `z` in (-pi, pi].
pub fn phase(z: C64) -> f64 {
    let a = z.arg();
    if a <= -std::f64::consts::PI {
        a + TAU
    } else {
        a
    }
}
