use std::fmt::Write as _;

use super::{
    AbDynamic, AbNonabelian, CosmicString, DoubleSlit, GaugeInvarianceSuite, PacketConfig, Scenario, TwoPath,
};
use crate::dynamics::AbScenario;
use crate::error::{Error, Result};
use crate::gauge::{
    apply_gauge_to_potential, apply_gauge_to_wavefunction, random_smooth_gauge, GaugePotential, GroupKind,
    LieAlgebraBasis,
};
use crate::geom::{self, wrap_angle};
use crate::gravity::{gravitational_ab_expectation, ConeGeometry};
use crate::grid::{gaussian_packet, momentum_moment, DensityMatrix, GridSpec, WaveFunction, C64};
use crate::observables::{
    closed_loop_reduction_check, g_gamma_expectation, two_packet_state, NonlocalOperatorSpec, Translation,
};
use crate::par;
use crate::transport::{holonomy, loop_transport, Curve, TransportOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub kind: &'static str,
    pub rows: usize,
    pub csv: String,
    /// Named derived quantities, in a fixed order.
    pub quantities: Vec<(String, f64)>,
}

impl RunSummary {
    pub fn report(&self) -> String {
        let mut s = format!("{}: {} rows\n", self.kind, self.rows);
        for (k, v) in &self.quantities {
            let _ = writeln!(s, "  {k} = {v}");
        }
        s
    }
}

fn context(kind: &str, point: f64, e: Error) -> Error {
    e.context(format!("{kind} at sweep value {point}"))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn complex_cols(z: C64) -> String {
    format!("{},{},{},{}", fmt(z.re), fmt(z.im), fmt(z.norm()), fmt(phase(z)))
}

/// `arg` reduced into (-pi, pi].
fn phase(z: C64) -> f64 {
    crate::dynamics::phase(z)
}

fn packet(grid: &GridSpec, p: &PacketConfig) -> Result<WaveFunction> {
    let psi = gaussian_packet(grid, p.center, p.width, p.momentum, p.phase)?;
    match p.spinor() {
        Some(s) => psi.with_spinor(&s),
        None => Ok(psi),
    }
}

fn curve(list: &[super::CurveConfig], label: &str) -> Result<Curve> {
    list.iter()
        .find(|c| c.label == label)
        .ok_or_else(|| Error::Scenario(format!("unresolved curve label '{label}'")))?
        .build()
}

/// Execute a validated scenario and render its CSV.
pub fn run_scenario(s: &Scenario) -> Result<RunSummary> {
    s.validate()?;
    match s {
        Scenario::DoubleSlit(d) => double_slit(d),
        Scenario::AbStatic(t) => two_path("ab_static", t),
        Scenario::JosephsonTwoPath(t) => two_path("josephson_two_path", t),
        Scenario::AbDynamic(d) => ab_dynamic(d),
        Scenario::AbNonabelian(n) => ab_nonabelian(n),
        Scenario::CosmicString(c) => cosmic_string(c),
        Scenario::GaugeInvarianceSuite(g) => gauge_suite(g),
    }
}

fn double_slit(d: &DoubleSlit) -> Result<RunSummary> {
    let grid = d.grid.build()?;
    let rows = par::try_map_indexed(d.sweep.values.len(), |i| {
        let v = d.sweep.values[i];
        double_slit_point(d, &grid, v).map_err(|e| context("double_slit", v, e))
    })?;

    let mut csv = String::from("sweep_param,re,im,modulus,phase,mixture_re,mixture_im,p1,p2,p3,p4\n");
    let mut worst = 0.0f64;
    for (v, pure, mixture, m) in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            fmt(*v),
            complex_cols(*pure),
            fmt(mixture.re),
            fmt(mixture.im),
            fmt(m[0]),
            fmt(m[1]),
            fmt(m[2]),
            fmt(m[3])
        );
        worst = worst.max(mixture.norm());
    }
    let mut quantities = Vec::new();
    for (v, pure, _, _) in &rows {
        quantities.push((format!("modulus@{v}"), pure.norm()));
        quantities.push((format!("phase@{v}"), phase(*pure)));
    }
    quantities.push(("max_mixture_modulus".into(), worst));
    Ok(RunSummary { kind: "double_slit", rows: rows.len(), csv, quantities })
}

type SlitRow = (f64, C64, C64, Vec<f64>);

fn double_slit_point(d: &DoubleSlit, grid: &GridSpec, v: f64) -> Result<SlitRow> {
    let (mut alpha, mut sep, mut width) = (d.alpha, d.separation, d.width);
    match d.sweep.param.as_str() {
        "alpha" => alpha = v,
        "separation" => sep = v,
        _ => width = v,
    }
    let left = gaussian_packet(grid, [d.center - sep / 2.0, 0.0], width, [0.0, 0.0], alpha)?;
    let right = gaussian_packet(grid, [d.center + sep / 2.0, 0.0], width, [0.0, 0.0], 0.0)?;
    let psi = two_packet_state(&right, &left)?;
    let s = Translation([sep, 0.0]);
    let pure = DensityMatrix::pure(psi.clone()).trace(&s)?;
    let mixture = DensityMatrix::equal_mixture(vec![left, right])?.trace(&s)?;
    let moments = (1..=4).map(|n| momentum_moment(&psi, n, 0)).collect::<Result<Vec<_>>>()?;
    Ok((v, pure, mixture, moments))
}

fn two_path(kind: &'static str, t: &TwoPath) -> Result<RunSummary> {
    let grid = t.grid.build()?;
    let curves = t.curves.iter().map(|c| c.build()).collect::<Result<Vec<_>>>()?;
    let a_packet = packet(&grid, &t.packets[0])?;
    let b_packet = packet(&grid, &t.packets[1])?;
    let psi = two_packet_state(&a_packet, &b_packet)?;
    let mut csv = String::from("sweep_param,curve,re,im,modulus,phase\n");
    let mut quantities = Vec::new();
    let mut rows = 0;
    for &v in &t.sweep.values {
        let (flux, charge) = if t.sweep.param == "flux" { (v, t.charge) } else { (t.flux, v) };
        let a = GaugePotential::solenoid(t.flux_center, flux, t.core_radius).with_coupling(charge);
        let values = par::try_map_indexed(curves.len(), |i| {
            g_gamma_expectation(&NonlocalOperatorSpec::new(curves[i].clone(), a.clone()), &psi, 0.0)
        })
        .map_err(|e| context(kind, v, e))?;
        for (c, z) in curves.iter().zip(&values) {
            let _ = writeln!(csv, "{},{},{}", fmt(v), c.label().unwrap_or(""), complex_cols(*z));
            rows += 1;
        }
        if values.len() >= 2 {
            let diff = wrap_angle(phase(values[1]) - phase(values[0]));
            quantities.push((format!("phase_difference@{v}"), diff));
        }
        // Holonomy of a small loop around the flux, in the chosen sign.
        let probe = Curve::circle(t.flux_center, 1.0, 1, 8)?;
        let u = if t.eq1_sign { holonomy(&a, &probe)? } else { loop_transport(&a, &probe, &TransportOptions::default())? };
        quantities.push((format!("holonomy_phase@{v}"), u.angle()));
    }
    Ok(RunSummary { kind, rows, csv, quantities })
}

fn ab_dynamic(d: &AbDynamic) -> Result<RunSummary> {
    let grid = d.grid.build()?;
    let curves = d.curves.iter().map(|c| c.build()).collect::<Result<Vec<_>>>()?;
    let mut header = String::from("sweep_param,step,time");
    for c in &curves {
        let l = c.label().unwrap_or("gamma");
        let _ = write!(header, ",{l}_re,{l}_im,{l}_phase,{l}_crossed");
    }
    let mut csv = header + "\n";
    let mut quantities = Vec::new();
    let mut rows = 0;
    for &v in &d.sweep.values {
        let mut sc = AbScenario {
            grid: grid.clone(),
            flux: d.flux,
            flux_center: d.flux_center,
            charge: d.charge,
            mass: d.mass,
            width: d.width,
            packet_speed: d.packet_speed,
            impact_offset: d.impact_offset,
            start_x: d.start_x,
            base: d.base,
            gamma_family: curves.clone(),
            dt: d.dt,
            steps: d.steps,
            record_every: d.record_every,
            scheme: d.scheme,
            settle_widths: d.settle_widths,
        };
        match d.sweep.param.as_str() {
            "flux" => sc.flux = v,
            "charge" => sc.charge = v,
            "packet_speed" => sc.packet_speed = v,
            _ => sc.impact_offset = v,
        }
        let series = sc.run().map_err(|e| context("ab_dynamic", v, e))?;
        for (r, (step, time)) in series.steps.iter().zip(&series.times).enumerate() {
            let _ = write!(csv, "{},{},{}", fmt(v), step, fmt(*time));
            for g in &series.series {
                let z = g.values[r];
                let _ = write!(csv, ",{},{},{},{}", fmt(z.re), fmt(z.im), fmt(phase(z)), u8::from(g.crossed[r]));
            }
            csv.push('\n');
            rows += 1;
        }
        for g in &series.series {
            if let Some(k) = g.crossing_record {
                quantities.push((format!("{}_crossing_step@{v}", g.label), series.steps[k] as f64));
            }
            if let Some(j) = g.jump {
                quantities.push((format!("{}_phase_jump@{v}", g.label), j));
            }
        }
    }
    Ok(RunSummary { kind: "ab_dynamic", rows, csv, quantities })
}

fn ab_nonabelian(n: &AbNonabelian) -> Result<RunSummary> {
    let grid = n.grid.build()?;
    let p1 = packet(&grid, &n.packets[0])?;
    let p2 = packet(&grid, &n.packets[1])?;
    let (g1, g2, g) = (curve(&n.curves, &n.gamma1)?, curve(&n.curves, &n.gamma2)?, curve(&n.curves, &n.gamma)?);
    let mut csv = String::from("sweep_param,re,im,modulus,phase,rhs_re,rhs_im\n");
    let mut worst = 0.0f64;
    for &v in &n.sweep.values {
        let (mag, coupling) =
            if n.sweep.param == "flux_magnitude" { (v, n.coupling) } else { (n.flux_magnitude, v) };
        let a = GaugePotential::nonabelian_flux_tube(n.flux_center, n.flux_direction, mag, n.core_radius, coupling)?;
        let (lhs, rhs) =
            closed_loop_reduction_check(&p1, &p2, &g1, &g2, &g, &a).map_err(|e| context("ab_nonabelian", v, e))?;
        let _ = writeln!(csv, "{},{},{},{}", fmt(v), complex_cols(lhs), fmt(rhs.re), fmt(rhs.im));
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(RunSummary {
        kind: "ab_nonabelian",
        rows: n.sweep.values.len(),
        csv,
        quantities: vec![("max_lhs_rhs_difference".into(), worst)],
    })
}

fn cosmic_string(c: &CosmicString) -> Result<RunSummary> {
    let grid = c.grid.build()?;
    let p1 = packet(&grid, &c.packets[0])?;
    let p2 = packet(&grid, &c.packets[1])?;
    let (g1, g2, g) = (curve(&c.curves, &c.gamma1)?, curve(&c.curves, &c.gamma2)?, curve(&c.curves, &c.gamma)?);
    let values = par::try_map_indexed(c.sweep.values.len(), |i| {
        let v = c.sweep.values[i];
        let (delta, shift) = if c.sweep.param == "deficit_angle" { (v, c.gamma_shift) } else { (c.deficit_angle, v) };
        let cone = ConeGeometry::new(c.apex, delta, c.core_radius)?.with_seam_angle(c.seam_angle);
        let mut pts = g.points().to_vec();
        let last = pts.len() - 1;
        for p in &mut pts[1..last] {
            *p = geom::add(*p, [shift, 0.0]);
        }
        let shifted = Curve::new(pts, g.is_closed())?;
        gravitational_ab_expectation(&p1, &p2, &g1, &g2, &shifted, &cone).map_err(|e| context("cosmic_string", v, e))
    })?;
    let mut csv = String::from("sweep_param,re,im,modulus,phase\n");
    for (v, z) in c.sweep.values.iter().zip(&values) {
        let _ = writeln!(csv, "{},{}", fmt(*v), complex_cols(*z));
    }
    Ok(RunSummary {
        kind: "cosmic_string",
        rows: values.len(),
        csv,
        quantities: vec![("first_modulus".into(), values[0].norm()), ("first_phase".into(), phase(values[0]))],
    })
}

fn gauge_suite(g: &GaugeInvarianceSuite) -> Result<RunSummary> {
    let grid = g.grid.build()?;
    let curves = g.curves.iter().map(|c| c.build()).collect::<Result<Vec<_>>>()?;
    let a_packet = packet(&grid, &g.packets[0])?;
    let b_packet = packet(&grid, &g.packets[1])?;
    let psi = two_packet_state(&a_packet, &b_packet)?;
    let (a, basis) = match g.group {
        GroupKind::U1 => {
            let a = GaugePotential::solenoid(g.flux_center, g.flux, 0.0).with_coupling(g.coupling);
            (a, LieAlgebraBasis::u1(g.coupling))
        }
        GroupKind::SU2 => {
            let basis = LieAlgebraBasis::su2(g.coupling);
            let tube = GaugePotential::nonabelian_flux_tube(g.flux_center, [0.3, -0.5, 1.0], g.flux, 0.0, g.coupling)?;
            let background = GaugePotential::smooth_random(g.seed ^ 0x5eed, basis, &grid, g.band_limit, g.background_amplitude)?;
            (tube.add(&background)?, basis)
        }
    };
    let options = TransportOptions::numeric();
    let before = par::try_map_indexed(curves.len(), |i| {
        let spec = NonlocalOperatorSpec::new(curves[i].clone(), a.clone()).with_options(options);
        g_gamma_expectation(&spec, &psi, 0.0)
    })?;
    let mut csv = String::from("sweep_param,curve,seed,re,im,modulus,phase,re_gauged,im_gauged,abs_diff\n");
    let mut worst = 0.0f64;
    let mut rows = 0;
    for &v in &g.sweep.values {
        let seed = g.seed.wrapping_add(v as u64);
        let u = random_smooth_gauge(seed, g.group, &grid, g.band_limit, g.amplitude)?;
        let a2 = apply_gauge_to_potential(&a, &u)?;
        let psi2 = apply_gauge_to_wavefunction(&psi, &u, &basis)?;
        let after = par::try_map_indexed(curves.len(), |i| {
            let spec = NonlocalOperatorSpec::new(curves[i].clone(), a2.clone()).with_options(options);
            g_gamma_expectation(&spec, &psi2, 0.0)
        })
        .map_err(|e| context("gauge_invariance_suite", v, e))?;
        for ((c, z0), z1) in curves.iter().zip(&before).zip(&after) {
            let diff = (z0 - z1).norm();
            worst = worst.max(diff);
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                fmt(v),
                c.label().unwrap_or(""),
                seed,
                complex_cols(*z0),
                fmt(z1.re),
                fmt(z1.im),
                fmt(diff)
            );
            rows += 1;
        }
    }
    Ok(RunSummary { kind: "gauge_invariance_suite", rows, csv, quantities: vec![("max_abs_diff".into(), worst)] })
}
