#![allow(dead_code)]

use holonomy_lab::gauge::{GaugePotential, Mat2};
use holonomy_lab::geom::{self, Point};
use holonomy_lab::grid::{translate, WaveFunction};
use holonomy_lab::transport::Curve;
use holonomy_lab::C64;

/// Overlap of two unit Gaussians of width `w` a distance `d` apart.
pub fn gaussian_overlap(d: f64, w: f64) -> f64 {
    (-d * d / (8.0 * w * w)).exp()
}

/// Composite trapezoid on each segment, Richardson-extrapolated once.
pub fn trapezoid(a: &GaugePotential, curve: &Curve, n: usize) -> f64 {
    let rule = |n: usize| {
        let mut total = 0.0;
        for (p, q) in curve.segments() {
            let d = geom::sub(q, p);
            let f = |s: f64| geom::dot(a.sample(geom::lerp(p, q, s), 0.0)[0], d);
            let h = 1.0 / n as f64;
            let inner: f64 = (1..n).map(|i| f(i as f64 * h)).sum();
            total += h * (0.5 * f(0.0) + inner + 0.5 * f(1.0));
        }
        total
    };
    (4.0 * rule(2 * n) - rule(n)) / 3.0
}

/// `exp(i g (v.sigma)/2)` written out directly.
pub fn spin_rotation(g: f64, v: [f64; 3]) -> Mat2 {
    let th = g * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let (c, s) = ((th / 2.0).cos(), (th / 2.0).sin());
    let n = if th == 0.0 { [0.0; 3] } else { v.map(|x| g * x / th) };
    Mat2::new(
        C64::new(c, s * n[2]),
        C64::new(s * n[1], s * n[0]),
        C64::new(-s * n[1], s * n[0]),
        C64::new(c, -s * n[2]),
    )
}

/// Midpoint product of small exponentials, later factors on the left,
/// Richardson-extrapolated between `n` and `2n` steps per segment.
pub fn brute_force(a: &GaugePotential, curve: &Curve, n: usize) -> Mat2 {
    let g = a.basis().coupling;
    let product = |n: usize| {
        let mut w = Mat2::identity();
        for (p, q) in curve.segments() {
            let d = geom::sub(q, p);
            let h = 1.0 / n as f64;
            for i in 0..n {
                let x = geom::lerp(p, q, (i as f64 + 0.5) * h);
                let s = a.sample(x, 0.0);
                let v = [0, 1, 2].map(|k| h * geom::dot(s[k], d));
                w = spin_rotation(g, v) * w;
            }
        }
        w
    };
    (product(2 * n) * C64::new(4.0, 0.0) - product(n)) * C64::new(1.0 / 3.0, 0.0)
}

/// Symmetric interleaving of `exp(i q A.l / 2M)` and `exp(-i p.l / M)`,
/// Richardson-extrapolated in `M`.
pub fn interleaved(a: &GaugePotential, psi: &WaveFunction, ell: Point, m: usize) -> WaveFunction {
    let grid = psi.grid().clone();
    let q = a.basis().coupling;
    let run = |m: usize| {
        let half: Vec<C64> = (0..grid.len())
            .map(|i| C64::from_polar(1.0, q * geom::dot(a.sample(grid.position(i), 0.0)[0], ell) / (2.0 * m as f64)))
            .collect();
        let kick = |phi: &mut WaveFunction| {
            for (z, f) in phi.amplitudes_mut().iter_mut().zip(&half) {
                *z *= f;
            }
        };
        let step = geom::scale(ell, 1.0 / m as f64);
        let mut phi = psi.clone();
        for _ in 0..m {
            kick(&mut phi);
            phi = translate(&phi, step);
            kick(&mut phi);
        }
        phi
    };
    let (coarse, fine) = (run(m), run(2 * m));
    let amps = coarse.amplitudes().iter().zip(fine.amplitudes()).map(|(c, f)| (f * 4.0 - c) / 3.0).collect();
    WaveFunction::new(grid, 1, amps).unwrap()
}

pub fn max_diff(a: &WaveFunction, b: &WaveFunction) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

