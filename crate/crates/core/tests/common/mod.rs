//! Brute-force angular oracles. Everything here works pointwise on an
//! equispaced θ grid with direct sums, independently of the mode-coupling
//! and moment tables used by the solver.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rodsim_core::doi::AngularDistribution;
use rodsim_core::ScalarField;

pub const N_THETA: usize = 256;

pub fn theta(m: usize, n: usize) -> f64 {
    2.0 * PI * m as f64 / n as f64
}

/// Modes ĉ_0..=ĉ_J of a distribution at grid point `i`.
pub fn modes_at(f: &AngularDistribution, i: usize) -> Vec<Complex64> {
    f.modes().iter().map(|m| m.values()[i]).collect()
}

pub fn all_mode_values(f: &AngularDistribution) -> Vec<Vec<Complex64>> {
    f.modes().iter().map(|m| m.values()).collect()
}

pub fn point(vals: &[Vec<Complex64>], i: usize) -> Vec<Complex64> {
    vals.iter().map(|v| v[i]).collect()
}

/// d-th θ-derivative of Σ_{|j|≤J} c_j e^{ijθ}, with c_{−j} = conj c_j.
pub fn eval(c: &[Complex64], th: f64, d: u32) -> f64 {
    let mut v = c[0].re * if d == 0 { 1.0 } else { 0.0 };
    for (j, cj) in c.iter().enumerate().skip(1) {
        let jf = j as f64;
        let z = cj * Complex64::from_polar(1.0, jf * th) * Complex64::new(0.0, jf).powu(d);
        v += 2.0 * z.re;
    }
    v
}

/// W(θ) = m⊥·(G m) for G_ij = ∂_j u_i (row-major 11, 12, 21, 22), and its
/// θ-derivative.
pub fn drift(g: [f64; 4], th: f64) -> (f64, f64) {
    let (c, s) = (th.cos(), th.sin());
    let m = [c, s];
    let gm = [g[0] * m[0] + g[1] * m[1], g[2] * m[0] + g[3] * m[1]];
    let w = -s * gm[0] + c * gm[1];
    // d/dθ: m' = m⊥, (m⊥)' = −m
    let dm = [-s, c];
    let gdm = [g[0] * dm[0] + g[1] * dm[1], g[2] * dm[0] + g[3] * dm[1]];
    let dw = -c * gm[0] - s * gm[1] + (-s * gdm[0] + c * gdm[1]);
    (w, dw)
}

/// Fourier modes 0..=order of samples on the θ grid, by direct sums.
pub fn project(samples: &[f64], order: usize) -> Vec<Complex64> {
    let n = samples.len();
    (0..=order)
        .map(|j| {
            samples
                .iter()
                .enumerate()
                .map(|(m, v)| v * Complex64::from_polar(1.0, -(j as f64) * theta(m, n)))
                .sum::<Complex64>()
                / n as f64
        })
        .collect()
}

/// −∂_θ(W f) on the θ grid at one point.
pub fn drift_term(c: &[Complex64], g: [f64; 4]) -> Vec<f64> {
    (0..N_THETA)
        .map(|m| {
            let th = theta(m, N_THETA);
            let (w, dw) = drift(g, th);
            -(dw * eval(c, th, 0) + w * eval(c, th, 1))
        })
        .collect()
}

/// ∫ cosᵖθ sinᵠθ h(θ) dθ by the trapezoid rule.
pub fn moment_of(samples: &[f64], p: usize, q: usize) -> f64 {
    let n = samples.len();
    samples
        .iter()
        .enumerate()
        .map(|(m, v)| {
            let th = theta(m, n);
            th.cos().powi(p as i32) * th.sin().powi(q as i32) * v
        })
        .sum::<f64>()
        * 2.0
        * PI
        / n as f64
}

pub fn samples(c: &[Complex64], d: u32) -> Vec<f64> {
    (0..N_THETA).map(|m| eval(c, theta(m, N_THETA), d)).collect()
}

/// G(θ) = (∇u):m⊗m.
pub fn strain(g: [f64; 4], th: f64) -> f64 {
    let (c, s) = (th.cos(), th.sin());
    g[0] * c * c + (g[1] + g[2]) * c * s + g[3] * s * s
}

pub fn grad_at(gv: &[Vec<f64>; 4], i: usize) -> [f64; 4] {
    [gv[0][i], gv[1][i], gv[2][i], gv[3][i]]
}

pub fn max_abs(f: &ScalarField) -> f64 {
    f.max_abs()
}
