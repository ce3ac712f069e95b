//! Seeded random fields for tests, benches and initial data.

use num_complex::Complex64;
use rand::Rng;

use crate::doi::AngularDistribution;
use crate::field::{ComplexField, ScalarField, TensorField2x2, VectorField};
use crate::grid::Grid;
use crate::ops;

/// Real field with independent Gaussian-ish coefficients on modes with
/// |k₁|, |k₂| ≤ `kmax`, amplitudes decaying like 1/(1+|k|²), zero mean,
/// scaled so its maximum modulus is about `amplitude`. The maximum is taken
/// on a fixed 4(kmax+1)² sample grid, so a seed gives the same function on
/// every grid that resolves `kmax`.
pub fn smooth_random_field(grid: &Grid, rng: &mut impl Rng, amplitude: f64, kmax: i64) -> ScalarField {
    let mut f = ScalarField::zeros(grid);
    let kmax = kmax.min(grid.nx() as i64 / 2 - 1).min(grid.ny() as i64 / 2 - 1);
    {
        let c = f.coeffs_mut();
        for k1 in -kmax..=kmax {
            for k2 in -kmax..=kmax {
                if (k1, k2) == (0, 0) {
                    continue;
                }
                // Fill one of each conjugate pair and mirror it.
                if k1 < 0 || (k1 == 0 && k2 < 0) {
                    continue;
                }
                let w = 1.0 / (1.0 + (k1 * k1 + k2 * k2) as f64);
                let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * w;
                let i = grid.mode_index(k1, k2).expect("mode within band");
                let j = grid.mode_index(-k1, -k2).expect("mode within band");
                c[i] = z;
                c[j] = z.conj();
            }
        }
    }
    let n = (4 * (kmax.max(1) as usize + 1)).max(8);
    let m = f.resample(&Grid::new(n, n).expect("even and at least 8")).max_abs();
    if m > 0.0 {
        f = f.scaled(amplitude / m);
    }
    f
}

/// Like [`smooth_random_field`] but shifted to have the given mean.
pub fn smooth_random_field_with_mean(
    grid: &Grid,
    rng: &mut impl Rng,
    mean: f64,
    amplitude: f64,
    kmax: i64,
) -> ScalarField {
    let mut f = smooth_random_field(grid, rng, amplitude, kmax);
    f.coeffs_mut()[0] = Complex64::new(mean, 0.0);
    f
}

/// Divergence-free, mean-free random velocity with components bounded by
/// roughly `amplitude`.
pub fn random_velocity(grid: &Grid, rng: &mut impl Rng, amplitude: f64, kmax: i64) -> VectorField {
    let psi = smooth_random_field(grid, rng, 1.0, kmax);
    let u = ops::velocity_from_stream(&psi);
    let m = u.u1.max_abs().max(u.u2.max_abs());
    u.map(|f| f.scaled(amplitude / m))
}

/// Symmetric, unit-trace conformation ½𝕀 + [[p, q], [q, −p]] with
/// |p|, |q| ≤ `eps`; positive definite for `eps` < 0.35.
pub fn random_conformation(grid: &Grid, rng: &mut impl Rng, eps: f64, kmax: i64) -> TensorField2x2 {
    let p = smooth_random_field(grid, rng, eps, kmax);
    let q = smooth_random_field(grid, rng, eps, kmax);
    let half = ScalarField::constant(grid, 0.5);
    TensorField2x2::symmetric(&half + &p, q, &half - &p)
}

/// Random orientation distribution with modes up to `order`: mass density
/// 1 + (variation ≤ 0.3) and angular modes decaying like `ratio`^j relative
/// to ĉ₀. Strictly positive for `ratio` ≤ 0.3.
pub fn random_distribution(grid: &Grid, rng: &mut impl Rng, order: usize, ratio: f64, kmax: i64) -> AngularDistribution {
    let two_pi = 2.0 * std::f64::consts::PI;
    let m0 = smooth_random_field_with_mean(grid, rng, 1.0, 0.3, kmax);
    let mut modes = vec![m0.scaled(1.0 / two_pi).to_complex()];
    for j in 1..=order {
        let scale = ratio.powi(j as i32) * 0.7 / two_pi / 4.0;
        let (mr, mi) = (rng.gen_range(-1.0..1.0) * scale, rng.gen_range(-1.0..1.0) * scale);
        let re = smooth_random_field_with_mean(grid, rng, mr, scale, kmax);
        let im = smooth_random_field_with_mean(grid, rng, mi, scale, kmax);
        modes.push(ComplexField::from_parts(&re, &im));
    }
    AngularDistribution::new(modes).expect("modes share a grid")
}
