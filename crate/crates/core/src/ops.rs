//! Calculus on periodic fields: derivatives, Leray projection, dealiasing,
//! Galerkin shells and the vorticity / stream-function bridge.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ComplexField, Field, ScalarField, TensorField2x2, VectorField};
use crate::grid::Grid;

pub fn gradient(f: &ScalarField) -> VectorField {
    VectorField::new(f.derivative(0), f.derivative(1))
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    f.laplacian()
}

pub fn divergence(v: &VectorField) -> ScalarField {
    &v.u1.derivative(0) + &v.u2.derivative(1)
}

/// Largest modulus of the spectral divergence.
pub fn max_divergence(v: &VectorField) -> f64 {
    divergence(v).max_coeff()
}

/// Orthogonal projection onto divergence-free fields. The mean mode passes
/// through unchanged.
pub fn leray_project(v: &VectorField) -> VectorField {
    let g = v.grid();
    let mut u1 = v.u1.clone();
    let mut u2 = v.u2.clone();
    let (a, b) = (v.u1.coeffs(), v.u2.coeffs());
    let (c1, c2) = (u1.coeffs_mut(), u2.coeffs_mut());
    for i in 1..g.len() {
        let k1 = g.derivative_wavenumber(i, 0);
        let k2 = g.derivative_wavenumber(i, 1);
        let kk = k1 * k1 + k2 * k2;
        if kk == 0.0 {
            // Pure Nyquist modes have no resolved gradient direction.
            continue;
        }
        let kdotv = (a[i] * k1 + b[i] * k2) / kk;
        c1[i] = a[i] - kdotv * k1;
        c2[i] = b[i] - kdotv * k2;
    }
    VectorField::new(u1, u2)
}

pub fn dealias<K>(f: &Field<K>) -> Field<K> {
    f.dealias()
}

/// |k|² cutoff of the projector onto the first `ell` distinct Laplacian
/// eigenvalues (ℓ = 1 keeps the mean only). Returns the cutoff and whether
/// `ell` runs past the shells the grid can represent, in which case the
/// projector is the identity.
pub fn galerkin_cutoff(grid: &Grid, ell: usize) -> Result<(f64, bool)> {
    if ell == 0 {
        return Err(Error::InvalidParameter("galerkin ell must be at least 1".into()));
    }
    let shells = grid.laplacian_shells();
    match shells.get(ell - 1) {
        Some(&l) => Ok((l as f64, false)),
        None => Ok((f64::INFINITY, true)),
    }
}

/// Galerkin projection onto the first `ell` distinct eigen-shells. The flag
/// reports that `ell` exceeds the grid resolution.
pub fn galerkin_project<K>(f: &Field<K>, ell: usize) -> Result<(Field<K>, bool)> {
    let (cutoff, saturated) = galerkin_cutoff(f.grid(), ell)?;
    Ok((f.shell_truncate(cutoff), saturated))
}

/// ∂₁u₂ − ∂₂u₁.
pub fn vorticity(u: &VectorField) -> ScalarField {
    &u.u2.derivative(0) - &u.u1.derivative(1)
}

fn check_gauge(w: &ScalarField) -> Result<()> {
    let mean = w.mean();
    if mean.abs() > 1e-12 * (1.0 + w.max_coeff()) {
        return Err(Error::GaugeViolation { mean });
    }
    Ok(())
}

/// ψ with Δψ = ω. Fails on a vorticity with nonzero mean.
pub fn stream_function(w: &ScalarField) -> Result<ScalarField> {
    check_gauge(w)?;
    Ok(w.inverse_laplacian())
}

/// u = (−∂₂ψ, ∂₁ψ) with ψ = Δ⁻¹ω. Fails on a vorticity with nonzero mean.
pub fn velocity_from_vorticity(w: &ScalarField) -> Result<VectorField> {
    let psi = stream_function(w)?;
    Ok(velocity_from_stream(&psi))
}

pub fn velocity_from_stream(psi: &ScalarField) -> VectorField {
    VectorField::new(-&psi.derivative(1), psi.derivative(0))
}

/// Velocity gradient with G_ij = ∂_j u_i.
pub fn velocity_gradient(u: &VectorField) -> TensorField2x2 {
    TensorField2x2::general(
        u.u1.derivative(0),
        u.u1.derivative(1),
        u.u2.derivative(0),
        u.u2.derivative(1),
    )
}

/// Row divergence (∇·σ)_i = Σ_j ∂_j σ_ij.
pub fn tensor_divergence(s: &TensorField2x2) -> VectorField {
    VectorField::new(
        &s.t11().derivative(0) + &s.t12().derivative(1),
        &s.t21().derivative(0) + &s.t22().derivative(1),
    )
}

/// Physical-space samples of u₁, u₂.
pub(crate) fn velocity_values(u: &VectorField) -> (Vec<f64>, Vec<f64>) {
    (u.u1.values(), u.u2.values())
}

/// u·∇f, dealiased.
pub fn advect(u: &VectorField, f: &ScalarField) -> ScalarField {
    let (u1, u2) = velocity_values(u);
    advect_with(&u1, &u2, f)
}

pub(crate) fn advect_with(u1: &[f64], u2: &[f64], f: &ScalarField) -> ScalarField {
    let d1 = f.derivative(0).values();
    let d2 = f.derivative(1).values();
    let p: Vec<f64> = (0..u1.len()).map(|i| u1[i] * d1[i] + u2[i] * d2[i]).collect();
    ScalarField::from_values(f.grid(), &p).dealias()
}

pub(crate) fn advect_complex_with(u1: &[f64], u2: &[f64], f: &ComplexField) -> ComplexField {
    let d1 = f.derivative(0).values();
    let d2 = f.derivative(1).values();
    let p: Vec<Complex64> = (0..u1.len()).map(|i| d1[i] * u1[i] + d2[i] * u2[i]).collect();
    ComplexField::from_values(f.grid(), &p).dealias()
}

/// Nonlinear term u·∇u, dealiased.
pub fn advect_velocity(u: &VectorField) -> VectorField {
    let (u1, u2) = velocity_values(u);
    VectorField::new(advect_with(&u1, &u2, &u.u1), advect_with(&u1, &u2, &u.u2))
}

/// ‖∇u‖² summed over components.
pub fn gradient_norm_sq(u: &VectorField) -> f64 {
    u.u1.weighted_norm_sq(|k2| k2) + u.u2.weighted_norm_sq(|k2| k2)
}
