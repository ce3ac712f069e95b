//! Kinetic rigid-rod model: the orientation distribution f(x, θ) is stored
//! as angular Fourier modes ĉ_j(x) = (1/2π)∫ f e^{−ijθ} dθ for j = 0..=J
//! (ĉ_{−j} = conj ĉ_j), coupled to incompressible flow through the elastic
//! and viscous stresses.
//!
//! The Fokker–Planck equation is
//!
//! ∂_t f + u·∇f = k ∂²_θ f + νΔf − ∂_θ(W f),  W = m⊥·((∇u) m),
//!
//! and with W = a cos 2θ + b + c sin 2θ = b + α e^{2iθ} + ᾱ e^{−2iθ},
//! α = (a − ic)/2, each mode obeys
//!
//! ∂_t ĉ_j = −u·∇ĉ_j − k j² ĉ_j + νΔĉ_j − ij (b ĉ_j + α ĉ_{j−2} + ᾱ ĉ_{j+2}).
//!
//! Couplings into modes past J are dropped.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::da::stability_limit;
use crate::error::{Error, Result};
use crate::field::{ComplexField, ScalarField, TensorField2x2, VectorField};
use crate::grid::Grid;
use crate::imex::{Cnab2, Slots};
use crate::moments;
use crate::ops;

const TWO_PI: f64 = 2.0 * PI;
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default number of angular quadrature points for entropy and Fisher
/// information.
pub const THETA_POINTS: usize = 256;

#[derive(Clone, Debug)]
pub struct AngularDistribution {
    modes: Vec<ComplexField>,
}

impl AngularDistribution {
    /// Wraps modes ĉ_0..=ĉ_J. The zeroth mode is forced real.
    pub fn new(mut modes: Vec<ComplexField>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidParameter("need at least the mass mode".into()));
        }
        let grid = modes[0].grid().clone();
        if modes.iter().any(|m| m.grid() != &grid) {
            return Err(Error::GridMismatch);
        }
        modes[0] = modes[0].re_part().to_complex();
        Ok(AngularDistribution { modes })
    }

    /// Angle-independent distribution with mass density `m0`.
    pub fn isotropic(m0: &ScalarField, order: usize) -> Self {
        let grid = m0.grid();
        let mut modes = vec![m0.scaled(1.0 / TWO_PI).to_complex()];
        modes.extend((0..order).map(|_| ComplexField::zeros(grid)));
        AngularDistribution { modes }
    }

    /// Modes of f(x₁, x₂, θ) by `n_theta`-point quadrature in θ at every grid
    /// point, dealiased in space.
    pub fn from_fn(grid: &Grid, order: usize, n_theta: usize, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n_theta);
        let mut vals = vec![vec![Complex64::default(); grid.len()]; order + 1];
        let mut buf = vec![Complex64::default(); n_theta];
        for i in 0..grid.len() {
            let (x, y) = grid.coords(i);
            for (m, b) in buf.iter_mut().enumerate() {
                *b = Complex64::new(f(x, y, TWO_PI * m as f64 / n_theta as f64), 0.0);
            }
            fft.process(&mut buf);
            for (j, v) in vals.iter_mut().enumerate() {
                v[i] = buf[j] / n_theta as f64;
            }
        }
        let modes = vals
            .iter()
            .map(|v| ComplexField::from_values(grid, v).dealias())
            .collect();
        AngularDistribution::new(modes).expect("modes share a grid")
    }

    /// Cutoff J.
    pub fn order(&self) -> usize {
        self.modes.len() - 1
    }

    pub fn grid(&self) -> &Grid {
        self.modes[0].grid()
    }

    pub fn mode(&self, j: usize) -> &ComplexField {
        &self.modes[j]
    }

    pub fn modes(&self) -> &[ComplexField] {
        &self.modes
    }

    /// ĉ_j for any integer j, zero past the cutoff.
    pub fn mode_signed(&self, j: i64) -> ComplexField {
        match self.modes.get(j.unsigned_abs() as usize) {
            None => ComplexField::zeros(self.grid()),
            Some(m) if j < 0 => m.conj(),
            Some(m) => m.clone(),
        }
    }

    /// Keeps modes 0..=order (padding with zeros if larger).
    pub fn with_order(&self, order: usize) -> Self {
        let grid = self.grid().clone();
        let modes = (0..=order)
            .map(|j| self.modes.get(j).cloned().unwrap_or_else(|| ComplexField::zeros(&grid)))
            .collect();
        AngularDistribution { modes }
    }

    pub fn is_finite(&self) -> bool {
        self.modes.iter().all(|m| m.is_finite())
    }

    pub fn map(&self, f: impl Fn(&ComplexField) -> ComplexField) -> Self {
        AngularDistribution::new(self.modes.iter().map(f).collect()).expect("same grid")
    }

    /// f at `n_theta` equispaced angles, per grid point: `out[i][m]`.
    pub fn reconstruct(&self, n_theta: usize) -> Vec<Vec<f64>> {
        let vals: Vec<Vec<Complex64>> = self.modes.iter().map(|m| m.values()).collect();
        reconstruct_from(&vals, n_theta, |j, c| c * (if j == 0 { 1.0 } else { 2.0 }))
    }
}

/// Evaluates Σ_j g(j, v_j) e^{ijθ} (real part) on an angular grid at each
/// point, where `vals[j][i]` is the mode value at point i.
fn reconstruct_from(vals: &[Vec<Complex64>], n_theta: usize, g: impl Fn(usize, Complex64) -> Complex64) -> Vec<Vec<f64>> {
    assert!(n_theta > 2 * vals.len(), "angular grid too coarse for the modes");
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(n_theta);
    let npts = vals[0].len();
    let mut buf = vec![Complex64::default(); n_theta];
    (0..npts)
        .map(|i| {
            buf.iter_mut().for_each(|b| *b = Complex64::default());
            for (j, v) in vals.iter().enumerate() {
                buf[j] = g(j, v[i]);
            }
            fft.process(&mut buf);
            buf.iter().map(|c| c.re).collect()
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct DoiState {
    pub u: VectorField,
    pub f: AngularDistribution,
    pub t: f64,
}

impl DoiState {
    pub fn new(u: VectorField, f: AngularDistribution, t: f64) -> Result<Self> {
        if u.grid() != f.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(DoiState { u, f, t })
    }

    /// Quiescent, spatially uniform, isotropic state with total mass density m0.
    pub fn equilibrium(grid: &Grid, order: usize, m0: f64) -> Self {
        DoiState {
            u: VectorField::zeros(grid),
            f: AngularDistribution::isotropic(&ScalarField::constant(grid, m0), order),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    fn to_slots(&self) -> Slots {
        let mut y = vec![self.u.u1.coeffs().to_vec(), self.u.u2.coeffs().to_vec()];
        y.extend(self.f.modes.iter().map(|m| m.coeffs().to_vec()));
        y
    }

    fn from_slots(grid: &Grid, y: Slots, t: f64) -> Result<Self> {
        let mut it = y.into_iter();
        let u1 = ScalarField::from_coeffs(grid, it.next().expect("u1 slot"))?;
        let u2 = ScalarField::from_coeffs(grid, it.next().expect("u2 slot"))?;
        let modes = it.map(|c| ComplexField::from_coeffs(grid, c)).collect::<Result<Vec<_>>>()?;
        Ok(DoiState {
            u: VectorField::new(u1, u2),
            f: AngularDistribution { modes },
            t,
        })
    }
}

/// How the velocity gradient seen by the rods is produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FlowMode {
    /// Two-way coupling with the evolving velocity field.
    Coupled,
    /// Spatially constant imposed gradient G_ij = ∂_j u_i, row-major
    /// (11, 12, 21, 22). The velocity field is not evolved.
    Imposed([f64; 4]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoiParams {
    pub eta: f64,
    pub k: f64,
    pub nu: f64,
    pub dt: f64,
    pub galerkin_ell: Option<usize>,
    pub cfl_safety: f64,
    pub enforce_cfl: bool,
    pub flow: FlowMode,
}

impl Default for DoiParams {
    fn default() -> Self {
        DoiParams {
            eta: 1.0,
            k: 1.0,
            nu: 0.1,
            dt: 1e-3,
            galerkin_ell: None,
            cfl_safety: 0.5,
            enforce_cfl: true,
            flow: FlowMode::Coupled,
        }
    }
}

impl DoiParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad("eta must be finite and non-negative");
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad("k must be positive");
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad("nu must be positive");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if self.galerkin_ell == Some(0) {
            return bad("galerkin_ell must be at least 1");
        }
        if !(self.cfl_safety > 0.0) {
            return bad("cfl_safety must be positive");
        }
        Ok(())
    }
}

/// Coefficients (a, b, c) of W = a cos 2θ + b + c sin 2θ:
/// a = ½(∂₁u₂ + ∂₂u₁), b = ½(∂₁u₂ − ∂₂u₁), c = −½(∂₁u₁ − ∂₂u₂).
pub fn fp_drift_coefficients(gradu: &TensorField2x2) -> (ScalarField, ScalarField, ScalarField) {
    let (g11, g12, g21, g22) = (gradu.t11(), gradu.t12(), gradu.t21(), gradu.t22());
    ((g21 + g12).scaled(0.5), (g21 - g12).scaled(0.5), (g22 - g11).scaled(0.5))
}

fn constant_gradient(grid: &Grid, g: [f64; 4]) -> TensorField2x2 {
    TensorField2x2::general(
        ScalarField::constant(grid, g[0]),
        ScalarField::constant(grid, g[1]),
        ScalarField::constant(grid, g[2]),
        ScalarField::constant(grid, g[3]),
    )
}

/// Velocity gradient that drives the rods in `state` under `params.flow`.
pub fn drift_gradient(state: &DoiState, params: &DoiParams) -> TensorField2x2 {
    match params.flow {
        FlowMode::Coupled => ops::velocity_gradient(&state.u),
        FlowMode::Imposed(g) => constant_gradient(state.grid(), g),
    }
}

/// Explicit part of the mode equations (advection and drift), given
/// physical samples of u and of the drift coefficients.
fn fp_explicit(f: &AngularDistribution, u1: &[f64], u2: &[f64], gradu: &TensorField2x2) -> Vec<ComplexField> {
    let grid = f.grid();
    let (a, b, c) = fp_drift_coefficients(gradu);
    let (av, bv, cv) = (a.values(), b.values(), c.values());
    let alpha: Vec<Complex64> = (0..grid.len()).map(|i| Complex64::new(0.5 * av[i], -0.5 * cv[i])).collect();
    let vals: Vec<Vec<Complex64>> = f.modes.iter().map(|m| m.values()).collect();
    let jmax = f.order() as i64;
    let zero = vec![Complex64::default(); grid.len()];
    let at = |j: i64| -> std::borrow::Cow<'_, [Complex64]> {
        if j.abs() > jmax {
            std::borrow::Cow::Borrowed(&zero[..])
        } else if j < 0 {
            std::borrow::Cow::Owned(vals[(-j) as usize].iter().map(|c| c.conj()).collect())
        } else {
            std::borrow::Cow::Borrowed(&vals[j as usize][..])
        }
    };
    (0..=jmax)
        .map(|j| {
            let adv = ops::advect_complex_with(u1, u2, &f.modes[j as usize]);
            if j == 0 {
                return -&adv;
            }
            let (lo, mid, hi) = (at(j - 2), at(j), at(j + 2));
            let jj = Complex64::new(0.0, -(j as f64));
            let w: Vec<Complex64> = (0..grid.len())
                .map(|i| jj * (bv[i] * mid[i] + alpha[i] * lo[i] + alpha[i].conj() * hi[i]))
                .collect();
            &ComplexField::from_values(grid, &w).dealias() - &adv
        })
        .collect()
}

/// Full right-hand side of the mode equations, j = 0..=J.
pub fn fp_rhs(state: &DoiState, params: &DoiParams) -> Vec<ComplexField> {
    let (u1, u2) = ops::velocity_values(&state.u);
    let gradu = drift_gradient(state, params);
    let mut out = fp_explicit(&state.f, &u1, &u2, &gradu);
    for (j, o) in out.iter_mut().enumerate() {
        let m = &state.f.modes[j];
        *o += &(&m.laplacian() * params.nu);
        *o -= &(m * (params.k * (j * j) as f64));
    }
    out
}

/// σ_E + σ_V for the state, with σ_V driven by the velocity gradient.
pub fn polymer_stress(f: &AngularDistribution, gradu: &TensorField2x2, eta: f64) -> Result<TensorField2x2> {
    let se = moments::elastic_stress(f)?;
    let sv = moments::viscous_stress(f, gradu, eta)?;
    Ok(se.add(&sv))
}

fn velocity_explicit(state: &DoiState, u1: &[f64], u2: &[f64], gradu: &TensorField2x2, eta: f64) -> Result<VectorField> {
    let sigma = polymer_stress(&state.f, gradu, eta)?;
    let mut v = ops::tensor_divergence(&sigma);
    v.axpy(-1.0, &VectorField::new(ops::advect_with(u1, u2, &state.u.u1), ops::advect_with(u1, u2, &state.u.u2)));
    Ok(ops::leray_project(&v).map(|f| f.dealias()))
}

/// ℙ(−u·∇u + Δu + ∇·(σ_E + σ_V)).
pub fn doi_velocity_rhs(state: &DoiState, params: &DoiParams) -> Result<VectorField> {
    let (u1, u2) = ops::velocity_values(&state.u);
    let gradu = ops::velocity_gradient(&state.u);
    let mut v = velocity_explicit(state, &u1, &u2, &gradu, params.eta)?;
    v.axpy(1.0, &state.u.map(|f| f.laplacian()));
    Ok(v)
}

/// Largest stable time step for the explicit terms, scaled by the safety
/// factor. The projected viscous-stress rate is bounded by η M₀ |k|² / 4
/// and the elastic coupling behaves like a wave of speed √M₀.
pub fn cfl_limit(state: &DoiState, params: &DoiParams) -> f64 {
    let grid = state.grid();
    let frac = grid.dealias().value();
    let (k1, k2) = ((grid.nx() / 2) as f64 * frac, (grid.ny() / 2) as f64 * frac);
    let m0max = moments::mass_density(&state.f).max_value().max(0.0);
    let (umax, stress) = match params.flow {
        FlowMode::Coupled => (
            state.u.u1.max_abs() * k1 + state.u.u2.max_abs() * k2 + m0max.sqrt() * k1.hypot(k2),
            params.eta * m0max * grid.max_dealiased_k_squared() / 4.0,
        ),
        FlowMode::Imposed(g) => {
            // Drift couples modes j ± 2 with strength |j|·|G|.
            let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            (gn * state.f.order() as f64, 0.0)
        }
    };
    stability_limit(umax, stress, params.cfl_safety)
}

/// Stateful integrator for the kinetic model.
#[derive(Clone, Debug)]
pub struct DoiSolver {
    params: DoiParams,
    grid: Grid,
    order: usize,
    imex: Cnab2,
    rates: Vec<Vec<f64>>,
    steps: u64,
    galerkin_cutoff: Option<f64>,
    galerkin_saturated: bool,
}

impl DoiSolver {
    pub fn new(grid: &Grid, order: usize, params: DoiParams) -> Result<Self> {
        params.validate()?;
        if order < 4 {
            return Err(Error::InsufficientModes { needed: 4, have: order });
        }
        let lap: Vec<f64> = (0..grid.len()).map(|i| -grid.k_squared(i)).collect();
        let mut rates = vec![lap.clone(), lap.clone()];
        for j in 0..=order {
            let jj = (j * j) as f64;
            rates.push(lap.iter().map(|&l| params.nu * l - params.k * jj).collect());
        }
        let (cutoff, saturated) = match params.galerkin_ell {
            Some(ell) => {
                let (c, s) = ops::galerkin_cutoff(grid, ell)?;
                (Some(c), s)
            }
            None => (None, false),
        };
        if saturated {
            log::warn!("galerkin cutoff exceeds grid resolution; projector acts as the identity");
        }
        Ok(DoiSolver {
            params,
            grid: grid.clone(),
            order,
            imex: Cnab2::new(),
            rates,
            steps: 0,
            galerkin_cutoff: cutoff,
            galerkin_saturated: saturated,
        })
    }

    pub fn params(&self) -> &DoiParams {
        &self.params
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn galerkin_saturated(&self) -> bool {
        self.galerkin_saturated
    }

    pub fn reset_history(&mut self) {
        self.imex.reset();
    }

    pub fn project_state(&self, state: &mut DoiState) {
        if let Some(c) = self.galerkin_cutoff {
            state.u = state.u.map(|f| f.shell_truncate(c));
            state.f = state.f.map(|m| m.shell_truncate(c));
        }
    }

    fn explicit(&self, y: &Slots) -> Result<Slots> {
        let st = DoiState::from_slots(&self.grid, y.clone(), 0.0)?;
        let (u1, u2) = ops::velocity_values(&st.u);
        let gradu = drift_gradient(&st, &self.params);
        let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(y.len());
        match self.params.flow {
            FlowMode::Coupled => {
                let v = velocity_explicit(&st, &u1, &u2, &gradu, self.params.eta)?;
                out.push(v.u1.into_coeffs());
                out.push(v.u2.into_coeffs());
            }
            FlowMode::Imposed(_) => {
                out.push(vec![Complex64::default(); self.grid.len()]);
                out.push(vec![Complex64::default(); self.grid.len()]);
            }
        }
        out.extend(fp_explicit(&st.f, &u1, &u2, &gradu).into_iter().map(|m| m.into_coeffs()));
        if let Some(c) = self.galerkin_cutoff {
            for slot in &mut out {
                for (i, v) in slot.iter_mut().enumerate() {
                    if self.grid.k_squared(i) > c {
                        *v = Complex64::default();
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn step(&mut self, state: &mut DoiState) -> Result<()> {
        if state.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        if state.f.order() != self.order {
            return Err(Error::InsufficientModes { needed: self.order, have: state.f.order() });
        }
        let dt = self.params.dt;
        if self.params.enforce_cfl {
            let limit = cfl_limit(state, &self.params);
            if dt > limit {
                return Err(Error::UnstableTimeStep { dt, limit });
            }
        }
        let mut y = state.to_slots();
        let mut imex = std::mem::take(&mut self.imex);
        let res = imex.step(&mut y, &self.rates, dt, |y| self.explicit(y));
        self.imex = imex;
        res?;
        self.steps += 1;
        for (s, slot) in y.iter().enumerate() {
            if slot.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                let field = match s {
                    0 => "u1".to_string(),
                    1 => "u2".to_string(),
                    j => format!("c{}", j - 2),
                };
                return Err(Error::Blowup { step: self.steps, field });
            }
        }
        let mut next = DoiState::from_slots(&self.grid, y, state.t + dt)?;
        next.f.modes[0] = next.f.modes[0].re_part().to_complex();
        if self.params.flow == FlowMode::Coupled {
            next.u = ops::leray_project(&next.u);
            next.u.remove_mean();
        }
        *state = next;
        Ok(())
    }
}

/// One step from a state with no history (Heun start).
pub fn step_doi(state: &DoiState, params: &DoiParams) -> Result<DoiState> {
    let mut solver = DoiSolver::new(state.grid(), state.f.order(), params.clone())?;
    let mut next = state.clone();
    solver.step(&mut next)?;
    Ok(next)
}

/// Angular samples of f with the negativity policy applied.
struct Positive {
    f: Vec<Vec<f64>>,
    clipped: usize,
}

fn positive_samples(f: &AngularDistribution, n_theta: usize, tol_rel: f64) -> Result<Positive> {
    let mut samples = f.reconstruct(n_theta);
    let fmax = samples.iter().flatten().copied().fold(0.0, f64::max);
    let tol = tol_rel * fmax;
    let mut clipped = 0;
    for v in samples.iter_mut().flatten() {
        if *v < 0.0 {
            if *v < -tol {
                return Err(Error::PositivityViolation { min: *v, tol });
            }
            *v = 0.0;
            clipped += 1;
        }
    }
    Ok(Positive { f: samples, clipped })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeEnergy {
    /// ½‖u‖².
    pub kinetic: f64,
    /// ∫∫ (f log f − f + 1) dθ dx.
    pub entropy: f64,
    pub total: f64,
    /// Angular samples clipped from small negative values to zero.
    pub clipped: usize,
}

/// Default relative tolerance for negative reconstructed values.
pub const NEG_TOL: f64 = 1e-8;

pub fn free_energy(state: &DoiState) -> Result<FreeEnergy> {
    free_energy_with(state, THETA_POINTS, NEG_TOL)
}

pub fn free_energy_with(state: &DoiState, n_theta: usize, tol_rel: f64) -> Result<FreeEnergy> {
    let pos = positive_samples(&state.f, n_theta, tol_rel)?;
    let w = state.grid().cell_area() * TWO_PI / n_theta as f64;
    let entropy = w * pos
        .f
        .iter()
        .flatten()
        .map(|&v| if v > 0.0 { v * v.ln() - v + 1.0 } else { 1.0 })
        .sum::<f64>();
    let kinetic = 0.5 * state.u.l2_norm_sq();
    Ok(FreeEnergy {
        kinetic,
        entropy,
        total: kinetic + entropy,
        clipped: pos.clipped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FisherInformation {
    /// ∫∫ |∂_θ f|² / f.
    pub theta: f64,
    /// ∫∫ |∇ₓ f|² / f.
    pub space: f64,
    pub clipped: usize,
}

pub fn fisher_information(state: &DoiState) -> Result<FisherInformation> {
    let f = &state.f;
    let pos = positive_samples(f, THETA_POINTS, NEG_TOL)?;
    let vals = |m: &[ComplexField]| -> Vec<Vec<Complex64>> { m.iter().map(|c| c.values()).collect() };
    let base = vals(&f.modes);
    let two = |j: usize| if j == 0 { 1.0 } else { 2.0 };
    let dtheta = reconstruct_from(&base, THETA_POINTS, |j, c| c * I * j as f64 * two(j));
    let dx: Vec<Vec<Vec<f64>>> = (0..2)
        .map(|ax| {
            let d: Vec<ComplexField> = f.modes.iter().map(|m| m.derivative(ax)).collect();
            reconstruct_from(&vals(&d), THETA_POINTS, |j, c| c * two(j))
        })
        .collect();
    let w = state.grid().cell_area() * TWO_PI / THETA_POINTS as f64;
    let (mut theta, mut space) = (0.0, 0.0);
    for (i, fi) in pos.f.iter().enumerate() {
        for (m, &v) in fi.iter().enumerate() {
            if v > 0.0 {
                theta += dtheta[i][m].powi(2) / v;
                space += (dx[0][i][m].powi(2) + dx[1][i][m].powi(2)) / v;
            }
        }
    }
    Ok(FisherInformation {
        theta: w * theta,
        space: w * space,
        clipped: pos.clipped,
    })
}

/// η ∫∫ ((∇u):m⊗m)² f dθ dx.
pub fn viscous_dissipation(state: &DoiState, eta: f64) -> Result<f64> {
    let m4 = moments::moment_tensor(&state.f, 4)?;
    let m: Vec<Vec<f64>> = m4.components.iter().map(|c| c.values()).collect();
    let g = ops::velocity_gradient(&state.u).values();
    let mut acc = 0.0;
    for i in 0..state.grid().len() {
        let gi = [g[0][i], g[1][i], g[2][i], g[3][i]];
        let m4i = [m[0][i], m[1][i], m[2][i], m[3][i], m[4][i]];
        acc += moments::quartic_form(&m4i, &gi, &gi);
    }
    Ok(eta * acc * state.grid().cell_area())
}

/// Initial orientation distributions.
pub mod presets {
    use super::*;

    /// Uniform in θ with mass density m0(x).
    pub fn isotropic(m0: &ScalarField, order: usize) -> AngularDistribution {
        AngularDistribution::isotropic(m0, order)
    }

    /// f ∝ exp(κ cos 2(θ − θ₀(x))) with unit-free mass density `mass`,
    /// normalized pointwise. `theta0` is evaluated at each grid point.
    pub fn von_mises(
        grid: &Grid,
        order: usize,
        mass: f64,
        kappa: f64,
        theta0: impl Fn(f64, f64) -> f64,
    ) -> AngularDistribution {
        let n = THETA_POINTS;
        // Normalization ∫ exp(κ cos 2φ) dφ is independent of θ₀.
        let z: f64 = (0..n)
            .map(|m| (kappa * (2.0 * TWO_PI * m as f64 / n as f64).cos()).exp())
            .sum::<f64>()
            * TWO_PI
            / n as f64;
        AngularDistribution::from_fn(grid, order, n, |x, y, th| {
            mass / z * (kappa * (2.0 * (th - theta0(x, y))).cos()).exp()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(8, 8).unwrap()
    }

    #[test]
    fn drift_coefficient_examples() {
        let g = grid();
        let abc = |t: [f64; 4]| {
            let (a, b, c) = fp_drift_coefficients(&constant_gradient(&g, t));
            (a.mean(), b.mean(), c.mean())
        };
        assert_eq!(abc([0.0, 0.0, 1.0, 0.0]), (0.5, 0.5, 0.0));
        assert_eq!(abc([0.0, -1.0, 1.0, 0.0]), (0.0, 1.0, 0.0));
        assert_eq!(abc([1.0, 0.0, 0.0, -1.0]), (0.0, 0.0, -1.0));
    }

    #[test]
    fn equilibrium_rhs_vanishes() {
        let st = DoiState::equilibrium(&grid(), 8, 1.0);
        let p = DoiParams::default();
        assert!(fp_rhs(&st, &p).iter().all(|m| m.max_coeff() == 0.0));
        assert_eq!(doi_velocity_rhs(&st, &p).unwrap().l2_norm_sq(), 0.0);
    }

    #[test]
    fn isotropic_entropy_closed_form() {
        let g = grid();
        let st = DoiState::equilibrium(&g, 4, 1.0);
        let fe = free_energy(&st).unwrap();
        let c = 1.0 / TWO_PI;
        let expect = g.area() * TWO_PI * (c * c.ln() - c + 1.0);
        assert!((fe.entropy - expect).abs() < 1e-12 * expect);
        let st = DoiState::equilibrium(&g, 4, TWO_PI);
        assert!(free_energy(&st).unwrap().entropy.abs() < 1e-12);
    }

    #[test]
    fn negative_density_is_rejected() {
        let g = grid();
        let mut st = DoiState::equilibrium(&g, 4, 1.0);
        st.f.modes[2] = ComplexField::from_fn(&g, |_, _| Complex64::new(1.0 / TWO_PI, 0.0));
        assert!(matches!(free_energy(&st), Err(Error::PositivityViolation { .. })));
    }
}
