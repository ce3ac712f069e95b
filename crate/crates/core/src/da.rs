//! Tensor closure model: incompressible flow coupled to a symmetric
//! conformation tensor A with trace one, viscous stress η (∇u:A) A, and
//! rotational relaxation towards the isotropic state ½𝕀.
//!
//! Conventions: G_ij = ∂_j u_i and ∇u:A = Σ G_ij A_ij. The tensor equation is
//!
//! ∂_t A + u·∇A = GA + AGᵀ − 2(∇u:A)A − 2k(2A − 𝕀) + νΔA.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{ScalarField, TensorField2x2, VectorField};
use crate::grid::{Fraction, Grid};
use crate::imex::{Cnab2, Slots};
use crate::ops;

#[derive(Clone, Debug, PartialEq)]
pub struct DAParams {
    pub eta: f64,
    pub k: f64,
    pub nu: f64,
    pub dt: f64,
    /// Dealiasing applied to the cubic stress products. `None` uses the
    /// grid's own rule.
    pub stress_dealias: Option<Fraction>,
    /// Restrict every update to the first ℓ Laplacian eigen-shells.
    pub galerkin_ell: Option<usize>,
    /// Safety factor applied to the explicit stability limit.
    pub cfl_safety: f64,
    /// Refuse steps above the stability limit.
    pub enforce_cfl: bool,
    pub tol_trace: f64,
}

impl Default for DAParams {
    fn default() -> Self {
        DAParams {
            eta: 1.0,
            k: 1.0,
            nu: 0.1,
            dt: 1e-3,
            stress_dealias: None,
            galerkin_ell: None,
            cfl_safety: 0.5,
            enforce_cfl: true,
            tol_trace: 1e-8,
        }
    }
}

impl DAParams {
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

    fn stress_fraction(&self, grid: &Grid) -> Fraction {
        self.stress_dealias.unwrap_or(grid.dealias())
    }
}

#[derive(Clone, Debug)]
pub struct DAState {
    pub u: VectorField,
    pub a: TensorField2x2,
    pub t: f64,
}

impl DAState {
    pub fn new(u: VectorField, a: TensorField2x2, t: f64) -> Result<Self> {
        if !a.is_symmetric() {
            return Err(Error::InvalidParameter("conformation tensor must be symmetric".into()));
        }
        if u.grid() != a.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(DAState { u, a, t })
    }

    /// Quiescent isotropic state (0, ½𝕀).
    pub fn equilibrium(grid: &Grid) -> Self {
        DAState {
            u: VectorField::zeros(grid),
            a: TensorField2x2::symmetric(
                ScalarField::constant(grid, 0.5),
                ScalarField::zeros(grid),
                ScalarField::constant(grid, 0.5),
            ),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub(crate) fn to_slots(&self) -> Slots {
        [&self.u.u1, &self.u.u2, self.a.t11(), self.a.t12(), self.a.t22()]
            .iter()
            .map(|f| f.coeffs().to_vec())
            .collect()
    }

    pub(crate) fn from_slots(grid: &Grid, mut y: Slots, t: f64) -> Result<Self> {
        let mut take = || ScalarField::from_coeffs(grid, y.remove(0));
        let (u1, u2, a11, a12, a22) = (take()?, take()?, take()?, take()?, take()?);
        Ok(DAState {
            u: VectorField::new(u1, u2),
            a: TensorField2x2::symmetric(a11, a12, a22),
            t,
        })
    }
}

/// Pointwise physical samples shared by the right-hand side pieces.
struct Samples {
    u1: Vec<f64>,
    u2: Vec<f64>,
    g: [Vec<f64>; 4],
    a11: Vec<f64>,
    a12: Vec<f64>,
    a22: Vec<f64>,
}

impl Samples {
    fn new(u: &VectorField, a: &TensorField2x2) -> Self {
        let grad = ops::velocity_gradient(u);
        Samples {
            u1: u.u1.values(),
            u2: u.u2.values(),
            g: grad.values(),
            a11: a.t11().values(),
            a12: a.t12().values(),
            a22: a.t22().values(),
        }
    }

    /// ∇u:A, truncated to `frac`.
    fn contraction(&self, grid: &Grid, frac: Fraction) -> ScalarField {
        let [g11, g12, g21, g22] = &self.g;
        let raw: Vec<f64> = (0..grid.len())
            .map(|i| g11[i] * self.a11[i] + (g12[i] + g21[i]) * self.a12[i] + g22[i] * self.a22[i])
            .collect();
        ScalarField::from_values(grid, &raw).truncate(frac)
    }
}

fn from_samples(grid: &Grid, frac: Fraction, v: &[f64]) -> ScalarField {
    ScalarField::from_values(grid, v).truncate(frac)
}

/// The strain–stress contraction ∇u:A, dealiased with the stress rule.
pub fn strain_contraction(u: &VectorField, a: &TensorField2x2, stress_dealias: Fraction) -> ScalarField {
    Samples::new(u, a).contraction(u.grid(), stress_dealias)
}

fn stress_from(grid: &Grid, frac: Fraction, gv: &[f64], s: &Samples, eta: f64) -> TensorField2x2 {
    let prod = |a: &[f64]| -> Vec<f64> { (0..grid.len()).map(|i| eta * gv[i] * a[i]).collect() };
    TensorField2x2::symmetric(
        from_samples(grid, frac, &prod(&s.a11)),
        from_samples(grid, frac, &prod(&s.a12)),
        from_samples(grid, frac, &prod(&s.a22)),
    )
}

/// σ = η (∇u:A) A, dealiased and symmetric.
pub fn da_viscous_stress(u: &VectorField, a: &TensorField2x2, eta: f64) -> TensorField2x2 {
    da_viscous_stress_with(u, a, eta, u.grid().dealias())
}

pub fn da_viscous_stress_with(u: &VectorField, a: &TensorField2x2, eta: f64, frac: Fraction) -> TensorField2x2 {
    let grid = u.grid();
    let s = Samples::new(u, a);
    let gv = s.contraction(grid, frac).values();
    stress_from(grid, frac, &gv, &s, eta)
}

/// Explicit pieces of the right-hand side for one state.
struct Rhs {
    /// GA + AGᵀ − 2(∇u:A)A, symmetric components 11, 12, 22.
    tensor_source: [ScalarField; 3],
    /// ∇·σ before projection.
    stress_div: VectorField,
    /// u·∇A components 11, 12, 22.
    tensor_adv: [ScalarField; 3],
    /// u·∇u.
    vel_adv: VectorField,
}

fn explicit_parts(u: &VectorField, a: &TensorField2x2, p: &DAParams) -> Rhs {
    let grid = u.grid();
    let frac = p.stress_fraction(grid);
    let s = Samples::new(u, a);
    let gv = s.contraction(grid, frac).values();
    let [g11, g12, g21, g22] = &s.g;
    let n = grid.len();
    let mut t11 = vec![0.0; n];
    let mut t12 = vec![0.0; n];
    let mut t22 = vec![0.0; n];
    for i in 0..n {
        let (a11, a12, a22) = (s.a11[i], s.a12[i], s.a22[i]);
        t11[i] = 2.0 * (g11[i] * a11 + g12[i] * a12) - 2.0 * gv[i] * a11;
        t22[i] = 2.0 * (g21[i] * a12 + g22[i] * a22) - 2.0 * gv[i] * a22;
        t12[i] = g11[i] * a12 + g12[i] * a22 + g21[i] * a11 + g22[i] * a12 - 2.0 * gv[i] * a12;
    }
    let sigma = stress_from(grid, frac, &gv, &s, p.eta);
    Rhs {
        tensor_source: [
            from_samples(grid, frac, &t11),
            from_samples(grid, frac, &t12),
            from_samples(grid, frac, &t22),
        ],
        stress_div: ops::tensor_divergence(&sigma),
        tensor_adv: [
            ops::advect_with(&s.u1, &s.u2, a.t11()),
            ops::advect_with(&s.u1, &s.u2, a.t12()),
            ops::advect_with(&s.u1, &s.u2, a.t22()),
        ],
        vel_adv: VectorField::new(
            ops::advect_with(&s.u1, &s.u2, &u.u1),
            ops::advect_with(&s.u1, &s.u2, &u.u2),
        ),
    }
}

/// GA + AGᵀ − 2(∇u:A)A − 2k(2A − 𝕀) + νΔA, i.e. everything except the
/// advection u·∇A.
pub fn da_tensor_rhs(state: &DAState, p: &DAParams) -> TensorField2x2 {
    let r = explicit_parts(&state.u, &state.a, p);
    let grid = state.grid();
    let [s11, s12, s22] = r.tensor_source;
    let lin = |a: &ScalarField, diag: bool| {
        let mut out = &(&a.laplacian() * p.nu) + &(a * (-4.0 * p.k));
        if diag {
            out.axpy(1.0, &ScalarField::constant(grid, 2.0 * p.k));
        }
        out
    };
    TensorField2x2::symmetric(
        &s11 + &lin(state.a.t11(), true),
        &s12 + &lin(state.a.t12(), false),
        &s22 + &lin(state.a.t22(), true),
    )
}

/// ℙ(−u·∇u + Δu + ∇·σ).
pub fn da_velocity_rhs(state: &DAState, p: &DAParams) -> VectorField {
    let r = explicit_parts(&state.u, &state.a, p);
    let mut v = r.stress_div;
    v.axpy(-1.0, &r.vel_adv);
    v.axpy(1.0, &state.u.map(|f| f.laplacian()));
    ops::leray_project(&v).map(|f| f.dealias())
}

/// Largest stable time step for the explicit advection and stress terms,
/// scaled by `p.cfl_safety`.
pub fn cfl_limit(state: &DAState, p: &DAParams) -> f64 {
    let grid = state.grid();
    let k1 = (grid.nx() / 2) as f64 * grid.dealias().value();
    let k2 = (grid.ny() / 2) as f64 * grid.dealias().value();
    let umax = state.u.u1.max_abs() * k1 + state.u.u2.max_abs() * k2;
    // Frozen-coefficient rate of the projected stress operator is
    // η (λ₁ − λ₂)² (k₁k₂)² / |k|² ≤ η (λ₁ − λ₂)² |k|² / 4.
    let (a11, a12, a22) = (state.a.t11().values(), state.a.t12().values(), state.a.t22().values());
    let spread = (0..grid.len())
        .map(|i| (a11[i] - a22[i]).powi(2) + 4.0 * a12[i] * a12[i])
        .fold(0.0, f64::max);
    let stress_rate = p.eta * spread * grid.max_dealiased_k_squared() / 4.0;
    stability_limit(umax, stress_rate, p.cfl_safety)
}

pub(crate) fn stability_limit(adv_rate: f64, stress_rate: f64, safety: f64) -> f64 {
    let adv = if adv_rate > 0.0 { 1.0 / adv_rate } else { f64::INFINITY };
    let stress = if stress_rate > 0.0 { 1.0 / stress_rate } else { f64::INFINITY };
    safety * adv.min(stress)
}

/// Stateful integrator for the closure model. Carries the multistep history.
#[derive(Clone, Debug)]
pub struct DASolver {
    params: DAParams,
    grid: Grid,
    imex: Cnab2,
    rates: Vec<Vec<f64>>,
    steps: u64,
    galerkin_cutoff: Option<f64>,
    galerkin_saturated: bool,
}

impl DASolver {
    pub fn new(grid: &Grid, params: DAParams) -> Result<Self> {
        params.validate()?;
        let lap: Vec<f64> = (0..grid.len()).map(|i| -grid.k_squared(i)).collect();
        let tens: Vec<f64> = lap.iter().map(|&l| params.nu * l - 4.0 * params.k).collect();
        let rates = vec![lap.clone(), lap, tens.clone(), tens.clone(), tens];
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
        Ok(DASolver {
            params,
            grid: grid.clone(),
            imex: Cnab2::new(),
            rates,
            steps: 0,
            galerkin_cutoff: cutoff,
            galerkin_saturated: saturated,
        })
    }

    pub fn params(&self) -> &DAParams {
        &self.params
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Whether the requested Galerkin cutoff ran past the grid.
    pub fn galerkin_saturated(&self) -> bool {
        self.galerkin_saturated
    }

    /// Drops the multistep history; the next step restarts the scheme.
    pub fn reset_history(&mut self) {
        self.imex.reset();
    }

    /// Applies the Galerkin restriction (if any) to a state.
    pub fn project_state(&self, state: &mut DAState) {
        if let Some(c) = self.galerkin_cutoff {
            state.u = state.u.map(|f| f.shell_truncate(c));
            state.a = state.a.map(|f| f.shell_truncate(c));
        }
    }

    fn explicit(&self, y: &Slots) -> Result<Slots> {
        let st = DAState::from_slots(&self.grid, y.clone(), 0.0)?;
        let p = &self.params;
        let r = explicit_parts(&st.u, &st.a, p);
        let mut v = r.stress_div;
        v.axpy(-1.0, &r.vel_adv);
        let v = ops::leray_project(&v).map(|f| f.dealias());
        let [s11, s12, s22] = r.tensor_source;
        let [d11, d12, d22] = r.tensor_adv;
        let mut out = vec![v.u1, v.u2, &s11 - &d11, &s12 - &d12, &s22 - &d22];
        let relax = Complex64::new(2.0 * p.k, 0.0);
        out[2].coeffs_mut()[0] += relax;
        out[4].coeffs_mut()[0] += relax;
        if let Some(c) = self.galerkin_cutoff {
            for f in &mut out {
                *f = f.shell_truncate(c);
            }
        }
        Ok(out.into_iter().map(|f| f.into_coeffs()).collect())
    }

    /// Advances the state by one time step.
    pub fn step(&mut self, state: &mut DAState) -> Result<()> {
        if state.grid() != &self.grid {
            return Err(Error::GridMismatch);
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
        const NAMES: [&str; 5] = ["u1", "u2", "A11", "A12", "A22"];
        for (slot, name) in y.iter().zip(NAMES) {
            if slot.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::Blowup {
                    step: self.steps,
                    field: name.to_string(),
                });
            }
        }
        let mut next = DAState::from_slots(&self.grid, y, state.t + dt)?;
        next.u = ops::leray_project(&next.u);
        next.u.remove_mean();
        let dev = max_trace_deviation(&next.a);
        if dev > self.params.tol_trace {
            log::warn!("trace drift {dev:e} at t = {} exceeds tolerance", next.t);
        }
        *state = next;
        Ok(())
    }
}

/// One step from a state with no history (Heun start).
pub fn step_da(state: &DAState, params: &DAParams) -> Result<DAState> {
    let mut solver = DASolver::new(state.grid(), params.clone())?;
    let mut next = state.clone();
    solver.step(&mut next)?;
    Ok(next)
}

pub fn max_trace_deviation(a: &TensorField2x2) -> f64 {
    let tr = a.trace().values();
    tr.iter().fold(0.0, |m, v| m.max((v - 1.0).abs()))
}

/// Pointwise structural quantities of the conformation tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StructuralReport {
    pub max_trace_dev: f64,
    pub min_det: f64,
    pub max_det: f64,
    /// Largest spectral norm of A over the grid.
    pub max_norm: f64,
    /// max |‖A‖²_F − (1 − 2 det A)|, meaningful when Tr A = 1.
    pub frobenius_identity_err: f64,
}

pub fn structural_report(a: &TensorField2x2) -> StructuralReport {
    let (a11, a12, a22) = (a.t11().values(), a.t12().values(), a.t22().values());
    let mut r = StructuralReport {
        max_trace_dev: 0.0,
        min_det: f64::INFINITY,
        max_det: f64::NEG_INFINITY,
        max_norm: 0.0,
        frobenius_identity_err: 0.0,
    };
    for i in 0..a11.len() {
        let tr = a11[i] + a22[i];
        let det = a11[i] * a22[i] - a12[i] * a12[i];
        let rad = (0.25 * (a11[i] - a22[i]).powi(2) + a12[i] * a12[i]).sqrt();
        let norm = (0.5 * tr + rad).abs().max((0.5 * tr - rad).abs());
        let frob = a11[i] * a11[i] + 2.0 * a12[i] * a12[i] + a22[i] * a22[i];
        r.max_trace_dev = r.max_trace_dev.max((tr - 1.0).abs());
        r.min_det = r.min_det.min(det);
        r.max_det = r.max_det.max(det);
        r.max_norm = r.max_norm.max(norm);
        r.frobenius_identity_err = r.frobenius_identity_err.max((frob - (1.0 - 2.0 * det)).abs());
    }
    r
}

/// Energy-budget inputs at one time level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    /// ½‖u‖².
    pub kinetic: f64,
    /// ‖∇u‖².
    pub gradient: f64,
    /// η‖∇u:A‖².
    pub viscous: f64,
}

pub fn energy_sample(state: &DAState, p: &DAParams) -> EnergySample {
    let g = strain_contraction(&state.u, &state.a, p.stress_fraction(state.grid()));
    EnergySample {
        t: state.t,
        kinetic: 0.5 * state.u.l2_norm_sq(),
        gradient: ops::gradient_norm_sq(&state.u),
        viscous: p.eta * g.l2_norm_sq(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyBudget {
    /// (t, r) with r = d/dt ½‖u‖² + ‖∇u‖² + η‖∇u:A‖².
    pub residuals: Vec<(f64, f64)>,
    pub max_abs: f64,
    /// max over t of |r(t)| / (‖∇u‖² + η‖∇u:A‖²)(t); zero where the
    /// dissipation vanishes identically.
    pub max_relative: f64,
}

/// Energy-budget residual using centred differences in time.
pub fn da_energy_budget(history: &[EnergySample]) -> Result<EnergyBudget> {
    if history.len() < 3 {
        return Err(Error::InsufficientHistory {
            needed: 3,
            got: history.len(),
        });
    }
    let mut residuals = Vec::with_capacity(history.len() - 2);
    let (mut max_abs, mut max_relative) = (0.0f64, 0.0f64);
    for w in history.windows(3) {
        let (prev, cur, next) = (&w[0], &w[1], &w[2]);
        let dedt = (next.kinetic - prev.kinetic) / (next.t - prev.t);
        let diss = cur.gradient + cur.viscous;
        let r = dedt + diss;
        residuals.push((cur.t, r));
        max_abs = max_abs.max(r.abs());
        if diss > 0.0 {
            max_relative = max_relative.max(r.abs() / diss);
        } else if r != 0.0 {
            max_relative = f64::INFINITY;
        }
    }
    Ok(EnergyBudget {
        residuals,
        max_abs,
        max_relative,
    })
}

pub fn determinant(a: &TensorField2x2) -> Vec<f64> {
    let (a11, a12, a22) = (a.t11().values(), a.t12().values(), a.t22().values());
    (0..a11.len()).map(|i| a11[i] * a22[i] - a12[i] * a12[i]).collect()
}

/// Source 2k + 2ν|∇A₁₁|² + 2ν|∇A₁₂|² of the determinant equation.
pub fn det_source(a: &TensorField2x2, p: &DAParams) -> Vec<f64> {
    let d = |f: &ScalarField, ax| f.derivative(ax).values();
    let (a1x, a1y, b1x, b1y) = (d(a.t11(), 0), d(a.t11(), 1), d(a.t12(), 0), d(a.t12(), 1));
    (0..a1x.len())
        .map(|i| 2.0 * p.k + 2.0 * p.nu * (a1x[i].powi(2) + a1y[i].powi(2) + b1x[i].powi(2) + b1y[i].powi(2)))
        .collect()
}

#[derive(Clone, Debug)]
pub struct DetResidual {
    /// Pointwise residual at the middle state.
    pub residual: Vec<f64>,
    pub max_abs: f64,
    pub min_det: f64,
}

/// Pointwise residual of
/// (∂_t + u·∇) det A = −4(∇u:A + 2k) det A + νΔ det A + 2k + 2ν(|∇A₁₁|² + |∇A₁₂|²)
/// at `cur`, with ∂_t from the neighbouring states.
pub fn det_evolution_residual(prev: &DAState, cur: &DAState, next: &DAState, p: &DAParams) -> DetResidual {
    let grid = cur.grid();
    let dp = determinant(&prev.a);
    let dn = determinant(&next.a);
    let dc = determinant(&cur.a);
    let det = ScalarField::from_values(grid, &dc);
    let adv = {
        let (u1, u2) = (cur.u.u1.values(), cur.u.u2.values());
        let (d1, d2) = (det.derivative(0).values(), det.derivative(1).values());
        (0..grid.len()).map(|i| u1[i] * d1[i] + u2[i] * d2[i]).collect::<Vec<_>>()
    };
    let lap = det.laplacian().values();
    let g = strain_contraction(&cur.u, &cur.a, p.stress_fraction(grid)).values();
    let src = det_source(&cur.a, p);
    let span = next.t - prev.t;
    let residual: Vec<f64> = (0..grid.len())
        .map(|i| {
            let dtd = (dn[i] - dp[i]) / span;
            dtd + adv[i] - (-4.0 * (g[i] + 2.0 * p.k) * dc[i] + p.nu * lap[i] + src[i])
        })
        .collect();
    DetResidual {
        max_abs: residual.iter().fold(0.0, |m, v| m.max(v.abs())),
        min_det: dc.iter().copied().fold(f64::INFINITY, f64::min),
        residual,
    }
}

/// Initial data used by the runner and tests.
pub mod presets {
    use super::*;

    /// Taylor–Green velocity (A sin x₁ cos x₂, −A cos x₁ sin x₂).
    pub fn taylor_green(grid: &Grid, amplitude: f64) -> VectorField {
        VectorField::from_fn(grid, |x, y| (amplitude * x.sin() * y.cos(), -amplitude * x.cos() * y.sin()))
    }

    /// A = ½𝕀 + ε·[[p, q], [q, −p]] with smooth bounded p, q. Positive
    /// definite with unit trace whenever ε(|p|² + |q|²)^{1/2} < ½.
    pub fn perturbed_isotropic(grid: &Grid, eps: f64) -> TensorField2x2 {
        let p = ScalarField::from_fn(grid, |x, y| (x + 2.0 * y).cos() * 0.6 + 0.2 * (2.0 * x).sin());
        let q = ScalarField::from_fn(grid, |x, y| 0.5 * (x - y).sin() + 0.3 * (3.0 * y).cos());
        TensorField2x2::symmetric(
            &ScalarField::constant(grid, 0.5) + &p.scaled(eps),
            q.scaled(eps),
            &ScalarField::constant(grid, 0.5) - &p.scaled(eps),
        )
    }

    /// Constant diagonal tensor diag(a, 1 − a).
    pub fn constant_diagonal(grid: &Grid, a: f64) -> TensorField2x2 {
        TensorField2x2::symmetric(
            ScalarField::constant(grid, a),
            ScalarField::zeros(grid),
            ScalarField::constant(grid, 1.0 - a),
        )
    }
}
