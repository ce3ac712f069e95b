//! Integration-by-parts audits of the stress terms and the per-step norm
//! ledger.
//!
//! Each cancellation split evaluates a vorticity–stress pairing directly and
//! compares it against a dissipative quadratic form plus a commutator
//! remainder (terms in which derivatives land on the conformation or the
//! moments), both computed independently. Everything is evaluated on a
//! grid refined by two so that the quadrature of cubic and quartic
//! integrands is exact for fields inside the dealiased band.
//!
//! The higher-order splits pair with −Δω, so every dissipative term is
//! non-positive.

use crate::da::{self, DAState};
use crate::doi::{self, AngularDistribution, DoiState};
use crate::error::Result;
use crate::field::{ScalarField, TensorField2x2, VectorField};
use crate::grid::{Fraction, Grid};
use crate::moments::{self, quartic_form, MomentTensor};
use crate::ops;

/// Result of one cancellation audit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CancellationSplit {
    /// The stress pairing, evaluated directly.
    pub lhs: f64,
    /// The negative-definite part.
    pub dissipative: f64,
    /// lhs − dissipative.
    pub remainder: f64,
    /// The commutator remainder evaluated independently.
    pub remainder_direct: f64,
    /// |lhs − dissipative − remainder_direct| relative to the largest term.
    pub closure_error: f64,
}

impl CancellationSplit {
    fn new(lhs: f64, dissipative: f64, remainder_direct: f64) -> Self {
        let scale = lhs.abs().max(dissipative.abs()).max(remainder_direct.abs());
        let err = (lhs - dissipative - remainder_direct).abs();
        CancellationSplit {
            lhs,
            dissipative,
            remainder: lhs - dissipative,
            remainder_direct,
            closure_error: if scale > 0.0 { err / scale } else { err },
        }
    }

    pub fn closes(&self, tol: f64) -> bool {
        self.closure_error <= tol
    }
}

/// Default closure tolerance.
pub const CLOSURE_TOL: f64 = 1e-10;

fn warn_if_aliased(name: &str, fields: &[&ScalarField]) {
    for f in fields {
        let top = f.max_coeff_outside_band();
        if top > 1e-12 * f.max_coeff().max(f64::MIN_POSITIVE) {
            log::warn!("{name}: input occupies the top of the spectrum (|c| = {top:e}); the audit may alias");
            return;
        }
    }
}

fn integral(grid: &Grid, v: impl Iterator<Item = f64>) -> f64 {
    v.sum::<f64>() * grid.cell_area()
}

/// ∫ w · ∇⊥·(∇·σ) using Parseval.
fn vorticity_stress_pairing(w: &ScalarField, sigma: &TensorField2x2) -> f64 {
    let d = ops::tensor_divergence(sigma);
    w.inner(&ops::vorticity(&d))
}

struct DaFine {
    grid: Grid,
    u: VectorField,
    a: TensorField2x2,
    psi: ScalarField,
    /// A₁₂ and A₂₂ − A₁₁.
    ca: ScalarField,
    cb: ScalarField,
}

fn da_fine(u: &VectorField, a: &TensorField2x2) -> Result<DaFine> {
    warn_if_aliased("tensor audit", &[&u.u1, &u.u2, a.t11(), a.t12(), a.t22()]);
    let grid = u.grid().refined(2);
    let psi = ops::stream_function(&ops::vorticity(u))?.resample(&grid);
    let uf = u.map(|f| f.resample(&grid));
    let af = a.map(|f| f.resample(&grid));
    Ok(DaFine {
        ca: af.t12().clone(),
        cb: af.t22() - af.t11(),
        grid,
        u: uf,
        a: af,
        psi,
    })
}

fn l_op(f: &ScalarField) -> ScalarField {
    &f.derivative(0).derivative(0) - &f.derivative(1).derivative(1)
}

fn q_op(f: &ScalarField) -> ScalarField {
    f.derivative(0).derivative(1)
}

/// P(φ) = A₁₂ Lφ + (A₂₂ − A₁₁) Qφ pointwise, with L = ∂₁² − ∂₂², Q = ∂₁∂₂.
fn p_op(s: &DaFine, phi: &ScalarField) -> Vec<f64> {
    let (a, b) = (s.ca.values(), s.cb.values());
    let (l, q) = (l_op(phi).values(), q_op(phi).values());
    (0..a.len()).map(|i| a[i] * l[i] + b[i] * q[i]).collect()
}

/// R(φ) = ΔP(φ) − P(Δφ) = (Δa)Lφ + 2∇a·∇Lφ + (Δb)Qφ + 2∇b·∇Qφ.
fn r_op(s: &DaFine, phi: &ScalarField) -> Vec<f64> {
    let (lphi, qphi) = (l_op(phi), q_op(phi));
    let (lv, qv) = (lphi.values(), qphi.values());
    let (la, lb) = (s.ca.laplacian().values(), s.cb.laplacian().values());
    let mut out: Vec<f64> = (0..lv.len()).map(|i| la[i] * lv[i] + lb[i] * qv[i]).collect();
    for ax in 0..2 {
        let (da, db) = (s.ca.derivative(ax).values(), s.cb.derivative(ax).values());
        let (dl, dq) = (lphi.derivative(ax).values(), qphi.derivative(ax).values());
        for i in 0..out.len() {
            out[i] += 2.0 * (da[i] * dl[i] + db[i] * dq[i]);
        }
    }
    out
}

/// ∫ ω ∇⊥·(∇·σ) for σ = η(∇u:A)A, split as
/// −η∫|A₁₂∇Lψ + (A₂₂ − A₁₁)∇Qψ|² plus a remainder carrying ∇A.
pub fn cancellation_split_da(u: &VectorField, a: &TensorField2x2, eta: f64) -> Result<CancellationSplit> {
    let s = da_fine(u, a)?;
    let sigma = da::da_viscous_stress_with(&s.u, &s.a, eta, Fraction::ONE);
    let lhs = vorticity_stress_pairing(&ops::vorticity(&s.u), &sigma);

    let (a, b) = (s.ca.values(), s.cb.values());
    let (lpsi, qpsi) = (l_op(&s.psi), q_op(&s.psi));
    let (lv, qv) = (lpsi.values(), qpsi.values());
    let p = p_op(&s, &s.psi);
    let n = s.grid.len();
    let mut diss = 0.0;
    let mut rem = 0.0;
    for ax in 0..2 {
        let (dl, dq) = (lpsi.derivative(ax).values(), qpsi.derivative(ax).values());
        let (da, db) = (s.ca.derivative(ax).values(), s.cb.derivative(ax).values());
        for i in 0..n {
            let v = a[i] * dl[i] + b[i] * dq[i];
            diss += v * v;
            rem += v * (da[i] * lv[i] + db[i] * qv[i]) + (da[i] * dl[i] + db[i] * dq[i]) * p[i];
        }
    }
    let w = s.grid.cell_area();
    Ok(CancellationSplit::new(lhs, -eta * diss * w, -eta * rem * w))
}

/// ∫ (−Δω) ∇⊥·(∇·σ) for σ = η(∇u:A)A, split as −η‖(∇Δu):A‖² plus a
/// remainder carrying ∇A and ΔA.
pub fn cancellation_split_da_high(u: &VectorField, a: &TensorField2x2, eta: f64) -> Result<CancellationSplit> {
    let s = da_fine(u, a)?;
    let sigma = da::da_viscous_stress_with(&s.u, &s.a, eta, Fraction::ONE);
    let lhs = vorticity_stress_pairing(&-&ops::vorticity(&s.u).laplacian(), &sigma);

    let lpsi = s.psi.laplacian();
    let p_hi = p_op(&s, &lpsi);
    let p_lo = p_op(&s, &s.psi);
    let r_lo = r_op(&s, &s.psi);
    let r_hi = r_op(&s, &lpsi);
    let diss = integral(&s.grid, p_hi.iter().map(|v| v * v));
    let rem = integral(&s.grid, (0..p_hi.len()).map(|i| p_hi[i] * r_lo[i] - r_hi[i] * p_lo[i]));
    Ok(CancellationSplit::new(lhs, -eta * diss, -eta * rem))
}

struct DoiFine {
    grid: Grid,
    u: VectorField,
    m4: MomentTensor,
    /// ∂_j u_i samples, (11, 12, 21, 22).
    g: [Vec<f64>; 4],
    /// ∂_k of the gradient samples, per axis.
    dg: [[Vec<f64>; 4]; 2],
    lg: [Vec<f64>; 4],
    m4v: Vec<Vec<f64>>,
    dm4: [Vec<Vec<f64>>; 2],
}

fn doi_fine(u: &VectorField, f: &AngularDistribution) -> Result<DoiFine> {
    warn_if_aliased("kinetic audit", &[&u.u1, &u.u2]);
    let grid = u.grid().refined(2);
    let uf = u.map(|c| c.resample(&grid));
    let ff = f.with_order(f.order().max(4)).map(|m| m.resample(&grid));
    let m4 = moments::moment_tensor(&ff, 4)?;
    let grad = ops::velocity_gradient(&uf);
    let comps = [grad.t11(), grad.t12(), grad.t21(), grad.t22()];
    let vals4 = |h: &dyn Fn(&ScalarField) -> ScalarField| -> [Vec<f64>; 4] {
        [h(comps[0]).values(), h(comps[1]).values(), h(comps[2]).values(), h(comps[3]).values()]
    };
    let deriv_m4 = |ax: usize| m4.components.iter().map(|c| c.derivative(ax).values()).collect();
    Ok(DoiFine {
        g: grad.values(),
        dg: [vals4(&|c| c.derivative(0)), vals4(&|c| c.derivative(1))],
        lg: vals4(&|c| c.laplacian()),
        m4v: m4.components.iter().map(|c| c.values()).collect(),
        dm4: [deriv_m4(0), deriv_m4(1)],
        grid,
        u: uf,
        m4,
    })
}

fn at4(v: &[Vec<f64>; 4], i: usize) -> [f64; 4] {
    [v[0][i], v[1][i], v[2][i], v[3][i]]
}

fn at5(v: &[Vec<f64>], i: usize) -> [f64; 5] {
    [v[0][i], v[1][i], v[2][i], v[3][i], v[4][i]]
}

/// ∫ ω ∇⊥·(∇·σ_V), split as −η∫∫|∇ₓ((∇u):m⊗m)|² f plus a remainder
/// carrying ∇M₄.
pub fn cancellation_split_doi(u: &VectorField, f: &AngularDistribution, eta: f64) -> Result<CancellationSplit> {
    let s = doi_fine(u, f)?;
    let gradu = ops::velocity_gradient(&s.u);
    let sigma = moments::viscous_stress_from_m4(&s.m4, &gradu, eta);
    let lhs = vorticity_stress_pairing(&ops::vorticity(&s.u), &sigma);
    let (mut diss, mut rem) = (0.0, 0.0);
    for i in 0..s.grid.len() {
        let m4 = at5(&s.m4v, i);
        let g = at4(&s.g, i);
        for k in 0..2 {
            let dg = at4(&s.dg[k], i);
            diss += quartic_form(&m4, &dg, &dg);
            rem += quartic_form(&at5(&s.dm4[k], i), &dg, &g);
        }
    }
    let w = s.grid.cell_area();
    Ok(CancellationSplit::new(lhs, -eta * diss * w, -eta * rem * w))
}

/// ∫ (−Δω) ∇⊥·(∇·σ_V), split as −η∫∫(Δₓ((∇u):m⊗m))² f plus remainders
/// carrying ∇M₄ and ΔM₄.
pub fn cancellation_split_doi_high(u: &VectorField, f: &AngularDistribution, eta: f64) -> Result<CancellationSplit> {
    let s = doi_fine(u, f)?;
    let gradu = ops::velocity_gradient(&s.u);
    let sigma = moments::viscous_stress_from_m4(&s.m4, &gradu, eta);
    let lhs = vorticity_stress_pairing(&-&ops::vorticity(&s.u).laplacian(), &sigma);
    let lm4: Vec<Vec<f64>> = s.m4.components.iter().map(|c| c.laplacian().values()).collect();
    let (mut diss, mut rem) = (0.0, 0.0);
    for i in 0..s.grid.len() {
        let lg = at4(&s.lg, i);
        diss += quartic_form(&at5(&s.m4v, i), &lg, &lg);
        for k in 0..2 {
            rem += 2.0 * quartic_form(&at5(&s.dm4[k], i), &lg, &at4(&s.dg[k], i));
        }
        rem += quartic_form(&at5(&lm4, i), &lg, &at4(&s.g, i));
    }
    let w = s.grid.cell_area();
    Ok(CancellationSplit::new(lhs, -eta * diss * w, -eta * rem * w))
}

/// Coefficients of the quartic form ∫(X:m⊗m)(Y:m⊗m) f against M₄: entry
/// (α, β, p) pairs the α-th coefficient of X, the β-th of Y (over cos², cos
/// sin, sin²) with the M₄ component having p cosine factors. The trilinear
/// remainders use this table with M₄ replaced by ∂ₖM₄ or ΔM₄.
pub fn quartic_table() -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            out.push((a, b, 4 - a - b));
        }
    }
    out
}

/// H^s-type norm Σ_{m ≤ s} ‖∇ᵐ f‖², by Parseval.
pub fn sobolev_norm_sq(f: &ScalarField, s: u32) -> f64 {
    f.weighted_norm_sq(|k2| (0..=s).map(|m| k2.powi(m as i32)).sum())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Sobolev norm of a symmetric moment tensor, counting every index
/// permutation of each component.
pub fn moment_sobolev_norm(m: &MomentTensor, s: u32) -> f64 {
    m.components
        .iter()
        .enumerate()
        .map(|(p, c)| binomial(m.n, p) * sobolev_norm_sq(c, s))
        .sum::<f64>()
        .sqrt()
}

/// Per-step scalars of a kinetic run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoiRecord {
    pub t: f64,
    pub velocity_norm: f64,
    pub vorticity_norm: f64,
    pub vorticity_gradient_norm: f64,
    /// ‖σ_E‖ in W^{1,2}.
    pub elastic_stress_norm: f64,
    /// ‖M₄‖ in W^{2,2}.
    pub m4_norm: f64,
    /// ‖M₆‖ in W^{1,2}.
    pub m6_norm: f64,
    pub kinetic_energy: f64,
    pub entropy: f64,
    pub free_energy: f64,
    pub m0_min: f64,
    pub m0_max: f64,
    /// Total mass ∫M₀.
    pub mass: f64,
    /// max_x (max_I |M_I| − M₀) over the computed orders; ≤ 0 when bounded.
    pub moment_bound_excess: f64,
}

impl DoiRecord {
    pub const COLUMNS: [&'static str; 14] = [
        "t",
        "velocity_norm",
        "vorticity_norm",
        "vorticity_gradient_norm",
        "elastic_stress_norm",
        "m4_norm",
        "m6_norm",
        "kinetic_energy",
        "entropy",
        "free_energy",
        "m0_min",
        "m0_max",
        "mass",
        "moment_bound_excess",
    ];

    pub fn row(&self) -> Vec<f64> {
        vec![
            self.t,
            self.velocity_norm,
            self.vorticity_norm,
            self.vorticity_gradient_norm,
            self.elastic_stress_norm,
            self.m4_norm,
            self.m6_norm,
            self.kinetic_energy,
            self.entropy,
            self.free_energy,
            self.m0_min,
            self.m0_max,
            self.mass,
            self.moment_bound_excess,
        ]
    }
}

/// Norms tracked along a kinetic run.
pub fn norm_ledger(state: &DoiState) -> Result<DoiRecord> {
    let f = &state.f;
    let w = ops::vorticity(&state.u);
    let se = moments::elastic_stress(f)?;
    let m0 = moments::mass_density(f);
    let m4 = moments::moment_tensor(f, 4)?;
    let m6 = moments::moment_tensor(f, 6)?;
    let se_norm = [se.t11(), se.t12(), se.t21(), se.t22()]
        .iter()
        .map(|c| sobolev_norm_sq(c, 1))
        .sum::<f64>()
        .sqrt();
    let fe = doi::free_energy(state)?;
    let mut excess = f64::NEG_INFINITY;
    for n in 1..=f.order().min(6) {
        excess = excess.max(moments::moment_bound_excess(&moments::moment_tensor(f, n)?, &m0));
    }
    Ok(DoiRecord {
        t: state.t,
        velocity_norm: state.u.l2_norm_sq().sqrt(),
        vorticity_norm: w.l2_norm(),
        vorticity_gradient_norm: w.weighted_norm_sq(|k2| k2).sqrt(),
        elastic_stress_norm: se_norm,
        m4_norm: moment_sobolev_norm(&m4, 2),
        m6_norm: moment_sobolev_norm(&m6, 1),
        kinetic_energy: fe.kinetic,
        entropy: fe.entropy,
        free_energy: fe.total,
        m0_min: m0.min_value(),
        m0_max: m0.max_value(),
        mass: m0.mean() * state.grid().area(),
        moment_bound_excess: excess,
    })
}

/// Per-step scalars of a closure run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DaRecord {
    pub t: f64,
    pub kinetic_energy: f64,
    /// ‖ω‖² (equal to ‖∇u‖² for mean-free incompressible u).
    pub enstrophy: f64,
    /// Energy-budget residual d/dt ½‖u‖² + ‖∇u‖² + η‖∇u:A‖² at this time,
    /// centred in time; NaN where it cannot be formed.
    pub energy_residual: f64,
    pub min_det: f64,
    pub max_trace_dev: f64,
    /// η‖∇u:A‖².
    pub visc_dissipation: f64,
}

impl DaRecord {
    pub const COLUMNS: [&'static str; 7] = [
        "t",
        "kinetic_energy",
        "enstrophy",
        "energy_residual",
        "min_det",
        "max_trace_dev",
        "visc_dissipation",
    ];

    pub fn row(&self) -> Vec<f64> {
        vec![
            self.t,
            self.kinetic_energy,
            self.enstrophy,
            self.energy_residual,
            self.min_det,
            self.max_trace_dev,
            self.visc_dissipation,
        ]
    }
}

/// Closure-run record without the energy residual (filled in by the caller
/// once the neighbouring samples are known).
pub fn da_record(state: &DAState, params: &da::DAParams) -> DaRecord {
    let e = da::energy_sample(state, params);
    let r = da::structural_report(&state.a);
    DaRecord {
        t: state.t,
        kinetic_energy: e.kinetic,
        enstrophy: ops::vorticity(&state.u).l2_norm_sq(),
        energy_residual: f64::NAN,
        min_det: r.min_det,
        max_trace_dev: r.max_trace_dev,
        visc_dissipation: e.viscous,
    }
}
