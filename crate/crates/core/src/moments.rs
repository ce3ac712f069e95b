//! Angular moments of the orientation distribution, the stresses built from
//! them, moment evolution, and the Toeplitz realizability test.
//!
//! With m = (cos θ, sin θ), the order-n moment component with `p` indices
//! equal to 1 (and n − p equal to 2) is M⁽ᵖ⁾ = ∫ cosᵖθ sinⁿ⁻ᵖθ f dθ. All
//! symmetric components of Mₙ are indexed by p ∈ 0..=n.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::doi::AngularDistribution;
use crate::error::{Error, Result};
use crate::field::{ComplexField, ScalarField, TensorField2x2, VectorField};
use crate::grid::Grid;
use crate::ops;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Trigonometric moments s_j = ∫ e^{−ijθ} f dθ = 2π ĉ_j, j = 0..=J.
#[derive(Clone, Debug)]
pub struct TrigMoments {
    pub s: Vec<ComplexField>,
}

impl TrigMoments {
    pub fn order(&self) -> usize {
        self.s.len() - 1
    }

    pub fn grid(&self) -> &Grid {
        self.s[0].grid()
    }
}

pub fn trig_moments(f: &AngularDistribution, order: usize) -> Result<TrigMoments> {
    if order > f.order() {
        return Err(Error::InsufficientModes {
            needed: order,
            have: f.order(),
        });
    }
    Ok(TrigMoments {
        s: (0..=order).map(|j| f.mode(j).scaled(TWO_PI)).collect(),
    })
}

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i as i64 + 1))
}

/// Expansion cosᵖθ sinᵠθ = Σ_{r=−n..n} w_r e^{irθ} with n = p + q. Returns
/// integer numerators (re, im) of w_r for r = 0..=n; the common denominator
/// is 2ⁿ and w_{−r} = conj(w_r).
pub fn monomial_weights(p: usize, q: usize) -> Vec<(i64, i64)> {
    let n = p + q;
    let mut real = vec![0i64; n + 1];
    for a in 0..=p {
        for b in 0..=q {
            let r = 2 * (a + b) as i64 - n as i64;
            if r < 0 {
                continue;
            }
            let sign = if (q - b) % 2 == 0 { 1 } else { -1 };
            real[r as usize] += sign * binomial(p, a) * binomial(q, b);
        }
    }
    // Multiply by (−i)^q.
    real.into_iter()
        .map(|v| match q % 4 {
            0 => (v, 0),
            1 => (0, -v),
            2 => (-v, 0),
            _ => (0, v),
        })
        .collect()
}

/// Complex weights w_r (r = 0..=n) of the component with `p` cosine factors.
pub fn component_weights(n: usize, p: usize) -> Vec<Complex64> {
    let scale = 0.5f64.powi(n as i32);
    monomial_weights(p, n - p)
        .into_iter()
        .map(|(re, im)| Complex64::new(re as f64 * scale, im as f64 * scale))
        .collect()
}

/// Symmetric order-n moment tensor; `components[p]` is M⁽ᵖ⁾.
#[derive(Clone, Debug)]
pub struct MomentTensor {
    pub n: usize,
    pub components: Vec<ScalarField>,
}

impl MomentTensor {
    /// Component for an explicit multi-index with entries in {1, 2}.
    pub fn component(&self, index: &[u8]) -> &ScalarField {
        assert_eq!(index.len(), self.n, "multi-index has wrong order");
        let p = index.iter().filter(|&&i| i == 1).count();
        &self.components[p]
    }

    pub fn grid(&self) -> &Grid {
        self.components[0].grid()
    }
}

fn moment_from_trig(s: &TrigMoments, n: usize, p: usize) -> ScalarField {
    let w = component_weights(n, p);
    let mut acc = s.s[0].re_part().scaled(w[0].re);
    for (r, &wr) in w.iter().enumerate().skip(1) {
        if wr == Complex64::default() || r >= s.s.len() {
            continue;
        }
        // 2 Re(w_r conj(s_r)) = conj(w_r) s_r + w_r conj(s_r)
        let sr = &s.s[r];
        let z = &sr.mul_complex(wr.conj()) + &sr.conj().mul_complex(wr);
        acc += &z.re_part();
    }
    acc
}

/// Order-n moments. Modes past the angular cutoff are zero, so the result
/// is exact for the stored distribution; `n` may not exceed twice the cutoff.
pub fn moment_tensor(f: &AngularDistribution, n: usize) -> Result<MomentTensor> {
    if n > 2 * f.order() {
        return Err(Error::InsufficientModes {
            needed: n.div_ceil(2),
            have: f.order(),
        });
    }
    let s = trig_moments(f, f.order().min(n))?;
    Ok(MomentTensor {
        n,
        components: (0..=n).map(|p| moment_from_trig(&s, n, p)).collect(),
    })
}

/// Mass density M₀ = 2π ĉ₀.
pub fn mass_density(f: &AngularDistribution) -> ScalarField {
    f.mode(0).re_part().scaled(TWO_PI)
}

/// Largest excess max_p |M⁽ᵖ⁾(x)| − M₀(x) over the grid. Non-positive when
/// the pointwise moment bound holds.
pub fn moment_bound_excess(m: &MomentTensor, m0: &ScalarField) -> f64 {
    let m0v = m0.values();
    let mut worst = f64::NEG_INFINITY;
    for c in &m.components {
        for (v, b) in c.values().iter().zip(&m0v) {
            worst = worst.max(v.abs() - b);
        }
    }
    worst
}

/// σ_E = 2∫(m⊗m − ½𝕀) f dθ = [[Re s₂, −Im s₂], [−Im s₂, −Re s₂]].
pub fn elastic_stress(f: &AngularDistribution) -> Result<TensorField2x2> {
    if f.order() < 2 {
        return Err(Error::InsufficientModes { needed: 2, have: f.order() });
    }
    let s2 = f.mode(2).scaled(TWO_PI);
    let re = s2.re_part();
    let im = s2.im_part();
    Ok(TensorField2x2::symmetric(re.clone(), -&im, -&re))
}

/// (X11, X12 + X21, X22): coefficients of X:m⊗m on cos², cos sin, sin².
pub(crate) fn strain_weights(x: &[f64; 4]) -> [f64; 3] {
    [x[0], x[1] + x[2], x[3]]
}

/// Quartic form ∫ (X:m⊗m)(Y:m⊗m) f dθ at a point, given the five M₄
/// components there (indexed by the number of cosine factors).
pub fn quartic_form(m4: &[f64; 5], x: &[f64; 4], y: &[f64; 4]) -> f64 {
    let (xa, yb) = (strain_weights(x), strain_weights(y));
    let mut acc = 0.0;
    for (a, xa) in xa.iter().enumerate() {
        for (b, yb) in yb.iter().enumerate() {
            acc += xa * yb * m4[4 - a - b];
        }
    }
    acc
}

/// σ_V^{kl} = η Σ_ij ∂_j u_i M₄^{ijkl} given M₄ and the velocity gradient,
/// with dealiased products.
pub fn viscous_stress_from_m4(m4: &MomentTensor, gradu: &TensorField2x2, eta: f64) -> TensorField2x2 {
    assert_eq!(m4.n, 4, "viscous stress needs the fourth moment");
    let grid = gradu.grid();
    let [g11, g12, g21, g22] = gradu.values();
    let m: Vec<Vec<f64>> = m4.components.iter().map(|c| c.values()).collect();
    let comp = |shift: usize| -> ScalarField {
        // shift = number of sine factors contributed by the output indices.
        let v: Vec<f64> = (0..grid.len())
            .map(|i| {
                eta * (g11[i] * m[4 - shift][i] + (g12[i] + g21[i]) * m[3 - shift][i] + g22[i] * m[2 - shift][i])
            })
            .collect();
        ScalarField::from_values(grid, &v).dealias()
    };
    TensorField2x2::symmetric(comp(0), comp(1), comp(2))
}

pub fn viscous_stress(f: &AngularDistribution, gradu: &TensorField2x2, eta: f64) -> Result<TensorField2x2> {
    if f.order() < 4 {
        return Err(Error::InsufficientModes { needed: 4, have: f.order() });
    }
    Ok(viscous_stress_from_m4(&moment_tensor(f, 4)?, gradu, eta))
}

/// One term of the rotational-diffusion operator on order-n moments:
/// component `p` receives `coef · k · M⁽ˢʳᶜ⁾`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiffusionEntry {
    pub p: usize,
    pub src: usize,
    pub coef: i64,
}

/// Rotational-diffusion operator on order-n moments, from
/// ∂²_θ(cᵖsᵠ) = p(p−1)cᵖ⁻²sᵠ⁺² − (2pq+p+q)cᵖsᵠ + q(q−1)cᵖ⁺²sᵠ⁻².
pub fn diffusion_table(n: usize) -> Vec<DiffusionEntry> {
    let mut out = Vec::new();
    for p in 0..=n {
        let q = n - p;
        let (pi, qi) = (p as i64, q as i64);
        if p >= 2 {
            out.push(DiffusionEntry { p, src: p - 2, coef: pi * (pi - 1) });
        }
        out.push(DiffusionEntry { p, src: p, coef: -(2 * pi * qi + pi + qi) });
        if q >= 2 {
            out.push(DiffusionEntry { p, src: p + 2, coef: qi * (qi - 1) });
        }
    }
    out
}

/// One term of the drift operator: component `p` of the order-n rate receives
/// `coef · G[grad] · M_{n+2}⁽ˢʳᶜ⁾`, where `grad` indexes G as (11, 12, 21, 22)
/// with G_ij = ∂_j u_i.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DriftEntry {
    pub p: usize,
    pub grad: usize,
    pub src: usize,
    pub coef: i64,
}

/// Drift operator mapping (∇u, M_{n+2}) to the order-n rate. Derived from
/// ∫ ∂_θ(cᵖsᵠ) W f with W = G₂₁c² + (G₂₂ − G₁₁)cs − G₁₂s².
pub fn drift_table(n: usize) -> Vec<DriftEntry> {
    let mut out = Vec::new();
    let mut push = |p: usize, grad: usize, src: i64, coef: i64| {
        if coef != 0 && src >= 0 && src as usize <= n + 2 {
            out.push(DriftEntry { p, grad, src: src as usize, coef });
        }
    };
    for p in 0..=n {
        let q = n - p;
        let (pi, qi, ps) = (p as i64, q as i64, p as i64);
        // −p c^{p−1} s^{q+1} · W
        push(p, 2, ps + 1, -pi);
        push(p, 3, ps, -pi);
        push(p, 0, ps, pi);
        push(p, 1, ps - 1, pi);
        // q c^{p+1} s^{q−1} · W
        push(p, 2, ps + 3, qi);
        push(p, 3, ps + 2, qi);
        push(p, 0, ps + 2, -qi);
        push(p, 1, ps + 1, -qi);
    }
    out
}

/// Right-hand side of the order-n moment equation,
/// −u·∇Mₙ + k·T₁Mₙ + νΔMₙ + T₂(∇u, M_{n+2}), with dealiased products.
pub fn moment_rhs(
    f: &AngularDistribution,
    u: &VectorField,
    gradu: &TensorField2x2,
    n: usize,
    k: f64,
    nu: f64,
) -> Result<MomentTensor> {
    if n > f.order() {
        return Err(Error::InsufficientModes { needed: n, have: f.order() });
    }
    let grid = f.grid();
    let mn = moment_tensor(f, n)?;
    let mn2 = moment_tensor(f, n + 2)?;
    let (u1, u2) = ops::velocity_values(u);
    let g = gradu.values();
    let m2v: Vec<Vec<f64>> = mn2.components.iter().map(|c| c.values()).collect();
    let mut comps: Vec<ScalarField> = mn
        .components
        .iter()
        .map(|c| &(&c.laplacian() * nu) - &ops::advect_with(&u1, &u2, c))
        .collect();
    for e in diffusion_table(n) {
        comps[e.p].axpy(k * e.coef as f64, &mn.components[e.src]);
    }
    let mut drift = vec![vec![0.0; grid.len()]; n + 1];
    for e in drift_table(n) {
        let (gv, mv) = (&g[e.grad], &m2v[e.src]);
        for (i, d) in drift[e.p].iter_mut().enumerate() {
            *d += e.coef as f64 * gv[i] * mv[i];
        }
    }
    for (c, d) in comps.iter_mut().zip(&drift) {
        *c += &ScalarField::from_values(grid, d).dealias();
    }
    Ok(MomentTensor { n, components: comps })
}

/// Per-point minimum Toeplitz eigenvalue and the realizability verdict.
#[derive(Clone, Debug)]
pub struct ToeplitzReport {
    pub min_eigenvalue: Vec<f64>,
    /// min over the grid of λ_min(x) / s₀(x).
    pub min_relative: f64,
    /// Number of points with λ_min < −tol·s₀.
    pub violations: usize,
    pub ok: bool,
}

/// Default relative tolerance of the positive-semidefiniteness check.
pub const PSD_TOL: f64 = 1e-8;

/// Builds the Hermitian Toeplitz matrix [s_{j−k}] at one point.
pub fn toeplitz_matrix(s: &[Complex64]) -> DMatrix<Complex64> {
    let n = s.len();
    DMatrix::from_fn(n, n, |j, k| if j >= k { s[j - k] } else { s[k - j].conj() })
}

pub fn toeplitz_min_eigenvalue(s: &[Complex64]) -> f64 {
    toeplitz_matrix(s).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Checks positive semidefiniteness of the order-J Toeplitz matrix at every
/// grid point against `tol · s₀(x)`.
pub fn toeplitz_realizability(s: &TrigMoments, order: usize, tol: f64) -> Result<ToeplitzReport> {
    if order > s.order() {
        return Err(Error::InsufficientModes { needed: order, have: s.order() });
    }
    let vals: Vec<Vec<Complex64>> = s.s[..=order].iter().map(|f| f.values()).collect();
    let npts = s.grid().len();
    let mut min_eigenvalue = Vec::with_capacity(npts);
    let mut min_relative = f64::INFINITY;
    let mut violations = 0;
    let mut buf = vec![Complex64::default(); order + 1];
    for i in 0..npts {
        for (j, b) in buf.iter_mut().enumerate() {
            *b = vals[j][i];
        }
        buf[0].im = 0.0;
        let lam = toeplitz_min_eigenvalue(&buf);
        let s0 = buf[0].re;
        if lam < -tol * s0.abs() {
            violations += 1;
        }
        let rel = if s0 > 0.0 { lam / s0 } else if lam >= 0.0 { 0.0 } else { f64::NEG_INFINITY };
        min_relative = min_relative.min(rel);
        min_eigenvalue.push(lam);
    }
    Ok(ToeplitzReport {
        min_eigenvalue,
        min_relative,
        violations,
        ok: violations == 0,
    })
}

/// Residual of the order-n moment equation at `cur`, with the time
/// derivative from centred differences of the neighbouring states.
pub fn moment_evolution_residual(
    history: [&crate::doi::DoiState; 3],
    n: usize,
    params: &crate::doi::DoiParams,
) -> Result<f64> {
    let [prev, cur, next] = history;
    let span = next.t - prev.t;
    let mp = moment_tensor(&prev.f, n)?;
    let mn = moment_tensor(&next.f, n)?;
    let gradu = crate::doi::drift_gradient(cur, params);
    let rhs = moment_rhs(&cur.f, &cur.u, &gradu, n, params.k, params.nu)?;
    let mut worst = 0.0f64;
    for p in 0..=n {
        let dt = (&mn.components[p] - &mp.components[p]).scaled(1.0 / span);
        worst = worst.max((&dt - &rhs.components[p]).max_abs());
    }
    Ok(worst)
}
