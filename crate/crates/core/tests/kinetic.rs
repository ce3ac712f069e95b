mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use rodsim_core::doi::*;
use rodsim_core::moments::*;
use rodsim_core::ops;
use rodsim_core::random::*;
use rodsim_core::{ComplexField, Grid, ScalarField, VectorField};

/// 16² with spatial content up to |k| = 2, so every product the solver
/// forms stays inside the dealiased band and pointwise comparisons are
/// exact up to round-off.
fn small_state(seed: u64, order: usize) -> DoiState {
    let g = Grid::new(16, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_velocity(&g, &mut rng, 1.0, 2);
    let f = random_distribution(&g, &mut rng, order, 0.3, 2);
    DoiState::new(u, f, 0.0).unwrap()
}

fn params(k: f64, nu: f64) -> DoiParams {
    DoiParams { k, nu, ..DoiParams::default() }
}

/// Spatial part −u·∇ĉ_j + νΔĉ_j of each mode, sampled on the grid.
fn spatial_part(state: &DoiState, nu: f64) -> Vec<Vec<Complex64>> {
    let uv = [state.u.u1.values(), state.u.u2.values()];
    state
        .f
        .modes()
        .iter()
        .map(|m| {
            let d: Vec<Vec<Complex64>> = (0..2).map(|ax| m.derivative(ax).values()).collect();
            let lap = m.laplacian().values();
            (0..state.grid().len())
                .map(|i| -(uv[0][i] * d[0][i] + uv[1][i] * d[1][i]) + lap[i] * nu)
                .collect()
        })
        .collect()
}

fn gradient_values(u: &VectorField) -> [Vec<f64>; 4] {
    ops::velocity_gradient(u).values()
}

#[test]
fn mode_equations_match_angular_quadrature() {
    let (k, nu) = (0.7, 0.2);
    let st = small_state(21, 8);
    let p = params(k, nu);
    let rhs: Vec<Vec<Complex64>> = fp_rhs(&st, &p).iter().map(|m| m.values()).collect();
    let base = all_mode_values(&st.f);
    let spatial = spatial_part(&st, nu);
    let gv = gradient_values(&st.u);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..st.grid().len() {
        let c = point(&base, i);
        let drift = project(&drift_term(&c, grad_at(&gv, i)), 8);
        for j in 0..=8 {
            let expect = spatial[j][i] - c[j] * (k * (j * j) as f64) + drift[j];
            worst = worst.max((rhs[j][i] - expect).norm());
            scale = scale.max(expect.norm());
        }
    }
    assert!(worst < 1e-12 * scale.max(1.0), "worst {worst:e}, scale {scale:e}");
}

#[test]
fn moment_equations_match_angular_quadrature() {
    let (k, nu) = (1.3, 0.1);
    let st = small_state(22, 8);
    let gradu = ops::velocity_gradient(&st.u);
    let gv = gradu.values();
    let base = all_mode_values(&st.f);
    let spatial = spatial_part(&st, nu);
    for n in [2, 4] {
        let lib = moment_rhs(&st.f, &st.u, &gradu, n, k, nu).unwrap();
        let libv: Vec<Vec<f64>> = lib.components.iter().map(|c| c.values()).collect();
        // Same moments taken from the mode equations directly.
        let via_modes = moment_tensor(&AngularDistribution::new(fp_rhs(&st, &params(k, nu))).unwrap(), n).unwrap();
        let mut worst = 0.0f64;
        for i in 0..st.grid().len() {
            let c = point(&base, i);
            let sp = point(&spatial, i);
            let d2 = samples(&c, 2);
            let r: Vec<f64> = samples(&sp, 0)
                .iter()
                .zip(&drift_term(&c, grad_at(&gv, i)))
                .zip(&d2)
                .map(|((s, d), c2)| s + d + k * c2)
                .collect();
            for pp in 0..=n {
                let expect = moment_of(&r, pp, n - pp);
                worst = worst.max((libv[pp][i] - expect).abs());
                worst = worst.max((via_modes.components[pp].values()[i] - expect).abs());
            }
        }
        assert!(worst < 1e-11, "n={n}: {worst:e}");
    }
}

#[test]
fn moment_equations_need_enough_modes() {
    let st = small_state(23, 4);
    let gradu = ops::velocity_gradient(&st.u);
    assert!(moment_rhs(&st.f, &st.u, &gradu, 6, 1.0, 0.1).is_err());
}

#[test]
fn stresses_match_angular_quadrature() {
    let st = small_state(24, 8);
    let eta = 1.7;
    let gradu = ops::velocity_gradient(&st.u);
    let gv = gradu.values();
    let se = elastic_stress(&st.f).unwrap().values();
    let sv = viscous_stress(&st.f, &gradu, eta).unwrap().values();
    let base = all_mode_values(&st.f);
    let (mut we, mut wv) = (0.0f64, 0.0f64);
    for i in 0..st.grid().len() {
        let c = point(&base, i);
        let f = samples(&c, 0);
        let g = grad_at(&gv, i);
        let gmm: Vec<f64> = (0..N_THETA).map(|m| strain(g, theta(m, N_THETA)) * f[m]).collect();
        // Components in the order 11, 12, 21, 22.
        let pq = [(2, 0), (1, 1), (1, 1), (0, 2)];
        let iso = [1.0, 0.0, 0.0, 1.0];
        for (idx, &(p, q)) in pq.iter().enumerate() {
            let e = 2.0 * (moment_of(&f, p, q) - 0.5 * iso[idx] * moment_of(&f, 0, 0));
            we = we.max((se[idx][i] - e).abs());
            let v = eta * moment_of(&gmm, p, q);
            wv = wv.max((sv[idx][i] - v).abs());
        }
    }
    assert!(we < 1e-12, "elastic {we:e}");
    assert!(wv < 1e-10, "viscous {wv:e}");
}

#[test]
fn closed_form_moments() {
    let g = Grid::new(8, 8).unwrap();
    let iso = AngularDistribution::isotropic(&ScalarField::constant(&g, 1.0), 4);
    let m2 = moment_tensor(&iso, 2).unwrap();
    let m4 = moment_tensor(&iso, 4).unwrap();
    let at = |m: &MomentTensor, p: usize| m.components[p].mean();
    assert!((at(&m2, 2) - 0.5).abs() < 1e-15 && at(&m2, 1).abs() < 1e-15 && (at(&m2, 0) - 0.5).abs() < 1e-15);
    for (p, v) in [(4, 0.375), (3, 0.0), (2, 0.125), (1, 0.0), (0, 0.375)] {
        assert!((at(&m4, p) - v).abs() < 1e-15, "M4 component {p}");
    }

    // All modes equal is the truncation of a point mass at θ = 0: every
    // trigonometric moment equals M₀ and M₂ = M₀ e₁⊗e₁.
    let mass = 2.5;
    let modes = (0..=6)
        .map(|_| ComplexField::from_values(&g, &vec![Complex64::new(mass / (2.0 * PI), 0.0); g.len()]))
        .collect();
    let dirac = AngularDistribution::new(modes).unwrap();
    let m2 = moment_tensor(&dirac, 2).unwrap();
    assert!((at(&m2, 2) - mass).abs() < 1e-14);
    assert!(at(&m2, 1).abs() < 1e-14 && at(&m2, 0).abs() < 1e-14);
    let s = trig_moments(&dirac, 6).unwrap();
    for r in 0..=6 {
        assert!((s.s[r].values()[0] - Complex64::new(mass, 0.0)).norm() < 1e-14);
    }
}

#[test]
fn positive_distributions_respect_the_moment_bound() {
    for seed in 0..4 {
        let st = small_state(30 + seed, 8);
        let m0 = mass_density(&st.f);
        assert!(st.f.reconstruct(64).iter().flatten().all(|&v| v > 0.0));
        for n in [2, 4, 6, 8] {
            let m = moment_tensor(&st.f, n).unwrap();
            assert!(moment_bound_excess(&m, &m0) <= 1e-12, "seed {seed}, n={n}");
        }
        let tr = trig_moments(&st.f, 8).unwrap();
        assert!(toeplitz_realizability(&tr, 8, PSD_TOL).unwrap().ok);
    }
}

/// Spatially uniform initial data on a small grid with an imposed flow.
fn uniform(order: usize, f: impl Fn(f64) -> f64) -> DoiState {
    let g = Grid::new(8, 8).unwrap();
    let dist = AngularDistribution::from_fn(&g, order, 256, |_, _, th| f(th));
    DoiState::new(VectorField::zeros(&g), dist, 0.0).unwrap()
}

#[test]
fn second_mode_rotates_and_decays_under_rigid_rotation() {
    let (k, b, dt) = (1.0, 1.5, 1e-4);
    let mut st = uniform(4, |th| (1.0 + (2.0 * th).cos()) / (2.0 * PI));
    let c0 = st.f.mode(2).values()[0];
    let p = DoiParams { k, dt, flow: FlowMode::Imposed([0.0, -b, b, 0.0]), ..DoiParams::default() };
    let mut solver = DoiSolver::new(st.grid(), 4, p).unwrap();
    let mut worst = 0.0f64;
    while st.t < 0.2 - 1e-12 {
        solver.step(&mut st).unwrap();
        let exact = c0 * Complex64::new(-4.0 * k * st.t, -2.0 * b * st.t).exp();
        for v in st.f.mode(2).values() {
            worst = worst.max((v - exact).norm());
        }
    }
    assert!(worst < 1e-8, "{worst:e}");
}

/// Method-of-lines reference for the spatially uniform equation
/// ∂_t f = k f'' − (W f)' on an equispaced θ grid, advanced with RK4.
fn angular_ode(f0: impl Fn(f64) -> f64, g: [f64; 4], k: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let n = 64;
    let order = n / 2 - 1;
    let ths: Vec<f64> = (0..n).map(|m| theta(m, n)).collect();
    let w: Vec<f64> = ths.iter().map(|&th| drift(g, th).0).collect();
    let rhs = |f: &[f64]| -> Vec<f64> {
        let c = project(f, order);
        let wf: Vec<f64> = f.iter().zip(&w).map(|(a, b)| a * b).collect();
        let cw = project(&wf, order);
        ths.iter().map(|&th| k * eval(&c, th, 2) - eval(&cw, th, 1)).collect()
    };
    let mut f: Vec<f64> = ths.iter().map(|&th| f0(th)).collect();
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        let k1 = rhs(&f);
        let stage = |kk: &[f64], h: f64| -> Vec<f64> { f.iter().zip(kk).map(|(a, b)| a + h * b).collect() };
        let k2 = rhs(&stage(&k1, 0.5 * dt));
        let k3 = rhs(&stage(&k2, 0.5 * dt));
        let k4 = rhs(&stage(&k3, dt));
        for m in 0..n {
            f[m] += dt / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]);
        }
    }
    f
}

#[test]
fn uniform_suspension_in_shear_matches_angular_ode() {
    let (k, kappa, th0) = (1.0, 1.0, 0.3);
    let g = [0.0, 1.0, 0.0, 0.0];
    let z: f64 = (0..4096).map(|m| (kappa * (2.0 * theta(m, 4096)).cos()).exp()).sum::<f64>() * 2.0 * PI / 4096.0;
    let f0 = |th: f64| (kappa * (2.0 * (th - th0)).cos()).exp() / z;
    let order = 16;
    let mut st = uniform(order, f0);
    let p = DoiParams { k, dt: 2.5e-4, flow: FlowMode::Imposed(g), ..DoiParams::default() };
    let mut solver = DoiSolver::new(st.grid(), order, p).unwrap();
    while st.t < 0.5 - 1e-12 {
        solver.step(&mut st).unwrap();
    }
    let reference = project(&angular_ode(f0, g, k, 0.5, 1e-3), order);
    let mut worst = 0.0f64;
    for (j, r) in reference.iter().enumerate() {
        for v in st.f.mode(j).values() {
            worst = worst.max((v - r).norm());
        }
    }
    assert!(worst < 1e-7, "{worst:e}");
}

#[test]
fn elastic_stress_relaxes_at_rate_four_k() {
    let k = 0.8;
    let mut st = uniform(6, |th| (1.0 + 0.3 * (2.0 * th - 0.4).cos() + 0.1 * (4.0 * th).cos()) / (2.0 * PI));
    let s0 = elastic_stress(&st.f).unwrap().t11().mean();
    let p = DoiParams { k, dt: 2.5e-4, ..DoiParams::default() };
    let mut solver = DoiSolver::new(st.grid(), 6, p).unwrap();
    while st.t < 0.5 - 1e-12 {
        solver.step(&mut st).unwrap();
    }
    // Uniform stress has no divergence, so the flow stays at rest.
    assert!(st.u.l2_norm_sq() < 1e-24);
    let s = elastic_stress(&st.f).unwrap().t11().mean();
    let rel = (s - s0 * (-4.0 * k * st.t).exp()).abs() / s.abs();
    assert!(rel < 1e-6, "{rel:e}");
}

#[test]
fn coupled_run_conserves_mass() {
    let g = Grid::new(16, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let u = random_velocity(&g, &mut rng, 1.0, 4);
    let f = random_distribution(&g, &mut rng, 8, 0.3, 4);
    let mut st = DoiState::new(u, f, 0.0).unwrap();
    let mass = |s: &DoiState| mass_density(&s.f).mean();
    let m_start = mass(&st);
    let mut solver = DoiSolver::new(&g, 8, DoiParams::default()).unwrap();
    for _ in 0..20 {
        solver.step(&mut st).unwrap();
    }
    assert!((mass(&st) - m_start).abs() < 1e-12 * m_start);
}

#[test]
fn velocity_work_balances_stress_power() {
    // ⟨u, RHS_u⟩ = −‖∇u‖² − ∫∇u:σ_E − η∫∫((∇u):m⊗m)² f, by quadrature.
    let st = small_state(25, 8);
    let eta = 2.0;
    let p = DoiParams { eta, ..DoiParams::default() };
    let lhs = st.u.inner(&doi_velocity_rhs(&st, &p).unwrap());
    let gv = gradient_values(&st.u);
    let base = all_mode_values(&st.f);
    let da = st.grid().cell_area();
    let mut rhs = 0.0;
    for i in 0..st.grid().len() {
        let g = grad_at(&gv, i);
        let f = samples(&point(&base, i), 0);
        let grad_sq: f64 = g.iter().map(|x| x * x).sum();
        let elastic: Vec<f64> = (0..N_THETA)
            .map(|m| {
                let th = theta(m, N_THETA);
                2.0 * (strain(g, th) - 0.5 * (g[0] + g[3])) * f[m]
            })
            .collect();
        let visc: Vec<f64> = (0..N_THETA).map(|m| strain(g, theta(m, N_THETA)).powi(2) * f[m]).collect();
        rhs -= da * (grad_sq + moment_of(&elastic, 0, 0) + eta * moment_of(&visc, 0, 0));
    }
    assert!((lhs - rhs).abs() < 1e-10 * rhs.abs(), "{lhs} vs {rhs}");
    let diss = viscous_dissipation(&st, eta).unwrap();
    assert!(diss > 0.0);
}

#[test]
fn fisher_information_of_a_cosine_profile() {
    let st = uniform(4, |th| (1.0 + 0.5 * (2.0 * th).cos()) / (2.0 * PI));
    let fi = fisher_information(&st).unwrap();
    // (1/2π)∫ sin²φ/(1 + ½cos φ) dφ over one period, per unit area.
    let exact = 4.0 * (1.0 - 0.75f64.sqrt()) * st.grid().area();
    assert!((fi.theta - exact).abs() < 1e-10 * exact, "{} vs {exact}", fi.theta);
    assert!(fi.space.abs() < 1e-20);
    assert_eq!(fi.clipped, 0);
}
