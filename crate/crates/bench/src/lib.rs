//! Seeded fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rodsim_core::da::{self, DAState};
use rodsim_core::doi::{self, DoiState};
use rodsim_core::{random, Grid};

pub fn grid(n: usize) -> Grid {
    Grid::new(n, n).expect("benchmark grids are even and at least 8")
}

/// Taylor-Green flow over a perturbed isotropic conformation.
pub fn da_state(n: usize) -> DAState {
    let g = grid(n);
    DAState::new(da::presets::taylor_green(&g, 1.0), da::presets::perturbed_isotropic(&g, 0.3), 0.0).expect("same grid")
}

/// Taylor-Green flow with tilted von Mises rods.
pub fn doi_state(n: usize, order: usize) -> DoiState {
    let g = grid(n);
    let f = doi::presets::von_mises(&g, order, 1.0, 1.0, |x, y| 0.5 * (x + y).sin());
    DoiState::new(da::presets::taylor_green(&g, 1.0), f, 0.0).expect("same grid")
}

/// Random resolved kinetic state.
pub fn random_doi_state(n: usize, order: usize, seed: u64) -> DoiState {
    let g = grid(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random::random_velocity(&g, &mut rng, 1.0, 8);
    let f = random::random_distribution(&g, &mut rng, order, 0.3, 8);
    DoiState::new(u, f, 0.0).expect("same grid")
}
