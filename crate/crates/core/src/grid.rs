//! Uniform grid on the periodic square [0, 2π)² and the 2D transforms on it.
//!
//! Real-space samples are stored row-major with the first index running
//! along x₁: `values[i1 * ny + i2]` is the sample at
//! `(2π i1 / nx, 2π i2 / ny)`. Spectral coefficients use the same layout,
//! indexed by the FFT bin of each axis. The forward transform is normalized
//! so that a constant field `c` has coefficient `c` at mode (0, 0).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// A rational number in (0, 1], used for the dealiasing cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fraction {
    num: u32,
    den: u32,
}

impl Fraction {
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };
    pub const TWO_THIRDS: Fraction = Fraction { num: 2, den: 3 };
    pub const ONE_HALF: Fraction = Fraction { num: 1, den: 2 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(Error::InvalidParameter(format!(
                "fraction {num}/{den} must lie in (0, 1]"
            )));
        }
        Ok(Fraction { num, den })
    }

    pub fn num(self) -> u32 {
        self.num
    }

    pub fn den(self) -> u32 {
        self.den
    }

    pub fn value(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }

    /// Whether wavenumber `k` survives truncation on an axis of `n` points,
    /// i.e. `|k| <= self * n / 2`.
    pub fn keeps(self, k: i64, n: usize) -> bool {
        2 * k.unsigned_abs() * u64::from(self.den) <= u64::from(self.num) * n as u64
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("cannot parse fraction {s:?}"));
        match s.trim().split_once('/') {
            Some((n, d)) => Fraction::new(
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let n: u32 = s.trim().parse().map_err(|_| bad())?;
                Fraction::new(n, 1)
            }
        }
    }
}

struct Plans {
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

struct GridInner {
    nx: usize,
    ny: usize,
    dealias: Fraction,
    kx: Vec<i64>,
    ky: Vec<i64>,
    plans: Plans,
}

/// Collocation grid with cached FFT plans. Cloning is cheap.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.nx() == other.nx()
                && self.ny() == other.ny()
                && self.dealias() == other.dealias())
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx())
            .field("ny", &self.ny())
            .field("dealias", &self.dealias())
            .finish()
    }
}

fn wavenumbers(n: usize) -> Vec<i64> {
    (0..n)
        .map(|i| if i <= n / 2 { i as i64 } else { i as i64 - n as i64 })
        .collect()
}

impl Grid {
    /// Square-domain grid with the default 2/3 dealiasing rule.
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        Self::with_dealias(nx, ny, Fraction::TWO_THIRDS)
    }

    pub fn with_dealias(nx: usize, ny: usize, dealias: Fraction) -> Result<Self> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {n}: must be even and at least 8"
                )));
            }
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        };
        Ok(Grid {
            inner: Arc::new(GridInner {
                nx,
                ny,
                dealias,
                kx: wavenumbers(nx),
                ky: wavenumbers(ny),
                plans,
            }),
        })
    }

    pub fn nx(&self) -> usize {
        self.inner.nx
    }

    pub fn ny(&self) -> usize {
        self.inner.ny
    }

    pub fn len(&self) -> usize {
        self.inner.nx * self.inner.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dealias(&self) -> Fraction {
        self.inner.dealias
    }

    /// Domain side length (fixed).
    pub fn length(&self) -> f64 {
        2.0 * PI
    }

    /// Area of the torus, (2π)².
    pub fn area(&self) -> f64 {
        4.0 * PI * PI
    }

    /// Quadrature weight of one grid cell.
    pub fn cell_area(&self) -> f64 {
        self.area() / self.len() as f64
    }

    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.inner.ny + i2
    }

    /// Wavenumber pair of a flat spectral index.
    #[inline]
    pub fn mode(&self, idx: usize) -> (i64, i64) {
        (self.inner.kx[idx / self.inner.ny], self.inner.ky[idx % self.inner.ny])
    }

    /// Flat spectral index of a wavenumber pair, if it is representable.
    pub fn mode_index(&self, k1: i64, k2: i64) -> Option<usize> {
        let (nx, ny) = (self.nx() as i64, self.ny() as i64);
        let in_range = |k: i64, n: i64| k > -n / 2 && k <= n / 2;
        if !in_range(k1, nx) || !in_range(k2, ny) {
            return None;
        }
        Some(self.index(k1.rem_euclid(nx) as usize, k2.rem_euclid(ny) as usize))
    }

    #[inline]
    pub fn k_squared(&self, idx: usize) -> f64 {
        let (k1, k2) = self.mode(idx);
        (k1 * k1 + k2 * k2) as f64
    }

    /// Multiplier of ∂₁ / ∂₂ at a mode; zero on the Nyquist bin so that
    /// derivatives of real fields stay real.
    #[inline]
    pub fn derivative_wavenumber(&self, idx: usize, axis: usize) -> f64 {
        let (k1, k2) = self.mode(idx);
        match axis {
            0 if 2 * k1.unsigned_abs() as usize != self.nx() => k1 as f64,
            1 if 2 * k2.unsigned_abs() as usize != self.ny() => k2 as f64,
            _ => 0.0,
        }
    }

    /// Whether a mode survives the grid's dealiasing rule.
    #[inline]
    pub fn is_dealiased_mode(&self, idx: usize) -> bool {
        self.keeps_mode(idx, self.dealias())
    }

    #[inline]
    pub fn keeps_mode(&self, idx: usize, fraction: Fraction) -> bool {
        let (k1, k2) = self.mode(idx);
        fraction.keeps(k1, self.nx()) && fraction.keeps(k2, self.ny())
    }

    /// Largest |k|² among modes kept by the dealiasing rule.
    pub fn max_dealiased_k_squared(&self) -> f64 {
        (0..self.len())
            .filter(|&i| self.is_dealiased_mode(i))
            .map(|i| self.k_squared(i))
            .fold(0.0, f64::max)
    }

    /// Grid point coordinates.
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let (i1, i2) = (idx / self.ny(), idx % self.ny());
        (
            2.0 * PI * i1 as f64 / self.nx() as f64,
            2.0 * PI * i2 as f64 / self.ny() as f64,
        )
    }

    /// A grid with `factor` times the points per axis and the same rule.
    pub fn refined(&self, factor: usize) -> Grid {
        Grid::with_dealias(self.nx() * factor, self.ny() * factor, self.dealias())
            .expect("refining a valid grid yields a valid grid")
    }

    /// In-place forward transform, normalized by 1/(nx·ny).
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// In-place unnormalized inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        let (nx, ny) = (self.nx(), self.ny());
        assert_eq!(data.len(), nx * ny, "buffer does not match grid");
        let p = &self.inner.plans;
        let (fx, fy) = if forward {
            (&p.fwd_x, &p.fwd_y)
        } else {
            (&p.inv_x, &p.inv_y)
        };
        let mut scratch =
            vec![Complex64::default(); fx.get_inplace_scratch_len().max(fy.get_inplace_scratch_len())];
        // Rows are contiguous: a single batched call covers all of them.
        fy.process_with_scratch(data, &mut scratch);
        let mut column = vec![Complex64::default(); nx];
        for i2 in 0..ny {
            for (i1, c) in column.iter_mut().enumerate() {
                *c = data[i1 * ny + i2];
            }
            fx.process_with_scratch(&mut column, &mut scratch);
            for (i1, c) in column.iter().enumerate() {
                data[i1 * ny + i2] = *c;
            }
        }
    }

    /// Distinct Laplacian eigenvalues |k|² representable on this grid,
    /// ascending and starting at 0.
    pub fn laplacian_shells(&self) -> Vec<i64> {
        let mut shells: Vec<i64> = (0..self.len())
            .map(|i| {
                let (a, b) = self.mode(i);
                a * a + b * b
            })
            .collect();
        shells.sort_unstable();
        shells.dedup();
        shells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd() {
        assert!(Grid::new(6, 8).is_err());
        assert!(Grid::new(9, 16).is_err());
        assert!(Grid::new(8, 8).is_ok());
    }

    #[test]
    fn wavenumber_range() {
        let g = Grid::new(8, 8).unwrap();
        let ks: Vec<i64> = (0..8).map(|i| g.mode(g.index(i, 0)).0).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.mode_index(-4, 0), None);
        assert_eq!(g.mode_index(4, -3), Some(g.index(4, 5)));
    }

    #[test]
    fn two_thirds_rule_cutoff() {
        let g = Grid::new(64, 64).unwrap();
        let keep = |k| Fraction::TWO_THIRDS.keeps(k, 64);
        assert!(keep(21) && keep(-21));
        assert!(!keep(22) && !keep(32));
        assert!(!g.is_dealiased_mode(g.mode_index(32, 0).unwrap()));
    }

    #[test]
    fn fraction_parse() {
        assert_eq!("2/3".parse::<Fraction>().unwrap(), Fraction::TWO_THIRDS);
        assert_eq!("1".parse::<Fraction>().unwrap(), Fraction::ONE);
        assert!("3/2".parse::<Fraction>().is_err());
        assert!("x".parse::<Fraction>().is_err());
    }

    #[test]
    fn shells_start_with_sums_of_two_squares() {
        let g = Grid::new(16, 16).unwrap();
        assert_eq!(&g.laplacian_shells()[..8], &[0, 1, 2, 4, 5, 8, 9, 10]);
    }
}
