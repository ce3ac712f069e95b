//! Periodic fields on the torus grid.
//!
//! Every field keeps its spectral coefficients as the canonical storage;
//! the real-space view is produced on demand by [`ScalarField::values`] /
//! [`ComplexField::values`] and consumed by `from_values`. Real-valued
//! fields carry Hermitian-symmetric spectra; complex-valued fields (the
//! angular Fourier modes of the kinetic model) carry general spectra.

use std::marker::PhantomData;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Fraction, Grid};

/// Marker for real-valued fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RealValued;

/// Marker for complex-valued fields.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexValued;

#[derive(Clone, Debug)]
pub struct Field<K> {
    grid: Grid,
    coeffs: Vec<Complex64>,
    kind: PhantomData<K>,
}

pub type ScalarField = Field<RealValued>;
pub type ComplexField = Field<ComplexValued>;

const I: Complex64 = Complex64::new(0.0, 1.0);

impl<K> Field<K> {
    pub fn zeros(grid: &Grid) -> Self {
        Field {
            grid: grid.clone(),
            coeffs: vec![Complex64::default(); grid.len()],
            kind: PhantomData,
        }
    }

    /// Wraps raw spectral coefficients. For [`ScalarField`] the caller is
    /// responsible for Hermitian symmetry.
    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            grid: grid.clone(),
            coeffs,
            kind: PhantomData,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of mode (k1, k2), zero if not representable.
    pub fn coefficient(&self, k1: i64, k2: i64) -> Complex64 {
        self.grid
            .mode_index(k1, k2)
            .map_or(Complex64::default(), |i| self.coeffs[i])
    }

    pub fn mean_coefficient(&self) -> Complex64 {
        self.coeffs[0]
    }

    fn map_modes(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Field {
            grid: self.grid.clone(),
            coeffs: self.coeffs.iter().enumerate().map(|(i, &c)| f(i, c)).collect(),
            kind: PhantomData,
        }
    }

    /// Spectral ∂ along `axis` (0 → x₁, 1 → x₂).
    pub fn derivative(&self, axis: usize) -> Self {
        let g = &self.grid;
        self.map_modes(|i, c| c * I * g.derivative_wavenumber(i, axis))
    }

    pub fn laplacian(&self) -> Self {
        let g = &self.grid;
        self.map_modes(|i, c| -c * g.k_squared(i))
    }

    /// Δ⁻¹ on mean-free fields; the mean mode is set to zero.
    pub fn inverse_laplacian(&self) -> Self {
        let g = &self.grid;
        self.map_modes(|i, c| if i == 0 { Complex64::default() } else { -c / g.k_squared(i) })
    }

    /// Zeroes modes outside the grid's dealiasing band.
    pub fn dealias(&self) -> Self {
        self.truncate(self.grid.dealias())
    }

    /// Zeroes modes with |kᵢ| > fraction · nᵢ / 2.
    pub fn truncate(&self, fraction: Fraction) -> Self {
        let g = &self.grid;
        self.map_modes(|i, c| if g.keeps_mode(i, fraction) { c } else { Complex64::default() })
    }

    pub fn dealias_in_place(&mut self) {
        let g = self.grid.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            if !g.is_dealiased_mode(i) {
                *c = Complex64::default();
            }
        }
    }

    /// Keeps modes with |k|² ≤ `cutoff`.
    pub fn shell_truncate(&self, cutoff: f64) -> Self {
        let g = &self.grid;
        self.map_modes(|i, c| if g.k_squared(i) <= cutoff { c } else { Complex64::default() })
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_modes(|_, c| c * s)
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += *b * alpha;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// ∫|f|² over the torus, by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.area() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Σ over modes of w(|k|²)·|f̂|², times the torus area.
    pub fn weighted_norm_sq(&self, w: impl Fn(f64) -> f64) -> f64 {
        self.grid.area()
            * self
                .coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| w(self.grid.k_squared(i)) * c.norm_sqr())
                .sum::<f64>()
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest coefficient modulus outside the dealiasing band.
    pub fn max_coeff_outside_band(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.grid.is_dealiased_mode(*i))
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max)
    }

    /// Spectral interpolation onto another grid: zero-padding when refining,
    /// truncation when coarsening. Nyquist bins are split or folded so that
    /// real fields stay real.
    pub fn resample(&self, target: &Grid) -> Self {
        let mut out = vec![Complex64::default(); target.len()];
        let (sx, sy) = (self.grid.nx() as i64, self.grid.ny() as i64);
        for (idx, &c) in self.coeffs.iter().enumerate() {
            if c == Complex64::default() {
                continue;
            }
            let (k1, k2) = self.grid.mode(idx);
            let images = |k: i64, n: i64| -> Vec<(i64, f64)> {
                if 2 * k == n {
                    vec![(k, 0.5), (-k, 0.5)]
                } else {
                    vec![(k, 1.0)]
                }
            };
            for (a, wa) in images(k1, sx) {
                for (b, wb) in images(k2, sy) {
                    let (ta, tb) = (target.nx() as i64, target.ny() as i64);
                    // Fold ±n/2 of the target onto its Nyquist bin.
                    let fold = |k: i64, n: i64| if 2 * k == -n { -k } else { k };
                    if let Some(t) = target.mode_index(fold(a, ta), fold(b, tb)) {
                        out[t] += c * (wa * wb);
                    }
                }
            }
        }
        Field {
            grid: target.clone(),
            coeffs: out,
            kind: PhantomData,
        }
    }

    pub(crate) fn neg_index(grid: &Grid, idx: usize) -> usize {
        let (nx, ny) = (grid.nx(), grid.ny());
        let (i1, i2) = (idx / ny, idx % ny);
        grid.index((nx - i1) % nx, (ny - i2) % ny)
    }
}

impl ScalarField {
    /// Forward transform of real samples.
    pub fn from_values(grid: &Grid, values: &[f64]) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count does not match grid");
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.forward(&mut buf);
        Field {
            grid: grid.clone(),
            coeffs: buf,
            kind: PhantomData,
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len())
            .map(|i| {
                let (x1, x2) = grid.coords(i);
                f(x1, x2)
            })
            .collect();
        Self::from_values(grid, &values)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(c, 0.0);
        f
    }

    /// Real-space samples (inverse transform).
    pub fn values(&self) -> Vec<f64> {
        let mut buf = self.coeffs.clone();
        self.grid.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// ∫ f g over the torus, by Parseval.
    pub fn inner(&self, other: &ScalarField) -> f64 {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        self.grid.area()
            * self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| (a * b.conj()).re)
                .sum::<f64>()
    }

    /// Pointwise product, dealiased.
    pub fn product(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.values(), other.values());
        let p: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        ScalarField::from_values(&self.grid, &p).dealias()
    }

    /// Restores exact Hermitian symmetry, discarding round-off imaginary parts.
    pub fn symmetrize(&mut self) {
        let g = self.grid.clone();
        let old = self.coeffs.clone();
        for (i, c) in self.coeffs.iter_mut().enumerate() {
            let j = Self::neg_index(&g, i);
            *c = (old[i] + old[j].conj()) * 0.5;
        }
    }

    pub fn to_complex(&self) -> ComplexField {
        Field {
            grid: self.grid.clone(),
            coeffs: self.coeffs.clone(),
            kind: PhantomData,
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values().into_iter().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values().into_iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl ComplexField {
    pub fn from_values(grid: &Grid, values: &[Complex64]) -> Self {
        assert_eq!(values.len(), grid.len(), "sample count does not match grid");
        let mut buf = values.to_vec();
        grid.forward(&mut buf);
        Field {
            grid: grid.clone(),
            coeffs: buf,
            kind: PhantomData,
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values: Vec<Complex64> = (0..grid.len())
            .map(|i| {
                let (x1, x2) = grid.coords(i);
                f(x1, x2)
            })
            .collect();
        Self::from_values(grid, &values)
    }

    pub fn values(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        self.grid.inverse(&mut buf);
        buf
    }

    /// Builds re + i·im from two real fields.
    pub fn from_parts(re: &ScalarField, im: &ScalarField) -> Self {
        assert_eq!(re.grid, im.grid, "fields live on different grids");
        Field {
            grid: re.grid.clone(),
            coeffs: re.coeffs.iter().zip(&im.coeffs).map(|(a, b)| a + I * b).collect(),
            kind: PhantomData,
        }
    }

    /// Real part as a real field: (Z(k) + conj Z(−k)) / 2.
    pub fn re_part(&self) -> ScalarField {
        let g = &self.grid;
        Field {
            grid: g.clone(),
            coeffs: (0..g.len())
                .map(|i| (self.coeffs[i] + self.coeffs[Self::neg_index(g, i)].conj()) * 0.5)
                .collect(),
            kind: PhantomData,
        }
    }

    /// Imaginary part as a real field: (Z(k) − conj Z(−k)) / 2i.
    pub fn im_part(&self) -> ScalarField {
        let g = &self.grid;
        Field {
            grid: g.clone(),
            coeffs: (0..g.len())
                .map(|i| (self.coeffs[i] - self.coeffs[Self::neg_index(g, i)].conj()) * (-0.5 * I))
                .collect(),
            kind: PhantomData,
        }
    }

    /// Pointwise complex conjugate.
    pub fn conj(&self) -> ComplexField {
        let g = &self.grid;
        Field {
            grid: g.clone(),
            coeffs: (0..g.len()).map(|i| self.coeffs[Self::neg_index(g, i)].conj()).collect(),
            kind: PhantomData,
        }
    }

    pub fn mul_complex(&self, z: Complex64) -> ComplexField {
        self.map_modes(|_, c| c * z)
    }
}

impl<K> AddAssign<&Field<K>> for Field<K> {
    fn add_assign(&mut self, rhs: &Field<K>) {
        self.axpy(1.0, rhs);
    }
}

impl<K> SubAssign<&Field<K>> for Field<K> {
    fn sub_assign(&mut self, rhs: &Field<K>) {
        self.axpy(-1.0, rhs);
    }
}

impl<K: Clone> Add<&Field<K>> for &Field<K> {
    type Output = Field<K>;
    fn add(self, rhs: &Field<K>) -> Field<K> {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl<K: Clone> Sub<&Field<K>> for &Field<K> {
    type Output = Field<K>;
    fn sub(self, rhs: &Field<K>) -> Field<K> {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl<K: Clone> Neg for &Field<K> {
    type Output = Field<K>;
    fn neg(self) -> Field<K> {
        self.scaled(-1.0)
    }
}

impl<K: Clone> Mul<f64> for &Field<K> {
    type Output = Field<K>;
    fn mul(self, s: f64) -> Field<K> {
        self.scaled(s)
    }
}

/// Planar vector field (u₁, u₂).
#[derive(Clone, Debug)]
pub struct VectorField {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Self {
        assert_eq!(u1.grid(), u2.grid(), "components live on different grids");
        VectorField { u1, u2 }
    }

    pub fn zeros(grid: &Grid) -> Self {
        VectorField {
            u1: ScalarField::zeros(grid),
            u2: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        VectorField {
            u1: ScalarField::from_fn(grid, |x, y| f(x, y).0),
            u2: ScalarField::from_fn(grid, |x, y| f(x, y).1),
        }
    }

    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    pub fn component(&self, i: usize) -> &ScalarField {
        match i {
            0 => &self.u1,
            1 => &self.u2,
            _ => panic!("vector component {i} out of range"),
        }
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        VectorField {
            u1: f(&self.u1),
            u2: f(&self.u2),
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.u1.l2_norm_sq() + self.u2.l2_norm_sq()
    }

    pub fn inner(&self, other: &VectorField) -> f64 {
        self.u1.inner(&other.u1) + self.u2.inner(&other.u2)
    }

    pub fn axpy(&mut self, alpha: f64, other: &VectorField) {
        self.u1.axpy(alpha, &other.u1);
        self.u2.axpy(alpha, &other.u2);
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }

    /// Sets the mean (k = 0) mode of both components to zero.
    pub fn remove_mean(&mut self) {
        self.u1.coeffs_mut()[0] = Complex64::default();
        self.u2.coeffs_mut()[0] = Complex64::default();
    }
}

/// 2×2 tensor field. A symmetric tensor stores its off-diagonal once, so
/// `t12` and `t21` are the same storage.
#[derive(Clone, Debug)]
pub struct TensorField2x2 {
    t11: ScalarField,
    t12: ScalarField,
    t21: Option<ScalarField>,
    t22: ScalarField,
}

impl TensorField2x2 {
    pub fn symmetric(t11: ScalarField, t12: ScalarField, t22: ScalarField) -> Self {
        TensorField2x2 {
            t11,
            t12,
            t21: None,
            t22,
        }
    }

    pub fn general(t11: ScalarField, t12: ScalarField, t21: ScalarField, t22: ScalarField) -> Self {
        TensorField2x2 {
            t11,
            t12,
            t21: Some(t21),
            t22,
        }
    }

    pub fn zeros_symmetric(grid: &Grid) -> Self {
        Self::symmetric(
            ScalarField::zeros(grid),
            ScalarField::zeros(grid),
            ScalarField::zeros(grid),
        )
    }

    pub fn is_symmetric(&self) -> bool {
        self.t21.is_none()
    }

    pub fn grid(&self) -> &Grid {
        self.t11.grid()
    }

    pub fn t11(&self) -> &ScalarField {
        &self.t11
    }

    pub fn t12(&self) -> &ScalarField {
        &self.t12
    }

    pub fn t21(&self) -> &ScalarField {
        self.t21.as_ref().unwrap_or(&self.t12)
    }

    pub fn t22(&self) -> &ScalarField {
        &self.t22
    }

    pub fn component(&self, i: usize, j: usize) -> &ScalarField {
        match (i, j) {
            (0, 0) => &self.t11,
            (0, 1) => &self.t12,
            (1, 0) => self.t21(),
            (1, 1) => &self.t22,
            _ => panic!("tensor component ({i}, {j}) out of range"),
        }
    }

    pub fn map(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        TensorField2x2 {
            t11: f(&self.t11),
            t12: f(&self.t12),
            t21: self.t21.as_ref().map(&f),
            t22: f(&self.t22),
        }
    }

    pub fn trace(&self) -> ScalarField {
        &self.t11 + &self.t22
    }

    /// Symmetric part ½(T + Tᵀ).
    pub fn symmetric_part(&self) -> Self {
        match &self.t21 {
            None => self.clone(),
            Some(t21) => Self::symmetric(
                self.t11.clone(),
                (&self.t12 + t21).scaled(0.5),
                self.t22.clone(),
            ),
        }
    }

    pub fn add(&self, other: &TensorField2x2) -> Self {
        let sum = |a: &ScalarField, b: &ScalarField| a + b;
        if self.is_symmetric() && other.is_symmetric() {
            Self::symmetric(
                sum(&self.t11, &other.t11),
                sum(&self.t12, &other.t12),
                sum(&self.t22, &other.t22),
            )
        } else {
            Self::general(
                sum(&self.t11, &other.t11),
                sum(&self.t12, &other.t12),
                sum(self.t21(), other.t21()),
                sum(&self.t22, &other.t22),
            )
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|f| f.scaled(s))
    }

    /// Σᵢⱼ ‖Tᵢⱼ‖², counting the off-diagonal twice when symmetric.
    pub fn l2_norm_sq(&self) -> f64 {
        self.t11.l2_norm_sq()
            + self.t12.l2_norm_sq()
            + self.t21().l2_norm_sq()
            + self.t22.l2_norm_sq()
    }

    pub fn is_finite(&self) -> bool {
        self.t11.is_finite()
            && self.t12.is_finite()
            && self.t21.as_ref().is_none_or(|f| f.is_finite())
            && self.t22.is_finite()
    }

    /// Real-space samples of the four components, row-major (11, 12, 21, 22).
    pub fn values(&self) -> [Vec<f64>; 4] {
        let t12 = self.t12.values();
        let t21 = match &self.t21 {
            None => t12.clone(),
            Some(f) => f.values(),
        };
        [self.t11.values(), t12, t21, self.t22.values()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(16, 16).unwrap()
    }

    #[test]
    fn constant_has_single_mean_mode() {
        let g = grid();
        let f = ScalarField::from_fn(&g, |_, _| 2.5);
        assert!((f.coefficient(0, 0).re - 2.5).abs() < 1e-14);
        let others = f.coeffs()[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(others < 1e-14);
    }

    #[test]
    fn cosine_splits_into_plus_minus_one() {
        let g = grid();
        let f = ScalarField::from_fn(&g, |x, _| x.cos());
        assert!((f.coefficient(1, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!((f.coefficient(-1, 0) - Complex64::new(0.5, 0.0)).norm() < 1e-14);
        assert!(f.coefficient(0, 1).norm() < 1e-14);
    }

    #[test]
    fn re_im_parts_recover_components() {
        let g = grid();
        let z = ComplexField::from_fn(&g, |x, y| Complex64::new(x.sin() * y.cos(), (2.0 * y).cos()));
        let re = z.re_part().values();
        let im = z.im_part().values();
        for i in 0..g.len() {
            let (x, y) = g.coords(i);
            assert!((re[i] - x.sin() * y.cos()).abs() < 1e-13);
            assert!((im[i] - (2.0 * y).cos()).abs() < 1e-13);
        }
        let zc = z.conj().values();
        let zv = z.values();
        for i in 0..g.len() {
            assert!((zc[i] - zv[i].conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn resample_roundtrip_is_exact_for_band_limited() {
        let g = grid();
        let f = ScalarField::from_fn(&g, |x, y| (3.0 * x).sin() * (2.0 * y).cos() + 0.3);
        let fine = f.resample(&g.refined(2));
        let v = fine.values();
        let gf = fine.grid().clone();
        for i in 0..gf.len() {
            let (x, y) = gf.coords(i);
            assert!((v[i] - ((3.0 * x).sin() * (2.0 * y).cos() + 0.3)).abs() < 1e-13);
        }
        let back = fine.resample(&g);
        for (a, b) in back.coeffs().iter().zip(f.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn symmetric_tensor_shares_off_diagonal() {
        let g = grid();
        let t = TensorField2x2::symmetric(
            ScalarField::constant(&g, 1.0),
            ScalarField::from_fn(&g, |x, _| x.sin()),
            ScalarField::constant(&g, 2.0),
        );
        assert!(std::ptr::eq(t.t12(), t.t21()));
        assert!((t.trace().mean() - 3.0).abs() < 1e-15);
        assert!((t.l2_norm_sq() - (4.0 * PI * PI) * (1.0 + 4.0 + 2.0 * 0.5)).abs() < 1e-10);
    }
}
