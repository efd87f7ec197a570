//! Periodic pseudospectral core.
//!
//! A [`Grid`] samples `x ∈ [−L, L)` at `N` equispaced points and owns the FFT
//! plans. A [`Field`] is a real function sampled on a grid. Derivatives are
//! spectral, quadrature is the rectangle rule, and the antiderivative is pinned
//! at the left edge so that it approximates `∫_{−∞}^x` for localized input.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

/// Relative size below which a field counts as vanished at the domain edge.
pub const LOCALIZATION_TOL: f64 = 1e-8;
/// Number of boundary-nearest samples on each side inspected by the localization check.
const EDGE_SAMPLES: usize = 4;

pub struct Grid {
    half_length: f64,
    n: usize,
    spacing: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.half_length)
            .field("n", &self.n)
            .finish()
    }
}

impl Grid {
    /// Builds the grid on `[−half_length, half_length)` with `n` points.
    pub fn new(half_length: f64, n: usize) -> Result<Arc<Grid>> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(invalid(format!("half length must be positive, got {half_length}")));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(invalid(format!("point count must be a power of two >= 16, got {n}")));
        }
        let spacing = 2.0 * half_length / n as f64;
        let wavenumbers = (0..n)
            .map(|m| std::f64::consts::PI * signed_index(m, n) as f64 / half_length)
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid {
            half_length,
            n,
            spacing,
            wavenumbers,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }))
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Wavenumbers in FFT storage order; slot `m` holds `π j / L` with `j` the signed index.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Signed mode index `j ∈ {−N/2, …, N/2−1}` of FFT slot `m`.
    pub fn mode_index(&self, m: usize) -> i64 {
        signed_index(m, self.n)
    }

    /// Slot of the unpaired Nyquist mode `j = −N/2`.
    pub fn nyquist_slot(&self) -> usize {
        self.n / 2
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Index of the sample mirrored through `x = 0`.
    pub fn mirror_index(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// Largest retained mode index under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }

    /// Largest |k| kept by the time stepper.
    pub fn max_wavenumber(&self, dealias: bool) -> f64 {
        let jmax = if dealias { self.dealias_cutoff() } else { (self.n / 2) as i64 };
        std::f64::consts::PI * jmax as f64 / self.half_length
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.half_length == other.half_length)
    }

    /// Unnormalized forward DFT of real samples.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    /// In-place unnormalized forward DFT.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Normalized inverse DFT, keeping the complex result.
    pub fn inverse_complex(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectrum.to_vec();
        self.inverse_in_place(&mut buf);
        buf
    }

    /// In-place normalized inverse DFT.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    /// Normalized inverse DFT returning the real part.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        self.inverse_complex(spectrum).iter().map(|z| z.re).collect()
    }
}

fn signed_index(m: usize, n: usize) -> i64 {
    if m < n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// A real-valued function sampled on a [`Grid`].
#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("max_abs", &self.max_abs())
            .finish()
    }
}

impl Field {
    /// Wraps samples, rejecting wrong lengths and non-finite values.
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(Field { grid: Arc::clone(grid), values })
    }

    pub(crate) fn from_raw(grid: &Arc<Grid>, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid: Arc::clone(grid), values }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Field {
        Field::from_raw(grid, vec![0.0; grid.len()])
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(grid, (0..grid.len()).map(|j| f(grid.x(j))).collect())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        assert_same_grid(self, other);
        Field::from_raw(
            &self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    /// Pointwise product.
    pub fn hadamard(&self, other: &Field) -> Field {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|v| s * v)
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Field) -> Field {
        self.zip_map(other, |a, b| a + s * b)
    }

    /// Samples `f(x − shift)` by exact Fourier interpolation.
    pub fn translate(&self, shift: f64) -> Field {
        let k = self.grid.wavenumbers();
        let mut spec = self.grid.forward(&self.values);
        for (z, &kj) in spec.iter_mut().zip(k) {
            *z *= Complex64::from_polar(1.0, -kj * shift);
        }
        Field::from_raw(&self.grid, self.grid.inverse(&spec))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

fn assert_same_grid(a: &Field, b: &Field) {
    assert!(a.grid.same_as(&b.grid), "binary field operation on different grids");
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(j) => Err(Error::NumericDomain(format!("non-finite sample {} at index {j}", values[j]))),
        None => Ok(()),
    }
}

fn check_same_grid(a: &Field, b: &Field) -> Result<()> {
    if a.grid.same_as(&b.grid) {
        Ok(())
    } else {
        Err(invalid("fields live on different grids"))
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Neg for &Field {
    type Output = Field;
    fn neg(self) -> Field {
        self.map(|v| -v)
    }
}

impl Mul<&Field> for f64 {
    type Output = Field;
    fn mul(self, rhs: &Field) -> Field {
        rhs.scale(self)
    }
}

/// Spectral derivative of order 1, 2 or 3.
pub fn derivative(f: &Field, order: u32) -> Result<Field> {
    if !(1..=3).contains(&order) {
        return Err(invalid(format!("derivative order must be 1, 2 or 3, got {order}")));
    }
    check_finite(&f.values)?;
    Ok(spectral_derivative(f, order))
}

pub(crate) fn spectral_derivative(f: &Field, order: u32) -> Field {
    let grid = &f.grid;
    let mut spec = grid.forward(&f.values);
    apply_derivative_symbol(grid, &mut spec, order);
    Field::from_raw(grid, grid.inverse(&spec))
}

/// Multiplies a spectrum by `(i k)^order`, zeroing the Nyquist mode for odd orders.
pub(crate) fn apply_derivative_symbol(grid: &Grid, spec: &mut [Complex64], order: u32) {
    let k = grid.wavenumbers();
    for (z, &kj) in spec.iter_mut().zip(k) {
        let ik = Complex64::new(0.0, kj);
        *z *= ik.powu(order);
    }
    if order % 2 == 1 {
        spec[grid.nyquist_slot()] = Complex64::new(0.0, 0.0);
    }
}

fn check_localized(values: &[f64], scale: f64) -> Result<()> {
    let n = values.len();
    let limit = LOCALIZATION_TOL * scale;
    let boundary = values[..EDGE_SAMPLES]
        .iter()
        .chain(&values[n - EDGE_SAMPLES..])
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if boundary > limit {
        return Err(Error::NotLocalized { boundary, limit });
    }
    Ok(())
}

/// `∫_{−∞}^x f` for a localized, zero-mean field.
///
/// The periodic antiderivative is pinned so that its value at `x = −L` is
/// `h·f(−L)/2`, the half-cell contribution left of the first sample.
pub fn antiderivative(f: &Field) -> Result<Field> {
    check_finite(&f.values)?;
    let scale = f.max_abs();
    if scale == 0.0 {
        return Ok(Field::zeros(&f.grid));
    }
    check_localized(&f.values, scale)?;
    let mean = f.values.iter().sum::<f64>() / f.values.len() as f64;
    let limit = LOCALIZATION_TOL * scale;
    if mean.abs() > limit {
        return Err(Error::NonzeroMean { mean: mean.abs(), limit });
    }
    let grid = &f.grid;
    let mut spec = grid.forward(&f.values);
    for (m, (z, &kj)) in spec.iter_mut().zip(grid.wavenumbers()).enumerate() {
        if m == 0 || m == grid.nyquist_slot() {
            *z = Complex64::new(0.0, 0.0);
        } else {
            *z /= Complex64::new(0.0, kj);
        }
    }
    let mut values = grid.inverse(&spec);
    let shift = 0.5 * grid.spacing() * f.values[0] - values[0];
    for v in values.iter_mut() {
        *v += shift;
    }
    Ok(Field::from_raw(grid, values))
}

/// `∂ₓ⁻¹(∂ₓ g)` under the convention `g(−∞) = 0`: removes the left-edge value.
///
/// `g` minus its left-edge value must vanish near both ends of the domain.
pub fn antiderivative_of_derivative(g: &Field) -> Result<Field> {
    check_finite(&g.values)?;
    let left = g.values[0];
    let shifted: Vec<f64> = g.values.iter().map(|v| v - left).collect();
    let scale = shifted.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale > 0.0 {
        check_localized(&shifted, scale)?;
    }
    Ok(Field::from_raw(&g.grid, shifted))
}

/// Rectangle-rule `L²` pairing `h Σ f_j g_j`.
pub fn inner_product(f: &Field, g: &Field) -> Result<f64> {
    check_same_grid(f, g)?;
    Ok(dot(f, g))
}

pub(crate) fn dot(f: &Field, g: &Field) -> f64 {
    f.grid.spacing() * f.values.iter().zip(&g.values).map(|(a, b)| a * b).sum::<f64>()
}

pub fn l2_norm(f: &Field) -> f64 {
    dot(f, f).sqrt()
}

/// `sqrt(‖f‖₂² + ‖∂ₓf‖₂²)` with the spectral derivative.
pub fn h1_norm(f: &Field) -> Result<f64> {
    check_finite(&f.values)?;
    let df = spectral_derivative(f, 1);
    Ok((dot(f, f) + dot(&df, &df)).sqrt())
}

/// `ω(v₁, v₂) = ½∫(v₁ ∂ₓ⁻¹v₂ − v₂ ∂ₓ⁻¹v₁)`.
pub fn symplectic_form(v1: &Field, v2: &Field) -> Result<f64> {
    check_same_grid(v1, v2)?;
    let a1 = antiderivative(v1)?;
    let a2 = antiderivative(v2)?;
    Ok(0.5 * (dot(v1, &a2) - dot(v2, &a1)))
}

/// Dense circulant matrix of a real, even Fourier multiplier `σ(k)`.
pub(crate) fn circulant_matrix(grid: &Grid, symbol: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let n = grid.len();
    let spec: Vec<Complex64> = grid.wavenumbers().iter().map(|&k| Complex64::new(symbol(k), 0.0)).collect();
    let column = grid.inverse(&spec);
    DMatrix::from_fn(n, n, |i, j| column[(i + n - j) % n])
}

/// Dense spectral `∂ₓ²`.
pub(crate) fn second_derivative_matrix(grid: &Grid) -> DMatrix<f64> {
    circulant_matrix(grid, |k| -k * k)
}
