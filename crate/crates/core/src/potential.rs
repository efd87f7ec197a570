//! Perturbation potentials `b(t, x) = ε_a·X(x)·σ(ε_t t)` with analytic
//! derivatives, scale audits, and the Taylor remainders `δb`, `δ²b`.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::{Field, Grid};

/// Derivative orders `(n, m)` = (`∂ₜⁿ`, `∂ₓᵐ`) that can be evaluated.
pub const ALLOWED_ORDERS: [(u32, u32); 5] = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1)];

/// Fraction of the window half-length on which the tanh window is identically 1.
pub const WINDOW_FLAT: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialFamily {
    Zero,
    GaussianBump,
    TanhRampWindowed,
}

impl PotentialFamily {
    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "zero" => Ok(Self::Zero),
            "gaussian_bump" => Ok(Self::GaussianBump),
            "tanh_ramp_windowed" => Ok(Self::TanhRampWindowed),
            other => Err(invalid(format!("unknown potential family '{other}'"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::GaussianBump => "gaussian_bump",
            Self::TanhRampWindowed => "tanh_ramp_windowed",
        }
    }
}

/// Time envelope `σ(s)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Modulation {
    Cos,
    Sin,
    Constant,
}

impl Modulation {
    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "cos" => Ok(Self::Cos),
            "sin" => Ok(Self::Sin),
            "constant" => Ok(Self::Constant),
            other => Err(invalid(format!("unknown modulation '{other}'"))),
        }
    }

    fn value(&self, s: f64, order: u32) -> f64 {
        match (self, order) {
            (Self::Cos, 0) => s.cos(),
            (Self::Cos, _) => -s.sin(),
            (Self::Sin, 0) => s.sin(),
            (Self::Sin, _) => s.cos(),
            (Self::Constant, 0) => 1.0,
            (Self::Constant, _) => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSpec {
    pub family: PotentialFamily,
    pub eps_a: f64,
    pub eps_x: f64,
    pub eps_t: f64,
    pub modulation: Modulation,
    /// Half-length `ℓ` of the C² window; only used by the tanh ramp.
    pub window: f64,
}

impl PotentialSpec {
    pub fn new(
        family: PotentialFamily,
        eps_a: f64,
        eps_x: f64,
        eps_t: f64,
        modulation: Modulation,
        window: f64,
    ) -> Result<Self> {
        for (name, v) in [("eps_a", eps_a), ("eps_x", eps_x), ("eps_t", eps_t)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(format!("{name} = {v} must lie in [0, 1]")));
            }
        }
        if !(window > 0.0 && window.is_finite()) {
            return Err(invalid(format!("window half-length must be positive, got {window}")));
        }
        Ok(Self { family, eps_a, eps_x, eps_t, modulation, window })
    }

    pub fn zero() -> Self {
        Self {
            family: PotentialFamily::Zero,
            eps_a: 0.0,
            eps_x: 0.0,
            eps_t: 0.0,
            modulation: Modulation::Constant,
            window: 1.0,
        }
    }

    /// Gaussian bump with `σ = cos`.
    pub fn gaussian(eps_a: f64, eps_x: f64, eps_t: f64) -> Result<Self> {
        Self::new(PotentialFamily::GaussianBump, eps_a, eps_x, eps_t, Modulation::Cos, 1.0)
    }

    /// Windowed tanh ramp with `σ = cos` and window half-length `window`.
    pub fn tanh_ramp(eps_a: f64, eps_x: f64, eps_t: f64, window: f64) -> Result<Self> {
        Self::new(PotentialFamily::TanhRampWindowed, eps_a, eps_x, eps_t, Modulation::Cos, window)
    }

    pub fn is_zero(&self) -> bool {
        self.family == PotentialFamily::Zero || self.eps_a == 0.0
    }

    pub fn is_static(&self) -> bool {
        self.is_zero() || self.eps_t == 0.0 || self.modulation == Modulation::Constant
    }

    /// `∂ₜⁿ∂ₓᵐ b(t, x)`.
    pub fn value(&self, t: f64, x: f64, order: (u32, u32)) -> Result<f64> {
        check_order(order)?;
        Ok(self.value_unchecked(t, x, order))
    }

    pub(crate) fn value_unchecked(&self, t: f64, x: f64, (n, m): (u32, u32)) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let envelope = self.modulation.value(self.eps_t * t, n) * self.eps_t.powi(n as i32);
        if envelope == 0.0 {
            return 0.0;
        }
        self.eps_a * self.profile(x, m) * envelope
    }

    /// `∂ₓᵐ X(x)` for `m ≤ 2`.
    fn profile(&self, x: f64, m: u32) -> f64 {
        let e = self.eps_x;
        match self.family {
            PotentialFamily::Zero => 0.0,
            PotentialFamily::GaussianBump => {
                let z = e * x;
                let g = (-0.5 * z * z).exp();
                match m {
                    0 => g,
                    1 => -e * z * g,
                    _ => e * e * (z * z - 1.0) * g,
                }
            }
            PotentialFamily::TanhRampWindowed => {
                let th = (e * x).tanh();
                let s2 = 1.0 - th * th;
                let (w, w1, w2) = window(x, self.window);
                match m {
                    0 => th * w,
                    1 => e * s2 * w + th * w1,
                    _ => -2.0 * e * e * s2 * th * w + 2.0 * e * s2 * w1 + th * w2,
                }
            }
        }
    }

    /// Samples `∂ₜⁿ∂ₓᵐ b` on the grid.
    pub fn evaluate(&self, t: f64, grid: &Arc<Grid>, order: (u32, u32)) -> Result<Field> {
        self.sample(t, grid, order, 0.0)
    }

    /// Samples `∂ₜⁿ∂ₓᵐ b(t, x_j + offset)`; the offset maps a moving grid onto lab positions.
    pub fn sample(&self, t: f64, grid: &Arc<Grid>, order: (u32, u32), offset: f64) -> Result<Field> {
        check_order(order)?;
        Ok(self.sample_unchecked(t, grid, order, offset))
    }

    pub(crate) fn sample_unchecked(
        &self,
        t: f64,
        grid: &Arc<Grid>,
        order: (u32, u32),
        offset: f64,
    ) -> Field {
        if self.is_zero() {
            return Field::zeros(grid);
        }
        Field::from_raw(
            grid,
            (0..grid.len())
                .map(|j| self.value_unchecked(t, grid.x(j) + offset, order))
                .collect(),
        )
    }
}

fn check_order(order: (u32, u32)) -> Result<()> {
    if ALLOWED_ORDERS.contains(&order) {
        Ok(())
    } else {
        Err(invalid(format!("derivative order {order:?} outside {ALLOWED_ORDERS:?}")))
    }
}

/// Septic smoothstep window: `(W, W′, W″)`, 1 on `|x| ≤ 0.8ℓ`, 0 for `|x| ≥ ℓ`, C³ across both joins.
fn window(x: f64, ell: f64) -> (f64, f64, f64) {
    let flat = WINDOW_FLAT * ell;
    let width = ell - flat;
    let ax = x.abs();
    if ax <= flat {
        return (1.0, 0.0, 0.0);
    }
    if ax >= ell {
        return (0.0, 0.0, 0.0);
    }
    let r = (ax - flat) / width;
    let q = 1.0 - r;
    let s = r.powi(4) * (35.0 - 84.0 * r + 70.0 * r * r - 20.0 * r.powi(3));
    let s1 = 140.0 * (r * q).powi(3);
    let s2 = 420.0 * (r * q).powi(2) * (1.0 - 2.0 * r);
    (1.0 - s, -x.signum() * s1 / width, -s2 / (width * width))
}

/// Result of the scale and consistency audit on a 64×64 `(t, x)` lattice.
#[derive(Clone, Debug)]
pub struct ScaleAudit {
    /// `max |∂ₜⁿ∂ₓᵐ b| / (ε_a ε_tⁿ ε_xᵐ)` for each allowed order.
    pub ratios: Vec<((u32, u32), f64)>,
    /// Largest finite-difference mismatch, relative to the scale of the derivative.
    pub consistency: f64,
}

impl ScaleAudit {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

pub const AUDIT_LATTICE: usize = 64;

/// Audits the scale bounds and derivative consistency on `[0, T] × [−half_length, half_length]`,
/// with `T = 2π/ε_t` (or 1 for static potentials).
pub fn scale_audit(spec: &PotentialSpec, half_length: f64) -> ScaleAudit {
    let t_max = if spec.eps_t > 0.0 { 2.0 * std::f64::consts::PI / spec.eps_t } else { 1.0 };
    let ts: Vec<f64> = (0..AUDIT_LATTICE).map(|i| t_max * i as f64 / (AUDIT_LATTICE - 1) as f64).collect();
    let xs: Vec<f64> = (0..AUDIT_LATTICE)
        .map(|i| -half_length + 2.0 * half_length * i as f64 / (AUDIT_LATTICE - 1) as f64)
        .collect();
    let scale = |(n, m): (u32, u32)| spec.eps_a * spec.eps_t.powi(n as i32) * spec.eps_x.powi(m as i32);
    let mut ratios = Vec::new();
    for order in ALLOWED_ORDERS {
        let s = scale(order);
        let mut peak = 0.0_f64;
        for &t in &ts {
            for &x in &xs {
                peak = peak.max(spec.value_unchecked(t, x, order).abs());
            }
        }
        let r = if s > 0.0 { peak / s } else if peak == 0.0 { 0.0 } else { f64::INFINITY };
        ratios.push((order, r));
    }

    let hx = 1e-4 * (1.0 / spec.eps_x.max(1e-3)).min(0.2 * spec.window);
    let ht = 1e-4 / spec.eps_t.max(1e-3);
    let mut consistency = 0.0_f64;
    let pairs = [((0, 0), (0, 1), true), ((0, 1), (0, 2), true), ((0, 0), (1, 0), false), ((0, 1), (1, 1), false)];
    for &t in &ts {
        for &x in &xs {
            for (base, deriv, in_x) in pairs {
                let s = scale(deriv);
                if s == 0.0 {
                    continue;
                }
                let fd = if in_x {
                    (spec.value_unchecked(t, x + hx, base) - spec.value_unchecked(t, x - hx, base)) / (2.0 * hx)
                } else {
                    (spec.value_unchecked(t + ht, x, base) - spec.value_unchecked(t - ht, x, base)) / (2.0 * ht)
                };
                let exact = spec.value_unchecked(t, x, deriv);
                consistency = consistency.max((fd - exact).abs() / s);
            }
        }
    }
    ScaleAudit { ratios, consistency }
}

fn check_centre(grid: &Grid, a: f64) -> Result<()> {
    let limit = WINDOW_FLAT * grid.half_length();
    if !a.is_finite() || a.abs() > limit {
        return Err(Error::NumericDomain(format!("centre a = {a} outside [-{limit}, {limit}]")));
    }
    Ok(())
}

/// `δb = b(t, x) − b(t, a)`.
pub fn delta_b(spec: &PotentialSpec, t: f64, a: f64, grid: &Arc<Grid>) -> Result<Field> {
    delta_b_in_frame(spec, t, a, grid, 0.0)
}

/// `δ²b = b(t, x) − b(t, a) − b′(t, a)(x − a)`.
pub fn delta2_b(spec: &PotentialSpec, t: f64, a: f64, grid: &Arc<Grid>) -> Result<Field> {
    delta2_b_in_frame(spec, t, a, grid, 0.0)
}

/// `δb` on a grid whose coordinate is the lab position minus `offset`.
pub(crate) fn delta_b_in_frame(
    spec: &PotentialSpec,
    t: f64,
    a: f64,
    grid: &Arc<Grid>,
    offset: f64,
) -> Result<Field> {
    check_centre(grid, a)?;
    let ba = spec.value_unchecked(t, a + offset, (0, 0));
    Ok(spec.sample_unchecked(t, grid, (0, 0), offset).map(|v| v - ba))
}

pub(crate) fn delta2_b_in_frame(
    spec: &PotentialSpec,
    t: f64,
    a: f64,
    grid: &Arc<Grid>,
    offset: f64,
) -> Result<Field> {
    check_centre(grid, a)?;
    let ba = spec.value_unchecked(t, a + offset, (0, 0));
    let b1 = spec.value_unchecked(t, a + offset, (0, 1));
    let b = spec.sample_unchecked(t, grid, (0, 0), offset);
    Ok(Field::from_raw(
        grid,
        b.values()
            .iter()
            .enumerate()
            .map(|(j, &v)| v - ba - b1 * (grid.x(j) - a))
            .collect(),
    ))
}

/// Measured constants `C₁, C₂` in `|δb| ≤ C₁ε_aε_x|x − a|` and `|δ²b| ≤ C₂ε_aε_x²(x − a)²`.
#[derive(Clone, Copy, Debug)]
pub struct RemainderConstants {
    pub first: f64,
    pub second: f64,
}

pub fn remainder_constants(spec: &PotentialSpec, t: f64, a: f64, grid: &Arc<Grid>) -> Result<RemainderConstants> {
    let d1 = delta_b(spec, t, a, grid)?;
    let d2 = delta2_b(spec, t, a, grid)?;
    if spec.is_zero() {
        return Ok(RemainderConstants { first: 0.0, second: 0.0 });
    }
    let (mut first, mut second) = (0.0_f64, 0.0_f64);
    for j in 0..grid.len() {
        let r = (grid.x(j) - a).abs();
        if r < 1e-3 * grid.spacing() {
            continue;
        }
        first = first.max(d1.values()[j].abs() / (spec.eps_a * spec.eps_x * r));
        second = second.max(d2.values()[j].abs() / (spec.eps_a * spec.eps_x.powi(2) * r * r));
    }
    Ok(RemainderConstants { first, second })
}
