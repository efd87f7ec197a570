//! Solitary-wave profiles `Q_c`, their translates `Q_{ca}`, tangent vectors,
//! the soliton momentum `δ(c) = ½‖Q_c‖₂²`, and structural checks on the
//! nonlinearity.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::grid::{self, dot, Field, Grid};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative step of the centered difference in `c`.
pub const SPEED_STEP: f64 = 1e-4;
/// Relative step of the second difference in `c`.
pub const SPEED_STEP_SECOND: f64 = 1e-3;
/// Samples below this magnitude are exempt from the shape invariants.
pub const TRUNCATION_FLOOR: f64 = 1e-14;
/// Minimum number of samples per width `1/√c`.
pub const MIN_POINTS_PER_WIDTH: f64 = 4.0;

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-11;

/// The local nonlinearity `f` together with `f′`, `f″` and `F = ∫₀ f`.
#[derive(Clone)]
pub struct NonlinearitySpec {
    label: String,
    f: ScalarFn,
    df: ScalarFn,
    d2f: ScalarFn,
    antiderivative: ScalarFn,
    smoothness: u32,
    closed_form: bool,
    exponent: Option<u32>,
}

impl fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearitySpec")
            .field("label", &self.label)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl NonlinearitySpec {
    /// `f(u) = u³`, the case with a closed-form profile.
    pub fn cubic() -> Self {
        let mut spec = Self::power(3).expect("u^3 is admissible");
        spec.label = "cubic".into();
        spec.closed_form = true;
        spec
    }

    /// `f(u) = u^p` for an integer `p ≥ 2`; profiles are computed by Newton iteration.
    pub fn power(p: u32) -> Result<Self> {
        if p < 2 {
            return Err(invalid(format!("power nonlinearity needs p >= 2, got {p}")));
        }
        let pi = p as i32;
        let pf = p as f64;
        let mut spec = Self::custom(
            format!("power:{p}"),
            Arc::new(move |u: f64| u.powi(pi)),
            Arc::new(move |u: f64| pf * u.powi(pi - 1)),
            Arc::new(move |u: f64| pf * (pf - 1.0) * u.powi(pi - 2)),
            Arc::new(move |u: f64| u.powi(pi + 1) / (pf + 1.0)),
            p.max(3),
        )?;
        spec.exponent = Some(p);
        Ok(spec)
    }

    /// A general nonlinearity; validates `f(0) = f′(0) = F(0) = 0` and the mutual
    /// consistency of the evaluators by finite differences at 64 points.
    pub fn custom(
        label: impl Into<String>,
        f: ScalarFn,
        df: ScalarFn,
        d2f: ScalarFn,
        antiderivative: ScalarFn,
        smoothness: u32,
    ) -> Result<Self> {
        if smoothness < 3 {
            return Err(invalid(format!("smoothness order must be >= 3, got {smoothness}")));
        }
        if f(0.0).abs() > 1e-14 || df(0.0).abs() > 1e-14 || antiderivative(0.0).abs() > 1e-14 {
            return Err(invalid("nonlinearity must satisfy f(0) = f'(0) = F(0) = 0"));
        }
        for i in 0..64 {
            let u = -3.0 + 6.0 * i as f64 / 63.0;
            let h = 1e-5 * u.abs().max(1.0);
            let checks = [
                ("F' = f", (antiderivative(u + h) - antiderivative(u - h)) / (2.0 * h), f(u)),
                ("f' consistent", (f(u + h) - f(u - h)) / (2.0 * h), df(u)),
                ("f'' consistent", (df(u + h) - df(u - h)) / (2.0 * h), d2f(u)),
            ];
            for (what, fd, exact) in checks {
                if (fd - exact).abs() > 1e-8 * exact.abs().max(1.0) {
                    return Err(invalid(format!("{what} fails at u = {u}: {fd} vs {exact}")));
                }
            }
        }
        Ok(Self {
            label: label.into(),
            f,
            df,
            d2f,
            antiderivative,
            smoothness,
            closed_form: false,
            exponent: None,
        })
    }

    /// Parses `cubic`, `kdv`, `quartic` or `power:<p>`.
    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "cubic" | "mkdv" => Ok(Self::cubic()),
            "kdv" | "quadratic" => Self::power(2),
            "quartic" => Self::power(4),
            other => match other.strip_prefix("power:").map(str::parse::<u32>) {
                Some(Ok(3)) => Ok(Self::cubic()),
                Some(Ok(p)) => Self::power(p),
                _ => Err(invalid(format!("unknown nonlinearity '{other}'"))),
            },
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    /// `p` when `f(u) = u^p`.
    pub fn exponent(&self) -> Option<u32> {
        self.exponent
    }

    pub fn is_cubic(&self) -> bool {
        self.closed_form
    }

    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn df(&self, u: f64) -> f64 {
        (self.df)(u)
    }

    pub fn d2f(&self, u: f64) -> f64 {
        (self.d2f)(u)
    }

    /// `F(u) = ∫₀ᵘ f`.
    pub fn big_f(&self, u: f64) -> f64 {
        (self.antiderivative)(u)
    }
}

/// Admissible speed interval `I = [min, max] ⊂ (0, ∞)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedInterval {
    pub min: f64,
    pub max: f64,
}

impl Default for SpeedInterval {
    fn default() -> Self {
        Self { min: 0.5, max: 2.0 }
    }
}

impl SpeedInterval {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && max >= min && max.is_finite()) {
            return Err(invalid(format!("speed interval [{min}, {max}] must lie in (0, inf)")));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, c: f64) -> bool {
        c >= self.min && c <= self.max
    }

    pub(crate) fn require(&self, c: f64) -> Result<()> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(invalid(format!("c = {c} outside [{}, {}]", self.min, self.max)))
        }
    }
}

/// The modulation pair `(a, c)` with its validity interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonParams {
    pub a: f64,
    pub c: f64,
    pub interval: SpeedInterval,
}

impl SolitonParams {
    pub fn new(a: f64, c: f64, interval: SpeedInterval) -> Result<Self> {
        if !a.is_finite() {
            return Err(invalid(format!("position must be finite, got {a}")));
        }
        interval.require(c)?;
        Ok(Self { a, c, interval })
    }

    /// Same interval, new parameters (unchecked).
    pub fn with(&self, a: f64, c: f64) -> Self {
        Self { a, c, interval: self.interval }
    }
}

/// `Q_{ca}` with `∂_c Q_{ca}` and `∂ₓQ_{ca}` on a grid.
#[derive(Clone, Debug)]
pub struct ProfileBundle {
    pub q: Field,
    pub dq_dc: Field,
    pub dq_dx: Field,
    pub params: SolitonParams,
}

impl ProfileBundle {
    pub fn grid(&self) -> &Arc<Grid> {
        self.q.grid()
    }

    /// `(ζ^{tr}, ζ^n) = (−∂ₓQ_{ca}, ∂_cQ_{ca})`.
    pub fn tangent_vectors(&self) -> (Field, Field) {
        (-&self.dq_dx, self.dq_dc.clone())
    }

    /// `∂ₓ⁻¹ζ^{tr} = −Q_{ca}`.
    pub fn translation_antiderivative(&self) -> Result<Field> {
        grid::antiderivative_of_derivative(&-&self.q)
    }

    /// `∂ₓ⁻¹ζ^n`.
    pub fn normalization_antiderivative(&self) -> Result<Field> {
        grid::antiderivative(&self.dq_dc)
    }

    /// `(x − a)` sampled on the grid without periodic wrapping.
    pub fn offset_coordinate(&self) -> Field {
        let grid = self.grid();
        Field::from_raw(grid, (0..grid.len()).map(|j| grid.x(j) - self.params.a).collect())
    }

    /// Residual and symmetry diagnostics of the profile.
    pub fn shape_report(&self, nl: &NonlinearitySpec) -> ShapeReport {
        let grid = self.grid();
        let d2 = grid::spectral_derivative(&self.q, 2);
        let c = self.params.c;
        let residual = self
            .q
            .values()
            .iter()
            .zip(d2.values())
            .map(|(&q, &qxx)| (-qxx + c * q - nl.f(q)).abs())
            .fold(0.0, f64::max);
        let mirrored = self.q.translate(-self.params.a);
        let mv = mirrored.values();
        let evenness = (0..grid.len())
            .map(|j| (mv[j] - mv[grid.mirror_index(j)]).abs())
            .fold(0.0, f64::max);
        let positive = mv.iter().all(|&v| v > 0.0 || v.abs() < TRUNCATION_FLOOR);
        let half = grid.len() / 2;
        let decreasing = (half..grid.len() - 1)
            .all(|j| mv[j + 1] <= mv[j] || mv[j].abs() < TRUNCATION_FLOOR);
        ShapeReport { residual, evenness, positive, decreasing }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ShapeReport {
    /// Max-norm residual of `−Q″ + cQ − f(Q)`.
    pub residual: f64,
    /// Max deviation from evenness about `a`.
    pub evenness: f64,
    pub positive: bool,
    pub decreasing: bool,
}

fn check_resolution(grid: &Grid, c: f64) -> Result<()> {
    let points = 1.0 / (c.sqrt() * grid.spacing());
    if points < MIN_POINTS_PER_WIDTH {
        return Err(invalid(format!(
            "grid under-resolves c = {c}: {points:.2} points per width, need {MIN_POINTS_PER_WIDTH}"
        )));
    }
    Ok(())
}

fn wrapped(grid: &Grid, x: f64) -> f64 {
    let period = 2.0 * grid.half_length();
    x - period * (x / period).round()
}

/// `√(2c) sech(√c (x − a))` with periodic distance.
fn cubic_samples(c: f64, a: f64, grid: &Grid) -> Vec<f64> {
    let amp = (2.0 * c).sqrt();
    let rc = c.sqrt();
    (0..grid.len())
        .map(|j| amp / (rc * wrapped(grid, grid.x(j) - a)).cosh())
        .collect()
}

fn samples_at(
    nl: &NonlinearitySpec,
    c: f64,
    a: f64,
    grid: &Arc<Grid>,
    centered_guess: Option<&[f64]>,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    if nl.is_cubic() {
        return Ok((cubic_samples(c, a, grid), None));
    }
    let centered = solve_centered_profile(nl, c, grid, centered_guess)?;
    let q = if a == 0.0 {
        centered.clone()
    } else {
        Field::from_raw(grid, centered.clone()).translate(a).into_values()
    };
    Ok((q, Some(centered)))
}

/// Dense Newton solve of `−Q″ + cQ − f(Q) = 0` for the profile centred at `x = 0`.
fn solve_centered_profile(
    nl: &NonlinearitySpec,
    c: f64,
    grid: &Arc<Grid>,
    guess: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let n = grid.len();
    let mut q: Vec<f64> = match guess {
        Some(g) => g.to_vec(),
        None => {
            let peak = check_admissibility(nl, c)
                .turning_point
                .witness
                .ok_or_else(|| invalid(format!("no positive turning point for '{}'", nl.label())))?;
            cubic_samples(c, 0.0, grid)
                .iter()
                .map(|v| v * peak / (2.0 * c).sqrt())
                .collect()
        }
    };
    let d2 = grid::second_derivative_matrix(grid);
    let residual = |q: &[f64]| -> Vec<f64> {
        let qxx = grid::spectral_derivative(&Field::from_raw(grid, q.to_vec()), 2);
        q.iter()
            .zip(qxx.values())
            .map(|(&v, &vxx)| -vxx + c * v - nl.f(v))
            .collect()
    };
    let sup = |r: &[f64]| r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut r = residual(&q);
    for _ in 0..NEWTON_MAX_ITER {
        if sup(&r) <= NEWTON_TOL {
            return Ok(q);
        }
        let dq = grid::spectral_derivative(&Field::from_raw(grid, q.clone()), 1);
        let norm = dq.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut jac = -&d2;
        for i in 0..n {
            jac[(i, i)] += c - nl.df(q[i]);
        }
        if norm > 0.0 {
            let v = DVector::from_iterator(n, dq.values().iter().map(|x| x / norm));
            jac += &v * v.transpose();
        }
        let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
        let step = jac
            .lu()
            .solve(&rhs)
            .ok_or(Error::SolverFailure { iterations: 0, residual: sup(&r) })?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<f64> = q.iter().zip(step.iter()).map(|(a, d)| a + lambda * d).collect();
            let trial = symmetrize(grid, &trial);
            let rt = residual(&trial);
            if sup(&rt) < sup(&r) || lambda < 1.0 / 64.0 {
                q = trial;
                r = rt;
                break;
            }
            lambda *= 0.5;
        }
    }
    Err(Error::SolverFailure { iterations: NEWTON_MAX_ITER, residual: sup(&r) })
}

fn symmetrize(grid: &Grid, q: &[f64]) -> Vec<f64> {
    (0..q.len())
        .map(|j| 0.5 * (q[j] + q[grid.mirror_index(j)]))
        .collect()
}

/// Builds `Q_{ca}`, `∂_cQ_{ca}` (centered difference, step `1e−4·c`) and `∂ₓQ_{ca}`.
pub fn build_profile(
    nl: &NonlinearitySpec,
    params: SolitonParams,
    grid: &Arc<Grid>,
) -> Result<ProfileBundle> {
    params.interval.require(params.c)?;
    check_resolution(grid, params.c)?;
    let (c, a) = (params.c, params.a);
    let h = SPEED_STEP * c;
    let (q, centered) = samples_at(nl, c, a, grid, None)?;
    let (qp, _) = samples_at(nl, c + h, a, grid, centered.as_deref())?;
    let (qm, _) = samples_at(nl, c - h, a, grid, centered.as_deref())?;
    let dq_dc: Vec<f64> = qp.iter().zip(&qm).map(|(p, m)| (p - m) / (2.0 * h)).collect();
    let q = Field::new(grid, q)?;
    let dq_dx = grid::spectral_derivative(&q, 1);
    Ok(ProfileBundle { q, dq_dc: Field::new(grid, dq_dc)?, dq_dx, params })
}

/// Free-form profile evaluation used by the integrators; skips the interval check.
pub(crate) fn profile_field(nl: &NonlinearitySpec, c: f64, a: f64, grid: &Arc<Grid>) -> Result<Field> {
    let (q, _) = samples_at(nl, c, a, grid, None)?;
    Field::new(grid, q)
}

/// `∂_c²Q_{ca}` by a second difference with step `1e−3·c`.
pub fn second_speed_derivative(
    nl: &NonlinearitySpec,
    params: SolitonParams,
    grid: &Arc<Grid>,
) -> Result<Field> {
    let (c, a) = (params.c, params.a);
    let h = SPEED_STEP_SECOND * c;
    let (q, centered) = samples_at(nl, c, a, grid, None)?;
    let (qp, _) = samples_at(nl, c + h, a, grid, centered.as_deref())?;
    let (qm, _) = samples_at(nl, c - h, a, grid, centered.as_deref())?;
    Field::new(
        grid,
        (0..q.len()).map(|j| (qp[j] - 2.0 * q[j] + qm[j]) / (h * h)).collect(),
    )
}

/// Two evaluations of `δ′(c)` that must agree.
#[derive(Clone, Copy, Debug)]
pub struct MomentumSlope {
    /// Centered difference of `δ`.
    pub by_difference: f64,
    /// `⟨ζ^n, Q_c⟩`.
    pub by_pairing: f64,
}

/// `δ(c) = ½‖Q_c‖₂²` by quadrature.
pub fn delta(nl: &NonlinearitySpec, c: f64, grid: &Arc<Grid>) -> Result<f64> {
    let q = profile_field(nl, c, 0.0, grid)?;
    Ok(0.5 * dot(&q, &q))
}

/// Both evaluations of `δ′(c)`; fails if they disagree by more than `1e−5`.
pub fn momentum_slope(nl: &NonlinearitySpec, c: f64, grid: &Arc<Grid>) -> Result<MomentumSlope> {
    if !(c > 0.0) {
        return Err(invalid(format!("speed must be positive, got {c}")));
    }
    check_resolution(grid, c)?;
    let h = SPEED_STEP * c;
    let (q, centered) = samples_at(nl, c, 0.0, grid, None)?;
    let (qp, _) = samples_at(nl, c + h, 0.0, grid, centered.as_deref())?;
    let (qm, _) = samples_at(nl, c - h, 0.0, grid, centered.as_deref())?;
    let q = Field::from_raw(grid, q);
    let qp = Field::from_raw(grid, qp);
    let qm = Field::from_raw(grid, qm);
    let by_difference = (0.5 * dot(&qp, &qp) - 0.5 * dot(&qm, &qm)) / (2.0 * h);
    let zeta_n = (&qp - &qm).scale(1.0 / (2.0 * h));
    let by_pairing = dot(&zeta_n, &q);
    if (by_difference - by_pairing).abs() > 1e-5 {
        return Err(Error::InternalConsistency(format!(
            "delta'({c}): difference {by_difference} vs pairing {by_pairing}"
        )));
    }
    Ok(MomentumSlope { by_difference, by_pairing })
}

/// `δ′(c)` (centered difference, cross-checked against `⟨ζ^n, Q_c⟩`).
pub fn delta_prime(nl: &NonlinearitySpec, c: f64, grid: &Arc<Grid>) -> Result<f64> {
    Ok(momentum_slope(nl, c, grid)?.by_difference)
}

/// Outcome of one structural condition on `g(u) = −cu + f(u)`.
#[derive(Clone, Copy, Debug)]
pub struct Condition {
    pub passed: bool,
    /// Witness value: `g(0)`, `x*`, or the slope bound `−m`.
    pub witness: Option<f64>,
    /// Secondary diagnostic: Lipschitz estimate, `g(x*)`, or the slope at the smaller probe.
    pub detail: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct AdmissibilityReport {
    /// `g` locally Lipschitz with `g(0) = 0`.
    pub lipschitz_zero: Condition,
    /// Smallest positive zero `x*` of `∫₀ˣ g` exists and `g(x*) > 0`.
    pub turning_point: Condition,
    /// `g(s)/s ≤ −m < 0` near zero.
    pub negative_slope: Condition,
}

impl AdmissibilityReport {
    pub fn all_pass(&self) -> bool {
        self.lipschitz_zero.passed && self.turning_point.passed && self.negative_slope.passed
    }
}

fn simpson(g: &dyn Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels + panels % 2;
    let h = (b - a) / panels as f64;
    let mut s = g(a) + g(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * g(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Numerically checks the three existence conditions for `g(u) = −cu + f(u)`.
pub fn check_admissibility(nl: &NonlinearitySpec, c: f64) -> AdmissibilityReport {
    let g = |u: f64| -c * u + nl.f(u);

    // Search for the first sign change of G(x) = ∫₀ˣ g from below.
    let mut turning = None;
    let mut upper = 1.0;
    'search: while upper <= 1e6 {
        let samples = 4000;
        let dx = upper / samples as f64;
        let mut prev_x = 0.0;
        let mut prev_g = 0.0;
        let mut running = 0.0;
        for i in 1..=samples {
            let x = i as f64 * dx;
            running += simpson(&g, prev_x, x, 8);
            if i > 1 && prev_g < 0.0 && running >= 0.0 {
                let (mut lo, mut hi) = (prev_x, x);
                let base = running - simpson(&g, prev_x, x, 8);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if base + simpson(&g, prev_x, mid, 16) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                turning = Some(0.5 * (lo + hi));
                break 'search;
            }
            prev_x = x;
            prev_g = running;
        }
        upper *= 4.0;
    }

    let turning_point = match turning {
        Some(x) => Condition { passed: x > 0.0 && g(x) > 0.0, witness: Some(x), detail: g(x) },
        None => Condition { passed: false, witness: None, detail: f64::NAN },
    };

    let range = 4.0 * turning.unwrap_or(1.0);
    let probes = 2000;
    let du = range / probes as f64;
    let lipschitz = (0..probes)
        .map(|i| {
            let u = i as f64 * du;
            ((g(u + du) - g(u)) / du).abs()
        })
        .fold(0.0, f64::max);
    let g0 = g(0.0);
    let lipschitz_zero = Condition {
        passed: g0.abs() <= 1e-14 && lipschitz.is_finite(),
        witness: Some(g0),
        detail: lipschitz,
    };

    let s1 = g(1e-3) / 1e-3;
    let s2 = g(1e-4) / 1e-4;
    let bound = s1.max(s2);
    let negative_slope = Condition { passed: bound < 0.0, witness: Some(bound), detail: s2 };

    AdmissibilityReport { lipschitz_zero, turning_point, negative_slope }
}

/// `∫ ∂_cQ_c`, which must vanish for the symplectic form to be defined on the
/// tangent space.
#[derive(Clone, Copy, Debug)]
pub struct TangentMass {
    pub integral: f64,
    pub absolute_integral: f64,
    pub within_scope: bool,
}

pub fn tangent_mass(nl: &NonlinearitySpec, c: f64, grid: &Arc<Grid>) -> Result<TangentMass> {
    let interval = SpeedInterval::new(c.min(0.5), c.max(2.0))?;
    let pb = build_profile(nl, SolitonParams::new(0.0, c, interval)?, grid)?;
    let h = grid.spacing();
    let integral = h * pb.dq_dc.values().iter().sum::<f64>();
    let absolute_integral = h * pb.dq_dc.values().iter().map(|v| v.abs()).sum::<f64>();
    Ok(TangentMass {
        integral,
        absolute_integral,
        within_scope: integral.abs() <= 1e-8 * absolute_integral.max(1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<Grid> {
        Grid::new(50.0, 1024).unwrap()
    }

    fn params(a: f64, c: f64) -> SolitonParams {
        SolitonParams::new(a, c, SpeedInterval::new(0.25, 5.0).unwrap()).unwrap()
    }

    #[test]
    fn cubic_peak_and_residual() {
        let g = grid();
        let nl = NonlinearitySpec::cubic();
        let pb = build_profile(&nl, params(0.0, 1.0), &g).unwrap();
        assert!((pb.q.values()[512] - 2f64.sqrt()).abs() <= 1e-12);
        let shape = pb.shape_report(&nl);
        assert!(shape.residual <= 1e-10, "residual {}", shape.residual);
        assert!(shape.positive && shape.decreasing);
    }

    #[test]
    fn cubic_scaling_law() {
        let g = grid();
        let nl = NonlinearitySpec::cubic();
        let pb = build_profile(&nl, params(0.0, 4.0), &g).unwrap();
        // Q_c(x) = c^{1/(p-1)} Q(c^{1/2} x) with Q = √2 sech
        for (j, &v) in pb.q.values().iter().enumerate() {
            let x = g.x(j);
            let expect = 2.0 * 2f64.sqrt() / (2.0 * x).cosh();
            assert!((v - expect).abs() <= 1e-10);
        }
    }

    #[test]
    fn translated_profile_is_even_about_centre() {
        let g = Grid::new(32.0, 1024).unwrap();
        let nl = NonlinearitySpec::cubic();
        let pb = build_profile(&nl, params(3.0, 1.0), &g).unwrap();
        let j = ((3.0 + 32.0) / g.spacing()).round() as usize;
        assert!((g.x(j) - 3.0).abs() < 1e-12);
        assert!((pb.q.values()[j] - 2f64.sqrt()).abs() <= 1e-12);
        for d in 1..100 {
            assert!((pb.q.values()[j + d] - pb.q.values()[j - d]).abs() < 1e-14);
        }
    }

    #[test]
    fn speed_outside_interval_rejected() {
        let g = grid();
        let nl = NonlinearitySpec::cubic();
        let p = SolitonParams { a: 0.0, c: 3.0, interval: SpeedInterval::default() };
        assert!(matches!(build_profile(&nl, p, &g), Err(Error::InvalidArgument(_))));
        assert!(SolitonParams::new(0.0, 3.0, SpeedInterval::default()).is_err());
    }

    #[test]
    fn coarse_grid_rejected() {
        let g = Grid::new(50.0, 64).unwrap();
        let nl = NonlinearitySpec::cubic();
        assert!(build_profile(&nl, params(0.0, 1.0), &g).is_err());
    }

    #[test]
    fn tangent_vectors_orthogonal_and_mass_free() {
        let g = grid();
        let nl = NonlinearitySpec::cubic();
        let pb = build_profile(&nl, params(0.0, 1.0), &g).unwrap();
        let (tr, nv) = pb.tangent_vectors();
        assert!(dot(&tr, &nv).abs() <= 1e-8);
        assert!((g.spacing() * nv.values().iter().sum::<f64>()).abs() <= 1e-8);
        assert!(tr.values()[512].abs() <= 1e-10);
    }

    #[test]
    fn delta_values_for_cubic() {
        // δ(c) = 2√c, δ′(c) = 1/√c
        let g = grid();
        let nl = NonlinearitySpec::cubic();
        for (c, d, dp) in [(1.0, 2.0, 1.0), (4.0, 4.0, 0.5)] {
            assert!((delta(&nl, c, &g).unwrap() - d).abs() <= 1e-8);
            let s = momentum_slope(&nl, c, &g).unwrap();
            assert!((s.by_difference - dp).abs() <= 1e-6);
            assert!((s.by_pairing - s.by_difference).abs() <= 1e-6);
        }
    }

    #[test]
    fn power_law_formula_at_unit_speed() {
        // (5 − p)/(4(p − 1))·‖Q_{c=1}‖₂² for p = 3
        let g = grid();
        let nl = NonlinearitySpec::cubic();
        let norm_sq = 2.0 * delta(&nl, 1.0, &g).unwrap();
        let formula = (5.0 - 3.0) / (4.0 * 2.0) * norm_sq;
        assert!((delta_prime(&nl, 1.0, &g).unwrap() - formula).abs() <= 1e-6);
    }

    #[test]
    fn admissibility_cubic() {
        let nl = NonlinearitySpec::cubic();
        let r = check_admissibility(&nl, 1.0);
        assert!(r.all_pass());
        // ∫₀ˣ(−u + u³) = −x²/2 + x⁴/4 vanishes at √2
        assert!((r.turning_point.witness.unwrap() - 2f64.sqrt()).abs() < 1e-9);
        assert!((r.negative_slope.witness.unwrap() + 1.0).abs() < 1e-5);
    }

    #[test]
    fn admissibility_rejects_offset_nonlinearity() {
        // f(0) ≠ 0 cannot be built through the validated constructor; probe the
        // condition directly through a shifted cubic that bypasses it.
        let nl = NonlinearitySpec {
            label: "offset".into(),
            f: Arc::new(|u: f64| u * u * u + 0.1),
            df: Arc::new(|u: f64| 3.0 * u * u),
            d2f: Arc::new(|u: f64| 6.0 * u),
            antiderivative: Arc::new(|u: f64| u.powi(4) / 4.0 + 0.1 * u),
            smoothness: 3,
            closed_form: false,
            exponent: None,
        };
        let r = check_admissibility(&nl, 1.0);
        assert!(!r.lipschitz_zero.passed);
        assert!(NonlinearitySpec::custom(
            "offset",
            Arc::new(|u: f64| u * u * u + 0.1),
            Arc::new(|u: f64| 3.0 * u * u),
            Arc::new(|u: f64| 6.0 * u),
            Arc::new(|u: f64| u.powi(4) / 4.0 + 0.1 * u),
            3,
        )
        .is_err());
    }

    #[test]
    fn custom_rejects_inconsistent_antiderivative() {
        let r = NonlinearitySpec::custom(
            "bad",
            Arc::new(|u: f64| u * u * u),
            Arc::new(|u: f64| 3.0 * u * u),
            Arc::new(|u: f64| 6.0 * u),
            Arc::new(|u: f64| u.powi(4) / 3.0),
            3,
        );
        assert!(r.is_err());
    }

    #[test]
    fn labels() {
        assert!(NonlinearitySpec::from_label("cubic").unwrap().is_cubic());
        assert!(NonlinearitySpec::from_label("power:3").unwrap().is_cubic());
        assert_eq!(NonlinearitySpec::from_label("kdv").unwrap().label(), "power:2");
        assert!(NonlinearitySpec::from_label("sine").is_err());
    }
}
