//! Symplectic decomposition `u = Q_{ca} + ξ` with `ξ ⊥ ∂ₓ⁻¹ζ^{tr}, ∂ₓ⁻¹ζ^n`.

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::grid::{self, dot, Field, Grid};
use crate::profile::{
    build_profile, delta_prime, second_speed_derivative, NonlinearitySpec, ProfileBundle, SolitonParams,
    SpeedInterval,
};

/// Symplectic pairings of the tangent vectors.
#[derive(Clone, Copy, Debug)]
pub struct OmegaMatrix {
    /// `[[⟨ζ^tr,∂⁻¹ζ^tr⟩, ⟨ζ^n,∂⁻¹ζ^tr⟩], [⟨ζ^tr,∂⁻¹ζ^n⟩, ⟨ζ^n,∂⁻¹ζ^n⟩]]`.
    pub entries: Matrix2<f64>,
    /// `diag(‖ζ^tr‖², ‖ζ^n‖²)`.
    pub normalization: Matrix2<f64>,
    pub delta_prime: f64,
}

impl OmegaMatrix {
    /// `[[0, −δ′], [δ′, 0]]`.
    pub fn closed_form(delta_prime: f64) -> Matrix2<f64> {
        Matrix2::new(0.0, -delta_prime, delta_prime, 0.0)
    }

    /// Largest entrywise deviation from the closed form.
    pub fn deviation(&self) -> f64 {
        (self.entries - Self::closed_form(self.delta_prime)).abs().max()
    }

    /// Matrix of the restricted antiderivative in the tangent basis, `N⁻¹Ω`.
    pub fn restriction(&self) -> Matrix2<f64> {
        let n_inv = Matrix2::new(1.0 / self.normalization[(0, 0)], 0.0, 0.0, 1.0 / self.normalization[(1, 1)]);
        n_inv * self.entries
    }
}

/// Quadrature `Ω_{ca}`.
pub fn omega(nl: &NonlinearitySpec, params: SolitonParams, grid: &Arc<Grid>) -> Result<OmegaMatrix> {
    let dp = delta_prime(nl, params.c, grid)?;
    if dp <= 0.0 {
        return Err(Error::StabilityViolation { c: params.c, delta_prime: dp });
    }
    let pb = build_profile(nl, params, grid)?;
    omega_from_bundle(&pb, dp)
}

pub(crate) fn omega_from_bundle(pb: &ProfileBundle, dp: f64) -> Result<OmegaMatrix> {
    let (tr, nv) = pb.tangent_vectors();
    let a_tr = pb.translation_antiderivative()?;
    let a_n = pb.normalization_antiderivative()?;
    let entries = Matrix2::new(dot(&tr, &a_tr), dot(&nv, &a_tr), dot(&tr, &a_n), dot(&nv, &a_n));
    let normalization = Matrix2::new(dot(&tr, &tr), 0.0, 0.0, dot(&nv, &nv));
    Ok(OmegaMatrix { entries, normalization, delta_prime: dp })
}

/// Acceptable deviation of the quadrature `Ω` from its closed form.
pub const OMEGA_CONSISTENCY: f64 = 1e-4;

/// `Ω⁻¹ = (1/δ′)[[0, 1], [−1, 0]]`, after checking the quadrature matrix.
pub fn omega_inverse(om: &OmegaMatrix, delta_prime: f64) -> Result<Matrix2<f64>> {
    if delta_prime <= 0.0 {
        return Err(Error::StabilityViolation { c: f64::NAN, delta_prime });
    }
    let dev = (om.entries - OmegaMatrix::closed_form(delta_prime)).abs().max();
    if dev > OMEGA_CONSISTENCY {
        return Err(Error::InternalConsistency(format!(
            "quadrature omega deviates from closed form by {dev:.3e}"
        )));
    }
    Ok(Matrix2::new(0.0, 1.0, -1.0, 0.0) / delta_prime)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverMode {
    /// Analytic Jacobian of the orthogonality conditions.
    Newton,
    /// Jacobian frozen at the closed-form `Ω` of the starting point.
    Contraction,
}

#[derive(Clone, Copy, Debug)]
pub struct DecomposeOptions {
    pub mode: SolverMode,
    pub max_iterations: usize,
    /// Relative orthogonality tolerance; the absolute tolerance is this times `‖u‖₂`.
    pub tolerance: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self { mode: SolverMode::Newton, max_iterations: 25, tolerance: 1e-10 }
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub params: SolitonParams,
    pub xi: Field,
    /// `(⟨ξ, ∂ₓ⁻¹ζ^tr⟩, ⟨ξ, ∂ₓ⁻¹ζ^n⟩)` at the solution.
    pub residual: [f64; 2],
    pub iterations: usize,
    /// `‖G‖` before each update and at the end.
    pub history: Vec<f64>,
    pub profile: ProfileBundle,
}

struct Linearization {
    pb: ProfileBundle,
    g: Vector2<f64>,
    jac: Matrix2<f64>,
}

fn linearize(u: &Field, params: SolitonParams, nl: &NonlinearitySpec, jacobian: bool) -> Result<Linearization> {
    let grid = u.grid();
    let pb = build_profile(nl, params, grid)?;
    let (tr, nv) = pb.tangent_vectors();
    let a_tr = pb.translation_antiderivative()?;
    let a_n = pb.normalization_antiderivative()?;
    let diff = &pb.q - u;
    let g = Vector2::new(dot(&diff, &a_tr), dot(&diff, &a_n));
    let jac = if jacobian {
        let d2 = second_speed_derivative(nl, params, grid)?;
        let a_d2 = grid::antiderivative(&d2)?;
        Matrix2::new(
            dot(&tr, &a_tr) - dot(&diff, &tr),
            dot(&nv, &a_tr) - dot(&diff, &nv),
            dot(&tr, &a_n) - dot(&diff, &nv),
            dot(&nv, &a_n) + dot(&diff, &a_d2),
        )
    } else {
        Matrix2::zeros()
    };
    Ok(Linearization { pb, g, jac })
}

fn check_interval(params: &SolitonParams) -> Result<()> {
    let interval = params.interval;
    if !params.c.is_finite() || !interval.contains(params.c) {
        return Err(Error::ParameterEscape { c: params.c, min: interval.min, max: interval.max });
    }
    Ok(())
}

/// Decomposes `u` with the default Newton solver.
pub fn decompose(u: &Field, guess: SolitonParams, nl: &NonlinearitySpec) -> Result<Decomposition> {
    decompose_with(u, guess, nl, &DecomposeOptions::default())
}

pub fn decompose_with(
    u: &Field,
    guess: SolitonParams,
    nl: &NonlinearitySpec,
    opts: &DecomposeOptions,
) -> Result<Decomposition> {
    check_interval(&guess)?;
    let tol = opts.tolerance * grid::l2_norm(u);
    let frozen = match opts.mode {
        SolverMode::Contraction => {
            let dp = delta_prime(nl, guess.c, u.grid())?;
            Some(OmegaMatrix::closed_form(dp))
        }
        SolverMode::Newton => None,
    };
    let mut params = guess;
    let mut lin = linearize(u, params, nl, frozen.is_none())?;
    let mut history = vec![lin.g.norm()];
    for iteration in 0..=opts.max_iterations {
        if lin.g.norm() <= tol {
            return Ok(finish(u, lin, iteration, history));
        }
        if iteration == opts.max_iterations {
            break;
        }
        let jac = frozen.unwrap_or(lin.jac);
        let step = jac
            .lu()
            .solve(&(-lin.g))
            .ok_or(Error::DecompositionFailure { iterations: iteration, residual: lin.g.norm() })?;
        let mut lambda = 1.0;
        loop {
            let trial = params.with(params.a + lambda * step[0], params.c + lambda * step[1]);
            check_interval(&trial)?;
            let next = linearize(u, trial, nl, frozen.is_none())?;
            if frozen.is_some() || next.g.norm() < lin.g.norm() || lambda < 1.0 / 32.0 {
                params = trial;
                lin = next;
                break;
            }
            lambda *= 0.5;
        }
        history.push(lin.g.norm());
    }
    Err(Error::DecompositionFailure { iterations: opts.max_iterations, residual: lin.g.norm() })
}

fn finish(u: &Field, lin: Linearization, iterations: usize, history: Vec<f64>) -> Decomposition {
    let xi = u - &lin.pb.q;
    Decomposition {
        params: lin.pb.params,
        xi,
        residual: [-lin.g[0], -lin.g[1]],
        iterations,
        history,
        profile: lin.pb,
    }
}

/// Largest guess offsets from which [`decompose`] still recovers the exact profile.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct Basin {
    /// Offset in `a` recovered from both sides.
    pub translation: f64,
    /// Offset in `c` recovered from both sides, capped by the distance to the edge of `I`.
    pub speed: f64,
}

/// Scans offsets growing by 25% from 0.01 until recovery fails (to 1e−8) on either side.
pub fn convergence_basin(nl: &NonlinearitySpec, params: SolitonParams, grid: &Arc<Grid>) -> Result<Basin> {
    let u = build_profile(nl, params, grid)?.q;
    let recovers = |a: f64, c: f64| -> bool {
        let Ok(guess) = SolitonParams::new(a, c, params.interval) else { return false };
        decompose(&u, guess, nl)
            .map(|d| (d.params.a - params.a).abs() <= 1e-8 && (d.params.c - params.c).abs() <= 1e-8)
            .unwrap_or(false)
    };
    let scan = |cap: f64, ok: &dyn Fn(f64) -> bool| {
        let mut best = 0.0;
        let mut s = 0.01;
        while s <= cap && ok(s) {
            best = s;
            s *= 1.25;
        }
        best
    };
    let translation = scan(0.5 * grid.half_length(), &|s| recovers(params.a - s, params.c) && recovers(params.a + s, params.c));
    let room = (params.c - params.interval.min).min(params.interval.max - params.c);
    let speed = scan(room, &|s| recovers(params.a, params.c - s) && recovers(params.a, params.c + s));
    Ok(Basin { translation, speed })
}

/// First-frame guess: `a` at the grid maximum, `c = (max u)²/2` clamped into `I`.
pub fn initial_guess(u: &Field, interval: SpeedInterval) -> SolitonParams {
    let (j, peak) = u
        .values()
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best });
    let c = (0.5 * peak * peak).clamp(interval.min, interval.max);
    SolitonParams { a: u.grid().x(j), c, interval }
}

/// Removes from `v` its components along `∂ₓ⁻¹ζ^tr = −Q` and `∂ₓ⁻¹ζ^n` (Gram–Schmidt).
pub fn project_orthogonal(v: &Field, pb: &ProfileBundle) -> Result<Field> {
    let e1 = pb.translation_antiderivative()?;
    let mut e2 = pb.normalization_antiderivative()?;
    let e1 = e1.scale(1.0 / grid::l2_norm(&e1));
    e2 = e2.axpy(-dot(&e2, &e1), &e1);
    let e2 = e2.scale(1.0 / grid::l2_norm(&e2));
    let mut out = v.axpy(-dot(v, &e1), &e1);
    out = out.axpy(-dot(&out, &e2), &e2);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::SpeedInterval;

    fn setup() -> (Arc<Grid>, NonlinearitySpec) {
        (Grid::new(50.0, 1024).unwrap(), NonlinearitySpec::cubic())
    }

    fn params(a: f64, c: f64) -> SolitonParams {
        SolitonParams::new(a, c, SpeedInterval::new(0.25, 5.0).unwrap()).unwrap()
    }

    #[test]
    fn omega_closed_form_and_inverse() {
        let (g, nl) = setup();
        for (c, dp) in [(1.0, 1.0), (4.0, 0.5)] {
            let om = omega(&nl, params(0.0, c), &g).unwrap();
            assert!(om.deviation() <= 1e-5, "{c}: {}", om.deviation());
            assert!((om.entries[(1, 0)] - dp).abs() <= 1e-6);
            let inv = omega_inverse(&om, om.delta_prime).unwrap();
            assert!((om.entries * inv - Matrix2::identity()).abs().max() <= 1e-5);
        }
    }

    #[test]
    fn omega_inverse_rejects_bad_input() {
        let om = OmegaMatrix {
            entries: Matrix2::new(0.0, -1.0, 1.0, 0.0),
            normalization: Matrix2::identity(),
            delta_prime: 1.0,
        };
        assert!(matches!(omega_inverse(&om, -1.0), Err(Error::StabilityViolation { .. })));
        assert!(matches!(omega_inverse(&om, 2.0), Err(Error::InternalConsistency(_))));
    }

    #[test]
    fn exact_fit_recovery() {
        let (g, nl) = setup();
        let u = build_profile(&nl, params(2.0, 1.3), &g).unwrap().q;
        let d = decompose(&u, params(1.9, 1.2), &nl).unwrap();
        assert!((d.params.a - 2.0).abs() <= 1e-9 && (d.params.c - 1.3).abs() <= 1e-9, "{:?}", d.params);
        assert!(grid::h1_norm(&d.xi).unwrap() <= 1e-9);
    }

    #[test]
    fn contraction_mode_converges() {
        let (g, nl) = setup();
        let u = build_profile(&nl, params(0.3, 1.05), &g).unwrap().q;
        let opts = DecomposeOptions { mode: SolverMode::Contraction, ..Default::default() };
        let d = decompose_with(&u, params(0.25, 1.0), &nl, &opts).unwrap();
        assert!((d.params.a - 0.3).abs() <= 1e-8 && (d.params.c - 1.05).abs() <= 1e-8);
        let newton = decompose(&u, params(0.25, 1.0), &nl).unwrap();
        assert!(newton.iterations < d.iterations);
    }

    #[test]
    fn normalization_perturbation_shifts_speed() {
        let (g, nl) = setup();
        let pb = build_profile(&nl, params(0.0, 1.0), &g).unwrap();
        let u = pb.q.axpy(0.01, &pb.dq_dc);
        let d = decompose(&u, params(0.0, 1.0), &nl).unwrap();
        assert!((d.params.c - 1.01).abs() < 1e-3, "{:?}", d.params);
        let xi = grid::l2_norm(&d.xi);
        assert!(xi < 1e-3 && xi > 1e-6, "{xi}");
    }

    #[test]
    fn speed_escape_is_reported() {
        let (g, nl) = setup();
        let u = build_profile(&nl, params(0.0, 1.9), &g).unwrap().q;
        let narrow = SolitonParams::new(0.0, 1.0, SpeedInterval::new(0.5, 1.5).unwrap()).unwrap();
        assert!(matches!(decompose(&u, narrow, &nl), Err(Error::ParameterEscape { .. })));
    }

    #[test]
    fn initial_guess_inverts_amplitude() {
        let (g, nl) = setup();
        let u = build_profile(&nl, params(g.x(600), 1.2), &g).unwrap().q;
        let p = initial_guess(&u, SpeedInterval::default());
        assert_eq!(p.a, g.x(600));
        assert!((p.c - 1.2).abs() < 1e-12);
    }

    #[test]
    fn projection_removes_constraint_components() {
        let (g, nl) = setup();
        let pb = build_profile(&nl, params(0.0, 1.0), &g).unwrap();
        let v = Field::from_fn(&g, |x| (-(x - 1.0).powi(2) / 4.0).exp()).unwrap();
        let p = project_orthogonal(&v, &pb).unwrap();
        assert!(dot(&p, &pb.q).abs() < 1e-12);
        assert!(dot(&p, &pb.normalization_antiderivative().unwrap()).abs() < 1e-12);
    }
}
