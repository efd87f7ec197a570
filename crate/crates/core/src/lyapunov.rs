//! The functional `Λ_{ca}`, the Lyapunov functional `Γ_c`, the nonlinear
//! remainders `N`, `N′`, and residual checks for the fluctuation equation.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::evolve::Snapshot;
use crate::grid::{self, dot, Field};
use crate::hessian::HessianOperator;
use crate::modulate::Decomposition;
use crate::potential::{delta2_b_in_frame, delta_b_in_frame, PotentialSpec};
use crate::profile::{NonlinearitySpec, ProfileBundle};

/// `Λ_{ca}(u) = ∫ ½u_x² + ½cu² − F(u)`.
pub fn lambda_ca(u: &Field, c: f64, nl: &NonlinearitySpec) -> f64 {
    let ux = grid::spectral_derivative(u, 1);
    let h = u.grid().spacing();
    u.values()
        .iter()
        .zip(ux.values())
        .map(|(&v, &d)| 0.5 * d * d + 0.5 * c * v * v - nl.big_f(v))
        .sum::<f64>()
        * h
}

/// `Λ′_{ca}(u) = −u_xx + cu − f(u)`.
pub fn lambda_gradient(u: &Field, c: f64, nl: &NonlinearitySpec) -> Field {
    let uxx = grid::spectral_derivative(u, 2);
    u.zip_map(&uxx, |v, d| -d + c * v - nl.f(v))
}

/// `Λ_{ca}(Q + ξ) − Λ_{ca}(Q)` with the quadratic part expanded to avoid cancellation.
fn lambda_increment(q: &Field, xi: &Field, c: f64, nl: &NonlinearitySpec) -> f64 {
    let qx = grid::spectral_derivative(q, 1);
    let xx = grid::spectral_derivative(xi, 1);
    let h = q.grid().spacing();
    let mut sum = 0.0;
    for j in 0..q.values().len() {
        let (qv, xv) = (q.values()[j], xi.values()[j]);
        let (qd, xd) = (qx.values()[j], xx.values()[j]);
        sum += qd * xd + 0.5 * xd * xd + c * (qv * xv + 0.5 * xv * xv) - potential_increment(nl, qv, xv);
    }
    sum * h
}

/// `F(q + x) − F(q)`.
fn potential_increment(nl: &NonlinearitySpec, q: f64, x: f64) -> f64 {
    match nl.exponent() {
        Some(p) => antiderivative_tail(p, q, x, 1),
        None => nl.big_f(q + x) - nl.big_f(q),
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ_{k ≥ from} C(p, k) q^{p−k} x^k`, the Taylor tail of `u^p` at `q`.
fn power_tail(p: u32, q: f64, x: f64, from: u32) -> f64 {
    (from..=p)
        .map(|k| binomial(p, k) * q.powi((p - k) as i32) * x.powi(k as i32))
        .sum()
}

fn antiderivative_tail(p: u32, q: f64, x: f64, from: u32) -> f64 {
    power_tail(p + 1, q, x, from) / (p + 1) as f64
}

/// Pointwise `(N′, N′ + ½f″(Q)ξ², F(Q+ξ) − F(Q) − f(Q)ξ − ½f′(Q)ξ²)`.
fn remainder_densities(nl: &NonlinearitySpec, q: f64, x: f64) -> (f64, f64, f64) {
    match nl.exponent() {
        Some(p) => (-power_tail(p, q, x, 2), -power_tail(p, q, x, 3), antiderivative_tail(p, q, x, 3)),
        None => {
            let np = -(nl.f(q + x) - nl.f(q) - nl.df(q) * x);
            let n = nl.big_f(q + x) - nl.big_f(q) - nl.f(q) * x - 0.5 * nl.df(q) * x * x;
            (np, np + 0.5 * nl.d2f(q) * x * x, n)
        }
    }
}

fn nonlinear_flux(xi: &Field, q: &Field, nl: &NonlinearitySpec) -> Field {
    q.zip_map(xi, |qv, xv| remainder_densities(nl, qv, xv).0)
}

/// Nonlinear remainders beyond the quadratic part of `Λ` at `Q`.
#[derive(Clone, Debug)]
pub struct Remainders {
    /// `N(ξ) = −∫ F(Q+ξ) − F(Q) − F′(Q)ξ − ½F″(Q)ξ²`.
    pub n_value: f64,
    /// `N′(ξ) = −(f(Q+ξ) − f(Q) − f′(Q)ξ)`.
    pub np: Field,
    /// `N′(ξ) + ½f″(Q)ξ²`.
    pub np_corrected: Field,
}

/// The remainders for `‖ξ‖_{H¹} ≤ 1`; larger fluctuations are rejected.
pub fn remainders(xi: &Field, pb: &ProfileBundle, nl: &NonlinearitySpec) -> Result<Remainders> {
    if !xi.grid().same_as(pb.grid()) {
        return Err(invalid("fluctuation and profile live on different grids"));
    }
    let norm = grid::h1_norm(xi)?;
    if norm > 1.0 + 1e-12 {
        return Err(invalid(format!("remainder estimates need ‖ξ‖_H1 <= 1, got {norm}")));
    }
    let n = xi.values().len();
    let (mut np, mut corr) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut total = 0.0;
    for (&q, &x) in pb.q.values().iter().zip(xi.values()) {
        let (a, b, d) = remainder_densities(nl, q, x);
        np.push(a);
        corr.push(b);
        total += d;
    }
    let g = xi.grid();
    Ok(Remainders {
        n_value: -total * g.spacing(),
        np: Field::from_raw(g, np),
        np_corrected: Field::from_raw(g, corr),
    })
}

/// The two pieces of `Γ_c`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GammaParts {
    /// `Λ_{ca}(Q+ξ) − Λ_{ca}(Q)`.
    pub energy: f64,
    /// `b′(a)⟨(x−a)Q, ξ⟩`.
    pub correction: f64,
}

impl GammaParts {
    pub fn total(&self) -> f64 {
        self.energy + self.correction
    }
}

/// `Γ_c` split into its parts. `offset` is the lab position of the grid origin,
/// so the potential is read at `a + offset`.
pub fn gamma_parts(
    decomp: &Decomposition,
    pot: &PotentialSpec,
    nl: &NonlinearitySpec,
    t: f64,
    offset: f64,
) -> GammaParts {
    let pb = &decomp.profile;
    let energy = lambda_increment(&pb.q, &decomp.xi, pb.params.c, nl);
    let slope = pot.value_unchecked(t, pb.params.a + offset, (0, 1));
    let correction = if slope == 0.0 {
        0.0
    } else {
        slope * dot(&pb.offset_coordinate().hadamard(&pb.q), &decomp.xi)
    };
    GammaParts { energy, correction }
}

/// `Γ_c = Λ_{ca}(Q+ξ) − Λ_{ca}(Q) + b′(a)⟨(x−a)Q, ξ⟩`.
pub fn gamma(decomp: &Decomposition, pot: &PotentialSpec, nl: &NonlinearitySpec, t: f64, offset: f64) -> f64 {
    gamma_parts(decomp, pot, nl, t, offset).total()
}

#[derive(Clone, Debug, Serialize)]
pub struct FunctionalReport {
    /// `Λ_{ca}(Q + ξ)`.
    pub lambda_value: f64,
    pub gamma_value: f64,
    /// `(‖N′‖₂, ‖N′ + ½f″(Q)ξ²‖₂, |N|)`.
    pub remainder_norms: [f64; 3],
    pub xi_h1: f64,
}

pub fn functional_report(
    decomp: &Decomposition,
    pot: &PotentialSpec,
    nl: &NonlinearitySpec,
    t: f64,
    offset: f64,
) -> Result<FunctionalReport> {
    let pb = &decomp.profile;
    let rem = remainders(&decomp.xi, pb, nl)?;
    let report = FunctionalReport {
        lambda_value: lambda_ca(&(&pb.q + &decomp.xi), pb.params.c, nl),
        gamma_value: gamma(decomp, pot, nl, t, offset),
        remainder_norms: [grid::l2_norm(&rem.np), grid::l2_norm(&rem.np_corrected), rem.n_value.abs()],
        xi_h1: grid::h1_norm(&decomp.xi)?,
    };
    let finite = report.lambda_value.is_finite()
        && report.gamma_value.is_finite()
        && report.remainder_norms.iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::NumericDomain("functional report has non-finite entries".into()));
    }
    Ok(report)
}

/// Mismatch between the finite-difference `ξ̇` and the right side of the fluctuation equation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct XiResidual {
    /// `‖ξ̇ − rhs‖₂`.
    pub absolute: f64,
    /// `absolute / ‖ξ̇‖₂`.
    pub relative: f64,
    /// `‖ξ̇‖₂`.
    pub reference: f64,
    pub dt: f64,
}

/// Right side of the fluctuation equation at one frame, given `ȧ` (lab) and `ċ`.
fn xi_rhs(
    frame: &Snapshot,
    decomp: &Decomposition,
    rates: (f64, f64),
    frame_speed: f64,
    pot: &PotentialSpec,
    nl: &NonlinearitySpec,
    second_remainder: bool,
) -> Result<Field> {
    let pb = &decomp.profile;
    let xi = &decomp.xi;
    let (a, c) = (pb.params.a, pb.params.c);
    let grid = xi.grid();
    let (t, offset) = (frame.t, frame.offset);
    let b_a = pot.value_unchecked(t, a + offset, (0, 0));
    let b1_a = pot.value_unchecked(t, a + offset, (0, 1));

    let lq = HessianOperator::new(nl, pb);
    let db = delta_b_in_frame(pot, t, a, grid, offset)?;
    let mut inner = lq.apply(xi)?;
    inner = inner.zip_map(&db.hadamard(xi), |l, d| l + d);
    inner = inner.axpy(b_a - c, xi);
    inner = &inner + &nonlinear_flux(xi, &pb.q, nl);
    let mut source = pb.offset_coordinate().hadamard(&pb.q).scale(b1_a);
    if second_remainder {
        source = &source + &delta2_b_in_frame(pot, t, a, grid, offset)?.hadamard(&pb.q);
    }
    let mut out = grid::spectral_derivative(&(&inner + &source), 1);
    let (tr, nv) = pb.tangent_vectors();
    out = out.axpy(-(rates.0 - c + b_a), &tr);
    out = out.axpy(-rates.1, &nv);
    if frame_speed != 0.0 {
        out = out.axpy(frame_speed, &grid::spectral_derivative(xi, 1));
    }
    Ok(out)
}

/// Compares `(ξ₂ − ξ₁)/Δt` with the average of the right side at both frames,
/// using `ȧ, ċ` from the same differences. Frames may be co-moving; the frame
/// speed is recovered from the offsets. `second_remainder = false` drops the
/// `∂ₓ[δ²b Q]` source.
pub fn xi_equation_residual(
    frames: (&Snapshot, &Snapshot),
    decomps: (&Decomposition, &Decomposition),
    pot: &PotentialSpec,
    nl: &NonlinearitySpec,
    second_remainder: bool,
) -> Result<XiResidual> {
    let (f1, f2) = frames;
    let (d1, d2) = decomps;
    let dt = f2.t - f1.t;
    if dt <= 0.0 || !dt.is_finite() {
        return Err(invalid(format!("frames must be in increasing time order, got dt = {dt}")));
    }
    if !f1.u.grid().same_as(f2.u.grid()) || !d1.xi.grid().same_as(f1.u.grid()) {
        return Err(invalid("frames and decompositions must share a grid"));
    }
    let speed = (f2.offset - f1.offset) / dt;
    let a_dot = (d2.params.a - d1.params.a) / dt + speed;
    let c_dot = (d2.params.c - d1.params.c) / dt;
    let r1 = xi_rhs(f1, d1, (a_dot, c_dot), speed, pot, nl, second_remainder)?;
    let r2 = xi_rhs(f2, d2, (a_dot, c_dot), speed, pot, nl, second_remainder)?;
    let xi_dot = (&d2.xi - &d1.xi).scale(1.0 / dt);
    let mismatch = xi_dot.zip_map(&(&r1 + &r2), |x, r| x - 0.5 * r);
    let absolute = grid::l2_norm(&mismatch);
    let reference = grid::l2_norm(&xi_dot);
    Ok(XiResidual {
        absolute,
        relative: if reference > 0.0 { absolute / reference } else { f64::INFINITY },
        reference,
        dt,
    })
}

/// One sample of `Γ` along a tracked run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GammaSample {
    pub t: f64,
    pub gamma: f64,
    pub xi_h1: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GammaDerivativeReport {
    pub times: Vec<f64>,
    /// Centered `dΓ/dt` at interior samples.
    pub derivative: Vec<f64>,
    /// `ε_a²ε_x³ + (ε_aε_xε_t + ε_aε_x²)‖ξ‖ + ε_aε_x‖ξ‖² + ‖ξ‖⁴`.
    pub bound: Vec<f64>,
    /// Smallest `K` with `|dΓ/dt| ≤ K·bound` at every sample.
    pub fit_constant: f64,
    pub max_derivative: f64,
    pub max_bound: f64,
}

impl GammaDerivativeReport {
    pub fn within(&self, k: f64) -> bool {
        self.fit_constant <= k
    }
}

/// `dΓ/dt` by three-point differences against the derivative bound. Report only.
pub fn gamma_derivative_check(samples: &[GammaSample], pot: &PotentialSpec) -> Result<GammaDerivativeReport> {
    if samples.len() < 3 {
        return Err(invalid("gamma derivative check needs at least 3 samples"));
    }
    let (ea, ex, et) = if pot.is_zero() { (0.0, 0.0, 0.0) } else { (pot.eps_a, pot.eps_x, pot.eps_t) };
    let mut report = GammaDerivativeReport {
        times: Vec::new(),
        derivative: Vec::new(),
        bound: Vec::new(),
        fit_constant: 0.0,
        max_derivative: 0.0,
        max_bound: 0.0,
    };
    for w in samples.windows(3) {
        let (h1, h2) = (w[1].t - w[0].t, w[2].t - w[1].t);
        if h1 <= 0.0 || h2 <= 0.0 {
            return Err(invalid("gamma samples must have strictly increasing times"));
        }
        let d = -h2 / (h1 * (h1 + h2)) * w[0].gamma + (h2 - h1) / (h1 * h2) * w[1].gamma
            + h1 / (h2 * (h1 + h2)) * w[2].gamma;
        let x = w[1].xi_h1;
        let bound = ea * ea * ex.powi(3) + (ea * ex * et + ea * ex * ex) * x + ea * ex * x * x + x.powi(4);
        let ratio = if bound > 0.0 {
            d.abs() / bound
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        report.fit_constant = report.fit_constant.max(ratio);
        report.max_derivative = report.max_derivative.max(d.abs());
        report.max_bound = report.max_bound.max(bound);
        report.times.push(w[1].t);
        report.derivative.push(d);
        report.bound.push(bound);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{trajectory, EvolveConfig};
    use crate::grid::Grid;
    use crate::hessian::{constrained_coercivity, HessianOperator};
    use crate::modulate::{decompose, project_orthogonal};
    use crate::profile::{build_profile, SolitonParams, SpeedInterval};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn cubic_bundle(l: f64, n: usize) -> (Arc<Grid>, NonlinearitySpec, ProfileBundle) {
        let g = Grid::new(l, n).unwrap();
        let nl = NonlinearitySpec::cubic();
        let pb = build_profile(&nl, SolitonParams::new(0.0, 1.0, SpeedInterval::default()).unwrap(), &g).unwrap();
        (g, nl, pb)
    }

    /// Localized random field: Gaussian envelope times a short random cosine series.
    fn random_localized(g: &Arc<Grid>, rng: &mut ChaCha8Rng) -> Field {
        let centre: f64 = rng.gen_range(-2.0..2.0);
        let width: f64 = rng.gen_range(0.8..2.5);
        let coeffs: Vec<(f64, f64)> = (0..4).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..6.3))).collect();
        Field::from_fn(g, |x| {
            let s: f64 = coeffs.iter().enumerate().map(|(k, (a, p))| a * (k as f64 * x + p).cos()).sum();
            s * (-((x - centre) / width).powi(2)).exp()
        })
        .unwrap()
    }

    fn with_h1(v: &Field, size: f64) -> Field {
        v.scale(size / grid::h1_norm(v).unwrap())
    }

    #[test]
    fn zero_field_and_extremality() {
        let (g, nl, pb) = cubic_bundle(50.0, 1024);
        assert_eq!(lambda_ca(&Field::zeros(&g), 1.0, &nl), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let v = random_localized(&g, &mut rng);
            let eps = 1e-4;
            let fd = (lambda_ca(&pb.q.axpy(eps, &v), 1.0, &nl) - lambda_ca(&pb.q.axpy(-eps, &v), 1.0, &nl))
                / (2.0 * eps);
            assert!(fd.abs() <= 1e-6, "{fd}");
            assert!(dot(&lambda_gradient(&pb.q, 1.0, &nl), &v).abs() <= 1e-8);
        }
    }

    #[test]
    fn second_variation_is_hessian() {
        let (g, nl, pb) = cubic_bundle(50.0, 1024);
        let lq = HessianOperator::new(&nl, &pb);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = random_localized(&g, &mut rng);
        let eps = 1e-3;
        let l0 = lambda_ca(&pb.q, 1.0, &nl);
        let fd = (lambda_ca(&pb.q.axpy(eps, &v), 1.0, &nl) + lambda_ca(&pb.q.axpy(-eps, &v), 1.0, &nl) - 2.0 * l0)
            / (eps * eps);
        let exact = lq.quadratic_form(&v).unwrap();
        assert!((fd - exact).abs() <= 1e-4 * exact.abs().max(1.0), "{fd} {exact}");
    }

    fn synthetic(pb: &ProfileBundle, xi: Field) -> Decomposition {
        Decomposition { params: pb.params, xi, residual: [0.0; 2], iterations: 0, history: vec![], profile: pb.clone() }
    }

    #[test]
    fn gamma_quadratic_expansion_and_sandwich() {
        let (g, nl, pb) = cubic_bundle(50.0, 1024);
        let lq = HessianOperator::new(&nl, &pb);
        let zero = synthetic(&pb, Field::zeros(&g));
        assert_eq!(gamma(&zero, &PotentialSpec::zero(), &nl, 0.0, 0.0), 0.0);

        let coarse = Grid::new(30.0, 256).unwrap();
        let pbc = build_profile(&nl, pb.params, &coarse).unwrap();
        let rho = constrained_coercivity(&HessianOperator::new(&nl, &pbc), &pbc).unwrap();
        let pot = PotentialSpec::gaussian(0.05, 0.1, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..8 {
            let xi = with_h1(&project_orthogonal(&random_localized(&g, &mut rng), &pb).unwrap(), 1e-3);
            let d = synthetic(&pb, xi.clone());
            let quad = 0.5 * lq.quadratic_form(&xi).unwrap();
            let gm = gamma(&d, &PotentialSpec::zero(), &nl, 0.0, 0.0);
            assert!((gm - quad).abs() <= 1e-2 * quad.abs(), "{gm} {quad}");
            let s: f64 = 1e-3;
            let c3 = remainders(&xi, &pb, &nl).unwrap().n_value.abs() / s.powi(3);
            let lower = 0.5 * rho * s * s - c3 * s.powi(3) - 0.05 * 0.1 * s;
            assert!(lower <= gamma(&d, &pot, &nl, 0.0, 0.0));
        }
    }

    #[test]
    fn cubic_closed_forms() {
        let (g, nl, pb) = cubic_bundle(50.0, 1024);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..5 {
            let xi = with_h1(&random_localized(&g, &mut rng), 0.7);
            let rem = remainders(&xi, &pb, &nl).unwrap();
            let direct = pb.q.zip_map(&xi, |q, x| -(3.0 * q * x * x + x.powi(3)));
            assert!((&rem.np - &direct).max_abs() <= 1e-12);
            assert!((&rem.np_corrected + &xi.map(|x| x.powi(3))).max_abs() <= 1e-12);
            let n_direct = -dot(&pb.q, &xi.map(|x| x.powi(3))) - 0.25 * xi.values().iter().map(|x| x.powi(4)).sum::<f64>() * g.spacing();
            assert!((rem.n_value - n_direct).abs() <= 1e-12);
        }
        let big = with_h1(&random_localized(&g, &mut rng), 1.5);
        assert!(matches!(remainders(&big, &pb, &nl), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn remainder_duality() {
        let g = Grid::new(40.0, 512).unwrap();
        for nl in [NonlinearitySpec::cubic(), NonlinearitySpec::power(4).unwrap()] {
            let pb = build_profile(&nl, SolitonParams::new(0.0, 1.0, SpeedInterval::default()).unwrap(), &g).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let xi = with_h1(&random_localized(&g, &mut rng), 0.3);
            let v = random_localized(&g, &mut rng);
            let e = 1e-5;
            let np = remainders(&xi.axpy(e, &v), &pb, &nl).unwrap().n_value;
            let nm = remainders(&xi.axpy(-e, &v), &pb, &nl).unwrap().n_value;
            let fd = (np - nm) / (2.0 * e);
            let exact = dot(&remainders(&xi, &pb, &nl).unwrap().np, &v);
            assert!((fd - exact).abs() <= 1e-6, "{} {fd} {exact}", nl.label());
        }
    }

    #[test]
    fn generic_path_matches_binomial() {
        let g = Grid::new(40.0, 512).unwrap();
        let exact = NonlinearitySpec::power(4).unwrap();
        let generic = NonlinearitySpec::custom(
            "u^4",
            Arc::new(|u: f64| u.powi(4)),
            Arc::new(|u: f64| 4.0 * u.powi(3)),
            Arc::new(|u: f64| 12.0 * u * u),
            Arc::new(|u: f64| u.powi(5) / 5.0),
            4,
        )
        .unwrap();
        let pb = build_profile(&exact, SolitonParams::new(0.0, 1.0, SpeedInterval::default()).unwrap(), &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xi = with_h1(&random_localized(&g, &mut rng), 0.5);
        let a = remainders(&xi, &pb, &exact).unwrap();
        let b = remainders(&xi, &pb, &generic).unwrap();
        assert!((&a.np - &b.np).max_abs() <= 1e-12);
        assert!((a.n_value - b.n_value).abs() <= 1e-12);
    }

    #[test]
    fn xi_residual_exact_soliton() {
        let (g, nl, pb) = cubic_bundle(50.0, 1024);
        let u0 = build_profile(&nl, pb.params.with(-10.0, 1.0), &g).unwrap().q;
        let pot = PotentialSpec::zero();
        let cfg = EvolveConfig::new(&g, 1e-3, 0.3, true, 100).unwrap().with_frame_speed(1.0);
        let frames = trajectory(&u0, 0.0, &nl, &pot, &cfg).unwrap();
        let d: Vec<_> = frames
            .iter()
            .map(|f| decompose(&f.u, pb.params.with(-10.0, 1.0), &nl).unwrap())
            .collect();
        for i in 0..frames.len() - 1 {
            let r = xi_equation_residual((&frames[i], &frames[i + 1]), (&d[i], &d[i + 1]), &pot, &nl, true).unwrap();
            assert!(r.absolute <= 1e-6, "{r:?}");
        }
        assert!(xi_equation_residual((&frames[1], &frames[0]), (&d[1], &d[0]), &pot, &nl, true).is_err());
    }

    #[test]
    fn derivative_check_free_case() {
        let samples: Vec<_> = (0..5).map(|i| GammaSample { t: i as f64, gamma: 1e-3, xi_h1: 1e-2 }).collect();
        let r = gamma_derivative_check(&samples, &PotentialSpec::zero()).unwrap();
        assert!(r.max_derivative <= 1e-15);
        assert!(r.within(1e-6));
        assert!(gamma_derivative_check(&samples[..2], &PotentialSpec::zero()).is_err());
    }
}
