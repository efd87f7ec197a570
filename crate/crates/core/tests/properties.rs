use std::sync::Arc;

use proptest::prelude::*;

use bkdv::evolve::{self, EvolveConfig, Stepper};
use bkdv::grid::{self, h1_norm, inner_product, l2_norm};
use bkdv::lyapunov::lambda_gradient;
use bkdv::modulate::decompose;
use bkdv::potential::PotentialSpec;
use bkdv::profile::{build_profile, delta_prime, NonlinearitySpec, SolitonParams, SpeedInterval};
use bkdv::{Field, Grid};

fn grid() -> Arc<Grid> {
    Grid::new(30.0, 512).unwrap()
}

fn params(a: f64, c: f64) -> SolitonParams {
    SolitonParams::new(a, c, SpeedInterval::default()).unwrap()
}

/// Smooth localized field built from a few random modes.
fn bump(g: &Arc<Grid>, amps: &[f64], centre: f64) -> Field {
    Field::from_fn(g, |x| {
        let s: f64 = amps.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * 0.6 * x).sin()).sum();
        (s + amps[0]) * (-(x - centre).powi(2) / 4.0).exp()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn translation_is_a_group_action(amps in prop::collection::vec(-1.0..1.0f64, 4), s1 in -5.0..5.0f64, s2 in -5.0..5.0f64) {
        let g = grid();
        let f = bump(&g, &amps, 0.0);
        let two = f.translate(s1).translate(s2);
        let one = f.translate(s1 + s2);
        prop_assert!((&two - &one).max_abs() <= 1e-11 * (1.0 + f.max_abs()));
        prop_assert!((h1_norm(&f.translate(s1)).unwrap() - h1_norm(&f).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn antiderivative_inverts_derivative(amps in prop::collection::vec(-1.0..1.0f64, 4), centre in -3.0..3.0f64) {
        let g = grid();
        let f = bump(&g, &amps, centre);
        let df = grid::derivative(&f, 1).unwrap();
        let back = grid::antiderivative(&df).unwrap();
        prop_assert!((&back - &f).max_abs() <= 1e-9);
        // ∂ₓ is skew-adjoint on the torus.
        let h = bump(&g, &amps[1..], -centre);
        let dh = grid::derivative(&h, 1).unwrap();
        let skew = inner_product(&df, &h).unwrap() + inner_product(&f, &dh).unwrap();
        prop_assert!(skew.abs() <= 1e-10);
    }

    #[test]
    fn profile_is_critical_point_of_lambda(c in 0.6..1.9f64, a in -4.0..4.0f64) {
        let g = grid();
        let nl = NonlinearitySpec::cubic();
        let pb = build_profile(&nl, params(a, c), &g).unwrap();
        let res = l2_norm(&lambda_gradient(&pb.q, c, &nl));
        prop_assert!(res <= 1e-8, "residual {res}");
        let dp = delta_prime(&nl, c, &g).unwrap();
        prop_assert!((dp - 1.0 / c.sqrt()).abs() <= 1e-6);
    }

    #[test]
    fn decomposition_satisfies_constraints(
        a in -2.0..2.0f64,
        c in 0.9..1.5f64,
        amps in prop::collection::vec(-1.0..1.0f64, 4),
        size in 0.001..0.05f64,
    ) {
        let g = Grid::new(40.0, 512).unwrap();
        let nl = NonlinearitySpec::cubic();
        let v = bump(&g, &amps, a);
        let u = &build_profile(&nl, params(a, c), &g).unwrap().q + &v.scale(size / h1_norm(&v).unwrap());
        let d = decompose(&u, params(a, c), &nl).unwrap();
        let recon = &d.profile.q + &d.xi;
        prop_assert!((&recon - &u).max_abs() <= 1e-12);
        let tol = 1e-9 * l2_norm(&u);
        prop_assert!(d.residual[0].abs() <= tol && d.residual[1].abs() <= tol, "{:?}", d.residual);
        prop_assert!((d.params.a - a).abs() < 0.5 && (d.params.c - c).abs() < 0.2);
    }

    #[test]
    fn free_flow_conserves_mass_and_momentum(amps in prop::collection::vec(-0.3..0.3f64, 4)) {
        let g = Grid::new(30.0, 256).unwrap();
        let nl = NonlinearitySpec::cubic();
        let pot = PotentialSpec::zero();
        let u0 = bump(&g, &amps, 0.0);
        let cfg = EvolveConfig::new(&g, 2e-3, 0.5, true, 1).unwrap();
        let mut s = Stepper::new(&u0, 0.0, &nl, &pot, &cfg).unwrap();
        s.advance(cfg.steps()).unwrap();
        let u = s.field();
        prop_assert!((evolve::mass(&u) - evolve::mass(&u0)).abs() <= 1e-12);
        let p0 = evolve::momentum(&u0);
        prop_assert!((evolve::momentum(&u) - p0).abs() <= 1e-8 * p0.max(1e-3));
    }
}
