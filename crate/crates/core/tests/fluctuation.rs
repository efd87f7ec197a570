use bkdv::evolve::{trajectory, EvolveConfig, Snapshot};
use bkdv::lyapunov::{xi_equation_residual, XiResidual};
use bkdv::modulate::{decompose, Decomposition};
use bkdv::potential::PotentialSpec;
use bkdv::profile::{build_profile, NonlinearitySpec, SolitonParams, SpeedInterval};
use bkdv::Grid;

fn run(pot: &PotentialSpec, record_every: usize) -> (Vec<Snapshot>, Vec<Decomposition>) {
    let g = Grid::new(50.0, 1024).unwrap();
    let nl = NonlinearitySpec::cubic();
    let p0 = SolitonParams::new(-6.0, 1.0, SpeedInterval::default()).unwrap();
    let u0 = build_profile(&nl, p0, &g).unwrap().q;
    let cfg = EvolveConfig::new(&g, 1e-3, 6.0, true, record_every).unwrap().with_frame_speed(1.0);
    let frames = trajectory(&u0, 0.0, &nl, pot, &cfg).unwrap();
    let mut guess = p0;
    let decomps = frames
        .iter()
        .map(|f| {
            let d = decompose(&f.u, guess, &nl).unwrap();
            guess = d.params;
            d
        })
        .collect();
    (frames, decomps)
}

fn worst(frames: &[Snapshot], d: &[Decomposition], pot: &PotentialSpec, full: bool) -> XiResidual {
    let nl = NonlinearitySpec::cubic();
    (1..frames.len() - 1)
        .map(|i| xi_equation_residual((&frames[i], &frames[i + 1]), (&d[i], &d[i + 1]), pot, &nl, full).unwrap())
        .max_by(|a, b| a.relative.total_cmp(&b.relative))
        .unwrap()
}

#[test]
fn perturbed_residual_and_step_halving() {
    let pot = PotentialSpec::gaussian(0.05, 0.1, 0.0).unwrap();
    let (f1, d1) = run(&pot, 50);
    let (f2, d2) = run(&pot, 25);
    let coarse = worst(&f1, &d1, &pot, true);
    let fine = worst(&f2, &d2, &pot, true);
    assert!(coarse.relative <= 1e-2);
    assert!(fine.relative <= 0.6 * coarse.relative);
}

#[test]
fn dropping_second_remainder_is_visible() {
    let pot = PotentialSpec::gaussian(0.05, 0.3, 0.0).unwrap();
    let (f, d) = run(&pot, 100);
    let full = worst(&f, &d, &pot, true);
    let ablated = worst(&f, &d, &pot, false);
    assert!(ablated.relative >= 10.0 * full.relative);
}
