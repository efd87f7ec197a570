//! Experiment configuration and orchestration: tracked PDE runs, comparison with
//! the reduced dynamics, parameter sweeps, and their CSV/JSON outputs.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effective::{self, EffectiveState, RatioTable};
use crate::error::{Error, Result};
use crate::evolve::{self, balance_audit, BalanceReport, EvolveConfig, Snapshot, Stepper};
use crate::fit::{log_log_fit, PowerFit};
use crate::grid::{self, Field, Grid};
use crate::hessian::{constrained_coercivity, HessianOperator};
use crate::lyapunov::{self, GammaSample};
use crate::modulate::{convergence_basin, decompose, omega, project_orthogonal, Basin};
use crate::potential::{Modulation, PotentialFamily, PotentialSpec};
use crate::profile::{build_profile, delta_prime, NonlinearitySpec, SolitonParams, SpeedInterval};

/// Frozen column order of `track.csv`.
pub const TRACK_HEADER: &str = "t,a,c,xi_h1,xi_l2,gamma,hamiltonian,momentum,mass,iterations";
/// Highest mode index `|m|` in the random initial perturbation.
pub const PERTURBATION_MODES: usize = 8;
/// Acceptance factor in `max‖ξ‖_{H¹} ≤ K(ε₀ + √(ε_aε_xε₀) + ε_x + ε_t)`.
pub const TUBE_FACTOR: f64 = 10.0;
/// The frame is recentred once `|a|` in frame coordinates exceeds this fraction of `L`.
pub const RECENTER_FRACTION: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub half_length: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_length: 50.0, points: 1024 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    /// `zero`, `gaussian_bump` or `tanh_ramp_windowed`.
    pub family: String,
    pub eps_a: f64,
    pub eps_x: f64,
    pub eps_t: f64,
    /// `cos`, `sin` or `constant`.
    pub modulation: String,
    /// Window half-length of the tanh ramp.
    pub window: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            family: "zero".into(),
            eps_a: 0.0,
            eps_x: 0.0,
            eps_t: 0.0,
            modulation: "cos".into(),
            window: 40.0,
        }
    }
}

/// One experiment. Unknown keys are rejected when parsing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    /// Label understood by [`NonlinearitySpec::from_label`].
    pub nonlinearity: String,
    pub speed_interval: [f64; 2],
    pub potential: PotentialConfig,
    /// Initial lab position of the soliton.
    pub a0: f64,
    pub c0: f64,
    /// `H¹` size of the initial perturbation.
    pub eps0: f64,
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub dealias: bool,
    /// Speed of the computational frame; defaults to `c0`.
    pub frame_speed: Option<f64>,
    /// Allowed horizon is `safety_factor / (ε_aε_x)`.
    pub safety_factor: f64,
    pub out: Option<PathBuf>,
    pub write_frames: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            nonlinearity: "cubic".into(),
            speed_interval: [0.5, 2.0],
            potential: PotentialConfig::default(),
            a0: 0.0,
            c0: 1.0,
            eps0: 0.0,
            seed: 0,
            dt: 1e-3,
            t_end: 10.0,
            record_every: 100,
            dealias: true,
            frame_speed: None,
            safety_factor: 1.0,
            out: None,
            write_frames: false,
        }
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        let p = &self.potential;
        let family = PotentialFamily::from_label(&p.family)?;
        if family == PotentialFamily::Zero {
            return Ok(PotentialSpec::zero());
        }
        PotentialSpec::new(family, p.eps_a, p.eps_x, p.eps_t, Modulation::from_label(&p.modulation)?, p.window)
    }

    /// `safety_factor/(ε_aε_x)`, or `None` when the potential cannot move the soliton.
    pub fn horizon(&self) -> Result<Option<f64>> {
        let pot = self.potential_spec()?;
        let rate = pot.eps_a * pot.eps_x;
        Ok((!pot.is_zero() && rate > 0.0).then(|| self.safety_factor / rate))
    }

    /// Validates every sub-configuration and assembles the run.
    pub fn setup(&self) -> Result<Setup> {
        let wrap = |e: Error| match e {
            Error::InvalidArgument(m) => config_error(m),
            other => other,
        };
        if !(self.safety_factor > 0.0) {
            return Err(config_error("safety_factor must be positive"));
        }
        if !(self.eps0 >= 0.0 && self.eps0.is_finite()) {
            return Err(config_error(format!("eps0 must be nonnegative, got {}", self.eps0)));
        }
        let grid = Grid::new(self.grid.half_length, self.grid.points).map_err(wrap)?;
        let nl = NonlinearitySpec::from_label(&self.nonlinearity).map_err(wrap)?;
        let pot = self.potential_spec().map_err(wrap)?;
        let interval = SpeedInterval::new(self.speed_interval[0], self.speed_interval[1]).map_err(wrap)?;
        SolitonParams::new(0.0, self.c0, interval).map_err(wrap)?;
        if let Some(h) = self.horizon()? {
            if self.t_end > h * (1.0 + 1e-9) {
                return Err(config_error(format!(
                    "t_end = {} exceeds the horizon safety_factor/(eps_a eps_x) = {h}",
                    self.t_end
                )));
            }
        }
        let speed = self.frame_speed.unwrap_or(self.c0);
        let evolve = EvolveConfig::new(&grid, self.dt, self.t_end, self.dealias, self.record_every)
            .map_err(wrap)?
            .with_frame_speed(speed)
            .with_frame_origin(self.a0);
        Ok(Setup { config: self.clone(), grid, nl, pot, interval, evolve })
    }
}

/// A validated experiment.
#[derive(Clone, Debug)]
pub struct Setup {
    pub config: ExperimentConfig,
    pub grid: Arc<Grid>,
    pub nl: NonlinearitySpec,
    pub pot: PotentialSpec,
    pub interval: SpeedInterval,
    pub evolve: EvolveConfig,
}

impl Setup {
    /// Initial field on the frame grid and its parameters in frame coordinates.
    pub fn initial(&self) -> Result<(Field, SolitonParams)> {
        let params = SolitonParams::new(0.0, self.config.c0, self.interval)?;
        let pb = build_profile(&self.nl, params, &self.grid)?;
        let xi = perturbation(&pb, self.config.eps0, self.config.seed)?;
        Ok((&pb.q + &xi, params))
    }
}

/// Random field `Σ_{1 ≤ m ≤ modes} α_m cos(k_m x) + β_m sin(k_m x)` with uniform coefficients.
pub fn band_limited_field(grid: &Arc<Grid>, seed: u64, modes: usize) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<(f64, f64)> = (0..modes).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let base = std::f64::consts::PI / grid.half_length();
    Field::from_fn(grid, |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let k = base * (i + 1) as f64;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum()
    })
    .expect("trigonometric sum is finite")
}

/// `ε₀`-sized perturbation obeying the orthogonality conditions at `pb`.
pub fn perturbation(pb: &crate::profile::ProfileBundle, eps0: f64, seed: u64) -> Result<Field> {
    let grid = pb.grid();
    if eps0 == 0.0 {
        return Ok(Field::zeros(grid));
    }
    let v = project_orthogonal(&band_limited_field(grid, seed, PERTURBATION_MODES), pb)?;
    Ok(v.scale(eps0 / grid::h1_norm(&v)?))
}

/// One row of `track.csv`; `a` is the lab position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrackRow {
    pub t: f64,
    pub a: f64,
    pub c: f64,
    pub xi_h1: f64,
    pub xi_l2: f64,
    pub gamma: f64,
    pub hamiltonian: f64,
    pub momentum: f64,
    pub mass: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrackStatus {
    Completed,
    DecompositionFailure { t: f64, residual: f64 },
    ParameterEscape { t: f64, c: f64 },
}

impl TrackStatus {
    pub fn completed(&self) -> bool {
        matches!(self, Self::Completed)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Completed => "completed",
            Self::DecompositionFailure { .. } => "decomposition_failure",
            Self::ParameterEscape { .. } => "parameter_escape",
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrackRecord {
    pub rows: Vec<TrackRow>,
    pub status: TrackStatus,
    /// Recorded fields, kept only on request.
    pub frames: Vec<Snapshot>,
}

impl TrackRecord {
    /// Time of the last successful decomposition.
    pub fn t_reached(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.t)
    }

    pub fn max_xi_h1(&self) -> f64 {
        self.rows.iter().fold(0.0, |m, r| m.max(r.xi_h1))
    }

    pub fn gamma_samples(&self) -> Vec<GammaSample> {
        self.rows.iter().map(|r| GammaSample { t: r.t, gamma: r.gamma, xi_h1: r.xi_h1 }).collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(w, "{TRACK_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                r.t, r.a, r.c, r.xi_h1, r.xi_l2, r.gamma, r.hamiltonian, r.momentum, r.mass, r.iterations
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evolves and decomposes every `record_every` steps with warm starts. A
/// decomposition failure or parameter escape ends the record without error.
pub fn track(setup: &Setup, keep_frames: bool) -> Result<TrackRecord> {
    let (u0, p0) = setup.initial()?;
    let (nl, pot) = (&setup.nl, &setup.pot);
    let mut cfg = setup.evolve;
    let mut stepper = Stepper::new(&u0, 0.0, nl, pot, &cfg)?;
    let (total, every) = (cfg.steps(), cfg.record_every);
    let mut done = 0;
    let mut guess = p0;
    let mut rows = Vec::new();
    let mut frames = Vec::new();
    let status = loop {
        let (t, offset) = (stepper.time(), stepper.frame_offset());
        let u = if done == 0 { u0.clone() } else { stepper.field() };
        let d = match decompose(&u, guess, nl) {
            Ok(d) => d,
            Err(Error::DecompositionFailure { residual, .. }) => {
                break TrackStatus::DecompositionFailure { t, residual }
            }
            Err(Error::ParameterEscape { c, .. }) => break TrackStatus::ParameterEscape { t, c },
            Err(e) => return Err(e),
        };
        rows.push(TrackRow {
            t,
            a: d.params.a + offset,
            c: d.params.c,
            xi_h1: grid::h1_norm(&d.xi)?,
            xi_l2: grid::l2_norm(&d.xi),
            gamma: lyapunov::gamma(&d, pot, nl, t, offset),
            hamiltonian: evolve::hamiltonian(&u, t, nl, pot, offset),
            momentum: evolve::momentum(&u),
            mass: evolve::mass(&u),
            iterations: d.iterations,
        });
        guess = d.params;
        if d.params.a.abs() > RECENTER_FRACTION * setup.grid.half_length() {
            // Shift the grid so the soliton sits at frame coordinate 0 again.
            let shift = d.params.a;
            cfg = cfg.with_frame_origin(offset + shift - cfg.frame_speed * t);
            stepper = Stepper::new(&u.translate(-shift), t, nl, pot, &cfg)?;
            guess = d.params.with(0.0, d.params.c);
        }
        if keep_frames {
            frames.push(Snapshot { t, offset, u });
        }
        if done >= total {
            break TrackStatus::Completed;
        }
        let chunk = every.min(total - done);
        stepper.advance(chunk)?;
        done += chunk;
    };
    Ok(TrackRecord { rows, status, frames })
}

fn prepare_out(setup: &Setup) -> Result<Option<PathBuf>> {
    match &setup.config.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            fs::write(dir.join("config.json"), setup.config.to_json())?;
            Ok(Some(dir.clone()))
        }
        None => Ok(None),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InternalConsistency(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

fn record_failure(out: &Option<PathBuf>, err: &Error) {
    if let Some(dir) = out {
        let _ = fs::write(dir.join("failure.txt"), format!("{err}\n"));
    }
}

#[derive(Clone, Debug, Serialize)]
struct TrackSummary {
    status: TrackStatus,
    t_end: f64,
    t_reached: f64,
    max_xi_h1: f64,
    rows: usize,
}

/// Validates `cfg`, runs [`track`], and writes `track.csv`, `summary.json` and optional frames.
pub fn run_track(cfg: &ExperimentConfig) -> Result<TrackRecord> {
    let setup = cfg.setup()?;
    let out = prepare_out(&setup)?;
    let record = track(&setup, cfg.write_frames).inspect_err(|e| record_failure(&out, e))?;
    if let Some(dir) = out {
        record.write_csv(&dir.join("track.csv"))?;
        let summary = TrackSummary {
            status: record.status,
            t_end: cfg.t_end,
            t_reached: record.t_reached(),
            max_xi_h1: record.max_xi_h1(),
            rows: record.rows.len(),
        };
        write_json(&dir.join("summary.json"), &summary)?;
        if cfg.write_frames {
            let mut w = BufWriter::new(fs::File::create(dir.join("frames.bin"))?);
            for f in &record.frames {
                evolve::write_frame_binary(&mut w, f.t, &f.u)?;
            }
            w.flush()?;
        }
    }
    Ok(record)
}

/// PDE only: frames from `t = 0` to `t_end`, written as `frames.csv` when `out` is set.
pub fn run_simulate(cfg: &ExperimentConfig) -> Result<Vec<Snapshot>> {
    let setup = cfg.setup()?;
    let out = prepare_out(&setup)?;
    let (u0, _) = setup.initial()?;
    let frames = evolve::trajectory(&u0, 0.0, &setup.nl, &setup.pot, &setup.evolve)
        .inspect_err(|e| record_failure(&out, e))?;
    if let Some(dir) = out {
        evolve::write_frames_csv(&dir.join("frames.csv"), &frames)?;
    }
    Ok(frames)
}

/// Balance-law audit over a PDE run; writes `balance.json` when `out` is set.
pub fn run_audit(cfg: &ExperimentConfig) -> Result<BalanceReport> {
    let setup = cfg.setup()?;
    let (u0, _) = setup.initial()?;
    let frames = evolve::trajectory(&u0, 0.0, &setup.nl, &setup.pot, &setup.evolve)?;
    let report = balance_audit(&frames, &setup.nl, &setup.pot)?;
    if let Some(dir) = prepare_out(&setup)? {
        write_json(&dir.join("balance.json"), &report)?;
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub c: f64,
    /// Lowest eigenvalues of `L_Q`, ascending.
    pub eigenvalues: Vec<f64>,
    pub discrete_count: usize,
    pub negative_count: usize,
    /// `|⟨v₁, ζ^tr⟩| / (‖v₁‖‖ζ^tr‖)` for the second eigenvector.
    pub zero_mode_alignment: f64,
    pub rho: f64,
    pub delta_prime: f64,
    pub omega: [[f64; 2]; 2],
    /// Empirical convergence basin of the decomposition around the profile.
    pub basin: Basin,
}

/// Spectrum of `L_Q`, constrained coercivity and `Ω` at `(a, c) = (0, c0)`.
pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<SpectrumReport> {
    let setup = cfg.setup()?;
    let params = SolitonParams::new(0.0, cfg.c0, setup.interval)?;
    let pb = build_profile(&setup.nl, params, &setup.grid)?;
    let lq = HessianOperator::new(&setup.nl, &pb);
    let spec = lq.spectrum(6)?;
    let (tr, _) = pb.tangent_vectors();
    let v = &spec.pairs[1].1;
    let alignment = grid::inner_product(v, &tr)?.abs() / (grid::l2_norm(v) * grid::l2_norm(&tr));
    let om = omega(&setup.nl, params, &setup.grid)?;
    let report = SpectrumReport {
        c: cfg.c0,
        eigenvalues: spec.pairs.iter().map(|p| p.0).collect(),
        discrete_count: spec.discrete_count,
        negative_count: spec.eigenvalues.iter().filter(|&&l| l < -1e-8).count(),
        zero_mode_alignment: alignment,
        rho: constrained_coercivity(&lq, &pb)?,
        delta_prime: delta_prime(&setup.nl, cfg.c0, &setup.grid)?,
        omega: [[om.entries[(0, 0)], om.entries[(0, 1)]], [om.entries[(1, 0)], om.entries[(1, 1)]]],
        basin: convergence_basin(&setup.nl, params, &setup.grid)?,
    };
    if let Some(dir) = prepare_out(&setup)? {
        write_json(&dir.join("spectrum.json"), &report)?;
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CompareSample {
    pub t: f64,
    pub a_pde: f64,
    pub a_ode: f64,
    pub c_pde: f64,
    pub c_ode: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CompareReport {
    pub status: TrackStatus,
    pub t_reached: f64,
    pub max_a_error: f64,
    pub max_c_error: f64,
    /// `c_ODE(T) − c₀`.
    pub delta_c_total: f64,
    /// `∫₀ᵀ (c_ODE − c₀) dt`.
    pub drift_integral: f64,
    /// Largest gap between finite-difference PDE velocities and the reduced right side.
    pub velocity_remainder: f64,
    pub samples: Vec<CompareSample>,
}

impl CompareReport {
    pub fn c_ratio(&self) -> f64 {
        self.max_c_error / self.delta_c_total.abs()
    }

    pub fn a_ratio(&self) -> f64 {
        self.max_a_error / self.drift_integral.abs()
    }
}

/// Tracks the PDE and integrates the reduced system from the same `(a₀, c₀)`.
pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareReport> {
    let setup = cfg.setup()?;
    let out = prepare_out(&setup)?;
    let record = track(&setup, false).inspect_err(|e| record_failure(&out, e))?;
    let report = compare_with_reduced(&setup, &record)?;
    if let Some(dir) = out {
        record.write_csv(&dir.join("track.csv"))?;
        let mut w = BufWriter::new(fs::File::create(dir.join("compare.csv"))?);
        writeln!(w, "t,a_pde,a_ode,c_pde,c_ode")?;
        for s in &report.samples {
            writeln!(w, "{:e},{:e},{:e},{:e},{:e}", s.t, s.a_pde, s.a_ode, s.c_pde, s.c_ode)?;
        }
        w.flush()?;
        let mut summary = report.clone();
        summary.samples.clear();
        write_json(&dir.join("compare.json"), &summary)?;
    }
    Ok(report)
}

/// Reduced-dynamics comparison for an existing track.
pub fn compare_with_reduced(setup: &Setup, record: &TrackRecord) -> Result<CompareReport> {
    let cfg = &setup.config;
    let table = RatioTable::new(&setup.nl, setup.interval, &setup.grid)?;
    let spacing = cfg.dt * cfg.record_every as f64;
    let limit = 0.05 / cfg.c0.max(1.0);
    let ode_dt = spacing / (spacing / limit).ceil();
    let t_reached = record.t_reached();
    let initial = EffectiveState { t: 0.0, a: cfg.a0, c: cfg.c0 };
    let ode = effective::integrate(initial, &setup.pot, &table, setup.interval, t_reached, ode_dt)?;
    let mut samples = Vec::with_capacity(record.rows.len());
    let (mut max_a, mut max_c) = (0.0_f64, 0.0_f64);
    for r in &record.rows {
        let Some(s) = ode.at(r.t) else { break };
        max_a = max_a.max((r.a - s.a).abs());
        max_c = max_c.max((r.c - s.c).abs());
        samples.push(CompareSample { t: r.t, a_pde: r.a, a_ode: s.a, c_pde: r.c, c_ode: s.c });
    }
    let last = ode.states.last().copied().unwrap_or(initial);
    let drift_integral = ode
        .states
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].c + w[1].c - 2.0 * cfg.c0))
        .sum();
    let mut velocity_remainder = 0.0_f64;
    for w in record.rows.windows(3) {
        let h = w[2].t - w[0].t;
        let state = EffectiveState { t: w[1].t, a: w[1].a, c: w[1].c };
        let va = state.c - setup.pot.value(state.t, state.a, (0, 0))?;
        let vc = setup.pot.value(state.t, state.a, (0, 1))? * table.eval(state.c);
        let ea = ((w[2].a - w[0].a) / h - va).abs();
        let ec = ((w[2].c - w[0].c) / h - vc).abs();
        velocity_remainder = velocity_remainder.max(ea.max(ec));
    }
    Ok(CompareReport {
        status: record.status,
        t_reached,
        max_a_error: max_a,
        max_c_error: max_c,
        delta_c_total: last.c - cfg.c0,
        drift_integral,
        velocity_remainder,
        samples,
    })
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    EpsA,
    EpsX,
    EpsT,
    Eps0,
}

impl SweepAxis {
    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "eps_a" => Ok(Self::EpsA),
            "eps_x" => Ok(Self::EpsX),
            "eps_t" => Ok(Self::EpsT),
            "eps0" | "eps_0" => Ok(Self::Eps0),
            other => Err(config_error(format!("unknown sweep axis '{other}'"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::EpsA => "eps_a",
            Self::EpsX => "eps_x",
            Self::EpsT => "eps_t",
            Self::Eps0 => "eps0",
        }
    }

    fn apply(&self, cfg: &mut ExperimentConfig, value: f64) {
        match self {
            Self::EpsA => cfg.potential.eps_a = value,
            Self::EpsX => cfg.potential.eps_x = value,
            Self::EpsT => cfg.potential.eps_t = value,
            Self::Eps0 => cfg.eps0 = value,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepLevel {
    pub value: f64,
    pub t_end: f64,
    pub t_reached: f64,
    /// `completed`, `decomposition_failure`, `parameter_escape` or `error`.
    pub status: String,
    pub max_xi_h1: Option<f64>,
    /// `ε₀ + √(ε_aε_xε₀) + ε_x + ε_t` at this level.
    pub bound: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub levels: Vec<SweepLevel>,
    /// Slope of `max‖ξ‖_{H¹}` against the swept parameter over completed levels.
    pub fit: Option<PowerFit>,
    /// `max‖ξ‖_{H¹} ≤ TUBE_FACTOR · bound` on every completed level.
    pub bound_holds: bool,
}

pub fn fluctuation_bound(cfg: &ExperimentConfig) -> f64 {
    let p = &cfg.potential;
    let (ea, ex, et) = if p.family == "zero" { (0.0, 0.0, 0.0) } else { (p.eps_a, p.eps_x, p.eps_t) };
    cfg.eps0 + (ea * ex * cfg.eps0).sqrt() + ex + et
}

/// Runs one tracked experiment per level in parallel. Each level runs to
/// `min(t_end, safety_factor/(ε_aε_x))`; failures are recorded per level.
pub fn run_sweep(template: &ExperimentConfig, axis: SweepAxis, levels: &[f64]) -> Result<SweepReport> {
    if levels.len() < 3 {
        return Err(config_error("a sweep needs at least 3 levels"));
    }
    let results: Vec<SweepLevel> = levels
        .par_iter()
        .map(|&value| {
            let mut cfg = template.clone();
            cfg.out = None;
            cfg.write_frames = false;
            axis.apply(&mut cfg, value);
            let bound = fluctuation_bound(&cfg);
            let outcome = cfg.horizon().and_then(|h| {
                if let Some(h) = h {
                    cfg.t_end = cfg.t_end.min(h);
                }
                track(&cfg.setup()?, false)
            });
            match outcome {
                Ok(rec) => SweepLevel {
                    value,
                    t_end: cfg.t_end,
                    t_reached: rec.t_reached(),
                    status: rec.status.label().into(),
                    max_xi_h1: Some(rec.max_xi_h1()),
                    bound,
                    error: None,
                },
                Err(e) => SweepLevel {
                    value,
                    t_end: cfg.t_end,
                    t_reached: 0.0,
                    status: "error".into(),
                    max_xi_h1: None,
                    bound,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let done: Vec<&SweepLevel> = results.iter().filter(|l| l.status == "completed").collect();
    let xs: Vec<f64> = done.iter().map(|l| l.value).collect();
    let ys: Vec<f64> = done.iter().filter_map(|l| l.max_xi_h1).collect();
    let fit = log_log_fit(&xs, &ys).ok();
    let bound_holds = !done.is_empty() && done.iter().all(|l| l.max_xi_h1.unwrap_or(f64::INFINITY) <= TUBE_FACTOR * l.bound);
    let report = SweepReport { axis, levels: results, fit, bound_holds };
    if let Some(dir) = &template.out {
        fs::create_dir_all(dir)?;
        let mut w = BufWriter::new(fs::File::create(dir.join("sweep.csv"))?);
        writeln!(w, "axis,value,status,max_xi_h1,bound,t_end,t_reached")?;
        for l in &report.levels {
            let m = l.max_xi_h1.map_or(String::from("nan"), |v| format!("{v:e}"));
            writeln!(w, "{},{:e},{},{},{:e},{:e},{:e}", axis.label(), l.value, l.status, m, l.bound, l.t_end, l.t_reached)?;
        }
        w.flush()?;
        write_json(&dir.join("sweep_fit.json"), &report)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_config() -> ExperimentConfig {
        ExperimentConfig { t_end: 2.0, record_every: 500, ..Default::default() }
    }

    #[test]
    fn rejects_unknown_keys_and_bad_horizon() {
        assert!(matches!(ExperimentConfig::from_json(r#"{"eps_0": 0.1}"#), Err(Error::Config(_))));
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"potential": {"family": "zero", "epsa": 0.1}}"#),
            Err(Error::Config(_))
        ));
        let mut cfg = free_config();
        cfg.potential = PotentialConfig { family: "gaussian_bump".into(), eps_a: 0.1, eps_x: 0.1, ..Default::default() };
        cfg.t_end = 101.0;
        assert!(matches!(cfg.setup(), Err(Error::Config(_))));
        cfg.t_end = 100.0;
        assert!(cfg.setup().is_ok());
        cfg.safety_factor = 2.0;
        cfg.t_end = 150.0;
        assert!(cfg.setup().is_ok());
    }

    #[test]
    fn config_round_trips() {
        let cfg = ExperimentConfig { eps0: 0.01, seed: 9, ..free_config() };
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }

    #[test]
    fn perturbation_is_sized_and_orthogonal() {
        let cfg = ExperimentConfig { eps0: 0.02, seed: 4, ..free_config() };
        let setup = cfg.setup().unwrap();
        let (u0, p0) = setup.initial().unwrap();
        let d = decompose(&u0, p0, &setup.nl).unwrap();
        assert_eq!(d.iterations, 0);
        assert!((grid::h1_norm(&d.xi).unwrap() - 0.02).abs() <= 1e-12);
        let other = ExperimentConfig { seed: 5, ..cfg.clone() }.setup().unwrap().initial().unwrap().0;
        assert!((&other - &u0).max_abs() > 1e-4);
    }

    #[test]
    fn free_track_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = free_config();
        cfg.a0 = 3.0;
        let mut csvs = Vec::new();
        for name in ["one", "two"] {
            cfg.out = Some(dir.path().join(name));
            let rec = run_track(&cfg).unwrap();
            assert!(rec.status.completed());
            for r in &rec.rows {
                assert!((r.a - 3.0 - r.t).abs() <= 1e-6 && (r.c - 1.0).abs() <= 1e-8 && r.xi_h1 <= 1e-6);
            }
            csvs.push(fs::read(dir.path().join(name).join("track.csv")).unwrap());
        }
        assert_eq!(csvs[0], csvs[1]);
        let text = String::from_utf8(csvs[0].clone()).unwrap();
        assert_eq!(text.lines().next(), Some(TRACK_HEADER));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn recentering_keeps_lab_position() {
        let mut cfg = free_config();
        cfg.frame_speed = Some(0.0);
        cfg.t_end = 16.0;
        cfg.record_every = 2000;
        let rec = track(&cfg.setup().unwrap(), false).unwrap();
        assert!(rec.status.completed());
        for r in &rec.rows {
            assert!((r.a - r.t).abs() <= 1e-6, "{} {}", r.t, r.a);
        }
    }

    #[test]
    fn sweep_needs_three_levels() {
        assert!(run_sweep(&free_config(), SweepAxis::Eps0, &[0.01, 0.02]).is_err());
        assert_eq!(SweepAxis::from_label("eps_x").unwrap(), SweepAxis::EpsX);
        assert!(SweepAxis::from_label("eps_y").is_err());
    }
}
