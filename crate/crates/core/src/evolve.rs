//! Integrating-factor RK4 for `∂ₜu = −∂ₓ(∂ₓ²u + f(u) − b(t,x)u)` on the periodic
//! grid, optionally in a frame moving at constant speed `V` so that long runs
//! keep the soliton away from the domain edge. Conserved quantities, balance
//! laws and snapshot persistence live here too.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{self, dot, Field, Grid};
use crate::potential::PotentialSpec;
use crate::profile::NonlinearitySpec;

/// Stability envelope for `dt·k_max³`.
pub const STABILITY_LIMIT: f64 = 10.0;
/// Amplitude beyond which a run is declared blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_end: f64,
    pub dealias: bool,
    pub record_every: usize,
    /// Speed `V` of the computational frame; grid point `x_j` sits at lab position `x_j + x₀ + V t`.
    pub frame_speed: f64,
    /// Lab position `x₀` of grid coordinate 0 at `t = 0`.
    pub frame_origin: f64,
}

impl EvolveConfig {
    pub fn new(grid: &Grid, dt: f64, t_end: f64, dealias: bool, record_every: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("time step must be positive, got {dt}")));
        }
        if !(t_end >= 0.0 && t_end.is_finite()) {
            return Err(invalid(format!("final time must be nonnegative, got {t_end}")));
        }
        if record_every == 0 {
            return Err(invalid("record_every must be at least 1"));
        }
        let k = grid.max_wavenumber(dealias);
        if dt * k.powi(3) > STABILITY_LIMIT {
            return Err(invalid(format!(
                "dt * k_max^3 = {:.3} exceeds {STABILITY_LIMIT}",
                dt * k.powi(3)
            )));
        }
        Ok(Self { dt, t_end, dealias, record_every, frame_speed: 0.0, frame_origin: 0.0 })
    }

    pub fn with_frame_speed(mut self, speed: f64) -> Self {
        self.frame_speed = speed;
        self
    }

    pub fn with_frame_origin(mut self, origin: f64) -> Self {
        self.frame_origin = origin;
        self
    }

    /// Lab position of grid coordinate 0 at time `t`.
    pub fn offset_at(&self, t: f64) -> f64 {
        self.frame_origin + self.frame_speed * t
    }

    /// Number of steps to reach `t_end`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Time stepper holding the spectral state.
pub struct Stepper {
    grid: Arc<Grid>,
    nl: NonlinearitySpec,
    pot: PotentialSpec,
    cfg: EvolveConfig,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
    /// `−ik` with dealiasing mask applied.
    flux: Vec<Complex64>,
    state: Vec<Complex64>,
    t: f64,
    t0: f64,
    steps: u64,
    imag_residue: f64,
    scratch: Vec<Complex64>,
    /// `b` on the grid at the two most recent stage times.
    b_cache: [(f64, Vec<f64>); 2],
    b_next: usize,
}

impl Stepper {
    pub fn new(
        u0: &Field,
        t0: f64,
        nl: &NonlinearitySpec,
        pot: &PotentialSpec,
        cfg: &EvolveConfig,
    ) -> Result<Self> {
        if !u0.is_finite() {
            return Err(Error::NumericDomain("initial field is not finite".into()));
        }
        let grid = Arc::clone(u0.grid());
        let n = grid.len();
        let cutoff = cfg.dealias.then(|| grid.dealias_cutoff());
        let nyq = grid.nyquist_slot();
        let mut half = Vec::with_capacity(n);
        let mut full = Vec::with_capacity(n);
        let mut flux = Vec::with_capacity(n);
        for (m, &k) in grid.wavenumbers().iter().enumerate() {
            let symbol = if m == nyq { 0.0 } else { k.powi(3) + cfg.frame_speed * k };
            half.push(Complex64::from_polar(1.0, symbol * cfg.dt / 2.0));
            full.push(Complex64::from_polar(1.0, symbol * cfg.dt));
            let kept = m != nyq && cutoff.is_none_or(|c| grid.mode_index(m).abs() <= c);
            flux.push(if kept { Complex64::new(0.0, -k) } else { Complex64::new(0.0, 0.0) });
        }
        let state = grid.forward(u0.values());
        Ok(Self {
            grid,
            nl: nl.clone(),
            pot: *pot,
            cfg: *cfg,
            half,
            full,
            flux,
            state,
            t: t0,
            t0,
            steps: 0,
            imag_residue: 0.0,
            scratch: vec![Complex64::new(0.0, 0.0); n],
            b_cache: [(f64::NAN, vec![0.0; n]), (f64::NAN, vec![0.0; n])],
            b_next: 0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Lab position of grid coordinate 0 at the current time.
    pub fn frame_offset(&self) -> f64 {
        self.cfg.offset_at(self.t)
    }

    /// Largest `max|Im u| / max|Re u|` seen after an inverse transform.
    pub fn imag_residue(&self) -> f64 {
        self.imag_residue
    }

    pub fn field(&self) -> Field {
        Field::from_raw(&self.grid, self.grid.inverse(&self.state))
    }

    /// Index of the cache slot holding `b(t, ·)`, filling the older slot on a miss.
    fn potential_slot(&mut self, t: f64) -> usize {
        if let Some(i) = self.b_cache.iter().position(|(s, _)| *s == t) {
            return i;
        }
        let i = self.b_next;
        self.b_next ^= 1;
        let offset = self.cfg.offset_at(t);
        let (slot_t, values) = &mut self.b_cache[i];
        *slot_t = t;
        for (j, v) in values.iter_mut().enumerate() {
            *v = self.pot.value_unchecked(t, self.grid.x(j) + offset, (0, 0));
        }
        i
    }

    fn nonlinear(&mut self, input: &[Complex64], t: f64, out: &mut [Complex64]) {
        let slot = (!self.pot.is_zero()).then(|| self.potential_slot(t));
        let grid = &self.grid;
        self.scratch.copy_from_slice(input);
        grid.inverse_in_place(&mut self.scratch);
        let (mut im, mut re) = (0.0_f64, 0.0_f64);
        for (j, z) in self.scratch.iter_mut().enumerate() {
            im = im.max(z.im.abs());
            re = re.max(z.re.abs());
            let u = z.re;
            let mut g = self.nl.f(u);
            if let Some(i) = slot {
                g -= self.b_cache[i].1[j] * u;
            }
            *z = Complex64::new(g, 0.0);
        }
        if re > 0.0 {
            self.imag_residue = self.imag_residue.max(im / re);
        }
        grid.forward_in_place(&mut self.scratch);
        for ((o, s), f) in out.iter_mut().zip(&self.scratch).zip(&self.flux) {
            *o = s * f;
        }
    }

    /// One integrating-factor RK4 step.
    pub fn step(&mut self) -> Result<()> {
        let n = self.state.len();
        let dt = self.cfg.dt;
        let t = self.t;
        let t_next = self.t0 + (self.steps + 1) as f64 * dt;
        let zero = Complex64::new(0.0, 0.0);
        let v = std::mem::take(&mut self.state);
        let (mut a, mut b, mut c, mut d) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
        let mut tmp = vec![zero; n];

        self.nonlinear(&v, t, &mut a);
        for m in 0..n {
            tmp[m] = self.half[m] * (v[m] + 0.5 * dt * a[m]);
        }
        self.nonlinear(&tmp, t + 0.5 * dt, &mut b);
        for m in 0..n {
            tmp[m] = self.half[m] * v[m] + 0.5 * dt * b[m];
        }
        self.nonlinear(&tmp, t + 0.5 * dt, &mut c);
        for m in 0..n {
            tmp[m] = self.full[m] * v[m] + dt * self.half[m] * c[m];
        }
        self.nonlinear(&tmp, t_next, &mut d);
        let mut next = v;
        for m in 0..n {
            next[m] = self.full[m] * next[m]
                + dt / 6.0 * (self.full[m] * a[m] + 2.0 * self.half[m] * (b[m] + c[m]) + d[m]);
        }
        self.state = next;
        self.steps += 1;
        self.t = t_next;

        // `Σ|û|/n` bounds max|u|; the exact maximum is only needed when the bound trips.
        let bound = self.state.iter().map(|z| z.norm()).sum::<f64>() / n as f64;
        if !(bound <= BLOW_UP_THRESHOLD) {
            let u = self.grid.inverse(&self.state);
            let max_abs = u.iter().fold(0.0_f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
            if !max_abs.is_finite() || max_abs > BLOW_UP_THRESHOLD {
                return Err(Error::BlowUp { t: self.t, max_abs });
            }
        }
        Ok(())
    }

    pub fn advance(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }
}

/// Advances `u` from time `t` by one step.
pub fn step(
    u: &Field,
    t: f64,
    nl: &NonlinearitySpec,
    pot: &PotentialSpec,
    cfg: &EvolveConfig,
) -> Result<Field> {
    let mut s = Stepper::new(u, t, nl, pot, cfg)?;
    s.step()?;
    Ok(s.field())
}

/// A recorded snapshot; `offset` is the lab position of grid coordinate 0.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub offset: f64,
    pub u: Field,
}

/// Integrates to `cfg.t_end`, recording every `cfg.record_every` steps (including `t₀`).
pub fn trajectory(
    u0: &Field,
    t0: f64,
    nl: &NonlinearitySpec,
    pot: &PotentialSpec,
    cfg: &EvolveConfig,
) -> Result<Vec<Snapshot>> {
    let mut s = Stepper::new(u0, t0, nl, pot, cfg)?;
    let mut frames = vec![Snapshot { t: t0, offset: s.frame_offset(), u: u0.clone() }];
    let total = cfg.steps();
    let mut done = 0;
    while done < total {
        let chunk = cfg.record_every.min(total - done);
        s.advance(chunk)?;
        done += chunk;
        if chunk == cfg.record_every {
            frames.push(Snapshot { t: s.time(), offset: s.frame_offset(), u: s.field() });
        }
    }
    Ok(frames)
}

/// `H_b(u) = ∫ ½(∂ₓu)² − F(u) + ½ b u²`, with `b` sampled at lab positions `x_j + offset`.
pub fn hamiltonian(u: &Field, t: f64, nl: &NonlinearitySpec, pot: &PotentialSpec, offset: f64) -> f64 {
    let du = grid::spectral_derivative(u, 1);
    let h = u.grid().spacing();
    let b = pot.sample_unchecked(t, u.grid(), (0, 0), offset);
    h * u
        .values()
        .iter()
        .zip(du.values())
        .zip(b.values())
        .map(|((&v, &dv), &bv)| 0.5 * dv * dv - nl.big_f(v) + 0.5 * bv * v * v)
        .sum::<f64>()
}

/// `P(u) = ½‖u‖₂²`.
pub fn momentum(u: &Field) -> f64 {
    0.5 * dot(u, u)
}

/// `∫u`.
pub fn mass(u: &Field) -> f64 {
    u.grid().spacing() * u.values().iter().sum::<f64>()
}

/// Right sides of the three balance laws at one snapshot.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BalanceRates {
    /// `½∫∂ₜb u²`.
    pub hamiltonian: f64,
    /// `½∫b′u²`.
    pub momentum: f64,
    /// `∫ ½u²∂ₜb + b′(u f(u) − (3/2)(∂ₓu)² − F(u)) − b″u∂ₓu`.
    pub weighted_momentum: f64,
}

pub fn balance_rates(u: &Field, t: f64, nl: &NonlinearitySpec, pot: &PotentialSpec, offset: f64) -> BalanceRates {
    let g = u.grid();
    let h = g.spacing();
    let du = grid::spectral_derivative(u, 1);
    let bt = pot.sample_unchecked(t, g, (1, 0), offset);
    let b1 = pot.sample_unchecked(t, g, (0, 1), offset);
    let b2 = pot.sample_unchecked(t, g, (0, 2), offset);
    let (mut rh, mut rp, mut rw) = (0.0, 0.0, 0.0);
    for j in 0..g.len() {
        let v = u.values()[j];
        let dv = du.values()[j];
        rh += 0.5 * bt.values()[j] * v * v;
        rp += 0.5 * b1.values()[j] * v * v;
        rw += 0.5 * v * v * bt.values()[j]
            + b1.values()[j] * (v * nl.f(v) - 1.5 * dv * dv - nl.big_f(v))
            - b2.values()[j] * v * dv;
    }
    BalanceRates { hamiltonian: h * rh, momentum: h * rp, weighted_momentum: h * rw }
}

/// `½∫b u²`.
pub fn weighted_momentum(u: &Field, t: f64, pot: &PotentialSpec, offset: f64) -> f64 {
    let b = pot.sample_unchecked(t, u.grid(), (0, 0), offset);
    0.5 * u.grid().spacing() * u.values().iter().zip(b.values()).map(|(v, bv)| bv * v * v).sum::<f64>()
}

/// Balance-law residuals at the interior snapshots of a uniformly sampled trajectory.
#[derive(Clone, Debug, Default, Serialize)]
pub struct BalanceReport {
    pub times: Vec<f64>,
    pub mass_drift: Vec<f64>,
    pub hamiltonian_residual: Vec<f64>,
    pub momentum_residual: Vec<f64>,
    pub weighted_momentum_residual: Vec<f64>,
    /// Same residuals after Richardson extrapolation of the difference quotient in the sampling interval.
    pub hamiltonian_richardson: Vec<f64>,
    pub momentum_richardson: Vec<f64>,
    pub weighted_momentum_richardson: Vec<f64>,
    /// Balance-law right sides at the same times.
    pub rates: Vec<BalanceRates>,
    /// Centered difference quotients of `H_b`, `P`, `½∫bu²`.
    pub observed: Vec<[f64; 3]>,
}

impl BalanceReport {
    /// Largest `|residual| / max(floor, rel·|rhs|)` for each law, raw and extrapolated.
    pub fn worst_ratio(&self, floor: f64, rel: f64, richardson: bool) -> [f64; 3] {
        let series = if richardson {
            [&self.hamiltonian_richardson, &self.momentum_richardson, &self.weighted_momentum_richardson]
        } else {
            [&self.hamiltonian_residual, &self.momentum_residual, &self.weighted_momentum_residual]
        };
        let mut out = [0.0_f64; 3];
        for (law, s) in series.iter().enumerate() {
            for (i, r) in s.iter().enumerate() {
                let rhs = match law {
                    0 => self.rates[i].hamiltonian,
                    1 => self.rates[i].momentum,
                    _ => self.rates[i].weighted_momentum,
                };
                out[law] = out[law].max(r.abs() / floor.max(rel * rhs.abs()));
            }
        }
        out
    }

    pub fn max_abs(series: &[f64]) -> f64 {
        series.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Audits the balance laws on snapshots recorded at a uniform interval.
pub fn balance_audit(frames: &[Snapshot], nl: &NonlinearitySpec, pot: &PotentialSpec) -> Result<BalanceReport> {
    if frames.len() < 3 {
        return Err(invalid(format!("balance audit needs at least 3 frames, got {}", frames.len())));
    }
    let delta = frames[1].t - frames[0].t;
    if !(delta > 0.0) {
        return Err(invalid("frames must be strictly increasing in time"));
    }
    for w in frames.windows(2) {
        if ((w[1].t - w[0].t) - delta).abs() > 1e-9 * delta.max(1.0) {
            return Err(invalid("frames are not uniformly spaced"));
        }
    }
    let values: Vec<[f64; 3]> = frames
        .iter()
        .map(|f| {
            [
                hamiltonian(&f.u, f.t, nl, pot, f.offset),
                momentum(&f.u),
                weighted_momentum(&f.u, f.t, pot, f.offset),
            ]
        })
        .collect();
    let m0 = mass(&frames[0].u);
    let mut report = BalanceReport::default();
    let n = frames.len();
    for i in 1..n - 1 {
        let f = &frames[i];
        let rates = balance_rates(&f.u, f.t, nl, pot, f.offset);
        let rhs = [rates.hamiltonian, rates.momentum, rates.weighted_momentum];
        let d1: Vec<f64> = (0..3).map(|q| (values[i + 1][q] - values[i - 1][q]) / (2.0 * delta)).collect();
        report.times.push(f.t);
        report.mass_drift.push(mass(&f.u) - m0);
        report.hamiltonian_residual.push(d1[0] - rhs[0]);
        report.momentum_residual.push(d1[1] - rhs[1]);
        report.weighted_momentum_residual.push(d1[2] - rhs[2]);
        let rich: Vec<f64> = if i >= 2 && i + 2 < n {
            (0..3)
                .map(|q| {
                    let d2 = (values[i + 2][q] - values[i - 2][q]) / (4.0 * delta);
                    (4.0 * d1[q] - d2) / 3.0 - rhs[q]
                })
                .collect()
        } else {
            (0..3).map(|q| d1[q] - rhs[q]).collect()
        };
        report.hamiltonian_richardson.push(rich[0]);
        report.momentum_richardson.push(rich[1]);
        report.weighted_momentum_richardson.push(rich[2]);
        report.rates.push(rates);
        report.observed.push([d1[0], d1[1], d1[2]]);
    }
    Ok(report)
}

/// Magic bytes of the binary snapshot format.
pub const FRAME_MAGIC: &[u8; 8] = b"BKDVFRM1";

/// Writes `magic, N (u64 LE), L (f64 LE), t (f64 LE), N × f64 LE`.
pub fn write_frame_binary(mut w: impl Write, t: f64, u: &Field) -> Result<()> {
    w.write_all(FRAME_MAGIC)?;
    w.write_all(&(u.grid().len() as u64).to_le_bytes())?;
    w.write_all(&u.grid().half_length().to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for v in u.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads one binary snapshot, rebuilding its grid.
pub fn read_frame_binary(mut r: impl Read) -> Result<(f64, Field)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != FRAME_MAGIC {
        return Err(invalid("bad frame magic"));
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let n = u64::from_le_bytes(buf) as usize;
    r.read_exact(&mut buf)?;
    let half_length = f64::from_le_bytes(buf);
    r.read_exact(&mut buf)?;
    let t = f64::from_le_bytes(buf);
    let grid = Grid::new(half_length, n)?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok((t, Field::new(&grid, values)?))
}

/// Writes snapshots as CSV rows `t,index,u`.
pub fn write_frames_csv(path: &Path, frames: &[Snapshot]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "t,index,u")?;
    for f in frames {
        for (j, v) in f.u.values().iter().enumerate() {
            writeln!(w, "{},{},{:e}", f.t, j, v)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{build_profile, SolitonParams, SpeedInterval};

    fn default_grid() -> Arc<Grid> {
        Grid::new(50.0, 1024).unwrap()
    }

    fn soliton(g: &Arc<Grid>, a: f64, c: f64) -> Field {
        let p = SolitonParams::new(a, c, SpeedInterval::default()).unwrap();
        build_profile(&NonlinearitySpec::cubic(), p, g).unwrap().q
    }

    #[test]
    fn stability_envelope() {
        let g = default_grid();
        assert!(EvolveConfig::new(&g, 1e-3, 1.0, true, 1).is_ok());
        assert!(EvolveConfig::new(&g, 1e-3, 1.0, false, 1).is_err());
        assert!(EvolveConfig::new(&g, 0.0, 1.0, true, 1).is_err());
        assert!(EvolveConfig::new(&g, 1e-3, 1.0, true, 0).is_err());
    }

    #[test]
    fn zero_stays_zero() {
        let g = Grid::new(20.0, 128).unwrap();
        let cfg = EvolveConfig::new(&g, 1e-2, 1.0, true, 10).unwrap();
        let nl = NonlinearitySpec::cubic();
        let pot = PotentialSpec::gaussian(0.1, 0.2, 0.3).unwrap();
        let u = step(&Field::zeros(&g), 0.0, &nl, &pot, &cfg).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }

    #[test]
    fn airy_dispersion() {
        let g = Grid::new(10.0, 128).unwrap();
        let k1 = std::f64::consts::PI / 10.0 * 3.0;
        let u0 = Field::from_fn(&g, |x| 1e-8 * (k1 * x).sin()).unwrap();
        let cfg = EvolveConfig::new(&g, 1e-3, 1.0, true, 1000).unwrap();
        let nl = NonlinearitySpec::cubic();
        let frames = trajectory(&u0, 0.0, &nl, &PotentialSpec::zero(), &cfg).unwrap();
        let end = &frames.last().unwrap().u;
        assert!((frames.last().unwrap().t - 1.0).abs() < 1e-12);
        let exact = Field::from_fn(&g, |x| 1e-8 * (k1 * (x + k1 * k1)).sin()).unwrap();
        let rel = grid::l2_norm(&(end - &exact)) / grid::l2_norm(&exact);
        assert!(rel <= 1e-3, "relative error {rel}");
    }

    #[test]
    fn soliton_translates_in_moving_frame() {
        let g = Grid::new(30.0, 512).unwrap();
        let nl = NonlinearitySpec::cubic();
        let u0 = soliton(&g, 0.0, 1.0);
        let cfg = EvolveConfig::new(&g, 1e-3, 2.0, true, 1000).unwrap().with_frame_speed(1.0);
        let frames = trajectory(&u0, 0.0, &nl, &PotentialSpec::zero(), &cfg).unwrap();
        let end = &frames.last().unwrap().u;
        assert!(grid::h1_norm(&(end - &u0)).unwrap() < 1e-6);
        assert!((frames.last().unwrap().offset - 2.0).abs() < 1e-12);
    }

    #[test]
    fn conserved_quantities_of_soliton() {
        let g = default_grid();
        let nl = NonlinearitySpec::cubic();
        let q = soliton(&g, 0.0, 1.0);
        let fine = Grid::new(50.0, 2048).unwrap();
        let qf = soliton(&fine, 0.0, 1.0);
        let z = PotentialSpec::zero();
        let h = hamiltonian(&q, 0.0, &nl, &z, 0.0);
        assert!((h - hamiltonian(&qf, 0.0, &nl, &z, 0.0)).abs() <= 1e-9);
        assert!((h + 2.0 / 3.0).abs() <= 1e-9);
        for a in [0.0, 3.7, -11.2] {
            assert!((momentum(&soliton(&g, a, 1.0)) - 2.0).abs() <= 1e-10);
        }
        let zero = Field::zeros(&g);
        assert_eq!((hamiltonian(&zero, 0.0, &nl, &z, 0.0), momentum(&zero), mass(&zero)), (0.0, 0.0, 0.0));
    }

    #[test]
    fn frame_round_trip() {
        let g = Grid::new(10.0, 32).unwrap();
        let u = Field::from_fn(&g, |x| (-x * x).exp()).unwrap();
        let mut buf = Vec::new();
        write_frame_binary(&mut buf, 1.5, &u).unwrap();
        assert_eq!(&buf[..8], FRAME_MAGIC);
        assert_eq!(buf.len(), 8 + 24 + 32 * 8);
        let (t, back) = read_frame_binary(&buf[..]).unwrap();
        assert_eq!(t, 1.5);
        assert_eq!(back.values(), u.values());
        buf[0] = b'X';
        assert!(read_frame_binary(&buf[..]).is_err());
    }

    #[test]
    fn audit_needs_three_frames() {
        let g = Grid::new(10.0, 32).unwrap();
        let f = Snapshot { t: 0.0, offset: 0.0, u: Field::zeros(&g) };
        let nl = NonlinearitySpec::cubic();
        assert!(balance_audit(&[f.clone(), f], &nl, &PotentialSpec::zero()).is_err());
    }
}
