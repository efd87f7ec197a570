//! Reduced dynamics `ȧ = c − b(t, a)`, `ċ = b′(t, a)·δ(c)/δ′(c)` and its RK4 integrator.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::potential::PotentialSpec;
use crate::profile::{delta, delta_prime, NonlinearitySpec, SpeedInterval};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveState {
    pub t: f64,
    pub a: f64,
    pub c: f64,
}

/// `δ(c)/δ′(c)` by quadrature.
pub fn momentum_ratio(nl: &NonlinearitySpec, c: f64, grid: &Arc<Grid>) -> Result<f64> {
    let dp = delta_prime(nl, c, grid)?;
    if dp <= 0.0 {
        return Err(Error::StabilityViolation { c, delta_prime: dp });
    }
    Ok(delta(nl, c, grid)? / dp)
}

/// Right side `(ȧ, ċ)` with `δ/δ′` by quadrature. For the cubic case the
/// quadrature must match `2c` to `1e−6`, and the closed form is then used.
pub fn rhs(
    state: EffectiveState,
    pot: &PotentialSpec,
    nl: &NonlinearitySpec,
    grid: &Arc<Grid>,
) -> Result<(f64, f64)> {
    let ratio = momentum_ratio(nl, state.c, grid)?;
    if nl.is_cubic() && (ratio - 2.0 * state.c).abs() > 1e-6 {
        return Err(Error::InternalConsistency(format!(
            "delta/delta' = {ratio} differs from 2c = {}",
            2.0 * state.c
        )));
    }
    let ratio = if nl.is_cubic() { 2.0 * state.c } else { ratio };
    Ok(velocity(state, pot, ratio))
}

fn velocity(s: EffectiveState, pot: &PotentialSpec, ratio: f64) -> (f64, f64) {
    (
        s.c - pot.value_unchecked(s.t, s.a, (0, 0)),
        pot.value_unchecked(s.t, s.a, (0, 1)) * ratio,
    )
}

/// Tabulated `δ/δ′` on `I` for repeated evaluation.
#[derive(Clone, Debug)]
pub struct RatioTable {
    nodes: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    exact_cubic: bool,
}

const TABLE_NODES: usize = 33;

impl RatioTable {
    pub fn new(nl: &NonlinearitySpec, interval: SpeedInterval, grid: &Arc<Grid>) -> Result<Self> {
        if nl.is_cubic() {
            for c in [interval.min, 0.5 * (interval.min + interval.max), interval.max] {
                let ratio = momentum_ratio(nl, c, grid)?;
                if (ratio - 2.0 * c).abs() > 1e-6 {
                    return Err(Error::InternalConsistency(format!(
                        "delta/delta'({c}) = {ratio} differs from 2c"
                    )));
                }
            }
            return Ok(Self { nodes: vec![], values: vec![], slopes: vec![], exact_cubic: true });
        }
        let nodes: Vec<f64> = (0..TABLE_NODES)
            .map(|i| interval.min + (interval.max - interval.min) * i as f64 / (TABLE_NODES - 1) as f64)
            .collect();
        let values = nodes
            .iter()
            .map(|&c| momentum_ratio(nl, c, grid))
            .collect::<Result<Vec<_>>>()?;
        let n = nodes.len();
        let slopes = (0..n)
            .map(|i| {
                let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (values[r] - values[l]) / (nodes[r] - nodes[l])
            })
            .collect();
        Ok(Self { nodes, values, slopes, exact_cubic: false })
    }

    /// Cubic Hermite interpolation between nodes.
    pub fn eval(&self, c: f64) -> f64 {
        if self.exact_cubic {
            return 2.0 * c;
        }
        let n = self.nodes.len();
        let h = self.nodes[1] - self.nodes[0];
        let i = (((c - self.nodes[0]) / h).floor() as isize).clamp(0, n as isize - 2) as usize;
        let s = (c - self.nodes[i]) / h;
        let (h00, h10, h01, h11) = (
            2.0 * s.powi(3) - 3.0 * s * s + 1.0,
            s.powi(3) - 2.0 * s * s + s,
            -2.0 * s.powi(3) + 3.0 * s * s,
            s.powi(3) - s * s,
        );
        h00 * self.values[i] + h10 * h * self.slopes[i] + h01 * self.values[i + 1] + h11 * h * self.slopes[i + 1]
    }
}

#[derive(Clone, Debug)]
pub struct EffectiveTrack {
    pub states: Vec<EffectiveState>,
    /// Set when `c` left `I`; the series stops at the last admissible state.
    pub escaped: bool,
}

impl EffectiveTrack {
    /// Linear interpolation at time `t` inside the recorded range.
    pub fn at(&self, t: f64) -> Option<EffectiveState> {
        let s = &self.states;
        if s.is_empty() || t < s[0].t - 1e-12 || t > s[s.len() - 1].t + 1e-12 {
            return None;
        }
        let i = s.partition_point(|x| x.t <= t).clamp(1, s.len().max(2) - 1);
        if s.len() == 1 {
            return Some(s[0]);
        }
        let (l, r) = (s[i - 1], s[i]);
        let w = if r.t > l.t { (t - l.t) / (r.t - l.t) } else { 0.0 };
        Some(EffectiveState { t, a: l.a + w * (r.a - l.a), c: l.c + w * (r.c - l.c) })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "t,a,c")?;
        for s in &self.states {
            writeln!(w, "{},{},{}", s.t, s.a, s.c)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Classical RK4 from `initial` to `t_end` (negative `t_end − t₀` integrates backwards).
pub fn integrate(
    initial: EffectiveState,
    pot: &PotentialSpec,
    table: &RatioTable,
    interval: SpeedInterval,
    t_end: f64,
    dt: f64,
) -> Result<EffectiveTrack> {
    if !(dt > 0.0) || dt > 0.1 / initial.c.max(1.0) {
        return Err(invalid(format!("ODE step {dt} must lie in (0, 0.1/max(1, c)]")));
    }
    if !interval.contains(initial.c) {
        return Err(Error::ParameterEscape { c: initial.c, min: interval.min, max: interval.max });
    }
    let span = t_end - initial.t;
    let steps = (span.abs() / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { span / steps as f64 };
    let f = |s: EffectiveState| velocity(s, pot, table.eval(s.c));
    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial);
    let mut s = initial;
    for i in 0..steps {
        let k1 = f(s);
        let mid = |k: (f64, f64), w: f64| EffectiveState { t: s.t + w * h, a: s.a + w * h * k.0, c: s.c + w * h * k.1 };
        let k2 = f(mid(k1, 0.5));
        let k3 = f(mid(k2, 0.5));
        let k4 = f(mid(k3, 1.0));
        let next = EffectiveState {
            t: initial.t + (i + 1) as f64 * h,
            a: s.a + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            c: s.c + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        };
        if !next.c.is_finite() || !interval.contains(next.c) {
            return Ok(EffectiveTrack { states, escaped: true });
        }
        s = next;
        states.push(s);
    }
    Ok(EffectiveTrack { states, escaped: false })
}
