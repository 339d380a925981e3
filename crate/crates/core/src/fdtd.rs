//! Reference solver for the telegrapher's equations
//!
//! ```text
//! ∂δv/∂x = −L' ∂δi/∂t − R' δi,    ∂δi/∂x = −C' ∂δv/∂t
//! ```
//!
//! on a staggered (Yee) grid: δv on integer points x_j, δi on half points
//! x_{j+1/2} and half time steps. The series loss is averaged over the two
//! current time levels, which keeps the update explicit and stable.
//!
//! [`SignConvention::Flipped`] drops the minus signs. That is the same system
//! with δi → −δi, so both conventions give identical |δi|.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::line::LineSpec;

/// Default Courant number V·dt/dx.
pub const DEFAULT_COURANT: f64 = 0.99;

/// Growth of max|δv|, max|Z₀δi| over the initial maximum that aborts a run.
pub const INSTABILITY_GROWTH: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// First-order one-way (Mur) condition on δv at both ends.
    #[default]
    Absorbing,
    /// The last current cell connects the last and first voltage points.
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignConvention {
    #[default]
    Standard,
    /// ∂δv/∂x = L'∂δi/∂t + R'δi, ∂δi/∂x = C'∂δv/∂t.
    Flipped,
}

impl SignConvention {
    fn factor(self) -> f64 {
        match self {
            SignConvention::Standard => -1.0,
            SignConvention::Flipped => 1.0,
        }
    }
}

/// Spatial window and discretization of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdtdConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub dx: f64,
    pub courant: f64,
    pub boundary: Boundary,
    pub sign: SignConvention,
}

impl FdtdConfig {
    pub fn new(x_min: f64, x_max: f64, dx: f64) -> Result<Self> {
        let cfg = Self {
            x_min,
            x_max,
            dx,
            courant: DEFAULT_COURANT,
            boundary: Boundary::default(),
            sign: SignConvention::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_courant(mut self, courant: f64) -> Self {
        self.courant = courant;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_sign(mut self, sign: SignConvention) -> Self {
        self.sign = sign;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > self.x_min && self.dx > 0.0 && self.x_min.is_finite() && self.x_max.is_finite()) {
            return Err(Error::Config(format!(
                "need x_max > x_min and dx > 0, got [{}, {}], dx = {}",
                self.x_min, self.x_max, self.dx
            )));
        }
        if (self.x_max - self.x_min) / self.dx < 4.0 {
            return Err(Error::Config("fewer than 4 cells in the FDTD window".into()));
        }
        if !(self.courant > 0.0 && self.courant <= 1.0) {
            return Err(Error::Config(format!("Courant number must be in (0, 1], got {}", self.courant)));
        }
        Ok(())
    }

    fn n_cells(&self) -> usize {
        ((self.x_max - self.x_min) / self.dx).round() as usize
    }
}

/// Voltage and current samples of a line at one instant.
///
/// `v[j]` sits at x_min + j·dx and time `time`; `i[j]` sits at
/// x_min + (j + 1/2)·dx and time `time − dt/2`.
#[derive(Debug, Clone)]
pub struct LineState {
    pub v: Vec<f64>,
    pub i: Vec<f64>,
    time: f64,
    steps: u64,
    spec: LineSpec,
    x_min: f64,
    dx: f64,
    dt: f64,
    boundary: Boundary,
    sign: SignConvention,
    l_half: Vec<f64>,
    c_full: Vec<f64>,
}

impl LineState {
    /// Zero fields on the window of `cfg` with an explicit time step.
    pub fn new(spec: LineSpec, cfg: &FdtdConfig, dt: f64) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n_cells();
        let dx = (cfg.x_max - cfg.x_min) / n as f64;
        let (nv, ni) = match cfg.boundary {
            Boundary::Absorbing => (n + 1, n),
            Boundary::Periodic => (n, n),
        };
        let mut state = Self {
            v: vec![0.0; nv],
            i: vec![0.0; ni],
            time: 0.0,
            steps: 0,
            spec,
            x_min: cfg.x_min,
            dx,
            dt,
            boundary: cfg.boundary,
            sign: cfg.sign,
            l_half: vec![0.0; ni],
            c_full: vec![0.0; nv],
        };
        state.refresh_parameters(0.0, 0.0)?;
        let v_max = state.max_phase_velocity();
        if !(dt > 0.0) || v_max * dt / dx > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "CFL violated: V·dt/dx = {} (dt = {dt}, dx = {dx})",
                v_max * dt / dx
            )));
        }
        Ok(state)
    }

    /// Zero fields with dt from the Courant number. When `carrier` is given,
    /// dt is shortened so one carrier period is a whole number of steps.
    pub fn with_auto_dt(spec: LineSpec, cfg: &FdtdConfig, carrier: Option<f64>) -> Result<Self> {
        let probe = Self::new(spec.clone(), cfg, f64::MIN_POSITIVE)?;
        let mut dt = cfg.courant * probe.dx / probe.max_phase_velocity();
        if let Some(omega) = carrier {
            if !(omega > 0.0) {
                return Err(Error::Config(format!("carrier frequency must be positive, got {omega}")));
            }
            let period = 2.0 * PI / omega;
            dt = period / (period / dt).ceil();
        }
        Self::new(spec, cfg, dt)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn spec(&self) -> &LineSpec {
        &self.spec
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn sign(&self) -> SignConvention {
        self.sign
    }

    pub fn v_position(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn i_position(&self, j: usize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.dx
    }

    /// V·dt/dx at the current parameters.
    pub fn courant_number(&self) -> f64 {
        self.max_phase_velocity() * self.dt / self.dx
    }

    fn max_phase_velocity(&self) -> f64 {
        let c_at = |k: usize| self.c_full[k.min(self.c_full.len() - 1)];
        self.l_half
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                let c = c_at(k).min(c_at(k + 1));
                1.0 / (l * c).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Re-samples L' at `t_l` and C' at `t_c`.
    fn refresh_parameters(&mut self, t_l: f64, t_c: f64) -> Result<()> {
        for j in 0..self.l_half.len() {
            self.l_half[j] = self.spec.inductance(self.i_position(j), t_l)?;
        }
        for j in 0..self.c_full.len() {
            self.c_full[j] = self.spec.capacitance(self.v_position(j), t_c)?;
        }
        Ok(())
    }

    /// Energy ∫(C'δv² + L'δi²)/2 dx by the midpoint rule on each staggered grid.
    pub fn energy(&self) -> f64 {
        let ev: f64 = match self.boundary {
            Boundary::Absorbing => self
                .v
                .iter()
                .zip(&self.c_full)
                .enumerate()
                .map(|(j, (v, c))| {
                    let w = if j == 0 || j + 1 == self.v.len() { 0.5 } else { 1.0 };
                    w * c * v * v
                })
                .sum(),
            Boundary::Periodic => self.v.iter().zip(&self.c_full).map(|(v, c)| c * v * v).sum(),
        };
        let ei: f64 = self.i.iter().zip(&self.l_half).map(|(i, l)| l * i * i).sum();
        0.5 * (ev + ei) * self.dx
    }

    /// Loads a right-going pulse launched on the homogeneous line:
    /// δi(x, t) = A·g(x − V₀t) at the staggered current times and
    /// δv = Z₀δi (sign-adjusted for the convention).
    pub fn set_forward_pulse(&mut self, pulse: &Pulse) {
        let v0 = self.spec.v0();
        let z0 = self.spec.z0();
        let s = -self.sign.factor();
        let t_i = self.time - 0.5 * self.dt;
        for j in 0..self.v.len() {
            self.v[j] = z0 * pulse.current(self.v_position(j) - v0 * self.time);
        }
        for j in 0..self.i.len() {
            self.i[j] = s * pulse.current(self.i_position(j) - v0 * t_i);
        }
    }

    fn amplitude(&self) -> f64 {
        let z0 = self.spec.z0();
        let mv = self.v.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mi = self.i.iter().fold(0.0f64, |m, i| m.max(i.abs()));
        mv.max(z0 * mi)
    }

    /// Linear interpolation of δv at x.
    pub fn voltage_at(&self, x: f64) -> f64 {
        interpolate(&self.v, (x - self.x_min) / self.dx)
    }

    /// Linear interpolation of δi at x.
    pub fn current_at(&self, x: f64) -> f64 {
        interpolate(&self.i, (x - self.x_min) / self.dx - 0.5)
    }
}

fn interpolate(values: &[f64], u: f64) -> f64 {
    let last = values.len() - 1;
    if u <= 0.0 {
        return values[0];
    }
    if u >= last as f64 {
        return values[last];
    }
    let j = u.floor() as usize;
    let f = u - j as f64;
    values[j] * (1.0 - f) + values[j + 1] * f
}

/// One leapfrog step: δi from t − dt/2 to t + dt/2, then δv from t to t + dt.
pub fn fdtd_step(state: &mut LineState) -> Result<()> {
    let dt = state.dt;
    let dx = state.dx;
    let g = state.sign.factor();
    let r = state.spec.r0();
    let t = state.time;
    if !state.spec.is_static() {
        state.refresh_parameters(t, t + 0.5 * dt)?;
        if state.courant_number() > 1.0 + 1e-12 {
            return Err(Error::Numerical(format!(
                "CFL violated at t = {t}: V·dt/dx = {}",
                state.courant_number()
            )));
        }
    }

    let nv = state.v.len();
    let ni = state.i.len();
    for j in 0..ni {
        let dv = state.v[(j + 1) % nv] - state.v[j];
        let lt = state.l_half[j] / dt;
        state.i[j] = ((lt - 0.5 * r) * state.i[j] + g * (dv / dx)) / (lt + 0.5 * r);
    }

    match state.boundary {
        Boundary::Periodic => {
            let last = ni - 1;
            let wrap = state.i[0] - state.i[last];
            let old0 = state.v[0];
            state.v[0] = old0 + g * (dt / (state.c_full[0] * dx)) * wrap;
            for j in 1..nv {
                let di = state.i[j] - state.i[j - 1];
                state.v[j] += g * (dt / (state.c_full[j] * dx)) * di;
            }
        }
        Boundary::Absorbing => {
            let (old_first, old_second) = (state.v[0], state.v[1]);
            let (old_last, old_penult) = (state.v[nv - 1], state.v[nv - 2]);
            for j in 1..nv - 1 {
                let di = state.i[j] - state.i[j - 1];
                state.v[j] += g * (dt / (state.c_full[j] * dx)) * di;
            }
            let mur = |l: f64, c: f64| {
                let vdt = dt / (l * c).sqrt();
                (vdt - dx) / (vdt + dx)
            };
            let kl = mur(state.l_half[0], state.c_full[0]);
            state.v[0] = old_second + kl * (state.v[1] - old_first);
            let kr = mur(state.l_half[ni - 1], state.c_full[nv - 1]);
            state.v[nv - 1] = old_penult + kr * (state.v[nv - 2] - old_last);
        }
    }
    state.time = t + dt;
    state.steps += 1;
    Ok(())
}

/// Gaussian-enveloped carrier δi(x, 0) = A·exp(−(x−x₀)²/(4w²))·cos(k(x−x₀) + θ),
/// with k = ω/V₀ and w the r.m.s. width of the envelope intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    pub omega: f64,
    pub wavenumber: f64,
    pub phase: f64,
}

impl Pulse {
    pub fn new(spec: &LineSpec, amplitude: f64, center: f64, width: f64, omega: f64) -> Result<Self> {
        if !(width > 0.0 && omega >= 0.0 && amplitude.is_finite() && center.is_finite()) {
            return Err(Error::Config(format!(
                "pulse needs width > 0 and omega >= 0, got width = {width}, omega = {omega}"
            )));
        }
        Ok(Self { amplitude, center, width, omega, wavenumber: omega / spec.v0(), phase: 0.0 })
    }

    /// Current profile at the launch instant, as a function of x − V₀t.
    pub fn current(&self, x: f64) -> f64 {
        let d = x - self.center;
        self.amplitude * (-d * d / (4.0 * self.width * self.width)).exp() * (self.wavenumber * d + self.phase).cos()
    }
}

/// Probe sample. `envelope` is the demodulated Φ with δi ≈ Re(Φe^{−iωt}),
/// averaged over the carrier period centred on `t` (to within one step). It
/// is absent when that period extends beyond the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRecord {
    pub t: f64,
    pub x: f64,
    pub delta_v: f64,
    pub delta_i: f64,
    pub envelope: Option<Complex64>,
}

/// Moments of the demodulated envelope intensity |Φ(x)|² at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSnapshot {
    pub t: f64,
    pub centroid: f64,
    pub width: f64,
    /// ∫|Φ|² dx.
    pub intensity: f64,
    pub positions: Vec<f64>,
    pub envelope: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub t_end: f64,
    pub probes: Vec<f64>,
    /// Probe records are kept every `stride` steps.
    pub stride: usize,
    /// Instants at which the full envelope is demodulated.
    pub snapshots: Vec<f64>,
    /// Carrier used for demodulation.
    pub carrier: f64,
}

impl SimulationConfig {
    pub fn new(t_end: f64, carrier: f64) -> Result<Self> {
        if !(t_end > 0.0 && carrier > 0.0) {
            return Err(Error::Config(format!(
                "need t_end > 0 and carrier > 0, got t_end = {t_end}, carrier = {carrier}"
            )));
        }
        Ok(Self { t_end, probes: Vec::new(), stride: 1, snapshots: Vec::new(), carrier })
    }

    pub fn with_probes(mut self, probes: Vec<f64>) -> Self {
        self.probes = probes;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn with_snapshots(mut self, snapshots: Vec<f64>) -> Self {
        self.snapshots = snapshots;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub probes: Vec<ProbeRecord>,
    pub snapshots: Vec<EnvelopeSnapshot>,
    /// (t, energy) every stride.
    pub energy: Vec<(f64, f64)>,
    pub final_state: LineState,
}

struct SnapshotAccumulator {
    first: u64,
    last: u64,
    sum: Vec<Complex64>,
}

/// Runs the line from `initial` to `config.t_end`, recording probes and
/// envelope snapshots. Demodulation multiplies δi by e^{iωt} and averages
/// over one carrier period centred on the output time: Φ = (2/P)∫δi e^{iωt} dt.
/// The current lags the voltage by dt/2, which is accounted for in the phase.
pub fn simulate(initial: LineState, config: &SimulationConfig) -> Result<SimulationOutput> {
    let mut state = initial;
    let dt = state.dt;
    let omega = config.carrier;
    let period_steps = (2.0 * PI / omega / dt).round().max(1.0) as u64;
    if ((period_steps as f64) * dt * omega / (2.0 * PI) - 1.0).abs() > 1e-6 {
        log::warn!("carrier period is not a whole number of steps; demodulation will leak");
    }
    let half = period_steps / 2;
    let n_steps = (config.t_end / dt).round() as u64;
    let start_step = state.steps;
    let t0 = state.time;

    let mut accumulators: Vec<SnapshotAccumulator> = config
        .snapshots
        .iter()
        .map(|&ts| {
            let c = start_step + ((ts - t0) / dt).round().max(0.0) as u64;
            SnapshotAccumulator {
                first: c.saturating_sub(half),
                last: c.saturating_sub(half) + period_steps - 1,
                sum: vec![Complex64::new(0.0, 0.0); state.i.len()],
            }
        })
        .collect();
    let skipped = accumulators.iter().filter(|a| a.first < start_step || a.last > start_step + n_steps).count();
    if skipped > 0 {
        log::warn!("{skipped} snapshot(s) lie too close to the run ends to demodulate and will be dropped");
    }

    let mut series: Vec<Vec<(f64, f64, f64)>> = vec![Vec::with_capacity(n_steps as usize + 1); config.probes.len()];
    let mut energy = Vec::new();
    let initial_amplitude = state.amplitude().max(f64::MIN_POSITIVE);

    for n in 0..=n_steps {
        let step = state.steps;
        let t_i = state.time - 0.5 * dt;
        for (k, &x) in config.probes.iter().enumerate() {
            series[k].push((state.time, state.voltage_at(x), state.current_at(x)));
        }
        let rot = Complex64::from_polar(1.0, omega * t_i);
        for acc in accumulators.iter_mut() {
            if step >= acc.first && step <= acc.last {
                for (s, &i) in acc.sum.iter_mut().zip(&state.i) {
                    *s += i * rot;
                }
            }
        }
        if (n as usize) % config.stride == 0 {
            energy.push((state.time, state.energy()));
        }
        if n == n_steps {
            break;
        }
        fdtd_step(&mut state)?;
        let amp = state.amplitude();
        if !(amp <= INSTABILITY_GROWTH * initial_amplitude) {
            return Err(Error::Numerical(format!(
                "FDTD instability at t = {}: amplitude grew by {:.3e}",
                state.time,
                amp / initial_amplitude
            )));
        }
    }

    let mut probes = Vec::new();
    let scale = 2.0 / period_steps as f64;
    for (k, &x) in config.probes.iter().enumerate() {
        let s = &series[k];
        for (idx, &(t, v, i)) in s.iter().enumerate() {
            if idx % config.stride != 0 {
                continue;
            }
            let envelope = (idx as u64 >= half && idx as u64 + period_steps - half <= s.len() as u64).then(|| {
                let lo = idx - half as usize;
                (lo..lo + period_steps as usize)
                    .map(|m| s[m].2 * Complex64::from_polar(1.0, omega * (s[m].0 - 0.5 * dt)))
                    .sum::<Complex64>()
                    * scale
            });
            probes.push(ProbeRecord { t, x, delta_v: v, delta_i: i, envelope });
        }
    }

    let positions: Vec<f64> = (0..state.i.len()).map(|j| state.i_position(j)).collect();
    let mut snapshots = Vec::new();
    for acc in accumulators.drain(..) {
        if acc.first < start_step || acc.last > start_step + n_steps {
            continue;
        }
        let envelope: Vec<Complex64> = acc.sum.iter().map(|z| z * scale).collect();
        // Mean of the current sample times in the window.
        let t = t0 + ((acc.first - start_step) as f64 + 0.5 * (period_steps - 1) as f64 - 0.5) * dt;
        snapshots.push(envelope_snapshot(t, &positions, envelope));
    }
    Ok(SimulationOutput { probes, snapshots, energy, final_state: state })
}

fn envelope_snapshot(t: f64, positions: &[f64], envelope: Vec<Complex64>) -> EnvelopeSnapshot {
    let (mut m0, mut m1) = (0.0, 0.0);
    for (x, z) in positions.iter().zip(&envelope) {
        let w = z.norm_sqr();
        m0 += w;
        m1 += w * x;
    }
    let centroid = m1 / m0;
    let var: f64 = positions
        .iter()
        .zip(&envelope)
        .map(|(x, z)| z.norm_sqr() * (x - centroid).powi(2))
        .sum::<f64>()
        / m0;
    let dx = if positions.len() > 1 { positions[1] - positions[0] } else { 1.0 };
    EnvelopeSnapshot {
        t,
        centroid,
        width: var.sqrt(),
        intensity: m0 * dx,
        positions: positions.to_vec(),
        envelope,
    }
}
