//! Quadratic-index line, U = kτ²/2: Hermite–Gauss envelope modes, the
//! envelope (width) equation and the equilibrium eigenstates.
//!
//! A mode of order n is
//!
//! ```text
//! Ψ_n = (2πσ² 2^{2n} (n!)²)^{-1/4} H_n(τ/(√2σ)) exp(−τ²/4σ² + iτ²/2ρ + i(1+2n)φ)
//! ```
//!
//! with 1/ρ = σ'/σ and σ(s), φ(s) from [`envelope_ode_solve`]. The width obeys
//! σ'' = −kσ + 1/(4σ³), whose fixed point is σ₀² = 1/(2√k).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{self, hermite_function, ComplexField, Grid1D, HERMITE_MAX_ORDER};

/// Tolerance used by [`minimum_uncertainty_check`] to call a state minimal.
pub const MINIMUM_UNCERTAINTY_TOLERANCE: f64 = 1e-8;

/// Edge amplitude, relative to the peak, above which a mode is said to be
/// truncated by its grid.
const TAIL_WARNING: f64 = 1e-10;

/// Law used to advance the mode phase φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseLaw {
    /// φ' = −1/(4σ²). This is the law under which Ψ_n solves the envelope
    /// equation, and it reduces to φ₀ = −√k s/2 at equilibrium.
    #[default]
    Gouy,
    /// φ' = −1/(4σ³). Kept for comparison; it does not reproduce the
    /// propagated phase.
    InverseCube,
}

impl PhaseLaw {
    fn rate(self, sigma: f64) -> f64 {
        match self {
            PhaseLaw::Gouy => -0.25 / (sigma * sigma),
            PhaseLaw::InverseCube => -0.25 / (sigma * sigma * sigma),
        }
    }
}

/// Width, width rate, phase and strength of a Hermite–Gauss envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeState {
    pub sigma: f64,
    pub sigma_prime: f64,
    pub phi: f64,
    pub k: f64,
}

impl EnvelopeState {
    pub fn new(sigma: f64, sigma_prime: f64, phi: f64, k: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Domain(format!("k must be positive, got {k}")));
        }
        if !(sigma_prime.is_finite() && phi.is_finite()) {
            return Err(Error::Domain("sigma_prime and phi must be finite".into()));
        }
        Ok(Self { sigma, sigma_prime, phi, k })
    }

    /// Matched state σ = σ₀(k), σ' = 0, φ = 0.
    pub fn equilibrium(k: f64) -> Result<Self> {
        Self::new(equilibrium_sigma(k)?, 0.0, 0.0, k)
    }

    /// E_env = σ'²/2 + kσ²/2 + 1/(8σ²), conserved by the width equation.
    pub fn envelope_energy(&self) -> f64 {
        let s = self.sigma;
        0.5 * self.sigma_prime * self.sigma_prime + 0.5 * self.k * s * s + 0.125 / (s * s)
    }

    /// 1/ρ = σ'/σ, finite everywhere.
    pub fn inverse_rho(&self) -> f64 {
        self.sigma_prime / self.sigma
    }

    /// ρ = σ/σ', or `None` at turning points where σ' = 0.
    pub fn rho(&self) -> Option<f64> {
        (self.sigma_prime != 0.0).then(|| self.sigma / self.sigma_prime)
    }

    /// Momentum width of the ground mode built on this envelope.
    pub fn sigma_p(&self) -> f64 {
        (0.25 / (self.sigma * self.sigma) + self.sigma_prime * self.sigma_prime).sqrt()
    }
}

/// One point of an envelope trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSample {
    pub s: f64,
    pub state: EnvelopeState,
}

impl EnvelopeSample {
    pub fn rho(&self) -> Option<f64> {
        self.state.rho()
    }
}

/// σ₀ = (1/(2√k))^{1/2}.
pub fn equilibrium_sigma(k: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    Ok((0.5 / k.sqrt()).sqrt())
}

/// Breathing-period estimate π/√k used to size the default ODE step.
pub fn breathing_period(k: f64) -> f64 {
    PI / k.sqrt()
}

/// Default RK4 step, one thousandth of [`breathing_period`].
pub fn default_envelope_ds(k: f64) -> f64 {
    breathing_period(k) / 1000.0
}

/// Integrates the width equation with [`PhaseLaw::Gouy`].
pub fn envelope_ode_solve(initial: EnvelopeState, s_end: f64, ds: f64) -> Result<Vec<EnvelopeSample>> {
    envelope_ode_solve_with(initial, s_end, ds, PhaseLaw::Gouy)
}

/// Classical RK4 for (σ, σ', φ) with σ'' = −kσ + 1/(4σ³).
pub fn envelope_ode_solve_with(
    initial: EnvelopeState,
    s_end: f64,
    ds: f64,
    law: PhaseLaw,
) -> Result<Vec<EnvelopeSample>> {
    if !(ds > 0.0 && s_end >= 0.0) {
        return Err(Error::Config(format!("need ds > 0 and s_end >= 0, got ds = {ds}, s_end = {s_end}")));
    }
    let k = initial.k;
    let rhs = |y: [f64; 3]| -> [f64; 3] {
        let s = y[0];
        [y[1], -k * s + 0.25 / (s * s * s), law.rate(s)]
    };
    let n_steps = (s_end / ds - 1e-9).ceil().max(0.0) as usize;
    let h = if n_steps > 0 { s_end / n_steps as f64 } else { 0.0 };
    let mut y = [initial.sigma, initial.sigma_prime, initial.phi];
    let mut out = Vec::with_capacity(n_steps + 1);
    out.push(EnvelopeSample { s: 0.0, state: initial });
    for i in 0..n_steps {
        let add = |a: [f64; 3], b: [f64; 3], f: f64| [a[0] + f * b[0], a[1] + f * b[1], a[2] + f * b[2]];
        let k1 = rhs(y);
        let k2 = rhs(add(y, k1, 0.5 * h));
        let k3 = rhs(add(y, k2, 0.5 * h));
        let k4 = rhs(add(y, k3, h));
        for j in 0..3 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if !(y[0] > 0.0) || !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!(
                "envelope width collapsed to {} at s = {}",
                y[0],
                (i + 1) as f64 * h
            )));
        }
        out.push(EnvelopeSample {
            s: (i + 1) as f64 * h,
            state: EnvelopeState { sigma: y[0], sigma_prime: y[1], phi: y[2], k },
        });
    }
    Ok(out)
}

/// Hermite–Gauss mode Ψ_n built on `env`, sampled on `grid`.
pub fn hermite_gauss_mode(n: usize, env: &EnvelopeState, grid: &Grid1D) -> Result<ComplexField> {
    if n > HERMITE_MAX_ORDER {
        return Err(Error::OutOfRange {
            what: "mode order",
            detail: format!("n = {n} exceeds {HERMITE_MAX_ORDER}"),
        });
    }
    let sigma = env.sigma;
    let amp = (2.0 * sigma * sigma).powf(-0.25);
    let chirp = 0.5 * env.inverse_rho();
    let gouy = (1 + 2 * n) as f64 * env.phi;
    let field = ComplexField::from_fn(*grid, |tau| {
        let x = tau / (std::f64::consts::SQRT_2 * sigma);
        Complex64::from_polar(amp * hermite_function(n, x), chirp * tau * tau + gouy)
    });
    warn_if_truncated(&field, n);
    Ok(field)
}

fn warn_if_truncated(field: &ComplexField, n: usize) {
    let v = field.values();
    let peak = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let edge = v[0].norm().max(v[v.len() - 1].norm());
    if peak > 0.0 && edge / peak > TAIL_WARNING {
        log::warn!("mode n = {n} is truncated by its grid (edge/peak = {:.2e})", edge / peak);
    }
}

/// Eigenstate Ψ⁰_n(τ, s): σ = σ₀(k), no chirp, φ₀(s) = −√k s/2.
pub fn stationary_mode(n: usize, k: f64, s: f64, grid: &Grid1D) -> Result<ComplexField> {
    let env = EnvelopeState::new(equilibrium_sigma(k)?, 0.0, equilibrium_phase(k, s), k)?;
    hermite_gauss_mode(n, &env, grid)
}

/// φ₀(s) = −√k s/2.
pub fn equilibrium_phase(k: f64, s: f64) -> f64 {
    -0.5 * k.sqrt() * s
}

/// E⁰_n = (n + 1/2)√k.
pub fn energy_level(n: usize, k: f64) -> f64 {
    (n as f64 + 0.5) * k.sqrt()
}

/// Grid sized so that quadrature and fourth-order differences resolve the
/// ground mode of `env` well below the 1e-8 level.
fn ground_mode_grid(env: &EnvelopeState) -> Result<Grid1D> {
    let half_width = 12.0 * env.sigma;
    let step = (0.004 / env.sigma_p()).min(env.sigma / 50.0);
    Grid1D::with_max_step(-half_width, half_width, step)
}

/// σ·σ_p of the ground mode on `env`, from the field moments, and whether it
/// sits at the 1/2 floor within [`MINIMUM_UNCERTAINTY_TOLERANCE`].
pub fn minimum_uncertainty_check(env: &EnvelopeState) -> Result<(f64, bool)> {
    let grid = ground_mode_grid(env)?;
    let m = field::moments(&hermite_gauss_mode(0, env, &grid)?)?;
    let product = m.sigma * m.sigma_p;
    Ok((product, (product - 0.5).abs() <= MINIMUM_UNCERTAINTY_TOLERANCE))
}

/// Ground mode displaced to Ψ₀(τ − a)·e^{ibτ}.
pub fn displaced_ground_state(env: &EnvelopeState, a: f64, b: f64, grid: &Grid1D) -> Result<ComplexField> {
    let sigma = env.sigma;
    let amp = (2.0 * PI * sigma * sigma).powf(-0.25);
    let chirp = 0.5 * env.inverse_rho();
    let field = ComplexField::from_fn(*grid, |tau| {
        let d = tau - a;
        Complex64::from_polar(
            amp * (-d * d / (4.0 * sigma * sigma)).exp(),
            chirp * d * d + env.phi + b * tau,
        )
    });
    warn_if_truncated(&field, 0);
    Ok(field)
}
