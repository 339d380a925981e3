//! Crank–Nicolson propagation of the envelope equation
//!
//! ```text
//! i ∂Ψ/∂s = −1/(2n₀²) ∂²Ψ/∂τ² + U(τ, s) Ψ
//! ```
//!
//! on a uniform grid with Dirichlet walls. The Laplacian is the three-point
//! stencil, so each step is a single tridiagonal solve. The potential is
//! frozen at the midpoint of every step, which keeps the scheme second order
//! for time-dependent profiles. An optional sponge (a smooth negative
//! imaginary potential) can line both walls.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{self, ComplexField, Grid1D, MomentSet};
use crate::line::PotentialProfile;

/// Relative norm change that aborts a run without a sponge.
pub const NORM_DRIFT_LIMIT: f64 = 1e-8;

/// Peak absorption rate of the sponge, in units of 1/s.
pub const SPONGE_STRENGTH: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub ds: f64,
    pub s_end: f64,
    /// Unperturbed index; the envelope mass is n₀².
    pub n0: f64,
    pub record_stride: usize,
    /// Sponge width in grid points on each side; 0 disables it.
    pub boundary: usize,
}

impl EvolutionConfig {
    pub fn new(ds: f64, s_end: f64) -> Result<Self> {
        let cfg = Self {
            ds,
            s_end,
            n0: 1.0,
            record_stride: 1,
            boundary: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn with_n0(mut self, n0: f64) -> Self {
        self.n0 = n0;
        self
    }

    pub fn with_boundary(mut self, points: usize) -> Self {
        self.boundary = points;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ds > 0.0 && self.ds.is_finite()) {
            return Err(Error::Config(format!("ds must be positive, got {}", self.ds)));
        }
        if !(self.s_end > 0.0 && self.s_end.is_finite()) {
            return Err(Error::Config(format!("s_end must be positive, got {}", self.s_end)));
        }
        if !(self.n0 > 0.0 && self.n0.is_finite()) {
            return Err(Error::Config(format!("n0 must be positive, got {}", self.n0)));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of steps; `s_end` is rounded to a whole number of `ds`.
    pub fn n_steps(&self) -> usize {
        (self.s_end / self.ds - 1e-9).ceil().max(1.0) as usize
    }
}

/// Step size satisfying ds·max|U| ≤ 0.01 and ds/(n₀² dτ²) ≤ 0.5.
pub fn default_ds(grid: &Grid1D, potential: &PotentialProfile, s: f64) -> Result<f64> {
    let u_max = potential
        .sample(grid, s)?
        .iter()
        .fold(0.0f64, |m, u| m.max(u.abs()));
    let h = grid.d_tau();
    let n0 = potential.n0();
    let kinetic = 0.5 * n0 * n0 * h * h;
    Ok(if u_max > 0.0 { kinetic.min(0.01 / u_max) } else { kinetic })
}

/// Snapshots of an evolution.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<ComplexField>,
    pub moments: Vec<MomentSet>,
    /// Expectation of the discrete Hamiltonian, see [`discrete_energy`].
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_field(&self) -> Option<&ComplexField> {
        self.fields.last()
    }

    fn record(&mut self, s: f64, psi: &ComplexField, u: &[f64], n0: f64) -> Result<()> {
        self.times.push(s);
        self.moments.push(field::moments(psi)?);
        self.energy.push(discrete_energy(psi, u, n0));
        self.fields.push(psi.clone());
        Ok(())
    }
}

/// e^{is/2}: the current envelope Φ of the carrier-modulated signal relates
/// to Ψ by Φ = Ψ·e^{is/2}, which removes the constant −Φ/2 term of the
/// equation for Φ.
pub fn carrier_phase(s: f64) -> Complex64 {
    Complex64::from_polar(1.0, 0.5 * s)
}

/// ⟨H⟩ with |∂Ψ/∂τ|² from fourth-order differences, normalized by ‖Ψ‖².
pub fn energy_expectation(psi: &ComplexField, u: &[f64], n0: f64) -> Result<f64> {
    let h = psi.grid().d_tau();
    let d = field::derivative(psi);
    let dens: Vec<f64> = psi
        .values()
        .iter()
        .zip(&d)
        .zip(u)
        .map(|((p, dp), ui)| dp.norm_sqr() / (2.0 * n0 * n0) + ui * p.norm_sqr())
        .collect();
    let n = field::norm(psi)?;
    if n == 0.0 {
        return Err(Error::CannotNormalize);
    }
    Ok(field::trapezoid(&dens, h) / (n * n))
}

/// ⟨Ψ|H_h|Ψ⟩/⟨Ψ|Ψ⟩ for the three-point Hamiltonian the solver propagates.
///
/// The kinetic part is Σ|Ψ_{j+1} − Ψ_j|²/(2n₀²h²) with zero ghost values at
/// the walls, the summation-by-parts form of the stencil. Crank–Nicolson
/// conserves this quantity exactly for static real potentials.
pub fn discrete_energy(psi: &ComplexField, u: &[f64], n0: f64) -> f64 {
    let v = psi.values();
    let h = psi.grid().d_tau();
    let zero = Complex64::new(0.0, 0.0);
    let mut kinetic = v[0].norm_sqr() + v[v.len() - 1].norm_sqr();
    let mut potential = 0.0;
    let mut norm2 = 0.0;
    for (j, z) in v.iter().enumerate() {
        let next = v.get(j + 1).copied().unwrap_or(zero);
        if j + 1 < v.len() {
            kinetic += (next - z).norm_sqr();
        }
        potential += u[j] * z.norm_sqr();
        norm2 += z.norm_sqr();
    }
    (kinetic / (2.0 * n0 * n0 * h * h) + potential) / norm2
}

/// Reusable Crank–Nicolson stepper for one grid and mass.
struct Stepper {
    grid: Grid1D,
    n0: f64,
    sponge: Vec<f64>,
    diag: Vec<Complex64>,
    rhs: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Stepper {
    fn new(grid: Grid1D, n0: f64, sponge_points: usize) -> Self {
        let n = grid.n_points();
        let mut sponge = vec![0.0; n];
        if sponge_points > 0 {
            let w = sponge_points.min(n / 2) as f64;
            for (j, value) in sponge.iter_mut().enumerate() {
                let edge = j.min(n - 1 - j) as f64;
                if edge < w {
                    let r = (w - edge) / w;
                    *value = SPONGE_STRENGTH * r * r;
                }
            }
        }
        Self {
            grid,
            n0,
            sponge,
            diag: vec![Complex64::new(0.0, 0.0); n],
            rhs: vec![Complex64::new(0.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Advances `psi` in place by `ds` with potential samples `u`.
    fn advance(&mut self, psi: &mut [Complex64], u: &[f64], ds: f64) -> Result<()> {
        let n = psi.len();
        let h = self.grid.d_tau();
        let kin = 1.0 / (2.0 * self.n0 * self.n0 * h * h);
        let half = Complex64::new(0.0, 0.5 * ds);
        // H_jj = 2·kin + U_j − iW_j, H_{j,j±1} = −kin
        let off = half * (-kin);
        let zero = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let hjj = Complex64::new(2.0 * kin + u[j], -self.sponge[j]);
            let left = if j > 0 { psi[j - 1] } else { zero };
            let right = if j + 1 < n { psi[j + 1] } else { zero };
            // (1 − i ds/2 H) ψ
            self.rhs[j] = psi[j] - half * hjj * psi[j] - off * (left + right);
            self.diag[j] = Complex64::new(1.0, 0.0) + half * hjj;
        }
        // Thomas algorithm for the constant off-diagonal `off`.
        let c = &mut self.scratch;
        let mut beta = self.diag[0];
        if beta.norm() < 1e-300 {
            return Err(Error::Numerical("singular Crank–Nicolson matrix at j = 0".into()));
        }
        psi[0] = self.rhs[0] / beta;
        for j in 1..n {
            c[j] = off / beta;
            beta = self.diag[j] - off * c[j];
            if beta.norm() < 1e-300 || !beta.re.is_finite() {
                return Err(Error::Numerical(format!(
                    "tridiagonal solve broke down at j = {j} (tau = {})",
                    self.grid.point(j)
                )));
            }
            psi[j] = (self.rhs[j] - off * psi[j - 1]) / beta;
        }
        for j in (0..n - 1).rev() {
            let next = psi[j + 1];
            psi[j] -= c[j + 1] * next;
        }
        Ok(())
    }
}

/// One Crank–Nicolson step from `s` to `s + ds`, with U sampled at `s + ds/2`.
pub fn step(psi: &ComplexField, potential: &PotentialProfile, s: f64, ds: f64) -> Result<ComplexField> {
    if !(ds > 0.0 && ds.is_finite()) {
        return Err(Error::Config(format!("ds must be positive, got {ds}")));
    }
    let grid = *psi.grid();
    let u = potential.sample(&grid, s + 0.5 * ds)?;
    let mut stepper = Stepper::new(grid, potential.n0(), 0);
    let mut values = psi.values().to_vec();
    stepper.advance(&mut values, &u, ds)?;
    ComplexField::new(grid, values)
}

/// Evolves `psi0` to `config.s_end`, recording every `record_stride` steps
/// and always the final state.
///
/// The potential's own n₀ is ignored in favour of `config.n0`.
pub fn evolve(psi0: &ComplexField, potential: &PotentialProfile, config: &EvolutionConfig) -> Result<Trajectory> {
    config.validate()?;
    let grid = *psi0.grid();
    let n0 = config.n0;
    let norm0 = field::norm(psi0)?;
    if norm0 == 0.0 {
        return Err(Error::CannotNormalize);
    }
    if (norm0 - 1.0).abs() > field::NORM_TOLERANCE {
        log::warn!("initial envelope has norm {norm0}, evolving as given");
    }
    let bound = default_ds(&grid, potential, 0.0)?;
    if config.ds > bound {
        log::debug!("ds = {} exceeds the accuracy bound {bound:.3e}", config.ds);
    }

    let n_steps = config.n_steps();
    let mut stepper = Stepper::new(grid, n0, config.boundary);
    let mut values = psi0.values().to_vec();
    let time_dependent = potential.is_time_dependent();
    let mut u = potential.sample(&grid, 0.5 * config.ds)?;

    let mut traj = Trajectory::default();
    traj.record(0.0, psi0, &potential.sample(&grid, 0.0)?, n0)?;

    let sum_norm0: f64 = values.iter().map(|z| z.norm_sqr()).sum();
    for k in 0..n_steps {
        let s = k as f64 * config.ds;
        if time_dependent {
            u = potential.sample(&grid, s + 0.5 * config.ds)?;
        }
        stepper.advance(&mut values, &u, config.ds)?;

        let sum_norm: f64 = values.iter().map(|z| z.norm_sqr()).sum();
        let drift = sum_norm.sqrt() / sum_norm0.sqrt() - 1.0;
        if !drift.is_finite() || (config.boundary == 0 && drift.abs() > NORM_DRIFT_LIMIT) || drift > NORM_DRIFT_LIMIT {
            return Err(Error::Numerical(format!(
                "norm drifted by {drift:e} at s = {}",
                s + config.ds
            )));
        }

        let done = k + 1 == n_steps;
        if (k + 1) % config.record_stride == 0 || done {
            let s_now = (k + 1) as f64 * config.ds;
            let psi = ComplexField::new(grid, values.clone())?;
            let u_now = if time_dependent { potential.sample(&grid, s_now)? } else { u.clone() };
            traj.record(s_now, &psi, &u_now, n0)?;
        }
    }
    Ok(traj)
}

/// Probability ∫|Ψ|² dτ over the grid points with τ ≥ `tau`.
pub fn probability_beyond(psi: &ComplexField, tau: f64) -> f64 {
    let grid = psi.grid();
    let start = grid.points().position(|t| t >= tau).unwrap_or(grid.n_points());
    let dens = psi.density();
    if start + 1 >= dens.len() {
        return 0.0;
    }
    field::trapezoid(&dens[start..], grid.d_tau())
}
