//! Uniform grids, sampled complex envelopes and the quadrature-based
//! observables built on them.
//!
//! All integrals use the composite trapezoid rule on the uniform grid. For
//! smooth fields whose tails vanish at the box edges this converges
//! spectrally, which is why the box is always sized so the tails are below
//! roughly 1e-12.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest Hermite order accepted by [`hermite`].
pub const HERMITE_MAX_ORDER: usize = 64;

/// Norm deviation tolerated before a field counts as "not normalized".
pub const NORM_TOLERANCE: f64 = 1e-6;

/// Minimum number of grid points per r.m.s. width before [`moments`] warns.
const MIN_POINTS_PER_SIGMA: f64 = 8.0;

/// Uniform one-dimensional grid over the dimensionless coordinate τ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    tau_min: f64,
    tau_max: f64,
    n_points: usize,
}

impl Grid1D {
    pub fn new(tau_min: f64, tau_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 8 {
            return Err(Error::InvalidGrid(format!(
                "need at least 8 points, got {n_points}"
            )));
        }
        if !(tau_min.is_finite() && tau_max.is_finite()) || tau_max <= tau_min {
            return Err(Error::InvalidGrid(format!(
                "bounds must be finite with tau_max > tau_min, got [{tau_min}, {tau_max}]"
            )));
        }
        Ok(Self {
            tau_min,
            tau_max,
            n_points,
        })
    }

    /// Symmetric grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    /// Grid on `[tau_min, tau_max]` whose spacing does not exceed `max_step`.
    pub fn with_max_step(tau_min: f64, tau_max: f64, max_step: f64) -> Result<Self> {
        if !(max_step > 0.0) {
            return Err(Error::InvalidGrid(format!("step must be positive, got {max_step}")));
        }
        let cells = ((tau_max - tau_min) / max_step).ceil().max(7.0) as usize;
        Self::new(tau_min, tau_max, cells + 1)
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn d_tau(&self) -> f64 {
        (self.tau_max - self.tau_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.tau_max
        } else {
            self.tau_min + i as f64 * self.d_tau()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    /// Index of the grid point closest to `tau`, clamped to the grid.
    pub fn nearest_index(&self, tau: f64) -> usize {
        let idx = ((tau - self.tau_min) / self.d_tau()).round();
        idx.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    fn same_as(&self, other: &Grid1D) -> bool {
        self.n_points == other.n_points
            && (self.tau_min - other.tau_min).abs() <= 1e-12 * self.tau_min.abs().max(1.0)
            && (self.tau_max - other.tau_max).abs() <= 1e-12 * self.tau_max.abs().max(1.0)
    }
}

/// Composite trapezoid rule for uniformly spaced samples.
pub fn trapezoid(values: &[f64], step: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            step * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

fn trapezoid_complex(values: &[Complex64], step: f64) -> Complex64 {
    match values.len() {
        0 | 1 => Complex64::new(0.0, 0.0),
        n => {
            let interior: Complex64 = values[1..n - 1].iter().sum();
            (interior + 0.5 * (values[0] + values[n - 1])) * step
        }
    }
}

/// Complex envelope sampled on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid1D,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidField(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.n_points()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().map(f).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.n_points()],
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// |Ψ|² per grid point.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z * factor).collect(),
        }
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            Some(i) => Err(Error::InvalidField(format!(
                "non-finite sample at index {i} (tau = {})",
                self.grid.point(i)
            ))),
            None => Ok(()),
        }
    }
}

/// √(∫|Ψ|² dτ) by the trapezoid rule.
pub fn norm(field: &ComplexField) -> Result<f64> {
    field.check_finite()?;
    Ok(trapezoid(&field.density(), field.grid.d_tau()).sqrt())
}

/// Rescales `field` to unit norm.
pub fn normalize(field: &ComplexField) -> Result<ComplexField> {
    let n = norm(field)?;
    if n == 0.0 {
        return Err(Error::CannotNormalize);
    }
    Ok(field.scaled(Complex64::new(1.0 / n, 0.0)))
}

pub(crate) fn ensure_normalized(field: &ComplexField) -> Result<()> {
    let n = norm(field)?;
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm: n });
    }
    Ok(())
}

/// First derivative dΨ/dτ: fourth-order central differences in the interior,
/// second-order stencils in the two outermost points on each side.
pub fn derivative(field: &ComplexField) -> Vec<Complex64> {
    let v = &field.values;
    let n = v.len();
    let h = field.grid.d_tau();
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    for i in 2..n - 2 {
        d[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
    }
    d[1] = (v[2] - v[0]) / (2.0 * h);
    d[n - 2] = (v[n - 1] - v[n - 3]) / (2.0 * h);
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    d
}

/// Central first and second moments of a field in position and momentum.
///
/// `cross` is the symmetrized central correlation ⟨(τp̂ + p̂τ)/2⟩ − ⟨τ⟩⟨p⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub mean_tau: f64,
    pub mean_p: f64,
    pub sigma: f64,
    pub sigma_p: f64,
    pub cross: f64,
    /// Set when the input was not normalized and moments were taken of the
    /// normalized copy.
    pub renormalized: bool,
}

/// Central moments of `field`. Non-normalized input is normalized first and
/// the result is flagged.
pub fn moments(field: &ComplexField) -> Result<MomentSet> {
    let n = norm(field)?;
    if n == 0.0 {
        return Err(Error::CannotNormalize);
    }
    let renormalized = (n - 1.0).abs() > NORM_TOLERANCE;
    let owned;
    let field = if renormalized {
        owned = normalize(field)?;
        &owned
    } else {
        field
    };

    let grid = field.grid;
    let h = grid.d_tau();
    let inv_norm2 = if renormalized { 1.0 } else { 1.0 / (n * n) };
    let dpsi = derivative(field);

    let len = grid.n_points();
    let mut w_tau = Vec::with_capacity(len);
    let mut w_tau2 = Vec::with_capacity(len);
    let mut w_p = Vec::with_capacity(len);
    let mut w_p2 = Vec::with_capacity(len);
    let mut w_cross = Vec::with_capacity(len);
    for (i, tau) in grid.points().enumerate() {
        let psi = field.values[i];
        let rho = psi.norm_sqr();
        // Re(Ψ* (-i ∂Ψ)) = Im(Ψ* ∂Ψ)
        let current = (psi.conj() * dpsi[i]).im;
        w_tau.push(tau * rho);
        w_tau2.push(tau * tau * rho);
        w_p.push(current);
        w_p2.push(dpsi[i].norm_sqr());
        w_cross.push(tau * current);
    }
    let mean_tau = trapezoid(&w_tau, h) * inv_norm2;
    let mean_tau2 = trapezoid(&w_tau2, h) * inv_norm2;
    let mean_p = trapezoid(&w_p, h) * inv_norm2;
    let mean_p2 = trapezoid(&w_p2, h) * inv_norm2;
    let mean_cross = trapezoid(&w_cross, h) * inv_norm2;

    let sigma = (mean_tau2 - mean_tau * mean_tau).max(0.0).sqrt();
    let sigma_p = (mean_p2 - mean_p * mean_p).max(0.0).sqrt();
    if sigma > 0.0 && sigma / h < MIN_POINTS_PER_SIGMA {
        log::warn!(
            "grid too coarse for moments: {:.2} points per sigma (want >= {MIN_POINTS_PER_SIGMA})",
            sigma / h
        );
    }
    Ok(MomentSet {
        mean_tau,
        mean_p,
        sigma,
        sigma_p,
        cross: mean_cross - mean_tau * mean_p,
        renormalized,
    })
}

/// Determinant σ_p²σ² − cross² of the position/momentum covariance matrix.
pub fn covariance_determinant(m: &MomentSet) -> f64 {
    m.sigma_p * m.sigma_p * m.sigma * m.sigma - m.cross * m.cross
}

/// Physicists' Hermite polynomial H_n(x), for n up to [`HERMITE_MAX_ORDER`].
pub fn hermite(n: usize, x: f64) -> Result<f64> {
    hermite_with_cap(n, x, HERMITE_MAX_ORDER)
}

/// [`hermite`] with a caller-chosen order cap.
pub fn hermite_with_cap(n: usize, x: f64, cap: usize) -> Result<f64> {
    if n > cap {
        return Err(Error::OutOfRange {
            what: "Hermite order",
            detail: format!("n = {n} exceeds cap {cap}"),
        });
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    for k in 0..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Orthonormal Hermite function (2ⁿ n! √π)^(-1/2) H_n(x) e^(-x²/2).
///
/// Evaluated with the normalized recurrence so that large orders neither
/// overflow nor lose the Gaussian factor.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n == 0 {
        return h0;
    }
    let (mut prev, mut cur) = (h0, std::f64::consts::SQRT_2 * x * h0);
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// ∫ a*(τ) b(τ) dτ on a shared grid.
pub fn overlap_inner(a: &ComplexField, b: &ComplexField) -> Result<Complex64> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch(format!("{:?} vs {:?}", a.grid, b.grid)));
    }
    let prod: Vec<Complex64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x.conj() * y)
        .collect();
    Ok(trapezoid_complex(&prod, a.grid.d_tau()))
}
