//! Mode transfer between line sections: overlap (Franck–Condon) factors,
//! their Wigner-function form, and parametric modes built from the complex
//! solution ε(t) of ε̈ + ω²(t)ε = 0.
//!
//! Wigner functions use W(q,p) = ∫ψ*(q+x/2)ψ(q−x/2)e^{ipx}dx with no 1/2π
//! prefactor. Then ∫∫W dq dp = 2π for a normalized state and
//! |C_nm|² = ∫∫W_n W_m dq dp/2π.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{self, hermite_function, ComplexField, Grid1D, HERMITE_MAX_ORDER};
use crate::harmonic;

/// Allowed |Im(ε̇ε*) − 1| before a parametric mode renormalizes ε̇.
pub const WRONSKIAN_TOLERANCE: f64 = 1e-8;

/// Edge amplitude, relative to the peak, that triggers a Wigner accuracy warning.
const WIGNER_TAIL_WARNING: f64 = 1e-10;

/// C_nm = ∫ψ_n*ψ_m dτ for normalized fields on a common grid.
pub fn overlap_coefficient(psi_n: &ComplexField, psi_m: &ComplexField) -> Result<Complex64> {
    field::ensure_normalized(psi_n)?;
    field::ensure_normalized(psi_m)?;
    field::overlap_inner(psi_n, psi_m)
}

/// Eigenmode n of the line section with U = ω²τ²/2.
pub fn eigenmode(n: usize, omega: f64, grid: &Grid1D) -> Result<ComplexField> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    harmonic::stationary_mode(n, omega * omega, 0.0, grid)
}

/// Eigenmodes n = 0..=n_max of one line section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFamily {
    pub omega: f64,
    pub n_max: usize,
}

impl ModeFamily {
    pub fn new(omega: f64, n_max: usize) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain(format!("omega must be positive, got {omega}")));
        }
        if n_max > HERMITE_MAX_ORDER {
            return Err(Error::OutOfRange {
                what: "mode order",
                detail: format!("n_max = {n_max} exceeds {HERMITE_MAX_ORDER}"),
            });
        }
        Ok(Self { omega, n_max })
    }

    pub fn modes(&self, grid: &Grid1D) -> Result<Vec<ComplexField>> {
        (0..=self.n_max).map(|n| eigenmode(n, self.omega, grid)).collect()
    }
}

/// Grid wide and fine enough for every mode of the given families.
pub fn family_grid(families: &[ModeFamily]) -> Result<Grid1D> {
    if families.is_empty() {
        return Err(Error::Config("no mode families given".into()));
    }
    let (mut half, mut step) = (0.0f64, f64::INFINITY);
    for f in families {
        let turning = ((2 * f.n_max + 1) as f64 / f.omega).sqrt();
        half = half.max(turning + 9.0 / f.omega.sqrt());
        let p_max = ((2 * f.n_max + 1) as f64 * f.omega).sqrt() + 9.0 * f.omega.sqrt();
        step = step.min(0.5 / p_max);
    }
    Grid1D::with_max_step(-half, half, step)
}

/// Matrix of C_nm = ⟨a_n|b_m⟩ between two sets of normalized fields.
pub fn overlap_matrix_of(a: &[ComplexField], b: &[ComplexField]) -> Result<DMatrix<Complex64>> {
    let mut m = DMatrix::zeros(a.len(), b.len());
    for (i, fa) in a.iter().enumerate() {
        for (j, fb) in b.iter().enumerate() {
            m[(i, j)] = overlap_coefficient(fa, fb)?;
        }
    }
    Ok(m)
}

/// C_nm between the eigenmodes of two line sections, n ≤ a.n_max, m ≤ b.n_max.
pub fn overlap_matrix(a: &ModeFamily, b: &ModeFamily, grid: &Grid1D) -> Result<DMatrix<Complex64>> {
    overlap_matrix_of(&a.modes(grid)?, &b.modes(grid)?)
}

/// |C_nm|², m = 0..=n_max, for an instantaneous change ω₁ → ω₂ acting on
/// eigenmode `n` of ω₁.
pub fn sudden_jump_populations(omega1: f64, omega2: f64, n: usize, n_max: usize) -> Result<Vec<f64>> {
    let from = ModeFamily::new(omega1, n)?;
    let to = ModeFamily::new(omega2, n_max)?;
    let grid = family_grid(&[from, to])?;
    let start = eigenmode(n, omega1, &grid)?;
    to.modes(&grid)?
        .iter()
        .map(|m| Ok(overlap_coefficient(m, &start)?.norm_sqr()))
        .collect()
}

/// Sampled Wigner function, row-major in q.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    q_grid: Grid1D,
    p_grid: Grid1D,
    values: Vec<f64>,
}

impl WignerGrid {
    pub fn q_grid(&self) -> &Grid1D {
        &self.q_grid
    }

    pub fn p_grid(&self) -> &Grid1D {
        &self.p_grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, iq: usize, ip: usize) -> f64 {
        self.values[iq * self.p_grid.n_points() + ip]
    }

    /// ∫∫W dq dp by 2-D trapezoid; 2π for a normalized pure state.
    pub fn integral(&self) -> f64 {
        self.weighted_sum(|v, _| v)
    }

    fn weighted_sum(&self, f: impl Fn(f64, usize) -> f64) -> f64 {
        let (nq, np) = (self.q_grid.n_points(), self.p_grid.n_points());
        let edge = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut sum = 0.0;
        for iq in 0..nq {
            let wq = edge(iq, nq);
            for ip in 0..np {
                let k = iq * np + ip;
                sum += wq * edge(ip, np) * f(self.values[k], k);
            }
        }
        sum * self.q_grid.d_tau() * self.p_grid.d_tau()
    }
}

/// Default momentum grid: as wide as the q grid up to the sampling limit
/// π/(2h), with the same number of points.
pub fn default_p_grid(q_grid: &Grid1D) -> Result<Grid1D> {
    let half_q = 0.5 * (q_grid.tau_max() - q_grid.tau_min());
    let nyquist = PI / (2.0 * q_grid.d_tau());
    Grid1D::symmetric(half_q.min(nyquist), q_grid.n_points() | 1)
}

/// Wigner transform on [`default_p_grid`].
pub fn wigner_transform(psi: &ComplexField) -> Result<WignerGrid> {
    wigner_transform_on(psi, &default_p_grid(psi.grid())?)
}

/// W(q_i, p) with x = 2jh, so that ψ is only needed on grid points:
/// W = 2h Σ_j ψ*_{i+j} ψ_{i−j} e^{2ipjh}, summed over the symmetric window
/// that stays on the grid. Terms ±j are conjugate, so W is real by
/// construction.
pub fn wigner_transform_on(psi: &ComplexField, p_grid: &Grid1D) -> Result<WignerGrid> {
    field::ensure_normalized(psi)?;
    let v = psi.values();
    let peak = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let edge = v[0].norm().max(v[v.len() - 1].norm());
    if edge > WIGNER_TAIL_WARNING * peak {
        log::warn!("Wigner transform: field is not negligible at the grid edge (edge/peak = {:.2e})", edge / peak);
    }
    let q_grid = *psi.grid();
    let h = q_grid.d_tau();
    let (nq, np) = (q_grid.n_points(), p_grid.n_points());
    let rotations: Vec<Complex64> = p_grid.points().map(|p| Complex64::from_polar(1.0, 2.0 * p * h)).collect();
    let mut values = vec![0.0; nq * np];
    let mut products = Vec::with_capacity(nq);
    for i in 0..nq {
        let reach = i.min(nq - 1 - i);
        products.clear();
        products.extend((1..=reach).map(|j| v[i + j].conj() * v[i - j]));
        let centre = v[i].norm_sqr();
        for (ip, rot) in rotations.iter().enumerate() {
            let mut z = Complex64::new(1.0, 0.0);
            let mut acc = 0.0;
            for c in &products {
                z *= rot;
                acc += (c * z).re;
            }
            values[i * np + ip] = 2.0 * h * (centre + 2.0 * acc);
        }
    }
    Ok(WignerGrid { q_grid, p_grid: *p_grid, values })
}

/// |C_nm|² = ∫∫W_n W_m dq dp/2π by 2-D trapezoid.
pub fn fc_via_wigner(w_n: &WignerGrid, w_m: &WignerGrid) -> Result<f64> {
    if w_n.q_grid != w_m.q_grid || w_n.p_grid != w_m.p_grid {
        return Err(Error::GridMismatch("Wigner grids differ".into()));
    }
    Ok(w_n.weighted_sum(|a, k| a * w_m.values[k]) / (2.0 * PI))
}

/// Frequency schedule ω(t) for the parametric equation.
#[derive(Clone)]
pub enum FrequencySchedule {
    Constant(f64),
    /// ω = before for t < t_jump, after from t_jump on.
    Jump { before: f64, after: f64, t_jump: f64 },
    /// Linear from `from` at t_start to `to` at t_end, flat outside.
    Ramp { from: f64, to: f64, t_start: f64, t_end: f64 },
    /// Arbitrary ω(t); `breakpoints` lists its discontinuities.
    Custom { omega: Arc<dyn Fn(f64) -> f64 + Send + Sync>, breakpoints: Vec<f64> },
}

impl fmt::Debug for FrequencySchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(w) => f.debug_tuple("Constant").field(w).finish(),
            Self::Jump { before, after, t_jump } => f
                .debug_struct("Jump")
                .field("before", before)
                .field("after", after)
                .field("t_jump", t_jump)
                .finish(),
            Self::Ramp { from, to, t_start, t_end } => f
                .debug_struct("Ramp")
                .field("from", from)
                .field("to", to)
                .field("t_start", t_start)
                .field("t_end", t_end)
                .finish(),
            Self::Custom { breakpoints, .. } => f.debug_struct("Custom").field("breakpoints", breakpoints).finish(),
        }
    }
}

impl FrequencySchedule {
    pub fn custom(omega: impl Fn(f64) -> f64 + Send + Sync + 'static, breakpoints: Vec<f64>) -> Self {
        Self::Custom { omega: Arc::new(omega), breakpoints }
    }

    /// ω(t), right-continuous at breakpoints.
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Constant(w) => *w,
            Self::Jump { before, after, t_jump } => {
                if t < *t_jump {
                    *before
                } else {
                    *after
                }
            }
            Self::Ramp { from, to, t_start, t_end } => {
                if t <= *t_start {
                    *from
                } else if t >= *t_end {
                    *to
                } else {
                    from + (to - from) * (t - t_start) / (t_end - t_start)
                }
            }
            Self::Custom { omega, .. } => omega(t),
        }
    }

    /// ω just before t.
    pub fn left_value(&self, t: f64) -> f64 {
        match self {
            Self::Jump { before, t_jump, .. } if t == *t_jump => *before,
            Self::Custom { omega, breakpoints } if breakpoints.contains(&t) => omega(t - 1e-12 * t.abs().max(1.0)),
            _ => self.value(t),
        }
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Constant(_) => Vec::new(),
            Self::Jump { t_jump, .. } => vec![*t_jump],
            Self::Ramp { t_start, t_end, .. } => vec![*t_start, *t_end],
            Self::Custom { breakpoints, .. } => breakpoints.clone(),
        }
    }

    /// Largest ω the schedule reaches, from its pieces or by sampling.
    pub fn max_omega(&self, t_end: f64) -> f64 {
        match self {
            Self::Constant(w) => w.abs(),
            Self::Jump { before, after, .. } => before.abs().max(after.abs()),
            Self::Ramp { from, to, .. } => from.abs().max(to.abs()),
            Self::Custom { omega, .. } => (0..=1000)
                .map(|i| omega(t_end * i as f64 / 1000.0).abs())
                .fold(0.0, f64::max),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Self::Constant(w) => w.is_finite(),
            Self::Jump { before, after, t_jump } => before.is_finite() && after.is_finite() && t_jump.is_finite(),
            Self::Ramp { from, to, t_start, t_end } => {
                from.is_finite() && to.is_finite() && t_start.is_finite() && t_end > t_start
            }
            Self::Custom { breakpoints, .. } => breakpoints.iter().all(|b| b.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid frequency schedule {self:?}")))
        }
    }
}

/// ε, ε̇ at time t, with the continuously tracked argument of ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonState {
    pub eps: Complex64,
    pub eps_dot: Complex64,
    pub t: f64,
    /// arg ε, unwrapped along the trajectory.
    pub phase: f64,
}

impl EpsilonState {
    /// ε(0) = 1, ε̇(0) = i.
    pub fn initial() -> Self {
        Self::ground(1.0, 0.0)
    }

    /// ε = ω^{-1/2}, ε̇ = iω^{1/2}: the ground mode of frequency ω at time t.
    pub fn ground(omega: f64, t: f64) -> Self {
        Self {
            eps: Complex64::new(omega.powf(-0.5), 0.0),
            eps_dot: Complex64::new(0.0, omega.sqrt()),
            t,
            phase: 0.0,
        }
    }

    /// Im(ε̇ε*), equal to 1 for the mode normalization used here.
    pub fn wronskian(&self) -> f64 {
        (self.eps_dot * self.eps.conj()).im
    }

    /// Restores Im(ε̇ε*) = 1 by adding iδε/|ε|² to ε̇. The flag reports
    /// whether the drift exceeded [`WRONSKIAN_TOLERANCE`].
    pub fn renormalized(&self) -> (Self, bool) {
        let delta = 1.0 - self.wronskian();
        if delta.abs() <= WRONSKIAN_TOLERANCE {
            return (*self, false);
        }
        let fix = Complex64::new(0.0, delta) * self.eps / self.eps.norm_sqr();
        (Self { eps_dot: self.eps_dot + fix, ..*self }, true)
    }
}

/// RK4 step small enough that the Wronskian drifts < 1e-10 over 10⁴ steps.
pub fn default_epsilon_dt(schedule: &FrequencySchedule, t_end: f64) -> f64 {
    0.005 / schedule.max_omega(t_end).max(1e-3)
}

fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Integrates ε̈ = −ω²(t)ε from `start.t` to `t_end` with classical RK4,
/// splitting steps at schedule breakpoints. Returns every step.
pub fn epsilon_evolve(
    start: EpsilonState,
    schedule: &FrequencySchedule,
    t_end: f64,
    dt: f64,
) -> Result<Vec<EpsilonState>> {
    schedule.validate()?;
    if !(dt > 0.0 && t_end >= start.t) {
        return Err(Error::Config(format!(
            "need dt > 0 and t_end >= t0, got dt = {dt}, t_end = {t_end}, t0 = {}",
            start.t
        )));
    }
    let mut stops: Vec<f64> = schedule
        .breakpoints()
        .into_iter()
        .filter(|&b| b > start.t && b < t_end)
        .collect();
    stops.sort_by(f64::total_cmp);
    stops.push(t_end);

    let mut out = vec![start];
    let mut s = start;
    let mut t0 = start.t;
    for stop in stops {
        let n = ((stop - t0) / dt - 1e-9).ceil().max(1.0) as usize;
        let h = (stop - t0) / n as f64;
        for i in 0..n {
            let a = t0 + i as f64 * h;
            let b = if i + 1 == n { stop } else { t0 + (i + 1) as f64 * h };
            let (w1, wm, w4) = (schedule.value(a), schedule.value(a + 0.5 * h), schedule.left_value(b));
            let f = |w: f64, e: Complex64, ed: Complex64| (ed, -w * w * e);
            let (e, ed) = (s.eps, s.eps_dot);
            let k1 = f(w1, e, ed);
            let k2 = f(wm, e + 0.5 * h * k1.0, ed + 0.5 * h * k1.1);
            let k3 = f(wm, e + 0.5 * h * k2.0, ed + 0.5 * h * k2.1);
            let k4 = f(w4, e + h * k3.0, ed + h * k3.1);
            let eps = e + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            let eps_dot = ed + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            if !(eps.re.is_finite() && eps.im.is_finite() && eps_dot.re.is_finite() && eps_dot.im.is_finite()) {
                return Err(Error::Numerical(format!("epsilon diverged at t = {b}")));
            }
            let phase = s.phase + wrap_angle(eps.arg() - s.eps.arg());
            s = EpsilonState { eps, eps_dot, t: b, phase };
            out.push(s);
        }
        t0 = stop;
    }
    Ok(out)
}

/// Parametric mode ψ_n(τ, t) = ψ₀ (ε*/ε)^{n/2} (2ⁿn!)^{-1/2} H_n(τ/|ε|) with
/// ψ₀ = π^{-1/4} ε^{-1/2} exp(iε̇τ²/2ε). Phases use the unwrapped arg ε, so
/// ε^{-1/2}(ε*/ε)^{n/2} contributes e^{−i(n+1/2)θ}; for ω ≡ 1 this is the
/// eigenmode phase e^{−i(n+1/2)t}.
pub fn parametric_mode(n: usize, state: &EpsilonState, grid: &Grid1D) -> Result<ComplexField> {
    if n > HERMITE_MAX_ORDER {
        return Err(Error::OutOfRange {
            what: "mode order",
            detail: format!("n = {n} exceeds {HERMITE_MAX_ORDER}"),
        });
    }
    let abs = state.eps.norm();
    if !(abs > 0.0 && abs.is_finite()) {
        return Err(Error::Numerical(format!("|epsilon| = {abs} at t = {}", state.t)));
    }
    let (state, fixed) = state.renormalized();
    if fixed {
        log::warn!("parametric mode at t = {}: Wronskian drifted, eps_dot renormalized", state.t);
    }
    let chirp = 0.5 * (state.eps_dot / state.eps).re;
    let amp = abs.powf(-0.5);
    let theta = state.phase + wrap_angle(state.eps.arg() - state.phase);
    let global = -(n as f64 + 0.5) * theta;
    Ok(ComplexField::from_fn(*grid, |tau| {
        Complex64::from_polar(amp * hermite_function(n, tau / abs), chirp * tau * tau + global)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{moments, norm};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c00_oracle(w1: f64, w2: f64) -> f64 {
        2.0 * (w1 * w2).sqrt() / (w1 + w2)
    }

    /// Populations of the squeezed ground state, |C_{0,2k}|² =
    /// √(1−λ²) (2k)!/(4^k (k!)²) λ^{2k} with λ = (ω₁−ω₂)/(ω₁+ω₂).
    fn even_population_oracle(w1: f64, w2: f64, m: usize) -> f64 {
        if m % 2 == 1 {
            return 0.0;
        }
        let k = m / 2;
        let lam = (w1 - w2) / (w1 + w2);
        let mut binom = 1.0;
        for j in 1..=k {
            binom *= (k + j) as f64 / j as f64;
        }
        (1.0 - lam * lam).sqrt() * binom / 4f64.powi(k as i32) * lam.powi(2 * k as i32)
    }

    #[test]
    fn ground_overlap() {
        let grid = Grid1D::symmetric(12.0, 2401).unwrap();
        let a = eigenmode(0, 1.0, &grid).unwrap();
        let b = eigenmode(0, 2.0, &grid).unwrap();
        assert_abs_diff_eq!(overlap_coefficient(&a, &a).unwrap().re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(overlap_coefficient(&a, &b).unwrap().norm_sqr(), c00_oracle(1.0, 2.0), epsilon = 1e-8);
        assert_abs_diff_eq!(c00_oracle(1.0, 2.0), 0.942_809_041_582, epsilon = 1e-11);
        let a1 = eigenmode(1, 1.0, &grid).unwrap();
        assert!(overlap_coefficient(&a, &a1).unwrap().norm() < 1e-10);
        let unnormalized = a.scaled(Complex64::new(2.0, 0.0));
        assert!(matches!(overlap_coefficient(&unnormalized, &b), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn overlap_matrix_properties() {
        let f1 = ModeFamily::new(1.0, 12).unwrap();
        let f2 = ModeFamily::new(2.0, 12).unwrap();
        let grid = family_grid(&[f1, f2]).unwrap();
        let same = overlap_matrix(&f1, &f1, &grid).unwrap();
        assert!((same - DMatrix::identity(13, 13)).norm() < 1e-10);
        let c = overlap_matrix(&f1, &f2, &grid).unwrap();
        for n in 0..=12 {
            for m in 0..=12 {
                if (n + m) % 2 == 1 {
                    assert!(c[(n, m)].norm() < 1e-10);
                }
            }
        }
        let row: f64 = (0..=12).map(|m| c[(0, m)].norm_sqr()).sum();
        assert!(row >= 0.9999, "{row}");
        for m in (0..=12).step_by(2) {
            assert_abs_diff_eq!(c[(0, m)].norm_sqr(), even_population_oracle(1.0, 2.0, m), epsilon = 1e-10);
        }
    }

    #[test]
    fn truncation_error_shrinks_with_basis_size() {
        let mut last = f64::INFINITY;
        for n_max in [2, 4, 8, 12, 16] {
            let pops = sudden_jump_populations(1.0, 3.0, 1, n_max).unwrap();
            let miss = 1.0 - pops.iter().sum::<f64>();
            assert!(miss <= last + 1e-14, "N = {n_max}: {miss} > {last}");
            last = miss;
        }
    }

    #[test]
    fn jump_populations() {
        let same = sudden_jump_populations(1.5, 1.5, 2, 6).unwrap();
        for (m, p) in same.iter().enumerate() {
            assert_abs_diff_eq!(*p, if m == 2 { 1.0 } else { 0.0 }, epsilon = 1e-10);
        }
        let pops = sudden_jump_populations(1.0, 2.0, 0, 16).unwrap();
        assert_abs_diff_eq!(pops[0], 0.942_809, epsilon = 1e-6);
        for m in (1..=16).step_by(2) {
            assert!(pops[m].abs() < 1e-10);
        }
        assert_abs_diff_eq!(pops.iter().sum::<f64>(), 1.0, epsilon = 1e-4);
    }

    #[test]
    fn ground_state_wigner() {
        let grid = Grid1D::symmetric(10.0, 401).unwrap();
        let w = wigner_transform(&eigenmode(0, 1.0, &grid).unwrap()).unwrap();
        for iq in (0..401).step_by(7) {
            for ip in (0..w.p_grid().n_points()).step_by(5) {
                let (q, p) = (w.q_grid().point(iq), w.p_grid().point(ip));
                let expected = if q.abs() < 5.0 { 2.0 * (-q * q - p * p).exp() } else { w.value(iq, ip) };
                assert_abs_diff_eq!(w.value(iq, ip), expected, epsilon = 1e-6);
            }
        }
        assert_abs_diff_eq!(w.integral(), 2.0 * PI, epsilon = 1e-6);
    }

    #[test]
    fn wigner_origin_values() {
        let grid = Grid1D::symmetric(10.0, 401).unwrap();
        let p_grid = Grid1D::symmetric(6.0, 241).unwrap();
        for n in 0..=4 {
            let w = wigner_transform_on(&eigenmode(n, 1.0, &grid).unwrap(), &p_grid).unwrap();
            let expected = 2.0 * if n % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(w.value(200, 120), expected, epsilon = 1e-5);
        }
    }

    #[test]
    fn wigner_is_real_for_any_state() {
        // The transform returns f64 by construction; check instead that the
        // imaginary part of the unsymmetrized sum vanishes.
        let grid = Grid1D::symmetric(8.0, 161).unwrap();
        let psi = field::normalize(&ComplexField::from_fn(grid, |t| {
            Complex64::new((-(t - 1.0).powi(2)).exp(), 0.3 * t * (-t * t / 3.0).exp()) * Complex64::from_polar(1.0, 0.7 * t * t)
        }))
        .unwrap();
        let v = psi.values();
        let h = grid.d_tau();
        for i in [40usize, 80, 111] {
            for p in [-2.0, 0.3, 1.7] {
                let reach = i.min(160 - i) as i64;
                let z: Complex64 = (-reach..=reach)
                    .map(|j| {
                        let (a, b) = ((i as i64 + j) as usize, (i as i64 - j) as usize);
                        v[a].conj() * v[b] * Complex64::from_polar(2.0 * h, 2.0 * p * j as f64 * h)
                    })
                    .sum();
                assert!(z.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn wigner_route_matches_overlap() {
        let grid = Grid1D::symmetric(11.0, 441).unwrap();
        let p_grid = Grid1D::symmetric(11.0, 441).unwrap();
        let (a, b): (Vec<_>, Vec<_>) = (0..=6)
            .map(|n| (eigenmode(n, 1.0, &grid).unwrap(), eigenmode(n, 2.0, &grid).unwrap()))
            .unzip();
        let wa: Vec<_> = a.iter().map(|f| wigner_transform_on(f, &p_grid).unwrap()).collect();
        let wb: Vec<_> = b.iter().map(|f| wigner_transform_on(f, &p_grid).unwrap()).collect();
        for n in 0..=6 {
            assert_abs_diff_eq!(fc_via_wigner(&wa[n], &wa[n]).unwrap(), 1.0, epsilon = 1e-6);
            if n > 0 {
                assert!(fc_via_wigner(&wa[n], &wa[n - 1]).unwrap().abs() < 1e-6);
            }
            for m in 0..=6 {
                let direct = overlap_coefficient(&a[n], &b[m]).unwrap().norm_sqr();
                let phase_space = fc_via_wigner(&wa[n], &wb[m]).unwrap();
                assert_abs_diff_eq!(direct, phase_space, epsilon = 1e-6);
            }
        }
        let other = wigner_transform_on(&a[0], &Grid1D::symmetric(5.0, 101).unwrap()).unwrap();
        assert!(fc_via_wigner(&wa[0], &other).is_err());
    }

    #[test]
    fn constant_frequency_epsilon() {
        let traj = epsilon_evolve(EpsilonState::initial(), &FrequencySchedule::Constant(1.0), 20.0, 0.005).unwrap();
        for s in &traj {
            assert!((s.eps - Complex64::from_polar(1.0, s.t)).norm() < 1e-8);
            assert_abs_diff_eq!(s.phase, s.t, epsilon = 1e-8);
        }
    }

    #[test]
    fn wronskian_is_conserved() {
        let schedules = [
            FrequencySchedule::Jump { before: 1.0, after: 2.0, t_jump: 1.0 },
            FrequencySchedule::Ramp { from: 1.0, to: 2.0, t_start: 2.0, t_end: 12.0 },
            FrequencySchedule::custom(|t| 1.5 + 0.5 * (0.7 * t).sin(), vec![]),
        ];
        for sch in &schedules {
            let dt = default_epsilon_dt(sch, 50.0);
            let traj = epsilon_evolve(EpsilonState::initial(), sch, 10_000.0 * dt, dt).unwrap();
            assert!(traj.len() >= 10_001);
            let worst = traj.iter().map(|s| (s.wronskian() - 1.0).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-10, "{sch:?}: {worst}");
        }
    }

    #[test]
    fn sudden_jump_epsilon_matches_piecewise_solution() {
        let sch = FrequencySchedule::Jump { before: 1.0, after: 2.0, t_jump: 1.0 };
        let traj = epsilon_evolve(EpsilonState::initial(), &sch, 11.0, 0.0025).unwrap();
        let e1 = Complex64::from_polar(1.0, 1.0);
        let (a, b) = (0.75 * e1, 0.25 * e1);
        for s in &traj {
            let exact = if s.t <= 1.0 {
                Complex64::from_polar(1.0, s.t)
            } else {
                a * Complex64::from_polar(1.0, 2.0 * (s.t - 1.0)) + b * Complex64::from_polar(1.0, -2.0 * (s.t - 1.0))
            };
            assert!((s.eps - exact).norm() < 1e-8, "t = {}", s.t);
        }
        // |ε| swings between |A| − |B| and |A| + |B|.
        let after: Vec<f64> = traj.iter().filter(|s| s.t > 1.0).map(|s| s.eps.norm()).collect();
        let max = after.iter().cloned().fold(0.0, f64::max);
        let min = after.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(max, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(min, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn constant_frequency_modes_are_eigenmodes() {
        let grid = Grid1D::symmetric(12.0, 1201).unwrap();
        let traj = epsilon_evolve(EpsilonState::initial(), &FrequencySchedule::Constant(1.0), 9.0, 0.005).unwrap();
        let st = traj.last().unwrap();
        for n in 0..=5 {
            let psi = parametric_mode(n, st, &grid).unwrap();
            let expected = harmonic::stationary_mode(n, 1.0, st.t, &grid).unwrap();
            let diff = psi.values().iter().zip(expected.values()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-8, "n = {n}: {diff}");
        }
        let psi0 = parametric_mode(0, st, &grid).unwrap();
        for (tau, d) in grid.points().zip(psi0.density()) {
            assert_abs_diff_eq!(d, (-tau * tau).exp() / PI.sqrt(), epsilon = 1e-8);
        }
    }

    #[test]
    fn parametric_modes_are_orthonormal() {
        let grid = Grid1D::symmetric(16.0, 3201).unwrap();
        let sch = FrequencySchedule::Jump { before: 1.0, after: 2.0, t_jump: 1.0 };
        let traj = epsilon_evolve(EpsilonState::initial(), &sch, 4.3, 0.0025).unwrap();
        let st = traj.last().unwrap();
        let modes: Vec<_> = (0..=6).map(|n| parametric_mode(n, st, &grid).unwrap()).collect();
        for (i, a) in modes.iter().enumerate() {
            for (j, b) in modes.iter().enumerate() {
                let ov = field::overlap_inner(a, b).unwrap();
                assert!((ov - if i == j { 1.0 } else { 0.0 }).norm() < 1e-8);
            }
        }
    }

    /// Crank–Nicolson evolution of a parametric mode through a frequency
    /// ramp lands on the parametric mode at the final time, including phase.
    #[test]
    fn parametric_modes_follow_the_envelope_equation() {
        use crate::envelope::{evolve, EvolutionConfig};
        use crate::line::PotentialProfile;
        let sch = FrequencySchedule::Ramp { from: 1.0, to: 1.6, t_start: 0.5, t_end: 2.5 };
        let sch_u = sch.clone();
        let potential = PotentialProfile::from_fn(move |tau, s| 0.5 * sch_u.value(s).powi(2) * tau * tau, true);
        let grid = Grid1D::symmetric(12.0, 2401).unwrap();
        let t_end = 3.0;
        let traj = epsilon_evolve(EpsilonState::initial(), &sch, t_end, 0.001).unwrap();
        for n in [0, 1, 3] {
            let start = parametric_mode(n, &traj[0], &grid).unwrap();
            let cfg = EvolutionConfig::new(0.001, t_end).unwrap().with_stride(1_000_000);
            let out = evolve(&start, &potential, &cfg).unwrap();
            let expected = parametric_mode(n, traj.last().unwrap(), &grid).unwrap();
            let ov = field::overlap_inner(&expected, out.last_field().unwrap()).unwrap();
            assert!((ov - 1.0).norm() < 2e-3, "n = {n}: {ov}");
        }
    }

    #[test]
    fn adiabatic_ramp_keeps_ground_state() {
        let sch = FrequencySchedule::Ramp { from: 1.0, to: 2.0, t_start: 0.0, t_end: 60.0 };
        let grid = Grid1D::symmetric(10.0, 1001).unwrap();
        let traj = epsilon_evolve(EpsilonState::initial(), &sch, 60.0, 0.005).unwrap();
        for s in traj.iter().step_by(2000) {
            let psi = parametric_mode(0, s, &grid).unwrap();
            let ground = eigenmode(0, sch.value(s.t), &grid).unwrap();
            let fidelity = field::overlap_inner(&ground, &psi).unwrap().norm_sqr();
            assert!(fidelity > 0.999, "t = {}: {fidelity}", s.t);
        }
    }

    #[test]
    fn renormalization_restores_wronskian() {
        let st = EpsilonState { eps: Complex64::new(0.8, 0.3), eps_dot: Complex64::new(0.1, 1.2), t: 0.0, phase: 0.3f64.atan2(0.8) };
        let (fixed, flagged) = st.renormalized();
        assert!(flagged);
        assert_abs_diff_eq!(fixed.wronskian(), 1.0, epsilon = 1e-14);
        let grid = Grid1D::symmetric(10.0, 1001).unwrap();
        assert_abs_diff_eq!(norm(&parametric_mode(2, &st, &grid).unwrap()).unwrap(), 1.0, epsilon = 1e-8);
        let (same, flagged) = EpsilonState::initial().renormalized();
        assert!(!flagged && same == EpsilonState::initial());
    }

    #[test]
    fn unwrapped_phase_is_continuous() {
        let traj = epsilon_evolve(EpsilonState::ground(3.0, 0.0), &FrequencySchedule::Constant(3.0), 10.0, 0.001).unwrap();
        let last = traj.last().unwrap();
        assert_abs_diff_eq!(last.phase, 30.0, epsilon = 1e-8);
        assert!(traj.windows(2).all(|w| w[1].phase > w[0].phase));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn parametric_modes_are_normalized(w1 in 0.5f64..2.0, w2 in 0.5f64..2.5, tj in 0.1f64..2.0, t in 0.0f64..4.0, n in 0usize..6) {
            let sch = FrequencySchedule::Jump { before: w1, after: w2, t_jump: tj };
            let traj = epsilon_evolve(EpsilonState::ground(w1, 0.0), &sch, t, 0.002).unwrap();
            let st = traj.last().unwrap();
            let width = st.eps.norm();
            let grid = Grid1D::symmetric(14.0 * width.max(0.5) + 4.0, 4001).unwrap();
            let psi = parametric_mode(n, st, &grid).unwrap();
            prop_assert!((norm(&psi).unwrap() - 1.0).abs() < 1e-8);
            let m = moments(&psi).unwrap();
            prop_assert!(m.sigma * m.sigma_p >= 0.5 - 1e-8);
        }
    }
}
