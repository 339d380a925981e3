//! Distributed line parameters and the maps from them to phase velocity,
//! refractive index and the effective potential of the envelope equation.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::Grid1D;

/// Speed of light in vacuum (m/s), exact SI value.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Above this max|U| the weak-perturbation envelope model is flagged.
pub const WEAK_POTENTIAL_LIMIT: f64 = 0.1;

/// Coordinate a modulation profile varies along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Axis {
    /// Position along the line, x (m).
    #[default]
    Space,
    /// Time, t (s).
    Time,
}

impl Axis {
    fn pick(self, x: f64, t: f64) -> f64 {
        match self {
            Axis::Space => x,
            Axis::Time => t,
        }
    }
}

type ModulationFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Relative modulation f(x, t) of L' or C'.
#[derive(Clone)]
pub enum Modulation {
    Constant(f64),
    /// `before` for u < at, `after` for u ≥ at.
    Step {
        axis: Axis,
        at: f64,
        before: f64,
        after: f64,
    },
    /// `inside` on [start, end), `outside` elsewhere.
    Rectangle {
        axis: Axis,
        start: f64,
        end: f64,
        inside: f64,
        outside: f64,
    },
    /// base + curvature·(u − center)²
    Parabola {
        axis: Axis,
        center: f64,
        base: f64,
        curvature: f64,
    },
    /// base + amplitude·exp(−(u − center)²/(2 width²))
    Bump {
        axis: Axis,
        center: f64,
        width: f64,
        base: f64,
        amplitude: f64,
    },
    /// Linear interpolation between (u, f) knots, held constant outside.
    Piecewise { axis: Axis, knots: Vec<(f64, f64)> },
    /// Pointwise product of several profiles, e.g. a spatial shape switched in time.
    Product(Vec<Modulation>),
    Custom(ModulationFn),
}

impl fmt::Debug for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulation::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Modulation::Step { axis, at, before, after } => f
                .debug_struct("Step")
                .field("axis", axis)
                .field("at", at)
                .field("before", before)
                .field("after", after)
                .finish(),
            Modulation::Rectangle { axis, start, end, inside, outside } => f
                .debug_struct("Rectangle")
                .field("axis", axis)
                .field("start", start)
                .field("end", end)
                .field("inside", inside)
                .field("outside", outside)
                .finish(),
            Modulation::Parabola { axis, center, base, curvature } => f
                .debug_struct("Parabola")
                .field("axis", axis)
                .field("center", center)
                .field("base", base)
                .field("curvature", curvature)
                .finish(),
            Modulation::Bump { axis, center, width, base, amplitude } => f
                .debug_struct("Bump")
                .field("axis", axis)
                .field("center", center)
                .field("width", width)
                .field("base", base)
                .field("amplitude", amplitude)
                .finish(),
            Modulation::Piecewise { axis, knots } => f
                .debug_struct("Piecewise")
                .field("axis", axis)
                .field("knots", knots)
                .finish(),
            Modulation::Product(parts) => f.debug_tuple("Product").field(parts).finish(),
            Modulation::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Default for Modulation {
    fn default() -> Self {
        Modulation::Constant(1.0)
    }
}

impl Modulation {
    pub fn custom(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Modulation::Custom(Arc::new(f))
    }

    /// Modulation that, applied to L' alone, produces the effective potential
    /// `u(x, t)`: f = (1 + u)^(−2).
    pub fn for_potential(u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Modulation::custom(move |x, t| (1.0 + u(x, t)).powi(-2))
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        match self {
            Modulation::Constant(v) => *v,
            Modulation::Step { axis, at, before, after } => {
                if axis.pick(x, t) < *at {
                    *before
                } else {
                    *after
                }
            }
            Modulation::Rectangle { axis, start, end, inside, outside } => {
                let u = axis.pick(x, t);
                if u >= *start && u < *end {
                    *inside
                } else {
                    *outside
                }
            }
            Modulation::Parabola { axis, center, base, curvature } => {
                let d = axis.pick(x, t) - center;
                base + curvature * d * d
            }
            Modulation::Bump { axis, center, width, base, amplitude } => {
                let d = (axis.pick(x, t) - center) / width;
                base + amplitude * (-0.5 * d * d).exp()
            }
            Modulation::Piecewise { axis, knots } => interpolate(knots, axis.pick(x, t)),
            Modulation::Product(parts) => parts.iter().map(|m| m.value(x, t)).product(),
            Modulation::Custom(f) => f(x, t),
        }
    }

    /// True when the profile never changes in time.
    pub fn is_static(&self) -> bool {
        match self {
            Modulation::Constant(_) => true,
            Modulation::Step { axis, .. }
            | Modulation::Rectangle { axis, .. }
            | Modulation::Parabola { axis, .. }
            | Modulation::Bump { axis, .. }
            | Modulation::Piecewise { axis, .. } => *axis == Axis::Space,
            Modulation::Product(parts) => parts.iter().all(Modulation::is_static),
            Modulation::Custom(_) => false,
        }
    }
}

fn interpolate(knots: &[(f64, f64)], u: f64) -> f64 {
    match knots {
        [] => 1.0,
        [(_, v)] => *v,
        _ => {
            if u <= knots[0].0 {
                return knots[0].1;
            }
            for w in knots.windows(2) {
                let ((u0, v0), (u1, v1)) = (w[0], w[1]);
                if u <= u1 {
                    return v0 + (v1 - v0) * (u - u0) / (u1 - u0);
                }
            }
            knots[knots.len() - 1].1
        }
    }
}

/// Per-unit-length line parameters with their modulation profiles:
/// L' = l0·f1(x, t), C' = c0·f2(x, t), series resistance r0.
#[derive(Debug, Clone)]
pub struct LineSpec {
    l0: f64,
    c0: f64,
    r0: f64,
    f1: Modulation,
    f2: Modulation,
}

impl LineSpec {
    pub fn new(l0: f64, c0: f64, r0: f64, f1: Modulation, f2: Modulation) -> Result<Self> {
        if !(l0 > 0.0 && l0.is_finite()) {
            return Err(Error::Domain(format!("l0 must be positive, got {l0}")));
        }
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(Error::Domain(format!("c0 must be positive, got {c0}")));
        }
        if !(r0 >= 0.0 && r0.is_finite()) {
            return Err(Error::Domain(format!("r0 must be non-negative, got {r0}")));
        }
        if let Modulation::Piecewise { knots, .. } = &f1 {
            check_knots(knots)?;
        }
        if let Modulation::Piecewise { knots, .. } = &f2 {
            check_knots(knots)?;
        }
        Ok(Self { l0, c0, r0, f1, f2 })
    }

    /// Lossless line with no modulation.
    pub fn homogeneous(l0: f64, c0: f64) -> Result<Self> {
        Self::new(l0, c0, 0.0, Modulation::default(), Modulation::default())
    }

    pub fn with_resistance(mut self, r0: f64) -> Result<Self> {
        if !(r0 >= 0.0 && r0.is_finite()) {
            return Err(Error::Domain(format!("r0 must be non-negative, got {r0}")));
        }
        self.r0 = r0;
        Ok(self)
    }

    pub fn l0(&self) -> f64 {
        self.l0
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn f1(&self) -> &Modulation {
        &self.f1
    }

    pub fn f2(&self) -> &Modulation {
        &self.f2
    }

    /// Unperturbed phase velocity V₀ = 1/√(L'₀C'₀).
    pub fn v0(&self) -> f64 {
        1.0 / (self.l0 * self.c0).sqrt()
    }

    /// Unperturbed characteristic impedance √(L'₀/C'₀).
    pub fn z0(&self) -> f64 {
        (self.l0 / self.c0).sqrt()
    }

    /// Unperturbed refractive index c/V₀.
    pub fn n0(&self) -> f64 {
        SPEED_OF_LIGHT / self.v0()
    }

    pub fn is_static(&self) -> bool {
        self.f1.is_static() && self.f2.is_static()
    }

    /// (f1, f2) at a point, rejecting non-positive values.
    pub fn modulations(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        let (a, b) = (self.f1.value(x, t), self.f2.value(x, t));
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!(
                "modulations must be positive, got f1 = {a}, f2 = {b} at x = {x}, t = {t}"
            )));
        }
        Ok((a, b))
    }

    pub fn inductance(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.l0 * self.modulations(x, t)?.0)
    }

    pub fn capacitance(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.c0 * self.modulations(x, t)?.1)
    }

    /// Relative refractive index N = √(f1·f2).
    pub fn relative_index(&self, x: f64, t: f64) -> Result<f64> {
        let (a, b) = self.modulations(x, t)?;
        Ok((a * b).sqrt())
    }
}

fn check_knots(knots: &[(f64, f64)]) -> Result<()> {
    if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Domain("piecewise knots must be strictly increasing".into()));
    }
    Ok(())
}

/// V = V₀/N with N = √(f1 f2).
pub fn phase_velocity(spec: &LineSpec, x: f64, t: f64) -> Result<f64> {
    Ok(spec.v0() / spec.relative_index(x, t)?)
}

/// U = √(L'₀C'₀/(L'C')) − 1 = 1/√(f1 f2) − 1.
pub fn effective_potential(spec: &LineSpec, x: f64, t: f64) -> Result<f64> {
    Ok(1.0 / spec.relative_index(x, t)? - 1.0)
}

/// Physical (x, t) to the dimensionless (τ, s) = (ωx/c, ωt).
pub fn to_dimensionless(x: f64, t: f64, omega: f64) -> Result<(f64, f64)> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    Ok((omega * x / SPEED_OF_LIGHT, omega * t))
}

/// Inverse of [`to_dimensionless`].
pub fn to_physical(tau: f64, s: f64, omega: f64) -> Result<(f64, f64)> {
    if !(omega > 0.0) {
        return Err(Error::Domain(format!("omega must be positive, got {omega}")));
    }
    Ok((tau * SPEED_OF_LIGHT / omega, s / omega))
}

type PotentialFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// One sampled time slice of a tabulated potential, valid from `s_start`
/// until the next slice begins.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSlice {
    pub s_start: f64,
    pub values: Vec<f64>,
}

#[derive(Clone)]
pub enum PotentialForm {
    Function { u: PotentialFn, time_dependent: bool },
    Sampled { grid: Grid1D, slices: Vec<PotentialSlice> },
}

/// Effective potential U(τ, s) acting on the envelope, together with the
/// unperturbed index n₀ whose square plays the role of a mass.
#[derive(Clone)]
pub struct PotentialProfile {
    form: PotentialForm,
    n0: f64,
}

impl fmt::Debug for PotentialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("PotentialProfile");
        match &self.form {
            PotentialForm::Function { time_dependent, .. } => {
                d.field("form", &"function").field("time_dependent", time_dependent)
            }
            PotentialForm::Sampled { grid, slices } => {
                d.field("grid", grid).field("slices", &slices.len())
            }
        };
        d.field("n0", &self.n0).finish()
    }
}

impl PotentialProfile {
    pub fn from_fn(u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, time_dependent: bool) -> Self {
        Self {
            form: PotentialForm::Function {
                u: Arc::new(u),
                time_dependent,
            },
            n0: 1.0,
        }
    }

    pub fn zero() -> Self {
        Self::from_fn(|_, _| 0.0, false)
    }

    /// U = kτ²/2.
    pub fn harmonic(k: f64) -> Self {
        Self::from_fn(move |tau, _| 0.5 * k * tau * tau, false)
    }

    /// Quadratic potential whose strength switches from `k_before` to
    /// `k_after` at `s_jump`.
    pub fn harmonic_jump(k_before: f64, k_after: f64, s_jump: f64) -> Self {
        Self::from_fn(
            move |tau, s| {
                let k = if s < s_jump { k_before } else { k_after };
                0.5 * k * tau * tau
            },
            true,
        )
    }

    /// `value` on [start, end], zero elsewhere. A well has `value < 0`.
    pub fn rectangle(value: f64, start: f64, end: f64) -> Self {
        Self::from_fn(
            move |tau, _| if tau >= start && tau <= end { value } else { 0.0 },
            false,
        )
    }

    /// Closed-form potential of a line, U(τ, s) at x = cτ/ω, t = s/ω.
    /// Points where the modulation is non-positive sample as NaN and are
    /// rejected by [`PotentialProfile::sample`].
    pub fn from_line(spec: LineSpec, omega: f64) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::Domain(format!("omega must be positive, got {omega}")));
        }
        let time_dependent = !spec.is_static();
        Ok(Self::from_fn(
            move |tau, s| {
                let (x, t) = (tau * SPEED_OF_LIGHT / omega, s / omega);
                effective_potential(&spec, x, t).unwrap_or(f64::NAN)
            },
            time_dependent,
        ))
    }

    pub fn sampled(grid: Grid1D, mut slices: Vec<PotentialSlice>) -> Result<Self> {
        if slices.is_empty() {
            return Err(Error::Config("sampled potential needs at least one slice".into()));
        }
        if let Some(bad) = slices.iter().find(|sl| sl.values.len() != grid.n_points()) {
            return Err(Error::GridMismatch(format!(
                "slice at s = {} has {} values for {} grid points",
                bad.s_start,
                bad.values.len(),
                grid.n_points()
            )));
        }
        slices.sort_by(|a, b| a.s_start.total_cmp(&b.s_start));
        Ok(Self {
            form: PotentialForm::Sampled { grid, slices },
            n0: 1.0,
        })
    }

    pub fn with_n0(mut self, n0: f64) -> Self {
        self.n0 = n0;
        self
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn form(&self) -> &PotentialForm {
        &self.form
    }

    pub fn is_time_dependent(&self) -> bool {
        match &self.form {
            PotentialForm::Function { time_dependent, .. } => *time_dependent,
            PotentialForm::Sampled { slices, .. } => slices.len() > 1,
        }
    }

    /// U(τ, s) at every point of `grid`.
    pub fn sample(&self, grid: &Grid1D, s: f64) -> Result<Vec<f64>> {
        let values = match &self.form {
            PotentialForm::Function { u, .. } => grid.points().map(|tau| u(tau, s)).collect(),
            PotentialForm::Sampled { grid: own, slices } => {
                if own != grid {
                    return Err(Error::GridMismatch(format!(
                        "potential tabulated on {own:?}, requested on {grid:?}"
                    )));
                }
                let idx = slices.iter().rposition(|sl| sl.s_start <= s).unwrap_or(0);
                slices[idx].values.clone()
            }
        };
        if let Some(i) = values.iter().position(|u: &f64| !u.is_finite()) {
            return Err(Error::Domain(format!(
                "potential is not finite at tau = {} (s = {s})",
                grid.point(i)
            )));
        }
        Ok(values)
    }
}

/// Samples the effective potential of `spec` on `grid` at dimensionless time
/// `s`, warning when the weak-perturbation limit is exceeded.
pub fn potential_from_spec(spec: &LineSpec, grid: &Grid1D, omega: f64, s: f64) -> Result<PotentialProfile> {
    let mut values = Vec::with_capacity(grid.n_points());
    for tau in grid.points() {
        let (x, t) = to_physical(tau, s, omega)?;
        values.push(effective_potential(spec, x, t)?);
    }
    let max_abs = values.iter().fold(0.0f64, |m, u| m.max(u.abs()));
    if max_abs > WEAK_POTENTIAL_LIMIT {
        log::warn!(
            "max |U| = {max_abs:.4} exceeds {WEAK_POTENTIAL_LIMIT}; the envelope model assumes a weak index perturbation"
        );
    }
    Ok(PotentialProfile::sampled(
        *grid,
        vec![PotentialSlice {
            s_start: f64::NEG_INFINITY,
            values,
        }],
    )?
    .with_n0(spec.n0()))
}
