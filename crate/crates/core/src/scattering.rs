//! Steady-state transmission through piecewise-constant potentials.
//!
//! Each segment carries the (ψ, ψ') pair across its length with the real
//! matrix [[cos κℓ, sin κℓ/κ], [−κ sin κℓ, cos κℓ]], written in terms of
//! κ² = 2m(E − u) so that evanescent segments and κ = 0 need no special
//! basis. Lead amplitudes (e^{iκx}, e^{−iκx}) are attached at both ends.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this |κ²ℓ²| the propagation matrix uses its Taylor series.
const SERIES_THRESHOLD: f64 = 1e-4;

/// Resonances must transmit at least this well to be reported.
pub const RESONANCE_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub length: f64,
    pub u: f64,
}

/// Ordered potential segments between two flat leads.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringStack {
    segments: Vec<Segment>,
    u_left: f64,
    u_right: f64,
    mass: f64,
}

impl Default for ScatteringStack {
    fn default() -> Self {
        Self { segments: Vec::new(), u_left: 0.0, u_right: 0.0, mass: 1.0 }
    }
}

impl ScatteringStack {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        for (i, s) in segments.iter().enumerate() {
            if !(s.length > 0.0 && s.length.is_finite()) || !s.u.is_finite() {
                return Err(Error::Config(format!(
                    "segment {i}: need finite length > 0 and finite u, got length = {}, u = {}",
                    s.length, s.u
                )));
            }
        }
        Ok(Self { segments, ..Self::default() })
    }

    /// Rectangular well u = −depth over `width`.
    pub fn well(depth: f64, width: f64) -> Result<Self> {
        Self::new(vec![Segment { length: width, u: -depth }])
    }

    /// Rectangular barrier u = height over `width`.
    pub fn barrier(height: f64, width: f64) -> Result<Self> {
        Self::new(vec![Segment { length: width, u: height }])
    }

    pub fn with_leads(mut self, u_left: f64, u_right: f64) -> Result<Self> {
        if !(u_left.is_finite() && u_right.is_finite()) {
            return Err(Error::Config("lead potentials must be finite".into()));
        }
        self.u_left = u_left;
        self.u_right = u_right;
        Ok(self)
    }

    pub fn with_mass(mut self, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Config(format!("mass must be positive, got {mass}")));
        }
        self.mass = mass;
        Ok(self)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn u_left(&self) -> f64 {
        self.u_left
    }

    pub fn u_right(&self) -> f64 {
        self.u_right
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Same structure seen from the other side.
    pub fn reversed(&self) -> Self {
        Self {
            segments: self.segments.iter().rev().copied().collect(),
            u_left: self.u_right,
            u_right: self.u_left,
            mass: self.mass,
        }
    }

    /// Total extent of the segments.
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    fn lead_wavenumber(&self, energy: f64, u: f64, side: &str) -> Result<f64> {
        if !(energy > u) {
            return Err(Error::Domain(format!(
                "energy {energy} does not propagate in the {side} lead (u = {u})"
            )));
        }
        Ok((2.0 * self.mass * (energy - u)).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterResult {
    pub energy: f64,
    pub transmission: f64,
    pub reflection: f64,
    /// Maps left-lead amplitudes (A, B) to right-lead amplitudes (C, D).
    pub matrix: Matrix2<Complex64>,
}

impl ScatterResult {
    /// Reflection amplitude r = −M₂₁/M₂₂ for incidence from the left.
    pub fn reflection_amplitude(&self) -> Complex64 {
        -self.matrix[(1, 0)] / self.matrix[(1, 1)]
    }

    /// Transmission amplitude t = det M / M₂₂.
    pub fn transmission_amplitude(&self) -> Complex64 {
        self.matrix.determinant() / self.matrix[(1, 1)]
    }
}

/// (ψ, ψ') propagation across a segment with κ² = `q`.
fn segment_matrix(q: f64, length: f64) -> Matrix2<f64> {
    let x = q * length * length;
    let (c, sinc_l) = if x.abs() < SERIES_THRESHOLD {
        (
            1.0 - x / 2.0 + x * x / 24.0,
            length * (1.0 - x / 6.0 + x * x / 120.0),
        )
    } else if q > 0.0 {
        let k = q.sqrt();
        ((k * length).cos(), (k * length).sin() / k)
    } else {
        let k = (-q).sqrt();
        ((k * length).cosh(), (k * length).sinh() / k)
    };
    Matrix2::new(c, sinc_l, -q * sinc_l, c)
}

fn lead_basis(kappa: f64) -> Matrix2<Complex64> {
    let ik = Complex64::new(0.0, kappa);
    Matrix2::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), ik, -ik)
}

fn lead_basis_inverse(kappa: f64) -> Matrix2<Complex64> {
    let half = Complex64::new(0.5, 0.0);
    let w = Complex64::new(0.0, -0.5 / kappa);
    Matrix2::new(half, w, half, -w)
}

/// Amplitude transfer matrix D_R⁻¹ (S_N ⋯ S_1) D_L.
pub fn transfer_matrix(stack: &ScatteringStack, energy: f64) -> Result<Matrix2<Complex64>> {
    if !energy.is_finite() {
        return Err(Error::Domain(format!("energy must be finite, got {energy}")));
    }
    let kl = stack.lead_wavenumber(energy, stack.u_left, "left")?;
    let kr = stack.lead_wavenumber(energy, stack.u_right, "right")?;
    let mut p = Matrix2::<f64>::identity();
    for seg in &stack.segments {
        p = segment_matrix(2.0 * stack.mass * (energy - seg.u), seg.length) * p;
    }
    let p = p.map(|v| Complex64::new(v, 0.0));
    Ok(lead_basis_inverse(kr) * p * lead_basis(kl))
}

/// Transmission and reflection probabilities for incidence from the left.
pub fn transmission(stack: &ScatteringStack, energy: f64) -> Result<ScatterResult> {
    let matrix = transfer_matrix(stack, energy)?;
    let kl = stack.lead_wavenumber(energy, stack.u_left, "left")?;
    let kr = stack.lead_wavenumber(energy, stack.u_right, "right")?;
    let m22 = matrix[(1, 1)];
    let r = -matrix[(1, 0)] / m22;
    let t = matrix.determinant() / m22;
    let transmission = kr / kl * t.norm_sqr();
    let reflection = r.norm_sqr();
    if !(transmission.is_finite() && reflection.is_finite()) {
        return Err(Error::Numerical(format!("transfer matrix overflow at E = {energy}")));
    }
    Ok(ScatterResult { energy, transmission, reflection, matrix })
}

/// One transparency energy of a rectangular well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    /// Number of half-wavelengths fitting the well.
    pub n: usize,
    pub energy: f64,
    /// Whether n is even.
    pub even: bool,
    pub transmission: f64,
}

/// Energies E_n = (nπ/L)²/(2m) − V₀ > 0 for n ≤ `n_max`, where an integer
/// number of half-wavelengths fits a well of depth V₀ and width L.
pub fn ramsauer_resonances(depth: f64, width: f64, mass: f64, n_max: usize) -> Result<Vec<Resonance>> {
    if !(depth > 0.0 && width > 0.0 && mass > 0.0) {
        return Err(Error::Config(format!(
            "need depth, width, mass > 0, got {depth}, {width}, {mass}"
        )));
    }
    let stack = ScatteringStack::well(depth, width)?.with_mass(mass)?;
    let mut out = Vec::new();
    for n in 1..=n_max {
        let kappa = n as f64 * std::f64::consts::PI / width;
        let energy = kappa * kappa / (2.0 * mass) - depth;
        if energy <= 0.0 {
            continue;
        }
        let t = transmission(&stack, energy)?.transmission;
        if (t - 1.0).abs() > RESONANCE_TOLERANCE {
            return Err(Error::Numerical(format!("resonance n = {n} at E = {energy} has T = {t}")));
        }
        out.push(Resonance { n, energy, even: n % 2 == 0, transmission: t });
    }
    Ok(out)
}

/// T(E), R(E) on `n_samples` uniformly spaced energies in [e_min, e_max].
pub fn scan(stack: &ScatteringStack, e_min: f64, e_max: f64, n_samples: usize) -> Result<Vec<ScatterResult>> {
    if n_samples < 2 || !(e_max > e_min) {
        return Err(Error::Config(format!(
            "scan needs n_samples >= 2 and e_max > e_min, got {n_samples}, [{e_min}, {e_max}]"
        )));
    }
    let de = (e_max - e_min) / (n_samples - 1) as f64;
    (0..n_samples)
        .map(|i| {
            let e = if i == n_samples - 1 { e_max } else { e_min + i as f64 * de };
            transmission(stack, e)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Integrates ψ'' = −2m(E − u)ψ from the right lead, where ψ = e^{iκ_R x},
    /// back to the left lead with RK4, and reads T from the incident amplitude.
    fn shooting_transmission(stack: &ScatteringStack, energy: f64, steps_per_unit: usize) -> f64 {
        let m = stack.mass();
        let kl = (2.0 * m * (energy - stack.u_left())).sqrt();
        let kr = (2.0 * m * (energy - stack.u_right())).sqrt();
        let i = Complex64::i();
        let mut y = [Complex64::new(1.0, 0.0), i * kr];
        for seg in stack.segments().iter().rev() {
            let q = 2.0 * m * (energy - seg.u);
            let n = ((seg.length * steps_per_unit as f64).ceil() as usize).max(16);
            let h = -seg.length / n as f64;
            let f = |y: [Complex64; 2]| [y[1], -q * y[0]];
            for _ in 0..n {
                let k1 = f(y);
                let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
                let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
                let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
                y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
                y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
            }
        }
        // ψ = A + B, ψ' = iκ_L (A − B) at the left edge.
        let a = 0.5 * (y[0] + y[1] / (i * kl));
        kr / kl / a.norm_sqr()
    }

    fn well_formula(depth: f64, width: f64, energy: f64) -> f64 {
        let k_in = (2.0 * (energy + depth)).sqrt();
        1.0 / (1.0 + depth * depth * (k_in * width).sin().powi(2) / (4.0 * energy * (energy + depth)))
    }

    #[test]
    fn empty_stack_is_identity() {
        let m = transfer_matrix(&ScatteringStack::default(), 1.3).unwrap();
        assert!((m - Matrix2::identity()).norm() < 1e-15);
        let r = transmission(&ScatteringStack::default(), 0.2).unwrap();
        assert_eq!(r.transmission, 1.0);
        assert_eq!(r.reflection, 0.0);
    }

    #[test]
    fn barrier_tunnelling_matches_shooting() {
        let stack = ScatteringStack::barrier(2.0, 1.5).unwrap();
        for e in [0.3, 1.0, 1.9] {
            let t = transmission(&stack, e).unwrap().transmission;
            assert!(t < 1.0 && t > 0.0);
            assert_abs_diff_eq!(t, shooting_transmission(&stack, e, 20_000), epsilon = 1e-6);
        }
    }

    #[test]
    fn multi_segment_matches_shooting() {
        let stack = ScatteringStack::new(vec![
            Segment { length: 0.7, u: 1.2 },
            Segment { length: 1.1, u: -0.8 },
            Segment { length: 0.4, u: 3.0 },
        ])
        .unwrap()
        .with_leads(0.1, -0.3)
        .unwrap()
        .with_mass(1.7)
        .unwrap();
        for e in [0.5, 1.5, 4.0] {
            let r = transmission(&stack, e).unwrap();
            assert_abs_diff_eq!(r.transmission, shooting_transmission(&stack, e, 20_000), epsilon = 1e-6);
            assert_abs_diff_eq!(r.transmission + r.reflection, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn doubled_segment_composes() {
        let one = ScatteringStack::barrier(0.8, 2.4).unwrap();
        let two = ScatteringStack::new(vec![Segment { length: 1.2, u: 0.8 }; 2]).unwrap();
        for e in [0.3, 0.8, 2.0] {
            let d = transfer_matrix(&one, e).unwrap() - transfer_matrix(&two, e).unwrap();
            assert!(d.norm() < 1e-12, "E = {e}: {}", d.norm());
        }
    }

    #[test]
    fn well_value_from_closed_form_and_shooting() {
        let stack = ScatteringStack::well(2.0, 1.0).unwrap();
        let t = transmission(&stack, 1.0).unwrap().transmission;
        let shot = shooting_transmission(&stack, 1.0, 20_000);
        assert_abs_diff_eq!(t, well_formula(2.0, 1.0, 1.0), epsilon = 1e-12);
        assert_abs_diff_eq!(t, shot, epsilon = 1e-6);
        assert_abs_diff_eq!(t, 0.880_53, epsilon = 1e-4);
    }

    #[test]
    fn integer_half_wavelengths_are_transparent() {
        let (depth, width) = (2.0, 1.0);
        let stack = ScatteringStack::well(depth, width).unwrap();
        for n in 1..6 {
            let e = (n as f64 * std::f64::consts::PI / width).powi(2) / 2.0 - depth;
            if e > 0.0 {
                assert_abs_diff_eq!(transmission(&stack, e).unwrap().transmission, 1.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn high_energy_limit() {
        let stack = ScatteringStack::well(2.0, 1.0).unwrap();
        assert!(transmission(&stack, 200.0).unwrap().transmission > 0.999);
    }

    #[test]
    fn resonance_list() {
        let res = ramsauer_resonances(2.0, std::f64::consts::PI, 1.0, 8).unwrap();
        assert_eq!(res[0].n, 3);
        assert_abs_diff_eq!(res[0].energy, 2.5, epsilon = 1e-12);
        assert!(!res[0].even && res[1].even);
        for r in &res {
            assert_abs_diff_eq!(r.energy, (r.n * r.n) as f64 / 2.0 - 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(r.transmission, 1.0, epsilon = 1e-8);
        }
        // Narrow wells push every E_n up; only a wide well with few allowed
        // half-wavelengths leaves no positive resonance.
        assert_eq!(ramsauer_resonances(2.0, 0.01, 1.0, 5).unwrap().len(), 5);
        assert!(ramsauer_resonances(2.0, 10.0, 1.0, 3).unwrap().is_empty());
        assert!(ramsauer_resonances(-1.0, 1.0, 1.0, 5).is_err());
    }

    #[test]
    fn scans() {
        let flat = scan(&ScatteringStack::default(), 0.1, 5.0, 50).unwrap();
        assert!(flat.iter().all(|r| r.transmission == 1.0));

        let (depth, width) = (2.0, std::f64::consts::PI);
        let stack = ScatteringStack::well(depth, width).unwrap();
        for res in ramsauer_resonances(depth, width, 1.0, 6).unwrap() {
            let table = scan(&stack, res.energy - 0.3, res.energy + 0.3, 61).unwrap();
            let best = table
                .iter()
                .max_by(|a, b| a.transmission.total_cmp(&b.transmission))
                .unwrap();
            assert!((best.energy - res.energy).abs() <= 0.01 + 1e-12);
            assert!(table[0].transmission < best.transmission && table[60].transmission < best.transmission);
        }
        assert!(scan(&stack, 1.0, 1.0, 10).is_err());
        assert!(scan(&stack, 1.0, 2.0, 1).is_err());
    }

    #[test]
    fn segment_edge_energy_is_regular() {
        let stack = ScatteringStack::barrier(1.0, 2.0).unwrap();
        let at = transmission(&stack, 1.0).unwrap();
        assert_abs_diff_eq!(at.transmission + at.reflection, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at.transmission, shooting_transmission(&stack, 1.0, 20_000), epsilon = 1e-8);
        for d in [1e-9, -1e-9] {
            let near = transmission(&stack, 1.0 + d).unwrap();
            assert_abs_diff_eq!(near.transmission, at.transmission, epsilon = 1e-7);
        }
    }

    #[test]
    fn evanescent_lead_is_rejected() {
        let stack = ScatteringStack::default().with_leads(0.0, 1.0).unwrap();
        assert!(matches!(transmission(&stack, 0.5), Err(Error::Domain(_))));
        assert!(ScatteringStack::new(vec![Segment { length: 0.0, u: 1.0 }]).is_err());
    }

    #[test]
    fn determinant_is_lead_flux_ratio() {
        let stack = ScatteringStack::barrier(0.5, 1.0).unwrap().with_leads(0.2, -0.6).unwrap();
        let e = 0.9;
        let m = transfer_matrix(&stack, e).unwrap();
        let ratio = ((e - 0.2) / (e + 0.6)).sqrt();
        assert!((m.determinant() - ratio).norm() < 1e-12);
    }

    fn arb_stack() -> impl Strategy<Value = ScatteringStack> {
        (
            prop::collection::vec((0.05f64..2.0, -3.0f64..3.0), 1..6),
            -0.5f64..0.5,
            -0.5f64..0.5,
            0.5f64..2.0,
        )
            .prop_map(|(segs, ul, ur, m)| {
                ScatteringStack::new(segs.into_iter().map(|(length, u)| Segment { length, u }).collect())
                    .unwrap()
                    .with_leads(ul, ur)
                    .unwrap()
                    .with_mass(m)
                    .unwrap()
            })
    }

    proptest! {
        #[test]
        fn flux_is_conserved(stack in arb_stack(), de in 0.01f64..6.0) {
            let e = stack.u_left().max(stack.u_right()) + de;
            let r = transmission(&stack, e).unwrap();
            prop_assert!((r.transmission + r.reflection - 1.0).abs() < 1e-10);
        }

        #[test]
        fn reversal_keeps_transmission(stack in arb_stack(), de in 0.01f64..6.0) {
            let e = stack.u_left().max(stack.u_right()) + de;
            let a = transmission(&stack, e).unwrap().transmission;
            let b = transmission(&stack.reversed(), e).unwrap().transmission;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn splitting_a_segment_changes_nothing(stack in arb_stack(), frac in 0.05f64..0.95, de in 0.01f64..6.0) {
            let e = stack.u_left().max(stack.u_right()) + de;
            let mut segs = stack.segments().to_vec();
            let first = segs[0];
            segs[0].length = first.length * frac;
            segs.insert(1, Segment { length: first.length * (1.0 - frac), u: first.u });
            let split = ScatteringStack::new(segs).unwrap()
                .with_leads(stack.u_left(), stack.u_right()).unwrap()
                .with_mass(stack.mass()).unwrap();
            let a = transmission(&stack, e).unwrap();
            let b = transmission(&split, e).unwrap();
            prop_assert!((a.transmission - b.transmission).abs() < 1e-12);
            prop_assert!((a.reflection - b.reflection).abs() < 1e-12);
        }
    }
}
