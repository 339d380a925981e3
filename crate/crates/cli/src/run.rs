//! Dispatch of a validated scenario to the solvers and its artifact files.

use std::io;
use std::path::{Path, PathBuf};

use log::info;
use num_complex::Complex64;

use qline_core::envelope::{default_ds, evolve, probability_beyond, EvolutionConfig};
use qline_core::fdtd::{simulate, LineState, Pulse, SimulationConfig};
use qline_core::field::{self, covariance_determinant, ComplexField, Grid1D};
use qline_core::franck_condon::{
    default_epsilon_dt, default_p_grid, eigenmode, epsilon_evolve, family_grid, fc_via_wigner, overlap_matrix_of,
    parametric_mode, wigner_transform_on, EpsilonState, ModeFamily, WignerGrid,
};
use qline_core::harmonic::{
    default_envelope_ds, displaced_ground_state, energy_level, envelope_ode_solve_with, hermite_gauss_mode,
    minimum_uncertainty_check, stationary_mode, EnvelopeState,
};
use qline_core::line::PotentialProfile;
use qline_core::scattering::{ramsauer_resonances, scan};

use crate::config::{
    ConfigErrors, EvolveParams, FranckCondonParams, InitialEnvelope, LineInitial, ModesParams, ParametricParams, Params,
    PotentialSpec, Scenario, ScatterParams, TelegrapherParams,
};
use crate::output::{num, OutputDir};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid scenario\n{0}")]
    Config(#[from] ConfigErrors),
    #[error("{context}: {source}")]
    Solver {
        context: &'static str,
        #[source]
        source: qline_core::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    /// 2 for anything the scenario got wrong, 3 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        use qline_core::Error as E;
        match self {
            RunError::Config(_) => 2,
            RunError::Solver { source: E::Numerical(_) | E::CannotNormalize | E::NotNormalized { .. }, .. } => 3,
            RunError::Solver { .. } => 2,
            RunError::Io { .. } => 1,
        }
    }
}

trait Context<T> {
    fn context(self, what: &'static str) -> Result<T, RunError>;
}

impl<T> Context<T> for qline_core::Result<T> {
    fn context(self, what: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Solver { context: what, source })
    }
}

/// Runs `scenario`, writing its artifacts into `out`. Returns the files written.
pub fn run_scenario(scenario: &Scenario, out: &Path) -> Result<Vec<PathBuf>, RunError> {
    let mut dir = OutputDir::create(out, &scenario.hash)?;
    info!("running {} scenario {} into {}", scenario.kind, &scenario.hash[..12], out.display());
    match &scenario.params {
        Params::Telegrapher(p) => telegrapher(p, &mut dir)?,
        Params::Evolve(p) => run_evolve(p, &mut dir)?,
        Params::Modes(p) => modes(p, &mut dir)?,
        Params::Scatter(p) => scatter(p, &mut dir)?,
        Params::FranckCondon(p) => franck_condon(p, &mut dir)?,
        Params::Parametric(p) => parametric(p, &mut dir)?,
    }
    for f in dir.written() {
        info!("wrote {}", f.display());
    }
    Ok(dir.into_written())
}

/// Indices kept when recording every `stride`-th of `len` items, plus the last.
fn strided(len: usize, stride: usize) -> impl Iterator<Item = usize> {
    (0..len).filter(move |&k| k % stride == 0 || k + 1 == len)
}

fn field_rows(psi: &ComplexField) -> impl Iterator<Item = Vec<String>> + '_ {
    psi.grid()
        .points()
        .zip(psi.values())
        .map(|(tau, v)| vec![num(tau), num(v.re), num(v.im), num(v.norm_sqr())])
}

fn telegrapher(p: &TelegrapherParams, dir: &mut OutputDir) -> Result<(), RunError> {
    let state = match p.initial {
        LineInitial::Pulse { amplitude, center, width, omega } => {
            let mut st = LineState::with_auto_dt(p.line.clone(), &p.domain, Some(omega)).context("setting up line")?;
            let pulse = Pulse::new(&p.line, amplitude, center, width, omega).context("building pulse")?;
            st.set_forward_pulse(&pulse);
            st
        }
        LineInitial::Standing { amplitude, wavenumber } => {
            let mut st =
                LineState::with_auto_dt(p.line.clone(), &p.domain, Some(p.carrier)).context("setting up line")?;
            for j in 0..st.i.len() {
                st.i[j] = amplitude * (wavenumber * st.i_position(j)).cos();
            }
            st
        }
    };
    info!("dt = {:e} s, Courant number {:.4}", state.dt(), state.courant_number());
    let cfg = SimulationConfig::new(p.t_end, p.carrier)
        .context("configuring run")?
        .with_probes(p.probes.clone())
        .with_stride(p.stride)
        .with_snapshots(p.snapshots.clone());
    let out = simulate(state, &cfg).context("running telegrapher")?;

    let envelope = |e: Option<Complex64>| match e {
        Some(z) => [num(z.re), num(z.im)],
        None => [String::new(), String::new()],
    };
    dir.csv(
        "probes.csv",
        &[("t", "s"), ("x", "m"), ("delta_v", "V"), ("delta_i", "A"), ("envelope_re", "A"), ("envelope_im", "A")],
        out.probes.iter().map(|r| {
            let [re, im] = envelope(r.envelope);
            vec![num(r.t), num(r.x), num(r.delta_v), num(r.delta_i), re, im]
        }),
    )?;
    dir.csv("energy.csv", &[("t", "s"), ("energy", "J")], out.energy.iter().map(|(t, e)| vec![num(*t), num(*e)]))?;
    if !out.snapshots.is_empty() {
        dir.csv(
            "snapshot_moments.csv",
            &[("t", "s"), ("centroid", "m"), ("width", "m"), ("intensity", "A^2 m")],
            out.snapshots.iter().map(|s| vec![num(s.t), num(s.centroid), num(s.width), num(s.intensity)]),
        )?;
        dir.csv(
            "snapshots.csv",
            &[("t", "s"), ("x", "m"), ("envelope_re", "A"), ("envelope_im", "A"), ("intensity", "A^2")],
            out.snapshots.iter().flat_map(|s| {
                s.positions
                    .iter()
                    .zip(&s.envelope)
                    .map(move |(x, z)| vec![num(s.t), num(*x), num(z.re), num(z.im), num(z.norm_sqr())])
            }),
        )?;
    }
    Ok(())
}

fn potential(spec: &PotentialSpec) -> Result<(PotentialProfile, f64), RunError> {
    Ok(match spec {
        PotentialSpec::Zero => (PotentialProfile::zero(), 1.0),
        PotentialSpec::Harmonic { k } => (PotentialProfile::harmonic(*k), 1.0),
        PotentialSpec::HarmonicJump { k_before, k_after, s_jump } => {
            (PotentialProfile::harmonic_jump(*k_before, *k_after, *s_jump), 1.0)
        }
        PotentialSpec::Rectangle { value, start, end } => (PotentialProfile::rectangle(*value, *start, *end), 1.0),
        PotentialSpec::Line { line, omega } => {
            let n0 = line.n0();
            (PotentialProfile::from_line(line.clone(), *omega).context("building line potential")?.with_n0(n0), n0)
        }
    })
}

fn initial_field(init: &InitialEnvelope, grid: &Grid1D) -> Result<ComplexField, RunError> {
    let psi = match *init {
        InitialEnvelope::Mode { n, k, sigma: None, .. } => stationary_mode(n, k, 0.0, grid),
        InitialEnvelope::Mode { n, k, sigma: Some(sigma), sigma_prime, phi } => {
            EnvelopeState::new(sigma, sigma_prime, phi, k).and_then(|env| hermite_gauss_mode(n, &env, grid))
        }
        InitialEnvelope::Displaced { sigma, sigma_prime, k, a, b } => {
            EnvelopeState::new(sigma, sigma_prime, 0.0, k).and_then(|env| displaced_ground_state(&env, a, b, grid))
        }
        InitialEnvelope::Gaussian { center, width, momentum } => Ok(ComplexField::from_fn(*grid, |t| {
            let d = t - center;
            Complex64::from_polar((-d * d / (4.0 * width * width)).exp(), momentum * d)
        })),
    };
    field::normalize(&psi.context("building initial field")?).context("normalizing initial field")
}

fn run_evolve(p: &EvolveParams, dir: &mut OutputDir) -> Result<(), RunError> {
    let grid = p.grid.build().context("building grid")?;
    let (profile, n0) = potential(&p.potential)?;
    let psi0 = initial_field(&p.initial, &grid)?;
    let ds = match p.ds {
        Some(ds) => ds,
        None => default_ds(&grid, &profile, 0.0).context("choosing ds")?,
    };
    let cfg = EvolutionConfig::new(ds, p.s_end)
        .context("configuring evolution")?
        .with_stride(p.stride)
        .with_n0(n0)
        .with_boundary(p.sponge);
    info!("{} steps of ds = {ds:e} on {} points", cfg.n_steps(), grid.n_points());
    let traj = evolve(&psi0, &profile, &cfg).context("evolving envelope")?;

    let mut columns = vec![
        ("s", "1"),
        ("norm", "1"),
        ("mean_tau", "1"),
        ("mean_p", "1"),
        ("sigma", "1"),
        ("sigma_p", "1"),
        ("cross", "1"),
        ("det", "1"),
        ("energy", "1"),
    ];
    if p.beyond.is_some() {
        columns.push(("beyond", "1"));
    }
    let mut rows = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let m = &traj.moments[k];
        let norm = field::norm(&traj.fields[k]).context("measuring norm")?;
        let mut row = vec![
            num(traj.times[k]),
            num(norm),
            num(m.mean_tau),
            num(m.mean_p),
            num(m.sigma),
            num(m.sigma_p),
            num(m.cross),
            num(covariance_determinant(m)),
            num(traj.energy[k]),
        ];
        if let Some(tau) = p.beyond {
            row.push(num(probability_beyond(&traj.fields[k], tau)));
        }
        rows.push(row);
    }
    dir.csv("trajectory.csv", &columns, rows)?;

    let last = traj.last_field().expect("a trajectory records its start");
    let field_columns = [("tau", "1"), ("re", "1"), ("im", "1"), ("density", "1")];
    dir.csv("field_final.csv", &field_columns, field_rows(last))?;
    if p.dump_all {
        dir.csv(
            "fields.csv",
            &[("s", "1"), ("tau", "1"), ("re", "1"), ("im", "1")],
            traj.times.iter().zip(&traj.fields).flat_map(|(s, f)| {
                f.grid().points().zip(f.values()).map(move |(t, v)| vec![num(*s), num(t), num(v.re), num(v.im)])
            }),
        )?;
    }
    if let Some((k, n_max)) = p.projection {
        let mut rows = Vec::new();
        for n in 0..=n_max {
            let mode = stationary_mode(n, k, 0.0, &grid).context("building projection mode")?;
            let c = field::overlap_inner(&mode, last).context("projecting")?;
            rows.push(vec![n.to_string(), num(c.re), num(c.im), num(c.norm_sqr())]);
        }
        dir.csv("projection.csv", &[("n", "1"), ("c_re", "1"), ("c_im", "1"), ("population", "1")], rows)?;
    }
    Ok(())
}

fn modes(p: &ModesParams, dir: &mut OutputDir) -> Result<(), RunError> {
    let grid = p.grid.build().context("building grid")?;
    let init = match p.sigma {
        Some(sigma) => EnvelopeState::new(sigma, p.sigma_prime, p.phi, p.k),
        None => EnvelopeState::equilibrium(p.k).and_then(|e| EnvelopeState::new(e.sigma, p.sigma_prime, p.phi, p.k)),
    }
    .context("building envelope")?;
    let ds = p.ds.unwrap_or_else(|| default_envelope_ds(p.k));
    let samples = envelope_ode_solve_with(init, p.s_end, ds, p.phase_law).context("solving envelope equation")?;

    dir.csv(
        "envelope.csv",
        &[
            ("s", "1"),
            ("sigma", "1"),
            ("sigma_prime", "1"),
            ("phi", "rad"),
            ("inverse_rho", "1"),
            ("envelope_energy", "1"),
            ("uncertainty", "1"),
        ],
        strided(samples.len(), p.stride).map(|i| {
            let e = &samples[i].state;
            vec![
                num(samples[i].s),
                num(e.sigma),
                num(e.sigma_prime),
                num(e.phi),
                num(e.inverse_rho()),
                num(e.envelope_energy()),
                num(e.sigma * e.sigma_p()),
            ]
        }),
    )?;

    let last = samples.last().expect("the solver records its start");
    let mut rows = Vec::new();
    for sample in [&samples[0], last] {
        for n in 0..=p.n_max {
            let psi = hermite_gauss_mode(n, &sample.state, &grid).context("building mode")?;
            rows.extend(field_rows(&psi).map(|r| {
                let mut row = vec![num(sample.s), n.to_string()];
                row.extend(r);
                row
            }));
        }
    }
    dir.csv(
        "modes.csv",
        &[("s", "1"), ("n", "1"), ("tau", "1"), ("re", "1"), ("im", "1"), ("density", "1")],
        rows,
    )?;

    dir.csv(
        "levels.csv",
        &[("n", "1"), ("energy", "1")],
        (0..=p.n_max).map(|n| vec![n.to_string(), num(energy_level(n, p.k))]),
    )?;
    let (product, minimal) = minimum_uncertainty_check(&init).context("measuring uncertainty")?;
    dir.csv(
        "uncertainty.csv",
        &[("s", "1"), ("product", "1"), ("minimal", "bool")],
        [vec![num(0.0), num(product), minimal.to_string()]],
    )
}

fn scatter(p: &ScatterParams, dir: &mut OutputDir) -> Result<(), RunError> {
    let table = scan(&p.stack, p.e_min, p.e_max, p.points).context("scanning energies")?;
    dir.csv(
        "scan.csv",
        &[("energy", "1"), ("transmission", "1"), ("reflection", "1")],
        table.iter().map(|r| vec![num(r.energy), num(r.transmission), num(r.reflection)]),
    )?;
    if let Some(n_max) = p.resonances {
        let well = p.stack.segments()[0];
        let res = ramsauer_resonances(-well.u, well.length, p.stack.mass(), n_max).context("locating resonances")?;
        dir.csv(
            "resonances.csv",
            &[("n", "1"), ("energy", "1"), ("even", "bool"), ("transmission", "1")],
            res.iter().map(|r| vec![r.n.to_string(), num(r.energy), r.even.to_string(), num(r.transmission)]),
        )?;
    }
    Ok(())
}

fn wigner_dump(dir: &mut OutputDir, name: &str, w: &WignerGrid) -> Result<(), RunError> {
    let qs: Vec<f64> = w.q_grid().points().collect();
    let ps: Vec<f64> = w.p_grid().points().collect();
    dir.gnuplot_matrix(name, "q [1] across, p [1] down, W [1]", &qs, &ps, |iq, ip| w.value(iq, ip))
}

fn franck_condon(p: &FranckCondonParams, dir: &mut OutputDir) -> Result<(), RunError> {
    let first = ModeFamily::new(p.omega1, p.n_max).context("first mode family")?;
    let second = ModeFamily::new(p.omega2, p.n_max).context("second mode family")?;
    let grid = match &p.grid {
        Some(g) => g.build().context("building grid")?,
        None => family_grid(&[first, second]).context("choosing grid")?,
    };
    let a = first.modes(&grid).context("building modes")?;
    let b = second.modes(&grid).context("building modes")?;
    let c = overlap_matrix_of(&a, &b).context("computing overlaps")?;

    let wants_wigner = p.wigner_check || !p.dump_first.is_empty() || !p.dump_second.is_empty();
    let (wa, wb) = if wants_wigner {
        let p_grid = match p.p_points {
            Some(n) => Grid1D::new(grid.tau_min(), grid.tau_max(), n),
            None => default_p_grid(&grid),
        }
        .context("building momentum grid")?;
        let transform = |fs: &[ComplexField]| -> Result<Vec<WignerGrid>, RunError> {
            fs.iter().map(|f| wigner_transform_on(f, &p_grid).context("Wigner transform")).collect()
        };
        (transform(&a)?, transform(&b)?)
    } else {
        (Vec::new(), Vec::new())
    };

    let mut columns = vec![("n", "1"), ("m", "1"), ("c_re", "1"), ("c_im", "1"), ("population", "1")];
    if p.wigner_check {
        columns.push(("population_wigner", "1"));
    }
    let mut rows = Vec::new();
    for n in 0..=p.n_max {
        for m in 0..=p.n_max {
            let z = c[(n, m)];
            let mut row = vec![n.to_string(), m.to_string(), num(z.re), num(z.im), num(z.norm_sqr())];
            if p.wigner_check {
                row.push(num(fc_via_wigner(&wa[n], &wb[m]).context("Wigner overlap")?));
            }
            rows.push(row);
        }
    }
    dir.csv("populations.csv", &columns, rows)?;
    for &n in &p.dump_first {
        wigner_dump(dir, &format!("wigner_first_n{n}.dat"), &wa[n])?;
    }
    for &n in &p.dump_second {
        wigner_dump(dir, &format!("wigner_second_n{n}.dat"), &wb[n])?;
    }
    Ok(())
}

fn parametric(p: &ParametricParams, dir: &mut OutputDir) -> Result<(), RunError> {
    let omega0 = p.schedule.value(0.0);
    let omega_end = p.schedule.value(p.t_end);
    let dt = p.dt.unwrap_or_else(|| default_epsilon_dt(&p.schedule, p.t_end));
    let states = epsilon_evolve(EpsilonState::ground(omega0, 0.0), &p.schedule, p.t_end, dt).context("evolving ε")?;
    dir.csv(
        "epsilon.csv",
        &[
            ("t", "1"),
            ("eps_re", "1"),
            ("eps_im", "1"),
            ("eps_dot_re", "1"),
            ("eps_dot_im", "1"),
            ("phase", "rad"),
            ("wronskian", "1"),
        ],
        strided(states.len(), p.stride).map(|i| {
            let s = &states[i];
            vec![
                num(s.t),
                num(s.eps.re),
                num(s.eps.im),
                num(s.eps_dot.re),
                num(s.eps_dot.im),
                num(s.phase),
                num(s.wronskian()),
            ]
        }),
    )?;

    let grid = match &p.grid {
        Some(g) => g.build().context("building grid")?,
        None => {
            let families = [
                ModeFamily::new(omega0, p.n.max(p.n_max)).context("initial modes")?,
                ModeFamily::new(omega_end, p.n_max).context("final modes")?,
            ];
            family_grid(&families).context("choosing grid")?
        }
    };
    let last = states.last().expect("ε trajectory records its start");
    let psi = parametric_mode(p.n, last, &grid).context("building parametric mode")?;
    let mut rows = Vec::new();
    for m in 0..=p.n_max {
        let mode = eigenmode(m, omega_end, &grid).context("building final eigenmode")?;
        let c = field::overlap_inner(&mode, &psi).context("projecting")?;
        rows.push(vec![m.to_string(), num(c.re), num(c.im), num(c.norm_sqr())]);
    }
    dir.csv("populations.csv", &[("m", "1"), ("c_re", "1"), ("c_im", "1"), ("population", "1")], rows)
}
