//! Quantumlike description of signal envelopes on linear dispersive
//! transmission lines.
//!
//! The crate couples a reference finite-difference solver of the
//! telegrapher's equations ([`fdtd`]) with a Crank–Nicolson propagator for
//! the Schrödinger-like envelope equation ([`envelope`]), and provides the
//! analytic and semi-analytic tools for the quadratic-index line
//! ([`harmonic`]), rectangular-potential transmission ([`scattering`]) and
//! mode transfer between line sections ([`franck_condon`]).

pub mod envelope;
pub mod error;
pub mod fdtd;
pub mod field;
pub mod franck_condon;
pub mod harmonic;
pub mod line;
pub mod scattering;

pub use error::{Error, Result};
pub use field::{ComplexField, Grid1D, MomentSet};
pub use line::{LineSpec, Modulation, PotentialProfile};
