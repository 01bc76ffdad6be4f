//! Modeling, synthesis and parameter extraction for gate-voltage-tunable
//! hybrid superconducting qubits read out through a dispersively coupled
//! microwave resonator.
//!
//! The crate is organised along the analysis chain:
//!
//! * [`qubit`]: Cooper-pair-box spectrum (exact charge-basis diagonalization
//!   and the first-order high-transparency perturbative form), transmission
//!   and critical-current conversions.
//! * [`readout`]: dispersive shift, coupling inference, notch S21 lineshape
//!   and resonator ring-up/ring-down.
//! * [`synth`]: seeded synthetic spectroscopy maps and time traces.
//! * [`fit`]: damped least-squares engine and the model functions.
//! * [`extract`]: peaks, (E_J, E_C) inversion, channel count, coupling,
//!   coherence estimates and the aggregated [`extract::DeviceReport`].
//! * [`io`]: run configuration, text file formats and the command drivers
//!   behind the `gatequbit` binary.
//!
//! Units throughout: energies as E/h in GHz, resonator linewidths and
//! couplings in MHz, times in ns, currents in nA, gate voltages in V.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod extract;
pub mod fit;
pub mod io;
pub mod qubit;
pub mod readout;
pub mod synth;
pub mod units;

pub use error::{Error, Result};
