//! Baseband simulator for the micro-Doppler attack on OFDM passive sensing.
//!
//! The crate follows a signal from transmitter to feature image:
//!
//! 1. [`ofdm`] draws known QAM preamble symbols and maps them to time samples.
//! 2. [`kinematics`] turns pedestrian and bicyclist scenarios into per-frame
//!    scatterer paths (bistatic range, radial velocity, complex amplitude).
//! 3. [`attack`] builds the diagonal pre-coder that injects a fake Doppler
//!    `f_sp` and fake range `R_sp` per frame (NONE, CONSTANT or RANDOM).
//! 4. [`channel`] reflects every frame off the scatterers and adds AWGN,
//!    producing the fast/slow-time data cube.
//! 5. [`receiver`] demodulates, divides out the known symbols, aggregates
//!    subcarriers and forms a dB-normalized STFT spectrogram.
//! 6. [`dataset`] runs the whole chain per scenario and writes labeled
//!    `MDSPEC1` records plus JSON sidecars and a manifest.

pub mod attack;
pub mod channel;
pub mod dataset;
pub mod error;
pub mod kinematics;
pub mod ofdm;
pub mod pipeline;
pub mod receiver;

pub use num_complex::Complex64;

pub use attack::{AttackParams, AttackSchedule, Scheme, SpoofPair};
pub use channel::{ChannelDiagonal, DataCube};
pub use dataset::{CorpusRecord, CorpusSpec, Manifest, ManifestEntry};
pub use error::{Error, FormatError, Result};
pub use kinematics::{BicyclistParams, ClassLabel, PedestrianParams, ScattererState, Scenario, TargetObject};
pub use ofdm::{Constellation, OfdmConfig, OfdmSettings, Preset, SymbolMatrix};
pub use pipeline::{NoiseSpec, SimulationOutput, SimulationRequest};
pub use receiver::{RangeDopplerMap, Spectrogram, StftParams, ZMatrix};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `e^{j 2π cycles}`, reducing the argument to one turn first so large
/// accumulated phases keep full precision.
#[inline]
pub(crate) fn cis_cycles(cycles: f64) -> Complex64 {
    let turn = cycles - cycles.round();
    Complex64::cis(std::f64::consts::TAU * turn)
}
