//! OFDM transmitter: configuration, QAM preamble symbols and the unitary
//! IDFT that maps a subcarrier vector to `N` fast-time samples.
//!
//! All `N` subcarriers carry symbols and no cyclic prefix is inserted, so a
//! path delay reaches the receiver as a pure per-subcarrier phase.

use std::fmt;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RELATIVE_TOLERANCE: f64 = 1e-9;

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Preset {
    /// 802.11 20 MHz channel at 5.18 GHz, 5 s of frames every 1 ms.
    Wifi20Mhz,
}

/// The user-facing field set of an [`OfdmConfig`]. The symbol duration is
/// derived, so it is optional here; if given it must agree with `N / Δf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmSettings {
    pub n_subcarriers: usize,
    pub subcarrier_spacing: f64,
    pub sample_rate: f64,
    pub carrier_freq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol_duration: Option<f64>,
    pub slow_time_step: f64,
    pub n_frames: usize,
    pub noise_variance: f64,
    pub rng_seed: u64,
    pub bandwidth: f64,
}

impl OfdmSettings {
    pub fn preset(preset: Preset) -> Self {
        match preset {
            Preset::Wifi20Mhz => Self {
                n_subcarriers: 64,
                subcarrier_spacing: 312.5e3,
                sample_rate: 20e6,
                carrier_freq: 5.18e9,
                symbol_duration: None,
                slow_time_step: 1e-3,
                n_frames: 5000,
                noise_variance: 0.0,
                rng_seed: 0,
                bandwidth: 20e6,
            },
        }
    }
}

/// Validated waveform and sampling constants.
///
/// Construct through [`OfdmConfig::new`] or [`OfdmConfig::preset`]; the
/// fields are read-only so the invariants hold for the value's lifetime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OfdmSettings", into = "OfdmSettings")]
pub struct OfdmConfig {
    n_subcarriers: usize,
    subcarrier_spacing: f64,
    sample_rate: f64,
    carrier_freq: f64,
    symbol_duration: f64,
    slow_time_step: f64,
    n_frames: usize,
    noise_variance: f64,
    rng_seed: u64,
    bandwidth: f64,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= RELATIVE_TOLERANCE * a.abs().max(b.abs())
}

impl OfdmConfig {
    pub fn preset(preset: Preset) -> Self {
        Self::new(OfdmSettings::preset(preset)).expect("preset satisfies invariants")
    }

    pub fn new(s: OfdmSettings) -> Result<Self> {
        let fail = |msg: String| Err(Error::Config(msg));
        if s.n_subcarriers < 2 {
            return fail(format!("N >= 2 violated (N = {})", s.n_subcarriers));
        }
        if s.n_frames < 2 {
            return fail(format!("M >= 2 violated (M = {})", s.n_frames));
        }
        if !(s.subcarrier_spacing > 0.0 && s.subcarrier_spacing.is_finite()) {
            return fail(format!("delta_f > 0 violated (delta_f = {})", s.subcarrier_spacing));
        }
        if !(s.noise_variance >= 0.0 && s.noise_variance.is_finite()) {
            return fail(format!("sigma^2 >= 0 violated (sigma^2 = {})", s.noise_variance));
        }
        if !(s.carrier_freq > 0.0 && s.carrier_freq.is_finite()) {
            return fail(format!("f_c > 0 violated (f_c = {})", s.carrier_freq));
        }
        if !(s.bandwidth > 0.0 && s.bandwidth.is_finite()) {
            return fail(format!("BW > 0 violated (BW = {})", s.bandwidth));
        }
        let critical = s.n_subcarriers as f64 * s.subcarrier_spacing;
        if !close(s.sample_rate, critical) {
            return fail(format!(
                "f_s = N * delta_f violated ({} != {} * {})",
                s.sample_rate, s.n_subcarriers, s.subcarrier_spacing
            ));
        }
        let symbol_duration = s.n_subcarriers as f64 / s.sample_rate;
        if let Some(t) = s.symbol_duration {
            if !close(t, symbol_duration) {
                return fail(format!("T_N = N / f_s violated ({t} != {symbol_duration})"));
            }
        }
        if !(s.slow_time_step.is_finite() && s.slow_time_step >= symbol_duration) {
            return fail(format!(
                "slow_time_step >= T_N violated ({} < {symbol_duration})",
                s.slow_time_step
            ));
        }
        Ok(Self {
            n_subcarriers: s.n_subcarriers,
            subcarrier_spacing: s.subcarrier_spacing,
            sample_rate: s.sample_rate,
            carrier_freq: s.carrier_freq,
            symbol_duration,
            slow_time_step: s.slow_time_step,
            n_frames: s.n_frames,
            noise_variance: s.noise_variance,
            rng_seed: s.rng_seed,
            bandwidth: s.bandwidth,
        })
    }

    pub fn settings(&self) -> OfdmSettings {
        self.clone().into()
    }

    /// Copy with a different frame count, re-validated.
    pub fn with_frames(&self, n_frames: usize) -> Result<Self> {
        Self::new(OfdmSettings {
            n_frames,
            ..self.settings()
        })
    }

    pub fn with_noise(&self, noise_variance: f64, rng_seed: u64) -> Result<Self> {
        Self::new(OfdmSettings {
            noise_variance,
            rng_seed,
            ..self.settings()
        })
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }
    pub fn subcarrier_spacing(&self) -> f64 {
        self.subcarrier_spacing
    }
    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }
    pub fn carrier_freq(&self) -> f64 {
        self.carrier_freq
    }
    pub fn symbol_duration(&self) -> f64 {
        self.symbol_duration
    }
    pub fn slow_time_step(&self) -> f64 {
        self.slow_time_step
    }
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }
    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }
    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Slow-time sampling rate `1 / T_slow`.
    pub fn prf(&self) -> f64 {
        1.0 / self.slow_time_step
    }

    /// Total observation time `M * T_slow`.
    pub fn duration(&self) -> f64 {
        self.n_frames as f64 * self.slow_time_step
    }

    /// Baseband frequency of subcarrier `k`, `f_k = k * Δf`.
    pub fn subcarrier_freq(&self, k: usize) -> f64 {
        k as f64 * self.subcarrier_spacing
    }

    pub(crate) fn check_frame(&self, m: usize) -> Result<()> {
        if m < self.n_frames {
            Ok(())
        } else {
            Err(Error::FrameOutOfRange {
                index: m,
                n_frames: self.n_frames,
            })
        }
    }
}

impl TryFrom<OfdmSettings> for OfdmConfig {
    type Error = Error;

    fn try_from(s: OfdmSettings) -> Result<Self> {
        Self::new(s)
    }
}

impl From<OfdmConfig> for OfdmSettings {
    fn from(c: OfdmConfig) -> Self {
        Self {
            n_subcarriers: c.n_subcarriers,
            subcarrier_spacing: c.subcarrier_spacing,
            sample_rate: c.sample_rate,
            carrier_freq: c.carrier_freq,
            symbol_duration: Some(c.symbol_duration),
            slow_time_step: c.slow_time_step,
            n_frames: c.n_frames,
            noise_variance: c.noise_variance,
            rng_seed: c.rng_seed,
            bandwidth: c.bandwidth,
        }
    }
}

/// `make_config`: a preset or an explicit field set.
pub fn make_config(source: impl Into<ConfigSource>) -> Result<OfdmConfig> {
    match source.into() {
        ConfigSource::Preset(p) => Ok(OfdmConfig::preset(p)),
        ConfigSource::Explicit(s) => OfdmConfig::new(s),
    }
}

#[derive(Debug, Clone)]
pub enum ConfigSource {
    Preset(Preset),
    Explicit(OfdmSettings),
}

impl From<Preset> for ConfigSource {
    fn from(p: Preset) -> Self {
        ConfigSource::Preset(p)
    }
}

impl From<OfdmSettings> for ConfigSource {
    fn from(s: OfdmSettings) -> Self {
        ConfigSource::Explicit(s)
    }
}

/// Unit average energy constellations with fixed Gray maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Constellation {
    /// `00 -> (1+j)/√2, 01 -> (-1+j)/√2, 11 -> (-1-j)/√2, 10 -> (1-j)/√2`,
    /// first bit selects the quadrature sign, second the in-phase sign.
    Qpsk,
    /// Square 16-QAM over `{-3,-1,1,3}/√10` per axis; each axis uses the
    /// 2-bit Gray code `00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3`, high bits
    /// on I, low bits on Q.
    Qam16,
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constellation::Qpsk => "QPSK",
            Constellation::Qam16 => "QAM16",
        })
    }
}

fn gray_level_16(bits: u8) -> f64 {
    match bits & 0b11 {
        0b00 => -3.0,
        0b01 => -1.0,
        0b11 => 1.0,
        _ => 3.0,
    }
}

impl Constellation {
    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Constellation::Qpsk => 2,
            Constellation::Qam16 => 4,
        }
    }

    pub fn size(self) -> usize {
        1 << self.bits_per_symbol()
    }

    /// Symbol for a `bits_per_symbol`-wide word, MSB first.
    pub fn map(self, word: u8) -> Complex64 {
        match self {
            Constellation::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let q = if word & 0b10 == 0 { s } else { -s };
                let i = if word & 0b01 == 0 { s } else { -s };
                Complex64::new(i, q)
            }
            Constellation::Qam16 => {
                let scale = 1.0 / 10f64.sqrt();
                Complex64::new(gray_level_16(word >> 2) * scale, gray_level_16(word) * scale)
            }
        }
    }

    /// The alphabet in word order.
    pub fn points(self) -> Vec<Complex64> {
        (0..self.size() as u8).map(|w| self.map(w)).collect()
    }

    /// Nearest alphabet point (hard decision).
    pub fn slice(self, z: Complex64) -> Complex64 {
        match self {
            Constellation::Qpsk => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                Complex64::new(s.copysign(z.re), s.copysign(z.im))
            }
            Constellation::Qam16 => {
                let scale = 1.0 / 10f64.sqrt();
                let level = |v: f64| (2.0 * (v / scale / 2.0).floor() + 1.0).clamp(-3.0, 3.0) * scale;
                Complex64::new(level(z.re), level(z.im))
            }
        }
    }
}

/// `N x M` matrix of known symbols, one column per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix {
    pub entries: Array2<Complex64>,
    pub constellation: Constellation,
}

impl SymbolMatrix {
    pub fn n_subcarriers(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.entries.ncols()
    }

    pub(crate) fn check_shape(&self, cfg: &OfdmConfig) -> Result<()> {
        let want = (cfg.n_subcarriers(), cfg.n_frames());
        if self.entries.dim() != want {
            return Err(Error::dims(
                format!("{}x{}", want.0, want.1),
                format!("{}x{}", self.n_subcarriers(), self.n_frames()),
            ));
        }
        Ok(())
    }
}

/// I.i.d. uniform symbols from `constellation`, deterministic in `seed`.
pub fn generate_symbols(cfg: &OfdmConfig, constellation: Constellation, seed: u64) -> SymbolMatrix {
    let points = constellation.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, m) = (cfg.n_subcarriers(), cfg.n_frames());
    // column-major draw order: frame by frame
    let mut entries = Array2::zeros((n, m));
    for col in 0..m {
        for row in 0..n {
            entries[[row, col]] = points[rng.gen_range(0..points.len())];
        }
    }
    SymbolMatrix { entries, constellation }
}

/// Unitary `N`-point DFT pair (`F` and `F^H`, both scaled by `1/√N`).
#[derive(Clone)]
pub struct UnitaryDft {
    len: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for UnitaryDft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitaryDft").field("len", &self.len).finish()
    }
}

impl UnitaryDft {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            scale: 1.0 / (len as f64).sqrt(),
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn check(&self, buf: &[Complex64]) -> Result<()> {
        if buf.len() != self.len {
            return Err(Error::dims(self.len, buf.len()));
        }
        Ok(())
    }

    /// In place `x <- F^H x`.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        self.check(buf)?;
        self.inverse.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
        Ok(())
    }

    /// In place `x <- F x`.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) -> Result<()> {
        self.check(buf)?;
        self.forward.process(buf);
        buf.iter_mut().for_each(|v| *v *= self.scale);
        Ok(())
    }
}

/// `x[n] = (1/√N) Σ_k x̃[k] e^{j2πnk/N}`.
pub fn idft_modulate(cfg: &OfdmConfig, symbols: &[Complex64]) -> Result<Vec<Complex64>> {
    let dft = UnitaryDft::new(cfg.n_subcarriers());
    let mut out = symbols.to_vec();
    dft.inverse_in_place(&mut out)?;
    Ok(out)
}
