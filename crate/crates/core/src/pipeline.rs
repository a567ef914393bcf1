//! One scenario through the full chain: symbols, pre-coding, reflection,
//! noise, sensing receiver.

use serde::{Deserialize, Serialize};

use crate::attack::{apply_precoding, make_schedule, AttackParams, AttackSchedule, Scheme};
use crate::channel::{add_awgn, propagate_frames};
use crate::error::{Error, Result};
use crate::kinematics::{scatterer_tracks, Scenario};
use crate::ofdm::{generate_symbols, Constellation, OfdmConfig};
use crate::receiver::{
    aggregate_subcarriers, demodulate_fd, remove_symbols, stft_spectrogram, Spectrogram, StftParams, ZMatrix,
};

/// Receiver noise level. `NoiseFree` defers to the config's
/// `noise_variance` (zero unless set); the other variants require it to be
/// zero so the level is stated once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    #[default]
    NoiseFree,
    /// Mean received signal power over noise power, dB.
    SnrDb(f64),
    /// Absolute per-sample variance.
    Variance(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationRequest {
    pub scenario: Scenario,
    pub cfg: OfdmConfig,
    pub constellation: Constellation,
    pub scheme: Scheme,
    pub attack: AttackParams,
    pub attack_seed: u64,
    pub symbol_seed: u64,
    pub noise: NoiseSpec,
    pub noise_seed: u64,
    pub stft: StftParams,
}

impl SimulationRequest {
    /// Noise-free QPSK request with default attack and STFT settings, all
    /// seeds equal to `seed`.
    pub fn new(scenario: Scenario, cfg: OfdmConfig, scheme: Scheme, seed: u64) -> Self {
        Self {
            scenario,
            cfg,
            constellation: Constellation::Qpsk,
            scheme,
            attack: AttackParams::default(),
            attack_seed: seed,
            symbol_seed: seed,
            noise: NoiseSpec::NoiseFree,
            noise_seed: seed,
            stft: StftParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub spectrogram: Spectrogram,
    pub z: ZMatrix,
    pub schedule: AttackSchedule,
    /// Noise variance actually applied.
    pub noise_variance: f64,
}

pub fn simulate(req: &SimulationRequest) -> Result<SimulationOutput> {
    let cfg = req.cfg.with_noise(0.0, req.cfg.rng_seed())?;
    let symbols = generate_symbols(&cfg, req.constellation, req.symbol_seed);
    let schedule = make_schedule(req.scheme, &cfg, &req.attack, req.attack_seed)?;
    let transmitted = apply_precoding(&symbols, &schedule, &cfg)?;
    let tracks = scatterer_tracks(&req.scenario, &cfg);
    let clean = propagate_frames(&transmitted, &tracks, &cfg, None)?;

    let cfg_variance = req.cfg.noise_variance();
    if cfg_variance > 0.0 && req.noise != NoiseSpec::NoiseFree {
        return Err(Error::Config(format!(
            "noise given twice: cfg.noise_variance = {cfg_variance} and {:?}",
            req.noise
        )));
    }
    let noise_variance = match req.noise {
        NoiseSpec::NoiseFree => cfg_variance,
        NoiseSpec::Variance(v) => v,
        NoiseSpec::SnrDb(snr) => {
            if !snr.is_finite() {
                return Err(Error::Config(format!("SNR must be finite, got {snr}")));
            }
            clean.mean_power() / 10f64.powf(snr / 10.0)
        }
    };
    let cube = add_awgn(clean, noise_variance, req.noise_seed)?;

    // the sensing receiver only knows the standard preamble, not the pre-coder
    let z = remove_symbols(&demodulate_fd(&cube), &symbols, &cfg)?;
    let series = aggregate_subcarriers(&z);
    let spectrogram = stft_spectrogram(&series, cfg.slow_time_step(), &req.stft)?;
    Ok(SimulationOutput {
        spectrogram,
        z,
        schedule,
        noise_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{ClassLabel, Scenario};
    use crate::ofdm::Preset;

    fn request(scheme: Scheme) -> SimulationRequest {
        let cfg = OfdmConfig::preset(Preset::Wifi20Mhz).with_frames(600).unwrap();
        let stft = StftParams {
            max_time_bins: None,
            ..StftParams::default()
        };
        SimulationRequest {
            stft,
            ..SimulationRequest::new(Scenario::nominal(ClassLabel::Ped), cfg, scheme, 5)
        }
    }

    #[test]
    fn deterministic() {
        let mut req = request(Scheme::Random);
        req.noise = NoiseSpec::SnrDb(10.0);
        let (a, b) = (simulate(&req).unwrap(), simulate(&req).unwrap());
        assert_eq!(a.spectrogram, b.spectrogram);
        assert_eq!(a.z, b.z);
    }

    #[test]
    fn snr_sets_variance_from_clean_power() {
        let mut req = request(Scheme::None);
        let clean = simulate(&req).unwrap();
        assert_eq!(clean.noise_variance, 0.0);
        req.noise = NoiseSpec::SnrDb(20.0);
        let noisy = simulate(&req).unwrap();
        // |Z|² = |Y|² / |X|² = |Y|² for unit-modulus QPSK, and F is unitary
        let power = clean.z.entries.iter().map(|v| v.norm_sqr()).sum::<f64>() / clean.z.entries.len() as f64;
        assert!((noisy.noise_variance - power / 100.0).abs() < 1e-12 * power);
    }

    #[test]
    fn cfg_variance_is_used_once() {
        let mut req = request(Scheme::None);
        req.cfg = req.cfg.with_noise(1e-9, 0).unwrap();
        assert_eq!(simulate(&req).unwrap().noise_variance, 1e-9);
        req.noise = NoiseSpec::Variance(1e-9);
        assert!(matches!(simulate(&req), Err(Error::Config(_))));
    }

    #[test]
    fn infinite_snr_rejected() {
        let mut req = request(Scheme::None);
        req.noise = NoiseSpec::SnrDb(f64::INFINITY);
        assert!(simulate(&req).is_err());
    }

    #[test]
    fn constant_attack_rotates_z_by_precoder() {
        let plain = simulate(&request(Scheme::None)).unwrap();
        let attacked = simulate(&request(Scheme::Constant)).unwrap();
        let p = crate::attack::precoder_matrix(&attacked.schedule, &plain.z.cfg).unwrap();
        let expect = &plain.z.entries * &p;
        let err = expect
            .iter()
            .zip(attacked.z.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-15, "{err}");
    }
}
