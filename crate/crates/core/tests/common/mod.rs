//! Brute-force references shared by the integration tests and the
//! acceptance runner. Nothing here calls the FFT or channel code under test.

#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::Path;

use mdattack::attack::{apply_precoding, make_schedule, precoder_matrix, AttackSchedule};
use mdattack::channel::{awgn, propagate_frames, DataCube};
use mdattack::dataset::build_corpus;
use mdattack::kinematics::{sample_scenario, scatterer_tracks};
use mdattack::ofdm::{generate_symbols, UnitaryDft};
use mdattack::pipeline::simulate;
use mdattack::receiver::{
    aggregate_subcarriers, demodulate_fd, equalize_and_demap, range_doppler_map, remove_symbols, spectral_entropy,
    stft_spectrogram,
};
use mdattack::{
    AttackParams, ClassLabel, Complex64, Constellation, CorpusSpec, NoiseSpec, OfdmConfig, OfdmSettings, Preset,
    ScattererState, Scheme, SimulationRequest, StftParams, SPEED_OF_LIGHT,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// WiFi-20 numerology shrunk to `n` subcarriers and `m` frames.
pub fn small_cfg(n: usize, m: usize) -> OfdmConfig {
    let base = OfdmSettings::preset(Preset::Wifi20Mhz);
    OfdmConfig::new(OfdmSettings {
        n_subcarriers: n,
        sample_rate: n as f64 * base.subcarrier_spacing,
        n_frames: m,
        ..base
    })
    .unwrap()
}

fn expj(phase: f64) -> Complex64 {
    Complex64::new(phase.cos(), phase.sin())
}

/// `X[k] = 1/√N Σ_n x[n] e^{-j2πkn/N}`, evaluated term by term.
pub fn naive_dft(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(i, v)| v * expj(sign * 2.0 * PI * ((k * i) % n) as f64 / n as f64))
                .sum::<Complex64>()
                / (n as f64).sqrt()
        })
        .collect()
}

/// Direct evaluation of the sampled received signal
///
/// `y[n,m] = Σ_l a_l/√N Σ_k p[k,m] x̃[k,m] e^{j2π(f_k(n/f_s - R_l/c) + f_D,l m T)}`
///
/// with `f_k = k Δf`, one independent path list per frame and an optional
/// pre-coder `p` (all ones when absent).
pub fn brute_force_cube(
    symbols: &Array2<Complex64>,
    paths: &[Vec<ScattererState>],
    cfg: &OfdmConfig,
    precoder: Option<&Array2<Complex64>>,
) -> Array2<Complex64> {
    let (n_sc, n_fr) = symbols.dim();
    let fs = cfg.sample_rate();
    let t = cfg.slow_time_step();
    Array2::from_shape_fn((n_sc, n_fr), |(n, m)| {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &paths[m] {
            for k in 0..n_sc {
                let fk = k as f64 * cfg.subcarrier_spacing();
                let pre = precoder.map_or(Complex64::new(1.0, 0.0), |pc| pc[[k, m]]);
                let phase =
                    2.0 * PI * (fk * (n as f64 / fs - p.bistatic_range / SPEED_OF_LIGHT) + p.doppler * m as f64 * t);
                acc += p.amplitude * pre * symbols[[k, m]] * expj(phase);
            }
        }
        acc / (n_sc as f64).sqrt()
    })
}

/// `[P]_{k,m} = e^{j2π f_sp m T} e^{-j2π f_k R_sp/c}` written out directly.
pub fn brute_force_precoder(schedule: &AttackSchedule, cfg: &OfdmConfig) -> Array2<Complex64> {
    let t = cfg.slow_time_step();
    Array2::from_shape_fn((cfg.n_subcarriers(), cfg.n_frames()), |(k, m)| {
        let s = schedule.per_frame[m];
        let fk = k as f64 * cfg.subcarrier_spacing();
        expj(2.0 * PI * s.doppler * m as f64 * t) * expj(-2.0 * PI * fk * s.range / SPEED_OF_LIGHT)
    })
}

pub fn random_paths(rng: &mut ChaCha8Rng, l: usize, cfg: &OfdmConfig) -> Vec<ScattererState> {
    (0..l)
        .map(|_| {
            let amp = Complex64::from_polar(rng.gen_range(0.1..1.0), rng.gen_range(-PI..PI));
            ScattererState::new(amp, rng.gen_range(5.0..120.0), rng.gen_range(-8.0..8.0), cfg)
        })
        .collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<Complex64> {
    Array2::from_shape_fn((rows, cols), |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Time-domain noise whose spectrum is rotated by the conjugate pre-coder:
/// `w' = F^H diag(P*) F w` per frame. Sending `P x` through noise `w` and
/// `x` through `w'` leaves identical equalizer outputs.
pub fn counter_rotate_noise(w: &Array2<Complex64>, schedule: &AttackSchedule, cfg: &OfdmConfig) -> Array2<Complex64> {
    let p = precoder_matrix(schedule, cfg).unwrap();
    let dft = UnitaryDft::new(cfg.n_subcarriers());
    let mut out = w.clone();
    for (mut col, pc) in out.columns_mut().into_iter().zip(p.columns()) {
        let mut buf = col.to_vec();
        dft.forward_in_place(&mut buf).unwrap();
        buf.iter_mut().zip(pc).for_each(|(v, p)| *v *= p.conj());
        dft.inverse_in_place(&mut buf).unwrap();
        col.iter_mut().zip(buf).for_each(|(d, v)| *d = v);
    }
    out
}

pub fn with_noise(clean: &DataCube, w: &Array2<Complex64>) -> DataCube {
    DataCube::new(clean.samples() + w, clean.cfg().clone()).unwrap()
}

/// Errors of the CONSTANT attack on one static path, in bins.
#[derive(Debug)]
pub struct ShiftReport {
    /// Largest `|ridge - f_sp|` over all spectrogram time bins.
    pub ridge_bins: f64,
    pub range_bins: f64,
    pub doppler_bins: f64,
}

pub fn attack_shift(cfg: &OfdmConfig, range: f64) -> ShiftReport {
    let params = AttackParams::default();
    let path = ScattererState::new(Complex64::new(1e-3, 0.0), range, 0.0, cfg);
    let tracks = vec![vec![path]; cfg.n_frames()];
    let x = generate_symbols(cfg, Constellation::Qpsk, 17);
    let run = |scheme| {
        let sched = make_schedule(scheme, cfg, &params, 0).unwrap();
        let tx = apply_precoding(&x, &sched, cfg).unwrap();
        let cube = propagate_frames(&tx, &tracks, cfg, None).unwrap();
        remove_symbols(&demodulate_fd(&cube), &x, cfg).unwrap()
    };
    let (z0, z1) = (run(Scheme::None), run(Scheme::Constant));

    let stft = StftParams {
        max_time_bins: None,
        ..StftParams::default()
    };
    let sp = stft_spectrogram(&aggregate_subcarriers(&z1), cfg.slow_time_step(), &stft).unwrap();
    let ridge_bins = sp
        .ridge()
        .iter()
        .map(|f| (f - params.constant.doppler).abs() / sp.doppler_axis.step)
        .fold(0.0, f64::max);

    let (rd0, rd1) = (range_doppler_map(&z0), range_doppler_map(&z1));
    let ((r0, d0), (r1, d1)) = (rd0.argmax(), rd1.argmax());
    let dr = rd1.range_axis.at(r1) - rd0.range_axis.at(r0);
    let dd = rd1.doppler_axis.at(d1) - rd0.doppler_axis.at(d0);
    ShiftReport {
        ridge_bins,
        range_bins: (dr - params.constant.range).abs() / rd0.range_axis.step,
        doppler_bins: (dd - params.constant.doppler).abs() / rd0.doppler_axis.step,
    }
}

/// Communication-link EVM with and without the attack for one scenario.
#[derive(Debug)]
pub struct EvmReport {
    pub clean_attacked: f64,
    pub noisy_attacked: f64,
    pub noisy_plain: f64,
    pub same_decisions: bool,
}

pub fn evm_pair(cfg: &OfdmConfig, seed: u64, snr_db: f64) -> EvmReport {
    let scenario = sample_scenario(ClassLabel::Ped, seed);
    let tracks = scatterer_tracks(&scenario, cfg);
    let pilot = generate_symbols(cfg, Constellation::Qpsk, seed);
    let payload = generate_symbols(cfg, Constellation::Qam16, seed ^ 0x5eed);
    let sched = make_schedule(Scheme::Random, cfg, &AttackParams::default(), seed).unwrap();
    let send = |x, attacked: bool| {
        let x = if attacked {
            apply_precoding(x, &sched, cfg).unwrap()
        } else {
            x.clone()
        };
        propagate_frames(&x, &tracks, cfg, None).unwrap()
    };
    let (pa, da) = (send(&pilot, true), send(&payload, true));
    let (pp, dp) = (send(&pilot, false), send(&payload, false));

    let clean = equalize_and_demap(&pa, &pilot, &da, Constellation::Qam16).unwrap();

    let var = pp.mean_power() / 10f64.powf(snr_db / 10.0);
    let (n, m) = (cfg.n_subcarriers(), cfg.n_frames());
    let wp = awgn(n, m, var, seed.wrapping_mul(3)).unwrap();
    let wd = awgn(n, m, var, seed.wrapping_mul(3) + 1).unwrap();
    let attacked = equalize_and_demap(
        &with_noise(&pa, &wp),
        &pilot,
        &with_noise(&da, &wd),
        Constellation::Qam16,
    )
    .unwrap();
    let plain = equalize_and_demap(
        &with_noise(&pp, &counter_rotate_noise(&wp, &sched, cfg)),
        &pilot,
        &with_noise(&dp, &counter_rotate_noise(&wd, &sched, cfg)),
        Constellation::Qam16,
    )
    .unwrap();
    EvmReport {
        clean_attacked: clean.evm,
        noisy_attacked: attacked.evm,
        noisy_plain: plain.evm,
        same_decisions: attacked.decisions == plain.decisions,
    }
}

/// Mean spectral entropy per scheme (NONE, CONSTANT, RANDOM) for one
/// pedestrian scenario, all schemes sharing scenario, symbols and noise.
pub fn scheme_entropies(cfg: &OfdmConfig, seed: u64, noise: NoiseSpec) -> [f64; 3] {
    let scenario = sample_scenario(ClassLabel::Ped, seed);
    Scheme::ALL.map(|scheme| {
        let mut req = SimulationRequest::new(scenario.clone(), cfg.clone(), scheme, seed);
        req.noise = noise;
        spectral_entropy(&simulate(&req).unwrap().spectrogram).unwrap()
    })
}

pub fn ordered(e: &[f64; 3]) -> bool {
    e[2] > e[1] && e[1] > e[0]
}

/// Relative path and contents of every file under `dir`, sorted.
pub fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

/// Builds `spec` twice, the second time on a single thread, and compares
/// the output trees byte for byte.
pub fn corpus_is_reproducible(spec: &CorpusSpec) -> (usize, bool) {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let manifest = build_corpus(spec, a.path()).unwrap();
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| build_corpus(spec, b.path()))
        .unwrap();
    (manifest.len(), tree_bytes(a.path()) == tree_bytes(b.path()))
}
