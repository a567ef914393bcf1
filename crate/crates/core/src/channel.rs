//! Multi-path Doppler reflection and receiver noise.
//!
//! The channel seen by frame `m` is diagonal in the subcarrier domain:
//! every path contributes `a_l e^{j2π f_D m T_slow} e^{-j2π f_k R_l / c}`.
//! Doppler is a frame-constant phasor, so the channel never mixes
//! subcarriers.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinematics::ScattererState;
use crate::ofdm::{OfdmConfig, SymbolMatrix, UnitaryDft};
use crate::{cis_cycles, SPEED_OF_LIGHT};

/// Fast-time x slow-time received samples `y[n, m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DataCube {
    samples: Array2<Complex64>,
    cfg: OfdmConfig,
}

impl DataCube {
    pub fn new(samples: Array2<Complex64>, cfg: OfdmConfig) -> Result<Self> {
        let want = (cfg.n_subcarriers(), cfg.n_frames());
        if samples.dim() != want {
            return Err(Error::dims(
                format!("{}x{}", want.0, want.1),
                format!("{}x{}", samples.nrows(), samples.ncols()),
            ));
        }
        if let Some(((n, m), _)) = samples.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite sample at n={n}, m={m}")));
        }
        Ok(Self { samples, cfg })
    }

    pub fn samples(&self) -> &Array2<Complex64> {
        &self.samples
    }

    pub fn cfg(&self) -> &OfdmConfig {
        &self.cfg
    }

    pub fn into_samples(self) -> Array2<Complex64> {
        self.samples
    }

    /// Mean `|y|²` over all samples.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Diagonal of `Σ_l a_l c_ch,l P_ch,l` for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDiagonal(pub Vec<Complex64>);

pub fn channel_diagonal(states: &[ScattererState], cfg: &OfdmConfig, m: usize) -> Result<ChannelDiagonal> {
    if states.is_empty() {
        return Err(Error::EmptyStates);
    }
    cfg.check_frame(m)?;
    let slow_t = m as f64 * cfg.slow_time_step();
    let mut diag = vec![Complex64::new(0.0, 0.0); cfg.n_subcarriers()];
    for s in states {
        let gain = s.amplitude * cis_cycles(s.doppler * slow_t);
        // cycles of delay phase per subcarrier step
        let step = cfg.subcarrier_spacing() * s.bistatic_range / SPEED_OF_LIGHT;
        for (k, d) in diag.iter_mut().enumerate() {
            *d += gain * cis_cycles(-((k as f64 * step).rem_euclid(1.0)));
        }
    }
    Ok(ChannelDiagonal(diag))
}

/// Received data cube for `symbols` sent over per-frame `states`.
///
/// Column `m` is `F^H (H_m ∘ P_m ∘ x̃_m) + w_m`, where `H_m` is the channel
/// diagonal, `P_m` the optional pre-coder column (an `N x M` matrix) and `w`
/// AWGN with `cfg.noise_variance()` drawn from `cfg.rng_seed()`.
pub fn propagate_frames(
    symbols: &SymbolMatrix,
    states: &[Vec<ScattererState>],
    cfg: &OfdmConfig,
    precoder: Option<&Array2<Complex64>>,
) -> Result<DataCube> {
    symbols.check_shape(cfg)?;
    if states.len() != cfg.n_frames() {
        return Err(Error::dims(
            format!("{} frames of scatterer states", cfg.n_frames()),
            states.len(),
        ));
    }
    if let Some(p) = precoder {
        if p.dim() != symbols.entries.dim() {
            return Err(Error::dims(
                format!("{:?} precoder", symbols.entries.dim()),
                format!("{:?}", p.dim()),
            ));
        }
    }
    let dft = UnitaryDft::new(cfg.n_subcarriers());
    let columns: Vec<Vec<Complex64>> = (0..cfg.n_frames())
        .into_par_iter()
        .map(|m| -> Result<Vec<Complex64>> {
            let h = channel_diagonal(&states[m], cfg, m)?;
            let x = symbols.entries.column(m);
            let mut col: Vec<Complex64> = match precoder {
                Some(p) => {
                    h.0.iter()
                        .zip(p.column(m))
                        .zip(x)
                        .map(|((h, p), x)| h * p * x)
                        .collect()
                }
                None => h.0.iter().zip(x).map(|(h, x)| h * x).collect(),
            };
            dft.inverse_in_place(&mut col)?;
            Ok(col)
        })
        .collect::<Result<_>>()?;
    let mut samples = Array2::zeros((cfg.n_subcarriers(), cfg.n_frames()));
    for (m, col) in columns.into_iter().enumerate() {
        samples.column_mut(m).iter_mut().zip(col).for_each(|(d, v)| *d = v);
    }
    let cube = DataCube::new(samples, cfg.clone())?;
    add_awgn(cube, cfg.noise_variance(), cfg.rng_seed())
}

/// Circularly-symmetric complex Gaussian noise, variance `noise_variance`
/// per sample. Each column draws from its own ChaCha stream so the result
/// does not depend on evaluation order.
pub fn awgn(n_rows: usize, n_cols: usize, noise_variance: f64, seed: u64) -> Result<Array2<Complex64>> {
    if noise_variance.is_nan() || noise_variance < 0.0 {
        return Err(Error::NegativeVariance(noise_variance));
    }
    let scale = (noise_variance / 2.0).sqrt();
    let mut out = Array2::zeros((n_rows, n_cols));
    out.axis_iter_mut(Axis(1))
        .into_par_iter()
        .enumerate()
        .for_each(|(m, mut col)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(m as u64);
            for v in col.iter_mut() {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                *v = Complex64::new(re, im) * scale;
            }
        });
    Ok(out)
}

pub fn add_awgn(cube: DataCube, noise_variance: f64, seed: u64) -> Result<DataCube> {
    if noise_variance.is_nan() || noise_variance < 0.0 {
        return Err(Error::NegativeVariance(noise_variance));
    }
    if noise_variance == 0.0 {
        return Ok(cube);
    }
    let (n, m) = cube.samples.dim();
    let noise = awgn(n, m, noise_variance, seed)?;
    let DataCube { samples, cfg } = cube;
    Ok(DataCube {
        samples: samples + noise,
        cfg,
    })
}
