//! Transmitter-side micro-Doppler pre-coding.
//!
//! Frame `m` is multiplied by the diagonal
//! `[P_sp]_{k,k} = e^{j2π f_sp,m m T_slow} e^{-j2π f_k R_sp,m / c}`,
//! which makes every reflection look `R_sp` farther and `f_sp` faster to a
//! sensing receiver. The slow-time term is constant across the samples of a
//! symbol, so the pre-coder never introduces inter-carrier interference and
//! a communication receiver absorbs it into its channel estimate.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::{OfdmConfig, SymbolMatrix};
use crate::{cis_cycles, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Scheme {
    None,
    Constant,
    Random,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::None, Scheme::Constant, Scheme::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::None => "NONE",
            Scheme::Constant => "CONSTANT",
            Scheme::Random => "RANDOM",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown attack scheme {s:?}")))
    }
}

/// Fake Doppler (Hz) and fake range (m) injected in one frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpoofPair {
    pub doppler: f64,
    pub range: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackParams {
    /// CONSTANT scheme values.
    pub constant: SpoofPair,
    /// RANDOM scheme Doppler interval, Hz.
    pub doppler_range: (f64, f64),
    /// RANDOM scheme range interval, m.
    pub range_range: (f64, f64),
}

impl Default for AttackParams {
    fn default() -> Self {
        Self {
            constant: SpoofPair {
                doppler: 100.0,
                range: 50.0,
            },
            doppler_range: (50.0, 200.0),
            range_range: (10.0, 200.0),
        }
    }
}

impl AttackParams {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("doppler", self.doppler_range), ("range", self.range_range)] {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvertedRange { name, lo, hi });
            }
        }
        if !self.constant.doppler.is_finite() || !self.constant.range.is_finite() {
            return Err(Error::Config("constant spoof values must be finite".into()));
        }
        Ok(())
    }
}

/// Realized per-frame spoof parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSchedule {
    pub scheme: Scheme,
    pub rng_seed: u64,
    pub doppler_range: (f64, f64),
    pub range_range: (f64, f64),
    pub per_frame: Vec<SpoofPair>,
}

impl AttackSchedule {
    pub fn n_frames(&self) -> usize {
        self.per_frame.len()
    }

    pub fn mean_doppler(&self) -> f64 {
        self.per_frame.iter().map(|p| p.doppler).sum::<f64>() / self.per_frame.len() as f64
    }
}

pub fn make_schedule(scheme: Scheme, cfg: &OfdmConfig, params: &AttackParams, seed: u64) -> Result<AttackSchedule> {
    params.validate()?;
    let m = cfg.n_frames();
    let per_frame = match scheme {
        Scheme::None => vec![SpoofPair::default(); m],
        Scheme::Constant => vec![params.constant; m],
        Scheme::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f_lo, f_hi) = params.doppler_range;
            let (r_lo, r_hi) = params.range_range;
            (0..m)
                .map(|_| SpoofPair {
                    doppler: rng.gen_range(f_lo..=f_hi),
                    range: rng.gen_range(r_lo..=r_hi),
                })
                .collect()
        }
    };
    Ok(AttackSchedule {
        scheme,
        rng_seed: seed,
        doppler_range: params.doppler_range,
        range_range: params.range_range,
        per_frame,
    })
}

fn check_schedule(schedule: &AttackSchedule, cfg: &OfdmConfig) -> Result<()> {
    if schedule.n_frames() != cfg.n_frames() {
        return Err(Error::dims(
            format!("schedule of {} frames", cfg.n_frames()),
            schedule.n_frames(),
        ));
    }
    Ok(())
}

/// Diagonal of `P_sp` for frame `m`.
pub fn precoder_diagonal(schedule: &AttackSchedule, cfg: &OfdmConfig, m: usize) -> Result<Vec<Complex64>> {
    cfg.check_frame(m)?;
    check_schedule(schedule, cfg)?;
    Ok(diagonal_unchecked(schedule.per_frame[m], cfg, m))
}

fn diagonal_unchecked(pair: SpoofPair, cfg: &OfdmConfig, m: usize) -> Vec<Complex64> {
    let slow = cis_cycles((pair.doppler * m as f64 * cfg.slow_time_step()).rem_euclid(1.0));
    let step = cfg.subcarrier_spacing() * pair.range / SPEED_OF_LIGHT;
    (0..cfg.n_subcarriers())
        .map(|k| slow * cis_cycles(-((k as f64 * step).rem_euclid(1.0))))
        .collect()
}

/// All pre-coder diagonals as an `N x M` matrix, column `m` for frame `m`.
pub fn precoder_matrix(schedule: &AttackSchedule, cfg: &OfdmConfig) -> Result<Array2<Complex64>> {
    check_schedule(schedule, cfg)?;
    let mut out = Array2::zeros((cfg.n_subcarriers(), cfg.n_frames()));
    for (m, mut col) in out.columns_mut().into_iter().enumerate() {
        for (d, v) in col.iter_mut().zip(diagonal_unchecked(schedule.per_frame[m], cfg, m)) {
            *d = v;
        }
    }
    Ok(out)
}

/// Multiplies each frame's symbols by its pre-coder diagonal.
pub fn apply_precoding(symbols: &SymbolMatrix, schedule: &AttackSchedule, cfg: &OfdmConfig) -> Result<SymbolMatrix> {
    symbols.check_shape(cfg)?;
    check_schedule(schedule, cfg)?;
    if schedule.scheme == Scheme::None {
        return Ok(symbols.clone());
    }
    let p = precoder_matrix(schedule, cfg)?;
    Ok(SymbolMatrix {
        entries: &symbols.entries * &p,
        constellation: symbols.constellation,
    })
}
