//! Passive sensing receiver.
//!
//! `y -> Ỹ = F y -> Z̃ = Ỹ ⊘ X̃ -> s[m] = Σ_k Z̃[k, m] -> STFT -> dB -> [0, 1]`.
//!
//! A 20 MHz channel only resolves about 7.5 m in range, so the main product
//! is the subcarrier-aggregated slow-time spectrogram. The 2D range-Doppler
//! map is kept for checking where the attack moves a reflection.

use std::f64::consts::TAU;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::channel::DataCube;
use crate::error::{Error, Result};
use crate::ofdm::{Constellation, OfdmConfig, SymbolMatrix, UnitaryDft};
use crate::SPEED_OF_LIGHT;

/// Per-column unitary DFT of the fast-time samples.
pub fn demodulate_fd(cube: &DataCube) -> Array2<Complex64> {
    let dft = UnitaryDft::new(cube.cfg().n_subcarriers());
    let mut out = cube.samples().clone();
    out.axis_iter_mut(Axis(1)).into_par_iter().for_each(|mut col| {
        let mut buf = col.to_vec();
        dft.forward_in_place(&mut buf).expect("column length is N");
        col.iter_mut().zip(buf).for_each(|(d, v)| *d = v);
    });
    out
}

/// `Z̃ = Ỹ ⊘ X̃`: the channel (and any pre-coding) with the known symbols
/// divided out.
#[derive(Debug, Clone, PartialEq)]
pub struct ZMatrix {
    pub entries: Array2<Complex64>,
    pub cfg: OfdmConfig,
}

pub fn remove_symbols(fd: &Array2<Complex64>, symbols: &SymbolMatrix, cfg: &OfdmConfig) -> Result<ZMatrix> {
    symbols.check_shape(cfg)?;
    if fd.dim() != symbols.entries.dim() {
        return Err(Error::dims(
            format!("{:?}", symbols.entries.dim()),
            format!("{:?}", fd.dim()),
        ));
    }
    if let Some(((k, m), _)) = symbols.entries.indexed_iter().find(|(_, x)| x.norm_sqr() == 0.0) {
        return Err(Error::ZeroSymbol {
            subcarrier: k,
            frame: m,
        });
    }
    Ok(ZMatrix {
        entries: fd / &symbols.entries,
        cfg: cfg.clone(),
    })
}

/// `s[m] = Σ_k Z̃[k, m]`.
pub fn aggregate_subcarriers(z: &ZMatrix) -> Vec<Complex64> {
    z.entries.sum_axis(Axis(0)).to_vec()
}

/// Linear axis: value of bin `i` is `origin + i * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisScale {
    pub origin: f64,
    pub step: f64,
}

impl AxisScale {
    pub fn at(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    /// Bin closest to `value`.
    pub fn nearest(&self, value: f64) -> isize {
        ((value - self.origin) / self.step).round() as isize
    }
}

/// Offset that puts DC at bin `(len - 1) / 2`, so the axis covers
/// `(-len/2, len/2]` bins for even lengths.
fn centered_offset(len: usize) -> usize {
    (len - 1) / 2
}

/// Axis for a DC-centered spectrum of `len` bins at `resolution` Hz.
pub fn centered_axis(len: usize, resolution: f64) -> AxisScale {
    AxisScale {
        origin: -(centered_offset(len) as f64) * resolution,
        step: resolution,
    }
}

/// Reorders an FFT output so DC sits at `centered_offset(len)`.
fn center_spectrum<T: Copy>(spectrum: &[T]) -> Vec<T> {
    let len = spectrum.len();
    let off = centered_offset(len);
    (0..len).map(|i| spectrum[(i + len - off) % len]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StftParams {
    /// Hann window length in slow-time samples.
    pub window_len: usize,
    pub hop: usize,
    /// Zero-padded FFT length, equal to the number of Doppler bins.
    pub fft_len: usize,
    /// Keep at most this many time bins.
    pub max_time_bins: Option<usize>,
    /// Dynamic range kept below the peak before normalization, dB.
    pub floor_db: f64,
}

impl Default for StftParams {
    /// Yields exactly 440 x 144 bins from 5000 frames.
    fn default() -> Self {
        Self {
            window_len: 128,
            hop: 11,
            fft_len: 144,
            max_time_bins: Some(440),
            floor_db: 60.0,
        }
    }
}

impl StftParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || self.hop == 0 {
            return Err(Error::Config("STFT window and hop must be positive".into()));
        }
        if self.fft_len < self.window_len {
            return Err(Error::Config(format!(
                "STFT fft_len {} shorter than window {}",
                self.fft_len, self.window_len
            )));
        }
        if self.floor_db.is_nan() || self.floor_db <= 0.0 {
            return Err(Error::Config(format!(
                "floor_db must be positive, got {}",
                self.floor_db
            )));
        }
        Ok(())
    }

    /// Number of time bins produced from `len` slow-time samples.
    pub fn time_bins(&self, len: usize) -> usize {
        if len < self.window_len {
            return 0;
        }
        let full = (len - self.window_len) / self.hop + 1;
        self.max_time_bins.map_or(full, |cap| full.min(cap))
    }
}

/// Time x Doppler image in `[0, 1]`, derived from dB power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrogram {
    /// Row `t` holds the Doppler distribution of time bin `t`.
    #[serde(skip)]
    pub values: Array2<f32>,
    /// Seconds at the centre of each window.
    pub time_axis: AxisScale,
    /// Hz, DC-centered.
    pub doppler_axis: AxisScale,
    pub window_len: usize,
    pub hop: usize,
    pub fft_len: usize,
    pub floor_db: f64,
}

impl Spectrogram {
    pub fn n_time(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_doppler(&self) -> usize {
        self.values.ncols()
    }

    /// Doppler (Hz) of the strongest bin in each time bin.
    pub fn ridge(&self) -> Vec<f64> {
        self.values
            .rows()
            .into_iter()
            .map(|row| {
                let (i, _) =
                    row.iter().enumerate().fold(
                        (0, f32::NEG_INFINITY),
                        |best, (i, &v)| if v > best.1 { (i, v) } else { best },
                    );
                self.doppler_axis.at(i)
            })
            .collect()
    }
}

fn hann(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|i| 0.5 * (1.0 - (TAU * i as f64 / (len - 1) as f64).cos()))
        .collect()
}

/// Power spectrogram of a slow-time series, scaled to dB, floored
/// `floor_db` below its peak and min-max normalized to `[0, 1]`.
pub fn stft_spectrogram(series: &[Complex64], slow_time_step: f64, params: &StftParams) -> Result<Spectrogram> {
    params.validate()?;
    if series.len() < params.window_len {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            window: params.window_len,
        });
    }
    let n_time = params.time_bins(series.len());
    let window = hann(params.window_len);
    let fft = FftPlanner::new().plan_fft_forward(params.fft_len);

    let power_db: Vec<Vec<f64>> = (0..n_time)
        .into_par_iter()
        .map(|t| {
            let start = t * params.hop;
            let mut buf = vec![Complex64::new(0.0, 0.0); params.fft_len];
            for (i, (b, w)) in buf.iter_mut().zip(&window).enumerate() {
                *b = series[start + i] * w;
            }
            fft.process(&mut buf);
            let db: Vec<f64> = buf.iter().map(|v| 10.0 * v.norm_sqr().log10()).collect();
            center_spectrum(&db)
        })
        .collect();

    let prf = 1.0 / slow_time_step;
    let values = normalize_db(&power_db, params.floor_db, params.fft_len);
    Ok(Spectrogram {
        values,
        time_axis: AxisScale {
            origin: params.window_len as f64 / 2.0 * slow_time_step,
            step: params.hop as f64 * slow_time_step,
        },
        doppler_axis: centered_axis(params.fft_len, prf / params.fft_len as f64),
        window_len: params.window_len,
        hop: params.hop,
        fft_len: params.fft_len,
        floor_db: params.floor_db,
    })
}

fn normalize_db(rows: &[Vec<f64>], floor_db: f64, width: usize) -> Array2<f32> {
    let peak = rows.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = Array2::zeros((rows.len(), width));
    if peak == f64::NEG_INFINITY {
        return out;
    }
    let floor = peak - floor_db;
    let lo = rows
        .iter()
        .flatten()
        .map(|&v| v.max(floor))
        .fold(f64::INFINITY, f64::min);
    let span = peak - lo;
    for (t, row) in rows.iter().enumerate() {
        for (f, &v) in row.iter().enumerate() {
            out[[t, f]] = if span > 0.0 {
                ((v.max(floor) - lo) / span) as f32
            } else {
                1.0
            };
        }
    }
    out
}

/// Mean over time bins of the Shannon entropy (bits) of each bin's Doppler
/// profile, treated as a probability distribution. Time bins that are
/// entirely zero carry no distribution and are skipped.
pub fn spectral_entropy(spec: &Spectrogram) -> Result<f64> {
    let mut total = 0.0;
    let mut rows = 0usize;
    for row in spec.values.rows() {
        let sum: f64 = row.iter().map(|&v| v as f64).sum();
        if sum <= 0.0 {
            continue;
        }
        let h: f64 = row
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| {
                let p = v as f64 / sum;
                -p * p.log2()
            })
            .sum();
        total += h;
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::ZeroSpectrogram);
    }
    Ok(total / rows as f64)
}

/// `|2D DFT|` of `Z̃`: range along the subcarrier axis, Doppler along slow time.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeDopplerMap {
    /// `N x M`, row = range bin, column = Doppler bin (DC-centered).
    pub values: Array2<f64>,
    /// m, starting at zero.
    pub range_axis: AxisScale,
    /// Hz.
    pub doppler_axis: AxisScale,
}

impl RangeDopplerMap {
    /// `(range bin, doppler bin)` of the maximum.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = ((0, 0), f64::NEG_INFINITY);
        for (idx, &v) in self.values.indexed_iter() {
            if v > best.1 {
                best = (idx, v);
            }
        }
        best.0
    }
}

pub fn range_doppler_map(z: &ZMatrix) -> RangeDopplerMap {
    let (n, m) = z.entries.dim();
    let mut planner = FftPlanner::new();
    let ifft_k = planner.plan_fft_inverse(n);
    let fft_m = planner.plan_fft_forward(m);
    let scale = 1.0 / ((n * m) as f64).sqrt();

    // delay phase e^{-j2π k Δf R / c} turns into a peak at bin R N Δf / c
    let mut work = z.entries.clone();
    work.axis_iter_mut(Axis(1)).into_par_iter().for_each(|mut col| {
        let mut buf = col.to_vec();
        ifft_k.process(&mut buf);
        col.iter_mut().zip(buf).for_each(|(d, v)| *d = v);
    });
    let rows: Vec<Vec<f64>> = work
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|row| {
            let mut buf = row.to_vec();
            fft_m.process(&mut buf);
            let mag: Vec<f64> = buf.iter().map(|v| v.norm() * scale).collect();
            center_spectrum(&mag)
        })
        .collect();
    let mut values = Array2::zeros((n, m));
    for (r, row) in rows.into_iter().enumerate() {
        values.row_mut(r).iter_mut().zip(row).for_each(|(d, v)| *d = v);
    }
    let cfg = &z.cfg;
    RangeDopplerMap {
        values,
        range_axis: AxisScale {
            origin: 0.0,
            step: SPEED_OF_LIGHT / (n as f64 * cfg.subcarrier_spacing()),
        },
        doppler_axis: centered_axis(m, 1.0 / (m as f64 * cfg.slow_time_step())),
    }
}

/// Hard decisions and error vector magnitude of an equalized payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Equalization {
    pub equalized: Array2<Complex64>,
    pub decisions: Array2<Complex64>,
    /// RMS error relative to the decided symbols' RMS.
    pub evm: f64,
}

/// Communication-receiver check: per-subcarrier least-squares channel
/// estimate from the known preamble of each frame, applied to that frame's
/// payload symbol, then sliced to `constellation`.
pub fn equalize_and_demap(
    preamble: &DataCube,
    preamble_symbols: &SymbolMatrix,
    payload: &DataCube,
    constellation: Constellation,
) -> Result<Equalization> {
    let cfg = preamble.cfg();
    if payload.samples().dim() != preamble.samples().dim() {
        return Err(Error::dims(
            format!("{:?}", preamble.samples().dim()),
            format!("{:?}", payload.samples().dim()),
        ));
    }
    let h = remove_symbols(&demodulate_fd(preamble), preamble_symbols, cfg)?.entries;
    if let Some(((k, m), _)) = h.indexed_iter().find(|(_, v)| v.norm_sqr() == 0.0) {
        return Err(Error::ZeroChannelEstimate {
            subcarrier: k,
            frame: m,
        });
    }
    let equalized = demodulate_fd(payload) / &h;
    let decisions = equalized.mapv(|z| constellation.slice(z));
    let err: f64 = equalized
        .iter()
        .zip(decisions.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let reference: f64 = decisions.iter().map(|v| v.norm_sqr()).sum();
    Ok(Equalization {
        equalized,
        decisions,
        evm: (err / reference).sqrt(),
    })
}
