//! Per-scheme spectrogram statistics over a corpus directory.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use anyhow::Context;
use mdattack::dataset::{read_manifest, read_record};
use mdattack::receiver::spectral_entropy;
use mdattack::{ClassLabel, Scheme};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            count: xs.len(),
            mean,
            std: var.sqrt(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeMetrics {
    pub records: usize,
    /// Mean spectral entropy (bits) of each record.
    pub entropy_bits: Option<Summary>,
    /// Mean over time of `ridge(record) - ridge(paired NONE record)`, Hz.
    pub ridge_shift_hz: Option<Summary>,
    /// Mean over time of `|ridge(record) - ridge(paired NONE record)|`, Hz.
    pub abs_ridge_shift_hz: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusMetrics {
    pub records: usize,
    pub schemes: BTreeMap<Scheme, SchemeMetrics>,
}

struct Row {
    scheme: Scheme,
    pair_key: (ClassLabel, u64),
    entropy: f64,
    ridge: Vec<f64>,
}

pub fn corpus_metrics(dir: &Path) -> anyhow::Result<CorpusMetrics> {
    let manifest = read_manifest(dir)?;
    let rows: Vec<Row> = manifest
        .par_iter()
        .map(|e| {
            let rec = read_record(&dir.join(&e.file)).with_context(|| format!("record {}", e.file))?;
            Ok(Row {
                scheme: rec.scheme,
                // records of one movement share the scenario seed across schemes
                pair_key: (rec.label, rec.sidecar.seeds.scenario),
                entropy: spectral_entropy(&rec.spectrogram).with_context(|| format!("record {}", e.file))?,
                ridge: rec.spectrogram.ridge(),
            })
        })
        .collect::<anyhow::Result<_>>()?;

    let baseline: HashMap<_, &Row> = rows
        .iter()
        .filter(|r| r.scheme == Scheme::None)
        .map(|r| (r.pair_key, r))
        .collect();

    let mut schemes = BTreeMap::new();
    for scheme in Scheme::ALL {
        let mine: Vec<&Row> = rows.iter().filter(|r| r.scheme == scheme).collect();
        if mine.is_empty() {
            continue;
        }
        let entropy: Vec<f64> = mine.iter().map(|r| r.entropy).collect();
        let (mut shift, mut abs_shift) = (Vec::new(), Vec::new());
        for r in &mine {
            if let Some(b) = baseline.get(&r.pair_key) {
                let d: Vec<f64> = r.ridge.iter().zip(&b.ridge).map(|(a, b)| a - b).collect();
                let n = d.len() as f64;
                shift.push(d.iter().sum::<f64>() / n);
                abs_shift.push(d.iter().map(|x| x.abs()).sum::<f64>() / n);
            }
        }
        schemes.insert(
            scheme,
            SchemeMetrics {
                records: mine.len(),
                entropy_bits: Summary::of(&entropy),
                ridge_shift_hz: Summary::of(&shift),
                abs_ridge_shift_hz: Summary::of(&abs_shift),
            },
        );
    }
    Ok(CorpusMetrics {
        records: rows.len(),
        schemes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn population_statistics() {
        let s = Summary::of(&[1.0, 3.0]).unwrap();
        assert_eq!((s.count, s.mean, s.std), (2, 2.0, 1.0));
        assert!(Summary::of(&[]).is_none());
    }
}
