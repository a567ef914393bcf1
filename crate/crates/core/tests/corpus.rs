mod common;

use std::fs;

use common::*;
use mdattack::dataset::{build_corpus, read_manifest, read_record, simulate_record, write_record, MANIFEST_FILE};
use mdattack::{ClassLabel, CorpusSpec, Error, FormatError, Scheme};

fn one_per_class(schemes: Vec<Scheme>) -> CorpusSpec {
    CorpusSpec {
        scenarios_per_class: 1,
        schemes,
        master_seed: 11,
        ..Default::default()
    }
}

#[test]
fn record_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let spec = one_per_class(vec![Scheme::Random]);
    let rec = simulate_record(&spec, ClassLabel::Bic, Scheme::Random, 0).unwrap();
    let file = write_record(dir.path(), "r", &rec).unwrap();
    let back = read_record(&dir.path().join(file)).unwrap();
    assert_eq!(back, rec);
    assert!(back
        .spectrogram
        .values
        .iter()
        .zip(rec.spectrogram.values.iter())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn corrupted_records_give_distinct_errors() {
    let dir = tempfile::tempdir().unwrap();
    let spec = one_per_class(vec![Scheme::None]);
    let rec = simulate_record(&spec, ClassLabel::Ped, Scheme::None, 0).unwrap();
    let path = dir.path().join(write_record(dir.path(), "r", &rec).unwrap());
    let good = fs::read(&path).unwrap();

    let format_err = |bytes: &[u8]| {
        fs::write(&path, bytes).unwrap();
        match read_record(&path) {
            Err(Error::Format(e)) => e,
            other => panic!("expected a format error, got {other:?}"),
        }
    };
    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(matches!(format_err(&bad), FormatError::BadMagic(_)));
    let mut bad = good.clone();
    bad[8..12].copy_from_slice(&439u32.to_le_bytes());
    assert!(matches!(
        format_err(&bad),
        FormatError::DimensionMismatch { found_t: 439, .. }
    ));
    assert!(matches!(
        format_err(&good[..good.len() - 3]),
        FormatError::Truncated { .. }
    ));
}

#[test]
fn one_per_class_gives_five_labeled_records() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = build_corpus(&one_per_class(vec![Scheme::None]), dir.path()).unwrap();
    assert_eq!(manifest.len(), 5);
    let mut labels: Vec<_> = manifest.iter().map(|e| e.label).collect();
    labels.sort_by_key(|l| l.as_str());
    labels.dedup();
    assert_eq!(labels.len(), 5);
    assert_eq!(read_manifest(dir.path()).unwrap(), manifest);
    for e in &manifest {
        let rec = read_record(&dir.path().join(&e.file)).unwrap();
        assert_eq!((rec.label, rec.scheme, rec.seed), (e.label, e.scheme, e.seed));
        assert_eq!(rec.spectrogram.values.dim(), (440, 144));
        assert!(rec.spectrogram.values.iter().all(|v| (0.0..=1.0).contains(v)));
        // names carry no class information
        assert!(!e.file.to_lowercase().contains(&e.label.as_str().to_lowercase()));
    }
    // no staging files left behind
    let names: Vec<_> = tree_bytes(dir.path()).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names.len(), 11);
    assert!(names.contains(&MANIFEST_FILE.to_string()));
    assert!(names.iter().all(|n| !n.starts_with('.')));
}

#[test]
fn schemes_share_the_scenario() {
    let spec = one_per_class(Vec::from(Scheme::ALL));
    let a = simulate_record(&spec, ClassLabel::PedPed, Scheme::None, 0).unwrap();
    let b = simulate_record(&spec, ClassLabel::PedPed, Scheme::Random, 0).unwrap();
    assert_eq!(a.scenario, b.scenario);
    assert_ne!(a.seed, b.seed);
    assert_ne!(a.spectrogram.values, b.spectrogram.values);
}

#[test]
fn corpus_is_independent_of_thread_count() {
    let (n, same) = corpus_is_reproducible(&one_per_class(vec![Scheme::Random]));
    assert_eq!(n, 5);
    assert!(same);
}
