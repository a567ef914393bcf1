//! Pass/fail runner for the headline acceptance criteria. One line per
//! criterion; exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use mdattack::attack::{make_schedule, precoder_matrix};
use mdattack::channel::propagate_frames;
use mdattack::ofdm::{generate_symbols, UnitaryDft};
use mdattack::{AttackParams, Constellation, CorpusSpec, NoiseSpec, OfdmConfig, Preset, Scheme};

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn round_trip_and_oracle() -> Outcome {
    let mut rng = seeded(42);
    let mut dft_err = 0f64;
    for n in 1..=64 {
        let x = random_matrix(&mut rng, n, 1).column(0).to_vec();
        let dft = UnitaryDft::new(n);
        let mut y = x.clone();
        dft.inverse_in_place(&mut y).unwrap();
        for (a, b) in y.iter().zip(naive_dft(&x, true)) {
            dft_err = dft_err.max((a - b).norm());
        }
        dft.forward_in_place(&mut y).unwrap();
        for (a, b) in x.iter().zip(&y) {
            dft_err = dft_err.max((a - b).norm());
        }
    }
    let mut cube_err = 0f64;
    for n in 2usize..=8 {
        for m in 2..=4 {
            for l in 1..=3 {
                let cfg = small_cfg(n, m);
                let x = generate_symbols(&cfg, Constellation::Qam16, (n * 16 + m * 4 + l) as u64);
                let paths: Vec<_> = (0..m).map(|_| random_paths(&mut rng, l, &cfg)).collect();
                for scheme in Scheme::ALL {
                    let sched = make_schedule(scheme, &cfg, &AttackParams::default(), l as u64).unwrap();
                    let p = precoder_matrix(&sched, &cfg).unwrap();
                    let got = propagate_frames(&x, &paths, &cfg, Some(&p)).unwrap();
                    let want = brute_force_cube(&x.entries, &paths, &cfg, Some(&brute_force_precoder(&sched, &cfg)));
                    cube_err = cube_err.max(max_abs_diff(got.samples(), &want));
                }
            }
        }
    }
    Outcome {
        pass: dft_err < 1e-10 && cube_err < 1e-10,
        detail: format!("max |IDFT/DFT - naive| = {dft_err:.2e}, max |y - brute force| = {cube_err:.2e} (tol 1e-10)"),
    }
}

fn attack_shift_full() -> Outcome {
    let cfg = OfdmConfig::preset(Preset::Wifi20Mhz);
    let r = attack_shift(&cfg, 60.0);
    Outcome {
        pass: r.ridge_bins <= 1.0 && r.range_bins <= 1.0 && r.doppler_bins <= 1.0,
        detail: format!(
            "ridge off by {:.2} bins, range shift off by {:.2} bins, Doppler shift off by {:.2} bins (tol 1)",
            r.ridge_bins, r.range_bins, r.doppler_bins
        ),
    }
}

fn ici_freeness() -> Outcome {
    let cfg = OfdmConfig::preset(Preset::Wifi20Mhz).with_frames(200).unwrap();
    let (mut clean, mut diff, mut decisions) = (0f64, 0f64, true);
    for seed in 0..20 {
        let r = evm_pair(&cfg, seed, 20.0);
        clean = clean.max(r.clean_attacked);
        diff = diff.max((r.noisy_attacked - r.noisy_plain).abs());
        decisions &= r.same_decisions;
    }
    Outcome {
        pass: clean < 1e-10 && diff < 1e-12,
        detail: format!(
            "20 seeds: max noise-free EVM {clean:.2e} (tol 1e-10), max paired-noise EVM diff {diff:.2e} (tol 1e-12), identical decisions: {decisions}"
        ),
    }
}

fn smearing_ordering() -> Outcome {
    let cfg = OfdmConfig::preset(Preset::Wifi20Mhz);
    let (mut noisy, mut clean) = (0, 0);
    for seed in 0..100 {
        noisy += ordered(&scheme_entropies(&cfg, seed, NoiseSpec::SnrDb(20.0))) as usize;
        clean += ordered(&scheme_entropies(&cfg, seed, NoiseSpec::NoiseFree)) as usize;
    }
    Outcome {
        pass: noisy >= 95,
        detail: format!(
            "RANDOM > CONSTANT > NONE on {noisy}/100 pedestrians at 20 dB SNR (need 95); noise-free: {clean}/100 (informational)"
        ),
    }
}

fn corpus_determinism() -> Outcome {
    let spec = CorpusSpec {
        scenarios_per_class: 1,
        schemes: vec![Scheme::Random],
        master_seed: 2024,
        ..Default::default()
    };
    let (n, same) = corpus_is_reproducible(&spec);
    Outcome {
        pass: n == 5 && same,
        detail: format!("{n} records, byte-identical across builds (multi-threaded vs single-threaded): {same}"),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 5] = [
        ("round-trip/oracle", Duration::from_secs(10), round_trip_and_oracle),
        ("attack shift", Duration::from_secs(30), attack_shift_full),
        ("ICI-freeness", Duration::from_secs(30), ici_freeness),
        ("smearing ordering", Duration::from_secs(600), smearing_ordering),
        ("corpus determinism", Duration::from_secs(600), corpus_determinism),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let pass = out.pass && took <= budget;
        failed += !pass as usize;
        println!(
            "{} {name}: {} [{:.1}s, budget {}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
