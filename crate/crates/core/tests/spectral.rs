//! Cross-module properties: scans of synthetic spectra, Gram/Toeplitz
//! consistency, and the mean-ergodic cross-check.

use std::f64::consts::TAU;

use koopspec::matrices::SolverPath;
use koopspec::modes::radians_to_cycles;
use koopspec::series::AutocovMethod;
use koopspec::{
    autocovariance, autocovariance_with, build_autocov_matrix, build_gram, build_gram_multi,
    extract_frequency, pair_conjugates, run_scan, synth_tones, top_eigen, yosida, yosida_scan,
    Complex64, EigenOptions, Extraction, ModeEstimate, ScanGrid, TimeSeries, ToleranceConfig,
    Verdict,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cosine(len: usize, w: f64) -> TimeSeries {
    let v: Vec<f64> = (0..len).map(|t| (w * t as f64).cos()).collect();
    TimeSeries::from_real(&v, 1.0, "cos").unwrap()
}

#[test]
fn two_tone_scan_recovers_energies() {
    let tones = synth_tones(&[c(1.0, 0.0), c(0.5, 0.0)], &[0.3, 1.1], 0.0, 1, 100_000).unwrap();
    let grid = ScanGrid::uniform(vec![200, 400], vec![10_000, 50_000, 90_000], 4, 10.0).unwrap();
    let report = run_scan(&tones.series, &grid, &ToleranceConfig::default()).unwrap();
    let energies: Vec<f64> = report
        .verdicts
        .iter()
        .filter_map(|v| match v {
            Verdict::Eigenfrequency { energy } => Some(*energy),
            _ => None,
        })
        .collect();
    assert_eq!(energies.len(), 2, "{:?}", report.verdicts);
    assert!((energies[0] - 1.0).abs() <= 1e-3, "{energies:?}");
    assert!((energies[1] - 0.25).abs() <= 1e-3, "{energies:?}");
    assert_eq!(report.verdicts[2], Verdict::NullEnergy);
}

#[test]
fn white_noise_has_no_eigenfrequency() {
    let noise = synth_tones(&[], &[], 1.0, 42, 100_000).unwrap();
    // Large N keeps the noise eigenvalues well below the floor.
    let grid = ScanGrid::uniform(vec![1000, 2000], vec![20_000, 50_000, 97_000], 4, 10.0).unwrap();
    let report = run_scan(&noise.series, &grid, &ToleranceConfig::default()).unwrap();
    assert!(report.verdicts.iter().all(|v| *v == Verdict::NullEnergy), "{:?}", report.verdicts);
}

#[test]
fn extending_a_row_keeps_earlier_entries() {
    let tones = synth_tones(&[c(0.8, 0.1)], &[0.7], 0.3, 5, 6_000).unwrap();
    let short = build_gram_multi(&tones.series, 12, &[300, 900]).unwrap();
    let long = build_gram_multi(&tones.series, 12, &[300, 900, 5_000]).unwrap();
    for (a, b) in short.iter().zip(&long) {
        assert_eq!(a.entries(), b.entries());
    }
}

#[test]
fn cosine_gram_splits_energy_between_conjugates() {
    let s = cosine(100_201, 0.3);
    let r = top_eigen(&build_gram(&s, 200, 100_000).unwrap(), 3).unwrap();
    assert!((r.renormalized[0] - 0.25).abs() <= 0.01, "{:?}", r.renormalized);
    assert!((r.renormalized[1] - 0.25).abs() <= 0.01, "{:?}", r.renormalized);
    assert!(r.renormalized[2] < 1e-6);

    let modes: Vec<ModeEstimate> = (0..2)
        .map(|i| {
            let f = extract_frequency(&r.eigenvectors[i], Extraction::DftPeak).unwrap();
            ModeEstimate::new(i, r.renormalized[i], &f)
        })
        .collect();
    let paired = pair_conjugates(&modes, true, 0.1, 201);
    assert_eq!(paired[0].pair_index, Some(1));
    assert!((paired[0].combined_energy.unwrap() - 0.5).abs() <= 0.02);
    assert!((paired[0].omega + paired[1].omega).abs() <= TAU / 201.0);
    assert!((paired[0].omega.abs() - 0.3).abs() <= TAU / (8.0 * 201.0));
}

#[test]
fn toeplitz_and_gram_agree_at_large_m() {
    let n = 20;
    let m = 1_000_000;
    let s = cosine(m + n + 1, 0.3);
    let rho = autocovariance(&s, n, m).unwrap();
    let toeplitz = top_eigen(&build_autocov_matrix(&rho, n).unwrap(), n + 1).unwrap();
    let gram = top_eigen(&build_gram(&s, n, m).unwrap(), n + 1).unwrap();
    for (a, b) in toeplitz.eigenvalues.iter().zip(&gram.eigenvalues) {
        assert!((a - b).abs() <= 1e-3, "{a} vs {b}");
    }
}

#[test]
fn scan_energies_match_mean_ergodic_amplitudes() {
    let amps = [c(1.2, 0.3), c(-0.4, 0.5), c(0.0, 0.9)];
    let omegas = [0.45, -1.7, 2.6];
    let tones = synth_tones(&amps, &omegas, 0.1, 9, 102_001).unwrap();
    let grid = ScanGrid::uniform(vec![1000, 2000], vec![20_000, 50_000, 100_000], 5, 10.0).unwrap();
    let report = run_scan(&tones.series, &grid, &ToleranceConfig::default()).unwrap();
    assert_eq!(report.solver_paths.last(), Some(&SolverPath::Lanczos));
    for i in 0..3 {
        let Verdict::Eigenfrequency { energy } = report.verdicts[i] else {
            panic!("mode {i}: {:?}", report.verdicts[i]);
        };
        let f = extract_frequency(&report.final_eigenvectors[i], Extraction::DftPeak).unwrap();
        let y = yosida(&tones.series, radians_to_cycles(f.omega), 100_000).unwrap();
        assert!((y.energy() - energy).abs() <= 0.05 * energy, "{} vs {energy}", y.energy());
    }
}

#[test]
fn white_noise_yosida_scan_stays_small() {
    let t = 100_000;
    let noise = synth_tones(&[], &[], 1.0, 3, t).unwrap();
    let rho0 = noise.series.mean_energy();
    let scan = yosida_scan(&noise.series, -0.3, 0.4, 701, t).unwrap();
    let max = scan.iter().map(|e| e.energy()).fold(0.0, f64::max);
    assert!(max <= 5.0 * rho0 * (t as f64).ln() / t as f64, "{max}");
}

#[test]
fn lanczos_residuals_and_orthonormality() {
    let tones = synth_tones(&[c(1.0, 0.0), c(0.6, 0.2)], &[0.2, -0.9], 0.5, 2, 12_000).unwrap();
    let g = build_gram(&tones.series, 700, 10_000).unwrap();
    let r = top_eigen(&g, 6).unwrap();
    assert_eq!(r.path, SolverPath::Lanczos);
    let a = g.entries();
    let norm = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for (i, v) in r.eigenvectors.iter().enumerate() {
        let x = DMatrix::from_column_slice(v.len(), 1, v);
        let res = (a * &x - &x * Complex64::new(r.eigenvalues[i], 0.0)).norm();
        assert!(res <= 1e-8 * norm, "residual {res}");
        for (j, w) in r.eigenvectors.iter().enumerate() {
            let dot: Complex64 = v.iter().zip(w).map(|(p, q)| p.conj() * q).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).norm() <= 1e-8);
        }
    }
    let dense = top_eigen_dense(&g, 6);
    for (x, y) in r.eigenvalues.iter().zip(&dense) {
        assert!((x - y).abs() <= 1e-8 * norm);
    }
}

fn top_eigen_dense(g: &koopspec::GramMatrix, k: usize) -> Vec<f64> {
    let opts = EigenOptions {
        dense_threshold: usize::MAX,
        ..EigenOptions::default()
    };
    koopspec::top_eigen_with(g, k, &opts).unwrap().eigenvalues
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| c(a, b)), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conjugate_vector_negates_frequency(w in -3.0..3.0f64, phase in 0.0..TAU, d in 16usize..200) {
        let v: Vec<Complex64> = (0..d).map(|n| Complex64::cis(w * n as f64 + phase)).collect();
        let conj: Vec<Complex64> = v.iter().map(|z| z.conj()).collect();
        let a = extract_frequency(&v, Extraction::DftPeak).unwrap().omega;
        let b = extract_frequency(&conj, Extraction::DftPeak).unwrap().omega;
        let diff = (a + b).rem_euclid(TAU);
        prop_assert!(diff.min(TAU - diff) <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn yosida_energy_bounded_by_lag_zero(values in complex_vec(300), w in -0.49..0.5f64) {
        let s = TimeSeries::new(values, 1.0, "p").unwrap();
        let e = yosida(&s, w, s.len()).unwrap().energy();
        prop_assert!(e <= s.mean_energy() * (1.0 + 1e-6));
    }

    #[test]
    fn conjugate_series_reverses_lags(values in complex_vec(260), lags in 1usize..60) {
        let s = TimeSeries::new(values, 1.0, "p").unwrap();
        let n = s.len() - lags;
        let a = autocovariance_with(&s, lags, n, AutocovMethod::Direct).unwrap();
        let b = autocovariance_with(&s.conj(), lags, n, AutocovMethod::Direct).unwrap();
        for (x, y) in a.rho.iter().zip(&b.rho) {
            prop_assert!((x.conj() - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn gram_is_positive_semidefinite(values in complex_vec(120), n in 1usize..16) {
        let s = TimeSeries::new(values, 1.0, "p").unwrap();
        let m = s.len() - n - 1;
        let g = build_gram(&s, n, m).unwrap();
        let r = top_eigen(&g, n + 1).unwrap();
        let trace = g.trace();
        prop_assert!(r.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(r.eigenvalues.iter().all(|&d| d >= -1e-10 * trace));
        let sum: f64 = r.eigenvalues.iter().sum();
        prop_assert!((sum - trace).abs() <= 1e-10 * trace.max(1.0));
    }
}
