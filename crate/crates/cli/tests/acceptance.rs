//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use clap::Parser;
use koopspec::dynamics::GaussianSource;
use koopspec::series::AutocovMethod;
use koopspec::{
    autocovariance_with, build_gram, build_trajectory, top_eigen, Complex64, TimeSeries, Verdict,
};
use koopspec_cli::analyze::{read_series, AnalysisReport};
use koopspec_cli::{cmd_analyze, cmd_map, cmd_simulate, cmd_yosida, Cli, Command};
use nalgebra::DMatrix;
use serde_json::Value;

type Outcome = Result<String, String>;

const ROTOR_ENERGY: f64 = 0.1303;

fn parse(args: &[&str]) -> Command {
    let mut full = vec!["koopspec"];
    full.extend_from_slice(args);
    Cli::try_parse_from(full).unwrap_or_else(|e| panic!("bad test arguments: {e}")).command
}

fn simulate(args: &[&str]) {
    let Command::Simulate(a) = parse(args) else { unreachable!() };
    cmd_simulate(&a).unwrap();
}

/// Runs `analyze`, writing the report next to the input unless `--out` is given.
fn analyze(args: &[&str]) -> AnalysisReport {
    let Command::Analyze(mut a) = parse(args) else { unreachable!() };
    if a.out.is_none() {
        a.out = Some(a.input.with_extension("report.json"));
    }
    cmd_analyze(&a).unwrap()
}

fn yosida_energy(input: &Path, omega: &str, t_used: usize, out: &Path) -> f64 {
    let Command::Yosida(a) = parse(&[
        "yosida",
        "--input",
        input.to_str().unwrap(),
        "--omega",
        omega,
        "--t-used",
        &t_used.to_string(),
        "--out",
        out.to_str().unwrap(),
    ]) else {
        unreachable!()
    };
    cmd_yosida(&a).unwrap();
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    v["estimates"][0]["energy"].as_f64().unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_series(len: usize, seed: u64) -> TimeSeries {
    let mut g = GaussianSource::new(seed);
    let v = (0..len).map(|_| Complex64::new(g.standard_normal(), g.standard_normal())).collect();
    TimeSeries::new(v, 1.0, "random").unwrap()
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

// Rotor run long enough for N = 1000 with M = 2e5; the first 2e5 samples are
// the 2e5-step run.
const ROTOR_STEPS: usize = 201_001;
const ROTOR_T: usize = 200_000;

fn rotor_energy(dir: &Path) -> Outcome {
    let csv = dir.join("rotor.csv");
    let series = read_series(&csv).unwrap();
    let norm2 = series.truncated(ROTOR_T).unwrap().mean_energy();
    let e_pos = yosida_energy(&csv, "5*0.01/pi", ROTOR_T, &dir.join("y_pos.json"));
    let e_neg = yosida_energy(&csv, "-5*0.01/pi", ROTOR_T, &dir.join("y_neg.json"));
    let fraction = (e_pos + e_neg) / norm2;
    check(
        (norm2 - 0.5002).abs() <= 0.005
            && (e_pos - ROTOR_ENERGY).abs() <= 0.01
            && (fraction - 0.52).abs() <= 0.04,
        format!("|f|^2 = {norm2:.5}, E_Y = {e_pos:.5}, pair fraction = {fraction:.4}"),
    )
}

fn rotor_scan(dir: &Path) -> Outcome {
    let csv = dir.join("rotor.csv");
    let r = analyze(&[
        "analyze", "--input", csv.to_str().unwrap(), "--n-grid", "250,500,1000",
        "--m-grid", "2e4,1e5,2e5", "--top-k", "4",
        "--out", dir.join("rotor_report.json").to_str().unwrap(),
    ]);
    let sigma = [r.scan.sigma_final(0)[2], r.scan.sigma_final(1)[2]];
    let v = &r.scan.verdicts;
    let close = sigma.iter().all(|s| (s - ROTOR_ENERGY).abs() <= 0.1 * ROTOR_ENERGY);
    let eigen01 = v[0].is_eigenfrequency() && v[1].is_eigenfrequency();
    let not23 = !v[2].is_eigenfrequency() && !v[3].is_eigenfrequency();
    let omegas: Vec<f64> = r.modes.iter().map(|m| m.mode.omega).collect();
    check(
        close && eigen01 && not23,
        format!(
            "sigma0 = {:.5}, sigma1 = {:.5}, verdicts = {:?}, omegas = {omegas:.5?}",
            sigma[0],
            sigma[1],
            v.iter().map(verdict_name).collect::<Vec<_>>()
        ),
    )
}

fn verdict_name(v: &Verdict) -> &'static str {
    match v {
        Verdict::Eigenfrequency { .. } => "eigenfrequency",
        Verdict::NullEnergy => "null_energy",
        Verdict::NotConvergedInM { .. } => "not_converged_in_m",
        Verdict::NotConvergedInN => "not_converged_in_n",
    }
}

fn lorenz_null(dir: &Path) -> Outcome {
    let csv = dir.join("lorenz.csv");
    simulate(&["simulate", "lorenz63", "--steps", "200000", "--out", csv.to_str().unwrap()]);
    // M_max = 1.9e5 keeps N = 2000 inside the 2e5 samples.
    let r = analyze(&[
        "analyze", "--input", csv.to_str().unwrap(), "--n-grid", "500,1000,2000",
        "--m-grid", "2e4,1e5,1.9e5", "--top-k", "4",
    ]);
    let s0 = r.scan.sigma_final(0);
    let decreasing = s0.windows(2).all(|w| w[1] < w[0]);
    let ratio = s0[2] / s0[0];
    let none = r.scan.verdicts.iter().all(|v| !v.is_eigenfrequency());
    check(
        decreasing && ratio <= 0.6 && none,
        format!("sigma0 over N = {s0:.4?}, ratio = {ratio:.3}, eigenfrequencies: {}", !none),
    )
}

struct ToneConfig {
    amps: Vec<f64>,
    phases: Vec<f64>,
    omegas: Vec<f64>,
    noise: f64,
}

/// Random tones with frequencies at least 0.05 rad apart and energies at
/// least 10% apart, so every tone owns one eigenvalue.
fn tone_config(g: &mut GaussianSource) -> ToneConfig {
    let count = 1 + (g.uniform() * 4.0) as usize;
    loop {
        let amps: Vec<f64> = (0..count).map(|_| 0.2 + 1.8 * g.uniform()).collect();
        let omegas: Vec<f64> = (0..count).map(|_| PI - TAU * g.uniform()).collect();
        let phases: Vec<f64> = (0..count).map(|_| TAU * g.uniform()).collect();
        let noise = if g.uniform() < 0.5 { 0.0 } else { 0.1 };
        let mut ok = true;
        for a in 0..count {
            for b in a + 1..count {
                let dw = (omegas[a] - omegas[b]).rem_euclid(TAU);
                let (ea, eb) = (amps[a] * amps[a], amps[b] * amps[b]);
                ok &= dw.min(TAU - dw) >= 0.05 && (ea - eb).abs() >= 0.1 * ea.max(eb);
            }
        }
        if ok {
            return ToneConfig { amps, phases, omegas, noise };
        }
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(",")
}

fn synthetic_suite(dir: &Path) -> Outcome {
    const N_MAX: usize = 2000;
    let steps = (N_MAX + 100_000 + 1).to_string();
    let freq_tol = TAU / (8.0 * (N_MAX + 1) as f64);
    let mut g = GaussianSource::new(20_240_601);
    let mut failures = Vec::new();
    let mut worst_energy: f64 = 0.0;
    let mut worst_omega: f64 = 0.0;
    for run in 0..20 {
        let cfg = tone_config(&mut g);
        let csv = dir.join(format!("tones_{run}.csv"));
        simulate(&[
            "simulate", "tones", "--amps", &join(&cfg.amps), "--phases", &join(&cfg.phases),
            "--omegas", &join(&cfg.omegas), "--noise-std", &cfg.noise.to_string(),
            "--seed", &run.to_string(), "--steps", &steps, "--out", csv.to_str().unwrap(),
        ]);
        let r = analyze(&[
            "analyze", "--input", csv.to_str().unwrap(), "--n-grid", "1000,2000",
            "--m-grid", "2e4,5e4,1e5", "--top-k", "8", "--energy-floor", "1e-3",
        ]);
        let mut truth: Vec<(f64, f64)> =
            cfg.amps.iter().zip(&cfg.omegas).map(|(a, w)| (a * a, *w)).collect();
        let mut found: Vec<(f64, f64)> = r.modes.iter().map(|m| (m.mode.energy, m.mode.omega)).collect();
        truth.sort_by(|a, b| b.0.total_cmp(&a.0));
        found.sort_by(|a, b| b.0.total_cmp(&a.0));
        if truth.len() != found.len() {
            failures.push(format!("run {run}: {} tones, {} eigenfrequencies", truth.len(), found.len()));
            continue;
        }
        for ((e, w), (fe, fw)) in truth.iter().zip(&found) {
            let de = (fe - e).abs() / e;
            let dw = (fw - w).rem_euclid(TAU);
            let dw = dw.min(TAU - dw);
            worst_energy = worst_energy.max(de);
            worst_omega = worst_omega.max(dw);
            if de > 0.05 || dw > freq_tol {
                failures.push(format!("run {run}: energy {fe:.4} vs {e:.4}, omega {fw:.5} vs {w:.5}"));
            }
        }
    }
    let mut noise_hits = 0;
    for seed in 0..4u64 {
        let csv = dir.join(format!("noise_{seed}.csv"));
        simulate(&[
            "simulate", "tones", "--noise-std", "1",
            "--seed", &(100 + seed).to_string(), "--steps", &steps, "--out", csv.to_str().unwrap(),
        ]);
        let r = analyze(&[
            "analyze", "--input", csv.to_str().unwrap(), "--n-grid", "1000,2000",
            "--m-grid", "2e4,5e4,1e5", "--top-k", "8",
        ]);
        noise_hits += r.scan.verdicts.iter().filter(|v| v.is_eigenfrequency()).count();
    }
    if noise_hits > 0 {
        failures.push(format!("{noise_hits} eigenfrequency verdicts on noise-only runs"));
    }
    check(
        failures.is_empty(),
        format!(
            "20 configs + 4 noise runs, worst energy error {:.2}%, worst omega error {worst_omega:.2e} (tol {freq_tol:.2e}){}",
            100.0 * worst_energy,
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn naive_gram(f: &[Complex64], n: usize, m: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n + 1, n + 1, |i, j| {
        (0..=m).map(|t| f[i + t] * f[j + t].conj()).sum::<Complex64>() / m as f64
    })
}

fn exactness() -> Outcome {
    let mut worst = [0.0f64; 5];
    // Pure tone: sigma0 = (M + 1) / M.
    for (n, m) in [(16, 200), (64, 1000), (200, 5000)] {
        let tone: Vec<Complex64> = (0..n + m + 1).map(|t| Complex64::cis(0.3 * t as f64)).collect();
        let s = TimeSeries::new(tone, 1.0, "tone").unwrap();
        let r = top_eigen(&build_gram(&s, n, m).unwrap(), 2).unwrap();
        worst[0] = worst[0].max((r.renormalized[0] - (m + 1) as f64 / m as f64).abs());
    }
    // Prefix-sum Gram against a naive sum, and (1/M) A A* against G.
    for (seed, (n, m)) in [(4, 16), (8, 64), (16, 256), (3, 5)].into_iter().enumerate() {
        let s = random_series(n + m + 1, seed as u64);
        let g = build_gram(&s, n, m).unwrap();
        worst[1] = worst[1].max(max_abs_diff(g.entries(), &naive_gram(s.values(), n, m)));
        let a = build_trajectory(&s, n, m).unwrap().to_dense();
        let aa = &a * a.adjoint() / Complex64::new(m as f64, 0.0);
        worst[2] = worst[2].max(max_abs_diff(g.entries(), &aa));
        // delta_i^2 = M d_i, with delta from an SVD of A.
        let r = top_eigen(&g, n + 1).unwrap();
        let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        for (d, delta) in r.eigenvalues.iter().zip(&sv) {
            let rel = (delta * delta - m as f64 * d).abs() / (m as f64 * r.eigenvalues[0]);
            worst[3] = worst[3].max(rel);
        }
        for (x, y) in r.singular_values(m).iter().zip(&sv) {
            worst[3] = worst[3].max((x * x - y * y).abs() / (sv[0] * sv[0]));
        }
    }
    // FFT against direct autocovariance.
    for (seed, (len, lags)) in [(1000, 50), (10_000, 300), (4096, 4095)].into_iter().enumerate() {
        let s = random_series(len + lags, 100 + seed as u64);
        let d = autocovariance_with(&s, lags, len, AutocovMethod::Direct).unwrap();
        let f = autocovariance_with(&s, lags, len, AutocovMethod::Fft).unwrap();
        let scale = d.rho[0].re;
        let err = d.rho.iter().zip(&f.rho).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        worst[4] = worst[4].max(err / scale);
    }
    let tol = [1e-12, 1e-12, 1e-12, 1e-10, 1e-10];
    check(
        worst.iter().zip(&tol).all(|(w, t)| w <= t),
        format!(
            "tone sigma0 {:.1e}, prefix vs naive {:.1e}, AA*/M vs G {:.1e}, delta^2 vs M d {:.1e}, fft vs direct {:.1e}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn vandermonde() -> Outcome {
    let n = 5000;
    let c = [2.0, 1.5, 1.0, 0.5];
    let norm = ((n + 1) as f64).sqrt();
    let v = DMatrix::from_fn(n + 1, c.len(), |row, k| {
        let xi = Complex64::cis(TAU * (k + 1) as f64 * 0.137);
        xi.powu(row as u32) * c[k] / norm
    });
    let svd_top = v.singular_values().iter().copied().fold(0.0, f64::max);
    // Same value through the library eigensolver on V* V.
    let gram = v.adjoint() * &v;
    let eig_top = top_eigen(&gram, 1).unwrap().eigenvalues[0].sqrt();
    check(
        (svd_top - 2.0).abs() <= 0.02 && (eig_top - svd_top).abs() <= 1e-10,
        format!("leading singular value {svd_top:.6} (eigensolver {eig_top:.6})"),
    )
}

fn ssh_pipeline(dir: &Path) -> Outcome {
    let header = dir.join("field.json");
    simulate(&[
        "simulate", "grid", "--nx", "16", "--ny", "16", "--steps", "7305", "--tone-amp", "0.5",
        "--trend", "1e-3", "--offset", "2", "--noise-std", "0.1", "--omega", "1/365.25",
        "--seed", "11", "--out", header.to_str().unwrap(),
    ]);
    let Command::Map(a) = parse(&[
        "map", "--input", header.to_str().unwrap(), "--omega", "1/365.25", "--detrend",
        "--normalize", "--out", dir.join("map.csv").to_str().unwrap(),
        "--summary", dir.join("map_summary.json").to_str().unwrap(),
    ]) else {
        unreachable!()
    };
    let map = cmd_map(&a).unwrap();
    let meta: Value = serde_json::from_str(
        &std::fs::read_to_string(dir.join("field.meta.json")).unwrap(),
    )
    .unwrap();
    let truth: Vec<f64> = meta["truth"]["abs_a_normalized"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let mut good = 0;
    let mut worst: f64 = 0.0;
    for cell in &map.cells {
        let t = truth[cell.iy * 16 + cell.ix];
        let err = (cell.abs_a - t).abs();
        worst = worst.max(err);
        good += usize::from(err <= 0.05);
    }
    let share = good as f64 / map.cells.len() as f64;
    check(
        share >= 0.95,
        format!(
            "{good}/{} cells within 0.05 of {:.4}, worst error {worst:.4}",
            map.cells.len(),
            truth[0]
        ),
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let rotor = dir.path().join("rotor.csv");
    let steps = ROTOR_STEPS.to_string();
    simulate(&["simulate", "rotor", "--steps", &steps, "--dt", "0.01", "--period", "pi/5",
        "--out", rotor.to_str().unwrap()]);

    let criteria: Vec<Criterion> = vec![
        ("1 rotor energy reproduction", Box::new(|| rotor_energy(dir.path()))),
        ("2 rotor scan vs mean-ergodic energy", Box::new(|| rotor_scan(dir.path()))),
        ("3 lorenz null result", Box::new(|| lorenz_null(dir.path()))),
        ("4 synthetic tone suite", Box::new(|| synthetic_suite(dir.path()))),
        ("5 exactness identities", Box::new(exactness)),
        ("6 weighted vandermonde singular value", Box::new(vandermonde)),
        ("7 gridded amplitude map", Box::new(|| ssh_pipeline(dir.path()))),
    ];

    let mut failed = 0;
    for (name, run) in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(format!("panicked: {:?}", p.downcast_ref::<String>())));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS criterion {name} ({secs:.1}s): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name} ({secs:.1}s): {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
