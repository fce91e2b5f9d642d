use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use koopspec::dynamics::synth_grid;
use koopspec::{
    integrate_lorenz63, integrate_rotor, synth_tones, CellRecipe, Complex64, GridRecipe,
    IntegrationConfig, Lorenz63State, RotorState, TimeSeries,
};
use serde_json::{json, Value};

use crate::args::{SimulateArgs, System};
use crate::output::{canonical, sidecar_path, write_file};
use crate::{CliError, CliResult};

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let (provenance, truth) = match a.system {
        System::Lorenz63 => {
            let cfg = integration(a, 0.01);
            let series = integrate_lorenz63(initial(a), a.steps, &cfg)?;
            write_series(&a.out, &series)?;
            (lorenz_provenance(a, &cfg), Value::Null)
        }
        System::Rotor => {
            let cfg = integration(a, 0.01);
            let state = RotorState {
                lorenz: initial(a),
                xi: a.xi0,
            };
            let series = integrate_rotor(state, a.steps, &cfg, a.period)?;
            write_series(&a.out, &series)?;
            let mut p = lorenz_provenance(a, &cfg);
            p["period"] = json!(a.period);
            p["xi0"] = json!(a.xi0);
            (p, Value::Null)
        }
        System::Tones => simulate_tones(a)?,
        System::Grid => simulate_grid(a)?,
    };
    let sidecar = json!({
        "system": format!("{:?}", a.system).to_lowercase(),
        "output": a.out.file_name().map(|n| n.to_string_lossy().into_owned()),
        "params": provenance,
        "truth": truth,
        "generator": concat!("koopspec ", env!("CARGO_PKG_VERSION")),
    });
    write_file(&sidecar_path(&a.out), canonical(&sidecar)?.as_bytes())
}

fn integration(a: &SimulateArgs, default_dt: f64) -> IntegrationConfig {
    IntegrationConfig {
        dt: a.dt.unwrap_or(default_dt),
        burn_in: a.burn_in,
    }
}

fn initial(a: &SimulateArgs) -> Lorenz63State {
    Lorenz63State::new(a.x0, a.y0, a.z0)
}

fn lorenz_provenance(a: &SimulateArgs, cfg: &IntegrationConfig) -> Value {
    json!({
        "steps": a.steps,
        "dt": cfg.dt,
        "burn_in": cfg.burn_in,
        "initial": [a.x0, a.y0, a.z0],
        "lorenz_params": Lorenz63State::default().params,
        "integrator": "rk4",
    })
}

fn simulate_tones(a: &SimulateArgs) -> CliResult<(Value, Value)> {
    let amps = a.amps.clone().unwrap_or_default();
    let omegas = a.omegas.clone().unwrap_or_default();
    let phases = a.phases.clone().unwrap_or_else(|| vec![0.0; amps.len()]);
    if phases.len() != amps.len() {
        return Err(CliError::Usage(format!(
            "{} phases for {} amplitudes",
            phases.len(),
            amps.len()
        )));
    }
    let complex: Vec<Complex64> = amps
        .iter()
        .zip(&phases)
        .map(|(&r, &p)| Complex64::from_polar(r, p))
        .collect();
    let tones = synth_tones(&complex, &omegas, a.noise_std, a.seed, a.steps)?;
    let series = match a.dt {
        Some(dt) => TimeSeries::new(tones.series.values().to_vec(), dt, "tones")?,
        None => tones.series.clone(),
    };
    write_series(&a.out, &series)?;
    let params = json!({
        "steps": a.steps,
        "dt": series.dt(),
        "amps": amps,
        "phases": phases,
        "omegas": omegas,
        "noise_std": a.noise_std,
        "seed": a.seed,
        "rng": "chacha20+box-muller",
    });
    let truth = json!({ "energies": tones.energies, "omegas": tones.omegas });
    Ok((params, truth))
}

fn simulate_grid(a: &SimulateArgs) -> CliResult<(Value, Value)> {
    let dt = a.dt.unwrap_or(1.0);
    let cell = CellRecipe {
        tone_abs_a: a.tone_amp,
        trend_slope: a.trend,
        offset: a.offset,
        noise_std: a.noise_std,
    };
    let recipe = GridRecipe::uniform(a.nx, a.ny, a.omega, dt, cell);
    let (dataset, truth) = synth_grid(a.nx, a.ny, a.steps, &recipe, a.seed)?;
    dataset.write(&a.out)?;
    let params = json!({
        "nx": a.nx,
        "ny": a.ny,
        "steps": a.steps,
        "dt": dt,
        "omega_cycles": a.omega,
        "cell": cell,
        "seed": a.seed,
        "rng": "chacha20+box-muller",
    });
    Ok((params, serde_json::to_value(truth).expect("plain data")))
}

fn write_series(path: &Path, series: &TimeSeries) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    series.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}
