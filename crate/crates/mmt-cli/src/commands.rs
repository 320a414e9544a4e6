//! The five subcommands: each loads a JSON config, runs the corresponding
//! library operation, and emits CSV/JSON artifacts plus a digest manifest.

use crate::config::{BenchConfig, MapConfig, ProbeConfig, SimulateConfig};
use crate::output::RunDir;
use crate::CliError;
use mmt_lab::bench::{case_reports_csv, counting_bound_check, h_range_check, CaseTag, DyadicConfig};
use mmt_lab::dynamics::{integrate, DynamicsError};
use mmt_lab::probe::{probe_csv, run_probe};
use mmt_lab::thresholds::{region_chart, region_chart_csv};
use serde_json::json;
use std::path::PathBuf;

pub fn cmd_simulate(
    cfg: &SimulateConfig,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let grid = cfg.grid.build()?;
    let params = cfg.params.build()?;
    let integrator = cfg.integrator.build()?;
    let u0 = cfg.initial_data.build(grid, seed)?;

    let mut run = RunDir::create(out_dir)?;
    let record = match integrate(&u0, &params, &integrator) {
        Ok(r) => r,
        Err(DynamicsError::StepRejected { time }) => {
            let dir = run.finish(
                "simulate",
                cfg,
                json!({"status": "numerical-failure", "failure_time": time}),
            )?;
            return Err(CliError::Numerical(format!(
                "step rejected at t = {time}; manifest in {}",
                dir.display()
            )));
        }
        Err(e) => return Err(CliError::Config(format!("integrate: {e}"))),
    };

    let mut csv = String::from("time,mass,energy,h_alpha_half_sq\n");
    for i in 0..record.times.len() {
        csv.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            record.times[i],
            record.mass_series[i],
            record.energy_series[i],
            record.h_alpha_half_series[i]
        ));
    }
    run.write_text("series.csv", &csv)?;

    let snapshots_index = if let Some(snaps) = &record.snapshots {
        let mut bytes = Vec::with_capacity(snaps.len() * grid.num_modes() * 16);
        for s in snaps {
            for m in s.modes() {
                bytes.extend_from_slice(&m.re.to_le_bytes());
                bytes.extend_from_slice(&m.im.to_le_bytes());
            }
        }
        run.write_bytes("snapshots.bin", &bytes)?;
        json!({
            "file": "snapshots.bin",
            "layout": "interleaved_f64_le",
            "snapshot_count": snaps.len(),
            "num_modes": grid.num_modes(),
            "times": record.times,
        })
    } else {
        serde_json::Value::Null
    };

    let document = record.document(grid, params, integrator);
    run.write_json(
        "trajectory.json",
        &json!({"document": document, "snapshots": snapshots_index}),
    )?;
    let dir = run.finish("simulate", cfg, json!({"status": "ok"}))?;
    eprintln!("simulate: wrote {}", dir.display());
    Ok(())
}

pub fn cmd_probe(
    cfg: &ProbeConfig,
    out_dir: Option<PathBuf>,
    assert_slope: Option<f64>,
) -> Result<(), CliError> {
    let spec = cfg.build()?;
    let result = run_probe(&spec).map_err(|e| CliError::Numerical(format!("probe: {e}")))?;
    let mut run = RunDir::create(out_dir)?;
    run.write_text("probe.csv", &probe_csv(&spec, &result))?;
    run.write_json("probe.json", &json!({"spec": spec, "result": result}))?;
    let deviation = (result.fitted_slope - result.predicted_slope).abs();
    let dir = run.finish(
        "probe",
        cfg,
        json!({
            "fitted_slope": result.fitted_slope,
            "predicted_slope": result.predicted_slope,
            "deviation": deviation,
        }),
    )?;
    eprintln!(
        "probe: fitted {:+.4}, predicted {:+.4}; wrote {}",
        result.fitted_slope,
        result.predicted_slope,
        dir.display()
    );
    if let Some(tol) = assert_slope {
        if deviation > tol {
            return Err(CliError::Assertion(format!(
                "slope deviation {deviation:.4} exceeds tolerance {tol}"
            )));
        }
    }
    Ok(())
}

pub fn cmd_map(cfg: &MapConfig, out_dir: Option<PathBuf>) -> Result<(), CliError> {
    cfg.validate()?;
    let cells = region_chart(
        cfg.alpha,
        (cfg.beta_range[0], cfg.beta_range[1]),
        (cfg.s_range[0], cfg.s_range[1]),
        cfg.resolution,
        cfg.delta,
    )
    .map_err(|e| CliError::Config(format!("map: {e}")))?;
    let mut run = RunDir::create(out_dir)?;
    run.write_text("region.csv", &region_chart_csv(&cells))?;
    let dir = run.finish("map", cfg, json!({"cells": cells.len()}))?;
    eprintln!("map: {} cells; wrote {}", cells.len(), dir.display());
    Ok(())
}

pub fn cmd_bench(cfg: &BenchConfig, out_dir: Option<PathBuf>, seed: Option<u64>) -> Result<(), CliError> {
    let tags: Vec<CaseTag> = cfg
        .cases
        .iter()
        .map(|s| s.parse().map_err(|e| CliError::Config(format!("cases: {e}"))))
        .collect::<Result<_, _>>()?;
    let seed = seed.unwrap_or(cfg.seed);

    let mut reports = Vec::new();
    for &alpha in &cfg.alphas {
        for &tag in &tags {
            let rep = counting_bound_check(tag, alpha, &cfg.n_sweep, &cfg.l_sweep, cfg.resolution)
                .map_err(|e| CliError::Config(format!("bench case {tag}: {e}")))?;
            reports.push(rep);
        }
    }
    let mut h_reports = Vec::new();
    for h in &cfg.h_range {
        let dyadic = DyadicConfig {
            n1: h.n1,
            n2: h.n2,
            n3: h.n3,
            n4: None,
            l_levels: vec![],
            alpha: h.alpha,
        };
        let rep = h_range_check(&dyadic, h.samples, seed)
            .map_err(|e| CliError::Config(format!("h_range: {e}")))?;
        h_reports.push(rep);
    }

    let worst = reports.iter().map(|r| r.worst_ratio).fold(0.0f64, f64::max);
    let h_pass = h_reports.iter().all(|r| r.pass);
    let mut run = RunDir::create(out_dir)?;
    run.write_text("bench.csv", &case_reports_csv(&reports))?;
    run.write_json(
        "bench.json",
        &json!({"reports": reports, "h_range": h_reports, "worst_ratio": worst, "seed": seed}),
    )?;
    let dir = run.finish(
        "bench",
        cfg,
        json!({"worst_ratio": worst, "h_range_pass": h_pass, "seed": seed}),
    )?;
    eprintln!("bench: worst ratio {worst:.3}; wrote {}", dir.display());
    if worst > 1.0 {
        return Err(CliError::Assertion(format!(
            "worst measured/bound ratio {worst:.3} exceeds 1"
        )));
    }
    if !h_pass {
        return Err(CliError::Assertion(
            "resonance-sum range check outside frozen constants".into(),
        ));
    }
    Ok(())
}
