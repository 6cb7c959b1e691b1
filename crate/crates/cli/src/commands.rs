use std::path::{Path, PathBuf};

use currentflow::cone::{cone_residual, make_calibration, transversal_pairing, ConeSpec, Preset};
use currentflow::exterior::{comass_norm, mass_norm, NormEstimate};
use currentflow::flow::{prox_flow_constrained, prox_flow_unconstrained, FlowResult, Termination};
use currentflow::grid::io::{read_form, write_form};
use currentflow::grid::DiscreteForm;
use currentflow::hodge::{hodge_decompose, DEFAULT_CG_TOL};
use currentflow::tvprox::{tv_energy, tv_energy_dual};
use serde_json::{json, Value};

use crate::config::{check_distinct, ExperimentConfig};
use crate::error::CliError;
use crate::expr::parse_kvector;
use crate::gen::{generate, GenPreset, GenRequest};

/// What a command prints: JSON under `--json`, otherwise `key value` lines.
/// A solver failure still prints its report before exiting with code 2.
pub struct Report(pub Value, pub Option<CliError>);

impl Report {
    pub fn new(value: Value) -> Self {
        Report(value, None)
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            return self.0.to_string();
        }
        let mut out = String::new();
        if let Value::Object(map) = &self.0 {
            for (k, v) in map {
                match v {
                    Value::String(s) => out.push_str(&format!("{k} {s}\n")),
                    other => out.push_str(&format!("{k} {other}\n")),
                }
            }
        }
        out
    }
}

/// `dir/name.json` → `dir/name.part.json`.
pub fn sibling(path: &Path, part: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{part}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{part}"),
    };
    path.with_file_name(name)
}

fn input(cfg: &ExperimentConfig) -> Result<(PathBuf, DiscreteForm), CliError> {
    let path = ExperimentConfig::required(&cfg.input, "input")?.clone();
    let form = read_form(&path)?;
    Ok((path, form))
}

fn calibration_preset(cfg: &ExperimentConfig) -> Result<Option<Preset>, CliError> {
    cfg.calibration
        .as_deref()
        .map(|s| s.parse::<Preset>().map_err(CliError::from))
        .transpose()
}

pub fn gen(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let preset: GenPreset = ExperimentConfig::required(&cfg.preset, "preset")?.parse()?;
    let output = ExperimentConfig::required(&cfg.output, "output")?;
    let req = GenRequest {
        preset,
        grid: cfg.torus()?,
        degree: cfg.grid.degree,
        calibration: calibration_preset(cfg)?,
        mean: cfg.mean.unwrap_or(1.0),
        noise: cfg.noise.unwrap_or(0.5),
        seed: cfg.seed(),
    };
    let generated = generate(&req)?;
    let part_paths: Vec<PathBuf> = generated.parts.iter().map(|(name, _)| sibling(output, name)).collect();
    let mut all: Vec<&Path> = vec![output.as_path()];
    all.extend(part_paths.iter().map(PathBuf::as_path));
    check_distinct(&all)?;
    write_form(output, &generated.form)?;
    let mut parts = serde_json::Map::new();
    for ((name, form), path) in generated.parts.iter().zip(&part_paths) {
        write_form(path, form)?;
        parts.insert((*name).to_string(), json!(path.display().to_string()));
    }
    let mut report = json!({
        "output": output.display().to_string(),
        "preset": preset.to_string(),
        "degree": generated.form.degree(),
        "cells": generated.form.values().len(),
    });
    if !parts.is_empty() {
        report["parts"] = Value::Object(parts);
    }
    Ok(Report::new(report))
}

fn flow_files(cfg: &ExperimentConfig, input: &Path) -> Result<(), CliError> {
    let mut paths = vec![input];
    paths.extend(cfg.output.as_deref());
    paths.extend(cfg.trace.as_deref());
    check_distinct(&paths)
}

/// Writes the limit and trace, then turns an unfinished flow into exit code 2.
fn finish_flow(
    cfg: &ExperimentConfig,
    result: &FlowResult,
    probes: usize,
    witnesses: usize,
    mut report: Value,
) -> Result<Report, CliError> {
    if let Some(out) = &cfg.output {
        write_form(out, &result.omega_inf)?;
    }
    if let Some(trace) = &cfg.trace {
        std::fs::write(trace, result.trace.to_csv(probes, witnesses)).map_err(currentflow::Error::from)?;
    }
    let first = result.trace.records.first();
    let last = result.trace.last();
    report["termination"] = serde_json::to_value(&result.termination).expect("plain enum");
    report["iterations"] = json!(result.trace.len());
    report["initial_tv_energy"] = json!(first.map(|r| r.tv_energy));
    report["final_tv_energy"] = json!(last.map(|r| r.tv_energy));
    report["final_step_norm"] = json!(last.and_then(|r| r.step_norm));
    report["final_l2_norm"] = json!(result.omega_inf.l2_norm());
    let failure = match result.termination {
        Termination::Converged => None,
        Termination::MaxIters => Some(CliError::Solver(format!(
            "flow reached {} iterations without converging",
            result.trace.len()
        ))),
        Termination::StepFailure { iteration, gap } => Some(CliError::Solver(format!(
            "step out of iterate {iteration} stopped with gap {gap:.3e}"
        ))),
    };
    Ok(Report(report, failure))
}

/// Constant unit forms: closed, and a basis of the harmonic forms.
fn harmonic_basis(form: &DiscreteForm) -> Result<Vec<DiscreteForm>, CliError> {
    let c = form.components();
    (0..c)
        .map(|r| {
            let mut unit = vec![0.0; c];
            unit[r] = 1.0;
            DiscreteForm::constant(form.grid_arc().clone(), form.degree(), &unit).map_err(CliError::from)
        })
        .collect()
}

pub fn denoise(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let (path, omega1) = input(cfg)?;
    flow_files(cfg, &path)?;
    let flow = cfg.flow_config()?;
    let probes = harmonic_basis(&omega1)?;
    let result = prox_flow_unconstrained(&omega1, &flow, &probes)?;
    finish_flow(
        cfg,
        &result,
        probes.len(),
        0,
        json!({ "input": path.display().to_string() }),
    )
}

pub fn calibrate(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let (path, omega1) = input(cfg)?;
    flow_files(cfg, &path)?;
    let preset = calibration_preset(cfg)?.ok_or_else(|| CliError::usage("missing --calibration"))?;
    let spec = ConeSpec::new(make_calibration(&preset, omega1.grid().n())?)?;
    let flow = cfg.flow_config()?;
    let density = spec.calibration().density_vector().coeffs().to_vec();
    let witness = DiscreteForm::constant(omega1.grid_arc().clone(), spec.degree(), &density)?;
    let witnesses = if cone_residual(&spec, &witness)?.max_site_distance <= 1e-8 {
        vec![witness]
    } else {
        Vec::new()
    };
    let result = prox_flow_constrained(&omega1, &spec, &flow, &witnesses)?;
    let report = json!({
        "input": path.display().to_string(),
        "calibration": preset.to_string(),
        "cone_exact": spec.is_exact(),
        "cone_residual": cone_residual(&spec, &result.omega_inf)?.max_site_distance,
        "t_phi": transversal_pairing(spec.calibration(), &result.omega_inf)?,
    });
    finish_flow(cfg, &result, 0, witnesses.len(), report)
}

pub fn hodge(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let (path, omega) = input(cfg)?;
    let split = hodge_decompose(&omega, cfg.cg_tol.unwrap_or(DEFAULT_CG_TOL))?;
    let residuals = split.residuals(&omega);
    let mut report = json!({
        "input": path.display().to_string(),
        "residuals": residuals,
        "norms": {
            "input": omega.l2_norm(),
            "exact": split.exact.l2_norm(),
            "coexact": split.coexact.l2_norm(),
            "harmonic": split.harmonic.l2_norm(),
        },
    });
    if let Some(out) = &cfg.output {
        let parts = [
            ("exact", &split.exact),
            ("coexact", &split.coexact),
            ("harmonic", &split.harmonic),
        ];
        let paths: Vec<PathBuf> = parts.iter().map(|(name, _)| sibling(out, name)).collect();
        let mut all: Vec<&Path> = vec![path.as_path(), out.as_path()];
        all.extend(paths.iter().map(PathBuf::as_path));
        check_distinct(&all)?;
        let mut files = serde_json::Map::new();
        for ((name, form), p) in parts.iter().zip(&paths) {
            write_form(p, form)?;
            files.insert((*name).to_string(), json!(p.display().to_string()));
        }
        report["parts"] = Value::Object(files);
        let text = serde_json::to_string_pretty(&report).expect("plain values");
        std::fs::write(out, text + "\n").map_err(currentflow::Error::from)?;
    }
    Ok(Report::new(report))
}

fn norm_entry(e: &NormEstimate) -> Value {
    json!({ "value": e.value, "lower": e.lower, "upper": e.upper, "exact": e.exact })
}

pub fn norms(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let n = *ExperimentConfig::required(&cfg.n, "n")?;
    let k = *ExperimentConfig::required(&cfg.k, "k")?;
    let v = parse_kvector(ExperimentConfig::required(&cfg.vector, "vector")?, n, k)?;
    let (mass, comass) = (mass_norm(&v), comass_norm(&v));
    if cfg.json() {
        return Ok(Report::new(json!({
            "euclid": v.euclid_norm(),
            "mass": norm_entry(&mass),
            "comass": norm_entry(&comass),
        })));
    }
    let text = |e: &NormEstimate| {
        if e.exact {
            format!("{} exact", e.value)
        } else {
            format!("{} bracket [{}, {}]", e.value, e.lower, e.upper)
        }
    };
    Ok(Report::new(json!({
        "euclid": v.euclid_norm().to_string(),
        "mass": text(&mass),
        "comass": text(&comass),
    })))
}

pub fn energy(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let (path, omega) = input(cfg)?;
    let e = tv_energy(&omega)?;
    let bound = tv_energy_dual(&omega, cfg.restarts.unwrap_or(4), cfg.seed())?;
    Ok(Report::new(json!({
        "input": path.display().to_string(),
        "tv_energy": e,
        "dual_bound": bound.value,
        "gap": bound.gap,
    })))
}
