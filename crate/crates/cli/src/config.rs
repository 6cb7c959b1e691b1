//! Experiment configuration. Keys mirror the long flag names; values given on
//! the command line win over the file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;
use currentflow::flow::FlowConfig;
use currentflow::grid::TorusGrid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GridOpts {
    /// Cells per axis, e.g. `64` or `8x8x8x8`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    /// Side lengths, e.g. `1x2`. Defaults to 1 on every axis.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lengths: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FlowOpts {
    /// Proximal step size.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_max_iters: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outer_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_max_iters: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_tol: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitting_max_iters: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitting_tol: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub json: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(flatten)]
    pub grid: GridOpts,
    #[serde(flatten)]
    pub flow: FlowOpts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cg_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vector: Option<String>,
}

pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "json",
    "trace",
    "input",
    "output",
    "grid",
    "lengths",
    "degree",
    "h",
    "outer-max-iters",
    "outer-tol",
    "inner-max-iters",
    "inner-tol",
    "splitting-max-iters",
    "splitting-tol",
    "preset",
    "calibration",
    "mean",
    "noise",
    "normalize",
    "cg-tol",
    "restarts",
    "n",
    "k",
    "vector",
];

macro_rules! fill {
    ($dst:expr, $src:expr; $($field:ident),* $(,)?) => {
        $( if $dst.$field.is_none() { $dst.$field = $src.$field.clone(); } )*
    };
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e| CliError::usage(format!("config: {e}")))?;
        if let Some(bad) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(CliError::usage(format!("config: unknown key `{bad}`")));
        }
        table.try_into().map_err(|e| CliError::usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat table of scalars")
    }

    /// Fills every unset field from `file`.
    pub fn fill_from(&mut self, file: &ExperimentConfig) {
        fill!(self, file; seed, json, trace, input, output, preset, calibration, mean, noise, normalize, cg_tol, restarts, n, k, vector);
        fill!(self.grid, file.grid; grid, lengths, degree);
        fill!(self.flow, file.flow; h, outer_max_iters, outer_tol, inner_max_iters, inner_tol, splitting_max_iters, splitting_tol);
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn json(&self) -> bool {
        self.json.unwrap_or(false)
    }

    pub fn required<'a, T>(value: &'a Option<T>, flag: &str) -> Result<&'a T, CliError> {
        value
            .as_ref()
            .ok_or_else(|| CliError::usage(format!("missing --{flag}")))
    }

    pub fn torus(&self) -> Result<Arc<TorusGrid>, CliError> {
        let dims = parse_dims(Self::required(&self.grid.grid, "grid")?)?;
        let lengths = match &self.grid.lengths {
            Some(s) => parse_lengths(s)?,
            None => vec![1.0; dims.len()],
        };
        Ok(Arc::new(TorusGrid::new(dims, lengths)?))
    }

    pub fn flow_config(&self) -> Result<FlowConfig, CliError> {
        let mut cfg = FlowConfig::default();
        let f = &self.flow;
        cfg.h = f.h.unwrap_or(cfg.h);
        cfg.outer_max_iters = f.outer_max_iters.unwrap_or(cfg.outer_max_iters);
        cfg.outer_tol = f.outer_tol.unwrap_or(cfg.outer_tol);
        cfg.tv.inner_max_iters = f.inner_max_iters.unwrap_or(cfg.tv.inner_max_iters);
        cfg.tv.inner_tol = f.inner_tol.unwrap_or(cfg.tv.inner_tol);
        cfg.splitting_max_iters = f.splitting_max_iters.unwrap_or(cfg.splitting_max_iters);
        cfg.splitting_tol = f.splitting_tol.unwrap_or(cfg.splitting_tol);
        cfg.normalize = self.normalize.unwrap_or(false);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_dims(s: &str) -> Result<Vec<usize>, CliError> {
    s.split('x')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("bad grid `{s}`")))
        })
        .collect()
}

fn parse_lengths(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(['x', ','])
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad lengths `{s}`")))
        })
        .collect()
}

/// Rejects a command whose files would overwrite one another.
pub fn check_distinct(paths: &[&Path]) -> Result<(), CliError> {
    let mut seen = BTreeSet::new();
    for p in paths {
        if !seen.insert(*p) {
            return Err(CliError::usage(format!("path {} is used twice", p.display())));
        }
    }
    Ok(())
}
