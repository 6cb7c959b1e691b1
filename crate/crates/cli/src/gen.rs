//! Test inputs with known structure.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use currentflow::cone::{make_calibration, sample_calibrated, ConeSpec, Preset};
use currentflow::grid::{DiscreteForm, TorusGrid};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenPreset {
    NoisyClosed,
    Step,
    HarmonicPlusCoexact,
    CalibratedRandom,
}

impl FromStr for GenPreset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "noisy-closed" => Ok(Self::NoisyClosed),
            "step" => Ok(Self::Step),
            "harmonic-plus-coexact" => Ok(Self::HarmonicPlusCoexact),
            "calibrated-random" => Ok(Self::CalibratedRandom),
            _ => Err(CliError::usage(format!(
                "unknown preset `{s}` (noisy-closed, step, harmonic-plus-coexact, calibrated-random)"
            ))),
        }
    }
}

impl fmt::Display for GenPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::NoisyClosed => "noisy-closed",
            Self::Step => "step",
            Self::HarmonicPlusCoexact => "harmonic-plus-coexact",
            Self::CalibratedRandom => "calibrated-random",
        })
    }
}

pub struct GenRequest {
    pub preset: GenPreset,
    pub grid: Arc<TorusGrid>,
    pub degree: Option<usize>,
    pub calibration: Option<Preset>,
    pub mean: f64,
    pub noise: f64,
    pub seed: u64,
}

/// The generated form and its named summands, if any.
pub struct Generated {
    pub form: DiscreteForm,
    pub parts: Vec<(&'static str, DiscreteForm)>,
}

pub fn generate(req: &GenRequest) -> Result<Generated, CliError> {
    let n = req.grid.n();
    if req.preset == GenPreset::CalibratedRandom {
        let preset = req
            .calibration
            .as_ref()
            .ok_or_else(|| CliError::usage("calibrated-random needs --calibration"))?;
        let spec = ConeSpec::new(make_calibration(preset, n)?)?;
        if let Some(p) = req.degree.filter(|&p| p != spec.degree()) {
            return Err(CliError::usage(format!(
                "calibration {preset} produces {}-forms, not {p}-forms",
                spec.degree()
            )));
        }
        let form = sample_calibrated(&spec, req.grid.clone(), req.seed)?;
        return Ok(Generated {
            form,
            parts: Vec::new(),
        });
    }
    let p = req.degree.unwrap_or(0);
    if p >= n {
        return Err(CliError::usage(format!("preset {} needs degree below {n}", req.preset)));
    }
    match req.preset {
        GenPreset::Step => Ok(Generated {
            form: step(&req.grid, p)?,
            parts: Vec::new(),
        }),
        GenPreset::HarmonicPlusCoexact => {
            let harmonic = constant(&req.grid, p, req.mean)?;
            let coexact = noise(&req.grid, p, req.noise, req.seed)?;
            Ok(Generated {
                form: &harmonic + &coexact,
                parts: vec![("harmonic", harmonic), ("coexact", coexact)],
            })
        }
        GenPreset::NoisyClosed => {
            let mut closed = constant(&req.grid, p, req.mean)?;
            if p > 0 {
                closed.axpy(1.0, &smooth(&req.grid, p - 1)?.d()?);
            }
            let noise = noise(&req.grid, p, req.noise, req.seed)?;
            Ok(Generated {
                form: &closed + &noise,
                parts: vec![("closed", closed), ("noise", noise)],
            })
        }
        GenPreset::CalibratedRandom => unreachable!(),
    }
}

fn constant(grid: &Arc<TorusGrid>, p: usize, value: f64) -> Result<DiscreteForm, CliError> {
    Ok(DiscreteForm::constant(
        grid.clone(),
        p,
        &vec![value; grid.components(p)],
    )?)
}

/// Unit jump across the middle of axis `p` in the first component.
fn step(grid: &Arc<TorusGrid>, p: usize) -> Result<DiscreteForm, CliError> {
    let half = grid.lengths()[p] / 2.0;
    Ok(DiscreteForm::from_fn(grid.clone(), p, |x, r| {
        if r == 0 && x[p] < half {
            1.0
        } else {
            0.0
        }
    })?)
}

/// One Fourier mode per component; its derivative is the exact part.
fn smooth(grid: &Arc<TorusGrid>, p: usize) -> Result<DiscreteForm, CliError> {
    let n = grid.n();
    let lengths = grid.lengths().to_vec();
    Ok(DiscreteForm::from_fn(grid.clone(), p, |x, r| {
        let axis = (r + 1) % n;
        (2.0 * PI * x[axis] / lengths[axis]).sin() / (r + 1) as f64
    })?)
}

/// `δβ` for Gaussian `β`, scaled to peak amplitude `amp`.
fn noise(grid: &Arc<TorusGrid>, p: usize, amp: f64, seed: u64) -> Result<DiscreteForm, CliError> {
    let raw = DiscreteForm::random(grid.clone(), p + 1, seed).delta()?;
    let peak = raw.max_abs();
    Ok(if peak > 0.0 { raw.scale(amp / peak) } else { raw })
}
