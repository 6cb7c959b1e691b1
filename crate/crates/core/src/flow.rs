//! Outer proximal loops `ω_{k+1} = argmin_{ω ∈ C} E(ω) + ‖ω − ω_k‖² / (2h)`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cone::{cone_residual, transversal_pairing, ConeSpec, FeasibleSet};
use crate::error::{Error, Result};
use crate::grid::DiscreteForm;
use crate::tvprox::{self, ConvexSet, DualField, ProxSolution, TVConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub h: f64,
    pub outer_max_iters: usize,
    /// Stop once `‖ω_{k+1} − ω_k‖ ≤ outer_tol·(1 + ‖ω_k‖)`.
    pub outer_tol: f64,
    pub tv: TVConfig,
    pub splitting_max_iters: usize,
    pub splitting_tol: f64,
    /// Constrain `∫ φ ∧ ω = 1` in the constrained flow.
    pub normalize: bool,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            h: 1.0,
            outer_max_iters: 1000,
            outer_tol: 1e-10,
            tv: TVConfig::default(),
            splitting_max_iters: 50_000,
            splitting_tol: 1e-8,
            normalize: false,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidArgument(format!("h must be positive, got {}", self.h)));
        }
        if ![self.outer_tol, self.splitting_tol]
            .iter()
            .all(|t| t.is_finite() && *t > 0.0)
        {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        self.tv.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowRecord {
    /// 1 for the initial form.
    pub iter: usize,
    pub tv_energy: f64,
    /// `‖ω_k‖`; not part of the CSV layout.
    pub l2_norm: f64,
    /// `‖ω_k − ω_{k−1}‖`; absent for the first record.
    pub step_norm: Option<f64>,
    pub pairing_eta: Vec<f64>,
    pub pairing_witness: Vec<f64>,
    pub cone_residual: Option<f64>,
    pub t_phi: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FlowTrace {
    pub records: Vec<FlowRecord>,
}

/// Shortest round-trip text, in exponent form away from unit scale.
fn num(x: f64) -> String {
    if x != 0.0 && x.is_finite() && !(1e-4..1e16).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl FlowTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&FlowRecord> {
        self.records.last()
    }

    pub fn csv_header(probes: usize, witnesses: usize) -> String {
        let mut cols = vec!["iter".to_string(), "tv_energy".into(), "step_norm".into()];
        cols.extend((0..probes).map(|i| format!("pairing_eta_{i}")));
        cols.extend((0..witnesses).map(|j| format!("pairing_witness_{j}")));
        cols.push("cone_residual".into());
        cols.push("t_phi".into());
        cols.join(",")
    }

    /// Header row plus one row per record; inapplicable cells are empty.
    pub fn to_csv(&self, probes: usize, witnesses: usize) -> String {
        let mut out = Self::csv_header(probes, witnesses);
        out.push('\n');
        for r in &self.records {
            let _ = write!(out, "{},{},{}", r.iter, num(r.tv_energy), opt(r.step_norm));
            for v in r.pairing_eta.iter().chain(&r.pairing_witness) {
                let _ = write!(out, ",{}", num(*v));
            }
            let _ = writeln!(out, ",{},{}", opt(r.cone_residual), opt(r.t_phi));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    /// The step out of `ω_iteration` stopped short of its tolerance.
    StepFailure {
        iteration: usize,
        gap: f64,
    },
}

#[derive(Clone, Debug)]
pub struct FlowResult {
    pub omega_inf: DiscreteForm,
    pub trace: FlowTrace,
    pub termination: Termination,
}

impl FlowResult {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Noise measure of the current `T_ω`: the total variation `∫|dω|`.
pub fn boundary_mass(omega: &DiscreteForm) -> Result<f64> {
    tvprox::tv_energy(omega)
}

fn check_companions(omega: &DiscreteForm, others: &[DiscreteForm], what: &str) -> Result<()> {
    for f in others {
        if f.grid() != omega.grid() || f.degree() != omega.degree() {
            return Err(Error::DimensionMismatch(format!(
                "{what} must be {}-forms on the same grid",
                omega.degree()
            )));
        }
    }
    Ok(())
}

struct Recorder<'a> {
    probes: &'a [DiscreteForm],
    witnesses: &'a [DiscreteForm],
    spec: Option<&'a ConeSpec>,
    trace: FlowTrace,
}

impl Recorder<'_> {
    fn record(&mut self, iter: usize, omega: &DiscreteForm, step_norm: Option<f64>) -> Result<()> {
        let inner = |fs: &[DiscreteForm]| fs.iter().map(|f| f.l2_inner(omega)).collect::<Result<Vec<_>>>();
        let (cone_residual, t_phi) = match self.spec {
            Some(spec) => (
                Some(cone_residual(spec, omega)?.max_site_distance),
                Some(transversal_pairing(spec.calibration(), omega)?),
            ),
            None => (None, None),
        };
        self.trace.records.push(FlowRecord {
            iter,
            tv_energy: tvprox::tv_energy(omega)?,
            l2_norm: omega.l2_norm(),
            step_norm,
            pairing_eta: inner(self.probes)?,
            pairing_witness: inner(self.witnesses)?,
            cone_residual,
            t_phi,
        });
        Ok(())
    }
}

fn run(
    omega1: DiscreteForm,
    cfg: &FlowConfig,
    mut recorder: Recorder<'_>,
    mut step: impl FnMut(&DiscreteForm, Option<&DualField>) -> Result<ProxSolution>,
) -> Result<FlowResult> {
    let mut omega = omega1;
    recorder.record(1, &omega, None)?;
    let mut warm: Option<DualField> = None;
    for k in 1..=cfg.outer_max_iters {
        let sol = match step(&omega, warm.as_ref()) {
            Ok(s) => s,
            Err(Error::ProxNotConverged { gap, .. }) => {
                return Ok(FlowResult {
                    omega_inf: omega,
                    trace: recorder.trace,
                    termination: Termination::StepFailure { iteration: k, gap },
                });
            }
            Err(e) => {
                return Err(Error::StepFailed {
                    iteration: k,
                    source: Box::new(e),
                })
            }
        };
        let step_norm = (&sol.omega - &omega).l2_norm();
        let scale = 1.0 + omega.l2_norm();
        omega = sol.omega;
        warm = Some(sol.dual);
        recorder.record(k + 1, &omega, Some(step_norm))?;
        if step_norm <= cfg.outer_tol * scale {
            return Ok(FlowResult {
                omega_inf: omega,
                trace: recorder.trace,
                termination: Termination::Converged,
            });
        }
    }
    Ok(FlowResult {
        omega_inf: omega,
        trace: recorder.trace,
        termination: Termination::MaxIters,
    })
}

/// Iterated TV prox from `omega1`, recording `(η, ω_k)` for every probe.
pub fn prox_flow_unconstrained(omega1: &DiscreteForm, cfg: &FlowConfig, probes: &[DiscreteForm]) -> Result<FlowResult> {
    cfg.validate()?;
    check_companions(omega1, probes, "probes")?;
    let recorder = Recorder {
        probes,
        witnesses: &[],
        spec: None,
        trace: FlowTrace::default(),
    };
    run(omega1.clone(), cfg, recorder, |w, warm| {
        tvprox::prox_tv_warm(w, cfg.h, &cfg.tv, warm)
    })
}

fn feasible_set<'a>(spec: &'a ConeSpec, cfg: &FlowConfig) -> Result<FeasibleSet<'a>> {
    if cfg.normalize {
        FeasibleSet::normalized(spec, 1.0)
    } else {
        Ok(FeasibleSet::cone(spec))
    }
}

fn constrained_step(
    omega_k: &DiscreteForm,
    set: &FeasibleSet<'_>,
    cfg: &FlowConfig,
    warm: Option<&DualField>,
) -> Result<ProxSolution> {
    crate::tvprox::solve(
        omega_k,
        cfg.h,
        set,
        &cfg.tv,
        cfg.splitting_max_iters,
        cfg.splitting_tol,
        warm,
    )
}

/// One step `argmin_{ω ∈ C} E(ω) + ‖ω − ω_k‖²/(2h)`, with `C` the cone, or the
/// cone cut by `∫ φ ∧ ω = 1` when `cfg.normalize` is set.
pub fn prox_step_constrained(omega_k: &DiscreteForm, spec: &ConeSpec, cfg: &FlowConfig) -> Result<ProxSolution> {
    cfg.validate()?;
    if omega_k.degree() != spec.degree() || omega_k.grid().n() != spec.calibration().n() {
        return Err(Error::DimensionMismatch(format!(
            "cone needs {}-forms in dimension {}",
            spec.degree(),
            spec.calibration().n()
        )));
    }
    let set = feasible_set(spec, cfg)?;
    constrained_step(omega_k, &set, cfg, None)
}

/// Cone-constrained flow. With `cfg.normalize` the start is first projected
/// onto the normalized slice so every recorded iterate has `T(φ) = 1`;
/// otherwise the first step absorbs any infeasibility of `omega1`.
pub fn prox_flow_constrained(
    omega1: &DiscreteForm,
    spec: &ConeSpec,
    cfg: &FlowConfig,
    witnesses: &[DiscreteForm],
) -> Result<FlowResult> {
    cfg.validate()?;
    if omega1.degree() != spec.degree() || omega1.grid().n() != spec.calibration().n() {
        return Err(Error::DimensionMismatch(format!(
            "cone needs {}-forms in dimension {}",
            spec.degree(),
            spec.calibration().n()
        )));
    }
    check_companions(omega1, witnesses, "witnesses")?;
    let set = feasible_set(spec, cfg)?;
    let mut start = omega1.clone();
    if cfg.normalize {
        set.project(&mut start);
    }
    let recorder = Recorder {
        probes: &[],
        witnesses,
        spec: Some(spec),
        trace: FlowTrace::default(),
    };
    run(start, cfg, recorder, |w, warm| constrained_step(w, &set, cfg, warm))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::cone::{project_cone_form, Calibration};
    use crate::grid::TorusGrid;

    fn circle(n: usize) -> Arc<TorusGrid> {
        Arc::new(TorusGrid::new(vec![n], vec![1.0]).unwrap())
    }

    #[test]
    fn closed_start_is_stationary() {
        let g = Arc::new(TorusGrid::cube(2, 6, 1.0).unwrap());
        let w = DiscreteForm::random(g, 0, 2).d().unwrap();
        let r = prox_flow_unconstrained(&w, &FlowConfig::default(), &[]).unwrap();
        assert!(r.converged());
        assert_eq!(r.trace.len(), 2);
        assert!((&r.omega_inf - &w).l2_norm() <= 1e-12);
    }

    #[test]
    fn circle_signal_flows_to_mean() {
        let f = DiscreteForm::random(circle(16), 0, 4);
        let mean = f.values().iter().sum::<f64>() / 16.0;
        let one = DiscreteForm::constant(circle(16), 0, &[1.0]).unwrap();
        let r = prox_flow_unconstrained(
            &f,
            &FlowConfig {
                h: 0.01,
                ..FlowConfig::default()
            },
            &[one],
        )
        .unwrap();
        assert!(r.converged());
        assert!(r.omega_inf.values().iter().all(|v| (v - mean).abs() < 1e-7));
        let first = r.trace.records[0].pairing_eta[0];
        for rec in &r.trace.records {
            assert!((rec.pairing_eta[0] - first).abs() < 1e-12);
        }
        for pair in r.trace.records.windows(2) {
            assert!(pair[1].tv_energy <= pair[0].tv_energy + 1e-8);
        }
    }

    #[test]
    fn boundary_mass_of_step() {
        let s = DiscreteForm::from_values(circle(4), 0, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!((boundary_mass(&s).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn trace_csv_layout() {
        let f = DiscreteForm::random(circle(8), 0, 1);
        let spec = ConeSpec::new(Calibration::volume(1).unwrap()).unwrap();
        let w = DiscreteForm::constant(circle(8), 0, &[1.0]).unwrap();
        let r = prox_flow_constrained(&f, &spec, &FlowConfig::default(), &[w]).unwrap();
        let csv = r.trace.to_csv(0, 1);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iter,tv_energy,step_norm,pairing_witness_0,cone_residual,t_phi"
        );
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 6);
        assert_eq!(first[0], "1");
        assert_eq!(first[2], "");
    }

    #[test]
    fn volume_cone_flow_reaches_nonnegative_mean() {
        let g = circle(16);
        let f = DiscreteForm::from_fn(g.clone(), 0, |x, _| 0.3 + (6.0 * x[0]).sin()).unwrap();
        let spec = ConeSpec::new(Calibration::volume(1).unwrap()).unwrap();
        let one = DiscreteForm::constant(g, 0, &[1.0]).unwrap();
        let r = prox_flow_constrained(&f, &spec, &FlowConfig::default(), &[one]).unwrap();
        assert!(r.converged(), "{:?}", r.termination);
        let mean = f.values().iter().sum::<f64>() / 16.0;
        assert!(r.omega_inf.values().iter().all(|v| (v - mean).abs() < 1e-6));
        for pair in r.trace.records.windows(2) {
            assert!(pair[1].pairing_witness[0] >= pair[0].pairing_witness[0] - 1e-12);
        }
    }

    #[test]
    fn kahler_constant_is_stationary() {
        let g = Arc::new(TorusGrid::cube(4, 3, 1.0).unwrap());
        let spec = ConeSpec::new(Calibration::kahler4()).unwrap();
        let phi = DiscreteForm::constant(g, 2, spec.calibration().phi().coeffs()).unwrap();
        let r = prox_flow_constrained(&phi, &spec, &FlowConfig::default(), std::slice::from_ref(&phi)).unwrap();
        assert!(r.converged());
        assert!((&r.omega_inf - &phi).l2_norm() < 1e-12);
    }

    #[test]
    fn constrained_step_is_feasible_and_normalized() {
        let g = Arc::new(TorusGrid::cube(4, 3, 1.0).unwrap());
        let spec = ConeSpec::new(Calibration::kahler4()).unwrap();
        let w = DiscreteForm::random(g, 2, 5);
        let cfg = FlowConfig {
            normalize: true,
            ..FlowConfig::default()
        };
        let s = prox_step_constrained(&w, &spec, &cfg).unwrap();
        assert!(cone_residual(&spec, &s.omega).unwrap().max_site_distance < 1e-12);
        assert!((transversal_pairing(spec.calibration(), &s.omega).unwrap() - 1.0).abs() < 1e-12);
        let p = project_cone_form(&spec, &s.omega).unwrap();
        assert!((&p - &s.omega).l2_norm() < 1e-12);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let f = DiscreteForm::random(circle(8), 0, 1);
        let bad = FlowConfig {
            h: -1.0,
            ..FlowConfig::default()
        };
        assert!(prox_flow_unconstrained(&f, &bad, &[]).is_err());
        let wrong = DiscreteForm::random(circle(4), 0, 1);
        assert!(prox_flow_unconstrained(&f, &FlowConfig::default(), &[wrong]).is_err());
    }
}
