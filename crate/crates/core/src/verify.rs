//! Verification suite over a set of models: spectra against the
//! finite-difference oracle, ladder algebra, coherent-state eigen-equation,
//! normalization, overlap, moments, radius and statistics.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherent::{
    annihilation_residual, construct, normalization_closed_log, normalization_series_log, overlap_coefficients,
    overlap_kernel, NORMALIZATION_TOL, OVERLAP_TOL,
};
use crate::error::{Error, Result};
use crate::fockrep::{build, check_algebra};
use crate::measure::{radius, verify_moments, Radius};
use crate::models::{ModelKind, ModelSpec};
use crate::oracle::{convergence, DEFAULT_PAD, DEFAULT_POINTS, SPECTRUM_TOL};
use crate::stats::{summary_closed, summary_series, Classification};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Spectrum,
    Algebra,
    Annihilation,
    Normalization,
    Overlap,
    Moments,
    Radius,
    Statistics,
}

impl CheckKind {
    pub const ALL: [CheckKind; 8] = [
        CheckKind::Spectrum,
        CheckKind::Algebra,
        CheckKind::Annihilation,
        CheckKind::Normalization,
        CheckKind::Overlap,
        CheckKind::Moments,
        CheckKind::Radius,
        CheckKind::Statistics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::Spectrum => "spectrum",
            CheckKind::Algebra => "algebra",
            CheckKind::Annihilation => "annihilation",
            CheckKind::Normalization => "normalization",
            CheckKind::Overlap => "overlap",
            CheckKind::Moments => "moments",
            CheckKind::Radius => "radius",
            CheckKind::Statistics => "statistics",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown check '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check_name: String,
    pub status: Status,
    /// Worst relative (or absolute, where noted in `details`) deviation;
    /// null when the check could not be evaluated.
    pub max_rel_error: Option<f64>,
    pub details: String,
}

impl CheckRecord {
    fn new(kind: CheckKind, spec: &ModelSpec, suffix: &str, pass: bool, err: f64, details: String) -> Self {
        CheckRecord {
            check_name: format!("{kind}:{spec}{suffix}"),
            status: if pass { Status::Pass } else { Status::Fail },
            max_rel_error: Some(err),
            details,
        }
    }

    fn failed(kind: CheckKind, spec: &ModelSpec, suffix: &str, e: &Error) -> Self {
        CheckRecord {
            check_name: format!("{kind}:{spec}{suffix}"),
            status: Status::Fail,
            max_rel_error: None,
            details: e.to_string(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub models: Vec<ModelSpec>,
    /// Checks to run; all when empty.
    pub only: Vec<CheckKind>,
    /// Highest moment order checked.
    pub n_max: usize,
    pub eps: f64,
    pub points: usize,
    pub pad: f64,
}

pub fn default_models() -> Vec<ModelSpec> {
    vec![
        ModelSpec::nonlinear_osc(1.0, 0.17).expect("valid"),
        ModelSpec::bounded_osc(1.0, 0.17).expect("valid"),
        ModelSpec::exp_mass(1.0, 2.0).expect("valid"),
    ]
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            models: default_models(),
            only: Vec::new(),
            n_max: 8,
            eps: 1e-12,
            points: DEFAULT_POINTS,
            pad: DEFAULT_PAD,
        }
    }
}

const Z_ABS: [f64; 3] = [0.5, 1.5, 3.0];
const ALGEBRA_DIM: usize = 40;
const ALGEBRA_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-10;
const STATS_TOL: f64 = 1e-7;
const CONVERGENCE_RATIO: f64 = 3.5;

/// Run the selected checks on every model. Records come out grouped by
/// model, then by check, in a fixed order.
pub fn run(config: &VerifyConfig) -> Result<Vec<CheckRecord>> {
    if config.n_max > crate::measure::MAX_MOMENT {
        return Err(Error::Parameter(format!(
            "n_max must be <= {}, got {}",
            crate::measure::MAX_MOMENT,
            config.n_max
        )));
    }
    if !(config.eps > 0.0 && config.eps < 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1), got {}", config.eps)));
    }
    let checks: Vec<CheckKind> = if config.only.is_empty() {
        CheckKind::ALL.to_vec()
    } else {
        CheckKind::ALL.into_iter().filter(|c| config.only.contains(c)).collect()
    };
    let jobs: Vec<(ModelSpec, CheckKind)> =
        config.models.iter().flat_map(|m| checks.iter().map(move |c| (*m, *c))).collect();
    Ok(jobs.par_iter().map(|(spec, check)| run_check(config, spec, *check)).collect::<Vec<_>>().concat())
}

pub fn all_passed(records: &[CheckRecord]) -> bool {
    records.iter().all(CheckRecord::passed)
}

fn run_check(config: &VerifyConfig, spec: &ModelSpec, check: CheckKind) -> Vec<CheckRecord> {
    let one = |r: Result<CheckRecord>| vec![r.unwrap_or_else(|e| CheckRecord::failed(check, spec, "", &e))];
    match check {
        CheckKind::Spectrum => one(spectrum(config, spec)),
        CheckKind::Algebra => one(algebra(spec)),
        CheckKind::Annihilation => one(annihilation(config, spec)),
        CheckKind::Normalization => one(normalization(spec)),
        CheckKind::Overlap => one(overlap_check(config, spec)),
        CheckKind::Moments => moments(config, spec),
        CheckKind::Radius => one(Ok(radius_check(spec))),
        CheckKind::Statistics => one(statistics(config, spec)),
    }
}

fn spectrum(config: &VerifyConfig, spec: &ModelSpec) -> Result<CheckRecord> {
    let levels = convergence(spec, 4, config.points, config.pad)?;
    let worst = levels.iter().map(|l| l.coarse_error).fold(0.0, f64::max);
    let min_ratio = levels.iter().map(|l| l.ratio).fold(f64::INFINITY, f64::min);
    let pass = worst < SPECTRUM_TOL && min_ratio >= CONVERGENCE_RATIO;
    let details = format!(
        "levels 0..3 at M={}, pad={}; worst error {worst:.3e}; min error ratio under M doubling {min_ratio:.3}",
        config.points, config.pad
    );
    Ok(CheckRecord::new(CheckKind::Spectrum, spec, "", pass, worst, details))
}

fn algebra(spec: &ModelSpec) -> Result<CheckRecord> {
    let r = check_algebra(&build(spec, ALGEBRA_DIM)?);
    let details = format!(
        "dim {ALGEBRA_DIM}; commutator {:.3e}, intertwining {:.3e}, orthonormality {:.3e}",
        r.commutator, r.intertwining, r.orthonormality
    );
    Ok(CheckRecord::new(CheckKind::Algebra, spec, "", r.max() < ALGEBRA_TOL, r.max(), details))
}

fn annihilation(config: &VerifyConfig, spec: &ModelSpec) -> Result<CheckRecord> {
    let mut worst = 0.0_f64;
    for r in Z_ABS {
        let state = construct(spec, Complex64::new(r, 0.0), config.eps)?;
        let ops = build(spec, state.dim().max(2))?;
        worst = worst.max(annihilation_residual(&state, &ops)?);
    }
    let details = format!("absolute residual ‖L₋|z⟩ − z|z⟩‖ for |z| in {Z_ABS:?}, eps = {:e}", config.eps);
    Ok(CheckRecord::new(CheckKind::Annihilation, spec, "", worst < RESIDUAL_TOL, worst, details))
}

fn normalization(spec: &ModelSpec) -> Result<CheckRecord> {
    let mut worst = 0.0_f64;
    for i in 0..=20 {
        let x = (0.25 * i as f64).powi(2);
        let d = (normalization_closed_log(spec, x)? - normalization_series_log(spec, x)?).abs();
        worst = worst.max(d);
    }
    let details = "|ln N_series − ln N_closed| for |z| = 0, 0.25, …, 5".to_string();
    Ok(CheckRecord::new(CheckKind::Normalization, spec, "", worst < NORMALIZATION_TOL, worst, details))
}

fn overlap_check(config: &VerifyConfig, spec: &ModelSpec) -> Result<CheckRecord> {
    let labels = [
        Complex64::new(0.0, 0.0),
        Complex64::new(0.7, -0.4),
        Complex64::new(-1.2, 0.9),
        Complex64::new(2.1, 1.3),
    ];
    let states = labels.iter().map(|&z| construct(spec, z, config.eps)).collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0_f64;
    let mut bounded = true;
    for a in &states {
        for b in &states {
            let direct = overlap_coefficients(a, b)?;
            worst = worst.max((direct - overlap_kernel(a, b)?).norm());
            bounded &= direct.norm() <= 1.0 + 1e-12;
        }
    }
    let details = format!("absolute difference of coefficient and kernel overlaps over {} pairs", states.len().pow(2));
    Ok(CheckRecord::new(CheckKind::Overlap, spec, "", bounded && worst < OVERLAP_TOL, worst, details))
}

fn moments(config: &VerifyConfig, spec: &ModelSpec) -> Vec<CheckRecord> {
    let note = match spec.kind() {
        ModelKind::NonlinearOsc | ModelKind::BoundedOsc => {
            "; weight normalized by λ′Γ(2+1/λ′) (the Γ(2−1/λ′) variant gives a zeroth moment ≠ 1)"
        }
        _ => "",
    };
    match verify_moments(spec, config.n_max) {
        Ok(rows) => rows
            .into_iter()
            .map(|r| {
                let mut details = format!(
                    "quadrature {:.14e} (±{:.2e}) vs ρₙ {:.14e}{note}",
                    r.quadrature, r.quad_error_estimate, r.analytic_rho
                );
                if let Some(f) = &r.failure {
                    details.push_str("; ");
                    details.push_str(f);
                }
                let err = if r.rel_error.is_finite() { Some(r.rel_error) } else { None };
                CheckRecord {
                    check_name: format!("{}:{spec}:n={}", CheckKind::Moments, r.n),
                    status: if r.pass { Status::Pass } else { Status::Fail },
                    max_rel_error: err,
                    details,
                }
            })
            .collect(),
        Err(e) => vec![CheckRecord::failed(CheckKind::Moments, spec, "", &e)],
    }
}

fn radius_check(spec: &ModelSpec) -> CheckRecord {
    match radius(spec) {
        Radius::Infinite { diagnostic } => CheckRecord::new(
            CheckKind::Radius,
            spec,
            "",
            true,
            0.0,
            format!("infinite; ρₙ/ρₙ₋₁ at n=1000 is {diagnostic:.6e}"),
        ),
        Radius::Finite { value, diagnostic } => CheckRecord::new(
            CheckKind::Radius,
            spec,
            "",
            false,
            0.0,
            format!("finite radius {value:.6e}; ρₙ/ρₙ₋₁ at n=1000 is {diagnostic:.6e}"),
        ),
    }
}

fn statistics(config: &VerifyConfig, spec: &ModelSpec) -> Result<CheckRecord> {
    let mut worst = 0.0_f64;
    let mut sign_ok = true;
    for r in [0.5, 1.0, 2.0, 4.0] {
        let state = construct(spec, Complex64::new(r, 0.0), config.eps)?;
        let series = summary_series(&state);
        let closed = summary_closed(&state)?;
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        worst = worst.max(rel(series.mean, closed.mean)).max(rel(series.variance, closed.variance));
        let expected = match spec.kind() {
            ModelKind::NonlinearOsc | ModelKind::BoundedOsc => Classification::SubPoissonian,
            ModelKind::ExpMass | ModelKind::Harmonic => Classification::Poissonian,
        };
        sign_ok &= series.classification == expected;
    }
    let details = "series vs closed-form mean and variance for |z| in [0.5, 1, 2, 4]; Q sign as expected".to_string();
    Ok(CheckRecord::new(CheckKind::Statistics, spec, "", sign_ok && worst < STATS_TOL, worst, details))
}
