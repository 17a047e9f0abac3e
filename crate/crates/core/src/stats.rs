//! Number statistics of coherent states: Pₙ, mean, variance and Mandel Q,
//! by direct summation and from closed forms.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coherent::{construct, CoherentState};
use crate::error::{Error, Result};
use crate::models::{ModelKind, ModelSpec};
use crate::specfn::hyp0f1;

pub const POISSON_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    #[serde(rename = "sub-Poissonian")]
    SubPoissonian,
    #[serde(rename = "Poissonian")]
    Poissonian,
    #[serde(rename = "super-Poissonian")]
    SuperPoissonian,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::SubPoissonian => "sub-Poissonian",
            Classification::Poissonian => "Poissonian",
            Classification::SuperPoissonian => "super-Poissonian",
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify(q: f64, tol: f64) -> Classification {
    if q.abs() <= tol {
        Classification::Poissonian
    } else if q < 0.0 {
        Classification::SubPoissonian
    } else {
        Classification::SuperPoissonian
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatsSummary {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    pub mandel_q: f64,
    pub classification: Classification,
    pub method: Method,
}

fn finish(mean: f64, second_moment: f64, variance: f64, mandel_q: f64, method: Method) -> StatsSummary {
    StatsSummary { mean, second_moment, variance, mandel_q, classification: classify(mandel_q, POISSON_TOL), method }
}

/// Pₙ = |cₙ|² over the state's truncated basis.
pub fn distribution(state: &CoherentState) -> Vec<f64> {
    state.probabilities()
}

/// Moments summed from the state's coefficients. The vacuum has Q = 0.
pub fn summary_series(state: &CoherentState) -> StatsSummary {
    let p = distribution(state);
    let mean: f64 = p.iter().enumerate().map(|(n, pn)| n as f64 * pn).sum();
    let second: f64 = p.iter().enumerate().map(|(n, pn)| (n * n) as f64 * pn).sum();
    let variance: f64 = p.iter().enumerate().map(|(n, pn)| (n as f64 - mean).powi(2) * pn).sum();
    let q = if mean > 0.0 { variance / mean - 1.0 } else { 0.0 };
    finish(mean, second, variance, q, Method::Series)
}

/// ⟨n⟩ from the closed forms, as a function of x = |z|².
pub fn mean_closed(spec: &ModelSpec, x: f64) -> Result<f64> {
    Ok(closed_moments(spec, x)?.mean)
}

/// Closed-form moments for a model and x = |z|².
///
/// Oscillators, with b = 2+1/λ′, u = x/λ′ and F(c) = ₀F₁(c; u):
///   ⟨n⟩   = x/(1+2λ′) · F(b+1)/F(b)
///   (Δn)² = ⟨n⟩[1−⟨n⟩] + x²F(b+2)/((1+2λ′)(1+3λ′)F(b))
///   Q     = x F(b+2)/((1+3λ′)F(b+1)) − x F(b+1)/((1+2λ′)F(b))
/// Exp-mass: ⟨n⟩ = (Δn)² = x/μ², Q = 0. Harmonic: ⟨n⟩ = (Δn)² = x.
pub fn closed_moments(spec: &ModelSpec, x: f64) -> Result<StatsSummary> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("|z|² must be >= 0, got {x}")));
    }
    if spec.perturbation().is_some() {
        return Err(Error::Unsupported("no closed-form statistics for a perturbed step sequence".into()));
    }
    let poisson = |m: f64| finish(m, m + m * m, m, 0.0, Method::ClosedForm);
    match spec.kind() {
        ModelKind::ExpMass => Ok(poisson(x / spec.ladder_scale())),
        ModelKind::Harmonic => Ok(poisson(x)),
        ModelKind::NonlinearOsc | ModelKind::BoundedOsc => {
            if x == 0.0 {
                return Ok(finish(0.0, 0.0, 0.0, 0.0, Method::ClosedForm));
            }
            let lp = spec.nonlinearity();
            let b = 2.0 + 1.0 / lp;
            let u = x / lp;
            let tol = 1e-15;
            let f0 = hyp0f1(b, u, tol)?.value;
            let f1 = hyp0f1(b + 1.0, u, tol)?.value;
            let f2 = hyp0f1(b + 2.0, u, tol)?.value;
            let a2 = 1.0 + 2.0 * lp;
            let a3 = 1.0 + 3.0 * lp;
            let mean = x / a2 * (f1 - f0).exp();
            let cross = x * x / (a2 * a3) * (f2 - f0).exp();
            let variance = mean * (1.0 - mean) + cross;
            let q = x / a3 * (f2 - f1).exp() - x / a2 * (f1 - f0).exp();
            Ok(finish(mean, mean + cross, variance, q, Method::ClosedForm))
        }
    }
}

pub fn summary_closed(state: &CoherentState) -> Result<StatsSummary> {
    closed_moments(state.spec(), state.z().norm_sqr())
}

/// |z|² at which the model's mean equals `target`, by bisection on the
/// closed-form mean (increasing in |z|²).
pub fn match_mean(spec: &ModelSpec, target: f64) -> Result<f64> {
    if !(target >= 0.0) || !target.is_finite() {
        return Err(Error::Parameter(format!("target mean must be >= 0, got {target}")));
    }
    if target == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = target.max(1.0);
    while mean_closed(spec, hi)? < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Convergence { terms: 0 });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_closed(spec, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub const FIG1_LAMBDAS: [f64; 3] = [0.07, 0.17, 0.27];
pub const FIG1_HARMONIC_X: f64 = 10.0;

/// One curve of the weighting-distribution comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig1Panel {
    /// "harmonic" or "nonlinear".
    pub panel: &'static str,
    /// 0 for the harmonic reference.
    pub lambda_prime: f64,
    pub z_abs_sq: f64,
    pub distribution: Vec<f64>,
    pub summary: StatsSummary,
}

impl Fig1Panel {
    pub fn peak(&self) -> f64 {
        self.distribution.iter().copied().fold(0.0, f64::max)
    }
}

/// Pₙ for the harmonic reference at |z|² = `harmonic_x` and for each
/// nonlinear oscillator with |z| tuned to the same mean.
pub fn fig1(lambda_primes: &[f64], harmonic_x: f64, eps: f64) -> Result<Vec<Fig1Panel>> {
    let reference = ModelSpec::harmonic(1.0)?;
    let target = mean_closed(&reference, harmonic_x)?;
    let mut specs = vec![(reference, "harmonic", 0.0)];
    for &lp in lambda_primes {
        specs.push((ModelSpec::nonlinear_osc(1.0, lp)?, "nonlinear", lp));
    }
    specs
        .par_iter()
        .map(|&(spec, panel, lambda_prime)| {
            let x = if spec.kind() == ModelKind::Harmonic { harmonic_x } else { match_mean(&spec, target)? };
            let state = construct(&spec, num_complex::Complex64::new(x.sqrt(), 0.0), eps)?;
            Ok(Fig1Panel {
                panel,
                lambda_prime,
                z_abs_sq: x,
                distribution: distribution(&state),
                summary: summary_series(&state),
            })
        })
        .collect()
}
