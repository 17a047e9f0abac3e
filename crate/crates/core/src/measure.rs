//! Resolution of unity: the weight w̃(ξ) whose moments are ρₙ, quadrature
//! checks of those moments, and the radius of convergence of N.

use rayon::prelude::*;
use serde::Serialize;

use crate::coherent::normalization_closed_log;
use crate::error::{Error, Result};
use crate::models::{ModelKind, ModelSpec};
use crate::specfn::{hyp0f1, integrate_halfline, ln_bessel_k, log_gamma};

/// Moments above this order are too ill-conditioned for the quadrature.
pub const MAX_MOMENT: usize = 12;
pub const MOMENT_TOL: f64 = 1e-6;
const QUAD_TOL: f64 = 1e-11;

/// ln(2 u^{ν/2} K_ν(2√u)), the Meijer G²⁰₀₂(u | 0, ν) kernel.
fn ln_g_kernel(nu: f64, u: f64) -> Result<f64> {
    Ok(std::f64::consts::LN_2 + 0.5 * nu * u.ln() + ln_bessel_k(nu, 2.0 * u.sqrt())?)
}

/// ln w̃(ξ) with w̃ = w/N the measure density in ξ = |z|².
///
/// Oscillators: w̃ = [λ′Γ(2+1/λ′)]⁻¹ · 2(ξ/λ′)^{ν/2} K_ν(2√(ξ/λ′)), ν = 1+1/λ′.
/// The bounded oscillator shares ρₙ with the nonlinear one at λ′ = υ²/2 and
/// uses the same weight. Exp-mass: μ⁻²e^{−ξ/μ²}; harmonic: e^{−ξ}.
pub fn ln_weight_tilde(spec: &ModelSpec, xi: f64) -> Result<f64> {
    if !(xi > 0.0) || !xi.is_finite() {
        return Err(Error::Domain(format!("weight needs ξ > 0, got {xi}")));
    }
    match spec.kind() {
        ModelKind::NonlinearOsc | ModelKind::BoundedOsc => {
            let lp = spec.nonlinearity();
            let nu = 1.0 + 1.0 / lp;
            Ok(ln_g_kernel(nu, xi / lp)? - lp.ln() - log_gamma(2.0 + 1.0 / lp)?)
        }
        ModelKind::ExpMass => {
            let s = spec.ladder_scale();
            Ok(-s.ln() - xi / s)
        }
        ModelKind::Harmonic => Ok(-xi),
    }
}

pub fn weight_tilde(spec: &ModelSpec, xi: f64) -> Result<f64> {
    Ok(ln_weight_tilde(spec, xi)?.exp())
}

/// w(ξ) = w̃(ξ)·N(ξ).
pub fn weight(spec: &ModelSpec, xi: f64) -> Result<f64> {
    Ok((ln_weight_tilde(spec, xi)? + normalization_closed_log(spec, xi)?).exp())
}

/// w(ξ) for the oscillators assembled as ₀F₁(2+1/λ′; ξ/λ′)/(λ′Γ(2+1/λ′))
/// times the G kernel, without going through w̃.
pub fn weight_factored(spec: &ModelSpec, xi: f64) -> Result<f64> {
    match spec.kind() {
        ModelKind::NonlinearOsc | ModelKind::BoundedOsc => {
            if !(xi > 0.0) || !xi.is_finite() {
                return Err(Error::Domain(format!("weight needs ξ > 0, got {xi}")));
            }
            let lp = spec.nonlinearity();
            let b = 2.0 + 1.0 / lp;
            let u = xi / lp;
            let f = hyp0f1(b, u, 1e-15)?;
            let prefactor = f.value - lp.ln() - log_gamma(b)?;
            Ok(f.sign * (prefactor + ln_g_kernel(b - 1.0, u)?).exp())
        }
        kind => Err(Error::Unsupported(format!("factored weight is only defined for the oscillators, not {kind}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub n: usize,
    pub quadrature: f64,
    pub analytic_rho: f64,
    pub rel_error: f64,
    pub quad_error_estimate: f64,
    pub pass: bool,
    /// Set when the quadrature did not reach its tolerance; `quadrature`
    /// then holds the best estimate.
    pub failure: Option<String>,
}

/// ∫₀^∞ ξⁿ w̃(ξ) dξ against ρₙ for n = 0 … n_max.
pub fn verify_moments(spec: &ModelSpec, n_max: usize) -> Result<Vec<MomentReport>> {
    if n_max > MAX_MOMENT {
        return Err(Error::Parameter(format!("n_max must be <= {MAX_MOMENT}, got {n_max}")));
    }
    // Surface domain problems of the weight itself before fanning out.
    ln_weight_tilde(spec, 1.0)?;
    Ok((0..=n_max).into_par_iter().map(|n| moment_report(spec, n)).collect())
}

fn moment_report(spec: &ModelSpec, n: usize) -> MomentReport {
    let analytic_rho = spec.rho_log(n).exp();
    let integrand = |xi: f64| match ln_weight_tilde(spec, xi) {
        Ok(lw) => (n as f64 * xi.ln() + lw).exp(),
        Err(_) => f64::NAN,
    };
    let (quadrature, quad_error_estimate, failure) = match integrate_halfline(integrand, QUAD_TOL) {
        Ok(q) => (q.value, q.error, None),
        Err(Error::Quadrature { estimate, error_bound }) => {
            (estimate, error_bound, Some("quadrature did not reach tolerance".to_string()))
        }
        Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
    };
    let rel_error = (quadrature - analytic_rho).abs() / analytic_rho;
    MomentReport {
        n,
        quadrature,
        analytic_rho,
        rel_error,
        quad_error_estimate,
        pass: failure.is_none() && rel_error < MOMENT_TOL,
        failure,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Radius {
    /// `diagnostic` is the ratio ρ₁₀₀₀/ρ₉₉₉.
    Infinite { diagnostic: f64 },
    Finite { value: f64, diagnostic: f64 },
}

impl Radius {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Radius::Infinite { .. })
    }
}

const DIAGNOSTIC_N: usize = 1000;
// A ratio sequence rₙ growing like n^p has r₂ₙ/rₙ → 2^p; a convergent one
// tends to 1. p ≥ 0.25 is treated as divergence.
const GROWTH_THRESHOLD: f64 = 1.189;

/// lim ρₙ^{1/n} from the monotone ratio sequence rₙ = ρₙ/ρₙ₋₁.
///
/// For a monotone ratio sequence the root and ratio limits coincide, so the
/// series Σ xⁿ/ρₙ converges for x below lim rₙ.
pub fn radius_from_ratios<F: Fn(usize) -> f64>(ratio: F) -> Radius {
    let diagnostic = ratio(DIAGNOSTIC_N);
    let growth = ratio(2 * DIAGNOSTIC_N) / diagnostic;
    if !diagnostic.is_finite() || growth >= GROWTH_THRESHOLD {
        Radius::Infinite { diagnostic }
    } else {
        // Richardson-style estimate of the limit assuming O(1/n) approach.
        let value = 2.0 * ratio(2 * DIAGNOSTIC_N) - diagnostic;
        Radius::Finite { value: value.max(diagnostic), diagnostic }
    }
}

pub fn radius(spec: &ModelSpec) -> Radius {
    radius_from_ratios(|n| spec.ladder_sq(n))
}
