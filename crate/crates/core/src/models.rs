//! Built-in shape-invariant PDEM models and their spectral sequences.
//!
//! Each model supplies the remainder sequence R(αₖ), the spectrum
//! Eₙ = Σₖ R(αₖ) + E₀, the dimensionless ladder steps eₙ = (Eₙ − E₀)/unit and
//! the generalized factorial ρₙ = Πₖ (ladder_scale · eₖ).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfn::{log_gamma, pochhammer_log};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Nonlinear oscillator, m(x) = (1 + λx²)⁻¹ with λ < 0.
    NonlinearOsc,
    /// Harmonic potential with bounded mass profile m(x) = (1 − (λx)²)⁻¹.
    BoundedOsc,
    /// Exponential mass m(x) = e^{−μx}/2.
    ExpMass,
    /// Constant-mass harmonic oscillator; the λ′ → 0 reference.
    Harmonic,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] =
        [ModelKind::NonlinearOsc, ModelKind::BoundedOsc, ModelKind::ExpMass, ModelKind::Harmonic];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::NonlinearOsc => "nonlinear-osc",
            ModelKind::BoundedOsc => "bounded-osc",
            ModelKind::ExpMass => "exp-mass",
            ModelKind::Harmonic => "harmonic",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown model '{s}'")))
    }
}

/// Raw, possibly redundant model parameters as a user supplies them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModelParams {
    pub alpha: Option<f64>,
    /// λ′ directly (nonlinear-osc) or υ²/2 (bounded-osc).
    pub lambda_prime: Option<f64>,
    /// Signed dimensionless nonlinearity λ̃ = λ/α of the nonlinear oscillator.
    pub lambda_tilde: Option<f64>,
    pub upsilon: Option<f64>,
    pub mu: Option<f64>,
}

/// Multiplies one ladder step by a factor. Only used to build negative
/// controls for the verification suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPerturbation {
    pub level: usize,
    pub factor: f64,
}

/// A validated built-in model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    kind: ModelKind,
    alpha: f64,
    nonlinearity: f64,
    mu: f64,
    perturbation: Option<StepPerturbation>,
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Parameter(format!("{name} must be positive and finite, got {value}")))
    }
}

/// Build and validate a model from user parameters.
///
/// Missing `alpha` defaults to 1, except for exp-mass where it defaults to 2
/// (its potential only confines for α > 1).
pub fn make_model(kind: ModelKind, params: &ModelParams) -> Result<ModelSpec> {
    let default_alpha = if kind == ModelKind::ExpMass { 2.0 } else { 1.0 };
    let alpha = positive("alpha", params.alpha.unwrap_or(default_alpha))?;
    match kind {
        ModelKind::NonlinearOsc => {
            let lambda_prime = match (params.lambda_prime, params.lambda_tilde) {
                (Some(_), Some(_)) => {
                    return Err(Error::Parameter(
                        "give either lambda_prime or lambda_tilde, not both".into(),
                    ))
                }
                (Some(lp), None) => positive("lambda_prime", lp)?,
                (None, Some(lt)) if lt > 0.0 => {
                    return Err(Error::Parameter(format!(
                        "lambda_tilde = {lt} > 0: finite spectrum regime out of scope"
                    )))
                }
                (None, Some(lt)) => positive("|lambda_tilde|", -lt)? / 2.0,
                (None, None) => return Err(Error::Parameter("nonlinear-osc needs lambda_prime".into())),
            };
            Ok(ModelSpec::new(kind, alpha, lambda_prime, 0.0))
        }
        ModelKind::BoundedOsc => {
            let lambda_prime = match (params.lambda_prime, params.upsilon) {
                (Some(_), Some(_)) => {
                    return Err(Error::Parameter("give either lambda_prime or upsilon, not both".into()))
                }
                (Some(lp), None) => positive("lambda_prime", lp)?,
                (None, Some(u)) => {
                    let u = positive("|upsilon|", u.abs())?;
                    u * u / 2.0
                }
                (None, None) => return Err(Error::Parameter("bounded-osc needs lambda_prime or upsilon".into())),
            };
            Ok(ModelSpec::new(kind, alpha, lambda_prime, 0.0))
        }
        ModelKind::ExpMass => {
            let mu = positive("mu", params.mu.unwrap_or(1.0))?;
            Ok(ModelSpec::new(kind, alpha, 0.0, mu))
        }
        ModelKind::Harmonic => Ok(ModelSpec::new(kind, alpha, 0.0, 0.0)),
    }
}

impl ModelSpec {
    fn new(kind: ModelKind, alpha: f64, nonlinearity: f64, mu: f64) -> Self {
        ModelSpec { kind, alpha, nonlinearity, mu, perturbation: None }
    }

    pub fn nonlinear_osc(alpha: f64, lambda_prime: f64) -> Result<Self> {
        make_model(
            ModelKind::NonlinearOsc,
            &ModelParams { alpha: Some(alpha), lambda_prime: Some(lambda_prime), ..Default::default() },
        )
    }

    /// Bounded-mass oscillator parametrized by υ²/2.
    pub fn bounded_osc(alpha: f64, half_upsilon_sq: f64) -> Result<Self> {
        make_model(
            ModelKind::BoundedOsc,
            &ModelParams { alpha: Some(alpha), lambda_prime: Some(half_upsilon_sq), ..Default::default() },
        )
    }

    pub fn exp_mass(mu: f64, alpha: f64) -> Result<Self> {
        make_model(ModelKind::ExpMass, &ModelParams { alpha: Some(alpha), mu: Some(mu), ..Default::default() })
    }

    pub fn harmonic(alpha: f64) -> Result<Self> {
        make_model(ModelKind::Harmonic, &ModelParams { alpha: Some(alpha), ..Default::default() })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// λ′ for nonlinear-osc, υ²/2 for bounded-osc, 0 otherwise.
    pub fn nonlinearity(&self) -> f64 {
        self.nonlinearity
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Unit in which the remainders are expressed: α, or μ² for exp-mass.
    pub fn energy_unit(&self) -> f64 {
        match self.kind {
            ModelKind::ExpMass => self.mu * self.mu,
            _ => self.alpha,
        }
    }

    /// Factor between a dimensionless step eₙ and the squared ladder
    /// coefficient. The oscillator ladders carry α scaled out, the
    /// exp-mass ladder carries μ (L₋|φₙ⟩ = μ√n|φₙ₋₁⟩).
    pub fn ladder_scale(&self) -> f64 {
        match self.kind {
            ModelKind::ExpMass => self.mu * self.mu,
            _ => 1.0,
        }
    }

    pub fn perturbation(&self) -> Option<StepPerturbation> {
        self.perturbation
    }

    /// Copy of this model whose ladder step at `level` is multiplied by
    /// `factor`, leaving every closed form untouched. Verification checks
    /// must fail on such a model.
    #[doc(hidden)]
    pub fn with_corrupted_step(mut self, level: usize, factor: f64) -> Self {
        self.perturbation = Some(StepPerturbation { level, factor });
        self
    }

    /// Eₙ in absolute energy units.
    pub fn energy(&self, n: usize) -> f64 {
        let nf = n as f64;
        match self.kind {
            ModelKind::NonlinearOsc | ModelKind::BoundedOsc => {
                self.alpha * (nf + 0.5 + nf * (nf + 1.0) * self.nonlinearity)
            }
            ModelKind::ExpMass => nf * self.mu * self.mu,
            ModelKind::Harmonic => self.alpha * (nf + 0.5),
        }
    }

    /// R(αₖ) = Eₖ − Eₖ₋₁ for k ≥ 1, from its own closed form.
    pub fn remainder(&self, k: usize) -> f64 {
        assert!(k >= 1, "remainder is defined for k >= 1");
        let kf = k as f64;
        match self.kind {
            ModelKind::NonlinearOsc | ModelKind::BoundedOsc => {
                self.alpha * (1.0 + 2.0 * kf * self.nonlinearity)
            }
            ModelKind::ExpMass => self.mu * self.mu,
            ModelKind::Harmonic => self.alpha,
        }
    }

    /// Dimensionless step eₙ = (Eₙ − E₀)/energy_unit.
    pub fn step(&self, n: usize) -> f64 {
        let nf = n as f64;
        let e = match self.kind {
            ModelKind::NonlinearOsc | ModelKind::BoundedOsc => nf + self.nonlinearity * nf * (nf + 1.0),
            ModelKind::ExpMass | ModelKind::Harmonic => nf,
        };
        match self.perturbation {
            Some(p) if p.level == n => e * p.factor,
            _ => e,
        }
    }

    /// Squared ladder coefficient ρₙ/ρₙ₋₁ = ladder_scale · eₙ.
    pub fn ladder_sq(&self, n: usize) -> f64 {
        self.ladder_scale() * self.step(n)
    }

    /// ln ρₙ as the telescoping product of ladder coefficients.
    pub fn rho_log(&self, n: usize) -> f64 {
        let ln_scale = self.ladder_scale().ln();
        (1..=n).map(|k| ln_scale + self.step(k).ln()).sum()
    }

    /// ln ρ₀ … ln ρ_{n_max}, built incrementally.
    pub fn rho_log_sequence(&self, n_max: usize) -> Vec<f64> {
        let ln_scale = self.ladder_scale().ln();
        let mut out = Vec::with_capacity(n_max + 1);
        let mut acc = 0.0;
        out.push(acc);
        for k in 1..=n_max {
            acc += ln_scale + self.step(k).ln();
            out.push(acc);
        }
        out
    }

    /// ln ρₙ from the model's closed form: the Γ form for the nonlinear
    /// oscillator, the Pochhammer form for the bounded oscillator, n!μ²ⁿ for
    /// exp-mass and n! for the harmonic reference.
    pub fn rho_log_closed(&self, n: usize) -> f64 {
        let nf = n as f64;
        let ln_fact = log_gamma(nf + 1.0).expect("n + 1 > 0");
        match self.kind {
            ModelKind::NonlinearOsc => {
                let lp = self.nonlinearity;
                let b = 2.0 + 1.0 / lp;
                nf * lp.ln() + ln_fact + log_gamma(b + nf).expect("positive") - log_gamma(b).expect("positive")
            }
            ModelKind::BoundedOsc => {
                let half_u2 = self.nonlinearity;
                nf * half_u2.ln() + ln_fact + pochhammer_log(2.0 + 1.0 / half_u2, n).expect("positive")
            }
            ModelKind::ExpMass => ln_fact + 2.0 * nf * self.mu.ln(),
            ModelKind::Harmonic => ln_fact,
        }
    }

    /// Short parameter string, e.g. `alpha=1;lambda_prime=0.1`.
    pub fn param_string(&self) -> String {
        match self.kind {
            ModelKind::NonlinearOsc | ModelKind::BoundedOsc => {
                format!("alpha={};lambda_prime={}", self.alpha, self.nonlinearity)
            }
            ModelKind::ExpMass => format!("alpha={};mu={}", self.alpha, self.mu),
            ModelKind::Harmonic => format!("alpha={}", self.alpha),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind, self.param_string())
    }
}

/// Serialized form: kind plus the parameters relevant to it.
#[derive(Serialize, Deserialize)]
struct ModelSpecRepr {
    model: ModelKind,
    alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lambda_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
}

impl Serialize for ModelSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = ModelSpecRepr {
            model: self.kind,
            alpha: self.alpha,
            lambda_prime: matches!(self.kind, ModelKind::NonlinearOsc | ModelKind::BoundedOsc)
                .then_some(self.nonlinearity),
            mu: (self.kind == ModelKind::ExpMass).then_some(self.mu),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ModelSpecRepr::deserialize(d)?;
        let params = ModelParams {
            alpha: Some(repr.alpha),
            lambda_prime: repr.lambda_prime,
            mu: repr.mu,
            ..Default::default()
        };
        make_model(repr.model, &params).map_err(serde::de::Error::custom)
    }
}

/// The constant-mass harmonic reference of an oscillator model, in the same
/// energy units.
pub fn harmonic_limit(spec: &ModelSpec) -> Result<ModelSpec> {
    match spec.kind {
        ModelKind::NonlinearOsc | ModelKind::BoundedOsc | ModelKind::Harmonic => ModelSpec::harmonic(spec.alpha),
        ModelKind::ExpMass => Err(Error::Unsupported(
            "exp-mass has no harmonic limit; its states are already Poissonian".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn nl(lp: f64) -> ModelSpec {
        ModelSpec::nonlinear_osc(1.0, lp).unwrap()
    }

    #[test]
    fn make_model_examples() {
        assert!(ModelSpec::nonlinear_osc(1.0, 0.1).is_ok());
        assert!(ModelSpec::exp_mass(1.0, 2.0).is_ok());
        assert!(matches!(ModelSpec::nonlinear_osc(1.0, -0.1), Err(Error::Parameter(_))));
        assert!(ModelSpec::nonlinear_osc(0.0, 0.1).is_err());
        assert!(ModelSpec::exp_mass(-1.0, 2.0).is_err());
    }

    #[test]
    fn positive_lambda_tilde_is_out_of_scope() {
        let params = ModelParams { lambda_tilde: Some(0.2), ..Default::default() };
        let err = make_model(ModelKind::NonlinearOsc, &params).unwrap_err();
        assert!(err.to_string().contains("finite spectrum regime out of scope"));

        let params = ModelParams { lambda_tilde: Some(-0.2), ..Default::default() };
        let spec = make_model(ModelKind::NonlinearOsc, &params).unwrap();
        assert_eq!(spec.nonlinearity(), 0.1);
    }

    #[test]
    fn upsilon_maps_to_half_square() {
        let params = ModelParams { upsilon: Some(0.5), ..Default::default() };
        let spec = make_model(ModelKind::BoundedOsc, &params).unwrap();
        assert_eq!(spec.nonlinearity(), 0.125);
    }

    #[test]
    fn energy_examples() {
        assert!((nl(0.1).energy(2) - 3.1).abs() < 1e-14);
        let exp = ModelSpec::exp_mass(2.0, 2.0).unwrap();
        assert_eq!(exp.energy(3), 12.0);
        assert_eq!(exp.energy(0), 0.0);
    }

    #[test]
    fn step_and_rho_examples() {
        let spec = nl(0.1);
        assert!((spec.step(1) - 1.2).abs() < 1e-15);
        assert!((spec.rho_log(1).exp() - 1.2).abs() < 1e-14);
        assert!((spec.step(2) - 2.6).abs() < 1e-15);

        // ρ₄ = 4! μ⁸ from the product of squared ladder coefficients μ²k.
        let mu = 1.7_f64;
        let exp = ModelSpec::exp_mass(mu, 2.0).unwrap();
        let product: f64 = (1..=4).map(|k| mu * mu * k as f64).product();
        assert!((exp.rho_log(4).exp() / product - 1.0).abs() < 1e-13);
        assert!((exp.rho_log(4).exp() / (24.0 * mu.powi(8)) - 1.0).abs() < 1e-13);

        let harm = harmonic_limit(&spec).unwrap();
        assert!((harm.rho_log(5).exp() - 120.0).abs() < 1e-11);
    }

    #[test]
    fn harmonic_limit_examples() {
        let harm = harmonic_limit(&nl(0.1)).unwrap();
        assert_eq!(harm.kind(), ModelKind::Harmonic);
        assert_eq!(harm.step(7), 7.0);
        assert_eq!(harmonic_limit(&harm).unwrap(), harm);
        let exp = ModelSpec::exp_mass(1.0, 2.0).unwrap();
        assert!(matches!(harmonic_limit(&exp), Err(Error::Unsupported(_))));
    }

    #[test]
    fn closed_and_product_factorials_agree() {
        for &lp in &[0.05, 0.07, 0.17, 0.27, 1.0] {
            for spec in [nl(lp), ModelSpec::bounded_osc(1.0, lp).unwrap()] {
                let seq = spec.rho_log_sequence(200);
                for (n, &prod) in seq.iter().enumerate() {
                    let closed = spec.rho_log_closed(n);
                    assert!((closed - prod).abs() < 1e-9, "{spec} n = {n}: {closed} vs {prod}");
                }
            }
        }
        let exp = ModelSpec::exp_mass(0.6, 2.0).unwrap();
        for n in 0..=200 {
            assert!((exp.rho_log_closed(n) - exp.rho_log(n)).abs() < 1e-9);
        }
    }

    #[test]
    fn corrupted_step_breaks_only_the_product_route() {
        let spec = nl(0.17).with_corrupted_step(3, 1.05);
        assert!((spec.rho_log_closed(2) - spec.rho_log(2)).abs() < 1e-12);
        assert!((spec.rho_log_closed(3) - spec.rho_log(3)).abs() > 1e-3);
    }

    #[test]
    fn serde_round_trip() {
        for spec in [nl(0.27), ModelSpec::exp_mass(2.0, 3.0).unwrap(), ModelSpec::harmonic(1.5).unwrap()] {
            let json = serde_json::to_string(&spec).unwrap();
            let back: ModelSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(back, spec);
        }
        assert!(serde_json::from_str::<ModelSpec>(r#"{"model":"nonlinear-osc","alpha":1,"lambda_prime":-1}"#).is_err());
    }

    fn any_model() -> impl Strategy<Value = ModelSpec> {
        prop_oneof![
            (0.1f64..5.0, 0.01f64..2.0).prop_map(|(a, l)| ModelSpec::nonlinear_osc(a, l).unwrap()),
            (0.1f64..5.0, 0.01f64..2.0).prop_map(|(a, l)| ModelSpec::bounded_osc(a, l).unwrap()),
            (0.1f64..5.0, 1.1f64..4.0).prop_map(|(m, a)| ModelSpec::exp_mass(m, a).unwrap()),
            (0.1f64..5.0).prop_map(|a| ModelSpec::harmonic(a).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn spectrum_telescopes(spec in any_model(), n in 1usize..500) {
            let diff = spec.energy(n) - spec.energy(n - 1);
            prop_assert!((diff - spec.remainder(n)).abs() <= 1e-12 * spec.remainder(n) * (n as f64).max(1.0));
            prop_assert!(spec.remainder(n) > 0.0);
        }

        #[test]
        fn rho_increments_are_log_steps(spec in any_model(), n in 1usize..300) {
            let inc = spec.rho_log(n) - spec.rho_log(n - 1);
            let want = (spec.ladder_scale() * spec.step(n)).ln();
            prop_assert!((inc - want).abs() < 1e-10 * (1.0 + spec.rho_log(n).abs()));
        }

        #[test]
        fn steps_strictly_increase(spec in any_model(), n in 0usize..1000) {
            prop_assert!(spec.step(n + 1) > spec.step(n));
            prop_assert_eq!(spec.rho_log(0), 0.0);
        }
    }
}
