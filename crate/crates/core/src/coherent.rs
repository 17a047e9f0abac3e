//! Coherent states |z⟩ = N(|z|²)^{−1/2} Σ zⁿ/√ρₙ |φₙ⟩, the
//! eigenstates of the lowering operator L₋.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fockrep::TruncatedOperators;
use crate::measure::{radius, Radius};
use crate::models::{ModelKind, ModelSpec};
use crate::specfn::{hyp0f1, hyp0f1_complex, ScaledComplex};

/// Relative agreement required between the series and closed-form
/// normalizations, and between the two overlap routes.
pub const NORMALIZATION_TOL: f64 = 1e-9;
pub const OVERLAP_TOL: f64 = 1e-8;

const MAX_DIM: usize = 1_000_000;
const SERIES_TOL: f64 = 1e-16;

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln N(x) = ln Σ xⁿ/ρₙ summed directly from the ladder steps.
pub fn normalization_series_log(spec: &ModelSpec, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("normalization argument must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let ln_x = x.ln();
    let mut log_term = 0.0;
    let mut log_sum = 0.0;
    for n in 0..MAX_DIM {
        let r = x / spec.ladder_sq(n + 1);
        if r < 1.0 && log_term + (r / (1.0 - r)).ln() - log_sum < SERIES_TOL.ln() {
            return Ok(log_sum);
        }
        log_term += ln_x - spec.ladder_sq(n + 1).ln();
        log_sum = log_add(log_sum, log_term);
    }
    Err(Error::Convergence { terms: MAX_DIM })
}

/// ln N(x) from the model's closed form: ₀F₁(2+1/λ′; x/λ′) for the
/// oscillators, e^{x/μ²} for exp-mass, eˣ for the harmonic reference.
pub fn normalization_closed_log(spec: &ModelSpec, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("normalization argument must be >= 0, got {x}")));
    }
    Ok(match spec.kind() {
        ModelKind::NonlinearOsc | ModelKind::BoundedOsc => {
            let lp = spec.nonlinearity();
            hyp0f1(2.0 + 1.0 / lp, x / lp, SERIES_TOL)?.value
        }
        ModelKind::ExpMass => x / spec.ladder_scale(),
        ModelKind::Harmonic => x,
    })
}

/// N(w) = Σ wⁿ/ρₙ for complex w from the closed forms.
pub fn kernel_closed(spec: &ModelSpec, w: Complex64) -> Result<ScaledComplex> {
    let exp = |w: Complex64| ScaledComplex { log_scale: w.re, mantissa: Complex64::from_polar(1.0, w.im) };
    Ok(match spec.kind() {
        ModelKind::NonlinearOsc | ModelKind::BoundedOsc => {
            let lp = spec.nonlinearity();
            hyp0f1_complex(2.0 + 1.0 / lp, w / lp, SERIES_TOL)?
        }
        ModelKind::ExpMass => exp(w / spec.ladder_scale()),
        ModelKind::Harmonic => exp(w),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherentState {
    spec: ModelSpec,
    z: Complex64,
    eps: f64,
    /// ln |cₙ| for n < dim.
    log_mag: Vec<f64>,
    /// ln of the truncated normalization sum.
    log_norm: f64,
    /// Bound on the probability Σ_{n≥dim} |cₙ|² left out by truncation.
    tail_bound: f64,
}

/// Build |z⟩ truncated so that the amplitude carried by the last kept level
/// and everything above it is at most `eps`.
///
/// This makes the neglected probability smaller than eps² and bounds the
/// annihilation residual ‖L₋|z⟩ − z|z⟩‖ by eps·|z|. Because the ladder steps
/// increase, the term ratio |z|²/(ρₙ₊₁/ρₙ) decreases and the geometric tail
/// bound tₙ·r/(1−r) is rigorous once r < 1.
pub fn construct(spec: &ModelSpec, z: Complex64, eps: f64) -> Result<CoherentState> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Parameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain("z must be finite".into()));
    }
    let x = z.norm_sqr();
    if let Radius::Finite { value, .. } = radius(spec) {
        if x >= value {
            return Err(Error::Domain(format!("|z|² = {x} lies outside the radius of convergence {value}")));
        }
    }

    let closed = normalization_closed_log(spec, x)?;
    let series = normalization_series_log(spec, x)?;
    if (closed - series).abs() > NORMALIZATION_TOL {
        return Err(Error::Consistency(format!(
            "{spec}: series normalization ln N = {series} disagrees with closed form {closed}"
        )));
    }

    if x == 0.0 {
        return Ok(CoherentState { spec: *spec, z, eps, log_mag: vec![0.0], log_norm: 0.0, tail_bound: 0.0 });
    }

    let ln_x = x.ln();
    let target = 2.0 * eps.ln();
    let mut log_terms = Vec::new();
    let mut log_term = 0.0;
    let mut log_sum = f64::NEG_INFINITY;
    loop {
        let n = log_terms.len();
        if n >= MAX_DIM {
            return Err(Error::Convergence { terms: n });
        }
        log_terms.push(log_term);
        log_sum = log_add(log_sum, log_term);
        let r = x / spec.ladder_sq(n + 1);
        if r < 1.0 && log_term - (1.0 - r).ln() - log_sum <= target {
            let tail = (log_term + (r / (1.0 - r)).ln() - log_sum).exp();
            let log_mag = log_terms.iter().map(|t| 0.5 * (t - log_sum)).collect();
            return Ok(CoherentState { spec: *spec, z, eps, log_mag, log_norm: log_sum, tail_bound: tail });
        }
        log_term += ln_x - spec.ladder_sq(n + 1).ln();
    }
}

impl CoherentState {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.log_mag.len()
    }

    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn log_magnitude(&self, n: usize) -> f64 {
        self.log_mag.get(n).copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// e^{i n arg z}.
    pub fn phase(&self, n: usize) -> Complex64 {
        Complex64::from_polar(1.0, n as f64 * self.z.arg())
    }

    /// cₙ, zero beyond the truncation.
    pub fn coefficient(&self, n: usize) -> Complex64 {
        match self.log_mag.get(n) {
            Some(&m) => self.phase(n) * m.exp(),
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn coefficients(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|n| self.coefficient(n)).collect()
    }

    /// |cₙ|² for n < dim.
    pub fn probabilities(&self) -> Vec<f64> {
        self.log_mag.iter().map(|m| (2.0 * m).exp()).collect()
    }

    pub fn record(&self) -> CoherentRecord {
        CoherentRecord {
            model: self.spec,
            z_re: self.z.re,
            z_im: self.z.im,
            dim: self.dim(),
            coeffs: (0..self.dim())
                .map(|n| {
                    let p = self.phase(n);
                    (self.log_mag[n], p.re, p.im)
                })
                .collect(),
            log_norm: self.log_norm,
        }
    }
}

/// JSON form of a coherent state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoherentRecord {
    pub model: ModelSpec,
    pub z_re: f64,
    pub z_im: f64,
    pub dim: usize,
    /// (ln|cₙ|, Re phase, Im phase)
    pub coeffs: Vec<(f64, f64, f64)>,
    pub log_norm: f64,
}

/// ‖L₋|z⟩ − z|z⟩‖ over the truncated basis of `ops`.
pub fn annihilation_residual(state: &CoherentState, ops: &TruncatedOperators) -> Result<f64> {
    if ops.dim < state.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operators have dimension {} but the state needs {}",
            ops.dim,
            state.dim()
        )));
    }
    if ops.spec() != state.spec() {
        return Err(Error::DimensionMismatch("operators were built for a different model".into()));
    }
    let c: Vec<Complex64> = (0..ops.dim).map(|n| state.coefficient(n)).collect();
    let mut sq = 0.0;
    for n in 0..ops.dim {
        let lowered = if n + 1 < ops.dim { c[n + 1] * ops.lowering[(n, n + 1)] } else { Complex64::new(0.0, 0.0) };
        sq += (lowered - state.z * c[n]).norm_sqr();
    }
    Ok(sq.sqrt())
}

fn same_model(a: &CoherentState, b: &CoherentState) -> Result<()> {
    if a.spec != b.spec {
        return Err(Error::Parameter(format!("overlap of states from different models: {} vs {}", a.spec, b.spec)));
    }
    Ok(())
}

/// ⟨a|b⟩ = Σ conj(cₙᵃ) cₙᵇ over the stored coefficients.
pub fn overlap_coefficients(a: &CoherentState, b: &CoherentState) -> Result<Complex64> {
    same_model(a, b)?;
    let n = a.dim().min(b.dim());
    Ok((0..n).map(|k| a.coefficient(k).conj() * b.coefficient(k)).sum())
}

/// ⟨a|b⟩ = N(z̄ₐ z_b)/√(N(|zₐ|²) N(|z_b|²)) from the closed-form kernel.
pub fn overlap_kernel(a: &CoherentState, b: &CoherentState) -> Result<Complex64> {
    same_model(a, b)?;
    let k = kernel_closed(&a.spec, a.z.conj() * b.z)?;
    let na = normalization_closed_log(&a.spec, a.z.norm_sqr())?;
    let nb = normalization_closed_log(&b.spec, b.z.norm_sqr())?;
    Ok(k.mantissa * (k.log_scale - 0.5 * (na + nb)).exp())
}

/// ⟨a|b⟩, computed from the coefficients and cross-checked against the
/// analytic kernel.
pub fn overlap(a: &CoherentState, b: &CoherentState) -> Result<Complex64> {
    let direct = overlap_coefficients(a, b)?;
    let kernel = overlap_kernel(a, b)?;
    if (direct - kernel).norm() > OVERLAP_TOL {
        return Err(Error::Consistency(format!(
            "overlap routes disagree: coefficients {direct}, kernel {kernel}"
        )));
    }
    Ok(direct)
}

/// ‖|z+δ⟩ − |z⟩‖² for a real shift δ, from coefficient differences.
pub fn label_continuity(state: &CoherentState, delta: f64) -> Result<f64> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Parameter(format!("delta must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    let shifted = construct(&state.spec, state.z + delta, state.eps)?;
    let n = state.dim().max(shifted.dim());
    Ok((0..n).map(|k| (shifted.coefficient(k) - state.coefficient(k)).norm_sqr()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockrep::build;
    use proptest::prelude::*;

    fn nl(lp: f64) -> ModelSpec {
        ModelSpec::nonlinear_osc(1.0, lp).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn vacuum_state() {
        let s = construct(&nl(0.1), c(0.0, 0.0), 1e-12).unwrap();
        assert_eq!(s.dim(), 1);
        assert_eq!(s.coefficient(0), c(1.0, 0.0));
        assert_eq!(s.log_norm(), 0.0);
    }

    #[test]
    fn exp_mass_state_is_poisson_weighted() {
        let s = construct(&ModelSpec::exp_mass(1.0, 2.0).unwrap(), c(1.0, 0.0), 1e-12).unwrap();
        let e = std::f64::consts::E;
        assert!((s.log_norm().exp() - e).abs() < 1e-12);
        let mut fact = 1.0;
        for n in 0..s.dim() {
            if n > 0 {
                fact *= n as f64;
            }
            let want = 1.0 / (fact.sqrt() * e.sqrt());
            assert!((s.coefficient(n).re - want).abs() < 1e-14, "n = {n}");
        }
    }

    #[test]
    fn nonlinear_normalization_matches_series_oracle() {
        // Brute-force Σ |z|²ⁿ/ρₙ with ρₙ from the explicit product of steps.
        let spec = nl(0.1);
        let mut rho = 1.0;
        let mut brute = 1.0;
        for n in 1..80 {
            rho *= n as f64 + 0.1 * (n * (n + 1)) as f64;
            brute += 1.0 / rho;
        }
        let s = construct(&spec, c(1.0, 0.0), 1e-12).unwrap();
        assert!((s.log_norm().exp() / brute - 1.0).abs() < 1e-13);
        let f = hyp0f1(12.0, 10.0, 1e-15).unwrap().to_f64();
        assert!((f - 2.244_636_437_121_142_777).abs() < 1e-13);
        assert!((normalization_closed_log(&spec, 1.0).unwrap() - f.ln()).abs() < 1e-14);
    }

    #[test]
    fn construct_rejects_bad_eps() {
        assert!(matches!(construct(&nl(0.1), c(1.0, 0.0), 0.0), Err(Error::Parameter(_))));
        assert!(matches!(construct(&nl(0.1), c(1.0, 0.0), 1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn construct_rejects_corrupted_model() {
        let spec = nl(0.17).with_corrupted_step(3, 1.05);
        assert!(matches!(construct(&spec, c(1.5, 0.0), 1e-12), Err(Error::Consistency(_))));
    }

    #[test]
    fn tail_bound_and_truncation() {
        for eps in [1e-3, 1e-8, 1e-12] {
            let s = construct(&nl(0.17), c(2.0, 1.0), eps).unwrap();
            assert!(s.tail_bound() < eps * eps);
            let last = s.coefficient(s.dim() - 1).norm();
            assert!(last <= eps);
            let r = s.z().norm_sqr() / s.spec().ladder_sq(s.dim());
            assert!(r < 1.0);
        }
    }

    #[test]
    fn annihilation_examples() {
        let spec = nl(0.1);
        let s = construct(&spec, c(0.0, 0.0), 1e-12).unwrap();
        assert_eq!(annihilation_residual(&s, &build(&spec, 4).unwrap()).unwrap(), 0.0);

        let exp = ModelSpec::exp_mass(1.0, 2.0).unwrap();
        let s = construct(&exp, c(2.0, 0.0), 1e-12).unwrap();
        let ops = build(&exp, s.dim()).unwrap();
        assert!(annihilation_residual(&s, &ops).unwrap() < 1e-10);

        let spec = nl(0.27);
        let s = construct(&spec, c(1.5, 0.0), 1e-12).unwrap();
        let ops = build(&spec, s.dim() + 5).unwrap();
        assert!(annihilation_residual(&s, &ops).unwrap() < 1e-10);

        let small = build(&spec, 2).unwrap();
        assert!(matches!(annihilation_residual(&s, &small), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn residual_respects_the_eps_bound() {
        for eps in [1e-4, 1e-8] {
            let spec = nl(0.07);
            let z = c(2.0, -1.0);
            let s = construct(&spec, z, eps).unwrap();
            let ops = build(&spec, s.dim()).unwrap();
            assert!(annihilation_residual(&s, &ops).unwrap() <= 10.0 * eps * z.norm());
        }
    }

    #[test]
    fn overlap_examples() {
        let spec = nl(0.1);
        let s1 = construct(&spec, c(1.0, 0.0), 1e-12).unwrap();
        assert!((overlap(&s1, &s1).unwrap() - 1.0).norm() < 1e-12);

        let s0 = construct(&spec, c(0.0, 0.0), 1e-12).unwrap();
        let want = hyp0f1(12.0, 10.0, 1e-15).unwrap().to_f64().powf(-0.5);
        assert!((overlap(&s1, &s0).unwrap() - want).norm() < 1e-13);

        let mu = 1.3;
        let exp = ModelSpec::exp_mass(mu, 2.0).unwrap();
        let a = construct(&exp, c(0.4, -1.1), 1e-12).unwrap();
        let b = construct(&exp, c(-0.7, 0.9), 1e-12).unwrap();
        let gauss = (-(a.z() - b.z()).norm_sqr() / (mu * mu)).exp();
        assert!((overlap(&a, &b).unwrap().norm_sqr() - gauss).abs() < 1e-12);

        let other = construct(&nl(0.2), c(1.0, 0.0), 1e-12).unwrap();
        assert!(overlap(&s1, &other).is_err());
    }

    #[test]
    fn continuity_examples() {
        let mu = 1.0;
        let exp = ModelSpec::exp_mass(mu, 2.0).unwrap();
        let s = construct(&exp, c(0.8, 0.0), 1e-12).unwrap();
        assert_eq!(label_continuity(&s, 0.0).unwrap(), 0.0);
        let d = 1e-3;
        let want = 2.0 * (1.0 - (-d * d / (2.0 * mu * mu)).exp());
        assert!((label_continuity(&s, d).unwrap() / want - 1.0).abs() < 1e-6);

        let s = construct(&nl(0.17), c(1.2, 0.3), 1e-12).unwrap();
        let a = label_continuity(&s, 0.02).unwrap();
        let b = label_continuity(&s, 0.01).unwrap();
        assert!((a / b - 4.0).abs() < 0.1);
    }

    #[test]
    fn record_serializes() {
        let s = construct(&nl(0.1), c(0.5, 0.5), 1e-6).unwrap();
        let json = serde_json::to_value(s.record()).unwrap();
        assert_eq!(json["dim"], s.dim());
        assert_eq!(json["model"]["model"], "nonlinear-osc");
        assert_eq!(json["coeffs"].as_array().unwrap().len(), s.dim());
    }

    fn any_model() -> impl Strategy<Value = ModelSpec> {
        prop_oneof![
            prop::sample::select(vec![0.07, 0.17, 0.27]).prop_map(|l| ModelSpec::nonlinear_osc(1.0, l).unwrap()),
            prop::sample::select(vec![0.07, 0.17, 0.27]).prop_map(|l| ModelSpec::bounded_osc(1.0, l).unwrap()),
            prop::sample::select(vec![1.0, 2.0]).prop_map(|m| ModelSpec::exp_mass(m, 2.0).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn states_are_normalized(spec in any_model(), r in 0.0f64..5.0, theta in 0.0f64..6.3) {
            let s = construct(&spec, Complex64::from_polar(r, theta), 1e-12).unwrap();
            let norm: f64 = s.probabilities().iter().sum();
            prop_assert!((norm - 1.0).abs() < 1e-10);
        }

        #[test]
        fn overlap_is_hermitian_and_bounded(
            spec in any_model(),
            (r1, t1, r2, t2) in (0.0f64..3.0, 0.0f64..6.3, 0.0f64..3.0, 0.0f64..6.3),
        ) {
            let a = construct(&spec, Complex64::from_polar(r1, t1), 1e-12).unwrap();
            let b = construct(&spec, Complex64::from_polar(r2, t2), 1e-12).unwrap();
            let ab = overlap(&a, &b).unwrap();
            let ba = overlap(&b, &a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-12);
            prop_assert!(ab.norm() <= 1.0 + 1e-12);
        }
    }
}
