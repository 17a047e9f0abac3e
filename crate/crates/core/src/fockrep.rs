//! Number-basis matrices of L₊, L₋ and H on a truncated Fock space.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::ModelSpec;

/// Dense ladder and Hamiltonian matrices on the span of |φ₀⟩ … |φ_{dim−1}⟩.
///
/// Column n is the image of |φₙ⟩, so L₋ populates entries (n−1, n) and L₊
/// entries (n+1, n). The last basis row is an edge row: the truncation cuts
/// its ladder image, and algebra checks skip it.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedOperators {
    pub dim: usize,
    pub lowering: DMatrix<f64>,
    pub raising: DMatrix<f64>,
    pub hamiltonian: DMatrix<f64>,
    spec: ModelSpec,
}

pub fn build(spec: &ModelSpec, dim: usize) -> Result<TruncatedOperators> {
    if dim < 2 {
        return Err(Error::Parameter(format!("truncation dimension must be >= 2, got {dim}")));
    }
    let mut lowering = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        lowering[(n - 1, n)] = spec.ladder_sq(n).sqrt();
    }
    let raising = lowering.transpose();
    let hamiltonian = DMatrix::from_diagonal(&DVector::from_fn(dim, |n, _| spec.energy(n)));
    Ok(TruncatedOperators { dim, lowering, raising, hamiltonian, spec: *spec })
}

impl TruncatedOperators {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Ladder coefficients √(ρₙ/ρₙ₋₁) for n = 1 … dim−1.
    pub fn ladder_coefficients(&self) -> Vec<f64> {
        (1..self.dim).map(|n| self.lowering[(n - 1, n)]).collect()
    }
}

/// Diagonal of [L₋, L₊] over rows 0 … dim−2.
///
/// Entry n equals ladder_scale·(e_{n+1} − eₙ), i.e. the remainder
/// R(α_{n+1}) in ladder units.
pub fn commutator_diagonal(ops: &TruncatedOperators) -> Vec<f64> {
    let comm = &ops.lowering * &ops.raising - &ops.raising * &ops.lowering;
    (0..ops.dim - 1).map(|n| comm[(n, n)]).collect()
}

/// (L₊)ⁿ|φ₀⟩/√ρₙ, which must reproduce the n-th unit vector.
///
/// The vector is renormalized after every application and the scale is
/// tracked in log form, so large n does not overflow.
pub fn eigenstate_by_raising(ops: &TruncatedOperators, n: usize) -> Result<DVector<f64>> {
    if n >= ops.dim {
        return Err(Error::Range { index: n, dim: ops.dim });
    }
    let mut v = DVector::zeros(ops.dim);
    v[0] = 1.0;
    let mut log_scale = 0.0;
    for _ in 0..n {
        v = &ops.raising * v;
        let norm = v.amax();
        if norm == 0.0 {
            return Err(Error::Consistency("raising operator annihilated the state".into()));
        }
        v /= norm;
        log_scale += norm.ln();
    }
    let factor = (log_scale - 0.5 * ops.spec.rho_log(n)).exp();
    Ok(v * factor)
}

/// Worst deviations found by [`check_algebra`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AlgebraReport {
    /// max over non-edge rows of |[L₋,L₊]ₙₙ/ladder_scale − R(α_{n+1})/unit| relative.
    pub commutator: f64,
    /// max relative deviation of [H, L₊]|φₙ⟩ = R(α_{n+1}) L₊|φₙ⟩.
    pub intertwining: f64,
    /// max |Gram − I| for the raised eigenstates.
    pub orthonormality: f64,
}

impl AlgebraReport {
    pub fn max(&self) -> f64 {
        self.commutator.max(self.intertwining).max(self.orthonormality)
    }
}

/// Check the ladder algebra against the model's remainder sequence.
pub fn check_algebra(ops: &TruncatedOperators) -> AlgebraReport {
    let spec = &ops.spec;
    let scale = spec.ladder_scale();
    let unit = spec.energy_unit();

    let commutator = commutator_diagonal(ops)
        .iter()
        .enumerate()
        .map(|(n, &c)| {
            let want = spec.remainder(n + 1) / unit;
            (c / scale - want).abs() / want
        })
        .fold(0.0, f64::max);

    let comm_h = &ops.hamiltonian * &ops.raising - &ops.raising * &ops.hamiltonian;
    let mut intertwining = 0.0_f64;
    for n in 0..ops.dim - 1 {
        let got = comm_h[(n + 1, n)];
        let want = spec.remainder(n + 1) * ops.raising[(n + 1, n)];
        intertwining = intertwining.max((got - want).abs() / want.abs());
        for m in 0..ops.dim {
            if m != n + 1 {
                intertwining = intertwining.max(comm_h[(m, n)].abs() / want.abs());
            }
        }
    }

    let states: Vec<DVector<f64>> = (0..ops.dim)
        .map(|n| eigenstate_by_raising(ops, n).expect("n < dim"))
        .collect();
    let mut orthonormality = 0.0_f64;
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            orthonormality = orthonormality.max((a.dot(b) - want).abs());
        }
    }

    AlgebraReport { commutator, intertwining, orthonormality }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::harmonic_limit;

    fn nl(lp: f64) -> ModelSpec {
        ModelSpec::nonlinear_osc(1.0, lp).unwrap()
    }

    #[test]
    fn build_examples() {
        let harm = harmonic_limit(&nl(0.1)).unwrap();
        let ops = build(&harm, 4).unwrap();
        let c = ops.ladder_coefficients();
        for (got, want) in c.iter().zip([1.0, 2f64.sqrt(), 3f64.sqrt()]) {
            assert!((got - want).abs() < 1e-15);
        }

        let ops = build(&nl(0.1), 3).unwrap();
        let c = ops.ladder_coefficients();
        assert!((c[0] - 1.2f64.sqrt()).abs() < 1e-15);
        assert!((c[1] - 2.6f64.sqrt()).abs() < 1e-15);

        let ops = build(&ModelSpec::exp_mass(1.0, 2.0).unwrap(), 3).unwrap();
        assert_eq!(ops.ladder_coefficients(), vec![1.0, 2f64.sqrt()]);

        assert!(matches!(build(&harm, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn matrix_structure() {
        let ops = build(&nl(0.27), 12).unwrap();
        assert_eq!(ops.raising, ops.lowering.transpose());
        for r in 0..12 {
            for c in 0..12 {
                if c != r + 1 {
                    assert_eq!(ops.lowering[(r, c)], 0.0);
                }
                if r != c {
                    assert_eq!(ops.hamiltonian[(r, c)], 0.0);
                }
            }
        }
        for n in 1..12 {
            assert!(ops.hamiltonian[(n, n)] > ops.hamiltonian[(n - 1, n - 1)]);
        }
    }

    #[test]
    fn commutator_examples() {
        let harm = ModelSpec::harmonic(1.0).unwrap();
        assert!(commutator_diagonal(&build(&harm, 10).unwrap()).iter().all(|&c| (c - 1.0).abs() < 1e-14));

        let d = commutator_diagonal(&build(&nl(0.1), 10).unwrap());
        assert_eq!(d.len(), 9);
        assert!((d[0] - 1.2).abs() < 1e-14);

        let mu = 1.5;
        let exp = ModelSpec::exp_mass(mu, 2.0).unwrap();
        let d = commutator_diagonal(&build(&exp, 10).unwrap());
        assert!(d.iter().all(|&c| (c / (mu * mu) - 1.0).abs() < 1e-14));
    }

    #[test]
    fn commutator_tracks_step_differences() {
        let spec = nl(0.17);
        let d = commutator_diagonal(&build(&spec, 60).unwrap());
        for (n, c) in d.iter().enumerate() {
            let want = spec.step(n + 1) - spec.step(n);
            assert!((c - want).abs() < 1e-12 * want, "n = {n}");
        }
    }

    #[test]
    fn raising_examples() {
        let ops = build(&ModelSpec::harmonic(1.0).unwrap(), 8).unwrap();
        let e0 = eigenstate_by_raising(&ops, 0).unwrap();
        assert_eq!(e0[0], 1.0);
        let e3 = eigenstate_by_raising(&ops, 3).unwrap();
        for i in 0..8 {
            let want = if i == 3 { 1.0 } else { 0.0 };
            assert!((e3[i] - want).abs() < 1e-12);
        }

        let ops = build(&nl(0.27), 8).unwrap();
        let e5 = eigenstate_by_raising(&ops, 5).unwrap();
        assert!((e5.norm() - 1.0).abs() < 1e-12);
        assert!((e5[5] - 1.0).abs() < 1e-12);
        assert!(matches!(eigenstate_by_raising(&ops, 8), Err(Error::Range { .. })));
    }

    #[test]
    fn raising_survives_large_n() {
        let ops = build(&nl(0.07), 250).unwrap();
        let v = eigenstate_by_raising(&ops, 249).unwrap();
        assert!((v[249] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn algebra_holds_for_all_models() {
        for spec in [
            nl(0.07),
            ModelSpec::bounded_osc(2.0, 0.27).unwrap(),
            ModelSpec::exp_mass(2.0, 2.0).unwrap(),
            ModelSpec::harmonic(1.3).unwrap(),
        ] {
            let report = check_algebra(&build(&spec, 40).unwrap());
            assert!(report.commutator < 1e-12, "{spec}: {report:?}");
            assert!(report.intertwining < 1e-12, "{spec}: {report:?}");
            assert!(report.orthonormality < 1e-10, "{spec}: {report:?}");
        }
    }

    #[test]
    fn algebra_detects_corrupted_steps() {
        let spec = nl(0.17).with_corrupted_step(3, 1.05);
        let report = check_algebra(&build(&spec, 20).unwrap());
        assert!(report.commutator > 1e-3);
    }
}
