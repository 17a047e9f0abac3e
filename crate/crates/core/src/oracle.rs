//! Finite-difference check of the analytic spectra.
//!
//! Each Hamiltonian is written in divergence form −(p ψ′)′ + v ψ and
//! discretized with a three-point flux scheme on a uniform grid in a mapped
//! coordinate t, x = g(t). In t the problem reads
//! −(K ψ′)′ + W v ψ = E W ψ with K = p(g)/g′ and W = g′, and the diagonal
//! similarity W^{−1/2} turns it into a symmetric tridiagonal matrix.
//!
//! The maps remove the two sources of error a plain grid cannot resolve.
//! For the oscillators x = x₀ sin θ puts the mass singularity at θ = ±π/2,
//! where the eigenfunctions vanish like cos^{1/(2λ′)}θ, so the Dirichlet
//! walls at (1−pad)·π/2 cost nothing at second order. For exp-mass
//! x = −(2/μ) ln(μs/2) sends x → +∞ to s = 0, where the slowly decaying
//! right tail becomes a Gaussian in s.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::models::{ModelKind, ModelSpec};

pub const MIN_POINTS: usize = 200;
pub const DEFAULT_POINTS: usize = 2000;
pub const DEFAULT_PAD: f64 = 1e-3;
pub const SPECTRUM_TOL: f64 = 1e-2;

/// Half-width of the harmonic box, in units where p = α/2, v = αx²/2.
const HARMONIC_HALF_WIDTH: f64 = 8.944_271_909_999_159; // √80
/// Left cut of the exp-mass grid: v ≥ v_min + this many μ².
const EXP_WALL_UNITS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mapping {
    /// x = x₀ sin θ on θ ∈ ±θ_max.
    Sine { x0: f64 },
    /// x = −(2/μ) ln(μs/2) on s ∈ (0, s_max].
    Log { mu: f64 },
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridEigenproblem {
    spec: ModelSpec,
    /// Physical coordinate range covered by the grid.
    pub domain: (f64, f64),
    pub points: usize,
    pub pad: f64,
    mapping: Mapping,
    /// Symmetric tridiagonal matrix: diagonal and first off-diagonal.
    pub diagonal: Vec<f64>,
    pub off_diagonal: Vec<f64>,
}

/// Kinetic coefficient 1/(2m) and potential, in the oracle's coordinate:
/// ζ = √α x for the nonlinear oscillator (overall factor α), x otherwise.
fn kinetic_and_potential(spec: &ModelSpec, x: f64) -> (f64, f64) {
    let a = spec.alpha();
    match spec.kind() {
        ModelKind::NonlinearOsc => {
            let m_inv = 1.0 - 2.0 * spec.nonlinearity() * x * x;
            (a * m_inv / 2.0, a * x * x / (2.0 * m_inv))
        }
        ModelKind::BoundedOsc => {
            let lam_sq = 2.0 * a * spec.nonlinearity();
            let m_inv = 1.0 - lam_sq * x * x;
            (m_inv / 2.0, a * a * x * x / (2.0 * m_inv))
        }
        ModelKind::ExpMass => {
            let mu = spec.mu();
            let e = (mu * x).exp();
            (e, mu * mu / 4.0 * ((a * a - 1.0) * e + 1.0 / e) - mu * mu * (a + 1.0) / 2.0)
        }
        ModelKind::Harmonic => (a / 2.0, a * x * x / 2.0),
    }
}

fn exp_mass_left_wall(spec: &ModelSpec) -> f64 {
    let mu = spec.mu();
    let a = spec.alpha();
    let x_min = -(a * a - 1.0).ln() / (2.0 * mu);
    let v = |x: f64| kinetic_and_potential(spec, x).1;
    let target = v(x_min) + EXP_WALL_UNITS * mu * mu;
    let mut hi = x_min;
    let mut lo = x_min - 1.0 / mu;
    while v(lo) < target {
        lo -= (hi - lo) * 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if v(mid) < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn build_problem(spec: &ModelSpec, points: usize, pad: f64) -> Result<GridEigenproblem> {
    if points < MIN_POINTS {
        return Err(Error::Parameter(format!("oracle needs at least {MIN_POINTS} points, got {points}")));
    }
    if !(pad > 0.0 && pad < 0.1) {
        return Err(Error::Parameter(format!("pad must lie in (0, 0.1), got {pad}")));
    }
    let (mapping, t_lo, t_hi, domain) = match spec.kind() {
        ModelKind::NonlinearOsc | ModelKind::BoundedOsc => {
            let x0 = match spec.kind() {
                ModelKind::NonlinearOsc => 1.0 / (2.0 * spec.nonlinearity()).sqrt(),
                _ => 1.0 / (2.0 * spec.alpha() * spec.nonlinearity()).sqrt(),
            };
            let t = FRAC_PI_2 * (1.0 - pad);
            (Mapping::Sine { x0 }, -t, t, (-x0 * t.sin(), x0 * t.sin()))
        }
        ModelKind::ExpMass => {
            if spec.alpha() <= 1.0 {
                return Err(Error::Unsupported(format!(
                    "exp-mass potential confines only for α > 1, got α = {}",
                    spec.alpha()
                )));
            }
            let mu = spec.mu();
            let x_lo = exp_mass_left_wall(spec);
            let s_hi = 2.0 / mu * (-mu * x_lo / 2.0).exp();
            (Mapping::Log { mu }, 0.0, s_hi, (x_lo, f64::INFINITY))
        }
        ModelKind::Harmonic => {
            let w = HARMONIC_HALF_WIDTH;
            (Mapping::Identity, -w, w, (-w, w))
        }
    };

    let h = (t_hi - t_lo) / (points + 1) as f64;
    let node = |i: usize| t_lo + i as f64 * h;
    let map = |t: f64| -> (f64, f64) {
        match mapping {
            Mapping::Sine { x0 } => (x0 * t.sin(), x0 * t.cos()),
            Mapping::Log { mu } => (-(2.0 / mu) * (mu * t / 2.0).ln(), 2.0 / (mu * t)),
            Mapping::Identity => (t, 1.0),
        }
    };
    // K = p(g)/g′ at the half points i + ½, i = 0 … points.
    let flux: Vec<f64> = (0..=points)
        .map(|i| {
            let (x, dg) = map(node(i) + 0.5 * h);
            kinetic_and_potential(spec, x).0 / dg
        })
        .collect();
    let (weights, potential): (Vec<f64>, Vec<f64>) = (1..=points)
        .map(|i| {
            let (x, dg) = map(node(i));
            (dg, kinetic_and_potential(spec, x).1)
        })
        .unzip();
    let h2 = h * h;
    let diagonal = (0..points).map(|i| (flux[i] + flux[i + 1]) / (h2 * weights[i]) + potential[i]).collect();
    let off_diagonal = (0..points - 1)
        .map(|i| -flux[i + 1] / (h2 * (weights[i] * weights[i + 1]).sqrt()))
        .collect();

    Ok(GridEigenproblem { spec: *spec, domain, points, pad, mapping, diagonal, off_diagonal })
}

impl GridEigenproblem {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// Kinetic coefficient 1/(2m(x)) in the oracle coordinate.
    pub fn p(&self, x: f64) -> f64 {
        kinetic_and_potential(&self.spec, x).0
    }

    pub fn v(&self, x: f64) -> f64 {
        kinetic_and_potential(&self.spec, x).1
    }

    pub fn mapped(&self) -> bool {
        self.mapping != Mapping::Identity
    }
}

/// Number of eigenvalues below `x`, from the signs of the LDLᵀ pivots.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * off[i - 1].abs().max(f64::MIN_POSITIVE) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The k smallest eigenvalues of a symmetric tridiagonal matrix, ascending,
/// by Sturm-count bisection.
pub fn tridiagonal_lowest(diag: &[f64], off: &[f64], k: usize) -> Result<Vec<f64>> {
    let m = diag.len();
    if off.len() + 1 != m {
        return Err(Error::DimensionMismatch(format!("diagonal {m} vs off-diagonal {}", off.len())));
    }
    if k > m {
        return Err(Error::Parameter(format!("asked for {k} eigenvalues of a {m}×{m} matrix")));
    }
    let radius = |i: usize| {
        let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let r = if i + 1 < m { off[i].abs() } else { 0.0 };
        l + r
    };
    let lo0 = (0..m).map(|i| diag[i] - radius(i)).fold(f64::INFINITY, f64::min);
    let hi0 = (0..m).map(|i| diag[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max);
    let scale = lo0.abs().max(hi0.abs()).max(f64::MIN_POSITIVE);
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let mut lo = out.last().copied().unwrap_or(lo0);
        let mut hi = hi0;
        let mut converged = false;
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if sturm_count(diag, off, mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * (lo.abs().max(hi.abs())) || hi - lo <= f64::EPSILON * scale * 1e-6 {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Solver(format!("bisection for eigenvalue {j} did not converge")));
        }
        out.push(0.5 * (lo + hi));
    }
    Ok(out)
}

pub fn lowest_eigenvalues(problem: &GridEigenproblem, k: usize) -> Result<Vec<f64>> {
    if k > problem.points / 10 {
        return Err(Error::Parameter(format!("k = {k} exceeds points/10 = {}", problem.points / 10)));
    }
    tridiagonal_lowest(&problem.diagonal, &problem.off_diagonal, k)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelComparison {
    pub n: usize,
    pub numeric: f64,
    pub analytic: f64,
    /// |numeric − analytic| / max(|analytic|, energy unit).
    pub rel_error: f64,
    pub points: usize,
}

pub fn compare_spectrum(spec: &ModelSpec, k: usize, points: usize, pad: f64) -> Result<Vec<LevelComparison>> {
    let problem = build_problem(spec, points, pad)?;
    let numeric = lowest_eigenvalues(&problem, k)?;
    let unit = spec.energy_unit();
    Ok(numeric
        .into_iter()
        .enumerate()
        .map(|(n, e)| {
            let analytic = spec.energy(n);
            LevelComparison { n, numeric: e, analytic, rel_error: (e - analytic).abs() / analytic.abs().max(unit), points }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceLevel {
    pub n: usize,
    pub coarse_error: f64,
    pub fine_error: f64,
    /// coarse_error / fine_error; 4 for a second-order scheme.
    pub ratio: f64,
}

/// Errors at `points` and 2·`points` per level.
pub fn convergence(spec: &ModelSpec, k: usize, points: usize, pad: f64) -> Result<Vec<ConvergenceLevel>> {
    let runs: Vec<Result<Vec<LevelComparison>>> =
        [points, 2 * points].par_iter().map(|&m| compare_spectrum(spec, k, m, pad)).collect();
    let mut runs = runs.into_iter();
    let coarse = runs.next().expect("two runs")?;
    let fine = runs.next().expect("two runs")?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(c, f)| ConvergenceLevel {
            n: c.n,
            coarse_error: c.rel_error,
            fine_error: f.rel_error,
            ratio: c.rel_error / f.rel_error,
        })
        .collect())
}
