//! Command-line flags, the JSON run configuration they mirror, and the
//! merged, validated form the commands consume.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use pdem_coherent::models::{make_model, ModelKind, ModelParams, ModelSpec};
use pdem_coherent::verify::CheckKind;

use crate::CliError;

/// Factor applied by the hidden `--corrupt-step` negative control.
pub const CORRUPTION_FACTOR: f64 = 1.05;

#[derive(Debug, Parser)]
#[command(name = "pdem-cs", version, about = "Ladder-operator coherent states for models with a position-dependent mass")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Spectrum,
    Coherent,
    Stats,
    Fig1,
    Moments,
    Oracle,
    Verify,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energies, remainders and ln ρₙ for n ≤ nmax.
    Spectrum(RunArgs),
    /// Coefficients of |z⟩.
    Coherent(RunArgs),
    /// Mean, variance and Mandel Q of |z⟩ (and optionally Pₙ).
    Stats(RunArgs),
    /// Pₙ of the harmonic reference and the nonlinear oscillators at matched mean.
    Fig1(RunArgs),
    /// Moments of the measure weight against ρₙ.
    Moments(RunArgs),
    /// Finite-difference eigenvalues against the analytic spectrum.
    Oracle(RunArgs),
    /// Full verification suite; exit 1 if any check fails.
    Verify(RunArgs),
}

impl Command {
    pub fn split(self) -> (CommandKind, RunArgs) {
        match self {
            Command::Spectrum(a) => (CommandKind::Spectrum, a),
            Command::Coherent(a) => (CommandKind::Coherent, a),
            Command::Stats(a) => (CommandKind::Stats, a),
            Command::Fig1(a) => (CommandKind::Fig1, a),
            Command::Moments(a) => (CommandKind::Moments, a),
            Command::Oracle(a) => (CommandKind::Oracle, a),
            Command::Verify(a) => (CommandKind::Verify, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON file with any of the options below; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the merged configuration in canonical JSON and exit.
    #[arg(long)]
    pub print_config: bool,

    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub lambda_prime: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_tilde: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub upsilon: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,

    /// Complex label as RE+IMi, e.g. 1.5-0.5i.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub z_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub z_im: Option<f64>,
    /// Real sweep z_start, z_start + z_step, … ≤ z_stop.
    #[arg(long, allow_hyphen_values = true)]
    pub z_start: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub z_stop: Option<f64>,
    #[arg(long)]
    pub z_step: Option<f64>,

    #[arg(long = "nmax")]
    pub n_max: Option<usize>,
    /// Coherent-state truncation amplitude.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Oracle grid points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Oracle wall inset.
    #[arg(long)]
    pub pad: Option<f64>,
    /// Number of oracle levels.
    #[arg(long)]
    pub levels: Option<usize>,
    /// |z|² of the harmonic reference in fig1.
    #[arg(long)]
    pub harmonic_mean: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub lambda_primes: Option<Vec<f64>>,
    /// Restrict verify to these checks.
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<CheckKind>>,
    /// Emit Pₙ rows instead of summaries (stats).
    #[arg(long)]
    pub distribution: bool,

    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long, hide = true)]
    pub corrupt_step: Option<usize>,
}

/// Serializable mirror of the flags. Absent fields take command defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_tilde: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_im: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pad: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_primes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub only: Option<Vec<CheckKind>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrupt_step: Option<usize>,
}

impl RunConfig {
    pub fn from_args(command: CommandKind, a: &RunArgs) -> Self {
        RunConfig {
            command: Some(command),
            model: a.model,
            alpha: a.alpha,
            lambda_prime: a.lambda_prime,
            lambda_tilde: a.lambda_tilde,
            upsilon: a.upsilon,
            mu: a.mu,
            z: a.z.clone(),
            z_re: a.z_re,
            z_im: a.z_im,
            z_start: a.z_start,
            z_stop: a.z_stop,
            z_step: a.z_step,
            n_max: a.n_max,
            eps: a.eps,
            points: a.points,
            pad: a.pad,
            levels: a.levels,
            harmonic_mean: a.harmonic_mean,
            lambda_primes: a.lambda_primes.clone(),
            only: a.only.clone(),
            distribution: a.distribution.then_some(true),
            format: a.format,
            out: a.out.clone(),
            corrupt_step: a.corrupt_step,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    /// Field-wise `self` over `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        RunConfig {
            command: self.command.or(base.command),
            model: self.model.or(base.model),
            alpha: self.alpha.or(base.alpha),
            lambda_prime: self.lambda_prime.or(base.lambda_prime),
            lambda_tilde: self.lambda_tilde.or(base.lambda_tilde),
            upsilon: self.upsilon.or(base.upsilon),
            mu: self.mu.or(base.mu),
            z: self.z.or(base.z),
            z_re: self.z_re.or(base.z_re),
            z_im: self.z_im.or(base.z_im),
            z_start: self.z_start.or(base.z_start),
            z_stop: self.z_stop.or(base.z_stop),
            z_step: self.z_step.or(base.z_step),
            n_max: self.n_max.or(base.n_max),
            eps: self.eps.or(base.eps),
            points: self.points.or(base.points),
            pad: self.pad.or(base.pad),
            levels: self.levels.or(base.levels),
            harmonic_mean: self.harmonic_mean.or(base.harmonic_mean),
            lambda_primes: self.lambda_primes.or(base.lambda_primes),
            only: self.only.or(base.only),
            distribution: self.distribution.or(base.distribution),
            format: self.format.or(base.format),
            out: self.out.or(base.out),
            corrupt_step: self.corrupt_step.or(base.corrupt_step),
        }
    }

    /// Flags merged over the optional config file.
    pub fn from_cli(command: CommandKind, args: &RunArgs) -> Result<Self, CliError> {
        let flags = RunConfig::from_args(command, args);
        match &args.config {
            Some(path) => Ok(flags.over(RunConfig::load(path)?)),
            None => Ok(flags),
        }
    }

    /// Canonical JSON: fixed field order, absent fields omitted.
    pub fn canonical(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn command(&self) -> Result<CommandKind, CliError> {
        self.command.ok_or_else(|| CliError::Usage("no command given".into()))
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or(match self.command {
            Some(CommandKind::Verify) | Some(CommandKind::Coherent) => Format::Json,
            _ => Format::Csv,
        })
    }

    pub fn eps(&self) -> Result<f64, CliError> {
        let eps = self.eps.unwrap_or(1e-12);
        if eps > 0.0 && eps < 1.0 {
            Ok(eps)
        } else {
            Err(CliError::Usage(format!("eps must lie in (0, 1), got {eps}")))
        }
    }

    pub fn has_model(&self) -> bool {
        self.model.is_some()
    }

    pub fn spec(&self) -> Result<ModelSpec, CliError> {
        let kind = self.model.ok_or_else(|| CliError::Usage("--model is required".into()))?;
        let params = ModelParams {
            alpha: self.alpha,
            lambda_prime: self.lambda_prime,
            lambda_tilde: self.lambda_tilde,
            upsilon: self.upsilon,
            mu: self.mu,
        };
        let spec = make_model(kind, &params)?;
        Ok(self.corrupt(spec))
    }

    pub fn corrupt(&self, spec: ModelSpec) -> ModelSpec {
        match self.corrupt_step {
            Some(level) => spec.with_corrupted_step(level, CORRUPTION_FACTOR),
            None => spec,
        }
    }

    /// The z labels requested: a real sweep, `z`, or `z_re`/`z_im`.
    pub fn z_values(&self) -> Result<Vec<Complex64>, CliError> {
        let sweep = self.z_start.is_some() || self.z_stop.is_some() || self.z_step.is_some();
        let single = self.z.is_some();
        let parts = self.z_re.is_some() || self.z_im.is_some();
        if [sweep, single, parts].iter().filter(|&&b| b).count() > 1 {
            return Err(CliError::Usage("give only one of --z, --z-re/--z-im or a --z-start/--z-stop/--z-step sweep".into()));
        }
        if sweep {
            let (Some(start), Some(stop), Some(step)) = (self.z_start, self.z_stop, self.z_step) else {
                return Err(CliError::Usage("a sweep needs --z-start, --z-stop and --z-step".into()));
            };
            if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
                return Err(CliError::Usage(format!("sweep step must be > 0, got {step}")));
            }
            if stop < start {
                return Err(CliError::Usage("sweep stop lies below start".into()));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            return Ok((0..count).map(|i| Complex64::new(start + i as f64 * step, 0.0)).collect());
        }
        if let Some(text) = &self.z {
            return parse_complex(text).map(|z| vec![z]);
        }
        if parts {
            return Ok(vec![Complex64::new(self.z_re.unwrap_or(0.0), self.z_im.unwrap_or(0.0))]);
        }
        Err(CliError::Usage("a z label is required (--z, --z-re/--z-im or a sweep)".into()))
    }
}

pub fn parse_complex(text: &str) -> Result<Complex64, CliError> {
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let z: Complex64 = cleaned.parse().map_err(|_| CliError::Usage(format!("cannot parse complex number '{text}'")))?;
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(CliError::Usage(format!("z must be finite, got '{text}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("1").unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(parse_complex("1.5+2i").unwrap(), Complex64::new(1.5, 2.0));
        assert_eq!(parse_complex("-0.5-0.25i").unwrap(), Complex64::new(-0.5, -0.25));
        assert_eq!(parse_complex("2i").unwrap(), Complex64::new(0.0, 2.0));
        assert_eq!(parse_complex("1e-3 + 1i").unwrap(), Complex64::new(1e-3, 1.0));
        assert!(parse_complex("abc").is_err());
    }

    #[test]
    fn sweep_values() {
        let c = RunConfig { z_start: Some(0.0), z_stop: Some(1.0), z_step: Some(0.25), ..Default::default() };
        let z = c.z_values().unwrap();
        assert_eq!(z.len(), 5);
        assert_eq!(z[4].re, 1.0);
        let bad = RunConfig { z_step: Some(0.0), ..c.clone() };
        assert!(bad.z_values().is_err());
        let both = RunConfig { z: Some("1".into()), ..c };
        assert!(both.z_values().is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig::parse(r#"{"model": "exp-mass", "mu": 2.0, "eps": 1e-8}"#).unwrap();
        let flags = RunConfig { command: Some(CommandKind::Stats), mu: Some(1.5), ..Default::default() };
        let merged = flags.over(file);
        assert_eq!(merged.mu, Some(1.5));
        assert_eq!(merged.eps, Some(1e-8));
        assert_eq!(merged.model, Some(ModelKind::ExpMass));
    }

    #[test]
    fn canonical_round_trip() {
        let c = RunConfig {
            command: Some(CommandKind::Fig1),
            model: Some(ModelKind::NonlinearOsc),
            lambda_prime: Some(0.17),
            eps: Some(1e-12),
            lambda_primes: Some(vec![0.07, 0.17]),
            only: Some(vec![CheckKind::Moments]),
            format: Some(Format::Json),
            ..Default::default()
        };
        let text = c.canonical();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.canonical(), text);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(RunConfig::parse(r#"{"bogus": 1}"#).is_err());
    }
}
