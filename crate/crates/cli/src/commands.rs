//! One function per subcommand, each turning a merged configuration into
//! an [`Output`].

use rayon::prelude::*;
use serde_json::{json, Value};

use pdem_coherent::coherent::{construct, CoherentState};
use pdem_coherent::measure::verify_moments;
use pdem_coherent::models::{ModelKind, ModelSpec};
use pdem_coherent::oracle::{compare_spectrum, DEFAULT_PAD, DEFAULT_POINTS, SPECTRUM_TOL};
use pdem_coherent::stats::{self, summary_closed, summary_series, FIG1_HARMONIC_X, FIG1_LAMBDAS};
use pdem_coherent::verify::{self, all_passed, VerifyConfig};

use crate::config::{CommandKind, RunConfig};
use crate::output::{fmt_g, Output, Table};
use crate::CliError;

pub fn run(config: &RunConfig) -> Result<Output, CliError> {
    match config.command()? {
        CommandKind::Spectrum => spectrum(config),
        CommandKind::Coherent => coherent(config),
        CommandKind::Stats => stats_cmd(config),
        CommandKind::Fig1 => fig1(config),
        CommandKind::Moments => moments(config),
        CommandKind::Oracle => oracle(config),
        CommandKind::Verify => verify_cmd(config),
    }
}

fn lambda_prime(spec: &ModelSpec) -> Option<f64> {
    matches!(spec.kind(), ModelKind::NonlinearOsc | ModelKind::BoundedOsc).then(|| spec.nonlinearity())
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

fn spectrum(config: &RunConfig) -> Result<Output, CliError> {
    let spec = config.spec()?;
    let n_max = config.n_max.unwrap_or(10);
    let rho = spec.rho_log_sequence(n_max);
    let mut table = Table::new(&["n", "E_n", "R_n", "rho_log_n"]);
    let mut rows = Vec::new();
    for (n, &rho_n) in rho.iter().enumerate() {
        let remainder = (n > 0).then(|| spec.remainder(n));
        table.push(vec![n.to_string(), fmt_g(spec.energy(n)), opt(remainder), fmt_g(rho_n)]);
        rows.push(json!({"n": n, "E_n": spec.energy(n), "R_n": remainder, "rho_log_n": rho_n}));
    }
    Ok(Output { table, json: json!({"model": spec, "levels": rows}), failed: false })
}

fn states(config: &RunConfig, spec: &ModelSpec) -> Result<Vec<CoherentState>, CliError> {
    let eps = config.eps()?;
    let zs = config.z_values()?;
    zs.par_iter().map(|&z| construct(spec, z, eps).map_err(CliError::from)).collect()
}

fn coherent(config: &RunConfig) -> Result<Output, CliError> {
    let spec = config.spec()?;
    let states = states(config, &spec)?;
    let mut table = Table::new(&["z_re", "z_im", "n", "log_mag", "c_re", "c_im"]);
    for s in &states {
        let rows = s.dim().max(config.n_max.map_or(0, |n| n + 1));
        for n in 0..rows {
            let c = s.coefficient(n);
            table.push(vec![
                fmt_g(s.z().re),
                fmt_g(s.z().im),
                n.to_string(),
                fmt_g(s.log_magnitude(n)),
                fmt_g(c.re),
                fmt_g(c.im),
            ]);
        }
    }
    let records: Vec<Value> = states.iter().map(|s| serde_json::to_value(s.record()).expect("record")).collect();
    let json = if records.len() == 1 { records.into_iter().next().expect("one") } else { Value::Array(records) };
    Ok(Output { table, json, failed: false })
}

fn stats_cmd(config: &RunConfig) -> Result<Output, CliError> {
    let spec = config.spec()?;
    let states = states(config, &spec)?;
    let lp = lambda_prime(&spec);
    let model = spec.kind().as_str();
    let with_distribution = config.distribution.unwrap_or(false);
    let mut table = if with_distribution {
        Table::new(&["model", "lambda_prime", "z_abs", "n", "P_n"])
    } else {
        Table::new(&["model", "lambda_prime", "z_abs", "mean", "variance", "mandel_q", "classification"])
    };
    let mut records = Vec::new();
    for s in &states {
        let z_abs = s.z().norm();
        let series = summary_series(s);
        let p = stats::distribution(s);
        if with_distribution {
            for (n, pn) in p.iter().enumerate() {
                table.push(vec![model.into(), opt(lp), fmt_g(z_abs), n.to_string(), fmt_g(*pn)]);
            }
        } else {
            table.push(vec![
                model.into(),
                opt(lp),
                fmt_g(z_abs),
                fmt_g(series.mean),
                fmt_g(series.variance),
                fmt_g(series.mandel_q),
                series.classification.to_string(),
            ]);
        }
        let closed = summary_closed(s);
        let mut record = json!({
            "model": spec,
            "z_re": s.z().re,
            "z_im": s.z().im,
            "z_abs": z_abs,
            "series": series,
            "closed_form": closed.as_ref().ok(),
        });
        if let Err(e) = &closed {
            record["closed_form_error"] = Value::String(e.to_string());
        }
        if with_distribution {
            record["distribution"] = json!(p);
        }
        records.push(record);
    }
    Ok(Output { table, json: Value::Array(records), failed: false })
}

fn fig1(config: &RunConfig) -> Result<Output, CliError> {
    let lambdas = config.lambda_primes.clone().unwrap_or_else(|| FIG1_LAMBDAS.to_vec());
    let x = config.harmonic_mean.unwrap_or(FIG1_HARMONIC_X);
    if !(x > 0.0) || !x.is_finite() {
        return Err(CliError::Usage(format!("harmonic mean must be positive, got {x}")));
    }
    let panels = stats::fig1(&lambdas, x, config.eps()?)?;
    let mut table = Table::new(&["panel", "lambda_prime", "n", "P_n"]);
    let mut json_panels = Vec::new();
    for p in &panels {
        let lp = (p.panel != "harmonic").then_some(p.lambda_prime);
        for (n, pn) in p.distribution.iter().enumerate() {
            table.push(vec![p.panel.into(), opt(lp), n.to_string(), fmt_g(*pn)]);
        }
        json_panels.push(json!({
            "panel": p.panel,
            "lambda_prime": lp,
            "z_abs_sq": p.z_abs_sq,
            "mean": p.summary.mean,
            "variance": p.summary.variance,
            "mandel_q": p.summary.mandel_q,
            "peak": p.peak(),
            "distribution": p.distribution,
        }));
    }
    Ok(Output { table, json: json!({"harmonic_abs_sq": x, "panels": json_panels}), failed: false })
}

fn moments(config: &RunConfig) -> Result<Output, CliError> {
    let spec = config.spec()?;
    let reports = verify_moments(&spec, config.n_max.unwrap_or(8))?;
    let mut table = Table::new(&["n", "quadrature", "analytic", "rel_error"]);
    for r in &reports {
        table.push(vec![r.n.to_string(), fmt_g(r.quadrature), fmt_g(r.analytic_rho), fmt_g(r.rel_error)]);
    }
    let failed = reports.iter().any(|r| !r.pass);
    Ok(Output { table, json: json!({"model": spec, "moments": reports}), failed })
}

fn oracle(config: &RunConfig) -> Result<Output, CliError> {
    let spec = config.spec()?;
    let points = config.points.unwrap_or(DEFAULT_POINTS);
    let levels = compare_spectrum(&spec, config.levels.unwrap_or(4), points, config.pad.unwrap_or(DEFAULT_PAD))?;
    let mut table = Table::new(&["model", "params", "n", "E_numeric", "E_analytic", "rel_error", "M"]);
    for l in &levels {
        table.push(vec![
            spec.kind().as_str().into(),
            spec.param_string(),
            l.n.to_string(),
            fmt_g(l.numeric),
            fmt_g(l.analytic),
            fmt_g(l.rel_error),
            points.to_string(),
        ]);
    }
    let failed = levels.iter().any(|l| !(l.rel_error < SPECTRUM_TOL));
    Ok(Output { table, json: json!({"model": spec, "levels": levels}), failed })
}

fn verify_cmd(config: &RunConfig) -> Result<Output, CliError> {
    let models = if config.has_model() {
        vec![config.spec()?]
    } else {
        verify::default_models().into_iter().map(|m| config.corrupt(m)).collect()
    };
    let defaults = VerifyConfig::default();
    let vc = VerifyConfig {
        models,
        only: config.only.clone().unwrap_or_default(),
        n_max: config.n_max.unwrap_or(defaults.n_max),
        eps: config.eps()?,
        points: config.points.unwrap_or(defaults.points),
        pad: config.pad.unwrap_or(defaults.pad),
    };
    let records = verify::run(&vc)?;
    let mut table = Table::new(&["check_name", "status", "max_rel_error", "details"]);
    for r in &records {
        let status = serde_json::to_value(r.status).expect("status");
        table.push(vec![
            r.check_name.clone(),
            status.as_str().expect("string status").into(),
            opt(r.max_rel_error),
            r.details.clone(),
        ]);
    }
    let failed = !all_passed(&records);
    Ok(Output { table, json: serde_json::to_value(&records)?, failed })
}
