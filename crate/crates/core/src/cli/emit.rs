//! Runs a configured command and writes its files.
//!
//! Every command writes `manifest.json` next to its outputs. CSV files have
//! a header row, `,` separators and LF line endings; reals are printed with
//! 17 significant digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ms_params, Command, ModelKind, OutputFormat, RunConfig};
use crate::error::{Error, Result};
use crate::exact::{cw_distribution, exact_moments, ms_distribution, MagnetizationDistribution};
use crate::experiments::{
    canonical_cases, cw_recovery_sweep, dominant_restriction, ms_case_sweep, replicate_estimates, sample_scaling_study,
    size_scaling_study, SweepCase,
};
use crate::format::num;
use crate::inversion::{estimate, EstimationResult};
use crate::linalg::Matrix;
use crate::meanfield::{chi_ms, solve_ms, unique_stable};
use crate::model::{CwParams, MagnetizationSample, Model};
use crate::sampling::{replicate_seeds, Sampler};

/// One output file, named relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: &str, contents: String) -> Self {
        Self {
            name: name.to_owned(),
            contents,
        }
    }

    fn json<T: Serialize>(name: &str, value: &T) -> Result<Self> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Numerical(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        Ok(Self::new(name, text))
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// The model named by the `model`, `N`, `J` and `h` keys.
pub fn model_of(config: &RunConfig) -> Result<Model> {
    match config.model {
        ModelKind::Cw => Ok(CwParams::new(
            config.one("N", &config.n)?,
            config.one("J", &config.j)?,
            config.one("h", &config.h)?,
        )?
        .into()),
        ModelKind::Ms => Ok(ms_params(&config.n, &config.j, &config.h)?.into()),
    }
}

fn distribution(model: &Model) -> Result<MagnetizationDistribution> {
    match model {
        Model::CurieWeiss(p) => cw_distribution(p),
        Model::MultiSpecies(p) => ms_distribution(p),
    }
}

/// Runs the command and returns its output files, manifest excluded.
pub fn execute(config: &RunConfig) -> Result<Vec<Artifact>> {
    match config.command {
        Command::Forward => forward(config),
        Command::Exact => exact(config),
        Command::Sample => sample_cmd(config),
        Command::Invert => invert(config),
        Command::StudyN => study_n(config),
        Command::StudyM => study_m(config),
        Command::SweepCw => {
            let cases = cw_recovery_sweep(
                &config.j,
                config.one("h", &config.h)?,
                config.one("N", &config.n)?,
                config.one("M", &config.m)?,
                config.r,
                config.seed,
            )?;
            sweep_artifacts("sweep_cw", &cases, config.format)
        }
        Command::SweepMs => {
            let cases = config.cases.clone().unwrap_or_else(canonical_cases);
            let swept = ms_case_sweep(&cases, config.one("M", &config.m)?, config.r, config.seed)?;
            sweep_artifacts("sweep_ms", &swept, config.format)
        }
    }
}

/// Writes `artifacts` and `manifest.json` into the output directory and
/// returns the written paths.
pub fn emit(artifacts: &[Artifact], config: &RunConfig, wall_time: Duration) -> Result<Vec<PathBuf>> {
    let dir = &config.output;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(artifacts.len() + 1);
    for a in artifacts {
        written.push(write_file(dir, &a.name, &a.contents)?);
    }
    let mut manifest = config.to_flat();
    manifest.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    manifest.insert("wall_time_seconds".into(), json!(wall_time.as_secs_f64()));
    manifest.insert(
        "outputs".into(),
        Value::Array(artifacts.iter().map(|a| json!(a.name)).collect()),
    );
    let manifest = Artifact::json("manifest.json", &manifest)?;
    written.push(write_file(dir, &manifest.name, &manifest.contents)?);
    Ok(written)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn forward(config: &RunConfig) -> Result<Vec<Artifact>> {
    let model = model_of(config)?;
    let params = model.to_multi();
    let exact = exact_moments(&distribution(&model)?);
    let alpha = params.fractions();
    let solutions = solve_ms(&alpha, &params.coupling, &params.field)?;
    let limit = match unique_stable(&solutions) {
        Ok(s) => Some((s.magnetization.clone(), chi_ms(&alpha, &params.coupling, s)?.0)),
        Err(_) => None,
    };
    if config.format == OutputFormat::Json {
        let report = json!({
            "model": model,
            "exact": exact,
            "mean_field": {
                "solutions": solutions,
                "magnetization": limit.as_ref().map(|l| &l.0),
                "chi": limit.as_ref().map(|l| &l.1),
            },
        });
        return Ok(vec![Artifact::json("forward.json", &report)?]);
    }
    let k = params.species();
    let mut out = String::from("quantity,l,s,value\n");
    let vector = |out: &mut String, name: &str, v: &[f64]| {
        for (l, x) in v.iter().enumerate() {
            let _ = writeln!(out, "{name},{},,{}", l + 1, num(*x));
        }
    };
    let matrix = |out: &mut String, name: &str, m: &Matrix| {
        for l in 0..k {
            for s in 0..k {
                let _ = writeln!(out, "{name},{},{},{}", l + 1, s + 1, num(m[(l, s)]));
            }
        }
    };
    vector(&mut out, "m_N", &exact.mean);
    matrix(&mut out, "chi_N", &exact.finite_size_chi);
    if let Some((m, chi)) = &limit {
        vector(&mut out, "m", m);
        matrix(&mut out, "chi", chi);
    }
    Ok(vec![Artifact::new("forward.csv", out)])
}

fn exact(config: &RunConfig) -> Result<Vec<Artifact>> {
    let dist = distribution(&model_of(config)?)?;
    if config.format == OutputFormat::Json {
        let cells: Vec<Value> = (0..dist.len())
            .map(|c| {
                json!({
                    "counts": dist.counts_of(c),
                    "magnetization": dist.magnetization_of(c),
                    "probability": dist.probabilities()[c],
                })
            })
            .collect();
        let doc = json!({"model": dist.model(), "cells": cells});
        return Ok(vec![Artifact::json("distribution.json", &doc)?]);
    }
    let mut buf = Vec::new();
    dist.write_csv(&mut buf).map_err(|e| Error::io("distribution.csv", e))?;
    Ok(vec![Artifact::new(
        "distribution.csv",
        String::from_utf8(buf).expect("CSV output is ASCII"),
    )])
}

/// Replicate samples as drawn by `invert`: seeds `replicate_seeds(seed, R)`,
/// restricted to the dominant well when there are several.
fn draw_replicates(config: &RunConfig, model: &Model) -> Result<Vec<MagnetizationSample>> {
    let dist = distribution(model)?;
    let restricted = dominant_restriction(&dist)?;
    let sampler = Sampler::new(restricted.as_ref().unwrap_or(&dist))?;
    let m = config.one("M", &config.m)?;
    replicate_seeds(config.seed, config.r)?
        .into_iter()
        .map(|s| sampler.draw(m, s))
        .collect()
}

fn sample_cmd(config: &RunConfig) -> Result<Vec<Artifact>> {
    let model = model_of(config)?;
    let samples = draw_replicates(config, &model)?;
    if config.format == OutputFormat::Json {
        let reps: Vec<Vec<Vec<f64>>> = samples.iter().map(|s| s.magnetizations().collect()).collect();
        let doc = json!({"group_sizes": model.group_sizes(), "replicates": reps});
        return Ok(vec![Artifact::json("samples.json", &doc)?]);
    }
    let k = model.species();
    let mut out = String::from("replicate,draw_index");
    for l in 1..=k {
        let _ = write!(out, ",m_{l}");
    }
    out.push('\n');
    for (r, s) in samples.iter().enumerate() {
        for (i, m) in s.magnetizations().enumerate() {
            let _ = write!(out, "{r},{i}");
            for x in m {
                let _ = write!(out, ",{}", num(x));
            }
            out.push('\n');
        }
    }
    Ok(vec![Artifact::new("samples.csv", out)])
}

/// Reads a `replicate,draw_index,m_1..m_k` file into one sample per
/// replicate, in order of first appearance.
pub fn read_samples(path: &Path, group_sizes: &[usize]) -> Result<Vec<MagnetizationSample>> {
    let bad = |msg: String| Error::InvalidSample(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => bad(format!("{other:?}")),
    })?;
    let k = group_sizes.len();
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let expected: Vec<String> = ["replicate".to_owned(), "draw_index".to_owned()]
        .into_iter()
        .chain((1..=k).map(|l| format!("m_{l}")))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(bad(format!("expected header `{}`", expected.join(","))));
    }
    let mut ids: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let id = rec[0].to_owned();
        let values = (2..2 + k)
            .map(|c| {
                rec[c]
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("row {}: `{}` is not a number", line + 2, &rec[c])))
            })
            .collect::<Result<Vec<_>>>()?;
        let slot = match ids.iter().position(|x| *x == id) {
            Some(p) => p,
            None => {
                ids.push(id);
                rows.push(Vec::new());
                rows.len() - 1
            }
        };
        rows[slot].push(values);
    }
    if rows.is_empty() {
        return Err(bad("no samples".into()));
    }
    rows.iter()
        .map(|r| MagnetizationSample::from_magnetizations(group_sizes.to_vec(), r))
        .collect()
}

fn invert(config: &RunConfig) -> Result<Vec<Artifact>> {
    let result = match &config.input {
        Some(path) => {
            let samples = read_samples(path, &config.n)?;
            EstimationResult::from_replicates(samples.iter().map(estimate).collect::<Result<Vec<_>>>()?)?
        }
        None => {
            let dist = distribution(&model_of(config)?)?;
            replicate_estimates(&dist, config.one("M", &config.m)?, config.r, config.seed)?
        }
    };
    let mut files = vec![Artifact::json("invert.json", &result)?];
    if config.format == OutputFormat::Csv {
        files.push(Artifact::new("estimates.csv", estimates_csv(&result)));
    }
    Ok(files)
}

fn estimates_csv(result: &EstimationResult) -> String {
    let k = result.mean.m_exp.len();
    let mut out = String::from("replicate");
    for l in 1..=k {
        let _ = write!(out, ",m_{l}");
    }
    for name in ["chi", "J"] {
        for l in 1..=k {
            for s in 1..=k {
                let _ = write!(out, ",{name}_{l}_{s}");
            }
        }
    }
    for l in 1..=k {
        let _ = write!(out, ",h_{l}");
    }
    out.push('\n');
    for (r, e) in result.per_replicate.iter().enumerate() {
        let v = &e.values;
        let _ = write!(out, "{r}");
        let all = v
            .m_exp
            .iter()
            .chain(v.chi_exp.as_slice())
            .chain(v.j_exp.as_slice())
            .chain(&v.h_exp);
        for x in all {
            let _ = write!(out, ",{}", num(*x));
        }
        out.push('\n');
    }
    out
}

fn study_n(config: &RunConfig) -> Result<Vec<Artifact>> {
    let study = size_scaling_study(config.one("J", &config.j)?, config.one("h", &config.h)?, &config.n)?;
    if config.format == OutputFormat::Json {
        return Ok(vec![Artifact::json("study_n.json", &study)?]);
    }
    let mut out = String::from("N,m_N,chi_N,abs_err_m,abs_err_chi\n");
    for r in &study.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.n,
            num(r.m_n),
            num(r.chi_n),
            num(r.abs_err_m),
            num(r.abs_err_chi)
        );
    }
    let fit = json!({
        "coupling": study.coupling,
        "field": study.field,
        "m_limit": study.m_limit,
        "chi_limit": study.chi_limit,
        "m_fit": study.m_fit,
        "chi_fit": study.chi_fit,
    });
    Ok(vec![
        Artifact::new("study_n.csv", out),
        Artifact::json("study_n_fit.json", &fit)?,
    ])
}

fn study_m(config: &RunConfig) -> Result<Vec<Artifact>> {
    let params = CwParams::new(
        config.one("N", &config.n)?,
        config.one("J", &config.j)?,
        config.one("h", &config.h)?,
    )?;
    let study = sample_scaling_study(&params, &config.m, config.r, config.seed)?;
    if config.format == OutputFormat::Json {
        return Ok(vec![Artifact::json("study_m.json", &study)?]);
    }
    let mut out = String::from("M,std_m_exp,std_chi_exp\n");
    for r in &study.rows {
        let _ = writeln!(out, "{},{},{}", r.sample_count, num(r.std_m), num(r.std_chi));
    }
    let fit = json!({
        "params": study.params,
        "replicates": study.replicates,
        "base_seed": study.base_seed,
        "m_fit": study.m_fit,
        "chi_fit": study.chi_fit,
        "m_decay_exponent": -study.m_fit.exponent,
        "chi_decay_exponent": -study.chi_fit.exponent,
    });
    Ok(vec![
        Artifact::new("study_m.csv", out),
        Artifact::json("study_m_fit.json", &fit)?,
    ])
}

fn sweep_artifacts(stem: &str, cases: &[SweepCase], format: OutputFormat) -> Result<Vec<Artifact>> {
    if format == OutputFormat::Json {
        return Ok(vec![Artifact::json(&format!("{stem}.json"), &cases)?]);
    }
    let mut summary = String::from("case_id,j_distance,h_distance,max_pct_error,max_pct_error_j,max_pct_error_h\n");
    let mut entries = String::from("case_id,parameter,l,s,true,mean,std\n");
    for c in cases {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{}",
            c.case_id,
            num(c.j_distance),
            num(c.h_distance),
            opt(c.max_pct_error),
            opt(c.max_pct_error_j),
            opt(c.max_pct_error_h)
        );
        let j = c.true_coupling();
        let h = c.true_field();
        let mean = &c.result.mean;
        let std = c.result.std.as_ref();
        for l in 0..j.dim() {
            for s in l..j.dim() {
                let _ = writeln!(
                    entries,
                    "{},J,{},{},{},{},{}",
                    c.case_id,
                    l + 1,
                    s + 1,
                    num(j[(l, s)]),
                    num(mean.j_exp[(l, s)]),
                    opt(std.map(|p| p.j_exp[(l, s)]))
                );
            }
        }
        for (l, &hl) in h.iter().enumerate() {
            let _ = writeln!(
                entries,
                "{},h,{},,{},{},{}",
                c.case_id,
                l + 1,
                num(hl),
                num(mean.h_exp[l]),
                opt(std.map(|p| p.h_exp[l]))
            );
        }
    }
    Ok(vec![
        Artifact::new(&format!("{stem}.csv"), summary),
        Artifact::new(&format!("{stem}_entries.csv"), entries),
    ])
}
