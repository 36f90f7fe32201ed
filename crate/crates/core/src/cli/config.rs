//! Run configuration: a flat JSON document, overridden by command-line flags.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::MsParams;

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "MFSPIN_OUTPUT_DIR";
/// Output directory when neither `--output` nor the environment sets one.
pub const DEFAULT_OUTPUT: &str = "mfspin-out";
pub const DEFAULT_SEED: u64 = 20_190_101;
pub const DEFAULT_REPLICATES: usize = 20;

/// Keys a manifest adds on top of the configuration. Accepted and ignored.
const MANIFEST_KEYS: [&str; 3] = ["version", "wall_time_seconds", "outputs"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Exact finite-size moments and mean-field limit.
    Forward,
    /// Full magnetization distribution.
    Exact,
    /// Draw replicate samples.
    Sample,
    /// Estimate J and h from samples.
    Invert,
    /// Finite-size scaling of m_N and chi_N.
    #[value(name = "study-n")]
    StudyN,
    /// Estimator noise versus sample size.
    #[value(name = "study-m")]
    StudyM,
    /// Curie-Weiss recovery over a coupling grid.
    #[value(name = "sweep-cw")]
    SweepCw,
    /// Two-species recovery over a case list.
    #[value(name = "sweep-ms")]
    SweepMs,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Forward => "forward",
            Command::Exact => "exact",
            Command::Sample => "sample",
            Command::Invert => "invert",
            Command::StudyN => "study-n",
            Command::StudyM => "study-m",
            Command::SweepCw => "sweep-cw",
            Command::SweepMs => "sweep-ms",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Self::value_variants().iter().copied().find(|c| c.name() == name)
    }

    fn list() -> String {
        Self::value_variants()
            .iter()
            .map(|c| c.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ModelKind {
    #[default]
    Cw,
    Ms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn value_name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_owned()
}

fn enum_from<T: ValueEnum>(key: &str, s: &str) -> Result<T> {
    T::from_str(s, false).map_err(|_| {
        let allowed: Vec<String> = T::value_variants().iter().cloned().map(value_name).collect();
        Error::Usage(format!("key `{key}`: `{s}` is not one of {}", allowed.join(", ")))
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelKind,
    /// Spin count, group sizes, or the size list of `study-n`.
    pub n: Vec<usize>,
    /// Coupling, row-major coupling matrix, or the grid of `sweep-cw`.
    pub j: Vec<f64>,
    pub h: Vec<f64>,
    /// Sample size, or the list of `study-m`.
    pub m: Vec<usize>,
    pub r: usize,
    pub seed: u64,
    pub output: PathBuf,
    pub format: OutputFormat,
    /// Samples CSV read by `invert`.
    pub input: Option<PathBuf>,
    /// Case list of `sweep-ms`; the canonical list when absent.
    pub cases: Option<Vec<MsParams>>,
}

#[derive(Debug, Parser)]
#[command(
    name = "mfspin",
    version,
    about = "Exact finite-size equilibrium and parameter estimation for mean-field spin models",
    arg_required_else_help = true
)]
struct Cli {
    /// Command to run
    #[arg(value_enum)]
    command: Option<Command>,
    /// Flat JSON configuration file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Spin count, comma-separated group sizes, or size list
    #[arg(long = "N", value_name = "N")]
    n: Option<String>,
    /// Coupling, comma-separated row-major matrix, or coupling grid
    #[arg(long = "J", value_name = "J", allow_hyphen_values = true)]
    j: Option<String>,
    /// Field or comma-separated field vector
    #[arg(long = "h", value_name = "H", allow_hyphen_values = true)]
    h: Option<String>,
    /// Sample size or comma-separated list
    #[arg(long = "M", value_name = "M")]
    m: Option<String>,
    /// Replicates per point
    #[arg(long = "R", value_name = "R")]
    r: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Samples CSV for `invert`
    #[arg(long)]
    input: Option<PathBuf>,
    /// JSON case list for `sweep-ms`
    #[arg(long)]
    cases: Option<PathBuf>,
}

/// Parses `argv` (program name first) into a validated configuration.
pub fn parse_config<I, T>(argv: I) -> Result<RunConfig>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Usage(e.render().to_string()))?;
    from_cli(cli)
}

/// Parses a flat JSON configuration document (or a manifest).
pub fn parse_config_text(text: &str) -> Result<RunConfig> {
    from_flat(parse_flat(text)?, None)
}

pub(crate) fn try_parse(argv: Vec<std::ffi::OsString>) -> std::result::Result<Result<RunConfig>, clap::Error> {
    Cli::try_parse_from(argv).map(from_cli)
}

fn parse_flat(text: &str) -> Result<Map<String, Value>> {
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(Error::Usage("configuration must be a JSON object".into())),
        Err(e) => Err(Error::Usage(format!("configuration is not valid JSON: {e}"))),
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn from_cli(cli: Cli) -> Result<RunConfig> {
    let (mut flat, base) = match &cli.config {
        Some(path) => (parse_flat(&read_text(path)?)?, path.parent().map(Path::to_path_buf)),
        None => (Map::new(), None),
    };
    let mut set = |key: &str, v: Option<Value>| {
        if let Some(v) = v {
            flat.insert(key.to_owned(), v);
        }
    };
    set("command", cli.command.map(|c| json!(c.name())));
    set("model", cli.model.map(|m| json!(value_name(m))));
    set("N", cli.n.as_deref().map(|s| flag_numbers("N", s)).transpose()?);
    set("J", cli.j.as_deref().map(|s| flag_numbers("J", s)).transpose()?);
    set("h", cli.h.as_deref().map(|s| flag_numbers("h", s)).transpose()?);
    set("M", cli.m.as_deref().map(|s| flag_numbers("M", s)).transpose()?);
    set("R", cli.r.as_deref().map(|s| flag_numbers("R", s)).transpose()?);
    set(
        "seed",
        cli.seed.as_deref().map(|s| flag_numbers("seed", s)).transpose()?,
    );
    set("output", cli.output.map(|p| json!(p)));
    set("format", cli.format.map(|f| json!(value_name(f))));
    set("input", cli.input.map(|p| json!(p)));
    // A case file named on the command line is resolved from the working
    // directory, one named in a config file from the file's directory.
    let cases_from_cli = cli.cases.is_some();
    set("cases", cli.cases.map(|p| json!(p)));
    from_flat(flat, if cases_from_cli { None } else { base })
}

/// A flag value as JSON: one number, or an array for comma-separated input.
fn flag_numbers(key: &str, s: &str) -> Result<Value> {
    let parse = |t: &str| -> Result<Value> {
        let t = t.trim();
        if let Ok(u) = t.parse::<u64>() {
            return Ok(json!(u));
        }
        if let Ok(i) = t.parse::<i64>() {
            return Ok(json!(i));
        }
        match t.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(json!(x)),
            _ => Err(Error::Usage(format!("key `{key}`: `{t}` is not a number"))),
        }
    };
    if s.contains(',') {
        s.split(',').map(parse).collect::<Result<Vec<_>>>().map(Value::Array)
    } else {
        parse(s)
    }
}

fn mismatch(key: &str, want: &str, got: &Value) -> Error {
    Error::Usage(format!("key `{key}`: expected {want}, got {got}"))
}

fn as_string<'a>(key: &str, v: &'a Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| mismatch(key, "a string", v))
}

fn as_uint(key: &str, v: &Value) -> Result<u64> {
    if let Some(u) = v.as_u64() {
        return Ok(u);
    }
    // Integral floats such as `1e4` are accepted.
    match v.as_f64() {
        Some(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) => Ok(x as u64),
        _ => Err(mismatch(key, "a non-negative integer", v)),
    }
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    usize::try_from(as_uint(key, v)?).map_err(|_| mismatch(key, "a smaller integer", v))
}

fn as_real(key: &str, v: &Value) -> Result<f64> {
    v.as_f64().ok_or_else(|| mismatch(key, "a number", v))
}

fn list<T>(key: &str, v: &Value, item: impl Fn(&str, &Value) -> Result<T>) -> Result<Vec<T>> {
    match v {
        Value::Array(xs) => xs.iter().map(|x| item(key, x)).collect(),
        other => Ok(vec![item(key, other)?]),
    }
}

/// A coupling matrix given as nested rows or as a flat row-major list.
fn matrix_list(key: &str, v: &Value) -> Result<Vec<f64>> {
    match v {
        Value::Array(xs) if xs.iter().all(Value::is_array) => {
            let mut flat = Vec::new();
            for row in xs {
                flat.extend(list(key, row, as_real)?);
            }
            Ok(flat)
        }
        other => list(key, other, as_real),
    }
}

fn parse_cases(v: &Value, base: Option<&Path>) -> Result<Vec<MsParams>> {
    match v {
        Value::String(path) => {
            let path = match base {
                Some(b) if Path::new(path).is_relative() => b.join(path),
                _ => PathBuf::from(path),
            };
            let text = read_text(&path)?;
            let doc: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Usage(format!("{}: not valid JSON: {e}", path.display())))?;
            parse_cases(&doc, None)
        }
        Value::Array(items) => items
            .iter()
            .enumerate()
            .map(|(i, item)| parse_case(i + 1, item))
            .collect(),
        other => Err(mismatch("cases", "a path or an array of cases", other)),
    }
}

fn parse_case(id: usize, v: &Value) -> Result<MsParams> {
    let obj = v.as_object().ok_or_else(|| mismatch("cases", "case objects", v))?;
    let field = |k: &str| {
        obj.get(k)
            .ok_or_else(|| Error::Usage(format!("key `cases`: case {id} is missing `{k}`")))
    };
    if let Some(k) = obj.keys().find(|k| !["N", "J", "h"].contains(&k.as_str())) {
        return Err(Error::Usage(format!("key `cases`: case {id} has unknown key `{k}`")));
    }
    let sizes = list("N", field("N")?, as_usize)?;
    let j = matrix_list("J", field("J")?)?;
    let h = list("h", field("h")?, as_real)?;
    ms_params(&sizes, &j, &h).map_err(|e| Error::Usage(format!("key `cases`: case {id}: {e}")))
}

/// Builds two-or-more species parameters from flat lists.
pub fn ms_params(sizes: &[usize], j: &[f64], h: &[f64]) -> Result<MsParams> {
    let k = sizes.len();
    if j.len() != k * k {
        return Err(Error::InvalidParams(format!(
            "{k} groups need a {k}x{k} coupling matrix ({} entries), got {}",
            k * k,
            j.len()
        )));
    }
    MsParams::new(sizes.to_vec(), Matrix::from_fn(k, |a, b| j[a * k + b]), h.to_vec())
}

fn from_flat(flat: Map<String, Value>, base: Option<PathBuf>) -> Result<RunConfig> {
    let known = [
        "command", "model", "N", "J", "h", "M", "R", "seed", "output", "format", "input", "cases",
    ];
    if let Some(k) = flat
        .keys()
        .find(|k| !known.contains(&k.as_str()) && !MANIFEST_KEYS.contains(&k.as_str()))
    {
        return Err(Error::Usage(format!("unknown key `{k}`")));
    }
    let get = |k: &str| flat.get(k).filter(|v| !v.is_null());
    let command = match get("command") {
        Some(v) => {
            let name = as_string("command", v)?;
            Command::from_name(name).ok_or_else(|| {
                Error::Usage(format!(
                    "key `command`: unknown command `{name}`; expected one of {}",
                    Command::list()
                ))
            })?
        }
        None => {
            return Err(Error::Usage(format!(
                "missing command; expected one of {}",
                Command::list()
            )));
        }
    };
    let model = match get("model") {
        Some(v) => enum_from("model", as_string("model", v)?)?,
        None => ModelKind::default(),
    };
    let format = match get("format") {
        Some(v) => enum_from("format", as_string("format", v)?)?,
        None => OutputFormat::default(),
    };
    let n = get("N")
        .map(|v| list("N", v, as_usize))
        .transpose()?
        .unwrap_or_default();
    let j = get("J").map(|v| matrix_list("J", v)).transpose()?.unwrap_or_default();
    let h = get("h").map(|v| list("h", v, as_real)).transpose()?.unwrap_or_default();
    let m = get("M")
        .map(|v| list("M", v, as_usize))
        .transpose()?
        .unwrap_or_default();
    let r = get("R")
        .map(|v| as_usize("R", v))
        .transpose()?
        .unwrap_or(DEFAULT_REPLICATES);
    let seed = get("seed")
        .map(|v| as_uint("seed", v))
        .transpose()?
        .unwrap_or(DEFAULT_SEED);
    let output = match get("output") {
        Some(v) => PathBuf::from(as_string("output", v)?),
        None => std::env::var_os(OUTPUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
    };
    let input = get("input")
        .map(|v| as_string("input", v).map(PathBuf::from))
        .transpose()?;
    let cases = get("cases").map(|v| parse_cases(v, base.as_deref())).transpose()?;

    let config = RunConfig {
        command,
        model,
        n,
        j,
        h,
        m,
        r,
        seed,
        output,
        format,
        input,
        cases,
    };
    config.check_required()?;
    Ok(config)
}

impl RunConfig {
    fn check_required(&self) -> Result<()> {
        use Command::*;
        let missing = |key: &str| Error::Usage(format!("{} requires key `{key}`", self.command.name()));
        let model_keys = |this: &Self| -> Result<()> {
            if this.n.is_empty() {
                return Err(missing("N"));
            }
            if this.j.is_empty() {
                return Err(missing("J"));
            }
            if this.h.is_empty() {
                return Err(missing("h"));
            }
            Ok(())
        };
        match self.command {
            Forward | Exact | StudyN | SweepCw => model_keys(self)?,
            Sample | StudyM => {
                model_keys(self)?;
                if self.m.is_empty() {
                    return Err(missing("M"));
                }
            }
            Invert => {
                if self.n.is_empty() {
                    return Err(missing("N"));
                }
                if self.input.is_none() {
                    model_keys(self)?;
                    if self.m.is_empty() {
                        return Err(missing("M"));
                    }
                }
            }
            SweepMs => {}
        }
        if matches!(self.command, SweepCw | SweepMs) && self.m.is_empty() {
            return Err(missing("M"));
        }
        if matches!(self.command, StudyN | StudyM | SweepCw) && self.model != ModelKind::Cw {
            return Err(Error::Usage(format!(
                "{} runs the Curie-Weiss model only",
                self.command.name()
            )));
        }
        Ok(())
    }

    /// The flat JSON form; `parse_config_text` of it gives back `self`.
    pub fn to_flat(&self) -> Map<String, Value> {
        let mut out = Map::new();
        out.insert("command".into(), json!(self.command.name()));
        out.insert("model".into(), json!(value_name(self.model)));
        let mut put = |k: &str, v: Value| {
            out.insert(k.into(), v);
        };
        if !self.n.is_empty() {
            put("N", json!(self.n));
        }
        if !self.j.is_empty() {
            put("J", json!(self.j));
        }
        if !self.h.is_empty() {
            put("h", json!(self.h));
        }
        if !self.m.is_empty() {
            put("M", json!(self.m));
        }
        put("R", json!(self.r));
        put("seed", json!(self.seed));
        put("output", json!(self.output));
        put("format", json!(value_name(self.format)));
        if let Some(p) = &self.input {
            put("input", json!(p));
        }
        if let Some(cases) = &self.cases {
            let items: Vec<Value> = cases
                .iter()
                .map(|c| json!({"N": c.group_sizes, "J": c.coupling.as_slice(), "h": c.field}))
                .collect();
            put("cases", Value::Array(items));
        }
        out
    }

    /// Single value of a list key.
    pub(crate) fn one<T: Copy>(&self, key: &str, values: &[T]) -> Result<T> {
        match values {
            [x] => Ok(*x),
            _ => Err(Error::Usage(format!(
                "{} needs a single value for `{key}`, got {}",
                self.command.name(),
                values.len()
            ))),
        }
    }
}
