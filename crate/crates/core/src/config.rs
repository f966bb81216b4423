//! Run configuration.
//!
//! A run is described by a flat TOML file. Every key is optional; missing
//! keys take the reference-design defaults, and command-line overrides win
//! over the file. The fully resolved configuration can be written back out
//! so each output directory records exactly what produced it.
//!
//! ```toml
//! mode = "dependency"            # or "independent"
//! k_values = "2..20"             # inclusive range string, or [2, 3, 5]
//! profile = ["small", "large"]   # dependency mode; names or
//!                                # { k_min = 2, k_max = 20, sigma_start = 0.05, sigma_end = 0.5 }
//! sigma_values = [0.1, 0.5]      # independent mode only
//! items_values = [1, 3]
//! sample_sizes = [100, 500, 1000]
//! replications = 500
//! master_seed = 20241016
//! predictor_coefficient = 0.5
//! predictor_noise_sd = 0.2
//! output_dir = "results"
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::dependency::{profile_for, DependencyProfile, ProfileName};
use crate::engine::{ConditionCell, PredictorSpec};
use crate::error::{Error, Result};

pub const RESOLVED_CONFIG_FILE: &str = "resolved-config.toml";
pub const DEFAULT_REPLICATIONS: u32 = 500;
pub const QUICK_REPLICATIONS: u32 = 50;
pub const DEFAULT_MASTER_SEED: u64 = 20241016;
pub const DEFAULT_OUTPUT_DIR: &str = "results";

const KNOWN_KEYS: &[&str] = &[
    "mode",
    "k_values",
    "sigma_values",
    "profile",
    "items_values",
    "sample_sizes",
    "replications",
    "master_seed",
    "predictor_coefficient",
    "predictor_noise_sd",
    "output_dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Sigma is a crossed factor, unrelated to K.
    Independent,
    /// Sigma is a function of K given by one or more profiles.
    Dependency,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Independent => "independent",
            Mode::Dependency => "dependency",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Named(ProfileName),
    Custom {
        k_min: u32,
        k_max: u32,
        sigma_start: f64,
        sigma_end: f64,
    },
}

impl ProfileSpec {
    pub fn profile(&self) -> DependencyProfile {
        match *self {
            ProfileSpec::Named(name) => profile_for(name),
            ProfileSpec::Custom {
                k_min,
                k_max,
                sigma_start,
                sigma_end,
            } => DependencyProfile::Linear {
                k_min,
                k_max,
                sigma_start,
                sigma_end,
            },
        }
    }

    /// Series name used in curve tables and chart legends.
    pub fn label(&self) -> String {
        match *self {
            ProfileSpec::Named(name) => name.to_string(),
            ProfileSpec::Custom {
                k_min,
                k_max,
                sigma_start,
                sigma_end,
            } => format!("linear {sigma_start:?}-{sigma_end:?} over K {k_min}-{k_max}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub k_values: Vec<u32>,
    /// Independent mode only; empty otherwise.
    pub sigma_values: Vec<f64>,
    /// Dependency mode only; empty otherwise.
    pub profiles: Vec<ProfileSpec>,
    pub items_values: Vec<u32>,
    pub sample_sizes: Vec<u32>,
    pub replications: u32,
    pub master_seed: u64,
    pub predictor: PredictorSpec,
    pub output_dir: PathBuf,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub master_seed: Option<u64>,
    pub replications: Option<u32>,
    pub output_dir: Option<PathBuf>,
    /// Use the quick replication count unless `replications` is also given.
    pub quick: bool,
}

fn type_error(field: &str, expected: &str, got: &Value) -> Error {
    Error::config(
        field,
        format!("expected {expected}, got {}", got.type_str()),
    )
}

fn as_int(field: &str, v: &Value) -> Result<i64> {
    v.as_integer()
        .ok_or_else(|| type_error(field, "an integer", v))
}

fn as_float(field: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(type_error(field, "a number", other)),
    }
}

fn as_u32(field: &str, v: &Value, min: u32) -> Result<u32> {
    let i = as_int(field, v)?;
    if i < min as i64 || i > u32::MAX as i64 {
        return Err(Error::config(
            field,
            format!("must be an integer >= {min}, got {i}"),
        ));
    }
    Ok(i as u32)
}

fn as_array<'a>(field: &str, v: &'a Value) -> Result<&'a Vec<Value>> {
    let arr = v
        .as_array()
        .ok_or_else(|| type_error(field, "an array", v))?;
    if arr.is_empty() {
        return Err(Error::config(field, "list must not be empty"));
    }
    Ok(arr)
}

fn u32_list(field: &str, v: &Value, min: u32) -> Result<Vec<u32>> {
    let arr = as_array(field, v)?;
    let mut seen = HashSet::new();
    arr.iter()
        .enumerate()
        .map(|(i, x)| {
            let path = format!("{field}[{i}]");
            let n = as_u32(&path, x, min)?;
            if !seen.insert(n) {
                return Err(Error::config(path, format!("duplicate value {n}")));
            }
            Ok(n)
        })
        .collect()
}

fn parse_k_values(v: &Value) -> Result<Vec<u32>> {
    const FIELD: &str = "k_values";
    match v {
        Value::String(s) => {
            let (lo, hi) = s
                .split_once("..=")
                .or_else(|| s.split_once(".."))
                .ok_or_else(|| {
                    Error::config(FIELD, format!("range must look like `2..100`, got `{s}`"))
                })?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::config(FIELD, format!("bad range bound `{t}`")))
            };
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if lo < 2 {
                return Err(Error::config(FIELD, "K must be at least 2"));
            }
            if hi < lo {
                return Err(Error::config(FIELD, format!("empty range {lo}..{hi}")));
            }
            Ok((lo..=hi).collect())
        }
        Value::Array(_) => u32_list(FIELD, v, 2),
        other => Err(type_error(
            FIELD,
            "an integer list or a range string",
            other,
        )),
    }
}

fn parse_sigma_values(v: &Value) -> Result<Vec<f64>> {
    let arr = as_array("sigma_values", v)?;
    let mut out: Vec<f64> = Vec::with_capacity(arr.len());
    for (i, x) in arr.iter().enumerate() {
        let path = format!("sigma_values[{i}]");
        let s = as_float(&path, x)?;
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::config(path, format!("sigma must be > 0, got {s}")));
        }
        if out.contains(&s) {
            return Err(Error::config(path, format!("duplicate value {s}")));
        }
        out.push(s);
    }
    Ok(out)
}

fn parse_profile_entry(field: &str, v: &Value) -> Result<ProfileSpec> {
    match v {
        Value::String(name) => name
            .parse::<ProfileName>()
            .map(ProfileSpec::Named)
            .map_err(|e| Error::config(field, e.to_string())),
        Value::Table(t) => {
            for key in t.keys() {
                if !["k_min", "k_max", "sigma_start", "sigma_end"].contains(&key.as_str()) {
                    return Err(Error::config(
                        format!("{field}.{key}"),
                        "unknown key (custom profiles are increasing linear maps: k_min, k_max, sigma_start, sigma_end)",
                    ));
                }
            }
            let k_min = match t.get("k_min") {
                Some(x) => as_u32(&format!("{field}.k_min"), x, 0)?,
                None => 2,
            };
            let k_max = match t.get("k_max") {
                Some(x) => as_u32(&format!("{field}.k_max"), x, 0)?,
                None => 20,
            };
            let required = |key: &str| -> Result<f64> {
                let path = format!("{field}.{key}");
                let x = t
                    .get(key)
                    .ok_or_else(|| Error::config(path.as_str(), "missing"))?;
                as_float(&path, x)
            };
            let sigma_start = required("sigma_start")?;
            let sigma_end = required("sigma_end")?;
            DependencyProfile::linear(k_min, k_max, sigma_start, sigma_end)
                .map_err(|e| Error::config(field, e.to_string()))?;
            Ok(ProfileSpec::Custom {
                k_min,
                k_max,
                sigma_start,
                sigma_end,
            })
        }
        other => Err(type_error(field, "a profile name or table", other)),
    }
}

fn parse_profiles(v: &Value) -> Result<Vec<ProfileSpec>> {
    let specs = match v {
        Value::Array(_) => as_array("profile", v)?
            .iter()
            .enumerate()
            .map(|(i, x)| parse_profile_entry(&format!("profile[{i}]"), x))
            .collect::<Result<Vec<_>>>()?,
        single => vec![parse_profile_entry("profile", single)?],
    };
    for (i, s) in specs.iter().enumerate() {
        if specs[..i].contains(s) {
            return Err(Error::config(format!("profile[{i}]"), "duplicate profile"));
        }
    }
    Ok(specs)
}

fn parse_seed(v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::String(s) => s.parse::<u64>().map_err(|_| {
            Error::config(
                "master_seed",
                format!("not an unsigned 64-bit integer: `{s}`"),
            )
        }),
        other => Err(type_error("master_seed", "a non-negative integer", other)),
    }
}

fn default_sigmas() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

/// Parse and validate configuration text, then apply overrides.
pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<RunConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::config("<file>", e.message().to_string()))?;
    from_table(&table, overrides)
}

/// Read and validate a config file; `None` gives the all-defaults config.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_config_str(&text, overrides)
        }
        None => from_table(&Table::new(), overrides),
    }
}

fn from_table(t: &Table, ov: &Overrides) -> Result<RunConfig> {
    if let Some(key) = t.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Error::config(key.as_str(), "unknown key"));
    }

    let mode = match t.get("mode") {
        None => Mode::Independent,
        Some(Value::String(s)) if s == "independent" => Mode::Independent,
        Some(Value::String(s)) if s == "dependency" => Mode::Dependency,
        Some(Value::String(s)) => {
            return Err(Error::config(
                "mode",
                format!("expected `independent` or `dependency`, got `{s}`"),
            ))
        }
        Some(other) => return Err(type_error("mode", "a string", other)),
    };

    let (sigma_values, profiles) = match mode {
        Mode::Independent => {
            if t.contains_key("profile") {
                return Err(Error::config("profile", "only valid in dependency mode"));
            }
            let sigmas = match t.get("sigma_values") {
                Some(v) => parse_sigma_values(v)?,
                None => default_sigmas(),
            };
            (sigmas, Vec::new())
        }
        Mode::Dependency => {
            if t.contains_key("sigma_values") {
                return Err(Error::config(
                    "sigma_values",
                    "only valid in independent mode (dependency mode derives sigma from the profile)",
                ));
            }
            let profiles = match t.get("profile") {
                Some(v) => parse_profiles(v)?,
                None => ProfileName::ALL
                    .iter()
                    .map(|&n| ProfileSpec::Named(n))
                    .collect(),
            };
            (Vec::new(), profiles)
        }
    };

    let k_values = match (t.get("k_values"), mode) {
        (Some(v), _) => parse_k_values(v)?,
        (None, Mode::Independent) => (2..=100).collect(),
        (None, Mode::Dependency) => {
            // common domain of every profile
            let (mut lo, mut hi) = (2u32, u32::MAX);
            for p in &profiles {
                if let Some(r) = p.profile().k_range() {
                    lo = lo.max(*r.start());
                    hi = hi.min(*r.end());
                }
            }
            if lo > hi {
                return Err(Error::config(
                    "k_values",
                    "profiles share no K values; set k_values explicitly",
                ));
            }
            (lo..=hi).collect()
        }
    };

    let items_values = match t.get("items_values") {
        Some(v) => u32_list("items_values", v, 1)?,
        None => vec![1, 3],
    };
    let sample_sizes = match t.get("sample_sizes") {
        Some(v) => u32_list("sample_sizes", v, 10)?,
        None => vec![100, 500, 1000],
    };
    let file_reps = match t.get("replications") {
        Some(v) => Some(as_u32("replications", v, 1)?),
        None => None,
    };
    let replications = match (ov.replications, ov.quick, file_reps) {
        (Some(r), _, _) => {
            if r < 1 {
                return Err(Error::config("replications", "must be at least 1"));
            }
            r
        }
        (None, true, _) => QUICK_REPLICATIONS,
        (None, false, Some(r)) => r,
        (None, false, None) => DEFAULT_REPLICATIONS,
    };
    let master_seed = match (ov.master_seed, t.get("master_seed")) {
        (Some(s), _) => s,
        (None, Some(v)) => parse_seed(v)?,
        (None, None) => DEFAULT_MASTER_SEED,
    };

    let coefficient = match t.get("predictor_coefficient") {
        Some(v) => as_float("predictor_coefficient", v)?,
        None => PredictorSpec::default().coefficient(),
    };
    let noise_sd = match t.get("predictor_noise_sd") {
        Some(v) => as_float("predictor_noise_sd", v)?,
        None => PredictorSpec::default().noise_sd(),
    };
    if !coefficient.is_finite() {
        return Err(Error::config("predictor_coefficient", "must be finite"));
    }
    if !(noise_sd.is_finite() && noise_sd > 0.0) {
        return Err(Error::config(
            "predictor_noise_sd",
            format!("must be > 0, got {noise_sd}"),
        ));
    }
    let predictor = PredictorSpec::new(coefficient, noise_sd)?;

    let output_dir = match (&ov.output_dir, t.get("output_dir")) {
        (Some(p), _) => p.clone(),
        (None, Some(Value::String(s))) => PathBuf::from(s),
        (None, Some(other)) => return Err(type_error("output_dir", "a string", other)),
        (None, None) => PathBuf::from(DEFAULT_OUTPUT_DIR),
    };

    Ok(RunConfig {
        mode,
        k_values,
        sigma_values,
        profiles,
        items_values,
        sample_sizes,
        replications,
        master_seed,
        predictor,
        output_dir,
    })
}

fn fmt_f64(x: f64) -> String {
    // Debug gives the shortest round-tripping form, which is valid TOML.
    format!("{x:?}")
}

fn fmt_list<T>(xs: &[T], f: impl Fn(&T) -> String) -> String {
    let items: Vec<String> = xs.iter().map(f).collect();
    format!("[{}]", items.join(", "))
}

impl RunConfig {
    /// Resolved configuration as TOML; parsing it back yields an equal config.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# resolved run configuration");
        let _ = writeln!(s, "mode = \"{}\"", self.mode.as_str());
        let _ = writeln!(
            s,
            "k_values = {}",
            fmt_list(&self.k_values, |k| k.to_string())
        );
        match self.mode {
            Mode::Independent => {
                let _ = writeln!(
                    s,
                    "sigma_values = {}",
                    fmt_list(&self.sigma_values, |x| fmt_f64(*x))
                );
            }
            Mode::Dependency => {
                let entries = fmt_list(&self.profiles, |p| match *p {
                    ProfileSpec::Named(n) => format!("\"{n}\""),
                    ProfileSpec::Custom {
                        k_min,
                        k_max,
                        sigma_start,
                        sigma_end,
                    } => format!(
                        "{{ k_min = {k_min}, k_max = {k_max}, sigma_start = {}, sigma_end = {} }}",
                        fmt_f64(sigma_start),
                        fmt_f64(sigma_end)
                    ),
                });
                let _ = writeln!(s, "profile = {entries}");
            }
        }
        let _ = writeln!(
            s,
            "items_values = {}",
            fmt_list(&self.items_values, |k| k.to_string())
        );
        let _ = writeln!(
            s,
            "sample_sizes = {}",
            fmt_list(&self.sample_sizes, |k| k.to_string())
        );
        let _ = writeln!(s, "replications = {}", self.replications);
        if self.master_seed > i64::MAX as u64 {
            let _ = writeln!(s, "master_seed = \"{}\"", self.master_seed);
        } else {
            let _ = writeln!(s, "master_seed = {}", self.master_seed);
        }
        let _ = writeln!(
            s,
            "predictor_coefficient = {}",
            fmt_f64(self.predictor.coefficient())
        );
        let _ = writeln!(
            s,
            "predictor_noise_sd = {}",
            fmt_f64(self.predictor.noise_sd())
        );
        let dir = Value::String(self.output_dir.to_string_lossy().into_owned());
        let _ = writeln!(s, "output_dir = {dir}");
        s
    }

    /// Write `resolved-config.toml` into `dir`.
    pub fn write_resolved(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(RESOLVED_CONFIG_FILE);
        fs::write(&path, self.to_toml()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Profiles as evaluable rules, paired with their series labels.
    pub fn labelled_profiles(&self) -> Vec<(String, DependencyProfile)> {
        self.profiles
            .iter()
            .map(|p| (p.label(), p.profile()))
            .collect()
    }

    pub fn expand_grid(&self) -> Result<Vec<ConditionCell>> {
        expand_grid(self)
    }
}

/// All condition cells of a run, seeded from the config's master seed.
///
/// Independent mode crosses K x sigma x items x N. Dependency mode takes one
/// sigma per (profile, K) and crosses it with items x N.
pub fn expand_grid(config: &RunConfig) -> Result<Vec<ConditionCell>> {
    let mut sigma_per_k: Vec<(u32, f64)> = Vec::new();
    match config.mode {
        Mode::Independent => {
            for &k in &config.k_values {
                for &sigma in &config.sigma_values {
                    sigma_per_k.push((k, sigma));
                }
            }
        }
        Mode::Dependency => {
            for spec in &config.profiles {
                let profile = spec.profile();
                for &k in &config.k_values {
                    let sigma = profile.sigma_for(k).map_err(|e| {
                        Error::OutOfDomain(format!("profile {}: {e}", spec.label()))
                    })?;
                    sigma_per_k.push((k, sigma));
                }
            }
        }
    }

    let mut cells = Vec::with_capacity(
        sigma_per_k.len() * config.items_values.len() * config.sample_sizes.len(),
    );
    let mut seen = HashSet::new();
    for &(k, sigma) in &sigma_per_k {
        for &items in &config.items_values {
            for &n in &config.sample_sizes {
                let cell = ConditionCell::new(k, sigma, items, n, config.replications)?
                    .seeded(config.master_seed);
                if !seen.insert(cell.key()) {
                    return Err(Error::DuplicateCell(format!(
                        "K={k} sigma={sigma} items={items} n={n}"
                    )));
                }
                cells.push(cell);
            }
        }
    }
    Ok(cells)
}
