//! Scenario configuration: a JSON object whose keys may be overridden by
//! command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use movbound::boundary::{MotionConfig, MotionSpec};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::failure::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Moore,
    Imr,
    Imc,
    Backtrace,
    /// Modal solution with the transform chosen by `transform`.
    Modes,
}

/// Transform used by the modal solution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TransformChoice {
    Exact,
    Moore,
    Imr,
    Backtrace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum IcChoice {
    Sine,
    Gaussian,
    Zero,
    /// Samples `x,f,g` read from `ic_file`.
    File,
}

impl IcChoice {
    pub fn name(self) -> &'static str {
        match self {
            IcChoice::Sine => "sine",
            IcChoice::Gaussian => "gaussian",
            IcChoice::Zero => "zero",
            IcChoice::File => "file",
        }
    }
}

fn default_method() -> Method {
    Method::Imr
}
fn default_transform() -> TransformChoice {
    TransformChoice::Exact
}
fn default_ic() -> IcChoice {
    IcChoice::Gaussian
}
fn default_rho() -> f64 {
    movbound::imr::DEFAULT_RHO
}
fn default_n_max() -> usize {
    150
}
fn default_seed_degree() -> u32 {
    3
}
fn default_moore_scan() -> usize {
    movbound::moore::DEFAULT_SCAN
}
fn default_n_x() -> usize {
    movbound::metrics::DEFAULT_NX
}
fn default_n_t() -> usize {
    17
}
fn default_reference_modes() -> usize {
    movbound::modes::REFERENCE_MODES
}
fn default_true() -> bool {
    true
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Everything a `solve` run depends on.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub motion: MotionSpec,
    pub t_max: f64,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Only read when `method` is `modes`.
    #[serde(default = "default_transform")]
    pub transform: TransformChoice,
    #[serde(default = "default_ic")]
    pub ic: IcChoice,
    #[serde(default)]
    pub ic_file: Option<PathBuf>,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_seed_degree")]
    pub seed_degree: u32,
    /// Moore truncation order; the rms-optimal order when absent.
    #[serde(default)]
    pub moore_terms: Option<usize>,
    #[serde(default = "default_moore_scan")]
    pub moore_scan: usize,
    #[serde(default = "default_n_x")]
    pub n_x: usize,
    /// Output times, uniform on `[0, t_max]`.
    #[serde(default = "default_n_t")]
    pub n_t: usize,
    #[serde(default = "default_reference_modes")]
    pub reference_modes: usize,
    /// Run IMC from the reference's idealized initial condition when a
    /// reference exists, so that `eps_rms` measures the method alone.
    #[serde(default = "default_true")]
    pub idealize_imc: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Scenario {
    pub fn motion(&self) -> movbound::BoundaryMotion {
        self.motion.build(self.t_max)
    }

    /// Transform behind the modal solution, `None` for IMC.
    pub fn transform_choice(&self) -> Option<TransformChoice> {
        match self.method {
            Method::Exact => Some(TransformChoice::Exact),
            Method::Moore => Some(TransformChoice::Moore),
            Method::Imr => Some(TransformChoice::Imr),
            Method::Backtrace => Some(TransformChoice::Backtrace),
            Method::Modes => Some(self.transform),
            Method::Imc => None,
        }
    }
}

/// Named motions accepted wherever a motion is expected.
pub fn motion_preset(name: &str) -> Option<MotionSpec> {
    match name {
        "linear" => Some(MotionSpec::Linear { l0: 0.5, v: 0.3 }),
        "exponential" => Some(MotionSpec::Exponential { k: 0.3 }),
        "sinh" | "sinh_inverse" => Some(MotionSpec::SinhInverse { a: 1.0, k: 1.0, xi0: 1.0 }),
        "sinh-slow" => Some(MotionSpec::SinhInverse { a: 2.0, k: 1.0, xi0: 1.0 }),
        "sinh-fast" => Some(MotionSpec::SinhInverse { a: 0.1, k: 1.0, xi0: 1.0 }),
        _ => None,
    }
}

pub fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Resolves a `--motion` argument into config keys: a preset name, inline
/// JSON, or a file holding `{"motion": ..., "t_max": ...}` or a bare motion.
pub fn motion_argument(arg: &str) -> Result<Map<String, Value>, Failure> {
    let value = if let Some(spec) = motion_preset(arg) {
        return Ok(Map::from_iter([("motion".into(), to_value(&spec)?)]));
    } else if arg.trim_start().starts_with('{') {
        serde_json::from_str(arg).map_err(|e| Failure::Config(format!("--motion: {e}")))?
    } else if Path::new(arg).exists() {
        read_json(Path::new(arg))?
    } else {
        return Err(Failure::Config(format!(
            "--motion '{arg}' is neither a preset (linear, exponential, sinh, sinh-slow, sinh-fast), JSON, nor a file"
        )));
    };
    let mut out = Map::new();
    if value.get("motion").is_some() {
        let cfg: MotionConfig = serde_json::from_value(value).map_err(|e| Failure::Config(format!("--motion: {e}")))?;
        out.insert("motion".into(), to_value(&cfg.motion)?);
        out.insert("t_max".into(), Value::from(cfg.t_max));
    } else {
        let spec: MotionSpec = serde_json::from_value(value).map_err(|e| Failure::Config(format!("--motion: {e}")))?;
        out.insert("motion".into(), to_value(&spec)?);
    }
    Ok(out)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Config(e.to_string()))
}

/// Base config (file or empty) with `overrides` applied key by key.
pub fn layered(config: Option<&Path>, overrides: Map<String, Value>) -> Result<Map<String, Value>, Failure> {
    let mut map = match config {
        Some(p) => match read_json(p)? {
            Value::Object(m) => m,
            _ => return Err(Failure::Config(format!("{}: expected a JSON object", p.display()))),
        },
        None => Map::new(),
    };
    if let Some(Value::String(name)) = map.get("motion").cloned() {
        let spec = motion_preset(&name).ok_or_else(|| Failure::Config(format!("unknown motion preset '{name}'")))?;
        map.insert("motion".into(), to_value(&spec)?);
    }
    map.extend(overrides);
    Ok(map)
}

/// The scenario in `map`; a `manifest` block from an earlier run is ignored.
pub fn scenario_from(mut map: Map<String, Value>) -> Result<Scenario, Failure> {
    map.remove("manifest");
    for key in ["motion", "t_max"] {
        if !map.contains_key(key) {
            return Err(Failure::Config(format!("missing required key '{key}'")));
        }
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| Failure::Config(e.to_string()))
}

/// Inserts `key` when the flag was given.
pub fn set<T: Serialize>(map: &mut Map<String, Value>, key: &str, v: Option<T>) -> Result<(), Failure> {
    if let Some(v) = v {
        map.insert(key.into(), to_value(&v)?);
    }
    Ok(())
}
