//! Run configuration: flat `key = value` text with dotted sections.
//!
//! The same struct serializes back out as `config.effective`; parsing that
//! dump yields an equal configuration, which is what makes hash-named run
//! directories reproducible.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use gradbound::grid::{PeriodicGrid, ScalarField};
use gradbound::models::{builtin_model, AdmissibilityBox, ModelSpec};
use gradbound::solver::SolverConfig;
use gradbound::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Constant { value: f64 },
    Sine { mean: f64, amplitude: f64, mode: usize },
    Bump { center: f64, width: f64, height: f64, floor: f64 },
    File { path: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model_name: String,
    pub model_params: Vec<f64>,
    pub dim: usize,
    pub n: usize,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub output_every: f64,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
    pub samples: usize,
    pub tol_grad: f64,
    pub tol_cert: f64,
    pub record_w_rate: bool,
    pub initial: Option<InitialData>,
    pub initial2: Option<InitialData>,
    pub box_u_lo: Option<f64>,
    pub box_u_hi: Option<f64>,
    pub box_grad_sq_max: Option<f64>,
    pub box_grad_sq_min: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model_name: String::new(),
            model_params: Vec::new(),
            dim: 1,
            n: 256,
            t_end: 0.25,
            cfl_safety: 0.9,
            output_every: 0.0,
            snapshot_times: Vec::new(),
            seed: 0,
            samples: 1000,
            tol_grad: 0.01,
            tol_cert: 1e-9,
            record_w_rate: false,
            initial: None,
            initial2: None,
            box_u_lo: None,
            box_u_hi: None,
            box_grad_sq_max: None,
            box_grad_sq_min: None,
        }
    }
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| parse_err(format!("{key}: expected a number, got '{v}'")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| parse_err(format!("{key}: expected a non-negative integer, got '{v}'")))
}

fn parse_f64_list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

fn join_f64_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Builds one initial-data block from the key/value pairs of its section.
/// Every key must belong to the declared kind; missing required keys and
/// unknown keys are both errors, so a config cannot silently carry a field
/// that does nothing.
fn build_initial(section: &str, kv: &[(String, String)]) -> Result<Option<InitialData>> {
    if kv.is_empty() {
        return Ok(None);
    }
    let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let kind = get("kind")
        .ok_or_else(|| parse_err(format!("{section}.kind is required")))?;
    let allowed: &[&str] = match kind {
        "constant" => &["kind", "value"],
        "sine" => &["kind", "mean", "amplitude", "mode"],
        "bump" => &["kind", "center", "width", "height", "floor"],
        "file" => &["kind", "path"],
        other => {
            return Err(parse_err(format!(
                "{section}.kind: unknown kind '{other}' (expected constant, sine, bump, or file)"
            )))
        }
    };
    for (k, _) in kv {
        if !allowed.contains(&k.as_str()) {
            return Err(parse_err(format!(
                "{section}.{k} is not a field of kind '{kind}'"
            )));
        }
    }
    let req = |key: &str| -> Result<f64> {
        let v = get(key)
            .ok_or_else(|| parse_err(format!("{section}.{key} is required for kind '{kind}'")))?;
        parse_f64(&format!("{section}.{key}"), v)
    };
    let opt = |key: &str, default: f64| -> Result<f64> {
        match get(key) {
            Some(v) => parse_f64(&format!("{section}.{key}"), v),
            None => Ok(default),
        }
    };
    let data = match kind {
        "constant" => InitialData::Constant { value: req("value")? },
        "sine" => InitialData::Sine {
            mean: req("mean")?,
            amplitude: req("amplitude")?,
            mode: match get("mode") {
                Some(v) => parse_usize(&format!("{section}.mode"), v)?,
                None => 1,
            },
        },
        "bump" => InitialData::Bump {
            center: opt("center", 0.5)?,
            width: req("width")?,
            height: req("height")?,
            floor: opt("floor", 0.0)?,
        },
        "file" => InitialData::File {
            path: get("path")
                .ok_or_else(|| parse_err(format!("{section}.path is required for kind 'file'")))?
                .to_string(),
        },
        _ => unreachable!(),
    };
    if let InitialData::Sine { mode, .. } = &data {
        if *mode == 0 {
            return Err(parse_err(format!("{section}.mode must be at least 1")));
        }
    }
    Ok(Some(data))
}

fn push_initial(out: &mut String, section: &str, data: &InitialData) {
    match data {
        InitialData::Constant { value } => {
            out.push_str(&format!("{section}.kind = constant\n{section}.value = {value}\n"));
        }
        InitialData::Sine { mean, amplitude, mode } => {
            out.push_str(&format!(
                "{section}.kind = sine\n{section}.mean = {mean}\n{section}.amplitude = {amplitude}\n{section}.mode = {mode}\n"
            ));
        }
        InitialData::Bump { center, width, height, floor } => {
            out.push_str(&format!(
                "{section}.kind = bump\n{section}.center = {center}\n{section}.width = {width}\n{section}.height = {height}\n{section}.floor = {floor}\n"
            ));
        }
        InitialData::File { path } => {
            out.push_str(&format!("{section}.kind = file\n{section}.path = {path}\n"));
        }
    }
}

impl RunConfig {
    /// Parses the flat `key = value` format. Blank lines and lines starting
    /// with `#` are skipped; keys may not repeat; unknown keys are errors.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(parse_err(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    idx + 1
                )));
            };
            let key = k.trim().to_string();
            let value = v.trim().to_string();
            if pairs.iter().any(|(existing, _)| *existing == key) {
                return Err(parse_err(format!("line {}: duplicate key '{key}'", idx + 1)));
            }
            pairs.push((key, value));
        }

        let mut cfg = RunConfig::default();
        let mut initial_kv: Vec<(String, String)> = Vec::new();
        let mut initial2_kv: Vec<(String, String)> = Vec::new();
        for (k, v) in pairs {
            match k.as_str() {
                "model.name" => cfg.model_name = v,
                "model.params" => cfg.model_params = parse_f64_list(&k, &v)?,
                "dim" => cfg.dim = parse_usize(&k, &v)?,
                "n" => cfg.n = parse_usize(&k, &v)?,
                "t_end" => cfg.t_end = parse_f64(&k, &v)?,
                "cfl_safety" => cfg.cfl_safety = parse_f64(&k, &v)?,
                "output_every" => cfg.output_every = parse_f64(&k, &v)?,
                "snapshot_times" => cfg.snapshot_times = parse_f64_list(&k, &v)?,
                "seed" => {
                    cfg.seed = v
                        .parse::<u64>()
                        .map_err(|_| parse_err(format!("seed: expected an integer, got '{v}'")))?
                }
                "samples" => cfg.samples = parse_usize(&k, &v)?,
                "tol.grad" => cfg.tol_grad = parse_f64(&k, &v)?,
                "tol.cert" => cfg.tol_cert = parse_f64(&k, &v)?,
                "record_w_rate" => {
                    cfg.record_w_rate = match v.as_str() {
                        "true" => true,
                        "false" => false,
                        _ => {
                            return Err(parse_err(format!(
                                "record_w_rate: expected true or false, got '{v}'"
                            )))
                        }
                    }
                }
                "box.u_lo" => cfg.box_u_lo = Some(parse_f64(&k, &v)?),
                "box.u_hi" => cfg.box_u_hi = Some(parse_f64(&k, &v)?),
                "box.grad_sq_max" => cfg.box_grad_sq_max = Some(parse_f64(&k, &v)?),
                "box.grad_sq_min" => cfg.box_grad_sq_min = Some(parse_f64(&k, &v)?),
                _ if k.starts_with("initial.") => {
                    initial_kv.push((k["initial.".len()..].to_string(), v))
                }
                _ if k.starts_with("initial2.") => {
                    initial2_kv.push((k["initial2.".len()..].to_string(), v))
                }
                _ => return Err(parse_err(format!("unknown key '{k}'"))),
            }
        }
        cfg.initial = build_initial("initial", &initial_kv)?;
        cfg.initial2 = build_initial("initial2", &initial2_kv)?;
        Ok(cfg)
    }

    /// Canonical serialization: fixed key order, `Display` floats (which
    /// round-trip exactly), optional sections only when present. The run
    /// directory name is the hash of this text.
    pub fn to_effective(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("model.name = {}\n", self.model_name));
        if !self.model_params.is_empty() {
            out.push_str(&format!("model.params = {}\n", join_f64_list(&self.model_params)));
        }
        out.push_str(&format!("dim = {}\n", self.dim));
        out.push_str(&format!("n = {}\n", self.n));
        out.push_str(&format!("t_end = {}\n", self.t_end));
        out.push_str(&format!("cfl_safety = {}\n", self.cfl_safety));
        out.push_str(&format!("output_every = {}\n", self.output_every));
        if !self.snapshot_times.is_empty() {
            out.push_str(&format!("snapshot_times = {}\n", join_f64_list(&self.snapshot_times)));
        }
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("samples = {}\n", self.samples));
        out.push_str(&format!("tol.grad = {}\n", self.tol_grad));
        out.push_str(&format!("tol.cert = {}\n", self.tol_cert));
        out.push_str(&format!("record_w_rate = {}\n", self.record_w_rate));
        if let Some(v) = self.box_u_lo {
            out.push_str(&format!("box.u_lo = {v}\n"));
        }
        if let Some(v) = self.box_u_hi {
            out.push_str(&format!("box.u_hi = {v}\n"));
        }
        if let Some(v) = self.box_grad_sq_max {
            out.push_str(&format!("box.grad_sq_max = {v}\n"));
        }
        if let Some(v) = self.box_grad_sq_min {
            out.push_str(&format!("box.grad_sq_min = {v}\n"));
        }
        if let Some(d) = &self.initial {
            push_initial(&mut out, "initial", d);
        }
        if let Some(d) = &self.initial2 {
            push_initial(&mut out, "initial2", d);
        }
        out
    }

    /// Builds the model named in the config and applies any box overrides
    /// on top of the model's default admissibility box.
    pub fn build_model(&self) -> Result<ModelSpec> {
        if self.model_name.is_empty() {
            return Err(parse_err("model.name is required"));
        }
        let model = builtin_model(&self.model_name, &self.model_params, self.dim)?;
        let overridden = self.box_u_lo.is_some()
            || self.box_u_hi.is_some()
            || self.box_grad_sq_max.is_some()
            || self.box_grad_sq_min.is_some();
        if !overridden {
            return Ok(model);
        }
        let base = *model.abox();
        let b = AdmissibilityBox::new(
            self.box_u_lo.unwrap_or(base.u_lo),
            self.box_u_hi.unwrap_or(base.u_hi),
            self.box_grad_sq_max.unwrap_or(base.grad_sq_max),
            self.dim,
        )?
        .with_grad_sq_min(self.box_grad_sq_min.unwrap_or(base.grad_sq_min))?;
        model.with_box(b)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut sc = SolverConfig::new(self.n, self.dim, self.t_end);
        sc.cfl_safety = self.cfl_safety;
        sc.output_every = self.output_every;
        sc.snapshot_times = self.snapshot_times.clone();
        sc.record_w_rate = self.record_w_rate;
        sc
    }

    /// Materializes the primary (`initial`) or secondary (`initial2`)
    /// field on this config's grid. File paths resolve against the current
    /// working directory.
    pub fn build_field(&self, secondary: bool) -> Result<ScalarField> {
        let section = if secondary { "initial2" } else { "initial" };
        let data = if secondary { &self.initial2 } else { &self.initial };
        let data = data
            .as_ref()
            .ok_or_else(|| parse_err(format!("{section}.kind is required for this command")))?;
        let grid = PeriodicGrid::new(self.dim, self.n)?;
        match data {
            InitialData::Constant { value } => ScalarField::constant(grid, *value),
            InitialData::Sine { mean, amplitude, mode } => {
                let k = 2.0 * std::f64::consts::PI * *mode as f64;
                ScalarField::from_fn(grid, |x| {
                    mean + amplitude * x.iter().map(|&xi| (k * xi).sin()).product::<f64>()
                })
            }
            InitialData::Bump { center, width, height, floor } => {
                if !(*width > 0.0) {
                    return Err(parse_err(format!("{section}.width must be positive")));
                }
                if *floor < 0.0 {
                    return Err(parse_err(format!("{section}.floor must be >= 0")));
                }
                let (c, w, hgt, f) = (*center, *width, *height, *floor);
                ScalarField::from_fn(grid, |x| {
                    let r2: f64 = x
                        .iter()
                        .map(|&xi| {
                            let mut d = (xi - c).abs() % 1.0;
                            if d > 0.5 {
                                d = 1.0 - d;
                            }
                            d * d
                        })
                        .sum();
                    let r = r2.sqrt();
                    if r < w {
                        // cosine taper: height at the center, floor at radius w
                        f + hgt * 0.5 * (1.0 + (std::f64::consts::PI * r / w).cos())
                    } else {
                        f
                    }
                })
            }
            InitialData::File { path } => {
                let file = File::open(Path::new(path))?;
                let (field, _t) = gradbound::grid::read_snapshot(&mut BufReader::new(file))?;
                if field.grid().dim() != self.dim || field.grid().n() != self.n {
                    return Err(parse_err(format!(
                        "{section}.path: snapshot is {}d n={}, config wants {}d n={}",
                        field.grid().dim(),
                        field.grid().n(),
                        self.dim,
                        self.n
                    )));
                }
                Ok(field)
            }
        }
    }
}
