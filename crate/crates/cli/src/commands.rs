//! Subcommand implementations and the error-to-exit-code mapping.
//!
//! Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 config/parse/
//! precondition problems, 3 the state left the admissibility box, 4 the
//! scheme went unstable.

use std::fs::{self, File};
use std::path::PathBuf;

use clap::Args;
use sha2::{Digest, Sha256};

use gradbound::certify::{certify_model, CertOptions};
use gradbound::diagnostics::BoundVerdicts;
use gradbound::grid::{write_snapshot, PeriodicGrid, ScalarField};
use gradbound::models::{AdmissibilityBox, builtin_model, ModelSpec};
use gradbound::solver::{comparison_run, run, SolverConfig};
use gradbound::{Error, Result};

use crate::config::RunConfig;

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Config file (flat key = value)
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to run-<config hash>
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Overrides the first model parameter
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "tol-grad")]
    pub tol_grad: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Config file with both an initial and an initial2 section
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Overrides the first model parameter
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct CertifyArgs {
    /// Model name, e.g. pme, gdiff:poly, psi:hydrology_full, doubly_nonlinear
    pub model: String,
    /// First model parameter (m for pme and doubly_nonlinear)
    #[arg(long)]
    pub m: Option<f64>,
    /// Second model parameter (the exponent p for doubly_nonlinear)
    #[arg(long)]
    pub p: Option<f64>,
    /// Full parameter list, comma separated (e.g. polynomial coefficients)
    #[arg(long, value_delimiter = ',')]
    pub params: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Random matrix samples for the sampling route
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Grid points per box axis for the closed-form route
    #[arg(long = "grid-samples", default_value_t = 201)]
    pub grid_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "tol-cert", default_value_t = 1e-9)]
    pub tol_cert: f64,
    #[arg(long = "u-lo")]
    pub u_lo: Option<f64>,
    #[arg(long = "u-hi")]
    pub u_hi: Option<f64>,
    #[arg(long = "grad-sq-max")]
    pub grad_sq_max: Option<f64>,
    #[arg(long = "grad-sq-min")]
    pub grad_sq_min: Option<f64>,
    /// Also write the report blocks to <out>/verdicts.txt
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Model family: pme, hydrology, or doubly_nonlinear
    pub family: String,
    /// Parameter range lo:hi:step (m for pme and doubly_nonlinear, the
    /// u-box half-width for hydrology)
    #[arg(long)]
    pub range: String,
    /// Dimensions, comma separated
    #[arg(long, default_value = "1")]
    pub dim: String,
    /// Fixed exponent p for doubly_nonlinear
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Also evolve each certified point and report the bound verdict
    #[arg(long)]
    pub run: bool,
    /// Grid size for --run evolutions
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 400)]
    pub samples: usize,
    #[arg(long = "grid-samples", default_value_t = 101)]
    pub grid_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; defaults to sweep-<parameter hash>
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::DomainViolation { .. } | Error::BoxExit { .. } => 3,
        Error::Instability { .. } | Error::CflViolation { .. } => 4,
        _ => 2,
    }
}

fn finish(outcome: Result<i32>) -> i32 {
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn hash12(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut s = String::with_capacity(12);
    for b in &digest[..6] {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

fn pass_str(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

fn verdict_text(v: &BoundVerdicts) -> String {
    let mut s = String::new();
    for (name, b) in [("gradient", &v.gradient), ("range", &v.range), ("mass", &v.mass)] {
        s.push_str(&format!("{name} = {}\n", pass_str(b.pass)));
        s.push_str(&format!("{name}.worst = {}\n", b.worst));
        s.push_str(&format!("{name}.limit = {}\n", b.limit));
        s.push_str(&format!("{name}.t_worst = {}\n", b.t_worst));
    }
    s.push_str(&format!("overall = {}\n", pass_str(v.all_pass())));
    s
}

fn apply_overrides(
    cfg: &mut RunConfig,
    dim: Option<usize>,
    n: Option<usize>,
    m: Option<f64>,
    seed: Option<u64>,
    tol_grad: Option<f64>,
    samples: Option<usize>,
) {
    if let Some(d) = dim {
        cfg.dim = d;
    }
    if let Some(n) = n {
        cfg.n = n;
    }
    if let Some(m) = m {
        if cfg.model_params.is_empty() {
            cfg.model_params.push(m);
        } else {
            cfg.model_params[0] = m;
        }
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = tol_grad {
        cfg.tol_grad = t;
    }
    if let Some(s) = samples {
        cfg.samples = s;
    }
}

pub fn cmd_run(args: &RunArgs) -> i32 {
    finish(run_impl(args))
}

fn run_impl(args: &RunArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.config)?;
    let mut cfg = RunConfig::parse(&text)?;
    apply_overrides(
        &mut cfg, args.dim, args.n, args.m, args.seed, args.tol_grad, args.samples,
    );
    let effective = cfg.to_effective();

    let model = cfg.build_model()?;
    let u0 = cfg.build_field(false)?;
    let output = run(&model, &u0, &cfg.solver_config())?;
    let verdicts = output.diagnostics.verdict_bounds(cfg.tol_grad)?;

    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("run-{}", hash12(&effective))));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.effective"), &effective)?;
    let mut csv = Vec::new();
    output.diagnostics.write_csv(&mut csv)?;
    fs::write(dir.join("diagnostics.csv"), &csv)?;
    for (i, (t, field)) in output.snapshots.iter().enumerate() {
        let mut f = File::create(dir.join(format!("snapshot-{i:03}.dat")))?;
        write_snapshot(&mut f, field, *t)?;
    }
    let vt = verdict_text(&verdicts);
    fs::write(dir.join("verdicts.txt"), &vt)?;

    println!("out = {}", dir.display());
    println!("steps = {}", output.steps);
    print!("{vt}");
    Ok(if verdicts.all_pass() { 0 } else { 1 })
}

pub fn cmd_compare(args: &CompareArgs) -> i32 {
    finish(compare_impl(args))
}

fn compare_impl(args: &CompareArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.config)?;
    let mut cfg = RunConfig::parse(&text)?;
    apply_overrides(&mut cfg, args.dim, args.n, args.m, args.seed, None, None);

    let model = cfg.build_model()?;
    let u0 = cfg.build_field(false)?;
    let v0 = cfg.build_field(true)?;
    let report = comparison_run(&model, &u0, &v0, &cfg.solver_config())?;
    println!("max_defect = {}", report.max_defect);
    println!("t_at_max = {}", report.t_at_max);
    println!("steps = {}", report.steps);
    Ok(if report.max_defect <= 1e-12 { 0 } else { 1 })
}

fn boxed_model(
    name: &str,
    params: &[f64],
    dim: usize,
    u_lo: Option<f64>,
    u_hi: Option<f64>,
    grad_sq_max: Option<f64>,
    grad_sq_min: Option<f64>,
) -> Result<ModelSpec> {
    let model = builtin_model(name, params, dim)?;
    if u_lo.is_none() && u_hi.is_none() && grad_sq_max.is_none() && grad_sq_min.is_none() {
        return Ok(model);
    }
    let base = *model.abox();
    let b = AdmissibilityBox::new(
        u_lo.unwrap_or(base.u_lo),
        u_hi.unwrap_or(base.u_hi),
        grad_sq_max.unwrap_or(base.grad_sq_max),
        dim,
    )?
    .with_grad_sq_min(grad_sq_min.unwrap_or(base.grad_sq_min))?;
    model.with_box(b)
}

pub fn cmd_certify(args: &CertifyArgs) -> i32 {
    finish(certify_impl(args))
}

fn certify_impl(args: &CertifyArgs) -> Result<i32> {
    let mut params: Vec<f64> = args.params.clone().unwrap_or_default();
    if let Some(m) = args.m {
        if params.is_empty() {
            params.push(m);
        } else {
            params[0] = m;
        }
    }
    if let Some(p) = args.p {
        match params.len() {
            0 => {
                return Err(Error::Parse(
                    "--p needs a first parameter; give --m as well".to_string(),
                ))
            }
            1 => params.push(p),
            _ => params[1] = p,
        }
    }
    let model = boxed_model(
        &args.model,
        &params,
        args.dim,
        args.u_lo,
        args.u_hi,
        args.grad_sq_max,
        args.grad_sq_min,
    )?;
    let opts = CertOptions {
        tol: args.tol_cert,
        seed: args.seed,
        ..CertOptions::default()
    };
    let reports = certify_model(&model, args.grid_samples, args.grid_samples, args.samples, &opts)?;

    let mut buf = Vec::new();
    for r in &reports {
        r.write_blocks(&mut buf)?;
    }
    let text = String::from_utf8(buf).expect("report blocks are utf-8");
    print!("{text}");
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("verdicts.txt"), &text)?;
    }
    Ok(if reports.iter().all(|r| r.verdict.is_pass()) { 0 } else { 1 })
}

pub fn cmd_sweep(args: &SweepArgs) -> i32 {
    finish(sweep_impl(args))
}

fn parse_range(spec: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("range '{spec}' is not lo:hi:step")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("range '{spec}': '{s}' is not a number")))
        })
        .collect::<Result<_>>()?;
    let (lo, hi, step) = (nums[0], nums[1], nums[2]);
    if !lo.is_finite() || !hi.is_finite() || !(step > 0.0) || !step.is_finite() {
        return Err(Error::Parse(format!(
            "range '{spec}': bounds must be finite and the step positive"
        )));
    }
    Ok((lo, hi, step))
}

fn parse_dims(spec: &str) -> Result<Vec<usize>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("dim list '{spec}': '{s}' is not an integer")))
        })
        .collect()
}

/// Prints a swept parameter without float-accumulation noise: fixed at
/// nine decimals, then trimmed.
fn fmt_param(x: f64) -> String {
    let mut s = format!("{x:.9}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn sweep_model(family: &str, param: f64, p_fixed: f64, dim: usize) -> Result<ModelSpec> {
    match family {
        "pme" => ModelSpec::pme(param, dim),
        "hydrology" | "hydrology_full" => {
            let b = AdmissibilityBox::new(0.5 - param, 0.5 + param, 1.0, dim)?;
            ModelSpec::hydrology_full(dim)?.with_box(b)
        }
        "doubly_nonlinear" => ModelSpec::doubly_nonlinear(param, p_fixed, dim),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// Bound verdict of a short sine-data evolution on the model's box, for
/// the optional run column. Construction or evolution failures land as
/// "error" rather than aborting the sweep.
fn sweep_run_verdict(model: &ModelSpec, n: usize, dim: usize) -> String {
    let abox = model.abox();
    let span = abox.u_hi - abox.u_lo;
    if !span.is_finite() {
        return "error".to_string();
    }
    let mean = 0.5 * (abox.u_lo + abox.u_hi);
    let mut amp = 0.4 * span;
    if abox.grad_sq_max.is_finite() {
        amp = amp.min(0.9 * abox.grad_sq_max.sqrt() / (2.0 * std::f64::consts::PI));
    }
    let Ok(grid) = PeriodicGrid::new(dim, n) else {
        return "error".to_string();
    };
    let k = 2.0 * std::f64::consts::PI;
    let Ok(u0) = ScalarField::from_fn(grid, |x| {
        mean + amp * x.iter().map(|&xi| (k * xi).sin()).product::<f64>()
    }) else {
        return "error".to_string();
    };
    let mut sc = SolverConfig::new(n, dim, 0.05);
    sc.output_every = 0.01;
    match run(model, &u0, &sc) {
        Ok(out) => match out.diagnostics.verdict_bounds(0.01) {
            Ok(v) => pass_str(v.all_pass()).to_string(),
            Err(_) => "error".to_string(),
        },
        Err(_) => "error".to_string(),
    }
}

fn sweep_impl(args: &SweepArgs) -> Result<i32> {
    let (lo, hi, step) = parse_range(&args.range)?;
    let dims = parse_dims(&args.dim)?;

    let id = format!(
        "sweep family={} range={} dims={} p={} run={} n={} samples={} grid={} seed={}",
        args.family, args.range, args.dim, args.p, args.run, args.n, args.samples,
        args.grid_samples, args.seed
    );
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("sweep-{}", hash12(&id))));

    let mut params = Vec::new();
    let mut k = 0usize;
    loop {
        let p = lo + k as f64 * step;
        if p > hi + 1e-9 * step.max(1.0) {
            break;
        }
        params.push(p);
        k += 1;
    }

    let opts = CertOptions {
        seed: args.seed,
        ..CertOptions::default()
    };
    let mut csv = String::new();
    csv.push_str("parameter,dim,certify_verdict,worst_margin");
    if args.run {
        csv.push_str(",run_verdict");
    }
    csv.push('\n');
    for &dim in &dims {
        for &p in &params {
            let model = sweep_model(&args.family, p, args.p, dim)?;
            let reports =
                certify_model(&model, args.grid_samples, args.grid_samples, args.samples, &opts)?;
            let pass = reports.iter().all(|r| r.verdict.is_pass());
            let margin = reports
                .iter()
                .map(|r| r.worst_margin)
                .fold(f64::INFINITY, f64::min);
            csv.push_str(&format!(
                "{},{},{},{}",
                fmt_param(p),
                dim,
                pass_str(pass),
                margin
            ));
            if args.run {
                csv.push(',');
                csv.push_str(&sweep_run_verdict(&model, args.n, dim));
            }
            csv.push('\n');
        }
    }

    fs::create_dir_all(&dir)?;
    fs::write(dir.join("sweep.csv"), &csv)?;
    println!("out = {}", dir.display());
    println!("points = {}", params.len() * dims.len());
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing_accepts_and_rejects() {
        assert_eq!(parse_range("1:2.2:0.05").unwrap(), (1.0, 2.2, 0.05));
        assert!(parse_range("1:2").is_err());
        assert!(parse_range("a:b:c").is_err());
        assert!(parse_range("1:2:0").is_err());
        assert!(parse_range("1:2:-0.1").is_err());
    }

    #[test]
    fn param_formatting_strips_accumulation_noise() {
        assert_eq!(fmt_param(1.0 + 3.0 * 0.05), "1.15");
        assert_eq!(fmt_param(1.0 + 24.0 * 0.05), "2.2");
        assert_eq!(fmt_param(2.0), "2");
        assert_eq!(fmt_param(0.30000000000000004), "0.3");
    }

    #[test]
    fn hash_is_stable_and_hex() {
        let h = hash12("model.name = pme\n");
        assert_eq!(h.len(), 12);
        assert!(h.chars().all(|c| c.is_ascii_hexdigit()));
        assert_eq!(h, hash12("model.name = pme\n"));
        assert_ne!(h, hash12("model.name = pme\nn = 64\n"));
    }

    #[test]
    fn exit_codes_follow_the_error_family() {
        assert_eq!(exit_code_for(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code_for(&Error::UnknownModel("x".into())), 2);
        assert_eq!(exit_code_for(&Error::OrderingViolated("x".into())), 2);
        assert_eq!(
            exit_code_for(&Error::DomainViolation { bound: "u_hi", value: 2.0, limit: 1.0 }),
            3
        );
        assert_eq!(
            exit_code_for(&Error::BoxExit { step: 1, t: 0.0, detail: "x".into() }),
            3
        );
        assert_eq!(
            exit_code_for(&Error::Instability { step: 1, t: 0.0, detail: "x".into() }),
            4
        );
        assert_eq!(exit_code_for(&Error::CflViolation { dt: 1.0, dt_max: 0.5 }), 4);
    }
}
