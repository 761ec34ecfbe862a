//! Subcommands other than `figure`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use movbound::backtrace::Backtracer;
use movbound::boundary::{MotionKind, MotionReport};
use movbound::characteristics::{build_characteristic, residual_bc_w_rms};
use movbound::imr::{build_transform, ImrOptions};
use movbound::metrics::{
    build_reference, environment_note, rmse_vs_reference, time_methods, write_errors_csv, write_timings_csv,
    ErrorRow, Reference, TimingOptions, WaveSolution,
};
use movbound::modes::{epsilon_ic, InitialCondition, ModalSolution};
use movbound::moore::{MooreSeries, MooreTransform};
use movbound::transform::{residual_bc_r_rms, time_grid};
use movbound::{BoundaryMotion, SeedDegree, SeedPolynomial, Transform, TransformFn};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{IcChoice, Method, Scenario, TransformChoice};
use crate::failure::Failure;

const COMPATIBILITY_TOL: f64 = 1e-8;

/// `manifest.json`: the resolved parameters plus a provenance block.
pub fn write_manifest(dir: &Path, command: &str, mut resolved: Value, outputs: &[&str]) -> Result<PathBuf, Failure> {
    let block = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "environment": environment_note(),
        "outputs": outputs,
    });
    match resolved {
        Value::Object(ref mut m) => {
            m.insert("manifest".into(), block);
        }
        _ => resolved = json!({ "parameters": resolved, "manifest": block }),
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&resolved).map_err(|e| Failure::Io(e.to_string()))?;
    fs::write(&path, text + "\n")?;
    Ok(path)
}

pub fn validated_motion(motion: &BoundaryMotion) -> Result<MotionReport, Failure> {
    motion.validate().map_err(Failure::invalid)
}

pub fn seed_degree(d: u32) -> Result<SeedDegree, Failure> {
    SeedDegree::from_int(d).map_err(Failure::invalid)
}

pub fn load_initial_condition(s: &Scenario, motion: &BoundaryMotion) -> Result<InitialCondition, Failure> {
    let ic = match s.ic {
        IcChoice::File => {
            let path = s
                .ic_file
                .as_ref()
                .ok_or_else(|| Failure::Config("ic = file needs ic_file".into()))?;
            read_ic_samples(path)?
        }
        preset => InitialCondition::preset(preset.name(), motion).map_err(Failure::invalid)?,
    };
    let l0 = motion.initial_length();
    if (ic.l0() - l0).abs() > 1e-9 * l0 {
        return Err(Failure::Validation(format!(
            "initial condition spans [0, {}] but L(0) = {l0}",
            ic.l0()
        )));
    }
    ic.check_compatible(motion.speed_at(0.0), COMPATIBILITY_TOL)
        .map_err(Failure::invalid)?;
    Ok(ic)
}

/// CSV with header `x,f,g` sampled on `[0, L0]`.
fn read_ic_samples(path: &Path) -> Result<InitialCondition, Failure> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let (mut x, mut f, mut g) = (Vec::new(), Vec::new(), Vec::new());
    for rec in r.deserialize::<(f64, f64, f64)>() {
        let (a, b, c) = rec.map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        x.push(a);
        f.push(b);
        g.push(c);
    }
    InitialCondition::from_samples("file", &x, &f, &g).map_err(Failure::invalid)
}

/// Parameters shared by every transform builder.
#[derive(Clone, Copy, Debug)]
pub struct RParams {
    pub rho: f64,
    pub seed_degree: u32,
    pub moore_terms: Option<usize>,
    pub moore_scan: usize,
}

impl Scenario {
    pub fn r_params(&self) -> RParams {
        RParams {
            rho: self.rho,
            seed_degree: self.seed_degree,
            moore_terms: self.moore_terms,
            moore_scan: self.moore_scan,
        }
    }
}

/// Transform for a modal method. The chosen Moore order is returned so the
/// manifest can pin it.
pub fn build_r(choice: TransformChoice, p: &RParams, motion: &BoundaryMotion) -> Result<(Transform, Option<usize>), Failure> {
    let degree = seed_degree(p.seed_degree)?;
    Ok(match choice {
        TransformChoice::Exact => (exact_transform(motion)?, None),
        TransformChoice::Moore => {
            let (r, n) = moore_transform(motion, p.moore_terms, p.moore_scan)?;
            (r, Some(n))
        }
        TransformChoice::Imr => {
            let opts = ImrOptions {
                rho: p.rho,
                seed_degree: degree,
                ..Default::default()
            };
            (Transform::Piecewise(Arc::new(build_transform(motion, &opts)?)), None)
        }
        TransformChoice::Backtrace => {
            let seed = SeedPolynomial::for_motion(motion, degree)?;
            (Transform::Backtrace(Arc::new(Backtracer::new(seed, motion.clone())?)), None)
        }
    })
}

/// Method-motion compatibility, checked before any work is done.
pub fn check_transform(choice: TransformChoice, motion: &BoundaryMotion) -> Result<(), Failure> {
    match choice {
        TransformChoice::Exact => exact_transform(motion).map(|_| ()),
        TransformChoice::Moore if !moore_family(motion) => Err(Failure::Validation(
            "Moore series are available for linear and exponential motions only".into(),
        )),
        _ => Ok(()),
    }
}

fn moore_family(motion: &BoundaryMotion) -> bool {
    matches!(motion.kind(), MotionKind::Linear { .. } | MotionKind::Exponential { .. })
}

pub fn exact_transform(motion: &BoundaryMotion) -> Result<Transform, Failure> {
    Transform::exact_for(motion).ok_or_else(|| {
        Failure::Validation(format!("no closed-form transform for {:?}", motion.kind()))
    })
}

/// `R_n` with `n = terms`, or the rms-optimal `n <= scan`.
pub fn moore_transform(
    motion: &BoundaryMotion,
    terms: Option<usize>,
    scan: usize,
) -> Result<(Transform, usize), Failure> {
    check_transform(TransformChoice::Moore, motion)?;
    let series = MooreSeries::for_motion(motion, terms.unwrap_or(0).max(scan)).map_err(Failure::invalid)?;
    let n = match terms {
        Some(n) => n,
        None => series.optimal_truncation(motion.t_max(), scan)?.n_opt,
    };
    Ok((Transform::Moore(Arc::new(MooreTransform::new(Arc::new(series), n)?)), n))
}

fn check_numbers(s: &Scenario) -> Result<(), Failure> {
    let bad = |m: String| Err(Failure::Validation(m));
    if !(s.t_max > 0.0) || !s.t_max.is_finite() {
        return bad(format!("t_max must be positive, got {}", s.t_max));
    }
    if !(s.rho > 0.0) || !s.rho.is_finite() {
        return bad(format!("rho must be positive, got {}", s.rho));
    }
    if s.n_x < 2 {
        return bad(format!("n_x must be at least 2, got {}", s.n_x));
    }
    if s.n_t < 1 || s.n_max < 1 || s.reference_modes < 1 {
        return bad("n_t, n_max and reference_modes must be positive".into());
    }
    Ok(())
}

/// `u(x, t)` on the output grid, one row per `(t, x)`.
fn sample_u(u: &dyn WaveSolution, motion: &BoundaryMotion, times: &[f64], nx: usize) -> Result<Vec<[f64; 3]>, Failure> {
    let rows: Result<Vec<Vec<[f64; 3]>>, movbound::Error> = times
        .par_iter()
        .map(|&t| {
            let l = motion.length(t)?;
            movbound::metrics::x_grid(l, nx)
                .into_iter()
                .map(|x| Ok([t, x, u.u(x, t)?]))
                .collect()
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

fn write_u_csv(path: &Path, rows: &[[f64; 3]]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "u"])?;
    for r in rows {
        w.write_record([r[0].to_string(), r[1].to_string(), format!("{:e}", r[2])])?;
    }
    w.flush()?;
    Ok(())
}

pub struct SolveOutcome {
    pub rows: Vec<ErrorRow>,
    pub manifest: PathBuf,
}

pub fn solve(mut s: Scenario) -> Result<SolveOutcome, Failure> {
    check_numbers(&s)?;
    let motion = s.motion();
    validated_motion(&motion)?;
    seed_degree(s.seed_degree)?;
    let ic = load_initial_condition(&s, &motion)?;
    let choice = s.transform_choice();
    if let Some(c) = choice {
        check_transform(c, &motion)?;
    }
    fs::create_dir_all(&s.output_dir)?;

    let reference: Option<Reference> = match Transform::exact_for(&motion) {
        Some(_) => Some(build_reference(&motion, &ic, s.reference_modes)?),
        None => None,
    };
    let times: Vec<f64> = if s.n_t == 1 { vec![0.0] } else { time_grid(s.t_max, s.n_t).collect() };

    let scenario_name = format!("{}-{}", method_label(&s), ic.name());
    let (solution, eps_bc_r, eps_bc_w, eps_ic): (Box<dyn WaveSolution>, _, _, _) = match choice {
        Some(c) => {
            let (r, moore_n) = build_r(c, &s.r_params(), &motion)?;
            if moore_n.is_some() {
                s.moore_terms = moore_n;
            }
            let bc = residual_bc_r_rms(&r, &motion)?;
            let sol = ModalSolution::new(&ic, &r, s.n_max)?;
            let e = epsilon_ic(&sol.expansion, &ic)?;
            (Box::new(sol), Some(bc), None, Some(e))
        }
        None => {
            let start = match (&reference, s.idealize_imc) {
                (Some(r), true) => r.initial_condition.clone(),
                _ => ic.clone(),
            };
            let opts = ImrOptions {
                rho: s.rho,
                ..Default::default()
            };
            let w = build_characteristic(&motion, &start, &opts)?;
            let bc = residual_bc_w_rms(&w, &motion)?;
            (Box::new(w), None, Some(bc), None)
        }
    };

    let u_rows = sample_u(solution.as_ref(), &motion, &times, s.n_x)?;
    write_u_csv(&s.output_dir.join("u.csv"), &u_rows)?;

    let eps_rms: Vec<Option<f64>> = match &reference {
        Some(r) => times
            .par_iter()
            .map(|&t| rmse_vs_reference(solution.as_ref(), r, t, s.n_x, &motion).map(Some))
            .collect::<Result<_, _>>()?,
        None => vec![None; times.len()],
    };
    let rows: Vec<ErrorRow> = times
        .iter()
        .zip(&eps_rms)
        .map(|(&t, &e)| ErrorRow {
            scenario: scenario_name.clone(),
            t,
            eps_rms: e,
            eps_bc_r,
            eps_bc_w,
            eps_ic,
        })
        .collect();
    write_errors_csv(&s.output_dir.join("errors.csv"), &rows)?;

    let resolved = serde_json::to_value(&s).map_err(|e| Failure::Io(e.to_string()))?;
    let manifest = write_manifest(&s.output_dir, "solve", resolved, &["u.csv", "errors.csv"])?;
    Ok(SolveOutcome { rows, manifest })
}

fn method_label(s: &Scenario) -> String {
    match s.method {
        Method::Imc => "imc".into(),
        Method::Modes => format!("modes-{}", transform_label(s.transform)),
        _ => transform_label(s.transform_choice().unwrap()).into(),
    }
}

fn transform_label(t: TransformChoice) -> &'static str {
    match t {
        TransformChoice::Exact => "exact",
        TransformChoice::Moore => "moore",
        TransformChoice::Imr => "imr",
        TransformChoice::Backtrace => "backtrace",
    }
}

pub struct TransformArgs {
    pub motion: BoundaryMotion,
    pub method: TransformChoice,
    pub params: RParams,
    pub samples: usize,
    pub out: PathBuf,
    pub resolved: Value,
}

/// Builds `R`, reports its rms boundary residual, and samples `(xi, R, R')`.
pub fn build_transform_cmd(a: TransformArgs) -> Result<f64, Failure> {
    validated_motion(&a.motion)?;
    if !(a.params.rho > 0.0) {
        return Err(Failure::Validation(format!("rho must be positive, got {}", a.params.rho)));
    }
    check_transform(a.method, &a.motion)?;
    let (r, moore_n) = build_r(a.method, &a.params, &a.motion)?;
    let residual = residual_bc_r_rms(&r, &a.motion)?;
    fs::create_dir_all(&a.out)?;
    let mut outputs = Vec::new();
    if a.samples > 0 {
        let t_max = a.motion.t_max();
        let lo = -a.motion.initial_length();
        let hi = t_max + a.motion.length_at(t_max);
        let n = a.samples.max(2);
        let mut w = csv::Writer::from_path(a.out.join("transform.csv"))?;
        w.write_record(["xi", "R", "dR"])?;
        for i in 0..n {
            let xi = if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            w.write_record([xi.to_string(), r.value(xi)?.to_string(), r.derivative(xi)?.to_string()])?;
        }
        w.flush()?;
        outputs.push("transform.csv");
    }
    let mut resolved = a.resolved;
    resolved["eps_bc_r"] = json!(residual);
    if let Some(n) = moore_n {
        resolved["moore_terms"] = json!(n);
    }
    write_manifest(&a.out, "build-transform", resolved, &outputs)?;
    Ok(residual)
}

/// One row per `l`: coefficient sign and log magnitude, `|alpha_l(xi_probe)|`
/// and the rms boundary residual of the partial sum through `l`.
pub fn moore_diagnostics(
    motion: &BoundaryMotion,
    terms: usize,
    xi_probe: f64,
    out: &Path,
    resolved: Value,
) -> Result<Vec<[f64; 5]>, Failure> {
    validated_motion(motion)?;
    let series = MooreSeries::for_motion(motion, terms).map_err(Failure::invalid)?;
    let residuals = series.residual_scan(motion.t_max(), terms)?;
    let mut rows = Vec::with_capacity(terms + 1);
    for l in 0..=terms {
        let c = series.coefficients()[l];
        let a = series.term_log(l, xi_probe)?;
        rows.push([l as f64, c.sign, c.ln_abs, a.ln_abs, residuals[l]]);
    }
    fs::create_dir_all(out)?;
    let mut w = csv::Writer::from_path(out.join("moore.csv"))?;
    w.write_record(["l", "sign", "ln_abs_c", "abs_alpha", "ln_abs_alpha", "residual"])?;
    for r in &rows {
        w.write_record([
            (r[0] as usize).to_string(),
            r[1].to_string(),
            r[2].to_string(),
            r[3].exp().to_string(),
            r[3].to_string(),
            r[4].to_string(),
        ])?;
    }
    w.flush()?;
    write_manifest(out, "moore-diagnostics", resolved, &["moore.csv"])?;
    Ok(rows)
}

pub fn bench(
    motion: &BoundaryMotion,
    t0s: &[f64],
    counts: &[usize],
    opts: &TimingOptions,
    out: &Path,
    resolved: Value,
) -> Result<Vec<movbound::metrics::TimingRecord>, Failure> {
    validated_motion(motion)?;
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    if sorted.first() == Some(&0) {
        return Err(Failure::Validation("evaluation counts must be positive".into()));
    }
    let mut records = Vec::new();
    for &t0 in t0s {
        if !(t0 > 0.0) {
            return Err(Failure::Validation(format!("t0 must be positive, got {t0}")));
        }
        validated_motion(&motion.with_t_max(t0))?;
        records.extend(time_methods(motion, t0, &sorted, opts)?);
    }
    fs::create_dir_all(out)?;
    write_timings_csv(&out.join("timings.csv"), &records)?;
    write_manifest(out, "bench", resolved, &["timings.csv"])?;
    Ok(records)
}

pub fn validate_motion(motion: &BoundaryMotion) -> Result<Value, Failure> {
    let r = validated_motion(motion)?;
    Ok(json!({
        "valid": true,
        "max_speed": r.max_speed,
        "t_max_speed": r.t_max_speed,
        "min_length": r.min_length,
        "t_min_length": r.t_min_length,
        "exact_transform": Transform::exact_for(motion).is_some(),
        "moore_family": moore_family(motion),
    }))
}
