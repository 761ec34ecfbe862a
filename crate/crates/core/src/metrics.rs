//! Error indicators against a reference solution and the IMR/backtracing
//! timing harness.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtrace::Backtracer;
use crate::boundary::BoundaryMotion;
use crate::characteristics::CharacteristicFunction;
use crate::error::{Error, Result};
use crate::imr::{build_transform, ImrOptions};
use crate::modes::{idealized_initial_condition, InitialCondition, ModalSolution};
use crate::roots::brent;
use crate::seed::{SeedDegree, SeedPolynomial};
use crate::transform::{Transform, RMS_GRID};

/// Spatial sample count for `eps_rms`.
pub const DEFAULT_NX: usize = 512;
/// Wall-clock repetitions per timing; the median is reported.
pub const TIMING_RUNS: usize = 5;

/// Anything that yields `u(x, t)`.
pub trait WaveSolution: Send + Sync {
    fn u(&self, x: f64, t: f64) -> Result<f64>;
}

impl WaveSolution for ModalSolution {
    fn u(&self, x: f64, t: f64) -> Result<f64> {
        self.eval(x, t)
    }
}

impl WaveSolution for CharacteristicFunction {
    fn u(&self, x: f64, t: f64) -> Result<f64> {
        self.eval_u(x, t)
    }
}

impl<F: Fn(f64, f64) -> Result<f64> + Send + Sync> WaveSolution for F {
    fn u(&self, x: f64, t: f64) -> Result<f64> {
        self(x, t)
    }
}

/// `N_x` equidistant points on `[0, L]`, both ends included.
pub fn x_grid(length: f64, nx: usize) -> Vec<f64> {
    (0..nx)
        .map(|i| if i + 1 == nx { length } else { length * i as f64 / (nx - 1) as f64 })
        .collect()
}

/// Root mean square, maximum and mean of `|u - u_ref|` over one time slice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpatialErrors {
    pub rms: f64,
    pub max: f64,
    pub mean: f64,
}

pub fn spatial_errors(
    test: &dyn WaveSolution,
    reference: &dyn WaveSolution,
    t: f64,
    nx: usize,
    motion: &BoundaryMotion,
) -> Result<SpatialErrors> {
    if nx < 2 {
        return Err(Error::Precondition(format!("N_x must be at least 2, got {nx}")));
    }
    let l = motion.length(t)?;
    let (mut sq, mut max, mut sum) = (0.0, 0.0f64, 0.0);
    for x in x_grid(l, nx) {
        let d = (test.u(x, t)? - reference.u(x, t)?).abs();
        sq += d * d;
        max = max.max(d);
        sum += d;
    }
    let n = nx as f64;
    Ok(SpatialErrors {
        rms: (sq / n).sqrt(),
        max,
        mean: sum / n,
    })
}

/// `eps_rms(t) = sqrt(mean_x |u - u_ref|^2)`.
pub fn rmse_vs_reference(
    test: &dyn WaveSolution,
    reference: &dyn WaveSolution,
    t: f64,
    nx: usize,
    motion: &BoundaryMotion,
) -> Result<f64> {
    Ok(spatial_errors(test, reference, t, nx, motion)?.rms)
}

pub fn max_error(
    test: &dyn WaveSolution,
    reference: &dyn WaveSolution,
    t: f64,
    nx: usize,
    motion: &BoundaryMotion,
) -> Result<f64> {
    Ok(spatial_errors(test, reference, t, nx, motion)?.max)
}

pub fn mean_error(
    test: &dyn WaveSolution,
    reference: &dyn WaveSolution,
    t: f64,
    nx: usize,
    motion: &BoundaryMotion,
) -> Result<f64> {
    Ok(spatial_errors(test, reference, t, nx, motion)?.mean)
}

/// Modal solution under the exact transform, plus the initial condition it
/// represents exactly.
#[derive(Clone, Debug)]
pub struct Reference {
    pub solution: ModalSolution,
    pub initial_condition: InitialCondition,
}

impl WaveSolution for Reference {
    fn u(&self, x: f64, t: f64) -> Result<f64> {
        self.solution.eval(x, t)
    }
}

pub fn build_reference(motion: &BoundaryMotion, ic: &InitialCondition, n_max: usize) -> Result<Reference> {
    let r = Transform::exact_for(motion).ok_or_else(|| {
        Error::Unsupported(format!("no closed-form transform for {:?}", motion.kind()))
    })?;
    let solution = ModalSolution::new(ic, &r, n_max)?;
    let initial_condition = idealized_initial_condition(&solution.expansion);
    Ok(Reference {
        solution,
        initial_condition,
    })
}

/// A `t_max` holding exactly `count` region boundaries after `t = 0`: the
/// midpoint between the `count`-th and the next reflection time.
pub fn t_max_for_reflections(motion: &BoundaryMotion, count: usize) -> Result<f64> {
    let mut t_hat = vec![0.0f64];
    let mut xi_hat = motion.length_at(0.0);
    for _ in 0..=count {
        let lo = *t_hat.last().unwrap();
        let g = |t: f64| t - motion.length_at(t) - xi_hat;
        let mut hi = lo + xi_hat.abs() + 1.0;
        let mut tries = 0;
        while g(hi) < 0.0 {
            hi = lo + 2.0 * (hi - lo);
            tries += 1;
            if tries > 60 {
                return Err(Error::Bracketing { lo, hi });
            }
        }
        let t = brent(g, lo, hi, 1e-13)?;
        xi_hat = t + motion.length_at(t);
        t_hat.push(t);
    }
    Ok(0.5 * (t_hat[count] + t_hat[count + 1]))
}

/// One row of `timings.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub method: String,
    pub t0: f64,
    pub n_evals: usize,
    pub prep_seconds: f64,
    pub eval_seconds: f64,
    /// IMR: regions built; backtracing: most reflections of any evaluation.
    pub reflections: usize,
    /// Sum of all evaluated `R` values, for checking determinism.
    #[serde(skip)]
    pub checksum: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct TimingOptions {
    pub rho: f64,
    pub seed_degree: SeedDegree,
    pub runs: usize,
    /// Evaluate batches with rayon; such records carry a `-parallel` suffix.
    pub parallel: bool,
    /// Backtracing is skipped for counts above this.
    pub backtrace_limit: usize,
}

impl Default for TimingOptions {
    fn default() -> Self {
        Self {
            rho: crate::imr::DEFAULT_RHO,
            seed_degree: SeedDegree::Cubic,
            runs: TIMING_RUNS,
            parallel: false,
            backtrace_limit: usize::MAX,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `R` is evaluated at `t0 ± x` for `N` equidistant `x` in `[0, L(t0)]`.
fn evaluation_points(motion: &BoundaryMotion, t0: f64, n: usize) -> Vec<f64> {
    let l = motion.length_at(t0);
    x_grid(l, n.max(2))
        .into_iter()
        .take(n)
        .flat_map(|x| [t0 + x, t0 - x])
        .collect()
}

/// Times IMR (preparation and batch evaluation) against backtracing for each
/// count in `counts`, on `motion` cut at `t_max = t0`.
pub fn time_methods(
    motion: &BoundaryMotion,
    t0: f64,
    counts: &[usize],
    opts: &TimingOptions,
) -> Result<Vec<TimingRecord>> {
    if counts.iter().any(|&n| n == 0) {
        return Err(Error::Precondition("evaluation counts must be positive".into()));
    }
    if counts.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Precondition("evaluation counts must be ascending".into()));
    }
    let runs = opts.runs.max(1);
    let m = motion.with_t_max(t0);
    let imr_opts = ImrOptions {
        rho: opts.rho,
        seed_degree: opts.seed_degree,
        ..Default::default()
    };
    let suffix = if opts.parallel { "-parallel" } else { "" };
    let seed = SeedPolynomial::for_motion(&m, opts.seed_degree)?;
    let sum = |v: &[f64]| v.iter().sum::<f64>();

    let mut out = Vec::with_capacity(2 * counts.len());
    for &n in counts {
        let pts = evaluation_points(&m, t0, n);

        let (mut prep, mut eval) = (Vec::with_capacity(runs), Vec::with_capacity(runs));
        let mut imr_values = Vec::new();
        let mut regions = 0;
        // One untimed pass per count warms caches and the allocator.
        for run in 0..=runs {
            let start = Instant::now();
            let r = build_transform(&m, &imr_opts)?;
            prep.push(start.elapsed().as_secs_f64());
            let start = Instant::now();
            imr_values = if opts.parallel {
                pts.par_iter().map(|&x| r.eval(x)).collect::<Result<Vec<_>>>()?
            } else {
                pts.iter().map(|&x| r.eval(x)).collect::<Result<Vec<_>>>()?
            };
            let e = start.elapsed().as_secs_f64();
            if run == 0 {
                prep.clear();
                continue;
            }
            eval.push(e);
            regions = r.region_knots().len();
        }
        out.push(TimingRecord {
            method: format!("imr{suffix}"),
            t0,
            n_evals: n,
            prep_seconds: median(prep),
            eval_seconds: median(eval),
            reflections: regions,
            checksum: sum(&imr_values),
        });

        if n > opts.backtrace_limit {
            continue;
        }
        let mut total = Vec::with_capacity(runs);
        let mut bt_values = Vec::new();
        let mut most = 0;
        for run in 0..=runs {
            let start = Instant::now();
            let b = Backtracer::new(seed.clone(), m.clone())?;
            let res: Vec<(f64, usize)> = if opts.parallel {
                b.eval_many(&pts)?
            } else {
                pts.iter()
                    .map(|&x| b.eval(x).map(|r| (r.value, r.reflections)))
                    .collect::<Result<Vec<_>>>()?
            };
            if run > 0 {
                total.push(start.elapsed().as_secs_f64());
            }
            most = res.iter().map(|r| r.1).max().unwrap_or(0);
            bt_values = res.into_iter().map(|r| r.0).collect();
        }
        out.push(TimingRecord {
            method: format!("backtrace{suffix}"),
            t0,
            n_evals: n,
            prep_seconds: 0.0,
            eval_seconds: median(total),
            reflections: most,
            checksum: sum(&bt_values),
        });
    }
    Ok(out)
}

impl TimingRecord {
    pub fn total_seconds(&self) -> f64 {
        self.prep_seconds + self.eval_seconds
    }
}

/// One row of `errors.csv`. Unavailable quantities are left empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub scenario: String,
    pub t: f64,
    pub eps_rms: Option<f64>,
    pub eps_bc_r: Option<f64>,
    pub eps_bc_w: Option<f64>,
    pub eps_ic: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ErrorReport {
    pub scenario: String,
    pub rows: Vec<ErrorRow>,
    pub timings: Vec<TimingRecord>,
    pub environment: String,
}

impl ErrorReport {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.into(),
            environment: environment_note(),
            ..Default::default()
        }
    }

    /// Appends one `eps_rms(t)` row per time, repeating the scalar residuals.
    pub fn push_series(
        &mut self,
        times: &[f64],
        eps_rms: &[Option<f64>],
        eps_bc_r: Option<f64>,
        eps_bc_w: Option<f64>,
        eps_ic: Option<f64>,
    ) -> Result<()> {
        if times.len() != eps_rms.len() {
            return Err(Error::Precondition("times and eps_rms differ in length".into()));
        }
        for v in eps_rms.iter().chain([&eps_bc_r, &eps_bc_w, &eps_ic]).flatten() {
            if !(*v >= 0.0) {
                return Err(Error::Precondition(format!("error value {v} is negative or NaN")));
            }
        }
        for (&t, &e) in times.iter().zip(eps_rms) {
            self.rows.push(ErrorRow {
                scenario: self.scenario.clone(),
                t,
                eps_rms: e,
                eps_bc_r,
                eps_bc_w,
                eps_ic,
            });
        }
        Ok(())
    }

    pub fn write_errors_csv(&self, path: &Path) -> Result<()> {
        write_errors_csv(path, &self.rows)
    }

    pub fn write_timings_csv(&self, path: &Path) -> Result<()> {
        write_timings_csv(path, &self.timings)
    }
}

pub fn write_errors_csv(path: &Path, rows: &[ErrorRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scenario", "t", "eps_rms", "eps_bc_r", "eps_bc_w", "eps_ic"])?;
    let cell = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            format!("{}", r.t),
            cell(r.eps_rms),
            cell(r.eps_bc_r),
            cell(r.eps_bc_w),
            cell(r.eps_ic),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_timings_csv(path: &Path, records: &[TimingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        if r.n_evals == 0 {
            return Err(Error::Precondition("timing record with zero evaluations".into()));
        }
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Defaults that the error figures depend on but are not fixed elsewhere.
pub fn environment_note() -> String {
    format!(
        "N_x={DEFAULT_NX}; time rms over {RMS_GRID} uniform points on [0, t_max]; \
         timings: median of {TIMING_RUNS} wall-clock runs after one warm-up, single-threaded; \
         {}-{}; {} hardware thread(s)",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    )
}

/// One curve of a gnuplot figure: `columns` are 1-based CSV columns.
#[derive(Clone, Debug)]
pub struct PlotCurve {
    pub csv: String,
    pub x_column: usize,
    pub y_column: usize,
    pub title: String,
    /// Optional gnuplot filter on column 1, e.g. rows of one method.
    pub select: Option<String>,
}

#[derive(Clone, Debug)]
pub struct PlotSpec {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub logx: bool,
    pub logy: bool,
    pub output: String,
    pub curves: Vec<PlotCurve>,
}

/// A gnuplot command file drawing `spec` into a PNG.
pub fn gnuplot_script(spec: &PlotSpec) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{}'", spec.output);
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set title '{}'", spec.title);
    let _ = writeln!(s, "set xlabel '{}'", spec.xlabel);
    let _ = writeln!(s, "set ylabel '{}'", spec.ylabel);
    if spec.logx {
        let _ = writeln!(s, "set logscale x");
    }
    if spec.logy {
        let _ = writeln!(s, "set logscale y");
        let _ = writeln!(s, "set format y '10^{{%L}}'");
    }
    let curves: Vec<String> = spec
        .curves
        .iter()
        .map(|c| {
            let y = match &c.select {
                Some(sel) => format!("(strcol(1) eq '{sel}' ? ${} : 1/0)", c.y_column),
                None => format!("{}", c.y_column),
            };
            format!(
                "'{}' using {}:{} every ::1 with linespoints title '{}'",
                c.csv, c.x_column, y, c.title
            )
        })
        .collect();
    let _ = writeln!(s, "plot {}", curves.join(", \\\n     "));
    s
}
