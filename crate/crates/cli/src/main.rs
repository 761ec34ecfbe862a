//! `movbound`: solver runs, transform sampling, Moore diagnostics, timing
//! and figure recipes for the wave equation on `[0, L(t)]`.
//!
//! Exit status: 0 on success, 2 for configuration errors, 3 for invalid
//! scenarios, 4 for numeric failures, 1 for I/O errors.

mod commands;
mod config;
mod failure;
mod figures;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use movbound::metrics::TimingOptions;
use serde_json::{json, Map, Value};

use config::{IcChoice, Method, TransformChoice};
use failure::Failure;

#[derive(Parser)]
#[command(name = "movbound", version, about = "Wave equation with a moving boundary")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MotionArgs {
    /// Preset (linear, exponential, sinh, sinh-slow, sinh-fast), inline JSON
    /// or a JSON file with {"motion": ..., "t_max": ...}.
    #[arg(long)]
    motion: Option<String>,
    #[arg(long)]
    t_max: Option<f64>,
}

impl MotionArgs {
    fn overrides(&self) -> Result<Map<String, Value>, Failure> {
        let mut m = match &self.motion {
            Some(a) => config::motion_argument(a)?,
            None => Map::new(),
        };
        config::set(&mut m, "t_max", self.t_max)?;
        Ok(m)
    }

    /// Motion from flags alone, with `t_max` defaulting to `default_t_max`.
    fn build(&self, default_t_max: f64) -> Result<(movbound::BoundaryMotion, Value), Failure> {
        let mut m = self.overrides()?;
        if !m.contains_key("motion") {
            return Err(Failure::Config("--motion is required".into()));
        }
        m.entry("t_max").or_insert(json!(default_t_max));
        let cfg: movbound::boundary::MotionConfig =
            serde_json::from_value(Value::Object(m.clone())).map_err(|e| Failure::Config(e.to_string()))?;
        Ok((cfg.build(), Value::Object(m)))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario; writes u.csv, errors.csv and manifest.json.
    Solve {
        /// Scenario JSON (a previous manifest.json also works).
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        motion: MotionArgs,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Transform for `--method modes`.
        #[arg(long, value_enum)]
        transform: Option<TransformChoice>,
        #[arg(long, value_enum)]
        ic: Option<IcChoice>,
        /// Samples `x,f,g` for `--ic file`.
        #[arg(long)]
        ic_file: Option<PathBuf>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        nmax: Option<usize>,
        #[arg(long)]
        seed_degree: Option<u32>,
        #[arg(long)]
        moore_terms: Option<usize>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        nt: Option<usize>,
        #[arg(long)]
        reference_modes: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Build R and sample (xi, R, R') to transform.csv.
    BuildTransform {
        #[command(flatten)]
        motion: MotionArgs,
        #[arg(long, value_enum, default_value = "imr")]
        method: TransformChoice,
        #[arg(long, default_value_t = movbound::imr::DEFAULT_RHO)]
        rho: f64,
        #[arg(long, default_value_t = 3)]
        seed_degree: u32,
        #[arg(long)]
        moore_terms: Option<usize>,
        /// Number of samples written; 0 writes no CSV.
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Moore coefficients, term magnitudes and partial-sum residuals.
    MooreDiagnostics {
        #[command(flatten)]
        motion: MotionArgs,
        #[arg(long, default_value_t = movbound::moore::DEFAULT_SCAN)]
        terms: usize,
        #[arg(long, default_value_t = 1.0)]
        xi_probe: f64,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// IMR against backtracing wall time; writes timings.csv.
    Bench {
        #[command(flatten)]
        motion: MotionArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 5.0])]
        t0: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 100, 1000, 10000, 100000])]
        counts: Vec<usize>,
        #[arg(long, default_value_t = movbound::imr::DEFAULT_RHO)]
        rho: f64,
        #[arg(long, default_value_t = movbound::metrics::TIMING_RUNS)]
        runs: usize,
        /// Evaluate batches on all threads.
        #[arg(long)]
        parallel: bool,
        /// Skip backtracing above this count.
        #[arg(long, default_value_t = usize::MAX)]
        backtrace_limit: usize,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
    },
    /// Regenerate the data and gnuplot scripts behind a figure.
    Figure {
        /// fig2, fig3, fig4, fig5, fig6, fig6a, fig6b, fig7 or fig8.
        name: String,
        #[arg(long, short, default_value = "out")]
        out: PathBuf,
        /// Coarser sweeps for a fast smoke run.
        #[arg(long)]
        quick: bool,
    },
    /// Check L > 0 and |L'| < 1 on [0, t_max]; prints a JSON report.
    ValidateMotion {
        #[command(flatten)]
        motion: MotionArgs,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            config: cfg,
            motion,
            method,
            transform,
            ic,
            ic_file,
            rho,
            nmax,
            seed_degree,
            moore_terms,
            nx,
            nt,
            reference_modes,
            out,
        } => {
            let mut o = motion.overrides()?;
            config::set(&mut o, "method", method)?;
            config::set(&mut o, "transform", transform)?;
            config::set(&mut o, "ic", ic)?;
            config::set(&mut o, "ic_file", ic_file)?;
            config::set(&mut o, "rho", rho)?;
            config::set(&mut o, "n_max", nmax)?;
            config::set(&mut o, "seed_degree", seed_degree)?;
            config::set(&mut o, "moore_terms", moore_terms)?;
            config::set(&mut o, "n_x", nx)?;
            config::set(&mut o, "n_t", nt)?;
            config::set(&mut o, "reference_modes", reference_modes)?;
            config::set(&mut o, "output_dir", out)?;
            let scenario = config::scenario_from(config::layered(cfg.as_deref(), o)?)?;
            let outcome = commands::solve(scenario)?;
            summarize(&outcome.rows);
            println!("manifest: {}", outcome.manifest.display());
        }
        Command::BuildTransform {
            motion,
            method,
            rho,
            seed_degree,
            moore_terms,
            samples,
            out,
        } => {
            let (m, mut resolved) = motion.build(8.0)?;
            resolved["method"] = json!(method);
            resolved["rho"] = json!(rho);
            resolved["seed_degree"] = json!(seed_degree);
            resolved["samples"] = json!(samples);
            let residual = commands::build_transform_cmd(commands::TransformArgs {
                motion: m,
                method,
                params: commands::RParams {
                    rho,
                    seed_degree,
                    moore_terms,
                    moore_scan: movbound::moore::DEFAULT_SCAN,
                },
                samples,
                out,
                resolved,
            })?;
            println!("eps_bc_r (rms over t): {residual:e}");
        }
        Command::MooreDiagnostics {
            motion,
            terms,
            xi_probe,
            out,
        } => {
            let (m, mut resolved) = motion.build(1.0)?;
            resolved["terms"] = json!(terms);
            resolved["xi_probe"] = json!(xi_probe);
            let rows = commands::moore_diagnostics(&m, terms, xi_probe, &out, resolved)?;
            let best = rows
                .iter()
                .min_by(|a, b| a[4].total_cmp(&b[4]))
                .expect("at least one term");
            println!("lowest residual {:e} at n = {}", best[4], best[0]);
        }
        Command::Bench {
            motion,
            t0,
            counts,
            rho,
            runs,
            parallel,
            backtrace_limit,
            out,
        } => {
            let t_hi = t0.iter().copied().fold(0.0, f64::max);
            let (m, mut resolved) = motion.build(t_hi)?;
            resolved["t0"] = json!(t0);
            resolved["counts"] = json!(counts);
            resolved["rho"] = json!(rho);
            resolved["runs"] = json!(runs);
            resolved["parallel"] = json!(parallel);
            resolved["backtrace_limit"] = json!(backtrace_limit);
            let opts = TimingOptions {
                rho,
                runs,
                parallel,
                backtrace_limit,
                ..Default::default()
            };
            let records = commands::bench(&m, &t0, &counts, &opts, &out, resolved)?;
            for r in records {
                println!(
                    "{:<18} t0={:<4} N={:<8} prep={:.3e}s eval={:.3e}s reflections={}",
                    r.method, r.t0, r.n_evals, r.prep_seconds, r.eval_seconds, r.reflections
                );
            }
        }
        Command::Figure { name, out, quick } => {
            let files = figures::run(&name, &out, figures::Scale { quick })?;
            for f in files {
                println!("{}", out.join(f).display());
            }
        }
        Command::ValidateMotion { motion } => {
            let (m, _) = motion.build(8.0)?;
            let report = commands::validate_motion(&m)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
        }
    }
    Ok(())
}

fn summarize(rows: &[movbound::metrics::ErrorRow]) {
    let Some(first) = rows.first() else { return };
    let worst = rows.iter().filter_map(|r| r.eps_rms).fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))));
    let show = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_else(|| "-".into());
    println!(
        "{}: max eps_rms {}, eps_bc_r {}, eps_bc_w {}, eps_ic {}",
        first.scenario,
        show(worst),
        show(first.eps_bc_r),
        show(first.eps_bc_w),
        show(first.eps_ic)
    );
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("movbound: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
