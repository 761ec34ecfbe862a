//! Recipes regenerating the data behind each published figure, with a
//! gnuplot script per panel.

use std::fs;
use std::path::Path;

use movbound::boundary::MotionSpec;
use movbound::characteristics::{build_characteristic, residual_bc_w_rms};
use movbound::imr::{build_transform, ImrOptions};
use movbound::metrics::{
    build_reference, gnuplot_script, rmse_vs_reference, t_max_for_reflections, time_methods, write_errors_csv,
    write_timings_csv, ErrorRow, PlotCurve, PlotSpec, TimingOptions, WaveSolution,
};
use movbound::modes::{compute_coefficients, epsilon_ic, InitialCondition, ModalSolution};
use movbound::moore::{exponential_coefficients, linear_coefficients, MooreSeries};
use movbound::transform::{residual_bc_r_rms, time_grid};
use movbound::BoundaryMotion;
use rayon::prelude::*;
use serde_json::json;

use crate::commands::{build_r, write_manifest, RParams};
use crate::config::TransformChoice;
use crate::failure::Failure;

pub const FIGURES: [&str; 9] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig6a", "fig6b", "fig7", "fig8"];

/// Reduced sweeps for smoke tests.
#[derive(Clone, Copy, Debug)]
pub struct Scale {
    pub quick: bool,
}

pub fn run(name: &str, out: &Path, scale: Scale) -> Result<Vec<String>, Failure> {
    fs::create_dir_all(out)?;
    let files = match name {
        "fig2" => fig2(out, scale)?,
        "fig3" => fig3(out, scale)?,
        "fig4" => fig4(out, scale)?,
        "fig5" => fig5(out, scale)?,
        "fig6" => {
            let mut f = fig6(out, "fig6a", scale)?;
            f.extend(fig6(out, "fig6b", scale)?);
            f
        }
        "fig6a" | "fig6b" => fig6(out, name, scale)?,
        "fig7" => fig7(out, scale)?,
        "fig8" => fig8(out, scale)?,
        other => {
            return Err(Failure::Config(format!(
                "unknown figure '{other}'; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    };
    let refs: Vec<&str> = files.iter().map(String::as_str).collect();
    write_manifest(out, &format!("figure {name}"), json!({ "figure": name, "quick": scale.quick }), &refs)?;
    Ok(files)
}

/// Rows of `(series, x, y)`.
fn write_series(path: &Path, header: [&str; 3], rows: &[(String, f64, f64)]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (s, x, y) in rows {
        w.write_record([s.clone(), x.to_string(), format!("{y:e}")])?;
    }
    w.flush()?;
    Ok(())
}

fn series_labels(rows: &[(String, f64, f64)]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for (s, _, _) in rows {
        if !out.contains(s) {
            out.push(s.clone());
        }
    }
    out
}

struct Panel<'a> {
    name: &'a str,
    title: &'a str,
    xlabel: &'a str,
    ylabel: &'a str,
    logx: bool,
    logy: bool,
}

/// Writes `<name>.csv` and `<name>.gp` with one curve per series.
fn panel(out: &Path, p: Panel, header: [&str; 3], rows: &[(String, f64, f64)]) -> Result<Vec<String>, Failure> {
    let csv_name = format!("{}.csv", p.name);
    let labels = series_labels(rows);
    // Contiguous series so each curve is drawn without gaps.
    let grouped: Vec<_> = labels
        .iter()
        .flat_map(|l| rows.iter().filter(move |r| &r.0 == l).cloned())
        .collect();
    write_series(&out.join(&csv_name), header, &grouped)?;
    let curves = labels
        .into_iter()
        .map(|s| PlotCurve {
            csv: csv_name.clone(),
            x_column: 2,
            y_column: 3,
            title: s.clone(),
            select: Some(s),
        })
        .collect();
    let gp = format!("{}.gp", p.name);
    let spec = PlotSpec {
        title: p.title.into(),
        xlabel: p.xlabel.into(),
        ylabel: p.ylabel.into(),
        logx: p.logx,
        logy: p.logy,
        output: format!("{}.png", p.name),
        curves,
    };
    fs::write(out.join(&gp), gnuplot_script(&spec))?;
    Ok(vec![csv_name, gp])
}

/// Linear family: `|c_l|`, and the deviation of the truncated series from 2
/// for several speeds.
fn fig2(out: &Path, scale: Scale) -> Result<Vec<String>, Failure> {
    let n = if scale.quick { 15 } else { 40 };
    let a: Vec<_> = linear_coefficients(n)
        .iter()
        .enumerate()
        .map(|(l, c)| ("|c_l|".to_string(), l as f64, c.abs()))
        .collect();
    let mut files = panel(
        out,
        Panel { name: "fig2a", title: "Moore coefficients, linear motion", xlabel: "l", ylabel: "|c_l|", logx: false, logy: true },
        ["series", "l", "abs_c"],
        &a,
    )?;
    let mut b = Vec::new();
    for v in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let s = MooreSeries::linear(0.5, v, n)?;
        for k in 0..=n {
            b.push((format!("v={v}"), k as f64, s.linear_deviation(k)?));
        }
    }
    files.extend(panel(
        out,
        Panel { name: "fig2b", title: "Linear motion: |R_n(t+L) - R_n(t-L) - 2|", xlabel: "n", ylabel: "residual", logx: false, logy: true },
        ["series", "n", "residual"],
        &b,
    )?);
    Ok(files)
}

/// Exponential family: `ln|c_l|` and the rms residual against `n` for
/// several `k` over `t in [0, 1]`.
fn fig3(out: &Path, scale: Scale) -> Result<Vec<String>, Failure> {
    let (n, scan) = if scale.quick { (20, 15) } else { (60, 40) };
    let (ct, c) = exponential_coefficients(n);
    let mut a = Vec::new();
    for l in 0..=n {
        a.push(("ln|c_l|".to_string(), l as f64, c[l].ln_abs));
        a.push(("ln|c~_l|".to_string(), l as f64, ct[l].ln_abs));
    }
    let mut files = panel(
        out,
        Panel { name: "fig3a", title: "Moore coefficients, exponential motion", xlabel: "l", ylabel: "ln|c|", logx: false, logy: false },
        ["series", "l", "ln_abs"],
        &a,
    )?;
    let ks = [0.5, 0.2, 0.05];
    let scans: Vec<Vec<f64>> = ks
        .par_iter()
        .map(|&k| MooreSeries::exponential(k, scan)?.residual_scan(1.0, scan))
        .collect::<Result<_, _>>()?;
    let mut b = Vec::new();
    for (k, r) in ks.iter().zip(scans) {
        for (i, v) in r.into_iter().enumerate() {
            b.push((format!("k={k}"), i as f64, v));
        }
    }
    files.extend(panel(
        out,
        Panel { name: "fig3b", title: "Exponential motion: rms boundary residual of R_n", xlabel: "n", ylabel: "residual", logx: false, logy: true },
        ["series", "n", "residual"],
        &b,
    )?);
    Ok(files)
}

/// `eps_BC,R` (IMR) and `eps_BC,w` (IMC) against resolution for `A = 2` and
/// `A = 0.1`, each cut after four reflections.
fn fig4(out: &Path, scale: Scale) -> Result<Vec<String>, Failure> {
    let rhos: Vec<f64> = if scale.quick {
        vec![25.0, 100.0, 400.0]
    } else {
        (0..11).map(|i| 25.0 * 2f64.powi(i)).collect()
    };
    let mut rows = Vec::new();
    for a in [2.0, 0.1] {
        let base = BoundaryMotion::sinh_inverse(a, 1.0, 1.0, 1.0);
        let motion = base.with_t_max(t_max_for_reflections(&base, 4)?);
        let ic = InitialCondition::gaussian(motion.initial_length());
        let pts: Vec<(f64, f64)> = rhos
            .par_iter()
            .map(|&rho| -> movbound::Result<(f64, f64)> {
                let opts = ImrOptions { rho, ..Default::default() };
                let r = residual_bc_r_rms(&build_transform(&motion, &opts)?, &motion)?;
                let w = residual_bc_w_rms(&build_characteristic(&motion, &ic, &opts)?, &motion)?;
                Ok((r, w))
            })
            .collect::<Result<_, _>>()?;
        for (&rho, (r, w)) in rhos.iter().zip(pts) {
            rows.push((format!("IMR eps_BC_R A={a}"), rho, r));
            rows.push((format!("IMC eps_BC_w A={a}"), rho, w));
        }
    }
    panel(
        out,
        Panel { name: "fig4", title: "Boundary residual against resolution", xlabel: "rho", ylabel: "rms residual", logx: true, logy: true },
        ["series", "rho", "eps_bc"],
        &rows,
    )
}

/// `eps_IC` against the number of modes: exact and IMR transforms on the
/// sinh motion; Moore (at its rms-optimal order) and IMR on the exponential
/// motion, for which a Moore series exists.
fn fig5(out: &Path, scale: Scale) -> Result<Vec<String>, Failure> {
    let ns: Vec<usize> = if scale.quick {
        vec![1, 5, 10, 20]
    } else {
        [1, 2, 3, 4, 5, 6, 8, 10, 12, 15, 20, 25, 30, 35, 40, 45, 50, 60, 70, 80, 90, 100, 110, 120, 130, 140, 150].to_vec()
    };
    let n_max = *ns.last().unwrap();
    let sinh = BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 4.0);
    let expo = BoundaryMotion::exponential(0.3, 4.0);
    let params = RParams {
        rho: movbound::imr::DEFAULT_RHO,
        seed_degree: 3,
        moore_terms: None,
        moore_scan: movbound::moore::DEFAULT_SCAN,
    };
    let cases = [
        (&sinh, TransformChoice::Exact, "exact/sinh"),
        (&sinh, TransformChoice::Imr, "IMR/sinh"),
        (&expo, TransformChoice::Moore, "Moore/exponential"),
        (&expo, TransformChoice::Imr, "IMR/exponential"),
    ];
    let mut jobs = Vec::new();
    for (m, c, label) in cases {
        for ic in ["sine", "gaussian"] {
            jobs.push((m, c, label, ic));
        }
    }
    let results: Vec<Vec<(String, f64, f64)>> = jobs
        .par_iter()
        .map(|&(m, c, label, icn)| -> Result<_, Failure> {
            let ic = InitialCondition::preset(icn, m)?;
            let (r, moore_n) = build_r(c, &params, m)?;
            let full = compute_coefficients(&ic, &r, n_max)?;
            let name = match moore_n {
                Some(n) => format!("{label} n={n} {icn}"),
                None => format!("{label} {icn}"),
            };
            ns.iter()
                .map(|&n| Ok((name.clone(), n as f64, epsilon_ic(&full.truncated(n), &ic)?)))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<_> = results.into_iter().flatten().collect();
    panel(
        out,
        Panel { name: "fig5", title: "Initial-condition error bound", xlabel: "n_max", ylabel: "eps_IC", logx: false, logy: true },
        ["series", "n_max", "eps_ic"],
        &rows,
    )
}

/// `eps_RMS(t)` of every method against the 300-mode exact-transform
/// reference at `rho = 1e4`; `fig6a` is the linear motion, `fig6b` the sinh
/// motion.
fn fig6(out: &Path, name: &str, scale: Scale) -> Result<Vec<String>, Failure> {
    let spec = if name == "fig6a" {
        MotionSpec::Linear { l0: 0.5, v: 0.3 }
    } else {
        MotionSpec::SinhInverse { a: 1.0, k: 1.0, xi0: 1.0 }
    };
    let (t_max, n_t, modes, ref_modes, rho) = if scale.quick {
        (2.0, 5, 40, 80, movbound::imr::DEFAULT_RHO)
    } else {
        (5.0, 41, 150, 300, 1e4)
    };
    let motion = spec.build(t_max);
    let params = RParams {
        rho,
        seed_degree: 3,
        moore_terms: None,
        moore_scan: movbound::moore::DEFAULT_SCAN,
    };
    let mut choices = vec![TransformChoice::Exact, TransformChoice::Imr, TransformChoice::Backtrace];
    if matches!(spec, MotionSpec::Linear { .. }) {
        choices.push(TransformChoice::Moore);
    }
    let times: Vec<f64> = time_grid(t_max, n_t).collect();
    let mut rows = Vec::new();
    for icn in ["sine", "gaussian"] {
        let ic = InitialCondition::preset(icn, &motion)?;
        let reference = build_reference(&motion, &ic, ref_modes)?;
        let mut solutions: Vec<(String, Box<dyn WaveSolution>)> = Vec::new();
        for &c in &choices {
            let (r, moore_n) = build_r(c, &params, &motion)?;
            let label = match (c, moore_n) {
                (TransformChoice::Moore, Some(n)) => format!("moore(n={n})"),
                _ => format!("{c:?}").to_lowercase(),
            };
            solutions.push((format!("{label}-{icn}"), Box::new(ModalSolution::new(&ic, &r, modes)?)));
        }
        let opts = ImrOptions { rho, ..Default::default() };
        let w = build_characteristic(&motion, &reference.initial_condition, &opts)?;
        solutions.push((format!("imc-{icn}"), Box::new(w)));
        for (label, sol) in &solutions {
            let eps: Vec<f64> = times
                .par_iter()
                .map(|&t| rmse_vs_reference(sol.as_ref(), &reference, t, movbound::metrics::DEFAULT_NX, &motion))
                .collect::<Result<_, _>>()?;
            for (&t, e) in times.iter().zip(eps) {
                rows.push(ErrorRow {
                    scenario: label.clone(),
                    t,
                    eps_rms: Some(e),
                    eps_bc_r: None,
                    eps_bc_w: None,
                    eps_ic: None,
                });
            }
        }
    }
    let csv_name = format!("{name}.csv");
    write_errors_csv(&out.join(&csv_name), &rows)?;
    let mut labels: Vec<String> = Vec::new();
    for r in &rows {
        if !labels.contains(&r.scenario) {
            labels.push(r.scenario.clone());
        }
    }
    let spec = PlotSpec {
        title: format!("eps_RMS against the exact-transform reference ({})", if name == "fig6a" { "L = 0.5 + 0.3 t" } else { "sinh, A = k = xi0 = 1" }),
        xlabel: "t".into(),
        ylabel: "eps_RMS".into(),
        logx: false,
        logy: true,
        output: format!("{name}.png"),
        curves: labels
            .into_iter()
            .map(|s| PlotCurve { csv: csv_name.clone(), x_column: 2, y_column: 3, title: s.clone(), select: Some(s) })
            .collect(),
    };
    let gp = format!("{name}.gp");
    fs::write(out.join(&gp), gnuplot_script(&spec))?;
    Ok(vec![csv_name, gp])
}

/// Moore's rms boundary residual against the maximal boundary speed for a
/// few truncation orders; the linear speed is `v`, the exponential one `k`.
fn fig7(out: &Path, scale: Scale) -> Result<Vec<String>, Failure> {
    let speeds: Vec<f64> = if scale.quick {
        vec![0.1, 0.5, 0.9]
    } else {
        vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    };
    let orders = [1usize, 2, 3, 5, 10];
    let top = *orders.last().unwrap();
    let t_max = 1.0;
    let per_speed: Vec<Vec<(String, f64, f64)>> = speeds
        .par_iter()
        .map(|&s| -> Result<_, Failure> {
            let lin = MooreSeries::linear(0.5, s, top)?;
            let exp = MooreSeries::exponential(s, top)?.residual_scan(t_max, top)?;
            let mut rows = Vec::new();
            for &n in &orders {
                rows.push((format!("linear n={n}"), s, lin.linear_deviation(n)?));
                rows.push((format!("exponential n={n}"), s, exp[n]));
            }
            Ok(rows)
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<_> = per_speed.into_iter().flatten().collect();
    panel(
        out,
        Panel { name: "fig7", title: "Moore boundary residual against maximal speed", xlabel: "max |L'|", ylabel: "rms residual", logx: false, logy: true },
        ["series", "max_speed", "residual"],
        &rows,
    )
}

/// IMR against backtracing wall time on the sinh motion for `t0 = 0.5` and 5.
fn fig8(out: &Path, scale: Scale) -> Result<Vec<String>, Failure> {
    let counts: Vec<usize> = if scale.quick {
        vec![10, 100, 1000]
    } else {
        vec![10, 100, 1_000, 10_000, 100_000, 1_000_000]
    };
    let motion = BoundaryMotion::sinh_inverse(1.0, 1.0, 1.0, 5.0);
    let opts = TimingOptions {
        runs: if scale.quick { 1 } else { movbound::metrics::TIMING_RUNS },
        backtrace_limit: 100_000,
        ..Default::default()
    };
    let mut records = Vec::new();
    for t0 in [0.5, 5.0] {
        records.extend(time_methods(&motion, t0, &counts, &opts)?);
    }
    write_timings_csv(&out.join("timings.csv"), &records)?;
    let rows: Vec<_> = records
        .iter()
        .map(|r| (format!("{} t0={}", r.method, r.t0), r.n_evals as f64, r.total_seconds()))
        .collect();
    let mut files = panel(
        out,
        Panel { name: "fig8", title: "Computation time against evaluations", xlabel: "N", ylabel: "seconds", logx: true, logy: true },
        ["series", "n_evals", "seconds"],
        &rows,
    )?;
    files.insert(0, "timings.csv".into());
    Ok(files)
}
