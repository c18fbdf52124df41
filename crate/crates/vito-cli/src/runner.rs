//! Command dispatch: builds model objects from the config, runs the
//! experiment, and writes CSV tables plus a JSON report.

use std::ops::Range;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

use vito::error::Error as VitoError;
use vito::grid::{SamplePath, TimeGrid};
use vito::occupation::{local_time_reconstruct, occupation_ft, SpectralGrid};
use vito::regularity::{best_kappa_over_eta, fit_decay, lp_moment_curve, occupation_ensemble};
use vito::selfinteract::{
    gaussian_bump, solve_picard, stability_experiment, threshold_preset, FourierDrift,
    SolverConfig, ThresholdPreset,
};
use vito::sewing::{frozen_brownian_germ, sewing_rate, GermContext, SewingRate};
use vito::simulate::{
    brownian_path, simulate_fbm, simulate_volterra_power, FbmSampler, WeightProcess,
};
use vito::young2d::{germ_error_exponent, nl_young_integral, GermExponent, TwoParamField};

use crate::config::{Command, ExperimentConfig};
use crate::output::{fmt, fmt_usize, write_report, write_table, CsvTable};

pub struct CliError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures.
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }
}

fn num(e: VitoError) -> CliError {
    CliError::numerical(e.to_string())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::validation(format!("output: {e}"))
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    verbose: bool,
) -> Result<Value, CliError> {
    if cfg.command == Command::Sweep {
        run_sweep(cfg, out_dir, verbose)
    } else {
        run_single(cfg, out_dir, verbose)
    }
}

fn run_single(cfg: &ExperimentConfig, out_dir: &Path, verbose: bool) -> Result<Value, CliError> {
    let hash = cfg.hash();
    if verbose {
        eprintln!("running {} (config {})", cfg.command.name(), &hash[..12]);
    }
    let (summary, tables) = dispatch(cfg, verbose)?;
    let mut files = Vec::new();
    for table in &tables {
        let path = write_table(out_dir, &cfg.prefix, &hash, table).map_err(io_err)?;
        files.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    let report = json!({
        "command": cfg.command.name(),
        "config_hash": hash,
        "unix_time": SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "tables": files,
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "summary": summary,
    });
    write_report(out_dir, &cfg.prefix, &report).map_err(io_err)?;
    Ok(summary)
}

fn dispatch(cfg: &ExperimentConfig, verbose: bool) -> Result<(Value, Vec<CsvTable>), CliError> {
    match cfg.command {
        Command::Simulate => cmd_simulate(cfg),
        Command::Occupation => cmd_occupation(cfg),
        Command::Density => cmd_density(cfg),
        Command::Regularity => cmd_regularity(cfg, verbose),
        Command::Sewing => cmd_sewing(cfg),
        Command::Young2d => cmd_young2d(cfg),
        Command::Selfinteract => cmd_selfinteract(cfg),
        Command::Stability => cmd_stability(cfg),
        Command::Sweep => unreachable!("sweep handled by run_experiment"),
    }
}

fn time_grid(cfg: &ExperimentConfig) -> Result<TimeGrid, CliError> {
    TimeGrid::new(cfg.grid.horizon, cfg.grid.n_steps).map_err(num)
}

fn spectral_grid(cfg: &ExperimentConfig) -> Result<SpectralGrid, CliError> {
    SpectralGrid::uniform_1d(cfg.spectral.xi_max, cfg.spectral.n_points).map_err(num)
}

fn require_scalar(cfg: &ExperimentConfig, what: &str) -> Result<(), CliError> {
    if cfg.path.dim != 1 {
        return Err(CliError::validation(format!(
            "{what} needs path.dim = 1, got {}",
            cfg.path.dim
        )));
    }
    Ok(())
}

/// Hurst index governing the sampled path's small-scale behavior.
fn effective_h(cfg: &ExperimentConfig) -> f64 {
    if cfg.path.kind == "brownian" {
        0.5
    } else {
        cfg.path.h
    }
}

fn sample_one(cfg: &ExperimentConfig, index: u64) -> Result<SamplePath, CliError> {
    let grid = time_grid(cfg)?;
    let p = &cfg.path;
    match p.kind.as_str() {
        "fbm" => simulate_fbm(p.h, &grid, p.dim, cfg.seed, index).map_err(num),
        "brownian" => Ok(brownian_path(&grid, p.dim, cfg.seed, index)),
        "volterra_power" => {
            simulate_volterra_power(p.h, p.x0, p.b0, p.beta, p.theta, &grid, cfg.seed, index)
                .map_err(num)
        }
        other => Err(CliError::validation(format!("unknown path.kind \"{other}\""))),
    }
}

fn sample_batch(cfg: &ExperimentConfig, range: Range<u64>) -> Result<Vec<SamplePath>, CliError> {
    let grid = time_grid(cfg)?;
    let p = &cfg.path;
    match p.kind.as_str() {
        "fbm" => {
            let sampler = FbmSampler::new(p.h, &grid, p.dim).map_err(num)?;
            Ok(sampler.sample_many(cfg.seed, range))
        }
        "brownian" => Ok(range
            .map(|i| brownian_path(&grid, p.dim, cfg.seed, i))
            .collect()),
        "volterra_power" => range
            .map(|i| {
                simulate_volterra_power(p.h, p.x0, p.b0, p.beta, p.theta, &grid, cfg.seed, i)
                    .map_err(num)
            })
            .collect(),
        other => Err(CliError::validation(format!("unknown path.kind \"{other}\""))),
    }
}

fn weight_process(cfg: &ExperimentConfig) -> Result<WeightProcess, CliError> {
    match cfg.occupation.weight.as_str() {
        "one" => Ok(WeightProcess::one()),
        "gaussian_state" => Ok(WeightProcess::state(
            |x: &[f64]| (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp(),
            cfg.occupation.chi,
        )),
        other => Err(CliError::validation(format!(
            "unknown occupation.weight \"{other}\""
        ))),
    }
}

fn pairs_of(cfg: &ExperimentConfig) -> Vec<(f64, f64)> {
    if cfg.occupation.pairs.is_empty() {
        vec![(0.0, cfg.grid.horizon)]
    } else {
        cfg.occupation.pairs.iter().map(|p| (p[0], p[1])).collect()
    }
}

fn drift_of(cfg: &ExperimentConfig) -> Result<(FourierDrift, Option<f64>), CliError> {
    let si = &cfg.selfinteract;
    match si.preset.as_str() {
        "gaussian" => Ok((gaussian_bump(), None)),
        "skew_delta0" => {
            let (d, h) = threshold_preset(ThresholdPreset::SkewDelta0).map_err(num)?;
            Ok((d, Some(h)))
        }
        "edwards_grad_delta0" => {
            let (d, h) =
                threshold_preset(ThresholdPreset::EdwardsGradDelta0 { dim: 1 }).map_err(num)?;
            Ok((d, Some(h)))
        }
        "durrett_rogers" => {
            let (d, h) = threshold_preset(ThresholdPreset::DurrettRogers).map_err(num)?;
            Ok((d, Some(h)))
        }
        "edwards_fractional" => Err(CliError::validation(
            "selfinteract.preset \"edwards_fractional\" needs dimension >= 2; \
             the solver handles scalar state only",
        )),
        other => Err(CliError::validation(format!(
            "unknown selfinteract.preset \"{other}\""
        ))),
    }
}

fn solver_config(cfg: &ExperimentConfig) -> Result<SolverConfig, CliError> {
    let si = &cfg.selfinteract;
    let mut sc = SolverConfig::new(si.gamma, si.u0)
        .and_then(|c| c.with_tolerance(si.picard_tol))
        .and_then(|c| c.with_max_iters(si.max_iters))
        .map_err(num)?;
    if let Some(tau) = si.step_tau {
        sc = sc.with_step(tau).map_err(num)?;
    }
    Ok(sc)
}

fn cmd_simulate(cfg: &ExperimentConfig) -> Result<(Value, Vec<CsvTable>), CliError> {
    let k = cfg.ensemble.m.min(cfg.ensemble.max_paths_out);
    let grid = time_grid(cfg)?;
    let dim = cfg.path.dim;
    let mut header: Vec<String> = vec!["path".into(), "node".into(), "t".into()];
    for c in 0..dim {
        header.push(format!("x_{c}"));
    }
    let mut table = CsvTable {
        name: "paths".into(),
        header,
        rows: Vec::new(),
    };
    let mut sup = 0.0f64;
    let mut terminal = Vec::new();
    for idx in 0..k {
        let path = sample_one(cfg, idx as u64)?;
        sup = sup.max(path.sup_norm());
        terminal.push(path.value(grid.n_steps())[0]);
        for node in 0..=grid.n_steps() {
            let mut row = vec![
                fmt_usize(idx),
                fmt_usize(node),
                fmt(grid.node(node)),
            ];
            row.extend(path.value(node).iter().map(|&v| fmt(v)));
            table.push(row);
        }
    }
    let summary = json!({
        "paths_written": k,
        "sup_norm": sup,
        "terminal_values": terminal,
    });
    Ok((summary, vec![table]))
}

fn cmd_occupation(cfg: &ExperimentConfig) -> Result<(Value, Vec<CsvTable>), CliError> {
    require_scalar(cfg, "occupation")?;
    let path = sample_one(cfg, 0)?;
    let spectral = spectral_grid(cfg)?;
    let weight = weight_process(cfg)?;
    let w = weight.eval_along(&path);
    let pairs = pairs_of(cfg);
    let ft = occupation_ft(&path, &w, cfg.occupation.delta, &spectral, &pairs).map_err(num)?;
    let mut table = CsvTable::new("occupation", &["pair", "t1", "t2", "xi", "re", "im", "abs"]);
    let mut max_abs = 0.0f64;
    for pair in 0..ft.n_pairs() {
        let (t1, t2) = ft.pair_times[pair];
        for (k, v) in ft.pair_values(pair).iter().enumerate() {
            max_abs = max_abs.max(v.norm());
            table.push(vec![
                fmt_usize(pair),
                fmt(t1),
                fmt(t2),
                fmt(spectral.point(k)[0]),
                fmt(v.re),
                fmt(v.im),
                fmt(v.norm()),
            ]);
        }
    }
    let summary = json!({
        "n_pairs": ft.n_pairs(),
        "n_frequencies": spectral.len(),
        "max_abs": max_abs,
    });
    Ok((summary, vec![table]))
}

fn cmd_density(cfg: &ExperimentConfig) -> Result<(Value, Vec<CsvTable>), CliError> {
    require_scalar(cfg, "density")?;
    let path = sample_one(cfg, 0)?;
    let spectral = spectral_grid(cfg)?;
    let weight = weight_process(cfg)?;
    let w = weight.eval_along(&path);
    let pairs = pairs_of(cfg);
    let ft = occupation_ft(&path, &w, cfg.occupation.delta, &spectral, &pairs).map_err(num)?;
    let d = &cfg.density;
    let rec = local_time_reconstruct(&ft, d.pair, (d.x_min, d.x_max, d.n_x)).map_err(num)?;
    let mut table = CsvTable::new("density", &["x", "density"]);
    for (x, v) in rec.xs.iter().zip(&rec.density) {
        table.push(vec![fmt(*x), fmt(*v)]);
    }
    let dx = (d.x_max - d.x_min) / (d.n_x - 1) as f64;
    let mass: f64 = rec.density.iter().sum::<f64>() * dx;
    let summary = json!({
        "mass": mass,
        "imag_residue": rec.imag_residue,
        "warning": rec.warning,
    });
    Ok((summary, vec![table]))
}

fn cmd_regularity(cfg: &ExperimentConfig, verbose: bool) -> Result<(Value, Vec<CsvTable>), CliError> {
    require_scalar(cfg, "regularity")?;
    let spectral = spectral_grid(cfg)?;
    let weight = weight_process(cfg)?;
    let pairs = pairs_of(cfg);
    let m = cfg.ensemble.m;
    let batch = cfg.ensemble.batch;
    let mut fts = Vec::with_capacity(m);
    let mut start = 0usize;
    while start < m {
        let stop = (start + batch).min(m);
        let paths = sample_batch(cfg, start as u64..stop as u64)?;
        let batch_fts =
            occupation_ensemble(&paths, &weight, cfg.occupation.delta, &spectral, &pairs)
                .map_err(num)?;
        fts.extend(batch_fts);
        if verbose {
            eprintln!("  ensemble {stop}/{m}");
        }
        start = stop;
    }
    let r = &cfg.regularity;
    let moments = lp_moment_curve(&fts, r.p).map_err(num)?;
    let fit = fit_decay(moments.curve(0), &spectral, r.xi_fit[0], r.xi_fit[1], r.p).map_err(num)?;

    let h = effective_h(cfg);
    let target = r.etas.iter().fold(0.0f64, |t, &eta| t.max(eta / h));
    let margin = fit.exponent - target;
    let prediction = match r.zeta {
        Some(z) => {
            let p = best_kappa_over_eta(h, z, r.delta, r.chi, &r.etas).map_err(num)?;
            json!({
                "eta": p.eta,
                "zeta": p.zeta,
                "kappa_star": p.kappa_star,
            })
        }
        None => Value::Null,
    };

    let mut table = CsvTable::new("moments", &["pair", "t1", "t2", "xi", "moment", "std_error"]);
    for pair in 0..moments.n_pairs {
        let (t1, t2) = moments.pair_times[pair];
        let curve = moments.curve(pair);
        let errs = moments.errors(pair);
        for k in 0..moments.nk {
            table.push(vec![
                fmt_usize(pair),
                fmt(t1),
                fmt(t2),
                fmt(spectral.point(k)[0]),
                fmt(curve[k]),
                fmt(errs[k]),
            ]);
        }
    }
    let summary = json!({
        "m": m,
        "p": r.p,
        "h": h,
        "fitted_exponent": fit.exponent,
        "r_squared": fit.r_squared,
        "target_exponent": target,
        "margin": margin,
        "pass": margin >= -0.2,
        "prediction": prediction,
    });
    Ok((summary, vec![table]))
}

fn cmd_sewing(cfg: &ExperimentConfig) -> Result<(Value, Vec<CsvTable>), CliError> {
    require_scalar(cfg, "sewing")?;
    let germ = frozen_brownian_germ(cfg.sewing.xi).map_err(num)?;
    let horizon = cfg.grid.horizon;
    let levels = cfg.sewing.level_lo..cfg.sewing.level_hi;
    let mut table = CsvTable::new("rates", &["path", "status", "rate"]);
    let mut fitted = Vec::new();
    let mut n_exact = 0usize;
    for idx in 0..cfg.ensemble.m {
        let path = sample_one(cfg, idx as u64)?;
        let ctx = GermContext::with_path(&path);
        let rate = sewing_rate(&germ, 0.0, horizon, levels.clone(), &ctx).map_err(num)?;
        match rate {
            SewingRate::Exact => {
                n_exact += 1;
                table.push(vec![fmt_usize(idx), "exact".into(), String::new()]);
            }
            SewingRate::Fitted { rate, .. } => {
                fitted.push(rate);
                table.push(vec![fmt_usize(idx), "fitted".into(), fmt(rate)]);
            }
        }
    }
    let mean_rate = if fitted.is_empty() {
        f64::NAN
    } else {
        fitted.iter().sum::<f64>() / fitted.len() as f64
    };
    let summary = json!({
        "m": cfg.ensemble.m,
        "xi": cfg.sewing.xi,
        "mean_rate": mean_rate,
        "n_exact": n_exact,
        "expected_rate": germ.expected_rate(),
        "path_kind": cfg.path.kind,
    });
    Ok((summary, vec![table]))
}

fn cmd_young2d(cfg: &ExperimentConfig) -> Result<(Value, Vec<CsvTable>), CliError> {
    require_scalar(cfg, "young2d")?;
    let path = sample_one(cfg, 0)?;
    let field = TwoParamField::scalar(
        1.0,
        1.0,
        |t1, t2, x| t1 * t2 * x.cos(),
        |t1, t2, x| -t1 * t2 * x.sin(),
    )
    .map_err(num)?;
    let y = &cfg.young2d;
    let horizon = cfg.grid.horizon;
    let rect = ((0.0, horizon), (0.0, horizon));
    let integral = nl_young_integral(&field, &path, y.beta, rect, y.level).map_err(num)?;
    // The germ fit evaluates the path at dyadic refinements of the smallest
    // box, so cap the level at what the simulation grid can resolve.
    let dt = path.grid().dt();
    let delta_min = y.delta0 * 2f64.powi(-(y.n_sizes as i32 - 1));
    let mut germ_level = y.level.min(8);
    while germ_level > 0 {
        let finest = delta_min * 2f64.powi(-(germ_level as i32));
        let ratio = finest / dt;
        if (ratio - ratio.round()).abs() < 1e-9 && ratio >= 1.0 - 1e-9 {
            break;
        }
        germ_level -= 1;
    }
    let germ = germ_error_exponent(
        &field,
        &path,
        y.beta,
        (y.corner[0], y.corner[1]),
        y.delta0,
        y.n_sizes,
        germ_level,
    )
    .map_err(num)?;
    let (germ_status, germ_value) = match germ {
        GermExponent::Exact => ("exact".to_string(), String::new()),
        GermExponent::Fitted { exponent, .. } => ("fitted".to_string(), fmt(exponent)),
    };
    let mut table = CsvTable::new(
        "young2d",
        &["value", "error_indicator", "converged", "germ_status", "germ_exponent"],
    );
    table.push(vec![
        fmt(integral.value[0]),
        fmt(integral.error_indicator),
        integral.converged.to_string(),
        germ_status.clone(),
        germ_value,
    ]);
    let summary = json!({
        "value": integral.value,
        "error_indicator": integral.error_indicator,
        "converged": integral.converged,
        "germ_status": germ_status,
        "germ_exponent": match germ {
            GermExponent::Exact => Value::Null,
            GermExponent::Fitted { exponent, .. } => json!(exponent),
        },
    });
    Ok((summary, vec![table]))
}

fn cmd_selfinteract(cfg: &ExperimentConfig) -> Result<(Value, Vec<CsvTable>), CliError> {
    require_scalar(cfg, "selfinteract")?;
    let z = sample_one(cfg, 0)?;
    let spectral = spectral_grid(cfg)?;
    let (drift, h_bound) = drift_of(cfg)?;
    let scfg = solver_config(cfg)?;
    let sol = solve_picard(&drift, &spectral, &scfg, &z).map_err(num)?;
    let grid = *z.grid();
    let mut solution = CsvTable::new("solution", &["node", "t", "z", "theta", "u"]);
    for i in 0..=grid.n_steps() {
        solution.push(vec![
            fmt_usize(i),
            fmt(grid.node(i)),
            fmt(z.scalar(i)),
            fmt(sol.theta.scalar(i)),
            fmt(sol.u.scalar(i)),
        ]);
    }
    let d = &sol.diagnostics;
    let mut windows = CsvTable::new("windows", &["window", "iterations", "contraction"]);
    for (w, (it, fac)) in d.iterations.iter().zip(&d.contraction_factors).enumerate() {
        windows.push(vec![fmt_usize(w), fmt_usize(*it), fmt(*fac)]);
    }
    let summary = json!({
        "preset": cfg.selfinteract.preset,
        "h_bound": h_bound,
        "h": effective_h(cfg),
        "tau": d.tau,
        "tau_halvings": d.tau_halvings,
        "n_windows": d.n_windows,
        "max_contraction": d.max_contraction,
        "defect": d.defect,
        "defect_bound": 2.0 * cfg.selfinteract.picard_tol,
        "defect_ok": d.defect <= 2.0 * cfg.selfinteract.picard_tol,
    });
    Ok((summary, vec![solution, windows]))
}

fn cmd_stability(cfg: &ExperimentConfig) -> Result<(Value, Vec<CsvTable>), CliError> {
    require_scalar(cfg, "stability")?;
    let z = sample_one(cfg, 0)?;
    let spectral = spectral_grid(cfg)?;
    let (drift, _) = drift_of(cfg)?;
    let scfg = solver_config(cfg)?;
    let report =
        stability_experiment(&drift, &cfg.stability.levels, &spectral, &scfg, &z).map_err(num)?;
    let mut table = CsvTable::new("stability", &["level", "fl_distance", "u_distance", "ratio"]);
    for row in &report.rows {
        table.push(vec![
            fmt(row.level),
            fmt(row.fl_distance),
            fmt(row.u_distance),
            fmt(row.ratio),
        ]);
    }
    let finite: Vec<f64> = report.rows.iter().map(|r| r.ratio).filter(|r| r.is_finite()).collect();
    let spread = if finite.is_empty() {
        f64::NAN
    } else {
        let max = finite.iter().fold(0.0f64, |m, &r| m.max(r));
        let min = finite.iter().fold(f64::INFINITY, |m, &r| m.min(r));
        max / min
    };
    let summary = json!({
        "preset": cfg.selfinteract.preset,
        "levels": cfg.stability.levels,
        "ratio_spread": spread,
        "reference_defect": report.reference.diagnostics.defect,
    });
    Ok((summary, vec![table]))
}

/// Headline scalar pulled from a command summary for the merged sweep table.
fn headline(command: Command, summary: &Value) -> Option<f64> {
    let key = match command {
        Command::Simulate => "sup_norm",
        Command::Occupation => "max_abs",
        Command::Density => "mass",
        Command::Regularity => "fitted_exponent",
        Command::Sewing => "mean_rate",
        Command::Young2d => "error_indicator",
        Command::Selfinteract => "defect",
        Command::Stability => "ratio_spread",
        Command::Sweep => return None,
    };
    summary.get(key).and_then(Value::as_f64)
}

fn run_sweep(cfg: &ExperimentConfig, out_dir: &Path, verbose: bool) -> Result<Value, CliError> {
    let sweep = cfg
        .sweep
        .as_ref()
        .expect("validated: sweep command carries a sweep block");
    let hash = cfg.hash();
    let mut table = CsvTable::new(
        "sweep",
        &["index", "field", "value", "seed", "status", "metric", "config_hash", "message"],
    );
    let mut ok = 0usize;
    let mut failed = 0usize;
    for (i, value) in sweep.values.iter().enumerate() {
        let value_text = value.to_string();
        let seed = cfg.seed + i as u64;
        let entry = (|| -> Result<(String, Option<f64>), CliError> {
            let mut sub = cfg
                .with_override(&sweep.field, value)
                .map_err(CliError::validation)?;
            sub.command = sweep.command;
            sub.seed = seed;
            sub.prefix = format!("{}_{i:03}", cfg.prefix);
            sub.sweep = None;
            let sub_hash = sub.hash();
            let summary = run_single(&sub, out_dir, verbose)?;
            Ok((sub_hash, headline(sweep.command, &summary)))
        })();
        match entry {
            Ok((sub_hash, metric)) => {
                ok += 1;
                table.push(vec![
                    fmt_usize(i),
                    sweep.field.clone(),
                    value_text,
                    format!("{seed}"),
                    "ok".into(),
                    metric.map(fmt).unwrap_or_default(),
                    sub_hash,
                    String::new(),
                ]);
            }
            Err(e) => {
                failed += 1;
                table.push(vec![
                    fmt_usize(i),
                    sweep.field.clone(),
                    value_text,
                    format!("{seed}"),
                    "failed".into(),
                    String::new(),
                    String::new(),
                    e.message.replace(',', ";").replace('\n', " "),
                ]);
            }
        }
    }
    write_table(out_dir, &cfg.prefix, &hash, &table).map_err(io_err)?;
    let summary = json!({
        "entries": sweep.values.len(),
        "ok": ok,
        "failed": failed,
        "field": sweep.field,
        "command": sweep.command.name(),
    });
    let report = json!({
        "command": "sweep",
        "config_hash": hash,
        "unix_time": SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "tables": [format!("{}_sweep.csv", cfg.prefix)],
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "summary": summary,
    });
    write_report(out_dir, &cfg.prefix, &report).map_err(io_err)?;
    Ok(summary)
}
