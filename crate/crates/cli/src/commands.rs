//! One function per subcommand. Each resolves its settings, computes, and
//! returns a [`Run`] for the caller to write out.

use std::path::Path;
use std::sync::Arc;

use rough_core::bounds::{main_lemma_audit, neoclassical_sides, EstimateReport};
use rough_core::experiments::{
    auto_beta, cde_sweep, determinism_probe, neoclassical_grid, prepare_pair, run_suite, Outcome, SuiteConfig,
    NEOCLASSICAL_PS,
};
use rough_core::extension::{lyons_beta_threshold, lyons_extend, ExtensionConfig};
use rough_core::io::{read_path, read_problem_json, write_estimate_csv};
use rough_core::partition::{total_dyadic_partition, DEFAULT_BALANCE_TOL};
use rough_core::path::{calibrated_joint_control, Control, ControlledFunctional, PiecewiseLinearPath};
use rough_core::experiments::AUTO_BETA_FACTOR;
use rough_core::TruncatedTensor;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BetaSpec, Settings};
use crate::error::CliError;
use crate::output::{num, RunMeta, Table};

/// Tabular output of a run.
pub enum Report {
    Table(Table),
    /// Already formatted CSV carrying its own identity columns.
    Csv(Vec<u8>),
}

pub struct Run {
    pub meta: RunMeta,
    pub passed: bool,
    pub report: Report,
    pub summary: Value,
}

/// Largest extension error accepted by `extend`.
pub const EXTEND_MAX_ERROR: f64 = 1e-8;
const NEOCLASSICAL_SLACK: f64 = 1e-10;

fn load_path(file: &Path) -> Result<Arc<PiecewiseLinearPath>, CliError> {
    Ok(Arc::new(read_path(file)?))
}

fn interval(settings: &Settings) -> Result<(f64, f64), CliError> {
    let (s, t) = (settings.s.unwrap_or(0.0), settings.t.unwrap_or(1.0));
    if !(0.0 <= s && s <= t && t <= 1.0) {
        return Err(CliError::Usage(format!("need 0 <= s <= t <= 1, got s = {s}, t = {t}")));
    }
    Ok((s, t))
}

fn p_value(settings: &Settings, default: f64) -> Result<f64, CliError> {
    let p = settings.p.unwrap_or(default);
    if !(p >= 1.0 && p.is_finite()) {
        return Err(CliError::Usage(format!("p must be >= 1, got {p}")));
    }
    Ok(p)
}

fn tol_value(settings: &Settings, default: f64) -> Result<f64, CliError> {
    Settings::check_positive("tol", settings.tol.unwrap_or(default))
}

/// Dot-separated 1-based word of the `index`-th coefficient of level `k`.
pub fn word(dim: usize, k: usize, mut index: usize) -> String {
    let mut letters = vec![0usize; k];
    for slot in letters.iter_mut().rev() {
        *slot = index % dim + 1;
        index /= dim;
    }
    letters.iter().map(usize::to_string).collect::<Vec<_>>().join(".")
}

fn tensor_rows(table: &mut Table, tensor: &TruncatedTensor) {
    for k in 0..=tensor.depth() {
        for (j, v) in tensor.level(k).iter().enumerate() {
            table.push(vec![k.to_string(), word(tensor.dim(), k, j), num(*v)]);
        }
    }
}

#[derive(Serialize)]
struct SignatureConfig<'a> {
    path: &'a Path,
    depth: usize,
    s: f64,
    t: f64,
}

pub fn signature(settings: &Settings) -> Result<Run, CliError> {
    let file = settings.require_path("path")?;
    let depth = settings.depth.unwrap_or(2);
    let (s, t) = interval(settings)?;
    let path = load_path(file)?;
    let sig = path.signature(s, t, depth)?;
    let mut table = Table::new(&["level", "word", "value"]);
    tensor_rows(&mut table, &sig);
    let config = SignatureConfig { path: file, depth, s, t };
    Ok(Run {
        meta: RunMeta::new("signature", &config, settings.seed()),
        passed: true,
        report: Report::Table(table),
        summary: json!({
            "dim": sig.dim(),
            "depth": sig.depth(),
            "level_norms": (0..=depth).map(|k| sig.level_norm(k)).collect::<Vec<_>>(),
        }),
    })
}

#[derive(Serialize)]
struct ExtendConfig<'a> {
    path: &'a Path,
    depth: usize,
    p: f64,
    beta: f64,
    pairs: usize,
    tol: f64,
    s: f64,
    t: f64,
}

/// Lift level-`⌊p⌋` data of a path to `depth` and compare with its
/// signature.
pub fn extend(settings: &Settings) -> Result<Run, CliError> {
    let file = settings.require_path("path")?;
    let p = p_value(settings, 1.0)?;
    let depth = settings.depth.unwrap_or(4);
    let beta = match settings.beta.unwrap_or(BetaSpec::AUTO) {
        BetaSpec::Value(b) => b,
        BetaSpec::Keyword(_) => AUTO_BETA_FACTOR * lyons_beta_threshold(p),
    };
    let pairs = settings.pairs.unwrap_or(64);
    let tol = tol_value(settings, 1e-10)?;
    let (s, t) = interval(settings)?;
    let seed = settings.seed();
    let path = load_path(file)?;
    let floor_p = p.floor() as usize;
    if depth <= floor_p {
        return Err(CliError::Usage(format!("depth must exceed floor(p) = {floor_p}")));
    }
    let calibration = calibrated_joint_control(std::slice::from_ref(&path), p, beta, floor_p, pairs, seed)?;
    let functional = ControlledFunctional::from_path(path.clone(), p, beta, calibration.control)?;
    let config = ExtensionConfig {
        convergence_tol: tol,
        ..ExtensionConfig::default()
    }
    .with_target(depth);
    let lifted = lyons_extend(&functional, s, t, &config)?;
    let direct = path.signature(s, t, depth)?;

    let mut table = Table::new(&["level", "word", "extended", "direct", "abs_error"]);
    let mut max_error: f64 = 0.0;
    for k in 0..=depth {
        for (j, (a, b)) in lifted.value.level(k).iter().zip(direct.level(k)).enumerate() {
            let err = (a - b).abs();
            max_error = max_error.max(err);
            table.push(vec![k.to_string(), word(direct.dim(), k, j), num(*a), num(*b), num(err)]);
        }
    }
    let cfg = ExtendConfig {
        path: file,
        depth,
        p,
        beta,
        pairs,
        tol,
        s,
        t,
    };
    Ok(Run {
        meta: RunMeta::new("extend", &cfg, seed),
        passed: max_error <= EXTEND_MAX_ERROR,
        report: Report::Table(table),
        summary: json!({
            "control_scale": calibration.scale,
            "order_reached": lifted.order_reached,
            "max_abs_error": max_error,
            "max_abs_error_limit": EXTEND_MAX_ERROR,
            "steps": lifted.steps,
            "warnings": lifted.warnings,
        }),
    })
}

#[derive(Serialize)]
struct PartitionConfig<'a> {
    path: &'a Path,
    order: u32,
    tol: f64,
    s: f64,
    t: f64,
}

/// Total dyadic partition of the arc-length control of a path.
pub fn partition(settings: &Settings) -> Result<Run, CliError> {
    let file = settings.require_path("path")?;
    let order = settings.order.unwrap_or(4);
    let tol = tol_value(settings, DEFAULT_BALANCE_TOL)?;
    let (s, t) = interval(settings)?;
    let path = load_path(file)?;
    let omega = Control::arc_length(&[path], 1.0);
    let dyadic = total_dyadic_partition(&omega, s, t, order, tol)?;
    let audit = dyadic.audit(&omega);
    let mut table = Table::new(&["index", "time", "omega_from_start"]);
    for (j, &u) in dyadic.points().iter().enumerate() {
        table.push(vec![j.to_string(), num(u), num(omega.eval(s, u))]);
    }
    let limit = 1.0 + 10.0 * tol;
    let passed = audit.halving_ratio <= limit && audit.max_relative_residual <= 10.0 * tol;
    let cfg = PartitionConfig {
        path: file,
        order,
        tol,
        s,
        t,
    };
    Ok(Run {
        meta: RunMeta::new("partition", &cfg, settings.seed()),
        passed,
        report: Report::Table(table),
        summary: json!({
            "control": omega.description(),
            "omega_total": omega.eval(s, t),
            "points": dyadic.points(),
            "audit": audit,
        }),
    })
}

#[derive(Serialize)]
struct NeoclassicalConfig {
    ps: Vec<f64>,
    grid: Vec<f64>,
    max_n: u32,
}

/// Sweep of the neo-classical inequality over `p`, a log grid of `x, y`
/// and `n`.
pub fn neoclassical(settings: &Settings) -> Result<Run, CliError> {
    let ps = match settings.p {
        Some(_) => vec![p_value(settings, 1.0)?],
        None => NEOCLASSICAL_PS.to_vec(),
    };
    let max_n = settings.depth.unwrap_or(12) as u32;
    let grid = neoclassical_grid();
    let mut table = Table::new(&["p", "x", "y", "n", "lhs", "rhs", "ratio", "pass"]);
    let (mut failures, mut worst_ratio) = (0usize, 0.0f64);
    for &p in &ps {
        for &x in &grid {
            for &y in &grid {
                for n in 0..=max_n {
                    let (lhs, rhs) = neoclassical_sides(p, x, y, n);
                    let ratio = lhs / rhs;
                    let mut pass = lhs <= rhs * (1.0 + NEOCLASSICAL_SLACK);
                    if p == 1.0 {
                        pass &= (lhs - rhs).abs() / rhs < NEOCLASSICAL_SLACK;
                    }
                    failures += usize::from(!pass);
                    worst_ratio = worst_ratio.max(ratio);
                    table.push(vec![
                        num(p),
                        num(x),
                        num(y),
                        n.to_string(),
                        num(lhs),
                        num(rhs),
                        num(ratio),
                        pass.to_string(),
                    ]);
                }
            }
        }
    }
    let cfg = NeoclassicalConfig { ps, grid, max_n };
    Ok(Run {
        meta: RunMeta::new("neoclassical", &cfg, settings.seed()),
        passed: failures == 0,
        report: Report::Table(table),
        summary: json!({
            "rows": table_len(&cfg),
            "failures": failures,
            "max_lhs_over_rhs": worst_ratio,
        }),
    })
}

fn table_len(cfg: &NeoclassicalConfig) -> usize {
    cfg.ps.len() * cfg.grid.len() * cfg.grid.len() * (cfg.max_n as usize + 1)
}

#[derive(Serialize)]
struct VerifyConfig<'a> {
    x: &'a Path,
    y: &'a Path,
    p: f64,
    delta: f64,
    beta: BetaSpec,
    levels: usize,
    pairs: usize,
    tol: f64,
    order: u32,
}

/// Uniform estimate for two paths: one calibrated control, measured `ε`,
/// every level against the bound, plus the main-lemma audit on `[0, 1]`.
pub fn verify_theorem(settings: &Settings) -> Result<Run, CliError> {
    let (x_file, y_file) = (settings.require_path("x")?, settings.require_path("y")?);
    let p = p_value(settings, 1.0)?;
    let delta = settings.delta.unwrap_or(1.0);
    if !(0.0..=1.0).contains(&delta) {
        return Err(CliError::Usage(format!("delta must lie in [0, 1], got {delta}")));
    }
    let beta_spec = settings.beta.unwrap_or(BetaSpec::AUTO);
    let beta = match beta_spec {
        BetaSpec::Value(b) => b,
        BetaSpec::Keyword(_) => auto_beta(p, delta)?,
    };
    let levels = settings.levels.unwrap_or(6);
    let pairs = settings.pairs.unwrap_or(64);
    let tol = tol_value(settings, 1e-8)?;
    let order = settings.order.unwrap_or(8);
    let seed = settings.seed();
    let (x, y) = (load_path(x_file)?, load_path(y_file)?);

    let mut pair = prepare_pair(x, y, p, delta, beta, pairs, seed)?;
    pair.params.allow_small_beta = true;
    pair.params.allow_large_epsilon = true;
    let ext = ExtensionConfig {
        convergence_tol: tol,
        ..ExtensionConfig::default()
    };
    let report: EstimateReport = rough_core::bounds::verify_uniform_estimate(
        &pair.x,
        &pair.y,
        &pair.params,
        levels,
        pairs,
        seed,
        &ext,
    )?;
    let audit = main_lemma_audit(&pair.x, &pair.y, &pair.params, 0.0, 1.0, order)?;
    let audit_ok = audit.iter().all(|r| r.pass);

    let cfg = VerifyConfig {
        x: x_file,
        y: y_file,
        p,
        delta,
        beta: beta_spec,
        levels,
        pairs,
        tol,
        order,
    };
    let meta = RunMeta::new("verify-theorem", &cfg, seed);
    let mut csv = Vec::new();
    write_estimate_csv(&mut csv, &report, &meta.config_hash)?;
    Ok(Run {
        passed: report.passed() && audit_ok,
        report: Report::Csv(csv),
        summary: json!({
            "case": report.case,
            "params": report.params,
            "control_scale": pair.control_scale,
            "beta_threshold": report.beta_threshold,
            "beta_ok": report.beta_ok,
            "epsilon_ok": report.epsilon_ok,
            "levels": report.summary,
            "notes": report.notes,
            "main_lemma_audit": audit,
        }),
        meta,
    })
}

#[derive(Serialize)]
struct CdeConfig<'a> {
    problem: &'a Path,
    epsilons: &'a [f64],
    pairs: usize,
    depth: usize,
}

/// Perturbation sweep of a linear CDE against the flow-difference bound,
/// and its signature series against the exact flow.
pub fn cde_compare(settings: &Settings) -> Result<Run, CliError> {
    let file = settings.require_path("problem")?;
    let default_eps = SuiteConfig::default().cde_epsilons;
    let epsilons = settings.epsilons.as_deref().unwrap_or(&default_eps);
    for &e in epsilons {
        Settings::check_positive("epsilon", e)?;
    }
    let pairs = settings.pairs.unwrap_or(32);
    let depth = settings.depth.unwrap_or(12);
    let seed = settings.seed();
    let problem = read_problem_json(file)?;

    let mut series_error: f64 = 0.0;
    let mut tail_excess = f64::NEG_INFINITY;
    let mut times: Vec<f64> = (0..=100).map(|j| j as f64 / 100.0).collect();
    times.extend_from_slice(problem.driver().times());
    times.sort_by(f64::total_cmp);
    times.dedup();
    for &t in &times {
        let err = (problem.solve_series(t, depth)? - problem.solve_exact(t)?).norm();
        series_error = series_error.max(err);
        tail_excess = tail_excess.max(err - problem.series_tail_bound(t, depth)?);
    }

    let sweep = cde_sweep(&problem, epsilons, pairs, seed)?;
    let mut table = Table::new(&[
        "target_epsilon",
        "epsilon",
        "amplitude",
        "omega_total",
        "sup_difference",
        "max_increment_difference",
        "bound",
        "scaled",
        "pass",
    ]);
    let mut all_within = true;
    for pt in &sweep {
        let pass = pt.sup_difference <= pt.bound;
        all_within &= pass;
        table.push(vec![
            num(pt.target_epsilon),
            num(pt.epsilon),
            num(pt.amplitude),
            num(pt.omega_total),
            num(pt.sup_difference),
            num(pt.max_increment_difference),
            num(pt.bound),
            num(pt.scaled),
            pass.to_string(),
        ]);
    }
    let (lo, hi) = sweep
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), pt| (lo.min(pt.scaled), hi.max(pt.scaled)));
    let cfg = CdeConfig {
        problem: file,
        epsilons,
        pairs,
        depth,
    };
    Ok(Run {
        meta: RunMeta::new("cde-compare", &cfg, seed),
        passed: all_within && tail_excess <= 1e-14,
        report: Report::Table(table),
        summary: json!({
            "opnorm": problem.opnorm(),
            "series_depth": depth,
            "max_series_error": series_error,
            "max_excess_over_tail_bound": tail_excess,
            "scaled_spread": if sweep.is_empty() { Value::Null } else { json!(hi / lo) },
        }),
    })
}

/// Suite settings with the generic flags applied.
pub fn suite_config(settings: &Settings) -> Result<SuiteConfig, CliError> {
    let mut suite = settings.suite.clone().unwrap_or_default();
    if let Some(seed) = settings.seed {
        suite.seed = seed;
    }
    if let Some(pairs) = settings.pairs {
        suite.verify_pairs = pairs;
    }
    if let Some(levels) = settings.levels {
        suite.verify_levels = levels;
    }
    if let Some(tol) = settings.tol {
        suite.verify_tol = Settings::check_positive("tol", tol)?;
    }
    if let Some(depth) = settings.depth {
        suite.extension_depth = depth;
    }
    if let Some(eps) = &settings.epsilons {
        suite.cde_epsilons = eps.clone();
    }
    Ok(suite)
}

/// Criteria 1 to 8, then the in-process determinism probe.
pub fn all(settings: &Settings) -> Result<Run, CliError> {
    let suite = suite_config(settings)?;
    let mut outcomes: Vec<Outcome> = run_suite(&suite)?;
    outcomes.push(determinism_probe(&suite)?);
    let mut table = Table::new(&["criterion", "name", "metric", "value", "passed"]);
    for o in &outcomes {
        for m in &o.metrics {
            table.push(vec![
                o.id.to_string(),
                o.name.clone(),
                m.name.clone(),
                num(m.value),
                o.passed.to_string(),
            ]);
        }
    }
    let passed = outcomes.iter().all(|o| o.passed);
    Ok(Run {
        meta: RunMeta::new("all", &suite, suite.seed),
        passed,
        report: Report::Table(table),
        summary: json!({ "criteria": outcomes }),
    })
}
