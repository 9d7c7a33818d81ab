//! One function per computation command; each writes its tables through a
//! [`Writer`] and never prints results itself.

use std::fs;
use std::path::Path;

use nadim::cutset::{spectrum, DeltaSchedule, SpectrumOptions};
use nadim::geometry::{
    box_count, empirical_box_dim, geometric_scales, local_exponent_scan, mass_distribution, realize_attractor,
    AttractorRealization, Placement, DEFAULT_INTERVAL_BUDGET,
};
use nadim::infinite::{build_subsystem, infinite_condition_check, SlackSchedule, SubsystemOptions};
use nadim::pressure::{jump_points_with_cap, moran_exponent, sample_schedule, LevelTable};
use nadim::system::{condition_diagnostics, presets, Condition, SystemDoc, Thresholds};
use nadim::System;
use rayon::prelude::*;

use crate::config::{CommandKind, Grid, Params, PlacementKind, RunConfig, Scales, Source};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table, Writer};

pub const DEFAULT_K_MAX: usize = 1000;
pub const DEFAULT_JUMP_K_MAX: usize = 2000;
pub const DEFAULT_MORAN_K: usize = 2000;
pub const DEFAULT_DEPTH: usize = 12;
pub const DEFAULT_SPECTRUM_DEPTH: usize = 256;
pub const DEFAULT_SAMPLES: usize = 4096;

/// Resolved system plus its canonical TOML (the hashed form).
pub struct Loaded {
    pub spec: System,
    pub toml: String,
}

pub fn load(source: &Source) -> CliResult<Loaded> {
    let spec = match source {
        Source::Preset(name) => {
            let canonical = presets::NAMES
                .iter()
                .find(|n| n.eq_ignore_ascii_case(name))
                .ok_or_else(|| CliError::config("unknown-preset", format!("unknown preset `{name}`")))?;
            presets::by_name::<f64>(canonical)?
        }
        Source::File(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let doc: SystemDoc = toml::from_str(&text).map_err(|e| CliError::from_toml(&e, &text, "spec-"))?;
            doc.to_spec::<f64>()?
        }
    };
    let toml = SystemDoc::from_spec(&spec)?.to_toml();
    Ok(Loaded { spec, toml })
}

/// Runs one validated config and returns the files written.
pub fn execute(cfg: &RunConfig) -> CliResult<Vec<std::path::PathBuf>> {
    cfg.validate()?;
    let loaded = load(&cfg.source())?;
    let mut w = Writer::new(
        &cfg.out,
        cfg.format,
        cfg.command.as_str(),
        loaded.spec.name(),
        &loaded.toml,
        &cfg.params,
    )?;
    // The copy leaves `out` at its default so it does not depend on where it was written.
    let replay = RunConfig {
        out: ".".into(),
        ..cfg.clone()
    };
    w.raw(&format!("{}.config.toml", cfg.command), &replay.to_toml())?;
    let spec = &loaded.spec;
    let p = &cfg.params;
    match cfg.command {
        CommandKind::Pressure => run_pressure(spec, p, &mut w)?,
        CommandKind::Jump => run_jump(spec, p, &mut w)?,
        CommandKind::Moran => run_moran(spec, p, &mut w)?,
        CommandKind::Spectrum => run_spectrum(spec, p, &mut w)?,
        CommandKind::Realize => run_realize(spec, p, &mut w)?,
        CommandKind::Boxdim => run_boxdim(spec, p, &mut w)?,
        CommandKind::Massdim => run_massdim(spec, p, &mut w)?,
        CommandKind::Truncate => run_truncate(spec, p, &mut w)?,
        CommandKind::Diagnose => run_diagnose(spec, p, &mut w)?,
    }
    Ok(w.written)
}

fn dimension(spec: &System) -> f64 {
    spec.dimension() as f64
}

fn k_and_window(p: &Params, default_k: usize) -> CliResult<(usize, usize)> {
    let k = p.k_max.unwrap_or(default_k);
    let w = p.window.unwrap_or(k / 2);
    if w == 0 || k < 2 * w {
        return Err(CliError::config(
            "out-of-range",
            format!("k_max = {k} must be at least 2*window = {}", 2 * w),
        ));
    }
    Ok((k, w))
}

fn run_pressure(spec: &System, p: &Params, w: &mut Writer) -> CliResult<()> {
    let (k_max, window) = k_and_window(p, DEFAULT_K_MAX)?;
    let ts = p
        .t_grid
        .clone()
        .unwrap_or(Grid::Step {
            start: 0.0,
            end: dimension(spec),
            step: 0.05,
        })
        .values();
    let table = LevelTable::new(spec, k_max)?;
    let estimates: Vec<_> = ts
        .par_iter()
        .map(|&t| nadim::pressure::pressure_from_table(&table, t, window))
        .collect();
    let mut curve = Table::new("pressure", &["t", "upper_est", "lower_est"])
        .fact("k_max", k_max)
        .fact("window", window);
    let mut samples = Table::new("pressure_samples", &["t", "k", "q_k"])
        .fact("k_max", k_max)
        .fact("window", window);
    for e in &estimates {
        curve.push(vec![e.t.into(), e.upper_est.into(), e.lower_est.into()]);
        for &(k, q) in &e.samples {
            samples.push(vec![e.t.into(), k.into(), q.into()]);
        }
    }
    debug_assert!(estimates.first().is_none_or(|e| e.samples.len() == sample_schedule(k_max, window).len()));
    w.table(&curve)?;
    w.table(&samples)?;
    Ok(())
}

fn run_jump(spec: &System, p: &Params, w: &mut Writer) -> CliResult<()> {
    let (k_max, window) = k_and_window(p, DEFAULT_JUMP_K_MAX)?;
    let tol = p.tol.unwrap_or(1e-6);
    let cap = p.cap.unwrap_or(dimension(spec));
    let j = jump_points_with_cap(spec, k_max, window, tol, cap)?;
    let mut t = Table::new(
        "jump",
        &["s_upper", "s_lower", "upper_width", "lower_width", "degenerate"],
    )
    .fact("k_max", j.k_max)
    .fact("window", j.window)
    .fact("tol", tol)
    .fact("cap", cap);
    t.push(vec![
        j.s_upper.into(),
        j.s_lower.into(),
        j.upper_width.into(),
        j.lower_width.into(),
        j.degenerate.into(),
    ]);
    w.table(&t)?;
    Ok(())
}

fn run_moran(spec: &System, p: &Params, w: &mut Writer) -> CliResult<()> {
    let k_max = p.k.unwrap_or(DEFAULT_MORAN_K);
    let tol = p.tol.unwrap_or(1e-10);
    let values = (1..=k_max)
        .into_par_iter()
        .map(|k| moran_exponent(spec, k, tol).map(|s| (k, s)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut t = Table::new("moran", &["k", "s_k"]).fact("k", k_max).fact("tol", tol);
    for (k, s) in values {
        t.push(vec![k.into(), s.into()]);
    }
    w.table(&t)?;
    Ok(())
}

fn spectrum_options(spec: &System, p: &Params) -> CliResult<SpectrumOptions<f64>> {
    let tol = p.tol.unwrap_or(5e-3);
    let mut opts = SpectrumOptions::for_depth(spec, p.depth.unwrap_or(DEFAULT_SPECTRUM_DEPTH), tol)?;
    if let (Some(d0), Some(rho), Some(steps)) = (p.delta0, p.rho, p.steps) {
        opts.schedule = DeltaSchedule::new(d0, rho, steps);
        opts.window = steps / 2;
    }
    if let Some(win) = p.window {
        opts.window = win;
    }
    opts.cap = p.cap;
    opts.trace = p.trace.unwrap_or(false);
    Ok(opts)
}

fn run_spectrum(spec: &System, p: &Params, w: &mut Writer) -> CliResult<()> {
    let thetas = p
        .theta_grid
        .clone()
        .unwrap_or(Grid::Step {
            start: 0.1,
            end: 1.0,
            step: 0.1,
        })
        .values();
    let opts = spectrum_options(spec, p)?;
    let curve = spectrum(spec, &thetas, &opts)?;
    let columns = [
        "theta",
        "s_upper",
        "s_lower",
        "delta_min",
        "log_delta_min",
        "k_delta_max",
        "tol",
        "upper_width",
        "lower_width",
        "classes",
        "continuity_flag",
    ];
    let mut t = Table::new("spectrum", &columns)
        .fact("steps", curve.schedule.steps)
        .fact("delta0", curve.schedule.log_delta(0).exp())
        .fact("rho", curve.schedule.log_rho.exp())
        .fact("window", curve.window)
        .fact("hausdorff_anchor", curve.hausdorff_estimate())
        .fact("anchor_k_max", curve.anchor.k_max)
        .fact("continuity_constant", curve.continuity_constant);
    for (i, pt) in curve.points.iter().enumerate() {
        // The flag marks the pair (i, i+1).
        let flagged = curve.continuity_flags.contains(&i);
        t.push(vec![
            pt.theta.into(),
            pt.s_upper.into(),
            pt.s_lower.into(),
            pt.log_delta_min.exp().into(),
            pt.log_delta_min.into(),
            pt.k_delta_max.into(),
            curve.tol.into(),
            pt.upper_width.into(),
            pt.lower_width.into(),
            pt.classes.into(),
            flagged.into(),
        ]);
    }
    w.table(&t)?;
    for pt in &curve.points {
        let Some(trace) = &pt.trace else { continue };
        let mut tt = Table::new(
            format!("spectrum_trace_theta{:.4}", pt.theta),
            &["delta", "log_delta", "k_delta", "log_min_cost"],
        )
        .fact("theta", pt.theta)
        .fact("t", pt.s_upper);
        for tp in trace {
            tt.push(vec![
                tp.log_delta.exp().into(),
                tp.log_delta.into(),
                tp.k_delta.into(),
                tp.min_cost_log.into(),
            ]);
        }
        w.table(&tt)?;
    }
    Ok(())
}

fn placement(spec: &System, p: &Params) -> Placement<f64> {
    match (p.placement, p.gap) {
        (Some(PlacementKind::Osc), _) => Placement::OscLeftPacked,
        (Some(PlacementKind::Ssc), gap) => Placement::SscUniformGaps { gap },
        (None, Some(gap)) => Placement::SscUniformGaps { gap: Some(gap) },
        (None, None) => Placement::from_separation(spec.separation()),
    }
}

fn placement_name(pl: &Placement<f64>) -> String {
    match pl {
        Placement::SscUniformGaps { gap: Some(g) } => format!("ssc(gap={g})"),
        Placement::SscUniformGaps { gap: None } => "ssc".into(),
        Placement::OscLeftPacked => "osc".into(),
    }
}

fn realize(spec: &System, p: &Params) -> CliResult<AttractorRealization<f64>> {
    let depth = p.depth.unwrap_or(DEFAULT_DEPTH);
    Ok(realize_attractor(spec, depth, placement(spec, p), DEFAULT_INTERVAL_BUDGET)?)
}

fn run_realize(spec: &System, p: &Params, w: &mut Writer) -> CliResult<()> {
    let r = realize(spec, p)?;
    let mut t = Table::new("realize", &["left", "length"])
        .fact("depth", r.depth)
        .fact("placement", placement_name(&r.placement).as_str())
        .fact("intervals", r.len());
    for i in &r.intervals {
        t.push(vec![i.left.into(), i.length.into()]);
    }
    w.table(&t)?;
    Ok(())
}

fn scales_or(s: Option<Scales>, hi: f64, lo: f64, count: usize) -> Vec<f64> {
    let s = s.unwrap_or(Scales { hi, lo, count });
    geometric_scales(s.hi, s.lo, s.count)
}

fn run_boxdim(spec: &System, p: &Params, w: &mut Writer) -> CliResult<()> {
    let r = realize(spec, p)?;
    let j = r.ambient_diameter;
    let scales = scales_or(p.scales, j / 4.0, r.min_length().max(j * 1e-12), 24);
    let counts = box_count(&r, &scales);
    let mut t = Table::new("boxcount", &["scale", "count", "saturated"])
        .fact("depth", r.depth)
        .fact("placement", placement_name(&r.placement).as_str());
    for c in &counts {
        t.push(vec![c.scale.into(), c.count.into(), c.saturated.into()]);
    }
    w.table(&t)?;
    let fit = empirical_box_dim(&r, &scales)?;
    let used = fit.counts.iter().filter(|c| !c.saturated && c.count > 0).count();
    let mut f = Table::new("boxdim", &["slope", "stderr", "intercept", "scales_used"]).fact("depth", r.depth);
    f.push(vec![fit.slope.into(), fit.stderr.into(), fit.intercept.into(), used.into()]);
    w.table(&f)?;
    Ok(())
}

fn run_massdim(spec: &System, p: &Params, w: &mut Writer) -> CliResult<()> {
    let r = realize(spec, p)?;
    let t = match p.t {
        Some(t) => t,
        None => moran_exponent(spec, r.depth.max(1), 1e-12)?,
    };
    let j = r.ambient_diameter;
    let radii = scales_or(p.radii, j / 9.0, 9.0 * r.min_length(), 9);
    let samples = p.samples.unwrap_or(DEFAULT_SAMPLES);
    let mu = mass_distribution(&r, t, spec.dimension())?;
    let scan = local_exponent_scan(&mu, &r, &radii, samples)?;
    let mut tab = Table::new("massdim", &["radius", "min_exponent", "argmin_center"])
        .fact("depth", r.depth)
        .fact("t", t)
        .fact("samples", samples)
        .fact("placement", placement_name(&r.placement).as_str());
    for e in &scan {
        tab.push(vec![e.radius.into(), e.min_exponent.into(), e.argmin_center.into()]);
    }
    w.table(&tab)?;
    Ok(())
}

fn run_truncate(spec: &System, p: &Params, w: &mut Writer) -> CliResult<()> {
    let t_grid = p
        .t_grid
        .clone()
        .unwrap_or(Grid::Step {
            start: 0.1,
            end: dimension(spec),
            step: 0.1,
        })
        .values();
    let slack = SlackSchedule::halving(
        p.slack.unwrap_or(0.05),
        p.block_len.unwrap_or(8),
        p.blocks.unwrap_or(4),
    );
    let mut opts = SubsystemOptions::new(t_grid, slack);
    if let Some(c) = p.check_levels {
        opts.check_levels = c;
    }
    if let Some(e) = &p.eps_grid {
        opts.eps_grid = e.values();
    }
    let (sub, plan) = build_subsystem(spec, &opts)?;
    w.raw("truncated.toml", &SystemDoc::from_spec(&sub)?.to_toml())?;
    let mut json = serde_json::to_string_pretty(&plan).expect("plan serializes");
    json.push('\n');
    w.raw("truncate_plan.json", &json)?;
    let mut levels = Table::new("truncate_levels", &["level", "keep", "slack", "defect_bound"]).fact(
        "tail_keep",
        plan.tail_keep.map_or(Cell::Missing, Cell::Int),
    );
    for l in &plan.levels {
        levels.push(vec![l.level.into(), l.keep.into(), l.slack.into(), l.defect_bound.into()]);
    }
    w.table(&levels)?;
    let checks = plan.verify_coverage(spec)?;
    let all = checks.iter().all(|c| c.holds);
    let mut cov = Table::new("truncate_coverage", &["level", "t", "log_excess", "holds"]).fact("all_hold", all);
    for c in &checks {
        cov.push(vec![c.level.into(), c.t.into(), c.log_excess.into(), c.holds.into()]);
    }
    w.table(&cov)?;
    Ok(())
}

fn run_diagnose(spec: &System, p: &Params, w: &mut Writer) -> CliResult<()> {
    let (k_max, window) = k_and_window(p, DEFAULT_K_MAX)?;
    let report = condition_diagnostics(spec, k_max, window, Thresholds::default())?;
    let mut rows = Table::new("diagnose", &["k", "ratio_a", "ratio_b", "ratio_c", "ratio_d"])
        .fact("k_max", k_max)
        .fact("window", window);
    for r in &report.rows {
        rows.push(vec![r.k.into(), r.ratio_a.into(), r.ratio_b.into(), r.ratio_c.into(), r.ratio_d.into()]);
    }
    w.table(&rows)?;
    let mut summary = Table::new(
        "diagnose_summary",
        &["condition", "window_max", "window_min", "last", "verdict"],
    )
    .fact("k_max", k_max)
    .fact("window", window)
    .fact("holds_below", report.thresholds.holds_below)
    .fact("fails_above", report.thresholds.fails_above);
    for c in Condition::ALL {
        let s = report.summary(c);
        summary.push(vec![
            c.as_str().into(),
            s.window_max.into(),
            s.window_min.into(),
            s.last.into(),
            s.verdict.as_str().into(),
        ]);
    }
    w.table(&summary)?;
    if !spec.is_finite() {
        let ts: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0 * dimension(spec)).collect();
        let check = infinite_condition_check(spec, &ts, &[0.1, 0.5], k_max.min(256))?;
        let mut h = Table::new("diagnose_infinite", &["hypothesis", "t", "eps", "value", "verdict"])
            .fact("n_max", check.n_max);
        for r in &check.rows {
            h.push(vec![
                r.hypothesis.as_str().into(),
                r.t.into(),
                r.eps.into(),
                r.value.into(),
                r.verdict.as_str().into(),
            ]);
        }
        w.table(&h)?;
    }
    Ok(())
}

/// Files in `dir` written by earlier runs, by artifact name.
pub fn artifacts(dir: &Path) -> CliResult<Vec<std::path::PathBuf>> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_str().is_some_and(|s| s.ends_with(".meta.json")))
        .collect();
    out.sort();
    Ok(out)
}
