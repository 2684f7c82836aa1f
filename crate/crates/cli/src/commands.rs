use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use layerclose::closeeval::{convergence_sweep, fine_native, relative_errors};
use layerclose::geometry::{default_alpha_bad, BoxCover};
use layerclose::grid::classify;
use layerclose::potentials::{native_eval, physical};
use layerclose::prediction::{density_bound, predicted_contour};
use layerclose::solver::SolveReport;
use layerclose::{
    assemble, solve, BvpSpec, CellMask, CloseEvalParams, Complex64, CutoffRule, Density, DirectBackend, EvalPath,
    FieldGrid, GridSpec, Interpolant, Kernel, Layer, MethodTag, Side, SplitPlan, SummationBackend, Surrogate,
    TreeBackend,
};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{BackendKind, LoadedConfig, PathKind, ProblemKind, ReferenceKind, RunConfig};
use crate::error::CliError;

/// Command-line overrides and the output directory.
#[derive(Debug, Clone)]
pub struct Context {
    pub loaded: LoadedConfig,
    pub out: PathBuf,
    pub path: Option<PathKind>,
    pub backend: Option<BackendKind>,
}

impl Context {
    fn cfg(&self) -> &RunConfig {
        &self.loaded.config
    }

    fn hash(&self) -> &str {
        &self.loaded.hash
    }

    fn path(&self) -> PathKind {
        self.path.unwrap_or(self.cfg().eval.path)
    }

    fn backend_kind(&self) -> BackendKind {
        self.backend.unwrap_or(self.cfg().eval.backend)
    }

    fn file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Timings {
    pub assemble_s: f64,
    pub solve_s: f64,
    pub close_eval_s: f64,
}

pub struct Solved {
    pub density: Density,
    pub kernel: Kernel,
    pub report: Option<SolveReport>,
    pub timings: Timings,
}

fn bvp(cfg: &RunConfig, curve: Arc<layerclose::Curve>, n: usize) -> Option<BvpSpec> {
    let p = &cfg.problem;
    let data = p.data?;
    Some(match p.kind {
        ProblemKind::LaplaceDirichlet => BvpSpec::laplace_dirichlet(curve, data, n),
        ProblemKind::LaplaceNeumann => BvpSpec::laplace_neumann(curve, data, n),
        ProblemKind::HelmholtzExterior => BvpSpec::helmholtz_exterior(curve, p.omega, data, n),
        ProblemKind::ConstantDensity => return None,
    })
}

fn assemble_error(e: layerclose::Error) -> CliError {
    match e {
        layerclose::Error::InvalidParameter(_) | layerclose::Error::Unsupported(_) => CliError::Config(e.to_string()),
        e => CliError::Solver(e),
    }
}

pub fn obtain_density(cfg: &RunConfig, n: usize) -> Result<Solved, CliError> {
    let curve = Arc::new(cfg.curve()?);
    let p = &cfg.problem;
    let mut timings = Timings::default();
    let (density, kernel, report) = match bvp(cfg, curve.clone(), n) {
        None => {
            let value = Complex64::new(p.value, 0.0);
            let d = Density::from_fn(curve, n, |_| value).map_err(assemble_error)?;
            (d, Kernel::laplace(Layer::Double)?, None)
        }
        Some(spec) => {
            let t0 = Instant::now();
            let system = assemble(&spec).map_err(assemble_error)?;
            timings.assemble_s = t0.elapsed().as_secs_f64();
            let t0 = Instant::now();
            let (d, report) = solve(&system, p.method, p.tol).map_err(CliError::Solver)?;
            timings.solve_s = t0.elapsed().as_secs_f64();
            info!("solved N={n}: {report:?}");
            let kernel = spec.equation().map_err(assemble_error)?.representation();
            (d, kernel, Some(report))
        }
    };
    let density = if p.trig_interpolant { density.with_interpolant(Interpolant::Trig)? } else { density };
    Ok(Solved { density, kernel, report, timings })
}

fn backend(kind: BackendKind, eps: f64) -> Result<Box<dyn SummationBackend>, CliError> {
    Ok(match kind {
        BackendKind::Direct => Box::new(DirectBackend),
        BackendKind::Tree => Box::new(TreeBackend::new(eps).map_err(|e| CliError::Config(e.to_string()))?),
    })
}

fn cutoff_rule(cfg: &RunConfig) -> CutoffRule {
    let d = CutoffRule::default();
    CutoffRule { factor: cfg.close_eval.cutoff_factor.unwrap_or(d.factor), ..d }
}

/// Physical values and method tags along the selected path.
pub fn evaluate(
    ctx: &Context,
    solved: &Solved,
    params: &CloseEvalParams,
    targets: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<MethodTag>), CliError> {
    let k = &solved.kernel;
    let tags = |paths: &[EvalPath], tag: MethodTag| -> Vec<MethodTag> {
        paths.iter().map(|p| if *p == EvalPath::Native { MethodTag::Native } else { tag }).collect()
    };
    match ctx.path() {
        PathKind::Native => {
            let v = native_eval(k, &solved.density, targets)?.into_iter().map(|v| physical(k, v)).collect();
            Ok((v, vec![MethodTag::Native; targets.len()]))
        }
        PathKind::Surrogate => {
            let out = Surrogate::new(k, &solved.density, params)?.evaluate(targets)?;
            let t = tags(&out.paths, MethodTag::Surrogate);
            Ok((out.values, t))
        }
        PathKind::Split => {
            let b = backend(ctx.backend_kind(), ctx.cfg().eval.tree_eps)?;
            let plan = SplitPlan::new(k, &solved.density, params, cutoff_rule(ctx.cfg()))?;
            let out = plan.evaluate(targets, b.as_ref())?;
            let t = tags(&out.paths, MethodTag::Split);
            Ok((out.values, t))
        }
    }
}

fn grid_spec(cfg: &RunConfig, curve: &layerclose::Curve) -> Result<GridSpec, CliError> {
    let g = cfg.grid.as_ref().ok_or_else(|| CliError::Config("this command needs a [grid] section".into()))?;
    let spec = match g.bounds {
        Some([x0, x1, y0, y1]) => GridSpec::covering(x0, x1, y0, y1, g.spacing),
        None => GridSpec::around(curve, g.margin, g.spacing),
    };
    spec.map_err(|e| CliError::Config(e.to_string()))
}

fn build_grid(cfg: &RunConfig, curve: &layerclose::Curve, exclude_within: f64) -> Result<FieldGrid, CliError> {
    let spec = grid_spec(cfg, curve)?;
    let alpha_bad = cfg.close_eval.alpha_bad.unwrap_or(default_alpha_bad(cfg.problem.n));
    let mask = classify(curve, cfg.grid_side(), alpha_bad, exclude_within, &spec.points());
    Ok(FieldGrid::new(spec, mask)?)
}

fn analytic_value(cfg: &RunConfig, curve: &layerclose::Curve, z: Complex64) -> Option<Complex64> {
    match cfg.problem.kind {
        ProblemKind::ConstantDensity => {
            let inside = curve.side_of(z) == Side::Interior;
            Some(Complex64::new(if inside { -cfg.problem.value } else { 0.0 }, 0.0))
        }
        _ => cfg.problem.data.map(|f| f.value(z)),
    }
}

/// Reference values at `targets`; the Neumann constant is fixed from native
/// values at cells away from the collar.
fn reference_values(
    cfg: &RunConfig,
    solved: &Solved,
    targets: &[Complex64],
    far: &[bool],
) -> Result<Vec<Complex64>, CliError> {
    let curve = solved.density.curve();
    match cfg.reference.kind {
        ReferenceKind::None => Err(CliError::Reference("no reference configured".into())),
        ReferenceKind::FineNative => Ok(fine_native(&solved.kernel, &solved.density, cfg.reference.factor, targets)?),
        ReferenceKind::Analytic => {
            let mut r: Vec<Complex64> = targets
                .iter()
                .map(|z| analytic_value(cfg, curve, *z))
                .collect::<Option<_>>()
                .ok_or_else(|| CliError::Reference("no analytic field for this problem".into()))?;
            if cfg.problem.kind == ProblemKind::LaplaceNeumann {
                let probes: Vec<Complex64> = targets.iter().zip(far).filter(|(_, f)| **f).map(|(z, _)| *z).collect();
                let probe_ref: Vec<Complex64> = r.iter().zip(far).filter(|(_, f)| **f).map(|(v, _)| *v).collect();
                if probes.is_empty() {
                    return Err(CliError::Reference("Neumann reference needs grid cells away from the boundary".into()));
                }
                let k = &solved.kernel;
                let native = native_eval(k, &solved.density, &probes)?;
                let shift = native.iter().zip(&probe_ref).map(|(v, r)| physical(k, *v).re - r.re).sum::<f64>() / probes.len() as f64;
                r.iter_mut().for_each(|v| *v += shift);
            }
            Ok(r)
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    info!("wrote {}", path.display());
    Ok(())
}

/// CSV file whose first line is `# config_hash=<hex>`.
fn write_csv<F>(path: &Path, hash: &str, header: &[&str], rows: F) -> Result<(), CliError>
where
    F: FnOnce(&mut csv::Writer<&mut BufWriter<File>>) -> Result<(), CliError>,
{
    let mut f = create(path)?;
    writeln!(f, "# config_hash={hash}")?;
    {
        let mut w = csv::Writer::from_writer(&mut f);
        w.write_record(header)?;
        rows(&mut w)?;
        w.flush()?;
    }
    f.flush()?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_grid(path: &Path, hash: &str, grid: &FieldGrid) -> Result<(), CliError> {
    let mut f = create(path)?;
    writeln!(f, "# config_hash={hash}")?;
    grid.write_csv(&mut f)?;
    f.flush()?;
    info!("wrote {}", path.display());
    Ok(())
}

fn solve_report(ctx: &Context, command: &str, solved: &Solved, extra: serde_json::Value) -> serde_json::Value {
    let mut v = json!({
        "config_hash": ctx.hash(),
        "command": command,
        "N": solved.density.len(),
        "iterations": solved.report.map(|r| r.iterations),
        "residual": solved.report.map(|r| r.residual),
        "method": solved.report.map(|r| r.method),
        "timings": solved.timings,
    });
    if let (Some(obj), serde_json::Value::Object(more)) = (v.as_object_mut(), extra) {
        obj.extend(more);
    }
    v
}

pub fn cmd_solve(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let solved = obtain_density(ctx.cfg(), ctx.cfg().problem.n)?;
    let record = json!({ "config_hash": ctx.hash(), "density": solved.density.to_record() });
    write_json(&ctx.file(&ctx.cfg().output.density), &record)?;
    let report = solve_report(ctx, "solve", &solved, json!({}));
    write_json(&ctx.file(&ctx.cfg().output.report), &report)?;
    Ok(report)
}

fn eval_grid(ctx: &Context, exclude_within: f64) -> Result<(Solved, FieldGrid), CliError> {
    let cfg = ctx.cfg();
    let mut solved = obtain_density(cfg, cfg.problem.n)?;
    let mut grid = build_grid(cfg, solved.density.curve(), exclude_within)?;
    let targets = grid.active_points();
    let t0 = Instant::now();
    let (values, tags) = evaluate(ctx, &solved, &cfg.close_eval_params(), &targets)?;
    solved.timings.close_eval_s = t0.elapsed().as_secs_f64();
    grid.fill(&values, &tags)?;
    Ok((solved, grid))
}

fn grid_summary(grid: &FieldGrid) -> serde_json::Value {
    let count = |m: CellMask| grid.mask.iter().filter(|x| **x == m).count();
    let tagged = |t: MethodTag| grid.method.iter().filter(|x| **x == Some(t)).count();
    json!({
        "nx": grid.spec.nx,
        "ny": grid.spec.ny,
        "cells": { "inside": count(CellMask::Inside), "outside": count(CellMask::Outside),
                   "on_collar": count(CellMask::OnCollar), "excluded": count(CellMask::Excluded) },
        "methods": { "native": tagged(MethodTag::Native), "surrogate": tagged(MethodTag::Surrogate),
                     "split": tagged(MethodTag::Split) },
    })
}

pub fn cmd_eval(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let (solved, grid) = eval_grid(ctx, 0.0)?;
    write_grid(&ctx.file(&ctx.cfg().output.grid), ctx.hash(), &grid)?;
    let report = solve_report(ctx, "eval", &solved, json!({ "path": format!("{:?}", ctx.path()).to_lowercase(), "grid": grid_summary(&grid) }));
    write_json(&ctx.file(&ctx.cfg().output.report), &report)?;
    Ok(report)
}

pub fn cmd_error_map(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let cfg = ctx.cfg();
    if cfg.reference.kind == ReferenceKind::None {
        return Err(CliError::Reference("error-map needs a reference".into()));
    }
    let exclude = if cfg.reference.kind == ReferenceKind::FineNative { cfg.reference.exclude_within } else { 0.0 };
    let (solved, mut grid) = eval_grid(ctx, exclude)?;
    let active = grid.active();
    let targets = grid.active_points();
    let far: Vec<bool> = active.iter().map(|&k| grid.mask[k] != CellMask::OnCollar).collect();
    let max_rel_err = if targets.is_empty() {
        None
    } else {
        let reference = reference_values(cfg, &solved, &targets, &far)?;
        Some(grid.set_errors(&reference)?)
    };
    write_grid(&ctx.file(&cfg.output.grid), ctx.hash(), &grid)?;
    if cfg.contours.is_some() {
        write_contours(ctx, Some(&solved))?;
    }
    let report = solve_report(
        ctx,
        "error-map",
        &solved,
        json!({ "path": format!("{:?}", ctx.path()).to_lowercase(), "max_rel_err": max_rel_err, "grid": grid_summary(&grid) }),
    );
    write_json(&ctx.file(&cfg.output.report), &report)?;
    Ok(report)
}

fn write_contours(ctx: &Context, solved: Option<&Solved>) -> Result<usize, CliError> {
    let cfg = ctx.cfg();
    let cc = cfg.contours.as_ref().ok_or_else(|| CliError::Config("this command needs a [contours] section".into()))?;
    let curve = cfg.curve()?;
    let n = cfg.problem.n;
    let c = match (cc.c, solved) {
        (Some(c), _) => c,
        (None, Some(s)) => density_bound(&s.density)?,
        (None, None) => density_bound(&obtain_density(cfg, n)?.density)?,
    };
    let contours = cc
        .epsilons
        .iter()
        .map(|&eps| predicted_contour(&curve, eps, c, n, cc.points))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let mut count = 0;
    write_csv(&ctx.file(&cfg.output.contours), ctx.hash(), &["x", "y", "alpha", "epsilon"], |w| {
        for pc in &contours {
            for p in &pc.points {
                w.write_record(&[p.z.re.to_string(), p.z.im.to_string(), p.alpha.to_string(), pc.epsilon.to_string()])?;
                count += 1;
            }
        }
        Ok(())
    })?;
    Ok(count)
}

pub fn cmd_predict_contours(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let points = write_contours(ctx, None)?;
    let report = json!({ "config_hash": ctx.hash(), "command": "predict-contours", "points": points });
    write_json(&ctx.file(&ctx.cfg().output.report), &report)?;
    Ok(report)
}

pub fn cmd_sweep(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let cfg = ctx.cfg();
    let sw = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("sweep needs a [sweep] section".into()))?;
    let solved = obtain_density(cfg, cfg.problem.n)?;
    let exclude = if cfg.reference.kind == ReferenceKind::FineNative { cfg.reference.exclude_within } else { 0.0 };
    let grid = build_grid(cfg, solved.density.curve(), exclude)?;
    let targets = grid.active_points();
    if targets.is_empty() {
        return Err(CliError::Config("sweep grid has no active cells".into()));
    }
    let far: Vec<bool> = grid.active().iter().map(|&k| grid.mask[k] != CellMask::OnCollar).collect();
    let reference = reference_values(cfg, &solved, &targets, &far)?;
    let rows = convergence_sweep(&solved.kernel, &solved.density, &cfg.close_eval_params(), &sw.p, &sw.beta, &targets, &reference)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write_csv(&ctx.file(&cfg.output.sweep), ctx.hash(), &["p", "beta", "max_rel_err", "l2_rel_err"], |w| {
        for r in &rows {
            w.write_record(&[r.p.to_string(), r.beta.to_string(), r.max_rel_err.to_string(), r.l2_rel_err.to_string()])?;
        }
        Ok(())
    })?;
    let best = rows.iter().min_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err)).copied();
    let report = solve_report(ctx, "sweep", &solved, json!({ "rows": rows.len(), "best": best }));
    write_json(&ctx.file(&cfg.output.report), &report)?;
    Ok(report)
}

/// Least-squares slope of `ln t` against `ln n`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let k = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub size: usize,
    pub n_targets: usize,
    pub path: String,
    pub assemble_s: f64,
    pub solve_s: f64,
    pub close_eval_s: f64,
    pub max_rel_err: Option<f64>,
}

pub fn cmd_bench(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let cfg = ctx.cfg();
    let bench = cfg.bench.as_ref().ok_or_else(|| CliError::Config("bench needs a [bench] section".into()))?;
    if bench.sizes.is_empty() || bench.sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Config("bench sizes must be nonempty and ascending".into()));
    }
    let seed = cfg.seed.ok_or_else(|| CliError::Config("bench draws random targets and needs a seed".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    // The first size runs twice; the untimed pass absorbs pool start-up.
    for (i, &n) in std::iter::once(&bench.sizes[0]).chain(&bench.sizes).enumerate() {
        let solved = obtain_density(cfg, n)?;
        let curve = solved.density.curve().clone();
        let params = cfg.close_eval_params_for(n);
        let sign = params.side.sign();
        let targets: Vec<Complex64> = (0..bench.targets_per_node * n)
            .map(|_| curve.eval(Complex64::new(rng.gen_range(0.0..TAU), sign * rng.gen_range(0.0..params.alpha_bad))))
            .collect();
        let far = vec![false; targets.len()];
        let reference = reference_values(cfg, &solved, &targets, &far).ok();
        for &path in &bench.paths {
            let sub = Context { path: Some(path), ..ctx.clone() };
            let t0 = Instant::now();
            let (values, _) = evaluate(&sub, &solved, &params, &targets)?;
            let close_eval_s = t0.elapsed().as_secs_f64();
            let max_rel_err = reference.as_ref().map(|r| relative_errors(&values, r).0);
            info!("bench N={n} {path:?}: {close_eval_s:.3} s");
            if i == 0 {
                continue;
            }
            rows.push(BenchRow {
                size: n,
                n_targets: targets.len(),
                path: format!("{path:?}").to_lowercase(),
                assemble_s: solved.timings.assemble_s,
                solve_s: solved.timings.solve_s,
                close_eval_s,
                max_rel_err,
            });
        }
    }
    let header = ["size", "n_targets", "path", "assemble_s", "solve_s", "close_eval_s", "max_rel_err"];
    write_csv(&ctx.file(&cfg.output.bench), ctx.hash(), &header, |w| {
        for r in &rows {
            w.write_record(&[
                r.size.to_string(),
                r.n_targets.to_string(),
                r.path.clone(),
                r.assemble_s.to_string(),
                r.solve_s.to_string(),
                r.close_eval_s.to_string(),
                r.max_rel_err.map_or(String::new(), |e| e.to_string()),
            ])?;
        }
        Ok(())
    })?;
    let exponents: serde_json::Map<String, serde_json::Value> = bench
        .paths
        .iter()
        .map(|p| {
            let name = format!("{p:?}").to_lowercase();
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.path == name).map(|r| (r.size as f64, r.close_eval_s)).collect();
            (name, json!(fit_exponent(&pts)))
        })
        .collect();
    let report = json!({ "config_hash": ctx.hash(), "command": "bench", "rows": rows, "close_eval_exponent": exponents });
    write_json(&ctx.file(&cfg.output.report), &report)?;
    Ok(report)
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn cmd_curve_info(ctx: &Context) -> Result<serde_json::Value, CliError> {
    let cfg = ctx.cfg();
    let curve = cfg.curve()?;
    let n = cfg.problem.n;
    let params = cfg.close_eval_params();
    let cover = BoxCover::build(&curve, params.cover_spec())?.with_gammas(&curve);
    let boundary: Vec<[f64; 2]> = (0..512).map(|j| pair(curve.point(TAU * j as f64 / 512.0))).collect();
    let a = params.side.sign() * params.alpha_bad;
    let gamma_bad: Vec<[f64; 2]> = curve.gamma_curve(a, 512)?.into_iter().map(pair).collect();
    let min_speed = curve.samples().iter().map(|(t, _)| curve.speed(*t)).fold(f64::MAX, f64::min);
    let boxes: Vec<serde_json::Value> = cover
        .boxes
        .iter()
        .map(|b| json!({ "index": b.index, "center": pair(b.center), "radius": b.radius, "gamma": b.gamma }))
        .collect();
    let schwarz: Vec<[f64; 2]> = curve.schwarz_singularities(curve.strip_limit().min(1.0)).into_iter().map(pair).collect();
    let info = json!({
        "config_hash": ctx.hash(),
        "name": curve.name(),
        "order": curve.order(),
        "diameter": curve.diameter(),
        "strip_limit": curve.strip_limit(),
        "min_speed": min_speed,
        "N": n,
        "alpha_bad": params.alpha_bad,
        "alpha0": params.alpha0,
        "side": params.side,
        "schwarz_singularities": schwarz,
        "boundary": boundary,
        "gamma_bad": gamma_bad,
        "boxes": boxes,
    });
    write_json(&ctx.file(&cfg.output.curve), &info)?;
    Ok(json!({ "config_hash": ctx.hash(), "command": "curve-info", "name": curve.name(), "order": curve.order(),
                "boxes": cover.len(), "schwarz_singularities": info["schwarz_singularities"] }))
}
