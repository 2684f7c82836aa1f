use std::path::Path;

use layerclose::closeeval::CloseEvalParams;
use layerclose::geometry::{default_alpha_bad, CoverSpec};
use layerclose::{builtin_curve, Curve, CurveId, Field, Side, SolveMethod};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every random choice; required by `random40` curves.
    pub seed: Option<u64>,
    pub curve: CurveConfig,
    pub problem: ProblemConfig,
    #[serde(default)]
    pub close_eval: CloseEvalConfig,
    #[serde(default)]
    pub eval: EvalConfig,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub reference: ReferenceConfig,
    pub contours: Option<ContourConfig>,
    pub sweep: Option<SweepConfig>,
    pub bench: Option<BenchConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    LaplaceDirichlet,
    LaplaceNeumann,
    HelmholtzExterior,
    /// Laplace double layer with a constant density; no solve.
    ConstantDensity,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    #[serde(rename = "N")]
    pub n: usize,
    pub data: Option<Field>,
    #[serde(default)]
    pub omega: f64,
    /// Density value for `constant-density`.
    #[serde(default = "one")]
    pub value: f64,
    #[serde(default = "default_method")]
    pub method: SolveMethod,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Use the trigonometric interpolant for fine-node values.
    #[serde(default)]
    pub trig_interpolant: bool,
}

fn one() -> f64 {
    1.0
}

fn default_method() -> SolveMethod {
    SolveMethod::DenseLu
}

fn default_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloseEvalConfig {
    pub p: usize,
    pub beta: f64,
    pub n_boxes: Option<usize>,
    pub alpha_bad: Option<f64>,
    pub alpha0: Option<f64>,
    /// Cutoff factor for the split path.
    pub cutoff_factor: Option<f64>,
}

impl Default for CloseEvalConfig {
    fn default() -> Self {
        Self { p: 10, beta: 4.0, n_boxes: None, alpha_bad: None, alpha0: None, cutoff_factor: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Native,
    Surrogate,
    Split,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Direct,
    Tree,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub path: PathKind,
    pub backend: BackendKind,
    pub tree_eps: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { path: PathKind::Surrogate, backend: BackendKind::Direct, tree_eps: 1e-12 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Explicit bounds `[x0, x1, y0, y1]`; otherwise the curve's bounding box plus `margin`.
    pub bounds: Option<[f64; 4]>,
    #[serde(default = "default_margin")]
    pub margin: f64,
    pub spacing: f64,
    /// Side of the curve holding the domain of interest; defaults to the problem's side.
    pub side: Option<Side>,
}

fn default_margin() -> f64 {
    0.3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    Analytic,
    FineNative,
    None,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub kind: ReferenceKind,
    /// Upsampling factor for `fine-native`.
    pub factor: usize,
    /// Cells closer than this to the curve are excluded under `fine-native`.
    pub exclude_within: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { kind: ReferenceKind::Analytic, factor: 16, exclude_within: 1e-3 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    pub epsilons: Vec<f64>,
    /// Amplitude constant; defaults to the density bound.
    pub c: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_points() -> usize {
    1000
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub p: Vec<usize>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    #[serde(default = "default_targets_per_node")]
    pub targets_per_node: usize,
    #[serde(default = "default_paths")]
    pub paths: Vec<PathKind>,
}

fn default_targets_per_node() -> usize {
    2
}

fn default_paths() -> Vec<PathKind> {
    vec![PathKind::Split]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub density: String,
    pub report: String,
    pub grid: String,
    pub contours: String,
    pub sweep: String,
    pub bench: String,
    pub curve: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            density: "density.json".into(),
            report: "report.json".into(),
            grid: "grid.csv".into(),
            contours: "contours.csv".into(),
            sweep: "sweep.csv".into(),
            bench: "bench.csv".into(),
            curve: "curve.json".into(),
        }
    }
}

/// Parsed configuration plus the SHA-256 of its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
}

pub fn hash_text(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn parse(text: &str) -> Result<LoadedConfig, CliError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
    config.validate()?;
    Ok(LoadedConfig { config, hash: hash_text(text) })
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let id: CurveId = self.curve.name.parse().map_err(config_err)?;
        if id == CurveId::Random40 && self.seed.is_none() {
            return Err(CliError::Config("curve random40 needs a top-level seed".into()));
        }
        let p = &self.problem;
        match p.kind {
            ProblemKind::ConstantDensity => {}
            ProblemKind::HelmholtzExterior if !(p.omega > 0.0) => {
                return Err(CliError::Config("helmholtz-exterior needs omega > 0".into()));
            }
            _ if p.data.is_none() => return Err(CliError::Config(format!("{:?} needs boundary data", p.kind))),
            _ => {}
        }
        if let Some(g) = &self.grid {
            if !(g.spacing > 0.0) {
                return Err(CliError::Config("grid spacing must be positive".into()));
            }
        }
        self.close_eval_params().validate().map_err(config_err)?;
        Ok(())
    }

    pub fn curve(&self) -> Result<Curve, CliError> {
        let id: CurveId = self.curve.name.parse().map_err(config_err)?;
        builtin_curve(id, self.seed).map_err(config_err)
    }

    pub fn side(&self) -> Side {
        match self.problem.kind {
            ProblemKind::HelmholtzExterior => Side::Exterior,
            _ => Side::Interior,
        }
    }

    pub fn grid_side(&self) -> Side {
        self.grid.as_ref().and_then(|g| g.side).unwrap_or_else(|| self.side())
    }

    pub fn close_eval_params(&self) -> CloseEvalParams {
        self.close_eval_params_for(self.problem.n)
    }

    pub fn close_eval_params_for(&self, n: usize) -> CloseEvalParams {
        let c = &self.close_eval;
        let base = CoverSpec::defaults(n, self.grid_side());
        let alpha_bad = c.alpha_bad.unwrap_or(default_alpha_bad(n));
        CloseEvalParams {
            p: c.p,
            beta: c.beta,
            n_boxes: c.n_boxes.unwrap_or(base.n_boxes),
            alpha_bad,
            alpha0: c.alpha0.unwrap_or(0.5 * alpha_bad),
            side: self.grid_side(),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[curve]
name = "kite"

[problem]
kind = "laplace-dirichlet"
N = 130
data = { kind = "xy" }
"#;

    #[test]
    fn parses_minimal_config() {
        let c = parse(BASIC).unwrap();
        assert_eq!(c.config.problem.n, 130);
        assert_eq!(c.config.close_eval_params().n_boxes, 26);
        assert_eq!(c.hash.len(), 64);
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = format!("{BASIC}\nbogus = 1\n");
        assert!(matches!(parse(&text), Err(CliError::Config(_))));
        let text = BASIC.replace("N = 130", "N = 130\nnn = 3");
        assert!(matches!(parse(&text), Err(CliError::Config(_))));
    }

    #[test]
    fn partial_sections_use_defaults() {
        let c = parse(&format!("{BASIC}\n[eval]\npath = \"split\"\n\n[close_eval]\np = 12\n")).unwrap().config;
        assert_eq!(c.eval.backend, BackendKind::Direct);
        assert_eq!((c.close_eval.p, c.close_eval.beta), (12, 4.0));
    }

    #[test]
    fn random_curve_needs_seed() {
        let text = BASIC.replace("kite", "random40");
        assert!(parse(&text).is_err());
        assert!(parse(&format!("seed = 7\n{text}")).is_ok());
    }

    #[test]
    fn unknown_curve_is_config_error() {
        assert!(matches!(parse(&BASIC.replace("kite", "blob")), Err(CliError::Config(_))));
    }
}
