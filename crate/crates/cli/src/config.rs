//! TOML run configuration, command-line overrides and validation.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use mml_core::harness::catalog;
use mml_core::harness::sweep::{geomspace, linspace, SweepMode};
use mml_core::{AdamParams, JointPoint, QuadraticGame, ZeroSumGame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Compare,
    Threshold,
    Heatmap,
    EpsSweep,
    ErrorOrder,
    Igr,
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Compare => "compare",
            Command::Threshold => "threshold",
            Command::Heatmap => "heatmap",
            Command::EpsSweep => "eps-sweep",
            Command::ErrorOrder => "error-order",
            Command::Igr => "igr",
            Command::Selftest => "selftest",
        }
    }
}

/// A catalog id or an inline quadratic game `½xᵀAx + xᵀBy − ½yᵀCy`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GameSpec {
    Id(String),
    Quadratic { a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, c: Vec<Vec<f64>> },
}

impl Default for GameSpec {
    fn default() -> Self {
        GameSpec::Id("quad_cc".into())
    }
}

/// Any subset of the hyperparameters; missing ones come from the game defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// An explicit list, `count` evenly spaced values, or a geometric progression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Values(Vec<f64>),
    Linear { start: f64, stop: f64, count: usize },
    Geometric { start: f64, ratio: f64, count: usize },
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            AxisSpec::Values(v) => v.clone(),
            AxisSpec::Linear { start, stop, count } => linspace(*start, *stop, *count),
            AxisSpec::Geometric { start, ratio, count } => geomspace(*start, *ratio, *count),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<AxisSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<AxisSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<AxisSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<AxisSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    /// Draw each cell's start uniformly from this box instead of using `init`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_init: Option<RandomBox>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBox {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorOrderSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fine_substeps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inits: Option<usize>,
}

/// File-level configuration. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub game: Option<GameSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamsSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<PointSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emit_svg: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error_order: Option<ErrorOrderSpec>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub game: Option<String>,
    pub h: Option<f64>,
    pub beta: Option<f64>,
    pub rho: Option<f64>,
    pub eps: Option<f64>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub svg: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).context("cannot parse configuration")?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("cannot serialize configuration")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(g) = &o.game {
            self.game = Some(GameSpec::Id(g.clone()));
        }
        let p = self.params.get_or_insert_with(ParamsSpec::default);
        p.h = o.h.or(p.h);
        p.beta = o.beta.or(p.beta);
        p.rho = o.rho.or(p.rho);
        p.eps = o.eps.or(p.eps);
        if *p == ParamsSpec::default() {
            self.params = None;
        }
        self.steps = o.steps.or(self.steps);
        self.seed = o.seed.or(self.seed);
        if o.out.is_some() {
            self.output_dir = o.out.clone();
        }
        if o.svg {
            self.emit_svg = Some(true);
        }
    }

    /// Checks everything and fills in defaults.
    pub fn resolve(&self, command: Command) -> Result<Resolved> {
        let game_spec = self.game.clone().unwrap_or_default();
        let (game, label, defaults, default_init, equilibrium, minimization) = match &game_spec {
            GameSpec::Id(id) => {
                let e = catalog::entry(id)?;
                (e.game, e.id.to_string(), e.params, e.init, e.equilibrium, e.minimization)
            }
            GameSpec::Quadratic { a, b, c } => {
                let q = QuadraticGame::new(matrix(a, "a")?, matrix(b, "b")?, matrix(c, "c")?)?;
                let (d1, d2) = q.dims();
                let defaults = catalog::entry("quad_cc")?.params;
                let init = JointPoint::new(nalgebra::DVector::from_element(d1, 0.6), nalgebra::DVector::from_element(d2, 0.6))?;
                (q.into_game("quadratic"), "quadratic".to_string(), defaults, init, Some(JointPoint::origin(d1, d2)), false)
            }
        };
        let p = self.params.clone().unwrap_or_default();
        let params = AdamParams::new(
            p.h.unwrap_or(defaults.h),
            p.beta.unwrap_or(defaults.beta),
            p.rho.unwrap_or(defaults.rho),
            p.eps.unwrap_or(defaults.eps),
        )?;
        let init = match &self.init {
            Some(pt) => JointPoint::from_slices(&pt.x, &pt.y)?,
            None => default_init,
        };
        game.check_point(&init)?;
        let steps = self.steps.unwrap_or(2000);
        if steps == 0 {
            bail!("steps must be at least 1");
        }
        let grid = self.grid.clone().unwrap_or_default();
        let mode = match &grid.mode {
            Some(m) => SweepMode::parse(m)?,
            None if minimization => SweepMode::MinimizationSimulated,
            None => SweepMode::DiscreteSimulated,
        };
        Ok(Resolved {
            command,
            game,
            game_label: label,
            game_spec,
            params,
            init,
            equilibrium,
            minimization,
            steps,
            seed: self.seed.unwrap_or(0),
            output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out")),
            emit_svg: self.emit_svg.unwrap_or(false),
            mode,
            grid,
            error_order: self.error_order.clone().unwrap_or_default(),
            workers: 0,
        })
    }
}

fn matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        bail!("matrix `{name}` must be a nonempty rectangular array of rows");
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

/// A fully validated run.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub command: Command,
    pub game: ZeroSumGame,
    pub game_label: String,
    pub game_spec: GameSpec,
    pub params: AdamParams,
    pub init: JointPoint,
    pub equilibrium: Option<JointPoint>,
    pub minimization: bool,
    pub steps: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
    pub mode: SweepMode,
    pub grid: GridSpec,
    pub error_order: ErrorOrderSpec,
    /// Worker threads for sweeps; 0 uses the ambient pool.
    pub workers: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
command = "threshold"
game = "quad_cc"
params = { h = 0.01, beta = 0.0, rho = 0.5, eps = 1e-3 }
"#;

    #[test]
    fn minimal_config_is_accepted() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.command, Some(Command::Threshold));
        let r = cfg.resolve(Command::Threshold).unwrap();
        assert_eq!(r.params, AdamParams::new(0.01, 0.0, 0.5, 1e-3).unwrap());
    }

    #[test]
    fn beta_out_of_range_cites_interval() {
        let cfg = RunConfig::parse("game = \"quad_cc\"\nparams = { beta = 1.5 }\n").unwrap();
        let err = cfg.resolve(Command::Simulate).unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("beta") && msg.contains("(-1, 1)"), "{msg}");
    }

    #[test]
    fn flag_overrides_file() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.apply(&Overrides { h: Some(0.02), ..Overrides::default() });
        assert_eq!(cfg.resolve(Command::Threshold).unwrap().params.h, 0.02);
    }

    #[test]
    fn unknown_game_lists_ids() {
        let cfg = RunConfig::parse("game = \"nope\"\n").unwrap();
        let msg = format!("{:#}", cfg.resolve(Command::Simulate).unwrap_err());
        assert!(msg.contains("quad_cc") && msg.contains("bilinear"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("gmae = \"f1\"\n").is_err());
    }

    #[test]
    fn inline_quadratic_and_axes() {
        let text = r#"
game = { a = [[0.4]], b = [[1.0]], c = [[0.4]] }
init = { x = [0.1], y = [0.2] }
[grid]
beta = { start = -0.9, stop = 0.9, count = 5 }
h = [0.001, 0.002]
eps = { start = 1e-4, ratio = 4.0, count = 3 }
mode = "continuous_spectral"
"#;
        let cfg = RunConfig::parse(text).unwrap();
        let r = cfg.resolve(Command::Heatmap).unwrap();
        assert_eq!(r.game_label, "quadratic");
        assert_eq!(r.mode, SweepMode::ContinuousSpectral);
        assert_eq!(r.grid.beta.as_ref().unwrap().values().len(), 5);
        assert_eq!(r.grid.eps.as_ref().unwrap().values(), vec![1e-4, 4e-4, 1.6e-3]);
        assert_eq!(r.init.y[0], 0.2);
    }

    #[test]
    fn round_trip() {
        let text = r#"
command = "heatmap"
game = { a = [[0.4]], b = [[-1.0]], c = [[0.4]] }
params = { h = 0.01, rho = 0.5 }
seed = 7
emit_svg = true
[grid]
beta = [-0.5, 0.0, 0.5]
h = { start = 0.0015, stop = 0.06, count = 40 }
max_steps = 1000
[error_order]
h_values = [0.02, 0.01]
"#;
        let cfg = RunConfig::parse(text).unwrap();
        let again = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }
}
