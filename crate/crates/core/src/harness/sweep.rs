//! Parallel (β, h) and (ε, h) sweeps with deterministic output.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::continuous::{rhs_continuous_adam_da, rk4_verdict};
use crate::discrete::{adam_da_verdict, adam_min_verdict, ConvergenceVerdict, StopRule, VerdictStatus};
use crate::error::{Error, Result};
use crate::game::JointPoint;
use crate::harness::{catalog, rng_for};
use crate::params::AdamParams;
use crate::report::{fmt_f64, CsvTable};
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Sign of the predicted exponential rate at the equilibrium.
    ContinuousSpectral,
    /// RK4 integration of continuous Adam-DA.
    ContinuousSimulated,
    DiscreteSimulated,
    /// Adam with both blocks descending.
    MinimizationSimulated,
}

impl SweepMode {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "continuous_spectral" => SweepMode::ContinuousSpectral,
            "continuous_simulated" => SweepMode::ContinuousSimulated,
            "discrete_simulated" => SweepMode::DiscreteSimulated,
            "minimization_simulated" => SweepMode::MinimizationSimulated,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown sweep mode '{other}' (valid: continuous_spectral, continuous_simulated, discrete_simulated, minimization_simulated)"
                )))
            }
        })
    }
}

/// Which hyperparameter varies along the outer axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Beta,
    Eps,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::Beta => "beta",
            SweepAxis::Eps => "eps",
        }
    }
}

/// Where each simulated cell starts.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Fixed(JointPoint),
    /// Uniform in `[low, high]` from the cell's own stream.
    Random { low: f64, high: f64 },
}

#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub axis: SweepAxis,
    /// β values (or ε values), strictly increasing.
    pub axis_values: Vec<f64>,
    /// Strictly increasing step sizes.
    pub h_values: Vec<f64>,
    pub mode: SweepMode,
    pub game_id: String,
    /// Supplies the hyperparameters that are not swept.
    pub fixed: AdamParams,
    pub seed: u64,
    pub max_steps: usize,
    pub init: InitSpec,
    pub stop: StopRule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellVerdict {
    Converged,
    Diverged,
    Undecided,
    Failed,
}

impl CellVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellVerdict::Converged => "converged",
            CellVerdict::Diverged => "diverged",
            CellVerdict::Undecided => "undecided",
            CellVerdict::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub axis_value: f64,
    pub h: f64,
    /// Per-step contraction factor for discrete modes, exponential rate for continuous ones.
    pub rate: f64,
    pub verdict: CellVerdict,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub axis_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub mode: SweepMode,
    /// Outer index over axis values, inner over h.
    pub cells: Vec<Cell>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    !v.is_empty() && v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` values `start·ratioᵏ`.
pub fn geomspace(start: f64, ratio: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start * ratio.powi(k as i32)).collect()
}

impl SweepGrid {
    /// A (β, h) grid with the catalog defaults for everything else.
    pub fn heatmap(game_id: &str, mode: SweepMode, beta_values: Vec<f64>, h_values: Vec<f64>) -> Result<Self> {
        let entry = catalog::entry(game_id)?;
        Ok(SweepGrid {
            axis: SweepAxis::Beta,
            axis_values: beta_values,
            h_values,
            mode,
            game_id: game_id.to_string(),
            fixed: entry.params,
            seed: 0,
            max_steps: 50_000,
            init: InitSpec::Fixed(entry.init),
            stop: StopRule::default(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !strictly_increasing(&self.axis_values) {
            return Err(Error::InvalidInput(format!("{} values must be nonempty and strictly increasing", self.axis.label())));
        }
        if !strictly_increasing(&self.h_values) {
            return Err(Error::InvalidInput("h values must be nonempty and strictly increasing".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be at least 1".into()));
        }
        for &a in &self.axis_values {
            for &h in &self.h_values {
                self.params_for(a, h).validate()?;
            }
        }
        catalog::entry(&self.game_id)?;
        Ok(())
    }

    pub fn params_for(&self, axis_value: f64, h: f64) -> AdamParams {
        match self.axis {
            SweepAxis::Beta => self.fixed.with_beta(axis_value).with_h(h),
            SweepAxis::Eps => self.fixed.with_eps(axis_value).with_h(h),
        }
    }
}

fn status_to_cell(v: VerdictStatus) -> CellVerdict {
    match v {
        VerdictStatus::Converged => CellVerdict::Converged,
        VerdictStatus::Diverged => CellVerdict::Diverged,
        VerdictStatus::Undecided => CellVerdict::Undecided,
    }
}

/// Integrator step for simulated continuous cells: a twentieth of the fastest
/// linearised time scale at the reference point.
fn continuous_dt(spectrum: &[Complex64], params: &AdamParams) -> f64 {
    let gamma = params.gamma();
    let s = spectrum.iter().map(|l| (l - l * l * gamma).norm()).fold(0.0, f64::max);
    params.eps.sqrt() / (20.0 * s.max(1.0))
}

struct Context {
    entry: catalog::CatalogEntry,
    reference: JointPoint,
    spectrum: Option<Vec<Complex64>>,
}

fn run_cell(grid: &SweepGrid, ctx: &Context, index: usize, axis_value: f64, h: f64) -> Result<Cell> {
    let params = grid.params_for(axis_value, h);
    params.validate()?;
    let game = &ctx.entry.game;
    let init = match &grid.init {
        InitSpec::Fixed(p) => p.clone(),
        InitSpec::Random { low, high } => {
            let mut rng = rng_for(grid.seed, index as u64 + 1);
            let (d1, d2) = game.dims();
            let v: Vec<f64> = (0..d1 + d2).map(|_| rng.gen_range(*low..=*high)).collect();
            JointPoint::from_slices(&v[..d1], &v[d1..])?
        }
    };
    let stop = grid.stop.clone().with_reference(ctx.reference.clone());
    let from_verdict = |v: ConvergenceVerdict, to_rate: &dyn Fn(f64) -> f64| Cell {
        axis_value,
        h,
        rate: v.fitted_rate.map(to_rate).unwrap_or(f64::NAN),
        verdict: status_to_cell(v.status),
        note: v.divergence.map(|k| format!("{k:?}")),
    };
    let spectrum = || ctx.spectrum.as_deref().ok_or_else(|| Error::NotApplicable("game has no known equilibrium".into()));
    Ok(match grid.mode {
        SweepMode::ContinuousSpectral => {
            let spec = spectrum()?;
            let rate = spec.iter().map(|l| spectral::adam_eigen_map(*l, &params).re).fold(f64::NEG_INFINITY, f64::max);
            let verdict = if rate < 0.0 { CellVerdict::Converged } else { CellVerdict::Diverged };
            Cell { axis_value, h, rate, verdict, note: None }
        }
        SweepMode::ContinuousSimulated => {
            let dt = continuous_dt(spectrum()?, &params);
            let v = rk4_verdict(|p| rhs_continuous_adam_da(p, game, &params), &init, dt, grid.max_steps, 1, &stop)?;
            from_verdict(v, &|r: f64| if r > 0.0 { r.ln() / dt } else { f64::NEG_INFINITY })
        }
        SweepMode::DiscreteSimulated => from_verdict(adam_da_verdict(game, &params, &init, grid.max_steps, &stop)?, &|r| r),
        SweepMode::MinimizationSimulated => from_verdict(adam_min_verdict(game, &params, &init, grid.max_steps, &stop)?, &|r| r),
    })
}

/// Evaluates every cell in parallel. Cell failures are recorded in place.
/// Results do not depend on the number of worker threads.
pub fn run_sweep(grid: &SweepGrid) -> Result<SweepResult> {
    grid.validate()?;
    let entry = catalog::entry(&grid.game_id)?;
    let (d1, d2) = entry.game.dims();
    let reference = entry.equilibrium.clone().unwrap_or_else(|| JointPoint::origin(d1, d2));
    let spectrum = match &entry.equilibrium {
        Some(eq) => Some(spectral::eigenvalues(&spectral::gda_jacobian(&entry.game, eq)?)?),
        None => None,
    };
    let ctx = Context { entry, reference, spectrum };
    let coords: Vec<(f64, f64)> = grid
        .axis_values
        .iter()
        .flat_map(|a| grid.h_values.iter().map(move |h| (*a, *h)))
        .collect();
    let cells = coords
        .par_iter()
        .enumerate()
        .map(|(i, &(a, h))| {
            run_cell(grid, &ctx, i, a, h).unwrap_or_else(|e| Cell {
                axis_value: a,
                h,
                rate: f64::NAN,
                verdict: CellVerdict::Failed,
                note: Some(e.to_string()),
            })
        })
        .collect();
    Ok(SweepResult {
        axis: grid.axis,
        axis_values: grid.axis_values.clone(),
        h_values: grid.h_values.clone(),
        mode: grid.mode,
        cells,
    })
}

/// Runs a sweep on a dedicated pool of `workers` threads (0 = all cores).
pub fn run_sweep_with_workers(grid: &SweepGrid, workers: usize) -> Result<SweepResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_sweep(grid))
}

pub fn heatmap(grid: &SweepGrid) -> Result<SweepResult> {
    if grid.axis != SweepAxis::Beta {
        return Err(Error::InvalidInput("heatmap sweeps beta against h".into()));
    }
    run_sweep(grid)
}

/// (ε, h) sweep at fixed β.
pub fn eps_sweep(game_id: &str, beta_fixed: f64, eps_values: Vec<f64>, h_values: Vec<f64>, mode: SweepMode) -> Result<SweepResult> {
    let mut grid = SweepGrid::heatmap(game_id, mode, vec![beta_fixed], h_values)?;
    grid.fixed = grid.fixed.with_beta(beta_fixed);
    grid.axis = SweepAxis::Eps;
    grid.axis_values = eps_values;
    run_sweep(&grid)
}

impl SweepResult {
    pub fn column(&self, i: usize) -> &[Cell] {
        let n = self.h_values.len();
        &self.cells[i * n..(i + 1) * n]
    }

    /// Per axis value, the index of the smallest `h` whose cell is not Converged.
    pub fn boundary_indices(&self) -> Vec<Option<usize>> {
        (0..self.axis_values.len())
            .map(|i| self.column(i).iter().position(|c| c.verdict != CellVerdict::Converged))
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut t = CsvTable::new(&[self.axis.label(), "h", "rate", "verdict"]);
        for c in &self.cells {
            t.push_cells([fmt_f64(c.axis_value), fmt_f64(c.h), fmt_f64(c.rate), c.verdict.as_str().to_string()]);
        }
        t.into_string()
    }
}

/// Index of the first `h` at or above `h_star` (the predicted first non-converged cell).
pub fn predicted_boundary_index(h_values: &[f64], h_star: f64) -> Option<usize> {
    h_values.iter().position(|h| *h >= h_star)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid(mode: SweepMode) -> SweepGrid {
        let mut g = SweepGrid::heatmap("quad_cc", mode, linspace(-0.6, 0.6, 5), geomspace(0.002, 2f64.sqrt(), 8)).unwrap();
        g.max_steps = 20_000;
        g
    }

    #[test]
    fn grid_helpers() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(geomspace(1.0, 2.0, 3), vec![1.0, 2.0, 4.0]);
        assert_eq!(predicted_boundary_index(&[0.1, 0.2, 0.3], 0.15), Some(1));
        assert_eq!(predicted_boundary_index(&[0.1, 0.2], 1.0), None);
    }

    #[test]
    fn rejects_invalid_grids() {
        let mut g = small_grid(SweepMode::DiscreteSimulated);
        g.h_values = vec![0.02, 0.01];
        assert!(run_sweep(&g).is_err());
        let mut g = small_grid(SweepMode::DiscreteSimulated);
        g.axis_values = vec![0.0, 1.0];
        assert!(run_sweep(&g).is_err());
        assert!(SweepMode::parse("bogus").is_err());
    }

    #[test]
    fn tiny_steps_converge_everywhere() {
        let mut g = small_grid(SweepMode::ContinuousSpectral);
        g.h_values = vec![1e-6, 2e-6];
        let r = run_sweep(&g).unwrap();
        assert!(r.cells.iter().all(|c| c.verdict == CellVerdict::Converged));
    }

    #[test]
    fn bilinear_spectral_grid_all_diverged() {
        let mut g = small_grid(SweepMode::ContinuousSpectral);
        g.game_id = "bilinear".into();
        let r = run_sweep(&g).unwrap();
        assert!(r.cells.iter().all(|c| c.verdict == CellVerdict::Diverged));
    }

    #[test]
    fn discrete_boundary_tracks_threshold() {
        let r = run_sweep(&small_grid(SweepMode::DiscreteSimulated)).unwrap();
        let spec = vec![Complex64::new(-0.4, 1.0), Complex64::new(-0.4, -1.0)];
        for (i, b) in r.boundary_indices().iter().enumerate() {
            let hs = spectral::discrete_h_threshold(&spec, r.axis_values[i], 1e-3);
            let p = predicted_boundary_index(&r.h_values, hs);
            match (b, p) {
                (Some(b), Some(p)) => assert!(b.abs_diff(p) <= 1, "column {i}: {b} vs {p}"),
                (b, p) => assert_eq!(b, &p),
            }
        }
    }

    #[test]
    fn simulated_continuous_agrees_with_spectral_away_from_boundary() {
        let mut g = small_grid(SweepMode::ContinuousSimulated);
        g.axis_values = vec![-0.3, 0.0, 0.3];
        g.h_values = vec![0.005, 0.01, 0.05, 0.1];
        g.max_steps = 200_000;
        let sim = run_sweep(&g).unwrap();
        g.mode = SweepMode::ContinuousSpectral;
        let spec = run_sweep(&g).unwrap();
        let agree = sim.cells.iter().zip(&spec.cells).filter(|(a, b)| a.verdict == b.verdict).count();
        assert!(agree * 100 >= 95 * sim.cells.len(), "{:?}", sim.cells);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let g = small_grid(SweepMode::DiscreteSimulated);
        let a = run_sweep_with_workers(&g, 1).unwrap().to_csv();
        let b = run_sweep_with_workers(&g, 4).unwrap().to_csv();
        assert_eq!(a, b);
        assert!(a.starts_with("beta,h,rate,verdict\n"));
    }

    #[test]
    fn random_init_streams_are_per_cell() {
        let mut g = small_grid(SweepMode::DiscreteSimulated);
        g.init = InitSpec::Random { low: -1.0, high: 1.0 };
        g.seed = 3;
        let a = run_sweep_with_workers(&g, 1).unwrap().to_csv();
        let b = run_sweep_with_workers(&g, 3).unwrap().to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn eps_sweep_larger_eps_converges_more() {
        let r = eps_sweep("quad_cc", 0.0, vec![1e-4, 4e-4, 1.6e-3], geomspace(0.002, 2f64.powf(0.25), 16), SweepMode::DiscreteSimulated)
            .unwrap();
        let counts: Vec<usize> = (0..3)
            .map(|i| r.column(i).iter().filter(|c| c.verdict == CellVerdict::Converged).count())
            .collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
        assert_ne!(r.column(0).last().unwrap().verdict, CellVerdict::Converged);
        assert!(r.to_csv().starts_with("eps,h,"));
    }
}
