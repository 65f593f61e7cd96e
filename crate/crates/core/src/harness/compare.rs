//! Side-by-side runs of Adam-DA and the two continuous models.

use crate::continuous::{rhs_continuous_adam_da, rhs_sign_gda, rk4_integrate_sampled};
use crate::discrete::{run_adam_da, StopRule};
use crate::error::{Error, Result};
use crate::game::{JointPoint, ZeroSumGame};
use crate::params::AdamParams;
use crate::trajectory::Trajectory;

/// RK4 substeps per algorithm step.
pub const ODE_SUBSTEPS: usize = 10;

#[derive(Debug, Clone)]
pub struct Comparison {
    pub adam: Trajectory,
    pub ode: Trajectory,
    pub sign: Trajectory,
    /// `‖z_n − z_ode(nh)‖₂` for every step available in both runs.
    pub dist_ode: Vec<f64>,
    pub dist_sign: Vec<f64>,
    /// Some run stopped early on a non-finite state.
    pub truncated: bool,
}

fn record_everything() -> StopRule {
    StopRule {
        converge_tol: f64::NEG_INFINITY,
        diverge_factor: f64::INFINITY,
        ..StopRule::default()
    }
}

fn distances(a: &Trajectory, b: &Trajectory) -> Vec<f64> {
    a.points.iter().zip(&b.points).map(|(p, q)| p.distance(q)).collect()
}

pub fn compare_models(game: &ZeroSumGame, params: &AdamParams, init: &JointPoint, steps: usize) -> Result<Comparison> {
    if steps == 0 {
        return Err(Error::InvalidInput("compare needs steps >= 1".into()));
    }
    let (adam, _) = run_adam_da(game, params, init, steps, &record_everything())?;
    let ode = rk4_integrate_sampled(|p| rhs_continuous_adam_da(p, game, params), init, params.h, steps, ODE_SUBSTEPS, game, None)?;
    let sign = rk4_integrate_sampled(|p| rhs_sign_gda(p, game, params.eps), init, params.h, steps, ODE_SUBSTEPS, game, None)?;
    let truncated = adam.diverged || ode.diverged || sign.diverged || adam.len() != steps + 1;
    Ok(Comparison {
        dist_ode: distances(&adam, &ode),
        dist_sign: distances(&adam, &sign),
        adam,
        ode,
        sign,
        truncated,
    })
}

/// Mean distance curves over several initial points, truncated to the shortest run.
pub fn mean_distance_curves(
    game: &ZeroSumGame,
    params: &AdamParams,
    inits: &[JointPoint],
    steps: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    use rayon::prelude::*;
    if inits.is_empty() {
        return Err(Error::InvalidInput("need at least one initial point".into()));
    }
    let runs: Vec<Comparison> = inits.par_iter().map(|p| compare_models(game, params, p, steps)).collect::<Result<_>>()?;
    let len = runs.iter().map(|r| r.dist_ode.len().min(r.dist_sign.len())).min().unwrap_or(0);
    let n = runs.len() as f64;
    let mean = |f: fn(&Comparison) -> &Vec<f64>| (0..len).map(|k| runs.iter().map(|r| f(r)[k]).sum::<f64>() / n).collect();
    Ok((mean(|r| &r.dist_ode), mean(|r| &r.dist_sign)))
}
