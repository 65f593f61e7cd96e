//! Implicit gradient regularization: the K(β, ρ) factor, the per-player
//! forcing terms and cumulative-average gradient norms.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::game::{JointPoint, ZeroSumGame};
use crate::params::AdamParams;
use crate::perturbed::{grad_of_gradnorm, GradNormTerm};
use crate::trajectory::Trajectory;

/// K(β, ρ) = (1+β)/(1−β) − (1+ρ)/(1−ρ).
pub fn k_factor(beta: f64, rho: f64) -> f64 {
    (1.0 + beta) / (1.0 - beta) - (1.0 + rho) / (1.0 - rho)
}

/// x-player term `−(h/2)·K·∇²ₓf·μ_ε·∇ₓf`.
pub fn igr_x_term(game: &ZeroSumGame, point: &JointPoint, params: &AdamParams) -> Result<DVector<f64>> {
    params.validate()?;
    let g = grad_of_gradnorm(game, point, params.eps, GradNormTerm::XX)?;
    Ok(g * (-params.h / 2.0 * params.k()))
}

/// y-player term `+(h/2)·K·∇ᵧₓf·μ_ε·∇ₓf`.
pub fn igr_y_term(game: &ZeroSumGame, point: &JointPoint, params: &AdamParams) -> Result<DVector<f64>> {
    params.validate()?;
    let g = grad_of_gradnorm(game, point, params.eps, GradNormTerm::YX)?;
    Ok(g * (params.h / 2.0 * params.k()))
}

/// Running mean of the plain `‖∇ₓf‖₁ + ‖∇ᵧf‖₁` along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct IgrSeries {
    pub steps: Vec<usize>,
    pub avg_s: Vec<f64>,
    pub params: Option<AdamParams>,
}

impl IgrSeries {
    pub fn final_value(&self) -> Option<f64> {
        self.avg_s.last().copied()
    }
}

/// Cumulative averages of the instantaneous norms, indexed `1..=len`.
pub fn running_mean(norms: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(norms.len());
    let mut prev = 0.0;
    for (i, &v) in norms.iter().enumerate() {
        let t = (i + 1) as f64;
        prev = ((t - 1.0) * prev + v) / t;
        out.push(prev);
    }
    out
}

pub fn avg_grad_norm_series(trajectory: &Trajectory, game: &ZeroSumGame, params: Option<AdamParams>) -> IgrSeries {
    let norms: Vec<f64> = trajectory.points.iter().map(|p| game.grad_l1_sum(p)).collect();
    IgrSeries { steps: (1..=norms.len()).collect(), avg_s: running_mean(&norms), params }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub x_term_norm: f64,
    pub y_term_norm: f64,
    pub hess_xx_opnorm: f64,
    pub hess_yx_opnorm: f64,
    pub hess_yy_opnorm: f64,
    pub interaction_dominated: bool,
}

fn opnorm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.singular_values().max()
    }
}

/// Compares the interaction block against both diagonal Hessian blocks.
/// Dominated iff `‖∇ᵧₓf‖₂ > factor·max(‖∇²ₓf‖₂, ‖∇²ᵧf‖₂)`.
pub fn igr_dominance_report(game: &ZeroSumGame, point: &JointPoint, params: &AdamParams, factor: f64) -> Result<DominanceReport> {
    let hxx = opnorm(&game.hess_xx(point));
    let hyx = opnorm(&game.hess_yx(point));
    let hyy = opnorm(&game.hess_yy(point));
    Ok(DominanceReport {
        x_term_norm: igr_x_term(game, point, params)?.norm(),
        y_term_norm: igr_y_term(game, point, params)?.norm(),
        hess_xx_opnorm: hxx,
        hess_yx_opnorm: hyx,
        hess_yy_opnorm: hyy,
        interaction_dominated: hyx > factor * hxx.max(hyy),
    })
}
