//! Local-error order of the continuous models against the discrete algorithm.

use nalgebra::DVector;

use crate::continuous::{rhs_continuous_adam_da, rhs_sign_gda, rk4_step};
use crate::discrete::{adam_da_step, line_fit, AdamState};
use crate::error::{Error, Result};
use crate::game::{JointPoint, ZeroSumGame};
use crate::params::AdamParams;

/// Number of initial points averaged over by default.
pub const DEFAULT_INITS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorOrderStudy {
    pub h_values: Vec<f64>,
    pub warmup: Vec<usize>,
    /// Geometric mean over initial points of the one-step distance to the continuous Adam-DA flow.
    pub errors_adam_ode: Vec<f64>,
    pub errors_sign_ode: Vec<f64>,
    pub slope_adam: f64,
    pub slope_sign: f64,
    pub r2_adam: f64,
    pub r2_sign: f64,
    /// Initial points dropped because a run produced non-finite values.
    pub excluded: Vec<String>,
}

/// `⌈max(2 ln h / ln|β|, 2 ln h / ln ρ)⌉`, where β = 0 contributes 0.
pub fn warmup_steps(h: f64, beta: f64, rho: f64) -> usize {
    let term = |c: f64| if c == 0.0 { 0.0 } else { 2.0 * h.ln() / c.abs().ln() };
    term(beta).max(term(rho)).max(0.0).ceil() as usize
}

/// Least-squares slope and r² of `ln err` against `ln h`.
pub fn fit_loglog_slope(h: &[f64], err: &[f64]) -> Option<(f64, f64)> {
    if h.len() != err.len() || h.iter().chain(err).any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let lh: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let le: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    line_fit(&lh, &le).map(|(s, _, r2)| (s, r2))
}

/// Flow of `rhs` over a duration `t` using `substeps` RK4 steps.
pub fn flow<R>(rhs: R, start: &JointPoint, t: f64, substeps: usize) -> JointPoint
where
    R: Fn(&JointPoint) -> DVector<f64>,
{
    let (d1, _) = start.dims();
    let f = |z: &DVector<f64>| rhs(&JointPoint::from_joint(z, d1));
    let dt = t / substeps as f64;
    let mut z = start.to_joint();
    for _ in 0..substeps {
        z = rk4_step(&f, &z, dt);
    }
    JointPoint::from_joint(&z, d1)
}

/// One-step local errors `(continuous Adam-DA, SignGDA-flow)` after warmup from `init`.
/// `None` when the run leaves the finite range.
pub fn local_errors(game: &ZeroSumGame, params: &AdamParams, init: &JointPoint, fine_substeps: usize) -> Option<(f64, f64)> {
    let n0 = warmup_steps(params.h, params.beta, params.rho);
    let mut state = AdamState::new(init.clone());
    for _ in 0..n0 {
        state = adam_da_step(&state, game, params);
    }
    let anchor = state.point.clone();
    let next = adam_da_step(&state, game, params).point;
    let ode = flow(|p| rhs_continuous_adam_da(p, game, params), &anchor, params.h, fine_substeps);
    let sign = flow(|p| rhs_sign_gda(p, game, params.eps), &anchor, params.h, fine_substeps);
    let e = (next.distance(&ode), next.distance(&sign));
    (e.0.is_finite() && e.1.is_finite() && !state.diverged).then_some(e)
}

fn geometric_mean(values: &[f64]) -> f64 {
    let logs: Vec<f64> = values.iter().map(|v| v.max(f64::MIN_POSITIVE).ln()).collect();
    (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}

/// Runs the study for each `h` and fits the log-log slopes.
pub fn error_order(
    game: &ZeroSumGame,
    params_base: &AdamParams,
    h_values: &[f64],
    fine_substeps: usize,
    inits: &[JointPoint],
) -> Result<ErrorOrderStudy> {
    use rayon::prelude::*;
    if h_values.len() < 2 {
        return Err(Error::InvalidInput("error_order needs at least two step sizes".into()));
    }
    let (lo, hi) = h_values.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), h| (lo.min(*h), hi.max(*h)));
    if hi < 4.0 * lo {
        return Err(Error::InvalidInput("step sizes must span at least a factor of 4".into()));
    }
    if fine_substeps < 50 {
        return Err(Error::InvalidInput("fine_substeps must be at least 50".into()));
    }
    if inits.is_empty() {
        return Err(Error::InvalidInput("need at least one initial point".into()));
    }
    for &h in h_values {
        params_base.with_h(h).validate()?;
    }

    let mut excluded = Vec::new();
    let mut errors_adam_ode = Vec::with_capacity(h_values.len());
    let mut errors_sign_ode = Vec::with_capacity(h_values.len());
    for &h in h_values {
        let params = params_base.with_h(h);
        let per_init: Vec<Option<(f64, f64)>> = inits.par_iter().map(|p| local_errors(game, &params, p, fine_substeps)).collect();
        let (mut ea, mut es) = (Vec::new(), Vec::new());
        for (i, e) in per_init.iter().enumerate() {
            match e {
                Some((a, s)) => {
                    ea.push(*a);
                    es.push(*s);
                }
                None => excluded.push(format!("h={h}: init {i} diverged")),
            }
        }
        if ea.is_empty() {
            return Err(Error::InvalidInput(format!("every run diverged at h={h}")));
        }
        errors_adam_ode.push(geometric_mean(&ea));
        errors_sign_ode.push(geometric_mean(&es));
    }
    let (slope_adam, r2_adam) = fit_loglog_slope(h_values, &errors_adam_ode).unwrap_or((f64::NAN, f64::NAN));
    let (slope_sign, r2_sign) = fit_loglog_slope(h_values, &errors_sign_ode).unwrap_or((f64::NAN, f64::NAN));
    Ok(ErrorOrderStudy {
        h_values: h_values.to_vec(),
        warmup: h_values.iter().map(|h| warmup_steps(*h, params_base.beta, params_base.rho)).collect(),
        errors_adam_ode,
        errors_sign_ode,
        slope_adam,
        slope_sign,
        r2_adam,
        r2_sign,
        excluded,
    })
}

/// Harness self-check: explicit Euler against the exact flow of `ẋ = −x`
/// has local error slope 2.
pub fn euler_self_test(h_values: &[f64]) -> Option<f64> {
    let errs: Vec<f64> = h_values.iter().map(|h| ((1.0 - h) - (-h).exp()).abs()).collect();
    fit_loglog_slope(h_values, &errs).map(|(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{catalog, random_inits};

    #[test]
    fn warmup_examples() {
        assert_eq!(warmup_steps(0.01, 0.0, 0.5), 14);
        assert_eq!(warmup_steps(0.01, 0.9, 0.99), 917);
        assert_eq!(warmup_steps(0.01, -0.9, 0.5), 88);
    }

    #[test]
    fn euler_slope_is_two() {
        let s = euler_self_test(&[0.02, 0.01, 0.005, 0.0025]).unwrap();
        assert!((s - 2.0).abs() < 0.1);
    }

    #[test]
    fn loglog_fit_of_power_law() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|v: &f64| 3.0 * v.powi(3)).collect();
        let (s, r2) = fit_loglog_slope(&h, &e).unwrap();
        assert!((s - 3.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        assert!(fit_loglog_slope(&h, &[1.0, 0.0, 1.0]).is_none());
    }

    #[test]
    fn rejects_narrow_grid_and_coarse_integration() {
        let e = catalog::entry("f1").unwrap();
        let inits = vec![e.init.clone()];
        assert!(error_order(&e.game, &e.params, &[0.01, 0.005], 100, &inits).is_err());
        assert!(error_order(&e.game, &e.params, &[0.02, 0.005], 10, &inits).is_err());
    }

    #[test]
    fn stationary_init_has_zero_error() {
        let e = catalog::entry("quad_test").unwrap();
        let (a, s) = local_errors(&e.game, &e.params, &JointPoint::origin(1, 1), 50).unwrap();
        assert_eq!((a, s), (0.0, 0.0));
    }

    #[test]
    fn continuous_model_is_higher_order_on_f2() {
        let e = catalog::entry("f2").unwrap();
        let inits = random_inits(0, 10, (1, 1), -1.0, 1.0).unwrap();
        let st = error_order(&e.game, &e.params, &[0.02, 0.01, 0.005, 0.0025], 100, &inits).unwrap();
        assert!(st.slope_adam > st.slope_sign);
        assert_eq!(st.warmup.len(), 4);
    }
}
