//! Continuous-time models and a fixed-step RK4 integrator.
//!
//! All right-hand sides return the joint velocity `(ẋ, ẏ)` stacked as one vector.
//! The norm-gradient factors use the closed-form Hessian identities of
//! [`crate::perturbed::GradNormTerm`].

use nalgebra::DVector;

use crate::discrete::{line_fit, ConvergenceVerdict, Monitor, StopRule};
use crate::error::{Error, Result};
use crate::game::{JointPoint, ZeroSumGame};
use crate::igr::k_factor;
use crate::params::AdamParams;
use crate::perturbed::{preconditioner, Diagonal};
use crate::trajectory::{Diagnostic, TimeAxis, Trajectory};

/// Diagonal coefficient fields of the continuous Adam-DA model at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeCoefficients {
    pub mu: Diagonal,
    pub nu: Diagonal,
    /// `M^μ = K·I + ε(1+ρ)/(1−ρ)·μ²`
    pub m_mu: Diagonal,
    pub m_nu: Diagonal,
    pub k: f64,
}

impl OdeCoefficients {
    pub fn at(game: &ZeroSumGame, point: &JointPoint, params: &AdamParams) -> Result<Self> {
        params.validate()?;
        let mu = preconditioner(&game.grad_x(point), params.eps);
        let nu = preconditioner(&game.grad_y(point), params.eps);
        Ok(Self::from_preconditioners(mu, nu, params))
    }

    fn from_preconditioners(mu: Diagonal, nu: Diagonal, params: &AdamParams) -> Self {
        let k = k_factor(params.beta, params.rho);
        let c = params.eps * (1.0 + params.rho) / (1.0 - params.rho);
        let m_mu = Diagonal(mu.0.map(|m| k + c * m * m));
        let m_nu = Diagonal(nu.0.map(|n| k + c * n * n));
        OdeCoefficients { mu, nu, m_mu, m_nu, k }
    }
}

/// Gradients, preconditioners and the four norm-gradients at one point.
struct Terms {
    gx: DVector<f64>,
    gy: DVector<f64>,
    mu: Diagonal,
    nu: Diagonal,
    xx: DVector<f64>,
    yx: DVector<f64>,
    yy: DVector<f64>,
    xy: DVector<f64>,
}

impl Terms {
    fn at(game: &ZeroSumGame, point: &JointPoint, eps: f64) -> Self {
        let gx = game.grad_x(point);
        let gy = game.grad_y(point);
        let mu = preconditioner(&gx, eps);
        let nu = preconditioner(&gy, eps);
        let mu_g = mu.apply(&gx);
        let nu_g = nu.apply(&gy);
        let hxy = game.hess_xy(point);
        Terms {
            xx: game.hess_xx(point) * &mu_g,
            yx: hxy.transpose() * &mu_g,
            yy: game.hess_yy(point) * &nu_g,
            xy: hxy * &nu_g,
            gx,
            gy,
            mu,
            nu,
        }
    }
}

fn stack(x: DVector<f64>, y: DVector<f64>) -> DVector<f64> {
    let mut z = DVector::zeros(x.len() + y.len());
    z.rows_mut(0, x.len()).copy_from(&x);
    z.rows_mut(x.len(), y.len()).copy_from(&y);
    z
}

/// Continuous Adam-DA:
/// `ẋ = −μ∘(∇ₓf + (h/2)·M^μ∘∇ₓ(‖∇ₓf‖₁,ε − ‖∇ᵧf‖₁,ε))`,
/// `ẏ = ν∘(∇ᵧf + (h/2)·M^ν∘∇ᵧ(‖∇ₓf‖₁,ε − ‖∇ᵧf‖₁,ε))`.
pub fn rhs_continuous_adam_da(point: &JointPoint, game: &ZeroSumGame, params: &AdamParams) -> DVector<f64> {
    let t = Terms::at(game, point, params.eps);
    let coef = OdeCoefficients::from_preconditioners(t.mu.clone(), t.nu.clone(), params);
    let half_h = params.h / 2.0;
    let corr_x = coef.m_mu.apply(&(&t.xx - &t.xy)) * half_h;
    let corr_y = coef.m_nu.apply(&(&t.yx - &t.yy)) * half_h;
    let vx = -t.mu.apply(&(&t.gx + corr_x));
    let vy = t.nu.apply(&(&t.gy + corr_y));
    stack(vx, vy)
}

/// SignGDA-flow: `ẋ = −μ_ε∇ₓf`, `ẏ = ν_ε∇ᵧf`.
pub fn rhs_sign_gda(point: &JointPoint, game: &ZeroSumGame, eps: f64) -> DVector<f64> {
    let gx = game.grad_x(point);
    let gy = game.grad_y(point);
    let vx = -preconditioner(&gx, eps).apply(&gx);
    let vy = preconditioner(&gy, eps).apply(&gy);
    stack(vx, vy)
}

/// GDA-flow: `ẋ = −∇ₓf`, `ẏ = ∇ᵧf`.
pub fn rhs_gda(point: &JointPoint, game: &ZeroSumGame) -> DVector<f64> {
    stack(-game.grad_x(point), game.grad_y(point))
}

/// Small-ε limit model, keeping `eps_reg` inside μ, ν and the norms:
/// `ẋ = μ∘(−∇ₓf + (h/2)K·∇ₓ(‖∇ᵧf‖₁,ε − ‖∇ₓf‖₁,ε))`,
/// `ẏ = ν∘(∇ᵧf + (h/2)K·∇ᵧ(‖∇ₓf‖₁,ε − ‖∇ᵧf‖₁,ε))`.
pub fn rhs_limit_eps(point: &JointPoint, game: &ZeroSumGame, params: &AdamParams, eps_reg: f64) -> Result<DVector<f64>> {
    if !(eps_reg.is_finite() && eps_reg > 0.0) {
        return Err(Error::Parameter { field: "eps_reg", value: eps_reg, interval: "(0, inf)" });
    }
    let t = Terms::at(game, point, eps_reg);
    let scale = params.h / 2.0 * k_factor(params.beta, params.rho);
    let vx = t.mu.apply(&(-&t.gx + (&t.xy - &t.xx) * scale));
    let vy = t.nu.apply(&(&t.gy + (&t.yx - &t.yy) * scale));
    Ok(stack(vx, vy))
}

/// One classical RK4 step of `ż = f(z)`.
pub fn rk4_step<F>(f: &F, z: &DVector<f64>, dt: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let k1 = f(z);
    let k2 = f(&(z + &k1 * (dt / 2.0)));
    let k3 = f(&(z + &k2 * (dt / 2.0)));
    let k4 = f(&(z + &k3 * dt));
    z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

fn check_dt(dt: f64, steps: usize, substeps: usize) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Parameter { field: "dt", value: dt, interval: "(0, inf)" });
    }
    if steps == 0 || substeps == 0 {
        return Err(Error::InvalidInput("steps and substeps must be at least 1".into()));
    }
    Ok(())
}

/// Integrates `rhs` with fixed step `dt` for `steps` steps, recording every step.
pub fn rk4_integrate<R>(
    rhs: R,
    init: &JointPoint,
    dt: f64,
    steps: usize,
    game: &ZeroSumGame,
    reference: Option<&JointPoint>,
) -> Result<Trajectory>
where
    R: Fn(&JointPoint) -> DVector<f64>,
{
    rk4_integrate_sampled(rhs, init, dt, steps, 1, game, reference)
}

/// Like [`rk4_integrate`] but each recorded interval of length `dt` is covered by
/// `substeps` RK4 steps of length `dt / substeps`.
pub fn rk4_integrate_sampled<R>(
    rhs: R,
    init: &JointPoint,
    dt: f64,
    steps: usize,
    substeps: usize,
    game: &ZeroSumGame,
    reference: Option<&JointPoint>,
) -> Result<Trajectory>
where
    R: Fn(&JointPoint) -> DVector<f64>,
{
    check_dt(dt, steps, substeps)?;
    game.check_point(init)?;
    let (d1, _) = init.dims();
    let f = |z: &DVector<f64>| rhs(&JointPoint::from_joint(z, d1));
    let inner = dt / substeps as f64;
    let diag = |p: &JointPoint| Diagnostic {
        grad_l1_sum: game.grad_l1_sum(p),
        dist_to_ref: reference.map(|r| p.distance(r)),
    };

    let mut traj = Trajectory::new(TimeAxis::Time);
    traj.push(0.0, init.clone(), diag(init));
    let mut z = init.to_joint();
    for k in 1..=steps {
        for _ in 0..substeps {
            z = rk4_step(&f, &z, inner);
        }
        if z.iter().any(|v| !v.is_finite()) {
            traj.diverged = true;
            break;
        }
        let p = JointPoint::from_joint(&z, d1);
        let d = diag(&p);
        traj.push(k as f64 * dt, p, d);
    }
    Ok(traj)
}

/// Integrates without storing the trajectory and classifies each sample with `stop`.
pub fn rk4_verdict<R>(
    rhs: R,
    init: &JointPoint,
    dt: f64,
    steps: usize,
    substeps: usize,
    stop: &StopRule,
) -> Result<ConvergenceVerdict>
where
    R: Fn(&JointPoint) -> DVector<f64>,
{
    check_dt(dt, steps, substeps)?;
    let (d1, d2) = init.dims();
    let reference = stop.reference.clone().unwrap_or_else(|| JointPoint::origin(d1, d2));
    let f = |z: &DVector<f64>| rhs(&JointPoint::from_joint(z, d1));
    let inner = dt / substeps as f64;
    let mut monitor = Monitor::new(stop);
    let mut z = init.to_joint();
    for k in 0..=steps {
        let p = JointPoint::from_joint(&z, d1);
        if monitor.feed(p.distance(&reference), p.norm_inf()) || k == steps {
            break;
        }
        for _ in 0..substeps {
            z = rk4_step(&f, &z, inner);
        }
    }
    Ok(monitor.finish())
}

/// Exponential rate α of `‖z(t) − z*‖ ≈ C·e^{αt}`, fitted by least squares over
/// the samples whose distance lies strictly inside `(lo, hi)`.
pub fn fit_exponential_rate(trajectory: &Trajectory, reference: &JointPoint, lo: f64, hi: f64) -> Option<f64> {
    let (ts, logs): (Vec<f64>, Vec<f64>) = trajectory
        .times
        .iter()
        .zip(&trajectory.points)
        .map(|(t, p)| (*t, p.distance(reference)))
        .filter(|(_, d)| d.is_finite() && *d > lo && *d < hi)
        .map(|(t, d)| (t, d.ln()))
        .unzip();
    line_fit(&ts, &logs).map(|(slope, _, _)| slope)
}
