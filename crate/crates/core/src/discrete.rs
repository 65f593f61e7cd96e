//! Discrete-time algorithms: Adam-DA, plain GDA and Adam in minimization,
//! plus the convergence classifier shared by every simulated experiment.

use nalgebra::DVector;

use crate::error::Result;
use crate::game::{JointPoint, ZeroSumGame};
use crate::params::AdamParams;
use crate::trajectory::{Diagnostic, TimeAxis, Trajectory};

/// Adam-DA iterate. `m_x, v_x` are the x-player moments, `m_y, v_y` the
/// y-player moments, `n` the number of completed steps.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m_x: DVector<f64>,
    pub v_x: DVector<f64>,
    pub m_y: DVector<f64>,
    pub v_y: DVector<f64>,
    pub point: JointPoint,
    pub n: u64,
    /// Set once a non-finite gradient or iterate has been produced.
    pub diverged: bool,
}

impl AdamState {
    pub fn new(point: JointPoint) -> Self {
        let (d1, d2) = point.dims();
        AdamState {
            m_x: DVector::zeros(d1),
            v_x: DVector::zeros(d1),
            m_y: DVector::zeros(d2),
            v_y: DVector::zeros(d2),
            point,
            n: 0,
            diverged: false,
        }
    }

    fn blown_up(&self) -> Self {
        let (d1, d2) = self.point.dims();
        AdamState {
            m_x: DVector::from_element(d1, f64::INFINITY),
            v_x: DVector::from_element(d1, f64::INFINITY),
            m_y: DVector::from_element(d2, f64::INFINITY),
            v_y: DVector::from_element(d2, f64::INFINITY),
            point: JointPoint::raw(DVector::from_element(d1, f64::INFINITY), DVector::from_element(d2, f64::INFINITY)),
            n: self.n + 1,
            diverged: true,
        }
    }
}

/// `1 − c^{k}`, the bias-correction denominator.
fn bias_correction(c: f64, k: u64) -> f64 {
    let pow = if k <= i32::MAX as u64 { c.powi(k as i32) } else { 0.0 };
    1.0 - pow
}

fn adam_update(state: &AdamState, gx: DVector<f64>, gy: DVector<f64>, params: &AdamParams, y_ascends: bool) -> AdamState {
    if state.diverged || gx.iter().chain(gy.iter()).any(|g| !g.is_finite()) {
        return state.blown_up();
    }
    let AdamParams { h, beta, rho, eps } = *params;
    let k = state.n + 1;
    let bc1 = bias_correction(beta, k);
    let bc2 = bias_correction(rho, k);
    debug_assert!(bc1 > 0.0 && bc2 > 0.0);

    let m_x = &state.m_x * beta + &gx * (1.0 - beta);
    let v_x = &state.v_x * rho + gx.map(|g| g * g) * (1.0 - rho);
    let m_y = &state.m_y * beta + &gy * (1.0 - beta);
    let v_y = &state.v_y * rho + gy.map(|g| g * g) * (1.0 - rho);

    let dir_x = m_x.zip_map(&v_x, |m, v| (m / bc1) / (v / bc2 + eps).sqrt());
    let dir_y = m_y.zip_map(&v_y, |m, v| (m / bc1) / (v / bc2 + eps).sqrt());
    let x = &state.point.x - dir_x * h;
    let y = if y_ascends { &state.point.y + dir_y * h } else { &state.point.y - dir_y * h };
    let point = JointPoint::raw(x, y);
    let diverged = !point.is_finite();
    let next = AdamState { m_x, v_x, m_y, v_y, point, n: k, diverged };
    if diverged {
        next.blown_up()
    } else {
        next
    }
}

/// One simultaneous Adam-DA step: x descends, y ascends, both players read
/// gradients at the incoming point. `eps` sits inside the square root.
pub fn adam_da_step(state: &AdamState, game: &ZeroSumGame, params: &AdamParams) -> AdamState {
    if state.diverged {
        return state.blown_up();
    }
    let gx = game.grad_x(&state.point);
    let gy = game.grad_y(&state.point);
    adam_update(state, gx, gy, params, true)
}

/// Adam applied to minimization of `objective` jointly over (x, y): the same
/// recursion with both blocks descending.
pub fn adam_min_step(state: &AdamState, objective: &ZeroSumGame, params: &AdamParams) -> AdamState {
    if state.diverged {
        return state.blown_up();
    }
    let gx = objective.grad_x(&state.point);
    let gy = objective.grad_y(&state.point);
    adam_update(state, gx, gy, params, false)
}

/// Simultaneous gradient descent-ascent.
pub fn gda_step(point: &JointPoint, game: &ZeroSumGame, h: f64) -> JointPoint {
    JointPoint::raw(&point.x - game.grad_x(point) * h, &point.y + game.grad_y(point) * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictStatus {
    Converged,
    Diverged,
    Undecided,
}

impl VerdictStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictStatus::Converged => "converged",
            VerdictStatus::Diverged => "diverged",
            VerdictStatus::Undecided => "undecided",
        }
    }
}

/// How a run was judged divergent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    /// Non-finite state or sup-norm above the hard cap.
    BlowUp,
    /// Distance reached `diverge_factor` times the initial distance.
    Escaped,
    /// No contraction over the trailing half of a run that hit `max_steps`
    /// (e.g. a limit cycle around a repelling equilibrium).
    NonContracting,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceVerdict {
    pub status: VerdictStatus,
    pub divergence: Option<DivergenceKind>,
    /// Index of the deciding sample, or the last sample when undecided.
    pub steps_used: usize,
    pub initial_distance: f64,
    pub final_distance: f64,
    /// Per-sample geometric contraction factor from least squares on log distance.
    pub fitted_rate: Option<f64>,
}

/// Thresholds for classifying runs.
#[derive(Debug, Clone, PartialEq)]
pub struct StopRule {
    pub converge_tol: f64,
    pub diverge_factor: f64,
    /// Immediate divergence when ‖z‖∞ exceeds this.
    pub hard_cap: f64,
    pub rate_window: usize,
    /// A trailing-half rate ≥ 1 − stall_tolerance counts as non-contracting.
    pub stall_tolerance: f64,
    /// Defaults to the origin.
    pub reference: Option<JointPoint>,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            converge_tol: 1e-8,
            diverge_factor: 10.0,
            hard_cap: 1e8,
            rate_window: 200,
            stall_tolerance: 1e-6,
            reference: None,
        }
    }
}

impl StopRule {
    pub fn with_reference(mut self, reference: JointPoint) -> Self {
        self.reference = Some(reference);
        self
    }

    fn reference_for(&self, dims: (usize, usize)) -> JointPoint {
        self.reference.clone().unwrap_or_else(|| JointPoint::origin(dims.0, dims.1))
    }
}

/// Least-squares geometric rate of `d[k] ≈ C·rᵏ` over consecutive samples.
/// Returns 0 when the window contains an exact zero.
pub fn fit_geometric_rate(distances: &[f64]) -> Option<f64> {
    if distances.iter().any(|&d| d == 0.0) {
        return Some(0.0);
    }
    if distances.len() < 2 || distances.iter().any(|d| !d.is_finite()) {
        return None;
    }
    let ts: Vec<f64> = (0..distances.len()).map(|k| k as f64).collect();
    let logs: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    least_squares_slope(&ts, &logs).map(f64::exp)
}

/// Slope of the least-squares line through `(t, y)`.
pub fn least_squares_slope(t: &[f64], y: &[f64]) -> Option<f64> {
    line_fit(t, y).map(|(slope, _, _)| slope)
}

/// `(slope, intercept, r²)` of the least-squares line through `(t, y)`.
pub fn line_fit(t: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = t.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let tm = t.iter().sum::<f64>() / nf;
    let ym = y.iter().sum::<f64>() / nf;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for (ti, yi) in t.iter().zip(y) {
        stt += (ti - tm) * (ti - tm);
        sty += (ti - tm) * (yi - ym);
        syy += (yi - ym) * (yi - ym);
    }
    if stt == 0.0 {
        return None;
    }
    let slope = sty / stt;
    let r2 = if syy == 0.0 { 1.0 } else { sty * sty / (stt * syy) };
    Some((slope, ym - slope * tm, r2))
}

/// Online classifier fed one sample at a time; shared by [`classify`] and the runners.
#[derive(Debug)]
pub(crate) struct Monitor<'a> {
    rule: &'a StopRule,
    distances: Vec<f64>,
    decided: Option<(VerdictStatus, Option<DivergenceKind>)>,
}

impl<'a> Monitor<'a> {
    pub(crate) fn new(rule: &'a StopRule) -> Self {
        Monitor { rule, distances: Vec::new(), decided: None }
    }

    /// Records a sample; returns true once the run is decided.
    pub(crate) fn feed(&mut self, distance: f64, norm_inf: f64) -> bool {
        if self.decided.is_some() {
            return true;
        }
        let k = self.distances.len();
        self.distances.push(distance);
        let d0 = self.distances[0];
        self.decided = if !distance.is_finite() || !norm_inf.is_finite() || norm_inf > self.rule.hard_cap {
            Some((VerdictStatus::Diverged, Some(DivergenceKind::BlowUp)))
        } else if k > 0 && d0 > 0.0 && distance >= self.rule.diverge_factor * d0 {
            Some((VerdictStatus::Diverged, Some(DivergenceKind::Escaped)))
        } else if distance <= self.rule.converge_tol {
            Some((VerdictStatus::Converged, None))
        } else {
            None
        };
        self.decided.is_some()
    }

    pub(crate) fn finish(self) -> ConvergenceVerdict {
        let n = self.distances.len();
        assert!(n > 0, "cannot classify an empty run");
        let last = n - 1;
        let window = self.rule.rate_window.max(2);
        let tail = &self.distances[n.saturating_sub(window)..];
        let fitted_rate = fit_geometric_rate(tail);
        let (status, divergence) = match self.decided {
            Some(d) => d,
            None => {
                let half = &self.distances[n.saturating_sub(window.max(n / 2))..];
                match fit_geometric_rate(half) {
                    Some(r) if r >= 1.0 - self.rule.stall_tolerance => {
                        (VerdictStatus::Diverged, Some(DivergenceKind::NonContracting))
                    }
                    _ => (VerdictStatus::Undecided, None),
                }
            }
        };
        ConvergenceVerdict {
            status,
            divergence,
            steps_used: last,
            initial_distance: self.distances[0],
            final_distance: self.distances[last],
            fitted_rate,
        }
    }
}

/// Classifies a recorded trajectory against `reference`.
pub fn classify(
    trajectory: &Trajectory,
    reference: &JointPoint,
    converge_tol: f64,
    diverge_factor: f64,
    rate_window: usize,
) -> ConvergenceVerdict {
    let rule = StopRule {
        converge_tol,
        diverge_factor,
        rate_window,
        ..StopRule::default()
    };
    let mut monitor = Monitor::new(&rule);
    for p in &trajectory.points {
        if monitor.feed(p.distance(reference), p.norm_inf()) {
            break;
        }
    }
    monitor.finish()
}

/// Runs a stepper from `state` until decided or `max_steps`, optionally recording.
fn drive<S, F, P>(
    mut state: S,
    mut step: F,
    point_of: P,
    max_steps: usize,
    rule: &StopRule,
    mut record: Option<(&ZeroSumGame, &mut Trajectory)>,
) -> ConvergenceVerdict
where
    F: FnMut(&S) -> S,
    P: Fn(&S) -> &JointPoint,
{
    let reference = rule.reference_for(point_of(&state).dims());
    let mut monitor = Monitor::new(rule);
    for k in 0..=max_steps {
        let p = point_of(&state);
        let dist = p.distance(&reference);
        if let Some((game, traj)) = record.as_mut() {
            let grad_l1_sum = if p.is_finite() { game.grad_l1_sum(p) } else { f64::INFINITY };
            traj.push(k as f64, p.clone(), Diagnostic { grad_l1_sum, dist_to_ref: Some(dist) });
            if !p.is_finite() {
                traj.diverged = true;
            }
        }
        if monitor.feed(dist, p.norm_inf()) || k == max_steps {
            break;
        }
        state = step(&state);
    }
    monitor.finish()
}

/// Runs Adam-DA, recording every iterate, `‖∇ₓf‖₁ + ‖∇ᵧf‖₁` and the distance to the reference.
pub fn run_adam_da(
    game: &ZeroSumGame,
    params: &AdamParams,
    init: &JointPoint,
    max_steps: usize,
    stop: &StopRule,
) -> Result<(Trajectory, ConvergenceVerdict)> {
    params.validate()?;
    game.check_point(init)?;
    let mut traj = Trajectory::new(TimeAxis::Step);
    let verdict = drive(
        AdamState::new(init.clone()),
        |s| adam_da_step(s, game, params),
        |s| &s.point,
        max_steps,
        stop,
        Some((game, &mut traj)),
    );
    Ok((traj, verdict))
}

/// Adam-DA verdict without storing the trajectory.
pub fn adam_da_verdict(
    game: &ZeroSumGame,
    params: &AdamParams,
    init: &JointPoint,
    max_steps: usize,
    stop: &StopRule,
) -> Result<ConvergenceVerdict> {
    params.validate()?;
    game.check_point(init)?;
    Ok(drive(AdamState::new(init.clone()), |s| adam_da_step(s, game, params), |s| &s.point, max_steps, stop, None))
}

/// Adam in minimization of `objective` over (x, y).
pub fn run_adam_min(
    objective: &ZeroSumGame,
    params: &AdamParams,
    init: &JointPoint,
    max_steps: usize,
    stop: &StopRule,
) -> Result<(Trajectory, ConvergenceVerdict)> {
    params.validate()?;
    objective.check_point(init)?;
    let mut traj = Trajectory::new(TimeAxis::Step);
    let verdict = drive(
        AdamState::new(init.clone()),
        |s| adam_min_step(s, objective, params),
        |s| &s.point,
        max_steps,
        stop,
        Some((objective, &mut traj)),
    );
    Ok((traj, verdict))
}

pub fn adam_min_verdict(
    objective: &ZeroSumGame,
    params: &AdamParams,
    init: &JointPoint,
    max_steps: usize,
    stop: &StopRule,
) -> Result<ConvergenceVerdict> {
    params.validate()?;
    objective.check_point(init)?;
    Ok(drive(AdamState::new(init.clone()), |s| adam_min_step(s, objective, params), |s| &s.point, max_steps, stop, None))
}

pub fn run_gda(
    game: &ZeroSumGame,
    h: f64,
    init: &JointPoint,
    max_steps: usize,
    stop: &StopRule,
) -> Result<(Trajectory, ConvergenceVerdict)> {
    game.check_point(init)?;
    let mut traj = Trajectory::new(TimeAxis::Step);
    let verdict = drive(init.clone(), |p| gda_step(p, game, h), |p| p, max_steps, stop, Some((game, &mut traj)));
    Ok((traj, verdict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::QuadraticGame;
    use proptest::prelude::*;

    fn bilinear() -> ZeroSumGame {
        QuadraticGame::scalar(0.0, 1.0, 0.0).into_game("bilinear")
    }

    fn pt(x: f64, y: f64) -> JointPoint {
        JointPoint::from_slices(&[x], &[y]).unwrap()
    }

    #[test]
    fn first_step_is_bias_corrected_sign_step() {
        let params = AdamParams { h: 0.1, beta: 0.5, rho: 0.9, eps: 0.0 };
        let s = adam_da_step(&AdamState::new(pt(1.0, 1.0)), &bilinear(), &params);
        assert!((s.point.x[0] - 0.9).abs() < 1e-15);
        assert!((s.point.y[0] - 1.1).abs() < 1e-15);
        assert_eq!(s.n, 1);
    }

    #[test]
    fn stationary_point_is_fixed_and_moments_decay() {
        let game = QuadraticGame::scalar(0.4, 1.0, 0.4).into_game("q");
        let params = AdamParams::new(0.05, 0.5, 0.9, 1e-3).unwrap();
        let mut s = AdamState::new(JointPoint::origin(1, 1));
        s.m_x[0] = 2.0;
        s.v_x[0] = 4.0;
        s.m_y[0] = -1.0;
        s.v_y[0] = 1.0;
        s.n = 5;
        // moments are nonzero, so the point moves; check the moment decay only.
        let next = adam_da_step(&s, &game, &params);
        assert_eq!(next.m_x[0], 1.0);
        assert!((next.v_x[0] - 3.6).abs() < 1e-15);
        assert_eq!(next.m_y[0], -0.5);
        assert!((next.v_y[0] - 0.9).abs() < 1e-15);

        let fresh = adam_da_step(&AdamState::new(JointPoint::origin(1, 1)), &game, &params);
        assert_eq!(fresh.point, JointPoint::origin(1, 1));
    }

    #[test]
    fn gda_examples() {
        let p = gda_step(&pt(1.0, 1.0), &bilinear(), 0.1);
        assert!((p.x[0] - 0.9).abs() < 1e-15 && (p.y[0] - 1.1).abs() < 1e-15);
        let origin = JointPoint::origin(1, 1);
        assert_eq!(gda_step(&origin, &bilinear(), 0.1), origin);
    }

    #[test]
    fn gda_bilinear_energy_grows_by_one_plus_h_squared() {
        let h = 0.07;
        let mut p = pt(0.3, -0.8);
        for _ in 0..50 {
            let next = gda_step(&p, &bilinear(), h);
            let ratio = next.to_joint().norm_squared() / p.to_joint().norm_squared();
            assert!((ratio - (1.0 + h * h)).abs() < 1e-12);
            p = next;
        }
    }

    #[test]
    fn adam_min_first_step() {
        let obj = QuadraticGame::scalar(2.0, 0.0, -2.0).into_game("sq");
        let params = AdamParams { h: 0.1, beta: 0.9, rho: 0.999, eps: 0.0 };
        let s = adam_min_step(&AdamState::new(pt(1.0, 1.0)), &obj, &params);
        assert!((s.point.x[0] - 0.9).abs() < 1e-15);
        assert!((s.point.y[0] - 0.9).abs() < 1e-15);
        let origin = JointPoint::origin(1, 1);
        let s = adam_min_step(&AdamState::new(origin.clone()), &obj, &params.with_eps(1e-4));
        assert_eq!(s.point, origin);
    }

    #[test]
    fn adam_min_converges_inside_light_region() {
        let obj = QuadraticGame::scalar(2.0, 0.0, -2.0).into_game("sq");
        let params = AdamParams::new(0.05, 0.9, 0.999, 1e-4).unwrap();
        let (_, v) = run_adam_min(&obj, &params, &pt(0.6, 0.6), 50_000, &StopRule::default()).unwrap();
        assert_eq!(v.status, VerdictStatus::Converged);
    }

    #[test]
    fn non_finite_gradient_flags_divergence() {
        let game = ZeroSumGame::builder("nan", 1, 1, |_| 0.0)
            .gradients(|_| DVector::from_element(1, f64::NAN), |_| DVector::zeros(1))
            .build()
            .unwrap();
        let params = AdamParams::new(0.1, 0.0, 0.5, 1e-3).unwrap();
        let s = adam_da_step(&AdamState::new(pt(1.0, 1.0)), &game, &params);
        assert!(s.diverged);
        assert!(s.point.norm_inf().is_infinite());
        let (traj, v) = run_adam_da(&game, &params, &pt(1.0, 1.0), 10, &StopRule::default()).unwrap();
        assert!(traj.diverged);
        assert_eq!(v.divergence, Some(DivergenceKind::BlowUp));
        assert_eq!(v.steps_used, 1);
    }

    #[test]
    fn run_from_reference_converges_immediately() {
        let game = QuadraticGame::scalar(0.4, 1.0, 0.4).into_game("q");
        let params = AdamParams::new(0.5, 0.3, 0.5, 1e-3).unwrap();
        let (traj, v) = run_adam_da(&game, &params, &JointPoint::origin(1, 1), 100, &StopRule::default()).unwrap();
        assert_eq!(v.status, VerdictStatus::Converged);
        assert_eq!(v.final_distance, 0.0);
        assert_eq!(v.steps_used, 0);
        assert_eq!(traj.len(), 1);
    }

    #[test]
    fn quadratic_converges_below_discrete_threshold() {
        // threshold ≈ 0.021809 for this game at beta = 0, eps = 1e-3
        let game = QuadraticGame::scalar(0.4, 1.0, 0.4).into_game("q");
        let params = AdamParams::new(0.01, 0.0, 0.5, 1e-3).unwrap();
        let (traj, v) = run_adam_da(&game, &params, &pt(0.6, 0.6), 50_000, &StopRule::default()).unwrap();
        assert_eq!(v.status, VerdictStatus::Converged);
        assert!(v.fitted_rate.unwrap() < 1.0);
        assert_eq!(traj.len(), v.steps_used + 1);
        let d = traj.diagnostics.last().unwrap().dist_to_ref.unwrap();
        assert_eq!(d, v.final_distance);
    }

    #[test]
    fn classify_constant_at_reference() {
        let mut t = Trajectory::new(TimeAxis::Step);
        for k in 0..10 {
            t.push(k as f64, JointPoint::origin(1, 1), Diagnostic { grad_l1_sum: 0.0, dist_to_ref: None });
        }
        let v = classify(&t, &JointPoint::origin(1, 1), 1e-8, 10.0, 200);
        assert_eq!(v.status, VerdictStatus::Converged);
        assert_eq!(v.fitted_rate, Some(0.0));
    }

    fn geometric(r: f64, n: usize) -> Trajectory {
        let mut t = Trajectory::new(TimeAxis::Step);
        for k in 0..n {
            let s = r.powi(k as i32);
            t.push(k as f64, pt(0.6 * s, 0.8 * s), Diagnostic { grad_l1_sum: 0.0, dist_to_ref: None });
        }
        t
    }

    #[test]
    fn classify_geometric_contraction_rate() {
        let v = classify(&geometric(0.5, 60), &JointPoint::origin(1, 1), 1e-8, 10.0, 200);
        assert_eq!(v.status, VerdictStatus::Converged);
        assert!((v.fitted_rate.unwrap() - 0.5).abs() < 1e-6);
        let v = classify(&geometric(0.5, 20), &JointPoint::origin(1, 1), 1e-8, 10.0, 200);
        assert!((v.fitted_rate.unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn classify_geometric_growth_crossing_step() {
        let v = classify(&geometric(1.1, 100), &JointPoint::origin(1, 1), 1e-8, 10.0, 200);
        assert_eq!(v.status, VerdictStatus::Diverged);
        assert_eq!(v.divergence, Some(DivergenceKind::Escaped));
        assert_eq!(v.steps_used, (10f64.ln() / 1.1f64.ln()).ceil() as usize);
        assert_eq!(v.steps_used, 25);
        assert!(v.final_distance >= 10.0 * v.initial_distance);
    }

    #[test]
    fn classify_flat_run_is_non_contracting() {
        let mut t = Trajectory::new(TimeAxis::Step);
        for k in 0..1000 {
            let a = 0.7 * k as f64;
            t.push(k as f64, pt(0.02 * a.cos(), 0.02 * a.sin()), Diagnostic { grad_l1_sum: 0.0, dist_to_ref: None });
        }
        let v = classify(&t, &JointPoint::origin(1, 1), 1e-8, 10.0, 200);
        assert_eq!(v.status, VerdictStatus::Diverged);
        assert_eq!(v.divergence, Some(DivergenceKind::NonContracting));
    }

    #[test]
    fn classify_slow_contraction_is_undecided() {
        let v = classify(&geometric(0.99, 300), &JointPoint::origin(1, 1), 1e-8, 10.0, 200);
        assert_eq!(v.status, VerdictStatus::Undecided);
    }

    #[test]
    fn line_fit_exact() {
        let (s, c, r2) = line_fit(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((s - 2.0).abs() < 1e-15 && (c - 1.0).abs() < 1e-15 && (r2 - 1.0).abs() < 1e-15);
        assert!(line_fit(&[1.0], &[1.0]).is_none());
    }

    proptest! {
        #[test]
        fn bias_correction_recovers_raw_gradient(beta in -0.99f64..0.99, rho in 0.01f64..0.99,
                                                 gx in -5.0f64..5.0, gy in -5.0f64..5.0) {
            // After one step the corrected moments equal g and g²: the x-move is h·g/√(g²+ε).
            let game = ZeroSumGame::builder("lin", 1, 1, move |p| gx * p.x[0] + gy * p.y[0])
                .gradients(move |_| DVector::from_element(1, gx), move |_| DVector::from_element(1, gy))
                .build().unwrap();
            let params = AdamParams { h: 1.0, beta, rho, eps: 1e-6 };
            let s = adam_da_step(&AdamState::new(JointPoint::origin(1, 1)), &game, &params);
            let m_hat = s.m_x[0] / (1.0 - beta);
            let v_hat = s.v_x[0] / (1.0 - rho);
            prop_assert!((m_hat - gx).abs() <= 1e-12 * gx.abs().max(1.0));
            prop_assert!((v_hat - gx * gx).abs() <= 1e-12 * (gx * gx).max(1.0));
            let expected = -gx / (gx * gx + 1e-6).sqrt();
            prop_assert!((s.point.x[0] - expected).abs() < 1e-12);
        }

        #[test]
        fn moments_stay_bounded(beta in -0.99f64..0.99, rho in 0.01f64..0.99,
                                m0 in -3.0f64..3.0, g in -3.0f64..3.0, v0 in 0.0f64..9.0) {
            let game = ZeroSumGame::builder("lin", 1, 1, move |p| g * p.x[0])
                .gradients(move |_| DVector::from_element(1, g), |_| DVector::zeros(1))
                .build().unwrap();
            let params = AdamParams { h: 0.01, beta, rho, eps: 1e-3 };
            let mut s = AdamState::new(JointPoint::origin(1, 1));
            s.m_x[0] = m0;
            s.v_x[0] = v0;
            s.n = 3;
            let next = adam_da_step(&s, &game, &params);
            prop_assert!(next.v_x[0] >= 0.0 && next.v_y[0] >= 0.0);
            let bound = if beta >= 0.0 {
                m0.abs().max(g.abs())
            } else {
                beta.abs() * m0.abs() + (1.0 + beta.abs()) * g.abs()
            };
            prop_assert!(next.m_x[0].abs() <= bound * (1.0 + 1e-12));
        }
    }
}
