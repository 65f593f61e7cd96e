//! The twelve acceptance criteria, each reduced to a single pass/fail check.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use mml_core::continuous::{fit_exponential_rate, rhs_continuous_adam_da, rk4_integrate, rk4_verdict, OdeCoefficients};
use mml_core::discrete::{adam_da_verdict, run_adam_da, StopRule, VerdictStatus};
use mml_core::fd::{fd_gradient, fd_jacobian};
use mml_core::harness::error_order::error_order;
use mml_core::harness::sweep::{geomspace, linspace, predicted_boundary_index, SweepGrid, SweepMode};
use mml_core::harness::{catalog, random_inits, rng_for, sweep};
use mml_core::igr::{igr_x_term, igr_y_term, k_factor};
use mml_core::perturbed::{grad_of_gradnorm, perturbed_l1_norm, GradNormTerm};
use mml_core::spectral::{self, adam_jacobian, continuous_h_threshold, discrete_h_threshold, discrete_spectral_radius};
use mml_core::{AdamParams, JointPoint, QuadraticGame, ZeroSumGame};

use crate::commands;
use crate::config::{Command, RunConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub id: String,
    pub title: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(id: impl Into<String>, title: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check { id: id.into(), title: title.into(), passed, detail: detail.into() }
    }

    /// Runs `f`, turning an error into a failed check.
    pub fn run<F>(id: &str, title: &str, f: F) -> Self
    where
        F: FnOnce() -> anyhow::Result<(bool, String)>,
    {
        match f() {
            Ok((passed, detail)) => Check::new(id, title, passed, detail),
            Err(e) => Check::new(id, title, false, format!("error: {e:#}")),
        }
    }

    pub fn line(&self) -> String {
        format!("{} {} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.title, self.detail)
    }
}

pub type Criterion = (&'static str, &'static str, fn() -> anyhow::Result<(bool, String)>);

pub const CRITERIA: [Criterion; 12] = [
    ("C01", "local error order of the continuous models", order_of_accuracy),
    ("C02", "discrete threshold sharpness", discrete_sharpness),
    ("C03", "continuous threshold sharpness", continuous_sharpness),
    ("C04", "bilinear divergence over the full grid", bilinear_divergence),
    ("C05", "thresholds decrease in beta", beta_monotonicity),
    ("C06", "linearised continuous Adam-DA is quadratic in J", linearisation),
    ("C07", "gradient-norm identities and equilibrium M", gradient_identities),
    ("C08", "sqrt(eps) scaling of both thresholds", sqrt_eps_scaling),
    ("C09", "heatmap boundary follows the discrete threshold", heatmap_boundary),
    ("C10", "eps sweep boundary doubles per 4x eps", eps_sweep_ratio),
    ("C11", "implicit regularization substrate", igr_substrate),
    ("C12", "heatmap output independent of worker count", determinism),
];

pub fn run_all() -> Vec<Check> {
    CRITERIA.iter().map(|(id, title, f)| Check::run(id, title, f)).collect()
}

fn quad(a: f64, b: f64, c: f64) -> ZeroSumGame {
    QuadraticGame::scalar(a, b, c).into_game("quadratic")
}

fn origin() -> JointPoint {
    JointPoint::origin(1, 1)
}

fn start() -> JointPoint {
    JointPoint::from_slices(&[0.6], &[0.6]).expect("finite point")
}

fn spectrum_at_origin(game: &ZeroSumGame) -> anyhow::Result<Vec<Complex64>> {
    let (d1, d2) = game.dims();
    Ok(spectral::eigenvalues(&spectral::gda_jacobian(game, &JointPoint::origin(d1, d2))?)?)
}

fn order_of_accuracy() -> anyhow::Result<(bool, String)> {
    let t0 = Instant::now();
    let e = catalog::entry("f1")?;
    let params = AdamParams::new(0.02, 0.0, 0.5, 1e-6)?;
    let inits = random_inits(0, 30, (1, 1), -1.0, 1.0)?;
    let s = error_order(&e.game, &params, &[0.02, 0.01, 0.005, 0.0025], 100, &inits)?;
    let secs = t0.elapsed().as_secs_f64();
    let ok = (2.5..=3.5).contains(&s.slope_adam) && (1.5..=2.5).contains(&s.slope_sign) && s.slope_adam - s.slope_sign >= 0.5 && secs < 10.0;
    Ok((ok, format!("slope adam-ode {:.3}, sign-ode {:.3}, {:.2}s", s.slope_adam, s.slope_sign, secs)))
}

/// Closed-form discrete bound for a single conjugate pair `re ± i·im`.
fn discrete_oracle(re: f64, im: f64, beta: f64, eps: f64) -> f64 {
    let modulus2 = re * re + im * im;
    2.0 * eps.sqrt() * (1.0 - beta * beta) * re.abs() / ((1.0 + beta * beta) * modulus2 + 2.0 * beta * (im * im - re * re))
}

fn continuous_oracle(re: f64, im: f64, beta: f64, eps: f64) -> f64 {
    2.0 * eps.sqrt() * (1.0 - beta) * re.abs() / ((1.0 + beta) * (im * im - re * re))
}

fn discrete_sharpness() -> anyhow::Result<(bool, String)> {
    let t0 = Instant::now();
    let game = quad(0.4, 1.0, 0.4);
    let spectrum = spectrum_at_origin(&game)?;
    let eps = 1e-3;
    let mut ok = true;
    let mut detail = Vec::new();
    let h0 = discrete_h_threshold(&spectrum, 0.0, eps);
    if (h0 - 0.021809).abs() > 1e-6 || (h0 - discrete_oracle(-0.4, 1.0, 0.0, eps)).abs() > 1e-6 {
        ok = false;
    }
    detail.push(format!("h*(beta=0) {h0:.7}"));
    for beta in [-0.5, 0.0, 0.5] {
        let h_star = discrete_h_threshold(&spectrum, beta, eps);
        for (factor, want) in [(0.9, VerdictStatus::Converged), (1.1, VerdictStatus::Diverged)] {
            let p = AdamParams::new(factor * h_star, beta, 0.5, eps)?;
            let v = adam_da_verdict(&game, &p, &start(), 50_000, &StopRule::default())?;
            let radius = discrete_spectral_radius(&spectrum, beta, 0.5, eps, p.h);
            let radius_ok = if want == VerdictStatus::Converged { radius < 1.0 } else { radius > 1.0 };
            if v.status != want || !radius_ok {
                ok = false;
                detail.push(format!("beta {beta} x{factor}: {} radius {radius:.6}", v.status.as_str()));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs < 5.0;
    detail.push(format!("{secs:.2}s"));
    Ok((ok, detail.join("; ")))
}

fn continuous_sharpness() -> anyhow::Result<(bool, String)> {
    let game = quad(0.4, 1.0, 0.4);
    let spectrum = spectrum_at_origin(&game)?;
    let j = spectral::gda_jacobian(&game, &origin())?;
    let eps = 1e-3;
    let mut ok = true;
    let mut detail = Vec::new();
    let h0 = continuous_h_threshold(&spectrum, 0.0, eps);
    if (h0 - 0.030117).abs() > 1e-6 || (h0 - continuous_oracle(-0.4, 1.0, 0.0, eps)).abs() > 1e-6 {
        ok = false;
    }
    detail.push(format!("h*(beta=0) {h0:.7}"));
    let reference = origin();
    for beta in [-0.5, 0.0, 0.5] {
        let h_star = continuous_h_threshold(&spectrum, beta, eps);
        let converge = AdamParams::new(0.9 * h_star, beta, 0.5, eps)?;
        let dt = converge.h / 10.0;
        let alpha = spectral::continuous_rate(&j, &converge)?;
        let steps = ((40.0 / alpha.abs()) / dt).ceil() as usize;
        let traj = rk4_integrate(|p| rhs_continuous_adam_da(p, &game, &converge), &start(), dt, steps, &game, Some(&reference))?;
        let measured = fit_exponential_rate(&traj, &reference, 1e-10, 1e-4);
        let rel = measured.map(|m| (m - alpha).abs() / alpha.abs());
        if !matches!(rel, Some(r) if r <= 0.15) {
            ok = false;
        }
        detail.push(format!("beta {beta}: rate {:.4} vs {:.4}", measured.unwrap_or(f64::NAN), alpha));

        let diverge = AdamParams::new(1.1 * h_star, beta, 0.5, eps)?;
        let dt = diverge.h / 10.0;
        let v = rk4_verdict(|p| rhs_continuous_adam_da(p, &game, &diverge), &start(), dt, 50_000, 1, &StopRule::default())?;
        if v.status != VerdictStatus::Diverged {
            ok = false;
            detail.push(format!("beta {beta} x1.1: {}", v.status.as_str()));
        }
    }
    Ok((ok, detail.join("; ")))
}

fn bilinear_divergence() -> anyhow::Result<(bool, String)> {
    let game = quad(0.0, 1.0, 0.0);
    let spectrum = spectrum_at_origin(&game)?;
    let mut thresholds_zero = true;
    let record = StopRule { converge_tol: f64::NEG_INFINITY, diverge_factor: f64::INFINITY, ..StopRule::default() };
    let mut failed = Vec::new();
    let mut cells = 0;
    for beta in [-0.5, 0.0, 0.5] {
        for rho in [0.5, 0.9] {
            for h in [0.002, 0.01] {
                for eps in [1e-6, 1e-3] {
                    cells += 1;
                    thresholds_zero &= continuous_h_threshold(&spectrum, beta, eps) == 0.0 && discrete_h_threshold(&spectrum, beta, eps) == 0.0;
                    let p = AdamParams::new(h, beta, rho, eps)?;
                    let (traj, _) = run_adam_da(&game, &p, &start(), 2000, &record)?;
                    let initial = start().distance(&origin());
                    let last = traj.last().map(|q| q.distance(&origin())).unwrap_or(f64::INFINITY);
                    // a non-finite end state is farther than any start
                    let farther = traj.diverged || !last.is_finite() || last > initial;
                    if !farther {
                        failed.push(format!("(b{beta},r{rho},h{h},e{eps}) {last:.4}"));
                    }
                }
            }
        }
    }
    let ok = thresholds_zero && failed.is_empty();
    let mut detail = format!("thresholds zero: {thresholds_zero}; {}/{} cells end farther", cells - failed.len(), cells);
    if !failed.is_empty() {
        detail.push_str(&format!("; closer: {}", failed.join(" ")));
    }
    Ok((ok, detail))
}

fn beta_monotonicity() -> anyhow::Result<(bool, String)> {
    let spectrum = spectrum_at_origin(&quad(0.4, 1.0, 0.4))?;
    let eps = 1e-3;
    let betas: Vec<f64> = (0..10).map(|i| -0.9 + 0.2 * i as f64).collect();
    let cont: Vec<f64> = betas.iter().map(|b| continuous_h_threshold(&spectrum, *b, eps)).collect();
    let cont_ok = cont.windows(2).all(|w| w[1] < w[0]);
    let lower = spectral::beta_monotone_lower(&spectrum)?;
    let lower_ok = (lower + 0.428571).abs() <= 1e-6;
    let disc: Vec<f64> = betas.iter().filter(|b| **b > lower).map(|b| discrete_h_threshold(&spectrum, *b, eps)).collect();
    let disc_ok = disc.len() >= 2 && disc.windows(2).all(|w| w[1] < w[0]);
    Ok((
        cont_ok && lower_ok && disc_ok,
        format!("continuous decreasing {cont_ok}; beta_lower {lower:.7}; discrete decreasing on {} values {disc_ok}", disc.len()),
    ))
}

/// Positive definite 2×2 matrix `MMᵀ + 0.1 I`.
fn spd(rng: &mut impl Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(2, 2) * 0.1
}

fn linearisation() -> anyhow::Result<(bool, String)> {
    let mut rng = rng_for(6, 0);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let a = spd(&mut rng);
        let b = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-1.0..1.0));
        let c = spd(&mut rng);
        let game = QuadraticGame::new(a, b, c)?.into_game("random");
        let j = spectral::gda_jacobian(&game, &JointPoint::origin(2, 2))?;
        for eps in [1e-2, 1.0] {
            for beta in [-0.5, 0.0, 0.5] {
                let params = AdamParams::new(0.01, beta, 0.9, eps)?;
                let num = fd_jacobian(|z| rhs_continuous_adam_da(&JointPoint::from_joint(z, 2), &game, &params), &DVector::zeros(4), 1e-6);
                let exact = adam_jacobian(&j, &params);
                worst = worst.max((&num - &exact).norm() / exact.norm());
            }
        }
    }
    Ok((worst < 1e-4, format!("worst Frobenius rel err {worst:.2e} over 60 cases")))
}

fn gradient_identities() -> anyhow::Result<(bool, String)> {
    let mut rng = rng_for(7, 0);
    let mut worst = 0.0f64;
    for id in ["f1", "f2", "f3"] {
        let e = catalog::entry(id)?;
        let game = &e.game;
        let eps = e.params.eps;
        for _ in 0..100 {
            let p = JointPoint::from_slices(&[rng.gen_range(-1.0..1.0)], &[rng.gen_range(-1.0..1.0)])?;
            let z = p.to_joint();
            let norm_x = |z: &DVector<f64>| perturbed_l1_norm(&game.grad_x(&JointPoint::from_joint(z, 1)), eps).expect("eps > 0");
            let norm_y = |z: &DVector<f64>| perturbed_l1_norm(&game.grad_y(&JointPoint::from_joint(z, 1)), eps).expect("eps > 0");
            let gx = fd_gradient(norm_x, &z, 1e-6);
            let gy = fd_gradient(norm_y, &z, 1e-6);
            let cases = [
                (GradNormTerm::XX, gx.rows(0, 1).into_owned()),
                (GradNormTerm::YX, gx.rows(1, 1).into_owned()),
                (GradNormTerm::YY, gy.rows(1, 1).into_owned()),
                (GradNormTerm::XY, gy.rows(0, 1).into_owned()),
            ];
            for (which, fd) in cases {
                let exact = grad_of_gradnorm(game, &p, eps, which)?;
                let diff = (&exact - &fd).norm();
                if diff > 0.0 {
                    worst = worst.max(diff / exact.norm().max(fd.norm()));
                }
            }
        }
    }
    let mut m_err = 0.0f64;
    for id in ["f2", "quad_cc", "quad_test", "quad_weak", "bilinear"] {
        let e = catalog::entry(id)?;
        let eq = e.equilibrium.clone().expect("catalog entry with equilibrium");
        for beta in [-0.9, -0.5, 0.0, 0.5, 0.9] {
            for rho in [0.1, 0.5, 0.9, 0.999] {
                for eps in [1e-8, 1e-3, 1.0] {
                    let params = AdamParams::new(0.01, beta, rho, eps)?;
                    let coeffs = OdeCoefficients::at(&e.game, &eq, &params)?;
                    let target = (1.0 + beta) / (1.0 - beta);
                    for v in coeffs.m_mu.entries().iter().chain(coeffs.m_nu.entries().iter()) {
                        m_err = m_err.max((v - target).abs());
                    }
                }
            }
        }
    }
    Ok((worst < 1e-5 && m_err <= 1e-12, format!("worst rel err {worst:.2e} on 300 probes; equilibrium M abs err {m_err:.1e}")))
}

/// Catalog games with a known equilibrium plus seeded random 2+2 games.
fn battery_spectra() -> anyhow::Result<Vec<Vec<Complex64>>> {
    let mut out = Vec::new();
    for id in catalog::IDS {
        let e = catalog::entry(id)?;
        if let (Some(eq), false) = (&e.equilibrium, e.minimization) {
            out.push(spectral::eigenvalues(&spectral::gda_jacobian(&e.game, eq)?)?);
        }
    }
    let mut rng = rng_for(8, 0);
    for _ in 0..20 {
        let a = spd(&mut rng);
        let b = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-2.0..2.0));
        let c = spd(&mut rng);
        let game = QuadraticGame::new(a, b, c)?.into_game("random");
        out.push(spectral::eigenvalues(&spectral::gda_jacobian(&game, &JointPoint::origin(2, 2))?)?);
    }
    Ok(out)
}

fn sqrt_eps_scaling() -> anyhow::Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut compared = 0;
    for spectrum in battery_spectra()? {
        for beta in [-0.5, 0.0, 0.5] {
            for eps in [1e-6, 1e-3, 0.25] {
                for f in [continuous_h_threshold, discrete_h_threshold] {
                    let (a, b) = (f(&spectrum, beta, eps), f(&spectrum, beta, 4.0 * eps));
                    compared += 1;
                    if a.is_infinite() && b.is_infinite() || a == 0.0 && b == 0.0 {
                        continue;
                    }
                    worst = worst.max((b - 2.0 * a).abs() / (2.0 * a));
                }
            }
        }
    }
    Ok((worst < 1e-12, format!("worst rel err {worst:.2e} over {compared} threshold pairs")))
}

/// Fraction of boundary columns whose observed boundary is within one cell of the prediction.
fn boundary_agreement(observed: &[Option<usize>], predicted: &[Option<usize>]) -> (usize, usize) {
    let mut agree = 0;
    let mut columns = 0;
    for (o, p) in observed.iter().zip(predicted) {
        if o.is_none() && p.is_none() {
            continue;
        }
        columns += 1;
        if let (Some(o), Some(p)) = (o, p) {
            if o.abs_diff(*p) <= 1 {
                agree += 1;
            }
        }
    }
    (agree, columns)
}

fn heatmap_boundary() -> anyhow::Result<(bool, String)> {
    let t0 = Instant::now();
    let betas = linspace(-0.9, 0.9, 40);
    let hs = linspace(0.0015, 0.06, 40);
    let grid = SweepGrid::heatmap("quad_cc", SweepMode::DiscreteSimulated, betas.clone(), hs.clone())?;
    let result = sweep::heatmap(&grid)?;
    let secs = t0.elapsed().as_secs_f64();
    let spectrum = spectrum_at_origin(&catalog::game("quad_cc")?)?;
    let predicted: Vec<Option<usize>> = betas
        .iter()
        .map(|b| predicted_boundary_index(&hs, discrete_h_threshold(&spectrum, *b, grid.fixed.eps)))
        .collect();
    let (agree, columns) = boundary_agreement(&result.boundary_indices(), &predicted);
    let frac = if columns == 0 { 0.0 } else { agree as f64 / columns as f64 };
    Ok((frac >= 0.95 && secs < 60.0, format!("{agree}/{columns} boundary columns within one cell, {secs:.1}s")))
}

fn eps_sweep_ratio() -> anyhow::Result<(bool, String)> {
    let eps = vec![1e-4, 4e-4, 1.6e-3, 6.4e-3];
    let hs = geomspace(0.002, 2f64.powf(0.125), 48);
    let result = sweep::eps_sweep("quad_cc", 0.0, eps.clone(), hs.clone(), SweepMode::DiscreteSimulated)?;
    let idx = result.boundary_indices();
    if idx.iter().any(Option::is_none) {
        return Ok((false, format!("some eps value has no boundary in the grid: {idx:?}")));
    }
    let idx: Vec<usize> = idx.into_iter().flatten().collect();
    let monotone = idx.windows(2).all(|w| w[1] > w[0]);
    // ratio 2 in h is exactly 8 cells on this grid
    let ratio_ok = idx.windows(2).all(|w| (w[1] as i64 - w[0] as i64 - 8).abs() <= 1);
    let bounds: Vec<String> = idx.iter().map(|i| format!("{:.5}", hs[*i])).collect();
    Ok((monotone && ratio_ok, format!("boundary h {} (indices {:?})", bounds.join(", "), idx)))
}

fn igr_substrate() -> anyhow::Result<(bool, String)> {
    let grid: Vec<f64> = (0..9).map(|i| 0.1 * i as f64).collect();
    let k_zero = grid.iter().chain([-0.9, -0.5].iter()).all(|b| k_factor(*b, *b) == 0.0);
    let d = 1e-6;
    let mut signs = true;
    for &beta in &grid {
        for &rho in &grid {
            let rho = rho + 0.05;
            let beta = beta - 0.4;
            signs &= k_factor(beta + d, rho) - k_factor(beta - d, rho) > 0.0;
            signs &= k_factor(beta, rho + d) - k_factor(beta, rho - d) < 0.0;
        }
    }
    let mut linear_err = 0.0f64;
    let mut compose_err = 0.0f64;
    let mut rng = rng_for(11, 0);
    for id in ["f1", "f2", "f3", "quad_test"] {
        let game = catalog::game(id)?;
        for _ in 0..20 {
            let p = JointPoint::from_slices(&[rng.gen_range(-1.0..1.0)], &[rng.gen_range(-1.0..1.0)])?;
            let base = AdamParams::new(0.01, 0.0, 0.5, 1e-3)?;
            // same h and eps, K doubled by moving beta: K(1/3, 0.5) = 2 − 3 = −1, K(0, 0.5) = −2
            let half = base.with_beta(1.0 / 3.0);
            let (k1, k2) = (base.k(), half.k());
            for (a, b) in [(igr_x_term(&game, &p, &base)?, igr_x_term(&game, &p, &half)?), (igr_y_term(&game, &p, &base)?, igr_y_term(&game, &p, &half)?)] {
                let scaled = &b * (k1 / k2);
                let diff = (&a - &scaled).amax();
                if diff > 0.0 {
                    linear_err = linear_err.max(diff / a.amax());
                }
            }
            let y = igr_y_term(&game, &p, &base)?;
            let yx = grad_of_gradnorm(&game, &p, base.eps, GradNormTerm::YX)? * (base.h / 2.0 * base.k());
            compose_err = compose_err.max((y - yx).amax());
        }
    }
    let ok = k_zero && signs && linear_err < 1e-12 && compose_err < 1e-14;
    Ok((ok, format!("K(b,b)=0 {k_zero}; signs {signs}; linearity rel err {linear_err:.1e}; composition abs err {compose_err:.1e}")))
}

const DETERMINISM_CONFIG: &str = r#"
command = "heatmap"
game = "quad_cc"
seed = 12
[grid]
beta = { start = -0.8, stop = 0.8, count = 8 }
h = { start = 0.004, stop = 0.05, count = 10 }
max_steps = 3000
random_init = { low = -1.0, high = 1.0 }
"#;

fn determinism() -> anyhow::Result<(bool, String)> {
    let base = std::env::temp_dir().join(format!("mml-determinism-{}-{}", std::process::id(), rand::random::<u64>()));
    let mut outputs = Vec::new();
    for workers in [1, 8] {
        let mut resolved = RunConfig::parse(DETERMINISM_CONFIG)?.resolve(Command::Heatmap)?;
        resolved.output_dir = base.join(format!("w{workers}"));
        resolved.workers = workers;
        commands::run(&resolved)?;
        outputs.push(std::fs::read(resolved.output_dir.join("heatmap.csv"))?);
    }
    let _ = std::fs::remove_dir_all(&base);
    let same = outputs[0] == outputs[1];
    Ok((same, format!("{} bytes, identical: {same}", outputs[0].len())))
}
