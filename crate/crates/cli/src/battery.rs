//! Fast invariant checks run by `selftest` ahead of the acceptance criteria.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use mml_core::discrete::{adam_da_step, AdamState};
use mml_core::harness::error_order::euler_self_test;
use mml_core::harness::{random_inits, rng_for};
use mml_core::igr::running_mean;
use mml_core::report::fmt_f64;
use mml_core::spectral::{self, CharQuadratic};
use mml_core::{AdamParams, JointPoint, QuadraticGame, ZeroSumGame};

use crate::acceptance::Check;
use crate::config::RunConfig;

type Invariant = (&'static str, &'static str, fn() -> anyhow::Result<(bool, String)>);

const INVARIANTS: [Invariant; 9] = [
    ("I01", "config round trip", config_round_trip),
    ("I02", "S + A reproduces J exactly", split_exact),
    ("I03", "spectra are closed under conjugation", conjugate_closed),
    ("I04", "first Adam-DA step is a normalized gradient step", first_step),
    ("I05", "CSV numbers round-trip", number_round_trip),
    ("I06", "seeded initial points are reproducible", seeded_inits),
    ("I07", "running mean recurrence", running_mean_recurrence),
    ("I08", "unit-disk test agrees with root moduli", unit_disk_agrees),
    ("I09", "order-fitting harness recovers Euler's local order", euler_order),
];

pub fn run_all() -> Vec<Check> {
    INVARIANTS.iter().map(|(id, title, f)| Check::run(id, title, f)).collect()
}

fn random_game(rng: &mut impl Rng, d1: usize, d2: usize) -> anyhow::Result<ZeroSumGame> {
    let a = DMatrix::from_fn(d1, d1, |_, _| rng.gen_range(-1.0..1.0));
    let b = DMatrix::from_fn(d1, d2, |_, _| rng.gen_range(-1.0..1.0));
    let c = DMatrix::from_fn(d2, d2, |_, _| rng.gen_range(-1.0..1.0));
    Ok(QuadraticGame::new(&a + a.transpose(), b, &c + c.transpose())?.into_game("random"))
}

fn config_round_trip() -> anyhow::Result<(bool, String)> {
    let text = r#"
command = "eps-sweep"
game = { a = [[0.4, 0.1], [0.1, 0.3]], b = [[1.0, 0.0], [0.5, -1.0]], c = [[0.4, 0.0], [0.0, 0.2]] }
params = { h = 0.01, beta = -0.3, rho = 0.9, eps = 1e-3 }
init = { x = [0.1, 0.2], y = [0.3, -0.4] }
steps = 500
seed = 3
output_dir = "out/x"
emit_svg = true
[grid]
eps = { start = 1e-4, ratio = 4.0, count = 4 }
h = [0.001, 0.002, 0.004]
mode = "discrete_simulated"
"#;
    let cfg = RunConfig::parse(text)?;
    let again = RunConfig::parse(&cfg.to_toml()?)?;
    Ok((cfg == again, "parse(serialize(parse(text))) == parse(text)".into()))
}

fn split_exact() -> anyhow::Result<(bool, String)> {
    let mut rng = rng_for(21, 0);
    let mut ok = true;
    for n in 1..=4 {
        for _ in 0..10 {
            let game = random_game(&mut rng, n, n + 1)?;
            let j = spectral::gda_jacobian(&game, &JointPoint::origin(n, n + 1))?;
            let (s, a) = spectral::split_symmetric(&j);
            ok &= &s + &a == j && s == s.transpose() && a == -a.transpose();
        }
    }
    Ok((ok, "40 random Jacobians".into()))
}

fn conjugate_closed() -> anyhow::Result<(bool, String)> {
    let mut rng = rng_for(22, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let game = random_game(&mut rng, 3, 2)?;
        let spectrum = spectral::eigenvalues(&spectral::gda_jacobian(&game, &JointPoint::origin(3, 2))?)?;
        for l in &spectrum {
            let d = spectrum.iter().map(|m| (m - l.conj()).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d / (1.0 + l.norm()));
        }
    }
    Ok((worst < 1e-9, format!("worst conjugate mismatch {worst:.1e}")))
}

fn first_step() -> anyhow::Result<(bool, String)> {
    let game = QuadraticGame::scalar(0.4, 1.0, 0.4).into_game("q");
    let p = AdamParams::new(0.01, 0.7, 0.9, 1e-3)?;
    let init = JointPoint::from_slices(&[0.6], &[-0.3])?;
    let next = adam_da_step(&AdamState::new(init.clone()), &game, &p);
    let (gx, gy) = (game.grad_x(&init)[0], game.grad_y(&init)[0]);
    let ex = init.x[0] - p.h * gx / (gx * gx + p.eps).sqrt();
    let ey = init.y[0] + p.h * gy / (gy * gy + p.eps).sqrt();
    let err = (next.point.x[0] - ex).abs().max((next.point.y[0] - ey).abs());
    Ok((err < 1e-15, format!("abs err {err:.1e}")))
}

fn number_round_trip() -> anyhow::Result<(bool, String)> {
    let mut rng = rng_for(23, 0);
    let mut ok = true;
    for _ in 0..1000 {
        let v: f64 = rng.gen_range(-1.0..1.0) * 10f64.powi(rng.gen_range(-300..300));
        ok &= fmt_f64(v).parse::<f64>()? == v;
    }
    ok &= fmt_f64(f64::INFINITY) == "inf" && fmt_f64(f64::NAN) == "NaN";
    Ok((ok, "1000 random magnitudes".into()))
}

fn seeded_inits() -> anyhow::Result<(bool, String)> {
    let a = random_inits(5, 16, (2, 3), -1.0, 1.0)?;
    let b = random_inits(5, 16, (2, 3), -1.0, 1.0)?;
    let c = random_inits(6, 16, (2, 3), -1.0, 1.0)?;
    Ok((a == b && a != c, "same seed equal, different seed differs".into()))
}

fn running_mean_recurrence() -> anyhow::Result<(bool, String)> {
    let mut rng = rng_for(24, 0);
    let norms: Vec<f64> = (0..500).map(|_| rng.gen_range(0.0..5.0)).collect();
    let s = running_mean(&norms);
    let worst = (1..s.len())
        .map(|t| (s[t] - (t as f64 * s[t - 1] + norms[t]) / (t + 1) as f64).abs())
        .fold(0.0, f64::max);
    Ok((worst < 1e-12, format!("worst abs err {worst:.1e}")))
}

fn unit_disk_agrees() -> anyhow::Result<(bool, String)> {
    let mut rng = rng_for(25, 0);
    let mut disagreements = 0;
    let mut tested = 0;
    for _ in 0..2000 {
        let lambda = Complex64::new(rng.gen_range(-2.0..0.5), rng.gen_range(-3.0..3.0));
        let p = AdamParams::new(rng.gen_range(1e-3..0.2), rng.gen_range(-0.9..0.9), 0.5, rng.gen_range(1e-4..1.0))?;
        let q = CharQuadratic::new(lambda, &p);
        let modulus = q.max_root_modulus();
        if (modulus - 1.0).abs() < 1e-9 {
            continue;
        }
        tested += 1;
        if spectral::unit_disk_test(q.a, q.b) != (modulus < 1.0) {
            disagreements += 1;
        }
    }
    Ok((disagreements == 0, format!("{disagreements} disagreements in {tested} cases")))
}

fn euler_order() -> anyhow::Result<(bool, String)> {
    let slope = euler_self_test(&[0.04, 0.02, 0.01, 0.005]).unwrap_or(f64::NAN);
    Ok(((slope - 2.0).abs() < 0.05, format!("slope {slope:.4}")))
}
