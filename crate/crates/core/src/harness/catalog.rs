//! Named test games with default initial points and hyperparameters.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::{JointPoint, QuadraticGame, ZeroSumGame};
use crate::params::AdamParams;

/// Every catalog id, in display order.
pub const IDS: [&str; 9] = ["f1", "f2", "f3", "quad_paper", "quad_cc", "quad_test", "quad_weak", "bilinear", "min_sq"];

pub fn valid_ids() -> Vec<String> {
    IDS.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub game: ZeroSumGame,
    pub init: JointPoint,
    pub params: AdamParams,
    /// Known stationary point used as the distance reference.
    pub equilibrium: Option<JointPoint>,
    /// The objective is meant to be minimised jointly rather than played.
    pub minimization: bool,
}

fn scalar(v: f64) -> DVector<f64> {
    DVector::from_element(1, v)
}

fn mat(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

fn phi(z: f64) -> f64 {
    z * z / 4.0 - z.powi(4) / 2.0 + z.powi(6) / 6.0
}

fn dphi(z: f64) -> f64 {
    z / 2.0 - 2.0 * z.powi(3) + z.powi(5)
}

fn ddphi(z: f64) -> f64 {
    0.5 - 6.0 * z * z + 5.0 * z.powi(4)
}

/// `f1(x, y) = x(y − 0.45) + φ(x) − φ(y)`, `φ(z) = z²/4 − z⁴/2 + z⁶/6`.
fn f1() -> ZeroSumGame {
    ZeroSumGame::builder("f1", 1, 1, |p| {
        let (x, y) = (p.x[0], p.y[0]);
        x * (y - 0.45) + phi(x) - phi(y)
    })
    .gradients(|p| scalar(p.y[0] - 0.45 + dphi(p.x[0])), |p| scalar(p.x[0] - dphi(p.y[0])))
    .hessians(|p| mat(ddphi(p.x[0])), |_| mat(1.0), |p| mat(-ddphi(p.y[0])))
    .build()
    .expect("f1 is well formed")
}

/// `f2(x, y) = xy − (1/10)(y²/2 − y⁴/4)`.
fn f2() -> ZeroSumGame {
    ZeroSumGame::builder("f2", 1, 1, |p| {
        let (x, y) = (p.x[0], p.y[0]);
        x * y - 0.1 * (y * y / 2.0 - y.powi(4) / 4.0)
    })
    .gradients(|p| scalar(p.y[0]), |p| {
        let y = p.y[0];
        scalar(p.x[0] - 0.1 * (y - y.powi(3)))
    })
    .hessians(|_| mat(0.0), |_| mat(1.0), |p| mat(-0.1 * (1.0 - 3.0 * p.y[0] * p.y[0])))
    .build()
    .expect("f2 is well formed")
}

/// `f3(x, y) = x²/10 − y²/10 + sin x cos y`.
fn f3() -> ZeroSumGame {
    ZeroSumGame::builder("f3", 1, 1, |p| {
        let (x, y) = (p.x[0], p.y[0]);
        x * x / 10.0 - y * y / 10.0 + x.sin() * y.cos()
    })
    .gradients(
        |p| scalar(p.x[0] / 5.0 + p.x[0].cos() * p.y[0].cos()),
        |p| scalar(-p.y[0] / 5.0 - p.x[0].sin() * p.y[0].sin()),
    )
    .hessians(
        |p| mat(0.2 - p.x[0].sin() * p.y[0].cos()),
        |p| mat(-p.x[0].cos() * p.y[0].sin()),
        |p| mat(-0.2 - p.x[0].sin() * p.y[0].cos()),
    )
    .build()
    .expect("f3 is well formed")
}

fn params(h: f64, beta: f64, rho: f64, eps: f64) -> AdamParams {
    AdamParams::new(h, beta, rho, eps).expect("catalog parameters are admissible")
}

fn pt(x: f64, y: f64) -> JointPoint {
    JointPoint::raw(scalar(x), scalar(y))
}

pub fn entry(id: &str) -> Result<CatalogEntry> {
    let quad_default = params(0.01, 0.0, 0.5, 1e-3);
    let origin = Some(JointPoint::origin(1, 1));
    let (id, game, params, equilibrium, minimization): (&'static str, _, _, _, _) = match id {
        "f1" => ("f1", f1(), params(0.007, 0.0, 0.5, 1e-6), None, false),
        "f2" => ("f2", f2(), params(0.002, -0.3, 0.9, 1e-3), origin, false),
        "f3" => ("f3", f3(), params(0.005, 0.3, 0.5, 1e-4), None, false),
        // 0.2x² − xy + 0.2y²: trace-free Jacobian at the origin
        "quad_paper" => ("quad_paper", QuadraticGame::scalar(0.4, -1.0, -0.4).into_game("quad_paper"), quad_default, origin, false),
        // 0.2x² − xy − 0.2y²: convex-concave
        "quad_cc" => ("quad_cc", QuadraticGame::scalar(0.4, -1.0, 0.4).into_game("quad_cc"), quad_default, origin, false),
        "quad_test" => ("quad_test", QuadraticGame::scalar(0.4, 1.0, 0.4).into_game("quad_test"), quad_default, origin, false),
        "quad_weak" => ("quad_weak", QuadraticGame::scalar(4.0, 0.1, 4.0).into_game("quad_weak"), quad_default, origin, false),
        "bilinear" => ("bilinear", QuadraticGame::scalar(0.0, 1.0, 0.0).into_game("bilinear"), quad_default, origin, false),
        // x² + y², minimised over both blocks
        "min_sq" => ("min_sq", QuadraticGame::scalar(2.0, 0.0, -2.0).into_game("min_sq"), params(0.05, 0.9, 0.999, 1e-4), origin, true),
        other => {
            return Err(Error::UnknownGame { id: other.to_string(), valid: valid_ids().join(", ") });
        }
    };
    Ok(CatalogEntry { id, game, init: pt(0.6, 0.6), params, equilibrium, minimization })
}

pub fn game(id: &str) -> Result<ZeroSumGame> {
    entry(id).map(|e| e.game)
}
