//! Adam descent-ascent (Adam-DA) dynamics in smooth two-player zero-sum games.
//!
//! The crate is organised around the objects that the experiments share:
//!
//! * [`game`] and [`params`]: game evaluators, quadratic games, hyperparameters.
//! * [`perturbed`] and [`fd`]: the perturbed ℓ1 machinery and finite-difference oracles.
//! * [`discrete`]: Adam-DA, plain GDA, Adam in minimization, convergence verdicts.
//! * [`continuous`]: right-hand sides of the continuous-time models and a fixed-step RK4.
//! * [`spectral`]: Jacobians, eigenvalues, step-size thresholds and spectral radii.
//! * [`igr`]: implicit gradient regularization terms and averaged gradient norms.
//! * [`harness`]: the test-function catalog, sweeps and the order-of-accuracy study.
//!
//! Everything runs in `f64` on dense matrices; dimensions are desk scale.

pub mod continuous;
pub mod discrete;
pub mod error;
pub mod fd;
pub mod game;
pub mod harness;
pub mod igr;
pub mod params;
pub mod perturbed;
pub mod report;
pub mod spectral;
pub mod trajectory;

pub use error::{Error, Result};
pub use game::{JointPoint, QuadraticGame, ZeroSumGame};
pub use params::AdamParams;
pub use trajectory::Trajectory;
