//! Experiment orchestration: catalog, model comparisons, order-of-accuracy
//! study and parameter sweeps.

pub mod catalog;
pub mod compare;
pub mod error_order;
pub mod svg;
pub mod sweep;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{JointPoint, ZeroSumGame};

/// Seeded generator for stream `stream` (ChaCha8, 64-bit seed).
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `count` points drawn uniformly from the box `[low, high]^(d1+d2)`.
/// Reproducible on every platform: ChaCha8 seeded with `seed`, stream 0.
pub fn random_inits(seed: u64, count: usize, dims: (usize, usize), low: f64, high: f64) -> Result<Vec<JointPoint>> {
    if count == 0 {
        return Err(Error::InvalidInput("random_inits needs count >= 1".into()));
    }
    if !(low.is_finite() && high.is_finite()) || low > high {
        return Err(Error::InvalidInput(format!("degenerate sampling box [{low}, {high}]")));
    }
    let (d1, d2) = dims;
    if d1 == 0 || d2 == 0 {
        return Err(Error::Dimension("random_inits needs positive block dimensions".into()));
    }
    let mut rng = rng_for(seed, 0);
    let mut draw = |n: usize| DVector::from_fn(n, |_, _| rng.gen_range(low..=high));
    Ok((0..count).map(|_| JointPoint::raw(draw(d1), draw(d2))).collect())
}

/// Newton iteration on `(∇ₓf, ∇ᵧf) = 0` from `start`.
pub fn find_stationary_point(game: &ZeroSumGame, start: &JointPoint, tol: f64, max_iter: usize) -> Result<JointPoint> {
    game.check_point(start)?;
    let (d1, d2) = game.dims();
    let mut p = start.clone();
    for _ in 0..max_iter {
        let (gx, gy) = (game.grad_x(&p), game.grad_y(&p));
        let g = DVector::from_iterator(d1 + d2, gx.iter().chain(gy.iter()).copied());
        if g.amax() <= tol {
            return Ok(p);
        }
        let mut hess = nalgebra::DMatrix::zeros(d1 + d2, d1 + d2);
        let hxy = game.hess_xy(&p);
        hess.view_mut((0, 0), (d1, d1)).copy_from(&game.hess_xx(&p));
        hess.view_mut((0, d1), (d1, d2)).copy_from(&hxy);
        hess.view_mut((d1, 0), (d2, d1)).copy_from(&hxy.transpose());
        hess.view_mut((d1, d1), (d2, d2)).copy_from(&game.hess_yy(&p));
        let step = hess
            .lu()
            .solve(&g)
            .ok_or_else(|| Error::NotApplicable("singular Hessian during stationary-point search".into()))?;
        p = JointPoint::from_joint(&(p.to_joint() - step), d1);
        if !p.is_finite() {
            break;
        }
    }
    Err(Error::NotApplicable(format!("no stationary point found from {:?} within {max_iter} Newton steps", start.to_joint().as_slice())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_f2_origin_and_f1_stationary_point() {
        let f2 = catalog::game("f2").unwrap();
        let p = find_stationary_point(&f2, &JointPoint::from_slices(&[0.1], &[0.1]).unwrap(), 1e-12, 50).unwrap();
        assert!(p.norm_inf() < 1e-10);
        let f1 = catalog::game("f1").unwrap();
        let p = find_stationary_point(&f1, &JointPoint::from_slices(&[0.0], &[0.4]).unwrap(), 1e-12, 50).unwrap();
        assert!(f1.grad_x(&p).amax() < 1e-12 && f1.grad_y(&p).amax() < 1e-12);
    }

    #[test]
    fn point_box_gives_that_point() {
        assert_eq!(random_inits(1, 1, (1, 1), 0.0, 0.0).unwrap(), vec![JointPoint::origin(1, 1)]);
    }

    #[test]
    fn same_seed_same_points() {
        let a = random_inits(42, 10, (2, 1), -1.0, 1.0).unwrap();
        assert_eq!(a, random_inits(42, 10, (2, 1), -1.0, 1.0).unwrap());
        assert_ne!(a, random_inits(43, 10, (2, 1), -1.0, 1.0).unwrap());
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(random_inits(0, 0, (1, 1), 0.0, 1.0).is_err());
        assert!(random_inits(0, 3, (1, 1), 1.0, 0.0).is_err());
    }

    #[test]
    fn empirical_mean_within_three_sigma() {
        let pts = random_inits(7, 30, (1, 1), -1.0, 1.0).unwrap();
        let sigma = 1.0 / (3.0f64 * 30.0).sqrt();
        let mx = pts.iter().map(|p| p.x[0]).sum::<f64>() / 30.0;
        let my = pts.iter().map(|p| p.y[0]).sum::<f64>() / 30.0;
        assert!(mx.abs() < 3.0 * sigma && my.abs() < 3.0 * sigma);
        assert!(pts.iter().all(|p| p.norm_inf() <= 1.0));
    }
}
