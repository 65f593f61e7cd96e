//! The perturbed ℓ1 function `‖v‖₁,ε = Σᵢ √(vᵢ² + ε)` and the gradient-norm
//! identities built on it.
//!
//! `‖·‖₁,ε` is not a norm (it is not homogeneous); nothing here relies on
//! homogeneity. Applied to a single partial derivative `g_j` it reads
//! `√(g_j² + ε)`, which is how the diagonal preconditioners are formed.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::game::{JointPoint, ZeroSumGame};

fn check_eps(eps: f64, allow_zero: bool) -> Result<()> {
    let ok = eps.is_finite() && (eps > 0.0 || (allow_zero && eps == 0.0));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("eps must be positive, got {eps}")))
    }
}

fn check_finite(v: &DVector<f64>) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput("vector has a non-finite entry".into()))
    }
}

/// `Σᵢ √(vᵢ² + ε)`. `eps = 0` is accepted (plain ℓ1) for use as a test oracle.
pub fn perturbed_l1_norm(v: &DVector<f64>, eps: f64) -> Result<f64> {
    check_eps(eps, true)?;
    check_finite(v)?;
    Ok(v.iter().map(|vi| (vi * vi + eps).sqrt()).sum())
}

/// Componentwise `vᵢ / √(vᵢ² + ε)`, the gradient of [`perturbed_l1_norm`].
pub fn perturbed_l1_grad(v: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
    check_eps(eps, false)?;
    check_finite(v)?;
    Ok(v.map(|vi| vi / (vi * vi + eps).sqrt()))
}

/// Diagonal matrix stored as its entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagonal(pub DVector<f64>);

impl Diagonal {
    pub fn entries(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.0)
    }

    /// `D·v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        self.0.component_mul(v)
    }
}

/// Entries `1/√(gⱼ² + ε)` for a gradient block `g`.
pub fn preconditioner(g: &DVector<f64>, eps: f64) -> Diagonal {
    Diagonal(g.map(|gj| 1.0 / (gj * gj + eps).sqrt()))
}

/// μ_ε(x, y) = Diag{1/√((∂f/∂xⱼ)² + ε)}.
pub fn mu_eps(game: &ZeroSumGame, point: &JointPoint, eps: f64) -> Result<Diagonal> {
    check_eps(eps, false)?;
    Ok(preconditioner(&game.grad_x(point), eps))
}

/// ν_ε(x, y) = Diag{1/√((∂f/∂yᵢ)² + ε)}.
pub fn nu_eps(game: &ZeroSumGame, point: &JointPoint, eps: f64) -> Result<Diagonal> {
    check_eps(eps, false)?;
    Ok(preconditioner(&game.grad_y(point), eps))
}

/// Which gradient of a perturbed gradient norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GradNormTerm {
    /// ∇ₓ‖∇ₓf‖₁,ε = ∇²ₓf · μ_ε · ∇ₓf
    XX,
    /// ∇ᵧ‖∇ₓf‖₁,ε = ∇ᵧₓf · μ_ε · ∇ₓf
    YX,
    /// ∇ᵧ‖∇ᵧf‖₁,ε = ∇²ᵧf · ν_ε · ∇ᵧf
    YY,
    /// ∇ₓ‖∇ᵧf‖₁,ε = ∇ₓᵧf · ν_ε · ∇ᵧf
    XY,
}

impl GradNormTerm {
    pub const ALL: [GradNormTerm; 4] = [GradNormTerm::XX, GradNormTerm::YX, GradNormTerm::YY, GradNormTerm::XY];
}

/// Closed-form gradient of a perturbed gradient norm, via the Hessian blocks.
pub fn grad_of_gradnorm(game: &ZeroSumGame, point: &JointPoint, eps: f64, which: GradNormTerm) -> Result<DVector<f64>> {
    check_eps(eps, false)?;
    Ok(match which {
        GradNormTerm::XX => game.hess_xx(point) * perturbed_l1_grad(&game.grad_x(point), eps)?,
        GradNormTerm::YX => game.hess_yx(point) * perturbed_l1_grad(&game.grad_x(point), eps)?,
        GradNormTerm::YY => game.hess_yy(point) * perturbed_l1_grad(&game.grad_y(point), eps)?,
        GradNormTerm::XY => game.hess_xy(point) * perturbed_l1_grad(&game.grad_y(point), eps)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use crate::game::QuadraticGame;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn norm_examples() {
        assert_eq!(perturbed_l1_norm(&v(&[3.0, 4.0]), 0.0).unwrap(), 7.0);
        assert!((perturbed_l1_norm(&v(&[0.0, 0.0, 0.0]), 0.04).unwrap() - 0.6).abs() < 1e-15);
        assert!((perturbed_l1_norm(&v(&[1.0, 2.0]), 1e-3).unwrap() - 3.00075).abs() < 1e-5);
    }

    #[test]
    fn norm_rejects_non_finite() {
        assert!(perturbed_l1_norm(&v(&[f64::INFINITY]), 1.0).is_err());
        assert!(perturbed_l1_norm(&v(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn grad_examples() {
        assert_eq!(perturbed_l1_grad(&v(&[0.0, 0.0]), 1e-3).unwrap(), v(&[0.0, 0.0]));
        let g = perturbed_l1_grad(&v(&[1.0, 1.0]), 3.0).unwrap();
        assert!((g - v(&[0.5, 0.5])).norm() < 1e-15);
        assert!(perturbed_l1_grad(&v(&[1.0]), 0.0).is_err());
    }

    #[test]
    fn mu_examples() {
        let zero = QuadraticGame::scalar(1.0, 0.0, 1.0).into_game("z");
        let origin = JointPoint::origin(1, 1);
        let mu = mu_eps(&zero, &origin, 1e-4).unwrap();
        assert!((mu.0[0] - 100.0).abs() < 1e-12);

        // grad_x = 3 at x = 3 for f = x²/2
        let p = JointPoint::from_slices(&[3.0], &[0.0]).unwrap();
        assert!((mu_eps(&zero, &p, 16.0).unwrap().0[0] - 0.2).abs() < 1e-15);

        // grad_x = (1, 0)
        let q = QuadraticGame::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 1), DMatrix::identity(1, 1))
            .unwrap()
            .into_game("q");
        let p = JointPoint::from_slices(&[1.0, 0.0], &[0.0]).unwrap();
        let mu = mu_eps(&q, &p, 1.0).unwrap();
        assert!((mu.0[0] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(mu.0[1], 1.0);
    }

    #[test]
    fn mu_is_exact_at_stationary_points() {
        let game = QuadraticGame::scalar(0.4, 1.0, 0.4).into_game("q");
        let origin = JointPoint::origin(1, 1);
        for eps in [1e-8, 1e-3, 0.25, 7.0] {
            assert_eq!(mu_eps(&game, &origin, eps).unwrap().0[0], 1.0 / eps.sqrt());
            assert_eq!(nu_eps(&game, &origin, eps).unwrap().0[0], 1.0 / eps.sqrt());
        }
    }

    #[test]
    fn yx_identity_on_quadratic_probe() {
        let game = QuadraticGame::scalar(0.4, 1.0, 0.4).into_game("q");
        let p = JointPoint::from_slices(&[1.0], &[0.0]).unwrap();
        let r = grad_of_gradnorm(&game, &p, 1e-3, GradNormTerm::YX).unwrap();
        assert!((r[0] - 0.4 / (0.16f64 + 0.001).sqrt()).abs() < 1e-12);
        assert!((r[0] - 0.99689).abs() < 1e-5);
    }

    #[test]
    fn identities_vanish_at_stationary_point() {
        let game = QuadraticGame::scalar(0.4, 1.0, 0.4).into_game("q");
        let origin = JointPoint::origin(1, 1);
        for which in GradNormTerm::ALL {
            assert_eq!(grad_of_gradnorm(&game, &origin, 1e-3, which).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn identities_match_finite_differences_on_quadratic() {
        let q = QuadraticGame::new(
            DMatrix::from_row_slice(2, 2, &[1.2, 0.4, 0.4, 0.3]),
            DMatrix::from_row_slice(2, 2, &[0.5, -1.0, 2.0, 0.1]),
            DMatrix::from_row_slice(2, 2, &[0.8, -0.2, -0.2, 0.6]),
        )
        .unwrap();
        let game = q.into_game("q2");
        let p = JointPoint::from_slices(&[0.3, -0.2], &[0.1, 0.5]).unwrap();
        let eps = 1e-2;
        let z = p.to_joint();
        let norm_x = |z: &DVector<f64>| {
            let q = JointPoint::from_joint(z, 2);
            perturbed_l1_norm(&game.grad_x(&q), eps).unwrap()
        };
        let norm_y = |z: &DVector<f64>| {
            let q = JointPoint::from_joint(z, 2);
            perturbed_l1_norm(&game.grad_y(&q), eps).unwrap()
        };
        let gx = fd::fd_gradient(norm_x, &z, 1e-6);
        let gy = fd::fd_gradient(norm_y, &z, 1e-6);
        let cases = [
            (GradNormTerm::XX, gx.rows(0, 2).into_owned()),
            (GradNormTerm::YX, gx.rows(2, 2).into_owned()),
            (GradNormTerm::YY, gy.rows(2, 2).into_owned()),
            (GradNormTerm::XY, gy.rows(0, 2).into_owned()),
        ];
        for (which, fd) in cases {
            let exact = grad_of_gradnorm(&game, &p, eps, which).unwrap();
            assert!((&exact - &fd).norm() <= 1e-5 * exact.norm(), "{which:?}");
        }
    }

    proptest! {
        #[test]
        fn norm_bounds_and_monotone_in_eps(
            xs in proptest::collection::vec(-10.0f64..10.0, 1..6),
            e1 in 1e-8f64..1.0,
            e2 in 1e-8f64..1.0,
        ) {
            let vec = v(&xs);
            let l1 = vec.lp_norm(1);
            let d = xs.len() as f64;
            let n1 = perturbed_l1_norm(&vec, e1).unwrap();
            prop_assert!(n1 >= l1 && n1 >= d * e1.sqrt() * (1.0 - 1e-15));
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(perturbed_l1_norm(&vec, lo).unwrap() <= perturbed_l1_norm(&vec, hi).unwrap());
            prop_assert!((perturbed_l1_norm(&vec, 1e-300).unwrap() - l1).abs() <= 1e-12 * l1.max(1.0));
        }

        #[test]
        fn grad_matches_fd_and_stays_in_open_interval(
            xs in proptest::collection::vec(-3.0f64..3.0, 1..6),
            eps in 1e-3f64..2.0,
        ) {
            let vec = v(&xs);
            let g = perturbed_l1_grad(&vec, eps).unwrap();
            prop_assert!(g.iter().all(|c| c.abs() < 1.0));
            let fd = fd::fd_gradient(|z| perturbed_l1_norm(z, eps).unwrap(), &vec, 1e-6);
            prop_assert!((&g - &fd).norm() <= 1e-6 * g.norm().max(1e-3));
        }
    }
}
