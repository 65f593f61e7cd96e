//! Zero-sum games `min_x max_y f(x, y)` as bundles of evaluators.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::fd;

/// Joint strategy `(x, y)` with `x ∈ R^{d1}` and `y ∈ R^{d2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPoint {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
}

impl JointPoint {
    pub fn new(x: DVector<f64>, y: DVector<f64>) -> Result<Self> {
        if x.is_empty() || y.is_empty() {
            return Err(Error::InvalidInput("both players need at least one coordinate".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("joint point has a non-finite entry".into()));
        }
        Ok(JointPoint { x, y })
    }

    pub fn from_slices(x: &[f64], y: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(x), DVector::from_column_slice(y))
    }

    /// Unchecked constructor for internal use where finiteness is tracked separately.
    pub(crate) fn raw(x: DVector<f64>, y: DVector<f64>) -> Self {
        JointPoint { x, y }
    }

    pub fn origin(d1: usize, d2: usize) -> Self {
        JointPoint { x: DVector::zeros(d1), y: DVector::zeros(d2) }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.x.len(), self.y.len())
    }

    /// Stacked vector `[x; y]`.
    pub fn to_joint(&self) -> DVector<f64> {
        let (d1, d2) = self.dims();
        DVector::from_fn(d1 + d2, |i, _| if i < d1 { self.x[i] } else { self.y[i - d1] })
    }

    pub fn from_joint(z: &DVector<f64>, d1: usize) -> Self {
        let d2 = z.len() - d1;
        JointPoint {
            x: z.rows(0, d1).into_owned(),
            y: z.rows(d1, d2).into_owned(),
        }
    }

    pub fn distance(&self, other: &JointPoint) -> f64 {
        ((&self.x - &other.x).norm_squared() + (&self.y - &other.y).norm_squared()).sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.x.iter().chain(self.y.iter()).fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }

    pub fn scaled(&self, s: f64) -> JointPoint {
        JointPoint { x: &self.x * s, y: &self.y * s }
    }
}

type ScalarFn = Arc<dyn Fn(&JointPoint) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(&JointPoint) -> DVector<f64> + Send + Sync>;
type MatrixFn = Arc<dyn Fn(&JointPoint) -> DMatrix<f64> + Send + Sync>;

/// Evaluator bundle for a smooth objective `f(x, y)`.
///
/// Blocks follow the convention `hess_xy = ∂²f/∂x∂y` (d1×d2) and
/// `hess_yx = hess_xyᵀ` (d2×d1). Immutable after construction and cheap to clone.
#[derive(Clone)]
pub struct ZeroSumGame {
    name: String,
    d1: usize,
    d2: usize,
    value: ScalarFn,
    grad_x: VectorFn,
    grad_y: VectorFn,
    hess_xx: MatrixFn,
    hess_xy: MatrixFn,
    hess_yy: MatrixFn,
    analytic: bool,
}

impl fmt::Debug for ZeroSumGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZeroSumGame")
            .field("name", &self.name)
            .field("d1", &self.d1)
            .field("d2", &self.d2)
            .field("analytic", &self.analytic)
            .finish()
    }
}

/// Relative step scale used by the finite-difference fallbacks.
fn scaled_step(base: f64, p: &JointPoint) -> f64 {
    base * (1.0 + p.norm_inf())
}

impl ZeroSumGame {
    pub fn builder<F>(name: impl Into<String>, d1: usize, d2: usize, value: F) -> GameBuilder
    where
        F: Fn(&JointPoint) -> f64 + Send + Sync + 'static,
    {
        GameBuilder {
            name: name.into(),
            d1,
            d2,
            value: Arc::new(value),
            grads: None,
            hessians: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.d1, self.d2)
    }

    /// True when gradients and Hessians are closed-form.
    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    pub fn value(&self, p: &JointPoint) -> f64 {
        (self.value)(p)
    }

    pub fn grad_x(&self, p: &JointPoint) -> DVector<f64> {
        (self.grad_x)(p)
    }

    pub fn grad_y(&self, p: &JointPoint) -> DVector<f64> {
        (self.grad_y)(p)
    }

    pub fn hess_xx(&self, p: &JointPoint) -> DMatrix<f64> {
        (self.hess_xx)(p)
    }

    pub fn hess_xy(&self, p: &JointPoint) -> DMatrix<f64> {
        (self.hess_xy)(p)
    }

    pub fn hess_yx(&self, p: &JointPoint) -> DMatrix<f64> {
        (self.hess_xy)(p).transpose()
    }

    pub fn hess_yy(&self, p: &JointPoint) -> DMatrix<f64> {
        (self.hess_yy)(p)
    }

    /// `‖∇ₓf‖₁ + ‖∇ᵧf‖₁` with the plain ℓ1 norm.
    pub fn grad_l1_sum(&self, p: &JointPoint) -> f64 {
        self.grad_x(p).lp_norm(1) + self.grad_y(p).lp_norm(1)
    }

    pub fn check_point(&self, p: &JointPoint) -> Result<()> {
        if p.dims() != (self.d1, self.d2) {
            return Err(Error::Dimension(format!(
                "game `{}` expects ({}, {}), got {:?}",
                self.name,
                self.d1,
                self.d2,
                p.dims()
            )));
        }
        Ok(())
    }

    /// Verifies the smooth-game contract at `probes` random points of the box
    /// `[-radius, radius]^{d1+d2}`: symmetric diagonal Hessian blocks and
    /// gradients that agree with central differences of the value.
    pub fn check_contract<R: Rng>(&self, rng: &mut R, probes: usize, radius: f64) -> Result<()> {
        for _ in 0..probes {
            let x = DVector::from_fn(self.d1, |_, _| rng.gen_range(-radius..=radius));
            let y = DVector::from_fn(self.d2, |_, _| rng.gen_range(-radius..=radius));
            let p = JointPoint::raw(x, y);
            for (label, h) in [("hess_xx", self.hess_xx(&p)), ("hess_yy", self.hess_yy(&p))] {
                let asym = (&h - h.transpose()).norm();
                if asym > 1e-8 * h.norm().max(1.0) {
                    return Err(Error::InvalidInput(format!("{label} not symmetric ({asym:e})")));
                }
            }
            let d1 = self.d1;
            let z = p.to_joint();
            let step = scaled_step(1e-6, &p);
            let fd = fd::fd_gradient(|v| self.value(&JointPoint::from_joint(v, d1)), &z, step);
            let analytic = JointPoint::raw(self.grad_x(&p), self.grad_y(&p)).to_joint();
            let err = (&fd - &analytic).norm();
            if err > 1e-5 * analytic.norm().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "gradient of `{}` disagrees with finite differences (err {err:e})",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Builder for [`ZeroSumGame`]; missing derivatives fall back to central differences.
pub struct GameBuilder {
    name: String,
    d1: usize,
    d2: usize,
    value: ScalarFn,
    grads: Option<(VectorFn, VectorFn)>,
    hessians: Option<(MatrixFn, MatrixFn, MatrixFn)>,
}

impl GameBuilder {
    pub fn gradients<GX, GY>(mut self, grad_x: GX, grad_y: GY) -> Self
    where
        GX: Fn(&JointPoint) -> DVector<f64> + Send + Sync + 'static,
        GY: Fn(&JointPoint) -> DVector<f64> + Send + Sync + 'static,
    {
        self.grads = Some((Arc::new(grad_x), Arc::new(grad_y)));
        self
    }

    /// Closed-form Hessian blocks `∇²ₓf`, `∇ₓᵧf` (d1×d2) and `∇²ᵧf`.
    pub fn hessians<HXX, HXY, HYY>(mut self, hess_xx: HXX, hess_xy: HXY, hess_yy: HYY) -> Self
    where
        HXX: Fn(&JointPoint) -> DMatrix<f64> + Send + Sync + 'static,
        HXY: Fn(&JointPoint) -> DMatrix<f64> + Send + Sync + 'static,
        HYY: Fn(&JointPoint) -> DMatrix<f64> + Send + Sync + 'static,
    {
        self.hessians = Some((Arc::new(hess_xx), Arc::new(hess_xy), Arc::new(hess_yy)));
        self
    }

    pub fn build(self) -> Result<ZeroSumGame> {
        let GameBuilder { name, d1, d2, value, grads, hessians } = self;
        if d1 == 0 || d2 == 0 {
            return Err(Error::InvalidInput("game dimensions must be at least 1".into()));
        }
        let analytic = grads.is_some() && hessians.is_some();
        let grads_given = grads.is_some();

        let (grad_x, grad_y): (VectorFn, VectorFn) = match grads {
            Some(g) => g,
            None => {
                let vx = Arc::clone(&value);
                let vy = Arc::clone(&value);
                (
                    Arc::new(move |p: &JointPoint| fd_joint_gradient(&vx, p).rows(0, d1).into_owned()),
                    Arc::new(move |p: &JointPoint| fd_joint_gradient(&vy, p).rows(d1, d2).into_owned()),
                )
            }
        };

        let (hess_xx, hess_xy, hess_yy): (MatrixFn, MatrixFn, MatrixFn) = match hessians {
            Some(h) => h,
            None => {
                let full: Arc<dyn Fn(&JointPoint) -> DMatrix<f64> + Send + Sync> = if grads_given {
                    let (gx, gy) = (Arc::clone(&grad_x), Arc::clone(&grad_y));
                    Arc::new(move |p: &JointPoint| {
                        let step = scaled_step(1e-4, p);
                        let jac = fd::fd_jacobian(
                            |z| {
                                let q = JointPoint::from_joint(z, d1);
                                JointPoint::raw(gx(&q), gy(&q)).to_joint()
                            },
                            &p.to_joint(),
                            step,
                        );
                        (&jac + jac.transpose()) * 0.5
                    })
                } else {
                    let v = Arc::clone(&value);
                    Arc::new(move |p: &JointPoint| {
                        let step = scaled_step(1e-4, p);
                        fd::fd_hessian(|z| v(&JointPoint::from_joint(z, d1)), &p.to_joint(), step)
                    })
                };
                let (f1, f2, f3) = (Arc::clone(&full), Arc::clone(&full), full);
                (
                    Arc::new(move |p: &JointPoint| f1(p).view((0, 0), (d1, d1)).into_owned()),
                    Arc::new(move |p: &JointPoint| f2(p).view((0, d1), (d1, d2)).into_owned()),
                    Arc::new(move |p: &JointPoint| f3(p).view((d1, d1), (d2, d2)).into_owned()),
                )
            }
        };

        Ok(ZeroSumGame {
            name,
            d1,
            d2,
            value,
            grad_x,
            grad_y,
            hess_xx,
            hess_xy,
            hess_yy,
            analytic,
        })
    }
}

fn fd_joint_gradient(value: &ScalarFn, p: &JointPoint) -> DVector<f64> {
    let d1 = p.x.len();
    let step = scaled_step(1e-6, p);
    fd::fd_gradient(|z| value(&JointPoint::from_joint(z, d1)), &p.to_joint(), step)
}

/// `f(x, y) = ½xᵀAx + xᵀBy − ½yᵀCy` with constant Hessian blocks
/// `∇²ₓf = A`, `∇ₓᵧf = B`, `∇²ᵧf = −C`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGame {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
}

impl QuadraticGame {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let d1 = a.nrows();
        let d2 = c.nrows();
        if d1 == 0 || d2 == 0 || !a.is_square() || !c.is_square() || b.shape() != (d1, d2) {
            return Err(Error::Dimension(format!(
                "quadratic game needs A d1×d1, B d1×d2, C d2×d2; got {:?}, {:?}, {:?}",
                a.shape(),
                b.shape(),
                c.shape()
            )));
        }
        for (label, m) in [("A", &a), ("C", &c)] {
            if (m - m.transpose()).norm() > 1e-12 * m.norm().max(1.0) {
                return Err(Error::InvalidInput(format!("{label} must be symmetric")));
            }
        }
        if a.iter().chain(b.iter()).chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("quadratic game has non-finite entries".into()));
        }
        Ok(QuadraticGame { a, b, c })
    }

    /// Scalar game `½a x² + b xy − ½c y²`.
    pub fn scalar(a: f64, b: f64, c: f64) -> Self {
        QuadraticGame {
            a: DMatrix::from_element(1, 1, a),
            b: DMatrix::from_element(1, 1, b),
            c: DMatrix::from_element(1, 1, c),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.a.nrows(), self.c.nrows())
    }

    pub fn into_game(self, name: impl Into<String>) -> ZeroSumGame {
        let (d1, d2) = self.dims();
        let q = Arc::new(self);
        let (qv, qx, qy) = (Arc::clone(&q), Arc::clone(&q), Arc::clone(&q));
        let (ha, hb, hc) = (q.a.clone(), q.b.clone(), -q.c.clone());
        ZeroSumGame::builder(name, d1, d2, move |p| {
            0.5 * p.x.dot(&(&qv.a * &p.x)) + p.x.dot(&(&qv.b * &p.y)) - 0.5 * p.y.dot(&(&qv.c * &p.y))
        })
        .gradients(
            move |p| &qx.a * &p.x + &qx.b * &p.y,
            move |p| qy.b.tr_mul(&p.x) - &qy.c * &p.y,
        )
        .hessians(move |_| ha.clone(), move |_| hb.clone(), move |_| hc.clone())
        .build()
        .expect("quadratic game dimensions validated at construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_quadratic() -> QuadraticGame {
        QuadraticGame::new(
            DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]),
            DMatrix::from_row_slice(2, 1, &[1.0, -0.5]),
            DMatrix::from_row_slice(1, 1, &[0.7]),
        )
        .unwrap()
    }

    #[test]
    fn joint_point_rejects_empty_and_nan() {
        assert!(JointPoint::from_slices(&[], &[1.0]).is_err());
        assert!(JointPoint::from_slices(&[f64::NAN], &[1.0]).is_err());
        assert!(JointPoint::from_slices(&[1.0], &[2.0]).is_ok());
    }

    #[test]
    fn joint_roundtrip() {
        let p = JointPoint::from_slices(&[1.0, 2.0], &[3.0]).unwrap();
        assert_eq!(JointPoint::from_joint(&p.to_joint(), 2), p);
    }

    #[test]
    fn quadratic_closed_forms() {
        let q = sample_quadratic();
        let game = q.clone().into_game("q");
        let p = JointPoint::from_slices(&[0.4, -1.1], &[0.9]).unwrap();
        assert_eq!(game.grad_x(&p), &q.a * &p.x + &q.b * &p.y);
        assert_eq!(game.grad_y(&p), q.b.transpose() * &p.x - &q.c * &p.y);
        let origin = JointPoint::origin(2, 1);
        assert_eq!(game.grad_x(&origin), DVector::zeros(2));
        assert_eq!(game.grad_y(&origin), DVector::zeros(1));
        assert_eq!(game.hess_xx(&p), game.hess_xx(&origin));
        assert_eq!(game.hess_yy(&p), -&q.c);
        assert_eq!(game.hess_yx(&p), q.b.transpose());
        assert!(game.is_analytic());
    }

    #[test]
    fn quadratic_value_gradient_matches_fd() {
        let game = sample_quadratic().into_game("q");
        let p = JointPoint::from_slices(&[0.3, 0.8], &[-0.6]).unwrap();
        let fd = fd::fd_gradient(|z| game.value(&JointPoint::from_joint(z, 2)), &p.to_joint(), 1e-5);
        let exact = JointPoint::raw(game.grad_x(&p), game.grad_y(&p)).to_joint();
        assert!((fd - &exact).norm() / exact.norm() < 1e-7);
    }

    #[test]
    fn quadratic_rejects_asymmetric_a() {
        let res = QuadraticGame::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]),
            DMatrix::zeros(2, 1),
            DMatrix::identity(1, 1),
        );
        assert!(res.is_err());
    }

    #[test]
    fn value_only_game_uses_finite_differences() {
        let game = ZeroSumGame::builder("fd", 1, 1, |p| p.x[0] * p.y[0] + p.x[0].powi(3) / 3.0)
            .build()
            .unwrap();
        assert!(!game.is_analytic());
        let p = JointPoint::from_slices(&[0.5], &[-0.2]).unwrap();
        assert!((game.grad_x(&p)[0] - (-0.2 + 0.25)).abs() < 1e-8);
        assert!((game.grad_y(&p)[0] - 0.5).abs() < 1e-8);
        assert!((game.hess_xx(&p)[(0, 0)] - 1.0).abs() < 1e-5);
        assert!((game.hess_xy(&p)[(0, 0)] - 1.0).abs() < 1e-5);
        assert!(game.hess_yy(&p)[(0, 0)].abs() < 1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        game.check_contract(&mut rng, 20, 1.0).unwrap();
    }

    #[test]
    fn gradient_only_game_symmetrises_hessian() {
        let game = ZeroSumGame::builder("g", 2, 1, |p| p.x[0] * p.x[1] * p.y[0])
            .gradients(
                |p| DVector::from_vec(vec![p.x[1] * p.y[0], p.x[0] * p.y[0]]),
                |p| DVector::from_vec(vec![p.x[0] * p.x[1]]),
            )
            .build()
            .unwrap();
        let p = JointPoint::from_slices(&[0.3, -0.7], &[1.2]).unwrap();
        let hxx = game.hess_xx(&p);
        assert_eq!(hxx, hxx.transpose());
        assert!((hxx[(0, 1)] - 1.2).abs() < 1e-7);
        assert_eq!(game.hess_yx(&p), game.hess_xy(&p).transpose());
    }

    #[test]
    fn contract_detects_wrong_gradient() {
        let game = ZeroSumGame::builder("bad", 1, 1, |p| p.x[0] * p.y[0])
            .gradients(|p| p.y.clone() * 2.0, |p| p.x.clone())
            .hessians(
                |_| DMatrix::zeros(1, 1),
                |_| DMatrix::identity(1, 1),
                |_| DMatrix::zeros(1, 1),
            )
            .build()
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(game.check_contract(&mut rng, 5, 1.0).is_err());
    }
}
