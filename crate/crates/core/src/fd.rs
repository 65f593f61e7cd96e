//! Central-difference derivative oracles.
//!
//! These are used to verify analytic derivatives and as the fallback for games
//! registered with a value evaluator only.

use nalgebra::{DMatrix, DVector};

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<F>(f: F, point: &DVector<f64>, step: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let mut probe = point.clone();
    DVector::from_fn(point.len(), |i, _| {
        let orig = probe[i];
        probe[i] = orig + step;
        let fp = f(&probe);
        probe[i] = orig - step;
        let fm = f(&probe);
        probe[i] = orig;
        (fp - fm) / (2.0 * step)
    })
}

/// Central-difference Jacobian of a vector field: entry (i, j) is ∂f_i/∂z_j.
pub fn fd_jacobian<F>(f: F, point: &DVector<f64>, step: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let n = point.len();
    let mut probe = point.clone();
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        let orig = probe[j];
        probe[j] = orig + step;
        let fp = f(&probe);
        probe[j] = orig - step;
        let fm = f(&probe);
        probe[j] = orig;
        columns.push((fp - fm) / (2.0 * step));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    DMatrix::from_fn(rows, n, |i, j| columns[j][i])
}

/// Central second differences of a scalar function (full symmetric Hessian).
pub fn fd_hessian<F>(f: F, point: &DVector<f64>, step: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    assert!(step > 0.0, "finite-difference step must be positive");
    let n = point.len();
    let mut probe = point.clone();
    let f0 = f(point);
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = probe[i];
        probe[i] = xi + step;
        let fp = f(&probe);
        probe[i] = xi - step;
        let fm = f(&probe);
        probe[i] = xi;
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (step * step);
        for j in (i + 1)..n {
            let xj = probe[j];
            let mut corner = |si: f64, sj: f64| {
                probe[i] = xi + si * step;
                probe[j] = xj + sj * step;
                let v = f(&probe);
                probe[i] = xi;
                probe[j] = xj;
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * step * step);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_derivative() {
        let g = fd_gradient(|v| v[0] * v[0], &DVector::from_vec(vec![3.0]), 1e-5);
        assert!((g[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn constant_has_zero_gradient() {
        let g = fd_gradient(|_| 4.2, &DVector::from_vec(vec![1.0, -2.0]), 1e-4);
        assert_eq!(g, DVector::zeros(2));
    }

    #[test]
    fn jacobian_of_linear_map() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let jac = fd_jacobian(|v| &m * v, &DVector::from_vec(vec![0.3, -0.2, 0.9]), 1e-6);
        assert!((jac - &m).norm() < 1e-8);
    }

    #[test]
    fn hessian_of_cubic() {
        // f = x^2 y + y^3, H = [[2y, 2x], [2x, 6y]]
        let p = DVector::from_vec(vec![0.7, -0.4]);
        let h = fd_hessian(|v| v[0] * v[0] * v[1] + v[1].powi(3), &p, 1e-4);
        let exact = DMatrix::from_row_slice(2, 2, &[-0.8, 1.4, 1.4, -2.4]);
        assert!((h - exact).norm() < 1e-6);
    }
}
