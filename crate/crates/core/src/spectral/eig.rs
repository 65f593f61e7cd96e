//! Dense nonsymmetric eigenvalues with a mandatory residual check.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_DIM: usize = 200;
const SCHUR_MAX_ITER: usize = 10_000;
const RESIDUAL_TOL: f64 = 1e-8;

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("eigenvalues need a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.nrows() > MAX_DIM {
        return Err(Error::Dimension(format!("matrix dimension {} exceeds {MAX_DIM}", m.nrows())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn closed_form(m: &DMatrix<f64>) -> Vec<Complex64> {
    match m.nrows() {
        0 => vec![],
        1 => vec![Complex64::new(m[(0, 0)], 0.0)],
        _ => {
            let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let mid = (a + d) / 2.0;
            let half = (a - d) / 2.0;
            let disc = half * half + b * c;
            if disc >= 0.0 {
                // avoid cancellation in the smaller-magnitude root
                let s = disc.sqrt();
                let big = if mid >= 0.0 { mid + s } else { mid - s };
                let det = a * d - b * c;
                let small = if big != 0.0 { det / big } else { mid - s.copysign(mid) };
                vec![Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
            } else {
                let s = (-disc).sqrt();
                vec![Complex64::new(mid, s), Complex64::new(mid, -s)]
            }
        }
    }
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Smallest singular value of `M − λI` together with the associated unit right singular vector.
fn shifted_min_singular(m: &DMatrix<f64>, lambda: Complex64) -> Result<(f64, DVector<Complex64>)> {
    let n = m.nrows();
    let shifted = to_complex(m) - DMatrix::<Complex64>::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Eigen("SVD did not return right singular vectors".into()))?;
    let (idx, sigma) = svd
        .singular_values
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Eigen("empty matrix".into()))?;
    Ok((sigma, v_t.row(idx).adjoint()))
}

fn residual_tolerance(m: &DMatrix<f64>) -> f64 {
    RESIDUAL_TOL * m.norm().max(f64::MIN_POSITIVE)
}

fn sort_spectrum(values: &mut [Complex64]) {
    values.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigenvalues of a real square matrix, sorted by real then imaginary part.
///
/// Closed forms are used for dimension ≤ 2 and a real Schur decomposition above.
/// Each eigenvalue must satisfy `σ_min(M − λI) ≤ 1e−8·‖M‖`, otherwise an error is returned.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    check_square(m)?;
    let mut values = if m.nrows() <= 2 {
        closed_form(m)
    } else {
        let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER)
            .ok_or_else(|| Error::Eigen(format!("Schur iteration did not converge within {SCHUR_MAX_ITER} sweeps")))?;
        schur.complex_eigenvalues().iter().copied().collect()
    };
    let tol = residual_tolerance(m);
    for &lambda in &values {
        let (sigma, _) = shifted_min_singular(m, lambda)?;
        if !(sigma <= tol) {
            return Err(Error::Eigen(format!("eigenvalue {lambda} has residual {sigma:e} above {tol:e}")));
        }
    }
    sort_spectrum(&mut values);
    Ok(values)
}

/// Eigenpairs with unit right eigenvectors.
pub fn eigenpairs(m: &DMatrix<f64>) -> Result<Vec<(Complex64, DVector<Complex64>)>> {
    eigenvalues(m)?
        .into_iter()
        .map(|lambda| shifted_min_singular(m, lambda).map(|(_, v)| (lambda, v)))
        .collect()
}

/// Groups numerically equal eigenvalues. Each group is represented by its mean
/// and its multiplicity.
pub fn cluster(values: &[Complex64], rel_tol: f64) -> Vec<(Complex64, usize)> {
    let mut groups: Vec<(Complex64, usize)> = Vec::new();
    for &v in values {
        match groups.iter_mut().find(|(c, _)| (v - *c).norm() <= rel_tol * (1.0 + v.norm())) {
            Some((c, k)) => {
                *c = (*c * *k as f64 + v) / (*k + 1) as f64;
                *k += 1;
            }
            None => groups.push((v, 1)),
        }
    }
    groups
}

/// Orthonormal basis (as columns) of the numerical null space of `M − λI`,
/// taking singular values up to `tol`, and at least one vector.
pub fn eigenspace(m: &DMatrix<f64>, lambda: Complex64, tol: f64) -> Result<DMatrix<Complex64>> {
    let n = m.nrows();
    let shifted = to_complex(m) - DMatrix::<Complex64>::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Eigen("SVD did not return right singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let keep: Vec<usize> = order
        .iter()
        .enumerate()
        .take_while(|(rank, &i)| *rank == 0 || svd.singular_values[i] <= tol)
        .map(|(_, &i)| i)
        .collect();
    let cols: Vec<DVector<Complex64>> = keep.iter().map(|&i| v_t.row(i).adjoint()).collect();
    Ok(DMatrix::from_columns(&cols))
}
