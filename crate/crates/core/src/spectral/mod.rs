//! Eigenstructure of the GDA Jacobian, step-size thresholds for Adam-DA and
//! spectral radii of the linearised discrete map.

pub mod eig;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::game::{JointPoint, ZeroSumGame};
use crate::params::AdamParams;

pub use eig::{eigenpairs, eigenvalues};

/// Default tolerance of the rotational test and of the generic condition.
pub const DEFAULT_TOL: f64 = 1e-9;

/// `[[−∇²ₓf, −∇ₓᵧf], [∇ᵧₓf, ∇²ᵧf]]`, the Jacobian of the GDA flow.
pub fn gda_jacobian(game: &ZeroSumGame, point: &JointPoint) -> Result<DMatrix<f64>> {
    let (d1, d2) = game.dims();
    let hxx = game.hess_xx(point);
    let hxy = game.hess_xy(point);
    let hyy = game.hess_yy(point);
    if hxx.shape() != (d1, d1) || hxy.shape() != (d1, d2) || hyy.shape() != (d2, d2) {
        return Err(Error::Dimension(format!(
            "Hessian blocks {:?}, {:?}, {:?} do not match dims ({d1}, {d2})",
            hxx.shape(),
            hxy.shape(),
            hyy.shape()
        )));
    }
    let n = d1 + d2;
    let mut j = DMatrix::zeros(n, n);
    j.view_mut((0, 0), (d1, d1)).copy_from(&(-hxx));
    j.view_mut((0, d1), (d1, d2)).copy_from(&(-&hxy));
    j.view_mut((d1, 0), (d2, d1)).copy_from(&hxy.transpose());
    j.view_mut((d1, d1), (d2, d2)).copy_from(&hyy);
    Ok(j)
}

/// Symmetric and antisymmetric parts `(S, A)` of `J`.
pub fn split_symmetric(j: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let jt = j.transpose();
    let s = (j + &jt) * 0.5;
    // A = J − S keeps S + A = J exact in floating point
    let a = j - &s;
    (s, a)
}

/// `|Im λ| − |Re λ| > tol·(1 + |λ|)`.
pub fn is_rotational(lambda: Complex64, tol: f64) -> bool {
    lambda.im.abs() - lambda.re.abs() > tol * (1.0 + lambda.norm())
}

pub fn rotational_subset(spectrum: &[Complex64]) -> Vec<Complex64> {
    spectrum.iter().copied().filter(|l| is_rotational(*l, DEFAULT_TOL)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionCheck {
    /// Some eigenvalue of J has a dominant imaginary part.
    pub rotational_exists: bool,
    /// No eigenvector of A lies in the kernel of S.
    pub generic_condition: bool,
    pub rotational: Vec<Complex64>,
}

/// Checks the rotational-eigenvalue condition on `J` and that
/// `EigVec(A) ∩ Ker(S) = {0}`. The second test uses, per eigenspace of `A`
/// with orthonormal basis `V`, `σ_min(S·V) > tol`.
pub fn check_assumption(j: &DMatrix<f64>, tol: f64) -> Result<AssumptionCheck> {
    if !(tol > 0.0) {
        return Err(Error::Parameter { field: "tol", value: tol, interval: "(0, inf)" });
    }
    let spectrum = eigenvalues(j)?;
    let rotational: Vec<Complex64> = spectrum.iter().copied().filter(|l| is_rotational(*l, tol)).collect();
    let (s, a) = split_symmetric(j);
    let s_c = s.map(|v| Complex64::new(v, 0.0));
    let space_tol = 1e-6 * a.norm().max(1.0);
    let mut generic = true;
    for (lambda, _) in eig::cluster(&eigenvalues(&a)?, 1e-6) {
        let basis = eig::eigenspace(&a, lambda, space_tol)?;
        let sv = &s_c * &basis;
        let sigma_min = sv.singular_values().iter().copied().fold(f64::INFINITY, f64::min);
        if !(sigma_min > tol) {
            generic = false;
            break;
        }
    }
    Ok(AssumptionCheck { rotational_exists: !rotational.is_empty(), generic_condition: generic, rotational })
}

/// `J_Adam = (1/√ε)(I − γJ)J`.
pub fn adam_jacobian(j: &DMatrix<f64>, params: &AdamParams) -> DMatrix<f64> {
    let n = j.nrows();
    (DMatrix::identity(n, n) - j * params.gamma()) * j / params.eps.sqrt()
}

/// `λ ↦ (λ − γλ²)/√ε`.
pub fn adam_eigen_map(lambda: Complex64, params: &AdamParams) -> Complex64 {
    (lambda - lambda * lambda * params.gamma()) / params.eps.sqrt()
}

/// Spectrum of the Adam Jacobian computed from the matrix.
pub fn adam_spectrum(j: &DMatrix<f64>, params: &AdamParams) -> Result<Vec<Complex64>> {
    eigenvalues(&adam_jacobian(j, params))
}

fn has_zero_real_part(lambda: Complex64) -> bool {
    lambda.re.abs() <= 1e-14 * lambda.norm()
}

/// Per-eigenvalue continuous bound; `None` for non-rotational `λ`.
pub fn continuous_bound(lambda: Complex64, beta: f64, eps: f64) -> Option<f64> {
    if !is_rotational(lambda, DEFAULT_TOL) {
        return None;
    }
    if has_zero_real_part(lambda) {
        return Some(0.0);
    }
    let (re, im) = (lambda.re, lambda.im);
    Some(2.0 * eps.sqrt() * (1.0 - beta) * re.abs() / ((1.0 + beta) * (im * im - re * re)))
}

/// Per-eigenvalue discrete bound; `None` when the denominator is not positive.
pub fn discrete_bound(lambda: Complex64, beta: f64, eps: f64) -> Option<f64> {
    if has_zero_real_part(lambda) {
        return Some(0.0);
    }
    let (re, im) = (lambda.re, lambda.im);
    let den = (1.0 + beta * beta) * lambda.norm_sqr() + 2.0 * beta * (im * im - re * re);
    if den <= 0.0 {
        return None;
    }
    Some(2.0 * eps.sqrt() * (1.0 - beta * beta) * re.abs() / den)
}

fn min_bound<F: Fn(Complex64) -> Option<f64>>(spectrum: &[Complex64], f: F) -> f64 {
    spectrum.iter().filter_map(|l| f(*l)).fold(f64::INFINITY, f64::min)
}

/// Largest admissible continuous-time step size; `+∞` when no eigenvalue is rotational.
pub fn continuous_h_threshold(spectrum: &[Complex64], beta: f64, eps: f64) -> f64 {
    min_bound(spectrum, |l| continuous_bound(l, beta, eps))
}

/// Largest admissible step size for the discrete algorithm, minimised over the whole spectrum.
pub fn discrete_h_threshold(spectrum: &[Complex64], beta: f64, eps: f64) -> f64 {
    min_bound(spectrum, |l| discrete_bound(l, beta, eps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenBound {
    pub lambda: Complex64,
    pub continuous: Option<f64>,
    pub discrete: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub h_star_continuous: f64,
    pub h_star_discrete: f64,
    /// Lower end of the β interval on which the thresholds decrease; `None` without rotational eigenvalues.
    pub beta_lower: Option<f64>,
    pub per_eigen: Vec<EigenBound>,
    pub notes: Vec<String>,
}

impl ThresholdReport {
    pub fn continuous_unconstrained(&self) -> bool {
        self.h_star_continuous.is_infinite()
    }
}

pub fn threshold_report(spectrum: &[Complex64], beta: f64, eps: f64) -> ThresholdReport {
    let mut notes = Vec::new();
    let per_eigen: Vec<EigenBound> = spectrum
        .iter()
        .map(|&lambda| {
            let discrete = discrete_bound(lambda, beta, eps);
            if discrete.is_none() {
                notes.push(format!("eigenvalue {lambda} has a non-positive denominator and imposes no discrete bound"));
            }
            EigenBound { lambda, continuous: continuous_bound(lambda, beta, eps), discrete }
        })
        .collect();
    if spectrum.iter().any(|l| l.re > 0.0 && !has_zero_real_part(*l)) {
        notes.push("some eigenvalue has positive real part: the point is not a stable equilibrium of GDA and the bounds do not certify convergence".into());
    }
    if rotational_subset(spectrum).is_empty() {
        notes.push("no rotational eigenvalue: the continuous bound is unconstrained".into());
    }
    ThresholdReport {
        h_star_continuous: continuous_h_threshold(spectrum, beta, eps),
        h_star_discrete: discrete_h_threshold(spectrum, beta, eps),
        beta_lower: beta_monotone_lower(spectrum).ok(),
        per_eigen,
        notes,
    }
}

/// `μ² + aμ + b` for one eigenvalue of the linearised discrete map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharQuadratic {
    pub a: Complex64,
    pub b: Complex64,
}

impl CharQuadratic {
    /// `a = −(β + 1 + h(1−β)λ/√ε)`, `b = β`.
    pub fn new(lambda: Complex64, params: &AdamParams) -> Self {
        let AdamParams { h, beta, eps, .. } = *params;
        CharQuadratic {
            a: -(lambda * (h * (1.0 - beta) / eps.sqrt()) + (beta + 1.0)),
            b: Complex64::new(beta, 0.0),
        }
    }

    /// Both roots via the cancellation-free quadratic formula.
    pub fn roots(&self) -> [Complex64; 2] {
        let (a, b) = (self.a, self.b);
        let sq = (a * a - b * 4.0).sqrt();
        let s = if (a.conj() * sq).re >= 0.0 { a + sq } else { a - sq };
        let q = -s / 2.0;
        if q.norm() == 0.0 {
            [Complex64::new(0.0, 0.0); 2]
        } else {
            [q, b / q]
        }
    }

    pub fn max_root_modulus(&self) -> f64 {
        let [r1, r2] = self.roots();
        r1.norm().max(r2.norm())
    }
}

/// Both roots of `μ² + aμ + b` lie in the open unit disk iff
/// `|b| < 1` and `|a − b·ā| < 1 − |b|²`.
pub fn unit_disk_test(a: Complex64, b: Complex64) -> bool {
    b.norm() < 1.0 && (a - b * a.conj()).norm() < 1.0 - b.norm_sqr()
}

/// Spectral radius of the linearised discrete Adam-DA map: the largest root
/// modulus over all characteristic quadratics, and the structural `|β|`, `ρ`.
pub fn discrete_spectral_radius(spectrum: &[Complex64], beta: f64, rho: f64, eps: f64, h: f64) -> f64 {
    let params = AdamParams { h, beta, rho, eps };
    spectrum
        .iter()
        .map(|&l| CharQuadratic::new(l, &params).max_root_modulus())
        .fold(beta.abs().max(rho), f64::max)
}

/// `max over rotational λ of (|Re λ| − |Im λ|)/(|Re λ| + |Im λ|)`.
pub fn beta_monotone_lower(spectrum: &[Complex64]) -> Result<f64> {
    let rot = rotational_subset(spectrum);
    if rot.is_empty() {
        return Err(Error::NotApplicable("no eigenvalue with |Im| > |Re|".into()));
    }
    Ok(rot
        .iter()
        .map(|l| (l.re.abs() - l.im.abs()) / (l.re.abs() + l.im.abs()))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Predicted exponential rate of the continuous model near equilibrium: `max Re Sp(J_Adam)`.
pub fn continuous_rate(j: &DMatrix<f64>, params: &AdamParams) -> Result<f64> {
    params.validate()?;
    Ok(adam_spectrum(j, params)?.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Eigenstructure of a game at an equilibrium.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub j: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub spectrum: Vec<Complex64>,
    pub rotational: Vec<Complex64>,
    pub assumption_rotational: bool,
    pub assumption_generic: bool,
    pub gamma: Option<f64>,
    pub j_adam_spectrum: Option<Vec<Complex64>>,
}

impl SpectralReport {
    pub fn at(game: &ZeroSumGame, point: &JointPoint, params: Option<&AdamParams>) -> Result<Self> {
        let j = gda_jacobian(game, point)?;
        let (s, a) = split_symmetric(&j);
        let spectrum = eigenvalues(&j)?;
        let check = check_assumption(&j, DEFAULT_TOL)?;
        let (gamma, j_adam_spectrum) = match params {
            Some(p) => (Some(p.gamma()), Some(adam_spectrum(&j, p)?)),
            None => (None, None),
        };
        Ok(SpectralReport {
            rotational: check.rotational,
            assumption_rotational: check.rotational_exists,
            assumption_generic: check.generic_condition,
            j,
            s,
            a,
            spectrum,
            gamma,
            j_adam_spectrum,
        })
    }
}
