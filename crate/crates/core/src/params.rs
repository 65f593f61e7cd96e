use crate::error::{Error, Result};

/// Hyperparameters of Adam-DA: step size `h`, first-moment factor `beta`,
/// second-moment factor `rho` and the stability constant `eps`.
///
/// `eps` sits inside the square root of the update denominator,
/// `sqrt(v_hat + eps)`, so the equilibrium preconditioner is `1/sqrt(eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub h: f64,
    pub beta: f64,
    pub rho: f64,
    pub eps: f64,
}

impl AdamParams {
    pub fn new(h: f64, beta: f64, rho: f64, eps: f64) -> Result<Self> {
        let params = AdamParams { h, beta, rho, eps };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_open(self.h, "h", 0.0, f64::INFINITY, "(0, inf)")?;
        check_open(self.beta, "beta", -1.0, 1.0, "(-1, 1)")?;
        check_open(self.rho, "rho", 0.0, 1.0, "(0, 1)")?;
        check_open(self.eps, "eps", 0.0, f64::INFINITY, "(0, inf)")?;
        Ok(())
    }

    pub fn with_h(self, h: f64) -> Self {
        AdamParams { h, ..self }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        AdamParams { beta, ..self }
    }

    pub fn with_rho(self, rho: f64) -> Self {
        AdamParams { rho, ..self }
    }

    pub fn with_eps(self, eps: f64) -> Self {
        AdamParams { eps, ..self }
    }

    /// K(β, ρ) = (1+β)/(1−β) − (1+ρ)/(1−ρ).
    pub fn k(&self) -> f64 {
        crate::igr::k_factor(self.beta, self.rho)
    }

    /// γ = h(1+β) / (2√ε(1−β)), the coefficient of J² in the Adam Jacobian.
    pub fn gamma(&self) -> f64 {
        self.h * (1.0 + self.beta) / (2.0 * self.eps.sqrt() * (1.0 - self.beta))
    }
}

fn check_open(value: f64, field: &'static str, lo: f64, hi: f64, interval: &'static str) -> Result<()> {
    if value.is_finite() && value > lo && value < hi {
        Ok(())
    } else {
        Err(Error::Parameter { field, value, interval })
    }
}
