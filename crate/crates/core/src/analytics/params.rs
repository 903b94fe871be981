use crate::error::{domain, Result};
use crate::laplace::LaplaceSymbol;

/// Rates and fractional parameters (λ, μ, α, β, γ, ρ) of the process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    pub lambda: f64,
    pub mu: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
}

/// Ordering of the birth and death rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateRegime {
    Equal,
    BirthBelowDeath,
    BirthAboveDeath,
}

/// Relative gap |λ-μ|/(λ+μ) below which the rates are treated as equal.
pub const NEAR_CRITICAL: f64 = 1e-8;

impl ProcessParams {
    /// Validated parameters, including the ceiling constraint
    /// |ρ⌈γ⌉/γ - jα| < 1 for j = 0..=⌈γ⌉ when γ > 0.
    pub fn new(lambda: f64, mu: f64, alpha: f64, beta: f64, gamma: f64, rho: f64) -> Result<Self> {
        let p = Self::new_unconstrained(lambda, mu, alpha, beta, gamma, rho)?;
        if let Some(j) = p.outer_indices().iter().position(|nu| nu.abs() >= 1.0) {
            return domain(format!(
                "ceiling constraint violated: |rho*ceil(gamma)/gamma - {j}*alpha| must be < 1 (rho={rho}, gamma={gamma}, alpha={alpha})"
            ));
        }
        Ok(p)
    }

    /// Range checks only. The analytic formulas hold without the ceiling
    /// constraint, which only matters for the subordinator representation.
    pub fn new_unconstrained(
        lambda: f64,
        mu: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        rho: f64,
    ) -> Result<Self> {
        let all_finite = [lambda, mu, alpha, beta, gamma, rho]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return domain("process parameters must be finite");
        }
        if !(lambda > 0.0) || !(mu >= 0.0) {
            return domain(format!(
                "need lambda > 0 and mu >= 0 (lambda={lambda}, mu={mu})"
            ));
        }
        if !(alpha > 0.0 && alpha <= 1.0) || !(rho > 0.0 && rho <= 1.0) {
            return domain(format!(
                "need 0 < alpha <= 1 and 0 < rho <= 1 (alpha={alpha}, rho={rho})"
            ));
        }
        if !(beta > 0.0) || !(gamma >= 0.0) {
            return domain(format!(
                "need beta > 0 and gamma >= 0 (beta={beta}, gamma={gamma})"
            ));
        }
        Ok(Self {
            lambda,
            mu,
            alpha,
            beta,
            gamma,
            rho,
        })
    }

    /// Classical process: γ = 0, ρ = 1.
    pub fn classical(lambda: f64, mu: f64) -> Result<Self> {
        Self::new(lambda, mu, 1.0, 1.0, 0.0, 1.0)
    }

    pub fn symbol(&self) -> LaplaceSymbol {
        LaplaceSymbol {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            rho: self.rho,
        }
    }

    pub fn regime(&self) -> RateRegime {
        let gap = self.lambda - self.mu;
        if gap.abs() < NEAR_CRITICAL * (self.lambda + self.mu) {
            RateRegime::Equal
        } else if gap < 0.0 {
            RateRegime::BirthBelowDeath
        } else {
            RateRegime::BirthAboveDeath
        }
    }

    /// ⌈γ⌉ (zero when γ = 0).
    pub fn ceil_gamma(&self) -> u32 {
        self.gamma.ceil() as u32
    }

    /// Stable indices ρ⌈γ⌉/γ - jα, j = 0..=⌈γ⌉ (empty when γ = 0).
    pub fn outer_indices(&self) -> Vec<f64> {
        if self.gamma == 0.0 {
            return Vec::new();
        }
        let m = self.ceil_gamma();
        let lead = self.rho * f64::from(m) / self.gamma;
        (0..=m).map(|j| lead - f64::from(j) * self.alpha).collect()
    }

    /// Whether the subordinator composition can be simulated: every stable
    /// index lies in (0, 1], with 1 meaning a pure drift.
    pub fn is_simulable(&self) -> bool {
        if self.gamma == 0.0 {
            return true;
        }
        self.outer_indices().iter().all(|&nu| nu > 0.0 && nu <= 1.0)
    }

    /// Large-time index ρ - αγ.
    pub fn limit_index(&self) -> f64 {
        self.rho - self.alpha * self.gamma
    }
}

/// Bounded two-type (genetic) model on {0, …, M}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneticParams {
    pub m: u32,
    pub n0: u32,
    pub lambda: f64,
    pub mu: f64,
    pub rho: f64,
}

impl GeneticParams {
    pub fn new(m: u32, n0: u32, lambda: f64, mu: f64, rho: f64) -> Result<Self> {
        if m == 0 || !m.is_multiple_of(2) {
            return domain(format!(
                "population size M must be even and positive, got {m}"
            ));
        }
        if n0 == 0 || n0 >= m {
            return domain(format!(
                "initial count must satisfy 0 < n0 < M (n0={n0}, M={m})"
            ));
        }
        if !(lambda > 0.0 && mu > 0.0) || !lambda.is_finite() || !mu.is_finite() {
            return domain(format!(
                "genetic rates must be positive (lambda={lambda}, mu={mu})"
            ));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return domain(format!("need 0 < rho <= 1, got {rho}"));
        }
        Ok(Self {
            m,
            n0,
            lambda,
            mu,
            rho,
        })
    }

    /// Stationary level Mλ/(λ+μ).
    pub fn equilibrium(&self) -> f64 {
        f64::from(self.m) * self.lambda / (self.lambda + self.mu)
    }
}

/// Primed parameters (α′, ρ′, β′, γ′) of a Prabhakar integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrabhakarIntegralParams {
    pub alpha_p: f64,
    pub rho_p: f64,
    pub beta_p: f64,
    pub gamma_p: f64,
}

impl PrabhakarIntegralParams {
    pub fn new(alpha_p: f64, rho_p: f64, beta_p: f64, gamma_p: f64) -> Result<Self> {
        let ok = alpha_p > 0.0
            && alpha_p <= 1.0
            && rho_p > 0.0
            && rho_p <= 1.0
            && beta_p > 0.0
            && gamma_p >= 0.0;
        if !ok || !(alpha_p + rho_p + beta_p + gamma_p).is_finite() {
            return domain(format!(
                "Prabhakar integral needs 0<alpha'<=1, 0<rho'<=1, beta'>0, gamma'>=0 (got {alpha_p}, {rho_p}, {beta_p}, {gamma_p})"
            ));
        }
        Ok(Self {
            alpha_p,
            rho_p,
            beta_p,
            gamma_p,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceiling_constraint() {
        // ρ/γ = 2.25 violates |ρ⌈γ⌉/γ| < 1
        assert!(ProcessParams::new(1.0, 1.0, 0.5, 1.0, 0.4, 0.9).is_err());
        assert!(ProcessParams::new_unconstrained(1.0, 1.0, 0.5, 1.0, 0.4, 0.9).is_ok());
        let p = ProcessParams::new(1.0, 1.0, 0.5, 1.0, 0.9, 0.8).unwrap();
        assert!(p.is_simulable());
        // valid but not simulable: ρ/γ - α < 0
        let p = ProcessParams::new(1.0, 1.0, 1.0, 1.0, 0.4, 0.1).unwrap();
        assert!(!p.is_simulable());
    }

    #[test]
    fn integer_gamma_has_unit_inner_index() {
        let p = ProcessParams::new(1.0, 1.0, 0.5, 1.0, 1.0, 0.9).unwrap();
        let nus = p.outer_indices();
        assert_eq!(nus.len(), 2);
        assert!((nus[0] - 0.9).abs() < 1e-15 && (nus[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn regimes() {
        let p = |l, m| ProcessParams::classical(l, m).unwrap().regime();
        assert_eq!(p(1.0, 1.0), RateRegime::Equal);
        assert_eq!(p(1.0, 1.0 + 1e-12), RateRegime::Equal);
        assert_eq!(p(1.0, 2.0), RateRegime::BirthBelowDeath);
        assert_eq!(p(2.0, 1.0), RateRegime::BirthAboveDeath);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ProcessParams::new(0.0, 1.0, 0.5, 1.0, 0.0, 0.5).is_err());
        assert!(ProcessParams::new(1.0, -1.0, 0.5, 1.0, 0.0, 0.5).is_err());
        assert!(ProcessParams::new(1.0, 1.0, 1.5, 1.0, 0.0, 0.5).is_err());
        assert!(ProcessParams::new(1.0, 1.0, 0.5, 0.0, 0.0, 0.5).is_err());
        assert!(GeneticParams::new(9, 4, 1.0, 1.0, 1.0).is_err());
        assert!(GeneticParams::new(10, 10, 1.0, 1.0, 1.0).is_err());
        assert!(PrabhakarIntegralParams::new(0.5, 1.2, 1.0, 0.0).is_err());
    }
}
