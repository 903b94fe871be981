//! Closed forms for the classical linear birth-death process started from
//! one individual.

use num_complex::Complex64;

use crate::error::{domain, Error, Result};

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and >= 0, got {t}"));
    }
    Ok(())
}

/// Pr{N(t) = 0}.
pub fn classical_extinction(lambda: f64, mu: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if lambda == mu {
        return Ok(lambda * t / (1.0 + lambda * t));
    }
    // (μ - μe^{dt}) / (μ - λe^{dt}) rewritten with e^{-|d|t} to avoid overflow
    let d = lambda - mu;
    if d < 0.0 {
        let e = (d * t).exp();
        Ok(mu * (-(d * t).exp_m1()) / (mu - lambda * e))
    } else {
        let e = (-d * t).exp();
        Ok(mu * (-(-d * t).exp_m1()) / (lambda - mu * e))
    }
}

/// Pr{N(t) = n}, n ≥ 1.
pub fn classical_state_prob(n: u32, lambda: f64, mu: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    if n == 0 {
        return domain("state index must be >= 1 (use classical_extinction for n = 0)");
    }
    let n = n as i32;
    if t == 0.0 {
        return Ok(if n == 1 { 1.0 } else { 0.0 });
    }
    if lambda == mu {
        let x = lambda * t;
        return Ok(x.powi(n - 1) / (1.0 + x).powi(n + 1));
    }
    let d = lambda - mu;
    let e = (-d * t).exp();
    if e.is_finite() && e < 1e300 {
        let num = d * d * e * (lambda * -(-d * t).exp_m1()).powi(n - 1);
        return Ok(num / (lambda - mu * e).powi(n + 1));
    }
    // strongly subcritical: multiply through by e^{dt}
    let g = (d * t).exp();
    Ok(d * d * g * (lambda * (g - 1.0)).powi(n - 1) / (lambda * g - mu).powi(n + 1))
}

/// Roots r₁, r₂ of λu² + (iv - λ - μ)u + μ = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexRoots {
    pub r1: Complex64,
    pub r2: Complex64,
    pub v: f64,
}

impl ComplexRoots {
    pub fn new(v: f64, lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(mu >= 0.0) || !v.is_finite() {
            return domain("roots need lambda > 0, mu >= 0 and finite v");
        }
        let b = Complex64::new(lambda + mu, -v);
        let disc = (b * b - 4.0 * lambda * mu).sqrt();
        if disc.norm() <= 1e-14 * b.norm() {
            return Err(Error::Domain(format!(
                "degenerate roots r1 = r2 at v = {v} (lambda = {lambda}, mu = {mu})"
            )));
        }
        Ok(Self {
            r1: (b + disc) / (2.0 * lambda),
            r2: (b - disc) / (2.0 * lambda),
            v,
        })
    }

    /// (e^{iu} - r₂)/(e^{iu} - r₁).
    pub fn ratio(&self, u: f64) -> Complex64 {
        let z = Complex64::new(0.0, u).exp();
        (z - self.r2) / (z - self.r1)
    }
}

/// E exp(iuN(t) + ivY(t)) with Y(t) = ∫₀ᵗ N(s) ds.
pub fn joint_cf_classical(u: f64, v: f64, lambda: f64, mu: f64, t: f64) -> Result<Complex64> {
    check_time(t)?;
    if !u.is_finite() {
        return domain("u must be finite");
    }
    let roots = ComplexRoots::new(v, lambda, mu)?;
    let (r1, r2) = (roots.r1, roots.r2);
    let z = Complex64::new(0.0, u).exp();
    // r₂ + (r₁-r₂)/(1 - (e^{iu}-r₁)/(e^{iu}-r₂)·e^{λ(r₁-r₂)t}), written with
    // the decaying factor e^{-λ(r₁-r₂)t} (Re(r₁-r₂) ≥ 0).
    let decay = (-(r1 - r2) * lambda * t).exp();
    let q = roots.ratio(u) * decay;
    if (z - r1).norm() == 0.0 {
        return Ok(r1);
    }
    Ok(r2 - (r1 - r2) * q / (Complex64::new(1.0, 0.0) - q))
}
