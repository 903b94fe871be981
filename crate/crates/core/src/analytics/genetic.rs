//! Mean-value formulas of the bounded two-type model on {0, …, M}.

use super::params::GeneticParams;
use crate::error::{domain, Result};
use crate::special::{gamma, mittag_leffler};

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and >= 0, got {t}"));
    }
    Ok(())
}

/// E X(t) = n₀E_ρ(-(λ+μ)t^ρ) + A(1 - E_ρ(-(λ+μ)t^ρ)), A = Mλ/(λ+μ).
pub fn genetic_mean(gp: &GeneticParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let s = gp.lambda + gp.mu;
    let a = gp.equilibrium();
    let e = mittag_leffler(gp.rho, 1.0, -s * t.powf(gp.rho))?;
    Ok(f64::from(gp.n0) * e + a * (1.0 - e))
}

/// Time average t^{-1}∫₀ᵗ E X(s) ds = (n₀ - A)E_{ρ,2}(-(λ+μ)t^ρ) + A.
pub fn genetic_avg_type_h(gp: &GeneticParams, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(f64::from(gp.n0));
    }
    let s = gp.lambda + gp.mu;
    let a = gp.equilibrium();
    Ok((f64::from(gp.n0) - a) * mittag_leffler(gp.rho, 2.0, -s * t.powf(gp.rho))? + a)
}

/// Large-time form (n₀ - A)/(Γ(2-ρ)(λ+μ)t^ρ) + A of the time average.
pub fn genetic_avg_type_h_asymptotic(gp: &GeneticParams, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return domain("the large-time approximation needs t > 0");
    }
    let s = gp.lambda + gp.mu;
    let a = gp.equilibrium();
    let coef = if gp.rho == 1.0 {
        // 1/Γ(1) at ρ = 1 reads E_{1,2}(-x) ~ 1/x
        1.0
    } else {
        1.0 / gamma(2.0 - gp.rho)?
    };
    Ok((f64::from(gp.n0) - a) * coef / (s * t.powf(gp.rho)) + a)
}

/// E∫₀^{Q(t)} X(s) ds = (n₀ - A)(1 - E_ρ(-(λ+μ)t^ρ))/(λ+μ) + A t^ρ/Γ(ρ+1).
pub fn genetic_time_changed_path_integral_mean(gp: &GeneticParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let s = gp.lambda + gp.mu;
    let a = gp.equilibrium();
    let tr = t.powf(gp.rho);
    let e = mittag_leffler(gp.rho, 1.0, -s * tr)?;
    Ok((f64::from(gp.n0) - a) * (1.0 - e) / s + a * tr / gamma(gp.rho + 1.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, QuadConfig};

    fn gp(rho: f64) -> GeneticParams {
        GeneticParams::new(10, 3, 1.0, 0.5, rho).unwrap()
    }

    #[test]
    fn mean_examples() {
        let g = gp(0.8);
        assert_eq!(genetic_mean(&g, 0.0).unwrap(), 3.0);
        let g1 = gp(1.0);
        let t: f64 = 0.9;
        let e = (-1.5 * t).exp();
        let want = 3.0 * e + (10.0 / 1.5) * (1.0 - e);
        assert!((genetic_mean(&g1, t).unwrap() - want).abs() < 1e-12);
        let sym = GeneticParams::new(10, 3, 1.0, 1.0, 0.7).unwrap();
        assert!((genetic_mean(&sym, 1e6).unwrap() - 5.0).abs() < 1e-2);
    }

    #[test]
    fn average_is_time_average_of_mean() {
        for rho in [0.6, 1.0] {
            let g = gp(rho);
            let t = 2.0;
            let q = integrate(
                |s| genetic_mean(&g, s).unwrap(),
                0.0,
                t,
                &QuadConfig::with_rel_tol(1e-12),
            )
            .unwrap();
            let avg = genetic_avg_type_h(&g, t).unwrap();
            assert!((q.value / t - avg).abs() < 1e-8 * avg);
        }
        let flat = GeneticParams::new(10, 5, 1.0, 1.0, 0.7).unwrap();
        assert!((genetic_avg_type_h(&flat, 3.0).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn path_integral_mean() {
        let g = gp(1.0);
        assert_eq!(
            genetic_time_changed_path_integral_mean(&g, 0.0).unwrap(),
            0.0
        );
        let t = 1.7;
        let q = integrate(
            |s| genetic_mean(&g, s).unwrap(),
            0.0,
            t,
            &QuadConfig::with_rel_tol(1e-12),
        )
        .unwrap();
        let got = genetic_time_changed_path_integral_mean(&g, t).unwrap();
        assert!((got - q.value).abs() < 1e-8 * q.value);
        let flat = GeneticParams::new(10, 5, 1.0, 1.0, 0.6).unwrap();
        let want = 5.0 * f64::powf(2.0, 0.6) / gamma(1.6).unwrap();
        assert!(
            (genetic_time_changed_path_integral_mean(&flat, 2.0).unwrap() - want).abs() < 1e-12
        );
    }

    #[test]
    fn asymptotic_average_approaches_formula() {
        let g = gp(0.7);
        let t = 1e4;
        let a = genetic_avg_type_h(&g, t).unwrap();
        let b = genetic_avg_type_h_asymptotic(&g, t).unwrap();
        assert!((a - b).abs() < 1e-3 * a);
    }
}
