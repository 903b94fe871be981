//! Joint characteristic function of the state and its path integral.

use num_complex::Complex64;

use super::classical::ComplexRoots;
use super::clock::{exp_moment, Clock, EvalOptions};
use super::params::ProcessParams;
use crate::error::{domain, Error, Result};
use crate::summation::ComplexNeumaierSum;

/// Φ_hp(u, v, t) = r₂ - (r₁-r₂) Σ_{k≥0} ρ_u^{k+1} E exp(-λ(r₁-r₂)(k+1)Q(t)),
/// ρ_u = (e^{iu}-r₂)/(e^{iu}-r₁). `max_terms` caps the outer sum, which is
/// otherwise truncated by its geometric tail bound.
pub fn joint_cf_gflbdp(
    u: f64,
    v: f64,
    params: &ProcessParams,
    t: f64,
    max_terms: usize,
    tol: f64,
) -> Result<Complex64> {
    if !(t >= 0.0) || !t.is_finite() || !u.is_finite() {
        return domain("joint CF needs finite u and t >= 0");
    }
    if u == 0.0 && v == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let roots = ComplexRoots::new(v, params.lambda, params.mu)?;
    let ratio = roots.ratio(u);
    let q = ratio.norm();
    if !(q < 1.0) {
        return Err(Error::Domain(format!(
            "outer ratio |(e^iu - r2)/(e^iu - r1)| = {q} is not below 1 at (u, v) = ({u}, {v})"
        )));
    }
    let gap = roots.r1 - roots.r2;
    let clock = Clock::new(params.symbol(), t, crate::special::DEFAULT_TERM_CAP);
    let mut acc = ComplexNeumaierSum::new();
    let mut power = ratio;
    let mut roundoff = 0.0;
    let budget = tol.max(1e-9);
    for k in 0..max_terms {
        let c = gap * params.lambda * (k + 1) as f64;
        let weight = power.norm() * gap.norm();
        // share of the error budget this term may spend on series roundoff
        let allowance = budget * (1.0 - q) / weight.max(f64::MIN_POSITIVE);
        let g = match clock.series_exp_complex(c, tol) {
            Ok((g, err)) if err <= allowance => {
                roundoff += weight * err;
                g
            }
            _ => clock.talbot_exp_complex(c)?,
        };
        acc.add(power * g);
        if roundoff > budget {
            return Err(Error::Numeric {
                context: "joint characteristic function cancellation",
                achieved: roundoff,
            });
        }
        // |E e^{-cQ}| ≤ E e^{-Re(c)Q}, which decreases along the sum
        let next_re = gap.re * params.lambda * (k + 2) as f64;
        let envelope = exp_moment(&clock, next_re, &EvalOptions::with_tol(1e-3))?.value;
        let tail = q.powi(k as i32 + 2) * gap.norm() * envelope.min(1.0) / (1.0 - q);
        if tail < tol {
            return Ok(roots.r2 - gap * acc.value());
        }
        power *= ratio;
    }
    Err(Error::Divergence {
        context: "joint characteristic function outer sum",
        terms: max_terms,
        largest_term: q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::classical::joint_cf_classical;

    #[test]
    fn reduces_to_classical() {
        let p = ProcessParams::classical(1.0, 0.5).unwrap();
        for (u, v, t) in [(0.5, 0.3, 1.0), (0.8, 0.5, 0.7), (1.0, 1.0, 2.0)] {
            let a = joint_cf_gflbdp(u, v, &p, t, 10_000, 1e-12).unwrap();
            let b = joint_cf_classical(u, v, 1.0, 0.5, t).unwrap();
            assert!((a - b).norm() < 1e-9, "({u},{v},{t}) {a} vs {b}");
        }
    }

    #[test]
    fn origin_and_bounds() {
        let p = ProcessParams::new(1.0, 0.5, 0.5, 1.0, 0.9, 0.8).unwrap();
        let one = joint_cf_gflbdp(0.0, 0.0, &p, 1.0, 10_000, 1e-12).unwrap();
        assert_eq!(one, Complex64::new(1.0, 0.0));
        // e^{iu} next to r₁ makes the outer ratio exceed one
        assert!(joint_cf_gflbdp(0.0, 1e-3, &p, 1.0, 10_000, 1e-12).is_err());
        let z = joint_cf_gflbdp(0.5, 0.3, &p, 1.0, 10_000, 1e-12).unwrap();
        assert!(z.norm() <= 1.0 + 1e-8);
        let w = joint_cf_gflbdp(-0.5, -0.3, &p, 1.0, 10_000, 1e-12).unwrap();
        assert!((z - w.conj()).norm() < 1e-10);
    }
}
