//! Mean, second factorial moment, variance and the mean of the Prabhakar
//! integral of the process.

use num_complex::Complex64;

use super::clock::{exp_moment, Clock, EvalOptions, Evaluated, Functional};
use super::params::{PrabhakarIntegralParams, ProcessParams};
use crate::error::{domain, Error, Result};
use crate::special::{ln_gamma_signed, ml_series};
use crate::summation::NeumaierSum;

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and >= 0, got {t}"));
    }
    Ok(())
}

fn clock(params: &ProcessParams, t: f64, opts: &EvalOptions) -> Clock {
    Clock::new(params.symbol(), t, opts.term_cap)
}

/// E Q(t) = t^ρ E^γ_{α,ρ+1}(-βt^α), the mean of the random clock.
pub fn clock_mean(params: &ProcessParams, t: f64) -> Result<f64> {
    check_time(t)?;
    clock(params, t, &EvalOptions::default()).h(1)
}

/// E N(t) = Σ_k (λ-μ)^k t^{kρ} E^{kγ}_{α,kρ+1}(-βt^α).
pub fn mean_gflbdp(params: &ProcessParams, t: f64, tol: f64) -> Result<f64> {
    Ok(mean_with(params, t, &EvalOptions::with_tol(tol))?.value)
}

pub fn mean_with(params: &ProcessParams, t: f64, opts: &EvalOptions) -> Result<Evaluated> {
    check_time(t)?;
    let c = clock(params, t, opts);
    exp_moment(&c, params.mu - params.lambda, opts)
}

/// E N(t)(N(t)-1) = 2λ Σ_{j≥0} (λ-μ)^j (2^{j+1}-1) h_{j+1}.
pub fn second_factorial_moment(params: &ProcessParams, t: f64, tol: f64) -> Result<f64> {
    check_time(t)?;
    let opts = EvalOptions::with_tol(tol);
    let c = clock(params, t, &opts);
    Ok(second_factorial_on(&c, params, &opts)?.value)
}

fn second_factorial_on(c: &Clock, params: &ProcessParams, opts: &EvalOptions) -> Result<Evaluated> {
    let d = params.lambda - params.mu;
    let lam = params.lambda;
    let coef = move |r: usize| -> (f64, f64) {
        if r == 0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        let j = r - 1;
        // ln(2^r - 1)
        let ln_pow = r as f64 * std::f64::consts::LN_2
            + (-(-(r as f64) * std::f64::consts::LN_2).exp()).ln_1p();
        if j > 0 && d == 0.0 {
            return (f64::NEG_INFINITY, 0.0);
        }
        let (ld, sign) = if j == 0 {
            (0.0, 1.0)
        } else {
            (
                j as f64 * d.abs().ln(),
                if d < 0.0 && j % 2 == 1 { -1.0 } else { 1.0 },
            )
        };
        ((2.0 * lam).ln() + ld + ln_pow, sign)
    };
    // classical m₂(x) = (2λ/d)(e^{2dx} - e^{dx}) has transform 2λ/((s-2d)(s-d))
    let transform = move |s: Complex64| 2.0 * lam / ((s - 2.0 * d) * (s - d));
    let f = Functional {
        coef: &coef,
        start: 1,
        transform: &transform,
        pole: Some(if d > 0.0 { 2.0 * d } else { d }),
        bound: None,
    };
    c.expect(&f, opts)
}

/// Var N(t) = m₂ + E N - (E N)².
pub fn variance_gflbdp(params: &ProcessParams, t: f64, tol: f64) -> Result<f64> {
    variance_with(params, t, &EvalOptions::with_tol(tol))
}

pub fn variance_with(params: &ProcessParams, t: f64, opts: &EvalOptions) -> Result<f64> {
    check_time(t)?;
    let c = clock(params, t, opts);
    let mean = exp_moment(&c, params.mu - params.lambda, opts)?.value;
    let m2 = second_factorial_on(&c, params, opts)?.value;
    let var = m2 + mean - mean * mean;
    // cancellation in m₂ - E² scales with E²
    let slack = 1e-8 * mean * mean.max(1.0);
    if var < -slack.max(1e-8) {
        return Err(Error::Consistency(format!(
            "negative variance {var:e} at t = {t} (m2 = {m2}, mean = {mean})"
        )));
    }
    Ok(var.max(0.0))
}

/// Mean of the Prabhakar integral of the process:
/// Σ_k Σ_r (λ-μ)^k (γ′)_r β′^r / r! · t^{kρ+ρ′+rα′} E^{kγ}_{α,kρ+ρ′+rα′+1}(-βt^α).
pub fn mean_prabhakar_integral(
    params: &ProcessParams,
    ip: &PrabhakarIntegralParams,
    t: f64,
    tol: f64,
) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let cap = crate::special::DEFAULT_TERM_CAP;
    let d = params.lambda - params.mu;
    let x = -params.beta * t.powf(params.alpha);
    let ln_t = t.ln();
    let mut total = NeumaierSum::new();
    let mut env_total = 0.0;
    let mut prev_row = f64::INFINITY;
    let mut small_rows = 0;
    for k in 0..cap {
        if k > 0 && d == 0.0 {
            break;
        }
        let (ld, dsign) = if k == 0 {
            (0.0, 1.0)
        } else {
            (
                k as f64 * d.abs().ln(),
                if d < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 },
            )
        };
        let mut row = NeumaierSum::new();
        let mut row_env = 0.0;
        let mut ln_poch = 0.0;
        let mut ln_fact = 0.0;
        let mut prev = f64::INFINITY;
        let mut small = 0;
        for r in 0..cap {
            if r > 0 {
                let f = ip.gamma_p + (r - 1) as f64;
                if f == 0.0 {
                    break;
                }
                ln_poch += f.ln();
                ln_fact += (r as f64).ln();
            }
            let order = k as f64 * params.rho + ip.rho_p + r as f64 * ip.alpha_p;
            let b = order + 1.0;
            let lg = ln_gamma_signed(b).0;
            let inner = ml_series(params.alpha, b, k as f64 * params.gamma, x, lg, 1e-15, cap);
            if inner.capped {
                return Err(Error::Divergence {
                    context: "Prabhakar integral mean (inner series)",
                    terms: inner.terms,
                    largest_term: inner.max_term,
                });
            }
            let ln_w = ld + ln_poch + r as f64 * ip.beta_p.ln() - ln_fact + order * ln_t - lg;
            let w = ln_w.exp();
            let env = w * inner.abs_sum;
            row.add(dsign * w * inner.sum);
            row_env += env;
            let scale = row.value().abs().max(f64::EPSILON * row_env);
            if env <= tol * scale && env <= prev {
                small += 1;
                if small >= 3 {
                    break;
                }
            } else {
                small = 0;
            }
            prev = env;
            if r + 1 == cap {
                return Err(Error::Divergence {
                    context: "Prabhakar integral mean (r-series)",
                    terms: cap,
                    largest_term: env,
                });
            }
        }
        total.add(row.value());
        env_total += row_env;
        let scale = total.value().abs().max(f64::EPSILON * env_total);
        if row_env <= tol * scale && row_env <= prev_row {
            small_rows += 1;
            if small_rows >= 3 {
                break;
            }
        } else {
            small_rows = 0;
        }
        prev_row = row_env;
        if k + 1 == cap {
            return Err(Error::Divergence {
                context: "Prabhakar integral mean (k-series)",
                terms: cap,
                largest_term: row_env,
            });
        }
    }
    let value = total.value();
    let roundoff = 4.0 * f64::EPSILON * env_total;
    if roundoff > tol.max(1e-12) * value.abs() {
        return Err(Error::Numeric {
            context: "Prabhakar integral mean cancellation",
            achieved: roundoff / value.abs().max(f64::MIN_POSITIVE),
        });
    }
    Ok(value)
}
