//! Inter-arrival survival, extinction and state probabilities, their
//! large-time approximations, and independent Laplace-route evaluations.

use std::cell::RefCell;

use num_complex::Complex64;
use twofloat::TwoFloat;

use super::classical::{classical_extinction, classical_state_prob};
use super::clock::{
    exp_moment, ln_binomial, Clock, EvalOptions, Evaluated, Functional, Method, Route,
};
use super::params::{ProcessParams, RateRegime};
use crate::error::{domain, Error, Result};
use crate::laplace::{invert_laplace, InversionConfig};
use crate::quadrature::{integrate_to_infinity, QuadConfig};

/// Slack allowed outside [0, 1] before a probability is reported as an
/// internal inconsistency rather than clamped.
const PROB_SLACK: f64 = 1e-6;

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and >= 0, got {t}"));
    }
    Ok(())
}

fn probability(v: f64, what: &str) -> Result<f64> {
    if !v.is_finite() || !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&v) {
        return Err(Error::Consistency(format!(
            "{what} evaluated to {v}, outside [0, 1]"
        )));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Pr{T > t} = Σ_k (-ct^ρ)^k E^{kγ}_{α,kρ+1}(-βt^α), the survival of an
/// exponential(c) clock read through Q(t).
pub fn survival_interarrival(params: &ProcessParams, c: f64, t: f64) -> Result<f64> {
    Ok(survival_with(params, c, t, &EvalOptions::default())?.value)
}

pub fn survival_with(
    params: &ProcessParams,
    c: f64,
    t: f64,
    opts: &EvalOptions,
) -> Result<Evaluated> {
    check_time(t)?;
    if !(c > 0.0) || !c.is_finite() {
        return domain(format!("survival rate must be finite and > 0, got {c}"));
    }
    let clock = Clock::new(params.symbol(), t, opts.term_cap);
    let e = exp_moment(&clock, c, opts)?;
    Ok(Evaluated {
        value: probability(e.value, "survival")?,
        ..e
    })
}

/// ∫₀^∞ e^{-y} g(y) dy where g may fail.
fn laplace_average<G: Fn(f64) -> Result<f64>>(g: G, tol: f64) -> Result<f64> {
    let failure = RefCell::new(None);
    let integrand = |y: f64| -> f64 {
        if failure.borrow().is_some() {
            return 0.0;
        }
        match g(y) {
            Ok(v) => (-y).exp() * v,
            Err(e) => {
                *failure.borrow_mut() = Some(e);
                0.0
            }
        }
    };
    let cfg = QuadConfig {
        abs_tol: 0.1 * tol,
        rel_tol: tol,
        max_intervals: 400,
    };
    let r = integrate_to_infinity(integrand, 0.0, &cfg);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(r?.value)
}

/// Σ_{k≥1} weight(k)·G(kκ) truncated once C·tail_bound(k) < tol, with G ≤ 1.
fn geometric_sum<W, B>(
    clock: &Clock,
    kappa: f64,
    weight: W,
    tail: B,
    opts: &EvalOptions,
) -> Result<(f64, Route)>
where
    W: Fn(usize) -> f64,
    B: Fn(usize) -> f64,
{
    let mut acc = crate::summation::NeumaierSum::new();
    let mut route = Route::Series;
    for k in 1.. {
        let w = weight(k);
        if w != 0.0 {
            let g = exp_moment(clock, kappa * k as f64, opts)?;
            if g.route == Route::Laplace {
                route = Route::Laplace;
            }
            acc.add(w * g.value);
        }
        if tail(k) < opts.tol {
            break;
        }
        if k >= 10_000_000 {
            return Err(Error::Divergence {
                context: "geometric outer sum",
                terms: k,
                largest_term: w.abs(),
            });
        }
    }
    Ok((acc.value(), route))
}

/// Pr{N(t) = 0}.
pub fn extinction_prob(params: &ProcessParams, t: f64) -> Result<f64> {
    Ok(extinction_with(params, t, &EvalOptions::default())?.value)
}

pub fn extinction_with(params: &ProcessParams, t: f64, opts: &EvalOptions) -> Result<Evaluated> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(Evaluated {
            value: 0.0,
            route: Route::Series,
        });
    }
    if let Method::Inversion(cfg) = opts.method {
        return Ok(Evaluated {
            value: probability(extinction_laplace(params, t, &cfg)?, "extinction")?,
            route: Route::Laplace,
        });
    }
    let clock = Clock::new(params.symbol(), t, opts.term_cap);
    let (lambda, mu) = (params.lambda, params.mu);
    let (value, route) = match params.regime() {
        RateRegime::Equal => {
            let route = RefCell::new(Route::Series);
            let avg = laplace_average(
                |y| {
                    let g = exp_moment(&clock, lambda * y, opts)?;
                    if g.route == Route::Laplace {
                        *route.borrow_mut() = Route::Laplace;
                    }
                    Ok(g.value)
                },
                opts.tol,
            )?;
            (1.0 - avg, route.into_inner())
        }
        RateRegime::BirthBelowDeath => {
            let q = lambda / mu;
            let coef = mu / lambda - 1.0;
            let (s, route) = geometric_sum(
                &clock,
                mu - lambda,
                |k| q.powi(k as i32),
                |k| coef * q.powi(k as i32 + 1) / (1.0 - q),
                opts,
            )?;
            (1.0 - coef * s, route)
        }
        RateRegime::BirthAboveDeath => {
            let q = mu / lambda;
            let coef = 1.0 - q;
            let (s, route) = geometric_sum(
                &clock,
                lambda - mu,
                |k| q.powi(k as i32),
                |k| coef * q.powi(k as i32 + 1) / (1.0 - q),
                opts,
            )?;
            (q - coef * s, route)
        }
    };
    Ok(Evaluated {
        value: probability(value, "extinction probability")?,
        route,
    })
}

/// D_n(c) = E[(cQ)^{n-1}e^{-cQ}/(n-1)! - (cQ)^n e^{-cQ}/n!], whose
/// average against e^{-y} at c = λy is the critical state probability.
fn critical_kernel(clock: &Clock, n: u32, c: f64, opts: &EvalOptions) -> Result<Evaluated> {
    let n_us = n as usize;
    let ln_c = c.ln();
    let coef = move |r: usize| -> (f64, f64) {
        if r + 1 < n_us {
            return (f64::NEG_INFINITY, 0.0);
        }
        let sign = if (r + 1 - n_us).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        (ln_binomial(r + 1, n_us) + r as f64 * ln_c, sign)
    };
    let transform = move |s: Complex64| {
        let base = s + c;
        c.powi(n as i32 - 1) * s / base.powi(n as i32 + 1)
    };
    let f = Functional {
        coef: &coef,
        start: n_us - 1,
        transform: &transform,
        pole: Some(-c),
        bound: Some(1.0),
    };
    clock.expect(&f, opts)
}

/// Largest C·Σ|a_j| for which the outer state sum is trusted; beyond it the
/// alternating weights swamp the clock-expectation errors.
const MAX_AMPLIFICATION: f64 = 1e3;

/// a_1, a_2, … up to the first j where `done(j)` holds, where a_j is the
/// z^j coefficient of z(1-z)^{n-1}/(1-qz)^{n+1}, with a bound on their
/// absolute error. Each division by (1-qz) is the running filter
/// b_j = c_j + q b_{j-1}, whose ℓ1 gain 1/(1-q) compounds over the n+1
/// passes; double-double arithmetic keeps the rounding below that growth
/// for moderate n, and the bound says when it no longer does.
fn state_weights(n: usize, q: f64, done: &dyn Fn(usize) -> bool) -> Result<(Vec<f64>, f64)> {
    let mut len = 1;
    while !done(len) {
        if len >= 10_000_000 {
            return Err(Error::Divergence {
                context: "state-probability outer sum",
                terms: len,
                largest_term: f64::NAN,
            });
        }
        len += 1;
    }
    // c[k] is the z^{k+1} coefficient
    let mut c = vec![TwoFloat::from(0.0); len];
    let mut binom = TwoFloat::from(1.0);
    for (k, slot) in c.iter_mut().enumerate().take(n) {
        *slot = if k % 2 == 0 { binom } else { -binom };
        binom = binom * ((n - 1 - k) as f64) / ((k + 1) as f64);
    }
    if q != 0.0 {
        for _ in 0..=n {
            for k in 1..len {
                c[k] = c[k] + c[k - 1] * q;
            }
        }
    }
    let unit = 2f64.powi(-100);
    let gain = (1.0 / (1.0 - q)).powi(n as i32 + 1);
    let err = 4.0 * unit * (n + 1) as f64 * gain * 2f64.powi(n as i32 - 1);
    Ok((c.iter().map(|x| x.hi() + x.lo()).collect(), err))
}

/// x-Laplace transform of C·z(1-z)^{n-1}/(1-qz)^{n+1}, z = e^{-κx}:
/// (C/κ)·B(a, n)·₂F₁(n+1, a; a+n; q) with a = s/κ + 1.
fn state_transform(s: Complex64, n: usize, q: f64, scale: f64, kappa: f64) -> Complex64 {
    let a = s / kappa + 1.0;
    let mut beta = Complex64::new(1.0, 0.0);
    for i in 0..n {
        beta *= (i.max(1)) as f64 / (a + i as f64);
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 0..1_000_000usize {
        let kf = k as f64;
        term *= (n as f64 + 1.0 + kf) * (a + kf) / ((a + n as f64 + kf) * (kf + 1.0)) * q;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() && kf * (1.0 - q) > n as f64 {
            break;
        }
    }
    scale / kappa * beta * sum
}

fn state_transform_route(clock: &Clock, n: usize, q: f64, scale: f64, kappa: f64) -> Result<f64> {
    let coef = |_: usize| (f64::NEG_INFINITY, 0.0);
    let transform = move |s: Complex64| state_transform(s, n, q, scale, kappa);
    let f = Functional {
        coef: &coef,
        start: 0,
        transform: &transform,
        pole: None,
        bound: Some(1.0),
    };
    clock.laplace(&f, None)
}

/// Pr{N(t) = n}, n ≥ 1.
pub fn state_prob(params: &ProcessParams, n: u32, t: f64) -> Result<f64> {
    Ok(state_with(params, n, t, &EvalOptions::default())?.value)
}

pub fn state_with(params: &ProcessParams, n: u32, t: f64, opts: &EvalOptions) -> Result<Evaluated> {
    check_time(t)?;
    if n == 0 {
        return domain("state index must be >= 1 (use extinction_prob for n = 0)");
    }
    if t == 0.0 {
        return Ok(Evaluated {
            value: if n == 1 { 1.0 } else { 0.0 },
            route: Route::Series,
        });
    }
    if let Method::Inversion(cfg) = opts.method {
        return Ok(Evaluated {
            value: probability(state_laplace(params, n, t, &cfg)?, "state probability")?,
            route: Route::Laplace,
        });
    }
    let clock = Clock::new(params.symbol(), t, opts.term_cap);
    let (lambda, mu) = (params.lambda, params.mu);
    let nn = n as usize;
    let (value, route) = match params.regime() {
        RateRegime::Equal => {
            let route = RefCell::new(Route::Series);
            let v = laplace_average(
                |y| {
                    if y == 0.0 {
                        return Ok(if n == 1 { 1.0 } else { 0.0 });
                    }
                    let d = critical_kernel(&clock, n, lambda * y, opts)?;
                    if d.route == Route::Laplace {
                        *route.borrow_mut() = Route::Laplace;
                    }
                    Ok(d.value)
                },
                opts.tol,
            )?;
            (v, route.into_inner())
        }
        regime => {
            let (q, scale) = if regime == RateRegime::BirthBelowDeath {
                let q = lambda / mu;
                (q, ((lambda - mu) / mu).powi(2) * q.powi(n as i32 - 1))
            } else {
                let q = mu / lambda;
                (q, (1.0 - q).powi(2))
            };
            let kappa = (lambda - mu).abs();
            // |a_j| ≤ 2^{n-1} C(j-1+n, n) q^{j-n}; the bound's ratio is q(j+n)/j
            let tail = |j: usize| -> f64 {
                let next = j + 1;
                let ratio = q * (next + nn) as f64 / next as f64;
                if ratio >= 1.0 {
                    return f64::INFINITY;
                }
                let ln_u = (nn as f64 - 1.0) * std::f64::consts::LN_2
                    + ln_binomial(next - 1 + nn, nn)
                    + if q > 0.0 {
                        (next as f64 - nn as f64) * q.ln()
                    } else if next <= nn {
                        f64::INFINITY
                    } else {
                        f64::NEG_INFINITY
                    };
                scale * ln_u.exp() / (1.0 - ratio)
            };
            let (weights, weight_err) = state_weights(nn, q, &|j| tail(j) < opts.tol)?;
            let amplification = scale * weights.iter().map(|a| a.abs()).sum::<f64>();
            // NaN (overflowed bound times underflowed scale) counts as untrusted
            if amplification > MAX_AMPLIFICATION || !(scale * weight_err <= 0.1 * opts.tol) {
                let v = state_transform_route(&clock, nn, q, scale, kappa)?;
                (v, Route::Laplace)
            } else {
                let inner = EvalOptions {
                    tol: opts.tol / amplification.max(1.0),
                    ..*opts
                };
                let (s, route) = geometric_sum(
                    &clock,
                    kappa,
                    |j| weights.get(j - 1).copied().unwrap_or(0.0),
                    |j| {
                        if j >= weights.len() {
                            0.0
                        } else {
                            f64::INFINITY
                        }
                    },
                    &inner,
                )?;
                (scale * s, route)
            }
        }
    };
    Ok(Evaluated {
        value: probability(value, "state probability")?,
        route,
    })
}

/// Parameters of the large-time limit: γ = 0, ρ = ρ - αγ, rates scaled by
/// β^{-γ}.
fn limit_params(params: &ProcessParams) -> Result<ProcessParams> {
    let nu = params.limit_index();
    if !(nu > 0.0) {
        return domain(format!(
            "large-time approximation needs rho > alpha*gamma (rho={}, alpha*gamma={})",
            params.rho,
            params.alpha * params.gamma
        ));
    }
    let scale = params.beta.powf(-params.gamma);
    ProcessParams::new_unconstrained(
        params.lambda * scale,
        params.mu * scale,
        1.0,
        1.0,
        0.0,
        nu.min(1.0),
    )
}

/// Extinction probability with E^{kγ}_{α,kρ+1} replaced by its large-time
/// form, i.e. with the clock replaced by an inverse (ρ-αγ)-stable one.
pub fn asymptotic_extinction(params: &ProcessParams, t: f64) -> Result<f64> {
    extinction_prob(&limit_params(params)?, t)
}

/// State probabilities under the same large-time substitution.
pub fn asymptotic_state_prob(params: &ProcessParams, n: u32, t: f64) -> Result<f64> {
    state_prob(&limit_params(params)?, n, t)
}

/// E f(Q(t)) for a classical quantity f by inverting the unexpanded
/// w-domain form (1/w)∫₀^∞ f(u/η(w)) e^{-u} du.
fn pre_expansion<F: Fn(f64) -> Result<f64>>(
    params: &ProcessParams,
    t: f64,
    cfg: &InversionConfig,
    f: F,
) -> Result<f64> {
    let sym = params.symbol();
    let failure = RefCell::new(None);
    let transform = |w: f64| -> f64 {
        let eta = sym.eval(w);
        let inner = laplace_average(|u| f(u / eta), 1e-13);
        match inner {
            Ok(v) => v / w,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let v = invert_laplace(&transform, t, cfg);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    v
}

/// Extinction probability by inversion of the pre-expansion transform.
pub fn extinction_laplace(params: &ProcessParams, t: f64, cfg: &InversionConfig) -> Result<f64> {
    let (l, m) = (params.lambda, params.mu);
    let equal = params.regime() == RateRegime::Equal;
    pre_expansion(params, t, cfg, |x| {
        if equal {
            classical_extinction(l, l, x)
        } else {
            classical_extinction(l, m, x)
        }
    })
}

/// State probability by inversion of the pre-expansion transform.
pub fn state_laplace(params: &ProcessParams, n: u32, t: f64, cfg: &InversionConfig) -> Result<f64> {
    let (l, m) = (params.lambda, params.mu);
    let m = if params.regime() == RateRegime::Equal {
        l
    } else {
        m
    };
    pre_expansion(params, t, cfg, |x| classical_state_prob(n, l, m, x))
}
