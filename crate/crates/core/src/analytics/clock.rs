//! Expectations E f(Q(t)) over the random clock Q(t).
//!
//! Every series in the analytics module has the shape Σ_r a_r h_r with
//! h_r = E[Q(t)^r]/r! = t^{rρ} E^{rγ}_{α,rρ+1}(-βt^α). The h_r are cached per
//! clock, stored as Γ(rρ+1)·E^{rγ}_{α,rρ+1}(-βt^α) together with the log
//! weight rρ ln t - ln Γ(rρ+1) so that no factor overflows. The same
//! expectation has the t-Laplace transform (η(w)/w)·F(η(w)), F being the
//! x-Laplace transform of f; that form is the fallback when the series
//! cancels catastrophically.

use std::cell::RefCell;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::laplace::{invert_laplace, talbot_invert, InversionConfig, LaplaceSymbol};
use crate::special::{ln_gamma_signed, ml_series, DEFAULT_TERM_CAP};
use crate::summation::{ComplexNeumaierSum, NeumaierSum};

const INNER_TOL: f64 = 1e-15;
const TALBOT_NODES: usize = 32;
/// Relative roundoff always tolerated in a series value, whatever the
/// requested tolerance.
const ROUNDOFF_FLOOR: f64 = 1e-11;

/// Which evaluation produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Series,
    Laplace,
}

/// How a clock expectation may be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Series first, Talbot inversion when the series loses precision.
    Auto,
    /// Series only; precision loss is an error.
    Series,
    /// Numerical inversion of the w-domain form.
    Inversion(InversionConfig),
}

/// Evaluation tolerance and route selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub tol: f64,
    pub method: Method,
    pub term_cap: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            method: Method::Auto,
            term_cap: DEFAULT_TERM_CAP,
        }
    }
}

impl EvalOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }

    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }
}

#[derive(Debug, Clone, Copy)]
struct Moment {
    value: f64,
    abs: f64,
    ln_weight: f64,
}

/// A value with the route that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluated {
    pub value: f64,
    pub route: Route,
}

/// f(x) = Σ_{r≥start} a_r x^r / r! described by its coefficients and its
/// Laplace transform F(s) = ∫ e^{-sx} f(x) dx.
pub(crate) struct Functional<'a> {
    /// ln|a_r| and sign(a_r); sign 0 marks a vanishing coefficient.
    pub coef: &'a dyn Fn(usize) -> (f64, f64),
    pub start: usize,
    pub transform: &'a dyn Fn(Complex64) -> Complex64,
    /// Largest real singularity of F; positive values create a pole of the
    /// w-domain form at η(w) = s.
    pub pole: Option<f64>,
    /// A priori bound on |E f(Q)| when one is known (probability-like).
    pub bound: Option<f64>,
}

pub(crate) struct Clock {
    sym: LaplaceSymbol,
    t: f64,
    x: f64,
    ln_t: f64,
    cap: usize,
    moments: RefCell<Vec<Moment>>,
}

impl Clock {
    pub fn new(sym: LaplaceSymbol, t: f64, cap: usize) -> Self {
        Self {
            sym,
            t,
            x: -sym.beta * t.powf(sym.alpha),
            ln_t: t.ln(),
            cap,
            moments: RefCell::new(Vec::new()),
        }
    }

    fn moment(&self, r: usize) -> Result<Moment> {
        let mut cache = self.moments.borrow_mut();
        while cache.len() <= r {
            let k = cache.len();
            let b = k as f64 * self.sym.rho + 1.0;
            let lg = ln_gamma_signed(b).0;
            let out = ml_series(
                self.sym.alpha,
                b,
                k as f64 * self.sym.gamma,
                self.x,
                lg,
                INNER_TOL,
                self.cap,
            );
            if out.capped || !out.sum.is_finite() {
                return Err(Error::Divergence {
                    context: "clock moment (inner Mittag-Leffler series)",
                    terms: out.terms,
                    largest_term: out.max_term,
                });
            }
            cache.push(Moment {
                value: out.sum,
                abs: out.abs_sum,
                ln_weight: k as f64 * self.sym.rho * self.ln_t - lg,
            });
        }
        Ok(cache[r])
    }

    /// h_r = E[Q(t)^r]/r!.
    pub fn h(&self, r: usize) -> Result<f64> {
        if self.t == 0.0 {
            return Ok(if r == 0 { 1.0 } else { 0.0 });
        }
        let m = self.moment(r)?;
        Ok(m.value * m.ln_weight.exp())
    }

    /// Σ a_r h_r by the series. Returns the value and its roundoff bound.
    /// Gives up with a numeric error as soon as the roundoff bound exceeds
    /// `budget`.
    pub fn series(&self, f: &Functional<'_>, tol: f64, budget: f64) -> Result<(f64, f64)> {
        if self.t == 0.0 {
            if f.start > 0 {
                return Ok((0.0, 0.0));
            }
            let (la, s) = (f.coef)(0);
            return Ok((s * la.exp(), 0.0));
        }
        let mut acc = NeumaierSum::new();
        let mut env_sum = 0.0;
        let mut max_env: f64 = 0.0;
        let mut prev_env = f64::INFINITY;
        let mut small_run = 0;
        for r in f.start..f.start + self.cap {
            let (la, sign) = (f.coef)(r);
            let (term, env) = if sign == 0.0 {
                (0.0, 0.0)
            } else {
                let m = self.moment(r)?;
                let w = (la + m.ln_weight).exp();
                (sign * w * m.value, w * m.abs)
            };
            acc.add(term);
            env_sum += env;
            max_env = max_env.max(env);
            let roundoff = 4.0 * f64::EPSILON * env_sum;
            if !acc.value().is_finite() || roundoff > budget {
                return Err(Error::Numeric {
                    context: "clock series cancellation",
                    achieved: roundoff,
                });
            }
            let scale = acc.value().abs().max(f64::EPSILON * max_env);
            let ratio = env / prev_env;
            let tail = if ratio < 1.0 {
                env * (ratio / (1.0 - ratio)).max(1.0)
            } else {
                f64::INFINITY
            };
            if (env == 0.0 || tail <= tol * scale) && env <= prev_env {
                small_run += 1;
                if small_run >= 3 {
                    return Ok((acc.value(), roundoff));
                }
            } else {
                small_run = 0;
            }
            if env > 0.0 {
                prev_env = env;
            }
        }
        Err(Error::Divergence {
            context: "clock series",
            terms: self.cap,
            largest_term: max_env,
        })
    }

    /// E e^{-cQ(t)} for complex c by the series, with its roundoff bound.
    pub fn series_exp_complex(&self, c: Complex64, tol: f64) -> Result<(Complex64, f64)> {
        if self.t == 0.0 || c == Complex64::new(0.0, 0.0) {
            return Ok((Complex64::new(1.0, 0.0), 0.0));
        }
        let ln_minus_c = (-c).ln();
        let mut acc = ComplexNeumaierSum::new();
        let mut env_sum = 0.0;
        let mut max_env: f64 = 0.0;
        let mut prev_env = f64::INFINITY;
        let mut small_run = 0;
        for r in 0..self.cap {
            let m = self.moment(r)?;
            let z = (ln_minus_c * r as f64 + m.ln_weight).exp();
            let w = (ln_minus_c.re * r as f64 + m.ln_weight).exp();
            acc.add(z * m.value);
            let env = w * m.abs;
            env_sum += env;
            max_env = max_env.max(env);
            let scale = acc.value().norm().max(f64::EPSILON * max_env);
            let ratio = env / prev_env;
            let tail = if ratio < 1.0 {
                env * (ratio / (1.0 - ratio)).max(1.0)
            } else {
                f64::INFINITY
            };
            if tail <= tol * scale && env <= prev_env {
                small_run += 1;
                if small_run >= 3 {
                    return Ok((acc.value(), 4.0 * f64::EPSILON * env_sum));
                }
            } else {
                small_run = 0;
            }
            prev_env = env;
        }
        Err(Error::Divergence {
            context: "complex clock series",
            terms: self.cap,
            largest_term: max_env,
        })
    }

    /// E e^{-cQ(t)} for complex c with Re c ≥ 0 by Talbot inversion of the
    /// real and imaginary parts, whose x-transforms are (s+a)/((s+a)²+b²)
    /// and -b/((s+a)²+b²) for c = a + ib.
    pub fn talbot_exp_complex(&self, c: Complex64) -> Result<Complex64> {
        if self.t == 0.0 {
            return Ok(Complex64::new(1.0, 0.0));
        }
        let sym = self.sym;
        let part = |num: &dyn Fn(Complex64) -> Complex64| {
            let g = |w: Complex64| {
                let eta = sym.eval_complex(w);
                let sa = eta + c.re;
                eta / w * num(sa) / (sa * sa + c.im * c.im)
            };
            talbot_invert(&g, self.t, TALBOT_NODES, 0.0)
        };
        let re = part(&|sa| sa);
        let im = part(&|_| Complex64::new(-c.im, 0.0));
        if !(re.is_finite() && im.is_finite()) {
            return Err(Error::Numeric {
                context: "Talbot inversion of complex clock expectation",
                achieved: f64::INFINITY,
            });
        }
        Ok(Complex64::new(re, im))
    }

    fn shift_for(&self, f: &Functional<'_>) -> f64 {
        match f.pole {
            Some(s) if s > 0.0 => self.sym.solve(s).unwrap_or(0.0),
            _ => 0.0,
        }
    }

    /// E f(Q(t)) by inverting (η/w)·F(η).
    pub fn laplace(&self, f: &Functional<'_>, cfg: Option<&InversionConfig>) -> Result<f64> {
        if self.t == 0.0 {
            return self.series(f, 1e-15, f64::INFINITY).map(|v| v.0);
        }
        let shift = self.shift_for(f);
        let sym = self.sym;
        match cfg {
            None => {
                let g = |w: Complex64| {
                    let eta = sym.eval_complex(w);
                    eta / w * (f.transform)(eta)
                };
                let v = talbot_invert(&g, self.t, TALBOT_NODES, shift);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Numeric {
                        context: "Talbot inversion of clock expectation",
                        achieved: f64::INFINITY,
                    })
                }
            }
            Some(cfg) => {
                let g = |w: f64| {
                    let eta = sym.eval(w);
                    eta / w * (f.transform)(Complex64::new(eta, 0.0)).re
                };
                let cfg = cfg.with_shift(shift);
                invert_laplace(&g, self.t, &cfg)
            }
        }
    }

    /// E f(Q(t)) following `opts.method`.
    pub fn expect(&self, f: &Functional<'_>, opts: &EvalOptions) -> Result<Evaluated> {
        match opts.method {
            Method::Inversion(cfg) => Ok(Evaluated {
                value: self.laplace(f, Some(&cfg))?,
                route: Route::Laplace,
            }),
            Method::Series => {
                let (v, roundoff) = self.series(f, opts.tol, f64::INFINITY)?;
                if roundoff > opts.tol.max(ROUNDOFF_FLOOR) * v.abs() {
                    return Err(Error::Numeric {
                        context: "clock series cancellation",
                        achieved: roundoff / v.abs().max(f64::MIN_POSITIVE),
                    });
                }
                Ok(Evaluated {
                    value: v,
                    route: Route::Series,
                })
            }
            Method::Auto => {
                let budget = f
                    .bound
                    .map_or(f64::INFINITY, |b| opts.tol.max(ROUNDOFF_FLOOR) * b);
                match self.series(f, opts.tol, budget) {
                    Ok((v, roundoff)) if roundoff <= opts.tol.max(ROUNDOFF_FLOOR) * v.abs() => {
                        Ok(Evaluated {
                            value: v,
                            route: Route::Series,
                        })
                    }
                    _ => Ok(Evaluated {
                        value: self.laplace(f, None)?,
                        route: Route::Laplace,
                    }),
                }
            }
        }
    }
}

/// ln|(-c)^r| and its sign.
pub(crate) fn power_coef(c: f64, r: usize) -> (f64, f64) {
    if r == 0 {
        return (0.0, 1.0);
    }
    if c == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    let sign = if c > 0.0 && r % 2 == 1 { -1.0 } else { 1.0 };
    (r as f64 * c.abs().ln(), sign)
}

/// ln C(n, k).
pub(crate) fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let lg = |x: usize| ln_gamma_signed(x as f64 + 1.0).0;
    lg(n) - lg(k) - lg(n - k)
}

/// E e^{-cQ(t)} for real c (c < 0 gives the growing exponential moment).
pub(crate) fn exp_moment(clock: &Clock, c: f64, opts: &EvalOptions) -> Result<Evaluated> {
    let coef = move |r: usize| power_coef(c, r);
    let transform = move |s: Complex64| 1.0 / (s + c);
    let f = Functional {
        coef: &coef,
        start: 0,
        transform: &transform,
        pole: Some(-c),
        bound: if c >= 0.0 { Some(1.0) } else { None },
    };
    clock.expect(&f, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clock(alpha: f64, beta: f64, gamma: f64, rho: f64, t: f64) -> Clock {
        Clock::new(
            LaplaceSymbol::new(alpha, beta, gamma, rho).unwrap(),
            t,
            DEFAULT_TERM_CAP,
        )
    }

    #[test]
    fn classical_clock_is_deterministic_time() {
        let c = clock(1.0, 1.0, 0.0, 1.0, 1.5);
        for r in 0..6 {
            let exact = 1.5f64.powi(r as i32) / (1..=r).map(|i| i as f64).product::<f64>();
            assert!((c.h(r).unwrap() - exact).abs() < 1e-14 * exact.max(1.0));
        }
        let opts = EvalOptions::with_tol(1e-14);
        let g = exp_moment(&c, 2.0, &opts).unwrap();
        assert!((g.value - (-3.0f64).exp()).abs() < 1e-12);
        let g = exp_moment(&c, -1.0, &opts).unwrap();
        assert!((g.value - 1.5f64.exp()).abs() < 1e-12 * 1.5f64.exp());
    }

    #[test]
    fn series_and_talbot_routes_agree() {
        let c = clock(0.5, 1.0, 0.9, 0.8, 1.3);
        for rate in [0.3, 1.0, 4.0, -0.7] {
            let opts = EvalOptions::with_tol(1e-9).with_method(Method::Series);
            let series = exp_moment(&c, rate, &opts).unwrap();
            let coef = move |r: usize| power_coef(rate, r);
            let transform = move |s: Complex64| 1.0 / (s + rate);
            let f = Functional {
                coef: &coef,
                start: 0,
                transform: &transform,
                pole: Some(-rate),
                bound: None,
            };
            let talbot = c.laplace(&f, None).unwrap();
            assert!(
                (series.value - talbot).abs() < 1e-8 * series.value.abs(),
                "rate {rate}: {} vs {talbot}",
                series.value
            );
        }
    }

    #[test]
    fn large_rates_fall_back_to_inversion() {
        let c = clock(0.5, 1.0, 0.4, 0.35, 2.0);
        let g = exp_moment(&c, 200.0, &EvalOptions::default()).unwrap();
        assert_eq!(g.route, Route::Laplace);
        assert!(g.value > 0.0 && g.value < 1.0);
    }

    #[test]
    fn complex_series_matches_real_series_on_the_axis() {
        let c = clock(0.5, 1.0, 0.9, 0.8, 1.0);
        let real = exp_moment(&c, 0.8, &EvalOptions::default()).unwrap().value;
        let z = c
            .series_exp_complex(Complex64::new(0.8, 0.0), 1e-12)
            .unwrap()
            .0;
        assert!((z.re - real).abs() < 1e-12 && z.im.abs() < 1e-15);
    }

    #[test]
    fn zero_time_is_the_initial_condition() {
        let c = clock(0.5, 1.0, 0.9, 0.8, 0.0);
        assert_eq!(c.h(0).unwrap(), 1.0);
        assert_eq!(c.h(3).unwrap(), 0.0);
        assert_eq!(
            exp_moment(&c, 5.0, &EvalOptions::default()).unwrap().value,
            1.0
        );
    }

    #[test]
    fn complex_talbot_matches_series() {
        let c = clock(0.5, 1.0, 0.9, 0.8, 1.3);
        for z in [
            Complex64::new(0.8, 0.5),
            Complex64::new(2.0, -1.5),
            Complex64::new(0.3, 0.0),
        ] {
            let (series, _) = c.series_exp_complex(z, 1e-14).unwrap();
            let talbot = c.talbot_exp_complex(z).unwrap();
            assert!((series - talbot).norm() < 1e-9, "{z}: {series} vs {talbot}");
        }
    }
}
