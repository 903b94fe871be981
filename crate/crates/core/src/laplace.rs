//! Forward and inverse numerical Laplace transforms, and the symbol
//! η(w) = w^ρ (1 + β w^{-α})^γ shared by every transform of the process.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_split, QuadConfig};
use crate::summation::NeumaierSum;

/// Fractional parameters entering η(w).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceSymbol {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub rho: f64,
}

impl LaplaceSymbol {
    pub fn new(alpha: f64, beta: f64, gamma: f64, rho: f64) -> Result<Self> {
        let ok =
            alpha > 0.0 && alpha <= 1.0 && beta > 0.0 && gamma >= 0.0 && rho > 0.0 && rho <= 1.0;
        if !ok || !(alpha + beta + gamma + rho).is_finite() {
            return domain(format!(
                "symbol needs 0<alpha<=1, beta>0, gamma>=0, 0<rho<=1 (alpha={alpha}, beta={beta}, gamma={gamma}, rho={rho})"
            ));
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            rho,
        })
    }

    #[inline]
    pub fn eval(&self, w: f64) -> f64 {
        if self.gamma == 0.0 {
            return w.powf(self.rho);
        }
        (self.rho * w.ln() + self.gamma * (self.beta * w.powf(-self.alpha)).ln_1p()).exp()
    }

    /// η on the principal sheet.
    #[inline]
    pub fn eval_complex(&self, w: Complex64) -> Complex64 {
        let lead = w.powf(self.rho);
        if self.gamma == 0.0 {
            return lead;
        }
        lead * (w.powf(-self.alpha) * self.beta + 1.0).powf(self.gamma)
    }

    /// Minimiser of η on (0, ∞) when η is not monotone (ρ < αγ).
    fn turning_point(&self) -> Option<f64> {
        let slope_deficit = self.alpha * self.gamma - self.rho;
        if slope_deficit <= 0.0 {
            return None;
        }
        // βw^{-α}(αγ - ρ) = ρ
        Some((self.rho / (self.beta * slope_deficit)).powf(-1.0 / self.alpha))
    }

    /// Largest w > 0 with η(w) = level, if any.
    pub fn solve(&self, level: f64) -> Option<f64> {
        if !(level > 0.0) {
            return None;
        }
        let mut lo = self.turning_point().unwrap_or(0.0);
        if lo > 0.0 && self.eval(lo) >= level {
            return None;
        }
        if lo == 0.0 && self.eval(f64::MIN_POSITIVE) >= level {
            return None;
        }
        let mut hi = lo.max(1.0);
        while self.eval(hi) < level {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return None;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

/// η(w) = w^ρ (1 + β w^{-α})^γ for w > 0.
pub fn laplace_symbol(sym: &LaplaceSymbol, w: f64) -> Result<f64> {
    if !(w > 0.0) || !w.is_finite() {
        return domain(format!("laplace_symbol requires w > 0, got {w}"));
    }
    Ok(sym.eval(w))
}

/// |rate / η(w)|, the ratio that must stay below one for the geometric
/// expansions of the w-domain forms.
pub fn geometric_ratio(sym: &LaplaceSymbol, rate: f64, w: f64) -> f64 {
    (rate / sym.eval(w)).abs()
}

/// A Laplace-domain function. Real evaluation is always available; complex
/// evaluation enables the Talbot contour.
pub trait Transform {
    fn real(&self, w: f64) -> f64;

    fn complex(&self, _w: Complex64) -> Option<Complex64> {
        None
    }
}

impl<F: Fn(f64) -> f64> Transform for F {
    fn real(&self, w: f64) -> f64 {
        self(w)
    }
}

/// Wraps a function analytic off the negative real axis.
pub struct Analytic<F>(pub F);

impl<F: Fn(Complex64) -> Complex64> Transform for Analytic<F> {
    fn real(&self, w: f64) -> f64 {
        (self.0)(Complex64::new(w, 0.0)).re
    }

    fn complex(&self, w: Complex64) -> Option<Complex64> {
        Some((self.0)(w))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InversionMethod {
    GaverStehfest,
    TalbotContour,
}

/// Numerical inversion settings. `shift` σ inverts F(w + σ) and multiplies
/// by e^{σt}, which moves a real pole at σ onto the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub method: InversionMethod,
    pub order: usize,
    pub t_min: f64,
    pub shift: f64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            method: InversionMethod::GaverStehfest,
            order: 14,
            t_min: 1e-6,
            shift: 0.0,
        }
    }
}

impl InversionConfig {
    pub fn gaver_stehfest(order: usize) -> Result<Self> {
        let cfg = Self {
            order,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn talbot(nodes: usize) -> Result<Self> {
        let cfg = Self {
            method: InversionMethod::TalbotContour,
            order: nodes,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_shift(self, shift: f64) -> Self {
        Self { shift, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        match self.method {
            InversionMethod::GaverStehfest => {
                if !self.order.is_multiple_of(2) || !(8..=20).contains(&self.order) {
                    return domain(format!(
                        "Gaver-Stehfest order must be even and in [8, 20], got {}",
                        self.order
                    ));
                }
            }
            InversionMethod::TalbotContour => {
                if self.order < 16 {
                    return domain(format!(
                        "Talbot needs at least 16 nodes, got {}",
                        self.order
                    ));
                }
            }
        }
        if !(self.t_min > 0.0) || !self.shift.is_finite() {
            return domain("inversion config needs t_min > 0 and a finite shift");
        }
        Ok(())
    }
}

/// Stehfest weights V_1..V_N.
pub fn stehfest_weights(order: usize) -> Vec<f64> {
    let half = order / 2;
    let fact = |n: usize| -> f64 { (1..=n).map(|i| i as f64).product() };
    (1..=order)
        .map(|k| {
            let mut s = 0.0;
            for j in k.div_ceil(2)..=k.min(half) {
                s += (j as f64).powi(half as i32) * fact(2 * j)
                    / (fact(half - j) * fact(j) * fact(j - 1) * fact(k - j) * fact(2 * j - k));
            }
            if (k + half).is_multiple_of(2) {
                s
            } else {
                -s
            }
        })
        .collect()
}

/// Cancellation ratio Σ|V_k F_k| / |Σ V_k F_k| beyond which Gaver-Stehfest
/// output is rejected.
const GS_MAX_CANCELLATION: f64 = 1e10;

/// Inverse Laplace transform at time t.
pub fn invert_laplace<T: Transform + ?Sized>(f: &T, t: f64, cfg: &InversionConfig) -> Result<f64> {
    cfg.validate()?;
    if !(t >= cfg.t_min) || !t.is_finite() {
        return domain(format!("inversion time {t} below t_min {}", cfg.t_min));
    }
    match cfg.method {
        InversionMethod::GaverStehfest => gaver_stehfest(f, t, cfg.order, cfg.shift),
        InversionMethod::TalbotContour => {
            let transform =
                |w: Complex64| f.complex(w).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
            if f.complex(Complex64::new(1.0, 1.0)).is_none() {
                return domain("Talbot inversion needs a transform with complex evaluation");
            }
            let v = talbot_invert(&transform, t, cfg.order, cfg.shift);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Numeric {
                    context: "Talbot inversion (non-finite transform values)",
                    achieved: f64::INFINITY,
                })
            }
        }
    }
}

fn gaver_stehfest<T: Transform + ?Sized>(f: &T, t: f64, order: usize, shift: f64) -> Result<f64> {
    let weights = stehfest_weights(order);
    let a = LN_2 / t;
    let mut acc = NeumaierSum::new();
    let mut mag = 0.0;
    for (i, v) in weights.iter().enumerate() {
        let term = v * f.real((i + 1) as f64 * a + shift);
        acc.add(term);
        mag += term.abs();
    }
    let sum = acc.value();
    let ratio = mag / sum.abs();
    if !sum.is_finite() || !(ratio < GS_MAX_CANCELLATION) {
        return Err(Error::InversionUnstable { t, ratio });
    }
    Ok(a * sum * (shift * t).exp())
}

/// Real-valued inverse transform on Weideman's optimised cotangent contour
/// with `nodes` midpoint nodes.
pub fn talbot_invert<F: Fn(Complex64) -> Complex64>(
    f: &F,
    t: f64,
    nodes: usize,
    shift: f64,
) -> f64 {
    const SIGMA: f64 = -0.6122;
    const MU: f64 = 0.5017;
    const NU: f64 = 0.6407;
    const TAU: f64 = 0.2645;
    let n = nodes as f64;
    let h = 2.0 * PI / n;
    let scale = n / t;
    let mut acc = NeumaierSum::new();
    for k in nodes / 2..nodes {
        let theta = -PI + (k as f64 + 0.5) * h;
        let cot = 1.0 / (NU * theta).tan();
        let sin = (NU * theta).sin();
        let z = Complex64::new(SIGMA + MU * theta * cot, TAU * theta) * scale;
        let dz = Complex64::new(MU * (cot - NU * theta / (sin * sin)), TAU) * scale;
        let g = (z * t).exp() * f(z + shift) * dz;
        acc.add(g.im);
    }
    acc.value() * h / PI * (shift * t).exp()
}

/// Forward transform with the tail estimate of a truncated horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardLaplace {
    pub value: f64,
    pub quad_error: f64,
    pub remainder_bound: f64,
}

/// Horizon T with e^{-wT} < 1e-12.
pub fn default_horizon(w: f64) -> f64 {
    12.0 * std::f64::consts::LN_10 / w
}

/// ∫_0^T e^{-wt} f(t) dt.
pub fn forward_laplace<F: Fn(f64) -> f64>(
    f: F,
    w: f64,
    horizon: f64,
    cfg: &QuadConfig,
) -> Result<ForwardLaplace> {
    if !(w > 0.0) || !(horizon > 0.0) {
        return domain(format!(
            "forward_laplace needs w > 0 and T > 0 (w={w}, T={horizon})"
        ));
    }
    // split so every panel sees at most a unit of decay
    let panels = ((w * horizon).ceil() as usize).clamp(1, 400);
    let points: Vec<f64> = (0..=panels)
        .map(|i| horizon * i as f64 / panels as f64)
        .collect();
    let r = integrate_split(|s| (-w * s).exp() * f(s), &points, cfg)?;
    let lo = (horizon - 1.0).max(0.0);
    let sup = (0..=16)
        .map(|i| f(lo + (horizon - lo) * f64::from(i) / 16.0).abs())
        .fold(0.0, f64::max);
    Ok(ForwardLaplace {
        value: r.value,
        quad_error: r.error,
        remainder_bound: (-w * horizon).exp() * sup,
    })
}
