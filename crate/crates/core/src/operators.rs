//! Prabhakar integral and regularized Hilfer-Prabhakar derivative applied
//! to functions known on a time grid.
//!
//! Both operators integrate a kernel τ^{p-1}·K(τ) against the input at
//! s = t - τ. The weak endpoint singularity is absorbed by v = τ^p/p, so
//! dv = τ^{p-1} dτ and the quadrature only sees the bounded factor K.

use crate::analytics::ProcessParams;
use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_split, QuadConfig};
use crate::special::{gamma, ml_series, DEFAULT_TERM_CAP};

pub use crate::analytics::PrabhakarIntegralParams;

const KERNEL_TOL: f64 = 1e-15;

/// A function of time with a derivative and the points where either is
/// not smooth.
pub trait TimeFunction {
    fn value(&self, t: f64) -> f64;
    fn derivative(&self, t: f64) -> f64;
    fn breakpoints(&self) -> &[f64] {
        &[]
    }
    /// Largest time at which the function is defined.
    fn horizon(&self) -> f64 {
        f64::INFINITY
    }
}

/// A closed-form function and its derivative.
#[derive(Debug, Clone, Copy)]
pub struct Analytic<V, D> {
    pub value: V,
    pub derivative: D,
}

impl<V: Fn(f64) -> f64, D: Fn(f64) -> f64> TimeFunction for Analytic<V, D> {
    fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    fn derivative(&self, t: f64) -> f64 {
        (self.derivative)(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Linear,
    #[default]
    CubicMonotone,
}

/// Values on a grid 0 = t₀ < t₁ < … < t_N with an interpolant between.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    interpolation: Interpolation,
}

impl SampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if grid.len() < 2 || grid.len() != values.len() {
            return domain(format!(
                "need at least two samples and matching lengths (grid {}, values {})",
                grid.len(),
                values.len()
            ));
        }
        if grid[0] != 0.0 {
            return domain(format!("grid must start at 0, got {}", grid[0]));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || !grid.iter().all(|t| t.is_finite()) {
            return domain("grid must be finite and strictly increasing");
        }
        if !values.iter().all(|v| v.is_finite()) {
            return domain("sampled values must be finite");
        }
        let slopes = match interpolation {
            Interpolation::Linear => Vec::new(),
            Interpolation::CubicMonotone => pchip_slopes(&grid, &values),
        };
        Ok(Self {
            grid,
            values,
            slopes,
            interpolation,
        })
    }

    /// Samples `f` on `grid`.
    pub fn from_fn<F: FnMut(f64) -> f64>(
        grid: Vec<f64>,
        mut f: F,
        interpolation: Interpolation,
    ) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values, interpolation)
    }

    /// Like [`from_fn`](Self::from_fn) for a fallible sampler.
    pub fn try_from_fn<F: FnMut(f64) -> Result<f64>>(
        grid: Vec<f64>,
        mut f: F,
        interpolation: Interpolation,
    ) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, values, interpolation)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Index i with grid[i] ≤ t ≤ grid[i+1], clamped to the end segments.
    fn segment(&self, t: f64) -> usize {
        let i = self.grid.partition_point(|&g| g <= t);
        i.saturating_sub(1).min(self.grid.len() - 2)
    }

    fn hermite(&self, i: usize, t: f64) -> (f64, f64) {
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let h = x1 - x0;
        match self.interpolation {
            Interpolation::Linear => {
                let slope = (y1 - y0) / h;
                (y0 + slope * (t - x0), slope)
            }
            Interpolation::CubicMonotone => {
                let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
                let u = (t - x0) / h;
                let u2 = u * u;
                let u3 = u2 * u;
                let value = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
                    + (u3 - 2.0 * u2 + u) * h * d0
                    + (-2.0 * u3 + 3.0 * u2) * y1
                    + (u3 - u2) * h * d1;
                let deriv = (6.0 * u2 - 6.0 * u) / h * y0
                    + (3.0 * u2 - 4.0 * u + 1.0) * d0
                    + (-6.0 * u2 + 6.0 * u) / h * y1
                    + (3.0 * u2 - 2.0 * u) * d1;
                (value, deriv)
            }
        }
    }
}

impl TimeFunction for SampledFunction {
    fn value(&self, t: f64) -> f64 {
        self.hermite(self.segment(t), t).0
    }

    fn derivative(&self, t: f64) -> f64 {
        self.hermite(self.segment(t), t).1
    }

    fn breakpoints(&self) -> &[f64] {
        &self.grid
    }

    fn horizon(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }
}

/// Fritsch-Carlson slopes with the shape-preserving three-point end rule.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a * b > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / a + w2 / b);
        }
    }
    let end = |h0: f64, h1: f64, m0: f64, m1: f64| {
        let s = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if s.signum() != m0.signum() {
            0.0
        } else if m0.signum() != m1.signum() && s.abs() > 3.0 * m0.abs() {
            3.0 * m0
        } else {
            s
        }
    };
    d[0] = end(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// 0 followed by `n - 1` points geometric from `first` to `t_max`.
pub fn geometric_grid(t_max: f64, n: usize, first: f64) -> Result<Vec<f64>> {
    if n < 3 || !(first > 0.0) || !(t_max > first) || !t_max.is_finite() {
        return domain(format!(
            "geometric grid needs n >= 3 and 0 < first < t_max (n={n}, first={first}, t_max={t_max})"
        ));
    }
    let ratio = (t_max / first).ln() / (n - 2) as f64;
    let mut grid = Vec::with_capacity(n);
    grid.push(0.0);
    for i in 0..n - 1 {
        grid.push(first * (ratio * i as f64).exp());
    }
    grid[n - 1] = t_max;
    Ok(grid)
}

/// Residual-check grid: 400 points on [0, t_max], geometric near 0.
pub fn residual_grid(t_max: f64) -> Result<Vec<f64>> {
    geometric_grid(t_max, 400, t_max * 1e-6)
}

/// Scaled Prabhakar function Γ-free factor E^g_{α,b}(c τ^α).
fn kernel_factor(alpha: f64, b: f64, g: f64, c: f64, tau: f64) -> Result<f64> {
    let out = ml_series(
        alpha,
        b,
        g,
        c * tau.powf(alpha),
        0.0,
        KERNEL_TOL,
        DEFAULT_TERM_CAP,
    );
    if out.capped || !out.sum.is_finite() {
        return Err(Error::Numeric {
            context: "operator kernel (Prabhakar function)",
            achieved: out.last_term.abs(),
        });
    }
    Ok(out.sum)
}

/// ∫₀ᵗ τ^{p-1} E^g_{α,b}(cτ^α) h(t-τ) dτ with v = τ^p/p.
fn weighted_integral<H: Fn(f64) -> f64>(
    h: H,
    breakpoints: &[f64],
    t: f64,
    p: f64,
    kernel: (f64, f64, f64, f64),
    rel_tol: f64,
) -> Result<f64> {
    let (alpha, b, g, c) = kernel;
    let plain = g == 0.0;
    let rg = if plain { 1.0 / gamma(b)? } else { 0.0 };
    let failure = std::cell::RefCell::new(None);
    let integrand = |v: f64| -> f64 {
        let tau = (p * v).powf(1.0 / p).min(t);
        let k = if plain {
            rg
        } else {
            match kernel_factor(alpha, b, g, c, tau) {
                Ok(k) => k,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    return 0.0;
                }
            }
        };
        k * h(t - tau)
    };
    let v_max = t.powf(p) / p;
    let mut points: Vec<f64> = breakpoints
        .iter()
        .filter(|&&s| s > 0.0 && s < t)
        .map(|&s| (t - s).powf(p) / p)
        .collect();
    points.push(0.0);
    points.push(v_max);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let cfg = QuadConfig {
        abs_tol: 1e-15,
        rel_tol,
        max_intervals: 20 * points.len() + 2000,
    };
    let r = integrate_split(integrand, &points, &cfg);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(r?.value)
}

fn check_time<F: TimeFunction + ?Sized>(f: &F, t: f64) -> Result<()> {
    if !(t > 0.0) || t > f.horizon() * (1.0 + 1e-12) {
        return domain(format!("t = {t} outside (0, {}]", f.horizon()));
    }
    Ok(())
}

/// ∫₀ᵗ (t-s)^{ρ′-1} E^{γ′}_{α′,ρ′}(β′(t-s)^{α′}) g(s) ds.
pub fn prabhakar_integral_apply<G: TimeFunction + ?Sized>(
    g: &G,
    ip: &PrabhakarIntegralParams,
    t: f64,
) -> Result<f64> {
    check_time(g, t)?;
    let kernel = (ip.alpha_p, ip.rho_p, ip.gamma_p, ip.beta_p);
    weighted_integral(|s| g.value(s), g.breakpoints(), t, ip.rho_p, kernel, 1e-10)
}

/// ∫₀ᵗ (t-s)^{-ρ} E^{-γ}_{α,1-ρ}(-β(t-s)^α) f′(s) ds, the regularized
/// Hilfer-Prabhakar derivative with the process's symbol.
pub fn rhp_derivative_apply<F: TimeFunction + ?Sized>(
    f: &F,
    params: &ProcessParams,
    t: f64,
) -> Result<f64> {
    check_time(f, t)?;
    let (alpha, beta, gamma, rho) = (params.alpha, params.beta, params.gamma, params.rho);
    let deriv = |s: f64| f.derivative(s);
    if rho < 1.0 {
        let kernel = (alpha, 1.0 - rho, -gamma, -beta);
        return weighted_integral(deriv, f.breakpoints(), t, 1.0 - rho, kernel, 1e-10);
    }
    let local = f.derivative(t);
    if gamma == 0.0 {
        return Ok(local);
    }
    // τ^{-1}E^{-γ}_{α,0}(-βτ^α) = αβγ τ^{α-1} E^{1-γ}_{α,α+1}(-βτ^α) plus the
    // point mass at τ = 0
    let kernel = (alpha, alpha + 1.0, 1.0 - gamma, -beta);
    let memory = weighted_integral(deriv, f.breakpoints(), t, alpha, kernel, 1e-10)?;
    Ok(local + alpha * beta * gamma * memory)
}

/// ∫₀ᵗ (t-s)^{-ρ} f′(s) ds / Γ(1-ρ); the plain derivative at ρ = 1.
pub fn caputo_derivative_apply<F: TimeFunction + ?Sized>(f: &F, rho: f64, t: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return domain(format!("Caputo order must lie in (0, 1], got {rho}"));
    }
    check_time(f, t)?;
    if rho == 1.0 {
        return Ok(f.derivative(t));
    }
    let kernel = (1.0, 1.0 - rho, 0.0, 0.0);
    weighted_integral(
        |s| f.derivative(s),
        f.breakpoints(),
        t,
        1.0 - rho,
        kernel,
        1e-10,
    )
}

/// One checkpoint of the forward system D p_n = -n(λ+μ)p_n + (n-1)λp_{n-1} + (n+1)μp_{n+1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualPoint {
    pub t: f64,
    /// Fractional derivative of the sampled p_n.
    pub lhs: f64,
    /// Right-hand side from analytic values.
    pub rhs: f64,
    /// Largest magnitude among the terms of the equation.
    pub scale: f64,
}

impl ResidualPoint {
    pub fn relative(&self) -> f64 {
        (self.lhs - self.rhs).abs() / self.scale.max(f64::MIN_POSITIVE)
    }
}

fn state_value(params: &ProcessParams, n: u32, t: f64) -> Result<f64> {
    if n == 0 {
        crate::analytics::extinction_prob(params, t)
    } else {
        crate::analytics::state_prob(params, n, t)
    }
}

/// Residual of row `n` of the forward equations with p_n sampled on the
/// residual grid over [0, max(checkpoints)].
pub fn state_equation_residuals(
    params: &ProcessParams,
    n: u32,
    checkpoints: &[f64],
) -> Result<Vec<ResidualPoint>> {
    use rayon::prelude::*;
    let t_max = checkpoints.iter().cloned().fold(f64::NAN, f64::max);
    if !(t_max > 0.0) || checkpoints.iter().any(|&t| !(t > 0.0)) {
        return domain("checkpoints must be positive");
    }
    let grid = residual_grid(t_max)?;
    let values = grid
        .par_iter()
        .map(|&t| state_value(params, n, t))
        .collect::<Result<Vec<_>>>()?;
    let f = SampledFunction::new(grid, values, Interpolation::CubicMonotone)?;
    let (lambda, mu) = (params.lambda, params.mu);
    checkpoints
        .par_iter()
        .map(|&t| {
            let lhs = rhp_derivative_apply(&f, params, t)?;
            let nf = f64::from(n);
            let own = -nf * (lambda + mu) * state_value(params, n, t)?;
            let below = if n >= 2 {
                (nf - 1.0) * lambda * state_value(params, n - 1, t)?
            } else {
                0.0
            };
            let above = (nf + 1.0) * mu * state_value(params, n + 1, t)?;
            let scale = [lhs, own, below, above]
                .iter()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            Ok(ResidualPoint {
                t,
                lhs,
                rhs: own + below + above,
                scale,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::mittag_leffler;
    use proptest::prelude::*;

    fn sampled<F: Fn(f64) -> f64>(t_max: f64, f: F) -> SampledFunction {
        SampledFunction::from_fn(
            residual_grid(t_max).unwrap(),
            f,
            Interpolation::CubicMonotone,
        )
        .unwrap()
    }

    fn ip(alpha: f64, rho: f64, beta: f64, gamma: f64) -> PrabhakarIntegralParams {
        PrabhakarIntegralParams::new(alpha, rho, beta, gamma).unwrap()
    }

    #[test]
    fn integral_examples() {
        let one = sampled(2.0, |_| 1.0);
        let v = prabhakar_integral_apply(&one, &ip(0.5, 1.0, 1.0, 0.0), 1.5).unwrap();
        assert!((v - 1.5).abs() < 1e-12);
        let v = prabhakar_integral_apply(&one, &ip(0.5, 0.5, 1.0, 0.0), 1.0).unwrap();
        assert!((v - 2.0 / std::f64::consts::PI.sqrt()).abs() < 1e-9);
        let lin = sampled(2.0, |s| s);
        let v = prabhakar_integral_apply(&lin, &ip(0.5, 0.5, 1.0, 0.0), 1.0).unwrap();
        assert!((v - 1.0 / gamma(2.5).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn integral_of_one_with_memory() {
        // ∫₀ᵗ τ^{ρ-1}E^γ_{α,ρ}(βτ^α) dτ = t^ρ E^γ_{α,ρ+1}(βt^α)
        let one = sampled(2.0, |_| 1.0);
        let (a, r, b, g, t) = (0.6, 0.7, 0.8, 1.4, 1.7);
        let v = prabhakar_integral_apply(&one, &ip(a, r, b, g), t).unwrap();
        let args = crate::special::MlArgs::new(a, r + 1.0, g, b * t.powf(a)).unwrap();
        let want = t.powf(r) * crate::special::mittag_leffler_3p(&args).unwrap();
        assert!((v - want).abs() < 1e-8 * want, "{v} vs {want}");
    }

    #[test]
    fn derivative_examples() {
        let sq = Analytic {
            value: |s: f64| s * s,
            derivative: |s: f64| 2.0 * s,
        };
        let p = ProcessParams::new(1.0, 1.0, 0.5, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(rhp_derivative_apply(&sq, &p, 2.0).unwrap(), 4.0);
        assert_eq!(caputo_derivative_apply(&sq, 1.0, 2.0).unwrap(), 4.0);
        // interpolant derivatives are second-order accurate
        let sampled_sq = sampled(3.0, |s| s * s);
        assert!((rhp_derivative_apply(&sampled_sq, &p, 2.0).unwrap() - 4.0).abs() < 1e-3);

        let lin = sampled(2.0, |s| s);
        let p = ProcessParams::new(1.0, 1.0, 0.5, 1.0, 0.0, 0.5).unwrap();
        let want = 2.0 / std::f64::consts::PI.sqrt();
        assert!((rhp_derivative_apply(&lin, &p, 1.0).unwrap() - want).abs() < 1e-8);
        assert!((caputo_derivative_apply(&lin, 0.5, 1.0).unwrap() - want).abs() < 1e-8);
    }

    #[test]
    fn point_mass_branch_matches_its_transform() {
        // ρ = 1: the symbol (1+βw^{-α})^γ sends t to E^{-γ}_{α,1}(-βt^α)
        let lin = Analytic {
            value: |s: f64| s,
            derivative: |_: f64| 1.0,
        };
        let (a, b, g, t): (f64, f64, f64, f64) = (0.5, 0.8, 0.6, 1.3);
        let p = ProcessParams::new_unconstrained(1.0, 1.0, a, b, g, 1.0).unwrap();
        let want = ml_series(a, 1.0, -g, -b * t.powf(a), 0.0, 1e-15, DEFAULT_TERM_CAP).sum;
        let got = rhp_derivative_apply(&lin, &p, t).unwrap();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn caputo_eigenfunction() {
        let (rho, c) = (0.7, 1.0);
        let f = sampled(1.0, |s| mittag_leffler(rho, 1.0, -c * s.powf(rho)).unwrap());
        let d = caputo_derivative_apply(&f, rho, 1.0).unwrap();
        let want = -c * f.value(1.0);
        assert!((d - want).abs() < 1e-3 * want.abs(), "{d} vs {want}");
    }

    #[test]
    fn mean_satisfies_its_governing_equation() {
        // ρ = 1 with γ > 0 exercises the point-mass branch of the kernel
        for (gamma, rho, alpha) in [
            (0.0, 0.8, 0.5),
            (0.4, 0.35, 0.6),
            (0.9, 0.8, 0.5),
            (0.5, 1.0, 0.5),
        ] {
            let p = ProcessParams::new_unconstrained(2.0, 1.0, alpha, 1.0, gamma, rho).unwrap();
            let f = SampledFunction::try_from_fn(
                residual_grid(2.0).unwrap(),
                |s| crate::analytics::mean_gflbdp(&p, s, 1e-12),
                Interpolation::CubicMonotone,
            )
            .unwrap();
            for t in [0.5, 1.0, 2.0] {
                let d = rhp_derivative_apply(&f, &p, t).unwrap();
                let want = (p.lambda - p.mu) * f.value(t);
                assert!(
                    (d - want).abs() < 1e-3 * want,
                    "γ={gamma} t={t}: {d} vs {want}"
                );
            }
        }
    }

    #[test]
    fn pchip_reproduces_samples_and_keeps_monotone_data_monotone() {
        let grid = vec![0.0, 0.5, 1.0, 2.0, 2.5];
        let values = vec![0.0, 0.1, 0.9, 1.0, 1.0];
        let f = SampledFunction::new(grid.clone(), values.clone(), Interpolation::CubicMonotone)
            .unwrap();
        for (t, v) in grid.iter().zip(&values) {
            assert!((f.value(*t) - v).abs() < 1e-15);
        }
        let mut prev = f.value(0.0);
        for i in 1..=250 {
            let v = f.value(i as f64 * 0.01);
            assert!(v >= prev - 1e-15);
            prev = v;
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(
            SampledFunction::new(vec![0.1, 0.2], vec![1.0, 1.0], Interpolation::Linear).is_err()
        );
        assert!(
            SampledFunction::new(vec![0.0, 0.0], vec![1.0, 1.0], Interpolation::Linear).is_err()
        );
        assert!(
            SampledFunction::new(vec![0.0, 1.0], vec![1.0, f64::NAN], Interpolation::Linear)
                .is_err()
        );
        let one = sampled(1.0, |_| 1.0);
        assert!(prabhakar_integral_apply(&one, &ip(0.5, 0.5, 1.0, 0.0), 1.5).is_err());
        assert!(caputo_derivative_apply(&one, 1.5, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn integral_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, rho in 0.2f64..1.0) {
            let grid = residual_grid(1.0).unwrap();
            // the monotone cubic is not linear in the data; the linear interpolant is
            let f = SampledFunction::from_fn(grid.clone(), |s| s.sin(), Interpolation::Linear).unwrap();
            let g = SampledFunction::from_fn(grid.clone(), |s| s * s, Interpolation::Linear).unwrap();
            let h = SampledFunction::from_fn(grid, |s| a * s.sin() + b * s * s, Interpolation::Linear).unwrap();
            let k = ip(0.5, rho, 0.7, 0.6);
            let lhs = prabhakar_integral_apply(&h, &k, 0.9).unwrap();
            let rhs = a * prabhakar_integral_apply(&f, &k, 0.9).unwrap() + b * prabhakar_integral_apply(&g, &k, 0.9).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-7 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn forward_equations_hold_for_analytic_probabilities() {
        let p = ProcessParams::new(1.0, 0.5, 0.6, 1.0, 0.4, 0.35).unwrap();
        for n in 0..=2 {
            for r in state_equation_residuals(&p, n, &[0.2, 1.0, 2.0]).unwrap() {
                assert!(r.relative() < 1e-2, "n={n}: {r:?}");
            }
        }
    }
}
