//! The composed subordinator B(u) = Σ_j L_{ν_j}(Y_j(u)) and its first
//! passage Q(t) = inf{u : B(u) > t}.
//!
//! With m = ⌈γ⌉ the inner clock is one (γ/m)-stable path L(u) and
//! Y_j = C(m, j)·β^j·L(u), so that
//! E e^{-zB(u)} = exp(-u·(Σ_j C(m,j) β^j z^{ν_j})^{γ/m}) = exp(-u·z^ρ(1+βz^{-α})^γ)
//! for ν_j = ρm/γ - jα. The β^j factor is where β enters the composition.

use rand::Rng;

use super::stable::increment_or_drift;
use crate::analytics::ProcessParams;
use crate::error::{domain, Error, Result};

/// Samples of B on a uniform u-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubordinatorGrid {
    pub u_grid: Vec<f64>,
    pub b_values: Vec<f64>,
}

impl SubordinatorGrid {
    /// Midpoint of the first grid interval on which B exceeds `level`.
    pub fn first_passage(&self, level: f64) -> Option<f64> {
        let k = self.b_values.partition_point(|&b| b <= level);
        if k == 0 {
            return Some(0.0);
        }
        if k == self.b_values.len() {
            return None;
        }
        Some(0.5 * (self.u_grid[k - 1] + self.u_grid[k]))
    }

    /// Every `factor`-th point; exact, since B is stored cumulatively.
    pub fn coarsen(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let pick = |v: &[f64]| v.iter().step_by(factor).copied().collect::<Vec<_>>();
        Self {
            u_grid: pick(&self.u_grid),
            b_values: pick(&self.b_values),
        }
    }
}

/// Step-size rule for the first-passage grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Fixed Δu.
    Absolute(f64),
    /// Δu as a fraction of E Q(t).
    Relative(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub step: StepRule,
    pub max_steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            step: StepRule::Relative(1e-3),
            max_steps: 10_000_000,
        }
    }
}

/// Stable indices and scales of the composition.
#[derive(Debug, Clone)]
pub(crate) struct Composition {
    inner: Option<f64>,
    outer: Vec<(f64, f64)>,
}

impl Composition {
    pub fn new(params: &ProcessParams) -> Result<Self> {
        if !params.is_simulable() {
            return Err(Error::UnsupportedRegime(format!(
                "stable indices {:?} are not all in (0, 1]; the subordinator composition does not exist",
                params.outer_indices()
            )));
        }
        if params.gamma == 0.0 {
            return Ok(Self {
                inner: None,
                outer: vec![(params.rho, 1.0)],
            });
        }
        let m = params.ceil_gamma();
        let outer = params
            .outer_indices()
            .into_iter()
            .enumerate()
            .map(|(j, nu)| (nu, binomial(m, j as u32) * params.beta.powi(j as i32)))
            .collect();
        Ok(Self {
            inner: Some(params.gamma / f64::from(m)),
            outer,
        })
    }

    /// B is the identity when the symbol is w.
    pub fn is_identity(&self) -> bool {
        self.inner.is_none() && self.outer[0].0 == 1.0
    }

    pub fn step<R: Rng + ?Sized>(&self, du: f64, rng: &mut R) -> f64 {
        match self.inner {
            None => increment_or_drift(self.outer[0].0, du, rng),
            Some(inner) => {
                let dl = increment_or_drift(inner, du, rng);
                self.outer
                    .iter()
                    .map(|&(nu, scale)| increment_or_drift(nu, scale * dl, rng))
                    .sum()
            }
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// B on the grid u_i = i·u_max/n_grid, i = 0..=n_grid.
pub fn simulate_b<R: Rng + ?Sized>(
    params: &ProcessParams,
    u_max: f64,
    n_grid: usize,
    rng: &mut R,
) -> Result<SubordinatorGrid> {
    if !(u_max > 0.0) || !u_max.is_finite() || n_grid == 0 {
        return domain(format!(
            "need u_max > 0 and n_grid >= 1 (u_max={u_max}, n_grid={n_grid})"
        ));
    }
    let comp = Composition::new(params)?;
    let du = u_max / n_grid as f64;
    let mut u_grid = Vec::with_capacity(n_grid + 1);
    let mut b_values = Vec::with_capacity(n_grid + 1);
    let mut b = 0.0;
    u_grid.push(0.0);
    b_values.push(0.0);
    for i in 1..=n_grid {
        let db = comp.step(du, rng);
        if !(db >= 0.0) || !db.is_finite() {
            return Err(Error::Consistency(format!(
                "subordinator increment {db} at step {i}"
            )));
        }
        b += db;
        u_grid.push(i as f64 * du);
        b_values.push(b);
    }
    Ok(SubordinatorGrid { u_grid, b_values })
}

/// Δu used by [`sample_q`] at time `t`.
pub fn step_size(params: &ProcessParams, t: f64, cfg: &GridConfig) -> Result<f64> {
    let du = match cfg.step {
        StepRule::Absolute(du) => du,
        StepRule::Relative(frac) => frac * crate::analytics::clock_mean(params, t)?,
    };
    if !(du > 0.0) || !du.is_finite() {
        return domain(format!("grid step must be finite and > 0, got {du}"));
    }
    Ok(du)
}

/// Q(t) as the bracketing midpoint of the first grid step on which B
/// exceeds t; bias at most Δu/2.
pub fn sample_q<R: Rng + ?Sized>(
    params: &ProcessParams,
    t: f64,
    cfg: &GridConfig,
    rng: &mut R,
) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return domain(format!("time must be finite and >= 0, got {t}"));
    }
    let comp = Composition::new(params)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    if comp.is_identity() {
        return Ok(t);
    }
    let du = step_size(params, t, cfg)?;
    first_passage_with(&comp, t, du, cfg.max_steps, rng)
}

pub(crate) fn first_passage_with<R: Rng + ?Sized>(
    comp: &Composition,
    level: f64,
    du: f64,
    max_steps: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut b = 0.0;
    for k in 1..=max_steps {
        b += comp.step(du, rng);
        if b > level {
            return Ok((k as f64 - 0.5) * du);
        }
    }
    Err(Error::Horizon { level, max_steps })
}
