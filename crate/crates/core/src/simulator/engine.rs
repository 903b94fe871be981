//! Replicated estimators with per-path random streams.
//!
//! Path i draws from ChaCha8 seeded with `seed` on stream i, so every path
//! sees the same numbers whatever thread runs it. Per-path values are
//! collected in index order and summed sequentially.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::gillespie::{
    bounded_endpoint, gillespie_lbdp, linear_endpoint, SamplePath, DEFAULT_MAX_JUMPS,
};
use super::subordinator::{first_passage_with, step_size, Composition, GridConfig};
use crate::analytics::{GeneticParams, ProcessParams};
use crate::error::{domain, Error, Result};
use crate::summation::NeumaierSum;

/// Minimum replication count accepted by [`mc_estimate`].
pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McKind {
    /// E N(Q(t)).
    Mean,
    /// Var N(Q(t)).
    Variance,
    /// Pr{N(Q(t)) = 0}.
    Extinction,
    /// Pr{N(Q(t)) = n}.
    StatePmf(u32),
    /// E exp(iuN + ivY) with Y the time-changed path integral.
    JointCf { u: f64, v: f64 },
    /// E ∫₀^{Q(t)} N(s) ds.
    PathIntegralMean,
    /// E exp(-zQ(t)).
    ClockLaplace(f64),
    /// E X(Q(t)) for the bounded genetic chain with an inverse ρ-stable clock.
    GeneticMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Process(ProcessParams),
    Genetic(GeneticParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MCEstimate {
    pub value: f64,
    /// Sample standard deviation over √n_paths.
    pub stderr: f64,
    /// Paths that entered the estimate.
    pub n_paths: usize,
    pub seed: u64,
    /// Paths dropped after hitting a jump or step cap.
    pub failures: usize,
    /// Imaginary part and its standard error, for [`McKind::JointCf`].
    pub imag: Option<(f64, f64)>,
}

impl MCEstimate {
    pub fn failure_fraction(&self) -> f64 {
        self.failures as f64 / (self.failures + self.n_paths) as f64
    }
}

/// Everything a path needs that does not depend on the random stream.
struct Sampler {
    comp: Composition,
    t: f64,
    du: f64,
    max_steps: usize,
}

impl Sampler {
    fn new(clock: &ProcessParams, t: f64, cfg: &GridConfig) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return domain(format!("time must be finite and >= 0, got {t}"));
        }
        let comp = Composition::new(clock)?;
        let du = if t == 0.0 || comp.is_identity() {
            0.0
        } else {
            step_size(clock, t, cfg)?
        };
        Ok(Self {
            comp,
            t,
            du,
            max_steps: cfg.max_steps,
        })
    }

    fn clock(&self, rng: &mut ChaCha8Rng) -> Result<f64> {
        if self.t == 0.0 {
            Ok(0.0)
        } else if self.comp.is_identity() {
            Ok(self.t)
        } else {
            first_passage_with(&self.comp, self.t, self.du, self.max_steps, rng)
        }
    }
}

/// Random stream of path `index` under `seed`.
pub fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// (N(Q(t)), ∫₀^{Q(t)} N) from one initial individual.
pub fn sample_gflbdp<R: rand::Rng + ?Sized>(
    params: &ProcessParams,
    t: f64,
    rng: &mut R,
) -> Result<(u64, f64)> {
    sample_gflbdp_with(params, t, &GridConfig::default(), rng)
}

pub fn sample_gflbdp_with<R: rand::Rng + ?Sized>(
    params: &ProcessParams,
    t: f64,
    cfg: &GridConfig,
    rng: &mut R,
) -> Result<(u64, f64)> {
    let q = super::subordinator::sample_q(params, t, cfg, rng)?;
    linear_endpoint(params.lambda, params.mu, q, DEFAULT_MAX_JUMPS, rng)
}

/// A trajectory of N(Q(s)) on [0, t] from one initial individual.
///
/// B is simulated on the grid of [`GridConfig`] and interpolated linearly
/// between grid points, so Q is continuous and each jump of N at
/// operational time τ lands at the real time where the interpolated B
/// passes τ. Several jumps inside one grid step are spread over it in order.
pub fn sample_gflbdp_path<R: rand::Rng + ?Sized>(
    params: &ProcessParams,
    t: f64,
    cfg: &GridConfig,
    rng: &mut R,
) -> Result<SamplePath> {
    if !(t > 0.0) || !t.is_finite() {
        return domain(format!("path horizon must be finite and > 0, got {t}"));
    }
    let comp = Composition::new(params)?;
    if comp.is_identity() {
        return gillespie_lbdp(params.lambda, params.mu, 1, t, rng);
    }
    let du = step_size(params, t, cfg)?;
    let mut b = vec![0.0];
    while b[b.len() - 1] <= t {
        if b.len() > cfg.max_steps {
            return Err(Error::Horizon {
                level: t,
                max_steps: cfg.max_steps,
            });
        }
        let next = b[b.len() - 1] + comp.step(du, rng);
        b.push(next);
    }
    let k = b.len() - 1;
    let q_end = du * ((k - 1) as f64 + (t - b[k - 1]) / (b[k] - b[k - 1]));
    let inner = gillespie_lbdp(params.lambda, params.mu, 1, q_end, rng)?;
    let real_time = |tau: f64| {
        let i = ((tau / du).floor() as usize).min(k - 1);
        let frac = tau / du - i as f64;
        (b[i] + frac * (b[i + 1] - b[i])).min(t)
    };
    Ok(SamplePath {
        jump_times: inner.jump_times.iter().map(|&tau| real_time(tau)).collect(),
        states: inner.states,
        absorbed: inner.absorbed,
        horizon: t,
    })
}

/// Per-path observable; the second slot is only used by the joint CF.
fn observe(
    kind: McKind,
    model: &Model,
    sampler: &Sampler,
    rng: &mut ChaCha8Rng,
) -> Result<[f64; 2]> {
    let q = sampler.clock(rng)?;
    let scalar = |x: f64| Ok([x, 0.0]);
    match (kind, model) {
        (McKind::ClockLaplace(z), _) => scalar((-z * q).exp()),
        (McKind::GeneticMean, Model::Genetic(gp)) => scalar(bounded_endpoint(gp, q, rng)? as f64),
        (_, Model::Process(p)) => {
            let (n, y) = linear_endpoint(p.lambda, p.mu, q, DEFAULT_MAX_JUMPS, rng)?;
            let n_f = n as f64;
            match kind {
                McKind::Mean | McKind::Variance => scalar(n_f),
                McKind::Extinction => scalar(f64::from(u8::from(n == 0))),
                McKind::StatePmf(k) => scalar(f64::from(u8::from(n == u64::from(k)))),
                McKind::PathIntegralMean => scalar(y),
                McKind::JointCf { u, v } => {
                    let phase = u * n_f + v * y;
                    Ok([phase.cos(), phase.sin()])
                }
                McKind::ClockLaplace(_) | McKind::GeneticMean => unreachable!(),
            }
        }
        (_, Model::Genetic(_)) => domain(format!("{kind:?} is not defined for the genetic model")),
    }
}

fn check_kind(kind: McKind, model: &Model) -> Result<()> {
    match (kind, model) {
        (McKind::GeneticMean, Model::Process(_)) => domain("GeneticMean needs genetic parameters"),
        (McKind::ClockLaplace(_) | McKind::GeneticMean, Model::Genetic(_)) => Ok(()),
        (_, Model::Genetic(_)) => domain(format!("{kind:?} is not defined for the genetic model")),
        (McKind::ClockLaplace(z), _) if !(z >= 0.0) => {
            domain(format!("Laplace argument must be >= 0, got {z}"))
        }
        (McKind::JointCf { u, v }, _) if !(u.is_finite() && v.is_finite()) => {
            domain("u and v must be finite")
        }
        _ => Ok(()),
    }
}

/// The clock driving the model: the process's own, or the inverse ρ-stable
/// subordinator for the genetic chain.
fn clock_params(model: &Model) -> Result<ProcessParams> {
    match model {
        Model::Process(p) => Ok(*p),
        Model::Genetic(gp) => ProcessParams::new(1.0, 1.0, 1.0, 1.0, 0.0, gp.rho),
    }
}

fn mean_stderr(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mut sum = NeumaierSum::new();
    xs.clone().for_each(|x| sum.add(x));
    let mean = sum.value() / n as f64;
    let mut ss = NeumaierSum::new();
    xs.for_each(|x| ss.add((x - mean) * (x - mean)));
    let var = if n > 1 {
        ss.value() / (n - 1) as f64
    } else {
        0.0
    };
    (mean, (var / n as f64).sqrt())
}

/// Sample variance with the large-sample standard error √((m₄ - s⁴)/n).
fn variance_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let (mean, _) = mean_stderr(xs.iter().copied(), xs.len());
    let mut m2 = NeumaierSum::new();
    let mut m4 = NeumaierSum::new();
    for &x in xs {
        let d2 = (x - mean) * (x - mean);
        m2.add(d2);
        m4.add(d2 * d2);
    }
    let s2 = m2.value() / (n - 1.0);
    let m4 = m4.value() / n;
    (s2, ((m4 - s2 * s2).max(0.0) / n).sqrt())
}

pub fn mc_estimate(
    kind: McKind,
    model: &Model,
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<MCEstimate> {
    mc_estimate_with(kind, model, t, n_paths, seed, &GridConfig::default())
}

/// Runs `n_paths` replications of `kind`. Paths that hit a jump or step cap
/// are counted in `failures`; other errors abort the estimate.
pub fn mc_estimate_with(
    kind: McKind,
    model: &Model,
    t: f64,
    n_paths: usize,
    seed: u64,
    cfg: &GridConfig,
) -> Result<MCEstimate> {
    if n_paths < MIN_PATHS {
        return domain(format!("need at least {MIN_PATHS} paths, got {n_paths}"));
    }
    check_kind(kind, model)?;
    let sampler = Sampler::new(&clock_params(model)?, t, cfg)?;
    let outcomes: Vec<Result<[f64; 2]>> = (0..n_paths)
        .into_par_iter()
        .map(|i| observe(kind, model, &sampler, &mut path_rng(seed, i)))
        .collect();

    let mut values = Vec::with_capacity(n_paths);
    let mut failures = 0;
    for outcome in outcomes {
        match outcome {
            Ok(v) => values.push(v),
            Err(Error::PathCap(_) | Error::Horizon { .. }) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    let n = values.len();
    if n < 2 {
        return Err(Error::Numeric {
            context: "fewer than two paths finished inside the simulation caps",
            achieved: failures as f64 / n_paths as f64,
        });
    }
    let (value, stderr, imag) = match kind {
        McKind::Variance => {
            let xs: Vec<f64> = values.iter().map(|v| v[0]).collect();
            let (v, se) = variance_stderr(&xs);
            (v, se, None)
        }
        McKind::JointCf { .. } => {
            let (re, re_se) = mean_stderr(values.iter().map(|v| v[0]), n);
            let (im, im_se) = mean_stderr(values.iter().map(|v| v[1]), n);
            (re, re_se, Some((im, im_se)))
        }
        _ => {
            let (m, se) = mean_stderr(values.iter().map(|v| v[0]), n);
            (m, se, None)
        }
    };
    Ok(MCEstimate {
        value,
        stderr,
        n_paths: n,
        seed,
        failures,
        imag,
    })
}

/// Mean first passage E Q(t) estimated with steps 2Δu, Δu and Δu/2 on
/// shared paths (the coarse grids are subsets of the fine one).
pub fn refinement_means(
    params: &ProcessParams,
    t: f64,
    du: f64,
    n_paths: usize,
    seed: u64,
) -> Result<[f64; 3]> {
    if !(t > 0.0) || !(du > 0.0) || n_paths < 2 {
        return domain(format!(
            "need t > 0, du > 0 and n_paths >= 2 (t={t}, du={du}, n_paths={n_paths})"
        ));
    }
    let comp = Composition::new(params)?;
    let h = 0.5 * du;
    let max_steps = GridConfig::default().max_steps;
    let per_path: Vec<Result<[f64; 3]>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i);
            let mut hits = [None; 3];
            let mut b = 0.0;
            for k in 1..=max_steps {
                b += comp.step(h, &mut rng);
                if b > t {
                    for (slot, factor) in hits.iter_mut().zip([4usize, 2, 1]) {
                        if slot.is_none() && k % factor == 0 {
                            *slot = Some(((k / factor) as f64 - 0.5) * factor as f64 * h);
                        }
                    }
                    if hits.iter().all(Option::is_some) {
                        return Ok(hits.map(Option::unwrap));
                    }
                }
            }
            Err(Error::Horizon {
                level: t,
                max_steps,
            })
        })
        .collect();
    let mut sums = [NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new()];
    for r in per_path {
        let qs = r?;
        for (s, q) in sums.iter_mut().zip(qs) {
            s.add(q);
        }
    }
    Ok(sums.map(|s| s.value() / n_paths as f64))
}
