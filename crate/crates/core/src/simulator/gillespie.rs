//! Event-driven simulation of linear and bounded birth-death chains.

use rand::Rng;
use rand_distr::Exp1;

use crate::analytics::GeneticParams;
use crate::error::{domain, Error, Result};

/// Jump cap used by the convenience entry points.
pub const DEFAULT_MAX_JUMPS: usize = 10_000_000;

/// Piecewise-constant trajectory: `states[i]` holds on
/// [jump_times[i], jump_times[i+1]), the last state until `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub jump_times: Vec<f64>,
    pub states: Vec<u64>,
    pub absorbed: bool,
    pub horizon: f64,
}

impl SamplePath {
    pub fn state_at(&self, t: f64) -> u64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        self.states[k.saturating_sub(1)]
    }

    pub fn final_state(&self) -> u64 {
        self.states[self.states.len() - 1]
    }
}

/// ∫₀ᵗ N(s) ds for a simulated path.
pub fn path_integral(path: &SamplePath, t: f64) -> Result<f64> {
    if !(t >= 0.0) || t > path.horizon {
        return domain(format!(
            "t = {t} outside the simulated range [0, {}]",
            path.horizon
        ));
    }
    let mut total = 0.0;
    for (i, &start) in path.jump_times.iter().enumerate() {
        if start >= t {
            break;
        }
        let end = path.jump_times.get(i + 1).copied().unwrap_or(t).min(t);
        total += path.states[i] as f64 * (end - start);
    }
    Ok(total)
}

/// Rates (birth, death) in state n.
trait Rates {
    fn rates(&self, n: u64) -> (f64, f64);
}

struct Linear {
    lambda: f64,
    mu: f64,
}

impl Rates for Linear {
    fn rates(&self, n: u64) -> (f64, f64) {
        (n as f64 * self.lambda, n as f64 * self.mu)
    }
}

struct Bounded {
    m: u64,
    lambda: f64,
    mu: f64,
}

impl Rates for Bounded {
    fn rates(&self, n: u64) -> (f64, f64) {
        ((self.m - n) as f64 * self.lambda, n as f64 * self.mu)
    }
}

/// Walks the chain to `horizon`, handing every segment (state, start, end)
/// to `visit`. Returns the final state and whether the chain got stuck.
fn run<R: Rng + ?Sized, F: FnMut(u64, f64, f64)>(
    rates: &dyn Rates,
    n0: u64,
    horizon: f64,
    max_jumps: usize,
    rng: &mut R,
    mut visit: F,
) -> Result<(u64, bool)> {
    let mut n = n0;
    let mut t = 0.0;
    for _ in 0..=max_jumps {
        let (birth, death) = rates.rates(n);
        let total = birth + death;
        if total == 0.0 {
            visit(n, t, horizon);
            return Ok((n, true));
        }
        let wait: f64 = rng.sample::<f64, _>(Exp1) / total;
        if t + wait >= horizon {
            visit(n, t, horizon);
            return Ok((n, false));
        }
        visit(n, t, t + wait);
        t += wait;
        if rng.random::<f64>() * total < birth {
            n += 1;
        } else {
            n -= 1;
        }
    }
    Err(Error::PathCap(max_jumps))
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return domain(format!("horizon must be finite and >= 0, got {horizon}"));
    }
    Ok(())
}

fn check_rates(lambda: f64, mu: f64, n0: u64) -> Result<()> {
    if !(lambda >= 0.0 && mu >= 0.0) || !(lambda + mu).is_finite() || n0 == 0 {
        return domain(format!(
            "need lambda, mu >= 0 and n0 >= 1 (lambda={lambda}, mu={mu}, n0={n0})"
        ));
    }
    Ok(())
}

fn record<R: Rng + ?Sized>(
    rates: &dyn Rates,
    n0: u64,
    horizon: f64,
    max_jumps: usize,
    rng: &mut R,
) -> Result<SamplePath> {
    let mut jump_times = Vec::new();
    let mut states = Vec::new();
    let (_, absorbed) = run(rates, n0, horizon, max_jumps, rng, |n, start, _| {
        jump_times.push(start);
        states.push(n);
    })?;
    Ok(SamplePath {
        jump_times,
        states,
        absorbed,
        horizon,
    })
}

/// Linear birth-death path from `n0` with per-individual rates λ, μ.
pub fn gillespie_lbdp<R: Rng + ?Sized>(
    lambda: f64,
    mu: f64,
    n0: u64,
    horizon: f64,
    rng: &mut R,
) -> Result<SamplePath> {
    gillespie_lbdp_capped(lambda, mu, n0, horizon, DEFAULT_MAX_JUMPS, rng)
}

pub fn gillespie_lbdp_capped<R: Rng + ?Sized>(
    lambda: f64,
    mu: f64,
    n0: u64,
    horizon: f64,
    max_jumps: usize,
    rng: &mut R,
) -> Result<SamplePath> {
    check_rates(lambda, mu, n0)?;
    check_horizon(horizon)?;
    record(&Linear { lambda, mu }, n0, horizon, max_jumps, rng)
}

/// Genetic-model path with λ_n = (M-n)λ and μ_n = nμ.
pub fn gillespie_bounded<R: Rng + ?Sized>(
    gp: &GeneticParams,
    horizon: f64,
    rng: &mut R,
) -> Result<SamplePath> {
    check_horizon(horizon)?;
    let rates = Bounded {
        m: u64::from(gp.m),
        lambda: gp.lambda,
        mu: gp.mu,
    };
    record(&rates, u64::from(gp.n0), horizon, DEFAULT_MAX_JUMPS, rng)
}

/// (N(horizon), ∫₀^horizon N) without storing the path.
pub(crate) fn linear_endpoint<R: Rng + ?Sized>(
    lambda: f64,
    mu: f64,
    horizon: f64,
    max_jumps: usize,
    rng: &mut R,
) -> Result<(u64, f64)> {
    let mut integral = 0.0;
    let (n, _) = run(
        &Linear { lambda, mu },
        1,
        horizon,
        max_jumps,
        rng,
        |n, a, b| {
            integral += n as f64 * (b - a);
        },
    )?;
    Ok((n, integral))
}

pub(crate) fn bounded_endpoint<R: Rng + ?Sized>(
    gp: &GeneticParams,
    horizon: f64,
    rng: &mut R,
) -> Result<u64> {
    let rates = Bounded {
        m: u64::from(gp.m),
        lambda: gp.lambda,
        mu: gp.mu,
    };
    Ok(run(
        &rates,
        u64::from(gp.n0),
        horizon,
        DEFAULT_MAX_JUMPS,
        rng,
        |_, _, _| {},
    )?
    .0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{classical_extinction, classical_state_prob};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pure_birth_only_climbs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p = gillespie_lbdp(1.3, 0.0, 1, 2.0, &mut rng).unwrap();
            assert!(p.states.windows(2).all(|w| w[1] == w[0] + 1));
            assert!(p.jump_times.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn steps_are_unit_and_zero_absorbs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let p = gillespie_lbdp(1.0, 1.2, 3, 5.0, &mut rng).unwrap();
            assert!(p.states.windows(2).all(|w| w[0].abs_diff(w[1]) == 1));
            if p.states.contains(&0) {
                assert_eq!(p.final_state(), 0);
                assert!(p.absorbed);
            }
        }
    }

    #[test]
    fn extinction_and_pmf_match_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| {
                gillespie_lbdp(1.0, 1.0, 1, 1.0, &mut rng)
                    .unwrap()
                    .final_state()
                    == 0
            })
            .count();
        let p = zeros as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p - classical_extinction(1.0, 1.0, 1.0).unwrap()).abs() < 3.0 * se);

        let mut counts = [0usize; 11];
        for _ in 0..n {
            let s = gillespie_lbdp(1.0, 0.5, 1, 1.0, &mut rng)
                .unwrap()
                .final_state();
            if s <= 10 {
                counts[s as usize] += 1;
            }
        }
        for (k, &c) in counts.iter().enumerate() {
            let emp = c as f64 / n as f64;
            let want = if k == 0 {
                classical_extinction(1.0, 0.5, 1.0).unwrap()
            } else {
                classical_state_prob(k as u32, 1.0, 0.5, 1.0).unwrap()
            };
            let se = (want * (1.0 - want) / n as f64).sqrt();
            assert!((emp - want).abs() < 3.5 * se, "n={k}: {emp} vs {want}");
        }
    }

    #[test]
    fn path_integral_examples() {
        let flat = SamplePath {
            jump_times: vec![0.0],
            states: vec![1],
            absorbed: false,
            horizon: 2.0,
        };
        assert_eq!(path_integral(&flat, 2.0).unwrap(), 2.0);
        let step = SamplePath {
            jump_times: vec![0.0, 1.0],
            states: vec![1, 2],
            absorbed: false,
            horizon: 2.0,
        };
        assert_eq!(path_integral(&step, 2.0).unwrap(), 3.0);
        assert_eq!(path_integral(&step, 0.5).unwrap(), 0.5);
        assert!(path_integral(&step, 2.5).is_err());
        assert_eq!(step.state_at(1.0), 2);
        assert_eq!(step.state_at(0.99), 1);
    }

    #[test]
    fn mean_path_integral() {
        // λ - μ = 1: E ∫₀¹ N = e - 1
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| {
                linear_endpoint(1.5, 0.5, 1.0, DEFAULT_MAX_JUMPS, &mut rng)
                    .unwrap()
                    .1
            })
            .collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (v / n as f64).sqrt();
        assert!(
            (m - (std::f64::consts::E - 1.0)).abs() < 3.0 * se,
            "{m} ± {se}"
        );
    }

    #[test]
    fn bounded_chain_stays_in_range_and_turns_at_m() {
        let gp = GeneticParams::new(10, 5, 1.0, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let p = gillespie_bounded(&gp, 5.0, &mut rng).unwrap();
            assert!(p.states.iter().all(|&s| s <= 10));
            for w in p.states.windows(2) {
                if w[0] == 10 {
                    assert_eq!(w[1], 9);
                }
                if w[0] == 0 {
                    assert_eq!(w[1], 1);
                }
            }
        }
    }

    #[test]
    fn cap_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert_eq!(
            gillespie_lbdp_capped(5.0, 0.0, 1, 10.0, 100, &mut rng),
            Err(Error::PathCap(100))
        );
    }
}
