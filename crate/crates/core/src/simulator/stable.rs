//! One-sided stable variates.

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::Exp1;

use crate::error::{domain, Result};

/// Standard one-sided ν-stable variate with E e^{-zS} = e^{-z^ν}
/// (Kanter's representation).
pub(crate) fn standard_stable<R: Rng + ?Sized>(nu: f64, rng: &mut R) -> f64 {
    let u: f64 = PI * rng.sample::<f64, _>(Open01);
    let e: f64 = rng.sample(Exp1);
    let a = (nu * u).sin() / u.sin().powf(1.0 / nu);
    let b = ((1.0 - nu) * u).sin() / e;
    a * b.powf((1.0 - nu) / nu)
}

/// Increment of a ν-stable subordinator over a time step `dt`:
/// dt^{1/ν}·S with E e^{-zS} = e^{-z^ν}.
pub fn stable_increment<R: Rng + ?Sized>(nu: f64, dt: f64, rng: &mut R) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return domain(format!("stable index must lie in (0, 1), got {nu}"));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return domain(format!("time step must be finite and > 0, got {dt}"));
    }
    Ok(dt.powf(1.0 / nu) * standard_stable(nu, rng))
}

/// Increment over `dt` for an index in (0, 1]; index 1 is the pure drift.
pub(crate) fn increment_or_drift<R: Rng + ?Sized>(nu: f64, dt: f64, rng: &mut R) -> f64 {
    if nu == 1.0 || dt == 0.0 {
        dt
    } else {
        dt.powf(1.0 / nu) * standard_stable(nu, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn laplace_mean(nu: f64, dt: f64, z: f64, n: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n)
            .map(|_| (-z * stable_increment(nu, dt, &mut rng).unwrap()).exp())
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, (var / n as f64).sqrt())
    }

    #[test]
    fn laplace_transform_matches() {
        let (m, se) = laplace_mean(0.5, 1.0, 1.0, 100_000, 11);
        assert!((m - (-1.0f64).exp()).abs() < 3.0 * se, "{m} ± {se}");
        for nu in [0.2, 0.7, 0.95] {
            let (m, se) = laplace_mean(nu, 0.4, 2.0, 50_000, 5);
            let want = (-0.4 * 2f64.powf(nu)).exp();
            assert!((m - want).abs() < 3.5 * se, "nu={nu}: {m} vs {want} ± {se}");
        }
    }

    #[test]
    fn scaling_in_time() {
        // the same randomness at dt = 2 is 2^{1/ν} times the dt = 1 sample
        let nu = 0.6;
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = stable_increment(nu, 1.0, &mut a).unwrap();
            let y = stable_increment(nu, 2.0, &mut b).unwrap();
            assert!((y - 2f64.powf(1.0 / nu) * x).abs() <= 1e-12 * y);
        }
    }

    #[test]
    fn samples_are_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for nu in [0.1, 0.5, 0.99] {
            let min = (0..1_000_000)
                .map(|_| stable_increment(nu, 1.0, &mut rng).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(min > 0.0, "nu={nu}");
        }
    }

    #[test]
    fn rejects_degenerate_indices() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(stable_increment(1.0, 1.0, &mut rng).is_err());
        assert!(stable_increment(0.0, 1.0, &mut rng).is_err());
        assert!(stable_increment(0.5, 0.0, &mut rng).is_err());
    }
}
