//! Cross-checks between independent routes, reported one line per check.

use std::path::Path;

use anyhow::Result;
use gflbdp_core::analytics::{
    asymptotic_extinction, classical_extinction, classical_state_prob, extinction_prob,
    extinction_with, genetic_mean, joint_cf_classical, joint_cf_gflbdp, mean_gflbdp, mean_with,
    state_with, survival_with, variance_gflbdp, EvalOptions, GeneticParams, Method, ProcessParams,
};
use gflbdp_core::laplace::InversionConfig;
use gflbdp_core::operators::state_equation_residuals;
use gflbdp_core::special::mittag_leffler;

use crate::output::{Format, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    /// Largest measured error.
    pub error: f64,
    pub limit: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.error <= self.limit
    }

    pub fn line(&self) -> String {
        format!(
            "{} {} (error {:.2e}, limit {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.error,
            self.limit
        )
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Largest error over a set of comparisons, tagged with `name`.
struct Worst {
    name: String,
    error: f64,
}

impl Worst {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            error: 0.0,
        }
    }

    fn see(&mut self, e: f64) {
        // NaN must not hide behind max
        self.error = if e.is_nan() {
            f64::INFINITY
        } else {
            self.error.max(e)
        };
    }

    fn check(self, limit: f64) -> Check {
        Check {
            name: self.name,
            error: self.error,
            limit,
        }
    }
}

pub fn reductions(tol: f64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let rates = [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (1.0, 0.5)];
    let times = [0.1, 1.0, 2.0];
    let opts = EvalOptions::with_tol(tol);

    let mut w =
        Worst::new("gamma=0, rho=1 extinction and state probabilities equal the classical forms");
    for (l, m) in rates {
        let p = ProcessParams::classical(l, m)?;
        for t in times {
            w.see((extinction_with(&p, t, &opts)?.value - classical_extinction(l, m, t)?).abs());
            for n in 1..=3 {
                w.see(
                    (state_with(&p, n, t, &opts)?.value - classical_state_prob(n, l, m, t)?).abs(),
                );
            }
        }
    }
    out.push(w.check(1e-10));

    let mut w = Worst::new("gamma=0, rho=1 mean is exp((lambda-mu)t)");
    for (l, m) in rates {
        let p = ProcessParams::classical(l, m)?;
        for t in times {
            w.see(rel(mean_gflbdp(&p, t, tol)?, ((l - m) * t).exp()));
        }
    }
    out.push(w.check(1e-9));

    let mut w = Worst::new("gamma=0 mean is E_rho((lambda-mu)t^rho)");
    let mut v = Worst::new("gamma=0 variance matches its Mittag-Leffler closed form");
    for rho in [0.6, 0.8, 1.0] {
        for (l, m) in [(2.0, 1.0), (1.0, 2.0)] {
            let p = ProcessParams::new(l, m, 0.5, 1.0, 0.0, rho)?;
            for t in [0.5, 1.0, 2.0] {
                let d = l - m;
                let x = d * f64::powf(t, rho);
                let e1 = mittag_leffler(rho, 1.0, x)?;
                let e2 = mittag_leffler(rho, 1.0, 2.0 * x)?;
                w.see(rel(mean_gflbdp(&p, t, tol)?, e1));
                let want = 2.0 * l / d * e2 - (l + m) / d * e1 - e1 * e1;
                v.see(rel(variance_gflbdp(&p, t, tol)?, want));
            }
        }
    }
    out.push(w.check(1e-9));
    out.push(v.check(1e-8));

    let mut w = Worst::new("gamma=0, rho=1 variance is (lambda+mu)/(lambda-mu) e^{dt}(e^{dt}-1)");
    for (l, m) in [(2.0, 1.0), (1.0, 2.0), (1.0, 0.5)] {
        let p = ProcessParams::classical(l, m)?;
        for t in times {
            let g = ((l - m) * t).exp();
            w.see(rel(
                variance_gflbdp(&p, t, tol)?,
                (l + m) / (l - m) * g * (g - 1.0),
            ));
        }
    }
    out.push(w.check(1e-8));

    let mut w = Worst::new("gamma=0, rho=1 joint CF equals the classical CF");
    for (u, v, t) in [(0.5, 0.3, 1.0), (0.8, 0.5, 0.7), (1.0, 1.0, 2.0)] {
        let p = ProcessParams::classical(1.0, 0.5)?;
        let got = joint_cf_gflbdp(u, v, &p, t, 10_000, 1e-12)?;
        w.see((got - joint_cf_classical(u, v, 1.0, 0.5, t)?).norm());
    }
    out.push(w.check(1e-6));

    let mut w = Worst::new("rho=1 genetic mean is n0 e^{-(lambda+mu)t} + A(1-e^{-(lambda+mu)t})");
    let gp = GeneticParams::new(10, 3, 1.0, 0.5, 1.0)?;
    for t in times {
        let e = (-(gp.lambda + gp.mu) * t).exp();
        w.see(rel(
            genetic_mean(&gp, t)?,
            f64::from(gp.n0) * e + gp.equilibrium() * (1.0 - e),
        ));
    }
    out.push(w.check(1e-10));
    Ok(out)
}

pub fn laplace(limit: f64) -> Result<Vec<Check>> {
    let series = EvalOptions::with_tol(1e-12);
    let gs = series.with_method(Method::Inversion(InversionConfig::gaver_stehfest(14)?));
    let shapes = [(0.35, 0.6), (0.3, 0.3), (0.2, 0.1)];
    let mut mean = Worst::new("mean: series vs Gaver-Stehfest");
    let mut ext = Worst::new("extinction (three regimes): series vs Gaver-Stehfest");
    let mut surv = Worst::new("inter-arrival survival: series vs Gaver-Stehfest");
    for gamma in [0.0, 0.4, 0.9] {
        for (rho, alpha) in shapes {
            for t in [0.5, 1.0, 2.0] {
                for (l, m) in [(2.0, 1.0), (1.0, 1.0), (1.0, 2.0)] {
                    let p = ProcessParams::new(l, m, alpha, 1.0, gamma, rho)?;
                    ext.see(rel(
                        extinction_with(&p, t, &gs)?.value,
                        extinction_with(&p, t, &series)?.value,
                    ));
                    if l != m {
                        mean.see(rel(
                            mean_with(&p, t, &gs)?.value,
                            mean_with(&p, t, &series)?.value,
                        ));
                    }
                }
                let p = ProcessParams::new(1.0, 1.0, alpha, 1.0, gamma, rho)?;
                surv.see(rel(
                    survival_with(&p, 1.5, t, &gs)?.value,
                    survival_with(&p, 1.5, t, &series)?.value,
                ));
            }
        }
    }
    Ok(vec![mean.check(limit), ext.check(limit), surv.check(limit)])
}

pub fn pde() -> Result<Vec<Check>> {
    let p = ProcessParams::new(1.0, 0.5, 0.6, 1.0, 0.4, 0.35)?;
    let checkpoints: Vec<f64> = (0..10).map(|i| 0.2 + 0.2 * f64::from(i)).collect();
    let mut out = Vec::new();
    for n in 0..=2 {
        let mut w = Worst::new(format!(
            "state equation row n={n}, relative residual on [0.2, 2]"
        ));
        for r in state_equation_residuals(&p, n, &checkpoints)? {
            w.see(r.relative());
        }
        out.push(w.check(1e-2));
    }
    Ok(out)
}

pub fn asymptotics() -> Result<Vec<Check>> {
    let mut w = Worst::new("large-time extinction at t=1e3 (relative)");
    for (l, m) in [(2.0, 1.0), (1.0, 1.0), (1.0, 2.0)] {
        let p = ProcessParams::new(l, m, 0.5, 1.0, 0.9, 0.8)?;
        w.see(rel(
            asymptotic_extinction(&p, 1e3)?,
            extinction_prob(&p, 1e3)?,
        ));
    }
    Ok(vec![w.check(0.02)])
}

/// Mean curves on t ∈ [0, 5] for the ρ sweep (γ = 0) and the β sweep (γ = 0.8).
pub fn figure_curves() -> Result<Vec<(String, ProcessParams)>> {
    let mut curves = Vec::new();
    for rho in [0.6, 0.8, 1.0] {
        curves.push((
            format!("figure1_rho{rho}"),
            ProcessParams::new(2.0, 1.0, 0.5, 0.5, 0.0, rho)?,
        ));
    }
    for beta in [0.25, 0.5, 1.0] {
        curves.push((
            format!("figure2_beta{beta}"),
            ProcessParams::new(2.0, 1.0, 0.5, beta, 0.8, 0.7)?,
        ));
    }
    Ok(curves)
}

pub fn figures(out_dir: Option<&Path>) -> Result<Vec<Check>> {
    let curves = figure_curves()?;
    let at5: Vec<f64> = curves
        .iter()
        .map(|(_, p)| mean_gflbdp(p, 5.0, 1e-12))
        .collect::<gflbdp_core::Result<_>>()?;
    // a positive gap means the ordering holds
    let gap = |xs: &[f64]| {
        xs.windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    };
    let order = |name: &str, xs: &[f64]| Check {
        name: format!("{name}: means at t=5 {xs:.4?} strictly decreasing"),
        error: if gap(xs) > 0.0 { 0.0 } else { 1.0 },
        limit: 0.0,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for (name, p) in &curves {
            let mut table = Table::new(&["t", "value"]);
            for i in 0..=100 {
                let t = 0.05 * f64::from(i);
                table.push(vec![t.into(), mean_gflbdp(p, t, 1e-12)?.into()]);
            }
            table.emit(Format::Csv, Some(&dir.join(format!("{name}.csv"))))?;
        }
    }
    Ok(vec![
        order("mean decreasing in rho (0.6, 0.8, 1.0)", &at5[..3]),
        order("mean decreasing in beta (0.25, 0.5, 1.0)", &at5[3..]),
    ])
}
