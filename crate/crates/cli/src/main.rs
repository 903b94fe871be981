//! `gflbdp`: analytics, simulation and verification from the command line.

mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gflbdp_core::analytics::{
    extinction_with, genetic_avg_type_h, genetic_mean, genetic_time_changed_path_integral_mean,
    joint_cf_gflbdp, mean_prabhakar_integral, mean_with, state_with, variance_with, EvalOptions,
    GeneticParams, Method, PrabhakarIntegralParams, ProcessParams,
};
use gflbdp_core::laplace::InversionConfig;
use gflbdp_core::simulator::{
    mc_estimate_with, path_rng, sample_gflbdp_path, GridConfig, MCEstimate, McKind, Model, StepRule,
};
use gflbdp_core::special::{mittag_leffler_3p_detailed, MlArgs, MlRoute, DEFAULT_TERM_CAP};

use output::{Cell, Format, Table};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser, Debug)]
#[command(
    name = "gflbdp",
    version,
    about = "Generalized fractional linear birth-death process numerics"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Three-parameter Mittag-Leffler function E^gamma_{alpha,beta}(x).
    Ml(MlCmd),
    /// Series evaluation of process quantities over a time grid.
    #[command(subcommand)]
    Analytics(AnalyticsCmd),
    /// Monte Carlo estimates and sample paths.
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Cross-checks between independent routes; exit 1 on any failure.
    Verify(VerifyCmd),
    /// Bounded two-type (genetic) model.
    #[command(subcommand)]
    Genetic(GeneticCmd),
}

#[derive(Args, Debug)]
struct MlCmd {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_ml: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma_ml: f64,
    #[arg(long, allow_negative_numbers = true)]
    x: f64,
    /// Relative truncation tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_TERM_CAP)]
    term_cap: usize,
}

#[derive(Args, Debug, Clone)]
struct ProcessArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// Skip the ceiling constraint on (rho, gamma, alpha); analytics only.
    #[arg(long)]
    unconstrained: bool,
}

impl ProcessArgs {
    fn params(&self) -> Result<ProcessParams> {
        let ctor = if self.unconstrained {
            ProcessParams::new_unconstrained
        } else {
            ProcessParams::new
        };
        Ok(ctor(
            self.lambda,
            self.mu,
            self.alpha,
            self.beta,
            self.gamma,
            self.rho,
        )?)
    }
}

#[derive(Args, Debug, Clone)]
struct TimeArgs {
    /// Time points, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "t_grid")]
    t: Vec<f64>,
    /// Uniform grid START:STOP:COUNT, endpoints included.
    #[arg(long)]
    t_grid: Option<String>,
}

impl TimeArgs {
    fn times(&self) -> Result<Vec<f64>> {
        let ts = match &self.t_grid {
            Some(spec) => parse_grid(spec)?,
            None => self.t.clone(),
        };
        if ts.is_empty() {
            bail!(usage("give --t or --t-grid"));
        }
        if ts.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            bail!(usage("times must be finite and >= 0"));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            bail!(usage("times must be strictly increasing"));
        }
        Ok(ts)
    }
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, n] = parts[..] else {
        bail!(usage(format!(
            "--t-grid expects START:STOP:COUNT, got {spec}"
        )));
    };
    let (a, b): (f64, f64) = (a.parse().map_err(usage)?, b.parse().map_err(usage)?);
    let n: usize = n.parse().map_err(usage)?;
    if n < 2 || b.partial_cmp(&a) != Some(std::cmp::Ordering::Greater) {
        bail!(usage("--t-grid needs COUNT >= 2 and STOP > START"));
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    /// Series, switching to Talbot inversion when the series loses precision.
    Auto,
    /// Series only.
    Series,
    /// Gaver-Stehfest inversion of the w-domain form.
    GaverStehfest,
    /// Talbot contour inversion of the w-domain form.
    Talbot,
}

#[derive(Args, Debug, Clone)]
struct EvalArgs {
    /// Relative tolerance of the series.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = RouteArg::Auto)]
    method: RouteArg,
    /// Gaver-Stehfest order (even, 8..=20).
    #[arg(long, default_value_t = 14)]
    gs_order: usize,
    /// Talbot contour nodes.
    #[arg(long, default_value_t = 32)]
    talbot_nodes: usize,
}

impl EvalArgs {
    fn options(&self) -> Result<EvalOptions> {
        let method = match self.method {
            RouteArg::Auto => Method::Auto,
            RouteArg::Series => Method::Series,
            RouteArg::GaverStehfest => {
                Method::Inversion(InversionConfig::gaver_stehfest(self.gs_order)?)
            }
            RouteArg::Talbot => Method::Inversion(InversionConfig::talbot(self.talbot_nodes)?),
        };
        Ok(EvalOptions::with_tol(self.tol).with_method(method))
    }
}

#[derive(Subcommand, Debug)]
enum AnalyticsCmd {
    /// E N(t).
    Mean(Analytic),
    /// Var N(t).
    Variance(Analytic),
    /// Pr{N(t) = 0}.
    Extinction(Analytic),
    /// Pr{N(t) = n}, n >= 1.
    StateProb {
        #[command(flatten)]
        a: Analytic,
        #[arg(long)]
        n: u32,
    },
    /// Joint characteristic function E exp(iuN(t) + ivY(t)); columns t,re,im.
    Cf {
        #[command(flatten)]
        a: Analytic,
        #[arg(long, allow_negative_numbers = true)]
        u: f64,
        #[arg(long, allow_negative_numbers = true)]
        v: f64,
        #[arg(long, default_value_t = DEFAULT_TERM_CAP)]
        max_terms: usize,
    },
    /// Mean of the Prabhakar integral of the process.
    PrabhakarMean {
        #[command(flatten)]
        a: Analytic,
        #[arg(long)]
        alpha_p: f64,
        #[arg(long)]
        rho_p: f64,
        #[arg(long)]
        beta_p: f64,
        #[arg(long)]
        gamma_p: f64,
    },
}

#[derive(Args, Debug, Clone)]
struct Analytic {
    #[command(flatten)]
    process: ProcessArgs,
    #[command(flatten)]
    time: TimeArgs,
    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(Args, Debug, Clone)]
struct McArgs {
    /// Number of replications.
    #[arg(long, default_value_t = 20_000)]
    paths: usize,
    /// Seed of the per-path random streams.
    #[arg(long, env = "GFLBDP_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// First-passage grid step as a fraction of E Q(t).
    #[arg(long, default_value_t = 1e-3)]
    du_rel: f64,
    /// Absolute first-passage grid step; overrides --du-rel.
    #[arg(long)]
    du: Option<f64>,
    #[arg(long, default_value_t = 10_000_000)]
    max_steps: usize,
}

impl McArgs {
    fn grid(&self) -> GridConfig {
        GridConfig {
            step: self
                .du
                .map_or(StepRule::Relative(self.du_rel), StepRule::Absolute),
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Mean,
    Variance,
    Extinction,
    StatePmf,
    Cf,
    PathIntegralMean,
    ClockLaplace,
}

#[derive(Subcommand, Debug)]
enum SimulateCmd {
    /// Monte Carlo estimate per time point; columns t,value,stderr,n_paths,seed
    /// (for --kind cf: t,re,im,re_stderr,im_stderr,n_paths,seed).
    Estimate {
        #[command(flatten)]
        process: ProcessArgs,
        #[command(flatten)]
        time: TimeArgs,
        #[command(flatten)]
        mc: McArgs,
        #[arg(long, value_enum)]
        kind: KindArg,
        /// State for --kind state-pmf.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, allow_negative_numbers = true)]
        u: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        v: Option<f64>,
        /// Laplace argument for --kind clock-laplace.
        #[arg(long)]
        z: Option<f64>,
    },
    /// Sample paths of N(Q(s)) on [0, horizon]; columns path_id,jump_time,state.
    Paths {
        #[command(flatten)]
        process: ProcessArgs,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        /// Number of paths.
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, env = "GFLBDP_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1e-3)]
        du_rel: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Reductions,
    Laplace,
    Pde,
    Asymptotics,
    Figures,
    All,
}

#[derive(Args, Debug)]
struct VerifyCmd {
    #[arg(value_enum)]
    suite: Suite,
    /// Series tolerance used by the reduction checks.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Allowed relative gap between series and inversion.
    #[arg(long, default_value_t = 1e-5)]
    dual_tol: f64,
    /// Directory for the figure CSVs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct GeneticArgs {
    /// Population size M (even).
    #[arg(long)]
    m: u32,
    #[arg(long)]
    n0: u32,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[command(flatten)]
    time: TimeArgs,
}

impl GeneticArgs {
    fn params(&self) -> Result<GeneticParams> {
        Ok(GeneticParams::new(
            self.m,
            self.n0,
            self.lambda,
            self.mu,
            self.rho,
        )?)
    }
}

#[derive(Subcommand, Debug)]
enum GeneticCmd {
    /// Mean number of type-H individuals.
    Mean(GeneticArgs),
    /// Time average of the mean over [0, t].
    Avg(GeneticArgs),
    /// Mean path integral over [0, Q(t)].
    PathIntegralMean(GeneticArgs),
    /// Monte Carlo mean of the time-changed bounded chain.
    Simulate {
        #[command(flatten)]
        g: GeneticArgs,
        #[command(flatten)]
        mc: McArgs,
    },
}

/// Argument problems that clap cannot see; exit code 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow!(Usage(msg.to_string()))
}

/// Some verification checks failed; exit code 1.
#[derive(Debug)]
struct VerificationFailed(usize);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn exit_code(e: &anyhow::Error) -> u8 {
    use gflbdp_core::Error as E;
    if e.is::<VerificationFailed>() {
        return 1;
    }
    if e.is::<Usage>() {
        return 2;
    }
    match e.downcast_ref::<E>() {
        Some(E::Domain(_)) => 2,
        Some(E::Divergence { .. } | E::Numeric { .. } | E::InversionUnstable { .. }) => 3,
        Some(E::UnsupportedRegime(_) | E::Horizon { .. } | E::PathCap(_)) => 4,
        Some(E::Consistency(_)) => 1,
        None => 2,
    }
}

fn table_over<F: FnMut(f64) -> Result<f64>>(times: &[f64], mut f: F) -> Result<Table> {
    let mut table = Table::new(&["t", "value"]);
    for &t in times {
        table.push(vec![t.into(), f(t)?.into()]);
    }
    Ok(table)
}

fn run_ml(cmd: &MlCmd) -> Result<Table> {
    let args = MlArgs::with_tol(cmd.alpha, cmd.beta_ml, cmd.gamma_ml, cmd.x, cmd.tol)?;
    let ev = mittag_leffler_3p_detailed(&args, cmd.term_cap)?;
    let route = match ev.route {
        MlRoute::Series => "series",
        MlRoute::Contour => "contour",
        MlRoute::Asymptotic => "asymptotic",
    };
    let mut table = Table::new(&["value", "terms", "last_term", "route"]);
    table.push(vec![
        ev.value.into(),
        ev.terms.into(),
        ev.last_term.into(),
        route.into(),
    ]);
    Ok(table)
}

fn run_analytics(cmd: &AnalyticsCmd) -> Result<Table> {
    let a = match cmd {
        AnalyticsCmd::Mean(a) | AnalyticsCmd::Variance(a) | AnalyticsCmd::Extinction(a) => a,
        AnalyticsCmd::StateProb { a, .. }
        | AnalyticsCmd::Cf { a, .. }
        | AnalyticsCmd::PrabhakarMean { a, .. } => a,
    };
    let p = a.process.params()?;
    let times = a.time.times()?;
    let opts = a.eval.options()?;
    match cmd {
        AnalyticsCmd::Mean(_) => table_over(&times, |t| Ok(mean_with(&p, t, &opts)?.value)),
        AnalyticsCmd::Variance(_) => table_over(&times, |t| Ok(variance_with(&p, t, &opts)?)),
        AnalyticsCmd::Extinction(_) => {
            table_over(&times, |t| Ok(extinction_with(&p, t, &opts)?.value))
        }
        AnalyticsCmd::StateProb { n, .. } => {
            table_over(&times, |t| Ok(state_with(&p, *n, t, &opts)?.value))
        }
        AnalyticsCmd::PrabhakarMean {
            alpha_p,
            rho_p,
            beta_p,
            gamma_p,
            ..
        } => {
            let ip = PrabhakarIntegralParams::new(*alpha_p, *rho_p, *beta_p, *gamma_p)?;
            table_over(&times, |t| {
                Ok(mean_prabhakar_integral(&p, &ip, t, opts.tol)?)
            })
        }
        AnalyticsCmd::Cf {
            u, v, max_terms, ..
        } => {
            let mut table = Table::new(&["t", "re", "im"]);
            for &t in &times {
                let z = joint_cf_gflbdp(*u, *v, &p, t, *max_terms, opts.tol)?;
                table.push(vec![t.into(), z.re.into(), z.im.into()]);
            }
            Ok(table)
        }
    }
}

fn estimate_row(t: f64, est: &MCEstimate) -> Vec<Cell> {
    vec![
        t.into(),
        est.value.into(),
        est.stderr.into(),
        est.n_paths.into(),
        est.seed.into(),
    ]
}

fn report_failures(est: &MCEstimate, t: f64) {
    if est.failures > 0 {
        eprintln!(
            "warning: t={t}: {} of {} paths hit a simulation cap and were dropped",
            est.failures,
            est.failures + est.n_paths
        );
    }
}

fn run_simulate(cmd: &SimulateCmd) -> Result<Table> {
    match cmd {
        SimulateCmd::Estimate {
            process,
            time,
            mc,
            kind,
            n,
            u,
            v,
            z,
        } => {
            let model = Model::Process(process.params()?);
            let need = |x: Option<f64>, flag: &str| {
                x.ok_or_else(|| usage(format!("--kind {kind:?} needs {flag}")))
            };
            let mk = match kind {
                KindArg::Mean => McKind::Mean,
                KindArg::Variance => McKind::Variance,
                KindArg::Extinction => McKind::Extinction,
                KindArg::StatePmf => {
                    McKind::StatePmf(n.ok_or_else(|| usage("--kind state-pmf needs --n"))?)
                }
                KindArg::Cf => McKind::JointCf {
                    u: need(*u, "--u")?,
                    v: need(*v, "--v")?,
                },
                KindArg::PathIntegralMean => McKind::PathIntegralMean,
                KindArg::ClockLaplace => McKind::ClockLaplace(need(*z, "--z")?),
            };
            let times = time.times()?;
            let mut table = if *kind == KindArg::Cf {
                Table::new(&["t", "re", "im", "re_stderr", "im_stderr", "n_paths", "seed"])
            } else {
                Table::new(&["t", "value", "stderr", "n_paths", "seed"])
            };
            for &t in &times {
                let est = mc_estimate_with(mk, &model, t, mc.paths, mc.seed, &mc.grid())?;
                report_failures(&est, t);
                match est.imag {
                    Some((im, im_se)) => table.push(vec![
                        t.into(),
                        est.value.into(),
                        im.into(),
                        est.stderr.into(),
                        im_se.into(),
                        est.n_paths.into(),
                        est.seed.into(),
                    ]),
                    None => table.push(estimate_row(t, &est)),
                }
            }
            Ok(table)
        }
        SimulateCmd::Paths {
            process,
            horizon,
            n,
            seed,
            du_rel,
        } => {
            let p = process.params()?;
            let cfg = GridConfig {
                step: StepRule::Relative(*du_rel),
                ..GridConfig::default()
            };
            let mut table = Table::new(&["path_id", "jump_time", "state"]);
            for id in 0..*n {
                let path = sample_gflbdp_path(&p, *horizon, &cfg, &mut path_rng(*seed, id))?;
                for (time, state) in path.jump_times.iter().zip(&path.states) {
                    table.push(vec![id.into(), (*time).into(), (*state).into()]);
                }
            }
            Ok(table)
        }
    }
}

fn run_genetic(cmd: &GeneticCmd) -> Result<Table> {
    match cmd {
        GeneticCmd::Mean(g) => table_over(&g.time.times()?, |t| Ok(genetic_mean(&g.params()?, t)?)),
        GeneticCmd::Avg(g) => table_over(&g.time.times()?, |t| {
            Ok(genetic_avg_type_h(&g.params()?, t)?)
        }),
        GeneticCmd::PathIntegralMean(g) => table_over(&g.time.times()?, |t| {
            Ok(genetic_time_changed_path_integral_mean(&g.params()?, t)?)
        }),
        GeneticCmd::Simulate { g, mc } => {
            let model = Model::Genetic(g.params()?);
            let mut table = Table::new(&["t", "value", "stderr", "n_paths", "seed"]);
            for t in g.time.times()? {
                let est = mc_estimate_with(
                    McKind::GeneticMean,
                    &model,
                    t,
                    mc.paths,
                    mc.seed,
                    &mc.grid(),
                )?;
                report_failures(&est, t);
                table.push(estimate_row(t, &est));
            }
            Ok(table)
        }
    }
}

fn run_verify(cmd: &VerifyCmd) -> Result<()> {
    let suites = match cmd.suite {
        Suite::All => vec![
            Suite::Reductions,
            Suite::Laplace,
            Suite::Pde,
            Suite::Asymptotics,
            Suite::Figures,
        ],
        s => vec![s],
    };
    let mut checks = Vec::new();
    for s in suites {
        checks.extend(match s {
            Suite::Reductions => verify::reductions(cmd.tol)?,
            Suite::Laplace => verify::laplace(cmd.dual_tol)?,
            Suite::Pde => verify::pde()?,
            Suite::Asymptotics => verify::asymptotics()?,
            Suite::Figures => verify::figures(cmd.out_dir.as_deref())?,
            Suite::All => unreachable!(),
        });
    }
    for c in &checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        bail!(VerificationFailed(failed));
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let table = match &cli.command {
        Command::Ml(cmd) => run_ml(cmd)?,
        Command::Analytics(cmd) => run_analytics(cmd)?,
        Command::Simulate(cmd) => run_simulate(cmd)?,
        Command::Genetic(cmd) => run_genetic(cmd)?,
        Command::Verify(cmd) => return run_verify(cmd),
    };
    table.emit(cli.format, cli.output.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:5").is_err());
        assert!(parse_grid("0:x:5").is_err());
    }

    #[test]
    fn error_codes() {
        use gflbdp_core::Error as E;
        assert_eq!(exit_code(&anyhow!(E::Domain("x".into()))), 2);
        assert_eq!(exit_code(&anyhow!(E::UnsupportedRegime("x".into()))), 4);
        assert_eq!(
            exit_code(&anyhow!(E::Divergence {
                context: "x",
                terms: 1,
                largest_term: 1.0
            })),
            3
        );
        assert_eq!(exit_code(&anyhow!(VerificationFailed(1))), 1);
        assert_eq!(exit_code(&usage("bad")), 2);
    }
}
