//! Command-line surface over the fidelity library: single-point evaluation,
//! ensemble averages, optimization, CSV sweeps, and the quadrature cross-check.
//!
//! Exit codes: 0 success, 2 flag/domain/config error, 3 non-positive fidelity
//! denominator (overflow regime), 4 non-finite optimization objective,
//! 5 oracle tolerance exceeded, 1 unexpected I/O failure.

mod sweep;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvteleport::averaging::{avg_fidelity, Distribution};
use cvteleport::fidelity::{kernel, point_fidelity, CoherentAmplitude};
use cvteleport::optimizer::{optimize_profile, Bounds, FreeParamSet, ParamSpec};
use cvteleport::oracle::{avg_by_quadrature, compare_fidelity_routes};
use cvteleport::params::{derived_coeffs, ChannelParams, GaussianCF2, TeleporterParams};

#[derive(Parser)]
#[command(
    name = "cvteleport",
    version,
    about = "Fidelity of coherent-state teleportation through a lossy thermal channel",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity and kernel coefficients for one input amplitude.
    Eval(EvalArgs),
    /// Fidelity averaged over an input-amplitude ensemble.
    Avg(AvgArgs),
    /// Maximize an ensemble average over a subset of (gq, gp, theta).
    Optimize(OptimizeArgs),
    /// Evaluate sweep curves into a CSV file.
    Sweep(SweepArgs),
    /// Compare closed forms against independent quadrature on random scenarios.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct ChannelArgs {
    /// Bell-measurement transmissivity, in (0, 1].
    #[arg(long = "T", allow_negative_numbers = true)]
    transmissivity: f64,
    /// Dimensionless channel evolution time (loss exponent), >= 0.
    #[arg(long = "kappa-t", allow_negative_numbers = true)]
    kappa_t: f64,
    /// Mean thermal occupation of the channel environment, >= 0.
    #[arg(long, allow_negative_numbers = true)]
    nbar: f64,
    /// Squeezing parameter of the two-mode resource, >= 0.
    #[arg(long, allow_negative_numbers = true)]
    r: f64,
}

impl ChannelArgs {
    fn channel(&self) -> Result<ChannelParams, Failure> {
        Ok(ChannelParams::new(self.kappa_t, self.nbar, self.r)?)
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Beam-splitter angle mixing the two gain channels, in (0, pi/2).
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
    /// Gain applied to the measured momentum-like quadrature.
    #[arg(long, allow_negative_numbers = true)]
    gq: f64,
    /// Gain applied to the measured position-like quadrature.
    #[arg(long, allow_negative_numbers = true)]
    gp: f64,
    #[command(flatten)]
    channel: ChannelArgs,
    /// Real part of the input coherent amplitude.
    #[arg(long = "eps-re", default_value_t = 0.0, allow_negative_numbers = true)]
    eps_re: f64,
    /// Imaginary part of the input coherent amplitude.
    #[arg(long = "eps-im", default_value_t = 0.0, allow_negative_numbers = true)]
    eps_im: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DistKindArg {
    Line,
    Circle,
    Gauss,
}

#[derive(Args)]
struct DistArgs {
    /// Input-amplitude ensemble.
    #[arg(long, value_enum)]
    dist: DistKindArg,
    /// Half-width of the line ensemble (with --dist line).
    #[arg(long = "L", allow_negative_numbers = true)]
    half_width: Option<f64>,
    /// Radius of the circle ensemble (with --dist circle).
    #[arg(long = "A", allow_negative_numbers = true)]
    radius: Option<f64>,
    /// Variance of the Gaussian ensemble (with --dist gauss).
    #[arg(long, allow_negative_numbers = true)]
    chi: Option<f64>,
}

impl DistArgs {
    fn distribution(&self) -> Result<Distribution, Failure> {
        let wrong = |flag: &str| Failure {
            code: 2,
            msg: format!("--dist {} requires {flag}", self.kind_name()),
        };
        match self.dist {
            DistKindArg::Line => {
                let l = self.half_width.ok_or_else(|| wrong("--L"))?;
                Ok(Distribution::line(l)?)
            }
            DistKindArg::Circle => {
                let a = self.radius.ok_or_else(|| wrong("--A"))?;
                Ok(Distribution::circle(a)?)
            }
            DistKindArg::Gauss => {
                let chi = self.chi.ok_or_else(|| wrong("--chi"))?;
                Ok(Distribution::gauss(chi)?)
            }
        }
    }

    fn kind_name(&self) -> &'static str {
        match self.dist {
            DistKindArg::Line => "line",
            DistKindArg::Circle => "circle",
            DistKindArg::Gauss => "gauss",
        }
    }

    fn param(&self) -> f64 {
        match self.dist {
            DistKindArg::Line => self.half_width.unwrap_or(f64::NAN),
            DistKindArg::Circle => self.radius.unwrap_or(f64::NAN),
            DistKindArg::Gauss => self.chi.unwrap_or(f64::NAN),
        }
    }
}

#[derive(Args)]
struct AvgArgs {
    /// Beam-splitter angle mixing the two gain channels, in (0, pi/2).
    #[arg(long)]
    theta: f64,
    #[arg(long)]
    gq: f64,
    #[arg(long)]
    gp: f64,
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    dist: DistArgs,
    /// Average the independent quadrature route instead of the closed form.
    #[arg(long)]
    quadrature: bool,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    channel: ChannelArgs,
    #[command(flatten)]
    dist: DistArgs,
    /// Comma-separated subset of gq,gp,theta to optimize over.
    #[arg(long, value_delimiter = ',')]
    free: Vec<String>,
    /// Pin a non-free parameter, e.g. --fixed theta=0.6 (repeatable).
    #[arg(long = "fixed", value_name = "NAME=VALUE")]
    fixed: Vec<String>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep description (see the repository README for the schema).
    #[arg(long, conflicts_with = "preset")]
    config: Option<String>,
    /// Built-in sweep: fig2, fig3a, fig3b, fig4, fig5, fig6a, fig6b, fig7, fig8, fig9.
    #[arg(long)]
    preset: Option<String>,
    /// Output CSV path (written via a temp file and rename).
    #[arg(long)]
    out: String,
    /// Worker threads for curve evaluation; does not affect the results.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct OracleArgs {
    /// Number of random scenarios.
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Seed of the scenario generator.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Largest accepted |closed - quadrature| deviation.
    #[arg(long, default_value_t = 1e-8, allow_negative_numbers = true)]
    tol: f64,
}

/// Terminal failure with its process exit code.
pub struct Failure {
    pub code: u8,
    pub msg: String,
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            msg: msg.into(),
        }
    }

    pub fn io(msg: impl std::fmt::Display) -> Self {
        Failure {
            code: 1,
            msg: msg.to_string(),
        }
    }
}

impl From<cvteleport::Error> for Failure {
    fn from(e: cvteleport::Error) -> Self {
        let code = match e {
            cvteleport::Error::NonPositiveG { .. } => 3,
            cvteleport::Error::NonFiniteObjective { .. } => 4,
            _ => 2,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

/// 17-significant-digit float, byte-stable across runs and platforms.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(args) => cmd_eval(&args),
        Command::Avg(args) => cmd_avg(&args),
        Command::Optimize(args) => cmd_optimize(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Oracle(args) => cmd_oracle(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Failure> {
    let p = TeleporterParams::new(args.theta, args.gq, args.gp, args.channel.transmissivity)?;
    let c = args.channel.channel()?;
    let ker = kernel(&p, &c)?;
    let d = derived_coeffs(&p, &c);
    let eps = CoherentAmplitude::new(args.eps_re, args.eps_im)?;
    let f = point_fidelity(&p, &c, eps)?;
    println!(
        "{{\"fidelity\": {}, \"K1\": {}, \"K2\": {}, \"G\": {}, \"f\": [{}, {}, {}, {}], \"Gamma\": {}}}",
        fmt_f64(f),
        fmt_f64(ker.k1),
        fmt_f64(ker.k2),
        fmt_f64(ker.g),
        fmt_f64(d.f1),
        fmt_f64(d.f2),
        fmt_f64(d.f3),
        fmt_f64(d.f4),
        fmt_f64(d.gamma),
    );
    Ok(())
}

fn cmd_avg(args: &AvgArgs) -> Result<(), Failure> {
    let p = TeleporterParams::new(args.theta, args.gq, args.gp, args.channel.transmissivity)?;
    let c = args.channel.channel()?;
    let dist = args.dist.distribution()?;
    let (value, route) = if args.quadrature {
        let resource = GaussianCF2::tmsv(c.r())?;
        (avg_by_quadrature(&p, &c, &resource, &dist)?, "quadrature")
    } else {
        (avg_fidelity(&p, &c, &dist)?, "closed_form")
    };
    println!(
        "{{\"avg_fidelity\": {}, \"dist\": \"{}\", \"param\": {}, \"route\": \"{}\"}}",
        fmt_f64(value),
        args.dist.kind_name(),
        fmt_f64(args.dist.param()),
        route,
    );
    Ok(())
}

fn parse_fixed_pair(s: &str) -> Result<(&str, f64), Failure> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| Failure::config(format!("--fixed expects NAME=VALUE, got {s:?}")))?;
    let value: f64 = value
        .parse()
        .map_err(|_| Failure::config(format!("--fixed {name}: {value:?} is not a number")))?;
    Ok((name, value))
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<(), Failure> {
    let c = args.channel.channel()?;
    let dist = args.dist.distribution()?;
    let names: Vec<&str> = args.free.iter().map(|s| s.as_str()).collect();
    let mut free = FreeParamSet::from_names(&names)?;
    for pair in &args.fixed {
        let (name, value) = parse_fixed_pair(pair)?;
        let slot = match name {
            "gq" | "g_q" => &mut free.g_q,
            "gp" | "g_p" => &mut free.g_p,
            "theta" => &mut free.theta,
            other => {
                return Err(Failure::config(format!(
                    "unknown parameter {other:?} in --fixed"
                )))
            }
        };
        if slot.is_free() {
            return Err(Failure::config(format!(
                "{name} is listed in --free and --fixed"
            )));
        }
        *slot = ParamSpec::Fixed(value);
    }
    let out = optimize_profile(
        &dist,
        args.channel.transmissivity,
        &c,
        &free,
        &Bounds::default(),
    )?;
    println!(
        "{{\"best_fidelity\": {}, \"g_q\": {}, \"g_p\": {}, \"theta\": {}, \"starts_used\": {}, \"iterations\": {}, \"converged\": {}}}",
        fmt_f64(out.best_value),
        fmt_f64(out.best_params.g_q()),
        fmt_f64(out.best_params.g_p()),
        fmt_f64(out.best_params.theta()),
        out.starts_used,
        out.iterations,
        out.converged,
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let spec = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("cannot read {path}: {e}")))?;
            sweep::parse_spec(&text)?
        }
        (None, Some(id)) => {
            sweep::preset(id).ok_or_else(|| Failure::config(format!("unknown preset {id:?}")))?
        }
        _ => {
            return Err(Failure::config(
                "exactly one of --config or --preset is required",
            ))
        }
    };
    let csv = sweep::run_sweep(&spec, args.threads)?;
    sweep::write_atomic(&args.out, &csv)?;
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<(), Failure> {
    if args.trials == 0 {
        return Err(Failure::config("--trials must be at least 1"));
    }
    // Negated so a NaN tolerance is also rejected.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(args.tol >= 0.0) {
        return Err(Failure::config("--tol must be nonnegative"));
    }
    let report = compare_fidelity_routes(args.trials, args.seed, args.tol)?;
    let worst = match &report.worst {
        None => "null".to_string(),
        Some(w) => format!(
            "{{\"theta\": {}, \"g_q\": {}, \"g_p\": {}, \"T\": {}, \"kappa_t\": {}, \"n_bar\": {}, \"r\": {}, \"eps_re\": {}, \"eps_im\": {}, \"closed\": {}, \"integral\": {}, \"tensor\": {}, \"deviation\": {}}}",
            fmt_f64(w.scenario.params.theta()),
            fmt_f64(w.scenario.params.g_q()),
            fmt_f64(w.scenario.params.g_p()),
            fmt_f64(w.scenario.params.transmissivity()),
            fmt_f64(w.scenario.channel.kappa_t()),
            fmt_f64(w.scenario.channel.n_bar()),
            fmt_f64(w.scenario.channel.r()),
            fmt_f64(w.scenario.eps.re()),
            fmt_f64(w.scenario.eps.im()),
            fmt_f64(w.closed),
            fmt_f64(w.integral),
            fmt_f64(w.tensor),
            fmt_f64(w.deviation),
        ),
    };
    println!(
        "{{\"trials\": {}, \"max_abs_dev\": {}, \"failures\": {}, \"worst_case\": {}}}",
        report.trials,
        fmt_f64(report.max_abs_dev),
        report.failures,
        worst,
    );
    if report.failures > 0 {
        return Err(Failure {
            code: 5,
            msg: format!(
                "{} of {} scenarios exceeded tolerance {:e}",
                report.failures, report.trials, args.tol
            ),
        });
    }
    Ok(())
}
