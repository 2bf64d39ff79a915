mod output;
mod sets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use subwalk::bernstein::{coefficients, BernsteinSpec};
use subwalk::capacity::{capacity_variational, equilibrium};
use subwalk::green::{
    asymptotic_constant, riesz_ratio, stated_riesz_ratio, GreenConfig, GreenEvaluator,
};
use subwalk::massiveness::{
    fat_thorn_rule, hyperplane_return_sum, thorn_series_terms, wiener_test, ThornProfile,
};
use subwalk::montecarlo::{hitting_probability, SimConfig, Stopping};
use subwalk::walk_kernel::LatticePoint;
use subwalk::Error;

use output::{CliError, Emitter, Format};

#[derive(Parser, Serialize)]
#[command(name = "subwalk", version, about = "Subordinated random walks on Z^d")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write the result here and a `<out>.manifest.json` sidecar.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
enum Command {
    /// Subordination probabilities c(ψ, n) and their partial sums.
    Coeffs(CoeffsArgs),
    /// Green function value with error bound and asymptotic comparison.
    Green(GreenArgs),
    /// Capacity of a finite set.
    Capacity(CapacityArgs),
    /// Dyadic-shell Wiener test for an infinite set.
    Wiener(WienerArgs),
    /// Massiveness of a thorn by the thin-thorn series or the inscribed-ball rule.
    Thorn(ThornArgs),
    /// Partial return integrals for a coordinate hyperplane.
    Hyperplane(HyperplaneArgs),
    /// Monte Carlo hitting probability.
    Simulate(SimulateArgs),
}

#[derive(Args, Serialize, Clone)]
struct PsiArgs {
    /// Stability index α in (0, 2].
    #[arg(long)]
    alpha: f64,
    /// Log-correction exponent; selects ψ(λ) ∝ λ^{α/2} log(e + 1/λ)^{-γ}.
    #[arg(long = "log-gamma")]
    log_gamma: Option<f64>,
}

impl PsiArgs {
    fn spec(&self) -> subwalk::Result<BernsteinSpec> {
        match self.log_gamma {
            Some(g) => BernsteinSpec::log_power(self.alpha, g),
            None => BernsteinSpec::power(self.alpha),
        }
    }
}

#[derive(Args, Serialize, Clone)]
struct EvalArgs {
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[command(flatten)]
    psi: PsiArgs,
    /// Exact-zone step count K.
    #[arg(long, default_value_t = 512)]
    k_exact: usize,
    /// Exact-zone radius R.
    #[arg(long, default_value_t = 160)]
    radius: usize,
    /// Relative error tolerance on Green values.
    #[arg(long, default_value_t = 0.02)]
    tol: f64,
}

impl EvalArgs {
    fn evaluator(&self) -> subwalk::Result<GreenEvaluator> {
        let cfg = GreenConfig {
            k_exact: self.k_exact,
            radius: self.radius,
            tolerance: self.tol,
            ..GreenConfig::default()
        };
        GreenEvaluator::new(&self.psi.spec()?, self.dim, cfg)
    }
}

#[derive(Args, Serialize)]
struct CoeffsArgs {
    #[command(flatten)]
    psi: PsiArgs,
    /// Number of coefficients.
    #[arg(long, default_value_t = 10)]
    n: usize,
}

#[derive(Args, Serialize)]
struct GreenArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// Lattice point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    x: String,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
enum Method {
    Linear,
    Variational,
}

#[derive(Args, Serialize)]
struct CapacityArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// Finite set: point | ball:R | cylinder:L,BASE | file:PATH.
    #[arg(long)]
    set: String,
    #[arg(long, value_enum, default_value_t = Method::Linear)]
    method: Method,
}

#[derive(Args, Serialize)]
struct WienerArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// axis | hyperplane:I | ball:R | cylinder:L,BASE | cone:DELTA | thorn:KIND:VALUE | file:PATH.
    #[arg(long)]
    set: String,
    #[arg(long, default_value_t = 0)]
    kmin: u32,
    #[arg(long, default_value_t = 6)]
    kmax: u32,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
enum ProfileKind {
    Linear,
    Power,
    Linoverlog,
}

#[derive(Args, Serialize)]
struct ThornArgs {
    #[arg(long, value_enum)]
    profile: ProfileKind,
    /// Slope of a linear profile.
    #[arg(long)]
    delta: Option<f64>,
    /// Exponent of a power profile.
    #[arg(long)]
    gamma: Option<f64>,
    /// Log exponent of a n/log(1+n)^β profile.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long)]
    alpha: f64,
    /// Number of series terms to list.
    #[arg(long, default_value_t = 20)]
    nmax: u32,
}

#[derive(Args, Serialize)]
struct HyperplaneArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Cut-offs ε, comma separated.
    #[arg(long, default_value = "1e-2,1e-3,1e-4,1e-5,1e-6")]
    eps: String,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    /// Target set.
    #[arg(long)]
    set: String,
    #[command(flatten)]
    psi: PsiArgs,
    /// Start point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    start: String,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// horizon:BASE_STEPS or escape:RADIUS[,BASE_STEPS].
    #[arg(long, default_value = "horizon:1048576")]
    stopping: String,
}

#[derive(Serialize)]
struct CoeffRow {
    n: usize,
    c: f64,
    partial_sum: f64,
}

#[derive(Serialize)]
struct GreenReport {
    x: Vec<i64>,
    norm: f64,
    value: f64,
    error_bound: f64,
    /// `G(x) ‖x‖^{d-α} / C_{d,α}`.
    ratio_to_asymptotic: Option<f64>,
    /// `A_{d,α} ‖x‖^{α-d} / G(x)`.
    ratio_to_riesz: Option<f64>,
    riesz_ratio_expected: Option<f64>,
    riesz_ratio_stated: Option<f64>,
}

#[derive(Serialize)]
struct ThornReport {
    profile: String,
    d: usize,
    alpha: f64,
    route: &'static str,
    verdict: String,
    terms: Vec<TermRow>,
}

#[derive(Serialize)]
struct TermRow {
    n: u32,
    term: f64,
}

#[derive(Serialize)]
struct HyperplaneRow {
    eps: f64,
    integral: f64,
}

#[derive(Serialize)]
struct HyperplaneOut {
    d: usize,
    alpha: f64,
    classification: String,
    rows: Vec<HyperplaneRow>,
}

fn parse_stopping(text: &str) -> subwalk::Result<Stopping> {
    let bad = || Error::Parse(format!("bad stopping rule {text:?}"));
    let (kind, rest) = text.split_once(':').ok_or_else(bad)?;
    match kind {
        "horizon" => Ok(Stopping::Horizon(rest.parse().map_err(|_| bad())?)),
        "escape" => {
            let (r, b) = rest.split_once(',').unwrap_or((rest, "1099511627776"));
            Ok(Stopping::EscapeRadius {
                radius: r.parse().map_err(|_| bad())?,
                budget: b.parse().map_err(|_| bad())?,
            })
        }
        _ => Err(bad()),
    }
}

fn run(cli: &Cli, out: &mut Emitter) -> Result<(), CliError> {
    match &cli.command {
        Command::Coeffs(a) => {
            let c = coefficients(&a.psi.spec()?, a.n)?;
            let sums = c.partial_sums();
            let rows: Vec<CoeffRow> = (1..=a.n)
                .map(|n| CoeffRow {
                    n,
                    c: c.get(n),
                    partial_sum: sums[n],
                })
                .collect();
            out.emit(&rows, &rows)
        }
        Command::Green(a) => {
            let x = sets::parse_point(&a.x)?;
            if x.len() != a.eval.dim {
                return Err(Error::Domain("point dimension differs from --dim".into()).into());
            }
            let eval = a.eval.evaluator()?;
            let p = LatticePoint::new(x.clone())?;
            let g = eval.green_full(&p)?;
            let norm = p.norm();
            let (d, alpha) = (eval.d(), eval.alpha());
            let power = eval.spec().is_power();
            let far = norm > 0.0 && power;
            let report = GreenReport {
                x,
                norm,
                value: g.value,
                error_bound: g.error_bound,
                ratio_to_asymptotic: far
                    .then(|| asymptotic_constant(d, alpha).map(|c| g.value * norm.powf(d as f64 - alpha) / c))
                    .transpose()?,
                ratio_to_riesz: far
                    .then(|| {
                        subwalk::green::riesz_constant(d, alpha).map(|a| a * norm.powf(alpha - d as f64) / g.value)
                    })
                    .transpose()?,
                riesz_ratio_expected: far.then(|| riesz_ratio(d, alpha)).transpose()?,
                riesz_ratio_stated: far.then(|| stated_riesz_ratio(d, alpha)),
            };
            if far && alpha < 2.0 {
                eprintln!(
                    "note: A·‖x‖^(α-d)/G(x) tends to (2d)^(-α/2) = {:.6}; the constant (2/d)^(α/2) = {:.6} disagrees with it",
                    report.riesz_ratio_expected.unwrap(),
                    report.riesz_ratio_stated.unwrap()
                );
            }
            out.emit(&report, std::slice::from_ref(&report))
        }
        Command::Capacity(a) => {
            let eval = a.eval.evaluator()?;
            let set = sets::parse_finite_set(&a.set, a.eval.dim)?;
            let res = match a.method {
                Method::Linear => equilibrium(&eval, &set)?,
                Method::Variational => capacity_variational(&eval, &set)?,
            };
            if res.flagged {
                eprintln!("warning: negative equilibrium weights survived refinement");
            }
            out.emit(&res, std::slice::from_ref(&res))
        }
        Command::Wiener(a) => {
            let eval = a.eval.evaluator()?;
            let set = sets::parse_set(&a.set, a.eval.dim)?;
            let rep = wiener_test(&eval, &set, a.kmin..=a.kmax)?;
            if let Some(note) = &rep.note {
                eprintln!("note: {note}");
            }
            out.emit(&rep, &rep.rows)
        }
        Command::Thorn(a) => {
            let (profile, value) = match a.profile {
                ProfileKind::Linear => ("linear", a.delta),
                ProfileKind::Power => ("power", a.gamma),
                ProfileKind::Linoverlog => ("linoverlog", a.beta),
            };
            let value = value.ok_or_else(|| {
                Error::Domain(format!("profile {profile} needs its parameter (--delta, --gamma or --beta)"))
            })?;
            let p = sets::parse_profile(profile, &value.to_string())?;
            let report = if let ThornProfile::Linear(_) = p {
                let v = fat_thorn_rule(&p, a.dim, a.alpha)?;
                ThornReport {
                    profile: format!("{profile} {value}"),
                    d: a.dim,
                    alpha: a.alpha,
                    route: "inscribed-ball",
                    verdict: v.verdict.to_string(),
                    terms: Vec::new(),
                }
            } else {
                let s = thorn_series_terms(&p, a.dim, a.alpha, 1..=a.nmax)?;
                ThornReport {
                    profile: format!("{profile} {value}"),
                    d: a.dim,
                    alpha: a.alpha,
                    route: "thin-thorn-series",
                    verdict: s.classification.map_or("undetermined".into(), |c| c.to_string()),
                    terms: s.terms.iter().map(|&(n, term)| TermRow { n, term }).collect(),
                }
            };
            out.emit(&report, &report.terms)
        }
        Command::Hyperplane(a) => {
            let eps = a
                .eps
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad ε {t:?}"))))
                .collect::<subwalk::Result<Vec<_>>>()?;
            let r = hyperplane_return_sum(a.dim, a.alpha, &eps)?;
            let report = HyperplaneOut {
                d: r.d,
                alpha: r.alpha,
                classification: r.classification.to_string(),
                rows: r.rows.iter().map(|&(eps, integral)| HyperplaneRow { eps, integral }).collect(),
            };
            out.emit(&report, &report.rows)
        }
        Command::Simulate(a) => {
            let start = sets::parse_point(&a.start)?;
            let set = sets::parse_set(&a.set, start.len())?;
            let cfg = SimConfig::new(a.psi.spec()?, start, a.trials, parse_stopping(&a.stopping)?, a.seed);
            let est = hitting_probability(&cfg, &set)?;
            if est.flagged {
                eprintln!("warning: no trial was resolved within the budget");
            }
            if est.lower_bound {
                eprintln!("note: horizon and budget-limited estimates are lower bounds for the hitting probability");
            }
            if est.surrogate_jumps > 0 {
                eprintln!("note: {} increments used the Gaussian surrogate", est.surrogate_jumps);
            }
            out.emit(&est, std::slice::from_ref(&est))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let mut out = Emitter::new(cli.format, cli.out.clone());
    let result = run(&cli, &mut out).and_then(|_| out.finish(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
