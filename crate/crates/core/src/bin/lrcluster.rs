use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lrcluster::bounds::{self, BoundParams, Regime};
use lrcluster::dynamics;
use lrcluster::harness::{self, ExperimentConfig, PauliString, VerificationReport};
use lrcluster::io::{self, Fingerprint};
use lrcluster::linalg;
use lrcluster::model::{LindbladModel, ModelFamily, ModelSpec, Rates};
use lrcluster::spectral;
use lrcluster::superop::{DenseOperator, Direction};
use lrcluster::{Error, Result};

#[derive(Parser)]
#[command(name = "lrcluster", version, about = "Long-range open spin chains: dynamics, spectra, envelopes")]
struct Cli {
    /// Emit JSON reports instead of CSV/text.
    #[arg(long, global = true)]
    json: bool,
    /// Override the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Integrator tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or export a model.
    #[command(subcommand)]
    Model(ModelCmd),
    /// Evolve an observable (adjoint) or a state (forward) and print its norm curve.
    Evolve(EvolveArgs),
    /// Liouvillian spectrum, gap and steady state.
    Spectrum(SpectrumArgs),
    /// Light-cone suite from a config.
    Lightcone(ConfigArgs),
    /// Clustering suite from a config.
    Clustering(ConfigArgs),
    /// Evaluate analytic envelopes.
    #[command(subcommand)]
    Bounds(BoundsCmd),
    /// Run verification suites.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Model spec JSON file; overrides the individual flags.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "davies")]
    family: FamilyArg,
    #[arg(long = "n", default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    #[arg(long = "beta-t", default_value_t = 1.0)]
    beta_t: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    XyDamped,
    Davies,
}

impl ModelArgs {
    fn spec(&self, seed: Option<u64>) -> Result<ModelSpec> {
        let mut spec = match &self.spec {
            Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Config(e.to_string()))?,
            None => ModelSpec {
                family: match self.family {
                    FamilyArg::XyDamped => ModelFamily::XyDamped,
                    FamilyArg::Davies => ModelFamily::Davies,
                },
                n: self.n,
                alpha: self.alpha,
                rates: Rates::default(),
                beta_t: self.beta_t,
                seed: 0,
                two_site: true,
            },
        };
        if let Some(s) = seed {
            spec.seed = s;
        }
        Ok(spec)
    }

    fn build(&self, seed: Option<u64>) -> Result<LindbladModel> {
        self.spec(seed)?.build()
    }
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Build a model and print a summary.
    Build(ModelArgs),
    /// Export the JSON term list.
    Export {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DirArg {
    Adjoint,
    Forward,
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Pauli string such as "X0 Z2" (adjoint) or ignored for forward evolution of |0..0>.
    #[arg(long, default_value = "X0")]
    observable: String,
    #[arg(long, value_enum, default_value = "adjoint")]
    direction: DirArg,
    /// Comma-separated times; default 0.05·2^k, k = 0..7.
    #[arg(long = "t-grid", value_delimiter = ',')]
    t_grid: Option<Vec<f64>>,
    /// Binary dump of the final operator.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Binary dump of the steady state.
    #[arg(long = "sigma-dump")]
    sigma_dump: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config; the shipped default when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for curves and reports (overrides the config).
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BoundsCmd {
    /// Envelope values on an (r, t) grid as CSV.
    Eval {
        #[arg(long)]
        regime: Regime,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long = "r-grid", value_delimiter = ',', default_value = "1,2,4,8")]
        r_grid: Vec<f64>,
        #[arg(long = "t-grid", value_delimiter = ',', default_value = "0.1,1")]
        t_grid: Vec<f64>,
        /// JSON object with any of C, v, K, mu, gamma_f, lambda, beta_ls, n_sites.
        #[arg(long = "params-json")]
        params_json: Option<String>,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Every acceptance criterion.
    All(ConfigArgs),
}

/// Failure classes mapped onto exit codes.
enum Outcome {
    Pass,
    ChecksFailed,
}

fn stdout(text: &str) -> Result<()> {
    let mut lock = std::io::stdout().lock();
    lock.write_all(text.as_bytes())?;
    lock.flush()?;
    Ok(())
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => stdout(text)?,
    }
    Ok(())
}

fn load_config(args: &ConfigArgs, cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::shipped_default()?,
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    if let Some(d) = &args.out_dir {
        cfg.output_dir = Some(d.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &VerificationReport, json: bool) -> Result<Outcome> {
    if json {
        stdout(&report.to_json()?)?;
    } else {
        let mut text = report.to_csv();
        for (k, pass, n) in report.criteria() {
            text += &format!("# criterion {k}: {} ({n} checks)\n", if pass { "PASS" } else { "FAIL" });
        }
        stdout(&text)?;
    }
    Ok(if report.all_pass { Outcome::Pass } else { Outcome::ChecksFailed })
}

fn write_artifacts(cfg: &ExperimentConfig, artifacts: &harness::Artifacts) -> Result<()> {
    if let Some(dir) = &cfg.output_dir {
        artifacts.write_to(dir)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Outcome> {
    let tol = cli.tol.unwrap_or(dynamics::DEFAULT_TOL);
    let fp = |seed: u64| Fingerprint::new(seed, [("tol", tol)]);
    match &cli.command {
        Command::Model(ModelCmd::Build(m)) => {
            let model = m.build(cli.seed)?;
            let summary = serde_json::json!({
                "label": model.label,
                "num_sites": model.num_sites(),
                "hilbert_dim": model.hilbert_dim(),
                "alpha": model.alpha,
                "terms": model.terms.len(),
                "power_law_ratio": model.power_law_ratio(),
            });
            stdout(&(serde_json::to_string_pretty(&summary)? + "\n"))?;
        }
        Command::Model(ModelCmd::Export { model, out }) => {
            let m = model.build(cli.seed)?;
            emit(&(m.to_json()? + "\n"), out.as_ref())?;
        }
        Command::Evolve(a) => {
            let spec = a.model.spec(cli.seed)?;
            let model = spec.build()?;
            let n = model.num_sites();
            let grid = a.t_grid.clone().unwrap_or_else(|| dynamics::default_time_grid(8));
            let (dir, op) = match a.direction {
                DirArg::Adjoint => {
                    let p: PauliString = a.observable.parse()?;
                    (Direction::Adjoint, p.operator(n)?)
                }
                DirArg::Forward => {
                    let d = model.hilbert_dim();
                    let mut rho = linalg::zeros(d);
                    rho[(0, 0)] = linalg::ONE;
                    (Direction::Forward, DenseOperator::new(rho)?)
                }
            };
            let ev = match dir {
                Direction::Adjoint => dynamics::evolve_adjoint(&model, &op, &grid, tol)?,
                Direction::Forward => dynamics::evolve_forward(&model, &op, &grid, tol)?,
            };
            let curve = dynamics::Curve {
                times: ev.times.clone(),
                values: ev
                    .snapshots
                    .iter()
                    .map(|s| match dir {
                        Direction::Adjoint => linalg::op_norm(&s.matrix),
                        Direction::Forward => linalg::trace_norm(&s.matrix),
                    })
                    .collect(),
                steps: ev.steps_at.clone(),
                max_local_error: ev.stats.max_local_error,
            };
            if let (Some(path), Some(last)) = (&a.dump, ev.snapshots.last()) {
                io::write_operator_dump(std::fs::File::create(path)?, &last.matrix)?;
            }
            let text = if cli.json {
                io::json_text(Some(&fp(spec.seed)), &curve)?
            } else {
                io::curve_csv(Some(&fp(spec.seed)), &curve)
            };
            emit(&text, a.out.as_ref())?;
        }
        Command::Spectrum(a) => {
            let spec = a.model.spec(cli.seed)?;
            let model = spec.build()?;
            let s = spectral::analyze(&model)?;
            if let Some(path) = &a.sigma_dump {
                io::write_operator_dump(std::fs::File::create(path)?, &s.steady_state.matrix)?;
            }
            let text = if cli.json {
                let rev = s.half_reversibility().ok();
                io::json_text(
                    Some(&fp(spec.seed)),
                    &serde_json::json!({
                        "gap": s.gap,
                        "primitive": s.primitive,
                        "null_dim": s.null_dim,
                        "reversible": rev.as_ref().map(|c| c.reversible),
                        "reversibility_residual": rev.as_ref().map(|c| c.residual),
                        "spectrum": s.spectrum_rows(),
                    }),
                )?
            } else {
                io::spectrum_csv(Some(&fp(spec.seed)), &s.spectrum_rows())
            };
            emit(&text, a.out.as_ref())?;
            eprintln!("gap = {:e}, primitive = {}, null_dim = {}", s.gap, s.primitive, s.null_dim);
        }
        Command::Lightcone(args) => {
            let cfg = load_config(args, cli)?;
            let (report, artifacts) = harness::run_lightcone_suite(&cfg)?;
            write_artifacts(&cfg, &artifacts)?;
            return print_report(&report, cli.json);
        }
        Command::Clustering(args) => {
            let cfg = load_config(args, cli)?;
            let (report, artifacts) = harness::run_clustering_suite(&cfg)?;
            write_artifacts(&cfg, &artifacts)?;
            return print_report(&report, cli.json);
        }
        Command::Bounds(BoundsCmd::Eval {
            regime,
            alpha,
            d,
            r_grid,
            t_grid,
            params_json,
        }) => {
            let mut p: BoundParams = match params_json {
                Some(text) => serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?,
                None => BoundParams::default(),
            };
            p.alpha = *alpha;
            p.d = *d;
            let mut rows = Vec::new();
            for &r in r_grid {
                for &t in t_grid {
                    let v = bounds::envelope_lr(&p, *regime, r, t)?;
                    rows.push(vec![io::fmt_f64(r), io::fmt_f64(t), io::fmt_f64(v), regime.to_string()]);
                }
            }
            stdout(&io::csv_text(Some(&fp(cli.seed.unwrap_or(0))), &["r", "t", "value", "regime"], rows))?;
        }
        Command::Verify(VerifyCmd::All(args)) => {
            let cfg = load_config(args, cli)?;
            let (report, _) = harness::verify_all(&cfg)?;
            return print_report(&report, cli.json);
        }
    }
    Ok(Outcome::Pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    faer::set_global_parallelism(faer::Par::Seq);
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => ExitCode::from(1),
        // A closed pipe (e.g. `| head`) is not an error.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
