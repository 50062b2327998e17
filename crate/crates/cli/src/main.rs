mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lobcal_core::search::{Bounds, FreeParam};

use crate::config::{Config, Profile};

/// Configuration or argument problem; exits with status 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(
    name = "lobcal",
    version,
    about = "Limit-order-book model simulation and calibration"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true, env = "LOBCAL_CONFIG")]
    config: Option<PathBuf>,

    /// Scale preset applied before the configuration file.
    #[arg(long, global = true, value_enum)]
    profile: Option<Profile>,

    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Default,
    Calibrated,
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// Named parameter set to start from before individual overrides.
    #[arg(long, global = true, value_enum)]
    params: Option<Preset>,
    #[arg(long, global = true)]
    n_agents: Option<u32>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    lambda0: Option<f64>,
    #[arg(long, global = true)]
    c_lambda: Option<u32>,
    #[arg(long, global = true)]
    delta_s: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Monte Carlo steps (bars) per simulation.
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tick_size: Option<f64>,
    /// Initial price in ticks.
    #[arg(long, global = true)]
    p0: Option<u32>,
    #[arg(long, global = true)]
    q_var_steps: Option<usize>,
    #[arg(long, global = true)]
    replications: Option<usize>,
    /// Search interval, e.g. `lambda0=10:300`; repeatable.
    #[arg(long = "bound", global = true, value_parser = parse_bound)]
    bounds: Vec<(FreeParam, Bounds)>,
}

fn parse_free(s: &str) -> Result<FreeParam, String> {
    s.parse().map_err(|e: lobcal_core::Error| e.to_string())
}

fn parse_bound(s: &str) -> Result<(FreeParam, Bounds), String> {
    let (name, range) = s.split_once('=').ok_or("expected name=lower:upper")?;
    let (lo, hi) = range.split_once(':').ok_or("expected name=lower:upper")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((parse_free(name)?, Bounds::new(lo, hi).map_err(|e| e.to_string())?))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Nm,
    Ga,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GeneratorArg {
    RandomWalk,
    Model,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AcfSource {
    /// Tick files, signed with Lee-Ready.
    Data,
    /// Trade-sign dumps from `simulate`.
    Simulation,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a tick file into one-minute log-price bars.
    Ingest {
        input: PathBuf,
        #[arg(long, default_value = "bars.csv")]
        output: PathBuf,
    },
    /// Write a synthetic tick file.
    Synth {
        #[arg(long, default_value = "ticks.csv")]
        output: PathBuf,
        #[arg(long)]
        sessions: Option<usize>,
        #[arg(long, value_enum)]
        generator: Option<GeneratorArg>,
        /// Lag-one trade-sign persistence of the random-walk generator.
        #[arg(long)]
        persistence: Option<f64>,
        /// Also write the generator's true trade signs.
        #[arg(long)]
        signs_out: Option<PathBuf>,
    },
    /// Run the model and dump prices, diagnostics and trade signs.
    Simulate {
        /// Independent runs with seeds `seed, seed + 1, ...`.
        #[arg(long, default_value_t = 1)]
        ensemble: usize,
        /// Write the first run as a bar file usable as calibration data.
        #[arg(long)]
        bars_out: Option<PathBuf>,
        /// Dump the final book of each run.
        #[arg(long)]
        book: bool,
        #[arg(long)]
        max_lag: Option<usize>,
    },
    /// Calibrate to a bar file with repeated independent searches.
    Calibrate {
        #[arg(value_enum)]
        method: MethodArg,
        data: PathBuf,
        #[arg(long)]
        experiments: Option<usize>,
        /// Parameters searched by the GA, comma separated.
        #[arg(long, value_delimiter = ',', value_parser = parse_free)]
        free: Option<Vec<FreeParam>>,
        /// Write every objective evaluation per experiment.
        #[arg(long)]
        log_evaluations: bool,
    },
    /// Objective surface over a parameter pair on a Sobol design.
    Surface {
        /// Two parameters, e.g. `lambda0,c_lambda`.
        #[arg(value_delimiter = ',', value_parser = parse_free, num_args = 1..)]
        pair: Vec<FreeParam>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Trade-sign autocorrelation report.
    Acf {
        #[arg(value_enum)]
        source: AcfSource,
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        max_lag: Option<usize>,
        #[arg(long)]
        quote_lag_ms: Option<i64>,
        #[arg(long, default_value = "acf.csv")]
        output: PathBuf,
    },
    /// Confidence intervals across experiment artifacts.
    Aggregate {
        #[arg(required = true)]
        experiments: Vec<PathBuf>,
        #[arg(long, default_value = "ci.csv")]
        output: PathBuf,
    },
    /// Moments of a bar file.
    Moments {
        data: PathBuf,
        #[arg(long, default_value = "moments.csv")]
        output: PathBuf,
    },
}

impl Overrides {
    fn apply(&self, c: &mut Config) {
        match self.params {
            Some(Preset::Default) => c.model = lobcal_core::model::ModelParams::default(),
            Some(Preset::Calibrated) => c.model = lobcal_core::model::ModelParams::calibrated(),
            None => {}
        }
        let m = &mut c.model;
        macro_rules! set {
            ($($src:ident => $dst:expr),* $(,)?) => {
                $(if let Some(v) = self.$src { $dst = v; })*
            };
        }
        set!(
            n_agents => m.n_agents,
            delta => m.delta,
            lambda0 => m.lambda0,
            c_lambda => m.c_lambda,
            delta_s => m.delta_s,
            alpha => m.alpha,
            mu => m.mu,
            steps => c.run.steps,
            seed => c.run.seed,
            tick_size => c.run.tick_size,
            p0 => c.run.p0,
            q_var_steps => c.run.q_var_steps,
            replications => c.objective.replications,
        );
        if let Some(q) = self.q_var_steps {
            c.objective.q_var_steps = q;
        }
        for &(p, b) in &self.bounds {
            c.bounds.set(p, b);
        }
    }
}

fn configure_workers() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("LOBCAL_WORKERS") {
        let n: usize = v
            .parse()
            .map_err(|_| UsageError(format!("LOBCAL_WORKERS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| UsageError(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    configure_workers()?;
    let mut config = Config::load(cli.config.as_deref(), cli.profile)?;
    cli.overrides.apply(&mut config);
    config.validate()?;
    std::fs::create_dir_all(&cli.out_dir)?;
    let dir = cli.out_dir.as_path();
    let manifest = match cli.command {
        Command::Ingest { input, output } => commands::ingest(&config, dir, &input, &output)?,
        Command::Synth {
            output,
            sessions,
            generator,
            persistence,
            signs_out,
        } => commands::synth(
            &config,
            dir,
            &output,
            sessions,
            generator,
            persistence,
            signs_out.as_deref(),
        )?,
        Command::Simulate {
            ensemble,
            bars_out,
            book,
            max_lag,
        } => commands::simulate(&config, dir, ensemble, bars_out.as_deref(), book, max_lag)?,
        Command::Calibrate {
            method,
            data,
            experiments,
            free,
            log_evaluations,
        } => commands::calibrate(&config, dir, method, &data, experiments, free, log_evaluations)?,
        Command::Surface { pair, data, n } => {
            let pair: [FreeParam; 2] = pair
                .try_into()
                .map_err(|_| UsageError("surface needs exactly two parameters".into()))?;
            if pair[0] == pair[1] {
                return Err(UsageError("surface parameters must differ".into()).into());
            }
            commands::surface(&config, dir, pair, &data, n)?
        }
        Command::Acf {
            source,
            paths,
            max_lag,
            quote_lag_ms,
            output,
        } => commands::acf(&config, dir, source, &paths, max_lag, quote_lag_ms, &output)?,
        Command::Aggregate { experiments, output } => commands::aggregate(&config, dir, &experiments, &output)?,
        Command::Moments { data, output } => commands::moments(&config, dir, &data, &output)?,
    };
    manifest.finish(dir)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<lobcal_core::Error>() {
            return match e {
                e if e.is_data_error() => 2,
                lobcal_core::Error::InvalidParameter { .. } => 1,
                _ => 3,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<serde_json::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
