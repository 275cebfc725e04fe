use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use qfr::regularizers::Family;
use qfr::solvers::{Algorithm, NuChoice, Schedule};
use qfr::values::FeedbackKind;
use qfr_harness::{ConstantsRequest, GridSpec, RunConfig};

#[derive(Parser)]
#[command(name = "qfr", version, about = "Tabular two-player zero-sum extensive-form game solver lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration over consecutive seeds and write the convergence CSV.
    Run(RunArgs),
    /// Run every cell of a grid and rank the cells.
    Grid {
        /// JSON grid file: axes object or a grid name such as "paper-grid".
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Use a named grid instead of a file.
        #[arg(long, conflicts_with = "spec")]
        name: Option<String>,
        #[command(flatten)]
        base: RunArgs,
    },
    /// Print the game constants and the learning-rate condition report.
    Constants(ConstantsArgs),
    /// Exact best response against a profile file.
    Bestresp {
        #[arg(long, default_value = "kuhn")]
        game: String,
        /// JSON file {"strategy": [[...], ...]} in infoset order.
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        player: u8,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// kuhn, leduc or a JSON game file.
    #[arg(long)]
    game: Option<String>,
    #[arg(long)]
    algo: Option<Algorithm>,
    #[arg(long)]
    feedback: Option<FeedbackKind>,
    #[arg(long)]
    reg: Option<Family>,
    #[arg(long)]
    eta: Option<f64>,
    /// uniform or depth:RATIO.
    #[arg(long)]
    schedule: Option<Schedule>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Perturbation base: leaves or uniform.
    #[arg(long, value_parser = parse_nu)]
    nu: Option<NuChoice>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Outcome-sampling exploration rate.
    #[arg(long)]
    explore: Option<f64>,
    /// Track the Bregman distance to the regularized equilibrium.
    #[arg(long)]
    reference: bool,
    /// Leave wall_ms empty so output is reproducible byte for byte.
    #[arg(long)]
    no_wall: bool,
    #[arg(long)]
    threads: Option<usize>,
}

fn parse_nu(s: &str) -> Result<NuChoice, String> {
    match s {
        "leaves" => Ok(NuChoice::Leaves),
        "uniform" => Ok(NuChoice::Uniform),
        other => Err(format!("unknown nu {other:?}")),
    }
}

impl RunArgs {
    fn into_config(self) -> anyhow::Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| path.display().to_string())?;
                serde_json::from_str(&text).with_context(|| path.display().to_string())?
            }
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(game, algo, feedback, reg, eta, schedule, tau, gamma, nu, iters, eval_every, seed, reps, explore);
        if self.out.is_some() {
            c.out = self.out;
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        c.reference |= self.reference;
        c.wall &= !self.no_wall;
        Ok(c)
    }
}

#[derive(Args)]
struct ConstantsArgs {
    #[arg(long, default_value = "kuhn")]
    game: String,
    #[arg(long, default_value = "tq")]
    feedback: FeedbackKind,
    #[arg(long, default_value = "entropy")]
    reg: Family,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// η₀ for the condition report.
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    #[arg(long, default_value = "uniform")]
    schedule: Schedule,
    /// Feedback from single sampled trajectories.
    #[arg(long)]
    outcome_sampling: bool,
    #[arg(long, default_value_t = 100_000)]
    horizon: usize,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => {
            let config = args.into_config()?;
            let output = qfr_harness::run(&config)?;
            if config.out.is_none() {
                print!("{}", output.to_csv());
            }
            if let Some(m) = output.monitor() {
                eprintln!(
                    "m-bound monitor: {} observations, {} hard, {} soft violations, m in [{:e}, {:e}]",
                    m.observations, m.hard, m.soft, m.min_seen, m.max_seen
                );
            }
            eprintln!("mean final exploitability {:e}", output.mean_final_exploitability());
        }
        Command::Grid { spec, name, base } => {
            let spec = match (spec, name) {
                (Some(path), _) => GridSpec::load(&path)?,
                (None, Some(name)) => GridSpec::named(&name)?,
                (None, None) => anyhow::bail!("grid needs --spec FILE or --name NAME"),
            };
            let config = base.into_config()?;
            let output = qfr_harness::grid(&spec, &config)?;
            if config.out.is_none() {
                print!("{}", output.to_csv());
            }
            let w = output.winner();
            eprintln!(
                "winner: cell {} eta={} tau={} gamma={} reg={} expl_last={:e}",
                w.index, w.eta, w.tau, w.gamma, w.reg, w.score
            );
        }
        Command::Constants(a) => {
            let report = qfr_harness::constants(&ConstantsRequest {
                game: a.game,
                feedback: a.feedback,
                reg: a.reg,
                tau: a.tau,
                gamma: a.gamma,
                eta: a.eta,
                schedule: a.schedule,
                outcome_sampling: a.outcome_sampling,
                horizon: a.horizon,
                delta: a.delta,
            })?;
            if a.json {
                println!("{}", report.to_json());
            } else {
                print!("{}", report.to_text());
            }
        }
        Command::Bestresp { game, profile, player } => {
            let report = qfr_harness::bestresp(&game, &profile, player)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(())
}
