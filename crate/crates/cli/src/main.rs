mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use duelforge::envcore::{random_rollout, GameId, Mode};
use duelforge::metrics::build_report;
use duelforge::neuralnet::deserialize;
use duelforge::ramscope::{ram_complexity, render_heatmap, temporal_variation};
use duelforge::trainer::{pretrain_single_player, run_seed_matrix, write_pretrain_outputs, RunStatus, Variant};

use config::CliConfig;

#[derive(Parser, Debug)]
#[command(name = "duelforge", version, about = "Self-play transfer experiments on byte-state games")]
struct Cli {
    /// TOML config; flags given on the command line take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Maximum concurrent workers; 1 gives bitwise-reproducible output.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pretrain on the single-player variant of a game.
    Pretrain(PretrainArgs),
    /// Two-player self-play over a list of seeds.
    Selfplay(SelfplayArgs),
    /// Record a random-agent trace and measure its RAM complexity.
    AnalyzeRam(AnalyzeArgs),
    /// Build report tables from a results directory.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output directory [default: $DUELFORGE_OUT or ./results]
    #[arg(long, env = "DUELFORGE_OUT")]
    out: Option<PathBuf>,
}

impl OutArg {
    fn dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("results"))
    }
}

#[derive(Args, Debug)]
struct PretrainArgs {
    #[arg(long, value_parser = parse_game)]
    game: GameId,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct SelfplayArgs {
    #[arg(long, value_parser = parse_game)]
    game: GameId,
    #[arg(long, value_parser = parse_variant)]
    variant: Variant,
    /// Pretrained checkpoint; required for the transferred variant.
    #[arg(long, required_if_eq("variant", "transferred"))]
    from: Option<PathBuf>,
    #[arg(long)]
    episodes: Option<u64>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long, value_parser = parse_game)]
    game: GameId,
    /// Trace length [default: 50000]
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Directory holding episode logs and manifests [default: the output root]
    #[arg(long)]
    results: Option<PathBuf>,
    /// Directory holding `<game>.heat.csv` profiles [default: --results]
    #[arg(long)]
    profiles: Option<PathBuf>,
    /// Output root; tables go to `<out>/report`.
    #[command(flatten)]
    out: OutArg,
}

fn parse_game(s: &str) -> Result<GameId, String> {
    s.parse().map_err(|e: duelforge::envcore::EnvError| e.to_string())
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: duelforge::trainer::TrainError| e.to_string())
}

/// Failure with its exit code: 2 for bad input, 1 for runtime errors.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load_config(path: Option<&Path>) -> Result<CliConfig, Failure> {
    match path {
        Some(p) => CliConfig::load(p).map_err(Failure::Usage),
        None => Ok(CliConfig::default()),
    }
}

fn pretrain(cfg: &mut CliConfig, args: &PretrainArgs, workers: usize) -> Result<(), Failure> {
    cfg.game = args.game;
    if let Some(steps) = args.steps {
        cfg.single_player.steps = steps;
    }
    if let Some(seed) = args.seed {
        cfg.single_player.seed = seed;
    }
    cfg.experiment().validate().map_err(|e| Failure::Usage(e.into()))?;
    let dir = args.out.dir();
    cfg.echo(&dir, &format!("pretrain_{}", cfg.game))?;
    let outcome = pretrain_single_player(cfg.game, &cfg.env, &cfg.single_player, workers, &mut ())
        .map_err(anyhow::Error::from)?;
    let ckpt = write_pretrain_outputs(&outcome, &dir, cfg.game, cfg.single_player.seed).map_err(anyhow::Error::from)?;
    println!(
        "pretrained {} for {} env steps ({} gradient steps, {} episodes): {}",
        cfg.game,
        outcome.env_steps,
        outcome.grad_steps,
        outcome.curve.len(),
        ckpt.display()
    );
    Ok(())
}

fn selfplay(cfg: &mut CliConfig, args: &SelfplayArgs, workers: usize) -> Result<(), Failure> {
    cfg.game = args.game;
    cfg.two_player.variants = vec![args.variant];
    if let Some(e) = args.episodes {
        cfg.two_player.episode_budget = e;
    }
    if let Some(seeds) = &args.seeds {
        cfg.two_player.seeds = seeds.clone();
    }
    cfg.experiment().validate().map_err(|e| Failure::Usage(e.into()))?;
    let source = match (&args.from, args.variant) {
        (Some(path), Variant::Transferred) => {
            let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            Some(deserialize(&bytes).with_context(|| format!("loading checkpoint {}", path.display()))?)
        }
        _ => None,
    };
    let dir = args.out.dir();
    cfg.echo(&dir, &format!("selfplay_{}_{}", cfg.game, args.variant))?;
    let manifests = run_seed_matrix(&cfg.experiment(), source.as_ref(), &dir, workers).map_err(anyhow::Error::from)?;
    let mut failures = Vec::new();
    for m in &manifests {
        for r in &m.runs {
            match &r.status {
                RunStatus::Failed { error } => failures.push(format!("seed {}: {error}", r.seed)),
                status => println!(
                    "{} {} seed {}: {} episodes, {} env steps, {:.1}s ({status:?})",
                    m.game, r.variant, r.seed, r.episodes, r.env_steps, r.wall_seconds
                ),
            }
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Runtime(anyhow!("{} run(s) failed: {}", failures.len(), failures.join("; "))))
    }
}

fn analyze_ram(cfg: &mut CliConfig, args: &AnalyzeArgs) -> Result<(), Failure> {
    cfg.game = args.game;
    if let Some(steps) = args.steps {
        cfg.ramscope.steps = steps;
    }
    if let Some(seed) = args.seed {
        cfg.ramscope.seed = seed;
    }
    if cfg.ramscope.steps < 2 {
        return Err(Failure::Usage(anyhow!(
            "temporal variation needs a trace of at least 2 steps, got {}",
            cfg.ramscope.steps
        )));
    }
    let dir = args.out.dir();
    cfg.echo(&dir, &format!("analyze_{}", cfg.game))?;
    let env = cfg.env.env_config(cfg.game, Mode::TwoPlayer, cfg.ramscope.seed);
    let trace = random_rollout(&env, cfg.ramscope.steps, cfg.ramscope.seed).map_err(anyhow::Error::from)?;
    let trace_path = dir.join(format!("{}.trace", cfg.game));
    trace.save(&trace_path).map_err(anyhow::Error::from)?;
    let profile = temporal_variation(&trace, &cfg.ramscope.variation())
        .with_context(|| format!("analyzing {}", trace_path.display()))?;
    let files = render_heatmap(&profile, &dir, cfg.game.name()).map_err(anyhow::Error::from)?;
    let complexity = ram_complexity(&profile);
    let line = format!("{} {complexity}", cfg.game);
    let value_path = dir.join(format!("{}.complexity.txt", cfg.game));
    std::fs::write(&value_path, format!("{line}\n")).with_context(|| format!("writing {}", value_path.display()))?;
    println!("{line}");
    eprintln!(
        "wrote {}, {} and {}",
        trace_path.display(),
        files.csv.display(),
        files.pgm.display()
    );
    Ok(())
}

fn report(cfg: &CliConfig, args: &ReportArgs) -> Result<(), Failure> {
    let root = args.out.dir();
    let results = args.results.clone().unwrap_or_else(|| root.clone());
    if !results.is_dir() {
        return Err(Failure::Usage(anyhow!("results directory {} does not exist", results.display())));
    }
    let profiles = args.profiles.clone().unwrap_or_else(|| results.clone());
    let out = root.join("report");
    cfg.echo(&out, "report")?;
    let summary = build_report(&results, &profiles, &out, &cfg.report).map_err(anyhow::Error::from)?;
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    for row in &summary.rows {
        println!("{} ram_complexity={} norm_diff_means={}", row.game, row.ram_complexity, row.norm_diff_means);
    }
    if let Some(r) = summary.pearson_r {
        println!("pearson_r={r}");
    }
    println!("report written to {}", out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if cli.workers == 0 {
        return Err(Failure::Usage(anyhow!("--workers must be at least 1")));
    }
    let mut cfg = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Pretrain(a) => pretrain(&mut cfg, a, cli.workers),
        Command::Selfplay(a) => selfplay(&mut cfg, a, cli.workers),
        Command::AnalyzeRam(a) => analyze_ram(&mut cfg, a),
        Command::Report(a) => report(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 on usage errors and 0 for --help / --version
            e.exit();
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
