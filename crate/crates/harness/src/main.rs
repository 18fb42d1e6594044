use std::ops::Range;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use policy_zoom::config::{ExperimentConfig, OracleBudget};
use policy_zoom::experiment::{run_setup, sweep};
use policy_zoom::export::{export_plots, fmt_f64, to_json_string};
use policy_zoom::oracle::OracleCache;
use policy_zoom::report::{write_report, OracleSummary};
use policy_zoom::zoom::zooming_diagnostic;
use policy_zoom_core::agent::{Agent, AgentKind};
use policy_zoom_core::kernel::build_ball;
use policy_zoom_core::sim::run_agent;

#[derive(Parser)]
#[command(name = "policy-zoom", version, about = "Policy-zooming reinforcement learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seed and write its trajectory and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the first seed of the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a range of seeds in parallel and aggregate them.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `a..b` (exclusive) or `a..=b`.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Range<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the optimal gain of the configured family.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// `resolution,rollout,replications`; defaults to the config's.
        #[arg(long)]
        budget: Option<String>,
    },
    /// Diagnostics.
    Diag {
        #[command(subcommand)]
        what: Diag,
    },
    /// Downsample the curve CSVs under a directory for plotting.
    ExportPlots {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
enum Diag {
    /// Greedy covers of the oracle's gap bands and the fitted dimension.
    Zoom {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.2, 0.1, 0.05, 0.025])]
        gammas: Vec<f64>,
    },
    /// Confidence-ball summary per policy after a model-based run.
    Kernels {
        #[arg(long)]
        config: PathBuf,
    },
    /// Partition leaves per policy after a model-based run.
    Partition {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_seeds(text: &str) -> Result<Range<u64>, String> {
    let err = || format!("expected `a..b` or `a..=b`, got `{text}`");
    let (a, b, inclusive) = if let Some((a, b)) = text.split_once("..=") {
        (a, b, true)
    } else if let Some((a, b)) = text.split_once("..") {
        (a, b, false)
    } else {
        return Err(err());
    };
    let a: u64 = a.trim().parse().map_err(|_| err())?;
    let b: u64 = b.trim().parse().map_err(|_| err())?;
    let end = if inclusive { b + 1 } else { b };
    if end <= a {
        return Err(format!("empty seed range `{text}`"));
    }
    Ok(a..end)
}

fn oracle_for(cfg: &ExperimentConfig) -> anyhow::Result<policy_zoom::oracle::GainEstimate> {
    let setup = cfg.setup()?;
    let cache = OracleCache::new(cfg.cache_dir());
    Ok(cache.get_or_compute(&setup.env_spec, &setup.env, &setup.family, &cfg.oracle)?)
}

/// Model-based agent after a full run on the config's first seed.
fn trained_mb_agent(cfg: &ExperimentConfig) -> anyhow::Result<Agent> {
    let mut setup = cfg.setup()?;
    setup.options.kind = AgentKind::ModelBased;
    let mut agent = Agent::new(&setup.env, setup.family.clone(), setup.options)?;
    run_agent(&setup.env, &mut agent, cfg.horizon, cfg.seeds[0])?;
    Ok(agent)
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run { config, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let seed = seed.unwrap_or(cfg.seeds[0]);
            let run = run_setup(&cfg.setup()?, seed)?;
            let oracle = oracle_for(&cfg)?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let summary = write_report(&dir, &cfg, &[run], &oracle, None)?;
            println!(
                "seed {seed}: regret {} over {} steps, {} episodes -> {}",
                fmt_f64(summary.runs[0].final_regret),
                cfg.horizon,
                summary.runs[0].episodes,
                dir.display()
            );
        }
        Command::Sweep { config, seeds, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.seeds = seeds.collect();
            let runs = sweep(&cfg, &cfg.seeds)?;
            let oracle = oracle_for(&cfg)?;
            let dir = out.unwrap_or_else(|| cfg.output.dir.clone());
            let summary = write_report(&dir, &cfg, &runs, &oracle, None)?;
            if let Some([m, s]) = summary.final_regret {
                println!("{} seeds: mean regret {} ± {} -> {}", runs.len(), fmt_f64(m), fmt_f64(s), dir.display());
            }
        }
        Command::Oracle { config, budget } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(b) = budget {
                cfg.oracle = OracleBudget::parse(&b, cfg.oracle.seed)?;
            }
            let est = oracle_for(&cfg)?;
            print!("{}", to_json_string(&OracleSummary::from(&est))?);
        }
        Command::Diag { what } => match what {
            Diag::Zoom { config, gammas } => {
                let cfg = ExperimentConfig::load(&config)?;
                if gammas.iter().any(|g| !(*g > 0.0)) {
                    bail!("gammas must be positive");
                }
                let setup = cfg.setup()?;
                let oracle = oracle_for(&cfg)?;
                let agent = Agent::new(&setup.env, setup.family.clone(), setup.options)?;
                let diag = zooming_diagnostic(
                    &oracle,
                    &setup.family,
                    &setup.options.metric,
                    &gammas,
                    agent.constants().c_zoom,
                )?;
                println!("gamma,band_cover,near_cover");
                for r in &diag.rows {
                    println!("{},{},{}", fmt_f64(r.gamma), r.band_cover, r.near_cover);
                }
                match diag.dimension {
                    Some(d) => println!("# zooming dimension estimate {}", fmt_f64(d)),
                    None => println!("# zooming dimension estimate unavailable"),
                }
            }
            Diag::Kernels { config } => {
                let cfg = ExperimentConfig::load(&config)?;
                let agent = trained_mb_agent(&cfg)?;
                let radius = agent.mb_context().radius;
                println!("policy,plays,leaves,fine_cells,min_radius,max_radius,gain,diam_b");
                for (rec, model) in agent.records().iter().zip(agent.models()) {
                    let ball = build_ball(&model.log, &model.tree, &radius);
                    let lo = ball.radii.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = ball.radii.iter().copied().fold(0.0, f64::max);
                    println!(
                        "{},{},{},{},{},{},{},{}",
                        rec.id,
                        rec.plays,
                        ball.leaves(),
                        ball.center.cols(),
                        fmt_f64(lo),
                        fmt_f64(hi),
                        fmt_f64(model.gain),
                        fmt_f64(model.diam_b)
                    );
                }
            }
            Diag::Partition { config } => {
                let cfg = ExperimentConfig::load(&config)?;
                let agent = trained_mb_agent(&cfg)?;
                println!("policy,level,lower_corner,count,n_min,n_max");
                for (rec, model) in agent.records().iter().zip(agent.models()) {
                    let tree = &model.tree;
                    for leaf in tree.leaves() {
                        let region = leaf.cell.region(tree.bounds());
                        let corner: Vec<String> = region.sides().iter().map(|s| fmt_f64(s.lo)).collect();
                        let (n_min, n_max) = tree.thresholds(&leaf.cell);
                        println!(
                            "{},{},{},{},{},{}",
                            rec.id,
                            leaf.cell.level,
                            corner.join(" "),
                            leaf.count,
                            fmt_f64(n_min),
                            fmt_f64(n_max)
                        );
                    }
                }
            }
        },
        Command::ExportPlots { input } => {
            let files = export_plots(&input).with_context(|| format!("exporting plots from {}", input.display()))?;
            if files.is_empty() {
                bail!("no aggregate.csv or relative_reward.csv under {}", input.display());
            }
            for f in files {
                println!("{}", f.display());
            }
        }
    }
    Ok(())
}
