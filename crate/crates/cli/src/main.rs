use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use kbrl::harness::{
    self, Agent, Checkpoint, TrainConfig, CHECKPOINT_FORMAT, MODEL_FORMAT, TABLE_FORMAT,
};
use kbrl::inference::{EpisodeLimits, EpisodeRecord, UniformResolver};
use kbrl::ki::{KnowledgeItem, COMMON_PACK_DIR};
use kbrl::microciv::{parse_replay, GameMap, MicroCivEnv};
use kbrl::rl::{persist, ClusterModel, EpsilonSchedule, PolicyResolver, StateActionTable};

#[derive(Parser)]
#[command(
    name = "kbrl",
    version,
    about = "Rule-based agents with learned conflict resolution, on MicroCiv"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Base seed; per-episode seeds are derived from it.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Map fixture name or path to a map file.
    #[arg(long, global = true, default_value = "default")]
    fixture: String,
    /// Rule pack directories; defaults to the shipped packs.
    #[arg(long, global = true, num_args = 1..)]
    kb: Vec<PathBuf>,
    #[arg(long, global = true, default_value_t = 400)]
    max_turns: u32,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Play uniform-policy episodes and write the per-turn feature dataset.
    Collect {
        #[arg(long, default_value_t = 20)]
        episodes: usize,
    },
    /// Fit the state clusters from baseline episodes.
    Cluster {
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        #[arg(long, default_value_t = 16)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
    },
    /// Train the conflict-resolution policy against the scripted opponent.
    Train {
        #[arg(long, default_value_t = 300)]
        episodes: usize,
        #[arg(long, default_value_t = 16)]
        k: usize,
        /// `start:end` of the linear schedule, or one constant value.
        #[arg(long, default_value = "0.1:0.02")]
        epsilon: Epsilon,
        /// Episodes per parallel wave; 1 updates after every episode.
        #[arg(long, default_value_t = 1)]
        wave: usize,
        /// Baseline episodes for clustering when no model is given.
        #[arg(long, default_value_t = 20)]
        cluster_episodes: usize,
        /// Use this cluster model instead of fitting one.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Continue from `<out>/checkpoint.json`.
        #[arg(long)]
        resume: bool,
    },
    /// Round robin between the trained agent and single-expert agents.
    Tournament {
        /// Games per pair.
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        /// Trained checkpoint; without it only the experts play.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "0")]
        epsilon: Epsilon,
    },
    /// Summarize a model, table, checkpoint, episode or replay file.
    Inspect {
        path: PathBuf,
        /// Report one cluster of a table or checkpoint.
        #[arg(long)]
        cluster: Option<usize>,
    },
    /// Play one game against the scripted opponent and write its logs.
    Play {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value = "0")]
        epsilon: Epsilon,
    },
}

#[derive(Clone, Copy, Debug)]
struct Epsilon(EpsilonSchedule);

impl std::str::FromStr for Epsilon {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |x: &str| -> Result<f64, String> {
            let v: f64 = x.trim().parse().map_err(|_| format!("bad epsilon `{x}`"))?;
            if (0.0..=1.0).contains(&v) {
                Ok(v)
            } else {
                Err(format!("epsilon {v} is outside [0, 1]"))
            }
        };
        let (start, end) = match s.split_once(':') {
            Some((a, b)) => (num(a)?, num(b)?),
            None => (num(s)?, num(s)?),
        };
        Ok(Epsilon(EpsilonSchedule { start, end }))
    }
}

/// Bad input: reported with exit code 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: impl fmt::Display) -> anyhow::Error {
    Usage(e.to_string()).into()
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("KBRL_LOG")
                .unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let kb_dirs = if c.kb.is_empty() {
        harness::SHIPPED_PACKS
            .iter()
            .map(|p| harness::shipped_pack_dir(p))
            .collect()
    } else {
        c.kb.clone()
    };
    let map = GameMap::load(&c.fixture).map_err(usage)?;
    let limits = EpisodeLimits {
        max_turns: c.max_turns,
        ..EpisodeLimits::default()
    };
    match cli.command {
        Command::Collect { episodes } => {
            let kb = load_kb(&kb_dirs)?;
            let ds = harness::collect(&kb, &map, episodes, c.seed, c.max_turns)?;
            write(&c.out, "dataset.csv", &harness::dataset_csv(&ds)?)?;
            println!("{} rows from {} episodes", ds.rows.len(), ds.episodes.len());
        }
        Command::Cluster {
            episodes,
            k,
            max_iter,
        } => {
            let kb = load_kb(&kb_dirs)?;
            let ds = harness::collect(&kb, &map, episodes, c.seed, c.max_turns)?;
            let model = kbrl::rl::fit_clusters(&ds.rows, k, max_iter, c.seed).map_err(usage)?;
            fs::create_dir_all(&c.out)?;
            persist::save(&c.out.join("model.json"), MODEL_FORMAT, &model)?;
            println!(
                "k={} inertia={:.6} iterations={} rows={}",
                model.k,
                model.inertia,
                model.iterations,
                ds.rows.len()
            );
        }
        Command::Train {
            episodes,
            k,
            epsilon,
            wave,
            cluster_episodes,
            model,
            resume,
        } => {
            let kb = load_kb(&kb_dirs)?;
            fs::create_dir_all(&c.out)?;
            let cp_path = c.out.join("checkpoint.json");
            let start = if resume {
                let cp: Checkpoint = persist::load(&cp_path, CHECKPOINT_FORMAT).map_err(usage)?;
                eprintln!("resuming at episode {}", cp.next_episode);
                cp
            } else {
                let config = TrainConfig {
                    episodes,
                    epsilon: epsilon.0,
                    k,
                    seed: c.seed,
                    kb: kb_dirs.clone(),
                    fixture: c.fixture.clone(),
                    wave,
                    max_turns: c.max_turns,
                    cluster_episodes,
                    ..TrainConfig::default()
                };
                let model = model
                    .map(|p| persist::load::<ClusterModel>(&p, MODEL_FORMAT))
                    .transpose()
                    .map_err(usage)?;
                harness::start_run(&kb, &map, config, model)?
            };
            let out = c.out.clone();
            let done = harness::train(&kb, &map, start, &mut |cp| {
                persist::save(&out.join("checkpoint.json"), CHECKPOINT_FORMAT, cp)?;
                fs::write(out.join("curve.csv"), harness::curve_csv(&cp.curve)?)
                    .map_err(|e| harness::HarnessError::Config(e.to_string()))?;
                tracing::info!(episode = cp.next_episode, "checkpoint written");
                Ok(())
            })?;
            persist::save(&c.out.join("model.json"), MODEL_FORMAT, &done.model)?;
            persist::save(&c.out.join("table.json"), TABLE_FORMAT, &done.table)?;
            let rets: Vec<f64> = done.curve.iter().filter_map(|r| r.ret).collect();
            let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
            let n = rets.len().min(50);
            println!(
                "{} episodes; mean return first {n}: {:.1}, last {n}: {:.1}",
                done.curve.len(),
                mean(&rets[..n]),
                mean(&rets[rets.len() - n..])
            );
        }
        Command::Tournament {
            episodes,
            checkpoint,
            epsilon,
        } => {
            let mut agents = Vec::new();
            if let Some(p) = checkpoint {
                let cp: Checkpoint = persist::load(&p, CHECKPOINT_FORMAT).map_err(usage)?;
                agents.push(trained_agent(&kb_dirs, &cp, epsilon.0.start)?);
            }
            let common: Vec<PathBuf> = kb_dirs.iter().filter(|d| is_common(d)).cloned().collect();
            for d in kb_dirs.iter().filter(|d| !is_common(d)) {
                let mut dirs = common.clone();
                dirs.push(d.clone());
                agents.push(Agent {
                    name: d
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_default(),
                    kb: load_kb(&dirs)?,
                    resolver: Arc::new(UniformResolver),
                });
            }
            if agents.len() < 2 {
                return Err(usage("a tournament needs at least two agents"));
            }
            let result = harness::tournament(&agents, &map, episodes, c.seed, c.max_turns)?;
            write(&c.out, "pairs.csv", &result.pairs_csv()?)?;
            write(&c.out, "agents.csv", &result.agents_csv()?)?;
            for p in &result.pairs {
                println!(
                    "{} vs {}: {}-{} ({} draws)",
                    p.a, p.b, p.a_wins, p.b_wins, p.draws
                );
            }
        }
        Command::Inspect { path, cluster } => inspect(&path, cluster)?,
        Command::Play {
            checkpoint,
            epsilon,
        } => {
            let (kb, resolver): (Vec<KnowledgeItem>, harness::SharedResolver) = match checkpoint {
                Some(p) => {
                    let cp: Checkpoint = persist::load(&p, CHECKPOINT_FORMAT).map_err(usage)?;
                    let a = trained_agent(&kb_dirs, &cp, epsilon.0.start)?;
                    (a.kb, a.resolver)
                }
                None => (load_kb(&kb_dirs)?, Arc::new(UniformResolver)),
            };
            let mut env = MicroCivEnv::new(map.clone(), c.seed).recording(true);
            let rec = kbrl::inference::run_episode(
                &kb,
                kbrl::microciv::ontology(),
                &mut env,
                resolver.as_ref(),
                kbrl::inference::EpisodeConfig {
                    limits,
                    seed: c.seed,
                    issue: kbrl::inference::Issue::start_playing("microciv"),
                },
            )?;
            write(&c.out, "episode.jsonl", &rec.to_jsonl())?;
            write(&c.out, "replay.jsonl", &env.replay_jsonl())?;
            println!(
                "{} at turn {}; score {}; {} decisions",
                rec.outcome,
                rec.final_turn,
                rec.score,
                rec.decisions.len()
            );
        }
    }
    Ok(())
}

fn is_common(dir: &Path) -> bool {
    dir.file_name().is_some_and(|n| n == COMMON_PACK_DIR)
}

fn load_kb(dirs: &[PathBuf]) -> Result<Vec<KnowledgeItem>> {
    harness::load_kb(dirs).map_err(usage)
}

fn trained_agent(kb_dirs: &[PathBuf], cp: &Checkpoint, epsilon: f64) -> Result<Agent> {
    let dirs = if cp.config.kb.is_empty() {
        kb_dirs
    } else {
        &cp.config.kb
    };
    Ok(Agent {
        name: "trained".into(),
        kb: load_kb(dirs)?,
        resolver: Arc::new(PolicyResolver::new(&cp.model, &cp.table, epsilon)),
    })
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let p = dir.join(name);
    fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
    eprintln!("wrote {}", p.display());
    Ok(())
}

fn inspect(path: &Path, cluster: Option<usize>) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let env_format = serde_json::from_str::<serde_json::Value>(&text)
        .ok()
        .and_then(|v| v.get("format").and_then(|f| f.as_str()).map(str::to_string));
    match env_format.as_deref() {
        Some(MODEL_FORMAT) => print_model(&persist::from_versioned_json(
            MODEL_FORMAT,
            &text,
            &path.display().to_string(),
        )?),
        Some(TABLE_FORMAT) => {
            let table =
                persist::from_versioned_json(TABLE_FORMAT, &text, &path.display().to_string())?;
            match cluster {
                Some(c) => print_report(&table, c),
                None => print_table(&table),
            }
        }
        Some(CHECKPOINT_FORMAT) => {
            let cp: Checkpoint = persist::from_versioned_json(
                CHECKPOINT_FORMAT,
                &text,
                &path.display().to_string(),
            )?;
            if let Some(c) = cluster {
                print_report(&cp.table, c);
                return Ok(());
            }
            println!(
                "checkpoint at episode {}/{}",
                cp.next_episode, cp.config.episodes
            );
            print_model(&cp.model);
            print_table(&cp.table);
        }
        Some(other) => return Err(usage(format!("unknown file format `{other}`"))),
        None => {
            if let Ok(rec) = EpisodeRecord::from_jsonl(&text) {
                println!(
                    "episode seed {}: {} at turn {}, score {}, {} decisions, {} executions",
                    rec.seed,
                    rec.outcome,
                    rec.final_turn,
                    rec.score,
                    rec.decisions.len(),
                    rec.executions.len()
                );
            } else if let Ok(entries) = parse_replay(&text) {
                let commands: usize = entries.iter().map(|e| e.commands.len()).sum();
                println!("replay of {} turns, {} commands", entries.len(), commands);
            } else {
                return Err(usage(format!("{}: not a file kbrl knows", path.display())));
            }
        }
    }
    Ok(())
}

fn print_model(m: &ClusterModel) {
    println!(
        "cluster model: k={} dim={} inertia={:.6}",
        m.k,
        m.dim(),
        m.inertia
    );
    for (c, t) in m.cluster_turns.iter().enumerate() {
        println!(
            "  cluster {c}: mean turn {:.1} over {} runs",
            t.mean, t.count
        );
    }
}

fn print_report(table: &StateActionTable, cluster: usize) {
    let r = harness::cluster_report(table, cluster);
    if r.is_empty() {
        println!("cluster {cluster}: no samples");
        return;
    }
    println!("cluster {cluster}");
    println!(
        "  {:<32} {:>6} {:>10} {:>6} {:>6} {:>8}",
        "action", "n", "Q", "mu", "sigma", "p"
    );
    for row in &r.rows {
        println!(
            "  {:<32} {:>6} {:>10.2} {:>6.3} {:>6.3} {:>8.4}",
            row.action, row.n, row.q_mean, row.mu, row.sigma, row.probability
        );
    }
}

fn print_table(t: &StateActionTable) {
    println!(
        "state-action table: {} episodes, {} samples",
        t.episodes,
        t.total_samples()
    );
    for (s, cs) in &t.clusters {
        println!(
            "  cluster {s}: n={} mean return {:.1}",
            cs.n, cs.mean_return
        );
        for (a, st) in &cs.actions {
            println!("    {a:<32} n={:<6} q={:.1}", st.n, st.q_mean);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps(s: &str) -> Result<EpsilonSchedule, String> {
        s.parse::<Epsilon>().map(|e| e.0)
    }

    #[test]
    fn epsilon_forms() {
        assert_eq!(
            eps("0.1:0.02"),
            Ok(EpsilonSchedule {
                start: 0.1,
                end: 0.02
            })
        );
        assert_eq!(
            eps("0"),
            Ok(EpsilonSchedule {
                start: 0.0,
                end: 0.0
            })
        );
        assert!(eps("1.5").is_err());
        assert!(eps("a:b").is_err());
        assert!(eps("0.1:").is_err());
    }

    #[test]
    fn defaults_and_global_flags() {
        let cli = Cli::try_parse_from(["kbrl", "train", "--seed", "7"]).unwrap();
        assert_eq!(cli.common.seed, 7);
        assert_eq!(cli.common.max_turns, 400);
        match cli.command {
            Command::Train {
                episodes, k, wave, ..
            } => assert_eq!((episodes, k, wave), (300, 16, 1)),
            _ => panic!("expected train"),
        }
        assert!(Cli::try_parse_from(["kbrl", "train", "--epsilon", "2"]).is_err());
        assert!(Cli::try_parse_from(["kbrl", "dance"]).is_err());
    }

    #[test]
    fn bad_input_is_a_usage_error() {
        let out = std::env::temp_dir().join(format!("kbrl-cli-{}", std::process::id()));
        let cli = Cli::try_parse_from([
            "kbrl",
            "--fixture",
            "no-such-map",
            "--out",
            out.to_str().unwrap(),
            "collect",
        ])
        .unwrap();
        let err = run(cli).unwrap_err();
        assert!(err.downcast_ref::<Usage>().is_some(), "{err:#}");
        let _ = fs::remove_dir_all(&out);
    }
}
