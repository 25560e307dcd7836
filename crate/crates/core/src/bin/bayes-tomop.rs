use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bayes_tomop::games::GameId;
use bayes_tomop::harness::config::{default_store_path, output_root};
use bayes_tomop::harness::sweep::write_sweep;
use bayes_tomop::harness::{run_experiment, summarize_dir, sweep, train, ExperimentConfig, Store, TrainParams};
use bayes_tomop::{Error, Result};

/// Bayes-ToMoP experiments. Output goes under ./out unless the config says
/// otherwise; BAYES_TOMOP_OUT overrides both.
#[derive(Parser)]
#[command(name = "bayes-tomop", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn the response library and performance models for a game.
    Train {
        #[arg(long)]
        game: GameId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Q-learning episodes per strategy.
        #[arg(long)]
        q_episodes: Option<usize>,
        /// Simulated episodes per (strategy, policy) pair.
        #[arg(long)]
        perf_episodes: Option<usize>,
    },
    /// Run an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a config once per parameter value.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Win-rate table over the run files in a directory.
    Summarize { dir: PathBuf },
}

/// Like `println!`, but a closed stdout (e.g. piping into `head`) is not an
/// error.
macro_rules! out {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error code=usage msg={first:?}");
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error code={} msg={msg:?}", e.code());
            ExitCode::FAILURE
        }
    }
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train {
            game,
            seed,
            q_episodes,
            perf_episodes,
        } => {
            let mut params = TrainParams::default();
            if let Some(n) = q_episodes {
                params.q.episodes = n;
            }
            if let Some(n) = perf_episodes {
                params.perf_episodes = n;
            }
            let store = train(game, seed, &params)?;
            let path = default_store_path(&output_root(None), game);
            store.save(&path)?;
            out!("store {}", path.display());
            if let Some(w) = store.perf.win_rates() {
                for (j, row) in w.iter().enumerate() {
                    let diag = row.get(j).copied().unwrap_or(f64::NAN);
                    out!("{:<20} own-response win rate {:.3}", store.opponents.get(j).id, diag);
                }
            }
            if let Some(b) = store.delta_bound() {
                out!("delta upper bound {b:.3}");
            }
            Ok(())
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_experiment(&cfg)?;
            for row in &out.summary {
                out!("{}", row.display());
            }
            out!("wrote {}", out.dir.display());
            Ok(())
        }
        Command::Sweep { config, param, values } => {
            let cfg = ExperimentConfig::load(&config)?;
            let store = Store::load(&cfg.store_path(), cfg.game)?;
            let rows = sweep(&cfg, &store, &param, &values)?;
            let dir = cfg.run_dir();
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(format!("sweep-{param}.csv"));
            write_sweep(&path, &rows)?;
            for r in &rows {
                out!(
                    "{}={:<6} adjustments {:6.2} ± {:5.2}  latency {:7.1}  win rate {:.3}",
                    r.param, r.value, r.adjustments_mean, r.adjustments_std, r.latency_mean, r.win_rate_mean
                );
            }
            out!("trend {}", rows[0].trend);
            out!("wrote {}", path.display());
            Ok(())
        }
        Command::Summarize { dir } => {
            if !dir.is_dir() {
                return Err(Error::Config(format!("{} is not a directory", dir.display())));
            }
            for row in summarize_dir(&dir)? {
                out!("{}", row.display());
            }
            Ok(())
        }
    }
}
