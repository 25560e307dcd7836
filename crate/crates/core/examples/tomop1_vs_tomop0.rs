//! A first-order agent against a zero-order opponent, which in turn is
//! modeling it, in RPS and soccer.
//!
//! cargo run --release --example tomop1_vs_tomop0

use bayes_tomop::games::GameId;
use bayes_tomop::harness::{run_all, summary::mean_std, train, ExperimentConfig, TrainParams};

fn main() -> bayes_tomop::Result<()> {
    for game in [GameId::Rps, GameId::Soccer] {
        let store = train(game, 1, &TrainParams::default())?;
        for agent in ["tomop0", "tomop1"] {
            let cfg = ExperimentConfig::from_toml(&format!(
                "game = \"{game}\"\nagent = \"{agent}\"\nepisodes = 1000\nruns = 20\nseed = 7\n[opponent]\nkind = \"tomop0\"\n"
            ))?;
            let rates: Vec<f64> = run_all(&cfg, &store)?.iter().map(|r| r.win_rate()).collect();
            let (m, s) = mean_std(&rates);
            println!("{game:7} {agent} vs tomop0: {:.2} ± {:.2} %", m * 100.0, s * 100.0);
        }
    }
    Ok(())
}
