//! An opponent that alternates between reasoning about us (ToMoP₀) and
//! plain stationary play every 200 episodes. Per-phase win rates show where
//! each agent gains and loses.
//!
//! cargo run --release --example mixed_opponent

use bayes_tomop::games::GameId;
use bayes_tomop::harness::{run_all, train, ExperimentConfig, TrainParams};

fn main() -> bayes_tomop::Result<()> {
    let store = train(GameId::Rps, 1, &TrainParams::default())?;
    for agent in ["tomop0", "tomop1"] {
        let cfg = ExperimentConfig::from_toml(&format!(
            "game = \"rps\"\nagent = \"{agent}\"\nepisodes = 1000\nruns = 50\nseed = 7\n\
             [opponent]\nkind = \"mixed\"\nperiod = 200\n"
        ))?;
        let recs = run_all(&cfg, &store)?;
        let mut phases = [(0usize, 0usize); 5];
        for rec in &recs {
            for row in rec.play_rows() {
                let p = &mut phases[row.episode / 200];
                p.0 += 1;
                p.1 += usize::from(row.won());
            }
        }
        let shown: Vec<String> = phases
            .iter()
            .enumerate()
            .map(|(k, (n, w))| {
                let who = if k % 2 == 0 { "tom" } else { "fix" };
                format!("{who} {:.0}%", 100.0 * *w as f64 / *n as f64)
            })
            .collect();
        println!("{agent}: {}", shown.join(" | "));
    }
    Ok(())
}
