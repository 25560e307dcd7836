//! The opponent switches to a soccer route that is not in the library.
//! Detection fires, R-max learns a new response, the models are regenerated
//! and the library grows by one entry.
//!
//! cargo run --release --example unseen_strategy

use bayes_tomop::games::GameId;
use bayes_tomop::harness::{run_single, train, ExperimentConfig, TrainParams};

fn main() -> bayes_tomop::Result<()> {
    let store = train(GameId::Soccer, 1, &TrainParams::default())?;
    let cfg = ExperimentConfig::from_toml(
        "game = \"soccer\"\nagent = \"tomop1\"\nepisodes = 500\nseed = 7\n\
         [opponent]\nkind = \"novel\"\nactivation = 200\n[detection]\nenabled = true\n",
    )?;
    let rec = run_single(&cfg, &store, 0)?;
    let play: Vec<_> = rec.play_rows().collect();
    for r in play.iter().filter(|r| r.detected == 1) {
        println!("detected a new strategy at episode {} (theta {:.2})", r.episode, r.theta.unwrap_or(f64::NAN));
    }
    let learn = rec.rows.iter().filter(|r| !r.is_play()).count();
    println!("R-max learning took {learn} episodes");
    let tail = &play[play.len() - 100..];
    let won = tail.iter().filter(|r| r.won()).count();
    println!("last 100 episodes: {won} wins; library is now {:?}", rec.library_sizes);
    Ok(())
}
