//! Sweeps the υ window length l for a first-order agent with randomly drawn
//! starting beliefs, and writes the result as CSV to stdout.
//!
//! cargo run --release --example parameter_sweep

use bayes_tomop::games::GameId;
use bayes_tomop::harness::{sweep, train, ExperimentConfig, TrainParams};

fn main() -> bayes_tomop::Result<()> {
    let store = train(GameId::Soccer, 1, &TrainParams::default())?;
    let cfg = ExperimentConfig::from_toml(
        "game = \"soccer\"\nagent = \"tomop1\"\nepisodes = 1000\nruns = 30\nseed = 7\n\
         [opponent]\nkind = \"tomop0\"\n[tomop]\nrandom_belief_init = true\n",
    )?;
    let values: Vec<String> = ["5", "20", "35", "50", "75"].map(String::from).to_vec();
    let rows = sweep(&cfg, &store, "l", &values)?;
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for r in &rows {
        w.serialize(r).map_err(|e| bayes_tomop::Error::Config(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
