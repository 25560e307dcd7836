//! Trains the soccer response library, prints its win-rate matrix and the
//! largest safe detection threshold, and round-trips the store through JSON.
//!
//! cargo run --release --example train_library

use bayes_tomop::games::GameId;
use bayes_tomop::harness::{train, Store, TrainParams};

fn main() -> bayes_tomop::Result<()> {
    let store = train(GameId::Soccer, 1, &TrainParams::default())?;
    println!("strategies: {:?}", store.opponents.ids());
    if let Some(rates) = store.perf.win_rates() {
        for (j, row) in rates.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|w| format!("{:4.0}", w * 100.0)).collect();
            println!("j={j} {}", cells.join(" "));
        }
    }
    println!("delta must stay below {:.3}", store.delta_bound().unwrap_or(f64::NAN));

    let dir = tempfile_dir();
    let path = dir.join("soccer.json");
    store.save(&path)?;
    let back = Store::load(&path, GameId::Soccer)?;
    println!("reloaded identical: {}", back == store);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let d = std::env::temp_dir().join(format!("bayes-tomop-example-{}", std::process::id()));
    std::fs::create_dir_all(&d).expect("temp dir");
    d
}
