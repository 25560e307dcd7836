//! Soccer against an opponent that jumps to a random library strategy every
//! 200 episodes. Prints how quickly each agent recovers after a switch.
//!
//! cargo run --release --example nonstationary

use bayes_tomop::games::GameId;
use bayes_tomop::harness::{run_all, segment_stats, train, ExperimentConfig, TrainParams};

fn main() -> bayes_tomop::Result<()> {
    let store = train(GameId::Soccer, 1, &TrainParams::default())?;
    for agent in ["tomop0", "tomop1"] {
        let cfg = ExperimentConfig::from_toml(&format!(
            "game = \"soccer\"\nagent = \"{agent}\"\nepisodes = 1000\nruns = 20\nseed = 7\n\
             [opponent]\nkind = \"non-stationary\"\nperiod = 200\n"
        ))?;
        let recs = run_all(&cfg, &store)?;
        let mut latencies = Vec::new();
        for rec in &recs {
            let rows: Vec<_> = rec.play_rows().collect();
            latencies.extend(segment_stats(&rows).iter().skip(1).map(|s| s.latency));
        }
        let win = recs.iter().map(|r| r.win_rate()).sum::<f64>() / recs.len() as f64;
        let worst = latencies.iter().max().copied().unwrap_or(0);
        let avg = latencies.iter().sum::<usize>() as f64 / latencies.len().max(1) as f64;
        println!("{agent}: win {:.2} %, {} switches, recovery {avg:.1} episodes on average, {worst} at worst", win * 100.0, latencies.len());
    }
    Ok(())
}
