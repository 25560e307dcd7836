//! Zero-order agent against a fixed RPS strategy: watch the belief settle.
//!
//! cargo run --example identify_opponent

use bayes_tomop::games::{GameId, GameSpec};
use bayes_tomop::harness::{train, TrainParams};
use bayes_tomop::policies::run_episode;
use bayes_tomop::rng::SimRng;
use bayes_tomop::tomop::ToMoP0State;

fn main() -> bayes_tomop::Result<()> {
    let spec = GameSpec::new(GameId::Rps);
    let store = train(GameId::Rps, 1, &TrainParams::default())?;
    let ctx = store.context()?;
    let opponent = 1; // always paper
    println!("library: {:?} / responses {:?}", store.opponents.ids(), store.own.ids());

    let mut agent = ToMoP0State::new(ctx.n_strategies(), 0.001);
    let mut rng = SimRng::new(3);
    for episode in 0..6 {
        let pi = agent.select(&ctx)?;
        let out = run_episode(&spec, store.own.get(pi), store.opponents.get(opponent), &mut rng, false)?;
        agent.observe(&ctx, pi, out.r_self)?;
        let b: Vec<String> = agent.belief0.weights().iter().map(|w| format!("{w:.3}")).collect();
        println!("episode {episode}: played {pi}, return {:+.0}, belief [{}]", out.r_self, b.join(", "));
    }
    Ok(())
}
