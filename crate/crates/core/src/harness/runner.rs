//! Scenario execution: one agent against one opponent controller for a
//! number of independent runs.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::store::Store;
use super::summary::{summarize_rows, write_summary, SummaryRow};
use crate::bpr::BprContext;
use crate::detect::{estimate_opponent_policy, learn_new_response, regenerate_models, DetectionState};
use crate::error::{Error, Result};
use crate::games::GameSpec;
use crate::opponents::{OpponentController, OpponentSpec};
use crate::policies::{novel_strategy, run_episode};
use crate::rng::SimRng;
use crate::tomop::Agent;

pub const PHASE_PLAY: &str = "play";
pub const PHASE_LEARN: &str = "learn";

/// One CSV row. Play rows are numbered by play episode, learn rows by
/// learning episode; the two never share a budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub run: usize,
    pub episode: usize,
    pub phase: String,
    pub agent: String,
    pub opponent: String,
    pub r_self: f64,
    pub result: String,
    pub c1: Option<f64>,
    pub flag: Option<u8>,
    pub upsilon: Option<f64>,
    /// Detection win rate (play) or learning window win rate (learn).
    pub theta: Option<f64>,
    pub j_hat: Option<usize>,
    pub pi_star: Option<usize>,
    pub opp_strategy: String,
    /// 1 on the first episode after the opponent's schedule changed.
    pub switch: u8,
    pub detected: u8,
    pub known_pairs: Option<usize>,
    pub belief_entropy: Option<f64>,
    /// Zero-order belief in the strategy the opponent actually played, when
    /// that strategy is in the agent's library.
    pub belief_true: Option<f64>,
}

impl Row {
    pub fn is_play(&self) -> bool {
        self.phase == PHASE_PLAY
    }

    pub fn won(&self) -> bool {
        self.result == "win"
    }
}

/// Rows of one run plus whatever the run learned.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub run: usize,
    pub rows: Vec<Row>,
    /// Final model sizes (|J|, |Π|).
    pub library_sizes: (usize, usize),
}

impl RunRecord {
    pub fn play_rows(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.is_play())
    }

    pub fn win_rate(&self) -> f64 {
        let (n, w) = self.play_rows().fold((0usize, 0usize), |(n, w), r| (n + 1, w + usize::from(r.won())));
        if n == 0 {
            0.0
        } else {
            w as f64 / n as f64
        }
    }
}

/// Plays run number `run` of `cfg` on the given store.
pub fn run_single(cfg: &ExperimentConfig, store: &Store, run: usize) -> Result<RunRecord> {
    let spec = GameSpec::new(cfg.game);
    let root = SimRng::new(cfg.seed).fork_indexed("run", run as u64);
    let mut play_rng = root.fork("play");
    let mut ctx: BprContext = store.context()?;
    let mut own = store.own.clone();
    let mut opps = store.opponents.clone();
    let novel = matches!(cfg.opponent, OpponentSpec::Novel { .. }).then(|| novel_strategy(&spec));
    let mut ctrl = OpponentController::new(cfg.opponent.clone(), store.opponents.clone(), novel, &ctx, root.fork("opponent"))?;
    let mut agent = Agent::new(cfg.agent, &ctx, cfg.tomop)?;
    if cfg.tomop.random_belief_init {
        agent.randomize_beliefs(cfg.tomop.belief_floor, &mut root.fork("init"))?;
    }
    let mut det = DetectionState::new(cfg.detection.h, cfg.tomop.delta)?;
    let warmup = cfg.detection.warmup.unwrap_or(cfg.tomop.l);
    let agent_label = cfg.agent.as_str().to_string();
    let opp_label = cfg.opponent.label().to_string();
    let mut rows = Vec::with_capacity(cfg.episodes);
    let mut learned = 0u64;
    let mut learn_episode = 0usize;
    let mut switched = false;

    for episode in 0..cfg.episodes {
        ctrl.begin_episode(episode)?;
        let d = agent.select(&ctx)?;
        let outcome = run_episode(&spec, own.get(d.pi), ctrl.policy(), &mut play_rng, false)?;
        let won = outcome.won();
        let tel = agent.observe(&ctx, d, outcome.r_self, won)?;
        let armed = cfg.detection.enabled && episode >= warmup;
        let detected = armed && det.observe(won);
        let belief_true = opps.index_of(ctrl.label()).map(|j| agent.belief0().get(j));
        rows.push(Row {
            run,
            episode,
            phase: PHASE_PLAY.into(),
            agent: agent_label.clone(),
            opponent: opp_label.clone(),
            r_self: outcome.r_self,
            result: outcome.result.as_str().into(),
            c1: tel.c1,
            flag: tel.flag.map(u8::from),
            upsilon: tel.upsilon,
            theta: if armed { det.theta() } else { None },
            j_hat: d.j_hat,
            pi_star: Some(d.pi),
            opp_strategy: ctrl.label().to_string(),
            switch: u8::from(switched),
            detected: u8::from(detected),
            known_pairs: None,
            belief_entropy: Some(tel.belief_entropy),
            belief_true,
        });

        if detected {
            // The opponent keeps its current strategy while we learn.
            let id = format!("br-new-{learned}");
            let mut lrng = root.fork_indexed("learn", learned);
            let out = learn_new_response(&spec, ctrl.policy(), &cfg.learning, cfg.tomop.delta, &id, &mut lrng)?;
            for step in &out.trace {
                rows.push(Row {
                    run,
                    episode: learn_episode + step.episode,
                    phase: PHASE_LEARN.into(),
                    agent: agent_label.clone(),
                    opponent: opp_label.clone(),
                    r_self: step.r_self,
                    result: crate::games::GameResult::from_return(step.r_self, -step.r_self).as_str().into(),
                    c1: None,
                    flag: None,
                    upsilon: None,
                    theta: step.window_rate,
                    j_hat: None,
                    pi_star: None,
                    opp_strategy: ctrl.label().to_string(),
                    switch: 0,
                    detected: 0,
                    known_pairs: Some(step.known_pairs),
                    belief_entropy: None,
                    belief_true: None,
                });
            }
            learn_episode += out.trace.len();
            let est = estimate_opponent_policy(spec.n_actions(), &out.observations, &format!("est-{learned}"))?;
            own.push(out.policy)?;
            opps.push(est)?;
            ctx = regenerate_models(
                &ctx,
                &spec,
                &own,
                &opps,
                cfg.detection.regen_episodes,
                store.params.sigma_floor,
                &root.fork_indexed("regen", learned),
            )?;
            agent.reset_beliefs(&ctx);
            det.reset();
            learned += 1;
        }
        let r_oppo = if spec.is_zero_sum() { -outcome.r_self } else { outcome.r_self };
        switched = ctrl.end_episode(r_oppo, episode)?;
    }
    Ok(RunRecord {
        run,
        rows,
        library_sizes: (ctx.n_strategies(), ctx.n_policies()),
    })
}

/// All runs of `cfg`, in run order. Runs execute in parallel.
pub fn run_all(cfg: &ExperimentConfig, store: &Store) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    if store.game != cfg.game {
        return Err(Error::Config(format!("store holds {} but config asks for {}", store.game, cfg.game)));
    }
    (0..cfg.runs).into_par_iter().map(|r| run_single(cfg, store, r)).collect()
}

pub fn run_file_name(run: usize) -> String {
    format!("run-{run:03}.csv")
}

pub fn write_rows(path: &Path, rows: &[Row]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        file: path.display().to_string(),
        row: e.position().map_or(0, |p| p.line() as usize),
        msg: e.to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub dir: PathBuf,
    pub records: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

/// Loads the store, plays every run and writes `run-NNN.csv` files plus
/// `summary.csv` into the config's run directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let store = Store::load(&cfg.store_path(), cfg.game)?;
    run_experiment_with(cfg, &store, &cfg.run_dir())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, store: &Store, dir: &Path) -> Result<ExperimentOutput> {
    if let Some(bound) = store.delta_bound() {
        if cfg.tomop.delta > bound {
            eprintln!(
                "warning: delta {} exceeds the library bound {bound:.3}; detection may fire on known strategies",
                cfg.tomop.delta
            );
        }
    }
    let records = run_all(cfg, store)?;
    std::fs::create_dir_all(dir)?;
    for rec in &records {
        write_rows(&dir.join(run_file_name(rec.run)), &rec.rows)?;
    }
    let rows: Vec<&Row> = records.iter().flat_map(|r| r.rows.iter()).collect();
    let summary = summarize_rows(rows.into_iter())?;
    write_summary(&dir.join("summary.csv"), &summary)?;
    Ok(ExperimentOutput {
        dir: dir.to_path_buf(),
        records,
        summary,
    })
}
