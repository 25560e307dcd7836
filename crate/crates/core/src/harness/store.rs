//! Versioned JSON store of a game's libraries and performance models.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bpr::{estimate_perf_models, BprContext, PerfMatrix};
use crate::detect::delta_upper_bound;
use crate::error::{Error, Result};
use crate::games::{GameId, GameSpec};
use crate::policies::{build_response_library, scripted_library, QLearnParams, StrategyLibrary};
use crate::prob::DEFAULT_SIGMA_FLOOR;
use crate::rng::SimRng;

pub const STORE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainParams {
    pub q: QLearnParams,
    pub perf_episodes: usize,
    pub sigma_floor: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            q: QLearnParams::default(),
            perf_episodes: 100,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Store {
    pub version: u32,
    pub game: GameId,
    pub seed: u64,
    pub params: TrainParams,
    /// Opponent strategies J.
    pub opponents: StrategyLibrary,
    /// Own response policies Π; entry i answers opponent strategy i.
    pub own: StrategyLibrary,
    /// Rows J, columns Π.
    pub perf: PerfMatrix,
}

impl Store {
    pub fn context(&self) -> Result<BprContext> {
        let spec = GameSpec::new(self.game);
        BprContext::new(self.perf.clone(), spec.max_return())
    }

    /// Largest sensible δ for this library.
    pub fn delta_bound(&self) -> Option<f64> {
        self.perf.win_rates().and_then(|w| delta_upper_bound(&w).ok())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string(self).map_err(|e| Error::Store(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path, game: GameId) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingStore {
                path: path.to_path_buf(),
                game: game.to_string(),
            });
        }
        let text = std::fs::read_to_string(path)?;
        #[derive(Deserialize)]
        struct Header {
            version: Option<u64>,
        }
        let head: Header =
            serde_json::from_str(&text).map_err(|e| Error::Store(format!("{}: {e}", path.display())))?;
        let version = head.version;
        if version != Some(u64::from(STORE_VERSION)) {
            return Err(Error::Store(format!(
                "{} has version {version:?}, expected {STORE_VERSION}; retrain with `bayes-tomop train`",
                path.display()
            )));
        }
        let store: Store = serde_json::from_str(&text).map_err(|e| Error::Store(format!("{}: {e}", path.display())))?;
        if store.game != game {
            return Err(Error::Store(format!(
                "{} holds {} policies, not {game}",
                path.display(),
                store.game
            )));
        }
        Ok(store)
    }
}

/// Builds the scripted library, learns one response per strategy and
/// estimates the performance matrix.
pub fn train(game: GameId, seed: u64, params: &TrainParams) -> Result<Store> {
    let spec = GameSpec::new(game);
    let rng = SimRng::new(seed);
    let opponents = scripted_library(&spec);
    let own = build_response_library(&spec, &opponents, &params.q, &rng.fork("train"))?;
    let perf = estimate_perf_models(
        &spec,
        &own,
        &opponents,
        params.perf_episodes,
        params.sigma_floor,
        &rng.fork("perf"),
    )?;
    Ok(Store {
        version: STORE_VERSION,
        game,
        seed,
        params: *params,
        opponents,
        own,
        perf,
    })
}
