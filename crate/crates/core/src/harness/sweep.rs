//! Parameter studies over l, δ and h.
//!
//! The adjustment count of a segment is the number of times the agent's
//! chosen policy changes between the segment start and recovery. A segment
//! starts at the beginning of a run or at an opponent schedule change.
//! Recovery is the first win that opens a window of [`RECOVERY_WINDOW`]
//! episodes inside the segment with win rate at least [`RECOVERY_RATE`].
//! Runs with schedule changes are scored on the segments after a change,
//! other runs on their single initial segment.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::runner::{run_single, Row, RunRecord};
use super::store::Store;
use super::summary::mean_std;
use crate::error::{Error, Result};

pub const RECOVERY_WINDOW: usize = 50;
pub const RECOVERY_RATE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentStats {
    pub start: usize,
    pub adjustments: usize,
    /// Episodes before recovery, or the segment length when it never
    /// recovered.
    pub latency: usize,
    pub recovered: bool,
}

/// Scores each segment of a run's play rows.
pub fn segment_stats(rows: &[&Row]) -> Vec<SegmentStats> {
    let mut starts: Vec<usize> = vec![0];
    starts.extend(rows.iter().enumerate().filter(|(i, r)| *i > 0 && r.switch == 1).map(|(i, _)| i));
    let mut out = Vec::new();
    for (k, s) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(rows.len());
        let seg = &rows[*s..end];
        let need = (RECOVERY_RATE * RECOVERY_WINDOW as f64).ceil() as usize;
        let mut prefix = vec![0usize; seg.len() + 1];
        for (i, r) in seg.iter().enumerate() {
            prefix[i + 1] = prefix[i] + usize::from(r.won());
        }
        let recovery = (0..=seg.len().saturating_sub(RECOVERY_WINDOW))
            .take_while(|_| seg.len() >= RECOVERY_WINDOW)
            .find(|&i| seg[i].won() && prefix[i + RECOVERY_WINDOW] - prefix[i] >= need);
        let last = recovery.unwrap_or(seg.len().saturating_sub(1));
        let adjustments = (1..=last).filter(|i| seg[*i].pi_star != seg[i - 1].pi_star).count();
        out.push(SegmentStats {
            start: *s,
            adjustments,
            latency: recovery.unwrap_or(seg.len()),
            recovered: recovery.is_some(),
        });
    }
    out
}

/// Mean adjustment count and latency of one run.
pub fn adjustment_stats(rec: &RunRecord) -> (f64, f64) {
    let rows: Vec<&Row> = rec.play_rows().collect();
    let segs = segment_stats(&rows);
    let scored: Vec<&SegmentStats> = if segs.len() > 1 { segs[1..].iter().collect() } else { segs.iter().collect() };
    let n = scored.len() as f64;
    (
        scored.iter().map(|s| s.adjustments as f64).sum::<f64>() / n,
        scored.iter().map(|s| s.latency as f64).sum::<f64>() / n,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: String,
    pub value: String,
    pub runs: usize,
    pub adjustments_mean: f64,
    pub adjustments_std: f64,
    pub latency_mean: f64,
    pub latency_std: f64,
    pub win_rate_mean: f64,
    /// `non-increasing` when adjustment counts never rise by more than 5 %
    /// of the largest count along the sweep, else `mixed`.
    pub trend: String,
}

/// Runs `cfg` once per value of `param`.
pub fn sweep(cfg: &ExperimentConfig, store: &Store, param: &str, values: &[String]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let configs: Vec<ExperimentConfig> = values
        .iter()
        .map(|v| {
            let mut c = cfg.clone();
            c.set_param(param, v)?;
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..configs.len()).flat_map(|k| (0..cfg.runs).map(move |r| (k, r))).collect();
    let records: Vec<(usize, RunRecord)> = jobs
        .par_iter()
        .map(|(k, r)| run_single(&configs[*k], store, *r).map(|rec| (*k, rec)))
        .collect::<Result<_>>()?;
    let mut rows: Vec<SweepRow> = values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let recs: Vec<&RunRecord> = records.iter().filter(|(i, _)| *i == k).map(|(_, r)| r).collect();
            let stats: Vec<(f64, f64)> = recs.iter().map(|r| adjustment_stats(r)).collect();
            let adj: Vec<f64> = stats.iter().map(|s| s.0).collect();
            let lat: Vec<f64> = stats.iter().map(|s| s.1).collect();
            let wr: Vec<f64> = recs.iter().map(|r| r.win_rate()).collect();
            let (am, asd) = mean_std(&adj);
            let (lm, lsd) = mean_std(&lat);
            SweepRow {
                param: param.to_string(),
                value: v.clone(),
                runs: recs.len(),
                adjustments_mean: am,
                adjustments_std: asd,
                latency_mean: lm,
                latency_std: lsd,
                win_rate_mean: mean_std(&wr).0,
                trend: String::new(),
            }
        })
        .collect();
    let means: Vec<f64> = rows.iter().map(|r| r.adjustments_mean).collect();
    let trend = if is_non_increasing(&means, 0.05) { "non-increasing" } else { "mixed" };
    for r in &mut rows {
        r.trend = trend.to_string();
    }
    Ok(rows)
}

/// True when no value exceeds its predecessor by more than `rel` times the
/// largest magnitude in the sequence.
pub fn is_non_increasing(xs: &[f64], rel: f64) -> bool {
    let scale = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    xs.windows(2).all(|w| w[1] <= w[0] + rel * scale)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv {
        file: path.display().to_string(),
        row: 0,
        msg: e.to_string(),
    })?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Csv {
            file: path.display().to_string(),
            row: 0,
            msg: e.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::runner::PHASE_PLAY;

    fn row(episode: usize, won: bool, pi: usize, switch: bool) -> Row {
        Row {
            run: 0,
            episode,
            phase: PHASE_PLAY.into(),
            agent: "a".into(),
            opponent: "o".into(),
            r_self: 0.0,
            result: if won { "win" } else { "loss" }.into(),
            c1: None,
            flag: None,
            upsilon: None,
            theta: None,
            j_hat: None,
            pi_star: Some(pi),
            opp_strategy: String::new(),
            switch: u8::from(switch),
            detected: 0,
            known_pairs: None,
            belief_entropy: None,
            belief_true: None,
        }
    }

    #[test]
    fn adjustments_count_policy_changes_before_recovery() {
        // Three losses while trying policies 0, 1, 2, then wins with 3.
        let mut rows: Vec<Row> = (0..3).map(|e| row(e, false, e, false)).collect();
        rows.extend((3..100).map(|e| row(e, true, 3, false)));
        let refs: Vec<&Row> = rows.iter().collect();
        let s = segment_stats(&refs);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].adjustments, 3);
        assert!(s[0].recovered);
        assert_eq!(s[0].latency, 3);
    }

    #[test]
    fn switches_split_segments() {
        let mut rows: Vec<Row> = (0..100).map(|e| row(e, true, 0, false)).collect();
        rows.extend((100..102).map(|e| row(e, false, 0, e == 100)));
        rows.extend((102..200).map(|e| row(e, true, 1, false)));
        let refs: Vec<&Row> = rows.iter().collect();
        let s = segment_stats(&refs);
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].start, 100);
        assert_eq!(s[1].adjustments, 1);
        assert_eq!(s[1].latency, 2);
    }

    #[test]
    fn short_or_losing_segments_never_recover() {
        let rows: Vec<Row> = (0..30).map(|e| row(e, true, 0, false)).collect();
        let refs: Vec<&Row> = rows.iter().collect();
        let s = segment_stats(&refs);
        assert!(!s[0].recovered);
        assert_eq!(s[0].latency, 30);
        // Alternating wins never reach 45 of 50.
        let rows: Vec<Row> = (0..200).map(|e| row(e, e % 2 == 0, e % 2, false)).collect();
        let refs: Vec<&Row> = rows.iter().collect();
        let s = segment_stats(&refs);
        assert!(!s[0].recovered);
        assert_eq!(s[0].adjustments, 199);
    }

    #[test]
    fn trend_flag() {
        assert!(is_non_increasing(&[5.0, 3.0, 3.1, 2.0], 0.05));
        assert!(!is_non_increasing(&[5.0, 3.0, 4.0], 0.05));
        assert!(is_non_increasing(&[1.0], 0.05));
    }
}
