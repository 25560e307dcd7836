//! Per-(agent, opponent) win-rate tables from run rows or run files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::runner::Row;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub agent: String,
    pub opponent: String,
    pub runs: usize,
    /// Play episodes per run, averaged.
    pub episodes: f64,
    pub win_rate_mean: f64,
    /// Sample standard deviation across runs; 0 for a single run.
    pub win_rate_std: f64,
}

impl SummaryRow {
    pub fn display(&self) -> String {
        format!(
            "{:<8} {:<15} runs={:<4} win rate {:6.2}% ± {:.2}%",
            self.agent,
            self.opponent,
            self.runs,
            100.0 * self.win_rate_mean,
            100.0 * self.win_rate_std
        )
    }
}

/// Sample mean and standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

type Cells = BTreeMap<(String, String), Vec<(usize, usize)>>;

fn tally<'a>(rows: impl Iterator<Item = &'a Row>, cells: &mut Cells) {
    let mut per_run: BTreeMap<(String, String, usize), (usize, usize)> = BTreeMap::new();
    for r in rows.filter(|r| r.is_play()) {
        let e = per_run.entry((r.agent.clone(), r.opponent.clone(), r.run)).or_default();
        e.0 += usize::from(r.won());
        e.1 += 1;
    }
    for ((agent, opponent, _), counts) in per_run {
        cells.entry((agent, opponent)).or_default().push(counts);
    }
}

fn finish(cells: Cells) -> Vec<SummaryRow> {
    cells
        .into_iter()
        .map(|((agent, opponent), runs)| {
            let rates: Vec<f64> = runs.iter().map(|(w, n)| *w as f64 / *n as f64).collect();
            let (mean, std) = mean_std(&rates);
            SummaryRow {
                agent,
                opponent,
                runs: runs.len(),
                episodes: runs.iter().map(|(_, n)| *n as f64).sum::<f64>() / runs.len() as f64,
                win_rate_mean: mean,
                win_rate_std: std,
            }
        })
        .collect()
}

pub fn summarize_rows<'a>(rows: impl Iterator<Item = &'a Row>) -> Result<Vec<SummaryRow>> {
    let mut cells = Cells::new();
    tally(rows, &mut cells);
    if cells.is_empty() {
        return Err(Error::InvalidParameter("no play episodes to summarize".into()));
    }
    Ok(finish(cells))
}

pub fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let file = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Csv {
        file: file.clone(),
        row: 0,
        msg: e.to_string(),
    })?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.deserialize::<Row>().enumerate() {
        // Row 1 is the header.
        let row = rec.map_err(|e| Error::Csv {
            file: file.clone(),
            row: e.position().map_or(i + 2, |p| p.line() as usize),
            msg: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Run files in `dir`: every `*.csv` except summaries, sorted by name.
pub fn run_files(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|x| x == "csv")
                && !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("summary") || n.to_string_lossy().starts_with("sweep"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Summary table over every run file in `dir`. Each file counts as its own
/// set of runs.
pub fn summarize_dir(dir: &Path) -> Result<Vec<SummaryRow>> {
    let files = run_files(dir)?;
    if files.is_empty() {
        return Err(Error::InvalidParameter(format!("no run files in {}", dir.display())));
    }
    let mut cells = Cells::new();
    for f in &files {
        let rows = read_rows(f)?;
        tally(rows.iter(), &mut cells);
    }
    if cells.is_empty() {
        return Err(Error::InvalidParameter(format!("no play episodes in {}", dir.display())));
    }
    Ok(finish(cells))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
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
    use crate::harness::runner::{write_rows, PHASE_PLAY};

    fn row(run: usize, episode: usize, won: bool) -> Row {
        Row {
            run,
            episode,
            phase: PHASE_PLAY.into(),
            agent: "tomop1".into(),
            opponent: "tomop0".into(),
            r_self: if won { 1.0 } else { -1.0 },
            result: if won { "win" } else { "loss" }.into(),
            c1: Some(0.5),
            flag: Some(1),
            upsilon: None,
            theta: None,
            j_hat: Some(0),
            pi_star: Some(1),
            opp_strategy: "always-R".into(),
            switch: 0,
            detected: 0,
            known_pairs: None,
            belief_entropy: Some(0.1),
            belief_true: None,
        }
    }

    #[test]
    fn hand_standard_deviation() {
        let (m, s) = mean_std(&[1.0, 0.0]);
        assert_eq!(m, 0.5);
        assert!((s - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[0.3]), (0.3, 0.0));
    }

    #[test]
    fn all_wins_and_split_runs() {
        let rows: Vec<Row> = (0..10).map(|e| row(0, e, true)).collect();
        let s = summarize_rows(rows.iter()).unwrap();
        assert_eq!((s[0].win_rate_mean, s[0].win_rate_std), (1.0, 0.0));

        let dir = tempfile::tempdir().unwrap();
        write_rows(&dir.path().join("run-000.csv"), &(0..4).map(|e| row(0, e, true)).collect::<Vec<_>>()).unwrap();
        write_rows(&dir.path().join("run-001.csv"), &(0..4).map(|e| row(1, e, false)).collect::<Vec<_>>()).unwrap();
        let s = summarize_dir(dir.path()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].runs, 2);
        assert!((s[0].win_rate_mean - 0.5).abs() < 1e-12);
        assert!((s[0].win_rate_std - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn empty_and_malformed_inputs_fail() {
        let dir = tempfile::tempdir().unwrap();
        assert!(summarize_dir(dir.path()).is_err());
        let rows: Vec<Row> = (0..3).map(|e| row(0, e, true)).collect();
        let path = dir.path().join("run-000.csv");
        write_rows(&path, &rows).unwrap();
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("0,3,play,tomop1,tomop0,not-a-number,win,,,,,,,x,0,0,,,\n");
        std::fs::write(&path, text).unwrap();
        match summarize_dir(dir.path()) {
            Err(Error::Csv { row, .. }) => assert_eq!(row, 5),
            other => panic!("expected a CSV error, got {other:?}"),
        }
    }
}
