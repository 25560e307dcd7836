//! BPR-EI on a hand-written 3×3 performance matrix: how the chosen policy
//! moves as the belief over opponent strategies shifts.
//!
//! cargo run --example bpr_ei_selection

use bayes_tomop::bpr::{ei_masses, ei_select, expected_best, PerfMatrix};
use bayes_tomop::prob::GaussianPerfModel;

fn main() -> bayes_tomop::Result<()> {
    // Rows are opponent strategies, columns our policies. Policy i answers
    // strategy i; policy 2 is a safe all-rounder.
    let g = GaussianPerfModel::new;
    let perf = PerfMatrix::from_rows(
        vec![
            vec![g(1.0, 0.1), g(-1.0, 0.1), g(0.4, 0.3)],
            vec![g(-1.0, 0.1), g(1.0, 0.1), g(0.4, 0.3)],
            vec![g(-0.5, 0.2), g(-0.5, 0.2), g(0.6, 0.3)],
        ],
        true,
    )?;
    for weights in [[1.0 / 3.0; 3], [0.6, 0.3, 0.1], [0.45, 0.45, 0.1], [0.05, 0.9, 0.05]] {
        let masses = ei_masses(&weights, &perf, 1.0)?;
        println!(
            "belief {:?}  U_bar {:+.3}  masses {:?}  -> policy {}",
            weights.map(|w| (w * 100.0).round() / 100.0),
            expected_best(&weights, &perf)?,
            masses.iter().map(|m| (m * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            ei_select(&weights, &perf, 1.0)?
        );
    }
    Ok(())
}
