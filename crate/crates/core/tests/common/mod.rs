//! Oracles shared by the acceptance target and the focused test files.
#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use bayes_tomop::bpr::{ei_masses, ei_select, expected_best, PerfMatrix};
use bayes_tomop::detect::{rmax_plan, rmax_update, RmaxModel, TERMINAL};
use bayes_tomop::prob::{normalize, GaussianPerfModel};
use bayes_tomop::rng::SimRng;
use bayes_tomop::tomop::{integrate, update_confidence, update_flag, win_rate};
use rand::Rng;

/// One hand-evaluated update-rule case and whether it held.
pub struct CaseResult {
    pub name: String,
    pub ok: bool,
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12
}

/// Tabulated cases for integrate, update_confidence, update_flag and the win
/// rate window. Expected values were worked out by hand from the update
/// rules.
pub fn equation_cases() -> Vec<CaseResult> {
    let mut out = Vec::new();
    let mut push = |name: &str, ok: bool| out.push(CaseResult { name: name.into(), ok });

    // (c1, υ, υ_prev, λ, δ, F) → c1'
    let conf: [(&str, [f64; 5], bool, f64); 14] = [
        ("raise: υ above υ_prev", [0.3, 0.8, 0.75, 0.7, 0.7], true, 0.79),
        ("raise: υ equal to υ_prev", [0.3, 0.8, 0.8, 0.7, 0.7], true, 0.79),
        ("raise: near saturation", [0.9, 1.0, 1.0, 0.7, 0.7], true, 0.97),
        ("raise: flag off zeroes", [0.3, 0.8, 0.75, 0.7, 0.7], false, 0.0),
        ("raise: from zero", [0.0, 0.9, 0.5, 0.5, 0.7], true, 0.5),
        ("decay: υ=0.8", [0.5, 0.8, 0.9, 0.7, 0.7], true, 0.048_455_006_504_028_22),
        ("decay: υ=0.95 from 1", [1.0, 0.95, 1.0, 0.7, 0.7], true, 0.037_000_290_721_888_46),
        ("decay: small δ", [0.8, 0.5, 0.6, 0.7, 0.1], true, 0.605_176_637_892_824),
        ("decay: flag off zeroes", [0.8, 0.5, 0.6, 0.7, 0.1], false, 0.0),
        ("decay: just above δ", [0.6, 0.72, 0.74, 0.7, 0.7], true, 0.050_383_763_058_072_84),
        ("reset: υ below δ, flag on", [0.6, 0.6, 0.9, 0.7, 0.7], true, 0.7),
        ("reset: υ below δ, flag off", [0.6, 0.6, 0.9, 0.7, 0.7], false, 0.0),
        ("reset: υ equal to δ", [0.2, 0.7, 0.8, 0.3, 0.7], true, 0.3),
        ("reset: υ zero", [0.2, 0.0, 0.5, 0.3, 0.7], true, 0.3),
    ];
    for (name, [c1, u, up, lam, d], f, want) in conf {
        push(&format!("update_confidence {name}"), close(update_confidence(c1, u, up, lam, d, f), want));
    }

    let flags = [
        ("flag on, υ at δ flips off", true, 0.7, 0.7, false),
        ("flag off, υ below δ flips on", false, 0.5, 0.7, true),
        ("flag on, υ above δ stays", true, 0.71, 0.7, true),
        ("flag off, υ above δ stays", false, 0.9, 0.7, false),
    ];
    for (name, f, u, d, want) in flags {
        push(&format!("update_flag {name}"), update_flag(f, u, d) == want);
    }

    let b = normalize(&[0.5, 0.3, 0.2], 0.0).unwrap();
    let ints: [(&str, usize, f64, [f64; 3]); 4] = [
        ("c1=0.3 on j=1", 1, 0.3, [0.35, 0.51, 0.14]),
        ("c1=0 keeps belief", 2, 0.0, [0.5, 0.3, 0.2]),
        ("c1=1 is a point mass", 2, 1.0, [0.0, 0.0, 1.0]),
        ("c1=0.5 on j=0", 0, 0.5, [0.75, 0.15, 0.1]),
    ];
    for (name, j, c1, want) in ints {
        let got = integrate(&b, j, c1);
        push(&format!("integrate {name}"), got.iter().zip(want).all(|(g, w)| close(*g, w)));
    }

    let window: VecDeque<bool> = [true, false, true, true].into_iter().collect();
    push("win_rate warm-up is 1", close(win_rate(&window, 5), 1.0));
    push("win_rate over last l", close(win_rate(&window, 3), 2.0 / 3.0));
    out
}

/// Runs `n` random confidence and flag updates and returns how many left c1 outside
/// [0, 1].
pub fn confidence_fuzz(n: usize, seed: u64) -> usize {
    let mut rng = SimRng::new(seed);
    let mut c1: f64 = rng.gen();
    let mut flag = true;
    let mut prev: f64 = 1.0;
    let mut bad = 0;
    for _ in 0..n {
        let u: f64 = if rng.gen_bool(0.1) { [0.0, 1.0][rng.gen_range(0..2)] } else { rng.gen() };
        let lambda = rng.gen_range(1e-6..1.0 - 1e-6);
        let delta = rng.gen_range(1e-6..1.0 - 1e-6);
        flag = update_flag(flag, u, delta);
        c1 = update_confidence(c1, u, prev, lambda, delta, flag);
        prev = u;
        if !(0.0..=1.0).contains(&c1) || !c1.is_finite() {
            bad += 1;
        }
    }
    bad
}

/// Composite Simpson's rule over [a, b] with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    s * h / 3.0
}

fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// Largest gap between the closed-form EI masses and Simpson quadrature of
/// the belief-weighted densities over `n` random matrices, plus how many
/// selections disagreed with the quadrature argmax where it is clear-cut.
pub fn ei_quadrature_check(n: usize, seed: u64) -> (f64, usize) {
    let mut rng = SimRng::new(seed);
    let mut worst: f64 = 0.0;
    let mut wrong_choice = 0;
    for _ in 0..n {
        let rows = rng.gen_range(1..=6);
        let cols = rng.gen_range(1..=6);
        let models: Vec<Vec<GaussianPerfModel>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| GaussianPerfModel::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.05..1.0)))
                    .collect()
            })
            .collect();
        let perf = PerfMatrix::from_rows(models.clone(), false).unwrap();
        let raw: Vec<f64> = (0..rows).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let u_max = rng.gen_range(1.0..2.0);

        // Ū from first principles.
        let u_bar = (0..cols)
            .map(|c| (0..rows).map(|r| w[r] * models[r][c].mean).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((u_bar - expected_best(&w, &perf).unwrap()).abs() < 1e-12);

        let closed = ei_masses(&w, &perf, u_max).unwrap();
        let quad: Vec<f64> = (0..cols)
            .map(|c| {
                let f = |x: f64| (0..rows).map(|r| w[r] * normal_pdf(x, models[r][c].mean, models[r][c].stddev)).sum();
                simpson(f, u_bar, u_max, 20_000)
            })
            .collect();
        for (a, b) in closed.iter().zip(&quad) {
            worst = worst.max((a - b).abs());
        }
        let mut order: Vec<usize> = (0..cols).collect();
        order.sort_by(|a, b| quad[*b].total_cmp(&quad[*a]));
        let clear = cols == 1 || quad[order[0]] - quad[order[1]] > 1e-6;
        if clear && ei_select(&w, &perf, u_max).unwrap() != order[0] {
            wrong_choice += 1;
        }
    }
    (worst, wrong_choice)
}

/// Dense value iteration on the empirical model implied by `counts`, with
/// pairs seen fewer than `n` times valued optimistically. Returns Q for
/// every pair.
fn dense_rmax_oracle(
    n_states: usize,
    n_actions: usize,
    counts: &BTreeMap<(usize, usize), (u32, f64, BTreeMap<usize, u32>)>,
    n: u32,
    gamma: f64,
    u_opt: f64,
) -> Vec<Vec<f64>> {
    let opt = u_opt / (1.0 - gamma);
    let mut q = vec![vec![opt; n_actions]; n_states];
    for _ in 0..100_000 {
        let v: Vec<f64> = q.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
        let mut next = q.clone();
        let mut change: f64 = 0.0;
        for s in 0..n_states {
            for a in 0..n_actions {
                let value = match counts.get(&(s, a)) {
                    Some((visits, reward, succ)) if *visits >= n => {
                        let total = *visits as f64;
                        let future: f64 = succ
                            .iter()
                            .map(|(s2, c)| {
                                let vs = if *s2 == TERMINAL { 0.0 } else { v[*s2] };
                                *c as f64 / total * vs
                            })
                            .sum();
                        reward / total + gamma * future
                    }
                    _ => opt,
                };
                change = change.max((value - q[s][a]).abs());
                next[s][a] = value;
            }
        }
        q = next;
        if change < 1e-12 {
            break;
        }
    }
    q
}

/// Largest |Q̂ - oracle| over every pair of `n` random MDPs with at most 20
/// states.
pub fn rmax_oracle_check(n: usize, seed: u64) -> f64 {
    let mut rng = SimRng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let n_states = rng.gen_range(1..=20);
        let n_actions = rng.gen_range(1..=5);
        let gamma = rng.gen_range(0.5..0.95);
        let known_after = rng.gen_range(1..=5);
        let mut model = RmaxModel::new(n_actions, known_after, gamma, 1.0);
        let mut counts: BTreeMap<(usize, usize), (u32, f64, BTreeMap<usize, u32>)> = BTreeMap::new();
        // Each pair gets a fixed small successor set and reward range.
        let succ: Vec<Vec<Vec<usize>>> = (0..n_states)
            .map(|_| {
                (0..n_actions)
                    .map(|_| {
                        (0..rng.gen_range(1..=3))
                            .map(|_| if rng.gen_bool(0.15) { TERMINAL } else { rng.gen_range(0..n_states) })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        for _ in 0..rng.gen_range(1..400) {
            let s = rng.gen_range(0..n_states);
            let a = rng.gen_range(0..n_actions);
            let options = &succ[s][a];
            let s2 = options[rng.gen_range(0..options.len())];
            let r: f64 = rng.gen_range(-1.0..1.0);
            let entry = counts.entry((s, a)).or_insert((0, 0.0, BTreeMap::new()));
            entry.0 += 1;
            entry.1 += r;
            *entry.2.entry(s2).or_insert(0) += 1;
            if rmax_update(&mut model, s, a, s2, r) {
                rmax_plan(&mut model, 1e-10, 100_000).unwrap();
            }
        }
        rmax_plan(&mut model, 1e-10, 100_000).unwrap();
        let oracle = dense_rmax_oracle(n_states, n_actions, &counts, known_after, gamma, 1.0);
        for s in 0..n_states {
            for a in 0..n_actions {
                worst = worst.max((model.q_value(s, a) - oracle[s][a]).abs());
            }
        }
    }
    worst
}
