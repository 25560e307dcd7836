//! Traces the first-order confidence c1 and the flag through a made-up
//! sequence of wins and losses.
//!
//! cargo run --example confidence_dynamics

use std::collections::VecDeque;

use bayes_tomop::tomop::{update_confidence, update_flag, win_rate};

fn main() {
    let (lambda, delta, l) = (0.7, 0.7, 5);
    let outcomes = "WWWWWWWLLLLLLWWWWWW";
    let (mut c1, mut flag, mut prev) = (0.3, true, 1.0);
    let mut window = VecDeque::new();
    for (t, ch) in outcomes.chars().enumerate() {
        window.push_back(ch == 'W');
        let ups = win_rate(&window, l);
        flag = update_flag(flag, ups, delta);
        c1 = update_confidence(c1, ups, prev, lambda, delta, flag);
        prev = ups;
        println!("{t:2} {ch}  upsilon {ups:.2}  flag {}  c1 {c1:.3}", u8::from(flag));
    }
}
