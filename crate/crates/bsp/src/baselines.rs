//! Reference heuristics and the exact brute-force baseline, all evaluated
//! with exact set welfare.

use std::time::Instant;

use crate::welfare::{SelectionSet, WelfareEvaluator};
use crate::{BspError, Result};

/// Strict-improvement threshold for local search swaps.
const IMPROVEMENT_TOL: f64 = 1e-12;

pub const DEFAULT_BRUTE_FORCE_CAP: u128 = 2_000_000;

#[derive(Debug, Clone)]
pub struct BaselineReport {
    pub selected: SelectionSet,
    pub welfare: f64,
    /// Number of sw_set evaluations performed.
    pub evaluations: u64,
    pub wall_time: f64,
    /// Accepted swaps (local search only; 0 otherwise).
    pub iterations: usize,
}

/// Greedy for monotone submodular welfare: k passes, each adding the bidder
/// with the best exact marginal gain, ties by lowest index. Evaluation count
/// is exactly sum over steps t of (n - t + 1).
pub fn greedy(ev: &WelfareEvaluator) -> BaselineReport {
    let start = Instant::now();
    let n = ev.instance().n();
    let k = ev.instance().k();
    let evals_before = ev.set_eval_count();

    let mut members: Vec<usize> = Vec::with_capacity(k);
    let mut current = 0.0;
    for _ in 0..k {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            if members.contains(&i) {
                continue;
            }
            let mut trial = members.clone();
            trial.push(i);
            let value = ev.sw_set(&SelectionSet::new(trial));
            let better = match best {
                None => true,
                Some((bv, _)) => value > bv,
            };
            if better {
                best = Some((value, i));
            }
        }
        let (value, i) = best.expect("k <= n guarantees a candidate");
        if value - current <= 0.0 && !members.is_empty() {
            // Cannot happen under monotonicity; guarded anyway.
            break;
        }
        members.push(i);
        current = value;
    }

    let selected = SelectionSet::new(members);
    BaselineReport {
        welfare: current,
        selected,
        evaluations: ev.set_eval_count() - evals_before,
        wall_time: start.elapsed().as_secs_f64(),
        iterations: 0,
    }
}

/// Best-improvement single-swap local search from `init`; stops at a local
/// optimum (no swap improves by more than 1e-12) or after `max_sweeps`
/// accepted swaps.
pub fn local_search(
    ev: &WelfareEvaluator,
    init: &SelectionSet,
    max_sweeps: usize,
) -> BaselineReport {
    let start = Instant::now();
    let n = ev.instance().n();
    let k = ev.instance().k();
    assert_eq!(init.len(), k.min(n), "local search needs a full-size start");
    let evals_before = ev.set_eval_count();

    let mut members = init.members().to_vec();
    let mut current = ev.sw_set(init);
    let mut iterations = 0;
    while iterations < max_sweeps {
        let mut best: Option<(f64, usize, usize)> = None; // (value, out_pos, in_idx)
        for out_pos in 0..members.len() {
            for in_idx in 0..n {
                if members.contains(&in_idx) {
                    continue;
                }
                let mut trial = members.clone();
                trial[out_pos] = in_idx;
                let value = ev.sw_set(&SelectionSet::new(trial));
                let better = match best {
                    None => value > current + IMPROVEMENT_TOL,
                    Some((bv, _, _)) => value > bv,
                };
                if better && value > current + IMPROVEMENT_TOL {
                    best = Some((value, out_pos, in_idx));
                }
            }
        }
        match best {
            None => break,
            Some((value, out_pos, in_idx)) => {
                members[out_pos] = in_idx;
                current = value;
                iterations += 1;
            }
        }
    }

    let selected = SelectionSet::new(members);
    BaselineReport {
        welfare: current,
        selected,
        evaluations: ev.set_eval_count() - evals_before,
        wall_time: start.elapsed().as_secs_f64(),
        iterations,
    }
}

/// Advance to the next k-combination of [0, n) in lexicographic order;
/// false when exhausted.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Exact optimum over all size-k subsets (welfare is monotone, so size k
/// suffices). Errors when C(n, k) exceeds the cap.
pub fn brute_force(ev: &WelfareEvaluator, cap: u128) -> Result<BaselineReport> {
    let start = Instant::now();
    let n = ev.instance().n();
    let k = ev.instance().k();
    let subsets = binomial(n as u128, k as u128);
    if subsets > cap {
        return Err(BspError::CapExceeded { subsets, cap });
    }
    let evals_before = ev.set_eval_count();

    let mut combo: Vec<usize> = (0..k).collect();
    let mut best_members = combo.clone();
    let mut best_value = f64::NEG_INFINITY;
    loop {
        let value = ev.sw_set(&SelectionSet::new(combo.clone()));
        if value > best_value {
            best_value = value;
            best_members = combo.clone();
        }
        if !next_combination(&mut combo, n) {
            break;
        }
    }

    Ok(BaselineReport {
        selected: SelectionSet::new(best_members),
        welfare: best_value,
        evaluations: ev.set_eval_count() - evals_before,
        wall_time: start.elapsed().as_secs_f64(),
        iterations: 0,
    })
}
