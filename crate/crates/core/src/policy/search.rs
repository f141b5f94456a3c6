//! Discrete search over per-hour price grids: cyclic coordinate descent and
//! exhaustive enumeration.

use std::cmp::Ordering;

use rand::Rng;
use serde::Serialize;

use super::problem::{DayProblem, DayState, Evaluation};
use crate::exec::Exec;
use crate::rng;

const REL_TIE: f64 = 1e-12;

/// Penalised objective. Feasible candidates always rank ahead of infeasible
/// ones; within a class, lower `value` is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Score {
    pub feasible: bool,
    /// Predicted deviation (kWh), plus `penalty_weight * violation` when infeasible.
    pub value: f64,
}

impl Score {
    fn tolerance(self, other: Score) -> f64 {
        REL_TIE * self.value.abs().max(other.value.abs()).max(1.0)
    }

    /// Total order with a relative tie band.
    pub fn compare(self, other: Score) -> Ordering {
        match (self.feasible, other.feasible) {
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => {
                let diff = self.value - other.value;
                if diff.abs() <= self.tolerance(other) {
                    Ordering::Equal
                } else if diff < 0.0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }
}

/// What the search minimises.
pub(crate) enum Objective<'a> {
    Deterministic {
        problem: DayProblem<'a>,
        penalty_weight: f64,
    },
    /// Mean over forecast samples; constraints must hold in at least
    /// `chance_level` of the samples.
    Robust {
        problems: Vec<DayProblem<'a>>,
        penalty_weight: f64,
        chance_level: f64,
    },
}

impl Objective<'_> {
    pub fn hours(&self) -> usize {
        match self {
            Objective::Deterministic { problem, .. } => problem.hours(),
            Objective::Robust { problems, .. } => problems[0].hours(),
        }
    }

    pub fn score(&self, prices: &[f64]) -> Score {
        Evaluator::new(self, prices).score()
    }
}

/// Incremental scorer: holds the responded load of every problem and
/// updates it one hour at a time.
pub(crate) struct Evaluator<'o, 'a> {
    objective: &'o Objective<'a>,
    states: Vec<DayState>,
}

impl<'o, 'a> Evaluator<'o, 'a> {
    pub fn new(objective: &'o Objective<'a>, prices: &[f64]) -> Self {
        let states = match objective {
            Objective::Deterministic { problem, .. } => vec![problem.state(prices)],
            Objective::Robust { problems, .. } => {
                problems.iter().map(|p| p.state(prices)).collect()
            }
        };
        Self { objective, states }
    }

    pub fn set(&mut self, h: usize, price: f64) {
        match self.objective {
            Objective::Deterministic { problem, .. } => {
                problem.set_price(&mut self.states[0], h, price)
            }
            Objective::Robust { problems, .. } => {
                for (p, st) in problems.iter().zip(&mut self.states) {
                    p.set_price(st, h, price);
                }
            }
        }
    }

    pub fn score(&self) -> Score {
        match self.objective {
            Objective::Deterministic {
                problem,
                penalty_weight,
            } => penalised(problem.totals(&self.states[0]), *penalty_weight),
            Objective::Robust {
                problems,
                penalty_weight,
                chance_level,
            } => {
                let n = problems.len() as f64;
                let mut deviation = 0.0;
                let mut violation = 0.0;
                let mut satisfied = 0usize;
                for (p, st) in problems.iter().zip(&self.states) {
                    let e = p.totals(st);
                    deviation += e.deviation;
                    violation += e.violation();
                    satisfied += e.feasible() as usize;
                }
                let deviation = deviation / n;
                let feasible = satisfied as f64 >= chance_level * n;
                Score {
                    feasible,
                    value: if feasible {
                        deviation
                    } else {
                        deviation + penalty_weight * (violation / n)
                    },
                }
            }
        }
    }
}

fn penalised(e: Evaluation, penalty_weight: f64) -> Score {
    let feasible = e.feasible();
    Score {
        feasible,
        value: if feasible {
            e.deviation
        } else {
            e.deviation + penalty_weight * e.violation()
        },
    }
}

pub(crate) struct Grid {
    pub levels: Vec<f64>,
}

impl Grid {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        let step = (max - min) / (n - 1) as f64;
        let levels = (0..n)
            .map(|i| {
                if i + 1 == n {
                    max
                } else {
                    min + step * i as f64
                }
            })
            .collect();
        Self { levels }
    }

    pub fn nearest(&self, value: f64) -> usize {
        let mut best = 0;
        for (i, level) in self.levels.iter().enumerate() {
            if (level - value).abs() < (self.levels[best] - value).abs() {
                best = i;
            }
        }
        best
    }
}

/// Result of one coordinate-descent start.
#[derive(Debug, Clone)]
pub struct DescentTrace {
    pub indices: Vec<usize>,
    pub score: Score,
    /// Score at the start, then after each sweep.
    pub history: Vec<Score>,
}

/// Whether moving hour `h` from `current` to `candidate` is an improvement:
/// strictly better, or tied and closer to the reference price.
fn prefer(candidate: (Score, f64), current: (Score, f64)) -> bool {
    match candidate.0.compare(current.0) {
        Ordering::Less => true,
        Ordering::Equal => candidate.1 < current.1,
        Ordering::Greater => false,
    }
}

/// Cyclic coordinate descent. A sweep visits every hour and moves it to its
/// preferred grid level. When a sweep changes nothing, block sweeps try
/// joint moves of 2, then 3, up to `block_size` hours, each hour stepping at
/// most `block_radius` levels. Joint moves let the search trade price
/// between hours along the bill and revenue constraints, which couple them.
/// Any change returns to single-hour sweeps. Every sweep counts towards
/// `max_sweeps`.
pub(crate) fn coordinate_descent(
    objective: &Objective<'_>,
    grid: &Grid,
    reference: &[f64],
    start: Vec<usize>,
    max_sweeps: usize,
    block: Block,
) -> DescentTrace {
    let hours = objective.hours();
    let mut idx = start;
    let prices: Vec<f64> = idx.iter().map(|&i| grid.levels[i]).collect();
    let mut eval = Evaluator::new(objective, &prices);
    let mut score = eval.score();
    let mut history = vec![score];
    let distance = |h: usize, g: usize| (grid.levels[g] - reference[h]).abs();

    let mut size = 1;
    while history.len() <= max_sweeps {
        let changed = if size == 1 {
            let mut changed = false;
            for h in 0..hours {
                let original = idx[h];
                let mut best = (score, distance(h, original), original);
                for g in 0..grid.levels.len() {
                    if g == original {
                        continue;
                    }
                    eval.set(h, grid.levels[g]);
                    let s = eval.score();
                    if prefer((s, distance(h, g)), (best.0, best.1)) {
                        best = (s, distance(h, g), g);
                    }
                }
                idx[h] = best.2;
                eval.set(h, grid.levels[best.2]);
                if best.2 != original {
                    changed = true;
                    score = best.0;
                }
            }
            changed
        } else {
            block_sweep(&mut eval, grid, size, block.radius, &mut idx, &mut score)
        };
        history.push(score);
        if changed {
            size = 1;
        } else if size < block.size.min(hours) {
            size += 1;
        } else {
            break;
        }
    }
    DescentTrace {
        indices: idx,
        score,
        history,
    }
}

/// Joint-move neighbourhood settings.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Block {
    pub size: usize,
    pub radius: usize,
}

/// One pass over all `size`-subsets of hours. Every hour of the subset moves
/// by a non-zero step of at most `radius` levels; only strict improvements are
/// taken, so block sweeps cannot cycle.
fn block_sweep(
    eval: &mut Evaluator<'_, '_>,
    grid: &Grid,
    size: usize,
    radius: usize,
    idx: &mut [usize],
    score: &mut Score,
) -> bool {
    let hours = idx.len();
    let levels = grid.levels.len() as i64;
    let r = radius as i64;
    let steps: Vec<i64> = (-r..=r).filter(|&d| d != 0).collect();
    let mut changed = false;
    let mut subset: Vec<usize> = (0..size).collect();
    let mut choice = vec![0usize; size];
    loop {
        let original: Vec<usize> = subset.iter().map(|&h| idx[h]).collect();
        let mut best: Option<(Score, Vec<usize>)> = None;
        choice.iter_mut().for_each(|c| *c = 0);
        'moves: loop {
            let mut valid = true;
            for (k, &h) in subset.iter().enumerate() {
                let g = original[k] as i64 + steps[choice[k]];
                if !(0..levels).contains(&g) {
                    valid = false;
                    break;
                }
                eval.set(h, grid.levels[g as usize]);
            }
            if valid {
                let s = eval.score();
                let incumbent = best.as_ref().map_or(*score, |b| b.0);
                if s.compare(incumbent) == Ordering::Less {
                    let levels = (0..size)
                        .map(|k| (original[k] as i64 + steps[choice[k]]) as usize)
                        .collect();
                    best = Some((s, levels));
                }
            }
            // Next step combination, odometer style.
            for k in 0..size {
                choice[k] += 1;
                if choice[k] < steps.len() {
                    continue 'moves;
                }
                choice[k] = 0;
            }
            break;
        }
        let chosen = match best {
            Some((s, levels)) => {
                *score = s;
                changed = true;
                levels
            }
            None => original,
        };
        for (k, &h) in subset.iter().enumerate() {
            idx[h] = chosen[k];
            eval.set(h, grid.levels[chosen[k]]);
        }
        if !next_subset(&mut subset, hours) {
            return changed;
        }
    }
}

/// Advances to the next `k`-subset of `0..n` in lexicographic order.
fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Perturbation settings for iterated descent.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kicks {
    pub count: usize,
    pub seed: u64,
}

/// Runs coordinate descent from each start, keeping the best result. Ties go
/// to the earliest start.
///
/// After converging, each start is kicked `kicks.count` times: half of the
/// hours are redrawn at random and descent runs again, the result replacing
/// the incumbent only if strictly better. Kick streams depend on the start
/// index, so starts stay independent.
#[allow(clippy::too_many_arguments)]
pub(crate) fn multi_start(
    objective: &Objective<'_>,
    grid: &Grid,
    reference: &[f64],
    starts: Vec<Vec<usize>>,
    max_sweeps: usize,
    block: Block,
    kicks: Kicks,
    exec: Exec,
) -> (DescentTrace, Vec<DescentTrace>) {
    let starts: Vec<(usize, Vec<usize>)> = starts.into_iter().enumerate().collect();
    let traces = exec.map(starts, |(i, start)| {
        let mut trace = coordinate_descent(objective, grid, reference, start, max_sweeps, block);
        let mut rng = rng::stream(&[kicks.seed, i as u64, 0x4B1C]);
        let hours = trace.indices.len();
        for _ in 0..kicks.count {
            let mut kicked = trace.indices.clone();
            for h in rand::seq::index::sample(&mut rng, hours, hours.div_ceil(2)) {
                kicked[h] = rng.random_range(0..grid.levels.len());
            }
            let next = coordinate_descent(objective, grid, reference, kicked, max_sweeps, block);
            if next.score.compare(trace.score) == Ordering::Less {
                trace.indices = next.indices;
                trace.score = next.score;
                trace.history.push(next.score);
            }
        }
        trace
    });
    let mut best = 0;
    for (i, t) in traces.iter().enumerate().skip(1) {
        if t.score.compare(traces[best].score) == Ordering::Less {
            best = i;
        }
    }
    (traces[best].clone(), traces)
}

pub(crate) fn random_start(grid: &Grid, hours: usize, seed: &[u64]) -> Vec<usize> {
    let mut rng = rng::stream(seed);
    (0..hours)
        .map(|_| rng.random_range(0..grid.levels.len()))
        .collect()
}

/// Exhaustive enumeration of `levels^hours` signals.
pub(crate) fn exhaustive(
    objective: &Objective<'_>,
    grid: &Grid,
    reference: &[f64],
    exec: Exec,
) -> (Vec<usize>, Score) {
    let hours = objective.hours();
    let g = grid.levels.len();
    let total = g.pow(hours as u32);
    let decode = |mut code: usize| -> Vec<usize> {
        let mut idx = vec![0; hours];
        for slot in idx.iter_mut().rev() {
            *slot = code % g;
            code /= g;
        }
        idx
    };
    let total_distance = |idx: &[usize]| -> f64 {
        idx.iter()
            .enumerate()
            .map(|(h, &i)| (grid.levels[i] - reference[h]).abs())
            .sum()
    };
    // Split the enumeration over the first hour's grid level.
    let chunk = total / g;
    let partial = exec.map_range(g, |first| {
        let mut eval = Evaluator::new(objective, &vec![grid.levels[first]; hours]);
        let mut best: Option<(Vec<usize>, Score, f64)> = None;
        for code in first * chunk..(first + 1) * chunk {
            let idx = decode(code);
            for (h, &i) in idx.iter().enumerate() {
                eval.set(h, grid.levels[i]);
            }
            let s = eval.score();
            let d = total_distance(&idx);
            let take = match &best {
                None => true,
                Some((_, bs, bd)) => prefer((s, d), (*bs, *bd)),
            };
            if take {
                best = Some((idx, s, d));
            }
        }
        best.expect("non-empty chunk")
    });
    let mut iter = partial.into_iter();
    let mut best = iter.next().expect("at least one grid level");
    for cand in iter {
        if prefer((cand.1, cand.2), (best.1, best.2)) {
            best = cand;
        }
    }
    (best.0, best.1)
}
