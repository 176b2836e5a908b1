//! Independent validators for the solver: plain value iteration on the
//! full state space, the explicit max-form systems of the coin game, and
//! a seeded match simulator.

use num_rational::BigRational;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::game::{Action, GameSpec};
use crate::numeric::Scalar;
use crate::solver::{Policy, ValueTable};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("value iteration did not reach tolerance {tolerance:e} within {sweeps} sweeps (last change {change:e})")]
    NoConvergence { sweeps: usize, tolerance: f64, change: f64 },
    #[error("invalid iteration config: {0}")]
    BadConfig(&'static str),
    #[error("strategy has no action for ({need},{opp_need},{tau})")]
    UndefinedPolicyState { need: usize, opp_need: usize, tau: usize },
    #[error("simulation needs at least one game and one worker")]
    EmptySimulation,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationConfig {
    /// Stop once a full sweep changes no value by this much or more.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig { tolerance: 1e-13, max_sweeps: 1_000_000 }
    }
}

/// Gauss-Seidel value iteration on the Bellman equations of every
/// player-one state `(a, b, tau)`, `tau < a`. Sweeps visit `(a, b)` in
/// lexicographic order and `tau` in descending order. Intended for small
/// targets.
#[allow(clippy::needless_range_loop)]
pub fn value_iteration(spec: &GameSpec<f64>, cfg: IterationConfig) -> Result<ValueTable<f64>, OracleError> {
    if cfg.tolerance.is_nan() || cfg.tolerance <= 0.0 {
        return Err(OracleError::BadConfig("tolerance must be positive"));
    }
    if cfg.max_sweeps == 0 {
        return Err(OracleError::BadConfig("max_sweeps must be at least 1"));
    }
    let n = spec.target();
    let p0 = *spec.p0();
    let faces: Vec<(usize, f64)> = spec.scoring_faces().map(|(i, p)| (i, *p)).collect();
    // v[a][b][tau], all 1-based in a and b
    let mut v: Vec<Vec<Vec<f64>>> = (0..=n).map(|a| (0..=n).map(|_| vec![0.5; a]).collect()).collect();
    let mut change = f64::INFINITY;
    for _ in 0..cfg.max_sweeps {
        change = 0.0f64;
        for a in 1..=n {
            for b in 1..=n {
                let bust = p0 * (1.0 - v[b][a][0]);
                for tau in (0..a).rev() {
                    let mut roll = bust;
                    for &(i, p) in &faces {
                        let next = tau + i;
                        roll += p * if next >= a { 1.0 } else { v[a][b][next] };
                    }
                    let best = if tau > 0 { roll.max(1.0 - v[b][a - tau][0]) } else { roll };
                    change = change.max((best - v[a][b][tau]).abs());
                    v[a][b][tau] = best;
                }
            }
        }
        if change < cfg.tolerance {
            let mut table = ValueTable::new(n);
            for a in 1..=n {
                for b in 1..=n {
                    table.set(a, b, v[a][b][0]);
                }
            }
            return Ok(table);
        }
    }
    Err(OracleError::NoConvergence { sweeps: cfg.max_sweeps, tolerance: cfg.tolerance, change })
}

/// Exact values of the coin game (faces {0, 1}, fair coin) from its
/// explicit max-form systems
///
/// ```text
/// x = max_{1<=t<=a} 2^-t [(2^t - 1)(1 - y) + xbar_t]
/// y = max_{1<=s<=b} 2^-s [(2^s - 1)(1 - x) + ybar_s]
/// ```
///
/// with `xbar_t = 1 - v(b, a - t)`, `ybar_s = 1 - v(a, b - s)` and
/// `xbar_a = ybar_b = 1`. Each system is solved by trying every pair of
/// branches and keeping the one whose solution attains both maxima.
pub fn piglet_closed_form(target: usize) -> ValueTable<BigRational> {
    type Q = BigRational;
    let one = Q::from_ratio(1, 1);
    let mut table: ValueTable<Q> = ValueTable::new(target);
    for b in 1..=target {
        for a in 1..=b {
            // branch t of x: x = alpha_t + beta_t * y
            let branches = |own: usize, opp: usize, table: &ValueTable<Q>| -> Vec<(Q, Q)> {
                (1..=own)
                    .map(|t| {
                        let scale = Q::from_ratio(1, 1i64 << t);
                        let kept = one.clone() - scale.clone();
                        let bar = if t == own {
                            one.clone()
                        } else {
                            one.clone() - table.get(opp, own - t).expect("smaller sub-game").clone()
                        };
                        // kept * (1 - y) + scale * bar
                        (kept.clone() + scale * bar, -kept)
                    })
                    .collect()
            };
            let xs = branches(a, b, &table);
            let ys = branches(b, a, &table);
            let eval = |lines: &[(Q, Q)], at: &Q| {
                lines.iter().map(|(c, s)| c.clone() + s.clone() * at.clone()).max().expect("non-empty")
            };
            let mut found = None;
            'search: for (cx, sx) in &xs {
                for (cy, sy) in &ys {
                    // x = cx + sx y, y = cy + sy x
                    let x = (cx.clone() + sx.clone() * cy.clone()) / (one.clone() - sx.clone() * sy.clone());
                    let y = cy.clone() + sy.clone() * x.clone();
                    if eval(&xs, &y) == x && eval(&ys, &x) == y {
                        found = Some((x, y));
                        break 'search;
                    }
                }
            }
            let (x, y) = found.expect("some branch pair attains both maxima");
            table.set(a, b, x);
            table.set(b, a, y);
        }
    }
    table
}

/// A decision rule for one seat: `(own need, opponent need, turn score)`.
pub trait Strategy: Sync {
    fn action(&self, need: usize, opp_need: usize, tau: usize) -> Option<Action>;
}

impl Strategy for Policy {
    fn action(&self, need: usize, opp_need: usize, tau: usize) -> Option<Action> {
        Policy::action(self, need, opp_need, tau)
    }
}

/// Holds once the turn score reaches `threshold` or the target.
#[derive(Clone, Copy, Debug)]
pub struct HoldAt(pub usize);

impl Strategy for HoldAt {
    fn action(&self, need: usize, _opp_need: usize, tau: usize) -> Option<Action> {
        Some(if tau == 0 {
            Action::Roll
        } else if tau >= need || tau >= self.0 {
            Action::Hold
        } else {
            Action::Roll
        })
    }
}

pub const GENERATOR: &str = "ChaCha8";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub games: u64,
    pub wins1: u64,
    pub frequency: f64,
    pub expected_value: f64,
    pub sigma: f64,
    pub seed: u64,
    pub workers: usize,
    pub generator: String,
}

impl SimulationReport {
    /// Distance of the observed frequency from the expectation, in sigmas.
    pub fn z_score(&self) -> f64 {
        (self.frequency - self.expected_value) / self.sigma
    }
}

fn play_one<R: rand::Rng>(
    target: usize,
    die: &WeightedIndex<f64>,
    seats: [&dyn Strategy; 2],
    rng: &mut R,
) -> Result<bool, OracleError> {
    let mut need = [target, target];
    let mut mover = 0usize;
    let mut tau = 0usize;
    loop {
        let face = die.sample(rng);
        if face == 0 {
            tau = 0;
            mover = 1 - mover;
            continue;
        }
        tau += face;
        if tau >= need[mover] {
            return Ok(mover == 0);
        }
        let (own, opp) = (need[mover], need[1 - mover]);
        let act = seats[mover].action(own, opp, tau).ok_or(OracleError::UndefinedPolicyState {
            need: own,
            opp_need: opp,
            tau,
        })?;
        if act == Action::Hold {
            need[mover] -= tau;
            tau = 0;
            mover = 1 - mover;
        }
    }
}

/// Plays `games` matches from `(N, N, 0, 1)` with `player1` moving first.
///
/// Games are split across `workers` threads; worker `k` draws from the
/// ChaCha stream `k` of `seed`, so results depend only on
/// `(seed, workers)`.
pub fn simulate_match<F: Scalar>(
    spec: &GameSpec<F>,
    player1: &dyn Strategy,
    player2: &dyn Strategy,
    games: u64,
    seed: u64,
    workers: usize,
) -> Result<(u64, u64), OracleError> {
    if games == 0 || workers == 0 {
        return Err(OracleError::EmptySimulation);
    }
    let weights: Vec<f64> = spec.probs().iter().map(Scalar::to_f64).collect();
    let die = WeightedIndex::new(&weights).expect("valid probabilities");
    let target = spec.target();
    let share = |k: usize| games / workers as u64 + u64::from((k as u64) < games % workers as u64);
    let results: Vec<Result<u64, OracleError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|k| {
                let die = &die;
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(k as u64);
                    let mut wins = 0;
                    for _ in 0..share(k) {
                        if play_one(target, die, [player1, player2], &mut rng)? {
                            wins += 1;
                        }
                    }
                    Ok(wins)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let wins = results.into_iter().sum::<Result<u64, _>>()?;
    Ok((wins, games))
}

/// Simulates and packages the outcome against `expected_value`.
pub fn simulation_report<F: Scalar>(
    spec: &GameSpec<F>,
    player1: &dyn Strategy,
    player2: &dyn Strategy,
    games: u64,
    seed: u64,
    workers: usize,
    expected_value: f64,
) -> Result<SimulationReport, OracleError> {
    let (wins1, games) = simulate_match(spec, player1, player2, games, seed, workers)?;
    let frequency = wins1 as f64 / games as f64;
    let sigma = (expected_value * (1.0 - expected_value) / games as f64).sqrt();
    Ok(SimulationReport {
        games,
        wins1,
        frequency,
        expected_value,
        sigma,
        seed,
        workers,
        generator: GENERATOR.to_string(),
    })
}
