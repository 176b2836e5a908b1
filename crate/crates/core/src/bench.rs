//! Scaling harness: solves a spec at several targets and checks that the
//! step count grows like `N^3 log N`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::game::GameSpec;
use crate::numeric::Scalar;
use crate::solver::{solve_with, SolveOptions, SolverError};

/// Largest allowed spread `max / min` of the normalized step ratio.
pub const RATIO_SPREAD: f64 = 2.0;
/// Headroom over the ideal growth factor between consecutive targets.
pub const GROWTH_SLACK: f64 = 0.25;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub target: usize,
    pub states: u128,
    pub elapsed_ms: f64,
    pub ops: u64,
    /// `ops / (N^3 ln N)`
    pub ratio: f64,
    /// `ops / (s ln s)` with `s` the state count
    pub state_ratio: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub from: usize,
    pub to: usize,
    pub observed: f64,
    pub allowed: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub method: String,
    pub rows: Vec<BenchRow>,
    pub growth: Vec<GrowthCheck>,
    /// `max / min` of `ratio`; absent for a single target.
    pub spread: Option<f64>,
    /// Absent for a single target.
    pub pass: Option<bool>,
}

fn n3_log_n(n: usize) -> f64 {
    let n = n as f64;
    // ln 1 = 0 would make the ratio meaningless
    n.powi(3) * n.ln().max(1.0)
}

/// Solves `spec` retargeted to each entry of `targets`.
pub fn run<F: Scalar>(spec: &GameSpec<F>, targets: &[usize], opts: SolveOptions) -> Result<BenchReport, SolverError> {
    let mut rows = Vec::with_capacity(targets.len());
    for &target in targets {
        let spec = spec.with_target(target).map_err(|e| SolverError::OutOfRange(e.to_string()))?;
        let started = Instant::now();
        let sol = solve_with(&spec, opts)?;
        let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
        let states = spec.state_count();
        let s = states as f64;
        rows.push(BenchRow {
            target,
            states,
            elapsed_ms,
            ops: sol.steps,
            ratio: sol.steps as f64 / n3_log_n(target),
            state_ratio: sol.steps as f64 / (s * s.ln()),
            value: sol.table.get(target, target).map(Scalar::to_f64).unwrap_or(f64::NAN),
        });
    }
    Ok(assess(format!("{:?}", opts.method).to_lowercase(), rows))
}

/// Attaches growth checks and the overall verdict to measured rows.
pub fn assess(method: String, rows: Vec<BenchRow>) -> BenchReport {
    let mut sorted: Vec<&BenchRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.target);
    sorted.dedup_by_key(|r| r.target);
    let growth: Vec<GrowthCheck> = sorted
        .windows(2)
        .map(|w| {
            let observed = w[1].ops as f64 / w[0].ops.max(1) as f64;
            let allowed = n3_log_n(w[1].target) / n3_log_n(w[0].target) * (1.0 + GROWTH_SLACK);
            GrowthCheck { from: w[0].target, to: w[1].target, observed, allowed, pass: observed <= allowed }
        })
        .collect();
    let (spread, pass) = if sorted.len() < 2 {
        (None, None)
    } else {
        let max = sorted.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
        let min = sorted.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
        let spread = max / min;
        (Some(spread), Some(spread <= RATIO_SPREAD && growth.iter().all(|g| g.pass)))
    };
    BenchReport { method, rows, growth, spread, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(target: usize, ops: u64) -> BenchRow {
        BenchRow {
            target,
            states: 0,
            elapsed_ms: 0.0,
            ops,
            ratio: ops as f64 / n3_log_n(target),
            state_ratio: 0.0,
            value: 0.5,
        }
    }

    #[test]
    fn single_target_has_no_verdict() {
        let r = assess("cells".into(), vec![row(10, 1000)]);
        assert_eq!(r.pass, None);
        assert_eq!(r.spread, None);
        assert!(r.growth.is_empty());
    }

    #[test]
    fn cubic_log_growth_passes_and_quartic_fails() {
        let ok: Vec<_> = [10usize, 20, 40].iter().map(|&n| row(n, (3.0 * n3_log_n(n)) as u64)).collect();
        assert_eq!(assess("x".into(), ok).pass, Some(true));
        let bad: Vec<_> = [10usize, 20, 40].iter().map(|&n| row(n, (n as u64).pow(4))).collect();
        let r = assess("x".into(), bad);
        assert_eq!(r.pass, Some(false));
        assert!(r.growth.iter().all(|g| !g.pass));
    }

    #[test]
    fn step_counts_are_deterministic() {
        let spec = GameSpec::<f64>::pig(10);
        let a = run(&spec, &[10], SolveOptions::default()).unwrap();
        let b = run(&spec, &[10], SolveOptions::default()).unwrap();
        assert_eq!(a.rows[0].ops, b.rows[0].ops);
        assert!(a.rows[0].ops > 0);
    }
}
