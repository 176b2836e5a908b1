//! Acceptance checks. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line. Pass `--include-ignored` (or set
//! `GPG_ACCEPTANCE_SLOW=1`) to add the large-target rows.

use std::process::ExitCode;
use std::time::Instant;

use gpg_core::bench;
use gpg_core::oracle::{piglet_closed_form, simulation_report, value_iteration, IterationConfig};
use gpg_core::solver::{hitting_prob, solve_solitaire, solve_traced};
use gpg_core::{solve, BigRational, GameSpec, PairMethod, Scalar, SolveOptions};
use gpg_validation::{FAST_TARGET_LIMIT, PIG_REFERENCE, PIG_SOLITAIRE};
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = BigRational;

const TABLE_TOLERANCE: f64 = 1e-7;

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

type Check = Box<dyn Fn() -> Verdict>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn published_targets(slow: bool) -> Vec<(usize, f64)> {
    PIG_REFERENCE.iter().copied().filter(|(n, _)| slow || *n <= FAST_TARGET_LIMIT).collect()
}

fn pig_values(slow: bool) -> Vec<(usize, f64, f64)> {
    published_targets(slow)
        .into_iter()
        .map(|(n, published)| {
            let sol = solve(&GameSpec::<f64>::pig(n)).expect("pig solves");
            (n, published, *sol.table.get(n, n).unwrap())
        })
        .collect()
}

fn table_one(slow: bool) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (n, published, got) in pig_values(slow) {
        let err = (got - published).abs();
        worst = worst.max(err);
        parts.push(format!("N={n}: {got:.10} vs {published:.8} (|d|={err:.1e})"));
    }
    verdict(worst <= TABLE_TOLERANCE, format!("tol {TABLE_TOLERANCE:e}; {}", parts.join("; ")))
}

fn table_two() -> Verdict {
    let t = solve(&GameSpec::<Q>::piglet(3)).unwrap().table;
    // a indexes columns, b rows
    let expect = [
        (1, 1, q(2, 3)),
        (1, 2, q(4, 5)),
        (1, 3, q(8, 9)),
        (2, 1, q(2, 5)),
        (2, 2, q(4, 7)),
        (2, 3, q(8, 11)),
        (3, 1, q(2, 9)),
        (3, 2, q(4, 11)),
        (3, 3, q(6, 11)),
    ];
    let wrong: Vec<String> = expect
        .iter()
        .filter(|(a, b, v)| t.get(*a, *b) != Some(v))
        .map(|(a, b, v)| format!("v({a},{b}) = {} != {v}", t.get(*a, *b).map(|x| x.to_string()).unwrap_or_default()))
        .collect();
    verdict(wrong.is_empty(), if wrong.is_empty() { "all nine entries exact".into() } else { wrong.join(", ") })
}

fn solitaire() -> Verdict {
    let pig = solve_solitaire(&GameSpec::<f64>::pig(100)).unwrap();
    let piglet = solve_solitaire(&GameSpec::<Q>::piglet(10)).unwrap();
    let pass = pig.threshold == PIG_SOLITAIRE.0
        && (pig.expected - PIG_SOLITAIRE.1).abs() <= 5e-5
        && piglet.threshold == 1
        && piglet.expected == q(1, 2);
    verdict(
        pass,
        format!(
            "pig: hold at {} with {:.6}; piglet: hold at {} with {}",
            pig.threshold, pig.expected, piglet.threshold, piglet.expected
        ),
    )
}

fn random_die(rng: &mut ChaCha8Rng) -> Vec<Q> {
    let d: i64 = rng.gen_range(2..=6);
    let faces: usize = rng.gen_range(1..=3);
    let zero = rng.gen_range(1..d);
    let mut counts = vec![0i64; faces];
    for _ in 0..d - zero {
        counts[rng.gen_range(0..faces)] += 1;
    }
    std::iter::once(zero).chain(counts).map(|c| q(c, d)).collect()
}

fn oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let probs = random_die(&mut rng);
        let n = rng.gen_range(1..=12);
        let exact = solve(&GameSpec::new(probs.clone(), n).unwrap()).unwrap().table;
        let floats: Vec<f64> = probs.iter().map(Scalar::to_f64).collect();
        let iterated = match value_iteration(&GameSpec::new(floats, n).unwrap(), IterationConfig::default()) {
            Ok(t) => t,
            Err(e) => return verdict(false, format!("value iteration failed: {e}")),
        };
        for a in 1..=n {
            for b in 1..=n {
                worst = worst.max((exact.get(a, b).unwrap().to_f64() - iterated.get(a, b).unwrap()).abs());
            }
        }
    }
    let closed_ok = (1..=10).all(|n| piglet_closed_form(n) == solve(&GameSpec::<Q>::piglet(n)).unwrap().table);
    verdict(
        worst <= 1e-9 && closed_ok,
        format!("50 specs, max |d| = {worst:.2e}; piglet closed form exact for N<=10: {closed_ok}"),
    )
}

fn curve_properties() -> Verdict {
    let spec = GameSpec::<Q>::pig(25);
    let mut problems: Vec<String> = Vec::new();
    let mut curves = 0usize;
    let opts = SolveOptions { method: PairMethod::Construct, check_invariants: false };
    let result = solve_traced(&spec, opts, |trace| {
        let f = trace.functions.expect("construct keeps its curves");
        let sides = [
            (trace.a, trace.b, &f.family_ab, &trace.solution.v_ab, &trace.solution.v_ba),
            (trace.b, trace.a, &f.family_ba, &trace.solution.v_ba, &trace.solution.v_ab),
        ];
        for (own, opp, family, x, y) in sides {
            for (k, g) in family.iter().enumerate() {
                curves += 1;
                let slopes = g.slopes();
                let label = format!("f({own},{opp},{})", k + 1);
                if !slopes.windows(2).all(|w| w[0] < w[1]) {
                    problems.push(format!("{label} not convex"));
                }
                if slopes.iter().any(|s| *s > Q::zero()) {
                    problems.push(format!("{label} increases"));
                }
                if !g.at_zero().is_one() || *g.at_one() <= Q::zero() {
                    problems.push(format!("{label} has bad endpoints"));
                }
                if g.breakpoint_count() > k + 1 {
                    problems.push(format!("{label} has {} breakpoints", g.breakpoint_count()));
                }
            }
            let top = family.last().unwrap();
            if top.leftmost_slope() != -hitting_prob(&spec, own) {
                problems.push(format!("f({own},{opp}) left slope differs from the hitting probability"));
            }
            if top.evaluate(y).ok().as_ref() != Some(x) {
                problems.push(format!("f({own},{opp}) residual is not zero"));
            }
        }
    });
    if let Err(e) = result {
        return verdict(false, format!("solve failed: {e}"));
    }
    problems.truncate(5);
    verdict(
        problems.is_empty(),
        format!(
            "{curves} curves checked; {}",
            if problems.is_empty() { "no violations".into() } else { problems.join("; ") }
        ),
    )
}

fn monte_carlo() -> Verdict {
    let spec = GameSpec::<f64>::pig(10);
    let sol = solve(&spec).unwrap();
    let published = PIG_REFERENCE[0].1;
    let report = simulation_report(&spec, &sol.policy, &sol.policy, 1_000_000, 42, 4, published).unwrap();
    let z = report.z_score();
    verdict(
        z.abs() <= 3.0,
        format!(
            "{} of {} won ({:.6}), sigma {:.2e}, z = {z:.2}",
            report.wins1, report.games, report.frequency, report.sigma
        ),
    )
}

fn scaling() -> Verdict {
    let report = bench::run(&GameSpec::<f64>::pig(25), &[25, 50, 100, 200], SolveOptions::default()).unwrap();
    let ratios: Vec<String> = report.rows.iter().map(|r| format!("N={}: {:.3}", r.target, r.ratio)).collect();
    let spread = report.spread.unwrap();
    verdict(spread <= bench::RATIO_SPREAD, format!("ops/(N^3 ln N) {}; spread {spread:.3}", ratios.join(", ")))
}

fn independence_and_advantage(slow: bool) -> Verdict {
    let mut shared_ok = true;
    for spec in [GameSpec::<Q>::pig(6), GameSpec::<Q>::piglet(6)] {
        let small = solve(&spec).unwrap().table;
        let large = solve(&spec.with_target(12).unwrap()).unwrap().table;
        shared_ok &= (1..=6).all(|a| (1..=6).all(|b| small.get(a, b) == large.get(a, b)));
    }
    let values = pig_values(slow);
    let above_half = values.iter().all(|(_, _, v)| *v > 0.5);
    let decreasing = values.windows(2).all(|w| w[1].2 < w[0].2);
    verdict(
        shared_ok && above_half && decreasing,
        format!("shared entries equal: {shared_ok}; v(N,N) > 1/2: {above_half}; strictly decreasing: {decreasing}"),
    )
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    // libtest-style listing probes must not run the suite
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let slow = args.iter().any(|a| a == "--include-ignored" || a == "--ignored")
        || std::env::var("GPG_ACCEPTANCE_SLOW").is_ok_and(|v| v == "1");
    let criteria: Vec<(&str, Check)> = vec![
        ("table-1 pig values", Box::new(move || table_one(slow))),
        ("table-2 piglet exact", Box::new(table_two)),
        ("solitaire thresholds", Box::new(solitaire)),
        ("oracle equivalence", Box::new(oracle_equivalence)),
        ("curve properties pig N=25", Box::new(curve_properties)),
        ("monte carlo pig N=10", Box::new(monte_carlo)),
        ("operation-count scaling", Box::new(scaling)),
        ("target independence and first mover", Box::new(move || independence_and_advantage(slow))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("{tag} {} {name} [{:.1}s]: {}", k + 1, started.elapsed().as_secs_f64(), v.detail);
        failed += usize::from(!v.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed{}",
        criteria.len() - failed,
        if slow { " (slow rows included)" } else { "" }
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
