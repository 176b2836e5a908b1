use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use gpg_core::bench;
use gpg_core::oracle::{self, IterationConfig};
use gpg_core::solver::{self, render_value, SolverError};
use gpg_core::{BigRational, GameSpec, NumMode, RawSpec, Scalar, SolveOptions, State};

use crate::{Command, Preset, SpecArgs};

const PIG_DEFAULT_TARGET: usize = 100;
const PIGLET_DEFAULT_TARGET: usize = 10;
const ORACLE_MAX_TARGET: usize = 25;

#[derive(Clone, Copy, Debug)]
pub enum Kind {
    Input,
    Solver,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::Solver => 1,
            Kind::Input => 2,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub source: anyhow::Error,
}

type Outcome = Result<(), Failure>;

fn input(e: impl Into<anyhow::Error>) -> Failure {
    Failure { kind: Kind::Input, source: e.into() }
}

fn solver_err(e: SolverError) -> Failure {
    let kind =
        if matches!(e, SolverError::OutOfRange(_) | SolverError::NeedsRisk) { Kind::Input } else { Kind::Solver };
    Failure { kind, source: e.into() }
}

fn load(args: &SpecArgs) -> Result<RawSpec, Failure> {
    let mut raw = match (&args.spec, args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read spec {}", path.display()))
                .map_err(input)?;
            RawSpec::from_json(&text).with_context(|| format!("in {}", path.display())).map_err(input)?
        }
        (None, Some(Preset::Pig)) => GameSpec::<BigRational>::pig(PIG_DEFAULT_TARGET).to_raw(),
        (None, Some(Preset::Piglet)) => GameSpec::<BigRational>::piglet(PIGLET_DEFAULT_TARGET).to_raw(),
        (None, None) => return Err(input(anyhow!("give a spec file or --preset"))),
    };
    if let Some(target) = args.target {
        raw.target = target;
    }
    raw.instantiate::<BigRational>().map_err(input)?;
    Ok(raw)
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display())).map_err(input)
}

pub fn dispatch(cmd: Command) -> Outcome {
    let args = match &cmd {
        Command::Solve { spec, .. }
        | Command::Value { spec, .. }
        | Command::Policy { spec, .. }
        | Command::Curve { spec, .. }
        | Command::Bench { spec, .. }
        | Command::Oracle { spec, .. }
        | Command::Simulate { spec, .. }
        | Command::Solitaire { spec } => spec.clone(),
    };
    let raw = load(&args)?;
    match args.mode {
        NumMode::Rational => run::<BigRational>(cmd, &raw, &args),
        NumMode::Float => run::<f64>(cmd, &raw, &args),
    }
}

fn run<F: Scalar>(cmd: Command, raw: &RawSpec, args: &SpecArgs) -> Outcome {
    let spec: GameSpec<F> = raw.instantiate().map_err(input)?;
    let opts = SolveOptions { method: args.method, check_invariants: false };
    match cmd {
        Command::Solve { out, policy, check, .. } => {
            let opts = SolveOptions { check_invariants: check, ..opts };
            let sol = solver::solve_with(&spec, opts).map_err(solver_err)?;
            let n = spec.target();
            println!("{}", render_value(sol.table.value(n, n).map_err(solver_err)?));
            if let Some(path) = out {
                write(&path, &sol.table.to_csv())?;
            }
            if let Some(path) = policy {
                write(&path, &sol.policy.to_csv())?;
            }
        }
        Command::Value { a, b, tau, .. } => {
            let sub = sub_game(&spec, a, b)?;
            let sol = solver::solve_with(&sub, opts).map_err(solver_err)?;
            let v = solver::value_at(&sub, &sol.table, State::one(a, b, tau)).map_err(solver_err)?;
            println!("{}", render_value(&v));
        }
        Command::Policy { a, b, tau, .. } => {
            let sub = sub_game(&spec, a, b)?;
            let sol = solver::solve_with(&sub, opts).map_err(solver_err)?;
            if tau == 0 && a > 0 {
                println!("roll");
            } else {
                let act = sol
                    .policy
                    .action(a, b, tau)
                    .ok_or_else(|| solver_err(SolverError::OutOfRange(format!("no decision at ({a},{b},{tau})"))))?;
                println!("{act}");
            }
        }
        Command::Curve { a, b, out, .. } => {
            let sub = sub_game(&spec, a, b)?;
            let sol = solver::solve_with(&sub, opts).map_err(solver_err)?;
            let curves = solver::pair_functions(&sub, &sol.table, a, b).map_err(solver_err)?;
            let x = sol.table.value(a, b).map_err(solver_err)?;
            let y = sol.table.value(b, a).map_err(solver_err)?;
            let point = format!("x,y\n{},{}\n", x.render(), y.render());
            match out {
                Some(dir) => {
                    fs::create_dir_all(&dir)
                        .with_context(|| format!("cannot create {}", dir.display()))
                        .map_err(input)?;
                    write(&dir.join("f_ab.csv"), &curves.f_ab().to_csv())?;
                    write(&dir.join("f_ba.csv"), &curves.f_ba().to_csv())?;
                    write(&dir.join("intersection.csv"), &point)?;
                }
                None => {
                    println!("# f_ab: x = f_ab(y)\n{}", curves.f_ab().to_csv());
                    println!("# f_ba: y = f_ba(x)\n{}", curves.f_ba().to_csv());
                    print!("# intersection\n{point}");
                }
            }
            println!("intersection: ({}, {})", render_value(x), render_value(y));
        }
        Command::Bench { targets, out, .. } => {
            if F::EXACT {
                eprintln!("note: bench always runs in float mode");
            }
            if targets.is_empty() || targets.contains(&0) {
                return Err(input(anyhow!("targets must be positive")));
            }
            let float: GameSpec<f64> = raw.instantiate().map_err(input)?;
            let report = bench::run(&float, &targets, opts).map_err(solver_err)?;
            println!("{:>6} {:>12} {:>14} {:>10} {:>12}", "N", "ops", "ops/N^3lnN", "ms", "v(N,N)");
            for r in &report.rows {
                println!("{:>6} {:>12} {:>14.4} {:>10.1} {:>12.8}", r.target, r.ops, r.ratio, r.elapsed_ms, r.value);
            }
            for g in &report.growth {
                println!(
                    "growth {}->{}: {:.3} (allowed {:.3}) {}",
                    g.from,
                    g.to,
                    g.observed,
                    g.allowed,
                    if g.pass { "PASS" } else { "FAIL" }
                );
            }
            match (report.spread, report.pass) {
                (Some(s), Some(p)) => println!("ratio spread {s:.3}: {}", if p { "PASS" } else { "FAIL" }),
                _ => println!("single target: no scaling verdict"),
            }
            if let Some(path) = out {
                let json = serde_json::to_string_pretty(&report).map_err(input)?;
                write(&path, &(json + "\n"))?;
            }
        }
        Command::Oracle { max_target, tolerance, .. } => {
            if max_target == 0 || max_target > ORACLE_MAX_TARGET {
                return Err(input(anyhow!("--max-target must be in 1..={ORACLE_MAX_TARGET}")));
            }
            let spec = spec.with_target(max_target).map_err(input)?;
            let float: GameSpec<f64> =
                raw.instantiate::<f64>().and_then(|s| s.with_target(max_target)).map_err(input)?;
            let sol = solver::solve_with(&spec, opts).map_err(solver_err)?;
            let cfg = IterationConfig { tolerance, ..IterationConfig::default() };
            let iterated =
                oracle::value_iteration(&float, cfg).map_err(|e| Failure { kind: Kind::Solver, source: e.into() })?;
            let mut worst = 0.0f64;
            for a in 1..=max_target {
                for b in 1..=max_target {
                    let s = sol.table.value(a, b).map_err(solver_err)?.to_f64();
                    let o = *iterated.value(a, b).map_err(solver_err)?;
                    worst = worst.max((s - o).abs());
                }
            }
            println!("value iteration: max |difference| = {worst:.3e}");
            if F::EXACT && spec.is_piglet() {
                let exact = oracle::piglet_closed_form(max_target);
                let solved = solver::solve_with(
                    &raw.instantiate::<BigRational>().and_then(|s| s.with_target(max_target)).map_err(input)?,
                    opts,
                )
                .map_err(solver_err)?;
                let mismatches = (1..=max_target)
                    .flat_map(|a| (1..=max_target).map(move |b| (a, b)))
                    .filter(|&(a, b)| exact.get(a, b) != solved.table.get(a, b))
                    .count();
                println!("closed form: {mismatches} mismatching entries");
            }
        }
        Command::Simulate { games, seed, workers, .. } => {
            let sol = solver::solve_with(&spec, opts).map_err(solver_err)?;
            let n = spec.target();
            let expected = sol.table.value(n, n).map_err(solver_err)?.to_f64();
            let report = oracle::simulation_report(&spec, &sol.policy, &sol.policy, games, seed, workers, expected)
                .map_err(input)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(input)?);
        }
        Command::Solitaire { .. } => {
            let s = solver::solve_solitaire(&spec).map_err(solver_err)?;
            println!("threshold: {}", s.threshold);
            println!("expected score: {}", render_value(&s.expected));
        }
    }
    Ok(())
}

/// The spec retargeted to the smallest game containing `(a, b)`.
fn sub_game<F: Scalar>(spec: &GameSpec<F>, a: usize, b: usize) -> Result<GameSpec<F>, Failure> {
    let n = spec.target();
    if a == 0 || b == 0 || a > n || b > n {
        return Err(input(anyhow!("(a, b) = ({a}, {b}) is outside 1..={n}")));
    }
    spec.with_target(a.max(b)).map_err(input)
}
