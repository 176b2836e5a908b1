//! Backward induction over sub-games.
//!
//! Sub-games are visited in the order `b = 1..=N`, `a = 1..=b`. At `(a, b)`
//! every value `v(a, b, tau)` is a function of the single unknown
//! `y = v(b, a)` (and symmetrically for `(b, a)`), so the pair reduces to
//! the two-unknown system `x = f_ab(y)`, `y = f_ba(x)`. Two exact ways of
//! solving that system are provided, see [`PairMethod`].

use std::fmt::Write as _;

use crate::game::{Action, GameSpec, Player, State};
use crate::numeric::Scalar;
use crate::ops;
use crate::plinear::{solve_system, PlError, PlFunction, ShapeViolation};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error(transparent)]
    Pl(#[from] PlError),
    #[error("sub-game ({a},{b}) needs v({na},{nb}), which is not known yet")]
    MissingPrefix { a: usize, b: usize, na: usize, nb: usize },
    #[error("{0} is outside the solved range")]
    OutOfRange(String),
    #[error("shape invariant {violation:?} violated by f_({own},{opp},{index})")]
    Shape { own: usize, opp: usize, index: usize, violation: ShapeViolation },
    #[error("leftmost slope of f_({own},{opp}) is {found}, expected -{expected}")]
    LeftSlope { own: usize, opp: usize, found: f64, expected: f64 },
    #[error("system residual for ({a},{b}) is not zero")]
    Residual { a: usize, b: usize },
    #[error("this operation needs 0 < p0 < 1")]
    NeedsRisk,
    #[error("solitaire values did not stabilize below turn score {cap}")]
    NoConvergence { cap: usize },
}

/// How a pair `(a, b)` is solved. Both are exact in rational mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PairMethod {
    /// Build every `f_{a,b,i}` as an explicit piecewise-linear function and
    /// intersect the two top-level curves by a segment scan. Breakpoint
    /// counts make this roughly quartic in the target.
    Construct,
    /// Evaluate `f_ab` and `f_ba` pointwise (value, slope and the interval
    /// on which the current hold/roll pattern stays optimal) and refine a
    /// bracketed Newton iterate until the linear pieces at the iterate
    /// contain their own intersection.
    #[default]
    Cells,
}

impl std::str::FromStr for PairMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "construct" => Ok(PairMethod::Construct),
            "cells" => Ok(PairMethod::Cells),
            other => Err(format!("unknown pair method `{other}` (expected `construct` or `cells`)")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SolveOptions {
    pub method: PairMethod,
    /// Verify shape, breakpoint budget, left slope and system residual of
    /// every constructed function (construct method only).
    pub check_invariants: bool,
}

/// Start values `v(a, b)` for `1 <= a, b <= size`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable<F> {
    size: usize,
    values: Vec<Option<F>>,
}

impl<F: Scalar> ValueTable<F> {
    pub fn new(size: usize) -> Self {
        ValueTable { size, values: vec![None; size * size] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn index(&self, a: usize, b: usize) -> Option<usize> {
        (a >= 1 && b >= 1 && a <= self.size && b <= self.size).then(|| (a - 1) * self.size + (b - 1))
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&F> {
        self.index(a, b).and_then(|k| self.values[k].as_ref())
    }

    pub fn value(&self, a: usize, b: usize) -> Result<&F, SolverError> {
        self.get(a, b).ok_or_else(|| SolverError::OutOfRange(format!("v({a},{b})")))
    }

    pub fn set(&mut self, a: usize, b: usize, v: F) {
        let k = self.index(a, b).expect("index inside table");
        self.values[k] = Some(v);
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// CSV `a,b,value`: fractions in rational mode, 8 decimals in float mode.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b,value\n");
        for a in 1..=self.size {
            for b in 1..=self.size {
                if let Some(v) = self.get(a, b) {
                    let _ = writeln!(out, "{a},{b},{}", render_value(v));
                }
            }
        }
        out
    }

    pub fn to_f64(&self) -> ValueTable<f64> {
        ValueTable { size: self.size, values: self.values.iter().map(|v| v.as_ref().map(F::to_f64)).collect() }
    }
}

/// Exact fraction, or the value to 8 decimal places.
pub fn render_value<F: Scalar>(v: &F) -> String {
    if F::EXACT {
        v.render()
    } else {
        format!("{:.8}", v.to_f64())
    }
}

/// Optimal actions for `0 < tau < a` at every solved `(a, b)`, one bit
/// per decision (set means hold).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Policy {
    size: usize,
    offsets: Vec<usize>,
    bits: Vec<u64>,
}

impl Policy {
    pub fn new(size: usize) -> Self {
        let mut offsets = Vec::with_capacity(size * size + 1);
        let mut total = 0;
        for a in 1..=size {
            for _ in 1..=size {
                offsets.push(total);
                total += a - 1;
            }
        }
        offsets.push(total);
        Policy { size, offsets, bits: vec![0; total.div_ceil(64)] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    fn bit(&self, a: usize, b: usize, tau: usize) -> usize {
        self.offsets[(a - 1) * self.size + (b - 1)] + tau - 1
    }

    fn set(&mut self, a: usize, b: usize, tau: usize, action: Action) {
        let k = self.bit(a, b, tau);
        if action == Action::Hold {
            self.bits[k / 64] |= 1 << (k % 64);
        } else {
            self.bits[k / 64] &= !(1 << (k % 64));
        }
    }

    /// Action of the player needing `a` against an opponent needing `b`
    /// at turn score `tau`. Roll is forced at `tau = 0` and hold at
    /// `tau >= a`.
    pub fn action(&self, a: usize, b: usize, tau: usize) -> Option<Action> {
        if a == 0 || b == 0 || a > self.size || b > self.size {
            return None;
        }
        Some(if tau == 0 {
            Action::Roll
        } else if tau >= a {
            Action::Hold
        } else {
            let k = self.bit(a, b, tau);
            if self.bits[k / 64] >> (k % 64) & 1 == 1 {
                Action::Hold
            } else {
                Action::Roll
            }
        })
    }

    /// CSV `a,b,tau,action` over all free decisions `0 < tau < a`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b,tau,action\n");
        for a in 1..=self.size {
            for b in 1..=self.size {
                for tau in 1..a {
                    let act = self.action(a, b, tau).expect("in range");
                    let _ = writeln!(out, "{a},{b},{tau},{act}");
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Solution<F> {
    pub table: ValueTable<F>,
    pub policy: Policy,
    /// Steps charged while solving.
    pub steps: u64,
}

/// Everything known about one pair after it is solved.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSolution<F> {
    pub v_ab: F,
    pub v_ba: F,
    /// `v(a, b, tau)` for `tau = 0..a`.
    pub values_ab: Vec<F>,
    pub values_ba: Vec<F>,
    /// Optimal action at `tau = 1..a`.
    pub actions_ab: Vec<Action>,
    pub actions_ba: Vec<Action>,
}

/// The families `f_{a,b,i}` (`i = 1..=a`) and `f_{b,a,i}` (`i = 1..=b`).
/// The last entry of each family is the top-level curve.
#[derive(Clone, Debug)]
pub struct PairFunctions<F> {
    pub family_ab: Vec<PlFunction<F>>,
    pub family_ba: Vec<PlFunction<F>>,
}

impl<F: Scalar> PairFunctions<F> {
    pub fn f_ab(&self) -> &PlFunction<F> {
        self.family_ab.last().expect("non-empty family")
    }

    pub fn f_ba(&self) -> &PlFunction<F> {
        self.family_ba.last().expect("non-empty family")
    }
}

/// Data handed to a [`solve_traced`] observer after each pair.
pub struct PairTrace<'a, F> {
    pub a: usize,
    pub b: usize,
    pub solution: &'a PairSolution<F>,
    /// Present with [`PairMethod::Construct`].
    pub functions: Option<&'a PairFunctions<F>>,
}

/// One player's side of a pair: the player needs `need` points, and
/// holding at turn score `need - i` is worth `hold[i - 1] = 1 - v(opp, i)`.
struct Side<'s, F> {
    spec: &'s GameSpec<F>,
    need: usize,
    hold: Vec<F>,
}

impl<'s, F: Scalar> Side<'s, F> {
    fn new(spec: &'s GameSpec<F>, table: &ValueTable<F>, own: usize, opp: usize) -> Result<Self, SolverError> {
        let hold = (1..own)
            .map(|i| {
                table.get(opp, i).map(|v| F::one() - v.clone()).ok_or(SolverError::MissingPrefix {
                    a: own,
                    b: opp,
                    na: opp,
                    nb: i,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Side { spec, need: own, hold })
    }

    /// `f_{own,opp,i}` for `i = 1..=need`.
    fn family(&self) -> Result<Vec<PlFunction<F>>, PlError> {
        let one = PlFunction::constant_one();
        let mut family: Vec<PlFunction<F>> = Vec::with_capacity(self.need);
        for i in 1..=self.need {
            let roll = {
                let terms: Vec<(F, &PlFunction<F>)> = self
                    .spec
                    .scoring_faces()
                    .map(|(j, p)| (p.clone(), if i > j { &family[i - j - 1] } else { &one }))
                    .collect();
                PlFunction::affine_combine(&terms, self.spec.p0())?
            };
            let f = if i < self.need { roll.max_with_constant(&self.hold[i - 1]) } else { roll };
            family.push(f);
        }
        Ok(family)
    }

    /// Runs the Bellman recursion at opponent start value `y`.
    ///
    /// With `cell` set, also tracks the slope of each value in `y` and the
    /// interval around `y` on which no hold/roll decision changes.
    fn sweep(&self, y: &F, cell: bool) -> Sweep<F> {
        let p0 = self.spec.p0();
        let mut values: Vec<F> = Vec::with_capacity(self.need);
        let mut slopes: Vec<F> = Vec::with_capacity(if cell { self.need } else { 0 });
        let mut holds = Vec::with_capacity(self.need);
        let (mut lo, mut hi) = (F::zero(), F::one());
        let bust = p0.clone() * (F::one() - y.clone());
        let faces: Vec<(usize, &F)> = self.spec.scoring_faces().collect();
        for i in 1..=self.need {
            let mut roll = bust.clone();
            let mut roll_slope = -p0.clone();
            for (j, p) in &faces {
                if i > *j {
                    roll = roll + (*p).clone() * values[i - j - 1].clone();
                    if cell {
                        roll_slope = roll_slope + (*p).clone() * slopes[i - j - 1].clone();
                    }
                } else {
                    roll = roll + (*p).clone();
                }
            }
            ops::charge(faces.len() + 1);
            if i == self.need {
                values.push(roll);
                slopes.push(roll_slope);
                holds.push(false);
                break;
            }
            let c = &self.hold[i - 1];
            let margin = roll.clone() - c.clone();
            let hold = margin <= F::zero();
            if cell && roll_slope < F::zero() {
                // the roll value crosses c where margin + slope * (z - y) = 0
                let root = y.clone() - margin / roll_slope.clone();
                if hold {
                    if root > lo {
                        lo = root;
                    }
                } else if root < hi {
                    hi = root;
                }
            }
            if hold {
                values.push(c.clone());
                if cell {
                    slopes.push(F::zero());
                }
            } else {
                values.push(roll);
                if cell {
                    slopes.push(roll_slope);
                }
            }
            holds.push(hold);
        }
        Sweep { values, slopes, holds, lo, hi }
    }

    /// `v(own, opp, tau)` for `tau = 0..need` and actions for `tau = 1..need`.
    fn back_substitute(&self, y: &F) -> (Vec<F>, Vec<Action>) {
        let sweep = self.sweep(y, false);
        // sweep index i is tau = need - i
        let values: Vec<F> = sweep.values.into_iter().rev().collect();
        let actions = (1..self.need)
            .map(|tau| if sweep.holds[self.need - tau - 1] { Action::Hold } else { Action::Roll })
            .collect();
        (values, actions)
    }
}

struct Sweep<F> {
    values: Vec<F>,
    slopes: Vec<F>,
    holds: Vec<bool>,
    lo: F,
    hi: F,
}

impl<F: Scalar> Sweep<F> {
    fn top(&self) -> (&F, &F) {
        (self.values.last().expect("need >= 1"), self.slopes.last().expect("need >= 1"))
    }
}

const MAX_CELL_ITERATIONS: usize = 400;

fn solve_by_cells<F: Scalar>(side_ab: &Side<'_, F>, side_ba: &Side<'_, F>, guess: F) -> Result<(F, F), SolverError> {
    let (mut lo, mut hi) = (F::zero(), F::one());
    let mut x = guess;
    let two = F::one() + F::one();
    for _ in 0..MAX_CELL_ITERATIONS {
        let probe_ba = side_ba.sweep(&x, true);
        let (y, slope_ba) = probe_ba.top();
        let probe_ab = side_ab.sweep(y, true);
        let (gx, slope_ab) = probe_ab.top();
        let hx = gx.clone() - x.clone();
        if hx.is_zero() {
            return Ok((x, y.clone()));
        }
        if hx > F::zero() {
            lo = x.clone();
        } else {
            hi = x.clone();
        }
        // intersect the two linear pieces through the probe
        let s = slope_ab.clone() * slope_ba.clone();
        let cand_x = (gx.clone() - s.clone() * x.clone()) / (F::one() - s);
        let cand_y = y.clone() + slope_ba.clone() * (cand_x.clone() - x.clone());
        let in_ba = probe_ba.lo.le_tol(&cand_x) && cand_x.le_tol(&probe_ba.hi);
        let in_ab = probe_ab.lo.le_tol(&cand_y) && cand_y.le_tol(&probe_ab.hi);
        if in_ba && in_ab {
            return Ok((cand_x, cand_y));
        }
        if !F::EXACT && hi.clone() - lo.clone() <= F::from_ratio(1, 1 << 50) {
            return Ok((cand_x, cand_y));
        }
        x = if cand_x > lo && cand_x < hi { cand_x } else { (lo.clone() + hi.clone()) / two.clone() };
    }
    Err(PlError::NoCrossing.into())
}

/// Hitting probabilities `P(Theta_0 < Theta_z)` for `z = 1..=a`: the
/// chance that a player who never holds busts before collecting `z`.
pub fn hitting_probs<F: Scalar>(spec: &GameSpec<F>, a: usize) -> Vec<F> {
    let mut q: Vec<F> = Vec::with_capacity(a);
    for z in 1..=a {
        let mut value = spec.p0().clone();
        for (i, p) in spec.scoring_faces() {
            if z > i {
                value = value + p.clone() * q[z - i - 1].clone();
            }
        }
        q.push(value);
    }
    q
}

pub fn hitting_prob<F: Scalar>(spec: &GameSpec<F>, a: usize) -> F {
    if a == 0 {
        return F::zero();
    }
    hitting_probs(spec, a).pop().expect("a >= 1")
}

/// Explicit curves `f_{a,b,i}` and `f_{b,a,i}` from the values in `known`.
pub fn pair_functions<F: Scalar>(
    spec: &GameSpec<F>,
    known: &ValueTable<F>,
    a: usize,
    b: usize,
) -> Result<PairFunctions<F>, SolverError> {
    let family_ab = Side::new(spec, known, a, b)?.family()?;
    let family_ba = if a == b { family_ab.clone() } else { Side::new(spec, known, b, a)?.family()? };
    Ok(PairFunctions { family_ab, family_ba })
}

fn check_family<F: Scalar>(
    spec: &GameSpec<F>,
    own: usize,
    opp: usize,
    family: &[PlFunction<F>],
) -> Result<(), SolverError> {
    for (k, f) in family.iter().enumerate() {
        let index = k + 1;
        let top = index == own;
        f.check_shape(Some(index), top).map_err(|violation| SolverError::Shape { own, opp, index, violation })?;
    }
    let top = family.last().expect("non-empty");
    let expected = hitting_prob(spec, own);
    let found = top.leftmost_slope();
    if !(found.clone() + expected.clone()).coincides(&F::zero()) {
        return Err(SolverError::LeftSlope { own, opp, found: found.to_f64(), expected: expected.to_f64() });
    }
    Ok(())
}

/// Solves sub-game `(a, b)` given `v(b, 1..a)` and `v(a, 1..b)` in `known`.
pub fn solve_pair<F: Scalar>(
    spec: &GameSpec<F>,
    a: usize,
    b: usize,
    known: &ValueTable<F>,
    method: PairMethod,
) -> Result<PairSolution<F>, SolverError> {
    solve_pair_inner(spec, a, b, known, SolveOptions { method, check_invariants: false }).map(|(s, _)| s)
}

fn solve_pair_inner<F: Scalar>(
    spec: &GameSpec<F>,
    a: usize,
    b: usize,
    known: &ValueTable<F>,
    opts: SolveOptions,
) -> Result<(PairSolution<F>, Option<PairFunctions<F>>), SolverError> {
    let side_ab = Side::new(spec, known, a, b)?;
    let side_ba = Side::new(spec, known, b, a)?;
    let (x, y, functions) = match opts.method {
        PairMethod::Construct => {
            let family_ab = side_ab.family()?;
            let family_ba = if a == b { family_ab.clone() } else { side_ba.family()? };
            let f_ab = family_ab.last().expect("a >= 1");
            let f_ba = family_ba.last().expect("b >= 1");
            let (x, y) = solve_system(f_ab, f_ba)?;
            if opts.check_invariants {
                check_family(spec, a, b, &family_ab)?;
                check_family(spec, b, a, &family_ba)?;
                let rx = f_ab.evaluate(&y)?;
                let ry = f_ba.evaluate(&x)?;
                if !rx.coincides(&x) || !ry.coincides(&y) {
                    return Err(SolverError::Residual { a, b });
                }
            }
            (x, y, Some(PairFunctions { family_ab, family_ba }))
        }
        PairMethod::Cells => {
            // v(a, b - 1) is already known and usually close
            let guess = (b > 1).then(|| known.get(a, b - 1).cloned()).flatten().unwrap_or_else(|| F::from_ratio(1, 2));
            let (x, y) = solve_by_cells(&side_ab, &side_ba, guess)?;
            (x, y, None)
        }
    };
    let (x, y) = if a == b { (x.clone(), x) } else { (x, y) };
    let (values_ab, actions_ab) = side_ab.back_substitute(&y);
    let (values_ba, actions_ba) = side_ba.back_substitute(&x);
    Ok((PairSolution { v_ab: x, v_ba: y, values_ab, values_ba, actions_ab, actions_ba }, functions))
}

pub fn solve<F: Scalar>(spec: &GameSpec<F>) -> Result<Solution<F>, SolverError> {
    solve_with(spec, SolveOptions::default())
}

pub fn solve_with<F: Scalar>(spec: &GameSpec<F>, opts: SolveOptions) -> Result<Solution<F>, SolverError> {
    solve_traced(spec, opts, |_| {})
}

/// [`solve_with`], calling `observe` after every pair.
pub fn solve_traced<F: Scalar>(
    spec: &GameSpec<F>,
    opts: SolveOptions,
    mut observe: impl FnMut(PairTrace<'_, F>),
) -> Result<Solution<F>, SolverError> {
    let n = spec.target();
    let mut table = ValueTable::new(n);
    let mut policy = Policy::new(n);
    let start = ops::steps();
    if spec.is_riskless() {
        // the roller never busts, so rolling on always wins
        for a in 1..=n {
            for b in 1..=n {
                table.set(a, b, F::one());
            }
        }
        return Ok(Solution { table, policy, steps: 0 });
    }
    for b in 1..=n {
        for a in 1..=b {
            let (pair, functions) = solve_pair_inner(spec, a, b, &table, opts)?;
            table.set(a, b, pair.v_ab.clone());
            table.set(b, a, pair.v_ba.clone());
            for (k, act) in pair.actions_ab.iter().enumerate() {
                policy.set(a, b, k + 1, *act);
            }
            for (k, act) in pair.actions_ba.iter().enumerate() {
                policy.set(b, a, k + 1, *act);
            }
            observe(PairTrace { a, b, solution: &pair, functions: functions.as_ref() });
        }
    }
    Ok(Solution { table, policy, steps: ops::steps() - start })
}

/// `v(a, b, tau, j)` recovered from the start values.
pub fn value_at<F: Scalar>(spec: &GameSpec<F>, table: &ValueTable<F>, s: State) -> Result<F, SolverError> {
    let (a, b, tau, mover) = match s {
        State::Turn { a, b, tau, mover } => (a, b, tau, mover),
        State::GameOver => return Err(SolverError::OutOfRange(s.to_string())),
    };
    let need = if mover == Player::One { a } else { b };
    if a == 0 || b == 0 || a > table.size() || b > table.size() || tau + 1 > need + spec.max_face() {
        return Err(SolverError::OutOfRange(s.to_string()));
    }
    if mover == Player::Two {
        return Ok(F::one() - value_at(spec, table, State::one(b, a, tau))?);
    }
    if tau >= a {
        return Ok(F::one());
    }
    let y = table.value(b, a)?;
    let side = Side::new(spec, table, a, b)?;
    let (values, _) = side.back_substitute(y);
    Ok(values[tau].clone())
}

/// Single-turn expected-score maximization.
#[derive(Clone, Debug, PartialEq)]
pub struct Solitaire<F> {
    /// Smallest turn score from which holding is optimal throughout.
    pub threshold: usize,
    /// Optimal action at `tau = 1..cap`; holding is optimal beyond.
    pub actions: Vec<Action>,
    /// Maximal expected turn score, starting with the forced first roll.
    pub expected: F,
    pub cap: usize,
}

const MAX_CAP_DOUBLINGS: usize = 24;

fn solitaire_pass<F: Scalar>(spec: &GameSpec<F>, cap: usize) -> (F, Vec<Action>) {
    let n = spec.max_face();
    // h[tau] = best expected banked score from turn score tau
    let mut h: Vec<F> = (0..cap + n + 1).map(F::from_usize).collect();
    let mut actions = vec![Action::Hold; cap.saturating_sub(1)];
    for tau in (1..cap).rev() {
        let roll = spec.scoring_faces().fold(F::zero(), |acc, (i, p)| acc + p.clone() * h[tau + i].clone());
        if roll > h[tau] {
            h[tau] = roll;
            actions[tau - 1] = Action::Roll;
        }
    }
    let expected = spec.scoring_faces().fold(F::zero(), |acc, (i, p)| acc + p.clone() * h[i].clone());
    (expected, actions)
}

/// Solves `h(tau) = max{tau, sum_i p_i h(tau + i)}` (a zero face banks
/// nothing) by backward recursion below a cap, doubling the cap until the
/// value at the start of the turn is stable.
pub fn solve_solitaire<F: Scalar>(spec: &GameSpec<F>) -> Result<Solitaire<F>, SolverError> {
    if spec.is_riskless() {
        return Err(SolverError::NeedsRisk);
    }
    let rolls = (1.0 / spec.p0().to_f64()).ceil().max(1.0) as usize;
    let mut cap = spec.max_face() * rolls;
    let (mut expected, _) = solitaire_pass(spec, cap);
    for _ in 0..MAX_CAP_DOUBLINGS {
        let (next_expected, actions) = solitaire_pass(spec, 2 * cap);
        cap *= 2;
        let stable = next_expected.coincides(&expected);
        expected = next_expected;
        if stable {
            let threshold = actions.iter().rposition(|a| *a == Action::Roll).map_or(1, |k| k + 2);
            return Ok(Solitaire { threshold, actions, expected, cap });
        }
    }
    Err(SolverError::NoConvergence { cap })
}
