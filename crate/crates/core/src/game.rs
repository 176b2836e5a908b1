//! Game instances, states and the one-step transition model.
//!
//! States are seen from player one's side: `a` is what player one still
//! needs, `b` what player two needs, `tau` the running turn score of
//! whoever holds the die.

use std::fmt;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::numeric::{is_negative, parse_rational, rational_from_f64, ParseProbabilityError, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationError {
    #[error("probabilities sum to {total}, not 1")]
    NonUnitMass { total: f64 },
    #[error("probability of face {face} is negative")]
    NegativeProbability { face: usize },
    #[error("p0 = 1: the roller can never score and the game never ends")]
    DegenerateP0,
    #[error("target must be at least 1")]
    ZeroTarget,
    #[error("die needs at least faces 0 and 1 (n >= 1)")]
    ZeroFaces,
    #[error("expected {expected} probabilities for faces 0..={n}, found {found}", expected = .n + 1)]
    LengthMismatch { n: usize, found: usize },
}

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("malformed spec JSON")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Probability(#[from] ParseProbabilityError),
    #[error("invalid spec")]
    Validation(#[from] ValidationError),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("action {action:?} is not legal in state {state}")]
    IllegalAction { state: State, action: Action },
    #[error("state {0} lies outside the game")]
    InvalidState(State),
}

/// A generalized Pig game: a die with faces `0..=n`, face probabilities
/// and a winning target. Instances are always valid; build them through
/// [`GameSpec::new`].
#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec<F> {
    probs: Vec<F>,
    target: usize,
}

/// Checks every instance invariant on raw face probabilities.
pub fn validate<F: Scalar>(probs: &[F], target: usize) -> Result<(), ValidationError> {
    if probs.len() < 2 {
        return Err(ValidationError::ZeroFaces);
    }
    if let Some(face) = probs.iter().position(is_negative) {
        return Err(ValidationError::NegativeProbability { face });
    }
    let total = probs.iter().cloned().fold(F::zero(), |acc, p| acc + p);
    if !total.coincides(&F::one()) {
        return Err(ValidationError::NonUnitMass { total: total.to_f64() });
    }
    if probs[0].coincides(&F::one()) {
        return Err(ValidationError::DegenerateP0);
    }
    if target == 0 {
        return Err(ValidationError::ZeroTarget);
    }
    Ok(())
}

impl<F: Scalar> GameSpec<F> {
    pub fn new(probs: Vec<F>, target: usize) -> Result<Self, ValidationError> {
        validate(&probs, target)?;
        Ok(GameSpec { probs, target })
    }

    /// Classic Pig: a six-sided die where rolling a one scores nothing.
    pub fn pig(target: usize) -> Self {
        let mut probs = vec![F::from_ratio(1, 6); 7];
        probs[1] = F::zero();
        GameSpec::new(probs, target).expect("pig preset is valid")
    }

    /// Piglet: a fair coin with faces {0, 1}.
    pub fn piglet(target: usize) -> Self {
        GameSpec::new(vec![F::from_ratio(1, 2), F::from_ratio(1, 2)], target).expect("piglet preset is valid")
    }

    pub fn max_face(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn p0(&self) -> &F {
        &self.probs[0]
    }

    /// With no zero face the roller simply keeps rolling and always wins.
    pub fn is_riskless(&self) -> bool {
        self.probs[0].is_zero()
    }

    /// Faces `i >= 1` with positive probability, as `(i, p_i)`.
    pub fn scoring_faces(&self) -> impl Iterator<Item = (usize, &F)> + '_ {
        self.probs.iter().enumerate().skip(1).filter(|(_, p)| !p.is_zero())
    }

    pub fn with_target(&self, target: usize) -> Result<Self, ValidationError> {
        GameSpec::new(self.probs.clone(), target)
    }

    /// Number of states `(a, b, tau, j)` plus the game-over state.
    pub fn state_count(&self) -> u128 {
        let n = self.max_face() as u128;
        let big_n = self.target as u128;
        let per_player = big_n * (big_n * (big_n + 1) / 2 + n * big_n);
        2 * per_player + 1
    }

    pub fn is_piglet(&self) -> bool {
        self.probs.len() == 2 && self.probs[0] == F::from_ratio(1, 2)
    }
}

impl GameSpec<BigRational> {
    /// Same die and target in another numeric backend.
    pub fn to_backend<G: Scalar>(&self) -> Result<GameSpec<G>, ValidationError> {
        GameSpec::new(self.probs.iter().map(G::from_rational).collect(), self.target)
    }

    pub fn to_raw(&self) -> RawSpec {
        RawSpec { probs: self.probs.clone(), target: self.target }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ProbLiteral {
    Text(String),
    Number(f64),
}

#[derive(Serialize, Deserialize)]
struct SpecFile {
    n: usize,
    probs: Vec<ProbLiteral>,
    target: usize,
}

/// A parsed spec file before validation in a particular backend.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSpec {
    pub probs: Vec<BigRational>,
    pub target: usize,
}

impl RawSpec {
    /// Reads `{"n": int, "probs": [...], "target": int}`. Probabilities
    /// may be JSON numbers or strings such as `"1/6"`.
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        let file: SpecFile = serde_json::from_str(text)?;
        if file.probs.len() != file.n + 1 {
            return Err(ValidationError::LengthMismatch { n: file.n, found: file.probs.len() }.into());
        }
        let probs = file
            .probs
            .iter()
            .map(|lit| match lit {
                ProbLiteral::Text(s) => parse_rational(s),
                ProbLiteral::Number(x) => rational_from_f64(*x).ok_or_else(|| ParseProbabilityError(x.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RawSpec { probs, target: file.target })
    }

    /// Validates in backend `F`: exact mass in rational mode, 1e-12 in float mode.
    pub fn instantiate<F: Scalar>(&self) -> Result<GameSpec<F>, ValidationError> {
        GameSpec::new(self.probs.iter().map(F::from_rational).collect(), self.target)
    }

    pub fn to_json(&self) -> String {
        let file = SpecFile {
            n: self.probs.len().saturating_sub(1),
            probs: self.probs.iter().map(|p| ProbLiteral::Text(p.render())).collect(),
            target: self.target,
        };
        serde_json::to_string(&file).expect("spec serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Roll,
    Hold,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Roll => "roll",
            Action::Hold => "hold",
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum State {
    Turn { a: usize, b: usize, tau: usize, mover: Player },
    GameOver,
}

impl State {
    /// `(a, b, tau, 1)`: player one holds the die.
    pub fn one(a: usize, b: usize, tau: usize) -> State {
        State::Turn { a, b, tau, mover: Player::One }
    }

    /// `(a, b, tau, 2)`: player two holds the die.
    pub fn two(a: usize, b: usize, tau: usize) -> State {
        State::Turn { a, b, tau, mover: Player::Two }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::Turn { a, b, tau, mover } => {
                let j = if *mover == Player::One { 1 } else { 2 };
                write!(f, "({a},{b},{tau},{j})")
            }
            State::GameOver => f.write_str("GO"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition<F> {
    pub next: State,
    pub prob: F,
    pub payoff: F,
}

fn check_state<F: Scalar>(spec: &GameSpec<F>, s: State) -> Result<(), GameError> {
    if let State::Turn { a, b, tau, mover } = s {
        let need = if mover == Player::One { a } else { b };
        if a == 0 || b == 0 || tau + 1 > need + spec.max_face() {
            return Err(GameError::InvalidState(s));
        }
    }
    Ok(())
}

pub fn legal_actions<F: Scalar>(spec: &GameSpec<F>, s: State) -> Result<Vec<Action>, GameError> {
    check_state(spec, s)?;
    Ok(match s {
        State::GameOver => vec![],
        State::Turn { a, b, tau, mover } => {
            let need = if mover == Player::One { a } else { b };
            if tau == 0 {
                vec![Action::Roll]
            } else if tau < need {
                vec![Action::Roll, Action::Hold]
            } else {
                vec![Action::Hold]
            }
        }
    })
}

/// Full successor distribution of `act` at `s`, with player one's payoffs.
pub fn transitions<F: Scalar>(spec: &GameSpec<F>, s: State, act: Action) -> Result<Vec<Transition<F>>, GameError> {
    let (a, b, tau, mover) = match s {
        State::GameOver => {
            check_state(spec, s)?;
            return Ok(vec![Transition { next: State::GameOver, prob: F::one(), payoff: F::zero() }]);
        }
        State::Turn { a, b, tau, mover } => (a, b, tau, mover),
    };
    if !legal_actions(spec, s)?.contains(&act) {
        return Err(GameError::IllegalAction { state: s, action: act });
    }
    let need = if mover == Player::One { a } else { b };
    if tau >= need {
        let payoff = if mover == Player::One { F::one() } else { F::zero() };
        return Ok(vec![Transition { next: State::GameOver, prob: F::one(), payoff }]);
    }
    let make = |a, b, tau, mover| State::Turn { a, b, tau, mover };
    let out = match act {
        Action::Hold => {
            let next = match mover {
                Player::One => make(a - tau, b, 0, Player::Two),
                Player::Two => make(a, b - tau, 0, Player::One),
            };
            vec![Transition { next, prob: F::one(), payoff: F::zero() }]
        }
        Action::Roll => {
            let mut out = Vec::with_capacity(spec.max_face() + 1);
            out.push(Transition { next: make(a, b, 0, mover.other()), prob: spec.p0().clone(), payoff: F::zero() });
            for (i, p) in spec.probs().iter().enumerate().skip(1) {
                out.push(Transition { next: make(a, b, tau + i, mover), prob: p.clone(), payoff: F::zero() });
            }
            out
        }
    };
    Ok(out)
}

/// Value of rolling at turn score `tau` when `need` points are missing:
/// `p0 (1 - opp_start_value) + sum_i p_i cont(tau + i)`, where any
/// continuation reaching `need` counts as a win.
pub fn v_roll<F: Scalar>(
    spec: &GameSpec<F>,
    need: usize,
    tau: usize,
    continuation: impl Fn(usize) -> F,
    opp_start_value: &F,
) -> F {
    let mut total = spec.p0().clone() * (F::one() - opp_start_value.clone());
    for (i, p) in spec.scoring_faces() {
        let next = tau + i;
        let v = if next >= need { F::one() } else { continuation(next) };
        total = total + p.clone() * v;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    #[test]
    fn presets_validate() {
        let pig = GameSpec::<Q>::pig(100);
        assert_eq!(pig.max_face(), 6);
        assert_eq!(pig.probs()[1], q(0, 1));
        let piglet = GameSpec::<Q>::piglet(10);
        assert_eq!(piglet.max_face(), 1);
        assert!(piglet.is_piglet());
        assert!(!pig.is_piglet());
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(GameSpec::new(vec![0.5, 0.4], 5), Err(ValidationError::NonUnitMass { .. })));
        assert!(matches!(
            GameSpec::new(vec![q(3, 2), q(-1, 2)], 5),
            Err(ValidationError::NegativeProbability { face: 1 })
        ));
        assert_eq!(GameSpec::new(vec![q(1, 1), q(0, 1)], 5), Err(ValidationError::DegenerateP0));
        assert_eq!(GameSpec::new(vec![q(1, 2), q(1, 2)], 0), Err(ValidationError::ZeroTarget));
        assert_eq!(GameSpec::new(vec![q(1, 1)], 3), Err(ValidationError::ZeroFaces));
        assert!(GameSpec::new(vec![q(0, 1), q(1, 1)], 3).unwrap().is_riskless());
    }

    #[test]
    fn float_mass_tolerance() {
        let third = 1.0 / 3.0;
        assert!(GameSpec::new(vec![third, third, third], 4).is_ok());
        assert!(GameSpec::new(vec![0.3333, 0.3333, 0.3333], 4).is_err());
        // exact mode is strict about the same decimals
        let raw = RawSpec::from_json(r#"{"n":2,"probs":[0.3333,0.3333,0.3334],"target":4}"#).unwrap();
        assert!(raw.instantiate::<Q>().is_ok());
        let raw = RawSpec::from_json(r#"{"n":2,"probs":[0.3333,0.3333,0.3333],"target":4}"#).unwrap();
        assert!(raw.instantiate::<Q>().is_err());
    }

    #[test]
    fn json_spec_parsing() {
        let raw =
            RawSpec::from_json(r#"{"n": 6, "probs": ["1/6", 0, "1/6", "1/6", "1/6", "1/6", "1/6"], "target": 100}"#)
                .unwrap();
        let spec = raw.instantiate::<Q>().unwrap();
        assert_eq!(spec, GameSpec::<Q>::pig(100));
        let again = RawSpec::from_json(&raw.to_json()).unwrap();
        assert_eq!(again, raw);

        let err = RawSpec::from_json(r#"{"n": 1, "probs": [0.5], "target": 3}"#).unwrap_err();
        assert!(matches!(err, SpecError::Validation(ValidationError::LengthMismatch { .. })));
        assert!(matches!(RawSpec::from_json("{nope"), Err(SpecError::Json(_))));
        assert!(matches!(
            RawSpec::from_json(r#"{"n":1,"probs":["x","1/2"],"target":3}"#),
            Err(SpecError::Probability(_))
        ));
    }

    #[test]
    fn roll_transition_piglet() {
        let spec = GameSpec::<Q>::piglet(10);
        let out = transitions(&spec, State::one(2, 3, 1), Action::Roll).unwrap();
        assert_eq!(
            out,
            vec![
                Transition { next: State::two(2, 3, 0), prob: q(1, 2), payoff: q(0, 1) },
                Transition { next: State::one(2, 3, 2), prob: q(1, 2), payoff: q(0, 1) },
            ]
        );
    }

    #[test]
    fn hold_and_terminal_transitions() {
        let pig = GameSpec::<Q>::pig(100);
        let out = transitions(&pig, State::one(5, 9, 3), Action::Hold).unwrap();
        assert_eq!(out, vec![Transition { next: State::two(2, 9, 0), prob: q(1, 1), payoff: q(0, 1) }]);

        let out = transitions(&pig, State::one(4, 7, 5), Action::Hold).unwrap();
        assert_eq!(out, vec![Transition { next: State::GameOver, prob: q(1, 1), payoff: q(1, 1) }]);
        let out = transitions(&pig, State::two(7, 4, 5), Action::Hold).unwrap();
        assert_eq!(out[0].payoff, q(0, 1));

        let out = transitions(&pig, State::GameOver, Action::Roll).unwrap();
        assert_eq!(out, vec![Transition { next: State::GameOver, prob: q(1, 1), payoff: q(0, 1) }]);
    }

    #[test]
    fn illegal_actions_are_rejected() {
        let pig = GameSpec::<Q>::pig(100);
        assert!(matches!(transitions(&pig, State::one(5, 9, 0), Action::Hold), Err(GameError::IllegalAction { .. })));
        assert!(matches!(transitions(&pig, State::one(4, 7, 5), Action::Roll), Err(GameError::IllegalAction { .. })));
        assert!(matches!(transitions(&pig, State::one(4, 7, 10), Action::Hold), Err(GameError::InvalidState(_))));
    }

    #[test]
    fn v_roll_examples() {
        let piglet = GameSpec::<Q>::piglet(10);
        let y = q(1, 3);
        // a = 1: every scoring roll wins
        let v = v_roll(&piglet, 1, 0, |_| unreachable!(), &y);
        assert_eq!(v, q(1, 1) - y / q(2, 1));
        // v = 1 - v/2 at a = b = 1 is solved by 2/3
        let v11 = q(2, 3);
        assert_eq!(v_roll(&piglet, 1, 0, |_| q(0, 1), &v11), v11);

        let pig = GameSpec::<Q>::pig(100);
        assert_eq!(v_roll(&pig, 3, 0, |_| q(1, 1), &q(0, 1)), q(1, 1));
    }

    #[test]
    fn state_count_is_cubic() {
        let pig = GameSpec::<f64>::pig(10);
        // 2 * N * (N(N+1)/2 + nN) + 1
        assert_eq!(pig.state_count(), 2 * 10 * (55 + 60) + 1);
    }
}
