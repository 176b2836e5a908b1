//! Convex, non-increasing piecewise-linear functions on `[0, 1]`.
//!
//! A [`PlFunction`] is stored as its breakpoints `0 = x_0 < ... < x_k = 1`
//! together with the values there. Collinear interior points are dropped
//! on construction, so every interior point is a genuine kink.

use crate::numeric::Scalar;
use crate::ops;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlError {
    #[error("argument {0} lies outside [0, 1]")]
    OutOfDomain(f64),
    #[error("combination weights sum to {0}, not 1")]
    WeightMassError(f64),
    #[error("no crossing found: inputs violate the slope preconditions")]
    NoCrossing,
    #[error("malformed breakpoints: {0}")]
    Malformed(&'static str),
}

/// A violated shape invariant, reported by [`PlFunction::check_shape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeViolation {
    NotConvex,
    Increasing,
    NotOneAtZero,
    NotPositiveAtOne,
    TooManyBreakpoints,
    SlopeBelowMinusOne,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlFunction<F> {
    xs: Vec<F>,
    ys: Vec<F>,
}

impl<F: Scalar> PlFunction<F> {
    pub fn constant(c: F) -> Self {
        PlFunction { xs: vec![F::zero(), F::one()], ys: vec![c.clone(), c] }
    }

    pub fn constant_one() -> Self {
        Self::constant(F::one())
    }

    /// `y -> intercept + slope * y`.
    pub fn linear(intercept: F, slope: F) -> Self {
        let end = intercept.clone() + slope;
        PlFunction { xs: vec![F::zero(), F::one()], ys: vec![intercept, end] }
    }

    /// Builds from `(x, f(x))` pairs. The abscissae must increase strictly
    /// from 0 to 1.
    pub fn from_points(points: Vec<(F, F)>) -> Result<Self, PlError> {
        if points.len() < 2 {
            return Err(PlError::Malformed("need at least two points"));
        }
        if !points[0].0.is_zero() || !points[points.len() - 1].0.is_one() {
            return Err(PlError::Malformed("domain must be [0, 1]"));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(PlError::Malformed("abscissae must increase strictly"));
        }
        let (xs, ys) = points.into_iter().unzip();
        Ok(Self::coalesced(xs, ys))
    }

    fn coalesced(xs: Vec<F>, ys: Vec<F>) -> Self {
        let mut out_x: Vec<F> = Vec::with_capacity(xs.len());
        let mut out_y: Vec<F> = Vec::with_capacity(ys.len());
        for (x, y) in xs.into_iter().zip(ys) {
            if let Some(last) = out_x.last() {
                if x.coincides(last) && out_x.len() > 1 {
                    // near-duplicate abscissa: keep the later point
                    out_x.pop();
                    out_y.pop();
                } else if x.coincides(last) {
                    continue;
                }
            }
            while out_x.len() >= 2 {
                let k = out_x.len();
                let s_prev =
                    (out_y[k - 1].clone() - out_y[k - 2].clone()) / (out_x[k - 1].clone() - out_x[k - 2].clone());
                let s_next = (y.clone() - out_y[k - 1].clone()) / (x.clone() - out_x[k - 1].clone());
                if s_prev.coincides(&s_next) {
                    out_x.pop();
                    out_y.pop();
                } else {
                    break;
                }
            }
            out_x.push(x);
            out_y.push(y);
        }
        PlFunction { xs: out_x, ys: out_y }
    }

    /// Number of interior points of non-differentiability.
    pub fn breakpoint_count(&self) -> usize {
        self.xs.len() - 2
    }

    /// All stored points, endpoints included.
    pub fn points(&self) -> impl Iterator<Item = (&F, &F)> {
        self.xs.iter().zip(&self.ys)
    }

    /// CSV `y,f` of every stored point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,f\n");
        for (x, y) in self.points() {
            out.push_str(&format!("{},{}\n", x.render(), y.render()));
        }
        out
    }

    pub fn interior_breakpoints(&self) -> &[F] {
        &self.xs[1..self.xs.len() - 1]
    }

    pub fn at_zero(&self) -> &F {
        &self.ys[0]
    }

    pub fn at_one(&self) -> &F {
        &self.ys[self.ys.len() - 1]
    }

    /// Segment slopes, left to right.
    pub fn slopes(&self) -> Vec<F> {
        (1..self.xs.len()).map(|k| self.slope(k - 1)).collect()
    }

    fn slope(&self, seg: usize) -> F {
        (self.ys[seg + 1].clone() - self.ys[seg].clone()) / (self.xs[seg + 1].clone() - self.xs[seg].clone())
    }

    pub fn leftmost_slope(&self) -> F {
        self.slope(0)
    }

    /// Index `k` of the segment `[x_k, x_{k+1}]` containing `y`.
    fn segment_of(&self, y: &F) -> usize {
        let last = self.xs.len() - 2;
        let idx = self.xs.partition_point(|x| x <= y);
        idx.saturating_sub(1).min(last)
    }

    fn interpolate(&self, seg: usize, y: &F) -> F {
        let (x0, x1) = (&self.xs[seg], &self.xs[seg + 1]);
        let (y0, y1) = (&self.ys[seg], &self.ys[seg + 1]);
        if y == x0 {
            return y0.clone();
        }
        if y == x1 {
            return y1.clone();
        }
        y0.clone() + (y1.clone() - y0.clone()) * (y.clone() - x0.clone()) / (x1.clone() - x0.clone())
    }

    pub fn evaluate(&self, y: &F) -> Result<F, PlError> {
        if *y < F::zero() || *y > F::one() {
            return Err(PlError::OutOfDomain(y.to_f64()));
        }
        ops::charge(1);
        Ok(self.interpolate(self.segment_of(y), y))
    }

    /// `y -> p0 (1 - y) + sum_i w_i f_i(y)`.
    ///
    /// The breakpoints of the result are the merged breakpoints of the
    /// inputs. Weights (with `p0`) must be non-negative and sum to one.
    pub fn affine_combine(terms: &[(F, &PlFunction<F>)], p0: &F) -> Result<Self, PlError> {
        let mass = terms.iter().fold(p0.clone(), |acc, (w, _)| acc + w.clone());
        if !mass.coincides(&F::one()) || *p0 < F::zero() || terms.iter().any(|(w, _)| *w < F::zero()) {
            return Err(PlError::WeightMassError(mass.to_f64()));
        }

        let mut xs: Vec<F> = vec![F::zero(), F::one()];
        for (_, f) in terms {
            if f.xs.len() > 2 {
                xs = merge_sorted(&xs, &f.xs);
            }
        }

        let mut cursors = vec![0usize; terms.len()];
        let mut ys = Vec::with_capacity(xs.len());
        for x in &xs {
            let mut value = p0.clone() * (F::one() - x.clone());
            for ((w, f), cur) in terms.iter().zip(cursors.iter_mut()) {
                while *cur + 2 < f.xs.len() && f.xs[*cur + 1] <= *x {
                    *cur += 1;
                }
                value = value + w.clone() * f.interpolate(*cur, x);
            }
            ys.push(value);
        }
        ops::charge(xs.len() * (terms.len() + 1));
        Ok(Self::coalesced(xs, ys))
    }

    /// `y -> max{c, f(y)}`.
    ///
    /// `f` is non-increasing, so the result follows `f` up to the crossing
    /// and is constant `c` afterwards. A crossing that lands on an existing
    /// breakpoint keeps the constant branch from that point on.
    pub fn max_with_constant(&self, c: &F) -> Self {
        ops::charge(self.xs.len());
        if c >= self.at_zero() {
            return Self::constant(c.clone());
        }
        if c < self.at_one() {
            return self.clone();
        }
        // first breakpoint at or below c
        let k = self.ys.partition_point(|y| y > c);
        let mut xs: Vec<F> = self.xs[..k].to_vec();
        let mut ys: Vec<F> = self.ys[..k].to_vec();
        let crossing = if self.ys[k] == *c {
            self.xs[k].clone()
        } else {
            let (x0, x1) = (&self.xs[k - 1], &self.xs[k]);
            let (y0, y1) = (&self.ys[k - 1], &self.ys[k]);
            x0.clone() + (y0.clone() - c.clone()) * (x1.clone() - x0.clone()) / (y0.clone() - y1.clone())
        };
        let at_end = crossing.is_one();
        xs.push(crossing);
        ys.push(c.clone());
        if !at_end {
            xs.push(F::one());
            ys.push(c.clone());
        }
        Self::coalesced(xs, ys)
    }

    /// Checks convexity, monotonicity, `f(0) = 1` and `f(1) > 0`, and
    /// optionally a breakpoint budget and the `slope > -1` bound of a
    /// top-level function.
    pub fn check_shape(&self, max_breakpoints: Option<usize>, top_level: bool) -> Result<(), ShapeViolation> {
        let slopes = self.slopes();
        if slopes.iter().any(|s| *s > F::zero() && !s.coincides(&F::zero())) {
            return Err(ShapeViolation::Increasing);
        }
        if slopes.windows(2).any(|w| w[0] > w[1] && !w[0].coincides(&w[1])) {
            return Err(ShapeViolation::NotConvex);
        }
        if !self.at_zero().coincides(&F::one()) {
            return Err(ShapeViolation::NotOneAtZero);
        }
        if *self.at_one() <= F::zero() {
            return Err(ShapeViolation::NotPositiveAtOne);
        }
        if max_breakpoints.is_some_and(|m| self.breakpoint_count() > m) {
            return Err(ShapeViolation::TooManyBreakpoints);
        }
        if top_level && slopes.iter().any(|s| *s <= -F::one()) {
            return Err(ShapeViolation::SlopeBelowMinusOne);
        }
        Ok(())
    }
}

fn merge_sorted<F: Scalar>(a: &[F], b: &[F]) -> Vec<F> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j == b.len() || (i < a.len() && a[i] <= b[j]) {
            i += 1;
            a[i - 1].clone()
        } else {
            j += 1;
            b[j - 1].clone()
        };
        if out.last().is_none_or(|last: &F| !last.coincides(&next)) {
            out.push(next);
        }
    }
    ops::charge(a.len() + b.len());
    out
}

/// Solves `x = f_ab(y)`, `y = f_ba(x)`.
///
/// Walks the segments of `g(x) = f_ab(f_ba(x))`, whose breakpoints are
/// those of `f_ba` plus the pull-backs of the breakpoints of `f_ab`, and
/// stops at the piece where `h(x) = g(x) - x` changes sign. There the
/// equation is linear and is solved exactly. With all slopes in `(-1, 0]`
/// the slope of `g` lies in `[0, 1)`, so `h` is strictly decreasing and the
/// root is unique.
pub fn solve_system<F: Scalar>(f_ab: &PlFunction<F>, f_ba: &PlFunction<F>) -> Result<(F, F), PlError> {
    let h = |x: &F, y: &F| -> Result<F, PlError> { Ok(f_ab.evaluate(y)? - x.clone()) };

    let mut prev_x = F::zero();
    let mut prev_h = h(&prev_x, f_ba.at_zero())?;
    if prev_h < F::zero() {
        return Err(PlError::NoCrossing);
    }
    if prev_h.is_zero() {
        let y = f_ba.at_zero().clone();
        return Ok((prev_x, y));
    }

    // kinks of f_ab, consumed from the top as f_ba descends
    let kinks = f_ab.interior_breakpoints();
    let mut remaining = kinks.len();
    for seg in 0..f_ba.xs.len() - 1 {
        let (x0, x1) = (&f_ba.xs[seg], &f_ba.xs[seg + 1]);
        let (y0, y1) = (&f_ba.ys[seg], &f_ba.ys[seg + 1]);
        // abscissae inside this segment where f_ba hits a kink of f_ab
        let mut cuts: Vec<F> = Vec::new();
        while remaining > 0 && kinks[remaining - 1] >= *y0 {
            remaining -= 1;
        }
        if y0 != y1 {
            while remaining > 0 && kinks[remaining - 1] > *y1 {
                let yb = &kinks[remaining - 1];
                let x = x0.clone() + (y0.clone() - yb.clone()) * (x1.clone() - x0.clone()) / (y0.clone() - y1.clone());
                cuts.push(x);
                remaining -= 1;
            }
        }
        cuts.push(x1.clone());
        ops::charge(cuts.len());

        for x in cuts {
            let y = f_ba.interpolate(seg, &x);
            let hx = h(&x, &y)?;
            if hx <= F::zero() {
                let root = if hx.is_zero() {
                    x
                } else {
                    prev_x.clone() + prev_h.clone() * (x - prev_x.clone()) / (prev_h.clone() - hx)
                };
                let y = f_ba.evaluate(&root)?;
                return Ok((root, y));
            }
            prev_x = x;
            prev_h = hx;
        }
    }
    Err(PlError::NoCrossing)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    type Q = BigRational;

    fn q(n: i64, d: i64) -> Q {
        Q::new(n.into(), d.into())
    }

    /// `1 - y/2`
    fn half_line() -> PlFunction<Q> {
        PlFunction::linear(q(1, 1), q(-1, 2))
    }

    #[test]
    fn constant_one_basics() {
        let one = PlFunction::<Q>::constant_one();
        assert_eq!(one.evaluate(&q(37, 100)).unwrap(), q(1, 1));
        assert_eq!(one.slopes(), vec![q(0, 1)]);
        assert_eq!(one.breakpoint_count(), 0);
        let same = PlFunction::affine_combine(&[(q(1, 1), &one)], &q(0, 1)).unwrap();
        assert_eq!(same, one);
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(half_line().evaluate(&q(2, 3)).unwrap(), q(2, 3));
        assert_eq!(half_line().evaluate(&q(0, 1)).unwrap(), q(1, 1));
        let capped = half_line().max_with_constant(&q(3, 5));
        assert_eq!(capped.evaluate(&q(1, 1)).unwrap(), q(3, 5));
        assert!(matches!(half_line().evaluate(&q(3, 2)), Err(PlError::OutOfDomain(_))));
        assert!(matches!(half_line().evaluate(&q(-1, 2)), Err(PlError::OutOfDomain(_))));
    }

    #[test]
    fn affine_combine_piglet_top_function() {
        let one = PlFunction::<Q>::constant_one();
        let f = PlFunction::affine_combine(&[(q(1, 2), &one)], &q(1, 2)).unwrap();
        assert_eq!(f, half_line());
        let all_one = PlFunction::affine_combine(&[(q(1, 3), &one), (q(2, 3), &one)], &q(0, 1)).unwrap();
        assert_eq!(all_one, one);
    }

    #[test]
    fn affine_combine_rejects_bad_mass() {
        let one = PlFunction::<Q>::constant_one();
        assert!(matches!(PlFunction::affine_combine(&[(q(1, 3), &one)], &q(1, 3)), Err(PlError::WeightMassError(_))));
    }

    #[test]
    fn affine_combine_merges_breakpoints() {
        let f = half_line().max_with_constant(&q(3, 5));
        let g = PlFunction::linear(q(1, 1), q(-1, 3)).max_with_constant(&q(5, 6));
        let combo = PlFunction::affine_combine(&[(q(1, 4), &f), (q(1, 4), &g)], &q(1, 2)).unwrap();
        assert!(combo.breakpoint_count() <= f.breakpoint_count() + g.breakpoint_count());
        for y in [q(0, 1), q(1, 5), q(1, 2), q(4, 5), q(9, 10), q(1, 1)] {
            let expect =
                q(1, 2) * (q(1, 1) - y.clone()) + q(1, 4) * f.evaluate(&y).unwrap() + q(1, 4) * g.evaluate(&y).unwrap();
            assert_eq!(combo.evaluate(&y).unwrap(), expect);
        }
    }

    #[test]
    fn max_with_constant_examples() {
        let capped = half_line().max_with_constant(&q(3, 5));
        assert_eq!(capped.interior_breakpoints(), &[q(4, 5)]);
        assert_eq!(capped.evaluate(&q(9, 10)).unwrap(), q(3, 5));
        assert_eq!(capped.breakpoint_count(), 1);
        assert_eq!(half_line().max_with_constant(&q(0, 1)), half_line());
        assert_eq!(half_line().max_with_constant(&q(1, 1)), PlFunction::constant_one());
        // crossing exactly at the right end adds no breakpoint
        assert_eq!(half_line().max_with_constant(&q(1, 2)), half_line());
    }

    #[test]
    fn max_with_constant_tie_on_breakpoint() {
        let f = PlFunction::from_points(vec![(q(0, 1), q(1, 1)), (q(1, 2), q(1, 2)), (q(1, 1), q(1, 4))]).unwrap();
        let g = f.max_with_constant(&q(1, 2));
        assert_eq!(g.interior_breakpoints(), &[q(1, 2)]);
        assert_eq!(g.evaluate(&q(3, 4)).unwrap(), q(1, 2));
    }

    #[test]
    fn collinear_points_are_coalesced() {
        let f = PlFunction::from_points(vec![(q(0, 1), q(1, 1)), (q(1, 2), q(3, 4)), (q(1, 1), q(1, 2))]).unwrap();
        assert_eq!(f, half_line());
        assert!(PlFunction::from_points(vec![(q(0, 1), q(1, 1)), (q(0, 1), q(1, 1))]).is_err());
    }

    #[test]
    fn solve_system_examples() {
        assert_eq!(solve_system(&half_line(), &half_line()).unwrap(), (q(2, 3), q(2, 3)));

        // f_{2,1}(x) = max{(1 - x)/2 + 1/6, (3(1 - x) + 1)/4}; the second
        // branch dominates on all of [0, 1]
        let hold_branch = PlFunction::linear(q(2, 3), q(-1, 2));
        let f21 = PlFunction::linear(q(1, 1), q(-3, 4));
        for x in [q(0, 1), q(1, 3), q(2, 3), q(5, 6), q(1, 1)] {
            let roll = (q(3, 1) * (q(1, 1) - x.clone()) + q(1, 1)) / q(4, 1);
            assert_eq!(f21.evaluate(&x).unwrap(), roll);
            assert!(hold_branch.evaluate(&x).unwrap() <= roll);
        }
        assert_eq!(solve_system(&half_line(), &f21).unwrap(), (q(4, 5), q(2, 5)));

        let c = PlFunction::constant(q(3, 7));
        assert_eq!(solve_system(&c, &c).unwrap(), (q(3, 7), q(3, 7)));
    }

    #[test]
    fn solve_system_reports_bad_inputs() {
        // values above 1 leave h(1) > 0, negative ones make h(0) < 0
        let high = PlFunction::constant(q(3, 2));
        let mid = PlFunction::constant(q(1, 2));
        assert_eq!(solve_system(&high, &mid), Err(PlError::NoCrossing));
        let low = PlFunction::constant(q(-1, 2));
        assert_eq!(solve_system(&low, &mid), Err(PlError::NoCrossing));
    }

    #[test]
    fn shape_checks() {
        let capped = half_line().max_with_constant(&q(3, 5));
        assert_eq!(capped.check_shape(Some(1), true), Ok(()));
        assert_eq!(capped.check_shape(Some(0), true), Err(ShapeViolation::TooManyBreakpoints));
        let concave =
            PlFunction::from_points(vec![(q(0, 1), q(1, 1)), (q(1, 2), q(9, 10)), (q(1, 1), q(1, 5))]).unwrap();
        assert_eq!(concave.check_shape(None, false), Err(ShapeViolation::NotConvex));
        let steep = PlFunction::linear(q(1, 1), q(-1, 1));
        assert_eq!(steep.check_shape(None, false), Err(ShapeViolation::NotPositiveAtOne));
    }

    #[test]
    fn float_backend_agrees() {
        let f = PlFunction::<f64>::linear(1.0, -0.5);
        let (x, y) = solve_system(&f, &f).unwrap();
        assert!((x - 2.0 / 3.0).abs() < 1e-15 && (y - 2.0 / 3.0).abs() < 1e-15);
    }
}
