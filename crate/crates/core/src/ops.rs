//! Thread-local step counter.
//!
//! Piecewise-linear primitives and the pair solvers charge one step per
//! merged breakpoint, scanned segment or elementary term evaluation. The
//! solver is single-threaded, so a thread-local counter is deterministic
//! for a fixed input.

use std::cell::Cell;

thread_local! {
    static STEPS: Cell<u64> = const { Cell::new(0) };
}

#[inline]
pub(crate) fn charge(n: usize) {
    STEPS.with(|s| s.set(s.get() + n as u64));
}

/// Steps charged on this thread so far.
pub fn steps() -> u64 {
    STEPS.with(Cell::get)
}

/// Runs `f` and returns its output with the number of steps it charged.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let before = steps();
    let out = f();
    (out, steps() - before)
}
