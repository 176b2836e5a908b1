//! Published reference figures used by the acceptance run.

/// Start-of-game value `v(N, N)` of Pig for several targets, as published
/// (8 decimals).
pub const PIG_REFERENCE: [(usize, f64); 6] =
    [(10, 0.70942388), (50, 0.54615051), (100, 0.53059207), (200, 0.52152913), (500, 0.51362019), (1000, 0.50963900)];

/// Targets at or below this run by default; larger ones are opt-in.
pub const FAST_TARGET_LIMIT: usize = 200;

/// Published optimum of the single-turn Pig problem: hold threshold and
/// expected turn score.
pub const PIG_SOLITAIRE: (usize, f64) = (20, 8.1418);
