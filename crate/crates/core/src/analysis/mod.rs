//! Estimators over simulated trajectories.

mod comb;
mod dtilde;
mod occupation;
mod speed;
pub mod stats;
mod tail;

pub use comb::{classify_comb, default_comb_tolerance, CombMatch};
pub use dtilde::{default_d_grid, estimate_dtilde, DecayFit, DtildeEstimate, DEFAULT_HORIZONS, WILSON_Z};
pub use occupation::{empirical_shape_distribution, ShapeDistribution, DRIFT_TV};
pub use speed::{estimate_speeds, SpeedEstimate};
pub use tail::{fit_tail, TailFit, TailStatus, MAX_ALPHA_RATIO, MIN_ALPHA, MIN_TAIL_COUNT};
