//! Closed forms, comb sets, truncated stationary solves and region predicates.

mod closed_form;
mod comb_set;
mod truncated;
mod verdict;

pub use closed_form::{mu_n2, transience_bound, v2, v2_inf, vitesse_threshold};
pub use comb_set::{enumerate_comb_set, CombCase};
pub use truncated::{build_truncated, solve_stationary, StationarySolve, TruncatedChain};
pub use verdict::{region_verdict, RegionVerdict, Verdict};

/// Default balance residual for [`solve_stationary`].
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
