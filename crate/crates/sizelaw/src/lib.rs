//! Structural-break detection and counterfactual redistribution for
//! size-frequency distributions.
//!
//! Pipeline: load a size histogram (entities per integer size), fit power
//! laws or polynomials in log-log space with Poisson count weights
//! ([`fitting`]), locate a slope break with a seeded two-segment RANSAC
//! ([`breakpoint`]), then ask the counterfactual question "how much larger
//! would the size-weighted total be without the break?" under
//! count-conserving scenarios with Monte Carlo error bars
//! ([`counterfactual`]). [`synth`] generates exact or noisy piecewise power
//! laws for testing, and [`rng`] documents the seeded generator every
//! randomized step uses.

pub mod breakpoint;
pub mod counterfactual;
pub mod error;
pub mod fitting;
pub mod histogram;
pub mod rng;
pub mod synth;

pub use breakpoint::{intersect_lines, ransac_two_lines, BreakpointResult, RansacParams, SegmentLabel};
pub use counterfactual::{
    delta_uncertainty, fixed_normalization, fixed_slope, run_scenario, ScenarioConfig,
    ScenarioKind, ScenarioResult,
};
pub use error::{Error, Result};
pub use fitting::{chi2_pvalue, fit_loglog, sigma_counts, ErrorModel, LogLogFit, MAX_DEGREE};
pub use histogram::{SizeBin, SizeHistogram, SizeRange};
pub use synth::{generate, continuity_intercept, GeneratorSpec, NoiseModel, PowerLawSegment};
