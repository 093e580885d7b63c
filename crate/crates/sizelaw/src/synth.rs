//! Seeded synthetic histogram generation: exact or noisy piecewise power
//! laws. This is the test oracle for the rest of the pipeline.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitting::ErrorModel;
use crate::histogram::{SizeBin, SizeHistogram, SizeRange};
use crate::rng::SplitMix64;

/// One power-law piece: `n(A) = 10^{log10_norm} · A^{slope}` over `range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawSegment {
    pub range: SizeRange,
    pub log10_norm: f64,
    pub slope: f64,
}

/// Per-bin noise applied to the exact counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    None,
    /// Gaussian approximation to Poisson scatter: `n → max(0, n + k√n·g)`.
    PoissonGaussian(ErrorModel),
}

/// A complete generator: segments must tile `span` without gaps or overlap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratorSpec {
    pub span: SizeRange,
    pub segments: Vec<PowerLawSegment>,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Noiseless single- or two-segment convenience constructor used across
    /// the test suites. `segments` are (range, log10_norm, slope) triples.
    pub fn noiseless(span: SizeRange, segments: Vec<PowerLawSegment>) -> Self {
        Self {
            span,
            segments,
            noise: NoiseModel::None,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Spec("at least one segment required".into()));
        }
        let mut expected_lo = self.span.lo();
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.range.lo() != expected_lo {
                return Err(Error::Spec(format!(
                    "segment {i} starts at {}, expected {expected_lo}",
                    seg.range.lo()
                )));
            }
            if seg.range.hi() > self.span.hi() {
                return Err(Error::Spec(format!(
                    "segment {i} ends at {} beyond span end {}",
                    seg.range.hi(),
                    self.span.hi()
                )));
            }
            if !seg.log10_norm.is_finite() || !seg.slope.is_finite() {
                return Err(Error::Spec(format!("segment {i} has non-finite parameters")));
            }
            expected_lo = seg.range.hi() + 1;
        }
        if expected_lo != self.span.hi() + 1 {
            return Err(Error::Spec(format!(
                "segments end at {}, expected span end {}",
                expected_lo - 1,
                self.span.hi()
            )));
        }
        Ok(())
    }
}

/// Generates the histogram described by `spec`; deterministic per seed.
pub fn generate(spec: &GeneratorSpec) -> Result<SizeHistogram> {
    spec.validate()?;
    let mut rng = SplitMix64::new(spec.seed);
    let mut bins = Vec::with_capacity(spec.span.len());
    for seg in &spec.segments {
        for size in seg.range.sizes() {
            let exact = 10f64.powf(seg.log10_norm + seg.slope * (size as f64).log10());
            let count = match spec.noise {
                NoiseModel::None => exact,
                NoiseModel::PoissonGaussian(em) => {
                    let noisy = exact + em.inflation() * exact.sqrt() * rng.next_normal();
                    noisy.max(0.0)
                }
            };
            bins.push(SizeBin::new(size, count)?);
        }
    }
    SizeHistogram::new(bins, "synthetic")
}

/// Right-segment intercept making both laws agree at `join`:
/// `c' = c + (s − right_slope) · log10(join)`.
pub fn continuity_intercept(
    left_log10_norm: f64,
    left_slope: f64,
    right_slope: f64,
    join: f64,
) -> f64 {
    debug_assert!(join >= 1.0);
    left_log10_norm + (left_slope - right_slope) * join.log10()
}

/// The two-segment generator used throughout the tests: left law
/// `(log10_norm, left_slope)` up to `join`, right law with `right_slope`
/// continuous at `join` shifted down by `log10_drop` decades.
pub fn broken_law_spec(
    span: SizeRange,
    log10_norm: f64,
    left_slope: f64,
    right_slope: f64,
    join: u32,
    log10_drop: f64,
    noise: NoiseModel,
    seed: u64,
) -> GeneratorSpec {
    let right_norm =
        continuity_intercept(log10_norm, left_slope, right_slope, join as f64) - log10_drop;
    GeneratorSpec {
        span,
        segments: vec![
            PowerLawSegment {
                range: SizeRange::new(span.lo(), join).unwrap(),
                log10_norm,
                slope: left_slope,
            },
            PowerLawSegment {
                range: SizeRange::new(join + 1, span.hi()).unwrap(),
                log10_norm: right_norm,
                slope: right_slope,
            },
        ],
        noise,
        seed,
    }
}
