//! RANSAC two-segment line fitting on the log-log plane and breakpoint
//! estimation.
//!
//! Size histograms are ordered, so instead of generic random minimal
//! subsets the search draws a candidate *split size* first, then samples
//! points on each side. Per iteration:
//!
//! 1. pick a split size uniformly among sizes leaving at least
//!    `min_segment_points` positive bins on each side;
//! 2. sample `min_segment_points` distinct positive bins per side and fit a
//!    degree-1 WLS line to each sample;
//! 3. count inliers: bins whose log-space residual from their side's line is
//!    within `inlier_threshold_sigmas · σ_y`.
//!
//! The best model has the largest consensus; ties break by smaller total
//! squared weighted residual, then lower split, then lower iteration index
//! (so a parallel reduction would agree with the serial loop). The final
//! segments are refit by WLS on the winning consensus sets and the
//! breakpoint is their intersection.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitting::{wls_polyfit, ErrorModel, LogLogFit, LogPoint};
use crate::histogram::{SizeHistogram, SizeRange};
use crate::rng::SplitMix64;

/// Slopes closer than this are treated as parallel.
pub const PARALLEL_SLOPE_EPS: f64 = 1e-12;

/// Knobs for [`ransac_two_lines`]. Defaults: 1000 iterations, 2.5σ
/// rejection (the midpoint of the usual 2–3σ), seed 0, 3 points per sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RansacParams {
    pub iterations: u32,
    pub inlier_threshold_sigmas: f64,
    pub seed: u64,
    pub min_segment_points: usize,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 1000,
            inlier_threshold_sigmas: 2.5,
            seed: 0,
            min_segment_points: 3,
        }
    }
}

impl RansacParams {
    fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidParams("iterations must be >= 1".into()));
        }
        if !(1.0..=5.0).contains(&self.inlier_threshold_sigmas) {
            return Err(Error::InvalidParams(format!(
                "inlier threshold must be in [1, 5] sigmas, got {}",
                self.inlier_threshold_sigmas
            )));
        }
        if self.min_segment_points < 2 {
            return Err(Error::InvalidParams(
                "min_segment_points must be >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Side assignment of one bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentLabel {
    Left,
    Right,
    Outlier,
}

/// Two fitted segments and their intersection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakpointResult {
    pub left_fit: LogLogFit,
    pub right_fit: LogLogFit,
    /// Intersection size A*. `None` when the segments are parallel within
    /// [`PARALLEL_SLOPE_EPS`] (see `collinear`).
    pub break_size: Option<f64>,
    /// Per-bin labels, aligned with the histogram's bins. Zero-count bins
    /// are always outliers.
    pub assignments: Vec<SegmentLabel>,
    /// Inlier count of the winning consensus model.
    pub consensus_score: usize,
    /// The two consensus lines are parallel (no usable intersection).
    pub collinear: bool,
    /// The intersection falls outside the open histogram span.
    pub extrapolated: bool,
    /// The slopes differ by more than 3× their combined 1σ uncertainty —
    /// i.e. the data support a real break rather than a single line.
    pub break_detected: bool,
    /// Winning candidate split size (left side: `size <= split`).
    pub split_size: u32,
}

/// Size at which two degree-1 log-log fits predict the same count:
/// `A* = 10^{(c0₂−c0₁)/(c1₁−c1₂)}`.
pub fn intersect_lines(f1: &LogLogFit, f2: &LogLogFit) -> Result<f64> {
    if f1.degree() != 1 || f2.degree() != 1 {
        return Err(Error::InvalidParams(
            "intersection requires two degree-1 fits".into(),
        ));
    }
    let dslope = f1.slope() - f2.slope();
    if dslope.abs() < PARALLEL_SLOPE_EPS {
        return Err(Error::NoIntersection);
    }
    Ok(10f64.powf((f2.intercept() - f1.intercept()) / dslope))
}

struct Candidate {
    split: u32,
    inliers: Vec<bool>,
    count: usize,
    residual: f64,
    iteration: u32,
}

impl Candidate {
    /// True when `self` beats `other`: larger consensus, then smaller
    /// weighted residual, then lower split, then earlier iteration.
    fn beats(&self, other: &Self) -> bool {
        if self.count != other.count {
            return self.count > other.count;
        }
        if self.residual != other.residual {
            return self.residual < other.residual;
        }
        if self.split != other.split {
            return self.split < other.split;
        }
        self.iteration < other.iteration
    }
}

/// Robust two-line fit; deterministic given `(h, em, p.seed)`.
pub fn ransac_two_lines(
    h: &SizeHistogram,
    em: ErrorModel,
    p: RansacParams,
) -> Result<BreakpointResult> {
    p.validate()?;
    let m = p.min_segment_points;

    // Positive-count bins only; zero bins have no log-space position.
    let points: Vec<(usize, u32, LogPoint)> = h
        .bins()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.count() > 0.0)
        .map(|(i, b)| Ok((i, b.size(), LogPoint::from_bin(b.size(), b.count())?)))
        .collect::<Result<_>>()?;
    if points.len() < 2 * m {
        return Err(Error::Underdetermined {
            needed: 2 * m,
            got: points.len(),
        });
    }

    // Candidate splits: sizes with at least m positive bins on each side
    // (left: size <= split, right: size > split).
    let span = h.span();
    let splits: Vec<u32> = (span.lo()..span.hi())
        .filter(|&t| {
            let left = points.iter().filter(|(_, s, _)| *s <= t).count();
            left >= m && points.len() - left >= m
        })
        .collect();
    if splits.is_empty() {
        return Err(Error::Underdetermined {
            needed: 2 * m,
            got: points.len(),
        });
    }

    let k = em.inflation();
    // A consensus side must support a refit with dof >= 1.
    let refit_min = m.max(3);

    let mut best: Option<Candidate> = None;
    for iteration in 0..p.iterations {
        let mut rng = SplitMix64::substream(p.seed, iteration as u64);
        let split = splits[rng.next_index(splits.len())];
        let boundary = points.partition_point(|(_, s, _)| *s <= split);
        let (left_pool, right_pool) = points.split_at(boundary);

        let left_line = match sample_line(&mut rng, left_pool, m, em) {
            Some(line) => line,
            None => continue,
        };
        let right_line = match sample_line(&mut rng, right_pool, m, em) {
            Some(line) => line,
            None => continue,
        };

        let mut inliers = vec![false; points.len()];
        let mut count = 0usize;
        let mut left_count = 0usize;
        let mut residual = 0.0;
        for (j, (_, size, pt)) in points.iter().enumerate() {
            let line = if *size <= split { &left_line } else { &right_line };
            let sigma = k * pt.sigma_unit;
            let r = (pt.y - line.evaluate_log10(pt.x)).abs();
            if r <= p.inlier_threshold_sigmas * sigma {
                inliers[j] = true;
                count += 1;
                if *size <= split {
                    left_count += 1;
                }
                residual += (r / sigma) * (r / sigma);
            }
        }
        if left_count < refit_min || count - left_count < refit_min {
            continue;
        }

        let candidate = Candidate {
            split,
            inliers,
            count,
            residual,
            iteration,
        };
        if best.as_ref().is_none_or(|b| candidate.beats(b)) {
            best = Some(candidate);
        }
    }

    let best = best.ok_or(Error::NoConsensus {
        iterations: p.iterations,
    })?;

    // Refit each side on its consensus set.
    let consensus =
        |side_left: bool| -> Vec<&(usize, u32, LogPoint)> {
            points
                .iter()
                .zip(&best.inliers)
                .filter(|((_, s, _), &inl)| inl && ((*s <= best.split) == side_left))
                .map(|(p, _)| p)
                .collect()
        };
    let left_set = consensus(true);
    let right_set = consensus(false);
    let left_fit = refit(&left_set, em)?;
    let right_fit = refit(&right_set, em)?;

    let dslope = left_fit.slope() - right_fit.slope();
    let collinear = dslope.abs() < PARALLEL_SLOPE_EPS;
    let break_size = if collinear {
        None
    } else {
        Some(intersect_lines(&left_fit, &right_fit)?)
    };
    let extrapolated = break_size
        .map(|a| a <= span.lo() as f64 || a >= span.hi() as f64)
        .unwrap_or(false);
    let combined_sigma = (left_fit.covariance()[1][1].max(0.0)
        + right_fit.covariance()[1][1].max(0.0))
    .sqrt();
    let break_detected = !collinear && dslope.abs() > 3.0 * combined_sigma;

    // Final labels: side of A* when it exists, side of the split otherwise;
    // a bin is an inlier of its side if within threshold of that side's
    // refit line. Bins exactly at an integer A* go left (the below-break
    // law includes the break size).
    let mut assignments = vec![SegmentLabel::Outlier; h.bins().len()];
    for (bin_idx, size, pt) in &points {
        let is_left = match break_size {
            Some(a_star) => (*size as f64) <= a_star,
            None => *size <= best.split,
        };
        let (line, label) = if is_left {
            (&left_fit, SegmentLabel::Left)
        } else {
            (&right_fit, SegmentLabel::Right)
        };
        let r = (pt.y - line.evaluate_log10(pt.x)).abs();
        if r <= p.inlier_threshold_sigmas * k * pt.sigma_unit {
            assignments[*bin_idx] = label;
        }
    }

    Ok(BreakpointResult {
        left_fit,
        right_fit,
        break_size,
        assignments,
        consensus_score: best.count,
        collinear,
        extrapolated,
        break_detected,
        split_size: best.split,
    })
}

/// Degree-1 WLS line through a random sample of `m` pool points.
fn sample_line(
    rng: &mut SplitMix64,
    pool: &[(usize, u32, LogPoint)],
    m: usize,
    em: ErrorModel,
) -> Option<SampledLine> {
    let picked = rng.sample_distinct(pool.len(), m);
    let pts: Vec<LogPoint> = picked.iter().map(|&i| pool[i].2).collect();
    SampledLine::fit(&pts, em)
}

/// Minimal degree-1 weighted fit used inside the search loop. Unlike
/// [`LogLogFit`] it accepts 2-point samples (no dof requirement).
struct SampledLine {
    intercept: f64,
    slope: f64,
}

impl SampledLine {
    fn fit(pts: &[LogPoint], _em: ErrorModel) -> Option<Self> {
        // The WLS line is invariant under a global weight scale, so the
        // inflation factor drops out here.
        let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in pts {
            let w = 1.0 / (p.sigma_unit * p.sigma_unit);
            sw += w;
            swx += w * p.x;
            swy += w * p.y;
            swxx += w * p.x * p.x;
            swxy += w * p.x * p.y;
        }
        let det = sw * swxx - swx * swx;
        if det.abs() < 1e-13 * (sw * swxx).abs().max(1.0) {
            return None;
        }
        let slope = (sw * swxy - swx * swy) / det;
        let intercept = (swxx * swy - swx * swxy) / det;
        Some(Self { intercept, slope })
    }

    fn evaluate_log10(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

fn refit(set: &[&(usize, u32, LogPoint)], em: ErrorModel) -> Result<LogLogFit> {
    let pts: Vec<LogPoint> = set.iter().map(|(_, _, p)| *p).collect();
    let lo = set.iter().map(|(_, s, _)| *s).min().unwrap();
    let hi = set.iter().map(|(_, s, _)| *s).max().unwrap();
    wls_polyfit(&pts, 1, em, SizeRange::new(lo, hi)?)
}
