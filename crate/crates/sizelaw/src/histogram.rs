//! Size-frequency histograms: the observed n(A), validated at construction.
//!
//! A histogram maps an entity size `A` (workers per firm) to a count `n(A)`
//! (number of firms of that size). Counts are real-valued because multi-year
//! averages are fractional. Sizes must be contiguous: downstream scenario
//! sums assume every size in the span is represented.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// One histogram bin: `count` entities of size `size`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeBin {
    size: u32,
    count: f64,
}

impl SizeBin {
    /// `size >= 1`, `count >= 0` and finite.
    pub fn new(size: u32, count: f64) -> Result<Self> {
        if size < 1 {
            return Err(Error::Domain("bin size must be >= 1".into()));
        }
        if !count.is_finite() || count < 0.0 {
            return Err(Error::Domain(format!(
                "count for size {size} must be finite and >= 0, got {count}"
            )));
        }
        Ok(Self { size, count })
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn count(&self) -> f64 {
        self.count
    }
}

/// Inclusive size range `lo..=hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SizeRange {
    lo: u32,
    hi: u32,
}

impl SizeRange {
    pub fn new(lo: u32, hi: u32) -> Result<Self> {
        if lo < 1 {
            return Err(Error::Domain("range lower bound must be >= 1".into()));
        }
        if lo > hi {
            return Err(Error::Domain(format!("range {lo}:{hi} has lo > hi")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> u32 {
        self.lo
    }

    pub fn hi(&self) -> u32 {
        self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false // lo <= hi by construction
    }

    pub fn contains(&self, size: u32) -> bool {
        self.lo <= size && size <= self.hi
    }

    pub fn sizes(&self) -> impl Iterator<Item = u32> {
        self.lo..=self.hi
    }
}

impl fmt::Display for SizeRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

impl FromStr for SizeRange {
    type Err = Error;

    /// Parses the CLI syntax `lo:hi` (inclusive).
    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::Domain(format!("range must be lo:hi with integers, got {s:?}"));
        let (lo, hi) = s.split_once(':').ok_or_else(err)?;
        let lo: u32 = lo.trim().parse().map_err(|_| err())?;
        let hi: u32 = hi.trim().parse().map_err(|_| err())?;
        SizeRange::new(lo, hi)
    }
}

/// A validated size-frequency histogram.
///
/// Invariants: at least 2 bins, sizes strictly increasing and contiguous.
/// Values are immutable after construction and safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeHistogram {
    bins: Vec<SizeBin>,
    label: String,
}

pub const CSV_HEADER: &str = "workers,count";

impl SizeHistogram {
    /// Builds a histogram from bins (any order). Fails on duplicates, gaps,
    /// or fewer than 2 bins.
    pub fn new(mut bins: Vec<SizeBin>, label: impl Into<String>) -> Result<Self> {
        if bins.len() < 2 {
            return Err(Error::Underdetermined {
                needed: 2,
                got: bins.len(),
            });
        }
        bins.sort_by_key(|b| b.size);
        for pair in bins.windows(2) {
            if pair[1].size == pair[0].size {
                return Err(Error::DuplicateBin { size: pair[0].size });
            }
            if pair[1].size != pair[0].size + 1 {
                return Err(Error::NonContiguous {
                    missing: pair[0].size + 1,
                });
            }
        }
        Ok(Self {
            bins,
            label: label.into(),
        })
    }

    /// Reads the two-column CSV format (header `workers,count`).
    pub fn from_csv(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut bins = Vec::new();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_start_matches('\u{feff}').trim_end() == CSV_HEADER => {
            }
            Some((_, header)) => {
                return Err(Error::MalformedInput {
                    line: 1,
                    reason: format!("expected header {CSV_HEADER:?}, got {header:?}"),
                })
            }
            None => {
                return Err(Error::MalformedInput {
                    line: 1,
                    reason: "empty input".into(),
                })
            }
        }
        for (idx, raw) in lines {
            let line_no = idx + 1;
            let line = raw.trim_end();
            if line.is_empty() {
                continue;
            }
            let (size_s, count_s) = line.split_once(',').ok_or(Error::MalformedInput {
                line: line_no,
                reason: "expected two comma-separated fields".into(),
            })?;
            let size: u32 = size_s.trim().parse().map_err(|_| Error::MalformedInput {
                line: line_no,
                reason: format!("invalid size {size_s:?}"),
            })?;
            let count: f64 = count_s.trim().parse().map_err(|_| Error::MalformedInput {
                line: line_no,
                reason: format!("invalid count {count_s:?}"),
            })?;
            bins.push(SizeBin::new(size, count)?);
        }
        Self::new(bins, label)
    }

    /// Writes the CSV format. Counts are printed in shortest form that
    /// parses back to the identical f64, so save/load round-trips exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(16 * self.bins.len() + 16);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for b in &self.bins {
            out.push_str(&format!("{},{}\n", b.size, b.count));
        }
        out
    }

    /// Loads a histogram from a CSV file; the label is the file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_csv(&text, label)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn bins(&self) -> &[SizeBin] {
        &self.bins
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn span(&self) -> SizeRange {
        SizeRange {
            lo: self.bins[0].size,
            hi: self.bins[self.bins.len() - 1].size,
        }
    }

    pub fn count_at(&self, size: u32) -> Option<f64> {
        let span = self.span();
        if !span.contains(size) {
            return None;
        }
        Some(self.bins[(size - span.lo) as usize].count)
    }

    fn check_range(&self, r: SizeRange) -> Result<()> {
        let span = self.span();
        if r.lo < span.lo || r.hi > span.hi {
            return Err(Error::RangeOutsideSpan {
                lo: r.lo,
                hi: r.hi,
                span_lo: span.lo,
                span_hi: span.hi,
            });
        }
        Ok(())
    }

    /// Bins restricted to `r`, in size order.
    pub fn slice(&self, r: SizeRange) -> Result<&[SizeBin]> {
        self.check_range(r)?;
        let lo = (r.lo - self.span().lo) as usize;
        Ok(&self.bins[lo..lo + r.len()])
    }

    /// Total entity count Σ n(A) over `r`.
    pub fn total_firms(&self, r: SizeRange) -> Result<f64> {
        Ok(self.slice(r)?.iter().map(|b| b.count).sum())
    }

    /// Total size-weighted count Σ A·n(A) over `r` (total workers).
    pub fn total_workers(&self, r: SizeRange) -> Result<f64> {
        Ok(self
            .slice(r)?
            .iter()
            .map(|b| b.size as f64 * b.count)
            .sum())
    }

    /// Same sizes/label, new counts. Used by scenario and resampling code.
    pub fn with_counts(&self, counts: Vec<f64>) -> Result<Self> {
        if counts.len() != self.bins.len() {
            return Err(Error::Domain(format!(
                "expected {} counts, got {}",
                self.bins.len(),
                counts.len()
            )));
        }
        let bins = self
            .bins
            .iter()
            .zip(counts)
            .map(|(b, c)| SizeBin::new(b.size, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            bins,
            label: self.label.clone(),
        })
    }
}
