//! Error statistics over round records.

use alloc::vec::Vec;
use thiserror::Error;

use crate::channel::invert_path_loss;
use crate::geometry::Point;
use crate::sim::RoundRecord;

/// Finite bucket edges in meters; the last bucket is open-ended.
pub const DEFAULT_EDGES: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("bucket edges must be positive, finite and strictly increasing")]
    BadEdges,
    #[error("record sets differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("records at index {0} have different true positions")]
    PositionMismatch(usize),
    #[error("expected {expected} records for the sweep, got {got}")]
    SurfaceShape { expected: usize, got: usize },
}

/// Error histogram. Bucket `k` is `[lo_k, hi_k)` with `lo_0 = 0` and
/// `hi_last = inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBuckets {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// `None` when no record had a fix.
    pub fractions: Option<Vec<f64>>,
    pub no_fix: usize,
}

impl ErrorBuckets {
    pub fn fixed(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn total(&self) -> usize {
        self.fixed() + self.no_fix
    }

    /// `(lo, hi)` per bucket.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.counts.len());
        let mut lo = 0.0;
        for &e in &self.edges {
            out.push((lo, e));
            lo = e;
        }
        out.push((lo, f64::INFINITY));
        out
    }

    /// Fraction of fixed records with error below each finite edge.
    pub fn fraction_below(&self) -> Option<Vec<f64>> {
        let fractions = self.fractions.as_ref()?;
        let mut acc = 0.0;
        Some(
            fractions[..self.edges.len()]
                .iter()
                .map(|f| {
                    acc += f;
                    acc
                })
                .collect(),
        )
    }

    /// Fraction below `edge`, which must be one of the finite edges.
    pub fn fraction_below_edge(&self, edge: f64) -> Option<f64> {
        let k = self.edges.iter().position(|e| (e - edge).abs() < 1e-12)?;
        Some(self.fraction_below()?[k])
    }
}

fn check_edges(edges: &[f64]) -> Result<(), HarnessError> {
    let ok = edges.iter().all(|e| e.is_finite() && *e > 0.0) && edges.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(HarnessError::BadEdges)
    }
}

pub fn bucketize(records: &[RoundRecord], edges: &[f64]) -> Result<ErrorBuckets, HarnessError> {
    check_edges(edges)?;
    let mut counts = alloc::vec![0usize; edges.len() + 1];
    let mut no_fix = 0;
    for r in records {
        match r.error_m {
            Some(e) => counts[edges.partition_point(|&edge| edge <= e)] += 1,
            None => no_fix += 1,
        }
    }
    let fixed: usize = counts.iter().sum();
    let fractions = (fixed > 0).then(|| counts.iter().map(|&c| c as f64 / fixed as f64).collect());
    Ok(ErrorBuckets {
        edges: edges.to_vec(),
        counts,
        fractions,
        no_fix,
    })
}

pub fn errors(records: &[RoundRecord]) -> Vec<f64> {
    records.iter().filter_map(|r| r.error_m).collect()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        0.5 * (v[mid - 1] + v[mid])
    } else {
        v[mid]
    })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub x: f64,
    pub y: f64,
    pub error_m: Option<f64>,
}

/// Errors of a lattice sweep as a `rows x cols` grid, row-major.
pub fn error_surface(
    records: &[RoundRecord],
    cols: usize,
    rows: usize,
) -> Result<Vec<Vec<SurfacePoint>>, HarnessError> {
    if records.len() != cols * rows || cols == 0 {
        return Err(HarnessError::SurfaceShape {
            expected: cols * rows,
            got: records.len(),
        });
    }
    Ok(records
        .chunks(cols)
        .map(|row| {
            row.iter()
                .map(|r| SurfacePoint {
                    x: r.true_pos.x,
                    y: r.true_pos.y,
                    error_m: r.error_m,
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemSummary {
    pub buckets: ErrorBuckets,
    pub median_m: Option<f64>,
    pub mean_m: Option<f64>,
}

impl SystemSummary {
    pub fn of(records: &[RoundRecord], edges: &[f64]) -> Result<Self, HarnessError> {
        let e = errors(records);
        Ok(Self {
            buckets: bucketize(records, edges)?,
            median_m: median(&e),
            mean_m: mean(&e),
        })
    }
}

/// Side-by-side statistics of two systems over the same points.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub a: SystemSummary,
    pub b: SystemSummary,
    /// Among rounds where both have a fix, the share where `a` is strictly better.
    pub a_beats_b: Option<f64>,
}

impl Comparison {
    /// Per-bucket `(lo, hi, fraction_a, fraction_b, a - b)`.
    pub fn bucket_rows(&self) -> Vec<(f64, f64, f64, f64, f64)> {
        let fa = self
            .a
            .buckets
            .fractions
            .clone()
            .unwrap_or_else(|| alloc::vec![0.0; self.a.buckets.counts.len()]);
        let fb = self
            .b
            .buckets
            .fractions
            .clone()
            .unwrap_or_else(|| alloc::vec![0.0; self.b.buckets.counts.len()]);
        self.a
            .buckets
            .bounds()
            .into_iter()
            .zip(fa.iter().zip(fb.iter()))
            .map(|((lo, hi), (a, b))| (lo, hi, *a, *b, a - b))
            .collect()
    }
}

pub fn compare(a: &[RoundRecord], b: &[RoundRecord], edges: &[f64]) -> Result<Comparison, HarnessError> {
    if a.len() != b.len() {
        return Err(HarnessError::LengthMismatch(a.len(), b.len()));
    }
    if let Some(k) = a
        .iter()
        .zip(b)
        .position(|(ra, rb)| !ra.true_pos.approx_eq(&rb.true_pos))
    {
        return Err(HarnessError::PositionMismatch(k));
    }
    let mut both = 0usize;
    let mut wins = 0usize;
    for (ra, rb) in a.iter().zip(b) {
        if let (Some(ea), Some(eb)) = (ra.error_m, rb.error_m) {
            both += 1;
            if ea < eb {
                wins += 1;
            }
        }
    }
    Ok(Comparison {
        a: SystemSummary::of(a, edges)?,
        b: SystemSummary::of(b, edges)?,
        a_beats_b: (both > 0).then(|| wins as f64 / both as f64),
    })
}

/// Expected absolute ranging error at `distance_m` when each range comes
/// from the dBm mean of `samples` shadowed readings with deviation `sigma_dbm`.
///
/// Evaluated by composite Simpson quadrature over the Gaussian of the
/// averaged shadowing, `N(0, sigma / sqrt(samples))`, truncated at 10 sigma.
pub fn expected_ranging_error(distance_m: f64, n_exp: f64, sigma_dbm: f64, samples: u32) -> f64 {
    let s = sigma_dbm / libm::sqrt(f64::from(samples.max(1)));
    if s == 0.0 {
        return 0.0;
    }
    let err = |z: f64| (distance_m * invert_path_loss(z * s, 0.0, n_exp) - distance_m).abs();
    let pdf = |z: f64| libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * core::f64::consts::PI);
    let (lo, hi, steps) = (-10.0, 10.0, 4000usize);
    let h = (hi - lo) / steps as f64;
    let mut acc = 0.0;
    for k in 0..=steps {
        let z = lo + k as f64 * h;
        let w = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * err(z) * pdf(z);
    }
    acc * h / 3.0
}

/// Shadowing deviation that yields a mean ranging error of `target_m` at
/// `distance_m`, found by bisection on [`expected_ranging_error`].
pub fn calibrate_sigma(target_m: f64, distance_m: f64, n_exp: f64, samples: u32) -> f64 {
    let (mut lo, mut hi) = (0.0, 40.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if expected_ranging_error(distance_m, n_exp, mid, samples) < target_m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Points where `a` has a strictly smaller error than `b`.
pub fn winning_points(a: &[RoundRecord], b: &[RoundRecord]) -> Vec<Point> {
    a.iter()
        .zip(b)
        .filter_map(|(ra, rb)| match (ra.error_m, rb.error_m) {
            (Some(ea), Some(eb)) if ea < eb => Some(ra.true_pos),
            _ => None,
        })
        .collect()
}
