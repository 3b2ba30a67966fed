//! Position estimation from averaged beacon RSSI.
//!
//! [`localize`] runs the full decision flow for one round:
//!
//! 1. keep the four strongest reports, or give up with [`Method::NoFix`];
//! 2. if those four bound a rectangle, range each corner and solve the
//!    closed-form in-cell position ([`Method::Refined`]);
//! 3. otherwise, when cell completion is on, look for a fully reported cell
//!    around the strongest beacon and refine inside it;
//! 4. if one beacon is very close, step out from it towards the previous fix
//!    ([`Method::NearBeacon`]);
//! 5. otherwise split the four into two axis-aligned pairs and laterate one
//!    axis from each ([`Method::PairSplit`]), falling back to a power-weighted
//!    centroid when no such split exists.
//!
//! The path-loss exponent used for ranging is adapted online from a
//! beacon-to-beacon link with known length, see [`adapt_n`] and [`calibrate`].

use alloc::vec::Vec;
use core::fmt;
use thiserror::Error;

use crate::channel::{invert_path_loss, rss_to_distance, DistanceBounds};
use crate::geometry::{cell_of_corners, containing_cell, is_rectangle, CellId, GridSpec, Point, Rect, GEO_EPS};

/// Adapted exponents are clamped into this range.
pub const N_MIN: f64 = 1.0;
pub const N_MAX: f64 = 6.0;

/// Near-beacon trigger as a fraction of the lattice spacing.
pub const DEFAULT_NEAR_BEACON_TAU: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EstimatorError {
    #[error("fewer than four beacon reports ({0})")]
    InsufficientBeacons(usize),
    #[error("calibration distance {0} m gives a degenerate logarithm base")]
    DegenerateBase(f64),
    #[error("path-loss exponent must be positive, got {0}")]
    BadExponent(f64),
    #[error("corner geometry is degenerate")]
    DegenerateGeometry,
    #[error("no axis-aligned pair split exists")]
    UnsupportedGeometry,
}

/// Averaged RSSI that one beacon returned to the blind node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RssiReport {
    pub beacon_pos: Point,
    pub avg_rssi_dbm: f64,
    pub sample_count: u32,
}

impl RssiReport {
    pub fn new(beacon_pos: Point, avg_rssi_dbm: f64, sample_count: u32) -> Self {
        Self {
            beacon_pos,
            avg_rssi_dbm,
            sample_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Refined,
    PairSplit,
    NearBeacon,
    NoFix,
    /// Only produced by the comparison baseline, never by [`localize`].
    WeightedCentroid,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Refined => "refined",
            Method::PairSplit => "pair_split",
            Method::NearBeacon => "near_beacon",
            Method::NoFix => "no_fix",
            Method::WeightedCentroid => "weighted_centroid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "refined" => Method::Refined,
            "pair_split" => Method::PairSplit,
            "near_beacon" => Method::NearBeacon,
            "no_fix" => Method::NoFix,
            "weighted_centroid" => Method::WeightedCentroid,
            _ => return None,
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A position fix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    /// `None` exactly when `method` is [`Method::NoFix`].
    pub pos: Option<Point>,
    pub method: Method,
    /// Cell resolved by the coarse phase, when there was one.
    pub cell: Option<CellId>,
    pub n_used: f64,
    /// Set when the pair split was impossible and the power-weighted centroid
    /// was reported instead.
    pub centroid_fallback: bool,
}

impl Estimate {
    pub fn no_fix(n_used: f64) -> Self {
        Self {
            pos: None,
            method: Method::NoFix,
            cell: None,
            n_used,
            centroid_fallback: false,
        }
    }

    fn fix(pos: Point, method: Method, cell: Option<CellId>, n_used: f64) -> Self {
        Self {
            pos: Some(pos),
            method,
            cell,
            n_used,
            centroid_fallback: false,
        }
    }
}

/// Static estimator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub grid: GridSpec,
    /// Reference power at 1 m used for ranging.
    pub a_dbm: f64,
    /// Initial path-loss exponent.
    pub n_prime: f64,
    pub near_beacon_tau: f64,
    pub distance_bounds: DistanceBounds,
    /// Try to resolve a fully reported cell when the strongest four are not one.
    pub cell_completion: bool,
}

impl EstimatorConfig {
    pub fn new(grid: GridSpec) -> Self {
        Self {
            grid,
            a_dbm: -45.0,
            n_prime: 2.0,
            near_beacon_tau: DEFAULT_NEAR_BEACON_TAU,
            distance_bounds: DistanceBounds::for_radius(30.0),
            cell_completion: true,
        }
    }

    fn range(&self, rssi_dbm: f64, n: f64) -> f64 {
        rss_to_distance(rssi_dbm, self.a_dbm, n, self.distance_bounds).distance_m
    }
}

/// Per-blind-node memory carried between rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorState {
    pub n_current: f64,
    pub last_cell: Option<CellId>,
    pub last_estimate: Option<Point>,
}

impl EstimatorState {
    pub fn new(config: &EstimatorConfig) -> Self {
        Self {
            n_current: config.n_prime,
            last_cell: None,
            last_estimate: None,
        }
    }
}

/// RSSI measured over a beacon-to-beacon link of known length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationLink {
    pub rss_dbm: f64,
    pub true_dist_m: f64,
}

fn by_strength(a: &RssiReport, b: &RssiReport) -> core::cmp::Ordering {
    b.avg_rssi_dbm
        .total_cmp(&a.avg_rssi_dbm)
        .then_with(|| a.beacon_pos.lex_cmp(&b.beacon_pos))
}

/// The four strongest reports, strongest first. Ties go to the
/// lexicographically smaller beacon position.
pub fn select_top4(reports: &[RssiReport]) -> Result<[RssiReport; 4], EstimatorError> {
    if reports.len() < 4 {
        return Err(EstimatorError::InsufficientBeacons(reports.len()));
    }
    let mut sorted: Vec<RssiReport> = reports.to_vec();
    sorted.sort_by(by_strength);
    Ok([sorted[0], sorted[1], sorted[2], sorted[3]])
}

/// Path-loss exponent implied by a link of known length `true_dist_m` whose
/// RSSI ranges to `d'` under the current exponent `n_prime`:
/// `n = n' * log_d(d')`.
///
/// `d'` is the unclamped inverse. The result is clamped to `[N_MIN, N_MAX]`.
pub fn adapt_n(rss_between_beacons: f64, true_dist_m: f64, n_prime: f64, a_dbm: f64) -> Result<f64, EstimatorError> {
    if !(n_prime.is_finite() && n_prime > 0.0) {
        return Err(EstimatorError::BadExponent(n_prime));
    }
    if !(true_dist_m.is_finite() && true_dist_m > 0.0) || (true_dist_m - 1.0).abs() < 1e-9 {
        return Err(EstimatorError::DegenerateBase(true_dist_m));
    }
    let d_est = invert_path_loss(rss_between_beacons, a_dbm, n_prime);
    let n = n_prime * libm::log(d_est) / libm::log(true_dist_m);
    if n.is_nan() {
        return Ok(n_prime.clamp(N_MIN, N_MAX));
    }
    Ok(n.clamp(N_MIN, N_MAX))
}

/// One adaptation step on the running exponent.
pub fn calibrate(
    state: &EstimatorState,
    link: CalibrationLink,
    config: &EstimatorConfig,
) -> Result<EstimatorState, EstimatorError> {
    let n_current = adapt_n(link.rss_dbm, link.true_dist_m, state.n_current, config.a_dbm)?;
    Ok(EstimatorState { n_current, ..*state })
}

/// Closed-form position inside an axis-aligned rectangle from the four
/// corner ranges.
///
/// With `x1 < x2` the left/right columns and `y1 > y2` the top/bottom rows,
/// ranges `d1..d4` belong to top-left, top-right, bottom-right and
/// bottom-left. Each of the two row pairs gives one `x`; the result is their
/// mean, and likewise for `y`. The point is clamped into `rect`.
pub fn refine_in_cell(corners: &[(Point, f64); 4], rect: Rect) -> Result<Point, EstimatorError> {
    let (x1, x2) = (rect.min.x, rect.max.x);
    let (y1, y2) = (rect.max.y, rect.min.y);
    if (x1 - x2).abs() <= GEO_EPS || (y1 - y2).abs() <= GEO_EPS {
        return Err(EstimatorError::DegenerateGeometry);
    }
    let range_at = |x: f64, y: f64| -> Result<f64, EstimatorError> {
        let target = Point::new(x, y);
        let mut hits = corners.iter().filter(|(p, _)| p.approx_eq(&target));
        match (hits.next(), hits.next()) {
            (Some((_, d)), None) => Ok(*d),
            _ => Err(EstimatorError::DegenerateGeometry),
        }
    };
    let d1 = range_at(x1, y1)?;
    let d2 = range_at(x2, y1)?;
    let d3 = range_at(x2, y2)?;
    let d4 = range_at(x1, y2)?;
    let (s1, s2, s3, s4) = (d1 * d1, d2 * d2, d3 * d3, d4 * d4);
    let x = 0.5 * (x1 + x2 - ((s1 + s4) - (s2 + s3)) / (2.0 * (x1 - x2)));
    let y = 0.5 * (y1 + y2 - ((s1 + s2) - (s3 + s4)) / (2.0 * (y1 - y2)));
    Ok(rect.clamp(Point::new(x, y)))
}

fn ranged_corners(quad: &[RssiReport; 4], n: f64, config: &EstimatorConfig) -> [(Point, f64); 4] {
    quad.map(|r| (r.beacon_pos, config.range(r.avg_rssi_dbm, n)))
}

fn bounding_rect(points: &[Point; 4]) -> Rect {
    let mut rect = Rect {
        min: points[0],
        max: points[0],
    };
    for p in &points[1..] {
        rect.min.x = rect.min.x.min(p.x);
        rect.min.y = rect.min.y.min(p.y);
        rect.max.x = rect.max.x.max(p.x);
        rect.max.y = rect.max.y.max(p.y);
    }
    rect
}

const MATCHINGS: [[(usize, usize); 2]; 3] = [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]];

/// One-axis lateration between two beacons on a common line.
fn laterate_axis(c1: f64, c2: f64, d1: f64, d2: f64) -> f64 {
    0.5 * (c1 + c2) + (d1 * d1 - d2 * d2) / (2.0 * (c2 - c1))
}

/// Estimate for a non-rectangular quadruple.
///
/// The four reports are split into two pairs with the smallest total
/// in-pair RSSI difference. The pair on a common row gives `x`, the pair on
/// a common column gives `y`. When the cheapest split lacks either kind of
/// pair the next cheapest is tried. The result is clamped into the lattice.
pub fn pair_split_estimate(
    quad: &[RssiReport; 4],
    n_used: f64,
    config: &EstimatorConfig,
) -> Result<Point, EstimatorError> {
    let mut sorted = *quad;
    sorted.sort_by(|a, b| a.beacon_pos.lex_cmp(&b.beacon_pos));
    let cost = |m: &[(usize, usize); 2]| {
        m.iter()
            .map(|&(i, j)| (sorted[i].avg_rssi_dbm - sorted[j].avg_rssi_dbm).abs())
            .sum::<f64>()
    };
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| cost(&MATCHINGS[a]).total_cmp(&cost(&MATCHINGS[b])).then(a.cmp(&b)));

    for k in order {
        let mut x = None;
        let mut y = None;
        for &(i, j) in &MATCHINGS[k] {
            let (a, b) = (sorted[i], sorted[j]);
            let (pa, pb) = (a.beacon_pos, b.beacon_pos);
            let da = config.range(a.avg_rssi_dbm, n_used);
            let db = config.range(b.avg_rssi_dbm, n_used);
            if (pa.y - pb.y).abs() <= GEO_EPS && (pa.x - pb.x).abs() > GEO_EPS {
                x = Some(laterate_axis(pa.x, pb.x, da, db));
            } else if (pa.x - pb.x).abs() <= GEO_EPS && (pa.y - pb.y).abs() > GEO_EPS {
                y = Some(laterate_axis(pa.y, pb.y, da, db));
            }
        }
        if let (Some(x), Some(y)) = (x, y) {
            return Ok(config.grid.bounds().clamp(Point::new(x, y)));
        }
    }
    Err(EstimatorError::UnsupportedGeometry)
}

/// Estimate when the blind node is close to a single beacon.
///
/// The node is put on the circle of the ranged radius around the beacon, in
/// the direction of the previous fix (or the previous cell's center). With no
/// usable history the beacon position itself is returned.
pub fn near_beacon_estimate(
    max_report: &RssiReport,
    state: &EstimatorState,
    n_used: f64,
    config: &EstimatorConfig,
) -> Point {
    let beacon = max_report.beacon_pos;
    let r = config.range(max_report.avg_rssi_dbm, n_used);
    let towards = |target: Point| {
        let len = target.dist(&beacon);
        (len > GEO_EPS).then(|| ((target.x - beacon.x) / len, (target.y - beacon.y) / len))
    };
    let direction = state
        .last_estimate
        .and_then(towards)
        .or_else(|| state.last_cell.map(|c| config.grid.cell_center(c)).and_then(towards))
        .unwrap_or((0.0, 0.0));
    let p = Point::new(beacon.x + r * direction.0, beacon.y + r * direction.1);
    config.grid.bounds().clamp(p)
}

/// Centroid of beacon positions weighted by linear received power.
pub fn weighted_centroid(reports: &[RssiReport]) -> Option<Point> {
    let peak = reports.iter().map(|r| r.avg_rssi_dbm).fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return None;
    }
    let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
    for r in reports {
        let w = libm::pow(10.0, (r.avg_rssi_dbm - peak) / 10.0);
        sx += w * r.beacon_pos.x;
        sy += w * r.beacon_pos.y;
        sw += w;
    }
    (sw > 0.0).then(|| Point::new(sx / sw, sy / sw))
}

/// Cell around the strongest beacon whose four corners are all reported,
/// choosing the one whose weakest corner is strongest, then the one with the
/// larger corner RSSI sum.
fn complete_cell(
    reports: &[RssiReport],
    strongest: &RssiReport,
    config: &EstimatorConfig,
) -> Option<(CellId, [RssiReport; 4])> {
    let grid = &config.grid;
    let (col, row) = grid.vertex_of(strongest.beacon_pos)?;
    let mut best: Option<((f64, f64), CellId, [RssiReport; 4])> = None;
    for cell in grid.cells_around(col, row) {
        let mut quad = [*strongest; 4];
        let mut complete = true;
        for (slot, corner) in quad.iter_mut().zip(grid.corners_of(cell)) {
            match reports
                .iter()
                .filter(|r| r.beacon_pos.approx_eq(&corner))
                .max_by(|a, b| a.avg_rssi_dbm.total_cmp(&b.avg_rssi_dbm))
            {
                Some(r) => *slot = *r,
                None => {
                    complete = false;
                    break;
                }
            }
        }
        if !complete {
            continue;
        }
        let weakest = quad.iter().map(|r| r.avg_rssi_dbm).fold(f64::INFINITY, f64::min);
        let sum: f64 = quad.iter().map(|r| r.avg_rssi_dbm).sum();
        let key = (weakest, sum);
        // strict comparison keeps the first (lowest row, then column) cell on full ties
        let better = |(w, s): &(f64, f64)| key.0 > *w || (key.0 == *w && key.1 > *s);
        if best.as_ref().is_none_or(|(k, _, _)| better(k)) {
            best = Some((key, cell, quad));
        }
    }
    best.map(|(_, cell, quad)| (cell, quad))
}

/// Runs one localization round and returns the fix and the updated state.
pub fn localize(
    reports: &[RssiReport],
    state: &EstimatorState,
    config: &EstimatorConfig,
) -> (Estimate, EstimatorState) {
    let n = state.n_current;
    let usable: Vec<RssiReport> = reports
        .iter()
        .copied()
        .filter(|r| r.avg_rssi_dbm.is_finite() && r.beacon_pos.is_finite())
        .collect();
    let top4 = match select_top4(&usable) {
        Ok(top4) => top4,
        Err(_) => return (Estimate::no_fix(n), *state),
    };

    let estimate = dispatch(&usable, &top4, state, config);
    let mut next = *state;
    if let Some(pos) = estimate.pos {
        next.last_estimate = Some(pos);
        next.last_cell = estimate.cell.or_else(|| containing_cell(pos, &config.grid).ok());
    }
    (estimate, next)
}

fn dispatch(
    reports: &[RssiReport],
    top4: &[RssiReport; 4],
    state: &EstimatorState,
    config: &EstimatorConfig,
) -> Estimate {
    let n = state.n_current;
    let positions = top4.map(|r| r.beacon_pos);

    if is_rectangle(&positions) {
        let cell = cell_of_corners(&positions, &config.grid).ok();
        let rect = cell.map_or_else(|| bounding_rect(&positions), |c| config.grid.cell_rect(c));
        if let Ok(pos) = refine_in_cell(&ranged_corners(top4, n, config), rect) {
            return Estimate::fix(pos, Method::Refined, cell, n);
        }
    }

    if config.cell_completion {
        if let Some((cell, quad)) = complete_cell(reports, &top4[0], config) {
            if let Ok(pos) = refine_in_cell(&ranged_corners(&quad, n, config), config.grid.cell_rect(cell)) {
                return Estimate::fix(pos, Method::Refined, Some(cell), n);
            }
        }
    }

    let r = config.range(top4[0].avg_rssi_dbm, n);
    if r < config.near_beacon_tau * config.grid.spacing_m {
        let pos = near_beacon_estimate(&top4[0], state, n, config);
        return Estimate::fix(pos, Method::NearBeacon, None, n);
    }

    match pair_split_estimate(top4, n, config) {
        Ok(pos) => Estimate::fix(pos, Method::PairSplit, None, n),
        Err(_) => {
            let pos = weighted_centroid(top4).unwrap_or(top4[0].beacon_pos);
            Estimate {
                centroid_fallback: true,
                ..Estimate::fix(config.grid.bounds().clamp(pos), Method::PairSplit, None, n)
            }
        }
    }
}
