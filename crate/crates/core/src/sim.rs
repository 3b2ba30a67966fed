//! Discrete-event simulation of localization rounds.
//!
//! A [`Scenario`] fixes the lattice, the channel (including the true path-loss
//! exponent hidden from the estimator), protocol timing, a blind-node
//! trajectory and a seed. Every round runs the full message exchange over a
//! single time-ordered event queue, sampling the channel once per packet
//! reception, and then localizes from the averages that came back.
//!
//! Randomness comes only from a `ChaCha8Rng` seeded with
//! `seed_from_u64(scenario.seed)`, so a scenario and seed always reproduce the
//! same records and trace.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channel::{mean_dbm, sample_rss, ChannelParams, Reception};
use crate::estimator::{
    calibrate, localize, select_top4, weighted_centroid, CalibrationLink, Estimate, EstimatorConfig, EstimatorState,
    Method, RssiReport, DEFAULT_NEAR_BEACON_TAU,
};
use crate::geometry::{build_lattice, Beacon, BeaconId, GridSpec, Point};
use crate::protocol::{
    BeaconNodeMachine, BlindEvent, BlindNodeMachine, BlindTimer, BlindTiming, Dest, Message, NodeId, Outbound,
    RoundOutcome,
};

/// Links shorter than this are simulated at this length.
pub const MIN_LINK_M: f64 = 0.01;

const BLIND_ID: u32 = 0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub pos: Point,
    pub dwell_rounds: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    /// The blind node stays put for every round.
    Static(Point),
    /// Visit each waypoint for its dwell, cycling until the round budget is spent.
    Waypoints(Vec<Waypoint>),
    /// `cols x rows` sample points covering the lattice, visited row-major,
    /// `rounds` times each. See [`Trajectory::sweep_points`].
    LatticeSweep { cols: usize, rows: usize },
}

impl Trajectory {
    /// Sweep sample points over the lattice bounds, row-major.
    ///
    /// Samples sit at the middle of equal steps along each axis. If that puts
    /// samples of an axis on a beacon line (an odd count over an even number
    /// of cells does), the axis uses a quarter-step offset instead, so no
    /// sample ever coincides with a beacon or a cell edge.
    pub fn sweep_points(grid: &GridSpec, cols: usize, rows: usize) -> Vec<Point> {
        let b = grid.bounds();
        let xs = sweep_axis(b.min.x, b.width(), cols, grid.spacing_m);
        let ys = sweep_axis(b.min.y, b.height(), rows, grid.spacing_m);
        ys.iter()
            .flat_map(|&y| xs.iter().map(move |&x| Point::new(x, y)))
            .collect()
    }

    /// Blind-node position for each round.
    pub fn positions(&self, grid: &GridSpec, rounds: u32) -> Vec<Point> {
        match self {
            Trajectory::Static(p) => alloc::vec![*p; rounds as usize],
            Trajectory::Waypoints(points) => points
                .iter()
                .flat_map(|w| core::iter::repeat_n(w.pos, w.dwell_rounds as usize))
                .cycle()
                .take(rounds as usize)
                .collect(),
            Trajectory::LatticeSweep { cols, rows } => Self::sweep_points(grid, *cols, *rows)
                .into_iter()
                .flat_map(|p| core::iter::repeat_n(p, rounds as usize))
                .collect(),
        }
    }
}

fn sweep_axis(start: f64, length: f64, count: usize, spacing: f64) -> Vec<f64> {
    let step = length / count as f64;
    let at = |offset: f64| -> Vec<f64> { (0..count).map(|i| start + (i as f64 + offset) * step).collect() };
    let on_line = |v: &f64| {
        let u = (v - start) / spacing;
        (u - libm::round(u)).abs() * spacing < 1e-9
    };
    let half = at(0.5);
    if half.iter().any(on_line) {
        at(0.25)
    } else {
        half
    }
}

/// Estimator and protocol knobs of a scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorSettings {
    /// Initial path-loss exponent assumed by the estimator.
    pub n_prime: f64,
    pub near_beacon_tau: f64,
    pub timing: BlindTiming,
    /// Re-estimate the exponent every round from `calibration_pair`.
    pub adapt: bool,
    pub calibration_pair: (BeaconId, BeaconId),
    pub cell_completion: bool,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            n_prime: 2.0,
            near_beacon_tau: DEFAULT_NEAR_BEACON_TAU,
            timing: BlindTiming::default(),
            adapt: false,
            calibration_pair: (BeaconId(0), BeaconId(1)),
            cell_completion: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: GridSpec,
    /// `n_exp` here is the true environment exponent.
    pub channel: ChannelParams,
    pub estimator: EstimatorSettings,
    /// Beacons report integer register readings instead of real-valued RSS.
    pub quantize: bool,
    pub trajectory: Trajectory,
    pub rounds: u32,
    pub seed: u64,
}

impl Scenario {
    /// The 8 m x 8 m, 4 m spacing, 25 x 25 point sweep without noise.
    pub fn paper_sweep() -> Self {
        Self {
            grid: GridSpec::default(),
            channel: ChannelParams::default(),
            estimator: EstimatorSettings::default(),
            quantize: false,
            trajectory: Trajectory::LatticeSweep { cols: 25, rows: 25 },
            rounds: 1,
            seed: 1,
        }
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            grid: self.grid,
            a_dbm: self.channel.a_dbm,
            n_prime: self.estimator.n_prime,
            near_beacon_tau: self.estimator.near_beacon_tau,
            distance_bounds: self.channel.distance_bounds(),
            cell_completion: self.estimator.cell_completion,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.grid.validate().map_err(|e| invalid("grid", format!("{e}")))?;
        self.channel
            .validate()
            .map_err(|e| invalid("channel", format!("{e}")))?;
        let est = &self.estimator;
        if !(est.n_prime.is_finite() && est.n_prime > 0.0) {
            return Err(invalid("estimator.n_prime", "must be positive"));
        }
        if !(est.near_beacon_tau.is_finite() && est.near_beacon_tau >= 0.0) {
            return Err(invalid("estimator.near_beacon_tau", "must be non-negative"));
        }
        if est.timing.accum_count == 0 {
            return Err(invalid("estimator.accum_count", "must be at least 1"));
        }
        let count = self.grid.beacon_count() as u32;
        let (a, b) = est.calibration_pair;
        if a.0 >= count || b.0 >= count || a == b {
            return Err(invalid(
                "estimator.calibration_pair",
                format!("needs two distinct beacon ids below {count}"),
            ));
        }
        let d = self.beacon_pos(a).dist(&self.beacon_pos(b));
        if est.adapt && (d - 1.0).abs() < 1e-9 {
            return Err(invalid(
                "estimator.calibration_pair",
                "beacons 1 m apart give a degenerate base",
            ));
        }
        if self.rounds == 0 {
            return Err(invalid("rounds", "must be at least 1"));
        }
        let bounds = self.grid.bounds();
        match &self.trajectory {
            Trajectory::Static(p) => {
                if !p.is_finite() || !bounds.contains(*p) {
                    return Err(invalid("trajectory.point", format!("{p} is outside the lattice hull")));
                }
            }
            Trajectory::Waypoints(points) => {
                if points.is_empty() || points.iter().all(|w| w.dwell_rounds == 0) {
                    return Err(invalid("trajectory.points", "needs at least one waypoint with dwell"));
                }
                if let Some(w) = points.iter().find(|w| !w.pos.is_finite() || !bounds.contains(w.pos)) {
                    return Err(invalid(
                        "trajectory.points",
                        format!("{} is outside the lattice hull", w.pos),
                    ));
                }
            }
            Trajectory::LatticeSweep { cols, rows } => {
                if *cols == 0 || *rows == 0 {
                    return Err(invalid("trajectory", "sweep needs at least one row and column"));
                }
            }
        }
        Ok(())
    }

    fn beacon_pos(&self, id: BeaconId) -> Point {
        let cols = self.grid.cols as u32;
        self.grid.vertex((id.0 % cols) as usize, (id.0 / cols) as usize)
    }
}

/// One localization round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round_index: usize,
    pub true_pos: Point,
    pub estimate: Estimate,
    /// Euclidean error, `None` for a round without a fix.
    pub error_m: Option<f64>,
    pub n_used: f64,
}

/// One transmitted message.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub time_ms: u64,
    pub src: NodeId,
    pub dst: Dest,
    pub msg: Message,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimOutput {
    pub records: Vec<RoundRecord>,
    pub trace: Vec<TraceEvent>,
}

/// What produces the position once reports are in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Grid,
    /// Power-weighted centroid of the four strongest beacons.
    WeightedCentroid,
}

#[derive(Debug, Clone, PartialEq)]
enum EventKind {
    Start,
    Timer(BlindTimer),
    ToBlind(Message),
    ToBeacon {
        index: usize,
        src: NodeId,
        msg: Message,
        rssi_dbm: f64,
    },
}

#[derive(Debug)]
struct Queued {
    at: u64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        (self.at, self.seq) == (other.at, other.seq)
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.at, self.seq).cmp(&(other.at, other.seq))
    }
}

/// Time-ordered queue, FIFO among equal times.
#[derive(Default)]
struct EventQueue {
    heap: BinaryHeap<Reverse<Queued>>,
    next_seq: u64,
}

impl EventQueue {
    fn push(&mut self, at: u64, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Queued { at, seq, kind }));
    }

    fn pop(&mut self) -> Option<Queued> {
        self.heap.pop().map(|Reverse(q)| q)
    }
}

struct World<'a> {
    scenario: &'a Scenario,
    beacons: Vec<Beacon>,
    machines: Vec<BeaconNodeMachine>,
    blind: BlindNodeMachine,
    rng: ChaCha8Rng,
    queue: EventQueue,
    trace: Option<Vec<TraceEvent>>,
}

impl World<'_> {
    fn link(&self, a: Point, b: Point) -> f64 {
        a.dist(&b).max(MIN_LINK_M)
    }

    fn transmit(&mut self, out: Outbound, blind_pos: Point) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TraceEvent {
                time_ms: out.at,
                src: out.src,
                dst: out.dst,
                msg: out.msg,
            });
        }
        match out.src {
            NodeId::Blind(_) => {
                for index in 0..self.beacons.len() {
                    let wanted = match out.dst {
                        Dest::Broadcast => true,
                        Dest::Node(NodeId::Beacon(id)) => id == self.beacons[index].id,
                        Dest::Node(NodeId::Blind(_)) => false,
                    };
                    if !wanted {
                        continue;
                    }
                    let d = self.link(blind_pos, self.beacons[index].pos);
                    let reception =
                        sample_rss(d, &self.scenario.channel, &mut self.rng).expect("link length is positive");
                    if let Reception::Received(m) = reception {
                        let rssi_dbm = m.reported_dbm(self.scenario.quantize);
                        self.queue.push(
                            out.at,
                            EventKind::ToBeacon {
                                index,
                                src: out.src,
                                msg: out.msg,
                                rssi_dbm,
                            },
                        );
                    }
                }
            }
            NodeId::Beacon(id) => {
                let Some(beacon) = self.beacons.iter().find(|b| b.id == id) else {
                    return;
                };
                if self.link(blind_pos, beacon.pos) <= self.scenario.channel.reception_radius_m {
                    self.queue.push(out.at, EventKind::ToBlind(out.msg));
                }
            }
        }
    }

    /// Runs one protocol round starting at `start`; returns the end time and
    /// the reports the blind node collected.
    fn round(&mut self, start: u64, blind_pos: Point) -> (u64, Vec<RssiReport>) {
        self.queue.push(start, EventKind::Start);
        let mut now = start;
        let mut reports = Vec::new();
        while let Some(ev) = self.queue.pop() {
            now = ev.at;
            match ev.kind {
                EventKind::Start | EventKind::Timer(_) | EventKind::ToBlind(_) => {
                    let event = match ev.kind {
                        EventKind::Start => BlindEvent::Start,
                        EventKind::Timer(t) => BlindEvent::Timer(t),
                        EventKind::ToBlind(m) => BlindEvent::Receive(m),
                        EventKind::ToBeacon { .. } => unreachable!(),
                    };
                    let out = self.blind.step(&event, now);
                    for (at, timer) in out.timers {
                        self.queue.push(at, EventKind::Timer(timer));
                    }
                    for send in out.sends {
                        self.transmit(send, blind_pos);
                    }
                    if let Some(RoundOutcome::Reports(r)) = out.outcome {
                        reports = r;
                    }
                }
                EventKind::ToBeacon {
                    index,
                    src,
                    msg,
                    rssi_dbm,
                } => {
                    let sends = self.machines[index].step(src, &msg, rssi_dbm, now);
                    for send in sends {
                        self.transmit(send, blind_pos);
                    }
                }
            }
        }
        (now, reports)
    }

    /// Mean RSSI over the calibration link, `accum_count` receptions.
    fn calibration_link(&mut self) -> Option<CalibrationLink> {
        let (a, b) = self.scenario.estimator.calibration_pair;
        let pa = self.beacons[a.0 as usize].pos;
        let pb = self.beacons[b.0 as usize].pos;
        let d = pa.dist(&pb);
        let mut samples = Vec::new();
        for _ in 0..self.scenario.estimator.timing.accum_count {
            let r = sample_rss(d, &self.scenario.channel, &mut self.rng).ok()?;
            if let Reception::Received(m) = r {
                samples.push(m.reported_dbm(self.scenario.quantize));
            }
        }
        Some(CalibrationLink {
            rss_dbm: mean_dbm(&samples)?,
            true_dist_m: d,
        })
    }
}

fn baseline_estimate(reports: &[RssiReport], n_used: f64) -> Estimate {
    match select_top4(reports).ok().and_then(|top| weighted_centroid(&top)) {
        Some(pos) => Estimate {
            pos: Some(pos),
            method: Method::WeightedCentroid,
            cell: None,
            n_used,
            centroid_fallback: false,
        },
        None => Estimate::no_fix(n_used),
    }
}

/// Runs every round of `scenario`.
pub fn simulate(scenario: &Scenario, kind: EstimatorKind, with_trace: bool) -> Result<SimOutput, ScenarioError> {
    scenario.validate()?;
    let beacons = build_lattice(&scenario.grid).map_err(|e| invalid("grid", format!("{e}")))?;
    let machines = beacons.iter().map(|b| BeaconNodeMachine::new(b.id, b.pos)).collect();
    let mut world = World {
        scenario,
        beacons,
        machines,
        blind: BlindNodeMachine::new(BLIND_ID, scenario.estimator.timing),
        rng: ChaCha8Rng::seed_from_u64(scenario.seed),
        queue: EventQueue::default(),
        trace: with_trace.then(Vec::new),
    };
    let config = scenario.estimator_config();
    let mut state = EstimatorState::new(&config);
    let mut now = 0;
    let mut records = Vec::new();

    for (round_index, true_pos) in scenario
        .trajectory
        .positions(&scenario.grid, scenario.rounds)
        .into_iter()
        .enumerate()
    {
        if scenario.estimator.adapt {
            if let Some(link) = world.calibration_link() {
                if let Ok(next) = calibrate(&state, link, &config) {
                    state = next;
                }
            }
        }
        let (end, reports) = world.round(now, true_pos);
        now = end;
        let estimate = match kind {
            EstimatorKind::Grid => {
                let (estimate, next) = localize(&reports, &state, &config);
                state = next;
                estimate
            }
            EstimatorKind::WeightedCentroid => baseline_estimate(&reports, state.n_current),
        };
        records.push(RoundRecord {
            round_index,
            true_pos,
            estimate,
            error_m: estimate.pos.map(|p| p.dist(&true_pos)),
            n_used: estimate.n_used,
        });
    }
    Ok(SimOutput {
        records,
        trace: world.trace.unwrap_or_default(),
    })
}

/// Records of the grid estimator.
pub fn run_scenario(scenario: &Scenario) -> Result<Vec<RoundRecord>, ScenarioError> {
    simulate(scenario, EstimatorKind::Grid, false).map(|o| o.records)
}

/// Records of the weighted-centroid comparison baseline, over the same
/// protocol rounds and channel draws as [`run_scenario`].
pub fn run_baseline(scenario: &Scenario) -> Result<Vec<RoundRecord>, ScenarioError> {
    simulate(scenario, EstimatorKind::WeightedCentroid, false).map(|o| o.records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::containing_cell;

    #[test]
    fn static_center_noiseless() {
        let s = Scenario {
            trajectory: Trajectory::Static(Point::new(2.0, 2.0)),
            ..Scenario::paper_sweep()
        };
        let records = run_scenario(&s).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].estimate.method, Method::Refined);
        assert!(records[0].error_m.unwrap() < 1e-9);
    }

    #[test]
    fn sweep_noiseless_exact() {
        let records = run_scenario(&Scenario::paper_sweep()).unwrap();
        assert_eq!(records.len(), 625);
        let worst = records.iter().map(|r| r.error_m.unwrap()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn sweep_points_avoid_beacons() {
        let pts = Trajectory::sweep_points(&GridSpec::default(), 25, 25);
        assert_eq!(pts.len(), 625);
        // 25 half-step samples over two cells would put one on x = 4
        assert!((pts[0].x - 0.08).abs() < 1e-12 && (pts[0].y - 0.08).abs() < 1e-12);
        assert!((pts[1].x - 0.40).abs() < 1e-12 && (pts[1].y - 0.08).abs() < 1e-12);
        assert!((pts[624].x - 7.76).abs() < 1e-12);
        let beacons = build_lattice(&GridSpec::default()).unwrap();
        assert!(pts.iter().all(|p| beacons.iter().all(|b| b.pos.dist(p) > 0.1)));
        assert!(pts.iter().all(|p| (p.x - 4.0).abs() > 0.07 && (p.y - 4.0).abs() > 0.07));

        let even = Trajectory::sweep_points(&GridSpec::default(), 4, 2);
        let xs: Vec<f64> = even.iter().take(4).map(|p| p.x).collect();
        assert_eq!(xs, alloc::vec![1.0, 3.0, 5.0, 7.0]);
        assert_eq!(even[4].y, 6.0);
    }

    #[test]
    fn same_seed_same_records() {
        let s = Scenario {
            channel: ChannelParams::default().with_sigma(3.0),
            seed: 99,
            ..Scenario::paper_sweep()
        };
        assert_eq!(run_scenario(&s).unwrap(), run_scenario(&s).unwrap());
        let other = Scenario { seed: 100, ..s.clone() };
        assert_ne!(run_scenario(&s).unwrap(), run_scenario(&other).unwrap());
    }

    #[test]
    fn baseline_center_and_bias() {
        let center = Scenario {
            trajectory: Trajectory::Static(Point::new(2.0, 2.0)),
            ..Scenario::paper_sweep()
        };
        let r = run_baseline(&center).unwrap();
        assert_eq!(r[0].estimate.method, Method::WeightedCentroid);
        assert!(r[0].error_m.unwrap() < 1e-9);

        let off = Scenario {
            trajectory: Trajectory::Static(Point::new(1.0, 1.0)),
            ..Scenario::paper_sweep()
        };
        let base = run_baseline(&off).unwrap()[0];
        let grid = run_scenario(&off).unwrap()[0];
        let pos = base.estimate.pos.unwrap();
        assert!(pos.x < 1.0 && pos.y < 1.0);
        assert!(base.error_m.unwrap() > grid.error_m.unwrap());
        assert_eq!(run_baseline(&off).unwrap(), run_baseline(&off).unwrap());
    }

    #[test]
    fn adaptation_recovers_true_exponent_in_one_round() {
        let s = Scenario {
            channel: ChannelParams::default().with_exponent(3.0),
            estimator: EstimatorSettings {
                adapt: true,
                ..Default::default()
            },
            trajectory: Trajectory::Static(Point::new(1.3, 2.9)),
            rounds: 3,
            ..Scenario::paper_sweep()
        };
        let records = run_scenario(&s).unwrap();
        for r in &records {
            assert!((r.n_used - 3.0).abs() < 1e-9);
            assert!(r.error_m.unwrap() < 1e-6);
        }
        let unadapted = Scenario {
            estimator: EstimatorSettings::default(),
            ..s
        };
        assert!(run_scenario(&unadapted).unwrap()[0].error_m.unwrap() > 1e-3);
    }

    #[test]
    fn waypoints_cycle_with_dwell() {
        let t = Trajectory::Waypoints(alloc::vec![
            Waypoint {
                pos: Point::new(1.0, 1.0),
                dwell_rounds: 2
            },
            Waypoint {
                pos: Point::new(5.0, 5.0),
                dwell_rounds: 1
            },
        ]);
        let got = t.positions(&GridSpec::default(), 5);
        let xs: Vec<f64> = got.iter().map(|p| p.x).collect();
        assert_eq!(xs, alloc::vec![1.0, 1.0, 5.0, 1.0, 1.0]);
    }

    #[test]
    fn validation_errors_name_the_field() {
        let outside = Scenario {
            trajectory: Trajectory::Static(Point::new(9.0, 1.0)),
            ..Scenario::paper_sweep()
        };
        let err = run_scenario(&outside).unwrap_err();
        assert!(matches!(
            err,
            ScenarioError::Invalid {
                field: "trajectory.point",
                ..
            }
        ));
        let zero_rounds = Scenario {
            rounds: 0,
            ..Scenario::paper_sweep()
        };
        assert!(zero_rounds.validate().is_err());
        let mut bad_pair = Scenario::paper_sweep();
        bad_pair.estimator.calibration_pair = (BeaconId(0), BeaconId(9));
        assert!(bad_pair.validate().is_err());
    }

    #[test]
    fn trace_of_one_round() {
        let s = Scenario {
            trajectory: Trajectory::Static(Point::new(1.0, 1.0)),
            ..Scenario::paper_sweep()
        };
        let out = simulate(&s, EstimatorKind::Grid, true).unwrap();
        let count = |name: &str| out.trace.iter().filter(|e| e.msg.type_name() == name).count();
        assert_eq!(count("location_start"), 1);
        assert_eq!(count("ack"), 9);
        assert_eq!(count("rssi_test"), 8);
        assert_eq!(count("rssi_avg_request"), 1);
        assert_eq!(count("rssi_avg_response"), 9);
    }

    #[test]
    fn out_of_range_beacons_give_no_fix() {
        let mut s = Scenario {
            trajectory: Trajectory::Static(Point::new(1.0, 1.0)),
            ..Scenario::paper_sweep()
        };
        s.channel.reception_radius_m = 4.5;
        let r = run_scenario(&s).unwrap()[0];
        // only (0,0), (4,0), (0,4) and (4,4) are within 4.5 m of (1,1)
        assert_eq!(r.estimate.method, Method::Refined);
        s.channel.reception_radius_m = 3.5;
        let r = run_scenario(&s).unwrap()[0];
        assert_eq!(r.estimate.method, Method::NoFix);
        assert!(r.error_m.is_none());
        assert_eq!(
            containing_cell(r.true_pos, &s.grid).unwrap(),
            crate::geometry::CellId::new(0, 0)
        );
    }
}
