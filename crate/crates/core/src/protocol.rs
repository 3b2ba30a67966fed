//! Blind-node and beacon-node message protocol.
//!
//! One localization round:
//!
//! ```text
//! blind                          beacons
//!   | --- LocationStart (bcast) --> |
//!   | <-------- Ack --------------- |
//!   | --- RssiTest seq=1 (bcast) -> |  accumulate
//!   |     ... every gap ms ...      |
//!   | --- RssiTest seq=N (bcast) -> |  accumulate
//!   | --- RssiAvgRequest (bcast) -> |
//!   | <------ RssiAvgResponse ----- |  mean of the buffer, then clear
//! ```
//!
//! Both machines are deterministic: feeding the same events yields the same
//! states and emissions. Time is in integer milliseconds.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::channel::mean_dbm;
use crate::estimator::RssiReport;
use crate::geometry::{BeaconId, Point};

pub const DEFAULT_ACCUM_COUNT: u32 = 8;
pub const DEFAULT_INTER_TEST_GAP_MS: u64 = 20;
pub const DEFAULT_RESPONSE_WINDOW_MS: u64 = 50;
pub const DEFAULT_ACK_TIMEOUT_MS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Blind(u32),
    Beacon(BeaconId),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Blind(id) => write!(f, "blind{id}"),
            NodeId::Beacon(id) => write!(f, "beacon{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dest {
    Broadcast,
    Node(NodeId),
}

impl fmt::Display for Dest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dest::Broadcast => f.write_str("*"),
            Dest::Node(id) => id.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Message {
    LocationStart {
        blind_id: u32,
    },
    Ack {
        beacon_id: BeaconId,
    },
    RssiTest {
        blind_id: u32,
        seq: u32,
    },
    RssiAvgRequest {
        blind_id: u32,
    },
    RssiAvgResponse {
        beacon_id: BeaconId,
        beacon_pos: Point,
        avg_rssi_dbm: f64,
        sample_count: u32,
    },
}

impl Message {
    pub fn type_name(&self) -> &'static str {
        match self {
            Message::LocationStart { .. } => "location_start",
            Message::Ack { .. } => "ack",
            Message::RssiTest { .. } => "rssi_test",
            Message::RssiAvgRequest { .. } => "rssi_avg_request",
            Message::RssiAvgResponse { .. } => "rssi_avg_response",
        }
    }
}

/// A message queued for transmission at `at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outbound {
    pub src: NodeId,
    pub dst: Dest,
    pub msg: Message,
    pub at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlindTimer {
    AckTimeout,
    NextTest,
    CollectionDone,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlindEvent {
    /// Begin a round.
    Start,
    Receive(Message),
    Timer(BlindTimer),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RoundOutcome {
    /// Collection window closed; localize with whatever arrived.
    Reports(Vec<RssiReport>),
    /// No beacon acknowledged the start command.
    NoAck,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlindOutput {
    pub sends: Vec<Outbound>,
    pub timers: Vec<(u64, BlindTimer)>,
    pub outcome: Option<RoundOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlindPhase {
    Idle,
    AwaitAck,
    /// Holds the sequence number of the last test sent.
    Accumulating(u32),
    AwaitAverages,
    Computing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlindTiming {
    pub accum_count: u32,
    pub inter_test_gap_ms: u64,
    pub response_window_ms: u64,
    pub ack_timeout_ms: u64,
}

impl Default for BlindTiming {
    fn default() -> Self {
        Self {
            accum_count: DEFAULT_ACCUM_COUNT,
            inter_test_gap_ms: DEFAULT_INTER_TEST_GAP_MS,
            response_window_ms: DEFAULT_RESPONSE_WINDOW_MS,
            ack_timeout_ms: DEFAULT_ACK_TIMEOUT_MS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlindNodeMachine {
    pub id: u32,
    pub phase: BlindPhase,
    pub collected: Vec<RssiReport>,
    pub timing: BlindTiming,
}

impl BlindNodeMachine {
    pub fn new(id: u32, timing: BlindTiming) -> Self {
        assert!(timing.accum_count >= 1, "accum_count must be at least 1");
        Self {
            id,
            phase: BlindPhase::Idle,
            collected: Vec::new(),
            timing,
        }
    }

    fn node(&self) -> NodeId {
        NodeId::Blind(self.id)
    }

    fn broadcast(&self, msg: Message, at: u64) -> Outbound {
        Outbound {
            src: self.node(),
            dst: Dest::Broadcast,
            msg,
            at,
        }
    }

    /// Advances the machine by one event at time `now`.
    pub fn step(&mut self, event: &BlindEvent, now: u64) -> BlindOutput {
        let mut out = BlindOutput::default();
        let t = self.timing;
        match (self.phase, event) {
            (BlindPhase::Idle | BlindPhase::Computing, BlindEvent::Start) => {
                self.collected.clear();
                out.sends
                    .push(self.broadcast(Message::LocationStart { blind_id: self.id }, now));
                out.timers.push((now + t.ack_timeout_ms, BlindTimer::AckTimeout));
                self.phase = BlindPhase::AwaitAck;
            }
            (BlindPhase::AwaitAck, BlindEvent::Receive(Message::Ack { .. })) => {
                out.sends.push(self.broadcast(
                    Message::RssiTest {
                        blind_id: self.id,
                        seq: 1,
                    },
                    now,
                ));
                out.timers.push((now + t.inter_test_gap_ms, BlindTimer::NextTest));
                self.phase = BlindPhase::Accumulating(1);
            }
            (BlindPhase::AwaitAck, BlindEvent::Timer(BlindTimer::AckTimeout)) => {
                self.phase = BlindPhase::Idle;
                out.outcome = Some(RoundOutcome::NoAck);
            }
            (BlindPhase::Accumulating(seq), BlindEvent::Timer(BlindTimer::NextTest)) => {
                if seq < t.accum_count {
                    let next = seq + 1;
                    out.sends.push(self.broadcast(
                        Message::RssiTest {
                            blind_id: self.id,
                            seq: next,
                        },
                        now,
                    ));
                    out.timers.push((now + t.inter_test_gap_ms, BlindTimer::NextTest));
                    self.phase = BlindPhase::Accumulating(next);
                } else {
                    out.sends
                        .push(self.broadcast(Message::RssiAvgRequest { blind_id: self.id }, now));
                    out.timers
                        .push((now + t.response_window_ms, BlindTimer::CollectionDone));
                    self.phase = BlindPhase::AwaitAverages;
                }
            }
            (
                BlindPhase::AwaitAverages,
                BlindEvent::Receive(Message::RssiAvgResponse {
                    beacon_pos,
                    avg_rssi_dbm,
                    sample_count,
                    ..
                }),
            ) => {
                self.collected
                    .push(RssiReport::new(*beacon_pos, *avg_rssi_dbm, *sample_count));
            }
            (BlindPhase::AwaitAverages, BlindEvent::Timer(BlindTimer::CollectionDone)) => {
                self.phase = BlindPhase::Computing;
                out.outcome = Some(RoundOutcome::Reports(self.collected.clone()));
            }
            (phase, event) => {
                // late Acks, stale timers and out-of-phase messages
                log::trace!("blind{} ignoring {:?} in {:?}", self.id, event, phase);
            }
        }
        out
    }
}

/// Beacon side of the protocol.
///
/// Samples are buffered per blind node, so interleaved rounds of different
/// blind nodes do not mix.
#[derive(Debug, Clone, PartialEq)]
pub struct BeaconNodeMachine {
    pub id: BeaconId,
    pub pos: Point,
    pub buffers: BTreeMap<u32, Vec<f64>>,
}

impl BeaconNodeMachine {
    pub fn new(id: BeaconId, pos: Point) -> Self {
        Self {
            id,
            pos,
            buffers: BTreeMap::new(),
        }
    }

    /// Handles one received message. `measured_rssi_dbm` is the signal
    /// strength of this reception.
    pub fn step(&mut self, src: NodeId, msg: &Message, measured_rssi_dbm: f64, now: u64) -> Vec<Outbound> {
        let reply = |msg| Outbound {
            src: NodeId::Beacon(self.id),
            dst: Dest::Node(src),
            msg,
            at: now,
        };
        match *msg {
            Message::LocationStart { blind_id } => {
                self.buffers.remove(&blind_id);
                alloc::vec![reply(Message::Ack { beacon_id: self.id })]
            }
            Message::RssiTest { blind_id, .. } => {
                self.buffers.entry(blind_id).or_default().push(measured_rssi_dbm);
                Vec::new()
            }
            Message::RssiAvgRequest { blind_id } => {
                let Some(samples) = self.buffers.remove(&blind_id) else {
                    return Vec::new();
                };
                match mean_dbm(&samples) {
                    Some(avg) => alloc::vec![reply(Message::RssiAvgResponse {
                        beacon_id: self.id,
                        beacon_pos: self.pos,
                        avg_rssi_dbm: avg,
                        sample_count: samples.len() as u32,
                    })],
                    None => Vec::new(),
                }
            }
            Message::Ack { .. } | Message::RssiAvgResponse { .. } => Vec::new(),
        }
    }
}

/// Time from the first test packet to the close of the response window.
pub fn round_duration(accum_count: u32, inter_test_gap_ms: u64, response_window_ms: u64) -> u64 {
    u64::from(accum_count.saturating_sub(1)) * inter_test_gap_ms + response_window_ms
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec;

    fn machine() -> BlindNodeMachine {
        BlindNodeMachine::new(0, BlindTiming::default())
    }

    fn ack() -> BlindEvent {
        BlindEvent::Receive(Message::Ack { beacon_id: BeaconId(3) })
    }

    #[test]
    fn start_broadcasts_location_start() {
        let mut m = machine();
        let out = m.step(&BlindEvent::Start, 0);
        assert_eq!(m.phase, BlindPhase::AwaitAck);
        assert_eq!(out.sends.len(), 1);
        assert_eq!(out.sends[0].msg, Message::LocationStart { blind_id: 0 });
        assert_eq!(out.sends[0].dst, Dest::Broadcast);
        assert_eq!(out.timers, vec![(100, BlindTimer::AckTimeout)]);
    }

    #[test]
    fn first_ack_starts_accumulation_and_later_acks_are_ignored() {
        let mut m = machine();
        m.step(&BlindEvent::Start, 0);
        let out = m.step(&ack(), 0);
        assert_eq!(m.phase, BlindPhase::Accumulating(1));
        assert_eq!(out.sends[0].msg, Message::RssiTest { blind_id: 0, seq: 1 });
        let again = m.step(&ack(), 0);
        assert_eq!(again, BlindOutput::default());
        assert_eq!(m.phase, BlindPhase::Accumulating(1));
    }

    #[test]
    fn timer_emits_next_test() {
        let mut m = machine();
        m.phase = BlindPhase::Accumulating(3);
        let out = m.step(&BlindEvent::Timer(BlindTimer::NextTest), 40);
        assert_eq!(out.sends[0].msg, Message::RssiTest { blind_id: 0, seq: 4 });
        assert_eq!(out.sends[0].at, 40);
        assert_eq!(out.timers, vec![(60, BlindTimer::NextTest)]);
        assert_eq!(m.phase, BlindPhase::Accumulating(4));
    }

    #[test]
    fn last_test_then_average_request() {
        let mut m = machine();
        m.phase = BlindPhase::Accumulating(8);
        let out = m.step(&BlindEvent::Timer(BlindTimer::NextTest), 160);
        assert_eq!(out.sends[0].msg, Message::RssiAvgRequest { blind_id: 0 });
        assert_eq!(m.phase, BlindPhase::AwaitAverages);
        assert_eq!(out.timers, vec![(210, BlindTimer::CollectionDone)]);
    }

    #[test]
    fn ack_timeout_returns_to_idle() {
        let mut m = machine();
        m.step(&BlindEvent::Start, 0);
        let out = m.step(&BlindEvent::Timer(BlindTimer::AckTimeout), 100);
        assert_eq!(m.phase, BlindPhase::Idle);
        assert_eq!(out.outcome, Some(RoundOutcome::NoAck));
    }

    #[test]
    fn responses_only_collected_while_awaiting() {
        let resp = BlindEvent::Receive(Message::RssiAvgResponse {
            beacon_id: BeaconId(1),
            beacon_pos: Point::new(4.0, 0.0),
            avg_rssi_dbm: -57.0,
            sample_count: 8,
        });
        let mut m = machine();
        m.phase = BlindPhase::Accumulating(2);
        m.step(&resp, 10);
        assert!(m.collected.is_empty());
        m.phase = BlindPhase::AwaitAverages;
        m.step(&resp, 10);
        let out = m.step(&BlindEvent::Timer(BlindTimer::CollectionDone), 60);
        assert_eq!(m.phase, BlindPhase::Computing);
        match out.outcome {
            Some(RoundOutcome::Reports(r)) => assert_eq!(r, vec![RssiReport::new(Point::new(4.0, 0.0), -57.0, 8)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn full_round_emits_exact_test_train() {
        let mut m = machine();
        let mut sends = Vec::new();
        sends.extend(m.step(&BlindEvent::Start, 1000).sends);
        let mut out = m.step(&ack(), 1000);
        sends.append(&mut out.sends);
        while let Some((at, timer)) = out.timers.pop() {
            out = m.step(&BlindEvent::Timer(timer), at);
            sends.extend(out.sends.iter().copied());
        }
        let tests: Vec<_> = sends
            .iter()
            .filter(|o| matches!(o.msg, Message::RssiTest { .. }))
            .collect();
        assert_eq!(tests.len(), 8);
        for (k, o) in tests.iter().enumerate() {
            assert_eq!(o.at, 1000 + 20 * k as u64);
            assert_eq!(
                o.msg,
                Message::RssiTest {
                    blind_id: 0,
                    seq: k as u32 + 1
                }
            );
        }
        assert_eq!(m.phase, BlindPhase::Computing);
    }

    #[test]
    fn replay_is_deterministic() {
        let events = [
            (BlindEvent::Start, 0),
            (ack(), 0),
            (BlindEvent::Timer(BlindTimer::NextTest), 20),
            (ack(), 21),
            (BlindEvent::Timer(BlindTimer::NextTest), 40),
        ];
        let run = || {
            let mut m = machine();
            let outs: Vec<_> = events.iter().map(|(e, t)| m.step(e, *t)).collect();
            (m, outs)
        };
        assert_eq!(run(), run());
    }

    fn beacon() -> BeaconNodeMachine {
        BeaconNodeMachine::new(BeaconId(2), Point::new(8.0, 0.0))
    }

    const BLIND: NodeId = NodeId::Blind(0);

    fn average_after(samples: &[f64]) -> Vec<Outbound> {
        let mut b = beacon();
        for (k, &s) in samples.iter().enumerate() {
            b.step(
                BLIND,
                &Message::RssiTest {
                    blind_id: 0,
                    seq: k as u32 + 1,
                },
                s,
                0,
            );
        }
        b.step(BLIND, &Message::RssiAvgRequest { blind_id: 0 }, -99.0, 0)
    }

    #[test]
    fn beacon_acks_start() {
        let out = beacon().step(BLIND, &Message::LocationStart { blind_id: 0 }, -50.0, 5);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].msg, Message::Ack { beacon_id: BeaconId(2) });
        assert_eq!(out[0].dst, Dest::Node(BLIND));
        assert_eq!(out[0].at, 5);
    }

    #[test]
    fn beacon_averages_identical_samples() {
        let out = average_after(&[-57.0; 8]);
        match out[0].msg {
            Message::RssiAvgResponse {
                avg_rssi_dbm,
                sample_count,
                ..
            } => {
                assert_eq!(avg_rssi_dbm, -57.0);
                assert_eq!(sample_count, 8);
            }
            ref m => panic!("{m:?}"),
        }
    }

    #[test]
    fn beacon_averages_in_dbm() {
        let out = average_after(&[-50.0, -60.0]);
        assert!(
            matches!(out[0].msg, Message::RssiAvgResponse { avg_rssi_dbm, sample_count: 2, .. } if avg_rssi_dbm == -55.0)
        );
    }

    #[test]
    fn beacon_silent_without_samples() {
        assert!(average_after(&[]).is_empty());
    }

    #[test]
    fn beacon_buffer_cleared_after_response() {
        let mut b = beacon();
        b.step(BLIND, &Message::RssiTest { blind_id: 0, seq: 1 }, -50.0, 0);
        assert_eq!(b.step(BLIND, &Message::RssiAvgRequest { blind_id: 0 }, 0.0, 0).len(), 1);
        assert!(b.buffers.is_empty());
        assert!(b
            .step(BLIND, &Message::RssiAvgRequest { blind_id: 0 }, 0.0, 0)
            .is_empty());
    }

    #[test]
    fn beacon_keeps_blind_nodes_apart() {
        let mut b = beacon();
        b.step(NodeId::Blind(0), &Message::RssiTest { blind_id: 0, seq: 1 }, -50.0, 0);
        b.step(NodeId::Blind(1), &Message::RssiTest { blind_id: 1, seq: 1 }, -70.0, 0);
        b.step(NodeId::Blind(1), &Message::RssiTest { blind_id: 1, seq: 2 }, -72.0, 0);
        let out = b.step(NodeId::Blind(0), &Message::RssiAvgRequest { blind_id: 0 }, 0.0, 0);
        assert!(
            matches!(out[0].msg, Message::RssiAvgResponse { avg_rssi_dbm, sample_count: 1, .. } if avg_rssi_dbm == -50.0)
        );
        assert_eq!(out[0].dst, Dest::Node(NodeId::Blind(0)));
        assert_eq!(b.buffers.get(&1).map(Vec::len), Some(2));
    }

    #[test]
    fn round_durations() {
        assert_eq!(round_duration(8, 20, 50), 190);
        assert_eq!(round_duration(1, 20, 50), 50);
        assert_eq!(round_duration(8, 0, 0), 0);
    }

    #[test]
    fn node_display() {
        assert_eq!(std::format!("{}", NodeId::Beacon(BeaconId(4))), "beacon4");
        assert_eq!(std::format!("{}", Dest::Broadcast), "*");
    }
}
