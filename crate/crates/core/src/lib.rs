//! RSSI grid localization for regularly deployed beacon lattices.
//!
//! The engine works in two phases. The coarse phase resolves which lattice
//! cell holds the blind node by ranking averaged beacon RSSI; the fine phase
//! computes a closed-form position inside that cell from the four corner
//! ranges. Around it sit a log-distance channel model, online path-loss
//! exponent adaptation, the blind/beacon message protocol as pure state
//! machines, a discrete-event simulator and error statistics.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and all
//! other IO live in the `gridloc` companion crate.

#![no_std]
#![warn(rust_2018_idioms)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod channel;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod protocol;
pub mod sim;

pub use channel::{ChannelError, ChannelParams, DistanceBounds, RangeEstimate, Reception, RssMeasurement};
pub use estimator::{CalibrationLink, Estimate, EstimatorConfig, EstimatorError, EstimatorState, Method, RssiReport};
pub use geometry::{Beacon, BeaconId, CellId, GeometryError, GridSpec, Point, Rect};
pub use harness::{Comparison, ErrorBuckets, HarnessError, SurfacePoint};
pub use protocol::{BeaconNodeMachine, BlindNodeMachine, BlindPhase, Message, NodeId};
pub use sim::{RoundRecord, Scenario, ScenarioError, SimOutput, TraceEvent, Trajectory};
