//! TOML scenario files.
//!
//! Every table and key is optional and defaults to the bundled `paper_sweep`
//! setup. Unknown keys are rejected. Example:
//!
//! ```toml
//! rng = "chacha8"        # the only generator; seeded with seed_from_u64(seed)
//! seed = 7
//! rounds = 1             # rounds per trajectory point for lattice sweeps
//! quantize = false       # report integer register readings
//!
//! [grid]
//! origin = [0.0, 0.0]
//! spacing_m = 4.0
//! cols = 3
//! rows = 3
//!
//! [channel]
//! a_dbm = -45.0
//! n_exp = 2.0
//! sigma_dbm = 0.0
//! rssi_offset_dbm = -45.0
//! reception_radius_m = 30.0
//!
//! [estimator]
//! n_prime = 2.0
//! near_beacon_tau = 0.25
//! accum_count = 8
//! inter_test_gap_ms = 20
//! response_window_ms = 50
//! ack_timeout_ms = 100
//! adapt = false
//! calibration_pair = [0, 1]
//! cell_completion = true
//!
//! [trajectory]
//! kind = "lattice_sweep"  # or "static" with point = [x, y],
//! cols = 25               # or "waypoints" with [[trajectory.points]]
//! rows = 25               #    entries of pos = [x, y], dwell_rounds = n
//! ```

use std::path::Path;

use gridloc_core::protocol::BlindTiming;
use gridloc_core::sim::{EstimatorSettings, Waypoint};
use gridloc_core::{BeaconId, GridSpec, Point, Scenario, Trajectory};
use serde::Deserialize;
use thiserror::Error;

/// Text of the bundled 8 m x 8 m sweep scenario.
pub const PAPER_SWEEP_TOML: &str = include_str!("../scenarios/paper_sweep.toml");

/// Names accepted in place of a scenario path.
pub const BUNDLED: &[(&str, &str)] = &[("paper_sweep", PAPER_SWEEP_TOML)];

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{0}")]
    Invalid(#[from] gridloc_core::ScenarioError),
}

impl ScenarioFileError {
    /// Dotted path of the offending field, when known.
    pub fn field_path(&self) -> Option<String> {
        match self {
            ScenarioFileError::Io { .. } => None,
            ScenarioFileError::Syntax { path, .. } => Some(path.clone()),
            ScenarioFileError::Invalid(gridloc_core::ScenarioError::Invalid { field, .. }) => {
                Some((*field).to_string())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RngName {
    Chacha8,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileScenario {
    rng: RngName,
    seed: u64,
    rounds: u32,
    quantize: bool,
    grid: FileGrid,
    channel: FileChannel,
    estimator: FileEstimator,
    trajectory: FileTrajectory,
}

impl Default for FileScenario {
    fn default() -> Self {
        let s = Scenario::paper_sweep();
        Self {
            rng: RngName::Chacha8,
            seed: s.seed,
            rounds: s.rounds,
            quantize: s.quantize,
            grid: FileGrid::default(),
            channel: FileChannel::default(),
            estimator: FileEstimator::default(),
            trajectory: FileTrajectory::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileGrid {
    origin: [f64; 2],
    spacing_m: f64,
    cols: usize,
    rows: usize,
}

impl Default for FileGrid {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            origin: [g.origin.x, g.origin.y],
            spacing_m: g.spacing_m,
            cols: g.cols,
            rows: g.rows,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileChannel {
    a_dbm: f64,
    n_exp: f64,
    sigma_dbm: f64,
    rssi_offset_dbm: f64,
    reception_radius_m: f64,
}

impl Default for FileChannel {
    fn default() -> Self {
        let c = gridloc_core::ChannelParams::default();
        Self {
            a_dbm: c.a_dbm,
            n_exp: c.n_exp,
            sigma_dbm: c.sigma_dbm,
            rssi_offset_dbm: c.rssi_offset_dbm,
            reception_radius_m: c.reception_radius_m,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct FileEstimator {
    n_prime: f64,
    near_beacon_tau: f64,
    accum_count: u32,
    inter_test_gap_ms: u64,
    response_window_ms: u64,
    ack_timeout_ms: u64,
    adapt: bool,
    calibration_pair: [u32; 2],
    cell_completion: bool,
}

impl Default for FileEstimator {
    fn default() -> Self {
        let e = EstimatorSettings::default();
        Self {
            n_prime: e.n_prime,
            near_beacon_tau: e.near_beacon_tau,
            accum_count: e.timing.accum_count,
            inter_test_gap_ms: e.timing.inter_test_gap_ms,
            response_window_ms: e.timing.response_window_ms,
            ack_timeout_ms: e.timing.ack_timeout_ms,
            adapt: e.adapt,
            calibration_pair: [e.calibration_pair.0 .0, e.calibration_pair.1 .0],
            cell_completion: e.cell_completion,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum FileTrajectory {
    Static { point: [f64; 2] },
    Waypoints { points: Vec<FileWaypoint> },
    LatticeSweep { cols: usize, rows: usize },
}

impl Default for FileTrajectory {
    fn default() -> Self {
        FileTrajectory::LatticeSweep { cols: 25, rows: 25 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileWaypoint {
    pos: [f64; 2],
    #[serde(default = "one")]
    dwell_rounds: u32,
}

fn one() -> u32 {
    1
}

fn point([x, y]: [f64; 2]) -> Point {
    Point::new(x, y)
}

impl From<FileScenario> for Scenario {
    fn from(f: FileScenario) -> Self {
        let RngName::Chacha8 = f.rng;
        Scenario {
            grid: GridSpec {
                origin: point(f.grid.origin),
                spacing_m: f.grid.spacing_m,
                cols: f.grid.cols,
                rows: f.grid.rows,
            },
            channel: gridloc_core::ChannelParams {
                a_dbm: f.channel.a_dbm,
                n_exp: f.channel.n_exp,
                sigma_dbm: f.channel.sigma_dbm,
                rssi_offset_dbm: f.channel.rssi_offset_dbm,
                reception_radius_m: f.channel.reception_radius_m,
            },
            estimator: EstimatorSettings {
                n_prime: f.estimator.n_prime,
                near_beacon_tau: f.estimator.near_beacon_tau,
                timing: BlindTiming {
                    accum_count: f.estimator.accum_count,
                    inter_test_gap_ms: f.estimator.inter_test_gap_ms,
                    response_window_ms: f.estimator.response_window_ms,
                    ack_timeout_ms: f.estimator.ack_timeout_ms,
                },
                adapt: f.estimator.adapt,
                calibration_pair: (
                    BeaconId(f.estimator.calibration_pair[0]),
                    BeaconId(f.estimator.calibration_pair[1]),
                ),
                cell_completion: f.estimator.cell_completion,
            },
            quantize: f.quantize,
            trajectory: match f.trajectory {
                FileTrajectory::Static { point: p } => Trajectory::Static(point(p)),
                FileTrajectory::Waypoints { points } => Trajectory::Waypoints(
                    points
                        .into_iter()
                        .map(|w| Waypoint {
                            pos: point(w.pos),
                            dwell_rounds: w.dwell_rounds,
                        })
                        .collect(),
                ),
                FileTrajectory::LatticeSweep { cols, rows } => Trajectory::LatticeSweep { cols, rows },
            },
            rounds: f.rounds,
            seed: f.seed,
        }
    }
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioFileError> {
    let syntax = |path: String, e: &toml::de::Error| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
        let msg = e.message().trim_end();
        let message = match line {
            Some(line) => format!("{msg} (line {line})"),
            None => msg.to_string(),
        };
        ScenarioFileError::Syntax { path, message }
    };
    let de = toml::Deserializer::parse(text).map_err(|e| syntax("<document>".into(), &e))?;
    let file: FileScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = match e.path().to_string() {
            p if p == "." => "<document>".to_string(),
            p => p,
        };
        syntax(path, e.inner())
    })?;
    let scenario = Scenario::from(file);
    scenario.validate()?;
    Ok(scenario)
}

/// Loads a scenario from a file path, or from a bundled name such as
/// `paper_sweep` when no such file exists.
pub fn load_scenario(spec: &str) -> Result<Scenario, ScenarioFileError> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some((_, text)) = BUNDLED.iter().find(|(name, _)| *name == spec) {
            return parse_scenario(text);
        }
    }
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioFileError::Io {
        path: spec.to_string(),
        source,
    })?;
    parse_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_sweep_matches_builtin() {
        assert_eq!(parse_scenario(PAPER_SWEEP_TOML).unwrap(), Scenario::paper_sweep());
    }

    #[test]
    fn empty_file_is_the_default_sweep() {
        assert_eq!(parse_scenario("").unwrap(), Scenario::paper_sweep());
    }

    #[test]
    fn unknown_keys_are_rejected_with_path() {
        let e = parse_scenario("[channel]\nsigma = 2.0\n").unwrap_err();
        assert_eq!(e.field_path().as_deref(), Some("channel.sigma"), "{e}");
        assert!(e.to_string().contains("sigma"), "{e}");

        let e = parse_scenario("bogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("bogus"), "{e}");

        let e = parse_scenario("[trajectory]\nkind = \"static\"\npoint = [1.0, 1.0]\nspeed = 3\n").unwrap_err();
        assert!(e.to_string().contains("speed"), "{e}");
    }

    #[test]
    fn type_errors_carry_the_field_path() {
        let e = parse_scenario("[estimator]\naccum_count = \"eight\"\n").unwrap_err();
        assert_eq!(e.field_path().as_deref(), Some("estimator.accum_count"), "{e}");
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn validation_errors_carry_the_field_path() {
        let e = parse_scenario("[trajectory]\nkind = \"static\"\npoint = [9.0, 1.0]\n").unwrap_err();
        assert_eq!(e.field_path().as_deref(), Some("trajectory.point"));
        let e = parse_scenario("rounds = 0\n").unwrap_err();
        assert_eq!(e.field_path().as_deref(), Some("rounds"));
    }

    #[test]
    fn only_chacha8_is_accepted() {
        assert!(parse_scenario("rng = \"chacha8\"\n").is_ok());
        let e = parse_scenario("rng = \"xorshift\"\n").unwrap_err();
        assert_eq!(e.field_path().as_deref(), Some("rng"));
    }

    #[test]
    fn waypoints_parse_with_default_dwell() {
        let s = parse_scenario(
            "rounds = 3\n[trajectory]\nkind = \"waypoints\"\n\
             [[trajectory.points]]\npos = [1.0, 1.0]\ndwell_rounds = 2\n\
             [[trajectory.points]]\npos = [3.0, 1.0]\n",
        )
        .unwrap();
        let Trajectory::Waypoints(w) = &s.trajectory else {
            panic!("wrong trajectory {:?}", s.trajectory)
        };
        assert_eq!(w.len(), 2);
        assert_eq!((w[0].dwell_rounds, w[1].dwell_rounds), (2, 1));
        assert_eq!(w[1].pos, Point::new(3.0, 1.0));
    }

    #[test]
    fn load_resolves_bundled_names() {
        assert_eq!(load_scenario("paper_sweep").unwrap(), Scenario::paper_sweep());
        assert!(matches!(
            load_scenario("no/such/file.toml"),
            Err(ScenarioFileError::Io { .. })
        ));
    }
}
