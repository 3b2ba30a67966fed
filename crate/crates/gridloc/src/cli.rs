//! The `gridloc` command line.
//!
//! Exit codes: 0 on success, 1 on any input or validation error, 2 when
//! `locate` gets no fix.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridloc_core::estimator::{localize, EstimatorConfig, EstimatorState, Method};
use gridloc_core::harness::{self, bucketize, compare, error_surface, DEFAULT_EDGES};
use gridloc_core::sim::{simulate, EstimatorKind};
use gridloc_core::{ChannelParams, GridSpec, Point, RoundRecord, Scenario, Trajectory};

use crate::format;
use crate::reports::parse_reports;
use crate::scenario_file::load_scenario;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NO_FIX: u8 = 2;

/// Threshold quoted in simulation summaries.
pub const SUMMARY_THRESHOLD_M: f64 = 1.5;

#[derive(Debug, Parser)]
#[command(
    name = "gridloc",
    version,
    about = "RSSI grid localization engine and protocol simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Localize once from a file of averaged beacon reports.
    Locate(LocateArgs),
    /// Run a scenario and write records, buckets and the error surface.
    Simulate(SimulateArgs),
    /// Run a scenario once per value of one parameter, grid estimator and
    /// weighted-centroid baseline side by side.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct LocateArgs {
    /// CSV with rows `beacon_x,beacon_y,avg_rssi_dbm,sample_count`.
    reports: PathBuf,
    /// Lattice origin as `x,y`.
    #[arg(long, default_value = "0,0", value_parser = parse_point)]
    origin: Point,
    #[arg(long, default_value_t = 4.0)]
    spacing: f64,
    /// Beacon columns.
    #[arg(long, default_value_t = 3)]
    cols: usize,
    /// Beacon rows.
    #[arg(long, default_value_t = 3)]
    rows: usize,
    /// Received power at 1 m, dBm.
    #[arg(long, default_value_t = -45.0, allow_negative_numbers = true)]
    a_dbm: f64,
    /// Path-loss exponent used for ranging.
    #[arg(long, default_value_t = 2.0)]
    n_prime: f64,
    /// Near-beacon trigger as a fraction of the spacing.
    #[arg(long, default_value_t = gridloc_core::estimator::DEFAULT_NEAR_BEACON_TAU)]
    tau: f64,
    /// Reception radius, bounds the ranging clamp.
    #[arg(long, default_value_t = 30.0)]
    radius: f64,
    /// Previous fix as `x,y`, used by the near-beacon step.
    #[arg(long, value_parser = parse_point)]
    last: Option<Point>,
    /// Only refine when the four strongest beacons form a cell.
    #[arg(long)]
    no_cell_completion: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario file, or a bundled name such as `paper_sweep`.
    scenario: String,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "gridloc-out")]
    out: PathBuf,
    /// Bucket edges in meters, strictly increasing.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    buckets: Option<Vec<f64>>,
    /// Also write the protocol trace to `trace.csv`.
    #[arg(long)]
    trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VaryKey {
    Sigma,
    Spacing,
    #[value(name = "n_prime")]
    NPrime,
}

impl VaryKey {
    fn name(self) -> &'static str {
        match self {
            VaryKey::Sigma => "sigma",
            VaryKey::Spacing => "spacing",
            VaryKey::NPrime => "n_prime",
        }
    }

    fn apply(self, s: &mut Scenario, v: f64) {
        match self {
            VaryKey::Sigma => s.channel.sigma_dbm = v,
            VaryKey::Spacing => s.grid.spacing_m = v,
            VaryKey::NPrime => s.estimator.n_prime = v,
        }
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Scenario file, or a bundled name such as `paper_sweep`.
    scenario: String,
    /// `key=v1,v2,...` with key one of sigma, spacing, n_prime.
    #[arg(long)]
    vary: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "gridloc-out")]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    buckets: Option<Vec<f64>>,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y but got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    Ok(Point::new(num(x)?, num(y)?))
}

/// Parses `key=v1,v2,...`.
fn parse_vary(spec: &str) -> Result<(VaryKey, Vec<f64>), String> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| format!("--vary expects key=v1,v2,... but got {spec:?}"))?;
    let key = VaryKey::from_str(key.trim(), true)
        .map_err(|_| format!("unknown vary key {:?}; expected sigma, spacing or n_prime", key.trim()))?;
    let values = values
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(format!("--vary value {t:?} is not a finite number")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(format!("--vary {} has no values", key.name()));
    }
    for (i, v) in values.iter().enumerate() {
        if values[..i].contains(v) {
            return Err(format!("--vary {} lists {v} twice", key.name()));
        }
    }
    Ok((key, values))
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Locate(a) => cmd_locate(&a),
        Command::Simulate(a) => cmd_simulate(&a).map(|()| EXIT_OK),
        Command::Sweep(a) => cmd_sweep(&a).map(|()| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INPUT
        }
    }
}

fn cmd_locate(a: &LocateArgs) -> Result<u8, Failure> {
    let grid = GridSpec::new(a.origin, a.spacing, a.cols, a.rows).map_err(|e| Failure(format!("grid: {e}")))?;
    let channel = ChannelParams {
        a_dbm: a.a_dbm,
        n_exp: a.n_prime,
        reception_radius_m: a.radius,
        ..ChannelParams::default()
    };
    channel.validate()?;
    if !(a.tau.is_finite() && a.tau >= 0.0) {
        return Err(Failure(format!("--tau must be non-negative, got {}", a.tau)));
    }
    let text =
        fs::read_to_string(&a.reports).map_err(|e| Failure(format!("cannot read {}: {e}", a.reports.display())))?;
    let reports = parse_reports(&text).map_err(|e| Failure(format!("{}: {e}", a.reports.display())))?;

    let config = EstimatorConfig {
        grid,
        a_dbm: a.a_dbm,
        n_prime: a.n_prime,
        near_beacon_tau: a.tau,
        distance_bounds: channel.distance_bounds(),
        cell_completion: !a.no_cell_completion,
    };
    let state = EstimatorState {
        last_estimate: a.last,
        ..EstimatorState::new(&config)
    };
    let (estimate, _) = localize(&reports, &state, &config);
    println!("{}", format::estimate_row(&estimate));
    Ok(if estimate.method == Method::NoFix {
        EXIT_NO_FIX
    } else {
        EXIT_OK
    })
}

fn load(spec: &str, seed: Option<u64>) -> Result<Scenario, Failure> {
    let mut s = load_scenario(spec).map_err(|e| Failure(format!("scenario {spec}: {e}")))?;
    if let Some(seed) = seed {
        s.seed = seed;
    }
    Ok(s)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Failure(format!("cannot write {}: {e}", path.display())))
}

fn edges(requested: &Option<Vec<f64>>) -> Vec<f64> {
    requested.clone().unwrap_or_else(|| DEFAULT_EDGES.to_vec())
}

/// Share of fixed rounds with error strictly below `threshold_m`.
pub fn fraction_below(records: &[RoundRecord], threshold_m: f64) -> Option<f64> {
    let errs = harness::errors(records);
    if errs.is_empty() {
        return None;
    }
    Some(errs.iter().filter(|e| **e < threshold_m).count() as f64 / errs.len() as f64)
}

/// Error surface of a lattice sweep, averaging repeated rounds per point.
fn sweep_surface(s: &Scenario, records: &[RoundRecord]) -> Option<Vec<Vec<harness::SurfacePoint>>> {
    let Trajectory::LatticeSweep { cols, rows } = s.trajectory else {
        return None;
    };
    let per_point: Vec<RoundRecord> = records
        .chunks(s.rounds as usize)
        .map(|chunk| RoundRecord {
            error_m: harness::mean(&harness::errors(chunk)),
            ..chunk[0]
        })
        .collect();
    error_surface(&per_point, cols, rows).ok()
}

fn opt_sig9(v: Option<f64>) -> String {
    v.map(format::sig9).unwrap_or_else(|| "n/a".into())
}

fn summary_line(records: &[RoundRecord]) -> String {
    let errs = harness::errors(records);
    format!(
        "rounds={} no_fix={} median_error_m={} mean_error_m={} fraction_below_1.5m={}",
        records.len(),
        records.len() - errs.len(),
        opt_sig9(harness::median(&errs)),
        opt_sig9(harness::mean(&errs)),
        fraction_below(records, SUMMARY_THRESHOLD_M).map_or_else(|| "n/a".into(), |f| format!("{f:.3}")),
    )
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let s = load(&a.scenario, a.seed)?;
    let edges = edges(&a.buckets);
    let out = simulate(&s, EstimatorKind::Grid, a.trace)?;
    let buckets = bucketize(&out.records, &edges)?;
    fs::create_dir_all(&a.out).map_err(|e| Failure(format!("cannot create {}: {e}", a.out.display())))?;
    write(&a.out, "records.csv", &format::records_csv(&out.records))?;
    write(&a.out, "buckets.csv", &format::buckets_csv(&buckets))?;
    if let Some(surface) = sweep_surface(&s, &out.records) {
        write(&a.out, "surface.dat", &format::surface_data(&surface))?;
    }
    if a.trace {
        write(&a.out, "trace.csv", &format::trace_text(&out.trace))?;
    }
    println!("{}", summary_line(&out.records));
    Ok(())
}

pub const SWEEP_SUMMARY_HEADER: &str =
    "key,value,rounds,refined_no_fix,baseline_no_fix,refined_median_m,baseline_median_m,\
refined_mean_m,baseline_mean_m,refined_below_1.5m,baseline_below_1.5m,refined_beats_baseline";

fn cmd_sweep(a: &SweepArgs) -> Result<(), Failure> {
    let (key, values) = parse_vary(&a.vary).map_err(Failure)?;
    let base = load(&a.scenario, a.seed)?;
    let edges = edges(&a.buckets);
    bucketize(&[], &edges)?;

    let mut variants = Vec::with_capacity(values.len());
    for &v in &values {
        let mut s = base.clone();
        key.apply(&mut s, v);
        s.validate()
            .map_err(|e| Failure(format!("{}={}: {e}", key.name(), format::sig9(v))))?;
        variants.push((v, s));
    }

    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = variants
            .iter()
            .map(|(_, s)| {
                scope.spawn(move || -> Result<_, Failure> {
                    let refined = simulate(s, EstimatorKind::Grid, false)?.records;
                    let baseline = simulate(s, EstimatorKind::WeightedCentroid, false)?.records;
                    Ok((refined, baseline))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("variant thread panicked"))
            .collect()
    });

    fs::create_dir_all(&a.out).map_err(|e| Failure(format!("cannot create {}: {e}", a.out.display())))?;
    let mut summary = String::from(SWEEP_SUMMARY_HEADER);
    summary.push('\n');
    for ((v, _), result) in variants.iter().zip(results) {
        let (refined, baseline) = result?;
        let stem = format!("{}_{}", key.name(), format::sig9(*v));
        let cmp = compare(&refined, &baseline, &edges)?;
        write(&a.out, &format!("{stem}_refined.csv"), &format::records_csv(&refined))?;
        write(&a.out, &format!("{stem}_baseline.csv"), &format::records_csv(&baseline))?;
        write(&a.out, &format!("{stem}_comparison.csv"), &format::comparison_csv(&cmp))?;
        let row = [
            key.name().to_string(),
            format::sig9(*v),
            refined.len().to_string(),
            cmp.a.buckets.no_fix.to_string(),
            cmp.b.buckets.no_fix.to_string(),
            opt_sig9(cmp.a.median_m),
            opt_sig9(cmp.b.median_m),
            opt_sig9(cmp.a.mean_m),
            opt_sig9(cmp.b.mean_m),
            opt_sig9(fraction_below(&refined, SUMMARY_THRESHOLD_M)),
            opt_sig9(fraction_below(&baseline, SUMMARY_THRESHOLD_M)),
            opt_sig9(cmp.a_beats_b),
        ]
        .join(",");
        summary.push_str(&row);
        summary.push('\n');
    }
    write(&a.out, "summary.csv", &summary)?;
    print!("{summary}");
    Ok(())
}
