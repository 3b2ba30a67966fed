//! Text formats for records, buckets, error surfaces, comparisons and traces.

use std::fmt::Write as _;

use gridloc_core::estimator::Estimate;
use gridloc_core::harness::{Comparison, ErrorBuckets, SurfacePoint};
use gridloc_core::protocol::Message;
use gridloc_core::{RoundRecord, TraceEvent};

pub const RECORDS_HEADER: &str = "round,true_x,true_y,est_x,est_y,method,error_m,n_used";
pub const BUCKETS_HEADER: &str = "edge_lo,edge_hi,count,fraction";
pub const SURFACE_HEADER: &str = "# x,y,error_m";
pub const COMPARISON_HEADER: &str = "edge_lo,edge_hi,fraction_a,fraction_b,delta";

/// Formats `v` with 9 significant digits, like C's `%.9g`.
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        return format!("{}e{exp}", trim_fraction(mantissa));
    }
    let decimals = (8 - exp) as usize;
    trim_fraction(&format!("{v:.decimals$}")).to_string()
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_default()
}

/// `est_x,est_y,method,n_used` for one estimate.
pub fn estimate_row(e: &Estimate) -> String {
    format!(
        "{},{},{},{}",
        opt(e.pos.map(|p| p.x)),
        opt(e.pos.map(|p| p.y)),
        e.method,
        sig9(e.n_used)
    )
}

pub fn records_csv(records: &[RoundRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let est = r.estimate.pos;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.round_index,
            sig9(r.true_pos.x),
            sig9(r.true_pos.y),
            opt(est.map(|p| p.x)),
            opt(est.map(|p| p.y)),
            r.estimate.method,
            opt(r.error_m),
            sig9(r.n_used)
        )
        .unwrap();
    }
    out
}

/// One row per bucket; the overflow bucket's upper edge is `inf`. Fractions
/// are left empty when no record has a fix, and a trailing `no_fix` row
/// carries the count of rounds without one.
pub fn buckets_csv(b: &ErrorBuckets) -> String {
    let mut out = String::from(BUCKETS_HEADER);
    out.push('\n');
    for (i, (lo, hi)) in b.bounds().into_iter().enumerate() {
        let fraction = b.fractions.as_ref().map(|f| sig9(f[i])).unwrap_or_default();
        writeln!(out, "{},{},{},{}", sig9(lo), sig9(hi), b.counts[i], fraction).unwrap();
    }
    writeln!(out, "no_fix,no_fix,{},", b.no_fix).unwrap();
    out
}

/// Gnuplot-style grid data: `x,y,error_m` rows with a blank line between
/// sweep rows. Points without a fix leave `error_m` empty.
pub fn surface_data(surface: &[Vec<SurfacePoint>]) -> String {
    let mut out = String::from(SURFACE_HEADER);
    out.push('\n');
    for (i, row) in surface.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for p in row {
            writeln!(out, "{},{},{}", sig9(p.x), sig9(p.y), opt(p.error_m)).unwrap();
        }
    }
    out
}

pub fn comparison_csv(c: &Comparison) -> String {
    let mut out = String::from(COMPARISON_HEADER);
    out.push('\n');
    for (lo, hi, fa, fb, delta) in c.bucket_rows() {
        writeln!(
            out,
            "{},{},{},{},{}",
            sig9(lo),
            sig9(hi),
            sig9(fa),
            sig9(fb),
            sig9(delta)
        )
        .unwrap();
    }
    out
}

/// `time_ms,src_id,dst_id|*,msg_type,payload...`
pub fn trace_line(e: &TraceEvent) -> String {
    let payload = match e.msg {
        Message::LocationStart { blind_id } => blind_id.to_string(),
        Message::Ack { beacon_id } => beacon_id.0.to_string(),
        Message::RssiTest { blind_id, seq } => format!("{blind_id},{seq}"),
        Message::RssiAvgRequest { blind_id } => blind_id.to_string(),
        Message::RssiAvgResponse {
            beacon_id,
            beacon_pos,
            avg_rssi_dbm,
            sample_count,
        } => format!(
            "{},{},{},{},{}",
            beacon_id.0,
            sig9(beacon_pos.x),
            sig9(beacon_pos.y),
            sig9(avg_rssi_dbm),
            sample_count
        ),
    };
    format!("{},{},{},{},{}", e.time_ms, e.src, e.dst, e.msg.type_name(), payload)
}

pub fn trace_text(trace: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in trace {
        out.push_str(&trace_line(e));
        out.push('\n');
    }
    out
}
