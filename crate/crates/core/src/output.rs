//! CSV and JSON writers for command outputs.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::line::Interval;
use crate::measure::DirectionSet;

#[derive(Serialize)]
struct ScanRow {
    theta: f64,
    l2_estimate: f64,
    #[serde(rename = "in_E")]
    in_e: bool,
}

/// One row per grid direction, then a `#` comment line with the excluded
/// fraction.
pub fn write_scan_csv(e: &DirectionSet, mut out: impl Write) -> Result<()> {
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for ((&theta, &l2), &in_e) in e.theta_grid.iter().zip(&e.l2).zip(&e.member) {
            w.serialize(ScanRow {
                theta,
                l2_estimate: l2,
                in_e,
            })
            .map_err(std::io::Error::other)?;
        }
        w.flush()?;
    }
    writeln!(out, "# excluded_fraction={}", e.excluded_fraction)?;
    Ok(())
}

#[derive(Serialize)]
struct GapRow {
    theta: f64,
    lo: f64,
    hi: f64,
    width: f64,
}

/// Gap scan: every projection gap above the resolution, per direction.
pub fn write_gaps_csv(gaps: &[(f64, Vec<Interval>)], mut out: impl Write) -> Result<()> {
    // the header is written even when there are no gaps
    writeln!(out, "theta,lo,hi,width")?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for (theta, list) in gaps {
        for g in list {
            w.serialize(GapRow {
                theta: *theta,
                lo: g.lo,
                hi: g.hi,
                width: g.length(),
            })
            .map_err(std::io::Error::other)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline; key order follows field order.
pub fn write_json(value: &impl Serialize, mut out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}
