//! Per-trial records and their CSV form.

use std::collections::BTreeMap;
use std::time::Duration;

use lowrank_core::solvers::SUCCESS_THRESHOLD;
use lowrank_core::{Error, Result, RngSeed};
use serde::{Deserialize, Serialize};

/// CSV header. `extra` holds the remaining measurements as `key=value`
/// pairs joined by `;`.
pub const CSV_HEADER: [&str; 9] = [
    "experiment",
    "n",
    "r",
    "p",
    "seed",
    "rel_error",
    "success",
    "wall_time",
    "extra",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub n: usize,
    pub r: usize,
    pub p: f64,
    pub seed: RngSeed,
    pub rel_error: f64,
    pub success: bool,
    /// Monotonic wall time of the trial.
    pub wall_time: Duration,
    pub extra: BTreeMap<String, f64>,
}

/// Recovery counts as exact when the relative error is below `1e-4` and the
/// solver converged.
pub fn recovery_success(rel_error: f64, converged: bool) -> bool {
    converged && rel_error < SUCCESS_THRESHOLD
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    experiment: String,
    n: usize,
    r: usize,
    p: f64,
    seed: u64,
    rel_error: f64,
    success: bool,
    /// Seconds with exactly nine decimals, so nanoseconds survive.
    wall_time: String,
    extra: String,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn encode_extra(extra: &BTreeMap<String, f64>) -> Result<String> {
    let mut parts = Vec::with_capacity(extra.len());
    for (k, v) in extra {
        if !valid_key(k) {
            return Err(Error::Parameter(format!("record key {k:?} cannot be serialized")));
        }
        parts.push(format!("{k}={v:?}"));
    }
    Ok(parts.join(";"))
}

fn decode_extra(text: &str, line: usize) -> Result<BTreeMap<String, f64>> {
    let mut extra = BTreeMap::new();
    if text.is_empty() {
        return Ok(extra);
    }
    for part in text.split(';') {
        let bad = || Error::Parse {
            line,
            message: format!("malformed extra field {part:?}"),
        };
        let (k, v) = part.split_once('=').ok_or_else(bad)?;
        if !valid_key(k) {
            return Err(bad());
        }
        let v: f64 = v.parse().map_err(|_| bad())?;
        if extra.insert(k.to_string(), v).is_some() {
            return Err(bad());
        }
    }
    Ok(extra)
}

pub fn write_records_csv(records: &[TrialRecord]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER).map_err(csv_error)?;
    for r in records {
        if r.experiment.contains(['\n', '\r']) {
            return Err(Error::Parameter("experiment tags must be single-line".into()));
        }
        w.serialize(CsvRow {
            experiment: r.experiment.clone(),
            n: r.n,
            r: r.r,
            p: r.p,
            seed: r.seed.0,
            rel_error: r.rel_error,
            success: r.success,
            wall_time: format!("{}.{:09}", r.wall_time.as_secs(), r.wall_time.subsec_nanos()),
            extra: encode_extra(&r.extra)?,
        })
        .map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// `secs[.fraction]` with at most nine fractional digits.
fn parse_duration(text: &str) -> Option<Duration> {
    let (secs, frac) = text.split_once('.').unwrap_or((text, ""));
    let digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if secs.is_empty() || !digits(secs) || !digits(frac) || frac.len() > 9 {
        return None;
    }
    let nanos: u32 = if frac.is_empty() {
        0
    } else {
        frac.parse::<u32>().ok()? * 10u32.pow(9 - frac.len() as u32)
    };
    Some(Duration::new(secs.parse().ok()?, nanos))
}

pub fn parse_records_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_error)?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for row in reader.deserialize::<CsvRow>() {
        let row = row.map_err(csv_error)?;
        let line = out.len() + 2;
        let wall_time = parse_duration(&row.wall_time).ok_or_else(|| Error::Parse {
            line,
            message: format!("invalid wall time {:?}", row.wall_time),
        })?;
        out.push(TrialRecord {
            experiment: row.experiment,
            n: row.n,
            r: row.r,
            p: row.p,
            seed: RngSeed(row.seed),
            rel_error: row.rel_error,
            success: row.success,
            wall_time,
            extra: decode_extra(&row.extra, line)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> TrialRecord {
        TrialRecord {
            experiment: "complete".into(),
            n: 40,
            r: 2,
            p: 0.3,
            seed: RngSeed(u64::MAX),
            rel_error: 1.234e-9,
            success: true,
            wall_time: Duration::new(3, 123_456_789),
            extra: BTreeMap::from([("iterations".to_string(), 57.0), ("residual".into(), 3e-8)]),
        }
    }

    #[test]
    fn header_only_for_no_records() {
        let text = write_records_csv(&[]).unwrap();
        assert_eq!(text.trim(), CSV_HEADER.join(","));
        assert!(parse_records_csv(&text).unwrap().is_empty());
    }

    #[test]
    fn single_record_round_trips() {
        let r = record();
        let text = write_records_csv(std::slice::from_ref(&r)).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_records_csv(&text).unwrap(), vec![r]);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let head = CSV_HEADER.join(",");
        for bad in [
            "experiment,n\n".to_string(),
            format!("{head}\ncomplete,4,1,0.5,1,0.1,true,0.1,bad\n"),
            format!("{head}\ncomplete,4,1,0.5,1,0.1,yes,0.1,\n"),
            format!("{head}\ncomplete,4,1,0.5,1,0.1,true,-1,\n"),
        ] {
            assert!(parse_records_csv(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn success_needs_convergence() {
        assert!(recovery_success(9e-5, true));
        assert!(!recovery_success(9e-5, false));
        assert!(!recovery_success(1e-4, true));
    }
}
