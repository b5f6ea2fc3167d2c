//! CSV, JSON and SVG output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lowrank_core::{Error, Result};
use serde_json::json;

use crate::experiments::TrialOutcome;
use crate::phase::PhaseCurve;
use crate::records::{write_records_csv, TrialRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "svg" => Ok(ReportFormat::Svg),
            _ => Err(Error::Parameter(format!("unknown report format {s:?}"))),
        }
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Input(e.to_string())
}

/// Writes into `dir` and returns the files written:
///
/// * csv: `records.csv`, plus `phase.csv` with a curve;
/// * json: `records.json`, with the curve under `"curve"` when present;
/// * svg: `phase.svg`, which needs a curve.
pub fn emit_report(
    records: &[TrialRecord],
    curve: Option<&PhaseCurve>,
    format: ReportFormat,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if records.is_empty() {
        return Err(Error::Parameter("no records to report".into()));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    match format {
        ReportFormat::Csv => {
            put("records.csv", write_records_csv(records)?)?;
            if let Some(c) = curve {
                put("phase.csv", phase_csv(c))?;
            }
        }
        ReportFormat::Json => {
            let doc = json!({ "records": records, "curve": curve });
            put("records.json", serde_json::to_string_pretty(&doc).map_err(json_error)?)?;
        }
        ReportFormat::Svg => {
            let c = curve.ok_or_else(|| Error::Parameter("an SVG report needs a phase curve".into()))?;
            put("phase.svg", render_svg(c))?;
        }
    }
    Ok(written)
}

/// `r,p_star,reference,mu0`, with `p_star` empty when no grid point met the
/// quota. The grid step is recorded in a leading comment.
pub fn phase_csv(curve: &PhaseCurve) -> String {
    let mut out = format!(
        "# n={} grid_step={} quota={}/{} linear_scan={}\nr,p_star,reference,mu0\n",
        curve.n,
        curve.grid_step,
        curve.success_quota,
        curve.trials_per_point,
        curve.linear_scan
    );
    for (i, r) in curve.ranks.iter().enumerate() {
        let p = curve.p_star[i].map_or_else(String::new, |p| format!("{p:?}"));
        let _ = writeln!(out, "{r},{p},{:?},{:?}", curve.reference[i], curve.mu0[i]);
    }
    out
}

/// One JSON object per line for trials that carry a detail.
pub fn details_jsonl(outcomes: &[TrialOutcome]) -> Result<String> {
    let mut out = String::new();
    for (trial, o) in outcomes.iter().enumerate() {
        if let Some(d) = &o.detail {
            let line = json!({ "trial": trial, "seed": o.record.seed.0, "report": d });
            out.push_str(&serde_json::to_string(&line).map_err(json_error)?);
            out.push('\n');
        }
    }
    Ok(out)
}

/// `trial,op_norm,cond2a,cond2b,pass` for certificate records.
pub fn certificate_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from("trial,op_norm,cond2a,cond2b,pass\n");
    for (trial, r) in records.iter().enumerate() {
        let get = |k: &str| r.extra.get(k).copied().unwrap_or(f64::NAN);
        let _ = writeln!(
            out,
            "{trial},{:?},{:?},{:?},{}",
            get("op_norm"),
            get("cond2a"),
            get("cond2b"),
            r.success
        );
    }
    out
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;

/// Scatter of `p_star` against `r` (one circle per rank that met the
/// quota) with the reference line as a polyline.
pub fn render_svg(curve: &PhaseCurve) -> String {
    let r_max = curve.ranks.iter().copied().max().unwrap_or(1).max(1) as f64;
    let y_max = curve
        .p_star
        .iter()
        .flatten()
        .chain(&curve.reference)
        .fold(0.0f64, |a, &b| a.max(b))
        .clamp(0.05, 1.0);
    let x = |r: f64| MARGIN + (WIDTH - 2.0 * MARGIN) * r / r_max;
    let y = |p: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * p.min(y_max) / y_max;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{x0:.1} {y0:.1} H{x1:.1} M{x0:.1} {y0:.1} V{y1:.1}" stroke="black" fill="none"/>"#,
        x0 = x(0.0),
        y0 = y(0.0),
        x1 = x(r_max),
        y1 = y(y_max)
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="14">rank r (n = {})</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0,
        curve.n
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" font-size="14" transform="rotate(-90 16 {:.1})" text-anchor="middle">minimal p</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );
    for &r in &curve.ranks {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{r}</text>"#,
            x(r as f64),
            y(0.0) + 16.0
        );
    }
    for k in 0..=4 {
        let p = y_max * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{p:.2}</text>"#,
            x(0.0) - 6.0,
            y(p) + 4.0
        );
    }
    let points: Vec<String> = curve
        .ranks
        .iter()
        .zip(&curve.reference)
        .map(|(&r, &p)| format!("{:.2},{:.2}", x(r as f64), y(p)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline class="reference" points="{}" stroke="gray" stroke-dasharray="6 4" fill="none"/>"#,
        points.join(" ")
    );
    for (&r, p) in curve.ranks.iter().zip(&curve.p_star) {
        if let Some(p) = p {
            let _ = writeln!(
                s,
                r#"<circle class="p-star" cx="{:.2}" cy="{:.2}" r="5" fill="steelblue"><title>r={r} p*={p}</title></circle>"#,
                x(r as f64),
                y(*p)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::reference_line;
    use lowrank_core::RngSeed;
    use std::collections::BTreeMap;
    use std::time::Duration;

    fn curve() -> PhaseCurve {
        let ranks = vec![2, 4, 8, 16];
        PhaseCurve {
            n: 240,
            reference: ranks.iter().map(|&r| reference_line(1.0, r, 240)).collect(),
            mu0: vec![1.0; 4],
            p_star: vec![Some(0.08), Some(0.14), Some(0.26), Some(0.5)],
            ranks,
            trials_per_point: 20,
            success_quota: 19,
            grid_step: 0.02,
            linear_scan: false,
            cells: Vec::new(),
        }
    }

    fn record() -> TrialRecord {
        TrialRecord {
            experiment: "phase".into(),
            n: 240,
            r: 2,
            p: 0.1,
            seed: RngSeed(1),
            rel_error: 1e-8,
            success: true,
            wall_time: Duration::from_millis(5),
            extra: BTreeMap::new(),
        }
    }

    #[test]
    fn svg_has_one_marker_per_rank_and_one_reference_line() {
        let svg = render_svg(&curve());
        assert_eq!(svg.matches("<circle").count(), 4);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn emit_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let recs = [record()];
        let c = curve();
        let csv = emit_report(&recs, None, ReportFormat::Csv, dir.path()).unwrap();
        assert_eq!(csv.len(), 1);
        let json = emit_report(&recs, Some(&c), ReportFormat::Json, dir.path()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json[0]).unwrap()).unwrap();
        assert_eq!(v["curve"]["ranks"].as_array().unwrap().len(), 4);
        assert!(emit_report(&recs, None, ReportFormat::Svg, dir.path()).is_err());
        assert!(emit_report(&[], None, ReportFormat::Csv, dir.path()).is_err());
        assert_eq!(emit_report(&recs, Some(&c), ReportFormat::Svg, dir.path()).unwrap().len(), 1);
    }

    #[test]
    fn phase_csv_marks_missing_p_star() {
        let mut c = curve();
        c.p_star[3] = None;
        let text = phase_csv(&c);
        assert!(text.lines().any(|l| l.starts_with("16,,")));
        assert!(text.starts_with("# n=240 grid_step=0.02"));
    }
}
