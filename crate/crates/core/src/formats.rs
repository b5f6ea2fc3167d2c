//! Plain-text formats for matrices, masks, golfing partitions, instance
//! manifests and solver sidecars.
//!
//! ```text
//! matrix     "rows cols" then one whitespace-separated row per line
//! mask       "rows cols p [symmetric]" then one 0-indexed "i j" per line
//! partition  "k0 q p"
//! instance   "kind n r seed" then one "key value" per line
//! sidecar    "iterations residual converged lambda"   (lambda "-" if unset)
//! ```
//!
//! Blank lines and lines starting with `#` are ignored everywhere. Parse
//! errors carry the 1-based line number.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, ObservationMask};
use crate::sampling::{GolfingPartition, RngSeed};
use crate::solvers::{DecompositionResult, SolverResult};

/// Largest `rows·cols` a header may declare.
pub const MAX_ENTRIES: usize = 1 << 40;

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Non-blank, non-comment lines with their 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn field<T: FromStr>(token: Option<&str>, line: usize, what: &str) -> Result<T> {
    let token = token.ok_or_else(|| parse_error(line, format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| parse_error(line, format!("invalid {what} {token:?}")))
}

fn no_more<'a>(mut tokens: impl Iterator<Item = &'a str>, line: usize) -> Result<()> {
    match tokens.next() {
        Some(t) => Err(parse_error(line, format!("unexpected trailing token {t:?}"))),
        None => Ok(()),
    }
}

fn header_shape(line: usize, rows: usize, cols: usize) -> Result<()> {
    match rows.checked_mul(cols) {
        Some(total) if total <= MAX_ENTRIES => Ok(()),
        _ => Err(parse_error(line, format!("shape {rows}x{cols} is too large"))),
    }
}

fn finite(x: f64, line: usize, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(parse_error(line, format!("{what} must be finite")))
    }
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_error(1, "empty matrix file"))?;
    let mut t = header.split_whitespace();
    let rows: usize = field(t.next(), hl, "row count")?;
    let cols: usize = field(t.next(), hl, "column count")?;
    no_more(t, hl)?;
    header_shape(hl, rows, cols)?;
    let mut data = Vec::new();
    let mut seen = 0;
    for (ln, line) in lines {
        if seen == rows {
            return Err(parse_error(ln, format!("more than {rows} rows")));
        }
        let before = data.len();
        for token in line.split_whitespace() {
            let x: f64 = field(Some(token), ln, "entry")?;
            data.push(finite(x, ln, "entry")?);
            if data.len() - before > cols {
                return Err(parse_error(ln, format!("more than {cols} entries in a row")));
            }
        }
        if data.len() - before != cols {
            return Err(parse_error(
                ln,
                format!("expected {cols} entries, found {}", data.len() - before),
            ));
        }
        seen += 1;
    }
    if seen != rows {
        return Err(parse_error(
            text.lines().count().max(1),
            format!("expected {rows} rows, found {seen}"),
        ));
    }
    DenseMatrix::from_row_major(rows, cols, data)
}

/// Entries use the shortest decimal form that parses back to the same value.
pub fn write_matrix(m: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row = m.row(i);
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{x:?}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_mask(text: &str) -> Result<ObservationMask> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_error(1, "empty mask file"))?;
    let mut t = header.split_whitespace();
    let rows: usize = field(t.next(), hl, "row count")?;
    let cols: usize = field(t.next(), hl, "column count")?;
    let p: f64 = field(t.next(), hl, "probability")?;
    let symmetric = match t.next() {
        None => false,
        Some("symmetric") => true,
        Some(other) => return Err(parse_error(hl, format!("unknown mask flag {other:?}"))),
    };
    no_more(t, hl)?;
    header_shape(hl, rows, cols)?;
    let mut pairs = Vec::new();
    for (ln, line) in lines {
        let mut t = line.split_whitespace();
        let i: usize = field(t.next(), ln, "row index")?;
        let j: usize = field(t.next(), ln, "column index")?;
        no_more(t, ln)?;
        if i >= rows || j >= cols {
            return Err(parse_error(ln, format!("index ({i}, {j}) outside {rows}x{cols}")));
        }
        pairs.push((i, j));
    }
    ObservationMask::new(rows, cols, p, symmetric, pairs).map_err(|e| parse_error(hl, e.to_string()))
}

pub fn write_mask(mask: &ObservationMask) -> String {
    let mut out = format!("{} {} {:?}", mask.rows(), mask.cols(), mask.p());
    if mask.is_symmetric() {
        out.push_str(" symmetric");
    }
    out.push('\n');
    for (i, j) in mask.iter() {
        let _ = writeln!(out, "{i} {j}");
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PartitionManifest {
    pub k0: usize,
    pub q: f64,
    pub p: f64,
}

impl PartitionManifest {
    pub fn of(partition: &GolfingPartition) -> Self {
        PartitionManifest {
            k0: partition.k0,
            q: partition.q,
            p: partition.p,
        }
    }
}

pub fn parse_partition_manifest(text: &str) -> Result<PartitionManifest> {
    let mut lines = content_lines(text);
    let (ln, line) = lines.next().ok_or_else(|| parse_error(1, "empty partition manifest"))?;
    let mut t = line.split_whitespace();
    let k0: usize = field(t.next(), ln, "k0")?;
    let q: f64 = field(t.next(), ln, "q")?;
    let p: f64 = field(t.next(), ln, "p")?;
    no_more(t, ln)?;
    if let Some((extra, _)) = lines.next() {
        return Err(parse_error(extra, "partition manifest has a single line"));
    }
    if k0 == 0 {
        return Err(parse_error(ln, "k0 must be at least 1"));
    }
    for (x, what) in [(q, "q"), (p, "p")] {
        if !(x.is_finite() && x > 0.0 && x <= 1.0) {
            return Err(parse_error(ln, format!("{what} must lie in (0, 1]")));
        }
    }
    Ok(PartitionManifest { k0, q, p })
}

pub fn write_partition_manifest(m: &PartitionManifest) -> String {
    format!("{} {:?} {:?}\n", m.k0, m.q, m.p)
}

fn batch_file(k: usize) -> String {
    format!("batch_{k:04}.mask")
}

/// Writes `manifest.txt` and one mask file per batch into `dir`.
pub fn write_partition(dir: &Path, partition: &GolfingPartition) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join("manifest.txt"),
        write_partition_manifest(&PartitionManifest::of(partition)),
    )?;
    for (k, batch) in partition.batches.iter().enumerate() {
        fs::write(dir.join(batch_file(k)), write_mask(batch))?;
    }
    Ok(())
}

pub fn read_partition(dir: &Path) -> Result<GolfingPartition> {
    let manifest = parse_partition_manifest(&fs::read_to_string(dir.join("manifest.txt"))?)?;
    let batches = (0..manifest.k0)
        .map(|k| parse_mask(&fs::read_to_string(dir.join(batch_file(k)))?))
        .collect::<Result<Vec<_>>>()?;
    let shape = batches[0].shape();
    if batches.iter().any(|b| b.shape() != shape) {
        return Err(Error::Input("partition batches disagree in shape".into()));
    }
    Ok(GolfingPartition {
        batches,
        q: manifest.q,
        p: manifest.p,
        k0: manifest.k0,
    })
}

/// Header of an instance bundle plus its type-specific fields.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceManifest {
    pub kind: String,
    pub n: usize,
    pub r: usize,
    pub seed: RngSeed,
    pub fields: BTreeMap<String, String>,
}

pub fn parse_instance_manifest(text: &str) -> Result<InstanceManifest> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_error(1, "empty instance manifest"))?;
    let mut t = header.split_whitespace();
    let kind: String = field(t.next(), hl, "kind")?;
    let n: usize = field(t.next(), hl, "n")?;
    let r: usize = field(t.next(), hl, "r")?;
    let seed: u64 = field(t.next(), hl, "seed")?;
    no_more(t, hl)?;
    let mut fields = BTreeMap::new();
    for (ln, line) in lines {
        let (key, value) = match line.split_once(char::is_whitespace) {
            Some((k, v)) => (k, v.trim()),
            None => return Err(parse_error(ln, format!("field {line:?} has no value"))),
        };
        if fields.insert(key.to_string(), value.to_string()).is_some() {
            return Err(parse_error(ln, format!("duplicate field {key:?}")));
        }
    }
    Ok(InstanceManifest {
        kind,
        n,
        r,
        seed: RngSeed(seed),
        fields,
    })
}

/// Field keys must be single tokens and values single lines.
pub fn write_instance_manifest(m: &InstanceManifest) -> Result<String> {
    let token = |s: &str| !s.is_empty() && !s.contains(char::is_whitespace) && !s.starts_with('#');
    if !token(&m.kind) {
        return Err(Error::Parameter(format!("instance kind {:?} is not a single token", m.kind)));
    }
    let mut out = format!("{} {} {} {}\n", m.kind, m.n, m.r, m.seed.0);
    for (k, v) in &m.fields {
        if !token(k) || v.trim().is_empty() || v.contains('\n') || v.trim() != v {
            return Err(Error::Parameter(format!("field {k:?} = {v:?} cannot be serialized")));
        }
        let _ = writeln!(out, "{k} {v}");
    }
    Ok(out)
}

/// Writes `manifest.txt` and `<name>.mat` per matrix into `dir`.
pub fn write_instance_bundle(
    dir: &Path,
    manifest: &InstanceManifest,
    matrices: &[(&str, &DenseMatrix)],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("manifest.txt"), write_instance_manifest(manifest)?)?;
    for (name, m) in matrices {
        fs::write(dir.join(format!("{name}.mat")), write_matrix(m))?;
    }
    Ok(())
}

pub fn read_instance_bundle(
    dir: &Path,
    names: &[&str],
) -> Result<(InstanceManifest, Vec<DenseMatrix>)> {
    let manifest = parse_instance_manifest(&fs::read_to_string(dir.join("manifest.txt"))?)?;
    let matrices = names
        .iter()
        .map(|name| parse_matrix(&fs::read_to_string(dir.join(format!("{name}.mat")))?))
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, matrices))
}

/// Run summary stored next to an estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSidecar {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub lambda: Option<f64>,
}

impl From<&SolverResult> for SolverSidecar {
    fn from(r: &SolverResult) -> Self {
        SolverSidecar {
            iterations: r.iterations,
            residual: r.final_residual,
            converged: r.converged,
            lambda: None,
        }
    }
}

impl From<&DecompositionResult> for SolverSidecar {
    fn from(r: &DecompositionResult) -> Self {
        SolverSidecar {
            iterations: r.iterations,
            residual: r.final_residual,
            converged: r.converged,
            lambda: Some(r.lambda_used),
        }
    }
}

pub fn parse_solver_sidecar(text: &str) -> Result<SolverSidecar> {
    let mut lines = content_lines(text);
    let (ln, line) = lines.next().ok_or_else(|| parse_error(1, "empty solver sidecar"))?;
    let mut t = line.split_whitespace();
    let iterations: usize = field(t.next(), ln, "iteration count")?;
    let residual: f64 = field(t.next(), ln, "residual")?;
    let converged: bool = field(t.next(), ln, "convergence flag")?;
    let lambda = match t.next() {
        Some("-") => None,
        other => Some(finite(field(other, ln, "lambda")?, ln, "lambda")?),
    };
    no_more(t, ln)?;
    if let Some((extra, _)) = lines.next() {
        return Err(parse_error(extra, "solver sidecar has a single line"));
    }
    if residual.is_nan() {
        return Err(parse_error(ln, "residual is NaN"));
    }
    Ok(SolverSidecar {
        iterations,
        residual,
        converged,
        lambda,
    })
}

pub fn write_solver_sidecar(s: &SolverSidecar) -> String {
    let lambda = s.lambda.map_or_else(|| "-".to_string(), |l| format!("{l:?}"));
    format!("{} {:?} {} {}\n", s.iterations, s.residual, s.converged, lambda)
}

pub fn read_matrix_file(path: &Path) -> Result<DenseMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix_file(path: &Path, m: &DenseMatrix) -> Result<()> {
    Ok(fs::write(path, write_matrix(m))?)
}

pub fn read_mask_file(path: &Path) -> Result<ObservationMask> {
    parse_mask(&fs::read_to_string(path)?)
}

pub fn write_mask_file(path: &Path, mask: &ObservationMask) -> Result<()> {
    Ok(fs::write(path, write_mask(mask))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{golfing_partition, sample_bernoulli};

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = DenseMatrix::from_fn(3, 4, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0) - 1e-17);
        assert_eq!(parse_matrix(&write_matrix(&m)).unwrap(), m);
        let empty = DenseMatrix::zeros(0, 3);
        assert_eq!(parse_matrix(&write_matrix(&empty)).unwrap(), empty);
    }

    #[test]
    fn matrix_errors_carry_line_numbers() {
        let cases = [
            ("", 1),
            ("2 2\n1 2\n3\n", 3),
            ("2 2\n1 2\n3 4\n5 6\n", 4),
            ("1 2\n1 x\n", 2),
            ("1 1\nNaN\n", 2),
            ("1 1 1\n0\n", 1),
            ("99999999999 99999999999\n", 1),
        ];
        for (text, line) in cases {
            match parse_matrix(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let m = parse_matrix("# shape\n2 1\n\n1.5\n# second\n-2\n").unwrap();
        assert_eq!(m.as_slice(), &[1.5, -2.0]);
    }

    #[test]
    fn mask_round_trip() {
        let a = sample_bernoulli(7, 5, 0.4, false, RngSeed(2)).unwrap();
        assert_eq!(parse_mask(&write_mask(&a)).unwrap(), a);
        let s = sample_bernoulli(6, 6, 0.5, true, RngSeed(3)).unwrap();
        assert_eq!(parse_mask(&write_mask(&s)).unwrap(), s);
        assert!(parse_mask("3 3 0.5\n0 3\n").is_err());
        assert!(parse_mask("3 3 0.5\n0 1\n0 1\n").is_err());
        assert!(parse_mask("3 3 0.5 symmetric\n0 1\n").is_err());
        assert!(parse_mask("3 3 1.5\n").is_err());
    }

    #[test]
    fn partition_round_trip() {
        let part = golfing_partition(5, 4, 0.6, 3, RngSeed(1)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_partition(dir.path(), &part).unwrap();
        let back = read_partition(dir.path()).unwrap();
        assert_eq!(back.k0, 3);
        assert_eq!(back.q, part.q);
        assert_eq!(back.batches, part.batches);
        assert!(parse_partition_manifest("0 0.1 0.2").is_err());
        assert!(parse_partition_manifest("2 0.1 0.2\n3 0.1 0.2").is_err());
    }

    #[test]
    fn instance_manifest_round_trip() {
        let mut fields = BTreeMap::new();
        fields.insert("clique".to_string(), "3 7 11".to_string());
        fields.insert("tau".to_string(), "0.3333333333333333".to_string());
        let m = InstanceManifest {
            kind: "planted_clique".into(),
            n: 20,
            r: 1,
            seed: RngSeed(u64::MAX),
            fields,
        };
        let text = write_instance_manifest(&m).unwrap();
        assert_eq!(parse_instance_manifest(&text).unwrap(), m);
        assert!(parse_instance_manifest("block 10 2 1\nkey\n").is_err());
        assert!(parse_instance_manifest("block 10 2 1\na 1\na 2\n").is_err());
    }

    #[test]
    fn instance_bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = InstanceManifest {
            kind: "block_diagonal".into(),
            n: 4,
            r: 2,
            seed: RngSeed(0),
            fields: BTreeMap::new(),
        };
        let a = DenseMatrix::identity(4);
        write_instance_bundle(dir.path(), &m, &[("truth", &a)]).unwrap();
        let (back, mats) = read_instance_bundle(dir.path(), &["truth"]).unwrap();
        assert_eq!(back, m);
        assert_eq!(mats, vec![a]);
    }

    #[test]
    fn sidecar_round_trip() {
        for s in [
            SolverSidecar { iterations: 12, residual: 3.5e-9, converged: true, lambda: None },
            SolverSidecar { iterations: 0, residual: 0.0, converged: false, lambda: Some(0.05) },
        ] {
            assert_eq!(parse_solver_sidecar(&write_solver_sidecar(&s)).unwrap(), s);
        }
        assert!(parse_solver_sidecar("1 0.1 maybe -").is_err());
    }
}
