//! Snapshot files.
//!
//! **CSV.** One matrix row (state component) per line, comma-separated,
//! one column per time sample. Lines starting with `#` are comments; a
//! `# dt=<value>` line is required and `# layout=sequence|pairs` is optional
//! (default `sequence`). A sequence file holds `z_0 .. z_n`; a pairs file
//! holds `[X̃ | Ỹ]` side by side.
//!
//! **Binary.** Little-endian: 8-byte magic (`CDMDSEQ1` for a sequence,
//! `CDMDPAR1` for pairs), `u64` rows, `u64` cols, `f64` dt, then
//! `rows · cols` `f64` values in column-major order.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dmd::SnapshotData;
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;

const MAGIC_SEQUENCE: &[u8; 8] = b"CDMDSEQ1";
const MAGIC_PAIRS: &[u8; 8] = b"CDMDPAR1";
const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotFormat {
    Csv,
    Binary,
}

impl SnapshotFormat {
    /// `.csv` and `.txt` are CSV; everything else is binary.
    pub fn from_path(path: &Path) -> SnapshotFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") || ext.eq_ignore_ascii_case("txt") => {
                SnapshotFormat::Csv
            }
            _ => SnapshotFormat::Binary,
        }
    }
}

impl FromStr for SnapshotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(SnapshotFormat::Csv),
            "bin" | "binary" => Ok(SnapshotFormat::Binary),
            other => Err(Error::InvalidArgument(format!("unknown snapshot format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Sequence,
    Pairs,
}

/// `true` when `ytilde` is `xtilde` shifted by one column.
fn is_sequence(data: &SnapshotData) -> bool {
    let n = data.n_pairs();
    data.xtilde.columns(1, n - 1) == data.ytilde.columns(0, n - 1)
}

/// Stacked matrix to write and its layout. Sequential data is stored once.
fn layout_matrix(data: &SnapshotData) -> (Layout, RealMatrix) {
    let (m, n) = data.xtilde.shape();
    if is_sequence(data) {
        let mut z = RealMatrix::zeros(m, n + 1);
        z.columns_mut(0, n).copy_from(&data.xtilde);
        z.set_column(n, &data.ytilde.column(n - 1));
        (Layout::Sequence, z)
    } else {
        let mut z = RealMatrix::zeros(m, 2 * n);
        z.columns_mut(0, n).copy_from(&data.xtilde);
        z.columns_mut(n, n).copy_from(&data.ytilde);
        (Layout::Pairs, z)
    }
}

fn from_layout(layout: Layout, z: RealMatrix, dt: f64) -> Result<SnapshotData> {
    match layout {
        Layout::Sequence => SnapshotData::from_sequence(&z, dt),
        Layout::Pairs => {
            if !z.ncols().is_multiple_of(2) || z.ncols() == 0 {
                return Err(Error::Dimension(format!(
                    "a pairs layout needs an even, nonzero column count, got {}",
                    z.ncols()
                )));
            }
            let n = z.ncols() / 2;
            SnapshotData::new(z.columns(0, n).into_owned(), z.columns(n, n).into_owned(), dt)
        }
    }
}

pub fn save_snapshots(data: &SnapshotData, path: &Path, format: SnapshotFormat) -> Result<()> {
    let bytes = match format {
        SnapshotFormat::Csv => to_csv(data).into_bytes(),
        SnapshotFormat::Binary => to_binary(data),
    };
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load_snapshots(path: &Path, format: SnapshotFormat) -> Result<SnapshotData> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let parsed = match format {
        SnapshotFormat::Csv => std::str::from_utf8(&bytes)
            .map_err(|e| Error::Parse {
                offset: e.valid_up_to() as u64,
                message: "invalid UTF-8".into(),
            })
            .and_then(parse_csv),
        SnapshotFormat::Binary => parse_binary(&bytes),
    };
    parsed.map_err(|e| match e {
        Error::Parse { offset, message } => Error::Parse {
            offset,
            message: format!("{}: {message}", path.display()),
        },
        e => e,
    })
}

pub fn to_csv(data: &SnapshotData) -> String {
    let (layout, z) = layout_matrix(data);
    let mut out = format!("# dt={:?}\n", data.dt);
    if layout == Layout::Pairs {
        out.push_str("# layout=pairs\n");
    }
    for row in z.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_csv(text: &str) -> Result<SnapshotData> {
    let mut dt = None;
    let mut layout = Layout::Sequence;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0usize;
    for (lineno, raw) in text.split_inclusive('\n').enumerate() {
        let line_start = offset;
        offset += raw.len();
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let Some((key, value)) = comment.split_once('=') else { continue };
            let value = value.trim();
            match key.trim() {
                "dt" => {
                    let v: f64 = value.parse().map_err(|_| Error::Parse {
                        offset: line_start as u64,
                        message: format!("line {}: bad dt value '{value}'", lineno + 1),
                    })?;
                    dt = Some(v);
                }
                "layout" => {
                    layout = match value {
                        "sequence" => Layout::Sequence,
                        "pairs" => Layout::Pairs,
                        _ => {
                            return Err(Error::Parse {
                                offset: line_start as u64,
                                message: format!("line {}: unknown layout '{value}'", lineno + 1),
                            })
                        }
                    }
                }
                _ => {}
            }
            continue;
        }
        let mut row = Vec::new();
        let mut cell_start = line_start + (raw.len() - raw.trim_start().len());
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                offset: cell_start as u64,
                message: format!(
                    "row {} (line {}): cannot parse '{}' as a number",
                    rows.len() + 1,
                    lineno + 1,
                    cell.trim()
                ),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "row {} (line {}) contains {v}",
                    rows.len() + 1,
                    lineno + 1
                )));
            }
            row.push(v);
            cell_start += cell.len() + 1;
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    offset: line_start as u64,
                    message: format!(
                        "row {} (line {}) has {} entries, expected {}",
                        rows.len() + 1,
                        lineno + 1,
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    let dt = dt.ok_or(Error::Parse {
        offset: 0,
        message: "missing '# dt=<value>' header".into(),
    })?;
    if rows.is_empty() {
        return Err(Error::Parse {
            offset: offset as u64,
            message: "no data rows".into(),
        });
    }
    let cols = rows[0].len();
    let z = RealMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    from_layout(layout, z, dt)
}

pub fn to_binary(data: &SnapshotData) -> Vec<u8> {
    let (layout, z) = layout_matrix(data);
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * z.len());
    out.extend_from_slice(match layout {
        Layout::Sequence => MAGIC_SEQUENCE,
        Layout::Pairs => MAGIC_PAIRS,
    });
    out.extend_from_slice(&(z.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(z.ncols() as u64).to_le_bytes());
    out.extend_from_slice(&data.dt.to_le_bytes());
    for v in z.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"))
}

pub fn parse_binary(bytes: &[u8]) -> Result<SnapshotData> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Parse {
            offset: bytes.len() as u64,
            message: format!("file ends inside the {HEADER_LEN}-byte header"),
        });
    }
    let layout = match &bytes[0..8] {
        m if m == MAGIC_SEQUENCE => Layout::Sequence,
        m if m == MAGIC_PAIRS => Layout::Pairs,
        _ => {
            return Err(Error::Parse {
                offset: 0,
                message: "bad magic; expected CDMDSEQ1 or CDMDPAR1".into(),
            })
        }
    };
    let rows = read_u64(bytes, 8);
    let cols = read_u64(bytes, 16);
    let dt = f64::from_le_bytes(bytes[24..32].try_into().expect("8-byte slice"));
    let payload = (bytes.len() - HEADER_LEN) as u64;
    let expected = rows.checked_mul(cols).and_then(|c| c.checked_mul(8));
    if expected != Some(payload) {
        return Err(Error::Dimension(format!(
            "header declares {rows}x{cols} values but the payload has {payload} bytes"
        )));
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let mut values = Vec::with_capacity(rows * cols);
    for (k, chunk) in bytes[HEADER_LEN..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "entry ({}, {}) at byte offset {} is {v}",
                k % rows,
                k / rows,
                HEADER_LEN + 8 * k
            )));
        }
        values.push(v);
    }
    let z = RealMatrix::from_vec(rows, cols, values);
    from_layout(layout, z, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;
    use crate::systems::{add_noise, gen_linear_periodic, LinearPeriodicSpec, NoiseSpec};

    fn noisy() -> SnapshotData {
        let d = gen_linear_periodic(&LinearPeriodicSpec { n: 7, ..Default::default() }).unwrap();
        add_noise(&d, &NoiseSpec::variance(0.1, 1)).unwrap()
    }

    #[test]
    fn csv_round_trip_bit_exact() {
        let clean = gen_linear_periodic(&LinearPeriodicSpec { n: 7, ..Default::default() }).unwrap();
        for d in [clean, noisy()] {
            let back = parse_csv(&to_csv(&d)).unwrap();
            assert_eq!(back, d);
        }
        let mut g = rng(3);
        let x = random_matrix(&mut g, 3, 4) * 1e-300;
        let y = random_matrix(&mut g, 3, 4) * 1e300;
        let d = SnapshotData::new(x, y, 0.1).unwrap();
        assert_eq!(parse_csv(&to_csv(&d)).unwrap(), d);
    }

    #[test]
    fn binary_round_trip_bit_exact() {
        let clean = gen_linear_periodic(&LinearPeriodicSpec { n: 7, ..Default::default() }).unwrap();
        for d in [clean, noisy()] {
            let bytes = to_binary(&d);
            assert_eq!(parse_binary(&bytes).unwrap(), d);
        }
    }

    #[test]
    fn sequence_is_stored_once() {
        let d = gen_linear_periodic(&LinearPeriodicSpec { n: 7, ..Default::default() }).unwrap();
        assert_eq!(to_binary(&d).len(), HEADER_LEN + 8 * 2 * 8);
        assert_eq!(&to_binary(&d)[..8], MAGIC_SEQUENCE);
        assert_eq!(&to_binary(&noisy())[..8], MAGIC_PAIRS);
        assert!(to_csv(&noisy()).contains("# layout=pairs"));
    }

    #[test]
    fn csv_header_and_layout() {
        let d = parse_csv("# dt=0.5\n1,2,3\n4,5,6\n").unwrap();
        assert_eq!(d.dt, 0.5);
        assert_eq!(d.xtilde, RealMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 5.0]));
        assert_eq!(d.ytilde, RealMatrix::from_row_slice(2, 2, &[2.0, 3.0, 5.0, 6.0]));
        let p = parse_csv("# dt=1\n# layout=pairs\n1,2,3,4\n").unwrap();
        assert_eq!(p.xtilde, RealMatrix::from_row_slice(1, 2, &[1.0, 2.0]));
        assert_eq!(p.ytilde, RealMatrix::from_row_slice(1, 2, &[3.0, 4.0]));
    }

    #[test]
    fn csv_ragged_rows_named() {
        let text = "# dt=1\n1,2,3\n4,5\n";
        match parse_csv(text) {
            Err(Error::Parse { offset, message }) => {
                assert_eq!(offset, 13);
                assert!(message.contains("row 2"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(parse_csv("1,2\n3,4\n"), Err(Error::Parse { .. })));
        match parse_csv("# dt=1\n1,x\n") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 9),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_csv("# dt=1\n1,NaN\n"), Err(Error::NonFinite(_))));
        assert!(matches!(parse_csv("# dt=1\n# layout=pairs\n1,2,3\n"), Err(Error::Dimension(_))));
        assert!(matches!(parse_csv("# dt=0\n1,2\n"), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn binary_errors() {
        let d = noisy();
        let mut bytes = to_binary(&d);
        bytes.pop();
        assert!(matches!(parse_binary(&bytes), Err(Error::Dimension(_))));
        assert!(matches!(parse_binary(&bytes[..10]), Err(Error::Parse { .. })));
        let mut bad = to_binary(&d);
        bad[0] = b'X';
        assert!(matches!(parse_binary(&bad), Err(Error::Parse { offset: 0, .. })));
        let mut nan = to_binary(&d);
        nan[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        assert!(matches!(parse_binary(&nan), Err(Error::NonFinite(_))));
    }

    #[test]
    fn file_round_trip_and_missing_path() {
        let dir = tempfile::tempdir().unwrap();
        let d = noisy();
        for (name, fmt) in [("a.csv", SnapshotFormat::Csv), ("a.bin", SnapshotFormat::Binary)] {
            let p = dir.path().join(name);
            save_snapshots(&d, &p, fmt).unwrap();
            assert_eq!(SnapshotFormat::from_path(&p), fmt);
            assert_eq!(load_snapshots(&p, fmt).unwrap(), d);
        }
        let missing = dir.path().join("nope.csv");
        match load_snapshots(&missing, SnapshotFormat::Csv) {
            Err(Error::Io { path, .. }) => assert_eq!(path, missing),
            other => panic!("{other:?}"),
        }
    }
}
