//! Output plumbing: JSON with 17 significant digits, CSV tables, the GSP1
//! binary path format, gnuplot two-column files, and atomic writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::sampling::GridSpec;

/// Magic bytes of the binary path format.
pub const GSP1_MAGIC: &[u8; 4] = b"GSP1";

/// Pretty JSON formatter that prints every float as `{:.16e}`, which
/// round-trips f64 exactly and never depends on shortest-repr heuristics.
struct ExactFloats<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl serde_json::ser::Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        write!(w, "{}", fmt_f64(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        write!(w, "{}", fmt_f64(value as f64))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// `{:.16e}` for finite values; `nan`, `inf`, `-inf` otherwise.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let fmt = ExactFloats { inner: serde_json::ser::PrettyFormatter::with_indent(b"  ") };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Numeric(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(String::from_utf8(out).expect("serde_json emits UTF-8"))
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub const CSV_HEADER: &str = "experiment,param,param_value,statistic,value,stderr";

/// One line of the results table.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub experiment: String,
    pub param: String,
    pub param_value: f64,
    pub statistic: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

impl CsvRow {
    pub fn new(experiment: &str, param: &str, param_value: f64, statistic: &str, value: f64, stderr: Option<f64>) -> Self {
        CsvRow {
            experiment: experiment.into(),
            param: param.into(),
            param_value,
            statistic: statistic.into(),
            value,
            stderr,
        }
    }
}

pub fn csv_table(rows: &[CsvRow]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.experiment,
            r.param,
            fmt_f64(r.param_value),
            r.statistic,
            fmt_f64(r.value),
            r.stderr.map(fmt_f64).unwrap_or_default()
        ));
    }
    s
}

/// Gnuplot-friendly `x y` lines preceded by a comment header.
pub fn plot_data(title: &str, columns: (&str, &str), points: &[(f64, f64)]) -> String {
    let mut s = format!("# {title}\n# {} {}\n", columns.0, columns.1);
    for (x, y) in points {
        s.push_str(&format!("{} {}\n", fmt_f64(*x), fmt_f64(*y)));
    }
    s
}

/// GSP1 layout, little endian: magic, u64 count, f64 step, f64 origin, then
/// `count` f64 values.
pub fn encode_gsp1(grid: &GridSpec, values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + 8 * values.len());
    out.extend_from_slice(GSP1_MAGIC);
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    out.extend_from_slice(&grid.step.to_le_bytes());
    out.extend_from_slice(&grid.origin.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_gsp1(bytes: &[u8]) -> Result<(GridSpec, Vec<f64>)> {
    let bad = |m: &str| Error::Io(format!("malformed GSP1 data: {m}"));
    if bytes.len() < 28 || &bytes[..4] != GSP1_MAGIC {
        return Err(bad("missing header"));
    }
    let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().expect("8 bytes") };
    let count = u64::from_le_bytes(word(4)) as usize;
    let step = f64::from_le_bytes(word(12));
    let origin = f64::from_le_bytes(word(20));
    if bytes.len() != 28 + 8 * count {
        return Err(bad("length does not match the count"));
    }
    let values = (0..count).map(|k| f64::from_le_bytes(word(28 + 8 * k))).collect();
    Ok((GridSpec { step, count, origin }, values))
}
