//! File formats: data and label CSVs, fixed-precision JSON, atomic writes.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};

/// Floats are written with 17 significant digits.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with floats in `{:.16e}` form. Non-finite floats become `null`.
struct FixedFormatter(PrettyFormatter<'static>);

impl Formatter for FixedFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFormatter(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Numerical(format!("cannot serialize output: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::Validation(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| Error::Numerical(format!("cannot format csv: {e}"));
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    w.into_inner().map_err(|e| Error::Numerical(format!("cannot format csv: {e}")))
}

/// A data CSV: header row, sample ids in the first column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    pub sample_ids: Vec<String>,
    pub column_names: Vec<String>,
    pub values: Array2<f64>,
}

fn parse_error(path: &Path, line: u64, column: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        column,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
        _ => parse_error(path, line, 0, e.to_string()),
    }
}

pub fn read_data_csv(path: &Path) -> Result<DataTable> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 2 {
        return Err(parse_error(path, 1, 1, "expected a sample id column and at least one variable"));
    }
    let column_names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let p = column_names.len();
    let mut sample_ids = Vec::new();
    let mut flat = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |pos| pos.line());
        if record.len() != p + 1 {
            return Err(parse_error(path, line, 1, format!("expected {} fields, found {}", p + 1, record.len())));
        }
        sample_ids.push(record[0].to_owned());
        for (c, field) in record.iter().enumerate().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_error(path, line, c as u64 + 1, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_error(path, line, c as u64 + 1, format!("non-finite value {field:?}")));
            }
            flat.push(v);
        }
    }
    let n = sample_ids.len();
    let values = Array2::from_shape_vec((n, p), flat).expect("row lengths checked");
    Ok(DataTable {
        sample_ids,
        column_names,
        values,
    })
}

/// Reads `sample_id,label` rows.
pub fn read_labels_csv(path: &Path) -> Result<Vec<usize>> {
    let mut rdr = reader(path)?;
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |pos| pos.line());
        let field = record
            .get(1)
            .ok_or_else(|| parse_error(path, line, 2, "missing label column"))?;
        labels.push(
            field
                .trim()
                .parse()
                .map_err(|_| parse_error(path, line, 2, format!("not a label: {field:?}")))?,
        );
    }
    Ok(labels)
}

pub fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_error(path, e.line() as u64, e.column() as u64, e.to_string()))
}
