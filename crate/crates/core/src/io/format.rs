//! Self-describing text formats.
//!
//! Traces are whitespace-separated columns under a `#` header naming every
//! column with its unit. Maps carry a header, one axis line with the column
//! grid, then one line per row starting with the row coordinate. Numbers are
//! written in the shortest form that parses back to the same double, so
//! `read(write(x)) == x` bit for bit. Each data file may have a JSON sidecar
//! `<file>.json` holding the metadata.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::error::{Error, Result};
use crate::synth::{Metadata, SpectroMap, TimeTrace};

pub const TRACE_MAGIC: &str = "# gatequbit-trace 1";
pub const MAP_MAGIC: &str = "# gatequbit-map 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Column {
    pub fn new(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            values,
        }
    }
}

/// Columnar trace: the first column is the abscissa.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub columns: Vec<Column>,
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
}

impl Axis {
    pub fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

/// Row-major 2-D data with named, unit-carrying axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapFile {
    pub row_axis: Axis,
    pub column_axis: Axis,
    pub value_axis: Axis,
    pub rows: Vec<f64>,
    pub columns: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub config_hash: Option<String>,
}

/// JSON sidecar stored next to a data file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub units: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub metadata: Metadata,
}

/// Shortest decimal that round-trips to the same double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn hash_line(hash: &Option<String>) -> String {
    format!("# config_hash: {}\n", hash.as_deref().unwrap_or("none"))
}

pub fn render_trace(trace: &TraceFile) -> Result<String> {
    let n = trace.columns.first().map_or(0, |c| c.values.len());
    if trace.columns.len() < 2 {
        return Err(Error::invalid("columns", "a trace needs at least two columns"));
    }
    if trace.columns.iter().any(|c| c.values.len() != n) {
        return Err(Error::invalid("columns", "columns differ in length"));
    }
    for c in &trace.columns {
        if c.name.is_empty()
            || c.name.contains(char::is_whitespace)
            || c.unit.is_empty()
            || c.unit.contains(char::is_whitespace)
        {
            return Err(Error::invalid(
                "columns",
                format!("bad column label `{} {}`", c.name, c.unit),
            ));
        }
    }
    let mut out = String::new();
    out.push_str(TRACE_MAGIC);
    out.push('\n');
    out.push_str(&hash_line(&trace.config_hash));
    for c in &trace.columns {
        out.push_str(&format!("# column: {} {}\n", c.name, c.unit));
    }
    out.push_str(&format!("# rows: {n}\n"));
    for i in 0..n {
        let line: Vec<String> = trace.columns.iter().map(|c| fmt_f64(c.values[i])).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    Ok(out)
}

pub fn render_map(map: &MapFile) -> Result<String> {
    if map.values.len() != map.rows.len() || map.values.iter().any(|r| r.len() != map.columns.len()) {
        return Err(Error::invalid("values", "array shape does not match the axes"));
    }
    let mut out = String::new();
    out.push_str(MAP_MAGIC);
    out.push('\n');
    out.push_str(&hash_line(&map.config_hash));
    for (key, a) in [
        ("rows", &map.row_axis),
        ("columns", &map.column_axis),
        ("values", &map.value_axis),
    ] {
        out.push_str(&format!("# {key}: {} {}\n", a.name, a.unit));
    }
    out.push_str(&format!("# shape: {} {}\n", map.rows.len(), map.columns.len()));
    if !map.columns.is_empty() {
        out.push_str(&map.column_axis.name);
        for v in &map.columns {
            out.push(' ');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    for (r, row) in map.rows.iter().zip(&map.values) {
        out.push_str(&fmt_f64(*r));
        for v in row {
            out.push(' ');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Line-oriented reader that keeps byte offsets for error reporting.
struct Cursor<'a> {
    path: &'a Path,
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Self { path, text, pos: 0 }
    }

    fn err(&self, offset: usize, reason: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            offset,
            reason: reason.into(),
        }
    }

    /// Next line (without the newline) and its starting offset.
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        if self.pos >= self.text.len() {
            return None;
        }
        let start = self.pos;
        let rest = &self.text[start..];
        let end = rest.find('\n').map_or(rest.len(), |i| i);
        self.pos = start + end + 1;
        Some((start, rest[..end].trim_end_matches('\r')))
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let at = self.pos.min(self.text.len());
        self.next_line()
            .ok_or_else(|| self.err(at, format!("unexpected end of file, expected {what}")))
    }

    /// Header line `# key: value`, returning `value`.
    fn header(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (off, line) = self.expect_line(&format!("`# {key}:` header"))?;
        let prefix = format!("# {key}:");
        match line.strip_prefix(&prefix) {
            Some(v) => {
                let lead = v.len() - v.trim_start().len();
                Ok((off + prefix.len() + lead, v.trim()))
            }
            None => Err(self.err(off, format!("expected `# {key}:` header, found `{line}`"))),
        }
    }
}

/// Whitespace-separated tokens with their absolute byte offsets.
fn tokens(line: &str, base: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((base + s, &line[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((base + s, &line[s..]));
    }
    out
}

fn number(cur: &Cursor<'_>, off: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| cur.err(off, format!("`{tok}` is not a number")))
}

fn label(cur: &Cursor<'_>, off: usize, value: &str) -> Result<(String, String)> {
    let t = tokens(value, off);
    match t.as_slice() {
        [(_, name), (_, unit)] => Ok((name.to_string(), unit.to_string())),
        _ => Err(cur.err(off, format!("expected `<name> <unit>`, found `{value}`"))),
    }
}

fn read_hash(cur: &mut Cursor<'_>) -> Result<Option<String>> {
    let (_, v) = cur.header("config_hash")?;
    Ok((v != "none").then(|| v.to_string()))
}

fn count(cur: &Cursor<'_>, off: usize, tok: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| cur.err(off, format!("`{tok}` is not a count")))
}

pub fn parse_trace(path: &Path, text: &str) -> Result<TraceFile> {
    let mut cur = Cursor::new(path, text);
    let (off, magic) = cur.expect_line("trace magic line")?;
    if magic != TRACE_MAGIC {
        return Err(cur.err(off, format!("not a trace file (expected `{TRACE_MAGIC}`)")));
    }
    let config_hash = read_hash(&mut cur)?;
    let mut columns = Vec::new();
    let n_rows = loop {
        let (off, line) = cur.expect_line("`# column:` or `# rows:` header")?;
        if let Some(v) = line.strip_prefix("# column:") {
            let (name, unit) = label(&cur, off + 9, v)?;
            columns.push(Column {
                name,
                unit,
                values: Vec::new(),
            });
        } else if let Some(v) = line.strip_prefix("# rows:") {
            let lead = v.len() - v.trim_start().len();
            break count(&cur, off + 7 + lead, v.trim())?;
        } else {
            return Err(cur.err(off, format!("unexpected header line `{line}`")));
        }
    };
    if columns.len() < 2 {
        return Err(cur.err(cur.pos.min(text.len()), "a trace needs at least two columns"));
    }
    for c in &mut columns {
        c.values.reserve(n_rows);
    }
    for row in 0..n_rows {
        let (off, line) = cur.expect_line(&format!("data row {row}"))?;
        let t = tokens(line, off);
        if t.len() != columns.len() {
            return Err(cur.err(off, format!("expected {} values, found {}", columns.len(), t.len())));
        }
        for (c, (o, tok)) in columns.iter_mut().zip(t) {
            c.values.push(number(&cur, o, tok)?);
        }
    }
    while let Some((off, line)) = cur.next_line() {
        if !line.trim().is_empty() {
            return Err(cur.err(off, "data beyond the declared row count"));
        }
    }
    Ok(TraceFile { columns, config_hash })
}

pub fn parse_map(path: &Path, text: &str) -> Result<MapFile> {
    let mut cur = Cursor::new(path, text);
    let (off, magic) = cur.expect_line("map magic line")?;
    if magic != MAP_MAGIC {
        return Err(cur.err(off, format!("not a map file (expected `{MAP_MAGIC}`)")));
    }
    let config_hash = read_hash(&mut cur)?;
    let mut axes = Vec::new();
    for key in ["rows", "columns", "values"] {
        let (off, v) = cur.header(key)?;
        let (name, unit) = label(&cur, off, v)?;
        axes.push(Axis { name, unit });
    }
    let (off, v) = cur.header("shape")?;
    let (n_rows, n_cols) = match tokens(v, off).as_slice() {
        [(o1, a), (o2, b)] => (count(&cur, *o1, a)?, count(&cur, *o2, b)?),
        _ => return Err(cur.err(off, "expected `<rows> <columns>`")),
    };
    let value_axis = axes.pop().unwrap_or_else(|| Axis::new("", ""));
    let column_axis = axes.pop().unwrap_or_else(|| Axis::new("", ""));
    let row_axis = axes.pop().unwrap_or_else(|| Axis::new("", ""));

    let mut columns = Vec::with_capacity(n_cols);
    if n_cols > 0 {
        let (off, line) = cur.expect_line("column axis line")?;
        let t = tokens(line, off);
        if t.first().map(|(_, s)| *s) != Some(column_axis.name.as_str()) {
            return Err(cur.err(off, format!("axis line must start with `{}`", column_axis.name)));
        }
        if t.len() != n_cols + 1 {
            return Err(cur.err(off, format!("expected {n_cols} axis values, found {}", t.len() - 1)));
        }
        for (o, tok) in &t[1..] {
            columns.push(number(&cur, *o, tok)?);
        }
    }
    let mut rows = Vec::with_capacity(n_rows);
    let mut values = Vec::with_capacity(n_rows);
    for row in 0..n_rows {
        let (off, line) = cur.expect_line(&format!("data row {row}"))?;
        let t = tokens(line, off);
        if t.len() != n_cols + 1 {
            return Err(cur.err(off, format!("expected {} values, found {}", n_cols + 1, t.len())));
        }
        rows.push(number(&cur, t[0].0, t[0].1)?);
        values.push(
            t[1..]
                .iter()
                .map(|(o, tok)| number(&cur, *o, tok))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    while let Some((off, line)) = cur.next_line() {
        if !line.trim().is_empty() {
            return Err(cur.err(off, "data beyond the declared shape"));
        }
    }
    Ok(MapFile {
        row_axis,
        column_axis,
        value_axis,
        rows,
        columns,
        values,
        config_hash,
    })
}

pub fn write_trace(path: &Path, trace: &TraceFile) -> Result<()> {
    write_atomic(path, render_trace(trace)?.as_bytes())
}

pub fn read_trace(path: &Path) -> Result<TraceFile> {
    parse_trace(path, &read_text(path)?)
}

pub fn write_map(path: &Path, map: &MapFile) -> Result<()> {
    write_atomic(path, render_map(map)?.as_bytes())
}

pub fn read_map(path: &Path) -> Result<MapFile> {
    parse_map(path, &read_text(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| {
        // serde_json reports line/column; convert to a byte offset.
        let offset = text
            .split_inclusive('\n')
            .take(e.line().saturating_sub(1))
            .map(str::len)
            .sum::<usize>()
            + e.column().saturating_sub(1);
        Error::Parse {
            path: path.to_path_buf(),
            offset,
            reason: e.to_string(),
        }
    })
}

fn units(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// Writes a spectroscopy map and its sidecar.
pub fn write_spectro_map(path: &Path, map: &SpectroMap, value: Axis) -> Result<()> {
    let file = MapFile {
        row_axis: Axis::new("vg", "V"),
        column_axis: Axis::new("freq", "GHz"),
        value_axis: value,
        rows: map.vg_grid.clone(),
        columns: map.freq_grid.clone(),
        values: map.magnitude.clone(),
        config_hash: map.meta.config_hash.clone(),
    };
    write_map(path, &file)?;
    let sidecar = Sidecar {
        format: "gatequbit-map 1".into(),
        units: units(&[
            ("vg", "V"),
            ("freq", "GHz"),
            (&file.value_axis.name, &file.value_axis.unit),
        ]),
        config_hash: map.meta.config_hash.clone(),
        metadata: map.meta.clone(),
    };
    write_json(&sidecar_path(path), &sidecar)
}

fn read_sidecar(path: &Path) -> Result<Option<Sidecar>> {
    let side = sidecar_path(path);
    if side.exists() {
        read_json(&side).map(Some)
    } else {
        Ok(None)
    }
}

/// Reads a spectroscopy map; metadata comes from the sidecar when present.
pub fn read_spectro_map(path: &Path) -> Result<SpectroMap> {
    let file = read_map(path)?;
    let mut meta = read_sidecar(path)?.map(|s| s.metadata).unwrap_or_default();
    meta.config_hash = file.config_hash.clone();
    let map = SpectroMap {
        vg_grid: file.rows,
        freq_grid: file.columns,
        magnitude: file.values,
        meta,
    };
    map.validate().map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        offset: 0,
        reason: e.to_string(),
    })?;
    Ok(map)
}

/// Writes a two-column time trace and its sidecar.
pub fn write_time_trace(path: &Path, trace: &TimeTrace, x: Axis, y: Axis) -> Result<()> {
    let file = TraceFile {
        columns: vec![
            Column::new(&x.name, &x.unit, trace.t_grid.clone()),
            Column::new(&y.name, &y.unit, trace.signal.clone()),
        ],
        config_hash: trace.meta.config_hash.clone(),
    };
    write_trace(path, &file)?;
    let sidecar = Sidecar {
        format: "gatequbit-trace 1".into(),
        units: units(&[(&x.name, &x.unit), (&y.name, &y.unit)]),
        config_hash: trace.meta.config_hash.clone(),
        metadata: trace.meta.clone(),
    };
    write_json(&sidecar_path(path), &sidecar)
}

/// Reads the first two columns of a trace file as a time trace.
pub fn read_time_trace(path: &Path) -> Result<TimeTrace> {
    let mut file = read_trace(path)?;
    let mut meta = read_sidecar(path)?.map(|s| s.metadata).unwrap_or_default();
    meta.config_hash = file.config_hash.clone();
    let signal = std::mem::take(&mut file.columns[1].values);
    let t_grid = std::mem::take(&mut file.columns[0].values);
    Ok(TimeTrace { t_grid, signal, meta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for v in [
            0.0,
            -0.0,
            1.0,
            5.572,
            1e-300,
            123456789.12345679,
            f64::MIN_POSITIVE,
            f64::MAX,
            0.1 + 0.2,
        ] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn trace_text_round_trip() {
        let t = TraceFile {
            columns: vec![
                Column::new("tau", "ns", vec![2.0, 4.0, 6.000000000000001]),
                Column::new("signal", "1", vec![0.99, 0.98, -1e-17]),
                Column::new("signal_imag", "1", vec![0.0, 1.0, 2.0]),
            ],
            config_hash: Some("abc".into()),
        };
        let s = render_trace(&t).unwrap();
        assert_eq!(parse_trace(Path::new("x"), &s).unwrap(), t);
    }

    #[test]
    fn empty_trace_is_header_only() {
        let t = TraceFile {
            columns: vec![Column::new("tau", "ns", vec![]), Column::new("signal", "1", vec![])],
            config_hash: None,
        };
        let s = render_trace(&t).unwrap();
        assert!(s.lines().all(|l| l.starts_with('#')));
        assert_eq!(parse_trace(Path::new("x"), &s).unwrap(), t);
    }

    #[test]
    fn map_text_round_trip() {
        let m = MapFile {
            row_axis: Axis::new("vg", "V"),
            column_axis: Axis::new("freq", "GHz"),
            value_axis: Axis::new("magnitude", "linear"),
            rows: vec![-1.0, 0.5],
            columns: vec![5.57, 5.571, 5.572],
            values: vec![vec![1.0, 0.2, 0.9], vec![0.3, 0.30000000000000004, 1.0]],
            config_hash: None,
        };
        let s = render_map(&m).unwrap();
        assert_eq!(parse_map(Path::new("x"), &s).unwrap(), m);
    }

    #[test]
    fn parse_error_names_offset() {
        let text =
            "# gatequbit-trace 1\n# config_hash: none\n# column: t ns\n# column: y 1\n# rows: 2\n1.0 2.0\n3.0 x\n";
        match parse_trace(Path::new("f.dat"), text) {
            Err(Error::Parse { offset, .. }) => assert_eq!(&text[offset..offset + 1], "x"),
            other => panic!("{other:?}"),
        }
        match parse_trace(Path::new("f.dat"), "# gatequbit-trace 1\n# bogus\n") {
            Err(Error::Parse { offset, .. }) => assert_eq!(offset, 20),
            other => panic!("{other:?}"),
        }
        let text = "# gatequbit-trace 1\n# config_hash: none\n# column: t ns\n# column: y 1\n# rows: z2\n";
        match parse_trace(Path::new("f.dat"), text) {
            Err(Error::Parse { offset, .. }) => assert_eq!(&text[offset..offset + 2], "z2"),
            other => panic!("{other:?}"),
        }
        let text =
            "# gatequbit-map 1\n# config_hash: none\n# rows: vg V\n# columns: f GHz\n# values: m 1\n# shape: 2 q\n";
        match parse_map(Path::new("m.dat"), text) {
            Err(Error::Parse { offset, .. }) => assert_eq!(&text[offset..offset + 1], "q"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_map_rejected() {
        let text = "# gatequbit-map 1\n# config_hash: none\n# rows: vg V\n# columns: freq GHz\n# values: m 1\n# shape: 2 1\nfreq 1.0\n0.0 1.0\n";
        assert!(matches!(parse_map(Path::new("m"), text), Err(Error::Parse { .. })));
    }
}
