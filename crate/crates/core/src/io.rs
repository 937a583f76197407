//! Comma-separated input and output: edge lists, dyadic covariate tables,
//! node labels, and plain-text `key = value` settings.
//!
//! Numbers are written with 9 significant digits.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::InputError;
use crate::netgraph::{DyadTable, Network};

fn io_err(path: &Path, e: impl std::fmt::Display) -> InputError {
    InputError::Io(format!("{}: {e}", path.display()))
}

fn parse_err(path: &Path, line: u64, msg: impl std::fmt::Display) -> InputError {
    InputError::Parse(format!("{}:{line}: {msg}", path.display()))
}

fn reader(path: &Path) -> Result<csv::Reader<fs::File>, InputError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file))
}

fn headers(path: &Path, rdr: &mut csv::Reader<fs::File>) -> Result<Vec<String>, InputError> {
    Ok(rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e))?
        .iter()
        .map(str::to_string)
        .collect())
}

fn expect_prefix(path: &Path, got: &[String], want: &[&str]) -> Result<(), InputError> {
    if got.len() < want.len() || got.iter().zip(want).any(|(g, w)| !g.eq_ignore_ascii_case(w)) {
        return Err(parse_err(
            path,
            1,
            format!("header must start with '{}', found '{}'", want.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn parse_id(path: &Path, line: u64, s: &str) -> Result<usize, InputError> {
    s.parse::<usize>()
        .map_err(|_| parse_err(path, line, format!("'{s}' is not a node id")))
}

/// Edge list with header `src,dst`.
pub fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>, InputError> {
    let mut rdr = reader(path)?;
    let h = headers(path, &mut rdr)?;
    expect_prefix(path, &h, &["src", "dst"])?;
    let mut edges = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e.position().map_or(0, |p| p.line()), e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, found {}", rec.len())));
        }
        edges.push((parse_id(path, line, &rec[0])?, parse_id(path, line, &rec[1])?));
    }
    Ok(edges)
}

/// Covariate table with header `i,j,<name>,...`.
pub fn read_dyad_table(path: &Path) -> Result<DyadTable, InputError> {
    let mut rdr = reader(path)?;
    let h = headers(path, &mut rdr)?;
    expect_prefix(path, &h, &["i", "j"])?;
    let names: Vec<String> = h[2..].to_vec();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e.position().map_or(0, |p| p.line()), e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != h.len() {
            return Err(parse_err(path, line, format!("expected {} fields, found {}", h.len(), rec.len())));
        }
        let i = parse_id(path, line, &rec[0])?;
        let j = parse_id(path, line, &rec[1])?;
        let vals = rec
            .iter()
            .skip(2)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| parse_err(path, line, format!("'{s}' is not a number")))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push((i, j, vals));
    }
    Ok(DyadTable { names, rows })
}

/// Node labels with header `id,label`.
pub fn read_labels(path: &Path) -> Result<Vec<(usize, String)>, InputError> {
    let mut rdr = reader(path)?;
    let h = headers(path, &mut rdr)?;
    expect_prefix(path, &h, &["id", "label"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e.position().map_or(0, |p| p.line()), e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, found {}", rec.len())));
        }
        out.push((parse_id(path, line, &rec[0])?, rec[1].to_string()));
    }
    Ok(out)
}

/// Orders `(id, label)` pairs into one label per node.
pub fn labels_by_id(n: usize, pairs: &[(usize, String)]) -> Result<Vec<String>, InputError> {
    let mut labels: Vec<Option<String>> = vec![None; n];
    for (id, label) in pairs {
        let slot = labels
            .get_mut(*id)
            .ok_or(InputError::NodeOutOfRange { id: *id, n })?;
        if slot.replace(label.clone()).is_some() {
            return Err(InputError::Parse(format!("node {id} has more than one label")));
        }
    }
    labels
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(InputError::Labels { got: pairs.len(), n })
}

fn write_text(path: &Path, text: &str) -> Result<(), InputError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

pub fn write_edges(path: &Path, net: &Network) -> Result<(), InputError> {
    let mut s = String::from("src,dst\n");
    for (i, j) in net.edges() {
        s.push_str(&format!("{i},{j}\n"));
    }
    write_text(path, &s)
}

pub fn write_dyad_table(path: &Path, table: &DyadTable) -> Result<(), InputError> {
    let mut s = String::from("i,j");
    for name in &table.names {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (i, j, vals) in &table.rows {
        s.push_str(&format!("{i},{j}"));
        for v in vals {
            s.push(',');
            s.push_str(&fmt_num(*v));
        }
        s.push('\n');
    }
    write_text(path, &s)
}

pub fn write_labels(path: &Path, labels: &[String]) -> Result<(), InputError> {
    let mut s = String::from("id,label\n");
    for (i, l) in labels.iter().enumerate() {
        s.push_str(&format!("{i},{}\n", csv_field(l)));
    }
    write_text(path, &s)
}

/// Writes a table of already formatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), InputError> {
    write_text(path, &table_csv(header, rows))
}

pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let cells: Vec<String> = r.iter().map(|c| csv_field(c)).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Aligned plain-text rendering of a table.
pub fn table_pretty(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (k, c) in r.iter().enumerate() {
            if k < width.len() {
                width[k] = width[k].max(c.len());
            }
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let parts: Vec<String> = cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut s = line(header.to_vec());
    s.push_str(&line(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for r in rows {
        s.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    s
}

/// Formats with 9 significant digits, like C's `%.9g`.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mant.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Parses `key = value` lines; `#` starts a comment. Keys are lower-cased,
/// `-` is read as `_`, and later lines win.
pub fn parse_settings(text: &str) -> Result<BTreeMap<String, String>, InputError> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| InputError::Parse(format!("line {}: expected 'key = value', found '{line}'", k + 1)))?;
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        if key.is_empty() {
            return Err(InputError::Parse(format!("line {}: empty key", k + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

pub fn read_settings(path: &Path) -> Result<BTreeMap<String, String>, InputError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_settings(&text)
}
