use std::fs;
use std::path::Path;

use dyadfe::io::{fmt_num, table_csv, table_pretty};

use crate::CliError;

pub struct Table {
    /// File stem of the CSV output.
    pub name: &'static str,
    pub title: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, title: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name,
            title: title.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Tables plus `# key=value` header lines repeated at the top of every CSV.
pub struct Report {
    pub preamble: Vec<String>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for line in &self.preamble {
            s.push_str(&format!("# {line}\n"));
        }
        for t in &self.tables {
            s.push_str(&format!("\n{}\n", t.title));
            s.push_str(&table_pretty(&t.header, &t.rows));
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        for t in &self.tables {
            let mut text = String::new();
            for line in &self.preamble {
                text.push_str(&format!("# {line}\n"));
            }
            text.push_str(&table_csv(&t.header, &t.rows));
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

pub fn num(v: f64) -> String {
    fmt_num(v)
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| "n.a.".to_string(), fmt_num)
}

pub const NA: &str = "n.a.";
