//! CSV tables and `key = value` summaries. Floats are written in Rust's
//! shortest round-trip form, which ignores locale.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// A cell of a CSV row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(if b { "true" } else { "false" }.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => {
                format!("\"{}\"", s.replace('"', "\"\""))
            }
            Cell::Text(s) => s.clone(),
        }
    }
}

/// In-memory CSV: a `# config_hash = ...` line, a header row, then data.
#[derive(Debug, Clone)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self, config_hash: &str) -> String {
        let mut out = format!("# config_hash = {config_hash}\n");
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Ordered `key = value` lines.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn set(&mut self, key: &str, value: impl Into<Cell>) {
        self.entries.push((key.to_string(), value.into().render()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            writeln!(out, "{k} = {v}").expect("writing to a String");
        }
        out
    }
}

/// Output directory writer; creates the directory on first use.
#[derive(Debug, Clone)]
pub struct OutputDir {
    root: PathBuf,
    hash: String,
}

impl OutputDir {
    pub fn new(root: PathBuf, hash: &str) -> Self {
        Self {
            root,
            hash: hash.to_string(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn write(&self, name: &str, text: &str) -> io::Result<PathBuf> {
        std::fs::create_dir_all(&self.root)?;
        let path = self.root.join(name);
        std::fs::write(&path, text)?;
        Ok(path)
    }

    pub fn write_csv(&self, name: &str, table: &CsvTable) -> io::Result<PathBuf> {
        self.write(name, &table.render(&self.hash))
    }

    pub fn write_summary(&self, summary: &Summary) -> io::Result<PathBuf> {
        self.write("run_summary.txt", &summary.render())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 1e300, std::f64::consts::PI, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert!(!s.contains(','));
        }
        assert_eq!(fmt_f64(0.1), "0.1");
    }

    #[test]
    fn csv_layout() {
        let mut t = CsvTable::new(&["name", "value"]);
        t.push(vec!["a,b".into(), 1.5.into()]);
        t.push(vec!["c".into(), 2usize.into()]);
        assert_eq!(
            t.render("abc"),
            "# config_hash = abc\nname,value\n\"a,b\",1.5\nc,2\n"
        );
    }

    #[test]
    fn summary_lines() {
        let mut s = Summary::default();
        s.set("status", "pass");
        s.set("xi", 0.25);
        assert_eq!(s.render(), "status = pass\nxi = 0.25\n");
    }
}
