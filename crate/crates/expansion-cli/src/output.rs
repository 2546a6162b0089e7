//! Deterministic table emission.
//!
//! Every command produces one [`Table`]: a fixed header, a schema tag
//! versioning the record layout, and typed cells. CSV output is
//! comma-separated with `.` decimals, LF line endings, and the header as
//! the first line; numbers print in shortest round-trip form, so re-running
//! a command reproduces its bytes exactly. JSON output carries the same
//! rows as an array of objects in column order.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Output format selected with `--format`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Comma-separated values, one header line.
    Csv,
    /// One object per row under a `rows` key.
    Json,
}

/// One table entry.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// A number; non-finite values render as missing.
    Num(f64),
    /// A short label (case names, statuses).
    Text(String),
    /// A flag.
    Bool(bool),
    /// Not applicable for this row.
    Empty,
}

impl Cell {
    /// Owned label cell.
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    /// Number cell that renders missing values as empty.
    pub fn num_or_empty(v: Option<f64>) -> Self {
        match v {
            Some(v) => Cell::Num(v),
            None => Cell::Empty,
        }
    }

    fn csv_field(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v}"),
            Cell::Num(_) | Cell::Empty => String::new(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json_value(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::Text(s) => serde_json::Value::String(s.clone()),
            Cell::Bool(b) => serde_json::Value::Bool(*b),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

/// A rectangular result table with a versioned schema.
#[derive(Debug, Clone)]
pub struct Table {
    /// Artifact base name (`<name>.csv` / `<name>.json` under `--out`).
    pub name: &'static str,
    /// Schema tag stamped on every CSV row and into the JSON root.
    pub schema: &'static str,
    /// Column names; units are part of the name (e.g. `t_years`).
    pub columns: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl Table {
    /// Empty table with the given identity and header.
    pub fn new(name: &'static str, schema: &'static str, columns: &'static [&'static str]) -> Self {
        Table {
            name,
            schema,
            columns,
            rows: Vec::new(),
        }
    }

    /// Appends one row; its arity must match the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row arity does not match table `{}`",
            self.name
        );
        self.rows.push(row);
    }

    /// Cell at `(row, column name)`, for tests and post-processing.
    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        let i = self.columns.iter().position(|c| *c == column)?;
        self.rows.get(row).map(|r| &r[i])
    }

    /// Number of data rows.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Whether the table has no data rows.
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Renders as CSV: header first, one line per row, LF terminated.
    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = Vec::with_capacity(self.columns.len() + 1);
        header.push("schema");
        header.extend_from_slice(self.columns);
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = Vec::with_capacity(row.len() + 1);
            record.push(self.schema.to_string());
            record.extend(row.iter().map(Cell::csv_field));
            w.write_record(&record)?;
        }
        w.flush()
    }

    /// Renders as JSON: `{"schema": ..., "rows": [{column: value}, ...]}`.
    pub fn write_json(&self, out: &mut dyn Write) -> std::io::Result<()> {
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut obj = serde_json::Map::new();
                for (col, cell) in self.columns.iter().zip(row) {
                    obj.insert((*col).to_string(), cell.json_value());
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        let doc = serde_json::json!({ "schema": self.schema, "rows": rows });
        serde_json::to_writer_pretty(&mut *out, &doc)?;
        out.write_all(b"\n")
    }

    /// Writes to stdout, or to `<dir>/<name>.<ext>` when `out` is given.
    pub fn emit(&self, format: Format, out: Option<&Path>) -> Result<(), CliError> {
        let render = |w: &mut dyn Write| match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        };
        match out {
            None => {
                let stdout = std::io::stdout();
                render(&mut stdout.lock())
                    .map_err(|e| CliError::Config(format!("cannot write to stdout: {e}")))
            }
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| {
                    CliError::Config(format!("cannot create {}: {e}", dir.display()))
                })?;
                let ext = match format {
                    Format::Csv => "csv",
                    Format::Json => "json",
                };
                let path = dir.join(format!("{}.{ext}", self.name));
                let mut file = std::fs::File::create(&path).map_err(|e| {
                    CliError::Config(format!("cannot create {}: {e}", path.display()))
                })?;
                render(&mut file)
                    .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
                eprintln!("wrote {}", path.display());
                Ok(())
            }
        }
    }
}
