//! Process exit discipline and artifact output.
//!
//! Every failure path of the binary carries one of three exit codes: 2 when
//! a configuration is rejected before any work runs, 3 when a verification
//! or consistency check does not hold, and 1 for environmental trouble such
//! as filesystem errors. Artifacts flow through [`OutputSink`], which
//! renders tables as CSV or JSON, remembers what it wrote, and closes the
//! run by dropping a `manifest.json` describing the invocation — resolved
//! parameters and the library version, never timestamps — so a rerun of a
//! seeded command reproduces every byte.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

pub type Result<T, E = Failure> = std::result::Result<T, E>;

/// A terminal failure with its process exit code.
#[derive(Debug)]
pub enum Failure {
    /// Invalid configuration, rejected before any work ran (exit 2).
    Invalid(String),
    /// A bound, statistic, or consistency check failed (exit 3).
    Check(String),
    /// Filesystem or serialization trouble (exit 1).
    Io(String),
}

impl Failure {
    pub fn invalid(detail: impl fmt::Display) -> Self {
        Failure::Invalid(detail.to_string())
    }

    pub fn check(detail: impl fmt::Display) -> Self {
        Failure::Check(detail.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 2,
            Failure::Check(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(d) => write!(f, "invalid configuration: {d}"),
            Failure::Check(d) => write!(f, "verification failure: {d}"),
            Failure::Io(d) => f.write_str(d),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Artifact serialization format.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// One table cell. Floats render through the shortest round-trip decimal in
/// both formats, so equal numbers always produce equal bytes.
#[derive(Clone, Copy, Debug)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(&'static str),
}

impl Cell {
    fn csv(&self) -> String {
        match *self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(v) => v.to_string(),
        }
    }

    fn json(&self) -> String {
        match *self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => serde_json::to_string(&v).expect("finite float"),
            Cell::Text(v) => serde_json::to_string(v).expect("plain string"),
        }
    }
}

/// A rectangular result table with a fixed column schema.
pub struct Table {
    columns: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the schema");
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// An array of objects with keys in column order (hand-rolled because the
    /// column order *is* the schema; values still render through serde).
    fn to_json(&self) -> String {
        if self.rows.is_empty() {
            return "[]\n".into();
        }
        let mut out = String::from("[\n");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str("  {");
            for (j, (col, cell)) in self.columns.iter().zip(row).enumerate() {
                if j > 0 {
                    out.push_str(", ");
                }
                out.push_str(&serde_json::to_string(col).expect("plain column name"));
                out.push_str(": ");
                out.push_str(&cell.json());
            }
            out.push_str(if i + 1 < self.rows.len() { "},\n" } else { "}\n" });
        }
        out.push_str("]\n");
        out
    }
}

/// What a run was: the exact command, its resolved parameters, the library
/// version, and the artifacts written next to this file.
#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    parameters: serde_json::Value,
    library_version: &'a str,
    artifacts: &'a [String],
}

/// Writes artifacts into an optional output directory. Without a directory
/// every write is a no-op, so commands print their summaries unconditionally
/// and produce files only when asked.
pub struct OutputSink {
    dir: Option<PathBuf>,
    format: Format,
    artifacts: Vec<String>,
}

impl OutputSink {
    pub fn new(dir: Option<PathBuf>, format: Format) -> Result<Self> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)?;
        }
        Ok(Self { dir, format, artifacts: Vec::new() })
    }

    /// Write `stem.csv` or `stem.json` according to the selected format.
    pub fn write_table(&mut self, stem: &str, table: &Table) -> Result<()> {
        let name = format!("{stem}.{}", self.format.name());
        self.write_raw(&name, &table.render(self.format))
    }

    /// Write a pretty-printed JSON report regardless of the table format.
    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        self.write_raw(name, &format!("{text}\n"))
    }

    fn write_raw(&mut self, name: &str, content: &str) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        std::fs::write(&path, content)?;
        println!("wrote {}", path.display());
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Close the run: drop `manifest.json` next to the artifacts.
    pub fn finish(mut self, command: &str, parameters: serde_json::Value) -> Result<()> {
        let Some(dir) = self.dir.take() else {
            return Ok(());
        };
        self.artifacts.sort_unstable();
        let manifest = RunManifest {
            command,
            parameters,
            library_version: env!("CARGO_PKG_VERSION"),
            artifacts: &self.artifacts,
        };
        let text =
            serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Io(e.to_string()))?;
        let path = dir.join("manifest.json");
        std::fs::write(&path, format!("{text}\n"))?;
        println!("wrote {}", path.display());
        Ok(())
    }
}
