use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{Map, Value};

/// Bumped whenever a column or field changes meaning.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A command's result: a JSON document and, for commands with a tabular
/// form, the CSV header and rows.
pub struct Report {
    pub command: &'static str,
    pub fields: Map<String, Value>,
    pub table: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Report {
            command,
            fields: Map::new(),
            table: None,
        }
    }

    pub fn field(&mut self, key: &str, value: impl serde::Serialize) -> Result<&mut Self> {
        self.fields.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(self)
    }

    pub fn table(&mut self, header: Vec<&'static str>, rows: Vec<Vec<String>>) -> &mut Self {
        self.table = Some((header, rows));
        self
    }

    fn document(&self) -> Value {
        let mut doc = Map::new();
        doc.insert("schema_version".into(), SCHEMA_VERSION.into());
        doc.insert("command".into(), self.command.into());
        doc.extend(self.fields.clone());
        Value::Object(doc)
    }

    pub fn write(&self, format: Format, path: Option<&Path>) -> Result<()> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
            None => Box::new(io::stdout().lock()),
        };
        let mut out = BufWriter::new(sink);
        match (format, &self.table) {
            (Format::Csv, Some((header, rows))) => {
                writeln!(out, "# hillbands {} schema_version={SCHEMA_VERSION}", self.command)?;
                writeln!(out, "{}", header.join(","))?;
                for row in rows {
                    writeln!(out, "{}", row.join(","))?;
                }
            }
            (Format::Csv, None) => anyhow::bail!("{} has no CSV form; use --format json", self.command),
            (Format::Json, _) => {
                serde_json::to_writer_pretty(&mut out, &self.document())?;
                writeln!(out)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Shortest text that parses back to the same double.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
