use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

/// Provenance written ahead of the data.
pub struct Meta {
    pub command: String,
    pub mode: String,
}

impl Meta {
    pub fn to_json(&self) -> Value {
        json!({
            "tool": format!("farey {}", env!("CARGO_PKG_VERSION")),
            "command": self.command,
            "mode": self.mode,
        })
    }
}

/// The output file, or standard output when no path is given.
pub fn open(out: Option<&Path>) -> Result<BufWriter<Box<dyn Write>>> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    Ok(BufWriter::new(sink))
}

/// Row-at-a-time writer for a table with named columns.
pub struct Sink {
    columns: Vec<&'static str>,
    inner: Inner,
}

enum Inner {
    Csv(csv::Writer<BufWriter<Box<dyn Write>>>),
    Jsonl(BufWriter<Box<dyn Write>>),
}

impl Sink {
    pub fn new(meta: &Meta, format: Format, out: Option<&Path>, columns: &[&'static str]) -> Result<Self> {
        let mut w = open(out)?;
        let inner = match format {
            Format::Csv => {
                writeln!(w, "# tool: farey {}", env!("CARGO_PKG_VERSION"))?;
                writeln!(w, "# command: {}", meta.command)?;
                writeln!(w, "# mode: {}", meta.mode)?;
                let mut c = csv::Writer::from_writer(w);
                c.write_record(columns)?;
                Inner::Csv(c)
            }
            Format::Jsonl => {
                writeln!(w, "{}", json!({ "meta": meta.to_json() }))?;
                Inner::Jsonl(w)
            }
        };
        Ok(Sink {
            columns: columns.to_vec(),
            inner,
        })
    }

    pub fn row(&mut self, row: Vec<Value>) -> Result<()> {
        debug_assert_eq!(row.len(), self.columns.len());
        match &mut self.inner {
            Inner::Csv(w) => w.write_record(row.iter().map(cell))?,
            Inner::Jsonl(w) => {
                let obj: Map<String, Value> = self.columns.iter().map(|c| c.to_string()).zip(row).collect();
                writeln!(w, "{}", Value::Object(obj))?;
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        match self.inner {
            Inner::Csv(mut w) => w.flush()?,
            Inner::Jsonl(mut w) => w.flush()?,
        }
        Ok(())
    }
}

/// A small table collected before writing.
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(self, meta: &Meta, format: Format, out: Option<&Path>) -> Result<()> {
        let mut sink = Sink::new(meta, format, out, &self.columns)?;
        for row in self.rows {
            sink.row(row)?;
        }
        sink.finish()
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// A JSON number, or `null` for non-finite values. Negative zero prints as `0.0`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x + 0.0).map_or(Value::Null, Value::Number)
}
