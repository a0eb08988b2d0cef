//! Output files. Every file carries the provenance block: tool version,
//! command, seed and the fully resolved parameter set.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Map, Value};
use tripod_core::output::{write_provenance, Table};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Sink {
    dir: PathBuf,
    format: Format,
    provenance: Vec<(&'static str, String)>,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, format: Format, provenance: Vec<(&'static str, String)>) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::output(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), format, provenance, written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn provenance_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in &self.provenance {
            // JSON-valued entries are embedded as objects rather than strings
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.clone()));
            m.insert((*k).to_string(), value);
        }
        Value::Object(m)
    }

    fn create(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Failure::output(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w).and_then(|_| w.flush()).map_err(|e| Failure::output(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// Writes `stem.csv` or `stem.json` according to the chosen format.
    pub fn table(&mut self, stem: &str, t: &Table) -> Result<(), Failure> {
        match self.format {
            Format::Csv => {
                let lines = self.provenance.clone();
                self.create(&format!("{stem}.csv"), |w| {
                    write_provenance(&mut *w, &lines)?;
                    t.write_csv(w)
                })
            }
            Format::Json => {
                let doc = json!({
                    "provenance": self.provenance_json(),
                    "columns": t.header,
                    "rows": t.rows,
                });
                self.write_json(&format!("{stem}.json"), &doc)
            }
        }
    }

    /// Structured report, always JSON.
    pub fn report<T: Serialize>(&mut self, stem: &str, data: &T) -> Result<(), Failure> {
        let data = serde_json::to_value(data).map_err(|e| Failure::Numerical(e.to_string()))?;
        let doc = json!({ "provenance": self.provenance_json(), "data": data });
        self.write_json(&format!("{stem}.json"), &doc)
    }

    pub fn bytes(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), Failure> {
        self.create(name, body)
    }

    fn write_json(&mut self, name: &str, doc: &Value) -> Result<(), Failure> {
        self.create(name, |w| {
            serde_json::to_writer_pretty(&mut *w, doc)?;
            writeln!(w)
        })
    }
}
