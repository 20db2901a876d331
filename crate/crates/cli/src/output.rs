//! Deterministic CSV and JSON artifacts.

use anyhow::{Context, Result};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

/// Fixed 17-significant-digit formatting.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn schema_line(name: &str) -> String {
    format!("# schema={name}/v{SCHEMA_VERSION}")
}

pub struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvOut {
    pub fn create(path: &Path, schema: &str, header: &[&str]) -> Result<Self> {
        let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut buf = BufWriter::new(file);
        writeln!(buf, "{}", schema_line(schema))?;
        let mut writer = csv::Writer::from_writer(buf);
        writer.write_record(header)?;
        Ok(Self { path: path.to_path_buf(), writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).with_context(|| format!("writing {}", self.path.display()))
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}
