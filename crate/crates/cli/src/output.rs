use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use attrigraph_core::config::OutputFormat;
use serde::Serialize;

/// Writes result files into one directory and remembers what was written.
pub struct Output {
    dir: PathBuf,
    formats: BTreeSet<OutputFormat>,
    written: Vec<String>,
}

impl Output {
    pub fn new(dir: &Path, formats: BTreeSet<OutputFormat>) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Output {
            dir: dir.to_path_buf(),
            formats,
            written: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.written.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    /// Pretty JSON, written regardless of `--format`.
    pub fn data<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// One JSON document per line, written regardless of `--format`.
    pub fn lines<T: Serialize>(&mut self, name: &str, values: &[T]) -> Result<()> {
        let mut w = self.create(name)?;
        for v in values {
            serde_json::to_writer(&mut w, v)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        if self.formats.contains(&OutputFormat::Json) {
            self.data(name, value)?;
        }
        Ok(())
    }

    pub fn csv(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut BufWriter<File>) -> csv::Result<()>,
    ) -> Result<()> {
        if self.formats.contains(&OutputFormat::Csv) {
            let mut w = self.create(name)?;
            write(&mut w).with_context(|| format!("writing {name}"))?;
            w.flush()?;
        }
        Ok(())
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}
