//! Output files. Every file starts with one comment row naming the command
//! that produced it and the config hash.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

/// Identifies the producer of an output file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
}

impl Provenance {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            command: command.to_owned(),
            config_hash: cfg.hash(),
        }
    }

    fn describe(&self) -> String {
        format!("osteomorph {} config={}", self.command, self.config_hash)
    }
}

pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn written(self) -> Vec<PathBuf> {
        self.written
    }

    fn open(&mut self, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
        let path = self.root.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok((path, BufWriter::new(file)))
    }

    /// Writes a CSV table. `extra` is appended to the comment row.
    pub fn csv(
        &mut self,
        name: &str,
        prov: &Provenance,
        extra: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<PathBuf> {
        let (path, mut w) = self.open(name)?;
        let mut comment = format!("# {}", prov.describe());
        if !extra.is_empty() {
            comment.push(' ');
            comment.push_str(extra);
        }
        writeln!(w, "{comment}")?;
        {
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record(header)?;
            for row in rows {
                csv.write_record(row)?;
            }
            csv.flush()?;
        }
        w.flush()?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes pretty JSON; the provenance is embedded as a `producer` field.
    pub fn json<T: Serialize>(&mut self, name: &str, prov: &Provenance, body: &T) -> Result<PathBuf> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            producer: &'a Provenance,
            #[serde(flatten)]
            body: &'a T,
        }
        let (path, mut w) = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, &Wrapped { producer: prov, body })?;
        writeln!(w)?;
        w.flush()?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn svg(&mut self, name: &str, prov: &Provenance, body: &str) -> Result<PathBuf> {
        let (path, mut w) = self.open(name)?;
        writeln!(w, "<!-- {} -->", prov.describe())?;
        w.write_all(body.as_bytes())?;
        w.flush()?;
        self.written.push(path.clone());
        Ok(path)
    }
}

pub fn fixed(v: f64, places: usize) -> String {
    format!("{v:.places$}")
}
