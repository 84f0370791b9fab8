//! Artifact writers. Every JSON document carries the resolved config and seed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    command: &'a str,
    master_seed: Option<u64>,
    config: &'a RunConfig,
    result: &'a T,
}

pub struct Sink {
    dir: PathBuf,
    prefix: String,
}

impl Sink {
    pub fn new(dir: &Path, prefix: String) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            prefix,
        })
    }

    pub fn path(&self, ext: &str) -> PathBuf {
        self.dir.join(format!("{}.{ext}", self.prefix))
    }

    pub fn json<T: Serialize>(&self, command: &str, config: &RunConfig, result: &T) -> Result<PathBuf> {
        let path = self.path("json");
        let doc = Document {
            command,
            master_seed: config.master_seed,
            config,
            result,
        };
        let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
        serde_json::to_writer_pretty(&mut w, &doc)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(path)
    }

    pub fn csv<T: Serialize>(&self, rows: &[T]) -> Result<PathBuf> {
        let path = self.path("csv");
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(path)
    }
}
