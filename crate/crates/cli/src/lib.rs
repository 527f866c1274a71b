//! Batch experiment runner for the `wdro-core` bounds.
//!
//! A run file lists experiment configurations. Each one names a loss, its
//! data (explicit or generated from a seed), a grid of radii and the
//! pipelines to run. Results go to one CSV file per pipeline.

pub mod catalog;
pub mod config;
pub mod data;
pub mod pipelines;
pub mod report;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use config::{Pipeline, RunFile};
use pipelines::{run_config, ConfigOutput, Options};
use report::Table;

/// Environment variable read for the default worker count.
pub const THREADS_ENV: &str = "WDRO_THREADS";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config: PathBuf,
    pub out: PathBuf,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
    pub trace: bool,
    pub timing: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot parse config: {0}")]
    ConfigParse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigParse(_) => 1,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub configs: usize,
    pub failed_configs: usize,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.failed_configs > 0 {
            2
        } else {
            0
        }
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_jsonl<T: serde::Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let f = fs::File::create(path).map_err(|e| io(path, e))?;
    let mut w = BufWriter::new(f);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| io(path, e))?;
        w.write_all(b"\n").map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// Parses the run file, runs every configuration and writes the reports.
/// Nothing is written unless the whole file parses.
pub fn run(opts: &RunOptions) -> Result<RunSummary, CliError> {
    let text = fs::read_to_string(&opts.config).map_err(|e| io(&opts.config, e))?;
    let run = RunFile::parse(&text).map_err(CliError::ConfigParse)?;
    let options = Options { trace: opts.trace, timing: opts.timing };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let outputs: Vec<ConfigOutput> = pool.install(|| run.configs.par_iter().map(|c| run_config(c, options)).collect());

    fs::create_dir_all(&opts.out).map_err(|e| io(&opts.out, e))?;
    let mut files = Vec::new();
    for (k, p) in Pipeline::ALL.iter().enumerate() {
        let parts: Vec<&Table> = outputs.iter().filter_map(|o| o.tables[k].as_ref()).collect();
        let Some(first) = parts.first() else { continue };
        let mut table = Table::new(first.header.clone());
        for t in &parts {
            table.rows.extend(t.rows.iter().cloned());
        }
        let path = opts.out.join(format!("{}.csv", p.name()));
        table.write_file(&path).map_err(|e| io(&path, e))?;
        files.push(path);
    }
    if run.configs.iter().any(|c| c.pipelines.contains(&Pipeline::Certificate)) {
        let path = opts.out.join("certificates.jsonl");
        let records: Vec<_> = outputs.iter().flat_map(|o| o.certificates.iter().cloned()).collect();
        write_jsonl(&path, &records)?;
        files.push(path);
    }
    if opts.trace {
        let path = opts.out.join("trace.jsonl");
        let events: Vec<_> = outputs.iter().flat_map(|o| o.trace.iter().cloned()).collect();
        write_jsonl(&path, &events)?;
        files.push(path);
    }
    Ok(RunSummary { configs: outputs.len(), failed_configs: outputs.iter().filter(|o| o.failed).count(), files })
}
