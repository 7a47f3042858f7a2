//! Append-only per-step metrics CSV.
//!
//! One line per optimizer step: step, stage, then cosine/sim/resim/total
//! and active-hinge count for every head in the stage plan (fixed head
//! order), then wall milliseconds. Wall time is written as 0 unless timing
//! is explicitly enabled, so reruns of the same config produce
//! byte-identical files.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::losses::LossReport;
use crate::model::Head;

pub struct MetricsWriter {
    out: Option<BufWriter<File>>,
    heads: Vec<Head>,
    timing: bool,
    last_line: String,
}

impl MetricsWriter {
    /// Create (truncate) a CSV file and write the header.
    pub fn create(path: &Path, heads: Vec<Head>, timing: bool) -> Result<Self> {
        let file = File::create(path)?;
        let mut w = Self {
            out: Some(BufWriter::new(file)),
            heads,
            timing,
            last_line: String::new(),
        };
        let header = w.header();
        w.write_line(&header)?;
        Ok(w)
    }

    /// Open an existing CSV for appending (resume); the header is assumed
    /// to be present.
    pub fn append(path: &Path, heads: Vec<Head>, timing: bool) -> Result<Self> {
        let file = OpenOptions::new().append(true).open(path)?;
        Ok(Self {
            out: Some(BufWriter::new(file)),
            heads,
            timing,
            last_line: String::new(),
        })
    }

    /// Discard lines (for library callers that do not want a file).
    pub fn sink(heads: Vec<Head>) -> Self {
        Self {
            out: None,
            heads,
            timing: false,
            last_line: String::new(),
        }
    }

    pub fn header(&self) -> String {
        let mut cols = vec!["step".to_string(), "stage".to_string()];
        for h in &self.heads {
            for metric in ["cosine", "sim", "resim", "total", "hinges"] {
                cols.push(format!("{}_{}", h.name(), metric));
            }
        }
        cols.push("wall_ms".to_string());
        cols.join(",")
    }

    pub fn log_step(
        &mut self,
        step: u64,
        stage: u8,
        reports: &[(Head, LossReport)],
        wall_ms: u64,
    ) -> Result<()> {
        let mut line = format!("{step},{stage}");
        for h in &self.heads {
            let report = reports
                .iter()
                .find(|(rh, _)| rh == h)
                .map(|(_, r)| *r)
                .unwrap_or_default();
            line.push_str(&format!(
                ",{},{},{},{},{}",
                report.cosine, report.sim, report.resim, report.total, report.active_hinges
            ));
        }
        let ms = if self.timing { wall_ms } else { 0 };
        line.push_str(&format!(",{ms}"));
        self.write_line(&line)
    }

    fn write_line(&mut self, line: &str) -> Result<()> {
        if let Some(out) = &mut self.out {
            out.write_all(line.as_bytes())?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        self.last_line = line.to_string();
        Ok(())
    }

    pub fn last_line(&self) -> &str {
        &self.last_line
    }
}
