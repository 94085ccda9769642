//! Line-delimited JSON reports: a header, one record per line, a summary
//! footer. All writes go through one owner, so output order is fixed.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;

pub struct Report {
    out: Box<dyn Write>,
    summary: Vec<String>,
    echo: bool,
}

impl Report {
    /// `echo` repeats the summary on stdout when the report goes to a file.
    pub fn new(out: Box<dyn Write>, echo: bool) -> Self {
        Self { out, summary: Vec::new(), echo }
    }

    pub fn header(&mut self, subcommand: &str, cfg: &RunConfig) -> io::Result<()> {
        self.line(&json!({
            "record": "header",
            "tool": "branchstable",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "seed": cfg.seed,
            "wall_clock_budget_seconds": cfg.budget_seconds,
            "config": cfg,
        }))
    }

    pub fn record(&mut self, kind: &str, body: impl Serialize) -> io::Result<()> {
        let mut v = serde_json::to_value(body).map_err(io::Error::other)?;
        match &mut v {
            Value::Object(m) => {
                m.insert("record".into(), Value::String(kind.into()));
            }
            other => {
                v = json!({ "record": kind, "value": other.take() });
            }
        }
        self.line(&v)
    }

    pub fn say(&mut self, s: impl Into<String>) {
        self.summary.push(s.into());
    }

    /// Writes the footer. Elapsed time is only included on request, so
    /// that equal configurations give byte-identical reports.
    pub fn finish(mut self, status: &str, elapsed: Option<f64>) -> io::Result<()> {
        let mut footer = json!({ "record": "summary", "status": status, "lines": self.summary });
        if let Some(e) = elapsed {
            footer["elapsed_seconds"] = json!(e);
        }
        self.line(&footer)?;
        self.out.flush()?;
        if self.echo {
            let mut so = io::stdout().lock();
            for l in &self.summary {
                writeln!(so, "{l}")?;
            }
            writeln!(so, "status: {status}")?;
        }
        Ok(())
    }

    fn line(&mut self, v: &Value) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, v).map_err(io::Error::other)?;
        self.out.write_all(b"\n")
    }
}
