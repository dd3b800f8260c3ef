//! Output plumbing: every artifact carries a metadata header with the tool
//! version and the fully resolved configuration.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use serde::Serialize;

pub const TOOL: &str = concat!("permex ", env!("CARGO_PKG_VERSION"));

#[derive(Serialize)]
pub struct Envelope<C: Serialize, R: Serialize> {
    pub meta: Meta<C>,
    pub result: R,
}

#[derive(Serialize)]
pub struct Meta<C: Serialize> {
    pub tool: &'static str,
    pub config: C,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub fn emit_json<C: Serialize, R: Serialize>(
    out: &Option<PathBuf>,
    config: C,
    seed: Option<u64>,
    result: R,
) -> io::Result<()> {
    let body = serde_json::to_string_pretty(&Envelope {
        meta: Meta { tool: TOOL, config, seed },
        result,
    })
    .expect("serialization cannot fail");
    write_all(out, body + "\n")
}

/// CSV with `#`-prefixed metadata lines, a header row, and data rows.
pub struct CsvOut {
    lines: Vec<String>,
}

impl CsvOut {
    pub fn new<C: Serialize>(config: &C, seed: Option<u64>, columns: &[&str]) -> Self {
        Self::with_notes(config, seed, &[], columns)
    }

    pub fn with_notes<C: Serialize>(
        config: &C,
        seed: Option<u64>,
        notes: &[String],
        columns: &[&str],
    ) -> Self {
        let mut lines = vec![
            format!("# tool: {TOOL}"),
            format!(
                "# config: {}",
                serde_json::to_string(config).expect("serialization cannot fail")
            ),
        ];
        if let Some(s) = seed {
            lines.push(format!("# seed: {s}"));
        }
        for n in notes {
            lines.push(format!("# {n}"));
        }
        lines.push(columns.join(","));
        Self { lines }
    }

    pub fn row(&mut self, fields: &[f64]) {
        let row: Vec<String> = fields.iter().map(|v| format!("{v:.17e}")).collect();
        self.lines.push(row.join(","));
    }

    pub fn row_mixed(&mut self, fields: &[String]) {
        self.lines.push(fields.join(","));
    }

    pub fn write(self, out: &Option<PathBuf>) -> io::Result<()> {
        write_all(out, self.lines.join("\n") + "\n")
    }
}

pub fn write_all(out: &Option<PathBuf>, body: String) -> io::Result<()> {
    match out {
        Some(path) => {
            let mut f = File::create(path)?;
            f.write_all(body.as_bytes())
        }
        None => io::stdout().write_all(body.as_bytes()),
    }
}
