//! JSON envelope and CSV rows.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Args;
use serde::Serialize;
use serde_json::Value;

use crate::input::Echo;
use crate::Failure;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Args, Debug, Clone, Copy)]
pub struct Output {
    /// JSON report (default).
    #[arg(long, conflicts_with = "csv")]
    pub json: bool,
    /// `expression-id,n,value,flag` rows.
    #[arg(long)]
    pub csv: bool,
    /// Leave out the timestamp so identical runs give identical bytes.
    #[arg(long)]
    pub no_meta: bool,
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct Meta {
    unix_time: u64,
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: Tool,
    command: &'a str,
    input: &'a Echo,
    horizon: usize,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<&'a str>,
    body: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<Meta>,
}

/// One CSV row.
#[derive(Serialize)]
pub struct Row {
    #[serde(rename = "expression-id")]
    pub expr: String,
    pub n: usize,
    pub value: f64,
    pub flag: String,
}

impl Row {
    pub fn new(expr: &str, n: usize, value: f64, flag: impl Into<String>) -> Self {
        Row { expr: expr.into(), n, value, flag: flag.into() }
    }
}

pub struct Report<'a> {
    pub command: &'a str,
    pub echo: &'a Echo,
    pub horizon: usize,
    pub exit_code: u8,
    pub error: Option<String>,
    pub body: Value,
    pub rows: Vec<Row>,
}

fn io(e: impl std::fmt::Display) -> Failure {
    Failure::new(1, format!("write failed: {e}"))
}

impl Report<'_> {
    pub fn write(&self, out: Output, mut w: impl Write) -> Result<(), Failure> {
        if out.csv {
            let mut cw = csv::Writer::from_writer(w);
            if self.rows.is_empty() {
                cw.write_record(["expression-id", "n", "value", "flag"]).map_err(io)?;
            }
            for r in &self.rows {
                cw.serialize(r).map_err(io)?;
            }
            return cw.flush().map_err(io);
        }
        let meta = (!out.no_meta).then(|| Meta {
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        });
        let env = Envelope {
            tool: Tool { name: "escdim", version: TOOL_VERSION },
            command: self.command,
            input: self.echo,
            horizon: self.horizon,
            exit_code: self.exit_code,
            error: self.error.as_deref(),
            body: self.body.clone(),
            meta,
        };
        serde_json::to_writer_pretty(&mut w, &env).map_err(io)?;
        writeln!(w).map_err(io)
    }
}

pub fn to_value(v: &impl Serialize) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::new(1, format!("serialization failed: {e}")))
}
