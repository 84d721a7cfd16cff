//! Run manifest: everything that legitimately differs between reruns lives here.

use serde::Serialize;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

use crate::config::SCHEMA_VERSION;
use crate::formats::Artifact;

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Input {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Timing {
    pub stage: String,
    pub ms: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: String,
    pub scalar: String,
    pub threads: usize,
    pub inputs: Vec<Input>,
    pub timestamp: String,
    pub timings: Vec<Timing>,
    pub exit_code: u8,
    pub artifacts: Vec<Artifact>,
}

impl Manifest {
    pub fn new(command: &str, scalar: &str, threads: usize) -> Self {
        Manifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            core_version: hypermin_core::VERSION,
            command: command.to_string(),
            scalar: scalar.to_string(),
            threads,
            inputs: Vec::new(),
            timestamp: OffsetDateTime::now_utc().format(&Rfc3339).unwrap_or_default(),
            timings: Vec::new(),
            exit_code: 0,
            artifacts: Vec::new(),
        }
    }
}
