use std::io::{self, Write};

use serde::Serialize;

use crate::model::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    ControlSent,
    HelloSent,
    Timer,
    Death,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub time: f64,
    pub kind: TraceKind,
    pub node: NodeId,
    pub detail: serde_json::Value,
}

/// One JSON object per line.
pub fn write_ndjson<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn to_ndjson(records: &[TraceRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_ndjson(records, &mut buf).expect("writing to a Vec cannot fail");
    buf
}
