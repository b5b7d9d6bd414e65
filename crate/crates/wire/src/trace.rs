use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::message::{TouchAction, TouchEvent};
use crate::{Result, WireError};

/// One line of a touch replay file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceRecord {
    pub t_micros: u64,
    pub x: f64,
    pub y: f64,
    pub action: TouchAction,
}

impl From<TraceRecord> for TouchEvent {
    fn from(r: TraceRecord) -> Self {
        TouchEvent {
            x: r.x,
            y: r.y,
            action: r.action,
            t_micros: r.t_micros,
        }
    }
}

impl From<TouchEvent> for TraceRecord {
    fn from(e: TouchEvent) -> Self {
        TraceRecord {
            t_micros: e.t_micros,
            x: e.x,
            y: e.y,
            action: e.action,
        }
    }
}

/// Reads a JSON Lines touch trace; blank lines are skipped.
pub fn read_trace(path: &Path) -> Result<Vec<TouchEvent>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line).map_err(|e| {
            WireError::Malformed(format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        out.push(rec.into());
    }
    Ok(out)
}

pub fn write_trace(path: &Path, events: &[TouchEvent]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for e in events {
        let line = serde_json::to_string(&TraceRecord::from(*e))
            .map_err(|e| WireError::Malformed(e.to_string()))?;
        writeln!(f, "{line}")?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("trace.jsonl");
        let ev = vec![
            TouchEvent {
                x: 10.0,
                y: 20.5,
                action: TouchAction::Down,
                t_micros: 0,
            },
            TouchEvent {
                x: 10.0,
                y: 20.5,
                action: TouchAction::Up,
                t_micros: 80_000,
            },
        ];
        write_trace(&p, &ev).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("{\"tMicros\":0,\"x\":10.0,\"y\":20.5,\"action\":\"down\"}"));
        assert_eq!(read_trace(&p).unwrap(), ev);
    }

    #[test]
    fn bad_line_names_location() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        std::fs::write(&p, "{\"tMicros\":0,\"x\":1,\"y\":2,\"action\":\"down\"}\nnope\n").unwrap();
        let err = read_trace(&p).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
    }
}
