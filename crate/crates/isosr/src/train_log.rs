//! Training log as JSON lines, one record per completed epoch.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use isosr_core::nn::EpochRecord;
use serde::{Deserialize, Serialize};

use crate::error::{IoError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub wall_time_s: f64,
    pub is_best: bool,
}

impl LogRecord {
    pub fn new(rec: &EpochRecord, wall_time_s: f64) -> Self {
        Self { epoch: rec.epoch, train_loss: rec.train_loss, val_loss: rec.val_loss, wall_time_s, is_best: rec.is_best }
    }
}

pub fn append_record(path: &Path, rec: &LogRecord) -> Result<()> {
    let mut line = serde_json::to_string(rec).map_err(|e| IoError::format(path, e.to_string()))?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| IoError::io(path, e))?;
    f.write_all(line.as_bytes()).map_err(|e| IoError::io(path, e))
}

/// Read every record; a missing file is an empty log. A torn final line (no newline) is ignored.
pub fn read_log(path: &Path) -> Result<Vec<LogRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    complete
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| IoError::format(path, format!("log line {l:?}: {e}"))))
        .collect()
}

/// Keep only records up to and including `epoch`.
pub fn truncate_log(path: &Path, epoch: usize) -> Result<Vec<LogRecord>> {
    let kept: Vec<LogRecord> = read_log(path)?.into_iter().filter(|r| r.epoch <= epoch).collect();
    let mut text = String::new();
    for r in &kept {
        text.push_str(&serde_json::to_string(r).map_err(|e| IoError::format(path, e.to_string()))?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))?;
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(epoch: usize) -> LogRecord {
        LogRecord { epoch, train_loss: 0.5 / epoch as f64, val_loss: 0.25, wall_time_s: 1.5, is_best: epoch == 1 }
    }

    #[test]
    fn append_read_truncate() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("log.jsonl");
        assert!(read_log(&p).unwrap().is_empty());
        for e in 1..=4 {
            append_record(&p, &rec(e)).unwrap();
        }
        assert_eq!(read_log(&p).unwrap(), (1..=4).map(rec).collect::<Vec<_>>());
        assert_eq!(truncate_log(&p, 2).unwrap().len(), 2);
        assert_eq!(read_log(&p).unwrap(), vec![rec(1), rec(2)]);
        let mut f = OpenOptions::new().append(true).open(&p).unwrap();
        f.write_all(b"{\"epoch\": 3, \"tra").unwrap();
        assert_eq!(read_log(&p).unwrap().len(), 2);
    }
}
