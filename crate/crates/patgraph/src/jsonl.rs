//! JSON-lines reading and writing, shared by every corpus-style file format
//! (patent documents, graphs, citations, training logs).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::Error;

/// Read every record of a JSON-lines file. Blank lines are skipped.
pub fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, Error> {
    let file = File::open(path).map_err(|e| Error::msg(format!("open {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: T = serde_json::from_str(&line)
            .map_err(|e| Error::msg(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

/// Write records as one JSON object per line.
pub fn write_all<T: Serialize>(path: &Path, records: &[T]) -> Result<(), Error> {
    let file =
        File::create(path).map_err(|e| Error::msg(format!("create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Append one record to an open writer (used by the training log).
pub fn append_record<T: Serialize, W: Write>(w: &mut W, record: &T) -> Result<(), Error> {
    serde_json::to_writer(&mut *w, record)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
