use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::run::RunRecord;
use super::sweep::{SweepCell, SweepTable};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str =
    "axis,value,baseline,setup,mean_rate_bps_hz,stderr,trials_ok,trials_failed";

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes one row per cell under [`CSV_HEADER`], LF line endings, floats in
/// shortest round-trip form.
pub fn emit_csv(table: &SweepTable, path: &Path) -> Result<()> {
    if table.cells.is_empty() {
        return Err(Error::InvalidInput(
            "refusing to write an empty table".into(),
        ));
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    for cell in &table.cells {
        w.serialize(cell).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<SweepTable> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let cells = r
        .deserialize::<SweepCell>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_err(path))?;
    Ok(SweepTable { cells })
}

/// One JSON object per run.
pub fn write_traces(records: &[RunRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::InvalidInput(e.to_string()))?;
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}
