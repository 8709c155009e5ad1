//! Output plumbing for the `ris-crb` binary: CSV and JSON rendering plus the
//! mapping from failures to exit codes.

use std::io::Write;

use ris_crb::experiments::Rows;
use ris_crb::{Error, ExperimentConfig, OutputFormat};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::AtSweepPoint { source, .. } => exit_code(source),
        e if e.is_numerical() => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn csv_rows<T: Serialize>(rows: &[T], out: &mut Vec<u8>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Renders `rows` in `format`. JSON carries the config echo; validation
/// results go under `checks` instead of `rows`.
pub fn render(config: &ExperimentConfig, rows: &Rows, format: OutputFormat) -> anyhow::Result<Vec<u8>> {
    let mut out = Vec::new();
    match format {
        OutputFormat::Csv => match rows {
            Rows::Sweep(r) => csv_rows(r, &mut out)?,
            Rows::Spectrum(r) => csv_rows(r, &mut out)?,
            Rows::Moments(r) => csv_rows(r, &mut out)?,
            Rows::Checks(r) => csv_rows(r, &mut out)?,
        },
        OutputFormat::Json => {
            let value = match rows {
                Rows::Checks(checks) => serde_json::json!({ "config": config, "rows": [], "checks": checks }),
                other => serde_json::json!({ "config": config, "rows": other }),
            };
            serde_json::to_writer_pretty(&mut out, &value)?;
            out.push(b'\n');
        }
    }
    Ok(out)
}

/// Writes `bytes` to `path`, or to stdout when there is no path.
pub fn emit(bytes: &[u8], path: Option<&str>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()
        }
    }
}
