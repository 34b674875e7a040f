//! Plain-text CSV traces.
//!
//! Complex traces use the header `time_s,real,imag`, real traces `time_s,value`.
//! Numbers are written in Rust's shortest round-trip exponent form, so a
//! write followed by a read reproduces the samples bit for bit.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use super::{TimeGrid, Unit, Waveform};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Real,
    Complex,
}

/// Writes `w` atomically: the file appears complete or not at all.
pub fn write_trace(path: &Path, w: &Waveform, kind: TraceKind) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut out = std::io::BufWriter::new(tmp.as_file());
        let mut wr = csv::Writer::from_writer(&mut out);
        let map_csv = |e: csv::Error| Error::Io(std::io::Error::other(e));
        match kind {
            TraceKind::Real => wr.write_record(["time_s", "value"]).map_err(map_csv)?,
            TraceKind::Complex => wr.write_record(["time_s", "real", "imag"]).map_err(map_csv)?,
        }
        for (i, z) in w.samples().iter().enumerate() {
            let t = format!("{:e}", w.grid().time(i));
            match kind {
                TraceKind::Real => wr.write_record([t, format!("{:e}", z.re)]).map_err(map_csv)?,
                TraceKind::Complex => wr
                    .write_record([t, format!("{:e}", z.re), format!("{:e}", z.im)])
                    .map_err(map_csv)?,
            }
        }
        wr.flush()?;
        drop(wr);
        out.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Reads a trace written in either layout. The time column must be uniform.
pub fn read_trace(path: &Path, unit: Unit) -> Result<Waveform> {
    let perr = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io_at(path, io),
            other => perr(1, format!("{other:?}")),
        })?;
    let header = rd.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let kind = match cols.as_slice() {
        ["time_s", "value"] => TraceKind::Real,
        ["time_s", "real", "imag"] => TraceKind::Complex,
        _ => {
            return Err(perr(
                1,
                format!(
                    "expected header `time_s,value` or `time_s,real,imag`, got `{}`",
                    cols.join(",")
                ),
            ))
        }
    };

    let mut times = Vec::new();
    let mut samples = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            perr(line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let num = |k: usize| -> Result<f64> {
            let s = rec
                .get(k)
                .ok_or_else(|| perr(line, format!("missing column {}", k + 1)))?;
            let v: f64 = s.parse().map_err(|_| perr(line, format!("`{s}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(perr(line, format!("non-finite value `{s}`")))
            }
        };
        let expected = if kind == TraceKind::Real { 2 } else { 3 };
        if rec.len() != expected {
            return Err(perr(line, format!("expected {expected} columns, found {}", rec.len())));
        }
        times.push(num(0)?);
        samples.push(match kind {
            TraceKind::Real => Complex64::new(num(1)?, 0.0),
            TraceKind::Complex => Complex64::new(num(1)?, num(2)?),
        });
    }
    if times.len() < 2 {
        return Err(perr(1, "trace needs at least 2 samples".into()));
    }
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if !(dt > 0.0) {
        return Err(perr(2, "time column must be increasing".into()));
    }
    for (i, &t) in times.iter().enumerate() {
        let ideal = times[0] + i as f64 * dt;
        if (t - ideal).abs() > 1e-6 * dt {
            return Err(perr(i as u64 + 2, format!("non-uniform sampling at t = {t:e} s")));
        }
    }
    let grid = TimeGrid::new(times[0], dt, n)?;
    Waveform::new(grid, samples, unit)
}
