//! Flat-file formats.
//!
//! * signals: CSV `index,real,imag`
//! * windows: the signal CSV plus a JSON sidecar (`<file>.json`) holding the
//!   window kind and its parameters
//! * measurements: CSV `m,k,value`
//! * 2D signals: CSV `n1,n2,real,imag`
//!
//! Floats are written in Rust's shortest round-trip form, so reading back
//! reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measurements::MagnitudeMeasurements;
use crate::signal::{Signal, Window, WindowKind};
use crate::twodim::Signal2D;

pub const SIGNAL_HEADER: &str = "index,real,imag";
pub const MEASUREMENT_HEADER: &str = "m,k,value";
pub const SIGNAL2D_HEADER: &str = "n1,n2,real,imag";

fn records(r: impl Read, header: &str) -> Result<Vec<Vec<String>>> {
    let mut lines = BufReader::new(r).lines();
    let first = lines.next().transpose()?;
    if first.as_deref().map(str::trim) != Some(header) {
        return Err(Error::Parse(format!("expected header `{header}`")));
    }
    let width = header.split(',').count();
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != width {
            return Err(Error::Parse(format!("line {}: expected {width} fields", i + 2)));
        }
        out.push(fields);
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Parse(format!("bad number `{s}`")))
}

pub fn write_signal(mut w: impl Write, x: &[Complex64]) -> Result<()> {
    writeln!(w, "{SIGNAL_HEADER}")?;
    for (i, v) in x.iter().enumerate() {
        writeln!(w, "{i},{:?},{:?}", v.re, v.im)?;
    }
    Ok(())
}

/// Reads `index,real,imag` rows; indices must cover `0..N` exactly once.
pub fn read_signal_values(r: impl Read) -> Result<Vec<Complex64>> {
    let rows = records(r, SIGNAL_HEADER)?;
    let mut out = vec![None; rows.len()];
    for f in rows {
        let i: usize = num(&f[0])?;
        let slot = out.get_mut(i).ok_or_else(|| Error::Parse(format!("index {i} out of range")))?;
        if slot.replace(Complex64::new(num(&f[1])?, num(&f[2])?)).is_some() {
            return Err(Error::Parse(format!("duplicate index {i}")));
        }
    }
    Ok(out.into_iter().map(|v| v.expect("every index filled")).collect())
}

pub fn read_signal(r: impl Read) -> Result<Signal> {
    Signal::new(read_signal_values(r)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct WindowSidecar {
    n: usize,
    #[serde(flatten)]
    kind: WindowKind,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save_signal(path: &Path, x: &Signal) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_signal(&mut w, x.values())?;
    w.flush()?;
    Ok(())
}

pub fn load_signal(path: &Path) -> Result<Signal> {
    read_signal(File::open(path)?)
}

/// Writes the window samples and its JSON sidecar.
pub fn save_window(path: &Path, g: &Window) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_signal(&mut w, g.values())?;
    w.flush()?;
    let meta = WindowSidecar { n: g.len(), kind: g.kind().clone() };
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Reads window samples; the sidecar is optional and defaults to `custom`.
pub fn load_window(path: &Path) -> Result<Window> {
    let values = read_signal_values(File::open(path)?)?;
    let side = sidecar_path(path);
    let kind = if side.exists() {
        let meta: WindowSidecar = serde_json::from_str(&std::fs::read_to_string(side)?)?;
        if meta.n != values.len() {
            return Err(Error::LengthMismatch { expected: meta.n, found: values.len() });
        }
        meta.kind
    } else {
        WindowKind::Custom
    };
    Window::with_kind(values, kind)
}

pub fn write_measurements(mut w: impl Write, y: &MagnitudeMeasurements) -> Result<()> {
    writeln!(w, "{MEASUREMENT_HEADER}")?;
    let g = y.grid();
    for m in 0..g.rows() {
        for (k, v) in g.row(m).iter().enumerate() {
            writeln!(w, "{m},{k},{v:?}")?;
        }
    }
    Ok(())
}

/// Reads an `m,k,value` table covering a full square grid.
pub fn read_measurements(r: impl Read) -> Result<MagnitudeMeasurements> {
    let rows = records(r, MEASUREMENT_HEADER)?;
    let n = (rows.len() as f64).sqrt().round() as usize;
    if n * n != rows.len() {
        return Err(Error::Parse(format!("{} entries do not form a square grid", rows.len())));
    }
    let mut grid: Grid<Option<f64>> = Grid::from_fn(n, n, |_, _| None);
    for f in rows {
        let (m, k): (usize, usize) = (num(&f[0])?, num(&f[1])?);
        if m >= n || k >= n {
            return Err(Error::Parse(format!("entry ({m},{k}) outside {n}x{n} grid")));
        }
        if grid[(m, k)].replace(num(&f[2])?).is_some() {
            return Err(Error::Parse(format!("duplicate entry ({m},{k})")));
        }
    }
    MagnitudeMeasurements::new(grid.map(|v| v.expect("every entry filled")))
}

pub fn save_measurements(path: &Path, y: &MagnitudeMeasurements) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_measurements(&mut w, y)?;
    w.flush()?;
    Ok(())
}

pub fn load_measurements(path: &Path) -> Result<MagnitudeMeasurements> {
    read_measurements(File::open(path)?)
}

pub fn write_signal2d(mut w: impl Write, x: &Signal2D) -> Result<()> {
    writeln!(w, "{SIGNAL2D_HEADER}")?;
    let v = x.values();
    for i in 0..v.rows() {
        for j in 0..v.cols() {
            writeln!(w, "{i},{j},{:?},{:?}", v[(i, j)].re, v[(i, j)].im)?;
        }
    }
    Ok(())
}

pub fn read_signal2d(r: impl Read) -> Result<Signal2D> {
    let rows = records(r, SIGNAL2D_HEADER)?;
    let n = (rows.len() as f64).sqrt().round() as usize;
    if n * n != rows.len() {
        return Err(Error::Parse(format!("{} entries do not form a square grid", rows.len())));
    }
    let mut grid: Grid<Option<Complex64>> = Grid::from_fn(n, n, |_, _| None);
    for f in rows {
        let (i, j): (usize, usize) = (num(&f[0])?, num(&f[1])?);
        if i >= n || j >= n {
            return Err(Error::Parse(format!("entry ({i},{j}) outside {n}x{n} grid")));
        }
        if grid[(i, j)].replace(Complex64::new(num(&f[2])?, num(&f[3])?)).is_some() {
            return Err(Error::Parse(format!("duplicate entry ({i},{j})")));
        }
    }
    Signal2D::new(grid.map(|v| v.expect("every entry filled")))
}
