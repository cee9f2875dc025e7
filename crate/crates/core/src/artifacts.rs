//! On-disk run artifacts: diagnostics CSV, binary field snapshots,
//! metadata, and gnuplot script emission.
//!
//! Snapshot format (little-endian): magic "MSKF", u32 version = 1,
//! u32 nx, u32 ny, f64 lx, f64 ly, f64 t, f64 alpha, then nx*ny f64
//! row-major values.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::diagnostics::{DiagnosticsRecord, CSV_HEADER};
use crate::error::{CoreError, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::stepper::{RunSink, SimState};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"MSKF";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_snapshot(path: &Path, f: &ScalarField, t: f64, alpha: f64) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(f.grid.nx as u32).to_le_bytes())?;
    w.write_all(&(f.grid.ny as u32).to_le_bytes())?;
    for v in [f.grid.lx, f.grid.ly, t, alpha] {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in &f.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub struct Snapshot {
    pub field: ScalarField,
    pub t: f64,
    pub alpha: f64,
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(CoreError::Config(format!(
            "bad snapshot magic {magic:?} in {}",
            path.display()
        )));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != SNAPSHOT_VERSION {
        return Err(CoreError::Config(format!("unsupported snapshot version {version}")));
    }
    r.read_exact(&mut u32buf)?;
    let nx = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)?;
    let ny = u32::from_le_bytes(u32buf) as usize;
    let mut f64buf = [0u8; 8];
    let mut next = || -> Result<f64> {
        r.read_exact(&mut f64buf)?;
        Ok(f64::from_le_bytes(f64buf))
    };
    let lx = next()?;
    let ly = next()?;
    let t = next()?;
    let alpha = next()?;
    let grid = GridSpec::new(nx, ny, lx, ly)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(next()?);
    }
    Ok(Snapshot {
        field: ScalarField { grid, values },
        t,
        alpha,
    })
}

/// Sink writing diagnostics.csv rows and numbered snapshots into a run dir.
pub struct CsvSink {
    csv: BufWriter<File>,
    fields_dir: PathBuf,
    alpha: f64,
    snapshot_count: usize,
}

impl CsvSink {
    pub fn create(dir: &Path, alpha: f64) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let fields_dir = dir.join("fields");
        std::fs::create_dir_all(&fields_dir)?;
        let mut csv = BufWriter::new(File::create(dir.join("diagnostics.csv"))?);
        writeln!(csv, "{CSV_HEADER}")?;
        Ok(CsvSink {
            csv,
            fields_dir,
            alpha,
            snapshot_count: 0,
        })
    }

    pub fn finish(mut self) -> Result<()> {
        self.csv.flush()?;
        Ok(())
    }
}

impl RunSink for CsvSink {
    fn on_record(&mut self, _state: &SimState, rec: &DiagnosticsRecord) {
        // IO errors surface on finish(); the write target is a local file
        let _ = writeln!(self.csv, "{}", rec.to_csv_line());
    }

    fn on_snapshot(&mut self, state: &SimState) {
        let name = format!("snap_{:04}.mskf", self.snapshot_count);
        self.snapshot_count += 1;
        let _ = write_snapshot(&self.fields_dir.join(name), &state.f, state.t, self.alpha);
    }
}

pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(CoreError::Config(format!(
                "bad diagnostics header: {other:?}"
            )))
        }
    }
    lines.map(DiagnosticsRecord::from_csv_line).collect()
}

/// Gnuplot script plotting the main diagnostic curves from diagnostics.csv.
pub fn write_plot_script(dir: &Path, title: &str) -> Result<()> {
    let body = format!(
        "set datafile separator \",\"\n\
         set key autotitle columnhead\n\
         set title \"{title}\"\n\
         set xlabel \"t\"\n\
         set logscale y\n\
         set terminal pngcairo size 1000,700\n\
         set output \"diagnostics.png\"\n\
         plot \"diagnostics.csv\" using 1:3 with lines title \"linf\", \\\n\
              \"diagnostics.csv\" using 1:4 with lines title \"grad_linf\", \\\n\
              \"diagnostics.csv\" using 1:5 with lines title \"l1\", \\\n\
              \"diagnostics.csv\" using 1:7 with lines title \"fnorm_1\"\n"
    );
    std::fs::write(dir.join("plot.plt"), body)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridSpec::square(16, 1.5).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (x * 12.3).sin() + y * 0.1);
        let p = dir.path().join("f.mskf");
        write_snapshot(&p, &f, 0.75, 0.3).unwrap();
        let s = read_snapshot(&p).unwrap();
        assert_eq!(s.field.values, f.values);
        assert_eq!(s.t, 0.75);
        assert_eq!(s.alpha, 0.3);
        assert_eq!(s.field.grid, g);
        // header layout: 4 magic + 4 version + 8 dims + 4*8 scalars + data
        let bytes = std::fs::read(&p).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 8 + 32 + 8 * g.len());
        assert_eq!(&bytes[..4], b"MSKF");
    }

    #[test]
    fn snapshot_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.mskf");
        std::fs::write(&p, b"NOPE....").unwrap();
        assert!(read_snapshot(&p).is_err());
    }
}
