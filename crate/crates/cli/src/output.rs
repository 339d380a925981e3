//! Artifact files. Every file opens with `#` comment lines giving the tool
//! version, the scenario hash and the column units; numbers are written in
//! shortest round-trip form.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::run::RunError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest representation that parses back to the same f64.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Output directory of one run, recording what it wrote.
pub struct OutputDir {
    dir: PathBuf,
    hash: String,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path, hash: &str) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), hash: hash.to_string(), written: Vec::new() })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }

    fn open(&mut self, name: &str, units: &str) -> Result<(PathBuf, BufWriter<File>), RunError> {
        let path = self.dir.join(name);
        let io_err = |source| RunError::Io { path: path.clone(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
        writeln!(w, "# qline {VERSION}").map_err(io_err)?;
        writeln!(w, "# scenario sha256 {}", self.hash).map_err(io_err)?;
        writeln!(w, "# units: {units}").map_err(io_err)?;
        self.written.push(path.clone());
        Ok((path, w))
    }

    /// Writes a CSV table. `columns` pairs each name with its unit.
    pub fn csv<I>(&mut self, name: &str, columns: &[(&str, &str)], rows: I) -> Result<(), RunError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let units: Vec<_> = columns.iter().map(|(c, u)| format!("{c} [{u}]")).collect();
        let (path, w) = self.open(name, &units.join(", "))?;
        let csv_err = |e: csv::Error| RunError::Io { path: path.clone(), source: io::Error::other(e) };
        let mut out = csv::Writer::from_writer(w);
        out.write_record(columns.iter().map(|(c, _)| *c)).map_err(csv_err)?;
        for row in rows {
            out.write_record(&row).map_err(csv_err)?;
        }
        out.flush().map_err(|source| RunError::Io { path: path.clone(), source })
    }

    /// Writes a gnuplot `nonuniform matrix`: the first row holds the column
    /// count and the x coordinates, each further row a y coordinate and z(x, y).
    pub fn gnuplot_matrix(
        &mut self,
        name: &str,
        units: &str,
        xs: &[f64],
        ys: &[f64],
        z: impl Fn(usize, usize) -> f64,
    ) -> Result<(), RunError> {
        let (path, mut w) = self.open(name, units)?;
        let io_err = |source| RunError::Io { path: path.clone(), source };
        let head: Vec<_> = xs.iter().map(|x| num(*x)).collect();
        writeln!(w, "{} {}", xs.len(), head.join(" ")).map_err(io_err)?;
        for (iy, y) in ys.iter().enumerate() {
            let row: Vec<_> = (0..xs.len()).map(|ix| num(z(ix, iy))).collect();
            writeln!(w, "{} {}", num(*y), row.join(" ")).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }
}
