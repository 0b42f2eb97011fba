use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Output directory of a run.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&root)
            .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Creates `name` and hands a buffered writer to `fill`.
    pub fn write<F>(&self, name: &str, fill: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut w = BufWriter::new(file);
        fill(&mut w)?;
        w.flush().map_err(|e| io_error(&path, e))?;
        Ok(path)
    }

    /// Writes `manifest.json`: the command, seed and resolved parameters.
    pub fn manifest<P: Serialize>(&self, command: &str, seed: u64, params: &P) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Manifest<'a, P> {
            command: &'a str,
            version: &'a str,
            seed: u64,
            params: &'a P,
        }
        let m = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            params,
        };
        self.write("manifest.json", |w| {
            serde_json::to_writer_pretty(&mut *w, &m).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(w)?;
            Ok(())
        })?;
        Ok(())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}
