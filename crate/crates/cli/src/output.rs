//! Staged artifact writing: files land in a scratch directory and are moved
//! into the output directory only when the whole run succeeds.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Floats are written with 17 significant digits.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Staging {
    dir: PathBuf,
    out: PathBuf,
    files: Vec<String>,
}

impl Staging {
    pub fn new(out: &Path) -> Result<Self, CliError> {
        let name = out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into());
        let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let dir = parent.join(format!(".{name}.partial-{}", std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| CliError::io("staging", e))?;
        }
        fs::create_dir_all(&dir).map_err(|e| CliError::io("staging", e))?;
        Ok(Self {
            dir,
            out: out.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write_text(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        fs::write(self.dir.join(name), content).map_err(|e| CliError::io(format!("writing {name}"), e))?;
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let io = |e: csv::Error| CliError::io(format!("writing {name}"), e.into());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.write_record(&row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(format!("writing {name}"), e.into_error()))?;
        self.write_text(name, &String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Moves staged files into the output directory.
    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::io("creating output directory", e))?;
        let mut written = Vec::new();
        for f in &self.files {
            let dest = self.out.join(f);
            fs::rename(self.dir.join(f), &dest).map_err(|e| CliError::io(format!("moving {f}"), e))?;
            written.push(dest);
        }
        fs::remove_dir_all(&self.dir).map_err(|e| CliError::io("removing staging directory", e))?;
        Ok(written)
    }

    pub fn abort(self) {
        let _ = fs::remove_dir_all(&self.dir);
    }
}
