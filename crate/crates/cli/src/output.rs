use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Nine significant digits; infinities keep the `+inf` sentinel used in JSON.
pub fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.8e}")
    }
}

pub struct Csv {
    header: Vec<&'static str>,
    rows: Vec<String>,
}

impl Csv {
    pub fn new(header: &[&'static str]) -> Self {
        Csv { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.header.len());
        let cells: Vec<String> = values.iter().map(|v| num(*v)).collect();
        self.rows.push(cells.join(","));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

pub struct OutputDir {
    path: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(path)
            .map_err(|e| CliError::Io(format!("cannot create output directory {}: {e}", path.display())))?;
        Ok(OutputDir { path: path.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write_bytes(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        let p = self.path.join(name);
        let io_err = |e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
        let file = fs::File::create(&p).map_err(io_err)?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        self.write_bytes(name, |w| w.write_all(text.as_bytes()))
    }

    pub fn write_csv(&mut self, name: &str, csv: &Csv) -> Result<(), CliError> {
        self.write_bytes(name, |w| {
            writeln!(w, "{}", csv.header.join(","))?;
            for r in &csv.rows {
                writeln!(w, "{r}")?;
            }
            Ok(())
        })
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write_text(name, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(num(1.5089e9), "1.50890000e9");
        assert_eq!(num(-0.0001), "-1.00000000e-4");
        assert_eq!(num(f64::INFINITY), "+inf");
    }
}
