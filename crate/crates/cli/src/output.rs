// SPDX-License-Identifier: Apache-2.0

//! CSV and JSON writers. Floats carry 12 significant digits so files diff
//! cleanly across runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Signed zero prints as plain zero.
pub fn number(v: f64) -> String {
    format!("{:.11e}", v + 0.0)
}

/// In-memory CSV with a fixed header.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let names: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
        Self {
            text: format!("{}\n", names.join(",")),
            columns: names.len(),
        }
    }

    /// Appends a row made of pre-formatted cells.
    pub fn row<S: AsRef<str>>(&mut self, cells: &[S]) {
        debug_assert_eq!(cells.len(), self.columns);
        for (k, cell) in cells.iter().enumerate() {
            if k > 0 {
                self.text.push(',');
            }
            self.text.push_str(cell.as_ref());
        }
        self.text.push('\n');
    }

    pub fn numbers(&mut self, values: impl IntoIterator<Item = f64>) {
        let mut line = String::new();
        for (k, v) in values.into_iter().enumerate() {
            if k > 0 {
                line.push(',');
            }
            let _ = write!(line, "{:.11e}", v + 0.0);
        }
        self.text.push_str(&line);
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.text)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

pub fn file(dir: &Path, scenario: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{scenario}_{suffix}"))
}
