//! Flat `key = value` run configuration.
//!
//! Resolution order, later wins: command defaults, preset, config file,
//! `--set key=value`, dedicated flags. `output_dir` additionally honors
//! `GRAVDEC_OUTPUT_DIR`, which overrides everything except `--output-dir`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use gravdec::units::parse_si;

use crate::error::CliError;

pub const OUTPUT_DIR_ENV: &str = "GRAVDEC_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn with_defaults(defaults: Vec<(String, String)>) -> Self {
        RunConfig { values: defaults.into_iter().collect() }
    }

    /// Overwrites an existing key; unknown keys are a usage error. The
    /// command comes from the command line, so `command` may only be
    /// restated, not changed.
    pub fn set(&mut self, key: &str, value: &str, source: &str) -> Result<(), CliError> {
        let value = value.trim();
        match self.values.get_mut(key) {
            Some(slot) if key == "command" && slot != value => Err(CliError::Usage(format!(
                "{source} is for command {value:?}, not {slot:?}"
            ))),
            Some(slot) => {
                *slot = value.to_string();
                Ok(())
            }
            None => Err(CliError::Usage(format!("unknown configuration key {key:?} ({source})"))),
        }
    }

    pub fn apply(&mut self, layer: &Layer) -> Result<(), CliError> {
        for (k, v) in &layer.entries {
            self.set(k, v, &layer.source)?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("no default for {key}"))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(key);
        raw.parse::<T>().map_err(|e| CliError::Invalid(format!("{key} = {raw:?}: {e}")))
    }

    /// A number with an optional unit tag, returned in SI.
    pub fn si(&self, key: &str) -> Result<f64, CliError> {
        let raw = self.get(key);
        parse_si(raw).map_err(|e| CliError::Invalid(format!("{key} = {raw:?}: {e}")))
    }

    /// `None` for the literal `auto`.
    pub fn optional_si(&self, key: &str) -> Result<Option<f64>, CliError> {
        if self.get(key) == "auto" {
            Ok(None)
        } else {
            self.si(key).map(Some)
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(CliError::Invalid(format!("{key} = {other:?}: expected true or false"))),
        }
    }

    pub fn manifest(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// One source of assignments, applied in order.
#[derive(Debug, Clone, Default)]
pub struct Layer {
    pub source: String,
    pub entries: Vec<(String, String)>,
}

impl Layer {
    pub fn new(source: impl Into<String>, entries: Vec<(String, String)>) -> Self {
        Layer { source: source.into(), entries }
    }

    pub fn read_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let source = format!("config file {}", path.display());
        let entries = parse_lines(&text, &source)?;
        Ok(Layer { source, entries })
    }

    pub fn from_assignments(items: &[String]) -> Result<Self, CliError> {
        let entries = items
            .iter()
            .map(|a| {
                a.split_once('=')
                    .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                    .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {a:?}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Layer { source: "--set".into(), entries })
    }

    /// The last value this layer assigns to `key`.
    pub fn lookup(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn parse_lines(text: &str, source: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut seen = BTreeMap::new();
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{source}:{}: expected key = value", no + 1)))?;
        let k = k.trim().to_string();
        if seen.insert(k.clone(), no + 1).is_some() {
            return Err(CliError::Usage(format!("{source}:{}: duplicate key {k:?}", no + 1)));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}
