//! Line-oriented `key = value` configuration with `[section]` headers.
//!
//! Keys outside any section belong to `[params]`. Each entry becomes a
//! `--key=value` argument (`true` becomes a bare flag, `false` is dropped),
//! so configuration values pass through the same validation as flags.

use std::fmt::Write as _;

use thiserror::Error;

pub const PARAMS_SECTION: &str = "params";

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value` or `[section]`, found `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: empty key")]
    EmptyKey { line: usize },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    /// Sections in file order; repeated sections are merged.
    pub sections: Vec<(String, Vec<(String, String)>)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ConfigFile::default();
        let mut current = PARAMS_SECTION.to_string();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = name.trim().to_string();
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line: i + 1,
                    text: line.to_string(),
                });
            };
            let key = k.trim();
            if key.is_empty() {
                return Err(ConfigError::EmptyKey { line: i + 1 });
            }
            cfg.push(&current, key, v.trim());
        }
        Ok(cfg)
    }

    pub fn push(&mut self, section: &str, key: &str, value: &str) {
        let entries = match self.sections.iter_mut().find(|(s, _)| s == section) {
            Some((_, e)) => e,
            None => {
                self.sections.push((section.to_string(), Vec::new()));
                &mut self.sections.last_mut().expect("just pushed").1
            }
        };
        entries.retain(|(k, _)| k != key);
        entries.push((key.to_string(), value.to_string()));
    }

    pub fn section(&self, name: &str) -> &[(String, String)] {
        self.sections
            .iter()
            .find(|(s, _)| s == name)
            .map(|(_, e)| e.as_slice())
            .unwrap_or(&[])
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, (name, entries)) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{name}]");
            for (k, v) in entries {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }
}

/// Converts a section's entries into long-flag arguments.
pub fn to_args(entries: &[(String, String)]) -> Vec<String> {
    let mut out = Vec::new();
    for (k, v) in entries {
        let flag = format!("--{}", k.replace('_', "-"));
        match v.as_str() {
            "true" => out.push(flag),
            "false" => {}
            _ => out.push(format!("{flag}={v}")),
        }
    }
    out
}
