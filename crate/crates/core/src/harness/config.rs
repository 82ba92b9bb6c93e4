//! Flat `key = value` configuration files.
//!
//! ```text
//! # comment
//! [global]
//! L = 0:300:10
//! eta-d = 0.2
//!
//! [curve.g16]
//! G = 16
//! mu = 1.7
//! rounds = 0, 1, 2, 3
//! ```
//!
//! Keys are the long CLI flag names. Numeric lists accept comma or whitespace
//! separated items, and `start:stop:step` expands to an inclusive range.

use std::path::Path;

use crate::error::{Error, Result};

/// One `key = value` line, with its origin for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConfigFile {
    pub origin: String,
    pub global: Vec<Entry>,
    /// Curve sections in file order.
    pub curves: Vec<(String, Vec<Entry>)>,
}

pub fn parse_config(text: &str, origin: &str) -> Result<ConfigFile> {
    let err = |line: usize, message: String| Error::Config {
        origin: origin.to_string(),
        line,
        message,
    };
    let mut cfg = ConfigFile {
        origin: origin.to_string(),
        ..Default::default()
    };
    // None = global section
    let mut section: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("unterminated section header `{s}`")))?
                .trim();
            if name == "global" {
                section = None;
            } else if let Some(label) = name.strip_prefix("curve.") {
                if label.is_empty()
                    || !label
                        .chars()
                        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
                {
                    return Err(err(line, format!("bad curve label `{label}`")));
                }
                if cfg.curves.iter().any(|(l, _)| l == label) {
                    return Err(err(line, format!("duplicate curve `{label}`")));
                }
                cfg.curves.push((label.to_string(), Vec::new()));
                section = Some(cfg.curves.len() - 1);
            } else {
                return Err(err(line, format!("unknown section `[{name}]`")));
            }
            continue;
        }
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{s}`")))?;
        let entry = Entry {
            key: k.trim().to_string(),
            value: v.trim().to_string(),
            line,
        };
        if entry.key.is_empty() || entry.value.is_empty() {
            return Err(err(line, "empty key or value".into()));
        }
        let target = match section {
            None => &mut cfg.global,
            Some(c) => &mut cfg.curves[c].1,
        };
        if target.iter().any(|e| e.key == entry.key) {
            return Err(err(line, format!("duplicate key `{}`", entry.key)));
        }
        target.push(entry);
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}

fn items(value: &str) -> impl Iterator<Item = &str> {
    value
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
}

/// Parses a numeric list with optional inclusive `start:stop:step` ranges.
pub fn parse_f64_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| format!("`{s}` is not a finite number"))
    };
    let mut out = Vec::new();
    for item in items(value) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(num(x)?),
            [a, b, c] => {
                let (start, stop, step) = (num(a)?, num(b)?, num(c)?);
                if step <= 0.0 || stop < start {
                    return Err(format!("range `{item}` needs step > 0 and stop >= start"));
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize;
                if n > 100_000 {
                    return Err(format!("range `{item}` is too long"));
                }
                // index-based so that values are exact multiples of the step
                out.extend((0..=n).map(|i| start + i as f64 * step));
            }
            _ => return Err(format!("`{item}` is neither a number nor start:stop:step")),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

pub fn parse_u32_list(value: &str) -> std::result::Result<Vec<u32>, String> {
    let xs = parse_f64_list(value)?;
    xs.into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 {
                Ok(x as u32)
            } else {
                Err(format!("`{x}` is not a non-negative integer"))
            }
        })
        .collect()
}

/// Parses a count, accepting scientific notation such as `1e7`.
pub fn parse_count(value: &str) -> std::result::Result<u64, String> {
    if let Ok(n) = value.parse::<u64>() {
        return Ok(n);
    }
    match value.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(format!("`{value}` is not a non-negative integer")),
    }
}
