//! `key = value` run configuration with per-command key validation.
//!
//! Lines starting with `#` and blank lines are ignored. Every key may appear
//! at most once; command-line overrides replace file values. Each value read
//! by a command is recorded, defaults included, so the manifest echoes the
//! fully resolved configuration.

use std::sync::Mutex;
use std::collections::BTreeMap;

use pdlab::{ModelParams, TwiceSpin};
use serde_json::{json, Value};

use crate::CliError;

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    /// Line in the config file, or `None` for an override.
    line: Option<usize>,
}

#[derive(Debug, Default)]
pub struct Config {
    entries: BTreeMap<String, Entry>,
    resolved: Mutex<BTreeMap<String, Value>>,
}

fn config_error(line: Option<usize>, msg: String) -> CliError {
    match line {
        Some(l) => CliError::Config(format!("line {l}: {msg}")),
        None => CliError::Config(format!("override: {msg}")),
    }
}

fn split_pair(text: &str, line: Option<usize>) -> Result<(String, String), CliError> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| config_error(line, format!("expected `key = value`, got `{}`", text.trim())))?;
    let key = k.trim();
    if key.is_empty() {
        return Err(config_error(line, "empty key".into()));
    }
    Ok((key.to_string(), v.trim().to_string()))
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let line = Some(i + 1);
            let (key, value) = split_pair(body, line)?;
            if let Some(prev) = cfg.entries.get(&key) {
                return Err(config_error(
                    line,
                    format!("duplicate key `{key}` (first set on line {})", prev.line.unwrap_or(0)),
                ));
            }
            cfg.entries.insert(key, Entry { value, line });
        }
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn set_override(&mut self, pair: &str) -> Result<(), CliError> {
        let (key, value) = split_pair(pair, None)?;
        self.entries.insert(key, Entry { value, line: None });
        Ok(())
    }

    pub fn command(&self) -> Result<String, CliError> {
        self.entries
            .get("command")
            .map(|e| e.value.clone())
            .ok_or_else(|| CliError::Config("missing required key `command`".into()))
    }

    /// Rejects any key outside `allowed`.
    pub fn check_keys(&self, command: &str, allowed: &[&str]) -> Result<(), CliError> {
        for (key, entry) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(config_error(entry.line, format!("unknown key `{key}` for command {command}")));
            }
        }
        Ok(())
    }

    pub fn resolved(&self) -> BTreeMap<String, Value> {
        self.resolved.lock().expect("config lock").clone()
    }

    fn record(&self, key: &str, v: Value) {
        self.resolved.lock().expect("config lock").insert(key.to_string(), v);
    }

    fn raw(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn parse_with<T>(&self, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some(e) => f(&e.value)
                .map(Some)
                .ok_or_else(|| config_error(e.line, format!("invalid value `{}` for `{key}`", e.value))),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.parse_with(key, parse_f64)?.unwrap_or(default);
        self.record(key, json!(v));
        Ok(v)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        let v = self.parse_with(key, |s| s.parse().ok())?.unwrap_or(default);
        self.record(key, json!(v));
        Ok(v)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        let v = self.parse_with(key, |s| s.parse().ok())?.unwrap_or(default);
        self.record(key, json!(v));
        Ok(v)
    }

    pub fn optional_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        let v = self.parse_with(key, |s| s.parse().ok())?;
        if let Some(x) = v {
            self.record(key, json!(x));
        }
        Ok(v)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        let v = self
            .parse_with(key, |s| match s {
                "true" | "yes" | "1" => Some(true),
                "false" | "no" | "0" => Some(false),
                _ => None,
            })?
            .unwrap_or(default);
        self.record(key, json!(v));
        Ok(v)
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        let v = self.raw(key).map_or(default.to_string(), |e| e.value.clone());
        self.record(key, json!(v));
        v
    }

    /// Value restricted to `choices`.
    pub fn choice(&self, key: &str, default: &str, choices: &[&str]) -> Result<String, CliError> {
        let v = self.str_or(key, default);
        if choices.contains(&v.as_str()) {
            Ok(v)
        } else {
            let line = self.raw(key).and_then(|e| e.line);
            Err(config_error(line, format!("`{key}` must be one of {}, got `{v}`", choices.join("|"))))
        }
    }

    pub fn required_str(&self, key: &str) -> Result<String, CliError> {
        let v = self.raw(key).map(|e| e.value.clone()).ok_or_else(|| CliError::Config(format!("missing required key `{key}`")))?;
        self.record(key, json!(v));
        Ok(v)
    }

    pub fn spin_or(&self, key: &str, default: &str) -> Result<TwiceSpin, CliError> {
        let text = self.raw(key).map_or(default.to_string(), |e| e.value.clone());
        let line = self.raw(key).and_then(|e| e.line);
        let spin = parse_spin(&text).ok_or_else(|| config_error(line, format!("invalid spin `{text}` for `{key}`")))?;
        self.record(key, json!(spin.to_string()));
        Ok(spin)
    }

    pub fn spin_list_or(&self, key: &str, default: &str) -> Result<Vec<TwiceSpin>, CliError> {
        let text = self.raw(key).map_or(default.to_string(), |e| e.value.clone());
        let line = self.raw(key).and_then(|e| e.line);
        let spins = split_list(&text)
            .map(|s| parse_spin(s).ok_or_else(|| config_error(line, format!("invalid spin `{s}` in `{key}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        self.record(key, json!(spins.iter().map(|s| s.to_string()).collect::<Vec<_>>()));
        Ok(spins)
    }

    /// Comma-separated integers or an inclusive range `start:stop:step`.
    pub fn usize_list_or(&self, key: &str, default: &str) -> Result<Vec<usize>, CliError> {
        let text = self.raw(key).map_or(default.to_string(), |e| e.value.clone());
        let line = self.raw(key).and_then(|e| e.line);
        let v = parse_usize_list(&text)
            .ok_or_else(|| config_error(line, format!("invalid integer list `{text}` for `{key}`")))?;
        self.record(key, json!(v));
        Ok(v)
    }

    /// Comma-separated floats or an inclusive range `start:stop:step`.
    pub fn f64_list_or(&self, key: &str, default: &str) -> Result<Vec<f64>, CliError> {
        let text = self.raw(key).map_or(default.to_string(), |e| e.value.clone());
        let line = self.raw(key).and_then(|e| e.line);
        let v = parse_f64_list(&text).ok_or_else(|| config_error(line, format!("invalid list `{text}` for `{key}`")))?;
        self.record(key, json!(v));
        Ok(v)
    }

    /// Physical parameters shared by every engine; `l` and `N` are read
    /// only when `with_spin_and_sites` is set.
    pub fn model_params(&self, with_spin_and_sites: bool) -> Result<ModelParams, CliError> {
        let d = ModelParams::default();
        let mut p = ModelParams {
            j: self.f64_or("J", d.j)?,
            h: self.f64_or("h", d.h)?,
            k: self.f64_or("K", d.k)?,
            tau: self.f64_or("tau", d.tau)?,
            phi: self.f64_or("phi", d.phi)?,
            ..d
        };
        if with_spin_and_sites {
            p.spin = self.spin_or("l", "1")?;
            p.n_sites = self.usize_or("N", d.n_sites)?;
        }
        p.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(p)
    }
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

/// Accepts plain floats and the constant `pi`, optionally scaled (`pi/2`, `0.5*pi`).
pub fn parse_f64(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<f64>() {
        return Some(v);
    }
    let pi = std::f64::consts::PI;
    if s == "pi" {
        return Some(pi);
    }
    if let Some(d) = s.strip_prefix("pi/") {
        return d.trim().parse::<f64>().ok().map(|d| pi / d);
    }
    if let Some(c) = s.strip_suffix("*pi") {
        return c.trim().parse::<f64>().ok().map(|c| c * pi);
    }
    None
}

pub fn parse_f64_list(text: &str) -> Option<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let (a, b, step) = (parse_f64(parts[0])?, parse_f64(parts[1])?, parse_f64(parts[2])?);
        if !(step > 0.0) || b < a {
            return None;
        }
        let count = ((b - a) / step + 1e-9).floor() as usize;
        // Rounding keeps grid points such as 0.3 free of accumulated error.
        return Some((0..=count).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect());
    }
    split_list(text).map(parse_f64).collect()
}

pub fn parse_usize_list(text: &str) -> Option<Vec<usize>> {
    let parts: Vec<&str> = text.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let (a, b, step): (usize, usize, usize) = (parts[0].parse().ok()?, parts[1].parse().ok()?, parts[2].parse().ok()?);
        if step == 0 || b < a {
            return None;
        }
        return Some((a..=b).step_by(step).collect());
    }
    split_list(text).map(|s| s.parse().ok()).collect()
}

/// `1`, `1.5` or `3/2`.
pub fn parse_spin(s: &str) -> Option<TwiceSpin> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: u32 = num.trim().parse().ok()?;
        return match den.trim() {
            "2" => TwiceSpin::new(num).ok(),
            "1" => TwiceSpin::new(2 * num).ok(),
            _ => None,
        };
    }
    TwiceSpin::from_spin(s.parse().ok()?).ok()
}
