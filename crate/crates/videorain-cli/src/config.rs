//! Plain-text key=value configuration and run manifests.
//!
//! One key per line, `#` starts a comment, values run to the end of the
//! line. The manifests written by `derain` and `synth` use the same format
//! with a few informational keys on top, so a manifest can be passed back
//! through `--config` to reproduce its run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;

use crate::usage;

/// Keys that manifests record for the reader's benefit but that carry no
/// parameter value on the way back in.
const INFORMATIONAL_KEYS: &[&str] = &[
    "command",
    "theta_used",
    "theta_confidence",
    "iterations_run",
    "converged",
    "height",
    "width",
    "frames",
    "angle_jitter_deg",
    "length_mean",
    "length_jitter",
    "streak_width",
    "intensity_mean",
    "intensity_jitter",
];

pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn empty() -> Self {
        ConfigMap { entries: BTreeMap::new() }
    }

    /// Parse a file, rejecting malformed lines and keys outside
    /// `allowed_keys` + the informational set.
    pub fn load(path: &str, allowed_keys: &[&str]) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {path}"))?;
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("{path}:{}: expected key=value, got {line:?}", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if INFORMATIONAL_KEYS.contains(&key) {
                continue;
            }
            if !allowed_keys.contains(&key) {
                return Err(usage(format!("{path}:{}: unknown key {key:?}", lineno + 1)));
            }
            entries.insert(key.to_string(), value.to_string());
        }
        Ok(ConfigMap { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Flag value if present, else config-file value, else None.
    pub fn resolve<'a>(&'a self, flag: Option<&'a str>, key: &str) -> Option<&'a str> {
        flag.or_else(|| self.get(key))
    }

    pub fn resolve_parsed<T: std::str::FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
    ) -> anyhow::Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.get(key) {
            None => Ok(None),
            Some(text) => text
                .parse()
                .map(Some)
                .map_err(|_| usage(format!("config key {key}: cannot parse {text:?}"))),
        }
    }
}

/// Parse "a1,a2,...,aN" (or a single value broadcast to all N slots).
pub fn parse_weights<const N: usize>(text: &str, flag: &str) -> anyhow::Result<[f64; N]> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("--{flag}: expected comma-separated numbers, got {text:?}")))?;
    match parts.as_slice() {
        [single] => Ok([*single; N]),
        exact if exact.len() == N => {
            let mut out = [0.0; N];
            out.copy_from_slice(exact);
            Ok(out)
        }
        other => Err(usage(format!(
            "--{flag}: expected 1 or {N} values, got {}",
            other.len()
        ))),
    }
}

pub fn format_weights(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Write `pairs` as a key=value manifest at `path`.
pub fn write_manifest(path: &Path, pairs: &[(&str, String)]) -> anyhow::Result<()> {
    let mut text = String::new();
    for (key, value) in pairs {
        writeln!(text, "{key}={value}").expect("string write cannot fail");
    }
    std::fs::write(path, text)
        .with_context(|| format!("cannot write manifest {}", path.display()))
}
