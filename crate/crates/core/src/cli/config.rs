//! `key=value` run configuration.
//!
//! ```text
//! # comments and blank lines are ignored
//! nu = 0.3
//! alpha = 0.5
//! beta = 1
//! a = -1
//! class = B          # A or B
//! n = 100            # coefficients
//! zeros = 40
//! gram_size = 6
//! kernel_terms = 40
//! quad_m = 48
//! tol = 1e-12
//! format = json      # json or csv
//! out = report.json
//! z = 0.5, 1.0, 2.0  # eval points
//! source = recurrence  # recurrence, closed_form or hyperbessel
//! perturb = 3:1.01   # scale c_3 by 1.01; repeat with commas
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

pub const KEYS: &[&str] = &[
    "nu",
    "alpha",
    "beta",
    "a",
    "class",
    "n",
    "zeros",
    "gram_size",
    "kernel_terms",
    "quad_m",
    "tol",
    "format",
    "out",
    "z",
    "source",
    "perturb",
];

/// Parsed configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    pub values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value", i + 1)));
            };
            let key = k.trim().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key `{key}`", i + 1)));
            }
            if values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(ConfigFile { values })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`"))),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

/// `k:factor` pairs separated by commas.
pub fn parse_perturb(s: &str) -> Result<Vec<(usize, f64)>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, f) = p
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("perturbation `{p}` is not k:factor")))?;
            let k = k.trim().parse().map_err(|_| Error::Config(format!("bad index in `{p}`")))?;
            let f: f64 = f.trim().parse().map_err(|_| Error::Config(format!("bad factor in `{p}`")))?;
            Ok((k, f))
        })
        .collect()
}

/// Comma-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| Error::Config(format!("bad number `{p}`"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_schema() {
        let c = ConfigFile::parse("# run\nnu = 0.3\nclass=B # comment\n\ngram-size = 8\nperturb = 3:1.01, 5:0.9\n").unwrap();
        assert_eq!(c.get::<f64>("nu").unwrap(), Some(0.3));
        assert_eq!(c.raw("class"), Some("B"));
        assert_eq!(c.get::<usize>("gram_size").unwrap(), Some(8));
        assert_eq!(parse_perturb(c.raw("perturb").unwrap()).unwrap(), vec![(3, 1.01), (5, 0.9)]);
        assert_eq!(c.get::<f64>("alpha").unwrap(), None);
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(matches!(ConfigFile::parse("nu 0.3"), Err(Error::Config(_))));
        assert!(matches!(ConfigFile::parse("mu = 1"), Err(Error::Config(_))));
        assert!(matches!(ConfigFile::parse("nu = 1\nnu = 2"), Err(Error::Config(_))));
        let c = ConfigFile::parse("nu = x").unwrap();
        assert!(matches!(c.get::<f64>("nu"), Err(Error::Config(_))));
        assert!(parse_perturb("3").is_err());
        assert_eq!(parse_list("1, 2.5,").unwrap(), vec![1.0, 2.5]);
    }
}
