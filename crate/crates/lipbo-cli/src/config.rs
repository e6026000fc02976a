//! Flat key-value config files (`key = value`, `#` comments). CLI flags
//! override file values; keys mirror the long flag names.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        let mut values = HashMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!("{}:{}: expected 'key = value', got '{raw}'", path.display(), lineno + 1);
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(FileConfig { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => match raw.parse() {
                Ok(v) => Ok(Some(v)),
                Err(e) => bail!("config key '{key}': {e}"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parses_flat_key_values() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "# comment\nbenchmark = branin-2\niters=50\n\nkappa = 12.5").unwrap();
        let cfg = FileConfig::load(f.path()).unwrap();
        assert_eq!(cfg.get("benchmark"), Some("branin-2"));
        assert_eq!(cfg.parse::<usize>("iters").unwrap(), Some(50));
        assert_eq!(cfg.parse::<f64>("kappa").unwrap(), Some(12.5));
        assert_eq!(cfg.get("missing"), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "benchmark branin-2").unwrap();
        assert!(FileConfig::load(f.path()).is_err());
    }
}
