//! Flat `key = value` config files with one section per subcommand,
//! mirrored 1:1 by the command-line flags; flags win on conflict. Unknown
//! keys are rejected before any computation runs.

use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::from("global");
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if line.starts_with('[') {
                let name = line
                    .strip_prefix('[')
                    .and_then(|s| s.strip_suffix(']'))
                    .ok_or_else(|| format!("line {}: malformed section header", lineno + 1))?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { sections })
    }

    /// Section view for one command; keys are consumed by the command and
    /// leftovers are reported as unknown.
    pub fn section(&self, name: &str) -> SectionView {
        SectionView {
            map: self.sections.get(name).cloned().unwrap_or_default(),
            section: name.to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SectionView {
    map: BTreeMap<String, String>,
    section: String,
}

impl SectionView {
    pub fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        match self.map.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|e| format!("config [{}] {key} = {v}: {e}", self.section)),
        }
    }

    /// Fails if any keys were not consumed by the command.
    pub fn finish(self) -> Result<(), String> {
        if self.map.is_empty() {
            Ok(())
        } else {
            let keys: Vec<&str> = self.map.keys().map(String::as_str).collect();
            Err(format!(
                "unknown keys in config section [{}]: {}",
                self.section,
                keys.join(", ")
            ))
        }
    }
}
