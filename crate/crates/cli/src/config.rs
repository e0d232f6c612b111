//! Experiment configuration: a flat `key = value` file with `[section]`
//! headers, one section per subcommand.
//!
//! ```text
//! # comment
//! [flow]
//! preset = sphere-zeroQ
//! t_end = 1.0
//! ```
//!
//! `#` starts a comment anywhere on a line. Keys are unique within a section. The canonical form lists sections and
//! keys in sorted order, one `key = value` per line, with a blank line
//! between sections; parsing the canonical form reproduces it exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use qflow_core::sphere::{ModeIndex, Part, SpectralField};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Section = BTreeMap<String, String>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    sections: BTreeMap<String, Section>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split_once('#').map_or(raw, |(code, _)| code).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !valid_name(name) {
                    return Err(ConfigError(format!("line {ln}: bad section name '{name}'")));
                }
                sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("line {ln}: expected 'key = value'")))?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_name(k) {
                return Err(ConfigError(format!("line {ln}: bad key '{k}'")));
            }
            let section = current
                .as_ref()
                .ok_or_else(|| ConfigError(format!("line {ln}: key '{k}' outside any section")))?;
            let entries = sections.get_mut(section).expect("section exists");
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                return Err(ConfigError(format!("line {ln}: duplicate key '{k}' in [{section}]")));
            }
        }
        Ok(Self { sections })
    }

    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (i, (name, entries)) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            out.push_str(&format!("[{name}]\n"));
            for (k, v) in entries {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    pub fn section(&self, name: &str) -> SectionView<'_> {
        SectionView { name: name.to_string(), entries: self.sections.get(name) }
    }
}

/// Typed read access to one section.
pub struct SectionView<'a> {
    name: String,
    entries: Option<&'a Section>,
}

impl SectionView<'_> {
    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.and_then(|e| e.get(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| ConfigError(format!("[{}] {key} = {v}: {e}", self.name))),
        }
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse().map_err(|e| ConfigError(format!("[{}] {key} = {v}: {e}", self.name))))
            .transpose()
    }

    pub fn list_f64(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, ConfigError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| ConfigError(format!("[{}] {key}: '{s}': {e}", self.name))))
                .collect(),
        }
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        if let Some(entries) = self.entries {
            if let Some(k) = entries.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(ConfigError(format!(
                    "unknown key '{k}' in [{}]; expected one of: {}",
                    self.name,
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }
}

/// `p q m part coeff` entries separated by `;`, or `zero`.
pub fn parse_field(spec: &str, n: usize) -> Result<SpectralField, ConfigError> {
    let mut f = SpectralField::zeros(n);
    let spec = spec.trim();
    if spec.is_empty() || spec == "zero" {
        return Ok(f);
    }
    for entry in spec.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let w: Vec<&str> = entry.split_whitespace().collect();
        if w.len() != 5 {
            return Err(ConfigError(format!("mode entry '{entry}' needs 'p q m part coeff'")));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| ConfigError(format!("'{s}' in '{entry}': {e}")));
        let (p, q, m) = (int(w[0])?, int(w[1])?, int(w[2])?);
        let part: Part = w[3].parse().map_err(|e: String| ConfigError(format!("'{entry}': {e}")))?;
        let c: f64 = w[4].parse().map_err(|e| ConfigError(format!("'{}' in '{entry}': {e}", w[4])))?;
        let mode = ModeIndex::new(p, q, m, part)
            .ok_or_else(|| ConfigError(format!("'{entry}' is not a mode (need p >= q, m <= p+q, p = q only plus)")))?;
        if mode.degree() > n {
            return Err(ConfigError(format!("'{entry}' has degree {} above N = {n}", mode.degree())));
        }
        if f.get(&mode) != 0.0 {
            return Err(ConfigError(format!("mode {mode} given twice")));
        }
        f.set(&mode, c);
    }
    Ok(f)
}

/// Named flow scenarios: `(q0, lambda0)` specs.
pub fn flow_preset(name: &str) -> Result<(&'static str, &'static str), ConfigError> {
    match name {
        "zero" => Ok(("zero", "zero")),
        "sphere-zeroQ" => Ok(("zero", "1 1 0 plus 0.05; 2 1 0 plus 0.03; 2 1 3 minus -0.02; 2 2 1 plus 0.01; 1 0 1 minus 0.04")),
        "kernel-drift" => Ok(("1 0 0 plus 0.4; 2 0 1 minus -0.2; 1 1 0 plus 0.3", "1 1 0 plus 0.05; 2 1 0 plus 0.02")),
        "perp-Q" => Ok(("1 1 0 plus 0.3; 2 1 1 minus -0.2; 3 3 2 plus 0.1", "1 1 0 plus 0.05; 3 0 2 plus 0.03")),
        other => Err(ConfigError(format!(
            "unknown preset '{other}'; expected zero, sphere-zeroQ, kernel-drift or perp-Q"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# experiment\n[verify]\nseed = 3\n  n=6 \n\n[flow]\npreset = sphere-zeroQ\nq0 = 1 1 0 plus 0.5; 2 0 1 minus 0.1\n";

    #[test]
    fn canonical_round_trip() {
        let c = Config::parse(SAMPLE).unwrap();
        let text = c.canonical();
        assert_eq!(
            text,
            "[flow]\npreset = sphere-zeroQ\nq0 = 1 1 0 plus 0.5; 2 0 1 minus 0.1\n\n[verify]\nn = 6\nseed = 3\n"
        );
        let again = Config::parse(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.canonical(), text);
    }

    #[test]
    fn parse_errors() {
        assert!(Config::parse("seed = 1").is_err());
        assert!(Config::parse("[a]\nx = 1\nx = 2").is_err());
        assert!(Config::parse("[a b]").is_err());
        assert!(Config::parse("[a]\njunk").is_err());
        assert_eq!(Config::parse("").unwrap().canonical(), "");
        let c = Config::parse("[a] # note\nx = 1 # trailing\n").unwrap();
        assert_eq!(c.canonical(), "[a]\nx = 1\n");
    }

    #[test]
    fn typed_access() {
        let c = Config::parse(SAMPLE).unwrap();
        let v = c.section("verify");
        assert_eq!(v.get("seed", 0u64).unwrap(), 3);
        assert_eq!(v.get("fields", 100usize).unwrap(), 100);
        assert!(v.check_keys(&["seed", "n"]).is_ok());
        assert!(v.check_keys(&["seed"]).is_err());
        let bad = Config::parse("[x]\nt = abc").unwrap();
        assert!(bad.section("x").get("t", 1.0f64).is_err());
        assert_eq!(c.section("missing").get("t", 2.5f64).unwrap(), 2.5);
    }

    #[test]
    fn field_specs() {
        let f = parse_field("1 1 0 plus 0.5; 2 0 1 minus -0.1", 3).unwrap();
        assert_eq!(f.get(&ModeIndex::new(1, 1, 0, Part::Plus).unwrap()), 0.5);
        assert_eq!(f.get(&ModeIndex::new(2, 0, 1, Part::Minus).unwrap()), -0.1);
        assert_eq!(parse_field("zero", 2).unwrap().norm(), 0.0);
        assert!(parse_field("1 1 0 minus 0.5", 3).is_err());
        assert!(parse_field("4 0 0 plus 1", 3).is_err());
        assert!(parse_field("1 0 0 plus", 3).is_err());
        assert!(parse_field("1 0 0 plus 1; 1 0 0 plus 2", 3).is_err());
        for name in ["zero", "sphere-zeroQ", "kernel-drift", "perp-Q"] {
            let (q, l) = flow_preset(name).unwrap();
            parse_field(q, 6).unwrap();
            parse_field(l, 6).unwrap();
        }
    }
}
