//! Line-oriented scenario files:
//!
//! ```text
//! # comment
//! [section]
//! key = 1.5
//! key = "text"
//! key = 0.25, 0.5, 1
//! ```
//!
//! Keys are lowercase snake case. Values are numbers, double-quoted
//! strings, or comma-separated lists of those.

use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Str(String),
    List(Vec<Value>),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Number(x) => write!(f, "{x}"),
            Value::Str(s) => write!(f, "\"{s}\""),
            Value::List(v) => {
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key '{k}': {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key '{k}': {}", self.message),
            (None, None) => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ConfigError {
    pub fn new(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            key: None,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: Value,
    pub line: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: BTreeMap<String, Entry>,
}

#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub sections: BTreeMap<String, Section>,
}

fn valid_key(k: &str) -> bool {
    let mut c = k.chars();
    c.next().is_some_and(|c| c.is_ascii_lowercase())
        && k.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Splits on commas outside quotes.
fn split_items(s: &str) -> Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut quoted = false;
    for (i, c) in s.char_indices() {
        match c {
            '"' => quoted = !quoted,
            ',' if !quoted => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if quoted {
        return Err("unterminated string".into());
    }
    out.push(s[start..].trim());
    Ok(out)
}

fn scalar(s: &str) -> Result<Value, String> {
    if let Some(rest) = s.strip_prefix('"') {
        let inner = rest.strip_suffix('"').ok_or("unterminated string")?;
        if inner.contains('"') {
            return Err("stray quote inside string".into());
        }
        return Ok(Value::Str(inner.to_string()));
    }
    if s.is_empty() {
        return Err("empty value".into());
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .map(Value::Number)
        .ok_or_else(|| format!("'{s}' is neither a finite number nor a quoted string"))
}

/// Strips a trailing comment that is not inside a string.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
        let mut cfg = RawConfig::default();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let err = |key: Option<&str>, m: String| ConfigError {
                line: Some(ln),
                key: key.map(str::to_string),
                message: m,
            };
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(None, "section header must end with ']'".into()))?
                    .trim();
                if !valid_key(name) {
                    return Err(err(None, format!("invalid section name '{name}'")));
                }
                if cfg.sections.contains_key(name) {
                    return Err(err(None, format!("duplicate section [{name}]")));
                }
                cfg.sections.insert(
                    name.to_string(),
                    Section {
                        name: name.to_string(),
                        line: ln,
                        entries: BTreeMap::new(),
                    },
                );
                current = Some(name.to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(None, "expected 'key = value' or '[section]'".into()))?;
            let k = k.trim();
            if !valid_key(k) {
                return Err(err(Some(k), "keys are lowercase snake case".into()));
            }
            let section = current
                .as_ref()
                .ok_or_else(|| err(Some(k), "key outside of any section".into()))?;
            let items = split_items(v.trim()).map_err(|m| err(Some(k), m))?;
            let mut vals = items.into_iter().map(scalar).collect::<Result<Vec<_>, _>>().map_err(|m| err(Some(k), m))?;
            let value = if vals.len() == 1 { vals.pop().unwrap() } else { Value::List(vals) };
            let s = cfg.sections.get_mut(section).expect("current section exists");
            if s.entries.insert(k.to_string(), Entry { value, line: ln }).is_some() {
                return Err(err(Some(k), format!("duplicate key in [{section}]")));
            }
        }
        Ok(cfg)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.get(name)
    }

    pub fn require(&self, name: &str) -> Result<&Section, ConfigError> {
        self.section(name).ok_or_else(|| ConfigError {
            line: None,
            key: Some(name.to_string()),
            message: format!("missing section [{name}]"),
        })
    }
}

impl Section {
    fn err(&self, key: &str, message: String) -> ConfigError {
        ConfigError {
            line: Some(self.entries.get(key).map_or(self.line, |e| e.line)),
            key: Some(format!("{}.{key}", self.name)),
            message,
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.get(key).map(|e| &e.value)
    }

    pub fn number(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(x)) => Ok(Some(*x)),
            Some(v) => Err(self.err(key, format!("expected a number, got {v}"))),
        }
    }

    pub fn require_number(&self, key: &str) -> Result<f64, ConfigError> {
        self.number(key)?
            .ok_or_else(|| self.err(key, format!("missing key in [{}]", self.name)))
    }

    pub fn positive(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.number(key)? {
            Some(x) if x <= 0.0 => Err(self.err(key, format!("must be positive, got {x}"))),
            x => Ok(x),
        }
    }

    pub fn count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.number(key)? {
            Some(x) if x >= 1.0 && x.fract() == 0.0 && x < 1e9 => Ok(Some(x as usize)),
            Some(x) => Err(self.err(key, format!("expected a positive integer, got {x}"))),
            None => Ok(None),
        }
    }

    pub fn string(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Str(s)) => Ok(Some(s)),
            Some(v) => Err(self.err(key, format!("expected a quoted string, got {v}"))),
        }
    }

    pub fn require_string(&self, key: &str) -> Result<&str, ConfigError> {
        self.string(key)?
            .ok_or_else(|| self.err(key, format!("missing key in [{}]", self.name)))
    }

    /// A number or a list of numbers.
    pub fn numbers(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Number(x)) => Ok(Some(vec![*x])),
            Some(Value::List(v)) => v
                .iter()
                .map(|x| match x {
                    Value::Number(x) => Ok(*x),
                    other => Err(self.err(key, format!("expected numbers, got {other}"))),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(v) => Err(self.err(key, format!("expected numbers, got {v}"))),
        }
    }

    pub fn strings(&self, key: &str) -> Result<Option<Vec<String>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Str(s)) => Ok(Some(vec![s.clone()])),
            Some(Value::List(v)) => v
                .iter()
                .map(|x| match x {
                    Value::Str(s) => Ok(s.clone()),
                    other => Err(self.err(key, format!("expected quoted strings, got {other}"))),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
            Some(v) => Err(self.err(key, format!("expected quoted strings, got {v}"))),
        }
    }

    pub fn point(&self, key: &str) -> Result<Option<crate::geometry::Point>, ConfigError> {
        match self.numbers(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some(crate::geometry::Point::new(v[0], v[1]))),
            Some(_) => Err(self.err(key, "expected two numbers 'x, y'".into())),
        }
    }

    /// Rejects keys outside `allowed`, naming the first offender.
    pub fn only(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        match self.entries.keys().find(|k| !allowed.contains(&k.as_str())) {
            None => Ok(()),
            Some(k) => Err(self.err(k, format!("unknown key in [{}]; expected one of {}", self.name, allowed.join(", ")))),
        }
    }

    pub fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        self.err(key, message.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_grammar() {
        let c = RawConfig::parse(
            "# scenario\n[domain]\nshape = \"disk\"  # unit\ncenter = 0, -1.5e-1\n\n[solver]\ntau_schedule = 0.5, 1\nnote = \"a # b, c\"\n",
        )
        .unwrap();
        let d = c.section("domain").unwrap();
        assert_eq!(d.string("shape").unwrap(), Some("disk"));
        assert_eq!(d.numbers("center").unwrap(), Some(vec![0.0, -0.15]));
        let s = c.section("solver").unwrap();
        assert_eq!(s.numbers("tau_schedule").unwrap(), Some(vec![0.5, 1.0]));
        assert_eq!(s.string("note").unwrap(), Some("a # b, c"));
    }

    #[test]
    fn errors_name_line_and_key() {
        let e = RawConfig::parse("[grid]\nh = 0.1\nh = 0.2\n").unwrap_err();
        assert_eq!((e.line, e.key.as_deref()), (Some(3), Some("h")));
        let e = RawConfig::parse("[grid]\nSpacing = 1\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = RawConfig::parse("[grid]\nh = fast\n").unwrap_err();
        assert!(e.to_string().contains("line 2") && e.to_string().contains("'h'"));
        let e = RawConfig::parse("h = 1\n").unwrap_err();
        assert!(e.message.contains("outside"));
        let c = RawConfig::parse("[grid]\nh = \"x\"\n").unwrap();
        let e = c.section("grid").unwrap().number("h").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("grid.h"));
        assert!(c.require("domain").unwrap_err().to_string().contains("domain"));
    }
}
