//! Flat `key = value` text with `[section]` headers.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are unique per
//! section; sections may not repeat. Every error carries its 1-based line.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl ConfigError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

impl Entry {
    pub fn parse<T: std::str::FromStr>(&self) -> Result<T, ConfigError> {
        self.value.parse().map_err(|_| {
            ConfigError::at(
                self.line,
                format!("cannot parse '{}' for key '{}'", self.value, self.key),
            )
        })
    }

    /// Whitespace- or comma-separated floats.
    pub fn floats(&self) -> Result<Vec<f64>, ConfigError> {
        self.value
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>().map_err(|_| {
                    ConfigError::at(self.line, format!("'{s}' is not a number (key '{}')", self.key))
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            line: 0,
            entries: Vec::new(),
        }
    }

    /// Appends or replaces `key`.
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        if let Some(e) = self.entries.iter_mut().find(|e| e.key == key) {
            e.value = value;
        } else {
            self.entries.push(Entry {
                key,
                value,
                line: 0,
            });
        }
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn require(&self, key: &str) -> Result<&Entry, ConfigError> {
        self.get(key).ok_or_else(|| {
            ConfigError::at(
                self.line,
                format!("section [{}] is missing key '{key}'", self.name),
            )
        })
    }

    pub fn float(&self, key: &str) -> Result<f64, ConfigError> {
        self.require(key)?.parse()
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        self.require(key)?.floats()
    }

    /// Exactly `N` floats.
    pub fn floats_exact<const N: usize>(&self, key: &str) -> Result<[f64; N], ConfigError> {
        let e = self.require(key)?;
        let v = e.floats()?;
        v.as_slice().try_into().map_err(|_| {
            ConfigError::at(e.line, format!("key '{key}' needs {N} values, got {}", v.len()))
        })
    }

    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.get(key) {
            Some(e) => e.parse(),
            None => Ok(default),
        }
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for e in &self.entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(ConfigError::at(
                    e.line,
                    format!("unknown key '{}' in section [{}]", e.key, self.name),
                ));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}]", self.name)?;
        for e in &self.entries {
            writeln!(f, "{} = {}", e.key, e.value)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigDoc {
    pub sections: Vec<Section>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = ConfigDoc::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::at(line, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(ConfigError::at(line, "empty section name"));
                }
                if doc.section(name).is_some() {
                    return Err(ConfigError::at(line, format!("duplicate section [{name}]")));
                }
                doc.sections.push(Section {
                    name: name.to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, format!("expected 'key = value', got '{s}'")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::at(line, "empty key"));
            }
            let section = doc
                .sections
                .last_mut()
                .ok_or_else(|| ConfigError::at(line, "key outside of any [section]"))?;
            if section.get(key).is_some() {
                return Err(ConfigError::at(
                    line,
                    format!("duplicate key '{key}' in [{}]", section.name),
                ));
            }
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        Ok(doc)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    pub fn section_mut(&mut self, name: &str) -> &mut Section {
        if let Some(i) = self.sections.iter().position(|s| s.name == name) {
            &mut self.sections[i]
        } else {
            self.sections.push(Section::new(name));
            self.sections.last_mut().unwrap()
        }
    }

    pub fn require(&self, name: &str) -> Result<&Section, ConfigError> {
        self.section(name)
            .ok_or_else(|| ConfigError::at(0, format!("missing section [{name}]")))
    }
}

impl fmt::Display for ConfigDoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_values() {
        let doc = ConfigDoc::parse("# c\n[a]\nx = 1.5\ny = 1, 2 3\n\n[b]\nname = wall\n").unwrap();
        let a = doc.section("a").unwrap();
        assert_eq!(a.float("x").unwrap(), 1.5);
        assert_eq!(a.floats("y").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(doc.section("b").unwrap().require("name").unwrap().value, "wall");
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ConfigDoc::parse("[a]\nx = 1\nbogus line\n").unwrap_err();
        assert_eq!(err.line, 3);
        let err = ConfigDoc::parse("x = 1\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = ConfigDoc::parse("[a]\nx = 1\nx = 2\n").unwrap_err();
        assert_eq!(err.line, 3);
        let doc = ConfigDoc::parse("[a]\n\nx = nope\n").unwrap();
        assert_eq!(doc.section("a").unwrap().float("x").unwrap_err().line, 3);
        let err = doc.section("a").unwrap().check_keys(&["y"]).unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn display_round_trips() {
        let text = "[a]\nx = 1\n\n[b]\ny = 2 3\n";
        let doc = ConfigDoc::parse(text).unwrap();
        assert_eq!(doc.to_string(), text);
    }
}
