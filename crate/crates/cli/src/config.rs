//! Flat `key = value` files with dotted keys.
//!
//! Blank lines are skipped and `#` starts a comment anywhere on a line.
//! Keys are made of lowercase letters, digits and `_`, joined by `.`, and a
//! segment may carry an index such as `pieces[1]`.

use std::collections::BTreeMap;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("missing required field `{field}`")]
    Missing { field: String },

    #[error("line {line}: field `{field}`: {message}")]
    Invalid {
        line: usize,
        field: String,
        message: String,
    },

    #[error("line {line}: unknown field `{field}`")]
    Unknown { line: usize, field: String },
}

impl ConfigError {
    /// The field the error is about, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::Missing { field }
            | ConfigError::Invalid { field, .. }
            | ConfigError::Unknown { field, .. } => Some(field),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

/// Parsed but untyped configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("expected `key = value`, got `{content}`"),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            if !valid_key(key) {
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("malformed key `{key}`"),
                });
            }
            if value.is_empty() {
                return Err(ConfigError::Invalid {
                    line,
                    field: key.to_string(),
                    message: "empty value".into(),
                });
            }
            if let Some(prev) = entries.get(key) {
                let prev: &Entry = prev;
                return Err(ConfigError::Syntax {
                    line,
                    message: format!("duplicate key `{key}` (first set on line {})", prev.line),
                });
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Entry)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), e))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.split('.').all(|segment| {
            let (name, index) = match segment.split_once('[') {
                Some((name, rest)) => match rest.strip_suffix(']') {
                    Some(idx) => (name, Some(idx)),
                    None => return false,
                },
                None => (segment, None),
            };
            !name.is_empty()
                && name
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
                && index.is_none_or(|i| !i.is_empty() && i.chars().all(|c| c.is_ascii_digit()))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_and_comments() {
        let raw = RawConfig::parse("# header\n\nname = coin  # trailing\ncurve.pieces[0].eps_expr = 0.1*t\n").unwrap();
        assert_eq!(raw.len(), 2);
        assert_eq!(
            raw.get("name").unwrap(),
            &Entry {
                value: "coin".into(),
                line: 3
            }
        );
        assert_eq!(raw.get("curve.pieces[0].eps_expr").unwrap().value, "0.1*t");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(
            RawConfig::parse("a = 1\nnonsense\n"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            RawConfig::parse("A.b = 1"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(RawConfig::parse("a[x] = 1"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(RawConfig::parse("a. = 1"), Err(ConfigError::Syntax { .. })));
        assert!(matches!(
            RawConfig::parse("a = 1\na = 2"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        let err = RawConfig::parse("\nrun.seed =\n").unwrap_err();
        assert_eq!(err.field(), Some("run.seed"));
        assert!(err.to_string().starts_with("line 2:"));
    }
}
