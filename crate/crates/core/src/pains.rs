//! Named pattern sets loaded from `name<TAB>smarts` text assets.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::smarts::{parse_pattern, Pattern, PatternError};

/// Environment variable naming a directory that overrides the bundled assets.
pub const PATTERN_DIR_ENV: &str = "BXAIC_PATTERN_DIR";
pub const PAINS_FILE: &str = "pains.txt";
pub const BUNDLED_PAINS: &str = include_str!("../assets/pains.txt");

#[derive(Debug, Error)]
pub enum PatternSetError {
    #[error("line {line}: expected 'name<TAB>smarts'")]
    Malformed { line: usize },
    #[error("line {line}: pattern '{name}': {source}")]
    Pattern {
        line: usize,
        name: String,
        source: PatternError,
    },
    #[error("line {line}: duplicate pattern name '{name}'")]
    DuplicateName { line: usize, name: String },
    #[error("pattern set is empty")]
    Empty,
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct NamedPattern {
    pub name: String,
    pub pattern: Pattern,
}

#[derive(Debug, Clone)]
pub struct PatternSet {
    /// Value of a `# format_version=N` header line, if present.
    pub format_version: Option<u32>,
    pub patterns: Vec<NamedPattern>,
}

impl PatternSet {
    pub fn parse(text: &str) -> Result<PatternSet, PatternSetError> {
        let mut format_version = None;
        let mut patterns: Vec<NamedPattern> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("format_version=") {
                    format_version = v.trim().parse().ok();
                }
                continue;
            }
            let Some((name, smarts)) = trimmed.split_once('\t') else {
                return Err(PatternSetError::Malformed { line });
            };
            let (name, smarts) = (name.trim(), smarts.trim());
            if name.is_empty() || smarts.is_empty() {
                return Err(PatternSetError::Malformed { line });
            }
            if patterns.iter().any(|p| p.name == name) {
                return Err(PatternSetError::DuplicateName {
                    line,
                    name: name.to_string(),
                });
            }
            let pattern = parse_pattern(smarts).map_err(|source| PatternSetError::Pattern {
                line,
                name: name.to_string(),
                source,
            })?;
            patterns.push(NamedPattern {
                name: name.to_string(),
                pattern,
            });
        }
        if patterns.is_empty() {
            return Err(PatternSetError::Empty);
        }
        Ok(PatternSet {
            format_version,
            patterns,
        })
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

/// The PAINS alerts compiled into the crate.
pub fn bundled_pains() -> PatternSet {
    PatternSet::parse(BUNDLED_PAINS).expect("bundled PAINS asset parses")
}

/// Reads `pains.txt` from `dir`.
pub fn load_pains_from(dir: &Path) -> Result<PatternSet, PatternSetError> {
    let path = dir.join(PAINS_FILE);
    let text = fs::read_to_string(&path).map_err(|source| PatternSetError::Io {
        path: path.clone(),
        source,
    })?;
    PatternSet::parse(&text)
}

/// PAINS alerts from `$BXAIC_PATTERN_DIR/pains.txt` when the variable is set,
/// otherwise the bundled list.
pub fn load_pains() -> Result<PatternSet, PatternSetError> {
    match std::env::var_os(PATTERN_DIR_ENV) {
        Some(dir) if !dir.is_empty() => {
            log::info!("loading PAINS patterns from {}", Path::new(&dir).display());
            load_pains_from(Path::new(&dir))
        }
        _ => Ok(bundled_pains()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_asset() {
        let set = bundled_pains();
        assert_eq!(set.len(), 30);
        assert_eq!(set.format_version, Some(1));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = PatternSet::parse("# c\nok\tCC\nbad CC\n").unwrap_err();
        assert!(matches!(err, PatternSetError::Malformed { line: 3 }));
        let err = PatternSet::parse("a\tCC\nb\t$([#6])\n").unwrap_err();
        assert!(matches!(err, PatternSetError::Pattern { line: 2, .. }));
        let err = PatternSet::parse("a\tCC\na\tCO\n").unwrap_err();
        assert!(matches!(
            err,
            PatternSetError::DuplicateName { line: 2, .. }
        ));
        assert!(matches!(
            PatternSet::parse("# nothing\n"),
            Err(PatternSetError::Empty)
        ));
    }

    #[test]
    fn directory_override() {
        let dir = std::env::temp_dir().join(format!("bxaic-pains-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        fs::write(dir.join(PAINS_FILE), "nitro\t[N+](=O)[O-]\n").unwrap();
        let set = load_pains_from(&dir).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.patterns[0].name, "nitro");
        fs::remove_dir_all(&dir).unwrap();
    }
}
