use std::fmt::Write as _;
use std::path::Path;

use super::{EnvError, OBS_BYTES};

/// Disjoint byte-index pairs exchanged to turn player 2's view into a
/// player-1 view.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotationMap {
    pairs: Vec<(u8, u8)>,
}

impl AnnotationMap {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(pairs: Vec<(u8, u8)>) -> Result<Self, EnvError> {
        let mut seen = [false; OBS_BYTES];
        for &(i, j) in &pairs {
            for k in [i, j] {
                if k as usize >= OBS_BYTES {
                    return Err(EnvError::Annotation(format!("index {k} out of range")));
                }
            }
            if i == j {
                return Err(EnvError::Annotation(format!("pair ({i}, {j}) swaps a byte with itself")));
            }
            for k in [i, j] {
                if std::mem::replace(&mut seen[k as usize], true) {
                    return Err(EnvError::Annotation(format!("index {k} appears twice")));
                }
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(u8, u8)] {
        &self.pairs
    }

    /// Parses one `i j` pair per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, EnvError> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<u8>().map_err(|_| {
                    EnvError::Annotation(format!("line {}: '{s}' is not a byte index", lineno + 1))
                })
            };
            match fields.as_slice() {
                [i, j] => pairs.push((parse(i)?, parse(j)?)),
                _ => {
                    return Err(EnvError::Annotation(format!(
                        "line {}: expected two indices",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(pairs)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# byte pairs swapped for player 2\n");
        for (i, j) in &self.pairs {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self, EnvError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), EnvError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}
