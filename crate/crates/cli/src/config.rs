//! TOML experiment files: loading into a [`Setup`] and mapping diagnostics
//! back to source lines.

use std::fmt;
use std::path::Path;

use combsense::scenario::{Diagnostic, Setup};

/// Configuration shipped with the binary; mirrors `Setup::default()`.
pub const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

/// A problem found in a configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Located {
    /// 1-based; `None` when the offending value was left at its default.
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub path: Option<String>,
    pub message: String,
}

impl fmt::Display for Located {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{l}:{c}: ")?,
            (Some(l), None) => write!(f, "{l}: ")?,
            _ => {}
        }
        match &self.path {
            Some(p) => write!(f, "{p}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Outcome of reading a configuration: the setup if it parsed, and every
/// problem found.
#[derive(Debug)]
pub struct Loaded {
    pub setup: Option<Setup>,
    pub problems: Vec<Located>,
}

impl Loaded {
    pub fn is_valid(&self) -> bool {
        self.setup.is_some() && self.problems.is_empty()
    }
}

pub fn parse(source: &str) -> Loaded {
    match toml::from_str::<Setup>(source) {
        Err(e) => {
            let (line, column) = match e.span() {
                Some(span) => {
                    let (l, c) = line_col(source, span.start);
                    (Some(l), Some(c))
                }
                None => (None, None),
            };
            Loaded {
                setup: None,
                problems: vec![Located {
                    line,
                    column,
                    path: None,
                    message: e.message().trim().to_string(),
                }],
            }
        }
        Ok(setup) => {
            let problems = setup
                .diagnostics()
                .into_iter()
                .map(|d| locate(source, d))
                .collect();
            Loaded {
                setup: Some(setup),
                problems,
            }
        }
    }
}

pub fn load(path: &Path) -> anyhow::Result<(String, Loaded)> {
    let source = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let loaded = parse(&source);
    Ok((source, loaded))
}

fn line_col(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

fn locate(source: &str, d: Diagnostic) -> Located {
    let line = find_key_line(source, &d.path);
    Located {
        line,
        column: None,
        path: Some(d.path),
        message: d.message,
    }
}

fn unquote(s: &str) -> String {
    s.split('.')
        .map(|p| p.trim().trim_matches('"').trim_matches('\''))
        .collect::<Vec<_>>()
        .join(".")
}

/// Line of the key addressed by a dotted diagnostic path such as
/// `squeezer.ladder[1].squeezing_db`. Falls back to the closest enclosing
/// table or key when the value itself is not spelled out.
pub fn find_key_line(source: &str, path: &str) -> Option<usize> {
    let mut table = String::new();
    let mut counts: std::collections::HashMap<String, usize> = Default::default();
    let mut best: Option<(usize, usize)> = None;
    let consider = |key: &str, line: usize, best: &mut Option<(usize, usize)>| {
        let matched = if key == path {
            usize::MAX
        } else if path.starts_with(key)
            && matches!(path.as_bytes().get(key.len()), Some(b'.') | Some(b'['))
        {
            key.len()
        } else {
            return;
        };
        if best.is_none_or(|(m, _)| matched > m) {
            *best = Some((matched, line));
        }
    };
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let t = raw.split('#').next().unwrap_or("").trim();
        if let Some(h) = t.strip_prefix("[[").and_then(|s| s.strip_suffix("]]")) {
            let name = unquote(h);
            let k = counts.entry(name.clone()).or_insert(0);
            table = format!("{name}[{k}]");
            *k += 1;
            consider(&table, line, &mut best);
        } else if let Some(h) = t.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            table = unquote(h);
            consider(&table, line, &mut best);
        } else if let Some((k, _)) = t.split_once('=') {
            let k = unquote(k);
            if k.is_empty() || k.contains(|c: char| c.is_whitespace() || c == '{') {
                continue;
            }
            let full = if table.is_empty() { k } else { format!("{table}.{k}") };
            consider(&full, line, &mut best);
        }
    }
    best.map(|(_, l)| l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_is_the_default_setup() {
        let loaded = parse(DEFAULT_CONFIG);
        assert!(loaded.problems.is_empty(), "{:?}", loaded.problems);
        assert_eq!(loaded.setup.unwrap(), Setup::default());
    }

    #[test]
    fn keys_are_found_in_tables_and_array_tables() {
        let src = "[dsp]\nraw_rate = 2e6\n\n[[squeezer.ladder]]\norder = 0\n[[squeezer.ladder]]\norder = 1\nsqueezing_db = 3\n";
        assert_eq!(find_key_line(src, "dsp.raw_rate"), Some(2));
        assert_eq!(find_key_line(src, "squeezer.ladder[1].squeezing_db"), Some(8));
        // defaulted value: point at the entry
        assert_eq!(find_key_line(src, "squeezer.ladder[0].squeezing_db"), Some(4));
        assert_eq!(find_key_line(src, "dsp.n_output"), Some(1));
        assert_eq!(find_key_line(src, "run.trials"), None);
    }

    #[test]
    fn parse_errors_carry_a_location() {
        let loaded = parse("[dsp]\nraw_rate = 2e6\nbogus = 1\n");
        let p = &loaded.problems[0];
        assert!(loaded.setup.is_none());
        assert_eq!(p.line, Some(3), "{p}");
        assert!(p.message.contains("bogus"), "{p}");
    }
}
