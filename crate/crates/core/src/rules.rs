//! Line-oriented constraint files.
//!
//! ```text
//! # comments and blank lines are ignored
//! sections entrance,counter,cooler,s3
//! capacity 2
//! must "white wine" "specialty chocolate"
//! cannot milk bread
//! allow "shopping bags" entrance,counter
//! ```
//!
//! Items are resolved against a catalog of names, or read as object indices
//! when no catalog is given. Sections are resolved against the `sections`
//! line, or read as partition indices when there is none. Tokens containing
//! spaces are double-quoted. A single `capacity` value applies to every
//! section.

use std::fmt::Write as _;
use std::path::Path;

use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::partition::PartitionSpec;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    Must(String, String),
    Cannot(String, String),
    Allow(String, Vec<String>),
}

/// A parsed but unresolved constraint file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleFile {
    pub sections: Option<Vec<String>>,
    pub capacities: Option<Vec<usize>>,
    pub rules: Vec<Rule>,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<String>> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut tok = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(ch) => tok.push(ch),
                    None => return Err(Error::Parse { line: lineno, message: "unterminated quote".into() }),
                }
            }
            tokens.push(tok);
        } else {
            let mut tok = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                tok.push(ch);
                chars.next();
            }
            tokens.push(tok);
        }
    }
    Ok(tokens)
}

/// Splits a comma-separated list, honoring quotes around entries.
fn split_list(text: &str, lineno: usize) -> Result<Vec<String>> {
    let parts: Vec<String> = text
        .split(',')
        .map(|s| s.trim().trim_matches('"').to_string())
        .collect();
    if parts.iter().any(String::is_empty) {
        return Err(Error::Parse { line: lineno, message: "empty entry in list".into() });
    }
    Ok(parts)
}

fn quote(s: &str) -> String {
    if s.contains(char::is_whitespace) || s.is_empty() {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

impl RuleFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut file = RuleFile::default();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (keyword, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            let bad = |message: &str| Error::Parse { line: lineno, message: message.to_string() };
            match keyword {
                "must" | "cannot" => {
                    let toks = tokenize(rest, lineno)?;
                    if toks.len() != 2 {
                        return Err(bad(&format!("`{keyword}` takes two items")));
                    }
                    let (a, b) = (toks[0].clone(), toks[1].clone());
                    file.rules.push(if keyword == "must" { Rule::Must(a, b) } else { Rule::Cannot(a, b) });
                }
                "allow" => {
                    let toks = tokenize(rest, lineno)?;
                    let item = toks.first().ok_or_else(|| bad("`allow` needs an item"))?.clone();
                    // everything after the item token is the section list
                    let after = if let Some(quoted) = rest.strip_prefix('"') {
                        quoted.split_once('"').map(|x| x.1).unwrap_or("")
                    } else {
                        rest.split_once(char::is_whitespace).map(|x| x.1).unwrap_or("")
                    };
                    if after.trim().is_empty() {
                        return Err(bad("`allow` needs at least one section"));
                    }
                    file.rules.push(Rule::Allow(item, split_list(after, lineno)?));
                }
                "sections" => {
                    if file.sections.is_some() {
                        return Err(bad("duplicate `sections` line"));
                    }
                    file.sections = Some(split_list(rest, lineno)?);
                }
                "capacity" => {
                    if file.capacities.is_some() {
                        return Err(bad("duplicate `capacity` line"));
                    }
                    let caps = split_list(rest, lineno)?
                        .iter()
                        .map(|s| s.parse::<usize>().map_err(|_| bad(&format!("invalid capacity `{s}`"))))
                        .collect::<Result<Vec<_>>>()?;
                    file.capacities = Some(caps);
                }
                other => return Err(bad(&format!("unknown keyword `{other}`"))),
            }
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Partition spec declared by the `sections` / `capacity` lines, if any.
    pub fn spec(&self) -> Result<Option<PartitionSpec>> {
        let Some(caps) = &self.capacities else { return Ok(None) };
        let caps = match (&self.sections, caps.as_slice()) {
            (Some(names), [c]) => vec![*c; names.len()],
            (Some(names), caps) if caps.len() != names.len() => {
                return Err(Error::Config(format!(
                    "{} capacities for {} sections",
                    caps.len(),
                    names.len()
                )))
            }
            (_, caps) => caps.to_vec(),
        };
        PartitionSpec::new(caps).map(Some)
    }

    /// Resolves names to indices. Without a catalog, items must be indices.
    pub fn resolve(&self, catalog: Option<&[String]>) -> Result<ConstraintSet> {
        let item = |name: &str| -> Result<usize> {
            match catalog {
                Some(names) => names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownItem(name.to_string())),
                None => name.parse().map_err(|_| Error::UnknownItem(name.to_string())),
            }
        };
        let section = |name: &str| -> Result<usize> {
            match &self.sections {
                Some(names) => {
                    names.iter().position(|n| n == name).ok_or_else(|| Error::UnknownSection(name.to_string()))
                }
                None => name.parse().map_err(|_| Error::UnknownSection(name.to_string())),
            }
        };
        let mut cons = ConstraintSet::new();
        for rule in &self.rules {
            cons = match rule {
                Rule::Must(a, b) => cons.must(item(a)?, item(b)?),
                Rule::Cannot(a, b) => cons.cannot(item(a)?, item(b)?),
                Rule::Allow(a, secs) => {
                    let secs = secs.iter().map(|s| section(s)).collect::<Result<Vec<_>>>()?;
                    cons.allow(item(a)?, secs)
                }
            };
        }
        Ok(cons)
    }

    /// Renders the file back to text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(s) = &self.sections {
            let _ = writeln!(out, "sections {}", s.join(","));
        }
        if let Some(c) = &self.capacities {
            let c: Vec<String> = c.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "capacity {}", c.join(","));
        }
        for rule in &self.rules {
            let _ = match rule {
                Rule::Must(a, b) => writeln!(out, "must {} {}", quote(a), quote(b)),
                Rule::Cannot(a, b) => writeln!(out, "cannot {} {}", quote(a), quote(b)),
                Rule::Allow(a, s) => writeln!(out, "allow {} {}", quote(a), s.join(",")),
            };
        }
        out
    }
}

/// Reads a constraint file whose items are object indices.
pub fn load_constraints(path: impl AsRef<Path>) -> Result<(Option<PartitionSpec>, ConstraintSet)> {
    let file = RuleFile::load(path)?;
    Ok((file.spec()?, file.resolve(None)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# warehouse
sections entrance,counter,cooler
capacity 2
must \"white wine\" \"specialty chocolate\"
cannot milk bread   # trailing comment
allow \"shopping bags\" entrance, counter
allow yogurt cooler
";

    fn catalog() -> Vec<String> {
        ["white wine", "specialty chocolate", "milk", "bread", "shopping bags", "yogurt"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn parses_and_resolves_names() {
        let file = RuleFile::parse(SAMPLE).unwrap();
        assert_eq!(file.spec().unwrap().unwrap().capacities(), &[2, 2, 2]);
        let cons = file.resolve(Some(&catalog())).unwrap();
        assert!(cons.must_link.contains(&(0, 1)));
        assert!(cons.cannot_link.contains(&(2, 3)));
        assert_eq!(cons.allowed[&4].iter().copied().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(cons.allowed[&5].iter().copied().collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn render_round_trips() {
        let file = RuleFile::parse(SAMPLE).unwrap();
        assert_eq!(RuleFile::parse(&file.render()).unwrap(), file);
    }

    #[test]
    fn indices_without_catalog() {
        let cons = RuleFile::parse("must 0 3\nallow 2 1,0").unwrap().resolve(None).unwrap();
        assert!(cons.must_link.contains(&(0, 3)));
        assert_eq!(cons.allowed[&2].len(), 2);
    }

    #[test]
    fn errors_name_the_problem() {
        assert!(matches!(RuleFile::parse("must a"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(RuleFile::parse("\nfoo a b"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(RuleFile::parse("allow x a,,b"), Err(Error::Parse { .. })));
        let file = RuleFile::parse(SAMPLE).unwrap();
        let mut small = catalog();
        small.pop();
        assert!(matches!(file.resolve(Some(&small)), Err(Error::UnknownItem(s)) if s == "yogurt"));
        let file = RuleFile::parse("sections a,b\nallow 0 c").unwrap();
        assert!(matches!(file.resolve(None), Err(Error::UnknownSection(s)) if s == "c"));
    }
}
