// SPDX-License-Identifier: Apache-2.0

//! Minimal unified-diff reader and declaration-pattern extraction.
//!
//! Only what toggle extraction needs is modelled: file headers, hunk
//! headers with their line counts, and `+`/`-`/` ` body lines. Lines outside
//! a hunk are never treated as content, so `--- a/...` and `+++ b/...`
//! headers can not be mistaken for removals or additions.

use regex::Regex;

use crate::error::{Error, Result};
use crate::ledger::Action;

/// A `+` or `-` body line inside a hunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangedLine<'a> {
    pub action: Action,
    /// Line text without the leading marker.
    pub content: &'a str,
    /// Post-image path of the file (pre-image path for deletions).
    pub path: Option<&'a str>,
}

#[derive(Debug, Default)]
pub struct ParsedDiff<'a> {
    pub lines: Vec<ChangedLine<'a>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct HunkBudget {
    old: u64,
    new: u64,
}

impl HunkBudget {
    fn exhausted(&self) -> bool {
        self.old == 0 && self.new == 0
    }
}

/// Parses `@@ -a,b +c,d @@` and returns `(b, d)`; a missing count means 1.
fn parse_hunk_header(line: &str) -> Option<HunkBudget> {
    let rest = line.strip_prefix("@@ ")?;
    let end = rest.find(" @@")?;
    let mut parts = rest[..end].split_whitespace();
    let old = parts.next()?.strip_prefix('-')?;
    let new = parts.next()?.strip_prefix('+')?;
    let count = |range: &str| -> Option<u64> {
        match range.split_once(',') {
            Some((start, len)) => {
                start.parse::<u64>().ok()?;
                len.parse().ok()
            }
            None => range.parse::<u64>().ok().map(|_| 1),
        }
    };
    Some(HunkBudget {
        old: count(old)?,
        new: count(new)?,
    })
}

fn header_path(rest: &str) -> Option<&str> {
    let rest = rest.split('\t').next().unwrap_or(rest).trim_end();
    if rest == "/dev/null" {
        return None;
    }
    Some(
        rest.strip_prefix("a/")
            .or_else(|| rest.strip_prefix("b/"))
            .unwrap_or(rest),
    )
}

/// Collects changed lines from a unified diff.
///
/// Hunk bodies are consumed according to the counts in their `@@` header.
/// A body line with an unexpected prefix ends the hunk early and produces a
/// warning; parsing continues with the next header.
pub fn parse_unified_diff(text: &str) -> ParsedDiff<'_> {
    let mut out = ParsedDiff::default();
    let mut old_path: Option<&str> = None;
    let mut new_path: Option<&str> = None;
    let mut hunk: Option<HunkBudget> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);

        if let Some(budget) = hunk.as_mut() {
            let marker = line.as_bytes().first().copied();
            match marker {
                Some(b'+') if budget.new > 0 => {
                    budget.new -= 1;
                    out.lines.push(ChangedLine {
                        action: Action::Added,
                        content: &line[1..],
                        path: new_path.or(old_path),
                    });
                }
                Some(b'-') if budget.old > 0 => {
                    budget.old -= 1;
                    out.lines.push(ChangedLine {
                        action: Action::Removed,
                        content: &line[1..],
                        path: old_path.or(new_path),
                    });
                }
                Some(b' ') | None if budget.old > 0 && budget.new > 0 => {
                    budget.old -= 1;
                    budget.new -= 1;
                }
                Some(b'\\') => {}
                _ => {
                    out.warnings.push(format!(
                        "diff line {}: hunk ended early or body line malformed",
                        idx + 1
                    ));
                    hunk = None;
                }
            }
            if hunk.is_some_and(|b| b.exhausted()) {
                hunk = None;
            }
            if hunk.is_some() {
                continue;
            }
            if matches!(marker, Some(b'+' | b'-' | b' ' | b'\\')) {
                continue;
            }
        }

        if let Some(rest) = line.strip_prefix("diff --git ") {
            // paths are refined by the ---/+++ headers when present
            let mut parts = rest.splitn(2, " b/");
            old_path = parts.next().map(|p| p.strip_prefix("a/").unwrap_or(p));
            new_path = parts.next();
        } else if let Some(rest) = line.strip_prefix("--- ") {
            old_path = header_path(rest);
        } else if let Some(rest) = line.strip_prefix("+++ ") {
            new_path = header_path(rest);
        } else if line.starts_with("@@") {
            match parse_hunk_header(line) {
                Some(budget) if !budget.exhausted() => hunk = Some(budget),
                Some(_) => {}
                None => out
                    .warnings
                    .push(format!("diff line {}: unparseable hunk header", idx + 1)),
            }
        }
    }
    if hunk.is_some() {
        out.warnings
            .push("diff ended inside a hunk (truncated input?)".to_string());
    }
    out
}

/// Compiled declaration patterns, tried in order.
#[derive(Debug, Clone)]
pub struct DeclarationMatcher {
    patterns: Vec<Regex>,
}

impl DeclarationMatcher {
    /// Compiles `patterns`; each must contain exactly one capture group.
    pub fn new<S: AsRef<str>>(patterns: &[S]) -> Result<Self> {
        if patterns.is_empty() {
            return Err(Error::config("declaration mode requires at least one pattern"));
        }
        let mut compiled = Vec::with_capacity(patterns.len());
        for p in patterns {
            let p = p.as_ref();
            let re = Regex::new(p).map_err(|e| Error::config(format!("invalid declaration pattern `{p}`: {e}")))?;
            if re.captures_len() != 2 {
                return Err(Error::config(format!(
                    "declaration pattern `{p}` must have exactly one capture group, found {}",
                    re.captures_len() - 1
                )));
            }
            compiled.push(re);
        }
        Ok(DeclarationMatcher { patterns: compiled })
    }

    /// Toggle name declared on `line`, first matching pattern wins.
    pub fn match_line<'l>(&self, line: &'l str) -> Option<&'l str> {
        self.patterns.iter().find_map(|re| {
            re.captures(line)
                .and_then(|c| c.get(1))
                .map(|m| m.as_str())
                .filter(|name| !name.is_empty())
        })
    }
}

/// A declaration event found in one diff, with the file it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeclarationHit {
    pub toggle_name: String,
    pub action: Action,
    pub path: String,
}

/// Scans a diff for declaration changes, de-duplicating `(name, action)`.
pub fn scan_declarations(diff_text: &str, matcher: &DeclarationMatcher) -> (Vec<DeclarationHit>, Vec<String>) {
    let parsed = parse_unified_diff(diff_text);
    let mut hits: Vec<DeclarationHit> = Vec::new();
    for line in &parsed.lines {
        let Some(name) = matcher.match_line(line.content) else {
            continue;
        };
        if hits.iter().any(|h| h.toggle_name == name && h.action == line.action) {
            continue;
        }
        hits.push(DeclarationHit {
            toggle_name: name.to_string(),
            action: line.action,
            path: line.path.unwrap_or_default().to_string(),
        });
    }
    (hits, parsed.warnings)
}

/// `(toggle_name, action)` pairs declared or removed by `diff_text`.
pub fn extract_declaration_events<S: AsRef<str>>(diff_text: &str, patterns: &[S]) -> Result<Vec<(String, Action)>> {
    let matcher = DeclarationMatcher::new(patterns)?;
    let (hits, warnings) = scan_declarations(diff_text, &matcher);
    for w in warnings {
        log::warn!("{w}");
    }
    Ok(hits.into_iter().map(|h| (h.toggle_name, h.action)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::miner::presets::{KUBERNETES_CURRENT_PATTERN, KUBERNETES_LEGACY_PATTERN};

    fn both() -> Vec<&'static str> {
        vec![KUBERNETES_CURRENT_PATTERN, KUBERNETES_LEGACY_PATTERN]
    }

    const SAMPLE: &str = "\
diff --git a/pkg/features/kube_features.go b/pkg/features/kube_features.go
index 1111111..2222222 100644
--- a/pkg/features/kube_features.go
+++ b/pkg/features/kube_features.go
@@ -10,3 +10,4 @@ const (
 \t// owner: @someone
-\tOld featuregate.Feature = \"Old\"
+\tFoo featuregate.Feature = \"Foo\"
+\tBar featuregate.Feature = \"Bar\"
 )
";

    #[test]
    fn plus_line_declares() {
        let diff = "@@ -1,0 +1,1 @@\n+ Foo featuregate.Feature = \"Foo\"\n";
        assert_eq!(
            extract_declaration_events(diff, &both()).unwrap(),
            vec![("Foo".to_string(), Action::Added)]
        );
    }

    #[test]
    fn headers_are_not_content() {
        let diff = "--- a/pkg/features/kube_features.go\n+++ b/pkg/features/kube_features.go\n";
        let generous = ["(kube_features)"];
        assert!(extract_declaration_events(diff, &generous).unwrap().is_empty());
    }

    #[test]
    fn legacy_syntax_removal() {
        let diff = "@@ -5,1 +5,0 @@\n- Foo utilfeature.Feature = \"Foo\"\n";
        assert_eq!(
            extract_declaration_events(diff, &both()).unwrap(),
            vec![("Foo".to_string(), Action::Removed)]
        );
    }

    #[test]
    fn full_file_diff_with_paths() {
        let matcher = DeclarationMatcher::new(&both()).unwrap();
        let (hits, warnings) = scan_declarations(SAMPLE, &matcher);
        assert!(warnings.is_empty(), "{warnings:?}");
        let got: Vec<_> = hits
            .iter()
            .map(|h| (h.toggle_name.as_str(), h.action, h.path.as_str()))
            .collect();
        assert_eq!(
            got,
            vec![
                ("Old", Action::Removed, "pkg/features/kube_features.go"),
                ("Foo", Action::Added, "pkg/features/kube_features.go"),
                ("Bar", Action::Added, "pkg/features/kube_features.go"),
            ]
        );
    }

    #[test]
    fn duplicates_within_one_diff_collapse() {
        let diff = "@@ -0,0 +1,2 @@\n+Foo featuregate.Feature = \"Foo\"\n+ Foo featuregate.Feature = \"Foo\"\n";
        assert_eq!(extract_declaration_events(diff, &both()).unwrap().len(), 1);
    }

    #[test]
    fn removal_and_addition_of_same_name_both_kept() {
        let diff = "@@ -1,1 +1,1 @@\n-Foo utilfeature.Feature = \"Foo\"\n+Foo featuregate.Feature = \"Foo\"\n";
        assert_eq!(
            extract_declaration_events(diff, &both()).unwrap(),
            vec![("Foo".to_string(), Action::Removed), ("Foo".to_string(), Action::Added)]
        );
    }

    #[test]
    fn lines_outside_hunks_are_ignored() {
        let diff = "+Foo featuregate.Feature = \"Foo\"\n@@ -1,0 +1,1 @@\n+Bar featuregate.Feature = \"Bar\"\n+Baz featuregate.Feature = \"Baz\"\n";
        let matcher = DeclarationMatcher::new(&both()).unwrap();
        let (hits, warnings) = scan_declarations(diff, &matcher);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].toggle_name, "Bar");
        assert!(warnings.is_empty());
    }

    #[test]
    fn malformed_body_warns_and_recovers() {
        let diff = "@@ -1,3 +1,3 @@\n+Foo featuregate.Feature = \"Foo\"\n?junk\n@@ -9,0 +9,1 @@\n+Bar featuregate.Feature = \"Bar\"\n";
        let matcher = DeclarationMatcher::new(&both()).unwrap();
        let (hits, warnings) = scan_declarations(diff, &matcher);
        let names: Vec<_> = hits.iter().map(|h| h.toggle_name.as_str()).collect();
        assert_eq!(names, ["Foo", "Bar"]);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn no_newline_marker_is_tolerated() {
        let diff = "@@ -1 +1 @@\n-a\n\\ No newline at end of file\n+Foo featuregate.Feature = \"Foo\"\n\\ No newline at end of file\n";
        let matcher = DeclarationMatcher::new(&both()).unwrap();
        let (hits, warnings) = scan_declarations(diff, &matcher);
        assert_eq!(hits.len(), 1);
        assert!(warnings.is_empty(), "{warnings:?}");
    }

    #[test]
    fn pattern_validation() {
        assert!(DeclarationMatcher::new::<&str>(&[]).is_err());
        assert!(DeclarationMatcher::new(&["no groups"]).is_err());
        assert!(DeclarationMatcher::new(&["(a)(b)"]).is_err());
        assert!(DeclarationMatcher::new(&["(unclosed"]).is_err());
        assert!(DeclarationMatcher::new(&["(?:x)(y)"]).is_ok());
    }

    #[test]
    fn hunk_header_counts() {
        let b = parse_hunk_header("@@ -10,3 +10,4 @@ fn x()").unwrap();
        assert_eq!((b.old, b.new), (3, 4));
        let b = parse_hunk_header("@@ -1 +1 @@").unwrap();
        assert_eq!((b.old, b.new), (1, 1));
        assert!(parse_hunk_header("@@ nonsense").is_none());
    }
}
