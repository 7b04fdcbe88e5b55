//! Defined-name mangling.
//!
//! Spreadsheet names must start with a letter or underscore, use only
//! alphanumerics and underscores, be unique case-insensitively, and must not
//! collide with cell addresses (`C38`), `R1C1` references, or the bare
//! column markers `R`/`C`. Collisions take a `_v1`, `_v2`, ... suffix.

use std::collections::HashSet;

/// Largest spreadsheet column ("XFD") and row.
const MAX_COL: u32 = 16_384;
const MAX_ROW: u64 = 1_048_576;

/// Mangle display parts (variable name, then category path segments) into a
/// name candidate: non-alphanumeric runs become single underscores, parts are
/// joined with double underscores, and a leading digit gets a leading
/// underscore.
pub fn mangle(parts: &[&str]) -> String {
    let mut joined = parts
        .iter()
        .map(|part| mangle_part(part))
        .collect::<Vec<_>>()
        .join("__");
    if joined.is_empty() {
        joined.push('_');
    }
    if joined.chars().next().is_some_and(|c| c.is_ascii_digit()) {
        joined.insert(0, '_');
    }
    if joined.len() > 200 {
        joined.truncate(200);
    }
    joined
}

fn mangle_part(part: &str) -> String {
    let mut out = String::with_capacity(part.len());
    let mut gap = false;
    for c in part.chars() {
        if c.is_alphanumeric() {
            if gap && !out.is_empty() {
                out.push('_');
            }
            gap = false;
            out.push(c);
        } else {
            gap = true;
        }
    }
    out
}

/// True when the candidate would read as a spreadsheet reference and is
/// therefore unusable as a defined name.
pub fn is_reserved_name(s: &str) -> bool {
    is_a1_address(s) || is_r1c1_reference(s) || s.eq_ignore_ascii_case("r") || s.eq_ignore_ascii_case("c")
}

/// True for A1-style cell addresses within the spreadsheet limits, e.g.
/// `C38`, `XFD1048576`. `XFE1` is not an address and is allowed.
pub fn is_a1_address(s: &str) -> bool {
    let letters: String = s.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    if letters.is_empty() || letters.len() > 3 {
        return false;
    }
    let digits = &s[letters.len()..];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return false;
    }
    let col = letters
        .bytes()
        .fold(0u32, |acc, b| acc * 26 + (b.to_ascii_uppercase() - b'A' + 1) as u32);
    let Ok(row) = digits.parse::<u64>() else { return false };
    col <= MAX_COL && (1..=MAX_ROW).contains(&row)
}

fn is_r1c1_reference(s: &str) -> bool {
    let bytes = s.as_bytes();
    if bytes.len() < 4 || !bytes[0].eq_ignore_ascii_case(&b'r') {
        return false;
    }
    let rest = &s[1..];
    let Some(c_pos) = rest.find(|c: char| c.eq_ignore_ascii_case(&'c')) else { return false };
    let (rows, cols) = (&rest[..c_pos], &rest[c_pos + 1..]);
    !rows.is_empty()
        && !cols.is_empty()
        && rows.bytes().all(|b| b.is_ascii_digit())
        && cols.bytes().all(|b| b.is_ascii_digit())
}

/// Hands out unique, non-reserved names, case-insensitively.
#[derive(Default)]
pub struct NameRegistry {
    used: HashSet<String>,
}

impl NameRegistry {
    /// Claim the candidate, suffixing `_v1`, `_v2`, ... as needed.
    pub fn claim(&mut self, candidate: String) -> String {
        let mut name = candidate.clone();
        let mut version = 0usize;
        while is_reserved_name(&name) || self.used.contains(&name.to_lowercase()) {
            version += 1;
            name = format!("{candidate}_v{version}");
        }
        self.used.insert(name.to_lowercase());
        name
    }
}
