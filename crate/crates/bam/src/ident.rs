//! Identifier normalization.
//!
//! Names in a model compare case-insensitively with interior whitespace
//! collapsed; the first-seen spelling is preserved for display.

/// Collapse interior whitespace runs to single spaces and trim the ends.
pub fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Canonical lookup key for a name: whitespace-collapsed and lowercased.
pub fn ident_key(s: &str) -> String {
    collapse_ws(s).to_lowercase()
}
