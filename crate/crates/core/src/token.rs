//! Lowercase identifier tokens shared by facts, labels and bucket names.

/// Hyphens become underscores (`very-small` -> `very_small`).
pub fn normalize_token(s: &str) -> String {
    s.trim().replace('-', "_")
}

/// `[a-z][a-z0-9_]*`
pub fn is_token(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}
