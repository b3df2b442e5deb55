use crate::phonetics::numbers::words_to_digits;

/// Canonical text form used for indexing and comparison.
///
/// Lowercases, deletes apostrophes, turns every other non-alphanumeric
/// character into a word break, rewrites number words as digits and collapses
/// whitespace. Applying it twice changes nothing.
pub fn normalize_text(s: &str) -> String {
    let mut cleaned = String::with_capacity(s.len());
    for c in s.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() && !c.is_uppercase() {
            cleaned.push(c);
        } else if c != '\'' && c != '\u{2019}' {
            cleaned.push(' ');
        }
    }
    words_to_digits(cleaned.split_whitespace()).join(" ")
}
