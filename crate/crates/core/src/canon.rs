//! String canonicalization shared by attribute names, values and metadata.
//!
//! All three forms are idempotent: applying them twice yields the same string
//! as applying them once. Lowercasing runs first so that characters produced
//! by case mapping are themselves subject to the later rules.

/// Lowercase, map underscores and punctuation to spaces, collapse whitespace.
///
/// Used for attribute names and metadata text. Anything that is neither
/// alphanumeric nor whitespace counts as punctuation.
pub fn canonical_name(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let mapped: String = lowered
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    collapse_whitespace(&mapped)
}

/// Lowercase, trim and collapse internal whitespace runs to a single space.
pub fn canonical_value(raw: &str) -> String {
    collapse_whitespace(&raw.to_lowercase())
}

/// Whitespace-separated words of the canonical form of `text`.
pub fn tokens(text: &str) -> Vec<String> {
    canonical_name(text)
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split(char::is_whitespace).filter(|w| !w.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn names() {
        assert_eq!(canonical_name("Total Amount"), "total amount");
        assert_eq!(canonical_name("total_amount"), "total amount");
        assert_eq!(canonical_name("  Zip-Code (5)  "), "zip code 5");
        assert_eq!(canonical_name("___"), "");
    }

    #[test]
    fn values() {
        assert_eq!(canonical_value("  New   York "), "new york");
        assert_eq!(canonical_value("NY"), "ny");
        assert_eq!(canonical_value("a_b"), "a_b");
        assert_eq!(canonical_value("\t\n"), "");
    }

    #[test]
    fn tokenize() {
        assert_eq!(tokens("2010 Census: Population"), ["2010", "census", "population"]);
        assert!(tokens("  ").is_empty());
    }

    proptest! {
        #[test]
        fn name_idempotent(s in "\\PC*") {
            let once = canonical_name(&s);
            prop_assert_eq!(canonical_name(&once), once);
        }

        #[test]
        fn value_idempotent(s in "\\PC*") {
            let once = canonical_value(&s);
            prop_assert_eq!(canonical_value(&once), once);
        }
    }
}
