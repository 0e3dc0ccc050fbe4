//! Word lists and pseudo-word generation for synthetic corpora.

use rand::seq::IndexedRandom;
use rand::Rng;

const ONSETS: &[&str] = &[
    "b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w", "z", "br", "ch", "cl",
    "dr", "fl", "gr", "kr", "pl", "qu", "sh", "sk", "st", "th", "tr", "x", "y",
];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou", "y"];
const CODAS: &[&str] = &["", "", "", "n", "r", "s", "l", "x", "m", "k", "st", "nd"];

/// A pronounceable nonsense word of two or three syllables.
pub fn pseudo_word<R: Rng>(rng: &mut R) -> String {
    let syllables = rng.random_range(2..=3);
    let mut w = String::new();
    for _ in 0..syllables {
        w.push_str(ONSETS.choose(rng).unwrap());
        w.push_str(NUCLEI.choose(rng).unwrap());
    }
    w.push_str(CODAS.choose(rng).unwrap());
    w
}

pub fn pseudo_phrase<R: Rng>(rng: &mut R, words: usize) -> String {
    (0..words).map(|_| pseudo_word(rng)).collect::<Vec<_>>().join(" ")
}

/// Capitalized form for titles and labels.
pub fn capitalize(word: &str) -> String {
    let mut c = word.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Columns that typically serve as join keys, with the suffix used in values.
pub const KEY_COLUMNS: &[(&str, &str)] = &[
    ("county", "County"),
    ("school district", "School District"),
    ("zip code", ""),
    ("ward", "Ward"),
    ("precinct", "Precinct"),
    ("census tract", "Tract"),
    ("agency", "Agency"),
    ("facility", "Facility"),
    ("borough", "Borough"),
    ("hospital", "Hospital"),
];

/// Attribute-name triples that mark a shared domain.
pub const DOMAIN_TRIPLES: &[[&str; 3]] = &[
    ["amount", "beneficiary", "receiver"],
    ["latitude", "longitude", "elevation"],
    ["enrollment", "grade level", "teacher count"],
    ["permit type", "issue date", "contractor"],
    ["violation", "inspection result", "inspector"],
    ["salary", "job title", "department"],
    ["vendor", "contract value", "award date"],
    ["species", "habitat", "population estimate"],
    ["route", "ridership", "stop name"],
    ["diagnosis", "admissions", "length of stay"],
    ["crime type", "arrests", "patrol area"],
    ["fuel type", "emissions", "capacity"],
];

/// Words naming the origin of a group of published tables.
pub const ORIGINS: &[&str] = &[
    "census", "survey", "audit", "inventory", "assessment", "referendum", "election", "study", "review", "count",
];

pub const BUDGET_TERMS: &[&str] = &[
    "budget", "expenditures", "revenues", "appropriations", "payments", "grants", "spending", "allocations",
];

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn words_are_lowercase_letters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let w = pseudo_word(&mut rng);
            assert!(w.len() >= 2 && w.chars().all(|c| c.is_ascii_lowercase()), "{w}");
        }
        assert_eq!(capitalize("kavo"), "Kavo");
    }
}
