//! Pronunciation dictionaries and phone inventories.
//!
//! Dictionaries use the CMU-sphinx layout: one `HEADWORD PH1 PH2 ...` entry per
//! line, `;;;` comment lines, and `WORD(2)` style alternate pronunciations.
//! Inventories are plain data files with one `SYMBOL V|C` pair per line, so
//! languages that extend the arpabet set only need a new file.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const ARPABET_INVENTORY: &str = include_str!("../../../data/arpabet.inv");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexiconError {
    #[error("unknown phone {symbol:?}{}", line.map(|l| format!(" on line {l}")).unwrap_or_default())]
    UnknownPhone { line: Option<usize>, symbol: String },
    #[error("lexicon contains no valid entries")]
    EmptyLexicon,
    #[error("inventory line {line}: {reason}")]
    BadInventoryLine { line: usize, reason: String },
    #[error("duplicate phone symbol {0:?} in inventory")]
    DuplicateSymbol(String),
    #[error("inventory has no {0} phones")]
    MissingClass(PhoneClass),
    #[error("invalid phone symbol {0:?}")]
    InvalidSymbol(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PhoneClass {
    Vowel,
    Consonant,
}

impl fmt::Display for PhoneClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhoneClass::Vowel => "vowel",
            PhoneClass::Consonant => "consonant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Phone {
    pub symbol: String,
    pub class: PhoneClass,
}

impl Phone {
    pub fn new(symbol: impl Into<String>, class: PhoneClass) -> Result<Self, LexiconError> {
        let symbol = symbol.into();
        if symbol.is_empty() || symbol.chars().any(char::is_whitespace) {
            return Err(LexiconError::InvalidSymbol(symbol));
        }
        Ok(Phone { symbol, class })
    }
}

/// The phone set of one language, each symbol tagged vowel or consonant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhoneInventory {
    language_tag: String,
    phones: BTreeMap<String, PhoneClass>,
}

impl PhoneInventory {
    pub fn new(
        language_tag: impl Into<String>,
        phones: impl IntoIterator<Item = Phone>,
    ) -> Result<Self, LexiconError> {
        let mut map = BTreeMap::new();
        for phone in phones {
            if map.insert(phone.symbol.clone(), phone.class).is_some() {
                return Err(LexiconError::DuplicateSymbol(phone.symbol));
            }
        }
        for class in [PhoneClass::Vowel, PhoneClass::Consonant] {
            if !map.values().any(|c| *c == class) {
                return Err(LexiconError::MissingClass(class));
            }
        }
        Ok(PhoneInventory {
            language_tag: language_tag.into(),
            phones: map,
        })
    }

    /// Parse an inventory file: `SYMBOL V|C` per line, `;;;` or `#` comments.
    pub fn parse(language_tag: impl Into<String>, text: &str) -> Result<Self, LexiconError> {
        let mut phones = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with(";;;") || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = |reason: &str| LexiconError::BadInventoryLine {
                line: idx + 1,
                reason: reason.to_string(),
            };
            if fields.len() != 2 {
                return Err(bad("expected `SYMBOL V|C`"));
            }
            let class = match fields[1] {
                "V" | "v" => PhoneClass::Vowel,
                "C" | "c" => PhoneClass::Consonant,
                _ => return Err(bad("class must be V or C")),
            };
            phones.push(Phone::new(fields[0].to_ascii_uppercase(), class)?);
        }
        Self::new(language_tag, phones)
    }

    /// The standard 39-phone arpabet set shipped with the crate.
    pub fn arpabet(language_tag: impl Into<String>) -> Self {
        Self::parse(language_tag, ARPABET_INVENTORY).expect("bundled inventory is valid")
    }

    pub fn language_tag(&self) -> &str {
        &self.language_tag
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.phones.contains_key(symbol)
    }

    pub fn class_of(&self, symbol: &str) -> Option<PhoneClass> {
        self.phones.get(symbol).copied()
    }

    /// Symbols of one class in sorted order.
    pub fn members(&self, class: PhoneClass) -> Vec<&str> {
        self.phones
            .iter()
            .filter(|(_, c)| **c == class)
            .map(|(s, _)| s.as_str())
            .collect()
    }

    pub fn phones(&self) -> impl Iterator<Item = Phone> + '_ {
        self.phones.iter().map(|(s, c)| Phone {
            symbol: s.clone(),
            class: *c,
        })
    }

    /// Render back to the inventory file format.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (symbol, class) in &self.phones {
            let tag = match class {
                PhoneClass::Vowel => 'V',
                PhoneClass::Consonant => 'C',
            };
            out.push_str(&format!("{symbol} {tag}\n"));
        }
        out
    }
}

pub fn classify(inventory: &PhoneInventory, symbol: &str) -> Result<PhoneClass, LexiconError> {
    inventory
        .class_of(symbol)
        .ok_or_else(|| LexiconError::UnknownPhone {
            line: None,
            symbol: symbol.to_string(),
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PronunciationEntry {
    pub headword: String,
    pub phones: Vec<String>,
}

impl PronunciationEntry {
    pub fn new(headword: impl Into<String>, phones: &[&str]) -> Self {
        PronunciationEntry {
            headword: headword.into(),
            phones: phones.iter().map(|p| p.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.phones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phones.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryIssue {
    TooShort { len: usize, min: usize },
    TooLong { len: usize, max: usize },
    UnknownPhone(String),
}

impl fmt::Display for EntryIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntryIssue::TooShort { len, min } => write!(f, "too short ({len} < {min})"),
            EntryIssue::TooLong { len, max } => write!(f, "too long ({len} > {max})"),
            EntryIssue::UnknownPhone(s) => write!(f, "unknown phone {s:?}"),
        }
    }
}

/// Check length bounds (inclusive) and phone membership.
pub fn validate_entry(
    entry: &PronunciationEntry,
    inventory: &PhoneInventory,
    min_len: usize,
    max_len: usize,
) -> Result<(), Vec<EntryIssue>> {
    let mut issues = Vec::new();
    let len = entry.phones.len();
    if len < min_len {
        issues.push(EntryIssue::TooShort { len, min: min_len });
    }
    if len > max_len {
        issues.push(EntryIssue::TooLong { len, max: max_len });
    }
    for phone in &entry.phones {
        if !inventory.contains(phone) {
            issues.push(EntryIssue::UnknownPhone(phone.clone()));
        }
    }
    if issues.is_empty() {
        Ok(())
    } else {
        Err(issues)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub language_tag: String,
    pub entries: Vec<PronunciationEntry>,
    pub inventory: PhoneInventory,
}

impl Lexicon {
    pub fn get(&self, headword: &str) -> Option<&PronunciationEntry> {
        let key = headword.to_uppercase();
        self.entries.iter().find(|e| e.headword == key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Canonical dump in the same grammar `parse_lexicon` accepts.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&entry.headword);
            for phone in &entry.phones {
                out.push(' ');
                out.push_str(phone);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedLexicon {
    pub lexicon: Lexicon,
    pub rejected: Vec<RejectedLine>,
    /// `WORD(n)` lines dropped because the base headword already had a pronunciation.
    pub variants_dropped: usize,
}

/// Strip a `(n)` variant suffix, returning the base headword and whether one was present.
fn split_variant(token: &str) -> (&str, bool) {
    if let Some(open) = token.rfind('(') {
        let tail = &token[open..];
        if tail.len() > 2
            && tail.ends_with(')')
            && tail[1..tail.len() - 1].chars().all(|c| c.is_ascii_digit())
            && open > 0
        {
            return (&token[..open], true);
        }
    }
    (token, false)
}

/// Normalise a dictionary phone token: upper-case and drop stress digits (`AH0` -> `AH`).
pub fn normalize_phone(token: &str) -> String {
    token
        .trim_end_matches(|c: char| c.is_ascii_digit())
        .to_ascii_uppercase()
}

pub fn parse_lexicon(text: &str, inventory: &PhoneInventory) -> Result<ParsedLexicon, LexiconError> {
    let mut entries = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut rejected = Vec::new();
    let mut variants_dropped = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        // modern cmudict files carry trailing `# comment` annotations
        let line = raw.split(" #").next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with(";;;") {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let head = tokens.next().expect("non-empty line has a token");
        let (base, is_variant) = split_variant(head);
        let headword = base.to_uppercase();
        let mut phones = Vec::new();
        for token in tokens {
            let phone = normalize_phone(token);
            if !inventory.contains(&phone) {
                return Err(LexiconError::UnknownPhone {
                    line: Some(line_no),
                    symbol: phone,
                });
            }
            phones.push(phone);
        }
        if phones.is_empty() {
            rejected.push(RejectedLine {
                line: line_no,
                reason: format!("headword {headword:?} has no phones"),
            });
            continue;
        }
        if seen.contains(&headword) {
            if is_variant {
                variants_dropped += 1;
            } else {
                rejected.push(RejectedLine {
                    line: line_no,
                    reason: format!("duplicate headword {headword:?}"),
                });
            }
            continue;
        }
        seen.insert(headword.clone());
        entries.push(PronunciationEntry { headword, phones });
    }

    if entries.is_empty() {
        return Err(LexiconError::EmptyLexicon);
    }
    Ok(ParsedLexicon {
        lexicon: Lexicon {
            language_tag: inventory.language_tag().to_string(),
            entries,
            inventory: inventory.clone(),
        },
        rejected,
        variants_dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arpabet() -> PhoneInventory {
        PhoneInventory::arpabet("en")
    }

    #[test]
    fn parses_cmu_line() {
        let parsed = parse_lexicon("HELLO HH AH L OW\n", &arpabet()).unwrap();
        assert_eq!(
            parsed.lexicon.entries,
            vec![PronunciationEntry::new("HELLO", &["HH", "AH", "L", "OW"])]
        );
    }

    #[test]
    fn empty_text_is_an_error() {
        assert_eq!(parse_lexicon("", &arpabet()), Err(LexiconError::EmptyLexicon));
        assert_eq!(
            parse_lexicon(";;; only a comment\n\n", &arpabet()),
            Err(LexiconError::EmptyLexicon)
        );
    }

    #[test]
    fn unknown_phone_reports_line_and_symbol() {
        let err = parse_lexicon("FOO HH QX", &arpabet()).unwrap_err();
        assert_eq!(
            err,
            LexiconError::UnknownPhone {
                line: Some(1),
                symbol: "QX".into()
            }
        );
    }

    #[test]
    fn variants_collapse_stress_is_stripped_and_case_folds() {
        let text = ";;; header\nread R IY1 D\nREAD(2) R EH1 D\nBow B OW1\nBOW B AW1\nLONE\n";
        let parsed = parse_lexicon(text, &arpabet()).unwrap();
        let lex = &parsed.lexicon;
        assert_eq!(lex.entries.len(), 2);
        assert_eq!(lex.get("read").unwrap().phones, vec!["R", "IY", "D"]);
        assert_eq!(parsed.variants_dropped, 1);
        let lines: Vec<usize> = parsed.rejected.iter().map(|r| r.line).collect();
        assert_eq!(lines, vec![5, 6]);
    }

    #[test]
    fn classify_uses_inventory() {
        let inv = arpabet();
        assert_eq!(classify(&inv, "AH"), Ok(PhoneClass::Vowel));
        assert_eq!(classify(&inv, "K"), Ok(PhoneClass::Consonant));
        assert!(matches!(
            classify(&inv, "ZZ"),
            Err(LexiconError::UnknownPhone { line: None, .. })
        ));
    }

    #[test]
    fn bundled_inventory_matches_standard_vowel_list() {
        let inv = arpabet();
        let vowels: Vec<&str> = inv.members(PhoneClass::Vowel);
        assert_eq!(
            vowels,
            vec!["AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY", "IH", "IY", "OW", "OY", "UH", "UW"]
        );
        assert_eq!(inv.len(), 39);
    }

    #[test]
    fn validate_entry_bounds_are_inclusive() {
        let inv = arpabet();
        let hello = PronunciationEntry::new("HELLO", &["HH", "AH", "L", "OW"]);
        assert!(validate_entry(&hello, &inv, 4, 8).is_ok());
        let cat = PronunciationEntry::new("CAT", &["K", "AE", "T"]);
        assert_eq!(
            validate_entry(&cat, &inv, 4, 8),
            Err(vec![EntryIssue::TooShort { len: 3, min: 4 }])
        );
        let long = PronunciationEntry::new("X", &["K"; 9]);
        assert_eq!(
            validate_entry(&long, &inv, 4, 8),
            Err(vec![EntryIssue::TooLong { len: 9, max: 8 }])
        );
        let odd = PronunciationEntry::new("Y", &["K", "QX", "AE", "T"]);
        assert_eq!(
            validate_entry(&odd, &inv, 4, 8),
            Err(vec![EntryIssue::UnknownPhone("QX".into())])
        );
    }

    #[test]
    fn inventory_requires_both_classes_and_unique_symbols() {
        assert_eq!(
            PhoneInventory::parse("xx", "AA V\nIY V\n"),
            Err(LexiconError::MissingClass(PhoneClass::Consonant))
        );
        assert_eq!(
            PhoneInventory::parse("xx", "AA V\nAA C\n"),
            Err(LexiconError::DuplicateSymbol("AA".into()))
        );
        assert!(matches!(
            PhoneInventory::parse("xx", "AA X\n"),
            Err(LexiconError::BadInventoryLine { line: 1, .. })
        ));
        let inv = arpabet();
        assert_eq!(PhoneInventory::parse("en", &inv.dump()).unwrap(), inv);
    }

    #[test]
    fn bundled_sample_dictionary_parses() {
        let text = include_str!("../../../data/en_sample.dict");
        let parsed = parse_lexicon(text, &arpabet()).unwrap();
        assert!(parsed.lexicon.len() > 1500);
        assert!(parsed.variants_dropped > 0);
        for entry in &parsed.lexicon.entries {
            for phone in &entry.phones {
                assert!(classify(&parsed.lexicon.inventory, phone).is_ok());
            }
        }
    }
}
