//! Word selection and option-set generation.
//!
//! An option set shows a worker four romanised strings derived from one
//! reference pronunciation. Each string is the reference with exactly `d`
//! same-class phone substitutions, where the four `d` values come from a spec
//! label such as `S_0124`. A zero distance means the reference itself is
//! listed; otherwise the correct answer is "none of the above".

use std::collections::HashSet;
use std::fmt;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::choice::{CorrectSlot, LISTED_OPTIONS};
use crate::jsonl::{from_jsonl, to_jsonl, JsonlError};
use crate::lexicon::{Lexicon, PhoneClass, PhoneInventory, PronunciationEntry};
use crate::p2g::{decode, P2GError, P2GModel};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, derived_rng, rng_from_seed};

/// Redraws allowed before a perturbation or a distinct alternate is given up on.
pub const RETRY_BUDGET: usize = 100;

pub const DEFAULT_SPEC_LABELS: [&str; 6] = ["S_0124", "S_0112", "S_0111", "S_1234", "S_1124", "S_1111"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("bad option-set label {0:?}: expected S_ followed by 4 digits")]
    BadLabel(String),
    #[error("option-set label {0:?} has more than one zero distance")]
    DuplicateZero(String),
    #[error("need {needed} candidate words in the length band, found {available}")]
    NotEnoughCandidates { needed: usize, available: usize },
    #[error("invalid selection config: {0}")]
    InvalidConfig(String),
    #[error("cannot substitute {k} of {len} phones")]
    KTooLarge { k: usize, len: usize },
    #[error("infeasible perturbation: {0}")]
    Infeasible(String),
    #[error("sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("phone {0:?} is not in the inventory")]
    UnknownPhone(String),
    #[error("could not produce {LISTED_OPTIONS} distinct romanisations after {RETRY_BUDGET} redraws")]
    CollisionExhausted,
    #[error(transparent)]
    P2G(#[from] P2GError),
    #[error("{headword} / {spec}: {source}")]
    Word {
        headword: String,
        spec: String,
        #[source]
        source: Box<CorpusError>,
    },
    #[error("corpus file {0}")]
    Jsonl(#[from] JsonlError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionConfig {
    pub target_count: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Reserved for sampling selectors; the greedy cover is fully deterministic.
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            target_count: 500,
            min_len: 4,
            max_len: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OptionSetSpec {
    pub label: String,
    pub distances: [usize; LISTED_OPTIONS],
}

impl OptionSetSpec {
    pub fn lists_reference(&self) -> bool {
        self.distances.contains(&0)
    }
}

impl fmt::Display for OptionSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

pub fn parse_spec(label: &str) -> Result<OptionSetSpec, CorpusError> {
    let digits = label
        .strip_prefix("S_")
        .filter(|d| d.len() == LISTED_OPTIONS && d.bytes().all(|b| b.is_ascii_digit()))
        .ok_or_else(|| CorpusError::BadLabel(label.to_string()))?;
    let mut distances = [0usize; LISTED_OPTIONS];
    for (slot, b) in distances.iter_mut().zip(digits.bytes()) {
        *slot = (b - b'0') as usize;
    }
    if distances.iter().filter(|d| **d == 0).count() > 1 {
        return Err(CorpusError::DuplicateZero(label.to_string()));
    }
    Ok(OptionSetSpec {
        label: label.to_string(),
        distances,
    })
}

/// Parse a comma-separated label list such as `S_0124,S_1111`.
pub fn parse_spec_list(list: &str) -> Result<Vec<OptionSetSpec>, CorpusError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_spec)
        .collect()
}

pub fn default_specs() -> Vec<OptionSetSpec> {
    DEFAULT_SPEC_LABELS
        .iter()
        .map(|l| parse_spec(l).expect("default labels are valid"))
        .collect()
}

/// Greedy phonetic-richness selection.
///
/// Repeatedly takes the in-band candidate that covers the most phone types
/// not yet covered (ties: fewer phones, then smaller headword). Once no
/// remaining candidate adds anything, coverage is reset and the greedy pass
/// continues, so later picks again favour diverse words.
pub fn select_words(lexicon: &Lexicon, config: &SelectionConfig) -> Result<Vec<PronunciationEntry>, CorpusError> {
    if config.target_count == 0 {
        return Err(CorpusError::InvalidConfig("target_count must be >= 1".into()));
    }
    if config.min_len > config.max_len {
        return Err(CorpusError::InvalidConfig("min_len exceeds max_len".into()));
    }
    let symbols: Vec<String> = lexicon.inventory.phones().map(|p| p.symbol).collect();
    let words = symbols.len().div_ceil(64).max(1);
    let mask_of = |entry: &PronunciationEntry| -> Option<Vec<u64>> {
        let mut mask = vec![0u64; words];
        for phone in &entry.phones {
            let bit = symbols.binary_search(phone).ok()?;
            mask[bit / 64] |= 1 << (bit % 64);
        }
        Some(mask)
    };

    let mut candidates: Vec<(&PronunciationEntry, Vec<u64>)> = lexicon
        .entries
        .iter()
        .filter(|e| (config.min_len..=config.max_len).contains(&e.len()))
        .filter_map(|e| mask_of(e).map(|m| (e, m)))
        .collect();
    if candidates.len() < config.target_count {
        return Err(CorpusError::NotEnoughCandidates {
            needed: config.target_count,
            available: candidates.len(),
        });
    }
    // fixed scan order makes the tie-break a simple "first best wins"
    candidates.sort_by(|a, b| (a.0.len(), &a.0.headword).cmp(&(b.0.len(), &b.0.headword)));

    let gain = |mask: &[u64], covered: &[u64]| -> u32 {
        mask.iter().zip(covered).map(|(m, c)| (m & !c).count_ones()).sum()
    };
    let mut taken = vec![false; candidates.len()];
    let mut covered = vec![0u64; words];
    let mut selected = Vec::with_capacity(config.target_count);
    while selected.len() < config.target_count {
        let mut best: Option<(usize, u32)> = None;
        for (idx, (_, mask)) in candidates.iter().enumerate() {
            if taken[idx] {
                continue;
            }
            let g = gain(mask, &covered);
            if best.is_none_or(|(_, bg)| g > bg) {
                best = Some((idx, g));
            }
        }
        let (idx, g) = best.expect("enough candidates remain");
        if g == 0 && covered.iter().any(|w| *w != 0) {
            covered.iter_mut().for_each(|w| *w = 0);
            continue;
        }
        taken[idx] = true;
        for (c, m) in covered.iter_mut().zip(&candidates[idx].1) {
            *c |= m;
        }
        selected.push(candidates[idx].0.clone());
    }
    Ok(selected)
}

/// Number of positions at which two equal-length phone sequences differ.
pub fn substitution_distance<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> Result<usize, CorpusError> {
    if a.len() != b.len() {
        return Err(CorpusError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).filter(|(x, y)| x.as_ref() != y.as_ref()).count())
}

/// Substitute exactly `k` phones, each by a different phone of the same class.
pub fn perturb<R: Rng + ?Sized>(
    phones: &[String],
    k: usize,
    inventory: &PhoneInventory,
    rng: &mut R,
) -> Result<Vec<String>, CorpusError> {
    if k > phones.len() {
        return Err(CorpusError::KTooLarge { k, len: phones.len() });
    }
    let vowels = inventory.members(PhoneClass::Vowel);
    let consonants = inventory.members(PhoneClass::Consonant);
    let mut classes = Vec::with_capacity(phones.len());
    for phone in phones {
        let class = inventory
            .class_of(phone)
            .ok_or_else(|| CorpusError::UnknownPhone(phone.clone()))?;
        classes.push(match class {
            PhoneClass::Vowel => &vowels,
            PhoneClass::Consonant => &consonants,
        });
    }
    let substitutable = classes.iter().filter(|c| c.len() >= 2).count();
    if substitutable < k {
        return Err(CorpusError::Infeasible(format!(
            "only {substitutable} positions have a same-class alternative, {k} requested"
        )));
    }

    for _ in 0..RETRY_BUDGET {
        let positions = sample(rng, phones.len(), k);
        if positions.iter().any(|i| classes[i].len() < 2) {
            continue;
        }
        let mut out = phones.to_vec();
        for i in positions.iter() {
            let members = classes[i];
            // uniform over the class without the original symbol
            let mut pick = rng.gen_range(0..members.len() - 1);
            let original = members
                .iter()
                .position(|m| *m == phones[i])
                .expect("phone belongs to its class");
            if pick >= original {
                pick += 1;
            }
            out[i] = members[pick].to_string();
        }
        return Ok(out);
    }
    Err(CorpusError::Infeasible(format!(
        "no valid position draw for k={k} after {RETRY_BUDGET} attempts"
    )))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WordRef {
    pub headword: String,
    pub language: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alternate {
    pub phone_seq: Vec<String>,
    pub roman_text: String,
    pub distance: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionSet {
    pub word_ref: WordRef,
    pub spec_label: String,
    /// In display order (already shuffled).
    pub alternates: Vec<Alternate>,
    pub correct_slot: CorrectSlot,
    pub shuffle_seed: u64,
}

impl OptionSet {
    pub fn roman_options(&self) -> Vec<String> {
        self.alternates.iter().map(|a| a.roman_text.clone()).collect()
    }
}

/// Generate one option set for `entry`.
///
/// `used` holds phone sequences already taken by this word (the reference
/// included); perturbed alternates must avoid them and are added on success.
#[allow(clippy::too_many_arguments)]
fn generate_option_set<S: Scalar, R: Rng + ?Sized>(
    entry: &PronunciationEntry,
    language: &str,
    spec: &OptionSetSpec,
    model: &P2GModel<S>,
    inventory: &PhoneInventory,
    rng: &mut R,
    shuffle_seed: u64,
    used: &mut HashSet<Vec<String>>,
) -> Result<OptionSet, CorpusError> {
    if let Some(d) = spec.distances.iter().find(|d| **d > entry.len()) {
        return Err(CorpusError::KTooLarge { k: *d, len: entry.len() });
    }
    let reference_roman = decode(model, &entry.phones)?;

    // Zero first, so perturbed strings also avoid the reference's romanisation.
    let mut order: Vec<usize> = (0..LISTED_OPTIONS).collect();
    order.sort_by_key(|i| spec.distances[*i] != 0);

    let mut slots: Vec<Option<Alternate>> = vec![None; LISTED_OPTIONS];
    let mut romans: HashSet<String> = HashSet::new();
    let mut fresh: Vec<Vec<String>> = Vec::new();
    for i in order {
        let distance = spec.distances[i];
        if distance == 0 {
            romans.insert(reference_roman.clone());
            slots[i] = Some(Alternate {
                phone_seq: entry.phones.clone(),
                roman_text: reference_roman.clone(),
                distance,
            });
            continue;
        }
        let mut accepted = None;
        for _ in 0..RETRY_BUDGET {
            let candidate = perturb(&entry.phones, distance, inventory, rng)?;
            if used.contains(&candidate) || fresh.contains(&candidate) {
                continue;
            }
            let roman = decode(model, &candidate)?;
            if romans.contains(&roman) {
                continue;
            }
            accepted = Some((candidate, roman));
            break;
        }
        let (phone_seq, roman_text) = accepted.ok_or(CorpusError::CollisionExhausted)?;
        romans.insert(roman_text.clone());
        fresh.push(phone_seq.clone());
        slots[i] = Some(Alternate {
            phone_seq,
            roman_text,
            distance,
        });
    }

    let mut alternates: Vec<Alternate> = slots.into_iter().map(|s| s.expect("every slot filled")).collect();
    alternates.shuffle(&mut rng_from_seed(shuffle_seed));
    let correct_slot = alternates
        .iter()
        .position(|a| a.distance == 0)
        .map(|p| CorrectSlot::Slot(p as u8))
        .unwrap_or(CorrectSlot::NoneOfTheAbove);
    used.extend(fresh);
    Ok(OptionSet {
        word_ref: WordRef {
            headword: entry.headword.clone(),
            language: language.to_string(),
        },
        spec_label: spec.label.clone(),
        alternates,
        correct_slot,
        shuffle_seed,
    })
}

/// Build a single option set. The shuffle seed is drawn from `rng` first.
pub fn build_option_set<S: Scalar, R: Rng + ?Sized>(
    entry: &PronunciationEntry,
    spec: &OptionSetSpec,
    model: &P2GModel<S>,
    inventory: &PhoneInventory,
    rng: &mut R,
) -> Result<OptionSet, CorpusError> {
    let shuffle_seed = rng.gen::<u64>();
    let mut used = HashSet::from([entry.phones.clone()]);
    generate_option_set(
        entry,
        inventory.language_tag(),
        spec,
        model,
        inventory,
        rng,
        shuffle_seed,
        &mut used,
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub language_tag: String,
    pub option_sets: Vec<OptionSet>,
}

impl Corpus {
    pub fn to_jsonl(&self) -> String {
        to_jsonl(&self.option_sets)
    }

    pub fn from_jsonl(text: &str) -> Result<Self, CorpusError> {
        let option_sets: Vec<OptionSet> = from_jsonl(text)?;
        let language_tag = option_sets
            .first()
            .map(|s| s.word_ref.language.clone())
            .unwrap_or_default();
        Ok(Corpus {
            language_tag,
            option_sets,
        })
    }
}

fn word_option_sets<S: Scalar>(
    entry: &PronunciationEntry,
    language: &str,
    specs: &[OptionSetSpec],
    model: &P2GModel<S>,
    inventory: &PhoneInventory,
    seed: u64,
) -> Result<Vec<OptionSet>, CorpusError> {
    let mut rng = derived_rng(seed, &["perturb", language, &entry.headword]);
    let mut used = HashSet::from([entry.phones.clone()]);
    specs
        .iter()
        .map(|spec| {
            let shuffle_seed = derive_seed(seed, &["shuffle", language, &entry.headword, &spec.label]);
            generate_option_set(entry, language, spec, model, inventory, &mut rng, shuffle_seed, &mut used)
                .map_err(|e| CorpusError::Word {
                    headword: entry.headword.clone(),
                    spec: spec.label.clone(),
                    source: Box::new(e),
                })
        })
        .collect()
}

/// One option set per (word, spec), words in lexicon order.
///
/// Each word draws from its own seeded stream, so the result is the same for
/// any number of worker threads.
pub fn build_corpus<S: Scalar>(
    lexicon: &Lexicon,
    specs: &[OptionSetSpec],
    model: &P2GModel<S>,
    seed: u64,
) -> Result<Corpus, CorpusError> {
    let language = lexicon.language_tag.as_str();
    let per_word: Vec<Result<Vec<OptionSet>, CorpusError>> = lexicon
        .entries
        .par_iter()
        .map(|entry| word_option_sets(entry, language, specs, model, &lexicon.inventory, seed))
        .collect();
    let mut option_sets = Vec::with_capacity(lexicon.len() * specs.len());
    for sets in per_word {
        option_sets.extend(sets?);
    }
    Ok(Corpus {
        language_tag: language.to_string(),
        option_sets,
    })
}

/// [`build_corpus`] on a dedicated pool with `threads` workers.
pub fn build_corpus_with_threads<S: Scalar>(
    lexicon: &Lexicon,
    specs: &[OptionSetSpec],
    model: &P2GModel<S>,
    seed: u64,
    threads: usize,
) -> Result<Corpus, CorpusError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CorpusError::InvalidConfig(e.to_string()))?;
    pool.install(|| build_corpus(lexicon, specs, model, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::parse_lexicon;

    fn inv() -> PhoneInventory {
        PhoneInventory::arpabet("en")
    }

    fn phones(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    /// One letter per phone: vowels and consonants map to distinct lowercase letters.
    fn letter_model() -> P2GModel<f64> {
        let letters = b"abcdefghijklmnopqrstuvwxyz";
        let mut table = Vec::new();
        let symbols: Vec<String> = inv().phones().map(|p| p.symbol).collect();
        let chunks: Vec<String> = symbols
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let a = letters[i % 26] as char;
                if i < 26 {
                    a.to_string()
                } else {
                    format!("{a}{a}")
                }
            })
            .collect();
        for (s, c) in symbols.iter().zip(&chunks) {
            table.push((s.as_str(), c.as_str(), 1.0));
        }
        P2GModel::from_table("en", 2, &table).unwrap()
    }

    #[test]
    fn spec_labels_parse() {
        assert_eq!(parse_spec("S_0124").unwrap().distances, [0, 1, 2, 4]);
        assert_eq!(parse_spec("S_1111").unwrap().distances, [1, 1, 1, 1]);
        assert!(matches!(parse_spec("S_0024"), Err(CorpusError::DuplicateZero(_))));
        for bad in ["S_012", "S_01245", "X_0124", "S_01a4", "", "S0124"] {
            assert!(matches!(parse_spec(bad), Err(CorpusError::BadLabel(_))), "{bad}");
        }
        assert_eq!(parse_spec_list("S_0124, S_1111").unwrap().len(), 2);
        assert_eq!(default_specs().len(), 6);
    }

    #[test]
    fn substitution_distance_counts_positions() {
        let hello = phones("HH AH L OW");
        assert_eq!(substitution_distance(&hello, &hello).unwrap(), 0);
        assert_eq!(substitution_distance(&hello, &phones("HH IY L OW")).unwrap(), 1);
        assert_eq!(substitution_distance(&phones("K AE T S"), &phones("G AE D Z")).unwrap(), 3);
        assert!(matches!(
            substitution_distance(&hello, &phones("HH AH")),
            Err(CorpusError::LengthMismatch(4, 2))
        ));
    }

    #[test]
    fn perturb_edge_cases() {
        let mut rng = rng_from_seed(1);
        let hello = phones("HH AH L OW");
        assert_eq!(perturb(&hello, 0, &inv(), &mut rng).unwrap(), hello);
        let all = perturb(&hello, 4, &inv(), &mut rng).unwrap();
        assert_eq!(substitution_distance(&hello, &all).unwrap(), 4);
        for (a, b) in hello.iter().zip(&all) {
            assert_eq!(inv().class_of(a), inv().class_of(b));
        }
        assert!(matches!(
            perturb(&hello, 5, &inv(), &mut rng),
            Err(CorpusError::KTooLarge { k: 5, len: 4 })
        ));
    }

    #[test]
    fn singleton_class_is_infeasible() {
        let inv = PhoneInventory::parse("xx", "A V\nB C\nC C\n").unwrap();
        let mut rng = rng_from_seed(3);
        let seq = phones("A B");
        // only B can move
        assert!(perturb(&seq, 1, &inv, &mut rng).is_ok());
        assert!(matches!(perturb(&seq, 2, &inv, &mut rng), Err(CorpusError::Infeasible(_))));
    }

    #[test]
    fn greedy_selection_example() {
        let lex = parse_lexicon(
            "ABAD AA B AA D\nDADA D AA D AA\nKIWI K IY W IY\n",
            &inv(),
        )
        .unwrap()
        .lexicon;
        let config = SelectionConfig {
            target_count: 2,
            ..SelectionConfig::default()
        };
        let picked: Vec<String> = select_words(&lex, &config).unwrap().into_iter().map(|e| e.headword).collect();
        assert_eq!(picked, vec!["ABAD", "KIWI"]);
        let too_many = SelectionConfig {
            target_count: 5,
            ..SelectionConfig::default()
        };
        assert!(matches!(
            select_words(&lex, &too_many),
            Err(CorpusError::NotEnoughCandidates { needed: 5, available: 3 })
        ));
    }

    #[test]
    fn selection_resets_coverage() {
        let lex = parse_lexicon(
            "AAAA AA AA AA AA\nBABA B AA B AA\nKIKI K IY K IY\nBIBI B IY B IY\n",
            &inv(),
        )
        .unwrap()
        .lexicon;
        let config = SelectionConfig {
            target_count: 4,
            ..SelectionConfig::default()
        };
        let picked: Vec<String> = select_words(&lex, &config).unwrap().into_iter().map(|e| e.headword).collect();
        // BABA and KIKI cover {AA,B,K,IY}; after the reset BIBI (2 new) beats AAAA (1 new)
        assert_eq!(picked, vec!["BABA", "KIKI", "BIBI", "AAAA"]);
    }

    #[test]
    fn option_set_invariants() {
        let entry = PronunciationEntry::new("HELLO", &["HH", "AH", "L", "OW"]);
        let model = letter_model();
        let mut rng = rng_from_seed(11);
        let listed = build_option_set(&entry, &parse_spec("S_0124").unwrap(), &model, &inv(), &mut rng).unwrap();
        let CorrectSlot::Slot(s) = listed.correct_slot else {
            panic!("reference must be listed")
        };
        assert_eq!(listed.alternates[s as usize].roman_text, decode(&model, &entry.phones).unwrap());
        let rejected = build_option_set(&entry, &parse_spec("S_1111").unwrap(), &model, &inv(), &mut rng).unwrap();
        assert_eq!(rejected.correct_slot, CorrectSlot::NoneOfTheAbove);
        for set in [&listed, &rejected] {
            let romans: HashSet<_> = set.alternates.iter().map(|a| &a.roman_text).collect();
            assert_eq!(romans.len(), 4);
            for alt in &set.alternates {
                assert_eq!(substitution_distance(&entry.phones, &alt.phone_seq).unwrap(), alt.distance);
            }
        }
        let mut declared: Vec<usize> = listed.alternates.iter().map(|a| a.distance).collect();
        declared.sort();
        assert_eq!(declared, vec![0, 1, 2, 4]);
    }

    #[test]
    fn collisions_exhaust_the_budget() {
        // every vowel romanises to "a": S_1111 on a one-vowel word cannot give 4 distinct strings
        let mut table = vec![];
        for p in inv().phones() {
            match p.class {
                PhoneClass::Vowel => table.push((p.symbol, "a".to_string())),
                PhoneClass::Consonant => table.push((p.symbol, "k".to_string())),
            }
        }
        let refs: Vec<(&str, &str, f64)> = table.iter().map(|(s, c)| (s.as_str(), c.as_str(), 1.0)).collect();
        let model = P2GModel::<f64>::from_table("en", 1, &refs).unwrap();
        let entry = PronunciationEntry::new("KAKK", &["K", "AA", "K", "K"]);
        let mut rng = rng_from_seed(5);
        let err = build_option_set(&entry, &parse_spec("S_1111").unwrap(), &model, &inv(), &mut rng).unwrap_err();
        assert!(matches!(err, CorpusError::CollisionExhausted), "{err}");
    }

    #[test]
    fn corpus_shape_and_per_word_distinctness() {
        let lex = parse_lexicon("HELLO HH AH L OW\n", &inv()).unwrap().lexicon;
        let corpus = build_corpus(&lex, &default_specs(), &letter_model(), 9).unwrap();
        assert_eq!(corpus.option_sets.len(), 6);
        let alternates: Vec<&Alternate> = corpus.option_sets.iter().flat_map(|s| &s.alternates).collect();
        assert_eq!(alternates.len(), 24);
        let perturbed: HashSet<&Vec<String>> = alternates
            .iter()
            .filter(|a| a.distance > 0)
            .map(|a| &a.phone_seq)
            .collect();
        assert_eq!(perturbed.len(), 21);
        let text = corpus.to_jsonl();
        assert_eq!(Corpus::from_jsonl(&text).unwrap(), corpus);
        assert_eq!(build_corpus(&lex, &default_specs(), &letter_model(), 9).unwrap().to_jsonl(), text);
    }
}
