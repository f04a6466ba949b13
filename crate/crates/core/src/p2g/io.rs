//! Model and training-corpus file formats.
//!
//! ```text
//! p2g-model v1
//! language de
//! max_chunk 3
//! iterations 12
//! final_loglik -4.21000000000e1
//! emissions 3
//! AA a 9.00000000000e-1
//! AA <eps> 1.00000000000e-1
//! B b 1.00000000000e0
//! end
//! ```

use std::collections::BTreeMap;

use super::{P2GError, P2GModel, TrainingMeta, TrainingPair};
use crate::lexicon::normalize_phone;
use crate::scalar::Scalar;

pub const MODEL_VERSION: &str = "v1";
const MAGIC: &str = "p2g-model";
const EMPTY_CHUNK: &str = "<eps>";

fn fmt_num<S: Scalar>(value: S) -> String {
    format!("{:.11e}", value.to_f64_lossy())
}

pub fn save<S: Scalar>(model: &P2GModel<S>) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&format!("{MAGIC} {MODEL_VERSION}\n"));
    out.push_str(&format!("language {}\n", model.language_tag()));
    out.push_str(&format!("max_chunk {}\n", model.max_chunk()));
    let meta = model.training_meta();
    out.push_str(&format!("iterations {}\n", meta.iterations_run));
    out.push_str(&format!("final_loglik {}\n", fmt_num(meta.final_loglik)));
    let n: usize = model.emissions().values().map(BTreeMap::len).sum();
    out.push_str(&format!("emissions {n}\n"));
    for (phone, dist) in model.emissions() {
        for (chunk, p) in dist {
            let chunk = if chunk.is_empty() { EMPTY_CHUNK } else { chunk };
            out.push_str(&format!("{phone} {chunk} {}\n", fmt_num(*p)));
        }
    }
    out.push_str("end\n");
    out.into_bytes()
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str), P2GError> {
        match self.inner.next() {
            Some((idx, line)) => Ok((idx + 1, line.trim())),
            None => Err(P2GError::Parse {
                line: 0,
                reason: "unexpected end of file (truncated model?)".into(),
            }),
        }
    }

    fn field(&mut self, key: &str) -> Result<(usize, &'a str), P2GError> {
        let (line, text) = self.next_line()?;
        match text.split_once(' ') {
            Some((k, v)) if k == key => Ok((line, v.trim())),
            _ => Err(P2GError::Parse {
                line,
                reason: format!("expected `{key} ...`"),
            }),
        }
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, text: &str) -> Result<T, P2GError> {
    text.parse().map_err(|_| P2GError::Parse {
        line,
        reason: format!("bad number {text:?}"),
    })
}

pub fn load<S: Scalar>(bytes: &[u8]) -> Result<P2GModel<S>, P2GError> {
    let text = std::str::from_utf8(bytes).map_err(|e| P2GError::Parse {
        line: 0,
        reason: e.to_string(),
    })?;
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };

    let (line, header) = lines.next_line()?;
    let version = match header.split_once(' ') {
        Some((MAGIC, v)) => v.trim(),
        _ => {
            return Err(P2GError::Parse {
                line,
                reason: format!("missing `{MAGIC}` header"),
            })
        }
    };
    if version != MODEL_VERSION {
        return Err(P2GError::Version {
            found: version.to_string(),
            expected: MODEL_VERSION.to_string(),
        });
    }
    let (_, language) = lines.field("language")?;
    let (line, max_chunk) = lines.field("max_chunk")?;
    let max_chunk: usize = parse_num(line, max_chunk)?;
    let (line, iterations) = lines.field("iterations")?;
    let iterations_run: usize = parse_num(line, iterations)?;
    let (line, final_ll) = lines.field("final_loglik")?;
    let final_loglik: f64 = parse_num(line, final_ll)?;
    let (line, count) = lines.field("emissions")?;
    let count: usize = parse_num(line, count)?;

    let mut emissions: BTreeMap<String, BTreeMap<String, S>> = BTreeMap::new();
    for _ in 0..count {
        let (line, text) = lines.next_line()?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(P2GError::Parse {
                line,
                reason: "expected `PHONE CHUNK PROB`".into(),
            });
        }
        let chunk = if fields[1] == EMPTY_CHUNK { "" } else { fields[1] };
        let p: f64 = parse_num(line, fields[2])?;
        let previous = emissions
            .entry(fields[0].to_string())
            .or_default()
            .insert(chunk.to_string(), S::from_f64_lossy(p));
        if previous.is_some() {
            return Err(P2GError::Parse {
                line,
                reason: format!("duplicate emission {} {}", fields[0], fields[1]),
            });
        }
    }
    let (line, end) = lines.next_line()?;
    if end != "end" {
        return Err(P2GError::Parse {
            line,
            reason: "expected `end`".into(),
        });
    }

    P2GModel::from_emissions(
        language,
        max_chunk,
        emissions,
        TrainingMeta {
            iterations_run,
            final_loglik: S::from_f64_lossy(final_loglik),
        },
    )
}

/// Parse a training corpus: `grapheme_string<TAB>PH1 PH2 ...` per line.
///
/// Stress digits are stripped from phones and graphemes are lower-cased.
/// Blank lines and `#` comments are ignored.
pub fn parse_training_pairs(text: &str) -> Result<Vec<TrainingPair>, P2GError> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((graphemes, phones)) = line.split_once('\t') else {
            return Err(P2GError::Parse {
                line: idx + 1,
                reason: "expected `graphemes<TAB>phones`".into(),
            });
        };
        pairs.push(TrainingPair {
            phones: phones.split_whitespace().map(normalize_phone).collect(),
            graphemes: graphemes.trim().to_lowercase(),
        });
    }
    Ok(pairs)
}
