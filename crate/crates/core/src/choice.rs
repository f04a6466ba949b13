//! Vote choices and option-set ground truth.

use std::fmt;

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Number of listed strings in every option set.
pub const LISTED_OPTIONS: usize = 4;

/// Text of the fifth, implicit option.
pub const NONE_OF_THE_ABOVE_TEXT: &str = "none of the above";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("choice {0} is outside 0..=4")]
pub struct BadChoice(pub i64);

/// A worker's selection: slots 0..=3 are the listed strings, 4 is "none of the above".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub struct Choice(u8);

impl Choice {
    pub const NONE_OF_THE_ABOVE: Choice = Choice(LISTED_OPTIONS as u8);

    pub fn new(value: i64) -> Result<Self, BadChoice> {
        if (0..=LISTED_OPTIONS as i64).contains(&value) {
            Ok(Choice(value as u8))
        } else {
            Err(BadChoice(value))
        }
    }

    pub fn slot(slot: usize) -> Self {
        assert!(slot < LISTED_OPTIONS, "slot {slot} out of range");
        Choice(slot as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_none_of_the_above(self) -> bool {
        self == Self::NONE_OF_THE_ABOVE
    }

    /// All five choices in order.
    pub fn all() -> impl Iterator<Item = Choice> {
        (0..=LISTED_OPTIONS as u8).map(Choice)
    }
}

impl TryFrom<i64> for Choice {
    type Error = BadChoice;
    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Choice::new(value)
    }
}

impl From<Choice> for u8 {
    fn from(c: Choice) -> u8 {
        c.0
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Where the reference word sits in an option set.
///
/// Serialised as the slot number, or the string `"NoneOfTheAbove"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrectSlot {
    Slot(u8),
    NoneOfTheAbove,
}

impl CorrectSlot {
    /// The vote that counts as correct for this ground truth.
    pub fn correct_choice(self) -> Choice {
        match self {
            CorrectSlot::Slot(s) => Choice::slot(s as usize),
            CorrectSlot::NoneOfTheAbove => Choice::NONE_OF_THE_ABOVE,
        }
    }

    /// True when the reference word is among the four listed strings.
    pub fn is_listed(self) -> bool {
        matches!(self, CorrectSlot::Slot(_))
    }
}

impl fmt::Display for CorrectSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorrectSlot::Slot(s) => write!(f, "{s}"),
            CorrectSlot::NoneOfTheAbove => f.write_str("NoneOfTheAbove"),
        }
    }
}

impl Serialize for CorrectSlot {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            CorrectSlot::Slot(s) => serializer.serialize_u8(*s),
            CorrectSlot::NoneOfTheAbove => serializer.serialize_str("NoneOfTheAbove"),
        }
    }
}

impl<'de> Deserialize<'de> for CorrectSlot {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(i64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(n) if (0..LISTED_OPTIONS as i64).contains(&n) => Ok(CorrectSlot::Slot(n as u8)),
            Raw::Num(n) => Err(de::Error::custom(format!("correct slot {n} outside 0..=3"))),
            Raw::Text(t) if t == "NoneOfTheAbove" => Ok(CorrectSlot::NoneOfTheAbove),
            Raw::Text(t) => Err(de::Error::custom(format!("unknown correct slot {t:?}"))),
        }
    }
}
