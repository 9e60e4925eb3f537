//! Admiralty Code ratings: source reliability (A-F) paired with information
//! credibility (1-6), and the decision landscape they induce over a set of
//! system states.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reliability {
    /// Completely reliable
    A,
    /// Usually reliable
    B,
    /// Fairly reliable
    C,
    /// Not usually reliable
    D,
    /// Unreliable
    E,
    /// Reliability cannot be judged
    F,
}

impl Reliability {
    pub const ALL: [Reliability; 6] = [
        Reliability::A,
        Reliability::B,
        Reliability::C,
        Reliability::D,
        Reliability::E,
        Reliability::F,
    ];

    pub fn letter(&self) -> char {
        (b'A' + *self as u8) as char
    }

    /// One step towards A, if any.
    pub fn improved(&self) -> Option<Reliability> {
        (*self as usize).checked_sub(1).map(|i| Self::ALL[i])
    }
}

/// Information credibility, 1 (confirmed) to 6 (cannot be judged).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Credibility(u8);

impl Credibility {
    pub fn new(level: u8) -> Option<Self> {
        (1..=6).contains(&level).then_some(Credibility(level))
    }

    pub fn level(&self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Credibility> {
        (1..=6).map(Credibility)
    }

    pub fn improved(&self) -> Option<Credibility> {
        Credibility::new(self.0 - 1)
    }
}

impl TryFrom<u8> for Credibility {
    type Error = String;

    fn try_from(level: u8) -> std::result::Result<Self, String> {
        Credibility::new(level).ok_or_else(|| format!("credibility must be 1..=6, got {level}"))
    }
}

impl From<Credibility> for u8 {
    fn from(c: Credibility) -> u8 {
        c.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AdmiraltyRating {
    pub reliability: Reliability,
    pub credibility: Credibility,
}

impl AdmiraltyRating {
    pub fn new(reliability: Reliability, credibility: u8) -> Option<Self> {
        Credibility::new(credibility).map(|credibility| AdmiraltyRating {
            reliability,
            credibility,
        })
    }
}

impl fmt::Display for AdmiraltyRating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.reliability.letter(), self.credibility.0)
    }
}

impl FromStr for AdmiraltyRating {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_rating(s)
    }
}

/// Parses a letter-digit rating such as `C5` or `a2`.
pub fn parse_rating(text: &str) -> Result<AdmiraltyRating> {
    let malformed = || Error::MalformedRating(text.to_string());
    let mut chars = text.trim().chars();
    let (Some(letter), Some(digit), None) = (chars.next(), chars.next(), chars.next()) else {
        return Err(malformed());
    };
    let reliability = match letter.to_ascii_uppercase() {
        'A' => Reliability::A,
        'B' => Reliability::B,
        'C' => Reliability::C,
        'D' => Reliability::D,
        'E' => Reliability::E,
        'F' => Reliability::F,
        _ => return Err(malformed()),
    };
    let level = digit.to_digit(10).ok_or_else(malformed)?;
    AdmiraltyRating::new(reliability, level as u8).ok_or_else(malformed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecisionCategory {
    Usable,
    Risky,
    Unjudged,
}

/// F or 6 cannot be judged; A-C with 1-3 is usable; everything else is risky.
pub fn decision_category(rating: &AdmiraltyRating) -> DecisionCategory {
    if rating.reliability == Reliability::F || rating.credibility.0 == 6 {
        DecisionCategory::Unjudged
    } else if rating.reliability <= Reliability::C && rating.credibility.0 <= 3 {
        DecisionCategory::Usable
    } else {
        DecisionCategory::Risky
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatedState {
    pub state_id: String,
    pub rating: AdmiraltyRating,
    pub category: DecisionCategory,
}

/// States grouped by category, each group in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionLandscape {
    pub usable: Vec<RatedState>,
    pub risky: Vec<RatedState>,
    pub unjudged: Vec<RatedState>,
}

impl DecisionLandscape {
    pub fn len(&self) -> usize {
        self.usable.len() + self.risky.len() + self.unjudged.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All states in group order: usable, risky, unjudged.
    pub fn iter(&self) -> impl Iterator<Item = &RatedState> {
        self.usable.iter().chain(&self.risky).chain(&self.unjudged)
    }
}

pub fn rate_state_set<S: AsRef<str>>(states: &[(S, AdmiraltyRating)]) -> Result<DecisionLandscape> {
    let mut seen = HashSet::new();
    let mut out = DecisionLandscape::default();
    for (id, rating) in states {
        let id = id.as_ref();
        if !seen.insert(id) {
            return Err(Error::DuplicateStateId(id.to_string()));
        }
        let category = decision_category(rating);
        let rated = RatedState {
            state_id: id.to_string(),
            rating: *rating,
            category,
        };
        match category {
            DecisionCategory::Usable => out.usable.push(rated),
            DecisionCategory::Risky => out.risky.push(rated),
            DecisionCategory::Unjudged => out.unjudged.push(rated),
        }
    }
    Ok(out)
}
