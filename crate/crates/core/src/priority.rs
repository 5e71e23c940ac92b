//! Extensible priorities: urgency/incremental pairs, the priority field wire
//! syntax, and the mapping from Chromium request priorities to EPS values.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Urgency level, `0` (most urgent) through `7` (least urgent).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Urgency(u8);

impl Urgency {
    pub const MIN: Urgency = Urgency(0);
    pub const MAX: Urgency = Urgency(7);
    /// Protocol default when `u` is absent.
    pub const DEFAULT: Urgency = Urgency(3);

    pub const fn new(level: u8) -> Option<Urgency> {
        if level <= 7 {
            Some(Urgency(level))
        } else {
            None
        }
    }

    pub const fn level(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Urgency> {
        (0..=7).map(Urgency)
    }
}

impl fmt::Display for Urgency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// The scheduling signal carried by a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EpsPriority {
    pub urgency: Urgency,
    /// `true` for incremental (I) delivery, `false` for non-incremental (N).
    pub incremental: bool,
}

impl EpsPriority {
    pub const DEFAULT: EpsPriority = EpsPriority {
        urgency: Urgency::DEFAULT,
        incremental: false,
    };

    /// Panics if `urgency > 7`; use [`Urgency::new`] for fallible construction.
    pub const fn new(urgency: u8, incremental: bool) -> EpsPriority {
        match Urgency::new(urgency) {
            Some(urgency) => EpsPriority {
                urgency,
                incremental,
            },
            None => panic!("urgency out of range"),
        }
    }

    pub fn non_incremental(urgency: Urgency) -> EpsPriority {
        EpsPriority {
            urgency,
            incremental: false,
        }
    }

    pub fn incremental(urgency: Urgency) -> EpsPriority {
        EpsPriority {
            urgency,
            incremental: true,
        }
    }

    /// Every one of the sixteen representable priorities.
    pub fn all() -> impl Iterator<Item = EpsPriority> {
        Urgency::all().flat_map(|u| [EpsPriority::non_incremental(u), EpsPriority::incremental(u)])
    }
}

impl Default for EpsPriority {
    fn default() -> Self {
        EpsPriority::DEFAULT
    }
}

/// Canonical form: `u=<n>`, followed by `, i` when incremental.
impl fmt::Display for EpsPriority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u={}", self.urgency)?;
        if self.incremental {
            f.write_str(", i")?;
        }
        Ok(())
    }
}

impl FromStr for EpsPriority {
    type Err = PriorityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_priority(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PriorityError {
    #[error("malformed priority field at byte {offset}: {reason}")]
    MalformedField { offset: usize, reason: &'static str },
    #[error("urgency {0} is outside 0..=7")]
    UrgencyOutOfRange(i64),
    #[error("parameter `{0}` appears more than once")]
    DuplicateParameter(char),
}

fn malformed(offset: usize, reason: &'static str) -> PriorityError {
    PriorityError::MalformedField { offset, reason }
}

fn is_ows(b: u8) -> bool {
    b == b' ' || b == b'\t'
}

/// Parses a priority field such as `u=5, i`.
///
/// Only the `u` and `i` parameters are understood. `u` takes an integer and
/// `i` is a bare flag or an explicit boolean (`i=?1` / `i=?0`). Members are
/// comma separated with optional spaces or tabs around them. Absent
/// parameters take the protocol defaults (`u=3`, non-incremental).
pub fn parse_priority(text: &str) -> Result<EpsPriority, PriorityError> {
    let bytes = text.as_bytes();
    if let Some(pos) = bytes.iter().position(|b| !b.is_ascii()) {
        return Err(malformed(pos, "non-ascii byte"));
    }

    let mut urgency: Option<Urgency> = None;
    let mut incremental: Option<bool> = None;

    let mut pos = 0;
    let skip_ows = |mut p: usize| {
        while p < bytes.len() && is_ows(bytes[p]) {
            p += 1;
        }
        p
    };

    pos = skip_ows(pos);
    if pos == bytes.len() {
        return Ok(EpsPriority::DEFAULT);
    }

    loop {
        let key_start = pos;
        let key = match bytes.get(pos) {
            Some(b'u') => 'u',
            Some(b'i') => 'i',
            Some(_) => return Err(malformed(pos, "unknown parameter")),
            None => return Err(malformed(pos, "expected parameter")),
        };
        pos += 1;
        // Keys are single characters; `ui` or `urgency` are different keys.
        if let Some(b) = bytes.get(pos) {
            if b.is_ascii_lowercase()
                || b.is_ascii_digit()
                || matches!(b, b'_' | b'-' | b'.' | b'*')
            {
                return Err(malformed(key_start, "unknown parameter"));
            }
        }

        match key {
            'u' => {
                if urgency.is_some() {
                    return Err(PriorityError::DuplicateParameter('u'));
                }
                if bytes.get(pos) != Some(&b'=') {
                    return Err(malformed(pos, "expected `=` after `u`"));
                }
                pos += 1;
                let (value, next) = parse_integer(bytes, pos)?;
                pos = next;
                let level = u8::try_from(value)
                    .ok()
                    .and_then(Urgency::new)
                    .ok_or(PriorityError::UrgencyOutOfRange(value))?;
                urgency = Some(level);
            }
            _ => {
                if incremental.is_some() {
                    return Err(PriorityError::DuplicateParameter('i'));
                }
                let mut value = true;
                if bytes.get(pos) == Some(&b'=') {
                    pos += 1;
                    value = match (bytes.get(pos), bytes.get(pos + 1)) {
                        (Some(b'?'), Some(b'1')) => true,
                        (Some(b'?'), Some(b'0')) => false,
                        _ => return Err(malformed(pos, "expected boolean `?0` or `?1`")),
                    };
                    pos += 2;
                }
                incremental = Some(value);
            }
        }

        pos = skip_ows(pos);
        match bytes.get(pos) {
            None => break,
            Some(b',') => {
                pos = skip_ows(pos + 1);
                if pos == bytes.len() {
                    return Err(malformed(pos, "trailing comma"));
                }
            }
            Some(_) => return Err(malformed(pos, "expected `,` between parameters")),
        }
    }

    Ok(EpsPriority {
        urgency: urgency.unwrap_or(Urgency::DEFAULT),
        incremental: incremental.unwrap_or(false),
    })
}

/// Structured-field integer: optional `-`, then 1 to 15 digits.
fn parse_integer(bytes: &[u8], start: usize) -> Result<(i64, usize), PriorityError> {
    let mut pos = start;
    let negative = bytes.get(pos) == Some(&b'-');
    if negative {
        pos += 1;
    }
    let digits_start = pos;
    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
        pos += 1;
    }
    let digits = pos - digits_start;
    if digits == 0 {
        return Err(malformed(digits_start, "expected integer"));
    }
    if digits > 15 {
        return Err(malformed(digits_start, "integer longer than 15 digits"));
    }
    let magnitude: i64 = std::str::from_utf8(&bytes[digits_start..pos])
        .expect("ascii digits")
        .parse()
        .expect("at most 15 digits fits in i64");
    Ok((if negative { -magnitude } else { magnitude }, pos))
}

pub fn serialize_priority(p: EpsPriority) -> String {
    p.to_string()
}

/// Chromium's request priority buckets, declared from highest to lowest.
///
/// `Ord` follows importance, so `VeryHigh > High > ... > VeryLow`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChromiumPriority {
    VeryHigh,
    High,
    Medium,
    Low,
    VeryLow,
}

impl ChromiumPriority {
    pub const ALL: [ChromiumPriority; 5] = [
        ChromiumPriority::VeryHigh,
        ChromiumPriority::High,
        ChromiumPriority::Medium,
        ChromiumPriority::Low,
        ChromiumPriority::VeryLow,
    ];

    fn rank(self) -> u8 {
        match self {
            ChromiumPriority::VeryHigh => 4,
            ChromiumPriority::High => 3,
            ChromiumPriority::Medium => 2,
            ChromiumPriority::Low => 1,
            ChromiumPriority::VeryLow => 0,
        }
    }
}

impl PartialOrd for ChromiumPriority {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ChromiumPriority {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceType {
    Document,
    Stylesheet,
    Font,
    Script,
    Media,
    Other,
}

impl ResourceType {
    pub const ALL: [ResourceType; 6] = [
        ResourceType::Document,
        ResourceType::Stylesheet,
        ResourceType::Font,
        ResourceType::Script,
        ResourceType::Media,
        ResourceType::Other,
    ];
}

/// Looks up the EPS priority for a Chromium priority and resource type.
///
/// Returns `None` for combinations Chromium never produces; those cells are
/// deliberately left unmapped.
pub fn map_chromium(cp: ChromiumPriority, rt: ResourceType) -> Option<EpsPriority> {
    use ChromiumPriority::*;
    use ResourceType::*;

    let (urgency, incremental) = match (cp, rt) {
        (VeryHigh, Document) => (0, false),
        (VeryHigh, Stylesheet) => (1, false),
        (VeryHigh, Font) => (1, false),

        (High, Font) => (2, false),
        (High, Script) => (2, false),
        (High, Media) => (3, true),

        (Medium, Script) => (3, false),
        (Medium, Media) => (4, true),

        (Low, Script) => (4, true),
        (Low, Media) => (5, true),
        (Low, Other) => (5, true),

        (VeryLow, Other) => (6, true),

        _ => return None,
    };
    Some(EpsPriority::new(urgency, incremental))
}

/// [`map_chromium`], falling back to `u=3` non-incremental for unmapped cells.
pub fn effective_priority(cp: ChromiumPriority, rt: ResourceType) -> EpsPriority {
    map_chromium(cp, rt).unwrap_or(EpsPriority::DEFAULT)
}
