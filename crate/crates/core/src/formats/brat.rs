//! BRAT standoff `.ann` files.
//!
//! Only text-bound annotations (`T` lines) are read:
//! `T<id>\t<label> <start> <end>[;<start> <end>...]\t<surface>`.
//! Offsets are character positions, end exclusive. Relations, attributes,
//! events and notes are skipped.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Half-open character range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Fragment {
    pub start: usize,
    pub end: usize,
}

impl Fragment {
    pub fn new(start: usize, end: usize) -> Self {
        Fragment { start, end }
    }
}

impl fmt::Display for Fragment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StandoffEntity {
    pub id: String,
    pub label: String,
    /// Non-empty, sorted, non-overlapping.
    pub fragments: Vec<Fragment>,
    pub surface: Option<String>,
}

impl StandoffEntity {
    /// Sorts the fragments and rejects empty, inverted or overlapping ones.
    pub fn new(id: impl Into<String>, label: impl Into<String>, mut fragments: Vec<Fragment>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::invalid("entity label is empty"));
        }
        if fragments.is_empty() {
            return Err(Error::invalid("entity has no fragments"));
        }
        if let Some(f) = fragments.iter().find(|f| f.start >= f.end) {
            return Err(Error::invalid(format!("fragment {f} is empty or inverted")));
        }
        fragments.sort();
        if let Some(w) = fragments.windows(2).find(|w| w[1].start < w[0].end) {
            return Err(Error::invalid(format!("fragments {} and {} overlap", w[0], w[1])));
        }
        Ok(StandoffEntity { id: id.into(), label, fragments, surface: None })
    }

    pub fn with_surface(mut self, surface: impl Into<String>) -> Self {
        self.surface = Some(surface.into());
        self
    }

    /// First start to last end.
    pub fn envelope(&self) -> Fragment {
        Fragment::new(self.fragments[0].start, self.fragments[self.fragments.len() - 1].end)
    }
}

/// Annotations of one document, keyed by document id (usually the file stem).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StandoffDocument {
    pub id: String,
    pub entities: Vec<StandoffEntity>,
}

impl StandoffDocument {
    pub fn new(id: impl Into<String>, entities: Vec<StandoffEntity>) -> Self {
        StandoffDocument { id: id.into(), entities }
    }

    pub fn from_ann(id: impl Into<String>, text: &str) -> Result<Self> {
        Ok(StandoffDocument::new(id, parse_brat_ann(text)?))
    }
}

fn parse_offset(s: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::MalformedAnnotation { line, detail: format!("offset '{s}' is not a non-negative integer") })
}

fn parse_text_bound(line_no: usize, line: &str) -> Result<StandoffEntity> {
    let malformed = |detail: String| Error::MalformedAnnotation { line: line_no, detail };
    let mut fields = line.splitn(3, '\t');
    let id = fields.next().unwrap_or_default();
    let head = fields.next().ok_or_else(|| malformed(format!("expected tab-separated fields in '{line}'")))?;
    let surface = fields.next();

    let head = head.trim();
    let (label, offsets) =
        head.split_once(char::is_whitespace).ok_or_else(|| malformed(format!("missing offsets in '{head}'")))?;

    let mut fragments = Vec::new();
    for part in offsets.split(';') {
        let nums: Vec<&str> = part.split_whitespace().collect();
        let [start, end] = nums[..] else {
            return Err(malformed(format!("expected '<start> <end>', got '{}'", part.trim())));
        };
        fragments.push(Fragment::new(parse_offset(start, line_no)?, parse_offset(end, line_no)?));
    }
    let entity = StandoffEntity::new(id, label, fragments).map_err(|e| match e {
        Error::InvalidInput(detail) => malformed(detail),
        other => other,
    })?;
    Ok(match surface {
        Some(s) => entity.with_surface(s),
        None => entity,
    })
}

pub fn parse_brat_ann(text: &str) -> Result<Vec<StandoffEntity>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.starts_with('T') {
            out.push(parse_text_bound(idx + 1, line)?);
        }
    }
    Ok(out)
}
