//! Tag schemes, span decoding/encoding and nested-entity flattening.
//!
//! A tag string is `<PREFIX>-<LABEL>` (split on the first hyphen, so labels
//! may themselves contain hyphens) or a bare `O`. Parsing is total: strings
//! that fit neither shape become [`Tag::Malformed`] and surface later as
//! [`ViolationKind::InvalidPrefix`].
//!
//! IOB2 is the reference scheme. IOB1 and BILOU (with `E`/`S` accepted as
//! synonyms of `L`/`U`) are supported for decoding and encoding.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// The outside label, used both as a tag and as a projected class name.
pub const OUTSIDE: &str = "O";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Prefix {
    B,
    I,
    E,
    S,
    L,
    U,
}

impl Prefix {
    fn from_char(c: char) -> Option<Self> {
        Some(match c {
            'B' => Prefix::B,
            'I' => Prefix::I,
            'E' => Prefix::E,
            'S' => Prefix::S,
            'L' => Prefix::L,
            'U' => Prefix::U,
            _ => return None,
        })
    }

    fn as_char(self) -> char {
        match self {
            Prefix::B => 'B',
            Prefix::I => 'I',
            Prefix::E => 'E',
            Prefix::S => 'S',
            Prefix::L => 'L',
            Prefix::U => 'U',
        }
    }
}

/// One token's tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tag {
    Outside,
    Entity {
        prefix: Prefix,
        label: String,
    },
    /// Anything that is not `O` or `<PREFIX>-<LABEL>`; kept verbatim.
    Malformed(String),
}

impl Tag {
    pub fn parse(s: &str) -> Tag {
        if s == OUTSIDE {
            return Tag::Outside;
        }
        if let Some((prefix, label)) = s.split_once('-') {
            let mut chars = prefix.chars();
            if let (Some(c), None) = (chars.next(), chars.next()) {
                if let Some(prefix) = Prefix::from_char(c) {
                    if !label.is_empty() {
                        return Tag::Entity { prefix, label: label.to_string() };
                    }
                }
            }
        }
        Tag::Malformed(s.to_string())
    }

    pub fn begin(label: impl Into<String>) -> Tag {
        Tag::Entity { prefix: Prefix::B, label: label.into() }
    }

    pub fn inside(label: impl Into<String>) -> Tag {
        Tag::Entity { prefix: Prefix::I, label: label.into() }
    }

    /// Entity label, or `None` for `O` and malformed tags.
    pub fn label(&self) -> Option<&str> {
        match self {
            Tag::Entity { label, .. } => Some(label),
            _ => None,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str(OUTSIDE),
            Tag::Entity { prefix, label } => write!(f, "{}-{}", prefix.as_char(), label),
            Tag::Malformed(raw) => f.write_str(raw),
        }
    }
}

impl From<&str> for Tag {
    fn from(s: &str) -> Self {
        Tag::parse(s)
    }
}

/// Tags of one sentence, one per token.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TagSequence(Vec<Tag>);

impl TagSequence {
    pub fn new(tags: Vec<Tag>) -> Self {
        TagSequence(tags)
    }

    pub fn parse<S: AsRef<str>>(tags: &[S]) -> Self {
        tags.iter().map(|t| Tag::parse(t.as_ref())).collect()
    }

    pub fn all_outside(len: usize) -> Self {
        TagSequence(vec![Tag::Outside; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn tags(&self) -> &[Tag] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Tag> {
        self.0.iter()
    }

    pub fn push(&mut self, tag: Tag) {
        self.0.push(tag);
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(Tag::to_string).collect()
    }
}

impl FromIterator<Tag> for TagSequence {
    fn from_iter<I: IntoIterator<Item = Tag>>(iter: I) -> Self {
        TagSequence(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a TagSequence {
    type Item = &'a Tag;
    type IntoIter = std::slice::Iter<'a, Tag>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// A typed token span, `start..=end`.
///
/// Field order gives the derived ordering `(start, end, label)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl EntitySpan {
    pub fn new(label: impl Into<String>, start: usize, end: usize) -> Self {
        EntitySpan { start, end, label: label.into() }
    }

    /// Token count; spans are never empty.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// `self` lies inside `other` and covers a different range.
    pub fn strictly_within(&self, other: &EntitySpan) -> bool {
        other.start <= self.start && self.end <= other.end && (self.start, self.end) != (other.start, other.end)
    }
}

impl fmt::Display for EntitySpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.label, self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Scheme {
    #[default]
    Iob2,
    Iob1,
    Bilou,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "IOB2" | "BIO" => Ok(Scheme::Iob2),
            "IOB1" => Ok(Scheme::Iob1),
            "BILOU" | "IOBES" | "BIOES" => Ok(Scheme::Bilou),
            _ => Err(Error::config(format!("unknown tag scheme '{s}' (expected IOB2, IOB1 or BILOU)"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Iob2 => "IOB2",
            Scheme::Iob1 => "IOB1",
            Scheme::Bilou => "BILOU",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DecodeMode {
    /// Only legally opened spans count; ill-formed continuations are dropped.
    #[default]
    Strict,
    /// Orphan and type-switching continuations open a new span.
    Repair,
}

impl FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "strict" => Ok(DecodeMode::Strict),
            "repair" => Ok(DecodeMode::Repair),
            _ => Err(Error::config(format!("unknown decode mode '{s}' (expected strict or repair)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    /// Continuation tag with no open entity before it.
    OrphanInside,
    /// Continuation tag whose label differs from the open entity.
    TypeSwitchInside,
    /// Prefix not allowed by the scheme, or an unparseable tag.
    InvalidPrefix,
    /// BILOU only: entity opened at this position is never closed by `L`.
    Unclosed,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::OrphanInside => "orphan-I",
            ViolationKind::TypeSwitchInside => "type-switch-I",
            ViolationKind::InvalidPrefix => "invalid-prefix",
            ViolationKind::Unclosed => "unclosed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SchemeViolation {
    pub position: usize,
    pub kind: ViolationKind,
}

impl SchemeViolation {
    fn new(position: usize, kind: ViolationKind) -> Self {
        SchemeViolation { position, kind }
    }
}

/// Normalized view of a tag under BILOU, where `E`/`S` alias `L`/`U`.
fn bilou_prefix(p: Prefix) -> Prefix {
    match p {
        Prefix::E => Prefix::L,
        Prefix::S => Prefix::U,
        p => p,
    }
}

/// Lists every position that breaks `scheme`. Empty iff the sequence is
/// well-formed.
pub fn validate_tags(seq: &TagSequence, scheme: Scheme) -> Vec<SchemeViolation> {
    let mut out = Vec::new();
    match scheme {
        Scheme::Iob2 => {
            let mut open: Option<&str> = None;
            for (i, tag) in seq.iter().enumerate() {
                match tag {
                    Tag::Entity { prefix: Prefix::B, label } => open = Some(label),
                    Tag::Entity { prefix: Prefix::I, label } => {
                        match open {
                            Some(l) if l == label => {}
                            Some(_) => out.push(SchemeViolation::new(i, ViolationKind::TypeSwitchInside)),
                            None => out.push(SchemeViolation::new(i, ViolationKind::OrphanInside)),
                        }
                        open = Some(label);
                    }
                    Tag::Outside => open = None,
                    _ => {
                        out.push(SchemeViolation::new(i, ViolationKind::InvalidPrefix));
                        open = None;
                    }
                }
            }
        }
        Scheme::Iob1 => {
            for (i, tag) in seq.iter().enumerate() {
                match tag {
                    Tag::Outside | Tag::Entity { prefix: Prefix::B | Prefix::I, .. } => {}
                    _ => out.push(SchemeViolation::new(i, ViolationKind::InvalidPrefix)),
                }
            }
        }
        Scheme::Bilou => {
            // (label, start of the open entity)
            let mut open: Option<(&str, usize)> = None;
            for (i, tag) in seq.iter().enumerate() {
                let (prefix, label) = match tag {
                    Tag::Entity { prefix, label } => (bilou_prefix(*prefix), label.as_str()),
                    other => {
                        if let Some((_, start)) = open.take() {
                            out.push(SchemeViolation::new(start, ViolationKind::Unclosed));
                        }
                        if let Tag::Malformed(_) = other {
                            out.push(SchemeViolation::new(i, ViolationKind::InvalidPrefix));
                        }
                        continue;
                    }
                };
                match prefix {
                    Prefix::B | Prefix::U => {
                        if let Some((_, start)) = open.take() {
                            out.push(SchemeViolation::new(start, ViolationKind::Unclosed));
                        }
                        if prefix == Prefix::B {
                            open = Some((label, i));
                        }
                    }
                    Prefix::I | Prefix::L => {
                        match open {
                            Some((l, _)) if l == label => {}
                            Some(_) => out.push(SchemeViolation::new(i, ViolationKind::TypeSwitchInside)),
                            None => out.push(SchemeViolation::new(i, ViolationKind::OrphanInside)),
                        }
                        open = match (prefix, open) {
                            (Prefix::L, _) => None,
                            (_, Some((l, start))) if l == label => Some((l, start)),
                            _ => Some((label, i)),
                        };
                    }
                    Prefix::E | Prefix::S => unreachable!("normalized by bilou_prefix"),
                }
            }
            if let Some((_, start)) = open {
                out.push(SchemeViolation::new(start, ViolationKind::Unclosed));
            }
            out.sort();
        }
    }
    out
}

struct SpanBuilder {
    spans: Vec<EntitySpan>,
}

impl SpanBuilder {
    fn emit(&mut self, open: Option<(&str, usize)>, end: usize) {
        if let Some((label, start)) = open {
            self.spans.push(EntitySpan::new(label, start, end));
        }
    }
}

/// Decodes entity spans. Total: never fails, whatever the tags look like.
///
/// Output is sorted by `(start, end, label)` and never overlaps.
pub fn decode_entities(seq: &TagSequence, scheme: Scheme, mode: DecodeMode) -> Vec<EntitySpan> {
    let repair = mode == DecodeMode::Repair;
    let mut b = SpanBuilder { spans: Vec::new() };
    let mut open: Option<(&str, usize)> = None;

    for (i, tag) in seq.iter().enumerate() {
        let prev = i.wrapping_sub(1);
        let (prefix, label) = match tag {
            Tag::Entity { prefix, label } => (*prefix, label.as_str()),
            _ => {
                if scheme != Scheme::Bilou || repair {
                    b.emit(open, prev);
                }
                open = None;
                continue;
            }
        };
        let continues = matches!(open, Some((l, _)) if l == label);

        match scheme {
            Scheme::Iob2 => match prefix {
                Prefix::B => {
                    b.emit(open, prev);
                    open = Some((label, i));
                }
                Prefix::I if continues => {}
                Prefix::I => {
                    b.emit(open, prev);
                    open = repair.then_some((label, i));
                }
                _ => {
                    b.emit(open, prev);
                    open = None;
                }
            },
            Scheme::Iob1 => match prefix {
                Prefix::I if continues => {}
                Prefix::B | Prefix::I => {
                    b.emit(open, prev);
                    open = Some((label, i));
                }
                _ => {
                    b.emit(open, prev);
                    open = None;
                }
            },
            Scheme::Bilou => {
                // An entity still open when something else starts is only
                // kept in repair mode.
                let abandon = |b: &mut SpanBuilder, open: Option<(&str, usize)>| {
                    if repair {
                        b.emit(open, prev);
                    }
                };
                match bilou_prefix(prefix) {
                    Prefix::B => {
                        abandon(&mut b, open);
                        open = Some((label, i));
                    }
                    Prefix::I if continues => {}
                    Prefix::I => {
                        abandon(&mut b, open);
                        open = repair.then_some((label, i));
                    }
                    Prefix::L if continues => {
                        b.emit(open, i);
                        open = None;
                    }
                    Prefix::L => {
                        abandon(&mut b, open);
                        if repair {
                            b.emit(Some((label, i)), i);
                        }
                        open = None;
                    }
                    Prefix::U => {
                        abandon(&mut b, open);
                        b.emit(Some((label, i)), i);
                        open = None;
                    }
                    Prefix::E | Prefix::S => unreachable!("normalized by bilou_prefix"),
                }
            }
        }
    }
    if scheme != Scheme::Bilou || repair {
        b.emit(open, seq.len().wrapping_sub(1));
    }
    b.spans
}

fn check_spans(entities: &[EntitySpan], length: usize) -> Result<Vec<EntitySpan>> {
    for e in entities {
        if e.label.is_empty() {
            return Err(Error::invalid(format!("entity {e} has an empty label")));
        }
        if e.start > e.end || e.end >= length {
            return Err(Error::invalid(format!("entity {e} is out of bounds for a sequence of length {length}")));
        }
    }
    let mut sorted = entities.to_vec();
    sorted.sort();
    for pair in sorted.windows(2) {
        if pair[0].overlaps(&pair[1]) {
            return Err(Error::invalid(format!("entities {} and {} overlap", pair[0], pair[1])));
        }
    }
    Ok(sorted)
}

/// Writes non-overlapping spans back out as tags. Inverse of
/// [`decode_entities`] in strict mode.
pub fn encode_entities(entities: &[EntitySpan], length: usize, scheme: Scheme) -> Result<TagSequence> {
    let sorted = check_spans(entities, length)?;
    let mut tags = vec![Tag::Outside; length];
    let mut prev: Option<&EntitySpan> = None;
    for e in &sorted {
        let label = || e.label.clone();
        match scheme {
            Scheme::Iob2 => {
                tags[e.start] = Tag::begin(label());
                for t in &mut tags[e.start + 1..=e.end] {
                    *t = Tag::inside(label());
                }
            }
            Scheme::Iob1 => {
                let adjacent_same = prev.is_some_and(|p| p.end + 1 == e.start && p.label == e.label);
                for t in &mut tags[e.start..=e.end] {
                    *t = Tag::inside(label());
                }
                if adjacent_same {
                    tags[e.start] = Tag::begin(label());
                }
            }
            Scheme::Bilou => {
                if e.start == e.end {
                    tags[e.start] = Tag::Entity { prefix: Prefix::U, label: label() };
                } else {
                    tags[e.start] = Tag::begin(label());
                    for t in &mut tags[e.start + 1..e.end] {
                        *t = Tag::inside(label());
                    }
                    tags[e.end] = Tag::Entity { prefix: Prefix::L, label: label() };
                }
            }
        }
        prev = Some(e);
    }
    Ok(TagSequence(tags))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FlattenStrategy {
    /// Drop every entity strictly inside another; resolve partial overlaps
    /// by keeping the longer span (then earlier start, then smaller label).
    #[default]
    KeepCoarsest,
    /// Merge each overlapping group into one envelope span whose label joins
    /// the members' labels with `+`.
    Concatenate,
    /// Refuse any overlap.
    Error,
}

impl FromStr for FlattenStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "keep-coarsest" => Ok(FlattenStrategy::KeepCoarsest),
            "concatenate" => Ok(FlattenStrategy::Concatenate),
            "error" => Ok(FlattenStrategy::Error),
            _ => Err(Error::config(format!(
                "unknown nesting strategy '{s}' (expected keep-coarsest, concatenate or error)"
            ))),
        }
    }
}

/// Longest first, then leftmost, then by label.
fn coarseness_order(a: &EntitySpan, b: &EntitySpan) -> std::cmp::Ordering {
    b.len().cmp(&a.len()).then(a.start.cmp(&b.start)).then_with(|| a.label.cmp(&b.label))
}

/// Removes nesting and overlap so the result can be tagged. Output is sorted
/// and pairwise non-overlapping.
pub fn flatten_nested(entities: &[EntitySpan], strategy: FlattenStrategy) -> Result<Vec<EntitySpan>> {
    for e in entities {
        if e.start > e.end || e.label.is_empty() {
            return Err(Error::invalid(format!("ill-formed entity span {e}")));
        }
    }
    let unique: Vec<EntitySpan> = entities.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();

    match strategy {
        FlattenStrategy::Error => {
            let mut sorted = entities.to_vec();
            sorted.sort();
            for (i, a) in sorted.iter().enumerate() {
                if let Some(b) = sorted[i + 1..].iter().find(|b| a.overlaps(b)) {
                    return Err(Error::NestedEntities(format!("{a} overlaps {b}")));
                }
            }
            Ok(sorted)
        }
        FlattenStrategy::KeepCoarsest => {
            let mut survivors: Vec<&EntitySpan> =
                unique.iter().filter(|a| !unique.iter().any(|b| a.strictly_within(b))).collect();
            survivors.sort_by(|a, b| coarseness_order(a, b));
            let mut kept: Vec<EntitySpan> = Vec::with_capacity(survivors.len());
            for s in survivors {
                if !kept.iter().any(|k| k.overlaps(s)) {
                    kept.push(s.clone());
                }
            }
            kept.sort();
            Ok(kept)
        }
        FlattenStrategy::Concatenate => {
            // `unique` is sorted by start, so a sweep over the running
            // envelope finds the connected overlap groups.
            let mut groups: Vec<Vec<&EntitySpan>> = Vec::new();
            let mut reach = 0usize;
            for e in &unique {
                match groups.last_mut() {
                    Some(g) if e.start <= reach => {
                        g.push(e);
                        reach = reach.max(e.end);
                    }
                    _ => {
                        groups.push(vec![e]);
                        reach = e.end;
                    }
                }
            }
            let merged = groups
                .into_iter()
                .map(|mut g| {
                    if g.len() == 1 {
                        return g[0].clone();
                    }
                    let start = g.iter().map(|e| e.start).min().unwrap_or_default();
                    let end = g.iter().map(|e| e.end).max().unwrap_or_default();
                    g.sort_by(|a, b| coarseness_order(a, b));
                    let label = g.iter().map(|e| e.label.as_str()).collect::<Vec<_>>().join("+");
                    EntitySpan::new(label, start, end)
                })
                .collect();
            Ok(merged)
        }
    }
}

/// Class name per token: the entity label on the first token of each decoded
/// entity, `O` everywhere else.
pub fn project_first_token_labels(seq: &TagSequence, scheme: Scheme, mode: DecodeMode) -> Vec<String> {
    let mut labels = vec![OUTSIDE.to_string(); seq.len()];
    for e in decode_entities(seq, scheme, mode) {
        labels[e.start] = e.label;
    }
    labels
}

/// How token-level evaluation names its classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TokenClasses {
    /// The tag itself: `B-X` and `I-X` are distinct classes.
    #[default]
    Raw,
    /// The entity label only: `B-X` and `I-X` both count as `X`.
    Collapsed,
}

impl FromStr for TokenClasses {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(TokenClasses::Raw),
            "collapsed" => Ok(TokenClasses::Collapsed),
            _ => Err(Error::config(format!("unknown token-class granularity '{s}' (expected raw or collapsed)"))),
        }
    }
}

pub fn token_class_labels(seq: &TagSequence, classes: TokenClasses) -> Vec<String> {
    seq.iter()
        .map(|t| match (classes, t) {
            (TokenClasses::Collapsed, Tag::Entity { label, .. }) => label.clone(),
            _ => t.to_string(),
        })
        .collect()
}
