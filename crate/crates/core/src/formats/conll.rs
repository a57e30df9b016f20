//! Whitespace-separated token/tag columns, one token per line, blank line
//! between sentences.
//!
//! The token is the first column and the tag the last, so files carrying
//! extra feature columns read fine. Lines starting with `#` between
//! sentences are comments.

use crate::error::{Error, Result};
use crate::tagging::{Tag, TagSequence};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub tags: TagSequence,
}

impl Sentence {
    pub fn new(tokens: Vec<String>, tags: TagSequence) -> Result<Self> {
        if tokens.len() != tags.len() {
            return Err(Error::invalid(format!("{} tokens but {} tags", tokens.len(), tags.len())));
        }
        Ok(Sentence { tokens, tags })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub sequences: Vec<Sentence>,
}

impl Document {
    pub fn from_conll(id: impl Into<String>, bytes: &[u8]) -> Result<Self> {
        Ok(Document { id: id.into(), sequences: parse_conll(bytes)? })
    }

    pub fn tag_sequences(&self) -> Vec<TagSequence> {
        self.sequences.iter().map(|s| s.tags.clone()).collect()
    }
}

/// Parses CoNLL text. Tags are not checked against any scheme here.
pub fn parse_conll(bytes: &[u8]) -> Result<Vec<Sentence>> {
    Ok(parse_conll_located(bytes)?.into_iter().map(|(_, s)| s).collect())
}

/// Like [`parse_conll`], pairing each sentence with the 1-based line its
/// first token is on.
pub fn parse_conll_located(bytes: &[u8]) -> Result<Vec<(usize, Sentence)>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Encoding { offset: e.valid_up_to() })?;
    let mut out = Vec::new();
    let mut current = Sentence::default();
    let mut first_line = 0;

    for (idx, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !current.is_empty() {
                out.push((first_line, std::mem::take(&mut current)));
            }
            continue;
        }
        if current.is_empty() && line.starts_with('#') {
            continue;
        }
        let mut cols = line.split_whitespace();
        let token = cols.next().expect("non-blank line has a column");
        let Some(tag) = cols.next_back() else {
            return Err(Error::MalformedLine {
                line: idx + 1,
                detail: format!("expected at least a token and a tag column, got '{line}'"),
            });
        };
        if current.is_empty() {
            first_line = idx + 1;
        }
        current.tokens.push(token.to_string());
        current.tags.push(Tag::parse(tag));
    }
    if !current.is_empty() {
        out.push((first_line, current));
    }
    Ok(out)
}

/// Two columns per line, a blank line after every sentence but the last and
/// a single trailing newline. Empty sentences are skipped.
pub fn write_conll(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences.iter().filter(|s| !s.is_empty()) {
        if !out.is_empty() {
            out.push('\n');
        }
        for (token, tag) in s.tokens.iter().zip(s.tags.iter()) {
            out.push_str(token);
            out.push(' ');
            out.push_str(&tag.to_string());
            out.push('\n');
        }
    }
    out
}
