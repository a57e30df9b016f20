//! Comparing subword vocabularies: overlap, greedy segmentation and
//! fertility (pieces per word).
//!
//! Vocabularies are normalized to bare strings first so that files using
//! different marker conventions (`▁word` vs `##piece`) can be compared.
//! Segmentation is greedy longest-match from the left, a stand-in for the
//! tokenizer's own inference that only needs the vocabulary.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::{ratio, Scalar};

/// How a vocabulary file marks word boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub enum MarkerConvention {
    #[default]
    Bare,
    /// Word-initial pieces carry the marker, e.g. SentencePiece `▁`.
    WordInitial(String),
    /// Continuation pieces carry the marker, e.g. WordPiece `##`.
    Continuation(String),
}

impl MarkerConvention {
    fn strip<'a>(&self, entry: &'a str) -> &'a str {
        match self {
            MarkerConvention::Bare => entry,
            MarkerConvention::WordInitial(m) | MarkerConvention::Continuation(m) => {
                entry.strip_prefix(m.as_str()).unwrap_or(entry)
            }
        }
    }
}

impl FromStr for MarkerConvention {
    type Err = Error;

    /// `none`, `prefix:<marker>` or `continuation:<marker>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::config(format!(
                "bad marker declaration '{s}' (expected none, prefix:<marker> or continuation:<marker>)"
            ))
        };
        if s.eq_ignore_ascii_case("none") || s.eq_ignore_ascii_case("bare") {
            return Ok(MarkerConvention::Bare);
        }
        let (kind, marker) = s.split_once(':').ok_or_else(bad)?;
        if marker.is_empty() {
            return Err(bad());
        }
        match kind {
            "prefix" => Ok(MarkerConvention::WordInitial(marker.to_string())),
            "continuation" => Ok(MarkerConvention::Continuation(marker.to_string())),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for MarkerConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkerConvention::Bare => f.write_str("none"),
            MarkerConvention::WordInitial(m) => write!(f, "prefix:{m}"),
            MarkerConvention::Continuation(m) => write!(f, "continuation:{m}"),
        }
    }
}

/// A non-empty set of bare subword strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    entries: BTreeSet<String>,
    longest: usize,
}

impl Vocabulary {
    fn from_set(entries: BTreeSet<String>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("vocabulary is empty"));
        }
        let longest = entries.iter().map(|e| e.chars().count()).max().unwrap_or(0);
        Ok(Vocabulary { entries, longest })
    }

    pub fn contains(&self, piece: &str) -> bool {
        self.entries.contains(piece)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }

    /// Lower-cased copy.
    pub fn folded(&self) -> Vocabulary {
        let entries = self.entries.iter().map(|e| e.to_lowercase()).collect();
        Vocabulary::from_set(entries).expect("folding keeps the set non-empty")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedVocabulary {
    pub vocab: Vocabulary,
    /// Entries that collapsed onto an existing one after marker stripping.
    pub duplicates: usize,
    /// Entries that were only a marker.
    pub dropped_empty: usize,
}

pub fn normalize_vocab<I, S>(raw: I, convention: &MarkerConvention) -> Result<NormalizedVocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut entries = BTreeSet::new();
    let (mut duplicates, mut dropped_empty) = (0, 0);
    for entry in raw {
        let bare = convention.strip(entry.as_ref());
        if bare.is_empty() {
            dropped_empty += 1;
        } else if !entries.insert(bare.to_string()) {
            duplicates += 1;
        }
    }
    Ok(NormalizedVocabulary { vocab: Vocabulary::from_set(entries)?, duplicates, dropped_empty })
}

/// Entries of a vocabulary file: one per line, anything after a tab (such as
/// a score column) ignored, blank lines skipped.
pub fn vocab_file_entries(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(|l| l.split('\t').next().unwrap_or_default().trim_end_matches('\r')).filter(|l| !l.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntersectionStats<T> {
    pub shared: usize,
    pub a_size: usize,
    pub b_size: usize,
    /// `|a ∩ b| / |a|`, the headline number.
    pub rate_a: T,
    pub rate_b: T,
    pub jaccard: T,
}

pub fn intersection_stats<T: Scalar>(a: &Vocabulary, b: &Vocabulary) -> IntersectionStats<T> {
    let shared = a.entries.intersection(&b.entries).count();
    let union = a.len() + b.len() - shared;
    IntersectionStats {
        shared,
        a_size: a.len(),
        b_size: b.len(),
        rate_a: ratio(shared, a.len()),
        rate_b: ratio(shared, b.len()),
        jaccard: ratio(shared, union),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub text: String,
    /// No vocabulary entry matched here; the piece is a single character.
    pub unknown: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub word: String,
    pub pieces: Vec<Piece>,
}

impl Segmentation {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.pieces.iter().map(|p| p.text.as_str()).collect()
    }

    /// Pieces joined with `-`.
    pub fn display(&self) -> String {
        self.texts().join("-")
    }
}

/// Greedy longest-match, left to right. Lossless: the pieces always
/// concatenate back to `word`.
pub fn greedy_segment(word: &str, vocab: &Vocabulary) -> Segmentation {
    let bounds: Vec<usize> = word.char_indices().map(|(i, _)| i).chain([word.len()]).collect();
    let chars = bounds.len() - 1;
    let mut pieces = Vec::new();
    let mut i = 0;
    while i < chars {
        let max = vocab.longest.min(chars - i);
        let hit = (1..=max).rev().find(|&n| vocab.contains(&word[bounds[i]..bounds[i + n]]));
        let n = hit.unwrap_or(1);
        pieces.push(Piece { text: word[bounds[i]..bounds[i + n]].to_string(), unknown: hit.is_none() });
        i += n;
    }
    Segmentation { word: word.to_string(), pieces }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FertilityStats<T> {
    pub words: usize,
    /// Mean pieces per word.
    pub mean: T,
    pub max: usize,
    /// Nearest-rank 95th percentile of pieces per word.
    pub p95: usize,
}

pub fn fertility<T: Scalar, S: AsRef<str>>(words: &[S], vocab: &Vocabulary) -> Result<FertilityStats<T>> {
    if words.is_empty() {
        return Err(Error::invalid("fertility needs at least one word"));
    }
    let mut lengths = Vec::with_capacity(words.len());
    for w in words {
        let w = w.as_ref();
        if w.is_empty() {
            return Err(Error::invalid("corpus contains an empty word"));
        }
        lengths.push(greedy_segment(w, vocab).len());
    }
    lengths.sort_unstable();
    let n = lengths.len();
    let rank = (95 * n).div_ceil(100).max(1);
    Ok(FertilityStats { words: n, mean: ratio(lengths.iter().sum(), n), max: lengths[n - 1], p95: lengths[rank - 1] })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiffRow {
    pub word: String,
    pub general: String,
    pub specialized: String,
}

/// Side-by-side segmentations, pieces joined with `-`.
pub fn segmentation_diff<S: AsRef<str>>(words: &[S], general: &Vocabulary, specialized: &Vocabulary) -> Vec<DiffRow> {
    words
        .iter()
        .map(|w| {
            let w = w.as_ref();
            DiffRow {
                word: w.to_string(),
                general: greedy_segment(w, general).display(),
                specialized: greedy_segment(w, specialized).display(),
            }
        })
        .collect()
}

/// Everything the vocabulary comparison prints.
#[derive(Debug, Clone, PartialEq)]
pub struct VocabReport<T> {
    pub stats: IntersectionStats<T>,
    pub fertility: Option<(FertilityStats<T>, FertilityStats<T>)>,
    pub diff: Vec<DiffRow>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn vocab(entries: &[&str]) -> Vocabulary {
        normalize_vocab(entries, &MarkerConvention::Bare).unwrap().vocab
    }

    #[test]
    fn normalize_markers() {
        let a = normalize_vocab(["▁chat"], &"prefix:▁".parse().unwrap()).unwrap();
        let b = normalize_vocab(["##ique"], &"continuation:##".parse().unwrap()).unwrap();
        assert_eq!(a.vocab.iter().chain(b.vocab.iter()).collect::<Vec<_>>(), ["chat", "ique"]);

        let n = normalize_vocab(["▁chat", "chat", "▁", "ique"], &MarkerConvention::WordInitial("▁".into())).unwrap();
        assert_eq!(n.vocab.len(), 2);
        assert_eq!((n.duplicates, n.dropped_empty), (1, 1));

        let bare = normalize_vocab(["a", "b"], &MarkerConvention::Bare).unwrap();
        assert_eq!(bare.vocab.iter().collect::<Vec<_>>(), ["a", "b"]);
        assert!(matches!(normalize_vocab(Vec::<&str>::new(), &MarkerConvention::Bare), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn marker_declarations() {
        assert_eq!("none".parse::<MarkerConvention>().unwrap(), MarkerConvention::Bare);
        assert!("suffix:@@".parse::<MarkerConvention>().is_err());
        assert!("prefix:".parse::<MarkerConvention>().is_err());
        assert_eq!("prefix:▁".parse::<MarkerConvention>().unwrap().to_string(), "prefix:▁");
    }

    #[test]
    fn vocab_file_lines() {
        let entries: Vec<&str> = vocab_file_entries("<s>\t0\n▁le\t-3.2\r\n\nchat\n").collect();
        assert_eq!(entries, ["<s>", "▁le", "chat"]);
    }

    #[test]
    fn intersection_examples() {
        let s = intersection_stats::<Rational>(&vocab(&["a", "b", "c", "d"]), &vocab(&["c", "d", "e", "f"]));
        assert_eq!(s.shared, 2);
        assert_eq!((s.rate_a, s.rate_b, s.jaccard), (Rational::new(1, 2), Rational::new(1, 2), Rational::new(1, 3)));
        let a = vocab(&["x", "y"]);
        let s = intersection_stats::<f64>(&a, &a);
        assert_eq!((s.shared, s.rate_a, s.rate_b, s.jaccard), (2, 1.0, 1.0, 1.0));
        let s = intersection_stats::<f64>(&a, &vocab(&["z"]));
        assert_eq!((s.shared, s.rate_a, s.rate_b, s.jaccard), (0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn segment_examples() {
        let v = vocab(&["trans", "thoracique", "t", "tr"]);
        assert_eq!(greedy_segment("transthoracique", &v).texts(), ["trans", "thoracique"]);
        assert_eq!(greedy_segment("trans", &v).texts(), ["trans"]);
        let s = greedy_segment("xyz", &vocab(&["abc"]));
        assert_eq!(s.texts(), ["x", "y", "z"]);
        assert!(s.pieces.iter().all(|p| p.unknown));
        assert!(greedy_segment("", &v).is_empty());
    }

    #[test]
    fn segment_multibyte() {
        let v = vocab(&["écho", "cardi", "ographie"]);
        let s = greedy_segment("échocardiographie", &v);
        assert_eq!(s.display(), "écho-cardi-ographie");
        let s = greedy_segment("ñé", &v);
        assert_eq!(s.texts(), ["ñ", "é"]);
    }

    #[test]
    fn fertility_examples() {
        let v = vocab(&["trans", "thoracique", "le"]);
        let f = fertility::<f64, _>(&["le", "trans"], &v).unwrap();
        assert_eq!(f.mean, 1.0);
        assert_eq!(fertility::<f64, _>(&["transthoracique"], &v).unwrap().mean, 2.0);
        let f = fertility::<Rational, _>(&["le", "transthoracique", "xy"], &v).unwrap();
        assert_eq!(f.mean, Rational::new(5, 3));
        assert_eq!((f.max, f.p95), (2, 2));
        assert!(fertility::<f64, &str>(&[], &v).is_err());
    }

    #[test]
    fn diff_rows() {
        let general = vocab(&["trans", "thorac", "ique"]);
        let special = vocab(&["transthoracique"]);
        let rows = segmentation_diff(&["transthoracique"], &general, &special);
        assert_eq!(rows[0].general, "trans-thorac-ique");
        assert_eq!(rows[0].specialized, "transthoracique");
        let rows = segmentation_diff(&["ique"], &general, &vocab(&["ique"]));
        assert_eq!(rows[0].general, rows[0].specialized);
    }
}
