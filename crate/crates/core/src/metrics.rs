//! Counting kernels and precision/recall/F1 averaging.
//!
//! Every kernel produces [`MatchCounts`]: per class, the number of true
//! positives and the gold and predicted totals. Counts from separate shards
//! can simply be added. Scores are computed from counts in any [`Scalar`].
//!
//! Division by zero yields `0` and sets the matching flag in [`Undefined`].

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats::brat::{Fragment, StandoffEntity};
use crate::scalar::{ratio, Scalar};
use crate::tagging::{EntitySpan, OUTSIDE};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub gold: usize,
    pub pred: usize,
}

impl Counts {
    pub fn new(tp: usize, gold: usize, pred: usize) -> Self {
        Counts { tp, gold, pred }
    }

    pub fn undefined(&self) -> Undefined {
        Undefined { precision: self.pred == 0, recall: self.gold == 0, f1: self.tp == 0 }
    }
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, rhs: Counts) -> Counts {
        Counts::new(self.tp + rhs.tp, self.gold + rhs.gold, self.pred + rhs.pred)
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        *self = *self + rhs;
    }
}

/// Per-class match counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchCounts {
    classes: BTreeMap<String, Counts>,
}

impl MatchCounts {
    pub fn new() -> Self {
        Self::default()
    }

    fn entry(&mut self, label: &str) -> &mut Counts {
        if !self.classes.contains_key(label) {
            self.classes.insert(label.to_string(), Counts::default());
        }
        self.classes.get_mut(label).expect("just inserted")
    }

    pub fn record(&mut self, label: &str, counts: Counts) {
        *self.entry(label) += counts;
    }

    pub fn get(&self, label: &str) -> Counts {
        self.classes.get(label).copied().unwrap_or_default()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.classes.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Counts)> {
        self.classes.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Pooled counts over every class.
    pub fn total(&self) -> Counts {
        self.classes.values().fold(Counts::default(), |acc, c| acc + *c)
    }
}

impl AddAssign<&MatchCounts> for MatchCounts {
    fn add_assign(&mut self, rhs: &MatchCounts) {
        for (label, counts) in rhs.iter() {
            self.record(label, counts);
        }
    }
}

impl Add for MatchCounts {
    type Output = MatchCounts;

    fn add(mut self, rhs: MatchCounts) -> MatchCounts {
        self += &rhs;
        self
    }
}

impl std::iter::Sum for MatchCounts {
    fn sum<I: Iterator<Item = MatchCounts>>(iter: I) -> Self {
        iter.fold(MatchCounts::new(), Add::add)
    }
}

/// Which scores fell back to zero because their denominator was zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Undefined {
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

impl Undefined {
    pub fn any(&self) -> bool {
        self.precision || self.recall || self.f1
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.precision {
            out.push("precision");
        }
        if self.recall {
            out.push("recall");
        }
        if self.f1 {
            out.push("f1");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Prf<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
}

impl<T: Scalar> Prf<T> {
    pub fn zero() -> Self {
        Prf { precision: T::zero(), recall: T::zero(), f1: T::zero() }
    }

    pub fn to_f64(&self) -> Prf<f64> {
        Prf { precision: self.precision.as_f64(), recall: self.recall.as_f64(), f1: self.f1.as_f64() }
    }
}

/// Harmonic mean, zero when both inputs are zero.
pub fn f1_of<T: Scalar>(precision: T, recall: T) -> T {
    let sum = precision + recall;
    if sum == T::zero() {
        T::zero()
    } else {
        (T::one() + T::one()) * precision * recall / sum
    }
}

/// Precision, recall and F1 for one set of counts.
pub fn prf<T: Scalar>(counts: Counts) -> Prf<T> {
    let precision = ratio(counts.tp, counts.pred);
    let recall = ratio(counts.tp, counts.gold);
    Prf { precision, recall, f1: f1_of(precision, recall) }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore<T> {
    pub label: String,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    /// Gold count for the class.
    pub support: usize,
    pub undefined: Undefined,
}

impl<T: Scalar> ClassScore<T> {
    pub fn from_counts(label: impl Into<String>, counts: Counts) -> Self {
        let p = prf::<T>(counts);
        ClassScore {
            label: label.into(),
            precision: p.precision,
            recall: p.recall,
            f1: p.f1,
            support: counts.gold,
            undefined: counts.undefined(),
        }
    }

    pub fn prf(&self) -> Prf<T> {
        Prf { precision: self.precision, recall: self.recall, f1: self.f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AverageMode {
    Micro,
    Macro,
    Weighted,
}

impl AverageMode {
    pub const ALL: [AverageMode; 3] = [AverageMode::Micro, AverageMode::Macro, AverageMode::Weighted];

    pub fn name(self) -> &'static str {
        match self {
            AverageMode::Micro => "micro",
            AverageMode::Macro => "macro",
            AverageMode::Weighted => "weighted",
        }
    }
}

impl fmt::Display for AverageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Averages `per_class`. Micro pools the raw counts of exactly the classes
/// listed in `per_class`; an empty class set averages to zero.
pub fn average<T: Scalar>(per_class: &[ClassScore<T>], raw: &MatchCounts, mode: AverageMode) -> Prf<T> {
    if per_class.is_empty() {
        return Prf::zero();
    }
    match mode {
        AverageMode::Micro => {
            let pooled = per_class.iter().fold(Counts::default(), |acc, c| acc + raw.get(&c.label));
            prf(pooled)
        }
        AverageMode::Macro => {
            let n = T::from_count(per_class.len());
            let sum = per_class.iter().fold(Prf::zero(), |acc: Prf<T>, c| Prf {
                precision: acc.precision + c.precision,
                recall: acc.recall + c.recall,
                f1: acc.f1 + c.f1,
            });
            Prf { precision: sum.precision / n, recall: sum.recall / n, f1: sum.f1 / n }
        }
        AverageMode::Weighted => {
            let total: usize = per_class.iter().map(|c| c.support).sum();
            if total == 0 {
                return Prf::zero();
            }
            let total = T::from_count(total);
            let sum = per_class.iter().fold(Prf::zero(), |acc: Prf<T>, c| {
                let w = T::from_count(c.support);
                Prf {
                    precision: acc.precision + w * c.precision,
                    recall: acc.recall + w * c.recall,
                    f1: acc.f1 + w * c.f1,
                }
            });
            Prf { precision: sum.precision / total, recall: sum.recall / total, f1: sum.f1 / total }
        }
    }
}

/// Per-class rows plus the three averages.
#[derive(Debug, Clone, PartialEq)]
pub struct Report<T> {
    /// Every class row, sorted by label, including excluded ones.
    pub classes: Vec<ClassScore<T>>,
    /// Classes shown as rows but left out of every average.
    pub excluded: Vec<String>,
    pub micro: Prf<T>,
    pub macro_avg: Prf<T>,
    pub weighted: Prf<T>,
    pub counts: MatchCounts,
    /// Entity-level strict score on the same inputs, when the methodology
    /// reports one next to its own numbers.
    pub entity_strict: Option<Prf<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> Report<T> {
    pub fn from_counts(counts: MatchCounts) -> Self {
        Self::from_counts_excluding(counts, &[])
    }

    pub fn from_counts_excluding(counts: MatchCounts, exclude: &[&str]) -> Self {
        let classes: Vec<ClassScore<T>> = counts.iter().map(|(label, c)| ClassScore::from_counts(label, c)).collect();
        let averaged: Vec<ClassScore<T>> =
            classes.iter().filter(|c| !exclude.contains(&c.label.as_str())).cloned().collect();
        let excluded =
            classes.iter().filter(|c| exclude.contains(&c.label.as_str())).map(|c| c.label.clone()).collect();
        Report {
            micro: average(&averaged, &counts, AverageMode::Micro),
            macro_avg: average(&averaged, &counts, AverageMode::Macro),
            weighted: average(&averaged, &counts, AverageMode::Weighted),
            classes,
            excluded,
            counts,
            entity_strict: None,
            warnings: Vec::new(),
        }
    }

    pub fn empty() -> Self {
        Self::from_counts(MatchCounts::new())
    }

    pub fn averaged(&self, mode: AverageMode) -> Prf<T> {
        match mode {
            AverageMode::Micro => self.micro,
            AverageMode::Macro => self.macro_avg,
            AverageMode::Weighted => self.weighted,
        }
    }

    pub fn class(&self, label: &str) -> Option<&ClassScore<T>> {
        self.classes.iter().find(|c| c.label == label)
    }

    /// Total gold support over the averaged classes.
    pub fn support(&self) -> usize {
        self.classes.iter().filter(|c| !self.excluded.contains(&c.label)).map(|c| c.support).sum()
    }

    pub fn to_f64(&self) -> Report<f64> {
        Report {
            classes: self
                .classes
                .iter()
                .map(|c| ClassScore {
                    label: c.label.clone(),
                    precision: c.precision.as_f64(),
                    recall: c.recall.as_f64(),
                    f1: c.f1.as_f64(),
                    support: c.support,
                    undefined: c.undefined,
                })
                .collect(),
            excluded: self.excluded.clone(),
            micro: self.micro.to_f64(),
            macro_avg: self.macro_avg.to_f64(),
            weighted: self.weighted.to_f64(),
            counts: self.counts.clone(),
            entity_strict: self.entity_strict.map(|p| p.to_f64()),
            warnings: self.warnings.clone(),
        }
    }
}

/// Exact label-and-boundary matching; each gold span is used at most once.
pub fn match_entities(gold: &[EntitySpan], pred: &[EntitySpan]) -> MatchCounts {
    let mut counts = MatchCounts::new();
    let mut unmatched: BTreeMap<&EntitySpan, usize> = BTreeMap::new();
    for g in gold {
        *unmatched.entry(g).or_default() += 1;
        counts.record(&g.label, Counts::new(0, 1, 0));
    }
    for p in pred {
        let tp = match unmatched.get_mut(p) {
            Some(n) if *n > 0 => {
                *n -= 1;
                1
            }
            _ => 0,
        };
        counts.record(&p.label, Counts::new(tp, 0, 1));
    }
    counts
}

/// Whether the `O` class takes part in averaging for token-level scoring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OPolicy {
    #[default]
    IncludeO,
    /// `O` still gets a row but is left out of every average.
    ExcludeO,
}

impl OPolicy {
    pub fn excluded(self) -> &'static [&'static str] {
        match self {
            OPolicy::IncludeO => &[],
            OPolicy::ExcludeO => &[OUTSIDE],
        }
    }
}

impl FromStr for OPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "include" | "include-o" => Ok(OPolicy::IncludeO),
            "exclude" | "exclude-o" => Ok(OPolicy::ExcludeO),
            _ => Err(Error::config(format!("unknown O policy '{s}' (expected include or exclude)"))),
        }
    }
}

/// Independent per-token classification counts.
pub fn token_counts<S: AsRef<str>>(gold: &[S], pred: &[S]) -> Result<MatchCounts> {
    if gold.len() != pred.len() {
        return Err(Error::invalid(format!(
            "token label lists differ in length ({} gold, {} predicted)",
            gold.len(),
            pred.len()
        )));
    }
    let mut counts = MatchCounts::new();
    for (g, p) in gold.iter().zip(pred) {
        let (g, p) = (g.as_ref(), p.as_ref());
        if g == p {
            counts.record(g, Counts::new(1, 1, 1));
        } else {
            counts.record(g, Counts::new(0, 1, 0));
            counts.record(p, Counts::new(0, 0, 1));
        }
    }
    Ok(counts)
}

/// Exact character-offset matching: label and the full fragment list must
/// agree. Greedy one-to-one over sorted entities.
pub fn offset_match(gold: &[StandoffEntity], pred: &[StandoffEntity]) -> MatchCounts {
    fn key(e: &StandoffEntity) -> (&[Fragment], &str) {
        (&e.fragments, &e.label)
    }
    let mut gold_sorted: Vec<&StandoffEntity> = gold.iter().collect();
    gold_sorted.sort_by(|a, b| key(a).cmp(&key(b)));
    let mut pred_sorted: Vec<&StandoffEntity> = pred.iter().collect();
    pred_sorted.sort_by(|a, b| key(a).cmp(&key(b)));

    let mut counts = MatchCounts::new();
    let mut used = vec![false; gold_sorted.len()];
    for g in &gold_sorted {
        counts.record(&g.label, Counts::new(0, 1, 0));
    }
    for p in &pred_sorted {
        let hit = gold_sorted.iter().enumerate().position(|(i, g)| !used[i] && key(g) == key(p));
        if let Some(i) = hit {
            used[i] = true;
        }
        counts.record(&p.label, Counts::new(hit.is_some() as usize, 0, 1));
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn span(label: &str, s: usize, e: usize) -> EntitySpan {
        EntitySpan::new(label, s, e)
    }

    fn standoff(label: &str, frags: &[(usize, usize)]) -> StandoffEntity {
        StandoffEntity::new("T", label, frags.iter().map(|&(s, e)| Fragment::new(s, e)).collect()).unwrap()
    }

    #[test]
    fn match_entities_examples() {
        let gold = [span("PER", 0, 1), span("LOC", 3, 3)];
        let pred = [span("PER", 0, 1), span("PER", 3, 3)];
        let c = match_entities(&gold, &pred);
        assert_eq!(c.get("PER"), Counts::new(1, 1, 2));
        assert_eq!(c.get("LOC"), Counts::new(0, 1, 0));

        let c = match_entities(&gold, &gold);
        for (_, counts) in c.iter() {
            assert_eq!((counts.tp, counts.tp), (counts.gold, counts.pred));
        }

        let c = match_entities(&[], &[span("PER", 0, 0)]);
        assert_eq!(c.get("PER"), Counts::new(0, 0, 1));
    }

    #[test]
    fn duplicate_gold_matched_once() {
        let c = match_entities(&[span("A", 0, 0)], &[span("A", 0, 0), span("A", 0, 0)]);
        assert_eq!(c.get("A"), Counts::new(1, 1, 2));
    }

    #[test]
    fn prf_examples() {
        let p = prf::<f64>(Counts::new(1, 2, 2));
        assert_eq!((p.precision, p.recall, p.f1), (0.5, 0.5, 0.5));
        let p = prf::<f64>(Counts::new(0, 0, 0));
        assert_eq!((p.precision, p.recall, p.f1), (0.0, 0.0, 0.0));
        assert_eq!(Counts::new(0, 0, 0).undefined(), Undefined { precision: true, recall: true, f1: true });
        let p = prf::<Rational>(Counts::new(3, 3, 3));
        assert_eq!(p.f1, Rational::from_integer(1));
    }

    fn two_class_scores() -> (Vec<ClassScore<Rational>>, MatchCounts) {
        let mut raw = MatchCounts::new();
        raw.record("A", Counts::new(1, 1, 1));
        raw.record("B", Counts::new(0, 3, 0));
        let scores = raw.iter().map(|(l, c)| ClassScore::from_counts(l, c)).collect();
        (scores, raw)
    }

    #[test]
    fn average_examples() {
        let (scores, raw) = two_class_scores();
        assert_eq!(scores[0].f1, Rational::from_integer(1));
        assert_eq!(average(&scores, &raw, AverageMode::Weighted).f1, Rational::new(1, 4));
        assert_eq!(average(&scores, &raw, AverageMode::Macro).f1, Rational::new(1, 2));
        // micro: tp 1, gold 4, pred 1 -> P 1, R 1/4, F1 2/5
        assert_eq!(average(&scores, &raw, AverageMode::Micro).f1, Rational::new(2, 5));
    }

    #[test]
    fn average_single_class_degenerates() {
        let mut raw = MatchCounts::new();
        raw.record("X", Counts::new(2, 3, 5));
        let scores: Vec<ClassScore<Rational>> = raw.iter().map(|(l, c)| ClassScore::from_counts(l, c)).collect();
        let expected = scores[0].prf();
        for mode in AverageMode::ALL {
            assert_eq!(average(&scores, &raw, mode), expected);
        }
    }

    #[test]
    fn average_empty_is_zero() {
        for mode in AverageMode::ALL {
            assert_eq!(average::<f64>(&[], &MatchCounts::new(), mode), Prf::zero());
        }
    }

    #[test]
    fn token_counts_worked_pair() {
        let gold = ["B-PER", "I-PER", "O", "O", "O", "B-LOC"];
        let pred = ["B-PER", "O", "O", "O", "O", "B-LOC"];
        let report = Report::<Rational>::from_counts(token_counts(&gold, &pred).unwrap());
        assert_eq!(report.class("O").unwrap().f1, Rational::new(6, 7));
        assert_eq!(report.class("I-PER").unwrap().f1, Rational::from_integer(0));
        assert_eq!(report.weighted.f1, Rational::new(16, 21));

        let excl = Report::<Rational>::from_counts_excluding(token_counts(&gold, &pred).unwrap(), &[OUTSIDE]);
        assert_eq!(excl.excluded, vec!["O".to_string()]);
        assert!(excl.class("O").is_some());
        assert_eq!(excl.support(), 3);
    }

    #[test]
    fn token_counts_identity_and_mismatch() {
        let tags = ["B-A", "O", "I-A"];
        let r = Report::<f64>::from_counts(token_counts(&tags, &tags).unwrap());
        for mode in AverageMode::ALL {
            assert_eq!(r.averaged(mode).f1, 1.0);
        }
        assert!(matches!(token_counts(&["O"], &["O", "O"]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn first_token_projection_hides_boundary_error() {
        let gold = ["PER", "O", "O", "O", "O", "LOC"];
        let r = Report::<f64>::from_counts_excluding(token_counts(&gold, &gold).unwrap(), &[OUTSIDE]);
        assert_eq!(r.micro.f1, 1.0);
    }

    #[test]
    fn offset_match_examples() {
        let gold = [standoff("DISO", &[(10, 18)])];
        assert_eq!(offset_match(&gold, &gold).get("DISO").tp, 1);
        assert_eq!(offset_match(&gold, &[standoff("DISO", &[(10, 17)])]).get("DISO").tp, 0);
        let multi = [standoff("ANAT", &[(0, 4), (8, 12)])];
        assert_eq!(offset_match(&multi, &multi).get("ANAT").tp, 1);
        assert_eq!(offset_match(&multi, &[standoff("ANAT", &[(0, 4), (8, 11)])]).get("ANAT").tp, 0);
        assert_eq!(offset_match(&multi, &[standoff("DISO", &[(0, 4), (8, 12)])]).get("ANAT").tp, 0);
    }

    #[test]
    fn counts_add_commutes() {
        let a = match_entities(&[span("A", 0, 0)], &[span("B", 1, 1)]);
        let b = match_entities(&[span("B", 1, 1)], &[span("B", 1, 1)]);
        assert_eq!(a.clone() + b.clone(), b + a);
    }
}
