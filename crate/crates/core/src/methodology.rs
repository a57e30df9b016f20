//! The evaluation methodologies, side by side.
//!
//! | id                 | unit of scoring                         | headline    |
//! |--------------------|-----------------------------------------|-------------|
//! | `entity-strict`    | decoded spans, exact label and boundary | micro F1    |
//! | `token-with-O`     | every token, `O` included               | weighted F1 |
//! | `entity-without-O` | first token of each entity, `O` ignored | micro F1    |
//! | `offset-exact`     | standoff annotations, exact offsets     | micro F1    |
//!
//! All scores are fractions in `[0, 1]`; emitters scale to percentages.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::formats::brat::{StandoffDocument, StandoffEntity};
use crate::formats::runs::RunScores;
use crate::metrics::{match_entities, offset_match, token_counts, AverageMode, MatchCounts, OPolicy, Report};
use crate::scalar::Scalar;
use crate::tagging::{
    decode_entities, flatten_nested, project_first_token_labels, token_class_labels, DecodeMode, EntitySpan,
    FlattenStrategy, Scheme, TagSequence, TokenClasses, OUTSIDE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodologyId {
    EntityStrict,
    TokenWithO,
    EntityWithoutO,
    OffsetExact,
}

impl MethodologyId {
    pub const ALL: [MethodologyId; 4] = [
        MethodologyId::EntityStrict,
        MethodologyId::TokenWithO,
        MethodologyId::EntityWithoutO,
        MethodologyId::OffsetExact,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodologyId::EntityStrict => "entity-strict",
            MethodologyId::TokenWithO => "token-with-O",
            MethodologyId::EntityWithoutO => "entity-without-O",
            MethodologyId::OffsetExact => "offset-exact",
        }
    }

    /// The average each methodology is usually quoted by.
    pub fn headline(self) -> AverageMode {
        match self {
            MethodologyId::TokenWithO => AverageMode::Weighted,
            _ => AverageMode::Micro,
        }
    }

    pub fn needs_standoff(self) -> bool {
        self == MethodologyId::OffsetExact
    }
}

impl fmt::Display for MethodologyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodologyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodologyId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown methodology '{s}' (expected one of entity-strict, token-with-O, entity-without-O, offset-exact)"
                ))
            })
    }
}

/// Knobs shared by the methodologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    pub scheme: Scheme,
    pub decode: DecodeMode,
    pub token_classes: TokenClasses,
    /// Applies to token-with-O; entity-without-O always excludes `O`.
    pub o_policy: OPolicy,
    /// Nesting resolution for standoff annotations; `None` scores them as-is.
    pub standoff_nesting: Option<FlattenStrategy>,
}

/// Fails on the first sequence where gold and prediction disagree in shape.
pub fn check_alignment(gold: &[TagSequence], pred: &[TagSequence]) -> Result<()> {
    if gold.len() != pred.len() {
        return Err(Error::Alignment {
            sequence: gold.len().min(pred.len()),
            detail: format!("{} gold sequences but {} predicted", gold.len(), pred.len()),
        });
    }
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::Alignment {
                sequence: i,
                detail: format!("{} gold tokens but {} predicted", g.len(), p.len()),
            });
        }
    }
    Ok(())
}

fn decoded(seq: &TagSequence, opts: &EvalOptions) -> Vec<EntitySpan> {
    decode_entities(seq, opts.scheme, opts.decode)
}

pub fn entity_strict_counts(gold: &[TagSequence], pred: &[TagSequence], opts: &EvalOptions) -> Result<MatchCounts> {
    check_alignment(gold, pred)?;
    Ok(gold.iter().zip(pred).map(|(g, p)| match_entities(&decoded(g, opts), &decoded(p, opts))).sum())
}

/// Spans decoded under the scheme, matched exactly, counts pooled over the
/// corpus.
pub fn eval_entity_strict<T: Scalar>(
    gold: &[TagSequence],
    pred: &[TagSequence],
    opts: &EvalOptions,
) -> Result<Report<T>> {
    Ok(Report::from_counts(entity_strict_counts(gold, pred, opts)?))
}

/// Independent classification of every token, `O` included by default.
pub fn eval_token_with_o<T: Scalar>(
    gold: &[TagSequence],
    pred: &[TagSequence],
    opts: &EvalOptions,
) -> Result<Report<T>> {
    check_alignment(gold, pred)?;
    let mut counts = MatchCounts::new();
    for (g, p) in gold.iter().zip(pred) {
        counts +=
            &token_counts(&token_class_labels(g, opts.token_classes), &token_class_labels(p, opts.token_classes))?;
    }
    Ok(Report::from_counts_excluding(counts, opts.o_policy.excluded()))
}

/// First token of each entity carries its label, everything else is `O`, and
/// `O` is left out of the averages. The report also carries the entity-strict
/// score on the same inputs.
pub fn eval_entity_without_o<T: Scalar>(
    gold: &[TagSequence],
    pred: &[TagSequence],
    opts: &EvalOptions,
) -> Result<Report<T>> {
    check_alignment(gold, pred)?;
    let mut counts = MatchCounts::new();
    for (g, p) in gold.iter().zip(pred) {
        counts += &token_counts(
            &project_first_token_labels(g, opts.scheme, opts.decode),
            &project_first_token_labels(p, opts.scheme, opts.decode),
        )?;
    }
    let mut report = Report::from_counts_excluding(counts, &[OUTSIDE]);
    report.entity_strict = Some(eval_entity_strict::<T>(gold, pred, opts)?.micro);
    Ok(report)
}

fn flatten_standoff(entities: &[StandoffEntity], strategy: FlattenStrategy) -> Result<Vec<StandoffEntity>> {
    // Work on envelopes as inclusive spans; fragments of a kept entity survive
    // untouched, merged groups become single-fragment entities.
    let spans: Vec<EntitySpan> = entities
        .iter()
        .map(|e| {
            let env = e.envelope();
            EntitySpan::new(e.label.clone(), env.start, env.end - 1)
        })
        .collect();
    let flat = flatten_nested(&spans, strategy)?;
    let mut taken = vec![false; entities.len()];
    flat.into_iter()
        .map(|s| {
            let original = spans.iter().enumerate().position(|(i, o)| !taken[i] && *o == s);
            match original {
                Some(i) => {
                    taken[i] = true;
                    Ok(entities[i].clone())
                }
                None => {
                    let ids: Vec<&str> = entities
                        .iter()
                        .zip(&spans)
                        .filter(|(_, o)| o.overlaps(&s))
                        .map(|(e, _)| e.id.as_str())
                        .collect();
                    StandoffEntity::new(
                        ids.join("+"),
                        s.label,
                        vec![crate::formats::brat::Fragment::new(s.start, s.end + 1)],
                    )
                }
            }
        })
        .collect()
}

/// Exact character-offset scoring over documents paired by id. Unpaired ids
/// become warnings; a document missing on one side still counts its
/// entities on the other.
pub fn eval_offset_exact<T: Scalar>(
    gold: &[StandoffDocument],
    pred: &[StandoffDocument],
    opts: &EvalOptions,
) -> Result<Report<T>> {
    for (side, docs) in [("gold", gold), ("predicted", pred)] {
        let mut seen = BTreeSet::new();
        if let Some(d) = docs.iter().find(|d| !seen.insert(d.id.as_str())) {
            return Err(Error::invalid(format!("duplicate {side} document id '{}'", d.id)));
        }
    }
    let prepare = |entities: &[StandoffEntity]| match opts.standoff_nesting {
        Some(strategy) => flatten_standoff(entities, strategy),
        None => Ok(entities.to_vec()),
    };

    let mut counts = MatchCounts::new();
    let mut warnings = Vec::new();
    for g in gold {
        let p = pred.iter().find(|p| p.id == g.id);
        if p.is_none() {
            warnings.push(format!("gold document '{}' has no prediction", g.id));
        }
        let p_entities = match p {
            Some(p) => prepare(&p.entities)?,
            None => Vec::new(),
        };
        counts += &offset_match(&prepare(&g.entities)?, &p_entities);
    }
    for p in pred.iter().filter(|p| !gold.iter().any(|g| g.id == p.id)) {
        warnings.push(format!("predicted document '{}' has no gold annotations", p.id));
        counts += &offset_match(&[], &prepare(&p.entities)?);
    }
    let mut report = Report::from_counts(counts);
    report.warnings = warnings;
    Ok(report)
}

/// Runs one methodology. Tagged inputs are needed for all but
/// `offset-exact`, which needs standoff documents.
pub fn evaluate<T: Scalar>(
    methodology: MethodologyId,
    inputs: &EvalInputs<'_>,
    opts: &EvalOptions,
) -> Result<Report<T>> {
    if methodology.needs_standoff() {
        let (g, p) =
            inputs.standoff.ok_or_else(|| Error::config(format!("{methodology} needs standoff (BRAT) inputs")))?;
        return eval_offset_exact(g, p, opts);
    }
    let (g, p) = inputs.tagged.ok_or_else(|| Error::config(format!("{methodology} needs tagged (CoNLL) inputs")))?;
    match methodology {
        MethodologyId::EntityStrict => eval_entity_strict(g, p, opts),
        MethodologyId::TokenWithO => eval_token_with_o(g, p, opts),
        MethodologyId::EntityWithoutO => eval_entity_without_o(g, p, opts),
        MethodologyId::OffsetExact => unreachable!("handled above"),
    }
}

/// Gold/predicted inputs in whichever representations are available.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalInputs<'a> {
    pub tagged: Option<(&'a [TagSequence], &'a [TagSequence])>,
    pub standoff: Option<(&'a [StandoffDocument], &'a [StandoffDocument])>,
}

impl<'a> EvalInputs<'a> {
    pub fn tagged(gold: &'a [TagSequence], pred: &'a [TagSequence]) -> Self {
        EvalInputs { tagged: Some((gold, pred)), standoff: None }
    }

    pub fn with_standoff(mut self, gold: &'a [StandoffDocument], pred: &'a [StandoffDocument]) -> Self {
        self.standoff = Some((gold, pred));
        self
    }
}

/// Mean and sample standard deviation of one metric over `n` runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate<T> {
    pub metric: String,
    pub mean: T,
    /// Sample standard deviation (`n - 1` denominator); zero for one run.
    pub std: T,
    pub n: usize,
}

impl<T: Float> Aggregate<T> {
    pub fn single(metric: impl Into<String>, value: T) -> Self {
        Aggregate { metric: metric.into(), mean: value, std: T::zero(), n: 1 }
    }

    /// Panics on an empty slice.
    pub fn from_values(metric: impl Into<String>, values: &[T]) -> Self {
        assert!(!values.is_empty(), "aggregate of zero values");
        let metric = metric.into();
        let first = values[0];
        if values.iter().all(|v| *v == first) {
            return Aggregate { metric, mean: first, std: T::zero(), n: values.len() };
        }
        let n = T::from(values.len()).expect("run count fits in float");
        let mean = values.iter().fold(T::zero(), |acc, v| acc + *v) / n;
        let ss = values.iter().fold(T::zero(), |acc, v| acc + (*v - mean) * (*v - mean));
        let std = (ss / (n - T::one())).sqrt();
        Aggregate { metric, mean, std, n: values.len() }
    }

    /// `mean ± std`, two decimals each.
    pub fn cell(&self) -> String
    where
        T: fmt::Display,
    {
        format!("{:.2} ± {:.2}", self.mean, self.std)
    }
}

/// One `Aggregate` per metric name in the union over all runs, sorted by
/// name. A metric absent from some runs is aggregated over the runs that
/// report it.
pub fn aggregate_runs<T: Float>(runs: &[RunScores]) -> Result<Vec<Aggregate<T>>> {
    if runs.is_empty() {
        return Err(Error::invalid("no runs to aggregate"));
    }
    let names: BTreeSet<&str> = runs.iter().flat_map(|r| r.metrics.keys().map(String::as_str)).collect();
    names
        .into_iter()
        .map(|name| {
            let values = runs
                .iter()
                .filter_map(|r| r.metrics.get(name))
                .map(|&v| {
                    if !v.is_finite() {
                        return Err(Error::invalid(format!("metric '{name}' has non-finite value {v}")));
                    }
                    T::from(v).ok_or_else(|| Error::invalid(format!("metric '{name}' value {v} not representable")))
                })
                .collect::<Result<Vec<T>>>()?;
            Ok(Aggregate::from_values(name, &values))
        })
        .collect()
}

/// Columns of a comparison table, in display order.
pub const COMPARISON_COLUMNS: [&str; 4] = ["weighted-f1", "macro-f1", "micro-f1", "seqeval-f1"];

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow<T> {
    pub methodology: MethodologyId,
    pub model: String,
    /// Aligned with [`COMPARISON_COLUMNS`]; `None` where a methodology has no
    /// such number.
    pub cells: Vec<Option<Aggregate<T>>>,
}

impl<T: Clone> ComparisonRow<T> {
    pub fn cell(&self, column: &str) -> Option<&Aggregate<T>> {
        let idx = COMPARISON_COLUMNS.iter().position(|c| *c == column)?;
        self.cells[idx].as_ref()
    }

    pub fn headline(&self) -> Option<&Aggregate<T>> {
        self.cell(headline_column(self.methodology))
    }
}

pub fn headline_column(methodology: MethodologyId) -> &'static str {
    match methodology.headline() {
        AverageMode::Micro => "micro-f1",
        AverageMode::Macro => "macro-f1",
        AverageMode::Weighted => "weighted-f1",
    }
}

/// Several methodologies applied to the same inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable<T> {
    pub rows: Vec<ComparisonRow<T>>,
}

impl<T: Clone> ComparisonTable<T> {
    pub fn row(&self, methodology: MethodologyId) -> Option<&ComparisonRow<T>> {
        self.rows.iter().find(|r| r.methodology == methodology)
    }
}

fn column_values<T: Scalar>(methodology: MethodologyId, report: &Report<T>) -> [Option<T>; 4] {
    let seqeval = match methodology {
        MethodologyId::EntityStrict => Some(report.micro.f1),
        _ => report.entity_strict.map(|p| p.f1),
    };
    [Some(report.weighted.f1), Some(report.macro_avg.f1), Some(report.micro.f1), seqeval]
}

/// Evaluates every run with every methodology and aggregates the cells over
/// runs. Each run supplies one prediction set against its gold.
pub fn compare_runs<T: Float + Scalar>(
    runs: &[EvalInputs<'_>],
    methodologies: &[MethodologyId],
    opts: &EvalOptions,
    model: &str,
) -> Result<ComparisonTable<T>> {
    if methodologies.is_empty() {
        return Err(Error::config("at least one methodology is required"));
    }
    if runs.is_empty() {
        return Err(Error::invalid("no runs to compare"));
    }
    let mut rows = Vec::with_capacity(methodologies.len());
    for &m in methodologies {
        let mut per_column: [Vec<T>; 4] = Default::default();
        for inputs in runs {
            let report = evaluate::<T>(m, inputs, opts)?;
            for (col, value) in column_values(m, &report).into_iter().enumerate() {
                if let Some(v) = value {
                    per_column[col].push(v);
                }
            }
        }
        let cells = per_column
            .iter()
            .zip(COMPARISON_COLUMNS)
            .map(|(values, name)| (!values.is_empty()).then(|| Aggregate::from_values(name, values)))
            .collect();
        rows.push(ComparisonRow { methodology: m, model: model.to_string(), cells });
    }
    Ok(ComparisonTable { rows })
}

/// One row per methodology on a single gold/prediction pair.
pub fn compare_methodologies<T: Float + Scalar>(
    inputs: &EvalInputs<'_>,
    methodologies: &[MethodologyId],
    opts: &EvalOptions,
) -> Result<ComparisonTable<T>> {
    compare_runs(std::slice::from_ref(inputs), methodologies, opts, "model")
}
