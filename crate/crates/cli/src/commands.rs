use std::collections::BTreeSet;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use nereval::carbon::{default_power, estimate_emissions, TrainingRun};
use nereval::formats::{emit_report, OutputFormat, Render, StandoffDocument};
use nereval::methodology::{
    aggregate_runs, compare_runs, eval_offset_exact, evaluate as run_methodology, EvalInputs, EvalOptions,
    MethodologyId,
};
use nereval::vocab::{
    fertility, intersection_stats, normalize_vocab, segmentation_diff, vocab_file_entries, MarkerConvention,
    VocabReport, Vocabulary,
};
use nereval::EvalReport;

use crate::input::{check_aligned, read_ann_dir, read_conll, read_runs, read_text, user};
use crate::{AggregateArgs, CarbonArgs, CompareArgs, EvaluateArgs, TaggingArgs, VocabArgs};

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn render<R: Render + ?Sized>(item: &R, format: OutputFormat, stamp: Option<u64>) -> String {
    let Some(t) = stamp else {
        return emit_report(item, format);
    };
    match format {
        OutputFormat::Json => {
            let mut v = item.to_json();
            if let Some(obj) = v.as_object_mut() {
                obj.insert("generated_at".to_string(), t.into());
            }
            let mut out = serde_json::to_string_pretty(&v).expect("report JSON serializes");
            out.push('\n');
            out
        }
        OutputFormat::Markdown => format!("{}\ngenerated at {t} (unix seconds)\n", emit_report(item, format)),
        OutputFormat::Csv => format!("# generated_at={t}\n{}", emit_report(item, format)),
    }
}

/// Rejects tagging flags that none of `methods` would read.
fn options(t: &TaggingArgs, methods: &[MethodologyId]) -> Result<EvalOptions> {
    let uses = |m: MethodologyId| methods.contains(&m);
    let tagged = methods.iter().any(|m| !m.needs_standoff());
    let listed = methods.iter().map(|m| m.name()).collect::<Vec<_>>().join(", ");
    let checks = [
        ("--scheme", t.scheme.is_some(), tagged),
        ("--decode", t.decode.is_some(), tagged),
        ("--token-classes", t.token_classes.is_some(), uses(MethodologyId::TokenWithO)),
        ("--o-policy", t.o_policy.is_some(), uses(MethodologyId::TokenWithO)),
        ("--nested", t.nested.is_some(), uses(MethodologyId::OffsetExact)),
    ];
    if let Some((flag, ..)) = checks.iter().find(|(_, given, applies)| *given && !*applies) {
        return Err(user(format!("{flag} has no effect on {listed}")));
    }
    let mut opts = EvalOptions::default();
    opts.scheme = t.scheme.unwrap_or(opts.scheme);
    opts.decode = t.decode.unwrap_or(opts.decode);
    opts.token_classes = t.token_classes.unwrap_or(opts.token_classes);
    opts.o_policy = t.o_policy.unwrap_or(opts.o_policy);
    opts.standoff_nesting = t.nested;
    Ok(opts)
}

pub fn evaluate(a: EvaluateArgs, stamp: Option<u64>) -> Result<String> {
    let opts = options(&a.tagging, &[a.methodology])?;
    let report: EvalReport = if a.methodology.needs_standoff() {
        let gold = read_ann_dir(&a.gold)?;
        let pred = read_ann_dir(&a.pred)?;
        eval_offset_exact(&gold, &pred, &opts)?
    } else {
        let gold = read_conll(&a.gold)?;
        let pred = read_conll(&a.pred)?;
        check_aligned(&gold, &pred)?;
        run_methodology(a.methodology, &EvalInputs::tagged(&gold.sequences, &pred.sequences), &opts)?
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    Ok(render(&report, a.format, stamp))
}

fn warn_unpaired(gold_dir: &Path, gold: &[StandoffDocument], pred_dir: &Path, pred: &[StandoffDocument]) {
    let g: BTreeSet<&str> = gold.iter().map(|d| d.id.as_str()).collect();
    let p: BTreeSet<&str> = pred.iter().map(|d| d.id.as_str()).collect();
    for id in g.difference(&p) {
        eprintln!("warning: {}/{id}.ann has no counterpart in {}", gold_dir.display(), pred_dir.display());
    }
    for id in p.difference(&g) {
        eprintln!("warning: {}/{id}.ann has no counterpart in {}", pred_dir.display(), gold_dir.display());
    }
}

pub fn compare(a: CompareArgs, stamp: Option<u64>) -> Result<String> {
    let opts = options(&a.tagging, &a.methodologies)?;
    let needs_ann = a.methodologies.iter().any(|m| m.needs_standoff());
    match (needs_ann, &a.gold_ann) {
        (true, None) => return Err(user("offset-exact needs --gold-ann and one --pred-ann per prediction")),
        (false, Some(_)) => return Err(user("--gold-ann is only read for offset-exact")),
        _ => {}
    }
    if needs_ann && a.pred_ann.len() != a.pred.len() {
        return Err(user(format!("{} prediction files but {} --pred-ann directories", a.pred.len(), a.pred_ann.len())));
    }
    if !needs_ann && !a.pred_ann.is_empty() {
        return Err(user("--pred-ann is only read for offset-exact"));
    }

    let gold = read_conll(&a.gold)?;
    let preds = a.pred.iter().map(|p| read_conll(p)).collect::<Result<Vec<_>>>()?;
    for p in &preds {
        check_aligned(&gold, p)?;
    }
    let gold_docs = a.gold_ann.as_deref().map(read_ann_dir).transpose()?;
    let pred_docs = a.pred_ann.iter().map(|d| read_ann_dir(d)).collect::<Result<Vec<_>>>()?;
    if let (Some(dir), Some(g)) = (&a.gold_ann, &gold_docs) {
        for (pdir, p) in a.pred_ann.iter().zip(&pred_docs) {
            warn_unpaired(dir, g, pdir, p);
        }
    }

    let inputs: Vec<EvalInputs<'_>> = preds
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let inputs = EvalInputs::tagged(&gold.sequences, &p.sequences);
            match &gold_docs {
                Some(g) => inputs.with_standoff(g, &pred_docs[i]),
                None => inputs,
            }
        })
        .collect();
    let table = compare_runs::<f64>(&inputs, &a.methodologies, &opts, &a.model)?;
    Ok(render(&table, a.format, stamp))
}

pub fn aggregate(a: AggregateArgs, stamp: Option<u64>) -> Result<String> {
    let runs = read_runs(&a.runs)?;
    let table = aggregate_runs::<f64>(&runs)?;
    Ok(render(&table, a.format, stamp))
}

fn load_vocab(path: &Path, convention: &MarkerConvention, fold_case: bool) -> Result<Vocabulary> {
    let text = read_text(path)?;
    let normalized =
        normalize_vocab(vocab_file_entries(&text), convention).map_err(|e| user(format!("{}: {e}", path.display())))?;
    if normalized.duplicates > 0 || normalized.dropped_empty > 0 {
        eprintln!(
            "note: {}: {} entries collapsed after removing '{convention}' markers, {} were only a marker",
            path.display(),
            normalized.duplicates,
            normalized.dropped_empty
        );
    }
    Ok(if fold_case { normalized.vocab.folded() } else { normalized.vocab })
}

pub fn vocab(a: VocabArgs, stamp: Option<u64>) -> Result<String> {
    let conv_a = a.marker.clone().or(a.marker_a).unwrap_or_default();
    let conv_b = a.marker.or(a.marker_b).unwrap_or_default();
    let va = load_vocab(&a.vocab_a, &conv_a, a.fold_case)?;
    let vb = load_vocab(&a.vocab_b, &conv_b, a.fold_case)?;

    let mut report = VocabReport { stats: intersection_stats::<f64>(&va, &vb), fertility: None, diff: Vec::new() };
    if let Some(path) = &a.words {
        let text = read_text(path)?;
        let words: Vec<String> =
            text.split_whitespace().map(|w| if a.fold_case { w.to_lowercase() } else { w.to_string() }).collect();
        if words.is_empty() {
            return Err(user(format!("{}: no words", path.display())));
        }
        report.fertility = Some((fertility(&words, &va)?, fertility(&words, &vb)?));
        let mut seen = BTreeSet::new();
        let unique: Vec<&String> = words.iter().filter(|w| seen.insert(w.as_str())).collect();
        report.diff = segmentation_diff(&unique, &va, &vb);
    }
    Ok(render(&report, a.format, stamp))
}

pub fn carbon(a: CarbonArgs, stamp: Option<u64>) -> Result<String> {
    let power = match (a.power, &a.device) {
        (Some(p), _) => p,
        (None, Some(device)) => default_power(device)?,
        (None, None) => return Err(user("one of --device or --power is required")),
    };
    let mut run = TrainingRun::new(a.gpus, a.hours, power);
    if let Some(i) = a.intensity {
        run = run.with_intensity(i);
    }
    if let Some(p) = a.pue {
        run = run.with_pue(p);
    }
    Ok(render(&estimate_emissions(&run)?, a.format, stamp))
}
