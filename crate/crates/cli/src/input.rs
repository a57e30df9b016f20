//! Loading input files, with errors pointing at `path:line`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nereval::formats::{parse_conll_located, RunScores, StandoffDocument};
use nereval::tagging::TagSequence;
use nereval::Error;

/// A problem with the user's flags or files, already phrased for stderr.
#[derive(Debug)]
pub struct UserError(pub String);

impl fmt::Display for UserError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UserError {}

pub fn user(msg: impl Into<String>) -> anyhow::Error {
    UserError(msg.into()).into()
}

fn located(path: &Path, err: Error) -> anyhow::Error {
    let p = path.display();
    match err {
        Error::MalformedLine { line, detail } => user(format!("{p}:{line}: malformed line: {detail}")),
        Error::MalformedAnnotation { line, detail } => user(format!("{p}:{line}: malformed annotation: {detail}")),
        other => user(format!("{p}: {other}")),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn read_text(path: &Path) -> Result<String> {
    let bytes = read(path)?;
    String::from_utf8(bytes).map_err(|e| located(path, Error::Encoding { offset: e.utf8_error().valid_up_to() }))
}

/// Tag sequences of a CoNLL file with the line each one starts on.
pub struct Conll {
    pub path: PathBuf,
    pub lines: Vec<usize>,
    pub sequences: Vec<TagSequence>,
}

pub fn read_conll(path: &Path) -> Result<Conll> {
    let located_sentences = parse_conll_located(&read(path)?).map_err(|e| located(path, e))?;
    let (lines, sequences) = located_sentences.into_iter().map(|(l, s)| (l, s.tags)).unzip();
    Ok(Conll { path: path.to_path_buf(), lines, sequences })
}

/// Fails with both files' locations on the first sequence that does not line up.
pub fn check_aligned(gold: &Conll, pred: &Conll) -> Result<()> {
    let Err(err) = nereval::methodology::check_alignment(&gold.sequences, &pred.sequences) else {
        return Ok(());
    };
    let Error::Alignment { sequence, detail } = err else {
        return Err(err.into());
    };
    let at = |c: &Conll| match c.lines.get(sequence) {
        Some(line) => format!("{}:{line}", c.path.display()),
        None => format!("{}:end", c.path.display()),
    };
    Err(user(format!("{}: sequence {} does not align with {}: {detail}", at(pred), sequence + 1, at(gold))))
}

/// Every `.ann` file in `dir`, keyed by file stem, in stem order.
pub fn read_ann_dir(dir: &Path) -> Result<Vec<StandoffDocument>> {
    if !dir.is_dir() {
        return Err(user(format!("{}: not a directory of .ann files", dir.display())));
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot list {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()
        .with_context(|| format!("cannot list {}", dir.display()))?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "ann"));
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let stem = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let text = read_text(p)?;
            StandoffDocument::from_ann(stem, &text).map_err(|e| located(p, e))
        })
        .collect()
}

pub fn read_runs(path: &Path) -> Result<Vec<RunScores>> {
    let text = read_text(path)?;
    nereval::formats::parse_runs_json(&text).map_err(|e| located(path, e))
}
