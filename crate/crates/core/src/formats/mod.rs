//! Readers and writers for the files the toolkit consumes and produces.

pub mod brat;
pub mod conll;
pub mod report;
pub mod runs;

pub use brat::{parse_brat_ann, Fragment, StandoffDocument, StandoffEntity};
pub use conll::{parse_conll, parse_conll_located, write_conll, Document, Sentence};
pub use report::{emit_report, OutputFormat, Render};
pub use runs::{parse_runs_json, RunScores};
