//! Report emitters: JSON, markdown tables and CSV.
//!
//! Markdown and CSV print scores as percentages with two decimals; JSON keeps
//! fractions at full precision. Rows are always sorted by label and averages
//! always come in the order micro, macro, weighted, so identical inputs give
//! byte-identical output.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_traits::Float;
use serde::Serialize;
use serde_json::{json, Value};

use crate::carbon::EmissionEstimate;
use crate::error::{Error, Result};
use crate::methodology::{headline_column, Aggregate, ComparisonTable, COMPARISON_COLUMNS};
use crate::metrics::{AverageMode, Prf, Report};
use crate::scalar::Scalar;
use crate::vocab::VocabReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OutputFormat {
    Json,
    #[default]
    Markdown,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "markdown" | "md" | "table" => Ok(OutputFormat::Markdown),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(Error::config(format!("unknown output format '{s}' (expected json, markdown or csv)"))),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Json => "json",
            OutputFormat::Markdown => "markdown",
            OutputFormat::Csv => "csv",
        })
    }
}

/// Something that can be written out in every [`OutputFormat`].
pub trait Render {
    fn to_json(&self) -> Value;
    fn to_markdown(&self) -> String;
    fn to_csv(&self) -> String;
}

pub fn emit_report<R: Render + ?Sized>(item: &R, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&item.to_json()).expect("JSON values always serialize");
            s.push('\n');
            s
        }
        OutputFormat::Markdown => item.to_markdown(),
        OutputFormat::Csv => item.to_csv(),
    }
}

/// Fraction to a two-decimal percentage.
pub fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

#[derive(Serialize)]
struct JsonPrf {
    precision: f64,
    recall: f64,
    f1: f64,
}

impl<T: Scalar> From<Prf<T>> for JsonPrf {
    fn from(p: Prf<T>) -> Self {
        JsonPrf { precision: p.precision.as_f64(), recall: p.recall.as_f64(), f1: p.f1.as_f64() }
    }
}

#[derive(Serialize)]
struct JsonClass<'a> {
    label: &'a str,
    precision: f64,
    recall: f64,
    f1: f64,
    support: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    undefined: Vec<&'static str>,
}

#[derive(Serialize)]
struct JsonAverages {
    micro: JsonPrf,
    #[serde(rename = "macro")]
    macro_avg: JsonPrf,
    weighted: JsonPrf,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    classes: Vec<JsonClass<'a>>,
    averages: JsonAverages,
    #[serde(skip_serializing_if = "Option::is_none")]
    entity_strict: Option<JsonPrf>,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    excluded: &'a [String],
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    warnings: &'a [String],
}

impl<T: Scalar> Report<T> {
    fn average_rows(&self) -> impl Iterator<Item = (String, Prf<T>)> + '_ {
        AverageMode::ALL.into_iter().map(|m| (format!("{} avg", m.name()), self.averaged(m)))
    }
}

impl<T: Scalar> Render for Report<T> {
    fn to_json(&self) -> Value {
        let report = JsonReport {
            classes: self
                .classes
                .iter()
                .map(|c| JsonClass {
                    label: &c.label,
                    precision: c.precision.as_f64(),
                    recall: c.recall.as_f64(),
                    f1: c.f1.as_f64(),
                    support: c.support,
                    undefined: c.undefined.names(),
                })
                .collect(),
            averages: JsonAverages {
                micro: self.micro.into(),
                macro_avg: self.macro_avg.into(),
                weighted: self.weighted.into(),
            },
            entity_strict: self.entity_strict.map(Into::into),
            excluded: &self.excluded,
            warnings: &self.warnings,
        };
        serde_json::to_value(report).expect("report serializes")
    }

    fn to_markdown(&self) -> String {
        let mut out = String::from("label | precision | recall | f1 | support\n--- | ---: | ---: | ---: | ---:\n");
        let row = |out: &mut String, label: &str, p: Prf<f64>, support: &str| {
            let _ = writeln!(
                out,
                "{} | {} | {} | {} | {}",
                md_cell(label),
                pct(p.precision),
                pct(p.recall),
                pct(p.f1),
                support
            );
        };
        for c in &self.classes {
            row(&mut out, &c.label, c.prf().to_f64(), &c.support.to_string());
        }
        let support = self.support().to_string();
        for (name, p) in self.average_rows() {
            row(&mut out, &name, p.to_f64(), &support);
        }
        if let Some(p) = self.entity_strict {
            row(&mut out, "entity-strict", p.to_f64(), "-");
        }
        if !self.excluded.is_empty() {
            let _ = writeln!(out, "\nexcluded from averages: {}", self.excluded.join(", "));
        }
        let undefined: Vec<String> = self
            .classes
            .iter()
            .filter(|c| c.undefined.any())
            .map(|c| format!("{} ({})", c.label, c.undefined.names().join("/")))
            .collect();
        if !undefined.is_empty() {
            let _ = writeln!(out, "\nzero denominators, reported as 0.00: {}", undefined.join(", "));
        }
        out
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("label,precision,recall,f1,support\n");
        let row = |out: &mut String, label: &str, p: Prf<f64>, support: &str| {
            let _ =
                writeln!(out, "{},{},{},{},{}", csv_field(label), pct(p.precision), pct(p.recall), pct(p.f1), support);
        };
        for c in &self.classes {
            row(&mut out, &c.label, c.prf().to_f64(), &c.support.to_string());
        }
        let support = self.support().to_string();
        for (name, p) in self.average_rows() {
            row(&mut out, &name, p.to_f64(), &support);
        }
        if let Some(p) = self.entity_strict {
            row(&mut out, "entity-strict", p.to_f64(), "");
        }
        out
    }
}

fn aggregate_json<T: Float>(a: &Aggregate<T>) -> Value {
    json!({
        "mean": a.mean.to_f64(),
        "std": a.std.to_f64(),
        "n": a.n,
    })
}

/// The mean alone for one run, `mean ± std` otherwise.
fn comparison_cell<T: Float>(a: Option<&Aggregate<T>>) -> String {
    match a {
        None => "-".to_string(),
        Some(a) => {
            let mean = pct(a.mean.to_f64().unwrap_or(f64::NAN));
            if a.n == 1 {
                mean
            } else {
                format!("{mean} ± {}", pct(a.std.to_f64().unwrap_or(f64::NAN)))
            }
        }
    }
}

impl<T: Float> Render for ComparisonTable<T> {
    fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let cells: serde_json::Map<String, Value> = COMPARISON_COLUMNS
                    .iter()
                    .zip(&r.cells)
                    .filter_map(|(name, c)| c.as_ref().map(|a| (name.to_string(), aggregate_json(a))))
                    .collect();
                json!({
                    "methodology": r.methodology.name(),
                    "model": r.model,
                    "headline": headline_column(r.methodology),
                    "cells": cells,
                })
            })
            .collect();
        json!({ "rows": rows })
    }

    fn to_markdown(&self) -> String {
        let mut out = format!("methodology | model | headline | {} | n\n", COMPARISON_COLUMNS.join(" | "));
        out.push_str("--- | --- | ---:");
        out.push_str(&" | ---:".repeat(COMPARISON_COLUMNS.len() + 1));
        out.push('\n');
        for r in &self.rows {
            let n = r.cells.iter().flatten().map(|a| a.n).max().unwrap_or(0);
            let cells: Vec<String> = r.cells.iter().map(|c| comparison_cell(c.as_ref())).collect();
            let _ = writeln!(
                out,
                "{} | {} | {} | {} | {}",
                r.methodology,
                md_cell(&r.model),
                comparison_cell(r.headline()),
                cells.join(" | "),
                n
            );
        }
        out
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("methodology,model,headline_metric,headline");
        for c in COMPARISON_COLUMNS {
            let _ = write!(out, ",{c},{c}_std");
        }
        out.push_str(",n\n");
        let num = |x: Option<T>| x.and_then(|v| v.to_f64()).map(pct).unwrap_or_default();
        for r in &self.rows {
            let n = r.cells.iter().flatten().map(|a| a.n).max().unwrap_or(0);
            let _ = write!(
                out,
                "{},{},{},{}",
                r.methodology,
                csv_field(&r.model),
                headline_column(r.methodology),
                num(r.headline().map(|a| a.mean))
            );
            for c in &r.cells {
                let _ = write!(out, ",{},{}", num(c.as_ref().map(|a| a.mean)), num(c.as_ref().map(|a| a.std)));
            }
            let _ = writeln!(out, ",{n}");
        }
        out
    }
}

/// Run aggregates are printed verbatim (no percentage scaling): the values
/// come from the runs file in whatever scale it used.
impl<T: Float + fmt::Display> Render for Vec<Aggregate<T>> {
    fn to_json(&self) -> Value {
        let metrics: Vec<Value> = self
            .iter()
            .map(|a| {
                let mut v = aggregate_json(a);
                v["metric"] = json!(a.metric);
                v
            })
            .collect();
        json!({ "metrics": metrics })
    }

    fn to_markdown(&self) -> String {
        let mut out = String::from("metric | mean ± std | n\n--- | ---: | ---:\n");
        for a in self {
            let _ = writeln!(out, "{} | {} | {}", md_cell(&a.metric), a.cell(), a.n);
        }
        let single: Vec<&str> = self.iter().filter(|a| a.n == 1).map(|a| a.metric.as_str()).collect();
        if !single.is_empty() {
            let _ = writeln!(out, "\nn=1 (std shown as 0.00): {}", single.join(", "));
        }
        out
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("metric,mean,std,n\n");
        for a in self {
            let _ = writeln!(out, "{},{:.2},{:.2},{}", csv_field(&a.metric), a.mean, a.std, a.n);
        }
        out
    }
}

impl<T: Scalar> Render for VocabReport<T> {
    fn to_json(&self) -> Value {
        let s = &self.stats;
        let mut v = json!({
            "intersection": {
                "shared": s.shared,
                "a_size": s.a_size,
                "b_size": s.b_size,
                "shared_over_a": s.rate_a.as_f64(),
                "shared_over_b": s.rate_b.as_f64(),
                "jaccard": s.jaccard.as_f64(),
            },
            "segmentation": "greedy-longest-match",
        });
        if let Some((a, b)) = &self.fertility {
            let f = |f: &crate::vocab::FertilityStats<T>| json!({ "words": f.words, "mean": f.mean.as_f64(), "max": f.max, "p95": f.p95 });
            v["fertility"] = json!({ "a": f(a), "b": f(b) });
        }
        if !self.diff.is_empty() {
            v["diff"] =
                self.diff.iter().map(|r| json!({ "word": r.word, "a": r.general, "b": r.specialized })).collect();
        }
        v
    }

    fn to_markdown(&self) -> String {
        let s = &self.stats;
        let mut out = String::from("statistic | value\n--- | ---:\n");
        let _ = writeln!(out, "shared entries | {}", s.shared);
        let _ = writeln!(out, "size A | {}", s.a_size);
        let _ = writeln!(out, "size B | {}", s.b_size);
        let _ = writeln!(out, "shared / A | {}%", pct(s.rate_a.as_f64()));
        let _ = writeln!(out, "shared / B | {}%", pct(s.rate_b.as_f64()));
        let _ = writeln!(out, "jaccard | {}%", pct(s.jaccard.as_f64()));
        if let Some((a, b)) = &self.fertility {
            for (side, f) in [("A", a), ("B", b)] {
                let _ = writeln!(
                    out,
                    "fertility {side} (mean / max / p95) | {:.2} / {} / {}",
                    f.mean.as_f64(),
                    f.max,
                    f.p95
                );
            }
        }
        if !self.diff.is_empty() {
            out.push_str("\nword | A | B\n--- | --- | ---\n");
            for r in &self.diff {
                let _ = writeln!(out, "{} | {} | {}", md_cell(&r.word), md_cell(&r.general), md_cell(&r.specialized));
            }
        }
        out.push_str("\nsegmentation: greedy longest-match over each vocabulary\n");
        out
    }

    fn to_csv(&self) -> String {
        let s = &self.stats;
        let mut out = String::from("statistic,value\n");
        let _ = writeln!(out, "shared,{}", s.shared);
        let _ = writeln!(out, "a_size,{}", s.a_size);
        let _ = writeln!(out, "b_size,{}", s.b_size);
        let _ = writeln!(out, "shared_over_a,{}", pct(s.rate_a.as_f64()));
        let _ = writeln!(out, "shared_over_b,{}", pct(s.rate_b.as_f64()));
        let _ = writeln!(out, "jaccard,{}", pct(s.jaccard.as_f64()));
        if let Some((a, b)) = &self.fertility {
            for (side, f) in [("a", a), ("b", b)] {
                let _ = writeln!(out, "fertility_{side}_mean,{:.2}", f.mean.as_f64());
                let _ = writeln!(out, "fertility_{side}_max,{}", f.max);
                let _ = writeln!(out, "fertility_{side}_p95,{}", f.p95);
            }
        }
        if !self.diff.is_empty() {
            out.push_str("\nword,a,b\n");
            for r in &self.diff {
                let _ = writeln!(out, "{},{},{}", csv_field(&r.word), csv_field(&r.general), csv_field(&r.specialized));
            }
        }
        out
    }
}

impl<T: Float + fmt::Display> Render for EmissionEstimate<T> {
    fn to_json(&self) -> Value {
        json!({
            "gpu_hours": self.gpu_hours.to_f64(),
            "energy_kwh": self.energy_kwh.to_f64(),
            "co2_kg": self.co2_kg.to_f64(),
        })
    }

    fn to_markdown(&self) -> String {
        format!(
            "quantity | value\n--- | ---:\nGPU-hours | {:.2}\nenergy (kWh) | {:.2}\nCO2-eq (kg) | {:.2}\n",
            self.gpu_hours, self.energy_kwh, self.co2_kg
        )
    }

    fn to_csv(&self) -> String {
        format!("gpu_hours,energy_kwh,co2_kg\n{:.2},{:.2},{:.2}\n", self.gpu_hours, self.energy_kwh, self.co2_kg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Counts, MatchCounts};
    use crate::Rational;

    fn perfect_per() -> Report<f64> {
        let mut c = MatchCounts::new();
        c.record("PER", Counts::new(1, 1, 1));
        Report::from_counts(c)
    }

    #[test]
    fn markdown_class_row() {
        let md = emit_report(&perfect_per(), OutputFormat::Markdown);
        assert!(md.lines().any(|l| l == "PER | 100.00 | 100.00 | 100.00 | 1"), "{md}");
        assert!(md.contains("micro avg | 100.00 | 100.00 | 100.00 | 1\nmacro avg"));
        assert!(md.find("micro avg").unwrap() < md.find("macro avg").unwrap());
        assert!(md.find("macro avg").unwrap() < md.find("weighted avg").unwrap());
    }

    #[test]
    fn empty_report_json() {
        let v = Report::<f64>::empty().to_json();
        assert_eq!(v["classes"], json!([]));
        for m in ["micro", "macro", "weighted"] {
            assert_eq!(v["averages"][m], json!({"precision": 0.0, "recall": 0.0, "f1": 0.0}));
        }
        assert_eq!(v.as_object().unwrap().len(), 2);
        let text = emit_report(&Report::<f64>::empty(), OutputFormat::Json);
        let keys: Vec<usize> =
            ["\"micro\"", "\"macro\"", "\"weighted\""].iter().map(|k| text.find(k).unwrap()).collect();
        assert!(keys.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn json_is_full_precision() {
        let mut c = MatchCounts::new();
        c.record("A", Counts::new(1, 3, 1));
        let v = Report::<Rational>::from_counts(c).to_json();
        assert_eq!(v["classes"][0]["recall"], json!(1.0 / 3.0));
    }

    #[test]
    fn csv_layout() {
        let csv = emit_report(&perfect_per(), OutputFormat::Csv);
        assert!(csv.starts_with("label,precision,recall,f1,support\nPER,100.00,100.00,100.00,1\n"));
        assert_eq!(csv_field("a,b"), "\"a,b\"");
    }

    #[test]
    fn aggregate_cells() {
        let rows = vec![Aggregate { metric: "f1".to_string(), mean: 73.03, std: 1.29, n: 10 }];
        let md = rows.to_markdown();
        assert!(md.contains("f1 | 73.03 ± 1.29 | 10"), "{md}");
        let single = vec![Aggregate::single("f1", 73.03)];
        assert!(single.to_markdown().contains("73.03 ± 0.00 | 1\n\nn=1"));
    }

    #[test]
    fn carbon_table() {
        let e = EmissionEstimate { gpu_hours: 78.0, energy_kwh: 23.4, co2_kg: 0.7956 };
        assert!(e.to_markdown().contains("CO2-eq (kg) | 0.80"));
        assert_eq!(e.to_csv(), "gpu_hours,energy_kwh,co2_kg\n78.00,23.40,0.80\n");
    }

    #[test]
    fn formats_parse() {
        assert_eq!("JSON".parse::<OutputFormat>().unwrap(), OutputFormat::Json);
        assert!(matches!("xml".parse::<OutputFormat>(), Err(Error::Config(_))));
    }

    #[test]
    fn deterministic() {
        let r = perfect_per();
        for f in [OutputFormat::Json, OutputFormat::Markdown, OutputFormat::Csv] {
            assert_eq!(emit_report(&r, f), emit_report(&r.clone(), f));
        }
    }
}
