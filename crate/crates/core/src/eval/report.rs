use super::score::ScoreCard;
use crate::model::Typology;
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            other => Err(format!("unknown report format `{other}` (expected text, csv or markdown)")),
        }
    }
}

/// One scored (component, typology) combination. This is also the layout of
/// `*.card.json` files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRow {
    pub component: String,
    pub typology: Typology,
    pub card: ScoreCard,
}

const HEADER: [&str; 11] = [
    "Component", "Example", "Q1", "Q2", "Q3", "Q4", "Q5", "Q6", "Q7", "Q8", "Q9",
];

/// Components keep their first-appearance order; within one component the
/// rows go general, expert, domain.
fn ordered(rows: &[ReportRow]) -> Vec<&ReportRow> {
    let mut components: Vec<&str> = Vec::new();
    for r in rows {
        if !components.contains(&r.component.as_str()) {
            components.push(&r.component);
        }
    }
    let mut out: Vec<&ReportRow> = rows.iter().collect();
    out.sort_by_key(|r| {
        (
            components.iter().position(|c| *c == r.component).unwrap_or(usize::MAX),
            r.typology,
        )
    });
    out
}

fn cells(row: &ReportRow) -> Vec<String> {
    let mut v = vec![row.component.clone(), row.typology.to_string()];
    v.extend(row.card.triples().iter().map(|t| t.to_string()));
    v
}

/// Score table with columns Component, Example, Q1..Q9.
pub fn render_report(rows: &[ReportRow], format: ReportFormat) -> String {
    let body: Vec<Vec<String>> = ordered(rows).into_iter().map(cells).collect();
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            // Writing to a Vec cannot fail.
            w.write_record(HEADER).expect("csv header");
            for r in &body {
                w.write_record(r).expect("csv row");
            }
            String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf-8")
        }
        ReportFormat::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "| {} |", HEADER.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(HEADER.len()));
            let mut last: Option<&str> = None;
            for r in &body {
                // Repeated component names are blanked like merged cells.
                let name = if last == Some(r[0].as_str()) { "" } else { r[0].as_str() };
                last = Some(&r[0]);
                let mut line = vec![name];
                line.extend(r[1..].iter().map(String::as_str));
                let _ = writeln!(out, "| {} |", line.join(" | "));
            }
            out
        }
        ReportFormat::Text => {
            let mut widths: Vec<usize> = HEADER.iter().map(|h| h.chars().count()).collect();
            for r in &body {
                for (w, c) in widths.iter_mut().zip(r) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let line = |cols: Vec<&str>| -> String {
                let padded: Vec<String> = cols
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect();
                padded.join("  ").trim_end().to_string()
            };
            let mut out = String::new();
            let _ = writeln!(out, "{}", line(HEADER.to_vec()));
            for r in &body {
                let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
            }
            out
        }
    }
}
