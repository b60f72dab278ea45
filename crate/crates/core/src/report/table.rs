//! Publication-style grid of probe outcomes.

use std::fmt::Write as _;

use crate::leakage::{Outcome, ResultMatrix, Setting};

fn mark(outcome: Option<Outcome>) -> char {
    match outcome {
        Some(Outcome::Recalled) => '✓',
        Some(Outcome::NotRecalled) => '✗',
        Some(Outcome::Reticent) => '★',
        None => '?',
    }
}

fn settings(m: &ResultMatrix) -> Vec<Setting> {
    m.shots.iter().map(|&k| Setting::Shots(k)).chain([Setting::Instruct]).collect()
}

/// Marks for one (dataset, family, setting) cell: one per template for base
/// settings, a single mark for the instruct question.
pub fn cell_marks(m: &ResultMatrix, dataset: &str, family: &str, setting: Setting) -> String {
    match setting {
        Setting::Instruct => m
            .cell(dataset, family, setting, None)
            .map(|c| mark(c.result.as_ref().map(|r| r.outcome)).to_string())
            .unwrap_or_default(),
        Setting::Shots(_) => m
            .templates
            .iter()
            .filter_map(|&t| m.cell(dataset, family, setting, Some(t)))
            .map(|c| mark(c.result.as_ref().map(|r| r.outcome)))
            .collect(),
    }
}

/// `(header, rows)`; the first column is the dataset, marked `(control)`
/// for controls.
pub fn grid(m: &ResultMatrix) -> (Vec<String>, Vec<Vec<String>>) {
    let settings = settings(m);
    let mut header = vec!["dataset".to_string()];
    for f in &m.families {
        header.extend(settings.iter().map(|s| format!("{f} {s}")));
    }
    let rows = m
        .datasets
        .iter()
        .map(|d| {
            let control = m.cells.iter().any(|c| &c.spec.dataset == d && c.is_control);
            let mut row = vec![if control { format!("{d} (control)") } else { d.clone() }];
            for f in &m.families {
                row.extend(settings.iter().map(|&s| cell_marks(m, d, f, s)));
            }
            row
        })
        .collect();
    (header, rows)
}

pub fn matrix_csv(m: &ResultMatrix) -> Result<String, csv::Error> {
    let (header, rows) = grid(m);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8"))
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn matrix_html(m: &ResultMatrix) -> String {
    let settings = settings(m);
    let mut h = String::from(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Probe results</title>\n<style>\n\
         table{border-collapse:collapse;font-family:sans-serif;font-size:13px}\n\
         td,th{border:1px solid #999;padding:3px 6px;text-align:center}\n\
         .r{color:#1a7f37}.n{color:#c62828}.t{color:#e07b00}.f{color:#777}\n</style></head><body>\n<table>\n<tr><th></th>",
    );
    for f in &m.families {
        let _ = write!(h, "<th colspan=\"{}\">{}</th>", settings.len(), esc(f));
    }
    h.push_str("</tr>\n<tr><th></th>");
    for _ in &m.families {
        for s in &settings {
            let _ = write!(h, "<th>{s}</th>");
        }
    }
    h.push_str("</tr>\n");
    let (_, rows) = grid(m);
    for row in rows {
        let _ = write!(h, "<tr><th>{}</th>", esc(&row[0]));
        for cell in &row[1..] {
            h.push_str("<td>");
            for ch in cell.chars() {
                let class = match ch {
                    '✓' => "r",
                    '✗' => "n",
                    '★' => "t",
                    _ => "f",
                };
                let _ = write!(h, "<span class=\"{class}\">{ch}</span>");
            }
            h.push_str("</td>");
        }
        h.push_str("</tr>\n");
    }
    let c = &m.counts;
    let _ = write!(
        h,
        "</table>\n<p>Non-control: {} recalled, {} not recalled, {} reticent, {} failed. \
         Control: {} recalled, {} not recalled, {} reticent, {} failed.</p>\n</body></html>\n",
        c.non_control.recalled,
        c.non_control.not_recalled,
        c.non_control.reticent,
        c.non_control.failed,
        c.control.recalled,
        c.control.not_recalled,
        c.control.reticent,
        c.control.failed
    );
    h
}
