//! On-disk formats: `queries.jsonl`, `responses.jsonl`, `annotations.jsonl`
//! (JSON lines), and `prevalence.csv`, `diffs.csv`, `tallies.csv`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Annotation, ErrorTally, EvalError, GroupKey, Phase, PrevalenceScore, Query, QueryDifference, ResponseRecord};
use crate::jsonl;

pub fn read_queries(path: &Path) -> Result<Vec<Query>, EvalError> {
    Ok(jsonl::read(path)?)
}

pub fn read_responses(path: &Path) -> Result<Vec<ResponseRecord>, EvalError> {
    Ok(jsonl::read(path)?)
}

pub fn write_responses(path: &Path, records: &[ResponseRecord]) -> Result<(), EvalError> {
    Ok(jsonl::write(path, records)?)
}

pub fn read_annotations(path: &Path) -> Result<Vec<Annotation>, EvalError> {
    Ok(jsonl::read(path)?)
}

pub fn write_annotations(path: &Path, annotations: &[Annotation]) -> Result<(), EvalError> {
    Ok(jsonl::write(path, annotations)?)
}

fn format_err(path: &Path, e: impl std::fmt::Display) -> EvalError {
    EvalError::Format {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

#[derive(Serialize, Deserialize)]
struct PrevalenceRow {
    query_id: u32,
    score: u8,
    #[serde(default)]
    evidence_urls: Option<String>,
}

/// `query_id,score[,evidence_urls]`, evidence urls separated by spaces.
pub fn read_prevalence(path: &Path) -> Result<Vec<PrevalenceScore>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| format_err(path, e))?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<PrevalenceRow>() {
        let row = row.map_err(|e| format_err(path, e))?;
        if row.score > 10 {
            return Err(format_err(path, format!("query {}: score {} above 10", row.query_id, row.score)));
        }
        out.push(PrevalenceScore {
            query_id: row.query_id,
            score: row.score,
            evidence_urls: row
                .evidence_urls
                .unwrap_or_default()
                .split_whitespace()
                .map(str::to_string)
                .collect(),
        });
    }
    Ok(out)
}

pub fn write_prevalence(path: &Path, scores: &[PrevalenceScore]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err(path, e))?;
    for s in scores {
        w.serialize(PrevalenceRow {
            query_id: s.query_id,
            score: s.score,
            evidence_urls: Some(s.evidence_urls.join(" ")),
        })
        .map_err(|e| format_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_differences(path: &Path) -> Result<Vec<QueryDifference>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format_err(path, e))?;
    let rows: Result<Vec<QueryDifference>, _> = rdr.deserialize().collect();
    rows.map_err(|e| format_err(path, e))
}

pub fn write_differences(path: &Path, diffs: &[QueryDifference]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err(path, e))?;
    for d in diffs {
        w.serialize(d).map_err(|e| format_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct TallyRow {
    group: String,
    phase: Phase,
    type1: u32,
    type2: u32,
    type2_star: u32,
}

pub fn write_tallies(path: &Path, tallies: &[ErrorTally]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format_err(path, e))?;
    for t in tallies {
        w.serialize(TallyRow {
            group: t.group.to_string(),
            phase: t.phase,
            type1: t.type1,
            type2: t.type2,
            type2_star: t.type2_star,
        })
        .map_err(|e| format_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Groups that parse as integers are read back as query ids.
pub fn read_tallies(path: &Path) -> Result<Vec<ErrorTally>, EvalError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| format_err(path, e))?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<TallyRow>() {
        let row = row.map_err(|e| format_err(path, e))?;
        let group = match row.group.parse::<u32>() {
            Ok(id) => GroupKey::Query(id),
            Err(_) => GroupKey::Model(row.group),
        };
        out.push(ErrorTally {
            group,
            phase: row.phase,
            type1: row.type1,
            type2: row.type2,
            type2_star: row.type2_star,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prevalence_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("prevalence.csv");
        std::fs::write(&p, "query_id,score\n1, 3\n2,10\n").unwrap();
        let s = read_prevalence(&p).unwrap();
        assert_eq!(s[1].score, 10);
        write_prevalence(&p, &s).unwrap();
        assert_eq!(read_prevalence(&p).unwrap(), s);
        std::fs::write(&p, "query_id,score\n1,11\n").unwrap();
        assert!(read_prevalence(&p).is_err());
    }

    #[test]
    fn tallies_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let t = vec![
            ErrorTally {
                group: GroupKey::Model("llama".into()),
                phase: Phase::Pre,
                type1: 1,
                type2: 2,
                type2_star: 3,
            },
            ErrorTally {
                group: GroupKey::Query(7),
                phase: Phase::Post,
                type1: 0,
                type2: 5,
                type2_star: 0,
            },
        ];
        write_tallies(&p, &t).unwrap();
        assert_eq!(read_tallies(&p).unwrap(), t);
    }
}
