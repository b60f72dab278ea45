//! Citizen queries and their ground truths.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::Corpus;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: u32,
    pub text: String,
    pub topic: String,
    #[serde(default)]
    pub is_control: bool,
    #[serde(default)]
    pub ground_truth: String,
    #[serde(default)]
    pub source_urls: Vec<String>,
}

/// Checks a shipped evaluation set: unique ids, exactly one control, and
/// (when `target_urls` is given) every non-control source inside the target
/// corpus.
pub fn validate_queries(queries: &[Query], target_urls: Option<&BTreeSet<&str>>) -> Result<(), EvalError> {
    let mut seen = HashSet::new();
    for q in queries {
        if !seen.insert(q.id) {
            return Err(EvalError::Invalid(format!("duplicate query id {}", q.id)));
        }
    }
    let controls = queries.iter().filter(|q| q.is_control).count();
    if controls != 1 {
        return Err(EvalError::Invalid(format!("expected exactly one control query, found {controls}")));
    }
    if let Some(urls) = target_urls {
        for q in queries.iter().filter(|q| !q.is_control) {
            if let Some(u) = q.source_urls.iter().find(|u| !urls.contains(u.as_str())) {
                return Err(EvalError::Invalid(format!("query {} cites {u}, which is not in the target corpus", q.id)));
            }
        }
    }
    Ok(())
}

pub fn control_id(queries: &[Query]) -> Option<u32> {
    queries.iter().find(|q| q.is_control).map(|q| q.id)
}

const STOPWORDS: &[&str] = &[
    "the", "and", "for", "are", "can", "you", "your", "what", "how", "with", "that", "this", "from", "have", "has", "will",
    "does", "who", "when", "which", "about", "get", "i'm", "might", "other", "is", "if", "my", "do", "it", "of", "to", "in",
    "a", "an", "or", "on", "be", "i", "me", "am", "but", "still", "quite",
];

fn terms(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !c.is_alphanumeric() && c != '\'')
        .map(|w| w.trim_matches('\'').to_lowercase())
        .filter(|w| w.len() > 2 && !STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// Draft a ground truth for `query` from its source documents: paragraphs
/// are scored by how many query terms they contain and the best
/// `max_paragraphs` are kept in document order. The result is a starting
/// point for human editing.
pub fn compose_ground_truth(query: &Query, target: &Corpus, max_paragraphs: usize) -> Result<String, EvalError> {
    if query.source_urls.is_empty() {
        return Err(EvalError::Invalid(format!("query {} has no source urls", query.id)));
    }
    let wanted = terms(&query.text);
    let mut paragraphs: Vec<(usize, &str)> = Vec::new();
    for url in &query.source_urls {
        let doc = target
            .document_by_url(url)
            .ok_or_else(|| EvalError::Invalid(format!("query {}: {url} is not in corpus {}", query.id, target.name)))?;
        paragraphs.extend(doc.text.split('\n').map(str::trim).filter(|p| !p.is_empty()).map(|p| (0, p)));
    }
    for (score, p) in paragraphs.iter_mut() {
        *score = terms(p).intersection(&wanted).count();
    }
    let mut ranked: Vec<usize> = (0..paragraphs.len()).collect();
    ranked.sort_by(|&a, &b| paragraphs[b].0.cmp(&paragraphs[a].0).then(a.cmp(&b)));
    let mut keep: Vec<usize> = ranked
        .into_iter()
        .filter(|&i| paragraphs[i].0 > 0)
        .take(max_paragraphs.max(1))
        .collect();
    if keep.is_empty() {
        keep.push(0);
    }
    keep.sort_unstable();
    Ok(keep.iter().map(|&i| paragraphs[i].1).collect::<Vec<_>>().join("\n"))
}

#[cfg(test)]
mod tests {
    use chrono::Utc;

    use super::*;
    use crate::corpus::{build_corpus, Document, Role, WordTokenizer};

    fn q(id: u32, control: bool, urls: &[&str]) -> Query {
        Query {
            id,
            text: "How often is Universal Credit paid?".into(),
            topic: "Universal Credit".into(),
            is_control: control,
            ground_truth: String::new(),
            source_urls: urls.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn corpus() -> Corpus {
        let text = "Universal Credit is a payment to help with living costs.\n\
                    It is paid once a month.\n\
                    You can apply online.\n\
                    Universal Credit is usually paid monthly into your bank account.";
        let doc = Document::new("https://www.gov.uk/uc", text, "", "Universal Credit", Utc::now()).unwrap();
        build_corpus("target", vec![doc], Role::Target, 64, &WordTokenizer).unwrap()
    }

    #[test]
    fn needs_one_control() {
        assert!(validate_queries(&[q(1, false, &[]), q(2, false, &[])], None).is_err());
        assert!(validate_queries(&[q(1, false, &[]), q(2, true, &[])], None).is_ok());
        assert!(validate_queries(&[q(1, true, &[]), q(1, false, &[])], None).is_err());
    }

    #[test]
    fn sources_must_be_in_target() {
        let c = corpus();
        let urls = c.urls();
        let good = [q(1, false, &["https://www.gov.uk/uc"]), q(2, true, &["https://example.com/us"])];
        assert!(validate_queries(&good, Some(&urls)).is_ok());
        let bad = [q(1, false, &["https://www.gov.uk/other"]), q(2, true, &[])];
        assert!(validate_queries(&bad, Some(&urls)).is_err());
    }

    #[test]
    fn ground_truth_keeps_document_order() {
        let gt = compose_ground_truth(&q(1, false, &["https://www.gov.uk/uc"]), &corpus(), 2).unwrap();
        assert_eq!(
            gt,
            "Universal Credit is a payment to help with living costs.\n\
             Universal Credit is usually paid monthly into your bank account."
        );
        assert!(compose_ground_truth(&q(1, false, &["https://nope.example"]), &corpus(), 2).is_err());
    }
}
