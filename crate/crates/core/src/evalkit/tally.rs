//! Code tallies and per-query ablation effect.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CodeClass, CodeLabel, EvalError, Phase, ResponseRef};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Annotation {
    #[serde(flatten)]
    pub response: ResponseRef,
    pub annotator_id: String,
    #[serde(default)]
    pub codes: BTreeSet<CodeLabel>,
    #[serde(default)]
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    Model,
    Query,
}

impl FromStr for GroupBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "model" => Ok(GroupBy::Model),
            "query" => Ok(GroupBy::Query),
            other => Err(format!("cannot group by {other:?} (expected model or query)")),
        }
    }
}

/// Group key; queries sort numerically, models by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroupKey {
    Query(u32),
    Model(String),
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Query(id) => write!(f, "{id}"),
            GroupKey::Model(m) => f.write_str(m),
        }
    }
}

impl GroupKey {
    fn of(by: GroupBy, r: &ResponseRef) -> GroupKey {
        match by {
            GroupBy::Model => GroupKey::Model(r.model_id.clone()),
            GroupBy::Query => GroupKey::Query(r.query_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorTally {
    pub group: GroupKey,
    pub phase: Phase,
    pub type1: u32,
    pub type2: u32,
    pub type2_star: u32,
}

impl ErrorTally {
    fn zero(group: GroupKey, phase: Phase) -> Self {
        ErrorTally {
            group,
            phase,
            type1: 0,
            type2: 0,
            type2_star: 0,
        }
    }

    pub fn count(&self, class: CodeClass) -> u32 {
        match class {
            CodeClass::Type1 => self.type1,
            CodeClass::Type2 => self.type2,
            CodeClass::Type2Star => self.type2_star,
        }
    }
}

/// Count code instances per class for every (group, phase). Groups in
/// `universe` appear even with no annotations; both phases are always
/// present. Output is sorted by group then phase.
pub fn tally(
    annotations: &[Annotation],
    by: GroupBy,
    universe: impl IntoIterator<Item = GroupKey>,
) -> Result<Vec<ErrorTally>, EvalError> {
    let mut seen = HashSet::new();
    for a in annotations {
        if !seen.insert((&a.response, a.annotator_id.as_str())) {
            return Err(EvalError::Invalid(format!(
                "annotator {} coded query {} / {} / {} twice",
                a.annotator_id, a.response.query_id, a.response.model_id, a.response.phase
            )));
        }
    }

    type Groups = BTreeMap<(GroupKey, Phase), ErrorTally>;
    fn ensure(k: GroupKey, groups: &mut Groups) {
        for p in Phase::BOTH {
            groups.entry((k.clone(), p)).or_insert_with(|| ErrorTally::zero(k.clone(), p));
        }
    }
    let mut groups = Groups::new();
    for k in universe {
        ensure(k, &mut groups);
    }
    for a in annotations {
        let key = GroupKey::of(by, &a.response);
        ensure(key.clone(), &mut groups);
        let t = groups.get_mut(&(key, a.response.phase)).expect("group inserted above");
        for c in &a.codes {
            match c.class() {
                CodeClass::Type1 => t.type1 += 1,
                CodeClass::Type2 => t.type2 += 1,
                CodeClass::Type2Star => t.type2_star += 1,
            }
        }
    }
    Ok(groups.into_values().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryDifference {
    pub query_id: u32,
    pub pre: u32,
    pub post: u32,
    pub difference: i64,
}

/// The control query must come through ablation unchanged; a non-zero
/// difference means the unlearning reached beyond the target corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntrusivenessGuard {
    pub query_id: u32,
    pub difference: i64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationEffect {
    /// Non-control queries in id order.
    pub differences: Vec<QueryDifference>,
    pub guard: Option<IntrusivenessGuard>,
}

/// Per-query `type2(post) - type2(pre)` from tallies grouped by query.
pub fn ablation_effect(tallies: &[ErrorTally], control: Option<u32>) -> Result<AblationEffect, EvalError> {
    let mut by_query: BTreeMap<u32, [Option<u32>; 2]> = BTreeMap::new();
    for t in tallies {
        let GroupKey::Query(id) = t.group else {
            return Err(EvalError::Invalid(format!("ablation effect needs tallies grouped by query, got {}", t.group)));
        };
        let slot = &mut by_query.entry(id).or_default()[t.phase as usize];
        if slot.is_some() {
            return Err(EvalError::Invalid(format!("duplicate {} tally for query {id}", t.phase)));
        }
        *slot = Some(t.type2);
    }
    let mut effect = AblationEffect {
        differences: Vec::new(),
        guard: None,
    };
    for (query_id, [pre, post]) in by_query {
        let (pre, post) = (pre.unwrap_or(0), post.unwrap_or(0));
        let difference = post as i64 - pre as i64;
        if Some(query_id) == control {
            effect.guard = Some(IntrusivenessGuard {
                query_id,
                difference,
                passed: difference == 0,
            });
        } else {
            effect.differences.push(QueryDifference {
                query_id,
                pre,
                post,
                difference,
            });
        }
    }
    if let (Some(id), None) = (control, &effect.guard) {
        effect.guard = Some(IntrusivenessGuard {
            query_id: id,
            difference: 0,
            passed: true,
        });
    }
    Ok(effect)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(q: u32, m: &str, phase: Phase, codes: &[&str]) -> Annotation {
        Annotation {
            response: ResponseRef {
                query_id: q,
                model_id: m.into(),
                phase,
            },
            annotator_id: "a1".into(),
            codes: codes.iter().map(|c| c.parse().unwrap()).collect(),
            note: String::new(),
        }
    }

    #[test]
    fn empty_set_gives_zero_rows() {
        let t = tally(&[], GroupBy::Model, [GroupKey::Model("m".into())]).unwrap();
        assert_eq!(t, vec![ErrorTally::zero(GroupKey::Model("m".into()), Phase::Pre), ErrorTally::zero(GroupKey::Model("m".into()), Phase::Post)]);
    }

    #[test]
    fn counts_by_class() {
        let a = [
            ann(1, "m", Phase::Pre, &[]),
            ann(1, "m", Phase::Post, &["2d", "1a", "2c*"]),
            ann(2, "m", Phase::Post, &["2a", "2b"]),
        ];
        let t = tally(&a, GroupBy::Model, []).unwrap();
        assert_eq!((t[1].type1, t[1].type2, t[1].type2_star), (1, 3, 1));
        let q = tally(&a, GroupBy::Query, []).unwrap();
        assert_eq!(q.len(), 4);
        assert_eq!(q[3].group, GroupKey::Query(2));
        assert_eq!(q[3].type2, 2);
    }

    #[test]
    fn double_coding_rejected() {
        let a = [ann(1, "m", Phase::Pre, &[]), ann(1, "m", Phase::Pre, &["2d"])];
        assert!(tally(&a, GroupBy::Model, []).is_err());
    }

    #[test]
    fn effect_and_guard() {
        let a = [
            ann(1, "m", Phase::Post, &["2d", "2e"]),
            ann(1, "m", Phase::Pre, &["2e"]),
            ann(4, "m", Phase::Pre, &["2a"]),
            ann(4, "m", Phase::Post, &["2a"]),
        ];
        let t = tally(&a, GroupBy::Query, [GroupKey::Query(2)]).unwrap();
        let e = ablation_effect(&t, Some(4)).unwrap();
        let d: Vec<_> = e.differences.iter().map(|d| (d.query_id, d.difference)).collect();
        assert_eq!(d, [(1, 1), (2, 0)]);
        assert!(e.guard.unwrap().passed);

        let by_model = tally(&a, GroupBy::Model, []).unwrap();
        assert!(ablation_effect(&by_model, None).is_err());
    }
}
