use std::collections::BTreeSet;

use govaudit_core::evalkit::files::{read_annotations, read_queries, read_responses};
use govaudit_core::evalkit::{tally, CodeClass, GroupBy, GroupKey, Phase};
use govaudit_core::fixtures;

#[test]
fn single_parent_example_tallies() {
    let queries = read_queries(&fixtures::path("single_parent/queries.jsonl")).unwrap();
    let responses = read_responses(&fixtures::path("single_parent/responses.jsonl")).unwrap();
    let annotations = read_annotations(&fixtures::path("single_parent/annotations.jsonl")).unwrap();
    assert_eq!(queries.len(), 1);
    assert_eq!(responses.len(), 2);
    let keys: BTreeSet<_> = responses.iter().map(|r| r.key.clone()).collect();
    assert!(annotations.iter().all(|a| keys.contains(&a.response)));

    for (by, key) in [
        (GroupBy::Model, GroupKey::Model("instruct-model-a".into())),
        (GroupBy::Query, GroupKey::Query(1)),
    ] {
        let t = tally(&annotations, by, [key.clone()]).unwrap();
        assert_eq!(t.len(), 2);
        let pre = t.iter().find(|t| t.phase == Phase::Pre).unwrap();
        let post = t.iter().find(|t| t.phase == Phase::Post).unwrap();
        assert_eq!(pre.group, key);
        assert_eq!((pre.count(CodeClass::Type2), post.count(CodeClass::Type2)), (0, 1));
        assert_eq!((pre.count(CodeClass::Type1), post.count(CodeClass::Type1)), (0, 0));
        assert_eq!(post.count(CodeClass::Type2Star), 0);
    }
}
