use std::collections::BTreeSet;

use govaudit_core::fixtures;
use govaudit_core::leakage::{load_families, read_records, run_matrix, MatrixOptions, Outcome, Setting};

#[test]
fn fixture_families_fill_the_grid() {
    let records = read_records(&fixtures::path("records.jsonl")).unwrap();
    let families = load_families(&fixtures::path("probe/families.toml")).unwrap();
    assert_eq!(families.len(), 3);
    let m = run_matrix(&records, &families, &MatrixOptions::default()).unwrap();

    let non_control = records.iter().filter(|r| !r.is_control).count();
    assert_eq!(non_control, 5);
    assert_eq!(m.counts.non_control.total(), 195);
    assert_eq!(m.counts.control.total(), 78);
    assert_eq!(m.counts.non_control.failed, 0);

    let recalled: BTreeSet<(String, String, String)> = m
        .cells
        .iter()
        .filter(|c| !c.is_control && c.result.as_ref().map(|r| r.outcome) == Some(Outcome::Recalled))
        .map(|c| (c.spec.dataset.clone(), c.spec.family.clone(), c.spec.setting.to_string()))
        .collect();
    assert_eq!(m.counts.non_control.recalled, 5);
    assert!(recalled.contains(&("SAS".into(), "fam-b".into(), "5-shot".into())));
    assert!(recalled.contains(&("POL".into(), "fam-c".into(), "instruct".into())));

    for c in &m.cells {
        if c.result.as_ref().map(|r| r.outcome) == Some(Outcome::Reticent) {
            assert_eq!(c.spec.setting, Setting::Instruct);
        }
    }
    assert!(m.counts.non_control.reticent > 0);
}
