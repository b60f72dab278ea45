use std::collections::{BTreeMap, BTreeSet};

use govaudit_core::corpus::{chunk_documents, reassemble, Document, WordTokenizer};
use govaudit_core::evalkit::{pearson, tally, Annotation, CodeLabel, GroupBy, GroupKey, Phase, ResponseRef};
use govaudit_core::leakage::{
    classify, render_prompt, Comparator, HistoryEntry, Outcome, PrintedValue, ProbeMode, ReticenceConfig,
    StatisticRecord, TemplateId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(values: &[u32]) -> StatisticRecord {
    StatisticRecord {
        dataset_abbrev: "T".into(),
        statistic_name: "Number of widgets".into(),
        metric_name: None,
        collecting_org: "the Widget Office".into(),
        year_label: format!("{}", 2000 + values.len() - 1),
        value: PrintedValue::new(values[values.len() - 1].to_string()),
        unit: String::new(),
        is_control: false,
        history: values
            .iter()
            .enumerate()
            .map(|(i, v)| HistoryEntry {
                year: format!("{}", 2000 + i),
                value: PrintedValue::new(v.to_string()),
            })
            .collect(),
    }
}

fn template() -> impl Strategy<Value = TemplateId> {
    prop::sample::select(TemplateId::ALL.to_vec())
}

// Oracle for the code classes, from the code strings alone.
fn class_of(code: &str) -> usize {
    if code.starts_with('1') {
        0
    } else if code.ends_with("star") {
        2
    } else {
        1
    }
}

fn random_annotations(rng: &mut ChaCha8Rng, n: usize) -> Vec<Annotation> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let key = ResponseRef {
            query_id: rng.gen_range(1..=19),
            model_id: format!("m{}", rng.gen_range(0..5)),
            phase: if rng.gen_bool(0.5) { Phase::Pre } else { Phase::Post },
        };
        let annotator = format!("a{}", rng.gen_range(0..12));
        if !seen.insert((key.clone(), annotator.clone())) {
            continue;
        }
        let codes = CodeLabel::ALL.iter().copied().filter(|_| rng.gen_bool(0.2)).collect();
        out.push(Annotation {
            response: key,
            annotator_id: annotator,
            codes,
            note: String::new(),
        });
    }
    out
}

fn recount(anns: &[Annotation], by: GroupBy) -> BTreeMap<(String, Phase), [u32; 3]> {
    let mut m = BTreeMap::new();
    for a in anns {
        let g = match by {
            GroupBy::Model => a.response.model_id.clone(),
            GroupBy::Query => a.response.query_id.to_string(),
        };
        let slot: &mut [u32; 3] = m.entry((g, a.response.phase)).or_default();
        for c in &a.codes {
            slot[class_of(c.as_str())] += 1;
        }
    }
    m
}

fn check_tally(anns: &[Annotation]) {
    for by in [GroupBy::Model, GroupBy::Query] {
        let universe: Vec<GroupKey> = match by {
            GroupBy::Model => (0..5).map(|i| GroupKey::Model(format!("m{i}"))).collect(),
            GroupBy::Query => (1..=19).map(GroupKey::Query).collect(),
        };
        let tallies = tally(anns, by, universe.clone()).unwrap();
        assert_eq!(tallies.len(), universe.len() * 2);
        let oracle = recount(anns, by);
        for t in &tallies {
            let want = oracle.get(&(t.group.to_string(), t.phase)).copied().unwrap_or_default();
            assert_eq!([t.type1, t.type2, t.type2_star], want, "{} {:?}", t.group, t.phase);
        }
    }
}

#[test]
fn tally_matches_recount_on_1000_annotations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    check_tally(&random_annotations(&mut rng, 1000));
}

proptest! {
    #[test]
    fn tally_matches_recount(seed in any::<u64>(), n in 0usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check_tally(&random_annotations(&mut rng, n));
    }

    // Adding a shot keeps every line of the shorter prompt and adds one.
    #[test]
    fn shots_extend_the_prompt(values in prop::collection::vec(0u32..100_000, 7..12), t in template(), k in 0usize..5) {
        let r = record(&values);
        let short: Vec<String> = render_prompt(&r, t, k).unwrap().lines().map(String::from).collect();
        let long: Vec<String> = render_prompt(&r, t, k + 1).unwrap().lines().map(String::from).collect();
        prop_assert_eq!(long.len(), short.len() + 1);
        let header = usize::from(t == TemplateId::D);
        prop_assert_eq!(&long[..header], &short[..header]);
        prop_assert_eq!(&long[header + 1..], &short[header..]);
        prop_assert!(long.last().unwrap().contains(&r.year_label));
    }

    #[test]
    fn too_many_shots_is_an_error(values in prop::collection::vec(0u32..100, 1..6), t in template()) {
        let r = record(&values);
        prop_assert!(render_prompt(&r, t, values.len()).is_err());
        prop_assert!(render_prompt(&r, t, values.len() - 1).is_ok());
    }

    // Loosening the comparator never loses a recall.
    #[test]
    fn comparator_is_monotone(truth in 1u32..1_000_000, guess in 0u32..2_000_000, r1 in 0.0f64..0.5, extra in 0.0f64..0.5) {
        let rec = record(&[truth]);
        let reply = format!(" {guess}");
        let recalled = |c: Comparator| {
            classify(ProbeMode::BaseCompletion, &reply, &rec, &c, &ReticenceConfig::default()).outcome == Outcome::Recalled
        };
        let exact = recalled(Comparator::Exact);
        let loose = recalled(Comparator::Tolerance { relative: r1 });
        let looser = recalled(Comparator::Tolerance { relative: r1 + extra });
        prop_assert!(!exact || loose);
        prop_assert!(!loose || looser);
        prop_assert_eq!(exact, guess == truth);
    }

    #[test]
    fn base_completions_are_never_reticent(reply in ".{0,40}") {
        let rec = record(&[5, 7]);
        let c = classify(ProbeMode::BaseCompletion, &reply, &rec, &Comparator::Exact, &ReticenceConfig::default());
        prop_assert_ne!(c.outcome, Outcome::Reticent);
    }

    #[test]
    fn pearson_symmetric_and_affine_invariant(
        pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..40),
        a in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
        b in -100.0f64..100.0,
    ) {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        if let Ok(xy) = pearson(&x, &y) {
            let yx = pearson(&y, &x).unwrap();
            prop_assert!((xy.r - yx.r).abs() < 1e-9);
            prop_assert!((xy.p_value - yx.p_value).abs() < 1e-9);
            let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let t = pearson(&ax, &y).unwrap();
            prop_assert!((t.r - a.signum() * xy.r).abs() < 1e-7, "{} vs {}", t.r, xy.r);
            prop_assert!((-1.0..=1.0).contains(&xy.r));
        }
    }

    #[test]
    fn chunks_tile_the_text(words in prop::collection::vec("[a-zA-Z0-9£,.]{1,12}", 1..400), seps in prop::collection::vec(prop::sample::select(vec![" ", "  ", "\n", " \n "]), 400), len in 16usize..80) {
        let text: String = words.iter().zip(&seps).map(|(w, s)| format!("{w}{s}")).collect::<String>().trim().to_string();
        let doc = Document::new("https://www.gov.uk/x", text.clone(), "", "", chrono::Utc::now()).unwrap();
        let chunks = chunk_documents(std::slice::from_ref(&doc), &WordTokenizer, len).unwrap();
        prop_assert!(chunks.iter().all(|c| c.tokens <= len && c.tokens > 0));
        let refs: Vec<_> = chunks.iter().collect();
        prop_assert_eq!(reassemble(&text, &refs), Some(text));
    }
}
