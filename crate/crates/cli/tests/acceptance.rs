//! Acceptance checks, one line per criterion. Exits non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use govaudit_core::corpus::{build_corpus, Role, WordTokenizer};
use govaudit_core::evalkit::files::{read_annotations, read_prevalence, read_queries, read_responses};
use govaudit_core::evalkit::{
    ablation_effect, control_id, pearson, prevalence_correlation, tally, Annotation, CodeClass, CodeLabel,
    ErrorTally, GroupBy, GroupKey, Phase, ResponseRef,
};
use govaudit_core::fixtures;
use govaudit_core::leakage::{
    load_families, read_records, render_prompt, run_matrix, MatrixOptions, ModelFamily, Outcome, Setting,
    TemplateId,
};
use govaudit_core::model::{LocalModel, ModelKind, ScriptedModel, TrainableLm, Vocab};
use govaudit_core::unlearn::{run_unlearning, unlearning_objective, BatchSampler, Batches, MemoryObserver, UnlearningConfig};
use govaudit_core::{Correlation, ToyLm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

// A1: ablation on the fixture model.

fn a1() -> Check {
    let start = Instant::now();
    let mut model = LocalModel::load(&fixtures::path("models/tiny")).map_err(err)?;
    let docs: Vec<_> = fixtures::target_documents()
        .map_err(err)?
        .into_iter()
        .filter(|d| d.topic == "Universal Credit")
        .take(10)
        .collect();
    ensure(!docs.is_empty() && docs.len() <= 10, format!("{} target documents", docs.len()))?;
    let target = build_corpus("target", docs, Role::Target, 64, &WordTokenizer).map_err(err)?;
    let safe = build_corpus("safe", fixtures::safe_documents().map_err(err)?, Role::Safe, 64, &WordTokenizer).map_err(err)?;
    let config = UnlearningConfig {
        max_steps: 200,
        ..UnlearningConfig::default()
    };
    ensure(config.weights() == [0.25, 0.0, 1.0] && config.learning_rate == 2e-4, "default config drifted")?;
    let run = run_unlearning(&mut model.lm, "tiny-govuk", &target, &safe, &config, &mut MemoryObserver::default())
        .map_err(err)?;
    let s = run.summary.ok_or("run did not complete")?;
    let ratio = s.final_target_loss / s.initial_target_loss;
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "target CE x{ratio:.3} ({:.4} -> {:.4}), mean safe KL {:.4}, {secs:.1}s",
        s.initial_target_loss, s.final_target_loss, s.mean_safe_kl
    );
    ensure(s.steps_completed == 200, format!("{} steps; {detail}", s.steps_completed))?;
    ensure(ratio >= 1.2 && s.mean_safe_kl < 0.5 && secs < 600.0, detail.clone())?;
    Ok(detail)
}

// A2 and A3 share a toy setup.

const TARGET: &[&str] = &[
    "you can claim universal credit if you are on a low income or out of work .",
    "child benefit is paid every four weeks for each child you are responsible for .",
    "you may get an advance on your first universal credit payment .",
];
const SAFE: &[&str] = &[
    "parliament is sovereign and the crown acts on the advice of ministers .",
    "the courts interpret statutes passed by parliament .",
    "constitutional conventions are not enforced by the courts .",
];

fn toy(seed: u64) -> ToyLm {
    ToyLm::new(Vocab::build(TARGET.iter().chain(SAFE).copied(), 256), seed)
}

fn toy_batches(m: &ToyLm, seed: u64) -> Batches {
    let enc = |ts: &[&str]| ts.iter().map(|t| m.encode(t)).collect::<Vec<_>>();
    let sampler = BatchSampler::new(enc(TARGET), enc(SAFE)).expect("non-empty");
    sampler.sample(&mut ChaCha8Rng::seed_from_u64(seed), 3, true)
}

fn perturbed(m: &ToyLm, seed: u64, scale: f64) -> ToyLm {
    let mut out = m.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in out.params_mut() {
        *p += rng.gen_range(-scale..scale);
    }
    out
}

fn a2() -> Check {
    let current = toy(4);
    let reference = perturbed(&current, 11, 0.5);
    let b = toy_batches(&current, 7);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for w in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
        let cfg = UnlearningConfig::default().with_weights(w[0], w[1], w[2]);
        let mut grad = vec![0.0; current.params().len()];
        unlearning_objective(&current, &reference, &b, &cfg, Some(&mut grad)).map_err(err)?;
        let f = |m: &ToyLm| unlearning_objective(m, &reference, &b, &cfg, None).map(|v| v.objective);
        let mut w_worst: f64 = 0.0;
        for i in 0..grad.len() {
            let mut plus = current.clone();
            plus.params_mut()[i] += h;
            let mut minus = current.clone();
            minus.params_mut()[i] -= h;
            let fd = (f(&plus).map_err(err)? - f(&minus).map_err(err)?) / (2.0 * h);
            let denom = fd.abs().max(grad[i].abs());
            if denom > 1e-7 {
                w_worst = w_worst.max((fd - grad[i]).abs() / denom);
            }
        }
        ensure(w_worst <= 1e-4, format!("weights {w:?}: relative error {w_worst:.2e}"))?;
        worst = worst.max(w_worst);
    }
    Ok(format!("{} parameters x 3 weightings, worst relative error {worst:.2e}", current.params().len()))
}

fn a3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let current = toy(rng.gen());
        let reference = perturbed(&current, rng.gen(), rng.gen_range(0.0..1.0));
        let b = toy_batches(&current, rng.gen());
        let w: [f64; 3] = [rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)];
        let cfg = UnlearningConfig::default().with_weights(w[0], w[1], w[2]);
        let v = unlearning_objective(&current, &reference, &b, &cfg, None).map_err(err)?;
        let composed = w[0] * v.forget_term + w[1] * v.mismatch_term + w[2] * v.preserve_term;
        let gap = (v.objective - composed).abs();
        ensure(gap <= 1e-9, format!("trial {trial}: gap {gap:.2e}"))?;
        worst = worst.max(gap);
        let same = unlearning_objective(&current, &current.clone(), &b, &cfg, None).map_err(err)?;
        ensure(same.preserve_term == 0.0, format!("trial {trial}: preserve {} at identity", same.preserve_term))?;
    }
    Ok(format!("100 trials, worst gap {worst:.2e}, preserve 0 at identity"))
}

// A4: tallies.

fn class_of(code: &str) -> usize {
    if code.starts_with('1') {
        0
    } else if code.ends_with("star") {
        2
    } else {
        1
    }
}

fn a4() -> Check {
    let anns = read_annotations(&fixtures::path("single_parent/annotations.jsonl")).map_err(err)?;
    let t = tally(&anns, GroupBy::Model, []).map_err(err)?;
    let get = |p: Phase| t.iter().find(|t| t.phase == p).map(|t| t.count(CodeClass::Type2));
    ensure(get(Phase::Pre) == Some(0) && get(Phase::Post) == Some(1), format!("single-parent example: {t:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut seen = BTreeSet::new();
    let mut random = Vec::new();
    while random.len() < 1000 {
        let key = ResponseRef {
            query_id: rng.gen_range(1..=19),
            model_id: format!("m{}", rng.gen_range(0..5)),
            phase: if rng.gen_bool(0.5) { Phase::Pre } else { Phase::Post },
        };
        let annotator = format!("a{}", rng.gen_range(0..12));
        if !seen.insert((key.clone(), annotator.clone())) {
            continue;
        }
        random.push(Annotation {
            response: key,
            annotator_id: annotator,
            codes: CodeLabel::ALL.iter().copied().filter(|_| rng.gen_bool(0.2)).collect(),
            note: String::new(),
        });
    }
    for by in [GroupBy::Model, GroupBy::Query] {
        let mut want: BTreeMap<(String, Phase), [u32; 3]> = BTreeMap::new();
        for a in &random {
            let g = match by {
                GroupBy::Model => a.response.model_id.clone(),
                GroupBy::Query => a.response.query_id.to_string(),
            };
            let slot = want.entry((g, a.response.phase)).or_default();
            for c in &a.codes {
                slot[class_of(c.as_str())] += 1;
            }
        }
        let got: BTreeMap<(String, Phase), [u32; 3]> = tally(&random, by, [])
            .map_err(err)?
            .into_iter()
            .map(|t: ErrorTally| {
                let g = match &t.group {
                    GroupKey::Model(m) => m.clone(),
                    GroupKey::Query(q) => q.to_string(),
                };
                ((g, t.phase), [t.type1, t.type2, t.type2_star])
            })
            .filter(|(_, c)| c.iter().any(|&n| n > 0))
            .collect();
        want.retain(|_, c| c.iter().any(|&n| n > 0));
        ensure(got == want, format!("{by:?} tally differs from recount"))?;
    }
    Ok("single-parent example 0 -> 1; 1000 random annotations match recount".into())
}

// A5 and A6: guard and correlation on the study set.

fn study_set() -> Result<(Vec<Annotation>, Option<u32>), String> {
    let queries = read_queries(&fixtures::path("queries.jsonl")).map_err(err)?;
    let anns = read_annotations(&fixtures::path("study/annotations.jsonl")).map_err(err)?;
    Ok((anns, control_id(&queries)))
}

fn a5() -> Check {
    let (mut anns, control) = study_set()?;
    let control_id = control.ok_or("no control query")?;
    for m in anns.iter().filter(|a| a.response.query_id == control_id).map(|a| &a.response.model_id) {
        let codes = |p: Phase| {
            anns.iter()
                .find(|a| a.response.query_id == control_id && &a.response.model_id == m && a.response.phase == p)
                .map(|a| a.codes.clone())
        };
        ensure(codes(Phase::Pre) == codes(Phase::Post), format!("control pre/post differ for {m}"))?;
    }
    let guard = |anns: &[Annotation]| -> Result<_, String> {
        let t = tally(anns, GroupBy::Query, []).map_err(err)?;
        ablation_effect(&t, control).map_err(err)?.guard.ok_or_else(|| "no guard".to_string())
    };
    let g = guard(&anns)?;
    ensure(g.difference == 0 && g.passed, format!("identical control: {g:?}"))?;
    let post = anns
        .iter_mut()
        .find(|a| a.response.query_id == control_id && a.response.phase == Phase::Post && !a.codes.contains(&CodeLabel::C2d))
        .ok_or("no control post annotation to perturb")?;
    post.codes.insert(CodeLabel::C2d);
    let g = guard(&anns)?;
    ensure(!g.passed, format!("perturbed control passed: {g:?}"))?;
    Ok(format!("identical control passes, perturbed fails (difference {})", g.difference))
}

fn definitional_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn a6() -> Check {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let up: Correlation = pearson(&x, &[3.0, 5.0, 7.0, 9.0, 11.0]).map_err(err)?;
    let down: Correlation = pearson(&x, &[10.0, 8.0, 6.0, 4.0, 2.0]).map_err(err)?;
    ensure(up.r == 1.0 && down.r == -1.0, format!("trivial cases gave {} and {}", up.r, down.r))?;

    let (anns, control) = study_set()?;
    let prevalence = read_prevalence(&fixtures::path("study/prevalence.csv")).map_err(err)?;
    let t = tally(&anns, GroupBy::Query, []).map_err(err)?;
    let effect = ablation_effect(&t, control).map_err(err)?;
    let (c, pairs): (Correlation, _) = prevalence_correlation(&effect.differences, &prevalence, control).map_err(err)?;
    ensure(pairs.len() == 18, format!("{} pairs", pairs.len()))?;
    let xs: Vec<f64> = pairs.iter().map(|p| p.difference as f64).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.prevalence as f64).collect();
    let oracle = definitional_r(&xs, &ys);
    ensure((c.r - oracle).abs() <= 1e-9, format!("r {} vs oracle {oracle}", c.r))?;
    ensure(c.r < 0.0 && c.p_value < 0.05, format!("r {:.4}, p {:.4}", c.r, c.p_value))?;
    Ok(format!("r = +/-1 exact; 18 pairs r = {:.4} (oracle gap {:.1e}), p = {:.2e}", c.r, (c.r - oracle).abs(), c.p_value))
}

// A7: prompt goldens.

fn a7() -> Check {
    let records = read_records(&fixtures::path("records.jsonl")).map_err(err)?;
    let sas = records.iter().find(|r| r.dataset_abbrev == "SAS").ok_or("no SAS record")?;
    let mut n = 0;
    for t in TemplateId::ALL {
        for k in [0, 1, 5] {
            let want = std::fs::read_to_string(fixtures::path(&format!("golden/prompts/sas_{t}_{k}.txt"))).map_err(err)?;
            let got = render_prompt(sas, t, k).map_err(err)?;
            ensure(got == want, format!("template {t}, {k}-shot differs from golden"))?;
            n += 1;
        }
    }
    Ok(format!("{n} golden prompts match"))
}

// A8: probe matrix.

fn a8() -> Check {
    let records = read_records(&fixtures::path("records.jsonl")).map_err(err)?;
    let families = load_families(&fixtures::path("probe/families.toml")).map_err(err)?;
    let opts = MatrixOptions::default();
    let m = run_matrix(&records, &families, &opts).map_err(err)?;
    ensure(m.counts.non_control.total() == 195, format!("{} non-control outcomes", m.counts.non_control.total()))?;
    let reticent_outside = |m: &govaudit_core::leakage::ResultMatrix| {
        m.cells
            .iter()
            .filter(|c| c.result.as_ref().map(|r| r.outcome) == Some(Outcome::Reticent))
            .any(|c| c.spec.setting != Setting::Instruct)
    };
    ensure(!reticent_outside(&m), "reticent outcome outside instruct mode")?;

    // A double scripted with the right answer to exactly k cell prompts.
    let blank = || {
        let base = ScriptedModel::new("k-base", ModelKind::Base, vec![], "the");
        let instruct = ScriptedModel::new("k-instruct", ModelKind::Instruct, vec![], "I'm sorry, I cannot help with that.");
        (base, instruct)
    };
    let (b, i) = blank();
    let dry = run_matrix(&records, &[ModelFamily::new("k", Arc::new(b), Arc::new(i)).map_err(err)?], &opts).map_err(err)?;
    ensure(dry.counts.non_control.recalled == 0, "blank double recalled something")?;
    let truth: BTreeMap<&str, &str> = records.iter().map(|r| (r.dataset_abbrev.as_str(), r.value.as_str())).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in [1, 4, 9, 20] {
        let mut cells: Vec<_> = dry.cells.iter().filter(|c| !c.is_control).collect();
        let mut known = Vec::new();
        while known.len() < k {
            known.push(cells.swap_remove(rng.gen_range(0..cells.len())));
        }
        let (mut b, mut i) = blank();
        for c in known {
            let answer = format!(" {}", truth[c.spec.dataset.as_str()]);
            if c.spec.setting == Setting::Instruct {
                i = i.with_exact(c.prompt.clone(), answer);
            } else {
                b = b.with_exact(c.prompt.clone(), answer);
            }
        }
        let fam = ModelFamily::new("k", Arc::new(b), Arc::new(i)).map_err(err)?;
        let m = run_matrix(&records, &[fam], &opts).map_err(err)?;
        ensure(m.counts.non_control.recalled == k, format!("double knowing {k} gave {}", m.counts.non_control.recalled))?;
        ensure(!reticent_outside(&m), "reticent outcome outside instruct mode")?;
    }
    Ok(format!(
        "195 non-control outcomes ({} recalled, {} reticent); k-knowing doubles give k for k in 1,4,9,20",
        m.counts.non_control.recalled, m.counts.non_control.reticent
    ))
}

// A9: the offline drill through the binary.

fn govaudit(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_govaudit"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("GOVAUDIT_ANNOTATE_TOKEN")
        .output()
        .map_err(err)?;
    if !out.status.success() {
        return Err(format!("govaudit {}: {}", args[0], String::from_utf8_lossy(&out.stderr).trim()));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn words(s: &str) -> BTreeSet<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.len() > 2)
        .map(str::to_lowercase)
        .collect()
}

// Stand-in annotator: the less of the ground truth a response covers, the
// more Type 2 codes it gets.
fn heuristic_codes(task: &serde_json::Value) -> Vec<&'static str> {
    let truth = words(task["ground_truth"].as_str().unwrap_or_default());
    let reply = words(task["response_text"].as_str().unwrap_or_default());
    let covered = truth.intersection(&reply).count() as f64 / truth.len().max(1) as f64;
    let n = ((1.0 - covered) * 8.0).round() as usize;
    ["2a", "2b", "2d", "2e", "2c_hat", "2f_hat", "2c_prime", "2f_prime"].into_iter().take(n).collect()
}

fn annotate_over_http(run: &Path, responses: &[&Path], queries: &Path) -> Result<usize, String> {
    let mut args: Vec<String> = vec!["annotate-serve".into()];
    for r in responses {
        args.extend(["--responses".into(), r.display().to_string()]);
    }
    args.extend([
        "--queries".into(),
        queries.display().to_string(),
        "--port".into(),
        "0".into(),
        "--store".into(),
        run.join("annotations.store.jsonl").display().to_string(),
        "--seed".into(),
        "9".into(),
    ]);
    let mut child = Command::new(env!("CARGO_BIN_EXE_govaudit"))
        .args(&args)
        .env("RUST_LOG", "warn")
        .env_remove("GOVAUDIT_ANNOTATE_TOKEN")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(err)?;
    let stdout = child.stdout.take().ok_or("no stdout")?;
    let server = Server(child);
    let mut line = String::new();
    BufReader::new(stdout).read_line(&mut line).map_err(err)?;
    let base = line.trim().strip_prefix("listening on ").ok_or(format!("unexpected banner {line:?}"))?.to_string();

    let http = reqwest::blocking::Client::builder().timeout(Duration::from_secs(30)).build().map_err(err)?;
    let mut coded = 0;
    loop {
        let next: serde_json::Value = http
            .get(format!("{base}/api/tasks/next?annotator_id=drill"))
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(err)?;
        let task = &next["task"];
        if task.is_null() {
            break;
        }
        let body = serde_json::json!({
            "task_id": task["task_id"],
            "annotator_id": "drill",
            "codes": heuristic_codes(task),
            "note": "",
        });
        http.post(format!("{base}/api/annotations"))
            .json(&body)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(err)?;
        coded += 1;
    }
    let export = http
        .get(format!("{base}/api/export"))
        .send()
        .and_then(|r| r.error_for_status())
        .and_then(|r| r.text())
        .map_err(err)?;
    std::fs::write(run.join("annotations.jsonl"), export).map_err(err)?;
    drop(server);
    Ok(coded)
}

fn a9() -> Check {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(err)?;
    let run = tmp.path().join("run");
    let p = |rel: &str| run.join(rel).display().to_string();
    let fx = |rel: &str| fixtures::path(rel).display().to_string();
    std::fs::create_dir_all(&run).map_err(err)?;

    let pages = govaudit_mockcc::load_pages(&fixtures::path("pages/index.tsv")).map_err(err)?;
    let cc = govaudit_mockcc::spawn(govaudit_mockcc::fixture_crawls(&pages), 0, Vec::new()).map_err(err)?;
    govaudit(&[
        "ingest", "--urls", &fx("target_urls.tsv"), "--out", &p("ingest"), "--index-base", &cc.index_base(),
        "--data-base", &cc.data_base(), "--host-delay-ms", "0",
    ])?;
    drop(cc);
    govaudit(&["build-corpus", "--in", &p("ingest"), "--role", "target", "--chunk-len", "64", "--out", &p("target.corpus.jsonl")])?;
    govaudit(&["build-corpus", "--in", &fx("safe.docs.jsonl"), "--role", "safe", "--chunk-len", "64", "--out", &p("safe.corpus.jsonl")])?;
    govaudit(&[
        "unlearn", "--model", &fx("models/tiny"), "--target", &p("target.corpus.jsonl"), "--safe", &p("safe.corpus.jsonl"),
        "--steps", "200", "--out", &p("unlearn"),
    ])?;
    let queries = fx("queries.jsonl");
    govaudit(&["evaluate", "--model", &fx("models/tiny"), "--phase", "pre", "--queries", &queries, "--max-new-tokens", "48", "--out", &p("responses.pre.jsonl")])?;
    govaudit(&["evaluate", "--model", &p("unlearn/final"), "--phase", "post", "--queries", &queries, "--max-new-tokens", "48", "--out", &p("responses.post.jsonl")])?;
    let n_responses = read_responses(&run.join("responses.pre.jsonl")).map_err(err)?.len()
        + read_responses(&run.join("responses.post.jsonl")).map_err(err)?.len();

    let coded = annotate_over_http(
        &run,
        &[&run.join("responses.pre.jsonl"), &run.join("responses.post.jsonl")],
        Path::new(&queries),
    )?;
    ensure(coded == n_responses, format!("coded {coded} of {n_responses} tasks"))?;
    ensure(read_annotations(&run.join("annotations.jsonl")).map_err(err)?.len() == coded, "export incomplete")?;

    govaudit(&["tally", "--annotations", &p("annotations.jsonl"), "--by", "model", "--out", &p("tally.model.csv")])?;
    let by_query = govaudit(&[
        "tally", "--annotations", &p("annotations.jsonl"), "--by", "query", "--queries", &queries,
        "--out", &p("tally.query.csv"), "--diffs-out", &p("diffs.csv"),
    ])?;
    let guard = by_query.lines().find(|l| l.starts_with("control query")).unwrap_or("no guard line").to_string();
    let correlation = govaudit(&[
        "correlate", "--diffs", &p("diffs.csv"), "--prevalence", &fx("study/prevalence.csv"), "--queries", &queries,
        "--out", &p("correlation.json"),
    ])?;
    govaudit(&["probe", "--records", &fx("records.jsonl"), "--models", &fx("probe/families.toml"), "--out", &p("probe")])?;
    std::fs::copy(fixtures::path("queries.jsonl"), run.join("queries.jsonl")).map_err(err)?;
    std::fs::copy(fixtures::path("study/prevalence.csv"), run.join("prevalence.csv")).map_err(err)?;
    govaudit(&["report", "--run", &p(""), "--out", &p("report")])?;

    let want = [
        "fig1.csv", "fig1.png", "fig2.csv", "fig2.png", "fig3.csv", "fig3.png", "fig4.csv", "fig4.png", "curves.csv",
        "matrix.csv", "matrix.html",
    ];
    let missing: Vec<_> = want.iter().filter(|f| !run.join("report").join(f).is_file()).collect();
    ensure(missing.is_empty(), format!("report lacks {missing:?}"))?;
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 1200.0, format!("drill took {secs:.0}s"))?;
    Ok(format!("{coded} responses coded over HTTP; {guard}; {}; {secs:.0}s", correlation.trim()))
}

fn main() {
    let checks: [(&str, fn() -> Check); 9] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
        ("A9", a9),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('A')).collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !only.is_empty() && !only.iter().any(|o| o == name) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("{name} PASS {detail}"),
            Err(detail) => {
                failed += 1;
                println!("{name} FAIL {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

