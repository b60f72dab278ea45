//! Rebuild `fixtures/models/tiny` from the saved pages and the safe
//! documents, then report the ablation metrics the fixture is calibrated
//! against.
//!
//! cargo run --release -p govaudit-core --example build_fixture_model [-- --check]
//!
//! With `--check` the stored model is loaded instead of retrained.

use std::time::Instant;

use govaudit_core::corpus::{build_corpus, Role, WordTokenizer};
use govaudit_core::fixtures;
use govaudit_core::model::train::{pretrain, PretrainConfig};
use govaudit_core::model::{LocalModel, ModelKind, NeuralLm, NeuralLmConfig, TrainableLm, Vocab};
use govaudit_core::unlearn::{run_unlearning, MemoryObserver, UnlearningConfig};

const VOCAB: usize = 1000;
const SEED: u64 = 7;
const CHUNK_LEN: usize = 64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let check = std::env::args().any(|a| a == "--check");
    let target = fixtures::target_documents()?;
    let safe = fixtures::safe_documents()?;
    let dir = fixtures::path("models/tiny");

    let mut model = if check {
        LocalModel::load(&dir)?
    } else {
        let texts: Vec<&str> = target.iter().chain(&safe).map(|d| d.text.as_str()).collect();
        let vocab = Vocab::build(texts.iter().copied(), VOCAB);
        let mut lm: NeuralLm<f64> = NeuralLm::new(vocab, NeuralLmConfig::default(), SEED);
        let corpus = build_corpus("pretrain", target.iter().chain(&safe).cloned().collect(), Role::Target, CHUNK_LEN, &WordTokenizer)?;
        let chunks = corpus.chunk_texts();
        let cfg = PretrainConfig {
            steps: 3000,
            learning_rate: 5e-3,
            batch_size: 8,
            seed: SEED,
        };
        let t = Instant::now();
        let losses = pretrain(&mut lm, &chunks, &cfg)?;
        eprintln!(
            "pretrained {} params on {} chunks in {:.1?}: loss {:.3} -> {:.3}",
            lm.params().len(),
            chunks.len(),
            t.elapsed(),
            losses[0],
            losses[losses.len() - 1]
        );
        let m = LocalModel::new("tiny-govuk", ModelKind::Base, lm);
        m.save(&dir)?;
        m
    };

    let subset: Vec<_> = target.into_iter().filter(|d| d.topic == "Universal Credit").take(10).collect();
    let target = build_corpus("target", subset, Role::Target, CHUNK_LEN, &WordTokenizer)?;
    let safe = build_corpus("safe", safe, Role::Safe, CHUNK_LEN, &WordTokenizer)?;
    let config = UnlearningConfig {
        max_steps: 200,
        ..UnlearningConfig::default()
    };
    let t = Instant::now();
    let run = run_unlearning(&mut model.lm, "tiny-govuk", &target, &safe, &config, &mut MemoryObserver::default())?;
    let s = run.summary.expect("completed run");
    println!(
        "steps {} in {:.1?}: target CE {:.4} -> {:.4} (x{:.3}), mean safe KL {:.4}, final safe KL {:.4}, max {:.4}",
        s.steps_completed,
        t.elapsed(),
        s.initial_target_loss,
        s.final_target_loss,
        s.final_target_loss / s.initial_target_loss,
        s.mean_safe_kl,
        s.final_safe_kl,
        s.max_safe_kl
    );
    Ok(())
}
