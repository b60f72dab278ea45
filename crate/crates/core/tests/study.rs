use govaudit_core::evalkit::files::{read_annotations, read_prevalence, read_queries};
use govaudit_core::evalkit::{
    ablation_effect, control_id, prevalence_correlation, tally, CodeLabel, GroupBy, GroupKey, Phase,
};
use govaudit_core::fixtures;
use govaudit_core::report::{figure_type2_by_model, mean_percent_increase};
use govaudit_core::Correlation;

// Pearson straight from the textbook sums, no centring.
fn definitional_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

// Two-sided Student t tail by Simpson integration of the density.
fn t_two_sided_p(t: f64, df: f64) -> f64 {
    fn ln_gamma(x: f64) -> f64 {
        // Lanczos, g = 7.
        const C: [f64; 9] = [
            0.999_999_999_999_809_9,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        let x = x - 1.0;
        let mut a = C[0];
        for (i, c) in C.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        let t = x + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }
    let norm = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp() / (df * std::f64::consts::PI).sqrt();
    let density = |u: f64| norm * (1.0 + u * u / df).powf(-(df + 1.0) / 2.0);
    let (a, b, n) = (0.0, t.abs(), 20_000);
    let h = (b - a) / n as f64;
    let mut s = density(a) + density(b);
    for i in 1..n {
        s += density(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - 2.0 * s * h / 3.0
}

#[test]
fn guard_and_correlation_on_study_set() {
    let queries = read_queries(&fixtures::path("queries.jsonl")).unwrap();
    let anns = read_annotations(&fixtures::path("study/annotations.jsonl")).unwrap();
    let prev = read_prevalence(&fixtures::path("study/prevalence.csv")).unwrap();
    let control = control_id(&queries);
    assert_eq!(control, Some(4));

    let universe = queries.iter().map(|q| GroupKey::Query(q.id));
    let by_query = tally(&anns, GroupBy::Query, universe).unwrap();
    let effect = ablation_effect(&by_query, control).unwrap();
    let guard = effect.guard.unwrap();
    assert_eq!(guard.difference, 0);
    assert!(guard.passed);
    assert_eq!(effect.differences.len(), 18);

    let (c, pairs): (Correlation, _) = prevalence_correlation(&effect.differences, &prev, control).unwrap();
    let x: Vec<f64> = pairs.iter().map(|p| p.difference as f64).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.prevalence as f64).collect();
    assert!((c.r - definitional_r(&x, &y)).abs() < 1e-9);
    let t = c.r * (16.0 / (1.0 - c.r * c.r)).sqrt();
    assert!((c.p_value - t_two_sided_p(t, 16.0)).abs() < 1e-7, "{} vs {}", c.p_value, t_two_sided_p(t, 16.0));
    assert!(c.r < 0.0 && c.p_value < 0.05, "{c:?}");
}

#[test]
fn extra_type2_code_on_control_trips_the_guard() {
    let queries = read_queries(&fixtures::path("queries.jsonl")).unwrap();
    let mut anns = read_annotations(&fixtures::path("study/annotations.jsonl")).unwrap();
    let post = anns
        .iter_mut()
        .find(|a| a.response.query_id == 4 && a.response.phase == Phase::Post)
        .unwrap();
    assert!(post.codes.insert(CodeLabel::C2d));
    let t = tally(&anns, GroupBy::Query, []).unwrap();
    let guard = ablation_effect(&t, control_id(&queries)).unwrap().guard.unwrap();
    assert_eq!(guard.difference, 1);
    assert!(!guard.passed);
}

#[test]
fn type2_rises_for_every_model() {
    let anns = read_annotations(&fixtures::path("study/annotations.jsonl")).unwrap();
    let t = tally(&anns, GroupBy::Model, []).unwrap();
    let (rows, mean) = figure_type2_by_model(&t);
    assert!(rows.iter().all(|r| r.post > r.pre));
    assert_eq!(mean, mean_percent_increase(&rows));
    assert!(mean.unwrap() > 0.0);
}
