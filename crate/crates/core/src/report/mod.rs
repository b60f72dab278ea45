//! Figure data, images and tables from run artifacts.
//!
//! Every image is written next to a CSV holding exactly the numbers it was
//! drawn from.

mod plot;
mod table;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use plot::{Canvas, Frame};
pub use table::{cell_marks, grid, matrix_csv, matrix_html};

use crate::evalkit::{
    self, ablation_effect, files, tally, CodeClass, CorrelationResult, ErrorTally, GroupBy, GroupKey,
    IntrusivenessGuard, PairedObservation, Phase,
};
use crate::jsonl;
use crate::leakage::ResultMatrix;
use crate::unlearn::StepReport;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("missing input {0}")]
    Missing(PathBuf),
    #[error(transparent)]
    Eval(#[from] evalkit::EvalError),
    #[error(transparent)]
    Leakage(#[from] crate::leakage::LeakageError),
    #[error(transparent)]
    Jsonl(#[from] jsonl::JsonlError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarRow {
    pub group: String,
    pub pre: u32,
    pub post: u32,
}

/// Pre/post counts of one code class per group, in tally order.
pub fn bars(tallies: &[ErrorTally], class: CodeClass) -> Vec<BarRow> {
    let mut rows: BTreeMap<&GroupKey, BarRow> = BTreeMap::new();
    for t in tallies {
        let row = rows.entry(&t.group).or_insert_with(|| BarRow {
            group: t.group.to_string(),
            pre: 0,
            post: 0,
        });
        match t.phase {
            Phase::Pre => row.pre += t.count(class),
            Phase::Post => row.post += t.count(class),
        }
    }
    rows.into_values().collect()
}

pub fn figure_type1_by_model(tallies: &[ErrorTally]) -> Vec<BarRow> {
    bars(tallies, CodeClass::Type1)
}

/// Bars plus the mean percent increase across models.
pub fn figure_type2_by_model(tallies: &[ErrorTally]) -> (Vec<BarRow>, Option<f64>) {
    let rows = bars(tallies, CodeClass::Type2);
    let mean = mean_percent_increase(&rows);
    (rows, mean)
}

pub fn figure_type2_by_query(tallies: &[ErrorTally]) -> Vec<BarRow> {
    bars(tallies, CodeClass::Type2)
}

/// Mean over groups of `100 * (post - pre) / pre`. Groups with `pre = 0`
/// have no defined percentage and are left out; `None` if nothing is left.
pub fn mean_percent_increase(rows: &[BarRow]) -> Option<f64> {
    let pct: Vec<f64> = rows
        .iter()
        .filter(|r| r.pre > 0)
        .map(|r| 100.0 * (r.post as f64 - r.pre as f64) / r.pre as f64)
        .collect();
    (!pct.is_empty()).then(|| pct.iter().sum::<f64>() / pct.len() as f64)
}

pub fn render_bars(rows: &[BarRow]) -> Canvas {
    let top = rows.iter().map(|r| r.pre.max(r.post)).max().unwrap_or(0).max(1) as f64;
    let f = Frame::new((0.0, rows.len().max(1) as f64), (0.0, top * 1.1));
    let mut c = Canvas::new();
    c.axes(&f);
    for (i, r) in rows.iter().enumerate() {
        let x = i as f64;
        c.bar(&f, x + 0.1, x + 0.5, r.pre as f64, plot::PRE);
        c.bar(&f, x + 0.5, x + 0.9, r.post as f64, plot::POST);
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterFigure {
    pub points: Vec<PairedObservation>,
    pub correlation: Option<CorrelationResult<f64>>,
    /// Least-squares line `prevalence = slope * difference + intercept`.
    pub fit: Option<(f64, f64)>,
}

pub fn figure_prevalence_scatter(points: &[PairedObservation], correlation: Option<CorrelationResult<f64>>) -> ScatterFigure {
    let n = points.len() as f64;
    let fit = (points.len() >= 2)
        .then(|| {
            let mx = points.iter().map(|p| p.difference as f64).sum::<f64>() / n;
            let my = points.iter().map(|p| p.prevalence as f64).sum::<f64>() / n;
            let sxx: f64 = points.iter().map(|p| (p.difference as f64 - mx).powi(2)).sum();
            let sxy: f64 = points
                .iter()
                .map(|p| (p.difference as f64 - mx) * (p.prevalence as f64 - my))
                .sum();
            (sxx > 0.0).then(|| (sxy / sxx, my - sxy / sxx * mx))
        })
        .flatten();
    ScatterFigure {
        points: points.to_vec(),
        correlation,
        fit,
    }
}

pub fn render_scatter(fig: &ScatterFigure) -> Canvas {
    let xs = fig.points.iter().map(|p| p.difference as f64);
    let (lo, hi) = xs.fold((0.0f64, 1.0f64), |(a, b), x| (a.min(x), b.max(x)));
    let f = Frame::new((lo - 0.5, hi + 0.5), (0.0, 10.5));
    let mut c = Canvas::new();
    c.axes(&f);
    if let Some((slope, icpt)) = fig.fit {
        c.line(&f, (lo - 0.5, slope * (lo - 0.5) + icpt), (hi + 0.5, slope * (hi + 0.5) + icpt), plot::POST);
    }
    for p in &fig.points {
        c.dot(&f, p.difference as f64, p.prevalence as f64, plot::PRE);
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: usize,
    pub target_loss: f64,
    pub safe_kl: f64,
    pub combined_objective: f64,
    pub alarm: bool,
}

pub fn unlearning_curves(steps: &[StepReport]) -> Vec<CurvePoint> {
    steps
        .iter()
        .map(|s| CurvePoint {
            step: s.step,
            target_loss: s.target_loss,
            safe_kl: s.safe_kl,
            combined_objective: s.combined_objective,
            alarm: s.alarm,
        })
        .collect()
}

pub fn render_curves(points: &[CurvePoint], kl_threshold: Option<f64>) -> Canvas {
    let last = points.last().map_or(1, |p| p.step) as f64;
    let top = points
        .iter()
        .flat_map(|p| [p.target_loss, p.safe_kl])
        .chain(kl_threshold)
        .fold(1e-9f64, f64::max);
    let f = Frame::new((0.0, last), (0.0, top * 1.1));
    let mut c = Canvas::new();
    c.axes(&f);
    if let Some(t) = kl_threshold {
        c.line(&f, (0.0, t), (last, t), plot::ALARM);
    }
    let loss: Vec<_> = points.iter().map(|p| (p.step as f64, p.target_loss)).collect();
    let kl: Vec<_> = points.iter().map(|p| (p.step as f64, p.safe_kl)).collect();
    c.polyline(&f, &loss, plot::POST);
    c.polyline(&f, &kl, plot::PRE);
    c
}

fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// What `build_report` found and wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub files: Vec<String>,
    pub mean_type2_increase_percent: Option<f64>,
    pub correlation: Option<CorrelationResult<f64>>,
    pub correlation_error: Option<String>,
    pub guard: Option<IntrusivenessGuard>,
}

fn first_existing(root: &Path, candidates: &[&str]) -> Option<PathBuf> {
    candidates.iter().map(|c| root.join(c)).find(|p| p.exists())
}

/// Build every product the run directory has inputs for.
///
/// Reads `annotations.jsonl` (required), `queries.jsonl` and
/// `prevalence.csv` (figure 4), `unlearn/steps.jsonl` (curves) and
/// `probe/matrix.json` (table). Writes `fig1`..`fig4` `.csv`/`.png`,
/// `curves.csv/.png`, `matrix.csv/.html` and `summary.json` into `out`.
pub fn build_report(run: &Path, out: &Path) -> Result<ReportSummary, ReportError> {
    std::fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut emit = |name: &str| files.push(name.to_string());

    let ann_path = run.join("annotations.jsonl");
    if !ann_path.exists() {
        return Err(ReportError::Missing(ann_path));
    }
    let annotations = files::read_annotations(&ann_path)?;
    let queries = match first_existing(run, &["queries.jsonl"]) {
        Some(p) => files::read_queries(&p)?,
        None => Vec::new(),
    };
    let control = evalkit::control_id(&queries);

    let by_model = tally(&annotations, GroupBy::Model, [])?;
    let by_query = tally(&annotations, GroupBy::Query, queries.iter().map(|q| GroupKey::Query(q.id)))?;

    let fig1 = figure_type1_by_model(&by_model);
    write_csv(&out.join("fig1.csv"), &fig1)?;
    render_bars(&fig1).save(&out.join("fig1.png"))?;
    emit("fig1.csv");
    emit("fig1.png");

    let (fig2, mean) = figure_type2_by_model(&by_model);
    write_csv(&out.join("fig2.csv"), &fig2)?;
    render_bars(&fig2).save(&out.join("fig2.png"))?;
    emit("fig2.csv");
    emit("fig2.png");

    let fig3 = figure_type2_by_query(&by_query);
    write_csv(&out.join("fig3.csv"), &fig3)?;
    render_bars(&fig3).save(&out.join("fig3.png"))?;
    emit("fig3.csv");
    emit("fig3.png");

    let effect = ablation_effect(&by_query, control)?;
    let mut correlation = None;
    let mut correlation_error = None;
    let points = match first_existing(run, &["prevalence.csv"]) {
        Some(p) => {
            let prevalence = files::read_prevalence(&p)?;
            match evalkit::prevalence_correlation::<f64>(&effect.differences, &prevalence, control) {
                Ok((c, pts)) => {
                    correlation = Some(c);
                    pts
                }
                Err(e) => {
                    correlation_error = Some(e.to_string());
                    effect
                        .differences
                        .iter()
                        .filter_map(|d| {
                            prevalence.iter().find(|s| s.query_id == d.query_id).map(|s| PairedObservation {
                                query_id: d.query_id,
                                difference: d.difference,
                                prevalence: s.score,
                            })
                        })
                        .collect()
                }
            }
        }
        None => {
            correlation_error = Some("no prevalence.csv in run directory".into());
            Vec::new()
        }
    };
    let fig4 = figure_prevalence_scatter(&points, correlation);
    write_csv(&out.join("fig4.csv"), &fig4.points)?;
    render_scatter(&fig4).save(&out.join("fig4.png"))?;
    emit("fig4.csv");
    emit("fig4.png");

    if let Some(p) = first_existing(run, &["unlearn/steps.jsonl", "steps.jsonl"]) {
        let steps: Vec<StepReport> = jsonl::read(&p)?;
        let threshold = crate::unlearn::load_run(p.parent().unwrap_or(run))
            .ok()
            .map(|r| r.config.kl_alarm_threshold);
        let curves = unlearning_curves(&steps);
        write_csv(&out.join("curves.csv"), &curves)?;
        render_curves(&curves, threshold).save(&out.join("curves.png"))?;
        emit("curves.csv");
        emit("curves.png");
    }

    if let Some(p) = first_existing(run, &["probe/matrix.json", "matrix.json"]) {
        let m = ResultMatrix::read_json(&p)?;
        std::fs::write(out.join("matrix.csv"), matrix_csv(&m)?)?;
        std::fs::write(out.join("matrix.html"), matrix_html(&m))?;
        emit("matrix.csv");
        emit("matrix.html");
    }

    emit("summary.json");
    let summary = ReportSummary {
        files,
        mean_type2_increase_percent: mean,
        correlation,
        correlation_error,
        guard: effect.guard,
    };
    std::fs::write(
        out.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok(summary)
}
