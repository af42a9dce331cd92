//! Confusion counts, F1 scoring, per-video/per-category reports, and the
//! F1-versus-semantic-frame-rate sweep.
//!
//! Ground-truth pixels labeled outside-ROI or unknown-motion are skipped;
//! hard shadow counts as background (negative), the moving label as
//! positive. The overall score is the unweighted mean over categories of
//! the unweighted mean over member videos; undefined F1 values (empty
//! denominator) are excluded from every mean and reported as absent.

use std::collections::BTreeMap;
use std::io::Write;

use crate::config::{FusionMode, PipelineConfig};
use crate::error::{Error, Result};
use crate::io::{gt_code, GroundTruthMask};
use crate::raster::{Label, Raster};
use crate::runner::{run_source, FrameSource, RunOutcome};

/// Pixel-level confusion counts. Additive across frames and videos.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub true_negatives: u64,
}

impl Confusion {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Confusion {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            true_negatives: tn,
        }
    }

    /// Adds one frame's counts, honoring the ignore labels.
    pub fn accumulate(&mut self, predicted: &Raster<Label>, gt: &GroundTruthMask) -> Result<()> {
        if predicted.width() != gt.width || predicted.height() != gt.height {
            return Err(Error::Dimension(
                "prediction and ground truth do not share dimensions".into(),
            ));
        }
        for (label, &code) in predicted.iter().zip(gt.labels.iter()) {
            let positive_truth = match code {
                gt_code::OUTSIDE_ROI | gt_code::UNKNOWN => continue,
                gt_code::MOVING => true,
                // Static background and hard shadow are negatives.
                _ => false,
            };
            match (positive_truth, label) {
                (true, Label::Foreground) => self.true_positives += 1,
                (true, Label::Background) => self.false_negatives += 1,
                (false, Label::Foreground) => self.false_positives += 1,
                (false, Label::Background) => self.true_negatives += 1,
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.true_positives += other.true_positives;
        self.false_positives += other.false_positives;
        self.false_negatives += other.false_negatives;
        self.true_negatives += other.true_negatives;
    }

    /// `2TP / (2TP + FP + FN)`, or `None` when the denominator is zero.
    pub fn f1(&self) -> Option<f64> {
        let denom = 2 * self.true_positives + self.false_positives + self.false_negatives;
        if denom == 0 {
            return None;
        }
        Some(2.0 * self.true_positives as f64 / denom as f64)
    }

    pub fn precision(&self) -> Option<f64> {
        let denom = self.true_positives + self.false_positives;
        (denom > 0).then(|| self.true_positives as f64 / denom as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        let denom = self.true_positives + self.false_negatives;
        (denom > 0).then(|| self.true_positives as f64 / denom as f64)
    }
}

/// True when a frame number falls inside an inclusive temporal region of
/// interest (no region means every frame is evaluated).
pub fn in_temporal_roi(roi: Option<(u32, u32)>, frame_number: u32) -> bool {
    match roi {
        Some((first, last)) => (first..=last).contains(&frame_number),
        None => true,
    }
}

/// Per-video and per-category F1 scores plus their overall mean.
#[derive(Clone, Debug, Default)]
pub struct ScoreReport {
    /// Confusion and F1 per video, keyed by `(category, name)` order.
    pub per_video: BTreeMap<String, (Confusion, Option<f64>)>,
    /// Mean of member-video F1 per category; videos with undefined F1 are
    /// excluded. Flat suites use the empty category name.
    pub per_category: BTreeMap<String, Option<f64>>,
    /// Mean of the defined per-category values.
    pub overall: Option<f64>,
}

/// Builds a report from per-sequence outcomes.
pub fn score_report(outcomes: &[RunOutcome]) -> ScoreReport {
    let mut report = ScoreReport::default();
    let mut by_category: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for outcome in outcomes {
        let f1 = outcome.confusion.f1();
        report
            .per_video
            .insert(outcome.name.clone(), (outcome.confusion, f1));
        let bucket = by_category.entry(outcome.category.clone()).or_default();
        if let Some(v) = f1 {
            bucket.push(v);
        }
    }
    for (category, values) in by_category {
        let mean = (!values.is_empty())
            .then(|| values.iter().sum::<f64>() / values.len() as f64);
        report.per_category.insert(category, mean);
    }
    let defined: Vec<f64> = report.per_category.values().filter_map(|v| *v).collect();
    report.overall = (!defined.is_empty())
        .then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    report
}

/// Writes the per-video report CSV: `video,tp,fp,fn,tn,f1`.
pub fn write_video_report_csv<W: Write>(report: &ScoreReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "video,tp,fp,fn,tn,f1")?;
    for (name, (c, f1)) in &report.per_video {
        writeln!(
            out,
            "{name},{},{},{},{},{}",
            c.true_positives,
            c.false_positives,
            c.false_negatives,
            c.true_negatives,
            format_f1(*f1),
        )?;
    }
    Ok(())
}

fn format_f1(f1: Option<f64>) -> String {
    match f1 {
        Some(v) => format!("{v:.6}"),
        None => String::new(),
    }
}

/// One fusion configuration in a sweep: a CSV label, the core mode, and a
/// forced feedback setting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepMode {
    pub label: String,
    pub mode: FusionMode,
    pub feedback: bool,
}

impl SweepMode {
    /// Parses a sweep token. `rtsbs-fb` is RT-SBS with feedback on; every
    /// other token runs with feedback off.
    pub fn parse(token: &str) -> Result<Self> {
        let (mode, feedback) = match token {
            "rtsbs-fb" => (FusionMode::RtSbs, true),
            other => (other.parse::<FusionMode>()?, false),
        };
        Ok(SweepMode {
            label: token.to_string(),
            mode,
            feedback,
        })
    }
}

/// One `(mode, X)` cell of a sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub mode_label: String,
    pub x: u32,
    pub overall_f1: Option<f64>,
}

/// Runs every requested mode at every semantic frame rate and reports the
/// overall F1 per cell. Sequences must carry ground truth for the scores
/// to be defined.
pub fn sweep(
    sources: &[&dyn FrameSource],
    config: &PipelineConfig,
    modes: &[SweepMode],
    xs: &[u32],
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(modes.len() * xs.len());
    for mode in modes {
        for &x in xs {
            let mut run_config = config.clone().with_x(x)?;
            run_config.feedback = mode.feedback;
            let mut outcomes = Vec::with_capacity(sources.len());
            for source in sources {
                outcomes.push(run_source(*source, mode.mode, &run_config, None)?);
            }
            rows.push(SweepRow {
                mode_label: mode.label.clone(),
                x,
                overall_f1: score_report(&outcomes).overall,
            });
        }
    }
    Ok(rows)
}

/// Writes the sweep CSV: `mode,X,overall_f1`.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "mode,X,overall_f1")?;
    for row in rows {
        writeln!(out, "{},{},{}", row.mode_label, row.x, format_f1(row.overall_f1))?;
    }
    Ok(())
}
