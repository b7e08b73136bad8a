//! COCO-style detector evaluation.
//!
//! Conventions: a detection matches when `IoU >= t`; detections are taken
//! in descending score order (ties keep input order) and each one claims
//! the unmatched ground-truth box it overlaps most; AP is the 101-point
//! interpolated area under the precision/recall curve. Class
//! `unidentifiable` is dropped from both sides before anything is counted.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::detector::Detection;
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::taxonomy::InaccessibilityClass;

/// Number of recall sample points used for interpolation.
pub const RECALL_POINTS: usize = 101;

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_iou_thresholds() -> [f64; 10] {
    // (50 + 5i) / 100 keeps 0.5 and 0.75 exact
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

/// Intersection over union of two boxes with positive extent.
pub fn iou(a: &BBox, b: &BBox) -> Result<f64> {
    for bb in [a, b] {
        if !bb.is_proper() {
            return Err(Error::DegenerateBox(bb.to_array()));
        }
    }
    Ok(iou_unchecked(a, b))
}

pub(crate) fn iou_unchecked(a: &BBox, b: &BBox) -> f64 {
    let iw = a.right().min(b.right()) - a.x.max(b.x);
    let ih = a.bottom().min(b.bottom()) - a.y.max(b.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Outcome for one detection at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    /// Index into the detection slice passed in.
    pub detection: usize,
    /// Index of the matched ground-truth box, if any.
    pub ground_truth: Option<usize>,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub threshold: f64,
    /// One entry per detection, in processing (score) order.
    pub assignments: Vec<Assignment>,
    pub unmatched_ground_truth: usize,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.assignments.iter().filter(|a| a.ground_truth.is_some()).count()
    }
}

/// Indices of `scores` sorted descending; equal scores keep input order.
fn score_order(scores: impl Iterator<Item = f64>) -> Vec<usize> {
    let scores: Vec<f64> = scores.collect();
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Greedy one-to-one matching inside a single (image, class) group.
pub fn match_at_threshold(ground_truth: &[BBox], detections: &[Detection], threshold: f64) -> MatchResult {
    let boxes: Vec<BBox> = detections.iter().map(|d| d.bbox).collect();
    let order = score_order(detections.iter().map(|d| d.score));
    match_ordered(ground_truth, &boxes, &order, threshold)
}

fn match_ordered(gts: &[BBox], dets: &[BBox], order: &[usize], threshold: f64) -> MatchResult {
    let mut taken = vec![false; gts.len()];
    let mut assignments = Vec::with_capacity(order.len());
    for &di in order {
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gts.iter().enumerate() {
            if taken[gi] {
                continue;
            }
            let v = iou_unchecked(&dets[di], g);
            if v >= threshold && best.is_none_or(|(_, bv)| v > bv) {
                best = Some((gi, v));
            }
        }
        if let Some((gi, _)) = best {
            taken[gi] = true;
        }
        assignments.push(Assignment {
            detection: di,
            ground_truth: best.map(|(g, _)| g),
            iou: best.map_or(0.0, |(_, v)| v),
        });
    }
    MatchResult {
        threshold,
        unmatched_ground_truth: taken.iter().filter(|t| !**t).count(),
        assignments,
    }
}

/// 101-point interpolated AP from true/false-positive flags already in
/// descending score order.
pub fn interpolated_ap(tp_flags: &[bool], n_ground_truth: usize) -> f64 {
    if n_ground_truth == 0 {
        return 0.0;
    }
    let n = tp_flags.len();
    let mut precision = Vec::with_capacity(n);
    let mut recall = Vec::with_capacity(n);
    let mut tp = 0usize;
    for (k, &hit) in tp_flags.iter().enumerate() {
        tp += hit as usize;
        precision.push(tp as f64 / (k + 1) as f64);
        recall.push(tp as f64 / n_ground_truth as f64);
    }
    // Precision envelope: max precision at any recall >= this point.
    for k in (1..n).rev() {
        if precision[k] > precision[k - 1] {
            precision[k - 1] = precision[k];
        }
    }
    let mut sum = 0.0;
    for i in 0..RECALL_POINTS {
        let r = i as f64 / (RECALL_POINTS - 1) as f64;
        let k = recall.partition_point(|&x| x < r);
        if k < n {
            sum += precision[k];
        }
    }
    sum / RECALL_POINTS as f64
}

/// Ground-truth box tagged with its image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruthBox {
    pub image_id: u64,
    pub bbox: BBox,
}

/// AP of one class at one IoU threshold, over all images.
///
/// `detections` are assumed to belong to that class; their order breaks
/// score ties.
pub fn average_precision(ground_truth: &[GroundTruthBox], detections: &[Detection], threshold: f64) -> Result<f64> {
    if ground_truth.is_empty() {
        return Err(Error::NoGroundTruth);
    }
    let order = score_order(detections.iter().map(|d| d.score));
    let flags = class_tp_flags(ground_truth, detections, &order, threshold);
    Ok(interpolated_ap(&flags, ground_truth.len()))
}

/// TP flags in `order` after per-image matching.
fn class_tp_flags(gts: &[GroundTruthBox], dets: &[Detection], order: &[usize], threshold: f64) -> Vec<bool> {
    let mut gt_by_image: BTreeMap<u64, Vec<BBox>> = BTreeMap::new();
    for g in gts {
        gt_by_image.entry(g.image_id).or_default().push(g.bbox);
    }
    let mut det_by_image: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for &i in order {
        det_by_image.entry(dets[i].image_id).or_default().push(i);
    }
    let mut hit = vec![false; dets.len()];
    let empty = Vec::new();
    for (image_id, idx) in &det_by_image {
        let gts = gt_by_image.get(image_id).unwrap_or(&empty);
        if gts.is_empty() {
            continue;
        }
        let boxes: Vec<BBox> = idx.iter().map(|&i| dets[i].bbox).collect();
        let local: Vec<usize> = (0..idx.len()).collect();
        let m = match_ordered(gts, &boxes, &local, threshold);
        for a in m.assignments {
            hit[idx[a.detection]] = a.ground_truth.is_some();
        }
    }
    order.iter().map(|&i| hit[i]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalParams {
    /// Keep at most this many top-scored detections per (image, class).
    pub max_detections: Option<usize>,
}

/// Per-class row. AP fields are `None` ("n/a") when the class has no
/// ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassResult {
    pub id: u32,
    pub name: String,
    pub ground_truth: usize,
    pub detections: usize,
    /// Mean over the ten thresholds 0.50:0.05:0.95.
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    /// AP at each of the ten thresholds.
    pub ap_per_threshold: Option<Vec<f64>>,
}

/// Evaluation summary. Values are in `[0, 1]`; rendering scales by 100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub classes: Vec<ClassResult>,
    #[serde(rename = "mAP")]
    pub map: f64,
    #[serde(rename = "AP50")]
    pub ap50: f64,
    #[serde(rename = "AP75")]
    pub ap75: f64,
    pub iou_thresholds: Vec<f64>,
    pub images: usize,
    pub ground_truth: usize,
    pub detections: usize,
    pub evaluated_classes: usize,
}

impl EvaluationReport {
    pub fn class(&self, ic: InaccessibilityClass) -> Option<&ClassResult> {
        self.classes.iter().find(|c| c.id == ic.id())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialize")
    }
}

/// Evaluate raw detections against a ground-truth dataset.
pub fn evaluate(gt: &Dataset, detections: &[Detection], params: EvalParams) -> Result<EvaluationReport> {
    let known: HashSet<u64> = gt.images().iter().map(|i| i.image_id).collect();
    if let Some(d) = detections.iter().find(|d| !known.contains(&d.image_id)) {
        return Err(Error::InconsistentInput(format!(
            "detection references unknown image {}",
            d.image_id
        )));
    }
    if let Some((i, d)) = detections.iter().enumerate().find(|(_, d)| d.check().is_err()) {
        return Err(Error::InconsistentInput(format!(
            "detection {i}: {}",
            d.check().unwrap_err()
        )));
    }

    let thresholds = coco_iou_thresholds();
    let mut classes = Vec::new();
    let mut sums = (0.0, 0.0, 0.0);
    let mut evaluated = 0usize;
    let mut total_gt = 0usize;
    let mut total_det = 0usize;

    for ic in InaccessibilityClass::evaluable() {
        let gts: Vec<GroundTruthBox> = gt
            .annotations()
            .iter()
            .filter(|a| a.ic == ic)
            .map(|a| GroundTruthBox {
                image_id: a.image_id,
                bbox: a.bbox,
            })
            .collect();
        let dets = capped(detections.iter().filter(|d| d.ic == ic).cloned().collect(), params);
        total_gt += gts.len();
        total_det += dets.len();

        let mut row = ClassResult {
            id: ic.id(),
            name: ic.name().to_string(),
            ground_truth: gts.len(),
            detections: dets.len(),
            ap: None,
            ap50: None,
            ap75: None,
            ap_per_threshold: None,
        };
        if !gts.is_empty() {
            let order = score_order(dets.iter().map(|d| d.score));
            let per_t: Vec<f64> = thresholds
                .iter()
                .map(|&t| interpolated_ap(&class_tp_flags(&gts, &dets, &order, t), gts.len()))
                .collect();
            let ap = per_t.iter().sum::<f64>() / per_t.len() as f64;
            row.ap = Some(ap);
            row.ap50 = Some(per_t[0]);
            row.ap75 = Some(per_t[5]);
            sums.0 += ap;
            sums.1 += per_t[0];
            sums.2 += per_t[5];
            row.ap_per_threshold = Some(per_t);
            evaluated += 1;
        }
        classes.push(row);
    }

    if evaluated == 0 {
        return Err(Error::NoEvaluableClasses);
    }
    let n = evaluated as f64;
    Ok(EvaluationReport {
        classes,
        map: sums.0 / n,
        ap50: sums.1 / n,
        ap75: sums.2 / n,
        iou_thresholds: thresholds.to_vec(),
        images: gt.images().len(),
        ground_truth: total_gt,
        detections: total_det,
        evaluated_classes: evaluated,
    })
}

/// Apply the per-(image, class) cap; input is one class.
fn capped(dets: Vec<Detection>, params: EvalParams) -> Vec<Detection> {
    let Some(cap) = params.max_detections else {
        return dets;
    };
    let order = score_order(dets.iter().map(|d| d.score));
    let mut per_image: BTreeMap<u64, usize> = BTreeMap::new();
    let mut keep = vec![false; dets.len()];
    for i in order {
        let n = per_image.entry(dets[i].image_id).or_default();
        if *n < cap {
            *n += 1;
            keep[i] = true;
        }
    }
    dets.into_iter().zip(keep).filter_map(|(d, k)| k.then_some(d)).collect()
}

/// AP on the x100 scale with two decimals, or `n/a`.
pub fn format_ap(ap: Option<f64>) -> String {
    match ap {
        Some(v) => format!("{:.2}", v * 100.0),
        None => "n/a".to_string(),
    }
}

/// Per-class AP table: one row per evaluable class plus an `average` row.
/// Each column is one named report (e.g. two datasets side by side).
pub fn render_class_table(columns: &[(&str, &EvaluationReport)]) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:<4}{:<30}", "id", "inaccessibility class");
    for (label, _) in columns {
        let _ = write!(out, "{label:>12}");
    }
    out.push('\n');
    for ic in InaccessibilityClass::evaluable() {
        let _ = write!(out, "{:<4}{:<30}", ic.id(), ic.name());
        for (_, report) in columns {
            let ap = report.class(ic).and_then(|c| c.ap);
            let _ = write!(out, "{:>12}", format_ap(ap));
        }
        out.push('\n');
    }
    let _ = write!(out, "{:<4}{:<30}", "", "average");
    for (_, report) in columns {
        let _ = write!(out, "{:>12}", format_ap(Some(report.map)));
    }
    out.push('\n');
    out
}

/// Aggregate table: one row per named report with mAP, AP50 and AP75.
pub fn render_summary_table(rows: &[(&str, &EvaluationReport)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16}{:>10}{:>10}{:>10}", "", "mAP", "AP50", "AP75");
    for (label, r) in rows {
        let _ = writeln!(
            out,
            "{:<16}{:>10}{:>10}{:>10}",
            label,
            format_ap(Some(r.map)),
            format_ap(Some(r.ap50)),
            format_ap(Some(r.ap75))
        );
    }
    out
}

/// Both tables for a single report, as printed by `eval`.
pub fn render_report(label: &str, report: &EvaluationReport) -> String {
    format!(
        "{}\n{}",
        render_class_table(&[("AP", report)]),
        render_summary_table(&[(label, report)])
    )
}
