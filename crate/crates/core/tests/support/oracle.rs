//! Brute-force reference for detector evaluation.
//!
//! Deliberately shares no code with the library: boxes are corner tuples,
//! ordering is a selection sort, and interpolated precision is taken
//! straight from its definition (max precision over every cut-off whose
//! recall reaches the sample point) instead of a precision envelope.

#![allow(dead_code)]

/// (image, class, x, y, w, h)
#[derive(Clone, Copy, Debug)]
pub struct OGt {
    pub image: u64,
    pub class: u32,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ODet {
    pub image: u64,
    pub class: u32,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

pub fn oracle_iou(a: (f64, f64, f64, f64), b: (f64, f64, f64, f64)) -> f64 {
    let (ax1, ay1, ax2, ay2) = (a.0, a.1, a.0 + a.2, a.1 + a.3);
    let (bx1, by1, bx2, by2) = (b.0, b.1, b.0 + b.2, b.1 + b.3);
    let ix = (ax2.min(bx2) - ax1.max(bx1)).max(0.0);
    let iy = (ay2.min(by2) - ay1.max(by1)).max(0.0);
    let inter = ix * iy;
    if inter == 0.0 {
        return 0.0;
    }
    inter / ((ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter)
}

/// Positions 0..n ordered by score descending, earlier position first on ties.
fn selection_order(scores: &[f64]) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..scores.len()).collect();
    let mut out = Vec::new();
    while !remaining.is_empty() {
        let mut best = 0;
        for k in 1..remaining.len() {
            if scores[remaining[k]] > scores[remaining[best]] {
                best = k;
            }
        }
        out.push(remaining.remove(best));
    }
    out
}

/// AP for one class at one threshold.
pub fn oracle_ap(gts: &[OGt], dets: &[ODet], class: u32, t: f64) -> Option<f64> {
    let g: Vec<&OGt> = gts.iter().filter(|g| g.class == class).collect();
    if g.is_empty() {
        return None;
    }
    let d: Vec<&ODet> = dets.iter().filter(|d| d.class == class).collect();
    let order = selection_order(&d.iter().map(|x| x.score).collect::<Vec<_>>());

    // Greedy matching, image by image, in global score order.
    let mut used = vec![false; g.len()];
    let mut tp_in_order = Vec::new();
    for &di in &order {
        let det = d[di];
        let mut pick: Option<usize> = None;
        let mut pick_iou = -1.0;
        for (gi, gt) in g.iter().enumerate() {
            if used[gi] || gt.image != det.image {
                continue;
            }
            let v = oracle_iou((det.x, det.y, det.w, det.h), (gt.x, gt.y, gt.w, gt.h));
            if v >= t && v > pick_iou {
                pick = Some(gi);
                pick_iou = v;
            }
        }
        if let Some(gi) = pick {
            used[gi] = true;
        }
        tp_in_order.push(pick.is_some());
    }

    // Every cut-off k: precision and recall of the top k.
    let n_gt = g.len() as f64;
    let points: Vec<(f64, f64)> = (1..=tp_in_order.len())
        .map(|k| {
            let tp = tp_in_order[..k].iter().filter(|x| **x).count() as f64;
            (tp / k as f64, tp / n_gt)
        })
        .collect();
    let mut total = 0.0;
    for i in 0..=100 {
        let r = i as f64 / 100.0;
        let best = points
            .iter()
            .filter(|(_, rec)| *rec >= r)
            .map(|(p, _)| *p)
            .fold(0.0_f64, f64::max);
        total += best;
    }
    Some(total / 101.0)
}

pub struct OracleSummary {
    /// (class, mean AP over thresholds, AP50, AP75)
    pub per_class: Vec<(u32, f64, f64, f64)>,
    pub map: f64,
    pub ap50: f64,
    pub ap75: f64,
}

/// Evaluate classes 1..=21; class 22 is ignored on both sides.
pub fn oracle_evaluate(gts: &[OGt], dets: &[ODet]) -> Option<OracleSummary> {
    let thresholds: Vec<f64> = (0..10).map(|i| 0.5 + 0.05 * i as f64).collect();
    let mut per_class = Vec::new();
    for class in 1..=21u32 {
        let Some(ap50) = oracle_ap(gts, dets, class, 0.5) else { continue };
        let mut all = Vec::new();
        for &t in &thresholds {
            // 0.5 + 0.05 * i is not exact for every i; snap to hundredths.
            let t = (t * 100.0).round() / 100.0;
            all.push(oracle_ap(gts, dets, class, t).unwrap());
        }
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        let ap75 = oracle_ap(gts, dets, class, 0.75).unwrap();
        per_class.push((class, mean, ap50, ap75));
    }
    if per_class.is_empty() {
        return None;
    }
    let n = per_class.len() as f64;
    Some(OracleSummary {
        map: per_class.iter().map(|c| c.1).sum::<f64>() / n,
        ap50: per_class.iter().map(|c| c.2).sum::<f64>() / n,
        ap75: per_class.iter().map(|c| c.3).sum::<f64>() / n,
        per_class,
    })
}
