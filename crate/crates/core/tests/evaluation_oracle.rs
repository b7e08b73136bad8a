mod support;

use accesslens::dataset::{AnnotatedImage, Dataset, GroundTruthAnnotation};
use accesslens::detector::Detection;
use accesslens::evaluation::{evaluate, EvalParams};
use accesslens::geometry::BBox;
use accesslens::taxonomy::{parse_ic, InaccessibilityClass};
use accesslens::Error;

use support::instances::random_instance;
use support::oracle::{oracle_evaluate, oracle_iou, ODet, OGt};

#[test]
fn oracle_iou_half_offset() {
    let v = oracle_iou((0.0, 0.0, 10.0, 10.0), (5.0, 0.0, 10.0, 10.0));
    assert!((v - 1.0 / 3.0).abs() < 1e-15);
}

/// Two classes, five boxes, one image.
///
/// knob_static: 2 GT; detections exact (.9), shifted by 5 (.8, IoU 1/3),
/// and the second GT widened from 20 to 25 (.7, IoU 0.8).
/// electric_outlet: 1 GT; one miss (.95) then exact (.6).
fn micro() -> (Dataset, Vec<Detection>) {
    let knob = parse_ic("knob_static").unwrap();
    let outlet = parse_ic("electric_outlet").unwrap();
    let img = AnnotatedImage {
        image_id: 1,
        file_name: "m.jpg".into(),
        width: 200,
        height: 200,
        scene: None,
    };
    let gt = |id, ic, x, y, w, h| GroundTruthAnnotation {
        annotation_id: id,
        image_id: 1,
        ic,
        bbox: BBox::new(x, y, w, h),
    };
    let ds = Dataset::from_parts(
        vec![img],
        vec![
            gt(1, knob, 0.0, 0.0, 10.0, 10.0),
            gt(2, knob, 50.0, 50.0, 20.0, 20.0),
            gt(3, outlet, 100.0, 100.0, 30.0, 30.0),
        ],
    )
    .unwrap();
    let d = |ic, x, y, w, h, s| Detection::new(1, ic, BBox::new(x, y, w, h), s);
    let dets = vec![
        d(knob, 0.0, 0.0, 10.0, 10.0, 0.9),
        d(knob, 5.0, 0.0, 10.0, 10.0, 0.8),
        d(knob, 50.0, 50.0, 25.0, 20.0, 0.7),
        d(outlet, 0.0, 150.0, 30.0, 30.0, 0.95),
        d(outlet, 100.0, 100.0, 30.0, 30.0, 0.6),
    ];
    (ds, dets)
}

fn to_oracle(ds: &Dataset, dets: &[Detection]) -> (Vec<OGt>, Vec<ODet>) {
    let g = ds
        .annotations()
        .iter()
        .map(|a| OGt {
            image: a.image_id,
            class: a.ic.id(),
            x: a.bbox.x,
            y: a.bbox.y,
            w: a.bbox.w,
            h: a.bbox.h,
        })
        .collect();
    let d = dets
        .iter()
        .map(|d| ODet {
            image: d.image_id,
            class: d.ic.id(),
            x: d.bbox.x,
            y: d.bbox.y,
            w: d.bbox.w,
            h: d.bbox.h,
            score: d.score,
        })
        .collect();
    (g, d)
}

// Frozen from the oracle:
//   knob: TP, FP, TP(IoU .8 -> matched for t <= .8) -> AP50 = (51 + 50*2/3)/101,
//         thresholds .85..95 lose the third hit -> (51)/101.
//   outlet: FP then TP -> 0.5 at every threshold.
const KNOB_AP50: f64 = (51.0 + 50.0 * (2.0 / 3.0)) / 101.0;
const KNOB_HIGH: f64 = 51.0 / 101.0;

#[test]
fn micro_dataset_matches_frozen_oracle_values() {
    let (ds, dets) = micro();
    let (g, d) = to_oracle(&ds, &dets);
    let o = oracle_evaluate(&g, &d).unwrap();
    let knob_mean = (7.0 * KNOB_AP50 + 3.0 * KNOB_HIGH) / 10.0;
    let expected_map = (knob_mean + 0.5) / 2.0;
    assert!((o.map - expected_map).abs() < 1e-12);

    let r = evaluate(&ds, &dets, EvalParams::default()).unwrap();
    let knob = r.class(parse_ic("knob_static").unwrap()).unwrap();
    assert!((knob.ap50.unwrap() - KNOB_AP50).abs() < 1e-12);
    assert!((knob.ap.unwrap() - knob_mean).abs() < 1e-12);
    assert_eq!(r.class(parse_ic("electric_outlet").unwrap()).unwrap().ap, Some(0.5));
    assert!((r.map - expected_map).abs() < 1e-9);
    assert!((r.map - o.map).abs() < 1e-9);
    assert!((r.ap50 - o.ap50).abs() < 1e-9);
    assert!((r.ap75 - o.ap75).abs() < 1e-9);
}

#[test]
fn random_instances_match_oracle() {
    for seed in 0..300 {
        let inst = random_instance(seed);
        let report = evaluate(&inst.dataset(), &inst.detections(), EvalParams::default());
        match oracle_evaluate(&inst.gts, &inst.dets) {
            None => assert!(matches!(report, Err(Error::NoEvaluableClasses)), "seed {seed}"),
            Some(o) => {
                let r = report.unwrap();
                assert!((r.map - o.map).abs() < 1e-9, "seed {seed}: {} vs {}", r.map, o.map);
                assert!((r.ap50 - o.ap50).abs() < 1e-9, "seed {seed}");
                assert!((r.ap75 - o.ap75).abs() < 1e-9, "seed {seed}");
                for (class, ap, _, _) in o.per_class {
                    let c = r.class(InaccessibilityClass::from_id(class).unwrap()).unwrap();
                    assert!((c.ap.unwrap() - ap).abs() < 1e-9, "seed {seed} class {class}");
                }
            }
        }
    }
}

#[test]
fn perfect_detections_score_one() {
    let (ds, _) = micro();
    let dets: Vec<Detection> = ds
        .annotations()
        .iter()
        .map(|a| Detection::new(a.image_id, a.ic, a.bbox, 1.0))
        .collect();
    let r = evaluate(&ds, &dets, EvalParams::default()).unwrap();
    assert_eq!(r.map, 1.0);
    assert_eq!(r.evaluated_classes, 2);
    assert!(r.classes.iter().all(|c| c.ap.is_none_or(|v| v == 1.0)));
}

#[test]
fn only_unidentifiable_is_an_error() {
    let img = AnnotatedImage {
        image_id: 1,
        file_name: "u.jpg".into(),
        width: 50,
        height: 50,
        scene: None,
    };
    let ds = Dataset::from_parts(
        vec![img],
        vec![GroundTruthAnnotation {
            annotation_id: 1,
            image_id: 1,
            ic: InaccessibilityClass::UNIDENTIFIABLE,
            bbox: BBox::new(1.0, 1.0, 3.0, 3.0),
        }],
    )
    .unwrap();
    let dets = [Detection::new(1, InaccessibilityClass::UNIDENTIFIABLE, BBox::new(1.0, 1.0, 3.0, 3.0), 0.9)];
    assert!(matches!(evaluate(&ds, &dets, EvalParams::default()), Err(Error::NoEvaluableClasses)));
}

#[test]
fn unknown_image_is_inconsistent() {
    let (ds, mut dets) = micro();
    dets[0].image_id = 42;
    assert!(matches!(
        evaluate(&ds, &dets, EvalParams::default()),
        Err(Error::InconsistentInput(_))
    ));
}

#[test]
fn detection_cap() {
    let (ds, dets) = micro();
    // Cap 1 per (image, class): knob keeps the exact .9 box, outlet keeps only the .95 miss.
    let r = evaluate(&ds, &dets, EvalParams { max_detections: Some(1) }).unwrap();
    let outlet = r.class(parse_ic("electric_outlet").unwrap()).unwrap();
    assert_eq!(outlet.ap, Some(0.0));
    assert_eq!(outlet.detections, 1);
    let knob = r.class(parse_ic("knob_static").unwrap()).unwrap();
    assert!((knob.ap50.unwrap() - 51.0 / 101.0).abs() < 1e-12);
}
