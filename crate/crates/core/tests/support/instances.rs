//! Random micro-instances for cross-checking evaluation.

#![allow(dead_code)]

use accesslens::dataset::{AnnotatedImage, Dataset, GroundTruthAnnotation};
use accesslens::detector::Detection;
use accesslens::geometry::BBox;
use accesslens::taxonomy::InaccessibilityClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::{ODet, OGt};

pub struct Instance {
    pub gts: Vec<OGt>,
    pub dets: Vec<ODet>,
}

/// At most 20 GT boxes, 40 detections and 4 classes over 1-3 images.
/// Coordinates are multiples of 5 and scores come from a short list, so
/// exact IoU boundaries and score ties are frequent.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_images = rng.random_range(1..=3u64);
    let n_classes = rng.random_range(1..=4usize);
    let mut pool: Vec<u32> = (1..=21).collect();
    let mut classes = Vec::new();
    for _ in 0..n_classes {
        classes.push(pool.remove(rng.random_range(0..pool.len())));
    }
    let rand_box = |rng: &mut ChaCha8Rng| {
        let x = 5.0 * rng.random_range(0..=12) as f64;
        let y = 5.0 * rng.random_range(0..=12) as f64;
        let w = 5.0 * rng.random_range(2..=8) as f64;
        let h = 5.0 * rng.random_range(2..=8) as f64;
        (x, y, w, h)
    };
    let n_gt = rng.random_range(0..=20usize);
    let mut gts = Vec::new();
    for _ in 0..n_gt {
        let (x, y, w, h) = rand_box(&mut rng);
        gts.push(OGt {
            image: rng.random_range(1..=n_images),
            class: classes[rng.random_range(0..classes.len())],
            x,
            y,
            w,
            h,
        });
    }
    let n_det = rng.random_range(0..=40usize);
    let mut dets = Vec::new();
    for _ in 0..n_det {
        let score = rng.random_range(1..=9) as f64 / 10.0;
        if !gts.is_empty() && rng.random_bool(0.6) {
            let g = gts[rng.random_range(0..gts.len())];
            let dx = 5.0 * rng.random_range(-2..=2) as f64;
            let dw = 5.0 * rng.random_range(-1..=2) as f64;
            let class = if rng.random_bool(0.85) { g.class } else { classes[rng.random_range(0..classes.len())] };
            dets.push(ODet {
                image: g.image,
                class,
                x: (g.x + dx).max(0.0),
                y: g.y,
                w: (g.w + dw).max(5.0),
                h: g.h,
                score,
            });
        } else {
            let (x, y, w, h) = rand_box(&mut rng);
            dets.push(ODet {
                image: rng.random_range(1..=n_images),
                class: classes[rng.random_range(0..classes.len())],
                x,
                y,
                w,
                h,
                score,
            });
        }
    }
    Instance { gts, dets }
}

impl Instance {
    pub fn n_images(&self) -> u64 {
        3
    }

    pub fn dataset(&self) -> Dataset {
        let images = (1..=self.n_images())
            .map(|id| AnnotatedImage {
                image_id: id,
                file_name: format!("img{id}.jpg"),
                width: 200,
                height: 200,
                scene: None,
            })
            .collect();
        let anns = self
            .gts
            .iter()
            .enumerate()
            .map(|(i, g)| GroundTruthAnnotation {
                annotation_id: i as u64 + 1,
                image_id: g.image,
                ic: InaccessibilityClass::from_id(g.class).unwrap(),
                bbox: BBox::new(g.x, g.y, g.w, g.h),
            })
            .collect();
        Dataset::from_parts(images, anns).expect("instance is valid")
    }

    pub fn detections(&self) -> Vec<Detection> {
        self.dets
            .iter()
            .map(|d| {
                Detection::new(
                    d.image,
                    InaccessibilityClass::from_id(d.class).unwrap(),
                    BBox::new(d.x, d.y, d.w, d.h),
                    d.score,
                )
            })
            .collect()
    }
}
