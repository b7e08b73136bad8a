//! Detector adapters and inference post-processing.
//!
//! Every adapter turns one image reference into raw detections. Raw output
//! feeds evaluation directly; the interactive path runs [`postprocess`]
//! first.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Issue, Result};
use crate::evaluation::iou_unchecked;
use crate::geometry::BBox;
use crate::taxonomy::InaccessibilityClass;

pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.5;
pub const DEFAULT_NMS_IOU: f64 = 0.5;

/// One predicted box. Wire form is the COCO results record
/// `{"image_id", "category_id", "bbox", "score"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: u64,
    #[serde(rename = "category_id")]
    pub ic: InaccessibilityClass,
    pub bbox: BBox,
    pub score: f64,
}

impl Detection {
    pub fn new(image_id: u64, ic: InaccessibilityClass, bbox: BBox, score: f64) -> Self {
        Self {
            image_id,
            ic,
            bbox,
            score,
        }
    }

    pub fn check(&self) -> std::result::Result<(), String> {
        if !self.bbox.is_finite() || !self.bbox.is_proper() {
            return Err(format!("degenerate bbox {:?}", self.bbox.to_array()));
        }
        if !(0.0..=1.0).contains(&self.score) {
            return Err(format!("score {} outside [0, 1]", self.score));
        }
        Ok(())
    }
}

/// Parse and validate a COCO results array.
pub fn parse_detections(text: &str) -> Result<Vec<Detection>> {
    let dets: Vec<Detection> = serde_json::from_str(text).map_err(|e| Error::parse("detections", e))?;
    let issues: Vec<Issue> = dets
        .iter()
        .enumerate()
        .filter_map(|(i, d)| d.check().err().map(|m| Issue::new(format!("detection {i}"), m)))
        .collect();
    if issues.is_empty() {
        Ok(dets)
    } else {
        Err(Error::Validation(issues))
    }
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<Detection>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_detections(&text)
}

pub fn detections_to_json(dets: &[Detection]) -> String {
    serde_json::to_string_pretty(dets).expect("detections serialize")
}

/// What a detector is asked to look at. Adapters use whichever parts they
/// need: the oracle and file adapters resolve an image id, the remote
/// adapter uploads the bytes.
#[derive(Debug, Clone, Copy, Default)]
pub struct ImageRef<'a> {
    pub image_id: Option<u64>,
    pub file_name: Option<&'a str>,
    pub bytes: Option<&'a [u8]>,
    pub content_type: Option<&'a str>,
}

impl<'a> ImageRef<'a> {
    pub fn by_id(image_id: u64) -> Self {
        Self {
            image_id: Some(image_id),
            ..Self::default()
        }
    }

    fn resolve_id(&self, index: Option<&Dataset>) -> Option<u64> {
        self.image_id.or_else(|| {
            let name = self.file_name?;
            index?.image_by_file_name(name).map(|i| i.image_id)
        })
    }

    fn describe(&self) -> String {
        match (self.image_id, self.file_name) {
            (Some(id), _) => id.to_string(),
            (None, Some(name)) => name.to_string(),
            (None, None) => "<anonymous>".to_string(),
        }
    }
}

pub trait Detector: Send + Sync {
    fn detect(&self, image: &ImageRef<'_>) -> Result<Vec<Detection>>;
}

/// Detects nothing. Useful for exercising the service without a model.
#[derive(Debug, Default, Clone, Copy)]
pub struct StubDetector;

impl Detector for StubDetector {
    fn detect(&self, _image: &ImageRef<'_>) -> Result<Vec<Detection>> {
        Ok(Vec::new())
    }
}

/// Serves detections precomputed in a COCO results file.
pub struct FileDetector {
    by_image: HashMap<u64, Vec<Detection>>,
    index: Option<Arc<Dataset>>,
}

impl FileDetector {
    pub fn new(detections: Vec<Detection>, index: Option<Arc<Dataset>>) -> Self {
        let mut by_image: HashMap<u64, Vec<Detection>> = HashMap::new();
        for d in detections {
            by_image.entry(d.image_id).or_default().push(d);
        }
        Self { by_image, index }
    }

    pub fn open(path: impl AsRef<Path>, index: Option<Arc<Dataset>>) -> Result<Self> {
        Ok(Self::new(load_detections(path)?, index))
    }
}

impl Detector for FileDetector {
    fn detect(&self, image: &ImageRef<'_>) -> Result<Vec<Detection>> {
        image
            .resolve_id(self.index.as_deref())
            .and_then(|id| self.by_image.get(&id))
            .cloned()
            .ok_or_else(|| Error::MissingPrecomputed(image.describe()))
    }
}

/// Perturbation knobs for [`OracleDetector`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    /// Probability of dropping each ground-truth box.
    pub drop_rate: f64,
    /// Maximum absolute shift, in pixels, applied to each box coordinate.
    pub jitter_pixels: f64,
    /// Scores are drawn uniformly from `[1 - score_noise, 1]`.
    pub score_noise: f64,
    pub seed: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            drop_rate: 0.0,
            jitter_pixels: 0.0,
            score_noise: 0.0,
            seed: 0,
        }
    }
}

impl OracleParams {
    fn check(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(format!("oracle {what}")));
        if !(0.0..=1.0).contains(&self.drop_rate) {
            return bad("drop_rate must be in [0, 1]");
        }
        if !(self.jitter_pixels >= 0.0 && self.jitter_pixels.is_finite()) {
            return bad("jitter_pixels must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.score_noise) {
            return bad("score_noise must be in [0, 1]");
        }
        Ok(())
    }
}

/// Emits (optionally perturbed) ground truth.
///
/// Randomness is derived from `(seed, image_id)` only, so results do not
/// depend on call order or concurrency.
pub struct OracleDetector {
    ground_truth: Arc<Dataset>,
    params: OracleParams,
}

impl OracleDetector {
    pub fn new(ground_truth: Arc<Dataset>, params: OracleParams) -> Result<Self> {
        params.check()?;
        Ok(Self {
            ground_truth,
            params,
        })
    }

    fn rng_for(&self, image_id: u64) -> ChaCha8Rng {
        // splitmix64 finalizer over the pair
        let mut z = self.params.seed ^ image_id.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
    }
}

impl Detector for OracleDetector {
    fn detect(&self, image: &ImageRef<'_>) -> Result<Vec<Detection>> {
        let id = image
            .resolve_id(Some(&self.ground_truth))
            .ok_or_else(|| Error::MissingPrecomputed(image.describe()))?;
        let meta = self
            .ground_truth
            .image(id)
            .ok_or_else(|| Error::MissingPrecomputed(image.describe()))?;
        let (img_w, img_h) = (meta.width as f64, meta.height as f64);
        let p = self.params;
        let mut rng = self.rng_for(id);
        let mut out = Vec::new();
        for gt in self.ground_truth.annotations_for(id) {
            // Fixed number of draws per box keeps streams aligned across params.
            let drop: f64 = rng.random();
            let jitter: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..=1.0));
            let noise: f64 = rng.random();
            if drop < p.drop_rate {
                continue;
            }
            let mut b = gt.bbox;
            if p.jitter_pixels > 0.0 {
                let j = p.jitter_pixels;
                b.w = (b.w + jitter[2] * j).clamp(1.0_f64.min(img_w), img_w);
                b.h = (b.h + jitter[3] * j).clamp(1.0_f64.min(img_h), img_h);
                b.x = (b.x + jitter[0] * j).clamp(0.0, img_w - b.w);
                b.y = (b.y + jitter[1] * j).clamp(0.0, img_h - b.h);
            }
            let score = (1.0 - p.score_noise * noise).clamp(0.0, 1.0);
            out.push(Detection::new(id, gt.ic, b, score));
        }
        Ok(out)
    }
}

/// Client for an external model server: POST raw image bytes, receive a
/// COCO results array.
pub struct RemoteDetector {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl RemoteDetector {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("http client: {e}")))?;
        Ok(Self {
            endpoint: endpoint.into(),
            client,
        })
    }
}

impl Detector for RemoteDetector {
    fn detect(&self, image: &ImageRef<'_>) -> Result<Vec<Detection>> {
        let bytes = image
            .bytes
            .ok_or_else(|| Error::InvalidConfig("remote detector needs image bytes".into()))?;
        let resp = self
            .client
            .post(&self.endpoint)
            .header(
                reqwest::header::CONTENT_TYPE,
                image.content_type.unwrap_or("application/octet-stream"),
            )
            .body(bytes.to_vec())
            .send()
            .map_err(|e| Error::AdapterUnavailable(format!("{}: {e}", self.endpoint)))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Error::AdapterUnavailable(format!(
                "{} answered {status}",
                self.endpoint
            )));
        }
        let text = resp
            .text()
            .map_err(|e| Error::AdapterUnavailable(format!("{}: {e}", self.endpoint)))?;
        let mut dets = parse_detections(&text)
            .map_err(|e| Error::AdapterUnavailable(format!("invalid model response: {e}")))?;
        if let Some(id) = image.image_id {
            for d in &mut dets {
                d.image_id = id;
            }
        }
        Ok(dets)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorMode {
    #[default]
    Stub,
    File,
    Remote,
    Oracle,
}

impl FromStr for DetectorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stub" => Ok(Self::Stub),
            "file" => Ok(Self::File),
            "remote" => Ok(Self::Remote),
            "oracle" => Ok(Self::Oracle),
            other => Err(Error::InvalidConfig(format!("unknown detector mode `{other}`"))),
        }
    }
}

impl fmt::Display for DetectorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Stub => "stub",
            Self::File => "file",
            Self::Remote => "remote",
            Self::Oracle => "oracle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    pub mode: DetectorMode,
    /// Model server URL (remote mode).
    pub endpoint: Option<String>,
    /// Precomputed detections file (file mode).
    pub path: Option<PathBuf>,
    /// Annotation file: oracle source, and file-name lookup for file mode.
    pub ground_truth: Option<PathBuf>,
    pub score_threshold: f64,
    /// `None` disables duplicate suppression.
    pub nms_iou: Option<f64>,
    pub timeout_secs: u64,
    pub oracle: OracleParams,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            mode: DetectorMode::Stub,
            endpoint: None,
            path: None,
            ground_truth: None,
            score_threshold: DEFAULT_SCORE_THRESHOLD,
            nms_iou: Some(DEFAULT_NMS_IOU),
            timeout_secs: 30,
            oracle: OracleParams::default(),
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(Error::InvalidConfig("score_threshold must be in [0, 1]".into()));
        }
        if let Some(t) = self.nms_iou {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidConfig("nms_iou must be in [0, 1]".into()));
            }
        }
        self.oracle.check()?;
        match self.mode {
            DetectorMode::Remote if self.endpoint.is_none() => {
                Err(Error::InvalidConfig("remote mode needs `endpoint`".into()))
            }
            DetectorMode::File if self.path.is_none() => {
                Err(Error::InvalidConfig("file mode needs `path`".into()))
            }
            DetectorMode::Oracle if self.ground_truth.is_none() => {
                Err(Error::InvalidConfig("oracle mode needs `ground_truth`".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Detector>> {
        self.validate()?;
        let gt = match &self.ground_truth {
            Some(p) => Some(Arc::new(Dataset::load(p)?)),
            None => None,
        };
        Ok(match self.mode {
            DetectorMode::Stub => Box::new(StubDetector),
            DetectorMode::File => Box::new(FileDetector::open(self.path.as_ref().unwrap(), gt)?),
            DetectorMode::Remote => Box::new(RemoteDetector::new(
                self.endpoint.clone().unwrap(),
                Duration::from_secs(self.timeout_secs),
            )?),
            DetectorMode::Oracle => Box::new(OracleDetector::new(gt.unwrap(), self.oracle)?),
        })
    }
}

/// Score filter followed by per-(image, class) greedy suppression.
///
/// Keeps detections with `score >= score_threshold`; within each image and
/// class, a box is dropped when its IoU with an already kept, higher-scored
/// box exceeds `nms_iou`. Output is sorted by score, descending, with ties
/// in input order.
pub fn postprocess(detections: &[Detection], score_threshold: f64, nms_iou: Option<f64>) -> Vec<Detection> {
    let mut order: Vec<&Detection> = detections.iter().filter(|d| d.score >= score_threshold).collect();
    order.sort_by(|a, b| b.score.total_cmp(&a.score));
    let Some(limit) = nms_iou else {
        return order.into_iter().cloned().collect();
    };
    let mut kept: Vec<Detection> = Vec::with_capacity(order.len());
    let mut groups: HashMap<(u64, InaccessibilityClass), Vec<BBox>> = HashMap::new();
    for d in order {
        let group = groups.entry((d.image_id, d.ic)).or_default();
        if group.iter().all(|k| iou_unchecked(k, &d.bbox) <= limit) {
            group.push(d.bbox);
            kept.push(d.clone());
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{AnnotatedImage, GroundTruthAnnotation};
    use crate::taxonomy::parse_ic;

    fn ic(name: &str) -> InaccessibilityClass {
        parse_ic(name).unwrap()
    }

    fn gt_dataset() -> Arc<Dataset> {
        let img = AnnotatedImage {
            image_id: 7,
            file_name: "bath.jpg".into(),
            width: 200,
            height: 100,
            scene: Some("bathroom".into()),
        };
        let anns = vec![
            GroundTruthAnnotation {
                annotation_id: 1,
                image_id: 7,
                ic: ic("electric_outlet"),
                bbox: BBox::new(10.0, 10.0, 20.0, 30.0),
            },
            GroundTruthAnnotation {
                annotation_id: 2,
                image_id: 7,
                ic: ic("faucet_handle_lever"),
                bbox: BBox::new(50.0, 40.0, 40.0, 20.0),
            },
            GroundTruthAnnotation {
                annotation_id: 3,
                image_id: 7,
                ic: InaccessibilityClass::UNIDENTIFIABLE,
                bbox: BBox::new(150.0, 5.0, 4.0, 4.0),
            },
        ];
        Arc::new(Dataset::from_parts(vec![img], anns).unwrap())
    }

    #[test]
    fn identity_oracle_returns_ground_truth() {
        let gt = gt_dataset();
        let oracle = OracleDetector::new(gt.clone(), OracleParams::default()).unwrap();
        let dets = oracle.detect(&ImageRef::by_id(7)).unwrap();
        assert_eq!(dets.len(), 3);
        for (d, g) in dets.iter().zip(gt.annotations()) {
            assert_eq!(d.bbox, g.bbox);
            assert_eq!(d.ic, g.ic);
            assert_eq!(d.score, 1.0);
        }
        let by_name = ImageRef {
            file_name: Some("bath.jpg"),
            ..Default::default()
        };
        assert_eq!(oracle.detect(&by_name).unwrap(), dets);
    }

    #[test]
    fn oracle_drop_all() {
        let params = OracleParams {
            drop_rate: 1.0,
            ..Default::default()
        };
        let oracle = OracleDetector::new(gt_dataset(), params).unwrap();
        assert!(oracle.detect(&ImageRef::by_id(7)).unwrap().is_empty());
    }

    #[test]
    fn oracle_perturbation_is_seeded_and_valid() {
        let params = OracleParams {
            drop_rate: 0.3,
            jitter_pixels: 5.0,
            score_noise: 0.5,
            seed: 42,
        };
        let a = OracleDetector::new(gt_dataset(), params).unwrap();
        let b = OracleDetector::new(gt_dataset(), params).unwrap();
        let da = a.detect(&ImageRef::by_id(7)).unwrap();
        assert_eq!(da, b.detect(&ImageRef::by_id(7)).unwrap());
        for d in &da {
            d.check().unwrap();
            assert!(d.bbox.fits_within(200.0, 100.0));
            assert!(d.score >= 0.5);
        }
    }

    #[test]
    fn oracle_unknown_image() {
        let oracle = OracleDetector::new(gt_dataset(), OracleParams::default()).unwrap();
        assert!(matches!(oracle.detect(&ImageRef::by_id(99)), Err(Error::MissingPrecomputed(_))));
    }

    #[test]
    fn file_mode_passthrough() {
        let dets: Vec<Detection> = (0..5)
            .map(|i| Detection::new(3, ic("knob_static"), BBox::new(i as f64, 0.0, 4.0, 4.0), 0.1 * i as f64))
            .collect();
        let f = FileDetector::new(dets.clone(), None);
        assert_eq!(f.detect(&ImageRef::by_id(3)).unwrap(), dets);
        assert!(matches!(f.detect(&ImageRef::by_id(4)), Err(Error::MissingPrecomputed(_))));
    }

    #[test]
    fn remote_unreachable_is_adapter_unavailable() {
        let r = RemoteDetector::new("http://127.0.0.1:9/detect", Duration::from_secs(2)).unwrap();
        let img = ImageRef {
            bytes: Some(b"not really a png"),
            ..Default::default()
        };
        assert!(matches!(r.detect(&img), Err(Error::AdapterUnavailable(_))));
    }

    #[test]
    fn parse_rejects_bad_scores() {
        let text = r#"[{"image_id": 1, "category_id": 3, "bbox": [0, 0, 1, 1], "score": 1.5}]"#;
        assert!(matches!(parse_detections(text), Err(Error::Validation(_))));
        let text = r#"[{"image_id": 1, "category_id": 23, "bbox": [0, 0, 1, 1], "score": 0.5}]"#;
        assert!(matches!(parse_detections(text), Err(Error::Parse { .. })));
    }

    #[test]
    fn nms_suppresses_identical_box() {
        let b = BBox::new(0.0, 0.0, 10.0, 10.0);
        let dets = vec![
            Detection::new(1, ic("knob_static"), b, 0.8),
            Detection::new(1, ic("knob_static"), b, 0.9),
        ];
        let out = postprocess(&dets, 0.0, Some(0.5));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].score, 0.9);
    }

    #[test]
    fn nms_is_per_class() {
        let b = BBox::new(0.0, 0.0, 10.0, 10.0);
        let dets = vec![
            Detection::new(1, ic("knob_static"), b, 0.9),
            Detection::new(1, ic("knob_rotate_round"), b, 0.8),
        ];
        assert_eq!(postprocess(&dets, 0.0, Some(0.5)).len(), 2);
    }

    #[test]
    fn threshold_filters() {
        let b = BBox::new(0.0, 0.0, 10.0, 10.0);
        let dets = vec![
            Detection::new(1, ic("knob_static"), b, 0.4),
            Detection::new(2, ic("knob_static"), b, 0.6),
        ];
        let out = postprocess(&dets, 0.5, Some(0.5));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].score, 0.6);
    }

    #[test]
    fn config_requires_mode_inputs() {
        let mut c = DetectorConfig {
            mode: DetectorMode::Remote,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.endpoint = Some("http://localhost:1".into());
        c.validate().unwrap();
        c.score_threshold = 2.0;
        assert!(c.validate().is_err());
        assert_eq!("ORACLE".parse::<DetectorMode>().unwrap(), DetectorMode::Oracle);
    }
}
