//! COCO-style annotation files: loading, validation, statistics and splits.
//!
//! File layout is the usual `{images, annotations, categories}` triple.
//! `categories` must list exactly the 22 taxonomy classes by id and name.
//! Boxes are `[x, y, w, h]` pixel floats and must lie inside their image.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Result};
use crate::geometry::BBox;
use crate::taxonomy::InaccessibilityClass;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedImage {
    #[serde(rename = "id")]
    pub image_id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthAnnotation {
    pub annotation_id: u64,
    pub image_id: u64,
    pub ic: InaccessibilityClass,
    pub bbox: BBox,
}

/// Dataset after successful validation. Immutable; images and annotations
/// are kept sorted by id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    images: Vec<AnnotatedImage>,
    annotations: Vec<GroundTruthAnnotation>,
}

#[derive(Debug, Deserialize)]
struct RawFile {
    images: Vec<RawImage>,
    annotations: Vec<RawAnnotation>,
    categories: Vec<RawCategory>,
}

#[derive(Debug, Deserialize)]
struct RawImage {
    id: u64,
    file_name: String,
    width: i64,
    height: i64,
    #[serde(default)]
    scene: Option<String>,
}

#[derive(Debug, Deserialize)]
struct RawAnnotation {
    id: u64,
    image_id: u64,
    category_id: i64,
    bbox: [f64; 4],
}

#[derive(Debug, Serialize, Deserialize)]
struct RawCategory {
    id: i64,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    supercategory: Option<String>,
}

#[derive(Serialize)]
struct OutFile<'a> {
    images: &'a [AnnotatedImage],
    annotations: Vec<OutAnnotation>,
    categories: Vec<RawCategory>,
}

#[derive(Serialize)]
struct OutAnnotation {
    id: u64,
    image_id: u64,
    category_id: u32,
    bbox: BBox,
    area: f64,
    iscrowd: u8,
}

/// Category list every annotation file must carry.
fn taxonomy_categories() -> Vec<RawCategory> {
    InaccessibilityClass::all()
        .map(|c| RawCategory {
            id: c.id() as i64,
            name: c.name().to_string(),
            supercategory: c.parent_category().map(|p| p.as_str().to_string()),
        })
        .collect()
}

impl Dataset {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Read and validate an annotation file. Nothing is returned unless the
    /// whole file is valid.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawFile = serde_json::from_str(text).map_err(|e| Error::parse("annotation file", e))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawFile) -> Result<Self> {
        let mut issues = Vec::new();
        check_categories(&raw.categories, &mut issues);

        let mut images = Vec::with_capacity(raw.images.len());
        let mut image_sizes = HashMap::new();
        for img in raw.images {
            let loc = format!("image {}", img.id);
            let mut ok = true;
            if image_sizes.contains_key(&img.id) {
                issues.push(Issue::new(&loc, "duplicate image id"));
                ok = false;
            }
            if img.width <= 0 || img.height <= 0 || img.width > u32::MAX as i64 || img.height > u32::MAX as i64 {
                issues.push(Issue::new(
                    &loc,
                    format!("invalid size {}x{}", img.width, img.height),
                ));
                ok = false;
            }
            if ok {
                image_sizes.insert(img.id, (img.width as f64, img.height as f64));
                images.push(AnnotatedImage {
                    image_id: img.id,
                    file_name: img.file_name,
                    width: img.width as u32,
                    height: img.height as u32,
                    scene: img.scene,
                });
            }
        }

        let mut seen = BTreeSet::new();
        let mut annotations = Vec::with_capacity(raw.annotations.len());
        for ann in raw.annotations {
            let loc = format!("annotation {}", ann.id);
            let mut ok = true;
            if !seen.insert(ann.id) {
                issues.push(Issue::new(&loc, "duplicate annotation id"));
                ok = false;
            }
            let ic = u32::try_from(ann.category_id)
                .ok()
                .and_then(|id| InaccessibilityClass::from_id(id).ok());
            if ic.is_none() {
                issues.push(Issue::new(
                    &loc,
                    format!("UnknownClass: category_id {} is outside 1..22", ann.category_id),
                ));
                ok = false;
            }
            let bbox = BBox::from(ann.bbox);
            if !bbox.is_finite() || !bbox.is_proper() {
                issues.push(Issue::new(
                    &loc,
                    format!("degenerate bbox {:?}: width and height must be positive", ann.bbox),
                ));
                ok = false;
            }
            match image_sizes.get(&ann.image_id) {
                None => {
                    issues.push(Issue::new(
                        &loc,
                        format!("dangling image_id {}", ann.image_id),
                    ));
                    ok = false;
                }
                Some(&(w, h)) => {
                    if bbox.is_finite() && !bbox.fits_within(w, h) {
                        issues.push(Issue::new(
                            &loc,
                            format!("bbox {:?} exceeds image bounds {}x{}", ann.bbox, w, h),
                        ));
                        ok = false;
                    }
                }
            }
            if let (true, Some(ic)) = (ok, ic) {
                annotations.push(GroundTruthAnnotation {
                    annotation_id: ann.id,
                    image_id: ann.image_id,
                    ic,
                    bbox,
                });
            }
        }

        if !issues.is_empty() {
            return Err(Error::Validation(issues));
        }
        images.sort_by_key(|i| i.image_id);
        annotations.sort_by_key(|a| a.annotation_id);
        Ok(Self {
            images,
            annotations,
        })
    }

    /// Build a dataset from already-typed parts, applying the same checks as
    /// [`Dataset::load`].
    pub fn from_parts(images: Vec<AnnotatedImage>, annotations: Vec<GroundTruthAnnotation>) -> Result<Self> {
        let raw = RawFile {
            images: images
                .into_iter()
                .map(|i| RawImage {
                    id: i.image_id,
                    file_name: i.file_name,
                    width: i.width as i64,
                    height: i.height as i64,
                    scene: i.scene,
                })
                .collect(),
            annotations: annotations
                .into_iter()
                .map(|a| RawAnnotation {
                    id: a.annotation_id,
                    image_id: a.image_id,
                    category_id: a.ic.id() as i64,
                    bbox: a.bbox.to_array(),
                })
                .collect(),
            categories: taxonomy_categories(),
        };
        Self::from_raw(raw)
    }

    pub fn images(&self) -> &[AnnotatedImage] {
        &self.images
    }

    pub fn annotations(&self) -> &[GroundTruthAnnotation] {
        &self.annotations
    }

    pub fn image(&self, image_id: u64) -> Option<&AnnotatedImage> {
        self.images
            .binary_search_by_key(&image_id, |i| i.image_id)
            .ok()
            .map(|i| &self.images[i])
    }

    pub fn image_by_file_name(&self, file_name: &str) -> Option<&AnnotatedImage> {
        self.images.iter().find(|i| i.file_name == file_name)
    }

    pub fn annotations_for(&self, image_id: u64) -> impl Iterator<Item = &GroundTruthAnnotation> {
        self.annotations.iter().filter(move |a| a.image_id == image_id)
    }

    pub fn to_json(&self) -> String {
        let out = OutFile {
            images: &self.images,
            annotations: self
                .annotations
                .iter()
                .map(|a| OutAnnotation {
                    id: a.annotation_id,
                    image_id: a.image_id,
                    category_id: a.ic.id(),
                    bbox: a.bbox,
                    area: a.bbox.area(),
                    iscrowd: 0,
                })
                .collect(),
            categories: taxonomy_categories(),
        };
        serde_json::to_string_pretty(&out).expect("dataset serialization cannot fail")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn stats(&self) -> DatasetStats {
        let mut counts = [0usize; InaccessibilityClass::COUNT];
        for a in &self.annotations {
            counts[a.ic.id() as usize - 1] += 1;
        }
        DatasetStats {
            per_class_counts: InaccessibilityClass::all()
                .map(|c| ClassCount {
                    id: c.id(),
                    name: c.name().to_string(),
                    count: counts[c.id() as usize - 1],
                })
                .collect(),
            total_objects: self.annotations.len(),
            total_images: self.images.len(),
        }
    }

    /// Random split by image.
    ///
    /// The training side receives `floor(train_fraction * n)` images, i.e.
    /// the validation side is rounded up. Image ids are shuffled with a
    /// ChaCha8 stream seeded from `seed`, so the split is reproducible.
    pub fn split(&self, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train_fraction must be in (0, 1), got {train_fraction}"
            )));
        }
        if self.images.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n_train = train_size(self.images.len(), train_fraction);
        let mut ids: Vec<u64> = self.images.iter().map(|i| i.image_id).collect();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let train_ids: BTreeSet<u64> = ids[..n_train].iter().copied().collect();
        Ok((
            self.subset(|id| train_ids.contains(&id)),
            self.subset(|id| !train_ids.contains(&id)),
        ))
    }

    /// Images (and their annotations) whose id passes `keep`.
    pub fn subset(&self, keep: impl Fn(u64) -> bool) -> Dataset {
        Dataset {
            images: self.images.iter().filter(|i| keep(i.image_id)).cloned().collect(),
            annotations: self
                .annotations
                .iter()
                .filter(|a| keep(a.image_id))
                .cloned()
                .collect(),
        }
    }
}

/// Training-set size for a split of `n` images.
pub fn train_size(n: usize, train_fraction: f64) -> usize {
    // The epsilon absorbs representation error such as 0.3 * 10 = 2.9999999999999996.
    ((train_fraction * n as f64) + 1e-9).floor().min(n as f64) as usize
}

fn check_categories(categories: &[RawCategory], issues: &mut Vec<Issue>) {
    let mut by_id = BTreeMap::new();
    for c in categories {
        if by_id.insert(c.id, c.name.as_str()).is_some() {
            issues.push(Issue::new(format!("category {}", c.id), "duplicate category id"));
        }
    }
    for c in InaccessibilityClass::all() {
        match by_id.remove(&(c.id() as i64)) {
            None => issues.push(Issue::new(format!("category {}", c.id()), format!("missing `{}`", c.name()))),
            Some(name) if !name.eq_ignore_ascii_case(c.name()) => issues.push(Issue::new(
                format!("category {}", c.id()),
                format!("name `{name}` does not match taxonomy `{}`", c.name()),
            )),
            Some(_) => {}
        }
    }
    for (id, name) in by_id {
        issues.push(Issue::new(
            format!("category {id}"),
            format!("UnknownClass: `{name}` is not a taxonomy class"),
        ));
    }
}

/// Outcome of checking a file without keeping the dataset.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub images: usize,
    pub annotations: usize,
    pub issues: Vec<Issue>,
}

pub fn validate_file(path: impl AsRef<Path>) -> Result<ValidationReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: RawFile = serde_json::from_str(&text).map_err(|e| Error::parse("annotation file", e))?;
    let (n_images, n_annotations) = (raw.images.len(), raw.annotations.len());
    Ok(match Dataset::from_raw(raw) {
        Ok(_) => ValidationReport {
            valid: true,
            images: n_images,
            annotations: n_annotations,
            issues: vec![],
        },
        Err(Error::Validation(issues)) => ValidationReport {
            valid: false,
            images: n_images,
            annotations: n_annotations,
            issues,
        },
        Err(e) => return Err(e),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub id: u32,
    pub name: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    /// One entry per class, in id order, zeros included.
    pub per_class_counts: Vec<ClassCount>,
    pub total_objects: usize,
    pub total_images: usize,
}

impl DatasetStats {
    pub fn count(&self, ic: InaccessibilityClass) -> usize {
        self.per_class_counts[ic.id() as usize - 1].count
    }

    /// Plain-text table: `id  class  count` rows and a total line.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<4}{:<28}{:>8}", "id", "inaccessibility class", "count");
        for c in &self.per_class_counts {
            let _ = writeln!(out, "{:<4}{:<28}{:>8}", c.id, c.name, c.count);
        }
        let _ = writeln!(out, "{:<4}{:<28}{:>8}", "", "total", self.total_objects);
        let _ = writeln!(out, "{:<4}{:<28}{:>8}", "", "images", self.total_images);
        out
    }
}

/// Sidecar written next to a split's two annotation files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub source: String,
    pub seed: u64,
    pub train_fraction: f64,
    pub train_file: String,
    pub validation_file: String,
    pub train_images: usize,
    pub validation_images: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fixture_json(extra_annotation: &str) -> String {
        let cats = serde_json::to_string(&taxonomy_categories()).unwrap();
        format!(
            r#"{{"images": [
                {{"id": 1, "file_name": "a.jpg", "width": 100, "height": 80, "scene": "kitchen"}},
                {{"id": 2, "file_name": "b.jpg", "width": 50, "height": 50}}
            ],
            "annotations": [
                {{"id": 1, "image_id": 1, "category_id": 10, "bbox": [0, 0, 10, 10]}},
                {{"id": 2, "image_id": 1, "category_id": 17, "bbox": [20, 20, 30, 30]}},
                {{"id": 3, "image_id": 2, "category_id": 3, "bbox": [1, 1, 5, 5]}}{extra_annotation}
            ],
            "categories": {cats}}}"#
        )
    }

    #[test]
    fn loads_fixture() {
        let d = Dataset::from_json_str(&fixture_json("")).unwrap();
        assert_eq!(d.images().len(), 2);
        assert_eq!(d.annotations().len(), 3);
        assert_eq!(d.image(1).unwrap().scene.as_deref(), Some("kitchen"));
        assert_eq!(d.image(2).unwrap().scene, None);
    }

    #[test]
    fn zero_width_box_names_annotation() {
        let err = Dataset::from_json_str(&fixture_json(
            r#", {"id": 9, "image_id": 2, "category_id": 3, "bbox": [1, 1, 0, 5]}"#,
        ))
        .unwrap_err();
        let Error::Validation(issues) = err else { panic!("{err}") };
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].location, "annotation 9");
    }

    #[test]
    fn unknown_category_id() {
        let err = Dataset::from_json_str(&fixture_json(
            r#", {"id": 9, "image_id": 2, "category_id": 23, "bbox": [1, 1, 2, 2]}"#,
        ))
        .unwrap_err();
        let Error::Validation(issues) = err else { panic!("{err}") };
        assert!(issues[0].message.contains("UnknownClass"));
    }

    #[test]
    fn collects_every_issue() {
        let err = Dataset::from_json_str(&fixture_json(
            r#", {"id": 9, "image_id": 7, "category_id": 3, "bbox": [1, 1, 2, 2]},
                {"id": 10, "image_id": 2, "category_id": 3, "bbox": [45, 45, 10, 2]},
                {"id": 1, "image_id": 2, "category_id": 3, "bbox": [1, 1, 2, 2]}"#,
        ))
        .unwrap_err();
        let Error::Validation(issues) = err else { panic!("{err}") };
        let locs: Vec<_> = issues.iter().map(|i| i.location.as_str()).collect();
        assert_eq!(locs, ["annotation 9", "annotation 10", "annotation 1"]);
    }

    #[test]
    fn malformed_json_is_parse_error() {
        assert!(matches!(Dataset::from_json_str("{"), Err(Error::Parse { .. })));
    }

    #[test]
    fn categories_must_match_taxonomy() {
        let text = fixture_json("").replace("\"knob_static\"", "\"knob\"");
        assert!(matches!(Dataset::from_json_str(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn empty_dataset_stats() {
        let s = Dataset::empty().stats();
        assert_eq!(s.total_objects, 0);
        assert_eq!(s.total_images, 0);
        assert!(s.per_class_counts.iter().all(|c| c.count == 0));
        assert!(matches!(Dataset::empty().split(0.5, 1), Err(Error::EmptyDataset)));
    }

    #[test]
    fn train_sizes() {
        assert_eq!(train_size(2388, 0.85), 2029);
        assert_eq!(train_size(10, 0.5), 5);
        assert_eq!(train_size(10, 0.3), 3);
        assert_eq!(train_size(10, 0.85), 8);
    }

    #[test]
    fn split_rejects_bad_fraction() {
        let d = Dataset::from_json_str(&fixture_json("")).unwrap();
        assert!(d.split(0.0, 1).is_err());
        assert!(d.split(1.0, 1).is_err());
    }

    #[test]
    fn save_load_identity() {
        let d = Dataset::from_json_str(&fixture_json("")).unwrap();
        let again = Dataset::from_json_str(&d.to_json()).unwrap();
        assert_eq!(d, again);
    }
}
