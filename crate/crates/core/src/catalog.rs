//! Augmentation dictionary and the keyword classifier that assigns
//! AccessMeta labels from design metadata.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Issue, Result};
use crate::taxonomy::{AccessMetaLabel, Category, ObjectClass, Subcategory};

/// The dictionary shipped with the crate.
pub const BUNDLED_DICTIONARY: &str = include_str!("../data/dictionary.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationDesign {
    pub design_id: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub tags: Vec<String>,
    #[serde(default)]
    pub target_objects: Vec<String>,
    #[serde(default)]
    pub labels: Vec<AccessMetaLabel>,
    #[serde(default)]
    pub source_url: String,
}

impl AugmentationDesign {
    pub fn categories(&self) -> BTreeSet<Category> {
        self.labels.iter().map(|l| l.category()).collect()
    }

    pub fn has_category(&self, c: Category) -> bool {
        self.labels.iter().any(|l| l.category() == c)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct DictionaryFile {
    version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objects: Option<Vec<ObjectClass>>,
    designs: Vec<AugmentationDesign>,
}

/// Immutable, indexed dictionary snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    version: String,
    objects: Vec<ObjectClass>,
    /// Sorted by `design_id`.
    designs: Vec<AugmentationDesign>,
    /// object name -> indices into `designs`, ascending.
    object_index: BTreeMap<String, Vec<usize>>,
}

impl Dictionary {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// Parse a dictionary document `{version, objects?, designs}`.
    ///
    /// When `objects` is omitted the object list is the set of all target
    /// objects. Target objects given by alias are normalised to the
    /// canonical object name.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: DictionaryFile = serde_json::from_str(text).map_err(|e| Error::parse("dictionary", e))?;
        Self::build(file.version, file.objects, file.designs)
    }

    pub fn new(version: impl Into<String>, objects: Option<Vec<ObjectClass>>, designs: Vec<AugmentationDesign>) -> Result<Self> {
        Self::build(version.into(), objects, designs)
    }

    fn build(version: String, objects: Option<Vec<ObjectClass>>, mut designs: Vec<AugmentationDesign>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for d in &designs {
            if !ids.insert(d.design_id.as_str()) {
                return Err(Error::DuplicateDesignId(d.design_id.clone()));
            }
        }

        let mut issues = Vec::new();
        let objects = match objects {
            Some(list) => {
                let mut names = BTreeSet::new();
                for o in &list {
                    if !names.insert(o.name.to_ascii_lowercase()) {
                        issues.push(Issue::new(format!("object {}", o.name), "duplicate object class"));
                    }
                }
                list
            }
            None => designs
                .iter()
                .flat_map(|d| d.target_objects.iter())
                .map(|t| t.trim().to_ascii_lowercase())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .map(|name| ObjectClass {
                    name,
                    aliases: vec![],
                })
                .collect(),
        };

        for d in &mut designs {
            let loc = format!("design {}", d.design_id);
            for t in &mut d.target_objects {
                match objects.iter().find(|o| o.matches(t)) {
                    Some(o) => *t = o.name.clone(),
                    None => issues.push(Issue::new(&loc, format!("unknown target object `{t}`"))),
                }
            }
            for l in &d.labels {
                if l.subcategory().is_none() {
                    issues.push(Issue::new(
                        &loc,
                        format!("label `{l}` is not one of the five subcategories"),
                    ));
                }
            }
            d.labels.sort();
            d.labels.dedup();
            d.target_objects.sort();
            d.target_objects.dedup();
        }
        if !issues.is_empty() {
            return Err(Error::Validation(issues));
        }

        designs.sort_by(|a, b| a.design_id.cmp(&b.design_id));
        let mut object_index: BTreeMap<String, Vec<usize>> =
            objects.iter().map(|o| (o.name.clone(), Vec::new())).collect();
        for (i, d) in designs.iter().enumerate() {
            for t in &d.target_objects {
                object_index.get_mut(t).expect("normalised above").push(i);
            }
        }
        Ok(Self {
            version,
            objects,
            designs,
            object_index,
        })
    }

    pub fn bundled() -> Self {
        Self::from_json_str(BUNDLED_DICTIONARY).expect("bundled dictionary is valid")
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn objects(&self) -> &[ObjectClass] {
        &self.objects
    }

    pub fn designs(&self) -> &[AugmentationDesign] {
        &self.designs
    }

    pub fn design(&self, design_id: &str) -> Option<&AugmentationDesign> {
        self.designs
            .binary_search_by(|d| d.design_id.as_str().cmp(design_id))
            .ok()
            .map(|i| &self.designs[i])
    }

    /// Canonical object class for a name or alias.
    pub fn object(&self, token: &str) -> Result<&ObjectClass> {
        self.objects
            .iter()
            .find(|o| o.matches(token))
            .ok_or_else(|| Error::UnknownObjectClass(token.trim().to_string()))
    }

    /// Designs targeting an object, narrowed to one category if given.
    /// Results are ordered by `design_id`.
    pub fn query(&self, object: &str, category: Option<Category>) -> Result<Vec<&AugmentationDesign>> {
        let obj = self.object(object)?;
        Ok(self.object_index[&obj.name]
            .iter()
            .map(|&i| &self.designs[i])
            .filter(|d| category.is_none_or(|c| d.has_category(c)))
            .collect())
    }

    pub fn to_json(&self) -> String {
        let file = DictionaryFile {
            version: self.version.clone(),
            objects: Some(self.objects.clone()),
            designs: self.designs.clone(),
        };
        serde_json::to_string_pretty(&file).expect("dictionary serialize")
    }

    /// Structural summary plus soft warnings, for `dict validate`.
    pub fn report(&self) -> DictionaryReport {
        let mut warnings = Vec::new();
        for d in &self.designs {
            if d.target_objects.is_empty() {
                warnings.push(Issue::new(format!("design {}", d.design_id), "no target objects; never recommended"));
            }
            if d.labels.is_empty() {
                warnings.push(Issue::new(format!("design {}", d.design_id), "no AccessMeta labels"));
            }
        }
        for (obj, ids) in &self.object_index {
            if ids.is_empty() {
                warnings.push(Issue::new(format!("object {obj}"), "no designs"));
            }
        }
        let mut per_category = BTreeMap::new();
        for c in Category::ALL {
            per_category.insert(c, self.designs.iter().filter(|d| d.has_category(c)).count());
        }
        DictionaryReport {
            version: self.version.clone(),
            designs: self.designs.len(),
            objects: self.objects.len(),
            objects_with_designs: self.object_index.values().filter(|v| !v.is_empty()).count(),
            designs_per_category: per_category,
            classifier_agreement: classifier_agreement(self),
            warnings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DictionaryReport {
    pub version: String,
    pub designs: usize,
    pub objects: usize,
    pub objects_with_designs: usize,
    pub designs_per_category: BTreeMap<Category, usize>,
    pub classifier_agreement: Agreement,
    pub warnings: Vec<Issue>,
}

/// A label the classifier assigned, with the keywords that fired it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifiedLabel {
    pub label: AccessMetaLabel,
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Classification {
    /// Sorted by label; empty means unclassified.
    pub labels: Vec<ClassifiedLabel>,
}

impl Classification {
    pub fn categories(&self) -> BTreeSet<Category> {
        self.labels.iter().map(|l| l.label.category()).collect()
    }

    pub fn is_unclassified(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Keyword rules, longest phrase first so that `lever extension` consumes
/// its tokens before the bare `extension` rule sees them.
const RULES: &[(&[&str], Subcategory)] = &[
    (&["lever", "extension"], Subcategory::Operation),
    (&["hand", "extension"], Subcategory::Operation),
    (&["string", "extension"], Subcategory::Operation),
    (&["opener"], Subcategory::Operation),
    (&["extension"], Subcategory::Reach),
    (&["grip"], Subcategory::Reach),
    (&["gripper"], Subcategory::Reach),
    (&["holder"], Subcategory::Reach),
    (&["mount"], Subcategory::Reach),
    (&["reach"], Subcategory::Reach),
    (&["cover"], Subcategory::LimitAccess),
    (&["guard"], Subcategory::LimitAccess),
    (&["protector"], Subcategory::LimitAccess),
    (&["lock"], Subcategory::LimitAccess),
    (&["label"], Subcategory::Visual),
    (&["identifier"], Subcategory::Visual),
    (&["tag"], Subcategory::Visual),
];

/// Cues that turn an indication match into `indication-tactile`.
const TACTILE_CUES: &[&str] = &["tactile", "braille", "raised", "embossed"];

fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// Whole-word match allowing the regular plural forms.
fn word_matches(token: &str, keyword: &str) -> bool {
    token == keyword
        || token
            .strip_prefix(keyword)
            .is_some_and(|rest| rest == "s" || rest == "es")
}

/// Assign AccessMeta labels from free text by keyword rules.
///
/// Matching is case-insensitive and whole-word (so `clock` never fires
/// `lock`); a design may receive labels from several categories.
pub fn classify_design(title: &str, description: &str, tags: &[String]) -> Classification {
    let mut fields: Vec<Vec<String>> = vec![tokenize(title), tokenize(description)];
    fields.extend(tags.iter().map(|t| tokenize(t)));

    let mut fired: BTreeMap<Subcategory, BTreeSet<String>> = BTreeMap::new();
    let mut tactile_cues = BTreeSet::new();
    for tokens in &fields {
        let mut used = vec![false; tokens.len()];
        for (phrase, sub) in RULES {
            let n = phrase.len();
            if n > tokens.len() {
                continue;
            }
            for start in 0..=tokens.len() - n {
                let span = start..start + n;
                if used[span.clone()].iter().any(|u| *u) {
                    continue;
                }
                if tokens[span.clone()].iter().zip(phrase.iter()).all(|(t, k)| word_matches(t, k)) {
                    used[span].iter_mut().for_each(|u| *u = true);
                    fired.entry(*sub).or_default().insert(phrase.join(" "));
                }
            }
        }
        for t in tokens {
            if TACTILE_CUES.contains(&t.as_str()) {
                tactile_cues.insert(t.clone());
            }
        }
    }

    if !tactile_cues.is_empty() {
        if let Some(words) = fired.remove(&Subcategory::Visual) {
            let tactile = fired.entry(Subcategory::Tactile).or_default();
            tactile.extend(words);
            tactile.extend(tactile_cues);
        }
    }

    Classification {
        labels: fired
            .into_iter()
            .map(|(sub, words)| ClassifiedLabel {
                label: AccessMetaLabel::of(sub),
                evidence: words.into_iter().collect(),
            })
            .collect(),
    }
}

/// How often the classifier reproduces stored labels at category level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Agreement {
    pub designs: usize,
    pub agreeing: usize,
    pub ratio: f64,
}

/// Classify each design from its title and tags and compare the set of
/// high-level categories with the stored one; a design agrees when the
/// two sets are equal.
pub fn classifier_agreement(dict: &Dictionary) -> Agreement {
    let agreeing = dict
        .designs()
        .iter()
        .filter(|d| classify_design(&d.title, "", &d.tags).categories() == d.categories())
        .count();
    let n = dict.designs().len();
    Agreement {
        designs: n,
        agreeing,
        ratio: if n == 0 { 0.0 } else { agreeing as f64 / n as f64 },
    }
}
