//! Turn detections into augmentation suggestions grouped by AccessMeta
//! category.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{AugmentationDesign, Dictionary};
use crate::detector::Detection;
use crate::error::{Error, Issue, Result};
use crate::taxonomy::{parse_ic, Category, InaccessibilityClass, ParentCategory};

/// Which dictionary objects each inaccessibility class is queried under.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IcObjectMapping {
    map: BTreeMap<InaccessibilityClass, Vec<String>>,
}

impl Default for IcObjectMapping {
    fn default() -> Self {
        let map = InaccessibilityClass::evaluable()
            .map(|ic| {
                let objects: &[&str] = match ic.parent_category().expect("evaluable") {
                    ParentCategory::Switch => &["switch"],
                    ParentCategory::ElectricOutlet => &["outlet"],
                    ParentCategory::Handle => &["handle", "door"],
                    ParentCategory::Faucet => &["faucet"],
                    ParentCategory::Knob => &["knob"],
                    ParentCategory::ButtonPanel => &["button_panel", "stove"],
                };
                (ic, objects.iter().map(|s| s.to_string()).collect())
            })
            .collect();
        Self { map }
    }
}

impl IcObjectMapping {
    /// Build from `(class name, objects)` pairs. Every evaluable class needs
    /// at least one object and `unidentifiable` must map to none.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<String>)>,
        S: AsRef<str>,
    {
        let mut map = BTreeMap::new();
        let mut issues = Vec::new();
        for (name, objects) in pairs {
            let ic = parse_ic(name.as_ref())?;
            let objects: Vec<String> = objects.into_iter().map(|o| o.trim().to_ascii_lowercase()).collect();
            if !ic.is_evaluable() && !objects.is_empty() {
                issues.push(Issue::new(ic.name(), "unidentifiable must not map to objects"));
            }
            map.insert(ic, objects);
        }
        for ic in InaccessibilityClass::evaluable() {
            if map.get(&ic).is_none_or(|v| v.is_empty()) {
                issues.push(Issue::new(ic.name(), "no target object"));
            }
        }
        map.remove(&InaccessibilityClass::UNIDENTIFIABLE);
        if issues.is_empty() {
            Ok(Self { map })
        } else {
            Err(Error::Validation(issues))
        }
    }

    /// Mapping file: `{"<class name>": ["object", ...], ...}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_str(text).map_err(|e| Error::parse("mapping", e))?;
        Self::from_pairs(raw)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        let raw: BTreeMap<&str, &Vec<String>> = self.map.iter().map(|(k, v)| (k.name(), v)).collect();
        serde_json::to_string_pretty(&raw).expect("mapping serialize")
    }

    pub fn objects_for(&self, ic: InaccessibilityClass) -> Option<&[String]> {
        self.map.get(&ic).map(Vec::as_slice)
    }

    /// Every mapped object must exist in the dictionary.
    pub fn check_against(&self, dict: &Dictionary) -> Result<()> {
        let issues: Vec<Issue> = self
            .map
            .iter()
            .flat_map(|(ic, objs)| objs.iter().map(move |o| (ic, o)))
            .filter(|(_, o)| dict.object(o).is_err())
            .map(|(ic, o)| Issue::new(ic.name(), format!("unknown object class `{o}`")))
            .collect();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(issues))
        }
    }
}

/// Suggestions in the order they are presented: actuation, indication,
/// constraint.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroupedDesigns {
    pub actuation: Vec<AugmentationDesign>,
    pub indication: Vec<AugmentationDesign>,
    pub constraint: Vec<AugmentationDesign>,
}

impl GroupedDesigns {
    pub fn group(&self, c: Category) -> &[AugmentationDesign] {
        match c {
            Category::Actuation => &self.actuation,
            Category::Indication => &self.indication,
            Category::Constraint => &self.constraint,
        }
    }

    fn group_mut(&mut self, c: Category) -> &mut Vec<AugmentationDesign> {
        match c {
            Category::Actuation => &mut self.actuation,
            Category::Indication => &mut self.indication,
            Category::Constraint => &mut self.constraint,
        }
    }

    pub fn is_empty(&self) -> bool {
        Category::ALL.iter().all(|c| self.group(*c).is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub detection: Detection,
    pub grouped: GroupedDesigns,
}

/// Suggestions for every object class the detection's class maps to,
/// deduplicated by design id, each group ordered by design id.
pub fn suggestions_for_class(
    ic: InaccessibilityClass,
    dict: &Dictionary,
    mapping: &IcObjectMapping,
) -> Result<GroupedDesigns> {
    let objects = mapping
        .objects_for(ic)
        .filter(|o| !o.is_empty())
        .ok_or_else(|| Error::UnmappedClass(ic.name().to_string()))?;
    let mut seen = BTreeSet::new();
    let mut designs: Vec<&AugmentationDesign> = Vec::new();
    for o in objects {
        for d in dict.query(o, None)? {
            if seen.insert(d.design_id.as_str()) {
                designs.push(d);
            }
        }
    }
    designs.sort_by(|a, b| a.design_id.cmp(&b.design_id));
    let mut grouped = GroupedDesigns::default();
    for d in designs {
        for c in d.categories() {
            grouped.group_mut(c).push(d.clone());
        }
    }
    Ok(grouped)
}

/// Suggestions for one detection. Only its class matters.
pub fn recommend(detection: &Detection, dict: &Dictionary, mapping: &IcObjectMapping) -> Result<Recommendation> {
    Ok(Recommendation {
        detection: detection.clone(),
        grouped: suggestions_for_class(detection.ic, dict, mapping)?,
    })
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SceneRecommendations {
    pub recommendations: Vec<Recommendation>,
    pub skipped_unidentifiable: usize,
}

/// One recommendation per evaluable detection, input order kept;
/// `unidentifiable` detections are counted and skipped.
///
/// Fails only when the mapping names objects the dictionary lacks.
pub fn recommend_scene(
    detections: &[Detection],
    dict: &Dictionary,
    mapping: &IcObjectMapping,
) -> Result<SceneRecommendations> {
    let mut out = SceneRecommendations::default();
    let mut cache: BTreeMap<InaccessibilityClass, GroupedDesigns> = BTreeMap::new();
    for d in detections {
        if !d.ic.is_evaluable() {
            out.skipped_unidentifiable += 1;
            continue;
        }
        let grouped = match cache.get(&d.ic) {
            Some(g) => g.clone(),
            None => {
                let g = suggestions_for_class(d.ic, dict, mapping)?;
                cache.insert(d.ic, g.clone());
                g
            }
        };
        out.recommendations.push(Recommendation {
            detection: d.clone(),
            grouped,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::AugmentationDesign;
    use crate::geometry::BBox;
    use crate::taxonomy::{AccessMetaLabel, ObjectClass};

    fn design(id: &str, title: &str, objects: &[&str], labels: &[AccessMetaLabel]) -> AugmentationDesign {
        AugmentationDesign {
            design_id: id.into(),
            title: title.into(),
            description: String::new(),
            tags: vec![],
            target_objects: objects.iter().map(|s| s.to_string()).collect(),
            labels: labels.to_vec(),
            source_url: format!("https://example.org/{id}"),
        }
    }

    fn dict() -> Dictionary {
        let objects = ["switch", "outlet", "handle", "door", "faucet", "knob", "button_panel", "stove"]
            .iter()
            .map(|n| ObjectClass {
                name: n.to_string(),
                aliases: vec![],
            })
            .collect();
        Dictionary::new(
            "t",
            Some(objects),
            vec![
                design("s3", "Light switch protective cover", &["switch"], &[AccessMetaLabel::CONSTRAINT]),
                design("s1", "Light switch extension", &["switch"], &[AccessMetaLabel::ACTUATION_REACH]),
                design("s2", "Light switch plate identifier", &["switch"], &[AccessMetaLabel::INDICATION_TACTILE]),
                design("d1", "Door lever extension", &["door", "handle"], &[AccessMetaLabel::ACTUATION_OPERATION]),
                design(
                    "h1",
                    "Handle cover with label",
                    &["handle"],
                    &[AccessMetaLabel::CONSTRAINT, AccessMetaLabel::INDICATION_VISUAL],
                ),
            ],
        )
        .unwrap()
    }

    fn det(name: &str) -> Detection {
        Detection::new(1, parse_ic(name).unwrap(), BBox::new(0.0, 0.0, 5.0, 5.0), 0.9)
    }

    fn ids(v: &[AugmentationDesign]) -> Vec<&str> {
        v.iter().map(|d| d.design_id.as_str()).collect()
    }

    #[test]
    fn switch_gets_three_groups() {
        let r = recommend(&det("switch_toggle_multi"), &dict(), &IcObjectMapping::default()).unwrap();
        assert_eq!(ids(&r.grouped.actuation), ["s1"]);
        assert_eq!(ids(&r.grouped.indication), ["s2"]);
        assert_eq!(ids(&r.grouped.constraint), ["s3"]);
    }

    #[test]
    fn handle_dedups_across_objects() {
        let r = recommend(&det("handle_lever"), &dict(), &IcObjectMapping::default()).unwrap();
        assert_eq!(ids(&r.grouped.actuation), ["d1"]);
        assert_eq!(ids(&r.grouped.constraint), ["h1"]);
        assert_eq!(ids(&r.grouped.indication), ["h1"]);
    }

    #[test]
    fn unidentifiable_is_unmapped() {
        let err = recommend(&det("unidentifiable"), &dict(), &IcObjectMapping::default()).unwrap_err();
        assert!(matches!(err, Error::UnmappedClass(_)));
    }

    #[test]
    fn objects_without_designs_give_empty_groups() {
        let r = recommend(&det("faucet_rotate_knob"), &dict(), &IcObjectMapping::default()).unwrap();
        assert!(r.grouped.is_empty());
    }

    #[test]
    fn scene_skips_unidentifiable() {
        let dets = [det("switch_toggle_multi"), det("unidentifiable"), det("knob_static")];
        let s = recommend_scene(&dets, &dict(), &IcObjectMapping::default()).unwrap();
        assert_eq!(s.recommendations.len(), 2);
        assert_eq!(s.skipped_unidentifiable, 1);
        assert_eq!(s.recommendations[1].detection.ic.name(), "knob_static");

        let empty = recommend_scene(&[], &dict(), &IcObjectMapping::default()).unwrap();
        assert!(empty.recommendations.is_empty());
    }

    #[test]
    fn mapping_validation() {
        let m = IcObjectMapping::default();
        m.check_against(&dict()).unwrap();
        assert_eq!(IcObjectMapping::from_json_str(&m.to_json()).unwrap(), m);

        let err = IcObjectMapping::from_json_str(r#"{"knob_static": ["knob"]}"#).unwrap_err();
        let Error::Validation(issues) = err else { panic!() };
        assert_eq!(issues.len(), 20);

        let mut pairs: Vec<(String, Vec<String>)> = InaccessibilityClass::evaluable()
            .map(|c| (c.name().to_string(), vec!["knob".to_string()]))
            .collect();
        pairs.push(("unidentifiable".into(), vec!["knob".into()]));
        assert!(IcObjectMapping::from_pairs(pairs).is_err());
    }
}
