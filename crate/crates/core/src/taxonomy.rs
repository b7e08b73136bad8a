//! Fixed detection vocabulary and the AccessMeta label tree.
//!
//! The 22 inaccessibility classes are compiled in; ids, names and order are
//! part of the dataset and detection file formats and must never change.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Everyday-object family an inaccessibility class belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParentCategory {
    ButtonPanel,
    ElectricOutlet,
    Faucet,
    Handle,
    Knob,
    Switch,
}

impl ParentCategory {
    pub const ALL: [ParentCategory; 6] = [
        ParentCategory::ButtonPanel,
        ParentCategory::ElectricOutlet,
        ParentCategory::Faucet,
        ParentCategory::Handle,
        ParentCategory::Knob,
        ParentCategory::Switch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParentCategory::ButtonPanel => "button_panel",
            ParentCategory::ElectricOutlet => "electric_outlet",
            ParentCategory::Faucet => "faucet",
            ParentCategory::Handle => "handle",
            ParentCategory::Knob => "knob",
            ParentCategory::Switch => "switch",
        }
    }
}

impl fmt::Display for ParentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

struct ClassRow {
    name: &'static str,
    parent: Option<ParentCategory>,
}

const fn row(name: &'static str, parent: ParentCategory) -> ClassRow {
    ClassRow {
        name,
        parent: Some(parent),
    }
}

use ParentCategory as P;

// Row `i` holds class id `i + 1`.
const CLASSES: [ClassRow; 22] = [
    row("button_panel_push_buttons", P::ButtonPanel),
    row("button_panel_turn_handle", P::ButtonPanel),
    row("electric_outlet", P::ElectricOutlet),
    row("faucet_faucet_only", P::Faucet),
    row("faucet_handle_lever", P::Faucet),
    row("faucet_pull_tiny_knob", P::Faucet),
    row("faucet_rotate_cross", P::Faucet),
    row("faucet_rotate_knob", P::Faucet),
    row("handle_bar_large", P::Handle),
    row("handle_bar_small", P::Handle),
    row("handle_cup_handle", P::Handle),
    row("handle_drop_pull", P::Handle),
    row("handle_flush_pull", P::Handle),
    row("handle_lever", P::Handle),
    row("handle_pull", P::Handle),
    row("knob_rotate_round", P::Knob),
    row("knob_static", P::Knob),
    row("switch_rocker_multi", P::Switch),
    row("switch_rocker_single", P::Switch),
    row("switch_toggle_multi", P::Switch),
    row("switch_toggle_single", P::Switch),
    ClassRow {
        name: "unidentifiable",
        parent: None,
    },
];

/// One of the 21 inaccessibility classes, or `unidentifiable` (id 22).
///
/// Serialized as its integer id, the COCO `category_id` convention.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InaccessibilityClass(u8);

impl InaccessibilityClass {
    pub const COUNT: usize = CLASSES.len();
    pub const UNIDENTIFIABLE: InaccessibilityClass = InaccessibilityClass(22);

    pub fn from_id(id: u32) -> Result<Self> {
        if (1..=Self::COUNT as u32).contains(&id) {
            Ok(Self(id as u8))
        } else {
            Err(Error::UnknownClassId(id))
        }
    }

    /// All 22 classes in id order.
    pub fn all() -> impl ExactSizeIterator<Item = Self> + Clone {
        (1..=Self::COUNT as u8).map(Self)
    }

    /// Classes 1..=21, the ones that take part in evaluation.
    pub fn evaluable() -> impl Iterator<Item = Self> + Clone {
        Self::all().filter(|c| c.is_evaluable())
    }

    pub fn id(self) -> u32 {
        self.0 as u32
    }

    pub fn name(self) -> &'static str {
        CLASSES[self.0 as usize - 1].name
    }

    /// `None` only for `unidentifiable`, whose object family is unknown.
    pub fn parent_category(self) -> Option<ParentCategory> {
        CLASSES[self.0 as usize - 1].parent
    }

    pub fn is_evaluable(self) -> bool {
        self != Self::UNIDENTIFIABLE
    }
}

impl fmt::Debug for InaccessibilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IC({} {})", self.0, self.name())
    }
}

impl fmt::Display for InaccessibilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InaccessibilityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_ic(s)
    }
}

impl Serialize for InaccessibilityClass {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u32(self.id())
    }
}

impl<'de> Deserialize<'de> for InaccessibilityClass {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let id = u32::deserialize(deserializer)?;
        Self::from_id(id).map_err(serde::de::Error::custom)
    }
}

/// Resolve a class name, ignoring ASCII case. No fuzzy matching.
pub fn parse_ic(token: &str) -> Result<InaccessibilityClass> {
    let token = token.trim();
    InaccessibilityClass::all()
        .find(|c| c.name().eq_ignore_ascii_case(token))
        .ok_or_else(|| Error::UnknownClass(token.to_string()))
}

/// Row of the taxonomy export.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassRecord {
    pub id: u32,
    pub name: String,
    pub parent_category: Option<ParentCategory>,
    pub evaluable: bool,
}

impl From<InaccessibilityClass> for ClassRecord {
    fn from(c: InaccessibilityClass) -> Self {
        Self {
            id: c.id(),
            name: c.name().to_string(),
            parent_category: c.parent_category(),
            evaluable: c.is_evaluable(),
        }
    }
}

/// The full class table in id order.
pub fn export_taxonomy() -> Vec<ClassRecord> {
    InaccessibilityClass::all().map(ClassRecord::from).collect()
}

/// High-level AccessMeta category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Actuation,
    Constraint,
    Indication,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Actuation, Category::Constraint, Category::Indication];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Actuation => "actuation",
            Category::Constraint => "constraint",
            Category::Indication => "indication",
        }
    }

    /// Common keywords for augmentations of this category.
    pub fn keywords(self) -> &'static [&'static str] {
        match self {
            Category::Actuation => &[
                "lever extension",
                "hand extension",
                "grip",
                "mount",
                "opener",
                "holder",
                "gripper",
                "string extension",
            ],
            Category::Constraint => &["cover", "guard", "protector", "lock"],
            Category::Indication => &["label", "identifier", "tag"],
        }
    }

    pub fn subcategories(self) -> &'static [Subcategory] {
        match self {
            Category::Actuation => &[Subcategory::Operation, Subcategory::Reach],
            Category::Constraint => &[Subcategory::LimitAccess],
            Category::Indication => &[Subcategory::Visual, Subcategory::Tactile],
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Category::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::UnknownCategory(t.to_string()))
    }
}

/// Assistive function within a category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcategory {
    Operation,
    Reach,
    LimitAccess,
    Visual,
    Tactile,
}

impl Subcategory {
    pub fn as_str(self) -> &'static str {
        match self {
            Subcategory::Operation => "operation",
            Subcategory::Reach => "reach",
            Subcategory::LimitAccess => "limit_access",
            Subcategory::Visual => "visual",
            Subcategory::Tactile => "tactile",
        }
    }

    pub fn category(self) -> Category {
        match self {
            Subcategory::Operation | Subcategory::Reach => Category::Actuation,
            Subcategory::LimitAccess => Category::Constraint,
            Subcategory::Visual | Subcategory::Tactile => Category::Indication,
        }
    }
}

/// An AccessMeta label: a category, optionally narrowed to a subcategory.
///
/// Text form is `actuation-operation`, `actuation-reach`, `constraint`,
/// `indication-visual`, `indication-tactile`, or a bare category name when
/// the subcategory is unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AccessMetaLabel {
    category: Category,
    subcategory: Option<Subcategory>,
}

impl AccessMetaLabel {
    pub const ACTUATION_OPERATION: Self = Self::of(Subcategory::Operation);
    pub const ACTUATION_REACH: Self = Self::of(Subcategory::Reach);
    pub const CONSTRAINT: Self = Self::of(Subcategory::LimitAccess);
    pub const INDICATION_VISUAL: Self = Self::of(Subcategory::Visual);
    pub const INDICATION_TACTILE: Self = Self::of(Subcategory::Tactile);

    /// The five canonical subcategory labels.
    pub const CANONICAL: [Self; 5] = [
        Self::ACTUATION_OPERATION,
        Self::ACTUATION_REACH,
        Self::CONSTRAINT,
        Self::INDICATION_VISUAL,
        Self::INDICATION_TACTILE,
    ];

    pub const fn of(sub: Subcategory) -> Self {
        let category = match sub {
            Subcategory::Operation | Subcategory::Reach => Category::Actuation,
            Subcategory::LimitAccess => Category::Constraint,
            Subcategory::Visual | Subcategory::Tactile => Category::Indication,
        };
        Self {
            category,
            subcategory: Some(sub),
        }
    }

    pub const fn category_only(category: Category) -> Self {
        Self {
            category,
            subcategory: None,
        }
    }

    /// Fails unless `sub` belongs to `category`.
    pub fn new(category: Category, subcategory: Option<Subcategory>) -> Result<Self> {
        match subcategory {
            Some(s) if s.category() != category => Err(Error::UnknownLabel(format!(
                "{}-{}",
                category.as_str(),
                s.as_str()
            ))),
            _ => Ok(Self {
                category,
                subcategory,
            }),
        }
    }

    pub fn category(self) -> Category {
        self.category
    }

    pub fn subcategory(self) -> Option<Subcategory> {
        self.subcategory
    }

    pub fn keywords(self) -> &'static [&'static str] {
        self.category.keywords()
    }

    pub fn token(self) -> String {
        match (self.category, self.subcategory) {
            (Category::Constraint, _) | (_, None) => self.category.as_str().to_string(),
            (c, Some(s)) => format!("{}-{}", c.as_str(), s.as_str()),
        }
    }
}

/// Project a label onto its high-level category.
pub fn high_level_category(label: AccessMetaLabel) -> Category {
    label.category()
}

impl fmt::Display for AccessMetaLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

impl FromStr for AccessMetaLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        let (cat, sub) = match t.split_once(['-', '/']) {
            Some((c, s)) => (c, Some(s)),
            None => (t.as_str(), None),
        };
        let category: Category = cat.parse().map_err(|_| Error::UnknownLabel(s.to_string()))?;
        let subcategory = match sub {
            None if category == Category::Constraint => Some(Subcategory::LimitAccess),
            None => None,
            Some(sub) => Some(
                category
                    .subcategories()
                    .iter()
                    .copied()
                    .find(|x| x.as_str() == sub || x.as_str().replace('_', " ") == sub)
                    .ok_or_else(|| Error::UnknownLabel(s.to_string()))?,
            ),
        };
        Self::new(category, subcategory)
    }
}

impl Serialize for AccessMetaLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.token())
    }
}

impl<'de> Deserialize<'de> for AccessMetaLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// An everyday object that dictionary designs target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectClass {
    pub name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
}

impl ObjectClass {
    pub fn matches(&self, token: &str) -> bool {
        let t = token.trim();
        self.name.eq_ignore_ascii_case(t) || self.aliases.iter().any(|a| a.eq_ignore_ascii_case(t))
    }
}
