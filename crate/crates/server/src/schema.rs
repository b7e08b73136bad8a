//! JSON Schemas for every response body the service emits.

pub const SCAN_RESULT: &str = include_str!("../schemas/scan_result.json");
pub const TAXONOMY: &str = include_str!("../schemas/taxonomy.json");
pub const DICTIONARY: &str = include_str!("../schemas/dictionary.json");
pub const DESIGNS: &str = include_str!("../schemas/designs.json");
pub const HEALTH: &str = include_str!("../schemas/health.json");
pub const ERROR: &str = include_str!("../schemas/error.json");

pub const ALL: [(&str, &str); 6] = [
    ("scan_result", SCAN_RESULT),
    ("taxonomy", TAXONOMY),
    ("dictionary", DICTIONARY),
    ("designs", DESIGNS),
    ("health", HEALTH),
    ("error", ERROR),
];

pub fn get(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}
