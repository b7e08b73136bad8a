//! Quality control for crowdsourced AccessMeta labels.
//!
//! A worker's batch is checked against four rejection rules, in order:
//!
//! 1. `identical_incorrect`: every answer is the same and wrong (needs at
//!    least two answers); the whole batch is rejected.
//! 2. `junk_custom_label`: `others` was chosen with an empty custom label,
//!    a copy of the design title/description, or a stop phrase.
//! 3. `fast_incorrect`: every answer is wrong and every one took less than
//!    the time threshold; the whole batch is rejected.
//! 4. `over_quota`: submissions beyond the per-worker HIT quota.
//!
//! An answer is correct when any chosen label falls under a high-level
//! category of the design's ground truth. An `others` answer with a
//! reasonable custom label is acceptable but not correct; it does not count
//! as wrong for rules 1 and 3.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::catalog::Dictionary;
use crate::error::{Error, Issue, Result};
use crate::taxonomy::{AccessMetaLabel, Category};

/// One option ticked in a HIT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Choice {
    Label(AccessMetaLabel),
    Others,
}

impl FromStr for Choice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("others") {
            Ok(Choice::Others)
        } else {
            s.parse().map(Choice::Label)
        }
    }
}

impl fmt::Display for Choice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Choice::Label(l) => l.fmt(f),
            Choice::Others => f.write_str("others"),
        }
    }
}

impl Serialize for Choice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Choice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitSubmission {
    pub worker_id: String,
    pub design_id: String,
    pub chosen_labels: BTreeSet<Choice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_label: Option<String>,
    pub duration_seconds: f64,
    /// 1-based position of this HIT among the worker's submissions, by
    /// submission time.
    pub submit_index: u32,
}

impl HitSubmission {
    fn chose_others(&self) -> bool {
        self.chosen_labels.contains(&Choice::Others)
    }

    /// High-level categories among the chosen labels.
    pub fn categories(&self) -> BTreeSet<Category> {
        self.chosen_labels
            .iter()
            .filter_map(|c| match c {
                Choice::Label(l) => Some(l.category()),
                Choice::Others => None,
            })
            .collect()
    }

    fn check(&self) -> std::result::Result<(), String> {
        if self.chosen_labels.is_empty() {
            return Err("no label chosen".into());
        }
        if self.chose_others() != self.custom_label.is_some() {
            return Err("custom_label must be present exactly when `others` is chosen".into());
        }
        if !(self.duration_seconds >= 0.0 && self.duration_seconds.is_finite()) {
            return Err(format!("invalid duration {}", self.duration_seconds));
        }
        Ok(())
    }
}

/// What a submission is checked against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignTruth {
    pub labels: Vec<AccessMetaLabel>,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub description: String,
}

impl DesignTruth {
    fn categories(&self) -> BTreeSet<Category> {
        self.labels.iter().map(|l| l.category()).collect()
    }
}

/// Ground truth for every design in a dictionary.
pub fn truth_from_dictionary(dict: &Dictionary) -> HashMap<String, DesignTruth> {
    dict.designs()
        .iter()
        .map(|d| {
            (
                d.design_id.clone(),
                DesignTruth {
                    labels: d.labels.clone(),
                    title: d.title.clone(),
                    description: d.description.clone(),
                },
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QaConfig {
    /// Answers faster than this count towards rule 3.
    pub fast_seconds: f64,
    pub hit_quota: u32,
    /// Custom labels that are always junk (case-insensitive, trimmed).
    pub stop_phrases: Vec<String>,
}

impl Default for QaConfig {
    fn default() -> Self {
        Self {
            fast_seconds: 40.0,
            hit_quota: 100,
            stop_phrases: vec!["good design".into(), "we and our 814 partners".into()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    Ok,
    IdenticalIncorrect,
    JunkCustomLabel,
    FastIncorrect,
    OverQuota,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaVerdict {
    pub worker_id: String,
    pub design_id: String,
    pub submit_index: u32,
    pub status: Status,
    pub rule: Rule,
    /// Meaningful for accepted verdicts only.
    pub correct_at_high_level: bool,
    /// Chosen labels span more than one high-level category.
    pub cross_category: bool,
}

fn normalize(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Empty, a copy of the title or description, or a stop phrase.
pub fn is_junk_custom_label(label: &str, truth: &DesignTruth, config: &QaConfig) -> bool {
    let l = normalize(label);
    l.is_empty()
        || (!truth.title.trim().is_empty() && l == normalize(&truth.title))
        || (!truth.description.trim().is_empty() && l == normalize(&truth.description))
        || config.stop_phrases.iter().any(|p| normalize(p) == l)
}

struct Assessed<'a> {
    sub: &'a HitSubmission,
    correct: bool,
    junk: bool,
    wrong: bool,
}

/// Apply the four rules to one worker's submissions. Verdicts come back in
/// input order.
pub fn validate_worker_batch(
    submissions: &[HitSubmission],
    truth: &HashMap<String, DesignTruth>,
    config: &QaConfig,
) -> Result<Vec<QaVerdict>> {
    let Some(first) = submissions.first() else {
        return Ok(Vec::new());
    };
    let mut issues = Vec::new();
    for (i, s) in submissions.iter().enumerate() {
        if s.worker_id != first.worker_id {
            issues.push(Issue::new(format!("submission {i}"), "worker_id differs within batch"));
        }
        if let Err(m) = s.check() {
            issues.push(Issue::new(format!("submission {i}"), m));
        }
    }
    if !issues.is_empty() {
        return Err(Error::Validation(issues));
    }

    let mut assessed = Vec::with_capacity(submissions.len());
    for s in submissions {
        let t = truth
            .get(&s.design_id)
            .ok_or_else(|| Error::MissingGroundTruth(s.design_id.clone()))?;
        let gt = t.categories();
        let correct = s.categories().iter().any(|c| gt.contains(c));
        let junk = s.chose_others() && is_junk_custom_label(s.custom_label.as_deref().unwrap_or(""), t, config);
        let reasonable_other = s.chose_others() && !junk;
        assessed.push(Assessed {
            sub: s,
            correct,
            junk,
            wrong: !correct && !reasonable_other,
        });
    }

    let all_wrong = assessed.iter().all(|a| a.wrong);
    let identical = assessed.len() >= 2
        && assessed.iter().all(|a| {
            a.sub.chosen_labels == first.chosen_labels
                && a.sub.custom_label.as_deref().map(normalize) == first.custom_label.as_deref().map(normalize)
        });
    let r1 = all_wrong && identical;
    let r3 = all_wrong && assessed.iter().all(|a| a.sub.duration_seconds < config.fast_seconds);

    Ok(assessed
        .iter()
        .map(|a| {
            let rule = if r1 {
                Rule::IdenticalIncorrect
            } else if a.junk {
                Rule::JunkCustomLabel
            } else if r3 {
                Rule::FastIncorrect
            } else if a.sub.submit_index > config.hit_quota {
                Rule::OverQuota
            } else {
                Rule::Ok
            };
            QaVerdict {
                worker_id: a.sub.worker_id.clone(),
                design_id: a.sub.design_id.clone(),
                submit_index: a.sub.submit_index,
                status: if rule == Rule::Ok { Status::Accepted } else { Status::Rejected },
                rule,
                correct_at_high_level: a.correct,
                cross_category: a.sub.categories().len() > 1,
            }
        })
        .collect())
}

/// Validate a mixed corpus worker by worker. Verdicts come back in input
/// order.
pub fn validate_all(
    submissions: &[HitSubmission],
    truth: &HashMap<String, DesignTruth>,
    config: &QaConfig,
) -> Result<Vec<QaVerdict>> {
    let mut by_worker: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in submissions.iter().enumerate() {
        by_worker.entry(&s.worker_id).or_default().push(i);
    }
    let mut out: Vec<Option<QaVerdict>> = vec![None; submissions.len()];
    for idx in by_worker.values() {
        let batch: Vec<HitSubmission> = idx.iter().map(|&i| submissions[i].clone()).collect();
        for (v, &i) in validate_worker_batch(&batch, truth, config)?.into_iter().zip(idx) {
            out[i] = Some(v);
        }
    }
    Ok(out.into_iter().map(|v| v.expect("every index visited")).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub valid_count: usize,
    pub correct_count: usize,
    pub accuracy: f64,
}

impl AccuracySummary {
    /// Whole-percent rendering, e.g. `83%`.
    pub fn percent(&self) -> String {
        format!("{:.0}%", self.accuracy * 100.0)
    }
}

/// Share of accepted submissions that are correct at the category level.
pub fn score_accuracy(verdicts: &[QaVerdict]) -> Result<AccuracySummary> {
    let accepted = verdicts.iter().filter(|v| v.status == Status::Accepted);
    let (valid, correct) = accepted.fold((0, 0), |(n, c), v| (n + 1, c + v.correct_at_high_level as usize));
    if valid == 0 {
        return Err(Error::NoValidSubmissions);
    }
    Ok(AccuracySummary {
        valid_count: valid,
        correct_count: correct,
        accuracy: correct as f64 / valid as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome", content = "category")]
pub enum Consolidation {
    Label(Category),
    /// No category has a strict majority.
    Tie,
    /// Fewer than three accepted annotations.
    Insufficient,
}

impl Consolidation {
    pub fn needs_reannotation(&self) -> bool {
        !matches!(self, Consolidation::Label(_))
    }
}

/// Majority vote over one design's accepted annotations. Each vote is the
/// annotation's single high-level category, or `None` when it named none
/// or several.
pub fn consolidate(votes: &[Option<Category>]) -> Consolidation {
    if votes.len() < 3 {
        return Consolidation::Insufficient;
    }
    let mut counts: BTreeMap<Category, usize> = BTreeMap::new();
    for c in votes.iter().flatten() {
        *counts.entry(*c).or_default() += 1;
    }
    counts
        .into_iter()
        .find(|(_, n)| 2 * n > votes.len())
        .map_or(Consolidation::Tie, |(c, _)| Consolidation::Label(c))
}

/// Consolidate every design that has at least one submission.
pub fn consolidate_all(submissions: &[HitSubmission], verdicts: &[QaVerdict]) -> BTreeMap<String, Consolidation> {
    let mut votes: BTreeMap<String, Vec<Option<Category>>> = BTreeMap::new();
    for (s, v) in submissions.iter().zip(verdicts) {
        let entry = votes.entry(s.design_id.clone()).or_default();
        if v.status == Status::Accepted {
            let cats = s.categories();
            entry.push((cats.len() == 1).then(|| *cats.iter().next().unwrap()));
        }
    }
    votes.into_iter().map(|(id, v)| (id, consolidate(&v))).collect()
}

/// Everything the `qa` command reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaRun {
    pub verdicts: Vec<QaVerdict>,
    pub rejected_by_rule: BTreeMap<Rule, usize>,
    pub accuracy: Option<AccuracySummary>,
    pub consolidated: BTreeMap<String, Consolidation>,
}

pub fn run_qa(
    submissions: &[HitSubmission],
    truth: &HashMap<String, DesignTruth>,
    config: &QaConfig,
) -> Result<QaRun> {
    let verdicts = validate_all(submissions, truth, config)?;
    let mut rejected_by_rule = BTreeMap::new();
    for v in verdicts.iter().filter(|v| v.status == Status::Rejected) {
        *rejected_by_rule.entry(v.rule).or_default() += 1;
    }
    let accuracy = match score_accuracy(&verdicts) {
        Ok(a) => Some(a),
        Err(Error::NoValidSubmissions) => None,
        Err(e) => return Err(e),
    };
    let consolidated = consolidate_all(submissions, &verdicts);
    Ok(QaRun {
        verdicts,
        rejected_by_rule,
        accuracy,
        consolidated,
    })
}

pub fn parse_submissions(text: &str) -> Result<Vec<HitSubmission>> {
    serde_json::from_str(text).map_err(|e| Error::parse("submissions", e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truth() -> HashMap<String, DesignTruth> {
        let mut m = HashMap::new();
        for i in 0..130 {
            m.insert(
                format!("a{i}"),
                DesignTruth {
                    labels: vec![AccessMetaLabel::ACTUATION_REACH],
                    title: format!("Switch extension {i}"),
                    description: "Extends the switch".into(),
                },
            );
        }
        m
    }

    fn sub(worker: &str, design: &str, labels: &[&str], idx: u32) -> HitSubmission {
        HitSubmission {
            worker_id: worker.into(),
            design_id: design.into(),
            chosen_labels: labels.iter().map(|l| l.parse().unwrap()).collect(),
            custom_label: None,
            duration_seconds: 90.0,
            submit_index: idx,
        }
    }

    #[test]
    fn quota() {
        let subs: Vec<_> = (1..=120).map(|i| sub("w", &format!("a{i}"), &["actuation-reach"], i)).collect();
        let v = validate_worker_batch(&subs, &truth(), &QaConfig::default()).unwrap();
        assert!(v[..100].iter().all(|v| v.status == Status::Accepted));
        assert!(v[100..].iter().all(|v| v.rule == Rule::OverQuota));
    }

    #[test]
    fn identical_and_incorrect() {
        let subs: Vec<_> = (1..=5).map(|i| sub("w", &format!("a{i}"), &["constraint"], i)).collect();
        let v = validate_worker_batch(&subs, &truth(), &QaConfig::default()).unwrap();
        assert!(v.iter().all(|v| v.rule == Rule::IdenticalIncorrect));
    }

    #[test]
    fn sibling_subcategory_is_correct() {
        let v = validate_worker_batch(&[sub("w", "a1", &["actuation-operation"], 1)], &truth(), &QaConfig::default()).unwrap();
        assert_eq!(v[0].status, Status::Accepted);
        assert!(v[0].correct_at_high_level);
    }

    #[test]
    fn junk_custom_labels() {
        let cfg = QaConfig::default();
        let t = &truth()["a1"];
        assert!(is_junk_custom_label("  Good   Design ", t, &cfg));
        assert!(is_junk_custom_label("switch extension 1", t, &cfg));
        assert!(is_junk_custom_label("", t, &cfg));
        assert!(!is_junk_custom_label("holder", t, &cfg));
    }

    #[test]
    fn one_correct_answer_blocks_batch_rules() {
        let mut subs: Vec<_> = (1..=4).map(|i| sub("w", &format!("a{i}"), &["constraint"], i)).collect();
        subs.iter_mut().for_each(|s| s.duration_seconds = 5.0);
        subs.push(sub("w", "a9", &["actuation-reach"], 5));
        subs[4].duration_seconds = 5.0;
        let v = validate_worker_batch(&subs, &truth(), &QaConfig::default()).unwrap();
        assert!(v.iter().all(|v| v.status == Status::Accepted));
    }

    #[test]
    fn malformed_submission() {
        let mut s = sub("w", "a1", &["others"], 1);
        assert!(validate_worker_batch(&[s.clone()], &truth(), &QaConfig::default()).is_err());
        s.custom_label = Some("holder".into());
        validate_worker_batch(&[s], &truth(), &QaConfig::default()).unwrap();
        let missing = sub("w", "zz", &["constraint"], 1);
        assert!(matches!(
            validate_worker_batch(&[missing], &truth(), &QaConfig::default()),
            Err(Error::MissingGroundTruth(_))
        ));
    }

    #[test]
    fn consolidation() {
        use Category::*;
        assert_eq!(consolidate(&[Some(Actuation), Some(Actuation), Some(Indication)]), Consolidation::Label(Actuation));
        assert_eq!(consolidate(&[Some(Actuation), Some(Constraint), Some(Indication)]), Consolidation::Tie);
        assert_eq!(consolidate(&[Some(Constraint); 3]), Consolidation::Label(Constraint));
        assert_eq!(consolidate(&[Some(Constraint); 2]), Consolidation::Insufficient);
    }

    #[test]
    fn accuracy_requires_valid() {
        assert!(matches!(score_accuracy(&[]), Err(Error::NoValidSubmissions)));
        let a = AccuracySummary {
            valid_count: 839,
            correct_count: 697,
            accuracy: 697.0 / 839.0,
        };
        assert_eq!(a.percent(), "83%");
    }

    #[test]
    fn choice_tokens() {
        let s: HitSubmission = serde_json::from_str(
            r#"{"worker_id": "w", "design_id": "a1", "chosen_labels": ["others", "indication-tactile"],
                "custom_label": "stabilizer", "duration_seconds": 12.5, "submit_index": 3}"#,
        )
        .unwrap();
        assert!(s.chosen_labels.contains(&Choice::Others));
        assert_eq!(s.categories().into_iter().collect::<Vec<_>>(), [Category::Indication]);
    }
}
