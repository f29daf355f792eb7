//! Group outcome tables: validated per-group favorable/unfavorable counts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of one value of the protected attribute.
///
/// Labels are trimmed of surrounding whitespace and otherwise kept verbatim;
/// comparison is byte-wise, so `"Female"` and `"female"` are distinct groups.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GroupLabel(String);

impl GroupLabel {
    pub fn new(label: impl AsRef<str>) -> Result<Self> {
        let trimmed = label.as_ref().trim();
        if trimmed.is_empty() {
            return Err(Error::EmptyLabel);
        }
        Ok(GroupLabel(trimmed.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for GroupLabel {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        GroupLabel::new(value)
    }
}

impl From<GroupLabel> for String {
    fn from(label: GroupLabel) -> Self {
        label.0
    }
}

impl fmt::Display for GroupLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for GroupLabel {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Which raw outcome token counts as the favorable outcome.
///
/// With `unfavorable` absent, every other token is unfavorable. With an
/// explicit set, tokens outside `{favorable} ∪ unfavorable` are rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPolarity", into = "RawPolarity")]
pub struct OutcomePolarity {
    favorable: String,
    unfavorable: Option<BTreeSet<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolarity {
    favorable: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    unfavorable: Option<BTreeSet<String>>,
}

impl TryFrom<RawPolarity> for OutcomePolarity {
    type Error = Error;

    fn try_from(raw: RawPolarity) -> Result<Self> {
        OutcomePolarity::new(raw.favorable, raw.unfavorable)
    }
}

impl From<OutcomePolarity> for RawPolarity {
    fn from(p: OutcomePolarity) -> Self {
        RawPolarity {
            favorable: p.favorable,
            unfavorable: p.unfavorable,
        }
    }
}

impl OutcomePolarity {
    pub fn new<I, S>(favorable: impl AsRef<str>, unfavorable: Option<I>) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let favorable = favorable.as_ref().trim().to_owned();
        if favorable.is_empty() {
            return Err(Error::InvalidPolarity("favorable value is empty".into()));
        }
        let unfavorable = match unfavorable {
            None => None,
            Some(values) => {
                let set: BTreeSet<String> = values
                    .into_iter()
                    .map(|v| v.as_ref().trim().to_owned())
                    .collect();
                if set.contains(&favorable) {
                    return Err(Error::InvalidPolarity(format!(
                        "`{favorable}` is declared both favorable and unfavorable"
                    )));
                }
                if set.is_empty() || set.iter().any(String::is_empty) {
                    return Err(Error::InvalidPolarity(
                        "unfavorable set must hold non-empty tokens".into(),
                    ));
                }
                Some(set)
            }
        };
        Ok(OutcomePolarity {
            favorable,
            unfavorable,
        })
    }

    /// Polarity where everything but `favorable` is unfavorable.
    pub fn favorable(value: impl AsRef<str>) -> Result<Self> {
        OutcomePolarity::new::<[&str; 0], &str>(value, None)
    }

    pub fn favorable_value(&self) -> &str {
        &self.favorable
    }

    pub fn unfavorable_values(&self) -> Option<&BTreeSet<String>> {
        self.unfavorable.as_ref()
    }

    /// `Some(true)` for favorable, `Some(false)` for unfavorable, `None` for a
    /// token outside an explicitly declared vocabulary.
    pub fn classify(&self, token: &str) -> Option<bool> {
        let token = token.trim();
        if token == self.favorable {
            return Some(true);
        }
        match &self.unfavorable {
            None => Some(false),
            Some(set) if set.contains(token) => Some(false),
            Some(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupCounts {
    pub favorable: u64,
    pub unfavorable: u64,
}

impl GroupCounts {
    pub fn new(favorable: u64, unfavorable: u64) -> Self {
        GroupCounts {
            favorable,
            unfavorable,
        }
    }

    pub fn total(&self) -> u64 {
        self.favorable + self.unfavorable
    }

    /// `None` for a group with no observations.
    pub fn rate(&self) -> Option<f64> {
        match self.total() {
            0 => None,
            t => Some(self.favorable as f64 / t as f64),
        }
    }

    fn swapped(self) -> Self {
        GroupCounts {
            favorable: self.unfavorable,
            unfavorable: self.favorable,
        }
    }
}

/// Where a table's counts came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    /// Counted from row-level records. `dropped_fields` lists the columns
    /// other than the protected and outcome fields, which are never used.
    Rows {
        protected_field: String,
        outcome_field: String,
        polarity: OutcomePolarity,
        dropped_fields: Vec<String>,
    },
    Aggregate,
}

/// Per-group favorable/unfavorable counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupOutcomeTable {
    entries: BTreeMap<GroupLabel, GroupCounts>,
    provenance: Provenance,
    flipped: bool,
}

/// One row-level record, keyed by field name.
pub type Row = BTreeMap<String, String>;

impl GroupOutcomeTable {
    /// Counts favorable and unfavorable outcomes per protected group.
    pub fn from_rows<'a, I>(
        rows: I,
        protected_field: &str,
        outcome_field: &str,
        polarity: &OutcomePolarity,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Row>,
    {
        let mut counter = RowCounter::new(protected_field, outcome_field, polarity);
        for row in rows {
            counter.push(
                |name| row.get(name).map(String::as_str),
                row.keys().map(String::as_str),
            )?;
        }
        counter.finish()
    }

    pub fn from_aggregate<I, S>(triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, i64, i64)>,
        S: AsRef<str>,
    {
        let mut entries = BTreeMap::new();
        for (label, favorable, unfavorable) in triples {
            let label = GroupLabel::new(label)?;
            let favorable = non_negative(&label, favorable)?;
            let unfavorable = non_negative(&label, unfavorable)?;
            if entries.contains_key(&label) {
                return Err(Error::DuplicateGroup(label.0));
            }
            entries.insert(label, GroupCounts::new(favorable, unfavorable));
        }
        GroupOutcomeTable::build(entries, Provenance::Aggregate)
    }

    fn build(entries: BTreeMap<GroupLabel, GroupCounts>, provenance: Provenance) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyInput);
        }
        if entries.values().all(|c| c.total() == 0) {
            return Err(Error::ZeroTotalTable);
        }
        Ok(GroupOutcomeTable {
            entries,
            provenance,
            flipped: false,
        })
    }

    /// Swaps favorable and unfavorable counts in every group.
    pub fn flip_polarity(&self) -> Self {
        GroupOutcomeTable {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), v.swapped()))
                .collect(),
            provenance: self.provenance.clone(),
            flipped: !self.flipped,
        }
    }

    pub fn selection_rate(&self, group: &str) -> Result<f64> {
        let (label, counts) = self.lookup(group)?;
        counts
            .rate()
            .ok_or_else(|| Error::ZeroTotalGroup(label.0.clone()))
    }

    /// Finds a group by label (trimmed before lookup).
    pub fn lookup(&self, group: &str) -> Result<(&GroupLabel, &GroupCounts)> {
        let key = GroupLabel::new(group)?;
        self.entries
            .get_key_value(&key)
            .ok_or(Error::UnknownGroup(key.0))
    }

    pub fn counts(&self, group: &str) -> Option<&GroupCounts> {
        GroupLabel::new(group)
            .ok()
            .and_then(|key| self.entries.get(&key))
    }

    /// Groups in byte-wise label order.
    pub fn iter(&self) -> impl Iterator<Item = (&GroupLabel, &GroupCounts)> {
        self.entries.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = &GroupLabel> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.entries.values().map(GroupCounts::total).sum()
    }

    pub fn triples(&self) -> Vec<(GroupLabel, u64, u64)> {
        self.entries
            .iter()
            .map(|(k, v)| (k.clone(), v.favorable, v.unfavorable))
            .collect()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// True when the counts have been polarity-flipped an odd number of times.
    pub fn is_flipped(&self) -> bool {
        self.flipped
    }
}

fn non_negative(label: &GroupLabel, count: i64) -> Result<u64> {
    u64::try_from(count).map_err(|_| Error::NegativeCount {
        group: label.0.clone(),
        count,
    })
}

/// Incremental row counting shared by in-memory and streaming ingestion.
pub(crate) struct RowCounter<'p> {
    protected_field: &'p str,
    outcome_field: &'p str,
    polarity: &'p OutcomePolarity,
    entries: BTreeMap<GroupLabel, GroupCounts>,
    dropped: BTreeSet<String>,
    rows: usize,
}

impl<'p> RowCounter<'p> {
    pub(crate) fn new(
        protected_field: &'p str,
        outcome_field: &'p str,
        polarity: &'p OutcomePolarity,
    ) -> Self {
        RowCounter {
            protected_field,
            outcome_field,
            polarity,
            entries: BTreeMap::new(),
            dropped: BTreeSet::new(),
            rows: 0,
        }
    }

    pub(crate) fn push<'r, F, K>(&mut self, get: F, field_names: K) -> Result<()>
    where
        F: Fn(&str) -> Option<&'r str>,
        K: Iterator<Item = &'r str>,
    {
        self.rows += 1;
        let row = self.rows;
        let missing = |field: &str| Error::MissingField {
            row,
            field: field.to_owned(),
        };
        let group = get(self.protected_field).ok_or_else(|| missing(self.protected_field))?;
        let outcome = get(self.outcome_field).ok_or_else(|| missing(self.outcome_field))?;
        let label = GroupLabel::new(group)?;
        let favorable = self
            .polarity
            .classify(outcome)
            .ok_or_else(|| Error::UnknownOutcome {
                row,
                token: outcome.trim().to_owned(),
            })?;
        let cell = self.entries.entry(label).or_default();
        if favorable {
            cell.favorable += 1;
        } else {
            cell.unfavorable += 1;
        }
        for name in field_names {
            if name != self.protected_field && name != self.outcome_field {
                self.dropped.insert(name.to_owned());
            }
        }
        Ok(())
    }

    pub(crate) fn finish(self) -> Result<GroupOutcomeTable> {
        if self.rows == 0 {
            return Err(Error::EmptyInput);
        }
        GroupOutcomeTable::build(
            self.entries,
            Provenance::Rows {
                protected_field: self.protected_field.to_owned(),
                outcome_field: self.outcome_field.to_owned(),
                polarity: self.polarity.clone(),
                dropped_fields: self.dropped.into_iter().collect(),
            },
        )
    }
}

/// Population shares used as the expected composition in a goodness-of-fit
/// comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct ReferenceDistribution {
    proportions: BTreeMap<GroupLabel, f64>,
}

impl ReferenceDistribution {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new<I, S>(proportions: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let invalid = |m: String| Error::InvalidReferenceDistribution(m);
        let mut map = BTreeMap::new();
        for (label, p) in proportions {
            let label = GroupLabel::new(label)?;
            if !(p > 0.0 && p <= 1.0) {
                return Err(invalid(format!(
                    "proportion for `{label}` must lie in (0, 1], got {p}"
                )));
            }
            if map.insert(label.clone(), p).is_some() {
                return Err(Error::DuplicateGroup(label.0));
            }
        }
        if map.is_empty() {
            return Err(invalid("no groups".into()));
        }
        let sum: f64 = map.values().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(invalid(format!("proportions sum to {sum}, not 1")));
        }
        Ok(ReferenceDistribution { proportions: map })
    }

    pub fn get(&self, group: &GroupLabel) -> Option<f64> {
        self.proportions.get(group).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GroupLabel, f64)> {
        self.proportions.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.proportions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proportions.is_empty()
    }
}

impl TryFrom<BTreeMap<String, f64>> for ReferenceDistribution {
    type Error = Error;

    fn try_from(map: BTreeMap<String, f64>) -> Result<Self> {
        ReferenceDistribution::new(map)
    }
}

impl From<ReferenceDistribution> for BTreeMap<String, f64> {
    fn from(d: ReferenceDistribution) -> Self {
        d.proportions.into_iter().map(|(k, v)| (k.0, v)).collect()
    }
}
