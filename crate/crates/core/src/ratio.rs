//! Selection-rate ratios: raw, symmetrized and categorical worst case.
//!
//! Ratios of rates are evaluated from integer cross products
//! (`fav_a · total_b / (total_a · fav_b)`), so each value carries a single
//! floating-point rounding. This keeps the boundary case `0.4 / 0.5` exactly
//! at `0.8`, makes scaling all cells by an integer leave values bit-identical,
//! and makes the symmetrized ratio exactly invariant under argument swap.

use serde::{Deserialize, Serialize};

use crate::caveat::{push_unique, CaveatCode};
use crate::error::{Error, Result};
use crate::table::{GroupCounts, GroupLabel, GroupOutcomeTable};

/// The quotient of two selection rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatioValue {
    Finite {
        value: f64,
    },
    /// Both rates are zero.
    Undefined,
    /// Positive rate over a zero rate.
    Infinite,
}

impl RatioValue {
    fn from_cross_products(numerator: u128, denominator: u128) -> Self {
        match (numerator, denominator) {
            (0, 0) => RatioValue::Undefined,
            (_, 0) => RatioValue::Infinite,
            (n, d) => RatioValue::Finite {
                value: n as f64 / d as f64,
            },
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            RatioValue::Finite { value } => Some(value),
            _ => None,
        }
    }

    /// Closed threshold: a finite value at or below `tau` is flagged.
    pub fn is_at_or_below(&self, tau: f64) -> bool {
        self.finite().is_some_and(|v| v <= tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioVariant {
    /// Comparison rate over an explicitly chosen reference rate.
    Raw,
    /// `min(r, 1/r)` of the raw ratio; independent of which group is the reference.
    Symmetrized,
    /// Lowest group rate over highest group rate.
    CategoricalWorstCase,
}

impl RatioVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            RatioVariant::Raw => "raw",
            RatioVariant::Symmetrized => "symmetrized",
            RatioVariant::CategoricalWorstCase => "categorical_worst_case",
        }
    }
}

/// Label carried by every assessment in serialized output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MetricLabel {
    #[default]
    #[serde(rename = "selection-rate ratio")]
    SelectionRateRatio,
}

impl MetricLabel {
    pub fn as_str(self) -> &'static str {
        "selection-rate ratio"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityAssessment {
    pub metric: MetricLabel,
    pub variant: RatioVariant,
    pub value: RatioValue,
    pub threshold_tau: f64,
    pub flagged: bool,
    pub comparison_group: Option<GroupLabel>,
    pub reference_group: Option<GroupLabel>,
    pub excluded_groups: Vec<GroupLabel>,
    pub caveats: Vec<CaveatCode>,
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidTau(tau))
    }
}

type Entry<'t> = (&'t GroupLabel, &'t GroupCounts);

fn pair<'t>(table: &'t GroupOutcomeTable, a: &str, b: &str) -> Result<(Entry<'t>, Entry<'t>)> {
    let first = table.lookup(a)?;
    let second = table.lookup(b)?;
    if first.0 == second.0 {
        return Err(Error::IdenticalGroups(first.0.to_string()));
    }
    for (label, counts) in [first, second] {
        if counts.total() == 0 {
            return Err(Error::ZeroTotalGroup(label.to_string()));
        }
    }
    Ok((first, second))
}

/// `favorable_a · total_b`, the numerator of `rate_a / rate_b`.
fn cross(a: &GroupCounts, b: &GroupCounts) -> u128 {
    a.favorable as u128 * b.total() as u128
}

fn assessment(
    variant: RatioVariant,
    value: RatioValue,
    tau: f64,
    comparison: &GroupLabel,
    reference: &GroupLabel,
    degenerate: bool,
) -> DisparityAssessment {
    let mut caveats = Vec::new();
    if degenerate {
        caveats.push(CaveatCode::DegenerateRates);
    }
    DisparityAssessment {
        metric: MetricLabel::SelectionRateRatio,
        variant,
        value,
        threshold_tau: tau,
        flagged: value.is_at_or_below(tau),
        comparison_group: Some(comparison.clone()),
        reference_group: Some(reference.clone()),
        excluded_groups: Vec::new(),
        caveats,
    }
}

/// `rate(comparison) / rate(reference)`, flagged when at or below `tau`.
pub fn raw_ratio(
    table: &GroupOutcomeTable,
    comparison_group: &str,
    reference_group: &str,
    tau: f64,
) -> Result<DisparityAssessment> {
    check_tau(tau)?;
    let ((cmp_label, cmp), (ref_label, reference)) =
        pair(table, comparison_group, reference_group)?;
    let value = RatioValue::from_cross_products(cross(cmp, reference), cross(reference, cmp));
    let degenerate = cmp.favorable == 0 || reference.favorable == 0;
    Ok(assessment(
        RatioVariant::Raw,
        value,
        tau,
        cmp_label,
        ref_label,
        degenerate,
    ))
}

/// `min(r, 1/r)` with `r = rate(a) / rate(b)`; the value does not depend on
/// argument order.
pub fn symmetrized_ratio(
    table: &GroupOutcomeTable,
    group_a: &str,
    group_b: &str,
    tau: f64,
) -> Result<DisparityAssessment> {
    check_tau(tau)?;
    let ((a_label, a), (b_label, b)) = pair(table, group_a, group_b)?;
    let (ab, ba) = (cross(a, b), cross(b, a));
    let value = RatioValue::from_cross_products(ab.min(ba), ab.max(ba));
    let degenerate = a.favorable == 0 || b.favorable == 0;
    Ok(assessment(
        RatioVariant::Symmetrized,
        value,
        tau,
        a_label,
        b_label,
        degenerate,
    ))
}

/// Lowest selection rate over highest selection rate across all groups with
/// observations. Groups without observations are listed in
/// `excluded_groups`. The comparison group is the lowest-rate group and the
/// reference group the highest-rate group.
pub fn categorical_worst_case(table: &GroupOutcomeTable, tau: f64) -> Result<DisparityAssessment> {
    check_tau(tau)?;
    let (included, excluded): (Vec<Entry<'_>>, Vec<Entry<'_>>) =
        table.iter().partition(|(_, c)| c.total() > 0);
    if included.len() < 2 {
        return Err(Error::TooFewGroups(included.len()));
    }
    // Ties: the highest rate goes to the first group in label order, the
    // lowest to the last, so the two roles differ when all rates are equal.
    let mut lowest = included[0];
    let mut highest = included[0];
    for &entry in &included[1..] {
        if cross(entry.1, lowest.1) <= cross(lowest.1, entry.1) {
            lowest = entry;
        }
        if cross(entry.1, highest.1) > cross(highest.1, entry.1) {
            highest = entry;
        }
    }
    if std::ptr::eq(lowest.0, highest.0) {
        highest = included[0];
    }
    let value =
        RatioValue::from_cross_products(cross(lowest.1, highest.1), cross(highest.1, lowest.1));
    let mut out = assessment(
        RatioVariant::CategoricalWorstCase,
        value,
        tau,
        lowest.0,
        highest.0,
        lowest.1.favorable == 0,
    );
    if !excluded.is_empty() {
        out.excluded_groups = excluded.into_iter().map(|(l, _)| l.clone()).collect();
        push_unique(&mut out.caveats, CaveatCode::ExcludedEmptyGroups);
    }
    Ok(out)
}

/// `(tau, 1/tau)`: a raw ratio strictly inside the band is unflagged under
/// the symmetrized rule.
pub fn fair_band(tau: f64) -> Result<(f64, f64)> {
    check_tau(tau)?;
    Ok((tau, 1.0 / tau))
}
