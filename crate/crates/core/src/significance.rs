//! Significance tests on group-by-outcome contingency tables.
//!
//! Every test returns a [`SignificanceResult`]. None of them applies a
//! significance level; comparing p-values against alpha is the caller's job.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::caveat::{push_unique, CaveatCode};
use crate::error::{Error, Result};
use crate::special::{chi_squared_sf, erfc, ln_factorial};
use crate::table::{GroupCounts, GroupLabel, GroupOutcomeTable, ReferenceDistribution};

/// Expected cell counts below this raise [`CaveatCode::LowExpectedCell`].
pub const LOW_EXPECTED_THRESHOLD: f64 = 5.0;

/// Relative slack when comparing hypergeometric point probabilities against
/// the observed table's probability.
pub const FISHER_TIE_SLACK: f64 = 1e-7;

/// A k×2 table of (favorable, unfavorable) counts in a fixed group order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyView {
    groups: Vec<GroupLabel>,
    cells: Vec<[u64; 2]>,
}

impl ContingencyView {
    /// All groups of `table`, in label order.
    pub fn from_table(table: &GroupOutcomeTable) -> Result<Self> {
        Self::build(table.iter().map(|(l, c)| (l.clone(), *c)).collect())
    }

    /// The listed groups of `table`, in the given order.
    pub fn with_order<S: AsRef<str>>(table: &GroupOutcomeTable, order: &[S]) -> Result<Self> {
        let mut rows = Vec::with_capacity(order.len());
        for name in order {
            let (label, counts) = table.lookup(name.as_ref())?;
            if rows.iter().any(|(l, _)| l == label) {
                return Err(Error::DuplicateGroup(label.to_string()));
            }
            rows.push((label.clone(), *counts));
        }
        Self::build(rows)
    }

    /// Builds a view directly from rows of `(favorable, unfavorable)`.
    pub fn from_cells<S: AsRef<str>>(rows: &[(S, u64, u64)]) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for (label, f, u) in rows {
            let label = GroupLabel::new(label)?;
            if out.iter().any(|(l, _)| *l == label) {
                return Err(Error::DuplicateGroup(label.to_string()));
            }
            out.push((label, GroupCounts::new(*f, *u)));
        }
        Self::build(out)
    }

    fn build(rows: Vec<(GroupLabel, GroupCounts)>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::TooFewGroups(rows.len()));
        }
        if rows.iter().all(|(_, c)| c.total() == 0) {
            return Err(Error::ZeroTotalTable);
        }
        let (groups, cells) = rows
            .into_iter()
            .map(|(l, c)| (l, [c.favorable, c.unfavorable]))
            .unzip();
        Ok(ContingencyView { groups, cells })
    }

    pub fn groups(&self) -> &[GroupLabel] {
        &self.groups
    }

    pub fn cells(&self) -> &[[u64; 2]] {
        &self.cells
    }

    pub fn k(&self) -> usize {
        self.cells.len()
    }

    fn row_totals(&self) -> Vec<u64> {
        self.cells.iter().map(|r| r[0] + r[1]).collect()
    }

    fn column_totals(&self) -> [u64; 2] {
        self.cells
            .iter()
            .fold([0, 0], |acc, r| [acc[0] + r[0], acc[1] + r[1]])
    }

    fn grand_total(&self) -> u64 {
        self.cells.iter().map(|r| r[0] + r[1]).sum()
    }

    fn has_zero_marginal(&self) -> bool {
        self.row_totals().contains(&0) || self.column_totals().contains(&0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    PearsonChi2,
    FisherExact,
    GoodnessOfFit,
    TwoProportionZ,
}

impl TestMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TestMethod::PearsonChi2 => "pearson_chi2",
            TestMethod::FisherExact => "fisher_exact",
            TestMethod::GoodnessOfFit => "goodness_of_fit",
            TestMethod::TwoProportionZ => "two_proportion_z",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub method: TestMethod,
    /// χ² statistic, z², or (for Fisher) the observed table's point probability.
    pub statistic: f64,
    pub dof: Option<u32>,
    pub p_value: f64,
    pub continuity_correction: bool,
    pub caveats: Vec<CaveatCode>,
    pub signed_z: Option<f64>,
}

/// Pearson χ² test of independence over all 2k cells.
///
/// With `yates`, each `|O − E|` is reduced by `min(0.5, |O − E|)`; the
/// correction is only defined for 2×2 tables.
pub fn pearson_chi_squared(view: &ContingencyView, yates: bool) -> Result<SignificanceResult> {
    if yates && view.k() != 2 {
        return Err(Error::YatesRequiresTwoGroups(view.k()));
    }
    let (statistic, low) = chi_squared_statistic(view, yates)?;
    let dof = (view.k() - 1) as u32;
    let mut caveats = Vec::new();
    if low {
        caveats.push(CaveatCode::LowExpectedCell);
    }
    Ok(SignificanceResult {
        method: TestMethod::PearsonChi2,
        statistic,
        dof: Some(dof),
        p_value: chi_squared_sf(statistic, dof)?,
        continuity_correction: yates,
        caveats,
        signed_z: None,
    })
}

/// Returns the statistic and whether any expected count is below the
/// low-count threshold.
fn chi_squared_statistic(view: &ContingencyView, yates: bool) -> Result<(f64, bool)> {
    if view.has_zero_marginal() {
        return Err(Error::ZeroMarginal);
    }
    let rows = view.row_totals();
    let cols = view.column_totals();
    let n = view.grand_total() as f64;
    let mut statistic = 0.0;
    let mut low = false;
    for (cells, &row) in view.cells.iter().zip(&rows) {
        for (&observed, &col) in cells.iter().zip(&cols) {
            let expected = row as f64 * col as f64 / n;
            low |= expected < LOW_EXPECTED_THRESHOLD;
            let mut diff = (observed as f64 - expected).abs();
            if yates {
                diff -= diff.min(0.5);
            }
            statistic += diff * diff / expected;
        }
    }
    Ok((statistic, low))
}

/// Two-sided Fisher exact test for a 2×2 table.
///
/// The p-value sums the hypergeometric probabilities of every table with the
/// observed margins whose probability does not exceed the observed one
/// (allowing [`FISHER_TIE_SLACK`] relative slack).
pub fn fisher_exact_2x2(view: &ContingencyView) -> Result<SignificanceResult> {
    if view.k() != 2 {
        return Err(Error::RequiresTwoGroups(view.k()));
    }
    let [[a, b], [c, d]] = [view.cells[0], view.cells[1]];
    let row1 = a + b;
    let row2 = c + d;
    let col1 = a + c;
    let n = row1 + row2;
    // ln P(x) = ln C(row1, x) + ln C(row2, col1 − x) − ln C(n, col1)
    let ln_const =
        ln_factorial(row1) + ln_factorial(row2) + ln_factorial(col1) + ln_factorial(n - col1)
            - ln_factorial(n);
    let ln_point = |x: u64| {
        ln_const
            - ln_factorial(x)
            - ln_factorial(row1 - x)
            - ln_factorial(col1 - x)
            - ln_factorial(row2 + x - col1)
    };
    let lo = col1.saturating_sub(row2);
    let hi = row1.min(col1);
    let ln_observed = ln_point(a);
    let ln_cutoff = ln_observed + FISHER_TIE_SLACK.ln_1p();
    let points: Vec<f64> = (lo..=hi).map(ln_point).collect();
    let ln_mode = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // weights relative to the mode, normalized by the total mass
    let (mut tail, mut total) = (0.0, 0.0);
    for &l in &points {
        let w = (l - ln_mode).exp();
        total += w;
        if l <= ln_cutoff {
            tail += w;
        }
    }
    let observed = ln_observed.exp();
    let p = tail / total;
    Ok(SignificanceResult {
        method: TestMethod::FisherExact,
        statistic: observed,
        dof: None,
        p_value: p.clamp(0.0, 1.0),
        continuity_correction: false,
        caveats: Vec::new(),
        signed_z: None,
    })
}

/// χ² goodness of fit of observed group counts against a reference
/// population.
///
/// The statistic runs over every group of `reference`; a reference group
/// absent from `observed` counts as observed zero. Observed groups missing
/// from the reference are an error.
pub fn goodness_of_fit(
    observed: &BTreeMap<GroupLabel, u64>,
    reference: &ReferenceDistribution,
) -> Result<SignificanceResult> {
    if let Some(missing) = observed.keys().find(|g| reference.get(g).is_none()) {
        return Err(Error::UnknownGroup(missing.to_string()));
    }
    let n: u64 = observed.values().sum();
    if n == 0 {
        return Err(Error::ZeroTotalTable);
    }
    if reference.len() < 2 {
        return Err(Error::ZeroDegreesOfFreedom);
    }
    let n = n as f64;
    let mut statistic = 0.0;
    let mut caveats = Vec::new();
    for (group, share) in reference.iter() {
        let expected = n * share;
        if expected < LOW_EXPECTED_THRESHOLD {
            push_unique(&mut caveats, CaveatCode::LowExpectedCell);
        }
        let o = observed.get(group).copied().unwrap_or(0) as f64;
        statistic += (o - expected).powi(2) / expected;
    }
    let dof = (reference.len() - 1) as u32;
    Ok(SignificanceResult {
        method: TestMethod::GoodnessOfFit,
        statistic,
        dof: Some(dof),
        p_value: chi_squared_sf(statistic, dof)?,
        continuity_correction: false,
        caveats,
        signed_z: None,
    })
}

/// Two-proportion z test for a 2×2 table with pooled variance.
///
/// `signed_z` is positive when the first group's selection rate is higher.
pub fn two_proportion_z(view: &ContingencyView) -> Result<SignificanceResult> {
    if view.k() != 2 {
        return Err(Error::RequiresTwoGroups(view.k()));
    }
    let (chi2, low) = chi_squared_statistic(view, false)?;
    let [first, second] = [view.cells[0], view.cells[1]];
    let lhs = first[0] as u128 * (second[0] + second[1]) as u128;
    let rhs = second[0] as u128 * (first[0] + first[1]) as u128;
    let z = match lhs.cmp(&rhs) {
        std::cmp::Ordering::Less => -chi2.sqrt(),
        std::cmp::Ordering::Equal => 0.0,
        std::cmp::Ordering::Greater => chi2.sqrt(),
    };
    let mut caveats = Vec::new();
    if low {
        caveats.push(CaveatCode::LowExpectedCell);
    }
    Ok(SignificanceResult {
        method: TestMethod::TwoProportionZ,
        statistic: z * z,
        dof: None,
        p_value: erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0),
        continuity_correction: false,
        caveats,
        signed_z: Some(z),
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn view(a: u64, b: u64, c: u64, d: u64) -> ContingencyView {
        ContingencyView::from_cells(&[("g0", a, b), ("g1", c, d)]).unwrap()
    }

    fn binom(n: u64, k: u64) -> u128 {
        if k > n {
            return 0;
        }
        (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
    }

    /// Exhaustive enumeration of the hypergeometric support in exact integers.
    fn fisher_oracle(a: u64, b: u64, c: u64, d: u64) -> f64 {
        let (r1, r2, c1) = (a + b, c + d, a + c);
        let weight = |x: u64| binom(r1, x) * binom(r2, c1 - x);
        let observed = weight(a);
        let lo = c1.saturating_sub(r2);
        let hi = r1.min(c1);
        let tail: u128 = (lo..=hi).map(weight).filter(|&w| w <= observed).sum();
        tail as f64 / binom(r1 + r2, c1) as f64
    }

    #[test]
    fn chi2_perfect_independence() {
        let r = pearson_chi_squared(&view(10, 10, 10, 10), false).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, Some(1));
        assert_eq!(r.p_value, 1.0);
        assert!(r.caveats.is_empty());
    }

    #[test]
    fn chi2_reference_table() {
        // statistic 1960/391 exactly; p = erfc(sqrt(stat/2)) at 40 digits
        let r = pearson_chi_squared(&view(12, 8, 5, 15), false).unwrap();
        assert!((r.statistic - 1960.0 / 391.0).abs() < 1e-12);
        assert!((r.p_value - 0.025_160_759_200_408_770_76).abs() < 1e-12);
    }

    #[test]
    fn chi2_yates() {
        let r = pearson_chi_squared(&view(12, 8, 5, 15), true).unwrap();
        assert!((r.statistic - 3.682_864_450_127_877_6).abs() < 1e-12);
        assert!((r.p_value - 0.054_974_328_721_694_19).abs() < 1e-12);
        assert!(r.continuity_correction);
        let r = pearson_chi_squared(&view(10, 10, 10, 10), true).unwrap();
        assert_eq!(r.statistic, 0.0);
    }

    #[test]
    fn chi2_errors_and_caveats() {
        let three = ContingencyView::from_cells(&[("a", 1, 2), ("b", 3, 4), ("c", 5, 6)]).unwrap();
        assert_eq!(
            pearson_chi_squared(&three, true).unwrap_err(),
            Error::YatesRequiresTwoGroups(3)
        );
        let r = pearson_chi_squared(&three, false).unwrap();
        assert_eq!(r.dof, Some(2));
        assert_eq!(r.caveats, vec![CaveatCode::LowExpectedCell]);
        assert_eq!(
            pearson_chi_squared(&view(0, 5, 0, 5), false).unwrap_err(),
            Error::ZeroMarginal
        );
        assert_eq!(
            pearson_chi_squared(&view(0, 0, 3, 5), false).unwrap_err(),
            Error::ZeroMarginal
        );
    }

    #[test]
    fn chi2_scales_linearly() {
        let base = pearson_chi_squared(&view(12, 8, 5, 15), false)
            .unwrap()
            .statistic;
        for k in [2u64, 3, 10, 1000] {
            let s = pearson_chi_squared(&view(12 * k, 8 * k, 5 * k, 15 * k), false)
                .unwrap()
                .statistic;
            assert!((s / (base * k as f64) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fisher_examples() {
        assert_eq!(fisher_exact_2x2(&view(0, 5, 0, 5)).unwrap().p_value, 1.0);
        let p = fisher_exact_2x2(&view(5, 0, 0, 5)).unwrap().p_value;
        assert!((p - 2.0 / 252.0).abs() < 1e-12);
        // 2729/4199 from exact enumeration
        let p = fisher_exact_2x2(&view(3, 7, 5, 5)).unwrap().p_value;
        assert!((p - 2729.0 / 4199.0).abs() < 1e-12);
        assert!((p - fisher_oracle(3, 7, 5, 5)).abs() < 1e-12);
        let p = fisher_exact_2x2(&view(4, 6, 5, 5)).unwrap().p_value;
        assert!((p - 1.0).abs() < 1e-12);
        let p = fisher_exact_2x2(&view(2, 8, 9, 1)).unwrap().p_value;
        assert!((p - 23.0 / 4199.0).abs() < 1e-12);
    }

    #[test]
    fn fisher_requires_two_groups() {
        let three = ContingencyView::from_cells(&[("a", 1, 2), ("b", 3, 4), ("c", 5, 6)]).unwrap();
        assert_eq!(
            fisher_exact_2x2(&three).unwrap_err(),
            Error::RequiresTwoGroups(3)
        );
    }

    #[test]
    fn goodness_of_fit_examples() {
        let obs = |v: &[(&str, u64)]| -> BTreeMap<GroupLabel, u64> {
            v.iter()
                .map(|(g, n)| (GroupLabel::new(g).unwrap(), *n))
                .collect()
        };
        let half = ReferenceDistribution::new([("W", 0.5), ("M", 0.5)]).unwrap();
        let r = goodness_of_fit(&obs(&[("W", 50), ("M", 50)]), &half).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);

        let r = goodness_of_fit(&obs(&[("W", 10), ("M", 90)]), &half).unwrap();
        assert_eq!(r.statistic, 64.0);
        assert_eq!(r.dof, Some(1));
        // erfc(sqrt(32)) at 40 digits
        assert!((r.p_value / 1.244_192_114_854_356_824_7e-15 - 1.0).abs() < 1e-9);

        let single = ReferenceDistribution::new([("A", 1.0)]).unwrap();
        assert_eq!(
            goodness_of_fit(&obs(&[("A", 1)]), &single).unwrap_err(),
            Error::ZeroDegreesOfFreedom
        );
        assert_eq!(
            goodness_of_fit(&obs(&[("X", 3)]), &half).unwrap_err(),
            Error::UnknownGroup("X".into())
        );
        assert_eq!(
            goodness_of_fit(&obs(&[("W", 0)]), &half).unwrap_err(),
            Error::ZeroTotalTable
        );
        let r = goodness_of_fit(&obs(&[("W", 4)]), &half).unwrap();
        assert_eq!(r.statistic, 4.0);
        assert_eq!(r.caveats, vec![CaveatCode::LowExpectedCell]);
    }

    #[test]
    fn z_examples() {
        let r = two_proportion_z(&view(10, 10, 10, 10)).unwrap();
        assert_eq!(r.signed_z, Some(0.0));
        assert_eq!(r.p_value, 1.0);
        let r = two_proportion_z(&view(12, 8, 5, 15)).unwrap();
        let z = r.signed_z.unwrap();
        assert!((z - (1960.0f64 / 391.0).sqrt()).abs() < 1e-12);
        assert!((z - 2.238_925).abs() < 1e-6);
        let r = two_proportion_z(&view(5, 15, 12, 8)).unwrap();
        assert!(r.signed_z.unwrap() < 0.0);
        assert_eq!(
            two_proportion_z(&view(0, 5, 0, 5)).unwrap_err(),
            Error::ZeroMarginal
        );
    }

    #[test]
    fn view_ordering() {
        let t = GroupOutcomeTable::from_aggregate([("A", 1, 2), ("B", 3, 4)]).unwrap();
        let v = ContingencyView::with_order(&t, &["B", "A"]).unwrap();
        assert_eq!(v.cells(), &[[3, 4], [1, 2]]);
        assert!(ContingencyView::with_order(&t, &["B"]).is_err());
        assert!(ContingencyView::with_order(&t, &["B", "B"]).is_err());
    }

    #[test]
    fn chi2_monotone_in_imbalance() {
        // margins fixed at rows (20, 20), columns (20, 20)
        let mut prev_stat = -1.0;
        let mut prev_p = 2.0;
        for a in 10..=20 {
            let r = pearson_chi_squared(&view(a, 20 - a, 20 - a, a), false).unwrap();
            assert!(r.statistic >= prev_stat);
            assert!(r.p_value <= prev_p);
            prev_stat = r.statistic;
            prev_p = r.p_value;
        }
    }

    proptest! {
        #[test]
        fn fisher_matches_enumeration(a in 0u64..15, b in 0u64..15, c in 0u64..15, d in 0u64..15) {
            prop_assume!(a + b + c + d > 0);
            let p = fisher_exact_2x2(&view(a, b, c, d)).unwrap().p_value;
            prop_assert!((p - fisher_oracle(a, b, c, d)).abs() < 1e-10);
        }

        #[test]
        fn fisher_is_symmetric(a in 0u64..40, b in 0u64..40, c in 0u64..40, d in 0u64..40) {
            prop_assume!(a + b + c + d > 0);
            let p = fisher_exact_2x2(&view(a, b, c, d)).unwrap().p_value;
            let rows = fisher_exact_2x2(&view(c, d, a, b)).unwrap().p_value;
            let cols = fisher_exact_2x2(&view(b, a, d, c)).unwrap().p_value;
            prop_assert!((p - rows).abs() < 1e-12);
            prop_assert!((p - cols).abs() < 1e-12);
        }

        #[test]
        fn z_squared_is_chi2(a in 1u64..300, b in 1u64..300, c in 1u64..300, d in 1u64..300) {
            let v = view(a, b, c, d);
            let chi = pearson_chi_squared(&v, false).unwrap();
            let z = two_proportion_z(&v).unwrap();
            prop_assert!((z.statistic - chi.statistic).abs() <= 1e-12 * chi.statistic.max(1.0));
            prop_assert!((z.p_value - chi.p_value).abs() < 1e-12);
        }

        #[test]
        fn proportional_tables_give_p_one(f in 1u64..30, u in 1u64..30, k0 in 1u64..6, k1 in 1u64..6) {
            let v = view(f * k0, u * k0, f * k1, u * k1);
            prop_assert_eq!(pearson_chi_squared(&v, false).unwrap().p_value, 1.0);
            prop_assert_eq!(two_proportion_z(&v).unwrap().p_value, 1.0);
            prop_assert!((fisher_exact_2x2(&v).unwrap().p_value - 1.0).abs() < 1e-12);
        }
    }
}
