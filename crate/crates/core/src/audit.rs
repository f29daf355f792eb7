//! Audit assembly: ratios and significance tests combined into a report with
//! fixed disclaimers, plus ranking of candidate alternatives.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::caveat::{push_unique, Caveat, CaveatCode};
use crate::error::{Error, Result};
use crate::ratio::{
    categorical_worst_case, raw_ratio, symmetrized_ratio, DisparityAssessment, RatioValue,
};
use crate::significance::{
    fisher_exact_2x2, goodness_of_fit, pearson_chi_squared, two_proportion_z, ContingencyView,
    SignificanceResult, TestMethod,
};
use crate::table::{
    GroupLabel, GroupOutcomeTable, OutcomePolarity, Provenance, ReferenceDistribution,
};

pub const DEFAULT_TAU: f64 = 0.8;
pub const DEFAULT_ALPHA: f64 = 0.05;

pub const DISCLAIMER: &str = "Each ratio in this report is a selection-rate ratio, not a \
disparate-impact finding. The four-fifths threshold is a screening guideline used by enforcement \
agencies: a ratio below it does not by itself establish a legal violation, and a ratio above it \
does not rule one out. Courts weight statistical significance testing over the four-fifths rule. \
A legal determination also depends on the choice of comparison population, on causation and on \
any business-necessity defense, none of which this report evaluates.";

pub const REGULATORY_CONTEXT: &str = "29 CFR \u{a7}1607.4(D) (Uniform Guidelines on Employee \
Selection Procedures): a selection rate for any race, sex, or ethnic group that is less than \
four-fifths (80%) of the rate for the group with the highest rate will generally be regarded by \
federal enforcement agencies as evidence of adverse impact. Smaller differences may nevertheless \
constitute adverse impact where they are significant in both statistical and practical terms; \
greater differences may not where they are based on small numbers and are not statistically \
significant.";

/// Which groups are compared against the reference group.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ComparisonGroups {
    /// Every other group with at least one observation.
    #[default]
    AllOthers,
    Listed(Vec<GroupLabel>),
}

const ALL_OTHERS: &str = "all_others";

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ComparisonGroupsRepr {
    Keyword(String),
    Listed(Vec<GroupLabel>),
}

impl Serialize for ComparisonGroups {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ComparisonGroups::AllOthers => ComparisonGroupsRepr::Keyword(ALL_OTHERS.into()),
            ComparisonGroups::Listed(v) => ComparisonGroupsRepr::Listed(v.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComparisonGroups {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match ComparisonGroupsRepr::deserialize(d)? {
            ComparisonGroupsRepr::Keyword(k) if k == ALL_OTHERS => Ok(ComparisonGroups::AllOthers),
            ComparisonGroupsRepr::Keyword(k) => Err(serde::de::Error::custom(format!(
                "comparison_groups must be \"{ALL_OTHERS}\" or a list of groups, got \"{k}\""
            ))),
            ComparisonGroupsRepr::Listed(v) => Ok(ComparisonGroups::Listed(v)),
        }
    }
}

fn default_tau() -> f64 {
    DEFAULT_TAU
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_tests() -> Vec<TestMethod> {
    vec![TestMethod::PearsonChi2, TestMethod::FisherExact]
}

/// Audit configuration, read from JSON with snake_case keys. Unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    #[serde(default)]
    pub protected_field: Option<String>,
    #[serde(default)]
    pub outcome_field: Option<String>,
    #[serde(default)]
    pub polarity: Option<OutcomePolarity>,
    pub reference_group: GroupLabel,
    #[serde(default)]
    pub comparison_groups: ComparisonGroups,
    #[serde(default)]
    pub reference_distribution: Option<ReferenceDistribution>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_tests")]
    pub tests: Vec<TestMethod>,
    #[serde(default)]
    pub yates: bool,
    #[serde(default)]
    pub fail_on_flag: bool,
}

impl AuditConfig {
    /// Configuration with defaults for everything but the reference group.
    pub fn new(reference_group: GroupLabel) -> Self {
        AuditConfig {
            protected_field: None,
            outcome_field: None,
            polarity: None,
            reference_group,
            comparison_groups: ComparisonGroups::AllOthers,
            reference_distribution: None,
            tau: DEFAULT_TAU,
            alpha: DEFAULT_ALPHA,
            tests: default_tests(),
            yates: false,
            fail_on_flag: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: AuditConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::InvalidTau(self.tau));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidAlpha(self.alpha));
        }
        if self.tests.contains(&TestMethod::GoodnessOfFit) && self.reference_distribution.is_none()
        {
            return Err(Error::MissingReferenceDistribution);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceStatus {
    NoEvidence,
    RatioFlagOnly,
    StatisticalEvidenceOnly,
    RatioAndStatistical,
}

impl EvidenceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            EvidenceStatus::NoEvidence => "no_evidence",
            EvidenceStatus::RatioFlagOnly => "ratio_flag_only",
            EvidenceStatus::StatisticalEvidenceOnly => "statistical_evidence_only",
            EvidenceStatus::RatioAndStatistical => "ratio_and_statistical",
        }
    }
}

pub fn classify_evidence(flagged_any: bool, significant_any: bool) -> EvidenceStatus {
    match (flagged_any, significant_any) {
        (false, false) => EvidenceStatus::NoEvidence,
        (true, false) => EvidenceStatus::RatioFlagOnly,
        (false, true) => EvidenceStatus::StatisticalEvidenceOnly,
        (true, true) => EvidenceStatus::RatioAndStatistical,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseAssessment {
    pub comparison_group: GroupLabel,
    pub raw: DisparityAssessment,
    pub symmetrized: DisparityAssessment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestScope {
    /// A comparison group against the reference group.
    Pairwise,
    /// All groups with observations at once.
    Overall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub scope: TestScope,
    pub groups: Vec<GroupLabel>,
    pub result: SignificanceResult,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedTest {
    pub method: TestMethod,
    pub scope: TestScope,
    pub groups: Vec<GroupLabel>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimaFacieEvidence {
    pub pairwise: Vec<PairwiseAssessment>,
    pub overall: DisparityAssessment,
    pub tests: Vec<TestRecord>,
    pub skipped_tests: Vec<SkippedTest>,
    pub flagged_any: bool,
    pub significant_any: bool,
    pub evidence_status: EvidenceStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: GroupLabel,
    pub favorable: u64,
    pub unfavorable: u64,
    pub total: u64,
    pub selection_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSummary {
    pub groups: Vec<GroupSummary>,
    pub total: u64,
    pub polarity_flipped: bool,
    pub provenance: Provenance,
}

impl TableSummary {
    pub fn of(table: &GroupOutcomeTable) -> Self {
        TableSummary {
            groups: table
                .iter()
                .map(|(label, c)| GroupSummary {
                    group: label.clone(),
                    favorable: c.favorable,
                    unfavorable: c.unfavorable,
                    total: c.total(),
                    selection_rate: c.rate(),
                })
                .collect(),
            total: table.total(),
            polarity_flipped: table.is_flipped(),
            provenance: table.provenance().clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub table: TableSummary,
    pub evidence: PrimaFacieEvidence,
    pub caveats: Vec<Caveat>,
    pub notices: Vec<String>,
    pub regulatory_context: String,
    pub disclaimer: String,
}

impl AuditReport {
    pub fn has_caveat(&self, code: CaveatCode) -> bool {
        self.caveats.iter().any(|c| c.code == code)
    }

    /// True when any ratio assessment in the report is flagged.
    pub fn flagged(&self) -> bool {
        self.evidence.flagged_any
    }
}

struct Comparisons {
    groups: Vec<GroupLabel>,
    excluded: Vec<GroupLabel>,
}

fn resolve_comparisons(table: &GroupOutcomeTable, config: &AuditConfig) -> Result<Comparisons> {
    let reference = &config.reference_group;
    match &config.comparison_groups {
        ComparisonGroups::AllOthers => {
            let mut groups = Vec::new();
            let mut excluded = Vec::new();
            for (label, counts) in table.iter().filter(|(l, _)| *l != reference) {
                if counts.total() > 0 {
                    groups.push(label.clone());
                } else {
                    excluded.push(label.clone());
                }
            }
            Ok(Comparisons { groups, excluded })
        }
        ComparisonGroups::Listed(listed) => {
            let mut groups: Vec<GroupLabel> = Vec::with_capacity(listed.len());
            for label in listed {
                let (label, counts) = table.lookup(label.as_str())?;
                if label == reference {
                    return Err(Error::IdenticalGroups(label.to_string()));
                }
                if counts.total() == 0 {
                    return Err(Error::ZeroTotalGroup(label.to_string()));
                }
                if !groups.contains(label) {
                    groups.push(label.clone());
                }
            }
            Ok(Comparisons {
                groups,
                excluded: Vec::new(),
            })
        }
    }
}

fn run_pairwise_test(
    method: TestMethod,
    view: &ContingencyView,
    yates: bool,
) -> Result<SignificanceResult> {
    match method {
        TestMethod::PearsonChi2 => pearson_chi_squared(view, yates),
        TestMethod::FisherExact => fisher_exact_2x2(view),
        TestMethod::TwoProportionZ => two_proportion_z(view),
        TestMethod::GoodnessOfFit => unreachable!("goodness of fit is not a pairwise test"),
    }
}

fn skip_reason(err: &Error) -> Option<String> {
    match err {
        Error::ZeroMarginal => Some("a marginal total of the 2x2 table is zero".into()),
        _ => None,
    }
}

/// Runs ratios and configured tests on `table` and assembles the report.
pub fn run_audit(table: &GroupOutcomeTable, config: &AuditConfig) -> Result<AuditReport> {
    config.validate()?;
    let tau = config.tau;
    let reference = config.reference_group.as_str();
    if table.lookup(reference)?.1.total() == 0 {
        return Err(Error::ZeroTotalGroup(reference.to_owned()));
    }
    let comparisons = resolve_comparisons(table, config)?;
    let mut methods = config.tests.clone();
    methods.sort();
    methods.dedup();

    let mut pairwise = Vec::new();
    let mut tests = Vec::new();
    let mut skipped = Vec::new();
    for comparison in &comparisons.groups {
        let raw = raw_ratio(table, comparison.as_str(), reference, tau)?;
        let symmetrized = symmetrized_ratio(table, comparison.as_str(), reference, tau)?;
        pairwise.push(PairwiseAssessment {
            comparison_group: comparison.clone(),
            raw,
            symmetrized,
        });
        let view = ContingencyView::with_order(table, &[comparison.as_str(), reference])?;
        for &method in methods.iter().filter(|m| **m != TestMethod::GoodnessOfFit) {
            match run_pairwise_test(method, &view, config.yates) {
                Ok(result) => tests.push(TestRecord {
                    scope: TestScope::Pairwise,
                    groups: view.groups().to_vec(),
                    result,
                }),
                Err(e) => match skip_reason(&e) {
                    Some(reason) => skipped.push(SkippedTest {
                        method,
                        scope: TestScope::Pairwise,
                        groups: view.groups().to_vec(),
                        reason,
                    }),
                    None => return Err(e),
                },
            }
        }
    }

    let overall = categorical_worst_case(table, tau)?;

    let populated: Vec<&str> = table
        .iter()
        .filter(|(_, c)| c.total() > 0)
        .map(|(l, _)| l.as_str())
        .collect();
    if populated.len() > 2 && methods.contains(&TestMethod::PearsonChi2) {
        let view = ContingencyView::with_order(table, &populated)?;
        match pearson_chi_squared(&view, false) {
            Ok(result) => tests.push(TestRecord {
                scope: TestScope::Overall,
                groups: view.groups().to_vec(),
                result,
            }),
            Err(e) => match skip_reason(&e) {
                Some(reason) => skipped.push(SkippedTest {
                    method: TestMethod::PearsonChi2,
                    scope: TestScope::Overall,
                    groups: view.groups().to_vec(),
                    reason,
                }),
                None => return Err(e),
            },
        }
    }

    if methods.contains(&TestMethod::GoodnessOfFit) {
        let distribution = config
            .reference_distribution
            .as_ref()
            .ok_or(Error::MissingReferenceDistribution)?;
        let observed: BTreeMap<GroupLabel, u64> = table
            .iter()
            .filter(|(l, c)| c.favorable > 0 || distribution.get(l).is_some())
            .map(|(l, c)| (l.clone(), c.favorable))
            .collect();
        let groups: Vec<GroupLabel> = distribution.iter().map(|(l, _)| l.clone()).collect();
        match goodness_of_fit(&observed, distribution) {
            Ok(result) => tests.push(TestRecord {
                scope: TestScope::Overall,
                groups,
                result,
            }),
            Err(Error::ZeroTotalTable) => skipped.push(SkippedTest {
                method: TestMethod::GoodnessOfFit,
                scope: TestScope::Overall,
                groups,
                reason: "no favorable outcomes to compare with the reference distribution".into(),
            }),
            Err(e) => return Err(e),
        }
    }

    let flagged_any = pairwise
        .iter()
        .any(|p| p.raw.flagged || p.symmetrized.flagged)
        || overall.flagged;
    let significant_any = tests.iter().any(|t| t.result.p_value < config.alpha);
    let evidence_status = classify_evidence(flagged_any, significant_any);

    let mut codes = vec![CaveatCode::NotALegalFinding];
    if !flagged_any && significant_any {
        codes.push(CaveatCode::SmallerDifferencesSignificant);
    }
    if flagged_any && !significant_any && !tests.is_empty() {
        codes.push(CaveatCode::SmallNumbers);
    }
    if !comparisons.excluded.is_empty() {
        codes.push(CaveatCode::ExcludedEmptyGroups);
    }
    let assessments = pairwise
        .iter()
        .flat_map(|p| [&p.raw, &p.symmetrized])
        .chain([&overall]);
    for code in assessments.flat_map(|a| a.caveats.iter()) {
        push_unique(&mut codes, *code);
    }
    for code in tests.iter().flat_map(|t| t.result.caveats.iter()) {
        push_unique(&mut codes, *code);
    }
    codes.sort();
    codes.dedup();

    let mut notices = Vec::new();
    if let Provenance::Rows { dropped_fields, .. } = table.provenance() {
        if !dropped_fields.is_empty() {
            notices.push(format!(
                "Columns other than the protected and outcome fields were ignored: {}.",
                dropped_fields.join(", ")
            ));
        }
    }
    if table.is_flipped() {
        notices.push(
            "Outcome polarity was flipped: rates count the originally unfavorable outcome.".into(),
        );
    }
    if !comparisons.excluded.is_empty() {
        let names: Vec<&str> = comparisons
            .excluded
            .iter()
            .map(GroupLabel::as_str)
            .collect();
        notices.push(format!(
            "Groups without observations were not compared: {}.",
            names.join(", ")
        ));
    }

    Ok(AuditReport {
        config: config.clone(),
        table: TableSummary::of(table),
        evidence: PrimaFacieEvidence {
            pairwise,
            overall,
            tests,
            skipped_tests: skipped,
            flagged_any,
            significant_any,
            evidence_status,
        },
        caveats: codes.into_iter().map(Caveat::from).collect(),
        notices,
        regulatory_context: REGULATORY_CONTEXT.to_owned(),
        disclaimer: DISCLAIMER.to_owned(),
    })
}

/// One candidate model or procedure, described by the outcomes it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateOutcome {
    pub label: String,
    pub table: GroupOutcomeTable,
    /// Higher is better; units are up to the caller.
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAlternative {
    pub label: String,
    pub worst_case_ratio: RatioValue,
    pub flagged: bool,
    pub utility: f64,
}

/// Keeps candidates whose utility reaches `utility_floor` and orders them
/// from least to most disparate by categorical worst-case ratio.
///
/// Ties go to higher utility, then to the lexicographically smaller label;
/// undefined ratios sort last.
pub fn rank_alternatives(
    candidates: &[CandidateOutcome],
    utility_floor: f64,
    config: &AuditConfig,
) -> Result<Vec<RankedAlternative>> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput);
    }
    if utility_floor.is_nan() {
        return Err(Error::Domain("utility floor is NaN".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for c in candidates {
        if !seen.insert(c.label.as_str()) {
            return Err(Error::DuplicateCandidate(c.label.clone()));
        }
        if !c.utility.is_finite() {
            return Err(Error::InvalidUtility(c.label.clone()));
        }
    }
    let mut ranked = candidates
        .iter()
        .filter(|c| c.utility >= utility_floor)
        .map(|c| {
            let worst = categorical_worst_case(&c.table, config.tau)?;
            Ok(RankedAlternative {
                label: c.label.clone(),
                worst_case_ratio: worst.value,
                flagged: worst.flagged,
                utility: c.utility,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if ranked.is_empty() {
        return Err(Error::NoSufficientAlternative(utility_floor));
    }
    ranked.sort_by(|a, b| {
        let by_ratio = match (a.worst_case_ratio.finite(), b.worst_case_ratio.finite()) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        };
        by_ratio
            .then_with(|| b.utility.total_cmp(&a.utility))
            .then_with(|| a.label.cmp(&b.label))
    });
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(cells: &[(&str, i64, i64)]) -> GroupOutcomeTable {
        GroupOutcomeTable::from_aggregate(cells.iter().copied()).unwrap()
    }

    fn config(reference: &str, tests: &[TestMethod]) -> AuditConfig {
        let mut c = AuditConfig::new(GroupLabel::new(reference).unwrap());
        c.tests = tests.to_vec();
        c
    }

    #[test]
    fn classify_truth_table() {
        assert_eq!(classify_evidence(false, false), EvidenceStatus::NoEvidence);
        assert_eq!(
            classify_evidence(true, false),
            EvidenceStatus::RatioFlagOnly
        );
        assert_eq!(
            classify_evidence(false, true),
            EvidenceStatus::StatisticalEvidenceOnly
        );
        assert_eq!(
            classify_evidence(true, true),
            EvidenceStatus::RatioAndStatistical
        );
    }

    #[test]
    fn boundary_fixture_with_fisher() {
        let t = table(&[("X0", 4, 6), ("X1", 5, 5)]);
        let r = run_audit(&t, &config("X1", &[TestMethod::FisherExact])).unwrap();
        let pair = &r.evidence.pairwise[0];
        assert_eq!(pair.raw.value.finite(), Some(0.8));
        assert!(pair.raw.flagged);
        // Fisher p for [[4,6],[5,5]] is exactly 1 by enumeration
        assert!((r.evidence.tests[0].result.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.evidence.evidence_status, EvidenceStatus::RatioFlagOnly);
        assert!(r.has_caveat(CaveatCode::SmallNumbers));
        assert!(!r.has_caveat(CaveatCode::SmallerDifferencesSignificant));
    }

    #[test]
    fn proportional_table_has_no_evidence() {
        let t = table(&[("A", 10, 10), ("B", 20, 20), ("C", 5, 5)]);
        let mut c = config(
            "A",
            &[
                TestMethod::PearsonChi2,
                TestMethod::FisherExact,
                TestMethod::TwoProportionZ,
                TestMethod::GoodnessOfFit,
            ],
        );
        c.reference_distribution = Some(
            ReferenceDistribution::new([("A", 10.0 / 35.0), ("B", 20.0 / 35.0), ("C", 5.0 / 35.0)])
                .unwrap(),
        );
        let r = run_audit(&t, &c).unwrap();
        assert_eq!(r.evidence.evidence_status, EvidenceStatus::NoEvidence);
        for t in &r.evidence.tests {
            assert!((t.result.p_value - 1.0).abs() < 1e-9, "{:?}", t);
        }
        assert_eq!(r.evidence.tests.len(), 2 * 3 + 2);
        assert_eq!(r.caveats[0].code, CaveatCode::NotALegalFinding);
        assert!(!r.flagged());
    }

    #[test]
    fn report_always_carries_disclaimer() {
        let t = table(&[("A", 1, 1), ("B", 1, 1)]);
        let r = run_audit(&t, &config("A", &[])).unwrap();
        assert!(r.has_caveat(CaveatCode::NotALegalFinding));
        assert!(r.regulatory_context.contains("29 CFR \u{a7}1607.4(D)"));
        assert!(r
            .disclaimer
            .contains("is a selection-rate ratio, not a disparate-impact finding"));
    }

    #[test]
    fn smaller_differences_significant() {
        let t = table(&[("A", 850, 150), ("B", 900, 100)]);
        let r = run_audit(&t, &config("B", &[TestMethod::PearsonChi2])).unwrap();
        assert!(!r.flagged());
        assert!(r.evidence.significant_any);
        assert!(r.has_caveat(CaveatCode::SmallerDifferencesSignificant));
        assert!(!r.has_caveat(CaveatCode::SmallNumbers));
    }

    #[test]
    fn no_tests_means_no_small_numbers_caveat() {
        let t = table(&[("A", 1, 9), ("B", 5, 5)]);
        let r = run_audit(&t, &config("B", &[])).unwrap();
        assert!(r.flagged());
        assert!(!r.has_caveat(CaveatCode::SmallNumbers));
        assert_eq!(r.evidence.evidence_status, EvidenceStatus::RatioFlagOnly);
    }

    #[test]
    fn empty_groups_are_skipped_and_noted() {
        let t = table(&[("A", 5, 5), ("B", 4, 6), ("E", 0, 0)]);
        let r = run_audit(&t, &config("A", &[])).unwrap();
        assert_eq!(r.evidence.pairwise.len(), 1);
        assert!(r.has_caveat(CaveatCode::ExcludedEmptyGroups));
        assert!(r.notices.iter().any(|n| n.contains(": E.")));
    }

    #[test]
    fn zero_marginal_pair_is_skipped() {
        let t = table(&[("A", 0, 5), ("B", 0, 9), ("C", 3, 3)]);
        let r = run_audit(
            &t,
            &config("A", &[TestMethod::PearsonChi2, TestMethod::FisherExact]),
        )
        .unwrap();
        assert_eq!(r.evidence.skipped_tests.len(), 1);
        assert_eq!(r.evidence.skipped_tests[0].groups[0].as_str(), "B");
        assert!(r.has_caveat(CaveatCode::DegenerateRates));
    }

    #[test]
    fn audit_errors() {
        let t = table(&[("A", 1, 1), ("B", 0, 0)]);
        assert_eq!(
            run_audit(&t, &config("Z", &[])).unwrap_err(),
            Error::UnknownGroup("Z".into())
        );
        assert_eq!(
            run_audit(&t, &config("B", &[])).unwrap_err(),
            Error::ZeroTotalGroup("B".into())
        );
        let gof = config("A", &[TestMethod::GoodnessOfFit]);
        assert_eq!(
            run_audit(&t, &gof).unwrap_err(),
            Error::MissingReferenceDistribution
        );
        let mut listed = config("A", &[]);
        listed.comparison_groups = ComparisonGroups::Listed(vec![GroupLabel::new("B").unwrap()]);
        assert_eq!(
            run_audit(&t, &listed).unwrap_err(),
            Error::ZeroTotalGroup("B".into())
        );
    }

    #[test]
    fn config_json() {
        let c = AuditConfig::from_json(r#"{"reference_group":"B"}"#).unwrap();
        assert_eq!(c.tau, 0.8);
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c.comparison_groups, ComparisonGroups::AllOthers);
        let c = AuditConfig::from_json(
            r#"{"reference_group":"B","comparison_groups":["A"],"polarity":{"favorable":"Y"},"tests":["fisher_exact"]}"#,
        )
        .unwrap();
        assert_eq!(
            c.comparison_groups,
            ComparisonGroups::Listed(vec![GroupLabel::new("A").unwrap()])
        );
        assert!(AuditConfig::from_json(r#"{"reference_group":"B","colour":1}"#).is_err());
        assert!(AuditConfig::from_json(r#"{"reference_group":"B","tau":1.5}"#).is_err());
        assert!(AuditConfig::from_json(r#"{"reference_group":"B","alpha":0}"#).is_err());
        assert!(
            AuditConfig::from_json(r#"{"reference_group":"B","comparison_groups":"some"}"#)
                .is_err()
        );
        assert!(AuditConfig::from_json(r#"{"tau":0.8}"#).is_err());
    }

    fn candidate(label: &str, rates: &[(i64, i64)], utility: f64) -> CandidateOutcome {
        let cells: Vec<(String, i64, i64)> = rates
            .iter()
            .enumerate()
            .map(|(i, (f, u))| (format!("g{i}"), *f, *u))
            .collect();
        CandidateOutcome {
            label: label.into(),
            table: GroupOutcomeTable::from_aggregate(cells).unwrap(),
            utility,
        }
    }

    #[test]
    fn ranking_examples() {
        let cfg = config("g0", &[]);
        let m1 = candidate("M1", &[(10, 90), (9, 91)], 10.0); // 0.9
        let m2 = candidate("M2", &[(20, 80), (19, 81)], 9.0); // 0.95
        let order = rank_alternatives(&[m1.clone(), m2.clone()], 8.0, &cfg).unwrap();
        let labels: Vec<_> = order.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["M2", "M1"]);
        assert!((order[0].worst_case_ratio.finite().unwrap() - 0.95).abs() < 1e-12);

        let order = rank_alternatives(&[m1.clone(), m2.clone()], 9.5, &cfg).unwrap();
        assert_eq!(order.len(), 1);
        assert_eq!(order[0].label, "M1");

        assert_eq!(
            rank_alternatives(&[m1.clone(), m2], 11.0, &cfg).unwrap_err(),
            Error::NoSufficientAlternative(11.0)
        );
        assert_eq!(
            rank_alternatives(&[m1.clone(), m1], 0.0, &cfg).unwrap_err(),
            Error::DuplicateCandidate("M1".into())
        );
    }

    #[test]
    fn ranking_ties_and_undefined() {
        let cfg = config("g0", &[]);
        let cands = vec![
            candidate("undef", &[(0, 5), (0, 5)], 100.0),
            candidate("b", &[(1, 1), (1, 1)], 5.0),
            candidate("a", &[(2, 2), (3, 3)], 5.0),
            candidate("c", &[(1, 1), (1, 1)], 7.0),
        ];
        let labels = |v: Vec<RankedAlternative>| v.into_iter().map(|r| r.label).collect::<Vec<_>>();
        let expected = ["c", "a", "b", "undef"];
        assert_eq!(
            labels(rank_alternatives(&cands, 0.0, &cfg).unwrap()),
            expected
        );
        let mut rev = cands.clone();
        rev.reverse();
        assert_eq!(
            labels(rank_alternatives(&rev, 0.0, &cfg).unwrap()),
            expected
        );
    }

    #[test]
    fn types_are_thread_safe() {
        fn assert_send_sync<T: Send + Sync>() {}
        assert_send_sync::<GroupOutcomeTable>();
        assert_send_sync::<AuditReport>();
        assert_send_sync::<AuditConfig>();
        assert_send_sync::<CandidateOutcome>();
    }
}
