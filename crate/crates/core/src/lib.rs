//! Group outcome auditing built around selection-rate ratios.
//!
//! The crate ingests per-group favorable/unfavorable counts, computes the
//! raw, symmetrized and categorical worst-case selection-rate ratios, runs the
//! contingency-table significance tests (Pearson χ², Fisher's exact test,
//! goodness of fit against a reference population, two-proportion z) and
//! assembles them into an [`AuditReport`].
//!
//! A selection-rate ratio under the four-fifths threshold is a screening
//! statistic. Reports produced here always carry that disclaimer and never
//! present the ratio as a legal finding.

pub mod audit;
pub mod caveat;
mod error;
pub mod input;
pub mod ratio;
pub mod render;
pub mod significance;
pub mod special;
pub mod table;

pub use audit::{
    classify_evidence, rank_alternatives, run_audit, AuditConfig, AuditReport, CandidateOutcome,
    ComparisonGroups, EvidenceStatus, PairwiseAssessment, PrimaFacieEvidence, RankedAlternative,
    TestRecord, TestScope,
};
pub use caveat::{Caveat, CaveatCode};
pub use error::{Error, Result};
pub use ratio::{
    categorical_worst_case, fair_band, raw_ratio, symmetrized_ratio, DisparityAssessment,
    RatioValue, RatioVariant,
};
pub use significance::{
    fisher_exact_2x2, goodness_of_fit, pearson_chi_squared, two_proportion_z, ContingencyView,
    SignificanceResult, TestMethod,
};
pub use table::{
    GroupCounts, GroupLabel, GroupOutcomeTable, OutcomePolarity, Provenance, ReferenceDistribution,
};
