//! Caveat codes attached to assessments, test results and reports.

use serde::{Deserialize, Serialize};

/// Declaration order is the canonical order used when caveats are listed in
/// a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CaveatCode {
    NotALegalFinding,
    SmallNumbers,
    SmallerDifferencesSignificant,
    DegenerateRates,
    ExcludedEmptyGroups,
    LowExpectedCell,
}

impl CaveatCode {
    pub const ALL: [CaveatCode; 6] = [
        CaveatCode::NotALegalFinding,
        CaveatCode::SmallNumbers,
        CaveatCode::SmallerDifferencesSignificant,
        CaveatCode::DegenerateRates,
        CaveatCode::ExcludedEmptyGroups,
        CaveatCode::LowExpectedCell,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CaveatCode::NotALegalFinding => "NOT_A_LEGAL_FINDING",
            CaveatCode::SmallNumbers => "SMALL_NUMBERS",
            CaveatCode::SmallerDifferencesSignificant => "SMALLER_DIFFERENCES_SIGNIFICANT",
            CaveatCode::DegenerateRates => "DEGENERATE_RATES",
            CaveatCode::ExcludedEmptyGroups => "EXCLUDED_EMPTY_GROUPS",
            CaveatCode::LowExpectedCell => "LOW_EXPECTED_CELL",
        }
    }

    /// Fixed message template for the code.
    pub fn message(self) -> &'static str {
        match self {
            CaveatCode::NotALegalFinding => {
                "The figures in this report are descriptive statistics about selection rates. \
                 They are not a legal finding of discrimination and cannot establish one on their own."
            }
            CaveatCode::SmallNumbers => {
                "A selection-rate ratio is at or below the threshold, but no significance test \
                 rejects equal rates at the configured alpha. Under 29 CFR 1607.4(D), larger \
                 differences based on small numbers that are not statistically significant may \
                 not constitute adverse impact."
            }
            CaveatCode::SmallerDifferencesSignificant => {
                "No selection-rate ratio reaches the threshold, but at least one significance \
                 test rejects equal rates at the configured alpha. Under 29 CFR 1607.4(D), \
                 smaller differences may still constitute adverse impact when they are \
                 significant in statistical and practical terms."
            }
            CaveatCode::DegenerateRates => {
                "At least one compared group has a selection rate of zero, so the ratio is zero, \
                 infinite or undefined."
            }
            CaveatCode::ExcludedEmptyGroups => {
                "Groups without any observations were excluded from the comparison."
            }
            CaveatCode::LowExpectedCell => {
                "At least one expected cell count is below 5; the chi-squared approximation may \
                 be unreliable for these numbers."
            }
        }
    }
}

impl std::fmt::Display for CaveatCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caveat {
    pub code: CaveatCode,
    pub message: String,
}

impl From<CaveatCode> for Caveat {
    fn from(code: CaveatCode) -> Self {
        Caveat {
            code,
            message: code.message().to_owned(),
        }
    }
}

/// Appends `code` unless it is already present.
pub(crate) fn push_unique(list: &mut Vec<CaveatCode>, code: CaveatCode) {
    if !list.contains(&code) {
        list.push(code);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serde_name_matches_code() {
        for code in CaveatCode::ALL {
            let json = serde_json::to_string(&code).unwrap();
            assert_eq!(json, format!("\"{}\"", code.as_str()));
        }
    }

    #[test]
    fn messages_avoid_the_conflated_label() {
        for code in CaveatCode::ALL {
            assert!(!code.message().to_lowercase().contains("disparate impact"));
        }
    }
}
