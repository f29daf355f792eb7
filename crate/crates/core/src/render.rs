//! Deterministic JSON and Markdown rendering.
//!
//! JSON keys follow struct declaration order and every floating-point number
//! is rounded to at most 12 significant digits, so identical inputs render to
//! identical bytes and a parsed report re-renders unchanged.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::audit::{AuditReport, RankedAlternative, TestRecord};
use crate::error::Result;
use crate::ratio::{DisparityAssessment, RatioValue};
use crate::significance::SignificanceResult;

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n
                .as_f64()
                .map(round_sig)
                .and_then(serde_json::Number::from_f64)
            {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with rounded numbers and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut tree = serde_json::to_value(value)?;
    round_value(&mut tree);
    let mut out = serde_json::to_string_pretty(&tree)?;
    out.push('\n');
    Ok(out)
}

pub fn report_from_json(text: &str) -> Result<AuditReport> {
    Ok(serde_json::from_str(text)?)
}

/// Number formatting for Markdown: rounded, plain decimal in the usual
/// range, exponent form for very small or very large magnitudes.
pub fn format_number(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        "0".into()
    } else if r.abs() < 1e-4 || r.abs() >= 1e12 {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn format_ratio(v: &RatioValue) -> String {
    match v {
        RatioValue::Finite { value } => format_number(*value),
        RatioValue::Undefined => "undefined".into(),
        RatioValue::Infinite => "infinite".into(),
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn codes(list: &[crate::caveat::CaveatCode]) -> String {
    if list.is_empty() {
        "-".into()
    } else {
        list.iter()
            .map(|c| c.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn groups(list: &[crate::table::GroupLabel]) -> String {
    list.iter()
        .map(|g| g.as_str())
        .collect::<Vec<_>>()
        .join(" vs ")
}

const ASSESSMENT_HEADER: &str =
    "| variant | comparison | reference | value | tau | flagged | excluded | caveats |\n|---|---|---|---|---|---|---|---|\n";

fn assessment_row(out: &mut String, a: &DisparityAssessment) {
    let excluded: Vec<&str> = a.excluded_groups.iter().map(|g| g.as_str()).collect();
    let _ = writeln!(
        out,
        "| {} | {} | {} | {} | {} | {} | {} | {} |",
        a.variant.as_str(),
        opt(a.comparison_group.as_ref()),
        opt(a.reference_group.as_ref()),
        format_ratio(&a.value),
        format_number(a.threshold_tau),
        yes_no(a.flagged),
        if excluded.is_empty() {
            "-".to_string()
        } else {
            excluded.join(", ")
        },
        codes(&a.caveats),
    );
}

pub fn assessment_markdown(a: &DisparityAssessment) -> String {
    let mut out = format!("# {}\n\n", a.metric.as_str());
    out.push_str(ASSESSMENT_HEADER);
    assessment_row(&mut out, a);
    out
}

const TEST_HEADER: &str =
    "| method | groups | statistic | dof | p-value | continuity correction | signed z | caveats |\n|---|---|---|---|---|---|---|---|\n";

fn test_row(out: &mut String, scope: &str, r: &SignificanceResult) {
    let _ = writeln!(
        out,
        "| {} | {} | {} | {} | {} | {} | {} | {} |",
        r.method.as_str(),
        scope,
        format_number(r.statistic),
        opt(r.dof),
        format_number(r.p_value),
        yes_no(r.continuity_correction),
        r.signed_z.map(format_number).unwrap_or_else(|| "-".into()),
        codes(&r.caveats),
    );
}

pub fn test_markdown(r: &SignificanceResult, scope: &str) -> String {
    let mut out = String::from("# Significance test\n\n");
    out.push_str(TEST_HEADER);
    test_row(&mut out, scope, r);
    out
}

pub fn ranking_markdown(ranking: &[RankedAlternative]) -> String {
    let mut out = String::from(
        "# Alternatives ranked by worst-case selection-rate ratio\n\n| rank | label | worst-case ratio | flagged | utility |\n|---|---|---|---|---|\n",
    );
    for (i, r) in ranking.iter().enumerate() {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            i + 1,
            r.label,
            format_ratio(&r.worst_case_ratio),
            yes_no(r.flagged),
            format_number(r.utility)
        );
    }
    out
}

fn test_record_row(out: &mut String, t: &TestRecord) {
    let scope = format!(
        "{} ({})",
        match t.scope {
            crate::audit::TestScope::Pairwise => "pairwise",
            crate::audit::TestScope::Overall => "overall",
        },
        groups(&t.groups)
    );
    test_row(out, &scope, &t.result);
}

pub fn report_markdown(report: &AuditReport) -> String {
    let mut out = String::from("# Selection-rate audit report\n\n");
    let _ = writeln!(out, "## Disclaimer\n\n{}\n", report.disclaimer);
    let _ = writeln!(
        out,
        "## Regulatory context\n\n{}\n",
        report.regulatory_context
    );

    let c = &report.config;
    out.push_str("## Configuration\n\n");
    let _ = writeln!(
        out,
        "- protected_field: {}",
        opt(c.protected_field.as_deref())
    );
    let _ = writeln!(out, "- outcome_field: {}", opt(c.outcome_field.as_deref()));
    let _ = writeln!(
        out,
        "- polarity: {}",
        c.polarity
            .as_ref()
            .map(|p| {
                let unfav = p
                    .unfavorable_values()
                    .map(|s| s.iter().cloned().collect::<Vec<_>>().join(", "))
                    .unwrap_or_else(|| "everything else".into());
                format!(
                    "favorable = {}; unfavorable = {}",
                    p.favorable_value(),
                    unfav
                )
            })
            .unwrap_or_else(|| "-".into())
    );
    let _ = writeln!(out, "- reference_group: {}", c.reference_group);
    let _ = writeln!(
        out,
        "- comparison_groups: {}",
        match &c.comparison_groups {
            crate::audit::ComparisonGroups::AllOthers => "all_others".to_string(),
            crate::audit::ComparisonGroups::Listed(v) =>
                v.iter().map(|g| g.as_str()).collect::<Vec<_>>().join(", "),
        }
    );
    let _ = writeln!(
        out,
        "- reference_distribution: {}",
        c.reference_distribution
            .as_ref()
            .map(|d| d
                .iter()
                .map(|(g, p)| format!("{g} = {}", format_number(p)))
                .collect::<Vec<_>>()
                .join(", "))
            .unwrap_or_else(|| "-".into())
    );
    let _ = writeln!(out, "- tau: {}", format_number(c.tau));
    let _ = writeln!(out, "- alpha: {}", format_number(c.alpha));
    let _ = writeln!(
        out,
        "- tests: {}",
        c.tests
            .iter()
            .map(|t| t.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(out, "- yates: {}", c.yates);
    let _ = writeln!(out, "- fail_on_flag: {}\n", c.fail_on_flag);

    let t = &report.table;
    out.push_str("## Groups\n\n| group | favorable | unfavorable | total | selection rate |\n|---|---|---|---|---|\n");
    for g in &t.groups {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            g.group,
            g.favorable,
            g.unfavorable,
            g.total,
            g.selection_rate
                .map(format_number)
                .unwrap_or_else(|| "-".into())
        );
    }
    let _ = writeln!(
        out,
        "\nTotal observations: {}. Polarity flipped: {}.\n",
        t.total,
        yes_no(t.polarity_flipped)
    );

    let e = &report.evidence;
    out.push_str("## Selection-rate ratios\n\n");
    out.push_str(ASSESSMENT_HEADER);
    for p in &e.pairwise {
        assessment_row(&mut out, &p.raw);
        assessment_row(&mut out, &p.symmetrized);
    }
    assessment_row(&mut out, &e.overall);
    out.push('\n');

    out.push_str("## Significance tests\n\n");
    if e.tests.is_empty() {
        out.push_str("No tests were run.\n\n");
    } else {
        out.push_str(TEST_HEADER);
        for r in &e.tests {
            test_record_row(&mut out, r);
        }
        out.push('\n');
    }
    if !e.skipped_tests.is_empty() {
        out.push_str("Skipped tests:\n\n");
        for s in &e.skipped_tests {
            let _ = writeln!(
                out,
                "- {} ({}): {}",
                s.method.as_str(),
                groups(&s.groups),
                s.reason
            );
        }
        out.push('\n');
    }

    out.push_str("## Evidence status\n\n");
    let _ = writeln!(
        out,
        "- flagged_any: {}\n- significant_any: {}\n- evidence_status: {}\n",
        e.flagged_any,
        e.significant_any,
        e.evidence_status.as_str()
    );

    out.push_str("## Caveats\n\n");
    for c in &report.caveats {
        let _ = writeln!(out, "- **{}**: {}", c.code.as_str(), c.message);
    }
    if !report.notices.is_empty() {
        out.push_str("\n## Notices\n\n");
        for n in &report.notices {
            let _ = writeln!(out, "- {n}");
        }
    }
    out
}
