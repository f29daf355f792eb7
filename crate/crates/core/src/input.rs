//! CSV ingestion.
//!
//! Two layouts are accepted. The aggregated layout has the header
//! `group,favorable,unfavorable` and one row per group. Anything else is read
//! as row-level data: one record per decision, with the protected and
//! outcome columns named by the caller.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::table::{GroupOutcomeTable, OutcomePolarity, RowCounter};

pub const AGGREGATE_HEADER: [&str; 3] = ["group", "favorable", "unfavorable"];

/// Column names and polarity needed to count row-level data.
#[derive(Debug, Clone, Default)]
pub struct RowSpec {
    pub protected_field: Option<String>,
    pub outcome_field: Option<String>,
    pub polarity: Option<OutcomePolarity>,
}

pub fn is_aggregate_header(headers: &csv::StringRecord) -> bool {
    headers.len() == AGGREGATE_HEADER.len()
        && headers.iter().zip(AGGREGATE_HEADER).all(|(h, e)| h == e)
}

/// Reads either layout, sniffing the header.
pub fn read_table<R: Read>(reader: R, spec: &RowSpec) -> Result<GroupOutcomeTable> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if is_aggregate_header(&headers) {
        read_aggregate_records(rdr)
    } else {
        let protected = spec
            .protected_field
            .as_deref()
            .ok_or(Error::MissingRowSpec("a protected field name"))?;
        let outcome = spec
            .outcome_field
            .as_deref()
            .ok_or(Error::MissingRowSpec("an outcome field name"))?;
        let polarity = spec
            .polarity
            .as_ref()
            .ok_or(Error::MissingRowSpec("a favorable outcome value"))?;
        read_row_records(rdr, &headers, protected, outcome, polarity)
    }
}

pub fn load_table(path: &Path, spec: &RowSpec) -> Result<GroupOutcomeTable> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_table(file, spec)
}

/// Reads the aggregated layout; the header must match exactly.
pub fn read_aggregate_csv<R: Read>(reader: R) -> Result<GroupOutcomeTable> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if !is_aggregate_header(&headers) {
        return Err(Error::Csv(format!(
            "aggregated input must have header `{}`",
            AGGREGATE_HEADER.join(",")
        )));
    }
    read_aggregate_records(rdr)
}

pub fn read_rows_csv<R: Read>(
    reader: R,
    protected_field: &str,
    outcome_field: &str,
    polarity: &OutcomePolarity,
) -> Result<GroupOutcomeTable> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    read_row_records(rdr, &headers, protected_field, outcome_field, polarity)
}

fn read_aggregate_records<R: Read>(mut rdr: csv::Reader<R>) -> Result<GroupOutcomeTable> {
    let mut triples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = i + 2;
        if record.len() != 3 {
            return Err(Error::Csv(format!(
                "line {line}: expected 3 fields, found {}",
                record.len()
            )));
        }
        let parse = |idx: usize| -> Result<i64> {
            let raw = record[idx].trim();
            raw.parse::<i64>()
                .map_err(|_| Error::Csv(format!("line {line}: `{raw}` is not a decimal integer")))
        };
        triples.push((record[0].to_owned(), parse(1)?, parse(2)?));
    }
    GroupOutcomeTable::from_aggregate(triples)
}

fn read_row_records<R: Read>(
    mut rdr: csv::Reader<R>,
    headers: &csv::StringRecord,
    protected_field: &str,
    outcome_field: &str,
    polarity: &OutcomePolarity,
) -> Result<GroupOutcomeTable> {
    let mut counter = RowCounter::new(protected_field, outcome_field, polarity);
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let get = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .and_then(|i| record.get(i))
        };
        let present = headers.iter().take(record.len());
        counter.push(get, present)?;
    }
    counter.finish()
}
