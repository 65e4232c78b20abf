use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const DATE_HEADERS: [&str; 5] = ["date", "time", "period", "quarter", "month"];

/// A numeric CSV table. A leading date column, if present, is kept aside as
/// text and never enters the math.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub date: Option<(String, Vec<String>)>,
    pub headers: Vec<String>,
    pub values: DMatrix<f64>,
}

fn is_date_column(header: &str, cells: &[&str]) -> bool {
    if DATE_HEADERS.contains(&header.trim().to_ascii_lowercase().as_str()) {
        return true;
    }
    // every cell non-numeric: a mixed column is a data error instead
    !cells.is_empty()
        && cells
            .iter()
            .all(|c| !c.trim().is_empty() && c.trim().parse::<f64>().is_err())
}

impl Table {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(bytes);
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::InvalidInput(format!("reading CSV header: {e}")))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(Error::InvalidInput("CSV header row is missing".into()));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::InvalidInput(format!("reading CSV: {e}")))?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        if rows.is_empty() {
            return Err(Error::InvalidInput("CSV has no data rows".into()));
        }
        let first: Vec<&str> = rows.iter().map(|(_, r)| r.get(0).unwrap_or("")).collect();
        let skip = usize::from(headers.len() > 1 && is_date_column(&headers[0], &first));
        let date = (skip == 1).then(|| {
            (
                headers[0].clone(),
                first.iter().map(|s| s.trim().to_string()).collect(),
            )
        });

        let names = headers[skip..].to_vec();
        let mut values = DMatrix::zeros(rows.len(), names.len());
        for (i, (line, rec)) in rows.iter().enumerate() {
            for (j, name) in names.iter().enumerate() {
                let cell = rec.get(j + skip).unwrap_or("").trim();
                let at = || format!("line {line} (data row {}), column `{name}`", i + 1);
                if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                    return Err(Error::InvalidInput(format!("missing value at {}", at())));
                }
                let v: f64 = cell.parse().map_err(|_| {
                    Error::InvalidInput(format!("non-numeric value `{cell}` at {}", at()))
                })?;
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "missing or non-finite value `{cell}` at {}",
                        at()
                    )));
                }
                values[(i, j)] = v;
            }
        }
        Ok(Self {
            date,
            headers: names,
            values,
        })
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidInput(format!("no column named `{name}`")))
    }

    /// Rows `first..` of the date column, for outputs that lose leading rows.
    pub fn dates_from(&self, first: usize) -> Option<(&str, &[String])> {
        self.date.as_ref().map(|(h, d)| (h.as_str(), &d[first..]))
    }
}

pub fn write_csv<W: Write>(
    out: W,
    date: Option<(&str, &[String])>,
    headers: &[String],
    values: &DMatrix<f64>,
) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidInput(format!("writing CSV: {e}"));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut head: Vec<&str> = date.iter().map(|(h, _)| *h).collect();
    head.extend(headers.iter().map(String::as_str));
    w.write_record(&head).map_err(io)?;
    for (i, row) in values.row_iter().enumerate() {
        let mut rec: Vec<String> = date.iter().map(|(_, d)| d[i].clone()).collect();
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidInput(format!("writing CSV: {e}")))?;
    Ok(())
}
