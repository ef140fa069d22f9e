use super::{Bar, OhlcvSeries};
use crate::error::{Error, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Maps vendor column headers onto the canonical OHLCV fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub date: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub volume: String,
    /// chrono format string for the date column.
    pub date_format: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            date: "date".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            volume: "volume".into(),
            date_format: "%Y-%m-%d".into(),
        }
    }
}

/// Loads and validates one asset's daily bars.
pub fn load_ohlcv_csv(path: impl AsRef<Path>, asset_id: &str, schema: &ColumnMapping) -> Result<OhlcvSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_ohlcv_csv(file, asset_id, schema)
}

pub fn read_ohlcv_csv<R: Read>(reader: R, asset_id: &str, schema: &ColumnMapping) -> Result<OhlcvSeries> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let idx = [
        col(&schema.date)?,
        col(&schema.open)?,
        col(&schema.high)?,
        col(&schema.low)?,
        col(&schema.close)?,
        col(&schema.volume)?,
    ];
    let names = [&schema.open, &schema.high, &schema.low, &schema.close, &schema.volume];

    let mut bars = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let field = |k: usize| record.get(idx[k]).unwrap_or("");
        let raw_date = field(0);
        let date = NaiveDate::parse_from_str(raw_date, &schema.date_format).map_err(|_| Error::Parse {
            row,
            column: schema.date.clone(),
            value: raw_date.to_string(),
        })?;
        let mut nums = [0.0; 5];
        for k in 0..5 {
            let raw = field(k + 1);
            nums[k] = raw.parse::<f64>().map_err(|_| Error::Parse {
                row,
                column: names[k].clone(),
                value: raw.to_string(),
            })?;
        }
        let [open, high, low, close, volume] = nums;
        let bar = Bar {
            date,
            open,
            high,
            low,
            close,
            volume,
        };
        bar.check().map_err(|reason| Error::InvalidBar { row, date, reason })?;
        if volume <= 0.0 {
            return Err(Error::ZeroVolume(date));
        }
        bars.push(bar);
    }
    OhlcvSeries::new(asset_id, bars)
}

/// Writes `date,value` rows.
pub fn write_series_csv(path: impl AsRef<Path>, dates: &[NaiveDate], values: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(dates.len() * 24);
    out.push_str("date,value\n");
    for (d, v) in dates.iter().zip(values) {
        out.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), v));
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Writes bars in the canonical `date,open,high,low,close,volume` schema.
pub fn write_ohlcv_csv(path: impl AsRef<Path>, series: &OhlcvSeries) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(series.len() * 80);
    out.push_str("date,open,high,low,close,volume\n");
    for b in series.bars() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            b.date.format("%Y-%m-%d"),
            b.open,
            b.high,
            b.low,
            b.close,
            b.volume
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a `date,value` file written by [`write_series_csv`].
pub fn read_series_csv(path: impl AsRef<Path>) -> Result<(Vec<NaiveDate>, Vec<f64>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let (d, v) = (rec.get(0).unwrap_or(""), rec.get(1).unwrap_or(""));
        dates.push(NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|_| Error::Parse {
            row: i + 1,
            column: "date".into(),
            value: d.into(),
        })?);
        values.push(v.parse().map_err(|_| Error::Parse {
            row: i + 1,
            column: "value".into(),
            value: v.into(),
        })?);
    }
    Ok((dates, values))
}
