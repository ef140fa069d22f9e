//! Daily OHLCV ingestion, Rogers–Satchell volatility components, stationary
//! transforms, winsorisation and the augmented Dickey–Fuller test.

mod adf;
mod io;
mod winsor;

pub use adf::{adf_test, AdfResult};
pub use io::{load_ohlcv_csv, read_ohlcv_csv, read_series_csv, write_ohlcv_csv, write_series_csv, ColumnMapping};
pub use winsor::{winsorize, Winsorizer};

use crate::error::{Error, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// One daily bar. Construct through [`Bar::new`] to get the OHLC invariants checked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: f64,
}

impl Bar {
    pub fn new(date: NaiveDate, open: f64, high: f64, low: f64, close: f64, volume: f64) -> Result<Self> {
        let bar = Bar {
            date,
            open,
            high,
            low,
            close,
            volume,
        };
        bar.check()
            .map_err(|reason| Error::InvalidBar { row: 0, date, reason })?;
        Ok(bar)
    }

    fn check(&self) -> std::result::Result<(), String> {
        for (name, p) in [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
        ] {
            if !(p.is_finite() && p > 0.0) {
                return Err(format!("{name} price {p} is not strictly positive"));
            }
        }
        if !(self.volume.is_finite() && self.volume >= 0.0) {
            return Err(format!("volume {} is negative", self.volume));
        }
        if self.low > self.high {
            return Err(format!("low {} > high {}", self.low, self.high));
        }
        if self.high < self.open.max(self.close) {
            return Err(format!("high {} below max(open, close)", self.high));
        }
        if self.low > self.open.min(self.close) {
            return Err(format!("low {} above min(open, close)", self.low));
        }
        Ok(())
    }
}

/// A validated, gap-free daily series for one asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OhlcvSeries {
    pub asset_id: String,
    bars: Vec<Bar>,
}

impl OhlcvSeries {
    /// Sorts the bars by date and checks bar invariants and calendar completeness.
    pub fn new(asset_id: impl Into<String>, mut bars: Vec<Bar>) -> Result<Self> {
        for (row, b) in bars.iter().enumerate() {
            b.check().map_err(|reason| Error::InvalidBar {
                row: row + 1,
                date: b.date,
                reason,
            })?;
        }
        bars.sort_by_key(|b| b.date);
        for w in bars.windows(2) {
            let gap = (w[1].date - w[0].date).num_days();
            if gap <= 0 {
                return Err(Error::UnorderedDate(w[1].date));
            }
            if gap > 1 {
                return Err(Error::CalendarGap {
                    previous: w[0].date,
                    missing: w[0].date.succ_opt().expect("date in range"),
                });
            }
        }
        Ok(Self {
            asset_id: asset_id.into(),
            bars,
        })
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.bars.iter().map(|b| b.date).collect()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.bars.first().map(|b| b.date)
    }

    /// Bars with `start <= date <= end`.
    pub fn slice(&self, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let bars: Vec<Bar> = self
            .bars
            .iter()
            .filter(|b| b.date >= start && b.date <= end)
            .copied()
            .collect();
        Self::new(self.asset_id.clone(), bars)
    }

    /// Close-to-close simple returns, aligned with `dates()[1..]`.
    pub fn simple_returns(&self) -> Vec<f64> {
        self.bars.windows(2).map(|w| w[1].close / w[0].close - 1.0).collect()
    }
}

/// Upside and downside Rogers–Satchell volatility for one day.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolComponents {
    pub sigma_up: f64,
    pub sigma_down: f64,
}

impl VolComponents {
    /// Full Rogers–Satchell variance.
    pub fn variance(&self) -> f64 {
        self.sigma_up * self.sigma_up + self.sigma_down * self.sigma_down
    }
}

/// Splits the Rogers–Satchell variance into its high-side and low-side terms
/// and takes the square root of each.
pub fn rogers_satchell(bar: &Bar) -> VolComponents {
    let up = (bar.high / bar.close).ln() * (bar.high / bar.open).ln();
    let down = (bar.low / bar.close).ln() * (bar.low / bar.open).ln();
    VolComponents {
        sigma_up: up.max(0.0).sqrt(),
        sigma_down: down.max(0.0).sqrt(),
    }
}

/// Rogers–Satchell variance computed directly from the two-term formula.
pub fn rogers_satchell_variance(bar: &Bar) -> f64 {
    (bar.high / bar.close).ln() * (bar.high / bar.open).ln() + (bar.low / bar.close).ln() * (bar.low / bar.open).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    DeltaLogVolume,
    DeltaSigmaUp,
    DeltaSigmaDown,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::DeltaLogVolume, Metric::DeltaSigmaUp, Metric::DeltaSigmaDown];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::DeltaLogVolume => "delta_log_volume",
            Metric::DeltaSigmaUp => "delta_sigma_up",
            Metric::DeltaSigmaDown => "delta_sigma_down",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

/// A date-indexed stationary series derived from one asset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformedSeries {
    pub asset_id: String,
    pub metric: Metric,
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
}

impl TransformedSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// The three transforms of one asset.
#[derive(Debug, Clone, PartialEq)]
pub struct Transforms {
    pub log_volume: TransformedSeries,
    pub sigma_up: TransformedSeries,
    pub sigma_down: TransformedSeries,
}

impl Transforms {
    pub fn get(&self, metric: Metric) -> &TransformedSeries {
        match metric {
            Metric::DeltaLogVolume => &self.log_volume,
            Metric::DeltaSigmaUp => &self.sigma_up,
            Metric::DeltaSigmaDown => &self.sigma_down,
        }
    }

    pub fn into_vec(self) -> Vec<TransformedSeries> {
        vec![self.log_volume, self.sigma_up, self.sigma_down]
    }
}

/// First differences of log volume and of both Rogers–Satchell components.
pub fn transform(series: &OhlcvSeries) -> Result<Transforms> {
    let bars = series.bars();
    if bars.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} has {} bars, need at least 2",
            series.asset_id,
            bars.len()
        )));
    }
    if let Some(b) = bars.iter().find(|b| b.volume <= 0.0) {
        return Err(Error::ZeroVolume(b.date));
    }
    let vols: Vec<VolComponents> = bars.iter().map(rogers_satchell).collect();
    let dates: Vec<NaiveDate> = bars[1..].iter().map(|b| b.date).collect();
    let mk = |metric, values: Vec<f64>| TransformedSeries {
        asset_id: series.asset_id.clone(),
        metric,
        dates: dates.clone(),
        values,
    };
    Ok(Transforms {
        log_volume: mk(
            Metric::DeltaLogVolume,
            bars.windows(2).map(|w| (w[1].volume / w[0].volume).ln()).collect(),
        ),
        sigma_up: mk(
            Metric::DeltaSigmaUp,
            vols.windows(2).map(|w| w[1].sigma_up - w[0].sigma_up).collect(),
        ),
        sigma_down: mk(
            Metric::DeltaSigmaDown,
            vols.windows(2).map(|w| w[1].sigma_down - w[0].sigma_down).collect(),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 1, day).unwrap()
    }

    fn bar(day: u32, o: f64, h: f64, l: f64, c: f64, v: f64) -> Bar {
        Bar::new(d(day), o, h, l, c, v).unwrap()
    }

    #[test]
    fn flat_day_has_zero_volatility() {
        let vc = rogers_satchell(&bar(1, 100.0, 100.0, 100.0, 100.0, 1.0));
        assert_eq!((vc.sigma_up, vc.sigma_down), (0.0, 0.0));
    }

    #[test]
    fn open_at_high_close_at_low_vanishes() {
        let vc = rogers_satchell(&bar(1, 110.0, 110.0, 95.0, 95.0, 1.0));
        assert_eq!((vc.sigma_up, vc.sigma_down), (0.0, 0.0));
    }

    #[test]
    fn worked_example() {
        // mpmath, 30 digits
        let vc = rogers_satchell(&bar(1, 100.0, 110.0, 95.0, 105.0, 1.0));
        assert!(
            (vc.sigma_up - 0.066_587_018_664_764_09).abs() < 1e-12,
            "{}",
            vc.sigma_up
        );
        assert!(
            (vc.sigma_down - 0.071_649_217_044_483_60).abs() < 1e-12,
            "{}",
            vc.sigma_down
        );
    }

    #[test]
    fn bar_validation() {
        assert!(Bar::new(d(1), 100.0, 104.0, 95.0, 105.0, 1.0).is_err());
        assert!(Bar::new(d(1), 100.0, 110.0, 101.0, 105.0, 1.0).is_err());
        assert!(Bar::new(d(1), -1.0, 110.0, 95.0, 105.0, 1.0).is_err());
        assert!(Bar::new(d(1), 100.0, 110.0, 95.0, 105.0, -1.0).is_err());
    }

    #[test]
    fn series_rejects_gaps_and_duplicates() {
        let b = |day| bar(day, 1.0, 1.0, 1.0, 1.0, 1.0);
        match OhlcvSeries::new("x", vec![b(1), b(2), b(4)]) {
            Err(Error::CalendarGap { missing, .. }) => assert_eq!(missing, d(3)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            OhlcvSeries::new("x", vec![b(1), b(1)]),
            Err(Error::UnorderedDate(_))
        ));
        let s = OhlcvSeries::new("x", vec![b(3), b(1), b(2)]).unwrap();
        assert_eq!(s.dates(), vec![d(1), d(2), d(3)]);
    }

    #[test]
    fn transform_volume_cases() {
        let constant = OhlcvSeries::new("x", (1..=5).map(|i| bar(i, 1.0, 1.0, 1.0, 1.0, 7.0)).collect()).unwrap();
        let t = transform(&constant).unwrap();
        assert_eq!(t.log_volume.len(), 4);
        assert!(t.log_volume.values.iter().all(|&v| v == 0.0));
        assert!(t.sigma_up.values.iter().all(|&v| v == 0.0));
        assert!(t.sigma_down.values.iter().all(|&v| v == 0.0));

        let doubling = OhlcvSeries::new(
            "x",
            (1..=4)
                .map(|i| bar(i, 1.0, 1.0, 1.0, 1.0, 2f64.powi(i as i32)))
                .collect(),
        )
        .unwrap();
        let t = transform(&doubling).unwrap();
        for v in t.log_volume.values {
            assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        }
        assert_eq!(t.log_volume.dates[0], d(2));
    }

    #[test]
    fn transform_rejects_zero_volume() {
        let s = OhlcvSeries::new(
            "x",
            vec![bar(1, 1.0, 1.0, 1.0, 1.0, 1.0), bar(2, 1.0, 1.0, 1.0, 1.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(transform(&s), Err(Error::ZeroVolume(date)) if date == d(2)));
        let short = OhlcvSeries::new("x", vec![bar(1, 1.0, 1.0, 1.0, 1.0, 1.0)]).unwrap();
        assert!(transform(&short).is_err());
    }

    fn arb_bar() -> impl Strategy<Value = (f64, f64, f64, f64)> {
        (0.1f64..1000.0, 0.0f64..0.2, 0.0f64..0.2, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(o, up, dn, a, b)| {
            let high = o * (1.0 + up);
            let low = o * (1.0 - dn * 0.9);
            let close = low + (high - low) * a;
            let _ = b;
            (o, high, low, close)
        })
    }

    proptest! {
        #[test]
        fn components_sum_to_variance((o, h, l, c) in arb_bar()) {
            let b = Bar::new(d(1), o, h, l, c, 1.0).unwrap();
            let vc = rogers_satchell(&b);
            let direct = rogers_satchell_variance(&b);
            prop_assert!((vc.variance() - direct).abs() <= 1e-15 * direct.abs().max(1e-300) + 1e-18);
        }

        #[test]
        fn log_volume_cumsum_recovers_levels(vols in proptest::collection::vec(0.01f64..1e6, 2..40)) {
            let bars: Vec<Bar> = vols.iter().enumerate()
                .map(|(i, &v)| Bar::new(d(1) + chrono::Days::new(i as u64), 1.0, 1.0, 1.0, 1.0, v).unwrap())
                .collect();
            let s = OhlcvSeries::new("x", bars).unwrap();
            let t = transform(&s).unwrap();
            let mut acc = vols[0].ln();
            for (dv, v) in t.log_volume.values.iter().zip(&vols[1..]) {
                acc += dv;
                prop_assert!((acc - v.ln()).abs() < 1e-9);
            }
        }
    }
}
