use crate::error::{Error, Result};
use crate::factors::FactorId;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Which E-GARCH output of a factor feeds the features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    UniformResidual,
    ConditionalVolatility,
}

impl Channel {
    pub const ALL: [Channel; 2] = [Channel::UniformResidual, Channel::ConditionalVolatility];

    pub fn short(self) -> &'static str {
        match self {
            Channel::UniformResidual => "u",
            Channel::ConditionalVolatility => "vol",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub sources: Vec<(FactorId, Channel)>,
    pub lags: Vec<usize>,
    pub moving_averages: Vec<usize>,
}

impl FeatureSpec {
    /// Both channels of each factor, lags 1/7/30 and 7/30-day means.
    pub fn new(factors: &[FactorId]) -> Self {
        Self {
            sources: factors
                .iter()
                .flat_map(|f| Channel::ALL.into_iter().map(move |c| (*f, c)))
                .collect(),
            lags: vec![1, 7, 30],
            moving_averages: vec![7, 30],
        }
    }

    pub fn with_horizons(mut self, lags: &[usize], moving_averages: &[usize]) -> Self {
        self.lags = lags.to_vec();
        self.moving_averages = moving_averages.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::InvalidArgument("feature spec has no sources".into()));
        }
        if self.lags.iter().chain(&self.moving_averages).any(|k| *k == 0) {
            return Err(Error::InvalidArgument("lags and windows must be at least 1".into()));
        }
        if self.lags.is_empty() && self.moving_averages.is_empty() {
            return Err(Error::InvalidArgument("feature spec has no lags or windows".into()));
        }
        Ok(())
    }

    /// Longest look-back, in observations ending at the as-of day.
    pub fn lookback(&self) -> usize {
        self.lags
            .iter()
            .chain(&self.moving_averages)
            .copied()
            .max()
            .unwrap_or(1)
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (f, c) in &self.sources {
            for k in &self.lags {
                out.push(format!("{f}_{}_lag{k}", c.short()));
            }
            for w in &self.moving_averages {
                out.push(format!("{f}_{}_ma{w}", c.short()));
            }
        }
        out
    }

    pub fn factors(&self) -> Vec<FactorId> {
        let mut v: Vec<FactorId> = self.sources.iter().map(|(f, _)| *f).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Daily channel values per factor on a shared calendar.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelData {
    pub dates: Vec<NaiveDate>,
    pub series: BTreeMap<(FactorId, Channel), Vec<f64>>,
}

impl ChannelData {
    pub fn get(&self, factor: FactorId, channel: Channel) -> Result<&[f64]> {
        self.series
            .get(&(factor, channel))
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidArgument(format!("no {} channel for {factor}", channel.short())))
    }
}

/// Feature row for forecasting day `t + 1` from data up to and including `t`.
///
/// Lag k is the value k days before the forecast day, so lag 1 is the as-of
/// value; a w-day mean averages the w values ending at the as-of day.
pub fn feature_row(data: &ChannelData, spec: &FeatureSpec, t: usize) -> Result<Vec<f64>> {
    if t < spec.lookback() {
        return Err(Error::InsufficientData(format!(
            "features need {} days of history before the as-of day, got {t}",
            spec.lookback()
        )));
    }
    let mut row = Vec::with_capacity(spec.sources.len() * (spec.lags.len() + spec.moving_averages.len()));
    for (f, c) in &spec.sources {
        let x = data.get(*f, *c)?;
        if t >= x.len() {
            return Err(Error::InvalidArgument(format!(
                "as-of index {t} beyond {} observations",
                x.len()
            )));
        }
        row.extend(spec.lags.iter().map(|k| x[t + 1 - k]));
        row.extend(
            spec.moving_averages
                .iter()
                .map(|w| x[t + 1 - w..=t].iter().sum::<f64>() / *w as f64),
        );
    }
    Ok(row)
}

/// [`feature_row`] addressed by calendar date.
pub fn build_features(data: &ChannelData, spec: &FeatureSpec, as_of: NaiveDate) -> Result<Vec<f64>> {
    let t = data
        .dates
        .binary_search(&as_of)
        .map_err(|_| Error::InvalidArgument(format!("as-of date {as_of} not in the channel calendar")))?;
    feature_row(data, spec, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::Market;
    use crate::market_data::Metric;
    use proptest::prelude::*;

    const F: FactorId = FactorId::new(Market::Crypto, Metric::DeltaSigmaUp);

    fn data(values: Vec<f64>) -> ChannelData {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let dates = (0..values.len()).map(|i| d0 + chrono::Days::new(i as u64)).collect();
        let mut series = BTreeMap::new();
        series.insert((F, Channel::UniformResidual), values.clone());
        series.insert(
            (F, Channel::ConditionalVolatility),
            values.iter().map(|v| 2.0 * v).collect(),
        );
        ChannelData { dates, series }
    }

    #[test]
    fn names_and_layout() {
        let spec = FeatureSpec::new(&[F]);
        assert_eq!(spec.names().len(), 10);
        assert_eq!(spec.names()[0], "sigma_C_up_u_lag1");
        assert_eq!(spec.names()[9], "sigma_C_up_vol_ma30");
        assert_eq!(spec.lookback(), 30);
    }

    #[test]
    fn ramp_series() {
        let d = data((1..=100).map(|v| v as f64).collect());
        let spec = FeatureSpec::new(&[F]);
        let t = 60;
        let row = feature_row(&d, &spec, t).unwrap();
        let v = |i: usize| (i + 1) as f64;
        // Forecast day is t + 1: lag k is value_{t+1-k}.
        assert_eq!(&row[..3], &[v(t), v(t - 6), v(t - 29)]);
        assert_eq!(row[3], v(t - 3));
        assert_eq!(row[4], (v(t - 29) + v(t)) / 2.0);
        assert_eq!(row[5], 2.0 * v(t));
        let by_date = build_features(&d, &spec, d.dates[t]).unwrap();
        assert_eq!(by_date, row);
    }

    #[test]
    fn constant_channel() {
        let d = data(vec![0.25; 40]);
        let row = feature_row(&d, &FeatureSpec::new(&[F]), 35).unwrap();
        assert!(row[..5].iter().all(|x| *x == 0.25));
        assert!(row[5..].iter().all(|x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn insufficient_history() {
        let d = data(vec![1.0; 40]);
        let spec = FeatureSpec::new(&[F]);
        assert!(matches!(feature_row(&d, &spec, 29), Err(Error::InsufficientData(_))));
        assert!(feature_row(&d, &spec, 30).is_ok());
        assert!(feature_row(&d, &spec, 40).is_err());
    }

    proptest! {
        #[test]
        fn appending_future_days_never_changes_a_row(
            values in prop::collection::vec(-10.0f64..10.0, 45..80),
            extra in prop::collection::vec(-10.0f64..10.0, 1..20),
        ) {
            let spec = FeatureSpec::new(&[F]);
            let t = values.len() - 1;
            let before = feature_row(&data(values.clone()), &spec, t).unwrap();
            let mut longer = values;
            longer.extend(extra);
            prop_assert_eq!(before, feature_row(&data(longer), &spec, t).unwrap());
        }
    }
}
