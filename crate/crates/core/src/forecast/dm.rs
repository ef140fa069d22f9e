use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Adjustment {
    None,
    ClarkWest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmReport {
    pub dm_stat: f64,
    pub dm_hln: f64,
    /// One-sided: small values favour the challenger.
    pub p_value: f64,
    pub mean_differential: f64,
    pub std_error: f64,
    pub adjustment: Adjustment,
    pub n: usize,
    /// The loss differential had zero variance; statistics are 0 and p = 1.
    pub degenerate: bool,
}

/// Loss differentials `e_B² − e_C²`, plus `(ŷ_B − ŷ_C)²` under Clark–West.
pub fn loss_differential(
    y_true: &[f64],
    y_hat_benchmark: &[f64],
    y_hat_challenger: &[f64],
    adjustment: Adjustment,
) -> Result<Vec<f64>> {
    let n = y_true.len();
    for len in [y_hat_benchmark.len(), y_hat_challenger.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    Ok((0..n)
        .map(|t| {
            let eb = y_true[t] - y_hat_benchmark[t];
            let ec = y_true[t] - y_hat_challenger[t];
            let d = eb * eb - ec * ec;
            match adjustment {
                Adjustment::None => d,
                Adjustment::ClarkWest => {
                    let gap = y_hat_benchmark[t] - y_hat_challenger[t];
                    d + gap * gap
                }
            }
        })
        .collect())
}

/// Diebold–Mariano test on a loss differential with the Harvey–Leybourne–Newbold
/// small-sample correction. The long-run variance uses Newey–West weights up
/// to lag `horizon − 1`, which is the plain (1/T) sample variance at horizon 1.
pub fn dm_test_differential(d: &[f64], horizon: usize, adjustment: Adjustment) -> Result<DmReport> {
    let n = d.len();
    if n < 30 {
        return Err(Error::InsufficientData(format!(
            "DM test needs at least 30 forecasts, got {n}"
        )));
    }
    if horizon == 0 || horizon >= n {
        return Err(Error::InvalidArgument(format!("invalid DM horizon {horizon}")));
    }
    Ok(dm_statistics(d, horizon, adjustment))
}

/// The statistics of [`dm_test_differential`] without its sample-size and
/// horizon checks. `horizon` must be at least 1 and below `d.len()`.
pub fn dm_statistics(d: &[f64], horizon: usize, adjustment: Adjustment) -> DmReport {
    let n = d.len();
    let t = n as f64;
    let mean = d.iter().sum::<f64>() / t;
    let autocov = |k: usize| (k..n).map(|i| (d[i] - mean) * (d[i - k] - mean)).sum::<f64>() / t;
    let lrv = autocov(0) + 2.0 * (1..horizon).map(autocov).sum::<f64>();
    if d.iter().all(|x| *x == d[0]) || !(lrv > 0.0) {
        return DmReport {
            dm_stat: 0.0,
            dm_hln: 0.0,
            p_value: 1.0,
            mean_differential: mean,
            std_error: 0.0,
            adjustment,
            n,
            degenerate: true,
        };
    }
    let se = (lrv / t).sqrt();
    let dm = mean / se;
    let h = horizon as f64;
    let hln = dm * ((t + 1.0 - 2.0 * h + h * (h - 1.0) / t) / t).sqrt();
    let dist = StudentsT::new(0.0, 1.0, t - 1.0).expect("positive degrees of freedom");
    DmReport {
        dm_stat: dm,
        dm_hln: hln,
        p_value: 1.0 - dist.cdf(hln),
        mean_differential: mean,
        std_error: se,
        adjustment,
        n,
        degenerate: false,
    }
}

/// One-step DM test of challenger against benchmark forecasts. With `nested`
/// the Clark–West adjusted differential is used.
pub fn dm_test(y_true: &[f64], y_hat_benchmark: &[f64], y_hat_challenger: &[f64], nested: bool) -> Result<DmReport> {
    let adjustment = if nested {
        Adjustment::ClarkWest
    } else {
        Adjustment::None
    };
    let d = loss_differential(y_true, y_hat_benchmark, y_hat_challenger, adjustment)?;
    dm_test_differential(&d, 1, adjustment)
}
