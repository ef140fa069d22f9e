use crate::error::{Error, Result};
use crate::stats::quantile_sorted;
use serde::{Deserialize, Serialize};

/// Clipping bounds fitted on a training window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Winsorizer {
    pub lower: f64,
    pub upper: f64,
}

impl Winsorizer {
    /// Bounds are linear-interpolation empirical quantiles of `values`.
    pub fn fit(values: &[f64], lower_q: f64, upper_q: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("winsorize input"));
        }
        if !(0.0..=1.0).contains(&lower_q) || !(0.0..=1.0).contains(&upper_q) || lower_q >= upper_q {
            return Err(Error::InvalidArgument(format!(
                "winsorize quantiles must satisfy 0 <= lower < upper <= 1, got ({lower_q}, {upper_q})"
            )));
        }
        let mut s = values.to_vec();
        s.sort_by(f64::total_cmp);
        Ok(Self {
            lower: quantile_sorted(&s, lower_q),
            upper: quantile_sorted(&s, upper_q),
        })
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|v| v.clamp(self.lower, self.upper)).collect()
    }
}

/// Clips `values` to their own `lower_q` / `upper_q` quantiles, preserving order and length.
pub fn winsorize(values: &[f64], lower_q: f64, upper_q: f64) -> Result<Vec<f64>> {
    Ok(Winsorizer::fit(values, lower_q, upper_q)?.apply(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_series_unchanged() {
        let x = vec![3.5; 20];
        assert_eq!(winsorize(&x, 0.01, 0.99).unwrap(), x);
    }

    #[test]
    fn one_to_hundred() {
        let x: Vec<f64> = (1..=100).map(f64::from).collect();
        let w = winsorize(&x, 0.01, 0.99).unwrap();
        // sort-and-clip oracle: h = 99 * 0.01 = 0.99 -> 1 + 0.99 * (2 - 1)
        assert!((w[0] - 1.99).abs() < 1e-12);
        assert!((w[99] - 99.01).abs() < 1e-12);
        assert_eq!(&w[1..99], &x[1..99]);
    }

    #[test]
    fn inside_bounds_unchanged() {
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(winsorize(&x, 0.0, 1.0).unwrap(), x);
    }

    #[test]
    fn errors() {
        assert!(winsorize(&[], 0.01, 0.99).is_err());
        assert!(winsorize(&[1.0], 0.5, 0.5).is_err());
        assert!(winsorize(&[1.0], -0.1, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn fitted_bounds_are_idempotent(x in proptest::collection::vec(-1e3f64..1e3, 1..200)) {
            let w = Winsorizer::fit(&x, 0.01, 0.99).unwrap();
            let once = w.apply(&x);
            prop_assert_eq!(w.apply(&once), once.clone());
            prop_assert_eq!(once.len(), x.len());
        }

        #[test]
        fn refit_changes_at_most_the_clipped_tails(x in proptest::collection::vec(-1e3f64..1e3, 2..200)) {
            let once = winsorize(&x, 0.05, 0.95).unwrap();
            let twice = winsorize(&once, 0.05, 0.95).unwrap();
            let w = Winsorizer::fit(&x, 0.05, 0.95).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                if *a > w.lower && *a < w.upper {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }
}
