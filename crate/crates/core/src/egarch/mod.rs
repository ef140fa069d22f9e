//! Skewed Student-t utilities and E-GARCH(1,1) with an AR(1) mean.
//!
//! ```text
//! r_t       = mu + phi r_{t-1} + sigma_t z_t,     z_t ~ SkewT(nu, xi), standardised
//! ln s_t^2  = omega + beta ln s_{t-1}^2 + gamma z_{t-1} + alpha (|z_{t-1}| - E|z|)
//! ```

mod model;
mod skewt;

pub use model::{
    filter, fit_egarch, fit_egarch_with, forecast_one_step, log_likelihood, simulate_egarch, EgarchFit, EgarchParams,
    FilterState, FitOptions,
};
pub use skewt::{skewt_cdf, skewt_pdf, skewt_quantile, SkewT, SkewTParams};

use crate::error::{Error, Result};

/// Probability integral transform of a standardised residual.
pub fn pit(z: f64, dist: &SkewTParams) -> f64 {
    skewt_cdf(z, dist)
}

/// Maps a uniform value back to the shock scale. `u` must lie strictly inside `(0, 1)`.
pub fn inverse_pit(u: f64, dist: &SkewTParams) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "inverse PIT needs u in (0, 1), got {u}"
        )));
    }
    skewt_quantile(u, dist)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pit_round_trip() {
        let d = SkewTParams::new(6.0, 0.9).unwrap();
        for z in [-4.0, -1.2, 0.0, 0.7, 5.0] {
            assert!((inverse_pit(pit(z, &d), &d).unwrap() - z).abs() < 1e-8);
        }
        let sym = SkewTParams::symmetric(7.0).unwrap();
        assert!((pit(0.0, &sym) - 0.5).abs() < 1e-15);
        assert!(inverse_pit(0.0, &d).is_err());
        assert!(inverse_pit(1.0, &d).is_err());
    }
}
