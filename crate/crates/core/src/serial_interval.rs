//! Gamma serial-interval distribution and its daily discretization.
//!
//! The serial interval is modelled as a Gamma distribution parametrized by
//! shape and scale. Day `s` receives the probability mass of the interval
//! `[s - 0.5, s + 0.5)`, except day 1 which collects everything from 0 to 1.5.

use crate::error::{Error, Result};
use crate::special::{ln_gamma, regularized_lower_gamma};

/// Mean of the serial interval, in days.
pub const DEFAULT_MEAN_DAYS: f64 = 7.0;
/// Standard deviation of the serial interval, in days.
pub const DEFAULT_SD_DAYS: f64 = 4.5;
/// Number of daily weights kept after discretization.
pub const DEFAULT_HORIZON: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaParams {
    shape: f64,
    scale: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(Error::Domain {
                what: "gamma shape",
                value: shape,
                reason: "must be positive and finite",
            });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Domain {
                what: "gamma scale",
                value: scale,
                reason: "must be positive and finite",
            });
        }
        Ok(GammaParams { shape, scale })
    }

    /// Moment-matched parameters: shape = mean²/sd², scale = sd²/mean.
    pub fn from_mean_sd(mean: f64, sd: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::Domain {
                what: "serial interval mean",
                value: mean,
                reason: "must be positive and finite",
            });
        }
        if !(sd.is_finite() && sd > 0.0) {
            return Err(Error::Domain {
                what: "serial interval sd",
                value: sd,
                reason: "must be positive and finite",
            });
        }
        let variance = sd * sd;
        GammaParams::new(mean * mean / variance, variance / mean)
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return match self.shape.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => 1.0 / self.scale,
                _ => 0.0,
            };
        }
        let log_pdf = (self.shape - 1.0) * x.ln()
            - x / self.scale
            - ln_gamma(self.shape)
            - self.shape * self.scale.ln();
        log_pdf.exp()
    }

    /// P(T <= x). Negative `x` is a domain error.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::Domain {
                what: "gamma cdf argument",
                value: x,
                reason: "must be non-negative",
            });
        }
        Ok(regularized_lower_gamma(self.shape, x / self.scale))
    }

    // Internal variant for arguments already known to be non-negative.
    fn cdf_unchecked(&self, x: f64) -> f64 {
        regularized_lower_gamma(self.shape, x / self.scale)
    }
}

/// Daily serial-interval weights g_1..g_S.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedSerialInterval {
    weights: Vec<f64>,
}

impl DiscretizedSerialInterval {
    /// Builds an interval from explicit weights (index 0 is lag 1).
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain {
                what: "serial interval horizon",
                value: 0.0,
                reason: "at least one weight is required",
            });
        }
        if let Some(&bad) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Domain {
                what: "serial interval weight",
                value: bad,
                reason: "weights must be finite and non-negative",
            });
        }
        Ok(DiscretizedSerialInterval { weights })
    }

    pub fn horizon(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight for a lag of `lag` days; zero outside `1..=horizon`.
    pub fn weight(&self, lag: usize) -> f64 {
        if lag == 0 {
            0.0
        } else {
            self.weights.get(lag - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Discretizes `params` into `horizon` daily weights.
pub fn discretize(params: &GammaParams, horizon: usize) -> Result<DiscretizedSerialInterval> {
    if horizon < 1 {
        return Err(Error::Domain {
            what: "serial interval horizon",
            value: horizon as f64,
            reason: "must be at least 1",
        });
    }
    let mut weights = Vec::with_capacity(horizon);
    let mut lower = params.cdf_unchecked(1.5);
    weights.push(lower);
    for s in 2..=horizon {
        let upper = params.cdf_unchecked(s as f64 + 0.5);
        weights.push((upper - lower).max(0.0));
        lower = upper;
    }
    Ok(DiscretizedSerialInterval { weights })
}

/// The serial interval used by default: Gamma(mean 7, sd 4.5) over 100 days.
pub fn default_serial_interval() -> DiscretizedSerialInterval {
    let params = GammaParams::from_mean_sd(DEFAULT_MEAN_DAYS, DEFAULT_SD_DAYS)
        .expect("default parameters are valid");
    discretize(&params, DEFAULT_HORIZON).expect("default horizon is valid")
}
