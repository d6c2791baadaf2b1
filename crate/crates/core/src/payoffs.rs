//! Monitoring schedules, path functionals and payoffs.
//!
//! All payoffs have the form `max(omega * (A - K1 * S(T) - K2), 0)` where `A`
//! is the mean, minimum or maximum of the path over the monitoring dates.

use serde::{Deserialize, Serialize};

use crate::stats::mean_se;
use crate::{Error, Result};

/// Relative tolerance used when snapping dates onto the simulation grid.
pub const GRID_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct MonitoringSchedule {
    dates: Vec<f64>,
}

impl MonitoringSchedule {
    pub fn new(dates: Vec<f64>) -> Result<Self> {
        if dates.is_empty() {
            return Err(Error::Empty("monitoring schedule"));
        }
        if dates.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::param("dates", "must be finite and non-negative"));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::param("dates", "must be strictly increasing"));
        }
        Ok(MonitoringSchedule { dates })
    }

    /// `n_intervals + 1` equally spaced dates from 0 to `maturity`, both
    /// included.
    pub fn from_origin(maturity: f64, n_intervals: usize) -> Result<Self> {
        if n_intervals == 0 || maturity <= 0.0 {
            return Err(Error::param(
                "maturity",
                "need a positive maturity and at least one interval",
            ));
        }
        let h = maturity / n_intervals as f64;
        let mut dates: Vec<f64> = (0..=n_intervals).map(|k| k as f64 * h).collect();
        dates[n_intervals] = maturity;
        Self::new(dates)
    }

    /// `count` dates ending at `maturity`, `lag` apart:
    /// `t_n = maturity - (count - n) * lag`.
    pub fn lagged(maturity: f64, count: usize, lag: f64) -> Result<Self> {
        if count == 0 || lag <= 0.0 {
            return Err(Error::param(
                "lag",
                "need at least one date and a positive lag",
            ));
        }
        let dates = (1..=count)
            .map(|n| maturity - (count - n) as f64 * lag)
            .collect();
        Self::new(dates)
    }

    /// Five monthly dates ending at `maturity`.
    pub fn monthly_asian(maturity: f64) -> Result<Self> {
        Self::lagged(maturity, 5, 1.0 / 12.0)
    }

    /// Thirty dates spaced 1/120 apart ending at `maturity`.
    pub fn lookback(maturity: f64) -> Result<Self> {
        Self::lagged(maturity, 30, 1.0 / 120.0)
    }

    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn maturity(&self) -> f64 {
        self.dates[self.dates.len() - 1]
    }

    /// Grid indices `t / dt` of all dates; fails unless every date lies on
    /// the grid (to within [`GRID_TOL`] relative).
    pub fn grid_indices(&self, dt: f64) -> Result<Vec<usize>> {
        self.dates.iter().map(|&t| grid_index(t, dt)).collect()
    }
}

pub fn grid_index(t: f64, dt: f64) -> Result<usize> {
    let k = (t / dt).round();
    if (k * dt - t).abs() > GRID_TOL * t.abs().max(dt) {
        return Err(Error::MisalignedDate { date: t, dt });
    }
    Ok(k as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Aggregator {
    Mean,
    Min,
    Max,
}

impl Aggregator {
    pub fn apply(self, values: &[f64]) -> Result<f64> {
        if values.is_empty() {
            return Err(Error::Empty("path values"));
        }
        Ok(self.apply_unchecked(values))
    }

    pub(crate) fn apply_unchecked(self, values: &[f64]) -> f64 {
        match self {
            Aggregator::Mean => values.iter().sum::<f64>() / values.len() as f64,
            Aggregator::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregator::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl std::str::FromStr for Aggregator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" | "average" => Ok(Aggregator::Mean),
            "min" => Ok(Aggregator::Min),
            "max" => Ok(Aggregator::Max),
            _ => Err(Error::param("aggregator", format!("unknown value `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Omega {
    Call,
    Put,
}

impl Omega {
    pub fn sign(self) -> f64 {
        match self {
            Omega::Call => 1.0,
            Omega::Put => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Result<Self> {
        if s == 1.0 {
            Ok(Omega::Call)
        } else if s == -1.0 {
            Ok(Omega::Put)
        } else {
            Err(Error::param("omega", format!("must be +1 or -1, got {s}")))
        }
    }
}

impl std::str::FromStr for Omega {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "call" | "1" | "+1" => Ok(Omega::Call),
            "put" | "-1" => Ok(Omega::Put),
            _ => Err(Error::param("omega", format!("unknown value `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrikeMode {
    Fixed,
    Floating,
    FixedAndFloating,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffSpec {
    pub aggregator: Aggregator,
    pub omega: Omega,
    pub k1: f64,
    pub k2: f64,
    pub mode: StrikeMode,
}

impl PayoffSpec {
    pub fn fixed(aggregator: Aggregator, omega: Omega, k2: f64) -> Result<Self> {
        Self::build(aggregator, omega, 0.0, k2, StrikeMode::Fixed)
    }

    pub fn floating(aggregator: Aggregator, omega: Omega, k1: f64) -> Result<Self> {
        Self::build(aggregator, omega, k1, 0.0, StrikeMode::Floating)
    }

    pub fn fixed_and_floating(
        aggregator: Aggregator,
        omega: Omega,
        k1: f64,
        k2: f64,
    ) -> Result<Self> {
        Self::build(aggregator, omega, k1, k2, StrikeMode::FixedAndFloating)
    }

    /// Lookback: `A = omega * max(omega * S(t_n))`, i.e. the maximum for a
    /// call and the minimum for a put.
    pub fn lookback(omega: Omega, k2: f64) -> Result<Self> {
        let agg = match omega {
            Omega::Call => Aggregator::Max,
            Omega::Put => Aggregator::Min,
        };
        Self::fixed(agg, omega, k2)
    }

    fn build(
        aggregator: Aggregator,
        omega: Omega,
        k1: f64,
        k2: f64,
        mode: StrikeMode,
    ) -> Result<Self> {
        let spec = PayoffSpec {
            aggregator,
            omega,
            k1,
            k2,
            mode,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k2.is_finite()) {
            return Err(Error::NonFinite("strike"));
        }
        match self.mode {
            StrikeMode::Fixed if self.k1 != 0.0 => {
                Err(Error::param("k1", "must be 0 for a fixed strike"))
            }
            StrikeMode::Floating if self.k2 != 0.0 => {
                Err(Error::param("k2", "must be 0 for a floating strike"))
            }
            StrikeMode::Floating if self.k1 <= 0.0 => {
                Err(Error::param("k1", "must be positive for a floating strike"))
            }
            StrikeMode::FixedAndFloating if self.k1 < 0.0 => {
                Err(Error::param("k1", "must be non-negative"))
            }
            _ => Ok(()),
        }
    }

    pub fn payoff(&self, a: f64, s_t: f64) -> f64 {
        (self.omega.sign() * (a - self.k1 * s_t - self.k2)).max(0.0)
    }
}

/// Monte Carlo price with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceEstimate {
    pub price: f64,
    pub std_err: f64,
}

impl PriceEstimate {
    /// 95% confidence interval `price +- 1.96 SE`.
    pub fn ci95(&self) -> (f64, f64) {
        (
            self.price - 1.96 * self.std_err,
            self.price + 1.96 * self.std_err,
        )
    }
}

/// Discounted sample mean of the payoff. `s_t` is required when the payoff
/// has a floating component.
pub fn mc_price(
    spec: &PayoffSpec,
    a: &[f64],
    s_t: Option<&[f64]>,
    discount: f64,
) -> Result<PriceEstimate> {
    if a.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let values: Vec<f64> = match s_t {
        Some(s) => {
            if s.len() != a.len() {
                return Err(Error::Dimension {
                    context: "terminal values",
                    expected: a.len(),
                    got: s.len(),
                });
            }
            a.iter()
                .zip(s)
                .map(|(&a, &s)| discount * spec.payoff(a, s))
                .collect()
        }
        None => {
            if spec.k1 != 0.0 {
                return Err(Error::param("s_t", "floating strike needs terminal values"));
            }
            a.iter().map(|&a| discount * spec.payoff(a, 0.0)).collect()
        }
    };
    let (price, std_err) = mean_se(&values);
    Ok(PriceEstimate { price, std_err })
}
