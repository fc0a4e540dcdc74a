use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Prior variance of the level at the first observation.
pub const INITIAL_VARIANCE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    None,
    Reactive,
    Default,
    Smooth,
}

impl Smoothing {
    pub const ALL: [Smoothing; 4] = [Smoothing::None, Smoothing::Reactive, Smoothing::Default, Smoothing::Smooth];

    pub fn as_str(self) -> &'static str {
        match self {
            Smoothing::None => "none",
            Smoothing::Reactive => "reactive",
            Smoothing::Default => "default",
            Smoothing::Smooth => "smooth",
        }
    }
}

impl std::fmt::Display for Smoothing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Smoothing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Smoothing::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::Argument(format!("unknown smoothing `{s}` (none, reactive, default, smooth)")))
    }
}

/// Signal-to-noise ratios q/r of the three presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresetTable {
    pub reactive: f64,
    pub default: f64,
    pub smooth: f64,
}

impl Default for PresetTable {
    fn default() -> Self {
        PresetTable { reactive: 1.0, default: 0.1, smooth: 0.01 }
    }
}

impl PresetTable {
    pub fn q_over_r(&self, smoothing: Smoothing) -> Option<f64> {
        match smoothing {
            Smoothing::None => None,
            Smoothing::Reactive => Some(self.reactive),
            Smoothing::Default => Some(self.default),
            Smoothing::Smooth => Some(self.smooth),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("reactive", self.reactive), ("default", self.default), ("smooth", self.smooth)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid("preset table", format!("{name} q/r must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Local-level model: x_t = x_{t-1} + w_t with Var w = q, y_t = x_t + v_t
/// with Var v = r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalLevelFilter<T> {
    q: T,
    r: T,
    level: Option<T>,
    variance: T,
    gain: T,
}

impl<T: Scalar> LocalLevelFilter<T> {
    /// `r` is fixed at 1.
    pub fn new(q_over_r: T) -> Self {
        LocalLevelFilter {
            q: q_over_r,
            r: T::one(),
            level: None,
            variance: T::lit(INITIAL_VARIANCE),
            gain: T::zero(),
        }
    }

    pub fn level(&self) -> Option<T> {
        self.level
    }

    pub fn variance(&self) -> T {
        self.variance
    }

    /// Gain of the most recent update; zero before any.
    pub fn gain(&self) -> T {
        self.gain
    }

    /// Time step without an observation.
    pub fn predict(&mut self) {
        if self.level.is_some() {
            self.variance += self.q;
        }
    }

    /// Time step with an observation. The first observation initialises the
    /// level and is returned unchanged.
    pub fn step(&mut self, y: T) -> T {
        let Some(x) = self.level else {
            self.level = Some(y);
            return y;
        };
        let prior = self.variance + self.q;
        let k = prior / (prior + self.r);
        let x = x + k * (y - x);
        self.gain = k;
        self.variance = (T::one() - k) * prior;
        self.level = Some(x);
        x
    }
}

/// Forward-filtered level for each point. Calendar gaps between dates and
/// null values are predict-only steps. Dates must be strictly increasing.
pub fn kalman_smooth<T: Scalar>(series: &[(NaiveDate, Option<T>)], q_over_r: T) -> Result<Vec<Option<T>>> {
    if !(q_over_r.is_finite() && q_over_r > T::zero()) {
        return Err(Error::Argument("q/r must be positive".into()));
    }
    let mut filter = LocalLevelFilter::new(q_over_r);
    let mut out = Vec::with_capacity(series.len());
    let mut prev: Option<NaiveDate> = None;
    for &(date, y) in series {
        if let Some(p) = prev {
            let gap = (date - p).num_days();
            if gap <= 0 {
                return Err(Error::Argument(format!("dates not strictly increasing at {date}")));
            }
            for _ in 1..gap {
                filter.predict();
            }
        }
        prev = Some(date);
        match y {
            Some(y) if y.is_finite() => {
                filter.step(y);
            }
            _ => filter.predict(),
        }
        out.push(filter.level());
    }
    Ok(out)
}
