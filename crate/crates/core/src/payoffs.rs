//! Discretely monitored payoffs evaluated on log-price grids `X_{jh}`,
//! `j = 0..=n`, with `S_t = S0 exp(X_t)`. All payoffs are discounted.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{max_of, PathGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    #[serde(rename = "asian")]
    AsianCall,
    #[serde(rename = "lookback")]
    LookbackPut,
    #[serde(rename = "barrier")]
    UpOutBarrierCall,
}

impl OptionKind {
    pub const ALL: [OptionKind; 3] = [
        OptionKind::AsianCall,
        OptionKind::LookbackPut,
        OptionKind::UpOutBarrierCall,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            OptionKind::AsianCall => "asian",
            OptionKind::LookbackPut => "lookback",
            OptionKind::UpOutBarrierCall => "barrier",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "asian" => Ok(OptionKind::AsianCall),
            "lookback" => Ok(OptionKind::LookbackPut),
            "barrier" => Ok(OptionKind::UpOutBarrierCall),
            other => Err(Error::Config(format!("unknown option kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub spot: f64,
    pub strike: f64,
    /// Knock-out level; only used by the barrier option.
    pub barrier: Option<f64>,
    pub maturity: f64,
    pub rate: f64,
}

impl OptionSpec {
    pub fn new(
        kind: OptionKind,
        spot: f64,
        strike: f64,
        barrier: Option<f64>,
        maturity: f64,
        rate: f64,
    ) -> Result<Self> {
        let spec = Self {
            kind,
            spot,
            strike,
            barrier,
            maturity,
            rate,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Arithmetic Asian call, `T = 1`, `S0 = K = 100`.
    pub fn asian(rate: f64) -> Self {
        Self::new(OptionKind::AsianCall, 100.0, 100.0, None, 1.0, rate).expect("valid preset")
    }

    /// Lookback put on the running maximum, `T = 1`, `S0 = 100`, `K = 110`.
    pub fn lookback(rate: f64) -> Self {
        Self::new(OptionKind::LookbackPut, 100.0, 110.0, None, 1.0, rate).expect("valid preset")
    }

    /// Up-and-out call, `T = 1`, `S0 = K = 100`, `B = 115`.
    pub fn barrier(rate: f64) -> Self {
        Self::new(OptionKind::UpOutBarrierCall, 100.0, 100.0, Some(115.0), 1.0, rate)
            .expect("valid preset")
    }

    pub fn preset(kind: OptionKind, rate: f64) -> Self {
        match kind {
            OptionKind::AsianCall => Self::asian(rate),
            OptionKind::LookbackPut => Self::lookback(rate),
            OptionKind::UpOutBarrierCall => Self::barrier(rate),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0) || !self.spot.is_finite() {
            return Err(Error::param("S0", format!("spot must be positive, got {}", self.spot)));
        }
        // K = 0 is allowed: it gives degenerate but well-defined payoffs.
        if !(self.strike >= 0.0) || !self.strike.is_finite() {
            return Err(Error::param("K", format!("strike must be non-negative, got {}", self.strike)));
        }
        if !(self.maturity > 0.0) || !self.maturity.is_finite() {
            return Err(Error::param("T", format!("maturity must be positive, got {}", self.maturity)));
        }
        if !self.rate.is_finite() {
            return Err(Error::param("r", "rate must be finite"));
        }
        if self.kind == OptionKind::UpOutBarrierCall {
            let b = self
                .barrier
                .ok_or_else(|| Error::param("B", "barrier option needs a barrier level"))?;
            if !(b > self.spot && b > self.strike) || !b.is_finite() {
                return Err(Error::param(
                    "B",
                    format!("up-and-out barrier must exceed spot and strike, got {b}"),
                ));
            }
        }
        Ok(())
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.maturity).exp()
    }

    /// Discounted payoff on one grid.
    pub fn payoff(&self, xs: &[f64]) -> f64 {
        match self.kind {
            OptionKind::AsianCall => asian_trapezoidal(xs, self),
            OptionKind::LookbackPut => lookback_put(xs, self),
            OptionKind::UpOutBarrierCall => barrier_up_out(xs, self),
        }
    }
}

/// Discounted payoffs of one coupled path; `coarse` is `None` at level 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffPair {
    pub fine: f64,
    pub coarse: Option<f64>,
}

impl PayoffPair {
    /// The summand `P_l - P_{l-1}` (or `P_0` at level 0).
    pub fn correction(&self) -> f64 {
        self.fine - self.coarse.unwrap_or(0.0)
    }
}

/// Trapezoidal time average of `S0 exp(X)` over a uniform grid.
pub fn trapezoidal_average(xs: &[f64], spot: f64) -> f64 {
    let n = xs.len() - 1;
    assert!(n >= 1, "grid needs at least one step");
    let interior: f64 = xs[1..n].iter().map(|x| x.exp()).sum();
    let ends = 0.5 * (xs[0].exp() + xs[n].exp());
    spot * (ends + interior) / n as f64
}

/// Arithmetic Asian call with the trapezoidal average.
pub fn asian_trapezoidal(xs: &[f64], spec: &OptionSpec) -> f64 {
    let avg = trapezoidal_average(xs, spec.spot);
    spec.discount() * (avg - spec.strike).max(0.0)
}

/// Put on the discretely monitored maximum, including the `t = 0` point.
pub fn lookback_put(xs: &[f64], spec: &OptionSpec) -> f64 {
    let max_price = spec.spot * max_of(xs).exp();
    spec.discount() * (spec.strike - max_price).max(0.0)
}

/// Up-and-out call; alive only while `S0 exp(max X) < B`.
pub fn barrier_up_out(xs: &[f64], spec: &OptionSpec) -> f64 {
    let barrier = spec.barrier.expect("barrier level");
    let max_price = spec.spot * max_of(xs).exp();
    if max_price < barrier {
        let terminal = spec.spot * xs[xs.len() - 1].exp();
        spec.discount() * (terminal - spec.strike).max(0.0)
    } else {
        0.0
    }
}

pub fn evaluate_pair(path: &PathGrid, spec: &OptionSpec) -> PayoffPair {
    PayoffPair {
        fine: spec.payoff(&path.fine),
        coarse: path.coarse.as_deref().map(|c| spec.payoff(c)),
    }
}
