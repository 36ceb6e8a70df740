//! Exponential Lévy models: parameter sets, mean-correcting drifts, exact
//! increment samplers and closed-form characteristic functions.
//!
//! VG and NIG are simulated as Brownian motion with drift run on a random
//! clock (Gamma and inverse Gaussian subordinators respectively). The
//! spectrally negative stable model is simulated with the Chambers–Mallows–
//! Stuck transform and self-similar scaling.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{GammaVariate, InverseGaussianVariate, RngStream};

/// Variance Gamma: `X_t = m t + theta G_t + sigma W(G_t)` with `G` a Gamma
/// process of unit mean rate and variance rate `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VgParams {
    pub sigma: f64,
    pub theta: f64,
    pub kappa: f64,
    pub r: f64,
}

/// Normal inverse Gaussian: same construction as [`VgParams`] with an inverse
/// Gaussian clock, `I_h ~ IG(mean h, shape h^2 / kappa)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NigParams {
    pub sigma: f64,
    pub theta: f64,
    pub kappa: f64,
    pub r: f64,
}

/// Strictly alpha-stable process with Lévy density `A x^{-1-alpha}` on the
/// positive half-line and `B |x|^{-1-alpha}` on the negative one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    pub alpha: f64,
    pub a_plus: f64,
    pub b_minus: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Vg(VgParams),
    Nig(NigParams),
    Stable(StableParams),
}

impl VgParams {
    /// Calibrated set used throughout the experiments.
    pub const CALIBRATED: VgParams = VgParams {
        sigma: 0.1213,
        theta: -0.1436,
        kappa: 0.1686,
        r: 0.05,
    };

    pub fn validate(&self) -> Result<()> {
        check_positive("sigma", self.sigma)?;
        check_positive("kappa", self.kappa)?;
        check_finite("theta", self.theta)?;
        check_finite("r", self.r)?;
        if self.drift_argument() <= 0.0 {
            return Err(Error::param(
                "theta",
                format!(
                    "drift requires 1 - theta*kappa - sigma^2*kappa/2 > 0, got {}",
                    self.drift_argument()
                ),
            ));
        }
        Ok(())
    }

    /// `1 - theta kappa - sigma^2 kappa / 2`, the value of the Laplace
    /// transform base `E[exp(X_1 - m)]^{-kappa}`.
    fn drift_argument(&self) -> f64 {
        1.0 - self.theta * self.kappa - 0.5 * self.sigma * self.sigma * self.kappa
    }
}

impl NigParams {
    pub const CALIBRATED: NigParams = NigParams {
        sigma: 0.1836,
        theta: -0.1313,
        kappa: 1.2819,
        r: 0.05,
    };

    pub fn validate(&self) -> Result<()> {
        check_positive("sigma", self.sigma)?;
        check_positive("kappa", self.kappa)?;
        check_finite("theta", self.theta)?;
        check_finite("r", self.r)?;
        if self.drift_argument() <= 0.0 {
            return Err(Error::param(
                "theta",
                format!(
                    "drift requires 1 - 2*theta*kappa - kappa*sigma^2 > 0, got {}",
                    self.drift_argument()
                ),
            ));
        }
        Ok(())
    }

    fn drift_argument(&self) -> f64 {
        1.0 - 2.0 * self.theta * self.kappa - self.kappa * self.sigma * self.sigma
    }
}

impl StableParams {
    pub const CALIBRATED: StableParams = StableParams {
        alpha: 1.5597,
        a_plus: 0.0,
        b_minus: 0.1486,
        r: 0.05,
    };

    /// Checks the sampling domain. Pricing additionally needs `a_plus == 0`,
    /// enforced by [`mean_correcting_drift`].
    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 || self.alpha >= 2.0 {
            return Err(Error::param("alpha", format!("must lie in (0, 2), got {}", self.alpha)));
        }
        if self.alpha == 1.0 {
            return Err(Error::UnsupportedStableAlpha);
        }
        if !(self.a_plus >= 0.0) || !self.a_plus.is_finite() {
            return Err(Error::param("A", format!("must be non-negative, got {}", self.a_plus)));
        }
        if !(self.b_minus >= 0.0) || !self.b_minus.is_finite() {
            return Err(Error::param("B", format!("must be non-negative, got {}", self.b_minus)));
        }
        if self.a_plus + self.b_minus <= 0.0 {
            return Err(Error::param("B", "A + B must be positive"));
        }
        check_finite("r", self.r)
    }

    /// Scale `A + B` of the unit-time marginal.
    pub fn scale(&self) -> f64 {
        self.a_plus + self.b_minus
    }

    /// Skewness `(A - B) / (A + B)`, equal to -1 when spectrally negative.
    pub fn skewness(&self) -> f64 {
        (self.a_plus - self.b_minus) / (self.a_plus + self.b_minus)
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelParams::Vg(p) => p.validate(),
            ModelParams::Nig(p) => p.validate(),
            ModelParams::Stable(p) => p.validate(),
        }
    }

    pub fn rate(&self) -> f64 {
        match self {
            ModelParams::Vg(p) => p.r,
            ModelParams::Nig(p) => p.r,
            ModelParams::Stable(p) => p.r,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            ModelParams::Vg(_) => "vg",
            ModelParams::Nig(_) => "nig",
            ModelParams::Stable(_) => "stable",
        }
    }
}

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {x}")))
    }
}

fn check_finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be finite, got {x}")))
    }
}

/// Drift `m` (per year) making `exp(-r t) exp(X_t)` a martingale.
///
/// * VG: `r + log(1 - theta kappa - sigma^2 kappa / 2) / kappa`
/// * NIG: `r - 1/kappa + sqrt(1 - 2 theta kappa - kappa sigma^2) / kappa`
/// * stable, `A = 0`: `r + B^alpha sec(alpha pi / 2)`
pub fn mean_correcting_drift(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    Ok(match params {
        ModelParams::Vg(p) => p.r + p.drift_argument().ln() / p.kappa,
        ModelParams::Nig(p) => p.r - 1.0 / p.kappa + p.drift_argument().sqrt() / p.kappa,
        ModelParams::Stable(p) => {
            if p.a_plus != 0.0 {
                return Err(Error::param(
                    "A",
                    "exponential moments are finite only for spectrally negative processes (A = 0)",
                ));
            }
            p.r + p.b_minus.powf(p.alpha) / (p.alpha * FRAC_PI_2).cos()
        }
    })
}

/// A validated model together with its cached mean-correcting drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevyModel {
    params: ModelParams,
    drift: f64,
}

impl LevyModel {
    pub fn new(params: ModelParams) -> Result<Self> {
        let drift = mean_correcting_drift(&params)?;
        Ok(Self { params, drift })
    }

    pub fn vg(p: VgParams) -> Result<Self> {
        Self::new(ModelParams::Vg(p))
    }

    pub fn nig(p: NigParams) -> Result<Self> {
        Self::new(ModelParams::Nig(p))
    }

    pub fn stable(p: StableParams) -> Result<Self> {
        Self::new(ModelParams::Stable(p))
    }

    /// The three calibrated models: VG, NIG and spectrally negative stable.
    pub fn calibrated() -> [LevyModel; 3] {
        [
            Self::vg(VgParams::CALIBRATED).expect("calibrated VG"),
            Self::nig(NigParams::CALIBRATED).expect("calibrated NIG"),
            Self::stable(StableParams::CALIBRATED).expect("calibrated stable"),
        ]
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn rate(&self) -> f64 {
        self.params.rate()
    }

    pub fn id(&self) -> &'static str {
        self.params.id()
    }

    /// Sampler for increments over a step of length `h`.
    pub fn increment_sampler(&self, h: f64) -> Result<IncrementSampler> {
        IncrementSampler::new(&self.params, self.drift, h)
    }

    pub fn char_function(&self, u: f64, t: f64) -> Complex64 {
        char_function(self, u, t)
    }
}

/// Exact sampler of `X_{t+h} - X_t` with constants fixed for one step size.
#[derive(Debug, Clone, Copy)]
pub enum IncrementSampler {
    Vg {
        mean_shift: f64,
        theta: f64,
        sigma: f64,
        kappa: f64,
        clock: GammaVariate,
    },
    Nig {
        mean_shift: f64,
        theta: f64,
        sigma: f64,
        clock: InverseGaussianVariate,
    },
    Stable {
        mean_shift: f64,
        scale: f64,
        variate: StableVariate,
    },
}

impl IncrementSampler {
    pub fn new(params: &ModelParams, drift: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::param("h", format!("time step must be positive, got {h}")));
        }
        params.validate()?;
        check_finite("drift", drift)?;
        Ok(match *params {
            ModelParams::Vg(p) => IncrementSampler::Vg {
                mean_shift: drift * h,
                theta: p.theta,
                sigma: p.sigma,
                kappa: p.kappa,
                clock: GammaVariate::new(h / p.kappa)?,
            },
            ModelParams::Nig(p) => IncrementSampler::Nig {
                mean_shift: drift * h,
                theta: p.theta,
                sigma: p.sigma,
                clock: InverseGaussianVariate::new(h, h * h / p.kappa)?,
            },
            ModelParams::Stable(p) => IncrementSampler::Stable {
                mean_shift: drift * h,
                scale: h.powf(1.0 / p.alpha) * p.scale(),
                variate: StableVariate::new(p.alpha, p.skewness())?,
            },
        })
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        match *self {
            IncrementSampler::Vg {
                mean_shift,
                theta,
                sigma,
                kappa,
                clock,
            } => {
                let g = kappa * clock.sample(rng);
                mean_shift + theta * g + sigma * g.sqrt() * rng.next_normal()
            }
            IncrementSampler::Nig {
                mean_shift,
                theta,
                sigma,
                clock,
            } => {
                let i = clock.sample(rng);
                mean_shift + theta * i + sigma * i.sqrt() * rng.next_normal()
            }
            IncrementSampler::Stable {
                mean_shift,
                scale,
                variate,
            } => mean_shift + scale * variate.sample(rng),
        }
    }
}

/// Standard stable variate `S_alpha(1, beta, 0)` with characteristic function
/// `exp(-|u|^alpha (1 - i beta sgn(u) tan(pi alpha / 2)))`, alpha != 1,
/// drawn with the Chambers–Mallows–Stuck transform.
#[derive(Debug, Clone, Copy)]
pub struct StableVariate {
    alpha: f64,
    inv_alpha: f64,
    exponent: f64,
    shift: f64,
    factor: f64,
}

impl StableVariate {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::param("alpha", format!("must lie in (0, 2), got {alpha}")));
        }
        if alpha == 1.0 {
            return Err(Error::UnsupportedStableAlpha);
        }
        if !(-1.0..=1.0).contains(&beta) {
            return Err(Error::param("beta", format!("must lie in [-1, 1], got {beta}")));
        }
        let zeta = beta * (PI * alpha / 2.0).tan();
        Ok(Self {
            alpha,
            inv_alpha: 1.0 / alpha,
            exponent: (1.0 - alpha) / alpha,
            shift: zeta.atan() / alpha,
            factor: (1.0 + zeta * zeta).powf(0.5 / alpha),
        })
    }

    #[inline]
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        let v = PI * (rng.next_uniform() - 0.5);
        let w = rng.next_exponential();
        let a = self.alpha * (v + self.shift);
        self.factor * a.sin() / v.cos().powf(self.inv_alpha)
            * ((v - a).cos() / w).powf(self.exponent)
    }
}

pub fn sample_vg_increment(p: &VgParams, drift: f64, h: f64, s: &mut RngStream) -> Result<f64> {
    Ok(IncrementSampler::new(&ModelParams::Vg(*p), drift, h)?.sample(s))
}

pub fn sample_nig_increment(p: &NigParams, drift: f64, h: f64, s: &mut RngStream) -> Result<f64> {
    Ok(IncrementSampler::new(&ModelParams::Nig(*p), drift, h)?.sample(s))
}

/// Stable increment; works for any `A, B >= 0` (the drift is supplied by the
/// caller, so the symmetric case can be sampled with `drift = 0`).
pub fn sample_stable_increment(
    p: &StableParams,
    drift: f64,
    h: f64,
    s: &mut RngStream,
) -> Result<f64> {
    Ok(IncrementSampler::new(&ModelParams::Stable(*p), drift, h)?.sample(s))
}

/// `E[exp(i u X_t)]` including the drift factor `exp(i u m t)`.
pub fn char_function(model: &LevyModel, u: f64, t: f64) -> Complex64 {
    let drift = Complex64::new(0.0, u * model.drift * t).exp();
    drift * char_function_driftless(&model.params, u, t)
}

/// Characteristic function of the driftless part of `X_t`.
pub fn char_function_driftless(params: &ModelParams, u: f64, t: f64) -> Complex64 {
    match *params {
        ModelParams::Vg(p) => {
            let base = Complex64::new(
                1.0 + 0.5 * p.sigma * p.sigma * u * u * p.kappa,
                -u * p.theta * p.kappa,
            );
            (-(t / p.kappa) * base.ln()).exp()
        }
        ModelParams::Nig(p) => {
            let base = Complex64::new(
                1.0 + p.kappa * p.sigma * p.sigma * u * u,
                -2.0 * u * p.theta * p.kappa,
            );
            ((t / p.kappa) * (Complex64::new(1.0, 0.0) - base.sqrt())).exp()
        }
        ModelParams::Stable(p) => {
            if u == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            let mag = t * p.scale().powf(p.alpha) * u.abs().powf(p.alpha);
            let skew = p.skewness() * u.signum() * (PI * p.alpha / 2.0).tan();
            (-mag * Complex64::new(1.0, -skew)).exp()
        }
    }
}
