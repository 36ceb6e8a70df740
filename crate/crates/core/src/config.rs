//! Experiment configuration files.
//!
//! A config is TOML with three tables:
//!
//! ```toml
//! [model]
//! model = "vg"          # "vg" | "nig" | "stable"
//! sigma = 0.1213        # vg / nig
//! theta = -0.1436
//! kappa = 0.1686
//! # alpha = 1.5597      # stable
//! # A = 0.0
//! # B = 0.1486
//! r = 0.05
//!
//! [option]
//! option = "asian"      # "asian" | "lookback" | "barrier"
//! S0 = 100.0
//! K = 100.0
//! # B = 115.0           # barrier only
//! T = 1.0
//!
//! [driver]
//! eps = 0.01
//! M = 4
//! N_init = 10000
//! L_min = 2
//! L_max = 10
//! fit_floor_level = 2
//! seed = 0
//! stream_offset = 0
//! # weak_rate = 1.0    # fixes alpha in the bias test instead of fitting it
//! ```
//!
//! Omitted model parameters default to the calibrated values of the chosen
//! model; omitted option fields default to the preset for the option kind;
//! omitted driver keys take [`MlmcConfig::default`] values. The option is
//! discounted at the model rate `r`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::levy::{LevyModel, ModelParams, NigParams, StableParams, VgParams};
use crate::mlmc::MlmcConfig;
use crate::payoffs::{OptionKind, OptionSpec};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: RawModel,
    #[serde(default)]
    option: Option<RawOption>,
    #[serde(default)]
    driver: RawDriver,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    model: String,
    sigma: Option<f64>,
    theta: Option<f64>,
    kappa: Option<f64>,
    alpha: Option<f64>,
    #[serde(rename = "A")]
    a_plus: Option<f64>,
    #[serde(rename = "B")]
    b_minus: Option<f64>,
    r: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOption {
    option: String,
    #[serde(rename = "S0")]
    spot: Option<f64>,
    #[serde(rename = "K")]
    strike: Option<f64>,
    #[serde(rename = "B")]
    barrier: Option<f64>,
    #[serde(rename = "T")]
    maturity: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDriver {
    eps: Option<f64>,
    #[serde(rename = "M")]
    refine: Option<u32>,
    #[serde(rename = "N_init")]
    n_init: Option<u64>,
    #[serde(rename = "L_min")]
    l_min: Option<u32>,
    #[serde(rename = "L_max")]
    l_max: Option<u32>,
    fit_floor_level: Option<u32>,
    min_samples: Option<u64>,
    seed: Option<u64>,
    stream_offset: Option<u64>,
    weak_rate: Option<f64>,
}

/// A parsed, validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: LevyModel,
    pub option: Option<OptionSpec>,
    pub driver: MlmcConfig,
    pub eps: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let model = build_model(&raw.model)?;
        let option = raw
            .option
            .as_ref()
            .map(|o| build_option(o, model.rate()))
            .transpose()?;
        let d = &raw.driver;
        let defaults = MlmcConfig::default();
        let driver = MlmcConfig {
            refine: d.refine.unwrap_or(defaults.refine),
            n_init: d.n_init.unwrap_or(defaults.n_init),
            l_min: d.l_min.unwrap_or(defaults.l_min),
            l_max: d.l_max.unwrap_or(defaults.l_max),
            fit_floor_level: d.fit_floor_level.unwrap_or(defaults.fit_floor_level),
            min_samples: d.min_samples.unwrap_or(defaults.min_samples),
            seed: d.seed.unwrap_or(defaults.seed),
            stream_offset: d.stream_offset.unwrap_or(defaults.stream_offset),
            weak_rate: d.weak_rate.or(defaults.weak_rate),
        };
        driver.validate()?;
        if let Some(eps) = d.eps {
            if !(eps > 0.0) {
                return Err(Error::param("eps", format!("must be positive, got {eps}")));
            }
        }
        Ok(Self {
            model,
            option,
            driver,
            eps: d.eps,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_toml(&text)
    }

    pub fn require_option(&self) -> Result<OptionSpec> {
        self.option
            .ok_or_else(|| Error::Config("missing [option] table".to_string()))
    }
}

fn build_model(m: &RawModel) -> Result<LevyModel> {
    let params = match m.model.trim().to_ascii_lowercase().as_str() {
        "vg" => {
            let d = VgParams::CALIBRATED;
            ModelParams::Vg(VgParams {
                sigma: m.sigma.unwrap_or(d.sigma),
                theta: m.theta.unwrap_or(d.theta),
                kappa: m.kappa.unwrap_or(d.kappa),
                r: m.r.unwrap_or(d.r),
            })
        }
        "nig" => {
            let d = NigParams::CALIBRATED;
            ModelParams::Nig(NigParams {
                sigma: m.sigma.unwrap_or(d.sigma),
                theta: m.theta.unwrap_or(d.theta),
                kappa: m.kappa.unwrap_or(d.kappa),
                r: m.r.unwrap_or(d.r),
            })
        }
        "stable" => {
            let d = StableParams::CALIBRATED;
            ModelParams::Stable(StableParams {
                alpha: m.alpha.unwrap_or(d.alpha),
                a_plus: m.a_plus.unwrap_or(d.a_plus),
                b_minus: m.b_minus.unwrap_or(d.b_minus),
                r: m.r.unwrap_or(d.r),
            })
        }
        other => return Err(Error::Config(format!("unknown model `{other}`"))),
    };
    LevyModel::new(params)
}

fn build_option(o: &RawOption, rate: f64) -> Result<OptionSpec> {
    let kind = OptionKind::parse(&o.option)?;
    let preset = OptionSpec::preset(kind, rate);
    let barrier = match kind {
        OptionKind::UpOutBarrierCall => o.barrier.or(preset.barrier),
        _ => None,
    };
    OptionSpec::new(
        kind,
        o.spot.unwrap_or(preset.spot),
        o.strike.unwrap_or(preset.strike),
        barrier,
        o.maturity.unwrap_or(preset.maturity),
        rate,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let text = r#"
            [model]
            model = "nig"
            sigma = 0.2
            theta = -0.1
            kappa = 1.0
            r = 0.03

            [option]
            option = "barrier"
            K = 95.0
            B = 120.0

            [driver]
            eps = 0.02
            M = 2
            N_init = 500
            L_max = 8
            seed = 9
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.model.id(), "nig");
        assert_eq!(cfg.model.rate(), 0.03);
        let opt = cfg.option.unwrap();
        assert_eq!(opt.kind, OptionKind::UpOutBarrierCall);
        assert_eq!(opt.strike, 95.0);
        assert_eq!(opt.barrier, Some(120.0));
        assert_eq!(opt.spot, 100.0);
        assert_eq!(opt.rate, 0.03);
        assert_eq!(cfg.driver.refine, 2);
        assert_eq!(cfg.driver.n_init, 500);
        assert_eq!(cfg.driver.l_min, 2);
        assert_eq!(cfg.driver.seed, 9);
        assert_eq!(cfg.eps, Some(0.02));
    }

    #[test]
    fn defaults_to_calibrated_stable() {
        let cfg = ExperimentConfig::from_toml("[model]\nmodel = \"stable\"\n").unwrap();
        assert_eq!(
            *cfg.model.params(),
            ModelParams::Stable(StableParams::CALIBRATED)
        );
        assert!(cfg.option.is_none());
        assert!(cfg.require_option().is_err());
        assert_eq!(cfg.driver, MlmcConfig::default());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ExperimentConfig::from_toml("[model]\nmodel = \"cgmy\"\n").is_err());
        assert!(ExperimentConfig::from_toml("[model]\nmodel = \"vg\"\nfoo = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("[model]\nmodel = \"stable\"\nalpha = 1.0\n").is_err());
        let t = "[model]\nmodel = \"vg\"\n[option]\noption = \"asian\"\n[driver]\nL_min = 5\nL_max = 2\n";
        assert!(ExperimentConfig::from_toml(t).is_err());
        let t = "[model]\nmodel = \"vg\"\n[option]\noption = \"barrier\"\nB = 90.0\n";
        assert!(ExperimentConfig::from_toml(t).is_err());
    }
}
