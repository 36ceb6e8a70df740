//! Experiment harness: level-wise rate measurement, supremum discretisation
//! gap `D_n`, and MLMC versus plain Monte Carlo complexity sweeps.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::mlmc::{fit_rates, run_fixed_levels, run_mlmc, LevelStats, MlmcConfig, MlmcResult, StreamPlan};
use crate::payoffs::{OptionKind, OptionSpec};
use crate::rng::{Domain, RngStream};
use crate::stats::ols;

/// Default tolerance on fitted exponents.
pub const RATE_TOLERANCE: f64 = 0.3;

/// Default `D_n` reference-grid multiplier.
pub const DN_REFERENCE_MULTIPLIER: usize = 64;

pub const DN_CAVEAT: &str = "continuous supremum approximated by the maximum on a refined grid; \
D_n is underestimated and fitted exponents are indicative";

/// Observed weak (`alpha`) and variance (`beta`) exponents for the calibrated
/// models, in powers of `h`.
pub fn reference_rates(model: &str, option: OptionKind) -> Option<(f64, f64)> {
    use OptionKind::*;
    Some(match (model, option) {
        ("vg", AsianCall) => (1.0, 2.0),
        ("vg", LookbackPut) => (1.0, 1.5),
        ("vg", UpOutBarrierCall) => (0.7, 1.0),
        ("nig", AsianCall) => (1.0, 2.0),
        ("nig", LookbackPut) => (0.7, 1.5),
        ("nig", UpOutBarrierCall) => (0.7, 0.9),
        ("stable", AsianCall) => (1.0, 2.0),
        ("stable", LookbackPut) => (0.5, 1.5),
        ("stable", UpOutBarrierCall) => (0.5, 0.7),
        _ => return None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRow {
    pub level: u32,
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    /// `log_M |mean_l|`
    pub log_mean: f64,
    /// `log_M var_l`
    pub log_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub model: String,
    pub option: String,
    pub rows: Vec<RateRow>,
    pub alpha_hat: f64,
    pub beta_hat: f64,
    pub reference_alpha: Option<f64>,
    pub reference_beta: Option<f64>,
    pub tolerance: f64,
    pub alpha_pass: bool,
    pub beta_pass: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSettings {
    pub max_level: u32,
    pub samples_per_level: u64,
    pub refine: u32,
    pub fit_floor_level: u32,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for RateSettings {
    fn default() -> Self {
        Self {
            max_level: 6,
            samples_per_level: 100_000,
            refine: 4,
            fit_floor_level: 2,
            seed: 0,
            tolerance: RATE_TOLERANCE,
        }
    }
}

impl RateSettings {
    fn validate(&self) -> Result<()> {
        if self.max_level < 4 {
            return Err(Error::InsufficientData {
                needed: 4,
                got: self.max_level as usize,
            });
        }
        if self.samples_per_level < 10_000 {
            return Err(Error::param(
                "samples",
                format!("need at least 10^4 samples per level, got {}", self.samples_per_level),
            ));
        }
        Ok(())
    }
}

fn build_report(model: &LevyModel, kind: OptionKind, levels: &[LevelStats], s: &RateSettings) -> Result<RateReport> {
    let log_m = (s.refine as f64).ln();
    let rows = levels
        .iter()
        .filter(|l| l.level >= 1)
        .map(|l| RateRow {
            level: l.level,
            n: l.n,
            mean: l.mean(),
            variance: l.variance(),
            log_mean: l.mean().abs().ln() / log_m,
            log_var: l.variance().ln() / log_m,
        })
        .collect();
    let (alpha_hat, beta_hat) = fit_rates(levels, s.refine, s.fit_floor_level)?;
    let reference = reference_rates(model.id(), kind);
    let within = |fit: f64, r: Option<f64>| r.is_some_and(|r| (fit - r).abs() <= s.tolerance);
    Ok(RateReport {
        model: model.id().to_string(),
        option: kind.id().to_string(),
        rows,
        alpha_hat,
        beta_hat,
        reference_alpha: reference.map(|r| r.0),
        reference_beta: reference.map(|r| r.1),
        tolerance: s.tolerance,
        alpha_pass: within(alpha_hat, reference.map(|r| r.0)),
        beta_pass: within(beta_hat, reference.map(|r| r.1)),
    })
}

/// Fixed-N level statistics for several payoffs on shared paths.
pub fn measure_rates_multi(model: &LevyModel, specs: &[OptionSpec], s: &RateSettings) -> Result<Vec<RateReport>> {
    s.validate()?;
    let plan = StreamPlan {
        seed: s.seed,
        domain: Domain::Rates,
        offset: 0,
    };
    let per_spec = run_fixed_levels(model, specs, s.max_level, s.samples_per_level, s.refine, plan)?;
    specs
        .iter()
        .zip(&per_spec)
        .map(|(spec, levels)| build_report(model, spec.kind, levels, s))
        .collect()
}

pub fn measure_rates(model: &LevyModel, spec: &OptionSpec, s: &RateSettings) -> Result<RateReport> {
    Ok(measure_rates_multi(model, std::slice::from_ref(spec), s)?.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DnRow {
    pub n: usize,
    pub paths: u64,
    pub mean: f64,
    pub second_moment: f64,
    pub std_error: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DnReport {
    pub model: String,
    pub reference_multiplier: usize,
    pub rows: Vec<DnRow>,
    /// `-d log E[D_n] / d log n`
    pub mean_exponent: f64,
    /// `-d log E[D_n^2] / d log n`
    pub second_moment_exponent: f64,
    pub caveat: &'static str,
}

#[derive(Debug, Clone, Copy, Default)]
struct DnAcc {
    n: u64,
    s1: f64,
    s2: f64,
    max: f64,
}

/// Estimates `E[D_n]` and `E[D_n^2]` with `D_n = sup X - max_i X_{i/n}` on
/// `[0, 1]`, the supremum taken on an `n * reference_multiplier` grid that
/// contains the `n` grid.
pub fn measure_dn(
    model: &LevyModel,
    n_list: &[usize],
    paths: u64,
    reference_multiplier: usize,
    seed: u64,
) -> Result<DnReport> {
    if reference_multiplier < 16 {
        return Err(Error::param(
            "n_ref_multiplier",
            format!("must be >= 16, got {reference_multiplier}"),
        ));
    }
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(Error::param("nlist", "needs positive grid sizes"));
    }
    if paths < 2 {
        return Err(Error::param("paths", "need at least two paths"));
    }
    const BATCH: u64 = 1024;
    let mut rows = Vec::with_capacity(n_list.len());
    for (tag, &n) in n_list.iter().enumerate() {
        let steps = n * reference_multiplier;
        let sampler = model.increment_sampler(1.0 / steps as f64)?;
        let batches: Vec<(u64, u64)> = (0..paths.div_ceil(BATCH))
            .map(|b| (b * BATCH, ((b + 1) * BATCH).min(paths)))
            .collect();
        let parts: Vec<DnAcc> = batches
            .into_par_iter()
            .map(|(lo, hi)| {
                let mut acc = DnAcc::default();
                for index in lo..hi {
                    let mut rng = RngStream::for_path(seed, Domain::Dn, tag as u32, index);
                    let (mut x, mut sup, mut grid_max) = (0.0f64, 0.0f64, 0.0f64);
                    for j in 1..=steps {
                        x += sampler.sample(&mut rng);
                        sup = sup.max(x);
                        if j % reference_multiplier == 0 {
                            grid_max = grid_max.max(x);
                        }
                    }
                    let d = sup - grid_max;
                    acc.n += 1;
                    acc.s1 += d;
                    acc.s2 += d * d;
                    acc.max = acc.max.max(d);
                }
                acc
            })
            .collect();
        let total = parts.iter().fold(DnAcc::default(), |a, b| DnAcc {
            n: a.n + b.n,
            s1: a.s1 + b.s1,
            s2: a.s2 + b.s2,
            max: a.max.max(b.max),
        });
        let nf = total.n as f64;
        let mean = total.s1 / nf;
        let second = total.s2 / nf;
        let var = ((total.s2 - total.s1 * total.s1 / nf) / (nf - 1.0)).max(0.0);
        rows.push(DnRow {
            n,
            paths: total.n,
            mean,
            second_moment: second,
            std_error: (var / nf).sqrt(),
            max: total.max,
        });
    }
    let exponent = |f: &dyn Fn(&DnRow) -> f64| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| f(r) > 0.0)
            .map(|r| ((r.n as f64).ln(), f(r).ln()))
            .unzip();
        ols(&xs, &ys).map(|fit| -fit.slope).unwrap_or(f64::NAN)
    };
    Ok(DnReport {
        model: model.id().to_string(),
        reference_multiplier,
        mean_exponent: exponent(&|r| r.mean),
        second_moment_exponent: exponent(&|r| r.second_moment),
        rows,
        caveat: DN_CAVEAT,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityPoint {
    pub eps: f64,
    pub estimate: f64,
    pub max_level: u32,
    pub mlmc_cost: u64,
    /// `2 eps^-2 V[P_L] M^L` for plain Monte Carlo on the finest MLMC grid.
    pub std_mc_cost: f64,
    pub savings: f64,
    pub converged: bool,
}

impl ComplexityPoint {
    pub fn from_result(res: &MlmcResult) -> Self {
        let top = res.levels.last().expect("levels");
        let per_path = (res.refine as f64).powi(top.level as i32);
        let std_mc_cost = 2.0 / (res.eps * res.eps) * top.variance_p() * per_path;
        Self {
            eps: res.eps,
            estimate: res.estimate,
            max_level: top.level,
            mlmc_cost: res.total_cost,
            std_mc_cost,
            savings: std_mc_cost / res.total_cost as f64,
            converged: res.converged,
        }
    }
}

pub fn complexity_sweep(
    model: &LevyModel,
    spec: &OptionSpec,
    eps_list: &[f64],
    cfg: &MlmcConfig,
) -> Result<Vec<ComplexityPoint>> {
    if eps_list.len() < 3 {
        return Err(Error::param("eps_list", "need at least three accuracies"));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("eps_list", "accuracies must be strictly decreasing"));
    }
    eps_list
        .iter()
        .map(|&eps| run_mlmc(model, spec, eps, cfg).map(|r| ComplexityPoint::from_result(&r)))
        .collect()
}

/// Slope of `log(mlmc_cost)` against `log(eps)`.
pub fn cost_slope(points: &[ComplexityPoint]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .map(|p| (p.eps.ln(), (p.mlmc_cost as f64).ln()))
        .unzip();
    ols(&xs, &ys).map(|f| f.slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::VgParams;

    #[test]
    fn reference_table_complete() {
        for m in ["vg", "nig", "stable"] {
            for k in OptionKind::ALL {
                assert!(reference_rates(m, k).is_some());
            }
        }
        assert_eq!(reference_rates("nig", OptionKind::UpOutBarrierCall), Some((0.7, 0.9)));
        assert_eq!(reference_rates("stable", OptionKind::LookbackPut), Some((0.5, 1.5)));
        assert_eq!(reference_rates("gbm", OptionKind::AsianCall), None);
    }

    #[test]
    fn rate_preconditions() {
        let m = LevyModel::vg(VgParams::CALIBRATED).unwrap();
        let spec = OptionSpec::asian(0.05);
        let s = RateSettings {
            max_level: 3,
            ..Default::default()
        };
        assert!(measure_rates(&m, &spec, &s).is_err());
        let s = RateSettings {
            samples_per_level: 10,
            ..Default::default()
        };
        assert!(measure_rates(&m, &spec, &s).is_err());
    }

    #[test]
    fn dn_preconditions() {
        let m = LevyModel::vg(VgParams::CALIBRATED).unwrap();
        assert!(measure_dn(&m, &[4, 16], 100, 8, 0).is_err());
        assert!(measure_dn(&m, &[], 100, 64, 0).is_err());
        assert!(measure_dn(&m, &[0, 4], 100, 64, 0).is_err());
    }

    #[test]
    fn sweep_preconditions() {
        let m = LevyModel::vg(VgParams::CALIBRATED).unwrap();
        let spec = OptionSpec::asian(0.05);
        let cfg = MlmcConfig::default();
        assert!(complexity_sweep(&m, &spec, &[0.1, 0.05], &cfg).is_err());
        assert!(complexity_sweep(&m, &spec, &[0.1, 0.2, 0.05], &cfg).is_err());
    }

    #[test]
    fn cost_slope_exact() {
        let pts: Vec<ComplexityPoint> = [0.1, 0.05, 0.01]
            .iter()
            .map(|&eps: &f64| ComplexityPoint {
                eps,
                estimate: 0.0,
                max_level: 0,
                mlmc_cost: (1e4 * eps.powi(-2)).round() as u64,
                std_mc_cost: 1.0,
                savings: 1.0,
                converged: true,
            })
            .collect();
        assert!((cost_slope(&pts).unwrap() + 2.0).abs() < 1e-6);
    }
}
