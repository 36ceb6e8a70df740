//! Adaptive multilevel Monte Carlo driver.
//!
//! Level `l` estimates `E[P_l - P_{l-1}]` (or `E[P_0]`) from coupled paths
//! whose coarse grid is the fine grid subsampled by `M`. The driver samples
//! an initial batch on each level, reallocates samples with the
//! Lagrange-optimal rule so the statistical error is at most `eps^2 / 2`, and
//! adds levels until the extrapolated bias is at most `eps / sqrt(2)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::LevyModel;
use crate::paths::{GridSpec, PathGenerator, PathGrid};
use crate::payoffs::{evaluate_pair, OptionSpec};
use crate::rng::{Domain, RngStream};
use crate::stats::ols;

/// Paths per parallel work item. Sums are merged in batch order, so results
/// depend only on the seed and the sequence of sampling requests.
const BATCH: u64 = 2048;

/// Floor applied to `alpha` in the bias test.
pub const ALPHA_FLOOR: f64 = 0.5;

/// Kurtosis above which level variance estimates are flagged as unreliable.
pub const KURTOSIS_WARNING: f64 = 100.0;

/// Per-level power sums of `Y = P_l - P_{l-1}` (`P_0` at level 0) and of the
/// fine payoff `P_l`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LevelStats {
    pub level: u32,
    pub n: u64,
    pub sum1: f64,
    pub sum2: f64,
    pub sum3: f64,
    pub sum4: f64,
    pub sum_p: f64,
    pub sum_p2: f64,
    /// Work units: one per fine time step, `n * M^level`.
    pub cost: u64,
}

impl LevelStats {
    pub fn empty(level: u32) -> Self {
        Self {
            level,
            ..Default::default()
        }
    }

    #[inline]
    pub fn record(&mut self, y: f64, p: f64, steps: u64) {
        let y2 = y * y;
        self.n += 1;
        self.sum1 += y;
        self.sum2 += y2;
        self.sum3 += y2 * y;
        self.sum4 += y2 * y2;
        self.sum_p += p;
        self.sum_p2 += p * p;
        self.cost += steps;
    }

    pub fn merge(&mut self, other: &LevelStats) {
        debug_assert_eq!(self.level, other.level);
        self.n += other.n;
        self.sum1 += other.sum1;
        self.sum2 += other.sum2;
        self.sum3 += other.sum3;
        self.sum4 += other.sum4;
        self.sum_p += other.sum_p;
        self.sum_p2 += other.sum_p2;
        self.cost += other.cost;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.sum1 / self.n as f64
    }

    /// Unbiased sample variance of `Y`, clamped at 0.
    pub fn variance(&self) -> f64 {
        sample_variance(self.n, self.sum1, self.sum2)
    }

    pub fn mean_p(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.sum_p / self.n as f64
    }

    pub fn variance_p(&self) -> f64 {
        sample_variance(self.n, self.sum_p, self.sum_p2)
    }

    /// Variance of the level estimator, `V_l / N_l`.
    pub fn estimator_variance(&self) -> f64 {
        if self.n == 0 {
            return f64::INFINITY;
        }
        self.variance() / self.n as f64
    }

    /// Kurtosis of `Y` from the raw power sums; `NaN` when the variance is 0.
    pub fn kurtosis(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let (m1, m2, m3, m4) = (self.sum1 / n, self.sum2 / n, self.sum3 / n, self.sum4 / n);
        let var = m2 - m1 * m1;
        if var <= 0.0 {
            return f64::NAN;
        }
        let central4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
        central4 / (var * var)
    }
}

fn sample_variance(n: u64, s1: f64, s2: f64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    ((s2 - s1 * s1 / nf) / (nf - 1.0)).max(0.0)
}

/// Driver configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlmcConfig {
    /// Refinement factor `M`.
    pub refine: u32,
    /// Initial samples on every new level.
    pub n_init: u64,
    pub l_min: u32,
    pub l_max: u32,
    /// Lowest level used when fitting the reported rate exponents.
    pub fit_floor_level: u32,
    /// Minimum `N_l` the allocation may return.
    pub min_samples: u64,
    pub seed: u64,
    /// Added to every path index; shifts all streams of a run.
    pub stream_offset: u64,
    /// Fixed weak-error exponent for the bias test; fitted when `None`.
    pub weak_rate: Option<f64>,
}

impl Default for MlmcConfig {
    fn default() -> Self {
        Self {
            refine: 4,
            n_init: 10_000,
            l_min: 2,
            l_max: 10,
            fit_floor_level: 2,
            min_samples: 100,
            seed: 0,
            stream_offset: 0,
            weak_rate: None,
        }
    }
}

impl MlmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.refine < 2 {
            return Err(Error::param("M", format!("must be >= 2, got {}", self.refine)));
        }
        if self.n_init < 2 {
            return Err(Error::param("N_init", "need at least two initial samples per level"));
        }
        if self.l_min < 1 {
            return Err(Error::param("L_min", "must be >= 1 so the bias test sees a correction level"));
        }
        if self.l_max < self.l_min {
            return Err(Error::param(
                "L_max",
                format!("L_max = {} is below L_min = {}", self.l_max, self.l_min),
            ));
        }
        if let Some(a) = self.weak_rate {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::param("weak_rate", format!("must be positive, got {a}")));
            }
        }
        if self.l_max > 12 {
            return Err(Error::param("L_max", format!("at most 12 levels supported, got {}", self.l_max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlmcResult {
    pub estimate: f64,
    pub eps: f64,
    pub levels: Vec<LevelStats>,
    pub alpha_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    pub total_cost: u64,
    pub converged: bool,
    pub refine: u32,
}

impl MlmcResult {
    /// Finest level `L`.
    pub fn max_level(&self) -> u32 {
        self.levels.last().map(|l| l.level).unwrap_or(0)
    }

    /// Estimated statistical variance `sum V_l / N_l`.
    pub fn statistical_variance(&self) -> f64 {
        self.levels.iter().map(LevelStats::estimator_variance).sum()
    }

    /// Levels whose kurtosis makes the variance estimate unreliable.
    pub fn kurtosis_warnings(&self) -> Vec<u32> {
        self.levels
            .iter()
            .filter(|l| l.level > 0 && l.kurtosis() > KURTOSIS_WARNING)
            .map(|l| l.level)
            .collect()
    }
}

/// Lagrange-optimal sample counts with the default floor of 100.
pub fn optimal_allocation(variances: &[f64], costs: &[f64], eps: f64) -> Vec<u64> {
    optimal_allocation_with_floor(variances, costs, eps, MlmcConfig::default().min_samples)
}

/// `N_l = ceil(2 eps^-2 sqrt(V_l / C_l) sum_k sqrt(V_k C_k))`, at least
/// `floor`. Gives `sum V_l / N_l <= eps^2 / 2`.
pub fn optimal_allocation_with_floor(variances: &[f64], costs: &[f64], eps: f64, floor: u64) -> Vec<u64> {
    assert_eq!(variances.len(), costs.len());
    let total: f64 = variances
        .iter()
        .zip(costs)
        .map(|(v, c)| (v.max(0.0) * c).sqrt())
        .sum();
    variances
        .iter()
        .zip(costs)
        .map(|(v, c)| {
            let n = (2.0 / (eps * eps) * (v.max(0.0) / c).sqrt() * total).ceil();
            if n.is_finite() {
                (n as u64).max(floor)
            } else {
                floor
            }
        })
        .collect()
}

/// Weak and variance exponents `(alpha, beta)` in units of `log_M`, fitted by
/// least squares over correction levels `l >= max(1, floor_level)`.
pub fn fit_rates(levels: &[LevelStats], refine: u32, floor_level: u32) -> Result<(f64, f64)> {
    let window: Vec<&LevelStats> = levels
        .iter()
        .filter(|l| l.level >= floor_level.max(1))
        .collect();
    if window.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: window.len(),
        });
    }
    let log_m = (refine as f64).ln();
    let fit = |f: &dyn Fn(&LevelStats) -> f64| -> Result<f64> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = window
            .iter()
            .filter_map(|l| {
                let v = f(l);
                (v > 0.0 && v.is_finite()).then(|| (l.level as f64, v.ln() / log_m))
            })
            .unzip();
        if xs.len() < 3 {
            return Err(Error::InsufficientData {
                needed: 3,
                got: xs.len(),
            });
        }
        Ok(-ols(&xs, &ys).expect("distinct levels").slope)
    };
    let alpha = fit(&|l| l.mean().abs())?;
    let beta = fit(&|l| l.variance())?;
    Ok((alpha, beta))
}

/// Which payoffs a sampling call accumulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// `Y = P_l - P_{l-1}` on one coupled path (`P_0` at level 0).
    Coupled,
    /// `Y = P_l` only: plain Monte Carlo on the level-`l` grid.
    FineOnly,
}

/// Where a batch of paths draws its streams from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamPlan {
    pub seed: u64,
    pub domain: Domain,
    pub offset: u64,
}

/// Samples paths `start..start + count` of one level and accumulates, for each
/// payoff in `specs`, a [`LevelStats`]. All payoffs share the same paths.
pub fn sample_level_multi(
    model: &LevyModel,
    specs: &[OptionSpec],
    grid: GridSpec,
    coupling: Coupling,
    plan: StreamPlan,
    start: u64,
    count: u64,
) -> Result<Vec<LevelStats>> {
    let generator = PathGenerator::new(model, grid)?;
    let steps = grid.n_fine() as u64;
    let level = grid.level;
    let batches: Vec<(u64, u64)> = (0..count.div_ceil(BATCH))
        .map(|b| {
            let lo = start + b * BATCH;
            (lo, (lo + BATCH).min(start + count))
        })
        .collect();
    let partial: Vec<Vec<LevelStats>> = batches
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut acc = vec![LevelStats::empty(level); specs.len()];
            let mut path = PathGrid::default();
            for index in lo..hi {
                let mut rng = RngStream::for_path(plan.seed, plan.domain, level, plan.offset + index);
                generator.generate_into(&mut rng, &mut path);
                for (stats, spec) in acc.iter_mut().zip(specs) {
                    let pair = evaluate_pair(&path, spec);
                    let y = match coupling {
                        Coupling::Coupled => pair.correction(),
                        Coupling::FineOnly => pair.fine,
                    };
                    stats.record(y, pair.fine, steps);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![LevelStats::empty(level); specs.len()];
    for batch in &partial {
        for (t, b) in total.iter_mut().zip(batch) {
            t.merge(b);
        }
    }
    Ok(total)
}

pub fn sample_level(
    model: &LevyModel,
    spec: &OptionSpec,
    grid: GridSpec,
    coupling: Coupling,
    plan: StreamPlan,
    start: u64,
    count: u64,
) -> Result<LevelStats> {
    Ok(sample_level_multi(model, std::slice::from_ref(spec), grid, coupling, plan, start, count)?[0])
}

fn check_rates_match(model: &LevyModel, spec: &OptionSpec) -> Result<()> {
    spec.validate()?;
    if (model.rate() - spec.rate).abs() > 1e-12 {
        return Err(Error::param(
            "r",
            format!("option rate {} differs from model rate {}", spec.rate, model.rate()),
        ));
    }
    Ok(())
}

/// Fixed-allocation run: `n_per_level` coupled samples on levels `0..=max_level`.
pub fn run_fixed_levels(
    model: &LevyModel,
    specs: &[OptionSpec],
    max_level: u32,
    n_per_level: u64,
    refine: u32,
    plan: StreamPlan,
) -> Result<Vec<Vec<LevelStats>>> {
    for spec in specs {
        check_rates_match(model, spec)?;
    }
    let maturity = specs.first().map(|s| s.maturity).unwrap_or(1.0);
    if specs.iter().any(|s| s.maturity != maturity) {
        return Err(Error::param("T", "payoffs sharing paths must share a maturity"));
    }
    let mut per_spec = vec![Vec::with_capacity(max_level as usize + 1); specs.len()];
    for level in 0..=max_level {
        let grid = GridSpec::new(level, refine, maturity)?;
        let stats = sample_level_multi(model, specs, grid, Coupling::Coupled, plan, 0, n_per_level)?;
        for (dst, s) in per_spec.iter_mut().zip(stats) {
            dst.push(s);
        }
    }
    Ok(per_spec)
}

/// Plain Monte Carlo estimate of `E[P_level]`: `n` uncoupled paths on the
/// level grid, drawn from the single-level stream domain.
pub fn single_level_estimate(
    model: &LevyModel,
    spec: &OptionSpec,
    level: u32,
    n: u64,
    refine: u32,
    seed: u64,
) -> Result<LevelStats> {
    check_rates_match(model, spec)?;
    let grid = GridSpec::new(level, refine, spec.maturity)?;
    let plan = StreamPlan {
        seed,
        domain: Domain::SingleLevel,
        offset: 0,
    };
    sample_level(model, spec, grid, Coupling::FineOnly, plan, 0, n)
}

/// Exponent estimate used by the bias test: OLS of `-log_M |mean_l|` over all
/// correction levels with nonzero mean, floored at [`ALPHA_FLOOR`].
fn driver_alpha(levels: &[LevelStats], refine: u32) -> f64 {
    let log_m = (refine as f64).ln();
    let (xs, ys): (Vec<f64>, Vec<f64>) = levels
        .iter()
        .filter(|l| l.level > 0 && l.mean() != 0.0)
        .map(|l| (l.level as f64, l.mean().abs().ln() / log_m))
        .unzip();
    ols(&xs, &ys)
        .map(|f| -f.slope)
        .filter(|a| a.is_finite())
        .unwrap_or(ALPHA_FLOOR)
        .max(ALPHA_FLOOR)
}

/// Remaining-bias estimate: the larger of the last correction mean and the
/// previous one extrapolated by `M^-alpha`, summed over the geometric tail.
pub fn bias_estimate(levels: &[LevelStats], refine: u32, alpha: f64) -> f64 {
    let scale = (refine as f64).powf(alpha);
    let last = levels.last().expect("at least one level");
    let mut rem = last.mean().abs();
    if levels.len() >= 2 {
        let prev = &levels[levels.len() - 2];
        if prev.level >= 1 {
            rem = rem.max(prev.mean().abs() / scale);
        }
    }
    rem / (scale - 1.0)
}

pub fn run_mlmc(model: &LevyModel, spec: &OptionSpec, eps: f64, cfg: &MlmcConfig) -> Result<MlmcResult> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::param("eps", format!("target RMS error must be positive, got {eps}")));
    }
    cfg.validate()?;
    check_rates_match(model, spec)?;
    let plan = StreamPlan {
        seed: cfg.seed,
        domain: Domain::Mlmc,
        offset: cfg.stream_offset,
    };
    let grid = |level: u32| GridSpec::new(level, cfg.refine, spec.maturity);

    let mut levels: Vec<LevelStats> = (0..=cfg.l_min).map(LevelStats::empty).collect();
    let mut pending: Vec<u64> = vec![cfg.n_init; levels.len()];
    let converged;
    loop {
        for (stats, &extra) in levels.iter_mut().zip(&pending) {
            if extra > 0 {
                let more = sample_level(model, spec, grid(stats.level)?, Coupling::Coupled, plan, stats.n, extra)?;
                stats.merge(&more);
            }
        }

        let variances: Vec<f64> = levels.iter().map(LevelStats::variance).collect();
        let costs: Vec<f64> = levels
            .iter()
            .map(|l| (cfg.refine as f64).powi(l.level as i32))
            .collect();
        let target = optimal_allocation_with_floor(&variances, &costs, eps, cfg.min_samples);
        pending = levels
            .iter()
            .zip(&target)
            .map(|(l, &t)| t.saturating_sub(l.n))
            .collect();
        if pending.iter().any(|&p| p > 0) {
            continue;
        }

        let alpha = cfg
            .weak_rate
            .map(|a| a.max(ALPHA_FLOOR))
            .unwrap_or_else(|| driver_alpha(&levels, cfg.refine));
        if bias_estimate(&levels, cfg.refine, alpha) <= eps / std::f64::consts::SQRT_2 {
            converged = true;
            break;
        }
        let top = levels.last().expect("levels").level;
        if top >= cfg.l_max {
            converged = false;
            break;
        }
        levels.push(LevelStats::empty(top + 1));
        pending = vec![0; levels.len()];
        *pending.last_mut().expect("new level") = cfg.n_init;
    }

    let (alpha_hat, beta_hat) = match fit_rates(&levels, cfg.refine, cfg.fit_floor_level)
        .or_else(|_| fit_rates(&levels, cfg.refine, 1))
    {
        Ok((a, b)) => (Some(a), Some(b)),
        Err(_) => (None, None),
    };
    Ok(MlmcResult {
        estimate: levels.iter().map(LevelStats::mean).sum(),
        eps,
        total_cost: levels.iter().map(|l| l.cost).sum(),
        alpha_hat,
        beta_hat,
        levels,
        converged,
        refine: cfg.refine,
    })
}
