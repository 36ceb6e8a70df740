//! CSV and JSON renderings of results. Floats are written with 17
//! significant digits so values round-trip exactly.

use std::fmt::Write as _;

use serde::Serialize;

use crate::diagnostics::{ComplexityPoint, DnReport, RateReport};
use crate::mlmc::MlmcResult;

/// `x` in scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub const LEVEL_HEADER: &str = "level,N,mean_Y,var_Y,mean_P,var_P,kurtosis,cost";

pub fn level_table_csv(res: &MlmcResult) -> String {
    let mut out = String::from(LEVEL_HEADER);
    out.push('\n');
    for l in &res.levels {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            l.level,
            l.n,
            fmt_f64(l.mean()),
            fmt_f64(l.variance()),
            fmt_f64(l.mean_p()),
            fmt_f64(l.variance_p()),
            fmt_f64(l.kurtosis()),
            l.cost
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub estimate: f64,
    pub eps: f64,
    pub alpha_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    pub total_cost: u64,
    pub converged: bool,
    pub max_level: u32,
    pub statistical_variance: f64,
    pub kurtosis_warnings: Vec<u32>,
}

impl Summary {
    pub fn of(res: &MlmcResult) -> Self {
        Self {
            estimate: res.estimate,
            eps: res.eps,
            alpha_hat: res.alpha_hat,
            beta_hat: res.beta_hat,
            total_cost: res.total_cost,
            converged: res.converged,
            max_level: res.max_level(),
            statistical_variance: res.statistical_variance(),
            kurtosis_warnings: res.kurtosis_warnings(),
        }
    }
}

pub fn summary_json(res: &MlmcResult) -> String {
    serde_json::to_string_pretty(&Summary::of(res)).expect("summary serializes")
}

pub const RATE_HEADER: &str = "model,option,level,N,mean_Y,var_Y,log_M_abs_mean,log_M_var,\
alpha_hat,beta_hat,reference_alpha,reference_beta,tolerance,alpha_pass,beta_pass";

pub fn rate_report_csv(reports: &[RateReport]) -> String {
    let mut out = String::from(RATE_HEADER);
    out.push('\n');
    for r in reports {
        for row in &r.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.model,
                r.option,
                row.level,
                row.n,
                fmt_f64(row.mean),
                fmt_f64(row.variance),
                fmt_f64(row.log_mean),
                fmt_f64(row.log_var),
                fmt_f64(r.alpha_hat),
                fmt_f64(r.beta_hat),
                fmt_opt(r.reference_alpha),
                fmt_opt(r.reference_beta),
                fmt_f64(r.tolerance),
                r.alpha_pass,
                r.beta_pass
            );
        }
    }
    out
}

pub const DN_HEADER: &str =
    "model,n,paths,mean_D,mean_D2,std_error_D,max_D,mean_exponent,second_moment_exponent,reference_multiplier";

pub fn dn_report_csv(report: &DnReport) -> String {
    let mut out = format!("# {}\n{DN_HEADER}\n", report.caveat);
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            report.model,
            row.n,
            row.paths,
            fmt_f64(row.mean),
            fmt_f64(row.second_moment),
            fmt_f64(row.std_error),
            fmt_f64(row.max),
            fmt_f64(report.mean_exponent),
            fmt_f64(report.second_moment_exponent),
            report.reference_multiplier
        );
    }
    out
}

pub const SWEEP_HEADER: &str = "eps,estimate,max_level,mlmc_cost,std_mc_cost,savings,converged";

pub fn sweep_csv(points: &[ComplexityPoint]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(p.eps),
            fmt_f64(p.estimate),
            p.max_level,
            p.mlmc_cost,
            fmt_f64(p.std_mc_cost),
            fmt_f64(p.savings),
            p.converged
        );
    }
    out
}
