//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! (with indented detail lines above it) and exits non-zero if any failed.

use std::process::ExitCode;
use std::time::Instant;

use levy_mlmc::diagnostics::DN_REFERENCE_MULTIPLIER;
use levy_mlmc::mlmc::{optimal_allocation, run_fixed_levels, StreamPlan};
use levy_mlmc::{
    cost_slope, evaluate_pair, measure_dn, measure_rates_multi, run_mlmc, single_level_estimate, ComplexityPoint,
    Domain, GridSpec, LevyModel, MlmcConfig, ModelParams, OptionKind, OptionSpec, PathGenerator, RateSettings,
    RngStream, StableParams,
};

const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        summary: summary.into(),
    }
}

fn presets(model: &LevyModel) -> Vec<OptionSpec> {
    OptionKind::ALL
        .iter()
        .map(|&k| OptionSpec::preset(k, model.rate()))
        .collect()
}

fn mean_and_se(sum: f64, sum2: f64, n: f64) -> (f64, f64) {
    let mean = sum / n;
    let var = (sum2 - sum * sum / n) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn martingale() -> Outcome {
    const PATHS: u64 = 1_000_000;
    let mut pass = true;
    for model in LevyModel::calibrated() {
        let sampler = model.increment_sampler(1.0).unwrap();
        let disc = (-model.rate()).exp();
        let (mut s1, mut s2) = (0.0, 0.0);
        for i in 0..PATHS {
            let mut rng = RngStream::for_path(SEED, Domain::Sampling, 1, i);
            let v = disc * sampler.sample(&mut rng).exp();
            s1 += v;
            s2 += v * v;
        }
        let (mean, se) = mean_and_se(s1, s2, PATHS as f64);
        let z = (mean - 1.0) / se;
        let ok = z.abs() <= 4.0;
        pass &= ok;
        println!("    {:<6} e^-r E[e^X_1] = {mean:.6} (s.e. {se:.2e}, z = {z:+.2})", model.id());
    }
    outcome(pass, "martingale, 10^6 paths per model, within 4 s.e.")
}

fn char_function() -> Outcome {
    const PATHS: u64 = 200_000;
    let us = [0.5, 1.0, 2.0, 5.0];
    let mut pass = true;
    let mut worst = 0.0f64;
    for model in LevyModel::calibrated() {
        for (hi, h) in [1.0 / 64.0, 1.0].into_iter().enumerate() {
            let sampler = model.increment_sampler(h).unwrap();
            let mut sums = [[0.0f64; 4]; 4];
            for i in 0..PATHS {
                let mut rng = RngStream::for_path(SEED, Domain::Sampling, 10 + hi as u32, i);
                let x = sampler.sample(&mut rng);
                for (s, &u) in sums.iter_mut().zip(&us) {
                    let (sin, cos) = (u * x).sin_cos();
                    s[0] += cos;
                    s[1] += cos * cos;
                    s[2] += sin;
                    s[3] += sin * sin;
                }
            }
            for (s, &u) in sums.iter().zip(&us) {
                let exact = model.char_function(u, h);
                let (re, se_re) = mean_and_se(s[0], s[1], PATHS as f64);
                let (im, se_im) = mean_and_se(s[2], s[3], PATHS as f64);
                let z_re = (re - exact.re) / se_re;
                let z_im = (im - exact.im) / se_im;
                let z = z_re.abs().max(z_im.abs());
                worst = worst.max(z);
                let ok = z <= 5.0;
                pass &= ok;
                if !ok {
                    println!(
                        "    {:<6} h = {h:.5} u = {u}: MC {re:.5}{im:+.5}i vs {:.5}{:+.5}i",
                        model.id(),
                        exact.re,
                        exact.im
                    );
                }
            }
        }
    }
    println!("    largest |z| over 48 comparisons: {worst:.2}");
    outcome(pass, "characteristic function, u in {0.5,1,2,5}, h in {1/64,1}, within 5 s.e.")
}

fn table_rates() -> Outcome {
    let settings = RateSettings {
        max_level: 6,
        samples_per_level: 100_000,
        fit_floor_level: 2,
        seed: SEED,
        ..RateSettings::default()
    };
    let mut pass = true;
    for model in LevyModel::calibrated() {
        let reports = measure_rates_multi(&model, &presets(&model), &settings).unwrap();
        for r in reports {
            let ok = r.alpha_pass && r.beta_pass;
            pass &= ok;
            println!(
                "    {:<6} {:<8} alpha {:.3} (ref {:.1}) {}  beta {:.3} (ref {:.1}) {}",
                r.model,
                r.option,
                r.alpha_hat,
                r.reference_alpha.unwrap(),
                if r.alpha_pass { "ok" } else { "OUT" },
                r.beta_hat,
                r.reference_beta.unwrap(),
                if r.beta_pass { "ok" } else { "OUT" },
            );
        }
    }
    outcome(pass, "reference rates, L = 6, N = 10^5, fit on levels >= 2, tolerance 0.3")
}

struct SweepRun {
    model: &'static str,
    points: Vec<ComplexityPoint>,
    variance_ok: bool,
}

const SWEEP_EPS: [f64; 4] = [0.05, 0.02, 0.01, 0.005];

fn asian_sweeps() -> Vec<SweepRun> {
    let cfg = MlmcConfig {
        seed: SEED,
        ..MlmcConfig::default()
    };
    LevyModel::calibrated()
        .iter()
        .map(|model| {
            let spec = OptionSpec::asian(model.rate());
            let mut variance_ok = true;
            let points = SWEEP_EPS
                .iter()
                .map(|&eps| {
                    let res = run_mlmc(model, &spec, eps, &cfg).unwrap();
                    variance_ok &= res.statistical_variance() <= eps * eps / 2.0;
                    ComplexityPoint::from_result(&res)
                })
                .collect();
            SweepRun {
                model: model.id(),
                points,
                variance_ok,
            }
        })
        .collect()
}

fn savings(sweeps: &[SweepRun]) -> Outcome {
    let asian = sweeps
        .iter()
        .find(|s| s.model == "vg")
        .and_then(|s| s.points.iter().find(|p| p.eps == 0.005))
        .expect("VG Asian sweep at 0.005");
    let vg = &LevyModel::calibrated()[0];
    let cfg = MlmcConfig {
        seed: SEED,
        ..MlmcConfig::default()
    };
    let res = run_mlmc(vg, &OptionSpec::lookback(vg.rate()), 0.02, &cfg).unwrap();
    let lookback = ComplexityPoint::from_result(&res);
    let asian_ok = (5.0..=20.0).contains(&asian.savings);
    let lookback_ok = (50.0..=200.0).contains(&lookback.savings);
    println!(
        "    vg asian    eps 0.005: L = {}, savings {:.2} (target [5, 20]) {}",
        asian.max_level,
        asian.savings,
        if asian_ok { "ok" } else { "OUT" }
    );
    println!(
        "    vg lookback eps 0.02:  L = {}, savings {:.2} (target [50, 200]) {}",
        lookback.max_level,
        lookback.savings,
        if lookback_ok { "ok" } else { "OUT" }
    );
    outcome(asian_ok && lookback_ok, "savings factors against plain Monte Carlo")
}

fn complexity(sweeps: &[SweepRun]) -> Outcome {
    let mut pass = true;
    for s in sweeps {
        let slope = cost_slope(&s.points).unwrap();
        let ok = (slope + 2.0).abs() <= 0.3;
        pass &= ok;
        let levels: Vec<String> = s.points.iter().map(|p| p.max_level.to_string()).collect();
        let costs: Vec<String> = s.points.iter().map(|p| format!("{:.3e}", p.mlmc_cost as f64)).collect();
        println!(
            "    {:<6} slope {slope:+.3} (target -2 +/- 0.3) {}  L = [{}]  cost = [{}]",
            s.model,
            if ok { "ok" } else { "OUT" },
            levels.join(", "),
            costs.join(", ")
        );
    }
    outcome(pass, "Asian cost slope over eps in {0.05, 0.02, 0.01, 0.005}")
}

fn telescoping() -> Outcome {
    const L: u32 = 3;
    const N: u64 = 100_000;
    let mut pass = true;
    for model in LevyModel::calibrated() {
        let specs = presets(&model);
        let plan = StreamPlan {
            seed: SEED,
            domain: Domain::Mlmc,
            offset: 0,
        };
        let per_spec = run_fixed_levels(&model, &specs, L, N, 4, plan).unwrap();
        for (spec, levels) in specs.iter().zip(&per_spec) {
            let ml: f64 = levels.iter().map(|l| l.mean()).sum();
            let ml_var: f64 = levels.iter().map(|l| l.estimator_variance()).sum();
            let direct = single_level_estimate(&model, spec, L, N, 4, SEED).unwrap();
            let se = (ml_var + direct.estimator_variance()).sqrt();
            let z = (ml - direct.mean()) / se;
            let ok = z.abs() <= 4.0;
            pass &= ok;
            println!(
                "    {:<6} {:<8} telescoped {ml:.5}  direct {:.5}  z = {z:+.2}",
                model.id(),
                spec.kind.id(),
                direct.mean()
            );
        }
    }
    outcome(pass, "telescoping sum at L = 3 equals direct level-3 estimate within 4 s.e.")
}

fn structural(sweeps: &[SweepRun]) -> Outcome {
    const PATHS: u64 = 2_000;
    let (mut paths, mut coupling_bad, mut mono_bad, mut neg) = (0u64, 0u64, 0u64, 0u64);
    for model in LevyModel::calibrated() {
        let specs = presets(&model);
        for level in 1..=4 {
            let grid = GridSpec::new(level, 4, 1.0).unwrap();
            let generator = PathGenerator::new(&model, grid).unwrap();
            for i in 0..PATHS {
                let mut rng = RngStream::for_path(SEED, Domain::Sampling, 100 + level, i);
                let path = generator.generate(&mut rng);
                paths += 1;
                let coarse = path.coarse.as_ref().unwrap();
                let exact = coarse.len() == grid.n_fine() / 4 + 1
                    && coarse
                        .iter()
                        .enumerate()
                        .all(|(j, c)| c.to_bits() == path.fine[4 * j].to_bits());
                coupling_bad += u64::from(!exact);
                for spec in &specs {
                    let pair = evaluate_pair(&path, spec);
                    let coarse = pair.coarse.unwrap();
                    neg += u64::from(pair.fine < 0.0 || coarse < 0.0);
                    let mono = match spec.kind {
                        OptionKind::LookbackPut => pair.fine <= coarse,
                        OptionKind::UpOutBarrierCall => pair.fine <= coarse,
                        OptionKind::AsianCall => true,
                    };
                    mono_bad += u64::from(!mono);
                }
            }
        }
    }
    println!("    {paths} coupled paths: {coupling_bad} coupling mismatches, {mono_bad} monotonicity violations, {neg} negative payoffs");

    let mut rng = RngStream::for_path(SEED, Domain::Sampling, 200, 0);
    let mut alloc_bad = 0;
    const DRAWS: usize = 1_000;
    for _ in 0..DRAWS {
        let levels = 1 + (rng.next_u64() % 10) as usize;
        let v: Vec<f64> = (0..levels).map(|_| 10f64.powf(-6.0 + 8.0 * rng.next_uniform())).collect();
        let c: Vec<f64> = (0..levels).map(|l| 4f64.powi(l as i32)).collect();
        let eps = 10f64.powf(-3.0 + 2.0 * rng.next_uniform());
        let n = optimal_allocation(&v, &c, eps);
        let achieved: f64 = v.iter().zip(&n).map(|(v, &n)| v / n as f64).sum();
        alloc_bad += usize::from(achieved > eps * eps / 2.0 || n.iter().any(|&n| n < 100));
    }
    let runs_ok = sweeps.iter().all(|s| s.variance_ok);
    println!(
        "    allocation: {alloc_bad}/{DRAWS} draws over eps^2/2; {} driver runs with sum V/N <= eps^2/2: {}",
        sweeps.len() * SWEEP_EPS.len(),
        if runs_ok { "all" } else { "NOT all" }
    );
    // Lookback put pays K - max, and the fine maximum dominates the coarse
    // one, so P_fine <= P_coarse; the up-and-out call knocks out at least as
    // often on the fine grid, so the same ordering holds.
    let pass = coupling_bad == 0 && mono_bad == 0 && neg == 0 && alloc_bad == 0 && runs_ok;
    outcome(pass, "structural invariants on every sampled path and run")
}

fn dn_decay() -> Outcome {
    let n_list = [4, 16, 64, 256];
    let [vg, _, stable] = LevyModel::calibrated();
    let alpha = match stable.params() {
        ModelParams::Stable(StableParams { alpha, .. }) => *alpha,
        _ => unreachable!(),
    };
    let mut pass = true;
    for (model, target) in [(vg, 1.0), (stable, 1.0 / alpha)] {
        let report = measure_dn(&model, &n_list, 10_000, DN_REFERENCE_MULTIPLIER, SEED).unwrap();
        let ok = (report.mean_exponent - target).abs() <= 0.3;
        pass &= ok;
        println!(
            "    {:<6} E[D_n] exponent {:.3} (target {target:.3} +/- 0.3) {}",
            report.model,
            report.mean_exponent,
            if ok { "ok" } else { "OUT" }
        );
    }
    println!("    indicative only: the supremum is taken on a {DN_REFERENCE_MULTIPLIER}x refined grid");
    outcome(pass, "D_n decay exponents")
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are not meaningful for this target.
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let mut results: Vec<(u32, Outcome)> = Vec::new();
    let mut run = |id: u32, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        println!(
            "{} criterion {id}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.summary,
            start.elapsed().as_secs_f64()
        );
        results.push((id, o));
    };
    run(1, &martingale);
    run(2, &char_function);
    run(3, &table_rates);
    let sweeps = asian_sweeps();
    run(4, &|| savings(&sweeps));
    run(5, &|| complexity(&sweeps));
    run(6, &telescoping);
    run(7, &|| structural(&sweeps));
    run(8, &dn_decay);

    let failed: Vec<String> = results
        .iter()
        .filter(|(_, o)| !o.pass)
        .map(|(id, _)| id.to_string())
        .collect();
    println!();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} of {} criteria failed: {}", failed.len(), results.len(), failed.join(", "));
        ExitCode::FAILURE
    }
}
