//! `verify` subcommand: re-runs the numerical diagnostic suites and emits a
//! machine-readable report. Every check carries the measured value and the
//! limit it was judged against, so failures are inspectable from the JSON
//! alone.

use adavol::diagnostics::{
    gibbs_mass_split, kl_vs_gibbs, lemma_a1_check, step_size_bound,
    theorem_step_inequality_check, total_variation_vs_gibbs, HistogramDensity, TheoryConstants,
};
use adavol::diffusion::{detailed_balance_report, ActivationParams};
use adavol::grid::uniform_grid;
use adavol::objective::{DoubleWell, FnObjective, Objective, Quadratic, ShiftedRastrigin};
use adavol::samplers::{init_ensemble, step, Method, SamplerConfig};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    All,
    Balance,
    Lemma,
    Theorem,
    Kl,
    Gibbs,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Balance => "balance",
            Suite::Lemma => "lemma",
            Suite::Theorem => "theorem",
            Suite::Kl => "kl",
            Suite::Gibbs => "gibbs",
        }
    }
}

#[derive(Serialize)]
pub struct Check {
    suite: &'static str,
    name: String,
    pass: bool,
    measured: f64,
    limit: f64,
    comparison: &'static str,
}

impl Check {
    fn upper(suite: &'static str, name: String, measured: f64, limit: f64) -> Self {
        Check {
            suite,
            name,
            pass: measured < limit,
            measured,
            limit,
            comparison: "<",
        }
    }

    fn lower(suite: &'static str, name: String, measured: f64, limit: f64) -> Self {
        Check {
            suite,
            name,
            pass: measured > limit,
            measured,
            limit,
            comparison: ">",
        }
    }
}

#[derive(Serialize)]
pub struct Report {
    pub suite: String,
    pub passed: usize,
    pub failed: usize,
    pub all_pass: bool,
    pub checks: Vec<Check>,
}

pub fn run_suite(suite: Suite) -> Report {
    let mut checks = Vec::new();
    match suite {
        Suite::All => {
            checks.extend(balance_suite());
            checks.extend(lemma_suite());
            checks.extend(theorem_suite());
            checks.extend(kl_suite());
            checks.extend(gibbs_suite());
        }
        Suite::Balance => checks.extend(balance_suite()),
        Suite::Lemma => checks.extend(lemma_suite()),
        Suite::Theorem => checks.extend(theorem_suite()),
        Suite::Kl => checks.extend(kl_suite()),
        Suite::Gibbs => checks.extend(gibbs_suite()),
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let failed = checks.len() - passed;
    Report {
        suite: suite.name().to_string(),
        passed,
        failed,
        all_pass: failed == 0,
        checks,
    }
}

/// Stationarity residual of the modified diffusion on a grid pair: spacing
/// halving must shrink the sup residual by the central-difference factor and
/// land it below 1e-3 in relative terms.
fn balance_suite() -> Vec<Check> {
    let cases: Vec<(&str, Box<dyn Objective>, f64, f64, f64)> = vec![
        ("quadratic", Box::new(Quadratic::new(1, 1.0)), -8.0, 8.0, 0.0),
        (
            "double_well",
            Box::new(DoubleWell::symmetric()),
            -4.0,
            4.0,
            -0.25,
        ),
    ];
    let mut checks = Vec::new();
    for (name, f, lo, hi, fmin) in &cases {
        for lambda in [0.0, 1.0, 10.0] {
            for beta in [1.0, 5.0] {
                let p = ActivationParams::new(lambda, 1.0, fmin - 0.5).unwrap();
                let tag = format!("{name}_lambda{lambda}_beta{beta}");
                let coarse_points = ((hi - lo) / 2e-3) as usize + 1;
                let fine_points = ((hi - lo) / 1e-3) as usize + 1;
                let coarse = detailed_balance_report(
                    &p,
                    f.as_ref(),
                    beta,
                    &uniform_grid(*lo, *hi, coarse_points),
                )
                .unwrap()
                .relative_sup();
                let fine = detailed_balance_report(
                    &p,
                    f.as_ref(),
                    beta,
                    &uniform_grid(*lo, *hi, fine_points),
                )
                .unwrap()
                .relative_sup();
                checks.push(Check::upper("balance", format!("{tag}_residual"), fine, 1e-3));
                checks.push(Check::lower(
                    "balance",
                    format!("{tag}_refinement_factor"),
                    coarse / fine,
                    3.5,
                ));
            }
        }
    }
    checks
}

/// E[|F'|^2] under the Gibbs measure against the L/beta ceiling; exact
/// equality for quadratics is the sharp case.
fn lemma_suite() -> Vec<Check> {
    let mut checks = Vec::new();
    let grid = uniform_grid(-8.0, 8.0, 16001);
    for curvature in [0.5, 1.0, 2.5] {
        let q = Quadratic::new(1, curvature);
        let rep = lemma_a1_check(&q, 2.0, curvature, &grid).unwrap();
        checks.push(Check::upper(
            "lemma",
            format!("quadratic_curv{curvature}_equality_rel_err"),
            (rep.lhs / rep.rhs - 1.0).abs(),
            1e-8,
        ));
    }

    let cos_perturbed = FnObjective::new(1, |x| 0.5 * x[0] * x[0] + 0.1 * x[0].cos())
        .with_gradient(|x, out| out[0] = x[0] - 0.1 * x[0].sin())
        .with_smoothness_bound(1.1);
    let rep = lemma_a1_check(&cos_perturbed, 2.0, 1.1, &grid).unwrap();
    checks.push(Check::upper(
        "lemma",
        "cos_perturbed_lhs_vs_bound".to_string(),
        rep.lhs,
        rep.rhs,
    ));

    let rastrigin = ShiftedRastrigin::new(1);
    let l = rastrigin.smoothness_bound().unwrap();
    let rep = lemma_a1_check(&rastrigin, 2.0, l, &uniform_grid(-10.0, 12.0, 22001)).unwrap();
    checks.push(Check::upper(
        "lemma",
        "rastrigin_lhs_vs_bound".to_string(),
        rep.lhs,
        rep.rhs,
    ));
    checks
}

/// Per-step KL contraction inequality along an exactly tractable Gaussian
/// chain, probed at every step of a 500-iteration run.
fn theorem_suite() -> Vec<Check> {
    let f = Quadratic::new(1, 1.0);
    let tc = TheoryConstants::for_quadratic(&f, 1.0, 0.0).unwrap();
    let eta = step_size_bound(&tc, 1.0, 1.0) / 10.0;
    let cfg = SamplerConfig {
        method: Method::Langevin,
        eta,
        beta: 1.0,
        init_mean: vec![3.0],
        init_cov_scale: 1.0,
        ..SamplerConfig::default()
    };
    let probes: Vec<u64> = (1..=500).collect();
    let out = theorem_step_inequality_check(&f, &cfg, &probes).unwrap();
    let violations = out.iter().filter(|p| !p.pass).count() as f64;
    let final_kl = out.last().unwrap().kl_after;
    let initial_kl = out.first().unwrap().kl_before;
    vec![
        Check::upper("theorem", "inequality_violations".to_string(), violations, 0.5),
        Check::upper(
            "theorem",
            "kl_decay_ratio_after_500_steps".to_string(),
            final_kl / initial_kl,
            1e-3,
        ),
    ]
}

/// Histogram KL to the Gibbs target along a Langevin ensemble must fall
/// across widening iteration probes.
fn kl_suite() -> Vec<Check> {
    let f = Quadratic::new(1, 1.0);
    let cfg = SamplerConfig {
        method: Method::Langevin,
        eta: 1e-3,
        beta: 1.0,
        chains: 4000,
        seed: 7,
        init_mean: vec![5.0],
        init_cov_scale: 1.0,
        ..SamplerConfig::default()
    };
    let mut ens = init_ensemble(&cfg, &f).unwrap();
    let mut kls = Vec::new();
    let mut k = 0u64;
    for probe in [20u64, 200, 2000] {
        while k < probe {
            step(&mut ens, &cfg, &f).unwrap();
            k += 1;
        }
        let hist = HistogramDensity::from_samples_auto(ens.positions(), 60).unwrap();
        kls.push(kl_vs_gibbs(&hist, &f, cfg.beta).unwrap());
    }
    vec![
        Check::upper("kl", "ratio_kl200_over_kl20".to_string(), kls[1] / kls[0], 1.0),
        Check::upper("kl", "ratio_kl2000_over_kl200".to_string(), kls[2] / kls[1], 1.0),
        Check::upper("kl", "final_kl_at_2000".to_string(), kls[2], 1.0),
    ]
}

/// Low-temperature concentration on the deeper well: quadrature masses plus
/// a long ULA run's histogram distance to the Gibbs density.
fn gibbs_suite() -> Vec<Check> {
    let dw = DoubleWell::tilted(0.05);
    let grid = uniform_grid(-4.0, 4.0, 16001);
    let (deep50, _) = gibbs_mass_split(&dw, 50.0, &grid, dw.barrier()).unwrap();
    let (deep100, _) = gibbs_mass_split(&dw, 100.0, &grid, dw.barrier()).unwrap();

    let cfg = SamplerConfig {
        method: Method::Langevin,
        eta: 1e-4,
        beta: 50.0,
        chains: 20_000,
        seed: 77,
        init_mean: vec![dw.deeper_minimum()],
        init_cov_scale: 0.01,
        ..SamplerConfig::default()
    };
    let mut ens = init_ensemble(&cfg, &dw).unwrap();
    for _ in 0..40_000u64 {
        step(&mut ens, &cfg, &dw).unwrap();
    }
    let hist = HistogramDensity::from_samples_auto(ens.positions(), 50).unwrap();
    let tv = total_variation_vs_gibbs(&hist, &dw, 50.0).unwrap();

    vec![
        Check::lower("gibbs", "deeper_mass_beta50".to_string(), deep50, 0.9),
        Check::lower("gibbs", "deeper_mass_beta100".to_string(), deep100, 0.99),
        Check::upper("gibbs", "ula_histogram_tv_beta50".to_string(), tv, 0.05),
    ]
}
