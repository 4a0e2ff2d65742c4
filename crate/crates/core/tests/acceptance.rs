//! Release gate: one test per headline guarantee of the toolkit, each
//! printing a single `criterion N: PASS`/`criterion N: FAIL` line (visible
//! with `cargo test --test acceptance -- --nocapture`, or on failure).
//!
//! Tolerances are frozen here after a 100-seed validation sweep of the exact
//! configurations used below; the margins observed in that sweep are noted
//! next to each constant.

use oblearn::agents::grether_posterior;
use oblearn::classify::{rate_tables, ClassifyOptions, RateCell};
use oblearn::cli::{run, RunConfig, Subcommand};
use oblearn::env::{bayes_posterior, enumerate_structures, Signal};
use oblearn::estimate::kernel::kernel_regression;
use oblearn::estimate::{
    fit_beta_logit, fit_beta_tilde_nls, fit_c_ols, NlsOptions, NlsProblem, PosteriorSource,
};
use oblearn::rng::{standard_normal, substream};
use oblearn::sim::{simulate_experiment, Condition, ParamDist, SimConfig, Treatment};
use oblearn::stats::{anderson_darling_2, paired_rate_test, prop_test_one, two_prop_test};
use rand::Rng;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

/// Default generator values the recovery criteria target.
const C_TRUE: f64 = 0.888;
const BETA_TRUE: f64 = 0.472;
const BETA_TILDE_TRUE: f64 = 0.038;
const STAKE: f64 = 12.0;

/// Criterion 2 tolerances. Worst cases over the 100-seed sweep of this exact
/// configuration: |c error| 0.0035, |beta error| 0.034.
const C_TOLERANCE: f64 = 0.03;
const BETA_TOLERANCE: f64 = 0.06;

/// Criterion 4 tolerance. Worst case observed across sweep seeds: 0.0007.
const BETA_TILDE_TOLERANCE: f64 = 0.01;

/// Criterion 6 tolerance on the reasoning-rate gap at 10^4 rounds per
/// condition (observed 0.0003 at the frozen seed).
const REASONING_GAP_TOLERANCE: f64 = 0.01;

/// Criterion 8 acceptance band for the empirical size of a nominal-5% test.
const SIZE_BAND: (f64, f64) = (0.03, 0.07);

fn verdict(criterion: u32, ok: bool, detail: &str) {
    let word = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {word} ({detail})");
    assert!(ok, "criterion {criterion}: FAIL ({detail})");
}

/// 150 subjects, 21 rounds per condition, point-mass defaults, no reporting
/// noise. The bot arm needs no neighbor pool, which keeps 100 replications
/// cheap; individual-condition rounds are generated identically in every arm.
fn recovery_config(seed: u64) -> SimConfig {
    let mut config = SimConfig {
        master_seed: seed,
        pool_size: 0,
        ..SimConfig::default()
    };
    config.treatments = vec![Treatment::Bot];
    config.subjects = [(Treatment::Bot, 150)].into_iter().collect();
    config
}

/// All four arms at 40 subjects each, generator defaults.
fn four_arm_config(seed: u64) -> SimConfig {
    let mut config = SimConfig {
        master_seed: seed,
        ..SimConfig::default()
    };
    config.subjects = Treatment::ALL.iter().map(|&t| (t, 40)).collect();
    config
}

/// One arm with a human neighbor pool, 10 subjects x 1000 rounds, so each
/// condition holds 10^4 rounds.
fn decomposition_config(seed: u64, beta_tilde: f64) -> SimConfig {
    let mut config = SimConfig {
        master_seed: seed,
        pool_size: 30,
        ..SimConfig::default()
    };
    config.treatments = vec![Treatment::Base];
    config.subjects = [(Treatment::Base, 10)].into_iter().collect();
    config.rounds_per_condition = 1000;
    config.population.beta_tilde = ParamDist::Point(beta_tilde);
    config
}

#[test]
fn criterion_1_unit_exponent_reproduces_the_exact_posterior() {
    let start = Instant::now();
    let structures = enumerate_structures();
    let mut worst = 0.0f64;
    for &structure in &structures {
        for signal in [Signal::White, Signal::Black] {
            let exact = bayes_posterior(structure, signal).unwrap().prob_x();
            let graded = grether_posterior(1.0, structure, signal).unwrap().prob_x();
            worst = worst.max((exact - graded).abs());
        }
    }
    let elapsed = start.elapsed();
    let ok = structures.len() == 21 && worst <= 1e-12 && elapsed < Duration::from_secs(1);
    verdict(
        1,
        ok,
        &format!(
            "max deviation {worst:.2e} over {} structures x 2 signals in {elapsed:?}",
            structures.len()
        ),
    );
}

#[test]
fn criterion_2_individual_round_parameter_recovery() {
    let start = Instant::now();
    let panel = simulate_experiment(&recovery_config(10_042)).unwrap();
    let c = fit_c_ols(&panel, Condition::Individual, false).unwrap();
    let beta = fit_beta_logit(
        &panel,
        Condition::Individual,
        PosteriorSource::Reported,
        STAKE,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let c_err = (c.estimate - C_TRUE).abs();
    let beta_err = (beta.estimate - BETA_TRUE).abs();
    let ok = c_err <= C_TOLERANCE
        && beta_err <= BETA_TOLERANCE
        && beta.converged
        && elapsed < Duration::from_secs(10);
    verdict(
        2,
        ok,
        &format!(
            "c_hat {:.4} (err {c_err:.4} <= {C_TOLERANCE}), beta_hat {:.4} (err {beta_err:.4} <= {BETA_TOLERANCE}), {elapsed:?}",
            c.estimate, beta.estimate
        ),
    );
}

#[test]
fn criterion_3_bayesian_source_attenuates_beta_across_seeds() {
    let mut below = 0usize;
    for seed in 0..100u64 {
        let panel = simulate_experiment(&recovery_config(10_000 + seed)).unwrap();
        let reported = fit_beta_logit(
            &panel,
            Condition::Individual,
            PosteriorSource::Reported,
            STAKE,
        )
        .unwrap();
        let bayes = fit_beta_logit(
            &panel,
            Condition::Individual,
            PosteriorSource::Bayesian,
            STAKE,
        )
        .unwrap();
        if bayes.estimate < reported.estimate {
            below += 1;
        }
    }
    verdict(
        3,
        below >= 95,
        &format!("bayes-source beta below reported-source in {below}/100 seeds (need >= 95)"),
    );
}

#[test]
fn criterion_4_neighbor_precision_recovery() {
    let mut config = SimConfig {
        master_seed: 20_003,
        pool_size: 40,
        ..SimConfig::default()
    };
    config.treatments = vec![Treatment::Base, Treatment::Demographics];
    config.subjects = [(Treatment::Base, 72), (Treatment::Demographics, 72)]
        .into_iter()
        .collect();
    let panel = simulate_experiment(&config).unwrap();
    let social_rounds = panel.in_condition(Condition::Social).count();

    let options = NlsOptions::default();
    let fit = fit_beta_tilde_nls(&panel, C_TRUE, STAKE, &options).unwrap();
    let err = (fit.estimate - BETA_TILDE_TRUE).abs();

    // Independent 10^4-interval grid scan (spacing 1e-4) of the same
    // objective; its argmin must sit within 1e-4 of the golden-section one.
    let problem = NlsProblem::from_panel(&panel, C_TRUE, STAKE, &options).unwrap();
    let (lo, hi) = options.bracket;
    let spacing = (hi - lo) / 10_000.0;
    let grid_argmin = (0..=10_000)
        .map(|i| lo + spacing * i as f64)
        .min_by(|&a, &b| problem.ssr(a).total_cmp(&problem.ssr(b)))
        .unwrap();
    let argmin_gap = (fit.estimate - grid_argmin).abs();

    let ok = social_rounds >= 3000
        && fit.converged
        && fit.warning.is_none()
        && err <= BETA_TILDE_TOLERANCE
        && argmin_gap <= 1e-4;
    verdict(
        4,
        ok,
        &format!(
            "beta_tilde_hat {:.4} (err {err:.4} <= {BETA_TILDE_TOLERANCE}) on {social_rounds} social rounds, |golden - grid| {argmin_gap:.2e} <= 1e-4",
            fit.estimate
        ),
    );
}

fn social_cell(tables: &BTreeMap<(Treatment, Condition), RateCell>, arm: Treatment) -> RateCell {
    tables[&(arm, Condition::Social)]
}

fn rate_gap_p(a: RateCell, b: RateCell) -> f64 {
    two_prop_test(a.irrational, a.n, b.irrational, b.n)
        .unwrap()
        .p_value
}

#[test]
fn criterion_5_treatment_ordering_of_social_irrationality() {
    let panel = simulate_experiment(&four_arm_config(30_001)).unwrap();
    let tables = rate_tables(&panel, &ClassifyOptions::default()).unwrap();
    let base = social_cell(&tables.by_treatment, Treatment::Base);
    let demo = social_cell(&tables.by_treatment, Treatment::Demographics);
    let bot = social_cell(&tables.by_treatment, Treatment::Bot);
    let ball = social_cell(&tables.by_treatment, Treatment::Ball);
    let individual = tables.overall[&Condition::Individual];

    // The claimed chain is base ~ demographics > bot > ball ~ individual:
    // "~" legs must not separate (p >= 0.05), ">" legs must (p < 0.05, right
    // direction).
    let base_demo_p = rate_gap_p(base, demo);
    let demo_bot_p = rate_gap_p(demo, bot);
    let bot_ball_p = rate_gap_p(bot, ball);
    let ball_ind_p = rate_gap_p(ball, individual);
    let legs = [
        ("base ~ demo", base_demo_p >= 0.05),
        ("demo > bot", demo.rate() > bot.rate() && demo_bot_p < 0.05),
        ("bot > ball", bot.rate() > ball.rate() && bot_ball_p < 0.05),
        ("ball ~ individual", ball_ind_p >= 0.05),
    ];
    let failing: Vec<&str> = legs
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|&(name, _)| name)
        .collect();
    verdict(
        5,
        failing.is_empty(),
        &format!(
            "rates base {:.3} demo {:.3} bot {:.3} ball {:.3} individual {:.3}; p: base~demo {:.3}, demo>bot {:.1e}, bot>ball {:.3}, ball~ind {:.3}{}",
            base.rate(),
            demo.rate(),
            bot.rate(),
            ball.rate(),
            individual.rate(),
            base_demo_p,
            demo_bot_p,
            bot_ball_p,
            ball_ind_p,
            if failing.is_empty() {
                String::new()
            } else {
                format!("; failing legs: {}", failing.join(", "))
            }
        ),
    );
}

/// With full trust in the bot (the default attributed precision of 1000) the
/// bot arm's belief distribution coincides with the shown-ball arm's, so the
/// bot > ball leg above has no signal to find. Lowering the attributed
/// precision to 0.15 — trust well above the human-neighbor level but well
/// below rational — produces the full published ordering. This documents that
/// the chain is attainable in the generator; the criterion itself is asserted
/// at the stated defaults above.
#[test]
fn treatment_ordering_holds_with_calibrated_bot_trust() {
    let mut config = four_arm_config(30_001);
    config.bot_beta_tilde = 0.15;
    let panel = simulate_experiment(&config).unwrap();
    let tables = rate_tables(&panel, &ClassifyOptions::default()).unwrap();
    let base = social_cell(&tables.by_treatment, Treatment::Base);
    let demo = social_cell(&tables.by_treatment, Treatment::Demographics);
    let bot = social_cell(&tables.by_treatment, Treatment::Bot);
    let ball = social_cell(&tables.by_treatment, Treatment::Ball);
    let individual = tables.overall[&Condition::Individual];

    assert!(rate_gap_p(base, demo) >= 0.05);
    assert!(demo.rate() > bot.rate() && rate_gap_p(demo, bot) < 0.05);
    assert!(bot.rate() > ball.rate() && rate_gap_p(bot, ball) < 0.05);
    assert!(rate_gap_p(ball, individual) >= 0.05);
}

#[test]
fn criterion_6_error_decomposition_across_conditions() {
    // With the same beta in both conditions and rational attributed
    // precision, belief strength is distributed identically across
    // conditions, so reasoning-error rates must match.
    let panel = simulate_experiment(&decomposition_config(40_005, 1000.0)).unwrap();
    let tables = rate_tables(&panel, &ClassifyOptions::default()).unwrap();
    let individual = tables.overall[&Condition::Individual];
    let social = tables.overall[&Condition::Social];
    let reasoning_gap = (individual.reasoning_error_rate() - social.reasoning_error_rate()).abs();

    // At the default attributed precision — far below rational — social
    // beliefs hug 1/2, so irrational choices there get decomposed into
    // posterior errors at a strictly higher rate than individual rounds.
    let panel = simulate_experiment(&decomposition_config(40_005, BETA_TILDE_TRUE)).unwrap();
    let tables = rate_tables(&panel, &ClassifyOptions::default()).unwrap();
    let posterior_ind = tables.overall[&Condition::Individual].posterior_error_rate();
    let posterior_soc = tables.overall[&Condition::Social].posterior_error_rate();

    let ok = reasoning_gap < REASONING_GAP_TOLERANCE && posterior_soc > posterior_ind;
    verdict(
        6,
        ok,
        &format!(
            "reasoning-rate gap {reasoning_gap:.4} < {REASONING_GAP_TOLERANCE} at rational attribution; posterior rates SOC {posterior_soc:.4} > IND {posterior_ind:.4} at attributed precision {BETA_TILDE_TRUE}"
        ),
    );
}

#[test]
fn criterion_7_kernel_smoother_sanity() {
    // Constant outcomes reproduce the constant exactly at every grid point
    // (4.0 scales weights by an exact power of two, so the weighted mean is
    // bit-exact).
    let xs = [3.0, 17.0, 42.0, 55.0, 71.0, 96.0];
    let constant = [4.0; 6];
    let grid: Vec<f64> = (0..=100).map(f64::from).collect();
    let curve = kernel_regression(&xs, &constant, 15.0, &grid).unwrap();
    let constant_ok = curve.estimates.iter().all(|e| *e == Some(4.0));

    // Bandwidth 10^6 flattens the weights, so every grid point recovers the
    // global mean to 1e-6.
    let ys = [12.0, 88.0, 37.0, 64.0, 5.0, 93.0];
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let curve = kernel_regression(&xs, &ys, 1e6, &grid).unwrap();
    let worst = curve
        .estimates
        .iter()
        .map(|e| (e.unwrap() - mean).abs())
        .fold(0.0f64, f64::max);
    let mean_ok = worst <= 1e-6;

    verdict(
        7,
        constant_ok && mean_ok,
        &format!("constant reproduced exactly: {constant_ok}; max |mean error| {worst:.2e} <= 1e-6 at bandwidth 1e6"),
    );
}

#[test]
fn criterion_8_test_battery_size_calibration() {
    let start = Instant::now();
    let reps = 1000usize;
    let mut rng = substream(99, 9, 0);
    let mut rejections = [0usize; 4];
    for _ in 0..reps {
        // One-sample proportion: k ~ Bin(100, 1/2) tested against 1/2.
        let k = (0..100).filter(|_| rng.random::<f64>() < 0.5).count() as u64;
        if prop_test_one(k, 100, 0.5).unwrap().p_value < 0.05 {
            rejections[0] += 1;
        }
        // Two-sample proportion: both arms Bin(200, 0.3).
        let k1 = (0..200).filter(|_| rng.random::<f64>() < 0.3).count() as u64;
        let k2 = (0..200).filter(|_| rng.random::<f64>() < 0.3).count() as u64;
        if two_prop_test(k1, 200, k2, 200).unwrap().p_value < 0.05 {
            rejections[1] += 1;
        }
        // Paired rates: both coordinates of each pair are independent
        // Bin(21, 0.3)/21 draws, so the mean difference is zero.
        let draw = |rng: &mut rand_chacha::ChaCha12Rng| {
            (0..21).filter(|_| rng.random::<f64>() < 0.3).count() as f64 / 21.0
        };
        let a: Vec<f64> = (0..30).map(|_| draw(&mut rng)).collect();
        let b: Vec<f64> = (0..30).map(|_| draw(&mut rng)).collect();
        if paired_rate_test(&a, &b).unwrap().p_value < 0.05 {
            rejections[2] += 1;
        }
        // Two-sample distribution comparison: both samples standard normal.
        let a: Vec<f64> = (0..30).map(|_| standard_normal(&mut rng)).collect();
        let b: Vec<f64> = (0..30).map(|_| standard_normal(&mut rng)).collect();
        if anderson_darling_2(&a, &b, false).unwrap().p_value < 0.05 {
            rejections[3] += 1;
        }
    }
    let sizes: Vec<f64> = rejections.iter().map(|&r| r as f64 / reps as f64).collect();
    let elapsed = start.elapsed();
    let in_band = sizes
        .iter()
        .all(|&s| (SIZE_BAND.0..=SIZE_BAND.1).contains(&s));
    let ok = in_band && elapsed < Duration::from_secs(60);
    verdict(
        8,
        ok,
        &format!(
            "empirical sizes one-prop {:.3}, two-prop {:.3}, paired {:.3}, distribution {:.3} (band [{}, {}]) in {elapsed:?}",
            sizes[0], sizes[1], sizes[2], sizes[3], SIZE_BAND.0, SIZE_BAND.1
        ),
    );
}

fn tree_snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut snapshot = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        assert!(path.is_file(), "unexpected subdirectory {path:?}");
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        snapshot.insert(name, fs::read(&path).unwrap());
    }
    snapshot
}

#[test]
fn criterion_9_report_pipeline_is_deterministic() {
    let scratch = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for run_index in 0..2 {
        let mut config = RunConfig::default();
        config.sim.master_seed = 777;
        config.sim.pool_size = 20;
        config.sim.subjects = Treatment::ALL.iter().map(|&t| (t, 6)).collect();
        config.out_dir = scratch.path().join(format!("run{run_index}"));
        run(Subcommand::Report, &config).unwrap();
        trees.push(tree_snapshot(&config.out_dir));
    }
    let same_names: Vec<&String> = trees[0].keys().collect();
    let identical = trees[0] == trees[1];
    verdict(
        9,
        identical,
        &format!(
            "two runs produced {} files each, byte-identical: {identical}",
            same_names.len()
        ),
    );
}
