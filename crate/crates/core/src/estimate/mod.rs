//! Structural estimation: recovering the behavioral parameters from a panel.
//!
//! The estimation proceeds in two steps, mirroring how the parameters enter
//! the model. Step one uses reported beliefs and choices directly:
//! [`fit_c_ols`] recovers the belief-updating exponent `c` from the linear
//! relation between reported log-odds and signal log-likelihood-ratios, and
//! [`fit_beta_logit`] recovers the choice precision `β` by scalar logistic
//! maximum likelihood. Step two, [`fit_beta_tilde_nls`], holds the fitted
//! exponent fixed and recovers the precision `β̃` the subjects attribute to
//! their neighbors by least squares on social-condition log-odds.
//!
//! Submodules add the non-parametric side: [`kernel`] for Nadaraya-Watson
//! curves and [`regression`] for the covariate regressions.

pub mod kernel;
pub mod regression;

use crate::agents::{social_signal_likelihoods, AgentKind, AgentParams};
use crate::env::{
    bayes_posterior, likelihood_count, EnvError, InformationStructure, Signal, State,
};
use crate::sim::{Condition, Panel, Treatment, TrialRecord};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("need at least {need} usable observations, got {got}")]
    InsufficientData { need: usize, got: usize },
    #[error("no convergence after {0} iterations")]
    NonConvergence(usize),
    #[error("design matrix is rank-deficient")]
    RankDeficient,
    #[error("outcome perfectly separated; coefficients diverge")]
    Separation,
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// A scalar estimate with its uncertainty and fitting diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub estimate: f64,
    pub std_error: f64,
    /// Observations entering the fit.
    pub n_used: usize,
    /// Observations dropped by the usability rules (log-odds undefined,
    /// no likelihood variation, …).
    pub n_dropped: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Residual sum of squares for the least-squares fits, log-likelihood
    /// for the maximum-likelihood fit.
    pub objective_at_optimum: f64,
    /// Non-fatal diagnostics (separation, bracket boundary, …).
    pub warning: Option<String>,
}

/// Which belief enters the choice model of [`fit_beta_logit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorSource {
    /// The subject's own reported posterior.
    Reported,
    /// The Bayesian benchmark posterior for what the subject observed.
    Bayesian,
}

/// The signal a neighbor's guess reveals when the neighbor maps balls to
/// guesses rationally: guessing X means their ball was the color pointing
/// at X.
pub(crate) fn guess_signal(guess: State) -> Signal {
    match guess {
        State::X => Signal::White,
        State::Y => Signal::Black,
    }
}

/// Reported belief that the state is X, as log-odds. `None` when the report
/// pins the belief to 0 or 100 percent (log-odds undefined); with
/// `winsorize` those reports are pulled to 1/99 instead of dropped.
fn reported_log_odds_x(record: &TrialRecord, winsorize: bool) -> Option<f64> {
    let mut pct = record.reported_posterior_pct;
    if winsorize {
        pct = pct.clamp(1, 99);
    }
    if pct == 0 || pct == 100 {
        return None;
    }
    let conf = f64::from(pct) / 100.0;
    let p_x = match record.choice {
        State::X => conf,
        State::Y => 1.0 - conf,
    };
    Some((p_x / (1.0 - p_x)).ln())
}

/// Log likelihood ratio ln P(s|X)/P(s|Y) of the record's identifying
/// observation: the ball in the individual condition, the neighbor's guess
/// (read as the rational neighbor's signal) in the social condition. `None`
/// when the ratio is zero, infinite, or one — such records carry no usable
/// variation for the log-odds regression.
fn observation_log_ratio(record: &TrialRecord) -> Option<f64> {
    let signal = match record.condition {
        Condition::Individual => record.ball?,
        Condition::Social => guess_signal(record.neighbor_guess?),
    };
    let in_x = likelihood_count(record.structure, signal, State::X);
    let in_y = likelihood_count(record.structure, signal, State::Y);
    if in_x == 0 || in_y == 0 || in_x == in_y {
        return None;
    }
    Some((f64::from(in_x) / f64::from(in_y)).ln())
}

/// Least-squares slope of `ys` on `xs` through the origin, with the
/// conventional standard error (error variance from residuals on n−1
/// degrees of freedom).
pub fn ols_through_origin(xs: &[f64], ys: &[f64]) -> Result<EstimationResult, EstimateError> {
    if xs.len() != ys.len() {
        return Err(EstimateError::BadInput(format!(
            "x and y lengths differ ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 2 {
        return Err(EstimateError::InsufficientData { need: 2, got: n });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(EstimateError::BadInput("non-finite observation".into()));
    }
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return Err(EstimateError::BadInput(
            "no variation in the regressor".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x).powi(2))
        .sum();
    let sigma2 = rss / (n as f64 - 1.0);
    Ok(EstimationResult {
        estimate: slope,
        std_error: (sigma2 / sxx).sqrt(),
        n_used: n,
        n_dropped: 0,
        converged: true,
        iterations: 0,
        objective_at_optimum: rss,
        warning: None,
    })
}

/// Belief-updating exponent `c`: slope of reported log-odds on the signal's
/// log likelihood ratio, through the origin. Records are dropped (and
/// counted) when the report is 0/100 — unless `winsorize` pulls them to
/// 1/99 — or when the likelihood ratio carries no variation.
pub fn fit_c_ols(
    panel: &Panel,
    condition: Condition,
    winsorize: bool,
) -> Result<EstimationResult, EstimateError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0usize;
    for record in panel.in_condition(condition) {
        match (
            observation_log_ratio(record),
            reported_log_odds_x(record, winsorize),
        ) {
            (Some(x), Some(y)) => {
                xs.push(x);
                ys.push(y);
            }
            _ => dropped += 1,
        }
    }
    let mut result = ols_through_origin(&xs, &ys)?;
    result.n_dropped = dropped;
    Ok(result)
}

const MAX_NEWTON_ITERATIONS: usize = 100;
const LOGLIK_TOLERANCE: f64 = 1e-10;

/// ln σ(z), computed without overflow on either tail.
fn log_sigmoid(z: f64) -> f64 {
    if z > 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Log-likelihood, score, and information of the scalar choice-precision
/// model at `beta`, over pairs of (2π−1 value, chose-X indicator).
fn beta_logit_curvature(data: &[(f64, bool)], beta: f64, stake: f64) -> (f64, f64, f64) {
    let mut ll = 0.0;
    let mut score = 0.0;
    let mut info = 0.0;
    for &(u, chose_x) in data {
        let z = beta * u * stake;
        let p = 1.0 / (1.0 + (-z).exp());
        let d = f64::from(u8::from(chose_x));
        ll += d * log_sigmoid(z) + (1.0 - d) * log_sigmoid(-z);
        score += (d - p) * u * stake;
        info += p * (1.0 - p) * (u * stake).powi(2);
    }
    (ll, score, info)
}

/// Choice precision `β`: maximum likelihood in the logistic choice rule
/// Pr(D = X) = σ(β·(2π−1)·stake), by Newton iteration with step halving.
/// The belief π comes from the chosen [`PosteriorSource`]. The standard
/// error is the inverse square root of the observed information.
pub fn fit_beta_logit(
    panel: &Panel,
    condition: Condition,
    source: PosteriorSource,
    stake: f64,
) -> Result<EstimationResult, EstimateError> {
    if !stake.is_finite() || stake <= 0.0 {
        return Err(EstimateError::BadInput(format!(
            "stake {stake} must be positive"
        )));
    }
    let mut data: Vec<(f64, bool)> = Vec::new();
    for record in panel.in_condition(condition) {
        let pi = match source {
            PosteriorSource::Reported => record.recovered_prob_x(),
            PosteriorSource::Bayesian => {
                let signal = match condition {
                    Condition::Individual => record.ball.ok_or_else(|| {
                        EstimateError::BadInput("individual record without ball".into())
                    })?,
                    Condition::Social => guess_signal(record.neighbor_guess.ok_or_else(|| {
                        EstimateError::BadInput("social record without neighbor guess".into())
                    })?),
                };
                bayes_posterior(record.structure, signal)?.prob_x()
            }
        };
        data.push((2.0 * pi - 1.0, record.choice == State::X));
    }
    if data.len() < 2 {
        return Err(EstimateError::InsufficientData {
            need: 2,
            got: data.len(),
        });
    }

    // A monotone likelihood (every informative record's choice on the same
    // side of its belief) has its supremum at infinite β.
    let aligned = |sign: f64| {
        data.iter().all(|&(u, chose_x)| {
            let direction = if chose_x { u } else { -u };
            sign * direction >= 0.0
        }) && data.iter().any(|&(u, _)| u != 0.0)
    };
    let mut warning = None;
    if aligned(1.0) || aligned(-1.0) {
        warning = Some("likelihood monotone in beta (separated choices)".to_string());
    }

    let mut beta = 0.0;
    let (mut ll, mut score, mut info) = beta_logit_curvature(&data, beta, stake);
    if info == 0.0 {
        // Every belief sits at one half: the likelihood is flat in β.
        return Ok(EstimationResult {
            estimate: 0.0,
            std_error: f64::INFINITY,
            n_used: data.len(),
            n_dropped: 0,
            converged: true,
            iterations: 0,
            objective_at_optimum: ll,
            warning: Some("likelihood flat in beta (all beliefs at one half)".to_string()),
        });
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_NEWTON_ITERATIONS {
        iterations += 1;
        let mut step = score / info;
        let mut halvings = 0;
        let (mut new_ll, mut new_score, mut new_info) =
            beta_logit_curvature(&data, beta + step, stake);
        while new_ll < ll && halvings < 60 {
            step /= 2.0;
            halvings += 1;
            (new_ll, new_score, new_info) = beta_logit_curvature(&data, beta + step, stake);
        }
        beta += step;
        let improved = new_ll - ll;
        ll = new_ll;
        score = new_score;
        info = new_info;
        if improved.abs() < LOGLIK_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged && warning.is_none() {
        return Err(EstimateError::NonConvergence(iterations));
    }
    Ok(EstimationResult {
        estimate: beta,
        std_error: 1.0 / info.sqrt(),
        n_used: data.len(),
        n_dropped: 0,
        converged,
        iterations,
        objective_at_optimum: ll,
        warning,
    })
}

/// Options for [`fit_beta_tilde_nls`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlsOptions {
    /// Include bot-treatment social records (excluded by default, like the
    /// ball treatment always is).
    pub include_bot: bool,
    /// Search bracket for β̃.
    pub bracket: (f64, f64),
    /// Winsorize 0/100 reports to 1/99 instead of dropping them.
    pub winsorize: bool,
}

impl Default for NlsOptions {
    fn default() -> Self {
        NlsOptions {
            include_bot: false,
            bracket: (0.0, 1.0),
            winsorize: false,
        }
    }
}

/// The least-squares objective for the neighbor-precision parameter, with
/// observations aggregated by (structure, guess) cell — the model predicts
/// one log-odds per cell, so the residual sum collapses to cell moments.
#[derive(Debug, Clone)]
pub struct NlsProblem {
    cells: Vec<NlsCell>,
    c_hat: f64,
    stake: f64,
    sum_sq: f64,
    pub n_used: usize,
    pub n_dropped: usize,
}

#[derive(Debug, Clone)]
struct NlsCell {
    structure: InformationStructure,
    guess: State,
    n: f64,
    sum_y: f64,
}

impl NlsProblem {
    /// Collects usable social records: base and demographics treatments
    /// (bot under the flag, ball never), with defined reported log-odds.
    pub fn from_panel(
        panel: &Panel,
        c_hat: f64,
        stake: f64,
        options: &NlsOptions,
    ) -> Result<NlsProblem, EstimateError> {
        if !c_hat.is_finite() || c_hat < 0.0 {
            return Err(EstimateError::BadInput(format!(
                "exponent {c_hat} must be finite and non-negative"
            )));
        }
        if !stake.is_finite() || stake <= 0.0 {
            return Err(EstimateError::BadInput(format!(
                "stake {stake} must be positive"
            )));
        }
        let mut cells: BTreeMap<(InformationStructure, State), NlsCell> = BTreeMap::new();
        let mut sum_sq = 0.0;
        let mut n_used = 0usize;
        let mut n_dropped = 0usize;
        for record in panel.in_condition(Condition::Social) {
            let usable_treatment = match record.treatment {
                Some(Treatment::Base) | Some(Treatment::Demographics) => true,
                Some(Treatment::Bot) => options.include_bot,
                _ => false,
            };
            if !usable_treatment {
                continue;
            }
            let Some(guess) = record.neighbor_guess else {
                continue;
            };
            match reported_log_odds_x(record, options.winsorize) {
                Some(y) => {
                    let cell = cells
                        .entry((record.structure, guess))
                        .or_insert_with(|| NlsCell {
                            structure: record.structure,
                            guess,
                            n: 0.0,
                            sum_y: 0.0,
                        });
                    cell.n += 1.0;
                    cell.sum_y += y;
                    sum_sq += y * y;
                    n_used += 1;
                }
                None => n_dropped += 1,
            }
        }
        Ok(NlsProblem {
            cells: cells.into_values().collect(),
            c_hat,
            stake,
            sum_sq,
            n_used,
            n_dropped,
        })
    }

    /// Model-predicted log-odds of believing X after seeing `guess` in
    /// `structure`, when the neighbor is believed to choose with precision
    /// `beta_tilde` (and to update with the same exponent as the subject).
    fn predicted_log_odds(
        &self,
        structure: InformationStructure,
        guess: State,
        beta_tilde: f64,
    ) -> f64 {
        let params = AgentParams {
            c: self.c_hat,
            beta: 0.0,
            beta_tilde,
            c_tilde: self.c_hat,
            report_noise_sd: 0.0,
            kind: AgentKind::Structural,
        };
        let likelihoods = social_signal_likelihoods(&params, structure, self.stake)
            .expect("exponent validated on construction");
        let (in_x, in_y) = likelihoods.for_guess(guess);
        self.c_hat * (in_x.ln() - in_y.ln())
    }

    /// Sum of squared residuals at `beta_tilde`.
    pub fn ssr(&self, beta_tilde: f64) -> f64 {
        let mut total = self.sum_sq;
        for cell in &self.cells {
            let m = self.predicted_log_odds(cell.structure, cell.guess, beta_tilde);
            total += m * (cell.n * m - 2.0 * cell.sum_y);
        }
        total.max(0.0)
    }
}

const GOLDEN_RATIO_COMPLEMENT: f64 = 0.381_966_011_250_105_2; // (3 − √5)/2
const NLS_GRID_POINTS: usize = 10_000;
const NLS_RELATIVE_TOLERANCE: f64 = 1e-10;

/// Golden-section minimization of `f` on [lo, hi] to the given relative
/// interval tolerance. Returns (argmin, iterations).
fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, rel_tol: f64) -> (f64, usize) {
    let mut a = lo;
    let mut b = hi;
    let mut x1 = a + GOLDEN_RATIO_COMPLEMENT * (b - a);
    let mut x2 = b - GOLDEN_RATIO_COMPLEMENT * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    while b - a > rel_tol * (a.abs() + b.abs()) / 2.0 + f64::MIN_POSITIVE {
        iterations += 1;
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + GOLDEN_RATIO_COMPLEMENT * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - GOLDEN_RATIO_COMPLEMENT * (b - a);
            f2 = f(x2);
        }
        if iterations > 200 {
            break;
        }
    }
    ((a + b) / 2.0, iterations)
}

/// Neighbor-precision `β̃`: least squares of social reported log-odds on the
/// model's predicted log-odds, holding the updating exponent at `c_hat`.
/// Minimized by golden section over the bracket and cross-checked against a
/// dense grid scan; the standard error comes from the objective's numerical
/// curvature at the optimum.
pub fn fit_beta_tilde_nls(
    panel: &Panel,
    c_hat: f64,
    stake: f64,
    options: &NlsOptions,
) -> Result<EstimationResult, EstimateError> {
    let (lo, hi) = options.bracket;
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo >= hi {
        return Err(EstimateError::BadInput(format!("bad bracket [{lo}, {hi}]")));
    }
    let problem = NlsProblem::from_panel(panel, c_hat, stake, options)?;
    if problem.n_used < 2 {
        return Err(EstimateError::InsufficientData {
            need: 2,
            got: problem.n_used,
        });
    }

    let (golden, iterations) = golden_section(|t| problem.ssr(t), lo, hi, NLS_RELATIVE_TOLERANCE);

    // Independent dense scan: the two optimizers must land on the same
    // minimum, or the objective is not as well-behaved as assumed.
    let spacing = (hi - lo) / (NLS_GRID_POINTS - 1) as f64;
    let mut grid_best = lo;
    let mut grid_best_value = f64::INFINITY;
    for i in 0..NLS_GRID_POINTS {
        let t = lo + spacing * i as f64;
        let v = problem.ssr(t);
        if v < grid_best_value {
            grid_best_value = v;
            grid_best = t;
        }
    }
    let mut converged = true;
    let mut warning = None;
    if (golden - grid_best).abs() > 1e-4 + spacing {
        converged = false;
        warning = Some(format!(
            "optimizer cross-check failed: golden section at {golden:.6}, grid scan at {grid_best:.6}"
        ));
    } else if golden - lo < 2.0 * spacing || hi - golden < 2.0 * spacing {
        warning = Some(format!("estimate at bracket boundary [{lo}, {hi}]"));
    }

    let ssr = problem.ssr(golden);
    let sigma2 = ssr / (problem.n_used as f64 - 1.0);
    // Curvature by central second difference, shifted inward at the edges.
    let h = 1e-4 * (hi - lo);
    let center = golden.clamp(lo + h, hi - h);
    let curvature =
        (problem.ssr(center - h) - 2.0 * problem.ssr(center) + problem.ssr(center + h)) / (h * h);
    let std_error = if curvature > 0.0 {
        (2.0 * sigma2 / curvature).sqrt()
    } else {
        if warning.is_none() {
            warning = Some("objective has no usable curvature at the optimum".to_string());
        }
        f64::INFINITY
    };

    Ok(EstimationResult {
        estimate: golden,
        std_error,
        n_used: problem.n_used,
        n_dropped: problem.n_dropped,
        converged,
        iterations,
        objective_at_optimum: ssr,
        warning,
    })
}
