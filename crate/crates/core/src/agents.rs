//! Behavioral agents for the two decision stages.
//!
//! Stage one forms a belief: a power-weighted (Grether-style) posterior with
//! exponent `c` on the likelihoods, `c = 1` being exact Bayes. Stage two turns
//! the belief into a choice through a logistic (quantal-response) rule with
//! precision `beta`, scaled by the stake.
//!
//! In the social condition the subject sees a neighbor's guess instead of the
//! ball. The subject models that neighbor as another two-stage agent with
//! precision `beta_tilde` and exponent `c_tilde`, which turns the guess into a
//! signal with its own likelihoods (a mixture over the ball the neighbor must
//! have seen); the subject then updates on those with her own exponent `c`.

use crate::env::{
    bayes_posterior, likelihood, rational_choice, EnvError, InformationStructure, Posterior,
    Signal, State,
};
use crate::sim::{Condition, Treatment};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AgentError {
    #[error("parameter {name} = {value} is not allowed ({requirement})")]
    BadParameter {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },
    #[error("signal has zero probability under both states")]
    DegenerateSignal,
    #[error("trial context is missing the {0} the condition requires")]
    MissingObservation(&'static str),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// What generates a decision-maker's choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    /// Two-stage behavioral model driven by the numeric parameters.
    Structural,
    /// Exact Bayesian posterior and deterministic best response (ties split
    /// by coin). Ignores `c`, `beta`, `beta_tilde`, `c_tilde`.
    ExactBayesianRational,
    /// The automated neighbor: guesses the majority box for its ball, coin on
    /// ties. Ignores every numeric field.
    Bot,
}

/// Behavioral parameters of one decision maker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentParams {
    /// Updating exponent on likelihoods; 1 is Bayes, 0 ignores the signal.
    pub c: f64,
    /// Choice precision per unit of stake.
    pub beta: f64,
    /// Precision the subject attributes to a human neighbor's choice stage.
    pub beta_tilde: f64,
    /// Updating exponent the subject attributes to the neighbor.
    pub c_tilde: f64,
    /// Standard deviation of the noise added to reported confidences, in
    /// percentage points.
    pub report_noise_sd: f64,
    pub kind: AgentKind,
}

impl Default for AgentParams {
    fn default() -> Self {
        AgentParams {
            c: 0.888,
            beta: 0.472,
            beta_tilde: 0.038,
            c_tilde: 0.888,
            report_noise_sd: 0.0,
            kind: AgentKind::Structural,
        }
    }
}

impl AgentParams {
    pub fn validate(&self) -> Result<(), AgentError> {
        let checks = [
            ("c", self.c),
            ("beta", self.beta),
            ("beta_tilde", self.beta_tilde),
            ("c_tilde", self.c_tilde),
            ("report_noise_sd", self.report_noise_sd),
        ];
        for (name, value) in checks {
            if !value.is_finite() || value < 0.0 {
                return Err(AgentError::BadParameter {
                    name,
                    value,
                    requirement: "finite and non-negative",
                });
            }
        }
        Ok(())
    }
}

/// p^c with the 0^0 = 1 convention, so that c = 0 leaves the prior untouched
/// even on structures with a zero likelihood.
fn pow_c(p: f64, c: f64) -> f64 {
    if p == 0.0 && c == 0.0 {
        1.0
    } else {
        p.powf(c)
    }
}

fn weighted_posterior(c: f64, p_sig_x: f64, p_sig_y: f64) -> Result<Posterior, AgentError> {
    let a = pow_c(p_sig_x, c);
    let b = pow_c(p_sig_y, c);
    if a + b == 0.0 {
        return Err(AgentError::DegenerateSignal);
    }
    Ok(Posterior::new(a / (a + b))?)
}

/// Power-weighted posterior on the ball:
/// π(X|s) = p(s|X)^c / (p(s|X)^c + p(s|Y)^c), fair prior.
///
/// `c = 1` reproduces [`bayes_posterior`]; `c = 0` returns one half for every
/// signal; a signal impossible under both states is an error.
pub fn grether_posterior(
    c: f64,
    structure: InformationStructure,
    signal: Signal,
) -> Result<Posterior, AgentError> {
    if !c.is_finite() || c < 0.0 {
        return Err(AgentError::BadParameter {
            name: "c",
            value: c,
            requirement: "finite and non-negative",
        });
    }
    weighted_posterior(
        c,
        likelihood(structure, signal, State::X),
        likelihood(structure, signal, State::Y),
    )
}

/// Probability of choosing X given a posterior:
/// Pr(D = X) = 1 / (1 + exp(−beta · (2π(X) − 1) · stake)).
///
/// Symmetric around one half: π and 1−π give complementary probabilities, and
/// π = 1/2 gives exactly 1/2 for any precision.
pub fn logit_choice_prob(beta: f64, posterior: Posterior, stake: f64) -> f64 {
    let z = beta * (2.0 * posterior.prob_x() - 1.0) * stake;
    1.0 / (1.0 + (-z).exp())
}

/// Probability the subject assigns to the neighbor guessing X after the
/// neighbor saw `signal`: the neighbor updates with exponent `c_tilde` and
/// chooses with precision `beta_tilde`.
pub fn believed_neighbor_choice_prob(
    params: &AgentParams,
    structure: InformationStructure,
    signal: Signal,
    stake: f64,
) -> Result<f64, AgentError> {
    let pi = grether_posterior(params.c_tilde, structure, signal)?;
    Ok(logit_choice_prob(params.beta_tilde, pi, stake))
}

/// Likelihood of each neighbor guess given each state, from the subject's
/// model of the neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocialLikelihoods {
    /// Pr(neighbor guesses X | state X)
    pub guess_x_given_x: f64,
    /// Pr(neighbor guesses X | state Y)
    pub guess_x_given_y: f64,
    /// Pr(neighbor guesses Y | state X)
    pub guess_y_given_x: f64,
    /// Pr(neighbor guesses Y | state Y)
    pub guess_y_given_y: f64,
}

impl SocialLikelihoods {
    /// The pair (Pr(guess | X), Pr(guess | Y)) for the observed guess.
    pub fn for_guess(&self, guess: State) -> (f64, f64) {
        match guess {
            State::X => (self.guess_x_given_x, self.guess_x_given_y),
            State::Y => (self.guess_y_given_x, self.guess_y_given_y),
        }
    }
}

/// The guess likelihoods implied by the believed neighbor: mixtures of the
/// neighbor's choice probabilities over the ball the neighbor would have seen,
/// e.g. Pr('X' | X) = Pr(Dₙ=X | white)·p(white|X) + Pr(Dₙ=X | black)·p(black|X).
pub fn social_signal_likelihoods(
    params: &AgentParams,
    structure: InformationStructure,
    stake: f64,
) -> Result<SocialLikelihoods, AgentError> {
    let q_white = believed_neighbor_choice_prob(params, structure, Signal::White, stake)?;
    let q_black = believed_neighbor_choice_prob(params, structure, Signal::Black, stake)?;
    let pw_x = likelihood(structure, Signal::White, State::X);
    let pb_x = likelihood(structure, Signal::Black, State::X);
    let pw_y = likelihood(structure, Signal::White, State::Y);
    let pb_y = likelihood(structure, Signal::Black, State::Y);
    Ok(SocialLikelihoods {
        guess_x_given_x: q_white * pw_x + q_black * pb_x,
        guess_x_given_y: q_white * pw_y + q_black * pb_y,
        guess_y_given_x: (1.0 - q_white) * pw_x + (1.0 - q_black) * pb_x,
        guess_y_given_y: (1.0 - q_white) * pw_y + (1.0 - q_black) * pb_y,
    })
}

/// Posterior after observing the neighbor's guess: the guess likelihoods from
/// [`social_signal_likelihoods`] fed through the power-weighted update with
/// the subject's own exponent `c`.
pub fn social_posterior(
    params: &AgentParams,
    structure: InformationStructure,
    neighbor_guess: State,
    stake: f64,
) -> Result<Posterior, AgentError> {
    let lik = social_signal_likelihoods(params, structure, stake)?;
    let (p_x, p_y) = lik.for_guess(neighbor_guess);
    weighted_posterior(params.c, p_x, p_y)
}

/// The automated neighbor's guess: the majority box for its ball, with ties
/// split by a fair coin from `rng`.
pub fn bot_choice<R: Rng + ?Sized>(
    structure: InformationStructure,
    signal: Signal,
    rng: &mut R,
) -> State {
    match rational_choice(structure, signal) {
        Some(state) => state,
        None => {
            if rng.random::<f64>() < 0.5 {
                State::X
            } else {
                State::Y
            }
        }
    }
}

/// Everything the subject can condition on in one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialContext {
    pub condition: Condition,
    /// `None` for neighbor-pool play, which has no treatment arm.
    pub treatment: Option<Treatment>,
    pub structure: InformationStructure,
    /// The ball, where the subject sees one (individual condition, or the
    /// treatment that reveals the neighbor's ball).
    pub ball: Option<Signal>,
    pub neighbor_guess: Option<State>,
    /// Stake in dollars; scales choice precision.
    pub stake: f64,
    /// Precision attributed to the bot neighbor in the bot treatment
    /// (effectively rational at the default 1000).
    pub bot_beta_tilde: f64,
}

/// The belief the subject actually holds in this round.
///
/// Individual condition: power-weighted posterior on the ball. Social
/// condition: on the neighbor's guess through the believed-neighbor model,
/// except that a revealed ball dominates — when the subject sees the ball
/// herself the guess adds nothing (and is ignored even if it contradicts the
/// ball) — and a bot neighbor is modelled with `bot_beta_tilde` in place of
/// `beta_tilde`. [`AgentKind::ExactBayesianRational`] replaces every updating
/// step with exact Bayes on the most informative observation (ball if seen,
/// otherwise the guess read as its ball under a rational neighbor).
pub fn subjective_posterior(
    params: &AgentParams,
    ctx: &TrialContext,
) -> Result<Posterior, AgentError> {
    params.validate()?;
    let observed_ball = match ctx.condition {
        Condition::Individual => Some(ctx.ball.ok_or(AgentError::MissingObservation("ball"))?),
        Condition::Social => match ctx.treatment {
            Some(Treatment::Ball) => Some(ctx.ball.ok_or(AgentError::MissingObservation("ball"))?),
            _ => None,
        },
    };

    match params.kind {
        AgentKind::ExactBayesianRational | AgentKind::Bot => {
            let signal = match observed_ball {
                Some(ball) => ball,
                None => {
                    // A rational neighbor's guess reveals the ball's majority
                    // color one-for-one: guess X ⇔ white, guess Y ⇔ black.
                    let guess = ctx
                        .neighbor_guess
                        .ok_or(AgentError::MissingObservation("guess"))?;
                    match guess {
                        State::X => Signal::White,
                        State::Y => Signal::Black,
                    }
                }
            };
            Ok(bayes_posterior(ctx.structure, signal)?)
        }
        AgentKind::Structural => match observed_ball {
            Some(ball) => grether_posterior(params.c, ctx.structure, ball),
            None => {
                let guess = ctx
                    .neighbor_guess
                    .ok_or(AgentError::MissingObservation("guess"))?;
                let effective = match ctx.treatment {
                    Some(Treatment::Bot) => AgentParams {
                        beta_tilde: ctx.bot_beta_tilde,
                        ..*params
                    },
                    _ => *params,
                };
                social_posterior(&effective, ctx.structure, guess, ctx.stake)
            }
        },
    }
}
