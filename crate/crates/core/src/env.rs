//! The experimental environment: two boxes of ten balls each, a fair coin
//! picking the box, and one ball drawn from the chosen box.
//!
//! Box X holds `white_in_x` white balls (rest black); box Y holds `black_in_y`
//! black balls (rest white). Everything downstream — likelihoods, the Bayesian
//! posterior, the majority-box benchmark — reduces to integer ball counts, so
//! this module keeps the arithmetic exact and only converts to `f64` at the
//! last step.

use crate::sim::{Condition, TrialRecord};
use thiserror::Error;

/// Number of balls per box.
pub const BALLS_PER_BOX: u8 = 10;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("ball count {0} exceeds {BALLS_PER_BOX}")]
    BadCount(u8),
    #[error("signal {signal:?} has zero probability in both boxes")]
    ImpossibleSignal { signal: Signal },
    #[error("posterior probability {0} outside [0, 1]")]
    BadPosterior(f64),
}

/// The box the coin flip selected (and the options subjects choose between).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum State {
    X,
    Y,
}

impl State {
    pub fn other(self) -> State {
        match self {
            State::X => State::Y,
            State::Y => State::X,
        }
    }
}

/// Color of the drawn ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Signal {
    White,
    Black,
}

impl Signal {
    pub fn other(self) -> Signal {
        match self {
            Signal::White => Signal::Black,
            Signal::Black => Signal::White,
        }
    }
}

/// Ball composition of the two boxes, stored as integer counts.
///
/// `(white_in_x, black_in_y)` corresponds to the fraction pair
/// (θ_X, θ_Y) = (white_in_x/10, black_in_y/10). The experiment's own designs
/// are the canonical set θ_X ≥ θ_Y with θ ∈ {0.5, …, 1.0}, but the type
/// accepts any counts in [0, 10] so that relabeled (canonicalized) records and
/// hand-built designs stay representable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InformationStructure {
    white_in_x: u8,
    black_in_y: u8,
}

impl InformationStructure {
    pub fn new(white_in_x: u8, black_in_y: u8) -> Result<Self, EnvError> {
        if white_in_x > BALLS_PER_BOX {
            return Err(EnvError::BadCount(white_in_x));
        }
        if black_in_y > BALLS_PER_BOX {
            return Err(EnvError::BadCount(black_in_y));
        }
        Ok(InformationStructure {
            white_in_x,
            black_in_y,
        })
    }

    pub fn white_in_x(&self) -> u8 {
        self.white_in_x
    }

    pub fn black_in_y(&self) -> u8 {
        self.black_in_y
    }

    /// Fraction of white balls in box X.
    pub fn theta_x(&self) -> f64 {
        f64::from(self.white_in_x) / f64::from(BALLS_PER_BOX)
    }

    /// Fraction of black balls in box Y.
    pub fn theta_y(&self) -> f64 {
        f64::from(self.black_in_y) / f64::from(BALLS_PER_BOX)
    }

    /// True when θ_X ≥ θ_Y and both are at least one half — the half of the
    /// design space the experiment actually uses.
    pub fn is_canonical(&self) -> bool {
        let half = BALLS_PER_BOX / 2;
        self.white_in_x >= self.black_in_y && self.black_in_y >= half
    }

    /// Both boxes half/half: the ball carries no information and there is no
    /// majority box.
    pub fn is_uninformative(&self) -> bool {
        let half = BALLS_PER_BOX / 2;
        self.white_in_x == half && self.black_in_y == half
    }

    /// The structure after swapping box labels *and* ball colors at once.
    ///
    /// Under that double swap the environment is unchanged — the likelihood of
    /// every (relabeled) observation is preserved — and (θ_X, θ_Y) becomes
    /// (θ_Y, θ_X), i.e. counts (w, b) become (b, w).
    pub fn relabeled(&self) -> InformationStructure {
        InformationStructure {
            white_in_x: self.black_in_y,
            black_in_y: self.white_in_x,
        }
    }
}

/// How many of the ten balls in the given box match the signal color.
pub fn likelihood_count(structure: InformationStructure, signal: Signal, state: State) -> u8 {
    match (state, signal) {
        (State::X, Signal::White) => structure.white_in_x,
        (State::X, Signal::Black) => BALLS_PER_BOX - structure.white_in_x,
        (State::Y, Signal::Black) => structure.black_in_y,
        (State::Y, Signal::White) => BALLS_PER_BOX - structure.black_in_y,
    }
}

/// P(signal | state) as an exactly-representable multiple of 1/10.
pub fn likelihood(structure: InformationStructure, signal: Signal, state: State) -> f64 {
    f64::from(likelihood_count(structure, signal, state)) / f64::from(BALLS_PER_BOX)
}

/// A probability that box X is the source, with its complement implied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Posterior {
    prob_x: f64,
}

impl Posterior {
    pub fn new(prob_x: f64) -> Result<Self, EnvError> {
        if !(0.0..=1.0).contains(&prob_x) {
            return Err(EnvError::BadPosterior(prob_x));
        }
        Ok(Posterior { prob_x })
    }

    pub fn prob_x(&self) -> f64 {
        self.prob_x
    }

    pub fn prob_y(&self) -> f64 {
        1.0 - self.prob_x
    }

    /// Probability of the given state.
    pub fn prob_of(&self, state: State) -> f64 {
        match state {
            State::X => self.prob_x(),
            State::Y => self.prob_y(),
        }
    }

    /// The more likely state, or `None` at exactly one half.
    pub fn favored(&self) -> Option<State> {
        if self.prob_x > 0.5 {
            Some(State::X)
        } else if self.prob_x < 0.5 {
            Some(State::Y)
        } else {
            None
        }
    }
}

/// Posterior P(X | signal) under a fair prior, computed from the integer ball
/// counts: with n₁ matching balls in X and n₂ in Y, P(X | signal) = n₁/(n₁+n₂).
///
/// The only rounding is the final integer division, so the result is the
/// correctly rounded value of the exact rational posterior.
pub fn bayes_posterior(
    structure: InformationStructure,
    signal: Signal,
) -> Result<Posterior, EnvError> {
    let n1 = u32::from(likelihood_count(structure, signal, State::X));
    let n2 = u32::from(likelihood_count(structure, signal, State::Y));
    if n1 + n2 == 0 {
        return Err(EnvError::ImpossibleSignal { signal });
    }
    Posterior::new(f64::from(n1) / f64::from(n1 + n2))
}

/// The box made more likely by the ball (the "majority box" for that color),
/// or `None` when the two boxes hold equally many balls of that color.
pub fn rational_choice(structure: InformationStructure, signal: Signal) -> Option<State> {
    let n1 = likelihood_count(structure, signal, State::X);
    let n2 = likelihood_count(structure, signal, State::Y);
    match n1.cmp(&n2) {
        std::cmp::Ordering::Greater => Some(State::X),
        std::cmp::Ordering::Less => Some(State::Y),
        std::cmp::Ordering::Equal => None,
    }
}

/// The 21 canonical designs: θ_X, θ_Y ∈ {0.5, 0.6, …, 1.0} with θ_X ≥ θ_Y,
/// ordered lexicographically by (white_in_x, black_in_y).
pub fn enumerate_structures() -> Vec<InformationStructure> {
    let half = BALLS_PER_BOX / 2;
    let mut out = Vec::new();
    for w in half..=BALLS_PER_BOX {
        for b in half..=w {
            out.push(InformationStructure {
                white_in_x: w,
                black_in_y: b,
            });
        }
    }
    out
}

/// Maps a record to its canonical presentation: individual-condition signal
/// White, social-condition neighbor guess X.
///
/// When the record's signal is Black (or its guess Y), box labels and ball
/// colors are swapped together: the structure becomes its [`InformationStructure::relabeled`]
/// form and state, ball, guess and choice all flip. The reported confidence is
/// in the subject's own choice, which flips with everything else, so it is
/// unchanged. Likelihood ratios and error classifications are invariant; a
/// record already in canonical presentation comes back identical.
pub fn canonicalize(record: &TrialRecord) -> TrialRecord {
    let flip = match record.condition {
        Condition::Individual => record.ball == Some(Signal::Black),
        Condition::Social => record.neighbor_guess == Some(State::Y),
    };
    if !flip {
        return record.clone();
    }
    let mut out = record.clone();
    out.structure = record.structure.relabeled();
    out.true_state = record.true_state.other();
    out.ball = record.ball.map(Signal::other);
    out.neighbor_guess = record.neighbor_guess.map(State::other);
    out.choice = record.choice.other();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(w: u8, b: u8) -> InformationStructure {
        InformationStructure::new(w, b).unwrap()
    }

    #[test]
    fn likelihoods_come_from_ball_counts() {
        let d = s(7, 6);
        assert_eq!(likelihood_count(d, Signal::White, State::X), 7);
        assert_eq!(likelihood_count(d, Signal::Black, State::X), 3);
        assert_eq!(likelihood_count(d, Signal::Black, State::Y), 6);
        assert_eq!(likelihood_count(d, Signal::White, State::Y), 4);
        assert_eq!(likelihood(d, Signal::White, State::X), 0.7);
    }

    #[test]
    fn likelihoods_sum_to_one_given_each_state() {
        for d in enumerate_structures() {
            for state in [State::X, State::Y] {
                let total = likelihood_count(d, Signal::White, state)
                    + likelihood_count(d, Signal::Black, state);
                assert_eq!(total, BALLS_PER_BOX);
            }
        }
    }

    #[test]
    fn bayes_posterior_is_the_exact_ball_fraction() {
        // White ball at (0.7, 0.6): 7 white balls live in X, 4 in Y.
        let p = bayes_posterior(s(7, 6), Signal::White).unwrap();
        assert_eq!(p.prob_x(), 7.0 / 11.0);

        // Enumerating the 20 physical balls gives the same answer for every
        // design and color: the posterior is (matching balls in X) / (matching
        // balls anywhere).
        for d in enumerate_structures() {
            for sig in [Signal::White, Signal::Black] {
                let in_x = likelihood_count(d, sig, State::X) as f64;
                let in_y = likelihood_count(d, sig, State::Y) as f64;
                if in_x + in_y == 0.0 {
                    assert!(bayes_posterior(d, sig).is_err());
                    continue;
                }
                let p = bayes_posterior(d, sig).unwrap();
                assert_eq!(p.prob_x(), in_x / (in_x + in_y));
            }
        }
    }

    #[test]
    fn symmetric_design_is_uninformative() {
        let p = bayes_posterior(s(5, 5), Signal::White).unwrap();
        assert_eq!(p.prob_x(), 0.5);
        assert_eq!(rational_choice(s(5, 5), Signal::White), None);
        assert!(s(5, 5).is_uninformative());
    }

    #[test]
    fn impossible_signal_is_an_error() {
        // All ten balls in X are white and all ten in Y are black: a black
        // ball can only have come from Y, a white one only from X, and a
        // structure where a color exists in neither box must refuse.
        let p = bayes_posterior(s(10, 10), Signal::White).unwrap();
        assert_eq!(p.prob_x(), 1.0);
        // White absent from both boxes: X all black (w=0), Y all black (b=10).
        assert_eq!(
            bayes_posterior(s(0, 10), Signal::White),
            Err(EnvError::ImpossibleSignal {
                signal: Signal::White
            })
        );
    }

    #[test]
    fn rational_choice_follows_the_majority_color() {
        assert_eq!(rational_choice(s(7, 6), Signal::White), Some(State::X));
        assert_eq!(rational_choice(s(7, 6), Signal::Black), Some(State::Y));
        // (1.0, 0.5): a white ball points at X, a black one is a tie between
        // X's 0 black and ... X has 0 black, Y has 5: majority Y.
        assert_eq!(rational_choice(s(10, 5), Signal::Black), Some(State::Y));
    }

    #[test]
    fn twenty_one_canonical_structures_in_lexicographic_order() {
        let all = enumerate_structures();
        assert_eq!(all.len(), 21);
        assert_eq!(all[0], s(5, 5));
        assert_eq!(all[1], s(6, 5));
        assert_eq!(all[2], s(6, 6));
        assert_eq!(all[20], s(10, 10));
        assert!(all.iter().all(|d| d.is_canonical()));
        let mut sorted = all.clone();
        sorted.sort_by_key(|d| (d.white_in_x(), d.black_in_y()));
        assert_eq!(all, sorted);
    }

    #[test]
    fn relabeling_swaps_the_fraction_pair() {
        // (θ_X, θ_Y) = (0.5, 1.0) relabels to (1.0, 0.5).
        assert_eq!(s(5, 10).relabeled(), s(10, 5));
        for d in enumerate_structures() {
            let r = d.relabeled();
            assert_eq!(r.relabeled(), d);
            // White under the relabeling plays the role black played before.
            assert_eq!(
                likelihood_count(r, Signal::White, State::X),
                likelihood_count(d, Signal::Black, State::Y)
            );
            assert_eq!(
                likelihood_count(r, Signal::White, State::Y),
                likelihood_count(d, Signal::Black, State::X)
            );
        }
    }

    #[test]
    fn bad_counts_are_rejected() {
        assert_eq!(
            InformationStructure::new(11, 5),
            Err(EnvError::BadCount(11))
        );
        assert_eq!(
            InformationStructure::new(5, 11),
            Err(EnvError::BadCount(11))
        );
    }
}
