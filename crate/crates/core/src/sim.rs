//! Synthetic experiment panels.
//!
//! A panel is a flat list of trial records: one subject × condition × round
//! each. [`simulate_pool`] generates the prior-subject pool whose recorded
//! individual-condition rounds become the neighbors of the social condition;
//! [`simulate_experiment`] generates the treatment arms on top of that pool.
//!
//! Determinism contract: the same [`SimConfig`] always yields the same panel,
//! byte for byte once written out. Every subject draws from an independent
//! stream derived from (master seed, treatment lane, subject index), and all
//! draws inside a subject happen in a fixed documented order: parameters,
//! covariates, condition order, the two round sequences, then per round the
//! state, ball, neighbor pick / bot coin, choice, and report noise.

use crate::agents::{
    bot_choice, subjective_posterior, AgentError, AgentKind, AgentParams, TrialContext,
};
use crate::env::{
    enumerate_structures, likelihood, InformationStructure, Posterior, Signal, State,
};
use crate::rng::{bernoulli, rounded_clamped_normal, standard_normal, substream, LANE_POOL};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Sentinel `neighbor_id` for the automated neighbor.
pub const BOT_NEIGHBOR_ID: &str = "BOT";

/// Session id under which the neighbor pool plays.
pub const POOL_SESSION_ID: &str = "POOL";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    BadConfig(String),
    #[error("record {index}: {reason}")]
    BadRecord { index: usize, reason: String },
    #[error(
        "duplicate record key (session {session}, subject {subject}, {condition:?}, round {round})"
    )]
    DuplicateKey {
        session: String,
        subject: u32,
        condition: Condition,
        round: u32,
    },
    #[error("no pool records for structure ({0}, {1}); enlarge the pool")]
    NoPoolMatch(u8, u8),
    #[error("agent failure during simulation: {0}")]
    Agent(#[from] AgentError),
}

/// Which information the subject decides from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    /// The subject sees the ball.
    Individual,
    /// The subject sees a neighbor's guess.
    Social,
}

/// Order in which one subject plays the two conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConditionOrder {
    IndividualFirst,
    SocialFirst,
}

impl ConditionOrder {
    pub fn first(self) -> Condition {
        match self {
            ConditionOrder::IndividualFirst => Condition::Individual,
            ConditionOrder::SocialFirst => Condition::Social,
        }
    }

    pub fn sequence(self) -> [Condition; 2] {
        match self {
            ConditionOrder::IndividualFirst => [Condition::Individual, Condition::Social],
            ConditionOrder::SocialFirst => [Condition::Social, Condition::Individual],
        }
    }
}

/// Treatment arm, varying what the social condition reveals about the
/// neighbor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Treatment {
    /// Human neighbor, nothing extra shown.
    Base,
    /// Human neighbor with their demographics shown.
    Demographics,
    /// Automated neighbor that guesses the majority box for its ball.
    Bot,
    /// Human neighbor whose ball is shown to the subject as well.
    Ball,
}

impl Treatment {
    pub const ALL: [Treatment; 4] = [
        Treatment::Base,
        Treatment::Demographics,
        Treatment::Bot,
        Treatment::Ball,
    ];

    /// Stream lane and session id for this arm.
    fn lane(self) -> u64 {
        match self {
            Treatment::Base => 1,
            Treatment::Demographics => 2,
            Treatment::Bot => 3,
            Treatment::Ball => 4,
        }
    }

    pub fn session_id(self) -> &'static str {
        match self {
            Treatment::Base => "BASE",
            Treatment::Demographics => "DEMO",
            Treatment::Bot => "BOT",
            Treatment::Ball => "BALL",
        }
    }
}

/// Demographic covariates carried by every subject (and shown for neighbors
/// in the demographics treatment).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Covariates {
    pub female: bool,
    pub education_years: u8,
    pub age: u8,
    /// Has taken a probability or statistics course.
    pub prob_stat: bool,
}

/// One subject × condition × round observation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub session_id: String,
    pub subject_id: u32,
    /// `None` marks a neighbor-pool record (pool play has no treatment arm).
    pub treatment: Option<Treatment>,
    pub condition: Condition,
    pub condition_order: ConditionOrder,
    /// 1-based round number within the condition.
    pub round: u32,
    pub structure: InformationStructure,
    pub true_state: State,
    /// The drawn ball, where the record carries one (always in the individual
    /// condition; in the social condition only when it was shown).
    pub ball: Option<Signal>,
    /// Whether the subject saw the ball directly.
    pub ball_shown: bool,
    pub neighbor_id: Option<String>,
    pub neighbor_guess: Option<State>,
    pub choice: State,
    /// Reported confidence, in percent, that the *chosen* box is correct.
    pub reported_posterior_pct: u8,
    pub covariates: Covariates,
    /// Present exactly when shown (demographics treatment, social condition).
    pub neighbor_covariates: Option<Covariates>,
}

/// `(session_id, subject_id)` — the unique identity of a subject.
pub type SubjectKey = (String, u32);

impl TrialRecord {
    pub fn subject_key(&self) -> SubjectKey {
        (self.session_id.clone(), self.subject_id)
    }

    /// The subject's belief that the true state is X, recovered from the
    /// reported confidence in the chosen box.
    pub fn recovered_prob_x(&self) -> f64 {
        let conf = f64::from(self.reported_posterior_pct) / 100.0;
        match self.choice {
            State::X => conf,
            State::Y => 1.0 - conf,
        }
    }

    fn validate(&self, index: usize) -> Result<(), SimError> {
        let fail = |reason: String| Err(SimError::BadRecord { index, reason });
        if self.session_id.is_empty() {
            return fail("empty session_id".into());
        }
        if self.reported_posterior_pct > 100 {
            return fail(format!(
                "reported posterior {} > 100",
                self.reported_posterior_pct
            ));
        }
        match self.condition {
            Condition::Individual => {
                if self.ball.is_none() {
                    return fail("individual record without a ball".into());
                }
                if !self.ball_shown {
                    return fail("individual record with ball_shown = false".into());
                }
                if self.neighbor_id.is_some()
                    || self.neighbor_guess.is_some()
                    || self.neighbor_covariates.is_some()
                {
                    return fail("individual record with neighbor fields".into());
                }
            }
            Condition::Social => {
                let Some(treatment) = self.treatment else {
                    return fail(
                        "social record without a treatment (pool play is individual-only)".into(),
                    );
                };
                let Some(neighbor_id) = self.neighbor_id.as_deref() else {
                    return fail("social record without neighbor_id".into());
                };
                if self.neighbor_guess.is_none() {
                    return fail("social record without neighbor_guess".into());
                }
                let want_ball = treatment == Treatment::Ball;
                if self.ball_shown != want_ball {
                    return fail(format!(
                        "social {treatment:?} record with ball_shown = {}",
                        self.ball_shown
                    ));
                }
                if self.ball.is_some() != want_ball {
                    return fail(format!(
                        "social {treatment:?} record {} a ball",
                        if self.ball.is_some() {
                            "with"
                        } else {
                            "without"
                        }
                    ));
                }
                match treatment {
                    Treatment::Bot => {
                        if neighbor_id != BOT_NEIGHBOR_ID {
                            return fail(format!(
                                "bot-treatment neighbor_id {neighbor_id:?} (want {BOT_NEIGHBOR_ID:?})"
                            ));
                        }
                    }
                    _ => {
                        if neighbor_id == BOT_NEIGHBOR_ID {
                            return fail("human-neighbor record with the bot sentinel id".into());
                        }
                    }
                }
                let want_covs = treatment == Treatment::Demographics;
                if self.neighbor_covariates.is_some() != want_covs {
                    return fail(format!(
                        "social {treatment:?} record {} neighbor covariates",
                        if self.neighbor_covariates.is_some() {
                            "with"
                        } else {
                            "without"
                        }
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A validated collection of trial records in a fixed, deterministic order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Panel {
    records: Vec<TrialRecord>,
}

impl Panel {
    /// Validates every record and the uniqueness of
    /// (session, subject, condition, round) keys.
    pub fn from_records(records: Vec<TrialRecord>) -> Result<Self, SimError> {
        let mut seen = BTreeSet::new();
        for (index, record) in records.iter().enumerate() {
            record.validate(index)?;
            let key = (
                record.session_id.clone(),
                record.subject_id,
                record.condition,
                record.round,
            );
            if !seen.insert(key) {
                return Err(SimError::DuplicateKey {
                    session: record.session_id.clone(),
                    subject: record.subject_id,
                    condition: record.condition,
                    round: record.round,
                });
            }
        }
        Ok(Panel { records })
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn in_condition(&self, condition: Condition) -> impl Iterator<Item = &TrialRecord> {
        self.records
            .iter()
            .filter(move |r| r.condition == condition)
    }

    /// Subjects in record order (deduplicated).
    pub fn subjects(&self) -> Vec<SubjectKey> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for r in &self.records {
            let key = r.subject_key();
            if seen.insert(key.clone()) {
                out.push(key);
            }
        }
        out
    }

    /// Records grouped by subject, preserving record order within groups.
    pub fn by_subject(&self) -> BTreeMap<SubjectKey, Vec<&TrialRecord>> {
        let mut map: BTreeMap<SubjectKey, Vec<&TrialRecord>> = BTreeMap::new();
        for r in &self.records {
            map.entry(r.subject_key()).or_default().push(r);
        }
        map
    }
}

/// Distribution of one behavioral parameter across the simulated population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamDist {
    /// Everyone shares the value.
    Point(f64),
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Normal draw clamped into [lo, hi].
    Normal {
        mean: f64,
        sd: f64,
        lo: f64,
        hi: f64,
    },
}

impl ParamDist {
    fn validate(&self, name: &str) -> Result<(), SimError> {
        let bad = |what: String| Err(SimError::BadConfig(format!("{name}: {what}")));
        match *self {
            ParamDist::Point(v) => {
                if !v.is_finite() || v < 0.0 {
                    return bad(format!("point value {v} must be finite and non-negative"));
                }
            }
            ParamDist::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < 0.0 {
                    return bad(format!("uniform bounds [{lo}, {hi}] invalid"));
                }
            }
            ParamDist::Normal { mean, sd, lo, hi } => {
                if !(mean.is_finite() && sd.is_finite() && lo.is_finite() && hi.is_finite())
                    || sd < 0.0
                    || lo > hi
                    || lo < 0.0
                {
                    return bad(format!(
                        "normal spec ({mean}, {sd}) on [{lo}, {hi}] invalid"
                    ));
                }
            }
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ParamDist::Point(v) => v,
            ParamDist::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ParamDist::Normal { mean, sd, lo, hi } => {
                (mean + sd * standard_normal(rng)).clamp(lo, hi)
            }
        }
    }
}

/// Population the subjects (and pool members) are drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationSpec {
    pub kind: AgentKind,
    pub c: ParamDist,
    pub beta: ParamDist,
    pub beta_tilde: ParamDist,
    pub c_tilde: ParamDist,
    pub report_noise_sd: ParamDist,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        let p = AgentParams::default();
        PopulationSpec {
            kind: p.kind,
            c: ParamDist::Point(p.c),
            beta: ParamDist::Point(p.beta),
            beta_tilde: ParamDist::Point(p.beta_tilde),
            c_tilde: ParamDist::Point(p.c_tilde),
            report_noise_sd: ParamDist::Point(p.report_noise_sd),
        }
    }
}

impl PopulationSpec {
    fn validate(&self) -> Result<(), SimError> {
        if self.kind == AgentKind::Bot {
            return Err(SimError::BadConfig(
                "subjects cannot be of the bot kind (the bot is a neighbor)".into(),
            ));
        }
        self.c.validate("c")?;
        self.beta.validate("beta")?;
        self.beta_tilde.validate("beta_tilde")?;
        self.c_tilde.validate("c_tilde")?;
        self.report_noise_sd.validate("report_noise_sd")
    }

    /// Draws one subject's parameters (fixed draw order: c, beta, beta_tilde,
    /// c_tilde, report_noise_sd).
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> AgentParams {
        AgentParams {
            c: self.c.sample(rng),
            beta: self.beta.sample(rng),
            beta_tilde: self.beta_tilde.sample(rng),
            c_tilde: self.c_tilde.sample(rng),
            report_noise_sd: self.report_noise_sd.sample(rng),
            kind: self.kind,
        }
    }
}

/// Moments of the demographic covariates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovariateSpec {
    pub female_rate: f64,
    pub prob_stat_rate: f64,
    pub education_mean: f64,
    pub education_sd: f64,
    pub age_mean: f64,
    pub age_sd: f64,
}

/// Education is rounded to whole years and clamped to [8, 30]; age to
/// [18, 80].
pub const EDUCATION_RANGE: (i64, i64) = (8, 30);
pub const AGE_RANGE: (i64, i64) = (18, 80);

impl CovariateSpec {
    /// Default moments per treatment arm (lab-population-like values).
    pub fn default_for(treatment: Treatment) -> Self {
        match treatment {
            Treatment::Base => CovariateSpec {
                female_rate: 0.775,
                prob_stat_rate: 0.75,
                education_mean: 15.0,
                education_sd: 1.5,
                age_mean: 20.25,
                age_sd: 1.81,
            },
            Treatment::Demographics => CovariateSpec {
                female_rate: 0.735,
                prob_stat_rate: 0.647,
                education_mean: 14.85,
                education_sd: 2.11,
                age_mean: 19.38,
                age_sd: 1.39,
            },
            Treatment::Bot => CovariateSpec {
                female_rate: 0.789,
                prob_stat_rate: 0.684,
                education_mean: 14.73,
                education_sd: 2.24,
                age_mean: 20.02,
                age_sd: 2.04,
            },
            Treatment::Ball => CovariateSpec {
                female_rate: 0.615,
                prob_stat_rate: 0.692,
                education_mean: 14.48,
                education_sd: 1.82,
                age_mean: 20.28,
                age_sd: 1.88,
            },
        }
    }

    /// Subject-weighted average of the per-arm defaults, used for the pool.
    pub fn pooled_default() -> Self {
        CovariateSpec {
            female_rate: 0.728,
            prob_stat_rate: 0.695,
            education_mean: 14.76,
            education_sd: 1.9,
            age_mean: 20.0,
            age_sd: 1.8,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let rates = [
            ("female_rate", self.female_rate),
            ("prob_stat_rate", self.prob_stat_rate),
        ];
        for (name, rate) in rates {
            if !(0.0..=1.0).contains(&rate) {
                return Err(SimError::BadConfig(format!("{name} {rate} outside [0, 1]")));
            }
        }
        let moments = [
            ("education_mean", self.education_mean),
            ("education_sd", self.education_sd),
            ("age_mean", self.age_mean),
            ("age_sd", self.age_sd),
        ];
        for (name, v) in moments {
            if !v.is_finite() || (name.ends_with("sd") && v < 0.0) {
                return Err(SimError::BadConfig(format!("{name} {v} invalid")));
            }
        }
        Ok(())
    }

    /// Fixed draw order: female, prob_stat, education, age.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Covariates {
        let female = bernoulli(rng, self.female_rate);
        let prob_stat = bernoulli(rng, self.prob_stat_rate);
        let education = rounded_clamped_normal(
            rng,
            self.education_mean,
            self.education_sd,
            EDUCATION_RANGE.0,
            EDUCATION_RANGE.1,
        );
        let age = rounded_clamped_normal(rng, self.age_mean, self.age_sd, AGE_RANGE.0, AGE_RANGE.1);
        Covariates {
            female,
            education_years: education as u8,
            age: age as u8,
            prob_stat,
        }
    }
}

/// Full description of one simulated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub master_seed: u64,
    /// Arms to simulate, in output order.
    pub treatments: Vec<Treatment>,
    pub subjects: BTreeMap<Treatment, u32>,
    /// Rounds per condition per subject. At the default 21 each subject faces
    /// each canonical structure exactly once per condition; other values
    /// truncate or cycle fresh shuffles of the 21.
    pub rounds_per_condition: u32,
    /// Stake in dollars on each round's guess.
    pub stake: f64,
    /// Number of prior subjects in the neighbor pool. Each plays every
    /// canonical structure once, so any social round can be matched.
    pub pool_size: u32,
    /// Randomize which condition comes first (fair coin per subject); when
    /// off, everyone plays individual first.
    pub randomize_condition_order: bool,
    pub population: PopulationSpec,
    /// Covariate moments per arm; arms absent from the map use
    /// [`CovariateSpec::default_for`].
    pub covariates: BTreeMap<Treatment, CovariateSpec>,
    pub pool_covariates: CovariateSpec,
    /// Precision attributed to the bot neighbor (effectively rational at the
    /// default 1000; lower it to model residual mistrust of the bot).
    pub bot_beta_tilde: f64,
}

pub const DEFAULT_SEED: u64 = 7_654_321;
pub const DEFAULT_STAKE: f64 = 12.0;
pub const DEFAULT_POOL_SIZE: u32 = 94;
pub const DEFAULT_ROUNDS: u32 = 21;
pub const DEFAULT_BOT_BETA_TILDE: f64 = 1000.0;

impl Default for SimConfig {
    /// The four arms at their reference sizes (40/34/38/39 subjects), a
    /// 94-member pool, 21 rounds per condition, $12 stakes.
    fn default() -> Self {
        let mut subjects = BTreeMap::new();
        subjects.insert(Treatment::Base, 40);
        subjects.insert(Treatment::Demographics, 34);
        subjects.insert(Treatment::Bot, 38);
        subjects.insert(Treatment::Ball, 39);
        SimConfig {
            master_seed: DEFAULT_SEED,
            treatments: Treatment::ALL.to_vec(),
            subjects,
            rounds_per_condition: DEFAULT_ROUNDS,
            stake: DEFAULT_STAKE,
            pool_size: DEFAULT_POOL_SIZE,
            randomize_condition_order: true,
            population: PopulationSpec::default(),
            covariates: BTreeMap::new(),
            pool_covariates: CovariateSpec::pooled_default(),
            bot_beta_tilde: DEFAULT_BOT_BETA_TILDE,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.treatments.is_empty() {
            return Err(SimError::BadConfig("no treatments selected".into()));
        }
        let mut seen = BTreeSet::new();
        for &t in &self.treatments {
            if !seen.insert(t) {
                return Err(SimError::BadConfig(format!("treatment {t:?} listed twice")));
            }
            match self.subjects.get(&t) {
                Some(0) | None => {
                    return Err(SimError::BadConfig(format!(
                        "treatment {t:?} needs a positive subject count"
                    )))
                }
                Some(_) => {}
            }
        }
        if self.rounds_per_condition == 0 {
            return Err(SimError::BadConfig(
                "rounds_per_condition must be positive".into(),
            ));
        }
        if !self.stake.is_finite() || self.stake <= 0.0 {
            return Err(SimError::BadConfig(format!(
                "stake {} must be positive",
                self.stake
            )));
        }
        if !self.bot_beta_tilde.is_finite() || self.bot_beta_tilde < 0.0 {
            return Err(SimError::BadConfig(format!(
                "bot_beta_tilde {} must be finite and non-negative",
                self.bot_beta_tilde
            )));
        }
        let needs_pool = self.treatments.iter().any(|t| {
            matches!(
                t,
                Treatment::Base | Treatment::Demographics | Treatment::Ball
            )
        });
        if needs_pool && self.pool_size == 0 {
            return Err(SimError::BadConfig(
                "human-neighbor treatments need pool_size >= 1".into(),
            ));
        }
        self.population.validate()?;
        for spec in self.covariates.values() {
            spec.validate()?;
        }
        self.pool_covariates.validate()
    }

    fn covariate_spec(&self, treatment: Treatment) -> CovariateSpec {
        self.covariates
            .get(&treatment)
            .copied()
            .unwrap_or_else(|| CovariateSpec::default_for(treatment))
    }
}

/// The subject's reported confidence in the chosen box: 100 · P(chosen) plus
/// Gaussian reporting noise (sd in percentage points), rounded to the nearest
/// integer and truncated into [0, 100].
pub fn report_posterior<R: Rng + ?Sized>(
    posterior: Posterior,
    choice: State,
    noise_sd: f64,
    rng: &mut R,
) -> u8 {
    let mut value = 100.0 * posterior.prob_of(choice);
    if noise_sd > 0.0 {
        value += noise_sd * standard_normal(rng);
    }
    value.round().clamp(0.0, 100.0) as u8
}

fn draw_state<R: Rng + ?Sized>(rng: &mut R) -> State {
    if rng.random::<f64>() < 0.5 {
        State::X
    } else {
        State::Y
    }
}

fn draw_ball<R: Rng + ?Sized>(
    rng: &mut R,
    structure: InformationStructure,
    state: State,
) -> Signal {
    if bernoulli(rng, likelihood(structure, Signal::White, state)) {
        Signal::White
    } else {
        Signal::Black
    }
}

fn draw_choice<R: Rng + ?Sized>(
    rng: &mut R,
    params: &AgentParams,
    posterior: Posterior,
    stake: f64,
) -> State {
    match params.kind {
        AgentKind::Structural => {
            let p_x = crate::agents::logit_choice_prob(params.beta, posterior, stake);
            if rng.random::<f64>() < p_x {
                State::X
            } else {
                State::Y
            }
        }
        AgentKind::ExactBayesianRational | AgentKind::Bot => match posterior.favored() {
            Some(state) => state,
            None => draw_state(rng),
        },
    }
}

/// Fresh shuffles of the canonical structures, concatenated and truncated to
/// `rounds` entries.
fn structure_sequence<R: Rng + ?Sized>(rng: &mut R, rounds: u32) -> Vec<InformationStructure> {
    let base = enumerate_structures();
    let mut seq = Vec::with_capacity(rounds as usize);
    while seq.len() < rounds as usize {
        let mut batch = base.clone();
        batch.shuffle(rng);
        seq.extend(batch);
    }
    seq.truncate(rounds as usize);
    seq
}

fn individual_round<R: Rng + ?Sized>(
    rng: &mut R,
    config: &SimConfig,
    params: &AgentParams,
    structure: InformationStructure,
    treatment: Option<Treatment>,
) -> Result<(State, Signal, State, u8), SimError> {
    let state = draw_state(rng);
    let ball = draw_ball(rng, structure, state);
    let ctx = TrialContext {
        condition: Condition::Individual,
        treatment,
        structure,
        ball: Some(ball),
        neighbor_guess: None,
        stake: config.stake,
        bot_beta_tilde: config.bot_beta_tilde,
    };
    let posterior = subjective_posterior(params, &ctx)?;
    let choice = draw_choice(rng, params, posterior, config.stake);
    let reported = report_posterior(posterior, choice, params.report_noise_sd, rng);
    Ok((state, ball, choice, reported))
}

/// The neighbor pool: `pool_size` prior subjects playing the individual
/// condition once per canonical structure (shuffled order), under the same
/// population parameters as the experiment. Their recorded rounds are what
/// social-condition subjects are matched against.
pub fn simulate_pool(config: &SimConfig, seed: u64) -> Result<Panel, SimError> {
    config.validate()?;
    let structures = enumerate_structures();
    let mut records = Vec::with_capacity(config.pool_size as usize * structures.len());
    for index in 0..config.pool_size {
        let mut rng = substream(seed, LANE_POOL, u64::from(index));
        let params = config.population.sample(&mut rng);
        let covariates = config.pool_covariates.sample(&mut rng);
        let sequence = structure_sequence(&mut rng, structures.len() as u32);
        for (round0, &structure) in sequence.iter().enumerate() {
            let (state, ball, choice, reported) =
                individual_round(&mut rng, config, &params, structure, None)?;
            records.push(TrialRecord {
                session_id: POOL_SESSION_ID.to_string(),
                subject_id: index + 1,
                treatment: None,
                condition: Condition::Individual,
                condition_order: ConditionOrder::IndividualFirst,
                round: round0 as u32 + 1,
                structure,
                true_state: state,
                ball: Some(ball),
                ball_shown: true,
                neighbor_id: None,
                neighbor_guess: None,
                choice,
                reported_posterior_pct: reported,
                covariates,
                neighbor_covariates: None,
            });
        }
    }
    Panel::from_records(records)
}

type PoolIndex<'a> = BTreeMap<(u8, u8), Vec<&'a TrialRecord>>;

fn index_pool(pool: &Panel) -> PoolIndex<'_> {
    let mut map: PoolIndex = BTreeMap::new();
    for r in pool.records() {
        map.entry((r.structure.white_in_x(), r.structure.black_in_y()))
            .or_default()
            .push(r);
    }
    map
}

/// The treatment arms, matched against a pool regenerated from the same
/// master seed. Returns the experiment records only; call [`simulate_pool`]
/// with `config.master_seed` for the pool panel itself.
pub fn simulate_experiment(config: &SimConfig) -> Result<Panel, SimError> {
    config.validate()?;
    let pool = simulate_pool(config, config.master_seed)?;
    let pool_index = index_pool(&pool);

    let mut records = Vec::new();
    for &treatment in &config.treatments {
        let n_subjects = config.subjects[&treatment];
        let cov_spec = config.covariate_spec(treatment);
        for index in 0..n_subjects {
            let mut rng = substream(config.master_seed, treatment.lane(), u64::from(index));
            let params = config.population.sample(&mut rng);
            let covariates = cov_spec.sample(&mut rng);
            let order = if config.randomize_condition_order {
                if rng.random::<f64>() < 0.5 {
                    ConditionOrder::IndividualFirst
                } else {
                    ConditionOrder::SocialFirst
                }
            } else {
                ConditionOrder::IndividualFirst
            };
            let individual_seq = structure_sequence(&mut rng, config.rounds_per_condition);
            let social_seq = structure_sequence(&mut rng, config.rounds_per_condition);

            for condition in order.sequence() {
                let sequence = match condition {
                    Condition::Individual => &individual_seq,
                    Condition::Social => &social_seq,
                };
                for (round0, &structure) in sequence.iter().enumerate() {
                    let record = match condition {
                        Condition::Individual => {
                            let (state, ball, choice, reported) = individual_round(
                                &mut rng,
                                config,
                                &params,
                                structure,
                                Some(treatment),
                            )?;
                            TrialRecord {
                                session_id: treatment.session_id().to_string(),
                                subject_id: index + 1,
                                treatment: Some(treatment),
                                condition,
                                condition_order: order,
                                round: round0 as u32 + 1,
                                structure,
                                true_state: state,
                                ball: Some(ball),
                                ball_shown: true,
                                neighbor_id: None,
                                neighbor_guess: None,
                                choice,
                                reported_posterior_pct: reported,
                                covariates,
                                neighbor_covariates: None,
                            }
                        }
                        Condition::Social => social_round(
                            &mut rng,
                            config,
                            &params,
                            treatment,
                            structure,
                            &pool_index,
                            index + 1,
                            order,
                            round0 as u32 + 1,
                            covariates,
                        )?,
                    };
                    records.push(record);
                }
            }
        }
    }
    Panel::from_records(records)
}

#[allow(clippy::too_many_arguments)]
fn social_round<R: Rng + ?Sized>(
    rng: &mut R,
    config: &SimConfig,
    params: &AgentParams,
    treatment: Treatment,
    structure: InformationStructure,
    pool_index: &PoolIndex<'_>,
    subject_id: u32,
    order: ConditionOrder,
    round: u32,
    covariates: Covariates,
) -> Result<TrialRecord, SimError> {
    let (true_state, neighbor_ball, neighbor_guess, neighbor_id, neighbor_covariates) =
        match treatment {
            Treatment::Bot => {
                let state = draw_state(rng);
                let ball = draw_ball(rng, structure, state);
                let guess = bot_choice(structure, ball, rng);
                (state, ball, guess, BOT_NEIGHBOR_ID.to_string(), None)
            }
            _ => {
                let key = (structure.white_in_x(), structure.black_in_y());
                let candidates = pool_index
                    .get(&key)
                    .ok_or(SimError::NoPoolMatch(key.0, key.1))?;
                let neighbor = candidates[rng.random_range(0..candidates.len())];
                let covs = (treatment == Treatment::Demographics).then_some(neighbor.covariates);
                (
                    neighbor.true_state,
                    neighbor.ball.expect("pool records always carry a ball"),
                    neighbor.choice,
                    format!("POOL-{}", neighbor.subject_id),
                    covs,
                )
            }
        };

    let show_ball = treatment == Treatment::Ball;
    let ctx = TrialContext {
        condition: Condition::Social,
        treatment: Some(treatment),
        structure,
        ball: show_ball.then_some(neighbor_ball),
        neighbor_guess: Some(neighbor_guess),
        stake: config.stake,
        bot_beta_tilde: config.bot_beta_tilde,
    };
    let posterior = subjective_posterior(params, &ctx)?;
    let choice = draw_choice(rng, params, posterior, config.stake);
    let reported = report_posterior(posterior, choice, params.report_noise_sd, rng);

    Ok(TrialRecord {
        session_id: treatment.session_id().to_string(),
        subject_id,
        treatment: Some(treatment),
        condition: Condition::Social,
        condition_order: order,
        round,
        structure,
        true_state,
        ball: show_ball.then_some(neighbor_ball),
        ball_shown: show_ball,
        neighbor_id: Some(neighbor_id),
        neighbor_guess: Some(neighbor_guess),
        choice,
        reported_posterior_pct: reported,
        covariates,
        neighbor_covariates,
    })
}
