//! Rationality labels and error-rate tables.
//!
//! A choice is *irrational* when it contradicts the record's normative
//! benchmark: the majority box for the observed ball in the individual
//! condition, the neighbor's guess in the social condition. Irrational
//! choices decompose by the reported belief: a *posterior error* when the
//! recovered belief fails to strictly favor the benchmark option (the first
//! stage already went wrong), a *reasoning error* when the belief favors it
//! yet the choice deviates (the second stage went wrong).
//!
//! Records with no benchmark are excluded: the symmetric structure, where
//! theory predicts nothing, and ball-variant social rounds whose neighbor
//! guessed against their own shown ball (the benchmark presumes a rational
//! neighbor).

use crate::env::{canonicalize, rational_choice, InformationStructure};
use crate::sim::{Condition, Panel, SubjectKey, Treatment, TrialRecord};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("record not classifiable: {0}")]
    Malformed(String),
}

/// Outcome of classifying one record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorLabel {
    Rational,
    /// Irrational choice, belief not strictly favoring the benchmark option.
    PosteriorError,
    /// Irrational choice despite a belief favoring the benchmark option.
    ReasoningError,
    /// No normative benchmark for this record.
    Excluded,
}

impl ErrorLabel {
    pub fn is_irrational(self) -> bool {
        matches!(
            self,
            ErrorLabel::PosteriorError | ErrorLabel::ReasoningError
        )
    }
}

/// How to split an irrational choice whose recovered confidence in the
/// benchmark option is exactly 50: the belief then favors neither option.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// A 50/50 belief does not favor the benchmark option, so the first
    /// stage already failed to produce a usable posterior.
    #[default]
    TieIsPosteriorError,
    /// Count only beliefs strictly against the benchmark as posterior
    /// errors; a 50/50 report then charges the deviation to stage two.
    TieIsReasoningError,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassifyOptions {
    pub tie_rule: TieRule,
}

/// The option the record's subject should have chosen, if theory picks one.
fn benchmark_option(record: &TrialRecord) -> Result<Option<crate::env::State>, ClassifyError> {
    match record.condition {
        Condition::Individual => {
            let ball = record
                .ball
                .ok_or_else(|| ClassifyError::Malformed("individual record without ball".into()))?;
            Ok(rational_choice(record.structure, ball))
        }
        Condition::Social => {
            let guess = record.neighbor_guess.ok_or_else(|| {
                ClassifyError::Malformed("social record without neighbor guess".into())
            })?;
            if record.structure.is_uninformative() {
                return Ok(None);
            }
            if record.treatment == Some(Treatment::Ball) {
                let ball = record.ball.ok_or_else(|| {
                    ClassifyError::Malformed("ball-variant record without the shown ball".into())
                })?;
                match rational_choice(record.structure, ball) {
                    // A neighbor guessing against their own ball voids the
                    // benchmark, which presumes a rational neighbor.
                    Some(rational) if rational == guess => {}
                    _ => return Ok(None),
                }
            }
            Ok(Some(guess))
        }
    }
}

/// Labels one record. Excluded when theory makes no prediction; otherwise
/// rational, or an irrational choice split by the reported belief.
pub fn classify_record(
    record: &TrialRecord,
    options: &ClassifyOptions,
) -> Result<ErrorLabel, ClassifyError> {
    let Some(benchmark) = benchmark_option(record)? else {
        return Ok(ErrorLabel::Excluded);
    };
    if record.choice == benchmark {
        return Ok(ErrorLabel::Rational);
    }
    // The subject chose against the benchmark; their reported confidence is
    // in the chosen box, so confidence in the benchmark is the complement.
    let confidence_in_benchmark = 100 - i32::from(record.reported_posterior_pct);
    let posterior_error = match options.tie_rule {
        TieRule::TieIsPosteriorError => confidence_in_benchmark <= 50,
        TieRule::TieIsReasoningError => confidence_in_benchmark < 50,
    };
    Ok(if posterior_error {
        ErrorLabel::PosteriorError
    } else {
        ErrorLabel::ReasoningError
    })
}

/// Counts for one grouping cell. `n` counts classified (non-excluded)
/// records; excluded records are tallied separately and sit outside every
/// rate's denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RateCell {
    pub n: u64,
    pub excluded: u64,
    pub irrational: u64,
    pub posterior_errors: u64,
    pub reasoning_errors: u64,
}

impl RateCell {
    fn add(&mut self, label: ErrorLabel) {
        match label {
            ErrorLabel::Excluded => self.excluded += 1,
            ErrorLabel::Rational => self.n += 1,
            ErrorLabel::PosteriorError => {
                self.n += 1;
                self.irrational += 1;
                self.posterior_errors += 1;
            }
            ErrorLabel::ReasoningError => {
                self.n += 1;
                self.irrational += 1;
                self.reasoning_errors += 1;
            }
        }
    }

    /// Fraction of classified records that were irrational (NaN when the
    /// cell classified nothing).
    pub fn rate(&self) -> f64 {
        self.irrational as f64 / self.n as f64
    }

    pub fn posterior_error_rate(&self) -> f64 {
        self.posterior_errors as f64 / self.n as f64
    }

    pub fn reasoning_error_rate(&self) -> f64 {
        self.reasoning_errors as f64 / self.n as f64
    }

    /// Binomial standard error of the irrationality rate.
    pub fn se(&self) -> f64 {
        let r = self.rate();
        (r * (1.0 - r) / self.n as f64).sqrt()
    }
}

/// Every tabulation of the error rates the pipelines report.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateTables {
    /// Per condition, with the posterior/reasoning decomposition.
    pub overall: BTreeMap<Condition, RateCell>,
    /// Per subject × condition (the within-subject comparisons and the
    /// per-subject regressions read from this).
    pub by_subject: BTreeMap<(SubjectKey, Condition), RateCell>,
    /// Per treatment × condition (pool records carry no treatment and are
    /// absent here).
    pub by_treatment: BTreeMap<(Treatment, Condition), RateCell>,
    /// Per condition × structure as faced (the designed structures).
    pub by_structure: BTreeMap<(Condition, InformationStructure), RateCell>,
    /// Per condition × structure after canonicalizing each record, i.e.
    /// conditional on signal White / guess X; asymmetric structures under the
    /// flipped signal land on their relabeled mirror, so this cut spans up to
    /// 36 structures.
    pub by_structure_signal: BTreeMap<(Condition, InformationStructure), RateCell>,
    /// Per condition using only each subject's first-played condition: a
    /// between-subject version of `overall`, free of carry-over effects.
    pub between_subject: BTreeMap<Condition, RateCell>,
    pub between_subject_by_treatment: BTreeMap<(Treatment, Condition), RateCell>,
}

/// Classifies the whole panel and tabulates every cut at once.
pub fn rate_tables(panel: &Panel, options: &ClassifyOptions) -> Result<RateTables, ClassifyError> {
    let mut tables = RateTables::default();
    for record in panel.records() {
        let label = classify_record(record, options)?;
        let condition = record.condition;
        tables.overall.entry(condition).or_default().add(label);
        tables
            .by_subject
            .entry((record.subject_key(), condition))
            .or_default()
            .add(label);
        if let Some(treatment) = record.treatment {
            tables
                .by_treatment
                .entry((treatment, condition))
                .or_default()
                .add(label);
        }
        tables
            .by_structure
            .entry((condition, record.structure))
            .or_default()
            .add(label);
        let canonical = canonicalize(record);
        tables
            .by_structure_signal
            .entry((condition, canonical.structure))
            .or_default()
            .add(label);
        if condition == record.condition_order.first() {
            tables
                .between_subject
                .entry(condition)
                .or_default()
                .add(label);
            if let Some(treatment) = record.treatment {
                tables
                    .between_subject_by_treatment
                    .entry((treatment, condition))
                    .or_default()
                    .add(label);
            }
        }
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{subjective_posterior, AgentKind, TrialContext};
    use crate::env::{Signal, State};
    use crate::sim::{simulate_experiment, ConditionOrder, Covariates, ParamDist, SimConfig};
    use proptest::prelude::*;

    fn covs() -> Covariates {
        Covariates {
            female: true,
            education_years: 15,
            age: 20,
            prob_stat: true,
        }
    }

    fn individual_record(w: u8, b: u8, ball: Signal, choice: State, reported: u8) -> TrialRecord {
        TrialRecord {
            session_id: "BASE".into(),
            subject_id: 1,
            treatment: Some(Treatment::Base),
            condition: Condition::Individual,
            condition_order: ConditionOrder::IndividualFirst,
            round: 1,
            structure: InformationStructure::new(w, b).unwrap(),
            true_state: State::X,
            ball: Some(ball),
            ball_shown: true,
            neighbor_id: None,
            neighbor_guess: None,
            choice,
            reported_posterior_pct: reported,
            covariates: covs(),
            neighbor_covariates: None,
        }
    }

    fn social_record(
        treatment: Treatment,
        w: u8,
        b: u8,
        guess: State,
        shown_ball: Option<Signal>,
        choice: State,
        reported: u8,
    ) -> TrialRecord {
        TrialRecord {
            session_id: treatment.session_id().into(),
            subject_id: 1,
            treatment: Some(treatment),
            condition: Condition::Social,
            condition_order: ConditionOrder::IndividualFirst,
            round: 1,
            structure: InformationStructure::new(w, b).unwrap(),
            true_state: State::X,
            ball: shown_ball,
            ball_shown: shown_ball.is_some(),
            neighbor_id: Some(if treatment == Treatment::Bot {
                "BOT".into()
            } else {
                "POOL-1".into()
            }),
            neighbor_guess: Some(guess),
            choice,
            reported_posterior_pct: reported,
            covariates: covs(),
            neighbor_covariates: (treatment == Treatment::Demographics).then(covs),
        }
    }

    fn label(record: &TrialRecord) -> ErrorLabel {
        classify_record(record, &ClassifyOptions::default()).unwrap()
    }

    #[test]
    fn individual_benchmark_is_the_majority_box() {
        // White at (0.8, 0.7) points at X. Choosing Y at confidence 70 means
        // believing Y — a first-stage failure; choosing Y while reporting 30
        // means believing X yet picking Y — a second-stage failure.
        let wrong_belief = individual_record(8, 7, Signal::White, State::Y, 70);
        assert_eq!(label(&wrong_belief), ErrorLabel::PosteriorError);
        let wrong_choice = individual_record(8, 7, Signal::White, State::Y, 30);
        assert_eq!(label(&wrong_choice), ErrorLabel::ReasoningError);
        let fine = individual_record(8, 7, Signal::White, State::X, 70);
        assert_eq!(label(&fine), ErrorLabel::Rational);
        // A rational choice with a low report is still rational — only the
        // choice is benchmarked.
        let fine_low = individual_record(8, 7, Signal::White, State::X, 20);
        assert_eq!(label(&fine_low), ErrorLabel::Rational);
    }

    #[test]
    fn symmetric_structure_is_excluded_everywhere() {
        assert_eq!(
            label(&individual_record(5, 5, Signal::White, State::X, 50)),
            ErrorLabel::Excluded
        );
        assert_eq!(
            label(&social_record(
                Treatment::Base,
                5,
                5,
                State::X,
                None,
                State::Y,
                80
            )),
            ErrorLabel::Excluded
        );
    }

    #[test]
    fn social_benchmark_is_the_neighbor_guess() {
        let follow = social_record(Treatment::Base, 7, 6, State::X, None, State::X, 55);
        assert_eq!(label(&follow), ErrorLabel::Rational);
        // Deviating while confident in the deviation: belief already wrong.
        let deviate_sure = social_record(Treatment::Base, 7, 6, State::X, None, State::Y, 60);
        assert_eq!(label(&deviate_sure), ErrorLabel::PosteriorError);
        // Deviating against one's own stated belief: reasoning failure.
        let deviate_unsure = social_record(Treatment::Base, 7, 6, State::X, None, State::Y, 40);
        assert_eq!(label(&deviate_unsure), ErrorLabel::ReasoningError);
    }

    #[test]
    fn exact_fifty_report_follows_the_tie_rule() {
        let deviate_tied = individual_record(8, 7, Signal::White, State::Y, 50);
        assert_eq!(label(&deviate_tied), ErrorLabel::PosteriorError);
        let reasoning_rule = ClassifyOptions {
            tie_rule: TieRule::TieIsReasoningError,
        };
        assert_eq!(
            classify_record(&deviate_tied, &reasoning_rule).unwrap(),
            ErrorLabel::ReasoningError
        );
        // Away from the tie the rule choice is irrelevant.
        let clear = individual_record(8, 7, Signal::White, State::Y, 51);
        assert_eq!(
            classify_record(&clear, &reasoning_rule).unwrap(),
            label(&clear)
        );
    }

    #[test]
    fn ball_variant_conditions_on_a_rational_neighbor() {
        // Neighbor saw White at (0.8, 0.7) and guessed X: benchmark applies.
        let ok = social_record(
            Treatment::Ball,
            8,
            7,
            State::X,
            Some(Signal::White),
            State::Y,
            70,
        );
        assert_eq!(label(&ok), ErrorLabel::PosteriorError);
        // Neighbor guessed against their ball: no benchmark, excluded.
        let contradicted = social_record(
            Treatment::Ball,
            8,
            7,
            State::Y,
            Some(Signal::White),
            State::Y,
            70,
        );
        assert_eq!(label(&contradicted), ErrorLabel::Excluded);
        // Other treatments do not condition on the (unseen) ball.
        let base_deviate = social_record(Treatment::Base, 8, 7, State::Y, None, State::Y, 70);
        assert_eq!(label(&base_deviate), ErrorLabel::Rational);
    }

    #[test]
    fn malformed_records_error_instead_of_mislabeling() {
        let mut no_ball = individual_record(8, 7, Signal::White, State::X, 50);
        no_ball.ball = None;
        assert!(classify_record(&no_ball, &ClassifyOptions::default()).is_err());

        let mut no_guess = social_record(Treatment::Base, 8, 7, State::X, None, State::X, 50);
        no_guess.neighbor_guess = None;
        assert!(classify_record(&no_guess, &ClassifyOptions::default()).is_err());
    }

    #[test]
    fn rational_population_has_zero_error_rates() {
        let mut config = SimConfig {
            master_seed: 3,
            pool_size: 10,
            ..SimConfig::default()
        };
        config.subjects = Treatment::ALL.iter().map(|&t| (t, 4)).collect();
        config.population.kind = AgentKind::ExactBayesianRational;
        let panel = simulate_experiment(&config).unwrap();
        let tables = rate_tables(&panel, &ClassifyOptions::default()).unwrap();
        for (condition, cell) in &tables.overall {
            assert_eq!(cell.irrational, 0, "{condition:?}: {cell:?}");
            assert!(cell.n > 0);
        }
    }

    #[test]
    fn structural_population_errs_more_socially_than_individually() {
        // At the reference parameters the choice noise β is scaled by a
        // near-flat social posterior, so deviating from the neighbor is far
        // more likely than deviating from one's own ball.
        let mut config = SimConfig {
            master_seed: 17,
            ..SimConfig::default()
        };
        config.subjects = Treatment::ALL.iter().map(|&t| (t, 10)).collect();
        let panel = simulate_experiment(&config).unwrap();
        let tables = rate_tables(&panel, &ClassifyOptions::default()).unwrap();
        let ind = tables.overall[&Condition::Individual].rate();
        let soc = tables.overall[&Condition::Social].rate();
        assert!(
            soc > ind,
            "social rate {soc:.3} should exceed individual rate {ind:.3}"
        );
    }

    #[test]
    fn decomposition_is_exact_in_every_cell() {
        let mut config = SimConfig {
            master_seed: 23,
            pool_size: 20,
            ..SimConfig::default()
        };
        config.subjects = Treatment::ALL.iter().map(|&t| (t, 6)).collect();
        config.population.report_noise_sd = ParamDist::Point(10.0);
        let panel = simulate_experiment(&config).unwrap();
        let tables = rate_tables(&panel, &ClassifyOptions::default()).unwrap();
        let all_cells = tables
            .overall
            .values()
            .chain(tables.by_subject.values())
            .chain(tables.by_treatment.values())
            .chain(tables.by_structure.values())
            .chain(tables.by_structure_signal.values())
            .chain(tables.between_subject.values())
            .chain(tables.between_subject_by_treatment.values());
        for cell in all_cells {
            assert_eq!(
                cell.irrational,
                cell.posterior_errors + cell.reasoning_errors
            );
            assert!(cell.irrational <= cell.n);
        }
        // The cuts partition the same records: totals agree.
        let overall_n: u64 = tables.overall.values().map(|c| c.n + c.excluded).sum();
        let structure_n: u64 = tables.by_structure.values().map(|c| c.n + c.excluded).sum();
        let signal_n: u64 = tables
            .by_structure_signal
            .values()
            .map(|c| c.n + c.excluded)
            .sum();
        assert_eq!(overall_n, panel.len() as u64);
        assert_eq!(structure_n, overall_n);
        assert_eq!(signal_n, overall_n);
    }

    #[test]
    fn between_subject_uses_only_first_conditions() {
        let mut config = SimConfig {
            master_seed: 29,
            pool_size: 10,
            ..SimConfig::default()
        };
        config.subjects = Treatment::ALL.iter().map(|&t| (t, 8)).collect();
        let panel = simulate_experiment(&config).unwrap();
        let tables = rate_tables(&panel, &ClassifyOptions::default()).unwrap();
        let rounds = u64::from(config.rounds_per_condition);
        let n_subjects: u64 = config.subjects.values().map(|&n| u64::from(n)).sum();
        let counted: u64 = tables
            .between_subject
            .values()
            .map(|c| c.n + c.excluded)
            .sum();
        // Exactly one condition's worth of rounds per subject.
        assert_eq!(counted, n_subjects * rounds);
    }

    #[test]
    fn reasoning_errors_imply_a_latent_belief_in_the_benchmark() {
        // Zero reporting noise: labels must be consistent with the latent
        // model posterior (up to the 0.5-point rounding of reports).
        let mut config = SimConfig {
            master_seed: 31,
            ..SimConfig::default()
        };
        config.subjects = Treatment::ALL.iter().map(|&t| (t, 10)).collect();
        let panel = simulate_experiment(&config).unwrap();
        let params = crate::agents::AgentParams::default();
        for record in panel.records() {
            let lbl = label(record);
            if !lbl.is_irrational() {
                continue;
            }
            let ctx = TrialContext {
                condition: record.condition,
                treatment: record.treatment,
                structure: record.structure,
                ball: record.ball,
                neighbor_guess: record.neighbor_guess,
                stake: config.stake,
                bot_beta_tilde: config.bot_beta_tilde,
            };
            let latent = subjective_posterior(&params, &ctx).unwrap();
            let benchmark = benchmark_option(record).unwrap().unwrap();
            let latent_in_benchmark = latent.prob_of(benchmark);
            match lbl {
                ErrorLabel::ReasoningError => assert!(
                    latent_in_benchmark > 0.5 - 0.005,
                    "reasoning error with latent belief {latent_in_benchmark} in benchmark"
                ),
                ErrorLabel::PosteriorError => assert!(
                    latent_in_benchmark <= 0.5 + 0.005,
                    "posterior error with latent belief {latent_in_benchmark} in benchmark"
                ),
                _ => unreachable!(),
            }
        }
    }

    proptest! {
        // Classification only depends on the record's information content,
        // which canonicalization preserves.
        #[test]
        fn labels_are_invariant_under_canonicalization(
            w in 5u8..=10,
            b in 5u8..=10,
            ball_white: bool,
            guess_x: bool,
            choice_x: bool,
            social: bool,
            treatment_idx in 0usize..4,
            reported in 0u8..=100,
        ) {
            let (w, b) = if w >= b { (w, b) } else { (b, w) };
            let ball = if ball_white { Signal::White } else { Signal::Black };
            let guess = if guess_x { State::X } else { State::Y };
            let choice = if choice_x { State::X } else { State::Y };
            let record = if social {
                let treatment = Treatment::ALL[treatment_idx];
                let shown = (treatment == Treatment::Ball).then_some(ball);
                social_record(treatment, w, b, guess, shown, choice, reported)
            } else {
                individual_record(w, b, ball, choice, reported)
            };
            let canonical = canonicalize(&record);
            prop_assert_eq!(label(&record), label(&canonical));
        }
    }
}
