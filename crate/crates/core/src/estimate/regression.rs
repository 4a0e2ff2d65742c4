//! Covariate regressions: subject-level least squares of error rates on
//! demographics, and record-level logistic regression of irrationality on
//! subject and neighbor demographics with cluster-robust uncertainty.

use super::EstimateError;
use crate::classify::{classify_record, ClassifyOptions, ErrorLabel};
use crate::sim::{Condition, Covariates, Panel, Treatment};
use std::collections::BTreeMap;

/// A fitted linear or logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    /// Coefficient names, parallel to `coefficients`.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Full covariance matrix of the coefficients.
    pub covariance: Vec<Vec<f64>>,
    /// Square roots of the covariance diagonal.
    pub std_errors: Vec<f64>,
    /// Average marginal effects (logistic fits only): coefficient times the
    /// sample mean of p(1−p).
    pub ames: Option<Vec<f64>>,
    pub n: usize,
    /// Adjusted R² for least squares, McFadden pseudo-R² for logistic fits.
    pub r_squared: f64,
    /// Whether the covariance was clustered on subjects (logistic fits).
    pub clustered: bool,
    pub n_clusters: Option<usize>,
}

fn covariate_values(c: &Covariates) -> [f64; 4] {
    [
        f64::from(u8::from(c.female)),
        f64::from(c.education_years),
        f64::from(c.age),
        f64::from(u8::from(c.prob_stat)),
    ]
}

const SUBJECT_NAMES: [&str; 4] = ["female", "education_years", "age", "prob_stat"];

/// Gauss-Jordan inversion with partial pivoting.
fn invert(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, EstimateError> {
    let k = a.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut work: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut extended = row.clone();
            extended.extend((0..k).map(|j| f64::from(u8::from(i == j))));
            extended
        })
        .collect();
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&r, &s| work[r][col].abs().total_cmp(&work[s][col].abs()))
            .expect("non-empty pivot range");
        if work[pivot_row][col].abs() < scale * 1e-12 {
            return Err(EstimateError::RankDeficient);
        }
        work.swap(col, pivot_row);
        let pivot = work[col][col];
        for v in work[col].iter_mut() {
            *v /= pivot;
        }
        for row in 0..k {
            if row == col {
                continue;
            }
            let factor = work[row][col];
            if factor == 0.0 {
                continue;
            }
            let pivot_row = work[col].clone();
            for (dst, src) in work[row].iter_mut().zip(&pivot_row) {
                *dst -= factor * src;
            }
        }
    }
    Ok(work.into_iter().map(|row| row[k..].to_vec()).collect())
}

fn cross_product(rows: &[Vec<f64>], weights: Option<&[f64]>) -> Vec<Vec<f64>> {
    let k = rows.first().map_or(0, Vec::len);
    let mut out = vec![vec![0.0; k]; k];
    for (idx, row) in rows.iter().enumerate() {
        let w = weights.map_or(1.0, |ws| ws[idx]);
        for i in 0..k {
            for j in 0..k {
                out[i][j] += w * row[i] * row[j];
            }
        }
    }
    out
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let k = b[0].len();
    let inner = b.len();
    let mut out = vec![vec![0.0; k]; n];
    for i in 0..n {
        for j in 0..k {
            for l in 0..inner {
                out[i][j] += a[i][l] * b[l][j];
            }
        }
    }
    out
}

/// Subject-level least squares: a per-subject rate (as a fraction) against
/// the subject's demographics, with the rate rescaled to percentage points.
/// Design: intercept, female, years of education, age, prob/stat course.
pub fn fit_subject_ols(rows: &[(f64, Covariates)]) -> Result<RegressionFit, EstimateError> {
    let k = 5;
    if rows.len() < k + 1 {
        return Err(EstimateError::InsufficientData {
            need: k + 1,
            got: rows.len(),
        });
    }
    let names: Vec<String> = std::iter::once("intercept")
        .chain(SUBJECT_NAMES)
        .map(str::to_string)
        .collect();
    let ys: Vec<f64> = rows.iter().map(|(rate, _)| rate * 100.0).collect();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(EstimateError::BadInput("non-finite rate".into()));
    }
    let n = rows.len();
    let mean_y = ys.iter().sum::<f64>() / n as f64;
    if ys.iter().all(|&y| y == ys[0]) {
        // A constant outcome fits exactly with all slopes at zero.
        let mut coefficients = vec![0.0; k];
        coefficients[0] = ys[0];
        return Ok(RegressionFit {
            names,
            coefficients,
            covariance: vec![vec![0.0; k]; k],
            std_errors: vec![0.0; k],
            ames: None,
            n,
            r_squared: 0.0,
            clustered: false,
            n_clusters: None,
        });
    }

    let design: Vec<Vec<f64>> = rows
        .iter()
        .map(|(_, c)| {
            let mut row = vec![1.0];
            row.extend(covariate_values(c));
            row
        })
        .collect();
    let xtx_inv = invert(&cross_product(&design, None))?;
    let mut xty = vec![0.0; k];
    for (row, &y) in design.iter().zip(&ys) {
        for (target, &x) in xty.iter_mut().zip(row) {
            *target += x * y;
        }
    }
    let coefficients: Vec<f64> = xtx_inv
        .iter()
        .map(|row| row.iter().zip(&xty).map(|(a, b)| a * b).sum())
        .collect();

    let rss: f64 = design
        .iter()
        .zip(&ys)
        .map(|(row, &y)| {
            let fitted: f64 = row.iter().zip(&coefficients).map(|(x, b)| x * b).sum();
            (y - fitted).powi(2)
        })
        .sum();
    let tss: f64 = ys.iter().map(|y| (y - mean_y).powi(2)).sum();
    if n <= k {
        return Err(EstimateError::InsufficientData {
            need: k + 1,
            got: n,
        });
    }
    let sigma2 = rss / (n - k) as f64;
    let covariance: Vec<Vec<f64>> = xtx_inv
        .iter()
        .map(|row| row.iter().map(|v| v * sigma2).collect())
        .collect();
    let std_errors = (0..k).map(|i| covariance[i][i].max(0.0).sqrt()).collect();
    let r_squared = 1.0 - (rss / (n - k) as f64) / (tss / (n - 1) as f64);
    Ok(RegressionFit {
        names,
        coefficients,
        covariance,
        std_errors,
        ames: None,
        n,
        r_squared,
        clustered: false,
        n_clusters: None,
    })
}

const LOGIT_MAX_ITERATIONS: usize = 100;
const LOGIT_LOGLIK_TOLERANCE: f64 = 1e-10;

/// Record-level logistic regression of the irrationality indicator on
/// subject and neighbor demographics, over social rounds of the treatment
/// that reveals neighbor demographics. Records without a behavioral
/// benchmark are omitted. The covariance is a sandwich clustered on
/// subjects when `cluster_by_subject` is set, and with one cluster per
/// record (plain heteroskedasticity-robust) otherwise. Marginal effects
/// are reported at the sample mean of the logistic density.
pub fn fit_irrationality_logit(
    panel: &Panel,
    cluster_by_subject: bool,
) -> Result<RegressionFit, EstimateError> {
    let options = ClassifyOptions::default();
    let mut design: Vec<Vec<f64>> = Vec::new();
    let mut outcomes: Vec<f64> = Vec::new();
    let mut clusters: Vec<usize> = Vec::new();
    let mut cluster_ids: BTreeMap<(String, u32), usize> = BTreeMap::new();
    for record in panel.in_condition(Condition::Social) {
        if record.treatment != Some(Treatment::Demographics) {
            continue;
        }
        let label = classify_record(record, &options)
            .map_err(|e| EstimateError::BadInput(e.to_string()))?;
        if label == ErrorLabel::Excluded {
            continue;
        }
        let neighbor = record.neighbor_covariates.as_ref().ok_or_else(|| {
            EstimateError::BadInput(
                "demographics-treatment record without neighbor covariates".into(),
            )
        })?;
        let mut row = vec![1.0];
        row.extend(covariate_values(&record.covariates));
        row.extend(covariate_values(neighbor));
        design.push(row);
        outcomes.push(f64::from(u8::from(label.is_irrational())));
        let next_id = cluster_ids.len();
        let id = *cluster_ids.entry(record.subject_key()).or_insert(next_id);
        clusters.push(if cluster_by_subject {
            id
        } else {
            outcomes.len() - 1
        });
    }
    let k = 9;
    let names: Vec<String> = std::iter::once("intercept".to_string())
        .chain(SUBJECT_NAMES.iter().map(|n| n.to_string()))
        .chain(SUBJECT_NAMES.iter().map(|n| format!("neighbor_{n}")))
        .collect();
    let n = design.len();
    if n < k + 1 {
        return Err(EstimateError::InsufficientData {
            need: k + 1,
            got: n,
        });
    }
    let mean_outcome = outcomes.iter().sum::<f64>() / n as f64;
    if mean_outcome == 0.0 || mean_outcome == 1.0 {
        return Err(EstimateError::BadInput("outcome is constant".into()));
    }

    let log_likelihood = |probs: &[f64]| -> f64 {
        probs
            .iter()
            .zip(&outcomes)
            .map(|(&p, &d)| d * p.max(1e-300).ln() + (1.0 - d) * (1.0 - p).max(1e-300).ln())
            .sum()
    };
    let fitted = |beta: &[f64]| -> Vec<f64> {
        design
            .iter()
            .map(|row| {
                let z: f64 = row.iter().zip(beta).map(|(x, b)| x * b).sum();
                1.0 / (1.0 + (-z).exp())
            })
            .collect()
    };

    let mut beta = vec![0.0; k];
    let mut probs = fitted(&beta);
    let mut ll = log_likelihood(&probs);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < LOGIT_MAX_ITERATIONS {
        iterations += 1;
        let weights: Vec<f64> = probs.iter().map(|p| p * (1.0 - p)).collect();
        let info = cross_product(&design, Some(&weights));
        let info_inv = invert(&info)?;
        let mut score = vec![0.0; k];
        for (row, (&p, &d)) in design.iter().zip(probs.iter().zip(&outcomes)) {
            for (target, &x) in score.iter_mut().zip(row) {
                *target += x * (d - p);
            }
        }
        let mut step: Vec<f64> = info_inv
            .iter()
            .map(|row| row.iter().zip(&score).map(|(a, b)| a * b).sum())
            .collect();
        let mut halvings = 0;
        loop {
            let candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
            let candidate_probs = fitted(&candidate);
            let candidate_ll = log_likelihood(&candidate_probs);
            if candidate_ll >= ll || halvings >= 60 {
                beta = candidate;
                probs = candidate_probs;
                let improved = candidate_ll - ll;
                ll = candidate_ll;
                if improved.abs() < LOGIT_LOGLIK_TOLERANCE {
                    converged = true;
                }
                break;
            }
            for s in &mut step {
                *s /= 2.0;
            }
            halvings += 1;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(EstimateError::NonConvergence(iterations));
    }
    // A perfectly predicted outcome means the coefficients only stopped
    // moving because the likelihood flattened at infinity.
    let perfectly_predicted = probs
        .iter()
        .zip(&outcomes)
        .all(|(&p, &d)| (d - p).abs() < 1e-6);
    if perfectly_predicted {
        return Err(EstimateError::Separation);
    }

    let weights: Vec<f64> = probs.iter().map(|p| p * (1.0 - p)).collect();
    let info_inv = invert(&cross_product(&design, Some(&weights)))?;
    let n_clusters = clusters.iter().copied().max().map_or(0, |m| m + 1);
    let mut cluster_scores: Vec<Vec<f64>> = vec![vec![0.0; k]; n_clusters];
    for ((row, (&p, &d)), &g) in design
        .iter()
        .zip(probs.iter().zip(&outcomes))
        .zip(&clusters)
    {
        for (target, &x) in cluster_scores[g].iter_mut().zip(row) {
            *target += x * (d - p);
        }
    }
    if n_clusters < 2 {
        return Err(EstimateError::InsufficientData {
            need: 2,
            got: n_clusters,
        });
    }
    let mut meat = cross_product(&cluster_scores, None);
    let small_sample = n_clusters as f64 / (n_clusters as f64 - 1.0);
    for row in &mut meat {
        for v in row.iter_mut() {
            *v *= small_sample;
        }
    }
    let covariance = mat_mul(&mat_mul(&info_inv, &meat), &info_inv);
    let std_errors = (0..k).map(|i| covariance[i][i].max(0.0).sqrt()).collect();

    let density_mean = weights.iter().sum::<f64>() / n as f64;
    let ames = beta.iter().map(|b| b * density_mean).collect();
    let ll_null = n as f64
        * (mean_outcome * mean_outcome.ln() + (1.0 - mean_outcome) * (1.0 - mean_outcome).ln());
    Ok(RegressionFit {
        names,
        coefficients: beta,
        covariance,
        std_errors,
        ames: Some(ames),
        n,
        r_squared: 1.0 - ll / ll_null,
        clustered: cluster_by_subject,
        n_clusters: Some(n_clusters),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{InformationStructure, State};
    use crate::rng::substream;
    use crate::sim::{Condition, ConditionOrder, TrialRecord};
    use rand::Rng;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn cov(female: bool, education_years: u8, age: u8, prob_stat: bool) -> Covariates {
        Covariates {
            female,
            education_years,
            age,
            prob_stat,
        }
    }

    #[test]
    fn subject_regression_fits_a_planted_linear_rule_exactly() {
        let designs = [
            (false, 12, 20, false),
            (true, 12, 20, false),
            (false, 14, 20, false),
            (false, 12, 25, false),
            (false, 12, 20, true),
            (true, 16, 30, true),
            (true, 14, 22, false),
            (false, 15, 28, true),
        ];
        let rows: Vec<(f64, Covariates)> = designs
            .iter()
            .map(|&(f, e, a, p)| {
                let c = cov(f, e, a, p);
                let y = 30.0 + 5.0 * f64::from(u8::from(f)) - f64::from(e)
                    + 0.5 * f64::from(a)
                    + 3.0 * f64::from(u8::from(p));
                (y / 100.0, c)
            })
            .collect();
        let fit = fit_subject_ols(&rows).unwrap();
        let expected = [30.0, 5.0, -1.0, 0.5, 3.0];
        for (b, e) in fit.coefficients.iter().zip(expected) {
            close(*b, e, 1e-8);
        }
        close(fit.r_squared, 1.0, 1e-9);
        for se in &fit.std_errors {
            close(*se, 0.0, 1e-7);
        }
    }

    #[test]
    fn subject_regression_short_circuits_a_constant_outcome() {
        let rows: Vec<(f64, Covariates)> = (0..10)
            .map(|i| {
                (
                    0.25,
                    cov(i % 2 == 0, 12 + i as u8, 20 + i as u8, i % 3 == 0),
                )
            })
            .collect();
        let fit = fit_subject_ols(&rows).unwrap();
        assert_eq!(fit.coefficients[0], 25.0);
        assert_eq!(&fit.coefficients[1..], [0.0, 0.0, 0.0, 0.0]);
        assert_eq!(fit.r_squared, 0.0);
    }

    #[test]
    fn subject_regression_recovers_a_noisy_planted_effect() {
        let mut rng = substream(11, 90, 0);
        let rows: Vec<(f64, Covariates)> = (0..80)
            .map(|_| {
                let c = cov(
                    rng.random::<f64>() < 0.5,
                    12 + rng.random_range(0..6),
                    18 + rng.random_range(0..12),
                    rng.random::<f64>() < 0.5,
                );
                let y = 20.0 - 8.0 * f64::from(u8::from(c.prob_stat))
                    + 3.0 * (rng.random::<f64>() - 0.5);
                (y / 100.0, c)
            })
            .collect();
        let fit = fit_subject_ols(&rows).unwrap();
        close(fit.coefficients[4], -8.0, 2.0);
        assert!(fit.coefficients[4] < 0.0);
        assert!(fit.std_errors[4] > 0.0);
        assert!(fit.r_squared > 0.5);
    }

    #[test]
    fn collinear_designs_are_rejected() {
        // Every subject shares one covariate vector, so the prob-stat
        // column duplicates the intercept.
        let rows: Vec<(f64, Covariates)> = (0..12)
            .map(|i| (0.1 + 0.01 * f64::from(i), cov(false, 14, 21, true)))
            .collect();
        assert!(matches!(
            fit_subject_ols(&rows),
            Err(EstimateError::RankDeficient)
        ));
    }

    #[test]
    fn too_few_rows_are_rejected() {
        let rows: Vec<(f64, Covariates)> = (0..4)
            .map(|i| (0.1, cov(i % 2 == 0, 12 + i as u8, 20, false)))
            .collect();
        assert!(matches!(
            fit_subject_ols(&rows),
            Err(EstimateError::InsufficientData { .. })
        ));
    }

    fn demo_social_record(
        subject: u32,
        round: u32,
        own: Covariates,
        neighbor: Covariates,
        irrational: bool,
    ) -> TrialRecord {
        TrialRecord {
            session_id: "DEMO".into(),
            subject_id: subject,
            treatment: Some(Treatment::Demographics),
            condition: Condition::Social,
            condition_order: ConditionOrder::IndividualFirst,
            round,
            structure: InformationStructure::new(8, 7).unwrap(),
            true_state: State::X,
            ball: None,
            ball_shown: false,
            neighbor_id: Some("POOL-7".into()),
            neighbor_guess: Some(State::X),
            choice: if irrational { State::Y } else { State::X },
            reported_posterior_pct: 60,
            covariates: own,
            neighbor_covariates: Some(neighbor),
        }
    }

    fn random_cov<R: Rng>(rng: &mut R) -> Covariates {
        cov(
            rng.random::<f64>() < 0.5,
            12 + rng.random_range(0..6),
            18 + rng.random_range(0..12),
            rng.random::<f64>() < 0.5,
        )
    }

    fn planted_logit_panel_with(
        seed: u64,
        subjects: u32,
        rounds: u32,
        subject_effect_sd: f64,
    ) -> Panel {
        let mut records = Vec::new();
        for subject in 1..=subjects {
            let mut rng = substream(seed, 91, u64::from(subject));
            let own = random_cov(&mut rng);
            let subject_effect = subject_effect_sd * crate::rng::standard_normal(&mut rng);
            for round in 1..=rounds {
                let neighbor = random_cov(&mut rng);
                let z = -1.0 + 0.3 * f64::from(u8::from(own.female))
                    - 1.2 * f64::from(u8::from(neighbor.prob_stat))
                    + subject_effect;
                let p = 1.0 / (1.0 + (-z).exp());
                let irrational = rng.random::<f64>() < p;
                records.push(demo_social_record(
                    subject, round, own, neighbor, irrational,
                ));
            }
        }
        Panel::from_records(records).unwrap()
    }

    fn planted_logit_panel(seed: u64, subjects: u32, rounds: u32) -> Panel {
        planted_logit_panel_with(seed, subjects, rounds, 0.0)
    }

    #[test]
    fn irrationality_regression_recovers_planted_neighbor_effects() {
        let panel = planted_logit_panel(2024, 80, 21);
        let fit = fit_irrationality_logit(&panel, true).unwrap();
        assert_eq!(fit.names.len(), 9);
        assert_eq!(fit.names[8], "neighbor_prob_stat");
        assert!(
            fit.coefficients[8] < -0.6 && fit.coefficients[8] > -2.0,
            "neighbor effect {} should be near -1.2",
            fit.coefficients[8]
        );
        assert!(fit.coefficients[1] > -0.2 && fit.coefficients[1] < 0.8);
        let ames = fit.ames.as_ref().unwrap();
        assert!(ames[8] < 0.0);
        assert!(fit.r_squared > 0.0 && fit.r_squared < 1.0);
        assert!(fit.clustered);
        assert_eq!(fit.n_clusters, Some(80));
        assert_eq!(fit.n, 80 * 21);
    }

    #[test]
    fn marginal_effects_scale_every_coefficient_by_one_factor() {
        let panel = planted_logit_panel(7, 40, 10);
        let fit = fit_irrationality_logit(&panel, true).unwrap();
        let ames = fit.ames.as_ref().unwrap();
        let factor = ames[0] / fit.coefficients[0];
        for (a, b) in ames.iter().zip(&fit.coefficients) {
            close(*a, b * factor, 1e-10);
        }
        assert!(factor > 0.0 && factor <= 0.25);
    }

    #[test]
    fn singleton_clusters_match_the_unclustered_covariance() {
        // One record per subject: clustering on subjects is the same as one
        // cluster per record, so both flags must agree exactly.
        let panel = planted_logit_panel(300, 120, 1);
        let clustered = fit_irrationality_logit(&panel, true).unwrap();
        let unclustered = fit_irrationality_logit(&panel, false).unwrap();
        for (a, b) in clustered
            .covariance
            .iter()
            .flatten()
            .zip(unclustered.covariance.iter().flatten())
        {
            close(*a, *b, 1e-12 * a.abs().max(1.0));
        }
        assert!(!unclustered.clustered);
    }

    #[test]
    fn clustering_widens_errors_under_within_subject_correlation() {
        // A subject-level shock the covariates do not capture makes the
        // 21 records per subject positively correlated; clustering on the
        // 60 subjects must widen the subject-female standard error that
        // singleton clusters understate.
        let panel = planted_logit_panel_with(55, 60, 21, 0.8);
        let clustered = fit_irrationality_logit(&panel, true).unwrap();
        let unclustered = fit_irrationality_logit(&panel, false).unwrap();
        assert!(clustered.std_errors[1] > unclustered.std_errors[1]);
    }

    #[test]
    fn perfectly_separated_outcomes_are_reported_as_such() {
        let mut rng = substream(13, 92, 0);
        let mut records = Vec::new();
        for subject in 1..=30u32 {
            let own = random_cov(&mut rng);
            let neighbor = random_cov(&mut rng);
            records.push(demo_social_record(
                subject,
                1,
                own,
                neighbor,
                neighbor.prob_stat,
            ));
        }
        let panel = Panel::from_records(records).unwrap();
        assert!(matches!(
            fit_irrationality_logit(&panel, true),
            Err(EstimateError::Separation)
        ));
    }

    #[test]
    fn constant_outcomes_are_rejected() {
        let mut rng = substream(17, 93, 0);
        let mut records = Vec::new();
        for subject in 1..=20u32 {
            let own = random_cov(&mut rng);
            let neighbor = random_cov(&mut rng);
            records.push(demo_social_record(subject, 1, own, neighbor, false));
        }
        let panel = Panel::from_records(records).unwrap();
        assert!(matches!(
            fit_irrationality_logit(&panel, true),
            Err(EstimateError::BadInput(_))
        ));
    }

    #[test]
    fn matrix_inverse_round_trips() {
        let a = vec![
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ];
        let inv = invert(&a).unwrap();
        let product = mat_mul(&a, &inv);
        for (i, row) in product.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                close(*v, f64::from(u8::from(i == j)), 1e-12);
            }
        }
        let singular = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(
            invert(&singular),
            Err(EstimateError::RankDeficient)
        ));
    }
}
