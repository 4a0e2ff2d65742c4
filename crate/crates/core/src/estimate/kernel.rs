//! Non-parametric curves: Gaussian-kernel (Nadaraya-Watson) regression and
//! the panel-to-curve input extraction for belief and choice curves.

use super::{guess_signal, EstimateError};
use crate::classify::{classify_record, ClassifyOptions, ErrorLabel};
use crate::env::{bayes_posterior, State};
use crate::sim::{Condition, Panel};

/// Kernel weights summing below this are treated as "no local data".
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// The default smoothing bandwidth, on the percent scale of the curves.
pub const DEFAULT_BANDWIDTH: f64 = 15.0;

/// A smoothed curve on a fixed grid. Grid points with no effective local
/// data hold `None` rather than an extrapolated value.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCurve {
    pub grid: Vec<f64>,
    pub estimates: Vec<Option<f64>>,
    /// Weighted local standard deviation around the estimate.
    pub sd: Vec<Option<f64>>,
    /// Effective sample size (Σw)²/Σw² at each grid point.
    pub n_effective: Vec<f64>,
    pub bandwidth: f64,
}

/// The standard evaluation grid: every integer percent from 0 to 100.
pub fn default_grid() -> Vec<f64> {
    (0..=100).map(f64::from).collect()
}

/// Nadaraya-Watson regression of `ys` on `xs` with a Gaussian kernel.
pub fn kernel_regression(
    xs: &[f64],
    ys: &[f64],
    bandwidth: f64,
    grid: &[f64],
) -> Result<KernelCurve, EstimateError> {
    if xs.len() != ys.len() {
        return Err(EstimateError::BadInput(format!(
            "x and y lengths differ ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    if xs.is_empty() {
        return Err(EstimateError::InsufficientData { need: 1, got: 0 });
    }
    if !bandwidth.is_finite() || bandwidth <= 0.0 {
        return Err(EstimateError::BadInput(format!(
            "bandwidth {bandwidth} must be positive"
        )));
    }
    if xs.iter().chain(ys).chain(grid).any(|v| !v.is_finite()) {
        return Err(EstimateError::BadInput("non-finite observation".into()));
    }
    let mut estimates = Vec::with_capacity(grid.len());
    let mut sd = Vec::with_capacity(grid.len());
    let mut n_effective = Vec::with_capacity(grid.len());
    for &g in grid {
        let mut sum_w = 0.0;
        let mut sum_wy = 0.0;
        let mut sum_w2 = 0.0;
        let weights: Vec<f64> = xs
            .iter()
            .map(|&x| (-0.5 * ((g - x) / bandwidth).powi(2)).exp())
            .collect();
        for (w, &y) in weights.iter().zip(ys) {
            sum_w += w;
            sum_wy += w * y;
            sum_w2 += w * w;
        }
        if sum_w < WEIGHT_FLOOR {
            estimates.push(None);
            sd.push(None);
            n_effective.push(0.0);
            continue;
        }
        let mean = sum_wy / sum_w;
        let variance = weights
            .iter()
            .zip(ys)
            .map(|(w, &y)| w * (y - mean).powi(2))
            .sum::<f64>()
            / sum_w;
        estimates.push(Some(mean));
        sd.push(Some(variance.max(0.0).sqrt()));
        n_effective.push(sum_w * sum_w / sum_w2);
    }
    Ok(KernelCurve {
        grid: grid.to_vec(),
        estimates,
        sd,
        n_effective,
        bandwidth,
    })
}

/// Which curve to extract inputs for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    /// Reported belief (percent in X) against the benchmark posterior for
    /// the observed ball.
    BeliefIndividual,
    /// Reported belief against the benchmark posterior implied by reading
    /// the neighbor's guess as a rational neighbor's signal.
    BeliefSocial,
    /// Chose-X indicator against the reported belief, individual rounds.
    ChoiceIndividual,
    /// Chose-X indicator against the reported belief, social rounds.
    ChoiceSocial,
}

impl CurveKind {
    pub fn condition(self) -> Condition {
        match self {
            CurveKind::BeliefIndividual | CurveKind::ChoiceIndividual => Condition::Individual,
            CurveKind::BeliefSocial | CurveKind::ChoiceSocial => Condition::Social,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CurveKind::BeliefIndividual => "belief_individual",
            CurveKind::BeliefSocial => "belief_social",
            CurveKind::ChoiceIndividual => "choice_individual",
            CurveKind::ChoiceSocial => "choice_social",
        }
    }
}

/// Extracts (x, y) pairs for a curve from a panel, both on the percent
/// scale. Records without a behavioral benchmark (the ones excluded from
/// error classification) are omitted.
pub fn curve_inputs(panel: &Panel, kind: CurveKind) -> Result<(Vec<f64>, Vec<f64>), EstimateError> {
    let options = ClassifyOptions::default();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for record in panel.in_condition(kind.condition()) {
        let label = classify_record(record, &options)
            .map_err(|e| EstimateError::BadInput(e.to_string()))?;
        if label == ErrorLabel::Excluded {
            continue;
        }
        match kind {
            CurveKind::BeliefIndividual | CurveKind::BeliefSocial => {
                let signal = match kind.condition() {
                    Condition::Individual => record.ball.ok_or_else(|| {
                        EstimateError::BadInput("individual record without ball".into())
                    })?,
                    Condition::Social => guess_signal(record.neighbor_guess.ok_or_else(|| {
                        EstimateError::BadInput("social record without neighbor guess".into())
                    })?),
                };
                xs.push(100.0 * bayes_posterior(record.structure, signal)?.prob_x());
                ys.push(100.0 * record.recovered_prob_x());
            }
            CurveKind::ChoiceIndividual | CurveKind::ChoiceSocial => {
                xs.push(100.0 * record.recovered_prob_x());
                ys.push(f64::from(u8::from(record.choice == State::X)));
            }
        }
    }
    Ok((xs, ys))
}
