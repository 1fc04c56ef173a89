//! Inertia-model fitting and scoring on round-structured estimation data.
//!
//! Each participant answers every question in three rounds. The inertia
//! model predicts the next round as `γ·x_i(t) + (1 − γ)·A(x(t))`, where `A`
//! is the unweighted median or average of the group's current estimates and
//! `γ` is fitted per participant and per transition.

mod dataset;
mod synthetic;
mod wilcoxon;

use std::ops::Range;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use dataset::{load_dataset, parse_dataset, EstimationDataset, Experiment, Question, ROUNDS};
pub use synthetic::{synthetic_dataset, SyntheticConfig};
pub use wilcoxon::{average_ranks, wilcoxon_signed_rank, WilcoxonResult, EXACT_MAX_PAIRS};

/// Round-to-round transitions (1→2 and 2→3).
pub const TRANSITIONS: usize = ROUNDS - 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    /// Middle value; the mean of the two middle values for an even count.
    #[default]
    Median,
    Average,
}

impl Aggregator {
    /// Aggregate of `values`, which must be non-empty.
    pub fn apply(self, values: &mut [f64]) -> f64 {
        debug_assert!(!values.is_empty());
        match self {
            Aggregator::Average => values.iter().sum::<f64>() / values.len() as f64,
            Aggregator::Median => {
                values.sort_unstable_by(f64::total_cmp);
                let m = values.len() / 2;
                if values.len() % 2 == 1 {
                    values[m]
                } else {
                    0.5 * (values[m - 1] + values[m])
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitOptions {
    pub aggregator: Aggregator,
    /// Number of leading questions used for fitting.
    pub train_count: usize,
    /// Whether the group aggregate seen by a participant includes their own estimate.
    pub include_self: bool,
}

impl FitOptions {
    pub fn new(aggregator: Aggregator, train_count: usize) -> Self {
        Self {
            aggregator,
            train_count,
            include_self: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticipantFit {
    pub participant: String,
    /// One coefficient per transition, each in `[0, 1]`.
    pub gamma: [f64; TRANSITIONS],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentFit {
    pub experiment: String,
    /// Parallel to the experiment's participant list.
    pub participants: Vec<ParticipantFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub options: FitOptions,
    pub experiments: Vec<ExperimentFit>,
    /// Sum of squared prediction errors over the training questions.
    pub training_sse: f64,
}

impl FitResult {
    /// The no-inertia baseline: every coefficient forced to zero.
    pub fn zero_inertia(data: &EstimationDataset, options: FitOptions) -> Self {
        let experiments = data
            .experiments
            .iter()
            .map(|e| ExperimentFit {
                experiment: e.id.clone(),
                participants: e
                    .participants
                    .iter()
                    .map(|p| ParticipantFit {
                        participant: p.clone(),
                        gamma: [0.0; TRANSITIONS],
                    })
                    .collect(),
            })
            .collect();
        let mut fit = Self {
            options,
            experiments,
            training_sse: 0.0,
        };
        fit.training_sse = training_sse(data, &fit);
        fit
    }

    pub fn gamma(&self, experiment: usize, participant: usize, transition: usize) -> f64 {
        self.experiments[experiment].participants[participant].gamma[transition]
    }
}

/// Group aggregate of round `round` of question `q` as seen by participant
/// `i`, or `None` when no eligible estimate exists.
fn group_aggregate(q: &Question, i: usize, round: usize, options: &FitOptions, buf: &mut Vec<f64>) -> Option<f64> {
    buf.clear();
    buf.extend(
        q.estimates
            .iter()
            .enumerate()
            .filter(|&(j, _)| options.include_self || j != i)
            .filter_map(|(_, e)| e.map(|r| r[round])),
    );
    (!buf.is_empty()).then(|| options.aggregator.apply(buf))
}

/// Deviation pairs `(a, b)` of participant `i` at `transition` for question `q`:
/// `a = x_i(t) − A(x(t))`, `b = x_i(t+1) − A(x(t))`.
fn deviations(
    q: &Question,
    i: usize,
    transition: usize,
    options: &FitOptions,
    buf: &mut Vec<f64>,
) -> Option<(f64, f64)> {
    let own = q.estimates[i]?;
    let agg = group_aggregate(q, i, transition, options, buf)?;
    Some((own[transition] - agg, own[transition + 1] - agg))
}

/// Least-squares `γ = Σab / Σa²` clipped to `[0, 1]`; zero when `Σa² = 0`.
pub fn least_squares_gamma(pairs: &[(f64, f64)]) -> f64 {
    let saa: f64 = pairs.iter().map(|(a, _)| a * a).sum();
    let sab: f64 = pairs.iter().map(|(a, b)| a * b).sum();
    if saa == 0.0 {
        return 0.0;
    }
    (sab / saa).clamp(0.0, 1.0)
}

fn check_train_count(data: &EstimationDataset, train_count: usize) -> Result<()> {
    if train_count == 0 {
        return Err(Error::InsufficientData("train_count must be at least 1".into()));
    }
    for e in &data.experiments {
        if train_count > e.questions.len() {
            return Err(Error::InsufficientData(format!(
                "experiment {} has {} questions, fewer than train_count {}",
                e.id,
                e.questions.len(),
                train_count
            )));
        }
    }
    Ok(())
}

/// Fits one inertia coefficient per participant and transition on the first
/// `train_count` questions of every experiment.
pub fn fit_inertia(data: &EstimationDataset, options: FitOptions) -> Result<FitResult> {
    if data.experiments.is_empty() {
        return Err(Error::InsufficientData("dataset has no experiments".into()));
    }
    check_train_count(data, options.train_count)?;

    let experiments = data
        .experiments
        .par_iter()
        .map(|e| {
            let mut buf = Vec::new();
            let participants = e
                .participants
                .iter()
                .enumerate()
                .map(|(i, pid)| {
                    let mut gamma = [0.0; TRANSITIONS];
                    for (t, g) in gamma.iter_mut().enumerate() {
                        let pairs: Vec<(f64, f64)> = e.questions[..options.train_count]
                            .iter()
                            .filter_map(|q| deviations(q, i, t, &options, &mut buf))
                            .collect();
                        if pairs.iter().all(|(a, _)| *a == 0.0) && pairs.iter().any(|(_, b)| *b != 0.0) {
                            warn!(
                                "experiment {} participant {} transition {}: no deviation from the group, gamma set to 0",
                                e.id,
                                pid,
                                t + 1
                            );
                        }
                        *g = least_squares_gamma(&pairs);
                    }
                    ParticipantFit { participant: pid.clone(), gamma }
                })
                .collect();
            ExperimentFit { experiment: e.id.clone(), participants }
        })
        .collect();

    let mut fit = FitResult {
        options,
        experiments,
        training_sse: 0.0,
    };
    fit.training_sse = training_sse(data, &fit);
    Ok(fit)
}

/// Sum of squared one-step errors of `fit` over the training questions.
pub fn training_sse(data: &EstimationDataset, fit: &FitResult) -> f64 {
    let options = &fit.options;
    let mut buf = Vec::new();
    let mut sse = 0.0;
    for (k, e) in data.experiments.iter().enumerate() {
        for q in e.questions.iter().take(options.train_count) {
            for i in 0..e.participants.len() {
                for t in 0..TRANSITIONS {
                    if let Some((a, b)) = deviations(q, i, t, options, &mut buf) {
                        sse += (b - fit.gamma(k, i, t) * a).powi(2);
                    }
                }
            }
        }
    }
    sse
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub experiment: String,
    pub participant: String,
    pub question: String,
    /// 1 for the 1→2 transition, 2 for 2→3.
    pub transition: usize,
    pub predicted: f64,
    pub actual: f64,
    /// `|predicted − actual|`.
    pub raw_error: f64,
    /// Raw error divided by the question's answer range, or the raw error
    /// when no range is known.
    pub scaled_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub count: usize,
    pub mean_raw: f64,
    pub median_raw: f64,
    pub mean_scaled: f64,
    pub median_scaled: f64,
}

impl ErrorSummary {
    pub fn of(predictions: &[Prediction]) -> Self {
        let stats = |f: fn(&Prediction) -> f64| {
            let mut v: Vec<f64> = predictions.iter().map(f).collect();
            if v.is_empty() {
                return (f64::NAN, f64::NAN);
            }
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            (mean, Aggregator::Median.apply(&mut v))
        };
        let (mean_raw, median_raw) = stats(|p| p.raw_error);
        let (mean_scaled, median_scaled) = stats(|p| p.scaled_error);
        Self {
            count: predictions.len(),
            mean_raw,
            median_raw,
            mean_scaled,
            median_scaled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub predictions: Vec<Prediction>,
    pub summary: ErrorSummary,
}

impl Score {
    pub fn raw_errors(&self) -> Vec<f64> {
        self.predictions.iter().map(|p| p.raw_error).collect()
    }

    pub fn scaled_errors(&self) -> Vec<f64> {
        self.predictions.iter().map(|p| p.scaled_error).collect()
    }
}

/// Predicts every complete record of the `holdout` questions from the
/// actual previous round and scores the predictions.
pub fn predict_and_score(data: &EstimationDataset, fit: &FitResult, holdout: Range<usize>) -> Result<Score> {
    let options = &fit.options;
    if holdout.start < options.train_count {
        return Err(Error::ConfigInvalid(format!(
            "holdout {holdout:?} overlaps the {} training questions",
            options.train_count
        )));
    }
    if fit.experiments.len() != data.experiments.len() {
        return Err(Error::DimensionMismatch {
            expected: data.experiments.len(),
            got: fit.experiments.len(),
        });
    }
    let mut predictions = Vec::new();
    let mut buf = Vec::new();
    for (k, e) in data.experiments.iter().enumerate() {
        if fit.experiments[k].participants.len() != e.participants.len() {
            return Err(Error::DimensionMismatch {
                expected: e.participants.len(),
                got: fit.experiments[k].participants.len(),
            });
        }
        if holdout.end > e.questions.len() {
            return Err(Error::MissingRound(format!(
                "experiment {} has {} questions; holdout ends at {}",
                e.id,
                e.questions.len(),
                holdout.end
            )));
        }
        for q in &e.questions[holdout.clone()] {
            for (i, pid) in e.participants.iter().enumerate() {
                let Some(own) = q.estimates[i] else { continue };
                for t in 0..TRANSITIONS {
                    let agg = group_aggregate(q, i, t, options, &mut buf).ok_or_else(|| {
                        Error::MissingRound(format!("question {} has no group estimate in round {}", q.id, t + 1))
                    })?;
                    let g = fit.gamma(k, i, t);
                    let predicted = g * own[t] + (1.0 - g) * agg;
                    let actual = own[t + 1];
                    let raw_error = (predicted - actual).abs();
                    let scaled_error = q.scale.map_or(raw_error, |s| raw_error / s);
                    predictions.push(Prediction {
                        experiment: e.id.clone(),
                        participant: pid.clone(),
                        question: q.id.clone(),
                        transition: t + 1,
                        predicted,
                        actual,
                        raw_error,
                        scaled_error,
                    });
                }
            }
        }
    }
    let summary = ErrorSummary::of(&predictions);
    Ok(Score { predictions, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub aggregator: Aggregator,
    pub inertia: bool,
    pub summary: ErrorSummary,
    pub raw_errors: Vec<f64>,
    pub scaled_errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InertiaTest {
    pub aggregator: Aggregator,
    /// Signed-rank test of baseline raw errors against inertia-model raw errors.
    pub wilcoxon: Option<WilcoxonResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub train_count: usize,
    pub holdout: Range<usize>,
    pub include_self: bool,
    pub fits: Vec<FitResult>,
    pub models: Vec<ModelScore>,
    pub tests: Vec<InertiaTest>,
}

/// Fits and scores the median and average models with and without inertia
/// and tests whether inertia lowers the held-out error.
pub fn compare_models(
    data: &EstimationDataset,
    train_count: usize,
    holdout: Range<usize>,
    include_self: bool,
) -> Result<ComparisonReport> {
    let mut fits = Vec::new();
    let mut models = Vec::new();
    let mut tests = Vec::new();
    for aggregator in [Aggregator::Median, Aggregator::Average] {
        let options = FitOptions {
            aggregator,
            train_count,
            include_self,
        };
        let fit = fit_inertia(data, options)?;
        let with = predict_and_score(data, &fit, holdout.clone())?;
        let without = predict_and_score(data, &FitResult::zero_inertia(data, options), holdout.clone())?;
        let wilcoxon = match wilcoxon_signed_rank(&without.raw_errors(), &with.raw_errors()) {
            Ok(r) => Some(r),
            Err(Error::AllZeroDifferences) => None,
            Err(e) => return Err(e),
        };
        tests.push(InertiaTest { aggregator, wilcoxon });
        for (inertia, score) in [(true, with), (false, without)] {
            models.push(ModelScore {
                aggregator,
                inertia,
                summary: score.summary,
                raw_errors: score.raw_errors(),
                scaled_errors: score.scaled_errors(),
            });
        }
        fits.push(fit);
    }
    Ok(ComparisonReport {
        train_count,
        holdout,
        include_self,
        fits,
        models,
        tests,
    })
}
