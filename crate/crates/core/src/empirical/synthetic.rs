use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{EstimationDataset, Experiment, Question, ROUNDS};
use super::Aggregator;
use crate::error::{Error, Result};

/// Generator for data that follows the inertia model exactly, up to
/// additive Gaussian noise on rounds 2 and 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub experiments: usize,
    pub participants: usize,
    pub questions: usize,
    /// Inertia shared by every participant and transition.
    pub gamma: f64,
    pub noise_sd: f64,
    pub aggregator: Aggregator,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            experiments: 4,
            participants: 6,
            questions: 30,
            gamma: 0.3,
            noise_sd: 0.0,
            aggregator: Aggregator::Median,
            seed: 0,
        }
    }
}

/// First-round estimates are uniform on `[0, 1)`; each later round is
/// `γ·x_i + (1 − γ)·A(x) + noise`, with `A` taken over all participants.
pub fn synthetic_dataset(cfg: &SyntheticConfig) -> Result<EstimationDataset> {
    if !(0.0..=1.0).contains(&cfg.gamma) {
        return Err(Error::ConfigInvalid(format!("gamma {} outside [0, 1]", cfg.gamma)));
    }
    if cfg.participants == 0 || cfg.questions == 0 {
        return Err(Error::ConfigInvalid(
            "need at least one participant and one question".into(),
        ));
    }
    if !(cfg.noise_sd >= 0.0 && cfg.noise_sd.is_finite()) {
        return Err(Error::ConfigInvalid(format!(
            "noise_sd {} must be finite and non-negative",
            cfg.noise_sd
        )));
    }
    let noise = Normal::new(0.0, cfg.noise_sd).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut buf = Vec::with_capacity(cfg.participants);

    let experiments = (0..cfg.experiments)
        .map(|k| {
            let questions = (0..cfg.questions)
                .map(|q| {
                    let mut rounds = vec![[0.0; ROUNDS]; cfg.participants];
                    for r in rounds.iter_mut() {
                        r[0] = rng.random::<f64>();
                    }
                    for t in 1..ROUNDS {
                        buf.clear();
                        buf.extend(rounds.iter().map(|r| r[t - 1]));
                        let agg = cfg.aggregator.apply(&mut buf);
                        for r in rounds.iter_mut() {
                            let eps = if cfg.noise_sd > 0.0 {
                                noise.sample(&mut rng)
                            } else {
                                0.0
                            };
                            r[t] = cfg.gamma * r[t - 1] + (1.0 - cfg.gamma) * agg + eps;
                        }
                    }
                    Question {
                        id: format!("q{}", q + 1),
                        scale: None,
                        estimates: rounds.into_iter().map(Some).collect(),
                    }
                })
                .collect();
            Experiment {
                id: format!("e{}", k + 1),
                participants: (0..cfg.participants).map(|i| format!("p{}", i + 1)).collect(),
                questions,
            }
        })
        .collect();
    Ok(EstimationDataset { experiments })
}
