use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Estimation rounds per question.
pub const ROUNDS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    /// Known answer range, used to normalize errors.
    pub scale: Option<f64>,
    /// One entry per participant of the experiment; `None` for an excluded
    /// (incomplete) record.
    pub estimates: Vec<Option<[f64; ROUNDS]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub id: String,
    pub participants: Vec<String>,
    /// In order of first appearance.
    pub questions: Vec<Question>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimationDataset {
    pub experiments: Vec<Experiment>,
}

impl EstimationDataset {
    /// Multiplies every estimate and scale by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        for q in out.experiments.iter_mut().flat_map(|e| e.questions.iter_mut()) {
            q.scale = q.scale.map(|s| s * c);
            for r in q.estimates.iter_mut().flatten() {
                for v in r.iter_mut() {
                    *v *= c;
                }
            }
        }
        out
    }

    pub fn complete_records(&self) -> usize {
        self.experiments
            .iter()
            .flat_map(|e| &e.questions)
            .map(|q| q.estimates.iter().flatten().count())
            .sum()
    }
}

#[derive(Debug, Deserialize)]
struct Record {
    experiment: String,
    participant: String,
    question: String,
    round: i64,
    estimate: Option<f64>,
    #[serde(default)]
    scale: Option<f64>,
}

fn parse_error(line: u64, column: usize, message: String) -> Error {
    Error::Parse {
        line: line as usize,
        column,
        message,
    }
}

/// Reads CSV with header `experiment,participant,question,round,estimate`
/// and an optional `scale` column. Rounds are 1-based. Records missing any
/// round are excluded with a warning.
pub fn parse_dataset<R: Read>(reader: R) -> Result<EstimationDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name).map_or(0, |c| c + 1);

    let mut experiments: Vec<Experiment> = Vec::new();
    let mut exp_index: HashMap<String, usize> = HashMap::new();
    let mut part_index: HashMap<(usize, String), usize> = HashMap::new();
    let mut q_index: HashMap<(usize, String), usize> = HashMap::new();
    let mut cells: HashMap<(usize, usize, usize), [Option<f64>; ROUNDS]> = HashMap::new();

    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let rec: Record = row.deserialize(Some(&headers))?;

        if !(1..=ROUNDS as i64).contains(&rec.round) {
            return Err(parse_error(
                line,
                column("round"),
                format!("round {} outside 1..={ROUNDS}", rec.round),
            ));
        }
        if rec.estimate.is_some_and(|v| !v.is_finite()) {
            return Err(parse_error(line, column("estimate"), "estimate is not finite".into()));
        }
        if rec.scale.is_some_and(|s| !(s > 0.0 && s.is_finite())) {
            return Err(parse_error(
                line,
                column("scale"),
                "scale must be positive and finite".into(),
            ));
        }

        let k = *exp_index.entry(rec.experiment.clone()).or_insert_with(|| {
            experiments.push(Experiment {
                id: rec.experiment.clone(),
                participants: Vec::new(),
                questions: Vec::new(),
            });
            experiments.len() - 1
        });
        let exp = &mut experiments[k];
        let i = *part_index.entry((k, rec.participant.clone())).or_insert_with(|| {
            exp.participants.push(rec.participant.clone());
            exp.participants.len() - 1
        });
        let q = *q_index.entry((k, rec.question.clone())).or_insert_with(|| {
            exp.questions.push(Question {
                id: rec.question.clone(),
                scale: None,
                estimates: Vec::new(),
            });
            exp.questions.len() - 1
        });
        if let Some(s) = rec.scale {
            match exp.questions[q].scale {
                Some(prev) if prev != s => {
                    return Err(parse_error(
                        line,
                        column("scale"),
                        format!("question {} has conflicting scales {prev} and {s}", rec.question),
                    ));
                }
                _ => exp.questions[q].scale = Some(s),
            }
        }

        let slot = &mut cells.entry((k, q, i)).or_insert([None; ROUNDS])[rec.round as usize - 1];
        if slot.is_some() {
            return Err(parse_error(
                line,
                column("round"),
                format!(
                    "duplicate estimate for experiment {}, participant {}, question {}, round {}",
                    rec.experiment, rec.participant, rec.question, rec.round
                ),
            ));
        }
        // an empty estimate marks the round as present but unusable
        *slot = Some(rec.estimate.unwrap_or(f64::NAN));
    }

    for (k, exp) in experiments.iter_mut().enumerate() {
        let n = exp.participants.len();
        for (q, question) in exp.questions.iter_mut().enumerate() {
            question.estimates = (0..n)
                .map(|i| {
                    let rounds = cells.get(&(k, q, i)).copied().unwrap_or([None; ROUNDS]);
                    let complete = rounds.iter().all(|r| r.is_some_and(f64::is_finite));
                    if complete {
                        Some(rounds.map(|r| r.unwrap_or_default()))
                    } else {
                        warn!(
                            "excluding incomplete record: experiment {}, participant {}, question {}",
                            exp.id, exp.participants[i], question.id
                        );
                        None
                    }
                })
                .collect();
        }
    }
    Ok(EstimationDataset { experiments })
}

pub fn load_dataset(path: &Path) -> Result<EstimationDataset> {
    parse_dataset(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "experiment,participant,question,round,estimate\n";

    #[test]
    fn complete_and_incomplete_records() {
        let text =
            format!("{HEADER}e1,a,q1,1,1.0\ne1,a,q1,2,2.0\ne1,a,q1,3,3.0\ne1,b,q1,1,4.0\ne1,b,q1,3,6.0\ne1,b,q2,1,\n");
        let data = parse_dataset(text.as_bytes()).unwrap();
        let e = &data.experiments[0];
        assert_eq!(e.participants, vec!["a", "b"]);
        assert_eq!(
            e.questions.iter().map(|q| q.id.as_str()).collect::<Vec<_>>(),
            vec!["q1", "q2"]
        );
        assert_eq!(e.questions[0].estimates, vec![Some([1.0, 2.0, 3.0]), None]);
        assert_eq!(e.questions[1].estimates, vec![None, None]);
        assert_eq!(data.complete_records(), 1);
    }

    #[test]
    fn optional_scale_column() {
        let text = "experiment,participant,question,round,estimate,scale\ne,a,q,1,1,10\ne,a,q,2,1,10\ne,a,q,3,1,\n";
        let data = parse_dataset(text.as_bytes()).unwrap();
        assert_eq!(data.experiments[0].questions[0].scale, Some(10.0));
    }

    #[test]
    fn bad_round_and_duplicates() {
        let bad = format!("{HEADER}e,a,q,4,1.0\n");
        assert!(matches!(
            parse_dataset(bad.as_bytes()),
            Err(Error::Parse { line: 2, column: 4, .. })
        ));
        let dup = format!("{HEADER}e,a,q,1,1.0\ne,a,q,1,2.0\n");
        assert!(matches!(
            parse_dataset(dup.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        let junk = format!("{HEADER}e,a,q,one,1.0\n");
        assert!(matches!(parse_dataset(junk.as_bytes()), Err(Error::Csv(_))));
    }

    #[test]
    fn scaling_multiplies_everything() {
        let text = format!("{HEADER}e,a,q,1,1.0\ne,a,q,2,2.0\ne,a,q,3,3.0\n");
        let data = parse_dataset(text.as_bytes()).unwrap().scaled(2.0);
        assert_eq!(data.experiments[0].questions[0].estimates[0], Some([2.0, 4.0, 6.0]));
    }
}
