use serde::{Deserialize, Serialize};

use super::{predict_quadrant, EmotionClassifier, LabelThresholds, LabeledClip, Quadrant};
use crate::{Error, Result};

/// Accuracy and confusion counts; rows are true labels, columns predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub confusion: [[usize; 4]; 4],
}

impl Evaluation {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Quadrant, Quadrant)>) -> Result<Self> {
        let mut confusion = [[0usize; 4]; 4];
        for (truth, predicted) in pairs {
            confusion[truth.index()][predicted.index()] += 1;
        }
        let total: usize = confusion.iter().flatten().sum();
        if total == 0 {
            return Err(Error::EmptyCorpus);
        }
        let correct: usize = (0..4).map(|i| confusion[i][i]).sum();
        Ok(Evaluation {
            total,
            correct,
            accuracy: correct as f64 / total as f64,
            confusion,
        })
    }

    /// Human-readable accuracy line plus confusion matrix.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "Accuracy: {:.1}% ({}/{})\n\ntrue\\pred      Q1     Q2     Q3     Q4\n",
            100.0 * self.accuracy,
            self.correct,
            self.total
        );
        for q in Quadrant::ALL {
            out.push_str(&format!(
                "{:<2} {:<8}",
                q.to_string(),
                format!("({})", q.emotion())
            ));
            for count in self.confusion[q.index()] {
                out.push_str(&format!(" {count:>6}"));
            }
            out.push('\n');
        }
        out
    }

    /// `true,Q1,Q2,Q3,Q4` rows followed by an accuracy row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true,Q1,Q2,Q3,Q4\n");
        for q in Quadrant::ALL {
            let row = self.confusion[q.index()];
            out.push_str(&format!("{q},{},{},{},{}\n", row[0], row[1], row[2], row[3]));
        }
        out.push_str(&format!("accuracy,{},,,\n", self.accuracy));
        out
    }
}

/// Classifies every clip and tallies predictions against resolved labels.
pub fn evaluate<C: EmotionClassifier + ?Sized>(
    classifier: &C,
    corpus: &[LabeledClip],
    thresholds: &LabelThresholds,
    sample_rate_hz: u32,
) -> Result<Evaluation> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut pairs = Vec::with_capacity(corpus.len());
    for item in corpus {
        let probs = classifier.classify_clip(&item.load(sample_rate_hz)?)?;
        pairs.push((item.label.resolve(thresholds), predict_quadrant(&probs)));
    }
    Evaluation::from_pairs(pairs)
}
