//! Music emotion recognition on Russell's four quadrants.
//!
//! Clips are summarized by a fixed-length [`FeatureVector`] and classified
//! by a one-hidden-layer softmax network. Anything implementing
//! [`EmotionClassifier`] can stand in for the built-in model.

mod corpus;
mod eval;
mod features;
mod model;

pub use corpus::{
    generate_synthetic_corpus, load_manifest, quadrant_melody, quadrant_profile, write_manifest,
    ManifestKind, SyntheticCorpusEntry,
};
pub use eval::{evaluate, Evaluation};
pub use features::{extract_features, FeatureVector, FEATURE_COUNT, FEATURE_NAMES, FRAME_SIZE, HOP_SIZE};
pub use model::{
    classify, loss_and_gradient, softmax, train, train_on_features, ClassifierModel, LossPoint, Parameters,
    TrainingConfig, TrainingMetadata, HIDDEN_UNITS, MODEL_FORMAT, MODEL_VERSION,
};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::synth::{read_wav, AudioClip};
use crate::{Error, Result};

/// Probabilities must sum to one within this tolerance.
pub const PROBABILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Quadrant {
    /// High valence, high arousal: happy.
    Q1,
    /// Low valence, high arousal: angry.
    Q2,
    /// Low valence, low arousal: sad.
    Q3,
    /// High valence, low arousal: calm.
    Q4,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::Q1, Quadrant::Q2, Quadrant::Q3, Quadrant::Q4];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Quadrant> {
        Self::ALL.get(i).copied()
    }

    pub fn emotion(self) -> &'static str {
        match self {
            Quadrant::Q1 => "happy",
            Quadrant::Q2 => "angry",
            Quadrant::Q3 => "sad",
            Quadrant::Q4 => "calm",
        }
    }

    /// Signs of the quadrant on the (valence, arousal) axes.
    pub fn signs(self) -> (f64, f64) {
        match self {
            Quadrant::Q1 => (1.0, 1.0),
            Quadrant::Q2 => (-1.0, 1.0),
            Quadrant::Q3 => (-1.0, -1.0),
            Quadrant::Q4 => (1.0, -1.0),
        }
    }
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}", self.index() + 1)
    }
}

impl FromStr for Quadrant {
    type Err = Error;

    /// Accepts `Q1`..`Q4` and the emotion aliases, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "q1" | "happy" => Ok(Quadrant::Q1),
            "q2" | "angry" => Ok(Quadrant::Q2),
            "q3" | "sad" => Ok(Quadrant::Q3),
            "q4" | "calm" => Ok(Quadrant::Q4),
            other => Err(Error::InvalidTarget(format!("unknown quadrant {other:?}"))),
        }
    }
}

/// Classifier output: one probability per quadrant, in Q1..Q4 order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct QuadrantProbs([f64; 4]);

impl QuadrantProbs {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidProbabilities(format!(
                "{p:?} has negative or non-finite entries"
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(Error::InvalidProbabilities(format!("{p:?} sums to {sum}")));
        }
        Ok(QuadrantProbs(p))
    }

    pub fn uniform() -> Self {
        QuadrantProbs([0.25; 4])
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, q: Quadrant) -> f64 {
        self.0[q.index()]
    }
}

impl TryFrom<[f64; 4]> for QuadrantProbs {
    type Error = Error;

    fn try_from(p: [f64; 4]) -> Result<Self> {
        QuadrantProbs::new(p)
    }
}

impl From<QuadrantProbs> for [f64; 4] {
    fn from(p: QuadrantProbs) -> Self {
        p.0
    }
}

/// Most probable quadrant; ties go to the lower quadrant number.
pub fn predict_quadrant(probs: &QuadrantProbs) -> Quadrant {
    let p = probs.as_array();
    let mut best = 0;
    for i in 1..4 {
        if p[i] > p[best] {
            best = i;
        }
    }
    Quadrant::ALL[best]
}

/// Valence and arousal cut points used to turn continuous annotations into
/// quadrant labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelThresholds {
    pub valence: f64,
    pub arousal: f64,
}

impl Default for LabelThresholds {
    /// Midpoint of a 1..9 annotation scale.
    fn default() -> Self {
        LabelThresholds {
            valence: 5.0,
            arousal: 5.0,
        }
    }
}

/// Quadrant of a (valence, arousal) annotation. Values equal to a threshold
/// count as high.
pub fn engineer_labels(valence: f64, arousal: f64, v_threshold: f64, a_threshold: f64) -> Quadrant {
    match (valence >= v_threshold, arousal >= a_threshold) {
        (true, true) => Quadrant::Q1,
        (false, true) => Quadrant::Q2,
        (false, false) => Quadrant::Q3,
        (true, false) => Quadrant::Q4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Label {
    Quadrant(Quadrant),
    ValenceArousal { valence: f64, arousal: f64 },
}

impl Label {
    pub fn resolve(&self, thresholds: &LabelThresholds) -> Quadrant {
        match *self {
            Label::Quadrant(q) => q,
            Label::ValenceArousal { valence, arousal } => {
                engineer_labels(valence, arousal, thresholds.valence, thresholds.arousal)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClipSource {
    Memory(AudioClip),
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClip {
    pub source: ClipSource,
    pub label: Label,
}

impl LabeledClip {
    /// Loads the audio, resampling files to `sample_rate_hz`.
    pub fn load(&self, sample_rate_hz: u32) -> Result<AudioClip> {
        match &self.source {
            ClipSource::Memory(clip) => Ok(clip.clone()),
            ClipSource::Path(path) => {
                let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
                read_wav(&bytes, Some(sample_rate_hz))
            }
        }
    }
}

/// Maps audio to quadrant probabilities.
pub trait EmotionClassifier: Send + Sync {
    fn classify_clip(&self, clip: &AudioClip) -> Result<QuadrantProbs>;
}

impl EmotionClassifier for ClassifierModel {
    fn classify_clip(&self, clip: &AudioClip) -> Result<QuadrantProbs> {
        classify(self, &extract_features(clip)?)
    }
}
