//! One-hidden-layer softmax classifier trained with minibatch SGD.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{extract_features, FeatureVector, FEATURE_COUNT};
use super::{LabelThresholds, LabeledClip, Quadrant, QuadrantProbs};
use crate::synth::DEFAULT_SAMPLE_RATE;
use crate::{Error, Result};

pub const HIDDEN_UNITS: usize = 32;
pub const CLASSES: usize = 4;
pub const MODEL_FORMAT: &str = "emoshift-classifier";
pub const MODEL_VERSION: u32 = 1;

const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub validation_fraction: f64,
    pub thresholds: LabelThresholds,
    pub sample_rate_hz: u32,
}

impl Default for TrainingConfig {
    /// 10 epochs of batch-8 SGD. The step size is sized for this small
    /// feature model; see [`TrainingConfig::reference`].
    fn default() -> Self {
        TrainingConfig {
            epochs: 10,
            batch_size: 8,
            learning_rate: 0.1,
            seed: 0,
            validation_fraction: 0.2,
            thresholds: LabelThresholds::default(),
            sample_rate_hz: DEFAULT_SAMPLE_RATE,
        }
    }
}

impl TrainingConfig {
    /// The defaults with a 1e-4 learning rate, the value used when
    /// fine-tuning large pretrained audio backbones. Far too small to move
    /// this model in 10 epochs.
    pub fn reference() -> Self {
        TrainingConfig {
            learning_rate: 1e-4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig(
                "epochs and batch size must be positive".into(),
            ));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "learning rate {} must be finite and >= 0",
                self.learning_rate
            )));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "validation fraction {} outside (0, 1)",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

/// Network weights. Matrices are row-major: `w1` is hidden x features,
/// `w2` is classes x hidden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameters {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Parameters {
    pub fn zeros(features: usize) -> Self {
        Parameters {
            w1: vec![0.0; HIDDEN_UNITS * features],
            b1: vec![0.0; HIDDEN_UNITS],
            w2: vec![0.0; CLASSES * HIDDEN_UNITS],
            b2: vec![0.0; CLASSES],
        }
    }

    fn xavier(features: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(features);
        let a1 = (6.0 / (features + HIDDEN_UNITS) as f64).sqrt();
        p.w1.iter_mut().for_each(|w| *w = rng.gen_range(-a1..a1));
        let a2 = (6.0 / (HIDDEN_UNITS + CLASSES) as f64).sqrt();
        p.w2.iter_mut().for_each(|w| *w = rng.gen_range(-a2..a2));
        p
    }

    pub fn features(&self) -> usize {
        self.w1.len() / HIDDEN_UNITS
    }

    /// All parameters in a fixed order: w1, b1, w2, b2.
    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2)
    }

    fn axpy(&mut self, alpha: f64, other: &Parameters) {
        for (p, g) in self.iter_mut().zip(other.iter()) {
            *p += alpha * g;
        }
    }

    fn hidden(&self, z: &[f64]) -> Vec<f64> {
        let n = z.len();
        (0..HIDDEN_UNITS)
            .map(|j| {
                let row = &self.w1[j * n..(j + 1) * n];
                (self.b1[j] + row.iter().zip(z).map(|(w, x)| w * x).sum::<f64>()).tanh()
            })
            .collect()
    }

    fn logits(&self, h: &[f64]) -> [f64; CLASSES] {
        std::array::from_fn(|c| {
            let row = &self.w2[c * HIDDEN_UNITS..(c + 1) * HIDDEN_UNITS];
            self.b2[c] + row.iter().zip(h).map(|(w, x)| w * x).sum::<f64>()
        })
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64; CLASSES]) -> [f64; CLASSES] {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: [f64; CLASSES] = std::array::from_fn(|i| (logits[i] - max).exp());
    let sum: f64 = exps.iter().sum();
    exps.map(|e| e / sum)
}

/// Mean cross-entropy over a batch of already-normalized inputs and its
/// gradient with respect to every parameter.
pub fn loss_and_gradient(params: &Parameters, inputs: &[Vec<f64>], labels: &[Quadrant]) -> (f64, Parameters) {
    let n = params.features();
    let mut grad = Parameters::zeros(n);
    let batch = inputs.len() as f64;
    let mut loss = 0.0;
    for (z, label) in inputs.iter().zip(labels) {
        let h = params.hidden(z);
        let p = softmax(&params.logits(&h));
        let y = label.index();
        loss -= p[y].max(f64::MIN_POSITIVE).ln();

        let dlogits: [f64; CLASSES] =
            std::array::from_fn(|c| (p[c] - if c == y { 1.0 } else { 0.0 }) / batch);
        let mut dh = [0.0; HIDDEN_UNITS];
        for c in 0..CLASSES {
            grad.b2[c] += dlogits[c];
            for j in 0..HIDDEN_UNITS {
                grad.w2[c * HIDDEN_UNITS + j] += dlogits[c] * h[j];
                dh[j] += dlogits[c] * params.w2[c * HIDDEN_UNITS + j];
            }
        }
        for j in 0..HIDDEN_UNITS {
            let dpre = dh[j] * (1.0 - h[j] * h[j]);
            grad.b1[j] += dpre;
            for (g, x) in grad.w1[j * n..(j + 1) * n].iter_mut().zip(z) {
                *g += dpre * x;
            }
        }
    }
    (loss / batch, grad)
}

/// One point of the loss curve. Step 0 is the untrained model; the
/// validation loss is filled in at step 0 and after every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub step: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub config: TrainingConfig,
    pub train_size: usize,
    pub validation_size: usize,
    pub train_accuracy: f64,
    pub validation_accuracy: f64,
    pub loss_curve: Vec<LossPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Normalization {
    mean: Vec<f64>,
    std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierModel {
    format: String,
    version: u32,
    hidden_units: usize,
    normalization: Normalization,
    parameters: Parameters,
    training: Option<TrainingMetadata>,
}

impl ClassifierModel {
    /// A model with identity normalization and the given weights.
    pub fn from_parameters(parameters: Parameters) -> Result<Self> {
        let n = parameters.features();
        let model = ClassifierModel {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            hidden_units: HIDDEN_UNITS,
            normalization: Normalization {
                mean: vec![0.0; n],
                std: vec![1.0; n],
            },
            parameters,
            training: None,
        };
        model.validate()?;
        Ok(model)
    }

    /// All weights zero: predicts the uniform distribution.
    pub fn zeros() -> Self {
        Self::from_parameters(Parameters::zeros(FEATURE_COUNT)).expect("zero model is valid")
    }

    pub fn parameters(&self) -> &Parameters {
        &self.parameters
    }

    pub fn training(&self) -> Option<&TrainingMetadata> {
        self.training.as_ref()
    }

    pub fn feature_count(&self) -> usize {
        self.normalization.mean.len()
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ModelFormat(m));
        if self.format != MODEL_FORMAT {
            return bad(format!("unexpected format tag {:?}", self.format));
        }
        if self.version != MODEL_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        if self.hidden_units != HIDDEN_UNITS {
            return bad(format!("hidden width {} != {HIDDEN_UNITS}", self.hidden_units));
        }
        let n = self.normalization.mean.len();
        let p = &self.parameters;
        if self.normalization.std.len() != n
            || p.w1.len() != HIDDEN_UNITS * n
            || p.b1.len() != HIDDEN_UNITS
            || p.w2.len() != CLASSES * HIDDEN_UNITS
            || p.b2.len() != CLASSES
        {
            return bad("parameter shapes are inconsistent".into());
        }
        if p.iter().chain(&self.normalization.mean).any(|v| !v.is_finite()) {
            return bad("non-finite parameter".into());
        }
        if self.normalization.std.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return bad("normalization std must be positive".into());
        }
        Ok(())
    }

    fn normalize(&self, features: &[f64]) -> Vec<f64> {
        features
            .iter()
            .zip(&self.normalization.mean)
            .zip(&self.normalization.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }

    pub fn logits(&self, features: &FeatureVector) -> Result<[f64; CLASSES]> {
        if features.0.len() != self.feature_count() {
            return Err(Error::InvalidConfig(format!(
                "model expects {} features, got {}",
                self.feature_count(),
                features.0.len()
            )));
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("classifier input features".into()));
        }
        let z = self.normalize(&features.0);
        Ok(self.parameters.logits(&self.parameters.hidden(&z)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: ClassifierModel =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Loss curve as CSV: `step,train_loss,val_loss`, validation blank
    /// between epochs.
    pub fn loss_curve_csv(&self) -> String {
        let mut out = String::from("step,train_loss,val_loss\n");
        for point in self.training.iter().flat_map(|t| &t.loss_curve) {
            let val = point.val_loss.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", point.step, point.train_loss, val));
        }
        out
    }
}

/// Softmax probabilities for one feature vector.
pub fn classify(model: &ClassifierModel, features: &FeatureVector) -> Result<QuadrantProbs> {
    QuadrantProbs::new(softmax(&model.logits(features)?))
}

/// Extracts features from every clip and trains on them.
pub fn train(corpus: &[LabeledClip], config: &TrainingConfig) -> Result<ClassifierModel> {
    config.validate()?;
    let mut features = Vec::with_capacity(corpus.len());
    let mut labels = Vec::with_capacity(corpus.len());
    for item in corpus {
        features.push(extract_features(&item.load(config.sample_rate_hz)?)?);
        labels.push(item.label.resolve(&config.thresholds));
    }
    train_on_features(&features, &labels, config)
}

fn accuracy(params: &Parameters, inputs: &[Vec<f64>], labels: &[Quadrant]) -> f64 {
    if inputs.is_empty() {
        return 0.0;
    }
    let hits = inputs
        .iter()
        .zip(labels)
        .filter(|(z, y)| {
            let p = softmax(&params.logits(&params.hidden(z)));
            let mut best = 0;
            for c in 1..CLASSES {
                if p[c] > p[best] {
                    best = c;
                }
            }
            best == y.index()
        })
        .count();
    hits as f64 / inputs.len() as f64
}

/// Minibatch gradient descent on mean cross-entropy.
///
/// A seeded shuffle splits off the validation set; normalization statistics
/// come from the training split alone. Each epoch reshuffles the training
/// split with the same generator. The recorded training loss is the full
/// training-split loss after every step.
pub fn train_on_features(
    features: &[FeatureVector],
    labels: &[Quadrant],
    config: &TrainingConfig,
) -> Result<ClassifierModel> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(Error::InvalidConfig("feature and label counts differ".into()));
    }
    if features.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if features.len() < 2 * config.batch_size {
        return Err(Error::DegenerateCorpus(format!(
            "{} clips, at least twice the batch size ({}) required",
            features.len(),
            2 * config.batch_size
        )));
    }
    let n_features = features[0].0.len();
    if features.iter().any(|f| f.0.len() != n_features || !f.is_finite()) {
        return Err(Error::NonFinite("training features".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..features.len()).collect();
    order.shuffle(&mut rng);
    let n_val =
        ((features.len() as f64 * config.validation_fraction).round() as usize).clamp(1, features.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);

    let mut classes = [false; CLASSES];
    train_idx.iter().for_each(|&i| classes[labels[i].index()] = true);
    if classes.iter().filter(|&&c| c).count() < 2 {
        return Err(Error::DegenerateCorpus(
            "training split holds fewer than two classes".into(),
        ));
    }

    let mut mean = vec![0.0; n_features];
    let mut std = vec![0.0; n_features];
    for &i in train_idx {
        for (m, x) in mean.iter_mut().zip(&features[i].0) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= train_idx.len() as f64);
    for &i in train_idx {
        for ((s, x), m) in std.iter_mut().zip(&features[i].0).zip(&mean) {
            *s += (x - m).powi(2);
        }
    }
    std.iter_mut().for_each(|s| {
        *s = (*s / train_idx.len() as f64).sqrt();
        if *s < MIN_STD {
            *s = 1.0;
        }
    });
    let normalization = Normalization { mean, std };
    let normalize = |i: usize| -> Vec<f64> {
        features[i]
            .0
            .iter()
            .zip(&normalization.mean)
            .zip(&normalization.std)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    };
    let train_x: Vec<Vec<f64>> = train_idx.iter().map(|&i| normalize(i)).collect();
    let train_y: Vec<Quadrant> = train_idx.iter().map(|&i| labels[i]).collect();
    let val_x: Vec<Vec<f64>> = val_idx.iter().map(|&i| normalize(i)).collect();
    let val_y: Vec<Quadrant> = val_idx.iter().map(|&i| labels[i]).collect();

    let mut params = Parameters::xavier(n_features, &mut rng);
    let full_loss = |p: &Parameters, x: &[Vec<f64>], y: &[Quadrant]| loss_and_gradient(p, x, y).0;

    let mut curve = vec![LossPoint {
        step: 0,
        epoch: 0,
        train_loss: full_loss(&params, &train_x, &train_y),
        val_loss: Some(full_loss(&params, &val_x, &val_y)),
    }];
    let mut positions: Vec<usize> = (0..train_x.len()).collect();
    let mut step = 0;
    for epoch in 1..=config.epochs {
        positions.shuffle(&mut rng);
        let batches: Vec<&[usize]> = positions.chunks(config.batch_size).collect();
        for (b, batch) in batches.iter().enumerate() {
            let bx: Vec<Vec<f64>> = batch.iter().map(|&i| train_x[i].clone()).collect();
            let by: Vec<Quadrant> = batch.iter().map(|&i| train_y[i]).collect();
            let (batch_loss, grad) = loss_and_gradient(&params, &bx, &by);
            step += 1;
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    step,
                    loss: batch_loss,
                });
            }
            params.axpy(-config.learning_rate, &grad);
            let train_loss = full_loss(&params, &train_x, &train_y);
            if !train_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    step,
                    loss: train_loss,
                });
            }
            let val_loss = (b + 1 == batches.len()).then(|| full_loss(&params, &val_x, &val_y));
            curve.push(LossPoint {
                step,
                epoch,
                train_loss,
                val_loss,
            });
        }
    }

    let metadata = TrainingMetadata {
        config: config.clone(),
        train_size: train_x.len(),
        validation_size: val_x.len(),
        train_accuracy: accuracy(&params, &train_x, &train_y),
        validation_accuracy: accuracy(&params, &val_x, &val_y),
        loss_curve: curve,
    };
    let model = ClassifierModel {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        hidden_units: HIDDEN_UNITS,
        normalization,
        parameters: params,
        training: Some(metadata),
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(n: usize, seed: u64) -> (Vec<FeatureVector>, Vec<Quadrant>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let q = if i % 2 == 0 { Quadrant::Q1 } else { Quadrant::Q3 };
            let shift = if q == Quadrant::Q1 { 2.0 } else { -2.0 };
            let v: Vec<f64> = (0..FEATURE_COUNT)
                .map(|k| rng.gen_range(-1.0..1.0) + if k < 3 { shift } else { 0.0 })
                .collect();
            xs.push(FeatureVector(v));
            ys.push(q);
        }
        (xs, ys)
    }

    #[test]
    fn zero_model_is_uniform() {
        let p = classify(
            &ClassifierModel::zeros(),
            &FeatureVector(vec![3.0; FEATURE_COUNT]),
        )
        .unwrap();
        assert_eq!(p.as_array(), [0.25; 4]);
    }

    #[test]
    fn softmax_limit() {
        for l in [10.0, 100.0, 1000.0, 1e300] {
            let p = softmax(&[l, 0.0, 0.0, 0.0]);
            assert!(p[0] >= 1.0 - 3.0 * (-l).exp() - 1e-15);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(softmax(&[1e308, 0.0, 0.0, 0.0])[0], 1.0);
    }

    #[test]
    fn rejects_non_finite_features() {
        let mut v = vec![0.0; FEATURE_COUNT];
        v[4] = f64::NAN;
        assert!(matches!(
            classify(&ClassifierModel::zeros(), &FeatureVector(v)),
            Err(Error::NonFinite(_))
        ));
        assert!(classify(&ClassifierModel::zeros(), &FeatureVector(vec![0.0; 3])).is_err());
    }

    #[test]
    fn separable_blobs_train_well() {
        let (xs, ys) = blobs(100, 1);
        let model = train_on_features(&xs, &ys, &TrainingConfig::default()).unwrap();
        let meta = model.training().unwrap();
        assert!(meta.train_accuracy >= 0.95, "{}", meta.train_accuracy);
        let curve = &meta.loss_curve;
        assert_eq!(curve.len(), 1 + 10 * 80usize.div_ceil(8));
        assert!(curve.last().unwrap().train_loss < curve[0].train_loss / 2.0);
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let (xs, ys) = blobs(40, 2);
        let cfg = TrainingConfig {
            learning_rate: 0.0,
            ..TrainingConfig::default()
        };
        let model = train_on_features(&xs, &ys, &cfg).unwrap();
        let curve = &model.training().unwrap().loss_curve;
        assert!(curve.iter().all(|p| p.train_loss == curve[0].train_loss));
        // Same initial draw as an untrained run with the same seed.
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.shuffle(&mut rng);
        assert_eq!(model.parameters(), &Parameters::xavier(FEATURE_COUNT, &mut rng));
    }

    #[test]
    fn deterministic_under_seed() {
        let (xs, ys) = blobs(60, 3);
        let cfg = TrainingConfig {
            seed: 42,
            ..TrainingConfig::default()
        };
        let a = train_on_features(&xs, &ys, &cfg).unwrap();
        let b = train_on_features(&xs, &ys, &cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = train_on_features(&xs, &ys, &TrainingConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.parameters(), c.parameters());
    }

    #[test]
    fn degenerate_corpora() {
        let (xs, _) = blobs(40, 4);
        let single = vec![Quadrant::Q2; 40];
        assert!(matches!(
            train_on_features(&xs, &single, &TrainingConfig::default()),
            Err(Error::DegenerateCorpus(_))
        ));
        let (few, fy) = blobs(10, 4);
        assert!(matches!(
            train_on_features(&few, &fy, &TrainingConfig::default()),
            Err(Error::DegenerateCorpus(_))
        ));
        assert!(matches!(
            train_on_features(&[], &[], &TrainingConfig::default()),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let (xs, ys) = blobs(40, 5);
        let cfg = TrainingConfig {
            learning_rate: 1e308,
            ..TrainingConfig::default()
        };
        assert!(matches!(
            train_on_features(&xs, &ys, &cfg),
            Err(Error::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (xs, ys) = blobs(40, 6);
        let model = train_on_features(&xs, &ys, &TrainingConfig::default()).unwrap();
        let back = ClassifierModel::from_json(&model.to_json()).unwrap();
        assert_eq!(back, model);
        let tampered = model.to_json().replace(MODEL_FORMAT, "something-else");
        assert!(matches!(
            ClassifierModel::from_json(&tampered),
            Err(Error::ModelFormat(_))
        ));
        assert!(ClassifierModel::from_json("{}").is_err());
        let csv = model.loss_curve_csv();
        assert!(csv.starts_with("step,train_loss,val_loss\n0,"));
        assert_eq!(
            csv.lines().count(),
            2 + model.training().unwrap().loss_curve.len() - 1
        );
    }

    #[test]
    fn config_validation() {
        assert!(TrainingConfig {
            epochs: 0,
            ..TrainingConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainingConfig {
            validation_fraction: 1.0,
            ..TrainingConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainingConfig {
            learning_rate: -1.0,
            ..TrainingConfig::default()
        }
        .validate()
        .is_err());
        assert_eq!(TrainingConfig::reference().learning_rate, 1e-4);
    }
}
