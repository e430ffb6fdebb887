//! Baseline analysis, single transformations, and the transposition ×
//! profile sweep.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circumplex::{distance, map_to_plane, CircumplexPoint, EmotionTarget, DEFAULT_RADIUS};
use crate::emotion::{EmotionClassifier, QuadrantProbs};
use crate::harmony::harmonize;
use crate::midi::{detect_key, enumerate_transpositions, pitch_name, transpose, KeyEstimate, MidiSong, Mode};
use crate::synth::{render, AudioClip, InstrumentProfile, DEFAULT_SAMPLE_RATE};
use crate::{Error, Result};

pub const REPORT_FORMAT: &str = "emoshift-sweep";
pub const REPORT_VERSION: u32 = 1;

/// Lowest and highest default target tonics, C0 and B8.
pub const DEFAULT_RANGE: (u8, u8) = (12, 119);

/// Renders the melody alone and classifies it.
pub fn baseline(
    melody: &MidiSong,
    profile: &InstrumentProfile,
    classifier: &dyn EmotionClassifier,
    sample_rate_hz: u32,
) -> Result<QuadrantProbs> {
    let clip = render(melody, None, profile, profile, sample_rate_hz)?;
    classifier.classify_clip(&clip)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions {
    pub sample_rate_hz: u32,
    pub accompany: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            sample_rate_hz: DEFAULT_SAMPLE_RATE,
            accompany: true,
        }
    }
}

/// Everything produced by one transformation.
#[derive(Debug, Clone)]
pub struct Transformation {
    pub probs: QuadrantProbs,
    pub clip: AudioClip,
    /// Transposed melody plus the accompaniment as an extra track.
    pub midi: MidiSong,
    pub key: KeyEstimate,
    pub folded_notes: usize,
}

/// Transposes, harmonizes, renders and classifies.
pub fn transform_once(
    melody: &MidiSong,
    offset: i32,
    profile: &InstrumentProfile,
    classifier: &dyn EmotionClassifier,
    seed: u64,
    opts: &TransformOptions,
) -> Result<Transformation> {
    let transposed = transpose(melody, offset);
    let song = transposed.song;
    let key = detect_key(&song)?;
    let accompaniment = if opts.accompany {
        Some(harmonize(&song, &key, seed)?)
    } else {
        None
    };
    let clip = render(
        &song,
        accompaniment.as_ref(),
        profile,
        profile,
        opts.sample_rate_hz,
    )?;
    let probs = classifier.classify_clip(&clip)?;
    let midi = match accompaniment {
        Some(acc) => song.with_track(acc.events)?,
        None => song,
    };
    Ok(Transformation {
        probs,
        clip,
        midi,
        key,
        folded_notes: transposed.folded_notes,
    })
}

pub fn key_name(key: &KeyEstimate) -> String {
    let mode = match key.mode {
        Mode::Major => "major",
        Mode::Minor => "minor",
    };
    format!("{} {mode}", crate::midi::pitch_class_name(key.tonic_pc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Lowest and highest target tonic, as MIDI pitches.
    pub range: (u8, u8),
    pub sample_rate_hz: u32,
    pub radius: f64,
    pub seed: u64,
    pub workers: usize,
    pub accompany: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            range: DEFAULT_RANGE,
            sample_rate_hz: DEFAULT_SAMPLE_RATE,
            radius: DEFAULT_RADIUS,
            seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            accompany: true,
        }
    }
}

/// Baseline of the untransposed melody under one profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileBaseline {
    pub profile: String,
    pub probs: Option<QuadrantProbs>,
    pub point: Option<CircumplexPoint>,
    pub distance_to_target: Option<f64>,
    pub error: Option<String>,
}

/// One (transposition, profile) cell of a sweep. Failed cells keep their
/// coordinates and carry an error message instead of results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformationCandidate {
    pub semitone_offset: i32,
    pub target_tonic: String,
    pub profile_name: String,
    pub detected_key: Option<String>,
    pub folded_notes: usize,
    pub probs_before: Option<QuadrantProbs>,
    pub probs_after: Option<QuadrantProbs>,
    pub point_after: Option<CircumplexPoint>,
    pub distance_to_target: Option<f64>,
    pub error: Option<String>,
}

impl TransformationCandidate {
    pub fn is_ok(&self) -> bool {
        self.error.is_none() && self.distance_to_target.is_some()
    }

    pub fn status(&self) -> &str {
        if self.is_ok() {
            "ok"
        } else {
            "error"
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub format: String,
    pub version: u32,
    pub melody: String,
    pub detected_key: String,
    pub seed: u64,
    pub target: EmotionTarget,
    pub radius: f64,
    pub sample_rate_hz: u32,
    pub range: (String, String),
    pub accompany: bool,
    pub baselines: Vec<ProfileBaseline>,
    pub candidates: Vec<TransformationCandidate>,
    pub best_index: Option<usize>,
}

impl SweepReport {
    pub fn best(&self) -> Option<&TransformationCandidate> {
        self.best_index.map(|i| &self.candidates[i])
    }

    /// Smallest successful baseline distance across profiles.
    pub fn best_baseline_distance(&self) -> Option<f64> {
        self.baselines
            .iter()
            .filter_map(|b| b.distance_to_target)
            .min_by(f64::total_cmp)
    }

    pub fn baseline_for(&self, profile: &str) -> Option<&ProfileBaseline> {
        self.baselines.iter().find(|b| b.profile == profile)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: SweepReport =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(format!("sweep report: {e}")))?;
        if report.format != REPORT_FORMAT || report.version != REPORT_VERSION {
            return Err(Error::ModelFormat(format!(
                "expected {REPORT_FORMAT} v{REPORT_VERSION}, found {} v{}",
                report.format, report.version
            )));
        }
        Ok(report)
    }
}

fn cmp_candidates(a: &TransformationCandidate, b: &TransformationCandidate) -> Ordering {
    let da = a.distance_to_target.unwrap_or(f64::INFINITY);
    let db = b.distance_to_target.unwrap_or(f64::INFINITY);
    da.total_cmp(&db)
        .then(a.semitone_offset.abs().cmp(&b.semitone_offset.abs()))
        .then_with(|| a.profile_name.cmp(&b.profile_name))
        .then(a.semitone_offset.cmp(&b.semitone_offset))
}

/// Index of the closest successful candidate. Ties go to the smaller
/// absolute offset, then the profile name, then the lower offset.
pub fn best_index(candidates: &[TransformationCandidate]) -> Result<usize> {
    candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_ok())
        .min_by(|(_, a), (_, b)| cmp_candidates(a, b))
        .map(|(i, _)| i)
        .ok_or(Error::AllCandidatesFailed)
}

pub fn select_best(report: &SweepReport) -> Result<&TransformationCandidate> {
    Ok(&report.candidates[best_index(&report.candidates)?])
}

fn evaluate_point(probs: QuadrantProbs, target: &EmotionTarget, r: f64) -> Result<(CircumplexPoint, f64)> {
    let point = map_to_plane(&probs, r)?;
    let d = distance(&point, target)?;
    Ok((point, d))
}

/// Runs every (target tonic × profile) combination on a pool of
/// `config.workers` threads. Candidates are ordered by offset, then profile
/// name, whatever the worker count.
pub fn sweep(
    melody_name: &str,
    melody: &MidiSong,
    profiles: &[InstrumentProfile],
    classifier: &dyn EmotionClassifier,
    target: &EmotionTarget,
    config: &SweepConfig,
) -> Result<SweepReport> {
    if profiles.is_empty() {
        return Err(Error::InvalidConfig("at least one profile is required".into()));
    }
    if config.workers == 0 {
        return Err(Error::InvalidConfig("workers must be >= 1".into()));
    }
    let r = config.radius;
    target.anchor(r)?;
    let mut profiles: Vec<&InstrumentProfile> = profiles.iter().collect();
    profiles.sort_by(|a, b| a.name.cmp(&b.name));
    if profiles.windows(2).any(|w| w[0].name == w[1].name) {
        return Err(Error::InvalidConfig("profile names must be unique".into()));
    }
    let key = detect_key(melody)?;
    let targets = enumerate_transpositions(melody, config.range.0, config.range.1)?;
    let opts = TransformOptions {
        sample_rate_hz: config.sample_rate_hz,
        accompany: config.accompany,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))?;

    let (baselines, candidates) = pool.install(|| {
        let baselines: Vec<ProfileBaseline> = profiles
            .par_iter()
            .map(|p| {
                let result = baseline(melody, p, classifier, config.sample_rate_hz)
                    .and_then(|probs| Ok((probs, evaluate_point(probs, target, r)?)));
                match result {
                    Ok((probs, (point, d))) => ProfileBaseline {
                        profile: p.name.clone(),
                        probs: Some(probs),
                        point: Some(point),
                        distance_to_target: Some(d),
                        error: None,
                    },
                    Err(e) => ProfileBaseline {
                        profile: p.name.clone(),
                        probs: None,
                        point: None,
                        distance_to_target: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect();

        let jobs: Vec<_> = targets
            .iter()
            .flat_map(|t| profiles.iter().enumerate().map(move |(pi, p)| (t, pi, *p)))
            .collect();
        let candidates: Vec<TransformationCandidate> = jobs
            .par_iter()
            .map(|(t, pi, p)| {
                let before = baselines[*pi].probs;
                let mut cand = TransformationCandidate {
                    semitone_offset: t.semitone_offset,
                    target_tonic: t.target_tonic.clone(),
                    profile_name: p.name.clone(),
                    detected_key: None,
                    folded_notes: 0,
                    probs_before: before,
                    probs_after: None,
                    point_after: None,
                    distance_to_target: None,
                    error: None,
                };
                let result = transform_once(melody, t.semitone_offset, p, classifier, config.seed, &opts)
                    .and_then(|tr| {
                        let (point, d) = evaluate_point(tr.probs, target, r)?;
                        Ok((tr, point, d))
                    });
                match result {
                    Ok((tr, point, d)) => {
                        cand.detected_key = Some(key_name(&tr.key));
                        cand.folded_notes = tr.folded_notes;
                        cand.probs_after = Some(tr.probs);
                        cand.point_after = Some(point);
                        cand.distance_to_target = Some(d);
                    }
                    Err(e) => cand.error = Some(e.to_string()),
                }
                cand
            })
            .collect();
        (baselines, candidates)
    });

    let best_index = best_index(&candidates).ok();
    Ok(SweepReport {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        melody: melody_name.into(),
        detected_key: key_name(&key),
        seed: config.seed,
        target: *target,
        radius: r,
        sample_rate_hz: config.sample_rate_hz,
        range: (pitch_name(config.range.0), pitch_name(config.range.1)),
        accompany: config.accompany,
        baselines,
        candidates,
        best_index,
    })
}

/// Reports as a pretty-printed JSON array.
pub fn reports_to_json(reports: &[SweepReport]) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("reports serialize");
    s.push('\n');
    s
}

/// Classification of a single clip, placed on the disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub input: String,
    pub probabilities: QuadrantProbs,
    pub quadrant: crate::emotion::Quadrant,
    pub point: CircumplexPoint,
    pub target: Option<EmotionTarget>,
    pub distance_to_target: Option<f64>,
}

impl Analysis {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("analysis serializes");
        s.push('\n');
        s
    }
}

pub fn analyze_clip(
    input: &str,
    clip: &AudioClip,
    classifier: &dyn EmotionClassifier,
    radius: f64,
    target: Option<&EmotionTarget>,
) -> Result<Analysis> {
    let probabilities = classifier.classify_clip(clip)?;
    let point = map_to_plane(&probabilities, radius)?;
    let distance_to_target = target.map(|t| distance(&point, t)).transpose()?;
    Ok(Analysis {
        input: input.into(),
        probabilities,
        quadrant: crate::emotion::predict_quadrant(&probabilities),
        point,
        target: target.copied(),
        distance_to_target,
    })
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per candidate across all reports, prefixed by the melody name.
pub fn reports_to_csv(reports: &[SweepReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "melody",
        "offset",
        "target_tonic",
        "profile",
        "p1_before",
        "p2_before",
        "p3_before",
        "p4_before",
        "p1_after",
        "p2_after",
        "p3_after",
        "p4_after",
        "x",
        "y",
        "distance",
        "status",
    ])
    .expect("in-memory csv");
    for report in reports {
        for c in &report.candidates {
            let probs = |p: Option<QuadrantProbs>| -> Vec<String> {
                match p {
                    Some(p) => p.as_array().iter().map(f64::to_string).collect(),
                    None => vec![String::new(); 4],
                }
            };
            let mut row = vec![
                report.melody.clone(),
                c.semitone_offset.to_string(),
                c.target_tonic.clone(),
                c.profile_name.clone(),
            ];
            row.extend(probs(c.probs_before));
            row.extend(probs(c.probs_after));
            row.push(opt_f64(c.point_after.map(|p| p.x)));
            row.push(opt_f64(c.point_after.map(|p| p.y)));
            row.push(opt_f64(c.distance_to_target));
            row.push(match &c.error {
                None => "ok".to_string(),
                Some(e) => format!("error: {e}"),
            });
            w.write_record(&row).expect("in-memory csv");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}
