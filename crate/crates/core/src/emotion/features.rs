//! Frame-based audio descriptors summarized into one vector per clip.
//!
//! Frames are 1024 samples with a 512 hop under a Hann window. Spectral
//! descriptors are computed on the clip divided by its peak, so everything
//! except the RMS statistics ignores overall level.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::midi::correlate_keys;
use crate::synth::AudioClip;
use crate::{Error, Result};

pub const FRAME_SIZE: usize = 1024;
pub const HOP_SIZE: usize = 512;
pub const FEATURE_COUNT: usize = 25;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "rms_mean",
    "rms_std",
    "centroid_mean_hz",
    "centroid_std_hz",
    "rolloff_mean_hz",
    "rolloff_std_hz",
    "zcr_mean",
    "zcr_std",
    "flux_mean",
    "flux_std",
    "low_band_fraction",
    "tempo_bpm",
    "chroma_c",
    "chroma_c#",
    "chroma_d",
    "chroma_d#",
    "chroma_e",
    "chroma_f",
    "chroma_f#",
    "chroma_g",
    "chroma_g#",
    "chroma_a",
    "chroma_a#",
    "chroma_b",
    "major_minor_margin",
];

const ROLLOFF_FRACTION: f64 = 0.85;
const LOW_BAND_HZ: f64 = 500.0;
const HIGH_BAND_HZ: f64 = 2000.0;
const CHROMA_MIN_HZ: f64 = 32.0;
const CHROMA_MAX_HZ: f64 = 5000.0;
const TEMPO_MIN_BPM: f64 = 40.0;
const TEMPO_MAX_BPM: f64 = 200.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub const RMS_MEAN: usize = 0;
    pub const RMS_STD: usize = 1;
    pub const CENTROID_MEAN: usize = 2;
    pub const CENTROID_STD: usize = 3;
    pub const ROLLOFF_MEAN: usize = 4;
    pub const ROLLOFF_STD: usize = 5;
    pub const ZCR_MEAN: usize = 6;
    pub const ZCR_STD: usize = 7;
    pub const FLUX_MEAN: usize = 8;
    pub const FLUX_STD: usize = 9;
    pub const LOW_BAND_FRACTION: usize = 10;
    pub const TEMPO_BPM: usize = 11;
    pub const CHROMA: usize = 12;
    pub const MODE_MARGIN: usize = 24;

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn chroma(&self) -> &[f64] {
        &self.0[Self::CHROMA..Self::CHROMA + 12]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Tempo from the autocorrelation of the onset envelope, searched between
/// 40 and 200 BPM with parabolic peak refinement. Returns 0 when the
/// envelope is too short or flat.
fn estimate_tempo(envelope: &[f64], frames_per_second: f64) -> f64 {
    let min_lag = (60.0 * frames_per_second / TEMPO_MAX_BPM).ceil() as usize;
    let max_lag = (60.0 * frames_per_second / TEMPO_MIN_BPM).floor() as usize;
    if min_lag < 1 || envelope.len() <= max_lag + 1 {
        return 0.0;
    }
    let (mean, std) = mean_std(envelope);
    if std == 0.0 {
        return 0.0;
    }
    let centered: Vec<f64> = envelope.iter().map(|e| e - mean).collect();
    let ac = |lag: usize| -> f64 {
        let n = centered.len() - lag;
        centered[..n]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n as f64
    };
    let scores: Vec<f64> = (min_lag - 1..=max_lag + 1).map(ac).collect();
    let mut best = 1;
    for i in 2..scores.len() - 1 {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    if scores[best] <= 0.0 {
        return 0.0;
    }
    let (l, c, r) = (scores[best - 1], scores[best], scores[best + 1]);
    let denom = l - 2.0 * c + r;
    let shift = if denom != 0.0 {
        (0.5 * (l - r) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let lag = (min_lag - 1 + best) as f64 + shift;
    60.0 * frames_per_second / lag
}

/// Computes the clip's feature vector. Requires at least one full frame.
///
/// Silent input falls back to zeros everywhere except a uniform chroma and
/// a 0.5 low-band fraction.
pub fn extract_features(clip: &AudioClip) -> Result<FeatureVector> {
    let samples = clip.samples();
    if samples.len() < FRAME_SIZE {
        return Err(Error::ClipTooShort {
            len: samples.len(),
            min: FRAME_SIZE,
        });
    }
    let sr = clip.sample_rate_hz() as f64;
    let peak = clip.peak() as f64;
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    let window = hann(FRAME_SIZE);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(FRAME_SIZE);
    let bins = FRAME_SIZE / 2 + 1;
    let bin_hz = sr / FRAME_SIZE as f64;

    // Pitch class of every bin inside the chroma band.
    let bin_pc: Vec<Option<usize>> = (0..bins)
        .map(|k| {
            let f = k as f64 * bin_hz;
            (f >= CHROMA_MIN_HZ && f <= CHROMA_MAX_HZ.min(sr / 2.0)).then(|| {
                let midi = 69.0 + 12.0 * (f / 440.0).log2();
                (midi.round() as i64).rem_euclid(12) as usize
            })
        })
        .collect();

    let frame_count = 1 + (samples.len() - FRAME_SIZE) / HOP_SIZE;
    let mut rms = Vec::with_capacity(frame_count);
    let mut centroid = Vec::new();
    let mut rolloff = Vec::new();
    let mut zcr = Vec::new();
    let mut flux = Vec::with_capacity(frame_count);
    let mut chroma = [0.0f64; 12];
    let (mut low_energy, mut high_energy) = (0.0f64, 0.0f64);
    let mut previous_mag: Option<Vec<f64>> = None;
    let mut buffer = vec![Complex::new(0.0, 0.0); FRAME_SIZE];

    for f in 0..frame_count {
        let frame = &samples[f * HOP_SIZE..f * HOP_SIZE + FRAME_SIZE];
        let energy: f64 = frame.iter().map(|&s| (s as f64).powi(2)).sum();
        rms.push((energy / FRAME_SIZE as f64).sqrt());

        for (slot, (&s, w)) in buffer.iter_mut().zip(frame.iter().zip(&window)) {
            *slot = Complex::new(s as f64 * scale * w, 0.0);
        }
        fft.process(&mut buffer);
        let mag: Vec<f64> = buffer[..bins].iter().map(|c| c.norm()).collect();
        let mag_sum: f64 = mag.iter().sum();

        let onset = match &previous_mag {
            Some(prev) => mag.iter().zip(prev).map(|(m, p)| (m - p).max(0.0)).sum::<f64>(),
            None => 0.0,
        };
        flux.push(onset);

        if mag_sum > 0.0 {
            let weighted: f64 = mag.iter().enumerate().map(|(k, m)| k as f64 * bin_hz * m).sum();
            centroid.push(weighted / mag_sum);

            let power: Vec<f64> = mag.iter().map(|m| m * m).collect();
            let total_power: f64 = power.iter().sum();
            let mut cumulative = 0.0;
            let mut roll = (bins - 1) as f64 * bin_hz;
            for (k, p) in power.iter().enumerate() {
                cumulative += p;
                if cumulative >= ROLLOFF_FRACTION * total_power {
                    roll = k as f64 * bin_hz;
                    break;
                }
            }
            rolloff.push(roll);

            let crossings = frame
                .windows(2)
                .filter(|w| (w[0] as f64) * (w[1] as f64) < 0.0)
                .count();
            zcr.push(crossings as f64 / (FRAME_SIZE - 1) as f64);

            for (k, p) in power.iter().enumerate() {
                let hz = k as f64 * bin_hz;
                if hz < LOW_BAND_HZ {
                    low_energy += p;
                } else if hz > HIGH_BAND_HZ {
                    high_energy += p;
                }
                if let Some(pc) = bin_pc[k] {
                    chroma[pc] += p;
                }
            }
        }
        previous_mag = Some(mag);
    }

    let chroma_total: f64 = chroma.iter().sum();
    if chroma_total > 0.0 {
        chroma.iter_mut().for_each(|c| *c /= chroma_total);
    } else {
        chroma = [1.0 / 12.0; 12];
    }
    let keys = correlate_keys(&chroma);
    let best_major = keys[..12].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let best_minor = keys[12..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    let band_total = low_energy + high_energy;
    let low_fraction = if band_total > 0.0 {
        low_energy / band_total
    } else {
        0.5
    };

    let (rms_mean, rms_std) = mean_std(&rms);
    let (centroid_mean, centroid_std) = mean_std(&centroid);
    let (rolloff_mean, rolloff_std) = mean_std(&rolloff);
    let (zcr_mean, zcr_std) = mean_std(&zcr);
    let (flux_mean, flux_std) = mean_std(&flux[1.min(flux.len())..]);
    let tempo = estimate_tempo(&flux, sr / HOP_SIZE as f64);

    let mut values = vec![
        rms_mean,
        rms_std,
        centroid_mean,
        centroid_std,
        rolloff_mean,
        rolloff_std,
        zcr_mean,
        zcr_std,
        flux_mean,
        flux_std,
        low_fraction,
        tempo,
    ];
    values.extend_from_slice(&chroma);
    values.push(best_major - best_minor);
    debug_assert_eq!(values.len(), FEATURE_COUNT);
    let features = FeatureVector(values);
    if !features.is_finite() {
        return Err(Error::NonFinite("extracted features".into()));
    }
    Ok(features)
}
