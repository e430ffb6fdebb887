//! Software rendering of symbolic music into mono PCM.
//!
//! Instrument profiles stand in for SoundFonts: a band-limited base waveform
//! stacked over weighted harmonics and shaped by an ADSR envelope. Every
//! partial at or above Nyquist is dropped before rendering.

mod profile;
mod wav;

pub use profile::{builtin_profiles, Adsr, InstrumentProfile, Waveform};
pub use wav::{read_wav, resample_linear, write_wav};

use std::collections::HashMap;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::harmony::Accompaniment;
use crate::midi::{MidiSong, NoteEvent};
use crate::{Error, Result};

pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;
pub const MIN_RENDER_SAMPLE_RATE: u32 = 8_000;
/// Peak level after normalization.
pub const PEAK_TARGET: f64 = 0.9;

const TABLE_SIZE: usize = 4096;
/// Fourier terms kept per harmonic for non-sine waveforms.
const MAX_WAVEFORM_TERMS: usize = 64;

/// Mono PCM samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioClip {
    samples: Vec<f32>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f32>, sample_rate_hz: u32) -> Result<Self> {
        if sample_rate_hz == 0 {
            return Err(Error::InvalidClip("sample rate must be positive".into()));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::InvalidClip(format!("sample {bad} outside [-1, 1]")));
        }
        Ok(AudioClip {
            samples,
            sample_rate_hz,
        })
    }

    pub fn silence(len: usize, sample_rate_hz: u32) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    pub fn peak(&self) -> f32 {
        self.samples.iter().fold(0.0f32, |m, s| m.max(s.abs()))
    }

    /// Multiplies every sample by `gain`, which must keep samples in range.
    pub fn scaled(&self, gain: f32) -> Result<Self> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate_hz,
        )
    }
}

/// Equal-tempered frequency of a MIDI pitch, A4 = 69 = 440 Hz.
pub fn pitch_to_freq(pitch: i32) -> Result<f64> {
    if !(0..=127).contains(&pitch) {
        return Err(Error::PitchOutOfRange(pitch));
    }
    Ok(440.0 * 2f64.powf((pitch - 69) as f64 / 12.0))
}

/// Partials of one note as `(harmonic number, amplitude)`, merged across
/// the profile's harmonics and the waveform's Fourier series, all strictly
/// below Nyquist.
pub fn note_partials(profile: &InstrumentProfile, f0: f64, sample_rate_hz: u32) -> Vec<(usize, f64)> {
    let nyquist = sample_rate_hz as f64 / 2.0;
    let mut merged: HashMap<usize, f64> = HashMap::new();
    for (k, &amp) in profile.harmonic_amplitudes.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        let harmonic = k + 1;
        for (m, coeff) in profile.waveform.series(MAX_WAVEFORM_TERMS) {
            let n = harmonic * m;
            if n as f64 * f0 >= nyquist || n >= TABLE_SIZE / 2 {
                continue;
            }
            *merged.entry(n).or_insert(0.0) += amp * coeff;
        }
    }
    let mut partials: Vec<(usize, f64)> = merged.into_iter().filter(|&(_, a)| a != 0.0).collect();
    partials.sort_by_key(|&(n, _)| n);
    partials
}

/// One period of the summed partials, sampled at `TABLE_SIZE` points.
fn build_table(partials: &[(usize, f64)], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let mut spectrum = vec![Complex::new(0.0, 0.0); TABLE_SIZE];
    for &(n, amp) in partials {
        // sin(x) = (e^{ix} - e^{-ix}) / 2i
        spectrum[n] += Complex::new(0.0, -amp / 2.0);
        spectrum[TABLE_SIZE - n] += Complex::new(0.0, amp / 2.0);
    }
    planner.plan_fft_inverse(TABLE_SIZE).process(&mut spectrum);
    spectrum.into_iter().map(|c| c.re).collect()
}

struct Voice<'a> {
    profile: &'a InstrumentProfile,
    note: NoteEvent,
}

/// Renders the melody (and optional accompaniment) without peak
/// normalization. Mixing is a plain sum, so the result is linear in the
/// set of notes.
pub fn render_mix(
    song: &MidiSong,
    accompaniment: Option<&Accompaniment>,
    melody_profile: &InstrumentProfile,
    accomp_profile: &InstrumentProfile,
    sample_rate_hz: u32,
) -> Result<Vec<f64>> {
    if sample_rate_hz < MIN_RENDER_SAMPLE_RATE {
        return Err(Error::InvalidConfig(format!(
            "sample rate {sample_rate_hz} Hz is below {MIN_RENDER_SAMPLE_RATE} Hz"
        )));
    }
    melody_profile.validate()?;
    accomp_profile.validate()?;

    let voices: Vec<Voice> = song
        .notes()
        .map(|&note| Voice {
            profile: melody_profile,
            note,
        })
        .chain(
            accompaniment
                .into_iter()
                .flat_map(|a| a.events.iter())
                .map(|&note| Voice {
                    profile: accomp_profile,
                    note,
                }),
        )
        .collect();

    let sr = sample_rate_hz as f64;
    let placement = |v: &Voice| {
        let start = (song.ticks_to_seconds(v.note.onset_ticks) * sr).round() as usize;
        let held = song.ticks_to_seconds(v.note.duration_ticks);
        let len = ((held + v.profile.adsr.release_s) * sr).ceil() as usize;
        (start, held, len)
    };
    let total = voices
        .iter()
        .map(|v| {
            let (start, _, len) = placement(v);
            start + len
        })
        .max()
        .unwrap_or(0);
    let mut out = vec![0.0f64; total];

    let mut planner = FftPlanner::new();
    let mut tables: HashMap<(usize, u8), Arc<Vec<f64>>> = HashMap::new();
    let profile_slot = |p: &InstrumentProfile| usize::from(!std::ptr::eq(p, melody_profile));

    for v in &voices {
        let f0 = pitch_to_freq(v.note.pitch as i32)?;
        let table = tables
            .entry((profile_slot(v.profile), v.note.pitch))
            .or_insert_with(|| {
                Arc::new(build_table(
                    &note_partials(v.profile, f0, sample_rate_hz),
                    &mut planner,
                ))
            })
            .clone();
        let (start, held, len) = placement(v);
        let amp = v.profile.gain * v.note.velocity as f64 / 127.0;
        let step = f0 * TABLE_SIZE as f64 / sr;
        let mut phase = 0.0f64;
        for (i, slot) in out[start..start + len].iter_mut().enumerate() {
            let t = i as f64 / sr;
            let env = v.profile.adsr.level(t, held);
            let idx = phase as usize;
            let frac = phase - idx as f64;
            let a = table[idx];
            let b = table[(idx + 1) % TABLE_SIZE];
            *slot += amp * env * (a + (b - a) * frac);
            phase += step;
            if phase >= TABLE_SIZE as f64 {
                phase -= TABLE_SIZE as f64;
            }
        }
    }
    Ok(out)
}

/// Renders and mixes, scaling the result down to a 0.9 peak when it would
/// otherwise exceed it. The clip ends where the last release ends.
pub fn render(
    song: &MidiSong,
    accompaniment: Option<&Accompaniment>,
    melody_profile: &InstrumentProfile,
    accomp_profile: &InstrumentProfile,
    sample_rate_hz: u32,
) -> Result<AudioClip> {
    let mut mix = render_mix(
        song,
        accompaniment,
        melody_profile,
        accomp_profile,
        sample_rate_hz,
    )?;
    let peak = mix.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > PEAK_TARGET {
        let gain = PEAK_TARGET / peak;
        mix.iter_mut().for_each(|s| *s *= gain);
    }
    AudioClip::new(mix.into_iter().map(|s| s as f32).collect(), sample_rate_hz)
}
