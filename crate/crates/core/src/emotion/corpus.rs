//! Corpus manifests and a synthetic, quadrant-labelled training corpus.

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClipSource, Label, LabeledClip, Quadrant};
use crate::harmony::{harmonize, Accompaniment};
use crate::midi::{detect_key, MidiSong, Mode, NoteEvent};
use crate::synth::{
    builtin_profiles, render, Adsr, AudioClip, InstrumentProfile, Waveform, DEFAULT_SAMPLE_RATE,
};
use crate::{Error, Result};

const TPQ: u16 = 480;
const BARS: u32 = 4;

/// Which label columns a manifest carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifestKind {
    /// `path,quadrant`
    Quadrant,
    /// `path,valence,arousal`
    ValenceArousal,
}

/// Reads a CSV manifest. Paths are resolved relative to the manifest's
/// directory.
pub fn load_manifest(path: &Path) -> Result<(ManifestKind, Vec<LabeledClip>)> {
    let err = |reason: String| Error::Manifest {
        path: path.to_path_buf(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    let kind = match headers.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["path", "quadrant"] => ManifestKind::Quadrant,
        ["path", "valence", "arousal"] => ManifestKind::ValenceArousal,
        other => return Err(err(format!("unrecognized header {other:?}"))),
    };
    let mut clips = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(e.to_string()))?;
        let line = row + 2;
        let clip_path: PathBuf = base.join(&record[0]);
        let label = match kind {
            ManifestKind::Quadrant => Label::Quadrant(
                record[1]
                    .parse()
                    .map_err(|_| err(format!("line {line}: bad quadrant {:?}", &record[1])))?,
            ),
            ManifestKind::ValenceArousal => {
                let num = |s: &str| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(format!("line {line}: bad number {s:?}")))
                };
                Label::ValenceArousal {
                    valence: num(&record[1])?,
                    arousal: num(&record[2])?,
                }
            }
        };
        clips.push(LabeledClip {
            source: ClipSource::Path(clip_path),
            label,
        });
    }
    Ok((kind, clips))
}

/// Serializes a `path,quadrant` manifest.
pub fn write_manifest(rows: &[(String, Quadrant)]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["path", "quadrant"]).expect("in-memory csv");
    for (path, q) in rows {
        writer
            .write_record([path.as_str(), &q.to_string()])
            .expect("in-memory csv");
    }
    String::from_utf8(writer.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

struct Style {
    bpm: (f64, f64),
    mode: Mode,
    register_top: i32,
    durations: &'static [u32],
    articulation: f64,
    velocity: (u8, u8),
}

fn style(q: Quadrant) -> Style {
    match q {
        Quadrant::Q1 => Style {
            bpm: (140.0, 170.0),
            mode: Mode::Major,
            register_top: 79,
            durations: &[240, 240, 480],
            articulation: 0.85,
            velocity: (95, 120),
        },
        Quadrant::Q2 => Style {
            bpm: (140.0, 175.0),
            mode: Mode::Minor,
            register_top: 60,
            durations: &[240, 240, 480],
            articulation: 0.5,
            velocity: (105, 127),
        },
        Quadrant::Q3 => Style {
            bpm: (55.0, 75.0),
            mode: Mode::Minor,
            register_top: 55,
            durations: &[480, 960, 960],
            articulation: 1.0,
            velocity: (35, 60),
        },
        Quadrant::Q4 => Style {
            bpm: (55.0, 80.0),
            mode: Mode::Major,
            register_top: 72,
            durations: &[480, 960, 960],
            articulation: 1.0,
            velocity: (40, 65),
        },
    }
}

/// A four-bar melody in the quadrant's characteristic tempo, mode, register,
/// rhythm and dynamics, with a random tonic.
pub fn quadrant_melody(q: Quadrant, seed: u64) -> MidiSong {
    melody_with(q, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn melody_with(q: Quadrant, rng: &mut ChaCha8Rng) -> MidiSong {
    let s = style(q);
    let bpm = rng.gen_range(s.bpm.0..s.bpm.1);
    let tempo = (60_000_000.0 / bpm).round() as u32;
    let tonic_pc: i32 = rng.gen_range(0..12);
    let tonic =
        s.register_top - (s.register_top - tonic_pc).rem_euclid(12) - 12 + 12 * i32::from(tonic_pc > 6);
    let scale = s.mode.scale();
    let pitch_of =
        |degree: i32| tonic + 12 * degree.div_euclid(7) + scale[degree.rem_euclid(7) as usize] as i32;

    let bar = TPQ as u32 * 4;
    let mut notes = Vec::new();
    let mut degree = 0i32;
    for b in 0..BARS {
        let mut t = 0;
        while t < bar {
            let mut dur = *s.durations.choose(rng).expect("non-empty");
            if t + dur > bar || (b == BARS - 1 && t + 2 * dur > bar) {
                dur = bar - t;
            }
            if t == 0 {
                // Downbeats land on triad tones of the tonic chord.
                degree = *[0, 2, 4, 7].choose(rng).expect("non-empty");
            } else {
                degree = (degree + *[-2, -1, 1, 1, 2].choose(rng).expect("non-empty")).clamp(-3, 9);
            }
            if b == BARS - 1 && t + dur == bar {
                degree = 0;
            }
            let sounding = ((dur as f64 * s.articulation).round() as u32).max(1);
            let velocity = rng.gen_range(s.velocity.0..=s.velocity.1);
            let pitch = pitch_of(degree).clamp(0, 127) as u8;
            notes.push(NoteEvent {
                onset_ticks: b * bar + t,
                duration_ticks: sounding,
                pitch,
                velocity,
                channel: 0,
            });
            t += dur;
        }
    }
    MidiSong::single_track(TPQ, tempo, notes).expect("generated notes are valid")
}

fn jitter_gain(p: &mut InstrumentProfile, rng: &mut ChaCha8Rng, range: (f64, f64)) {
    p.gain = rng.gen_range(range.0..range.1);
}

/// An instrument profile characteristic of the quadrant: bright for Q1, a
/// harsh square for Q2, dark for Q3 and soft for Q4, at high gain for the
/// high-arousal quadrants.
pub fn quadrant_profile(q: Quadrant, seed: u64) -> InstrumentProfile {
    profile_with(q, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn profile_with(q: Quadrant, rng: &mut ChaCha8Rng) -> InstrumentProfile {
    let builtin = |name: &str| {
        builtin_profiles()
            .into_iter()
            .find(|p| p.name == name)
            .expect("built-in profile")
    };
    let mut p = match q {
        Quadrant::Q1 => {
            if rng.gen_bool(0.5) {
                builtin("chiptune")
            } else {
                builtin("piano-like")
            }
        }
        Quadrant::Q2 => InstrumentProfile {
            name: "harsh-square".into(),
            waveform: Waveform::Square,
            harmonic_amplitudes: vec![1.0, 0.6, 0.4],
            adsr: Adsr {
                attack_s: 0.0,
                decay_s: 0.05,
                sustain_level: 0.9,
                release_s: 0.03,
            },
            gain: 1.0,
        },
        Quadrant::Q3 => {
            if rng.gen_bool(0.5) {
                builtin("strings-like")
            } else {
                InstrumentProfile {
                    name: "dark-triangle".into(),
                    waveform: Waveform::Triangle,
                    harmonic_amplitudes: vec![1.0, 0.15],
                    adsr: Adsr {
                        attack_s: 0.15,
                        decay_s: 0.3,
                        sustain_level: 0.7,
                        release_s: 0.5,
                    },
                    gain: 1.0,
                }
            }
        }
        Quadrant::Q4 => {
            if rng.gen_bool(0.5) {
                builtin("organ-like")
            } else {
                InstrumentProfile {
                    name: "soft-flute".into(),
                    waveform: Waveform::Sine,
                    harmonic_amplitudes: vec![1.0, 0.3, 0.1],
                    adsr: Adsr {
                        attack_s: 0.08,
                        decay_s: 0.2,
                        sustain_level: 0.8,
                        release_s: 0.3,
                    },
                    gain: 1.0,
                }
            }
        }
    };
    let gain = match q {
        Quadrant::Q1 | Quadrant::Q2 => (0.6, 1.0),
        Quadrant::Q3 | Quadrant::Q4 => (0.25, 0.55),
    };
    jitter_gain(&mut p, rng, gain);
    p
}

/// One generated clip with everything used to produce it.
#[derive(Debug, Clone)]
pub struct SyntheticCorpusEntry {
    pub quadrant: Quadrant,
    pub melody: MidiSong,
    pub accompaniment: Option<Accompaniment>,
    pub profile: InstrumentProfile,
    pub clip: AudioClip,
}

impl SyntheticCorpusEntry {
    /// Generates `n_per_quadrant` clips per quadrant, interleaved Q1..Q4.
    /// About half of the clips carry a harmonized accompaniment.
    pub fn generate(n_per_quadrant: usize, seed: u64) -> Result<Vec<SyntheticCorpusEntry>> {
        if n_per_quadrant == 0 {
            return Err(Error::InvalidConfig("n per quadrant must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(4 * n_per_quadrant);
        for _ in 0..n_per_quadrant {
            for q in Quadrant::ALL {
                let melody = melody_with(q, &mut rng);
                let profile = profile_with(q, &mut rng);
                let accompaniment = if rng.gen_bool(0.5) {
                    let key = detect_key(&melody)?;
                    Some(harmonize(&melody, &key, rng.gen())?)
                } else {
                    None
                };
                let clip = render(
                    &melody,
                    accompaniment.as_ref(),
                    &profile,
                    &profile,
                    DEFAULT_SAMPLE_RATE,
                )?;
                out.push(SyntheticCorpusEntry {
                    quadrant: q,
                    melody,
                    accompaniment,
                    profile,
                    clip,
                });
            }
        }
        Ok(out)
    }
}

/// In-memory labelled clips from [`SyntheticCorpusEntry::generate`].
pub fn generate_synthetic_corpus(n_per_quadrant: usize, seed: u64) -> Result<Vec<LabeledClip>> {
    Ok(SyntheticCorpusEntry::generate(n_per_quadrant, seed)?
        .into_iter()
        .map(|e| LabeledClip {
            source: ClipSource::Memory(e.clip),
            label: Label::Quadrant(e.quadrant),
        })
        .collect())
}
