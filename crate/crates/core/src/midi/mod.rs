//! Symbolic music: note events, Standard MIDI File I/O, transposition and
//! key estimation.

mod key;
mod smf;

pub use key::{
    correlate_keys, detect_key, enumerate_transpositions, pearson, KeyEstimate, Mode, TranspositionTarget,
    MAJOR_PROFILE, MINOR_PROFILE,
};
pub use smf::{parse_midi, parse_midi_with_warnings, write_midi, MidiWarning};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default tempo when a file carries no tempo meta event (120 BPM).
pub const DEFAULT_TEMPO_US_PER_QUARTER: u32 = 500_000;

const NOTE_NAMES: [&str; 12] = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"];

/// A single sounding note with absolute timing in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoteEvent {
    pub onset_ticks: u32,
    pub duration_ticks: u32,
    pub pitch: u8,
    pub velocity: u8,
    pub channel: u8,
}

impl NoteEvent {
    pub fn new(onset_ticks: u32, duration_ticks: u32, pitch: u8, velocity: u8, channel: u8) -> Result<Self> {
        let note = NoteEvent {
            onset_ticks,
            duration_ticks,
            pitch,
            velocity,
            channel,
        };
        note.validate()?;
        Ok(note)
    }

    pub fn validate(&self) -> Result<()> {
        if self.duration_ticks == 0 {
            return Err(Error::InvalidNote("duration must be positive".into()));
        }
        if self.pitch > 127 {
            return Err(Error::InvalidNote(format!("pitch {} > 127", self.pitch)));
        }
        if !(1..=127).contains(&self.velocity) {
            return Err(Error::InvalidNote(format!(
                "velocity {} outside 1..=127",
                self.velocity
            )));
        }
        if self.channel > 15 {
            return Err(Error::InvalidNote(format!("channel {} > 15", self.channel)));
        }
        Ok(())
    }

    pub fn end_ticks(&self) -> u32 {
        self.onset_ticks.saturating_add(self.duration_ticks)
    }
}

/// A parsed song: resolution, a single tempo and one note list per track.
///
/// Every track is kept sorted by onset. Notes sharing an onset keep their
/// insertion order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MidiSong {
    ticks_per_quarter: u16,
    tempo_us_per_quarter: u32,
    tracks: Vec<Vec<NoteEvent>>,
}

impl MidiSong {
    pub fn new(
        ticks_per_quarter: u16,
        tempo_us_per_quarter: u32,
        mut tracks: Vec<Vec<NoteEvent>>,
    ) -> Result<Self> {
        if ticks_per_quarter == 0 || ticks_per_quarter > 0x7fff {
            return Err(Error::InvalidNote(format!(
                "ticks per quarter {ticks_per_quarter} outside 1..=32767"
            )));
        }
        if tempo_us_per_quarter == 0 || tempo_us_per_quarter > 0x00ff_ffff {
            return Err(Error::InvalidNote(format!(
                "tempo {tempo_us_per_quarter} us/quarter outside 1..=16777215"
            )));
        }
        for track in &mut tracks {
            for note in track.iter() {
                note.validate()?;
            }
            track.sort_by_key(|n| n.onset_ticks);
        }
        Ok(MidiSong {
            ticks_per_quarter,
            tempo_us_per_quarter,
            tracks,
        })
    }

    /// A single-track song.
    pub fn single_track(
        ticks_per_quarter: u16,
        tempo_us_per_quarter: u32,
        notes: Vec<NoteEvent>,
    ) -> Result<Self> {
        Self::new(ticks_per_quarter, tempo_us_per_quarter, vec![notes])
    }

    pub fn ticks_per_quarter(&self) -> u16 {
        self.ticks_per_quarter
    }

    pub fn tempo_us_per_quarter(&self) -> u32 {
        self.tempo_us_per_quarter
    }

    pub fn tracks(&self) -> &[Vec<NoteEvent>] {
        &self.tracks
    }

    pub fn notes(&self) -> impl Iterator<Item = &NoteEvent> + '_ {
        self.tracks.iter().flatten()
    }

    pub fn note_count(&self) -> usize {
        self.tracks.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.note_count() == 0
    }

    /// Earliest onset and latest note end, or `None` for an empty song.
    pub fn span_ticks(&self) -> Option<(u32, u32)> {
        let start = self.notes().map(|n| n.onset_ticks).min()?;
        let end = self.notes().map(NoteEvent::end_ticks).max()?;
        Some((start, end))
    }

    pub fn ticks_to_seconds(&self, ticks: u32) -> f64 {
        ticks as f64 * self.tempo_us_per_quarter as f64 / (self.ticks_per_quarter as f64 * 1_000_000.0)
    }

    pub fn tempo_bpm(&self) -> f64 {
        60_000_000.0 / self.tempo_us_per_quarter as f64
    }

    /// Channels used by at least one note, ascending.
    pub fn channels(&self) -> Vec<u8> {
        let mut used = [false; 16];
        for n in self.notes() {
            used[n.channel as usize] = true;
        }
        (0..16u8).filter(|&c| used[c as usize]).collect()
    }

    /// Returns a copy with `notes` appended as an extra track.
    pub fn with_track(&self, notes: Vec<NoteEvent>) -> Result<MidiSong> {
        let mut tracks = self.tracks.clone();
        tracks.push(notes);
        MidiSong::new(self.ticks_per_quarter, self.tempo_us_per_quarter, tracks)
    }

    /// Duration-weighted pitch-class histogram over all tracks.
    pub fn pitch_class_histogram(&self) -> [f64; 12] {
        let mut hist = [0.0; 12];
        for n in self.notes() {
            hist[(n.pitch % 12) as usize] += n.duration_ticks as f64;
        }
        hist
    }
}

/// Result of [`transpose`]: the shifted song and how many notes had to be
/// folded back into range by whole octaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transposed {
    pub song: MidiSong,
    pub folded_notes: usize,
}

/// Shifts every pitch by `semitones`, folding out-of-range results back into
/// 0..=127 by whole octaves.
pub fn transpose(song: &MidiSong, semitones: i32) -> Transposed {
    let mut folded_notes = 0;
    let tracks = song
        .tracks
        .iter()
        .map(|track| {
            track
                .iter()
                .map(|n| {
                    let (pitch, folded) = fold_pitch(n.pitch as i32 + semitones);
                    folded_notes += folded as usize;
                    NoteEvent { pitch, ..*n }
                })
                .collect()
        })
        .collect();
    Transposed {
        song: MidiSong {
            ticks_per_quarter: song.ticks_per_quarter,
            tempo_us_per_quarter: song.tempo_us_per_quarter,
            tracks,
        },
        folded_notes,
    }
}

/// Folds an arbitrary semitone number into 0..=127 by whole octaves.
/// The flag reports whether any folding happened.
pub fn fold_pitch(pitch: i32) -> (u8, bool) {
    if pitch > 127 {
        let octaves = (pitch - 127 + 11) / 12;
        ((pitch - 12 * octaves) as u8, true)
    } else if pitch < 0 {
        let octaves = (-pitch + 11) / 12;
        ((pitch + 12 * octaves) as u8, true)
    } else {
        (pitch as u8, false)
    }
}

/// Scientific pitch name with sharps; MIDI 12 is `C0`, 69 is `A4`.
pub fn pitch_name(pitch: u8) -> String {
    let octave = pitch as i32 / 12 - 1;
    format!("{}{}", NOTE_NAMES[(pitch % 12) as usize], octave)
}

pub fn pitch_class_name(pc: u8) -> &'static str {
    NOTE_NAMES[(pc % 12) as usize]
}

/// Parses names such as `C0`, `F#3`, `Bb8` or `C-1` into a MIDI pitch.
pub fn parse_pitch_name(name: &str) -> Result<u8> {
    let bad = || Error::InvalidConfig(format!("invalid pitch name {name:?}"));
    let name = name.trim();
    let mut chars = name.chars();
    let letter = chars.next().ok_or_else(bad)?.to_ascii_uppercase();
    let base: i32 = match letter {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return Err(bad()),
    };
    let rest = chars.as_str();
    let (accidental, octave) = match rest.chars().next() {
        Some('#') => (1, &rest[1..]),
        Some('b') => (-1, &rest[1..]),
        _ => (0, rest),
    };
    let octave: i32 = octave.parse().map_err(|_| bad())?;
    let pitch = (octave + 1) * 12 + base + accidental;
    if (0..=127).contains(&pitch) {
        Ok(pitch as u8)
    } else {
        Err(Error::PitchOutOfRange(pitch))
    }
}
