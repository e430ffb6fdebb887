//! Krumhansl–Schmuckler key estimation with Krumhansl–Kessler profiles.

use serde::{Deserialize, Serialize};

use super::{pitch_name, MidiSong};
use crate::{Error, Result};

/// Krumhansl–Kessler probe-tone ratings for a major key, tonic first.
pub const MAJOR_PROFILE: [f64; 12] = [
    6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88,
];
/// Krumhansl–Kessler probe-tone ratings for a minor key, tonic first.
pub const MINOR_PROFILE: [f64; 12] = [
    6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Major,
    Minor,
}

impl Mode {
    /// Semitone offsets of the seven scale degrees (natural minor for minor).
    pub fn scale(self) -> [u8; 7] {
        match self {
            Mode::Major => [0, 2, 4, 5, 7, 9, 11],
            Mode::Minor => [0, 2, 3, 5, 7, 8, 10],
        }
    }

    pub fn profile(self) -> &'static [f64; 12] {
        match self {
            Mode::Major => &MAJOR_PROFILE,
            Mode::Minor => &MINOR_PROFILE,
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Major => "major",
            Mode::Minor => "minor",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyEstimate {
    pub tonic_pc: u8,
    pub mode: Mode,
    /// Half the correlation gap between the best and second-best key.
    pub confidence: f64,
}

impl std::fmt::Display for KeyEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", super::pitch_class_name(self.tonic_pc), self.mode)
    }
}

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson(a: &[f64; 12], b: &[f64; 12]) -> f64 {
    let ma = a.iter().sum::<f64>() / 12.0;
    let mb = b.iter().sum::<f64>() / 12.0;
    let (mut num, mut va, mut vb) = (0.0, 0.0, 0.0);
    for i in 0..12 {
        let da = a[i] - ma;
        let db = b[i] - mb;
        num += da * db;
        va += da * da;
        vb += db * db;
    }
    if va <= 0.0 || vb <= 0.0 {
        0.0
    } else {
        num / (va * vb).sqrt()
    }
}

/// Correlation of a pitch-class histogram with all 24 keys: indices 0..12
/// are the major keys on tonics C..B, 12..24 the minor keys.
pub fn correlate_keys(histogram: &[f64; 12]) -> [f64; 24] {
    let mut out = [0.0; 24];
    for (m, mode) in [Mode::Major, Mode::Minor].into_iter().enumerate() {
        let profile = mode.profile();
        for tonic in 0..12 {
            let mut rotated = [0.0; 12];
            for (pc, slot) in rotated.iter_mut().enumerate() {
                *slot = profile[(pc + 12 - tonic) % 12];
            }
            out[m * 12 + tonic] = pearson(histogram, &rotated);
        }
    }
    out
}

/// Estimates the key of a song from its duration-weighted pitch-class
/// histogram. Ties resolve to the earlier key (majors before minors, then
/// ascending tonic).
pub fn detect_key(song: &MidiSong) -> Result<KeyEstimate> {
    if song.is_empty() {
        return Err(Error::EmptySong);
    }
    let scores = correlate_keys(&song.pitch_class_histogram());
    let mut best = 0;
    for i in 1..24 {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    let runner_up = (0..24)
        .filter(|&i| i != best)
        .map(|i| scores[i])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(KeyEstimate {
        tonic_pc: (best % 12) as u8,
        mode: if best < 12 { Mode::Major } else { Mode::Minor },
        confidence: ((scores[best] - runner_up) / 2.0).clamp(0.0, 1.0),
    })
}

/// One absolute tonic target of a transposition sweep.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranspositionTarget {
    pub target_pitch: u8,
    pub target_tonic: String,
    pub semitone_offset: i32,
}

/// Lists one target per semitone in `lowest..=highest`. The offset moves the
/// detected tonic, realized in octave 4, onto the target pitch.
pub fn enumerate_transpositions(
    song: &MidiSong,
    lowest: u8,
    highest: u8,
) -> Result<Vec<TranspositionTarget>> {
    if lowest > highest || highest > 127 {
        return Err(Error::InvalidConfig(format!(
            "invalid transposition range {lowest}..={highest}"
        )));
    }
    let key = detect_key(song)?;
    let tonic_in_octave_4 = 60 + key.tonic_pc as i32;
    Ok((lowest..=highest)
        .map(|target| TranspositionTarget {
            target_pitch: target,
            target_tonic: pitch_name(target),
            semitone_offset: target as i32 - tonic_in_octave_4,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::{transpose, NoteEvent};

    fn song_from(notes: &[(u8, u32)]) -> MidiSong {
        let mut onset = 0;
        let events = notes
            .iter()
            .map(|&(pitch, dur)| {
                let n = NoteEvent::new(onset, dur, pitch, 90, 0).unwrap();
                onset += dur;
                n
            })
            .collect();
        MidiSong::single_track(480, 500_000, events).unwrap()
    }

    /// Naive correlation written out independently of `correlate_keys`.
    fn oracle_scores(hist: &[f64; 12]) -> Vec<(u8, Mode, f64)> {
        let mut out = Vec::new();
        for mode in [Mode::Major, Mode::Minor] {
            let profile = if mode == Mode::Major {
                MAJOR_PROFILE
            } else {
                MINOR_PROFILE
            };
            for tonic in 0..12u8 {
                let xs: Vec<f64> = hist.to_vec();
                let ys: Vec<f64> = (0..12)
                    .map(|pc| profile[(pc + 12 - tonic as usize) % 12])
                    .collect();
                let mx = xs.iter().sum::<f64>() / 12.0;
                let my = ys.iter().sum::<f64>() / 12.0;
                let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
                let sx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>().sqrt();
                let sy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>().sqrt();
                out.push((tonic, mode, cov / (sx * sy)));
            }
        }
        out
    }

    fn oracle_argmax(hist: &[f64; 12]) -> (u8, Mode) {
        let scores = oracle_scores(hist);
        let mut best = scores[0];
        for s in &scores[1..] {
            if s.2 > best.2 {
                best = *s;
            }
        }
        (best.0, best.1)
    }

    #[test]
    fn a_minor_weighted_song() {
        // Durations proportional to the A minor profile.
        let notes: Vec<(u8, u32)> = (0..12u8)
            .map(|pc| {
                let weight = MINOR_PROFILE[(pc as usize + 12 - 9) % 12];
                (60 + pc, (weight * 100.0) as u32)
            })
            .collect();
        let song = song_from(&notes);
        let key = detect_key(&song).unwrap();
        assert_eq!((key.tonic_pc, key.mode), (9, Mode::Minor));
        assert_eq!(
            (key.tonic_pc, key.mode),
            oracle_argmax(&song.pitch_class_histogram())
        );
        assert!(key.confidence > 0.0 && key.confidence <= 1.0);
    }

    #[test]
    fn single_middle_c() {
        let song = song_from(&[(60, 480)]);
        let key = detect_key(&song).unwrap();
        assert_eq!(key.tonic_pc, 0);
        assert_eq!(
            (key.tonic_pc, key.mode),
            oracle_argmax(&song.pitch_class_histogram())
        );
    }

    #[test]
    fn correlations_match_oracle() {
        let hist = [3.0, 0.0, 1.0, 0.5, 2.0, 1.0, 0.0, 2.5, 0.0, 1.0, 0.0, 0.25];
        let fast = correlate_keys(&hist);
        for (i, (_, _, r)) in oracle_scores(&hist).into_iter().enumerate() {
            assert!((fast[i] - r).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_song_is_an_error() {
        let song = MidiSong::new(480, 500_000, vec![vec![]]).unwrap();
        assert!(matches!(detect_key(&song), Err(Error::EmptySong)));
    }

    #[test]
    fn key_follows_transposition() {
        let song = song_from(&[(60, 480), (64, 240), (67, 240), (72, 960), (65, 240), (62, 240)]);
        let base = detect_key(&song).unwrap();
        for n in -12..=12 {
            let moved = detect_key(&transpose(&song, n).song).unwrap();
            assert_eq!(moved.tonic_pc as i32, (base.tonic_pc as i32 + n).rem_euclid(12));
            assert_eq!(moved.mode, base.mode);
        }
    }

    #[test]
    fn transposition_targets() {
        let c_song = song_from(&[(60, 960), (64, 480), (67, 480), (72, 480)]);
        assert_eq!(detect_key(&c_song).unwrap().tonic_pc, 0);
        let full = enumerate_transpositions(&c_song, 12, 119).unwrap();
        assert_eq!(full.len(), 108);
        assert_eq!(full[0].target_tonic, "C0");
        assert_eq!(full[0].semitone_offset, -48);
        assert_eq!(full[107].target_tonic, "B8");
        let octave: Vec<i32> = enumerate_transpositions(&c_song, 60, 71)
            .unwrap()
            .iter()
            .map(|t| t.semitone_offset)
            .collect();
        assert_eq!(octave, (0..12).collect::<Vec<_>>());
        assert_eq!(enumerate_transpositions(&c_song, 57, 57).unwrap().len(), 1);
        assert!(enumerate_transpositions(&c_song, 70, 60).is_err());
    }
}
