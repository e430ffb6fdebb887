//! Deterministic accompaniment generation.
//!
//! Each 4/4 bar of the melody gets a diatonic triad label, every template of
//! a phrase library is scored against the bar's rhythm and chord, and the
//! winning template is realized on the chord. Templates are written in scale
//! degrees relative to the chord root, so the whole generator commutes with
//! transposition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::midi::{fold_pitch, KeyEstimate, MidiSong, Mode, NoteEvent};
use crate::{Error, Result};

pub const BEATS_PER_BAR: u32 = 4;
pub const RHYTHM_WEIGHT: f64 = 0.5;
pub const CHORD_WEIGHT: f64 = 0.5;
const DENSITY_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChordQuality {
    Major,
    Minor,
    Diminished,
}

impl ChordQuality {
    fn intervals(self) -> [u8; 3] {
        match self {
            ChordQuality::Major => [0, 4, 7],
            ChordQuality::Minor => [0, 3, 7],
            ChordQuality::Diminished => [0, 3, 6],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChordLabel {
    pub bar_index: usize,
    pub root_pc: u8,
    pub quality: ChordQuality,
    /// Scale degree of the root within the key, 0 = tonic.
    pub degree: u8,
}

impl ChordLabel {
    pub fn pitch_classes(&self) -> [u8; 3] {
        self.quality.intervals().map(|i| (self.root_pc + i) % 12)
    }
}

/// The seven diatonic triads of a key, indexed by scale degree.
pub fn diatonic_triads(key: &KeyEstimate) -> [(u8, ChordQuality); 7] {
    let scale = key.mode.scale();
    std::array::from_fn(|degree| {
        let root = scale[degree];
        let third = (scale[(degree + 2) % 7] + 12 - root) % 12;
        let fifth = (scale[(degree + 4) % 7] + 12 - root) % 12;
        let quality = match (third, fifth) {
            (4, 7) => ChordQuality::Major,
            (3, 7) => ChordQuality::Minor,
            (3, 6) => ChordQuality::Diminished,
            _ => unreachable!("diatonic triads are major, minor or diminished"),
        };
        ((key.tonic_pc + root) % 12, quality)
    })
}

fn fifths_distance(root_pc: u8, tonic_pc: u8) -> u8 {
    let k = ((root_pc as u32 + 12 - tonic_pc as u32) * 7 % 12) as u8;
    k.min(12 - k)
}

fn bar_ticks(song: &MidiSong) -> u32 {
    song.ticks_per_quarter() as u32 * BEATS_PER_BAR
}

fn bar_count(song: &MidiSong) -> usize {
    let end = song.span_ticks().map(|(_, e)| e).unwrap_or(0);
    end.div_ceil(bar_ticks(song)) as usize
}

/// Labels every bar with the diatonic triad whose pitch classes collect the
/// most sounding duration in that bar. Ties go to the root nearer the tonic
/// on the circle of fifths, then to the root closer above the tonic. Silent
/// bars repeat the previous label; a silent first bar gets the tonic triad.
pub fn detect_chords(song: &MidiSong, key: &KeyEstimate) -> Result<Vec<ChordLabel>> {
    if song.is_empty() {
        return Err(Error::EmptySong);
    }
    let triads = diatonic_triads(key);
    let bar_len = bar_ticks(song);
    let bars = bar_count(song);
    let mut labels: Vec<ChordLabel> = Vec::with_capacity(bars);

    for bar in 0..bars {
        let start = bar as u32 * bar_len;
        let end = start + bar_len;
        let mut hist = [0.0f64; 12];
        for n in song.notes() {
            let lo = n.onset_ticks.max(start);
            let hi = n.end_ticks().min(end);
            if hi > lo {
                hist[(n.pitch % 12) as usize] += (hi - lo) as f64;
            }
        }
        let label = if hist.iter().all(|&w| w == 0.0) {
            match labels.last() {
                Some(prev) => ChordLabel {
                    bar_index: bar,
                    ..*prev
                },
                None => ChordLabel {
                    bar_index: bar,
                    root_pc: triads[0].0,
                    quality: triads[0].1,
                    degree: 0,
                },
            }
        } else {
            let mut best: Option<(f64, u8, u8, usize)> = None;
            for (degree, &(root, quality)) in triads.iter().enumerate() {
                let score: f64 = quality
                    .intervals()
                    .iter()
                    .map(|i| hist[((root + i) % 12) as usize])
                    .sum();
                let fifths = fifths_distance(root, key.tonic_pc);
                let relative = (root + 12 - key.tonic_pc) % 12;
                let better = match best {
                    None => true,
                    Some((s, f, r, _)) => score > s || (score == s && (fifths, relative) < (f, r)),
                };
                if better {
                    best = Some((score, fifths, relative, degree));
                }
            }
            let degree = best.expect("seven candidates").3;
            ChordLabel {
                bar_index: bar,
                root_pc: triads[degree].0,
                quality: triads[degree].1,
                degree: degree as u8,
            }
        };
        labels.push(label);
    }
    Ok(labels)
}

/// A non-negative rational number of beats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Beats {
    pub num: u32,
    pub den: u32,
}

impl Beats {
    pub fn new(num: u32, den: u32) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidTemplate("zero denominator".into()));
        }
        Ok(Beats { num, den })
    }

    pub fn whole(beats: u32) -> Self {
        Beats { num: beats, den: 1 }
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn to_ticks(&self, ticks_per_quarter: u16) -> u32 {
        let scaled = self.num as u64 * ticks_per_quarter as u64;
        ((scaled + self.den as u64 / 2) / self.den as u64) as u32
    }
}

impl fmt::Display for Beats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Beats {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidTemplate(format!("invalid beat value {s:?}"));
        match s.split_once('/') {
            Some((n, d)) => Beats::new(
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            ),
            None => Ok(Beats::whole(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateEvent {
    pub offset: Beats,
    /// Scale-degree offsets from the chord root: 0, 2, 4 are the triad,
    /// anything else a diatonic passing tone. 7 is the root an octave up.
    pub voicing: Vec<i8>,
    pub duration: Beats,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseTemplate {
    id: String,
    events: Vec<TemplateEvent>,
}

impl PhraseTemplate {
    pub fn new(id: impl Into<String>, events: Vec<TemplateEvent>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.contains(['|', '\n']) {
            return Err(Error::InvalidTemplate(format!("invalid template id {id:?}")));
        }
        let bar = BEATS_PER_BAR as f64;
        for e in &events {
            let start = e.offset.as_f64();
            let len = e.duration.as_f64();
            if start >= bar || len <= 0.0 || start + len > bar + 1e-12 {
                return Err(Error::InvalidTemplate(format!(
                    "{id}: event at {} lasting {} leaves the bar",
                    e.offset, e.duration
                )));
            }
            if e.voicing.is_empty() {
                return Err(Error::InvalidTemplate(format!("{id}: empty voicing")));
            }
        }
        Ok(PhraseTemplate { id, events })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn events(&self) -> &[TemplateEvent] {
        &self.events
    }

    /// Events per beat.
    pub fn rhythm_density(&self) -> f64 {
        self.events.len() as f64 / BEATS_PER_BAR as f64
    }

    /// Fraction of voicing tones that land on a triad tone of the chord.
    pub fn chord_tone_fraction(&self) -> f64 {
        let tones: Vec<i8> = self
            .events
            .iter()
            .flat_map(|e| e.voicing.iter().copied())
            .collect();
        if tones.is_empty() {
            return 0.0;
        }
        let hits = tones
            .iter()
            .filter(|&&o| matches!(o.rem_euclid(7), 0 | 2 | 4))
            .count();
        hits as f64 / tones.len() as f64
    }
}

/// Scores how well a template suits a bar: half rhythm agreement, half
/// chord-tone coverage. Always in `[0, 1]`.
///
/// The chord only matters through the template's chord-relative voicing,
/// whose chord tones are the same for every diatonic triad.
pub fn fitness(template: &PhraseTemplate, _chord: &ChordLabel, melody_bar_density: f64) -> f64 {
    let td = template.rhythm_density();
    let md = melody_bar_density.max(0.0);
    let rhythm = 1.0 - (td - md).abs() / td.max(md).max(DENSITY_EPSILON);
    RHYTHM_WEIGHT * rhythm + CHORD_WEIGHT * template.chord_tone_fraction()
}

/// An ordered set of phrase templates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateLibrary {
    templates: Vec<PhraseTemplate>,
}

const BUILTIN_TEMPLATES: &str = "\
# id | onsets (beats) | voicings (scale degrees from the chord root) | durations (beats)
pad-whole        | 0                           | 0,2,4                   | 4
pad-half         | 0 2                         | 0,2,4 0,2,4             | 2 2
block-quarters   | 0 1 2 3                     | 0,2,4 0,2,4 0,2,4 0,2,4 | 1 1 1 1
root-fifth       | 0 2                         | 0 4                     | 2 2
oom-pah          | 0 1 2 3                     | 0 2,4 0 2,4             | 1 1 1 1
charleston       | 0 3/2                       | 0,2,4 0,2,4             | 3/2 5/2
alberti          | 0 1/2 1 3/2 2 5/2 3 7/2     | 0 4 2 4 0 4 2 4         | 1/2 1/2 1/2 1/2 1/2 1/2 1/2 1/2
arpeggio-up      | 0 1/2 1 3/2 2 5/2 3 7/2     | 0 2 4 7 0 2 4 7         | 1/2 1/2 1/2 1/2 1/2 1/2 1/2 1/2
walking-passing  | 0 1/2 1 3/2 2 5/2 3 7/2     | 0 1 2 3 4 3 2 1         | 1/2 1/2 1/2 1/2 1/2 1/2 1/2 1/2
";

impl TemplateLibrary {
    pub fn new(templates: Vec<PhraseTemplate>) -> Result<Self> {
        if templates.is_empty() {
            return Err(Error::InvalidTemplate("library has no templates".into()));
        }
        Ok(TemplateLibrary { templates })
    }

    /// The embedded library, sparse pads through eighth-note arpeggios.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TEMPLATES).expect("built-in templates are valid")
    }

    pub fn templates(&self) -> &[PhraseTemplate] {
        &self.templates
    }

    /// Parses the plain-text template format:
    ///
    /// ```text
    /// # comment
    /// id | onsets | voicings | durations
    /// ```
    ///
    /// Onsets and durations are whitespace-separated beat values (`1`,
    /// `3/2`); voicings are whitespace-separated groups of comma-separated
    /// scale-degree offsets. The three lists must have equal length.
    pub fn parse(text: &str) -> Result<Self> {
        let mut templates = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| Error::InvalidTemplate(format!("line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split('|').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(err("expected 4 '|'-separated fields"));
            }
            let onsets = fields[1]
                .split_whitespace()
                .map(Beats::from_str)
                .collect::<Result<Vec<_>>>()?;
            let voicings = fields[2]
                .split_whitespace()
                .map(|group| {
                    group
                        .split(',')
                        .map(|d| d.trim().parse::<i8>().map_err(|_| err("bad scale degree")))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let durations = fields[3]
                .split_whitespace()
                .map(Beats::from_str)
                .collect::<Result<Vec<_>>>()?;
            if onsets.len() != voicings.len() || onsets.len() != durations.len() {
                return Err(err("onset, voicing and duration counts differ"));
            }
            let events = onsets
                .into_iter()
                .zip(voicings)
                .zip(durations)
                .map(|((offset, voicing), duration)| TemplateEvent {
                    offset,
                    voicing,
                    duration,
                })
                .collect();
            templates.push(PhraseTemplate::new(fields[0], events)?);
        }
        Self::new(templates)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# id | onsets | voicings | durations\n");
        for t in &self.templates {
            let join =
                |f: &dyn Fn(&TemplateEvent) -> String| t.events.iter().map(f).collect::<Vec<_>>().join(" ");
            out.push_str(&format!(
                "{} | {} | {} | {}\n",
                t.id,
                join(&|e| e.offset.to_string()),
                join(&|e| e.voicing.iter().map(i8::to_string).collect::<Vec<_>>().join(",")),
                join(&|e| e.duration.to_string()),
            ));
        }
        out
    }
}

/// Generated accompaniment on its own channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accompaniment {
    pub channel: u8,
    pub events: Vec<NoteEvent>,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn accompaniment_channel(melody_channels: &[u8]) -> u8 {
    (1..16u8)
        .filter(|&c| c != 9)
        .chain([9, 0])
        .find(|c| !melody_channels.contains(c))
        .unwrap_or(15)
}

/// Pitch of a scale degree counted from the tonic at `anchor`.
fn degree_pitch(anchor: i32, mode: Mode, degree: i32) -> i32 {
    let scale = mode.scale();
    anchor + 12 * degree.div_euclid(7) + scale[degree.rem_euclid(7) as usize] as i32
}

/// Chord-relative scale degrees of a template after raising the lowest
/// `inversion` triad members by an octave.
fn inverted(voicing: &[i8], inversion: u8) -> impl Iterator<Item = i32> + '_ {
    voicing.iter().map(move |&o| {
        let member = match o.rem_euclid(7) {
            0 => Some(0),
            2 => Some(1),
            4 => Some(2),
            _ => None,
        };
        match member {
            Some(m) if m < inversion => o as i32 + 7,
            _ => o as i32,
        }
    })
}

/// Harmonizes with the built-in template library.
pub fn harmonize(song: &MidiSong, key: &KeyEstimate, seed: u64) -> Result<Accompaniment> {
    harmonize_with(song, key, seed, &TemplateLibrary::builtin())
}

/// Picks the fittest template per bar and realizes it on the bar's chord.
///
/// Ties go to the lexicographically smaller template id and, between
/// templates sharing an id, to a hash of `(seed, bar, position)`. The voicing
/// inversion is chosen to sit closest to a fifth above the accompaniment
/// tonic, except that a template repeated from the previous bar keeps the
/// previous inversion.
pub fn harmonize_with(
    song: &MidiSong,
    key: &KeyEstimate,
    seed: u64,
    library: &TemplateLibrary,
) -> Result<Accompaniment> {
    let chords = detect_chords(song, key)?;
    let (span_start, span_end) = song.span_ticks().ok_or(Error::EmptySong)?;
    let tpq = song.ticks_per_quarter();
    let bar_len = bar_ticks(song);

    let count = song.note_count() as i64;
    let pitch_sum: i64 = song.notes().map(|n| n.pitch as i64).sum();
    let velocity_sum: i64 = song.notes().map(|n| n.velocity as i64).sum();
    let mean_pitch = pitch_sum.div_euclid(count) as i32;
    // Highest tonic at least an octave under the melody's mean pitch.
    let ceiling = mean_pitch - 12;
    let anchor = ceiling - (ceiling - key.tonic_pc as i32).rem_euclid(12);
    let center = anchor + 7;
    let velocity = ((velocity_sum * 7 + count * 5) / (count * 10)).clamp(1, 127) as u8;
    let channel = accompaniment_channel(&song.channels());

    let mut events = Vec::new();
    let mut previous: Option<(usize, u8)> = None;
    for chord in &chords {
        let bar_start = chord.bar_index as u32 * bar_len;
        let bar_end = bar_start + bar_len;
        let onsets = song
            .notes()
            .filter(|n| n.onset_ticks >= bar_start && n.onset_ticks < bar_end)
            .count();
        let density = onsets as f64 / BEATS_PER_BAR as f64;

        let mut best: Option<(f64, usize)> = None;
        for (i, t) in library.templates.iter().enumerate() {
            let score = fitness(t, chord, density);
            let better = match best {
                None => true,
                Some((s, j)) => {
                    let other = &library.templates[j];
                    if score != s {
                        score > s
                    } else if t.id != other.id {
                        t.id < other.id
                    } else {
                        let tag = |k: usize| {
                            splitmix64(seed ^ splitmix64(((chord.bar_index as u64) << 32) | k as u64))
                        };
                        tag(i) < tag(j)
                    }
                }
            };
            if better {
                best = Some((score, i));
            }
        }
        let index = best.expect("library is non-empty").1;
        let template = &library.templates[index];

        let inversion = match previous {
            Some((prev_index, inv)) if prev_index == index => inv,
            _ => (0..3u8)
                .min_by_key(|&inv| {
                    let pitches: Vec<i32> = template
                        .events
                        .iter()
                        .flat_map(|e| inverted(&e.voicing, inv))
                        .map(|d| degree_pitch(anchor, key.mode, chord.degree as i32 + d))
                        .collect();
                    let sum: i32 = pitches.iter().sum();
                    // |mean - center| scaled by the tone count, kept integral
                    (sum - center * pitches.len() as i32).abs()
                })
                .expect("three inversions"),
        };
        previous = Some((index, inversion));

        for e in &template.events {
            let onset = bar_start + e.offset.to_ticks(tpq);
            if onset < span_start || onset >= span_end {
                continue;
            }
            let end = (onset + e.duration.to_ticks(tpq).max(1)).min(span_end);
            for d in inverted(&e.voicing, inversion) {
                let (pitch, _) = fold_pitch(degree_pitch(anchor, key.mode, chord.degree as i32 + d));
                events.push(NoteEvent {
                    onset_ticks: onset,
                    duration_ticks: end - onset,
                    pitch,
                    velocity,
                    channel,
                });
            }
        }
    }
    Ok(Accompaniment { channel, events })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::midi::transpose;

    fn key(tonic_pc: u8, mode: Mode) -> KeyEstimate {
        KeyEstimate {
            tonic_pc,
            mode,
            confidence: 1.0,
        }
    }

    fn bar_of(pitches: &[u8]) -> MidiSong {
        let notes = pitches
            .iter()
            .enumerate()
            .map(|(i, &p)| NoteEvent::new(i as u32 * 480, 480, p, 90, 0).unwrap())
            .collect();
        MidiSong::single_track(480, 500_000, notes).unwrap()
    }

    /// Dot product of the bar histogram with each triad's indicator vector,
    /// computed directly from pitch-class sets.
    fn oracle_best(pitches: &[u8], triads: &[(u8, &[u8])]) -> u8 {
        let mut best = (0usize, 0u8);
        for &(root, pcs) in triads {
            let score = pitches.iter().filter(|p| pcs.contains(&(*p % 12))).count();
            if score > best.0 {
                best = (score, root);
            }
        }
        best.1
    }

    #[test]
    fn triads_of_c_major_and_a_minor() {
        let c = diatonic_triads(&key(0, Mode::Major));
        assert_eq!(c[0], (0, ChordQuality::Major));
        assert_eq!(c[1], (2, ChordQuality::Minor));
        assert_eq!(c[6], (11, ChordQuality::Diminished));
        let a = diatonic_triads(&key(9, Mode::Minor));
        assert_eq!(a[0], (9, ChordQuality::Minor));
        assert_eq!(a[1], (11, ChordQuality::Diminished));
        assert_eq!(a[2], (0, ChordQuality::Major));
    }

    #[test]
    fn c_major_triad_bar() {
        let chords = detect_chords(&bar_of(&[60, 64, 67, 72]), &key(0, Mode::Major)).unwrap();
        assert_eq!(chords.len(), 1);
        assert_eq!((chords[0].root_pc, chords[0].quality), (0, ChordQuality::Major));
        let c_major: Vec<(u8, &[u8])> = vec![
            (0, &[0, 4, 7]),
            (2, &[2, 5, 9]),
            (4, &[4, 7, 11]),
            (5, &[5, 9, 0]),
            (7, &[7, 11, 2]),
            (9, &[9, 0, 4]),
            (11, &[11, 2, 5]),
        ];
        assert_eq!(oracle_best(&[60, 64, 67, 72], &c_major), 0);
    }

    #[test]
    fn a_minor_triad_bar() {
        let chords = detect_chords(&bar_of(&[57, 60, 64, 69]), &key(9, Mode::Minor)).unwrap();
        assert_eq!((chords[0].root_pc, chords[0].quality), (9, ChordQuality::Minor));
    }

    #[test]
    fn silent_bars_carry_labels() {
        // Bar 0 silent, bar 1 on G major, bar 2 silent, bar 3 on C.
        let notes = vec![
            NoteEvent::new(1920, 480, 67, 90, 0).unwrap(),
            NoteEvent::new(2400, 480, 71, 90, 0).unwrap(),
            NoteEvent::new(2880, 480, 74, 90, 0).unwrap(),
            NoteEvent::new(5760, 1920, 60, 90, 0).unwrap(),
        ];
        let song = MidiSong::single_track(480, 500_000, notes).unwrap();
        let chords = detect_chords(&song, &key(0, Mode::Major)).unwrap();
        assert_eq!(chords.len(), 4);
        assert_eq!(chords[0].root_pc, 0);
        assert_eq!(chords[1].root_pc, 7);
        assert_eq!(chords[2].root_pc, 7);
        assert_eq!(chords[2].bar_index, 2);
        assert_eq!(chords[3].root_pc, 0);
    }

    #[test]
    fn fitness_cases() {
        let chord = ChordLabel {
            bar_index: 0,
            root_pc: 0,
            quality: ChordQuality::Major,
            degree: 0,
        };
        let lib = TemplateLibrary::builtin();
        let block = lib
            .templates()
            .iter()
            .find(|t| t.id() == "block-quarters")
            .unwrap();
        assert_eq!(fitness(block, &chord, 1.0), 1.0);

        let half = PhraseTemplate::new(
            "half",
            vec![
                TemplateEvent {
                    offset: Beats::whole(0),
                    voicing: vec![0],
                    duration: Beats::whole(2),
                },
                TemplateEvent {
                    offset: Beats::whole(2),
                    voicing: vec![1],
                    duration: Beats::whole(2),
                },
            ],
        )
        .unwrap();
        assert!((fitness(&half, &chord, 0.5) - 0.75).abs() < 1e-15);

        let passing = PhraseTemplate::new(
            "passing",
            vec![TemplateEvent {
                offset: Beats::whole(0),
                voicing: vec![1, 3],
                duration: Beats::whole(4),
            }],
        )
        .unwrap();
        assert!(fitness(&passing, &chord, 1e9) < 1e-9);
        assert_eq!(fitness(&passing, &chord, 0.25), 0.5);
    }

    #[test]
    fn builtin_library_spans_densities() {
        let lib = TemplateLibrary::builtin();
        assert!(lib.templates().len() >= 8);
        let densities: Vec<f64> = lib
            .templates()
            .iter()
            .map(PhraseTemplate::rhythm_density)
            .collect();
        assert_eq!(densities.iter().cloned().fold(f64::INFINITY, f64::min), 0.25);
        assert_eq!(densities.iter().cloned().fold(0.0, f64::max), 2.0);
        assert_eq!(TemplateLibrary::parse(&lib.to_text()).unwrap(), lib);
    }

    #[test]
    fn template_parse_errors() {
        assert!(TemplateLibrary::parse("").is_err());
        assert!(TemplateLibrary::parse("a | 0 1 | 0 | 1").is_err());
        assert!(TemplateLibrary::parse("a | 0 | x | 1").is_err());
        assert!(TemplateLibrary::parse("a | 3 | 0 | 2").is_err());
        assert!(TemplateLibrary::parse("a | 0 | 0 | 1/0").is_err());
    }

    #[test]
    fn harmonize_empty_melody_fails() {
        let song = MidiSong::new(480, 500_000, vec![vec![]]).unwrap();
        assert!(matches!(
            harmonize(&song, &key(0, Mode::Major), 1),
            Err(Error::EmptySong)
        ));
    }

    #[test]
    fn harmonize_is_deterministic_and_diatonic() {
        let song = bar_of(&[60, 62, 64, 65, 67, 69, 71, 72, 74, 72, 67, 64]);
        let k = key(0, Mode::Major);
        let a = harmonize(&song, &k, 3).unwrap();
        let b = harmonize(&song, &k, 3).unwrap();
        assert_eq!(a, b);
        assert!(!a.events.is_empty());
        assert_ne!(a.channel, 0);
        let (start, end) = song.span_ticks().unwrap();
        for n in &a.events {
            assert!([0, 2, 4, 5, 7, 9, 11].contains(&(n.pitch % 12)));
            assert!(n.onset_ticks >= start && n.end_ticks() <= end);
            assert_eq!(n.channel, a.channel);
        }
    }

    #[test]
    fn harmonize_commutes_with_transposition() {
        let song = bar_of(&[62, 66, 69, 74, 71, 67, 64, 66, 62, 61, 62, 69]);
        let k = crate::midi::detect_key(&song).unwrap();
        let base = harmonize(&song, &k, 0).unwrap();
        for n in [-7, -2, 1, 5, 11] {
            let moved = transpose(&song, n).song;
            let mk = crate::midi::detect_key(&moved).unwrap();
            let acc = harmonize(&moved, &mk, 0).unwrap();
            let expected: Vec<u8> = base.events.iter().map(|e| (e.pitch as i32 + n) as u8).collect();
            let got: Vec<u8> = acc.events.iter().map(|e| e.pitch).collect();
            assert_eq!(got, expected, "offset {n}");
        }
    }

    #[test]
    fn repeated_template_keeps_inversion() {
        // Two identical bars: same template, so identical voicing shapes.
        let song = bar_of(&[60, 64, 67, 64, 60, 64, 67, 64]);
        let acc = harmonize(&song, &key(0, Mode::Major), 0).unwrap();
        let bar = |b: u32| -> Vec<u8> {
            acc.events
                .iter()
                .filter(|e| e.onset_ticks / 1920 == b)
                .map(|e| e.pitch)
                .collect()
        };
        assert_eq!(bar(0), bar(1));
    }
}
