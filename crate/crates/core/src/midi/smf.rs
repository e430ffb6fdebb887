//! Standard MIDI File (format 0/1) reading and writing.
//!
//! Byte-level chunk and event coding is delegated to `midly`; this module
//! resolves note-on/note-off pairs into [`NoteEvent`]s and back.

use std::collections::{HashMap, VecDeque};

use midly::num::{u15, u24, u28, u4, u7};
use midly::{Format, Header, MetaMessage, MidiMessage, Smf, Timing, TrackEvent, TrackEventKind};

use super::{MidiSong, NoteEvent, DEFAULT_TEMPO_US_PER_QUARTER};
use crate::{Error, Result};

/// Irregularities tolerated while parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MidiWarning {
    /// A note-on never matched by a note-off; closed at the end of its track.
    DanglingNoteOn {
        track: usize,
        channel: u8,
        pitch: u8,
        onset_ticks: u32,
    },
    /// A note-off with no open note on the same channel and pitch.
    OrphanNoteOff {
        track: usize,
        channel: u8,
        pitch: u8,
        ticks: u32,
    },
    /// Tempo events after the first one are ignored.
    ExtraTempoIgnored { track: usize, ticks: u32 },
}

pub fn parse_midi(bytes: &[u8]) -> Result<MidiSong> {
    parse_midi_with_warnings(bytes).map(|(song, _)| song)
}

pub fn parse_midi_with_warnings(bytes: &[u8]) -> Result<(MidiSong, Vec<MidiWarning>)> {
    let smf = Smf::parse(bytes).map_err(|e| Error::MalformedMidi(e.to_string()))?;
    if smf.header.format == Format::Sequential {
        return Err(Error::UnsupportedMidi("SMF format 2 is not supported".into()));
    }
    let ticks_per_quarter = match smf.header.timing {
        Timing::Metrical(tpq) if tpq.as_int() > 0 => tpq.as_int(),
        Timing::Metrical(_) => {
            return Err(Error::MalformedMidi("zero ticks per quarter".into()));
        }
        Timing::Timecode(..) => {
            return Err(Error::UnsupportedMidi("SMPTE timecode division".into()));
        }
    };

    let mut warnings = Vec::new();
    let mut tempo: Option<u32> = None;
    let mut tracks = Vec::with_capacity(smf.tracks.len());

    for (track_index, track) in smf.tracks.iter().enumerate() {
        // (channel, pitch) -> queue of (onset, velocity, order of the note-on)
        let mut open: HashMap<(u8, u8), VecDeque<(u32, u8, usize)>> = HashMap::new();
        let mut resolved: Vec<(usize, NoteEvent)> = Vec::new();
        let mut next_order = 0usize;
        let mut now: u32 = 0;

        for event in track {
            now = now.saturating_add(event.delta.as_int());
            match event.kind {
                TrackEventKind::Meta(MetaMessage::Tempo(t)) => {
                    if tempo.is_none() {
                        tempo = Some(t.as_int());
                    } else {
                        warnings.push(MidiWarning::ExtraTempoIgnored {
                            track: track_index,
                            ticks: now,
                        });
                    }
                }
                TrackEventKind::Midi { channel, message } => {
                    let channel = channel.as_int();
                    let (key, on_velocity) = match message {
                        MidiMessage::NoteOn { key, vel } if vel.as_int() > 0 => {
                            (key.as_int(), Some(vel.as_int()))
                        }
                        MidiMessage::NoteOn { key, .. } | MidiMessage::NoteOff { key, .. } => {
                            (key.as_int(), None)
                        }
                        _ => continue,
                    };
                    match on_velocity {
                        Some(velocity) => {
                            open.entry((channel, key))
                                .or_default()
                                .push_back((now, velocity, next_order));
                            next_order += 1;
                        }
                        None => match open.get_mut(&(channel, key)).and_then(VecDeque::pop_front) {
                            Some((onset, velocity, order)) => resolved.push((
                                order,
                                NoteEvent {
                                    onset_ticks: onset,
                                    duration_ticks: (now - onset).max(1),
                                    pitch: key,
                                    velocity,
                                    channel,
                                },
                            )),
                            None => warnings.push(MidiWarning::OrphanNoteOff {
                                track: track_index,
                                channel,
                                pitch: key,
                                ticks: now,
                            }),
                        },
                    }
                }
                _ => {}
            }
        }

        let mut dangling: Vec<_> = open
            .into_iter()
            .flat_map(|((channel, pitch), queue)| queue.into_iter().map(move |q| (channel, pitch, q)))
            .collect();
        dangling.sort_by_key(|&(_, _, (_, _, order))| order);
        for (channel, pitch, (onset, velocity, order)) in dangling {
            warnings.push(MidiWarning::DanglingNoteOn {
                track: track_index,
                channel,
                pitch,
                onset_ticks: onset,
            });
            resolved.push((
                order,
                NoteEvent {
                    onset_ticks: onset,
                    duration_ticks: (now - onset).max(1),
                    pitch,
                    velocity,
                    channel,
                },
            ));
        }

        resolved.sort_by_key(|&(order, note)| (note.onset_ticks, order));
        tracks.push(resolved.into_iter().map(|(_, n)| n).collect());
    }

    let song = MidiSong::new(
        ticks_per_quarter,
        tempo.unwrap_or(DEFAULT_TEMPO_US_PER_QUARTER),
        tracks,
    )?;
    Ok((song, warnings))
}

/// Encodes a song as SMF format 0 (one track) or format 1 (several tracks).
/// The tempo is written once, at tick 0 of the first track.
pub fn write_midi(song: &MidiSong) -> Vec<u8> {
    let format = if song.tracks().len() <= 1 {
        Format::SingleTrack
    } else {
        Format::Parallel
    };
    let header = Header::new(format, Timing::Metrical(u15::new(song.ticks_per_quarter())));
    let empty = Vec::new();
    let note_tracks: Vec<&Vec<NoteEvent>> = if song.tracks().is_empty() {
        vec![&empty]
    } else {
        song.tracks().iter().collect()
    };

    let mut smf = Smf::new(header);
    for (index, notes) in note_tracks.into_iter().enumerate() {
        // (tick, note-offs before note-ons, emission order)
        let mut timeline: Vec<(u32, u8, usize, TrackEventKind<'static>)> = Vec::new();
        for (i, n) in notes.iter().enumerate() {
            let channel = u4::new(n.channel);
            let key = u7::new(n.pitch);
            timeline.push((
                n.onset_ticks,
                1,
                i,
                TrackEventKind::Midi {
                    channel,
                    message: MidiMessage::NoteOn {
                        key,
                        vel: u7::new(n.velocity),
                    },
                },
            ));
            timeline.push((
                n.end_ticks(),
                0,
                i,
                TrackEventKind::Midi {
                    channel,
                    message: MidiMessage::NoteOff { key, vel: u7::new(0) },
                },
            ));
        }
        timeline.sort_by_key(|&(tick, class, order, _)| (tick, class, order));

        let mut events = Vec::with_capacity(timeline.len() + 2);
        if index == 0 {
            events.push(TrackEvent {
                delta: u28::new(0),
                kind: TrackEventKind::Meta(MetaMessage::Tempo(u24::new(song.tempo_us_per_quarter()))),
            });
        }
        let mut last = 0u32;
        for (tick, _, _, kind) in timeline {
            events.push(TrackEvent {
                delta: u28::new(tick - last),
                kind,
            });
            last = tick;
        }
        events.push(TrackEvent {
            delta: u28::new(0),
            kind: TrackEventKind::Meta(MetaMessage::EndOfTrack),
        });
        smf.tracks.push(events);
    }

    let mut out = Vec::new();
    smf.write_std(&mut out).expect("writing to a Vec<u8> cannot fail");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One-note SMF-0 file assembled by hand: C4, one quarter at 480 tpq,
    /// tempo 500000 us/quarter.
    pub(crate) const ONE_NOTE_SMF0: &[u8] = &[
        b'M', b'T', b'h', b'd', 0, 0, 0, 6, 0, 0, 0, 1, 0x01, 0xE0, // header
        b'M', b'T', b'r', b'k', 0, 0, 0, 20, // track, 20 bytes
        0x00, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20, // tempo 500000
        0x00, 0x90, 60, 100, // note on
        0x83, 0x60, 0x80, 60, 0, // delta 480, note off
        0x00, 0xFF, 0x2F, 0x00, // end of track
    ];

    #[test]
    fn parses_hand_assembled_file() {
        let song = parse_midi(ONE_NOTE_SMF0).unwrap();
        assert_eq!(song.ticks_per_quarter(), 480);
        assert_eq!(song.tempo_us_per_quarter(), 500_000);
        assert_eq!(song.note_count(), 1);
        let n = song.tracks()[0][0];
        assert_eq!(
            n,
            NoteEvent {
                onset_ticks: 0,
                duration_ticks: 480,
                pitch: 60,
                velocity: 100,
                channel: 0
            }
        );
        assert_eq!(parse_midi(&write_midi(&song)).unwrap(), song);
    }

    #[test]
    fn default_tempo_when_absent() {
        let bytes = [
            b'M', b'T', b'h', b'd', 0, 0, 0, 6, 0, 0, 0, 1, 0x00, 0x60, b'M', b'T', b'r', b'k', 0, 0, 0, 4,
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let song = parse_midi(&bytes).unwrap();
        assert_eq!(song.tempo_us_per_quarter(), DEFAULT_TEMPO_US_PER_QUARTER);
        assert_eq!(song.note_count(), 0);
        assert_eq!(song.tracks().len(), 1);
    }

    #[test]
    fn rejects_bad_header_and_format_2() {
        assert!(matches!(
            parse_midi(b"MThx\0\0\0\x06\0\0\0\x01\x01\xE0"),
            Err(Error::MalformedMidi(_))
        ));
        assert!(parse_midi(&[]).is_err());
        let mut fmt2 = ONE_NOTE_SMF0.to_vec();
        fmt2[9] = 2;
        assert!(matches!(parse_midi(&fmt2), Err(Error::UnsupportedMidi(_))));
    }

    #[test]
    fn dangling_note_on_is_closed_at_track_end() {
        let bytes = [
            b'M', b'T', b'h', b'd', 0, 0, 0, 6, 0, 0, 0, 1, 0x00, 0x60, // header
            b'M', b'T', b'r', b'k', 0, 0, 0, 8, //
            0x00, 0x90, 64, 80, // note on, never released
            0x60, 0xFF, 0x2F, 0x00, // end of track at tick 96
        ];
        let (song, warnings) = parse_midi_with_warnings(&bytes).unwrap();
        assert_eq!(song.tracks()[0][0].duration_ticks, 96);
        assert_eq!(
            warnings,
            vec![MidiWarning::DanglingNoteOn {
                track: 0,
                channel: 0,
                pitch: 64,
                onset_ticks: 0
            }]
        );
    }

    #[test]
    fn velocity_zero_note_on_is_note_off() {
        let bytes = [
            b'M', b'T', b'h', b'd', 0, 0, 0, 6, 0, 0, 0, 1, 0x00, 0x60, //
            b'M', b'T', b'r', b'k', 0, 0, 0, 12, //
            0x00, 0x91, 67, 70, // on, channel 1
            0x30, 0x91, 67, 0, // running status would also work; explicit here
            0x00, 0xFF, 0x2F, 0x00,
        ];
        let song = parse_midi(&bytes).unwrap();
        let n = song.tracks()[0][0];
        assert_eq!((n.channel, n.pitch, n.duration_ticks), (1, 67, 0x30));
    }

    #[test]
    fn empty_song_writes_parseable_file() {
        let song = MidiSong::new(480, 600_000, vec![]).unwrap();
        let parsed = parse_midi(&write_midi(&song)).unwrap();
        assert_eq!(parsed.note_count(), 0);
        assert_eq!(parsed.tempo_us_per_quarter(), 600_000);
    }

    #[test]
    fn multi_track_uses_format_1() {
        let a = NoteEvent::new(0, 100, 60, 90, 0).unwrap();
        let b = NoteEvent::new(50, 100, 48, 60, 2).unwrap();
        let song = MidiSong::new(96, 400_000, vec![vec![a], vec![b]]).unwrap();
        let bytes = write_midi(&song);
        assert_eq!(&bytes[8..10], &[0, 1]);
        assert_eq!(parse_midi(&bytes).unwrap(), song);
    }
}
