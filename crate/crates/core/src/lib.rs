//! Emotion-directed manipulation of symbolic melodies.
//!
//! A melody is transposed across a range of keys, harmonized with a
//! deterministic accompaniment generator, rendered through a small set of
//! instrument profiles and scored by a four-quadrant emotion classifier.
//! Each candidate is placed on Russell's valence/arousal plane and the one
//! closest to a requested emotion is selected.
//!
//! Module map:
//!
//! - [`midi`]: Standard MIDI File I/O, transposition and key detection.
//! - [`harmony`]: chord detection and template-based accompaniment.
//! - [`synth`]: instrument profiles, additive rendering and WAV I/O.
//! - [`emotion`]: audio features, the softmax classifier and corpora.
//! - [`circumplex`]: probability to plane mapping, distances and SVG plots.
//! - [`pipeline`]: baseline analysis, candidate sweeps and reports.

pub mod circumplex;
pub mod emotion;
pub mod error;
pub mod harmony;
pub mod midi;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
