//! RIFF/WAVE PCM-16 encoding and decoding.

use std::io::Cursor;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioClip;
use crate::{Error, Result};

/// Encodes a clip as 16-bit mono little-endian PCM with a 44-byte header.
pub fn write_wav(clip: &AudioClip) -> Vec<u8> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate_hz(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut cursor = Cursor::new(Vec::with_capacity(44 + 2 * clip.len()));
    {
        let mut writer = WavWriter::new(&mut cursor, spec).expect("in-memory header write");
        for &s in clip.samples() {
            let q = (s as f64 * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
            writer.write_sample(q).expect("in-memory sample write");
        }
        writer.finalize().expect("in-memory finalize");
    }
    cursor.into_inner()
}

/// Decodes 16-bit PCM (mono, or stereo averaged to mono). When
/// `target_rate_hz` is given and differs from the file's rate the samples
/// are resampled by linear interpolation.
pub fn read_wav(bytes: &[u8], target_rate_hz: Option<u32>) -> Result<AudioClip> {
    let reader = WavReader::new(Cursor::new(bytes)).map_err(map_hound)?;
    let spec = reader.spec();
    if spec.sample_format != SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedWav(format!(
            "{:?} {}-bit, only 16-bit integer PCM is supported",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    if !(1..=2).contains(&spec.channels) {
        return Err(Error::UnsupportedWav(format!("{} channels", spec.channels)));
    }
    if spec.sample_rate == 0 {
        return Err(Error::MalformedWav("zero sample rate".into()));
    }
    let raw = reader
        .into_samples::<i16>()
        .collect::<std::result::Result<Vec<i16>, _>>()
        .map_err(map_hound)?;
    let to_unit = |s: i16| (s as f64 / 32767.0).clamp(-1.0, 1.0);
    let mono: Vec<f64> = if spec.channels == 2 {
        if raw.len() % 2 != 0 {
            return Err(Error::MalformedWav("odd sample count for stereo data".into()));
        }
        raw.chunks_exact(2)
            .map(|f| (to_unit(f[0]) + to_unit(f[1])) / 2.0)
            .collect()
    } else {
        raw.into_iter().map(to_unit).collect()
    };
    let rate = target_rate_hz.unwrap_or(spec.sample_rate);
    let samples = if rate != spec.sample_rate {
        resample_linear(&mono, spec.sample_rate, rate)
    } else {
        mono
    };
    AudioClip::new(samples.into_iter().map(|s| s as f32).collect(), rate)
}

/// Linear-interpolation resampling; output length is the input length
/// scaled by `to / from`, rounded.
pub fn resample_linear(samples: &[f64], from_hz: u32, to_hz: u32) -> Vec<f64> {
    if samples.is_empty() || from_hz == to_hz {
        return samples.to_vec();
    }
    let out_len = (samples.len() as f64 * to_hz as f64 / from_hz as f64).round() as usize;
    let step = from_hz as f64 / to_hz as f64;
    let last = samples.len() - 1;
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * step;
            let idx = (pos.floor() as usize).min(last);
            let frac = pos - idx as f64;
            let next = (idx + 1).min(last);
            samples[idx] + (samples[next] - samples[idx]) * frac
        })
        .collect()
}

fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::Unsupported => Error::UnsupportedWav("unsupported encoding".into()),
        hound::Error::FormatError(msg) => Error::MalformedWav(msg.to_string()),
        other => Error::MalformedWav(other.to_string()),
    }
}
