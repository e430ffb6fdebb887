use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Waveform {
    Sine,
    Square,
    Sawtooth,
    Triangle,
}

impl Waveform {
    /// Fourier sine-series terms `(multiple, coefficient)` with the
    /// fundamental normalized to 1.
    pub(crate) fn series(self, terms: usize) -> Vec<(usize, f64)> {
        match self {
            Waveform::Sine => vec![(1, 1.0)],
            Waveform::Square => (1..=terms).step_by(2).map(|m| (m, 1.0 / m as f64)).collect(),
            Waveform::Sawtooth => (1..=terms)
                .map(|m| (m, if m % 2 == 1 { 1.0 } else { -1.0 } / m as f64))
                .collect(),
            Waveform::Triangle => (1..=terms)
                .step_by(2)
                .map(|m| {
                    let sign = if (m - 1) / 2 % 2 == 0 { 1.0 } else { -1.0 };
                    (m, sign / (m * m) as f64)
                })
                .collect(),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sine" => Ok(Waveform::Sine),
            "square" => Ok(Waveform::Square),
            "sawtooth" | "saw" => Ok(Waveform::Sawtooth),
            "triangle" => Ok(Waveform::Triangle),
            other => Err(Error::InvalidProfile(format!("unknown waveform {other:?}"))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Waveform::Sine => "sine",
            Waveform::Square => "square",
            Waveform::Sawtooth => "sawtooth",
            Waveform::Triangle => "triangle",
        }
    }
}

/// Linear attack-decay-sustain-release envelope; times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Adsr {
    pub attack_s: f64,
    pub decay_s: f64,
    pub sustain_level: f64,
    pub release_s: f64,
}

impl Adsr {
    fn held_level(&self, t: f64) -> f64 {
        if t < self.attack_s {
            t / self.attack_s
        } else if t < self.attack_s + self.decay_s {
            1.0 - (1.0 - self.sustain_level) * (t - self.attack_s) / self.decay_s
        } else {
            self.sustain_level
        }
    }

    /// Envelope level `t` seconds after note-on for a note held `held_s`.
    pub fn level(&self, t: f64, held_s: f64) -> f64 {
        if t < held_s {
            self.held_level(t)
        } else if self.release_s > 0.0 && t < held_s + self.release_s {
            self.held_level(held_s) * (1.0 - (t - held_s) / self.release_s)
        } else {
            0.0
        }
    }
}

/// Timbre used to render notes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentProfile {
    pub name: String,
    pub waveform: Waveform,
    /// Weight of harmonic k (1-based) at index k-1.
    pub harmonic_amplitudes: Vec<f64>,
    pub adsr: Adsr,
    pub gain: f64,
}

impl InstrumentProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProfile(format!("{}: {msg}", self.name)));
        if self.name.trim().is_empty() {
            return Err(Error::InvalidProfile("empty profile name".into()));
        }
        if self.harmonic_amplitudes.is_empty() {
            return bad("no harmonics".into());
        }
        if let Some(a) = self
            .harmonic_amplitudes
            .iter()
            .find(|a| !a.is_finite() || **a < 0.0)
        {
            return bad(format!("harmonic amplitude {a} must be finite and >= 0"));
        }
        let Adsr {
            attack_s,
            decay_s,
            sustain_level,
            release_s,
        } = self.adsr;
        if [attack_s, decay_s, release_s]
            .iter()
            .any(|t| !t.is_finite() || *t < 0.0)
        {
            return bad("envelope times must be finite and >= 0".into());
        }
        if !(0.0..=1.0).contains(&sustain_level) {
            return bad(format!("sustain level {sustain_level} outside [0, 1]"));
        }
        if !(self.gain > 0.0 && self.gain <= 1.0) {
            return bad(format!("gain {} outside (0, 1]", self.gain));
        }
        Ok(())
    }

    /// Parses profiles from an INI-like text:
    ///
    /// ```text
    /// [name]
    /// waveform = sine | square | sawtooth | triangle
    /// harmonics = 1.0 0.5 0.25
    /// adsr = attack decay sustain release
    /// gain = 0.8
    /// ```
    ///
    /// `#` starts a comment line. All four keys are required.
    pub fn parse_many(text: &str) -> Result<Vec<InstrumentProfile>> {
        struct Partial {
            name: String,
            waveform: Option<Waveform>,
            harmonics: Option<Vec<f64>>,
            adsr: Option<Adsr>,
            gain: Option<f64>,
        }
        fn finish(p: Partial) -> Result<InstrumentProfile> {
            let missing = |k: &str| Error::InvalidProfile(format!("{}: missing {k}", p.name));
            let profile = InstrumentProfile {
                waveform: p.waveform.ok_or_else(|| missing("waveform"))?,
                harmonic_amplitudes: p.harmonics.clone().ok_or_else(|| missing("harmonics"))?,
                adsr: p.adsr.ok_or_else(|| missing("adsr"))?,
                gain: p.gain.ok_or_else(|| missing("gain"))?,
                name: p.name,
            };
            profile.validate()?;
            Ok(profile)
        }
        let numbers = |v: &str| -> Result<Vec<f64>> {
            v.split_whitespace()
                .map(|x| {
                    x.parse::<f64>()
                        .map_err(|_| Error::InvalidProfile(format!("invalid number {x:?}")))
                })
                .collect()
        };

        let mut out = Vec::new();
        let mut current: Option<Partial> = None;
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                if let Some(p) = current.take() {
                    out.push(finish(p)?);
                }
                current = Some(Partial {
                    name: name.trim().to_string(),
                    waveform: None,
                    harmonics: None,
                    adsr: None,
                    gain: None,
                });
                continue;
            }
            let p = current
                .as_mut()
                .ok_or_else(|| Error::InvalidProfile(format!("{line:?} outside a [section]")))?;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidProfile(format!("expected key = value: {line:?}")))?;
            match key.trim() {
                "waveform" => p.waveform = Some(Waveform::parse(value)?),
                "harmonics" => p.harmonics = Some(numbers(value)?),
                "adsr" => {
                    let v = numbers(value)?;
                    if v.len() != 4 {
                        return Err(Error::InvalidProfile("adsr needs 4 numbers".into()));
                    }
                    p.adsr = Some(Adsr {
                        attack_s: v[0],
                        decay_s: v[1],
                        sustain_level: v[2],
                        release_s: v[3],
                    });
                }
                "gain" => {
                    let v = numbers(value)?;
                    if v.len() != 1 {
                        return Err(Error::InvalidProfile("gain needs 1 number".into()));
                    }
                    p.gain = Some(v[0]);
                }
                other => return Err(Error::InvalidProfile(format!("unknown key {other:?}"))),
            }
        }
        if let Some(p) = current {
            out.push(finish(p)?);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
        format!(
            "[{}]\nwaveform = {}\nharmonics = {}\nadsr = {} {} {} {}\ngain = {}\n",
            self.name,
            self.waveform.name(),
            join(&self.harmonic_amplitudes),
            self.adsr.attack_s,
            self.adsr.decay_s,
            self.adsr.sustain_level,
            self.adsr.release_s,
            self.gain
        )
    }
}

const BUILTIN_PROFILES: &str = "\
[chiptune]
waveform = square
harmonics = 1.0
adsr = 0.0 0.0 1.0 0.02
gain = 0.5

[organ-like]
waveform = sine
harmonics = 1.0 0.8 0.6 0.0 0.4 0.0 0.0 0.3
adsr = 0.01 0.05 1.0 0.06
gain = 0.6

[piano-like]
waveform = sine
harmonics = 1.0 0.5 0.3 0.18 0.1 0.06
adsr = 0.005 0.6 0.25 0.25
gain = 0.8

[strings-like]
waveform = sawtooth
harmonics = 1.0
adsr = 0.25 0.2 0.85 0.4
gain = 0.6
";

/// The four built-in profiles, sorted by name. `chiptune` is the bright
/// square-wave voice.
pub fn builtin_profiles() -> Vec<InstrumentProfile> {
    InstrumentProfile::parse_many(BUILTIN_PROFILES).expect("built-in profiles are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid_and_round_trip() {
        let profiles = builtin_profiles();
        let names: Vec<&str> = profiles.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["chiptune", "organ-like", "piano-like", "strings-like"]);
        for p in &profiles {
            p.validate().unwrap();
            let back = InstrumentProfile::parse_many(&p.to_text()).unwrap();
            assert_eq!(back, vec![p.clone()]);
        }
    }

    #[test]
    fn parse_errors() {
        assert!(InstrumentProfile::parse_many("waveform = sine").is_err());
        assert!(InstrumentProfile::parse_many("[x]\nwaveform = noise").is_err());
        assert!(
            InstrumentProfile::parse_many("[x]\nwaveform = sine\nharmonics = 1\nadsr = 0 0 1\ngain = 1")
                .is_err()
        );
        assert!(InstrumentProfile::parse_many(
            "[x]\nwaveform = sine\nharmonics = -1\nadsr = 0 0 1 0\ngain = 1"
        )
        .is_err());
        assert!(InstrumentProfile::parse_many(
            "[x]\nwaveform = sine\nharmonics = 1\nadsr = 0 0 1.5 0\ngain = 1"
        )
        .is_err());
        assert!(
            InstrumentProfile::parse_many("[x]\nwaveform = sine\nharmonics = 1\nadsr = 0 0 1 0").is_err()
        );
    }

    #[test]
    fn envelope_shape() {
        let env = Adsr {
            attack_s: 0.1,
            decay_s: 0.1,
            sustain_level: 0.5,
            release_s: 0.2,
        };
        assert_eq!(env.level(0.0, 1.0), 0.0);
        assert!((env.level(0.05, 1.0) - 0.5).abs() < 1e-12);
        assert!((env.level(0.15, 1.0) - 0.75).abs() < 1e-12);
        assert_eq!(env.level(0.5, 1.0), 0.5);
        assert!((env.level(1.1, 1.0) - 0.25).abs() < 1e-12);
        assert_eq!(env.level(1.3, 1.0), 0.0);
        // Released during the attack: fades from the level reached.
        assert!((env.level(0.05, 0.05) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn waveform_series() {
        assert_eq!(Waveform::Sine.series(64), vec![(1, 1.0)]);
        let sq = Waveform::Square.series(7);
        assert_eq!(sq.iter().map(|t| t.0).collect::<Vec<_>>(), vec![1, 3, 5, 7]);
        let tri = Waveform::Triangle.series(5);
        assert_eq!(tri, vec![(1, 1.0), (3, -1.0 / 9.0), (5, 1.0 / 25.0)]);
    }
}
