use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use emoshift::emotion::{quadrant_melody, Quadrant};
use emoshift::midi::write_midi;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emoshift"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    _dir: TempDir,
    corpus: PathBuf,
    model: PathBuf,
    happy_mid: PathBuf,
    sad_mid: PathBuf,
}

/// A small corpus, a model trained on it, and two melodies.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let corpus = dir.path().join("corpus");
        ok(&["synth-corpus", "--n", "6", "--seed", "4", "--out-dir", s(&corpus)]);
        let model_dir = dir.path().join("model");
        ok(&[
            "train",
            "--manifest",
            s(&corpus.join("manifest.csv")),
            "--out-dir",
            s(&model_dir),
        ]);
        let happy_mid = dir.path().join("happy.mid");
        std::fs::write(&happy_mid, write_midi(&quadrant_melody(Quadrant::Q1, 21))).unwrap();
        let sad_mid = dir.path().join("sad.mid");
        std::fs::write(&sad_mid, write_midi(&quadrant_melody(Quadrant::Q3, 22))).unwrap();
        Fixture {
            corpus,
            model: model_dir.join("model.json"),
            happy_mid,
            sad_mid,
            _dir: dir,
        }
    })
}

#[test]
fn help_lists_subcommands_and_flags() {
    let help = ok(&["--help"]);
    for cmd in ["train", "eval", "analyze", "transform", "sweep", "synth-corpus"] {
        assert!(help.contains(cmd), "{cmd}");
    }
    let sweep = ok(&["sweep", "--help"]);
    for flag in [
        "--low",
        "--high",
        "--profiles",
        "--workers",
        "--sample-rate",
        "--radius",
        "--seed",
        "--target",
    ] {
        assert!(sweep.contains(flag), "{flag}");
    }
    assert!(sweep.contains("[default: C0]") && sweep.contains("[default: 16000]"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["train"]), 2);
}

#[test]
fn synth_corpus_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["synth-corpus", "--n", "1", "--seed", "9", "--out-dir", s(&a)]);
    ok(&["synth-corpus", "--n", "1", "--seed", "9", "--out-dir", s(&b)]);
    let mut names: Vec<String> = std::fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "clip_0000_Q1.wav",
            "clip_0001_Q2.wav",
            "clip_0002_Q3.wav",
            "clip_0003_Q4.wav",
            "manifest.csv"
        ]
    );
    for n in &names {
        assert_eq!(
            std::fs::read(a.join(n)).unwrap(),
            std::fs::read(b.join(n)).unwrap(),
            "{n}"
        );
    }
    let manifest = std::fs::read_to_string(a.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().next(), Some("path,quadrant"));
    assert_eq!(manifest.lines().nth(3), Some("clip_0002_Q3.wav,Q3"));
}

#[test]
fn train_writes_model_and_curve_deterministically() {
    let f = fixture();
    let dir = TempDir::new().unwrap();
    let again = dir.path().join("again");
    ok(&[
        "train",
        "--manifest",
        s(&f.corpus.join("manifest.csv")),
        "--out-dir",
        s(&again),
    ]);
    assert_eq!(
        std::fs::read(&f.model).unwrap(),
        std::fs::read(again.join("model.json")).unwrap()
    );
    let curve = std::fs::read_to_string(again.join("loss_curve.csv")).unwrap();
    assert_eq!(curve.lines().next(), Some("step,train_loss,val_loss"));
    let losses: Vec<f64> = curve
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(losses.last().unwrap() < &losses[0]);
}

#[test]
fn train_error_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        code(&[
            "train",
            "--manifest",
            s(&dir.path().join("missing.csv")),
            "--out-dir",
            s(&out)
        ]),
        2
    );
    let f = fixture();
    // Only Q1 rows: a single-class corpus.
    let single = dir.path().join("single.csv");
    let rows: String = (0..6)
        .map(|i| format!("{},Q1\n", s(&f.corpus.join(format!("clip_{:04}_Q1.wav", 4 * i)))))
        .collect();
    std::fs::write(&single, format!("path,quadrant\n{rows}")).unwrap();
    assert_eq!(
        code(&[
            "train",
            "--manifest",
            s(&single),
            "--out-dir",
            s(&out),
            "--batch-size",
            "2"
        ]),
        3
    );
    assert_eq!(
        code(&[
            "train",
            "--manifest",
            s(&single),
            "--out-dir",
            s(&out),
            "--learning-rate=-1"
        ]),
        2
    );
}

#[test]
fn eval_prints_table_and_csv() {
    let f = fixture();
    let dir = TempDir::new().unwrap();
    let out = ok(&[
        "eval",
        "--manifest",
        s(&f.corpus.join("manifest.csv")),
        "--model",
        s(&f.model),
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(out.starts_with("Accuracy: "), "{out}");
    assert!(out.contains("Q3 (sad)"));
    let csv = std::fs::read_to_string(dir.path().join("confusion.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    let total: usize = csv
        .lines()
        .skip(1)
        .take(4)
        .flat_map(|l| {
            l.split(',')
                .skip(1)
                .map(|c| c.parse::<usize>().unwrap())
                .collect::<Vec<_>>()
        })
        .sum();
    assert_eq!(total, 24);
}

#[test]
fn eval_engineers_valence_arousal_labels() {
    let f = fixture();
    let dir = TempDir::new().unwrap();
    let manifest = dir.path().join("va.csv");
    std::fs::write(
        &manifest,
        format!(
            "path,valence,arousal\n{},8,8\n{},2,2\n",
            s(&f.corpus.join("clip_0000_Q1.wav")),
            s(&f.corpus.join("clip_0002_Q3.wav"))
        ),
    )
    .unwrap();
    let out = ok(&["eval", "--manifest", s(&manifest), "--model", s(&f.model)]);
    assert!(out.contains("/2)"), "{out}");
    // Raising the thresholds above every annotation relabels both clips as Q3.
    let high = ok(&[
        "eval",
        "--manifest",
        s(&manifest),
        "--model",
        s(&f.model),
        "--valence-threshold",
        "9",
        "--arousal-threshold",
        "9",
    ]);
    let q3_row = high.lines().find(|l| l.starts_with("Q3")).unwrap();
    let counted: usize = q3_row
        .split_whitespace()
        .skip(2)
        .map(|c| c.parse::<usize>().unwrap())
        .sum();
    assert_eq!(counted, 2);
}

#[test]
fn analyze_wav_and_midi() {
    let f = fixture();
    let dir = TempDir::new().unwrap();
    let wav = f.corpus.join("clip_0000_Q1.wav");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = ok(&[
        "analyze",
        "--input",
        s(&wav),
        "--model",
        s(&f.model),
        "--out-dir",
        s(&a),
    ]);
    ok(&[
        "analyze",
        "--input",
        s(&wav),
        "--model",
        s(&f.model),
        "--out-dir",
        s(&b),
    ]);
    assert!(out.contains("quadrant: Q"));
    for name in ["analysis.svg", "analysis.json"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap()
        );
    }
    let m = dir.path().join("m");
    let out = ok(&[
        "analyze",
        "--input",
        s(&f.happy_mid),
        "--model",
        s(&f.model),
        "--out-dir",
        s(&m),
        "--profile",
        "chiptune",
        "--target",
        "sad",
    ]);
    assert!(out.contains("distance to target"));
    let svg = std::fs::read_to_string(m.join("analysis.svg")).unwrap();
    assert!(svg.contains(r#"class="target""#) && svg.contains("happy.mid"));
}

#[test]
fn analyze_rejects_corrupt_input() {
    let f = fixture();
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.wav");
    std::fs::write(&bad, b"RIFF\x10\x00\x00\x00WAVEjunk").unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        code(&[
            "analyze",
            "--input",
            s(&bad),
            "--model",
            s(&f.model),
            "--out-dir",
            s(&out)
        ]),
        2
    );
    let bad_model = dir.path().join("model.json");
    std::fs::write(&bad_model, "{\"format\":\"something-else\"}").unwrap();
    let wav = f.corpus.join("clip_0000_Q1.wav");
    assert_eq!(
        code(&[
            "analyze",
            "--input",
            s(&wav),
            "--model",
            s(&bad_model),
            "--out-dir",
            s(&out)
        ]),
        3
    );
}

#[test]
fn transform_moves_toward_target() {
    let f = fixture();
    let dir = TempDir::new().unwrap();
    let out = ok(&[
        "transform",
        "--input",
        s(&f.happy_mid),
        "--model",
        s(&f.model),
        "--target",
        "Q3",
        "--low",
        "C3",
        "--high",
        "B4",
        "--workers",
        "2",
        "--out-dir",
        s(dir.path()),
    ]);
    for name in [
        "best.mid",
        "best.wav",
        "before_after.svg",
        "report.json",
        "report.csv",
    ] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let value = |prefix: &str| -> f64 {
        out.lines()
            .find(|l| l.starts_with(prefix))
            .and_then(|l| l.rsplit(' ').next())
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(value("best distance") <= value("baseline distance"), "{out}");
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 24 * 4);
    let svg = std::fs::read_to_string(dir.path().join("before_after.svg")).unwrap();
    assert!(svg.contains(">before<") && svg.contains(">after<"));
}

#[test]
fn transform_target_parsing() {
    let f = fixture();
    let dir = TempDir::new().unwrap();
    let base = [
        "transform",
        "--input",
        s(&f.sad_mid),
        "--model",
        s(&f.model),
        "--low",
        "A3",
        "--high",
        "A3",
        "--profiles",
        "organ-like",
        "--out-dir",
        s(dir.path()),
        "--target",
    ];
    let mut point = base.to_vec();
    point.push("0.0,0.0");
    ok(&point);
    let report = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"point\""));
    let mut negative = base.to_vec();
    negative.push("-0.5,0.25");
    ok(&negative);
    for bad in ["Q7", "2,2", "happy-ish"] {
        let mut args = base.to_vec();
        args.push(bad);
        assert_eq!(code(&args), 2, "{bad}");
    }
    let mut unknown = base.to_vec();
    unknown.push("Q1");
    unknown[10] = "kazoo";
    assert_eq!(code(&unknown), 2);
}

#[test]
fn sweep_output_is_independent_of_workers() {
    let f = fixture();
    let dir = TempDir::new().unwrap();
    let run_with = |workers: &str, out: &Path| {
        ok(&[
            "sweep",
            "--input",
            s(&f.happy_mid),
            s(&f.sad_mid),
            "--model",
            s(&f.model),
            "--target",
            "calm",
            "--low",
            "C4",
            "--high",
            "F4",
            "--workers",
            workers,
            "--out-dir",
            s(out),
        ])
    };
    let printed = run_with("1", &dir.path().join("one"));
    run_with("3", &dir.path().join("three"));
    assert!(printed.contains("48 rows"), "{printed}");
    for name in ["sweep.json", "sweep.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join("one").join(name)).unwrap(),
            std::fs::read(dir.path().join("three").join(name)).unwrap(),
            "{name}"
        );
    }
    let csv = std::fs::read_to_string(dir.path().join("one/sweep.csv")).unwrap();
    assert!(csv.starts_with(
        "melody,offset,target_tonic,profile,p1_before,p2_before,p3_before,p4_before,p1_after,p2_after,p3_after,p4_after,x,y,distance,status\n"
    ));
    assert!(csv.lines().nth(1).unwrap().starts_with("happy.mid,"));
    assert!(csv.lines().last().unwrap().starts_with("sad.mid,"));
}

#[test]
fn sweep_rejects_bad_range() {
    let f = fixture();
    let dir = TempDir::new().unwrap();
    for (low, high) in [("C5", "C4"), ("H2", "C4")] {
        assert_eq!(
            code(&[
                "sweep",
                "--input",
                s(&f.happy_mid),
                "--model",
                s(&f.model),
                "--target",
                "Q1",
                "--low",
                low,
                "--high",
                high,
                "--out-dir",
                s(dir.path()),
            ]),
            2
        );
    }
}

#[test]
fn profiles_file_overrides_builtins() {
    let f = fixture();
    let dir = TempDir::new().unwrap();
    let ini = dir.path().join("profiles.ini");
    std::fs::write(
        &ini,
        "[kazoo]\nwaveform = sawtooth\nharmonics = 1 0.5\nadsr = 0.01 0.1 0.8 0.1\ngain = 0.5\n",
    )
    .unwrap();
    let out = ok(&[
        "transform",
        "--input",
        s(&f.happy_mid),
        "--model",
        s(&f.model),
        "--target",
        "Q2",
        "--low",
        "C4",
        "--high",
        "C4",
        "--profiles",
        "kazoo",
        "--profiles-file",
        s(&ini),
        "--out-dir",
        s(&dir.path().join("out")),
    ]);
    assert!(out.contains("profile kazoo"), "{out}");
    std::fs::write(&ini, "[broken]\nwaveform = banjo\n").unwrap();
    assert_eq!(
        code(&[
            "transform",
            "--input",
            s(&f.happy_mid),
            "--model",
            s(&f.model),
            "--target",
            "Q2",
            "--profiles-file",
            s(&ini),
            "--out-dir",
            s(&dir.path().join("out")),
        ]),
        2
    );
}
