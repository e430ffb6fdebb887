use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use emoshift::circumplex::{plot_svg, EmotionTarget, PlotPoint, PointStyle, SvgOptions};
use emoshift::emotion::{
    self, evaluate, load_manifest, train, write_manifest, ClassifierModel, LabelThresholds,
    SyntheticCorpusEntry, TrainingConfig,
};
use emoshift::midi::{parse_midi, parse_pitch_name, write_midi};
use emoshift::pipeline::{
    self, analyze_clip, reports_to_csv, reports_to_json, sweep, transform_once, SweepConfig, SweepReport,
    TransformOptions,
};
use emoshift::synth::{builtin_profiles, read_wav, render, write_wav, InstrumentProfile};

/// Analyze and shift the emotional content of melodies.
#[derive(Parser)]
#[command(name = "emoshift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier from a CSV manifest.
    Train(TrainArgs),
    /// Score a classifier on a CSV manifest.
    Eval(EvalArgs),
    /// Classify one WAV or MIDI file and plot it on the valence/arousal disc.
    Analyze(AnalyzeArgs),
    /// Find the transposition and instrument that best move a melody toward a target emotion.
    Transform(TransformArgs),
    /// Run the full transposition x instrument sweep over one or more melodies.
    Sweep(SweepArgs),
    /// Render a labelled synthetic corpus to WAV files plus a manifest.
    SynthCorpus(SynthCorpusArgs),
}

#[derive(Args)]
struct CommonAudio {
    /// Sample rate used for rendering and analysis, in Hz.
    #[arg(long, default_value_t = 16_000)]
    sample_rate: u32,
}

#[derive(Args)]
struct ThresholdArgs {
    /// Valence threshold for valence/arousal manifests (values >= threshold count as high).
    #[arg(long, default_value_t = 5.0)]
    valence_threshold: f64,
    /// Arousal threshold for valence/arousal manifests.
    #[arg(long, default_value_t = 5.0)]
    arousal_threshold: f64,
}

impl ThresholdArgs {
    fn thresholds(&self) -> LabelThresholds {
        LabelThresholds {
            valence: self.valence_threshold,
            arousal: self.arousal_threshold,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// CSV manifest with `path,quadrant` or `path,valence,arousal` columns.
    #[arg(long)]
    manifest: PathBuf,
    /// Directory receiving model.json and loss_curve.csv.
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    /// Fraction of the corpus held out for validation loss.
    #[arg(long, default_value_t = 0.2)]
    validation_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[command(flatten)]
    audio: CommonAudio,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Optional directory receiving confusion.csv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    thresholds: ThresholdArgs,
    #[command(flatten)]
    audio: CommonAudio,
}

#[derive(Args)]
struct ProfileArgs {
    /// Comma-separated instrument profile names (default: every built-in profile).
    #[arg(long, value_delimiter = ',')]
    profiles: Vec<String>,
    /// Extra instrument profiles in INI form; entries override built-ins of the same name.
    #[arg(long)]
    profiles_file: Option<PathBuf>,
}

impl ProfileArgs {
    fn available(&self) -> Result<Vec<InstrumentProfile>, Failure> {
        let mut all = builtin_profiles();
        if let Some(path) = &self.profiles_file {
            let text = read_text(path)?;
            for p in InstrumentProfile::parse_many(&text)? {
                all.retain(|q| q.name != p.name);
                all.push(p);
            }
        }
        Ok(all)
    }

    fn resolve(&self) -> Result<Vec<InstrumentProfile>, Failure> {
        let all = self.available()?;
        if self.profiles.is_empty() {
            return Ok(all);
        }
        self.profiles
            .iter()
            .map(|name| {
                all.iter()
                    .find(|p| &p.name == name)
                    .cloned()
                    .ok_or_else(|| Failure::input(format!("unknown profile {name:?}")))
            })
            .collect()
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// A 16-bit PCM WAV file or a Standard MIDI File.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// Directory receiving analysis.svg and analysis.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Profile used to render MIDI input.
    #[arg(long, default_value = "piano-like")]
    profile: String,
    #[arg(long)]
    profiles_file: Option<PathBuf>,
    /// Optional target drawn on the plot: a quadrant name or `valence,arousal`.
    #[arg(long, allow_hyphen_values = true)]
    target: Option<String>,
    /// Disc radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[command(flatten)]
    audio: CommonAudio,
}

#[derive(Args)]
struct SweepShared {
    #[arg(long)]
    model: PathBuf,
    /// Target emotion: Q1..Q4, happy/angry/sad/calm, or `valence,arousal`.
    #[arg(long, allow_hyphen_values = true)]
    target: String,
    /// Lowest target tonic.
    #[arg(long, default_value = "C0")]
    low: String,
    /// Highest target tonic.
    #[arg(long, default_value = "B8")]
    high: String,
    #[command(flatten)]
    profiles: ProfileArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Skip accompaniment generation.
    #[arg(long)]
    no_accompaniment: bool,
    #[command(flatten)]
    audio: CommonAudio,
}

impl SweepShared {
    fn config(&self) -> Result<SweepConfig, Failure> {
        let pitch = |s: &str| parse_pitch_name(s).map_err(Failure::from);
        Ok(SweepConfig {
            range: (pitch(&self.low)?, pitch(&self.high)?),
            sample_rate_hz: self.audio.sample_rate,
            radius: self.radius,
            seed: self.seed,
            workers: self
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            accompany: !self.no_accompaniment,
        })
    }
}

#[derive(Args)]
struct TransformArgs {
    /// Melody as a Standard MIDI File.
    #[arg(long)]
    input: PathBuf,
    /// Directory receiving best.mid, best.wav, before_after.svg, report.json and report.csv.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    shared: SweepShared,
}

#[derive(Args)]
struct SweepArgs {
    /// One or more melodies as Standard MIDI Files.
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Directory receiving sweep.json and sweep.csv.
    #[arg(long)]
    out_dir: PathBuf,
    #[command(flatten)]
    shared: SweepShared,
}

#[derive(Args)]
struct SynthCorpusArgs {
    /// Clips per quadrant.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving the WAV files and manifest.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

/// A message plus the process exit code: 2 for input problems, 3 for data
/// or model problems.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<emoshift::Error> for Failure {
    fn from(e: emoshift::Error) -> Self {
        if e.is_input_error() {
            Failure::input(e.to_string())
        } else {
            Failure::data(e.to_string())
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn write(dir: &Path, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, bytes)
        .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn load_model(path: &Path) -> Result<ClassifierModel, Failure> {
    if !path.exists() {
        return Err(Failure::input(format!("model {} does not exist", path.display())));
    }
    Ok(ClassifierModel::load(path)?)
}

fn format_probs(p: &emotion::QuadrantProbs) -> String {
    let a = p.as_array();
    format!("Q1 {:.4}  Q2 {:.4}  Q3 {:.4}  Q4 {:.4}", a[0], a[1], a[2], a[3])
}

fn cmd_train(args: TrainArgs) -> Result<(), Failure> {
    let (_, corpus) = load_manifest(&args.manifest)?;
    let config = TrainingConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        seed: args.seed,
        validation_fraction: args.validation_fraction,
        thresholds: args.thresholds.thresholds(),
        sample_rate_hz: args.audio.sample_rate,
    };
    config.validate()?;
    let model = train(&corpus, &config)?;
    let model_path = write(&args.out_dir, "model.json", model.to_json())?;
    let curve_path = write(&args.out_dir, "loss_curve.csv", model.loss_curve_csv())?;
    if let Some(meta) = model.training() {
        println!(
            "trained on {} clips ({} held out): train accuracy {:.1}%, validation accuracy {}",
            meta.train_size,
            meta.validation_size,
            100.0 * meta.train_accuracy,
            if meta.validation_size > 0 {
                format!("{:.1}%", 100.0 * meta.validation_accuracy)
            } else {
                "n/a".to_string()
            }
        );
    }
    println!("model: {}", model_path.display());
    println!("loss curve: {}", curve_path.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), Failure> {
    let (_, corpus) = load_manifest(&args.manifest)?;
    let model = load_model(&args.model)?;
    let e = evaluate(
        &model,
        &corpus,
        &args.thresholds.thresholds(),
        args.audio.sample_rate,
    )?;
    print!("{}", e.to_table());
    if let Some(dir) = &args.out_dir {
        let path = write(dir, "confusion.csv", e.to_csv())?;
        println!("confusion matrix: {}", path.display());
    }
    Ok(())
}

fn is_midi(path: &Path, bytes: &[u8]) -> bool {
    bytes.starts_with(b"MThd")
        || path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("mid") || e.eq_ignore_ascii_case("midi"))
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let target = args
        .target
        .as_deref()
        .map(|t| EmotionTarget::parse(t, args.radius))
        .transpose()?;
    let bytes = read_bytes(&args.input)?;
    let clip = if is_midi(&args.input, &bytes) {
        let song = parse_midi(&bytes)?;
        let profiles = ProfileArgs {
            profiles: vec![args.profile.clone()],
            profiles_file: args.profiles_file.clone(),
        }
        .resolve()?;
        render(&song, None, &profiles[0], &profiles[0], args.audio.sample_rate)?
    } else {
        read_wav(&bytes, Some(args.audio.sample_rate))?
    };
    let label = args
        .input
        .file_name()
        .map_or("input".to_string(), |n| n.to_string_lossy().into_owned());
    let analysis = analyze_clip(&label, &clip, &model, args.radius, target.as_ref())?;
    let quadrant = analysis.quadrant;
    println!("{}", format_probs(&analysis.probabilities));
    println!("quadrant: {quadrant} ({})", quadrant.emotion());
    println!("valence {:.4}, arousal {:.4}", analysis.point.x, analysis.point.y);
    if let Some(d) = analysis.distance_to_target {
        println!("distance to target: {d:.4}");
    }
    let svg = plot_svg(
        &[PlotPoint::new(label, analysis.point, PointStyle::before())],
        target.as_ref(),
        &SvgOptions::default(),
    );
    write(&args.out_dir, "analysis.json", analysis.to_json())?;
    let svg_path = write(&args.out_dir, "analysis.svg", svg)?;
    println!("plot: {}", svg_path.display());
    Ok(())
}

fn load_melody(path: &Path) -> Result<emoshift::midi::MidiSong, Failure> {
    Ok(parse_midi(&read_bytes(path)?)?)
}

fn melody_name(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

fn cmd_transform(args: TransformArgs) -> Result<(), Failure> {
    let s = &args.shared;
    let target = EmotionTarget::parse(&s.target, s.radius)?;
    let config = s.config()?;
    let profiles = s.profiles.resolve()?;
    let melody = load_melody(&args.input)?;
    let model = load_model(&s.model)?;
    let report = sweep(
        &melody_name(&args.input),
        &melody,
        &profiles,
        &model,
        &target,
        &config,
    )?;
    let best = pipeline::select_best(&report)?;
    let profile = profiles
        .iter()
        .find(|p| p.name == best.profile_name)
        .expect("best candidate uses a swept profile");
    let opts = TransformOptions {
        sample_rate_hz: config.sample_rate_hz,
        accompany: config.accompany,
    };
    let result = transform_once(&melody, best.semitone_offset, profile, &model, config.seed, &opts)?;

    let baseline = report
        .baseline_for(&best.profile_name)
        .and_then(|b| b.point.zip(b.distance_to_target));
    let after = best.point_after.expect("successful candidate has a point");
    let mut points = Vec::new();
    if let Some((before, _)) = baseline {
        points.push(PlotPoint::new("before", before, PointStyle::before()));
    }
    points.push(PlotPoint::new("after", after, PointStyle::after()));
    let svg = plot_svg(&points, Some(&target), &SvgOptions::default());

    write(&args.out_dir, "best.mid", write_midi(&result.midi))?;
    write(&args.out_dir, "best.wav", write_wav(&result.clip))?;
    write(&args.out_dir, "before_after.svg", svg)?;
    write(&args.out_dir, "report.json", report.to_json())?;
    write(
        &args.out_dir,
        "report.csv",
        reports_to_csv(std::slice::from_ref(&report)),
    )?;

    println!("melody key: {}", report.detected_key);
    println!(
        "best: offset {:+} (tonic {}), profile {}, key {}",
        best.semitone_offset,
        best.target_tonic,
        best.profile_name,
        best.detected_key.as_deref().unwrap_or("?")
    );
    if let Some(before) = best.probs_before {
        println!("before: {}", format_probs(&before));
    }
    if let Some(after) = best.probs_after {
        println!("after:  {}", format_probs(&after));
    }
    if let Some((_, d)) = baseline {
        println!("baseline distance to {target}: {d:.4}");
    }
    println!(
        "best distance to {target}: {:.4}",
        best.distance_to_target
            .expect("successful candidate has a distance")
    );
    println!("outputs: {}", args.out_dir.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let s = &args.shared;
    let target = EmotionTarget::parse(&s.target, s.radius)?;
    let config = s.config()?;
    let profiles = s.profiles.resolve()?;
    let melodies = args
        .input
        .iter()
        .map(|p| Ok((melody_name(p), load_melody(p)?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    let model = load_model(&s.model)?;
    let mut reports: Vec<SweepReport> = Vec::new();
    for (name, melody) in &melodies {
        let report = sweep(name, melody, &profiles, &model, &target, &config)?;
        let failed = report.candidates.iter().filter(|c| !c.is_ok()).count();
        match report.best() {
            Some(best) => println!(
                "{name}: {} candidates ({failed} failed), best offset {:+} with {} at distance {:.4}",
                report.candidates.len(),
                best.semitone_offset,
                best.profile_name,
                best.distance_to_target.unwrap_or(f64::NAN)
            ),
            None => println!("{name}: all {} candidates failed", report.candidates.len()),
        }
        reports.push(report);
    }
    write(&args.out_dir, "sweep.json", reports_to_json(&reports))?;
    let csv = reports_to_csv(&reports);
    let rows = csv.lines().count().saturating_sub(1);
    write(&args.out_dir, "sweep.csv", csv)?;
    println!("{rows} rows written to {}", args.out_dir.display());
    if reports.iter().all(|r| r.best_index.is_none()) {
        return Err(emoshift::Error::AllCandidatesFailed.into());
    }
    Ok(())
}

fn cmd_synth_corpus(args: SynthCorpusArgs) -> Result<(), Failure> {
    let entries = SyntheticCorpusEntry::generate(args.n, args.seed)?;
    let mut rows = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        let name = format!("clip_{i:04}_{}.wav", e.quadrant);
        write(&args.out_dir, &name, write_wav(&e.clip))?;
        rows.push((name, e.quadrant));
    }
    let manifest = write(&args.out_dir, "manifest.csv", write_manifest(&rows))?;
    println!("{} clips, manifest: {}", rows.len(), manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::SynthCorpus(a) => cmd_synth_corpus(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
