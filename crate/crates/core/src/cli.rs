//! `relmot` command-line front end: `track`, `eval` and `synth`.
//!
//! Exit status is 0 on success, 1 on internal failure and 2 on usage or
//! input errors.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::config::TrackerConfig;
use crate::error::Error;
use crate::metrics::{evaluate, format_summary, format_table, SequenceMetrics};
use crate::mot_io::{
    format_detections, format_ground_truth, format_results, read_detections, read_ground_truth,
    read_results, write_atomic, LabeledFrame, ReadOptions,
};
use crate::synth::{format_diagnostics, generate, standard_suite, ScenarioSpec};
use crate::tracker::run_sequence;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// File name of the manifest written next to tracking results.
pub const MANIFEST_NAME: &str = "run.manifest";
/// Default file name of the machine-readable evaluation summary.
pub const SUMMARY_NAME: &str = "eval.summary";

#[derive(Debug, Parser)]
#[command(name = "relmot", version, about = "Geometric online multi-object tracker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track detections and write MOTChallenge result files.
    Track(TrackArgs),
    /// Score result files against ground truth.
    Eval(EvalArgs),
    /// Generate synthetic scenarios.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Detection file, MOT sequence directory, or directory of sequences.
    #[arg(long, required_unless_present = "from_manifest")]
    pub dets: Option<PathBuf>,
    /// Output directory for `<sequence>.txt` results and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Key-value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Config override, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Match against raw predictions only (same as `--set camera_motion_removal=false`).
    #[arg(long)]
    pub no_camera_motion_removal: bool,
    /// Drop unmatched tracks after `prune_patience` frames even when covered.
    #[arg(long)]
    pub no_occlusion_handling: bool,
    /// Fail on the first malformed detection row.
    #[arg(long)]
    pub strict: bool,
    /// Repeat the run recorded in a manifest.
    #[arg(long, conflicts_with_all = ["dets", "config", "overrides", "no_camera_motion_removal", "no_occlusion_handling", "strict"])]
    pub from_manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Ground-truth sequence directory or directory of sequences.
    #[arg(long)]
    pub gt: PathBuf,
    /// Directory of `<sequence>.txt` result files.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, default_value_t = crate::metrics::DEFAULT_IOU_THRESHOLD)]
    pub iou: f64,
    /// Summary output path (defaults to `eval.summary` in the results directory).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true))]
pub struct SynthArgs {
    /// Built-in suite name.
    #[arg(long, group = "source", value_parser = ["standard"])]
    pub suite: Option<String>,
    /// Scenario spec file.
    #[arg(long, group = "source")]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// A failed command with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

fn input(e: Error) -> Failure {
    Failure::usage(e.to_string())
}

fn internal(e: Error) -> Failure {
    Failure::internal(e.to_string())
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match cli.command {
        Command::Track(a) => cmd_track(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Synth(a) => cmd_synth(&a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// A named input file.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Sequence {
    name: String,
    path: PathBuf,
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sequence".into())
}

fn dir_name(path: &Path) -> String {
    path.canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| file_stem(path))
}

/// Finds sequences under `root` in MOTChallenge layout (`<seq>/<kind>/<kind>.txt`)
/// or as loose `<seq>.txt` files. A file names a single sequence.
fn discover(root: &Path, kind: &str) -> std::result::Result<Vec<Sequence>, Failure> {
    if root.is_file() {
        // `<seq>/det/det.txt` is named after `<seq>`.
        let name = match root.parent() {
            Some(p) if p.file_name().is_some_and(|n| n == kind) => p
                .parent()
                .map(dir_name)
                .unwrap_or_else(|| file_stem(root)),
            _ => file_stem(root),
        };
        return Ok(vec![Sequence {
            name,
            path: root.to_path_buf(),
        }]);
    }
    if !root.is_dir() {
        return Err(Failure::usage(format!("{}: no such file or directory", root.display())));
    }
    let nested = root.join(kind).join(format!("{kind}.txt"));
    if nested.is_file() {
        return Ok(vec![Sequence {
            name: dir_name(root),
            path: nested,
        }]);
    }
    let entries = fs::read_dir(root)
        .map_err(|e| Failure::usage(format!("{}: {e}", root.display())))?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| Failure::usage(format!("{}: {e}", root.display())))?
            .path();
        let nested = path.join(kind).join(format!("{kind}.txt"));
        if path.is_dir() && nested.is_file() {
            found.push(Sequence {
                name: dir_name(&path),
                path: nested,
            });
        } else if path.is_file() && path.extension().is_some_and(|e| e == "txt") {
            found.push(Sequence {
                name: file_stem(&path),
                path,
            });
        }
    }
    found.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(found)
}

/// Everything needed to repeat a tracking run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub input: PathBuf,
    pub output: PathBuf,
    pub strict: bool,
    /// Overrides as given on the command line, including ablation flags.
    pub overrides: Vec<String>,
    pub sequences: Vec<SequenceRecord>,
    pub config: TrackerConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceRecord {
    pub name: String,
    pub input: PathBuf,
    pub output: PathBuf,
    pub frames: usize,
    pub fps: f64,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# relmot run manifest\n");
        let _ = writeln!(out, "input = {}", self.input.display());
        let _ = writeln!(out, "output = {}", self.output.display());
        let _ = writeln!(out, "strict = {}", self.strict);
        for o in &self.overrides {
            let _ = writeln!(out, "override = {o}");
        }
        for s in &self.sequences {
            let _ = writeln!(
                out,
                "sequence = {} | {} | {} | {} frames | {:.1} fps",
                s.name,
                s.input.display(),
                s.output.display(),
                s.frames,
                s.fps
            );
        }
        out.push_str("[config]\n");
        out.push_str(&self.config.to_text());
        out
    }

    /// Reads back the fields needed to repeat the run. Sequence timings are
    /// informational and not parsed.
    pub fn parse(text: &str) -> crate::Result<Self> {
        let (head, config) = text
            .split_once("[config]\n")
            .ok_or_else(|| Error::Config("manifest has no [config] section".into()))?;
        let mut input = None;
        let mut output = PathBuf::new();
        let mut strict = false;
        let mut overrides = Vec::new();
        for line in head.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once(" = ") else {
                return Err(Error::Config(format!("manifest: unreadable line {line:?}")));
            };
            match k {
                "input" => input = Some(PathBuf::from(v)),
                "output" => output = PathBuf::from(v),
                "strict" => strict = v == "true",
                "override" => overrides.push(v.to_string()),
                "sequence" => {}
                _ => return Err(Error::Config(format!("manifest: unknown key {k:?}"))),
            }
        }
        Ok(RunManifest {
            input: input.ok_or_else(|| Error::Config("manifest: missing input".into()))?,
            output,
            strict,
            overrides,
            sequences: Vec::new(),
            config: TrackerConfig::parse(config)?,
        })
    }
}

fn track_config(args: &TrackArgs) -> std::result::Result<(TrackerConfig, Vec<String>), Failure> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            TrackerConfig::parse(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?
        }
        None => TrackerConfig::default(),
    };
    let mut overrides = args.overrides.clone();
    if args.no_camera_motion_removal {
        overrides.push("camera_motion_removal=false".into());
    }
    if args.no_occlusion_handling {
        overrides.push("occlusion_handling=false".into());
    }
    for o in &overrides {
        cfg.apply_override(o).map_err(input)?;
    }
    cfg.validate().map_err(input)?;
    Ok((cfg, overrides))
}

pub fn cmd_track(args: &TrackArgs) -> CmdResult {
    let (input_root, cfg, overrides, strict) = match &args.from_manifest {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let m = RunManifest::parse(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            (m.input, m.config, m.overrides, m.strict)
        }
        None => {
            let (cfg, overrides) = track_config(args)?;
            let dets = args.dets.clone().expect("clap requires --dets without a manifest");
            (dets, cfg, overrides, args.strict)
        }
    };
    let sequences = discover(&input_root, "det")?;
    if sequences.is_empty() {
        return Err(Failure::usage(format!(
            "{}: no detection files found",
            input_root.display()
        )));
    }
    let opts = ReadOptions {
        strict,
        pedestrians_only: false,
    };

    let runs: Vec<std::result::Result<SequenceRecord, Failure>> = sequences
        .par_iter()
        .map(|seq| {
            let (frames, report) = read_detections(&seq.path, opts).map_err(input)?;
            let skipped = report.malformed + report.non_positive_size;
            if skipped > 0 {
                eprintln!(
                    "warning: {}: skipped {} malformed and {} non-positive-size rows",
                    seq.path.display(),
                    report.malformed,
                    report.non_positive_size
                );
            }
            let start = Instant::now();
            let results = run_sequence(&cfg, &frames)
                .map_err(|e| Failure::internal(format!("{}: {e}", seq.name)))?;
            let secs = start.elapsed().as_secs_f64();
            let output = args.out.join(format!("{}.txt", seq.name));
            write_atomic(&output, &format_results(&results)).map_err(internal)?;
            let fps = if secs > 0.0 { results.len() as f64 / secs } else { f64::INFINITY };
            Ok(SequenceRecord {
                name: seq.name.clone(),
                input: seq.path.clone(),
                output,
                frames: results.len(),
                fps,
            })
        })
        .collect();

    let mut records = Vec::with_capacity(runs.len());
    for r in runs {
        let rec = r?;
        println!("{}: {} frames, {:.1} fps", rec.name, rec.frames, rec.fps);
        records.push(rec);
    }
    let manifest = RunManifest {
        input: input_root,
        output: args.out.clone(),
        strict,
        overrides,
        sequences: records,
        config: cfg,
    };
    write_atomic(&args.out.join(MANIFEST_NAME), &manifest.to_text()).map_err(internal)
}

pub fn cmd_eval(args: &EvalArgs) -> CmdResult {
    if !(args.iou > 0.0 && args.iou <= 1.0) {
        return Err(Failure::usage(format!("--iou {} must lie in (0, 1]", args.iou)));
    }
    let gt_seqs = discover(&args.gt, "gt")?;
    if gt_seqs.is_empty() {
        return Err(Failure::usage(format!("{}: no ground-truth files found", args.gt.display())));
    }
    if !args.results.is_dir() {
        return Err(Failure::usage(format!("{}: not a directory", args.results.display())));
    }
    let res_seqs = discover(&args.results, "")?
        .into_iter()
        .filter(|s| s.path.extension().is_some_and(|e| e == "txt"))
        .collect::<Vec<_>>();
    // An empty results directory scores every sequence as an empty output.
    if !res_seqs.is_empty() {
        let gt_names: Vec<&str> = gt_seqs.iter().map(|s| s.name.as_str()).collect();
        let res_names: Vec<&str> = res_seqs.iter().map(|s| s.name.as_str()).collect();
        let missing: Vec<&str> = gt_names.iter().copied().filter(|n| !res_names.contains(n)).collect();
        let extra: Vec<&str> = res_names.iter().copied().filter(|n| !gt_names.contains(n)).collect();
        if !missing.is_empty() || !extra.is_empty() {
            return Err(Failure::usage(format!(
                "sequence sets differ; missing results for [{}], results without ground truth for [{}]",
                missing.join(", "),
                extra.join(", ")
            )));
        }
    }
    let opts = ReadOptions {
        strict: false,
        pedestrians_only: true,
    };
    let rows: Vec<std::result::Result<(String, SequenceMetrics), Failure>> = gt_seqs
        .par_iter()
        .map(|seq| {
            let (gt, _) = read_ground_truth(&seq.path, opts).map_err(input)?;
            let hyp: Vec<LabeledFrame> = match res_seqs.iter().find(|r| r.name == seq.name) {
                Some(r) => read_results(&r.path, opts).map_err(input)?.0,
                None => Vec::new(),
            };
            let m = evaluate(&gt, &hyp, args.iou)
                .map_err(|e| Failure::usage(format!("{}: {e}", seq.name)))?;
            Ok((seq.name.clone(), m))
        })
        .collect();
    let rows = rows.into_iter().collect::<std::result::Result<Vec<_>, _>>()?;
    print!("{}", format_table(&rows));
    let summary = args
        .summary
        .clone()
        .unwrap_or_else(|| args.results.join(SUMMARY_NAME));
    write_atomic(&summary, &format_summary(&rows)).map_err(internal)
}

/// Writes one scenario as `<out>/<name>/{gt/gt.txt, det/det.txt,
/// diagnostics.csv, scenario.txt}`.
pub fn write_scenario(spec: &ScenarioSpec, out: &Path) -> crate::Result<()> {
    let scenario = generate(spec)?;
    let dir = out.join(&spec.name);
    write_atomic(&dir.join("gt").join("gt.txt"), &format_ground_truth(&scenario.gt))?;
    write_atomic(&dir.join("det").join("det.txt"), &format_detections(&scenario.dets))?;
    write_atomic(&dir.join("diagnostics.csv"), &format_diagnostics(&scenario.diagnostics))?;
    write_atomic(&dir.join("scenario.txt"), &spec.to_text())
}

pub fn cmd_synth(args: &SynthArgs) -> CmdResult {
    let specs = match (&args.suite, &args.spec) {
        (Some(_), _) => standard_suite(),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            vec![ScenarioSpec::parse(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?]
        }
        (None, None) => return Err(Failure::usage("one of --suite or --spec is required")),
    };
    let written: Vec<std::result::Result<(), Failure>> = specs
        .par_iter()
        .map(|spec| {
            write_scenario(spec, &args.out).map_err(|e| match e {
                Error::Scenario(_) => input(e),
                other => internal(other),
            })
        })
        .collect();
    for (spec, w) in specs.iter().zip(written) {
        w?;
        println!("{}: {} frames", spec.name, spec.frames);
    }
    Ok(())
}
