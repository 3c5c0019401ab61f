//! The `layoutcal` command line.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::attention::{check_discrepancy, layered_merge, temporal_merge, AttnStack, MapKind, TensorFile};
use crate::bench::{generate_benchmark, read_jsonl, write_jsonl, BenchConfig, CountSpec};
use crate::error::{Error, Result};
use crate::layout::{detect_layout_requirement, layout_to_json, parse_layout, LayoutConfig, RelationVocabulary};
use crate::rectify::{build_plan, rectify_file, run_calibration_with, CalibrationConfig, SkipLayers};
use crate::sim::{evaluate_layout, run_suite, SceneCase, SimDenoiser, SimScene, DEFAULT_FEEDBACK};

#[derive(Debug, Parser)]
#[command(name = "layoutcal", version, about = "Layout calibration of cross-attention maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct CalibArgs {
    /// Intra-map adjustment strength
    #[arg(long, default_value_t = crate::rectify::DEFAULT_ALPHA)]
    alpha: f64,
    /// Denoising steps
    #[arg(long, default_value_t = crate::rectify::DEFAULT_STEPS)]
    steps: usize,
    /// Localization steps before rectification
    #[arg(long = "t-loc", default_value_t = crate::rectify::DEFAULT_T_LOC)]
    t_loc: usize,
    /// Inside-fraction below which an object is misplaced
    #[arg(long, default_value_t = crate::attention::DEFAULT_THRESHOLD)]
    threshold: f64,
}

impl CalibArgs {
    fn config(&self) -> CalibrationConfig {
        CalibrationConfig {
            steps: self.steps,
            t_loc: self.t_loc,
            alpha: self.alpha,
            threshold: self.threshold,
            skip_layers: SkipLayers::FirstAndLast,
            ..Default::default()
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report layout keywords, and per-object discrepancies when attention is given
    Check {
        prompt: String,
        /// Tensor file whose first step is checked
        #[arg(long)]
        tensors: Option<PathBuf>,
        #[arg(long, default_value_t = crate::attention::DEFAULT_THRESHOLD)]
        threshold: f64,
    },
    /// Print the target layout of a prompt
    Plan { prompt: String },
    /// Locate misplaced objects in a tensor file and print the plan
    Locate {
        prompt: String,
        #[arg(long)]
        tensors: PathBuf,
        #[command(flatten)]
        calib: CalibArgs,
    },
    /// Rectify a logits tensor file
    Rectify {
        prompt: String,
        #[arg(long)]
        tensors: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the calibration report (stdout otherwise)
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        calib: CalibArgs,
    },
    /// Run the synthetic denoiser with or without calibration
    Simulate {
        /// Scene JSON; built from --prompt when absent
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long)]
        prompt: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FEEDBACK)]
        feedback: f64,
        #[arg(long)]
        no_calibrate: bool,
        /// Write the submitted logits as a tensor file
        #[arg(long)]
        dump: Option<PathBuf>,
        #[command(flatten)]
        calib: CalibArgs,
    },
    /// Generate a benchmark as JSONL
    BenchGen {
        #[arg(short = 'n', long = "num", default_value_t = 203)]
        n: usize,
        /// Exact prompts per object count, e.g. 36,96,56,15
        #[arg(long)]
        counts: Option<String>,
        /// Exact occurrences per superlative term, in table order
        #[arg(long)]
        term_counts: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate every prompt of a dataset with and without calibration
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_FEEDBACK)]
        feedback: f64,
        #[command(flatten)]
        calib: CalibArgs,
    },
}

/// Exit status for an error: 2 for bad prompts, flags and configs, 3 for
/// malformed data, 1 for I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 1,
        Error::Format(_)
        | Error::Json(_)
        | Error::KindMismatch { .. }
        | Error::ShapeMismatch(_)
        | Error::PlanStackMismatch(_)
        | Error::WindowTooLarge { .. } => 3,
        _ => 2,
    }
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": kind, "message": message }).to_string()
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("not a count list: {s}")))
        })
        .collect()
}

fn read_tensors(path: &Path) -> Result<TensorFile> {
    TensorFile::read_from(BufReader::new(File::open(path)?))
}

fn write_tensors(path: &Path, file: &TensorFile) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    file.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

fn as_probs(stack: &AttnStack) -> Result<AttnStack> {
    match stack.kind() {
        MapKind::Probs => Ok(stack.clone()),
        MapKind::Logits => stack.softmax_tokens(),
    }
}

fn pretty(v: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    let vocab = RelationVocabulary::from_env()?;
    let layout_cfg = LayoutConfig::default();
    match cmd {
        Command::Check {
            prompt,
            tensors,
            threshold,
        } => {
            let detection = detect_layout_requirement(&prompt, &vocab);
            let mut v = json!({ "prompt": prompt, "detected": detection.detected, "matches": detection.matches });
            if let Some(path) = tensors {
                let file = read_tensors(&path)?;
                let layout = parse_layout(&prompt, &vocab, &layout_cfg)?;
                let merged = layered_merge(&as_probs(&file.stacks()[0])?)?;
                let checks = check_discrepancy(&merged, &layout, threshold)?;
                v["checks"] = serde_json::to_value(checks)?;
            }
            writeln!(out, "{}", pretty(&v)?)?;
        }
        Command::Plan { prompt } => {
            let layout = parse_layout(&prompt, &vocab, &layout_cfg)?;
            writeln!(out, "{}", layout_to_json(&layout))?;
        }
        Command::Locate { prompt, tensors, calib } => {
            let cfg = calib.config();
            cfg.validate()?;
            let file = read_tensors(&tensors)?;
            if file.steps() < cfg.t_loc {
                return Err(Error::InvalidConfig(format!(
                    "t-loc {} exceeds the {} recorded steps",
                    cfg.t_loc,
                    file.steps()
                )));
            }
            let layout = parse_layout(&prompt, &vocab, &layout_cfg)?;
            let merged = file.stacks()[..cfg.t_loc]
                .iter()
                .map(|s| layered_merge(&as_probs(s)?))
                .collect::<Result<Vec<_>>>()?;
            let checks = check_discrepancy(&merged[0], &layout, cfg.threshold)?;
            let plan = build_plan(&temporal_merge(&merged)?, &layout, &checks, &file.stacks()[0].resolutions())?;
            writeln!(out, "{}", pretty(&json!({ "checks": checks, "plan": plan }))?)?;
        }
        Command::Rectify {
            prompt,
            tensors,
            out: out_path,
            report,
            calib,
        } => {
            let (rectified, rep) = rectify_file(read_tensors(&tensors)?, &prompt, &calib.config(), &vocab, &layout_cfg)?;
            write_tensors(&out_path, &rectified)?;
            match report {
                Some(path) => std::fs::write(path, rep.to_json() + "\n")?,
                None => writeln!(out, "{}", rep.to_json())?,
            }
        }
        Command::Simulate {
            scene,
            prompt,
            seed,
            feedback,
            no_calibrate,
            dump,
            calib,
        } => {
            let cfg = calib.config();
            cfg.validate()?;
            let (layout, scene) = match (scene, prompt) {
                (Some(path), _) => {
                    let scene = SimScene::from_json(&std::fs::read_to_string(path)?)?;
                    (parse_layout(&scene.prompt, &vocab, &layout_cfg)?, scene)
                }
                (None, Some(prompt)) => {
                    let case = SceneCase::from_layout(0, parse_layout(&prompt, &vocab, &layout_cfg)?, seed, feedback)?;
                    (case.layout, case.scene)
                }
                (None, None) => return Err(Error::InvalidConfig("simulate needs --scene or --prompt".into())),
            };
            let mut sim = SimDenoiser::new(scene.clone(), cfg.steps)?.recording();
            let report = if no_calibrate {
                sim.run_unmodified()?;
                None
            } else {
                Some(run_calibration_with(&layout.prompt, &mut sim, &cfg, &vocab, &layout_cfg)?)
            };
            let result = evaluate_layout(sim.final_probs().expect("step 1 ran"), &layout)?;
            if let Some(path) = dump {
                write_tensors(&path, &TensorFile::new(sim.submitted().to_vec())?)?;
            }
            let v = json!({ "scene": scene, "result": result, "report": report });
            writeln!(out, "{}", pretty(&v)?)?;
        }
        Command::BenchGen {
            n,
            counts,
            term_counts,
            seed,
            out: out_path,
        } => {
            let mut cfg = BenchConfig {
                seed,
                ..Default::default()
            };
            if let Some(c) = counts {
                cfg.counts = CountSpec::Exact(parse_list(&c)?);
            }
            if let Some(t) = term_counts {
                cfg.term_quota = Some(parse_list(&t)?);
            }
            let prompts = generate_benchmark(n, &cfg)?;
            match out_path {
                Some(path) => {
                    let mut w = BufWriter::new(File::create(path)?);
                    write_jsonl(&prompts, &mut w)?;
                    w.flush()?;
                }
                None => write_jsonl(&prompts, &mut *out)?,
            }
        }
        Command::Eval {
            dataset,
            seed,
            feedback,
            calib,
        } => {
            let cfg = calib.config();
            cfg.validate()?;
            let mut prompts = read_jsonl(BufReader::new(File::open(dataset)?))?;
            prompts.sort_by_key(|p| p.id);
            let cases = prompts
                .iter()
                .map(|p| SceneCase::from_layout(p.id, parse_layout(&p.text, &vocab, &layout_cfg)?, seed, feedback))
                .collect::<Result<Vec<_>>>()?;
            let on = run_suite(&cases, &cfg, true)?;
            let off = run_suite(&cases, &cfg, false)?;
            let rows: Vec<Value> = on
                .runs
                .iter()
                .zip(&off.runs)
                .map(|(a, b)| {
                    json!({
                        "id": a.id,
                        "prompt": a.prompt,
                        "objects": a.result.objects.len(),
                        "calibrated": a.result.all_correct(),
                        "uncalibrated": b.result.all_correct(),
                    })
                })
                .collect();
            let v = json!({
                "scenes": on.scenes,
                "calibrated": { "scene_accuracy": on.scene_accuracy, "object_accuracy": on.object_accuracy },
                "uncalibrated": { "scene_accuracy": off.scene_accuracy, "object_accuracy": off.object_accuracy },
                "rows": rows,
            });
            writeln!(out, "{}", pretty(&v)?)?;
        }
    }
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Errors go to `err` as one JSON line.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                let _ = writeln!(err, "{}", error_json("usage", &e.kind().to_string()));
                return 2;
            }
            // help and version requests
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{}", error_json(e.kind(), &e.to_string()));
            exit_code(&e)
        }
    }
}
