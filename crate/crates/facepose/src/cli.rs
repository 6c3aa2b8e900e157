//! The `facepose` command line: dataset synthesis, augmentation, pose
//! solving, alignment, landmark prediction, training, inference, evaluation,
//! and curve emission as one binary of subcommands.
//!
//! Every JSON artifact embeds a `metadata` block (tool version, seed,
//! config hash); JSONL files carry it as their first line, CSV as a leading
//! `#` comment, SVG as an XML comment. Runs that draw randomness either take
//! an explicit `--seed` or record the generated one in that block, so a
//! rerun with the recorded seed reproduces the artifact byte for byte.
//! Failures print a machine-readable JSON error to stderr; usage errors
//! exit 2, data errors exit 1.

use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::alignment::{align_face, ReferenceTemplate};
use crate::augment::{augment_dataset, BoundingBox};
use crate::error::{Error, Result};
use crate::evaluation::{aggregate, curve_to_csv, curve_to_svg, image_error, ErrorReport};
use crate::face_model::{predict_landmarks, GenericModel};
use crate::geometry::{CameraIntrinsics, Pose6DoF};
use crate::landmarks::{LandmarkSet2D, LandmarkSet3D};
use crate::pnp::{solve_pnp, Correspondences};
use crate::regressor::{predict_pose, train, Hyperparams, Raster, TrainedRegressor};
use crate::synth::{synth_raster_dataset, synth_samples, SynthConfig};

#[derive(Debug, Parser)]
#[command(
    name = "facepose",
    version,
    about = "6DoF head pose toolkit: synthesis, augmentation, PnP, alignment, landmarks, training, evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for anything random; generated and recorded when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Square crop side in pixels (focal = side, principal point at the
    /// crop center).
    #[arg(long, global = true, default_value_t = 256)]
    crop_size: u32,

    /// Output file or directory, depending on the subcommand.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Payload format for single-result commands.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate seeded poses and exact model projections (JSONL plus one
    /// landmark file per pose).
    Synth {
        /// Number of poses.
        #[arg(long, default_value_t = 100)]
        poses: usize,
    },
    /// Sample in-plane transforms of a detected face and recompute labels.
    /// Writes 2·count JSONL samples (each transform plus its mirror).
    Augment {
        #[arg(long)]
        landmarks: PathBuf,
        /// Face box as x,y,w,h.
        #[arg(long, value_name = "X,Y,W,H")]
        r#box: String,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// 3D model file; the built-in generic model when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Recover a 6DoF pose from landmarks via PnP.
    SolvePose {
        #[arg(long)]
        landmarks: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Estimate the yaw-gated similarity onto the reference template.
    Align {
        #[arg(long)]
        pose: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Template JSON; built-in defaults for the crop when omitted.
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Project the generic model's landmarks through a pose.
    PredictLandmarks {
        #[arg(long)]
        pose: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train the pose regressor on synthetic rasterized views.
    Train {
        /// Training samples to synthesize.
        #[arg(long, default_value_t = 2000)]
        count: usize,
        /// Raster side in pixels.
        #[arg(long, default_value_t = 32)]
        side: usize,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
    },
    /// Run the trained regressor on a raster (.pgm or .csv).
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        raster: PathBuf,
    },
    /// Compare predicted vs ground-truth landmark directories.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = 0.10)]
        cutoff: f64,
    },
    /// Re-emit CSV and SVG accumulative curves from a report.
    Curves {
        #[arg(long)]
        report: PathBuf,
    },
}

/// Parse and execute; returns the process exit status. Usage problems exit
/// 2, data problems 1.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let kind = e.kind();
            // Help and version are successful exits.
            if kind == ErrorKind::DisplayHelp || kind == ErrorKind::DisplayVersion {
                print!("{e}");
                return 0;
            }
            eprint!("{e}");
            return 2;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(err) => {
            let payload = json!({
                "error": {
                    "kind": error_kind(&err),
                    "message": err.to_string(),
                }
            });
            eprintln!("{payload}");
            1
        }
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::InvalidRotation { .. } => "invalid_rotation",
        Error::ProjectionDegeneracy { .. } => "projection_degeneracy",
        Error::TooFewCorrespondences { .. } => "too_few_correspondences",
        Error::DegenerateConfiguration(_) => "degenerate_configuration",
        Error::SchemeMismatch { .. } => "scheme_mismatch",
        Error::SchemeWithoutPermutation(_) => "scheme_without_permutation",
        Error::DegenerateSimilarity(_) => "degenerate_similarity",
        Error::ZeroInterOcular => "zero_inter_ocular",
        Error::EmptyInput(_) => "empty_input",
        Error::Divergence { .. } => "divergence",
        Error::InvalidValue(_) => "invalid_value",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

/// Metadata block embedded in every artifact.
#[derive(Debug, Clone, Serialize)]
struct Metadata {
    tool_version: &'static str,
    seed: u64,
    config_hash: String,
}

impl Metadata {
    fn new(cli: &Cli) -> Metadata {
        let seed = cli.seed.unwrap_or_else(generate_seed);
        Metadata {
            tool_version: env!("CARGO_PKG_VERSION"),
            seed,
            config_hash: config_hash(cli, seed),
        }
    }
}

fn generate_seed() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0);
    nanos ^ (std::process::id() as u64).rotate_left(32)
}

/// FNV-1a over the canonical debug rendering of the parsed config plus the
/// effective seed.
fn config_hash(cli: &Cli, seed: u64) -> String {
    let canonical = format!("{:?}|seed={seed}", cli.command);
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in canonical.bytes() {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}

fn execute(cli: &Cli) -> Result<()> {
    let meta = Metadata::new(cli);
    let crop = cli.crop_size as f64;
    match &cli.command {
        Command::Synth { poses } => cmd_synth(cli, &meta, crop, *poses),
        Command::Augment {
            landmarks,
            r#box,
            count,
            model,
        } => cmd_augment(cli, &meta, landmarks, r#box, *count, model.as_deref()),
        Command::SolvePose { landmarks, model } => {
            cmd_solve_pose(cli, &meta, crop, landmarks, model.as_deref())
        }
        Command::Align {
            pose,
            model,
            template,
        } => cmd_align(
            cli,
            &meta,
            crop,
            pose,
            model.as_deref(),
            template.as_deref(),
        ),
        Command::PredictLandmarks { pose, model } => {
            cmd_predict(cli, &meta, crop, pose, model.as_deref())
        }
        Command::Train {
            count,
            side,
            epochs,
        } => cmd_train(cli, &meta, *count, *side, *epochs),
        Command::Infer { model, raster } => cmd_infer(cli, &meta, model, raster),
        Command::Eval { pred, gt, cutoff } => cmd_eval(cli, &meta, pred, gt, *cutoff),
        Command::Curves { report } => cmd_curves(cli, &meta, report),
    }
}

fn load_model(path: Option<&Path>) -> Result<GenericModel> {
    match path {
        None => Ok(GenericModel::synthetic()),
        Some(p) => {
            let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(p)?)?;
            let landmarks = LandmarkSet3D::from_json(&value)?;
            GenericModel::new(landmarks, format!("loaded from {}", p.display()))
        }
    }
}

fn load_landmarks2d(path: &Path) -> Result<LandmarkSet2D> {
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    LandmarkSet2D::from_json(&value)
}

fn load_pose(path: &Path) -> Result<Pose6DoF> {
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    // Accept both a bare pose document and one wrapped in an artifact.
    if let Some(pose) = value.get("pose") {
        Ok(serde_json::from_value(pose.clone())?)
    } else {
        Ok(serde_json::from_value(value)?)
    }
}

fn with_metadata(meta: &Metadata, mut payload: serde_json::Value) -> serde_json::Value {
    payload["metadata"] = serde_json::to_value(meta).expect("metadata serializes");
    payload
}

/// Pretty-print a JSON artifact to `--out` or stdout.
fn emit_json(cli: &Cli, value: &serde_json::Value, default_name: &str) -> Result<()> {
    let text = format!("{}\n", serde_json::to_string_pretty(value)?);
    emit_text(cli, &text, default_name)
}

fn emit_text(cli: &Cli, text: &str, default_name: &str) -> Result<()> {
    match &cli.out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => {
            let target = resolve_out(path, default_name)?;
            fs::write(target, text)?;
            Ok(())
        }
    }
}

/// `--out dir/` puts the default file name inside the directory; a path
/// with an extension is used as-is.
fn resolve_out(path: &Path, default_name: &str) -> Result<PathBuf> {
    let treat_as_dir = path.extension().is_none() || path.is_dir();
    if treat_as_dir {
        fs::create_dir_all(path)?;
        Ok(path.join(default_name))
    } else {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        Ok(path.to_path_buf())
    }
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli
        .out
        .clone()
        .ok_or_else(|| Error::invalid("--out <dir> is required for this subcommand"))?;
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn cmd_synth(cli: &Cli, meta: &Metadata, crop: f64, poses: usize) -> Result<()> {
    let dir = out_dir(cli)?;
    let model = GenericModel::synthetic();
    let cfg = SynthConfig::for_crop(crop);
    let samples = synth_samples(&model, &cfg, poses, meta.seed)?;

    let mut jsonl = format!(
        "{}\n",
        json!({ "metadata": meta, "crop_size": crop, "count": poses })
    );
    let lm_dir = dir.join("landmarks");
    fs::create_dir_all(&lm_dir)?;
    for sample in &samples {
        jsonl.push_str(&format!("{}\n", serde_json::to_string(sample)?));
        let lm_doc = sample.landmarks.to_json();
        fs::write(
            lm_dir.join(format!("{:04}.json", sample.index)),
            format!("{}\n", serde_json::to_string_pretty(&lm_doc)?),
        )?;
        let pose_doc = with_metadata(meta, json!({ "pose": sample.pose }));
        fs::write(
            dir.join(format!("pose_{:04}.json", sample.index)),
            format!("{}\n", serde_json::to_string_pretty(&pose_doc)?),
        )?;
    }
    fs::write(dir.join("synth.jsonl"), jsonl)?;
    Ok(())
}

fn parse_box(text: &str) -> Result<BoundingBox> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::invalid("--box expects x,y,w,h"));
    }
    let vals: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid("--box fields must be numbers"))
        })
        .collect::<Result<_>>()?;
    BoundingBox::new(vals[0], vals[1], vals[2], vals[3])
}

fn cmd_augment(
    cli: &Cli,
    meta: &Metadata,
    landmarks: &Path,
    box_spec: &str,
    count: usize,
    model_path: Option<&Path>,
) -> Result<()> {
    let dir = out_dir(cli)?;
    let lm = load_landmarks2d(landmarks)?;
    let bbox = parse_box(box_spec)?;
    let model = load_model(model_path)?;
    let samples = augment_dataset(&bbox, &lm, &model.landmarks, count, meta.seed)?;
    let mut jsonl = format!(
        "{}\n",
        json!({ "metadata": meta, "count": count, "emitted": samples.len() })
    );
    for sample in &samples {
        jsonl.push_str(&format!("{}\n", serde_json::to_string(sample)?));
    }
    fs::write(dir.join("samples.jsonl"), jsonl)?;
    Ok(())
}

fn cmd_solve_pose(
    cli: &Cli,
    meta: &Metadata,
    crop: f64,
    landmarks: &Path,
    model_path: Option<&Path>,
) -> Result<()> {
    let lm = load_landmarks2d(landmarks)?;
    let model = load_model(model_path)?;
    let cam = CameraIntrinsics::for_crop(crop)?;
    let c = Correspondences::from_landmarks(&model.landmarks, &lm)?;
    let result = solve_pnp(&c, &cam)?;
    match cli.format {
        Format::Json => {
            let payload = with_metadata(
                meta,
                json!({
                    "pose": result.pose,
                    "rms_reprojection_error": result.rms_reprojection_error,
                    "iterations": result.iterations,
                    "converged": result.converged,
                }),
            );
            emit_json(cli, &payload, "pose.json")
        }
        Format::Csv => {
            let p = result.pose.to_array();
            let text = format!(
                "# metadata: {}\nrx,ry,rz,tx,ty,tz,rms,iterations,converged\n{},{},{},{},{},{},{},{},{}\n",
                serde_json::to_string(meta)?,
                p[0], p[1], p[2], p[3], p[4], p[5],
                result.rms_reprojection_error,
                result.iterations,
                result.converged,
            );
            emit_text(cli, &text, "pose.csv")
        }
    }
}

fn cmd_align(
    cli: &Cli,
    meta: &Metadata,
    crop: f64,
    pose_path: &Path,
    model_path: Option<&Path>,
    template_path: Option<&Path>,
) -> Result<()> {
    let pose = load_pose(pose_path)?;
    let model = load_model(model_path)?;
    let cam = CameraIntrinsics::for_crop(crop)?;
    let template = match template_path {
        None => ReferenceTemplate::default_for_crop(crop)?,
        Some(p) => {
            let raw: ReferenceTemplate = serde_json::from_str(&fs::read_to_string(p)?)?;
            // Revalidate: a template file must carry all five targets.
            ReferenceTemplate::new(raw.crop_size, raw.targets)?
        }
    };
    let sim = align_face(&pose, &model, &cam, &template)?;
    let m = sim.matrix();
    match cli.format {
        Format::Json => {
            let payload = with_metadata(
                meta,
                json!({
                    "similarity": {
                        "scale": sim.scale,
                        "rotation": sim.rotation,
                        "translation": [sim.translation.x, sim.translation.y],
                        "matrix": [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2]],
                    }
                }),
            );
            emit_json(cli, &payload, "similarity.json")
        }
        Format::Csv => {
            let text = format!(
                "# metadata: {}\nm00,m01,m02,m10,m11,m12\n{},{},{},{},{},{}\n",
                serde_json::to_string(meta)?,
                m[0][0],
                m[0][1],
                m[0][2],
                m[1][0],
                m[1][1],
                m[1][2],
            );
            emit_text(cli, &text, "similarity.csv")
        }
    }
}

fn cmd_predict(
    cli: &Cli,
    meta: &Metadata,
    crop: f64,
    pose_path: &Path,
    model_path: Option<&Path>,
) -> Result<()> {
    let pose = load_pose(pose_path)?;
    let model = load_model(model_path)?;
    let cam = CameraIntrinsics::for_crop(crop)?;
    let lm = predict_landmarks(&pose, &model, &cam)?;
    match cli.format {
        Format::Json => {
            let payload = with_metadata(meta, lm.to_json());
            emit_json(cli, &payload, "landmarks.json")
        }
        Format::Csv => {
            let mut text = format!("# metadata: {}\nindex,x,y\n", serde_json::to_string(meta)?);
            for (i, p) in lm.points().iter().enumerate() {
                text.push_str(&format!("{i},{},{}\n", p.x, p.y));
            }
            emit_text(cli, &text, "landmarks.csv")
        }
    }
}

fn cmd_train(cli: &Cli, meta: &Metadata, count: usize, side: usize, epochs: usize) -> Result<()> {
    let model = GenericModel::synthetic();
    let cfg = SynthConfig::for_crop(side as f64);
    let dataset = synth_raster_dataset(&model, &cfg, side, count, meta.seed)?;
    let hyper = Hyperparams {
        epochs,
        ..Hyperparams::default()
    };
    let trained = train(&dataset, &hyper, meta.seed)?;
    let payload = with_metadata(
        meta,
        json!({
            "format_version": 1,
            "trained": trained,
            "dataset_count": count,
            "raster_side": side,
        }),
    );
    emit_json(cli, &payload, "model.json")
}

fn load_trained(path: &Path) -> Result<TrainedRegressor> {
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(path)?)?;
    let version = value
        .get("format_version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0);
    if version != 1 {
        return Err(Error::invalid(format!(
            "unsupported model format version {version}"
        )));
    }
    let trained = value
        .get("trained")
        .ok_or_else(|| Error::invalid("model file lacks 'trained'"))?;
    Ok(serde_json::from_value(trained.clone())?)
}

fn cmd_infer(cli: &Cli, meta: &Metadata, model_path: &Path, raster_path: &Path) -> Result<()> {
    let trained = load_trained(model_path)?;
    let raster = match raster_path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => Raster::from_pgm(&fs::read(raster_path)?)?,
        Some("csv") => Raster::from_csv(&fs::read_to_string(raster_path)?)?,
        _ => return Err(Error::invalid("raster must be a .pgm or .csv file")),
    };
    let pose = predict_pose(&trained.model, &trained.normalizer, &raster)?;
    match cli.format {
        Format::Json => {
            let payload = with_metadata(meta, json!({ "pose": pose }));
            emit_json(cli, &payload, "pose.json")
        }
        Format::Csv => {
            let p = pose.to_array();
            let text = format!(
                "# metadata: {}\nrx,ry,rz,tx,ty,tz\n{},{},{},{},{},{}\n",
                serde_json::to_string(meta)?,
                p[0],
                p[1],
                p[2],
                p[3],
                p[4],
                p[5],
            );
            emit_text(cli, &text, "pose.csv")
        }
    }
}

/// Landmark files paired across two directories by file name, sorted, so
/// results never depend on directory iteration order.
fn paired_files(pred: &Path, gt: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let mut names: Vec<String> = fs::read_dir(gt)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().map(|x| x == "json").unwrap_or(false))
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no .json landmark files in {}",
            gt.display()
        )));
    }
    names
        .into_iter()
        .map(|name| {
            let p = pred.join(&name);
            if !p.exists() {
                return Err(Error::invalid(format!(
                    "missing prediction for {name} in {}",
                    pred.display()
                )));
            }
            Ok((p, gt.join(name)))
        })
        .collect()
}

fn cmd_eval(cli: &Cli, meta: &Metadata, pred: &Path, gt: &Path, cutoff: f64) -> Result<()> {
    let dir = out_dir(cli)?;
    let pairs = paired_files(pred, gt)?;
    let mut errors = Vec::with_capacity(pairs.len());
    let mut names = Vec::with_capacity(pairs.len());
    for (pred_path, gt_path) in &pairs {
        let p = load_landmarks2d(pred_path)?;
        let g = load_landmarks2d(gt_path)?;
        errors.push(image_error(&p, &g)?);
        names.push(
            gt_path
                .file_name()
                .and_then(|n| n.to_str())
                .unwrap_or_default()
                .to_string(),
        );
    }
    let report = aggregate(&errors, cutoff)?;
    write_report_artifacts(meta, &dir, &report, Some(&names))
}

fn write_report_artifacts(
    meta: &Metadata,
    dir: &Path,
    report: &ErrorReport,
    names: Option<&[String]>,
) -> Result<()> {
    let mut payload = json!({ "report": report });
    if let Some(names) = names {
        payload["images"] = json!(names);
    }
    let payload = with_metadata(meta, payload);
    fs::write(
        dir.join("report.json"),
        format!("{}\n", serde_json::to_string_pretty(&payload)?),
    )?;
    let csv = format!(
        "# metadata: {}\n{}",
        serde_json::to_string(meta)?,
        curve_to_csv(report)
    );
    fs::write(dir.join("curve.csv"), csv)?;
    let svg = format!(
        "<!-- metadata: {} -->\n{}",
        serde_json::to_string(meta)?,
        curve_to_svg(report)
    );
    fs::write(dir.join("curve.svg"), svg)?;
    Ok(())
}

fn cmd_curves(cli: &Cli, meta: &Metadata, report_path: &Path) -> Result<()> {
    let dir = out_dir(cli)?;
    let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(report_path)?)?;
    let report: ErrorReport = if let Some(r) = value.get("report") {
        serde_json::from_value(r.clone())?
    } else {
        serde_json::from_value(value)?
    };
    write_report_artifacts(meta, &dir, &report, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_parsing() {
        let b = parse_box("1,2,30,40").unwrap();
        assert_eq!((b.x, b.y, b.width, b.height), (1.0, 2.0, 30.0, 40.0));
        assert!(parse_box("1,2,3").is_err());
        assert!(parse_box("a,b,c,d").is_err());
        assert!(parse_box("0,0,-5,5").is_err());
    }

    #[test]
    fn usage_error_exits_2() {
        let code = run(&["facepose".to_string(), "no-such-subcommand".to_string()]);
        assert_eq!(code, 2);
    }

    #[test]
    fn help_exits_0() {
        let code = run(&["facepose".to_string(), "--help".to_string()]);
        assert_eq!(code, 0);
    }

    #[test]
    fn missing_file_exits_1() {
        let code = run(&[
            "facepose".to_string(),
            "solve-pose".to_string(),
            "--landmarks".to_string(),
            "/nonexistent/lm.json".to_string(),
        ]);
        assert_eq!(code, 1);
    }

    #[test]
    fn config_hash_is_stable() {
        let cli =
            Cli::try_parse_from(["facepose", "synth", "--poses", "5", "--seed", "7"]).unwrap();
        let a = config_hash(&cli, 7);
        let b = config_hash(&cli, 7);
        assert_eq!(a, b);
        let other =
            Cli::try_parse_from(["facepose", "synth", "--poses", "6", "--seed", "7"]).unwrap();
        assert_ne!(a, config_hash(&other, 7));
    }
}
