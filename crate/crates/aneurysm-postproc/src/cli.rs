//! Command-line surface.
//!
//! Five subcommands cover the pipeline end to end: `phantom` writes a
//! synthetic case, `build-masks` derives the filtering masks for a case,
//! `filter` applies one post-processing method, `evaluate` scores a
//! prediction file against ground truth, and `report` aggregates per-case
//! run directories into the result tables. Exit codes: 0 success, 1
//! validation error, 2 IO/parse error. Diagnostics go to stderr; set
//! `RUST_LOG` to control verbosity.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::eval::{compute_metrics, match_detections, round_2dp};
use crate::filter::{apply_method, threshold_detections, FilterParams, Method};
use crate::io::config::RunConfig;
use crate::io::{case, detections, tables};
use crate::phantom::{generate_phantom, PhantomSpec};
use crate::pipeline::{build_mask_set, PipelineParams};
use crate::report::build_report;

#[derive(Debug, Parser)]
#[command(
    name = "aneurysm-postproc",
    version,
    about = "Anatomy-based false-positive filtering for aneurysm detections"
)]
pub struct Cli {
    /// Worker threads for per-detection and per-case work (default: all cores)
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build brain/vein-final/CVS masks for one case
    BuildMasks(BuildMasksArgs),
    /// Threshold detections and apply one post-processing method
    Filter(FilterArgs),
    /// Match predictions against ground truth and write metrics
    Evaluate(EvaluateArgs),
    /// Aggregate per-case run directories into result tables
    Report(ReportArgs),
    /// Generate a synthetic case from a phantom spec
    Phantom(PhantomArgs),
}

#[derive(Debug, Args)]
pub struct BuildMasksArgs {
    /// Case directory (brain_seg/artery/vein volumes + transform)
    #[arg(long = "case")]
    pub case_dir: PathBuf,
    /// Template CVS box file (world millimeters, template space)
    #[arg(long = "template-cvs")]
    pub template_cvs: PathBuf,
    /// Brain mask dilation in millimeters
    #[arg(long)]
    pub brain_dilation_mm: Option<f64>,
    /// CVS region box expansion in millimeters
    #[arg(long)]
    pub cvs_expand_mm: Option<f64>,
    /// Union the unexpanded CVS box into the brain mask instead of the
    /// expanded one
    #[arg(long)]
    pub unexpanded_brain_box: bool,
    /// Invert the transform read from the case (for tools that export
    /// target-to-template)
    #[arg(long)]
    pub invert: bool,
    /// Optional key=value config file; explicit flags win
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for the derived masks
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long = "case")]
    pub case_dir: PathBuf,
    /// Directory produced by build-masks
    #[arg(long)]
    pub masks: PathBuf,
    /// Post-processing method 1-5
    #[arg(long)]
    pub method: u8,
    /// Confidence cutoff applied before filtering
    #[arg(long)]
    pub confidence_threshold: Option<f64>,
    /// Minimum vein-overlap voxels for method 2's any-overlap rule
    #[arg(long)]
    pub m2_min_voxels: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file for the surviving detections
    #[arg(long)]
    pub out: PathBuf,
    /// Removal log (line-delimited JSON, one record per input detection)
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Also write the thresholded-but-unfiltered detections (the baseline
    /// column of reports)
    #[arg(long)]
    pub baseline_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predictions document
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth document
    #[arg(long)]
    pub truth: PathBuf,
    /// IoU threshold for a true positive
    #[arg(long)]
    pub iou: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Metrics output (.json or .csv)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Per-case run directories
    #[arg(long = "runs", required = true, num_args = 1..)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub iou: Option<f64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for report.json + CSV tables (tables always print to stdout)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhantomArgs {
    /// Phantom spec (JSON); the literal name "standard" or
    /// "standard-vein-touching" selects a built-in spec
    #[arg(long)]
    pub spec: String,
    #[arg(long)]
    pub seed: u64,
    /// Case directory to create (its name becomes the case id)
    #[arg(long)]
    pub out: PathBuf,
}

fn load_config(path: &Option<PathBuf>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        // ignore failure: the global pool can only be sized once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match cli.command {
        Command::BuildMasks(args) => run_build_masks(args),
        Command::Filter(args) => run_filter(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Report(args) => run_report(args),
        Command::Phantom(args) => run_phantom(args),
    }
}

fn run_build_masks(args: BuildMasksArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let params = PipelineParams {
        brain_dilation_mm: args.brain_dilation_mm.unwrap_or(cfg.brain_dilation_mm),
        cvs_expand_mm: args.cvs_expand_mm.unwrap_or(cfg.cvs_expand_mm),
        confidence_threshold: cfg.confidence_threshold,
        unexpanded_brain_box: args.unexpanded_brain_box || cfg.unexpanded_brain_box,
    };
    let case = case::CaseDirectory::open(&args.case_dir)?;
    let (brain_seg, artery, vein) = case.load_masks()?;
    let mut transform = case.load_transform()?;
    if args.invert {
        transform = transform.inverse();
    }
    let template = case::read_world_box(&args.template_cvs)?;

    let masks = build_mask_set(&brain_seg, &artery, &vein, &template, &transform, &params)?;
    case::write_mask_set(&args.out, &masks)?;

    log::info!(
        "case {}: cvs region box {:?} -> {:?} ({} voxels), cvs mask {} voxels",
        case.case_id,
        masks.cvs_region_box.min(),
        masks.cvs_region_box.max(),
        masks.cvs_region_box.volume(),
        masks.cvs.count_set()
    );
    println!(
        "wrote masks for case {} to {}",
        case.case_id,
        args.out.display()
    );
    Ok(())
}

fn run_filter(args: FilterArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let method = Method::from_number(args.method)?;
    let tau = args
        .confidence_threshold
        .unwrap_or(cfg.confidence_threshold);
    let filter_params = FilterParams {
        m2_min_voxels: args.m2_min_voxels.unwrap_or(cfg.m2_min_voxels),
    };

    let case = case::CaseDirectory::open(&args.case_dir)?;
    let doc = case.load_detections()?;
    let dets = doc.to_detections()?;
    let masks = case::load_mask_set(&case, &args.masks)?;

    let thresholded = threshold_detections(&dets, tau)?;
    let result = apply_method(&thresholded, &masks, method, &filter_params);

    let kept_ids: BTreeSet<String> = result.kept().map(|d| d.id.clone()).collect();
    let kept_doc = doc.retain_ids(&kept_ids);
    detections::write_doc(&args.out, &kept_doc)?;

    if let Some(baseline_path) = &args.baseline_out {
        let thresholded_ids: BTreeSet<String> =
            thresholded.iter().map(|d| d.id.clone()).collect();
        detections::write_doc(baseline_path, &doc.retain_ids(&thresholded_ids))?;
    }
    if let Some(log_path) = &args.log {
        tables::write_log(log_path, &result.log_records(&case.case_id, method))?;
    }

    println!(
        "case {}: {} detections, {} above threshold {}, {} kept / {} removed by {}",
        case.case_id,
        dets.len(),
        thresholded.len(),
        tau,
        result.kept_count(),
        result.removed_count(),
        method
    );
    Ok(())
}

fn run_evaluate(args: EvaluateArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let iou = args.iou.unwrap_or(cfg.iou_threshold);

    let pred_doc = detections::read_doc(&args.pred)?;
    let truth_doc = detections::read_doc(&args.truth)?;
    if pred_doc.case_id != truth_doc.case_id {
        return Err(Error::InvalidInput(format!(
            "prediction is for case '{}' but truth is for '{}'",
            pred_doc.case_id, truth_doc.case_id
        )));
    }
    let preds = pred_doc.to_detections()?;
    let truth = truth_doc.to_ground_truth()?;

    let matching = match_detections(&preds, &truth, iou)?;
    let metrics = compute_metrics(std::slice::from_ref(&matching), 1)?;
    tables::write_metrics(&args.out, &metrics)?;

    println!(
        "case {}: TP {} FP {} FN {}; FP/case {:.2}; sensitivity {}",
        pred_doc.case_id,
        metrics.tp,
        metrics.fp,
        metrics.fn_count,
        round_2dp(metrics.fp_per_case),
        if metrics.sensitivity_defined {
            format!("{:.4}", metrics.sensitivity)
        } else {
            "n/a (no ground truth)".to_string()
        }
    );
    Ok(())
}

fn run_report(args: ReportArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let iou = args.iou.unwrap_or(cfg.iou_threshold);

    let cases: Vec<_> = args
        .runs
        .iter()
        .map(|dir| case::load_run_dir(dir))
        .collect::<Result<_>>()?;
    let report = build_report(&cases, iou)?;

    print!("{}", tables::render_report(&report));

    if let Some(out) = &args.out {
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        tables::write_report_json(&out.join("report.json"), &report)?;
        crate::io::atomic_write(
            &out.join("detection_table.csv"),
            tables::detection_table_csv(&report).as_bytes(),
        )?;
        crate::io::atomic_write(
            &out.join("fp_categories.csv"),
            tables::category_table_csv(&report).as_bytes(),
        )?;
    }
    if !report.consistency_failures.is_empty() {
        return Err(Error::InvalidInput(format!(
            "report consistency checks failed: {}",
            report.consistency_failures.join("; ")
        )));
    }
    Ok(())
}

fn run_phantom(args: PhantomArgs) -> Result<()> {
    let spec = match args.spec.as_str() {
        "standard" => PhantomSpec::standard(),
        "standard-vein-touching" => PhantomSpec::standard_vein_touching(),
        path => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(std::path::Path::new(path), e))?;
            serde_json::from_slice(&bytes)
                .map_err(|e| Error::parse(std::path::Path::new(path), e.to_string()))?
        }
    };
    let case = generate_phantom(&spec, args.seed)?;
    case::write_phantom_case(&args.out, &case)?;
    println!(
        "wrote phantom case {} ({} detections, {} ground-truth boxes)",
        args.out.display(),
        case.detections.len(),
        case.ground_truth.len()
    );
    Ok(())
}

/// Entry point used by the binary: parses arguments, runs, maps errors to
/// exit codes (1 validation, 2 IO/parse).
pub fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return std::process::ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return std::process::ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::ExitCode::from(e.exit_code() as u8)
        }
    }
}
