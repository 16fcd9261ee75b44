//! Command-line pipeline: `gen`, `raster`, `detect`, `cluster`, `bench`.
//!
//! Stages exchange files, and every command writes a `manifest.json`
//! describing the run next to its outputs. Exit codes: 0 on success, 1 on
//! usage errors, 2 on runtime failures.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::clustering::{Algorithm, AlgorithmSettings, Covariance, InitSpec};
use crate::datagen::{generate_suite, read_dataset, write_dataset, ShapeFamily, SuiteSpec};
use crate::detect::{boxes_to_init, BlobDetector, DetectionReport, Detector, DetectorSettings};
use crate::eval::{accuracy_rate, run_bench, write_outputs, BenchConfig};
use crate::indices::IndexKind;
use crate::raster::{make_labels, rasterize, write_labels, RasterFrame, DEFAULT_COVERAGE, DEFAULT_MARGIN, DEFAULT_RESOLUTION};
use crate::{Error, Result};

pub const OUT_ROOT_ENV: &str = "CLUSTINIT_OUT";

#[derive(Debug, Parser)]
#[command(name = "clustinit", version, about = "Cluster initialization from rasterized 2D data")]
pub struct Cli {
    /// Default output root for commands run without --out.
    #[arg(long, global = true, env = OUT_ROOT_ENV, default_value = "clustinit-out")]
    pub out_root: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a suite of synthetic datasets.
    Gen(GenArgs),
    /// Rasterize datasets into PGM frames with label files.
    Raster(RasterArgs),
    /// Detect cluster boxes on frames.
    Detect(DetectArgs),
    /// Cluster one dataset.
    Cluster(ClusterArgs),
    /// Run the benchmark harness.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restrict to one shape family.
    #[arg(long)]
    pub family: Option<ShapeFamily>,
    /// Fix the number of clusters.
    #[arg(long)]
    pub k: Option<usize>,
    /// Fix the number of points.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub separation: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RasterArgs {
    /// A dataset directory or a directory of dataset directories.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    /// Quantile of each cluster's extent covered by its label box.
    #[arg(long, default_value_t = DEFAULT_COVERAGE)]
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Blob,
    Model,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectorArgs {
    #[arg(long, value_enum, default_value_t = Backend::Blob)]
    pub backend: Backend,
    /// Serialized detection model, required by the model backend.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 0.25)]
    pub confidence: f64,
    #[arg(long, default_value_t = 0.45)]
    pub iou: f64,
    #[arg(long, default_value_t = 3.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.08)]
    pub density_threshold: f64,
    #[arg(long, default_value_t = 25)]
    pub min_area: usize,
    #[arg(long, default_value_t = 0.01)]
    pub min_mass: f64,
}

impl DetectorArgs {
    fn settings(&self) -> DetectorSettings {
        DetectorSettings {
            confidence_threshold: self.confidence,
            nms_iou_threshold: self.iou,
            smoothing_sigma_px: self.sigma,
            density_threshold_frac: self.density_threshold,
            min_box_area_px: self.min_area,
            min_mass_frac: self.min_mass,
        }
    }

    fn build(&self) -> std::result::Result<Box<dyn Detector>, CliError> {
        let settings = self.settings();
        settings.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        match self.backend {
            Backend::Blob => Ok(Box::new(BlobDetector::new(settings))),
            Backend::Model => {
                let path = self
                    .model
                    .as_ref()
                    .ok_or_else(|| CliError::Usage("--backend model requires --model PATH".into()))?;
                model_backend(path, settings)
            }
        }
    }
}

#[cfg(feature = "onnx")]
fn model_backend(path: &Path, settings: DetectorSettings) -> std::result::Result<Box<dyn Detector>, CliError> {
    let artifact = crate::detect::ModelArtifact::load(path)?;
    Ok(Box::new(crate::detect::ModelDetector::new(artifact, settings)))
}

#[cfg(not(feature = "onnx"))]
fn model_backend(_: &Path, _: DetectorSettings) -> std::result::Result<Box<dyn Detector>, CliError> {
    Err(CliError::Usage("this build has no model backend (enable the onnx feature)".into()))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectArgs {
    /// A `.pgm` frame or a directory of frames, each with its `.json` sidecar.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Detected,
    Random,
    Plusplus,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClusterArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_algorithm)]
    pub algo: Algorithm,
    #[arg(long, value_enum, default_value_t = InitKind::Detected)]
    pub init: InitKind,
    /// Detection report, required by `--init detected`.
    #[arg(long)]
    pub init_file: Option<PathBuf>,
    /// Cluster count for random and k-means++ init; defaults to the
    /// dataset's true k.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 12)]
    pub k_max: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "full", value_parser = parse_covariance)]
    pub covariance: Covariance,
    /// Output file for the clustering result.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 100)]
    pub suite_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated shape families; all by default.
    #[arg(long, value_delimiter = ',')]
    pub families: Vec<ShapeFamily>,
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "kmeans", value_parser = parse_algorithm)]
    pub algos: Vec<Algorithm>,
    /// Comma-separated indices (bic, aic, dunn, db, sw, ch, gap); none by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_index)]
    pub indices: Vec<IndexKind>,
    #[arg(long, default_value_t = 12)]
    pub k_max: usize,
    #[arg(long, default_value_t = 1.0)]
    pub subsample: f64,
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[command(flatten)]
    pub detector: DetectorArgs,
}

fn parse_algorithm(s: &str) -> Result<Algorithm> {
    s.parse()
}

fn parse_index(s: &str) -> Result<IndexKind> {
    s.parse()
}

fn parse_covariance(s: &str) -> Result<Covariance> {
    s.parse()
}

/// Provenance record written by every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, args: &impl Serialize, seed: u64) -> Self {
        let value = serde_json::to_value(args).expect("arguments serialize");
        let mut parameters = BTreeMap::new();
        flatten("", &value, &mut parameters);
        RunManifest {
            command: command.to_string(),
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

fn flatten(prefix: &str, v: &serde_json::Value, out: &mut BTreeMap<String, String>) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, x) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, out);
            }
        }
        serde_json::Value::Null => {}
        serde_json::Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(m) => CliError::Usage(m),
            other => CliError::Runtime(other),
        }
    }
}

type CliResult = std::result::Result<(), CliError>;

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn out_dir(explicit: &Option<PathBuf>, root: &Path, command: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| root.join(command))
}

/// Dataset directories under `input`: itself if it holds `points.csv`,
/// otherwise its subdirectories that do, sorted by name.
fn dataset_dirs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.join("points.csv").is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(|e| Error::io(input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("points.csv").is_file())
        .collect();
    dirs.sort();
    Ok(dirs)
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "frame".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_gen(a: &GenArgs, root: &Path) -> CliResult {
    let out = out_dir(&a.out, root, "datasets");
    let mut spec = SuiteSpec::default();
    if let Some(f) = a.family {
        spec = spec.with_families(&[f]);
    }
    if let Some(k) = a.k {
        spec.k_range = (k, k);
    }
    if let Some(n) = a.n {
        spec.n_range = (n, n);
    }
    if let Some(s) = a.separation {
        spec.separation_min = s;
    }
    let suite = generate_suite(a.count, a.seed, &spec)?;
    create_dir(&out)?;
    for (i, ds) in suite.iter().enumerate() {
        write_dataset(ds, &out.join(format!("ds{i:04}")))?;
    }
    RunManifest::new("gen", a, a.seed).write(&out.join("manifest.json"))?;
    println!("wrote {} datasets to {}", suite.len(), out.display());
    Ok(())
}

fn cmd_raster(a: &RasterArgs, root: &Path) -> CliResult {
    let out = out_dir(&a.out, root, "frames");
    let dirs = dataset_dirs(&a.input)?;
    if dirs.is_empty() {
        return Err(CliError::Usage(format!("no datasets under {}", a.input.display())));
    }
    create_dir(&out)?;
    for dir in &dirs {
        let ds = read_dataset(dir)?;
        let frame = rasterize(&ds, a.resolution, a.margin)?;
        let labels = make_labels(&ds, &frame, a.coverage)?;
        let name = dir.file_name().map_or_else(|| "dataset".into(), |s| s.to_string_lossy().into_owned());
        frame.write_pgm(&out.join(format!("{name}.pgm")))?;
        frame.write_sidecar(&out.join(format!("{name}.json")))?;
        write_labels(&labels, &out.join(format!("{name}.txt")))?;
    }
    RunManifest::new("raster", a, 0).write(&out.join("manifest.json"))?;
    println!("rasterized {} datasets into {}", dirs.len(), out.display());
    Ok(())
}

fn cmd_detect(a: &DetectArgs, root: &Path) -> CliResult {
    let detector = a.detector.build()?;
    let out = out_dir(&a.out, root, "detections");
    let frames: Vec<PathBuf> = if a.input.is_dir() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(&a.input)
            .map_err(|e| Error::io(&a.input, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
            .collect();
        v.sort();
        v
    } else {
        vec![a.input.clone()]
    };
    if frames.is_empty() {
        return Err(CliError::Usage(format!("no .pgm frames under {}", a.input.display())));
    }
    create_dir(&out)?;
    for image in &frames {
        let frame = RasterFrame::read_pgm(image, &image.with_extension("json"))?;
        let boxes = detector.detect(&frame)?;
        let init = boxes_to_init(&boxes, &frame);
        let report = DetectionReport::new(boxes, &init);
        report.write(&out.join(format!("{}.init.json", file_stem(image))))?;
        println!("{}: k = {}", file_stem(image), report.k);
    }
    RunManifest::new("detect", a, 0).write(&out.join("manifest.json"))?;
    Ok(())
}

fn cmd_cluster(a: &ClusterArgs, root: &Path) -> CliResult {
    if a.init == InitKind::Detected && a.init_file.is_none() {
        return Err(CliError::Usage("--init detected requires --init-file PATH".into()));
    }
    let ds = read_dataset(&a.dataset)?;
    let k = a.k.unwrap_or(ds.k_true);
    let init = match a.init {
        InitKind::Detected => {
            let path = a.init_file.as_ref().expect("checked above");
            InitSpec::Detected(DetectionReport::read(path)?.init_params())
        }
        InitKind::Random => InitSpec::Random { k, seed: a.seed },
        InitKind::Plusplus => InitSpec::PlusPlus { k, seed: a.seed },
    };
    let settings = AlgorithmSettings {
        k_max: a.k_max,
        covariance: a.covariance,
        ..AlgorithmSettings::default()
    };
    let res = a.algo.run(&ds.points, &init, &settings, a.seed)?;
    let out = a
        .out
        .clone()
        .unwrap_or_else(|| root.join("clusterings").join(format!("{}.json", a.algo)));
    let dir = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    create_dir(dir)?;
    res.write(&out)?;
    RunManifest::new("cluster", a, a.seed).write(&dir.join(format!("{}.manifest.json", file_stem(&out))))?;
    let ar = accuracy_rate(&ds.labels, &res.assignments)?;
    println!(
        "k = {} iterations = {} converged = {} inertia = {} accuracy = {ar}",
        res.k(),
        res.iterations,
        res.converged,
        res.inertia
    );
    Ok(())
}

fn cmd_bench(a: &BenchArgs, root: &Path) -> CliResult {
    let detector = a.detector.build()?;
    let out = out_dir(&a.out, root, "bench");
    let mut spec = SuiteSpec::default();
    if !a.families.is_empty() {
        spec = spec.with_families(&a.families);
    }
    if let Some(s) = a.separation {
        spec.separation_min = s;
    }
    spec.n_range = (a.n_min.unwrap_or(spec.n_range.0), a.n_max.unwrap_or(spec.n_range.1));
    let suite = generate_suite(a.suite_size, a.seed, &spec)?;
    let cfg = BenchConfig {
        algorithms: a.algos.clone(),
        indices: a.indices.clone(),
        seed: a.seed,
        k_max: a.k_max,
        subsample: a.subsample,
        jobs: a.jobs,
        ..BenchConfig::default()
    };
    let records = run_bench(&suite, detector.as_ref(), &cfg)?;
    let summary = write_outputs(&out, &records, &cfg)?;
    RunManifest::new("bench", a, a.seed).write(&out.join("manifest.json"))?;
    println!(
        "{} datasets ({} failed), detector k-detection rate {:.3}; results in {}",
        summary.datasets,
        summary.failed,
        summary.k_detection_rate["detector"],
        out.display()
    );
    Ok(())
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let root = &cli.out_root;
    let outcome = match &cli.command {
        Command::Gen(a) => cmd_gen(a, root),
        Command::Raster(a) => cmd_raster(a, root),
        Command::Detect(a) => cmd_detect(a, root),
        Command::Cluster(a) => cmd_cluster(a, root),
        Command::Bench(a) => cmd_bench(a, root),
    };
    match outcome {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_flattens_parameters() {
        let a = GenArgs {
            count: 2,
            seed: 7,
            out: None,
            family: Some(ShapeFamily::NoisyMoons),
            k: None,
            n: Some(100),
            separation: None,
        };
        let m = RunManifest::new("gen", &a, 7);
        assert_eq!(m.parameters["count"], "2");
        assert_eq!(m.parameters["family"], "NoisyMoons");
        assert!(!m.parameters.contains_key("k"));
        assert!(m.timestamp.ends_with('Z'));
    }

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(run(["clustinit", "cluster", "--dataset", "x", "--algo", "dbscan"]), 1);
        assert_eq!(run(["clustinit", "nonsense"]), 1);
        assert_eq!(run(["clustinit", "--help"]), 0);
    }
}
