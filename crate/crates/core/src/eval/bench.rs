use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::charts;
use super::{accuracy_rate, match_centroids, MatchReport};
use crate::clustering::{Algorithm, AlgorithmSettings, InitSpec, KMeansClusterer};
use crate::datagen::{Dataset2D, ShapeFamily};
use crate::detect::{boxes_to_init, Detector};
use crate::indices::{estimate_k, IndexKind};
use crate::raster::{rasterize_points, DEFAULT_MARGIN, DEFAULT_RESOLUTION};
use crate::seed::{derive_seed, rng};
use crate::{Error, Point, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub algorithms: Vec<Algorithm>,
    pub indices: Vec<IndexKind>,
    pub seed: u64,
    /// Upper end of every index sweep.
    pub k_max: usize,
    pub resolution: usize,
    pub margin: f64,
    /// Fraction of each dataset fed to the detector and the index sweeps.
    pub subsample: f64,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    pub settings: AlgorithmSettings,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            algorithms: vec![Algorithm::KMeans],
            indices: Vec::new(),
            seed: 0,
            k_max: 12,
            resolution: DEFAULT_RESOLUTION,
            margin: DEFAULT_MARGIN,
            subsample: 1.0,
            jobs: 0,
            settings: AlgorithmSettings::default(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::InvalidConfig("subsample must lie in (0, 1]".into()));
        }
        if self.k_max < 2 {
            return Err(Error::InvalidConfig("k_max must be at least 2".into()));
        }
        Ok(())
    }
}

/// One algorithm run with detected and with random initialization.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AlgorithmRun {
    pub ar_detected_init: f64,
    pub ar_random_init: f64,
    pub iterations_detected: usize,
    pub iterations_random: usize,
    pub time_cluster_detected_s: f64,
    pub time_cluster_random_s: f64,
}

/// Everything measured on one dataset. When `error` is set the dataset
/// failed and the remaining fields hold whatever was measured before.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub dataset_id: String,
    pub family: ShapeFamily,
    pub n_points: usize,
    pub k_true: usize,
    pub k_detected: usize,
    /// Diagonal of the data bounding box.
    pub diagonal: f64,
    pub k_by_index: BTreeMap<IndexKind, usize>,
    pub centroid_match: MatchReport,
    pub runs: BTreeMap<Algorithm, AlgorithmRun>,
    pub time_detect_s: f64,
    pub time_index_sweep_s: f64,
    pub time_index_s: BTreeMap<IndexKind, f64>,
    pub error: Option<String>,
}

impl BenchRecord {
    fn new(id: usize, ds: &Dataset2D) -> Self {
        BenchRecord {
            dataset_id: format!("ds{id:04}"),
            family: ds.config.shape_family,
            n_points: ds.len(),
            k_true: ds.k_true,
            k_detected: 0,
            diagonal: ds.diagonal(),
            k_by_index: BTreeMap::new(),
            centroid_match: MatchReport::default(),
            runs: BTreeMap::new(),
            time_detect_s: 0.0,
            time_index_sweep_s: 0.0,
            time_index_s: BTreeMap::new(),
            error: None,
        }
    }

    /// Mean matched centroid distance over the bounding-box diagonal.
    pub fn normalized_centroid_distance(&self) -> f64 {
        if self.diagonal > 0.0 {
            self.centroid_match.mean_distance / self.diagonal
        } else {
            0.0
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

fn subsample(points: &[Point], fraction: f64, seed: u64) -> Vec<Point> {
    if fraction >= 1.0 {
        return points.to_vec();
    }
    let m = ((points.len() as f64 * fraction).round() as usize).clamp(1, points.len());
    let mut idx = sample(&mut rng(seed), points.len(), m).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| points[i]).collect()
}

fn position<T: PartialEq>(all: &[T], x: &T) -> u64 {
    all.iter().position(|a| a == x).expect("listed variant") as u64
}

fn bench_one(id: usize, ds: &Dataset2D, detector: &dyn Detector, cfg: &BenchConfig) -> BenchRecord {
    let mut rec = BenchRecord::new(id, ds);
    if let Err(e) = fill(&mut rec, ds, detector, cfg, derive_seed(cfg.seed, id as u64)) {
        rec.error = Some(e.to_string());
    }
    rec
}

fn fill(rec: &mut BenchRecord, ds: &Dataset2D, detector: &dyn Detector, cfg: &BenchConfig, seed: u64) -> Result<()> {
    let points = subsample(&ds.points, cfg.subsample, derive_seed(seed, 0));

    let started = Instant::now();
    let frame = rasterize_points(&points, cfg.resolution, cfg.margin)?;
    let boxes = detector.detect(&frame)?;
    let mut init = boxes_to_init(&boxes, &frame);
    rec.time_detect_s = started.elapsed().as_secs_f64();
    let scale = ds.len() as f64 / points.len() as f64;
    init.size_estimates.iter_mut().for_each(|s| *s *= scale);
    rec.k_detected = init.k;
    rec.centroid_match = match_centroids(&ds.centroids_true, &init.centroids);

    let sweeper = KMeansClusterer::default();
    for kind in &cfg.indices {
        let s = derive_seed(seed, 1 + position(&IndexKind::ALL, kind));
        let started = Instant::now();
        let outcome = estimate_k(&points, *kind, cfg.k_max, &sweeper, s);
        let t = started.elapsed().as_secs_f64();
        rec.time_index_s.insert(*kind, t);
        rec.time_index_sweep_s += t;
        if let Ok(report) = outcome {
            rec.k_by_index.insert(*kind, report.k_selected);
        }
    }

    let detected = InitSpec::Detected(init);
    for algo in &cfg.algorithms {
        let a = position(&Algorithm::ALL, algo);
        let run_seed = derive_seed(seed, 100 + a);
        let random = InitSpec::Random {
            k: ds.k_true,
            seed: derive_seed(seed, 200 + a),
        };
        let with_detected = algo.run(&ds.points, &detected, &cfg.settings, run_seed)?;
        let with_random = algo.run(&ds.points, &random, &cfg.settings, run_seed)?;
        rec.runs.insert(
            *algo,
            AlgorithmRun {
                ar_detected_init: accuracy_rate(&ds.labels, &with_detected.assignments)?,
                ar_random_init: accuracy_rate(&ds.labels, &with_random.assignments)?,
                iterations_detected: with_detected.iterations,
                iterations_random: with_random.iterations,
                time_cluster_detected_s: with_detected.elapsed_seconds,
                time_cluster_random_s: with_random.elapsed_seconds,
            },
        );
    }
    Ok(())
}

/// Runs detection, index sweeps and every selected algorithm with detected
/// and random initialization on each dataset.
///
/// Datasets are processed in parallel; record `i` depends only on dataset
/// `i` and `derive_seed(cfg.seed, i)`. Random initialization uses the true
/// `k` with a single restart.
pub fn run_bench(suite: &[Dataset2D], detector: &dyn Detector, cfg: &BenchConfig) -> Result<Vec<BenchRecord>> {
    cfg.validate()?;
    if suite.is_empty() {
        return Err(Error::InvalidInput("benchmark suite is empty".into()));
    }
    let work = || -> Vec<BenchRecord> {
        suite
            .par_iter()
            .enumerate()
            .map(|(i, ds)| bench_one(i, ds, detector, cfg))
            .collect()
    };
    let records = if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(work)
    } else {
        work()
    };
    if records.iter().all(|r| !r.ok()) {
        return Err(Error::AllFailed(records.len()));
    }
    Ok(records)
}

/// Whether a `bench.csv` column holds wall-clock time.
pub fn is_timing_column(name: &str) -> bool {
    name.starts_with("time_") || name.contains("_time_")
}

fn header(algorithms: &[Algorithm], indices: &[IndexKind]) -> Vec<String> {
    let mut h: Vec<String> = [
        "dataset_id",
        "family",
        "n_points",
        "k_true",
        "k_detected",
        "diagonal",
        "centroid_mean_distance",
        "centroid_max_distance",
        "centroid_mean_distance_norm",
        "unmatched_true",
        "unmatched_detected",
    ]
    .map(String::from)
    .to_vec();
    h.extend(indices.iter().map(|i| format!("k_{i}")));
    for a in algorithms {
        for f in ["ar_detected_init", "ar_random_init", "iterations_detected", "iterations_random"] {
            h.push(format!("{a}_{f}"));
        }
    }
    h.push("time_detect_s".into());
    h.push("time_index_sweep_s".into());
    h.extend(indices.iter().map(|i| format!("time_{i}_s")));
    for a in algorithms {
        h.push(format!("{a}_time_cluster_detected_s"));
        h.push(format!("{a}_time_cluster_random_s"));
    }
    h.push("error".into());
    h
}

fn row(r: &BenchRecord, algorithms: &[Algorithm], indices: &[IndexKind]) -> Vec<String> {
    let m = &r.centroid_match;
    let mut v = vec![
        r.dataset_id.clone(),
        r.family.to_string(),
        r.n_points.to_string(),
        r.k_true.to_string(),
        r.k_detected.to_string(),
        r.diagonal.to_string(),
        m.mean_distance.to_string(),
        m.max_distance.to_string(),
        r.normalized_centroid_distance().to_string(),
        m.unmatched_true.len().to_string(),
        m.unmatched_detected.len().to_string(),
    ];
    let opt = |x: Option<String>| x.unwrap_or_default();
    v.extend(indices.iter().map(|i| opt(r.k_by_index.get(i).map(|k| k.to_string()))));
    for a in algorithms {
        let run = r.runs.get(a);
        v.push(opt(run.map(|x| x.ar_detected_init.to_string())));
        v.push(opt(run.map(|x| x.ar_random_init.to_string())));
        v.push(opt(run.map(|x| x.iterations_detected.to_string())));
        v.push(opt(run.map(|x| x.iterations_random.to_string())));
    }
    v.push(r.time_detect_s.to_string());
    v.push(r.time_index_sweep_s.to_string());
    v.extend(indices.iter().map(|i| opt(r.time_index_s.get(i).map(|t| t.to_string()))));
    for a in algorithms {
        let run = r.runs.get(a);
        v.push(opt(run.map(|x| x.time_cluster_detected_s.to_string())));
        v.push(opt(run.map(|x| x.time_cluster_random_s.to_string())));
    }
    v.push(r.error.clone().unwrap_or_default());
    v
}

/// Writes one record per row. Per-algorithm columns are prefixed with the
/// algorithm name, per-index columns carry the index name; columns whose
/// name starts with `time_` or contains `_time_` are wall-clock seconds.
pub fn write_csv(path: &Path, records: &[BenchRecord], algorithms: &[Algorithm], indices: &[IndexKind]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::parse(path, e.to_string()))?;
    let io = |e: csv::Error| Error::parse(path, e.to_string());
    w.write_record(header(algorithms, indices)).map_err(io)?;
    for r in records {
        w.write_record(row(r, algorithms, indices)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidDistanceSummary {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    /// Per-dataset mean distance over the bounding-box diagonal.
    pub normalized: Vec<f64>,
    pub normalized_mean: f64,
    pub normalized_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub detected_mean: f64,
    pub random_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub detected_median: f64,
    pub random_median: f64,
    pub detected_mean: f64,
    pub random_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub n: usize,
    pub time_detect_s: f64,
    pub time_index_sweep_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRatio {
    /// Mean of clustering time with detected init over time with random init.
    pub cluster: f64,
    /// Same, with detection time added to the detected arm.
    pub pipeline: f64,
}

/// Aggregates over the successful records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub datasets: usize,
    pub failed: usize,
    /// Fraction of datasets whose `k` was found exactly, by method
    /// (`detector` or an index name).
    pub k_detection_rate: BTreeMap<String, f64>,
    pub centroid_distance: CentroidDistanceSummary,
    pub accuracy: BTreeMap<Algorithm, AccuracySummary>,
    pub iterations: BTreeMap<Algorithm, IterationSummary>,
    pub time_vs_n: Vec<TimePoint>,
    pub time_ratio: BTreeMap<Algorithm, TimeRatio>,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

impl Summary {
    pub fn from_records(records: &[BenchRecord], algorithms: &[Algorithm], indices: &[IndexKind]) -> Self {
        let ok: Vec<&BenchRecord> = records.iter().filter(|r| r.ok()).collect();
        let rate = |hit: &dyn Fn(&BenchRecord) -> bool| {
            if ok.is_empty() {
                0.0
            } else {
                ok.iter().filter(|r| hit(r)).count() as f64 / ok.len() as f64
            }
        };
        let mut k_detection_rate = BTreeMap::new();
        k_detection_rate.insert("detector".to_string(), rate(&|r| r.k_detected == r.k_true));
        for i in indices {
            k_detection_rate.insert(i.to_string(), rate(&|r| r.k_by_index.get(i) == Some(&r.k_true)));
        }

        let matched: Vec<&&BenchRecord> = ok.iter().filter(|r| !r.centroid_match.pairs.is_empty()).collect();
        let dists: Vec<f64> = matched.iter().map(|r| r.centroid_match.mean_distance).collect();
        let normalized: Vec<f64> = matched.iter().map(|r| r.normalized_centroid_distance()).collect();
        let centroid_distance = CentroidDistanceSummary {
            mean: mean(&dists),
            median: median(&dists),
            max: dists.iter().copied().fold(0.0, f64::max),
            normalized_mean: mean(&normalized),
            normalized_max: normalized.iter().copied().fold(0.0, f64::max),
            normalized,
        };

        let mut accuracy = BTreeMap::new();
        let mut iterations = BTreeMap::new();
        let mut time_ratio = BTreeMap::new();
        for a in algorithms {
            let runs: Vec<(&BenchRecord, &AlgorithmRun)> = ok.iter().filter_map(|r| r.runs.get(a).map(|x| (*r, x))).collect();
            let pick = |f: &dyn Fn(&AlgorithmRun) -> f64| runs.iter().map(|(_, x)| f(x)).collect::<Vec<f64>>();
            accuracy.insert(
                *a,
                AccuracySummary {
                    detected_mean: mean(&pick(&|x| x.ar_detected_init)),
                    random_mean: mean(&pick(&|x| x.ar_random_init)),
                },
            );
            let it_d = pick(&|x| x.iterations_detected as f64);
            let it_r = pick(&|x| x.iterations_random as f64);
            iterations.insert(
                *a,
                IterationSummary {
                    detected_median: median(&it_d),
                    random_median: median(&it_r),
                    detected_mean: mean(&it_d),
                    random_mean: mean(&it_r),
                },
            );
            let timed: Vec<&(&BenchRecord, &AlgorithmRun)> = runs.iter().filter(|(_, x)| x.time_cluster_random_s > 0.0).collect();
            let cluster: Vec<f64> = timed.iter().map(|(_, x)| x.time_cluster_detected_s / x.time_cluster_random_s).collect();
            let pipeline: Vec<f64> = timed
                .iter()
                .map(|(r, x)| (r.time_detect_s + x.time_cluster_detected_s) / x.time_cluster_random_s)
                .collect();
            time_ratio.insert(
                *a,
                TimeRatio {
                    cluster: mean(&cluster),
                    pipeline: mean(&pipeline),
                },
            );
        }

        let mut time_vs_n: Vec<TimePoint> = ok
            .iter()
            .map(|r| TimePoint {
                n: r.n_points,
                time_detect_s: r.time_detect_s,
                time_index_sweep_s: r.time_index_sweep_s,
            })
            .collect();
        time_vs_n.sort_by_key(|p| p.n);

        Summary {
            datasets: records.len(),
            failed: records.len() - ok.len(),
            k_detection_rate,
            centroid_distance,
            accuracy,
            iterations,
            time_vs_n,
            time_ratio,
        }
    }
}

/// Writes `bench.csv`, `summary.json` and `charts/*.svg` under `dir`.
pub fn write_outputs(dir: &Path, records: &[BenchRecord], cfg: &BenchConfig) -> Result<Summary> {
    std::fs::create_dir_all(dir.join("charts")).map_err(|e| Error::io(dir, e))?;
    write_csv(&dir.join("bench.csv"), records, &cfg.algorithms, &cfg.indices)?;
    let summary = Summary::from_records(records, &cfg.algorithms, &cfg.indices);
    let path = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    for (name, svg) in charts::render_all(&summary) {
        let path = dir.join("charts").join(name);
        std::fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
    }
    Ok(summary)
}
