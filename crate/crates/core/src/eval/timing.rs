use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::clustering::KMeansClusterer;
use crate::datagen::{generate, GeneratorConfig};
use crate::detect::{boxes_to_init, Detector};
use crate::indices::{estimate_k, IndexKind};
use crate::raster::{rasterize, DEFAULT_MARGIN, DEFAULT_RESOLUTION};
use crate::seed::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingConfig {
    pub k_max: usize,
    pub resolution: usize,
    /// Each detector timing is the minimum over this many repetitions.
    pub repeats: usize,
    pub seed: u64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            k_max: 12,
            resolution: DEFAULT_RESOLUTION,
            repeats: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub n: usize,
    pub time_rasterize_s: f64,
    /// Detection and box conversion on the finished frame.
    pub time_detect_stage_s: f64,
    /// Rasterization plus detection stage.
    pub time_pipeline_s: f64,
    pub time_index_sweep_s: BTreeMap<IndexKind, f64>,
}

impl TimingRow {
    pub fn total_index_sweep_s(&self) -> f64 {
        self.time_index_sweep_s.values().sum()
    }
}

fn elapsed(f: impl FnOnce() -> Result<()>) -> Result<f64> {
    let t = Instant::now();
    f()?;
    Ok(t.elapsed().as_secs_f64())
}

/// Times the detector pipeline and each index sweep on Gaussian blob data
/// with `k_true` clusters for every `n`, serially.
///
/// Every `n` uses the same generator seed. Detector timings are minima over
/// `cfg.repeats` rounds, each round visiting every `n` once so that slow
/// periods of the machine hit all sizes alike. Each sweep runs once.
pub fn time_scaling_experiment(
    n_values: &[usize],
    k_true: usize,
    methods: &[IndexKind],
    detector: &dyn Detector,
    cfg: &TimingConfig,
) -> Result<Vec<TimingRow>> {
    if n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("n values must be increasing".into()));
    }
    let data_seed = derive_seed(cfg.seed, 0);
    let data = n_values
        .iter()
        .map(|&n| {
            let ds = generate(&GeneratorConfig::blobs(k_true, n, data_seed))?;
            let frame = rasterize(&ds, cfg.resolution, DEFAULT_MARGIN)?;
            Ok((ds, frame))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut raster_s = vec![f64::INFINITY; data.len()];
    let mut detect_s = vec![f64::INFINITY; data.len()];
    for _ in 0..cfg.repeats.max(1) {
        for (i, (ds, frame)) in data.iter().enumerate() {
            let t = elapsed(|| rasterize(ds, cfg.resolution, DEFAULT_MARGIN).map(drop))?;
            raster_s[i] = raster_s[i].min(t);
            let t = elapsed(|| {
                let boxes = detector.detect(frame)?;
                std::hint::black_box(boxes_to_init(&boxes, frame));
                Ok(())
            })?;
            detect_s[i] = detect_s[i].min(t);
        }
    }
    let mut rows = Vec::with_capacity(data.len());
    for (i, (ds, _)) in data.iter().enumerate() {
        let mut time_index_sweep_s = BTreeMap::new();
        for (j, kind) in methods.iter().enumerate() {
            let seed = derive_seed(cfg.seed, 1 + j as u64);
            let t = elapsed(|| estimate_k(&ds.points, *kind, cfg.k_max, &KMeansClusterer::default(), seed).map(drop))?;
            time_index_sweep_s.insert(*kind, t);
        }
        rows.push(TimingRow {
            n: ds.len(),
            time_rasterize_s: raster_s[i],
            time_detect_stage_s: detect_s[i],
            time_pipeline_s: raster_s[i] + detect_s[i],
            time_index_sweep_s,
        });
    }
    Ok(rows)
}
