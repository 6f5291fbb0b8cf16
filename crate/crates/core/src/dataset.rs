//! Sample-set generation, noising, splitting and CSV persistence.
//!
//! A sample pairs a velocity profile `x` (one S-wave velocity per layer,
//! km/s) with its dispersion curve `y` (phase velocity at each grid
//! frequency, km/s). Profiles are drawn entry-wise from per-layer uniform
//! ranges; curves come from the forward model. Sample `j` always uses RNG
//! stream `j` of the dataset seed, so generation is reproducible and
//! schedule-independent.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dispersion::{dispersion_curve, DispersionError, EarthStack, RootSearchConfig};
use crate::util::{parallel_map_indexed, standard_normal, stream_rng, uniform_in};

/// Current on-disk format version.
pub const DATASET_FORMAT_VERSION: u32 = 1;

/// Built-in per-layer sampling ranges (the crustal-model presets).
pub const RANGE_PRESETS_JSON: &str = include_str!("../assets/range_presets.json");

/// Errors from dataset generation and persistence.
#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("invalid ranges: {0}")]
    InvalidRanges(String),
    #[error("forward model failed on too many draws: {successes} successes after {attempts} attempts")]
    Generation { attempts: usize, successes: usize },
    #[error("split needs at least 10 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid noise spec: {0}")]
    InvalidNoise(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed dataset file: {0}")]
    Malformed(String),
    #[error("dataset format version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("dimension mismatch at row {row}: expected {expected} columns, found {found}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Dispersion(#[from] DispersionError),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Per-layer uniform sampling bounds `[a_l, b_l]` (km/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRanges {
    bounds: Vec<[f64; 2]>,
}

impl SampleRanges {
    pub fn new(bounds: Vec<[f64; 2]>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(DatasetError::InvalidRanges("no layer ranges given".into()));
        }
        for (l, b) in bounds.iter().enumerate() {
            if !(b[0] <= b[1]) || !(b[0] > 0.0) {
                return Err(DatasetError::InvalidRanges(format!(
                    "layer {l}: need 0 < a <= b, got [{}, {}]",
                    b[0], b[1]
                )));
            }
        }
        Ok(Self { bounds })
    }

    /// Built-in preset for 3, 5 or 9 layers.
    pub fn preset(n_layers: usize) -> Result<Self> {
        let presets: std::collections::BTreeMap<String, Vec<[f64; 2]>> =
            serde_json::from_str(RANGE_PRESETS_JSON).expect("embedded presets parse");
        presets
            .get(&n_layers.to_string())
            .cloned()
            .map(|bounds| Self { bounds })
            .ok_or_else(|| {
                DatasetError::InvalidRanges(format!(
                    "no preset for {n_layers} layers (have 3, 5, 9)"
                ))
            })
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn num_layers(&self) -> usize {
        self.bounds.len()
    }
}

/// One (profile, curve) realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// S-wave velocity per layer [km/s].
    pub x: Vec<f64>,
    /// Dispersion curve values on the grid [km/s].
    pub y: Vec<f64>,
}

/// Provenance header stored on the first line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub version: u32,
    pub n_z: usize,
    pub n_omega: usize,
    pub seed: u64,
    pub thickness: f64,
    pub ranges: Vec<[f64; 2]>,
    pub grid: Vec<f64>,
    /// Draws rejected because the forward solve failed.
    pub discards: usize,
}

/// An in-memory dataset: header plus samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Inputs-as-rows matrix of the selected samples' dispersion curves.
    pub fn y_matrix(&self, indices: &[usize]) -> Array2<f64> {
        matrixize(indices.iter().map(|&j| self.samples[j].y.as_slice()))
    }

    /// Inputs-as-rows matrix of the selected samples' velocity profiles.
    pub fn x_matrix(&self, indices: &[usize]) -> Array2<f64> {
        matrixize(indices.iter().map(|&j| self.samples[j].x.as_slice()))
    }
}

fn matrixize<'a>(rows: impl ExactSizeIterator<Item = &'a [f64]>) -> Array2<f64> {
    let n = rows.len();
    let mut data = Vec::new();
    let mut width = 0;
    for row in rows {
        width = row.len();
        data.extend_from_slice(row);
    }
    Array2::from_shape_vec((n, width), data).expect("rows have equal width")
}

/// Draws `n` velocity profiles, entry `l` uniform in its `[a_l, b_l]`.
/// Sample `j` uses RNG stream `j`, so the output is reproducible per seed.
pub fn sample_models(ranges: &SampleRanges, n: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n as u64).map(|j| sample_one(ranges, seed, j)).collect()
}

fn sample_one(ranges: &SampleRanges, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    ranges
        .bounds
        .iter()
        .map(|b| uniform_in(&mut rng, b[0], b[1]))
        .collect()
}

/// Generation outcome: the dataset plus the number of discarded draws.
#[derive(Debug)]
pub struct GenerationReport {
    pub dataset: Dataset,
    pub discards: usize,
}

/// Generates `n` samples by drawing profiles and running the forward model.
/// Draws whose forward solve fails are discarded and replaced by further
/// streams until `n` successes, up to a `10 n` attempt budget.
pub fn generate_dataset(
    ranges: &SampleRanges,
    n: usize,
    grid: &[f64],
    seed: u64,
    cfg_for: impl Fn(&EarthStack) -> RootSearchConfig + Sync,
    thickness: f64,
    threads: usize,
) -> Result<GenerationReport> {
    if n == 0 {
        return Err(DatasetError::InvalidRanges("need n >= 1".into()));
    }
    let budget = 10 * n;
    let mut samples: Vec<Sample> = Vec::with_capacity(n);
    let mut next_stream = 0usize;
    let mut discards = 0usize;
    while samples.len() < n && next_stream < budget {
        let wave = (n - samples.len()).min(budget - next_stream);
        let results = parallel_map_indexed(wave, threads, |k| {
            let stream = (next_stream + k) as u64;
            let x = sample_one(ranges, seed, stream);
            let stack = EarthStack::from_vs_profile(&x, thickness).ok()?;
            let cfg = cfg_for(&stack);
            let curve = dispersion_curve(&stack, grid, &cfg).ok()?;
            Some(Sample {
                x,
                y: curve.velocities,
            })
        });
        next_stream += wave;
        for r in results {
            match r {
                Some(s) => samples.push(s),
                None => discards += 1,
            }
        }
    }
    if samples.len() < n {
        return Err(DatasetError::Generation {
            attempts: next_stream,
            successes: samples.len(),
        });
    }
    let header = DatasetHeader {
        version: DATASET_FORMAT_VERSION,
        n_z: ranges.num_layers(),
        n_omega: grid.len(),
        seed,
        thickness,
        ranges: ranges.bounds.clone(),
        grid: grid.to_vec(),
        discards,
    };
    Ok(GenerationReport {
        dataset: Dataset { header, samples },
        discards,
    })
}

/// Index partition of `n` samples into train/validation/test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
}

/// Uniformly random disjoint 80/10/10 partition, deterministic per seed.
pub fn split_dataset(n: usize, seed: u64) -> Result<DatasetSplit> {
    if n < 10 {
        return Err(DatasetError::TooFewSamples(n));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(seed, 0);
    // Fisher-Yates with pinned index draws.
    for i in (1..n).rev() {
        let j = (uniform_in(&mut rng, 0.0, (i + 1) as f64)) as usize;
        indices.swap(i, j.min(i));
    }
    let n_test = n / 10;
    let n_val = n / 10;
    let n_train = n - n_val - n_test;
    let train = indices[..n_train].to_vec();
    let validation = indices[n_train..n_train + n_val].to_vec();
    let test = indices[n_train + n_val..].to_vec();
    Ok(DatasetSplit {
        train,
        validation,
        test,
        seed,
    })
}

/// Multiplicative noise model `y -> y (1 + eps)` with `eps` drawn per scalar
/// entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseKind {
    /// `eps ~ Uniform(p1, p2)` (fractions, e.g. -0.005..0.005).
    Uniform { p1: f64, p2: f64 },
    /// `eps ~ Normal(mean = p1, std = p2)`.
    Gaussian { p1: f64, p2: f64 },
    /// Identity.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKind,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            seed: 0,
        }
    }

    pub fn uniform(lo: f64, hi: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Uniform { p1: lo, p2: hi },
            seed,
        }
    }

    pub fn gaussian(mean: f64, std: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Gaussian { p1: mean, p2: std },
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            NoiseKind::Uniform { p1, p2 } if !(p1 < p2) => Err(DatasetError::InvalidNoise(
                format!("uniform noise needs p1 < p2, got [{p1}, {p2}]"),
            )),
            NoiseKind::Gaussian { p2, .. } if !(p2 >= 0.0) => Err(DatasetError::InvalidNoise(
                format!("gaussian noise needs std >= 0, got {p2}"),
            )),
            _ => Ok(()),
        }
    }

    /// Short human-readable tag used in reports.
    pub fn label(&self) -> String {
        match self.kind {
            NoiseKind::None => "none".into(),
            NoiseKind::Uniform { p1, p2 } => format!("uniform({p1},{p2})"),
            NoiseKind::Gaussian { p1, p2 } => format!("gaussian({p1},{p2})"),
        }
    }

    fn draw(&self, rng: &mut rand_chacha::ChaCha12Rng) -> f64 {
        match self.kind {
            NoiseKind::None => 0.0,
            NoiseKind::Uniform { p1, p2 } => uniform_in(rng, p1, p2),
            NoiseKind::Gaussian { p1, p2 } => p1 + p2 * standard_normal(rng),
        }
    }
}

/// Applies `y -> y (1 + eps)` entry-wise using the spec's seed (stream 0).
pub fn apply_noise(y: &[f64], spec: &NoiseSpec) -> Vec<f64> {
    apply_noise_stream(y, spec, 0)
}

/// As [`apply_noise`] on RNG stream `stream`; batch callers pass the sample
/// index so noising is independent of iteration order.
pub fn apply_noise_stream(y: &[f64], spec: &NoiseSpec, stream: u64) -> Vec<f64> {
    if matches!(spec.kind, NoiseKind::None) {
        return y.to_vec();
    }
    let mut rng = stream_rng(spec.seed, stream);
    y.iter().map(|v| v * (1.0 + spec.draw(&mut rng))).collect()
}

/// Noises each row of an inputs-as-rows matrix; row `j` uses stream `j`.
pub fn apply_noise_matrix(y: &Array2<f64>, spec: &NoiseSpec) -> Array2<f64> {
    if matches!(spec.kind, NoiseKind::None) {
        return y.clone();
    }
    let mut out = y.clone();
    for (j, mut row) in out.rows_mut().into_iter().enumerate() {
        let mut rng = stream_rng(spec.seed, j as u64);
        for v in row.iter_mut() {
            *v *= 1.0 + spec.draw(&mut rng);
        }
    }
    out
}

fn format_value(v: f64) -> String {
    // 17 significant digits: lossless for f64 and stable across runs.
    format!("{v:.16e}")
}

/// Writes the dataset: one `#`-prefixed JSON header line, then one CSV row
/// per sample (`x` columns then `y` columns, 17 significant digits).
pub fn save_dataset(path: impl AsRef<Path>, dataset: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "# {}",
        serde_json::to_string(&dataset.header).expect("header serializes")
    )?;
    let mut line = String::new();
    for s in &dataset.samples {
        line.clear();
        for (i, v) in s.x.iter().chain(s.y.iter()).enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format_value(*v));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`save_dataset`], validating version and
/// per-row column counts against the header.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| DatasetError::Malformed("empty file".into()))??;
    let json = header_line
        .strip_prefix('#')
        .ok_or_else(|| DatasetError::Malformed("missing '#' header line".into()))?
        .trim();
    let header: DatasetHeader = serde_json::from_str(json)
        .map_err(|e| DatasetError::Malformed(format!("header: {e}")))?;
    if header.version != DATASET_FORMAT_VERSION {
        return Err(DatasetError::VersionMismatch {
            found: header.version,
            expected: DATASET_FORMAT_VERSION,
        });
    }
    let expected = header.n_z + header.n_omega;
    let mut samples = Vec::new();
    for (row, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| DatasetError::Malformed(format!("row {row}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != expected {
            return Err(DatasetError::DimensionMismatch {
                row,
                expected,
                found: values.len(),
            });
        }
        samples.push(Sample {
            x: values[..header.n_z].to_vec(),
            y: values[header.n_z..].to_vec(),
        });
    }
    Ok(Dataset { header, samples })
}
