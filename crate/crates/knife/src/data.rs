//! Dataset container, standardization, CSV ingestion, and the synthetic
//! benchmark generators.
//!
//! Features are standardized to mean zero and unit (n-1 denominator)
//! standard deviation. Validation and test data are always standardized
//! with *training* statistics; the raw generators hand back unstandardized
//! matrices so callers control which statistics apply.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::Write;
use std::path::Path;

use crate::error::{KnifeError, Result};
use crate::rng::substream;

/// How many proposals the orange-skin rejection sampler may spend on a
/// single accepted draw.
pub const REJECTION_CAP: usize = 1_000_000;

/// True coefficients shared by the linear and sinusoidal simulations:
/// five informative features followed by five pure-noise features.
pub const BETA_TRUE: [f64; 10] = [6.0, -4.0, 3.0, 2.0, -2.0, 0.0, 0.0, 0.0, 0.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

/// Standardized design matrix with its response and the statistics used.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub task: Task,
    pub means: Array1<f64>,
    pub scales: Array1<f64>,
}

/// Unstandardized draw from a generator or file.
#[derive(Debug, Clone)]
pub struct RawData {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub task: Task,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimKind {
    LinearSim,
    SinusoidSim,
    OrangeSkin,
}

impl std::fmt::Display for SimKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimKind::LinearSim => write!(f, "linear"),
            SimKind::SinusoidSim => write!(f, "sinusoid"),
            SimKind::OrangeSkin => write!(f, "orange"),
        }
    }
}

/// A synthetic-scenario description. For the orange-skin model `n` counts
/// observations per class and `p_noise` extra noise features; the other
/// simulations have ten fixed features and ignore `p_noise`.
#[derive(Debug, Clone, Copy)]
pub struct SimSpec {
    pub kind: SimKind,
    pub n: usize,
    pub p_noise: usize,
    pub seed: u64,
}

/// Columnwise `(x - mean) / sd` with the n-1 denominator. Constant columns
/// map to zeros with a recorded scale of 1 so downstream weighting can kill
/// them rather than a division blowing up.
pub fn standardize(x_raw: &Array2<f64>) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
    let n = x_raw.nrows();
    let p = x_raw.ncols();
    let mut means = Array1::zeros(p);
    let mut scales = Array1::ones(p);
    for j in 0..p {
        let col = x_raw.column(j);
        let mean = col.sum() / n as f64;
        means[j] = mean;
        if n > 1 {
            let ss: f64 = col.iter().map(|v| (v - mean) * (v - mean)).sum();
            let sd = (ss / (n as f64 - 1.0)).sqrt();
            if sd > 0.0 {
                scales[j] = sd;
            }
        }
    }
    let x = apply_standardization(x_raw, &means, &scales);
    (x, means, scales)
}

pub fn apply_standardization(
    x_raw: &Array2<f64>,
    means: &Array1<f64>,
    scales: &Array1<f64>,
) -> Array2<f64> {
    let mut x = x_raw.clone();
    for j in 0..x.ncols() {
        let (m, s) = (means[j], scales[j]);
        x.column_mut(j).mapv_inplace(|v| (v - m) / s);
    }
    x
}

impl Dataset {
    /// Standardizes `raw` with its own statistics.
    pub fn from_raw(raw: &RawData) -> Result<Self> {
        validate_raw(raw)?;
        let (x, means, scales) = standardize(&raw.x);
        Ok(Dataset {
            x,
            y: raw.y.clone(),
            task: raw.task,
            means,
            scales,
        })
    }

    /// Standardizes `raw` with statistics taken from other (training) data.
    pub fn from_raw_with_stats(
        raw: &RawData,
        means: &Array1<f64>,
        scales: &Array1<f64>,
    ) -> Result<Self> {
        validate_raw(raw)?;
        if means.len() != raw.x.ncols() || scales.len() != raw.x.ncols() {
            return Err(KnifeError::DimensionMismatch {
                context: "from_raw_with_stats: statistics vs columns",
                expected: raw.x.ncols(),
                got: means.len(),
            });
        }
        Ok(Dataset {
            x: apply_standardization(&raw.x, means, scales),
            y: raw.y.clone(),
            task: raw.task,
            means: means.clone(),
            scales: scales.clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Restricted to a subset of feature columns (statistics carried along).
    pub fn select_features(&self, subset: &[usize]) -> Dataset {
        let n = self.n();
        let mut x = Array2::zeros((n, subset.len()));
        let mut means = Array1::zeros(subset.len());
        let mut scales = Array1::zeros(subset.len());
        for (cj, &j) in subset.iter().enumerate() {
            x.column_mut(cj).assign(&self.x.column(j));
            means[cj] = self.means[j];
            scales[cj] = self.scales[j];
        }
        Dataset {
            x,
            y: self.y.clone(),
            task: self.task,
            means,
            scales,
        }
    }
}

fn validate_raw(raw: &RawData) -> Result<()> {
    if raw.x.nrows() != raw.y.len() {
        return Err(KnifeError::DimensionMismatch {
            context: "dataset: rows vs response",
            expected: raw.x.nrows(),
            got: raw.y.len(),
        });
    }
    if raw.x.iter().any(|v| !v.is_finite()) || raw.y.iter().any(|v| !v.is_finite()) {
        return Err(KnifeError::NonFinite("dataset"));
    }
    if raw.task == Task::Classification {
        for &v in raw.y.iter() {
            if v != 1.0 && v != -1.0 {
                return Err(KnifeError::InvalidLabel(v));
            }
        }
    }
    Ok(())
}

fn draw_normals(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.sample(StandardNormal)).collect()
}

/// Raw draw from `y = X b + noise_sd * eps` with ten standard-normal
/// features. `noise_sd = 0` is the exact-response test hook.
pub fn gen_linear_raw(n: usize, seed: u64, noise_sd: f64) -> RawData {
    let mut rng = substream(seed, 0);
    let p = BETA_TRUE.len();
    let x = Array2::from_shape_vec((n, p), draw_normals(&mut rng, n * p)).unwrap();
    let eps = draw_normals(&mut rng, n);
    let y = Array1::from_shape_fn(n, |i| {
        let mut v = 0.0;
        for j in 0..p {
            v += x[[i, j]] * BETA_TRUE[j];
        }
        v + noise_sd * eps[i]
    });
    RawData {
        x,
        y,
        task: Task::Regression,
    }
}

/// Raw draw from `y = sin(X) b + noise_sd * eps`.
pub fn gen_sinusoid_raw(n: usize, seed: u64, noise_sd: f64) -> RawData {
    let mut rng = substream(seed, 0);
    let p = BETA_TRUE.len();
    let x = Array2::from_shape_vec((n, p), draw_normals(&mut rng, n * p)).unwrap();
    let eps = draw_normals(&mut rng, n);
    let y = Array1::from_shape_fn(n, |i| {
        let mut v = 0.0;
        for j in 0..p {
            v += x[[i, j]].sin() * BETA_TRUE[j];
        }
        v + noise_sd * eps[i]
    });
    RawData {
        x,
        y,
        task: Task::Regression,
    }
}

#[inline]
fn shell_norm_ok(v: &[f64]) -> bool {
    let r2: f64 = v.iter().map(|a| a * a).sum();
    (9.0..=16.0).contains(&r2)
}

/// Raw draw from the skin-of-the-orange model: class `+1` is a 4-dimensional
/// standard normal, class `-1` is the same conditioned on its squared norm
/// lying in `[9, 16]`; `p_noise` standard-normal features are appended to
/// both classes. Classes are exactly balanced with `n_per_class` rows each,
/// `+1` rows first.
pub fn gen_orange_raw(n_per_class: usize, p_noise: usize, seed: u64) -> Result<RawData> {
    let mut rng = substream(seed, 0);
    let p = 4 + p_noise;
    let n = 2 * n_per_class;
    let mut x = Array2::zeros((n, p));
    let mut y = Array1::zeros(n);
    for i in 0..n_per_class {
        let row = draw_normals(&mut rng, p);
        for j in 0..p {
            x[[i, j]] = row[j];
        }
        y[i] = 1.0;
    }
    for i in n_per_class..n {
        let mut attempts = 0usize;
        let core = loop {
            let cand = draw_normals(&mut rng, 4);
            attempts += 1;
            if shell_norm_ok(&cand) {
                break cand;
            }
            if attempts >= REJECTION_CAP {
                return Err(KnifeError::RejectionCapExceeded { cap: REJECTION_CAP });
            }
        };
        for j in 0..4 {
            x[[i, j]] = core[j];
        }
        let noise = draw_normals(&mut rng, p_noise);
        for j in 0..p_noise {
            x[[i, 4 + j]] = noise[j];
        }
        y[i] = -1.0;
    }
    Ok(RawData {
        x,
        y,
        task: Task::Classification,
    })
}

/// Fraction of `proposals` 4-dimensional standard normal draws whose squared
/// norm lands in the `[9, 16]` shell. This is exactly the acceptance
/// probability of the rejection sampler behind [`gen_orange_raw`].
pub fn orange_acceptance_rate(proposals: usize, seed: u64) -> f64 {
    let mut rng = substream(seed, 0);
    let mut accepted = 0usize;
    for _ in 0..proposals {
        let cand = draw_normals(&mut rng, 4);
        if shell_norm_ok(&cand) {
            accepted += 1;
        }
    }
    accepted as f64 / proposals as f64
}

/// Raw draw for a scenario description.
pub fn generate_raw(spec: &SimSpec) -> Result<RawData> {
    match spec.kind {
        SimKind::LinearSim => Ok(gen_linear_raw(spec.n, spec.seed, 1.0)),
        SimKind::SinusoidSim => Ok(gen_sinusoid_raw(spec.n, spec.seed, 1.0)),
        SimKind::OrangeSkin => gen_orange_raw(spec.n, spec.p_noise, spec.seed),
    }
}

/// Linear regression simulation, standardized with its own statistics.
pub fn simulate_linear(n: usize, seed: u64) -> Result<Dataset> {
    Dataset::from_raw(&gen_linear_raw(n, seed, 1.0))
}

/// Sinusoidal regression simulation.
pub fn simulate_sinusoid(n: usize, seed: u64) -> Result<Dataset> {
    Dataset::from_raw(&gen_sinusoid_raw(n, seed, 1.0))
}

/// Skin-of-the-orange classification simulation.
pub fn simulate_orange(n_per_class: usize, p_noise: usize, seed: u64) -> Result<Dataset> {
    Dataset::from_raw(&gen_orange_raw(n_per_class, p_noise, seed)?)
}

fn csv_err(path: &Path, message: impl Into<String>) -> KnifeError {
    KnifeError::Csv {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Reads a rectangular numeric CSV with a header row; `response_column`
/// names the response, every other column is a feature (file order).
/// Features are standardized with the file's own statistics.
pub fn load_csv(path: &Path, response_column: &str, task: Task) -> Result<Dataset> {
    let raw = load_csv_raw(path, response_column, task)?;
    Dataset::from_raw(&raw)
}

/// Same as [`load_csv`] but leaves features unstandardized.
pub fn load_csv_raw(path: &Path, response_column: &str, task: Task) -> Result<RawData> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| csv_err(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_err(path, e.to_string()))?
        .clone();
    let resp_idx = headers
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| csv_err(path, format!("missing response column '{response_column}'")))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != resp_idx)
        .map(|(_, h)| h.to_string())
        .collect();
    let p = feature_names.len();
    if p == 0 {
        return Err(csv_err(path, "no feature columns"));
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut y: Vec<f64> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e.to_string()))?;
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                csv_err(
                    path,
                    format!(
                        "non-numeric cell '{}' in column '{}' at data row {}",
                        field,
                        &headers[i],
                        line + 1
                    ),
                )
            })?;
            if i == resp_idx {
                y.push(v);
            } else {
                rows.push(v);
            }
        }
    }
    let n = y.len();
    if n == 0 {
        return Err(csv_err(path, "no data rows"));
    }
    let x = Array2::from_shape_vec((n, p), rows)
        .map_err(|e| csv_err(path, format!("shape error: {e}")))?;
    let raw = RawData {
        x,
        y: Array1::from_vec(y),
        task,
    };
    validate_raw(&raw)?;
    Ok(raw)
}

/// Writes `x_1..x_p, y` with full-precision floats.
pub fn write_dataset_csv(path: &Path, x: &Array2<f64>, y: &Array1<f64>) -> Result<()> {
    let mut out = String::new();
    for j in 0..x.ncols() {
        out.push_str(&format!("x_{},", j + 1));
    }
    out.push_str("y\n");
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            out.push_str(&format!("{},", x[[i, j]]));
        }
        out.push_str(&format!("{}\n", y[i]));
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(|e| KnifeError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    file.write_all(contents.as_bytes()).map_err(|e| KnifeError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
