//! Linear soft-margin SVM: deterministic dual coordinate descent, one-vs-rest
//! multiclass, and a checksummed binary model format.
//!
//! The binary trainer minimizes the primal objective
//!
//! ```text
//! P(w, b) = 1/2 (||w||^2 + b^2) + C * sum_i max(0, 1 - y_i (w . x_i + b))
//! ```
//!
//! where the bias enters as an augmented constant feature of value 1 (so its
//! weight component is reported as `b`). The solver sweeps dual coordinates
//! in a seeded random order per epoch — each coordinate update is an exact
//! one-variable minimization — and stops when the duality gap certifies the
//! best iterate: `P_best - D(alpha) <= tol * (1 + |P_best|)`. Weak duality
//! makes the certificate unconditional: `P_best - P* <= P_best - D(alpha)`.
//!
//! Because the recorded objective is the best primal value reached so far,
//! the per-epoch objective trace is non-increasing by construction, and the
//! returned iterate is the one that attained it.

use std::fs;
use std::io;
use std::path::Path;

use crate::crc32;
use crate::hog::HogConfig;
use crate::rng::{derive_seed, SplitMix64};

/// Flag bit set when any one-vs-rest sub-problem hit `max_iter` without
/// certifying its tolerance. Bits above the lowest are free for embedding
/// pipelines to record their own metadata.
pub const FLAG_CONVERGENCE_WARNING: u16 = 1;

/// Solver parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Hinge penalty weight.
    pub c: f64,
    /// Relative duality-gap tolerance.
    pub tol: f64,
    /// Epoch budget.
    pub max_iter: u32,
    /// Seed for the per-epoch coordinate permutation.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { c: 0.025, tol: 1e-4, max_iter: 10_000, seed: 0 }
    }
}

impl TrainConfig {
    /// Checks the solver parameters; called by the trainer, exposed so
    /// embedding configuration layers can fail early.
    pub fn validate(&self) -> Result<(), SvmError> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(SvmError::InvalidConfig(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(SvmError::InvalidConfig(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(SvmError::InvalidConfig("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Canonical 28-byte little-endian encoding for the model file.
    fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28);
        out.extend_from_slice(&self.c.to_le_bytes());
        out.extend_from_slice(&self.tol.to_le_bytes());
        out.extend_from_slice(&self.max_iter.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out
    }

    fn from_bytes(bytes: &[u8]) -> Result<Self, SvmError> {
        if bytes.len() != 28 {
            return Err(SvmError::MalformedModel(format!(
                "train config block is {} bytes, expected 28",
                bytes.len()
            )));
        }
        let config = TrainConfig {
            c: f64::from_le_bytes(bytes[0..8].try_into().unwrap()),
            tol: f64::from_le_bytes(bytes[8..16].try_into().unwrap()),
            max_iter: u32::from_le_bytes(bytes[16..20].try_into().unwrap()),
            seed: u64::from_le_bytes(bytes[20..28].try_into().unwrap()),
        };
        config.validate().map_err(|_| {
            SvmError::MalformedModel("train config block fails validation".into())
        })?;
        Ok(config)
    }
}

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix buffer does not match {rows}x{cols}");
        FeatureMatrix { rows, cols, data }
    }

    /// Builds from per-sample rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SvmError> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(SvmError::DimensionMismatch { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(FeatureMatrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// All values, row-major.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|idx| (idx / self.cols.max(1), idx % self.cols.max(1)))
    }
}

/// Per-class decision values `w_k . x + b_k`, aligned with the model's class
/// list.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionScores {
    pub scores: Vec<f64>,
}

/// Result of one binary solve.
#[derive(Debug, Clone)]
pub struct BinarySolution {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Primal objective of the returned iterate.
    pub primal_objective: f64,
    /// Final certified gap `P_best - D(alpha)`.
    pub duality_gap: f64,
    pub epochs: u32,
    /// False when the epoch budget ran out before the gap closed; the best
    /// iterate is still returned.
    pub converged: bool,
    /// Best primal objective after each epoch; non-increasing.
    pub objective_trace: Vec<f64>,
}

/// A trained one-vs-rest linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvmModel {
    /// Ascending class ids, aligned with `weights` and `biases`.
    pub classes: Vec<u16>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    /// Descriptor configuration the features were extracted under.
    pub hog_config: HogConfig,
    pub train_config: TrainConfig,
    /// Bit 0 is [`FLAG_CONVERGENCE_WARNING`]; higher bits carry pipeline
    /// metadata and round-trip through the file format untouched.
    pub flags: u16,
}

impl LinearSvmModel {
    /// Feature dimension.
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Digest of the descriptor configuration, for compatibility checks.
    pub fn hog_digest(&self) -> u64 {
        self.hog_config.digest()
    }

    pub fn convergence_warning(&self) -> bool {
        self.flags & FLAG_CONVERGENCE_WARNING != 0
    }

    /// Per-class decision values.
    pub fn decision(&self, x: &[f64]) -> Result<DecisionScores, SvmError> {
        if x.len() != self.dim() {
            return Err(SvmError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        let scores = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| dot(w, x) + b)
            .collect();
        Ok(DecisionScores { scores })
    }

    /// Class with the highest decision value; ties go to the lowest class id.
    pub fn predict(&self, x: &[f64]) -> Result<u16, SvmError> {
        let scores = self.decision(x)?.scores;
        let mut best = 0usize;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        Ok(self.classes[best])
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SvmError {
    #[error("training data contains a single class")]
    SingleClassInput,
    #[error("non-finite feature at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },
    #[error("label {0} is not +1 or -1")]
    InvalidLabel(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("model format version {0} is not supported")]
    VersionUnsupported(u16),
    #[error("model file checksum mismatch")]
    ChecksumMismatch,
    #[error("malformed model file: {0}")]
    MalformedModel(String),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Trains one binary classifier by dual coordinate descent.
///
/// Labels must be exactly +1 or -1 with both present. The returned solution
/// is the best (lowest primal) iterate observed, certified by the duality
/// gap; `converged == false` means the gap never closed within `max_iter`
/// epochs and the caller should surface a warning.
pub fn train_binary(
    features: &FeatureMatrix,
    labels: &[f64],
    config: &TrainConfig,
) -> Result<BinarySolution, SvmError> {
    config.validate()?;
    let n = features.rows();
    if labels.len() != n {
        return Err(SvmError::DimensionMismatch { expected: n, got: labels.len() });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
        return Err(SvmError::InvalidLabel(bad));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(SvmError::SingleClassInput);
    }
    if let Some((row, col)) = features.first_non_finite() {
        return Err(SvmError::NonFiniteFeature { row, col });
    }

    let d = features.cols();
    let c = config.c;
    // Augmented weight vector: w_aug[..d] is w, w_aug[d] is the bias.
    let mut w_aug = vec![0.0f64; d + 1];
    let mut alpha = vec![0.0f64; n];
    // Q_ii = ||x_i||^2 + 1 >= 1, so the coordinate step never divides by zero.
    let qd: Vec<f64> = (0..n).map(|i| dot(features.row(i), features.row(i)) + 1.0).collect();

    let margin = |w_aug: &[f64], i: usize| -> f64 { dot(&w_aug[..d], features.row(i)) + w_aug[d] };
    let primal = |w_aug: &[f64]| -> f64 {
        let reg = 0.5 * dot(w_aug, w_aug);
        let hinge: f64 =
            (0..n).map(|i| (1.0 - labels[i] * margin(w_aug, i)).max(0.0)).sum();
        reg + c * hinge
    };

    let mut rng = SplitMix64::new(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut best_w = w_aug.clone();
    let mut best_p = primal(&w_aug);
    let mut trace = Vec::new();
    let mut gap = f64::INFINITY;
    let mut converged = false;
    let mut epochs = 0;

    for _ in 0..config.max_iter {
        epochs += 1;
        rng.shuffle(&mut order);
        for &i in &order {
            let g = labels[i] * margin(&w_aug, i) - 1.0;
            // Projected gradient: skip coordinates pinned at their bound.
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= c {
                g.max(0.0)
            } else {
                g
            };
            if pg == 0.0 {
                continue;
            }
            let next = (alpha[i] - g / qd[i]).clamp(0.0, c);
            let delta = next - alpha[i];
            if delta != 0.0 {
                alpha[i] = next;
                let step = delta * labels[i];
                for (wk, xk) in w_aug[..d].iter_mut().zip(features.row(i)) {
                    *wk += step * xk;
                }
                w_aug[d] += step;
            }
        }

        let p = primal(&w_aug);
        if p < best_p {
            best_p = p;
            best_w.copy_from_slice(&w_aug);
        }
        trace.push(best_p);
        let dual = alpha.iter().sum::<f64>() - 0.5 * dot(&w_aug, &w_aug);
        gap = best_p - dual;
        if gap <= config.tol * (1.0 + best_p.abs()) {
            converged = true;
            break;
        }
    }

    let bias = best_w[d];
    best_w.truncate(d);
    Ok(BinarySolution {
        weights: best_w,
        bias,
        primal_objective: best_p,
        duality_gap: gap,
        epochs,
        converged,
        objective_trace: trace,
    })
}

/// Trains a one-vs-rest multiclass model.
///
/// One binary problem per distinct class id (ascending), each seeded with a
/// stream derived from `config.seed` and the class position, so the whole
/// model is deterministic. If any sub-problem exhausts its epoch budget the
/// model carries [`FLAG_CONVERGENCE_WARNING`] instead of failing.
pub fn train_multiclass(
    features: &FeatureMatrix,
    labels: &[u16],
    config: &TrainConfig,
    hog_config: &HogConfig,
) -> Result<LinearSvmModel, SvmError> {
    if labels.len() != features.rows() {
        return Err(SvmError::DimensionMismatch {
            expected: features.rows(),
            got: labels.len(),
        });
    }
    let mut classes: Vec<u16> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(SvmError::SingleClassInput);
    }

    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    let mut flags = 0u16;
    for (j, &class) in classes.iter().enumerate() {
        let binary_labels: Vec<f64> =
            labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
        let sub_config =
            TrainConfig { seed: derive_seed(config.seed, j as u64), ..config.clone() };
        let solution = train_binary(features, &binary_labels, &sub_config)?;
        if !solution.converged {
            flags |= FLAG_CONVERGENCE_WARNING;
        }
        weights.push(solution.weights);
        biases.push(solution.bias);
    }
    Ok(LinearSvmModel {
        classes,
        weights,
        biases,
        hog_config: hog_config.clone(),
        train_config: config.clone(),
        flags,
    })
}

/// Fraction of rows whose prediction matches `labels`.
pub fn accuracy(
    model: &LinearSvmModel,
    features: &FeatureMatrix,
    labels: &[u16],
) -> Result<f64, SvmError> {
    if labels.len() != features.rows() {
        return Err(SvmError::DimensionMismatch {
            expected: features.rows(),
            got: labels.len(),
        });
    }
    if features.rows() == 0 {
        return Err(SvmError::InvalidConfig("cannot score an empty set".into()));
    }
    let mut hits = 0usize;
    for i in 0..features.rows() {
        if model.predict(features.row(i))? == labels[i] {
            hits += 1;
        }
    }
    Ok(hits as f64 / features.rows() as f64)
}

/// Result of a C grid search.
#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub best_c: f64,
    pub best_model: LinearSvmModel,
    /// `(c, validation accuracy)` for every candidate, ascending in C.
    pub accuracies: Vec<(f64, f64)>,
}

/// Trains one model per candidate C and picks the best validation accuracy,
/// breaking ties toward the smaller C.
pub fn grid_search_c(
    train_features: &FeatureMatrix,
    train_labels: &[u16],
    val_features: &FeatureMatrix,
    val_labels: &[u16],
    c_values: &[f64],
    base: &TrainConfig,
    hog_config: &HogConfig,
) -> Result<GridSearchOutcome, SvmError> {
    let mut cs: Vec<f64> = c_values.to_vec();
    if cs.is_empty() {
        return Err(SvmError::InvalidConfig("the C grid is empty".into()));
    }
    if cs.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
        return Err(SvmError::InvalidConfig("every C candidate must be positive".into()));
    }
    cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cs.dedup();

    let mut best: Option<(f64, LinearSvmModel, f64)> = None;
    let mut accuracies = Vec::with_capacity(cs.len());
    for &c in &cs {
        let config = TrainConfig { c, ..base.clone() };
        let model = train_multiclass(train_features, train_labels, &config, hog_config)?;
        let acc = accuracy(&model, val_features, val_labels)?;
        accuracies.push((c, acc));
        // Strict improvement only: equal accuracy keeps the smaller C seen
        // first in the ascending sweep.
        if best.as_ref().map_or(true, |(_, _, best_acc)| acc > *best_acc) {
            best = Some((c, model, acc));
        }
    }
    let (best_c, best_model, _) = best.expect("grid is non-empty");
    Ok(GridSearchOutcome { best_c, best_model, accuracies })
}

const MODEL_MAGIC: &[u8; 4] = b"MSVM";
const MODEL_VERSION: u16 = 1;

/// Serializes a model to its canonical byte representation (without writing
/// it anywhere). `save_model` appends nothing beyond these bytes.
pub fn model_to_bytes(model: &LinearSvmModel) -> Vec<u8> {
    let d = model.dim();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(MODEL_MAGIC);
    bytes.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    bytes.extend_from_slice(&model.flags.to_le_bytes());
    bytes.extend_from_slice(&(model.classes.len() as u16).to_le_bytes());
    bytes.extend_from_slice(&(d as u32).to_le_bytes());
    let hog = model.hog_config.to_bytes();
    bytes.extend_from_slice(&(hog.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&hog);
    let train = model.train_config.to_bytes();
    bytes.extend_from_slice(&(train.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&train);
    for ((class, weights), bias) in model.classes.iter().zip(&model.weights).zip(&model.biases) {
        bytes.extend_from_slice(&class.to_le_bytes());
        bytes.extend_from_slice(&bias.to_le_bytes());
        for w in weights {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
    }
    let crc = crc32::checksum(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());
    bytes
}

/// Writes the model file; see the module docs for the exact layout.
pub fn save_model(path: &Path, model: &LinearSvmModel) -> Result<(), SvmError> {
    fs::write(path, model_to_bytes(model))?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SvmError> {
        if self.pos + n > self.bytes.len() {
            return Err(SvmError::MalformedModel(format!(
                "field of {n} bytes overruns the payload at offset {}",
                self.pos
            )));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16, SvmError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, SvmError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, SvmError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Reads a model file, verifying magic and checksum before parsing.
pub fn load_model(path: &Path) -> Result<LinearSvmModel, SvmError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
        return Err(SvmError::BadMagic);
    }
    if bytes.len() < 8 {
        return Err(SvmError::ChecksumMismatch);
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32::checksum(body) != stored {
        return Err(SvmError::ChecksumMismatch);
    }

    let mut cur = Cursor { bytes: body, pos: 4 };
    let version = cur.u16()?;
    if version != MODEL_VERSION {
        return Err(SvmError::VersionUnsupported(version));
    }
    let flags = cur.u16()?;
    let class_count = cur.u16()? as usize;
    let dim = cur.u32()? as usize;
    let hog_len = cur.u32()? as usize;
    let hog_config = HogConfig::from_bytes(cur.take(hog_len)?)
        .map_err(|e| SvmError::MalformedModel(e.to_string()))?;
    let train_len = cur.u32()? as usize;
    let train_config = TrainConfig::from_bytes(cur.take(train_len)?)?;

    if class_count == 0 || dim == 0 {
        return Err(SvmError::MalformedModel(
            "model must have at least one class and a positive dimension".into(),
        ));
    }
    let mut classes = Vec::with_capacity(class_count);
    let mut weights = Vec::with_capacity(class_count);
    let mut biases = Vec::with_capacity(class_count);
    for _ in 0..class_count {
        classes.push(cur.u16()?);
        biases.push(cur.f64()?);
        let mut w = Vec::with_capacity(dim);
        for _ in 0..dim {
            w.push(cur.f64()?);
        }
        weights.push(w);
    }
    if cur.pos != body.len() {
        return Err(SvmError::MalformedModel(format!(
            "{} trailing bytes after the last class record",
            body.len() - cur.pos
        )));
    }
    Ok(LinearSvmModel { classes, weights, biases, hog_config, train_config, flags })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> FeatureMatrix {
        FeatureMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn tight(c: f64) -> TrainConfig {
        TrainConfig { c, tol: 1e-10, max_iter: 200_000, seed: 1 }
    }

    // ---- binary trainer ----

    #[test]
    fn two_point_problem_matches_the_analytic_solution() {
        // min 1/2 (w^2 + b^2) s.t. y_i (w x_i + b) >= 1 for x = -2, +2 has
        // the unique solution w = 1/2, b = 0 with both margins exactly 1.
        let features = matrix(&[&[-2.0], &[2.0]]);
        let sol = train_binary(&features, &[-1.0, 1.0], &tight(1000.0)).unwrap();
        assert!(sol.converged);
        assert!((sol.weights[0] - 0.5).abs() <= 1e-3, "w = {}", sol.weights[0]);
        assert!(sol.bias.abs() <= 1e-3, "b = {}", sol.bias);
        for (x, y) in [(-2.0, -1.0), (2.0, 1.0)] {
            let margin = y * (sol.weights[0] * x + sol.bias);
            assert!((margin - 1.0).abs() <= 1e-3, "margin {margin}");
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let features = matrix(&[&[0.0], &[1.0], &[2.0]]);
        assert!(matches!(
            train_binary(&features, &[1.0, 1.0, 1.0], &TrainConfig::default()),
            Err(SvmError::SingleClassInput)
        ));
    }

    #[test]
    fn bad_labels_are_rejected() {
        let features = matrix(&[&[0.0], &[1.0]]);
        assert!(matches!(
            train_binary(&features, &[1.0, 0.5], &TrainConfig::default()),
            Err(SvmError::InvalidLabel(_))
        ));
        assert!(matches!(
            train_binary(&features, &[1.0], &TrainConfig::default()),
            Err(SvmError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn non_finite_features_are_rejected() {
        let features = matrix(&[&[0.0, 1.0], &[f64::NAN, 2.0]]);
        match train_binary(&features, &[-1.0, 1.0], &TrainConfig::default()) {
            Err(SvmError::NonFiniteFeature { row: 1, col: 0 }) => {}
            other => panic!("expected NonFiniteFeature at (1, 0), got {other:?}"),
        }
    }

    #[test]
    fn duplicating_rows_and_halving_c_gives_the_same_solution() {
        // C * sum over doubled rows == (2C) * sum over original rows, so the
        // optima coincide.
        let features = matrix(&[&[0.1, 1.3], &[-0.7, 0.4], &[1.9, -0.2], &[-1.1, -0.9]]);
        let labels = [1.0, -1.0, 1.0, -1.0];
        let doubled = matrix(&[
            &[0.1, 1.3], &[-0.7, 0.4], &[1.9, -0.2], &[-1.1, -0.9],
            &[0.1, 1.3], &[-0.7, 0.4], &[1.9, -0.2], &[-1.1, -0.9],
        ]);
        let double_labels = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0];
        let a = train_binary(&features, &labels, &tight(1.0)).unwrap();
        let b = train_binary(&doubled, &double_labels, &tight(0.5)).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() <= 1e-4, "weights diverge: {x} vs {y}");
        }
        assert!((a.bias - b.bias).abs() <= 1e-4, "{} vs {}", a.bias, b.bias);
    }

    #[test]
    fn objective_trace_is_non_increasing() {
        let mut rng = SplitMix64::new(50);
        for trial in 0..10 {
            let n = 8 + rng.below(20) as usize;
            let rows: Vec<Vec<f64>> =
                (0..n).map(|_| vec![rng.range_f64(-2.0, 2.0), rng.range_f64(-2.0, 2.0)]).collect();
            let labels: Vec<f64> =
                (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
            let features = FeatureMatrix::from_rows(&rows).unwrap();
            let config = TrainConfig { c: 0.5, tol: 1e-8, max_iter: 5000, seed: trial };
            let sol = train_binary(&features, &labels, &config).unwrap();
            for pair in sol.objective_trace.windows(2) {
                assert!(
                    pair[1] <= pair[0] + 1e-12,
                    "trial {trial}: objective rose from {} to {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn same_seed_reproduces_the_solution_bit_for_bit() {
        let features = matrix(&[&[0.3, -1.0], &[1.2, 0.4], &[-0.8, 0.9], &[0.0, -1.7]]);
        let labels = [1.0, 1.0, -1.0, -1.0];
        let config = TrainConfig { seed: 77, ..TrainConfig::default() };
        let a = train_binary(&features, &labels, &config).unwrap();
        let b = train_binary(&features, &labels, &config).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.bias, b.bias);
        assert_eq!(a.objective_trace, b.objective_trace);
    }

    #[test]
    fn permuting_samples_changes_nothing_within_tolerance() {
        let rows: Vec<Vec<f64>> = vec![
            vec![1.0, 0.2], vec![0.8, -0.3], vec![-1.1, 0.5],
            vec![-0.9, -0.6], vec![1.3, 1.0], vec![-1.4, 0.1],
        ];
        let labels = [1.0, 1.0, -1.0, -1.0, 1.0, -1.0];
        let permutation = [3usize, 0, 5, 2, 4, 1];
        let permuted_rows: Vec<Vec<f64>> =
            permutation.iter().map(|&i| rows[i].clone()).collect();
        let permuted_labels: Vec<f64> = permutation.iter().map(|&i| labels[i]).collect();
        let config = tight(0.5);
        let a = train_binary(&FeatureMatrix::from_rows(&rows).unwrap(), &labels, &config).unwrap();
        let b = train_binary(
            &FeatureMatrix::from_rows(&permuted_rows).unwrap(),
            &permuted_labels,
            &config,
        )
        .unwrap();
        // Both runs certify a 1e-10 gap on a strongly convex objective, so
        // the iterates must nearly coincide.
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() <= 1e-3, "weights diverge: {x} vs {y}");
        }
        assert!((a.bias - b.bias).abs() <= 1e-3);
    }

    #[test]
    fn exhausted_budget_reports_non_convergence_with_best_iterate() {
        let features = matrix(&[&[0.4, 1.0], &[-0.2, 0.3], &[0.9, -1.2], &[-1.0, -0.4]]);
        let labels = [1.0, -1.0, 1.0, -1.0];
        let config = TrainConfig { c: 10.0, tol: 1e-14, max_iter: 2, seed: 0 };
        let sol = train_binary(&features, &labels, &config).unwrap();
        assert!(!sol.converged, "two epochs cannot certify 1e-14");
        assert_eq!(sol.epochs, 2);
        assert!(sol.primal_objective.is_finite());
        assert_eq!(sol.objective_trace.len(), 2);
    }

    #[test]
    fn scaling_features_and_rebalancing_c_preserves_predictions() {
        // Antisymmetric data keeps the optimal bias at zero, where scaling
        // features by k and C by 1/k^2 rescales the problem exactly.
        let rows: Vec<Vec<f64>> = vec![
            vec![1.0, 0.3], vec![0.7, 0.9], vec![1.2, -0.4],
            vec![-1.0, -0.3], vec![-0.7, -0.9], vec![-1.2, 0.4],
        ];
        let labels_f = [1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
        let k = 10.0;
        let scaled_rows: Vec<Vec<f64>> =
            rows.iter().map(|r| r.iter().map(|v| v * k).collect()).collect();
        let base = train_binary(
            &FeatureMatrix::from_rows(&rows).unwrap(),
            &labels_f,
            &tight(0.5),
        )
        .unwrap();
        let scaled = train_binary(
            &FeatureMatrix::from_rows(&scaled_rows).unwrap(),
            &labels_f,
            &tight(0.5 / (k * k)),
        )
        .unwrap();
        for (row, scaled_row) in rows.iter().zip(&scaled_rows) {
            let score_a = dot(&base.weights, row) + base.bias;
            let score_b = dot(&scaled.weights, scaled_row) + scaled.bias;
            assert_eq!(
                score_a > 0.0,
                score_b > 0.0,
                "prediction flipped for {row:?}: {score_a} vs {score_b}"
            );
        }
    }

    // ---- multiclass ----

    fn blobs(centers: &[(f64, f64)], per_class: usize, spread: f64, seed: u64) -> (FeatureMatrix, Vec<u16>) {
        let mut rng = SplitMix64::new(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (class, &(cx, cy)) in centers.iter().enumerate() {
            for _ in 0..per_class {
                rows.push(vec![cx + spread * rng.next_normal(), cy + spread * rng.next_normal()]);
                labels.push(class as u16);
            }
        }
        (FeatureMatrix::from_rows(&rows).unwrap(), labels)
    }

    #[test]
    fn three_separated_blobs_train_to_perfect_accuracy() {
        // Inter-center distance 20 with sigma 1: at least 10 sigma apart.
        let (features, labels) = blobs(&[(0.0, 0.0), (20.0, 0.0), (0.0, 20.0)], 50, 1.0, 9);
        let config = TrainConfig { c: 1000.0, tol: 1e-6, max_iter: 50_000, seed: 2 };
        let model = train_multiclass(&features, &labels, &config, &HogConfig::default()).unwrap();
        assert_eq!(model.classes, vec![0, 1, 2]);
        assert_eq!(accuracy(&model, &features, &labels).unwrap(), 1.0);
    }

    #[test]
    fn separable_data_with_large_c_meets_the_margin_bound() {
        let (features, labels) = blobs(&[(0.0, 0.0), (20.0, 0.0)], 30, 1.0, 3);
        let binary_labels: Vec<f64> =
            labels.iter().map(|&l| if l == 0 { 1.0 } else { -1.0 }).collect();
        let sol = train_binary(&features, &binary_labels, &tight(1000.0)).unwrap();
        for i in 0..features.rows() {
            let margin =
                binary_labels[i] * (dot(&sol.weights, features.row(i)) + sol.bias);
            assert!(margin >= 1.0 - 1e-3, "row {i} margin {margin}");
        }
    }

    #[test]
    fn two_class_input_gives_two_weight_vectors() {
        let (features, labels) = blobs(&[(0.0, 0.0), (8.0, 8.0)], 10, 0.5, 4);
        let model =
            train_multiclass(&features, &labels, &TrainConfig::default(), &HogConfig::default())
                .unwrap();
        assert_eq!(model.classes, vec![0, 1]);
        assert_eq!(model.weights.len(), 2);
        assert_eq!(model.biases.len(), 2);
        assert_eq!(model.dim(), 2);
    }

    #[test]
    fn multiclass_single_class_is_rejected() {
        let features = matrix(&[&[0.0, 0.0], &[1.0, 1.0]]);
        assert!(matches!(
            train_multiclass(&features, &[3, 3], &TrainConfig::default(), &HogConfig::default()),
            Err(SvmError::SingleClassInput)
        ));
    }

    // ---- decision / predict ----

    fn toy_model(classes: Vec<u16>, weights: Vec<Vec<f64>>, biases: Vec<f64>) -> LinearSvmModel {
        LinearSvmModel {
            classes,
            weights,
            biases,
            hog_config: HogConfig::default(),
            train_config: TrainConfig::default(),
            flags: 0,
        }
    }

    #[test]
    fn decision_is_the_exact_dot_product() {
        let model = toy_model(vec![0], vec![vec![1.0, 0.0]], vec![0.0]);
        assert_eq!(model.decision(&[3.0, 7.0]).unwrap().scores, vec![3.0]);
    }

    #[test]
    fn decision_on_zero_input_returns_the_biases() {
        let model = toy_model(
            vec![0, 1, 2],
            vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.0, 0.0]],
            vec![0.25, -0.75, 4.0],
        );
        assert_eq!(model.decision(&[0.0, 0.0]).unwrap().scores, vec![0.25, -0.75, 4.0]);
        assert_eq!(model.decision(&[0.0, 0.0]).unwrap().scores.len(), 3);
    }

    #[test]
    fn predict_takes_the_argmax() {
        let model = toy_model(
            vec![0, 1, 2],
            vec![vec![0.0], vec![0.0], vec![0.0]],
            vec![0.2, 0.9, -1.0],
        );
        assert_eq!(model.predict(&[0.0]).unwrap(), 1);
    }

    #[test]
    fn predict_breaks_ties_toward_the_lowest_class_id() {
        let model = toy_model(
            vec![0, 1, 2],
            vec![vec![0.0], vec![0.0], vec![0.0]],
            vec![0.5, 0.5, 0.1],
        );
        assert_eq!(model.predict(&[123.0]).unwrap(), 0);
    }

    #[test]
    fn predict_agrees_with_decision_argmax() {
        let mut rng = SplitMix64::new(12);
        let model = toy_model(
            vec![2, 5, 9],
            vec![
                vec![rng.next_normal(), rng.next_normal()],
                vec![rng.next_normal(), rng.next_normal()],
                vec![rng.next_normal(), rng.next_normal()],
            ],
            vec![rng.next_normal(), rng.next_normal(), rng.next_normal()],
        );
        for _ in 0..100 {
            let x = [rng.range_f64(-3.0, 3.0), rng.range_f64(-3.0, 3.0)];
            let scores = model.decision(&x).unwrap().scores;
            let mut best = 0;
            for (i, &s) in scores.iter().enumerate() {
                if s > scores[best] {
                    best = i;
                }
            }
            assert_eq!(model.predict(&x).unwrap(), model.classes[best]);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let model = toy_model(vec![0, 1], vec![vec![1.0, 2.0], vec![0.0, 1.0]], vec![0.0, 0.0]);
        assert!(matches!(
            model.decision(&[1.0]),
            Err(SvmError::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(model.predict(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn concurrent_prediction_matches_serial() {
        let (features, labels) = blobs(&[(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)], 20, 1.0, 6);
        let model = std::sync::Arc::new(
            train_multiclass(&features, &labels, &TrainConfig::default(), &HogConfig::default())
                .unwrap(),
        );
        let serial: Vec<u16> =
            (0..features.rows()).map(|i| model.predict(features.row(i)).unwrap()).collect();
        let features = std::sync::Arc::new(features);
        let mut handles = Vec::new();
        for _ in 0..4 {
            let model = model.clone();
            let features = features.clone();
            handles.push(std::thread::spawn(move || {
                (0..features.rows())
                    .map(|i| model.predict(features.row(i)).unwrap())
                    .collect::<Vec<u16>>()
            }));
        }
        for handle in handles {
            assert_eq!(handle.join().unwrap(), serial);
        }
    }

    // ---- grid search ----

    #[test]
    fn grid_search_reports_every_candidate_and_prefers_small_c_on_ties() {
        let (train_f, train_l) = blobs(&[(0.0, 0.0), (10.0, 10.0)], 20, 0.8, 30);
        let (val_f, val_l) = blobs(&[(0.0, 0.0), (10.0, 10.0)], 10, 0.8, 31);
        let out = grid_search_c(
            &train_f,
            &train_l,
            &val_f,
            &val_l,
            &[1.0, 0.01, 0.1],
            &TrainConfig::default(),
            &HogConfig::default(),
        )
        .unwrap();
        assert_eq!(out.accuracies.len(), 3);
        assert!(out.accuracies.windows(2).all(|w| w[0].0 < w[1].0), "candidates must be sorted");
        // The blobs are trivially separable: every C reaches accuracy 1, so
        // the tie rule must hand back the smallest.
        assert!(out.accuracies.iter().all(|&(_, a)| a == 1.0));
        assert_eq!(out.best_c, 0.01);
    }

    #[test]
    fn grid_search_rejects_empty_or_bad_grids() {
        let (f, l) = blobs(&[(0.0, 0.0), (8.0, 8.0)], 5, 0.5, 32);
        assert!(matches!(
            grid_search_c(&f, &l, &f, &l, &[], &TrainConfig::default(), &HogConfig::default()),
            Err(SvmError::InvalidConfig(_))
        ));
        assert!(matches!(
            grid_search_c(&f, &l, &f, &l, &[0.1, -1.0], &TrainConfig::default(), &HogConfig::default()),
            Err(SvmError::InvalidConfig(_))
        ));
    }

    // ---- model files ----

    fn trained_model() -> LinearSvmModel {
        let (features, labels) = blobs(&[(0.0, 0.0), (6.0, 0.0), (0.0, 6.0)], 15, 0.6, 44);
        train_multiclass(&features, &labels, &TrainConfig::default(), &HogConfig::default())
            .unwrap()
    }

    #[test]
    fn model_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.msvm");
        let mut model = trained_model();
        model.flags |= 0x0004; // pipeline metadata bit must survive
        save_model(&path, &model).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, model);

        // Serialization itself is deterministic.
        let again = dir.path().join("model2.msvm");
        save_model(&again, &model).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    }

    #[test]
    fn truncated_model_fails_the_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.msvm");
        save_model(&path, &trained_model()).unwrap();
        let bytes = fs::read(&path).unwrap();
        for keep in [bytes.len() - 1, bytes.len() - 9, 60, 8] {
            fs::write(&path, &bytes[..keep]).unwrap();
            assert!(
                matches!(load_model(&path), Err(SvmError::ChecksumMismatch)),
                "{keep}-byte prefix should fail the checksum"
            );
        }
    }

    #[test]
    fn corrupt_byte_fails_the_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.msvm");
        save_model(&path, &trained_model()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x10;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_model(&path), Err(SvmError::ChecksumMismatch)));
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.msvm");
        save_model(&path, &trained_model()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes[..4].copy_from_slice(b"XSVM");
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_model(&path), Err(SvmError::BadMagic)));
    }

    #[test]
    fn future_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.msvm");
        save_model(&path, &trained_model()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        // Bump the version and re-seal the checksum so only the version
        // check can fire.
        bytes[4..6].copy_from_slice(&2u16.to_le_bytes());
        let body_len = bytes.len() - 4;
        let crc = crc32::checksum(&bytes[..body_len]);
        bytes[body_len..].copy_from_slice(&crc.to_le_bytes());
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_model(&path), Err(SvmError::VersionUnsupported(2))));
    }

    #[test]
    fn missing_model_file_is_an_io_error() {
        assert!(matches!(
            load_model(Path::new("/nonexistent/model.msvm")),
            Err(SvmError::Io(_))
        ));
    }
}
