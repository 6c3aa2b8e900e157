//! A small dense feed-forward regressor that maps rasterized views directly
//! to normalized 6DoF pose vectors, with manual backpropagation.
//!
//! The network is deliberately desk-scale: input side² → 256 → 64 → 6 by
//! default, max(0,·) on hidden layers, linear output, mean-squared error on
//! per-dimension standardized labels. Labels are standardized by the
//! training-set mean and standard deviation of each of the six dimensions
//! (compensating for the scale difference between radians and model units),
//! and the same normalizer is applied in reverse at inference, so it is
//! serialized with the model.
//!
//! Training is plain mini-batch gradient descent with momentum and a fixed,
//! seeded shuffle; identical (dataset, hyperparameters, seed) reproduce the
//! model bitwise.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::face_model::GenericModel;
use crate::geometry::{build_projection_matrix, CameraIntrinsics, Pose6DoF};

/// Per-dimension standardization of 6DoF labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelNormalizer {
    pub mean: [f64; 6],
    pub std: [f64; 6],
    /// Dimensions whose stdev hit the 1e-9 floor (constant in the data).
    pub degenerate: [bool; 6],
}

const STD_FLOOR: f64 = 1e-9;

/// Fit componentwise mean and population standard deviation.
pub fn fit_normalizer(labels: &[Pose6DoF]) -> Result<LabelNormalizer> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("no labels to normalize".to_string()));
    }
    let n = labels.len() as f64;
    let mut mean = [0.0; 6];
    for pose in labels {
        let v = pose.to_array();
        for d in 0..6 {
            mean[d] += v[d];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = [0.0; 6];
    for pose in labels {
        let v = pose.to_array();
        for d in 0..6 {
            let diff = v[d] - mean[d];
            var[d] += diff * diff;
        }
    }
    let mut std = [0.0; 6];
    let mut degenerate = [false; 6];
    for d in 0..6 {
        let s = (var[d] / n).sqrt();
        if s < STD_FLOOR {
            std[d] = STD_FLOOR;
            degenerate[d] = true;
        } else {
            std[d] = s;
        }
    }
    Ok(LabelNormalizer {
        mean,
        std,
        degenerate,
    })
}

impl LabelNormalizer {
    pub fn normalize(&self, pose: &Pose6DoF) -> [f64; 6] {
        let v = pose.to_array();
        std::array::from_fn(|d| (v[d] - self.mean[d]) / self.std[d])
    }

    pub fn denormalize(&self, v: &[f64; 6]) -> Result<Pose6DoF> {
        let raw: [f64; 6] = std::array::from_fn(|d| v[d] * self.std[d] + self.mean[d]);
        Pose6DoF::from_array(raw)
    }
}

/// Square grid of intensities in [0, 1], row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    pub side: usize,
    pub data: Vec<f64>,
}

impl Raster {
    pub fn new(side: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != side * side {
            return Err(Error::invalid(format!(
                "raster data length {} does not match side {side}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::invalid("raster intensities must lie in [0, 1]"));
        }
        Ok(Raster { side, data })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.side + x]
    }

    /// 8-bit binary PGM (P5). Intensities quantize to 0..=255.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.side, self.side).into_bytes();
        out.extend(
            self.data
                .iter()
                .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
        );
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<Self> {
        let header_err = || Error::invalid("not a binary PGM (P5) raster");
        // Header: magic, width, height, maxval, single whitespace, then data.
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 && pos < bytes.len() {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| header_err())?);
        }
        if fields.len() != 4 || fields[0] != "P5" {
            return Err(header_err());
        }
        let width: usize = fields[1].parse().map_err(|_| header_err())?;
        let height: usize = fields[2].parse().map_err(|_| header_err())?;
        let maxval: f64 = fields[3].parse().map_err(|_| header_err())?;
        if width != height {
            return Err(Error::invalid("raster PGM must be square"));
        }
        pos += 1; // single whitespace after maxval
        let data = &bytes[pos..];
        if data.len() < width * height {
            return Err(Error::invalid("PGM data truncated"));
        }
        Raster::new(
            width,
            data[..width * height]
                .iter()
                .map(|&b| b as f64 / maxval)
                .collect(),
        )
    }

    /// Lossless float CSV: one row of comma-separated intensities per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.data.chunks(self.side) {
            let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut data = Vec::new();
        let mut rows = 0;
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            rows += 1;
            for field in line.split(',') {
                data.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid("bad float in raster CSV"))?,
                );
            }
        }
        if rows * rows != data.len() {
            return Err(Error::invalid("raster CSV is not square"));
        }
        Raster::new(rows, data)
    }

    /// Horizontal mirror (x ↦ side−1−x), for mirror-consistency checks.
    pub fn mirrored(&self) -> Raster {
        let mut data = vec![0.0; self.data.len()];
        for y in 0..self.side {
            for x in 0..self.side {
                data[y * self.side + x] = self.get(self.side - 1 - x, y);
            }
        }
        Raster {
            side: self.side,
            data,
        }
    }
}

/// Splat footprint: σ in pixels as a fraction of the raster side.
const SPLAT_SIGMA_FRAC: f64 = 1.0 / 32.0;

/// Render a deterministic synthetic view of the model at a pose: each
/// projected landmark splats a small Gaussian, shaded by camera-frame depth
/// (nearer points brighter), accumulated and clamped to [0, 1].
pub fn rasterize(
    pose: &Pose6DoF,
    model: &GenericModel,
    cam: &CameraIntrinsics,
    side: usize,
) -> Result<Raster> {
    let m = build_projection_matrix(pose, cam);
    let pts = model.landmarks.points();
    let mut uv = Vec::with_capacity(pts.len());
    let mut depth = Vec::with_capacity(pts.len());
    for (index, p) in pts.iter().enumerate() {
        let q = m * p.push(1.0);
        if q.z <= 0.0 {
            return Err(Error::ProjectionDegeneracy { index, depth: q.z });
        }
        uv.push((q.x / q.z, q.y / q.z));
        depth.push(q.z);
    }
    let z_min = depth.iter().cloned().fold(f64::INFINITY, f64::min);
    let z_max = depth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z_range = z_max - z_min;

    let sigma = SPLAT_SIGMA_FRAC * side as f64;
    let radius = 3.0 * sigma;
    let inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);
    let mut data = vec![0.0f64; side * side];
    for i in 0..pts.len() {
        let (u, v) = uv[i];
        let brightness = if z_range < 1e-12 {
            1.0
        } else {
            0.3 + 0.7 * (z_max - depth[i]) / z_range
        };
        let x0 = ((u - radius).floor().max(0.0)) as usize;
        let x1 = ((u + radius).ceil().min(side as f64 - 1.0)).max(0.0) as usize;
        let y0 = ((v - radius).floor().max(0.0)) as usize;
        let y1 = ((v + radius).ceil().min(side as f64 - 1.0)).max(0.0) as usize;
        if u + radius < 0.0 || v + radius < 0.0 {
            continue;
        }
        // Pixels sample at integer coordinates, matching the crop
        // convention with the principal point at (side−1)/2.
        for y in y0..=y1 {
            let dy = y as f64 - v;
            for x in x0..=x1 {
                let dx = x as f64 - u;
                let d2 = dx * dx + dy * dy;
                data[y * side + x] += brightness * (-d2 * inv_two_sigma2).exp();
            }
        }
    }
    for v in &mut data {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(Raster { side, data })
}

/// One dense layer: `y = W·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// out × in, row-major on the wire.
    #[serde(with = "dmatrix_rows")]
    pub weights: DMatrix<f64>,
    pub bias: Vec<f64>,
}

mod dmatrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wire {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        Wire {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let w = Wire::deserialize(d)?;
        if w.data.len() != w.rows * w.cols {
            return Err(serde::de::Error::custom("matrix size mismatch"));
        }
        Ok(DMatrix::from_row_slice(w.rows, w.cols, &w.data))
    }
}

/// Training hyperparameters. Defaults: batch 64, step 1e-2 with momentum
/// 0.9, halved every 20 epochs, 100 epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub epochs: usize,
    /// Halve the learning rate every this many epochs; `None` keeps it
    /// constant.
    pub lr_halve_every: Option<usize>,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            hidden: vec![256, 64],
            batch_size: 64,
            learning_rate: 1e-2,
            momentum: 0.9,
            epochs: 100,
            lr_halve_every: Some(20),
        }
    }
}

/// The trained network: layer parameters plus the architecture and
/// hyperparameter record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorModel {
    pub input_side: usize,
    pub layers: Vec<Layer>,
    pub hyperparams: Hyperparams,
}

impl RegressorModel {
    /// Seeded initialization: weights uniform in ±sqrt(6/(fan_in+fan_out)),
    /// biases zero.
    pub fn init(input_side: usize, hyper: &Hyperparams, rng: &mut ChaCha8Rng) -> Self {
        let mut dims = vec![input_side * input_side];
        dims.extend(&hyper.hidden);
        dims.push(6);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights =
                    DMatrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-bound..bound));
                Layer {
                    weights,
                    bias: vec![0.0; fan_out],
                }
            })
            .collect();
        RegressorModel {
            input_side,
            layers,
            hyperparams: hyper.clone(),
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }
}

/// Forward pass: normalized 6-vector prediction for one raster.
pub fn forward(model: &RegressorModel, raster: &Raster) -> Result<[f64; 6]> {
    if raster.side != model.input_side {
        return Err(Error::invalid(format!(
            "raster side {} does not match model input {}",
            raster.side, model.input_side
        )));
    }
    let mut x = DVector::from_column_slice(&raster.data);
    for (i, layer) in model.layers.iter().enumerate() {
        let mut y = &layer.weights * x + DVector::from_column_slice(&layer.bias);
        if i + 1 < model.layers.len() {
            y.apply(|v| *v = v.max(0.0));
        }
        x = y;
    }
    Ok(std::array::from_fn(|d| x[d]))
}

/// Denormalize a forward pass into a pose.
pub fn predict_pose(
    model: &RegressorModel,
    normalizer: &LabelNormalizer,
    raster: &Raster,
) -> Result<Pose6DoF> {
    let out = forward(model, raster)?;
    normalizer.denormalize(&out)
}

/// Batched forward keeping pre-activations for backprop. Columns are
/// samples.
struct ForwardTrace {
    /// activations[0] is the input; activations[i+1] the output of layer i
    /// after its nonlinearity.
    activations: Vec<DMatrix<f64>>,
}

fn forward_batch(model: &RegressorModel, x: DMatrix<f64>) -> ForwardTrace {
    let mut activations = vec![x];
    let last = model.layers.len() - 1;
    for (i, layer) in model.layers.iter().enumerate() {
        let prev = activations.last().unwrap();
        let mut y = &layer.weights * prev;
        for mut col in y.column_iter_mut() {
            for (r, b) in layer.bias.iter().enumerate() {
                col[r] += b;
            }
        }
        if i < last {
            y.apply(|v| *v = v.max(0.0));
        }
        activations.push(y);
    }
    ForwardTrace { activations }
}

/// Mean squared error over all outputs of a batch: mean over B·6 terms of
/// (ŷ − y)².
pub fn batch_loss(model: &RegressorModel, inputs: &DMatrix<f64>, targets: &DMatrix<f64>) -> f64 {
    let trace = forward_batch(model, inputs.clone());
    let diff = trace.activations.last().unwrap() - targets;
    diff.norm_squared() / diff.len() as f64
}

/// Analytic gradients of [`batch_loss`] for every layer, via
/// backpropagation. Returned in layer order as (dW, db).
pub fn batch_gradients(
    model: &RegressorModel,
    inputs: &DMatrix<f64>,
    targets: &DMatrix<f64>,
) -> Vec<(DMatrix<f64>, DVector<f64>)> {
    let trace = forward_batch(model, inputs.clone());
    let n_layers = model.layers.len();
    let output = trace.activations.last().unwrap();
    let scale = 2.0 / output.len() as f64;
    // δ at the linear output.
    let mut delta = (output - targets) * scale;

    let mut grads: Vec<(DMatrix<f64>, DVector<f64>)> = Vec::with_capacity(n_layers);
    for i in (0..n_layers).rev() {
        let input_act = &trace.activations[i];
        let dw = &delta * input_act.transpose();
        let db = DVector::from_fn(delta.nrows(), |r, _| delta.row(r).sum());
        grads.push((dw, db));
        if i > 0 {
            let mut upstream = model.layers[i].weights.transpose() * &delta;
            // ReLU mask from the stored post-activation of layer i-1.
            let act = &trace.activations[i];
            for c in 0..upstream.ncols() {
                for r in 0..upstream.nrows() {
                    if act[(r, c)] <= 0.0 {
                        upstream[(r, c)] = 0.0;
                    }
                }
            }
            delta = upstream;
        }
    }
    grads.reverse();
    grads
}

/// Per-epoch record of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Full-dataset loss after each epoch.
    pub epoch_losses: Vec<f64>,
    /// Epochs whose loss exceeded the previous epoch's.
    pub non_monotone_epochs: Vec<usize>,
}

/// A trained model bundled with the label normalizer it was fitted with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedRegressor {
    pub model: RegressorModel,
    pub normalizer: LabelNormalizer,
    pub report: TrainingReport,
}

/// Train on (raster, pose) pairs with mini-batch gradient descent plus
/// momentum. The normalizer is fitted on the dataset labels; loss is MSE on
/// normalized labels. A non-finite loss aborts with the offending epoch;
/// epochs where the full-dataset loss increased are recorded in the report.
pub fn train(
    dataset: &[(Raster, Pose6DoF)],
    hyper: &Hyperparams,
    seed: u64,
) -> Result<TrainedRegressor> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("empty training dataset".to_string()));
    }
    let side = dataset[0].0.side;
    if dataset.iter().any(|(r, _)| r.side != side) {
        return Err(Error::invalid("rasters have mixed sides"));
    }
    if hyper.batch_size == 0 || hyper.epochs == 0 {
        return Err(Error::invalid("batch size and epochs must be positive"));
    }
    let labels: Vec<Pose6DoF> = dataset.iter().map(|(_, p)| *p).collect();
    let normalizer = fit_normalizer(&labels)?;

    let n = dataset.len();
    let input_dim = side * side;
    let inputs_full = DMatrix::from_fn(input_dim, n, |r, c| dataset[c].0.data[r]);
    let targets_full = DMatrix::from_fn(6, n, |r, c| normalizer.normalize(&dataset[c].1)[r]);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = RegressorModel::init(side, hyper, &mut rng);
    let mut velocity: Vec<(DMatrix<f64>, DVector<f64>)> = model
        .layers
        .iter()
        .map(|l| {
            (
                DMatrix::zeros(l.weights.nrows(), l.weights.ncols()),
                DVector::zeros(l.bias.len()),
            )
        })
        .collect();

    let mut indices: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(hyper.epochs);
    let mut non_monotone = Vec::new();

    for epoch in 0..hyper.epochs {
        let lr = match hyper.lr_halve_every {
            Some(k) if k > 0 => hyper.learning_rate * 0.5f64.powi((epoch / k) as i32),
            _ => hyper.learning_rate,
        };
        // Fisher-Yates shuffle from the seeded stream.
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            indices.swap(i, j);
        }
        for batch in indices.chunks(hyper.batch_size) {
            let bx = DMatrix::from_fn(input_dim, batch.len(), |r, c| inputs_full[(r, batch[c])]);
            let bt = DMatrix::from_fn(6, batch.len(), |r, c| targets_full[(r, batch[c])]);
            let grads = batch_gradients(&model, &bx, &bt);
            for (layer_idx, (dw, db)) in grads.iter().enumerate() {
                let (vw, vb) = &mut velocity[layer_idx];
                *vw = &*vw * hyper.momentum - dw * lr;
                *vb = &*vb * hyper.momentum - db * lr;
                model.layers[layer_idx].weights += &*vw;
                for (b, dv) in model.layers[layer_idx].bias.iter_mut().zip(vb.iter()) {
                    *b += dv;
                }
            }
        }
        let loss = batch_loss(&model, &inputs_full, &targets_full);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        if let Some(prev) = epoch_losses.last() {
            if loss > *prev {
                non_monotone.push(epoch);
            }
        }
        epoch_losses.push(loss);
    }

    Ok(TrainedRegressor {
        model,
        normalizer,
        report: TrainingReport {
            epoch_losses,
            non_monotone_epochs: non_monotone,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RotationVector;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;

    fn pose(v: [f64; 6]) -> Pose6DoF {
        Pose6DoF::from_array(v).unwrap()
    }

    #[test]
    fn normalizer_round_trip() {
        let labels: Vec<Pose6DoF> = (0..20)
            .map(|i| {
                let t = i as f64 / 10.0;
                pose([0.1 * t, -0.2 * t, 0.3 * t, t, 2.0 * t, 3.0 + t])
            })
            .collect();
        let norm = fit_normalizer(&labels).unwrap();
        for label in &labels {
            let back = norm.denormalize(&norm.normalize(label)).unwrap();
            for (a, b) in back.to_array().iter().zip(label.to_array()) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn identical_labels_floor_stdev() {
        let h = pose([0.1, 0.2, 0.3, 1.0, 2.0, 3.0]);
        let norm = fit_normalizer(&[h, h]).unwrap();
        assert_eq!(norm.mean, h.to_array());
        assert!(norm.degenerate.iter().all(|&d| d));
        assert!(norm.std.iter().all(|&s| s == STD_FLOOR));
    }

    #[test]
    fn symmetric_labels_give_zero_mean() {
        let v = [0.2, -0.4, 0.1, 1.5, -2.0, 0.7];
        let neg: [f64; 6] = std::array::from_fn(|i| -v[i]);
        let norm = fit_normalizer(&[pose(v), pose(neg)]).unwrap();
        for (d, &expected) in v.iter().enumerate() {
            assert_abs_diff_eq!(norm.mean[d], 0.0, epsilon = 1e-15);
            assert_abs_diff_eq!(norm.std[d], expected.abs(), epsilon = 1e-12);
        }
    }

    #[test]
    fn standardization_of_sampled_labels() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels: Vec<Pose6DoF> = (0..10_000)
            .map(|_| {
                pose([
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.5..0.5),
                    rng.random_range(-0.2..0.2),
                    rng.random_range(-0.2..0.2),
                    rng.random_range(1.5..3.0),
                ])
            })
            .collect();
        let norm = fit_normalizer(&labels).unwrap();
        let normalized: Vec<[f64; 6]> = labels.iter().map(|l| norm.normalize(l)).collect();
        for d in 0..6 {
            let mean: f64 = normalized.iter().map(|v| v[d]).sum::<f64>() / normalized.len() as f64;
            let var: f64 = normalized.iter().map(|v| v[d] * v[d]).sum::<f64>()
                / normalized.len() as f64
                - mean * mean;
            assert!(mean.abs() < 1e-10, "dim {d} mean {mean}");
            assert!(
                (var.sqrt() - 1.0).abs() < 1e-10,
                "dim {d} std {}",
                var.sqrt()
            );
        }
    }

    fn working_cam(side: usize) -> CameraIntrinsics {
        CameraIntrinsics::for_crop(side as f64).unwrap()
    }

    #[test]
    fn rasterize_is_deterministic() {
        let model = GenericModel::synthetic();
        let p = Pose6DoF::identity_at(2.2);
        let a = rasterize(&p, &model, &working_cam(32), 32).unwrap();
        let b = rasterize(&p, &model, &working_cam(32), 32).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn frontal_raster_is_symmetric() {
        let model = GenericModel::synthetic();
        let p = Pose6DoF::identity_at(2.2);
        let raster = rasterize(&p, &model, &working_cam(32), 32).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let a = raster.get(x, y);
                let b = raster.get(31 - x, y);
                assert!((a - b).abs() < 1e-9, "asymmetry at ({x},{y}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn opposite_yaws_mirror_each_other() {
        let model = GenericModel::synthetic();
        let make = |yaw_deg: f64| {
            let p = Pose6DoF::new(
                RotationVector::new(0.0, yaw_deg.to_radians(), 0.0).unwrap(),
                Vector3::new(0.0, 0.0, 2.2),
            )
            .unwrap();
            rasterize(&p, &model, &working_cam(32), 32).unwrap()
        };
        let pos = make(20.0);
        let neg = make(-20.0);
        let neg_mirrored = neg.mirrored();
        for (a, b) in pos.data.iter().zip(&neg_mirrored.data) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn rasterize_rejects_points_behind_camera() {
        let model = GenericModel::synthetic();
        let behind = Pose6DoF::identity_at(-1.0);
        match rasterize(&behind, &model, &working_cam(16), 16) {
            Err(Error::ProjectionDegeneracy { .. }) => {}
            other => panic!("expected ProjectionDegeneracy, got {other:?}"),
        }
    }

    #[test]
    fn runaway_learning_rate_reports_divergence() {
        let data = tiny_dataset(8, 8, 51);
        let hyper = Hyperparams {
            learning_rate: 1e9,
            ..tiny_hyper()
        };
        match train(&data, &hyper, 1) {
            Err(Error::Divergence { .. }) => {}
            other => panic!("expected Divergence, got {other:?}"),
        }
    }

    #[test]
    fn pgm_round_trip_quantizes() {
        let model = GenericModel::synthetic();
        let p = Pose6DoF::identity_at(2.2);
        let raster = rasterize(&p, &model, &working_cam(32), 32).unwrap();
        let bytes = raster.to_pgm();
        let back = Raster::from_pgm(&bytes).unwrap();
        assert_eq!(back.side, 32);
        for (a, b) in raster.data.iter().zip(&back.data) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let model = GenericModel::synthetic();
        let p = Pose6DoF::identity_at(2.4);
        let raster = rasterize(&p, &model, &working_cam(16), 16).unwrap();
        let back = Raster::from_csv(&raster.to_csv()).unwrap();
        assert_eq!(raster, back);
    }

    fn tiny_hyper() -> Hyperparams {
        Hyperparams {
            hidden: vec![16, 8],
            batch_size: 3,
            learning_rate: 1e-2,
            momentum: 0.9,
            epochs: 10,
            lr_halve_every: Some(20),
        }
    }

    fn tiny_dataset(count: usize, side: usize, seed: u64) -> Vec<(Raster, Pose6DoF)> {
        use rand::Rng;
        let model = GenericModel::synthetic();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let p = Pose6DoF::new(
                    RotationVector::new(
                        rng.random_range(-0.3..0.3),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-0.3..0.3),
                    )
                    .unwrap(),
                    Vector3::new(
                        rng.random_range(-0.1..0.1),
                        rng.random_range(-0.1..0.1),
                        rng.random_range(2.0..2.6),
                    ),
                )
                .unwrap();
                let raster = rasterize(&p, &model, &working_cam(side), side).unwrap();
                (raster, p)
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        // Exhaustive central-difference check over every parameter of a
        // small network on a 3-sample batch. Inputs are bounded away from
        // zero so no true gradient sits below the finite-difference noise
        // floor (≈ ε·loss/h ≈ 1e-11).
        use rand::Rng;
        let hyper = tiny_hyper();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = RegressorModel::init(6, &hyper, &mut rng);
        let inputs = DMatrix::from_fn(36, 3, |_, _| rng.random_range(0.05..1.0));
        let targets = DMatrix::from_fn(6, 3, |_, _| rng.random_range(-1.5..1.5));

        let grads = batch_gradients(&model, &inputs, &targets);
        let h = 1e-5;
        let mut checked = 0usize;
        for (li, (dw, db)) in grads.iter().enumerate() {
            for r in 0..dw.nrows() {
                for c in 0..dw.ncols() {
                    let mut plus = model.clone();
                    let mut minus = model.clone();
                    plus.layers[li].weights[(r, c)] += h;
                    minus.layers[li].weights[(r, c)] -= h;
                    let numeric = (batch_loss(&plus, &inputs, &targets)
                        - batch_loss(&minus, &inputs, &targets))
                        / (2.0 * h);
                    let analytic = dw[(r, c)];
                    let rel =
                        (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                    assert!(
                        rel < 1e-4,
                        "layer {li} W({r},{c}): analytic {analytic}, numeric {numeric}"
                    );
                    checked += 1;
                }
            }
            for r in 0..db.len() {
                let mut plus = model.clone();
                let mut minus = model.clone();
                plus.layers[li].bias[r] += h;
                minus.layers[li].bias[r] -= h;
                let numeric = (batch_loss(&plus, &inputs, &targets)
                    - batch_loss(&minus, &inputs, &targets))
                    / (2.0 * h);
                let analytic = db[r];
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                assert!(rel < 1e-4, "layer {li} b({r})");
                checked += 1;
            }
        }
        assert_eq!(checked, model.parameter_count());
    }

    #[test]
    fn single_sample_memorization() {
        let data = tiny_dataset(1, 8, 11);
        let hyper = Hyperparams {
            hidden: vec![16, 8],
            batch_size: 1,
            learning_rate: 1e-2,
            momentum: 0.9,
            epochs: 10_000,
            lr_halve_every: None,
        };
        let trained = train(&data, &hyper, 3).unwrap();
        let final_loss = *trained.report.epoch_losses.last().unwrap();
        assert!(final_loss < 1e-6, "memorization loss {final_loss}");
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let data = tiny_dataset(12, 8, 21);
        let hyper = tiny_hyper();
        let a = train(&data, &hyper, 99).unwrap();
        let b = train(&data, &hyper, 99).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.report.epoch_losses, b.report.epoch_losses);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(matches!(
            train(&[], &tiny_hyper(), 1),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn model_serialization_round_trip() {
        let data = tiny_dataset(6, 8, 31);
        let trained = train(&data, &tiny_hyper(), 7).unwrap();
        let json = serde_json::to_string(&trained).unwrap();
        let back: TrainedRegressor = serde_json::from_str(&json).unwrap();
        assert_eq!(back.model, trained.model);
        assert_eq!(back.normalizer, trained.normalizer);
    }
}
