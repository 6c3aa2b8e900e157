//! Training-set augmentation: sampled in-plane transforms applied to boxes
//! and landmarks, horizontal mirroring, and pose labels recomputed from the
//! transformed landmarks.
//!
//! Sampled parameter distributions (relative to the detection box):
//!
//! | transform              | distribution          |
//! |------------------------|-----------------------|
//! | horizontal translation | U(−0.1, 0.1) × width  |
//! | vertical translation   | U(−0.1, 0.1) × height |
//! | scaling                | U(0.75, 1.25)         |
//! | rotation (degrees)     | 30 × N(0, 1)          |
//!
//! The landmark map is the similarity
//! `S = translate(center) · rotate(φ) · scale(s) · translate(−center) · translate(dx, dy)`
//! with `center` the box center, i.e. points are shifted by (dx, dy) first
//! and then rotated/scaled about the original box center. The box keeps its
//! aspect ratio, scales by `s`, and is re-centered on the transformed
//! center. Labels are solved with the box-derived intrinsics
//! ([`BoundingBox::intrinsics`]), which transform consistently with the
//! points, so an augmented sample of an exact projection remains an exact
//! projection of some pose.
//!
//! This module transforms geometry only; no image pixels are resampled.
//! Landmarks pushed out of frame keep their coordinates and their full
//! weight in label solving.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Pose6DoF};
use crate::landmarks::{LandmarkScheme, LandmarkSet2D, LandmarkSet3D};
use crate::pnp::synthesize_pose_label;

/// Axis-aligned face detection box in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, width: f64, height: f64) -> Result<Self> {
        if ![x, y, width, height].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("bounding box must be finite"));
        }
        if width <= 0.0 || height <= 0.0 {
            return Err(Error::invalid("bounding box dimensions must be positive"));
        }
        Ok(BoundingBox {
            x,
            y,
            width,
            height,
        })
    }

    pub fn center(&self) -> Vector2<f64> {
        Vector2::new(self.x + self.width / 2.0, self.y + self.height / 2.0)
    }

    /// Shared label-solving intrinsics for this box: focal = the side of the
    /// square crop that contains it (max dimension), principal point at the
    /// box center.
    pub fn intrinsics(&self) -> CameraIntrinsics {
        let c = self.center();
        CameraIntrinsics::new(self.width.max(self.height), c.x, c.y)
            .expect("valid box yields valid intrinsics")
    }
}

/// One sampled in-plane transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationParams {
    /// Horizontal translation, pixels.
    pub dx: f64,
    /// Vertical translation, pixels.
    pub dy: f64,
    /// Uniform scale factor.
    pub scale: f64,
    /// In-plane rotation, degrees.
    pub rotation: f64,
    pub mirrored: bool,
}

impl AugmentationParams {
    pub fn identity() -> Self {
        AugmentationParams {
            dx: 0.0,
            dy: 0.0,
            scale: 1.0,
            rotation: 0.0,
            mirrored: false,
        }
    }
}

/// An augmented training sample: the transform, the transformed geometry,
/// and the pose label recomputed from the transformed landmarks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AugmentedSample {
    pub params: AugmentationParams,
    pub transformed_box: BoundingBox,
    pub transformed_landmarks: LandmarkSet2D,
    pub pose_label: Pose6DoF,
}

/// Draw one parameter set. Sampling order is fixed (dx, dy, scale,
/// rotation, mirrored) so a seeded stream reproduces exactly; `mirrored`
/// is an independent fair coin.
pub fn sample_params(bbox: &BoundingBox, rng: &mut ChaCha8Rng) -> AugmentationParams {
    let dx = rng.random_range(-0.1..0.1) * bbox.width;
    let dy = rng.random_range(-0.1..0.1) * bbox.height;
    let scale = rng.random_range(0.75..1.25);
    let rotation = 30.0 * rng.sample::<f64, _>(StandardNormal);
    let mirrored = rng.random_bool(0.5);
    AugmentationParams {
        dx,
        dy,
        scale,
        rotation,
        mirrored,
    }
}

fn linear_part(params: &AugmentationParams) -> Matrix2<f64> {
    let phi = params.rotation.to_radians();
    let (s, c) = phi.sin_cos();
    Matrix2::new(c, -s, s, c) * params.scale
}

/// Apply the sampled similarity to a box and its landmarks. The `mirrored`
/// flag is ignored here; mirroring is a separate step.
pub fn apply_transform(
    params: &AugmentationParams,
    bbox: &BoundingBox,
    lm: &LandmarkSet2D,
) -> (BoundingBox, LandmarkSet2D) {
    let center = bbox.center();
    let lin = linear_part(params);
    let shift = Vector2::new(params.dx, params.dy);
    let mapped: Vec<Vector2<f64>> = lm
        .points()
        .iter()
        .map(|p| center + lin * (p + shift - center))
        .collect();
    let new_center = center + lin * shift;
    let new_box = BoundingBox {
        x: new_center.x - bbox.width * params.scale / 2.0,
        y: new_center.y - bbox.height * params.scale / 2.0,
        width: bbox.width * params.scale,
        height: bbox.height * params.scale,
    };
    let new_lm = lm.with_points(mapped).expect("same point count");
    (new_box, new_lm)
}

/// Horizontally mirror a landmark set inside an image of the given width:
/// x ↦ image_width − 1 − x, with indices permuted by the scheme's
/// left/right table so semantic roles stay correct.
pub fn mirror_sample(lm: &LandmarkSet2D, image_width: f64) -> Result<LandmarkSet2D> {
    let scheme = LandmarkScheme::builtin(lm.scheme())
        .ok_or_else(|| Error::SchemeWithoutPermutation(lm.scheme().to_string()))?;
    let mirror = scheme
        .mirror
        .ok_or_else(|| Error::SchemeWithoutPermutation(lm.scheme().to_string()))?;
    let points = lm.points();
    let mapped: Vec<Vector2<f64>> = (0..points.len())
        .map(|i| {
            let src = points[mirror[i]];
            Vector2::new(image_width - 1.0 - src.x, src.y)
        })
        .collect();
    // Visibility flags travel with their points through the permutation.
    let visibility = lm
        .visibility()
        .map(|vis| (0..vis.len()).map(|i| vis[mirror[i]]).collect());
    LandmarkSet2D::new(lm.scheme(), mapped, lm.roles().clone(), visibility)
}

/// Full streaming pipeline: sample parameters, transform box and landmarks,
/// optionally mirror, and recompute the 6DoF label from the transformed
/// landmarks under the box intrinsics.
pub fn make_augmented_sample(
    bbox: &BoundingBox,
    lm: &LandmarkSet2D,
    model: &LandmarkSet3D,
    rng: &mut ChaCha8Rng,
) -> Result<AugmentedSample> {
    let params = sample_params(bbox, rng);
    build_sample(&params, bbox, lm, model)
}

/// Deterministic single-sample construction for known parameters.
pub fn build_sample(
    params: &AugmentationParams,
    bbox: &BoundingBox,
    lm: &LandmarkSet2D,
    model: &LandmarkSet3D,
) -> Result<AugmentedSample> {
    let (new_box, transformed) = apply_transform(params, bbox, lm);
    let transformed = if params.mirrored {
        // Mirror about the transformed crop's principal axis: expressed via
        // the standard pixel mirror with effective width 2·center_x + 1.
        mirror_sample(&transformed, 2.0 * new_box.center().x + 1.0)?
    } else {
        transformed
    };
    let pose_label = synthesize_pose_label(&transformed, model, &new_box.intrinsics())?;
    Ok(AugmentedSample {
        params: *params,
        transformed_box: new_box,
        transformed_landmarks: transformed,
        pose_label,
    })
}

/// Dataset mode: `count` sampled transforms, each emitted twice — original
/// and mirrored — so the output holds `2·count` samples.
pub fn augment_dataset(
    bbox: &BoundingBox,
    lm: &LandmarkSet2D,
    model: &LandmarkSet3D,
    count: usize,
    seed: u64,
) -> Result<Vec<AugmentedSample>> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(2 * count);
    for _ in 0..count {
        let mut params = sample_params(bbox, &mut rng);
        params.mirrored = false;
        out.push(build_sample(&params, bbox, lm, model)?);
        params.mirrored = true;
        out.push(build_sample(&params, bbox, lm, model)?);
    }
    Ok(out)
}

/// Seed for worker `i` in parallel batch generation. Each worker must own an
/// independent stream; this is the splittable-seeding contract.
pub fn worker_seed(base_seed: u64, worker: u64) -> u64 {
    // splitmix64 over the combined value.
    let mut z = base_seed ^ worker.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
